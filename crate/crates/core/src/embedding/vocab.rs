use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Token ↔ index map with occurrence counts. Tokens are ordered by id so the
/// indexing is independent of corpus order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<NodeId>,
    counts: Vec<u64>,
    index: HashMap<NodeId, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, t: NodeId) -> Option<usize> {
        self.index.get(&t).copied()
    }

    pub fn token(&self, i: usize) -> NodeId {
        self.tokens[i]
    }

    pub fn tokens(&self) -> &[NodeId] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, t: NodeId) -> u64 {
        self.index_of(t).map_or(0, |i| self.counts[i])
    }

    /// Re-expresses sequences as vocabulary indices.
    pub fn encode<'a, I>(&self, seqs: I) -> Vec<Vec<u32>>
    where
        I: IntoIterator<Item = &'a [NodeId]>,
    {
        seqs.into_iter()
            .map(|s| s.iter().map(|t| self.index[t] as u32).collect())
            .collect()
    }
}

/// Indexes every distinct token. No minimum-count pruning: every walked node
/// must receive a vector.
pub fn build_vocabulary<'a, I>(seqs: I) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [NodeId]>,
{
    let mut freq: HashMap<NodeId, u64> = HashMap::new();
    for s in seqs {
        for &t in s {
            *freq.entry(t).or_default() += 1;
        }
    }
    if freq.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut pairs: Vec<_> = freq.into_iter().collect();
    pairs.sort_unstable_by_key(|&(t, _)| t);
    let index = pairs.iter().enumerate().map(|(i, &(t, _))| (t, i)).collect();
    let (tokens, counts) = pairs.into_iter().unzip();
    Ok(Vocabulary { tokens, counts, index })
}
