//! Random-walk corpora: uniform DeepWalk-style walks over the combined graph
//! and tagged "ego-walks" confined to a single ego-network.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, EgoNetwork, Graph, NodeId};
use crate::rng::{derive_rng, Stream};

/// How an ego's short walks are packaged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EgoWalkForm {
    /// One concatenated token stream per ego.
    #[default]
    Stream,
    /// Separate short walks sharing the ego tag; context windows never cross
    /// walk boundaries.
    Separate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Upper bound `l` on an ego-walk's total length. `None` selects
    /// `min(n - 1, 10 * |A_u ∪ {u}|)`.
    pub ego_walk_length_cap: Option<usize>,
    pub ego_walk_form: EgoWalkForm,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 40,
            ego_walk_length_cap: None,
            ego_walk_form: EgoWalkForm::Stream,
            seed: 0x5eed,
        }
    }
}

impl WalkConfig {
    /// Checks the config against a graph with `n` nodes.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.walks_per_node == 0 {
            return Err(Error::InvalidConfig("walks_per_node must be positive".into()));
        }
        if self.walk_length < 2 {
            return Err(Error::InvalidConfig("walk_length must be at least 2".into()));
        }
        if let Some(l) = self.ego_walk_length_cap {
            if l == 0 || (n > 1 && l >= n) {
                return Err(Error::InvalidConfig(format!(
                    "ego_walk_length_cap must lie in [1, n) with n = {n}, got {l}"
                )));
            }
        }
        Ok(())
    }

    /// Total token budget for an ego-walk over `members` nodes in a graph of
    /// order `n`. Never below 1 so a lone ego still yields `[u]`.
    pub fn ego_budget(&self, members: usize, n: usize) -> usize {
        let l = self
            .ego_walk_length_cap
            .unwrap_or_else(|| n.saturating_sub(1).min(10 * members));
        l.max(1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Walk {
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedWalk {
    pub ego: NodeId,
    /// A single segment in stream form; one per short walk in separate form.
    pub segments: Vec<Vec<NodeId>>,
}

impl TaggedWalk {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.segments.iter().flatten().copied()
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Global walk corpus; one walk per line on disk.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub walks: Vec<Walk>,
}

impl Corpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(|w| w.nodes.len()).sum()
    }

    pub fn sequences(&self) -> impl Iterator<Item = &[NodeId]> + '_ {
        self.walks.iter().map(|w| w.nodes.as_slice())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.token_count() * 6);
        for w in &self.walks {
            push_ids(&mut out, &w.nodes);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Corpus> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let mut walks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            walks.push(Walk { nodes: parse_ids(path, i + 1, line)? });
        }
        Ok(Corpus { walks })
    }
}

/// One tagged walk per ego.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EgoCorpus {
    pub walks: Vec<TaggedWalk>,
}

impl EgoCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(TaggedWalk::len).sum()
    }

    /// `<ego>\t<ids>` per segment.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.walks {
            for seg in &w.segments {
                let _ = write!(out, "{}\t", w.ego);
                push_ids(&mut out, seg);
                out.push('\n');
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(Error::io(path))
    }

    /// Consecutive lines sharing an ego tag become segments of one walk.
    pub fn load(path: &Path) -> Result<EgoCorpus> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let mut walks: Vec<TaggedWalk> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (tag, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `<ego>\\t<nodes>`"))?;
            let ego: NodeId = tag
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("invalid ego id `{tag}`")))?;
            let seg = parse_ids(path, i + 1, rest)?;
            match walks.last_mut() {
                Some(w) if w.ego == ego => w.segments.push(seg),
                _ => walks.push(TaggedWalk { ego, segments: vec![seg] }),
            }
        }
        Ok(EgoCorpus { walks })
    }
}

fn push_ids(out: &mut String, ids: &[NodeId]) {
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{id}");
    }
}

fn parse_ids(path: &Path, line: usize, text: &str) -> Result<Vec<NodeId>> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(path, line, format!("invalid node id `{t}`"))))
        .collect()
}

/// Uniform random walk of `length` nodes from `start`. Stops after the start
/// node when it has no neighbors.
pub fn random_walk<R: Rng + ?Sized>(
    g: &Graph,
    start: NodeId,
    length: usize,
    rng: &mut R,
) -> Result<Walk> {
    let mut cur = g.index_of(start).ok_or(Error::UnknownNode(start))?;
    let mut nodes = Vec::with_capacity(length);
    nodes.push(start);
    while nodes.len() < length {
        let ns = g.neighbor_indices(cur);
        if ns.is_empty() {
            break;
        }
        cur = ns[rng.gen_range(0..ns.len())] as usize;
        nodes.push(g.id(cur));
    }
    Ok(Walk { nodes })
}

fn fold_id(id: NodeId) -> u64 {
    (id.0 as u64) ^ ((id.0 >> 64) as u64).rotate_left(17)
}

/// `walks_per_node` passes; each pass visits every node once in a seeded
/// shuffled order and emits one walk from it.
pub fn generate_global_corpus(g: &Graph, cfg: &WalkConfig) -> Result<Corpus> {
    cfg.validate(g.node_count())?;
    let nodes: Vec<NodeId> = g.nodes().collect();
    let mut walks = Vec::with_capacity(nodes.len() * cfg.walks_per_node);
    for pass in 0..cfg.walks_per_node {
        let mut order = nodes.clone();
        order.shuffle(&mut derive_rng(cfg.seed, Stream::GlobalOrder, pass as u128, 0));
        let batch: Vec<Walk> = order
            .par_iter()
            .map(|&start| {
                let mut rng = derive_rng(cfg.seed, Stream::GlobalWalk, start.0, pass as u64);
                random_walk(g, start, cfg.walk_length, &mut rng).expect("start is a graph node")
            })
            .collect();
        walks.extend(batch);
    }
    Ok(Corpus { walks })
}

/// Builds the ego-walk of `e`: short walks on `G(u)` started once from every
/// member of `A_u ∪ {u}` (shuffled), with total length bounded by the ego
/// budget. `graph_order` is `n` of the combined graph.
pub fn generate_ego_walks(e: &EgoNetwork, cfg: &WalkConfig, graph_order: usize) -> TaggedWalk {
    let mut members = e.members();
    let budget = cfg.ego_budget(members.len(), graph_order);
    let per_walk = (budget / members.len()).clamp(1, cfg.walk_length);
    members.shuffle(&mut derive_rng(cfg.seed, Stream::EgoOrder, e.ego.0, 0));

    let mut segments: Vec<Vec<NodeId>> = Vec::new();
    let mut remaining = budget;
    for start in members {
        if remaining == 0 {
            break;
        }
        let len = per_walk.min(remaining);
        let mut rng = derive_rng(cfg.seed, Stream::EgoWalk, e.ego.0, fold_id(start));
        let w = random_walk(&e.subgraph, start, len, &mut rng).expect("member of subgraph");
        remaining -= w.nodes.len();
        match cfg.ego_walk_form {
            EgoWalkForm::Stream => match segments.first_mut() {
                Some(s) => s.extend(w.nodes),
                None => segments.push(w.nodes),
            },
            EgoWalkForm::Separate => segments.push(w.nodes),
        }
    }
    TaggedWalk { ego: e.ego, segments }
}

/// One ego-walk per ego of the dataset, in ego order.
pub fn generate_ego_corpus(ds: &Dataset, cfg: &WalkConfig) -> Result<EgoCorpus> {
    let n = ds.combined.node_count();
    cfg.validate(n)?;
    let nets = ds.egos().map(|u| ds.ego_network(u)).collect::<Result<Vec<_>>>()?;
    let walks = nets.par_iter().map(|e| generate_ego_walks(e, cfg, n)).collect();
    Ok(EgoCorpus { walks })
}
