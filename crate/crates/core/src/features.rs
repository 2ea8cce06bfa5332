//! Ego–alter profile similarity and classifier input assembly.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::{Dataset, NodeId};
use crate::scalar::Scalar;

/// Default number of leading profile bits compared.
pub const DEFAULT_PROFILE_BITS: usize = 500;

/// `b_i = 1` iff bit `i` of ego and alter agree. Positions beyond either
/// input's length are absent and never match.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimilarityVector(pub Vec<bool>);

impl SimilarityVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Compares the first `f` profile bits. With `match_ones_only`, shared
/// zeros do not count as agreement.
pub fn profile_similarity(
    ego: &[bool],
    alter: &[bool],
    f: usize,
    match_ones_only: bool,
) -> SimilarityVector {
    SimilarityVector(
        (0..f)
            .map(|i| match (ego.get(i), alter.get(i)) {
                (Some(a), Some(b)) => a == b && (*a || !match_ones_only),
                _ => false,
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureVariant {
    GloGlo,
    LocGlo,
    LocGloGlo,
    GloGloSim,
    LocGloSim,
    LocGloGloSim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    LocU,
    GloU,
    GloV,
    Sim,
}

impl FeatureVariant {
    /// In report order.
    pub const ALL: [FeatureVariant; 6] = [
        FeatureVariant::GloGlo,
        FeatureVariant::LocGlo,
        FeatureVariant::LocGloGlo,
        FeatureVariant::GloGloSim,
        FeatureVariant::LocGloSim,
        FeatureVariant::LocGloGloSim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureVariant::GloGlo => "gloglo",
            FeatureVariant::LocGlo => "locglo",
            FeatureVariant::LocGloGlo => "locgloglo",
            FeatureVariant::GloGloSim => "gloglosim",
            FeatureVariant::LocGloSim => "locglosim",
            FeatureVariant::LocGloGloSim => "locgloglosim",
        }
    }

    fn parts(self) -> &'static [Part] {
        use Part::*;
        match self {
            FeatureVariant::GloGlo => &[GloU, GloV],
            FeatureVariant::LocGlo => &[LocU, GloV],
            FeatureVariant::LocGloGlo => &[LocU, GloU, GloV],
            FeatureVariant::GloGloSim => &[GloU, GloV, Sim],
            FeatureVariant::LocGloSim => &[LocU, GloV, Sim],
            FeatureVariant::LocGloGloSim => &[LocU, GloU, GloV, Sim],
        }
    }

    pub fn uses_local(self) -> bool {
        self.parts().contains(&Part::LocU)
    }

    pub fn uses_similarity(self) -> bool {
        self.parts().contains(&Part::Sim)
    }

    /// Input width for embedding size `d` and `f` profile bits.
    pub fn width(self, d: usize, f: usize) -> usize {
        self.parts().iter().map(|p| if *p == Part::Sim { f } else { d }).sum()
    }
}

impl fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown feature variant `{s}`")))
    }
}

fn lookup<'a, T: Scalar>(
    table: &'a EmbeddingTable<T>,
    token: String,
    u: NodeId,
    v: NodeId,
) -> Result<&'a [T]> {
    table.get(&token).ok_or_else(|| Error::MissingEmbedding {
        token,
        context: format!(" (ego {u}, alter {v})"),
    })
}

/// Appends the input vector of `(u, v)` for `variant` to `out`, in the order
/// the variant name spells out.
pub fn assemble_instance<T: Scalar>(
    variant: FeatureVariant,
    glo: &EmbeddingTable<T>,
    loc: Option<&EmbeddingTable<T>>,
    sim: Option<&SimilarityVector>,
    u: NodeId,
    v: NodeId,
    out: &mut Vec<T>,
) -> Result<()> {
    for part in variant.parts() {
        match part {
            Part::LocU => {
                let loc = loc.ok_or_else(|| Error::MissingEmbedding {
                    token: crate::embedding::ego_token(u),
                    context: " (no local table supplied)".into(),
                })?;
                out.extend_from_slice(lookup(loc, crate::embedding::ego_token(u), u, v)?);
            }
            Part::GloU => out.extend_from_slice(lookup(glo, u.to_string(), u, v)?),
            Part::GloV => out.extend_from_slice(lookup(glo, v.to_string(), u, v)?),
            Part::Sim => {
                let sim = sim.ok_or_else(|| {
                    Error::InvalidConfig(format!("variant {variant} needs a similarity vector"))
                })?;
                out.extend(sim.0.iter().map(|&b| if b { T::one() } else { T::zero() }));
            }
        }
    }
    Ok(())
}

/// Dense instance matrix for one variant plus multi-hot labels over the
/// dataset's full label universe.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSet<T> {
    pub variant: FeatureVariant,
    pub dim: usize,
    pub profile_bits: usize,
    pub width: usize,
    pub labels: Vec<String>,
    /// Row-major, `len() × width`.
    pub x: Vec<T>,
    /// Row-major multi-hot, `len() × labels.len()`.
    pub y: Vec<u8>,
    pub pairs: Vec<(NodeId, NodeId)>,
}

impl<T: Scalar> InstanceSet<T> {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn x_row(&self, i: usize) -> &[T] {
        &self.x[i * self.width..(i + 1) * self.width]
    }

    pub fn y_row(&self, i: usize) -> &[u8] {
        let k = self.n_labels();
        &self.y[i * k..(i + 1) * k]
    }

    /// Label ids set in row `i`.
    pub fn label_set(&self, i: usize) -> Vec<usize> {
        self.y_row(i).iter().enumerate().filter(|(_, &b)| b == 1).map(|(j, _)| j).collect()
    }

    /// Writes `X.txt`, `Y.txt`, `index.tsv` and `meta.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        let mut xs = String::with_capacity(self.x.len() * 12);
        for i in 0..self.len() {
            for (j, v) in self.x_row(i).iter().enumerate() {
                if j > 0 {
                    xs.push(' ');
                }
                let _ = write!(xs, "{v}");
            }
            xs.push('\n');
        }
        let mut ys = String::with_capacity(self.y.len() * 2);
        let mut idx = String::new();
        for i in 0..self.len() {
            for (j, b) in self.y_row(i).iter().enumerate() {
                if j > 0 {
                    ys.push(' ');
                }
                ys.push(if *b == 1 { '1' } else { '0' });
            }
            ys.push('\n');
            let (u, v) = self.pairs[i];
            let _ = writeln!(idx, "{u}\t{v}");
        }
        let meta = InstanceMeta {
            variant: self.variant,
            dim: self.dim,
            profile_bits: self.profile_bits,
            width: self.width,
            instances: self.len(),
            labels: self.labels.clone(),
        };
        let meta = serde_json::to_string_pretty(&meta).expect("meta serializes");
        for (name, body) in [("X.txt", xs), ("Y.txt", ys), ("index.tsv", idx), ("meta.json", meta)] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(Error::io(&p))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).map_err(Error::io(&p))
        };
        let corrupt = |name: &str, msg: String| Error::CorruptFile { path: dir.join(name), msg };
        let meta: InstanceMeta = serde_json::from_str(&read("meta.json")?)
            .map_err(|e| corrupt("meta.json", e.to_string()))?;
        let k = meta.labels.len();
        let mut x = Vec::with_capacity(meta.instances * meta.width);
        for (i, line) in read("X.txt")?.lines().enumerate() {
            let before = x.len();
            for t in line.split_whitespace() {
                x.push(t.parse::<T>().map_err(|_| corrupt("X.txt", format!("line {}: bad value `{t}`", i + 1)))?);
            }
            if x.len() - before != meta.width {
                return Err(corrupt("X.txt", format!("line {}: expected {} values", i + 1, meta.width)));
            }
        }
        let mut y = Vec::with_capacity(meta.instances * k);
        for (i, line) in read("Y.txt")?.lines().enumerate() {
            let before = y.len();
            for t in line.split_whitespace() {
                y.push(match t {
                    "0" => 0,
                    "1" => 1,
                    _ => return Err(corrupt("Y.txt", format!("line {}: bad label `{t}`", i + 1))),
                });
            }
            if y.len() - before != k {
                return Err(corrupt("Y.txt", format!("line {}: expected {k} labels", i + 1)));
            }
        }
        let mut pairs = Vec::with_capacity(meta.instances);
        for (i, line) in read("index.tsv")?.lines().enumerate() {
            let bad = || corrupt("index.tsv", format!("line {}: expected `ego<TAB>alter`", i + 1));
            let (u, v) = line.split_once('\t').ok_or_else(bad)?;
            pairs.push((u.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?));
        }
        if pairs.len() != meta.instances || x.len() != meta.instances * meta.width {
            return Err(corrupt("meta.json", format!("declares {} instances", meta.instances)));
        }
        Ok(InstanceSet {
            variant: meta.variant,
            dim: meta.dim,
            profile_bits: meta.profile_bits,
            width: meta.width,
            labels: meta.labels,
            x,
            y,
            pairs,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceMeta {
    variant: FeatureVariant,
    dim: usize,
    profile_bits: usize,
    width: usize,
    instances: usize,
    labels: Vec<String>,
}

/// One instance per `(u, v)` with `v ∈ A_u` and `v` in at least one circle
/// of `u`. The same alter under two egos gives two instances.
pub fn build_dataset<T: Scalar>(
    ds: &Dataset,
    variant: FeatureVariant,
    glo: &EmbeddingTable<T>,
    loc: Option<&EmbeddingTable<T>>,
    profile_bits: usize,
    match_ones_only: bool,
) -> Result<InstanceSet<T>> {
    let d = glo.dim();
    if let Some(loc) = loc {
        if loc.dim() != d {
            return Err(Error::DimensionMismatch { what: "local table dim", expected: d, got: loc.dim() });
        }
    }
    let width = variant.width(d, profile_bits);
    let k = ds.label_count();
    let mut set = InstanceSet {
        variant,
        dim: d,
        profile_bits,
        width,
        labels: ds.labels.clone(),
        x: Vec::new(),
        y: Vec::new(),
        pairs: Vec::new(),
    };
    for rec in &ds.records {
        let u = rec.ego;
        let label_ids: Vec<usize> =
            (0..rec.circles.len()).map(|i| ds.label_index[&rec.label_name(i)]).collect();
        for &v in ds.combined.neighbors(u) {
            let member_of = rec.memberships(v);
            if member_of.is_empty() {
                continue;
            }
            let sim = variant.uses_similarity().then(|| {
                let alter = rec.alter_features.get(&v).map(Vec::as_slice).unwrap_or(&[]);
                profile_similarity(&rec.ego_features, alter, profile_bits, match_ones_only)
            });
            assemble_instance(variant, glo, loc, sim.as_ref(), u, v, &mut set.x)?;
            let mut row = vec![0u8; k];
            for c in member_of {
                row[label_ids[c]] = 1;
            }
            set.y.extend(row);
            set.pairs.push((u, v));
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::TableKind;
    use crate::graph::{Circle, EgoRecord};
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn n(x: u64) -> NodeId {
        NodeId::from(x)
    }

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn similarity_hand_cases() {
        let v = bits("1010");
        assert_eq!(profile_similarity(&v, &v, 4, false).0, vec![true; 4]);
        assert_eq!(profile_similarity(&v, &bits("0101"), 4, false).0, vec![false; 4]);
        assert_eq!(profile_similarity(&v, &bits("1100"), 4, false).0, bits("1001"));
        assert_eq!(profile_similarity(&v, &bits("1100"), 4, true).0, bits("1000"));
        // Absent positions never match.
        assert_eq!(profile_similarity(&v, &bits("10"), 6, false).0, bits("110000"));
        assert_eq!(profile_similarity(&bits("11111"), &bits("11111"), 3, false).len(), 3);
    }

    proptest! {
        #[test]
        fn similarity_is_symmetric_and_reflexive(
            a in proptest::collection::vec(any::<bool>(), 0..40),
            b in proptest::collection::vec(any::<bool>(), 0..40),
            f in 0usize..50,
        ) {
            prop_assert_eq!(profile_similarity(&a, &b, f, false), profile_similarity(&b, &a, f, false));
            let refl = profile_similarity(&a, &a, a.len(), false);
            prop_assert!(refl.0.iter().all(|&x| x));
        }

        #[test]
        fn assembled_width_follows_variant(d in 1usize..6, f in 0usize..7, vi in 0usize..6) {
            let variant = FeatureVariant::ALL[vi];
            let glo = EmbeddingTable::new(TableKind::NodeInput, d, vec!["1".into(), "2".into()], vec![0.5f64; 2 * d]).unwrap();
            let loc = EmbeddingTable::new(TableKind::Ego, d, vec!["ego:1".into()], vec![1.0f64; d]).unwrap();
            let sim = SimilarityVector(vec![true; f]);
            let mut out = Vec::new();
            assemble_instance(variant, &glo, Some(&loc), Some(&sim), n(1), n(2), &mut out).unwrap();
            prop_assert_eq!(out.len(), variant.width(d, f));
        }
    }

    #[test]
    fn concatenation_order() {
        let glo = EmbeddingTable::new(TableKind::NodeInput, 2, vec!["1".into(), "2".into()], vec![5.0, 6.0, 3.0, 4.0]).unwrap();
        let loc = EmbeddingTable::new(TableKind::Ego, 2, vec!["ego:1".into()], vec![1.0, 2.0]).unwrap();
        let sim = SimilarityVector(bits("10"));
        let run = |variant, u: u64, v: u64| {
            let mut out = Vec::new();
            assemble_instance(variant, &glo, Some(&loc), Some(&sim), n(u), n(v), &mut out).unwrap();
            out
        };
        assert_eq!(run(FeatureVariant::LocGlo, 1, 2), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(run(FeatureVariant::GloGlo, 2, 2), vec![3.0, 4.0, 3.0, 4.0]);
        assert_eq!(run(FeatureVariant::LocGloGloSim, 1, 2), vec![1.0, 2.0, 5.0, 6.0, 3.0, 4.0, 1.0, 0.0]);
        assert_eq!(FeatureVariant::LocGloGloSim.width(300, 500), 1400);
        assert_eq!(FeatureVariant::GloGloSim.width(300, 500), 1100);

        let mut out = Vec::new();
        let err = assemble_instance(FeatureVariant::GloGlo, &glo, None, None, n(1), n(9), &mut out).unwrap_err();
        assert!(matches!(err, Error::MissingEmbedding { ref token, .. } if token == "9"));
    }

    #[test]
    fn variant_names_round_trip() {
        for v in FeatureVariant::ALL {
            assert_eq!(v.name().parse::<FeatureVariant>().unwrap(), v);
        }
        assert!("glo".parse::<FeatureVariant>().is_err());
    }

    fn fixture() -> Dataset {
        let circles = vec![
            Circle { name: "c1".into(), members: BTreeSet::from([n(1), n(4)]) },
            Circle { name: "c2".into(), members: BTreeSet::from([n(4)]) },
            Circle { name: "c3".into(), members: BTreeSet::from([n(1)]) },
            Circle { name: "c4".into(), members: BTreeSet::new() },
        ];
        let alter_features = BTreeMap::from([(n(1), bits("10")), (n(2), bits("01")), (n(4), bits("11"))]);
        let rec = EgoRecord {
            ego: n(0),
            circles,
            ego_features: bits("10"),
            alter_features,
            feature_names: vec!["a".into(), "b".into()],
        };
        Dataset::from_records(crate::graph::DatasetKind::Facebook, vec![rec], &[])
    }

    #[test]
    fn build_dataset_filters_and_binarizes() {
        let ds = fixture();
        let toks = ["0", "1", "2", "4"].map(String::from).to_vec();
        let glo = EmbeddingTable::new(TableKind::NodeInput, 1, toks, vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        let set: InstanceSet<f64> = build_dataset(&ds, FeatureVariant::GloGloSim, &glo, None, 3, false).unwrap();
        // Alter 2 belongs to no circle.
        assert_eq!(set.pairs, vec![(n(0), n(1)), (n(0), n(4))]);
        assert_eq!(set.y_row(0), &[1, 0, 1, 0]);
        assert_eq!(set.y_row(1), &[1, 1, 0, 0]);
        assert_eq!(set.x_row(0), &[0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(set.x_row(1), &[0.0, 4.0, 1.0, 0.0, 0.0]);
        // Binarization is lossless.
        let rec = &ds.records[0];
        for (i, &(_, v)) in set.pairs.iter().enumerate() {
            assert_eq!(set.label_set(i), rec.memberships(v));
        }

        let dir = tempfile::tempdir().unwrap();
        set.save(dir.path()).unwrap();
        assert_eq!(InstanceSet::<f64>::load(dir.path()).unwrap(), set);
    }
}
