//! Undirected graphs, ego-networks and the SNAP ego-nets loader.
//!
//! A dataset directory holds five files per ego `X`:
//!
//! * `X.edges`     alter–alter edges, one `a b` pair per line
//! * `X.circles`   `name<TAB>id<TAB>id...`, one circle per line
//! * `X.feat`      `nodeId b1 ... bF`, one alter per line
//! * `X.egofeat`   `b1 ... bF` for the ego itself
//! * `X.featnames` `i description`
//!
//! The combined graph is the union over egos of the ego–alter star and the
//! alter–alter edges. Circle names are namespaced as `<ego>/<name>`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw dataset node id. Google+ ids exceed `u64`, hence the wide integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u128);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(NodeId)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v as u128)
    }
}

/// Simple undirected graph without self-loops, stored as compressed
/// adjacency rows. Node ids and neighbor lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    ids: Vec<NodeId>,
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    /// Position in `ids` of each entry of `neighbors`.
    neighbor_idx: Vec<u32>,
}

impl Default for Graph {
    fn default() -> Self {
        Graph { ids: Vec::new(), offsets: vec![0], neighbors: Vec::new(), neighbor_idx: Vec::new() }
    }
}

impl Graph {
    /// Builds a graph from explicit nodes plus an edge list. Endpoints of
    /// edges are added implicitly; self-loops and duplicates are dropped.
    pub fn from_edges<N, E>(nodes: N, edges: E) -> Graph
    where
        N: IntoIterator<Item = NodeId>,
        E: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut b = GraphBuilder::default();
        for n in nodes {
            b.add_node(n);
        }
        for (u, v) in edges {
            b.add_edge(u, v);
        }
        b.build()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.ids.iter().copied()
    }

    /// Dense index of `u` in `0..node_count()`, following id order.
    pub fn index_of(&self, u: NodeId) -> Option<usize> {
        self.ids.binary_search(&u).ok()
    }

    pub fn id(&self, i: usize) -> NodeId {
        self.ids[i]
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.index_of(u).is_some()
    }

    /// Sorted neighbors of `u`; empty for unknown nodes.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        match self.index_of(u) {
            Some(i) => &self.neighbors[self.offsets[i]..self.offsets[i + 1]],
            None => &[],
        }
    }

    /// Dense indices of the neighbors of the node at index `i`.
    pub fn neighbor_indices(&self, i: usize) -> &[u32] {
        &self.neighbor_idx[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.neighbors(u).len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.ids.iter().enumerate().flat_map(move |(i, &u)| {
            self.neighbors[self.offsets[i]..self.offsets[i + 1]]
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl GraphBuilder {
    pub fn add_node(&mut self, u: NodeId) {
        self.adj.entry(u).or_default();
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) {
        self.add_node(u);
        self.add_node(v);
        if u != v {
            self.adj.get_mut(&u).unwrap().insert(v);
            self.adj.get_mut(&v).unwrap().insert(u);
        }
    }

    /// Panics if the graph has more than `u32::MAX` nodes.
    pub fn build(self) -> Graph {
        let ids: Vec<NodeId> = self.adj.keys().copied().collect();
        assert!(ids.len() <= u32::MAX as usize, "graph too large");
        let mut g = Graph { ids, ..Graph::default() };
        for ns in self.adj.into_values() {
            for v in ns {
                let j = g.ids.binary_search(&v).expect("endpoint was added");
                g.neighbors.push(v);
                g.neighbor_idx.push(j as u32);
            }
            g.offsets.push(g.neighbors.len());
        }
        g
    }
}

/// Induced subgraph around one ego.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EgoNetwork {
    pub ego: NodeId,
    /// `A_u`, sorted. Never contains the ego.
    pub alters: Vec<NodeId>,
    /// Graph over `alters ∪ {ego}`.
    pub subgraph: Graph,
}

impl EgoNetwork {
    /// `alters ∪ {ego}` in ascending order.
    pub fn members(&self) -> Vec<NodeId> {
        let mut m = self.alters.clone();
        let pos = m.binary_search(&self.ego).unwrap_err();
        m.insert(pos, self.ego);
        m
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v == self.ego || self.alters.binary_search(&v).is_ok()
    }
}

/// Extracts `G(u)`: the neighborhood of `u` plus every edge among it.
pub fn ego_network(g: &Graph, u: NodeId) -> Result<EgoNetwork> {
    if !g.contains(u) {
        return Err(Error::UnknownNode(u));
    }
    let alters = g.neighbors(u).to_vec();
    let mut b = GraphBuilder::default();
    b.add_node(u);
    for &a in &alters {
        b.add_edge(u, a);
    }
    for &a in &alters {
        for &c in g.neighbors(a) {
            if a < c && alters.binary_search(&c).is_ok() {
                b.add_edge(a, c);
            }
        }
    }
    Ok(EgoNetwork { ego: u, alters, subgraph: b.build() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Facebook,
    Gplus,
    Twitter,
}

impl DatasetKind {
    /// Mini-batch size used for classifier training on this network.
    pub fn default_batch_size(self) -> usize {
        match self {
            DatasetKind::Facebook => 32,
            DatasetKind::Gplus | DatasetKind::Twitter => 64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Facebook => "facebook",
            DatasetKind::Gplus => "gplus",
            DatasetKind::Twitter => "twitter",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "facebook" => Ok(DatasetKind::Facebook),
            "gplus" | "google+" | "googleplus" => Ok(DatasetKind::Gplus),
            "twitter" => Ok(DatasetKind::Twitter),
            other => Err(Error::InvalidConfig(format!("unknown dataset kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circle {
    pub name: String,
    pub members: BTreeSet<NodeId>,
}

/// Ground truth and profile features of one ego.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EgoRecord {
    pub ego: NodeId,
    /// In file order.
    pub circles: Vec<Circle>,
    pub ego_features: Vec<bool>,
    pub alter_features: BTreeMap<NodeId, Vec<bool>>,
    pub feature_names: Vec<String>,
}

impl EgoRecord {
    /// Namespaced label name for the circle at position `i`.
    pub fn label_name(&self, i: usize) -> String {
        format!("{}/{}", self.ego, self.circles[i].name)
    }

    /// Indices (into `circles`) of the circles containing `v`.
    pub fn memberships(&self, v: NodeId) -> Vec<usize> {
        self.circles
            .iter()
            .enumerate()
            .filter(|(_, c)| c.members.contains(&v))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub kind: DatasetKind,
    /// Sorted by ego id.
    pub records: Vec<EgoRecord>,
    pub combined: Graph,
    /// Label names; position is the label id.
    pub labels: Vec<String>,
    pub label_index: HashMap<String, usize>,
}

impl Dataset {
    pub fn empty(kind: DatasetKind) -> Dataset {
        Dataset {
            kind,
            records: Vec::new(),
            combined: Graph::default(),
            labels: Vec::new(),
            label_index: HashMap::new(),
        }
    }

    /// Assembles a dataset from parsed records, building the combined graph
    /// and the label index.
    pub fn from_records(
        kind: DatasetKind,
        mut records: Vec<EgoRecord>,
        alter_edges: &[(NodeId, Vec<(NodeId, NodeId)>)],
    ) -> Dataset {
        records.sort_by_key(|r| r.ego);
        let mut b = GraphBuilder::default();
        for r in &records {
            b.add_node(r.ego);
            for &a in r.alter_features.keys() {
                b.add_edge(r.ego, a);
            }
            for c in &r.circles {
                for &m in &c.members {
                    b.add_node(m);
                }
            }
        }
        for (ego, edges) in alter_edges {
            for &(x, y) in edges {
                b.add_edge(*ego, x);
                b.add_edge(*ego, y);
                b.add_edge(x, y);
            }
        }
        let mut labels = Vec::new();
        let mut label_index = HashMap::new();
        for r in &records {
            for i in 0..r.circles.len() {
                let name = r.label_name(i);
                label_index.insert(name.clone(), labels.len());
                labels.push(name);
            }
        }
        Dataset { kind, records, combined: b.build(), labels, label_index }
    }

    pub fn egos(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.records.iter().map(|r| r.ego)
    }

    pub fn record(&self, ego: NodeId) -> Option<&EgoRecord> {
        self.records
            .binary_search_by_key(&ego, |r| r.ego)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn ego_network(&self, ego: NodeId) -> Result<EgoNetwork> {
        ego_network(&self.combined, ego)
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub egos: usize,
    pub circles: usize,
    pub features: usize,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes    |V|  {}", self.nodes)?;
        writeln!(f, "edges    |E|  {}", self.edges)?;
        writeln!(f, "egos     |U|  {}", self.egos)?;
        writeln!(f, "circles  |Y|  {}", self.circles)?;
        write!(f, "features  f   {}", self.features)
    }
}

pub fn dataset_stats(d: &Dataset) -> GraphStats {
    GraphStats {
        nodes: d.combined.node_count(),
        edges: d.combined.edge_count(),
        egos: d.records.len(),
        circles: d.labels.len(),
        features: d.records.iter().map(|r| r.ego_features.len()).max().unwrap_or(0),
    }
}

const SUFFIXES: [&str; 5] = ["edges", "circles", "feat", "egofeat", "featnames"];

/// Loads every ego found in `dir`. Egos are discovered from file stems that
/// parse as node ids and carry one of the five ego-net suffixes.
pub fn load_ego_dataset(dir: &Path, kind: DatasetKind) -> Result<Dataset> {
    let mut egos = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let entry = entry.map_err(Error::io(dir))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some((stem, suffix)) = name.split_once('.') else { continue };
        if SUFFIXES.contains(&suffix) {
            if let Ok(id) = stem.parse::<NodeId>() {
                egos.insert(id);
            }
        }
    }

    let mut records = Vec::with_capacity(egos.len());
    let mut alter_edges = Vec::with_capacity(egos.len());
    for ego in egos {
        let path = |suffix: &'static str| -> Result<PathBuf> {
            let p = dir.join(format!("{ego}.{suffix}"));
            if p.is_file() {
                Ok(p)
            } else {
                Err(Error::MissingFile { ego, suffix })
            }
        };
        let edges = parse_edges(&path("edges")?)?;
        let circles = parse_circles(&path("circles")?)?;
        let ego_features = parse_egofeat(&path("egofeat")?)?;
        let alter_features = parse_feat(&path("feat")?, ego_features.len())?;
        let feature_names = parse_featnames(&path("featnames")?)?;
        records.push(EgoRecord { ego, circles, ego_features, alter_features, feature_names });
        alter_edges.push((ego, edges));
    }
    Ok(Dataset::from_records(kind, records, &alter_edges))
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_owned()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_id(path: &Path, line: usize, tok: &str) -> Result<NodeId> {
    tok.parse()
        .map_err(|_| Error::parse(path, line, format!("invalid node id `{tok}`")))
}

fn parse_bits<'a>(
    path: &Path,
    line: usize,
    toks: impl Iterator<Item = &'a str>,
) -> Result<Vec<bool>> {
    toks.map(|t| match t {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::parse(path, line, format!("feature value `{other}` is not 0/1"))),
    })
    .collect()
}

fn parse_edges(path: &Path) -> Result<Vec<(NodeId, NodeId)>> {
    read_lines(path)?
        .into_iter()
        .map(|(no, l)| {
            let mut it = l.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => Ok((parse_id(path, no, a)?, parse_id(path, no, b)?)),
                _ => Err(Error::parse(path, no, "expected `a b`")),
            }
        })
        .collect()
}

fn parse_circles(path: &Path) -> Result<Vec<Circle>> {
    let mut circles: Vec<Circle> = Vec::new();
    for (no, l) in read_lines(path)? {
        let mut it = l.split_whitespace();
        let name = it.next().unwrap().to_owned();
        let members = it.map(|t| parse_id(path, no, t)).collect::<Result<BTreeSet<_>>>()?;
        match circles.iter_mut().find(|c| c.name == name) {
            Some(c) => c.members.extend(members),
            None => circles.push(Circle { name, members }),
        }
    }
    Ok(circles)
}

fn parse_egofeat(path: &Path) -> Result<Vec<bool>> {
    let lines = read_lines(path)?;
    match lines.as_slice() {
        [] => Ok(Vec::new()),
        [(no, l)] => parse_bits(path, *no, l.split_whitespace()),
        [_, (no, _), ..] => Err(Error::parse(path, *no, "expected a single line")),
    }
}

fn parse_feat(path: &Path, width: usize) -> Result<BTreeMap<NodeId, Vec<bool>>> {
    let mut out = BTreeMap::new();
    for (no, l) in read_lines(path)? {
        let mut it = l.split_whitespace();
        let id = parse_id(path, no, it.next().unwrap())?;
        let bits = parse_bits(path, no, it)?;
        if bits.len() != width {
            return Err(Error::parse(
                path,
                no,
                format!("expected {width} feature bits, found {}", bits.len()),
            ));
        }
        out.insert(id, bits);
    }
    Ok(out)
}

fn parse_featnames(path: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = Vec::new();
    for (no, l) in read_lines(path)? {
        let (idx, desc) = l.split_once(char::is_whitespace).unwrap_or((l.as_str(), ""));
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::parse(path, no, format!("invalid feature index `{idx}`")))?;
        if names.len() <= idx {
            names.resize(idx + 1, String::new());
        }
        names[idx] = desc.trim().to_owned();
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn n(x: u64) -> NodeId {
        NodeId::from(x)
    }

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn toy_dir(edges: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "0.edges", edges);
        write(dir.path(), "0.circles", "circle0\t1\t2\ncircle1\t3\n");
        write(dir.path(), "0.feat", "1 1 0\n2 0 1\n3 1 1\n");
        write(dir.path(), "0.egofeat", "1 0\n");
        write(dir.path(), "0.featnames", "0 gender;anonymized feature 77\n1 locale;anonymized feature 127\n");
        dir
    }

    #[test]
    fn toy_dataset_builds_star_plus_alter_edges() {
        let dir = toy_dir("1 2\n");
        let ds = load_ego_dataset(dir.path(), DatasetKind::Facebook).unwrap();
        let expected: Vec<_> = vec![(n(0), n(1)), (n(0), n(2)), (n(0), n(3)), (n(1), n(2))];
        assert_eq!(ds.combined.edges().collect::<Vec<_>>(), expected);
        assert_eq!(ds.combined.node_count(), 4);
        assert_eq!(ds.labels, vec!["0/circle0", "0/circle1"]);
        let st = dataset_stats(&ds);
        assert_eq!(st, GraphStats { nodes: 4, edges: 4, egos: 1, circles: 2, features: 2 });
        assert_eq!(ds.records[0].feature_names[1], "locale;anonymized feature 127");
    }

    #[test]
    fn empty_edges_file_keeps_feature_alters() {
        let dir = toy_dir("");
        let ds = load_ego_dataset(dir.path(), DatasetKind::Facebook).unwrap();
        let e = ds.ego_network(n(0)).unwrap();
        assert_eq!(e.alters, vec![n(1), n(2), n(3)]);
        assert_eq!(e.subgraph.edge_count(), 3);
    }

    #[test]
    fn parser_tolerates_blank_lines_and_trailing_space() {
        let dir = toy_dir("\n1 2   \n\n2 1\n");
        let ds = load_ego_dataset(dir.path(), DatasetKind::Facebook).unwrap();
        assert_eq!(ds.combined.edge_count(), 4);
    }

    #[test]
    fn missing_file_is_reported() {
        let dir = toy_dir("1 2\n");
        fs::remove_file(dir.path().join("0.egofeat")).unwrap();
        let err = load_ego_dataset(dir.path(), DatasetKind::Facebook).unwrap_err();
        assert!(matches!(err, Error::MissingFile { suffix: "egofeat", .. }), "{err}");
    }

    #[test]
    fn malformed_line_names_file_and_line() {
        let dir = toy_dir("1 2\n1 x\n");
        match load_ego_dataset(dir.path(), DatasetKind::Facebook).unwrap_err() {
            Error::Parse { file, line, .. } => {
                assert!(file.ends_with("0.edges"));
                assert_eq!(line, 2);
            }
            e => panic!("unexpected {e}"),
        }
        let dir = toy_dir("1 2\n");
        write(dir.path(), "0.feat", "1 1 0\n2 0 2\n");
        assert!(matches!(
            load_ego_dataset(dir.path(), DatasetKind::Facebook),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn circle_only_node_is_isolated() {
        let dir = toy_dir("1 2\n");
        write(dir.path(), "0.circles", "circle0\t1\t99\n");
        let ds = load_ego_dataset(dir.path(), DatasetKind::Facebook).unwrap();
        assert!(ds.combined.contains(n(99)));
        assert_eq!(ds.combined.degree(n(99)), 0);
    }

    #[test]
    fn empty_dataset_stats_are_zero() {
        let dir = tempfile::tempdir().unwrap();
        let ds = load_ego_dataset(dir.path(), DatasetKind::Twitter).unwrap();
        assert_eq!(dataset_stats(&ds), GraphStats::default());
    }

    #[test]
    fn gplus_sized_ids_parse() {
        let id: NodeId = "116374117927631468606".parse().unwrap();
        assert_eq!(id.to_string(), "116374117927631468606");
    }

    #[test]
    fn isolated_and_triangle_ego_networks() {
        let g = Graph::from_edges([n(9)], [(n(1), n(2)), (n(2), n(3)), (n(1), n(3))]);
        let iso = ego_network(&g, n(9)).unwrap();
        assert!(iso.alters.is_empty());
        assert_eq!(iso.subgraph.nodes().collect::<Vec<_>>(), vec![n(9)]);
        assert_eq!(iso.subgraph.edge_count(), 0);

        let tri = ego_network(&g, n(1)).unwrap();
        assert_eq!(tri.alters, vec![n(2), n(3)]);
        assert!(tri.subgraph.has_edge(n(2), n(3)));
        assert!(matches!(ego_network(&g, n(4)), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn ego_subgraph_matches_brute_force_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let mut edges = Vec::new();
        for a in 0..50u64 {
            for b in a + 1..50 {
                if rng.gen_bool(0.1) {
                    edges.push((n(a), n(b)));
                }
            }
        }
        let g = Graph::from_edges((0..50).map(n), edges.iter().copied());
        for u in 0..50u64 {
            let e = ego_network(&g, n(u)).unwrap();
            let members: BTreeSet<NodeId> =
                edges.iter().filter(|(a, b)| *a == n(u) || *b == n(u)).map(|&(a, b)| if a == n(u) { b } else { a }).chain([n(u)]).collect();
            let expected: BTreeSet<(NodeId, NodeId)> = edges
                .iter()
                .filter(|(a, b)| members.contains(a) && members.contains(b))
                .copied()
                .collect();
            let got: BTreeSet<_> = e.subgraph.edges().collect();
            assert_eq!(got, expected, "ego {u}");
            assert_eq!(e.members(), members.into_iter().collect::<Vec<_>>());
        }
    }
}
