use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ingest::MovementRecord;
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// A node id that was seen with more than one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateConflict {
    pub id: String,
    pub kept: GeoPoint,
    pub ignored: GeoPoint,
}

/// Bijection between opaque node ids and dense indices `0..n`, plus the
/// position of each node.
#[derive(Debug, Clone, Default)]
pub struct NodeRegistry {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    coords: Vec<Option<GeoPoint>>,
    conflicts: Vec<CoordinateConflict>,
}

impl NodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `id`, registering it if unseen. The first
    /// coordinate supplied for an id is kept; later different ones are
    /// recorded as conflicts.
    pub fn insert(&mut self, id: &str, coord: Option<GeoPoint>) -> usize {
        if let Some(&i) = self.index.get(id) {
            match (self.coords[i], coord) {
                (None, Some(c)) => self.coords[i] = Some(c),
                (Some(kept), Some(c)) if kept != c => {
                    log::warn!(
                        "node {id:?}: conflicting coordinates ({}, {}) ignored, keeping ({}, {})",
                        c.lat,
                        c.lon,
                        kept.lat,
                        kept.lon
                    );
                    self.conflicts.push(CoordinateConflict {
                        id: id.to_owned(),
                        kept,
                        ignored: c,
                    });
                }
                _ => {}
            }
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        self.coords.push(coord);
        i
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn coord(&self, i: usize) -> Option<GeoPoint> {
        self.coords[i]
    }

    pub fn conflicts(&self) -> &[CoordinateConflict] {
        &self.conflicts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: usize,
    pub dest: usize,
    pub year: i32,
}

/// Directed, timestamped, self-loop free edge set over a shared registry.
///
/// Sub-networks produced by [`temporal_split`] keep the parent's registry so
/// node indices stay comparable; `nodes` lists only the nodes a network
/// actually contains.
#[derive(Debug, Clone)]
pub struct TemporalNetwork {
    registry: Arc<NodeRegistry>,
    nodes: Vec<usize>,
    edges: BTreeSet<Edge>,
}

impl TemporalNetwork {
    pub fn registry(&self) -> &Arc<NodeRegistry> {
        &self.registry
    }

    /// Member node indices, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains_node(&self, i: usize) -> bool {
        self.nodes.binary_search(&i).is_ok()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Distinct ordered `(source, dest)` pairs, ignoring year.
    pub fn links(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.source, e.dest)).collect()
    }

    /// Edges of both networks over the union of their nodes.
    pub fn union(&self, other: &TemporalNetwork) -> Result<TemporalNetwork> {
        if !Arc::ptr_eq(&self.registry, &other.registry) {
            return Err(Error::InvalidArgument(
                "cannot merge networks built over different registries".into(),
            ));
        }
        let mut nodes: Vec<usize> = self.nodes.iter().chain(&other.nodes).copied().collect();
        nodes.sort_unstable();
        nodes.dedup();
        Ok(TemporalNetwork {
            registry: Arc::clone(&self.registry),
            nodes,
            edges: self.edges.union(&other.edges).copied().collect(),
        })
    }

    fn restrict(&self, years: YearRange) -> TemporalNetwork {
        let edges: BTreeSet<Edge> = self
            .edges
            .iter()
            .filter(|e| years.contains(e.year))
            .copied()
            .collect();
        let nodes: BTreeSet<usize> = edges.iter().flat_map(|e| [e.source, e.dest]).collect();
        TemporalNetwork {
            registry: Arc::clone(&self.registry),
            nodes: nodes.into_iter().collect(),
            edges,
        }
    }
}

/// Builds the network: registers every id, drops self-loops and collapses
/// repeated movements within a year into one edge.
pub fn build_network(records: &[MovementRecord]) -> Result<TemporalNetwork> {
    if records.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let mut registry = NodeRegistry::new();
    let mut edges = BTreeSet::new();
    let mut self_loops = 0usize;
    for r in records {
        let s = registry.insert(&r.source_id, Some(r.source));
        let d = registry.insert(&r.dest_id, Some(r.dest));
        if s == d {
            self_loops += 1;
            continue;
        }
        edges.insert(Edge {
            source: s,
            dest: d,
            year: r.year,
        });
    }
    if self_loops > 0 {
        log::info!("removed {self_loops} self-loop movements");
    }
    Ok(TemporalNetwork {
        nodes: (0..registry.len()).collect(),
        registry: Arc::new(registry),
        edges,
    })
}

/// Inclusive interval of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Self {
        YearRange { start, end }
    }

    pub fn single(year: i32) -> Self {
        YearRange::new(year, year)
    }

    pub fn contains(&self, year: i32) -> bool {
        self.start <= year && year <= self.end
    }
}

impl From<[i32; 2]> for YearRange {
    fn from([start, end]: [i32; 2]) -> Self {
        YearRange { start, end }
    }
}

impl From<YearRange> for [i32; 2] {
    fn from(r: YearRange) -> Self {
        [r.start, r.end]
    }
}

/// Chronological train / validation / test year windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: YearRange,
    pub val: YearRange,
    pub test: YearRange,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("train", self.train), ("val", self.val), ("test", self.test)] {
            if r.start > r.end {
                return Err(Error::InvalidSplit(format!(
                    "{name} interval {}..={} is reversed",
                    r.start, r.end
                )));
            }
        }
        if self.train.end >= self.val.start || self.val.end >= self.test.start {
            return Err(Error::InvalidSplit(
                "intervals must be disjoint and ordered train < val < test".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: TemporalNetwork,
    pub val: TemporalNetwork,
    pub test: TemporalNetwork,
}

/// Partitions edges by year into the three windows of `spec`.
pub fn temporal_split(net: &TemporalNetwork, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let part = |name, years: YearRange| {
        let sub = net.restrict(years);
        if sub.edges.is_empty() {
            Err(Error::EmptySplit {
                name,
                start: years.start,
                end: years.end,
            })
        } else {
            Ok(sub)
        }
    };
    Ok(Splits {
        train: part("train", spec.train)?,
        val: part("val", spec.val)?,
        test: part("test", spec.test)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyMode {
    #[default]
    Directed,
    Undirected,
}

/// Binary adjacency over the full registry; absent nodes get empty rows.
pub fn build_adjacency(net: &TemporalNetwork, mode: AdjacencyMode) -> Result<SparseMatrix> {
    if net.edges.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let mut links = net.links();
    if mode == AdjacencyMode::Undirected {
        let reversed: Vec<_> = links.iter().map(|&(u, v)| (v, u)).collect();
        links.extend(reversed);
    }
    let triplets = links.into_iter().map(|(u, v)| (u, v, 1.0)).collect();
    SparseMatrix::from_triplets(net.registry.len(), triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(s: &str, d: &str, year: i32) -> MovementRecord {
        let p = |id: &str| {
            let x = id.bytes().map(f64::from).sum::<f64>() / 10.0;
            GeoPoint::new(x.min(89.0), 0.0).unwrap()
        };
        MovementRecord {
            source_id: s.into(),
            dest_id: d.into(),
            year,
            source: p(s),
            dest: p(d),
            species: None,
        }
    }

    fn spec(train: (i32, i32), val: (i32, i32), test: (i32, i32)) -> SplitSpec {
        SplitSpec {
            train: YearRange::new(train.0, train.1),
            val: YearRange::new(val.0, val.1),
            test: YearRange::new(test.0, test.1),
        }
    }

    #[test]
    fn self_loops_are_dropped_but_nodes_kept() {
        let net = build_network(&[rec("A", "A", 2020), rec("A", "B", 2020)]).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.edge_count(), 1);
    }

    #[test]
    fn duplicate_movements_collapse() {
        let net = build_network(&[rec("A", "B", 2020), rec("A", "B", 2020)]).unwrap();
        assert_eq!(net.edge_count(), 1);
        let net = build_network(&[rec("A", "B", 2020), rec("A", "B", 2021)]).unwrap();
        assert_eq!(net.edge_count(), 2);
        assert_eq!(net.links().len(), 1);
    }

    #[test]
    fn empty_records_error() {
        assert!(matches!(build_network(&[]), Err(Error::EmptyNetwork)));
    }

    #[test]
    fn first_coordinate_wins() {
        let mut a = rec("A", "B", 2020);
        let mut b = rec("A", "C", 2020);
        a.source = GeoPoint::new(10.0, 10.0).unwrap();
        b.source = GeoPoint::new(20.0, 20.0).unwrap();
        let net = build_network(&[a, b]).unwrap();
        let reg = net.registry();
        let i = reg.index_of("A").unwrap();
        assert_eq!(reg.coord(i), Some(GeoPoint::new(10.0, 10.0).unwrap()));
        assert_eq!(reg.conflicts().len(), 1);
    }

    #[test]
    fn split_by_year() {
        let net = build_network(&[
            rec("A", "B", 2020),
            rec("B", "C", 2022),
            rec("C", "D", 2023),
        ])
        .unwrap();
        let s = temporal_split(&net, &spec((2000, 2021), (2022, 2022), (2023, 2023))).unwrap();
        assert_eq!(
            (s.train.edge_count(), s.val.edge_count(), s.test.edge_count()),
            (1, 1, 1)
        );
        let reg = net.registry();
        let a = reg.index_of("A").unwrap();
        let c = reg.index_of("C").unwrap();
        assert!(s.train.contains_node(a));
        assert!(!s.train.contains_node(c));
        assert!(s.val.contains_node(c));
        assert!(Arc::ptr_eq(s.val.registry(), reg));
    }

    #[test]
    fn split_rejects_overlap_and_empty_windows() {
        let net = build_network(&[rec("A", "B", 2020), rec("B", "C", 2022)]).unwrap();
        assert!(matches!(
            temporal_split(&net, &spec((2000, 2022), (2022, 2022), (2023, 2023))),
            Err(Error::InvalidSplit(_))
        ));
        assert!(matches!(
            temporal_split(&net, &spec((2000, 2021), (2022, 2022), (2023, 2023))),
            Err(Error::EmptySplit { name: "test", .. })
        ));
    }

    #[test]
    fn adjacency_modes() {
        let net = build_network(&[rec("A", "B", 2020)]).unwrap();
        let d = build_adjacency(&net, AdjacencyMode::Directed).unwrap();
        assert_eq!((d.nnz(), d.get(0, 1), d.get(1, 0)), (1, Some(1.0), None));
        let u = build_adjacency(&net, AdjacencyMode::Undirected).unwrap();
        assert_eq!((u.nnz(), u.get(0, 1), u.get(1, 0)), (2, Some(1.0), Some(1.0)));

        let tri = build_network(&[rec("A", "B", 1), rec("B", "C", 1), rec("C", "A", 1)]).unwrap();
        let t = build_adjacency(&tri, AdjacencyMode::Directed).unwrap();
        assert_eq!(t.nnz(), 3);
        assert!(t.is_binary());
    }

    #[test]
    fn adjacency_of_split_spans_full_registry() {
        let net = build_network(&[rec("A", "B", 2020), rec("C", "D", 2022), rec("D", "E", 2023)])
            .unwrap();
        let s = temporal_split(&net, &spec((2020, 2021), (2022, 2022), (2023, 2023))).unwrap();
        let a = build_adjacency(&s.train, AdjacencyMode::Directed).unwrap();
        assert_eq!(a.dim(), 5);
        assert_eq!(a.nnz(), 1);
    }
}
