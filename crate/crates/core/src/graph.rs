//! Undirected graphs with optional discrete labels and continuous attributes,
//! labelled graph collections, random graph generation and stratified splits.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Simple undirected graph.
///
/// Edges are stored as `(min, max)` pairs in insertion order. A compressed
/// adjacency (sorted by neighbour) is derived at construction and used for
/// edge lookups.
#[derive(Debug, Clone)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    vertex_labels: Option<Vec<u32>>,
    vertex_attributes: Option<Vec<Vec<f64>>>,
    edge_labels: Option<Vec<u32>>,
    offsets: Vec<usize>,
    neighbours: Vec<u32>,
    incident: Vec<u32>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.vertex_count == other.vertex_count
            && self.edges == other.edges
            && self.vertex_labels == other.vertex_labels
            && self.vertex_attributes == other.vertex_attributes
            && self.edge_labels == other.edge_labels
    }
}

impl Graph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalised = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u == v {
                return Err(Error::arg(format!("self-loop at vertex {u}")));
            }
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::arg(format!(
                    "edge ({u}, {v}) out of range for {vertex_count} vertices"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::arg(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            normalised.push(e);
        }

        let mut degree = vec![0usize; vertex_count + 1];
        for &(u, v) in &normalised {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in degree.iter().take(vertex_count) {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets.clone();
        let mut slots = vec![(0u32, 0u32); acc];
        for (idx, &(u, v)) in normalised.iter().enumerate() {
            slots[cursor[u]] = (v as u32, idx as u32);
            cursor[u] += 1;
            slots[cursor[v]] = (u as u32, idx as u32);
            cursor[v] += 1;
        }
        for v in 0..vertex_count {
            slots[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        let (neighbours, incident) = slots.into_iter().unzip();

        Ok(Graph {
            vertex_count,
            edges: normalised,
            vertex_labels: None,
            vertex_attributes: None,
            edge_labels: None,
            offsets,
            neighbours,
            incident,
        })
    }

    pub fn with_vertex_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.vertex_count {
            return Err(Error::arg(format!(
                "{} vertex labels for {} vertices",
                labels.len(),
                self.vertex_count
            )));
        }
        self.vertex_labels = Some(labels);
        Ok(self)
    }

    pub fn with_vertex_attributes(mut self, attributes: Vec<Vec<f64>>) -> Result<Self> {
        if attributes.len() != self.vertex_count {
            return Err(Error::arg(format!(
                "{} attribute vectors for {} vertices",
                attributes.len(),
                self.vertex_count
            )));
        }
        if let Some(first) = attributes.first() {
            let dim = first.len();
            if let Some(bad) = attributes.iter().position(|a| a.len() != dim) {
                return Err(Error::arg(format!(
                    "attribute vector of vertex {bad} has dimension {} (expected {dim})",
                    attributes[bad].len()
                )));
            }
        }
        self.vertex_attributes = Some(attributes);
        Ok(self)
    }

    pub fn with_edge_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.edges.len() {
            return Err(Error::arg(format!(
                "{} edge labels for {} edges",
                labels.len(),
                self.edges.len()
            )));
        }
        self.edge_labels = Some(labels);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertex_labels(&self) -> Option<&[u32]> {
        self.vertex_labels.as_deref()
    }

    pub fn vertex_attributes(&self) -> Option<&[Vec<f64>]> {
        self.vertex_attributes.as_deref()
    }

    pub fn edge_labels(&self) -> Option<&[u32]> {
        self.edge_labels.as_deref()
    }

    /// Label of vertex `v`, or 0 when the graph is unlabelled.
    pub fn vertex_label(&self, v: usize) -> u32 {
        self.vertex_labels.as_ref().map_or(0, |l| l[v])
    }

    pub fn edge_label(&self, edge: usize) -> u32 {
        self.edge_labels.as_ref().map_or(0, |l| l[edge])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Neighbours of `v` in increasing order.
    pub fn neighbours(&self, v: usize) -> &[u32] {
        &self.neighbours[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edge indices incident to `v`, aligned with [`Graph::neighbours`].
    pub fn incident_edges(&self, v: usize) -> &[u32] {
        &self.incident[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Index of the edge `{u, v}` if present.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        let nbrs = self.neighbours(a);
        nbrs.binary_search(&(b as u32))
            .ok()
            .map(|pos| self.incident_edges(a)[pos] as usize)
    }
}

/// A collection of graphs with one class label per graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    graphs: Vec<Graph>,
    class_labels: Vec<i64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, class_labels: Vec<i64>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::arg("dataset must contain at least one graph"));
        }
        if graphs.len() != class_labels.len() {
            return Err(Error::arg(format!(
                "{} class labels for {} graphs",
                class_labels.len(),
                graphs.len()
            )));
        }
        Ok(Dataset {
            name: name.into(),
            graphs,
            class_labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn class_labels(&self) -> &[i64] {
        &self.class_labels
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn has_vertex_labels(&self) -> bool {
        self.graphs.iter().any(|g| g.vertex_labels().is_some())
    }

    pub fn has_vertex_attributes(&self) -> bool {
        self.graphs.iter().any(|g| g.vertex_attributes().is_some())
    }

    pub fn has_edge_labels(&self) -> bool {
        self.graphs.iter().any(|g| g.edge_labels().is_some())
    }

    pub fn mean_vertex_count(&self) -> f64 {
        let total: usize = self.graphs.iter().map(Graph::vertex_count).sum();
        total as f64 / self.graphs.len() as f64
    }

    pub fn mean_edge_count(&self) -> f64 {
        let total: usize = self.graphs.iter().map(Graph::edge_count).sum();
        total as f64 / self.graphs.len() as f64
    }
}

/// Disjoint train/validation/test index sets into a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Erdős–Rényi G(n, p) graph with vertex labels uniform in `[0, alphabet)`.
pub fn random_gnp(n: usize, p: f64, seed: u64, alphabet: u32) -> Result<Graph> {
    if n == 0 {
        return Err(Error::arg("random graph needs at least one vertex"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("edge probability {p} outside [0, 1]")));
    }
    if alphabet == 0 {
        return Err(Error::arg("label alphabet must be non-empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let labels = (0..n).map(|_| rng.gen_range(0..alphabet)).collect();
    Graph::new(n, edges)?.with_vertex_labels(labels)
}

/// Class-balanced random split into thirds.
///
/// Every class contributes `count / 3` members to each part; the remaining
/// one or two members go to train, then validation.
pub fn stratified_split(dataset: &Dataset, seed: u64) -> Result<Split> {
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (idx, &class) in dataset.class_labels().iter().enumerate() {
        by_class.entry(class).or_default().push(idx);
    }
    if let Some((&class, members)) = by_class.iter().find(|(_, m)| m.len() < 3) {
        return Err(Error::Split {
            class,
            count: members.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        let third = members.len() / 3;
        let mut parts = [third; 3];
        for extra in parts.iter_mut().take(members.len() % 3) {
            *extra += 1;
        }
        let (train, rest) = members.split_at(parts[0]);
        let (validation, test) = rest.split_at(parts[1]);
        split.train.extend_from_slice(train);
        split.validation.extend_from_slice(validation);
        split.test.extend_from_slice(test);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_edges() {
        assert!(Graph::new(2, vec![(0, 0)]).is_err());
        assert!(Graph::new(2, vec![(0, 2)]).is_err());
        assert!(Graph::new(3, vec![(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, vec![(0, 1)]).unwrap().with_vertex_labels(vec![1]).is_err());
        let ragged = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(Graph::new(2, vec![]).unwrap().with_vertex_attributes(ragged).is_err());
    }

    #[test]
    fn edge_lookup() {
        let g = Graph::new(4, vec![(2, 0), (1, 2), (3, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (1, 2), (2, 3)]);
        assert_eq!(g.neighbours(2), &[0, 1, 3]);
        assert_eq!(g.edge_between(3, 2), Some(2));
        assert_eq!(g.edge_between(0, 1), None);
        assert_eq!(g.degree(2), 3);
    }

    #[test]
    fn gnp_extremes() {
        let empty = random_gnp(3, 0.0, 1, 2).unwrap();
        assert_eq!(empty.edge_count(), 0);
        assert_eq!(empty.vertex_count(), 3);
        let triangle = random_gnp(3, 1.0, 1, 2).unwrap();
        assert_eq!(triangle.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert!(random_gnp(0, 0.5, 1, 2).is_err());
        assert!(random_gnp(3, 1.5, 1, 2).is_err());
    }

    #[test]
    fn gnp_edge_count_matches_binomial() {
        let pairs = 100.0 * 99.0 / 2.0;
        let mean = pairs * 0.15;
        let var = pairs * 0.15 * 0.85;
        let seeds = 1000;
        let total: usize = (0..seeds)
            .map(|s| random_gnp(100, 0.15, s, 1).unwrap().edge_count())
            .sum();
        let sample_mean = total as f64 / seeds as f64;
        // standard error of the mean over 1000 draws
        let sigma = (var / seeds as f64).sqrt();
        assert!((sample_mean - mean).abs() < 3.0 * sigma, "{sample_mean} vs {mean}");
    }

    #[test]
    fn gnp_is_deterministic() {
        assert_eq!(random_gnp(30, 0.3, 9, 3).unwrap(), random_gnp(30, 0.3, 9, 3).unwrap());
    }

    fn trivial_dataset(classes: Vec<i64>) -> Dataset {
        let graphs = classes.iter().map(|_| Graph::new(1, vec![]).unwrap()).collect();
        Dataset::new("t", graphs, classes).unwrap()
    }

    #[test]
    fn split_exact_thirds() {
        let ds = trivial_dataset(vec![0, 0, 0, 1, 1, 1]);
        let split = stratified_split(&ds, 3).unwrap();
        for part in [&split.train, &split.validation, &split.test] {
            let mut classes: Vec<i64> = part.iter().map(|&i| ds.class_labels()[i]).collect();
            classes.sort();
            assert_eq!(classes, vec![0, 1]);
        }
    }

    #[test]
    fn split_remainder_goes_to_train() {
        let ds = trivial_dataset(vec![0, 0, 0, 0, 1, 1, 1]);
        let split = stratified_split(&ds, 11).unwrap();
        let zeros = split.train.iter().filter(|&&i| ds.class_labels()[i] == 0).count();
        assert_eq!(zeros, 2);
        assert_eq!(split.validation.len(), 2);
        assert_eq!(split.test.len(), 2);
        assert_eq!(split, stratified_split(&ds, 11).unwrap());
    }

    #[test]
    fn split_rejects_small_class() {
        let ds = trivial_dataset(vec![0, 0, 0, 5, 5]);
        match stratified_split(&ds, 0) {
            Err(Error::Split { class: 5, count: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
