//! Bisecting k-means over continuous vertex attributes, read as a
//! dendrogram: two points are `2 * height` apart, where `height` is the
//! radius of the smallest cluster holding both.

use std::borrow::Borrow;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assign::{LeafMap, VertexTree};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::CostTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub leaves: usize,
    pub lloyd_max_iter: usize,
    pub lloyd_tol: f64,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            leaves: 300,
            lloyd_max_iter: 100,
            lloyd_tol: 1e-6,
            seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.leaves == 0 {
            return Err(Error::arg("at least one leaf is required"));
        }
        if self.lloyd_max_iter == 0 || self.lloyd_tol.is_nan() || self.lloyd_tol <= 0.0 {
            return Err(Error::arg("Lloyd iterations and tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoMeans {
    pub centroids: [Vec<f64>; 2],
    /// Side (0 or 1) of every input point.
    pub sides: Vec<u8>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean<'p>(points: impl Iterator<Item = &'p [f64]>, dim: usize) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; dim];
    let mut count = 0usize;
    for p in points {
        for (s, x) in sum.iter_mut().zip(p) {
            *s += x;
        }
        count += 1;
    }
    (count > 0).then(|| sum.into_iter().map(|s| s / count as f64).collect())
}

/// Lloyd's algorithm for two clusters, started from two distinct input
/// points drawn with `seed`.
pub fn lloyd2(points: &[&[f64]], seed: u64, max_iter: usize, tol: f64) -> Result<TwoMeans> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if points.is_empty() {
        return Err(Error::Degenerate);
    }
    let dim = points[0].len();
    let first = rng.gen_range(0..points.len());
    let others: Vec<usize> = (0..points.len()).filter(|&i| points[i] != points[first]).collect();
    let second = *others.choose(&mut rng).ok_or(Error::Degenerate)?;
    let mut centroids = [points[first].to_vec(), points[second].to_vec()];
    let mut sides = vec![0u8; points.len()];

    for _ in 0..max_iter {
        for (side, p) in sides.iter_mut().zip(points) {
            *side = u8::from(squared_distance(p, &centroids[1]) < squared_distance(p, &centroids[0]));
        }
        let mut moved: f64 = 0.0;
        for (k, centroid) in centroids.iter_mut().enumerate() {
            let members = points.iter().zip(&sides).filter(|(_, &s)| s as usize == k).map(|(p, _)| *p);
            if let Some(next) = mean(members, dim) {
                moved = moved.max(squared_distance(&next, centroid).sqrt());
                *centroid = next;
            }
        }
        if moved < tol {
            break;
        }
    }
    for (side, p) in sides.iter_mut().zip(points) {
        *side = u8::from(squared_distance(p, &centroids[1]) < squared_distance(p, &centroids[0]));
    }
    if sides.iter().all(|&s| s == sides[0]) {
        return Err(Error::Degenerate);
    }
    Ok(TwoMeans { centroids, sides })
}

struct Cluster {
    members: Vec<usize>,
    parent: Option<usize>,
    radius: f64,
    sse: f64,
    children: Option<[usize; 2]>,
    splittable: bool,
}

impl Cluster {
    fn new(points: &[&[f64]], members: Vec<usize>, parent: Option<usize>) -> Self {
        let dim = points[members[0]].len();
        let centroid = mean(members.iter().map(|&i| points[i]), dim).unwrap();
        let (mut radius, mut sse) = (0.0f64, 0.0);
        for &i in &members {
            let d = squared_distance(points[i], &centroid);
            sse += d;
            radius = radius.max(d);
        }
        Cluster {
            members,
            parent,
            radius: radius.sqrt(),
            sse,
            children: None,
            splittable: true,
        }
    }
}

/// Cluster tree over the attribute vectors of all vertices of `graphs`.
///
/// Leaves are at height zero; internal edges with zero length are
/// contracted, so the tree can have fewer nodes than clusters.
pub fn build_cluster_tree<G: Borrow<Graph>>(graphs: &[G], config: &ClusterConfig) -> Result<VertexTree> {
    config.validate()?;
    let mut points: Vec<&[f64]> = Vec::new();
    let mut counts = Vec::with_capacity(graphs.len());
    for (i, g) in graphs.iter().enumerate() {
        let g = g.borrow();
        let attrs = g
            .vertex_attributes()
            .ok_or_else(|| Error::Config(format!("graph {i} has no vertex attributes")))?;
        points.extend(attrs.iter().map(Vec::as_slice));
        counts.push(g.vertex_count());
    }
    if let Some(p) = points.iter().find(|p| p.len() != points[0].len()) {
        return Err(Error::Config(format!(
            "attribute dimensions differ ({} vs {})",
            points[0].len(),
            p.len()
        )));
    }
    if points.is_empty() {
        let tree = CostTree::from_parents(vec![None], vec![0.0])?;
        return VertexTree::new(tree, LeafMap::default(), &counts);
    }

    let mut clusters = vec![Cluster::new(&points, (0..points.len()).collect(), None)];
    let mut leaf_count = 1;
    let mut attempts = 0u64;
    while leaf_count < config.leaves {
        let candidate = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.children.is_none() && c.splittable)
            .max_by(|(i, a), (j, b)| a.sse.total_cmp(&b.sse).then(j.cmp(i)))
            .map(|(i, _)| i);
        let Some(index) = candidate else {
            log::info!("cluster tree stopped at {leaf_count} leaves: remaining clusters cannot be split");
            break;
        };
        let member_points: Vec<&[f64]> = clusters[index].members.iter().map(|&i| points[i]).collect();
        attempts += 1;
        let seed = config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(attempts);
        match lloyd2(&member_points, seed, config.lloyd_max_iter, config.lloyd_tol) {
            Ok(split) => {
                let mut sides: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
                for (&i, &s) in clusters[index].members.iter().zip(&split.sides) {
                    sides[s as usize].push(i);
                }
                let [left, right] = sides;
                let first = clusters.len();
                clusters.push(Cluster::new(&points, left, Some(index)));
                clusters.push(Cluster::new(&points, right, Some(index)));
                clusters[index].children = Some([first, first + 1]);
                leaf_count += 1;
            }
            Err(Error::Degenerate) => clusters[index].splittable = false,
            Err(e) => return Err(e),
        }
    }

    // Children are always created after their parent, so a reverse sweep
    // sees every child before its parent.
    let mut height = vec![0.0f64; clusters.len()];
    for i in (0..clusters.len()).rev() {
        if let Some([l, r]) = clusters[i].children {
            height[i] = clusters[i].radius.max(height[l]).max(height[r]);
        }
    }

    let mut node_of = vec![0usize; clusters.len()];
    let mut parent = vec![None];
    let mut weight = vec![0.0];
    for i in 1..clusters.len() {
        let up = clusters[i].parent.unwrap();
        let w = height[up] - height[i];
        if w > 0.0 {
            parent.push(Some(node_of[up]));
            weight.push(w);
            node_of[i] = parent.len() - 1;
        } else {
            node_of[i] = node_of[up];
        }
    }
    let mut leaves = vec![0usize; points.len()];
    for (i, c) in clusters.iter().enumerate().filter(|(_, c)| c.children.is_none()) {
        for &p in &c.members {
            leaves[p] = node_of[i];
        }
    }
    let tree = CostTree::from_parents(parent, weight)?;
    VertexTree::new(tree, LeafMap::new(leaves), &counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attributed(values: &[&[f64]]) -> Graph {
        Graph::new(values.len(), vec![])
            .unwrap()
            .with_vertex_attributes(values.iter().map(|v| v.to_vec()).collect())
            .unwrap()
    }

    #[test]
    fn two_points() {
        let pts: [&[f64]; 2] = [&[0.0], &[10.0]];
        let r = lloyd2(&pts, 1, 100, 1e-6).unwrap();
        assert_ne!(r.sides[0], r.sides[1]);
        let mut cs = [r.centroids[0][0], r.centroids[1][0]];
        cs.sort_by(f64::total_cmp);
        assert_eq!(cs, [0.0, 10.0]);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts: [&[f64]; 3] = [&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]];
        assert!(matches!(lloyd2(&pts, 0, 100, 1e-6), Err(Error::Degenerate)));
    }

    fn sse_of(points: &[Vec<f64>], mask: u32) -> f64 {
        let mut total = 0.0;
        for side in [0, 1] {
            let members: Vec<&[f64]> = (0..points.len())
                .filter(|&i| (mask >> i) & 1 == side)
                .map(|i| points[i].as_slice())
                .collect();
            if let Some(c) = mean(members.iter().copied(), 2) {
                total += members.iter().map(|p| squared_distance(p, &c)).sum::<f64>();
            }
        }
        total
    }

    #[test]
    fn separated_blobs_match_the_best_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let n = rng.gen_range(4..=12);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let centre = if i % 2 == 0 { 0.0 } else { 20.0 };
                    vec![centre + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
                })
                .collect();
            let best = (1..(1u32 << n) - 1).map(|m| sse_of(&points, m)).fold(f64::INFINITY, f64::min);
            let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
            let r = lloyd2(&refs, trial, 100, 1e-9).unwrap();
            let mask = r.sides.iter().enumerate().fold(0u32, |m, (i, &s)| m | (u32::from(s) << i));
            assert!((sse_of(&points, mask) - best).abs() < 1e-9);
            for i in 0..n {
                assert_eq!(r.sides[i] == r.sides[0], i % 2 == 0);
            }
        }
    }

    #[test]
    fn single_leaf() {
        let g = attributed(&[&[0.0], &[3.0], &[7.0]]);
        let config = ClusterConfig {
            leaves: 1,
            ..ClusterConfig::default()
        };
        let t = build_cluster_tree(&[g], &config).unwrap();
        assert_eq!(t.tree.node_count(), 1);
        assert!(t.vertex_nodes(0).iter().all(|&v| v == 0));
    }

    #[test]
    fn two_pairs() {
        let g = attributed(&[&[0.0], &[0.0], &[10.0], &[10.0]]);
        let config = ClusterConfig {
            leaves: 2,
            ..ClusterConfig::default()
        };
        let t = build_cluster_tree(&[g], &config).unwrap();
        let v = t.vertex_nodes(0);
        assert_eq!(t.tree.path_distance(v[0], v[1]).unwrap(), 0.0);
        assert_eq!(t.tree.path_distance(v[2], v[3]).unwrap(), 0.0);
        assert_eq!(t.tree.path_distance(v[0], v[2]).unwrap(), 10.0);
    }

    #[test]
    fn stops_when_nothing_splits() {
        let g = attributed(&[&[1.0], &[1.0], &[4.0]]);
        let t = build_cluster_tree(&[g], &ClusterConfig::default()).unwrap();
        assert_eq!(t.tree.node_count(), 3);
        let v = t.vertex_nodes(0);
        assert_eq!(v[0], v[1]);
    }

    #[test]
    fn random_trees_are_ultrametric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let graphs: Vec<Graph> = (0..30)
            .map(|_| {
                let n = rng.gen_range(1..8);
                let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)]).collect();
                Graph::new(n, vec![]).unwrap().with_vertex_attributes(pts).unwrap()
            })
            .collect();
        let config = ClusterConfig {
            leaves: 40,
            ..ClusterConfig::default()
        };
        let t = build_cluster_tree(&graphs, &config).unwrap();
        let report = t.tree.validate_ultrametric(t.leaves.nodes());
        assert!(report.ultrametric, "{report}");
        let leaves: std::collections::BTreeSet<usize> = t.leaves.nodes().iter().copied().collect();
        assert!(leaves.len() <= 40);
        // heights never increase downwards: every edge is positive
        assert!((1..t.tree.node_count()).all(|v| t.tree.weight(v) > 0.0));
    }

    #[test]
    fn missing_attributes_are_a_config_error() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        assert!(matches!(
            build_cluster_tree(&[g], &ClusterConfig::default()),
            Err(Error::Config(_))
        ));
    }
}
