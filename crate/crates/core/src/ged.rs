//! Graph edit distance: edit costs, vertex mappings and the edit paths they
//! induce, the linear-time tree method and the matrix baselines.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::assign::{construct_assignment_pruned_keyed, AssignmentInstance, PairingKeys};
use crate::baseline::{bp_cost_matrix, greedy_prefix, hungarian};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::{CostTree, EpsilonOptions};

/// How substituting one vertex for another is priced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexCost {
    /// 0 for equal discrete labels, 1 otherwise.
    Dirac,
    /// Euclidean distance between attribute vectors.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditCosts {
    pub tau_vertex: f64,
    pub tau_edge: f64,
    pub vertex: VertexCost,
}

impl EditCosts {
    pub fn new(tau_vertex: f64, tau_edge: f64, vertex: VertexCost) -> Result<Self> {
        if !(tau_vertex > 0.0 && tau_vertex.is_finite() && tau_edge > 0.0 && tau_edge.is_finite()) {
            return Err(Error::arg(format!(
                "insertion/deletion costs must be positive (got {tau_vertex}, {tau_edge})"
            )));
        }
        Ok(EditCosts {
            tau_vertex,
            tau_edge,
            vertex,
        })
    }

    pub fn vertex_substitution(&self, g: &Graph, u: usize, h: &Graph, v: usize) -> f64 {
        match self.vertex {
            VertexCost::Dirac => f64::from(g.vertex_label(u) != h.vertex_label(v)),
            VertexCost::Euclidean => match (g.vertex_attributes(), h.vertex_attributes()) {
                (Some(a), Some(b)) => euclidean(&a[u], &b[v]),
                _ => 0.0,
            },
        }
    }

    /// Dirac on edge labels when both graphs carry them, free otherwise.
    pub fn edge_substitution(&self, g: &Graph, e: usize, h: &Graph, f: usize) -> f64 {
        match (g.edge_labels(), h.edge_labels()) {
            (Some(a), Some(b)) => f64::from(a[e] != b[f]),
            _ => 0.0,
        }
    }

    /// Key under which vertices count as having identical labels.
    fn vertex_key(&self, g: &Graph, u: usize) -> u64 {
        match self.vertex {
            VertexCost::Dirac => u64::from(g.vertex_label(u)),
            VertexCost::Euclidean => {
                let mut hasher = DefaultHasher::new();
                if let Some(attrs) = g.vertex_attributes() {
                    for x in &attrs[u] {
                        x.to_bits().hash(&mut hasher);
                    }
                }
                hasher.finish() & !(1 << 63)
            }
        }
    }
}

const EPSILON_KEY: u64 = u64::MAX;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Partial bijection between the vertices of two graphs; unmatched vertices
/// are deleted (in `g`) or inserted (in `h`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexMapping {
    g_to_h: Vec<Option<usize>>,
    h_to_g: Vec<Option<usize>>,
}

impl VertexMapping {
    pub fn new(g_to_h: Vec<Option<usize>>, h_to_g: Vec<Option<usize>>) -> Result<Self> {
        for (u, &image) in g_to_h.iter().enumerate() {
            if let Some(v) = image {
                if h_to_g.get(v).copied().flatten() != Some(u) {
                    return Err(Error::arg(format!("vertex {u} maps to {v}, which does not map back")));
                }
            }
        }
        for (v, &pre) in h_to_g.iter().enumerate() {
            if let Some(u) = pre {
                if g_to_h.get(u).copied().flatten() != Some(v) {
                    return Err(Error::arg(format!("vertex {v} of h has preimage {u}, which does not map to it")));
                }
            }
        }
        Ok(VertexMapping { g_to_h, h_to_g })
    }

    /// Build from the images of `g`'s vertices in a graph with `h_len` vertices.
    pub fn from_images(g_to_h: Vec<Option<usize>>, h_len: usize) -> Result<Self> {
        let mut h_to_g = vec![None; h_len];
        for (u, image) in g_to_h.iter().enumerate() {
            if let Some(v) = *image {
                match h_to_g.get_mut(v) {
                    None => return Err(Error::arg(format!("image {v} out of range"))),
                    Some(Some(other)) => {
                        return Err(Error::arg(format!("vertices {other} and {u} share image {v}")))
                    }
                    Some(slot) => *slot = Some(u),
                }
            }
        }
        Ok(VertexMapping { g_to_h, h_to_g })
    }

    pub fn identity(n: usize) -> Self {
        let ids: Vec<Option<usize>> = (0..n).map(Some).collect();
        VertexMapping {
            g_to_h: ids.clone(),
            h_to_g: ids,
        }
    }

    pub fn image(&self, u: usize) -> Option<usize> {
        self.g_to_h[u]
    }

    pub fn preimage(&self, v: usize) -> Option<usize> {
        self.h_to_g[v]
    }

    pub fn g_len(&self) -> usize {
        self.g_to_h.len()
    }

    pub fn h_len(&self) -> usize {
        self.h_to_g.len()
    }

    /// The same correspondence read from `h` to `g`.
    pub fn inverse(&self) -> VertexMapping {
        VertexMapping {
            g_to_h: self.h_to_g.clone(),
            h_to_g: self.g_to_h.clone(),
        }
    }
}

/// Cost of the edit path induced by `mapping`.
///
/// Each edge of `g` is substituted when both endpoints are mapped onto an
/// edge of `h` and deleted otherwise; edges of `h` that are not such an
/// image are inserted.
pub fn induced_edit_cost(g: &Graph, h: &Graph, mapping: &VertexMapping, costs: &EditCosts) -> Result<f64> {
    if mapping.g_len() != g.vertex_count() || mapping.h_len() != h.vertex_count() {
        return Err(Error::arg(format!(
            "mapping covers {}+{} vertices, graphs have {}+{}",
            mapping.g_len(),
            mapping.h_len(),
            g.vertex_count(),
            h.vertex_count()
        )));
    }
    let mut total = 0.0;
    for u in 0..g.vertex_count() {
        total += match mapping.image(u) {
            Some(v) => costs.vertex_substitution(g, u, h, v),
            None => costs.tau_vertex,
        };
    }
    let inserted = (0..h.vertex_count()).filter(|&v| mapping.preimage(v).is_none()).count();
    total += inserted as f64 * costs.tau_vertex;

    let mut preserved = 0usize;
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        let image = match (mapping.image(a), mapping.image(b)) {
            (Some(x), Some(y)) => h.edge_between(x, y),
            _ => None,
        };
        match image {
            Some(f) => {
                preserved += 1;
                total += costs.edge_substitution(g, e, h, f);
            }
            None => total += costs.tau_edge,
        }
    }
    total += (h.edge_count() - preserved) as f64 * costs.tau_edge;
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GedResult {
    /// Cost of the induced edit path.
    pub cost: f64,
    /// Objective value of the assignment the mapping came from.
    pub assignment_cost: f64,
    pub mapping: VertexMapping,
}

/// Linear-time approximation over a fixed cost tree.
///
/// The tree is extended once by a node at distance `tau_vertex` from every
/// mapped leaf; deleted and inserted vertices are represented by objects on
/// that node.
#[derive(Debug, Clone)]
pub struct LinearGed {
    tree: CostTree,
    epsilon: usize,
    costs: EditCosts,
}

impl LinearGed {
    /// `leaves` are the nodes vertices are mapped to; they must be
    /// equidistant from the root and at most `tau_vertex / 2` below it to
    /// keep substitutions no dearer than deletions.
    pub fn new(tree: &CostTree, leaves: &[usize], costs: EditCosts) -> Result<Self> {
        Self::with_options(tree, leaves, costs, EpsilonOptions::default())
    }

    pub fn with_options(tree: &CostTree, leaves: &[usize], costs: EditCosts, options: EpsilonOptions) -> Result<Self> {
        let eps = tree.attach_epsilon_node(costs.tau_vertex, leaves, options)?;
        Ok(LinearGed {
            tree: eps.tree,
            epsilon: eps.node,
            costs,
        })
    }

    /// The extended tree.
    pub fn tree(&self) -> &CostTree {
        &self.tree
    }

    pub fn epsilon_node(&self) -> usize {
        self.epsilon
    }

    pub fn costs(&self) -> &EditCosts {
        &self.costs
    }

    pub fn distance(&self, g: &Graph, g_nodes: &[usize], h: &Graph, h_nodes: &[usize]) -> Result<GedResult> {
        let (n, m) = (g.vertex_count(), h.vertex_count());
        if g_nodes.len() != n || h_nodes.len() != m {
            return Err(Error::arg("every vertex needs a tree node"));
        }
        let mut a = Vec::with_capacity(n + m);
        a.extend_from_slice(g_nodes);
        a.resize(n + m, self.epsilon);
        let mut b = Vec::with_capacity(n + m);
        b.extend_from_slice(h_nodes);
        b.resize(n + m, self.epsilon);

        let mut a_keys: Vec<u64> = (0..n).map(|u| self.costs.vertex_key(g, u)).collect();
        a_keys.resize(n + m, EPSILON_KEY);
        let mut b_keys: Vec<u64> = (0..m).map(|v| self.costs.vertex_key(h, v)).collect();
        b_keys.resize(n + m, EPSILON_KEY);

        let instance = AssignmentInstance::new(&self.tree, a, b)?;
        let assignment = construct_assignment_pruned_keyed(&instance, PairingKeys { a: &a_keys, b: &b_keys })?;

        let mut images = vec![None; n];
        for &(i, j) in &assignment.pairs {
            if i < n && j < m {
                images[i] = Some(j);
            }
        }
        let mapping = VertexMapping::from_images(images, m)?;
        let cost = induced_edit_cost(g, h, &mapping, &self.costs)?;
        Ok(GedResult {
            cost,
            assignment_cost: assignment.cost,
            mapping,
        })
    }
}

/// One-shot linear approximation; `g_nodes`/`h_nodes` place the vertices on
/// `tree`.
pub fn approx_ged_linear(
    g: &Graph,
    h: &Graph,
    tree: &CostTree,
    g_nodes: &[usize],
    h_nodes: &[usize],
    costs: &EditCosts,
) -> Result<GedResult> {
    let leaves: Vec<usize> = g_nodes.iter().chain(h_nodes).copied().collect();
    LinearGed::new(tree, &leaves, *costs)?.distance(g, g_nodes, h, h_nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSolver {
    Hungarian,
    Greedy,
}

/// Bipartite-heuristic approximation over the `(n+m)`-square cost matrix.
pub fn approx_ged_matrix(g: &Graph, h: &Graph, costs: &EditCosts, solver: MatrixSolver) -> Result<GedResult> {
    let (n, m) = (g.vertex_count(), h.vertex_count());
    let matrix = bp_cost_matrix(g, h, costs);
    let mut images = vec![None; n];
    let assignment_cost = match solver {
        MatrixSolver::Hungarian => {
            let assignment = hungarian(&matrix)?;
            for &(i, j) in &assignment.pairs {
                if i < n && j < m {
                    images[i] = Some(j);
                }
            }
            assignment.cost
        }
        MatrixSolver::Greedy => {
            // Rows of `g` choose greedily; the insertion rows are then forced.
            let cols = greedy_prefix(&matrix, n)?;
            let mut total = 0.0;
            for (i, &j) in cols.iter().enumerate() {
                total += matrix.get(i, j);
                if j < m {
                    images[i] = Some(j);
                }
            }
            let mut covered = vec![false; m];
            for &j in cols.iter().filter(|&&j| j < m) {
                covered[j] = true;
            }
            for (j, _) in covered.iter().enumerate().filter(|(_, &c)| !c) {
                total += matrix.get(n + j, j);
            }
            total
        }
    };
    let mapping = VertexMapping::from_images(images, m)?;
    let cost = induced_edit_cost(g, h, &mapping, costs)?;
    Ok(GedResult {
        cost,
        assignment_cost,
        mapping,
    })
}

/// Largest `|V(G)| + |V(H)|` accepted by [`exact_ged_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 9;

/// Exact edit distance by enumerating every partial vertex bijection.
pub fn exact_ged_bruteforce(g: &Graph, h: &Graph, costs: &EditCosts) -> Result<f64> {
    let (n, m) = (g.vertex_count(), h.vertex_count());
    if n + m > BRUTEFORCE_LIMIT {
        return Err(Error::Capacity(format!(
            "exhaustive edit distance supports at most {BRUTEFORCE_LIMIT} vertices in total, got {}",
            n + m
        )));
    }
    let mut images = vec![None; n];
    let mut used = vec![false; m];
    let mut best = f64::INFINITY;
    enumerate(0, &mut images, &mut used, &mut |images| {
        let mapping = VertexMapping::from_images(images.to_vec(), m)?;
        best = best.min(induced_edit_cost(g, h, &mapping, costs)?);
        Ok(())
    })?;
    Ok(best)
}

fn enumerate(
    u: usize,
    images: &mut [Option<usize>],
    used: &mut [bool],
    visit: &mut dyn FnMut(&[Option<usize>]) -> Result<()>,
) -> Result<()> {
    if u == images.len() {
        return visit(images);
    }
    images[u] = None;
    enumerate(u + 1, images, used, visit)?;
    for v in 0..used.len() {
        if !used[v] {
            used[v] = true;
            images[u] = Some(v);
            enumerate(u + 1, images, used, visit)?;
            used[v] = false;
        }
    }
    images[u] = None;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wl::{build_wl_tree, WlConfig};

    fn unit() -> EditCosts {
        EditCosts::new(1.0, 1.0, VertexCost::Dirac).unwrap()
    }

    fn path(n: usize) -> Graph {
        Graph::new(n, (1..n).map(|v| (v - 1, v)).collect()).unwrap()
    }

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn identity_costs_nothing() {
        let g = path(4).with_vertex_labels(vec![1, 2, 1, 3]).unwrap();
        let cost = induced_edit_cost(&g, &g, &VertexMapping::identity(4), &unit()).unwrap();
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn single_edge_deletion() {
        let g = path(2);
        let h = Graph::new(2, vec![]).unwrap();
        let costs = EditCosts::new(1.0, 0.3, VertexCost::Dirac).unwrap();
        let cost = induced_edit_cost(&g, &h, &VertexMapping::identity(2), &costs).unwrap();
        assert_eq!(cost, 0.3);
    }

    #[test]
    fn inconsistent_mappings_are_rejected() {
        assert!(VertexMapping::new(vec![Some(0)], vec![None]).is_err());
        assert!(VertexMapping::from_images(vec![Some(0), Some(0)], 2).is_err());
        let g = path(2);
        let m = VertexMapping::identity(3);
        assert!(induced_edit_cost(&g, &g, &m, &unit()).is_err());
    }

    #[test]
    fn deleting_a_lone_vertex() {
        let k1 = Graph::new(1, vec![]).unwrap();
        let empty = Graph::new(0, vec![]).unwrap();
        assert_eq!(exact_ged_bruteforce(&k1, &empty, &unit()).unwrap(), 1.0);
        let tree = CostTree::from_parents(vec![None, Some(0)], vec![0.0, 0.5]).unwrap();
        let r = approx_ged_linear(&k1, &empty, &tree, &[1], &[], &unit()).unwrap();
        assert_eq!(r.cost, 1.0);
        for solver in [MatrixSolver::Hungarian, MatrixSolver::Greedy] {
            assert_eq!(approx_ged_matrix(&k1, &empty, &unit(), solver).unwrap().cost, 1.0);
        }
    }

    #[test]
    fn triangle_versus_path() {
        // one edge deletion turns the triangle into P3
        let costs = unit();
        assert_eq!(exact_ged_bruteforce(&triangle(), &path(3), &costs).unwrap(), 1.0);
        assert_eq!(exact_ged_bruteforce(&path(3), &triangle(), &costs).unwrap(), 1.0);
        assert_eq!(exact_ged_bruteforce(&triangle(), &triangle(), &costs).unwrap(), 0.0);
    }

    #[test]
    fn bruteforce_guard() {
        let big = path(5);
        assert!(matches!(exact_ged_bruteforce(&big, &big, &unit()), Err(Error::Capacity(_))));
    }

    #[test]
    fn bp_on_identical_labelled_paths() {
        let g = path(4).with_vertex_labels(vec![0, 1, 2, 3]).unwrap();
        let r = approx_ged_matrix(&g, &g, &unit(), MatrixSolver::Hungarian).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.assignment_cost, 0.0);
    }

    #[test]
    fn linear_self_distance_with_distinct_colours() {
        // asymmetric tree on 6 vertices: every vertex ends up with its own colour
        let g = Graph::new(6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (5, 0)]).unwrap();
        let g = g.with_vertex_labels(vec![0, 0, 1, 0, 0, 2]).unwrap();
        let config = WlConfig::for_edit_costs(3, 1.0);
        let wl = build_wl_tree(&[&g, &g], &config).unwrap();
        let r = approx_ged_linear(&g, &g, &wl.tree, wl.vertex_nodes(0), wl.vertex_nodes(1), &unit()).unwrap();
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn linear_is_symmetric_in_cost() {
        let g = triangle().with_vertex_labels(vec![0, 1, 1]).unwrap();
        let h = path(4).with_vertex_labels(vec![1, 0, 1, 0]).unwrap();
        let config = WlConfig::for_edit_costs(2, 1.0);
        let wl = build_wl_tree(&[&g, &h], &config).unwrap();
        let gh = approx_ged_linear(&g, &h, &wl.tree, wl.vertex_nodes(0), wl.vertex_nodes(1), &unit()).unwrap();
        let hg = approx_ged_linear(&h, &g, &wl.tree, wl.vertex_nodes(1), wl.vertex_nodes(0), &unit()).unwrap();
        assert_eq!(gh.cost, hg.cost);
        assert_eq!(gh.assignment_cost, hg.assignment_cost);
        assert!(gh.cost >= exact_ged_bruteforce(&g, &h, &unit()).unwrap());
    }
}
