//! Dense cost matrices and the cubic/quadratic reference solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assign::Assignment;
use crate::error::{Error, Result};
use crate::ged::EditCosts;
use crate::graph::Graph;
use crate::tree::CostTree;

/// Entry value marking a forbidden pairing.
pub const FORBIDDEN: f64 = f64::INFINITY;

/// Square matrix of non-negative costs; [`FORBIDDEN`] entries may not be used.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(order: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != order * order {
            return Err(Error::arg(format!(
                "{} entries for a {order}x{order} matrix",
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|x| x.is_nan() || *x < 0.0 || *x == f64::NEG_INFINITY) {
            return Err(Error::arg(format!(
                "entry ({}, {}) = {} is not a non-negative cost",
                pos / order,
                pos % order,
                entries[pos]
            )));
        }
        Ok(CostMatrix { order, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::arg("cost matrix must be square"));
        }
        Self::new(order, rows.concat())
    }

    fn filled(order: usize, value: f64) -> Self {
        CostMatrix {
            order,
            entries: vec![value; order * order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.order + col]
    }

    fn set(&mut self, row: usize, col: usize, value: f64) {
        self.entries[row * self.order + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }

    fn pairs_cost(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(i, j)| self.get(i, j)).sum()
    }
}

/// Minimum-cost bijection by shortest augmenting paths with dual potentials,
/// `O(n^3)`. Ties are resolved towards lower column indices.
pub fn hungarian(matrix: &CostMatrix) -> Result<Assignment> {
    let n = matrix.order;
    if n == 0 {
        return Ok(Assignment { pairs: Vec::new(), cost: 0.0 });
    }
    // 1-based rows/columns; column 0 is the virtual root of each search
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![f64::INFINITY; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = matrix.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let c = row[j - 1];
                if c.is_finite() {
                    let reduced = c - u[i0] - v[j];
                    if reduced < min_slack[j] {
                        min_slack[j] = reduced;
                        way[j] = j0;
                    }
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return Err(Error::Solver(format!(
                    "no bijection avoids the forbidden entries (row {} unmatched)",
                    i - 1
                )));
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    let pairs: Vec<(usize, usize)> = col_of.into_iter().enumerate().collect();
    let cost = matrix.pairs_cost(&pairs);
    Ok(Assignment { pairs, cost })
}

/// Each row in index order takes its cheapest unused column, `O(n^2)`.
pub fn greedy_rowwise(matrix: &CostMatrix) -> Result<Assignment> {
    let cols = greedy_prefix(matrix, matrix.order)?;
    let pairs: Vec<(usize, usize)> = cols.into_iter().enumerate().collect();
    let cost = matrix.pairs_cost(&pairs);
    Ok(Assignment { pairs, cost })
}

/// Greedy column choices for the first `rows` rows.
pub(crate) fn greedy_prefix(matrix: &CostMatrix, rows: usize) -> Result<Vec<usize>> {
    let n = matrix.order;
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut best: Option<(usize, f64)> = None;
        for (j, &c) in matrix.row(i).iter().enumerate() {
            if taken[j] || !c.is_finite() {
                continue;
            }
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((j, c));
            }
        }
        let (j, _) = best.ok_or_else(|| Error::Solver(format!("greedy: no admissible column left for row {i}")))?;
        taken[j] = true;
        out.push(j);
    }
    Ok(out)
}

/// Optimal cost of assigning the edges incident to `u` in `g` to those
/// incident to `v` in `h`, with edge deletions and insertions allowed.
fn incident_edge_cost(g: &Graph, u: usize, h: &Graph, v: usize, costs: &EditCosts) -> f64 {
    let (eg, eh) = (g.incident_edges(u), h.incident_edges(v));
    let (p, q) = (eg.len(), eh.len());
    if p == 0 || q == 0 {
        return (p + q) as f64 * costs.tau_edge;
    }
    if g.edge_labels().is_none() || h.edge_labels().is_none() {
        // substitutions are free, so only the surplus is inserted or deleted
        return p.abs_diff(q) as f64 * costs.tau_edge;
    }
    let order = p + q;
    let mut m = CostMatrix::filled(order, FORBIDDEN);
    for (i, &e) in eg.iter().enumerate() {
        for (j, &f) in eh.iter().enumerate() {
            m.set(i, j, costs.edge_substitution(g, e as usize, h, f as usize));
        }
        m.set(i, q + i, costs.tau_edge);
    }
    for j in 0..q {
        m.set(p + j, j, costs.tau_edge);
        for k in 0..p {
            m.set(p + j, q + k, 0.0);
        }
    }
    hungarian(&m).expect("edge assignment matrix always admits a bijection").cost
}

/// The `(n+m) x (n+m)` matrix of the bipartite heuristic.
///
/// Upper left: vertex substitution plus the optimal incident-edge assignment.
/// Upper right / lower left: deletion / insertion of a vertex and its edges
/// on the diagonal, forbidden elsewhere. Lower right: zeros.
pub fn bp_cost_matrix(g: &Graph, h: &Graph, costs: &EditCosts) -> CostMatrix {
    let (n, m) = (g.vertex_count(), h.vertex_count());
    let mut c = CostMatrix::filled(n + m, FORBIDDEN);
    for i in 0..n {
        for j in 0..m {
            let value = costs.vertex_substitution(g, i, h, j) + incident_edge_cost(g, i, h, j, costs);
            c.set(i, j, value);
        }
        c.set(i, m + i, costs.tau_vertex + g.degree(i) as f64 * costs.tau_edge);
    }
    for j in 0..m {
        c.set(n + j, j, costs.tau_vertex + h.degree(j) as f64 * costs.tau_edge);
        for k in 0..n {
            c.set(n + j, m + k, 0.0);
        }
    }
    c
}

/// The simplified `(n+m) x (n+m)` matrix whose substitution block holds tree
/// distances between the vertices' nodes and whose deletion/insertion
/// entries all equal `tau`.
pub fn ultra_cost_matrix(g_nodes: &[usize], h_nodes: &[usize], tree: &CostTree, tau: f64) -> Result<CostMatrix> {
    let (n, m) = (g_nodes.len(), h_nodes.len());
    let mut c = CostMatrix::filled(n + m, tau);
    for (i, &a) in g_nodes.iter().enumerate() {
        for (j, &b) in h_nodes.iter().enumerate() {
            let d = tree.path_distance(a, b)?;
            if d > tau * (1.0 + 1e-9) {
                return Err(Error::CostModel(format!(
                    "substitution cost {d} of ({i}, {j}) exceeds deletion cost {tau}"
                )));
            }
            c.set(i, j, d);
        }
    }
    for j in 0..m {
        for k in 0..n {
            c.set(n + j, m + k, 0.0);
        }
    }
    Ok(c)
}

/// How many row/column quadruples to inspect.
#[derive(Debug, Clone, Copy)]
pub enum TripleCheck {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

/// Search for a violation of the strong triangle inequality implied by a
/// bipartite cost matrix: any ultrametric on rows and columns must satisfy
/// `c(a,b) <= max(c(a,b'), c(a',b'), c(a',b))`, since the distance between
/// columns `b'` and `b` is bounded through row `a'`. Returns `(a, b, a', b')`.
pub fn strong_triangle_violation(matrix: &CostMatrix, check: TripleCheck) -> Option<(usize, usize, usize, usize)> {
    let n = matrix.order;
    let violates = |a: usize, b: usize, a2: usize, b2: usize| {
        let bound = matrix.get(a, b2).max(matrix.get(a2, b2)).max(matrix.get(a2, b));
        let lhs = matrix.get(a, b);
        lhs > bound && !(lhs.is_finite() && (lhs - bound) <= 1e-9 * lhs.abs())
    };
    match check {
        TripleCheck::Exhaustive => {
            for a in 0..n {
                for b in 0..n {
                    for a2 in 0..n {
                        for b2 in 0..n {
                            if violates(a, b, a2, b2) {
                                return Some((a, b, a2, b2));
                            }
                        }
                    }
                }
            }
            None
        }
        TripleCheck::Sampled { samples, seed } => {
            if n == 0 {
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).find_map(|_| {
                let q = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                violates(q.0, q.1, q.2, q.3).then_some(q)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ged::{EditCosts, VertexCost};
    use itertools_free::permutations;

    mod itertools_free {
        pub fn permutations(n: usize) -> Vec<Vec<usize>> {
            fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
                if prefix.len() == used.len() {
                    out.push(prefix.clone());
                    return;
                }
                for j in 0..used.len() {
                    if !used[j] {
                        used[j] = true;
                        prefix.push(j);
                        rec(prefix, used, out);
                        prefix.pop();
                        used[j] = false;
                    }
                }
            }
            let mut out = Vec::new();
            rec(&mut Vec::new(), &mut vec![false; n], &mut out);
            out
        }
    }

    fn brute_force(m: &CostMatrix) -> f64 {
        permutations(m.order())
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| m.get(i, j)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn small_matrices() {
        let m = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(hungarian(&m).unwrap().cost, 2.0);
        assert_eq!(greedy_rowwise(&m).unwrap().cost, 2.0);
        let m = CostMatrix::from_rows(&[vec![0.0, 9.0, 9.0], vec![9.0, 0.0, 9.0], vec![9.0, 9.0, 0.0]]).unwrap();
        assert_eq!(hungarian(&m).unwrap().cost, 0.0);
    }

    #[test]
    fn greedy_is_myopic() {
        let m = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 100.0]]).unwrap();
        assert_eq!(greedy_rowwise(&m).unwrap().cost, 100.0);
        assert_eq!(hungarian(&m).unwrap().cost, 1.0);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(CostMatrix::new(2, vec![0.0; 3]).is_err());
        assert!(CostMatrix::new(1, vec![-1.0]).is_err());
        assert!(CostMatrix::new(1, vec![f64::NAN]).is_err());
        assert!(CostMatrix::from_rows(&[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn infeasible_matrix() {
        let m = CostMatrix::from_rows(&[vec![1.0, FORBIDDEN], vec![1.0, FORBIDDEN]]).unwrap();
        assert!(matches!(hungarian(&m), Err(Error::Solver(_))));
        assert!(matches!(greedy_rowwise(&m), Err(Error::Solver(_))));
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for order in 1..=7 {
            for _ in 0..20 {
                let entries = (0..order * order).map(|_| rng.gen_range(0..20) as f64).collect();
                let m = CostMatrix::new(order, entries).unwrap();
                let h = hungarian(&m).unwrap();
                assert_eq!(h.cost, brute_force(&m));
                assert!(greedy_rowwise(&m).unwrap().cost >= h.cost);
                let mut cols: Vec<usize> = h.pairs.iter().map(|p| p.1).collect();
                cols.sort();
                assert_eq!(cols, (0..order).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn forbidden_entries_are_avoided() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let order = 6;
            let entries: Vec<f64> = (0..order * order)
                .map(|k| if k % 7 == 0 || rng.gen_bool(0.7) { rng.gen_range(0..10) as f64 } else { FORBIDDEN })
                .collect();
            let m = CostMatrix::new(order, entries).unwrap();
            assert_eq!(hungarian(&m).unwrap().cost, brute_force(&m));
        }
    }

    fn unit_costs() -> EditCosts {
        EditCosts::new(1.0, 1.0, VertexCost::Dirac).unwrap()
    }

    #[test]
    fn bp_singletons_and_deletion_entries() {
        let g = Graph::new(1, vec![]).unwrap().with_vertex_labels(vec![3]).unwrap();
        let c = bp_cost_matrix(&g, &g, &unit_costs());
        assert_eq!(c.get(0, 0), 0.0);

        let star = Graph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let costs = EditCosts::new(0.5, 1.0, VertexCost::Dirac).unwrap();
        let c = bp_cost_matrix(&star, &g, &costs);
        assert_eq!(c.get(0, 1), 0.5 + 2.0);
        assert_eq!(c.get(0, 2), FORBIDDEN);
    }

    #[test]
    fn bp_labelled_pair_by_hand() {
        // G: path 0-1 with labels (1, 2), edge label 5.
        // H: path 0-1-2 with labels (1, 1, 2), edge labels (5, 6).
        let g = Graph::new(2, vec![(0, 1)]).unwrap()
            .with_vertex_labels(vec![1, 2]).unwrap()
            .with_edge_labels(vec![5]).unwrap();
        let h = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap()
            .with_vertex_labels(vec![1, 1, 2]).unwrap()
            .with_edge_labels(vec![5, 6]).unwrap();
        let costs = EditCosts::new(2.0, 0.75, VertexCost::Dirac).unwrap();
        let c = bp_cost_matrix(&g, &h, &costs);
        let f = FORBIDDEN;
        // u0 (deg 1, edge 5) vs v0 (deg 1, edge 5): 0 + 0
        // u0 vs v1 (deg 2, edges 5, 6): 0 + (substitute 5->5, insert 6) = 0.75
        // u0 vs v2 (label 2, deg 1, edge 6): 1 + min(1, 1.5) = 2
        // u1 (label 2, deg 1, edge 5) vs v0: 1 + 0; vs v1: 1 + 0.75; vs v2: 0 + 1
        let expected = [
            [0.0, 0.75, 2.0, 2.75, f],
            [1.0, 1.75, 1.0, f, 2.75],
            [2.75, f, f, 0.0, 0.0],
            [f, 3.5, f, 0.0, 0.0],
            [f, f, 2.75, 0.0, 0.0],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(c.get(i, j), x, "entry ({i}, {j})");
            }
        }
    }

    #[test]
    fn ultra_matrix_layout() {
        let tree = CostTree::from_edges(2, &[(0, 1, 0.5)]).unwrap();
        let c = ultra_cost_matrix(&[1], &[1], &tree, 1.0).unwrap();
        assert_eq!(c, CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        let c = ultra_cost_matrix(&[1, 1], &[], &tree, 1.0).unwrap();
        assert_eq!(c, CostMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap());
        let wide = CostTree::from_edges(3, &[(0, 1, 0.75), (0, 2, 0.75)]).unwrap();
        assert!(matches!(ultra_cost_matrix(&[1], &[2], &wide, 1.0), Err(Error::CostModel(_))));
    }

    #[test]
    fn bp_matrix_breaks_strong_triangle() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let c = bp_cost_matrix(&g, &g, &unit_costs());
        let (a, b, a2, b2) = strong_triangle_violation(&c, TripleCheck::Exhaustive).unwrap();
        assert_eq!(c.get(a, b), FORBIDDEN);
        assert!(c.get(a, b2).max(c.get(a2, b2)).max(c.get(a2, b)).is_finite());
    }
}
