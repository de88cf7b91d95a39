//! Rooted, positively weighted trees representing tree metrics.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_TREE_ID: AtomicU64 = AtomicU64::new(1);

const ULTRAMETRIC_RTOL: f64 = 1e-9;

/// Weighted rooted tree. Node `v != root` is connected to `parent(v)` by an
/// edge of weight `weight(v) > 0`; the child node id doubles as the edge id.
#[derive(Debug, Clone)]
pub struct CostTree {
    id: u64,
    root: usize,
    parent: Vec<usize>,
    weight: Vec<f64>,
    depth: Vec<u32>,
    root_distance: Vec<f64>,
    child_offsets: Vec<usize>,
    children: Vec<usize>,
    bfs: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl CostTree {
    /// Build from parent pointers; exactly one node has no parent.
    /// The weight of the root is ignored.
    pub fn from_parents(parent: Vec<Option<usize>>, weight: Vec<f64>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::arg("tree needs at least one node"));
        }
        if weight.len() != n {
            return Err(Error::arg(format!("{} weights for {n} nodes", weight.len())));
        }
        let mut root = None;
        for (v, p) in parent.iter().enumerate() {
            match p {
                None if root.is_some() => {
                    return Err(Error::arg(format!("nodes {} and {v} both lack a parent", root.unwrap())))
                }
                None => root = Some(v),
                Some(p) if *p >= n => return Err(Error::arg(format!("parent {p} of node {v} out of range"))),
                Some(_) if !(weight[v] > 0.0 && weight[v].is_finite()) => {
                    return Err(Error::arg(format!("edge above node {v} has non-positive weight {}", weight[v])))
                }
                Some(_) => {}
            }
        }
        let root = root.ok_or_else(|| Error::arg("parent pointers contain no root"))?;
        let parent: Vec<usize> = parent.into_iter().map(|p| p.unwrap_or(NONE)).collect();
        let mut weight = weight;
        weight[root] = 0.0;

        let mut counts = vec![0usize; n + 1];
        for &p in &parent {
            if p != NONE {
                counts[p] += 1;
            }
        }
        let mut child_offsets = Vec::with_capacity(n + 1);
        child_offsets.push(0);
        let mut acc = 0;
        for c in counts.iter().take(n) {
            acc += c;
            child_offsets.push(acc);
        }
        let mut cursor = child_offsets.clone();
        let mut children = vec![0usize; acc];
        for (v, &p) in parent.iter().enumerate() {
            if p != NONE {
                children[cursor[p]] = v;
                cursor[p] += 1;
            }
        }

        let mut depth = vec![0u32; n];
        let mut root_distance = vec![0.0; n];
        let mut bfs = Vec::with_capacity(n);
        bfs.push(root);
        let mut head = 0;
        while head < bfs.len() {
            let v = bfs[head];
            head += 1;
            for &c in &children[child_offsets[v]..child_offsets[v + 1]] {
                depth[c] = depth[v] + 1;
                root_distance[c] = root_distance[v] + weight[c];
                bfs.push(c);
            }
        }
        if bfs.len() != n {
            return Err(Error::arg("parent pointers contain a cycle"));
        }

        Ok(CostTree {
            id: NEXT_TREE_ID.fetch_add(1, Ordering::Relaxed),
            root,
            parent,
            weight,
            depth,
            root_distance,
            child_offsets,
            children,
            bfs,
        })
    }

    /// Build from undirected weighted edges, rooted at node 0.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::arg("tree needs at least one node"));
        }
        if edges.len() + 1 != node_count {
            return Err(Error::arg(format!(
                "a tree on {node_count} nodes has {} edges, got {}",
                node_count - 1,
                edges.len()
            )));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); node_count];
        for &(u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::arg(format!("edge ({u}, {v}) out of range")));
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        let mut parent = vec![None; node_count];
        let mut weight = vec![0.0; node_count];
        let mut visited = vec![false; node_count];
        visited[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &(u, w) in &adj[v] {
                if !visited[u] {
                    visited[u] = true;
                    parent[u] = Some(v);
                    weight[u] = w;
                    queue.push_back(u);
                }
            }
        }
        if let Some(v) = visited.iter().position(|x| !x) {
            return Err(Error::arg(format!("node {v} is not connected to node 0")));
        }
        Self::from_parents(parent, weight)
    }

    /// Identity shared by clones; fresh for every constructed tree.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NONE).then_some(p)
    }

    /// Weight of the edge above `v` (0 at the root).
    pub fn weight(&self, v: usize) -> f64 {
        self.weight[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    /// Path length from the root to `v`.
    pub fn root_distance(&self, v: usize) -> f64 {
        self.root_distance[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[self.child_offsets[v]..self.child_offsets[v + 1]]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.child_offsets[v] == self.child_offsets[v + 1]
    }

    /// Nodes in breadth-first order from the root; depths are non-decreasing.
    pub fn bfs_order(&self) -> &[usize] {
        &self.bfs
    }

    fn check(&self, v: usize) -> Result<()> {
        if v >= self.node_count() {
            return Err(Error::arg(format!(
                "node {v} out of range for tree with {} nodes",
                self.node_count()
            )));
        }
        Ok(())
    }

    pub fn lca(&self, a: usize, b: usize) -> Result<usize> {
        self.check(a)?;
        self.check(b)?;
        let (mut a, mut b) = (a, b);
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        Ok(a)
    }

    /// Sum of edge weights on the unique path between `a` and `b`.
    pub fn path_distance(&self, a: usize, b: usize) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let (mut a, mut b) = (a, b);
        let mut total = 0.0;
        while self.depth[a] > self.depth[b] {
            total += self.weight[a];
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            total += self.weight[b];
            b = self.parent[b];
        }
        while a != b {
            total += self.weight[a] + self.weight[b];
            a = self.parent[a];
            b = self.parent[b];
        }
        Ok(total)
    }

    /// Copy with every edge weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<CostTree> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::arg(format!("scale factor {factor} must be positive")));
        }
        let parent = (0..self.node_count()).map(|v| self.parent(v)).collect();
        let weight = self.weight.iter().map(|w| w * factor).collect();
        CostTree::from_parents(parent, weight)
    }

    /// The minimal connected subtree containing `nodes`.
    ///
    /// Each node walks towards the root while its parent is unvisited and no
    /// shallower than the shallowest requested node; the resulting frontier
    /// is then lifted level by level until a single top node remains. Work is
    /// proportional to the size of the result.
    pub fn minimal_subtree(&self, nodes: &[usize]) -> Result<Subtree> {
        if nodes.is_empty() {
            return Err(Error::arg("minimal subtree of an empty node set"));
        }
        for &v in nodes {
            self.check(v)?;
        }
        let min_depth = nodes.iter().map(|&v| self.depth[v]).min().unwrap();
        let mut index: HashMap<usize, usize> = HashMap::with_capacity(nodes.len() * 2);
        let mut members: Vec<usize> = Vec::with_capacity(nodes.len() * 2);
        let mut frontier: Vec<usize> = Vec::new();

        for &start in nodes {
            let mut v = start;
            loop {
                if index.contains_key(&v) {
                    break;
                }
                index.insert(v, members.len());
                members.push(v);
                let p = self.parent[v];
                if p == NONE || index.contains_key(&p) || self.depth[p] < min_depth {
                    if self.depth[v] == min_depth {
                        frontier.push(v);
                    }
                    break;
                }
                v = p;
            }
        }

        while frontier.len() > 1 {
            let mut lifted = Vec::with_capacity(frontier.len());
            for &v in &frontier {
                let p = self.parent[v];
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(p) {
                    e.insert(members.len());
                    members.push(p);
                    lifted.push(p);
                }
            }
            frontier = lifted;
        }
        let top = frontier[0];

        let parent = members
            .iter()
            .map(|&v| (v != top).then(|| index[&self.parent[v]]))
            .collect();
        let weight = members.iter().map(|&v| self.weight[v]).collect();
        Ok(Subtree {
            tree: CostTree::from_parents(parent, weight)?,
            original: members,
            local: index,
        })
    }

    /// Root distance report for `leaves`; ultrametric when all agree within
    /// a relative tolerance of 1e-9.
    pub fn validate_ultrametric(&self, leaves: &[usize]) -> UltrametricReport {
        let valid: Vec<usize> = leaves.iter().copied().filter(|&v| v < self.node_count()).collect();
        let invalid: Vec<usize> = leaves.iter().copied().filter(|&v| v >= self.node_count()).collect();
        let height = valid
            .iter()
            .map(|&v| self.root_distance[v])
            .fold(0.0, f64::max);
        let tol = ULTRAMETRIC_RTOL * height.max(f64::MIN_POSITIVE);
        let offenders: Vec<(usize, f64)> = valid
            .iter()
            .map(|&v| (v, self.root_distance[v]))
            .filter(|&(_, d)| (d - height).abs() > tol)
            .collect();
        UltrametricReport {
            ultrametric: offenders.is_empty() && invalid.is_empty(),
            height,
            offenders,
            invalid,
        }
    }

    /// Attach an extra node `x` under the root so that every leaf in
    /// `leaves` is at distance `tau` from it.
    pub fn attach_epsilon_node(&self, tau: f64, leaves: &[usize], options: EpsilonOptions) -> Result<EpsilonTree> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::arg(format!("deletion cost {tau} must be positive")));
        }
        let report = self.validate_ultrametric(leaves);
        if !report.ultrametric {
            return Err(Error::CostModel(format!(
                "mapped leaves are not equidistant from the root: {report}"
            )));
        }
        let r = report.height;
        let close = (tau - r).abs() <= ULTRAMETRIC_RTOL * tau.max(r);
        let (weight, discrepancy) = if options.literal_weight {
            (tau, Some(r))
        } else if close {
            (options.min_weight, Some(r + options.min_weight - tau))
        } else if tau < r {
            return Err(Error::CostModel(format!(
                "substitution cost exceeds deletion cost: leaf height {r} > tau {tau}"
            )));
        } else {
            (tau - r, None)
        };
        let mut parent: Vec<Option<usize>> = (0..self.node_count()).map(|v| self.parent(v)).collect();
        let mut weights = self.weight.clone();
        parent.push(Some(self.root));
        weights.push(weight);
        let node = self.node_count();
        Ok(EpsilonTree {
            tree: CostTree::from_parents(parent, weights)?,
            node,
            discrepancy,
        })
    }

    /// Line-oriented dump `node parent weight depth`, root first
    /// (the root's parent is written as `-1`).
    pub fn to_debug_text(&self) -> String {
        let mut out = String::new();
        for &v in &self.bfs {
            let parent = self.parent(v).map_or(-1, |p| p as i64);
            writeln!(out, "{v} {parent} {} {}", self.weight[v], self.depth[v]).unwrap();
        }
        out
    }

    pub fn from_debug_text(text: &str) -> Result<CostTree> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || Error::arg(format!("line {}: malformed tree row {line:?}", i + 1));
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let node: usize = f[0].parse().map_err(|_| bad())?;
            let parent: i64 = f[1].parse().map_err(|_| bad())?;
            let weight: f64 = f[2].parse().map_err(|_| bad())?;
            rows.push((node, parent, weight));
        }
        let n = rows.len();
        let mut parent = vec![None; n];
        let mut weight = vec![0.0; n];
        for (node, p, w) in rows {
            if node >= n || (p >= n as i64) {
                return Err(Error::arg(format!("node id {node} or parent {p} out of range")));
            }
            parent[node] = (p >= 0).then_some(p as usize);
            weight[node] = w;
        }
        CostTree::from_parents(parent, weight)
    }
}

/// Result of [`CostTree::minimal_subtree`].
#[derive(Debug, Clone)]
pub struct Subtree {
    pub tree: CostTree,
    /// Original node id of every subtree node.
    pub original: Vec<usize>,
    local: HashMap<usize, usize>,
}

impl Subtree {
    /// Subtree node id for an original node id.
    pub fn local(&self, original: usize) -> Option<usize> {
        self.local.get(&original).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UltrametricReport {
    pub ultrametric: bool,
    /// Largest root distance among the checked leaves.
    pub height: f64,
    /// Leaves whose root distance deviates from `height`.
    pub offenders: Vec<(usize, f64)>,
    pub invalid: Vec<usize>,
}

impl std::fmt::Display for UltrametricReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "height {}", self.height)?;
        for (v, d) in self.offenders.iter().take(5) {
            write!(f, ", leaf {v} at {d}")?;
        }
        if !self.invalid.is_empty() {
            write!(f, ", invalid ids {:?}", self.invalid)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpsilonOptions {
    /// Give the new edge weight `tau` itself instead of `tau - height`.
    pub literal_weight: bool,
    /// Weight used when the leaves already sit at distance `tau` from the root.
    pub min_weight: f64,
}

impl Default for EpsilonOptions {
    fn default() -> Self {
        EpsilonOptions {
            literal_weight: false,
            min_weight: 1e-9,
        }
    }
}

/// A tree extended by the node representing inserted/deleted objects.
#[derive(Debug, Clone)]
pub struct EpsilonTree {
    pub tree: CostTree,
    pub node: usize,
    /// Set when leaf-to-`node` distances differ from the requested cost:
    /// the amount by which they exceed it.
    pub discrepancy: Option<f64>,
}

/// Incremental construction with parents created before children.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
    parent: Vec<Option<usize>>,
    weight: Vec<f64>,
}

impl Default for TreeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl TreeBuilder {
    /// Starts with the root as node 0.
    pub fn new() -> Self {
        TreeBuilder {
            parent: vec![None],
            weight: vec![0.0],
        }
    }

    pub fn add_child(&mut self, parent: usize, weight: f64) -> usize {
        debug_assert!(parent < self.parent.len());
        self.parent.push(Some(parent));
        self.weight.push(weight);
        self.parent.len() - 1
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn build(self) -> Result<CostTree> {
        CostTree::from_parents(self.parent, self.weight)
    }
}
