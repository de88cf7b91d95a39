//! Optimal assignments when pairwise costs are path lengths in a tree.
//!
//! The optimal cost is `sum_e |A_e - B_e| * w(e)` where `A_e`, `B_e` count the
//! objects in the subtree below edge `e`. An optimal bijection is built by
//! processing nodes deepest first: pair as many objects as possible at the
//! node, hand the rest to the parent.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tree::CostTree;

/// Object-to-node map over an object universe `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LeafMap {
    nodes: Vec<usize>,
}

impl LeafMap {
    pub fn new(nodes: Vec<usize>) -> Self {
        LeafMap { nodes }
    }

    pub fn node(&self, object: usize) -> usize {
        self.nodes[object]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self, tree: &CostTree) -> Result<()> {
        match self.nodes.iter().find(|&&v| v >= tree.node_count()) {
            Some(v) => Err(Error::arg(format!("object mapped to missing node {v}"))),
            None => Ok(()),
        }
    }

    /// Tree nodes of the given objects, in order.
    pub fn nodes_of(&self, objects: &[usize]) -> Vec<usize> {
        objects.iter().map(|&o| self.nodes[o]).collect()
    }
}

/// A cost tree built over the vertices of several graphs, with the node of
/// every vertex. Vertices are numbered graph by graph in input order.
#[derive(Debug, Clone)]
pub struct VertexTree {
    pub tree: CostTree,
    pub leaves: LeafMap,
    offsets: Vec<usize>,
}

impl VertexTree {
    /// `vertex_counts[g]` vertices of graph `g` occupy consecutive entries of
    /// `leaves`.
    pub fn new(tree: CostTree, leaves: LeafMap, vertex_counts: &[usize]) -> Result<Self> {
        let mut offsets = Vec::with_capacity(vertex_counts.len() + 1);
        offsets.push(0);
        for &n in vertex_counts {
            offsets.push(offsets.last().unwrap() + n);
        }
        if *offsets.last().unwrap() != leaves.len() {
            return Err(Error::arg("vertex counts do not add up to the leaf map"));
        }
        leaves.validate(&tree)?;
        Ok(VertexTree { tree, leaves, offsets })
    }

    pub fn graph_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn vertex_nodes(&self, graph: usize) -> &[usize] {
        &self.leaves.nodes()[self.offsets[graph]..self.offsets[graph + 1]]
    }

    /// Distance from the root to the mapped leaves (the largest, if they
    /// differ).
    pub fn leaf_height(&self) -> f64 {
        self.leaves
            .nodes()
            .iter()
            .map(|&v| self.tree.root_distance(v))
            .fold(0.0, f64::max)
    }

    /// The same hierarchy with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Ok(VertexTree {
            tree: self.tree.scaled(factor)?,
            leaves: self.leaves.clone(),
            offsets: self.offsets.clone(),
        })
    }
}

/// Two equally sized object sequences placed on the nodes of a cost tree.
/// Objects are identified by their position in `a` or `b`.
#[derive(Debug, Clone)]
pub struct AssignmentInstance<'t> {
    tree: &'t CostTree,
    a: Vec<usize>,
    b: Vec<usize>,
}

impl<'t> AssignmentInstance<'t> {
    pub fn new(tree: &'t CostTree, a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::arg(format!("object sets differ in size: {} vs {}", a.len(), b.len())));
        }
        if let Some(&v) = a.iter().chain(&b).find(|&&v| v >= tree.node_count()) {
            return Err(Error::arg(format!("object placed on missing node {v}")));
        }
        Ok(AssignmentInstance { tree, a, b })
    }

    pub fn from_objects(tree: &'t CostTree, rho: &LeafMap, a: &[usize], b: &[usize]) -> Result<Self> {
        if let Some(&o) = a.iter().chain(b).find(|&&o| o >= rho.len()) {
            return Err(Error::arg(format!("object {o} is not mapped")));
        }
        Self::new(tree, rho.nodes_of(a), rho.nodes_of(b))
    }

    pub fn tree(&self) -> &'t CostTree {
        self.tree
    }

    pub fn a_nodes(&self) -> &[usize] {
        &self.a
    }

    pub fn b_nodes(&self) -> &[usize] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Number of A- and B-objects in the subtree of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideCounts {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

pub fn side_counts(instance: &AssignmentInstance<'_>) -> SideCounts {
    let tree = instance.tree;
    let mut a = vec![0usize; tree.node_count()];
    let mut b = vec![0usize; tree.node_count()];
    for &v in &instance.a {
        a[v] += 1;
    }
    for &v in &instance.b {
        b[v] += 1;
    }
    for &v in tree.bfs_order().iter().rev() {
        if let Some(p) = tree.parent(v) {
            a[p] += a[v];
            b[p] += b[v];
        }
    }
    SideCounts { a, b }
}

/// Cost of an optimal assignment without constructing one.
pub fn assignment_cost(instance: &AssignmentInstance<'_>) -> f64 {
    let tree = instance.tree;
    let counts = side_counts(instance);
    tree.bfs_order()
        .iter()
        .filter(|&&v| v != tree.root())
        .map(|&v| counts.a[v].abs_diff(counts.b[v]) as f64 * tree.weight(v))
        .sum()
}

/// A bijection between A and B given as `(position in A, position in B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Singly linked object lists threaded through a `next` array, so that a
/// node's leftovers can be appended to its parent in constant time.
struct ObjectLists {
    next: Vec<usize>,
    head: Vec<usize>,
    tail: Vec<usize>,
    len: Vec<usize>,
}

const END: usize = usize::MAX;

impl ObjectLists {
    fn new(nodes: usize, placement: &[usize]) -> Self {
        let mut lists = ObjectLists {
            next: vec![END; placement.len()],
            head: vec![END; nodes],
            tail: vec![END; nodes],
            len: vec![0; nodes],
        };
        for (obj, &v) in placement.iter().enumerate() {
            lists.push(v, obj);
        }
        lists
    }

    fn push(&mut self, v: usize, obj: usize) {
        self.next[obj] = END;
        if self.head[v] == END {
            self.head[v] = obj;
        } else {
            self.next[self.tail[v]] = obj;
        }
        self.tail[v] = obj;
        self.len[v] += 1;
    }

    fn pop(&mut self, v: usize) -> usize {
        let obj = self.head[v];
        self.head[v] = self.next[obj];
        if self.head[v] == END {
            self.tail[v] = END;
        }
        self.len[v] -= 1;
        obj
    }

    fn append_to(&mut self, from: usize, to: usize) {
        if self.head[from] == END {
            return;
        }
        if self.head[to] == END {
            self.head[to] = self.head[from];
        } else {
            self.next[self.tail[to]] = self.head[from];
        }
        self.tail[to] = self.tail[from];
        self.len[to] += self.len[from];
        self.head[from] = END;
        self.tail[from] = END;
        self.len[from] = 0;
    }

    fn drain(&mut self, v: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len[v]);
        let mut cur = self.head[v];
        while cur != END {
            out.push(cur);
            cur = self.next[cur];
        }
        self.head[v] = END;
        self.tail[v] = END;
        self.len[v] = 0;
        out
    }
}

/// Optional grouping keys: objects with equal keys that meet at the same
/// node are paired with each other before the remaining ones.
#[derive(Debug, Clone, Copy)]
pub struct PairingKeys<'k> {
    pub a: &'k [u64],
    pub b: &'k [u64],
}

/// Optimal bijection in `O(n + |V(T)|)`.
///
/// Nodes are processed in reverse breadth-first order; objects are taken in
/// first-in-first-out order of arrival at a node.
pub fn construct_assignment(instance: &AssignmentInstance<'_>) -> Assignment {
    construct_with(instance, None)
}

/// Like [`construct_assignment`], but objects with equal keys at a node are
/// paired first. Any choice made at a single node keeps the cost optimal.
pub fn construct_assignment_keyed(instance: &AssignmentInstance<'_>, keys: PairingKeys<'_>) -> Result<Assignment> {
    if keys.a.len() != instance.a.len() || keys.b.len() != instance.b.len() {
        return Err(Error::arg("pairing keys must align with the object sets"));
    }
    Ok(construct_with(instance, Some(keys)))
}

fn construct_with(instance: &AssignmentInstance<'_>, keys: Option<PairingKeys<'_>>) -> Assignment {
    let tree = instance.tree;
    let mut a_lists = ObjectLists::new(tree.node_count(), &instance.a);
    let mut b_lists = ObjectLists::new(tree.node_count(), &instance.b);
    let mut pairs = Vec::with_capacity(instance.len());
    let mut cost = 0.0;

    for &v in tree.bfs_order().iter().rev() {
        if a_lists.len[v] > 0 && b_lists.len[v] > 0 {
            match keys {
                Some(keys) => pair_keyed(v, &mut a_lists, &mut b_lists, keys, &mut pairs),
                None => {
                    while a_lists.len[v] > 0 && b_lists.len[v] > 0 {
                        pairs.push((a_lists.pop(v), b_lists.pop(v)));
                    }
                }
            }
        }
        if let Some(p) = tree.parent(v) {
            let passed = a_lists.len[v] + b_lists.len[v];
            cost += passed as f64 * tree.weight(v);
            a_lists.append_to(v, p);
            b_lists.append_to(v, p);
        }
    }
    debug_assert_eq!(pairs.len(), instance.len());
    Assignment { pairs, cost }
}

fn pair_keyed(
    v: usize,
    a_lists: &mut ObjectLists,
    b_lists: &mut ObjectLists,
    keys: PairingKeys<'_>,
    pairs: &mut Vec<(usize, usize)>,
) {
    let a = a_lists.drain(v);
    let b = b_lists.drain(v);
    // key -> positions in `b`, latest last so that pop() yields arrival order
    let mut by_key: HashMap<u64, Vec<usize>> = HashMap::new();
    for (pos, &obj) in b.iter().enumerate().rev() {
        by_key.entry(keys.b[obj]).or_default().push(pos);
    }
    let mut used_b = vec![false; b.len()];
    let mut rest_a = Vec::new();
    for &obj in &a {
        match by_key.get_mut(&keys.a[obj]).and_then(Vec::pop) {
            Some(pos) => {
                used_b[pos] = true;
                pairs.push((obj, b[pos]));
            }
            None => rest_a.push(obj),
        }
    }
    let rest_b: Vec<usize> = b.iter().zip(&used_b).filter(|(_, &u)| !u).map(|(&o, _)| o).collect();
    let k = rest_a.len().min(rest_b.len());
    pairs.extend(rest_a[..k].iter().copied().zip(rest_b[..k].iter().copied()));
    for &obj in &rest_a[k..] {
        a_lists.push(v, obj);
    }
    for &obj in &rest_b[k..] {
        b_lists.push(v, obj);
    }
}

/// Construct on the minimal subtree spanning the populated nodes only.
pub fn construct_assignment_pruned(instance: &AssignmentInstance<'_>) -> Assignment {
    with_pruned(instance, construct_assignment)
}

pub fn construct_assignment_pruned_keyed(
    instance: &AssignmentInstance<'_>,
    keys: PairingKeys<'_>,
) -> Result<Assignment> {
    if keys.a.len() != instance.a.len() || keys.b.len() != instance.b.len() {
        return Err(Error::arg("pairing keys must align with the object sets"));
    }
    Ok(with_pruned(instance, |sub| construct_with(sub, Some(keys))))
}

fn with_pruned(instance: &AssignmentInstance<'_>, run: impl FnOnce(&AssignmentInstance<'_>) -> Assignment) -> Assignment {
    if instance.is_empty() {
        return Assignment { pairs: Vec::new(), cost: 0.0 };
    }
    let mut populated: Vec<usize> = instance.a.iter().chain(&instance.b).copied().collect();
    populated.sort_unstable();
    populated.dedup();
    let sub = instance
        .tree
        .minimal_subtree(&populated)
        .expect("populated nodes are valid and non-empty");
    let local = |nodes: &[usize]| -> Vec<usize> { nodes.iter().map(|&v| sub.local(v).unwrap()).collect() };
    let inner = AssignmentInstance {
        tree: &sub.tree,
        a: local(&instance.a),
        b: local(&instance.b),
    };
    run(&inner)
}

/// Sparse vector indexed by tree edges (child node ids).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEmbedding {
    tree_id: u64,
    entries: Vec<(usize, f64)>,
}

impl SparseEmbedding {
    pub fn tree_id(&self) -> u64 {
        self.tree_id
    }

    /// Non-zero components sorted by edge id.
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, edge: usize) -> f64 {
        self.entries
            .binary_search_by_key(&edge, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// `edge_id value` lines, sorted by edge id.
    pub fn to_sparse_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for (e, x) in &self.entries {
            writeln!(out, "{e} {x}").unwrap();
        }
        out
    }
}

/// Embedding whose component for the edge above `v` is
/// (#objects in the subtree of `v`) * w(v).
pub fn embed(tree: &CostTree, nodes: &[usize]) -> Result<SparseEmbedding> {
    if let Some(&v) = nodes.iter().find(|&&v| v >= tree.node_count()) {
        return Err(Error::arg(format!("object placed on missing node {v}")));
    }
    let mut at_node: HashMap<usize, usize> = HashMap::new();
    for &v in nodes {
        *at_node.entry(v).or_default() += 1;
    }
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for (&start, &count) in &at_node {
        let mut v = start;
        while let Some(p) = tree.parent(v) {
            *counts.entry(v).or_default() += count;
            v = p;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(v, c)| (v, c as f64 * tree.weight(v)))
        .collect();
    entries.sort_unstable_by_key(|e| e.0);
    Ok(SparseEmbedding {
        tree_id: tree.id(),
        entries,
    })
}

/// Manhattan distance between two embeddings over the same tree.
pub fn l1_distance(x: &SparseEmbedding, y: &SparseEmbedding) -> Result<f64> {
    if x.tree_id != y.tree_id {
        return Err(Error::arg("embeddings were computed over different trees"));
    }
    let (xs, ys) = (&x.entries, &y.entries);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i < xs.len() || j < ys.len() {
        let xe = xs.get(i).map_or(usize::MAX, |e| e.0);
        let ye = ys.get(j).map_or(usize::MAX, |e| e.0);
        if xe == ye {
            total += (xs[i].1 - ys[j].1).abs();
            i += 1;
            j += 1;
        } else if xe < ye {
            total += xs[i].1.abs();
            i += 1;
        } else {
            total += ys[j].1.abs();
            j += 1;
        }
    }
    Ok(total)
}
