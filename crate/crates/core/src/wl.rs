//! Weisfeiler-Lehman colour refinement and the tree formed by its hierarchy
//! of vertex partitions.

use std::borrow::Borrow;
use std::collections::HashMap;

use crate::assign::{LeafMap, VertexTree};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tree::CostTree;

/// Injective map from colour signatures to fresh colours, shared by all
/// graphs of one refinement level. Colours are handed out in order of first
/// encounter.
#[derive(Debug, Default, Clone)]
pub struct ColourDictionary {
    colours: HashMap<Box<[u64]>, u32>,
}

impl ColourDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&mut self, key: &[u64]) -> u32 {
        if let Some(&c) = self.colours.get(key) {
            return c;
        }
        let c = self.colours.len() as u32;
        self.colours.insert(key.into(), c);
        c
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlConfig {
    pub iterations: usize,
    pub level_weight: f64,
    /// Pair every neighbour colour with the label of the connecting edge.
    pub use_edge_labels: bool,
}

impl Default for WlConfig {
    fn default() -> Self {
        WlConfig {
            iterations: 7,
            level_weight: 0.5,
            use_edge_labels: false,
        }
    }
}

impl WlConfig {
    /// Level weight chosen so every leaf sits `tau_vertex / 2` below the
    /// root, which caps substitution costs at `tau_vertex`.
    pub fn for_edit_costs(iterations: usize, tau_vertex: f64) -> Self {
        WlConfig {
            iterations,
            level_weight: tau_vertex / (2.0 * (iterations as f64 + 1.0)),
            use_edge_labels: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level_weight > 0.0 && self.level_weight.is_finite()) {
            return Err(Error::arg(format!("level weight must be positive, got {}", self.level_weight)));
        }
        Ok(())
    }
}

/// One refinement step over all graphs with a fresh dictionary.
pub fn refine_step<G: Borrow<Graph>>(
    graphs: &[G],
    colours: &[Vec<u32>],
    dict: &mut ColourDictionary,
    use_edge_labels: bool,
) -> Vec<Vec<u32>> {
    let mut key = Vec::new();
    graphs
        .iter()
        .zip(colours)
        .map(|(g, old)| {
            let g = g.borrow();
            let labelled = use_edge_labels && g.edge_labels().is_some();
            (0..g.vertex_count())
                .map(|v| {
                    key.clear();
                    key.push(u64::from(old[v]));
                    let start = key.len();
                    for (&w, &e) in g.neighbours(v).iter().zip(g.incident_edges(v)) {
                        let c = u64::from(old[w as usize]);
                        key.push(if labelled {
                            (u64::from(g.edge_label(e as usize)) << 32) | c
                        } else {
                            c
                        });
                    }
                    key[start..].sort_unstable();
                    dict.lookup(&key)
                })
                .collect()
        })
        .collect()
}

/// Every vertex maps to the node of its final colour; all such nodes lie
/// `iterations + 1` levels below the root.
pub fn build_wl_tree<G: Borrow<Graph>>(graphs: &[G], config: &WlConfig) -> Result<VertexTree> {
    config.validate()?;
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut weight = vec![0.0];

    let mut initial = ColourDictionary::new();
    let mut colours: Vec<Vec<u32>> = graphs
        .iter()
        .map(|g| {
            let g = g.borrow();
            (0..g.vertex_count())
                .map(|v| initial.lookup(&[u64::from(g.vertex_label(v))]))
                .collect()
        })
        .collect();
    let mut nodes: Vec<usize> = (0..initial.len())
        .map(|_| {
            parent.push(Some(0));
            weight.push(config.level_weight);
            parent.len() - 1
        })
        .collect();
    let mut stable = false;

    for _ in 0..config.iterations {
        if stable {
            // A partition that did not split stays put; only the chain grows.
            for node in nodes.iter_mut() {
                parent.push(Some(*node));
                weight.push(config.level_weight);
                *node = parent.len() - 1;
            }
            continue;
        }
        let mut dict = ColourDictionary::new();
        let next = refine_step(graphs, &colours, &mut dict, config.use_edge_labels);
        let mut next_nodes = vec![usize::MAX; dict.len()];
        for (old, new) in colours.iter().zip(&next) {
            for (&c_old, &c_new) in old.iter().zip(new) {
                let slot = &mut next_nodes[c_new as usize];
                if *slot == usize::MAX {
                    parent.push(Some(nodes[c_old as usize]));
                    weight.push(config.level_weight);
                    *slot = parent.len() - 1;
                }
            }
        }
        stable = next_nodes.len() == nodes.len();
        nodes = next_nodes;
        colours = next;
    }

    let tree = CostTree::from_parents(parent, weight)?;
    let leaves: Vec<usize> = colours.iter().flatten().map(|&c| nodes[c as usize]).collect();
    let counts: Vec<usize> = colours.iter().map(Vec::len).collect();
    VertexTree::new(tree, LeafMap::new(leaves), &counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assign::{assignment_cost, AssignmentInstance};

    fn path(n: usize) -> Graph {
        Graph::new(n, (1..n).map(|v| (v - 1, v)).collect()).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::new(n, (0..n).map(|v| (v, (v + 1) % n)).collect()).unwrap()
    }

    fn refine(graphs: &[Graph], steps: usize) -> Vec<Vec<u32>> {
        let mut colours: Vec<Vec<u32>> = graphs.iter().map(|g| vec![0; g.vertex_count()]).collect();
        for _ in 0..steps {
            colours = refine_step(graphs, &colours, &mut ColourDictionary::new(), false);
        }
        colours
    }

    #[test]
    fn cycles_stay_uniform() {
        let c = refine(&[cycle(7)], 5);
        assert!(c[0].iter().all(|&x| x == c[0][0]));
    }

    #[test]
    fn path_endpoints_share_a_colour() {
        let c = &refine(&[path(3)], 1)[0];
        assert_eq!(c[0], c[2]);
        assert_ne!(c[0], c[1]);
    }

    #[test]
    fn single_level_tree() {
        let g = path(2).with_vertex_labels(vec![0, 1]).unwrap();
        let config = WlConfig {
            iterations: 0,
            ..WlConfig::default()
        };
        let wl = build_wl_tree(&[g], &config).unwrap();
        assert_eq!(wl.tree.node_count(), 3);
        let nodes = wl.vertex_nodes(0);
        assert_eq!(wl.tree.path_distance(nodes[0], nodes[1]).unwrap(), 2.0 * config.level_weight);
    }

    #[test]
    fn triangle_and_path_differ() {
        let graphs = [
            Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap(),
            path(3),
        ];
        let config = WlConfig {
            iterations: 1,
            ..WlConfig::default()
        };
        let wl = build_wl_tree(&graphs, &config).unwrap();
        let instance =
            AssignmentInstance::new(&wl.tree, wl.vertex_nodes(0).to_vec(), wl.vertex_nodes(1).to_vec()).unwrap();
        assert!(assignment_cost(&instance) > 0.0);
    }

    #[test]
    fn permuted_copies_cost_nothing() {
        let g = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (1, 4)]).unwrap();
        // relabel vertex v as 4 - v
        let h = Graph::new(5, g.edges().iter().map(|&(a, b)| (4 - a, 4 - b)).collect()).unwrap();
        let wl = build_wl_tree(&[g, h], &WlConfig::default()).unwrap();
        let instance =
            AssignmentInstance::new(&wl.tree, wl.vertex_nodes(0).to_vec(), wl.vertex_nodes(1).to_vec()).unwrap();
        assert_eq!(assignment_cost(&instance), 0.0);
    }

    #[test]
    fn leaf_distance_counts_differing_levels() {
        let graphs = [path(5), cycle(4)];
        let config = WlConfig {
            iterations: 3,
            ..WlConfig::default()
        };
        let wl = build_wl_tree(&graphs, &config).unwrap();
        assert!(wl.tree.validate_ultrametric(wl.leaves.nodes()).ultrametric);

        // independent oracle: recompute every level and count disagreements
        let mut levels = vec![graphs.iter().map(|g| vec![0u32; g.vertex_count()]).collect::<Vec<_>>()];
        for _ in 0..3 {
            let next = refine_step(&graphs, levels.last().unwrap(), &mut ColourDictionary::new(), false);
            levels.push(next);
        }
        let all: Vec<(usize, usize)> = (0..2).flat_map(|g| (0..graphs[g].vertex_count()).map(move |v| (g, v))).collect();
        let node = |(g, v): (usize, usize)| wl.vertex_nodes(g)[v];
        for &x in &all {
            for &y in &all {
                let differing = levels.iter().filter(|l| l[x.0][x.1] != l[y.0][y.1]).count();
                let d = wl.tree.path_distance(node(x), node(y)).unwrap();
                assert!((d - 2.0 * config.level_weight * differing as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stable_partitions_keep_depth() {
        let wl = build_wl_tree(&[cycle(5)], &WlConfig::default()).unwrap();
        assert_eq!(wl.tree.node_count(), 9);
        assert_eq!(wl.tree.depth(wl.vertex_nodes(0)[0]), 8);
    }

    #[test]
    fn edge_labels_refine_when_enabled() {
        let g = path(3).with_edge_labels(vec![0, 1]).unwrap();
        let mut config = WlConfig {
            iterations: 1,
            ..WlConfig::default()
        };
        let plain = build_wl_tree(&[&g], &config).unwrap();
        assert_eq!(plain.vertex_nodes(0)[0], plain.vertex_nodes(0)[2]);
        config.use_edge_labels = true;
        let labelled = build_wl_tree(&[&g], &config).unwrap();
        assert_ne!(labelled.vertex_nodes(0)[0], labelled.vertex_nodes(0)[2]);
    }

    #[test]
    fn scaled_for_edit_costs() {
        let config = WlConfig::for_edit_costs(7, 3.0);
        let wl = build_wl_tree(&[path(4)], &config).unwrap();
        let leaf = wl.vertex_nodes(0)[0];
        assert!((wl.tree.root_distance(leaf) - 1.5).abs() < 1e-12);
        assert!(WlConfig { level_weight: 0.0, ..config }.validate().is_err());
    }
}
