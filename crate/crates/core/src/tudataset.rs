//! Reader and writer for the TUDataset text format.
//!
//! A dataset `NAME` is a directory holding `NAME_A.txt` (one directed edge
//! `i, j` per line, 1-based global vertex ids), `NAME_graph_indicator.txt`
//! (graph id of global vertex k on line k) and optionally
//! `NAME_graph_labels.txt`, `NAME_node_labels.txt`, `NAME_node_attributes.txt`
//! and `NAME_edge_labels.txt`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph};

struct Lines {
    path: PathBuf,
    rows: Vec<(usize, String)>,
}

impl Lines {
    fn read(path: PathBuf, mandatory: bool) -> Result<Option<Lines>> {
        if !path.exists() {
            return if mandatory {
                Err(Error::MissingFile(path))
            } else {
                Ok(None)
            };
        }
        let text = fs::read_to_string(&path)?;
        let rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim().to_string()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Ok(Some(Lines { path, rows }))
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Format {
            file: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn integers<T: std::str::FromStr>(&self) -> Result<Vec<T>> {
        self.rows
            .iter()
            .map(|(line, text)| {
                // some label files carry several columns; the first one is the label
                let first = text.split(',').next().unwrap_or("").trim();
                first
                    .parse()
                    .map_err(|_| self.error(*line, format!("expected an integer, found {text:?}")))
            })
            .collect()
    }

    fn expect_rows(&self, expected: usize, what: &str) -> Result<()> {
        if self.rows.len() != expected {
            let line = self.rows.last().map_or(1, |r| r.0);
            return Err(self.error(
                line,
                format!("{} rows but {expected} {what}", self.rows.len()),
            ));
        }
        Ok(())
    }
}

fn file(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Load dataset `name` from `dir`.
pub fn load_tudataset(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let edges_file = Lines::read(file(dir, name, "A"), true)?.unwrap();
    let indicator_file = Lines::read(file(dir, name, "graph_indicator"), true)?.unwrap();
    let graph_labels_file = Lines::read(file(dir, name, "graph_labels"), false)?;
    let node_labels_file = Lines::read(file(dir, name, "node_labels"), false)?;
    let attributes_file = Lines::read(file(dir, name, "node_attributes"), false)?;
    let edge_labels_file = Lines::read(file(dir, name, "edge_labels"), false)?;

    let indicator: Vec<usize> = indicator_file.integers()?;
    let total_vertices = indicator.len();
    if let Some(pos) = indicator.iter().position(|&g| g == 0) {
        return Err(indicator_file.error(indicator_file.rows[pos].0, "graph ids are 1-based"));
    }
    let graph_count = indicator.iter().copied().max().unwrap_or(0);
    if graph_count == 0 {
        return Err(indicator_file.error(1, "no vertices"));
    }

    let mut local = Vec::with_capacity(total_vertices);
    let mut sizes = vec![0usize; graph_count];
    for &g in &indicator {
        local.push(sizes[g - 1]);
        sizes[g - 1] += 1;
    }

    let edge_labels: Option<Vec<u32>> = match &edge_labels_file {
        Some(f) => {
            f.expect_rows(edges_file.rows.len(), "edge rows")?;
            Some(f.integers()?)
        }
        None => None,
    };

    // (graph, u, v) with u < v -> (edge index within graph, directions seen)
    let mut seen: HashMap<(usize, usize, usize), (usize, u8)> = HashMap::new();
    let mut graph_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_count];
    let mut graph_edge_labels: Vec<Vec<u32>> = vec![Vec::new(); graph_count];
    let mut self_loops = 0usize;
    let mut repeated = 0usize;
    for (row, (line, text)) in edges_file.rows.iter().enumerate() {
        let mut parts = text.split(',').map(str::trim);
        let mut endpoint = || -> Result<usize> {
            let id: usize = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| edges_file.error(*line, format!("malformed edge row {text:?}")))?;
            if id == 0 || id > total_vertices {
                return Err(edges_file.error(*line, format!("vertex id {id} out of range")));
            }
            Ok(id - 1)
        };
        let a = endpoint()?;
        let b = endpoint()?;
        let (ga, gb) = (indicator[a], indicator[b]);
        if ga != gb {
            return Err(edges_file.error(
                *line,
                format!("edge joins vertex {} of graph {ga} and vertex {} of graph {gb}", a + 1, b + 1),
            ));
        }
        let g = ga - 1;
        let (u, v) = (local[a], local[b]);
        if u == v {
            self_loops += 1;
            continue;
        }
        let direction = if u < v { 1u8 } else { 2u8 };
        let key = (g, u.min(v), u.max(v));
        match seen.get_mut(&key) {
            Some((_, dirs)) => {
                if *dirs & direction != 0 {
                    repeated += 1;
                }
                *dirs |= direction;
            }
            None => {
                seen.insert(key, (graph_edges[g].len(), direction));
                graph_edges[g].push((u, v));
                if let Some(labels) = &edge_labels {
                    graph_edge_labels[g].push(labels[row]);
                }
            }
        }
    }
    let one_directional = seen.values().filter(|(_, d)| *d != 3).count();
    if one_directional > 0 {
        warn!("{name}: {one_directional} edges appear in one direction only");
    }
    if self_loops > 0 {
        warn!("{name}: dropped {self_loops} self-loop rows");
    }
    if repeated > 0 {
        warn!("{name}: ignored {repeated} repeated edge rows");
    }

    let class_labels: Vec<i64> = match &graph_labels_file {
        Some(f) => {
            f.expect_rows(graph_count, "graphs")?;
            f.integers()?
        }
        None => vec![0; graph_count],
    };

    let node_labels: Option<Vec<u32>> = match &node_labels_file {
        Some(f) => {
            f.expect_rows(total_vertices, "vertices")?;
            Some(f.integers()?)
        }
        None => None,
    };

    let attributes: Option<Vec<Vec<f64>>> = match &attributes_file {
        Some(f) => {
            f.expect_rows(total_vertices, "vertices")?;
            let mut out = Vec::with_capacity(total_vertices);
            let mut dim = None;
            for (line, text) in &f.rows {
                let values = text
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| f.error(*line, format!("malformed attribute row {text:?}")))?;
                match dim {
                    None => dim = Some(values.len()),
                    Some(d) if d != values.len() => {
                        return Err(f.error(
                            *line,
                            format!("attribute row has {} values, expected {d}", values.len()),
                        ))
                    }
                    _ => {}
                }
                out.push(values);
            }
            Some(out)
        }
        None => None,
    };

    let mut per_graph_labels: Vec<Vec<u32>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    let mut per_graph_attrs: Vec<Vec<Vec<f64>>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (k, &g) in indicator.iter().enumerate() {
        if let Some(labels) = &node_labels {
            per_graph_labels[g - 1].push(labels[k]);
        }
        if let Some(attrs) = &attributes {
            per_graph_attrs[g - 1].push(attrs[k].clone());
        }
    }

    let mut graphs = Vec::with_capacity(graph_count);
    let parts = graph_edges
        .into_iter()
        .zip(graph_edge_labels)
        .zip(per_graph_labels.into_iter().zip(per_graph_attrs));
    for (g, ((edges, elabels), (vlabels, vattrs))) in parts.enumerate() {
        let mut graph = Graph::new(sizes[g], edges)?;
        if node_labels.is_some() {
            graph = graph.with_vertex_labels(vlabels)?;
        }
        if attributes.is_some() {
            graph = graph.with_vertex_attributes(vattrs)?;
        }
        if edge_labels.is_some() {
            graph = graph.with_edge_labels(elabels)?;
        }
        graphs.push(graph);
    }

    Dataset::new(name, graphs, class_labels)
}

/// Write `dataset` as TUDataset files named `name` into `dir`.
///
/// Every undirected edge is written as two directed rows.
pub fn write_tudataset(dataset: &Dataset, dir: impl AsRef<Path>, name: &str) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let create = |suffix: &str| -> Result<BufWriter<fs::File>> {
        Ok(BufWriter::new(fs::File::create(file(dir, name, suffix))?))
    };

    let mut a = create("A")?;
    let mut indicator = create("graph_indicator")?;
    let mut graph_labels = create("graph_labels")?;
    let mut node_labels = dataset.has_vertex_labels().then(|| create("node_labels")).transpose()?;
    let mut attributes = dataset
        .has_vertex_attributes()
        .then(|| create("node_attributes"))
        .transpose()?;
    let mut edge_labels = dataset.has_edge_labels().then(|| create("edge_labels")).transpose()?;

    let mut offset = 0usize;
    for (gi, (graph, class)) in dataset.graphs().iter().zip(dataset.class_labels()).enumerate() {
        writeln!(graph_labels, "{class}")?;
        for v in 0..graph.vertex_count() {
            writeln!(indicator, "{}", gi + 1)?;
            if let Some(out) = node_labels.as_mut() {
                writeln!(out, "{}", graph.vertex_label(v))?;
            }
            if let Some(out) = attributes.as_mut() {
                let row = graph.vertex_attributes().map(|a| a[v].as_slice()).unwrap_or(&[]);
                let text: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                writeln!(out, "{}", text.join(", "))?;
            }
        }
        for (e, &(u, v)) in graph.edges().iter().enumerate() {
            writeln!(a, "{}, {}", offset + u + 1, offset + v + 1)?;
            writeln!(a, "{}, {}", offset + v + 1, offset + u + 1)?;
            if let Some(out) = edge_labels.as_mut() {
                let l = graph.edge_label(e);
                writeln!(out, "{l}")?;
                writeln!(out, "{l}")?;
            }
        }
        offset += graph.vertex_count();
    }
    a.flush()?;
    indicator.flush()?;
    graph_labels.flush()?;
    for w in [node_labels, attributes, edge_labels].iter_mut().flatten() {
        w.flush()?;
    }
    Ok(())
}
