//! Nearest-neighbour classification under edit distances, grid search over
//! the edit costs, and runtime scaling on random graphs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::assign::VertexTree;
use crate::cluster::{build_cluster_tree, ClusterConfig};
use crate::error::{Error, Result};
use crate::ged::{approx_ged_matrix, exact_ged_bruteforce, EditCosts, LinearGed, MatrixSolver, VertexCost};
use crate::graph::{random_gnp, Dataset, Graph, Split};
use crate::wl::{build_wl_tree, WlConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Linear,
    Bp,
    Greedy,
    ExactBruteforce,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::Bp => "bp",
            Method::Greedy => "greedy",
            Method::ExactBruteforce => "exact-bf",
        }
    }
}

/// Which hierarchy the linear method runs on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeSpec {
    Wl { iterations: usize, use_edge_labels: bool },
    Cluster(ClusterConfig),
}

impl TreeSpec {
    /// WL trees for labelled (or plain) graphs, cluster trees for graphs
    /// that carry only continuous attributes.
    pub fn auto(dataset: &Dataset, iterations: usize, cluster: ClusterConfig) -> Self {
        if dataset.has_vertex_attributes() && !dataset.has_vertex_labels() {
            TreeSpec::Cluster(cluster)
        } else {
            TreeSpec::Wl {
                iterations,
                use_edge_labels: false,
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            TreeSpec::Wl {
                iterations,
                use_edge_labels,
            } => format!("wl,h={iterations},edge_labels={use_edge_labels}"),
            TreeSpec::Cluster(c) => format!("cluster,l={},seed={}", c.leaves, c.seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub tree: TreeSpec,
    pub vertex_cost: VertexCost,
}

impl MethodSpec {
    /// Euclidean substitution for attribute-only datasets, Dirac otherwise.
    pub fn for_dataset(dataset: &Dataset, method: Method, tree: TreeSpec) -> Self {
        let vertex_cost = if dataset.has_vertex_attributes() && !dataset.has_vertex_labels() {
            VertexCost::Euclidean
        } else {
            VertexCost::Dirac
        };
        MethodSpec {
            method,
            tree,
            vertex_cost,
        }
    }

    fn describe(&self) -> String {
        match self.method {
            Method::Linear => format!("{},{}", self.method.name(), self.tree.describe()),
            m => m.name().to_string(),
        }
    }
}

/// Tree built once per dataset with unit scale; rescaled per edit cost.
#[derive(Debug, Clone)]
pub struct PreparedTree {
    base: VertexTree,
    spec: TreeSpec,
}

impl PreparedTree {
    pub fn build(dataset: &Dataset, spec: TreeSpec) -> Result<Self> {
        let base = match spec {
            TreeSpec::Wl {
                iterations,
                use_edge_labels,
            } => {
                let config = WlConfig {
                    iterations,
                    level_weight: 1.0,
                    use_edge_labels,
                };
                build_wl_tree(dataset.graphs(), &config)?
            }
            TreeSpec::Cluster(config) => build_cluster_tree(dataset.graphs(), &config)?,
        };
        Ok(PreparedTree { base, spec })
    }

    pub fn base(&self) -> &VertexTree {
        &self.base
    }

    /// The hierarchy scaled so mapped leaves sit `tau_vertex / 2` below the
    /// root. A tree of height zero is returned unchanged.
    pub fn for_tau(&self, tau_vertex: f64) -> Result<VertexTree> {
        let height = match self.spec {
            TreeSpec::Wl { iterations, .. } => iterations as f64 + 1.0,
            TreeSpec::Cluster(_) => self.base.leaf_height(),
        };
        if height > 0.0 {
            self.base.scaled(tau_vertex / (2.0 * height))
        } else {
            Ok(self.base.clone())
        }
    }
}

/// Everything needed to price a pair of dataset graphs at one grid point.
#[derive(Debug, Clone)]
pub struct DistanceEngine {
    costs: EditCosts,
    kind: EngineKind,
}

#[derive(Debug, Clone)]
enum EngineKind {
    Linear { tree: Box<VertexTree>, ged: Box<LinearGed> },
    Matrix(MatrixSolver),
    Exact,
}

impl DistanceEngine {
    pub fn new(spec: &MethodSpec, tree: Option<&PreparedTree>, costs: EditCosts) -> Result<Self> {
        let kind = match spec.method {
            Method::Linear => {
                let prepared = tree.ok_or_else(|| Error::arg("the linear method needs a prepared tree"))?;
                let tree = prepared.for_tau(costs.tau_vertex)?;
                let ged = LinearGed::new(&tree.tree, tree.leaves.nodes(), costs)?;
                EngineKind::Linear { tree: Box::new(tree), ged: Box::new(ged) }
            }
            Method::Bp => EngineKind::Matrix(MatrixSolver::Hungarian),
            Method::Greedy => EngineKind::Matrix(MatrixSolver::Greedy),
            Method::ExactBruteforce => EngineKind::Exact,
        };
        Ok(DistanceEngine { costs, kind })
    }

    pub fn costs(&self) -> &EditCosts {
        &self.costs
    }

    pub fn distance(&self, dataset: &Dataset, i: usize, j: usize) -> Result<f64> {
        let (g, h) = (&dataset.graphs()[i], &dataset.graphs()[j]);
        match &self.kind {
            EngineKind::Linear { tree, ged } => Ok(ged.distance(g, tree.vertex_nodes(i), h, tree.vertex_nodes(j))?.cost),
            EngineKind::Matrix(solver) => Ok(approx_ged_matrix(g, h, &self.costs, *solver)?.cost),
            EngineKind::Exact => exact_ged_bruteforce(g, h, &self.costs),
        }
    }
}

/// Row-major `rows.len() x cols.len()` matrix of distances, computed on
/// `workers` threads (all available cores when `None`). The result does not
/// depend on the number of workers.
pub fn distance_matrix(
    dataset: &Dataset,
    engine: &DistanceEngine,
    rows: &[usize],
    cols: &[usize],
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    let pairs: Vec<(usize, usize)> = rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).collect();
    map_pairs(&pairs, workers, |i, j| engine.distance(dataset, i, j))
}

/// Evaluate `f` on every pair, in parallel, keeping input order.
pub fn map_pairs<T, F>(pairs: &[(usize, usize)], workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    let run = || pairs.par_iter().map(|&(i, j)| f(i, j)).collect::<Result<Vec<T>>>();
    match workers {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(run),
    }
}

/// Majority class among the `k` nearest training graphs.
///
/// Equal distances are ordered by training index. A tied vote goes to the
/// class whose voters have the smaller summed distance, then to the smaller
/// class id.
pub fn knn_predict<F>(train: &[usize], classes: &[i64], k: usize, mut distance: F) -> Result<i64>
where
    F: FnMut(usize) -> Result<f64>,
{
    if train.is_empty() {
        return Err(Error::arg("empty training set"));
    }
    if k == 0 || k > train.len() {
        return Err(Error::arg(format!("k = {k} needs 1..={} training graphs", train.len())));
    }
    let mut neighbours = train
        .iter()
        .map(|&t| Ok((distance(t)?, t)))
        .collect::<Result<Vec<(f64, usize)>>>()?;
    Ok(vote(&mut neighbours, classes, k))
}

fn vote(neighbours: &mut [(f64, usize)], classes: &[i64], k: usize) -> i64 {
    neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut tally: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
    for &(d, t) in &neighbours[..k] {
        let entry = tally.entry(classes[t]).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += d;
    }
    // BTreeMap iterates by class id, so `min_by` keeps the smaller id on ties.
    tally
        .into_iter()
        .min_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.total_cmp(&b.1 .1)))
        .map(|(c, _)| c)
        .unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub k: Vec<usize>,
    pub tau_vertex: Vec<f64>,
    pub tau_edge: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let taus = vec![0.1, 0.5, 0.9, 1.3, 1.7];
        GridSpec {
            k: vec![1, 3, 5],
            tau_vertex: taus.clone(),
            tau_edge: taus,
        }
    }
}

impl GridSpec {
    pub fn single(k: usize, tau_vertex: f64, tau_edge: f64) -> Self {
        GridSpec {
            k: vec![k],
            tau_vertex: vec![tau_vertex],
            tau_edge: vec![tau_edge],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.tau_vertex.is_empty() || self.tau_edge.is_empty() {
            return Err(Error::arg("every grid dimension needs at least one value"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub k: usize,
    pub tau_vertex: f64,
    pub tau_edge: f64,
    pub validation_correct: usize,
    pub test_correct: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimes {
    pub tree: Duration,
    pub distances: Duration,
    pub classification: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub method: String,
    pub chosen: GridPoint,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    /// Every evaluated grid point in enumeration order.
    pub points: Vec<GridPoint>,
    pub validation_size: usize,
    pub test_size: usize,
    pub times: PhaseTimes,
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub workers: Option<usize>,
    pub cache: Option<DistanceCache>,
    /// Recorded in cache keys so matrices of different splits never mix.
    pub split_seed: u64,
}

/// Pick `k` and the edit costs on the validation graphs, then classify the
/// test graphs with the chosen parameters. Training graphs are the
/// reference set in both phases.
pub fn grid_search(
    dataset: &Dataset,
    split: &Split,
    grid: &GridSpec,
    spec: &MethodSpec,
    options: &EvalOptions,
) -> Result<EvalReport> {
    grid.validate()?;
    let mut times = PhaseTimes::default();
    let started = Instant::now();
    let prepared = match spec.method {
        Method::Linear => Some(PreparedTree::build(dataset, spec.tree)?),
        _ => None,
    };
    times.tree = started.elapsed();

    let queries: Vec<usize> = split.validation.iter().chain(&split.test).copied().collect();
    let classes = dataset.class_labels();
    let mut points = Vec::new();
    for &tau_vertex in &grid.tau_vertex {
        for &tau_edge in &grid.tau_edge {
            let costs = EditCosts::new(tau_vertex, tau_edge, spec.vertex_cost)?;
            let started = Instant::now();
            let params = format!("{},tv={tau_vertex},te={tau_edge},split={}", spec.describe(), options.split_seed);
            let cached = match &options.cache {
                Some(cache) => cache.load(dataset.name(), spec.method.name(), &params, queries.len(), split.train.len())?,
                None => None,
            };
            let matrix = match cached {
                Some(m) => m,
                None => {
                    let engine = DistanceEngine::new(spec, prepared.as_ref(), costs)?;
                    let m = distance_matrix(dataset, &engine, &queries, &split.train, options.workers)?;
                    if let Some(cache) = &options.cache {
                        cache.store(dataset.name(), spec.method.name(), &params, queries.len(), split.train.len(), &m)?;
                    }
                    m
                }
            };
            times.distances += started.elapsed();

            let started = Instant::now();
            let width = split.train.len();
            for &k in &grid.k {
                let mut correct = [0usize; 2];
                for (q, &query) in queries.iter().enumerate() {
                    let row = &matrix[q * width..(q + 1) * width];
                    let predicted = knn_predict(&split.train, classes, k, |t| {
                        let pos = split.train.binary_search(&t).expect("training index");
                        Ok(row[pos])
                    })?;
                    if predicted == classes[query] {
                        correct[usize::from(q >= split.validation.len())] += 1;
                    }
                }
                points.push(GridPoint {
                    k,
                    tau_vertex,
                    tau_edge,
                    validation_correct: correct[0],
                    test_correct: correct[1],
                });
            }
            times.classification += started.elapsed();
        }
    }

    let chosen = *points
        .iter()
        .min_by(|a, b| {
            b.validation_correct
                .cmp(&a.validation_correct)
                .then(a.k.cmp(&b.k))
                .then(a.tau_vertex.total_cmp(&b.tau_vertex))
                .then(a.tau_edge.total_cmp(&b.tau_edge))
        })
        .unwrap();
    let ratio = |correct: usize, total: usize| if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    Ok(EvalReport {
        dataset: dataset.name().to_string(),
        method: spec.describe(),
        validation_accuracy: ratio(chosen.validation_correct, split.validation.len()),
        test_accuracy: ratio(chosen.test_correct, split.test.len()),
        chosen,
        points,
        validation_size: split.validation.len(),
        test_size: split.test.len(),
        times,
    })
}

/// Text dumps of distance matrices. Each file starts with the line
/// `dataset method params rows cols`, followed by one line per row.
#[derive(Debug, Clone)]
pub struct DistanceCache {
    dir: PathBuf,
}

impl DistanceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DistanceCache { dir })
    }

    fn path(&self, dataset: &str, method: &str, params: &str) -> PathBuf {
        let clean: String = format!("{dataset}_{method}_{params}")
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "._-=".contains(c) { c } else { '_' })
            .collect();
        self.dir.join(format!("{clean}.txt"))
    }

    fn header(dataset: &str, method: &str, params: &str, rows: usize, cols: usize) -> String {
        let field = |s: &str| s.replace(char::is_whitespace, "_");
        format!("{} {} {} {rows} {cols}", field(dataset), field(method), field(params))
    }

    /// The stored matrix, or `None` when missing or written for another
    /// shape or key.
    pub fn load(&self, dataset: &str, method: &str, params: &str, rows: usize, cols: usize) -> Result<Option<Vec<f64>>> {
        let path = self.path(dataset, method, params);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut lines = BufReader::new(file).lines();
        let expected = Self::header(dataset, method, params, rows, cols);
        if lines.next().transpose()?.as_deref() != Some(expected.as_str()) {
            return Ok(None);
        }
        let mut values = Vec::with_capacity(rows * cols);
        for (n, line) in lines.enumerate() {
            let line = line?;
            for token in line.split_ascii_whitespace() {
                values.push(token.parse::<f64>().map_err(|e| Error::Format {
                    file: path.clone(),
                    line: n + 2,
                    message: e.to_string(),
                })?);
            }
        }
        Ok((values.len() == rows * cols).then_some(values))
    }

    pub fn store(&self, dataset: &str, method: &str, params: &str, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
        if values.len() != rows * cols {
            return Err(Error::arg("matrix size does not match its shape"));
        }
        let path = self.path(dataset, method, params);
        let mut out = BufWriter::new(fs::File::create(&path)?);
        writeln!(out, "{}", Self::header(dataset, method, params, rows, cols))?;
        for row in values.chunks(cols.max(1)) {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Linear,
    Bp,
    Greedy,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Linear => "linear",
            BenchMethod::Bp => "bp",
            BenchMethod::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub p: f64,
    pub reps: usize,
    pub seed: u64,
    pub wl_iterations: usize,
    /// Skip a size when the previous size extrapolates beyond this budget.
    pub budget: Option<Duration>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            p: 0.15,
            reps: 3,
            seed: 0,
            wl_iterations: 7,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub method: BenchMethod,
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub reps: usize,
}

/// Time one distance computation between two random graphs with unit edit
/// costs. Linear timings include building the WL tree.
pub fn time_pair(method: BenchMethod, g: &Graph, h: &Graph, wl_iterations: usize) -> Result<Duration> {
    let costs = EditCosts::new(1.0, 1.0, VertexCost::Dirac)?;
    let started = Instant::now();
    match method {
        BenchMethod::Linear => {
            let wl = build_wl_tree(&[g, h], &WlConfig::for_edit_costs(wl_iterations, 1.0))?;
            let ged = LinearGed::new(&wl.tree, wl.leaves.nodes(), costs)?;
            std::hint::black_box(ged.distance(g, wl.vertex_nodes(0), h, wl.vertex_nodes(1))?);
        }
        BenchMethod::Bp => {
            std::hint::black_box(approx_ged_matrix(g, h, &costs, MatrixSolver::Hungarian)?);
        }
        BenchMethod::Greedy => {
            std::hint::black_box(approx_ged_matrix(g, h, &costs, MatrixSolver::Greedy)?);
        }
    }
    Ok(started.elapsed())
}

/// Mean and standard deviation of the time per pair over `reps` random
/// `G(n, p)` pairs for every size and method.
pub fn bench_scaling(sizes: &[usize], methods: &[BenchMethod], options: &BenchOptions) -> Result<Vec<BenchRow>> {
    if sizes.contains(&0) || options.reps == 0 {
        return Err(Error::arg("sizes and repetitions must be positive"));
    }
    let mut rows = Vec::new();
    let mut last: Vec<Option<(usize, f64)>> = vec![None; methods.len()];
    for &n in sizes {
        let pairs: Vec<(Graph, Graph)> = (0..options.reps as u64)
            .map(|rep| {
                let seed = options.seed ^ ((n as u64) << 20) ^ (rep << 1);
                Ok((random_gnp(n, options.p, seed, 1)?, random_gnp(n, options.p, seed | 1, 1)?))
            })
            .collect::<Result<_>>()?;
        for (m, &method) in methods.iter().enumerate() {
            if let (Some(budget), Some((prev_n, prev_ms))) = (options.budget, last[m]) {
                let exponent = if method == BenchMethod::Linear { 2.0 } else { 3.0 };
                let predicted = prev_ms * (n as f64 / prev_n as f64).powf(exponent);
                if predicted > budget.as_secs_f64() * 1e3 {
                    log::info!("skipping {} at n = {n}: predicted {predicted:.0} ms", method.name());
                    continue;
                }
            }
            let samples = pairs
                .iter()
                .map(|(g, h)| Ok(time_pair(method, g, h, options.wl_iterations)?.as_secs_f64() * 1e3))
                .collect::<Result<Vec<f64>>>()?;
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            let stddev = if samples.len() > 1 {
                (samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            last[m] = Some((n, mean));
            rows.push(BenchRow {
                n,
                method,
                mean_ms: mean,
                stddev_ms: stddev,
                reps: samples.len(),
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_copy_wins() {
        let classes = [0, 1, 2];
        let d = [3.0, 0.0, 1.0];
        assert_eq!(knn_predict(&[0, 1, 2], &classes, 1, |t| Ok(d[t])).unwrap(), 1);
    }

    #[test]
    fn majority_vote() {
        let classes = [7, 7, 9, 9];
        let d = [1.0, 2.0, 0.5, 9.0];
        assert_eq!(knn_predict(&[0, 1, 2, 3], &classes, 3, |t| Ok(d[t])).unwrap(), 7);
    }

    #[test]
    fn tied_votes() {
        // one vote each; class 5 is nearer
        let classes = [5, 3];
        let d = [1.0, 2.0];
        assert_eq!(knn_predict(&[0, 1], &classes, 2, |t| Ok(d[t])).unwrap(), 5);
        // equal sums: smaller class id
        let d = [1.0, 1.0];
        assert_eq!(knn_predict(&[0, 1], &classes, 2, |t| Ok(d[t])).unwrap(), 3);
        // equal distances at the cut: smaller training index enters
        let classes = [4, 2, 2];
        assert_eq!(knn_predict(&[0, 1, 2], &[0, 8, 2], 1, |t| Ok([2.0, 1.0, 1.0][t])).unwrap(), 8);
        let d = [0.0, 1.0, 1.0];
        assert_eq!(knn_predict(&[0, 1, 2], &classes, 3, |t| Ok(d[t])).unwrap(), 2);
    }

    #[test]
    fn knn_arguments() {
        assert!(knn_predict(&[], &[], 1, |_| Ok(0.0)).is_err());
        assert!(knn_predict(&[0], &[1], 2, |_| Ok(0.0)).is_err());
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 3.0 * (i as f64).powi(2))).collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_none());
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DistanceCache::new(dir.path()).unwrap();
        let values = [0.1, 2.0, 1.0 / 3.0, 4e-12, 5.5, 6.0];
        cache.store("toy", "bp", "tv=1 te=1", 2, 3, &values).unwrap();
        assert_eq!(cache.load("toy", "bp", "tv=1 te=1", 2, 3).unwrap().unwrap(), values);
        assert!(cache.load("toy", "bp", "tv=1 te=1", 3, 2).unwrap().is_none());
        assert!(cache.load("toy", "linear", "tv=1 te=1", 2, 3).unwrap().is_none());
        let file = fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
        let first = fs::read_to_string(file).unwrap().lines().next().unwrap().to_string();
        assert_eq!(first, "toy bp tv=1_te=1 2 3");
    }

    #[test]
    fn one_row_per_method() {
        let rows = bench_scaling(
            &[10],
            &[BenchMethod::Linear, BenchMethod::Bp],
            &BenchOptions {
                reps: 1,
                ..BenchOptions::default()
            },
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.mean_ms > 0.0 && r.stddev_ms == 0.0));
    }
}
