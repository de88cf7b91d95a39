use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treematch::assign::embed;
use treematch::cluster::ClusterConfig;
use treematch::eval::{
    bench_scaling, grid_search, map_pairs, BenchMethod, BenchOptions, DistanceCache, DistanceEngine, EvalOptions,
    GridSpec, Method, MethodSpec, PreparedTree, TreeSpec,
};
use treematch::ged::EditCosts;
use treematch::graph::{stratified_split, Dataset};
use treematch::tudataset::load_tudataset;
use treematch::Error;

/// Graph edit distances through tree-metric assignments.
///
/// Output CSV files have a header row, comma separators and LF line
/// endings. Timings are milliseconds with three decimals.
///
///   dist   g1,g2,distance,millis
///   knn    dataset,method,k,tau_vertex,tau_edge,validation_accuracy,test_accuracy,chosen
///   bench  n,method,mean_ms,stddev_ms
///
/// `embed` writes one block per graph: a `graph <index> <class>` line, then
/// `<edge> <value>` lines for the non-zero coordinates.
#[derive(Parser, Debug)]
#[command(name = "treematch", version, verbatim_doc_comment)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distances between dataset graphs.
    Dist(DistArgs),
    /// k-NN classification with grid search on a stratified split.
    Knn(KnnArgs),
    /// Sparse tree embeddings of every graph.
    Embed(EmbedArgs),
    /// Runtime per pair on random graphs of growing size.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Linear,
    Bp,
    Greedy,
    ExactBf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Linear => Method::Linear,
            MethodArg::Bp => Method::Bp,
            MethodArg::Greedy => Method::Greedy,
            MethodArg::ExactBf => Method::ExactBruteforce,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TreeArg {
    /// Cluster tree for attribute-only data, WL tree otherwise.
    Auto,
    Wl,
    Cluster,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    /// Dataset name, e.g. AIDS; files are read from <data-dir>/<name>/.
    #[arg(long)]
    dataset: String,
    /// Directory holding the datasets.
    #[arg(long, env = "TREEMATCH_DATA")]
    data_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TreeArgs {
    #[arg(long, value_enum, default_value_t = TreeArg::Auto)]
    tree: TreeArg,
    /// Refinement iterations of the WL tree.
    #[arg(long, default_value_t = 7)]
    wl_iterations: usize,
    /// Let edge labels take part in WL refinement.
    #[arg(long)]
    wl_edge_labels: bool,
    /// Leaves of the cluster tree (default 300); implies a cluster tree.
    #[arg(long)]
    leaves: Option<usize>,
}

#[derive(Args, Debug)]
struct DistArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Linear)]
    method: MethodArg,
    #[command(flatten)]
    tree: TreeArgs,
    #[arg(long, default_value_t = 1.0)]
    tau_vertex: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_edge: f64,
    /// File with one `i j` pair of graph indices per line.
    #[arg(long, conflicts_with = "sample")]
    pairs: Option<PathBuf>,
    /// Use this many distinct random pairs instead of all pairs.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Leave the millis column empty so runs compare byte for byte.
    #[arg(long)]
    omit_timings: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KnnArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Linear)]
    method: MethodArg,
    #[command(flatten)]
    tree: TreeArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 3, 5])]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 0.9, 1.3, 1.7])]
    tau_vertex: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 0.9, 1.3, 1.7])]
    tau_edge: Vec<f64>,
    /// Seeds the split and the cluster tree.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for cached distance matrices.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    tree: TreeArgs,
    /// Scales the tree as it would be scaled for this deletion cost.
    #[arg(long, default_value_t = 1.0)]
    tau_vertex: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BenchMethodArg {
    Linear,
    Bp,
    Greedy,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128, 256, 512, 1024, 2048, 4096])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [BenchMethodArg::Linear, BenchMethodArg::Bp])]
    methods: Vec<BenchMethodArg>,
    /// Edge probability of the random graphs.
    #[arg(long, default_value_t = 0.15)]
    p: f64,
    #[arg(long, default_value_t = 7)]
    wl_iterations: usize,
    /// Skip sizes predicted to take longer than this many seconds per pair.
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Errors carry the exit status they map to.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingFile(_) | Error::Argument(_) => Failure::Usage(e.to_string()),
            e => Failure::Runtime(e.into()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Dist(args) => run_dist(args),
        Command::Knn(args) => run_knn(args),
        Command::Embed(args) => run_embed(args),
        Command::Bench(args) => run_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(args: &DatasetArgs) -> CliResult<Dataset> {
    let Some(root) = &args.data_dir else {
        return usage("no dataset directory: pass --data-dir or set TREEMATCH_DATA");
    };
    let dir = root.join(&args.dataset);
    if !dir.is_dir() {
        return usage(format!("dataset directory {} does not exist", dir.display()));
    }
    let started = Instant::now();
    let dataset = load_tudataset(&dir, &args.dataset)?;
    log::info!("loaded {} graphs in {:.3} s", dataset.len(), started.elapsed().as_secs_f64());
    Ok(dataset)
}

fn tree_spec(args: &TreeArgs, dataset: &Dataset, seed: u64) -> CliResult<TreeSpec> {
    let attribute_only = dataset.has_vertex_attributes() && !dataset.has_vertex_labels();
    let cluster = ClusterConfig {
        leaves: args.leaves.unwrap_or(ClusterConfig::default().leaves),
        seed,
        ..ClusterConfig::default()
    };
    let wl = TreeSpec::Wl {
        iterations: args.wl_iterations,
        use_edge_labels: args.wl_edge_labels,
    };
    match (args.tree, args.leaves.is_some()) {
        (TreeArg::Wl, true) => usage("--leaves applies to cluster trees, not --tree wl"),
        (TreeArg::Wl, false) if attribute_only => usage(format!(
            "{} has continuous attributes only; a WL tree would ignore them (use --tree cluster or --leaves)",
            dataset.name()
        )),
        (TreeArg::Wl, false) => Ok(wl),
        (TreeArg::Cluster, _) | (TreeArg::Auto, true) if !dataset.has_vertex_attributes() => {
            usage(format!("{} has no vertex attributes to cluster", dataset.name()))
        }
        (TreeArg::Cluster, _) | (TreeArg::Auto, true) => Ok(TreeSpec::Cluster(cluster)),
        (TreeArg::Auto, false) if attribute_only => Ok(TreeSpec::Cluster(cluster)),
        (TreeArg::Auto, false) => Ok(wl),
    }
}

fn read_pairs(path: &Path, graphs: usize) -> CliResult<Vec<(usize, usize)>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return usage(format!("pairs file {} not found", path.display())),
        Err(e) => return Err(e.into()),
    };
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let parsed: Option<Vec<usize>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some(&[i, j]) if i < graphs && j < graphs => pairs.push((i, j)),
            _ => {
                return usage(format!(
                    "{}:{}: expected two graph indices below {graphs}",
                    path.display(),
                    n + 1
                ))
            }
        }
    }
    Ok(pairs)
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn sample_pairs(n: usize, count: usize, seed: u64) -> CliResult<Vec<(usize, usize)>> {
    let total = n * n.saturating_sub(1) / 2;
    if count > total {
        return usage(format!("cannot sample {count} pairs from {total}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, total, count).into_vec();
    picked.sort_unstable();
    // decode the rank of (i, j), i < j, in row-major order
    let mut out = Vec::with_capacity(count);
    let (mut i, mut row_start) = (0usize, 0usize);
    for r in picked {
        while r >= row_start + (n - 1 - i) {
            row_start += n - 1 - i;
            i += 1;
        }
        out.push((i, i + 1 + r - row_start));
    }
    Ok(out)
}

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_micros() as f64 / 1e3)
}

fn run_dist(args: DistArgs) -> CliResult<()> {
    let dataset = load(&args.data)?;
    let method = Method::from(args.method);
    let tree = tree_spec(&args.tree, &dataset, args.seed)?;
    let spec = MethodSpec::for_dataset(&dataset, method, tree);
    let costs = EditCosts::new(args.tau_vertex, args.tau_edge, spec.vertex_cost)?;
    let pairs = match (&args.pairs, args.sample) {
        (Some(path), _) => read_pairs(path, dataset.len())?,
        (None, Some(count)) => sample_pairs(dataset.len(), count, args.seed)?,
        (None, None) => all_pairs(dataset.len()),
    };
    let prepared = match method {
        Method::Linear => Some(PreparedTree::build(&dataset, tree)?),
        _ => None,
    };
    let engine = DistanceEngine::new(&spec, prepared.as_ref(), costs)?;
    let results = map_pairs(&pairs, args.workers, |i, j| {
        let started = Instant::now();
        let d = engine.distance(&dataset, i, j)?;
        Ok((d, started.elapsed()))
    })?;

    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "g1,g2,distance,millis")?;
    for (&(i, j), (d, t)) in pairs.iter().zip(&results) {
        let millis = if args.omit_timings { String::new() } else { ms(*t) };
        writeln!(out, "{i},{j},{d},{millis}")?;
    }
    out.flush()?;
    Ok(())
}

fn run_knn(args: KnnArgs) -> CliResult<()> {
    let dataset = load(&args.data)?;
    let tree = tree_spec(&args.tree, &dataset, args.seed)?;
    let spec = MethodSpec::for_dataset(&dataset, args.method.into(), tree);
    let split = stratified_split(&dataset, args.seed)?;
    let grid = GridSpec {
        k: args.k,
        tau_vertex: args.tau_vertex,
        tau_edge: args.tau_edge,
    };
    let options = EvalOptions {
        workers: args.workers,
        cache: args.cache.map(DistanceCache::new).transpose()?,
        split_seed: args.seed,
    };
    let report = grid_search(&dataset, &split, &grid, &spec, &options)?;

    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "dataset,method,k,tau_vertex,tau_edge,validation_accuracy,test_accuracy,chosen")?;
    for p in &report.points {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{}",
            report.dataset,
            args.method.to_possible_value().unwrap().get_name(),
            p.k,
            p.tau_vertex,
            p.tau_edge,
            p.validation_correct as f64 / report.validation_size.max(1) as f64,
            p.test_correct as f64 / report.test_size.max(1) as f64,
            u8::from(*p == report.chosen)
        )?;
    }
    out.flush()?;
    eprintln!(
        "chosen k={} tau_vertex={} tau_edge={}: validation {:.4}, test {:.4} (tree {} ms, distances {} ms, classification {} ms)",
        report.chosen.k,
        report.chosen.tau_vertex,
        report.chosen.tau_edge,
        report.validation_accuracy,
        report.test_accuracy,
        ms(report.times.tree),
        ms(report.times.distances),
        ms(report.times.classification),
    );
    Ok(())
}

fn run_embed(args: EmbedArgs) -> CliResult<()> {
    let dataset = load(&args.data)?;
    let tree = tree_spec(&args.tree, &dataset, args.seed)?;
    let costs = EditCosts::new(args.tau_vertex, 1.0, MethodSpec::for_dataset(&dataset, Method::Linear, tree).vertex_cost)?;
    let scaled = PreparedTree::build(&dataset, tree)?.for_tau(costs.tau_vertex)?;
    let mut out = open_output(args.output.as_deref())?;
    for (i, class) in dataset.class_labels().iter().enumerate() {
        let embedding = embed(&scaled.tree, scaled.vertex_nodes(i))?;
        writeln!(out, "graph {i} {class}")?;
        out.write_all(embedding.to_sparse_text().as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn run_bench(args: BenchArgs) -> CliResult<()> {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return usage("--sizes needs positive values");
    }
    if !(0.0..=1.0).contains(&args.p) {
        return usage("--p must lie in [0, 1]");
    }
    let methods: Vec<BenchMethod> = args
        .methods
        .iter()
        .map(|m| match m {
            BenchMethodArg::Linear => BenchMethod::Linear,
            BenchMethodArg::Bp => BenchMethod::Bp,
            BenchMethodArg::Greedy => BenchMethod::Greedy,
        })
        .collect();
    let options = BenchOptions {
        p: args.p,
        reps: args.reps,
        seed: args.seed,
        wl_iterations: args.wl_iterations,
        budget: args.budget_secs.map(Duration::from_secs_f64),
    };
    let rows = bench_scaling(&args.sizes, &methods, &options)?;
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "n,method,mean_ms,stddev_ms")?;
    for r in rows {
        writeln!(out, "{},{},{:.3},{:.3}", r.n, r.method.name(), r.mean_ms, r.stddev_ms)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_pairs_decode_ranks() {
        let n = 7;
        let everything = sample_pairs(n, 21, 3).ok().unwrap();
        assert_eq!(everything, all_pairs(n));
        let some = sample_pairs(n, 5, 3).ok().unwrap();
        assert_eq!(some.len(), 5);
        assert!(some.iter().all(|&(i, j)| i < j && j < n));
        assert!(sample_pairs(n, 22, 3).is_err());
    }
}
