use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sregular::bounds::{self, BoundsContext};
use sregular::graphs::{construct_deterministic, sample_with_rng, PartitionedGraph, SamplerOptions};
use sregular::matrices::{cell_sum_squares, sample_ensemble, spectral_density_histogram, EnsembleMember, MatrixKind};
use sregular::output::float;
use sregular::quotient::{minimal_cell_sizes, validate_raw, RawQuotientSpec};
use sregular::treewalks::{density_curve, moment_check, walk_recurrence, DensityCurve, DensityOptions, Weights};
use sregular::{catalog, rng, Error, Execution, QuotientSpec};

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  violations found (validate, verify-bounds)
  2  usage error or malformed spec
  3  construction or sampling failed
  4  spectrum assembly or classification failed
  5  tree density failed
  6  bound evaluation failed
  7  file system error";

/// Spectra, sampling and eigenvalue bounds for S-regular graphs.
///
/// A spec is a JSON file `{"S": [[...]], "F": ..., "b": ..., "n": ...}` or a
/// catalog name such as `catalog:two-cell` or `catalog:regular-3`.
#[derive(Debug, Parser)]
#[command(name = "sregular", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a quotient spec and print the validation report as JSON.
    Validate(SpecArgs),
    /// Build one graph deterministically (no randomness).
    Construct(ConstructArgs),
    /// Sample graphs from the configuration model.
    Sample(SampleArgs),
    /// Sample graphs, assemble a matrix and classify its spectrum.
    Spectrum(SpectrumArgs),
    /// Limiting per-cell spectral densities on a grid.
    TreeDensity(TreeDensityArgs),
    /// Evaluate every eigenvalue inequality on sampled graphs.
    VerifyBounds(BoundsArgs),
    /// Full empirical-vs-limit comparison.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Spec JSON file or `catalog:<name>`.
    #[arg(long)]
    spec: String,
}

#[derive(Debug, Args)]
struct SizeArgs {
    /// Cell sizes n_1 .. n_k. Defaults to the sizes in the spec, else the
    /// minimal constructible sizes times `--scale`.
    #[arg(long, num_args = 1..)]
    n: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    scale: usize,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run data-parallel loops on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// `lo:hi:points`. Defaults to a Gershgorin interval with 801 points.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    grid: Option<Grid>,
    /// Decreasing ε schedule for Stieltjes inversion.
    #[arg(long, value_delimiter = ',', default_values_t = sregular::treewalks::DEFAULT_EPSILONS)]
    eps: Vec<f64>,
}

#[derive(Debug, Args)]
struct ConstructArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    sizes: SizeArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    sizes: SizeArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    sizes: SizeArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// adjacency, laplacian, normalized-laplacian or custom.
    #[arg(long, default_value = "adjacency", value_parser = parse_matrix)]
    matrix: MatrixKind,
    /// Histogram bins over the grid interval.
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    grid: Option<Grid>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct TreeDensityArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value = "adjacency", value_parser = parse_matrix)]
    matrix: MatrixKind,
    #[command(flatten)]
    grid: GridArgs,
    /// Highest moment compared against exact walk counts.
    #[arg(long, default_value_t = 8)]
    moments: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    sizes: SizeArgs,
    #[arg(long)]
    seed: u64,
    /// Number of sampled graphs.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Random (B, C) pairs per graph.
    #[arg(long, default_value_t = 10)]
    subsets: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    sizes: SizeArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value = "adjacency", value_parser = parse_matrix)]
    matrix: MatrixKind,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Grid {
    lo: f64,
    hi: f64,
    points: usize,
}

impl Grid {
    fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        (0..self.points).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64).collect()
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, points] = parts.as_slice() else {
        return Err("expected lo:hi:points".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let points: usize = points.parse().map_err(|e| format!("points: {e}"))?;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi || points < 2 {
        return Err("need finite lo < hi and at least 2 points".into());
    }
    Ok(Grid { lo, hi, points })
}

fn parse_matrix(s: &str) -> Result<MatrixKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Violations(String),
    Usage(String),
    Sampling(Error),
    Spectrum(Error),
    TreeDensity(Error),
    Bounds(Error),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violations(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Sampling(_) => 3,
            Failure::Spectrum(_) => 4,
            Failure::TreeDensity(_) => 5,
            Failure::Bounds(_) => 6,
            Failure::Io(_) => 7,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Violations(m) => format!("violations: {m}"),
            Failure::Usage(m) => format!("usage: {m}"),
            Failure::Sampling(e) => format!("sampling: {e}"),
            Failure::Spectrum(e) => format!("spectrum: {e}"),
            Failure::TreeDensity(e) => format!("tree density: {e}"),
            Failure::Bounds(e) => format!("bounds: {e}"),
            Failure::Io(m) => format!("io: {m}"),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn read_raw(arg: &str) -> CliResult<RawQuotientSpec> {
    if let Some(name) = arg.strip_prefix("catalog:") {
        return catalog::by_name(name)
            .map(|s| s.to_raw())
            .ok_or_else(|| Failure::Usage(format!("unknown catalog entry `{name}`")));
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{arg}: malformed spec JSON: {e}")))
}

fn load_spec(arg: &str) -> CliResult<QuotientSpec> {
    let raw = read_raw(arg)?;
    QuotientSpec::try_from(raw).map_err(|e| Failure::Usage(format!("{arg}: {e}")))
}

fn resolve_sizes(spec: &QuotientSpec, sizes: &SizeArgs) -> CliResult<Vec<usize>> {
    if let Some(n) = &sizes.n {
        if n.len() != spec.k() {
            return Err(Failure::Usage(format!("--n needs {} sizes, got {}", spec.k(), n.len())));
        }
        return Ok(n.clone());
    }
    if let Some(n) = spec.sizes() {
        return Ok(n.to_vec());
    }
    if sizes.scale == 0 {
        return Err(Failure::Usage("--scale must be positive".into()));
    }
    let base = minimal_cell_sizes(spec).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(base.into_iter().map(|x| x * sizes.scale).collect())
}

fn exec(out: &OutArgs) -> Execution {
    if out.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn out_dir(out: &OutArgs) -> CliResult<&Path> {
    fs::create_dir_all(&out.out).map_err(io_err(&out.out))?;
    Ok(&out.out)
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// Runs `f` on a fresh file and flushes it.
fn write_file<F>(dir: &Path, name: &str, f: F) -> CliResult
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let mut w = create(dir, name)?;
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult {
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

fn write_graph(dir: &Path, stem: &str, g: &PartitionedGraph) -> CliResult {
    write_file(dir, &format!("{stem}.edges"), |w| g.graph().write_edge_list(w))?;
    let path = dir.join(format!("{stem}.tau.json"));
    let mut w = create(dir, &format!("{stem}.tau.json"))?;
    g.write_tau(&mut w).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    w.flush().map_err(io_err(&path))
}

/// `[min_i (b_i - r_i), max_i (b_i + r_i)]` with `r_i = Σ_j s_ij |F_ij|`,
/// widened by 5% so the support sits strictly inside.
fn gershgorin_grid(spec: &QuotientSpec, points: usize) -> Grid {
    let k = spec.k();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r: f64 =
            (0..k).filter(|&j| spec.s_at(i, j) > 0).map(|j| f64::from(spec.s_at(i, j)) * spec.f()[i][j].abs()).sum();
        lo = lo.min(spec.b()[i] - r);
        hi = hi.max(spec.b()[i] + r);
    }
    let pad = 0.05 * (hi - lo).max(1.0);
    Grid { lo: lo - pad, hi: hi + pad, points }
}

fn cmd_validate(args: &SpecArgs) -> CliResult {
    let raw = read_raw(&args.spec)?;
    let report = validate_raw(&raw);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if report.ok {
        Ok(())
    } else {
        let codes: Vec<&str> = report.violations.iter().map(|v| v.code).collect();
        Err(Failure::Violations(codes.join(", ")))
    }
}

fn cmd_construct(args: &ConstructArgs) -> CliResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = resolve_sizes(&spec, &args.sizes)?;
    let g = construct_deterministic(&spec, &n).map_err(Failure::Sampling)?;
    let dir = out_dir(&args.out)?;
    write_graph(dir, "graph", &g)?;
    eprintln!("constructed {} vertices, {} edges", g.n(), g.graph().edge_count());
    Ok(())
}

fn sample_graphs(
    spec: &QuotientSpec,
    n: &[usize],
    seed: u64,
    trials: usize,
    exec: Execution,
) -> CliResult<Vec<PartitionedGraph>> {
    let opts = SamplerOptions::default();
    exec.try_map_indices(trials, |t| sample_with_rng(spec, n, &mut rng::stream(seed, t as u64), &opts))
        .map_err(Failure::Sampling)
}

fn cmd_sample(args: &SampleArgs) -> CliResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = resolve_sizes(&spec, &args.sizes)?;
    let graphs = sample_graphs(&spec, &n, args.seed, args.trials, exec(&args.out))?;
    let dir = out_dir(&args.out)?;
    for (t, g) in graphs.iter().enumerate() {
        write_graph(dir, &format!("sample_{t:03}"), g)?;
    }
    Ok(())
}

fn ensemble(
    spec: &QuotientSpec,
    n: &[usize],
    kind: MatrixKind,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> CliResult<Vec<EnsembleMember>> {
    sample_ensemble(spec, n, kind, trials, seed, exec).map_err(|e| match e {
        Error::SamplingExhausted { .. } | Error::Constraints { .. } => Failure::Sampling(e),
        other => Failure::Spectrum(other),
    })
}

fn write_spectra(dir: &Path, members: &[EnsembleMember], grid: Grid, bins: usize) -> CliResult<Vec<f64>> {
    write_file(dir, "eigenvalues.csv", |w| {
        writeln!(w, "trial,index,value,class")?;
        for (t, m) in members.iter().enumerate() {
            for (j, &v) in m.spectrum.spectrum.values().iter().enumerate() {
                let class = if m.spectrum.is_s_index(j) { "S" } else { "bulk" };
                writeln!(w, "{t},{j},{},{class}", float(v))?;
            }
        }
        Ok(())
    })?;
    write_file(dir, "cellstats.csv", |w| {
        writeln!(w, "trial,index,lambda,class,cell,raw,scaled,cellsum")?;
        for (t, m) in members.iter().enumerate() {
            let rows = cell_sum_squares(&m.spectrum.spectrum, m.graph.tau(), &m.graph.cell_sizes());
            for r in rows {
                let class = if m.spectrum.is_s_index(r.index) { "S" } else { "bulk" };
                writeln!(
                    w,
                    "{t},{},{},{class},{},{},{},{}",
                    r.index,
                    float(r.lambda),
                    r.cell + 1,
                    float(r.raw),
                    float(r.scaled),
                    float(r.cellsum)
                )?;
            }
        }
        Ok(())
    })?;
    let bulk: Vec<f64> = members.iter().flat_map(|m| m.spectrum.bulk_values()).collect();
    let hist = spectral_density_histogram(&bulk, bins, grid.lo, grid.hi).map_err(|e| Failure::Usage(e.to_string()))?;
    write_file(dir, "histogram.csv", |w| hist.write_csv(w))?;
    Ok(bulk)
}

fn cmd_spectrum(args: &SpectrumArgs) -> CliResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = resolve_sizes(&spec, &args.sizes)?;
    let weighted = args.matrix.weighted(&spec).map_err(Failure::Spectrum)?;
    let grid = args.grid.unwrap_or_else(|| gershgorin_grid(&weighted, 801));
    let members = ensemble(&spec, &n, args.matrix, args.trials, args.seed, exec(&args.out))?;
    let dir = out_dir(&args.out)?;
    write_spectra(dir, &members, grid, args.bins)?;
    Ok(())
}

fn tree_curve(weighted: &QuotientSpec, grid: &GridArgs, exec: Execution) -> CliResult<(Grid, DensityCurve)> {
    let g = grid.grid.unwrap_or_else(|| gershgorin_grid(weighted, 801));
    let opts = DensityOptions { epsilons: grid.eps.clone(), exec };
    let curve = density_curve(weighted, &g.values(), &opts).map_err(|e| match e {
        Error::Argument(m) => Failure::Usage(m),
        other => Failure::TreeDensity(other),
    })?;
    Ok((g, curve))
}

fn write_moments(dir: &Path, weighted: &QuotientSpec, curve: &DensityCurve, l_max: usize) -> CliResult {
    let table = walk_recurrence(weighted, &Weights::float(weighted), l_max);
    let rows = moment_check(curve, &table, l_max);
    write_file(dir, "moments.csv", |w| {
        writeln!(w, "ell,cell,computed,exact,error,relative")?;
        for r in rows {
            let cell = r.cell.map_or("mixture".to_string(), |c| (c + 1).to_string());
            writeln!(w, "{},{cell},{},{},{},{}", r.ell, float(r.computed), float(r.exact), float(r.error), r.relative)?;
        }
        Ok(())
    })
}

fn cmd_tree_density(args: &TreeDensityArgs) -> CliResult {
    let spec = load_spec(&args.spec.spec)?;
    let weighted = args.matrix.weighted(&spec).map_err(Failure::TreeDensity)?;
    let (_, curve) = tree_curve(&weighted, &args.grid, exec(&args.out))?;
    let dir = out_dir(&args.out)?;
    write_file(dir, "density.csv", |w| curve.write_csv(w))?;
    write_moments(dir, &weighted, &curve, args.moments)?;
    if curve.missing_points() > 0 {
        eprintln!("warning: {} grid points failed to converge", curve.missing_points());
    }
    Ok(())
}

fn cmd_verify_bounds(args: &BoundsArgs) -> CliResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = resolve_sizes(&spec, &args.sizes)?;
    let graphs = sample_graphs(&spec, &n, args.seed, args.trials, exec(&args.out))?;
    let per_graph = exec(&args.out).try_map_indices(graphs.len(), |t| {
        let ctx = BoundsContext::new(&graphs[t], &spec)?.with_label(format!("trial={t}"));
        let mut r = rng::stream(args.seed, rng::split(1, t as u64));
        bounds::verify_graph(&ctx, args.subsets, &mut r)
    });
    let reports: Vec<_> = per_graph.map_err(Failure::Bounds)?.into_iter().flatten().collect();
    let dir = out_dir(&args.out)?;
    write_file(dir, "bounds.csv", |w| bounds::write_bounds_csv(&reports, w))?;
    let bad = reports.iter().filter(|r| !r.holds).count();
    eprintln!("{} reports, {bad} violations", reports.len());
    if bad > 0 {
        return Err(Failure::Violations(format!("{bad} bound reports do not hold")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Summary {
    s: Vec<Vec<u32>>,
    n: Vec<usize>,
    matrix: String,
    trials: usize,
    seed: u64,
    bulk_eigenvalues: usize,
    ks_distance: f64,
    lambda_s: f64,
    lambda_b_mean: f64,
    lambda_b_max: f64,
    limit_mass: f64,
    missing_points: usize,
}

fn cmd_report(args: &ReportArgs) -> CliResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = resolve_sizes(&spec, &args.sizes)?;
    let ex = exec(&args.out);
    let members = ensemble(&spec, &n, args.matrix, args.trials, args.seed, ex)?;
    let weighted = args.matrix.weighted(&spec).map_err(Failure::TreeDensity)?;
    let (grid, curve) = tree_curve(&weighted, &args.grid, ex)?;
    let dir = out_dir(&args.out)?;
    let mut bulk = write_spectra(dir, &members, grid, args.bins)?;
    write_file(dir, "density.csv", |w| curve.write_csv(w))?;
    write_moments(dir, &weighted, &curve, 8)?;

    bulk.sort_by(f64::total_cmp);
    let limit_cdf = curve.mixture_cdf();
    let m = bulk.len().max(1) as f64;
    let path = dir.join("comparison.csv");
    let mut w = csv::Writer::from_writer(create(dir, "comparison.csv")?);
    let csv_err = |e: csv::Error| Failure::Io(format!("{}: {e}", path.display()));
    w.write_record(["lambda", "limit_density", "limit_cdf", "empirical_cdf"]).map_err(csv_err)?;
    for (p, &x) in curve.lambda.iter().enumerate() {
        let below = bulk.partition_point(|&v| v <= x) as f64;
        w.write_record([float(x), float(curve.mixture[p]), float(limit_cdf[p]), float(below / m)]).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(&path))?;

    let lambda_b: Vec<f64> = members.iter().map(|m| m.spectrum.lambda_b).collect();
    let summary = Summary {
        s: spec.s().to_vec(),
        n,
        matrix: args.matrix.to_string(),
        trials: args.trials,
        seed: args.seed,
        bulk_eigenvalues: bulk.len(),
        ks_distance: curve.ks_distance(&bulk),
        lambda_s: members.first().map_or(f64::NAN, |m| m.spectrum.lambda_s),
        lambda_b_mean: lambda_b.iter().sum::<f64>() / lambda_b.len().max(1) as f64,
        lambda_b_max: lambda_b.iter().copied().fold(0.0, f64::max),
        limit_mass: curve.mixture_mass(),
        missing_points: curve.missing_points(),
    };
    write_json(dir, "summary.json", &summary)?;
    eprintln!("KS distance {:.4} over {} bulk eigenvalues", summary.ks_distance, summary.bulk_eigenvalues);
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::TreeDensity(a) => cmd_tree_density(a),
        Command::VerifyBounds(a) => cmd_verify_bounds(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
