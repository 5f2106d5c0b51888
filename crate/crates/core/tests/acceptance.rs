//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 5 tests a conjectured eigenvector statistic; it is reported but
//! does not fail the run. Every other criterion is required.

use std::time::{Duration, Instant};

use num::Complex;
use rand::Rng;
use sregular::bounds::{self, BoundsContext};
use sregular::catalog;
use sregular::graphs::{cycle_scaling_experiment, sample_with_rng, SamplerOptions};
use sregular::matrices::{cell_sum_squares, j_matrix_check, sample_ensemble, EnsembleMember, MatrixKind};
use sregular::rng;
use sregular::treewalks::{
    brute_force_tree_walks_upto, density_curve, moment_check, stieltjes, walk_recurrence, DensityCurve, DensityOptions,
    GfEvaluator, Weights,
};
use sregular::{Execution, QuotientSpec};

type C = Complex<f64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

fn kesten_mckay(d: f64, x: f64) -> f64 {
    let r = 4.0 * (d - 1.0) - x * x;
    if r <= 0.0 {
        0.0
    } else {
        d * r.sqrt() / (2.0 * std::f64::consts::PI * (d * d - x * x))
    }
}

fn oracle_specs() -> Vec<(&'static str, QuotientSpec)> {
    vec![
        ("[3]", QuotientSpec::regular(3)),
        ("[2]", QuotientSpec::regular(2)),
        ("[[0,2],[3,0]]", catalog::biregular_2_3()),
        ("[[14,2],[2,2]]", catalog::two_cell()),
        ("house", catalog::house()),
        ("house-coarse", catalog::house_coarse()),
    ]
}

const TREE_CAP: usize = 25_000_000;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let len = 12;
    let mut mismatches = Vec::new();
    for (name, spec) in oracle_specs() {
        let w = Weights::<i64>::integral(&spec).expect("unweighted");
        let table = walk_recurrence(&spec, &w, len);
        for cell in 0..spec.k() {
            match brute_force_tree_walks_upto(&spec, &w, cell, len, TREE_CAP) {
                Ok(oracle) => {
                    if table.cell(cell) != oracle.as_slice() {
                        mismatches.push(format!("{name} cell {cell}"));
                    }
                }
                Err(e) => mismatches.push(format!("{name} cell {cell}: {e}")),
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches.is_empty() && elapsed < Duration::from_secs(30),
        format!("6 specs, l <= {len}, {:.1}s, mismatches {:?}", elapsed.as_secs_f64(), mismatches),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let g = grid(-2.9, 2.9, 581);
    let edge = 2.0 * 2f64.sqrt();
    let curve = match density_curve(&QuotientSpec::regular(3), &g, &DensityOptions::default()) {
        Ok(c) => c,
        Err(e) => return outcome(false, e.to_string()),
    };
    let err = g
        .iter()
        .enumerate()
        .filter(|(_, x)| (x.abs() - edge).abs() > 0.05)
        .map(|(p, &x)| (curve.mu[0][p] - kesten_mckay(3.0, x)).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        err <= 2e-3 && elapsed < Duration::from_secs(120),
        format!("sup error {err:.3e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn two_cell_curve() -> sregular::Result<DensityCurve> {
    let spec = catalog::two_cell();
    density_curve(&spec, &grid(-10.0, 10.0, 4001), &DensityOptions::default())
}

fn criterion_3(curve: &DensityCurve) -> Outcome {
    let spec = catalog::two_cell();
    let table = walk_recurrence(&spec, &Weights::float(&spec), 8);
    let rows = moment_check(curve, &table, 8);
    let mut worst_even: f64 = 0.0;
    let mut worst_odd: f64 = 0.0;
    let mut pass = true;
    for r in rows.iter().filter(|r| r.cell.is_none()) {
        if r.ell % 2 == 0 {
            worst_even = worst_even.max(r.error);
            pass &= r.relative && r.error <= 0.02;
        } else {
            let abs = (r.computed - r.exact).abs();
            worst_odd = worst_odd.max(abs);
            pass &= abs <= 1e-2;
        }
    }
    outcome(pass, format!("even relative {worst_even:.3e}, odd absolute {worst_odd:.3e}"))
}

fn ensemble() -> sregular::Result<Vec<EnsembleMember>> {
    sample_ensemble(&catalog::two_cell(), &[600, 600], MatrixKind::Adjacency, 20, 20240601, Execution::default())
}

fn criterion_4(members: &[EnsembleMember], curve: &DensityCurve, elapsed: Duration) -> Outcome {
    let mut bulk: Vec<f64> = members.iter().flat_map(|m| m.spectrum.bulk_values()).collect();
    bulk.sort_by(f64::total_cmp);
    let cdf = curve.mixture_cdf();
    let m = bulk.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in bulk.iter().enumerate() {
        let f = curve.cdf_at(&cdf, x);
        ks = ks.max((f - i as f64 / m).abs()).max((f - (i + 1) as f64 / m).abs());
    }
    outcome(
        ks <= 0.05 && elapsed < Duration::from_secs(600),
        format!(
            "KS {ks:.4}, {} bulk eigenvalues, limit mass {:.5}, {:.1}s",
            bulk.len(),
            curve.mixture_mass(),
            elapsed.as_secs_f64()
        ),
    )
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] || x >= xs[xs.len() - 1] {
        return f64::NAN;
    }
    let p = xs.partition_point(|&l| l <= x);
    let t = (x - xs[p - 1]) / (xs[p] - xs[p - 1]);
    ys[p - 1] + t * (ys[p] - ys[p - 1])
}

fn criterion_5(members: &[EnsembleMember], curve: &DensityCurve) -> Outcome {
    let mut inside = 0usize;
    let mut total = 0usize;
    for m in members {
        let tau = m.graph.tau();
        let sizes = m.graph.cell_sizes();
        let stats = cell_sum_squares(&m.spectrum.spectrum, tau, &sizes);
        let k = sizes.len();
        for &j in &m.spectrum.bulk_indices {
            let lambda = m.spectrum.spectrum.values()[j];
            let mix = interpolate(&curve.lambda, &curve.mixture, lambda);
            let ok = (0..k).all(|i| {
                let ratio = interpolate(&curve.lambda, &curve.mu[i], lambda) / mix;
                let scaled = stats[j * k + i].scaled;
                ratio.is_finite() && (scaled - ratio).abs() <= 0.25 * ratio
            });
            inside += usize::from(ok);
            total += 1;
        }
    }
    let frac = inside as f64 / total as f64;
    outcome(
        frac >= 0.9,
        format!("{:.1}% of {total} bulk eigenpairs within 25% (empirical threshold 90%)", 100.0 * frac),
    )
}

fn criterion_6() -> Outcome {
    let sizes: Vec<Vec<usize>> = [200, 400, 800, 1600, 3200].iter().map(|&n| vec![n]).collect();
    match cycle_scaling_experiment(&QuotientSpec::regular(3), &sizes, 2, 200, 77, Execution::default()) {
        Ok(r) => {
            let means: Vec<String> = r.rows.iter().map(|row| format!("{}:{:.3e}", row.n_total, row.mean)).collect();
            outcome((-1.3..=-0.7).contains(&r.slope), format!("slope {:.3}, means {}", r.slope, means.join(" ")))
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

struct FuzzSpec {
    name: &'static str,
    spec: QuotientSpec,
    sizes: fn(&mut rng::Rng) -> Vec<usize>,
}

fn fuzz_specs() -> Vec<FuzzSpec> {
    vec![
        FuzzSpec { name: "[3]", spec: QuotientSpec::regular(3), sizes: |r| vec![2 * r.gen_range(10..=200)] },
        FuzzSpec { name: "[[14,2],[2,2]]", spec: catalog::two_cell(), sizes: |r| vec![r.gen_range(15..=200); 2] },
        FuzzSpec {
            name: "[[0,2],[3,0]]",
            spec: catalog::biregular_2_3(),
            sizes: |r| {
                let m = r.gen_range(2..=80);
                vec![3 * m, 2 * m]
            },
        },
        FuzzSpec {
            name: "house-coarse",
            spec: catalog::house_coarse(),
            sizes: |r| {
                let m = 2 * r.gen_range(1..=40);
                vec![m, 2 * m, 2 * m]
            },
        },
    ]
}

struct FuzzStats {
    reports: usize,
    violations: Vec<String>,
    disconnected: usize,
    top_deviation: f64,
    worst_cell_sum_ratio: f64,
}

fn criterion_7(stats: &FuzzStats, elapsed: Duration) -> Outcome {
    outcome(
        stats.violations.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "1000 trials, {} reports, {} violations {:?}, {} disconnected graphs skipped for diameter, {:.1}s",
            stats.reports,
            stats.violations.len(),
            stats.violations.iter().take(3).collect::<Vec<_>>(),
            stats.disconnected,
            elapsed.as_secs_f64()
        ),
    )
}

fn run_fuzz() -> FuzzStats {
    let specs = fuzz_specs();
    let trials = 1000;
    let per_trial = Execution::default().map_indices(trials, |t| {
        let fs = &specs[t % specs.len()];
        let mut r = rng::stream(4242, t as u64);
        let n = (fs.sizes)(&mut r);
        let mut out = Vec::new();
        let mut disconnected = false;
        let g = match sample_with_rng(&fs.spec, &n, &mut r, &SamplerOptions::default()) {
            Ok(g) => g,
            Err(e) => return (vec![Err(format!("{} {n:?}: {e}", fs.name))], false, 0.0, 0.0),
        };
        let ctx = match BoundsContext::new(&g, &fs.spec) {
            Ok(c) => c.with_label(format!("{} trial {t}", fs.name)),
            Err(e) => return (vec![Err(format!("{} {n:?}: {e}", fs.name))], false, 0.0, 0.0),
        };
        if g.graph().is_connected() {
            out.push(bounds::diameter_check(&ctx).map(|d| d.report).map_err(|e| e.to_string()));
        } else {
            disconnected = true;
        }
        let ab = bounds::alon_boppana_lower(&fs.spec, &n, bounds::default_ell_range(g.n()));
        out.push(ab.map(|a| a.check(ctx.lambda_b(), format!("{} trial {t}", fs.name))).map_err(|e| e.to_string()));
        match bounds::subset_trial(&ctx, &mut r, 6) {
            Ok(reps) => out.extend(reps.into_iter().map(Ok)),
            Err(e) => out.push(Err(e.to_string())),
        }
        let cell_ratio = ctx.max_bulk_cell_sum() / (1e-8 * (g.n() as f64).sqrt());
        (out, disconnected, ctx.top_eigenvalue_deviation(), cell_ratio)
    });
    let mut stats = FuzzStats {
        reports: 0,
        violations: Vec::new(),
        disconnected: 0,
        top_deviation: 0.0,
        worst_cell_sum_ratio: 0.0,
    };
    for (reps, disc, dev, ratio) in per_trial {
        stats.disconnected += usize::from(disc);
        stats.top_deviation = stats.top_deviation.max(dev);
        stats.worst_cell_sum_ratio = stats.worst_cell_sum_ratio.max(ratio);
        for rep in reps {
            match rep {
                Ok(r) => {
                    stats.reports += 1;
                    if !r.holds {
                        stats.violations.push(format!("{} [{}] lhs {} rhs {}", r.name, r.context, r.lhs, r.rhs));
                    }
                }
                Err(e) => stats.violations.push(e),
            }
        }
    }
    stats
}

fn criterion_8(members: &[EnsembleMember], fuzz: &FuzzStats) -> Outcome {
    let mut top_dev = fuzz.top_deviation;
    let mut cell_ratio = fuzz.worst_cell_sum_ratio;
    for m in members {
        let top = *m.spectrum.spectrum.values().last().expect("non-empty");
        top_dev = top_dev.max((top - m.spectrum.lambda_s).abs());
        cell_ratio = cell_ratio.max(m.spectrum.max_bulk_cell_sum / (1e-8 * (m.graph.n() as f64).sqrt()));
    }
    let mut j_dev: f64 = 0.0;
    let cases = [
        (QuotientSpec::regular(3), vec![400]),
        (catalog::two_cell(), vec![600, 600]),
        (catalog::biregular_2_3(), vec![120, 80]),
        (catalog::house_coarse(), vec![20, 40, 40]),
        (catalog::house(), vec![1; 5]),
    ];
    for (spec, n) in &cases {
        for m in 0..=4 {
            match j_matrix_check(spec, n, m) {
                Ok(d) => j_dev = j_dev.max(d),
                Err(_) => j_dev = f64::INFINITY,
            }
        }
    }
    outcome(
        top_dev <= 1e-9 && cell_ratio <= 1.0 && j_dev <= 1e-10,
        format!(
            "|lambda_max - lambda_S| <= {top_dev:.2e}, bulk cell sums <= {cell_ratio:.2e} x 1e-8 sqrt(n), J_m deviation {j_dev:.2e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut worst_series: f64 = 0.0;
    let mut herglotz_bad = 0usize;
    let mut worst_far: f64 = 0.0;
    let mut failures = Vec::new();
    let specs = oracle_specs();
    for (si, (name, spec)) in specs.iter().enumerate() {
        let ev = GfEvaluator::new(spec);
        let lambda_s = sregular::quotient::quotient_eigen(spec).expect("balanced").lambda_s;
        let table = walk_recurrence(spec, &Weights::float(spec), 160);
        let mut r = rng::stream(99, si as u64);
        for _ in 0..100 {
            let rad = 0.3 / lambda_s * r.gen::<f64>().sqrt();
            let y = C::from_polar(rad, r.gen_range(0.0..std::f64::consts::TAU));
            match ev.evaluate(y) {
                Ok(sol) => {
                    for (cell, x) in sol.cells.iter().enumerate() {
                        let series = table.cell(cell).iter().rev().fold(C::new(0.0, 0.0), |acc, &w| acc * y + w);
                        worst_series = worst_series.max((x - series).norm());
                    }
                }
                Err(e) => failures.push(format!("{name} y={y}: {e}")),
            }
        }
        let reach = lambda_s + 1.0;
        for x in grid(-reach, reach, 200) {
            match stieltjes(&ev, C::new(x, 1e-2)) {
                Ok(rs) => herglotz_bad += rs.iter().filter(|r| !(r.im < 0.0)).count(),
                Err(e) => failures.push(format!("{name} z={x}+0.01i: {e}")),
            }
        }
        for theta in [0.1, 0.7, 1.3, 2.2, 3.0, -0.4, -1.9] {
            let z = C::from_polar(1e6, theta);
            match stieltjes(&ev, z) {
                Ok(rs) => rs.iter().for_each(|r| worst_far = worst_far.max((z * r - 1.0).norm())),
                Err(e) => failures.push(format!("{name} z={z}: {e}")),
            }
        }
    }
    outcome(
        worst_series <= 1e-6 && herglotz_bad == 0 && worst_far <= 1e-5 && failures.is_empty(),
        format!(
            "series gap {worst_series:.2e}, Herglotz violations {herglotz_bad}, |zR-1| {worst_far:.2e}, failures {:?}",
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let mut required_failed = Vec::new();
    let mut emit = |id: u32, title: &str, o: Outcome, required: bool| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if required { "" } else { " (reported only)" };
        println!("{tag} {id} {title}{note}: {}", o.detail);
        if required && !o.pass {
            required_failed.push(id);
        }
    };

    emit(1, "recurrence equals tree oracle", criterion_1(), true);
    emit(2, "Kesten-McKay reproduction", criterion_2(), true);

    let curve = two_cell_curve();
    match &curve {
        Ok(c) => emit(3, "moment consistency", criterion_3(c), true),
        Err(e) => emit(3, "moment consistency", outcome(false, e.to_string()), true),
    }

    let start = Instant::now();
    let members = ensemble();
    let elapsed = start.elapsed();
    match (&members, &curve) {
        (Ok(m), Ok(c)) => {
            emit(4, "empirical bulk vs limiting CDF", criterion_4(m, c, elapsed), true);
            emit(5, "eigenvector cell statistics", criterion_5(m, c), false);
        }
        _ => {
            let why = format!("ensemble: {:?}", members.as_ref().err());
            emit(4, "empirical bulk vs limiting CDF", outcome(false, why.clone()), true);
            emit(5, "eigenvector cell statistics", outcome(false, why), false);
        }
    }

    emit(6, "ball cycle scaling", criterion_6(), true);

    let start = Instant::now();
    let fuzz = run_fuzz();
    emit(7, "bound fuzzing", criterion_7(&fuzz, start.elapsed()), true);

    let empty = Vec::new();
    emit(8, "classification invariants", criterion_8(members.as_ref().unwrap_or(&empty), &fuzz), true);
    emit(9, "generating function checks", criterion_9(), true);

    if !required_failed.is_empty() {
        eprintln!("required criteria failed: {required_failed:?}");
        std::process::exit(1);
    }
}
