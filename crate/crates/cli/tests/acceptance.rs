//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ks21_core::certify::structural_report;
use ks21_core::exclusivity::{
    build_graph, independence_number, independence_number_bruteforce, noncontextual_bound,
};
use ks21_core::quantum::{ks21_bounds, projector_sum, sigma, SIGMA_WEIGHT};
use ks21_core::sim::{
    convergence_trace, non_ks_states, run_exclusivity_tests, run_experiment,
    state_independence_suite, ExperimentConfig, NoiseModel, PreparedState,
};
use ks21_core::theta::{check_certificates, lovasz_theta, max_eigenvalue, min_eigenvalue};
use ks21_core::{Complex64, DensityMatrix, KsSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(start: Instant, limit: Duration, detail: String) -> Check {
    let elapsed = start.elapsed();
    ensure(
        elapsed < limit,
        format!(
            "{detail}; {:.2} s of {} s",
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn ks21_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ks21"))
}

fn structural() -> Check {
    let start = Instant::now();
    let out = ks21_bin()
        .arg("validate")
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(
        out.status.code() == Some(0),
        format!("validate exited {:?}", out.status.code()),
    )?;
    ensure(
        text.contains("21 vectors, 7 contexts, KS-uncolorable"),
        "validate report lacks the structure line".into(),
    )?;
    let report = structural_report(&KsSet::ks21());
    ensure(
        report.dimension == 6
            && report.contexts == 7
            && report.vectors == 21
            && report.context_coverage
            && report.uncolorable,
        format!("{report:?}"),
    )?;
    within(
        start,
        Duration::from_secs(1),
        "7 orthogonal bases of C^6, 2 contexts per vector, uncolorable".into(),
    )
}

fn classical_bound() -> Check {
    let start = Instant::now();
    let g = build_graph(&KsSet::ks21(), SIGMA_WEIGHT);
    let alpha = independence_number(&g).map_err(|e| e.to_string())?.size();
    let brute = independence_number_bruteforce(&g).map_err(|e| e.to_string())?;
    let bound = noncontextual_bound(&g).map_err(|e| e.to_string())?;
    ensure(
        alpha == 3 && brute == 3 && bound == 6.0,
        format!("alpha {alpha}, brute force {brute}, bound {bound}"),
    )?;
    within(
        start,
        Duration::from_secs(10),
        format!("alpha = {alpha} = brute force, 2 alpha = {bound}"),
    )
}

fn quantum_bound() -> Check {
    let start = Instant::now();
    let set = KsSet::ks21();
    let g = build_graph(&set, SIGMA_WEIGHT);
    let theta = lovasz_theta(&g, 1e-7).map_err(|e| e.to_string())?;
    let check = check_certificates(&g, &theta);
    ensure(
        (theta.value - 7.0).abs() <= 1e-6 && theta.gap <= 1e-6 && check.passes(1e-6),
        format!("theta {} gap {:e} check {check:?}", theta.value, theta.gap),
    )?;
    let sum = projector_sum(&set);
    let mut worst = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            let expected = if i == j { 3.5 } else { 0.0 };
            worst = worst.max((sum[(i, j)] - Complex64::new(expected, 0.0)).norm());
        }
    }
    ensure(
        worst <= 1e-12,
        format!("sum of projectors deviates from 3.5 I by {worst:e}"),
    )?;
    let m = sum.map(|z| SIGMA_WEIGHT * z.re);
    let (lo, hi) = (min_eigenvalue(&m), max_eigenvalue(&m));
    ensure(
        (hi - 7.0).abs() <= 1e-12 && (lo - 7.0).abs() <= 1e-12,
        format!("spectrum of 2 sum Pi in [{lo}, {hi}]"),
    )?;
    within(
        start,
        Duration::from_secs(30),
        format!(
            "theta = {:.9} (gap {:.1e}), lambda_max(2 sum Pi) = {hi}",
            theta.value, theta.gap
        ),
    )
}

fn random_pure(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let psi: Vec<Complex64> = (0..6)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    DensityMatrix::pure(&psi).unwrap()
}

fn state_independence() -> Check {
    let set = KsSet::ks21();
    let mut states: Vec<(String, DensityMatrix)> = set
        .vectors()
        .iter()
        .map(|v| (format!("KS{}", v.id()), DensityMatrix::from_ks_vector(v)))
        .collect();
    for s in non_ks_states(&set).map_err(|e| e.to_string())? {
        states.push((
            s.label.clone(),
            s.state.resolve(&set).map_err(|e| e.to_string())?,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..1000 {
        let mut rho = random_pure(&mut rng);
        // odd draws are mixtures of up to four pure states
        if k % 2 == 1 {
            for _ in 0..rng.random_range(1..4) {
                let other = random_pure(&mut rng);
                rho = rho.mix(&other, rng.random::<f64>()).unwrap();
            }
        }
        states.push((format!("random {k}"), rho));
    }
    let mut worst = 0.0f64;
    for (label, rho) in &states {
        let s = sigma(rho, &set).map_err(|e| e.to_string())?;
        ensure((s - 7.0).abs() <= 1e-10, format!("{label}: sigma = {s}"))?;
        worst = worst.max((s - 7.0).abs());
    }
    Ok(format!(
        "{} states, max |sigma - 7| = {worst:.1e}",
        states.len()
    ))
}

fn correction() -> Check {
    let b = ks21_bounds(0.0151).map_err(|e| e.to_string())?;
    ensure(
        (b.classical_corrected - 6.5436).abs() < 5e-5
            && (b.classical_corrected - 6.55).abs() < 0.01,
        format!("classical_corrected = {:.4}", b.classical_corrected),
    )
}

fn calibrated() -> ExperimentConfig {
    ExperimentConfig {
        noise_model: NoiseModel::PreparationWhiteNoise { w: 0.0906 },
        rng_seed: 1,
        ..ExperimentConfig::default()
    }
}

fn exclusivity_rate() -> Check {
    let cfg = calibrated();
    let r = run_exclusivity_tests(&cfg, &KsSet::ks21()).map_err(|e| e.to_string())?;
    ensure(
        cfg.trials_per_pair == 100_000 && (r.epsilon_bar - 0.0151).abs() <= 0.0012,
        format!(
            "epsilon_bar = {:.5} ± {:.5} over {} pairs of {} trials",
            r.epsilon_bar,
            r.std_error,
            r.pairs.len(),
            cfg.trials_per_pair
        ),
    )
}

fn violation_suite() -> Check {
    let start = Instant::now();
    let cfg = calibrated();
    let bounds = ks21_bounds(0.0151).map_err(|e| e.to_string())?;
    let rows = state_independence_suite(&cfg, &KsSet::ks21()).map_err(|e| e.to_string())?;
    ensure(rows.len() == 26, format!("{} states", rows.len()))?;
    let mut closest = f64::INFINITY;
    for row in &rows {
        let margin = 3.0 * row.std_error;
        let above = row.sigma_hat - margin > bounds.classical_corrected;
        let inside = row.sigma_hat >= bounds.quantum_lower - margin
            && row.sigma_hat <= bounds.quantum_upper + margin;
        ensure(
            above && inside,
            format!("{}: {:.4} ± {:.4}", row.label, row.sigma_hat, row.std_error),
        )?;
        closest = closest.min((row.sigma_hat - bounds.classical_corrected) / row.std_error);
    }
    within(
        start,
        Duration::from_secs(300),
        format!("26 states at 1e6 pulses, nearest {closest:.1} standard errors above 6.5436"),
    )
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn convergence() -> Check {
    let cfg = ExperimentConfig {
        prepared_state: PreparedState::KsId(7),
        rng_seed: 1,
        ..ExperimentConfig::default()
    };
    let rec = run_experiment(&cfg, &KsSet::ks21()).map_err(|e| e.to_string())?;
    let trace = convergence_trace(&rec, 1.0);
    let last = trace.last().ok_or("empty trace")?;
    let slope = log_log_slope(
        &trace
            .iter()
            .map(|p| (p.pulses_sent as f64, p.std_error))
            .collect::<Vec<_>>(),
    );
    ensure(
        last.pulses_sent == 1_000_000
            && (last.sigma_hat - 7.0).abs() < 0.05
            && (slope + 0.5).abs() <= 0.1,
        format!(
            "sigma({}) = {:.4} ± {:.4}, stderr slope {slope:.3} over {} checkpoints",
            last.pulses_sent,
            last.sigma_hat,
            last.std_error,
            trace.len()
        ),
    )
}

fn simulate_into(dir: &Path, preset: &str, threads: &str) -> Result<(), String> {
    let out = ks21_bin()
        .args([
            "--threads",
            threads,
            "simulate",
            "--preset",
            preset,
            "--seed",
            "2014",
        ])
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.code() == Some(0),
        format!("{preset}: {}", String::from_utf8_lossy(&out.stderr)),
    )
    .map(|_| ())
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for preset in ["fig2", "fig3", "fig4", "fig5"] {
        let runs: Vec<_> = [("a", "1"), ("b", "4"), ("c", "4")]
            .iter()
            .map(|(tag, threads)| {
                let dir = root.path().join(format!("{preset}-{tag}"));
                simulate_into(&dir, preset, threads).map(|_| csv_files(&dir))
            })
            .collect::<Result<_, _>>()?;
        ensure(!runs[0].is_empty(), format!("{preset}: no CSVs written"))?;
        for other in &runs[1..] {
            ensure(
                other == &runs[0],
                format!("{preset}: CSVs differ between runs or thread counts"),
            )?;
        }
        compared += runs[0].len();
    }
    Ok(format!(
        "{compared} CSVs byte-identical across 3 runs at 1 and 4 threads"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("structural certification", structural),
        ("classical bound", classical_bound),
        ("quantum bound, two routes", quantum_bound),
        ("state independence", state_independence),
        ("correction formula", correction),
        ("exclusivity rate", exclusivity_rate),
        ("violation for 26 states", violation_suite),
        ("convergence trace", convergence),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
