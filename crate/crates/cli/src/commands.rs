use std::fs;
use std::path::{Path, PathBuf};

use ks21_core::certify::{
    certify_counts, graph_invariants, structural_report, CertificationReport, CountTable,
    GraphInvariants, StructuralReport, Verdict,
};
use ks21_core::exclusivity::build_graph;
use ks21_core::quantum::{corrected_bounds, ks21_bounds, SIGMA_WEIGHT};
use ks21_core::sim::convergence_trace;
use ks21_core::theta::{check_certificates, lovasz_theta, DEFAULT_TOLERANCE};
use ks21_core::{BoundSet, KsSet, Profile};
use serde::Serialize;

use crate::artifacts::{
    count_tables, csv_bytes, read_count_rows, timestamp, CountRow, EpsilonRow, Manifest, OutputDir,
    SigmaRow, TraceRow,
};
use crate::failure::{Failure, Outcome};
use crate::inputs::{load_set, parse_config, read_file, LoadedSet};
use crate::plan::{execute, Execution, Plan, Preset};

/// Where the simulated data comes from.
pub struct SimSource {
    pub config: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub pulses: Option<u64>,
}

impl SimSource {
    fn plan(&self, set: &KsSet) -> Outcome<Plan> {
        let mut plan = match (&self.config, self.preset) {
            (Some(path), None) => {
                let bytes = read_file(path)?;
                let text = String::from_utf8(bytes)
                    .map_err(|_| Failure::usage(format!("{} is not UTF-8", path.display())))?;
                Plan::from_config(parse_config(&text)?)
            }
            (None, Some(preset)) => Plan::preset(preset, set)?,
            (None, None) => return Err(Failure::usage("give a config file or --preset")),
            (Some(_), Some(_)) => {
                return Err(Failure::usage("a config file and --preset are exclusive"))
            }
        };
        plan.override_with(self.seed, self.pulses);
        Ok(plan)
    }
}

fn describe(s: &StructuralReport) -> String {
    format!(
        "{} vectors, {} contexts, {}",
        s.vectors,
        s.contexts,
        if s.uncolorable {
            "KS-uncolorable"
        } else {
            "KS-colorable"
        }
    )
}

pub fn validate(set_path: Option<&Path>, edge_list: Option<&Path>) -> Outcome<i32> {
    let loaded = load_set(set_path)?;
    let report = structural_report(&loaded.set);
    let (dmin, dmax) = report
        .degrees
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    println!("set          {}", loaded.source);
    println!("sha256       {}", loaded.sha256);
    println!("dimension    {}", report.dimension);
    println!("structure    {}", describe(&report));
    println!("contexts     {} exact orthogonal bases", report.contexts);
    println!(
        "coverage     {}",
        if report.context_coverage {
            "every vector in exactly 2 contexts"
        } else {
            "some vector not in exactly 2 contexts"
        }
    );
    println!("graph        {} edges, degree {dmin}..{dmax}", report.edges);
    println!("search       {} nodes", report.colorability_nodes);
    if let Some(path) = edge_list {
        let g = build_graph(&loaded.set, SIGMA_WEIGHT);
        fs::write(path, g.to_edge_list())
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        println!("edge list    {}", path.display());
    }
    if !report.context_coverage {
        return Err(Failure::check(
            "a vector does not lie in exactly two contexts",
        ));
    }
    if !report.uncolorable {
        return Err(Failure::check("set admits a KS coloring"));
    }
    println!("result       PASS");
    Ok(0)
}

/// Ideal and corrected bounds from the computed invariants. The shipped
/// profile uses the exact values once the computation confirms them.
fn bounds_for(set: &KsSet, inv: &GraphInvariants, epsilon_bar: f64) -> Outcome<BoundSet> {
    let exact = set.profile() == Profile::Ks21 && inv.alpha == 3 && (inv.theta - 7.0).abs() <= 1e-6;
    Ok(if exact {
        ks21_bounds(epsilon_bar)?
    } else {
        corrected_bounds(
            epsilon_bar,
            inv.noncontextual_bound,
            inv.theta,
            SIGMA_WEIGHT * set.vectors().len() as f64,
        )?
    })
}

fn check_epsilon(epsilon_bar: f64) -> Outcome<()> {
    if (0.0..=1.0).contains(&epsilon_bar) {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "--epsilon-bar must lie in [0, 1], got {epsilon_bar}"
        )))
    }
}

fn pretty_json<T: Serialize>(value: &T) -> Outcome<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Failure::check(format!("cannot encode JSON: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Serialize)]
struct BoundsOutput<'a> {
    set_source: &'a str,
    set_sha256: &'a str,
    profile: Profile,
    bounds: BoundSet,
    invariants: &'a GraphInvariants,
    sdp: &'a ks21_core::SdpResult,
}

pub fn bounds(set_path: Option<&Path>, epsilon_bar: f64, out: &Path) -> Outcome<i32> {
    check_epsilon(epsilon_bar)?;
    let loaded = load_set(set_path)?;
    let inv = graph_invariants(&loaded.set)?;
    let g = build_graph(&loaded.set, SIGMA_WEIGHT);
    let sdp = lovasz_theta(&g, DEFAULT_TOLERANCE)?;
    let check = check_certificates(&g, &sdp);
    let b = bounds_for(&loaded.set, &inv, epsilon_bar)?;

    println!("alpha                {}", inv.alpha);
    println!("classical            {}", b.classical_ideal);
    println!("classical_corrected  {:.4}", b.classical_corrected);
    println!("quantum              {}", b.quantum_ideal);
    println!("quantum_lower        {:.4}", b.quantum_lower);
    println!("quantum_upper        {:.4}", b.quantum_upper);
    println!(
        "theta                {:.9} in [{:.9}, {:.9}], {} iterations, certificates {}",
        sdp.value,
        sdp.lower,
        sdp.upper,
        sdp.iterations,
        if check.passes(DEFAULT_TOLERANCE) {
            "verified"
        } else {
            "NOT verified"
        }
    );

    let mut dir = OutputDir::create(out)?;
    let path = dir.write(
        "bounds.json",
        &pretty_json(&BoundsOutput {
            set_source: &loaded.source,
            set_sha256: &loaded.sha256,
            profile: loaded.set.profile(),
            bounds: b,
            invariants: &inv,
            sdp: &sdp,
        })?,
    )?;
    println!("wrote                {}", path.display());
    Ok(0)
}

fn count_rows(exec: &Execution, efficiency: f64) -> Vec<CountRow> {
    exec.runs
        .iter()
        .flat_map(|run| {
            let r = &run.record;
            (0..r.projector_ids.len()).map(move |i| CountRow {
                state: run.label.clone(),
                projector: r.projector_ids[i],
                pulses: r.pulses[i],
                detections: r.detections[i],
                efficiency,
            })
        })
        .collect()
}

pub fn simulate(set_path: Option<&Path>, source: &SimSource, out: &Path) -> Outcome<i32> {
    let loaded = load_set(set_path)?;
    let plan = source.plan(&loaded.set)?;
    let exec = execute(&plan, &loaded.set)?;
    let cfg = &plan.config;
    let comment = format!(
        "ks21 simulate {} seed={} set_sha256={}",
        plan.name, cfg.rng_seed, loaded.sha256
    );
    let mut dir = OutputDir::create(out)?;

    let epsilon_bar = exec.exclusivity.as_ref().map(|r| r.epsilon_bar);
    if let Some(report) = &exec.exclusivity {
        let rows: Vec<EpsilonRow> = report
            .per_state
            .iter()
            .map(|s| EpsilonRow {
                state_id: s.state_id,
                epsilon: s.epsilon,
                stderr: s.std_error,
            })
            .collect();
        dir.write("fig2.csv", &csv_bytes(&comment, &rows)?)?;
        println!(
            "epsilon_bar  {:.6} ± {:.6}",
            report.epsilon_bar, report.std_error
        );
    }
    if let (Some(stem), Some(eps)) = (&plan.table, epsilon_bar) {
        let inv = graph_invariants(&loaded.set)?;
        let b = bounds_for(&loaded.set, &inv, eps)?;
        let rows: Vec<SigmaRow> = exec
            .runs
            .iter()
            .map(|r| SigmaRow::new(&r.label, r.estimate.sigma_hat, r.estimate.std_error, &b))
            .collect();
        dir.write(&format!("{stem}.csv"), &csv_bytes(&comment, &rows)?)?;
    }
    if plan.trace {
        if let Some(run) = exec.runs.first() {
            let rows: Vec<TraceRow> = convergence_trace(&run.record, cfg.detection_efficiency)
                .into_iter()
                .map(|p| TraceRow {
                    pulses: p.pulses_sent,
                    sigma_hat: p.sigma_hat,
                    stderr: p.std_error,
                })
                .collect();
            dir.write("fig4.csv", &csv_bytes(&comment, &rows)?)?;
        }
    }
    if !exec.runs.is_empty() {
        let rows = count_rows(&exec, cfg.detection_efficiency);
        dir.write("counts.csv", &csv_bytes(&comment, &rows)?)?;
    }
    for run in &exec.runs {
        println!(
            "{:<10}   {:.4} ± {:.4}",
            run.label, run.estimate.sigma_hat, run.estimate.std_error
        );
    }

    let artifacts = dir.finish();
    for a in &artifacts {
        println!("wrote        {}", out.join(&a.file).display());
    }
    let manifest = Manifest {
        tool: "ks21",
        version: env!("CARGO_PKG_VERSION"),
        created: timestamp(),
        run: &plan.name,
        set_source: &loaded.source,
        set_sha256: &loaded.sha256,
        seed: cfg.rng_seed,
        config: cfg,
        states: exec.runs.iter().map(|r| r.label.as_str()).collect(),
        epsilon_bar,
        artifacts,
    };
    let mut dir = OutputDir::create(out)?;
    let path = dir.write("manifest.json", &pretty_json(&manifest)?)?;
    println!("wrote        {}", path.display());
    Ok(0)
}

pub fn certify(
    set_path: Option<&Path>,
    data: Option<&Path>,
    source: &SimSource,
    epsilon_bar: Option<f64>,
    out: &Path,
) -> Outcome<i32> {
    if let Some(eps) = epsilon_bar {
        check_epsilon(eps)?;
    }
    let loaded: LoadedSet = load_set(set_path)?;
    let set = &loaded.set;
    let (tables, epsilon_bar, seed): (Vec<CountTable>, f64, Option<u64>) = match data {
        Some(path) => {
            if source.config.is_some() || source.preset.is_some() {
                return Err(Failure::usage("--data excludes a config file and --preset"));
            }
            let eps = epsilon_bar.ok_or_else(|| Failure::usage("--data requires --epsilon-bar"))?;
            let rows = read_count_rows(read_file(path)?.as_slice())?;
            (count_tables(&rows, set)?, eps, None)
        }
        None => {
            let mut plan = source.plan(set)?;
            plan.exclusivity = epsilon_bar.is_none();
            let exec = execute(&plan, set)?;
            let eps = match (epsilon_bar, &exec.exclusivity) {
                (Some(eps), _) => eps,
                (None, Some(r)) => r.epsilon_bar,
                (None, None) => unreachable!("exclusivity tests run when no epsilon is given"),
            };
            let eta = plan.config.detection_efficiency;
            let tables = exec
                .runs
                .iter()
                .map(|r| CountTable {
                    label: r.label.clone(),
                    projector_ids: r.record.projector_ids.clone(),
                    pulses: r.record.pulses.clone(),
                    detections: r.record.detections.clone(),
                    efficiency: eta,
                })
                .collect();
            (tables, eps, Some(plan.config.rng_seed))
        }
    };

    let structure = structural_report(set);
    let invariants = graph_invariants(set)?;
    let bounds = bounds_for(set, &invariants, epsilon_bar)?;
    let (mut verdict, mut reason, states) = certify_counts(&tables, &bounds);
    if !structure.passes() {
        verdict = Verdict::Inconclusive;
        reason = Some(format!(
            "set fails structural validation: {}",
            describe(&structure)
        ));
    }
    let report = CertificationReport {
        set_fingerprint: loaded.sha256.clone(),
        profile: set.profile(),
        structure,
        invariants,
        epsilon_bar,
        bounds,
        states,
        verdict,
        reason,
        seed,
    };
    let text = report.to_string();
    print!("{text}");
    let mut dir = OutputDir::create(out)?;
    dir.write("certification.json", &pretty_json(&report)?)?;
    dir.write("certification.txt", text.as_bytes())?;
    Ok(verdict.exit_code())
}
