//! Acceptance report: one PASS/FAIL line per criterion and a failure count.
//! With `STAP_ACCEPTANCE_STRICT=1` any failing criterion exits with status 1.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stap_bench::config::{apply_overrides, bundled, ExperimentConfig, Method};
use stap_bench::experiment::{run_experiment, ExperimentOutcome};
use stap_core::gridless_stap::{anm_solve, ram_solve, EpsilonPolicy, RamResult, RamSettings, RANK_THRESHOLD};
use stap_core::linalg::{hermitian_eigen, hermitian_eigenvalues, inner};
use stap_core::radar_scene::{exact_ccm, make_clutter_scenario, space_time_steering, RadarConfig, Snapshot, SnapshotSet};
use stap_core::sdp_core::{kkt_residuals, solve_weighted_subproblem, SdpProblem, SolverSettings};
use stap_core::stap_eval::eigenspectrum;
use stap_core::toeplitz_ops::{psd_project, toeplitz_adjoint, toeplitz_build, toeplitz_project, TwoLevelToeplitzCoeffs};
use stap_core::{CMatrix, C64};

const SURROGATE_SLACK: f64 = 1e-5;
const MC_RUNS: usize = 20;

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: u32, pass: bool, title: &str, detail: String, seconds: f64) {
        if !pass {
            self.failures += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2}: {title} | {detail} | {seconds:.2} s");
    }
}

fn eigen_db(deg: f64) -> Vec<f64> {
    let radar = RadarConfig::benchmark(deg.to_radians());
    let exact = exact_ccm(&make_clutter_scenario(&radar).unwrap(), &radar).unwrap();
    eigenspectrum(&exact)
}

/// Number of eigenvalues more than 3 dB above the noise floor.
fn clutter_rank(eig_db: &[f64], floor_db: f64) -> usize {
    eig_db.iter().filter(|&&e| e > floor_db + 3.0).count()
}

fn experiment(name: &str) -> (ExperimentOutcome, f64) {
    let text = bundled(name).expect("bundled config");
    let config = ExperimentConfig::parse(text, name).unwrap();
    let mut config = apply_overrides(config, Some(MC_RUNS), None, None, None).unwrap();
    config.experiment.heatmap_points = 0;
    let start = Instant::now();
    let total = config.experiment.monte_carlo_runs;
    let outcome = run_experiment(&config, |r| eprintln!("  {name}: run {}/{total}", r.run + 1)).unwrap();
    (outcome, start.elapsed().as_secs_f64())
}

fn mean_loss(outcome: &ExperimentOutcome, method: Method) -> f64 {
    outcome.aggregates[&method].mean_loss_outside_notch_db
}

fn surrogate_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + SURROGATE_SLACK * w[0].abs().max(1.0))
}

fn rank_of(t: &CMatrix) -> usize {
    let ev = hermitian_eigenvalues(t);
    let top = ev.last().copied().unwrap_or(0.0);
    ev.iter().filter(|&&l| l > RANK_THRESHOLD * top).count()
}

fn two_atom_set(separation: f64) -> SnapshotSet {
    let s1 = space_time_steering(0.1, 0.2, 8, 8).unwrap();
    let s2 = space_time_steering(0.1 + separation, 0.2, 8, 8).unwrap();
    let phases = [(0.0, 0.0), (1.3, -2.1), (2.7, 0.9)];
    let snaps = phases
        .iter()
        .map(|&(a, b)| Snapshot::new(&s1 * C64::from_polar(1.0, a) + &s2 * C64::from_polar(1.0, b)))
        .collect();
    SnapshotSet::new(snaps, 0).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn hermitian(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

fn criterion_1(report: &mut Report) {
    let start = Instant::now();
    let eig = eigen_db(0.0);
    let gap = eig[13] - eig[14];
    let secs = start.elapsed().as_secs_f64();
    report.record(
        1,
        gap >= 30.0 && secs < 1.0,
        "sidelooking eigenvalue 15 at least 30 dB below eigenvalue 14",
        format!(
            "lambda14 {:.2} dB, lambda15 {:.2} dB, gap {gap:.2} dB; eigenvalues above noise +3 dB: {}",
            eig[13],
            eig[14],
            clutter_rank(&eig, 0.0)
        ),
        secs,
    );
}

fn criterion_2(report: &mut Report) {
    let start = Instant::now();
    let ranks: Vec<usize> = [45.0, 90.0].iter().map(|&d| clutter_rank(&eigen_db(d), 0.0)).collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = ranks.iter().all(|r| r.abs_diff(22) <= 2) && secs < 1.0;
    report.record(
        2,
        pass,
        "crabbed cutoff (eigenvalues above noise +3 dB) at 22 +/- 2",
        format!("psi=45: {}, psi=90: {}", ranks[0], ranks[1]),
        secs,
    );
}

fn criterion_3(report: &mut Report, psi45: &ExperimentOutcome, secs: f64) {
    let tail_excess = |m: Method| {
        psi45.aggregates[&m].eig_db[24..].iter().fold(0.0f64, |acc, e| acc.max(e.abs()))
    };
    let ram = tail_excess(Method::Ram);
    let focuss = tail_excess(Method::Focuss);
    report.record(
        3,
        ram <= 10.0 && focuss > 10.0 && secs < 1800.0,
        "psi=45 K=3: RAM eigenspectrum beyond index 24 within 10 dB of noise, FOCUSS not",
        format!("max |eig - floor| beyond 24: RAM {ram:.2} dB, FOCUSS {focuss:.2} dB over {MC_RUNS} runs"),
        secs,
    );
}

fn criterion_4(report: &mut Report, outcomes: &[(&str, &ExperimentOutcome)], secs: f64) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, o) in outcomes {
        let [opt, focuss, anm, ram] = [Method::Optimal, Method::Focuss, Method::Anm, Method::Ram].map(|m| mean_loss(o, m));
        let checks = [ram >= anm + 1.5, ram >= focuss + 3.0, ram >= opt - 5.0];
        pass &= checks.iter().all(|c| *c);
        parts.push(format!(
            "{name}: RAM {ram:.2}, ANM {anm:.2} ({}), FOCUSS {focuss:.2} ({}), OPTIMAL {opt:.2} ({})",
            if checks[0] { "ok" } else { "short" },
            if checks[1] { "ok" } else { "short" },
            if checks[2] { "ok" } else { "short" },
        ));
    }
    report.record(
        4,
        pass,
        "off-grid SINR loss: RAM >= ANM+1.5, >= FOCUSS+3, within 5 dB of OPTIMAL",
        parts.join("; "),
        secs,
    );
}

fn criterion_5(report: &mut Report, side: &ExperimentOutcome, secs: f64) {
    let opt = mean_loss(side, Method::Optimal);
    let methods = [Method::Smi, Method::Focuss, Method::Anm, Method::Ram];
    let parts: Vec<String> = methods
        .iter()
        .map(|&m| format!("{m} {:.2}", mean_loss(side, m) - opt))
        .collect();
    let pass = methods.iter().all(|&m| mean_loss(side, m) >= opt - 5.0);
    report.record(
        5,
        pass,
        "sidelooking: SMI, FOCUSS, ANM, RAM within 5 dB of OPTIMAL",
        format!("OPTIMAL {opt:.2} dB; gaps {}", parts.join(", ")),
        secs,
    );
}

fn criterion_6(report: &mut Report) -> RamResult {
    let start = Instant::now();
    let set = two_atom_set(0.05);
    let settings = RamSettings {
        zeta: Some(1e-3),
        max_mm_iterations: 20,
        epsilon_policy: EpsilonPolicy::Explicit(0.0),
        sdp: SolverSettings { tolerance: 1e-7, max_iterations: 20_000, ..SolverSettings::default() },
        ..RamSettings::default()
    };
    let anm = anm_solve(&set, 8, 8, 0.0, &settings).unwrap();
    let ram = ram_solve(&set, 8, 8, 0.0, &settings).unwrap();
    let (ra, rr) = (rank_of(&anm.toeplitz()), rank_of(&ram.toeplitz()));
    report.record(
        6,
        rr == 2 && ra >= 3,
        "two atoms 0.05 apart: RAM rank exactly 2, ANM rank >= 3",
        format!("RAM rank {rr}, ANM rank {ra}"),
        start.elapsed().as_secs_f64(),
    );
    ram
}

fn criterion_7(report: &mut Report) {
    let start = Instant::now();
    let tight = SolverSettings { tolerance: 1e-8, max_iterations: 50_000, ..SolverSettings::default() };
    let mut notes = Vec::new();
    let mut pass = true;

    let x = C64::new(1.2, -0.9);
    let scalar = SdpProblem::new(
        CMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
        CMatrix::from_element(1, 1, x),
        0.0,
        1,
        1,
    )
    .unwrap();
    let sol = solve_weighted_subproblem(&scalar, &tight).unwrap();
    let err = (sol.iterate.u.get(0, 0).re - x.norm()).abs().max((sol.iterate.phi[(0, 0)].re - x.norm()).abs());
    pass &= err <= 1e-6;
    notes.push(format!("scalar error {err:.1e}"));

    let s = space_time_steering(0.1, 0.2, 4, 4).unwrap();
    let atom = SdpProblem::new(CMatrix::identity(16, 16), CMatrix::from_columns(&[s.scale(3.0)]), 0.0, 4, 4).unwrap();
    let sol_atom = solve_weighted_subproblem(&atom, &tight).unwrap();
    let eig = hermitian_eigen(&sol_atom.iterate.toeplitz());
    let top = eig.max_value();
    let rank1 = eig.values[..15].iter().all(|l| l.abs() < 1e-4 * top);
    let collinear = 1.0 - eig.vectors.column(15).dotc(&s).norm() / s.norm();
    pass &= rank1 && collinear < 1e-4;
    notes.push(format!("atom rank-1 {rank1}, 1-cos {collinear:.1e}"));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut problems = vec![(scalar, sol), (atom, sol_atom)];
    for (n, m, k) in [(2, 2, 1), (2, 3, 2), (3, 2, 3)] {
        let d = n * m;
        let b = random_matrix(&mut rng, d, d);
        let weight = hermitian(&(&b * b.adjoint() + CMatrix::identity(d, d).scale(0.1)));
        let p = SdpProblem::new(weight, random_matrix(&mut rng, d, k), 0.5, n, m).unwrap();
        let sol = solve_weighted_subproblem(&p, &tight).unwrap();
        problems.push((p, sol));
    }
    let mut worst = 0.0f64;
    for (p, sol) in &problems {
        let r = kkt_residuals(p, sol);
        let fid = r.fidelity_slack.max(0.0) / p.fidelity_radius().max(1.0);
        worst = worst
            .max(r.psd_violation_relative)
            .max(r.structure_violation)
            .max(fid)
            .max(r.primal_residual)
            .max(r.dual_residual);
    }
    pass &= worst <= 1e-6;
    notes.push(format!("worst KKT residual {worst:.1e} over {} instances", problems.len()));
    let secs = start.elapsed().as_secs_f64();
    report.record(7, pass && secs < 60.0, "SDP solver correctness", notes.join(", "), secs);
}

fn criterion_8(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trials = 25;
    let (mut adjoint, mut idem, mut nonexp, mut psd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for t in 0..trials {
        let (n, m) = (1 + t % 4, 1 + (t / 4) % 4);
        let d = n * m;
        let u = TwoLevelToeplitzCoeffs::from_fn(n, m, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
        .hermitian_symmetrized();
        let z = random_matrix(&mut rng, d, d);
        let lhs = inner(&toeplitz_build(&u).unwrap(), &z);
        let rhs = u.inner(&toeplitz_adjoint(&z, n, m).unwrap());
        adjoint = adjoint.max((lhs - rhs).abs() / lhs.abs().max(1.0));

        let a = random_matrix(&mut rng, d, d);
        let b = random_matrix(&mut rng, d, d);
        let pa = toeplitz_project(&a, n, m).unwrap();
        let pb = toeplitz_project(&b, n, m).unwrap();
        idem = idem.max((toeplitz_project(&pa, n, m).unwrap() - &pa).norm());
        nonexp = nonexp.max((&pa - &pb).norm() - (&a - &b).norm());

        let h = hermitian(&a);
        let p = psd_project(&h).unwrap();
        let residual = &p - &h;
        let comp = inner(&residual, &p).abs();
        let neg = (-hermitian_eigenvalues(&p)[0]).max(0.0);
        let dual_neg = (-hermitian_eigenvalues(&hermitian(&residual))[0]).max(0.0);
        psd = psd.max(comp).max(neg).max(dual_neg);
    }
    let pass = adjoint < 1e-10 && idem < 1e-12 && nonexp < 1e-12 && psd < 1e-10;
    let secs = start.elapsed().as_secs_f64();
    report.record(
        8,
        pass && secs < 10.0,
        "structure algebra properties",
        format!(
            "{trials} trials: adjoint {adjoint:.1e}, idempotence {idem:.1e}, expansion {nonexp:.1e}, PSD complementarity {psd:.1e}"
        ),
        secs,
    );
}

fn criterion_9(report: &mut Report, outcomes: &[(&str, &ExperimentOutcome)], atoms: &RamResult) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (name, o) in outcomes {
        for (run, record) in o.runs.iter().enumerate() {
            if let Some(Ok(out)) = record.outputs.get(&Method::Ram) {
                let trace = out.trace.as_ref().expect("RAM trace");
                checked += 1;
                if !surrogate_monotone(&trace.surrogate_objectives) {
                    bad.push(format!("{name} run {run}"));
                }
            }
        }
    }
    checked += 1;
    if !surrogate_monotone(&atoms.surrogate_objectives) {
        bad.push("two-atom instance".to_string());
    }
    report.record(
        9,
        bad.is_empty(),
        "MM surrogate nonincreasing within 1e-5 relative slack",
        format!("{checked} RAM runs checked, {} increasing: [{}]", bad.len(), bad.join(", ")),
        0.0,
    );
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_10(report: &mut Report) {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_stap-bench"))
            .args(["run", "psi45_k1", "--quiet", "--runs", "2", "--seed", "3", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(csv_bodies(&out));
    }
    let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
    report.record(
        10,
        same,
        "repeated runs give byte-identical CSV files",
        format!("{} CSV files compared", outputs[0].len()),
        start.elapsed().as_secs_f64(),
    );
}

fn main() {
    let mut report = Report { failures: 0 };
    println!("acceptance report");
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    let atoms = criterion_6(&mut report);

    let (psi45, t45) = experiment("psi45.cfg");
    let (psi90, t90) = experiment("psi90.cfg");
    let (side, tside) = experiment("sidelooking.cfg");
    criterion_3(&mut report, &psi45, t45);
    criterion_4(&mut report, &[("psi=45", &psi45), ("psi=90", &psi90)], t45 + t90);
    criterion_5(&mut report, &side, tside);
    criterion_9(&mut report, &[("psi=45", &psi45), ("psi=90", &psi90), ("sidelooking", &side)], &atoms);
    criterion_10(&mut report);

    println!("{} of 10 criteria failed", report.failures);
    let strict = std::env::var("STAP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && report.failures > 0 {
        std::process::exit(1);
    }
}
