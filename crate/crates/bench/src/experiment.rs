//! Seeded Monte Carlo runs of the method suite.

use std::collections::BTreeMap;
use std::time::Instant;

use stap_core::gridless_stap::{anm_solve, ccm_from_toeplitz, ram_solve, RamResult};
use stap_core::ongrid_sr::{build_dictionary, focuss_solve, ongrid_ccm, SteeringDictionary};
use stap_core::radar_scene::{
    draw_snapshots, exact_ccm, make_clutter_scenario, smi_ccm, ClutterPatch, HermitianCov, RadarConfig, SnapshotSet,
};
use stap_core::stap_eval::{capon_spectrum, eigenspectrum, sinr_loss_curve, uniform_grid, SinrLossCurve};

use crate::config::{ExperimentConfig, Method};
use crate::BenchError;

/// RAM/ANM solver trace kept for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridlessTrace {
    pub surrogate_objectives: Vec<f64>,
    pub mm_iterations: usize,
    pub sdp_iterations: Vec<usize>,
    pub converged: bool,
    pub clutter_rank_estimate: usize,
}

impl GridlessTrace {
    /// Surrogate sequence nonincreasing within `slack` relative.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.surrogate_objectives
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * w[0].abs())
    }
}

/// One method's output on one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutput {
    pub loss_db: Vec<f64>,
    pub eig_db: Vec<f64>,
    /// Capon power in dB, row-major Doppler × spatial; empty when disabled.
    pub capon_db: Vec<f64>,
    pub seconds: f64,
    pub trace: Option<GridlessTrace>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub outputs: BTreeMap<Method, Result<MethodOutput, String>>,
}

/// Mean over successful runs, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodAggregate {
    pub loss_db: Vec<f64>,
    pub eig_db: Vec<f64>,
    pub capon_db: Vec<f64>,
    /// Mean of `loss_db` over grid points away from the notch.
    pub mean_loss_outside_notch_db: f64,
    pub successful_runs: usize,
    pub failed_runs: usize,
    pub nonconverged_runs: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub doppler_grid: Vec<f64>,
    pub heatmap_grid: Vec<f64>,
    /// Doppler of the deepest OPTIMAL loss.
    pub notch_doppler: f64,
    pub runs: Vec<RunRecord>,
    pub aggregates: BTreeMap<Method, MethodAggregate>,
}

impl ExperimentOutcome {
    pub fn has_failures(&self) -> bool {
        self.aggregates.values().any(|a| a.failed_runs > 0)
    }

    /// Every gridless trace recorded for `method`.
    pub fn traces(&self, method: Method) -> impl Iterator<Item = &GridlessTrace> {
        self.runs
            .iter()
            .filter_map(move |r| r.outputs.get(&method))
            .filter_map(|o| o.as_ref().ok())
            .filter_map(|o| o.trace.as_ref())
    }
}

/// Circular distance between normalized frequencies.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Mean of `values` at grid points farther than `half_width` from `notch`.
pub fn mean_outside_notch(grid: &[f64], values: &[f64], notch: f64, half_width: f64) -> f64 {
    let kept: Vec<f64> = grid
        .iter()
        .zip(values)
        .filter(|(f, _)| circular_distance(**f, notch) > half_width)
        .map(|(_, v)| *v)
        .collect();
    if kept.is_empty() {
        f64::NAN
    } else {
        kept.iter().sum::<f64>() / kept.len() as f64
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    radar: RadarConfig,
    scenario: Vec<ClutterPatch>,
    exact: HermitianCov,
    doppler_grid: Vec<f64>,
    heatmap_grid: Vec<f64>,
    dictionary: Option<SteeringDictionary>,
}

impl Context<'_> {
    fn evaluate(&self, estimate: &HermitianCov, loading: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), String> {
        let e = &self.config.experiment;
        let curve: SinrLossCurve = sinr_loss_curve(
            estimate,
            &self.exact,
            &self.radar,
            &self.doppler_grid,
            e.target_spatial_freq,
            loading,
        )
        .map_err(|err| err.to_string())?;
        let eig = eigenspectrum(estimate);
        let capon = if self.heatmap_grid.is_empty() {
            Vec::new()
        } else {
            let map = capon_spectrum(
                estimate,
                self.radar.num_pulses,
                self.radar.num_elements,
                &self.heatmap_grid,
                &self.heatmap_grid,
                loading,
            )
            .map_err(|err| err.to_string())?;
            map.power.iter().map(|p| 10.0 * p.log10()).collect()
        };
        Ok((curve.loss_db, eig, capon))
    }

    fn gridless_trace(result: &RamResult, rank: usize) -> GridlessTrace {
        GridlessTrace {
            surrogate_objectives: result.surrogate_objectives.clone(),
            mm_iterations: result.mm_iterations,
            sdp_iterations: result.steps.iter().map(|s| s.sdp_iterations).collect(),
            converged: result.converged,
            clutter_rank_estimate: rank,
        }
    }

    fn run_method(&self, method: Method, set: Option<&SnapshotSet>) -> Result<MethodOutput, String> {
        let start = Instant::now();
        let sigma2 = self.radar.noise_power;
        let (n, m) = (self.radar.num_pulses, self.radar.num_elements);
        let loading = self.config.loading();
        let (estimate, loading, trace) = match method {
            Method::Optimal => (self.exact.clone(), 0.0, None),
            Method::Smi => {
                let set = set.expect("snapshots drawn for estimators");
                (smi_ccm(set).map_err(|e| e.to_string())?, loading, None)
            }
            Method::Focuss => {
                let set = set.expect("snapshots drawn for estimators");
                let dict = self.dictionary.as_ref().expect("dictionary built for FOCUSS");
                let profile = focuss_solve(dict, set, &self.config.focuss.settings()).map_err(|e| e.to_string())?;
                (ongrid_ccm(&profile, dict, sigma2).map_err(|e| e.to_string())?, loading, None)
            }
            Method::Anm | Method::Ram => {
                let set = set.expect("snapshots drawn for estimators");
                let settings = self.config.ram.settings();
                let result = if method == Method::Anm {
                    anm_solve(set, n, m, sigma2, &settings)
                } else {
                    ram_solve(set, n, m, sigma2, &settings)
                }
                .map_err(|e| e.to_string())?;
                let ccm = ccm_from_toeplitz(&result, sigma2).map_err(|e| e.to_string())?;
                let trace = Self::gridless_trace(&result, ccm.clutter_rank_estimate);
                (ccm.matrix, loading, Some(trace))
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        let (loss_db, eig_db, capon_db) = self.evaluate(&estimate, loading)?;
        Ok(MethodOutput {
            loss_db,
            eig_db,
            capon_db,
            seconds,
            trace,
        })
    }
}

/// Run every Monte Carlo trial. `progress` is called after each run.
pub fn run_experiment(
    config: &ExperimentConfig,
    mut progress: impl FnMut(&RunRecord),
) -> Result<ExperimentOutcome, BenchError> {
    config.validate()?;
    let radar = config.radar.to_radar();
    let scenario = make_clutter_scenario(&radar).map_err(|e| BenchError::Config(e.to_string()))?;
    let exact = exact_ccm(&scenario, &radar).map_err(|e| BenchError::Config(e.to_string()))?;
    let e = &config.experiment;
    let doppler_grid = uniform_grid(e.doppler_points);
    let heatmap_grid = if e.heatmap_points == 0 { Vec::new() } else { uniform_grid(e.heatmap_points) };
    let dictionary = if e.methods.contains(&Method::Focuss) {
        Some(
            build_dictionary(&radar, config.focuss.rho_s, config.focuss.rho_d)
                .map_err(|err| BenchError::Config(err.to_string()))?,
        )
    } else {
        None
    };

    let optimal = sinr_loss_curve(&exact, &exact, &radar, &doppler_grid, e.target_spatial_freq, 0.0)
        .map_err(|err| BenchError::Config(err.to_string()))?;
    let notch_doppler = optimal.notch().map(|(f, _)| f).unwrap_or(0.0);

    let ctx = Context { config, radar, scenario, exact, doppler_grid, heatmap_grid, dictionary };
    let needs_data = e.methods.iter().any(|m| *m != Method::Optimal);

    let mut runs = Vec::with_capacity(e.monte_carlo_runs);
    for run in 0..e.monte_carlo_runs {
        let seed = e.base_seed.wrapping_add(run as u64);
        let set = if needs_data {
            Some(
                draw_snapshots(&ctx.scenario, &ctx.radar, e.num_snapshots, seed)
                    .map_err(|err| BenchError::Config(err.to_string()))?,
            )
        } else {
            None
        };
        let outputs = e
            .methods
            .iter()
            .map(|&method| (method, ctx.run_method(method, set.as_ref())))
            .collect();
        let record = RunRecord { run, seed, outputs };
        progress(&record);
        runs.push(record);
    }

    let aggregates = e
        .methods
        .iter()
        .map(|&method| (method, aggregate(&runs, method, &ctx.doppler_grid, notch_doppler, e.notch_half_width)))
        .collect();

    Ok(ExperimentOutcome {
        config: config.clone(),
        doppler_grid: ctx.doppler_grid,
        heatmap_grid: ctx.heatmap_grid,
        notch_doppler,
        runs,
        aggregates,
    })
}

fn mean_columns<'a>(rows: impl Iterator<Item = &'a Vec<f64>>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for row in rows {
        if sum.is_empty() {
            sum = vec![0.0; row.len()];
        }
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
        count += 1;
    }
    sum.iter().map(|s| s / count.max(1) as f64).collect()
}

fn aggregate(runs: &[RunRecord], method: Method, grid: &[f64], notch: f64, half_width: f64) -> MethodAggregate {
    let ok: Vec<&MethodOutput> = runs
        .iter()
        .filter_map(|r| r.outputs.get(&method))
        .filter_map(|o| o.as_ref().ok())
        .collect();
    let failed_runs = runs
        .iter()
        .filter(|r| matches!(r.outputs.get(&method), Some(Err(_))))
        .count();
    let nonconverged_runs = ok
        .iter()
        .filter(|o| o.trace.as_ref().is_some_and(|t| !t.converged))
        .count();
    let loss_db = mean_columns(ok.iter().map(|o| &o.loss_db));
    let mean_loss_outside_notch_db = if loss_db.is_empty() {
        f64::NAN
    } else {
        mean_outside_notch(grid, &loss_db, notch, half_width)
    };
    MethodAggregate {
        eig_db: mean_columns(ok.iter().map(|o| &o.eig_db)),
        capon_db: mean_columns(ok.iter().map(|o| &o.capon_db)),
        loss_db,
        mean_loss_outside_notch_db,
        successful_runs: ok.len(),
        failed_runs,
        nonconverged_runs,
    }
}
