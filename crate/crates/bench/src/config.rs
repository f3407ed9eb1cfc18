//! Experiment configuration files.
//!
//! Configs are TOML documents with four sections. Every key is typed and
//! unknown keys are rejected. Missing radar, FOCUSS and RAM keys fall back
//! to the benchmark values; the `[experiment]` section must name its methods.
//!
//! ```toml
//! [radar]
//! crab_angle_deg = 45.0
//!
//! [experiment]
//! methods = ["optimal", "smi", "focuss", "anm", "ram"]
//! num_snapshots = 3
//! monte_carlo_runs = 100
//! base_seed = 0
//! output_dir = "out/psi45"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stap_core::gridless_stap::{EpsilonPolicy, RamSettings};
use stap_core::ongrid_sr::FocussSettings;
use stap_core::radar_scene::RadarConfig;
use stap_core::sdp_core::SolverSettings;

use crate::BenchError;

/// Configs shipped with the runner, as `(file name, contents)`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("sidelooking.cfg", include_str!("../configs/sidelooking.cfg")),
    ("sidelooking_k1.cfg", include_str!("../configs/sidelooking_k1.cfg")),
    ("psi45.cfg", include_str!("../configs/psi45.cfg")),
    ("psi45_k1.cfg", include_str!("../configs/psi45_k1.cfg")),
    ("psi90.cfg", include_str!("../configs/psi90.cfg")),
    ("psi90_k1.cfg", include_str!("../configs/psi90_k1.cfg")),
];

/// Contents of a bundled config by file name.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Optimal,
    Smi,
    Focuss,
    Anm,
    Ram,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Optimal, Method::Smi, Method::Focuss, Method::Anm, Method::Ram];

    pub fn name(self) -> &'static str {
        match self {
            Method::Optimal => "optimal",
            Method::Smi => "smi",
            Method::Focuss => "focuss",
            Method::Anm => "anm",
            Method::Ram => "ram",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s.trim().to_ascii_lowercase())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarSection {
    pub crab_angle_deg: f64,
    pub num_pulses: usize,
    pub num_elements: usize,
    pub element_spacing: f64,
    pub wavelength: f64,
    pub prf: f64,
    pub platform_speed: f64,
    pub platform_height: f64,
    pub noise_power: f64,
    pub cnr_db: f64,
    pub num_patches: usize,
    pub range: f64,
    pub range_resolution: f64,
}

impl Default for RadarSection {
    fn default() -> Self {
        let b = RadarConfig::benchmark(0.0);
        Self {
            crab_angle_deg: 0.0,
            num_pulses: b.num_pulses,
            num_elements: b.num_elements,
            element_spacing: b.element_spacing,
            wavelength: b.wavelength,
            prf: b.prf,
            platform_speed: b.platform_speed,
            platform_height: b.platform_height,
            noise_power: b.noise_power,
            cnr_db: b.cnr_db,
            num_patches: b.num_patches,
            range: b.range,
            range_resolution: b.range_resolution,
        }
    }
}

impl RadarSection {
    pub fn to_radar(&self) -> RadarConfig {
        RadarConfig {
            num_pulses: self.num_pulses,
            num_elements: self.num_elements,
            element_spacing: self.element_spacing,
            wavelength: self.wavelength,
            prf: self.prf,
            platform_speed: self.platform_speed,
            platform_height: self.platform_height,
            crab_angle: self.crab_angle_deg.to_radians(),
            noise_power: self.noise_power,
            cnr_db: self.cnr_db,
            num_patches: self.num_patches,
            range: self.range,
            range_resolution: self.range_resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub methods: Vec<Method>,
    pub num_snapshots: usize,
    #[serde(default = "default_runs")]
    pub monte_carlo_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Points of the Doppler grid for SINR-loss curves.
    #[serde(default = "default_doppler_points")]
    pub doppler_points: usize,
    /// Points per axis of the Capon heatmaps; 0 disables them.
    #[serde(default = "default_heatmap_points")]
    pub heatmap_points: usize,
    #[serde(default)]
    pub target_spatial_freq: f64,
    /// Diagonal loading for estimated covariances; defaults to the noise power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<f64>,
    /// Half-width of the excluded notch region for summary statistics.
    #[serde(default = "default_notch_half_width")]
    pub notch_half_width: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_runs() -> usize {
    100
}
fn default_doppler_points() -> usize {
    101
}
fn default_heatmap_points() -> usize {
    64
}
fn default_notch_half_width() -> f64 {
    0.1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocussSection {
    pub lambda: f64,
    pub p: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub rho_s: usize,
    pub rho_d: usize,
}

impl Default for FocussSection {
    fn default() -> Self {
        let f = FocussSettings::default();
        Self {
            lambda: f.lambda,
            p: f.p,
            max_iterations: f.max_iterations,
            tolerance: f.tolerance,
            rho_s: 6,
            rho_d: 6,
        }
    }
}

impl FocussSection {
    pub fn settings(&self) -> FocussSettings {
        FocussSettings {
            lambda: self.lambda,
            p: self.p,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamSection {
    /// Log-det regularization; defaults to the noise power.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    pub max_mm_iterations: usize,
    pub mm_tolerance: f64,
    /// Total fidelity radius; defaults to `K σ² (NM + 2√NM)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub sdp_tolerance: f64,
    pub sdp_max_iterations: usize,
    pub sdp_rho: f64,
    pub sdp_over_relaxation: f64,
}

impl Default for RamSection {
    fn default() -> Self {
        let r = RamSettings::default();
        Self {
            zeta: r.zeta,
            max_mm_iterations: r.max_mm_iterations,
            mm_tolerance: r.mm_tolerance,
            epsilon: None,
            sdp_tolerance: r.sdp.tolerance,
            sdp_max_iterations: r.sdp.max_iterations,
            sdp_rho: r.sdp.rho,
            sdp_over_relaxation: r.sdp.over_relaxation,
        }
    }
}

impl RamSection {
    pub fn settings(&self) -> RamSettings {
        RamSettings {
            zeta: self.zeta,
            max_mm_iterations: self.max_mm_iterations,
            mm_tolerance: self.mm_tolerance,
            epsilon_policy: match self.epsilon {
                Some(e) => EpsilonPolicy::Explicit(e),
                None => EpsilonPolicy::NoiseStatistic,
            },
            sdp: SolverSettings {
                rho: self.sdp_rho,
                max_iterations: self.sdp_max_iterations,
                tolerance: self.sdp_tolerance,
                over_relaxation: self.sdp_over_relaxation,
                adaptive_rho: true,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub radar: RadarSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub focuss: FocussSection,
    #[serde(default)]
    pub ram: RamSection,
}

/// A validation failure tied to a config key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl ExperimentConfig {
    /// Parse and validate config text. `origin` names the source in errors.
    pub fn parse(text: &str, origin: &str) -> Result<Self, BenchError> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| BenchError::Config(format!("{origin}: {e}")))?;
        config.experiment.methods = normalized_methods(&config.experiment.methods);
        let issues = config.issues(Some(text));
        if let Some(first) = issues.first() {
            return Err(BenchError::Config(format!("{origin}: {first}")));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Re-check invariants, e.g. after command-line overrides.
    pub fn validate(&self) -> Result<(), BenchError> {
        match self.issues(None).first() {
            Some(issue) => Err(BenchError::Config(issue.to_string())),
            None => Ok(()),
        }
    }

    /// Every violated invariant, with source lines when `text` is given.
    pub fn issues(&self, text: Option<&str>) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut flag = |section: &str, key: &str, ok: bool, message: &str| {
            if !ok {
                out.push(ConfigIssue {
                    key: format!("{section}.{key}"),
                    line: text.and_then(|t| locate(t, section, key)),
                    message: message.to_string(),
                });
            }
        };
        let e = &self.experiment;
        flag("experiment", "methods", !e.methods.is_empty(), "at least one method is required");
        flag("experiment", "num_snapshots", e.num_snapshots >= 1, "must be at least 1");
        flag("experiment", "monte_carlo_runs", e.monte_carlo_runs >= 1, "must be at least 1");
        flag("experiment", "doppler_points", e.doppler_points >= 2, "must be at least 2");
        flag("experiment", "heatmap_points", e.heatmap_points != 1, "must be 0 (disabled) or at least 2");
        flag(
            "experiment",
            "target_spatial_freq",
            e.target_spatial_freq > -0.5 && e.target_spatial_freq <= 0.5,
            "must lie in (-0.5, 0.5]",
        );
        flag(
            "experiment",
            "loading",
            e.loading.is_none_or(|l| l >= 0.0 && l.is_finite()),
            "must be finite and nonnegative",
        );
        flag(
            "experiment",
            "notch_half_width",
            e.notch_half_width >= 0.0 && e.notch_half_width < 0.5,
            "must lie in [0, 0.5)",
        );

        if let Err(err) = self.radar.to_radar().validate() {
            flag("radar", radar_key(&err.to_string()), false, &err.to_string());
        }

        let f = &self.focuss;
        flag("focuss", "lambda", f.lambda > 0.0 && f.lambda.is_finite(), "must be positive");
        flag("focuss", "p", f.p > 0.0 && f.p <= 1.0, "must lie in (0, 1]");
        flag("focuss", "max_iterations", f.max_iterations >= 1, "must be at least 1");
        flag("focuss", "tolerance", f.tolerance >= 0.0, "must be nonnegative");
        flag("focuss", "rho_s", f.rho_s >= 1, "must be at least 1");
        flag("focuss", "rho_d", f.rho_d >= 1, "must be at least 1");

        let r = &self.ram;
        flag("ram", "zeta", r.zeta.is_none_or(|z| z > 0.0 && z.is_finite()), "must be positive");
        flag("ram", "max_mm_iterations", r.max_mm_iterations >= 1, "must be at least 1");
        flag("ram", "mm_tolerance", r.mm_tolerance >= 0.0, "must be nonnegative");
        flag(
            "ram",
            "epsilon",
            r.epsilon.is_none_or(|v| v >= 0.0 && v.is_finite()),
            "must be finite and nonnegative",
        );
        flag("ram", "sdp_tolerance", r.sdp_tolerance > 0.0, "must be positive");
        flag("ram", "sdp_max_iterations", r.sdp_max_iterations >= 1, "must be at least 1");
        flag("ram", "sdp_rho", r.sdp_rho > 0.0 && r.sdp_rho.is_finite(), "must be positive");
        flag(
            "ram",
            "sdp_over_relaxation",
            (1.0..2.0).contains(&r.sdp_over_relaxation),
            "must lie in [1, 2)",
        );
        out
    }

    /// Loading applied to estimated covariances.
    pub fn loading(&self) -> f64 {
        self.experiment.loading.unwrap_or(self.radar.noise_power)
    }

    /// Canonical TOML rendering of the resolved config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Sorted, deduplicated method list.
fn normalized_methods(methods: &[Method]) -> Vec<Method> {
    let mut out = methods.to_vec();
    out.sort();
    out.dedup();
    out
}

/// Best-effort mapping from a radar validation message to its key.
fn radar_key(message: &str) -> &'static str {
    const KEYS: [&str; 12] = [
        "range_resolution",
        "range",
        "num_pulses",
        "num_elements",
        "element_spacing",
        "wavelength",
        "prf",
        "platform_speed",
        "platform_height",
        "noise_power",
        "cnr_db",
        "num_patches",
    ];
    KEYS.iter().copied().find(|k| message.contains(k)).unwrap_or("radar")
}

/// 1-based line of `key = ...` inside `[section]`.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Apply command-line overrides and re-validate.
pub fn apply_overrides(
    mut config: ExperimentConfig,
    runs: Option<usize>,
    methods: Option<&[Method]>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<ExperimentConfig, BenchError> {
    if let Some(r) = runs {
        config.experiment.monte_carlo_runs = r;
    }
    if let Some(m) = methods {
        config.experiment.methods = normalized_methods(m);
    }
    if let Some(s) = seed {
        config.experiment.base_seed = s;
    }
    if let Some(o) = out {
        config.experiment.output_dir = o.to_path_buf();
    }
    config.validate()?;
    Ok(config)
}
