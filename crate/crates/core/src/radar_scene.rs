//! Airborne ULA clutter scene.
//!
//! A single range ring at slant range `R_0` is split into `N_c` patches
//! evenly spaced in azimuth over the forward half-plane `(−π/2, π/2)`. Each
//! patch contributes a space-time steering vector whose Doppler and spatial
//! frequencies follow from the platform motion and the crab angle between the
//! array axis and the flight direction.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::relative_asymmetry;
use crate::{CMatrix, CVector, Result, StapError, C64};

/// Platform, array and waveform parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig {
    pub num_pulses: usize,
    pub num_elements: usize,
    /// Element spacing `d` in meters.
    pub element_spacing: f64,
    /// Wavelength `λ` in meters.
    pub wavelength: f64,
    /// Pulse repetition frequency in Hz.
    pub prf: f64,
    /// Platform speed in m/s.
    pub platform_speed: f64,
    /// Platform altitude in meters.
    pub platform_height: f64,
    /// Crab angle `ψ` in radians; 0 is sidelooking, π/2 forward-looking.
    pub crab_angle: f64,
    /// Thermal noise power per channel (linear).
    pub noise_power: f64,
    /// Total clutter-to-noise ratio per space-time channel, in dB.
    pub cnr_db: f64,
    pub num_patches: usize,
    /// Slant range of the range cell in meters.
    pub range: f64,
    pub range_resolution: f64,
}

impl RadarConfig {
    /// The 8-element, 8-pulse, 300 Hz PRF scene used for the benchmark
    /// experiments, at the given crab angle (radians).
    pub fn benchmark(crab_angle: f64) -> Self {
        Self {
            num_pulses: 8,
            num_elements: 8,
            element_spacing: 0.667 / 2.0,
            wavelength: 0.667,
            prf: 300.0,
            platform_speed: 50.0,
            platform_height: 9000.0,
            crab_angle,
            noise_power: 1.0,
            cnr_db: 40.0,
            num_patches: 360,
            range: 20_000.0,
            range_resolution: 37.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(StapError::InvalidConfig(msg.to_string()));
        if self.num_pulses == 0 {
            return fail("num_pulses must be at least 1");
        }
        if self.num_elements == 0 {
            return fail("num_elements must be at least 1");
        }
        if !(self.element_spacing > 0.0) {
            return fail("element_spacing must be positive");
        }
        if !(self.wavelength > 0.0) {
            return fail("wavelength must be positive");
        }
        if !(self.prf > 0.0) {
            return fail("prf must be positive");
        }
        if !self.platform_speed.is_finite() || !self.crab_angle.is_finite() {
            return fail("platform_speed and crab_angle must be finite");
        }
        if !(self.noise_power > 0.0) {
            return fail("noise_power must be positive");
        }
        if self.cnr_db.is_nan() || self.cnr_db == f64::INFINITY {
            return fail("cnr_db must be finite or -inf");
        }
        if self.num_patches == 0 {
            return fail("num_patches must be at least 1");
        }
        if !(self.platform_height >= 0.0) {
            return fail("platform_height must be nonnegative");
        }
        if !(self.range > self.platform_height) {
            return fail("range must exceed platform_height");
        }
        if !(self.range_resolution > 0.0) {
            return fail("range_resolution must be positive");
        }
        Ok(())
    }

    /// Space-time dimension `N·M`.
    pub fn dim(&self) -> usize {
        self.num_pulses * self.num_elements
    }

    /// Flat-earth elevation of the range ring, `arcsin(H / R_0)`.
    pub fn elevation(&self) -> f64 {
        (self.platform_height / self.range).asin()
    }

    /// Total clutter power per channel, `σ_n² · 10^(CNR/10)`.
    pub fn total_clutter_power(&self) -> f64 {
        self.noise_power * 10f64.powf(self.cnr_db / 10.0)
    }
}

/// One azimuth bin of the clutter ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterPatch {
    pub azimuth: f64,
    pub elevation: f64,
    /// Normalized Doppler frequency, cycles per pulse, in (−0.5, 0.5].
    pub doppler_freq: f64,
    /// Normalized spatial frequency, cycles per element, in (−0.5, 0.5].
    pub spatial_freq: f64,
    /// Expected `|a_i|²`.
    pub power: f64,
}

/// A single space-time sample of length `N·M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    data: CVector,
}

impl Snapshot {
    pub fn new(data: CVector) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &CVector {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// An ordered, nonempty collection of equal-length snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    snapshots: Vec<Snapshot>,
    seed: u64,
}

impl SnapshotSet {
    pub fn new(snapshots: Vec<Snapshot>, seed: u64) -> Result<Self> {
        let first = snapshots.first().ok_or(StapError::EmptySnapshotSet)?;
        let len = first.len();
        if len == 0 {
            return Err(StapError::InvalidDimension("zero-length snapshot".into()));
        }
        if let Some(bad) = snapshots.iter().find(|s| s.len() != len) {
            return Err(StapError::DimensionMismatch {
                expected: len,
                found: bad.len(),
            });
        }
        Ok(Self { snapshots, seed })
    }

    /// Build a set from the columns of an `NM × K` matrix.
    pub fn from_matrix(x: &CMatrix, seed: u64) -> Result<Self> {
        let snaps = x
            .column_iter()
            .map(|c| Snapshot::new(c.into_owned()))
            .collect();
        Self::new(snaps, seed)
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.snapshots[0].len()
    }

    /// Snapshots as the columns of an `NM × K` matrix.
    pub fn to_matrix(&self) -> CMatrix {
        let cols: Vec<CVector> = self.snapshots.iter().map(|s| s.data.clone()).collect();
        CMatrix::from_columns(&cols)
    }
}

/// A Hermitian (and, by construction of every producer, PSD) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCov {
    matrix: CMatrix,
}

impl HermitianCov {
    /// Accepts `matrix` if it is square and Hermitian to 1e−12 relative;
    /// the stored copy is exactly Hermitian.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(StapError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let asym = relative_asymmetry(&matrix);
        if asym > 1e-12 {
            return Err(StapError::NotHermitian(asym));
        }
        Ok(Self {
            matrix: crate::linalg::hermitian_part(&matrix),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigenvalues(&self.matrix)
    }
}

/// Wrap a normalized frequency into (−0.5, 0.5].
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f - (f - 0.5).ceil();
    if w <= -0.5 {
        w + 1.0
    } else {
        w
    }
}

fn check_len(len: usize, what: &str) -> Result<()> {
    if len == 0 {
        return Err(StapError::InvalidDimension(format!("{what} must be at least 1")));
    }
    Ok(())
}

fn harmonic(freq: f64, len: usize) -> CVector {
    DVector::from_fn(len, |k, _| {
        C64::from_polar(1.0, 2.0 * PI * k as f64 * freq)
    })
}

/// Temporal steering vector `[1, e^{j2πf_d}, …, e^{j2π(N−1)f_d}]`.
pub fn time_steering(doppler_freq: f64, num_pulses: usize) -> Result<CVector> {
    check_len(num_pulses, "number of pulses")?;
    Ok(harmonic(doppler_freq, num_pulses))
}

/// Spatial steering vector `[1, e^{j2πf_s}, …, e^{j2π(M−1)f_s}]`.
pub fn space_steering(spatial_freq: f64, num_elements: usize) -> Result<CVector> {
    check_len(num_elements, "number of elements")?;
    Ok(harmonic(spatial_freq, num_elements))
}

/// Space-time steering vector `s_d ⊗ s_s` (Doppler index varies slowest).
pub fn space_time_steering(
    doppler_freq: f64,
    spatial_freq: f64,
    num_pulses: usize,
    num_elements: usize,
) -> Result<CVector> {
    let sd = time_steering(doppler_freq, num_pulses)?;
    let ss = space_steering(spatial_freq, num_elements)?;
    Ok(sd.kronecker(&ss))
}

/// Doppler and spatial frequency of the patch at azimuth `azimuth`.
pub fn patch_frequencies(config: &RadarConfig, azimuth: f64) -> Result<(f64, f64)> {
    config.validate()?;
    let cos_el = config.elevation().cos();
    let doppler = 2.0 * config.platform_speed / (config.wavelength * config.prf)
        * azimuth.cos()
        * cos_el;
    let spatial = config.element_spacing / config.wavelength
        * cos_el
        * (azimuth - config.crab_angle).cos();
    Ok((wrap_frequency(doppler), wrap_frequency(spatial)))
}

/// Patches at azimuths `−π/2 + (i + ½)·π/N_c`, sharing the total clutter
/// power equally.
pub fn make_clutter_scenario(config: &RadarConfig) -> Result<Vec<ClutterPatch>> {
    config.validate()?;
    let nc = config.num_patches;
    let power = config.total_clutter_power() / nc as f64;
    let elevation = config.elevation();
    (0..nc)
        .map(|i| {
            let azimuth = -PI / 2.0 + (i as f64 + 0.5) * PI / nc as f64;
            let (doppler_freq, spatial_freq) = patch_frequencies(config, azimuth)?;
            Ok(ClutterPatch {
                azimuth,
                elevation,
                doppler_freq,
                spatial_freq,
                power,
            })
        })
        .collect()
}

fn patch_steering(patch: &ClutterPatch, config: &RadarConfig) -> CVector {
    harmonic(patch.doppler_freq, config.num_pulses).kronecker(&harmonic(
        patch.spatial_freq,
        config.num_elements,
    ))
}

/// Draw `count` i.i.d. training snapshots.
///
/// Each snapshot is `Σ_i a_i s_i + n`, where `a_i ~ CN(0, power_i)` is redrawn
/// per snapshot and `n ~ CN(0, σ_n² I)`. Randomness comes from a ChaCha8
/// stream seeded with `seed`, so the output is reproducible across platforms.
pub fn draw_snapshots(
    scenario: &[ClutterPatch],
    config: &RadarConfig,
    count: usize,
    seed: u64,
) -> Result<SnapshotSet> {
    config.validate()?;
    check_len(count, "snapshot count")?;
    let dim = config.dim();
    let steering: Vec<CVector> = scenario
        .iter()
        .map(|p| patch_steering(p, config))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |var: f64| -> C64 {
        let scale = (var / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(scale * re, scale * im)
    };
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = CVector::zeros(dim);
        for (patch, s) in scenario.iter().zip(&steering) {
            let a = gaussian(patch.power);
            x.axpy(a, s, C64::new(1.0, 0.0));
        }
        for xi in x.iter_mut() {
            *xi += gaussian(config.noise_power);
        }
        snapshots.push(Snapshot::new(x));
    }
    SnapshotSet::new(snapshots, seed)
}

/// Exact clutter-plus-noise covariance `Σ_i p_i s_i s_i^H + σ_n² I`.
pub fn exact_ccm(scenario: &[ClutterPatch], config: &RadarConfig) -> Result<HermitianCov> {
    config.validate()?;
    let dim = config.dim();
    let mut r = CMatrix::identity(dim, dim).scale(config.noise_power);
    for patch in scenario {
        let s = patch_steering(patch, config);
        r.ger(C64::new(patch.power, 0.0), &s, &s.map(|z| z.conj()), C64::new(1.0, 0.0));
    }
    HermitianCov::new(r)
}

/// Sample covariance `(1/L) Σ_l x_l x_l^H`.
pub fn smi_ccm(set: &SnapshotSet) -> Result<HermitianCov> {
    if set.is_empty() {
        return Err(StapError::EmptySnapshotSet);
    }
    let x = set.to_matrix();
    let r = (&x * x.adjoint()).unscale(set.len() as f64);
    HermitianCov::new(r)
}

/// Brennan's rule `round(N + (M − 1)·β)`, `β = 2 v_p / (d f_r)`.
pub fn brennan_rank(config: &RadarConfig) -> usize {
    let beta = 2.0 * config.platform_speed / (config.element_spacing * config.prf);
    let rank = config.num_pulses as f64 + (config.num_elements as f64 - 1.0) * beta;
    rank.round().max(0.0) as usize
}
