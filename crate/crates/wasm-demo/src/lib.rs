//! Browser bindings: clutter Capon maps, eigenspectra and SINR loss for an
//! airborne array at a chosen crab angle.

use wasm_bindgen::prelude::*;

use stap_core::ongrid_sr::{build_dictionary, focuss_solve, ongrid_ccm, FocussSettings};
use stap_core::radar_scene::{draw_snapshots, exact_ccm, make_clutter_scenario, smi_ccm, ClutterPatch, HermitianCov, RadarConfig};
use stap_core::stap_eval::{capon_spectrum, eigenspectrum, sinr_loss_curve, uniform_grid};

fn js_err(e: stap_core::StapError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Scene {
    radar: RadarConfig,
    patches: Vec<ClutterPatch>,
    exact: HermitianCov,
}

#[wasm_bindgen]
impl Scene {
    /// Benchmark scene at `crab_deg` degrees and the given clutter-to-noise ratio.
    #[wasm_bindgen(constructor)]
    pub fn new(crab_deg: f64, cnr_db: f64) -> Result<Scene, JsError> {
        let radar = RadarConfig { cnr_db, ..RadarConfig::benchmark(crab_deg.to_radians()) };
        radar.validate().map_err(js_err)?;
        let patches = make_clutter_scenario(&radar).map_err(js_err)?;
        let exact = exact_ccm(&patches, &radar).map_err(js_err)?;
        Ok(Scene { radar, patches, exact })
    }

    /// Capon spectrum of the exact clutter covariance in dB relative to its
    /// maximum, `points × points`, rows indexed by Doppler.
    pub fn capon_db(&self, points: usize) -> Result<Vec<f64>, JsError> {
        let grid = uniform_grid(points);
        let map = capon_spectrum(&self.exact, self.radar.num_pulses, self.radar.num_elements, &grid, &grid, 0.0)
            .map_err(js_err)?;
        let db: Vec<f64> = map.power.iter().map(|p| 10.0 * p.log10()).collect();
        let top = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(db.into_iter().map(|v| v - top).collect())
    }

    /// Eigenvalues of the exact covariance in dB, descending.
    pub fn eigen_db(&self) -> Vec<f64> {
        eigenspectrum(&self.exact)
    }

    /// SINR loss in dB over `points` Doppler bins for `method`
    /// (`optimal`, `smi` or `focuss`) trained on `snapshots` samples.
    pub fn loss_db(&self, method: &str, snapshots: usize, seed: u32, points: usize) -> Result<Vec<f64>, JsError> {
        let sigma2 = self.radar.noise_power;
        let (estimate, loading) = match method {
            "optimal" => (self.exact.clone(), 0.0),
            "smi" | "focuss" => {
                let set = draw_snapshots(&self.patches, &self.radar, snapshots, seed as u64).map_err(js_err)?;
                let cov = if method == "smi" {
                    smi_ccm(&set).map_err(js_err)?
                } else {
                    let dict = build_dictionary(&self.radar, 6, 6).map_err(js_err)?;
                    let profile = focuss_solve(&dict, &set, &FocussSettings::default()).map_err(js_err)?;
                    ongrid_ccm(&profile, &dict, sigma2).map_err(js_err)?
                };
                (cov, sigma2)
            }
            other => return Err(JsError::new(&format!("unknown method `{other}`"))),
        };
        let curve = sinr_loss_curve(&estimate, &self.exact, &self.radar, &uniform_grid(points), 0.0, loading)
            .map_err(js_err)?;
        Ok(curve.loss_db)
    }

    /// Doppler bin centers used by `loss_db` and `capon_db`.
    pub fn grid(points: usize) -> Vec<f64> {
        uniform_grid(points)
    }
}
