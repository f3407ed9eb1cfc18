//! CSV tables, heatmaps and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Method;
use crate::experiment::ExperimentOutcome;
use crate::BenchError;

/// Dynamic range of the graymap, in dB below the map maximum.
pub const HEATMAP_FLOOR_DB: f64 = -50.0;

fn io_err(path: &Path, e: std::io::Error) -> BenchError {
    BenchError::Io(format!("{}: {e}", path.display()))
}

fn check_finite(values: &[f64], what: &str) -> Result<(), BenchError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(BenchError::Data(format!("{what}: non-finite value at position {i}"))),
        None => Ok(()),
    }
}

/// CSV text with a header and one row per index. `columns` pairs a name
/// with its values; every column has the length of `key_values`.
pub fn table_csv(key: &str, key_values: &[f64], columns: &[(String, Vec<f64>)]) -> Result<String, BenchError> {
    let mut out = String::from(key);
    for (name, values) in columns {
        if values.len() != key_values.len() {
            return Err(BenchError::Data(format!(
                "column {name} has {} rows, expected {}",
                values.len(),
                key_values.len()
            )));
        }
        check_finite(values, name)?;
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, k) in key_values.iter().enumerate() {
        out.push_str(&k.to_string());
        for (_, values) in columns {
            out.push(',');
            out.push_str(&values[i].to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Dense grid CSV: header `doppler,<spatial values>`, then one row per
/// Doppler bin.
pub fn heatmap_csv(doppler: &[f64], spatial: &[f64], values_db: &[f64]) -> Result<String, BenchError> {
    if values_db.len() != doppler.len() * spatial.len() {
        return Err(BenchError::Data("heatmap size does not match its grid".into()));
    }
    check_finite(values_db, "heatmap")?;
    let mut out = String::from("doppler");
    for s in spatial {
        out.push(',');
        out.push_str(&s.to_string());
    }
    out.push('\n');
    for (p, fd) in doppler.iter().enumerate() {
        out.push_str(&fd.to_string());
        for v in &values_db[p * spatial.len()..(p + 1) * spatial.len()] {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Binary PGM (P5) of a dB map: 0 dB relative to the maximum is white,
/// [`HEATMAP_FLOOR_DB`] and below is black.
pub fn heatmap_pgm(rows: usize, cols: usize, values_db: &[f64]) -> Result<Vec<u8>, BenchError> {
    if values_db.len() != rows * cols || rows == 0 || cols == 0 {
        return Err(BenchError::Data("heatmap size does not match its grid".into()));
    }
    check_finite(values_db, "heatmap")?;
    let top = values_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(values_db.iter().map(|v| {
        let rel = (v - top).clamp(HEATMAP_FLOOR_DB, 0.0);
        ((rel - HEATMAP_FLOOR_DB) / -HEATMAP_FLOOR_DB * 255.0).round() as u8
    }));
    Ok(out)
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
        f.sync_all().map_err(|e| io_err(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTiming {
    pub run: usize,
    pub seed: u64,
    pub seconds: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub successful_runs: usize,
    pub failed_runs: usize,
    pub nonconverged_runs: usize,
    pub mean_loss_outside_notch_db: f64,
    pub errors: Vec<String>,
    /// Runs whose MM surrogate rose beyond 1e-5 relative slack.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surrogate_increases: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub config: String,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub averaging: String,
    pub notch_doppler: f64,
    pub methods: Vec<MethodSummary>,
    pub timings: Vec<RunTiming>,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn summaries(outcome: &ExperimentOutcome) -> Vec<MethodSummary> {
    outcome
        .aggregates
        .iter()
        .map(|(method, agg)| {
            let errors = outcome
                .runs
                .iter()
                .filter_map(|r| match r.outputs.get(method) {
                    Some(Err(e)) => Some(format!("run {} (seed {}): {e}", r.run, r.seed)),
                    _ => None,
                })
                .collect();
            let surrogate_increases = matches!(method, Method::Anm | Method::Ram)
                .then(|| outcome.traces(*method).filter(|t| !t.is_monotone(1e-5)).count());
            MethodSummary {
                method: method.to_string(),
                successful_runs: agg.successful_runs,
                failed_runs: agg.failed_runs,
                nonconverged_runs: agg.nonconverged_runs,
                mean_loss_outside_notch_db: agg.mean_loss_outside_notch_db,
                errors,
                surrogate_increases,
            }
        })
        .collect()
}

/// Files produced for an outcome, as `(relative name, bytes)`.
pub fn render_files(outcome: &ExperimentOutcome) -> Result<Vec<(String, Vec<u8>)>, BenchError> {
    let mut files = Vec::new();
    let ok: Vec<(Method, &crate::experiment::MethodAggregate)> = outcome
        .aggregates
        .iter()
        .filter(|(_, a)| a.successful_runs > 0)
        .map(|(m, a)| (*m, a))
        .collect();

    let loss_cols: Vec<(String, Vec<f64>)> =
        ok.iter().map(|(m, a)| (format!("loss_db_{m}"), a.loss_db.clone())).collect();
    files.push((
        "sinr_loss.csv".to_string(),
        table_csv("doppler", &outcome.doppler_grid, &loss_cols)?.into_bytes(),
    ));

    if let Some((_, first)) = ok.first() {
        let index: Vec<f64> = (1..=first.eig_db.len()).map(|i| i as f64).collect();
        let eig_cols: Vec<(String, Vec<f64>)> =
            ok.iter().map(|(m, a)| (format!("eig_db_{m}"), a.eig_db.clone())).collect();
        files.push(("eigenspectrum.csv".to_string(), table_csv("index", &index, &eig_cols)?.into_bytes()));
    }

    let mut summary = String::from("method,mean_loss_outside_notch_db,successful_runs,failed_runs\n");
    for (method, agg) in &outcome.aggregates {
        summary.push_str(&format!(
            "{method},{},{},{}\n",
            agg.mean_loss_outside_notch_db, agg.successful_runs, agg.failed_runs
        ));
    }
    files.push(("summary.csv".to_string(), summary.into_bytes()));

    let grid = &outcome.heatmap_grid;
    if !grid.is_empty() {
        for (method, agg) in &ok {
            files.push((
                format!("capon_{method}.csv"),
                heatmap_csv(grid, grid, &agg.capon_db)?.into_bytes(),
            ));
            files.push((format!("capon_{method}.pgm"), heatmap_pgm(grid.len(), grid.len(), &agg.capon_db)?));
        }
    }
    Ok(files)
}

/// Write every artifact and the manifest into `dir`.
pub fn write_artifacts(outcome: &ExperimentOutcome, dir: &Path) -> Result<Manifest, BenchError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut entries = Vec::new();
    for (name, bytes) in render_files(outcome)? {
        let path: PathBuf = dir.join(&name);
        write_atomic(&path, &bytes)?;
        entries.push(FileEntry { path: name, sha256: sha256_hex(&bytes), bytes: bytes.len() });
    }
    let config_text = outcome.config.to_toml();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        config: config_text,
        base_seed: outcome.config.experiment.base_seed,
        seeds: outcome.runs.iter().map(|r| r.seed).collect(),
        averaging: "SINR loss, eigenspectra and Capon maps are averaged in dB over successful runs".into(),
        notch_doppler: outcome.notch_doppler,
        methods: summaries(outcome),
        timings: outcome
            .runs
            .iter()
            .map(|r| RunTiming {
                run: r.run,
                seed: r.seed,
                seconds: r
                    .outputs
                    .iter()
                    .filter_map(|(m, o)| o.as_ref().ok().map(|o| (m.to_string(), o.seconds)))
                    .collect(),
            })
            .collect(),
        files: entries,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| BenchError::Data(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_NAME), &json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_has_header_plus_rows() {
        let grid: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let text = table_csv("doppler", &grid, &[("loss_db_ram".into(), vec![-1.0; 101])]).unwrap();
        assert_eq!(text.lines().count(), 102);
        assert_eq!(text.lines().next().unwrap(), "doppler,loss_db_ram");
        assert_eq!(text.lines().nth(1).unwrap(), "0,-1");
    }

    #[test]
    fn csv_rejects_ragged_or_nonfinite_columns() {
        assert!(table_csv("k", &[1.0, 2.0], &[("a".into(), vec![1.0])]).is_err());
        assert!(table_csv("k", &[1.0], &[("a".into(), vec![f64::NAN])]).is_err());
    }

    #[test]
    fn flat_map_is_constant_graymap() {
        let pgm = heatmap_pgm(2, 3, &[7.0; 6]).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert!(pgm[header.len()..].iter().all(|&p| p == 255));
    }

    #[test]
    fn graymap_clips_below_floor() {
        // 1e-9 relative is -90 dB
        let pgm = heatmap_pgm(1, 3, &[0.0, -90.0, -25.0]).unwrap();
        let px = &pgm[pgm.len() - 3..];
        assert_eq!(px, &[255, 0, 128]);
    }

    #[test]
    fn heatmap_csv_is_row_major() {
        let text = heatmap_csv(&[0.1, 0.2], &[-0.5, 0.5], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec!["doppler,-0.5,0.5", "0.1,1,2", "0.2,3,4"]);
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_atomic(&path, b"x\n").unwrap();
        write_atomic(&path, b"y\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"y\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
