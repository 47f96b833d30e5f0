//! Training data: optimal `τ` for randomly drawn `(r, h, Pe_g)`, the
//! feature/target normalization, the train/validation split and the CSV
//! file format.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::build_mesh;
use crate::metrics::fmt_f64;
use crate::problems::ProblemId;
use crate::stabilization::mu_from_global_peclet;
use crate::tau_search::{find_optimal_tau, mesh_size, SearchSettings};

pub const CSV_HEADER: [&str; 8] = ["r", "h", "pe_g", "mu", "tau_star", "e_at_star", "seed", "theta"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauRecord {
    pub r: usize,
    pub h: f64,
    pub pe_g: f64,
    pub mu: f64,
    pub tau_star: f64,
    pub e_at_star: f64,
    pub seed: u64,
    pub theta: Option<f64>,
}

impl TauRecord {
    /// Mesh subdivisions per axis of the 2D mesh with element size `h`.
    pub fn subdivisions(&self) -> usize {
        (std::f64::consts::SQRT_2 / self.h).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Uniform,
    LogUniform,
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Sampling::Uniform),
            "log-uniform" => Ok(Sampling::LogUniform),
            _ => Err(Error::invalid(format!(
                "unknown sampling {s:?} (expected uniform or log-uniform)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub m: usize,
    pub r_set: Vec<usize>,
    /// Mesh subdivisions; `h = √2/n`.
    pub n_set: Vec<usize>,
    pub pe_range: (f64, f64),
    pub sampling: Sampling,
    pub seed: u64,
    pub settings: SearchSettings,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            m: 900,
            r_set: vec![1, 2, 3],
            n_set: vec![10, 20, 40],
            pe_range: (7.0, 70710.0),
            sampling: Sampling::LogUniform,
            seed: 7,
            settings: SearchSettings::default(),
        }
    }
}

/// The problem every dataset is generated on.
pub const TRAINING_PROBLEM: ProblemId = ProblemId::Training2d;

/// A sample that was not turned into a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<TauRecord>,
    pub dropped: Vec<Dropped>,
}

/// Features of sample `index`, drawn from its own generator seeded with
/// `seed ^ index`.
pub fn draw_features(config: &DatasetConfig, index: usize) -> (usize, usize, f64, u64) {
    let seed = config.seed ^ index as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = config.r_set[rng.gen_range(0..config.r_set.len())];
    let n = config.n_set[rng.gen_range(0..config.n_set.len())];
    let (lo, hi) = config.pe_range;
    let u: f64 = rng.gen();
    let pe_g = match config.sampling {
        Sampling::Uniform => lo + u * (hi - lo),
        Sampling::LogUniform => 10f64.powf(lo.log10() + u * (hi.log10() - lo.log10())),
    };
    (r, n, pe_g, seed)
}

fn check_config(config: &DatasetConfig) -> Result<()> {
    if config.m == 0 {
        return Err(Error::invalid("dataset size must be at least 1"));
    }
    if config.r_set.is_empty() || config.n_set.is_empty() {
        return Err(Error::invalid("degree and mesh sets must be nonempty"));
    }
    if let Some(&r) = config.r_set.iter().find(|&&r| !(1..=crate::fem::MAX_DEGREE).contains(&r)) {
        return Err(Error::UnsupportedDegree(r));
    }
    if config.n_set.contains(&0) {
        return Err(Error::invalid("mesh subdivisions must be positive"));
    }
    let (lo, hi) = config.pe_range;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::invalid(format!("invalid Péclet range [{lo}, {hi}]")));
    }
    config.settings.validate()
}

/// Runs one optimization per sample, in parallel; records come back in
/// sample order. Samples whose optimization fails are dropped and logged.
pub fn generate_dataset(config: &DatasetConfig) -> Result<Dataset> {
    check_config(config)?;
    let beta = TRAINING_PROBLEM.advection_norm();
    let outcomes: Vec<std::result::Result<TauRecord, Dropped>> = (0..config.m)
        .into_par_iter()
        .map(|index| {
            let (r, n, pe_g, seed) = draw_features(config, index);
            let run = || -> Result<TauRecord> {
                let mu = mu_from_global_peclet(beta, 1.0, pe_g)?;
                let problem = TRAINING_PROBLEM.build(mu, None)?;
                let mesh = build_mesh(2, n)?;
                let res = find_optimal_tau(&problem, &mesh, r, &config.settings)?;
                Ok(TauRecord {
                    r,
                    h: mesh_size(2, n),
                    pe_g,
                    mu,
                    tau_star: res.tau_star,
                    e_at_star: res.e_at_star,
                    seed,
                    theta: None,
                })
            };
            run().map_err(|e| {
                warn!("sample {index} (r={r}, n={n}, Pe_g={pe_g}) dropped: {e}");
                Dropped {
                    index,
                    reason: e.to_string(),
                }
            })
        })
        .collect();
    let mut records = Vec::with_capacity(config.m);
    let mut dropped = Vec::new();
    for o in outcomes {
        match o {
            Ok(rec) => records.push(rec),
            Err(d) => dropped.push(d),
        }
    }
    info!("generated {} records, dropped {}", records.len(), dropped.len());
    Ok(Dataset { records, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean_r: f64,
    pub std_r: f64,
    pub mean_h: f64,
    pub std_h: f64,
    pub mean_log10_pe: f64,
    pub std_log10_pe: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl NormalizationStats {
    /// Sample means and standard deviations (`n - 1` denominator) of the
    /// features of `training`.
    pub fn from_records(training: &[TauRecord]) -> Result<Self> {
        if training.len() < 2 {
            return Err(Error::NormalizationFailure(format!(
                "need at least 2 training records, got {}",
                training.len()
            )));
        }
        let (mean_r, std_r) = mean_std(training.iter().map(|t| t.r as f64));
        let (mean_h, std_h) = mean_std(training.iter().map(|t| t.h));
        let (mean_log10_pe, std_log10_pe) = mean_std(training.iter().map(|t| t.pe_g.log10()));
        let stats = NormalizationStats {
            mean_r,
            std_r,
            mean_h,
            std_h,
            mean_log10_pe,
            std_log10_pe,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mean_r,
            self.std_r,
            self.mean_h,
            self.std_h,
            self.mean_log10_pe,
            self.std_log10_pe,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NormalizationFailure("non-finite statistics".into()));
        }
        for (name, s) in [("r", self.std_r), ("h", self.std_h), ("log10 Pe_g", self.std_log10_pe)] {
            if s <= 0.0 {
                return Err(Error::NormalizationFailure(format!(
                    "zero standard deviation of {name} in the training split"
                )));
            }
        }
        Ok(())
    }

    pub fn normalize_features(&self, r: f64, h: f64, pe_g: f64) -> [f64; 3] {
        [
            (r - self.mean_r) / self.std_r,
            (h - self.mean_h) / self.std_h,
            (pe_g.log10() - self.mean_log10_pe) / self.std_log10_pe,
        ]
    }

    /// Inverse of [`Self::normalize_features`], returning `(r, h, Pe_g)`.
    pub fn denormalize_features(&self, x: [f64; 3]) -> (f64, f64, f64) {
        (
            x[0] * self.std_r + self.mean_r,
            x[1] * self.std_h + self.mean_h,
            10f64.powf(x[2] * self.std_log10_pe + self.mean_log10_pe),
        )
    }
}

/// `ỹ = -log10 τ`
pub fn target_from_tau(tau: f64) -> f64 {
    -tau.log10()
}

/// `τ = 10^(-ỹ)`
pub fn tau_from_target(y: f64) -> f64 {
    10f64.powf(-y)
}

/// Normalized feature rows and targets of `records`.
pub fn normalize(records: &[TauRecord], stats: &NormalizationStats) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    stats.validate()?;
    let x = records
        .iter()
        .map(|t| stats.normalize_features(t.r as f64, t.h, t.pe_g))
        .collect();
    let y = records.iter().map(|t| target_from_tau(t.tau_star)).collect();
    Ok((x, y))
}

/// Seeded shuffle, then the first `round(fraction · len)` records (at least
/// one on each side) go to training.
pub fn split(records: &[TauRecord], fraction: f64, seed: u64) -> Result<(Vec<TauRecord>, Vec<TauRecord>)> {
    if records.len() < 2 {
        return Err(Error::invalid(format!(
            "cannot split {} records",
            records.len()
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction {fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((fraction * records.len() as f64).round() as usize).clamp(1, records.len() - 1);
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i]).collect::<Vec<_>>();
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

pub fn write_csv(path: &Path, records: &[TauRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for t in records {
        w.write_record([
            t.r.to_string(),
            fmt_f64(t.h),
            fmt_f64(t.pe_g),
            fmt_f64(t.mu),
            fmt_f64(t.tau_star),
            fmt_f64(t.e_at_star),
            t.seed.to_string(),
            t.theta.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<TauRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Deserialization {
            what: "dataset",
            line: 1,
            reason: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row?;
        let bad = |reason: String| Error::Deserialization {
            what: "dataset",
            line,
            reason,
        };
        let real = |k: usize| -> Result<f64> {
            row[k]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", CSV_HEADER[k])))
        };
        let int = |k: usize| -> Result<u64> {
            row[k]
                .parse::<u64>()
                .map_err(|e| bad(format!("column {}: {e}", CSV_HEADER[k])))
        };
        let theta = if row[7].is_empty() { None } else { Some(real(7)?) };
        let rec = TauRecord {
            r: int(0)? as usize,
            h: real(1)?,
            pe_g: real(2)?,
            mu: real(3)?,
            tau_star: real(4)?,
            e_at_star: real(5)?,
            seed: int(6)?,
            theta,
        };
        if !(rec.tau_star > 0.0 && rec.h > 0.0 && rec.pe_g > 0.0) {
            return Err(bad("non-positive h, Pe_g or tau_star".into()));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Sidecar path next to a dataset file: `data.csv` -> `data.meta.json`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Generation settings recorded next to the CSV, with sorted keys.
pub fn write_metadata(path: &Path, config: &DatasetConfig, dataset: &Dataset) -> Result<()> {
    let mut meta = BTreeMap::new();
    meta.insert("code_version", serde_json::json!(crate::VERSION));
    meta.insert("problem", serde_json::json!(TRAINING_PROBLEM.as_str()));
    meta.insert("config", serde_json::to_value(config)?);
    meta.insert("records", serde_json::json!(dataset.records.len()));
    meta.insert("dropped", serde_json::to_value(&dataset.dropped)?);
    meta.insert(
        "per_sample_seed",
        serde_json::json!("seed xor sample index, ChaCha8"),
    );
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(r: usize, n: usize, pe_g: f64, tau: f64) -> TauRecord {
        TauRecord {
            r,
            h: mesh_size(2, n),
            pe_g,
            mu: std::f64::consts::SQRT_2 / (2.0 * pe_g),
            tau_star: tau,
            e_at_star: 0.0,
            seed: 0,
            theta: None,
        }
    }

    fn toy(count: usize) -> Vec<TauRecord> {
        (0..count)
            .map(|i| record(1 + i % 3, [10, 20, 40][(i / 3) % 3], 7.0 * 10f64.powi((i % 5) as i32), 1e-3))
            .collect()
    }

    #[test]
    fn split_sizes_and_exhaustiveness() {
        let recs = toy(900);
        let (a, b) = split(&recs, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (720, 180));
        let (a, b) = split(&toy(10), 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));

        let mut recs = toy(37);
        for (i, t) in recs.iter_mut().enumerate() {
            t.seed = i as u64;
        }
        let (a, b) = split(&recs, 0.8, 11).unwrap();
        let mut seeds: Vec<u64> = a.iter().chain(&b).map(|t| t.seed).collect();
        seeds.sort_unstable();
        assert_eq!(seeds, (0..37).collect::<Vec<_>>());
        assert_eq!(split(&recs, 0.8, 11).unwrap().0, a);
        assert!(split(&recs[..1], 0.8, 0).is_err());
        assert!(split(&recs, 1.0, 0).is_err());
    }

    #[test]
    fn normalization_examples() {
        let recs = toy(30);
        let stats = NormalizationStats::from_records(&recs).unwrap();
        let at_mean = stats.normalize_features(
            stats.mean_r,
            stats.mean_h,
            10f64.powf(stats.mean_log10_pe),
        );
        assert!(at_mean.iter().all(|v| v.abs() < 1e-12));
        assert!((target_from_tau(1e-3) - 3.0).abs() < 1e-15);
        assert_eq!(tau_from_target(3.0), 1e-3);

        let (r, h, pe) = (2.0, 0.0707, 1234.5);
        let (r2, h2, pe2) = stats.denormalize_features(stats.normalize_features(r, h, pe));
        assert!((r2 - r).abs() < 1e-12 && (h2 - h).abs() < 1e-12);
        assert!((pe2 - pe).abs() / pe < 1e-12);

        assert_eq!(NormalizationStats::from_records(&recs).unwrap(), stats);
    }

    #[test]
    fn degenerate_split_is_rejected() {
        let same = vec![record(1, 10, 70.0, 1e-2); 5];
        assert!(matches!(
            NormalizationStats::from_records(&same),
            Err(Error::NormalizationFailure(_))
        ));
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (m, s) = mean_std([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn features_are_reproducible_and_in_range() {
        let config = DatasetConfig::default();
        let mut seen_r = [false; 4];
        for i in 0..200 {
            let (r, n, pe, seed) = draw_features(&config, i);
            assert_eq!(draw_features(&config, i), (r, n, pe, seed));
            assert_eq!(seed, 7 ^ i as u64);
            assert!((7.0..=70710.0).contains(&pe));
            assert!([10, 20, 40].contains(&n));
            seen_r[r] = true;
        }
        assert!(seen_r[1] && seen_r[2] && seen_r[3]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut recs = toy(4);
        recs[1].theta = Some(0.3);
        recs[2].tau_star = 0.1 + 0.2;
        write_csv(&path, &recs).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("r,h,pe_g,mu,tau_star,e_at_star,seed,theta\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_csv(&path).unwrap(), recs);

        fs::write(&path, "r,h\n1,2\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Deserialization { line: 1, .. })));
        fs::write(&path, format!("{}\n1,0.1,7,0.1,abc,0,0,\n", CSV_HEADER.join(","))).unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Deserialization { line: 2, .. })));
    }
}
