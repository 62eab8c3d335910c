//! Distribution exports for cohort comparison: Gaussian KDE curves for every
//! feature and five-number violin summaries, written as plot-ready CSV.
//!
//! Shannon entropy and normalized RMSSD get standalone KDE files
//! (`kde_<name>.csv`); the other five features get `violin_<name>.csv` with
//! the same curve plus a shared `violin_stats.csv` of min/Q1/median/Q3/max
//! per cohort.

use ecgdk_core::HrvFeatures;
use std::io::Write;
use std::path::Path;

use crate::error::{Result, TrainError};

/// Evaluation points per KDE curve.
pub const KDE_POINTS: usize = 256;

/// Silverman's rule of thumb; degenerate spreads fall back to
/// `1e-3 * (range or 1)`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    let range = {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (hi - lo).max(0.0)
    };
    let fallback = 1e-3 * if range > 0.0 { range } else { 1.0 };
    if n < 2 {
        return fallback;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    let iqr = {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)
    };
    let spread = if iqr > 0.0 { std.min(iqr / 1.34) } else { std };
    let bw = 0.9 * spread * (n as f64).powf(-0.2);
    if bw > 0.0 {
        bw
    } else {
        fallback
    }
}

/// Linear-interpolation quantile of an ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Gaussian KDE of `values` evaluated on `grid`.
pub fn gaussian_kde(values: &[f64], grid: &[f64]) -> Vec<f64> {
    let bw = silverman_bandwidth(values);
    let norm = 1.0 / (values.len() as f64 * bw * (std::f64::consts::TAU).sqrt());
    grid.iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| {
                    let z = (x - v) / bw;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Five-number summary (min, Q1, median, Q3, max).
pub fn violin_summary(values: &[f64]) -> [f64; 5] {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    [
        sorted[0],
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75),
        sorted[sorted.len() - 1],
    ]
}

fn grid_over(pooled_min: f64, pooled_max: f64) -> Vec<f64> {
    let span = pooled_max - pooled_min;
    let (lo, hi) = if span > 0.0 {
        (pooled_min, pooled_max)
    } else {
        (pooled_min - 0.5, pooled_max + 0.5)
    };
    (0..KDE_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (KDE_POINTS - 1) as f64)
        .collect()
}

fn feature_column(features: &[HrvFeatures], idx: usize) -> Vec<f64> {
    features.iter().map(|f| f.to_vector()[idx]).collect()
}

/// KDE curves for the two cohorts of one feature on the pooled min..max
/// grid. Returns (grid, train density, test density).
pub fn cohort_kde(
    train: &[f64],
    test: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pooled_min = train
        .iter()
        .chain(test)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let pooled_max = train
        .iter()
        .chain(test)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = grid_over(pooled_min, pooled_max);
    let dt = gaussian_kde(train, &grid);
    let de = gaussian_kde(test, &grid);
    (grid, dt, de)
}

/// Writes all distribution files for the two cohorts into `out_dir`.
pub fn distribution_export(
    train: &[HrvFeatures],
    test: &[HrvFeatures],
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>> {
    if train.is_empty() || test.is_empty() {
        return Err(TrainError::Data(
            "distribution export needs non-empty cohorts".into(),
        ));
    }
    let io_err = |path: &Path| {
        let p = path.display().to_string();
        move |source| TrainError::Io { path: p.clone(), source }
    };
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    // KDE-first features per the headline plots; the rest are violins.
    const KDE_FEATURES: [usize; 2] = [2, 4]; // shannon_entropy, nrmssd
    let mut written = Vec::new();

    let mut stats_csv = String::from("feature,cohort,min,q1,median,q3,max\n");
    for idx in 0..7 {
        let name = HrvFeatures::NAMES[idx];
        let a = feature_column(train, idx);
        let b = feature_column(test, idx);
        let (grid, da, db) = cohort_kde(&a, &b);

        let prefix = if KDE_FEATURES.contains(&idx) {
            "kde"
        } else {
            "violin"
        };
        let path = out_dir.join(format!("{prefix}_{name}.csv"));
        let mut csv = String::from("x,train_density,test_density\n");
        for i in 0..grid.len() {
            csv.push_str(&format!("{},{},{}\n", grid[i], da[i], db[i]));
        }
        std::fs::File::create(&path)
            .map_err(io_err(&path))?
            .write_all(csv.as_bytes())
            .map_err(io_err(&path))?;
        written.push(path);

        if !KDE_FEATURES.contains(&idx) {
            for (cohort, values) in [("train", &a), ("test", &b)] {
                let s = violin_summary(values);
                stats_csv.push_str(&format!(
                    "{name},{cohort},{},{},{},{},{}\n",
                    s[0], s[1], s[2], s[3], s[4]
                ));
            }
        }
    }
    let stats_path = out_dir.join("violin_stats.csv");
    std::fs::File::create(&stats_path)
        .map_err(io_err(&stats_path))?
        .write_all(stats_csv.as_bytes())
        .map_err(io_err(&stats_path))?;
    written.push(stats_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ecgdk_nn::Rng;

    #[test]
    fn identical_cohorts_identical_curves() {
        let mut rng = Rng::new(1, 0);
        let vals: Vec<f64> = (0..200).map(|_| rng.normal()).collect();
        let (_, a, b) = cohort_kde(&vals, &vals);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn single_point_cohort_uses_fallback_bandwidth() {
        let bw = silverman_bandwidth(&[2.0]);
        assert!((bw - 1e-3).abs() < 1e-12);
        let identical = silverman_bandwidth(&[3.0, 3.0, 3.0]);
        assert!((identical - 1e-3).abs() < 1e-12);
        // Curves still finite and positive somewhere.
        let (_, d, _) = cohort_kde(&[2.0], &[2.0]);
        assert!(d.iter().all(|v| v.is_finite()));
        assert!(d.iter().any(|v| *v > 0.0));
    }

    #[test]
    fn standard_normal_kde_peak_near_zero() {
        let n = 10_000;
        let mut rng = Rng::new(42, 0);
        let vals: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let (grid, d, _) = cohort_kde(&vals, &vals);
        let peak = grid[d
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0];
        assert!(peak.abs() <= 0.1, "KDE peak at {peak}");
    }

    #[test]
    fn quantiles_and_violin() {
        let s = violin_summary(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[2], 2.5);
        assert_eq!(s[4], 4.0);
        assert!((s[1] - 1.75).abs() < 1e-12);
        assert!((s[3] - 3.25).abs() < 1e-12);
    }

    #[test]
    fn export_writes_expected_files() {
        let dir = std::env::temp_dir().join(format!("ecgdk-export-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let mut rng = Rng::new(5, 0);
        let mk = |rng: &mut Rng| -> Vec<HrvFeatures> {
            (0..40)
                .map(|_| {
                    HrvFeatures::from_vector([
                        0.8 + 0.1 * rng.normal(),
                        0.1 * rng.uniform(),
                        rng.uniform_in(0.0, 2.0),
                        0.1 * rng.uniform(),
                        0.15 * rng.uniform(),
                        0.08 * rng.uniform(),
                        0.07 * rng.uniform(),
                    ])
                })
                .collect()
        };
        let train = mk(&mut rng);
        let test = mk(&mut rng);
        let files = distribution_export(&train, &test, &dir).unwrap();
        assert_eq!(files.len(), 8); // 7 curves + stats
        assert!(dir.join("kde_shannon_entropy.csv").exists());
        assert!(dir.join("kde_nrmssd.csv").exists());
        assert!(dir.join("violin_mean_rr.csv").exists());
        let stats = std::fs::read_to_string(dir.join("violin_stats.csv")).unwrap();
        assert_eq!(stats.lines().count(), 1 + 5 * 2);
    }
}
