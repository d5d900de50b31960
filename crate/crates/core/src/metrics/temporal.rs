//! Autocorrelation and spectral comparisons.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Biased sample autocorrelation at lags `1..=max_lag`; `None` for a
/// constant window.
pub fn acf(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom <= 0.0 {
        return None;
    }
    Some(
        (1..=max_lag)
            .map(|lag| {
                centered[..n - lag]
                    .iter()
                    .zip(&centered[lag..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / denom
            })
            .collect(),
    )
}

/// Mean ACF curve of a set, skipping constant windows.
pub fn mean_acf<W: AsRef<[f64]>>(set: &[W], max_lag: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; max_lag];
    let mut used = 0usize;
    for w in set {
        let w = w.as_ref();
        if max_lag >= w.len() {
            return Err(Error::Invalid(format!(
                "max lag {max_lag} must be below window length {}",
                w.len()
            )));
        }
        if let Some(r) = acf(w, max_lag) {
            acc.iter_mut().zip(&r).for_each(|(a, v)| *a += v);
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::ZeroVariance("every window is constant"));
    }
    if used < set.len() {
        log::warn!("skipped {} constant window(s) in ACF", set.len() - used);
    }
    acc.iter_mut().for_each(|a| *a /= used as f64);
    Ok(acc)
}

/// Mean absolute difference between the two mean ACF curves.
pub fn acf_mae<W: AsRef<[f64]>>(real: &[W], synth: &[W], max_lag: usize) -> Result<f64> {
    if max_lag == 0 {
        return Err(Error::Invalid("max lag must be positive".into()));
    }
    let a = mean_acf(real, max_lag)?;
    let b = mean_acf(synth, max_lag)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / max_lag as f64)
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| 0.5 * (1.0 - (TAU * t as f64 / n as f64).cos()))
        .collect()
}

/// One-sided Hann-windowed periodogram with `⌊n/2⌋ + 1` bins, normalized by
/// the window power `Σ w²` (a single Welch segment spanning the window, no
/// detrending). Interior bins are doubled so total power is preserved.
pub fn periodogram(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let w = hann(n);
    let power: f64 = w.iter().map(|v| v * v).sum();
    let bins = n / 2 + 1;
    (0..bins)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, (&xv, &wv)) in x.iter().zip(&w).enumerate() {
                let ang = TAU * (k * t) as f64 / n as f64;
                re += xv * wv * ang.cos();
                im -= xv * wv * ang.sin();
            }
            let p = (re * re + im * im) / power;
            let edge = k == 0 || (n % 2 == 0 && k == n / 2);
            if edge {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}

pub fn mean_psd<W: AsRef<[f64]>>(set: &[W]) -> Result<Vec<f64>> {
    let first = set.first().ok_or(Error::Empty("window set"))?;
    let n = first.as_ref().len();
    let mut acc = vec![0.0; n / 2 + 1];
    for w in set {
        let w = w.as_ref();
        if w.len() != n {
            return Err(Error::Invalid("windows of unequal length".into()));
        }
        acc.iter_mut().zip(periodogram(w)).for_each(|(a, p)| *a += p);
    }
    acc.iter_mut().for_each(|a| *a /= set.len() as f64);
    Ok(acc)
}

/// Euclidean distance between the mean spectra of the two sets.
pub fn psd_l2<W: AsRef<[f64]>>(real: &[W], synth: &[W]) -> Result<f64> {
    let a = mean_psd(real)?;
    let b = mean_psd(synth)?;
    if a.len() != b.len() {
        return Err(Error::Invalid("real and synthetic windows differ in length".into()));
    }
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_window_lag_one() {
        let x: Vec<f64> = (0..32).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = acf(&x, 16).unwrap();
        assert!(r[0] <= -0.9);
        assert!((r[0] + 31.0 / 32.0).abs() < 1e-12);
        assert!((r[1] - 30.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn acf_identity_and_constant_handling() {
        let s = vec![vec![0.0, 1.0, 3.0, 2.0, 5.0], vec![1.0, 1.0, 1.0, 1.0, 1.0]];
        assert_eq!(acf_mae(&s, &s, 2).unwrap(), 0.0);
        let constant = vec![vec![2.0; 5]];
        assert!(acf_mae(&constant, &constant, 2).is_err());
        assert!(acf_mae(&s, &s, 5).is_err());
    }

    #[test]
    fn cosine_peaks_at_its_bin() {
        let n = 32;
        let x: Vec<f64> = (0..n).map(|t| (TAU * 4.0 * t as f64 / n as f64).cos()).collect();
        let p = periodogram(&x);
        assert_eq!(p.len(), 17);
        let argmax = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 4);
    }

    #[test]
    fn amplitude_scaling_shows_in_psd() {
        let real: Vec<Vec<f64>> = (0..4)
            .map(|k| (0..16).map(|t| ((t * (k + 1)) as f64 * 0.3).sin()).collect())
            .collect();
        let doubled: Vec<Vec<f64>> = real.iter().map(|w| w.iter().map(|v| 2.0 * v).collect()).collect();
        assert_eq!(psd_l2(&real, &real).unwrap(), 0.0);
        let a = mean_psd(&real).unwrap();
        let b = mean_psd(&doubled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((4.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
        assert!(psd_l2(&real, &doubled).unwrap() > 0.0);
    }
}
