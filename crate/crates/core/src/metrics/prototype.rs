//! Nearest-neighbor and medoid based representativeness measures. All
//! searches are exact brute force over Euclidean distance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantile_graph::quantile_sorted;
use crate::tensor::euclidean;

fn check_non_empty<W>(set: &[W], what: &'static str) -> Result<()> {
    if set.is_empty() {
        Err(Error::Empty(what))
    } else {
        Ok(())
    }
}

/// `min_j ‖query_i − pool_j‖` for every query, optionally skipping `j == i`.
fn nn_distances<W: AsRef<[f64]> + Sync>(queries: &[W], pool: &[W], exclude_self: bool) -> Vec<f64> {
    queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            pool.iter()
                .enumerate()
                .filter(|(j, _)| !(exclude_self && *j == i))
                .map(|(_, p)| euclidean(q.as_ref(), p.as_ref()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Distance from each real window to its nearest synthetic window.
pub fn nearest_synth_distances<W: AsRef<[f64]> + Sync>(real: &[W], synth: &[W]) -> Result<Vec<f64>> {
    check_non_empty(real, "real set")?;
    check_non_empty(synth, "synthetic set")?;
    Ok(nn_distances(real, synth, false))
}

/// Mean and median nearest-synthetic distance over real windows.
pub fn proto_err<W: AsRef<[f64]> + Sync>(real: &[W], synth: &[W]) -> Result<(f64, f64)> {
    let mut d = nearest_synth_distances(real, synth)?;
    let avg = d.iter().sum::<f64>() / d.len() as f64;
    d.sort_by(f64::total_cmp);
    Ok((avg, quantile_sorted(&d, 0.5)))
}

/// Index of the element with the smallest summed distance to the set;
/// ties go to the lowest index.
pub fn medoid_index<W: AsRef<[f64]> + Sync>(set: &[W]) -> Result<usize> {
    check_non_empty(set, "window set")?;
    let sums: Vec<f64> = set
        .par_iter()
        .map(|a| set.iter().map(|b| euclidean(a.as_ref(), b.as_ref())).sum())
        .collect();
    let mut best = 0;
    for (i, &s) in sums.iter().enumerate() {
        if s < sums[best] {
            best = i;
        }
    }
    Ok(best)
}

/// `‖m_real − m_synth‖ / mean_i ‖x_i − m_real‖`.
pub fn mdr<W: AsRef<[f64]> + Sync>(real: &[W], synth: &[W]) -> Result<f64> {
    let mr = real[medoid_index(real)?].as_ref();
    let ms = synth[medoid_index(synth)?].as_ref();
    let spread = real.iter().map(|x| euclidean(x.as_ref(), mr)).sum::<f64>() / real.len() as f64;
    if spread <= 0.0 {
        return Err(Error::ZeroVariance("all real windows coincide with their medoid"));
    }
    Ok(euclidean(mr, ms) / spread)
}

/// Nearest-neighbor distance of every real window to the rest of the real
/// set.
pub fn real_nn_distances<W: AsRef<[f64]> + Sync>(real: &[W]) -> Result<Vec<f64>> {
    if real.len() < 2 {
        return Err(Error::Invalid("coverage needs at least two real windows".into()));
    }
    Ok(nn_distances(real, real, true))
}

/// Fraction of real windows whose nearest synthetic neighbor lies within the
/// `q`-quantile of real-to-real nearest-neighbor distances.
pub fn coverage<W: AsRef<[f64]> + Sync>(real: &[W], synth: &[W], q: f64) -> Result<f64> {
    Ok(coverage_many(real, synth, &[q])?[0])
}

/// [`coverage`] at several quantiles, sharing the distance computations.
pub fn coverage_many<W: AsRef<[f64]> + Sync>(real: &[W], synth: &[W], qs: &[f64]) -> Result<Vec<f64>> {
    if let Some(q) = qs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Invalid(format!("coverage quantile {q} outside [0, 1]")));
    }
    let mut calib = real_nn_distances(real)?;
    calib.sort_by(f64::total_cmp);
    let d = nearest_synth_distances(real, synth)?;
    Ok(qs
        .iter()
        .map(|&q| {
            let tau = quantile_sorted(&calib, q);
            d.iter().filter(|&&di| di <= tau).count() as f64 / d.len() as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn proto_examples() {
        let s = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        assert_eq!(proto_err(&s, &s).unwrap(), (0.0, 0.0));
        assert_eq!(proto_err(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap(), (5.0, 5.0));
    }

    #[test]
    fn medoid_enumeration() {
        // summed distances 11, 10, 19
        assert_eq!(medoid_index(&set(&[0.0, 1.0, 10.0])).unwrap(), 1);
        // tie between the two points
        assert_eq!(medoid_index(&set(&[0.0, 2.0])).unwrap(), 0);
    }

    #[test]
    fn mdr_examples() {
        let r = set(&[0.0, 1.0, 10.0]);
        assert_eq!(mdr(&r, &r).unwrap(), 0.0);
        let s = set(&[3.0, 4.0, 9.0]);
        let base = mdr(&r, &s).unwrap();
        let scale = |v: &[Vec<f64>]| v.iter().map(|w| vec![w[0] * 2.5]).collect::<Vec<_>>();
        assert!((mdr(&scale(&r), &scale(&s)).unwrap() - base).abs() < 1e-12);
        assert!(mdr(&set(&[1.0, 1.0]), &s).is_err());
    }

    #[test]
    fn coverage_examples() {
        let r = set(&[0.0, 1.0, 10.0]);
        assert_eq!(real_nn_distances(&r).unwrap(), vec![1.0, 1.0, 9.0]);
        let c = coverage(&r, &set(&[0.0]), 0.5).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(coverage(&r, &r, 0.0).unwrap(), 1.0);
        assert_eq!(coverage(&r, &set(&[1e6]), 0.9).unwrap(), 0.0);
        assert!(coverage(&set(&[1.0]), &r, 0.5).is_err());
        assert!(coverage(&r, &r, 1.5).is_err());
    }
}
