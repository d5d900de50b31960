//! Marginal-value distances between two window sets. Every scalar of every
//! window is pooled into one empirical distribution per set.

use crate::error::{Error, Result};

fn pooled_sorted<W: AsRef<[f64]>>(set: &[W]) -> Vec<f64> {
    let mut v: Vec<f64> = set.iter().flat_map(|w| w.as_ref().iter().copied()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn non_empty<W: AsRef<[f64]>>(real: &[W], synth: &[W]) -> Result<()> {
    let empty = |s: &[W]| s.iter().all(|w| w.as_ref().is_empty());
    if empty(real) || empty(synth) {
        return Err(Error::Empty("window set"));
    }
    Ok(())
}

/// Walks the merged support of two sorted samples, calling
/// `f(v, F_a(v), F_b(v), next_v)` at every distinct value `v`.
fn sweep(a: &[f64], b: &[f64], mut f: impl FnMut(f64, f64, f64, Option<f64>)) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => Some(x.min(y)),
            (Some(&x), None) => Some(x),
            (None, Some(&y)) => Some(y),
            (None, None) => None,
        };
        f(v, i as f64 / na, j as f64 / nb, next);
    }
}

/// 1-Wasserstein distance `∫ |F_real − F_synth| dv` between pooled values.
pub fn wasserstein1_pooled<W: AsRef<[f64]>>(real: &[W], synth: &[W]) -> Result<f64> {
    non_empty(real, synth)?;
    let (a, b) = (pooled_sorted(real), pooled_sorted(synth));
    let mut acc = 0.0;
    sweep(&a, &b, |v, fa, fb, next| {
        if let Some(n) = next {
            acc += (fa - fb).abs() * (n - v);
        }
    });
    Ok(acc)
}

/// Two-sample Kolmogorov–Smirnov statistic on pooled values.
pub fn ks_pooled<W: AsRef<[f64]>>(real: &[W], synth: &[W]) -> Result<f64> {
    non_empty(real, synth)?;
    let (a, b) = (pooled_sorted(real), pooled_sorted(synth));
    let mut sup: f64 = 0.0;
    sweep(&a, &b, |_, fa, fb, _| sup = sup.max((fa - fb).abs()));
    Ok(sup)
}
