//! Brute-force reference implementations and random instance builders
//! shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Set = Vec<Vec<f64>>;

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Set {
    (0..n)
        .map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

fn pooled(set: &[Vec<f64>]) -> Vec<f64> {
    set.iter().flatten().copied().collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Heap's algorithm over index permutations.
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// W1 between equal-size pooled samples as the cheapest perfect matching.
pub fn w1_by_matching(real: &[Vec<f64>], synth: &[Vec<f64>]) -> f64 {
    let (a, b) = (pooled(real), pooled(synth));
    assert_eq!(a.len(), b.len(), "matching oracle needs equal sizes");
    let mut best = f64::INFINITY;
    for_each_permutation(b.len(), |p| {
        let cost = a.iter().zip(p).map(|(x, &j)| (x - b[j]).abs()).sum::<f64>() / a.len() as f64;
        best = best.min(cost);
    });
    best
}

fn ecdf(values: &[f64], t: f64) -> f64 {
    values.iter().filter(|&&v| v <= t).count() as f64 / values.len() as f64
}

/// W1 for any sizes: the CDF gap integrated piecewise between consecutive
/// distinct pooled values, with each ECDF evaluated by counting.
pub fn w1_by_counting(real: &[Vec<f64>], synth: &[Vec<f64>]) -> f64 {
    let (a, b) = (pooled(real), pooled(synth));
    let mut grid: Vec<f64> = a.iter().chain(&b).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.windows(2)
        .map(|w| (ecdf(&a, w[0]) - ecdf(&b, w[0])).abs() * (w[1] - w[0]))
        .sum()
}

pub fn ks_by_counting(real: &[Vec<f64>], synth: &[Vec<f64>]) -> f64 {
    let (a, b) = (pooled(real), pooled(synth));
    a.iter()
        .chain(&b)
        .map(|&t| (ecdf(&a, t) - ecdf(&b, t)).abs())
        .fold(0.0, f64::max)
}

fn nearest(q: &[f64], pool: &[Vec<f64>], skip: Option<usize>) -> f64 {
    let mut best = f64::INFINITY;
    for (j, p) in pool.iter().enumerate() {
        if Some(j) != skip {
            let d = dist(q, p);
            if d < best {
                best = d;
            }
        }
    }
    best
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn proto_err_ref(real: &[Vec<f64>], synth: &[Vec<f64>]) -> (f64, f64) {
    let d: Vec<f64> = real.iter().map(|r| nearest(r, synth, None)).collect();
    (d.iter().sum::<f64>() / d.len() as f64, median(d))
}

pub fn medoid_ref(set: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, a) in set.iter().enumerate() {
        let mut total = 0.0;
        for b in set {
            total += dist(a, b);
        }
        if total < best.0 {
            best = (total, i);
        }
    }
    best.1
}

pub fn mdr_ref(real: &[Vec<f64>], synth: &[Vec<f64>]) -> f64 {
    let mr = &real[medoid_ref(real)];
    let ms = &synth[medoid_ref(synth)];
    let spread = real.iter().map(|x| dist(x, mr)).sum::<f64>() / real.len() as f64;
    dist(mr, ms) / spread
}

/// Linear-interpolation quantile, written out from the `(n-1)q` position.
pub fn quantile_ref(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (v.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn coverage_ref(real: &[Vec<f64>], synth: &[Vec<f64>], q: f64) -> f64 {
    let calib: Vec<f64> = (0..real.len()).map(|i| nearest(&real[i], real, Some(i))).collect();
    let tau = quantile_ref(&calib, q);
    let hits = real.iter().filter(|r| nearest(r, synth, None) <= tau).count();
    hits as f64 / real.len() as f64
}
