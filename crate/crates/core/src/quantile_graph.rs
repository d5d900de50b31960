//! Quantile-state discretization and first-order transition graphs.
//!
//! Boundaries `b_0 < … < b_Q` are fitted once on the pooled training values.
//! A value maps to the state whose half-open bin `[b_{k-1}, b_k)` contains it;
//! the last bin is closed, and values outside `[b_0, b_Q]` are clipped into the
//! end bins. A window's graph is the row-normalized matrix of its state
//! transition counts. States never left stay as all-zero rows.

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesWindow;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileBoundaries {
    edges: Vec<f64>,
    /// Edges nudged upward because ties collapsed them onto their neighbor.
    #[serde(default)]
    perturbed: usize,
}

impl QuantileBoundaries {
    /// Accepts precomputed edges (e.g. read back from disk).
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::Invalid(format!(
                "need at least 2 states (3 edges), got {} edges",
                edges.len()
            )));
        }
        if edges.windows(2).any(|p| !(p[0] < p[1])) || !edges.iter().all(|e| e.is_finite()) {
            return Err(Error::Invalid("quantile edges must be finite and strictly increasing".into()));
        }
        Ok(QuantileBoundaries { edges, perturbed: 0 })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn num_states(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn perturbed(&self) -> usize {
        self.perturbed
    }

    /// 0-based state of a single value.
    #[inline]
    pub fn state_of(&self, x: f64) -> usize {
        // inner edges b_1..b_{Q-1}; counting those <= x gives the bin
        let inner = &self.edges[1..self.edges.len() - 1];
        inner.partition_point(|&b| b <= x)
    }
}

/// Linear-interpolation quantile of already sorted data (`numpy` "linear").
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Equiprobable boundaries: `b_k` is the `k/Q` empirical quantile.
pub fn fit_boundaries(values: &[f64], num_states: usize) -> Result<QuantileBoundaries> {
    if num_states < 2 {
        return Err(Error::Invalid(format!("need Q >= 2, got {num_states}")));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    if !sorted.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteValue("fit_boundaries"));
    }
    sorted.sort_by(f64::total_cmp);
    let distinct = {
        let mut d = sorted.clone();
        d.dedup();
        d.len()
    };
    if distinct < num_states {
        return Err(Error::TooFewDistinct {
            needed: num_states,
            found: distinct,
        });
    }

    let mut edges: Vec<f64> = (0..=num_states)
        .map(|k| quantile_sorted(&sorted, k as f64 / num_states as f64))
        .collect();
    let mut perturbed = 0;
    for k in 1..edges.len() {
        if edges[k] <= edges[k - 1] {
            edges[k] = edges[k - 1].next_up();
            perturbed += 1;
        }
    }
    if perturbed > 0 {
        log::warn!("{perturbed} quantile edge(s) collapsed by ties were separated");
    }
    Ok(QuantileBoundaries { edges, perturbed })
}

/// Pools every value of every window and fits boundaries on the result.
pub fn fit_boundaries_windows(windows: &[TimeSeriesWindow], num_states: usize) -> Result<QuantileBoundaries> {
    let pooled: Vec<f64> = windows.iter().flat_map(|w| w.values().iter().copied()).collect();
    fit_boundaries(&pooled, num_states)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSequence {
    states: Vec<usize>,
    num_states: usize,
}

impl StateSequence {
    /// 0-based states.
    pub fn new(states: Vec<usize>, num_states: usize) -> Result<Self> {
        if let Some(&s) = states.iter().find(|&&s| s >= num_states) {
            return Err(Error::Invalid(format!("state {s} out of range for Q={num_states}")));
        }
        Ok(StateSequence { states, num_states })
    }

    /// Builds from 1-based labels `1..=Q`.
    pub fn from_labels(labels: &[usize], num_states: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::Invalid("state labels start at 1".into()));
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), num_states)
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// 1-based labels `1..=Q`.
    pub fn labels(&self) -> Vec<usize> {
        self.states.iter().map(|s| s + 1).collect()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub fn discretize(window: &[f64], bounds: &QuantileBoundaries) -> StateSequence {
    StateSequence {
        states: window.iter().map(|&x| bounds.state_of(x)).collect(),
        num_states: bounds.num_states(),
    }
}

/// Row-stochastic first-order transition matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileGraph {
    q: usize,
    p: Vec<f64>,
}

impl QuantileGraph {
    /// Inverse of [`QuantileGraph::flatten`]; validates entries and row sums.
    pub fn reshape(flat: &[f64], q: usize) -> Result<Self> {
        if q == 0 || flat.len() != q * q {
            return Err(Error::Shape {
                op: "reshape",
                detail: format!("{} entries for Q={q}", flat.len()),
            });
        }
        if flat.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Invalid("transition probabilities must lie in [0, 1]".into()));
        }
        for (i, row) in flat.chunks_exact(q).enumerate() {
            let s: f64 = row.iter().sum();
            if s != 0.0 && (s - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!("row {i} sums to {s}")));
            }
        }
        Ok(QuantileGraph { q, p: flat.to_vec() })
    }

    pub fn num_states(&self) -> usize {
        self.q
    }

    /// `P(s_{t+1} = j | s_t = i)` for 0-based states.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.q + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.q..(i + 1) * self.q]
    }

    /// Row-major vector of length `Q²`.
    pub fn flatten(&self) -> Vec<f64> {
        self.p.clone()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

pub fn transition_matrix(states: &StateSequence) -> Result<QuantileGraph> {
    let q = states.num_states();
    let s = states.states();
    if s.len() < 2 {
        return Err(Error::SequenceTooShort(s.len()));
    }
    let mut counts = vec![0u32; q * q];
    for pair in s.windows(2) {
        counts[pair[0] * q + pair[1]] += 1;
    }
    let mut p = vec![0.0; q * q];
    for i in 0..q {
        let row = &counts[i * q..(i + 1) * q];
        let total: u32 = row.iter().sum();
        if total > 0 {
            for (o, &c) in p[i * q..(i + 1) * q].iter_mut().zip(row) {
                *o = f64::from(c) / f64::from(total);
            }
        }
    }
    Ok(QuantileGraph { q, p })
}

pub fn identity_graph(q: usize) -> QuantileGraph {
    let mut p = vec![0.0; q * q];
    for i in 0..q {
        p[i * q + i] = 1.0;
    }
    QuantileGraph { q, p }
}

/// Frobenius norm of the difference.
pub fn graph_distance(a: &QuantileGraph, b: &QuantileGraph) -> Result<f64> {
    if a.q != b.q {
        return Err(Error::Shape {
            op: "graph_distance",
            detail: format!("Q={} vs Q={}", a.q, b.q),
        });
    }
    Ok(a.p
        .iter()
        .zip(&b.p)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Discretize-then-count for one window.
pub fn window_graph(window: &[f64], bounds: &QuantileBoundaries) -> Result<QuantileGraph> {
    transition_matrix(&discretize(window, bounds))
}
