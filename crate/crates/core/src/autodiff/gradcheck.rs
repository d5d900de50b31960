//! Central finite differences against tape gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::params::{ParamStore, ParamVars};
use crate::autodiff::tape::{Tape, Var};
use crate::error::Result;

/// Which coordinates of each parameter get perturbed.
#[derive(Clone, Copy, Debug)]
pub enum Coords {
    All,
    /// Up to `per_param` coordinates per tensor, drawn without replacement.
    Sample { per_param: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    pub h: f64,
    /// Lower bound on the relative-error denominator, so coordinates whose
    /// true gradient is zero are judged by absolute error instead.
    pub denom_floor: f64,
    pub coords: Coords,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            h: 1e-5,
            denom_floor: 1e-6,
            coords: Coords::All,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub per_param: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.per_param
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn coords_checked(&self) -> usize {
        self.per_param.iter().map(|p| p.checked).sum()
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares tape gradients of the scalar built by `f` with central
/// differences of step `h`, parameter by parameter.
pub fn grad_check<F>(store: &ParamStore, f: F, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamVars) -> Result<Var>,
{
    let eval = |s: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new();
        let vars = s.bind(&mut tape)?;
        let out = f(&mut tape, &vars)?;
        Ok(tape.value(out).item())
    };

    let mut tape = Tape::new();
    let vars = store.bind(&mut tape)?;
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut rng = match cfg.coords {
        Coords::Sample { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Coords::All => None,
    };

    let mut probe = store.clone();
    let mut per_param = Vec::with_capacity(store.len());
    for name in store.names() {
        let n = store.get(name).map_or(0, |t| t.len());
        let analytic = grads.params().get(name);
        let indices: Vec<usize> = match (&cfg.coords, rng.as_mut()) {
            (Coords::Sample { per_param, .. }, Some(rng)) if *per_param < n => {
                let mut idx = sample(rng, n, *per_param).into_vec();
                idx.sort_unstable();
                idx
            }
            _ => (0..n).collect(),
        };

        let mut check = ParamCheck {
            name: name.clone(),
            checked: 0,
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in indices {
            let orig = store.get(name).expect("name from store").data()[i];
            probe.get_mut(name).expect("cloned store").data_mut()[i] = orig + cfg.h;
            let up = eval(&probe)?;
            probe.get_mut(name).expect("cloned store").data_mut()[i] = orig - cfg.h;
            let down = eval(&probe)?;
            probe.get_mut(name).expect("cloned store").data_mut()[i] = orig;

            let numeric = (up - down) / (2.0 * cfg.h);
            let a = analytic.map_or(0.0, |g| g.data()[i]);
            let err = relative_error(a, numeric, cfg.denom_floor);
            check.checked += 1;
            if err > check.max_rel_error || check.checked == 1 {
                check.max_rel_error = err;
                check.worst_index = i;
                check.analytic = a;
                check.numeric = numeric;
            }
        }
        per_param.push(check);
    }
    Ok(GradCheckReport { per_param })
}
