//! Built-in checks that need no input files.

use anyhow::{bail, Result};
use graph2ts::autodiff::{grad_check, Coords, GradCheckConfig};
use graph2ts::metrics::{evaluate, EvalOptions};
use graph2ts::model::{conditioning_matrix, objective, standard_normal, window_matrix, Graph2Ts, TrainConfig};
use graph2ts::quantile_graph::{discretize, fit_boundaries_windows, transition_matrix, QuantileBoundaries, StateSequence};
use graph2ts::TimeSeriesWindow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::GradcheckArgs;

/// Smallest distance of any ReLU input, log-variance clamp or sort tie from
/// its kink that a gradient-check draw must keep.
const KINK_MARGIN: f64 = 1e-4;

/// The nine-point example: boundaries, labels and transition matrix.
pub fn transition_example() -> bool {
    let Ok(bounds) = QuantileBoundaries::from_edges(vec![0.3, 1.1, 2.5, 3.1]) else {
        return false;
    };
    let points = [0.6, 1.6, 2.9, 2.7, 1.4, 0.5, 0.8, 2.0, 2.8];
    let labels = [1, 2, 3, 3, 2, 1, 1, 2, 3];
    if discretize(&points, &bounds).labels() != labels {
        return false;
    }
    let Ok(p) = StateSequence::from_labels(&labels, 3).and_then(|s| transition_matrix(&s)) else {
        return false;
    };
    let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
    let want = [a, b, 0.0, a, 0.0, b, 0.0, 0.5, 0.5];
    p.as_slice() == want
}

/// Scoring a set against itself gives zero distances and full coverage.
pub fn identities() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..20).all(|_| {
        let n = rng.random_range(5..30);
        let s: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..16).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        match evaluate(&s, &s, &EvalOptions::default()) {
            Ok(r) => {
                [r.wasserstein, r.ks, r.acf_mae, r.psd_l2, r.proto_err_avg, r.proto_err_med, r.mdr]
                    .iter()
                    .all(|&v| v == 0.0)
                    && r.coverage.iter().all(|&(_, c)| c == 1.0)
            }
            Err(_) => false,
        }
    })
}

pub fn selfcheck() -> bool {
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let f = transition_example();
    let i = identities();
    println!("fig1: {}", verdict(f));
    println!("identities: {}", verdict(i));
    f && i
}

/// Checks the full objective on random windows at a freshly initialized
/// model, skipping draws that sit too close to a non-differentiable point.
pub fn gradcheck(cfg: &TrainConfig, a: &GradcheckArgs) -> Result<bool> {
    cfg.validate()?;
    let beta = cfg.beta_max;
    for draw in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(draw));
        let windows = (0..a.batch)
            .map(|_| TimeSeriesWindow::new((0..cfg.window_length).map(|_| rng.sample(StandardNormal)).collect()))
            .collect::<graph2ts::Result<Vec<_>>>()?;
        let bounds = fit_boundaries_windows(&windows, cfg.num_states)?;
        let model = Graph2Ts::init(cfg.clone(), bounds, &mut rng)?;
        let x = window_matrix(&windows)?;
        let g = conditioning_matrix(&windows, &model.boundaries, cfg.variant)?;
        let eps = standard_normal(a.batch, cfg.latent_dim, &mut rng);
        let margin = model.kink_margin(&x, &g, &eps)?;
        if margin < KINK_MARGIN {
            log::info!("draw {draw}: kink margin {margin:.2e}, skipped");
            continue;
        }
        let coords = if a.all {
            Coords::All
        } else {
            Coords::Sample {
                per_param: a.per_param,
                seed: cfg.seed.wrapping_add(draw),
            }
        };
        let check = GradCheckConfig {
            coords,
            ..Default::default()
        };
        let report = grad_check(
            &model.params,
            |tape, p| Ok(objective(tape, p, cfg, &x, &g, &eps, beta)?.total),
            &check,
        )?;
        println!("draw {draw}, kink margin {margin:.2e}, variant {}", cfg.variant);
        println!("{:<16} {:>8} {:>12} {:>8}", "param", "checked", "max_rel_err", "worst");
        for p in &report.per_param {
            println!("{:<16} {:>8} {:>12.3e} {:>8}", p.name, p.checked, p.max_rel_error, p.worst_index);
        }
        let max = report.max_rel_error();
        let ok = max <= a.tol;
        println!(
            "gradcheck: {} (max {max:.3e} over {} coordinates, tol {:e})",
            if ok { "PASS" } else { "FAIL" },
            report.coords_checked(),
            a.tol
        );
        return Ok(ok);
    }
    bail!("no draw in 100 cleared the kink margin {KINK_MARGIN:e}")
}
