use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{AdamConfig, Tape};
use crate::dataset::{DatasetSplit, TimeSeriesWindow};
use crate::error::{Error, Result};
use crate::model::config::{beta_schedule, TrainConfig, Variant};
use crate::model::network::{objective, Graph2Ts, LossBreakdown};
use crate::quantile_graph::{fit_boundaries_windows, identity_graph, window_graph, QuantileBoundaries};
use crate::tensor::Tensor2;

/// Epoch-mean losses. `epoch` is 1-based; the KL weight in effect is
/// `beta_schedule(epoch - 1, …)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub losses: LossBreakdown,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest epoch-mean total.
    pub model: Graph2Ts,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Conditioning vectors for a set of windows: flattened transition graphs,
/// or the identity graph for every row under the no-graph variant.
pub fn conditioning_matrix(
    windows: &[TimeSeriesWindow],
    bounds: &QuantileBoundaries,
    variant: Variant,
) -> Result<Tensor2> {
    let q = bounds.num_states();
    let rows = windows
        .iter()
        .map(|w| match variant {
            Variant::NoGraph => Ok(identity_graph(q).flatten()),
            _ => window_graph(w.values(), bounds).map(|g| g.flatten()),
        })
        .collect::<Result<Vec<_>>>()?;
    Tensor2::from_rows(&rows)
}

pub fn window_matrix(windows: &[TimeSeriesWindow]) -> Result<Tensor2> {
    Tensor2::from_rows(windows)
}

pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Tensor2::from_vec(rows, cols, data).expect("sized to rows * cols")
}

fn gather_rows(src: &Tensor2, idx: &[usize]) -> Tensor2 {
    let mut data = Vec::with_capacity(idx.len() * src.cols());
    for &i in idx {
        data.extend_from_slice(src.row(i));
    }
    Tensor2::from_vec(idx.len(), src.cols(), data).expect("gathered rows")
}

/// Fits boundaries on the training windows, then trains with Adam on
/// shuffled mini-batches, keeping the best epoch's parameters.
pub fn train(config: &TrainConfig, data: &DatasetSplit) -> Result<TrainOutcome> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    if data.window_length != config.window_length {
        return Err(Error::Config(format!(
            "windows have length {}, config expects {}",
            data.window_length, config.window_length
        )));
    }
    let bounds = fit_boundaries_windows(&data.train, config.num_states)?;
    let x_all = window_matrix(&data.train)?;
    let g_all = conditioning_matrix(&data.train, &bounds, config.variant)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Graph2Ts::init(config.clone(), bounds, &mut rng)?;
    let adam = AdamConfig::with_lr(config.lr);
    let n = x_all.rows();
    let mut order: Vec<usize> = (0..n).collect();

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, crate::autodiff::ParamStore)> = None;

    for epoch in 0..config.epochs {
        let beta = beta_schedule(epoch, config.kl_warmup_epochs, config.beta_max);
        order.shuffle(&mut rng);
        let mut sums = LossBreakdown::default();

        for (batch_idx, idx) in order.chunks(config.batch_size).enumerate() {
            let x = gather_rows(&x_all, idx);
            let g = gather_rows(&g_all, idx);
            let eps = if config.variant.is_stochastic() {
                standard_normal(idx.len(), config.latent_dim, &mut rng)
            } else {
                Tensor2::zeros(idx.len(), config.latent_dim)
            };

            let non_finite = |e: Error| match e {
                Error::NonFiniteValue(_) | Error::NonFiniteGradient(_) => Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: batch_idx,
                },
                other => other,
            };
            let mut tape = Tape::new();
            let p = model.params.bind(&mut tape)?;
            let obj = objective(&mut tape, &p, config, &x, &g, &eps, beta).map_err(non_finite)?;
            let grads = tape.backward(obj.total)?;
            model
                .params
                .adam_step(grads.params(), &adam)
                .map_err(non_finite)?;

            let b = obj.breakdown(&tape, beta);
            let w = idx.len() as f64;
            sums.align += w * b.align;
            sums.recon += w * b.recon;
            sums.dist += w * b.dist;
            sums.kl += w * b.kl;
            sums.total += w * b.total;
        }

        let nf = n as f64;
        let mean = LossBreakdown {
            align: sums.align / nf,
            recon: sums.recon / nf,
            dist: sums.dist / nf,
            kl: sums.kl / nf,
            beta,
            total: sums.total / nf,
        };
        log::debug!(
            "epoch {:>4}  total {:.6}  align {:.4}  recon {:.4}  dist {:.4}  kl {:.4}  beta {:.4}",
            epoch + 1,
            mean.total,
            mean.align,
            mean.recon,
            mean.dist,
            mean.kl,
            beta
        );
        log.push(EpochLog {
            epoch: epoch + 1,
            losses: mean,
        });
        // Snapshot taken after the epoch's updates.
        if best.as_ref().is_none_or(|(t, _, _)| mean.total < *t) {
            best = Some((mean.total, epoch + 1, model.params.clone()));
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch");
    model.params = params;
    Ok(TrainOutcome {
        model,
        best_epoch,
        log,
    })
}
