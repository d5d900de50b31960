//! Encoders, posterior head, decoder, and the four loss terms.

use rand::Rng;

use crate::autodiff::{ParamStore, ParamVars, Tape, Var};
use crate::error::{Error, Result};
use crate::model::config::{TrainConfig, Variant};
use crate::quantile_graph::QuantileBoundaries;
use crate::tensor::Tensor2;

/// Posterior log-variance is clamped to this symmetric range.
pub const LOGVAR_LIMIT: f64 = 10.0;

pub const LOG_TEMP: &str = "log_temp";

const TS_ENC: &str = "ts_enc";
const GRAPH_ENC: &str = "graph_enc";
const POSTERIOR: &str = "posterior";
const DECODER: &str = "decoder";

/// A trained (or freshly initialized) generator: configuration, the
/// boundaries its graphs were built with, and all weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph2Ts {
    pub config: TrainConfig,
    pub boundaries: QuantileBoundaries,
    pub params: ParamStore,
}

/// Batch of `(mu, logvar)`, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorParams {
    pub mu: Tensor2,
    pub logvar: Tensor2,
}

/// Per-batch (or epoch-mean) loss values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub align: f64,
    pub recon: f64,
    pub dist: f64,
    pub kl: f64,
    pub beta: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// `w_align·align + w_recon·recon + w_dist·dist + beta·kl`
    pub fn recombine(&self, cfg: &TrainConfig) -> f64 {
        cfg.w_align * self.align + cfg.w_recon * self.recon + cfg.w_dist * self.dist + self.beta * self.kl
    }
}

/// Tape handles of one objective evaluation.
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveVars {
    pub align: Var,
    pub recon: Var,
    pub dist: Var,
    pub kl: Option<Var>,
    pub total: Var,
}

/// Shape list for every parameter of a variant, in registration order.
pub fn param_shapes(cfg: &TrainConfig) -> Vec<(String, usize, usize)> {
    let (t, g, e, h, d) = (
        cfg.window_length,
        cfg.graph_dim(),
        cfg.embed_dim,
        cfg.hidden_dim,
        cfg.latent_dim,
    );
    let mut shapes = Vec::new();
    let mut mlp = |prefix: &str, n_in: usize, n_hidden: usize, n_out: usize| {
        shapes.push((format!("{prefix}.w1"), n_in, n_hidden));
        shapes.push((format!("{prefix}.b1"), 1, n_hidden));
        shapes.push((format!("{prefix}.w2"), n_hidden, n_out));
        shapes.push((format!("{prefix}.b2"), 1, n_out));
    };
    mlp(TS_ENC, t, e, e);
    mlp(GRAPH_ENC, g, e, e);
    match cfg.variant {
        Variant::Full | Variant::NoGraph => {
            mlp(POSTERIOR, 2 * e, h, 2 * d);
            mlp(DECODER, e + d, h, t);
        }
        Variant::Deterministic => mlp(DECODER, e, h, t),
    }
    shapes.push((LOG_TEMP.to_owned(), 1, 1));
    shapes
}

impl Graph2Ts {
    /// Glorot-uniform weights, zero biases, log-temperature at
    /// `ln(temperature_init)`.
    pub fn init<R: Rng + ?Sized>(config: TrainConfig, boundaries: QuantileBoundaries, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if boundaries.num_states() != config.num_states {
            return Err(Error::Config(format!(
                "boundaries have {} states, config expects {}",
                boundaries.num_states(),
                config.num_states
            )));
        }
        let mut params = ParamStore::new();
        for (name, r, c) in param_shapes(&config) {
            let t = if name == LOG_TEMP {
                Tensor2::scalar(config.temperature_init.ln())
            } else if name.ends_with(".b1") || name.ends_with(".b2") {
                Tensor2::zeros(r, c)
            } else {
                Tensor2::glorot(r, c, rng)
            };
            params.insert(name, t);
        }
        Ok(Graph2Ts {
            config,
            boundaries,
            params,
        })
    }

    /// Checks that `params` holds exactly the tensors this config needs.
    pub fn validate_params(&self) -> Result<()> {
        let shapes = param_shapes(&self.config);
        if shapes.len() != self.params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter tensors for variant {}, found {}",
                shapes.len(),
                self.config.variant,
                self.params.len()
            )));
        }
        for (name, r, c) in shapes {
            match self.params.get(&name) {
                Some(t) if t.shape() == (r, c) => {}
                Some(t) => {
                    return Err(Error::Checkpoint(format!(
                        "`{name}` is {:?}, expected {:?}",
                        t.shape(),
                        (r, c)
                    )))
                }
                None => return Err(Error::Checkpoint(format!("missing parameter `{name}`"))),
            }
        }
        if self.boundaries.num_states() != self.config.num_states {
            return Err(Error::Checkpoint("boundary count does not match num_states".into()));
        }
        Ok(())
    }

    pub fn temperature(&self) -> f64 {
        self.params.get(LOG_TEMP).map_or(f64::NAN, |t| t.item().exp())
    }

    /// Plain-value time-series embedding.
    pub fn encode_ts(&self, x: &Tensor2) -> Result<Tensor2> {
        self.eval(|tape, p| {
            let x = tape.constant(x.clone())?;
            encode_ts(tape, p, x)
        })
    }

    /// Plain-value graph embedding.
    pub fn encode_graph(&self, g: &Tensor2) -> Result<Tensor2> {
        self.eval(|tape, p| {
            let g = tape.constant(g.clone())?;
            encode_graph(tape, p, g)
        })
    }

    pub fn posterior(&self, t_raw: &Tensor2, g_raw: &Tensor2) -> Result<PosteriorParams> {
        self.require_stochastic("posterior")?;
        let mut tape = Tape::new();
        let p = self.params.bind(&mut tape)?;
        let t = tape.constant(t_raw.clone())?;
        let g = tape.constant(g_raw.clone())?;
        let (mu, logvar) = posterior(&mut tape, &p, t, g, self.config.latent_dim)?;
        Ok(PosteriorParams {
            mu: tape.value(mu).clone(),
            logvar: tape.value(logvar).clone(),
        })
    }

    /// Decoder output for raw graph embeddings and latents. The
    /// deterministic variant ignores `z` and decodes the normalized embedding.
    pub fn decode(&self, g_raw: &Tensor2, z: &Tensor2) -> Result<Tensor2> {
        self.eval(|tape, p| {
            let g = tape.constant(g_raw.clone())?;
            match self.config.variant {
                Variant::Deterministic => {
                    let gn = tape.l2_normalize_rows(g)?;
                    decode_deterministic(tape, p, gn)
                }
                _ => {
                    let z = tape.constant(z.clone())?;
                    decode(tape, p, g, z)
                }
            }
        })
    }

    fn eval(&self, f: impl FnOnce(&mut Tape, &ParamVars) -> Result<Var>) -> Result<Tensor2> {
        let mut tape = Tape::new();
        let p = self.params.bind(&mut tape)?;
        let out = f(&mut tape, &p)?;
        Ok(tape.value(out).clone())
    }

    /// Distance of the objective's evaluation point from its nearest
    /// non-smooth point: ReLU pre-activations near zero, log-variances near
    /// the clamp, and near-tied decoder outputs feeding the sort. Central
    /// differences with step `h` are only meaningful when this is well above
    /// `h` times the local input scale.
    pub fn kink_margin(&self, x: &Tensor2, g: &Tensor2, eps: &Tensor2) -> Result<f64> {
        let mut tape = Tape::new();
        let p = self.params.bind(&mut tape)?;
        let mut margin = f64::INFINITY;
        let mut layer = |tape: &mut Tape, prefix: &str, input: Var| -> Result<Var> {
            let pre = tape.affine(input, p.var(&format!("{prefix}.w1")), p.var(&format!("{prefix}.b1")))?;
            margin = tape.value(pre).data().iter().fold(margin, |m, v| m.min(v.abs()));
            let h = tape.relu(pre)?;
            tape.affine(h, p.var(&format!("{prefix}.w2")), p.var(&format!("{prefix}.b2")))
        };
        let xv = tape.constant(x.clone())?;
        let gv = tape.constant(g.clone())?;
        let t_raw = layer(&mut tape, TS_ENC, xv)?;
        let g_raw = layer(&mut tape, GRAPH_ENC, gv)?;
        let x_hat = match self.config.variant {
            Variant::Deterministic => {
                let gn = tape.l2_normalize_rows(g_raw)?;
                layer(&mut tape, DECODER, gn)?
            }
            Variant::Full | Variant::NoGraph => {
                let cat = tape.concat_cols(t_raw, g_raw)?;
                let out = layer(&mut tape, POSTERIOR, cat)?;
                let d = self.config.latent_dim;
                let mu = tape.slice_cols(out, 0, d)?;
                let logvar = tape.slice_cols(out, d, d)?;
                let lv_margin = tape
                    .value(logvar)
                    .data()
                    .iter()
                    .fold(f64::INFINITY, |m, v| m.min((LOGVAR_LIMIT - v.abs()).abs()));
                let logvar = tape.clamp(logvar, -LOGVAR_LIMIT, LOGVAR_LIMIT)?;
                let z = tape.reparameterize(mu, logvar, eps.clone())?;
                let cat = tape.concat_cols(g_raw, z)?;
                let x_hat = layer(&mut tape, DECODER, cat)?;
                margin = margin.min(lv_margin);
                x_hat
            }
        };
        for row in tape.value(x_hat).iter_rows() {
            let mut s = row.to_vec();
            s.sort_by(f64::total_cmp);
            margin = s.windows(2).fold(margin, |m, w| m.min(w[1] - w[0]));
        }
        Ok(margin)
    }

    fn require_stochastic(&self, what: &str) -> Result<()> {
        if self.config.variant.is_stochastic() {
            Ok(())
        } else {
            Err(Error::Invalid(format!("{what} is not part of the deterministic variant")))
        }
    }
}

fn mlp(tape: &mut Tape, p: &ParamVars, prefix: &str, x: Var) -> Result<Var> {
    let h = tape.affine(x, p.var(&format!("{prefix}.w1")), p.var(&format!("{prefix}.b1")))?;
    let h = tape.relu(h)?;
    tape.affine(h, p.var(&format!("{prefix}.w2")), p.var(&format!("{prefix}.b2")))
}

pub fn encode_ts(tape: &mut Tape, p: &ParamVars, x: Var) -> Result<Var> {
    mlp(tape, p, TS_ENC, x)
}

pub fn encode_graph(tape: &mut Tape, p: &ParamVars, g: Var) -> Result<Var> {
    mlp(tape, p, GRAPH_ENC, g)
}

/// `(mu, logvar)` from the concatenated raw embeddings; logvar is clamped.
pub fn posterior(tape: &mut Tape, p: &ParamVars, t_raw: Var, g_raw: Var, latent_dim: usize) -> Result<(Var, Var)> {
    let cat = tape.concat_cols(t_raw, g_raw)?;
    let out = mlp(tape, p, POSTERIOR, cat)?;
    let mu = tape.slice_cols(out, 0, latent_dim)?;
    let logvar = tape.slice_cols(out, latent_dim, latent_dim)?;
    let logvar = tape.clamp(logvar, -LOGVAR_LIMIT, LOGVAR_LIMIT)?;
    Ok((mu, logvar))
}

pub fn reparameterize(tape: &mut Tape, mu: Var, logvar: Var, eps: Tensor2) -> Result<Var> {
    tape.reparameterize(mu, logvar, eps)
}

pub fn decode(tape: &mut Tape, p: &ParamVars, g_raw: Var, z: Var) -> Result<Var> {
    let cat = tape.concat_cols(g_raw, z)?;
    mlp(tape, p, DECODER, cat)
}

pub fn decode_deterministic(tape: &mut Tape, p: &ParamVars, g_normalized: Var) -> Result<Var> {
    mlp(tape, p, DECODER, g_normalized)
}

/// Symmetric InfoNCE over in-batch pairs with temperature `exp(log_temp)`.
/// Embeddings are L2-normalized here.
pub fn loss_align(tape: &mut Tape, t_raw: Var, g_raw: Var, log_temp: Var) -> Result<Var> {
    let t = tape.l2_normalize_rows(t_raw)?;
    let g = tape.l2_normalize_rows(g_raw)?;
    loss_align_normalized(tape, t, g, log_temp)
}

fn loss_align_normalized(tape: &mut Tape, t: Var, g: Var, log_temp: Var) -> Result<Var> {
    let sim = tape.matmul_nt(t, g)?;
    let logits = tape.scale_by_inv_exp(sim, log_temp)?;
    let ts_to_graph = tape.cross_entropy_diag(logits)?;
    let logits_t = tape.transpose(logits)?;
    let graph_to_ts = tape.cross_entropy_diag(logits_t)?;
    tape.linear_combination(&[(ts_to_graph, 0.5), (graph_to_ts, 0.5)])
}

/// Mean squared error over every element of the batch.
pub fn loss_recon(tape: &mut Tape, x_hat: Var, x: Var) -> Result<Var> {
    tape.mse(x_hat, x)
}

/// Mean squared error between per-row ascending sorts.
pub fn loss_dist(tape: &mut Tape, x_hat: Var, x: Var) -> Result<Var> {
    let a = tape.sort_rows(x_hat)?;
    let b = tape.sort_rows(x)?;
    tape.mse(a, b)
}

pub fn loss_kl(tape: &mut Tape, mu: Var, logvar: Var) -> Result<Var> {
    tape.kl_std_normal(mu, logvar)
}

/// Builds the weighted objective for one batch on `tape`.
///
/// `x` is `B x T`, `g` is `B x Q²` (already replaced by the identity graph
/// for the no-graph variant), `eps` is `B x d_z` standard-normal noise and
/// is ignored by the deterministic variant.
pub fn objective(
    tape: &mut Tape,
    p: &ParamVars,
    cfg: &TrainConfig,
    x: &Tensor2,
    g: &Tensor2,
    eps: &Tensor2,
    beta: f64,
) -> Result<ObjectiveVars> {
    if x.rows() != g.rows() || x.cols() != cfg.window_length || g.cols() != cfg.graph_dim() {
        return Err(Error::Shape {
            op: "objective",
            detail: format!("x {:?}, g {:?}", x.shape(), g.shape()),
        });
    }
    let xv = tape.constant(x.clone())?;
    let gv = tape.constant(g.clone())?;
    let t_raw = encode_ts(tape, p, xv)?;
    let g_raw = encode_graph(tape, p, gv)?;
    let t_hat = tape.l2_normalize_rows(t_raw)?;
    let g_hat = tape.l2_normalize_rows(g_raw)?;
    let align = loss_align_normalized(tape, t_hat, g_hat, p.var(LOG_TEMP))?;

    let (x_hat, kl) = match cfg.variant {
        Variant::Deterministic => (decode_deterministic(tape, p, g_hat)?, None),
        Variant::Full | Variant::NoGraph => {
            let (mu, logvar) = posterior(tape, p, t_raw, g_raw, cfg.latent_dim)?;
            let z = reparameterize(tape, mu, logvar, eps.clone())?;
            (decode(tape, p, g_raw, z)?, Some(loss_kl(tape, mu, logvar)?))
        }
    };
    let recon = loss_recon(tape, x_hat, xv)?;
    let dist = loss_dist(tape, x_hat, xv)?;

    let mut terms = vec![(align, cfg.w_align), (recon, cfg.w_recon), (dist, cfg.w_dist)];
    if let Some(kl) = kl {
        terms.push((kl, beta));
    }
    let total = tape.linear_combination(&terms)?;
    Ok(ObjectiveVars {
        align,
        recon,
        dist,
        kl,
        total,
    })
}

impl ObjectiveVars {
    pub fn breakdown(&self, tape: &Tape, beta: f64) -> LossBreakdown {
        LossBreakdown {
            align: tape.value(self.align).item(),
            recon: tape.value(self.recon).item(),
            dist: tape.value(self.dist).item(),
            kl: self.kl.map_or(0.0, |k| tape.value(k).item()),
            beta,
            total: tape.value(self.total).item(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile_graph::fit_boundaries;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(variant: Variant) -> TrainConfig {
        TrainConfig {
            window_length: 8,
            num_states: 3,
            embed_dim: 6,
            hidden_dim: 5,
            latent_dim: 4,
            variant,
            ..Default::default()
        }
    }

    fn model(variant: Variant, seed: u64) -> Graph2Ts {
        let cfg = small_config(variant);
        let b = fit_boundaries(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], cfg.num_states).unwrap();
        Graph2Ts::init(cfg, b, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn scalar(tape: &mut Tape, v: f64) -> Var {
        tape.constant(Tensor2::scalar(v)).unwrap()
    }

    fn align_value(t: &[&[f64]], g: &[&[f64]], temp: f64) -> f64 {
        let mut tape = Tape::new();
        let tv = tape.constant(Tensor2::from_rows(t).unwrap()).unwrap();
        let gv = tape.constant(Tensor2::from_rows(g).unwrap()).unwrap();
        let lt = scalar(&mut tape, temp.ln());
        let l = loss_align(&mut tape, tv, gv, lt).unwrap();
        tape.value(l).item()
    }

    #[test]
    fn align_single_pair_is_zero() {
        assert_eq!(align_value(&[&[0.3, -2.0]], &[&[1.0, 1.0]], 0.07), 0.0);
    }

    #[test]
    fn align_two_class_closed_forms() {
        let e1: &[f64] = &[1.0, 0.0];
        let e2: &[f64] = &[0.0, 1.0];
        let matched = align_value(&[e1, e2], &[e1, e2], 0.07);
        let expected = (-1.0f64 / 0.07).exp().ln_1p();
        assert!((matched - expected).abs() < 1e-15, "{matched} vs {expected}");
        assert!(matched < 1e-6);

        let swapped = align_value(&[e1, e2], &[e2, e1], 0.07);
        let expected = (1.0f64 / 0.07).exp().ln_1p();
        assert!((swapped - expected).abs() < 1e-12);
        assert!((swapped - 1.0 / 0.07).abs() < 1e-6);
    }

    #[test]
    fn recon_and_dist_examples() {
        let run = |a: &[f64], b: &[f64]| {
            let mut tape = Tape::new();
            let av = tape.constant(Tensor2::from_rows(&[a]).unwrap()).unwrap();
            let bv = tape.constant(Tensor2::from_rows(&[b]).unwrap()).unwrap();
            let r = loss_recon(&mut tape, av, bv).unwrap();
            let d = loss_dist(&mut tape, av, bv).unwrap();
            (tape.value(r).item(), tape.value(d).item())
        };
        assert_eq!(run(&[0.5, -1.0], &[0.5, -1.0]), (0.0, 0.0));
        assert_eq!(run(&[1.0, 1.0], &[0.0, 0.0]).0, 1.0);
        assert_eq!(run(&[1.0, 0.0], &[0.0, 1.0]).1, 0.0);
        assert_eq!(run(&[1.0, 1.0], &[0.0, 2.0]).1, 1.0);
        assert_eq!(run(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).1, 0.0);
    }

    #[test]
    fn kl_closed_forms() {
        let run = |mu: f64, lv: f64| {
            let mut tape = Tape::new();
            let m = scalar(&mut tape, mu);
            let l = scalar(&mut tape, lv);
            let k = loss_kl(&mut tape, m, l).unwrap();
            tape.value(k).item()
        };
        assert_eq!(run(0.0, 0.0), 0.0);
        assert_eq!(run(1.0, 0.0), 0.5);
        let v = run(0.0, 4f64.ln());
        assert!((v - 0.5 * (3.0 - 4f64.ln())).abs() < 1e-15);
        assert!((v - 0.8069).abs() < 1e-4);
    }

    #[test]
    fn recon_gradient_formula() {
        let mut tape = Tape::new();
        let xh = tape
            .param("xh", Tensor2::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap())
            .unwrap();
        let x = tape.constant(Tensor2::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap()).unwrap();
        let l = loss_recon(&mut tape, xh, x).unwrap();
        let g = tape.backward(l).unwrap();
        let expected: Vec<f64> = [1.0, 1.0, -2.0, 0.5].iter().map(|d| 2.0 * d / 4.0).collect();
        assert_eq!(g.wrt(xh).unwrap().data(), expected.as_slice());
    }

    #[test]
    fn encoders_are_deterministic_and_bias_driven_at_zero() {
        let mut m = model(Variant::Full, 3);
        m.params.get_mut("ts_enc.b2").unwrap().data_mut()[0] = 0.25;
        let zero = Tensor2::zeros(3, 8);
        let out = m.encode_ts(&zero).unwrap();
        // zero input and zero first-layer bias: output is the final bias
        for row in out.iter_rows() {
            assert_eq!(row[0], 0.25);
            assert!(row[1..].iter().all(|&v| v == 0.0));
        }
        let x = Tensor2::from_vec(1, 8, (0..8).map(|i| (i as f64 - 4.0) * 2.5).collect()).unwrap();
        assert_eq!(m.encode_ts(&x).unwrap(), m.encode_ts(&x).unwrap());
        assert!(m.encode_ts(&x).unwrap().all_finite());

        let g = Tensor2::filled(2, 9, 0.0);
        assert!(m.encode_graph(&g).unwrap().iter_rows().all(|r| r.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn posterior_shape_and_clamp() {
        let mut m = model(Variant::Full, 4);
        let t = Tensor2::filled(2, 6, 1.0);
        let g = Tensor2::filled(2, 6, -1.0);
        let p = m.posterior(&t, &g).unwrap();
        assert_eq!(p.mu.shape(), (2, 4));
        assert_eq!(p.logvar.shape(), (2, 4));
        assert_eq!(p, m.posterior(&t, &g).unwrap());

        // blow up the head so raw logvars leave the clamp range
        for w in m.params.get_mut("posterior.w2").unwrap().data_mut() {
            *w *= 1e4;
        }
        let p = m.posterior(&Tensor2::filled(2, 6, 50.0), &Tensor2::filled(2, 6, -50.0)).unwrap();
        assert!(p.logvar.data().iter().all(|v| v.abs() <= LOGVAR_LIMIT));
        assert!(p.logvar.data().iter().any(|v| v.abs() == LOGVAR_LIMIT));
    }

    #[test]
    fn reparameterize_examples() {
        let mut tape = Tape::new();
        let mu = tape.constant(Tensor2::from_vec(1, 2, vec![0.5, -1.0]).unwrap()).unwrap();
        let lv = tape.constant(Tensor2::zeros(1, 2)).unwrap();
        let z = reparameterize(&mut tape, mu, lv, Tensor2::zeros(1, 2)).unwrap();
        assert_eq!(tape.value(z).data(), &[0.5, -1.0]);
        let e = Tensor2::from_vec(1, 2, vec![0.25, 2.0]).unwrap();
        let z = reparameterize(&mut tape, mu, lv, e).unwrap();
        assert_eq!(tape.value(z).data(), &[0.75, 1.0]);
    }

    #[test]
    fn decoder_uses_z_only_when_stochastic() {
        let full = model(Variant::Full, 5);
        let g = full.encode_graph(&Tensor2::filled(1, 9, 0.3)).unwrap();
        let z1 = Tensor2::filled(1, 4, 0.5);
        let z2 = Tensor2::filled(1, 4, -0.5);
        assert_ne!(full.decode(&g, &z1).unwrap(), full.decode(&g, &z2).unwrap());
        assert_eq!(full.decode(&g, &z1).unwrap(), full.decode(&g, &z1).unwrap());

        let det = model(Variant::Deterministic, 5);
        let g = det.encode_graph(&Tensor2::filled(1, 9, 0.3)).unwrap();
        assert_eq!(det.decode(&g, &z1).unwrap(), det.decode(&g, &z2).unwrap());
        assert!(det.posterior(&g, &g).is_err());
    }

    #[test]
    fn objective_total_recombines() {
        for variant in [Variant::Full, Variant::NoGraph, Variant::Deterministic] {
            let m = model(variant, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let x = Tensor2::glorot(4, 8, &mut rng);
            let g = Tensor2::glorot(4, 9, &mut rng).map(f64::abs);
            let eps = Tensor2::glorot(4, 4, &mut rng);
            let mut tape = Tape::new();
            let p = m.params.bind(&mut tape).unwrap();
            let obj = objective(&mut tape, &p, &m.config, &x, &g, &eps, 0.03).unwrap();
            let b = obj.breakdown(&tape, 0.03);
            assert!((b.total - b.recombine(&m.config)).abs() <= 1e-12);
            assert_eq!(obj.kl.is_none(), variant == Variant::Deterministic);
        }
    }

    #[test]
    fn parameter_layout_per_variant() {
        let full = model(Variant::Full, 1);
        full.validate_params().unwrap();
        assert_eq!(full.params.get("decoder.w1").unwrap().shape(), (6 + 4, 5));
        assert_eq!(full.params.get("posterior.w1").unwrap().shape(), (12, 5));
        assert_eq!(full.params.get("posterior.w2").unwrap().shape(), (5, 8));
        assert!((full.temperature() - 0.07).abs() < 1e-15);

        let det = model(Variant::Deterministic, 1);
        det.validate_params().unwrap();
        assert!(!det.params.contains("posterior.w1"));
        assert_eq!(det.params.get("decoder.w1").unwrap().shape(), (6, 5));
        assert!(det.params.get("decoder.b1").unwrap().data().iter().all(|&b| b == 0.0));
    }
}
