use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::TimeSeriesWindow;
use crate::error::{Error, Result};
use crate::model::config::Variant;
use crate::model::network::Graph2Ts;
use crate::model::train::standard_normal;
use crate::quantile_graph::identity_graph;
use crate::tensor::Tensor2;

const CHUNK: usize = 1024;

/// Draws `n_per_graph` samples for every flattened graph, graph-major.
///
/// Each graph is encoded once and paired with independent `z ~ N(0, I)`.
/// The no-graph variant substitutes the identity graph; the deterministic
/// variant emits `n_per_graph` identical copies of its single output.
pub fn generate(model: &Graph2Ts, graphs: &[Vec<f64>], n_per_graph: usize, seed: u64) -> Result<Vec<TimeSeriesWindow>> {
    let cfg = &model.config;
    if n_per_graph == 0 {
        return Err(Error::Invalid("n_per_graph must be positive".into()));
    }
    if let Some((i, g)) = graphs.iter().enumerate().find(|(_, g)| g.len() != cfg.graph_dim()) {
        return Err(Error::Checkpoint(format!(
            "graph {i} has {} entries but the checkpoint expects Q²={}",
            g.len(),
            cfg.graph_dim()
        )));
    }
    let identity = identity_graph(cfg.num_states).flatten();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(graphs.len() * n_per_graph);

    for chunk in graphs.chunks(CHUNK) {
        let rows: Vec<&[f64]> = chunk
            .iter()
            .map(|g| match cfg.variant {
                Variant::NoGraph => identity.as_slice(),
                _ => g.as_slice(),
            })
            .collect();
        let g_raw = model.encode_graph(&Tensor2::from_rows(&rows)?)?;

        match cfg.variant {
            Variant::Deterministic => {
                let x = model.decode(&g_raw, &Tensor2::zeros(g_raw.rows(), cfg.latent_dim))?;
                for row in x.iter_rows() {
                    for _ in 0..n_per_graph {
                        out.push(TimeSeriesWindow::new(row.to_vec())?);
                    }
                }
            }
            Variant::Full | Variant::NoGraph => {
                let mut data = Vec::with_capacity(g_raw.rows() * n_per_graph * g_raw.cols());
                for row in g_raw.iter_rows() {
                    for _ in 0..n_per_graph {
                        data.extend_from_slice(row);
                    }
                }
                let reps = g_raw.rows() * n_per_graph;
                let g_rep = Tensor2::from_vec(reps, g_raw.cols(), data)?;
                let z = standard_normal(reps, cfg.latent_dim, &mut rng);
                let x = model.decode(&g_rep, &z)?;
                for row in x.iter_rows() {
                    out.push(TimeSeriesWindow::new(row.to_vec())?);
                }
            }
        }
    }
    Ok(out)
}

/// Raw time-series embeddings, one row per window.
pub fn embed_windows(model: &Graph2Ts, windows: &[TimeSeriesWindow]) -> Result<Tensor2> {
    if windows.iter().any(|w| w.len() != model.config.window_length) {
        return Err(Error::Checkpoint("window length does not match checkpoint".into()));
    }
    let mut rows = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(CHUNK) {
        let e = model.encode_ts(&Tensor2::from_rows(chunk)?)?;
        rows.extend(e.iter_rows().map(<[f64]>::to_vec));
    }
    Tensor2::from_rows(&rows)
}
