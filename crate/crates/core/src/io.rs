//! On-disk artifact formats.
//!
//! Text artifacts start with a `# graph2ts-<kind> v1 …` header line that
//! readers validate before parsing. Reals are written with Rust's shortest
//! round-trip formatting, so a write/read cycle is bit-exact.
//!
//! The checkpoint is a little-endian binary container:
//!
//! ```text
//! "g2ts-ckpt v1\n"
//! u32 len, config (TOML, UTF-8)
//! u32 len, variant tag (UTF-8)
//! u32 array count
//! per array: u32 len, name (UTF-8), u64 rows, u64 cols, rows*cols f64
//! ```
//!
//! Quantile boundaries travel as the array `quantile_boundaries` (`1 x Q+1`).

use std::fmt::Write as _;
use std::path::Path;

use crate::autodiff::ParamStore;
use crate::dataset::{NormStats, TimeSeriesWindow};
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, SetTails, TailStats};
use crate::model::{EpochLog, Graph2Ts, TrainConfig, Variant};
use crate::quantile_graph::QuantileBoundaries;
use crate::tensor::Tensor2;

pub const CHECKPOINT_MAGIC: &[u8] = b"g2ts-ckpt v1\n";
const BOUNDARIES_ARRAY: &str = "quantile_boundaries";

pub fn windows_header(t: usize) -> String {
    format!("# graph2ts-windows v1 T={t}")
}

pub fn graphs_header(q: usize) -> String {
    format!("# graph2ts-graphs v1 Q={q}")
}

pub fn boundaries_header(q: usize) -> String {
    format!("# graph2ts-boundaries v1 Q={q}")
}

pub const NORM_HEADER: &str = "# graph2ts-norm v1";
pub const LOSS_LOG_HEADER: &str = "# graph2ts-losslog v1";
pub const LOSS_LOG_COLUMNS: &str = "epoch,align,recon,dist,kl,beta,total";
pub const METRICS_HEADER: &str = "# graph2ts-metrics v1";
pub const TAILSTATS_HEADER: &str = "# graph2ts-tailstats v1";

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn join_reals(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").expect("write to String");
    }
    s
}

fn parse_reals(line: &str, lineno: usize, source: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: source.into(),
                line: lineno,
                msg: format!("`{}`: {e}", f.trim()),
            })
        })
        .collect()
}

/// Splits off the header and checks its `<prefix> <KEY>=<n>` form.
fn header_param<'a>(text: &'a str, prefix: &str, key: &str) -> Result<(usize, impl Iterator<Item = (usize, &'a str)>)> {
    let mut lines = text.lines().enumerate();
    let first = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    let expected = format!("{prefix} {key}=<n>");
    let value = first
        .strip_prefix(prefix)
        .and_then(|rest| rest.trim().strip_prefix(key))
        .and_then(|rest| rest.strip_prefix('='))
        .and_then(|n| n.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::Header {
            expected,
            found: first.to_owned(),
        })?;
    Ok((
        value,
        lines.filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)),
    ))
}

fn expect_header<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    let first = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if first != header {
        return Err(Error::Header {
            expected: header.to_owned(),
            found: first.to_owned(),
        });
    }
    Ok(lines.filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)))
}

// ---- windows ------------------------------------------------------------

pub fn format_windows(windows: &[TimeSeriesWindow], t: usize) -> Result<String> {
    let mut s = windows_header(t);
    s.push('\n');
    for (i, w) in windows.iter().enumerate() {
        if w.len() != t {
            return Err(Error::Invalid(format!("window {i} has length {}, expected {t}", w.len())));
        }
        s.push_str(&join_reals(w.values()));
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_windows(text: &str, source: &str) -> Result<(usize, Vec<TimeSeriesWindow>)> {
    let (t, rows) = header_param(text, "# graph2ts-windows v1", "T")?;
    let mut out = Vec::new();
    for (lineno, line) in rows {
        let v = parse_reals(line, lineno, source)?;
        if v.len() != t {
            return Err(Error::Parse {
                path: source.into(),
                line: lineno,
                msg: format!("{} values, header says T={t}", v.len()),
            });
        }
        out.push(TimeSeriesWindow::new(v).map_err(|e| Error::Parse {
            path: source.into(),
            line: lineno,
            msg: e.to_string(),
        })?);
    }
    Ok((t, out))
}

pub fn write_windows(path: &Path, windows: &[TimeSeriesWindow], t: usize) -> Result<()> {
    write_bytes(path, format_windows(windows, t)?.as_bytes())
}

pub fn read_windows(path: &Path) -> Result<(usize, Vec<TimeSeriesWindow>)> {
    parse_windows(&read_text(path)?, &path.display().to_string())
}

// ---- graphs and boundaries ---------------------------------------------

pub fn format_graphs(graphs: &[Vec<f64>], q: usize) -> Result<String> {
    let mut s = graphs_header(q);
    s.push('\n');
    for (i, g) in graphs.iter().enumerate() {
        if g.len() != q * q {
            return Err(Error::Invalid(format!("graph {i} has {} entries, expected {}", g.len(), q * q)));
        }
        s.push_str(&join_reals(g));
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_graphs(text: &str, source: &str) -> Result<(usize, Vec<Vec<f64>>)> {
    let (q, rows) = header_param(text, "# graph2ts-graphs v1", "Q")?;
    let mut out = Vec::new();
    for (lineno, line) in rows {
        let v = parse_reals(line, lineno, source)?;
        if v.len() != q * q {
            return Err(Error::Parse {
                path: source.into(),
                line: lineno,
                msg: format!("{} values, header says Q={q}", v.len()),
            });
        }
        out.push(v);
    }
    Ok((q, out))
}

pub fn write_graphs(path: &Path, graphs: &[Vec<f64>], q: usize) -> Result<()> {
    write_bytes(path, format_graphs(graphs, q)?.as_bytes())
}

pub fn read_graphs(path: &Path) -> Result<(usize, Vec<Vec<f64>>)> {
    parse_graphs(&read_text(path)?, &path.display().to_string())
}

pub fn format_boundaries(b: &QuantileBoundaries) -> String {
    format!("{}\n{}\n", boundaries_header(b.num_states()), join_reals(b.edges()))
}

pub fn parse_boundaries(text: &str, source: &str) -> Result<QuantileBoundaries> {
    let (q, mut rows) = header_param(text, "# graph2ts-boundaries v1", "Q")?;
    let (lineno, line) = rows.next().ok_or(Error::Empty("boundaries file"))?;
    let edges = parse_reals(line, lineno, source)?;
    if edges.len() != q + 1 {
        return Err(Error::Parse {
            path: source.into(),
            line: lineno,
            msg: format!("{} edges, header says Q={q}", edges.len()),
        });
    }
    QuantileBoundaries::from_edges(edges)
}

pub fn write_boundaries(path: &Path, b: &QuantileBoundaries) -> Result<()> {
    write_bytes(path, format_boundaries(b).as_bytes())
}

pub fn read_boundaries(path: &Path) -> Result<QuantileBoundaries> {
    parse_boundaries(&read_text(path)?, &path.display().to_string())
}

// ---- normalization ------------------------------------------------------

pub fn format_norm(n: &NormStats) -> String {
    format!("{NORM_HEADER}\nmean,std\n{},{}\n", n.mean, n.std)
}

pub fn parse_norm(text: &str, source: &str) -> Result<NormStats> {
    let mut rows = expect_header(text, NORM_HEADER)?.filter(|(_, l)| l.trim() != "mean,std");
    let (lineno, line) = rows.next().ok_or(Error::Empty("norm file"))?;
    match parse_reals(line, lineno, source)?.as_slice() {
        &[mean, std] if std > 0.0 => Ok(NormStats { mean, std }),
        _ => Err(Error::Parse {
            path: source.into(),
            line: lineno,
            msg: "expected `mean,std` with std > 0".into(),
        }),
    }
}

pub fn write_norm(path: &Path, n: &NormStats) -> Result<()> {
    write_bytes(path, format_norm(n).as_bytes())
}

pub fn read_norm(path: &Path) -> Result<NormStats> {
    parse_norm(&read_text(path)?, &path.display().to_string())
}

// ---- loss log -----------------------------------------------------------

pub fn format_loss_log(log: &[EpochLog]) -> String {
    let mut s = format!("{LOSS_LOG_HEADER}\n{LOSS_LOG_COLUMNS}\n");
    for e in log {
        let l = &e.losses;
        writeln!(
            s,
            "{},{}",
            e.epoch,
            join_reals(&[l.align, l.recon, l.dist, l.kl, l.beta, l.total])
        )
        .expect("write to String");
    }
    s
}

pub fn write_loss_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    write_bytes(path, format_loss_log(log).as_bytes())
}

// ---- metrics and tail statistics ---------------------------------------

fn push_kv(s: &mut String, key: &str, v: impl std::fmt::Display) {
    writeln!(s, "{key} = {v}").expect("write to String");
}

fn push_tails(s: &mut String, prefix: &str, t: &TailStats) {
    push_kv(s, &format!("{prefix}_mean"), t.mean);
    push_kv(s, &format!("{prefix}_std"), t.std);
    push_kv(s, &format!("{prefix}_excess_kurtosis"), t.excess_kurtosis);
    push_kv(s, &format!("{prefix}_q0.001"), t.quantile_range.0);
    push_kv(s, &format!("{prefix}_q0.999"), t.quantile_range.1);
}

pub fn format_metrics(r: &MetricsReport) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    push_kv(&mut s, "n", r.n);
    push_kv(&mut s, "wasserstein", r.wasserstein);
    push_kv(&mut s, "ks", r.ks);
    push_kv(&mut s, "acf_mae", r.acf_mae);
    push_kv(&mut s, "psd_l2", r.psd_l2);
    push_kv(&mut s, "proto_err_avg", r.proto_err_avg);
    push_kv(&mut s, "proto_err_med", r.proto_err_med);
    push_kv(&mut s, "mdr", r.mdr);
    for (q, c) in &r.coverage {
        push_kv(&mut s, &format!("coverage_{q}"), c);
    }
    push_tails(&mut s, "real_x", &r.real_tails.x);
    push_tails(&mut s, "real_dx", &r.real_tails.dx);
    push_tails(&mut s, "synth_x", &r.synth_tails.x);
    push_tails(&mut s, "synth_dx", &r.synth_tails.dx);
    s
}

/// Parses any `key = value` document with the given header into ordered
/// pairs.
pub fn parse_key_values(text: &str, header: &str, source: &str) -> Result<Vec<(String, f64)>> {
    expect_header(text, header)?
        .map(|(lineno, line)| {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: source.into(),
                line: lineno,
                msg: "expected `key = value`".into(),
            })?;
            let v = v.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: source.into(),
                line: lineno,
                msg: e.to_string(),
            })?;
            Ok((k.trim().to_owned(), v))
        })
        .collect()
}

pub fn write_metrics(path: &Path, r: &MetricsReport) -> Result<()> {
    write_bytes(path, format_metrics(r).as_bytes())
}

pub fn format_tail_stats(t: &SetTails) -> String {
    let mut s = format!("{TAILSTATS_HEADER}\n");
    push_tails(&mut s, "x", &t.x);
    push_tails(&mut s, "dx", &t.dx);
    s
}

pub fn write_tail_stats(path: &Path, t: &SetTails) -> Result<()> {
    write_bytes(path, format_tail_stats(t).as_bytes())
}

// ---- checkpoint ---------------------------------------------------------

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

fn put_array(buf: &mut Vec<u8>, name: &str, t: &Tensor2) {
    put_str(buf, name);
    buf.extend_from_slice(&(t.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(t.cols() as u64).to_le_bytes());
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_checkpoint(model: &Graph2Ts) -> Vec<u8> {
    let mut buf = CHECKPOINT_MAGIC.to_vec();
    put_str(&mut buf, &model.config.to_toml());
    put_str(&mut buf, model.config.variant.as_str());
    buf.extend_from_slice(&(model.params.len() as u32 + 1).to_le_bytes());
    for (name, t) in model.params.iter() {
        put_array(&mut buf, name, t);
    }
    let edges = model.boundaries.edges();
    let b = Tensor2::from_vec(1, edges.len(), edges.to_vec()).expect("edge row");
    put_array(&mut buf, BOUNDARIES_ARRAY, &b);
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    fn array(&mut self) -> Result<(String, Tensor2)> {
        let name = self.string()?;
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint(format!("`{name}`: absurd shape")))?;
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("overflow".into()))?)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok((name, Tensor2::from_vec(rows, cols, data)?))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Graph2Ts> {
    if !bytes.starts_with(CHECKPOINT_MAGIC) {
        let shown = String::from_utf8_lossy(&bytes[..bytes.len().min(CHECKPOINT_MAGIC.len())]).into_owned();
        return Err(Error::Header {
            expected: String::from_utf8_lossy(CHECKPOINT_MAGIC).trim_end().to_owned(),
            found: shown.trim_end().to_owned(),
        });
    }
    let mut r = Reader {
        buf: bytes,
        pos: CHECKPOINT_MAGIC.len(),
    };
    let config = TrainConfig::from_toml(&r.string()?)?;
    let variant: Variant = r.string()?.parse()?;
    if variant != config.variant {
        return Err(Error::Checkpoint(format!(
            "variant tag `{variant}` disagrees with config `{}`",
            config.variant
        )));
    }
    let count = r.u32()?;
    let mut params = ParamStore::new();
    let mut boundaries = None;
    for _ in 0..count {
        let (name, t) = r.array()?;
        if name == BOUNDARIES_ARRAY {
            boundaries = Some(QuantileBoundaries::from_edges(t.into_vec())?);
        } else {
            params.insert(name, t);
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let model = Graph2Ts {
        config,
        boundaries: boundaries.ok_or_else(|| Error::Checkpoint("missing quantile boundaries".into()))?,
        params,
    };
    model.validate_params()?;
    Ok(model)
}

pub fn write_checkpoint(path: &Path, model: &Graph2Ts) -> Result<()> {
    write_bytes(path, &encode_checkpoint(model))
}

pub fn read_checkpoint(path: &Path) -> Result<Graph2Ts> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile_graph::fit_boundaries;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_model(variant: Variant) -> Graph2Ts {
        let cfg = TrainConfig {
            window_length: 6,
            num_states: 3,
            embed_dim: 4,
            hidden_dim: 3,
            latent_dim: 2,
            variant,
            ..Default::default()
        };
        let b = fit_boundaries(&[0.0, 1.0, 2.0, 3.0], 3).unwrap();
        Graph2Ts::init(cfg, b, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    }

    #[test]
    fn checkpoint_round_trip() {
        for v in [Variant::Full, Variant::NoGraph, Variant::Deterministic] {
            let m = tiny_model(v);
            let bytes = encode_checkpoint(&m);
            assert!(bytes.starts_with(b"g2ts-ckpt v1\n"));
            assert_eq!(decode_checkpoint(&bytes).unwrap(), m);
        }
    }

    #[test]
    fn checkpoint_rejects_damage() {
        let bytes = encode_checkpoint(&tiny_model(Variant::Full));
        assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 3]), Err(Error::Checkpoint(_))));
        let mut bad = bytes.clone();
        bad[10] = b'9';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Header { .. })));
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_checkpoint(&extra).is_err());
    }

    #[test]
    fn windows_text_is_exact() {
        let w = vec![
            TimeSeriesWindow::new(vec![0.1, -1e-300, 1.0 / 3.0]).unwrap(),
            TimeSeriesWindow::new(vec![5.0, 6.25, f64::MAX]).unwrap(),
        ];
        let text = format_windows(&w, 3).unwrap();
        assert!(text.starts_with("# graph2ts-windows v1 T=3\n"));
        assert_eq!(parse_windows(&text, "mem").unwrap(), (3, w));
    }

    #[test]
    fn headers_are_validated() {
        assert!(matches!(parse_windows("1,2,3\n", "mem"), Err(Error::Header { .. })));
        assert!(matches!(
            parse_graphs("# graph2ts-windows v1 T=4\n", "mem"),
            Err(Error::Header { .. })
        ));
        assert!(parse_windows("# graph2ts-windows v1 T=2\n1,2,3\n", "mem").is_err());
        assert!(parse_norm("# graph2ts-norm v2\n1,2\n", "mem").is_err());
    }

    #[test]
    fn boundaries_and_norm_round_trip() {
        let b = fit_boundaries(&[0.5, 1.5, 2.0, 7.0, 9.0], 4).unwrap();
        assert_eq!(parse_boundaries(&format_boundaries(&b), "mem").unwrap().edges(), b.edges());
        let n = NormStats { mean: -0.3, std: 2.5 };
        assert_eq!(parse_norm(&format_norm(&n), "mem").unwrap(), n);
    }

    #[test]
    fn graphs_round_trip() {
        let g = vec![vec![1.0, 0.0, 0.5, 0.5], vec![0.0, 0.0, 0.0, 1.0]];
        let text = format_graphs(&g, 2).unwrap();
        assert_eq!(parse_graphs(&text, "mem").unwrap(), (2, g));
    }
}
