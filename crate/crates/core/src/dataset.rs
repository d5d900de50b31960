//! Series ingestion, windowing, normalization, splitting, and synthetic
//! corpora.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered univariate signal in its original units.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSeries {
    pub values: Vec<f64>,
    pub source_id: String,
}

impl RawSeries {
    pub fn new(values: Vec<f64>, source_id: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("series"));
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                path: source_id.into().into(),
                row,
            });
        }
        Ok(RawSeries {
            values,
            source_id: source_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A fixed-length segment of a series.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesWindow {
    values: Vec<f64>,
}

impl TimeSeriesWindow {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("window"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteValue("window"));
        }
        Ok(TimeSeriesWindow { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for TimeSeriesWindow {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    /// Pooled mean and population standard deviation.
    pub fn fit(windows: &[TimeSeriesWindow]) -> Result<Self> {
        let n: usize = windows.iter().map(|w| w.len()).sum();
        if n == 0 {
            return Err(Error::Empty("windows"));
        }
        let mean = windows.iter().flat_map(|w| w.values()).sum::<f64>() / n as f64;
        let var = windows
            .iter()
            .flat_map(|w| w.values())
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n as f64;
        let std = var.sqrt();
        if std <= 0.0 || !std.is_finite() {
            return Err(Error::ZeroVariance("pooled window values"));
        }
        Ok(NormStats { mean, std })
    }

    pub fn apply(&self, w: &TimeSeriesWindow) -> TimeSeriesWindow {
        TimeSeriesWindow {
            values: w.values.iter().map(|v| (v - self.mean) / self.std).collect(),
        }
    }

    pub fn apply_all(&self, ws: &[TimeSeriesWindow]) -> Vec<TimeSeriesWindow> {
        ws.iter().map(|w| self.apply(w)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<TimeSeriesWindow>,
    pub eval: Vec<TimeSeriesWindow>,
    pub norm: NormStats,
    pub window_length: usize,
    pub stride: usize,
}

#[derive(Clone, Copy, Debug)]
enum Delimiter {
    Comma,
    Tab,
    Whitespace,
}

impl Delimiter {
    fn detect(line: &str) -> Self {
        if line.contains(',') {
            Delimiter::Comma
        } else if line.contains('\t') {
            Delimiter::Tab
        } else {
            Delimiter::Whitespace
        }
    }

    fn field(self, line: &str, column: usize) -> Option<&str> {
        match self {
            Delimiter::Comma => line.split(',').nth(column),
            Delimiter::Tab => line.split('\t').nth(column),
            Delimiter::Whitespace => line.split_whitespace().nth(column),
        }
        .map(str::trim)
    }
}

/// Reads one numeric column of a delimited text file. Blank lines, `#`
/// comments, and non-numeric rows before the first data row are skipped.
pub fn load_series(path: &Path, column: usize) -> Result<RawSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut delim = None;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let d = *delim.get_or_insert_with(|| Delimiter::detect(line));
        let parsed = d.field(line, column).and_then(|f| f.parse::<f64>().ok());
        match parsed {
            Some(v) if !v.is_finite() => {
                return Err(Error::NonFinite {
                    path: path.to_path_buf(),
                    row,
                })
            }
            Some(v) => values.push(v),
            None if values.is_empty() => {
                // header; re-detect the delimiter on the first data row
                delim = None;
            }
            None => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: row,
                    msg: format!("column {column} is not a number"),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(Error::NoData {
            path: path.to_path_buf(),
        });
    }
    Ok(RawSeries {
        values,
        source_id: path.display().to_string(),
    })
}

/// Windows starting at `0, stride, 2·stride, …`; a trailing partial segment is
/// dropped.
pub fn make_windows(series: &RawSeries, window: usize, stride: usize) -> Result<Vec<TimeSeriesWindow>> {
    if window == 0 || stride == 0 {
        return Err(Error::Invalid("window length and stride must be positive".into()));
    }
    if series.len() < window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window,
        });
    }
    Ok((0..=series.len() - window)
        .step_by(stride)
        .map(|s| TimeSeriesWindow {
            values: series.values[s..s + window].to_vec(),
        })
        .collect())
}

/// Z-scores windows with statistics pooled over all of them.
pub fn zscore_fit_apply(windows: &[TimeSeriesWindow]) -> Result<(Vec<TimeSeriesWindow>, NormStats)> {
    let stats = NormStats::fit(windows)?;
    Ok((stats.apply_all(windows), stats))
}

/// Seeded shuffle into `⌈(1−f)·N⌉` train windows and the rest for eval.
/// Normalization is fitted on the train part and applied to both.
pub fn split(windows: &[TimeSeriesWindow], eval_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(Error::Invalid(format!(
            "eval fraction {eval_fraction} outside (0, 1)"
        )));
    }
    let n = windows.len();
    let n_train = ((1.0 - eval_fraction) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    let n_train = n_train.min(n);
    if n_train == 0 || n_train == n {
        return Err(Error::DegenerateSplit {
            n_train,
            n_eval: n - n_train,
        });
    }
    let window_length = windows[0].len();
    if windows.iter().any(|w| w.len() != window_length) {
        return Err(Error::Invalid("windows of unequal length".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train_idx, eval_idx) = order.split_at_mut(n_train);
    train_idx.sort_unstable();
    eval_idx.sort_unstable();

    let train: Vec<_> = train_idx.iter().map(|&i| windows[i].clone()).collect();
    let eval: Vec<_> = eval_idx.iter().map(|&i| windows[i].clone()).collect();
    let norm = NormStats::fit(&train)?;
    Ok(DatasetSplit {
        train: norm.apply_all(&train),
        eval: norm.apply_all(&eval),
        norm,
        window_length,
        stride: window_length,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    SineMix,
    Ar1,
    HeavyTail,
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthKind::SineMix => "sine_mix",
            SynthKind::Ar1 => "ar1",
            SynthKind::HeavyTail => "heavy_tail",
        })
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine_mix" => Ok(SynthKind::SineMix),
            "ar1" => Ok(SynthKind::Ar1),
            "heavy_tail" => Ok(SynthKind::HeavyTail),
            other => Err(Error::Invalid(format!("unknown synthetic corpus `{other}`"))),
        }
    }
}

/// Cycles per window available to each sine component.
const SINE_CYCLES: [f64; 4] = [1.0, 2.0, 3.0, 5.0];
const SINE_AMPLITUDES: [f64; 2] = [1.0, 0.5];
const SINE_NOISE: f64 = 0.1;
const AR_COEF: f64 = 0.9;
const AR_BURN_IN: usize = 100;
const STUDENT_DOF: f64 = 3.0;

/// Seeded synthetic windows.
///
/// * `sine_mix`: two sinusoids, each with a random phase and a frequency drawn
///   from a fixed set of cycles-per-window, plus N(0, 0.1²) noise.
/// * `ar1`: `x_t = 0.9·x_{t-1} + e_t`, `e_t ~ N(0, 1)`, after a burn-in.
/// * `heavy_tail`: the same recursion driven by Student-t(3) innovations.
pub fn synth_generate(kind: SynthKind, n: usize, len: usize, seed: u64) -> Result<Vec<TimeSeriesWindow>> {
    if n == 0 || len < 4 {
        return Err(Error::Invalid(format!(
            "synthetic corpus needs n >= 1 and T >= 4, got n={n}, T={len}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let student = StudentT::new(STUDENT_DOF).expect("positive degrees of freedom");
    let out = (0..n)
        .map(|_| {
            let values = match kind {
                SynthKind::SineMix => {
                    let comps: Vec<(f64, f64, f64)> = SINE_AMPLITUDES
                        .iter()
                        .map(|&amp| {
                            let cycles = SINE_CYCLES[rng.random_range(0..SINE_CYCLES.len())];
                            let phase = rng.random_range(0.0..std::f64::consts::TAU);
                            (amp, cycles / len as f64, phase)
                        })
                        .collect();
                    (0..len)
                        .map(|t| {
                            let noise: f64 = rng.sample(StandardNormal);
                            comps
                                .iter()
                                .map(|&(a, f, p)| a * (std::f64::consts::TAU * f * t as f64 + p).sin())
                                .sum::<f64>()
                                + SINE_NOISE * noise
                        })
                        .collect()
                }
                SynthKind::Ar1 | SynthKind::HeavyTail => {
                    let innov = |rng: &mut ChaCha8Rng| -> f64 {
                        match kind {
                            SynthKind::HeavyTail => student.sample(rng),
                            _ => rng.sample(StandardNormal),
                        }
                    };
                    let mut x = 0.0;
                    for _ in 0..AR_BURN_IN {
                        x = AR_COEF * x + innov(&mut rng);
                    }
                    (0..len)
                        .map(|_| {
                            x = AR_COEF * x + innov(&mut rng);
                            x
                        })
                        .collect()
                }
            };
            TimeSeriesWindow { values }
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn series(v: &[f64]) -> RawSeries {
        RawSeries::new(v.to_vec(), "test").unwrap()
    }

    fn windows(rows: &[&[f64]]) -> Vec<TimeSeriesWindow> {
        rows.iter()
            .map(|r| TimeSeriesWindow::new(r.to_vec()).unwrap())
            .collect()
    }

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_plain_column() {
        let f = file_with("1.0\n2.0\n3.0");
        assert_eq!(load_series(f.path(), 0).unwrap().values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn load_skips_header() {
        let f = file_with("val\n5\n5\n");
        assert_eq!(load_series(f.path(), 0).unwrap().values, vec![5.0, 5.0]);
    }

    #[test]
    fn load_reports_nan_row() {
        let f = file_with("1\n2\nnan\n4\n");
        match load_series(f.path(), 0) {
            Err(Error::NonFinite { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_delimited_columns() {
        let f = file_with("time,value\n0,1.5\n1,2.5\n");
        assert_eq!(load_series(f.path(), 1).unwrap().values, vec![1.5, 2.5]);
        let f = file_with("0\t7\n1\t8\n");
        assert_eq!(load_series(f.path(), 1).unwrap().values, vec![7.0, 8.0]);
        let f = file_with("0  7\n1 8\n");
        assert_eq!(load_series(f.path(), 1).unwrap().values, vec![7.0, 8.0]);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            load_series(Path::new("/nonexistent/series.txt"), 0),
            Err(Error::Io { .. })
        ));
        let f = file_with("a\nb\n");
        assert!(matches!(load_series(f.path(), 0), Err(Error::NoData { .. })));
    }

    #[test]
    fn sliding_windows() {
        let s = series(&[1., 2., 3., 4., 5.]);
        let w = make_windows(&s, 3, 1).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[2].values(), &[3., 4., 5.]);
        let w = make_windows(&s, 3, 2).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].values(), &[1., 2., 3.]);
        assert_eq!(w[1].values(), &[3., 4., 5.]);
        assert!(matches!(
            make_windows(&series(&[1., 2.]), 3, 1),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn zscore_examples() {
        let (out, st) = zscore_fit_apply(&windows(&[&[0., 2.]])).unwrap();
        assert_eq!(out[0].values(), &[-1., 1.]);
        assert_eq!((st.mean, st.std), (1.0, 1.0));

        assert!(matches!(
            zscore_fit_apply(&windows(&[&[5., 5., 5.]])),
            Err(Error::ZeroVariance(_))
        ));

        let (out, st) = zscore_fit_apply(&windows(&[&[1., 3.], &[1., 3.]])).unwrap();
        assert_eq!((st.mean, st.std), (2.0, 1.0));
        assert!(out.iter().all(|w| w.values() == [-1., 1.]));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ws = synth_generate(SynthKind::Ar1, 10, 8, 3).unwrap();
        let a = split(&ws, 0.2, 1).unwrap();
        assert_eq!((a.train.len(), a.eval.len()), (8, 2));
        let b = split(&ws, 0.2, 1).unwrap();
        assert_eq!(a, b);

        let c = split(&ws, 0.99, 1).unwrap();
        assert_eq!((c.train.len(), c.eval.len()), (1, 9));

        assert!(matches!(split(&ws, 0.01, 1), Err(Error::DegenerateSplit { .. })));
        assert!(split(&ws, 0.0, 1).is_err());
    }

    #[test]
    fn split_fits_norm_on_train_only() {
        let ws = synth_generate(SynthKind::SineMix, 20, 16, 9).unwrap();
        let s = split(&ws, 0.25, 4).unwrap();
        let stats = NormStats::fit(&s.train).unwrap();
        assert!(stats.mean.abs() < 1e-12);
        assert!((stats.std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synth_is_reproducible() {
        let a = synth_generate(SynthKind::SineMix, 1, 32, 42).unwrap();
        let b = synth_generate(SynthKind::SineMix, 1, 32, 42).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(SynthKind::SineMix, 1, 32, 43).unwrap();
        assert_ne!(a, c);
        assert!(synth_generate(SynthKind::Ar1, 0, 32, 1).is_err());
        assert!(synth_generate(SynthKind::Ar1, 1, 3, 1).is_err());
    }

    #[test]
    fn synth_kind_round_trips_through_text() {
        for k in [SynthKind::SineMix, SynthKind::Ar1, SynthKind::HeavyTail] {
            assert_eq!(k.to_string().parse::<SynthKind>().unwrap(), k);
        }
    }
}
