//! Command-line front end: one subcommand per pipeline stage, each reading
//! and writing the versioned artifact files defined in the core crate.

pub mod checks;
pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use graph2ts::dataset::{load_series, make_windows, split, synth_generate, DatasetSplit, NormStats, SynthKind};
use graph2ts::io;
use graph2ts::metrics::{evaluate, mean_acf, mean_psd, tail_stats, EvalOptions, MetricsReport, SetTails};
use graph2ts::model::{embed_windows, generate, train, TrainConfig, Variant};
use graph2ts::quantile_graph::{fit_boundaries_windows, window_graph};
use graph2ts::TimeSeriesWindow;
use log::info;

use crate::config::RunConfig;

pub const TRAIN_WINDOWS: &str = "train_windows.csv";
pub const EVAL_WINDOWS: &str = "eval_windows.csv";
pub const NORM: &str = "norm.txt";
pub const GRAPHS: &str = "eval_graphs.csv";
pub const CHECKPOINT: &str = "checkpoint.g2ts";
pub const LOSSES: &str = "losses.csv";
pub const SYNTHETIC: &str = "synthetic.csv";
pub const EMBEDDINGS: &str = "embeddings.csv";
pub const METRICS: &str = "metrics.txt";
pub const ACF: &str = "acf.csv";
pub const PSD: &str = "psd.csv";
pub const TAILSTATS: &str = "tailstats.txt";
pub const ABLATION: &str = "ablation.csv";

#[derive(Debug, Parser)]
#[command(name = "graph2ts", version, about = "Graph-conditioned time-series generation")]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for default input and output paths.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window a series (or synthesize one), z-score, and split.
    Ingest(IngestArgs),
    /// Quantile transition graphs for a window file.
    Graph(GraphArgs),
    /// Train a model and write its checkpoint and loss log.
    Train(TrainArgs),
    /// Sample synthetic windows conditioned on a graph file.
    Generate(GenerateArgs),
    /// Score synthetic windows against real ones.
    Eval(EvalArgs),
    /// Tail statistics of a window file.
    Stats(StatsArgs),
    /// Train and score the knockout grid.
    Ablate(AblateArgs),
    /// Finite-difference check of the training objective.
    Gradcheck(GradcheckArgs),
    /// Golden transition example and metric identities.
    Selfcheck,
}

#[derive(Debug, Default, Args)]
pub struct ModelFlags {
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub window_length: Option<usize>,
    #[arg(long)]
    pub num_states: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub temperature_init: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub w_align: Option<f64>,
    #[arg(long)]
    pub w_recon: Option<f64>,
    #[arg(long)]
    pub w_dist: Option<f64>,
    #[arg(long)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub kl_warmup_epochs: Option<usize>,
}

impl ModelFlags {
    fn apply(&self, c: &mut TrainConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            variant,
            window_length,
            num_states,
            embed_dim,
            hidden_dim,
            latent_dim,
            temperature_init,
            epochs,
            batch_size,
            lr,
            w_align,
            w_recon,
            w_dist,
            beta_max,
            kl_warmup_epochs
        );
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Delimited numeric text file.
    #[arg(long, conflicts_with = "synth")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<usize>,
    /// Built-in generator instead of a file: sine_mix, ar1 or heavy_tail.
    #[arg(long)]
    pub synth: Option<SynthKind>,
    /// Number of synthetic windows.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub window_length: Option<usize>,
    /// Defaults to the window length.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub eval_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Windows to turn into graphs [default: <out-dir>/eval_windows.csv]
    #[arg(long)]
    pub windows: Option<PathBuf>,
    /// Windows the boundaries are fitted on [default: <out-dir>/train_windows.csv]
    #[arg(long, conflicts_with = "boundaries")]
    pub fit: Option<PathBuf>,
    /// Reuse an existing boundaries file instead of fitting.
    #[arg(long)]
    pub boundaries: Option<PathBuf>,
    #[arg(long)]
    pub num_states: Option<usize>,
    /// [default: <out-dir>/eval_graphs.csv]; boundaries go to `<out>.boundaries`
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// [default: <out-dir>/train_windows.csv]
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// [default: <out-dir>/checkpoint.g2ts]
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// [default: <out-dir>/eval_graphs.csv]
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    #[arg(long)]
    pub n_per_graph: Option<usize>,
    /// [default: <out-dir>/synthetic.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also export time-series embeddings of the real and synthetic windows.
    #[arg(long)]
    pub embeddings: bool,
    /// Real windows to embed [default: <out-dir>/eval_windows.csv]
    #[arg(long)]
    pub real: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// [default: <out-dir>/eval_windows.csv]
    #[arg(long)]
    pub real: Option<PathBuf>,
    /// [default: <out-dir>/synthetic.csv]
    #[arg(long)]
    pub synth: Option<PathBuf>,
    #[arg(long)]
    pub max_lag: Option<usize>,
    /// Comma-separated coverage quantiles.
    #[arg(long, value_delimiter = ',')]
    pub coverage: Option<Vec<f64>>,
    /// [default: <out-dir>/metrics.txt]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// [default: <out-dir>/eval_windows.csv]
    #[arg(long)]
    pub windows: Option<PathBuf>,
    /// [default: <out-dir>/tailstats.txt]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// [default: <out-dir>/train_windows.csv]
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// [default: <out-dir>/eval_windows.csv]
    #[arg(long)]
    pub eval: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// [default: <out-dir>/ablation.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Perturb every coordinate instead of a sample per tensor.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 2048)]
    pub per_param: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    #[command(flatten)]
    pub model: ModelFlags,
}

/// Everything a subcommand needs after config and flags are merged.
struct Ctx {
    cfg: RunConfig,
    out_dir: PathBuf,
}

impl Ctx {
    fn path(&self, explicit: &Option<PathBuf>, name: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out_dir.join(name))
    }

    fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            max_lag: self.cfg.eval.max_lag,
            coverage_quantiles: self.cfg.eval.coverage_quantiles.clone(),
            seed: self.cfg.train.seed,
        }
    }
}

/// Runs one subcommand. `Ok(false)` means a check ran and failed.
pub fn run(cli: Cli) -> Result<bool> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.paths.out_dir = d.clone();
    }
    let mut ctx = Ctx {
        out_dir: cfg.paths.out_dir.clone(),
        cfg,
    };
    match cli.command {
        Command::Ingest(a) => ingest(&mut ctx, &a).map(|_| true),
        Command::Graph(a) => graph(&mut ctx, &a).map(|_| true),
        Command::Train(a) => train_cmd(&mut ctx, &a).map(|_| true),
        Command::Generate(a) => generate_cmd(&mut ctx, &a).map(|_| true),
        Command::Eval(a) => eval_cmd(&mut ctx, &a).map(|_| true),
        Command::Stats(a) => stats(&ctx, &a).map(|_| true),
        Command::Ablate(a) => ablate(&mut ctx, &a).map(|_| true),
        Command::Gradcheck(a) => {
            let mut c = ctx.cfg.train.clone();
            a.model.apply(&mut c);
            checks::gradcheck(&c, &a)
        }
        Command::Selfcheck => Ok(checks::selfcheck()),
    }
}

fn ingest(ctx: &mut Ctx, a: &IngestArgs) -> Result<()> {
    let data = &mut ctx.cfg.data;
    if let Some(p) = &a.input {
        data.input = Some(p.clone());
        data.synth = None;
    }
    if let Some(k) = a.synth {
        data.synth = Some(k);
        data.input = None;
    }
    if let Some(c) = a.column {
        data.column = c;
    }
    if let Some(n) = a.n {
        data.n = n;
    }
    if let Some(f) = a.eval_fraction {
        data.eval_fraction = f;
    }
    if let Some(t) = a.window_length {
        ctx.cfg.train.window_length = t;
    }
    let t = ctx.cfg.train.window_length;
    let seed = ctx.cfg.train.seed;
    let data = &ctx.cfg.data;

    let windows = match (&data.synth, &data.input) {
        (Some(kind), _) => synth_generate(*kind, data.n, t, seed)?,
        (None, Some(path)) => {
            let series = load_series(path, data.column)?;
            make_windows(&series, t, a.stride.unwrap_or(t))?
        }
        (None, None) => bail!("ingest needs --input or --synth (or `data.input` / `data.synth` in the config)"),
    };
    let s = split(&windows, data.eval_fraction, seed)?;
    ctx.ensure_out_dir()?;
    io::write_windows(&ctx.out_dir.join(TRAIN_WINDOWS), &s.train, t)?;
    io::write_windows(&ctx.out_dir.join(EVAL_WINDOWS), &s.eval, t)?;
    io::write_norm(&ctx.out_dir.join(NORM), &s.norm)?;
    println!(
        "ingest: {} train / {} eval windows of length {t} in {}",
        s.train.len(),
        s.eval.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".boundaries");
    PathBuf::from(s)
}

fn graph(ctx: &mut Ctx, a: &GraphArgs) -> Result<()> {
    if let Some(q) = a.num_states {
        ctx.cfg.train.num_states = q;
    }
    let (_, windows) = io::read_windows(&ctx.path(&a.windows, EVAL_WINDOWS))?;
    let bounds = match &a.boundaries {
        Some(p) => io::read_boundaries(p)?,
        None => {
            let (_, fit) = io::read_windows(&ctx.path(&a.fit, TRAIN_WINDOWS))?;
            fit_boundaries_windows(&fit, ctx.cfg.train.num_states)?
        }
    };
    let q = bounds.num_states();
    let graphs = windows
        .iter()
        .map(|w| Ok(window_graph(w.values(), &bounds)?.flatten()))
        .collect::<Result<Vec<_>>>()?;
    let out = ctx.path(&a.out, GRAPHS);
    if a.out.is_none() {
        ctx.ensure_out_dir()?;
    }
    io::write_graphs(&out, &graphs, q)?;
    io::write_boundaries(&sidecar(&out), &bounds)?;
    println!("graph: {} graphs over {q} states -> {}", graphs.len(), out.display());
    Ok(())
}

/// Training windows plus, when `eval_path` is given, held-out windows.
fn read_split(ctx: &Ctx, train_path: &Option<PathBuf>, eval_path: Option<&Option<PathBuf>>) -> Result<DatasetSplit> {
    let (t, train) = io::read_windows(&ctx.path(train_path, TRAIN_WINDOWS))?;
    let eval = if let Some(p) = eval_path {
        let eval_file = ctx.path(p, EVAL_WINDOWS);
        let (te, e) = io::read_windows(&eval_file)?;
        if te != t {
            bail!("{} has window length {te}, training windows have {t}", eval_file.display());
        }
        e
    } else {
        Vec::new()
    };
    let norm_file = ctx.out_dir.join(NORM);
    let norm = if norm_file.exists() {
        io::read_norm(&norm_file)?
    } else {
        NormStats { mean: 0.0, std: 1.0 }
    };
    Ok(DatasetSplit {
        train,
        eval,
        norm,
        window_length: t,
        stride: t,
    })
}

fn train_cmd(ctx: &mut Ctx, a: &TrainArgs) -> Result<()> {
    let data = read_split(ctx, &a.train, None)?;
    let cfg = &mut ctx.cfg.train;
    a.model.apply(cfg);
    if a.model.window_length.is_none() {
        cfg.window_length = data.window_length;
    }
    let outcome = train(cfg, &data)?;
    ctx.ensure_out_dir()?;
    io::write_checkpoint(&ctx.out_dir.join(CHECKPOINT), &outcome.model)?;
    io::write_loss_log(&ctx.out_dir.join(LOSSES), &outcome.log)?;
    let last = outcome.log.last().map_or(f64::NAN, |e| e.losses.total);
    println!(
        "train: {} epochs, final total {last:.6}, best epoch {} -> {}",
        outcome.log.len(),
        outcome.best_epoch,
        ctx.out_dir.join(CHECKPOINT).display()
    );
    Ok(())
}

fn generate_cmd(ctx: &mut Ctx, a: &GenerateArgs) -> Result<()> {
    if let Some(n) = a.n_per_graph {
        ctx.cfg.eval.n_per_graph = n;
    }
    let model = io::read_checkpoint(&ctx.path(&a.checkpoint, CHECKPOINT))?;
    let (q, graphs) = io::read_graphs(&ctx.path(&a.graphs, GRAPHS))?;
    if q != model.boundaries.num_states() {
        bail!("graph file has {q} states, the checkpoint {}", model.boundaries.num_states());
    }
    let synth = generate(&model, &graphs, ctx.cfg.eval.n_per_graph, ctx.cfg.train.seed)?;
    let out = ctx.path(&a.out, SYNTHETIC);
    if a.out.is_none() {
        ctx.ensure_out_dir()?;
    }
    io::write_windows(&out, &synth, model.config.window_length)?;
    println!("generate: {} windows -> {}", synth.len(), out.display());

    if a.embeddings {
        let (_, real) = io::read_windows(&ctx.path(&a.real, EVAL_WINDOWS))?;
        let path = sidecar_named(&out, EMBEDDINGS);
        fs::write(&path, format_embeddings(&model, &real, &synth)?)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("generate: embeddings -> {}", path.display());
    }
    Ok(())
}

fn sidecar_named(next_to: &Path, name: &str) -> PathBuf {
    next_to.parent().unwrap_or(Path::new(".")).join(name)
}

fn format_embeddings(
    model: &graph2ts::Graph2Ts,
    real: &[TimeSeriesWindow],
    synth: &[TimeSeriesWindow],
) -> Result<String> {
    let mut s = format!("# graph2ts-embeddings v1 D={}\nset", model.config.embed_dim);
    for k in 0..model.config.embed_dim {
        write!(s, ",e{k}")?;
    }
    s.push('\n');
    for (label, set) in [("real", real), ("synth", synth)] {
        if set.is_empty() {
            continue;
        }
        let e = embed_windows(model, set)?;
        for row in e.iter_rows() {
            s.push_str(label);
            for v in row {
                write!(s, ",{v:e}")?;
            }
            s.push('\n');
        }
    }
    Ok(s)
}

fn eval_cmd(ctx: &mut Ctx, a: &EvalArgs) -> Result<()> {
    if let Some(l) = a.max_lag {
        ctx.cfg.eval.max_lag = Some(l);
    }
    if let Some(c) = &a.coverage {
        ctx.cfg.eval.coverage_quantiles = c.clone();
    }
    let (tr, real) = io::read_windows(&ctx.path(&a.real, EVAL_WINDOWS))?;
    let (ts, synth) = io::read_windows(&ctx.path(&a.synth, SYNTHETIC))?;
    if tr != ts {
        bail!("real windows have length {tr}, synthetic ones {ts}");
    }
    let opts = ctx.eval_options();
    let report = evaluate(&real, &synth, &opts)?;
    let out = ctx.path(&a.out, METRICS);
    if a.out.is_none() {
        ctx.ensure_out_dir()?;
    }
    io::write_metrics(&out, &report)?;

    let max_lag = opts.max_lag.unwrap_or(tr / 2);
    let dir = out.parent().unwrap_or(Path::new("."));
    fs::write(dir.join(ACF), format_acf(&real, &synth, max_lag)?)?;
    fs::write(dir.join(PSD), format_psd(&real, &synth)?)?;
    print!("{}", summary(&report));
    info!("metrics -> {}", out.display());
    Ok(())
}

fn format_acf(real: &[TimeSeriesWindow], synth: &[TimeSeriesWindow], max_lag: usize) -> Result<String> {
    let r = mean_acf(real, max_lag)?;
    let s = mean_acf(synth, max_lag)?;
    let mut out = String::from("# graph2ts-acf v1\nlag,real,synth\n");
    for (k, (a, b)) in r.iter().zip(&s).enumerate() {
        writeln!(out, "{},{a:e},{b:e}", k + 1)?;
    }
    Ok(out)
}

fn format_psd(real: &[TimeSeriesWindow], synth: &[TimeSeriesWindow]) -> Result<String> {
    let r = mean_psd(real)?;
    let s = mean_psd(synth)?;
    let n = real.first().map_or(0, |w| w.len());
    let mut out = String::from("# graph2ts-psd v1\nbin,frequency,real,synth\n");
    for (k, (a, b)) in r.iter().zip(&s).enumerate() {
        writeln!(out, "{k},{:e},{a:e},{b:e}", k as f64 / n as f64)?;
    }
    Ok(out)
}

fn summary(r: &MetricsReport) -> String {
    let mut s = format!(
        "n={} wasserstein={:.4} ks={:.4} acf_mae={:.4} psd_l2={:.4} proto_err={:.4}/{:.4} mdr={:.4}",
        r.n, r.wasserstein, r.ks, r.acf_mae, r.psd_l2, r.proto_err_avg, r.proto_err_med, r.mdr
    );
    for (q, c) in &r.coverage {
        let _ = write!(s, " coverage@{q}={c:.4}");
    }
    s.push('\n');
    s
}

fn stats(ctx: &Ctx, a: &StatsArgs) -> Result<()> {
    let (_, windows) = io::read_windows(&ctx.path(&a.windows, EVAL_WINDOWS))?;
    let (x, dx) = tail_stats(&windows)?;
    let tails = SetTails { x, dx };
    let out = ctx.path(&a.out, TAILSTATS);
    if a.out.is_none() {
        ctx.ensure_out_dir()?;
    }
    io::write_tail_stats(&out, &tails)?;
    print!("{}", io::format_tail_stats(&tails));
    Ok(())
}

/// The knockout grid: each row changes one thing relative to `base`.
pub fn ablation_grid(base: &TrainConfig) -> Vec<(&'static str, TrainConfig)> {
    vec![
        ("full", base.clone()),
        ("no_graph", TrainConfig { variant: Variant::NoGraph, ..base.clone() }),
        ("deterministic", TrainConfig { variant: Variant::Deterministic, ..base.clone() }),
        ("w_recon=0", TrainConfig { w_recon: 0.0, ..base.clone() }),
        ("w_align=0", TrainConfig { w_align: 0.0, ..base.clone() }),
        ("w_dist=0", TrainConfig { w_dist: 0.0, ..base.clone() }),
        ("beta_max=0", TrainConfig { beta_max: 0.0, ..base.clone() }),
    ]
}

fn ablate(ctx: &mut Ctx, a: &AblateArgs) -> Result<()> {
    let data = read_split(ctx, &a.train, Some(&a.eval))?;
    if data.eval.is_empty() {
        bail!("ablation needs held-out windows to score against");
    }
    let base = &mut ctx.cfg.train;
    a.model.apply(base);
    base.variant = Variant::Full;
    if a.model.window_length.is_none() {
        base.window_length = data.window_length;
    }
    let base = base.clone();
    let opts = ctx.eval_options();
    let mut rows = Vec::new();
    for (name, cfg) in ablation_grid(&base) {
        info!("ablate: training {name}");
        let outcome = train(&cfg, &data)?;
        let model = &outcome.model;
        let graphs = data
            .eval
            .iter()
            .map(|w| Ok(window_graph(w.values(), &model.boundaries)?.flatten()))
            .collect::<Result<Vec<_>>>()?;
        let synth = generate(model, &graphs, ctx.cfg.eval.n_per_graph, cfg.seed)?;
        rows.push((name, evaluate(&data.eval, &synth, &opts)?));
    }
    let table = format_ablation(&rows);
    let out = ctx.path(&a.out, ABLATION);
    if a.out.is_none() {
        ctx.ensure_out_dir()?;
    }
    fs::write(&out, &table).with_context(|| format!("writing {}", out.display()))?;
    print!("{}", align_table(&table));
    Ok(())
}

pub fn format_ablation(rows: &[(&str, MetricsReport)]) -> String {
    let mut s = String::from("# graph2ts-ablation v1\nconfig,n,wasserstein,ks,acf_mae,psd_l2,proto_err_avg,proto_err_med,mdr");
    if let Some((_, r)) = rows.first() {
        for (q, _) in &r.coverage {
            let _ = write!(s, ",coverage_{q}");
        }
    }
    s.push('\n');
    for (name, r) in rows {
        let _ = write!(
            s,
            "{name},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.n, r.wasserstein, r.ks, r.acf_mae, r.psd_l2, r.proto_err_avg, r.proto_err_med, r.mdr
        );
        for (_, c) in &r.coverage {
            let _ = write!(s, ",{c:e}");
        }
        s.push('\n');
    }
    s
}

/// Space-aligned rendering of the CSV body for the terminal.
fn align_table(csv: &str) -> String {
    let rows: Vec<Vec<String>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|c| match c.parse::<f64>() {
                    Ok(v) if c.contains('e') => format!("{v:.4}"),
                    _ => c.to_string(),
                })
                .collect()
        })
        .collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in &rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(c, v)| format!("{v:>w$}", w = width[c])).collect();
        s.push_str(cells.join("  ").trim_end());
        s.push('\n');
    }
    s
}
