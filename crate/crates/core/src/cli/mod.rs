//! Command-line front end: stage-wise subcommands, the full pipeline, and
//! the patch-size sweep.

mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

use crate::evalmap::{score, ChangeMap, MetricsReport};
use crate::imagery::{load_pgm, log_ratio, save_pgm, Raster};
use crate::network::{load_checkpoint, save_checkpoint, Mode};
use crate::preclassify::{draw_samples, hierarchical_trimap, TriMap};
use crate::synthgen::{generate, SceneSpec};
use crate::trainer::{infer_map, train};

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Input = 2,
    Preclassify = 3,
    Training = 4,
    Io = 5,
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub code: ExitCode,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: ExitCode, stage: &'static str, err: impl std::fmt::Display) -> Self {
        Self { code, stage, message: err.to_string() }
    }
}

type CliResult<T> = Result<T, CliError>;

pub const DI_FILE: &str = "di.pgm";
pub const TRIMAP_FILE: &str = "trimap.pgm";
pub const MODEL_FILE: &str = "model.bin";
pub const CHANGEMAP_FILE: &str = "changemap.pgm";
pub const METRICS_FILE: &str = "metrics.txt";
pub const TRAIN_LOG_FILE: &str = "train.log";

#[derive(Debug, Parser)]
#[command(name = "ddnet", version, about = "Unsupervised SAR change detection with a dual-domain network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Patch size (odd).
    #[arg(long, global = true)]
    r: Option<usize>,
    /// both, no-dct, no-mrc or plain-cnn.
    #[arg(long, global = true)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    batch: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// Repeat for more detail; -v prints the effective configuration.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Args)]
struct Images {
    #[arg(long)]
    image1: Option<PathBuf>,
    #[arg(long)]
    image2: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic scene: i1.pgm, i2.pgm, truth.pgm.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Difference image and tri-map: di.pgm, trimap.pgm.
    Preclassify {
        #[command(flatten)]
        images: Images,
        #[command(flatten)]
        common: Common,
    },
    /// Train on pseudo-labels from a tri-map: model.bin, train.log.
    Train {
        #[command(flatten)]
        images: Images,
        /// Defaults to <out>/trimap.pgm.
        #[arg(long)]
        trimap: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify intermediate pixels: changemap.pgm.
    Infer {
        #[command(flatten)]
        images: Images,
        /// Defaults to <out>/trimap.pgm.
        #[arg(long)]
        trimap: Option<PathBuf>,
        /// Defaults to <out>/model.bin.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a change map against ground truth; writes metrics.txt when --out is given.
    Eval {
        /// Defaults to <out>/changemap.pgm.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// The whole pipeline from two images to a change map.
    Run {
        #[command(flatten)]
        images: Images,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// `run` once per patch size, into <out>/r<N>; prints `r PCC KC` rows.
    Sweep {
        #[command(flatten)]
        images: Images,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "5,7,9,11,13,15")]
        r_list: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
}

/// Parses arguments, runs the command, reports errors on standard error and
/// returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Input as i32 } else { ExitCode::Ok as i32 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::Ok as i32,
        Err(e) => {
            eprintln!("error in {e}");
            e.code as i32
        }
    }
}

fn resolve(common: &Common, images: Option<&Images>, truth: Option<&PathBuf>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::new(ExitCode::Input, "config", format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| CliError::new(ExitCode::Input, "config", format!("{}: {e}", path.display())))?;
    }
    let t = &mut cfg.train;
    if let Some(v) = common.seed {
        t.seed = v;
    }
    if let Some(v) = common.r {
        t.r = v;
    }
    if let Some(v) = common.mode {
        t.mode = v;
    }
    if let Some(v) = common.epochs {
        t.epochs = v;
    }
    if let Some(v) = common.batch {
        t.batch_size = v;
    }
    if let Some(v) = common.lr {
        t.lr = v;
    }
    if let Some(v) = &common.out {
        cfg.out = v.clone();
    }
    if let Some(images) = images {
        if let Some(p) = &images.image1 {
            cfg.image1 = Some(p.clone());
        }
        if let Some(p) = &images.image2 {
            cfg.image2 = Some(p.clone());
        }
    }
    if let Some(p) = truth {
        cfg.ground_truth = Some(p.clone());
    }
    cfg.verbosity = cfg.verbosity.max(common.verbose);
    cfg.train.validate().map_err(|e| CliError::new(ExitCode::Input, "config", e))?;
    eprintln!("seed = {}", cfg.train.seed);
    if cfg.verbosity >= 1 {
        eprint!("{}", cfg.to_text());
    }
    Ok(cfg)
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Synth { common } => cmd_synth(&resolve(&common, None, None)?),
        Command::Preclassify { images, common } => cmd_preclassify(&resolve(&common, Some(&images), None)?),
        Command::Train { images, trimap, common } => {
            let cfg = resolve(&common, Some(&images), None)?;
            let trimap = trimap.unwrap_or_else(|| cfg.out.join(TRIMAP_FILE));
            cmd_train(&cfg, &trimap)
        }
        Command::Infer { images, trimap, model, common } => {
            let cfg = resolve(&common, Some(&images), None)?;
            let trimap = trimap.unwrap_or_else(|| cfg.out.join(TRIMAP_FILE));
            let model = model.unwrap_or_else(|| cfg.out.join(MODEL_FILE));
            cmd_infer(&cfg, &trimap, &model)
        }
        Command::Eval { map, truth, common } => {
            let write = common.out.is_some();
            let cfg = resolve(&common, None, truth.as_ref())?;
            let map = map.unwrap_or_else(|| cfg.out.join(CHANGEMAP_FILE));
            let report = cmd_eval(&cfg, &map, write)?;
            print!("{report}");
            Ok(())
        }
        Command::Run { images, truth, common } => {
            let cfg = resolve(&common, Some(&images), truth.as_ref())?;
            if let Some(m) = cmd_run(&cfg)? {
                println!("FP FN OE PCC KC\n{}", m.to_line());
            }
            Ok(())
        }
        Command::Sweep { images, truth, r_list, common } => {
            let cfg = resolve(&common, Some(&images), truth.as_ref())?;
            let rows = cmd_sweep(&cfg, &r_list)?;
            print!("{rows}");
            Ok(())
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, name: &str) -> CliResult<&'a Path> {
    p.as_deref().ok_or_else(|| CliError::new(ExitCode::Input, "input", format!("missing --{name}")))
}

fn input_paths(cfg: &RunConfig) -> CliResult<(&Path, &Path)> {
    Ok((required(&cfg.image1, "image1")?, required(&cfg.image2, "image2")?))
}

fn load_input(path: &Path) -> CliResult<Raster> {
    load_pgm(path).map_err(|e| CliError::new(ExitCode::Input, "input", e))
}

fn load_images(cfg: &RunConfig) -> CliResult<(Raster, Raster)> {
    let (a, b) = input_paths(cfg)?;
    let (i1, i2) = (load_input(a)?, load_input(b)?);
    if !i1.same_geometry(&i2) {
        return Err(CliError::new(
            ExitCode::Input,
            "input",
            format!("images differ in size: {}x{} vs {}x{}", i1.width(), i1.height(), i2.width(), i2.height()),
        ));
    }
    Ok((i1, i2))
}

fn load_trimap(path: &Path) -> CliResult<TriMap> {
    TriMap::from_raster(&load_input(path)?)
        .map_err(|e| CliError::new(ExitCode::Input, "input", format!("{}: {e}", path.display())))
}

fn ensure_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::new(ExitCode::Io, "output", format!("{}: {e}", dir.display())))
}

fn write_raster(raster: &Raster, path: PathBuf) -> CliResult<()> {
    save_pgm(raster, &path).map_err(|e| CliError::new(ExitCode::Io, "output", e))
}

fn write_text(text: &str, path: PathBuf) -> CliResult<()> {
    fs::write(&path, text).map_err(|e| CliError::new(ExitCode::Io, "output", format!("{}: {e}", path.display())))
}

pub fn cmd_synth(cfg: &RunConfig) -> CliResult<()> {
    let (i1, i2, truth) =
        generate(&SceneSpec::default_scene(cfg.train.seed)).map_err(|e| CliError::new(ExitCode::Input, "synth", e))?;
    ensure_out(&cfg.out)?;
    write_raster(&i1, cfg.out.join("i1.pgm"))?;
    write_raster(&i2, cfg.out.join("i2.pgm"))?;
    write_raster(&truth.to_raster(), cfg.out.join("truth.pgm"))
}

fn preclassify_stage(i1: &Raster, i2: &Raster, out: &Path) -> CliResult<TriMap> {
    let di = log_ratio(i1, i2).map_err(|e| CliError::new(ExitCode::Input, "preclassify", e))?;
    let trimap = hierarchical_trimap(&di).map_err(|e| CliError::new(ExitCode::Preclassify, "preclassify", e))?;
    ensure_out(out)?;
    write_raster(&di.to_raster(), out.join(DI_FILE))?;
    write_raster(&trimap.to_raster(), out.join(TRIMAP_FILE))?;
    Ok(trimap)
}

fn train_stage(cfg: &RunConfig, i1: &Raster, i2: &Raster, trimap: &TriMap) -> CliResult<crate::network::ModelParams> {
    let t = &cfg.train;
    let samples = draw_samples(trimap, i1, i2, t.r, t.sample_fraction, t.seed)
        .map_err(|e| CliError::new(ExitCode::Preclassify, "sampling", e))?;
    if cfg.verbosity >= 1 {
        eprintln!("{} training patches", samples.len());
    }
    let (params, report) = train(&samples, t).map_err(|e| CliError::new(ExitCode::Training, "training", e))?;
    if cfg.verbosity >= 2 {
        eprintln!("trained in {:.2?}", report.wall_time);
    }
    ensure_out(&cfg.out)?;
    save_checkpoint(&params, cfg.out.join(MODEL_FILE)).map_err(|e| CliError::new(ExitCode::Io, "output", e))?;
    write_text(&report.to_log(), cfg.out.join(TRAIN_LOG_FILE))?;
    Ok(params)
}

fn infer_stage(
    cfg: &RunConfig,
    i1: &Raster,
    i2: &Raster,
    trimap: &TriMap,
    params: &crate::network::ModelParams,
) -> CliResult<ChangeMap> {
    let map = infer_map(i1, i2, trimap, params).map_err(|e| CliError::new(ExitCode::Training, "inference", e))?;
    ensure_out(&cfg.out)?;
    write_raster(&map.to_raster(), cfg.out.join(CHANGEMAP_FILE))?;
    Ok(map)
}

fn eval_stage(map: &ChangeMap, truth_path: &Path, out: Option<&Path>) -> CliResult<MetricsReport> {
    let truth = ChangeMap::from_raster(&load_input(truth_path)?);
    let report = score(map, &truth).map_err(|e| CliError::new(ExitCode::Input, "eval", e))?;
    if let Some(dir) = out {
        ensure_out(dir)?;
        write_text(&report.to_kv_block(), dir.join(METRICS_FILE))?;
    }
    Ok(report)
}

pub fn cmd_preclassify(cfg: &RunConfig) -> CliResult<()> {
    let (i1, i2) = load_images(cfg)?;
    preclassify_stage(&i1, &i2, &cfg.out).map(|_| ())
}

pub fn cmd_train(cfg: &RunConfig, trimap: &Path) -> CliResult<()> {
    let (i1, i2) = load_images(cfg)?;
    let trimap = load_trimap(trimap)?;
    train_stage(cfg, &i1, &i2, &trimap).map(|_| ())
}

pub fn cmd_infer(cfg: &RunConfig, trimap: &Path, model: &Path) -> CliResult<()> {
    let (i1, i2) = load_images(cfg)?;
    let trimap = load_trimap(trimap)?;
    let params = load_checkpoint(model).map_err(|e| CliError::new(ExitCode::Input, "input", e))?;
    infer_stage(cfg, &i1, &i2, &trimap, &params).map(|_| ())
}

pub fn cmd_eval(cfg: &RunConfig, map: &Path, write: bool) -> CliResult<MetricsReport> {
    let truth =
        cfg.ground_truth.as_deref().ok_or_else(|| CliError::new(ExitCode::Input, "input", "missing --truth"))?;
    let map = ChangeMap::from_raster(&load_input(map)?);
    eval_stage(&map, truth, write.then_some(cfg.out.as_path()))
}

/// Full pipeline; returns metrics when ground truth is configured.
pub fn cmd_run(cfg: &RunConfig) -> CliResult<Option<MetricsReport>> {
    let (i1, i2) = load_images(cfg)?;
    if let Some(truth) = &cfg.ground_truth {
        if !truth.is_file() {
            return Err(CliError::new(ExitCode::Input, "input", format!("{}: no such file", truth.display())));
        }
    }
    let trimap = preclassify_stage(&i1, &i2, &cfg.out)?;
    let params = train_stage(cfg, &i1, &i2, &trimap)?;
    let map = infer_stage(cfg, &i1, &i2, &trimap, &params)?;
    cfg.ground_truth.as_deref().map(|t| eval_stage(&map, t, Some(&cfg.out))).transpose()
}

/// One `run` per patch size (ascending) into `<out>/r<N>`. A failing size
/// is reported and skipped; the first failure is returned after the rest
/// have run.
pub fn cmd_sweep(cfg: &RunConfig, r_list: &[usize]) -> CliResult<String> {
    if cfg.ground_truth.is_none() {
        return Err(CliError::new(ExitCode::Input, "input", "sweep needs --truth"));
    }
    let mut sizes = r_list.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let mut table = String::from("r PCC KC\n");
    let mut first_err = None;
    for r in sizes {
        let mut run_cfg = cfg.clone();
        run_cfg.train.r = r;
        run_cfg.out = cfg.out.join(format!("r{r}"));
        let result = run_cfg
            .train
            .validate()
            .map_err(|e| CliError::new(ExitCode::Input, "config", e))
            .and_then(|_| cmd_run(&run_cfg));
        match result {
            Ok(Some(m)) => {
                let row = format!("{r} {:.4} {:.4}\n", m.pcc, m.kc);
                if cfg.verbosity >= 1 {
                    eprint!("{row}");
                }
                table.push_str(&row);
            }
            Ok(None) => unreachable!("ground truth checked above"),
            Err(e) => {
                eprintln!("r = {r} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    ensure_out(&cfg.out)?;
    write_text(&table, cfg.out.join("sweep.txt"))?;
    match first_err {
        Some(e) => {
            print!("{table}");
            Err(e)
        }
        None => Ok(table),
    }
}
