use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use attloc::cli::{cmd_eval, cmd_gradcheck, cmd_localize, cmd_synth, cmd_train, GRADCHECK_TOLERANCE};
use attloc::config::RunConfig;
use attloc::model::ModelMode;
use attloc::train::DEFAULT_EPS;
use attloc::{Error, Result};

#[derive(Parser)]
#[command(name = "attloc", version, about = "Weakly supervised audio tagging with attention and localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Baseline,
    Attloc,
}

impl From<Mode> for ModelMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Baseline => ModelMode::Baseline,
            Mode::Attloc => ModelMode::AttLoc,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus: WAVs, manifest.csv and truth.csv.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        chunks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        snr_db: f64,
        /// Also write train.csv / val.csv, holding out the last N chunks.
        #[arg(long, default_value_t = 0)]
        val_chunks: usize,
    },
    /// Train a model and write the best checkpoint plus a training-log CSV.
    Train {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        val_manifest: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// key=value file; command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Training-log CSV (default: checkpoint path with .log.csv).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override any config key, e.g. `--set learning_rate=5e-4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Per-tag EER table (`tag,eer` plus `ave`) of a checkpoint on a manifest.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Ground-truth intervals; adds the mean localization AUC to the log.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-frame attention, localization and tag outputs for one WAV file.
    Localize {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        frames: usize,
        /// Check one mode only (default: both).
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { out, chunks, seed, snr_db, val_chunks } => {
            let s = cmd_synth(&out, chunks, seed, snr_db, val_chunks)?;
            println!("{} chunks, {} event intervals -> {}", s.chunks, s.intervals, s.manifest.display());
        }
        Command::Train { manifest, val_manifest, mode, config, out, log, epochs, batch_size, seed, overrides } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            for pair in &overrides {
                cfg.set_pair(pair)?;
            }
            if let Some(m) = mode {
                cfg.mode = m.into();
            }
            cfg.manifest = manifest.or(cfg.manifest);
            cfg.val_manifest = val_manifest.or(cfg.val_manifest);
            cfg.out = out.or(cfg.out);
            cfg.log = log.or(cfg.log);
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(b) = batch_size {
                cfg.train.batch_size = b;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            let outcome = cmd_train(&cfg)?;
            let best = &outcome.log[outcome.best_epoch];
            println!(
                "best epoch {} val_loss {:.6} val_eer_avg {}",
                outcome.best_epoch,
                best.val_loss,
                best.val_eer_avg.map_or_else(|| "nan".into(), |v| format!("{v:.6}"))
            );
        }
        Command::Eval { ckpt, manifest, truth, out } => {
            let report = cmd_eval(&ckpt, &manifest, truth.as_deref())?;
            match out {
                Some(p) => write_file(&p, &report.csv)?,
                None => print!("{}", report.csv),
            }
            if let Some(auc) = report.localization_auc {
                eprintln!("mean localization AUC {auc:.6}");
            }
        }
        Command::Localize { ckpt, wav, out } => {
            write_file(&out, &cmd_localize(&ckpt, &wav)?)?;
        }
        Command::Gradcheck { seed, frames, mode, eps } => {
            let modes = match mode {
                Some(m) => vec![m.into()],
                None => vec![ModelMode::AttLoc, ModelMode::Baseline],
            };
            let mut worst = 0.0f64;
            for m in modes {
                let r = cmd_gradcheck(seed, frames, m, eps)?;
                println!(
                    "{m}: max relative error {:.3e} at {}[{}] ({} coordinates, {} skipped at kinks)",
                    r.max_rel_err, r.worst_tensor, r.worst_index, r.coordinates, r.skipped
                );
                worst = worst.max(r.max_rel_err);
            }
            if !(worst < GRADCHECK_TOLERANCE) {
                return Err(Error::Numeric(format!(
                    "max relative error {worst:.3e} >= {GRADCHECK_TOLERANCE:e}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
