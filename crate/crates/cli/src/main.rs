//! Speech enhancement pipeline on RI spectrograms.
//!
//! Exit codes: 0 on success, 1 on usage/configuration errors, 2 on
//! runtime or numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rispec_cli::config::ExperimentConfig;
use rispec_cli::pipeline::{self, CleanSet};
use rispec_core::dataset::noise::NoiseKind;
use rispec_core::io::fmt_sig9;

#[derive(Parser)]
#[command(
    name = "rispec",
    about = "Speech enhancement on real/imaginary spectrograms",
    long_about = "Estimates clean real/imaginary spectrograms from noisy ones with a small \
                  convolutional or dense network, synthesizes enhanced waveforms, and \
                  reproduces the phase-sensitivity and objective-weighting studies.\n\n\
                  Framing drops any trailing partial frame; enhanced outputs therefore have \
                  the input length truncated to whole frames, and evaluation trims one FFT \
                  length at each signal edge where the analysis window tapers."
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Configuration file (flat `key = value` with [sections]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed; overrides the configured one. All randomness (data, init,
    /// shuffling) derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Extract features for a manifest and compute normalization statistics
    /// (on the train split only).
    Prepare,
    /// Train a model on prepared features; writes one checkpoint per epoch
    /// plus the final checkpoint and a loss log.
    Train,
    /// Enhance a noisy WAV file with a trained checkpoint.
    Enhance {
        /// Checkpoint file (defaults to <out>/checkpoint.riml).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Noisy input WAV (16-bit PCM mono).
        #[arg(long, value_name = "WAV")]
        input: PathBuf,
        /// Enhanced output WAV.
        #[arg(long, value_name = "WAV")]
        output: PathBuf,
        /// Also dump the enhanced RI spectrogram as CSV.
        #[arg(long, value_name = "CSV")]
        dump_spectrogram: Option<PathBuf>,
    },
    /// Score the test split: SSNR and LSD per utterance, per SNR level, and
    /// overall, for both the unprocessed and the enhanced signal.
    Evaluate {
        /// Checkpoint file (defaults to <out>/checkpoint.riml).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and evaluate once per beta value (alpha fixed at 1), sharing
    /// seed and data across runs.
    BetaSweep {
        /// Strictly increasing comma-separated beta grid.
        #[arg(long, default_value = "0,0.025,0.05,0.1,0.25,0.5,1.0")]
        betas: String,
    },
    /// Clean-magnitude/noisy-phase study: SSNR table and phase-agreement
    /// masks per SNR level.
    PhaseStudy {
        /// Directory of clean WAV files, or `synth:<count>` for the bundled
        /// generator.
        #[arg(long, default_value = "synth:5")]
        clean_dir: String,
        /// white, engine_like, babble_like, or file:<path>.
        #[arg(long, default_value = "white")]
        noise_kind: String,
        /// Comma-separated SNR levels in dB.
        #[arg(long, default_value = "-12,-6,0,6,12", allow_hyphen_values = true)]
        snr_levels: String,
        /// Phase agreement threshold in radians.
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
    },
    /// Print the effective configuration and exit.
    PrintConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let cfg = match load_config(&cli.global) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };

    match run(cli, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

enum RunError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn usage(e: anyhow::Error) -> RunError {
    RunError::Usage(e)
}

fn runtime(e: anyhow::Error) -> RunError {
    RunError::Runtime(e)
}

fn load_config(global: &GlobalArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_f64_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| anyhow::anyhow!("bad number '{v}': {e}"))
        })
        .collect()
}

fn run(cli: Cli, cfg: ExperimentConfig) -> Result<(), RunError> {
    let out_dir = cli.global.out.clone();
    match cli.command {
        Command::Prepare => {
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| runtime(anyhow::anyhow!("creating {}: {e}", out_dir.display())))?;
            let summary = pipeline::cmd_prepare(&cfg, &out_dir).map_err(runtime)?;
            println!(
                "prepared {} utterances ({} train frames, input dim {}, target dim {})",
                summary.utterances, summary.train_frames, summary.input_dim, summary.target_dim
            );
            Ok(())
        }
        Command::Train => {
            let summary = pipeline::cmd_train(&cfg, &out_dir).map_err(runtime)?;
            println!(
                "trained {} steps: loss {} -> {}; checkpoint {}",
                summary.steps,
                fmt_sig9(summary.first_loss),
                fmt_sig9(summary.final_loss),
                summary.checkpoint.display()
            );
            Ok(())
        }
        Command::Enhance {
            checkpoint,
            input,
            output,
            dump_spectrogram,
        } => {
            let ck = checkpoint.unwrap_or_else(|| pipeline::checkpoint_path(&out_dir));
            pipeline::cmd_enhance(&ck, &input, &output, dump_spectrogram.as_deref())
                .map_err(runtime)?;
            println!("enhanced {} -> {}", input.display(), output.display());
            Ok(())
        }
        Command::Evaluate { checkpoint } => {
            let ck = checkpoint.unwrap_or_else(|| pipeline::checkpoint_path(&out_dir));
            let summary = pipeline::cmd_evaluate(&ck, &cfg.manifest, &out_dir).map_err(runtime)?;
            println!(
                "evaluated {} rows; mean SSNR noisy {} / enhanced {}; mean LSD noisy {} / enhanced {}",
                summary.rows.len(),
                fmt_sig9(summary.mean_noisy_ssnr),
                fmt_sig9(summary.mean_enhanced_ssnr),
                fmt_sig9(summary.mean_noisy_lsd),
                fmt_sig9(summary.mean_enhanced_lsd)
            );
            Ok(())
        }
        Command::BetaSweep { betas } => {
            let grid = parse_f64_list(&betas).map_err(usage)?;
            if grid.is_empty() {
                return Err(usage(anyhow::anyhow!("beta grid is empty")));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage(anyhow::anyhow!("grid not strictly increasing")));
            }
            let rows = pipeline::cmd_beta_sweep(&cfg, &grid, &out_dir).map_err(runtime)?;
            for r in &rows {
                println!(
                    "beta {}: SSNR {} dB, LSD {} dB",
                    r.beta,
                    fmt_sig9(r.ssnr_db),
                    fmt_sig9(r.lsd_db)
                );
            }
            Ok(())
        }
        Command::PhaseStudy {
            clean_dir,
            noise_kind,
            snr_levels,
            threshold,
        } => {
            let clean_set = CleanSet::parse(&clean_dir).map_err(usage)?;
            let kind = NoiseKind::parse(&noise_kind).map_err(|e| usage(anyhow::anyhow!("{e}")))?;
            let levels = parse_f64_list(&snr_levels).map_err(usage)?;
            if levels.is_empty() {
                return Err(usage(anyhow::anyhow!("snr level list is empty")));
            }
            if threshold <= 0.0 {
                return Err(usage(anyhow::anyhow!("threshold must be > 0")));
            }
            let summary =
                pipeline::cmd_phase_study(&clean_set, &kind, &levels, threshold, &cfg, &out_dir)
                    .map_err(runtime)?;
            for (snr, ssnr_db, frac) in &summary.rows {
                println!(
                    "snr {} dB: resynthesis SSNR {} dB, phase agreement {}",
                    snr,
                    fmt_sig9(*ssnr_db),
                    fmt_sig9(*frac)
                );
            }
            Ok(())
        }
        Command::PrintConfig => {
            print!("{}", cfg.render());
            Ok(())
        }
    }
}
