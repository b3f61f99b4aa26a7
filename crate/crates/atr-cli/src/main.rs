//! `atr` — train, evaluate and apply action-recognition models built from
//! 3-D joint and object trajectories.
//!
//! Exit codes: 0 success, 1 runtime failure (bad data, missing file,
//! corrupt bundle), 2 command-line or configuration error (clap's
//! convention). Diagnostics go to stderr; results go to stdout or
//! `--report-out`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use atr_core::bundle::{load_model, save_model};
use atr_core::config::{load_config, PipelineConfig};
use atr_core::dataio::{format_info, load_dataset, load_generic_csv, load_manifest, write_dataset};
use atr_core::eval::run_protocol;
use atr_core::pipeline::{choose_wavelet, prepare_all, train_model, PipelineSettings};
use atr_core::synth::{generate, SynthSpec};

#[derive(Parser)]
#[command(name = "atr", version, about = "Action recognition from 3-D joint/object trajectories")]
struct Cli {
    /// Pipeline configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker-thread count (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Write the primary result here instead of stdout.
    #[arg(long, global = true)]
    report_out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a dataset manifest and save it as a bundle.
    Train {
        /// Dataset manifest (TOML).
        manifest: PathBuf,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a cross-validation protocol and report metrics.
    Eval {
        manifest: PathBuf,
        /// Emit the report as JSON instead of an aligned text table.
        #[arg(long)]
        json: bool,
    },
    /// Classify one sequence file with a saved model bundle.
    Predict {
        /// Model bundle directory.
        bundle: PathBuf,
        /// Sequence file (generic-csv).
        sequence: PathBuf,
    },
    /// Generate a synthetic dataset (generic-csv files + manifest).
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 5)]
        subjects: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 0.8)]
        speed_min: f64,
        #[arg(long, default_value_t = 1.25)]
        speed_max: f64,
        /// Mirror a random half of the samples left/right.
        #[arg(long)]
        handed: bool,
    },
    /// Show a bundle's template shapes and feature dimension.
    Inspect {
        bundle: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => load_config(path).with_context(|| format!("reading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.report_out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn settings_for(
    config: &PipelineConfig,
    manifest: &atr_core::dataio::DatasetManifest,
    sequences: &[atr_core::RawSequence],
) -> Result<PipelineSettings> {
    let joints = sequences
        .first()
        .and_then(|s| s.frames.first())
        .map(|f| f.joint_positions.len())
        .unwrap_or(0);
    let info = format_info(manifest.format, joints);
    Ok(PipelineSettings::from_config(config, info.reference, info.symmetry)?)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train { manifest, out } => {
            let config = load_effective_config(cli)?;
            let (manifest, base) = load_manifest(manifest)?;
            let sequences = load_dataset(&manifest, &base)?;
            eprintln!("loaded {} sequences", sequences.len());
            let settings = settings_for(&config, &manifest, &sequences)?;
            let samples = prepare_all(&sequences, &settings)?;
            let wavelet =
                choose_wavelet(&samples, &settings, config.wavelet.spec()?, config.wavelet.autotune)?;
            eprintln!("wavelet: {wavelet:?}");
            let model = train_model(&samples, &settings, wavelet)?;
            save_model(&model, out)?;
            eprintln!(
                "saved bundle to {} ({} classes, {} features)",
                out.display(),
                model.class_count,
                model.feature_dimension()
            );
            Ok(())
        }
        Command::Eval { manifest, json } => {
            let config = load_effective_config(cli)?;
            let (manifest, base) = load_manifest(manifest)?;
            let sequences = load_dataset(&manifest, &base)?;
            eprintln!("loaded {} sequences", sequences.len());
            let settings = settings_for(&config, &manifest, &sequences)?;
            let report = run_protocol(&sequences, &settings, &config)?;
            let text = if *json {
                serde_json::to_string_pretty(&report)? + "\n"
            } else {
                report.render_text()
            };
            emit(cli, &text)
        }
        Command::Predict { bundle, sequence } => {
            let model = load_model(bundle)?;
            let seq = load_generic_csv(sequence)?;
            let sample = atr_core::pipeline::prepare(&seq, &model.settings)?;
            let label = model.predict_sample(&sample)?;
            let votes = model.forest.predict_proba(&model.features(&sample)?)?;
            let mut text = format!("label: {label}\n");
            for (i, v) in votes.iter().enumerate() {
                text.push_str(&format!("class {}: {:.4}\n", model.forest.class_labels[i], v));
            }
            emit(cli, &text)
        }
        Command::Synth {
            out,
            classes,
            subjects,
            reps,
            sigma,
            speed_min,
            speed_max,
            handed,
        } => {
            let spec = SynthSpec {
                n_classes: *classes,
                n_subjects: *subjects,
                reps: *reps,
                noise_sigma: *sigma,
                speed_range: (*speed_min, *speed_max),
                handed: *handed,
                seed: cli.seed.unwrap_or(SynthSpec::default().seed),
                ..SynthSpec::default()
            };
            let sequences = generate(&spec)?;
            let names: Vec<String> = (1..=*classes).map(|c| format!("class-{c}")).collect();
            let manifest_path = write_dataset(&sequences, out, &names)?;
            eprintln!("wrote {} sequences", sequences.len());
            println!("{}", manifest_path.display());
            Ok(())
        }
        Command::Inspect { bundle } => {
            let model = load_model(bundle)?;
            let mut text = String::new();
            text.push_str(&format!(
                "classes: {}\nwavelet: {:?}\nfeature dimension: {}\ntrees: {}\n",
                model.class_count,
                model.wavelet,
                model.feature_dimension(),
                model.forest.trees.len()
            ));
            text.push_str("templates (label, sub-signals, length):\n");
            for t in model.templates.all() {
                let len = t.sub_signals.first().map_or(0, |s| s.len());
                text.push_str(&format!(
                    "  {} x{} len {}\n",
                    t.class_label,
                    t.sub_signals.len(),
                    len
                ));
            }
            emit(cli, &text)
        }
    }
}
