use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, CommandFactory, Parser, Subcommand};
use log::{info, warn};

use grd::audio;
use grd::config::PipelineConfig;
use grd::dtw;
use grd::extract::Extractor;
use grd::fa;
use grd::features::{self, FeatureKind, FeatureMatrix};
use grd::fsutil;
use grd::gmm;
use grd::metrics;
use grd::pipeline::{self, par_map};
use grd::protocol::{self, Label};
use grd::synth::{self, SyntheticReplaySpec};
use grd::{Error, Result};

/// Graph-frequency cepstral features and replay detection toolkit.
#[derive(Parser)]
#[command(name = "grd", version)]
struct Cli {
    /// Worker threads for batch work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic parallel replay corpus.
    SynthReplay {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        n_pairs: usize,
        #[arg(long, default_value_t = 50)]
        n_eval_pairs: usize,
        #[arg(long, default_value_t = 64)]
        ir_length: usize,
        /// Noise level in dB; `inf` disables the noise.
        #[arg(long, default_value_t = 20.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 16_000)]
        sample_rate: u32,
    },
    /// Extract features from one WAV (`--in`) or a manifest of WAV paths.
    Extract {
        #[arg(long)]
        feature: FeatureKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(
            long = "in",
            conflicts_with = "manifest",
            required_unless_present = "manifest"
        )]
        input: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output file for `--in`, output directory for `--manifest`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        fa_model: Option<PathBuf>,
    },
    /// DTW-align a genuine and a replay feature file.
    Align {
        /// Genuine then replay feature file.
        #[arg(long = "in", num_args = 2, required = true)]
        input: Vec<PathBuf>,
        /// Output directory for `<stem>.aligned.feat` files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the device transformation on protocol-linked parallel pairs.
    TrainFa {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "gfcc")]
        feature: FeatureKind,
        #[arg(long)]
        protocol: PathBuf,
        /// Directory holding `<utterance_id>.wav`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train genuine and spoof GMMs from labelled feature files.
    TrainGmm {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        protocol: PathBuf,
        /// Directory holding `<utterance_id>.feat`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        gmm_genuine: PathBuf,
        #[arg(long)]
        gmm_spoof: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score feature files with a pair of class GMMs.
    Score {
        #[arg(long)]
        gmm_genuine: PathBuf,
        #[arg(long)]
        gmm_spoof: PathBuf,
        /// Utterances to score; alternatively `--manifest` of feature paths.
        #[arg(long, required_unless_present = "manifest")]
        protocol: Option<PathBuf>,
        #[arg(long, conflicts_with = "protocol")]
        manifest: Option<PathBuf>,
        /// Directory holding `<utterance_id>.feat` (with `--protocol`).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Join a score file with a protocol and report the EER.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = String::from_utf8(fsutil::read_all(path)?)
        .map_err(|_| Error::Format(format!("{}: manifest is not UTF-8", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(PathBuf::from)
        .collect())
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Invalid(format!("{}: no file name", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn feat_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.feat"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SynthReplay {
            out,
            seed,
            n_pairs,
            n_eval_pairs,
            ir_length,
            snr_db,
            sample_rate,
        } => {
            let spec = SyntheticReplaySpec {
                ir_length,
                snr_db,
                n_pairs,
                n_eval_pairs,
                sample_rate,
                seed,
            };
            let corpus = synth::generate(&spec)?;
            ensure_dir(&out)?;
            corpus.write(&out)?;
            info!("wrote {} pairs to {}", corpus.pairs.len(), out.display());
        }

        Command::Extract {
            feature,
            config,
            input,
            manifest,
            out,
            fa_model,
        } => {
            let cfg = load_config(config.as_deref(), None)?;
            let model = fa_model.as_deref().map(fa::read_model).transpose()?;
            let extractor = Extractor::new(&cfg.frontend)?;
            let one = |wav: &Path, dst: &Path| -> Result<()> {
                let sig = audio::read_wav(wav)?;
                let m = pipeline::extract_utterance(&extractor, &sig, feature, model.as_ref())?;
                features::write_features(&m, dst)
            };
            match (input, manifest) {
                (Some(wav), _) => one(&wav, &out)?,
                (None, Some(list)) => {
                    let wavs = read_manifest(&list)?;
                    ensure_dir(&out)?;
                    par_map(&wavs, |w| one(w, &feat_path(&out, &stem(w)?)))
                        .into_iter()
                        .collect::<Result<Vec<_>>>()?;
                    info!("extracted {} utterances", wavs.len());
                }
                (None, None) => unreachable!("clap requires one input"),
            }
        }

        Command::Align { input, out } => {
            let g = features::read_features(&input[0])?;
            let s = features::read_features(&input[1])?;
            let path = dtw::dtw_align(&g, &s)?;
            let (ge, se) = dtw::expand_along_path(&g, &s, &path)?;
            ensure_dir(&out)?;
            for (src, m) in [(&input[0], &ge), (&input[1], &se)] {
                features::write_features(m, out.join(format!("{}.aligned.feat", stem(src)?)))?;
            }
            info!("path length {} cost {:.6}", path.len(), path.total_cost);
        }

        Command::TrainFa {
            config,
            feature,
            protocol,
            input,
            out,
            seed,
        } => {
            let cfg = load_config(config.as_deref(), seed)?;
            if feature.is_device() {
                return Err(Error::Invalid(format!(
                    "train-fa takes a base feature (gfcc or gflc), got {feature}"
                )));
            }
            let entries = protocol::parse_protocol(&protocol)?;
            let ids = pipeline::protocol_pairs(&entries);
            if ids.is_empty() {
                return Err(Error::Invalid(
                    "protocol has no usable parallel pairs".into(),
                ));
            }
            let pairs = par_map(&ids, |(g, s)| -> Result<_> {
                Ok((
                    audio::read_wav(pipeline::wav_path(&input, g))?,
                    audio::read_wav(pipeline::wav_path(&input, s))?,
                ))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let extractor = Extractor::new(&cfg.frontend)?;
            let t = pipeline::train_fa_on_signals(&extractor, feature, &pairs, &cfg)?;
            fa::write_model(&t.model, &out)?;
            info!(
                "trained FA on {} pairs (D={}, Q={})",
                pairs.len(),
                t.model.dim(),
                t.model.rank()
            );
        }

        Command::TrainGmm {
            config,
            protocol,
            input,
            gmm_genuine,
            gmm_spoof,
            seed,
        } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let entries = protocol::parse_protocol(&protocol)?;
            let labelled = par_map(&entries, |e| -> Result<(Label, FeatureMatrix)> {
                Ok((
                    e.label,
                    features::read_features(feat_path(&input, &e.utterance_id))?,
                ))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let (g, s) = pipeline::train_class_gmms(&labelled, &cfg)?;
            gmm::write_model(&g, &gmm_genuine)?;
            gmm::write_model(&s, &gmm_spoof)?;
        }

        Command::Score {
            gmm_genuine,
            gmm_spoof,
            protocol,
            manifest,
            input,
            out,
        } => {
            let g = gmm::read_model(&gmm_genuine)?;
            let s = gmm::read_model(&gmm_spoof)?;
            let paths: Vec<(String, PathBuf)> = match (protocol, manifest) {
                (Some(p), _) => {
                    let dir = input.ok_or_else(|| {
                        Error::Invalid("--in <dir> is required with --protocol".into())
                    })?;
                    protocol::parse_protocol(&p)?
                        .into_iter()
                        .map(|e| {
                            let path = feat_path(&dir, &e.utterance_id);
                            (e.utterance_id, path)
                        })
                        .collect()
                }
                (None, Some(m)) => read_manifest(&m)?
                    .into_iter()
                    .map(|p| Ok((stem(&p)?, p)))
                    .collect::<Result<_>>()?,
                (None, None) => unreachable!("clap requires one input"),
            };
            let utts = par_map(&paths, |(id, p)| -> Result<(String, FeatureMatrix)> {
                Ok((id.clone(), features::read_features(p)?))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let scores = pipeline::score_utterances(&g, &s, &utts)?;
            fsutil::write_atomic(&out, metrics::render_scores(&scores).as_bytes())?;
        }

        Command::Eval {
            input,
            protocol,
            out,
        } => {
            let scores = metrics::read_scores(&input)?;
            let entries = protocol::parse_protocol(&protocol)?;
            let trials = metrics::join_with_protocol(&scores, &entries)?;
            let r = metrics::compute_eer(&trials)?;
            if r.eer > 0.5 {
                warn!("scores look inverted relative to the labels");
            }
            let report = r.report();
            println!("{report}");
            if let Some(path) = out {
                fsutil::write_atomic(&path, format!("{report}\n").as_bytes())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRD_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();

    if let Command::Extract {
        feature, fa_model, ..
    } = &cli.command
    {
        if feature.is_device() && fa_model.is_none() {
            Cli::command()
                .error(
                    ErrorKind::MissingRequiredArgument,
                    format!("--feature {feature} requires --fa-model <path>"),
                )
                .exit();
        }
    }

    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            warn!("could not size thread pool: {e}");
        }
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
