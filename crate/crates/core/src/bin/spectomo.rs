use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use spectomo::blueprint::write_blueprints_csv;
use spectomo::geoloc::{write_localization_csv, AnchorMode};
use spectomo::harness::{overhead_report, run_experiment, write_overhead_csv, ExperimentConfig, OverheadParams};
use spectomo::hod::LatentModel;
use spectomo::model::Topology;
use spectomo::pipeline::{self, ChannelBlueprint, PipelineParams};
use spectomo::sched::{write_metrics_csv, EpisodeKey, Policy};
use spectomo::tomography::{write_access_vectors_csv, write_pairwise_csv, TomographyResult};
use spectomo::{Error, Result};

#[derive(Parser)]
#[command(name = "spectomo", version, about = "Spectrum tomography toolkit")]
struct Cli {
    /// Experiment seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JSON config: pipeline parameters, or an experiment config for `eval`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    AllClients,
    RepresentativesOnly,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a topology.
    Gen {
        #[arg(long)]
        clients: Option<usize>,
        #[arg(long)]
        hts: Option<usize>,
        #[arg(long)]
        channels: Option<usize>,
    },
    /// Measure first-order and pairwise access statistics.
    Measure {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        clusters: Option<usize>,
    },
    /// Fit one latent model per channel.
    Fit {
        #[arg(long)]
        tomography: PathBuf,
        #[arg(long)]
        alphabet: Option<usize>,
    },
    /// Infer hidden terminals from fitted models.
    Blueprint {
        #[arg(long)]
        models: PathBuf,
    },
    /// Localize inferred hidden terminals.
    Localize {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        blueprints: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Run one scheduling episode.
    Schedule {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, default_value = "sp")]
        policy: String,
        #[arg(long)]
        frames: Option<u64>,
        #[arg(long)]
        antennas: Option<usize>,
    },
    /// Run an experiment config end to end.
    Eval,
    /// Print measurement overhead counts.
    Overhead {
        #[arg(long, default_value_t = 1)]
        channels: u64,
        #[arg(long, default_value_t = 20)]
        clients: u64,
        #[arg(long)]
        clusters: Option<u64>,
        #[arg(long, default_value_t = 1)]
        antennas: u64,
        #[arg(long, default_value_t = 1000)]
        frames: u64,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn pipeline_params(cli: &Cli) -> Result<PipelineParams> {
    match &cli.config {
        Some(p) => read_json(p),
        None => Ok(PipelineParams::default()),
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::Eval => {
            let path = cli.config.as_ref().ok_or_else(|| Error::InvalidParameter("eval needs --config".into()))?;
            let mut cfg = ExperimentConfig::load(path)?;
            if cli.seed != 0 {
                cfg.seeds = vec![cli.seed];
            }
            if let Some(out) = &cli.out {
                cfg.out_dir = Some(out.clone());
            }
            let (manifest, summary) = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string(&serde_json::json!({
                "status": manifest.status,
                "failures": manifest.failures.len(),
                "summary_rows": summary.rows.len(),
            }))?);
        }
        Cmd::Overhead { channels, clients, clusters, antennas, frames } => {
            let p = OverheadParams {
                channels: *channels,
                clients: *clients,
                clusters: clusters.unwrap_or_else(|| (clients / channels.max(&1)).max(2).min(*clients)),
                antennas: *antennas,
                frames: *frames,
            };
            let r = overhead_report(&p)?;
            if let Some(out) = &cli.out {
                fs::create_dir_all(out)?;
                write_overhead_csv(&[r], fs::File::create(out.join("overhead.csv"))?)?;
            }
            println!("{}", serde_json::to_string(&r)?);
        }
        Cmd::Gen { clients, hts, channels } => {
            let mut p = pipeline_params(&cli)?;
            if let Some(n) = clients {
                p.topology.num_clients = *n;
            }
            if let Some(h) = hts {
                p.topology.num_hts = *h;
            }
            if let Some(c) = channels {
                p.topology.num_channels = *c;
            }
            let t = pipeline::topology(&p, seed)?;
            t.save(&out_dir(&cli)?.join("topology.json"))?;
        }
        Cmd::Measure { topology, frames, clusters } => {
            let mut p = pipeline_params(&cli)?;
            if let Some(f) = frames {
                p.tomography.frames_per_sample = *f;
            }
            if clusters.is_some() {
                p.tomography.k = *clusters;
            }
            let t = Topology::load(topology)?;
            let r = pipeline::measure(&t, &p, seed)?;
            let dir = out_dir(&cli)?;
            write_json(&dir.join("tomography.json"), &r)?;
            fs::write(dir.join("clustering.json"), r.clustering.to_json()?)?;
            write_access_vectors_csv(&r.vectors, fs::File::create(dir.join("access_vectors.csv"))?)?;
            write_pairwise_csv(&r.pairwise, fs::File::create(dir.join("pairwise.csv"))?)?;
        }
        Cmd::Fit { tomography, alphabet } => {
            let mut p = pipeline_params(&cli)?;
            if alphabet.is_some() {
                p.alphabet = *alphabet;
            }
            let r: TomographyResult = read_json(tomography)?;
            let models = pipeline::fit_models(&r, &p, seed)?;
            write_json(&out_dir(&cli)?.join("models.json"), &models)?;
        }
        Cmd::Blueprint { models } => {
            let p = pipeline_params(&cli)?;
            let models: Vec<LatentModel> = read_json(models)?;
            let bps = pipeline::blueprint_all(&models, &p.blueprint, seed)?;
            let dir = out_dir(&cli)?;
            write_json(&dir.join("blueprints.json"), &bps)?;
            let plain: Vec<_> = bps.iter().map(|b| b.blueprint.clone()).collect();
            write_blueprints_csv(&plain, fs::File::create(dir.join("blueprints.csv"))?)?;
            for b in &bps {
                b.graph.write_csv(fs::File::create(dir.join(format!("dependency_c{}.csv", b.blueprint.channel)))?)?;
            }
        }
        Cmd::Localize { topology, blueprints, mode, radius } => {
            let mut p = pipeline_params(&cli)?;
            if radius.is_some() {
                p.localization.radius = *radius;
            }
            let t = Topology::load(topology)?;
            let bps: Vec<ChannelBlueprint> = read_json(blueprints)?;
            let modes = match mode {
                Mode::AllClients => vec![AnchorMode::AllClients],
                Mode::RepresentativesOnly => vec![AnchorMode::RepresentativesOnly],
                Mode::Both => vec![AnchorMode::AllClients, AnchorMode::RepresentativesOnly],
            };
            let mut rows = Vec::new();
            for m in modes {
                for r in pipeline::localize_all(&t, &bps, m, &p.localization)? {
                    rows.push((t.seed, m, r));
                }
            }
            write_localization_csv(&rows, fs::File::create(out_dir(&cli)?.join("localization.csv"))?)?;
        }
        Cmd::Schedule { topology, models, policy, frames, antennas } => {
            let mut p = pipeline_params(&cli)?;
            if let Some(f) = frames {
                p.episode.frames = *f;
            }
            if let Some(a) = antennas {
                p.episode.antennas = *a;
            }
            let policy = Policy::parse(policy)?;
            let t = Topology::load(topology)?;
            let models: Vec<LatentModel> = match models {
                Some(path) => read_json(path)?,
                None => Vec::new(),
            };
            let m = pipeline::schedule(&t, &models, policy, &p.episode, seed)?;
            let dir = out_dir(&cli)?;
            let key = EpisodeKey {
                seed,
                channel_count: t.num_channels,
                antennas: p.episode.antennas,
                n_hts: t.hts.len(),
                n_clients: t.num_clients(),
            };
            write_json(&dir.join("episode.json"), &m)?;
            write_metrics_csv(&[(key, m)], fs::File::create(dir.join("metrics.csv"))?)?;
        }
    }
    Ok(())
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
