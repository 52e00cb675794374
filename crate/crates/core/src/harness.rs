//! Experiment orchestration: sweeps over seeds and one swept parameter, per-seed CSVs,
//! an aggregate summary and a run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::blueprint::true_ht_count;
use crate::error::{invalid, Error, Result};
use crate::geoloc::{AnchorMode, LOCALIZATION_HEADER};
use crate::pipeline::{self, PipelineParams};
use crate::sched::{Policy, METRICS_HEADER};
use crate::tomography::default_k;

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    SchedulerVsHts,
    ClientDensity,
    MultiChannel,
    MimoSweep,
    ClusterSweep,
    HodMse,
    Localization,
    HtCount,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SchedulerVsHts => "scheduler-vs-hts",
            ExperimentKind::ClientDensity => "client-density",
            ExperimentKind::MultiChannel => "multi-channel",
            ExperimentKind::MimoSweep => "mimo-sweep",
            ExperimentKind::ClusterSweep => "cluster-sweep",
            ExperimentKind::HodMse => "hod-mse",
            ExperimentKind::Localization => "localization",
            ExperimentKind::HtCount => "ht-count",
        }
    }

    /// Name of the parameter that `sweep` values set.
    pub fn swept(self) -> &'static str {
        match self {
            ExperimentKind::SchedulerVsHts | ExperimentKind::Localization | ExperimentKind::HtCount => "n_hts",
            ExperimentKind::ClientDensity => "n_clients",
            ExperimentKind::MultiChannel => "channel_count",
            ExperimentKind::MimoSweep => "antennas",
            ExperimentKind::ClusterSweep => "clusters",
            ExperimentKind::HodMse => "alphabet",
        }
    }

    fn schedules(self) -> bool {
        matches!(
            self,
            ExperimentKind::SchedulerVsHts
                | ExperimentKind::ClientDensity
                | ExperimentKind::MultiChannel
                | ExperimentKind::MimoSweep
                | ExperimentKind::ClusterSweep
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    pub pipeline: PipelineParams,
    pub policies: Vec<Policy>,
    /// Values of the swept parameter; empty runs the base parameters once.
    pub sweep: Vec<usize>,
    pub hod_subsets: usize,
    pub hod_subset_size: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: CONFIG_SCHEMA,
            kind: ExperimentKind::SchedulerVsHts,
            seeds: vec![0],
            pipeline: PipelineParams::default(),
            policies: vec![Policy::Pf, Policy::Aa, Policy::Sp, Policy::Oracle],
            sweep: Vec::new(),
            hod_subsets: 10,
            hod_subset_size: 5,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.schema != CONFIG_SCHEMA {
            return Err(Error::Schema { found: c.schema, expected: CONFIG_SCHEMA });
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(invalid("experiment needs at least one seed"));
        }
        if self.kind.schedules() && self.policies.is_empty() {
            return Err(invalid("scheduling experiments need at least one policy"));
        }
        self.pipeline.topology.validate()?;
        self.pipeline.blueprint.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        let text = serde_json::to_string(self)?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    /// Pipeline parameters with sweep value `v` applied.
    pub fn at(&self, v: Option<usize>) -> PipelineParams {
        let mut p = self.pipeline.clone();
        if let Some(v) = v {
            match self.kind {
                ExperimentKind::SchedulerVsHts | ExperimentKind::Localization | ExperimentKind::HtCount => p.topology.num_hts = v,
                ExperimentKind::ClientDensity => p.topology.num_clients = v,
                ExperimentKind::MultiChannel => p.topology.num_channels = v,
                ExperimentKind::MimoSweep => p.episode.antennas = v,
                ExperimentKind::ClusterSweep => p.tomography.k = Some(v),
                ExperimentKind::HodMse => p.alphabet = Some(v),
            }
        }
        p
    }

    fn sweep_values(&self) -> Vec<Option<usize>> {
        if self.sweep.is_empty() {
            vec![None]
        } else {
            self.sweep.iter().map(|&v| Some(v)).collect()
        }
    }

    fn base_value(&self, p: &PipelineParams) -> usize {
        match self.kind {
            ExperimentKind::SchedulerVsHts | ExperimentKind::Localization | ExperimentKind::HtCount => p.topology.num_hts,
            ExperimentKind::ClientDensity => p.topology.num_clients,
            ExperimentKind::MultiChannel => p.topology.num_channels,
            ExperimentKind::MimoSweep => p.episode.antennas,
            ExperimentKind::ClusterSweep => p.tomography.k.unwrap_or_else(|| default_k(p.topology.num_clients, p.topology.num_channels)),
            ExperimentKind::HodMse => p.alphabet.unwrap_or(p.topology.num_clients),
        }
    }
}

/// One scalar result, the unit of aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub seed: u64,
    pub sweep: usize,
    /// Policy or anchor mode; empty when not applicable.
    pub label: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub context: String,
    pub error: String,
    pub message: String,
}

impl RunFailure {
    fn new(seed: u64, context: impl Into<String>, e: &Error) -> Self {
        Self { seed, context: context.into(), error: e.kind().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedOutput {
    pub seed: u64,
    pub csv: Vec<u8>,
    pub observations: Vec<Observation>,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep: usize,
    pub label: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: ExperimentKind,
    pub swept: String,
    pub seeds: usize,
    pub failures: usize,
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn get(&self, sweep: usize, label: &str, metric: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.sweep == sweep && r.label == label && r.metric == metric)
    }
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(kind: ExperimentKind, seeds: usize, outputs: &[SeedOutput]) -> Summary {
    let mut groups: BTreeMap<(usize, String, String), Vec<f64>> = BTreeMap::new();
    for o in outputs.iter().flat_map(|s| &s.observations) {
        groups.entry((o.sweep, o.label.clone(), o.metric.clone())).or_default().push(o.value);
    }
    let rows = groups
        .into_iter()
        .map(|((sweep, label, metric), mut v)| {
            v.sort_by(f64::total_cmp);
            SummaryRow {
                sweep,
                label,
                metric,
                count: v.len(),
                mean: v.iter().sum::<f64>() / v.len() as f64,
                p25: percentile(&v, 0.25),
                p50: percentile(&v, 0.5),
                p75: percentile(&v, 0.75),
                p90: percentile(&v, 0.9),
            }
        })
        .collect();
    Summary {
        kind,
        swept: kind.swept().to_string(),
        seeds,
        failures: outputs.iter().map(|o| o.failures.len()).sum(),
        rows,
    }
}

struct Rows {
    w: csv::Writer<Vec<u8>>,
}

impl Rows {
    fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Self { w })
    }

    fn push(&mut self, rec: &[String]) -> Result<()> {
        self.w.write_record(rec)?;
        Ok(())
    }

    fn finish(self) -> Result<Vec<u8>> {
        self.w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

fn header_for(kind: ExperimentKind) -> Vec<&'static str> {
    match kind {
        ExperimentKind::HodMse => vec!["seed", "alphabet", "subset", "mse"],
        ExperimentKind::HtCount => vec!["seed", "channel", "n_hts", "true_count", "inferred_count", "hit"],
        ExperimentKind::Localization => {
            let mut h = LOCALIZATION_HEADER.to_vec();
            h.insert(1, "n_hts");
            h
        }
        _ => {
            let mut h = METRICS_HEADER.to_vec();
            h.push("clusters");
            h
        }
    }
}

/// Run every sweep value for one seed. Failures are recorded, not propagated.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let mut rows = Rows::new(&header_for(cfg.kind))?;
    let mut out = SeedOutput { seed, ..Default::default() };
    for v in cfg.sweep_values() {
        let p = cfg.at(v);
        let sweep = cfg.base_value(&p);
        let ctx = format!("{}={sweep}", cfg.kind.swept());
        if let Err(e) = run_point(cfg, &p, seed, sweep, &mut rows, &mut out) {
            out.failures.push(RunFailure::new(seed, ctx, &e));
        }
    }
    out.csv = rows.finish()?;
    Ok(out)
}

fn observe(out: &mut SeedOutput, sweep: usize, label: &str, metric: &str, value: f64) {
    out.observations.push(Observation {
        seed: out.seed,
        sweep,
        label: label.to_string(),
        metric: metric.to_string(),
        value,
    });
}

fn run_point(cfg: &ExperimentConfig, p: &PipelineParams, seed: u64, sweep: usize, rows: &mut Rows, out: &mut SeedOutput) -> Result<()> {
    let t = pipeline::topology(p, seed)?;
    match cfg.kind {
        ExperimentKind::HodMse => {
            let e = pipeline::estimate(&t, p, seed)?;
            for m in &e.models {
                let mse = pipeline::subset_mse(&t, m, cfg.hod_subset_size, cfg.hod_subsets, seed)?;
                for (k, x) in mse.iter().enumerate() {
                    rows.push(&[seed.to_string(), sweep.to_string(), k.to_string(), x.to_string()])?;
                }
                let mean = mse.iter().sum::<f64>() / mse.len().max(1) as f64;
                observe(out, sweep, "", "mse", mean);
            }
        }
        ExperimentKind::HtCount => {
            let e = pipeline::estimate(&t, p, seed)?;
            let bps = pipeline::blueprint_all(&e.models, &p.blueprint, seed)?;
            for b in &bps {
                let ch = b.blueprint.channel;
                let truth = true_ht_count(&t, ch);
                let inferred = b.blueprint.inferred_hts.len();
                let hit = truth == inferred;
                rows.push(&[
                    seed.to_string(),
                    ch.to_string(),
                    sweep.to_string(),
                    truth.to_string(),
                    inferred.to_string(),
                    hit.to_string(),
                ])?;
                observe(out, sweep, "", "hit", hit as u8 as f64);
                observe(out, sweep, "", "inferred_minus_true", inferred as f64 - truth as f64);
            }
        }
        ExperimentKind::Localization => {
            let e = pipeline::estimate(&t, p, seed)?;
            let bps = pipeline::blueprint_all(&e.models, &p.blueprint, seed)?;
            for mode in [AnchorMode::AllClients, AnchorMode::RepresentativesOnly] {
                let loc = pipeline::localize_all(&t, &bps, mode, &p.localization)?;
                for r in &loc {
                    rows.push(&[
                        seed.to_string(),
                        sweep.to_string(),
                        r.channel.to_string(),
                        r.ht_index.to_string(),
                        r.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                        r.precision.to_string(),
                        mode.name().to_string(),
                    ])?;
                    observe(out, sweep, mode.name(), "empty_zone", r.empty_zone as u8 as f64);
                    if let Some(a) = r.accuracy {
                        observe(out, sweep, mode.name(), "accuracy_m", a);
                        observe(out, sweep, mode.name(), "precision_m2", r.precision);
                    }
                }
            }
        }
        _ => {
            let e = pipeline::estimate(&t, p, seed)?;
            let k = e.tomography.clustering.k;
            for &policy in &cfg.policies {
                if policy == Policy::Sp && p.episode.antennas > 1 {
                    continue;
                }
                let m = match pipeline::schedule(&t, &e.models, policy, &p.episode, seed) {
                    Ok(m) => m,
                    Err(err) => {
                        out.failures.push(RunFailure::new(seed, format!("{}={sweep} policy={}", cfg.kind.swept(), policy.name()), &err));
                        continue;
                    }
                };
                for r in &m.rows {
                    rows.push(&[
                        seed.to_string(),
                        policy.name().to_string(),
                        t.num_channels.to_string(),
                        p.episode.antennas.to_string(),
                        t.hts.len().to_string(),
                        t.num_clients().to_string(),
                        r.frame.to_string(),
                        r.rbu.to_string(),
                        r.cum_throughput.to_string(),
                        k.to_string(),
                    ])?;
                }
                observe(out, sweep, policy.name(), "rbu", m.rbu);
                observe(out, sweep, policy.name(), "cum_throughput", m.cum_throughput);
            }
        }
    }
    Ok(())
}

/// Run all seeds in parallel; results are ordered by seed list position.
pub fn run_seeds(cfg: &ExperimentConfig) -> Vec<SeedOutput> {
    cfg.seeds
        .par_iter()
        .map(|&seed| {
            run_seed(cfg, seed).unwrap_or_else(|e| SeedOutput {
                seed,
                failures: vec![RunFailure::new(seed, "seed", &e)],
                ..Default::default()
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub kind: ExperimentKind,
    /// `running` until the run finishes, then `complete`.
    pub status: String,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub failures: Vec<RunFailure>,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, v)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// `out/<experiment>/<unix seconds>` when the config names no directory.
pub fn default_out_dir(kind: ExperimentKind) -> PathBuf {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    PathBuf::from("out").join(kind.name()).join(now.to_string())
}

/// Run an experiment and write `seed_<s>.csv`, `overhead.csv`, `summary.json`,
/// `config.json` and `manifest.json` under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunManifest, Summary)> {
    cfg.validate()?;
    let dir = cfg.out_dir.clone().unwrap_or_else(|| default_out_dir(cfg.kind));
    fs::create_dir_all(&dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest {
        config_hash: cfg.hash()?,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind,
        status: "running".to_string(),
        started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        wall_clock_s: 0.0,
        outputs: Vec::new(),
        failures: Vec::new(),
    };
    let manifest_path = dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    write_json(&dir.join("config.json"), cfg)?;

    let outputs = run_seeds(cfg);
    for o in &outputs {
        let name = format!("seed_{}.csv", o.seed);
        fs::write(dir.join(&name), &o.csv)?;
        manifest.outputs.push(name);
        manifest.failures.extend(o.failures.iter().cloned());
    }
    let overhead: Vec<OverheadReport> = cfg
        .sweep_values()
        .into_iter()
        .map(|v| OverheadParams::from_pipeline(&cfg.at(v)).report())
        .collect::<Result<_>>()?;
    write_overhead_csv(&overhead, fs::File::create(dir.join("overhead.csv"))?)?;
    manifest.outputs.push("overhead.csv".to_string());

    let summary = summarize(cfg.kind, cfg.seeds.len(), &outputs);
    write_json(&dir.join("summary.json"), &summary)?;
    manifest.outputs.push("summary.json".to_string());
    manifest.status = "complete".to_string();
    manifest.wall_clock_s = started.elapsed().as_secs_f64();
    write_json(&manifest_path, &manifest)?;
    Ok((manifest, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadParams {
    pub channels: u64,
    pub clients: u64,
    pub clusters: u64,
    pub antennas: u64,
    pub frames: u64,
}

impl OverheadParams {
    pub fn from_pipeline(p: &PipelineParams) -> Self {
        let n = p.topology.num_clients;
        let c = p.topology.num_channels;
        Self {
            channels: c as u64,
            clients: n as u64,
            clusters: p.tomography.k.unwrap_or_else(|| default_k(n, c)).min(n) as u64,
            antennas: p.episode.antennas as u64,
            frames: p.tomography.frames_per_sample,
        }
    }

    pub fn report(&self) -> Result<OverheadReport> {
        overhead_report(self)
    }
}

/// Measurement cost of the first-order plus pairwise scheme against measuring every
/// schedulable group directly. Counts are sampling sets, and sets times frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub params: OverheadParams,
    pub first_order_sets: u128,
    pub pairwise_sets: u128,
    pub tomography_sets: u128,
    pub oracle_sets: u128,
    pub tomography_frames: u128,
    pub oracle_frames: u128,
}

impl OverheadReport {
    pub fn ratio(&self) -> f64 {
        self.oracle_frames as f64 / self.tomography_frames.max(1) as f64
    }
}

pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

pub fn overhead_report(p: &OverheadParams) -> Result<OverheadReport> {
    let overflow = || Error::BoundExceeded("overhead count overflows 128 bits".to_string());
    let c = p.channels as u128;
    let f = p.frames as u128;
    let first_order_sets = c.checked_mul(p.clients as u128).ok_or_else(overflow)?;
    let pairwise_sets = c.checked_mul(binomial(p.clusters, 2).ok_or_else(overflow)?).ok_or_else(overflow)?;
    let mut groups: u128 = 0;
    for m in 1..=p.antennas.min(p.clients) {
        groups = groups.checked_add(binomial(p.clients, m).ok_or_else(overflow)?).ok_or_else(overflow)?;
    }
    let oracle_sets = c.checked_mul(groups).ok_or_else(overflow)?;
    let tomography_sets = first_order_sets.checked_add(pairwise_sets).ok_or_else(overflow)?;
    Ok(OverheadReport {
        params: *p,
        first_order_sets,
        pairwise_sets,
        tomography_sets,
        oracle_sets,
        tomography_frames: tomography_sets.checked_mul(f).ok_or_else(overflow)?,
        oracle_frames: oracle_sets.checked_mul(f).ok_or_else(overflow)?,
    })
}

pub fn write_overhead_csv<W: Write>(reports: &[OverheadReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "channels",
        "clients",
        "clusters",
        "antennas",
        "frames",
        "tomography_sets",
        "oracle_sets",
        "tomography_frames",
        "oracle_frames",
    ])?;
    for r in reports {
        let p = r.params;
        w.write_record([
            p.channels.to_string(),
            p.clients.to_string(),
            p.clusters.to_string(),
            p.antennas.to_string(),
            p.frames.to_string(),
            r.tomography_sets.to_string(),
            r.oracle_sets.to_string(),
            r.tomography_frames.to_string(),
            r.oracle_frames.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
