//! End-to-end chain for one topology: measure, cluster, fit, blueprint, localize, schedule.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::airsim::BlockingLaw;
use crate::blueprint::{blueprint_channel, BlueprintParams, DependencyGraph, HtClusters, InterferenceBlueprint};
use crate::error::Result;
use crate::geoloc::{evaluate_localization, AnchorMode, HtLocalization, LocalizationParams};
use crate::hod::{fit, hod_mse, FitOptions, LatentModel};
use crate::model::{generate_topology, Topology, TopologyParams};
use crate::sched::{run_episode, EpisodeInputs, EpisodeMetrics, EpisodeParams, Policy};
use crate::stream_rng;
use crate::tomography::{run_tomography, TomographyParams, TomographyResult};

const BLUEPRINT_STREAM: u64 = 100;
const SUBSET_STREAM: u64 = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineParams {
    pub topology: TopologyParams,
    pub tomography: TomographyParams,
    /// Latent alphabet size; `None` means `F = N`.
    pub alphabet: Option<usize>,
    pub fit: FitOptions,
    pub blueprint: BlueprintParams,
    pub localization: LocalizationParams,
    pub episode: EpisodeParams,
}

/// Measured tables and one fitted model per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub tomography: TomographyResult,
    pub models: Vec<LatentModel>,
}

pub fn topology(params: &PipelineParams, seed: u64) -> Result<Topology> {
    generate_topology(&params.topology, seed)
}

pub fn measure(t: &Topology, params: &PipelineParams, seed: u64) -> Result<TomographyResult> {
    run_tomography(t, &params.tomography, seed)
}

pub fn fit_models(tomo: &TomographyResult, params: &PipelineParams, seed: u64) -> Result<Vec<LatentModel>> {
    let n = tomo.vectors.len();
    let f = params.alphabet.unwrap_or(n).max(1);
    tomo.pairwise
        .channels
        .iter()
        .map(|pairs| {
            let marg: Vec<f64> = tomo.vectors.iter().map(|v| v.a[pairs.channel]).collect();
            fit(pairs, &marg, f, &params.fit, seed)
        })
        .collect()
}

pub fn estimate(t: &Topology, params: &PipelineParams, seed: u64) -> Result<Estimate> {
    let tomography = measure(t, params, seed)?;
    let models = fit_models(&tomography, params, seed)?;
    Ok(Estimate { tomography, models })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBlueprint {
    pub clusters: HtClusters,
    pub graph: DependencyGraph,
    pub blueprint: InterferenceBlueprint,
}

pub fn blueprint_all(models: &[LatentModel], params: &BlueprintParams, seed: u64) -> Result<Vec<ChannelBlueprint>> {
    models
        .iter()
        .map(|m| {
            let mut rng = stream_rng(seed, BLUEPRINT_STREAM + m.channel as u64);
            let (clusters, graph, blueprint) = blueprint_channel(m, params, &mut rng)?;
            Ok(ChannelBlueprint { clusters, graph, blueprint })
        })
        .collect()
}

pub fn localize_all(t: &Topology, bps: &[ChannelBlueprint], mode: AnchorMode, params: &LocalizationParams) -> Result<Vec<HtLocalization>> {
    let mut out = Vec::new();
    for b in bps {
        out.extend(evaluate_localization(t, &b.blueprint, &b.clusters, mode, params)?);
    }
    Ok(out)
}

pub fn exact_laws(t: &Topology) -> Result<Vec<BlockingLaw>> {
    (0..t.num_channels).map(|c| BlockingLaw::new(t, c)).collect()
}

/// Run `policy` on every channel with the fitted models (and the exact law for the oracle).
pub fn schedule(t: &Topology, models: &[LatentModel], policy: Policy, params: &EpisodeParams, seed: u64) -> Result<EpisodeMetrics> {
    let truth = if policy == Policy::Oracle { Some(exact_laws(t)?) } else { None };
    let inputs = EpisodeInputs { topology: t, models, truth: truth.as_deref() };
    run_episode(&inputs, policy, params, seed)
}

/// Mean HOD MSE of `model` over `count` random client subsets of size `size`.
pub fn subset_mse(t: &Topology, model: &LatentModel, size: usize, count: usize, seed: u64) -> Result<Vec<f64>> {
    let law = BlockingLaw::new(t, model.channel)?;
    let n = t.num_clients();
    let size = size.min(n);
    let mut rng = stream_rng(seed, SUBSET_STREAM + model.channel as u64);
    (0..count)
        .map(|_| {
            let mut sub = sample(&mut rng, n, size).into_vec();
            sub.sort_unstable();
            Ok(hod_mse(model, &law.subset(&sub)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::Sampling;

    #[test]
    fn chain_runs_and_is_deterministic() {
        let params = PipelineParams {
            topology: TopologyParams { num_clients: 10, num_hts: 3, ..Default::default() },
            tomography: TomographyParams { frames_per_sample: 300, ..Default::default() },
            episode: EpisodeParams { frames: 100, ..Default::default() },
            ..Default::default()
        };
        let run = || {
            let t = topology(&params, 4).unwrap();
            let e = estimate(&t, &params, 4).unwrap();
            let bps = blueprint_all(&e.models, &params.blueprint, 4).unwrap();
            let loc = localize_all(&t, &bps, AnchorMode::AllClients, &params.localization).unwrap();
            let m = schedule(&t, &e.models, Policy::Sp, &params.episode, 4).unwrap();
            (e, bps, loc, m)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn exact_tables_give_small_subset_error() {
        let params = PipelineParams {
            topology: TopologyParams { num_clients: 8, num_hts: 3, ..Default::default() },
            tomography: TomographyParams { sampling: Sampling::Exact, k: Some(8), ..Default::default() },
            ..Default::default()
        };
        let t = topology(&params, 2).unwrap();
        let e = estimate(&t, &params, 2).unwrap();
        let mse = subset_mse(&t, &e.models[0], 4, 5, 2).unwrap();
        assert!(mse.iter().all(|&x| x < 1e-3), "{mse:?}");
    }
}
