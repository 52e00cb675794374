//! Frame-by-frame resource-block scheduling: proportional fair (PF), access-aware (AA),
//! joint-access-aware MU-MIMO (JAA), speculative SISO over-scheduling (SP) and an
//! exhaustive oracle.
//!
//! Rates are flat across resource blocks, so a policy's per-RB choice is the same on
//! every RB of a frame. Hidden-terminal activity is drawn once per frame and channel.

use std::collections::HashMap;
use std::io::Write;
use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::airsim::{BlockingLaw, ChannelSimulator};
use crate::error::{invalid, Error, Result};
use crate::hod::LatentModel;
use crate::law::{exclusive_utility, group_utility, AccessLaw};
use crate::model::Topology;
use crate::stream_rng;

const RATE_STREAM: u64 = 11;
const EPISODE_STREAM: u64 = 12;
/// Gains at or below this are treated as ties.
const GAIN_EPS: f64 = 1e-12;
/// Largest number of candidate groups the oracle enumerates per channel.
pub const MAX_ORACLE_GROUPS: usize = 200_000;
const PROFILE_CACHE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Pf,
    Aa,
    Jaa,
    Sp,
    Oracle,
}

impl Policy {
    pub const ALL: [Policy; 5] = [Policy::Pf, Policy::Aa, Policy::Jaa, Policy::Sp, Policy::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Pf => "pf",
            Policy::Aa => "aa",
            Policy::Jaa => "jaa",
            Policy::Sp => "sp",
            Policy::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown policy {s:?}")))
    }

    fn channel_agnostic(self) -> bool {
        matches!(self, Policy::Pf | Policy::Aa)
    }
}

/// What the MU-MIMO stream penalty counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamPenalty {
    /// Streams that actually transmit.
    #[default]
    Active,
    /// Every scheduled member, blocked or not.
    Scheduled,
}

/// Per-client base rates plus the MU-MIMO stream penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub base: Vec<f64>,
    /// Per-stream rate is `base / (1 + kappa * (streams - 1))`.
    pub kappa: f64,
    pub penalty: StreamPenalty,
}

impl RateModel {
    /// Base rates log-uniform on `[lo, hi]`.
    pub fn generate<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, kappa: f64, penalty: StreamPenalty, rng: &mut R) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid("rate range must satisfy 0 < lo <= hi"));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(invalid("kappa must be finite and non-negative"));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let base = (0..n)
            .map(|_| if b > a { rng.random_range(a..b).exp() } else { lo })
            .collect();
        Ok(Self { base, kappa, penalty })
    }

    /// Rate multiplier when `streams` streams share an RB.
    pub fn stream_scale(&self, streams: usize) -> f64 {
        1.0 / (1.0 + self.kappa * (streams.max(1) - 1) as f64)
    }

    /// Multiplier for a group of `scheduled` members of which `active` transmit.
    pub fn group_scale(&self, scheduled: usize, active: usize) -> f64 {
        match self.penalty {
            StreamPenalty::Active => self.stream_scale(active),
            StreamPenalty::Scheduled => self.stream_scale(scheduled),
        }
    }

    pub fn rate(&self, client: usize, scheduled: usize, active: usize) -> f64 {
        self.base[client] * self.group_scale(scheduled, active)
    }
}

/// Exponentially averaged throughput of every client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientState {
    pub r: Vec<f64>,
    pub alpha: f64,
}

impl ClientState {
    /// Warm start at each client's base rate.
    pub fn warm(rates: &RateModel, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        Ok(Self { r: rates.base.clone(), alpha })
    }

    /// Marginal utility `r_i / R_i` of every client.
    pub fn utilities(&self, rates: &RateModel) -> Vec<f64> {
        rates.base.iter().zip(&self.r).map(|(b, r)| b / r).collect()
    }

    pub fn update(&mut self, realized: &[f64]) {
        for (r, x) in self.r.iter_mut().zip(realized) {
            *r = self.alpha * x + (1.0 - self.alpha) * *r;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDecision {
    pub channel: usize,
    /// Clients on each RB, ascending.
    pub rb_groups: Vec<Vec<usize>>,
    /// Expected per-RB utility under the law the policy used.
    pub expected_utility: f64,
}

impl ScheduleDecision {
    fn replicate(channel: usize, group: Vec<usize>, rbs: usize, expected_utility: f64) -> Self {
        let mut group = group;
        group.sort_unstable();
        Self {
            channel,
            rb_groups: vec![group; rbs],
            expected_utility,
        }
    }

    pub fn group(&self) -> &[usize] {
        self.rb_groups.first().map_or(&[], |g| g.as_slice())
    }
}

/// Inputs shared by every policy for one channel and frame.
pub struct SchedContext<'a> {
    pub channel: usize,
    pub candidates: &'a [usize],
    /// Marginal utility of every client, indexed by client id.
    pub utility: &'a [f64],
    pub rates: &'a RateModel,
    pub rbs: usize,
    pub antennas: usize,
}

/// Memoized access profiles of groups under one law.
pub struct ProfileCache<'a, L: AccessLaw + ?Sized> {
    law: &'a L,
    cache: HashMap<Vec<usize>, Rc<Vec<Vec<f64>>>>,
}

impl<'a, L: AccessLaw + ?Sized> ProfileCache<'a, L> {
    pub fn new(law: &'a L) -> Self {
        Self { law, cache: HashMap::new() }
    }

    pub fn law(&self) -> &L {
        self.law
    }

    /// Profile of `group`, which must be sorted ascending.
    pub fn profile(&mut self, group: &[usize]) -> Rc<Vec<Vec<f64>>> {
        if let Some(p) = self.cache.get(group) {
            return p.clone();
        }
        if self.cache.len() >= PROFILE_CACHE_LIMIT {
            self.cache.clear();
        }
        let p = Rc::new(self.law.access_profile(group));
        self.cache.insert(group.to_vec(), p.clone());
        p
    }

    /// Expected SISO utility `sum_i P(i, others blocked) u_i` of over-scheduling `group`.
    pub fn exclusive_value(&mut self, group: &[usize], utility: &[f64]) -> f64 {
        let prof = self.profile(group);
        let u: Vec<f64> = group.iter().map(|&i| utility[i]).collect();
        exclusive_utility(&prof, &u)
    }

    /// Expected MU-MIMO utility of `group` with rates scaled by active streams.
    pub fn group_value(&mut self, group: &[usize], utility: &[f64], rates: &RateModel) -> f64 {
        let prof = self.profile(group);
        let u: Vec<f64> = group.iter().map(|&i| utility[i]).collect();
        group_utility(&prof, &u, |k| rates.group_scale(group.len(), k))
    }
}

fn sorted_with(group: &[usize], extra: usize) -> Vec<usize> {
    let mut g = group.to_vec();
    let pos = g.partition_point(|&x| x < extra);
    g.insert(pos, extra);
    g
}

/// Grow `start` one client at a time, adding the best candidate while the value strictly
/// improves and the group is below `cap`. Ties go to the lowest client id.
fn greedy(start: Vec<usize>, candidates: &[usize], cap: usize, mut value: impl FnMut(&[usize]) -> f64) -> (Vec<usize>, f64) {
    let mut group = start;
    group.sort_unstable();
    let mut current = if group.is_empty() { 0.0 } else { value(&group) };
    while group.len() < cap {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for &l in candidates {
            if group.contains(&l) {
                continue;
            }
            let g = sorted_with(&group, l);
            let v = value(&g);
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((g, v));
            }
        }
        match best {
            Some((g, v)) if v > current + GAIN_EPS => {
                group = g;
                current = v;
            }
            _ => break,
        }
    }
    (group, current)
}

fn argmax(candidates: &[usize], score: impl Fn(usize) -> f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    for i in sorted {
        let s = score(i);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

fn empty_decision(ctx: &SchedContext) -> ScheduleDecision {
    ScheduleDecision::replicate(ctx.channel, Vec::new(), ctx.rbs, 0.0)
}

/// Interference-agnostic proportional fair. With `antennas >= 2` a group is grown greedily
/// assuming every member transmits.
pub fn schedule_pf(ctx: &SchedContext) -> ScheduleDecision {
    schedule_weighted(ctx, |_| 1.0)
}

/// PF with each client's utility weighted by its access probability.
pub fn schedule_aa(ctx: &SchedContext, marginals: &[f64]) -> ScheduleDecision {
    schedule_weighted(ctx, |i| marginals[i])
}

fn schedule_weighted(ctx: &SchedContext, weight: impl Fn(usize) -> f64) -> ScheduleDecision {
    if ctx.candidates.is_empty() {
        return empty_decision(ctx);
    }
    if ctx.antennas <= 1 {
        let (i, v) = argmax(ctx.candidates, |i| weight(i) * ctx.utility[i]).expect("non-empty");
        return ScheduleDecision::replicate(ctx.channel, vec![i], ctx.rbs, v);
    }
    let mut cands = ctx.candidates.to_vec();
    cands.sort_unstable();
    let (g, v) = greedy(Vec::new(), &cands, ctx.antennas, |g| {
        g.iter().map(|&i| weight(i) * ctx.utility[i]).sum::<f64>() * ctx.rates.stream_scale(g.len())
    });
    ScheduleDecision::replicate(ctx.channel, g, ctx.rbs, v)
}

/// Joint-access-aware MU-MIMO: seeded with the AA choice, then grown greedily on the
/// expected group utility under `law`.
pub fn schedule_jaa<L: AccessLaw + ?Sized>(ctx: &SchedContext, law: &mut ProfileCache<L>) -> ScheduleDecision {
    if ctx.candidates.is_empty() {
        return empty_decision(ctx);
    }
    let l = law.law();
    let (seed, _) = argmax(ctx.candidates, |i| l.marginal(i) * ctx.utility[i]).expect("non-empty");
    let mut cands = ctx.candidates.to_vec();
    cands.sort_unstable();
    let (g, v) = greedy(vec![seed], &cands, ctx.antennas.max(1), |g| law.group_value(g, ctx.utility, ctx.rates));
    ScheduleDecision::replicate(ctx.channel, g, ctx.rbs, v)
}

/// Speculative SISO: start from the AA winner and over-schedule extra clients while the
/// expected utility of exactly one member transmitting grows.
pub fn schedule_sp<L: AccessLaw + ?Sized>(ctx: &SchedContext, law: &mut ProfileCache<L>, cap: usize) -> ScheduleDecision {
    if ctx.candidates.is_empty() {
        return empty_decision(ctx);
    }
    let l = law.law();
    let (seed, _) = argmax(ctx.candidates, |i| l.marginal(i) * ctx.utility[i]).expect("non-empty");
    let mut cands = ctx.candidates.to_vec();
    cands.sort_unstable();
    let (g, v) = greedy(vec![seed], &cands, cap.max(1), |g| law.exclusive_value(g, ctx.utility));
    ScheduleDecision::replicate(ctx.channel, g, ctx.rbs, v)
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All groups of size `1..=cap` drawn from `candidates`, sorted ascending.
pub fn enumerate_groups(candidates: &[usize], cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut cands = candidates.to_vec();
    cands.sort_unstable();
    let n = cands.len();
    let total: u128 = (1..=cap.min(n)).map(|k| binomial(n, k)).sum();
    if total > MAX_ORACLE_GROUPS as u128 {
        return Err(Error::BoundExceeded(format!(
            "{total} candidate groups; oracle supports {MAX_ORACLE_GROUPS}"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut level: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    for _ in 0..cap.min(n) {
        let mut next = Vec::new();
        for g in &level {
            for k in g.last().unwrap() + 1..n {
                let mut e = g.clone();
                e.push(k);
                next.push(e);
            }
        }
        out.extend(level.iter().map(|g| g.iter().map(|&k| cands[k]).collect::<Vec<_>>()));
        level = next;
    }
    Ok(out)
}

/// Exhaustive oracle over precomputed groups and their exact profiles.
pub struct OracleTable {
    groups: Vec<(Vec<usize>, Vec<Vec<f64>>)>,
    siso: bool,
}

impl OracleTable {
    /// SISO: groups up to `sp_cap` scored by exclusive utility. MU-MIMO: groups up to
    /// `antennas` scored by group utility.
    pub fn new<L: AccessLaw + ?Sized>(law: &L, candidates: &[usize], antennas: usize, sp_cap: usize) -> Result<Self> {
        let siso = antennas <= 1;
        let cap = if siso { sp_cap } else { antennas };
        let groups = enumerate_groups(candidates, cap)?
            .into_iter()
            .map(|g| {
                let p = law.access_profile(&g);
                (g, p)
            })
            .collect();
        Ok(Self { groups, siso })
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }
}

pub fn schedule_oracle(ctx: &SchedContext, table: &OracleTable) -> ScheduleDecision {
    let mut best: Option<(&[usize], f64)> = None;
    for (g, prof) in &table.groups {
        let u: Vec<f64> = g.iter().map(|&i| ctx.utility[i]).collect();
        let v = if table.siso {
            exclusive_utility(prof, &u)
        } else {
            group_utility(prof, &u, |k| ctx.rates.group_scale(g.len(), k))
        };
        if best.is_none_or(|(_, b)| v > b + GAIN_EPS) {
            best = Some((g, v));
        }
    }
    match best {
        Some((g, v)) => ScheduleDecision::replicate(ctx.channel, g.to_vec(), ctx.rbs, v),
        None => empty_decision(ctx),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeParams {
    pub frames: u64,
    pub rbs: usize,
    pub antennas: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub stream_penalty: StreamPenalty,
    pub sp_cap: usize,
    pub rate_min: f64,
    pub rate_max: f64,
    /// Emit a metrics row every this many frames (and after the last frame).
    pub metrics_every: u64,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        Self {
            frames: 1500,
            rbs: 10,
            antennas: 1,
            alpha: 0.05,
            kappa: 0.1,
            stream_penalty: StreamPenalty::Active,
            sp_cap: 4,
            rate_min: 1.0,
            rate_max: 4.0,
            metrics_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub frame: u64,
    pub rbu: f64,
    pub cum_throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub policy: Policy,
    pub frames: u64,
    pub rbs_total: u64,
    pub rbs_used: u64,
    pub rbu: f64,
    pub cum_throughput: f64,
    pub per_client_throughput: Vec<f64>,
    /// Sum over frames and channels of the policy's expected per-RB utility.
    pub expected_utility: f64,
    /// Sum over frames and channels of the realized per-RB utility.
    pub realized_utility: f64,
    pub rows: Vec<MetricsRow>,
}

/// Everything an episode needs besides the policy.
pub struct EpisodeInputs<'a> {
    pub topology: &'a Topology,
    /// Estimated law per channel (AA, JAA and SP).
    pub models: &'a [LatentModel],
    /// Exact law per channel (oracle).
    pub truth: Option<&'a [BlockingLaw]>,
}

/// Partition clients over channels. Channel-agnostic policies use `i mod C`; the others
/// assign clients, most-accessible first, to their best channel with room left.
pub fn assign_channels(num_clients: usize, marginals: &[Vec<f64>], policy: Policy) -> Vec<Vec<usize>> {
    let c = marginals.len();
    let mut out = vec![Vec::new(); c];
    if c == 0 {
        return out;
    }
    if c == 1 || policy.channel_agnostic() {
        for i in 0..num_clients {
            out[i % c].push(i);
        }
        return out;
    }
    let room = num_clients.div_ceil(c);
    let best = |i: usize| marginals.iter().map(|m| m[i]).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..num_clients).collect();
    order.sort_by(|&a, &b| best(b).total_cmp(&best(a)).then(a.cmp(&b)));
    for i in order {
        let ch = (0..c)
            .filter(|&ch| out[ch].len() < room)
            .fold(None, |acc: Option<usize>, ch| match acc {
                Some(b) if marginals[b][i] >= marginals[ch][i] => Some(b),
                _ => Some(ch),
            })
            .expect("room for every client");
        out[ch].push(i);
    }
    for g in &mut out {
        g.sort_unstable();
    }
    out
}

/// Simulate `params.frames` frames of `policy`. The HT activity sequence depends only on
/// `seed`, so policies run with the same seed face identical interference.
pub fn run_episode(inputs: &EpisodeInputs, policy: Policy, params: &EpisodeParams, seed: u64) -> Result<EpisodeMetrics> {
    let t = inputs.topology;
    let n = t.num_clients();
    let c = t.num_channels;
    if params.rbs == 0 || params.antennas == 0 {
        return Err(invalid("rbs and antennas must be at least 1"));
    }
    if policy == Policy::Sp && params.antennas > 1 {
        return Err(invalid("speculative scheduling is SISO only"));
    }
    let needs_model = matches!(policy, Policy::Aa | Policy::Jaa | Policy::Sp);
    if needs_model && inputs.models.len() != c {
        return Err(invalid(format!("{} needs one model per channel", policy.name())));
    }
    if needs_model && inputs.models.iter().any(|m| m.num_clients() != n) {
        return Err(invalid("model and topology disagree on N"));
    }
    let truth = match (policy, inputs.truth) {
        (Policy::Oracle, Some(t)) if t.len() == c => Some(t),
        (Policy::Oracle, _) => return Err(invalid("oracle needs the exact law of every channel")),
        _ => None,
    };

    let rates = RateModel::generate(n, params.rate_min, params.rate_max, params.kappa, params.stream_penalty, &mut stream_rng(t.seed, RATE_STREAM))?;
    let mut state = ClientState::warm(&rates, params.alpha)?;
    let marginals: Vec<Vec<f64>> = (0..c)
        .map(|ch| match (truth, inputs.models.get(ch)) {
            (Some(tr), _) => (0..n).map(|i| tr[ch].marginal(i)).collect(),
            (None, Some(m)) => (0..n).map(|i| m.marginal(i)).collect(),
            (None, None) => vec![1.0; n],
        })
        .collect();
    let assignment = assign_channels(n, &marginals, policy);

    let mut sims = (0..c).map(|ch| ChannelSimulator::new(t, ch)).collect::<Result<Vec<_>>>()?;
    let mut caches: Vec<ProfileCache<LatentModel>> = inputs.models.iter().map(ProfileCache::new).collect();
    let oracles = match truth {
        Some(tr) => (0..c)
            .map(|ch| OracleTable::new(&tr[ch], &assignment[ch], params.antennas, params.sp_cap))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let mut rng = stream_rng(seed, EPISODE_STREAM);
    let siso = params.antennas <= 1;
    let rbs = params.rbs as f64;

    let mut m = EpisodeMetrics {
        policy,
        frames: params.frames,
        rbs_total: 0,
        rbs_used: 0,
        rbu: 0.0,
        cum_throughput: 0.0,
        per_client_throughput: vec![0.0; n],
        expected_utility: 0.0,
        realized_utility: 0.0,
        rows: Vec::new(),
    };
    let mut realized = vec![0.0; n];
    for frame in 1..=params.frames {
        let utility = state.utilities(&rates);
        realized.iter_mut().for_each(|x| *x = 0.0);
        for ch in 0..c {
            let tx = sims[ch].sample_transmitters(&mut rng);
            let ctx = SchedContext {
                channel: ch,
                candidates: &assignment[ch],
                utility: &utility,
                rates: &rates,
                rbs: params.rbs,
                antennas: params.antennas,
            };
            let d = match policy {
                Policy::Pf => schedule_pf(&ctx),
                Policy::Aa => schedule_aa(&ctx, &marginals[ch]),
                Policy::Jaa => schedule_jaa(&ctx, &mut caches[ch]),
                Policy::Sp => schedule_sp(&ctx, &mut caches[ch], params.sp_cap),
                Policy::Oracle => schedule_oracle(&ctx, &oracles[ch]),
            };
            m.expected_utility += d.expected_utility;
            m.rbs_total += params.rbs as u64;
            let active: Vec<usize> = d.group().iter().copied().filter(|&i| !sims[ch].is_blocked(tx, i)).collect();
            let delivered: Vec<(usize, f64)> = if siso {
                if active.len() == 1 {
                    vec![(active[0], rates.base[active[0]])]
                } else {
                    Vec::new()
                }
            } else {
                active.iter().map(|&i| (i, rates.rate(i, d.group().len(), active.len()))).collect()
            };
            if !delivered.is_empty() {
                m.rbs_used += params.rbs as u64;
            }
            for (i, r) in delivered {
                realized[i] += r;
                m.per_client_throughput[i] += r * rbs;
                m.cum_throughput += r * rbs;
                m.realized_utility += r / state.r[i];
            }
        }
        state.update(&realized);
        if frame % params.metrics_every.max(1) == 0 || frame == params.frames {
            m.rows.push(MetricsRow {
                frame,
                rbu: m.rbs_used as f64 / m.rbs_total.max(1) as f64,
                cum_throughput: m.cum_throughput,
            });
        }
    }
    m.rbu = m.rbs_used as f64 / m.rbs_total.max(1) as f64;
    Ok(m)
}

/// Identifies an episode in the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeKey {
    pub seed: u64,
    pub channel_count: usize,
    pub antennas: usize,
    pub n_hts: usize,
    pub n_clients: usize,
}

pub const METRICS_HEADER: [&str; 9] = [
    "seed",
    "policy",
    "channel_count",
    "antennas",
    "n_hts",
    "n_clients",
    "frame",
    "rbu",
    "cum_throughput",
];

pub fn write_metrics_csv<W: Write>(episodes: &[(EpisodeKey, EpisodeMetrics)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for (k, m) in episodes {
        for row in &m.rows {
            w.write_record([
                k.seed.to_string(),
                m.policy.name().to_string(),
                k.channel_count.to_string(),
                k.antennas.to_string(),
                k.n_hts.to_string(),
                k.n_clients.to_string(),
                row.frame.to_string(),
                row.rbu.to_string(),
                row.cum_throughput.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
