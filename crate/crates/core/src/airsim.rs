//! Frame-synchronous hidden-terminal simulator and its exact enumeration oracle.
//!
//! Each frame, every HT active on the channel independently attempts to
//! transmit with its transmit probability. Attempting HTs are then served in a
//! uniformly random priority order; an HT transmits only if no HT already
//! transmitting lies within the sensing radius. A client is blocked iff some
//! transmitting HT covers it.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hod::LatentModel;
use crate::law::AccessLaw;
use crate::model::{MeasurementLedger, Topology};

/// Maximum active HTs the bitmask simulator supports on one channel.
pub const MAX_SIM_HTS: usize = 64;
/// Enumeration bound of the exact oracle (HTs active on the channel).
pub const MAX_EXACT_HTS: usize = 20;
/// Enumeration bound of the exact oracle (clients in the queried subset).
pub const MAX_EXACT_CLIENTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub frame_index: u64,
    pub channel: usize,
    pub transmitting_hts: Vec<usize>,
    pub blocked_clients: Vec<usize>,
}

/// Per-channel view of a topology compiled into bitmasks over the active HTs.
#[derive(Debug, Clone)]
pub struct ChannelSimulator {
    channel: usize,
    /// Active HT ids; bit `k` of every mask refers to `hts[k]`.
    hts: Vec<usize>,
    probs: Vec<f64>,
    neighbours: Vec<u64>,
    /// Per client: mask of active HTs covering it.
    client_cover: Vec<u64>,
    has_sensing: bool,
    attempt_buf: Vec<usize>,
}

impl ChannelSimulator {
    pub fn new(t: &Topology, channel: usize) -> Result<Self> {
        if channel >= t.num_channels {
            return Err(invalid(format!("channel {channel} out of range (C = {})", t.num_channels)));
        }
        let hts = t.active_hts(channel);
        if hts.len() > MAX_SIM_HTS {
            return Err(Error::BoundExceeded(format!(
                "{} HTs active on channel {channel}; simulator supports {MAX_SIM_HTS}",
                hts.len()
            )));
        }
        let probs = hts.iter().map(|&h| t.hts[h].transmit_prob(channel)).collect();
        let neighbours: Vec<u64> = hts
            .iter()
            .map(|&a| {
                hts.iter()
                    .enumerate()
                    .filter(|&(_, &b)| t.senses(a, b, channel))
                    .fold(0u64, |m, (k, _)| m | 1 << k)
            })
            .collect();
        let client_cover = (0..t.num_clients())
            .map(|i| {
                hts.iter()
                    .enumerate()
                    .filter(|&(_, &h)| t.covers(h, i, channel))
                    .fold(0u64, |m, (k, _)| m | 1 << k)
            })
            .collect();
        let has_sensing = neighbours.iter().any(|&m| m != 0);
        Ok(Self {
            channel,
            hts,
            probs,
            neighbours,
            client_cover,
            has_sensing,
            attempt_buf: Vec::new(),
        })
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn active_hts(&self) -> &[usize] {
        &self.hts
    }

    pub fn num_clients(&self) -> usize {
        self.client_cover.len()
    }

    /// Mask of active HTs covering `client`.
    pub fn cover_mask(&self, client: usize) -> u64 {
        self.client_cover[client]
    }

    /// Draw one frame; returns the transmitting set as a mask over [`Self::active_hts`].
    pub fn sample_transmitters<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u64 {
        let mut attempts = 0u64;
        for (k, &p) in self.probs.iter().enumerate() {
            if rng.random::<f64>() < p {
                attempts |= 1 << k;
            }
        }
        if !self.has_sensing {
            return attempts;
        }
        self.attempt_buf.clear();
        self.attempt_buf
            .extend((0..self.hts.len()).filter(|k| attempts >> k & 1 == 1));
        self.attempt_buf.shuffle(rng);
        let mut transmitting = 0u64;
        for &k in &self.attempt_buf {
            if self.neighbours[k] & transmitting == 0 {
                transmitting |= 1 << k;
            }
        }
        transmitting
    }

    pub fn is_blocked(&self, transmitting: u64, client: usize) -> bool {
        self.client_cover[client] & transmitting != 0
    }

    pub fn outcome(&self, frame_index: u64, transmitting: u64) -> FrameOutcome {
        FrameOutcome {
            frame_index,
            channel: self.channel,
            transmitting_hts: (0..self.hts.len())
                .filter(|k| transmitting >> k & 1 == 1)
                .map(|k| self.hts[k])
                .collect(),
            blocked_clients: (0..self.num_clients())
                .filter(|&i| self.is_blocked(transmitting, i))
                .collect(),
        }
    }
}

/// Simulate one frame on channel `c`.
pub fn step_frame<R: Rng + ?Sized>(t: &Topology, c: usize, frame_index: u64, rng: &mut R) -> Result<FrameOutcome> {
    let mut sim = ChannelSimulator::new(t, c)?;
    let tx = sim.sample_transmitters(rng);
    Ok(sim.outcome(frame_index, tx))
}

/// Exact distribution of the transmitting HT set on one channel, as a sparse
/// list of atoms. Computed by enumerating attempt patterns and averaging the
/// CSMA outcome over priority orders within each connected component of the
/// attempting HTs' sensing graph.
#[derive(Debug, Clone)]
pub struct BlockingLaw {
    channel: usize,
    hts: Vec<usize>,
    client_cover: Vec<u64>,
    /// (transmitting mask, probability), sorted by mask.
    atoms: Vec<(u64, f64)>,
}

struct CsmaEnumerator<'a> {
    neighbours: &'a [u64],
    memo: HashMap<u64, Vec<(u64, f64)>>,
}

impl CsmaEnumerator<'_> {
    fn component_of(&self, set: u64, seed: usize) -> u64 {
        let mut comp = 1u64 << seed;
        let mut frontier = comp;
        while frontier != 0 {
            let k = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = self.neighbours[k] & set & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        comp
    }

    /// Distribution of the transmitting subset when exactly `set` attempts.
    fn outcomes(&mut self, set: u64) -> Vec<(u64, f64)> {
        let has_edge = bits(set).any(|k| self.neighbours[k] & set != 0);
        if !has_edge {
            return vec![(set, 1.0)];
        }
        if let Some(hit) = self.memo.get(&set) {
            return hit.clone();
        }
        let first = set.trailing_zeros() as usize;
        let comp = self.component_of(set, first);
        let result = if comp != set {
            let a = self.outcomes(comp);
            let b = self.outcomes(set & !comp);
            let mut out = Vec::with_capacity(a.len() * b.len());
            for &(ma, pa) in &a {
                for &(mb, pb) in &b {
                    out.push((ma | mb, pa * pb));
                }
            }
            out
        } else {
            // The first HT in a uniformly random order is uniform over the set; it
            // transmits and silences its neighbours, and the order of the rest stays uniform.
            let size = set.count_ones() as f64;
            let mut acc: HashMap<u64, f64> = HashMap::new();
            for k in bits(set) {
                let rest = set & !(self.neighbours[k] | 1 << k);
                for (m, p) in self.outcomes(rest) {
                    *acc.entry(m | 1 << k).or_insert(0.0) += p / size;
                }
            }
            let mut v: Vec<_> = acc.into_iter().collect();
            v.sort_unstable_by_key(|&(m, _)| m);
            v
        };
        self.memo.insert(set, result.clone());
        result
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let k = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(k)
        }
    })
}

impl BlockingLaw {
    pub fn new(t: &Topology, channel: usize) -> Result<Self> {
        let sim = ChannelSimulator::new(t, channel)?;
        let n = sim.hts.len();
        if n > MAX_EXACT_HTS {
            return Err(Error::BoundExceeded(format!(
                "{n} HTs active on channel {channel}; exact oracle supports {MAX_EXACT_HTS}"
            )));
        }
        let mut enumerator = CsmaEnumerator {
            neighbours: &sim.neighbours,
            memo: HashMap::new(),
        };
        let mut acc: HashMap<u64, f64> = HashMap::new();
        for attempts in 0u64..(1u64 << n) {
            let p: f64 = sim
                .probs
                .iter()
                .enumerate()
                .map(|(k, &q)| if attempts >> k & 1 == 1 { q } else { 1.0 - q })
                .product();
            if p == 0.0 {
                continue;
            }
            for (m, w) in enumerator.outcomes(attempts) {
                *acc.entry(m).or_insert(0.0) += p * w;
            }
        }
        let mut atoms: Vec<(u64, f64)> = acc.into_iter().filter(|&(_, p)| p > 0.0).collect();
        atoms.sort_unstable_by_key(|&(m, _)| m);
        Ok(Self {
            channel,
            hts: sim.hts,
            client_cover: sim.client_cover,
            atoms,
        })
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    /// Distinct transmitting sets with their probabilities, HT ids ascending.
    pub fn transmit_distribution(&self) -> Vec<(Vec<usize>, f64)> {
        self.atoms
            .iter()
            .map(|&(m, p)| (bits(m).map(|k| self.hts[k]).collect(), p))
            .collect()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// The law as a latent model whose states are the transmitting sets; every
    /// client's conditional access probability is 0 or 1.
    pub fn latent_model(&self) -> LatentModel {
        let lambda: Vec<f64> = self.atoms.iter().map(|&(_, p)| p).collect();
        let z: f64 = lambda.iter().sum();
        let p = self
            .client_cover
            .iter()
            .map(|&cover| {
                self.atoms
                    .iter()
                    .map(|&(tx, _)| if cover & tx == 0 { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        LatentModel {
            channel: self.channel,
            f: lambda.len(),
            lambda: lambda.iter().map(|l| l / z).collect(),
            p,
            fit: None,
            loss_trace: Vec::new(),
        }
    }

    /// Exact joint access distribution over `subset`.
    pub fn subset(&self, subset: &[usize]) -> Result<ExactJointDistribution> {
        check_subset(subset, self.client_cover.len())?;
        let mut probabilities = vec![0.0; 1 << subset.len()];
        for &(tx, p) in &self.atoms {
            let pattern = subset
                .iter()
                .enumerate()
                .filter(|&(_, &c)| self.client_cover[c] & tx == 0)
                .fold(0usize, |acc, (k, _)| acc | 1 << k);
            probabilities[pattern] += p;
        }
        Ok(ExactJointDistribution {
            channel: self.channel,
            clients: subset.to_vec(),
            probabilities,
        })
    }
}

impl AccessLaw for BlockingLaw {
    fn num_clients(&self) -> usize {
        self.client_cover.len()
    }

    fn joint(&self, access: &[usize], blocked: &[usize]) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(tx, _)| {
                access.iter().all(|&c| self.client_cover[c] & tx == 0)
                    && blocked.iter().all(|&c| self.client_cover[c] & tx != 0)
            })
            .map(|&(_, p)| p)
            .sum()
    }

    fn access_profile(&self, group: &[usize]) -> Vec<Vec<f64>> {
        let n = group.len();
        let mut profile = vec![vec![0.0; n.max(1)]; n];
        for &(tx, p) in &self.atoms {
            let acc: Vec<bool> = group.iter().map(|&c| self.client_cover[c] & tx == 0).collect();
            let count = acc.iter().filter(|&&a| a).count();
            for (k, &a) in acc.iter().enumerate() {
                if a {
                    profile[k][count - 1] += p;
                }
            }
        }
        profile
    }
}

fn check_subset(subset: &[usize], num_clients: usize) -> Result<()> {
    if subset.len() > MAX_EXACT_CLIENTS {
        return Err(Error::BoundExceeded(format!(
            "subset of {} clients; exact oracle supports {MAX_EXACT_CLIENTS}",
            subset.len()
        )));
    }
    for (k, &c) in subset.iter().enumerate() {
        if c >= num_clients {
            return Err(invalid(format!("client {c} out of range")));
        }
        if subset[..k].contains(&c) {
            return Err(invalid(format!("client {c} repeated in subset")));
        }
    }
    Ok(())
}

/// Ground-truth joint access distribution of a client subset on one channel.
///
/// `probabilities[pattern]` where bit `k` of `pattern` is 1 iff `clients[k]` can access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactJointDistribution {
    pub channel: usize,
    pub clients: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl ExactJointDistribution {
    /// Probability of one outcome; `access[k]` refers to `clients[k]`.
    pub fn prob(&self, access: &[bool]) -> f64 {
        let idx = access
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &a)| acc | (a as usize) << k);
        self.probabilities[idx]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Sum out the client at position `k`.
    pub fn marginalize(&self, k: usize) -> ExactJointDistribution {
        let n = self.clients.len();
        let mut out = vec![0.0; 1 << (n - 1)];
        for (pattern, &p) in self.probabilities.iter().enumerate() {
            let low = pattern & ((1 << k) - 1);
            let high = (pattern >> (k + 1)) << k;
            out[low | high] += p;
        }
        let mut clients = self.clients.clone();
        clients.remove(k);
        ExactJointDistribution {
            channel: self.channel,
            clients,
            probabilities: out,
        }
    }
}

/// Exact HOD of `subset` on channel `c`.
pub fn exact_joint(t: &Topology, c: usize, subset: &[usize]) -> Result<ExactJointDistribution> {
    check_subset(subset, t.num_clients())?;
    BlockingLaw::new(t, c)?.subset(subset)
}

/// Raw measurement of one scheduled set: `counts[pattern]` with the same pattern
/// convention as [`ExactJointDistribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessTrace {
    pub channel: usize,
    pub clients: Vec<usize>,
    pub frames: u64,
    pub counts: Vec<f64>,
}

impl AccessTrace {
    pub fn frequencies(&self) -> Vec<f64> {
        let f = self.frames.max(1) as f64;
        self.counts.iter().map(|c| c / f).collect()
    }

    /// Number of frames in which every scheduled client accessed.
    pub fn all_accessed(&self) -> f64 {
        *self.counts.last().unwrap_or(&0.0)
    }
}

/// Schedule `scheduled` jointly on channel `c` for `frames` frames and count access patterns.
pub fn schedule_and_observe<R: Rng + ?Sized>(
    t: &Topology,
    c: usize,
    scheduled: &[usize],
    frames: u64,
    rng: &mut R,
    ledger: &mut MeasurementLedger,
) -> Result<AccessTrace> {
    let mut sim = ChannelSimulator::new(t, c)?;
    observe_with(&mut sim, scheduled, frames, rng, ledger)
}

pub(crate) fn observe_with<R: Rng + ?Sized>(
    sim: &mut ChannelSimulator,
    scheduled: &[usize],
    frames: u64,
    rng: &mut R,
    ledger: &mut MeasurementLedger,
) -> Result<AccessTrace> {
    if scheduled.is_empty() {
        return Err(invalid("scheduled set must be non-empty"));
    }
    check_subset(scheduled, sim.num_clients())?;
    let covers: Vec<u64> = scheduled.iter().map(|&i| sim.cover_mask(i)).collect();
    let mut counts = vec![0u64; 1 << scheduled.len()];
    for _ in 0..frames {
        let tx = sim.sample_transmitters(rng);
        let pattern = covers
            .iter()
            .enumerate()
            .filter(|&(_, &m)| m & tx == 0)
            .fold(0usize, |acc, (k, _)| acc | 1 << k);
        counts[pattern] += 1;
    }
    let trace = AccessTrace {
        channel: sim.channel(),
        clients: scheduled.to_vec(),
        frames,
        counts: counts.into_iter().map(|c| c as f64).collect(),
    };
    ledger.record(scheduled, sim.channel(), frames, trace.all_accessed());
    Ok(trace)
}

fn pattern_string(pattern: usize, n: usize) -> String {
    (0..n).map(|k| if pattern >> k & 1 == 1 { '1' } else { '0' }).collect()
}

/// Write traces as CSV rows `(channel, client_set, pattern, count)`.
/// `pattern` lists one character per client in `client_set` order, `1` meaning access.
pub fn write_traces_csv<W: Write>(traces: &[AccessTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["channel", "client_set", "pattern", "count"])?;
    for tr in traces {
        let set: Vec<String> = tr.clients.iter().map(|c| c.to_string()).collect();
        let set = set.join(";");
        for (pattern, count) in tr.counts.iter().enumerate() {
            w.write_record([
                tr.channel.to_string(),
                set.clone(),
                pattern_string(pattern, tr.clients.len()),
                count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
