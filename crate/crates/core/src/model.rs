//! Spatial layout of a cell: base station, clients, hidden terminals and the
//! coverage/sensing relations derived from them.
//!
//! Everything here is immutable once built. A [`Topology`] is a pure function
//! of its [`TopologyParams`] and seed, and it round-trips through a versioned
//! JSON document so experiments can be replayed.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Version tag written into every topology document.
pub const TOPOLOGY_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    /// Meters.
    pub x: f64,
    /// Meters.
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Client {
    pub id: usize,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenTerminal {
    pub id: usize,
    pub position: Point,
    /// Per-channel transmission attempt probability; length equals the channel count.
    pub transmit_prob: Vec<f64>,
    /// Meters. A client strictly inside this radius is blocked while the HT transmits.
    pub impact_radius: f64,
    /// Sorted channel indices on which this HT operates.
    pub active_channels: Vec<usize>,
}

impl HiddenTerminal {
    pub fn is_active(&self, channel: usize) -> bool {
        self.active_channels.binary_search(&channel).is_ok()
    }

    pub fn transmit_prob(&self, channel: usize) -> f64 {
        self.transmit_prob.get(channel).copied().unwrap_or(0.0)
    }

    /// Strict-inequality disk coverage on an active channel.
    pub fn covers(&self, point: &Point, channel: usize) -> bool {
        self.is_active(channel) && self.position.distance(point) < self.impact_radius
    }
}

/// Immutable cell layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub schema: u32,
    pub bs_position: Point,
    pub bs_range: f64,
    pub min_ht_bs_distance: f64,
    pub clients: Vec<Client>,
    pub hts: Vec<HiddenTerminal>,
    pub num_channels: usize,
    pub ht_sense_radius: f64,
    pub seed: u64,
}

/// How HTs are assigned to channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelActivity {
    /// Each HT is active on a uniformly chosen non-empty subset of channels.
    #[default]
    RandomSubset,
    /// `num_hts` HTs are placed per channel, each active on that channel only.
    PerChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopologyParams {
    pub num_clients: usize,
    pub num_channels: usize,
    pub num_hts: usize,
    pub bs_range: f64,
    pub min_ht_bs_distance: f64,
    pub impact_radius: f64,
    pub ht_sense_radius: f64,
    pub transmit_prob_min: f64,
    pub transmit_prob_max: f64,
    /// Draw an independent transmit probability per channel instead of one shared value.
    pub per_channel_transmit_prob: bool,
    pub channel_activity: ChannelActivity,
    pub max_attempts: usize,
}

impl Default for TopologyParams {
    fn default() -> Self {
        Self {
            num_clients: 20,
            num_channels: 1,
            num_hts: 4,
            bs_range: 70.0,
            min_ht_bs_distance: 70.0,
            impact_radius: 50.0,
            ht_sense_radius: 50.0,
            transmit_prob_min: 0.2,
            transmit_prob_max: 0.8,
            per_channel_transmit_prob: false,
            channel_activity: ChannelActivity::RandomSubset,
            max_attempts: 100_000,
        }
    }
}

impl TopologyParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_clients == 0 {
            return Err(invalid("num_clients must be >= 1"));
        }
        if self.num_channels == 0 {
            return Err(invalid("num_channels must be >= 1"));
        }
        for (name, v) in [
            ("bs_range", self.bs_range),
            ("impact_radius", self.impact_radius),
            ("ht_sense_radius", self.ht_sense_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and > 0")));
            }
        }
        if !(self.min_ht_bs_distance.is_finite() && self.min_ht_bs_distance >= 0.0) {
            return Err(invalid("min_ht_bs_distance must be finite and >= 0"));
        }
        let (lo, hi) = (self.transmit_prob_min, self.transmit_prob_max);
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(invalid("transmit probability range must satisfy 0 <= min <= max <= 1"));
        }
        if self.max_attempts == 0 {
            return Err(invalid("max_attempts must be >= 1"));
        }
        Ok(())
    }

    /// Outer radius of the HT placement annulus.
    pub fn ht_outer_radius(&self) -> f64 {
        self.bs_range + self.impact_radius
    }
}

/// Rejection-sample a point uniformly from the annulus `[inner, outer)` around `center`.
fn sample_annulus(
    rng: &mut ChaCha8Rng,
    center: Point,
    inner: f64,
    outer: f64,
    max_attempts: usize,
    what: &str,
) -> Result<Point> {
    for _ in 0..max_attempts {
        let x = rng.random_range(-outer..outer);
        let y = rng.random_range(-outer..outer);
        let r = x.hypot(y);
        if r >= inner && r < outer {
            return Ok(Point::new(center.x + x, center.y + y));
        }
    }
    Err(Error::PlacementFailed {
        what: what.to_string(),
        attempts: max_attempts,
    })
}

/// Generate a random topology. Deterministic in `(params, seed)`.
pub fn generate_topology(params: &TopologyParams, seed: u64) -> Result<Topology> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bs = Point::ORIGIN;

    let clients = (0..params.num_clients)
        .map(|id| {
            sample_annulus(&mut rng, bs, 0.0, params.bs_range, params.max_attempts, "client")
                .map(|position| Client { id, position })
        })
        .collect::<Result<Vec<_>>>()?;

    let c = params.num_channels;
    let plan: Vec<Option<usize>> = match params.channel_activity {
        ChannelActivity::RandomSubset => vec![None; params.num_hts],
        ChannelActivity::PerChannel => (0..c)
            .flat_map(|ch| std::iter::repeat_n(Some(ch), params.num_hts))
            .collect(),
    };

    let mut hts = Vec::with_capacity(plan.len());
    for (id, fixed_channel) in plan.into_iter().enumerate() {
        let position = sample_annulus(
            &mut rng,
            bs,
            params.min_ht_bs_distance,
            params.ht_outer_radius(),
            params.max_attempts,
            "hidden terminal",
        )?;
        let active_channels = match fixed_channel {
            Some(ch) => vec![ch],
            None => loop {
                let chosen: Vec<usize> = (0..c).filter(|_| rng.random_bool(0.5)).collect();
                if !chosen.is_empty() {
                    break chosen;
                }
            },
        };
        let (lo, hi) = (params.transmit_prob_min, params.transmit_prob_max);
        let draw = |rng: &mut ChaCha8Rng| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let transmit_prob = if params.per_channel_transmit_prob {
            (0..c).map(|_| draw(&mut rng)).collect()
        } else {
            vec![draw(&mut rng); c]
        };
        hts.push(HiddenTerminal {
            id,
            position,
            transmit_prob,
            impact_radius: params.impact_radius,
            active_channels,
        });
    }

    let topology = Topology {
        schema: TOPOLOGY_SCHEMA,
        bs_position: bs,
        bs_range: params.bs_range,
        min_ht_bs_distance: params.min_ht_bs_distance,
        clients,
        hts,
        num_channels: c,
        ht_sense_radius: params.ht_sense_radius,
        seed,
    };
    topology.validate()?;
    Ok(topology)
}

impl Topology {
    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    /// Checks every structural invariant. Hand-built and deserialized topologies go through here.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTopology(m));
        if self.schema != TOPOLOGY_SCHEMA {
            return Err(Error::Schema {
                found: self.schema,
                expected: TOPOLOGY_SCHEMA,
            });
        }
        if self.num_channels == 0 {
            return bad("num_channels must be >= 1".into());
        }
        if !self.bs_position.is_finite() || !(self.bs_range > 0.0) {
            return bad("base station position/range must be finite and positive".into());
        }
        if !(self.ht_sense_radius >= 0.0) {
            return bad("ht_sense_radius must be >= 0".into());
        }
        for (idx, c) in self.clients.iter().enumerate() {
            if c.id != idx {
                return bad(format!("client ids must be dense; found {} at {idx}", c.id));
            }
            if !c.position.is_finite() {
                return bad(format!("client {idx} has non-finite position"));
            }
            if c.position.distance(&self.bs_position) > self.bs_range {
                return bad(format!("client {idx} lies outside the base station range"));
            }
        }
        for (idx, h) in self.hts.iter().enumerate() {
            if h.id != idx {
                return bad(format!("hidden terminal ids must be dense; found {} at {idx}", h.id));
            }
            if !h.position.is_finite() {
                return bad(format!("hidden terminal {idx} has non-finite position"));
            }
            if !(h.impact_radius > 0.0 && h.impact_radius.is_finite()) {
                return bad(format!("hidden terminal {idx} has non-positive impact radius"));
            }
            if h.transmit_prob.len() != self.num_channels {
                return bad(format!("hidden terminal {idx}: transmit_prob length mismatch"));
            }
            if h.transmit_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad(format!("hidden terminal {idx}: transmit_prob outside [0,1]"));
            }
            if h.active_channels.windows(2).any(|w| w[0] >= w[1])
                || h.active_channels.iter().any(|&c| c >= self.num_channels)
            {
                return bad(format!("hidden terminal {idx}: active_channels must be sorted, unique, < C"));
            }
            if h.position.distance(&self.bs_position) < self.min_ht_bs_distance {
                return bad(format!("hidden terminal {idx} is closer than min_ht_bs_distance to the BS"));
            }
        }
        Ok(())
    }

    /// Does HT `ht` block client `client` on `channel` when it transmits?
    pub fn covers(&self, ht: usize, client: usize, channel: usize) -> bool {
        self.hts[ht].covers(&self.clients[client].position, channel)
    }

    /// Do HTs `a` and `b` carrier-sense each other on `channel`?
    pub fn senses(&self, a: usize, b: usize, channel: usize) -> bool {
        if a == b {
            return false;
        }
        let (ha, hb) = (&self.hts[a], &self.hts[b]);
        ha.is_active(channel)
            && hb.is_active(channel)
            && ha.position.distance(&hb.position) < self.ht_sense_radius
    }

    /// HT indices active on `channel`, ascending.
    pub fn active_hts(&self, channel: usize) -> Vec<usize> {
        self.hts
            .iter()
            .filter(|h| h.is_active(channel))
            .map(|h| h.id)
            .collect()
    }

    /// HTs on `channel` that cover at least one client.
    pub fn impacting_hts(&self, channel: usize) -> Vec<usize> {
        self.active_hts(channel)
            .into_iter()
            .filter(|&h| (0..self.num_clients()).any(|i| self.covers(h, i, channel)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Topology = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Client → sorted list of HTs covering it on `channel`.
pub fn coverage_map(t: &Topology, channel: usize) -> Result<Vec<Vec<usize>>> {
    if channel >= t.num_channels {
        return Err(invalid(format!("channel {channel} out of range (C = {})", t.num_channels)));
    }
    Ok((0..t.num_clients())
        .map(|i| {
            (0..t.hts.len())
                .filter(|&h| t.covers(h, i, channel))
                .collect()
        })
        .collect())
}

/// Counters for one measured (client set, channel) key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub scheduled_frames: u64,
    /// Frames (possibly fractional in exact mode) in which every scheduled client accessed.
    pub accessed_frames: f64,
    /// Number of sampling units (scheduling events) recorded under this key.
    pub samples: u64,
}

/// Overhead bookkeeping for the measurement phases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementLedger {
    pub entries: BTreeMap<String, LedgerEntry>,
    pub sampling_units: u64,
    pub total_measurement_frames: u64,
}

impl MeasurementLedger {
    pub fn key(clients: &[usize], channel: usize) -> String {
        let ids: Vec<String> = clients.iter().map(|c| c.to_string()).collect();
        format!("c{channel}:{}", ids.join(";"))
    }

    pub fn record(&mut self, clients: &[usize], channel: usize, frames: u64, all_accessed: f64) {
        debug_assert!(all_accessed <= frames as f64 + 1e-9);
        let e = self.entries.entry(Self::key(clients, channel)).or_default();
        e.scheduled_frames += frames;
        e.accessed_frames += all_accessed.clamp(0.0, frames as f64);
        e.samples += 1;
        self.sampling_units += 1;
        self.total_measurement_frames += frames;
    }

    /// Ledger delta `self - earlier`, as sampling units.
    pub fn units_since(&self, earlier: &MeasurementLedger) -> u64 {
        self.sampling_units - earlier.sampling_units
    }
}

#[cfg(test)]
pub(crate) use tests::tiny as tiny_topology;
