//! Measurement phase: first-order channel access, K-means client clustering,
//! and pairwise measurement of cluster representatives.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::airsim::{observe_with, AccessTrace, BlockingLaw, ChannelSimulator};
use crate::error::{invalid, Error, Result};
use crate::model::{MeasurementLedger, Topology};
use crate::stream_rng;

/// How measurements are produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Frame-by-frame simulation.
    #[default]
    MonteCarlo,
    /// Infinite-sample limit: counts are `frames` times the exact probabilities.
    Exact,
}

/// Source of access traces for one topology. Owns the single random stream the
/// measurement phases consume, plus the overhead ledger.
pub struct Measurer<'a, R: Rng> {
    topology: &'a Topology,
    sampling: Sampling,
    rng: R,
    sims: Vec<ChannelSimulator>,
    laws: Vec<Option<BlockingLaw>>,
    pub ledger: MeasurementLedger,
}

impl<'a, R: Rng> Measurer<'a, R> {
    pub fn new(topology: &'a Topology, sampling: Sampling, rng: R) -> Result<Self> {
        let sims = (0..topology.num_channels)
            .map(|c| ChannelSimulator::new(topology, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            topology,
            sampling,
            rng,
            laws: vec![None; topology.num_channels],
            sims,
            ledger: MeasurementLedger::default(),
        })
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    /// Schedule `clients` together on `channel` for `frames` frames.
    pub fn observe(&mut self, channel: usize, clients: &[usize], frames: u64) -> Result<AccessTrace> {
        if channel >= self.sims.len() {
            return Err(invalid(format!("channel {channel} out of range")));
        }
        match self.sampling {
            Sampling::MonteCarlo => observe_with(&mut self.sims[channel], clients, frames, &mut self.rng, &mut self.ledger),
            Sampling::Exact => {
                if clients.is_empty() {
                    return Err(invalid("scheduled set must be non-empty"));
                }
                if self.laws[channel].is_none() {
                    self.laws[channel] = Some(BlockingLaw::new(self.topology, channel)?);
                }
                let dist = self.laws[channel].as_ref().unwrap().subset(clients)?;
                let f = frames as f64;
                let trace = AccessTrace {
                    channel,
                    clients: clients.to_vec(),
                    frames,
                    counts: dist.probabilities.iter().map(|p| p * f).collect(),
                };
                self.ledger.record(clients, channel, frames, trace.all_accessed());
                Ok(trace)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessVector {
    pub client: usize,
    /// `a[c]`: estimated probability the client can access channel `c`.
    pub a: Vec<f64>,
}

/// Schedule every client alone on every channel. Adds `C * N` sampling units.
pub fn measure_first_order<R: Rng>(m: &mut Measurer<'_, R>, frames_per_sample: u64) -> Result<Vec<AccessVector>> {
    if frames_per_sample == 0 {
        return Err(invalid("frames_per_sample must be at least 1"));
    }
    let n = m.topology().num_clients();
    let c = m.topology().num_channels;
    let mut vectors: Vec<AccessVector> = (0..n).map(|client| AccessVector { client, a: vec![0.0; c] }).collect();
    for ch in 0..c {
        for (i, v) in vectors.iter_mut().enumerate() {
            let tr = m.observe(ch, &[i], frames_per_sample)?;
            v.a[ch] = tr.frequencies()[1];
        }
    }
    Ok(vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Cluster index of each client.
    pub assignment: Vec<usize>,
    /// Representative client of each cluster.
    pub representatives: Vec<usize>,
    /// K-means objective after each iteration.
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}

impl Clustering {
    /// Every client in its own cluster and its own representative.
    pub fn singletons(n: usize) -> Self {
        Self {
            k: n,
            assignment: (0..n).collect(),
            representatives: (0..n).collect(),
            objective_trace: Vec::new(),
        }
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == cluster).collect()
    }

    pub fn representative_of(&self, client: usize) -> usize {
        self.representatives[self.assignment[client]]
    }

    pub fn is_representative(&self, client: usize) -> bool {
        self.representative_of(client) == client
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_TOL: f64 = 1e-6;

/// Lloyd's K-means with seeded farthest-point initialization. Returns the assignment and
/// the objective after each iteration. Empty clusters are refilled with the point farthest
/// from its centroid, so every cluster ends up non-empty.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(invalid(format!("K = {k} must lie in [1, {n}]")));
    }
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let next = (0..n)
            .filter(|i| !chosen.contains(i))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if nearest[b] >= nearest[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n leaves a candidate");
        chosen.push(next);
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    let mut centroids: Vec<Vec<f64>> = chosen.iter().map(|&i| points[i].clone()).collect();
    let mut assignment = vec![0usize; n];
    let mut trace = Vec::new();

    for _ in 0..KMEANS_MAX_ITERS {
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (u, c) in centroids.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best_d {
                    best = u;
                    best_d = d;
                }
            }
            assignment[i] = best;
        }
        refill_empty(points, &centroids, &mut assignment, k);

        let dim = points[0].len();
        let mut moved = 0.0f64;
        for (u, c) in centroids.iter_mut().enumerate() {
            let mut sum = vec![0.0; dim];
            let mut count = 0usize;
            for (p, _) in points.iter().zip(&assignment).filter(|&(_, &a)| a == u) {
                for (s, x) in sum.iter_mut().zip(p) {
                    *s += x;
                }
                count += 1;
            }
            let new: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
            moved = moved.max(sq_dist(&new, c).sqrt());
            *c = new;
        }
        trace.push(
            points
                .iter()
                .zip(&assignment)
                .map(|(p, &a)| sq_dist(p, &centroids[a]))
                .sum(),
        );
        if moved < KMEANS_TOL {
            break;
        }
    }
    Ok((assignment, trace))
}

fn refill_empty(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignment.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .fold(None, |best: Option<(usize, f64)>, i| {
                let d = sq_dist(&points[i], &centroids[assignment[i]]);
                match best {
                    Some((_, bd)) if bd >= d => best,
                    _ => Some((i, d)),
                }
            })
            .map(|(i, _)| i)
            .expect("n >= k leaves a donor");
        assignment[donor] = empty;
    }
}

/// Cluster clients by their channel-access vectors and pick one uniformly random
/// representative per cluster.
pub fn cluster_clients<R: Rng + ?Sized>(vectors: &[AccessVector], k: usize, rng: &mut R) -> Result<Clustering> {
    let n = vectors.len();
    if k > n {
        return Err(invalid(format!("K = {k} exceeds N = {n}")));
    }
    if k == n {
        return Ok(Clustering::singletons(n));
    }
    let points: Vec<Vec<f64>> = vectors.iter().map(|v| v.a.clone()).collect();
    let (assignment, objective_trace) = kmeans(&points, k, rng)?;
    let mut clustering = Clustering {
        k,
        assignment,
        representatives: Vec::with_capacity(k),
        objective_trace,
    };
    for u in 0..k {
        let members = clustering.members(u);
        clustering.representatives.push(members[rng.random_range(0..members.len())]);
    }
    Ok(clustering)
}

/// A measured or modelled 2x2 joint access table. `p[a][b]` is the probability that the first
/// client's access indicator is `a` and the second's is `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub i: usize,
    pub j: usize,
    pub p: [[f64; 2]; 2],
}

impl PairTable {
    pub fn transposed(&self) -> PairTable {
        PairTable {
            i: self.j,
            j: self.i,
            p: [[self.p[0][0], self.p[1][0]], [self.p[0][1], self.p[1][1]]],
        }
    }

    pub fn marginal_i(&self) -> f64 {
        self.p[1][0] + self.p[1][1]
    }

    pub fn marginal_j(&self) -> f64 {
        self.p[0][1] + self.p[1][1]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    fn from_trace(tr: &AccessTrace) -> PairTable {
        let f = tr.frequencies();
        PairTable {
            i: tr.clients[0],
            j: tr.clients[1],
            p: [[f[0b00], f[0b10]], [f[0b01], f[0b11]]],
        }
    }
}

/// Pairwise tables on one channel, keyed by unordered client pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPairs {
    pub channel: usize,
    /// Sorted by `(i, j)` with `i < j`.
    pub tables: Vec<PairTable>,
}

impl ChannelPairs {
    fn new(channel: usize, mut tables: Vec<PairTable>) -> Self {
        let mut tables: Vec<PairTable> = tables
            .drain(..)
            .map(|t| if t.i > t.j { t.transposed() } else { t })
            .collect();
        tables.sort_by_key(|t| (t.i, t.j));
        Self { channel, tables }
    }

    /// Table oriented as `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Result<PairTable> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let t = self
            .tables
            .binary_search_by_key(&(a, b), |t| (t.i, t.j))
            .map(|k| self.tables[k])
            .map_err(|_| Error::MissingPair(i, j))?;
        Ok(if i < j { t } else { t.transposed() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEstimates {
    pub channels: Vec<ChannelPairs>,
}

impl PairwiseEstimates {
    pub fn channel(&self, c: usize) -> Result<&ChannelPairs> {
        self.channels
            .iter()
            .find(|p| p.channel == c)
            .ok_or_else(|| invalid(format!("no pairwise estimates for channel {c}")))
    }
}

/// Jointly schedule every representative pair on every channel.
/// Adds `C * K(K-1)/2` sampling units.
pub fn measure_pairwise<R: Rng>(
    m: &mut Measurer<'_, R>,
    clustering: &Clustering,
    frames_per_sample: u64,
) -> Result<PairwiseEstimates> {
    if clustering.k < 2 {
        return Err(invalid("pairwise measurement needs K >= 2"));
    }
    if frames_per_sample == 0 {
        return Err(invalid("frames_per_sample must be at least 1"));
    }
    let reps = &clustering.representatives;
    let mut channels = Vec::new();
    for ch in 0..m.topology().num_channels {
        let mut tables = Vec::with_capacity(reps.len() * (reps.len() - 1) / 2);
        for u in 0..reps.len() {
            for v in u + 1..reps.len() {
                let tr = m.observe(ch, &[reps[u], reps[v]], frames_per_sample)?;
                tables.push(PairTable::from_trace(&tr));
            }
        }
        channels.push(ChannelPairs::new(ch, tables));
    }
    Ok(PairwiseEstimates { channels })
}

/// Extend representative tables to every client pair. Cross-cluster pairs copy the
/// representatives' table; same-cluster pairs get the perfectly correlated table of the
/// cluster's mean first-order access probability.
pub fn expand_to_clients(
    rep_pairs: Option<&PairwiseEstimates>,
    clustering: &Clustering,
    vectors: &[AccessVector],
) -> Result<PairwiseEstimates> {
    let n = clustering.assignment.len();
    if vectors.len() != n {
        return Err(invalid("access vectors and clustering disagree on N"));
    }
    let num_channels = vectors.first().map_or(0, |v| v.a.len());
    let mut channels = Vec::with_capacity(num_channels);
    for ch in 0..num_channels {
        let cluster_mean: Vec<f64> = (0..clustering.k)
            .map(|u| {
                let m = clustering.members(u);
                m.iter().map(|&i| vectors[i].a[ch]).sum::<f64>() / m.len() as f64
            })
            .collect();
        let reps = match rep_pairs {
            Some(p) => Some(p.channel(ch)?),
            None => None,
        };
        let mut tables = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let (u, v) = (clustering.assignment[i], clustering.assignment[j]);
                let p = if u == v {
                    let a = cluster_mean[u];
                    [[1.0 - a, 0.0], [0.0, a]]
                } else {
                    let reps = reps.ok_or(Error::MissingPair(i, j))?;
                    reps.get(clustering.representatives[u], clustering.representatives[v])?.p
                };
                tables.push(PairTable { i, j, p });
            }
        }
        channels.push(ChannelPairs::new(ch, tables));
    }
    Ok(PairwiseEstimates { channels })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TomographyParams {
    pub frames_per_sample: u64,
    /// Cluster count; `None` means `max(2, N / C)` capped at `N`.
    pub k: Option<usize>,
    pub sampling: Sampling,
}

impl Default for TomographyParams {
    fn default() -> Self {
        Self {
            frames_per_sample: 1000,
            k: None,
            sampling: Sampling::MonteCarlo,
        }
    }
}

pub fn default_k(n: usize, c: usize) -> usize {
    (n / c.max(1)).max(2).min(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub vectors: Vec<AccessVector>,
    pub clustering: Clustering,
    pub rep_pairwise: Option<PairwiseEstimates>,
    /// Tables for every client pair on every channel.
    pub pairwise: PairwiseEstimates,
    pub first_order_units: u64,
    pub pairwise_units: u64,
    pub ledger: MeasurementLedger,
}

const MEASURE_STREAM: u64 = 1;
const CLUSTER_STREAM: u64 = 2;

/// Run both measurement phases on `t`, seeded by `seed`.
pub fn run_tomography(t: &Topology, params: &TomographyParams, seed: u64) -> Result<TomographyResult> {
    let mut m = Measurer::new(t, params.sampling, stream_rng(seed, MEASURE_STREAM))?;
    let vectors = measure_first_order(&mut m, params.frames_per_sample)?;
    let first_order_units = m.ledger.sampling_units;
    let k = params.k.unwrap_or_else(|| default_k(t.num_clients(), t.num_channels));
    let clustering = cluster_clients(&vectors, k, &mut stream_rng(seed, CLUSTER_STREAM))?;
    let rep_pairwise = if clustering.k >= 2 {
        Some(measure_pairwise(&mut m, &clustering, params.frames_per_sample)?)
    } else {
        None
    };
    let pairwise_units = m.ledger.sampling_units - first_order_units;
    let pairwise = expand_to_clients(rep_pairwise.as_ref(), &clustering, &vectors)?;
    Ok(TomographyResult {
        vectors,
        clustering,
        rep_pairwise,
        pairwise,
        first_order_units,
        pairwise_units,
        ledger: m.ledger,
    })
}

/// CSV rows `(client, channel, access_prob)`.
pub fn write_access_vectors_csv<W: Write>(vectors: &[AccessVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["client", "channel", "access_prob"])?;
    for v in vectors {
        for (c, a) in v.a.iter().enumerate() {
            w.write_record([v.client.to_string(), c.to_string(), a.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV rows `(channel, i, j, p00, p01, p10, p11)`.
pub fn write_pairwise_csv<W: Write>(est: &PairwiseEstimates, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["channel", "i", "j", "p00", "p01", "p10", "p11"])?;
    for ch in &est.channels {
        for t in &ch.tables {
            w.write_record([
                ch.channel.to_string(),
                t.i.to_string(),
                t.j.to_string(),
                t.p[0][0].to_string(),
                t.p[0][1].to_string(),
                t.p[1][0].to_string(),
                t.p[1][1].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airsim::exact_joint;
    use crate::model::{generate_topology, tiny_topology, TopologyParams};

    fn three_sigma(est: f64, frames: f64, p: f64) -> bool {
        (est - p).abs() <= 3.0 * (p * (1.0 - p) / frames).sqrt() + 1e-12
    }

    #[test]
    fn uncovered_client_has_full_access_and_covered_one_matches_bernoulli() {
        let t = tiny_topology(&[(-30.0, 0.0), (60.0, 0.0)], &[(100.0, 0.0, 0.3, 50.0)]);
        let mut m = Measurer::new(&t, Sampling::MonteCarlo, stream_rng(1, 0)).unwrap();
        let v = measure_first_order(&mut m, 5000).unwrap();
        assert_eq!(v[0].a[0], 1.0);
        assert!(three_sigma(v[1].a[0], 5000.0, 0.7), "{}", v[1].a[0]);
    }

    #[test]
    fn ledger_units_follow_closed_forms() {
        let params = TopologyParams { num_clients: 10, num_channels: 3, ..Default::default() };
        let t = generate_topology(&params, 3).unwrap();
        let tp = TomographyParams { frames_per_sample: 10, k: Some(5), ..Default::default() };
        let r = run_tomography(&t, &tp, 3).unwrap();
        assert_eq!(r.first_order_units, 30);
        assert_eq!(r.pairwise_units, 30);
        assert_eq!(r.ledger.total_measurement_frames, 600);
    }

    #[test]
    fn identical_vectors_share_a_cluster() {
        let vecs = vec![
            AccessVector { client: 0, a: vec![0.7, 0.2] },
            AccessVector { client: 1, a: vec![0.7, 0.2] },
            AccessVector { client: 2, a: vec![0.1, 0.9] },
            AccessVector { client: 3, a: vec![1.0, 1.0] },
        ];
        for k in 1..4 {
            for seed in 0..10 {
                let c = cluster_clients(&vecs, k, &mut stream_rng(seed, 0)).unwrap();
                assert_eq!(c.assignment[0], c.assignment[1], "k={k} seed={seed}");
                assert!(c.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            }
        }
        let c = cluster_clients(&vecs, 4, &mut stream_rng(0, 0)).unwrap();
        assert_eq!(c.representatives, vec![0, 1, 2, 3]);
        assert!(cluster_clients(&vecs, 5, &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn every_cluster_non_empty_even_with_duplicates() {
        let vecs: Vec<_> = (0..6).map(|client| AccessVector { client, a: vec![0.5] }).collect();
        let c = cluster_clients(&vecs, 3, &mut stream_rng(4, 0)).unwrap();
        for u in 0..3 {
            let m = c.members(u);
            assert!(!m.is_empty());
            assert!(m.contains(&c.representatives[u]));
        }
    }

    #[test]
    fn pair_tables_reflect_shared_and_disjoint_hts() {
        // Clients 0 and 1 share one HT; client 2 sits under a separate, far HT.
        let t = tiny_topology(
            &[(60.0, 5.0), (60.0, -5.0), (-60.0, 0.0)],
            &[(100.0, 0.0, 0.4, 50.0), (-100.0, 0.0, 0.6, 50.0)],
        );
        let mut m = Measurer::new(&t, Sampling::MonteCarlo, stream_rng(2, 0)).unwrap();
        let cl = Clustering::singletons(3);
        let est = measure_pairwise(&mut m, &cl, 4000).unwrap();
        let ch = est.channel(0).unwrap();
        let shared = ch.get(0, 1).unwrap();
        assert_eq!(shared.p[1][0], 0.0);
        assert_eq!(shared.p[0][1], 0.0);
        let indep = ch.get(0, 2).unwrap();
        for (a, pa) in [(0, 0.4), (1, 0.6)] {
            for (b, pb) in [(0, 0.6), (1, 0.4)] {
                assert!(three_sigma(indep.p[a][b], 4000.0, pa * pb), "{a}{b}: {}", indep.p[a][b]);
            }
        }
        assert_eq!(m.ledger.sampling_units, 3);
    }

    #[test]
    fn exact_sampling_reproduces_the_oracle() {
        let t = tiny_topology(
            &[(60.0, 5.0), (60.0, -25.0), (-60.0, 0.0)],
            &[(100.0, 0.0, 0.4, 50.0), (100.0, -40.0, 0.7, 40.0)],
        );
        let mut m = Measurer::new(&t, Sampling::Exact, stream_rng(0, 0)).unwrap();
        let est = measure_pairwise(&mut m, &Clustering::singletons(3), 1000).unwrap();
        let got = est.channel(0).unwrap().get(1, 0).unwrap();
        let truth = exact_joint(&t, 0, &[1, 0]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((got.p[a][b] - truth.prob(&[a == 1, b == 1])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expansion_rules() {
        let vectors = vec![
            AccessVector { client: 0, a: vec![0.75] },
            AccessVector { client: 1, a: vec![0.75] },
            AccessVector { client: 2, a: vec![0.4] },
        ];
        let cl = Clustering { k: 2, assignment: vec![0, 0, 1], representatives: vec![0, 2], objective_trace: vec![] };
        let rep = PairwiseEstimates {
            channels: vec![ChannelPairs::new(0, vec![PairTable { i: 0, j: 2, p: [[0.1, 0.2], [0.5, 0.2]] }])],
        };
        let all = expand_to_clients(Some(&rep), &cl, &vectors).unwrap();
        let ch = all.channel(0).unwrap();
        assert_eq!(ch.get(0, 1).unwrap().p, [[0.25, 0.0], [0.0, 0.75]]);
        assert_eq!(ch.get(1, 2).unwrap().p, [[0.1, 0.2], [0.5, 0.2]]);
        assert_eq!(ch.get(0, 2).unwrap().p, [[0.1, 0.2], [0.5, 0.2]]);
        assert_eq!(ch.get(2, 1).unwrap().p, [[0.1, 0.5], [0.2, 0.2]]);
        for t in &ch.tables {
            assert!((t.total() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn default_k_rule() {
        assert_eq!(default_k(20, 1), 20);
        assert_eq!(default_k(20, 3), 6);
        assert_eq!(default_k(3, 3), 2);
        assert_eq!(default_k(1, 1), 1);
    }
}
