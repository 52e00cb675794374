//! Interference blueprinting: infer how many hidden terminals act on a channel and
//! which representative clients each one impacts.
//!
//! Clients are first grouped by their joint access vectors (DBSCAN), a dependency graph
//! is built over the group representatives, and cliques of that graph are visited in
//! order of size. A clique becomes a new HT when its members are blocked together
//! (given every other representative accesses) more often than the already-found
//! groups explain.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hod::LatentModel;
use crate::law::AccessLaw;
use crate::model::Topology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlueprintParams {
    /// Dependency edge when `|P(i,j) - P(i)P(j)|` exceeds this.
    pub eps_dep: f64,
    /// Minimum conditional blocking probability of a new HT group.
    pub eps_ht: f64,
    /// Multiplicative margin over the product of already-found groups.
    pub delta: f64,
    /// Conditioning events rarer than this are skipped.
    pub eps_cond: f64,
    pub max_clique: usize,
    /// DBSCAN radius as a fraction of the median pairwise distance.
    pub dbscan_eps_scale: f64,
    /// Distances at or below this are ties and left out of the median.
    pub dbscan_tie_distance: f64,
    pub dbscan_min_pts: usize,
}

impl Default for BlueprintParams {
    fn default() -> Self {
        Self {
            eps_dep: 0.02,
            eps_ht: 0.02,
            delta: 0.1,
            eps_cond: 1e-4,
            max_clique: 4,
            dbscan_eps_scale: 0.1,
            dbscan_tie_distance: 1e-6,
            dbscan_min_pts: 2,
        }
    }
}

impl BlueprintParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_dep", self.eps_dep),
            ("eps_ht", self.eps_ht),
            ("delta", self.delta),
            ("eps_cond", self.eps_cond),
            ("dbscan_eps_scale", self.dbscan_eps_scale),
            ("dbscan_tie_distance", self.dbscan_tie_distance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and non-negative")));
            }
        }
        if self.max_clique == 0 || self.dbscan_min_pts == 0 {
            return Err(invalid("max_clique and dbscan_min_pts must be at least 1"));
        }
        Ok(())
    }
}

/// Clients grouped by how HTs affect them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HtClusters {
    /// Clusters ordered by smallest member; members ascending.
    pub clusters: Vec<Vec<usize>>,
    pub representatives: Vec<usize>,
}

impl HtClusters {
    /// Cluster members of the cluster represented by `rep`.
    pub fn members_of_rep(&self, rep: usize) -> Option<&[usize]> {
        self.representatives
            .iter()
            .position(|&r| r == rep)
            .map(|k| self.clusters[k].as_slice())
    }

    pub fn expand(&self, reps: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = reps
            .iter()
            .flat_map(|&r| self.members_of_rep(r).map(|m| m.to_vec()).unwrap_or_else(|| vec![r]))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// DBSCAN with `d <= eps` neighbourhoods (a point counts towards its own).
/// Returns a cluster label per point; noise points get their own label.
pub fn dbscan(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<usize> {
    let n = points.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist(&points[i], &points[j]) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for i in 0..n {
        if label[i].is_some() || !core[i] {
            continue;
        }
        label[i] = Some(next);
        let mut stack = vec![i];
        while let Some(p) = stack.pop() {
            for &q in &neighbours[p] {
                if label[q].is_none() {
                    label[q] = Some(next);
                    if core[q] {
                        stack.push(q);
                    }
                }
            }
        }
        next += 1;
    }
    label
        .into_iter()
        .map(|l| {
            l.unwrap_or_else(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Cluster clients on their joint access vectors and pick a uniformly random representative
/// per cluster.
pub fn ht_cluster<R: Rng + ?Sized>(model: &LatentModel, params: &BlueprintParams, rng: &mut R) -> HtClusters {
    let n = model.num_clients();
    let points: Vec<Vec<f64>> = (0..n).map(|i| model.joint_access_vector(i)).collect();
    let mut pd = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(&points[i], &points[j]);
            if d > params.dbscan_tie_distance {
                pd.push(d);
            }
        }
    }
    let eps = (params.dbscan_eps_scale * median(pd)).max(params.dbscan_tie_distance);
    let labels = dbscan(&points, eps, params.dbscan_min_pts);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut order: Vec<usize> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        match order.iter().position(|&o| o == l) {
            Some(k) => clusters[k].push(i),
            None => {
                order.push(l);
                clusters.push(vec![i]);
            }
        }
    }
    let representatives = clusters.iter().map(|c| c[rng.random_range(0..c.len())]).collect();
    HtClusters { clusters, representatives }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub vertices: Vec<usize>,
    /// `(i, j)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl DependencyGraph {
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let e = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&e).is_ok()
    }

    /// All cliques with at most `max_size` vertices, by size and then lexicographically.
    pub fn cliques(&self, max_size: usize) -> Vec<Vec<usize>> {
        let mut level: Vec<Vec<usize>> = self.vertices.iter().map(|&v| vec![v]).collect();
        let mut out = Vec::new();
        for _ in 0..max_size {
            if level.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for q in &level {
                let last = *q.last().expect("cliques are non-empty");
                for &v in self.vertices.iter().filter(|&&v| v > last) {
                    if q.iter().all(|&u| self.has_edge(u, v)) {
                        let mut ext = q.clone();
                        ext.push(v);
                        next.push(ext);
                    }
                }
            }
            out.append(&mut level);
            level = next;
        }
        out
    }

    /// Edge list CSV `(i, j)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j"])?;
        for (i, j) in &self.edges {
            w.write_record([i.to_string(), j.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_dependency_graph<L: AccessLaw + ?Sized>(law: &L, reps: &[usize], eps_dep: f64) -> Result<DependencyGraph> {
    if reps.is_empty() {
        return Err(invalid("dependency graph needs at least one representative"));
    }
    let mut vertices = reps.to_vec();
    vertices.sort_unstable();
    vertices.dedup();
    let marg: Vec<f64> = vertices.iter().map(|&v| law.marginal(v)).collect();
    let mut edges = Vec::new();
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            let joint = law.joint(&[vertices[a], vertices[b]], &[]);
            if (joint - marg[a] * marg[b]).abs() > eps_dep {
                edges.push((vertices[a], vertices[b]));
            }
        }
    }
    Ok(DependencyGraph { vertices, edges })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredHt {
    pub ht_index: usize,
    pub member_clients: Vec<usize>,
    /// `P(members blocked | other representatives access)`.
    pub conditional_blocking: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceBlueprint {
    pub channel: usize,
    pub inferred_hts: Vec<InferredHt>,
    /// Cliques whose conditioning event was too rare to evaluate.
    pub skipped: Vec<Vec<usize>>,
}

impl InterferenceBlueprint {
    pub fn groups(&self) -> Vec<Vec<usize>> {
        self.inferred_hts.iter().map(|h| h.member_clients.clone()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Every way to write `q` as a disjoint union of groups from `found`.
fn exact_partitions(q: &[usize], found: &[&[usize]]) -> Vec<Vec<usize>> {
    let blocks: Vec<usize> = (0..found.len())
        .filter(|&k| found[k].iter().all(|c| q.contains(c)))
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        remaining: &[usize],
        blocks: &[usize],
        found: &[&[usize]],
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let Some(&first) = remaining.first() else {
            out.push(chosen.clone());
            return;
        };
        for &b in blocks {
            let g = found[b];
            if g.contains(&first) && g.iter().all(|c| remaining.contains(c)) {
                let rest: Vec<usize> = remaining.iter().copied().filter(|c| !g.contains(c)).collect();
                chosen.push(b);
                rec(&rest, blocks, found, chosen, out);
                chosen.pop();
            }
        }
    }
    rec(q, &blocks, found, &mut chosen, &mut out);
    out
}

/// Visit the graph's cliques in non-decreasing size and collect the groups that behave like
/// a distinct hidden terminal under `law`.
pub fn estimate_hts<L: AccessLaw + ?Sized>(
    graph: &DependencyGraph,
    law: &L,
    channel: usize,
    params: &BlueprintParams,
) -> Result<InterferenceBlueprint> {
    params.validate()?;
    let mut found: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut skipped = Vec::new();
    for q in graph.cliques(params.max_clique) {
        let rest: Vec<usize> = graph.vertices.iter().copied().filter(|v| !q.contains(v)).collect();
        let cond = law.joint(&rest, &[]);
        if cond < params.eps_cond {
            skipped.push(q);
            continue;
        }
        let p = law.joint(&rest, &q) / cond;
        if p <= params.eps_ht {
            continue;
        }
        let groups: Vec<&[usize]> = found.iter().map(|(g, _)| g.as_slice()).collect();
        let explained = exact_partitions(&q, &groups).iter().any(|part| {
            let prod: f64 = part.iter().map(|&b| law.joint(&rest, groups[b]) / cond).product();
            p <= (1.0 + params.delta) * prod
        });
        if !explained {
            found.push((q, p));
        }
    }
    Ok(InterferenceBlueprint {
        channel,
        inferred_hts: found
            .into_iter()
            .enumerate()
            .map(|(ht_index, (member_clients, conditional_blocking))| InferredHt {
                ht_index,
                member_clients,
                conditional_blocking,
            })
            .collect(),
        skipped,
    })
}

/// Blueprint of one channel from a latent model: cluster, build the graph, estimate HTs.
pub fn blueprint_channel<R: Rng + ?Sized>(
    model: &LatentModel,
    params: &BlueprintParams,
    rng: &mut R,
) -> Result<(HtClusters, DependencyGraph, InterferenceBlueprint)> {
    let clusters = ht_cluster(model, params, rng);
    let graph = build_dependency_graph(model, &clusters.representatives, params.eps_dep)?;
    let bp = estimate_hts(&graph, model, model.channel, params)?;
    Ok((clusters, graph, bp))
}

/// Number of HTs that are active on `channel` and cover at least one client.
pub fn true_ht_count(truth: &Topology, channel: usize) -> usize {
    truth.impacting_hts(channel).len()
}

/// Per blueprint: whether its inferred HT count equals the true count on its channel.
pub fn count_accuracy(blueprints: &[InterferenceBlueprint], truth: &Topology) -> Vec<bool> {
    blueprints
        .iter()
        .map(|bp| bp.inferred_hts.len() == true_ht_count(truth, bp.channel))
        .collect()
}

/// CSV rows `(channel, ht_index, member_clients)` with members joined by `;`.
pub fn write_blueprints_csv<W: Write>(bps: &[InterferenceBlueprint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["channel", "ht_index", "member_clients"])?;
    for bp in bps {
        for h in &bp.inferred_hts {
            let m: Vec<String> = h.member_clients.iter().map(|c| c.to_string()).collect();
            w.write_record([bp.channel.to_string(), h.ht_index.to_string(), m.join(";")])?;
        }
    }
    w.flush()?;
    Ok(())
}
