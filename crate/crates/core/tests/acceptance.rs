//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line to stdout
//! (bypassing the test harness capture) and then asserts.

use std::io::Write;
use std::path::Path;

use rand::Rng;

use spectomo::airsim::{exact_joint, step_frame};
use spectomo::geoloc::candidate_zone;
use spectomo::harness::{overhead_report, run_experiment, ExperimentConfig, ExperimentKind, OverheadParams, Summary};
use spectomo::hod::{fit, FitOptions, MarginalQuery};
use spectomo::model::{generate_topology, Client, HiddenTerminal, Point, Topology, TopologyParams, TOPOLOGY_SCHEMA};
use spectomo::pipeline::{self, PipelineParams};
use spectomo::sched::{enumerate_groups, EpisodeParams, Policy};
use spectomo::stream_rng;
use spectomo::tomography::{run_tomography, Sampling, TomographyParams};

fn report(n: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n}: {verdict}; {detail}");
    let _ = out.flush();
}

fn experiment(kind: ExperimentKind, seeds: u64, pipeline: PipelineParams, sweep: Vec<usize>, dir: &Path) -> Summary {
    let cfg = ExperimentConfig {
        kind,
        seeds: (0..seeds).collect(),
        pipeline,
        sweep,
        out_dir: Some(dir.to_path_buf()),
        ..Default::default()
    };
    with_config(cfg)
}

fn with_config(cfg: ExperimentConfig) -> Summary {
    let (manifest, summary) = run_experiment(&cfg).expect("experiment runs");
    assert!(manifest.failures.is_empty(), "per-seed failures: {:?}", manifest.failures);
    summary
}

fn stat(s: &Summary, sweep: usize, label: &str, metric: &str) -> f64 {
    s.get(sweep, label, metric).unwrap_or_else(|| panic!("missing {sweep}/{label}/{metric}")).mean
}

fn median(s: &Summary, sweep: usize, label: &str, metric: &str) -> f64 {
    s.get(sweep, label, metric).unwrap_or_else(|| panic!("missing {sweep}/{label}/{metric}")).p50
}

#[test]
fn c01_monte_carlo_matches_exact_joint() {
    const FRAMES: u64 = 200_000;
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for seed in 0..20u64 {
        let mut rng = stream_rng(seed, 0);
        let p = TopologyParams {
            num_clients: 2 + rng.random_range(0..3),
            num_hts: 1 + rng.random_range(0..3),
            ..Default::default()
        };
        let t = generate_topology(&p, seed).unwrap();
        let n = t.num_clients();
        let all: Vec<usize> = (0..n).collect();
        let exact = exact_joint(&t, 0, &all).unwrap();
        let mut counts = vec![0u64; 1 << n];
        let mut sim_rng = stream_rng(seed, 1);
        for f in 0..FRAMES {
            let o = step_frame(&t, 0, f, &mut sim_rng).unwrap();
            let mut pattern = (1usize << n) - 1;
            for &b in &o.blocked_clients {
                pattern &= !(1 << b);
            }
            counts[pattern] += 1;
        }
        for (pat, &c) in counts.iter().enumerate() {
            let p = exact.probabilities[pat];
            let freq = c as f64 / FRAMES as f64;
            let sigma = (p * (1.0 - p) / FRAMES as f64).sqrt();
            let z = if sigma > 0.0 {
                (freq - p).abs() / sigma
            } else if (freq - p).abs() > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(z);
            if z > 3.0 {
                misses.push(format!("seed {seed} pattern {pat:b}: z={z:.2}"));
            }
        }
    }
    let pass = misses.is_empty();
    report(1, pass, &format!("20 topologies, 200k frames, worst |z| = {worst:.2}, misses {misses:?}"));
    assert!(pass);
}

#[test]
fn c02_hod_error_shape_over_alphabet() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = PipelineParams {
        topology: TopologyParams { num_clients: 20, num_hts: 8, ..Default::default() },
        tomography: TomographyParams { sampling: Sampling::Exact, ..Default::default() },
        ..Default::default()
    };
    let fs = [2usize, 10, 20, 40];
    let s = experiment(ExperimentKind::HodMse, 50, pipeline, fs.to_vec(), dir.path());
    let m: Vec<f64> = fs.iter().map(|&f| median(&s, f, "", "mse")).collect();
    let monotone = m.windows(2).all(|w| w[1] <= w[0]);
    let small_tail = (m[2] - m[3]) < 0.25 * (m[0] - m[2]);
    let pass = monotone && small_tail;
    report(
        2,
        pass,
        &format!("median MSE at F=2,10,20,40: {:.3e} {:.3e} {:.3e} {:.3e}; non-increasing {monotone}; 20->40 gain below quarter of 2->20 gain {small_tail}", m[0], m[1], m[2], m[3]),
    );
    assert!(pass);
}

#[test]
fn c03_query_identities_on_fitted_models() {
    let mut worst: f64 = 0.0;
    let mut rng = stream_rng(3, 0);
    for seed in 0..1000u64 {
        let n = rng.random_range(3..7);
        let p = TopologyParams { num_clients: n, num_hts: rng.random_range(1..5), ..Default::default() };
        let t = generate_topology(&p, seed).unwrap();
        let tomo = run_tomography(&t, &TomographyParams { frames_per_sample: 200, k: Some(n), ..Default::default() }, seed).unwrap();
        let marg: Vec<f64> = tomo.vectors.iter().map(|v| v.a[0]).collect();
        let f = rng.random_range(1..=n);
        let opts = FitOptions { max_iterations: 200, ..Default::default() };
        let m = fit(tomo.pairwise.channel(0).unwrap(), &marg, f, &opts, seed).unwrap();

        let size = rng.random_range(1..n);
        let mut group: Vec<usize> = rand::seq::index::sample(&mut rng, n, size).into_vec();
        group.sort_unstable();
        let total: f64 = (0..1usize << size)
            .map(|mask| {
                let access = (0..size).filter(|k| mask >> k & 1 == 1).map(|k| group[k]).collect();
                m.query(&MarginalQuery::new(group.clone(), access).unwrap())
            })
            .sum();
        worst = worst.max((total - 1.0).abs());

        let extra = (0..n).find(|i| !group.contains(i)).unwrap();
        let mut wider = group.clone();
        wider.push(extra);
        let access: Vec<usize> = group.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let narrow = m.query(&MarginalQuery::new(group.clone(), access.clone()).unwrap());
        let mut with_extra = access.clone();
        with_extra.push(extra);
        let split = m.query(&MarginalQuery::new(wider.clone(), access).unwrap()) + m.query(&MarginalQuery::new(wider, with_extra).unwrap());
        worst = worst.max((narrow - split).abs());
    }
    let pass = worst <= 1e-9;
    report(3, pass, &format!("1000 fitted models, worst identity error {worst:.2e}"));
    assert!(pass);
}

#[test]
fn c04_siso_scheduler_ordering_and_gains() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = PipelineParams {
        topology: TopologyParams { num_clients: 20, ..Default::default() },
        episode: EpisodeParams { frames: 1500, metrics_every: 1500, ..Default::default() },
        ..Default::default()
    };
    let hts = [2usize, 4, 6, 8];
    let s = experiment(ExperimentKind::SchedulerVsHts, 100, pipeline, hts.to_vec(), dir.path());
    let mut lines = Vec::new();
    let mut ordered = true;
    for &h in &hts {
        let [pf, aa, sp, or] = ["pf", "aa", "sp", "oracle"].map(|p| stat(&s, h, p, "cum_throughput"));
        let ok = or >= sp && sp >= aa && aa >= pf;
        ordered &= ok;
        lines.push(format!("{h} HTs: pf {pf:.0} aa {aa:.0} sp {sp:.0} oracle {or:.0} ordered {ok}"));
    }
    let tp = |p: &str| stat(&s, 8, p, "cum_throughput");
    let sp_pf = tp("sp") / tp("pf");
    let sp_aa = tp("sp") / tp("aa");
    let rbu_gap = stat(&s, 8, "oracle", "rbu") - stat(&s, 8, "sp", "rbu");
    let pass = ordered && sp_pf >= 1.5 && sp_aa >= 1.25 && rbu_gap <= 0.05;
    report(
        4,
        pass,
        &format!("{}; at 8 HTs SP/PF {sp_pf:.3} (>= 1.5), SP/AA {sp_aa:.3} (>= 1.25), oracle-SP RBU {:.2} pts (<= 5)", lines.join("; "), rbu_gap * 100.0),
    );
    assert!(pass);
}

#[test]
fn c05_mu_mimo_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = PipelineParams {
        topology: TopologyParams { num_clients: 20, num_hts: 6, ..Default::default() },
        episode: EpisodeParams { frames: 1500, metrics_every: 1500, ..Default::default() },
        ..Default::default()
    };
    let cfg = ExperimentConfig {
        kind: ExperimentKind::MimoSweep,
        seeds: (0..100).collect(),
        pipeline,
        policies: vec![Policy::Pf, Policy::Jaa],
        sweep: vec![2, 4, 8],
        out_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let s = with_config(cfg);
    let tp = |m: usize, p: &str| stat(&s, m, p, "cum_throughput");
    let mut pass = true;
    let mut lines = Vec::new();
    for (a, b) in [(2, 4), (4, 8)] {
        let jaa = tp(b, "jaa") / tp(a, "jaa");
        let pf = tp(b, "pf") / tp(a, "pf");
        pass &= jaa >= 1.6 && pf < jaa;
        lines.push(format!("M {a}->{b}: JAA x{jaa:.3}, PF x{pf:.3}"));
    }
    report(5, pass, &format!("{} (need JAA >= 1.6 and PF strictly smaller)", lines.join("; ")));
    assert!(pass);
}

#[test]
fn c06_overhead_arithmetic() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (n, c, k) in [(12usize, 1usize, 5usize), (10, 2, 4), (9, 3, 3)] {
        let p = TopologyParams { num_clients: n, num_channels: c, num_hts: 3, ..Default::default() };
        let t = generate_topology(&p, 7).unwrap();
        let tp = TomographyParams { frames_per_sample: 100, k: Some(k), ..Default::default() };
        let tomo = run_tomography(&t, &tp, 7).unwrap();
        let r = overhead_report(&OverheadParams { channels: c as u64, clients: n as u64, clusters: k as u64, antennas: 3, frames: 100 }).unwrap();
        let closed_first = (c * n) as u128;
        let closed_pair = (c * k * (k - 1) / 2) as u128;
        let groups = enumerate_groups(&(0..n).collect::<Vec<_>>(), 3).unwrap().len() as u128;
        let ok = r.first_order_sets == closed_first
            && r.pairwise_sets == closed_pair
            && tomo.first_order_units as u128 == closed_first
            && tomo.pairwise_units as u128 == closed_pair
            && r.tomography_frames == tomo.ledger.total_measurement_frames as u128
            && r.oracle_sets == c as u128 * groups;
        pass &= ok;
        detail.push(format!("N={n} C={c} K={k}: {ok}"));
    }
    let big = overhead_report(&OverheadParams { channels: 3, clients: 20, clusters: 6, antennas: 4, frames: 1000 }).unwrap();
    let ratio = big.ratio();
    pass &= ratio >= 10.0;
    report(6, pass, &format!("{}; oracle/tomography at N=20 M=4 C=3: {ratio:.1}x (>= 10)", detail.join(", ")));
    assert!(pass);
}

/// Ten clients; HT A blocks {0}, B blocks {0, 9}, C blocks {3, 4, 5}, D blocks {5, 6, 7};
/// clients 1, 2, 8 are never blocked.
fn worked_example() -> Topology {
    let clients = [
        (-80.0, -5.0),
        (0.0, 10.0),
        (10.0, -5.0),
        (75.0, 50.0),
        (85.0, 60.0),
        (80.0, -5.0),
        (75.0, -60.0),
        (85.0, -70.0),
        (-5.0, -10.0),
        (-75.0, -60.0),
    ];
    let hts = [(-110.0, 30.0, 0.3), (-110.0, -40.0, 0.5), (110.0, 30.0, 0.4), (110.0, -40.0, 0.6)];
    let t = Topology {
        schema: TOPOLOGY_SCHEMA,
        bs_position: Point::ORIGIN,
        bs_range: 120.0,
        min_ht_bs_distance: 70.0,
        clients: clients.iter().enumerate().map(|(id, &(x, y))| Client { id, position: Point::new(x, y) }).collect(),
        hts: hts
            .iter()
            .enumerate()
            .map(|(id, &(x, y, q))| HiddenTerminal {
                id,
                position: Point::new(x, y),
                transmit_prob: vec![q],
                impact_radius: 50.0,
                active_channels: vec![0],
            })
            .collect(),
        num_channels: 1,
        ht_sense_radius: 50.0,
        seed: 6,
    };
    t.validate().unwrap();
    t
}

#[test]
fn c07_worked_example_blueprint() {
    let t = worked_example();
    let covered: Vec<Vec<usize>> = (0..4).map(|h| (0..10).filter(|&i| t.covers(h, i, 0)).collect()).collect();
    assert_eq!(covered, vec![vec![0], vec![0, 9], vec![3, 4, 5], vec![5, 6, 7]]);
    let params = PipelineParams::default();
    let e = pipeline::estimate(&t, &params, 6).unwrap();
    let bps = pipeline::blueprint_all(&e.models, &params.blueprint, 6).unwrap();
    let b = &bps[0];
    let mut groups: Vec<Vec<usize>> = b.blueprint.groups().iter().map(|g| b.clusters.expand(g)).collect();
    groups.sort();
    let mut clusters = b.clusters.clusters.clone();
    clusters.iter_mut().for_each(|c| c.sort_unstable());
    clusters.sort();
    let pass = groups == covered;
    report(
        7,
        pass,
        &format!("clusters {clusters:?}; edges {:?}; inferred groups (expanded) {groups:?}", b.graph.edges),
    );
    assert!(pass);
}

#[test]
fn c08_ht_count_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = PipelineParams {
        topology: TopologyParams { num_clients: 40, ..Default::default() },
        ..Default::default()
    };
    let s = experiment(ExperimentKind::HtCount, 200, pipeline, vec![2, 3, 8], dir.path());
    let acc = |h| stat(&s, h, "", "hit");
    let (a2, a3, a8) = (acc(2), acc(3), acc(8));
    let pass = a2 >= 0.90 && a3 >= 0.80 && a8 >= 0.55;
    report(8, pass, &format!("accuracy 2 HTs {a2:.3} (>= 0.90), 3 HTs {a3:.3} (>= 0.80), 8 HTs {a8:.3} (>= 0.55)"));
    assert!(pass);
}

#[test]
fn c09_localization() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = PipelineParams {
        topology: TopologyParams { num_clients: 40, num_hts: 3, ..Default::default() },
        ..Default::default()
    };
    let s = experiment(ExperimentKind::Localization, 200, pipeline, vec![], dir.path());
    let all_acc = median(&s, 3, "all-clients", "accuracy_m");
    let rep_acc = median(&s, 3, "representatives-only", "accuracy_m");
    let rep_prec = median(&s, 3, "representatives-only", "precision_m2");
    let empty = stat(&s, 3, "representatives-only", "empty_zone");

    let mut sound = true;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let t = generate_topology(&TopologyParams { num_clients: 40, num_hts: 3, ..Default::default() }, seed).unwrap();
        let anchors: Vec<Point> = t.clients.iter().map(|c| c.position).collect();
        let all: Vec<usize> = (0..t.num_clients()).collect();
        for h in t.impacting_hts(0) {
            let g: Vec<usize> = all.iter().copied().filter(|&i| t.covers(h, i, 0)).collect();
            let zone = candidate_zone(&g, &all, &anchors, t.bs_position, t.hts[h].impact_radius, 1.0).unwrap();
            let d = zone.distance_to(&t.hts[h].position).unwrap_or(f64::INFINITY);
            worst = worst.max(d);
            sound &= zone.contains(&t.hts[h].position);
        }
    }
    let pass = all_acc <= 10.0 && rep_acc <= 20.0 && rep_prec <= 300.0 && sound;
    report(
        9,
        pass,
        &format!(
            "median accuracy all-clients {all_acc:.2} m (<= 10), reps-only {rep_acc:.2} m (<= 20); reps-only median precision {rep_prec:.0} m2 (<= 300); empty reps-only zones {:.1}%; soundness {sound} (worst cell distance {worst:.2} m)",
            empty * 100.0
        ),
    );
    assert!(pass);
}

#[test]
fn c10_byte_identical_reruns() {
    let kinds = [
        ExperimentKind::SchedulerVsHts,
        ExperimentKind::ClientDensity,
        ExperimentKind::MultiChannel,
        ExperimentKind::MimoSweep,
        ExperimentKind::ClusterSweep,
        ExperimentKind::HodMse,
        ExperimentKind::Localization,
        ExperimentKind::HtCount,
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for kind in kinds {
        let cfg = |dir: &Path| ExperimentConfig {
            kind,
            seeds: vec![3, 8, 21],
            pipeline: PipelineParams {
                topology: TopologyParams { num_clients: 10, num_hts: 3, num_channels: 1, ..Default::default() },
                tomography: TomographyParams { frames_per_sample: 300, ..Default::default() },
                episode: EpisodeParams { frames: 150, metrics_every: 50, ..Default::default() },
                ..Default::default()
            },
            policies: Policy::ALL.to_vec(),
            sweep: match kind {
                ExperimentKind::ClientDensity => vec![8, 12],
                ExperimentKind::MultiChannel => vec![1, 2],
                ExperimentKind::MimoSweep => vec![1, 2, 4],
                ExperimentKind::ClusterSweep => vec![3, 5],
                ExperimentKind::HodMse => vec![2, 10],
                _ => vec![2, 4],
            },
            out_dir: Some(dir.to_path_buf()),
            ..Default::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (ma, _) = run_experiment(&cfg(a.path())).unwrap();
        run_experiment(&cfg(b.path())).unwrap();
        for name in ma.outputs.iter().filter(|n| n.ends_with(".csv") || *n == "summary.json") {
            compared += 1;
            if std::fs::read(a.path().join(name)).unwrap() != std::fs::read(b.path().join(name)).unwrap() {
                mismatches.push(format!("{}/{name}", kind.name()));
            }
        }
    }
    let pass = mismatches.is_empty() && compared > 0;
    report(10, pass, &format!("8 experiment kinds, {compared} files compared, mismatches {mismatches:?}"));
    assert!(pass);
}
