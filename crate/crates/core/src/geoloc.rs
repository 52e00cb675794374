//! Hidden-terminal localization by intersecting client impact disks.
//!
//! An inferred HT must lie within `D` of every anchor it blocks, at least `D` from every
//! anchor it does not block, and at least `D` from the base station. The region is
//! rasterized and its centroid taken as the position estimate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::blueprint::{HtClusters, InterferenceBlueprint};
use crate::error::{invalid, Result};
use crate::model::{Point, Topology};

pub const DEFAULT_CELL_SIZE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactZone {
    pub anchor: Point,
    /// Meters.
    pub radius: f64,
}

impl ImpactZone {
    pub fn new(anchor: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !anchor.is_finite() {
            return Err(invalid("impact zone needs a finite anchor and radius > 0"));
        }
        Ok(Self { anchor, radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.anchor.distance(p) < self.radius
    }

    /// Distance from the anchor to the nearest point of the box `[lo, hi]`.
    fn nearest(&self, lo: Point, hi: Point) -> f64 {
        let dx = (lo.x - self.anchor.x).max(self.anchor.x - hi.x).max(0.0);
        let dy = (lo.y - self.anchor.y).max(self.anchor.y - hi.y).max(0.0);
        dx.hypot(dy)
    }

    /// Distance from the anchor to the farthest corner of the box `[lo, hi]`.
    fn farthest(&self, lo: Point, hi: Point) -> f64 {
        let dx = (self.anchor.x - lo.x).abs().max((hi.x - self.anchor.x).abs());
        let dy = (self.anchor.y - lo.y).abs().max((hi.y - self.anchor.y).abs());
        dx.hypot(dy)
    }
}

/// Rasterized region. Cell `(ix, iy)` is centred at `origin + ((ix + 0.5) cell, (iy + 0.5) cell)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateZone {
    pub origin: Point,
    pub cell: f64,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl CandidateZone {
    fn center(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell,
            self.origin.y + (iy as f64 + 0.5) * self.cell,
        )
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Square meters.
    pub fn area(&self) -> f64 {
        self.count() as f64 * self.cell * self.cell
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn contains(&self, p: &Point) -> bool {
        let fx = (p.x - self.origin.x) / self.cell;
        let fy = (p.y - self.origin.y) / self.cell;
        if fx < 0.0 || fy < 0.0 {
            return false;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        ix < self.width && iy < self.height && self.cells[iy * self.width + ix]
    }

    /// Distance from `p` to the nearest true cell centre.
    pub fn distance_to(&self, p: &Point) -> Option<f64> {
        self.true_cells().map(|c| c.distance(p)).min_by(f64::total_cmp)
    }

    fn true_cells(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.height)
            .flat_map(move |iy| (0..self.width).map(move |ix| (ix, iy)))
            .filter(|&(ix, iy)| self.cells[iy * self.width + ix])
            .map(|(ix, iy)| self.center(ix, iy))
    }

    /// Bounding box of the true cells as (min, max) corners.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let mut it = self.true_cells();
        let first = it.next()?;
        let h = self.cell / 2.0;
        let (mut lo, mut hi) = (first, first);
        for c in it {
            lo = Point::new(lo.x.min(c.x), lo.y.min(c.y));
            hi = Point::new(hi.x.max(c.x), hi.y.max(c.y));
        }
        Some((Point::new(lo.x - h, lo.y - h), Point::new(hi.x + h, hi.y + h)))
    }
}

/// Zone inside every disk of `inside` and outside every disk of `outside`.
///
/// The raster is an outer approximation: a cell is kept when it meets every inclusion disk
/// and no exclusion disk covers it entirely, so any point of the exact region lies in a kept cell.
pub fn intersect_zones(inside: &[ImpactZone], outside: &[ImpactZone], cell: f64) -> Result<CandidateZone> {
    if inside.is_empty() {
        return Err(invalid("candidate zone needs at least one inclusion disk"));
    }
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(invalid("cell size must be finite and > 0"));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY);
    for z in inside {
        x0 = x0.max(z.anchor.x - z.radius);
        y0 = y0.max(z.anchor.y - z.radius);
        x1 = x1.min(z.anchor.x + z.radius);
        y1 = y1.min(z.anchor.y + z.radius);
    }
    let origin = Point::new((x0 / cell).floor() * cell, (y0 / cell).floor() * cell);
    let span = |lo: f64, hi: f64| if hi > lo { ((hi - lo) / cell).ceil() as usize } else { 0 };
    let (width, height) = (span(origin.x, x1), span(origin.y, y1));
    let mut zone = CandidateZone { origin, cell, width, height, cells: vec![false; width * height] };
    for iy in 0..height {
        for ix in 0..width {
            let lo = Point::new(origin.x + ix as f64 * cell, origin.y + iy as f64 * cell);
            let hi = Point::new(lo.x + cell, lo.y + cell);
            zone.cells[iy * width + ix] = inside.iter().all(|z| z.nearest(lo, hi) <= z.radius)
                && !outside.iter().any(|z| z.farthest(lo, hi) <= z.radius);
        }
    }
    Ok(zone)
}

/// Rasterized `(∩_{i∈g} A_i) ∩ (∩_{j∈R\g} A_jᶜ) ∩ A_BSᶜ` with disks of radius `d`.
pub fn candidate_zone(group: &[usize], reps: &[usize], anchors: &[Point], bs: Point, d: f64, cell: f64) -> Result<CandidateZone> {
    if group.iter().any(|g| !reps.contains(g)) {
        return Err(invalid("impacted group must be a subset of the anchors"));
    }
    let at = |i: usize| {
        anchors
            .get(i)
            .copied()
            .ok_or_else(|| invalid(format!("no anchor position for client {i}")))
            .and_then(|p| ImpactZone::new(p, d))
    };
    let inside = group.iter().map(|&i| at(i)).collect::<Result<Vec<_>>>()?;
    let mut outside = reps
        .iter()
        .filter(|r| !group.contains(r))
        .map(|&j| at(j))
        .collect::<Result<Vec<_>>>()?;
    outside.push(ImpactZone::new(bs, d)?);
    intersect_zones(&inside, &outside, cell)
}

/// Area centroid, or `None` for an empty zone.
pub fn localize(zone: &CandidateZone) -> Option<Point> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for c in zone.true_cells() {
        sx += c.x;
        sy += c.y;
        n += 1;
    }
    (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorMode {
    AllClients,
    RepresentativesOnly,
}

impl AnchorMode {
    pub fn name(self) -> &'static str {
        match self {
            AnchorMode::AllClients => "all-clients",
            AnchorMode::RepresentativesOnly => "representatives-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizationParams {
    /// Impact radius assumed for every anchor; `None` uses the simulator's HT radius.
    pub radius: Option<f64>,
    pub cell: f64,
}

impl Default for LocalizationParams {
    fn default() -> Self {
        Self { radius: None, cell: DEFAULT_CELL_SIZE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HtLocalization {
    pub channel: usize,
    pub ht_index: usize,
    pub estimate: Option<Point>,
    /// True HT id this estimate was matched to.
    pub matched: Option<usize>,
    /// Meters from the matched true HT.
    pub accuracy: Option<f64>,
    /// Zone area in square meters.
    pub precision: f64,
    pub empty_zone: bool,
}

/// Impact radius the simulator uses on `channel` (the largest, if HTs differ).
pub fn simulator_radius(t: &Topology) -> f64 {
    t.hts.iter().map(|h| h.impact_radius).fold(0.0, f64::max)
}

/// Localize every inferred HT of one channel and score it against the topology.
pub fn evaluate_localization(
    t: &Topology,
    blueprint: &InterferenceBlueprint,
    clusters: &HtClusters,
    mode: AnchorMode,
    params: &LocalizationParams,
) -> Result<Vec<HtLocalization>> {
    let d = match params.radius {
        Some(d) => d,
        None => simulator_radius(t),
    };
    let anchors: Vec<Point> = t.clients.iter().map(|c| c.position).collect();
    let channel = blueprint.channel;
    let mut reps = clusters.representatives.clone();
    reps.sort_unstable();
    let all: Vec<usize> = (0..t.num_clients()).collect();
    let mut out = Vec::with_capacity(blueprint.inferred_hts.len());
    for ht in &blueprint.inferred_hts {
        let zone = match mode {
            AnchorMode::RepresentativesOnly => candidate_zone(&ht.member_clients, &reps, &anchors, t.bs_position, d, params.cell)?,
            AnchorMode::AllClients => candidate_zone(&clusters.expand(&ht.member_clients), &all, &anchors, t.bs_position, d, params.cell)?,
        };
        let estimate = localize(&zone);
        out.push(HtLocalization {
            channel,
            ht_index: ht.ht_index,
            estimate,
            matched: None,
            accuracy: None,
            precision: zone.area(),
            empty_zone: estimate.is_none(),
        });
    }
    let truth: Vec<(usize, Point)> = t
        .impacting_hts(channel)
        .into_iter()
        .map(|h| (t.hts[h].id, t.hts[h].position))
        .collect();
    match_nearest(&mut out, &truth);
    Ok(out)
}

/// Greedy one-to-one matching, closest pair first; ties by lower indices.
pub fn match_nearest(estimates: &mut [HtLocalization], truth: &[(usize, Point)]) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (e, est) in estimates.iter().enumerate() {
        if let Some(p) = est.estimate {
            for (k, (_, q)) in truth.iter().enumerate() {
                pairs.push((p.distance(q), e, k));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; estimates.len()];
    let mut used_t = vec![false; truth.len()];
    for (dist, e, k) in pairs {
        if used_e[e] || used_t[k] {
            continue;
        }
        used_e[e] = true;
        used_t[k] = true;
        estimates[e].matched = Some(truth[k].0);
        estimates[e].accuracy = Some(dist);
    }
}

pub const LOCALIZATION_HEADER: [&str; 6] = ["topology_seed", "channel", "ht_index", "accuracy_m", "precision_m2", "mode"];

/// Rows without a matched estimate leave `accuracy_m` empty.
pub fn write_localization_csv<W: Write>(rows: &[(u64, AnchorMode, HtLocalization)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOCALIZATION_HEADER)?;
    for (seed, mode, r) in rows {
        w.write_record([
            seed.to_string(),
            r.channel.to_string(),
            r.ht_index.to_string(),
            r.accuracy.map(|a| a.to_string()).unwrap_or_default(),
            r.precision.to_string(),
            mode.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_topology, TopologyParams};
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2};

    fn z(x: f64, y: f64, r: f64) -> ImpactZone {
        ImpactZone::new(Point::new(x, y), r).unwrap()
    }

    #[test]
    fn single_disk_area_and_centroid() {
        let zone = intersect_zones(&[z(10.3, -4.2, 20.0)], &[], 0.5).unwrap();
        // Outer raster: exact area plus at most a boundary band one cell diagonal wide.
        let band = 2.0 * PI * 20.0 * 0.5 * SQRT_2;
        assert!(zone.area() >= PI * 400.0 && zone.area() <= PI * 400.0 + band, "{}", zone.area());
        let c = localize(&zone).unwrap();
        assert!(c.distance(&Point::new(10.3, -4.2)) < 0.5);
    }

    #[test]
    fn coincident_reps_give_disk_minus_bs_disk() {
        let anchors = vec![Point::new(60.0, 0.0); 3];
        let zone = candidate_zone(&[0, 1, 2], &[0, 1, 2], &anchors, Point::ORIGIN, 50.0, 0.5).unwrap();
        // Two radius-50 disks 60 m apart overlap in a lens of this area.
        let (r, dd): (f64, f64) = (50.0, 60.0);
        let lens = 2.0 * r * r * (dd / (2.0 * r)).acos() - dd / 2.0 * (4.0 * r * r - dd * dd).sqrt();
        let expect = PI * r * r - lens;
        let perimeter = 2.0 * PI * r;
        assert!(zone.area() >= expect && zone.area() <= expect + perimeter * 0.5 * SQRT_2, "{} vs {expect}", zone.area());
    }

    #[test]
    fn lens_centroid_is_on_the_line_of_centres() {
        let zone = intersect_zones(&[z(-10.0, 5.0, 20.0), z(10.0, 5.0, 20.0)], &[], 0.5).unwrap();
        let c = localize(&zone).unwrap();
        assert!((c.y - 5.0).abs() < 0.26 && c.x.abs() < 0.26, "{c:?}");
    }

    #[test]
    fn empty_intersections_are_flagged() {
        let zone = intersect_zones(&[z(0.0, 0.0, 5.0), z(100.0, 0.0, 5.0)], &[], 1.0).unwrap();
        assert!(zone.is_empty());
        assert_eq!(zone.area(), 0.0);
        assert!(localize(&zone).is_none());
        assert!(zone.bounding_box().is_none());
        assert!(candidate_zone(&[], &[0], &[Point::ORIGIN], Point::ORIGIN, 50.0, 1.0).is_err());
        assert!(candidate_zone(&[1], &[0], &[Point::ORIGIN; 2], Point::ORIGIN, 50.0, 1.0).is_err());
    }

    #[test]
    fn matching_is_one_to_one_and_closest_first() {
        let mk = |x: f64| HtLocalization {
            channel: 0,
            ht_index: 0,
            estimate: Some(Point::new(x, 0.0)),
            matched: None,
            accuracy: None,
            precision: 1.0,
            empty_zone: false,
        };
        let mut est = vec![mk(0.0), mk(1.0), mk(50.0)];
        match_nearest(&mut est, &[(7, Point::new(0.9, 0.0)), (9, Point::new(30.0, 0.0))]);
        assert_eq!(est[1].matched, Some(7));
        assert_eq!(est[2].matched, Some(9));
        assert_eq!(est[0].matched, None);
        assert!((est[2].accuracy.unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn true_hts_lie_in_their_exact_zones() {
        for seed in 0..20 {
            let p = TopologyParams { num_clients: 40, num_hts: 3, ..Default::default() };
            let t = generate_topology(&p, seed).unwrap();
            let anchors: Vec<Point> = t.clients.iter().map(|c| c.position).collect();
            let all: Vec<usize> = (0..t.num_clients()).collect();
            for h in t.impacting_hts(0) {
                let g: Vec<usize> = all.iter().copied().filter(|&i| t.covers(h, i, 0)).collect();
                let zone = candidate_zone(&g, &all, &anchors, t.bs_position, t.hts[h].impact_radius, 1.0).unwrap();
                assert!(zone.contains(&t.hts[h].position), "seed {seed} ht {h}");
            }
        }
    }

    proptest! {
        #[test]
        fn constraints_never_grow_the_zone(
            disks in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64, 10.0..40.0f64), 1..4),
            extra in (-40.0..40.0f64, -40.0..40.0f64, 5.0..30.0f64),
            complement in any::<bool>(),
        ) {
            let inside: Vec<ImpactZone> = disks.iter().map(|&(x, y, r)| z(x, y, r)).collect();
            let base = intersect_zones(&inside, &[], 1.0).unwrap();
            let e = z(extra.0, extra.1, extra.2);
            let refined = if complement {
                intersect_zones(&inside, &[e], 1.0).unwrap()
            } else {
                let mut more = inside.clone();
                more.push(e);
                intersect_zones(&more, &[], 1.0).unwrap()
            };
            prop_assert!(refined.area() <= base.area() + 1e-9);
            for (x, y) in [(0.0, 0.0), (7.3, -2.1), (-12.6, 9.9), (20.2, 15.5)] {
                let q = Point::new(x, y);
                let exact = inside.iter().all(|d| d.anchor.distance(&q) <= d.radius)
                    && (!complement || e.anchor.distance(&q) > e.radius)
                    && (complement || e.anchor.distance(&q) <= e.radius);
                prop_assert!(!exact || refined.contains(&q));
            }
            if let (Some(c), Some((lo, hi))) = (localize(&refined), refined.bounding_box()) {
                prop_assert!(c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y);
            }
        }
    }
}
