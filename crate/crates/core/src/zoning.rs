//! Demand zones: hierarchical classification of events followed by
//! weighted k-means++ clustering within each category.
//!
//! Clustering works on the planar (west longitude, latitude) projection with
//! squared Euclidean distance. The 50 nmi island rule uses great-circle
//! distance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geo::{haversine_nmi, GeoPoint};
use crate::ingest::{EventRecord, Organization};

pub const DEFAULT_RADIUS_NMI: f64 = 50.0;
pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrgGroup {
    Guam,
    HonoluluHQ,
}

impl OrgGroup {
    pub fn of(org: Organization) -> Self {
        match org {
            Organization::SectorGuam => OrgGroup::Guam,
            Organization::SectorHonolulu | Organization::DistrictHQ => OrgGroup::HonoluluHQ,
        }
    }

    /// Prefix used in zone labels.
    pub fn zone_prefix(self) -> &'static str {
        match self {
            OrgGroup::Guam => "Guam",
            OrgGroup::HonoluluHQ => "Hawaii",
        }
    }
}

/// Which asset pair can respond: short-range boats and helicopters, or
/// long-range cutters and airplanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AssetClass {
    BoatHelicopter,
    CutterAirplane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventCategory {
    pub organization_group: OrgGroup,
    pub asset_class: AssetClass,
}

impl EventCategory {
    /// All four categories, in zone-numbering order.
    pub const ALL: [EventCategory; 4] = [
        EventCategory::new(OrgGroup::Guam, AssetClass::BoatHelicopter),
        EventCategory::new(OrgGroup::HonoluluHQ, AssetClass::BoatHelicopter),
        EventCategory::new(OrgGroup::Guam, AssetClass::CutterAirplane),
        EventCategory::new(OrgGroup::HonoluluHQ, AssetClass::CutterAirplane),
    ];

    pub const fn new(organization_group: OrgGroup, asset_class: AssetClass) -> Self {
        EventCategory {
            organization_group,
            asset_class,
        }
    }

    fn order(&self) -> usize {
        EventCategory::ALL.iter().position(|c| c == self).expect("exhaustive")
    }
}

impl fmt::Display for EventCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}", self.organization_group, self.asset_class)
    }
}

impl FromStr for EventCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventCategory::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::domain(format!("unknown event category {s:?}")))
    }
}

impl Serialize for EventCategory {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceIsland {
    pub name: String,
    pub position: GeoPoint,
}

/// Islands with boat stations; events near them are boat/helicopter events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceIslandSet {
    islands: Vec<ReferenceIsland>,
}

impl ReferenceIslandSet {
    pub fn new(islands: Vec<ReferenceIsland>) -> Result<Self> {
        if islands.is_empty() {
            return Err(Error::domain("reference island set is empty"));
        }
        Ok(ReferenceIslandSet { islands })
    }

    pub fn islands(&self) -> &[ReferenceIsland] {
        &self.islands
    }

    /// Shortest great-circle distance from `p` to any reference point.
    pub fn nearest_nmi(&self, p: GeoPoint) -> f64 {
        self.islands
            .iter()
            .map(|i| haversine_nmi(p, i.position))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for ReferenceIslandSet {
    /// Kaua'i, O'ahu, Maui and Guam.
    fn default() -> Self {
        let island = |name: &str, lat: f64, lon: f64| ReferenceIsland {
            name: name.into(),
            position: GeoPoint::from_east(lat, lon).expect("valid island coordinates"),
        };
        ReferenceIslandSet {
            islands: vec![
                island("Kauai", 22.07, -159.52),
                island("Oahu", 21.47, -157.98),
                island("Maui", 20.80, -156.33),
                island("Guam", 13.45, 144.79),
            ],
        }
    }
}

/// Places an event in one of the four categories.
pub fn classify_event(e: &EventRecord, islands: &ReferenceIslandSet, radius_nmi: f64) -> Result<EventCategory> {
    let pos = e
        .position
        .ok_or_else(|| Error::domain(format!("event {} has no position", e.id)))?;
    let asset_class = if islands.nearest_nmi(pos) <= radius_nmi {
        AssetClass::BoatHelicopter
    } else {
        AssetClass::CutterAirplane
    };
    Ok(EventCategory::new(OrgGroup::of(e.organization), asset_class))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint {
    pub point: GeoPoint,
    pub weight: f64,
}

fn xy(p: &GeoPoint) -> [f64; 2] {
    [p.lon_deg_w(), p.lat_deg()]
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub exec: Exec,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 20,
            max_iterations: MAX_LLOYD_ITERATIONS,
            exec: Exec::Parallel,
        }
    }
}

/// Result of one clustering. Centers are `[lon_w, lat]` plane coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centers: Vec<[f64; 2]>,
    pub assignment: Vec<usize>,
    pub sse: f64,
    pub iterations: usize,
    /// Index of the restart that produced this clustering.
    pub restart: usize,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

/// Weighted sum of squared distances from each point to its assigned center.
pub fn weighted_sse(points: &[WeightedPoint], centers: &[[f64; 2]], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| p.weight * dist2(xy(&p.point), centers[c]))
        .sum()
}

fn distinct_count(points: &[WeightedPoint]) -> usize {
    points
        .iter()
        .map(|p| (p.point.lat_deg().to_bits(), p.point.lon_deg_w().to_bits()))
        .collect::<BTreeSet<_>>()
        .len()
}

fn validate_points(points: &[WeightedPoint], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if let Some(p) = points.iter().find(|p| !(p.weight >= 1.0) || !p.weight.is_finite()) {
        return Err(Error::domain(format!("point weight {} below 1", p.weight)));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::domain(format!("k = {k} exceeds the {distinct} distinct points")));
    }
    Ok(())
}

fn nearest(p: [f64; 2], centers: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, *c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn seed_centers<R: Rng>(points: &[WeightedPoint], k: usize, rng: &mut R) -> Vec<[f64; 2]> {
    let coords: Vec<[f64; 2]> = points.iter().map(|p| xy(&p.point)).collect();
    let mut centers = vec![coords[rng.random_range(0..coords.len())]];
    let mut d2: Vec<f64> = coords.iter().map(|c| dist2(*c, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = points.iter().zip(&d2).map(|(p, d)| p.weight * d).sum();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = None;
        for (i, (p, d)) in points.iter().zip(&d2).enumerate() {
            let mass = p.weight * d;
            if mass <= 0.0 {
                continue;
            }
            chosen = Some(i);
            if pick < mass {
                break;
            }
            pick -= mass;
        }
        let idx = chosen.expect("k does not exceed the distinct point count");
        let c = coords[idx];
        centers.push(c);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(coords[i], c));
        }
    }
    centers
}

/// Weighted Lloyd iterations from the given centers.
fn lloyd(points: &[WeightedPoint], mut centers: Vec<[f64; 2]>, max_iterations: usize) -> (Vec<[f64; 2]>, Vec<usize>, usize) {
    let k = centers.len();
    let coords: Vec<[f64; 2]> = points.iter().map(|p| xy(&p.point)).collect();
    let mut assignment: Vec<usize> = coords.iter().map(|c| nearest(*c, &centers).0).collect();
    let mut iterations = 0;
    let mut last_sse = weighted_sse(points, &centers, &assignment);
    while iterations < max_iterations {
        iterations += 1;
        // Update step.
        let mut sums = vec![[0.0f64; 3]; k];
        for (p, &a) in points.iter().zip(&assignment) {
            let c = xy(&p.point);
            sums[a][0] += p.weight * c[0];
            sums[a][1] += p.weight * c[1];
            sums[a][2] += p.weight;
        }
        for (center, s) in centers.iter_mut().zip(&sums) {
            if s[2] > 0.0 {
                *center = [s[0] / s[2], s[1] / s[2]];
            }
        }
        // Empty clusters move to the point contributing most to the SSE.
        for j in 0..k {
            if sums[j][2] > 0.0 {
                continue;
            }
            let worst = coords
                .iter()
                .zip(points)
                .enumerate()
                .map(|(i, (c, p))| (i, p.weight * dist2(*c, centers[assignment[i]])))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            centers[j] = coords[worst.0];
            assignment[worst.0] = j;
        }
        let sse_after_update = weighted_sse(points, &centers, &assignment);
        debug_assert!(sse_after_update <= last_sse * (1.0 + 1e-9) + 1e-9);

        // Assignment step.
        let next: Vec<usize> = coords.iter().map(|c| nearest(*c, &centers).0).collect();
        let sse = weighted_sse(points, &centers, &next);
        debug_assert!(sse <= sse_after_update * (1.0 + 1e-9) + 1e-9);
        last_sse = sse;
        if next == assignment {
            break;
        }
        assignment = next;
    }
    (centers, assignment, iterations)
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Best of `config.restarts` weighted k-means++ runs.
///
/// Restarts are independent and may run in parallel; the lowest SSE wins
/// with ties going to the lowest restart index.
pub fn kmeans_pp_weighted(points: &[WeightedPoint], k: usize, seed: u64, config: &KMeansConfig) -> Result<Clustering> {
    validate_points(points, k)?;
    let restarts = config.restarts.max(1);
    let runs = config.exec.map_range(restarts, |r| {
        let mut rng = restart_rng(seed, r);
        let init = seed_centers(points, k, &mut rng);
        let (centers, assignment, iterations) = lloyd(points, init, config.max_iterations);
        let sse = weighted_sse(points, &centers, &assignment);
        Clustering {
            centers,
            assignment,
            sse,
            iterations,
            restart: r,
        }
    });
    Ok(best_of(runs))
}

fn best_of(runs: Vec<Clustering>) -> Clustering {
    runs.into_iter()
        .reduce(|best, c| if c.sse < best.sse { c } else { best })
        .expect("at least one run")
}

/// Weighted SSE for `k = 1..=k_max`, non-increasing in `k`.
///
/// Each `k` gets the same restart budget plus one candidate grown from the
/// best `k - 1` solution, which guarantees monotonicity. Beyond the number
/// of distinct points the curve stays flat.
pub fn elbow_curve(points: &[WeightedPoint], k_max: usize, seed: u64, config: &KMeansConfig) -> Result<Vec<(usize, f64)>> {
    if k_max == 0 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    if points.is_empty() {
        return Ok((1..=k_max).map(|k| (k, 0.0)).collect());
    }
    let distinct = distinct_count(points);
    let mut curve = Vec::with_capacity(k_max);
    let mut prev: Option<Clustering> = None;
    for k in 1..=k_max {
        if k > distinct {
            let sse = prev.as_ref().map_or(0.0, |c| c.sse);
            curve.push((k, sse));
            continue;
        }
        let mut best = kmeans_pp_weighted(points, k, seed.wrapping_add(k as u64), config)?;
        if let Some(p) = &prev {
            let coords: Vec<[f64; 2]> = points.iter().map(|p| xy(&p.point)).collect();
            let far = coords
                .iter()
                .zip(points)
                .enumerate()
                .map(|(i, (c, wp))| (i, wp.weight * dist2(*c, p.centers[p.assignment[i]])))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let mut init = p.centers.clone();
            init.push(coords[far.0]);
            let (centers, assignment, iterations) = lloyd(points, init, config.max_iterations);
            let sse = weighted_sse(points, &centers, &assignment);
            if sse < best.sse {
                best = Clustering {
                    centers,
                    assignment,
                    sse,
                    iterations,
                    restart: usize::MAX,
                };
            }
        }
        curve.push((k, best.sse));
        prev = Some(best);
    }
    Ok(curve)
}

/// Activity-weighted centroid of a cluster's events.
pub fn superaccident(members: &[&EventRecord]) -> Result<GeoPoint> {
    if members.is_empty() {
        return Err(Error::domain("superaccident of an empty cluster"));
    }
    let mut sum = [0.0f64; 3];
    for e in members {
        let p = e
            .position
            .ok_or_else(|| Error::domain(format!("event {} has no position", e.id)))?;
        let w = e.weight();
        sum[0] += w * p.lat_deg();
        sum[1] += w * p.lon_deg_w();
        sum[2] += w;
    }
    GeoPoint::new(sum[0] / sum[2], sum[1] / sum[2])
}

/// A demand zone and its aggregated demand node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub category: EventCategory,
    pub members: Vec<String>,
    pub superaccident: GeoPoint,
    pub total_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoningConfig {
    #[serde(default)]
    pub islands: Option<ReferenceIslandSet>,
    #[serde(default = "default_radius")]
    pub radius_nmi: f64,
    /// Cluster count per category, keyed by `Guam/BoatHelicopter` style
    /// labels.
    #[serde(default = "default_k")]
    pub k: BTreeMap<EventCategory, usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_elbow_k_max")]
    pub elbow_k_max: usize,
}

impl Default for ZoningConfig {
    fn default() -> Self {
        ZoningConfig {
            islands: None,
            radius_nmi: DEFAULT_RADIUS_NMI,
            k: default_k(),
            restarts: default_restarts(),
            elbow_k_max: default_elbow_k_max(),
        }
    }
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS_NMI
}

fn default_restarts() -> usize {
    20
}

fn default_elbow_k_max() -> usize {
    10
}

/// Two Guam and four Honolulu boat/helicopter zones; three Guam and six
/// Honolulu cutter/airplane zones.
pub fn default_k() -> BTreeMap<EventCategory, usize> {
    EventCategory::ALL.into_iter().zip([2, 4, 3, 6]).collect()
}

/// Classifies, clusters each category and labels zones `Guam-0`, `Guam-1`,
/// `Hawaii-2`, ... in category order.
pub fn build_zones(
    events: &[EventRecord],
    islands: &ReferenceIslandSet,
    radius_nmi: f64,
    k_per_category: &BTreeMap<EventCategory, usize>,
    seed: u64,
    config: &KMeansConfig,
) -> Result<Vec<Zone>> {
    let mut by_cat: BTreeMap<EventCategory, Vec<&EventRecord>> = BTreeMap::new();
    for e in events {
        by_cat.entry(classify_event(e, islands, radius_nmi)?).or_default().push(e);
    }
    let mut zones = Vec::new();
    let mut next_index = 0usize;
    let mut cats: Vec<_> = by_cat.into_iter().collect();
    cats.sort_by_key(|(c, _)| c.order());
    for (cat, members) in cats {
        let k = *k_per_category
            .get(&cat)
            .ok_or_else(|| Error::domain(format!("no cluster count configured for category {cat}")))?;
        let points: Vec<WeightedPoint> = members
            .iter()
            .map(|e| WeightedPoint {
                point: e.position.expect("classified events have positions"),
                weight: e.weight(),
            })
            .collect();
        let cat_seed = seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(cat.order() as u64 + 1));
        let clustering = kmeans_pp_weighted(&points, k, cat_seed, config)?;
        let mut clusters: Vec<Vec<&EventRecord>> = vec![Vec::new(); k];
        for (e, &a) in members.iter().zip(&clustering.assignment) {
            clusters[a].push(e);
        }
        let mut built: Vec<(GeoPoint, Vec<&EventRecord>)> = clusters
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|c| Ok((superaccident(&c)?, c)))
            .collect::<Result<_>>()?;
        built.sort_by(|a, b| {
            a.0.lon_deg_w()
                .total_cmp(&b.0.lon_deg_w())
                .then(a.0.lat_deg().total_cmp(&b.0.lat_deg()))
        });
        for (sa, c) in built {
            zones.push(Zone {
                id: format!("{}-{}", cat.organization_group.zone_prefix(), next_index),
                category: cat,
                members: c.iter().map(|e| e.id.clone()).collect(),
                superaccident: sa,
                total_weight: c.iter().map(|e| e.weight()).sum(),
            });
            next_index += 1;
        }
    }
    Ok(zones)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::StudyWindow;

    fn wp(lat: f64, lon_w: f64, weight: f64) -> WeightedPoint {
        WeightedPoint {
            point: GeoPoint::new(lat, lon_w).unwrap(),
            weight,
        }
    }

    fn event(id: &str, lat: f64, lon_w: f64, org: Organization, activity: u32) -> EventRecord {
        EventRecord {
            id: id.into(),
            timestamp: StudyWindow::default().start(),
            position: Some(GeoPoint::new(lat, lon_w).unwrap()),
            subtype: "X".into(),
            organization: org,
            maritime_sorties: 0,
            aero_sorties: 0,
            activity_count: activity,
        }
    }

    #[test]
    fn classification_examples() {
        let islands = ReferenceIslandSet::default();
        let guam = islands.islands()[3].position;
        let e = event("g", guam.lat_deg(), guam.lon_deg_w(), Organization::SectorGuam, 1);
        assert_eq!(
            classify_event(&e, &islands, 50.0).unwrap(),
            EventCategory::new(OrgGroup::Guam, AssetClass::BoatHelicopter)
        );

        // Due south of Guam: one nmi of latitude is R * pi / 10800 degrees.
        let deg_per_nmi = 180.0 / (std::f64::consts::PI * crate::geo::EARTH_RADIUS_NMI);
        let at = |nmi: f64, org| event("x", guam.lat_deg() - nmi * deg_per_nmi, guam.lon_deg_w(), org, 1);
        assert_eq!(
            classify_event(&at(51.0, Organization::DistrictHQ), &islands, 50.0).unwrap(),
            EventCategory::new(OrgGroup::HonoluluHQ, AssetClass::CutterAirplane)
        );
        let edge = at(50.0, Organization::SectorHonolulu);
        let d = islands.nearest_nmi(edge.position.unwrap());
        assert!((d - 50.0).abs() < 1e-9);
        // Exact boundary: the radius is the computed distance itself.
        assert_eq!(classify_event(&edge, &islands, d).unwrap().asset_class, AssetClass::BoatHelicopter);
        assert_eq!(
            classify_event(&edge, &islands, 50.0 + 1e-6).unwrap().asset_class,
            AssetClass::BoatHelicopter
        );

        let mut no_pos = e.clone();
        no_pos.position = None;
        assert!(classify_event(&no_pos, &islands, 50.0).is_err());
    }

    #[test]
    fn category_labels_round_trip() {
        for c in EventCategory::ALL {
            assert_eq!(c.to_string().parse::<EventCategory>().unwrap(), c);
        }
        let json = serde_json::to_string(&default_k()).unwrap();
        let back: BTreeMap<EventCategory, usize> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, default_k());
    }

    #[test]
    fn k_equal_to_distinct_points_gives_zero_sse() {
        let pts = vec![wp(1.0, 1.0, 1.0), wp(2.0, 5.0, 2.0), wp(7.0, 3.0, 1.0), wp(2.0, 5.0, 4.0)];
        let c = kmeans_pp_weighted(&pts, 3, 11, &KMeansConfig::default()).unwrap();
        assert_eq!(c.sse, 0.0);
        assert!(kmeans_pp_weighted(&pts, 4, 11, &KMeansConfig::default()).is_err());
        assert!(kmeans_pp_weighted(&pts, 0, 11, &KMeansConfig::default()).is_err());
        assert!(kmeans_pp_weighted(&[wp(1.0, 1.0, 0.5)], 1, 1, &KMeansConfig::default()).is_err());
    }

    #[test]
    fn separated_groups_are_recovered() {
        let mut pts = Vec::new();
        for i in 0..10 {
            pts.push(wp(10.0 + 0.01 * i as f64, 150.0, 1.0));
            pts.push(wp(-20.0, 200.0 + 0.01 * i as f64, 2.0));
        }
        let c = kmeans_pp_weighted(&pts, 2, 5, &KMeansConfig::default()).unwrap();
        for i in 0..10 {
            assert_eq!(c.assignment[2 * i], c.assignment[0]);
            assert_eq!(c.assignment[2 * i + 1], c.assignment[1]);
        }
        assert_ne!(c.assignment[0], c.assignment[1]);
    }

    #[test]
    fn restart_budget_close_to_many_restarts() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<WeightedPoint> = (0..30)
            .map(|_| wp(rng.random_range(0.0..20.0), rng.random_range(100.0..120.0), rng.random_range(1.0..4.0)))
            .collect();
        let cfg = |restarts| KMeansConfig {
            restarts,
            ..KMeansConfig::default()
        };
        let oracle = kmeans_pp_weighted(&pts, 3, 1, &cfg(200)).unwrap().sse;
        let budget = kmeans_pp_weighted(&pts, 3, 2, &cfg(20)).unwrap().sse;
        assert!(budget <= oracle * 1.05, "{budget} vs {oracle}");
    }

    #[test]
    fn sequential_and_parallel_restarts_agree() {
        let pts: Vec<WeightedPoint> = (0..40).map(|i| wp((i % 7) as f64, 100.0 + (i % 5) as f64 * 3.0, 1.0 + (i % 3) as f64)).collect();
        let seq = KMeansConfig {
            exec: Exec::Sequential,
            ..KMeansConfig::default()
        };
        let a = kmeans_pp_weighted(&pts, 4, 3, &seq).unwrap();
        let b = kmeans_pp_weighted(&pts, 4, 3, &KMeansConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn elbow_examples() {
        let same = vec![wp(3.0, 3.0, 1.0); 12];
        let curve = elbow_curve(&same, 4, 1, &KMeansConfig::default()).unwrap();
        assert!(curve.iter().all(|&(_, sse)| sse == 0.0));
        assert_eq!(curve.len(), 4);

        let pts = vec![wp(0.0, 10.0, 1.0), wp(2.0, 10.0, 3.0), wp(1.0, 14.0, 2.0)];
        let curve = elbow_curve(&pts, 1, 1, &KMeansConfig::default()).unwrap();
        let w = 6.0;
        let cy = (0.0 + 6.0 + 2.0) / w;
        let cx = (10.0 + 30.0 + 28.0) / w;
        let closed: f64 = pts
            .iter()
            .map(|p| p.weight * ((p.point.lat_deg() - cy).powi(2) + (p.point.lon_deg_w() - cx).powi(2)))
            .sum();
        assert!((curve[0].1 - closed).abs() < 1e-9);
    }

    #[test]
    fn elbow_breaks_at_three_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let centers = [(0.0, 100.0), (15.0, 130.0), (-10.0, 160.0)];
        let pts: Vec<WeightedPoint> = (0..90)
            .map(|i| {
                let (la, lo) = centers[i % 3];
                wp(la + rng.random_range(-1.0..1.0), lo + rng.random_range(-1.0..1.0), 1.0 + (i % 4) as f64)
            })
            .collect();
        let curve = elbow_curve(&pts, 8, 3, &KMeansConfig::default()).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1, "{curve:?}");
        }
        assert!(curve[2].1 / curve[1].1 < 0.5, "{curve:?}");
    }

    #[test]
    fn superaccident_examples() {
        let a = event("a", 10.0, 100.0, Organization::SectorGuam, 1);
        assert_eq!(superaccident(&[&a]).unwrap(), a.position.unwrap());
        let b = event("b", 20.0, 100.0, Organization::SectorGuam, 1);
        assert!((superaccident(&[&a, &b]).unwrap().lat_deg() - 15.0).abs() < 1e-12);
        let c = event("c", 0.0, 100.0, Organization::SectorGuam, 1);
        let d = event("d", 0.0, 200.0, Organization::SectorGuam, 3);
        assert!((superaccident(&[&c, &d]).unwrap().lon_deg_w() - 175.0).abs() < 1e-12);
        // Zero activities still weigh one.
        let e0 = event("e", 0.0, 100.0, Organization::SectorGuam, 0);
        let f = event("f", 0.0, 200.0, Organization::SectorGuam, 1);
        assert!((superaccident(&[&e0, &f]).unwrap().lon_deg_w() - 150.0).abs() < 1e-12);
        assert!(superaccident(&[]).is_err());
    }

    fn sample_events() -> Vec<EventRecord> {
        let islands = ReferenceIslandSet::default();
        let oahu = islands.islands()[1].position;
        let mut out = Vec::new();
        for i in 0..40 {
            let off = 0.05 * (i % 8) as f64;
            out.push(event(&format!("h{i}"), oahu.lat_deg() + off, oahu.lon_deg_w() + off, Organization::SectorHonolulu, 1 + i % 3));
            out.push(event(&format!("f{i}"), 5.0 + off * 3.0, 170.0 + 10.0 * (i % 2) as f64, Organization::DistrictHQ, 2));
        }
        out
    }

    #[test]
    fn zones_partition_events() {
        let events = sample_events();
        let zones = build_zones(&events, &ReferenceIslandSet::default(), 50.0, &default_k(), 9, &KMeansConfig::default()).unwrap();
        // Only two categories present: 4 + 6 zones.
        assert_eq!(zones.len(), 10);
        assert_eq!(zones[0].id, "Hawaii-0");
        let mut seen: Vec<&str> = zones.iter().flat_map(|z| z.members.iter().map(String::as_str)).collect();
        seen.sort();
        let mut all: Vec<&str> = events.iter().map(|e| e.id.as_str()).collect();
        all.sort();
        assert_eq!(seen, all);
        for z in &zones {
            assert!(!z.members.is_empty());
            let members: Vec<&EventRecord> = events.iter().filter(|e| z.members.contains(&e.id)).collect();
            let sa = superaccident(&members).unwrap();
            assert!((sa.lat_deg() - z.superaccident.lat_deg()).abs() < 1e-9);
            assert!((sa.lon_deg_w() - z.superaccident.lon_deg_w()).abs() < 1e-9);
        }
    }

    #[test]
    fn single_category_single_zone() {
        let events: Vec<EventRecord> = sample_events().into_iter().filter(|e| e.id.starts_with('f')).collect();
        let mut k = BTreeMap::new();
        k.insert(EventCategory::new(OrgGroup::HonoluluHQ, AssetClass::CutterAirplane), 1);
        let zones = build_zones(&events, &ReferenceIslandSet::default(), 50.0, &k, 1, &KMeansConfig::default()).unwrap();
        assert_eq!(zones.len(), 1);
        assert_eq!(zones[0].members.len(), events.len());

        let missing = BTreeMap::new();
        assert!(build_zones(&events, &ReferenceIslandSet::default(), 50.0, &missing, 1, &KMeansConfig::default()).is_err());
    }
}
