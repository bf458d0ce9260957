//! Heterogeneous-asset location-allocation model and its exact solver.
//!
//! Assets of one category never interact with assets of another: each
//! category has its own demand rows and every other constraint is per asset.
//! The model therefore splits into one independent integer program per
//! category, solved separately and merged.

mod bnb;
mod lp;

pub use bnb::{branch_and_bound, BnbOptions, BnbResult, BnbStats, BnbStatus, MilpProblem, INTEGRALITY_TOL};
pub use lp::{lp_solve, LinearProgram, LpOutcome, LpSolution, Row, Sense, FEASIBILITY_TOL, OPTIMALITY_TOL};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geo::{haversine_nmi, GeoPoint};
use crate::mcsim::DemandScenario;

pub const DELTA: f64 = 0.00005;
pub const DEFAULT_MISSION_HOURS: f64 = 1.5;
const CAPACITY_TOL: f64 = 1e-6;

/// The weighted-sum grid from `w1 = delta` to `w1 = 1 - delta` in steps of
/// 0.2.
pub fn default_weight_grid() -> Vec<(f64, f64)> {
    vec![
        (DELTA, 1.0 - DELTA),
        (0.2, 0.8),
        (0.4, 0.6),
        (0.6, 0.4),
        (0.8, 0.2),
        (1.0 - DELTA, DELTA),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AssetCategory {
    Boat,
    Cutter,
    Helicopter,
    Airplane,
}

impl AssetCategory {
    pub const ALL: [AssetCategory; 4] = [
        AssetCategory::Boat,
        AssetCategory::Cutter,
        AssetCategory::Helicopter,
        AssetCategory::Airplane,
    ];

    /// Boats and cutters use harbors; aircraft use airports.
    pub fn can_use(self, kind: HomeportKind) -> bool {
        matches!(
            (self, kind),
            (AssetCategory::Boat | AssetCategory::Cutter, HomeportKind::Harbor)
                | (AssetCategory::Helicopter | AssetCategory::Airplane, HomeportKind::Airport)
        )
    }
}

impl fmt::Display for AssetCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HomeportKind {
    Harbor,
    Airport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub id: String,
    pub category: AssetCategory,
    pub cruise_speed_kts: f64,
    pub max_speed_kts: f64,
    pub monthly_hours: f64,
    pub current_homeport: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Homeport {
    pub id: String,
    pub kind: HomeportKind,
    pub position: GeoPoint,
}

/// A superaccident with its demand level per asset category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandNode {
    pub zone_id: String,
    pub position: GeoPoint,
    pub levels: BTreeMap<AssetCategory, u32>,
}

impl DemandNode {
    pub fn level(&self, c: AssetCategory) -> u32 {
        self.levels.get(&c).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Only homeports some asset is stationed at today.
    CurrentOnly,
    /// Every candidate homeport.
    PacificRegion,
}

/// Constant in the linking constraint between allocations and locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigM {
    /// `floor(u_h / t)` per asset: no asset can serve more missions.
    #[default]
    Tightened,
    /// `100 * |J|` for every asset.
    Hundred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InstanceSpec {
    assets: Vec<Asset>,
    homeports: Vec<Homeport>,
    zones: Vec<DemandNode>,
    mission_hours: f64,
    #[serde(default)]
    big_m: BigM,
}

/// A validated model instance with its time matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceSpec", into = "InstanceSpec")]
pub struct Instance {
    assets: Vec<Asset>,
    homeports: Vec<Homeport>,
    zones: Vec<DemandNode>,
    mission_hours: f64,
    big_m: BigM,
    current: Vec<usize>,
    /// `c[h][i]`, `None` where the category cannot use the homeport.
    relocation: Vec<Vec<Option<f64>>>,
    /// `d[h][i][j]`.
    deploy: Vec<Vec<Vec<f64>>>,
    q: Vec<f64>,
}

impl TryFrom<InstanceSpec> for Instance {
    type Error = Error;

    fn try_from(s: InstanceSpec) -> Result<Self> {
        Instance::new(s.assets, s.homeports, s.zones, s.mission_hours, s.big_m)
    }
}

impl From<Instance> for InstanceSpec {
    fn from(i: Instance) -> Self {
        InstanceSpec {
            assets: i.assets,
            homeports: i.homeports,
            zones: i.zones,
            mission_hours: i.mission_hours,
            big_m: i.big_m,
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl Instance {
    pub fn new(
        assets: Vec<Asset>,
        homeports: Vec<Homeport>,
        zones: Vec<DemandNode>,
        mission_hours: f64,
        big_m: BigM,
    ) -> Result<Self> {
        if !positive(mission_hours) {
            return Err(Error::domain(format!("mission time {mission_hours} h must be positive")));
        }
        let unique = |ids: Vec<&str>, what: &str| -> Result<()> {
            let n = ids.len();
            if ids.into_iter().collect::<BTreeSet<_>>().len() != n {
                return Err(Error::domain(format!("duplicate {what} id")));
            }
            Ok(())
        };
        unique(assets.iter().map(|a| a.id.as_str()).collect(), "asset")?;
        unique(homeports.iter().map(|h| h.id.as_str()).collect(), "homeport")?;
        unique(zones.iter().map(|z| z.zone_id.as_str()).collect(), "zone")?;

        let mut current = Vec::with_capacity(assets.len());
        for a in &assets {
            if !positive(a.cruise_speed_kts) || !positive(a.max_speed_kts) || !positive(a.monthly_hours) {
                return Err(Error::domain(format!("asset {} needs positive speeds and hours", a.id)));
            }
            if a.max_speed_kts < a.cruise_speed_kts {
                return Err(Error::domain(format!("asset {} max speed below cruise speed", a.id)));
            }
            let i = homeports
                .iter()
                .position(|h| h.id == a.current_homeport)
                .ok_or_else(|| {
                    Error::domain(format!("asset {} has unknown current homeport {}", a.id, a.current_homeport))
                })?;
            if !a.category.can_use(homeports[i].kind) {
                return Err(Error::domain(format!(
                    "asset {} is a {} stationed at {:?} {}",
                    a.id, a.category, homeports[i].kind, homeports[i].id
                )));
            }
            current.push(i);
        }

        let relocation = assets
            .iter()
            .zip(&current)
            .map(|(a, &cur)| {
                homeports
                    .iter()
                    .enumerate()
                    .map(|(i, h)| {
                        a.category.can_use(h.kind).then(|| {
                            if i == cur {
                                0.0
                            } else {
                                haversine_nmi(homeports[cur].position, h.position) / a.cruise_speed_kts
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        let deploy = assets
            .iter()
            .map(|a| {
                homeports
                    .iter()
                    .map(|h| {
                        zones
                            .iter()
                            .map(|z| haversine_nmi(h.position, z.position) / a.max_speed_kts)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let q = assets
            .iter()
            .map(|a| match big_m {
                BigM::Tightened => (a.monthly_hours / mission_hours).floor(),
                BigM::Hundred => 100.0 * zones.len() as f64,
            })
            .collect();
        Ok(Instance {
            assets,
            homeports,
            zones,
            mission_hours,
            big_m,
            current,
            relocation,
            deploy,
            q,
        })
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    pub fn homeports(&self) -> &[Homeport] {
        &self.homeports
    }

    pub fn zones(&self) -> &[DemandNode] {
        &self.zones
    }

    pub fn mission_hours(&self) -> f64 {
        self.mission_hours
    }

    pub fn big_m(&self) -> BigM {
        self.big_m
    }

    /// Index of asset `h`'s current homeport.
    pub fn current_homeport(&self, h: usize) -> usize {
        self.current[h]
    }

    pub fn relocation_hours(&self, h: usize, i: usize) -> Option<f64> {
        self.relocation[h][i]
    }

    pub fn deploy_hours(&self, h: usize, i: usize, j: usize) -> f64 {
        self.deploy[h][i][j]
    }

    pub fn q(&self, h: usize) -> f64 {
        self.q[h]
    }

    /// Same fleet and homeports with a different demand mix.
    pub fn with_zones(&self, zones: Vec<DemandNode>) -> Result<Instance> {
        Instance::new(self.assets.clone(), self.homeports.clone(), zones, self.mission_hours, self.big_m)
    }

    /// Same data under another big-M rule.
    pub fn with_big_m(&self, big_m: BigM) -> Result<Instance> {
        Instance::new(self.assets.clone(), self.homeports.clone(), self.zones.clone(), self.mission_hours, big_m)
    }

    fn compatible_homeports(&self, h: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.homeports.len()).filter(move |&i| self.relocation[h][i].is_some())
    }
}

/// Builds an instance for a demand scenario.
///
/// `zone_positions` gives each zone's superaccident. Under
/// [`Scope::CurrentOnly`] only homeports occupied by some asset remain
/// candidates.
pub fn build_instance(
    assets: &[Asset],
    homeports: &[Homeport],
    scenario: &DemandScenario,
    zone_positions: &BTreeMap<String, GeoPoint>,
    mission_hours: f64,
    scope: Scope,
    big_m: BigM,
) -> Result<Instance> {
    for a in assets {
        if !homeports.iter().any(|h| h.id == a.current_homeport) {
            return Err(Error::domain(format!(
                "asset {} has unknown current homeport {}",
                a.id, a.current_homeport
            )));
        }
    }
    let occupied: BTreeSet<&str> = assets.iter().map(|a| a.current_homeport.as_str()).collect();
    let homeports: Vec<Homeport> = homeports
        .iter()
        .filter(|h| scope == Scope::PacificRegion || occupied.contains(h.id.as_str()))
        .cloned()
        .collect();
    let zones = scenario
        .levels
        .iter()
        .map(|(id, levels)| {
            let position = *zone_positions
                .get(id)
                .ok_or_else(|| Error::domain(format!("zone {id} has no position")))?;
            Ok(DemandNode {
                zone_id: id.clone(),
                position,
                levels: levels.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Instance::new(assets.to_vec(), homeports, zones, mission_hours, big_m)
}

/// Integer decision in index form: one homeport per asset and sparse
/// allocation counts keyed by `(asset, homeport, zone)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub homeport: Vec<usize>,
    pub y: BTreeMap<(usize, usize, usize), u32>,
}

impl Plan {
    /// `(f1, f2)`: relocation hours and deployment hours.
    pub fn objectives(&self, inst: &Instance) -> (f64, f64) {
        let f1 = self
            .homeport
            .iter()
            .enumerate()
            .map(|(h, &i)| inst.relocation_hours(h, i).unwrap_or(f64::INFINITY))
            .sum();
        let f2 = self
            .y
            .iter()
            .map(|(&(h, i, j), &n)| inst.deploy_hours(h, i, j) * n as f64)
            .sum();
        (f1, f2)
    }

    /// Checks every model constraint; `Err` names the first violation.
    pub fn verify(&self, inst: &Instance) -> std::result::Result<(), String> {
        if self.homeport.len() != inst.assets.len() {
            return Err("every asset needs exactly one homeport".into());
        }
        for (h, &i) in self.homeport.iter().enumerate() {
            if i >= inst.homeports.len() || inst.relocation_hours(h, i).is_none() {
                return Err(format!("asset {} at a forbidden homeport", inst.assets[h].id));
            }
        }
        let mut served: BTreeMap<(AssetCategory, usize), u64> = BTreeMap::new();
        let mut hours = vec![0.0; inst.assets.len()];
        let mut missions: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(h, i, j), &n) in &self.y {
            if n == 0 {
                continue;
            }
            if i != self.homeport[h] {
                return Err(format!("asset {} serves from a homeport it is not at", inst.assets[h].id));
            }
            *served.entry((inst.assets[h].category, j)).or_default() += n as u64;
            hours[h] += (2.0 * inst.deploy_hours(h, i, j) + inst.mission_hours) * n as f64;
            *missions.entry((h, i)).or_default() += n as f64;
        }
        for (j, z) in inst.zones.iter().enumerate() {
            for c in AssetCategory::ALL {
                let got = served.get(&(c, j)).copied().unwrap_or(0);
                if got < z.level(c) as u64 {
                    return Err(format!("zone {} gets {got} of {} {c} missions", z.zone_id, z.level(c)));
                }
            }
        }
        for ((h, _), n) in missions {
            if n > inst.q(h) {
                return Err(format!("asset {} exceeds its big-M", inst.assets[h].id));
            }
        }
        for (h, used) in hours.iter().enumerate() {
            if *used > inst.assets[h].monthly_hours + CAPACITY_TOL {
                return Err(format!("asset {} uses {used} of {} hours", inst.assets[h].id, inst.assets[h].monthly_hours));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    BoundedGapReached,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub asset: String,
    pub homeport: String,
    pub zone: String,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Not persisted, so repeated runs produce identical artifacts.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub weights: (f64, f64),
    /// Asset id to homeport id.
    pub x: BTreeMap<String, String>,
    pub y: Vec<Allocation>,
    pub f1: f64,
    pub f2: f64,
    pub objective: f64,
    pub bound_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub infeasibility: Option<String>,
    pub stats: SolveStats,
}

impl Solution {
    fn infeasible(weights: (f64, f64), reason: String, stats: SolveStats) -> Self {
        Solution {
            status: SolveStatus::Infeasible,
            weights,
            x: BTreeMap::new(),
            y: Vec::new(),
            f1: f64::NAN,
            f2: f64::NAN,
            objective: f64::NAN,
            bound_gap: 0.0,
            infeasibility: Some(reason),
            stats,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.status != SolveStatus::Infeasible
    }

    /// Index form of the decision, for verification against `inst`.
    pub fn plan(&self, inst: &Instance) -> Result<Plan> {
        let hp = |id: &str| {
            inst.homeports
                .iter()
                .position(|h| h.id == id)
                .ok_or_else(|| Error::domain(format!("unknown homeport {id}")))
        };
        let ap = |id: &str| {
            inst.assets
                .iter()
                .position(|a| a.id == id)
                .ok_or_else(|| Error::domain(format!("unknown asset {id}")))
        };
        let mut homeport = vec![usize::MAX; inst.assets.len()];
        for (a, h) in &self.x {
            homeport[ap(a)?] = hp(h)?;
        }
        let mut y = BTreeMap::new();
        for al in &self.y {
            let j = inst
                .zones
                .iter()
                .position(|z| z.zone_id == al.zone)
                .ok_or_else(|| Error::domain(format!("unknown zone {}", al.zone)))?;
            y.insert((ap(&al.asset)?, hp(&al.homeport)?, j), al.count);
        }
        Ok(Plan { homeport, y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Adds per-homeport capacity linking rows, per-variable linking rows
    /// `y <= ub * x` and demand-level variable bounds. All are valid for
    /// every optimal solution and tighten the relaxation considerably.
    pub strengthen: bool,
    pub node_limit: Option<usize>,
    pub exec: Exec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            strengthen: true,
            node_limit: None,
            exec: Exec::Parallel,
        }
    }
}

struct YVar {
    h: usize,
    i: usize,
    j: usize,
    col: usize,
    hours: f64,
}

struct CategoryModel {
    assets: Vec<usize>,
    /// `(asset, homeport, col)` for each location variable.
    xvars: Vec<(usize, usize, usize)>,
    yvars: Vec<YVar>,
    problem: MilpProblem,
}

enum Built {
    Model(CategoryModel),
    Infeasible(String),
    Empty,
}

fn build_category(
    inst: &Instance,
    cat: AssetCategory,
    weights: (f64, f64),
    opts: &SolveOptions,
    fixed: Option<&[usize]>,
) -> Built {
    let assets: Vec<usize> = (0..inst.assets.len()).filter(|&h| inst.assets[h].category == cat).collect();
    let demand: Vec<(usize, u32)> = inst
        .zones
        .iter()
        .enumerate()
        .map(|(j, z)| (j, z.level(cat)))
        .filter(|&(_, l)| l > 0)
        .collect();
    if assets.is_empty() {
        return if demand.is_empty() {
            Built::Empty
        } else {
            Built::Infeasible(format!("{cat}: demand but no assets"))
        };
    }
    let t = inst.mission_hours;
    let allowed = |h: usize| -> Vec<usize> {
        match fixed {
            Some(f) => vec![f[h]],
            None => inst.compatible_homeports(h).collect(),
        }
    };

    // Aggregate capacity check.
    let total: u64 = demand.iter().map(|&(_, l)| l as u64).sum();
    if total > 0 {
        let capacity: u64 = assets
            .iter()
            .map(|&h| {
                let dmin = allowed(h)
                    .into_iter()
                    .flat_map(|i| demand.iter().map(move |&(j, _)| inst.deploy_hours(h, i, j)))
                    .fold(f64::INFINITY, f64::min);
                (inst.assets[h].monthly_hours / (2.0 * dmin + t)).floor() as u64
            })
            .sum();
        if capacity < total {
            return Built::Infeasible(format!(
                "{cat}: demand of {total} missions exceeds the fleet capacity bound of {capacity}"
            ));
        }
    }

    let mut lp = LinearProgram::new(0);
    let mut integer = Vec::new();
    let mut priority = Vec::new();
    let mut push_col = |lp: &mut LinearProgram, cost: f64, lo: f64, hi: f64, prio: u8| {
        lp.objective.push(cost);
        lp.lower.push(lo);
        lp.upper.push(hi);
        integer.push(true);
        priority.push(prio);
        lp.objective.len() - 1
    };
    let mut xvars = Vec::new();
    for &h in &assets {
        let options = allowed(h);
        for i in inst.compatible_homeports(h) {
            let lo_hi = match fixed {
                Some(_) if options.contains(&i) => (1.0, 1.0),
                Some(_) => continue,
                None => (0.0, 1.0),
            };
            let c = inst.relocation_hours(h, i).expect("compatible");
            let col = push_col(&mut lp, weights.0 * c, lo_hi.0, lo_hi.1, 0);
            xvars.push((h, i, col));
        }
    }
    let mut yvars = Vec::new();
    for &(h, i, _) in &xvars {
        let u = inst.assets[h].monthly_hours;
        for &(j, l) in &demand {
            let d = inst.deploy_hours(h, i, j);
            let hours = 2.0 * d + t;
            if hours > u {
                continue;
            }
            let mut ub = inst.q(h).min((u / hours).floor());
            if opts.strengthen {
                ub = ub.min(l as f64);
            }
            let col = push_col(&mut lp, weights.1 * d, 0.0, ub, 1);
            yvars.push(YVar { h, i, j, col, hours });
        }
    }
    for &(j, _) in &demand {
        if !yvars.iter().any(|y| y.j == j) {
            return Built::Infeasible(format!("{cat}: no asset can reach zone {}", inst.zones[j].zone_id));
        }
    }

    // Each asset at exactly one homeport.
    for &h in &assets {
        let coefs = xvars.iter().filter(|x| x.0 == h).map(|x| (x.2, 1.0)).collect();
        lp.add_row(coefs, Sense::Eq, 1.0);
    }
    // Demand coverage.
    for &(j, l) in &demand {
        let coefs = yvars.iter().filter(|y| y.j == j).map(|y| (y.col, 1.0)).collect();
        lp.add_row(coefs, Sense::Ge, l as f64);
    }
    // Linking and capacity.
    for &(h, i, xcol) in &xvars {
        let ys: Vec<&YVar> = yvars.iter().filter(|y| y.h == h && y.i == i).collect();
        if ys.is_empty() {
            continue;
        }
        let mut coefs: Vec<(usize, f64)> = ys.iter().map(|y| (y.col, 1.0)).collect();
        coefs.push((xcol, -inst.q(h)));
        lp.add_row(coefs, Sense::Le, 0.0);
        if opts.strengthen {
            let mut coefs: Vec<(usize, f64)> = ys.iter().map(|y| (y.col, y.hours)).collect();
            coefs.push((xcol, -inst.assets[h].monthly_hours));
            lp.add_row(coefs, Sense::Le, 0.0);
            for y in &ys {
                lp.add_row(vec![(y.col, 1.0), (xcol, -lp.upper[y.col])], Sense::Le, 0.0);
            }
        }
    }
    for &h in &assets {
        let coefs: Vec<(usize, f64)> = yvars.iter().filter(|y| y.h == h).map(|y| (y.col, y.hours)).collect();
        if !coefs.is_empty() {
            lp.add_row(coefs, Sense::Le, inst.assets[h].monthly_hours);
        }
    }
    Built::Model(CategoryModel {
        assets,
        xvars,
        yvars,
        problem: MilpProblem { lp, integer, priority },
    })
}

impl CategoryModel {
    /// Greedy nearest-asset allocation for a fixed homeport per asset.
    fn greedy(&self, inst: &Instance, home: &BTreeMap<usize, usize>) -> Option<Vec<f64>> {
        let p = &self.problem;
        let mut x = vec![0.0; p.lp.num_vars()];
        for &(h, i, col) in &self.xvars {
            if home.get(&h) == Some(&i) {
                x[col] = 1.0;
            }
        }
        let mut remaining: BTreeMap<usize, f64> =
            self.assets.iter().map(|&h| (h, inst.assets[h].monthly_hours)).collect();
        let mut missions: BTreeMap<usize, f64> = BTreeMap::new();
        let demand: BTreeSet<usize> = self.yvars.iter().map(|y| y.j).collect();
        for j in demand {
            let need = inst.zones[j].level(inst.assets[self.assets[0]].category);
            for _ in 0..need {
                let pick = self
                    .yvars
                    .iter()
                    .filter(|y| y.j == j && home.get(&y.h) == Some(&y.i))
                    .filter(|y| x[y.col] + 1.0 <= p.lp.upper[y.col])
                    .filter(|y| remaining[&y.h] + CAPACITY_TOL >= y.hours)
                    .filter(|y| missions.get(&y.h).copied().unwrap_or(0.0) + 1.0 <= inst.q(y.h))
                    .min_by(|a, b| p.lp.objective[a.col].total_cmp(&p.lp.objective[b.col]).then(a.h.cmp(&b.h)))?;
                x[pick.col] += 1.0;
                *remaining.get_mut(&pick.h).unwrap() -= pick.hours;
                *missions.entry(pick.h).or_default() += 1.0;
            }
        }
        p.is_feasible(&x, INTEGRALITY_TOL).then_some(x)
    }

    fn incumbent(&self, inst: &Instance, root_x: Option<&[f64]>) -> Option<Vec<f64>> {
        let p = &self.problem;
        let current: BTreeMap<usize, usize> = self
            .xvars
            .iter()
            .filter(|x| p.lp.upper[x.2] > 0.5)
            .filter(|x| x.1 == inst.current_homeport(x.0) || p.lp.lower[x.2] > 0.5)
            .map(|x| (x.0, x.1))
            .collect();
        let mut candidates = vec![self.greedy(inst, &current)];
        if let Some(rx) = root_x {
            let mut home = BTreeMap::new();
            for &h in &self.assets {
                if let Some(&(_, i, _)) = self
                    .xvars
                    .iter()
                    .filter(|x| x.0 == h)
                    .max_by(|a, b| rx[a.2].total_cmp(&rx[b.2]).then(b.1.cmp(&a.1)))
                {
                    home.insert(h, i);
                }
            }
            candidates.push(self.greedy(inst, &home));
        }
        candidates
            .into_iter()
            .flatten()
            .min_by(|a, b| p.lp.objective_value(a).total_cmp(&p.lp.objective_value(b)))
    }

    fn decode(&self, x: &[f64], plan: &mut Plan) {
        for &(h, i, col) in &self.xvars {
            if x[col] > 0.5 {
                plan.homeport[h] = i;
            }
        }
        for y in &self.yvars {
            let n = x[y.col].round() as u32;
            if n > 0 {
                plan.y.insert((y.h, y.i, y.j), n);
            }
        }
    }
}

fn check_weights(w: (f64, f64)) -> Result<()> {
    if !(w.0 >= 0.0 && w.1 >= 0.0) || (w.0 + w.1 - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("weights {w:?} must be non-negative and sum to 1")));
    }
    Ok(())
}

enum CategoryOutcome {
    Solved { x: Vec<f64>, gap: f64, limited: bool, stats: BnbStats },
    Infeasible { reason: String, stats: BnbStats },
    Empty,
}

fn solve_category(
    inst: &Instance,
    cat: AssetCategory,
    weights: (f64, f64),
    opts: &SolveOptions,
    fixed: Option<&[usize]>,
) -> Result<(CategoryOutcome, Option<CategoryModel>)> {
    let model = match build_category(inst, cat, weights, opts, fixed) {
        Built::Empty => return Ok((CategoryOutcome::Empty, None)),
        Built::Infeasible(reason) => {
            return Ok((
                CategoryOutcome::Infeasible {
                    reason,
                    stats: BnbStats::default(),
                },
                None,
            ))
        }
        Built::Model(m) => m,
    };
    let mut stats = BnbStats::default();
    let root = lp_solve(&model.problem.lp)?;
    stats.nodes += 1;
    stats.lp_iterations += root.iterations();
    let root_x = match &root {
        LpOutcome::Optimal(s) => Some(s.x.as_slice()),
        _ => None,
    };
    let seed = model.incumbent(inst, root_x);
    let result = branch_and_bound(
        &model.problem,
        seed,
        &BnbOptions {
            node_limit: opts.node_limit,
        },
    )?;
    stats += result.stats;
    let outcome = match result.status {
        BnbStatus::Infeasible => CategoryOutcome::Infeasible {
            reason: format!("{cat}: no integer allocation covers the demand"),
            stats,
        },
        BnbStatus::Optimal | BnbStatus::NodeLimit => match &result.best {
            Some((x, _)) => CategoryOutcome::Solved {
                x: x.clone(),
                gap: result.gap(),
                limited: result.status == BnbStatus::NodeLimit,
                stats,
            },
            None => CategoryOutcome::Infeasible {
                reason: format!("{cat}: node limit reached before any feasible allocation"),
                stats,
            },
        },
    };
    Ok((outcome, Some(model)))
}

fn solve_inner(inst: &Instance, weights: (f64, f64), opts: &SolveOptions, fixed: Option<&[usize]>) -> Result<Solution> {
    let start = Instant::now();
    let results = opts
        .exec
        .map(&AssetCategory::ALL, |&cat| solve_category(inst, cat, weights, opts, fixed));
    let mut stats = SolveStats::default();
    let mut plan = Plan {
        homeport: (0..inst.assets.len()).map(|h| inst.current_homeport(h)).collect(),
        y: BTreeMap::new(),
    };
    let mut gap = 0.0f64;
    let mut limited = false;
    let mut reasons = Vec::new();
    for r in results {
        let (outcome, model) = r?;
        match outcome {
            CategoryOutcome::Empty => {}
            CategoryOutcome::Infeasible { reason, stats: s } => {
                stats.nodes += s.nodes;
                stats.lp_iterations += s.lp_iterations;
                reasons.push(reason);
            }
            CategoryOutcome::Solved { x, gap: g, limited: l, stats: s } => {
                stats.nodes += s.nodes;
                stats.lp_iterations += s.lp_iterations;
                gap = gap.max(g);
                limited |= l;
                model.expect("solved categories have models").decode(&x, &mut plan);
            }
        }
    }
    stats.wall_time_s = start.elapsed().as_secs_f64();
    if !reasons.is_empty() {
        return Ok(Solution::infeasible(weights, reasons.join("; "), stats));
    }
    if let Err(v) = plan.verify(inst) {
        return Err(Error::Internal(format!("solver produced an invalid plan: {v}")));
    }
    let (f1, f2) = plan.objectives(inst);
    Ok(Solution {
        status: if limited {
            SolveStatus::BoundedGapReached
        } else {
            SolveStatus::Optimal
        },
        weights,
        x: plan
            .homeport
            .iter()
            .enumerate()
            .map(|(h, &i)| (inst.assets[h].id.clone(), inst.homeports[i].id.clone()))
            .collect(),
        y: plan
            .y
            .iter()
            .map(|(&(h, i, j), &n)| Allocation {
                asset: inst.assets[h].id.clone(),
                homeport: inst.homeports[i].id.clone(),
                zone: inst.zones[j].zone_id.clone(),
                count: n,
            })
            .collect(),
        f1,
        f2,
        objective: weights.0 * f1 + weights.1 * f2,
        bound_gap: gap,
        infeasibility: None,
        stats,
    })
}

/// Minimizes `w1 * f1 + w2 * f2`. Infeasible instances yield a solution
/// with status [`SolveStatus::Infeasible`] and a per-category explanation.
pub fn solve(inst: &Instance, weights: (f64, f64), opts: &SolveOptions) -> Result<Solution> {
    check_weights(weights)?;
    solve_inner(inst, weights, opts, None)
}

/// As [`solve`] but without normalizing the weights.
pub fn solve_unnormalized(inst: &Instance, weights: (f64, f64), opts: &SolveOptions) -> Result<Solution> {
    if !(weights.0 >= 0.0 && weights.1 >= 0.0 && weights.0.is_finite() && weights.1.is_finite()) {
        return Err(Error::domain(format!("weights {weights:?} must be non-negative")));
    }
    solve_inner(inst, weights, opts, None)
}

/// Optimal allocation with every asset pinned to `homeports[h]`.
pub fn solve_fixed_locations(inst: &Instance, homeports: &[usize], weights: (f64, f64), opts: &SolveOptions) -> Result<Solution> {
    check_weights(weights)?;
    if homeports.len() != inst.assets.len() {
        return Err(Error::domain("one homeport per asset is required"));
    }
    for (h, &i) in homeports.iter().enumerate() {
        if i >= inst.homeports.len() || inst.relocation_hours(h, i).is_none() {
            return Err(Error::domain(format!("asset {} cannot be pinned there", inst.assets[h].id)));
        }
    }
    solve_inner(inst, weights, opts, Some(homeports))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub w1: f64,
    pub w2: f64,
    pub f1: f64,
    pub f2: f64,
    pub status: SolveStatus,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub f1: f64,
    pub f2: f64,
    pub weights: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    /// One entry per weight pair, in grid order.
    pub entries: Vec<ParetoEntry>,
    /// Distinct non-dominated points.
    pub points: Vec<ParetoPoint>,
    /// Whether `f1` never rose and `f2` never fell as `w1` grew.
    pub monotone: bool,
    pub solutions: Vec<Solution>,
}

const FRONT_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= FRONT_TOL * a.abs().max(b.abs()).max(1.0)
}

/// True when `(a1, a2)` is no worse on both objectives and better on one.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    let le = |x: f64, y: f64| x <= y || close(x, y);
    le(a.0, b.0) && le(a.1, b.1) && !(close(a.0, b.0) && close(a.1, b.1))
}

/// Solves every weight pair and filters the non-dominated points.
pub fn pareto_sweep(inst: &Instance, grid: &[(f64, f64)], opts: &SolveOptions) -> Result<ParetoFront> {
    for &w in grid {
        check_weights(w)?;
    }
    let solutions: Vec<Solution> = opts
        .exec
        .map(grid, |&w| solve(inst, w, opts))
        .into_iter()
        .collect::<Result<_>>()?;
    if !solutions.iter().any(Solution::is_solved) {
        return Err(Error::Infeasible(
            solutions
                .first()
                .and_then(|s| s.infeasibility.clone())
                .unwrap_or_else(|| "empty weight grid".into()),
        ));
    }
    let solved: Vec<(f64, f64)> = solutions.iter().filter(|s| s.is_solved()).map(|s| (s.f1, s.f2)).collect();
    let entries: Vec<ParetoEntry> = solutions
        .iter()
        .map(|s| ParetoEntry {
            w1: s.weights.0,
            w2: s.weights.1,
            f1: s.f1,
            f2: s.f2,
            status: s.status,
            dominated: s.is_solved() && solved.iter().any(|&o| dominates(o, (s.f1, s.f2))),
        })
        .collect();
    let mut points: Vec<ParetoPoint> = Vec::new();
    for e in entries.iter().filter(|e| e.status != SolveStatus::Infeasible && !e.dominated) {
        match points.iter_mut().find(|p| close(p.f1, e.f1) && close(p.f2, e.f2)) {
            Some(p) => p.weights.push((e.w1, e.w2)),
            None => points.push(ParetoPoint {
                f1: e.f1,
                f2: e.f2,
                weights: vec![(e.w1, e.w2)],
            }),
        }
    }
    let mut order: Vec<&ParetoEntry> = entries.iter().filter(|e| e.status == SolveStatus::Optimal).collect();
    order.sort_by(|a, b| a.w1.total_cmp(&b.w1));
    let monotone = order
        .windows(2)
        .all(|p| (p[1].f1 <= p[0].f1 || close(p[1].f1, p[0].f1)) && (p[1].f2 >= p[0].f2 || close(p[1].f2, p[0].f2)));
    Ok(ParetoFront {
        entries,
        points,
        monotone,
        solutions,
    })
}

/// Writes `w1,w2,f1,f2,dominated` rows.
pub fn write_pareto_csv<W: std::io::Write>(w: W, front: &ParetoFront) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["w1", "w2", "f1", "f2", "dominated"])?;
    for e in &front.entries {
        out.write_record([
            format!("{}", e.w1),
            format!("{}", e.w2),
            format!("{:.6}", e.f1),
            format!("{:.6}", e.f2),
            e.dominated.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("pareto csv", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEvaluation {
    pub weights: (f64, f64),
    /// Relocation hours of the fixed posture.
    pub f1: f64,
    /// Deployment hours for the second demand mix; `None` if the posture
    /// cannot cover it.
    pub f2: Option<f64>,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub infeasibility: Option<String>,
    pub locations: BTreeMap<String, String>,
}

/// Fixes the locations optimal for `a` and re-optimizes allocation against
/// the demand of `b`.
pub fn cross_evaluate(a: &Instance, b: &Instance, weights: (f64, f64), opts: &SolveOptions) -> Result<CrossEvaluation> {
    if a.assets != b.assets || a.homeports != b.homeports {
        return Err(Error::domain("cross-evaluation needs identical fleets and homeports"));
    }
    let sa = solve(a, weights, opts)?;
    if !sa.is_solved() {
        return Err(Error::Infeasible(sa.infeasibility.unwrap_or_default()));
    }
    let home = sa.plan(a)?.homeport;
    let sb = solve_fixed_locations(b, &home, weights, opts)?;
    Ok(CrossEvaluation {
        weights,
        f1: sa.f1,
        f2: sb.is_solved().then_some(sb.f2),
        feasible: sb.is_solved(),
        infeasibility: sb.infeasibility,
        locations: sa.x,
    })
}
