//! Independent oracles shared by the integration and acceptance tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sar_core::milp::{
    default_weight_grid, Asset, AssetCategory, BigM, DemandNode, Homeport, HomeportKind, Instance, LinearProgram,
    Sense,
};
use sar_core::GeoPoint;

pub const ORACLE_INSTANCES: u64 = 150;
pub const ORACLE_LPS: u64 = 50;
const HOUR_TOL: f64 = 1e-6;

fn kinds_for(c: AssetCategory) -> HomeportKind {
    match c {
        AssetCategory::Boat | AssetCategory::Cutter => HomeportKind::Harbor,
        AssetCategory::Helicopter | AssetCategory::Airplane => HomeportKind::Airport,
    }
}

/// At most three assets, homeports and zones, with levels up to two.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        GeoPoint::new(rng.random_range(19.0..22.0), rng.random_range(155.0..159.0)).unwrap()
    };
    let n_ports = rng.random_range(1..=3);
    let homeports: Vec<Homeport> = (0..n_ports)
        .map(|i| Homeport {
            id: format!("P{i}"),
            kind: if rng.random_bool(0.6) { HomeportKind::Harbor } else { HomeportKind::Airport },
            position: point(&mut rng),
        })
        .collect();
    let n_assets = rng.random_range(1..=3);
    let mut assets = Vec::new();
    for h in 0..n_assets {
        let category = AssetCategory::ALL[rng.random_range(0..4)];
        let options: Vec<&Homeport> = homeports.iter().filter(|p| p.kind == kinds_for(category)).collect();
        let Some(home) = options.get(rng.random_range(0..options.len().max(1))) else {
            continue;
        };
        let cruise = rng.random_range(10.0..30.0);
        assets.push(Asset {
            id: format!("A{h}"),
            category,
            cruise_speed_kts: cruise,
            max_speed_kts: cruise * rng.random_range(1.0..1.5),
            monthly_hours: rng.random_range(8.0..60.0),
            current_homeport: home.id.clone(),
        });
    }
    let present: BTreeSet<AssetCategory> = assets.iter().map(|a| a.category).collect();
    let n_zones = rng.random_range(1..=3);
    let zones = (0..n_zones)
        .map(|j| DemandNode {
            zone_id: format!("Z{j}"),
            position: point(&mut rng),
            levels: present
                .iter()
                .filter_map(|&c| rng.random_bool(0.7).then(|| (c, rng.random_range(0..=2))))
                .collect(),
        })
        .collect();
    Instance::new(assets, homeports, zones, 1.5, BigM::Tightened).unwrap()
}

pub fn oracle_weights(seed: u64) -> (f64, f64) {
    let grid = default_weight_grid();
    grid[seed as usize % grid.len()]
}

/// Minimum weighted objective by exhaustive enumeration, or `None` when no
/// integer solution exists. Missions beyond the demand level never lower
/// the objective because every deployment time is non-negative, so exactly
/// `l` missions are placed per zone and category.
pub fn brute_force(inst: &Instance, w: (f64, f64)) -> Option<f64> {
    let n = inst.assets().len();
    let options: Vec<Vec<usize>> = (0..n)
        .map(|h| (0..inst.homeports().len()).filter(|&i| inst.relocation_hours(h, i).is_some()).collect())
        .collect();
    let mut best: Option<f64> = None;
    let mut choice = vec![0usize; n];
    loop {
        let home: Vec<usize> = (0..n).map(|h| options[h][choice[h]]).collect();
        let f1: f64 = (0..n).map(|h| inst.relocation_hours(h, home[h]).unwrap()).sum();
        if let Some(f2) = best_allocation(inst, &home) {
            let obj = w.0 * f1 + w.1 * f2;
            if best.is_none_or(|b| obj < b) {
                best = Some(obj);
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Minimum deployment hours with locations fixed.
pub fn best_allocation(inst: &Instance, home: &[usize]) -> Option<f64> {
    let mut missions: Vec<(usize, AssetCategory)> = Vec::new();
    for (j, z) in inst.zones().iter().enumerate() {
        for c in AssetCategory::ALL {
            for _ in 0..z.level(c) {
                missions.push((j, c));
            }
        }
    }
    let n = inst.assets().len();
    let mut hours = vec![0.0; n];
    let mut count = vec![0.0; n];
    let mut best = None;
    place(inst, home, &missions, 0, &mut hours, &mut count, 0.0, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn place(
    inst: &Instance,
    home: &[usize],
    missions: &[(usize, AssetCategory)],
    k: usize,
    hours: &mut [f64],
    count: &mut [f64],
    f2: f64,
    best: &mut Option<f64>,
) {
    if k == missions.len() {
        if best.is_none_or(|b| f2 < b) {
            *best = Some(f2);
        }
        return;
    }
    let (j, c) = missions[k];
    for h in 0..inst.assets().len() {
        if inst.assets()[h].category != c {
            continue;
        }
        let d = inst.deploy_hours(h, home[h], j);
        let used = 2.0 * d + inst.mission_hours();
        if hours[h] + used > inst.assets()[h].monthly_hours + HOUR_TOL || count[h] + 1.0 > inst.q(h) {
            continue;
        }
        hours[h] += used;
        count[h] += 1.0;
        place(inst, home, missions, k + 1, hours, count, f2 + d, best);
        hours[h] -= used;
        count[h] -= 1.0;
    }
}

/// Random box-bounded LP that is feasible at a hidden interior point.
pub fn random_lp(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=8);
    let m = rng.random_range(1..=5);
    let mut lp = LinearProgram::new(n);
    for j in 0..n {
        lp.objective[j] = rng.random_range(-5.0..5.0);
        lp.lower[j] = if rng.random_bool(0.3) { rng.random_range(-3.0..0.0) } else { 0.0 };
        lp.upper[j] = lp.lower[j] + rng.random_range(1.0..6.0);
    }
    let x0: Vec<f64> = (0..n).map(|j| rng.random_range(lp.lower[j]..lp.upper[j])).collect();
    for _ in 0..m {
        let mut coefs: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| rng.random_bool(0.7).then(|| (j, rng.random_range(-4.0..4.0))))
            .collect();
        if coefs.is_empty() {
            coefs.push((rng.random_range(0..n), 1.0));
        }
        let at: f64 = coefs.iter().map(|&(j, a)| a * x0[j]).sum();
        let (sense, rhs) = match rng.random_range(0..3) {
            0 => (Sense::Le, at + rng.random_range(0.0..2.0)),
            1 => (Sense::Ge, at - rng.random_range(0.0..2.0)),
            _ => (Sense::Eq, at),
        };
        lp.add_row(coefs, sense, rhs);
    }
    lp
}

/// Optimum over all basic solutions of a box-bounded LP.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // Hyperplanes `a.x = b`: rows first, then both bounds of each variable.
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &r.coefs {
            a[j] += v;
        }
        planes.push((a, r.rhs));
    }
    for j in 0..n {
        for b in [lp.lower[j], lp.upper[j]] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, b));
        }
    }
    // Every vertex has `n` linearly independent active hyperplanes;
    // equalities are enforced by the feasibility check.
    let mut best: Option<f64> = None;
    for_each_subset(planes.len(), n, &mut |pick| {
        let a: Vec<Vec<f64>> = pick.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = gauss_solve(a, b) {
            if lp.max_violation(&x) <= 1e-7 {
                let obj = lp.objective_value(&x);
                if best.is_none_or(|v| obj < v) {
                    best = Some(obj);
                }
            }
        }
    });
    best
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Objective within `1e-6`, relative for large values.
pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

/// Zone levels scaled to zero, for cross-evaluation checks.
pub fn without_demand(inst: &Instance) -> Instance {
    let zones = inst
        .zones()
        .iter()
        .map(|z| DemandNode {
            levels: BTreeMap::new(),
            ..z.clone()
        })
        .collect();
    inst.with_zones(zones).unwrap()
}
