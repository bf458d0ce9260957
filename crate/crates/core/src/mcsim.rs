//! Monte Carlo replication of monthly asset demand per zone.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::distfit::{CountModel, ResponseModel, MAX_AERO, MAX_MARITIME};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::milp::AssetCategory;
use crate::zoning::AssetClass;

pub const DEFAULT_MONTHS: usize = 10_000;
pub const SUPPORTED_PERCENTILES: [u8; 5] = [0, 25, 50, 75, 100];

pub fn sample_count<R: Rng>(model: &CountModel, rng: &mut R) -> u32 {
    let rate = match *model {
        CountModel::Poisson { lambda } => lambda,
        CountModel::GammaPoisson { alpha, beta, .. } => {
            Gamma::new(alpha, beta).expect("validated model").sample(rng)
        }
    };
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as u32
}

/// Draws a capped `(maritime, aero)` response, possibly `(0, 0)`.
pub fn sample_response<R: Rng>(model: &ResponseModel, rng: &mut R) -> (u32, u32) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = (0, 0);
    for m in 0..=MAX_MARITIME {
        for a in 0..=MAX_AERO {
            let p = model.level_prob(m, a);
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = (m, a);
            if u < acc {
                return last;
            }
        }
    }
    // Rounding left u above the cumulative total.
    last
}

/// Everything needed to simulate one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneModel {
    pub zone_id: String,
    pub asset_class: AssetClass,
    pub count: CountModel,
    pub response: ResponseModel,
}

impl ZoneModel {
    /// Categories receiving the maritime and aero demand.
    pub fn categories(&self) -> (AssetCategory, AssetCategory) {
        match self.asset_class {
            AssetClass::BoatHelicopter => (AssetCategory::Boat, AssetCategory::Helicopter),
            AssetClass::CutterAirplane => (AssetCategory::Cutter, AssetCategory::Airplane),
        }
    }
}

/// Substream derived from the zone id so results do not depend on zone order.
fn zone_stream(zone_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in zone_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn zone_rng(seed: u64, zone_id: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(zone_stream(zone_id));
    rng
}

/// Monthly `(maritime, aero)` demand for `months` replications.
pub fn simulate_months(zone: &ZoneModel, months: usize, seed: u64) -> Result<Vec<(u32, u32)>> {
    zone.count.validate()?;
    let mut rng = zone_rng(seed, &zone.zone_id);
    Ok((0..months)
        .map(|_| {
            let n = sample_count(&zone.count, &mut rng);
            (0..n).fold((0, 0), |acc, _| {
                let (m, a) = sample_response(&zone.response, &mut rng);
                (acc.0 + m, acc.1 + a)
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub mean: f64,
    pub std_dev: f64,
    pub min: u32,
    pub p25: u32,
    pub p50: u32,
    pub p75: u32,
    pub max: u32,
}

impl DemandStats {
    pub fn at(&self, percentile: u8) -> Result<u32> {
        match percentile {
            0 => Ok(self.min),
            25 => Ok(self.p25),
            50 => Ok(self.p50),
            75 => Ok(self.p75),
            100 => Ok(self.max),
            p => Err(Error::domain(format!(
                "percentile {p} not in {SUPPORTED_PERCENTILES:?}"
            ))),
        }
    }
}

/// The `ceil(q * n)`-th smallest value (1-based), clamped to the first.
pub fn nearest_rank(sorted: &[u32], q: f64) -> u32 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

pub fn summarize(values: &[u32]) -> Result<DemandStats> {
    if values.is_empty() {
        return Err(Error::domain("summary needs at least one replication"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let std_dev = if values.len() > 1 {
        (values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(DemandStats {
        mean,
        std_dev,
        min: sorted[0],
        p25: nearest_rank(&sorted, 0.25),
        p50: nearest_rank(&sorted, 0.50),
        p75: nearest_rank(&sorted, 0.75),
        max: *sorted.last().unwrap(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSummary {
    pub zone_id: String,
    pub asset_class: AssetClass,
    pub demand: BTreeMap<AssetCategory, DemandStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub months: usize,
    pub seed: u64,
    pub zones: Vec<ZoneSummary>,
}

/// Simulates and summarizes every zone. Zones are independent and may run
/// in parallel.
pub fn simulate_all(zones: &[ZoneModel], months: usize, seed: u64, exec: Exec) -> Result<SimSummary> {
    if months == 0 {
        return Err(Error::domain("at least one month must be simulated"));
    }
    let per_zone = exec.map(zones, |z| -> Result<ZoneSummary> {
        let draws = simulate_months(z, months, seed)?;
        let maritime: Vec<u32> = draws.iter().map(|d| d.0).collect();
        let aero: Vec<u32> = draws.iter().map(|d| d.1).collect();
        let (mc, ac) = z.categories();
        Ok(ZoneSummary {
            zone_id: z.zone_id.clone(),
            asset_class: z.asset_class,
            demand: [(mc, summarize(&maritime)?), (ac, summarize(&aero)?)].into_iter().collect(),
        })
    });
    Ok(SimSummary {
        months,
        seed,
        zones: per_zone.into_iter().collect::<Result<_>>()?,
    })
}

/// Integer demand levels `l_nj` at one percentile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandScenario {
    pub percentile: u8,
    /// Zone id to category to level.
    pub levels: BTreeMap<String, BTreeMap<AssetCategory, u32>>,
}

impl DemandScenario {
    pub fn level(&self, zone_id: &str, category: AssetCategory) -> u32 {
        self.levels
            .get(zone_id)
            .and_then(|m| m.get(&category))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self, category: AssetCategory) -> u32 {
        self.levels.values().filter_map(|m| m.get(&category)).sum()
    }
}

pub fn build_scenario(summary: &SimSummary, percentile: u8) -> Result<DemandScenario> {
    if !SUPPORTED_PERCENTILES.contains(&percentile) {
        return Err(Error::domain(format!(
            "percentile {percentile} not in {SUPPORTED_PERCENTILES:?}"
        )));
    }
    let mut levels = BTreeMap::new();
    for z in &summary.zones {
        let per_cat = z
            .demand
            .iter()
            .map(|(c, s)| Ok((*c, s.at(percentile)?)))
            .collect::<Result<_>>()?;
        levels.insert(z.zone_id.clone(), per_cat);
    }
    Ok(DemandScenario { percentile, levels })
}
