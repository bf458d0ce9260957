//! Count-distribution fitting for zone event rates and empirical response
//! strategy models.

mod special;

pub use special::{chi2_sf, gamma_q, ln_gamma};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EventRecord;

pub const MAX_MARITIME: u32 = 4;
pub const MAX_AERO: u32 = 2;
pub const MIN_EXPECTED: f64 = 5.0;

/// Event counts per calendar month for one zone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub zone_id: String,
    pub counts: Vec<u32>,
}

impl MonthlySeries {
    pub fn new(zone_id: impl Into<String>, counts: Vec<u32>) -> Self {
        MonthlySeries {
            zone_id: zone_id.into(),
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64).sum::<f64>() / self.counts.len() as f64
    }

    /// Unbiased sample variance; zero for a single month.
    pub fn variance(&self) -> f64 {
        let n = self.counts.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.counts.iter().map(|&c| (c as f64 - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    pub fn is_over_dispersed(&self) -> bool {
        self.len() >= 2 && self.variance() > self.mean()
    }
}

/// Sample autocorrelation at `lag`.
pub fn autocorrelation(series: &MonthlySeries, lag: usize) -> Result<f64> {
    let n = series.len();
    if lag == 0 || lag >= n {
        return Err(Error::domain(format!("lag {lag} outside 1..{n}")));
    }
    let y: Vec<f64> = series.counts.iter().map(|&c| c as f64).collect();
    let m = series.mean();
    let denom: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::domain(format!(
            "autocorrelation of constant series {} is undefined",
            series.zone_id
        )));
    }
    let num: f64 = (lag..n).map(|t| (y[t] - m) * (y[t - lag] - m)).sum();
    Ok(num / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonFit {
    pub lambda: f64,
    /// True for an all-zero series.
    pub degenerate: bool,
}

pub fn fit_poisson(series: &MonthlySeries) -> Result<PoissonFit> {
    if series.is_empty() {
        return Err(Error::domain(format!("series {} is empty", series.zone_id)));
    }
    let lambda = series.mean();
    Ok(PoissonFit {
        lambda,
        degenerate: lambda == 0.0,
    })
}

/// Method-of-moments fit: `beta = (s^2 - m) / m`, `alpha = m / beta`.
pub fn fit_gamma_poisson(series: &MonthlySeries) -> Result<CountModel> {
    if !series.is_over_dispersed() {
        return Err(Error::domain(format!(
            "Gamma-Poisson not applicable: series {} is not over-dispersed",
            series.zone_id
        )));
    }
    let m = series.mean();
    let beta = (series.variance() - m) / m;
    Ok(CountModel::GammaPoisson {
        lambda: m,
        alpha: m / beta,
        beta,
    })
}

/// A fitted monthly count model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CountModel {
    Poisson { lambda: f64 },
    GammaPoisson { lambda: f64, alpha: f64, beta: f64 },
}

impl CountModel {
    pub fn mean(&self) -> f64 {
        match *self {
            CountModel::Poisson { lambda } | CountModel::GammaPoisson { lambda, .. } => lambda,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CountModel::Poisson { lambda } => lambda,
            CountModel::GammaPoisson { alpha, beta, .. } => alpha * beta * (1.0 + beta),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            CountModel::Poisson { .. } => 1,
            CountModel::GammaPoisson { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CountModel::Poisson { lambda } if lambda.is_finite() && lambda >= 0.0 => Ok(()),
            CountModel::GammaPoisson { alpha, beta, .. }
                if alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0 =>
            {
                Ok(())
            }
            other => Err(Error::domain(format!("invalid count model {other:?}"))),
        }
    }

    pub fn ln_pmf(&self, k: u32) -> f64 {
        let kf = k as f64;
        match *self {
            CountModel::Poisson { lambda } => {
                if lambda == 0.0 {
                    return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
                }
                kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)
            }
            CountModel::GammaPoisson { alpha, beta, .. } => {
                ln_gamma(kf + alpha) - ln_gamma(alpha) - ln_gamma(kf + 1.0) - alpha * (1.0 + beta).ln()
                    + kf * (beta / (1.0 + beta)).ln()
            }
        }
    }

    pub fn pmf(&self, k: u32) -> f64 {
        self.ln_pmf(k).exp()
    }
}

/// Outcome of a Pearson chi-squared test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Observed and expected counts per merged bin.
    pub bins: Vec<(f64, f64)>,
}

/// Pearson test on pre-binned counts. The last bin is the right tail.
///
/// Adjacent bins are merged left to right until each expected count
/// reaches five; a short remainder joins the previous bin.
pub fn chisq_test(observed: &[f64], expected: &[f64], fitted_params: usize) -> Result<GofResult> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::domain("observed and expected bins must be non-empty and aligned"));
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= MIN_EXPECTED {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => bins.push(acc),
        }
    }
    if bins.len() < 2 || bins.len() <= 1 + fitted_params {
        return Err(Error::domain(format!(
            "chi-squared test inconclusive: {} bins after merging",
            bins.len()
        )));
    }
    let statistic: f64 = bins.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let df = bins.len() - 1 - fitted_params;
    Ok(GofResult {
        statistic,
        df,
        p_value: chi2_sf(statistic, df as f64),
        bins,
    })
}

/// Goodness of fit of `model` to the monthly counts.
pub fn chisq_gof(series: &MonthlySeries, model: &CountModel) -> Result<GofResult> {
    model.validate()?;
    let max = *series
        .counts
        .iter()
        .max()
        .ok_or_else(|| Error::domain(format!("series {} is empty", series.zone_id)))?;
    let n = series.len() as f64;
    let mut observed = vec![0.0; max as usize + 1];
    for &c in &series.counts {
        observed[c as usize] += 1.0;
    }
    let mut expected: Vec<f64> = (0..=max).map(|k| n * model.pmf(k)).collect();
    let head: f64 = expected[..max as usize].iter().sum();
    expected[max as usize] = (n - head).max(0.0);
    chisq_test(&observed, &expected, model.parameter_count())
}

/// Selected count model for a zone with both test results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub model: CountModel,
    pub poisson_lambda: f64,
    pub gamma_poisson: Option<(f64, f64)>,
    pub gof_p_poisson: Option<f64>,
    pub gof_p_gamma_poisson: Option<f64>,
}

/// Fits both models and keeps Gamma-Poisson only when it is applicable and
/// fits strictly better.
pub fn select_distribution(series: &MonthlySeries) -> Result<CountDistribution> {
    let poisson = fit_poisson(series)?;
    let poisson_model = CountModel::Poisson { lambda: poisson.lambda };
    let gof_p_poisson = chisq_gof(series, &poisson_model).ok().map(|g| g.p_value);
    let gp = fit_gamma_poisson(series).ok();
    let gof_p_gamma_poisson = gp.and_then(|m| chisq_gof(series, &m).ok()).map(|g| g.p_value);
    let better = matches!((gof_p_gamma_poisson, gof_p_poisson), (Some(g), Some(p)) if g > p);
    let model = match gp {
        Some(m) if better => m,
        _ => poisson_model,
    };
    Ok(CountDistribution {
        model,
        poisson_lambda: poisson.lambda,
        gamma_poisson: gp.map(|m| match m {
            CountModel::GammaPoisson { alpha, beta, .. } => (alpha, beta),
            CountModel::Poisson { .. } => unreachable!(),
        }),
        gof_p_poisson,
        gof_p_gamma_poisson,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    AircraftOnly,
    MaritimeOnly,
    MaritimeAndAircraft,
    NoResponse,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::AircraftOnly,
        Strategy::MaritimeOnly,
        Strategy::MaritimeAndAircraft,
        Strategy::NoResponse,
    ];

    pub fn of(maritime: u32, aero: u32) -> Self {
        match (maritime > 0, aero > 0) {
            (false, true) => Strategy::AircraftOnly,
            (true, false) => Strategy::MaritimeOnly,
            (true, true) => Strategy::MaritimeAndAircraft,
            (false, false) => Strategy::NoResponse,
        }
    }
}

/// Empirical response distribution of a zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseModel {
    pub events: usize,
    /// Including no-response events.
    pub strategy_pmf: BTreeMap<Strategy, f64>,
    /// Renormalized over the three responding strategies. Empty if no event
    /// drew a response.
    pub responding_pmf: BTreeMap<Strategy, f64>,
    /// `level_pmf[m][a]` is the probability of `m` maritime and `a` aero
    /// assets, after capping.
    pub level_pmf: [[f64; (MAX_AERO + 1) as usize]; (MAX_MARITIME + 1) as usize],
}

impl ResponseModel {
    /// A model that always dispatches `(maritime, aero)`.
    pub fn degenerate(maritime: u32, aero: u32) -> Result<Self> {
        if maritime > MAX_MARITIME || aero > MAX_AERO {
            return Err(Error::domain(format!("response ({maritime}, {aero}) exceeds caps")));
        }
        let mut level_pmf = [[0.0; 3]; 5];
        level_pmf[maritime as usize][aero as usize] = 1.0;
        Self::from_levels(level_pmf, 0)
    }

    /// Builds the strategy marginals from a level table summing to one.
    pub fn from_levels(level_pmf: [[f64; 3]; 5], events: usize) -> Result<Self> {
        let total: f64 = level_pmf.iter().flatten().sum();
        if level_pmf.iter().flatten().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("level pmf must be non-negative and sum to 1, got {total}")));
        }
        let mut strategy_pmf: BTreeMap<Strategy, f64> = Strategy::ALL.iter().map(|&s| (s, 0.0)).collect();
        for (m, row) in level_pmf.iter().enumerate() {
            for (a, p) in row.iter().enumerate() {
                *strategy_pmf.get_mut(&Strategy::of(m as u32, a as u32)).unwrap() += p;
            }
        }
        let responding = 1.0 - strategy_pmf[&Strategy::NoResponse];
        let responding_pmf = if responding > 0.0 {
            Strategy::ALL[..3].iter().map(|s| (*s, strategy_pmf[s] / responding)).collect()
        } else {
            BTreeMap::new()
        };
        Ok(ResponseModel {
            events,
            strategy_pmf,
            responding_pmf,
            level_pmf,
        })
    }

    pub fn level_prob(&self, maritime: u32, aero: u32) -> f64 {
        self.level_pmf
            .get(maritime as usize)
            .and_then(|r| r.get(aero as usize))
            .copied()
            .unwrap_or(0.0)
    }

    /// Expected maritime and aero assets per event.
    pub fn expected_demand(&self) -> (f64, f64) {
        let mut out = (0.0, 0.0);
        for (m, row) in self.level_pmf.iter().enumerate() {
            for (a, p) in row.iter().enumerate() {
                out.0 += m as f64 * p;
                out.1 += a as f64 * p;
            }
        }
        out
    }
}

/// Caps sorties at four maritime and two aero assets.
pub fn capped_response(e: &EventRecord) -> (u32, u32) {
    (e.maritime_sorties.min(MAX_MARITIME), e.aero_sorties.min(MAX_AERO))
}

pub fn fit_response_model(zone_events: &[&EventRecord]) -> Result<ResponseModel> {
    if zone_events.is_empty() {
        return Err(Error::domain("response model of an empty zone"));
    }
    let mut counts = [[0usize; 3]; 5];
    for e in zone_events {
        let (m, a) = capped_response(e);
        counts[m as usize][a as usize] += 1;
    }
    let n = zone_events.len() as f64;
    let mut level_pmf = [[0.0; 3]; 5];
    for (m, row) in counts.iter().enumerate() {
        for (a, &c) in row.iter().enumerate() {
            level_pmf[m][a] = c as f64 / n;
        }
    }
    // Frequencies may miss 1 by an ulp; fold the residue into the largest cell.
    let residue = 1.0 - level_pmf.iter().flatten().sum::<f64>();
    let (bm, ba) = (0..5)
        .flat_map(|m| (0..3).map(move |a| (m, a)))
        .max_by(|x, y| level_pmf[x.0][x.1].total_cmp(&level_pmf[y.0][y.1]))
        .unwrap();
    level_pmf[bm][ba] += residue;
    ResponseModel::from_levels(level_pmf, zone_events.len())
}

/// Per-zone fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneFit {
    pub zone_id: String,
    pub months: usize,
    pub mean: f64,
    pub variance: f64,
    /// Autocorrelation at lags 1..=24; `None` where undefined.
    pub acf: Vec<Option<f64>>,
    pub distribution: CountDistribution,
    pub response: ResponseModel,
}

pub const ACF_MAX_LAG: usize = 24;

pub fn fit_zone(series: &MonthlySeries, zone_events: &[&EventRecord]) -> Result<ZoneFit> {
    let acf = (1..=ACF_MAX_LAG.min(series.len().saturating_sub(1)))
        .map(|k| autocorrelation(series, k).ok())
        .collect();
    Ok(ZoneFit {
        zone_id: series.zone_id.clone(),
        months: series.len(),
        mean: series.mean(),
        variance: series.variance(),
        acf,
        distribution: select_distribution(series)?,
        response: fit_response_model(zone_events)?,
    })
}
