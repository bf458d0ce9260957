//! Manifest-driven stages. Each stage reads the persisted artifacts of its
//! upstream stages from the output directory and writes its own, so any
//! stage can be re-run in isolation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distfit::{fit_zone, MonthlySeries, ZoneFit};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geo::GeoPoint;
use crate::ingest::{
    clean_events, generate_synthetic, load_events, monthly_counts, save_events, CleaningReport, EventRecord,
    GeneratorConfig, RegionPolygon, RowReject, StudyWindow,
};
use crate::mcsim::{build_scenario, simulate_all, DemandScenario, SimSummary, ZoneModel, DEFAULT_MONTHS};
use crate::milp::{
    build_instance, cross_evaluate, pareto_sweep, solve, write_pareto_csv, Asset, BigM, CrossEvaluation, Homeport,
    Instance, ParetoFront, Scope, Solution, SolveOptions, SolveStatus, DEFAULT_MISSION_HOURS, DELTA,
};
use crate::zoning::{
    build_zones, elbow_curve, EventCategory, KMeansConfig, WeightedPoint, Zone, ZoningConfig,
};

pub const EVENTS_CLEAN: &str = "events_clean.csv";
pub const CLEANING_REPORT: &str = "cleaning_report.json";
pub const ZONES: &str = "zones.json";
pub const FITS: &str = "fits.json";
pub const SIMULATION: &str = "simulation.json";
pub const SCENARIOS: &str = "scenarios.json";
pub const INSTANCE: &str = "instance.json";
pub const SOLUTION: &str = "solution.json";
pub const PARETO_JSON: &str = "pareto.json";
pub const PARETO_CSV: &str = "pareto.csv";
pub const CROSSCHECK: &str = "crosscheck.json";
pub const GENERATED_EVENTS: &str = "events.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub events: PathBuf,
    pub region: PathBuf,
    pub fleet: PathBuf,
    pub homeports: PathBuf,
    /// Synthetic generator config used by `generate`.
    #[serde(default)]
    pub generator: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_months")]
    pub months: usize,
    /// Percentiles turned into demand scenarios.
    #[serde(default = "default_percentiles")]
    pub percentiles: Vec<u8>,
}

fn default_months() -> usize {
    DEFAULT_MONTHS
}

fn default_percentiles() -> Vec<u8> {
    vec![0, 25, 50, 75]
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            months: default_months(),
            percentiles: default_percentiles(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Current homeports only, response time weighted.
    Scenario1,
    /// All candidate homeports, response time weighted.
    Scenario2,
    /// Full weight grid under the configured scope.
    Scenario3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default = "default_preset")]
    pub preset: Preset,
    /// Scope for `scenario3`; ignored by the other presets.
    #[serde(default = "default_scope")]
    pub scope: Scope,
    #[serde(default = "default_percentile")]
    pub percentile: u8,
    #[serde(default = "default_mission_hours")]
    pub mission_hours: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub big_m: BigM,
    #[serde(default = "default_true")]
    pub strengthen: bool,
    #[serde(default)]
    pub node_limit: Option<usize>,
}

fn default_preset() -> Preset {
    Preset::Scenario3
}

fn default_scope() -> Scope {
    Scope::PacificRegion
}

fn default_percentile() -> u8 {
    75
}

fn default_mission_hours() -> f64 {
    DEFAULT_MISSION_HOURS
}

fn default_delta() -> f64 {
    DELTA
}

fn default_true() -> bool {
    true
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            preset: default_preset(),
            scope: default_scope(),
            percentile: default_percentile(),
            mission_hours: default_mission_hours(),
            delta: default_delta(),
            big_m: BigM::default(),
            strengthen: true,
            node_limit: None,
        }
    }
}

impl SolveConfig {
    pub fn effective_scope(&self) -> Scope {
        match self.preset {
            Preset::Scenario1 => Scope::CurrentOnly,
            Preset::Scenario2 => Scope::PacificRegion,
            Preset::Scenario3 => self.scope,
        }
    }

    /// Weight pairs for the preset; the first is used by `solve`.
    pub fn weight_grid(&self) -> Vec<(f64, f64)> {
        let d = self.delta;
        match self.preset {
            Preset::Scenario1 | Preset::Scenario2 => vec![(d, 1.0 - d)],
            Preset::Scenario3 => vec![(d, 1.0 - d), (0.2, 0.8), (0.4, 0.6), (0.6, 0.4), (0.8, 0.2), (1.0 - d, d)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosscheckConfig {
    #[serde(default = "default_locations_percentile")]
    pub locations_percentile: u8,
    #[serde(default = "default_percentile")]
    pub demand_percentile: u8,
}

fn default_locations_percentile() -> u8 {
    50
}

impl Default for CrosscheckConfig {
    fn default() -> Self {
        CrosscheckConfig {
            locations_percentile: default_locations_percentile(),
            demand_percentile: default_percentile(),
        }
    }
}

/// The single configuration driving every stage. Paths are relative to the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub paths: InputPaths,
    #[serde(default)]
    pub window: StudyWindow,
    #[serde(default)]
    pub zoning: ZoningConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub crosscheck: CrosscheckConfig,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.zoning.k.is_empty() || self.zoning.k.values().any(|&k| k == 0) {
            return Err(Error::domain("every configured category needs k >= 1"));
        }
        if !(self.zoning.radius_nmi > 0.0) {
            return Err(Error::domain("classification radius must be positive"));
        }
        if self.simulation.months == 0 {
            return Err(Error::domain("simulation months must be positive"));
        }
        let percentiles = [&self.simulation.percentiles[..], &[self.solve.percentile]].concat();
        for p in percentiles {
            if !crate::mcsim::SUPPORTED_PERCENTILES.contains(&p) {
                return Err(Error::domain(format!("unsupported percentile {p}")));
            }
        }
        for p in [self.solve.percentile, self.crosscheck.locations_percentile, self.crosscheck.demand_percentile] {
            if !self.simulation.percentiles.contains(&p) {
                return Err(Error::domain(format!("percentile {p} is not among the simulated scenarios")));
            }
        }
        if !(self.solve.delta > 0.0 && self.solve.delta < 0.5) {
            return Err(Error::domain("delta must lie in (0, 0.5)"));
        }
        if !(self.solve.mission_hours > 0.0) {
            return Err(Error::domain("mission time must be positive"));
        }
        Ok(())
    }
}

/// Provenance written into every JSON artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub stage: String,
    pub manifest_sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub stamp: Stamp,
    #[serde(flatten)]
    pub body: T,
}

/// A loaded manifest with resolved paths.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub manifest: RunManifest,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub manifest_sha256: String,
    pub exec: Exec,
}

impl RunContext {
    /// Reads and validates the manifest. `--out` and `--seed` overrides
    /// replace the manifest values.
    pub fn load(path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        let manifest: RunManifest = serde_json::from_slice(&bytes).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        manifest.validate()?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let out_dir = match out {
            Some(o) => o.to_path_buf(),
            None => base_dir.join(&manifest.output_dir),
        };
        Ok(RunContext {
            seed: seed.unwrap_or(manifest.seed),
            manifest_sha256: hex::encode(Sha256::digest(&bytes)),
            manifest,
            base_dir,
            out_dir,
            exec: Exec::default(),
        })
    }

    pub fn input(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn stamp(&self, stage: &str) -> Stamp {
        Stamp {
            stage: stage.into(),
            manifest_sha256: self.manifest_sha256.clone(),
            seed: self.seed,
        }
    }

    fn write_json<T: Serialize>(&self, name: &str, stage: &str, body: &T) -> Result<PathBuf> {
        let artifact = Artifact {
            stamp: self.stamp(stage),
            body,
        };
        let mut text = serde_json::to_string_pretty(&artifact)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        let path = self.artifact(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reads an upstream artifact, naming the stage that produces it when
    /// absent.
    fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        read_json_file(&self.artifact(name))
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            strengthen: self.manifest.solve.strengthen,
            node_limit: self.manifest.solve.node_limit,
            exec: self.exec,
        }
    }
}

fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Process exit code for an error: 2 validation, 3 infeasible, 4 internal.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Schema { .. } | Error::MissingInput(_) | Error::Csv(_) | Error::Json(_) => 2,
        Error::Infeasible(_) => 3,
        Error::Internal(_) | Error::Io { .. } => 4,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub report: CleaningReport,
    pub retained_percent: String,
    pub rejected_rows: Vec<RowReject>,
    pub events_csv_sha256: String,
}

/// Loads, validates and cleans the event CSV.
pub fn cmd_ingest(ctx: &RunContext) -> Result<IngestReport> {
    let paths = &ctx.manifest.paths;
    let loaded = load_events(&ctx.input(&paths.events), &ctx.manifest.window)?;
    let region = RegionPolygon::from_json_path(&ctx.input(&paths.region))?;
    let (kept, report) = clean_events(&loaded.records, &region);
    let csv_path = ctx.artifact(EVENTS_CLEAN);
    fs::create_dir_all(&ctx.out_dir).map_err(|e| Error::io(&ctx.out_dir, e))?;
    save_events(&csv_path, &kept)?;
    let out = IngestReport {
        retained_percent: format!("{:.2}%", 100.0 * report.retained_fraction()),
        report,
        rejected_rows: loaded.rejects,
        events_csv_sha256: sha256_file(&csv_path)?,
    };
    ctx.write_json(CLEANING_REPORT, "ingest", &out)?;
    Ok(out)
}

fn cleaned_events(ctx: &RunContext) -> Result<Vec<EventRecord>> {
    let path = ctx.artifact(EVENTS_CLEAN);
    if !path.exists() {
        return Err(Error::MissingInput(path));
    }
    let loaded = load_events(&path, &ctx.manifest.window)?;
    if !loaded.rejects.is_empty() {
        return Err(Error::Schema {
            path,
            message: format!("{} rows no longer validate", loaded.rejects.len()),
        });
    }
    Ok(loaded.records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonesArtifact {
    pub zones: Vec<Zone>,
    /// Weighted SSE per `k` for each category present.
    pub elbow: BTreeMap<EventCategory, Vec<(usize, f64)>>,
}

impl ZonesArtifact {
    pub fn positions(&self) -> BTreeMap<String, GeoPoint> {
        self.zones.iter().map(|z| (z.id.clone(), z.superaccident)).collect()
    }
}

pub fn cmd_zone(ctx: &RunContext) -> Result<ZonesArtifact> {
    let events = cleaned_events(ctx)?;
    let cfg = &ctx.manifest.zoning;
    let islands = cfg.islands.clone().unwrap_or_default();
    let kcfg = KMeansConfig {
        restarts: cfg.restarts,
        exec: ctx.exec,
        ..KMeansConfig::default()
    };
    let zones = build_zones(&events, &islands, cfg.radius_nmi, &cfg.k, ctx.seed, &kcfg)?;
    let mut by_cat: BTreeMap<EventCategory, Vec<WeightedPoint>> = BTreeMap::new();
    for e in &events {
        let c = crate::zoning::classify_event(e, &islands, cfg.radius_nmi)?;
        by_cat.entry(c).or_default().push(WeightedPoint {
            point: e.position.expect("cleaned events have positions"),
            weight: e.weight(),
        });
    }
    let mut elbow = BTreeMap::new();
    for (c, pts) in by_cat {
        elbow.insert(c, elbow_curve(&pts, cfg.elbow_k_max, ctx.seed, &kcfg)?);
    }
    let out = ZonesArtifact { zones, elbow };
    ctx.write_json(ZONES, "zone", &out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsArtifact {
    pub fits: Vec<ZoneFit>,
}

pub fn cmd_fit(ctx: &RunContext) -> Result<FitsArtifact> {
    let zones: Artifact<ZonesArtifact> = ctx.read_json(ZONES)?;
    let events = cleaned_events(ctx)?;
    let by_id: BTreeMap<&str, &EventRecord> = events.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut zone_of: BTreeMap<&str, &str> = BTreeMap::new();
    for z in &zones.body.zones {
        for m in &z.members {
            zone_of.insert(m.as_str(), z.id.as_str());
        }
    }
    let window = ctx.manifest.window;
    let counts = monthly_counts(
        events.iter().filter_map(|e| zone_of.get(e.id.as_str()).map(|z| (e, *z))),
        &window,
    );
    let fits = ctx
        .exec
        .map(&zones.body.zones, |z| {
            let members: Vec<&EventRecord> = z
                .members
                .iter()
                .map(|m| {
                    by_id
                        .get(m.as_str())
                        .copied()
                        .ok_or_else(|| Error::domain(format!("zone {} lists unknown event {m}", z.id)))
                })
                .collect::<Result<_>>()?;
            let series = MonthlySeries::new(
                z.id.clone(),
                counts
                    .get(z.id.as_str())
                    .cloned()
                    .unwrap_or_else(|| vec![0; window.months as usize]),
            );
            fit_zone(&series, &members)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let out = FitsArtifact { fits };
    ctx.write_json(FITS, "fit", &out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenariosArtifact {
    pub scenarios: Vec<DemandScenario>,
}

impl ScenariosArtifact {
    pub fn at(&self, percentile: u8) -> Result<&DemandScenario> {
        self.scenarios
            .iter()
            .find(|s| s.percentile == percentile)
            .ok_or_else(|| Error::domain(format!("no scenario at percentile {percentile}")))
    }
}

pub fn cmd_simulate(ctx: &RunContext) -> Result<(SimSummary, ScenariosArtifact)> {
    let zones: Artifact<ZonesArtifact> = ctx.read_json(ZONES)?;
    let fits: Artifact<FitsArtifact> = ctx.read_json(FITS)?;
    let fit_of: BTreeMap<&str, &ZoneFit> = fits.body.fits.iter().map(|f| (f.zone_id.as_str(), f)).collect();
    let models = zones
        .body
        .zones
        .iter()
        .map(|z| {
            let f = fit_of
                .get(z.id.as_str())
                .ok_or_else(|| Error::domain(format!("zone {} has no fit", z.id)))?;
            Ok(ZoneModel {
                zone_id: z.id.clone(),
                asset_class: z.category.asset_class,
                count: f.distribution.model,
                response: f.response.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = simulate_all(&models, ctx.manifest.simulation.months, ctx.seed, ctx.exec)?;
    let scenarios = ScenariosArtifact {
        scenarios: ctx
            .manifest
            .simulation
            .percentiles
            .iter()
            .map(|&p| build_scenario(&summary, p))
            .collect::<Result<_>>()?,
    };
    ctx.write_json(SIMULATION, "simulate", &summary)?;
    ctx.write_json(SCENARIOS, "simulate", &scenarios)?;
    Ok((summary, scenarios))
}

fn load_instance(ctx: &RunContext, percentile: u8) -> Result<Instance> {
    let zones: Artifact<ZonesArtifact> = ctx.read_json(ZONES)?;
    let scenarios: Artifact<ScenariosArtifact> = ctx.read_json(SCENARIOS)?;
    let paths = &ctx.manifest.paths;
    let assets: Vec<Asset> = read_json_file(&ctx.input(&paths.fleet))?;
    let homeports: Vec<Homeport> = read_json_file(&ctx.input(&paths.homeports))?;
    let cfg = &ctx.manifest.solve;
    build_instance(
        &assets,
        &homeports,
        scenarios.body.at(percentile)?,
        &zones.body.positions(),
        cfg.mission_hours,
        cfg.effective_scope(),
        cfg.big_m,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveArtifact {
    pub preset: Preset,
    pub scope: Scope,
    pub percentile: u8,
    pub solution: Solution,
}

/// Solves the preset's first weight pair.
pub fn cmd_solve(ctx: &RunContext) -> Result<SolveArtifact> {
    let cfg = &ctx.manifest.solve;
    let inst = load_instance(ctx, cfg.percentile)?;
    ctx.write_json(INSTANCE, "solve", &inst)?;
    let solution = solve(&inst, cfg.weight_grid()[0], &ctx.solve_options())?;
    let out = SolveArtifact {
        preset: cfg.preset,
        scope: cfg.effective_scope(),
        percentile: cfg.percentile,
        solution,
    };
    ctx.write_json(SOLUTION, "solve", &out)?;
    if out.solution.status == SolveStatus::Infeasible {
        return Err(Error::Infeasible(out.solution.infeasibility.clone().unwrap_or_default()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoArtifact {
    pub preset: Preset,
    pub scope: Scope,
    pub percentile: u8,
    pub front: ParetoFront,
    pub csv_sha256: String,
}

pub fn cmd_pareto(ctx: &RunContext) -> Result<ParetoArtifact> {
    let cfg = &ctx.manifest.solve;
    let inst = load_instance(ctx, cfg.percentile)?;
    let front = pareto_sweep(&inst, &cfg.weight_grid(), &ctx.solve_options())?;
    let mut csv = Vec::new();
    write_pareto_csv(&mut csv, &front)?;
    ctx.write_bytes(PARETO_CSV, &csv)?;
    let out = ParetoArtifact {
        preset: cfg.preset,
        scope: cfg.effective_scope(),
        percentile: cfg.percentile,
        front,
        csv_sha256: hex::encode(Sha256::digest(&csv)),
    };
    ctx.write_json(PARETO_JSON, "pareto", &out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckArtifact {
    pub locations_percentile: u8,
    pub demand_percentile: u8,
    pub evaluations: Vec<CrossResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossResult {
    pub cross: CrossEvaluation,
    /// `f2` when the demand instance is optimized directly.
    pub direct_f2: Option<f64>,
    /// Fixed locations reach the directly optimized `f2`.
    pub robust: bool,
    pub gap: Option<f64>,
}

/// Evaluates the locations optimal for one percentile against the demand
/// of another, for each weight pair of the preset.
pub fn cmd_crosscheck(ctx: &RunContext) -> Result<CrosscheckArtifact> {
    let cfg = &ctx.manifest.crosscheck;
    let a = load_instance(ctx, cfg.locations_percentile)?;
    let b = load_instance(ctx, cfg.demand_percentile)?;
    let opts = ctx.solve_options();
    let evaluations = ctx
        .manifest
        .solve
        .weight_grid()
        .into_iter()
        .map(|w| {
            let cross = cross_evaluate(&a, &b, w, &opts)?;
            let direct = solve(&b, w, &opts)?;
            let direct_f2 = direct.is_solved().then_some(direct.f2);
            let gap = cross.f2.zip(direct_f2).map(|(c, d)| c - d);
            Ok(CrossResult {
                robust: gap.is_some_and(|g| g.abs() <= 1e-9 * direct.f2.abs().max(1.0)),
                gap,
                direct_f2,
                cross,
            })
        })
        .collect::<Result<_>>()?;
    let out = CrosscheckArtifact {
        locations_percentile: cfg.locations_percentile,
        demand_percentile: cfg.demand_percentile,
        evaluations,
    };
    ctx.write_json(CROSSCHECK, "crosscheck", &out)?;
    Ok(out)
}

/// Writes a synthetic event CSV from the manifest's generator config.
pub fn cmd_generate(ctx: &RunContext) -> Result<PathBuf> {
    let path = ctx
        .manifest
        .paths
        .generator
        .as_ref()
        .ok_or_else(|| Error::domain("manifest has no generator path"))?;
    let config: GeneratorConfig = read_json_file(&ctx.input(path))?;
    let events = generate_synthetic(&config, ctx.seed)?;
    fs::create_dir_all(&ctx.out_dir).map_err(|e| Error::io(&ctx.out_dir, e))?;
    let out = ctx.artifact(GENERATED_EVENTS);
    save_events(&out, &events)?;
    Ok(out)
}

/// Every stage from ingest to crosscheck.
pub fn run_all(ctx: &RunContext) -> Result<()> {
    cmd_ingest(ctx)?;
    cmd_zone(ctx)?;
    cmd_fit(ctx)?;
    cmd_simulate(ctx)?;
    cmd_solve(ctx)?;
    cmd_pareto(ctx)?;
    cmd_crosscheck(ctx)?;
    Ok(())
}

/// Every artifact a full run writes, in stage order.
pub const ARTIFACTS: [&str; 11] = [
    EVENTS_CLEAN,
    CLEANING_REPORT,
    ZONES,
    FITS,
    SIMULATION,
    SCENARIOS,
    INSTANCE,
    SOLUTION,
    PARETO_CSV,
    PARETO_JSON,
    CROSSCHECK,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let mut s = SolveConfig::default();
        assert_eq!(s.weight_grid().len(), 6);
        assert_eq!(s.effective_scope(), Scope::PacificRegion);
        s.preset = Preset::Scenario1;
        assert_eq!(s.effective_scope(), Scope::CurrentOnly);
        assert_eq!(s.weight_grid(), vec![(DELTA, 1.0 - DELTA)]);
        s.preset = Preset::Scenario2;
        assert_eq!(s.effective_scope(), Scope::PacificRegion);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::MissingInput("x".into())), 2);
        assert_eq!(exit_code(&Error::Infeasible("x".into())), 3);
        assert_eq!(exit_code(&Error::Internal("x".into())), 4);
    }

    #[test]
    fn manifest_requires_seed() {
        let json = r#"{"output_dir": "out", "paths": {"events": "e", "region": "r", "fleet": "f", "homeports": "h"}}"#;
        assert!(serde_json::from_str::<RunManifest>(json).is_err());
        let with_seed = json.replacen('{', r#"{"seed": 3, "#, 1);
        let m: RunManifest = serde_json::from_str(&with_seed).unwrap();
        m.validate().unwrap();
    }

    #[test]
    fn manifest_rejects_unsimulated_percentile() {
        let json = r#"{"seed": 1, "output_dir": "out", "paths": {"events": "e", "region": "r", "fleet": "f", "homeports": "h"},
                       "simulation": {"percentiles": [50]}}"#;
        let m: RunManifest = serde_json::from_str(json).unwrap();
        assert!(m.validate().is_err());
    }
}
