//! Event records: CSV loading and writing, region cleaning, and a seeded
//! synthetic event generator.
//!
//! # CSV schema
//!
//! ```text
//! id,timestamp,lat,lon,subtype,organization,maritime_sorties,aero_sorties,activity_count
//! ```
//!
//! * `timestamp` is RFC 3339 in UTC, e.g. `2013-07-04T18:30:00Z`.
//! * `lat`/`lon` are decimal degrees, longitude east-positive. Both are
//!   empty when the record carries no GPS fix. Longitudes are converted to
//!   the west-positive `[0, 360)` plane on load and back on write.
//! * `organization` is one of `SectorGuam`, `SectorHonolulu`, `DistrictHQ`.
//! * The three counts are non-negative integers.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, NaiveDate, SecondsFormat, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub const CSV_HEADER: [&str; 9] = [
    "id",
    "timestamp",
    "lat",
    "lon",
    "subtype",
    "organization",
    "maritime_sorties",
    "aero_sorties",
    "activity_count",
];

pub const MEDICO: &str = "MEDICO";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Organization {
    SectorGuam,
    SectorHonolulu,
    DistrictHQ,
}

impl Organization {
    pub fn as_str(self) -> &'static str {
        match self {
            Organization::SectorGuam => "SectorGuam",
            Organization::SectorHonolulu => "SectorHonolulu",
            Organization::DistrictHQ => "DistrictHQ",
        }
    }
}

impl std::str::FromStr for Organization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "SectorGuam" => Ok(Organization::SectorGuam),
            "SectorHonolulu" => Ok(Organization::SectorHonolulu),
            "DistrictHQ" => Ok(Organization::DistrictHQ),
            other => Err(format!("unknown organization {other:?}")),
        }
    }
}

/// One historical (or synthetic) SAR event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub position: Option<GeoPoint>,
    pub subtype: String,
    pub organization: Organization,
    pub maritime_sorties: u32,
    pub aero_sorties: u32,
    pub activity_count: u32,
}

impl EventRecord {
    /// Clustering weight: the activity count, floored at one.
    pub fn weight(&self) -> f64 {
        f64::from(self.activity_count.max(1))
    }
}

/// Calendar window of the study, counted in whole months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub start_year: i32,
    pub start_month: u32,
    pub months: u32,
}

impl Default for StudyWindow {
    /// December 2010 through May 2018.
    fn default() -> Self {
        StudyWindow {
            start_year: 2010,
            start_month: 12,
            months: 90,
        }
    }
}

impl StudyWindow {
    fn month_start(&self, offset: u32) -> DateTime<Utc> {
        let m0 = self.start_year * 12 + self.start_month as i32 - 1 + offset as i32;
        let date = NaiveDate::from_ymd_opt(m0.div_euclid(12), m0.rem_euclid(12) as u32 + 1, 1)
            .expect("valid calendar month");
        Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight"))
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.month_start(0)
    }

    /// Exclusive end instant.
    pub fn end(&self) -> DateTime<Utc> {
        self.month_start(self.months)
    }

    /// Zero-based month offset of `ts`, or `None` outside the window.
    pub fn month_index(&self, ts: DateTime<Utc>) -> Option<usize> {
        if ts < self.start() || ts >= self.end() {
            return None;
        }
        let m = ts.year() * 12 + ts.month() as i32 - 1;
        let m0 = self.start_year * 12 + self.start_month as i32 - 1;
        Some((m - m0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=12).contains(&self.start_month) || self.months == 0 {
            return Err(Error::domain(format!("invalid study window {self:?}")));
        }
        Ok(())
    }
}

/// A row that could not be turned into an [`EventRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReject {
    /// One-based data row number (the header is row 0).
    pub row: usize,
    pub reason: String,
}

impl fmt::Display for RowReject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadedEvents {
    pub records: Vec<EventRecord>,
    pub rejects: Vec<RowReject>,
}

/// Loads an event CSV. Rows that fail validation land in `rejects`.
pub fn load_events(csv_path: &Path, window: &StudyWindow) -> Result<LoadedEvents> {
    if !csv_path.exists() {
        return Err(Error::MissingInput(csv_path.to_path_buf()));
    }
    let file = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    read_events(file, window).map_err(|e| match e {
        Error::Schema { message, .. } => Error::Schema {
            path: csv_path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Reader-based variant of [`load_events`].
pub fn read_events<R: std::io::Read>(reader: R, window: &StudyWindow) -> Result<LoadedEvents> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != CSV_HEADER {
        return Err(Error::Schema {
            path: "<reader>".into(),
            message: format!("expected header {:?}, found {:?}", CSV_HEADER, got),
        });
    }
    let mut out = LoadedEvents::default();
    let mut seen = HashSet::new();
    for (idx, row) in rdr.records().enumerate() {
        let row_no = idx + 1;
        let record = match row {
            Ok(r) => r,
            Err(e) => {
                out.rejects.push(RowReject {
                    row: row_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        match parse_row(&record, window) {
            Ok(ev) => {
                if !seen.insert(ev.id.clone()) {
                    out.rejects.push(RowReject {
                        row: row_no,
                        reason: format!("duplicate id {:?}", ev.id),
                    });
                } else {
                    out.records.push(ev);
                }
            }
            Err(reason) => out.rejects.push(RowReject { row: row_no, reason }),
        }
    }
    Ok(out)
}

fn parse_row(rec: &csv::StringRecord, window: &StudyWindow) -> std::result::Result<EventRecord, String> {
    if rec.len() != CSV_HEADER.len() {
        return Err(format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len()));
    }
    let field = |i: usize| rec.get(i).unwrap_or("").trim();
    let id = field(0).to_string();
    if id.is_empty() {
        return Err("empty id".into());
    }
    let timestamp = DateTime::parse_from_rfc3339(field(1))
        .map_err(|e| format!("unparseable timestamp {:?}: {e}", field(1)))?
        .with_timezone(&Utc);
    if window.month_index(timestamp).is_none() {
        return Err(format!("timestamp {} outside study window", field(1)));
    }
    let position = match (field(2), field(3)) {
        ("", "") => None,
        ("", _) | (_, "") => return Err("latitude and longitude must be both present or both empty".into()),
        (lat, lon) => {
            let lat: f64 = lat.parse().map_err(|_| format!("unparseable lat {lat:?}"))?;
            let lon: f64 = lon.parse().map_err(|_| format!("unparseable lon {lon:?}"))?;
            Some(GeoPoint::from_east(lat, lon).map_err(|e| format!("range violation: {e}"))?)
        }
    };
    let subtype = field(4).to_string();
    let organization = field(5).parse::<Organization>()?;
    let count = |i: usize, name: &str| -> std::result::Result<u32, String> {
        field(i)
            .parse::<u32>()
            .map_err(|_| format!("{name} must be a non-negative integer, found {:?}", field(i)))
    };
    let maritime_sorties = count(6, "maritime_sorties")?;
    let aero_sorties = count(7, "aero_sorties")?;
    let activity_count = count(8, "activity_count")?;
    if maritime_sorties + aero_sorties > 0 && activity_count == 0 {
        return Err("activity_count must be at least 1 when sorties were dispatched".into());
    }
    Ok(EventRecord {
        id,
        timestamp,
        position,
        subtype,
        organization,
        maritime_sorties,
        aero_sorties,
        activity_count,
    })
}

/// Writes events in the documented schema. Coordinates use six decimals.
pub fn write_events<W: std::io::Write>(writer: W, events: &[EventRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for ev in events {
        let (lat, lon) = match ev.position {
            Some(p) => (format!("{:.6}", p.lat_deg()), format!("{:.6}", p.lon_deg_east())),
            None => (String::new(), String::new()),
        };
        wtr.write_record([
            ev.id.as_str(),
            &ev.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            &lat,
            &lon,
            &ev.subtype,
            ev.organization.as_str(),
            &ev.maritime_sorties.to_string(),
            &ev.aero_sorties.to_string(),
            &ev.activity_count.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_events(path: &Path, events: &[EventRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_events(std::io::BufWriter::new(file), events)
}

/// A simple closed polygon in the (lat, west-longitude) plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPolygon {
    vertices: Vec<GeoPoint>,
}

impl RegionPolygon {
    pub fn new(vertices: Vec<GeoPoint>) -> Result<Self> {
        let mut vertices = vertices;
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::domain("region polygon needs at least 3 vertices"));
        }
        let poly = RegionPolygon { vertices };
        poly.check_simple()?;
        Ok(poly)
    }

    /// Parses `[[lat, lon], ...]` pairs with east-positive longitudes.
    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        let vertices = pairs
            .iter()
            .map(|[lat, lon]| GeoPoint::from_east(*lat, *lon))
            .collect::<Result<Vec<_>>>()?;
        RegionPolygon::new(vertices)
    }

    pub fn from_json_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let pairs: Vec<[f64; 2]> = serde_json::from_str(&text)?;
        RegionPolygon::from_pairs(&pairs)
    }

    /// Axis-aligned box in the normalized plane.
    pub fn rectangle(lat_min: f64, lat_max: f64, lon_w_min: f64, lon_w_max: f64) -> Result<Self> {
        RegionPolygon::new(vec![
            GeoPoint::new(lat_min, lon_w_min)?,
            GeoPoint::new(lat_min, lon_w_max)?,
            GeoPoint::new(lat_max, lon_w_max)?,
            GeoPoint::new(lat_max, lon_w_min)?,
        ])
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    fn xy(p: &GeoPoint) -> (f64, f64) {
        (p.lon_deg_w(), p.lat_deg())
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (Self::xy(&self.vertices[i]), Self::xy(&self.vertices[(i + 1) % n])))
    }

    fn check_simple(&self) -> Result<()> {
        let edges: Vec<_> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return Err(Error::domain(format!(
                        "region polygon self-intersects between edges {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ray-casting point-in-polygon test; boundary points count as inside.
    pub fn contains(&self, p: &GeoPoint) -> bool {
        let (px, py) = Self::xy(p);
        let mut inside = false;
        for ((x1, y1), (x2, y2)) in self.edges() {
            if on_segment((x1, y1), (x2, y2), (px, py)) {
                return true;
            }
            if (y1 > py) != (y2 > py) {
                let x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1);
                if px < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    let scale = 1e-12 * (1.0 + a.0.abs().max(b.0.abs()).max(a.1.abs()).max(b.1.abs()));
    orient(a, b, p).abs() <= scale * ((b.0 - a.0).abs() + (b.1 - a.1).abs() + 1.0)
        && p.0 >= a.0.min(b.0) - scale
        && p.0 <= a.0.max(b.0) + scale
        && p.1 >= a.1.min(b.1) - scale
        && p.1 <= a.1.max(b.1) + scale
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d)
}

/// Outcome counts of [`clean_events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub initial: usize,
    pub removed_medico: usize,
    pub removed_no_gps: usize,
    pub removed_outside_region: usize,
    pub retained: usize,
}

impl CleaningReport {
    pub fn retained_fraction(&self) -> f64 {
        if self.initial == 0 {
            return 1.0;
        }
        self.retained as f64 / self.initial as f64
    }

    pub fn is_consistent(&self) -> bool {
        self.removed_medico + self.removed_no_gps + self.removed_outside_region + self.retained == self.initial
    }
}

/// Drops MEDICO records, then records without a GPS fix, then records
/// outside `region`. Events with zero sorties are kept.
pub fn clean_events(events: &[EventRecord], region: &RegionPolygon) -> (Vec<EventRecord>, CleaningReport) {
    let mut report = CleaningReport {
        initial: events.len(),
        removed_medico: 0,
        removed_no_gps: 0,
        removed_outside_region: 0,
        retained: 0,
    };
    let mut kept = Vec::with_capacity(events.len());
    for ev in events {
        if ev.subtype.trim().eq_ignore_ascii_case(MEDICO) {
            report.removed_medico += 1;
            continue;
        }
        let Some(pos) = ev.position else {
            report.removed_no_gps += 1;
            continue;
        };
        if !region.contains(&pos) {
            report.removed_outside_region += 1;
            continue;
        }
        kept.push(ev.clone());
    }
    report.retained = kept.len();
    debug_assert!(report.is_consistent());
    (kept, report)
}

/// Monthly event-count model used by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateModel {
    Poisson { rate: f64 },
    /// Rate drawn from Gamma(shape `alpha`, scale `beta`) each month.
    GammaPoisson { alpha: f64, beta: f64 },
}

impl RateModel {
    fn validate(&self) -> Result<()> {
        match *self {
            RateModel::Poisson { rate } if rate.is_finite() && rate >= 0.0 => Ok(()),
            RateModel::GammaPoisson { alpha, beta }
                if alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0 =>
            {
                Ok(())
            }
            other => Err(Error::domain(format!("invalid count model {other:?}"))),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let rate = match *self {
            RateModel::Poisson { rate } => rate,
            RateModel::GammaPoisson { alpha, beta } => Gamma::new(alpha, beta).expect("validated").sample(rng),
        };
        if rate <= 0.0 {
            return 0;
        }
        Poisson::new(rate).expect("positive rate").sample(rng) as u32
    }
}

/// Relative frequency of a dispatched sortie pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SortieWeight {
    pub maritime: u32,
    pub aero: u32,
    pub weight: f64,
}

/// A spatial cluster of synthetic events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    /// `[lat, lon]` with east-positive longitude.
    pub center: [f64; 2],
    /// Standard deviation of the position scatter, in degrees.
    pub spread_deg: f64,
    pub organization: Organization,
    pub count: RateModel,
    pub sorties: Vec<SortieWeight>,
    /// Mean number of extra case activities beyond the sorties.
    #[serde(default)]
    pub extra_activity_mean: f64,
}

/// Records injected to exercise the cleaning rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    #[serde(default)]
    pub medico: usize,
    #[serde(default)]
    pub missing_gps: usize,
    #[serde(default)]
    pub outside: usize,
    /// `[lat, lon]` east-positive points around which out-of-region events
    /// are scattered (1 degree spread).
    #[serde(default)]
    pub outside_centers: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(default)]
    pub window: StudyWindow,
    pub archetypes: Vec<Archetype>,
    #[serde(default)]
    pub contamination: Contamination,
    #[serde(default = "default_subtypes")]
    pub subtypes: Vec<String>,
}

fn default_subtypes() -> Vec<String> {
    ["DISABLED VESSEL", "PERSON IN WATER", "OVERDUE", "FLARE SIGHTING", "TAKING ON WATER"]
        .into_iter()
        .map(String::from)
        .collect()
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.archetypes.is_empty() {
            return Err(Error::domain("generator config needs at least one archetype"));
        }
        if self.subtypes.is_empty() {
            return Err(Error::domain("generator config needs at least one subtype"));
        }
        for a in &self.archetypes {
            a.count.validate()?;
            GeoPoint::from_east(a.center[0], a.center[1])?;
            if !(a.spread_deg >= 0.0) || !(a.extra_activity_mean >= 0.0) {
                return Err(Error::domain(format!("archetype {} has a negative spread or activity mean", a.name)));
            }
            if a.sorties.is_empty() || a.sorties.iter().any(|s| !(s.weight >= 0.0)) {
                return Err(Error::domain(format!("archetype {} has invalid sortie weights", a.name)));
            }
            if a.sorties.iter().map(|s| s.weight).sum::<f64>() <= 0.0 {
                return Err(Error::domain(format!("archetype {} sortie weights sum to zero", a.name)));
            }
        }
        let c = &self.contamination;
        if c.outside > 0 && c.outside_centers.is_empty() {
            return Err(Error::domain("outside contamination requires outside_centers"));
        }
        Ok(())
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn scatter<R: Rng>(rng: &mut R, center: [f64; 2], spread: f64) -> GeoPoint {
    let (mut lat, mut lon) = (center[0], center[1]);
    if spread > 0.0 {
        let n = Normal::new(0.0, spread).expect("finite spread");
        lat += n.sample(rng);
        lon += n.sample(rng);
    }
    let lat = lat.clamp(-89.9, 89.9);
    let lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
    GeoPoint::from_east(round6(lat), round6(lon).clamp(-180.0, 180.0)).expect("clamped coordinates")
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates a deterministic synthetic event set.
///
/// Each archetype draws a monthly count from its [`RateModel`], scatters
/// positions normally around its center and samples sortie patterns from
/// its weights. Every archetype uses its own RNG stream.
pub fn generate_synthetic(config: &GeneratorConfig, seed: u64) -> Result<Vec<EventRecord>> {
    config.validate()?;
    let window = config.window;
    let mut raw: Vec<EventRecord> = Vec::new();

    for (a_idx, arch) in config.archetypes.iter().enumerate() {
        let mut rng = stream_rng(seed, a_idx as u64 + 1);
        let total: f64 = arch.sorties.iter().map(|s| s.weight).sum();
        for month in 0..window.months {
            let n = arch.count.sample(&mut rng);
            let start = window.month_start(month);
            let secs = (window.month_start(month + 1) - start).num_seconds();
            for _ in 0..n {
                let ts = start + Duration::seconds(rng.random_range(0..secs));
                let position = scatter(&mut rng, arch.center, arch.spread_deg);
                let mut pick = rng.random::<f64>() * total;
                let mut level = arch.sorties[arch.sorties.len() - 1];
                for s in &arch.sorties {
                    if pick < s.weight {
                        level = *s;
                        break;
                    }
                    pick -= s.weight;
                }
                let extra = if arch.extra_activity_mean > 0.0 {
                    Poisson::new(arch.extra_activity_mean).expect("positive").sample(&mut rng) as u32
                } else {
                    0
                };
                let subtype = config.subtypes[rng.random_range(0..config.subtypes.len())].clone();
                raw.push(EventRecord {
                    id: String::new(),
                    timestamp: ts,
                    position: Some(position),
                    subtype,
                    organization: arch.organization,
                    maritime_sorties: level.maritime,
                    aero_sorties: level.aero,
                    activity_count: level.maritime + level.aero + extra,
                });
            }
        }
    }

    let c = &config.contamination;
    let mut rng = stream_rng(seed, 0);
    let span = (window.end() - window.start()).num_seconds();
    let contaminant = |rng: &mut ChaCha8Rng, subtype: String, position: Option<GeoPoint>, org: Organization| EventRecord {
        id: String::new(),
        timestamp: window.start() + Duration::seconds(rng.random_range(0..span)),
        position,
        subtype,
        organization: org,
        maritime_sorties: 0,
        aero_sorties: 0,
        activity_count: 1,
    };
    for k in 0..c.medico {
        let arch = &config.archetypes[k % config.archetypes.len()];
        let pos = scatter(&mut rng, arch.center, arch.spread_deg);
        raw.push(contaminant(&mut rng, MEDICO.to_string(), Some(pos), arch.organization));
    }
    for k in 0..c.missing_gps {
        let arch = &config.archetypes[k % config.archetypes.len()];
        let sub = config.subtypes[k % config.subtypes.len()].clone();
        raw.push(contaminant(&mut rng, sub, None, arch.organization));
    }
    for k in 0..c.outside {
        let center = c.outside_centers[k % c.outside_centers.len()];
        let pos = scatter(&mut rng, center, 1.0);
        let sub = config.subtypes[k % config.subtypes.len()].clone();
        raw.push(contaminant(&mut rng, sub, Some(pos), Organization::DistrictHQ));
    }

    raw.sort_by(|a, b| a.timestamp.cmp(&b.timestamp));
    for (i, ev) in raw.iter_mut().enumerate() {
        ev.id = format!("EV{:06}", i + 1);
    }
    Ok(raw)
}

/// Monthly counts per group key over the study window.
pub fn monthly_counts<'a, K: Ord + Clone + 'a>(
    events: impl IntoIterator<Item = (&'a EventRecord, K)>,
    window: &StudyWindow,
) -> BTreeMap<K, Vec<u32>> {
    let mut out: BTreeMap<K, Vec<u32>> = BTreeMap::new();
    for (ev, key) in events {
        if let Some(m) = window.month_index(ev.timestamp) {
            let series = out.entry(key).or_insert_with(|| vec![0; window.months as usize]);
            series[m] += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,timestamp,lat,lon,subtype,organization,maritime_sorties,aero_sorties,activity_count\n";

    fn fixture() -> String {
        format!(
            "{HEADER}A1,2011-01-05T10:00:00Z,13.431000,144.696000,DISABLED VESSEL,SectorGuam,1,0,2\n\
             A2,2012-06-30T23:59:59Z,21.307000,-157.858000,PERSON IN WATER,SectorHonolulu,2,1,5\n\
             A3,2018-05-31T12:00:00Z,,,OVERDUE,DistrictHQ,0,0,0\n"
        )
    }

    #[test]
    fn empty_file_with_header() {
        let loaded = read_events(HEADER.as_bytes(), &StudyWindow::default()).unwrap();
        assert!(loaded.records.is_empty());
        assert!(loaded.rejects.is_empty());
    }

    #[test]
    fn three_rows_round_trip() {
        let text = fixture();
        let loaded = read_events(text.as_bytes(), &StudyWindow::default()).unwrap();
        assert_eq!(loaded.records.len(), 3);
        assert!(loaded.rejects.is_empty());
        assert_eq!(loaded.records[0].organization, Organization::SectorGuam);
        assert!((loaded.records[0].position.unwrap().lon_deg_w() - 215.304).abs() < 1e-9);
        assert_eq!(loaded.records[2].position, None);
        let mut buf = Vec::new();
        write_events(&mut buf, &loaded.records).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn out_of_range_latitude_is_rejected() {
        let text = format!("{HEADER}B1,2011-01-05T10:00:00Z,91.0,10.0,X,SectorGuam,0,0,1\n");
        let loaded = read_events(text.as_bytes(), &StudyWindow::default()).unwrap();
        assert!(loaded.records.is_empty());
        assert_eq!(loaded.rejects.len(), 1);
        assert_eq!(loaded.rejects[0].row, 1);
        assert!(loaded.rejects[0].reason.contains("range violation"), "{}", loaded.rejects[0]);
    }

    #[test]
    fn bad_rows_report_row_numbers() {
        let text = format!(
            "{HEADER}C1,2011-01-05T10:00:00Z,10.0,10.0,X,SectorGuam,0,0,1\n\
             C2,yesterday,10.0,10.0,X,SectorGuam,0,0,1\n\
             C3,2009-01-05T10:00:00Z,10.0,10.0,X,SectorGuam,0,0,1\n\
             C1,2011-01-05T10:00:00Z,10.0,10.0,X,SectorGuam,0,0,1\n\
             C5,2011-01-05T10:00:00Z,10.0,10.0,X,Navy,0,0,1\n\
             C6,2011-01-05T10:00:00Z,10.0,10.0,X,SectorGuam,1,0,0\n"
        );
        let loaded = read_events(text.as_bytes(), &StudyWindow::default()).unwrap();
        assert_eq!(loaded.records.len(), 1);
        let rows: Vec<usize> = loaded.rejects.iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![2, 3, 4, 5, 6]);
        assert!(loaded.rejects[0].reason.contains("timestamp"));
        assert!(loaded.rejects[2].reason.contains("duplicate"));
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let text = "id,when,lat,lon\n";
        assert!(matches!(
            read_events(text.as_bytes(), &StudyWindow::default()),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn missing_file_is_an_error() {
        let err = load_events(Path::new("/nonexistent/events.csv"), &StudyWindow::default()).unwrap_err();
        assert!(matches!(err, Error::MissingInput(_)));
    }

    #[test]
    fn window_month_index() {
        let w = StudyWindow::default();
        let ts = |s: &str| DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc);
        assert_eq!(w.month_index(ts("2010-12-01T00:00:00Z")), Some(0));
        assert_eq!(w.month_index(ts("2011-01-01T00:00:00Z")), Some(1));
        assert_eq!(w.month_index(ts("2018-05-31T23:59:59Z")), Some(89));
        assert_eq!(w.month_index(ts("2018-06-01T00:00:00Z")), None);
        assert_eq!(w.month_index(ts("2010-11-30T23:59:59Z")), None);
    }

    fn ev(id: &str, pos: Option<(f64, f64)>, subtype: &str) -> EventRecord {
        EventRecord {
            id: id.into(),
            timestamp: StudyWindow::default().start(),
            position: pos.map(|(lat, lon_w)| GeoPoint::new(lat, lon_w).unwrap()),
            subtype: subtype.into(),
            organization: Organization::SectorHonolulu,
            maritime_sorties: 0,
            aero_sorties: 0,
            activity_count: 0,
        }
    }

    #[test]
    fn polygon_boundary_counts_as_inside() {
        let region = RegionPolygon::rectangle(0.0, 10.0, 150.0, 160.0).unwrap();
        assert!(region.contains(&GeoPoint::new(0.0, 150.0).unwrap()));
        assert!(region.contains(&GeoPoint::new(10.0, 160.0).unwrap()));
        assert!(region.contains(&GeoPoint::new(5.0, 160.0).unwrap()));
        assert!(region.contains(&GeoPoint::new(5.0, 155.0).unwrap()));
        assert!(!region.contains(&GeoPoint::new(5.0, 160.0001).unwrap()));
        assert!(!region.contains(&GeoPoint::new(-0.0001, 155.0).unwrap()));
    }

    #[test]
    fn polygon_validation() {
        assert!(RegionPolygon::from_pairs(&[[0.0, 0.0], [1.0, 1.0]]).is_err());
        // Bow-tie.
        assert!(RegionPolygon::from_pairs(&[[0.0, -10.0], [10.0, -20.0], [0.0, -20.0], [10.0, -10.0]]).is_err());
        // Closed ring with repeated first vertex is accepted.
        assert!(RegionPolygon::from_pairs(&[[0.0, -10.0], [0.0, -20.0], [10.0, -20.0], [0.0, -10.0]]).is_ok());
    }

    #[test]
    fn cleaning_order_and_no_op() {
        let region = RegionPolygon::rectangle(0.0, 10.0, 150.0, 160.0).unwrap();
        let events = vec![
            ev("1", Some((5.0, 155.0)), "OVERDUE"),
            ev("2", None, MEDICO),
            ev("3", Some((50.0, 10.0)), MEDICO),
            ev("4", None, "OVERDUE"),
            ev("5", Some((50.0, 10.0)), "OVERDUE"),
            ev("6", Some((0.0, 150.0)), "OVERDUE"),
        ];
        let (kept, report) = clean_events(&events, &region);
        assert_eq!(
            report,
            CleaningReport {
                initial: 6,
                removed_medico: 2,
                removed_no_gps: 1,
                removed_outside_region: 1,
                retained: 2
            }
        );
        assert_eq!(kept.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["1", "6"]);
        let (again, report2) = clean_events(&kept, &region);
        assert_eq!(again, kept);
        assert_eq!(report2.retained, report2.initial);
    }

    fn single_archetype(count: RateModel) -> GeneratorConfig {
        GeneratorConfig {
            window: StudyWindow::default(),
            archetypes: vec![Archetype {
                name: "a".into(),
                center: [13.4, 144.7],
                spread_deg: 0.2,
                organization: Organization::SectorGuam,
                count,
                sorties: vec![
                    SortieWeight { maritime: 1, aero: 0, weight: 3.0 },
                    SortieWeight { maritime: 0, aero: 1, weight: 1.0 },
                ],
                extra_activity_mean: 0.5,
            }],
            contamination: Contamination::default(),
            subtypes: default_subtypes(),
        }
    }

    #[test]
    fn generator_is_deterministic_and_round_trips() {
        let cfg = single_archetype(RateModel::Poisson { rate: 3.0 });
        let a = generate_synthetic(&cfg, 42).unwrap();
        let b = generate_synthetic(&cfg, 42).unwrap();
        assert_eq!(a, b);
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_events(&mut ba, &a).unwrap();
        write_events(&mut bb, &b).unwrap();
        assert_eq!(ba, bb);
        let loaded = read_events(ba.as_slice(), &cfg.window).unwrap();
        assert!(loaded.rejects.is_empty());
        assert_eq!(loaded.records, a);
        assert_ne!(a, generate_synthetic(&cfg, 43).unwrap());
    }

    #[test]
    fn zero_rates_give_no_events() {
        let cfg = single_archetype(RateModel::Poisson { rate: 0.0 });
        assert!(generate_synthetic(&cfg, 1).unwrap().is_empty());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = single_archetype(RateModel::Poisson { rate: -1.0 });
        assert!(generate_synthetic(&cfg, 1).is_err());
        cfg.archetypes.clear();
        assert!(generate_synthetic(&cfg, 1).is_err());
    }

    #[test]
    fn poisson_rate_recovered_over_many_months() {
        let mut cfg = single_archetype(RateModel::Poisson { rate: 5.433 });
        cfg.window.months = 10_000;
        cfg.window.start_year = 1200;
        let events = generate_synthetic(&cfg, 7).unwrap();
        let mean = events.len() as f64 / 10_000.0;
        assert!((mean - 5.433).abs() / 5.433 < 0.02, "{mean}");
    }

    #[test]
    fn contamination_is_removed_by_cleaning() {
        let mut cfg = single_archetype(RateModel::Poisson { rate: 2.0 });
        cfg.contamination = Contamination {
            medico: 5,
            missing_gps: 4,
            outside: 3,
            outside_centers: vec![[-40.0, 20.0]],
        };
        let events = generate_synthetic(&cfg, 3).unwrap();
        let region = RegionPolygon::rectangle(5.0, 25.0, 200.0, 230.0).unwrap();
        let (_, report) = clean_events(&events, &region);
        assert_eq!(report.removed_medico, 5);
        assert_eq!(report.removed_no_gps, 4);
        assert_eq!(report.removed_outside_region, 3);
        assert!(report.is_consistent());
    }
}
