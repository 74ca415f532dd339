//! CSV ingestion with region and cutoff filters, catalog summaries, and the
//! canonical catalog text format.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, TimeDelta, Utc};

use crate::error::{Error, Result};
use crate::model::{Catalog, CatalogMeta, Event};

/// Offset added to each exactly tied event time, in days.
pub const TIE_OFFSET: f64 = 1e-9;

pub const CANONICAL_FORMAT: &str = "fhp-catalog-1";
const CANONICAL_COLUMNS: &str = "time_days,magnitude";
const NANOS_PER_DAY: f64 = 86_400e9;

/// Inclusive latitude/longitude rectangle in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Region {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let r = Region {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        };
        let ok = [lat_min, lat_max, lon_min, lon_max].iter().all(|v| v.is_finite())
            && lat_min <= lat_max
            && lon_min <= lon_max;
        if !ok {
            return Err(Error::domain(format!("region {r} is not a well-ordered rectangle")));
        }
        Ok(r)
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{},{}", self.lat_min, self.lat_max, self.lon_min, self.lon_max)
    }
}

/// Parses `lat_min,lat_max,lon_min,lon_max`.
impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Parse(format!("region '{s}' is not four numbers")))?;
        match v[..] {
            [a, b, c, d] => Region::new(a, b, c, d),
            _ => Err(Error::Parse(format!("region '{s}' is not four numbers"))),
        }
    }
}

/// What to read and how to filter it.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub time_column: String,
    pub magnitude_column: String,
    pub lat_column: String,
    pub lon_column: String,
    /// Inclusive magnitude cutoff.
    pub m0: f64,
    pub region: Option<Region>,
    /// Inclusive UTC time range.
    pub period: Option<(DateTime<Utc>, DateTime<Utc>)>,
    pub label: String,
}

impl IngestSpec {
    /// Spec with the column names of a USGS CSV export.
    pub fn new(path: impl Into<PathBuf>, m0: f64) -> Self {
        let path = path.into();
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        IngestSpec {
            path,
            time_column: "time".into(),
            magnitude_column: "mag".into(),
            lat_column: "latitude".into(),
            lon_column: "longitude".into(),
            m0,
            region: None,
            period: None,
            label,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.m0.is_finite() {
            return Err(Error::domain("cutoff magnitude must be finite"));
        }
        if let Some(r) = self.region {
            Region::new(r.lat_min, r.lat_max, r.lon_min, r.lon_max)?;
        }
        if let Some((a, b)) = self.period {
            if a > b {
                return Err(Error::domain("time period ends before it starts"));
            }
        }
        Ok(())
    }
}

/// Parse an ISO-8601 timestamp. Values without an offset are taken as UTC.
pub fn parse_utc(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y/%m/%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc())
}

pub fn format_utc(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Read the file named by `spec`.
pub fn ingest(spec: &IngestSpec) -> Result<Catalog> {
    let file = std::fs::File::open(&spec.path).map_err(|e| {
        Error::ingest(None, format!("cannot open {}: {e}", spec.path.display()))
    })?;
    ingest_reader(file, spec)
}

/// Like [`ingest`], reading CSV from `reader` instead of `spec.path`.
///
/// Times become fractional days since the first retained event, which is
/// also the window start; the window ends at the last event. Exact ties
/// are broken in row order by adding [`TIE_OFFSET`].
pub fn ingest_reader<R: Read>(reader: R, spec: &IngestSpec) -> Result<Catalog> {
    spec.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::ingest(Some(1), format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::ingest(Some(1), format!("missing column '{name}'")))
    };
    let ti = col(&spec.time_column)?;
    let mi = col(&spec.magnitude_column)?;
    let loc = match spec.region {
        Some(_) => Some((col(&spec.lat_column)?, col(&spec.lon_column)?)),
        None => None,
    };

    let mut kept: Vec<(DateTime<Utc>, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize);
            Error::ingest(row, format!("malformed record: {e}"))
        })?;
        let row = rec.position().map(|p| p.line() as usize);
        let field = |i: usize, what: &str| {
            rec.get(i)
                .ok_or_else(|| Error::ingest(row, format!("missing {what} field")))
        };
        let number = |i: usize, what: &str| -> Result<f64> {
            let v = field(i, what)?;
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::ingest(row, format!("bad {what} '{v}'")))
        };
        let raw_time = field(ti, "time")?;
        let time = parse_utc(raw_time)
            .ok_or_else(|| Error::ingest(row, format!("unparseable timestamp '{raw_time}'")))?;
        let mag = number(mi, "magnitude")?;
        if mag < spec.m0 {
            continue;
        }
        if let (Some(region), Some((la, lo))) = (spec.region, loc) {
            if !region.contains(number(la, "latitude")?, number(lo, "longitude")?) {
                continue;
            }
        }
        if let Some((a, b)) = spec.period {
            if time < a || time > b {
                continue;
            }
        }
        kept.push((time, mag));
    }
    if kept.is_empty() {
        return Err(Error::ingest(None, "no events pass the filters"));
    }
    kept.sort_by_key(|&(t, _)| t);
    let epoch = kept[0].0;
    let mut events = Vec::with_capacity(kept.len());
    let mut ties = 0;
    for &(t, magnitude) in &kept {
        let mut days = delta_days(t - epoch);
        if let Some(prev) = events.last().map(|e: &Event| e.time) {
            if days <= prev {
                days = prev + TIE_OFFSET;
                ties += 1;
            }
        }
        events.push(Event::new(days, magnitude));
    }
    let t_end = events.last().map_or(0.0, |e| e.time);
    Ok(Catalog::new(events, spec.m0, 0.0, t_end, spec.label.clone())?.with_meta(CatalogMeta {
        epoch: Some(format_utc(&epoch)),
        ties_perturbed: ties,
    }))
}

fn delta_days(d: TimeDelta) -> f64 {
    match d.num_nanoseconds() {
        Some(ns) => ns as f64 / NANOS_PER_DAY,
        None => d.num_milliseconds() as f64 / 86_400e3,
    }
}

/// UTC time of `days` after the catalog epoch, when the epoch is known.
pub fn utc_at(catalog: &Catalog, days: f64) -> Option<DateTime<Utc>> {
    let epoch = parse_utc(catalog.meta().epoch.as_deref()?)?;
    let ns = (days * NANOS_PER_DAY).round();
    if !ns.is_finite() || ns.abs() > i64::MAX as f64 {
        return None;
    }
    epoch.checked_add_signed(TimeDelta::nanoseconds(ns as i64))
}

/// Size, span and cutoff of a catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSummary {
    pub label: String,
    pub n: usize,
    pub m0: f64,
    /// First and last event times in days.
    pub first_time: f64,
    pub last_time: f64,
    pub first_utc: Option<String>,
    pub last_utc: Option<String>,
    /// Magnitude of the first event.
    pub m1: f64,
    pub duration_days: f64,
    pub ties_perturbed: usize,
}

pub fn summarize(catalog: &Catalog) -> Result<CatalogSummary> {
    let (Some(first), Some(last)) = (catalog.events().first(), catalog.events().last()) else {
        return Err(Error::domain("cannot summarize an empty catalog"));
    };
    let stamp = |d| utc_at(catalog, d).map(|t| t.format("%Y-%m-%d %H:%M:%S").to_string());
    Ok(CatalogSummary {
        label: catalog.label().to_string(),
        n: catalog.len(),
        m0: catalog.m0(),
        first_time: first.time,
        last_time: last.time,
        first_utc: stamp(first.time),
        last_utc: stamp(last.time),
        m1: first.magnitude,
        duration_days: last.time - first.time,
        ties_perturbed: catalog.meta().ties_perturbed,
    })
}

impl CatalogSummary {
    /// `key=value` lines.
    pub fn to_record(&self) -> String {
        let na = || "unknown".to_string();
        let mut out = String::new();
        let _ = writeln!(out, "label={}", self.label);
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "m0={}", self.m0);
        let _ = writeln!(out, "first_event={}", self.first_utc.clone().unwrap_or_else(na));
        let _ = writeln!(out, "last_event={}", self.last_utc.clone().unwrap_or_else(na));
        let _ = writeln!(out, "first_time_days={}", self.first_time);
        let _ = writeln!(out, "last_time_days={}", self.last_time);
        let _ = writeln!(out, "m1={}", self.m1);
        let _ = writeln!(out, "duration_days={}", self.duration_days);
        let _ = writeln!(out, "ties_perturbed={}", self.ties_perturbed);
        out
    }
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Canonical text form: a `# key=value` header block, then
/// `time_days,magnitude` rows. `extra` header pairs follow the format line.
/// Floats use shortest round-trip formatting, so output is bit-stable.
pub fn write_canonical(catalog: &Catalog, extra: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# format={CANONICAL_FORMAT}");
    for (k, v) in extra {
        let _ = writeln!(out, "# {}={}", one_line(k), one_line(v));
    }
    let _ = writeln!(out, "# label={}", one_line(catalog.label()));
    let _ = writeln!(out, "# m0={}", catalog.m0());
    if let Some(e) = &catalog.meta().epoch {
        let _ = writeln!(out, "# epoch={e}");
    }
    let _ = writeln!(out, "# t_start={}", catalog.t_start());
    let _ = writeln!(out, "# t_end={}", catalog.t_end());
    let _ = writeln!(out, "# ties_perturbed={}", catalog.meta().ties_perturbed);
    out.push_str(CANONICAL_COLUMNS);
    out.push('\n');
    for e in catalog.events() {
        let _ = writeln!(out, "{},{}", e.time, e.magnitude);
    }
    out
}

/// Inverse of [`write_canonical`]. Unknown header keys are ignored.
pub fn read_canonical(text: &str) -> Result<Catalog> {
    let mut header: Vec<(&str, &str)> = Vec::new();
    let mut events = Vec::new();
    let mut seen_columns = false;
    for (n, line) in text.lines().enumerate() {
        let bad = |msg: &str| Error::Parse(format!("line {}: {msg}", n + 1));
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.trim().split_once('=') {
                header.push((k.trim(), v.trim()));
            }
            continue;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !seen_columns {
            if line != CANONICAL_COLUMNS {
                return Err(bad("expected column header"));
            }
            seen_columns = true;
            continue;
        }
        let (t, m) = line.split_once(',').ok_or_else(|| bad("expected two fields"))?;
        let t = t.parse::<f64>().map_err(|_| bad("bad time"))?;
        let m = m.parse::<f64>().map_err(|_| bad("bad magnitude"))?;
        events.push(Event::new(t, m));
    }
    let get = |k: &str| header.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
    match get("format") {
        Some(CANONICAL_FORMAT) => {}
        Some(f) => return Err(Error::Parse(format!("unsupported catalog format '{f}'"))),
        None => return Err(Error::Parse("missing format header".into())),
    }
    if !seen_columns {
        return Err(Error::Parse("missing column header".into()));
    }
    let num = |k: &str| -> Result<f64> {
        get(k)
            .ok_or_else(|| Error::Parse(format!("missing header '{k}'")))?
            .parse()
            .map_err(|_| Error::Parse(format!("header '{k}' is not a number")))
    };
    let ties_perturbed = match get("ties_perturbed") {
        Some(v) => v
            .parse()
            .map_err(|_| Error::Parse("header 'ties_perturbed' is not an integer".into()))?,
        None => 0,
    };
    let catalog = Catalog::new(
        events,
        num("m0")?,
        num("t_start")?,
        num("t_end")?,
        get("label").unwrap_or(""),
    )?;
    Ok(catalog.with_meta(CatalogMeta {
        epoch: get("epoch").map(str::to_string),
        ties_perturbed,
    }))
}

pub fn read_canonical_file(path: &Path) -> Result<Catalog> {
    read_canonical(&std::fs::read_to_string(path)?)
}
