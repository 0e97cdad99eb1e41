//! Catalog data model, CSV I/O, filtering, daily binning, and geodesic
//! distances.
//!
//! Times are real-valued days from the catalog origin. Loading a file with
//! ISO-8601 timestamps (or bare numeric days without embedded metadata)
//! normalizes the origin to day 0; files written by this tool carry a `#`
//! metadata line with `m0` and the observation window and round-trip
//! bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Ancestry label of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parent {
    /// Spontaneous (background) event.
    Background,
    /// Ancestry not known (typical for real catalogs).
    Unknown,
    /// Index of the triggering event within the same catalog.
    Index(usize),
}

/// One seismic event. `time` is in days from the catalog origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<R> {
    pub time: R,
    pub magnitude: R,
    pub latitude: Option<R>,
    pub longitude: Option<R>,
    pub depth: Option<R>,
    pub parent: Parent,
}

impl<R: Real> Event<R> {
    pub fn new(time: R, magnitude: R) -> Self {
        Event {
            time,
            magnitude,
            latitude: None,
            longitude: None,
            depth: None,
            parent: Parent::Unknown,
        }
    }
}

/// Time-ordered event sequence with its completeness magnitude and
/// observation window `[t_start, t_end]` in days.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog<R> {
    events: Vec<Event<R>>,
    m0: R,
    window: (R, R),
}

impl<R: Real> Catalog<R> {
    /// Validates ordering, window membership, and per-event invariants.
    pub fn new(events: Vec<Event<R>>, m0: R, window: (R, R)) -> Result<Self> {
        if !(window.0.is_finite() && window.1.is_finite() && window.0 <= window.1) {
            return Err(Error::invalid(format!(
                "window [{}, {}] is not a valid interval",
                window.0, window.1
            )));
        }
        if !m0.is_finite() {
            return Err(Error::invalid("m0 must be finite"));
        }
        let mut prev = window.0;
        for (i, e) in events.iter().enumerate() {
            if !e.time.is_finite() || !e.magnitude.is_finite() {
                return Err(Error::invalid(format!("event {i}: non-finite time or magnitude")));
            }
            if e.time < prev {
                return Err(Error::invalid(format!("event {i}: times not nondecreasing")));
            }
            if e.time > window.1 {
                return Err(Error::invalid(format!("event {i}: time {} outside window", e.time)));
            }
            if let Some(d) = e.depth {
                if d < R::zero() {
                    return Err(Error::invalid(format!("event {i}: negative depth {d}")));
                }
            }
            if let Parent::Index(j) = e.parent {
                if j >= i || events[j].time > e.time {
                    return Err(Error::invalid(format!(
                        "event {i}: parent {j} does not precede it"
                    )));
                }
            }
            prev = e.time;
        }
        Ok(Catalog { events, m0, window })
    }

    pub fn events(&self) -> &[Event<R>] {
        &self.events
    }

    pub fn m0(&self) -> R {
        self.m0
    }

    pub fn window(&self) -> (R, R) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn max_magnitude(&self) -> Option<R> {
        self.events
            .iter()
            .map(|e| e.magnitude)
            .fold(None, |acc, m| Some(acc.map_or(m, |a: R| a.max(m))))
    }

    /// Retains events with `magnitude >= m0`, `depth <= max_depth` (events
    /// without depth pass), and time within `window`. Parent indices are
    /// remapped; parents that were filtered away become [`Parent::Unknown`].
    pub fn filter(&self, m0: R, max_depth: R, window: (R, R)) -> Result<Catalog<R>> {
        if !m0.is_finite() {
            return Err(Error::invalid("m0 must be finite"));
        }
        if !(max_depth > R::zero()) {
            return Err(Error::invalid(format!("max_depth must be positive, got {max_depth}")));
        }
        if !(window.0.is_finite() && window.1.is_finite() && window.0 <= window.1) {
            return Err(Error::invalid("window is not a valid interval"));
        }
        let mut keep_index: Vec<Option<usize>> = vec![None; self.events.len()];
        let mut kept: Vec<Event<R>> = Vec::new();
        for (i, e) in self.events.iter().enumerate() {
            let deep = e.depth.is_some_and(|d| d > max_depth);
            if e.magnitude >= m0 && !deep && e.time >= window.0 && e.time <= window.1 {
                keep_index[i] = Some(kept.len());
                kept.push(*e);
            }
        }
        for e in kept.iter_mut() {
            if let Parent::Index(j) = e.parent {
                e.parent = match keep_index[j] {
                    Some(nj) => Parent::Index(nj),
                    None => Parent::Unknown,
                };
            }
        }
        Catalog::new(kept, m0, window)
    }

    /// Counts events per day bin `[k, k+1)` from the window start; an event
    /// exactly at the window end is counted in the last bin.
    pub fn daily_counts(&self) -> Result<CountSeries> {
        let span = self.window.1 - self.window.0;
        if span < R::of(2.0) {
            return Err(Error::invalid(format!(
                "window of {span} days is too short for daily binning (need >= 2)"
            )));
        }
        let n_bins = span.ceil().as_f64() as usize;
        let mut counts = vec![0u64; n_bins];
        for e in &self.events {
            let k = (e.time - self.window.0).floor().as_f64() as usize;
            counts[k.min(n_bins - 1)] += 1;
        }
        Ok(CountSeries { counts })
    }
}

/// Daily event counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSeries {
    counts: Vec<u64>,
}

impl CountSeries {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::invalid("count series needs at least 2 bins"));
        }
        Ok(CountSeries { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// How the `time` column is interpreted when loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeFormat {
    /// Numeric days if the first row parses as a number, ISO-8601 otherwise.
    #[default]
    Auto,
    /// Real-valued days.
    Days,
    /// ISO-8601 timestamps, converted to days since the first event.
    Iso8601,
}

/// Great-circle distance in km between two events (Earth radius 6371 km).
pub fn haversine_km<R: Real>(e1: &Event<R>, e2: &Event<R>) -> Result<R> {
    let (lat1, lon1) = coords(e1)?;
    let (lat2, lon2) = coords(e2)?;
    let to_rad = std::f64::consts::PI / 180.0;
    let (phi1, phi2) = (lat1 * to_rad, lat2 * to_rad);
    let dphi = (lat2 - lat1) * to_rad;
    let dlambda = (lon2 - lon1) * to_rad;
    let s = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let d = 2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin();
    Ok(R::of(d))
}

/// Arithmetic mean of [`haversine_km`] over event pairs.
pub fn mean_pair_distance<R: Real>(pairs: &[(Event<R>, Event<R>)]) -> Result<R> {
    if pairs.is_empty() {
        return Err(Error::invalid("no pairs to average"));
    }
    let mut sum = R::zero();
    for (a, b) in pairs {
        sum = sum + haversine_km(a, b)?;
    }
    Ok(sum / R::of_usize(pairs.len()))
}

fn coords<R: Real>(e: &Event<R>) -> Result<(f64, f64)> {
    match (e.latitude, e.longitude) {
        (Some(la), Some(lo)) => Ok((la.as_f64(), lo.as_f64())),
        _ => Err(Error::invalid("event is missing latitude/longitude")),
    }
}

/// Loads a catalog from the documented CSV format:
/// `time,magnitude[,latitude,longitude,depth][,parent]`, optionally preceded
/// by a `# m0=<v> window=<a>,<b>` metadata line.
pub fn load_catalog<R: Real>(path: impl AsRef<Path>, format: TimeFormat) -> Result<Catalog<R>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_catalog(&text, format)
}

pub fn parse_catalog<R: Real>(text: &str, format: TimeFormat) -> Result<Catalog<R>> {
    let mut lines = text.lines().enumerate().peekable();

    // Optional metadata line.
    let mut meta_m0: Option<R> = None;
    let mut meta_window: Option<(R, R)> = None;
    if let Some((_, line)) = lines.peek() {
        if let Some(rest) = line.strip_prefix('#') {
            for token in rest.split_whitespace() {
                if let Some(v) = token.strip_prefix("m0=") {
                    meta_m0 = Some(parse_real(v, 1, "m0")?);
                } else if let Some(v) = token.strip_prefix("window=") {
                    let mut it = v.splitn(2, ',');
                    let a = parse_real(it.next().unwrap_or(""), 1, "window start")?;
                    let b = parse_real(it.next().unwrap_or(""), 1, "window end")?;
                    meta_window = Some((a, b));
                }
            }
            lines.next();
        }
    }

    let (header_line_no, header) = lines
        .next()
        .ok_or_else(|| Error::invalid("empty file: missing header"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| columns.iter().position(|c| *c == name);
    let time_col = col("time").ok_or_else(|| Error::MalformedRow {
        line: header_line_no + 1,
        msg: "header lacks a `time` column".into(),
    })?;
    let mag_col = col("magnitude").ok_or_else(|| Error::MalformedRow {
        line: header_line_no + 1,
        msg: "header lacks a `magnitude` column".into(),
    })?;
    let lat_col = col("latitude");
    let lon_col = col("longitude");
    let depth_col = col("depth");
    let parent_col = col("parent");

    struct Row<R> {
        file_order: usize,
        event: Event<R>,
        raw_parent: Option<i64>,
    }

    let mut rows: Vec<Row<R>> = Vec::new();
    let mut iso_mode: Option<bool> = match format {
        TimeFormat::Auto => None,
        TimeFormat::Days => Some(false),
        TimeFormat::Iso8601 => Some(true),
    };
    let mut first_stamp: Option<NaiveDateTime> = None;

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::MalformedRow {
                line: line_no,
                msg: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }

        let time_text = fields[time_col];
        if iso_mode.is_none() {
            iso_mode = Some(time_text.parse::<f64>().is_err());
        }
        let time: R = if iso_mode == Some(true) {
            let stamp = parse_iso(time_text).ok_or_else(|| Error::MalformedRow {
                line: line_no,
                msg: format!("unparseable timestamp `{time_text}`"),
            })?;
            let origin = *first_stamp.get_or_insert(stamp);
            let nanos = (stamp - origin).num_nanoseconds().ok_or_else(|| Error::MalformedRow {
                line: line_no,
                msg: "timestamp span overflows".into(),
            })?;
            R::of(nanos as f64 / 86_400e9)
        } else {
            parse_real(time_text, line_no, "time")?
        };
        if !time.is_finite() {
            return Err(Error::MalformedRow {
                line: line_no,
                msg: format!("non-finite time `{time_text}`"),
            });
        }

        let magnitude: R = parse_real(fields[mag_col], line_no, "magnitude")?;
        if !magnitude.is_finite() {
            return Err(Error::MalformedRow {
                line: line_no,
                msg: format!("non-finite magnitude `{}`", fields[mag_col]),
            });
        }

        let optional = |c: Option<usize>, name: &str| -> Result<Option<R>> {
            match c {
                Some(i) if !fields[i].is_empty() => Ok(Some(parse_real(fields[i], line_no, name)?)),
                _ => Ok(None),
            }
        };

        let raw_parent = match parent_col {
            Some(i) if !fields[i].is_empty() => {
                Some(fields[i].parse::<i64>().map_err(|_| Error::MalformedRow {
                    line: line_no,
                    msg: format!("unparseable parent `{}`", fields[i]),
                })?)
            }
            _ => None,
        };

        let event = Event {
            time,
            magnitude,
            latitude: optional(lat_col, "latitude")?,
            longitude: optional(lon_col, "longitude")?,
            depth: optional(depth_col, "depth")?,
            parent: Parent::Unknown,
        };
        rows.push(Row { file_order: rows.len(), event, raw_parent });
    }

    // Stable sort by time keeps the file order for simultaneous events.
    rows.sort_by(|a, b| a.event.time.partial_cmp(&b.event.time).expect("finite times"));

    // parent fields refer to 0-based positions among the data rows as they
    // appeared in the file; remap to sorted positions.
    let mut sorted_pos = vec![0usize; rows.len()];
    for (new_pos, row) in rows.iter().enumerate() {
        sorted_pos[row.file_order] = new_pos;
    }
    let mut events: Vec<Event<R>> = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut e = row.event;
        e.parent = match row.raw_parent {
            None => Parent::Unknown,
            Some(-1) => Parent::Background,
            Some(j) if j >= 0 && (j as usize) < rows.len() => Parent::Index(sorted_pos[j as usize]),
            Some(j) => {
                return Err(Error::invalid(format!("parent index {j} out of range")));
            }
        };
        events.push(e);
    }

    // Without embedded metadata, numeric-day inputs written by other tools
    // and ISO inputs get their origin normalized to day 0.
    if meta_window.is_none() {
        if let Some(origin) = events.first().map(|e| e.time) {
            if iso_mode != Some(true) && origin != R::zero() {
                for e in events.iter_mut() {
                    e.time = e.time - origin;
                }
            }
        }
    }

    let window = meta_window.unwrap_or_else(|| {
        let end = events.last().map_or(R::zero(), |e| e.time);
        (R::zero(), end)
    });
    let m0 = meta_m0
        .or_else(|| events.iter().map(|e| e.magnitude).reduce(|a, b| a.min(b)))
        .unwrap_or_else(R::zero);

    Catalog::new(events, m0, window)
}

/// Writes the documented CSV format (metadata line, header, one row per
/// event). The file is written atomically (temp file + rename).
pub fn save_catalog<R: Real>(cat: &Catalog<R>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), catalog_to_csv(cat).as_bytes())
}

pub fn catalog_to_csv<R: Real>(cat: &Catalog<R>) -> String {
    let has_coords = cat.events().iter().any(|e| e.latitude.is_some() || e.longitude.is_some());
    let has_depth = cat.events().iter().any(|e| e.depth.is_some());
    let has_parent = cat.events().iter().any(|e| e.parent != Parent::Unknown);

    let mut out = String::new();
    let _ = writeln!(out, "# m0={} window={},{}", cat.m0(), cat.window().0, cat.window().1);
    let mut header = String::from("time,magnitude");
    if has_coords {
        header.push_str(",latitude,longitude");
    }
    if has_depth {
        header.push_str(",depth");
    }
    if has_parent {
        header.push_str(",parent");
    }
    out.push_str(&header);
    out.push('\n');

    for e in cat.events() {
        let _ = write!(out, "{},{}", e.time, e.magnitude);
        if has_coords {
            match (e.latitude, e.longitude) {
                (Some(la), Some(lo)) => {
                    let _ = write!(out, ",{la},{lo}");
                }
                _ => out.push_str(",,"),
            }
        }
        if has_depth {
            match e.depth {
                Some(d) => {
                    let _ = write!(out, ",{d}");
                }
                None => out.push(','),
            }
        }
        if has_parent {
            match e.parent {
                Parent::Background => out.push_str(",-1"),
                Parent::Index(j) => {
                    let _ = write!(out, ",{j}");
                }
                Parent::Unknown => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Write `bytes` to `path` atomically: everything or nothing.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_real<R: Real>(text: &str, line: usize, what: &str) -> Result<R> {
    text.parse::<f64>().map(R::of).map_err(|_| Error::MalformedRow {
        line,
        msg: format!("unparseable {what} `{text}`"),
    })
}

fn parse_iso(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim_end_matches('Z');
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y/%m/%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(dt);
        }
    }
    chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}
