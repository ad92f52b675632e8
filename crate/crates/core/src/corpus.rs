//! Portamento event database: CSV persistence, era summaries and the
//! gradient regressions against tempo and recording year.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventKind;
use crate::scalar::Real;

/// Exact header line of a corpus file.
pub const CORPUS_HEADER: [&str; 9] =
    ["performer", "year", "sonata", "bar", "kind", "gradient_px", "gradient_hz_s", "duration_s", "bpm"];

/// Earliest plausible recording year.
pub const FIRST_RECORDING_YEAR: i32 = 1877;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sonata {
    Op69,
    Op102No1,
    Other(String),
}

impl Sonata {
    pub fn parse(s: &str) -> Sonata {
        match s {
            "op69" => Sonata::Op69,
            "op102no1" => Sonata::Op102No1,
            other => Sonata::Other(other.to_string()),
        }
    }
}

impl fmt::Display for Sonata {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sonata::Op69 => f.write_str("op69"),
            Sonata::Op102No1 => f.write_str("op102no1"),
            Sonata::Other(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub performer: String,
    pub year: i32,
    pub sonata: Sonata,
    pub bar: u32,
    pub kind: EventKind,
    pub gradient_px: f64,
    pub gradient_hz_s: f64,
    pub duration_s: f64,
    pub bpm: f64,
}

fn current_year() -> i32 {
    use chrono::Datelike;
    chrono::Local::now().year()
}

impl CorpusRecord {
    /// Checks every field invariant; the message names the offending field.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let now = current_year();
        if !(FIRST_RECORDING_YEAR..=now).contains(&self.year) {
            return Err(format!("year {} outside {FIRST_RECORDING_YEAR}..={now}", self.year));
        }
        if self.bar == 0 {
            return Err("bar must be a positive integer".into());
        }
        if let Sonata::Other(s) = &self.sonata {
            if s == "op69" || s == "op102no1" {
                return Err(format!("sonata `{s}` must use the named variant"));
            }
        }
        for (name, v) in [("gradient_px", self.gradient_px), ("gradient_hz_s", self.gradient_hz_s)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        for (name, v) in [("duration_s", self.duration_s), ("bpm", self.bpm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.kind == EventKind::CleanShift && (self.gradient_hz_s != 0.0 || self.gradient_px != 0.0) {
            return Err(format!(
                "clean_shift rows carry a gradient of zero by convention, got gradient_hz_s={} gradient_px={}",
                self.gradient_hz_s, self.gradient_px
            ));
        }
        Ok(())
    }

    fn to_fields(&self) -> [String; 9] {
        [
            self.performer.clone(),
            self.year.to_string(),
            self.sonata.to_string(),
            self.bar.to_string(),
            self.kind.to_string(),
            self.gradient_px.to_string(),
            self.gradient_hz_s.to_string(),
            self.duration_s.to_string(),
            self.bpm.to_string(),
        ]
    }

    fn from_fields(r: &csv::StringRecord) -> std::result::Result<Self, String> {
        if r.len() != CORPUS_HEADER.len() {
            return Err(format!("expected {} columns, found {}", CORPUS_HEADER.len(), r.len()));
        }
        fn num<V: std::str::FromStr>(r: &csv::StringRecord, i: usize) -> std::result::Result<V, String> {
            r[i].parse().map_err(|_| format!("{}: cannot parse `{}`", CORPUS_HEADER[i], &r[i]))
        }
        let rec = CorpusRecord {
            performer: r[0].to_string(),
            year: num(r, 1)?,
            sonata: Sonata::parse(&r[2]),
            bar: num(r, 3)?,
            kind: r[4].parse().map_err(|e| format!("kind: {e}"))?,
            gradient_px: num(r, 5)?,
            gradient_hz_s: num(r, 6)?,
            duration_s: num(r, 7)?,
            bpm: num(r, 8)?,
        };
        rec.validate()?;
        Ok(rec)
    }
}

/// Parse corpus CSV text; `path` only labels diagnostics.
pub fn parse_corpus<R: std::io::Read>(reader: R, path: &Path) -> Result<Vec<CorpusRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => {
            return Err(Error::CorpusHeader {
                path: path.to_path_buf(),
                expected: CORPUS_HEADER.join(","),
                found: String::new(),
            })
        }
        Some(h) => h.map_err(csv_err)?,
    };
    if header.iter().ne(CORPUS_HEADER.iter().copied()) {
        return Err(Error::CorpusHeader {
            path: path.to_path_buf(),
            expected: CORPUS_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rows.enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::CorpusRow { path: path.to_path_buf(), row: row_no, reason: e.to_string() })?;
        let rec = CorpusRecord::from_fields(&row)
            .map_err(|reason| Error::CorpusRow { path: path.to_path_buf(), row: row_no, reason })?;
        out.push(rec);
    }
    Ok(out)
}

/// Load a corpus file. Row numbers in diagnostics count data rows from 1.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    parse_corpus(f, path)
}

pub fn write_corpus<W: std::io::Write>(records: &[CorpusRecord], writer: W, with_header: bool) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    if with_header {
        w.write_record(CORPUS_HEADER)?;
    }
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Write `records` to `path`, replacing its contents. Invalid records are refused.
pub fn save_corpus(records: &[CorpusRecord], path: &Path) -> Result<()> {
    for r in records {
        r.validate().map_err(Error::InvalidRecord)?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    write_corpus(records, std::io::BufWriter::new(f), true).map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })
}

/// Append to `path`, writing the header first when the file is new or empty.
pub fn append_corpus(records: &[CorpusRecord], path: &Path) -> Result<()> {
    for r in records {
        r.validate().map_err(Error::InvalidRecord)?;
    }
    let io = |e| Error::Io { path: path.to_path_buf(), source: e };
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    if !fresh {
        // Refuse to append to a file that is not a corpus.
        load_corpus(path)?;
    }
    let f = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    write_corpus(records, std::io::BufWriter::new(f), fresh).map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })
}

/// Recording-year interval `[start, end)`, or `[start, end]` when `inclusive_end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Era {
    pub start: i32,
    pub end: i32,
    pub inclusive_end: bool,
}

impl Era {
    pub fn contains(&self, year: i32) -> bool {
        year >= self.start && (year < self.end || (self.inclusive_end && year == self.end))
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.start, self.end)
    }
}

/// 1930-1950, 1950-1970, 1970-1990, 1990-2012; half-open except the last.
pub fn default_eras() -> Vec<Era> {
    let b = [1930, 1950, 1970, 1990, 2012];
    (0..4).map(|i| Era { start: b[i], end: b[i + 1], inclusive_end: i == 3 }).collect()
}

/// Parse `1930-1950,1950-1970,...`; all half-open except the last.
pub fn parse_eras(s: &str) -> Result<Vec<Era>> {
    let mut eras = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = part
            .split_once('-')
            .ok_or_else(|| Error::InvalidEras(format!("`{part}` is not START-END")))?;
        let parse = |v: &str| v.trim().parse::<i32>().map_err(|_| Error::InvalidEras(format!("bad year `{v}`")));
        eras.push(Era { start: parse(a)?, end: parse(b)?, inclusive_end: false });
    }
    if let Some(last) = eras.last_mut() {
        last.inclusive_end = true;
    }
    validate_eras(&eras)?;
    Ok(eras)
}

pub fn validate_eras(eras: &[Era]) -> Result<()> {
    if eras.is_empty() {
        return Err(Error::InvalidEras("no eras given".into()));
    }
    for e in eras {
        if e.end < e.start || (e.end == e.start && !e.inclusive_end) {
            return Err(Error::InvalidEras(format!("era {} is empty", e.label())));
        }
    }
    for w in eras.windows(2) {
        let overlap = w[1].start < w[0].end || (w[0].inclusive_end && w[1].start == w[0].end);
        if overlap {
            return Err(Error::InvalidEras(format!("eras {} and {} overlap or are unsorted", w[0].label(), w[1].label())));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EraSummary {
    pub era_label: String,
    pub n: usize,
    pub min_gradient: Option<f64>,
    pub max_gradient: Option<f64>,
    pub mean_gradient: Option<f64>,
}

/// Gradient statistics per era over sliding events with positive gradient.
/// Eras without any are dropped unless `include_empty`.
pub fn era_summary(records: &[CorpusRecord], eras: &[Era], include_empty: bool) -> Result<Vec<EraSummary>> {
    validate_eras(eras)?;
    let mut out = Vec::new();
    for era in eras {
        let g: Vec<f64> = records
            .iter()
            .filter(|r| r.kind == EventKind::Sliding && r.gradient_hz_s > 0.0 && era.contains(r.year))
            .map(|r| r.gradient_hz_s)
            .collect();
        if g.is_empty() && !include_empty {
            continue;
        }
        let stats = (!g.is_empty()).then(|| {
            let min = g.iter().copied().fold(f64::INFINITY, f64::min);
            let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = (g.iter().sum::<f64>() / g.len() as f64).clamp(min, max);
            (min, max, mean)
        });
        out.push(EraSummary {
            era_label: era.label(),
            n: g.len(),
            min_gradient: stats.map(|s| s.0),
            max_gradient: stats.map(|s| s.1),
            mean_gradient: stats.map(|s| s.2),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionResult<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    pub n: usize,
}

/// Ordinary least squares fit of `ys` on `xs`.
pub fn linear_regression<T: Real>(xs: &[T], ys: &[T]) -> Result<RegressionResult<T>> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let (xs, ys) = (&xs[..n], &ys[..n]);
    let nf = T::from_usize_lossy(n);
    let mx = xs.iter().copied().sum::<T>() / nf;
    let my = ys.iter().copied().sum::<T>() / nf;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateX);
    }
    let syy: T = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    if syy == T::zero() {
        return Ok(RegressionResult { slope: T::zero(), intercept: my, r_squared: T::zero(), n });
    }
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: T = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = (T::one() - ss_res / syy).max(T::zero()).min(T::one());
    Ok(RegressionResult { slope, intercept, r_squared, n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroBucket {
    /// Lower edge of the bucket (BPM or year).
    pub from: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRegression {
    pub regression: RegressionResult<f64>,
    /// Records left out of the fit because their gradient is zero.
    pub excluded_zero: usize,
    pub zero_buckets: Vec<ZeroBucket>,
    /// The `(x, gradient)` pairs that were fitted.
    pub points: Vec<(f64, f64)>,
}

fn is_sliding(r: &CorpusRecord) -> bool {
    r.kind == EventKind::Sliding && r.gradient_hz_s > 0.0
}

fn regress_by(records: &[CorpusRecord], x: impl Fn(&CorpusRecord) -> f64, bucket: f64) -> Result<CorpusRegression> {
    let points: Vec<(f64, f64)> = records.iter().filter(|r| is_sliding(r)).map(|r| (x(r), r.gradient_hz_s)).collect();
    if points.len() < 2 {
        return Err(Error::NoSlidingSubset(points.len()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let regression = linear_regression(&xs, &ys)?;
    let mut buckets: BTreeMap<i64, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| !is_sliding(r)) {
        *buckets.entry((x(r) / bucket).floor() as i64).or_default() += 1;
    }
    Ok(CorpusRegression {
        regression,
        excluded_zero: records.len() - points.len(),
        zero_buckets: buckets.into_iter().map(|(k, count)| ZeroBucket { from: k as f64 * bucket, count }).collect(),
        points,
    })
}

/// Gradient on mean BPM over the sliding subset; zeros bucketed per 10 BPM.
pub fn gradient_vs_tempo(records: &[CorpusRecord]) -> Result<CorpusRegression> {
    regress_by(records, |r| r.bpm, 10.0)
}

/// Gradient on recording year over the sliding subset; zeros bucketed per decade.
pub fn gradient_vs_year(records: &[CorpusRecord]) -> Result<CorpusRegression> {
    regress_by(records, |r| f64::from(r.year), 10.0)
}
