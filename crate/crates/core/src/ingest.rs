//! Loading, validating and detrending station collections.
//!
//! A data directory holds one metadata table and one flow file per station:
//!
//! ```text
//! <dir>/stations.csv        station_id,name,latitude,longitude,state
//! <dir>/flows/<id>.csv      date,flow      (ISO-8601 dates, `NA` marks a gap)
//! ```
//!
//! Calendar dates only exist here. Downstream modules index days from the
//! collection's `start_date`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::format_number;
use crate::scalar::Scalar;

pub const METADATA_FILE: &str = "stations.csv";
pub const FLOW_DIR: &str = "flows";
pub const GAP_SENTINEL: &str = "NA";
/// Longest interior gap the `linear` policy will interpolate.
pub const MAX_LINEAR_GAP: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum State {
    ACT,
    NT,
    NSW,
    QLD,
    SA,
    TAS,
    VIC,
    WA,
}

impl State {
    pub const ALL: [State; 8] = [
        State::ACT,
        State::NT,
        State::NSW,
        State::QLD,
        State::SA,
        State::TAS,
        State::VIC,
        State::WA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            State::ACT => "ACT",
            State::NT => "NT",
            State::NSW => "NSW",
            State::QLD => "QLD",
            State::SA => "SA",
            State::TAS => "TAS",
            State::VIC => "VIC",
            State::WA => "WA",
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for State {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        State::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown state {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationMeta {
    pub station_id: String,
    pub name: String,
    /// Degrees, in [-90, 90].
    pub latitude: f64,
    /// Degrees, in [-180, 180].
    pub longitude: f64,
    pub state: State,
}

impl StationMeta {
    fn validate(&self) -> Result<()> {
        if self.station_id.trim().is_empty() {
            return Err(Error::InvalidParameter("empty station id".into()));
        }
        if !(-90.0..=90.0).contains(&self.latitude) || !(-180.0..=180.0).contains(&self.longitude)
        {
            return Err(Error::InvalidParameter(format!(
                "station {}: coordinates ({}, {}) out of bounds",
                self.station_id, self.latitude, self.longitude
            )));
        }
        Ok(())
    }
}

/// One station's daily streamflow (ML/day).
#[derive(Debug, Clone, PartialEq)]
pub struct StationSeries<F> {
    pub meta: StationMeta,
    pub flow: Vec<F>,
}

impl<F: Scalar> StationSeries<F> {
    pub fn id(&self) -> &str {
        &self.meta.station_id
    }
}

/// Immutable, validated set of equally long station series.
///
/// Station index order is the row/column order of every matrix built from
/// the collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection<F> {
    stations: Vec<StationSeries<F>>,
    start_date: NaiveDate,
    days: usize,
}

impl<F: Scalar> Collection<F> {
    /// Validates and wraps `stations` in the order given.
    ///
    /// Requires at least one station, one common non-zero length, unique ids,
    /// in-bounds coordinates and non-negative finite flows.
    pub fn new(stations: Vec<StationSeries<F>>, start_date: NaiveDate) -> Result<Self> {
        let first = stations
            .first()
            .ok_or_else(|| Error::Degenerate("collection has no stations".into()))?;
        let days = first.flow.len();
        if days == 0 {
            return Err(Error::Degenerate("series have zero length".into()));
        }
        let mut seen = HashSet::new();
        for s in &stations {
            s.meta.validate()?;
            if !seen.insert(s.meta.station_id.as_str()) {
                return Err(Error::DuplicateStation(s.meta.station_id.clone()));
            }
            if s.flow.len() != days {
                return Err(Error::DateRange {
                    station: s.meta.station_id.clone(),
                    message: format!("length {} differs from {}", s.flow.len(), days),
                });
            }
            if let Some(pos) = s.flow.iter().position(|v| !v.is_finite() || *v < F::zero()) {
                return Err(Error::BadFlow {
                    station: s.meta.station_id.clone(),
                    line: pos as u64 + 2,
                    raw: format!("{}", s.flow[pos]),
                });
            }
        }
        Ok(Self {
            stations,
            start_date,
            days,
        })
    }

    pub fn stations(&self) -> &[StationSeries<F>] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Day count `T`.
    pub fn days(&self) -> usize {
        self.days
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.start_date + Days::new(self.days as u64 - 1)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.stations.iter().map(|s| s.id()).collect()
    }

    pub fn flows(&self) -> impl Iterator<Item = &[F]> {
        self.stations.iter().map(|s| s.flow.as_slice())
    }

    pub fn flow(&self, i: usize) -> &[F] {
        &self.stations[i].flow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapPolicy {
    /// Any missing value is an error.
    #[default]
    Reject,
    /// Interior gaps of at most [`MAX_LINEAR_GAP`] days are interpolated.
    Linear,
}

impl FromStr for GapPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reject" => Ok(GapPolicy::Reject),
            "linear" => Ok(GapPolicy::Linear),
            other => Err(format!("unknown gap policy {other:?}")),
        }
    }
}

/// How a data directory is read.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IngestConfig {
    /// Inclusive first day; defaults to the first day of the first station file.
    pub start_date: Option<NaiveDate>,
    /// Inclusive last day; defaults to the last day of the first station file.
    pub end_date: Option<NaiveDate>,
    pub gap_policy: GapPolicy,
}

/// Replaces `None` entries according to `policy`.
pub fn fill_gaps<F: Scalar>(station: &str, values: &[Option<F>], policy: GapPolicy) -> Result<Vec<F>> {
    let gap = |index: usize, reason: &str| Error::Gap {
        station: station.to_string(),
        index,
        reason: reason.to_string(),
    };
    let mut out = Vec::with_capacity(values.len());
    let mut i = 0;
    while i < values.len() {
        if let Some(v) = values[i] {
            out.push(v);
            i += 1;
            continue;
        }
        if policy == GapPolicy::Reject {
            return Err(gap(i, "missing value under the reject policy"));
        }
        let end = (i..values.len()).find(|&k| values[k].is_some());
        let (Some(end), Some(&left)) = (end, out.last()) else {
            return Err(gap(i, "gap touches the series boundary"));
        };
        let len = end - i;
        if len > MAX_LINEAR_GAP {
            return Err(gap(
                i,
                &format!("gap of {len} days exceeds the {MAX_LINEAR_GAP}-day limit"),
            ));
        }
        let right = values[end].expect("found above");
        let span = F::lit((len + 1) as f64);
        for k in 1..=len {
            let w = F::lit(k as f64) / span;
            out.push(left + (right - left) * w);
        }
        i = end;
    }
    Ok(out)
}

/// Subtracts the arithmetic mean.
pub fn detrend<F: Scalar>(x: &[F]) -> Vec<F> {
    if x.is_empty() {
        return Vec::new();
    }
    let mean = x.iter().copied().sum::<F>() / F::lit(x.len() as f64);
    x.iter().map(|&v| v - mean).collect()
}

#[derive(Debug, Deserialize)]
struct MetaRow {
    station_id: String,
    name: String,
    latitude: f64,
    longitude: f64,
    state: String,
}

fn read_metadata(path: &Path) -> Result<Vec<StationMeta>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.deserialize::<MetaRow>() {
        let row = rec.map_err(|e| Error::csv(path, e))?;
        let state = row.state.parse().map_err(|message| Error::Malformed {
            path: path.to_path_buf(),
            line: out.len() as u64 + 2,
            message,
        })?;
        let meta = StationMeta {
            station_id: row.station_id.trim().to_string(),
            name: row.name,
            latitude: row.latitude,
            longitude: row.longitude,
            state,
        };
        meta.validate()?;
        out.push(meta);
    }
    Ok(out)
}

struct RawFlow<F> {
    dates: Vec<NaiveDate>,
    values: Vec<Option<F>>,
}

fn read_flow_file<F: Scalar>(station: &str, path: &Path) -> Result<RawFlow<F>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?;
    if headers.len() < 2 || headers[0].trim() != "date" || headers[1].trim() != "flow" {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `date,flow`".into(),
        });
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(rec.get(0).unwrap_or("").trim(), "%Y-%m-%d")
            .map_err(|e| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message: format!("bad date: {e}"),
            })?;
        let raw = rec.get(1).unwrap_or("").trim();
        let value = if raw == GAP_SENTINEL {
            None
        } else {
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Some(F::lit(v)),
                _ => {
                    return Err(Error::BadFlow {
                        station: station.to_string(),
                        line,
                        raw: raw.to_string(),
                    })
                }
            }
        };
        dates.push(date);
        values.push(value);
    }
    Ok(RawFlow { dates, values })
}

fn select_range<F: Scalar>(
    station: &str,
    raw: RawFlow<F>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<Vec<Option<F>>> {
    let mismatch = |message: String| Error::DateRange {
        station: station.to_string(),
        message,
    };
    let mut out = Vec::new();
    let mut expected = start;
    for (date, value) in raw.dates.into_iter().zip(raw.values) {
        if date < start || date > end {
            continue;
        }
        if date != expected {
            return Err(mismatch(format!("expected {expected}, found {date}")));
        }
        out.push(value);
        expected = expected + Days::new(1);
    }
    if expected <= end {
        return Err(mismatch(format!("no data for {expected}..={end}")));
    }
    Ok(out)
}

/// Reads a data directory into a collection ordered by station id.
pub fn load_collection<F: Scalar>(dir: &Path, config: &IngestConfig) -> Result<Collection<F>> {
    let metadata = read_metadata(&dir.join(METADATA_FILE))?;
    let mut by_id = BTreeMap::new();
    for meta in metadata {
        if by_id.contains_key(&meta.station_id) {
            return Err(Error::DuplicateStation(meta.station_id));
        }
        by_id.insert(meta.station_id.clone(), meta);
    }

    let flow_dir = dir.join(FLOW_DIR);
    let entries = fs::read_dir(&flow_dir).map_err(|e| Error::io(&flow_dir, e))?;
    let mut files: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&flow_dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if !by_id.contains_key(id) {
            return Err(Error::MissingMetadata(id.to_string()));
        }
        files.insert(id.to_string(), path);
    }
    if let Some(id) = by_id.keys().find(|id| !files.contains_key(*id)) {
        return Err(Error::MissingFlowFile(id.clone()));
    }
    if files.len() < 2 {
        return Err(Error::Degenerate(format!(
            "a collection needs at least 2 stations, found {}",
            files.len()
        )));
    }

    let parsed: Vec<(String, RawFlow<F>)> = files
        .par_iter()
        .map(|(id, path)| read_flow_file(id, path).map(|raw| (id.clone(), raw)))
        .collect::<Result<_>>()?;

    let (first_id, first) = &parsed[0];
    let start = match config.start_date.or_else(|| first.dates.first().copied()) {
        Some(d) => d,
        None => {
            return Err(Error::DateRange {
                station: first_id.clone(),
                message: "flow file is empty".into(),
            })
        }
    };
    let end = config
        .end_date
        .or_else(|| first.dates.last().copied())
        .unwrap_or(start);
    if end < start {
        return Err(Error::InvalidParameter(format!(
            "end date {end} precedes start date {start}"
        )));
    }

    let stations = parsed
        .into_par_iter()
        .map(|(id, raw)| {
            let values = select_range(&id, raw, start, end)?;
            let flow = fill_gaps(&id, &values, config.gap_policy)?;
            let meta = by_id[&id].clone();
            Ok(StationSeries { meta, flow })
        })
        .collect::<Result<Vec<_>>>()?;
    Collection::new(stations, start)
}

/// Writes `collection` in the layout [`load_collection`] reads.
pub fn write_collection<F: Scalar>(dir: &Path, collection: &Collection<F>) -> Result<()> {
    let flow_dir = dir.join(FLOW_DIR);
    fs::create_dir_all(&flow_dir).map_err(|e| Error::io(&flow_dir, e))?;

    let meta_path = dir.join(METADATA_FILE);
    let mut w = csv::Writer::from_path(&meta_path).map_err(|e| Error::csv(&meta_path, e))?;
    let wrap = |e: csv::Error| Error::csv(&meta_path, e);
    w.write_record(["station_id", "name", "latitude", "longitude", "state"])
        .map_err(wrap)?;
    for s in collection.stations() {
        let m = &s.meta;
        w.write_record([
            m.station_id.clone(),
            m.name.clone(),
            format_number(m.latitude),
            format_number(m.longitude),
            m.state.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(&meta_path, e))?;

    collection.stations().par_iter().try_for_each(|s| {
        let path = flow_dir.join(format!("{}.csv", s.id()));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["date", "flow"]).map_err(|e| Error::csv(&path, e))?;
        let mut date = collection.start_date();
        for v in &s.flow {
            w.write_record([date.format("%Y-%m-%d").to_string(), format_number(v.as_f64())])
                .map_err(|e| Error::csv(&path, e))?;
            date = date + Days::new(1);
        }
        w.flush().map_err(|e| Error::io(&path, e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(id: &str) -> StationMeta {
        StationMeta {
            station_id: id.into(),
            name: format!("Station {id}"),
            latitude: -35.0,
            longitude: 149.0,
            state: State::ACT,
        }
    }

    fn write_station(dir: &Path, id: &str, rows: &[(&str, &str)]) {
        let mut body = String::from("date,flow\n");
        for (d, v) in rows {
            body.push_str(&format!("{d},{v}\n"));
        }
        fs::write(dir.join(FLOW_DIR).join(format!("{id}.csv")), body).unwrap();
    }

    fn toy_dir(ids: &[&str], days: usize) -> tempfile::TempDir {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join(FLOW_DIR)).unwrap();
        let mut meta = String::from("station_id,name,latitude,longitude,state\n");
        for id in ids {
            meta.push_str(&format!("{id},River {id},-35.38,148.96,NSW\n"));
            let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
            let rows: Vec<(String, String)> = (0..days)
                .map(|k| {
                    let d = start + Days::new(k as u64);
                    (d.to_string(), format!("{}", k + 1))
                })
                .collect();
            let refs: Vec<(&str, &str)> = rows.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            write_station(tmp.path(), id, &refs);
        }
        fs::write(tmp.path().join(METADATA_FILE), meta).unwrap();
        tmp
    }

    #[test]
    fn loads_three_stations_sorted() {
        let tmp = toy_dir(&["c3", "a1", "b2"], 10);
        let c: Collection<f64> = load_collection(tmp.path(), &IngestConfig::default()).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.days(), 10);
        assert_eq!(c.ids(), vec!["a1", "b2", "c3"]);
        assert_eq!(c.flow(0)[9], 10.0);
    }

    #[test]
    fn negative_flow_names_station_and_line() {
        let tmp = toy_dir(&["a1", "b2"], 3);
        write_station(
            tmp.path(),
            "b2",
            &[("2000-01-01", "1.0"), ("2000-01-02", "-4.0"), ("2000-01-03", "2")],
        );
        let err = load_collection::<f64>(tmp.path(), &IngestConfig::default()).unwrap_err();
        match err {
            Error::BadFlow { station, line, .. } => {
                assert_eq!(station, "b2");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_flow_rejected() {
        let tmp = toy_dir(&["a1", "b2"], 2);
        write_station(tmp.path(), "a1", &[("2000-01-01", "x"), ("2000-01-02", "1")]);
        assert!(matches!(
            load_collection::<f64>(tmp.path(), &IngestConfig::default()),
            Err(Error::BadFlow { .. })
        ));
    }

    #[test]
    fn flow_file_without_metadata() {
        let tmp = toy_dir(&["a1", "b2"], 2);
        write_station(tmp.path(), "zz", &[("2000-01-01", "1"), ("2000-01-02", "1")]);
        assert!(matches!(
            load_collection::<f64>(tmp.path(), &IngestConfig::default()),
            Err(Error::MissingMetadata(id)) if id == "zz"
        ));
    }

    #[test]
    fn date_range_mismatch() {
        let tmp = toy_dir(&["a1", "b2"], 4);
        write_station(tmp.path(), "b2", &[("2000-01-01", "1"), ("2000-01-03", "1")]);
        assert!(matches!(
            load_collection::<f64>(tmp.path(), &IngestConfig::default()),
            Err(Error::DateRange { .. })
        ));
    }

    #[test]
    fn configured_range_trims_rows() {
        let tmp = toy_dir(&["a1", "b2"], 10);
        let cfg = IngestConfig {
            start_date: NaiveDate::from_ymd_opt(2000, 1, 3),
            end_date: NaiveDate::from_ymd_opt(2000, 1, 5),
            gap_policy: GapPolicy::Reject,
        };
        let c: Collection<f64> = load_collection(tmp.path(), &cfg).unwrap();
        assert_eq!(c.days(), 3);
        assert_eq!(c.flow(1), &[3.0, 4.0, 5.0]);
        assert_eq!(c.end_date(), NaiveDate::from_ymd_opt(2000, 1, 5).unwrap());
    }

    #[test]
    fn full_record_date_range_length() {
        let start = NaiveDate::from_ymd_opt(1980, 1, 1).unwrap();
        let end = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        assert_eq!((end - start).num_days() + 1, 14246);
    }

    #[test]
    fn gap_sentinel_rejected_by_default() {
        let tmp = toy_dir(&["a1", "b2"], 3);
        write_station(
            tmp.path(),
            "a1",
            &[("2000-01-01", "1"), ("2000-01-02", "NA"), ("2000-01-03", "3")],
        );
        assert!(matches!(
            load_collection::<f64>(tmp.path(), &IngestConfig::default()),
            Err(Error::Gap { .. })
        ));
        let cfg = IngestConfig {
            gap_policy: GapPolicy::Linear,
            ..Default::default()
        };
        let c: Collection<f64> = load_collection(tmp.path(), &cfg).unwrap();
        assert_eq!(c.flow(0), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn fill_gaps_cases() {
        let v = fill_gaps("s", &[Some(1.0), None, Some(3.0)], GapPolicy::Linear).unwrap();
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
        assert!(fill_gaps("s", &[None, Some(2.0), Some(3.0)], GapPolicy::Linear).is_err());
        assert!(fill_gaps("s", &[Some(2.0), Some(3.0), None], GapPolicy::Linear).is_err());
        let v = fill_gaps("s", &[Some(1.0), Some(2.0), Some(3.0)], GapPolicy::Reject).unwrap();
        assert_eq!(v, vec![1.0, 2.0, 3.0]);
        let mut long = vec![Some(0.0)];
        long.extend(std::iter::repeat(None).take(8));
        long.push(Some(9.0));
        assert!(fill_gaps::<f64>("s", &long, GapPolicy::Linear).is_err());
        long.remove(1);
        let filled = fill_gaps::<f64>("s", &long, GapPolicy::Linear).unwrap();
        assert_eq!(filled, (0..9).map(|k| k as f64 * 9.0 / 8.0).collect::<Vec<_>>());
    }

    #[test]
    fn detrend_examples() {
        assert_eq!(detrend(&[1.0, 2.0, 3.0]), vec![-1.0, 0.0, 1.0]);
        assert_eq!(detrend(&[5.0, 5.0]), vec![0.0, 0.0]);
        // mean of [2, 4, 9] is 5
        assert_eq!(detrend(&[2.0, 4.0, 9.0]), vec![-3.0, -1.0, 4.0]);
    }

    #[test]
    fn collection_rejects_bad_inputs() {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let s = |id: &str, flow: Vec<f64>| StationSeries { meta: meta(id), flow };
        assert!(Collection::new(vec![s("a", vec![1.0]), s("a", vec![1.0])], start).is_err());
        assert!(Collection::new(vec![s("a", vec![1.0]), s("b", vec![1.0, 2.0])], start).is_err());
        assert!(Collection::new(vec![s("a", vec![-1.0])], start).is_err());
        assert!(Collection::<f64>::new(vec![], start).is_err());
        let mut bad = s("a", vec![1.0]);
        bad.meta.latitude = 91.0;
        assert!(Collection::new(vec![bad], start).is_err());
    }

    #[test]
    fn write_then_load_is_identity() {
        let start = NaiveDate::from_ymd_opt(1999, 12, 30).unwrap();
        let stations = vec![
            StationSeries {
                meta: meta("410001"),
                flow: vec![0.1, 1.0 / 3.0, 1e-300, 12345.678],
            },
            StationSeries {
                meta: StationMeta {
                    latitude: -42.123456789,
                    state: State::TAS,
                    ..meta("500002")
                },
                flow: vec![0.0, 2.5, std::f64::consts::PI, 7.0],
            },
        ];
        let c = Collection::new(stations, start).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        write_collection(tmp.path(), &c).unwrap();
        let back: Collection<f64> = load_collection(tmp.path(), &IngestConfig::default()).unwrap();
        assert_eq!(back, c);
    }
}
