//! Temporal panel data: loading, validation, per-object aggregation and
//! min-max normalization.
//!
//! A [`TemporalDataset`] is a complete `objects × time points × attributes`
//! grid. Objects are kept in lexicographic id order and time points in
//! ascending order, so a dataset loaded from a file does not depend on the
//! order of the file's rows.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{self, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

use crate::stats;

/// Absolute tolerance used for every equality test against a real constant
/// (`=` conditions and `count_eq`).
pub const EQ_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("missing cell: object `{object}` has no row for time {time}")]
    MissingCell { object: String, time: i64 },
    #[error("line {line}: duplicate row for object `{object}` at time {time}")]
    DuplicateRow {
        line: u64,
        object: String,
        time: i64,
    },
    #[error("line {line}, column `{column}`: non-numeric value `{value}`")]
    NonNumericValue {
        line: u64,
        column: String,
        value: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("duplicate object id `{0}`")]
    DuplicateObject(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("time points must be strictly increasing")]
    UnorderedTime,
    #[error("panel of shape {objects}x{times}x{attributes} needs {expected} values, got {found}")]
    ShapeMismatch {
        objects: usize,
        times: usize,
        attributes: usize,
        expected: usize,
        found: usize,
    },
    #[error("column `{name}` has {found} values for {expected} objects")]
    ColumnLength {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value for object `{object}`, time {time}, attribute `{attribute}`")]
    NonFinite {
        object: String,
        time: i64,
        attribute: String,
    },
}

/// Complete panel of real values indexed by (object, time, attribute).
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDataset {
    object_ids: Vec<String>,
    time_points: Vec<i64>,
    attribute_names: Vec<String>,
    // object-major, then time, then attribute
    values: Vec<f64>,
}

impl TemporalDataset {
    /// Builds a validated panel. `values` is laid out object-major, then
    /// time, then attribute.
    pub fn new(
        object_ids: Vec<String>,
        time_points: Vec<i64>,
        attribute_names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self, DataError> {
        if object_ids.is_empty() || time_points.is_empty() || attribute_names.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for id in &object_ids {
            if !seen.insert(id.as_str()) {
                return Err(DataError::DuplicateObject(id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for a in &attribute_names {
            if !seen.insert(a.as_str()) {
                return Err(DataError::DuplicateName(a.clone()));
            }
        }
        if time_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::UnorderedTime);
        }
        let expected = object_ids.len() * time_points.len() * attribute_names.len();
        if values.len() != expected {
            return Err(DataError::ShapeMismatch {
                objects: object_ids.len(),
                times: time_points.len(),
                attributes: attribute_names.len(),
                expected,
                found: values.len(),
            });
        }
        let data = Self {
            object_ids,
            time_points,
            attribute_names,
            values,
        };
        if let Some(pos) = data.values.iter().position(|v| !v.is_finite()) {
            let (o, t, a) = data.unflatten(pos);
            return Err(DataError::NonFinite {
                object: data.object_ids[o].clone(),
                time: data.time_points[t],
                attribute: data.attribute_names[a].clone(),
            });
        }
        Ok(data)
    }

    /// Builds a panel by evaluating `f(object, time, attribute)` on indices.
    pub fn from_fn(
        object_ids: Vec<String>,
        time_points: Vec<i64>,
        attribute_names: Vec<String>,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, DataError> {
        let (no, nt, na) = (object_ids.len(), time_points.len(), attribute_names.len());
        let mut values = Vec::with_capacity(no * nt * na);
        for o in 0..no {
            for t in 0..nt {
                for a in 0..na {
                    values.push(f(o, t, a));
                }
            }
        }
        Self::new(object_ids, time_points, attribute_names, values)
    }

    fn unflatten(&self, pos: usize) -> (usize, usize, usize) {
        let na = self.attribute_names.len();
        let nt = self.time_points.len();
        (pos / (nt * na), (pos / na) % nt, pos % na)
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn time_points(&self) -> &[i64] {
        &self.time_points
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn n_objects(&self) -> usize {
        self.object_ids.len()
    }

    /// Number of time points, `T`.
    pub fn n_times(&self) -> usize {
        self.time_points.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize, DataError> {
        self.attribute_names
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| DataError::UnknownAttribute(name.to_string()))
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.object_ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .or_else(|| self.object_ids.iter().position(|o| o == id))
    }

    #[inline]
    pub fn value(&self, object: usize, time: usize, attribute: usize) -> f64 {
        let nt = self.time_points.len();
        let na = self.attribute_names.len();
        self.values[(object * nt + time) * na + attribute]
    }

    /// One object's values of one attribute, in time order.
    pub fn series(&self, object: usize, attribute: usize) -> Vec<f64> {
        (0..self.n_times())
            .map(|t| self.value(object, t, attribute))
            .collect()
    }

    /// All objects' values of one attribute at one time point.
    pub fn cross_section(&self, time: usize, attribute: usize) -> Vec<f64> {
        (0..self.n_objects())
            .map(|o| self.value(o, time, attribute))
            .collect()
    }

    /// Reads a wide-format panel (`object_id,time,<attrs...>`).
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 3 {
            return Err(DataError::BadHeader(
                "expected `object_id,time,<attribute>...`".into(),
            ));
        }
        if &header[0] != "object_id" || &header[1] != "time" {
            return Err(DataError::BadHeader(format!(
                "first columns must be `object_id,time`, found `{},{}`",
                &header[0], &header[1]
            )));
        }
        let attribute_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let width = header.len();

        let mut rows: BTreeMap<(String, i64), Vec<f64>> = BTreeMap::new();
        let mut objects = BTreeSet::new();
        let mut times = BTreeSet::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != width {
                return Err(DataError::RaggedRow {
                    line,
                    expected: width,
                    found: record.len(),
                });
            }
            let object = record[0].to_string();
            let time: i64 = record[1].parse().map_err(|_| DataError::NonNumericValue {
                line,
                column: "time".into(),
                value: record[1].to_string(),
            })?;
            let mut vals = Vec::with_capacity(width - 2);
            for (col, field) in record.iter().enumerate().skip(2) {
                let v: f64 = field
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| DataError::NonNumericValue {
                        line,
                        column: header[col].to_string(),
                        value: field.to_string(),
                    })?;
                vals.push(v);
            }
            if rows.contains_key(&(object.clone(), time)) {
                return Err(DataError::DuplicateRow { line, object, time });
            }
            objects.insert(object.clone());
            times.insert(time);
            rows.insert((object, time), vals);
        }
        if rows.is_empty() {
            return Err(DataError::EmptyDataset);
        }

        let object_ids: Vec<String> = objects.into_iter().collect();
        let time_points: Vec<i64> = times.into_iter().collect();
        let mut values =
            Vec::with_capacity(object_ids.len() * time_points.len() * attribute_names.len());
        for o in &object_ids {
            for &t in &time_points {
                match rows.remove(&(o.clone(), t)) {
                    Some(v) => values.extend(v),
                    None => {
                        return Err(DataError::MissingCell {
                            object: o.clone(),
                            time: t,
                        })
                    }
                }
            }
        }
        Self::new(object_ids, time_points, attribute_names, values)
    }

    /// Writes the panel in the same wide format [`Self::from_reader`] reads.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "object_id,time")?;
        for a in &self.attribute_names {
            write!(w, ",{a}")?;
        }
        writeln!(w)?;
        for (o, id) in self.object_ids.iter().enumerate() {
            for (t, time) in self.time_points.iter().enumerate() {
                write!(w, "{id},{time}")?;
                for a in 0..self.n_attributes() {
                    write!(w, ",{}", self.value(o, t, a))?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Returns a copy keeping only the named attributes, in the given order.
    pub fn select_attributes(&self, names: &[&str]) -> Result<Self, DataError> {
        let idx = names
            .iter()
            .map(|n| self.attribute_index(n))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_fn(
            self.object_ids.clone(),
            self.time_points.clone(),
            names.iter().map(|s| s.to_string()).collect(),
            |o, t, a| self.value(o, t, idx[a]),
        )
    }
}

/// Loads and validates a wide-format panel CSV.
pub fn load_temporal_csv(path: impl AsRef<Path>) -> Result<TemporalDataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TemporalDataset::from_reader(io::BufReader::new(file))
}

/// Per-object reduction of one attribute's time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggregateKind {
    Mean,
    Min,
    Max,
    Median,
    Mode,
    StdDev,
    /// Number of time points whose value equals the constant.
    CountEq(f64),
    /// Number of time points whose value is at most the constant.
    CountLeq(f64),
}

impl AggregateKind {
    pub fn apply(&self, series: &[f64]) -> f64 {
        match *self {
            AggregateKind::Mean => stats::mean(series),
            AggregateKind::Min => stats::min(series),
            AggregateKind::Max => stats::max(series),
            AggregateKind::Median => stats::median(series),
            AggregateKind::Mode => stats::mode(series),
            AggregateKind::StdDev => stats::population_sd(series),
            AggregateKind::CountEq(v) => series
                .iter()
                .filter(|&&x| (x - v).abs() <= EQ_TOLERANCE)
                .count() as f64,
            AggregateKind::CountLeq(v) => series.iter().filter(|&&x| x <= v).count() as f64,
        }
    }

    /// Parses the `kind` / `value` pair of a rule document.
    pub fn parse(kind: &str, value: Option<f64>) -> Option<Self> {
        Some(match (kind, value) {
            ("mean", None) => Self::Mean,
            ("min", None) => Self::Min,
            ("max", None) => Self::Max,
            ("median", None) => Self::Median,
            ("mode", None) => Self::Mode,
            ("stddev", None) => Self::StdDev,
            ("count_eq", Some(v)) => Self::CountEq(v),
            ("count_leq", Some(v)) => Self::CountLeq(v),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSpec {
    pub name: String,
    pub source: String,
    pub kind: AggregateKind,
}

impl AggregateSpec {
    pub fn new(name: impl Into<String>, source: impl Into<String>, kind: AggregateKind) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            kind,
        }
    }
}

/// Per-object scalar columns derived from a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedView {
    object_ids: Vec<String>,
    columns: IndexMap<String, Vec<f64>>,
}

impl AggregatedView {
    /// Builds a view from precomputed columns; every column must have one
    /// value per object.
    pub fn from_columns(
        object_ids: Vec<String>,
        columns: IndexMap<String, Vec<f64>>,
    ) -> Result<Self, DataError> {
        for (name, col) in &columns {
            if col.len() != object_ids.len() {
                return Err(DataError::ColumnLength {
                    name: name.clone(),
                    expected: object_ids.len(),
                    found: col.len(),
                });
            }
        }
        Ok(Self {
            object_ids,
            columns,
        })
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn column(&self, name: &str) -> Result<&[f64], DataError> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| DataError::UnknownAttribute(name.to_string()))
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    /// Export as `object_id,<aggregate names...>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "object_id")?;
        for name in self.columns.keys() {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for (o, id) in self.object_ids.iter().enumerate() {
            write!(w, "{id}")?;
            for col in self.columns.values() {
                write!(w, ",{}", col[o])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Computes each aggregate independently per object over its full series.
pub fn aggregate(
    data: &TemporalDataset,
    specs: &[AggregateSpec],
) -> Result<AggregatedView, DataError> {
    let mut columns = IndexMap::with_capacity(specs.len());
    for spec in specs {
        let attr = data.attribute_index(&spec.source)?;
        let col: Vec<f64> = (0..data.n_objects())
            .map(|o| spec.kind.apply(&data.series(o, attr)))
            .collect();
        if columns.insert(spec.name.clone(), col).is_some() {
            return Err(DataError::DuplicateName(spec.name.clone()));
        }
    }
    Ok(AggregatedView {
        object_ids: data.object_ids.clone(),
        columns,
    })
}

/// Rescales each listed attribute to `[0,1]` by its global panel min/max.
/// A constant attribute maps to all zeros.
pub fn normalize_minmax(
    data: &TemporalDataset,
    attrs: &[&str],
) -> Result<TemporalDataset, DataError> {
    let mut out = data.clone();
    let na = data.n_attributes();
    for name in attrs {
        let a = data.attribute_index(name)?;
        let cells = || out.values.iter().skip(a).step_by(na);
        let lo = cells().copied().fold(f64::INFINITY, f64::min);
        let hi = cells().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        for v in out.values.iter_mut().skip(a).step_by(na) {
            *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
        }
    }
    Ok(out)
}
