//! CSV loading, z-score scaling, and the synthetic datasets used by the
//! experiments.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Per-column scaling applied at ingestion: `scaled = (raw - mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub mean: f64,
    pub std: f64,
    /// The raw column had zero variance; `std` was replaced by 1.
    pub constant: bool,
}

impl ColumnScaling {
    pub const IDENTITY: ColumnScaling = ColumnScaling { mean: 0.0, std: 1.0, constant: false };
}

/// A categorical column kept beside the numeric matrix for interpretation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideColumn {
    pub name: String,
    pub values: Vec<String>,
}

impl SideColumn {
    /// Distinct categories in sorted order.
    pub fn levels(&self) -> Vec<String> {
        let mut v: Vec<String> = self.values.iter().cloned().collect::<HashSet<_>>().into_iter().collect();
        v.sort();
        v
    }

    pub fn rows_equal_to(&self, level: &str) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| *v == level).map(|(i, _)| i).collect()
    }
}

/// An `n × m` numeric matrix with column names, scaling metadata and
/// categorical side columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    col_names: Vec<String>,
    scaling: Vec<ColumnScaling>,
    side_cols: Vec<SideColumn>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, col_names: Vec<String>) -> Result<Self> {
        if col_names.len() != values.ncols() {
            return Err(Error::InvalidShape(format!(
                "{} column names for {} columns",
                col_names.len(),
                values.ncols()
            )));
        }
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidShape(format!("{}×{} data matrix", values.nrows(), values.ncols())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data contains non-finite values".into()));
        }
        let m = values.ncols();
        Ok(DataMatrix { values, col_names, scaling: vec![ColumnScaling::IDENTITY; m], side_cols: Vec::new() })
    }

    /// Builds a matrix from row vectors with generated names `X1..Xm`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidShape("ragged rows".into()));
        }
        let values = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        DataMatrix::new(values, (1..=m).map(|j| format!("X{j}")).collect())
    }

    pub fn with_side_column(mut self, name: impl Into<String>, values: Vec<String>) -> Result<Self> {
        if values.len() != self.n_rows() {
            return Err(Error::InvalidShape(format!(
                "side column has {} rows, data has {}",
                values.len(),
                self.n_rows()
            )));
        }
        self.side_cols.push(SideColumn { name: name.into(), values });
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn scaling(&self) -> &[ColumnScaling] {
        &self.scaling
    }

    pub fn side_cols(&self) -> &[SideColumn] {
        &self.side_cols
    }

    pub fn side_col(&self, name: &str) -> Option<&SideColumn> {
        self.side_cols.iter().find(|c| c.name == name)
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.col_names.iter().position(|c| c == name)
    }

    /// Indices of columns flagged constant at scaling time.
    pub fn constant_cols(&self) -> Vec<usize> {
        self.scaling.iter().enumerate().filter(|(_, s)| s.constant).map(|(j, _)| j).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Returns a copy with the numeric values replaced (same names and side columns).
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        if values.shape() != self.values.shape() {
            return Err(Error::ShapeMismatch { expected: self.shape(), actual: values.shape() });
        }
        Ok(DataMatrix { values, ..self.clone() })
    }

    /// Keeps the given rows, in the given order; side columns follow their rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidShape("no rows selected".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n_rows()) {
            return Err(Error::InvalidSelection(format!("row {bad} out of range")));
        }
        let values = self.values.select_rows(rows);
        let side_cols = self
            .side_cols
            .iter()
            .map(|c| SideColumn { name: c.name.clone(), values: rows.iter().map(|&i| c.values[i].clone()).collect() })
            .collect();
        Ok(DataMatrix { values, col_names: self.col_names.clone(), scaling: self.scaling.clone(), side_cols })
    }

    /// Standardises every column to zero mean and unit population variance,
    /// composing with any scaling already applied.
    pub fn scaled(&self) -> Self {
        let n = self.n_rows() as f64;
        let mut values = self.values.clone();
        let mut scaling = Vec::with_capacity(self.n_cols());
        for (j, mut col) in values.column_iter_mut().enumerate() {
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            let constant = std <= 1e-12 * mean.abs().max(1.0);
            let divisor = if constant { 1.0 } else { std };
            for v in col.iter_mut() {
                *v = (*v - mean) / divisor;
            }
            let prev = self.scaling[j];
            scaling.push(ColumnScaling {
                mean: prev.mean + prev.std * mean,
                std: prev.std * divisor,
                constant: constant || prev.constant,
            });
        }
        DataMatrix { values, col_names: self.col_names.clone(), scaling, side_cols: self.side_cols.clone() }
    }

    /// Undoes the recorded scaling.
    pub fn unscaled(&self) -> Self {
        let mut values = self.values.clone();
        for (j, mut col) in values.column_iter_mut().enumerate() {
            let s = self.scaling[j];
            for v in col.iter_mut() {
                *v = *v * s.std + s.mean;
            }
        }
        let m = self.n_cols();
        DataMatrix {
            values,
            col_names: self.col_names.clone(),
            scaling: vec![ColumnScaling::IDENTITY; m],
            side_cols: self.side_cols.clone(),
        }
    }

    /// Writes the numeric columns followed by the side columns as CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> =
            self.col_names.iter().map(String::as_str).chain(self.side_cols.iter().map(|c| c.name.as_str())).collect();
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut record: Vec<String> = (0..self.n_cols()).map(|j| format_float(self.values[(i, j)])).collect();
            record.extend(self.side_cols.iter().map(|c| c.values[i].clone()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Column selection recorded next to a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Numeric columns to keep, in order. `None` keeps every numeric column.
    #[serde(default)]
    pub keep: Option<Vec<String>>,
    #[serde(default)]
    pub drop: Vec<String>,
    /// Like `drop`, but names missing from the header are ignored.
    #[serde(default)]
    pub drop_if_present: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    /// Expected number of numeric columns after selection, checked at load.
    #[serde(default)]
    pub expect_numeric: Option<usize>,
}

impl Manifest {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub categorical_cols: Vec<String>,
    pub drop_cols: Vec<String>,
    pub drop_if_present: Vec<String>,
    pub keep_cols: Option<Vec<String>>,
    pub expect_numeric: Option<usize>,
    pub subsample_n: Option<usize>,
    pub seed: u64,
    /// Standardise numeric columns after loading.
    pub scale: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: b',',
            categorical_cols: Vec::new(),
            drop_cols: Vec::new(),
            drop_if_present: Vec::new(),
            keep_cols: None,
            expect_numeric: None,
            subsample_n: None,
            seed: 0,
            scale: true,
        }
    }
}

impl LoadOptions {
    pub fn with_manifest(mut self, manifest: &Manifest) -> Self {
        self.categorical_cols.extend(manifest.categorical.iter().cloned());
        self.drop_cols.extend(manifest.drop.iter().cloned());
        self.drop_if_present.extend(manifest.drop_if_present.iter().cloned());
        if manifest.keep.is_some() {
            self.keep_cols = manifest.keep.clone();
        }
        if manifest.expect_numeric.is_some() {
            self.expect_numeric = manifest.expect_numeric;
        }
        self
    }
}

/// A row removed during loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRow {
    /// 1-based line number in the file (the header is line 1).
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub dropped: Vec<DroppedRow>,
    /// Columns treated as categorical because their cells are not numeric.
    pub auto_categorical: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub data: DataMatrix,
    pub report: LoadReport,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan" | "null" | "?")
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Loaded> {
    let file = std::fs::File::open(path.as_ref())?;
    load_csv_reader(file, options)
}

/// Parses CSV text with a mandatory header row.
pub fn load_csv_reader<R: Read>(reader: R, options: &LoadOptions) -> Result<Loaded> {
    let mut rdr =
        csv::ReaderBuilder::new().delimiter(options.delimiter).has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Ingestion("missing header row".into()));
    }
    for name in options.categorical_cols.iter().chain(&options.drop_cols) {
        if !header.contains(name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let mut report = LoadReport { rows_read: records.len(), ..LoadReport::default() };
    if records.is_empty() {
        return Err(Error::Ingestion("no data rows".into()));
    }

    let dropped: HashSet<&str> = options.drop_cols.iter().chain(&options.drop_if_present).map(String::as_str).collect();
    let explicit_cat: HashSet<&str> = options.categorical_cols.iter().map(String::as_str).collect();
    let mut numeric: Vec<usize> = Vec::new();
    let mut categorical: Vec<usize> = Vec::new();
    for (k, name) in header.iter().enumerate() {
        if dropped.contains(name.as_str()) {
            continue;
        }
        if explicit_cat.contains(name.as_str()) {
            categorical.push(k);
            continue;
        }
        let (mut parsed, mut present) = (0usize, 0usize);
        for r in &records {
            let cell = r.get(k).unwrap_or("");
            if !is_missing(cell) {
                present += 1;
                if parse_cell(cell).is_some() {
                    parsed += 1;
                }
            }
        }
        if present > 0 && parsed * 2 < present {
            report.auto_categorical.push(name.clone());
            categorical.push(k);
        } else {
            numeric.push(k);
        }
    }
    if let Some(keep) = &options.keep_cols {
        let mut ordered = Vec::with_capacity(keep.len());
        for name in keep {
            let k = header.iter().position(|h| h == name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            if !numeric.contains(&k) {
                return Err(Error::Ingestion(format!("kept column `{name}` is not numeric")));
            }
            ordered.push(k);
        }
        numeric = ordered;
    }
    if numeric.is_empty() {
        return Err(Error::Ingestion("no numeric columns".into()));
    }
    if let Some(expected) = options.expect_numeric {
        if numeric.len() != expected {
            return Err(Error::Ingestion(format!("expected {expected} numeric columns, found {}", numeric.len())));
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut side: Vec<Vec<String>> = vec![Vec::new(); categorical.len()];
    for (r, rec) in records.iter().enumerate() {
        let line = r + 2;
        if rec.len() != header.len() {
            report
                .dropped
                .push(DroppedRow { line, reason: format!("{} fields, expected {}", rec.len(), header.len()) });
            continue;
        }
        let mut row = Vec::with_capacity(numeric.len());
        let mut bad = None;
        for &k in &numeric {
            match parse_cell(&rec[k]) {
                Some(v) => row.push(v),
                None => {
                    bad = Some(format!("column `{}`: cannot parse {:?}", header[k], &rec[k]));
                    break;
                }
            }
        }
        match bad {
            Some(reason) => report.dropped.push(DroppedRow { line, reason }),
            None => {
                rows.push(row);
                for (s, &k) in side.iter_mut().zip(&categorical) {
                    s.push(rec[k].trim().to_string());
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::RowsRejected { rows: report.dropped });
    }

    let names = numeric.iter().map(|&k| header[k].clone()).collect();
    let values = DMatrix::from_fn(rows.len(), numeric.len(), |i, j| rows[i][j]);
    let mut data = DataMatrix::new(values, names)?;
    for (s, &k) in side.into_iter().zip(&categorical) {
        data = data.with_side_column(header[k].clone(), s)?;
    }
    if let Some(keep_n) = options.subsample_n {
        if keep_n == 0 {
            return Err(Error::InvalidParameter("subsample size must be positive".into()));
        }
        if keep_n < data.n_rows() {
            let mut r = rng::rng(rng::derive(options.seed, &[0x5ab5]));
            let mut idx = sample_indices(&mut r, data.n_rows(), keep_n).into_vec();
            idx.sort_unstable();
            data = data.select_rows(&idx)?;
        }
    }
    if options.scale {
        data = data.scaled();
    }
    Ok(Loaded { data, report })
}

/// Parameters of the four-attribute toy dataset: `A`, `B` strongly correlated,
/// `C = A + noise`, `D = B + noise`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub n: usize,
    pub rho: f64,
    pub noise_c: f64,
    pub noise_d: f64,
    pub seed: u64,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams { n: 1000, rho: 0.95, noise_c: 0.5, noise_d: 0.5, seed: 42 }
    }
}

pub fn make_toy(p: &ToyParams) -> Result<DataMatrix> {
    if p.n < 10 {
        return Err(Error::InvalidParameter(format!("toy data needs n ≥ 10, got {}", p.n)));
    }
    if !(-1.0..=1.0).contains(&p.rho) || p.noise_c < 0.0 || p.noise_d < 0.0 {
        return Err(Error::InvalidParameter("rho must lie in [-1, 1] and noise must be non-negative".into()));
    }
    let mut r = rng::rng(p.seed);
    let mut z = || -> f64 { rng::normal(&mut r) };
    let resid = (1.0 - p.rho * p.rho).sqrt();
    let mut values = DMatrix::zeros(p.n, 4);
    for i in 0..p.n {
        let a = z();
        let b = p.rho * a + resid * z();
        let c = a + p.noise_c * z();
        let d = b + p.noise_d * z();
        values[(i, 0)] = a;
        values[(i, 1)] = b;
        values[(i, 2)] = c;
        values[(i, 3)] = d;
    }
    Ok(DataMatrix::new(values, ["A", "B", "C", "D"].map(String::from).to_vec())?.scaled())
}

/// Gaussian data with categorical factors.
///
/// Each factor gets `levels` categories assigned uniformly at random. With
/// `effect > 0` every (factor, level) pair shifts a random subset of columns,
/// and `latent` shared Gaussian components add correlation between columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub n: usize,
    pub m: usize,
    pub factor_levels: Vec<usize>,
    pub latent: usize,
    pub effect: f64,
    pub seed: u64,
}

pub fn make_gaussian(spec: &GaussianSpec) -> Result<DataMatrix> {
    if spec.n == 0 || spec.m == 0 {
        return Err(Error::InvalidShape(format!("{}×{}", spec.n, spec.m)));
    }
    if spec.factor_levels.contains(&0) {
        return Err(Error::InvalidParameter("factor needs at least one level".into()));
    }
    let (n, m) = (spec.n, spec.m);
    let mut r = rng::rng(spec.seed);
    let mut values = DMatrix::from_fn(n, m, |_, _| rng::normal(&mut r));
    for _ in 0..spec.latent {
        let loadings: Vec<f64> = (0..m).map(|_| rng::normal(&mut r)).collect();
        for i in 0..n {
            let s: f64 = rng::normal(&mut r);
            for (j, l) in loadings.iter().enumerate() {
                values[(i, j)] += s * l;
            }
        }
    }
    let mut side = Vec::with_capacity(spec.factor_levels.len());
    for (f, &levels) in spec.factor_levels.iter().enumerate() {
        let assignment: Vec<usize> = (0..n).map(|_| r.random_range(0..levels)).collect();
        if spec.effect > 0.0 {
            for level in 0..levels {
                let shift: Vec<f64> =
                    (0..m).map(|_| if r.random_bool(0.3) { spec.effect * rng::normal(&mut r) } else { 0.0 }).collect();
                for i in (0..n).filter(|&i| assignment[i] == level) {
                    for (j, s) in shift.iter().enumerate() {
                        values[(i, j)] += s;
                    }
                }
            }
        }
        side.push((format!("F{}", f + 1), assignment.into_iter().map(|a| format!("L{}", a + 1)).collect()));
    }
    let mut data = DataMatrix::new(values, (1..=m).map(|j| format!("X{j}")).collect())?;
    for (name, values) in side {
        data = data.with_side_column(name, values)?;
    }
    Ok(data.scaled())
}

/// Removes `delta_n` random rows, adds `N(0, σ²)` noise and rescales.
///
/// With `sigma == 0` and `delta_n == 0` the input is returned unchanged.
pub fn perturb(data: &DataMatrix, sigma: f64, delta_n: usize, seed: u64) -> Result<DataMatrix> {
    let n = data.n_rows();
    if delta_n >= n {
        return Err(Error::InvalidParameter(format!("cannot remove {delta_n} of {n} rows")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma must be a non-negative number, got {sigma}")));
    }
    if sigma == 0.0 && delta_n == 0 {
        return Ok(data.clone());
    }
    let keep = kept_rows(n, delta_n, seed);
    let mut out = data.select_rows(&keep)?;
    if sigma > 0.0 {
        let mut r = rng::stream_rng(seed, 1);
        let mut values = out.values().clone();
        // Column-major draw order, same base noise for every sigma.
        for v in values.iter_mut() {
            let z: f64 = rng::normal(&mut r);
            *v += sigma * z;
        }
        out = out.with_values(values)?;
    }
    Ok(out.scaled())
}

/// Rows surviving the removal of `delta_n` random rows, in original order.
pub fn kept_rows(n: usize, delta_n: usize, seed: u64) -> Vec<usize> {
    let mut r = rng::stream_rng(seed, 0);
    let removed: HashSet<usize> = sample_indices(&mut r, n, delta_n).into_iter().collect();
    (0..n).filter(|i| !removed.contains(i)).collect()
}
