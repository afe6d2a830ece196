//! Turning a brushed set of points into a tile.
//!
//! A column joins the tile when the standard deviation of the selected points
//! is less than `tau` times the standard deviation of all points.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::DataMatrix;
use crate::tiling::Tile;

pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSelection {
    rows: Vec<usize>,
    pub source: String,
}

impl PointSelection {
    pub fn new(rows: impl Into<Vec<usize>>, source: impl Into<String>) -> Result<Self> {
        let mut rows = rows.into();
        rows.sort_unstable();
        rows.dedup();
        if rows.is_empty() {
            return Err(Error::InvalidSelection("empty selection".into()));
        }
        Ok(PointSelection { rows, source: source.into() })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.rows.last() {
            Some(&last) if last >= n => Err(Error::InvalidSelection(format!("row {last} out of range for {n} rows"))),
            _ => Ok(()),
        }
    }
}

/// `f64` that serialises infinity as `null`.
mod ratio_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRatio {
    pub index: usize,
    pub name: String,
    pub selection_std: f64,
    pub global_std: f64,
    /// `selection_std / global_std`; infinite (`null` in JSON) for a constant column.
    #[serde(with = "ratio_serde")]
    pub ratio: f64,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub tau: f64,
    pub selection_size: usize,
    pub columns: Vec<ColumnRatio>,
}

impl AttributeReport {
    pub fn chosen(&self) -> Vec<usize> {
        self.columns.iter().filter(|c| c.chosen).map(|c| c.index).collect()
    }
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (count, sum) = values.clone().fold((0usize, 0.0), |(c, s), v| (c + 1, s + v));
    let mean = sum / count as f64;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64).sqrt()
}

pub fn attribute_ratios(data: &DataMatrix, sel: &PointSelection, tau: f64) -> Result<AttributeReport> {
    sel.check(data.n_rows())?;
    if sel.len() < 2 {
        return Err(Error::SelectionTooSmall(sel.len()));
    }
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!("tau must be non-negative, got {tau}")));
    }
    let x = data.values();
    let columns = (0..data.n_cols())
        .map(|j| {
            let col = x.column(j);
            let global_std = population_std(col.iter().copied());
            let selection_std = population_std(sel.rows().iter().map(|&i| col[i]));
            let (ratio, chosen) = if global_std > 0.0 {
                let r = selection_std / global_std;
                (r, r < tau)
            } else {
                (f64::INFINITY, false)
            };
            ColumnRatio { index: j, name: data.col_names()[j].clone(), selection_std, global_std, ratio, chosen }
        })
        .collect();
    Ok(AttributeReport { tau, selection_size: sel.len(), columns })
}

/// The tile `(selected rows, columns with ratio < tau)` and the report behind it.
pub fn selection_to_tile(data: &DataMatrix, sel: &PointSelection, tau: f64) -> Result<(Tile, AttributeReport)> {
    let report = attribute_ratios(data, sel, tau)?;
    let cols = report.chosen();
    if cols.is_empty() {
        return Err(Error::EmptyTile { tau, report: Box::new(report) });
    }
    Ok((Tile::new(sel.rows().to_vec(), cols)?, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crosstab {
    pub column: String,
    /// Count per category; every category of the column appears, possibly with 0.
    pub counts: BTreeMap<String, usize>,
}

pub fn crosstab(data: &DataMatrix, column: &str, sel: &PointSelection) -> Result<Crosstab> {
    sel.check(data.n_rows())?;
    let side = match data.side_col(column) {
        Some(c) => c,
        None if data.col_index(column).is_some() => {
            return Err(Error::InvalidParameter(format!("column `{column}` is numeric, not categorical")))
        }
        None => return Err(Error::UnknownColumn(column.to_string())),
    };
    let mut counts: BTreeMap<String, usize> = side.levels().into_iter().map(|l| (l, 0)).collect();
    for &i in sel.rows() {
        *counts.entry(side.values[i].clone()).or_default() += 1;
    }
    Ok(Crosstab { column: column.to_string(), counts })
}
