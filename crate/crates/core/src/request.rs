//! Human-friendly descriptions of row sets, hypotheses and selections, as
//! accepted by the CLI scripts and the HTTP API, and their resolution against
//! a dataset.
//!
//! ```json
//! {"rows": {"where": {"Region": "East", "Type": "Rural"}},
//!  "partition": [["LEFT.2009", "CDU.2009"], ["Income"]]}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::DataMatrix;
use crate::tiling::HypothesisTilings;

/// A column given by 0-based index or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    pub fn resolve(&self, data: &DataMatrix) -> Result<usize> {
        match self {
            ColumnRef::Index(j) if *j < data.n_cols() => Ok(*j),
            ColumnRef::Index(j) => Err(Error::UnknownColumn(format!("#{j}"))),
            ColumnRef::Name(name) => data.col_index(name).ok_or_else(|| Error::UnknownColumn(name.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    One(String),
    Many(Vec<String>),
}

impl Levels {
    fn contains(&self, v: &str) -> bool {
        match self {
            Levels::One(l) => l == v,
            Levels::Many(ls) => ls.iter().any(|l| l == v),
        }
    }
}

/// `"all"`, a list of 0-based row indices, or `{"where": {side column: level(s)}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RowSpec {
    Keyword(String),
    Indices(Vec<usize>),
    Where {
        #[serde(rename = "where")]
        filter: BTreeMap<String, Levels>,
    },
}

impl Default for RowSpec {
    fn default() -> Self {
        RowSpec::Keyword("all".into())
    }
}

impl RowSpec {
    /// Sorted, de-duplicated row indices.
    pub fn resolve(&self, data: &DataMatrix) -> Result<Vec<usize>> {
        let n = data.n_rows();
        let mut rows = match self {
            RowSpec::Keyword(k) if k == "all" => (0..n).collect(),
            RowSpec::Keyword(k) => return Err(Error::InvalidSelection(format!("unknown row keyword `{k}`"))),
            RowSpec::Indices(v) => {
                if let Some(&bad) = v.iter().find(|&&i| i >= n) {
                    return Err(Error::InvalidSelection(format!("row {bad} out of range for {n} rows")));
                }
                v.clone()
            }
            RowSpec::Where { filter } => {
                let mut keep = vec![true; n];
                for (col, levels) in filter {
                    let side = data.side_col(col).ok_or_else(|| Error::UnknownColumn(col.clone()))?;
                    for (k, v) in keep.iter_mut().zip(&side.values) {
                        *k &= levels.contains(v);
                    }
                }
                (0..n).filter(|&i| keep[i]).collect::<Vec<_>>()
            }
        };
        rows.sort_unstable();
        rows.dedup();
        if rows.is_empty() {
            return Err(Error::InvalidSelection("row set is empty".into()));
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColSpec {
    Keyword(String),
    List(Vec<ColumnRef>),
}

impl ColSpec {
    pub fn resolve(&self, data: &DataMatrix) -> Result<Vec<usize>> {
        match self {
            ColSpec::Keyword(k) if k == "all" => Ok((0..data.n_cols()).collect()),
            ColSpec::Keyword(k) => Err(Error::InvalidHypothesis(format!("unknown column keyword `{k}`"))),
            ColSpec::List(v) => v.iter().map(|c| c.resolve(data)).collect(),
        }
    }
}

/// `"singletons"`, `"single"` (one block holding every column) or explicit blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSpec {
    Keyword(String),
    Blocks(Vec<Vec<ColumnRef>>),
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec::Keyword("singletons".into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HypothesisSpec {
    #[serde(default)]
    pub rows: RowSpec,
    /// Defaults to the union of explicit blocks, or to all columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<ColSpec>,
    #[serde(default)]
    pub partition: PartitionSpec,
}

impl HypothesisSpec {
    pub fn unguided() -> Self {
        HypothesisSpec::default()
    }

    pub fn resolve(&self, data: &DataMatrix) -> Result<HypothesisTilings> {
        let rows = self.rows.resolve(data)?;
        let partition = match &self.partition {
            PartitionSpec::Blocks(blocks) => blocks
                .iter()
                .map(|b| b.iter().map(|c| c.resolve(data)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
            PartitionSpec::Keyword(_) => Vec::new(),
        };
        let cols = match (&self.cols, &self.partition) {
            (Some(c), _) => c.resolve(data)?,
            (None, PartitionSpec::Blocks(_)) => partition.iter().flatten().copied().collect(),
            (None, PartitionSpec::Keyword(_)) => (0..data.n_cols()).collect(),
        };
        let partition = match &self.partition {
            PartitionSpec::Blocks(_) => partition,
            PartitionSpec::Keyword(k) if k == "singletons" => cols.iter().map(|&c| vec![c]).collect(),
            PartitionSpec::Keyword(k) if k == "single" => vec![cols.clone()],
            PartitionSpec::Keyword(k) => {
                return Err(Error::InvalidHypothesis(format!("unknown partition keyword `{k}`")))
            }
        };
        let h = HypothesisTilings::new(rows, cols, partition)?;
        h.check_bounds(data.n_rows(), data.n_cols())?;
        Ok(h)
    }
}

/// Rows to turn into a tile, with an optional `tau` override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub rows: RowSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}
