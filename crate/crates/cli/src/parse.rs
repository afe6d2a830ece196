//! Command-line notations for rows, columns and partitions.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};

use tilexplore_core::request::{ColSpec, ColumnRef, HypothesisSpec, Levels, PartitionSpec, RowSpec};

use crate::RowArgs;

/// `1-3,7` to 0-based `[0, 1, 2, 6]`.
pub fn one_based_rows(text: &str) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = part.split_once('-').unwrap_or((part, part));
        let a: usize = a.trim().parse().with_context(|| format!("bad row `{part}`"))?;
        let b: usize = b.trim().parse().with_context(|| format!("bad row `{part}`"))?;
        if a == 0 || b < a {
            bail!("bad row range `{part}`: rows are 1-based");
        }
        rows.extend(a - 1..b);
    }
    if rows.is_empty() {
        bail!("no rows given");
    }
    Ok(rows)
}

pub fn row_spec(args: &RowArgs) -> Result<Option<RowSpec>> {
    if !args.filter.is_empty() {
        let mut filter = BTreeMap::new();
        for f in &args.filter {
            let (col, levels) = f.split_once('=').with_context(|| format!("`{f}` is not COLUMN=LEVELS"))?;
            filter.insert(col.to_string(), Levels::Many(levels.split(',').map(String::from).collect()));
        }
        return Ok(Some(RowSpec::Where { filter }));
    }
    match args.rows.as_deref() {
        None => Ok(None),
        Some("all") => Ok(Some(RowSpec::Keyword("all".into()))),
        Some(text) => Ok(Some(RowSpec::Indices(one_based_rows(text)?))),
    }
}

pub fn required_rows(args: &RowArgs) -> Result<RowSpec> {
    row_spec(args)?.context("give --rows or --where")
}

/// A column name, or a 1-based index.
fn column(token: &str) -> Result<ColumnRef> {
    let token = token.trim();
    match token.parse::<usize>() {
        Ok(0) => bail!("column indices are 1-based"),
        Ok(k) => Ok(ColumnRef::Index(k - 1)),
        Err(_) => Ok(ColumnRef::Name(token.to_string())),
    }
}

fn columns(text: &str) -> Result<Vec<ColumnRef>> {
    text.split(',').filter(|t| !t.trim().is_empty()).map(column).collect()
}

pub fn hypothesis(rows: &RowArgs, cols: Option<&str>, partition: Option<&str>) -> Result<HypothesisSpec> {
    let cols = match cols {
        None => None,
        Some("all") => Some(ColSpec::Keyword("all".into())),
        Some(text) => Some(ColSpec::List(columns(text)?)),
    };
    let partition = match partition {
        None => PartitionSpec::default(),
        Some(k @ ("singletons" | "single")) => PartitionSpec::Keyword(k.into()),
        Some(text) => PartitionSpec::Blocks(text.split(';').map(columns).collect::<Result<_>>()?),
    };
    Ok(HypothesisSpec { rows: row_spec(rows)?.unwrap_or_default(), cols, partition })
}
