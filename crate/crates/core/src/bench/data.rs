//! CSV ingestion with column typing.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::space::{Dataset, Feature, FeatureDomain, FeatureSpace, Instance};

/// Declared type of a feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Numeric,
    Integer,
    /// Nominal; levels are the sorted distinct observed values.
    Categorical,
    /// Ordered levels, lowest first. Every observed value must be listed.
    Ordinal(Vec<String>),
}

/// Column typing for [`load_csv`]. Columns without an entry are inferred:
/// integer when every cell is an integral number, numeric when every cell
/// parses as a number, categorical otherwise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Typing {
    pub columns: BTreeMap<String, ColumnType>,
    /// Label mapped to 1 when the target column is not numeric. Defaults to
    /// the last label in sorted order.
    pub positive_class: Option<String>,
}

/// A parsed dataset with its target column.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset,
    pub target: Vec<f64>,
    pub target_name: String,
}

impl LoadedData {
    pub fn space(&self) -> &Arc<FeatureSpace> {
        self.data.space_arc()
    }
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<Option<f64>> {
    let t = cell.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Err(IrdError::Parse {
            row,
            column: column.to_string(),
            message: format!("non-finite value `{t}`"),
        }),
        Err(_) if t.eq_ignore_ascii_case("nan") || t.is_empty() => Err(IrdError::Parse {
            row,
            column: column.to_string(),
            message: format!("missing value `{t}`"),
        }),
        Err(_) => Ok(None),
    }
}

struct RawTable {
    header: Vec<String>,
    cells: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut cells = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(IrdError::Parse {
                row: i + 1,
                column: String::new(),
                message: format!("{} cells for {} columns", record.len(), header.len()),
            });
        }
        cells.push(record.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, cells })
}

fn column_domain(
    table: &RawTable,
    c: usize,
    declared: Option<&ColumnType>,
) -> Result<FeatureDomain> {
    let name = &table.header[c];
    let column: Vec<&str> = table.cells.iter().map(|r| r[c].as_str()).collect();
    if column.is_empty() {
        return Err(IrdError::Config(format!("column `{name}` has no rows")));
    }
    let numbers = || -> Result<Option<Vec<f64>>> {
        let mut out = Vec::with_capacity(column.len());
        for (i, cell) in column.iter().enumerate() {
            match parse_number(cell, i + 1, name)? {
                Some(v) => out.push(v),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    };
    let range = |values: &[f64]| {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let levels = || -> Vec<String> {
        let set: BTreeSet<&str> = column.iter().copied().collect();
        set.into_iter().map(str::to_string).collect()
    };
    match declared {
        Some(ColumnType::Numeric) | Some(ColumnType::Integer) => {
            let integer = matches!(declared, Some(ColumnType::Integer));
            let mut values = Vec::with_capacity(column.len());
            for (i, cell) in column.iter().enumerate() {
                let v = parse_number(cell, i + 1, name)?.ok_or_else(|| IrdError::Parse {
                    row: i + 1,
                    column: name.clone(),
                    message: format!("`{cell}` is not a number"),
                })?;
                if integer && v.fract() != 0.0 {
                    return Err(IrdError::Parse {
                        row: i + 1,
                        column: name.clone(),
                        message: format!("`{cell}` is not an integer"),
                    });
                }
                values.push(v);
            }
            let (lo, hi) = range(&values);
            Ok(if integer {
                FeatureDomain::integer(lo, hi)
            } else {
                FeatureDomain::numeric(lo, hi)
            })
        }
        Some(ColumnType::Categorical) => Ok(FeatureDomain::categorical(levels())),
        Some(ColumnType::Ordinal(order)) => {
            for (i, cell) in column.iter().enumerate() {
                if !order.iter().any(|l| l == cell) {
                    return Err(IrdError::Parse {
                        row: i + 1,
                        column: name.clone(),
                        message: format!("`{cell}` is not a declared ordinal level"),
                    });
                }
            }
            Ok(FeatureDomain::ordinal(order.clone()))
        }
        None => match numbers()? {
            Some(values) => {
                let (lo, hi) = range(&values);
                if values.iter().all(|v| v.fract() == 0.0) {
                    Ok(FeatureDomain::integer(lo, hi))
                } else {
                    Ok(FeatureDomain::numeric(lo, hi))
                }
            }
            None => Ok(FeatureDomain::categorical(levels())),
        },
    }
}

fn encode_cell(space: &FeatureSpace, j: usize, cell: &str, row: usize) -> Result<f64> {
    match space.domain(j) {
        FeatureDomain::Numeric { .. } => parse_number(cell, row, &space.feature(j).name)?
            .ok_or_else(|| IrdError::Parse {
                row,
                column: space.feature(j).name.clone(),
                message: format!("`{cell}` is not a number"),
            }),
        FeatureDomain::Categorical { .. } => Ok(space.level_index(j, cell.trim())? as f64),
    }
}

/// Loads a CSV with a header row. Numeric domains span the observed values;
/// row order is kept. Cell errors carry their 1-based data row.
pub fn load_csv(path: impl AsRef<Path>, target: &str, typing: &Typing) -> Result<LoadedData> {
    let table = read_table(path.as_ref())?;
    let t = table
        .header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| IrdError::Config(format!("target column `{target}` not found")))?;
    for name in typing.columns.keys() {
        if !table.header.contains(name) {
            return Err(IrdError::Config(format!("typed column `{name}` not found")));
        }
    }
    let mut features = Vec::new();
    let mut columns = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        if c == t {
            continue;
        }
        features.push(Feature::new(
            name.clone(),
            column_domain(&table, c, typing.columns.get(name))?,
        ));
        columns.push(c);
    }
    let space = Arc::new(FeatureSpace::new(features)?);

    let mut rows = Vec::with_capacity(table.cells.len());
    for (i, record) in table.cells.iter().enumerate() {
        let values = columns
            .iter()
            .enumerate()
            .map(|(j, &c)| encode_cell(&space, j, &record[c], i + 1))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(Instance::new(values));
    }
    let target_values = parse_target(&table, t, typing)?;
    Ok(LoadedData {
        data: Dataset::new(space, rows)?,
        target: target_values,
        target_name: target.to_string(),
    })
}

fn parse_target(table: &RawTable, t: usize, typing: &Typing) -> Result<Vec<f64>> {
    let name = &table.header[t];
    let mut numeric = Vec::with_capacity(table.cells.len());
    for (i, r) in table.cells.iter().enumerate() {
        match parse_number(&r[t], i + 1, name)? {
            Some(v) => numeric.push(v),
            None => break,
        }
    }
    if numeric.len() == table.cells.len() && typing.positive_class.is_none() {
        return Ok(numeric);
    }
    let labels: BTreeSet<&str> = table.cells.iter().map(|r| r[t].as_str()).collect();
    let positive = match &typing.positive_class {
        Some(p) => {
            if !labels.contains(p.as_str()) {
                return Err(IrdError::Config(format!(
                    "positive class `{p}` does not occur in `{name}`"
                )));
            }
            p.clone()
        }
        None => labels
            .iter()
            .next_back()
            .map(|s| s.to_string())
            .unwrap_or_default(),
    };
    Ok(table
        .cells
        .iter()
        .map(|r| if r[t] == positive { 1.0 } else { 0.0 })
        .collect())
}

/// Reads instances from a CSV whose header names the features of `space`;
/// extra columns (such as the target) are ignored. Unknown levels and values
/// outside the feature domains are domain errors.
pub fn load_points(path: impl AsRef<Path>, space: &FeatureSpace) -> Result<Vec<Instance>> {
    let table = read_table(path.as_ref())?;
    let mut columns = Vec::with_capacity(space.len());
    for f in space.features() {
        let c = table
            .header
            .iter()
            .position(|h| *h == f.name)
            .ok_or_else(|| IrdError::Config(format!("point file lacks column `{}`", f.name)))?;
        columns.push(c);
    }
    table
        .cells
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let values = columns
                .iter()
                .enumerate()
                .map(|(j, &c)| encode_cell(space, j, &record[c], i + 1))
                .collect::<Result<Vec<f64>>>()?;
            Instance::validated(space, values)
        })
        .collect()
}
