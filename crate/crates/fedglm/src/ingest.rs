//! Dataset handling: CSV parsing, design-matrix construction with dummy
//! coding, row partitioning across nodes, and synthetic data generation.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Column kind: numeric, or categorical with a fixed level order.
/// The first level of a categorical column is the reference level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical { levels: Vec<String> },
}

/// Maps dataset columns to a response, ordered predictors, and column kinds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub response: String,
    pub predictors: Vec<String>,
    pub columns: HashMap<String, ColumnKind>,
}

impl DatasetSchema {
    pub fn new(
        response: impl Into<String>,
        predictors: Vec<String>,
        columns: HashMap<String, ColumnKind>,
    ) -> Result<Self> {
        let schema = Self {
            response: response.into(),
            predictors,
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: DatasetSchema = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad schema file {}: {}", path.display(), e)))?;
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.predictors.contains(&self.response) {
            return Err(Error::Config(format!(
                "response '{}' listed among predictors",
                self.response
            )));
        }
        for name in self.predictors.iter().chain(std::iter::once(&self.response)) {
            match self.columns.get(name) {
                None => {
                    return Err(Error::Config(format!(
                        "column '{}' has no declared kind",
                        name
                    )))
                }
                Some(ColumnKind::Categorical { levels }) => {
                    if levels.is_empty() {
                        return Err(Error::Config(format!(
                            "categorical column '{}' has no levels",
                            name
                        )));
                    }
                    let mut seen = std::collections::HashSet::new();
                    if !levels.iter().all(|l| seen.insert(l)) {
                        return Err(Error::Config(format!(
                            "categorical column '{}' has duplicate levels",
                            name
                        )));
                    }
                }
                Some(ColumnKind::Numeric) => {}
            }
        }
        Ok(())
    }

    fn kind(&self, name: &str) -> &ColumnKind {
        &self.columns[name]
    }
}

/// Infers a schema by scanning the file: a column is numeric when every
/// value parses as f64, otherwise categorical with levels in order of first
/// appearance (the first value seen becomes the reference level).
pub fn infer_schema(path: &Path, response: &str, predictors: &[String]) -> Result<DatasetSchema> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Config(format!("cannot read header of {}: {}", path.display(), e)))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let wanted: Vec<String> = predictors
        .iter()
        .cloned()
        .chain(std::iter::once(response.to_string()))
        .collect();
    let mut index = HashMap::new();
    for name in &wanted {
        let pos = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.clone()))?;
        index.insert(name.clone(), pos);
    }
    let mut numeric: HashMap<String, bool> = wanted.iter().map(|n| (n.clone(), true)).collect();
    let mut levels: HashMap<String, Vec<String>> =
        wanted.iter().map(|n| (n.clone(), Vec::new())).collect();
    let mut n_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            row: n_rows,
            col: "<record>".into(),
            what: e.to_string(),
        })?;
        for name in &wanted {
            let raw = record.get(index[name]).unwrap_or("").trim();
            if raw.parse::<f64>().is_err() {
                numeric.insert(name.clone(), false);
            }
            let lv = levels.get_mut(name).unwrap();
            if !lv.iter().any(|l| l == raw) {
                lv.push(raw.to_string());
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    let columns = wanted
        .iter()
        .map(|name| {
            let kind = if numeric[name] {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical {
                    levels: levels.remove(name).unwrap(),
                }
            };
            (name.clone(), kind)
        })
        .collect();
    DatasetSchema::new(response, predictors.to_vec(), columns)
}

/// A typed column pulled out of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

/// Parsed table: the schema's columns only, in schema order.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub n_rows: usize,
    pub columns: HashMap<String, Column>,
}

/// Reads a CSV file (RFC-4180-style, header required) and types the schema's
/// columns. Numeric parse failures report the offending row and column.
pub fn parse_csv(path: &Path, schema: &DatasetSchema) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Config(format!("cannot read header of {}: {}", path.display(), e)))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let wanted: Vec<&String> = schema
        .predictors
        .iter()
        .chain(std::iter::once(&schema.response))
        .collect();
    let mut index = HashMap::new();
    for name in &wanted {
        let pos = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::MissingColumn((*name).clone()))?;
        index.insert((*name).clone(), pos);
    }

    let mut columns: HashMap<String, Column> = wanted
        .iter()
        .map(|name| {
            let col = match schema.kind(name) {
                ColumnKind::Numeric => Column::Numeric(Vec::new()),
                ColumnKind::Categorical { .. } => Column::Categorical(Vec::new()),
            };
            ((*name).clone(), col)
        })
        .collect();

    let mut n_rows = 0;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: row_idx,
            col: "<record>".into(),
            what: e.to_string(),
        })?;
        for name in &wanted {
            let raw = record.get(index[*name]).unwrap_or("").trim();
            match columns.get_mut(*name).unwrap() {
                Column::Numeric(values) => {
                    let v: f64 = raw.parse().map_err(|_| Error::Parse {
                        row: row_idx,
                        col: (*name).clone(),
                        what: format!("'{}' is not numeric", raw),
                    })?;
                    values.push(v);
                }
                Column::Categorical(values) => values.push(raw.to_string()),
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::EmptyFile(path.display().to_string()));
    }
    Ok(RawTable { n_rows, columns })
}

/// A design matrix with its response and generated column names.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub names: Vec<String>,
}

/// Builds the design matrix: optional leading all-ones intercept, numeric
/// predictors in schema order, then L−1 indicator columns per categorical
/// predictor named `col.level` (reference level omitted). A categorical
/// response must have exactly two levels and maps to {0, 1} with the first
/// level as 0.
pub fn build_design(table: &RawTable, schema: &DatasetSchema, intercept: bool) -> Result<Design> {
    let n = table.n_rows;

    let mut names = Vec::new();
    if intercept {
        names.push("(Intercept)".to_string());
    }
    // numeric predictors first, then dummy blocks, both in schema order
    let mut numeric_cols: Vec<&str> = Vec::new();
    let mut categorical_cols: Vec<(&str, &[String])> = Vec::new();
    for name in &schema.predictors {
        match schema.kind(name) {
            ColumnKind::Numeric => {
                numeric_cols.push(name);
                names.push(name.clone());
            }
            ColumnKind::Categorical { levels } => categorical_cols.push((name, levels)),
        }
    }
    for (name, levels) in &categorical_cols {
        for level in &levels[1..] {
            names.push(format!("{}.{}", name, level));
        }
    }

    let p = names.len();
    let mut values = vec![0.0; n * p];
    let mut col = 0;
    if intercept {
        for i in 0..n {
            values[i * p] = 1.0;
        }
        col += 1;
    }
    for name in &numeric_cols {
        let Column::Numeric(data) = &table.columns[*name] else {
            return Err(Error::Config(format!("column '{}' is not numeric", name)));
        };
        for i in 0..n {
            values[i * p + col] = data[i];
        }
        col += 1;
    }
    for (name, levels) in &categorical_cols {
        let Column::Categorical(data) = &table.columns[*name] else {
            return Err(Error::Config(format!("column '{}' is not categorical", name)));
        };
        let level_index: HashMap<&str, usize> = levels
            .iter()
            .enumerate()
            .map(|(k, l)| (l.as_str(), k))
            .collect();
        for i in 0..n {
            let k = *level_index
                .get(data[i].as_str())
                .ok_or_else(|| Error::UnknownLevel {
                    row: i,
                    col: name.to_string(),
                    value: data[i].clone(),
                })?;
            if k > 0 {
                values[i * p + col + (k - 1)] = 1.0;
            }
        }
        col += levels.len() - 1;
    }

    let y = match (&table.columns[&schema.response], schema.kind(&schema.response)) {
        (Column::Numeric(data), ColumnKind::Numeric) => data.clone(),
        (Column::Categorical(data), ColumnKind::Categorical { levels }) => {
            if levels.len() != 2 {
                return Err(Error::Config(format!(
                    "binary response '{}' needs exactly two levels, found {}",
                    schema.response,
                    levels.len()
                )));
            }
            let mut y = Vec::with_capacity(n);
            for (i, v) in data.iter().enumerate() {
                if v == &levels[0] {
                    y.push(0.0);
                } else if v == &levels[1] {
                    y.push(1.0);
                } else {
                    return Err(Error::UnknownLevel {
                        row: i,
                        col: schema.response.clone(),
                        value: v.clone(),
                    });
                }
            }
            y
        }
        _ => {
            return Err(Error::Config(format!(
                "response '{}' kind does not match the parsed column",
                schema.response
            )))
        }
    };

    Ok(Design {
        x: DenseMatrix::new(n, p, values)?,
        y,
        names,
    })
}

/// Splits `n_rows` into `n_nodes` contiguous ranges: the first n_nodes−1 get
/// floor(n/n_nodes) rows each, the last takes the remainder.
pub fn partition_rows(n_rows: usize, n_nodes: usize) -> Result<Vec<Range<usize>>> {
    if n_nodes < 1 || n_nodes > n_rows {
        return Err(Error::InvalidPartition { n_rows, n_nodes });
    }
    let base = n_rows / n_nodes;
    let mut ranges = Vec::with_capacity(n_nodes);
    let mut start = 0;
    for i in 0..n_nodes {
        let end = if i + 1 == n_nodes { n_rows } else { start + base };
        ranges.push(start..end);
        start = end;
    }
    Ok(ranges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Y = Xβ + ε with Gaussian noise.
    Linear,
    /// Y ~ Bernoulli(logit⁻¹(Xβ)).
    Binomial,
}

/// Synthetic dataset recipe. The same spec always produces the same bytes:
/// the generator is ChaCha12 seeded with `seed`, normal deviates come from
/// the `rand_distr` ziggurat sampler, and values are drawn row by row
/// (predictors first, then the response draw).
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    /// Applied to every coefficient.
    pub beta_true: f64,
    /// Standard deviation of the Gaussian perturbation (linear kind only).
    pub noise: f64,
    pub seed: u64,
    pub kind: SyntheticKind,
}

/// Generates `(X, Y)` per the spec, deterministically under the seed.
/// Predictor entries are standard normal.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<(DenseMatrix, Vec<f64>)> {
    if spec.n < 1 || spec.p < 1 {
        return Err(Error::Config("synthetic data needs n >= 1 and p >= 1".into()));
    }
    if spec.noise < 0.0 {
        return Err(Error::Config("noise must be >= 0".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(spec.n * spec.p);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut eta = 0.0;
        for _ in 0..spec.p {
            let v: f64 = rng.sample(StandardNormal);
            values.push(v);
            eta += spec.beta_true * v;
        }
        match spec.kind {
            SyntheticKind::Linear => {
                let eps: f64 = rng.sample(StandardNormal);
                y.push(eta + spec.noise * eps);
            }
            SyntheticKind::Binomial => {
                let prob = 1.0 / (1.0 + (-eta).exp());
                y.push(if rng.gen::<f64>() < prob { 1.0 } else { 0.0 });
            }
        }
    }
    Ok((DenseMatrix::new(spec.n, spec.p, values)?, y))
}
