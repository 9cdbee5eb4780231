//! Split criteria over level-by-class contingency tables.
//!
//! The primary criterion sums, over every attribute level seen in the
//! partition, the fraction of that level's records falling in one
//! designated class cell:
//!
//! * diagonal mode uses the cell of the class aligned with the level
//!   (level `i` with class `i`), so an attribute whose levels map one-to-one
//!   onto the classes scores the number of nonempty levels;
//! * max-cell mode uses the row's largest cell.
//!
//! Gain ratio is provided as the reference criterion. It is undefined when
//! the partition holds a single attribute level.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{Dataset, Record};
use crate::schema::Schema;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("diagonal scoring needs {classes} levels on `{attribute}`, found {levels}")]
    ArityMismatch {
        attribute: String,
        levels: usize,
        classes: usize,
    },
    #[error("contingency table for `{0}` is empty")]
    EmptyTable(String),
    #[error("no attributes to rank")]
    NoAttributes,
    #[error("row {row}: no class label")]
    Unlabeled { row: usize },
    #[error("row {row}: no value for `{attribute}`")]
    MissingValue { row: usize, attribute: String },
    #[error("unknown criterion `{0}` (expected asmf, asmf-maxcell or gainratio)")]
    UnknownCriterion(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Criterion {
    #[default]
    AsmfDiagonal,
    AsmfMaxCell,
    GainRatio,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::AsmfDiagonal => "asmf",
            Criterion::AsmfMaxCell => "asmf-maxcell",
            Criterion::GainRatio => "gainratio",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "asmf" | "asmf-diagonal" | "diagonal" => Ok(Criterion::AsmfDiagonal),
            "asmf-maxcell" | "maxcell" => Ok(Criterion::AsmfMaxCell),
            "gainratio" | "gain-ratio" => Ok(Criterion::GainRatio),
            _ => Err(ScoreError::UnknownCriterion(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsmfMode {
    Diagonal,
    MaxCell,
}

/// Counts of one attribute's levels against the class levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    pub attribute: String,
    /// Indexed `[level][class]`.
    pub counts: Vec<Vec<usize>>,
    pub row_totals: Vec<usize>,
    pub grand_total: usize,
}

impl ContingencyTable {
    /// Builds a table from raw counts, deriving the totals.
    pub fn from_counts(attribute: impl Into<String>, counts: Vec<Vec<usize>>) -> Self {
        let row_totals: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let grand_total = row_totals.iter().sum();
        Self {
            attribute: attribute.into(),
            counts,
            row_totals,
            grand_total,
        }
    }

    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    pub fn classes(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn nonempty_rows(&self) -> usize {
        self.row_totals.iter().filter(|&&t| t > 0).count()
    }

    /// Per-class column totals.
    pub fn class_totals(&self) -> Vec<usize> {
        let mut totals = vec![0; self.classes()];
        for row in &self.counts {
            for (t, c) in totals.iter_mut().zip(row) {
                *t += c;
            }
        }
        totals
    }
}

/// Score of one attribute under one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionScore {
    pub attribute: String,
    /// Declaration index of the attribute in its schema.
    pub index: usize,
    pub criterion: Criterion,
    /// `NaN` when `defined` is false.
    pub value: f64,
    pub defined: bool,
}

/// Cross-tabulates `attribute` against the class over `records`.
pub fn contingency<'a, I>(
    schema: &Schema,
    records: I,
    attribute: usize,
) -> Result<ContingencyTable, ScoreError>
where
    I: IntoIterator<Item = &'a Record>,
{
    let attr = schema.attribute(attribute);
    let mut counts = vec![vec![0usize; schema.class_arity()]; attr.arity()];
    for r in records {
        let label = r.label.ok_or(ScoreError::Unlabeled { row: r.row_id })?;
        let level = r.value(attribute).ok_or_else(|| ScoreError::MissingValue {
            row: r.row_id,
            attribute: attr.name.clone(),
        })?;
        counts[level][label] += 1;
    }
    Ok(ContingencyTable::from_counts(attr.name.clone(), counts))
}

/// Contingency table of the named attribute over a whole dataset.
pub fn contingency_for(dataset: &Dataset, attribute: &str) -> Result<ContingencyTable, ScoreError> {
    let index = dataset
        .schema
        .attribute_index(attribute)
        .ok_or_else(|| ScoreError::UnknownAttribute(attribute.to_string()))?;
    contingency(&dataset.schema, &dataset.records, index)
}

/// Sum over nonempty rows of `cell / row_total`, where `cell` is the
/// diagonal or the row maximum depending on `mode`. Empty rows add nothing.
pub fn asmf(table: &ContingencyTable, mode: AsmfMode) -> Result<f64, ScoreError> {
    if mode == AsmfMode::Diagonal && table.levels() != table.classes() {
        return Err(ScoreError::ArityMismatch {
            attribute: table.attribute.clone(),
            levels: table.levels(),
            classes: table.classes(),
        });
    }
    if table.grand_total == 0 {
        return Err(ScoreError::EmptyTable(table.attribute.clone()));
    }
    let mut total = 0.0;
    for (i, (row, &row_total)) in table.counts.iter().zip(&table.row_totals).enumerate() {
        if row_total == 0 {
            continue;
        }
        let cell = match mode {
            AsmfMode::Diagonal => row[i],
            AsmfMode::MaxCell => row.iter().copied().max().unwrap_or(0),
        };
        total += cell as f64 / row_total as f64;
    }
    Ok(total)
}

/// Shannon entropy in bits of a count vector.
fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Information gain divided by split information, both in bits.
///
/// Returns `None` when the split information is zero, i.e. every record
/// shares one attribute level.
pub fn gain_ratio(table: &ContingencyTable) -> Result<Option<f64>, ScoreError> {
    if table.grand_total == 0 {
        return Err(ScoreError::EmptyTable(table.attribute.clone()));
    }
    let n = table.grand_total as f64;
    let split_info = entropy(&table.row_totals);
    if split_info == 0.0 {
        return Ok(None);
    }
    let conditional: f64 = table
        .counts
        .iter()
        .zip(&table.row_totals)
        .filter(|(_, &t)| t > 0)
        .map(|(row, &t)| t as f64 / n * entropy(row))
        .sum();
    let gain = entropy(&table.class_totals()) - conditional;
    Ok(Some(gain / split_info))
}

/// Scores one table under `criterion`.
pub fn score(
    table: &ContingencyTable,
    index: usize,
    criterion: Criterion,
) -> Result<CriterionScore, ScoreError> {
    let value = match criterion {
        Criterion::AsmfDiagonal => Some(asmf(table, AsmfMode::Diagonal)?),
        Criterion::AsmfMaxCell => Some(asmf(table, AsmfMode::MaxCell)?),
        Criterion::GainRatio => gain_ratio(table)?,
    };
    Ok(CriterionScore {
        attribute: table.attribute.clone(),
        index,
        criterion,
        value: value.unwrap_or(f64::NAN),
        defined: value.is_some(),
    })
}

/// Descending by value; ties by declaration index; undefined scores last.
pub(crate) fn score_order(a: &CriterionScore, b: &CriterionScore) -> Ordering {
    match (a.defined, b.defined) {
        (true, true) => b.value.total_cmp(&a.value).then(a.index.cmp(&b.index)),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.index.cmp(&b.index),
    }
}

/// Scores each listed attribute (by declaration index) over `records` and
/// sorts best first.
pub fn rank_attributes(
    schema: &Schema,
    records: &[&Record],
    attributes: &[usize],
    criterion: Criterion,
) -> Result<Vec<CriterionScore>, ScoreError> {
    if attributes.is_empty() {
        return Err(ScoreError::NoAttributes);
    }
    let mut scores = attributes
        .iter()
        .map(|&a| {
            let table = contingency(schema, records.iter().copied(), a)?;
            score(&table, a, criterion)
        })
        .collect::<Result<Vec<_>, _>>()?;
    scores.sort_by(score_order);
    Ok(scores)
}

/// Ranks every attribute of the dataset.
pub fn rank_dataset(dataset: &Dataset, criterion: Criterion) -> Result<Vec<CriterionScore>, ScoreError> {
    let records: Vec<&Record> = dataset.records.iter().collect();
    let all: Vec<usize> = (0..dataset.schema.attributes().len()).collect();
    rank_attributes(&dataset.schema, &records, &all, criterion)
}
