//! Criterion tables and resubstitution evaluation.

use thiserror::Error;

use crate::criteria::{rank_dataset, Criterion, ScoreError};
use crate::dataset::{Dataset, ValidationMode};
use crate::tree::{DecisionTree, TreeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("no records")]
    NoRecords,
    #[error("{0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Half-up rounding to two decimals, used for display only.
pub fn round2(value: f64) -> f64 {
    (value * 100.0 + 0.5).floor() / 100.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub attribute: String,
    /// Full precision; `None` if the criterion is undefined for the attribute.
    pub value: Option<f64>,
    pub rounded: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub criterion: Criterion,
    /// Best first.
    pub rows: Vec<ReportRow>,
}

pub fn criterion_report(dataset: &Dataset, criterion: Criterion) -> Result<CriterionReport, ReportError> {
    check_training(dataset)?;
    let rows = rank_dataset(dataset, criterion)?
        .into_iter()
        .map(|s| {
            let value = s.defined.then_some(s.value);
            ReportRow {
                attribute: s.attribute,
                value,
                rounded: value.map(round2),
            }
        })
        .collect();
    Ok(CriterionReport { criterion, rows })
}

fn check_training(dataset: &Dataset) -> Result<(), ReportError> {
    if dataset.is_empty() {
        return Err(ReportError::NoRecords);
    }
    match dataset.validate(ValidationMode::Training).first() {
        Some(v) => Err(ReportError::InvalidRecord(v.to_string())),
        None => Ok(()),
    }
}

impl CriterionReport {
    pub fn to_text(&self) -> String {
        let name = self.criterion.name();
        let width = self
            .rows
            .iter()
            .map(|r| r.attribute.len())
            .chain(["attribute".len()])
            .max()
            .unwrap_or(0);
        let mut out = format!("{:<4}  {:<width$}  {:>12}  {}\n", "rank", "attribute", name, "full_precision");
        for (i, row) in self.rows.iter().enumerate() {
            let (rounded, full) = match (row.rounded, row.value) {
                (Some(r), Some(v)) => (format!("{r:.2}"), format!("{v}")),
                _ => ("undefined".to_string(), "undefined".to_string()),
            };
            out.push_str(&format!("{:<4}  {:<width$}  {:>12}  {}\n", i + 1, row.attribute, rounded, full));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,attribute,criterion,value,rounded\n");
        for (i, row) in self.rows.iter().enumerate() {
            let (value, rounded) = match (row.value, row.rounded) {
                (Some(v), Some(r)) => (format!("{v}"), format!("{r:.2}")),
                _ => (String::new(), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                row.attribute,
                self.criterion.name(),
                value,
                rounded
            ));
        }
        out
    }
}

/// Predicted-versus-actual counts over a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Resubstitution {
    /// Indexed `[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub correct: usize,
    pub total: usize,
}

impl Resubstitution {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    pub fn to_text(&self, class_levels: &[String]) -> String {
        let width = class_levels.iter().map(String::len).max().unwrap_or(0).max("actual".len());
        let mut out = format!("{:<width$}", "actual");
        for level in class_levels {
            out.push_str(&format!("  {level:>width$}"));
        }
        out.push('\n');
        for (level, row) in class_levels.iter().zip(&self.confusion) {
            out.push_str(&format!("{level:<width$}"));
            for c in row {
                out.push_str(&format!("  {c:>width$}"));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "accuracy={:.4} ({}/{})\n",
            self.accuracy(),
            self.correct,
            self.total
        ));
        out
    }
}

pub fn resubstitution_report(tree: &DecisionTree, dataset: &Dataset) -> Result<Resubstitution, ReportError> {
    check_training(dataset)?;
    let k = dataset.schema.class_arity();
    let mut confusion = vec![vec![0; k]; k];
    for r in &dataset.records {
        let predicted = tree.predict(r)?;
        confusion[r.label.expect("validated")][predicted] += 1;
    }
    let correct = (0..k).map(|i| confusion[i][i]).sum();
    Ok(Resubstitution {
        confusion,
        correct,
        total: dataset.len(),
    })
}
