//! Records, datasets and CSV ingestion.

use std::collections::HashSet;

use thiserror::Error;

use crate::schema::{fold, Schema, SchemaError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("csv input has no header row")]
    NoHeader,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` appears twice")]
    DuplicateColumn(String),
    #[error("class column `{0}` is required for training but absent")]
    MissingClassColumn(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: missing value")]
    MissingCell { row: usize, column: String },
    #[error("row {row}, column {column}: unknown level `{value}`")]
    UnknownLevel {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column}: {source}")]
    Binning {
        row: usize,
        column: String,
        source: SchemaError,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
}

impl IngestError {
    fn is_row_level(&self) -> bool {
        matches!(
            self,
            IngestError::FieldCount { .. }
                | IngestError::MissingCell { .. }
                | IngestError::UnknownLevel { .. }
                | IngestError::Binning { .. }
        )
    }
}

/// One tuple: a level index per attribute (in schema order) and an
/// optional class index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Record {
    pub values: Vec<Option<usize>>,
    pub label: Option<usize>,
    /// 1-based position of the data row in its source.
    pub row_id: usize,
}

impl Record {
    pub fn new(values: Vec<usize>, label: Option<usize>, row_id: usize) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
            label,
            row_id,
        }
    }

    pub fn value(&self, attribute: usize) -> Option<usize> {
        self.values.get(attribute).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Drop malformed rows instead of aborting.
    pub skip_invalid: bool,
    /// The class column must be present and filled.
    pub require_label: bool,
}

impl IngestOptions {
    pub fn training() -> Self {
        Self {
            skip_invalid: false,
            require_label: true,
        }
    }

    pub fn prediction() -> Self {
        Self {
            skip_invalid: false,
            require_label: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub dataset: Dataset,
    /// Rows dropped under `skip_invalid`, with the reason for each.
    pub skipped: Vec<IngestError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    Training,
    Prediction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub row_id: Option<usize>,
    pub reason: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.row_id {
            Some(row) => write!(f, "row {row}: {}", self.reason),
            None => f.write_str(&self.reason),
        }
    }
}

enum Column {
    Attribute(usize),
    Class,
}

impl Dataset {
    pub fn new(schema: Schema, records: Vec<Record>) -> Self {
        Self { schema, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record count per class level.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.class_arity()];
        for label in self.records.iter().filter_map(|r| r.label) {
            counts[label] += 1;
        }
        counts
    }

    /// Checks every record invariant; an empty result means the dataset is
    /// usable in the given mode.
    pub fn validate(&self, mode: ValidationMode) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.records.is_empty() {
            out.push(Violation {
                row_id: None,
                reason: "no records".into(),
            });
            return out;
        }
        let attrs = self.schema.attributes();
        for r in &self.records {
            let mut flag = |reason: String| {
                out.push(Violation {
                    row_id: Some(r.row_id),
                    reason,
                })
            };
            if r.values.len() != attrs.len() {
                flag(format!(
                    "has {} attribute slots, schema declares {}",
                    r.values.len(),
                    attrs.len()
                ));
                continue;
            }
            for (attr, value) in attrs.iter().zip(&r.values) {
                match value {
                    Some(v) if *v >= attr.arity() => flag(format!(
                        "level index {v} out of range for {} ({} levels)",
                        attr.name,
                        attr.arity()
                    )),
                    None if mode == ValidationMode::Training => {
                        flag(format!("missing value for {}", attr.name))
                    }
                    _ => {}
                }
            }
            match r.label {
                Some(l) if l >= self.schema.class_arity() => flag(format!(
                    "class index {l} out of range ({} levels)",
                    self.schema.class_arity()
                )),
                None if mode == ValidationMode::Training => flag("missing class label".into()),
                _ => {}
            }
        }
        out
    }

    /// Writes the dataset in canonical case. Class cells use numeric
    /// aliases when the schema declares them.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<&str> = self
            .schema
            .attributes()
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        let labelled = self.records.iter().any(|r| r.label.is_some());
        if labelled {
            header.push(self.schema.class_name());
        }
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.records {
            let mut cells: Vec<String> = self
                .schema
                .attributes()
                .iter()
                .zip(&r.values)
                .map(|(a, v)| v.map(|v| a.levels[v].clone()).unwrap_or_default())
                .collect();
            if labelled {
                cells.push(r.label.map(|l| self.schema.class_cell(l)).unwrap_or_default());
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parses CSV text against a schema.
///
/// The header names a subset of the schema's attributes plus, optionally,
/// the class column. Cells are level labels (any case) or raw scores for
/// attributes that declare bins. Attributes absent from the header are left
/// empty on every record.
pub fn ingest_csv(schema: &Schema, text: &str, opts: IngestOptions) -> Result<Ingested, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(h) => h.map_err(|e| IngestError::Csv(e.to_string()))?,
        None => return Err(IngestError::NoHeader),
    };
    let mut columns = Vec::with_capacity(header.len());
    let mut seen = HashSet::new();
    for name in header.iter() {
        if !seen.insert(fold(name)) {
            return Err(IngestError::DuplicateColumn(name.to_string()));
        }
        if schema.is_class_column(name) {
            columns.push(Column::Class);
        } else if let Some(i) = schema.attribute_index(name) {
            columns.push(Column::Attribute(i));
        } else {
            return Err(IngestError::UnknownColumn(name.to_string()));
        }
    }
    let has_class = columns.iter().any(|c| matches!(c, Column::Class));
    if opts.require_label && !has_class {
        return Err(IngestError::MissingClassColumn(schema.class_name().to_string()));
    }

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (n, row) in rows.enumerate() {
        let row_no = n + 1;
        let row = row.map_err(|e| IngestError::Csv(e.to_string()))?;
        match parse_row(schema, &header, &columns, &row, row_no, opts) {
            Ok(record) => records.push(record),
            Err(e) if opts.skip_invalid && e.is_row_level() => skipped.push(e),
            Err(e) => return Err(e),
        }
    }

    Ok(Ingested {
        dataset: Dataset::new(schema.clone(), records),
        skipped,
    })
}

fn parse_row(
    schema: &Schema,
    header: &csv::StringRecord,
    columns: &[Column],
    row: &csv::StringRecord,
    row_no: usize,
    opts: IngestOptions,
) -> Result<Record, IngestError> {
    if row.len() != columns.len() {
        return Err(IngestError::FieldCount {
            row: row_no,
            expected: columns.len(),
            found: row.len(),
        });
    }
    let mut values = vec![None; schema.attributes().len()];
    let mut label = None;
    for ((column, name), cell) in columns.iter().zip(header.iter()).zip(row.iter()) {
        let missing = || IngestError::MissingCell {
            row: row_no,
            column: name.to_string(),
        };
        match column {
            Column::Class => {
                if cell.is_empty() {
                    if opts.require_label {
                        return Err(missing());
                    }
                    continue;
                }
                label = Some(schema.class_index(cell).ok_or_else(|| {
                    IngestError::UnknownLevel {
                        row: row_no,
                        column: name.to_string(),
                        value: cell.to_string(),
                    }
                })?);
            }
            Column::Attribute(i) => {
                if cell.is_empty() {
                    return Err(missing());
                }
                let attr = schema.attribute(*i);
                let level = match attr.level_index(cell) {
                    Some(level) => level,
                    None => match cell.parse::<f64>() {
                        Ok(raw) if attr.has_bins() => {
                            attr.bin(raw).map_err(|source| IngestError::Binning {
                                row: row_no,
                                column: name.to_string(),
                                source,
                            })?
                        }
                        _ => {
                            return Err(IngestError::UnknownLevel {
                                row: row_no,
                                column: name.to_string(),
                                value: cell.to_string(),
                            })
                        }
                    },
                };
                values[*i] = Some(level);
            }
        }
    }
    Ok(Record {
        values,
        label,
        row_id: row_no,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn schema() -> Schema {
        corpus::schema()
    }

    #[test]
    fn bundled_corpus_has_forty_rows() {
        let data = corpus::training_set();
        assert_eq!(data.len(), 40);
        // Good=10, Average=16, Poor=14 counted from the P column.
        assert_eq!(data.class_counts(), vec![10, 16, 14]);
        assert!(data.validate(ValidationMode::Training).is_empty());
        assert_eq!(data.records[0].row_id, 1);
        assert_eq!(data.records[39].row_id, 40);
    }

    #[test]
    fn unknown_level_names_row_and_column() {
        let csv = "GPA,PS,DKA,CS,TE,RS,P\nGood,excellent,Good,Good,Good,Good,1\n";
        let err = ingest_csv(&schema(), csv, IngestOptions::training()).unwrap_err();
        assert_eq!(
            err,
            IngestError::UnknownLevel {
                row: 1,
                column: "PS".into(),
                value: "excellent".into()
            }
        );
        assert_eq!(err.to_string(), "row 1, column PS: unknown level `excellent`");
    }

    #[test]
    fn unknown_column_is_rejected() {
        let csv = "GPA,XP,P\nGood,Good,1\n";
        let err = ingest_csv(&schema(), csv, IngestOptions::training()).unwrap_err();
        assert_eq!(err, IngestError::UnknownColumn("XP".into()));
    }

    #[test]
    fn missing_cell_is_an_error_unless_skipped() {
        let csv = "GPA,PS,P\nGood,,1\nGood,Good,1\n";
        let err = ingest_csv(&schema(), csv, IngestOptions::training()).unwrap_err();
        assert_eq!(
            err,
            IngestError::MissingCell {
                row: 1,
                column: "PS".into()
            }
        );

        let opts = IngestOptions {
            skip_invalid: true,
            ..IngestOptions::training()
        };
        let got = ingest_csv(&schema(), csv, opts).unwrap();
        assert_eq!(got.dataset.len(), 1);
        assert_eq!(got.skipped.len(), 1);
        assert_eq!(got.dataset.records[0].row_id, 2);
    }

    #[test]
    fn class_column_required_for_training() {
        let csv = "GPA,PS\nGood,Good\n";
        let err = ingest_csv(&schema(), csv, IngestOptions::training()).unwrap_err();
        assert_eq!(err, IngestError::MissingClassColumn("P".into()));
        let got = ingest_csv(&schema(), csv, IngestOptions::prediction()).unwrap();
        assert_eq!(got.dataset.records[0].label, None);
        assert_eq!(got.dataset.records[0].value(2), None);
    }

    #[test]
    fn numeric_gpa_is_binned() {
        let csv = "GPA,P\n8.0,Good\n7.5,1\n6.9,average\n5,3\n";
        let data = ingest_csv(&schema(), csv, IngestOptions::training())
            .unwrap()
            .dataset;
        let gpa: Vec<_> = data.records.iter().map(|r| r.value(0).unwrap()).collect();
        assert_eq!(gpa, vec![0, 0, 1, 2]);
        let labels: Vec<_> = data.records.iter().map(|r| r.label.unwrap()).collect();
        assert_eq!(labels, vec![0, 0, 1, 2]);

        let err = ingest_csv(&schema(), "GPA,P\n4.9,1\n", IngestOptions::training()).unwrap_err();
        assert!(matches!(err, IngestError::Binning { row: 1, .. }));
        // Numbers are not accepted for attributes without bins.
        let err = ingest_csv(&schema(), "PS,P\n8.0,1\n", IngestOptions::training()).unwrap_err();
        assert!(matches!(err, IngestError::UnknownLevel { .. }));
    }

    #[test]
    fn mixed_case_labels_match_canonical() {
        let canonical = corpus::TRAINING_CSV;
        let mixed = canonical
            .lines()
            .enumerate()
            .map(|(i, line)| match i % 3 {
                0 if i > 0 => line.to_lowercase(),
                1 => line.to_uppercase(),
                _ => line.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\n");
        let a = ingest_csv(&schema(), canonical, IngestOptions::training()).unwrap();
        let b = ingest_csv(&schema(), &mixed, IngestOptions::training()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn export_reproduces_fixture() {
        let data = corpus::training_set();
        assert_eq!(data.to_csv(), corpus::TRAINING_CSV);
    }

    #[test]
    fn validate_reports_problems() {
        let mut data = corpus::training_set();
        data.records[3].label = None;
        let v = data.validate(ValidationMode::Training);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].row_id, Some(4));
        assert!(data.validate(ValidationMode::Prediction).is_empty());

        let empty = Dataset::new(schema(), Vec::new());
        let v = empty.validate(ValidationMode::Training);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].reason, "no records");

        let mut data = corpus::training_set();
        data.records[0].values[1] = Some(7);
        let v = data.validate(ValidationMode::Training);
        assert_eq!(v.len(), 1);
        assert!(v[0].reason.contains("PS"));
    }

    #[test]
    fn ragged_row() {
        let csv = "GPA,PS,P\nGood,Good\n";
        let err = ingest_csv(&schema(), csv, IngestOptions::training()).unwrap_err();
        assert_eq!(
            err,
            IngestError::FieldCount {
                row: 1,
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn empty_input_has_no_header() {
        assert_eq!(
            ingest_csv(&schema(), "", IngestOptions::training()).unwrap_err(),
            IngestError::NoHeader
        );
        let header_only = ingest_csv(&schema(), "GPA,P\n", IngestOptions::training()).unwrap();
        assert!(header_only.dataset.is_empty());
    }
}
