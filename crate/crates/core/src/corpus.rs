//! The bundled 40-record personnel corpus and its schema.

use crate::dataset::{ingest_csv, Dataset, IngestOptions};
use crate::schema::{parse_schema, Schema};

pub const SCHEMA: &str = include_str!("../fixtures/schema.txt");
pub const TRAINING_CSV: &str = include_str!("../fixtures/training.csv");

pub fn schema() -> Schema {
    parse_schema(SCHEMA).expect("bundled schema is valid")
}

pub fn training_set() -> Dataset {
    ingest_csv(&schema(), TRAINING_CSV, IngestOptions::training())
        .expect("bundled corpus is valid")
        .dataset
}
