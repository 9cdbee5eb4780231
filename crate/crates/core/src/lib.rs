//! Decision-tree induction over ordinal attributes.
//!
//! Trees are grown by repeatedly splitting on the attribute with the
//! highest row-ratio score (see [`criteria`]), pruned by a minimum record
//! support, and turned into human-readable rules.
//!
//! ```
//! use asmf_tree::{corpus, tree};
//!
//! let data = corpus::training_set();
//! let config = tree::TreeConfig::default();
//! let grown = tree::build_tree(&data, &config).unwrap();
//! let pruned = tree::prune(&grown, config.min_support).unwrap();
//! assert_eq!(pruned.root_attribute(), Some("PS"));
//! ```

pub mod corpus;
pub mod criteria;
pub mod dataset;
pub mod dot;
pub mod model;
pub mod report;
pub mod rules;
pub mod schema;
pub mod tree;

pub use criteria::{Criterion, CriterionScore, ContingencyTable};
pub use dataset::{ingest_csv, Dataset, IngestOptions, Record};
pub use model::{deserialize_model, serialize_model, ModelFile};
pub use rules::{classify, extract_rules, merge_rules, Prediction, Recommendation, Rule, RuleSet};
pub use schema::{parse_schema, Schema};
pub use tree::{build_tree, prune, DecisionTree, TreeConfig};
