use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use asmf_tree::dataset::{IngestOptions, ValidationMode};
use asmf_tree::model::Provenance;
use asmf_tree::report::{criterion_report, resubstitution_report};
use asmf_tree::rules::{classify, extract_rules, leaf_rules, merge_rules};
use asmf_tree::{
    build_tree, corpus, deserialize_model, dot, ingest_csv, parse_schema, prune, serialize_model,
    Criterion, Dataset, DecisionTree, ModelFile, Schema, TreeConfig,
};

#[derive(Parser)]
#[command(name = "asmf-tree", version, about = "Ordinal decision trees, rules and deployment recommendations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow and prune a tree, then write a model file.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        tree: TreeArgs,
        /// Model file to write.
        #[arg(long, default_value = "model.txt")]
        out: PathBuf,
    },
    /// Score every attribute and print them best first.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = CriterionArg::Asmf)]
        criterion: CriterionArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the merged rule set of a model (or of a tree trained on the fly).
    Rules {
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        tree: TreeArgs,
        /// Print one rule per leaf without merging sibling level sets.
        #[arg(long)]
        unmerged: bool,
    },
    /// Classify unlabeled records with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV of records to classify.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        skip_invalid: bool,
    },
    /// Write a model's tree as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        model: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Schema file; the bundled personnel schema when omitted.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Training CSV; the bundled 40-row corpus when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    skip_invalid: bool,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long, value_enum, default_value_t = CriterionArg::Asmf)]
    criterion: CriterionArg,
    #[arg(long, default_value_t = 2)]
    min_support: usize,
    #[arg(long, default_value_t = 2)]
    min_split: usize,
    #[arg(long)]
    max_depth: Option<usize>,
}

impl TreeArgs {
    fn config(&self) -> TreeConfig {
        TreeConfig {
            criterion: self.criterion.into(),
            min_split: self.min_split,
            min_support: self.min_support,
            max_depth: self.max_depth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Asmf,
    AsmfMaxcell,
    Gainratio,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Asmf => Criterion::AsmfDiagonal,
            CriterionArg::AsmfMaxcell => Criterion::AsmfMaxCell,
            CriterionArg::Gainratio => Criterion::GainRatio,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

struct Loaded {
    dataset: Dataset,
    skipped: usize,
}

fn load_training(input: &InputArgs) -> Result<Loaded> {
    let schema = match &input.schema {
        Some(path) => parse_schema(&read(path)?).with_context(|| format!("schema {}", path.display()))?,
        None => corpus::schema(),
    };
    let (text, origin) = match &input.data {
        Some(path) => (read(path)?, path.display().to_string()),
        None => (corpus::TRAINING_CSV.to_string(), "bundled corpus".to_string()),
    };
    let opts = IngestOptions {
        skip_invalid: input.skip_invalid,
        require_label: true,
    };
    let ingested = ingest_csv(&schema, &text, opts).with_context(|| format!("data {origin}"))?;
    if let Some(v) = ingested.dataset.validate(ValidationMode::Training).first() {
        bail!("data {origin}: {v}");
    }
    Ok(Loaded {
        dataset: ingested.dataset,
        skipped: ingested.skipped.len(),
    })
}

fn load_model(path: &Path) -> Result<ModelFile> {
    deserialize_model(&read(path)?).with_context(|| format!("model {}", path.display()))
}

fn train(dataset: &Dataset, config: &TreeConfig) -> Result<DecisionTree> {
    let grown = build_tree(dataset, config)?;
    Ok(prune(&grown, config.min_support)?)
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Train { input, tree, out } => {
            let loaded = load_training(&input)?;
            let config = tree.config();
            let tree = train(&loaded.dataset, &config)?;
            let resub = resubstitution_report(&tree, &loaded.dataset)?;
            let created_unix = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let model = ModelFile {
                provenance: Provenance {
                    rows: loaded.dataset.len(),
                    created_unix,
                },
                config,
                tree,
            };
            fs::write(&out, serialize_model(&model)).with_context(|| format!("cannot write {}", out.display()))?;
            Ok(format!(
                "rows={} skipped={} root={} leaves={} accuracy={:.4} model={}\n",
                loaded.dataset.len(),
                loaded.skipped,
                model.tree.root_attribute().unwrap_or("(leaf)"),
                model.tree.leaf_count(),
                resub.accuracy(),
                out.display()
            ))
        }
        Command::Report { input, criterion, format } => {
            let loaded = load_training(&input)?;
            let report = criterion_report(&loaded.dataset, criterion.into())?;
            Ok(match format {
                Format::Text => report.to_text(),
                Format::Csv => report.to_csv(),
            })
        }
        Command::Rules {
            model,
            input,
            tree,
            unmerged,
        } => {
            let (schema, rules) = match model {
                Some(path) => {
                    let model = load_model(&path)?;
                    let rules = leaf_rules(&model.tree);
                    (model.tree.schema, rules)
                }
                None => {
                    let loaded = load_training(&input)?;
                    let tree = train(&loaded.dataset, &tree.config())?;
                    let rules = extract_rules(&tree, &loaded.dataset);
                    (tree.schema, rules)
                }
            };
            let rules = if unmerged { rules } else { merge_rules(&rules) };
            Ok(rules.render(&schema))
        }
        Command::Predict {
            model,
            data,
            format,
            skip_invalid,
        } => {
            let model = load_model(&model)?;
            let schema: &Schema = model.schema();
            let opts = IngestOptions {
                skip_invalid,
                require_label: false,
            };
            let input = ingest_csv(schema, &read(&data)?, opts).with_context(|| format!("data {}", data.display()))?;
            let rules = merge_rules(&leaf_rules(&model.tree));
            let mut rows = Vec::with_capacity(input.dataset.len());
            for record in &input.dataset.records {
                let p = classify(&model.tree, record)?;
                let rule = if p.default_leaf {
                    "(no rule: combination unseen in training)".to_string()
                } else {
                    rules
                        .first_match(record)
                        .map(|r| r.render(schema))
                        .ok_or_else(|| anyhow!("row {}: no rule covers this record", record.row_id))?
                };
                rows.push([
                    record.row_id.to_string(),
                    schema.class_levels()[p.predicted].clone(),
                    p.confidence.map_or("-".to_string(), |c| format!("{c:.2}")),
                    p.recommendation.to_string(),
                    rule,
                ]);
            }
            let header = ["row", "predicted", "confidence", "recommendation", "rule"];
            Ok(match format {
                Format::Text => render_text(&header, &rows),
                Format::Csv => render_csv(&header, &rows)?,
            })
        }
        Command::ExportDot { model, out } => {
            let model = load_model(&model)?;
            let dot = dot::export_dot(&model.tree);
            match out {
                Some(path) => {
                    fs::write(&path, dot).with_context(|| format!("cannot write {}", path.display()))?;
                    Ok(String::new())
                }
                None => Ok(dot),
            }
        }
    }
}

fn render_text(header: &[&str; 5], rows: &[[String; 5]]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let last = cells.len() - 1;
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == last {
                s.push_str(cell);
            } else {
                s.push_str(&format!("{cell:<w$}  "));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn render_csv(header: &[&str; 5], rows: &[[String; 5]]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
