//! Versioned plain-text model files.
//!
//! ```text
//! asmf-tree-model v1
//! schema
//! class P levels=Good,Average,Poor labels=1,2,3
//! attr PS levels=Good,Average,Poor
//! end
//! config
//! criterion=asmf
//! min_split=2
//! min_support=2
//! max_depth=none
//! end
//! provenance
//! rows=40
//! created_unix=1760000000
//! end
//! tree
//! split PS support=40 dist=10,16,14
//!   [Good] leaf Good support=13 dist=10,3,0
//!   [Average] leaf Average support=14 dist=0,12,2
//!   [Poor] leaf Poor support=13 dist=0,1,12
//! end
//! ```
//!
//! Nodes are listed pre-order, indented two spaces per level; every child
//! line starts with the level of its parent's attribute that leads to it.

use std::fmt::Write as _;

use thiserror::Error;

use crate::criteria::Criterion;
use crate::schema::{parse_schema, Schema, SchemaError};
use crate::tree::{majority, DecisionTree, Node, NodeKind, TreeConfig};

pub const FORMAT_HEADER: &str = "asmf-tree-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("not a model file: first line must be `{FORMAT_HEADER} v{FORMAT_VERSION}`")]
    MissingHeader,
    #[error("unsupported model version `{0}` (this build reads v{FORMAT_VERSION})")]
    Version(String),
    #[error("line {line}: input ends before {expected}")]
    Truncated { line: usize, expected: String },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: node `{node}`: {reason}")]
    Node {
        line: usize,
        node: String,
        reason: String,
    },
    #[error("line {line}: schema block: {source}")]
    Schema { line: usize, source: SchemaError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    /// Records in the training set.
    pub rows: usize,
    /// Seconds since the Unix epoch at training time.
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub tree: DecisionTree,
    pub config: TreeConfig,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn schema(&self) -> &Schema {
        &self.tree.schema
    }
}

fn join_counts(counts: &[usize]) -> String {
    counts.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

pub fn serialize_model(model: &ModelFile) -> String {
    let mut out = format!("{FORMAT_HEADER} v{FORMAT_VERSION}\n");
    out.push_str("schema\n");
    out.push_str(&model.schema().to_dsl());
    out.push_str("end\n");

    let c = &model.config;
    let depth = c.max_depth.map_or("none".to_string(), |d| d.to_string());
    let _ = write!(
        out,
        "config\ncriterion={}\nmin_split={}\nmin_support={}\nmax_depth={}\nend\n",
        c.criterion, c.min_split, c.min_support, depth
    );
    let p = &model.provenance;
    let _ = write!(out, "provenance\nrows={}\ncreated_unix={}\nend\n", p.rows, p.created_unix);

    out.push_str("tree\n");
    write_node(&mut out, model.schema(), &model.tree.root, 0, None);
    out.push_str("end\n");
    out
}

fn write_node(out: &mut String, schema: &Schema, node: &Node, depth: usize, edge: Option<&str>) {
    out.push_str(&"  ".repeat(depth));
    if let Some(edge) = edge {
        let _ = write!(out, "[{edge}] ");
    }
    let classes = schema.class_levels();
    match &node.kind {
        NodeKind::Leaf { class } => {
            let _ = writeln!(
                out,
                "leaf {} support={} dist={}",
                classes[*class],
                node.support,
                join_counts(&node.distribution)
            );
        }
        NodeKind::Default { class } => {
            let _ = writeln!(out, "default {}", classes[*class]);
        }
        NodeKind::Split { attribute, children } => {
            let attr = schema.attribute(*attribute);
            let _ = writeln!(
                out,
                "split {} support={} dist={}",
                attr.name,
                node.support,
                join_counts(&node.distribution)
            );
            for (level, child) in attr.levels.iter().zip(children) {
                write_node(out, schema, child, depth + 1, Some(level));
            }
        }
    }
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    /// 1-based number of the line `next` would return.
    fn line_no(&self) -> usize {
        self.pos + 1
    }

    fn next(&mut self, expected: &str) -> Result<&'a str, ModelError> {
        let line = self.lines.get(self.pos).copied().ok_or_else(|| ModelError::Truncated {
            line: self.line_no(),
            expected: expected.to_string(),
        })?;
        self.pos += 1;
        Ok(line)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn expect(&mut self, keyword: &str) -> Result<(), ModelError> {
        let line_no = self.line_no();
        let line = self.next(&format!("`{keyword}`"))?;
        if line.trim_end() != keyword {
            return Err(ModelError::Malformed {
                line: line_no,
                reason: format!("expected `{keyword}`, found `{line}`"),
            });
        }
        Ok(())
    }

    /// Lines up to (not including) the next `end`.
    fn block(&mut self, name: &str) -> Result<Vec<(usize, &'a str)>, ModelError> {
        let mut out = Vec::new();
        loop {
            let line_no = self.line_no();
            let line = self.next(&format!("`end` of {name} block"))?;
            if line.trim_end() == "end" {
                return Ok(out);
            }
            out.push((line_no, line));
        }
    }
}

fn key_values<'a>(block: &[(usize, &'a str)], keys: &[&str]) -> Result<Vec<(usize, &'a str)>, ModelError> {
    let mut found: Vec<Option<(usize, &str)>> = vec![None; keys.len()];
    for &(line, text) in block {
        let (key, value) = text.split_once('=').ok_or_else(|| ModelError::Malformed {
            line,
            reason: format!("expected key=value, found `{text}`"),
        })?;
        let slot = keys.iter().position(|k| *k == key.trim()).ok_or_else(|| ModelError::Malformed {
            line,
            reason: format!("unknown key `{key}`"),
        })?;
        found[slot] = Some((line, value.trim()));
    }
    keys.iter()
        .zip(found)
        .map(|(key, v)| {
            v.ok_or_else(|| ModelError::Malformed {
                line: block.last().map_or(0, |l| l.0),
                reason: format!("missing key `{key}`"),
            })
        })
        .collect()
}

fn number<T: std::str::FromStr>((line, text): (usize, &str), what: &str) -> Result<T, ModelError> {
    text.parse().map_err(|_| ModelError::Malformed {
        line,
        reason: format!("{what} `{text}` is not a valid number"),
    })
}

pub fn deserialize_model(text: &str) -> Result<ModelFile, ModelError> {
    let mut lines = Lines::new(text);
    let header = lines.next("header").map_err(|_| ModelError::MissingHeader)?;
    let version = header
        .strip_prefix(FORMAT_HEADER)
        .and_then(|rest| rest.strip_prefix(" v"))
        .ok_or(ModelError::MissingHeader)?
        .trim_end();
    if version != FORMAT_VERSION.to_string() {
        return Err(ModelError::Version(version.to_string()));
    }

    lines.expect("schema")?;
    let schema_start = lines.line_no();
    let block = lines.block("schema")?;
    let source: String = block.iter().map(|(_, l)| format!("{l}\n")).collect();
    let schema = parse_schema(&source).map_err(|e| ModelError::Schema {
        line: match &e {
            SchemaError::Syntax { line, .. } => schema_start + line - 1,
            _ => schema_start,
        },
        source: e,
    })?;

    lines.expect("config")?;
    let block = lines.block("config")?;
    let kv = key_values(&block, &["criterion", "min_split", "min_support", "max_depth"])?;
    let criterion: Criterion = kv[0].1.parse().map_err(|e: crate::criteria::ScoreError| ModelError::Malformed {
        line: kv[0].0,
        reason: e.to_string(),
    })?;
    let max_depth = match kv[3].1 {
        "none" => None,
        _ => Some(number(kv[3], "max_depth")?),
    };
    let config = TreeConfig {
        criterion,
        min_split: number(kv[1], "min_split")?,
        min_support: number(kv[2], "min_support")?,
        max_depth,
    };
    config.validate().map_err(|e| ModelError::Malformed {
        line: kv[0].0,
        reason: e.to_string(),
    })?;

    lines.expect("provenance")?;
    let block = lines.block("provenance")?;
    let kv = key_values(&block, &["rows", "created_unix"])?;
    let provenance = Provenance {
        rows: number(kv[0], "rows")?,
        created_unix: number(kv[1], "created_unix")?,
    };

    lines.expect("tree")?;
    let mut parser = TreeParser {
        schema: &schema,
        lines: &mut lines,
    };
    let root = parser.node(0, None, "root", &mut Vec::new())?;
    lines.expect("end")?;
    if let Some(extra) = lines.lines[lines.pos..].iter().position(|l| !l.trim().is_empty()) {
        return Err(ModelError::Malformed {
            line: lines.pos + extra + 1,
            reason: "unexpected content after the tree block".into(),
        });
    }

    Ok(ModelFile {
        tree: DecisionTree { schema, root },
        config,
        provenance,
    })
}

struct TreeParser<'s, 'l, 'a> {
    schema: &'s Schema,
    lines: &'l mut Lines<'a>,
}

struct NodeLine<'a> {
    line: usize,
    kind: &'a str,
    name: &'a str,
    support: Option<usize>,
    dist: Option<Vec<usize>>,
}

impl TreeParser<'_, '_, '_> {
    fn node(
        &mut self,
        depth: usize,
        expected_edge: Option<(&str, usize, &str)>,
        node_name: &str,
        used: &mut Vec<usize>,
    ) -> Result<Node, ModelError> {
        let line_no = self.lines.line_no();
        let raw = match self.lines.peek() {
            Some(l) if l.trim_end() != "end" => {
                self.lines.pos += 1;
                l
            }
            _ => {
                return Err(ModelError::Truncated {
                    line: line_no,
                    expected: format!("node `{node_name}`"),
                })
            }
        };
        let node_err = |reason: String| ModelError::Node {
            line: line_no,
            node: node_name.to_string(),
            reason,
        };

        let indent = raw.len() - raw.trim_start_matches(' ').len();
        if indent != depth * 2 {
            return Err(node_err(format!("expected indentation {}, found {indent}", depth * 2)));
        }
        let mut body = raw.trim();

        if let Some((attr_name, level, level_name)) = expected_edge {
            let rest = body
                .strip_prefix('[')
                .and_then(|b| b.split_once("] "))
                .ok_or_else(|| node_err("child line must start with `[level] `".into()))?;
            let attr = self.schema.attribute_index(attr_name).map(|i| self.schema.attribute(i));
            match attr.and_then(|a| a.level_index(rest.0)) {
                Some(l) if l == level => {}
                Some(_) => {
                    return Err(node_err(format!(
                        "child edge `{}` out of order, expected `{level_name}`",
                        rest.0
                    )))
                }
                None => {
                    return Err(node_err(format!(
                        "child edge `{}` is not a level of {attr_name}",
                        rest.0
                    )))
                }
            }
            body = rest.1;
        }

        let parsed = self.parse_line(line_no, body, &node_err)?;
        let classes = self.schema.class_arity();
        let class_of = |name: &str| {
            self.schema
                .class_levels()
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| node_err(format!("class `{name}` is not declared in the schema")))
        };

        match parsed.kind {
            "default" => {
                if parsed.support.is_some() || parsed.dist.is_some() {
                    return Err(node_err("default leaves carry no counts".into()));
                }
                Ok(Node::default_leaf(class_of(parsed.name)?, classes))
            }
            "leaf" => {
                let class = class_of(parsed.name)?;
                let (support, dist) = self.counts(&parsed, &node_err)?;
                if support == 0 {
                    return Err(node_err("leaf has zero support".into()));
                }
                if dist[class] < dist[majority(&dist)] {
                    return Err(node_err(format!("class `{}` is not a mode of dist", parsed.name)));
                }
                Ok(Node {
                    support,
                    distribution: dist,
                    kind: NodeKind::Leaf { class },
                })
            }
            "split" => {
                let attribute = self
                    .schema
                    .attribute_index(parsed.name)
                    .filter(|&i| self.schema.attribute(i).name == parsed.name)
                    .ok_or_else(|| node_err(format!("attribute `{}` is not declared in the schema", parsed.name)))?;
                if used.contains(&attribute) {
                    return Err(node_err(format!("attribute `{}` repeats on its path", parsed.name)));
                }
                let (support, dist) = self.counts(&parsed, &node_err)?;
                let attr = self.schema.attribute(attribute);

                used.push(attribute);
                let mut children = Vec::with_capacity(attr.arity());
                for (level, level_name) in attr.levels.iter().enumerate() {
                    let child_name = if node_name == "root" {
                        format!("{}={level_name}", attr.name)
                    } else {
                        format!("{node_name}/{}={level_name}", attr.name)
                    };
                    children.push(self.node(
                        depth + 1,
                        Some((&attr.name, level, level_name)),
                        &child_name,
                        used,
                    )?);
                }
                used.pop();

                let child_support: usize = children.iter().map(|c| c.support).sum();
                if child_support != support {
                    return Err(node_err(format!(
                        "support {support} differs from children's total {child_support}"
                    )));
                }
                let mut child_dist = vec![0; classes];
                for c in &children {
                    for (t, v) in child_dist.iter_mut().zip(&c.distribution) {
                        *t += v;
                    }
                }
                if child_dist != dist {
                    return Err(node_err("dist differs from the children's total".into()));
                }
                Ok(Node {
                    support,
                    distribution: dist,
                    kind: NodeKind::Split { attribute, children },
                })
            }
            other => Err(node_err(format!("unknown node kind `{other}`"))),
        }
    }

    fn parse_line<'a>(
        &self,
        line: usize,
        body: &'a str,
        node_err: &dyn Fn(String) -> ModelError,
    ) -> Result<NodeLine<'a>, ModelError> {
        let mut tokens = body.split_whitespace();
        let kind = tokens.next().ok_or_else(|| node_err("empty node line".into()))?;
        let name = tokens.next().ok_or_else(|| node_err(format!("`{kind}` needs a name")))?;
        let mut support = None;
        let mut dist = None;
        for token in tokens {
            match token.split_once('=') {
                Some(("support", v)) => {
                    support = Some(v.parse().map_err(|_| node_err(format!("bad support `{v}`")))?)
                }
                Some(("dist", v)) => {
                    dist = Some(
                        v.split(',')
                            .map(|c| c.parse::<usize>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| node_err(format!("bad dist `{v}`")))?,
                    )
                }
                _ => return Err(node_err(format!("unexpected token `{token}`"))),
            }
        }
        Ok(NodeLine {
            line,
            kind,
            name,
            support,
            dist,
        })
    }

    fn counts(
        &self,
        parsed: &NodeLine<'_>,
        node_err: &dyn Fn(String) -> ModelError,
    ) -> Result<(usize, Vec<usize>), ModelError> {
        let support = parsed
            .support
            .ok_or_else(|| node_err(format!("line {}: missing support=", parsed.line)))?;
        let dist = parsed
            .dist
            .clone()
            .ok_or_else(|| node_err(format!("line {}: missing dist=", parsed.line)))?;
        if dist.len() != self.schema.class_arity() {
            return Err(node_err(format!(
                "dist has {} entries, schema declares {} classes",
                dist.len(),
                self.schema.class_arity()
            )));
        }
        if dist.iter().sum::<usize>() != support {
            return Err(node_err("dist does not sum to support".into()));
        }
        Ok((support, dist))
    }
}
