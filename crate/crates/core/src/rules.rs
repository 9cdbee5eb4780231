//! Rule extraction, rule merging, classification and recommendations.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::dataset::{Dataset, Record};
use crate::schema::{fold, Schema};
use crate::tree::{DecisionTree, Node, NodeKind, TreeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("unknown class `{0}`")]
    UnknownClass(String),
}

/// One conjunct: the attribute must take one of `levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub attribute: usize,
    pub levels: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    /// Root-first.
    pub conditions: Vec<Condition>,
    pub predicted: usize,
    pub support: usize,
    pub correct: usize,
}

impl Rule {
    pub fn matches(&self, record: &Record) -> bool {
        self.conditions.iter().all(|c| {
            record
                .value(c.attribute)
                .is_some_and(|level| c.levels.contains(&level))
        })
    }

    pub fn confidence(&self) -> f64 {
        if self.support == 0 {
            0.0
        } else {
            self.correct as f64 / self.support as f64
        }
    }

    /// `IF PS in {Good} AND DKA in {Good,Average} THEN P = Good  [support=.., confidence=..]`
    pub fn render(&self, schema: &Schema) -> String {
        let body = if self.conditions.is_empty() {
            "TRUE".to_string()
        } else {
            self.conditions
                .iter()
                .map(|c| {
                    let attr = schema.attribute(c.attribute);
                    let levels: Vec<&str> = c.levels.iter().map(|&l| attr.levels[l].as_str()).collect();
                    format!("{} in {{{}}}", attr.name, levels.join(","))
                })
                .collect::<Vec<_>>()
                .join(" AND ")
        };
        format!(
            "IF {body} THEN {} = {}  [support={}, confidence={:.2}]",
            schema.class_name(),
            schema.class_levels()[self.predicted],
            self.support,
            self.confidence()
        )
    }
}

/// Rules in extraction order, evaluated first-match.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn first_match(&self, record: &Record) -> Option<&Rule> {
        self.rules.iter().find(|r| r.matches(record))
    }

    pub fn render(&self, schema: &Schema) -> String {
        self.rules.iter().map(|r| r.render(schema) + "\n").collect()
    }
}

fn collect_paths<'a>(node: &'a Node, path: &mut Vec<(usize, usize)>, out: &mut Vec<(Vec<(usize, usize)>, &'a Node)>) {
    match &node.kind {
        NodeKind::Leaf { .. } => out.push((path.clone(), node)),
        NodeKind::Default { .. } => {}
        NodeKind::Split { attribute, children } => {
            for (level, child) in children.iter().enumerate() {
                path.push((*attribute, level));
                collect_paths(child, path, out);
                path.pop();
            }
        }
    }
}

fn path_rules(tree: &DecisionTree) -> Vec<(Rule, &Node)> {
    let mut paths = Vec::new();
    collect_paths(&tree.root, &mut Vec::new(), &mut paths);
    paths
        .into_iter()
        .map(|(path, leaf)| {
            let rule = Rule {
                conditions: path
                    .into_iter()
                    .map(|(attribute, level)| Condition {
                        attribute,
                        levels: BTreeSet::from([level]),
                    })
                    .collect(),
                predicted: leaf.predicted().expect("paths end on leaves"),
                support: 0,
                correct: 0,
            };
            (rule, leaf)
        })
        .collect()
}

/// One rule per non-default leaf, with support and correct counts taken
/// from `dataset`.
pub fn extract_rules(tree: &DecisionTree, dataset: &Dataset) -> RuleSet {
    let mut rules: Vec<Rule> = path_rules(tree).into_iter().map(|(r, _)| r).collect();
    for record in &dataset.records {
        if let Some(rule) = rules.iter_mut().find(|r| r.matches(record)) {
            rule.support += 1;
            if record.label == Some(rule.predicted) {
                rule.correct += 1;
            }
        }
    }
    RuleSet { rules }
}

/// Like [`extract_rules`] but counts come from the leaves' stored training
/// distributions, so no dataset is needed.
pub fn leaf_rules(tree: &DecisionTree) -> RuleSet {
    let rules = path_rules(tree)
        .into_iter()
        .map(|(mut rule, leaf)| {
            rule.support = leaf.support;
            rule.correct = leaf.distribution[rule.predicted];
            rule
        })
        .collect();
    RuleSet { rules }
}

/// If `a` and `b` agree on class and on every condition but one, returns
/// the index of that condition.
fn mergeable(a: &Rule, b: &Rule) -> Option<usize> {
    if a.predicted != b.predicted || a.conditions.len() != b.conditions.len() {
        return None;
    }
    let mut differing = None;
    for (i, (x, y)) in a.conditions.iter().zip(&b.conditions).enumerate() {
        if x.attribute != y.attribute {
            return None;
        }
        if x.levels != y.levels {
            if differing.is_some() {
                return None;
            }
            differing = Some(i);
        }
    }
    differing
}

/// Repeatedly unions the level sets of rule pairs that differ in exactly
/// one condition and predict the same class, until no pair qualifies.
///
/// The merged rule takes the position of the earlier of the two.
pub fn merge_rules(rules: &RuleSet) -> RuleSet {
    let mut rules = rules.rules.clone();
    'outer: loop {
        for i in 0..rules.len() {
            for j in i + 1..rules.len() {
                if let Some(k) = mergeable(&rules[i], &rules[j]) {
                    let other = rules.remove(j);
                    let merged = &mut rules[i];
                    merged.conditions[k].levels.extend(other.conditions[k].levels.iter().copied());
                    merged.support += other.support;
                    merged.correct += other.correct;
                    continue 'outer;
                }
            }
        }
        break;
    }
    RuleSet { rules }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Recommendation {
    Deploy,
    DeployWithTraining,
    DoNotDeploy,
}

impl Recommendation {
    pub fn as_str(self) -> &'static str {
        match self {
            Recommendation::Deploy => "deploy",
            Recommendation::DeployWithTraining => "deploy-with-training",
            Recommendation::DoNotDeploy => "do-not-deploy",
        }
    }
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps a class index to an action: the best level deploys, the worst does
/// not, and anything in between deploys with training.
pub fn recommend_index(class: usize, class_arity: usize) -> Recommendation {
    if class == 0 {
        Recommendation::Deploy
    } else if class + 1 == class_arity {
        Recommendation::DoNotDeploy
    } else {
        Recommendation::DeployWithTraining
    }
}

/// [`recommend_index`] over a class label.
pub fn recommend(schema: &Schema, class: &str) -> Result<Recommendation, RuleError> {
    let key = fold(class);
    let index = schema
        .class_levels()
        .iter()
        .position(|l| fold(l) == key)
        .ok_or_else(|| RuleError::UnknownClass(class.to_string()))?;
    Ok(recommend_index(index, schema.class_arity()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub predicted: usize,
    pub distribution: Vec<usize>,
    pub recommendation: Recommendation,
    pub path: Vec<(usize, usize)>,
    /// Mode fraction of the deciding leaf; `None` on a default leaf.
    pub confidence: Option<f64>,
    pub default_leaf: bool,
}

pub fn classify(tree: &DecisionTree, record: &Record) -> Result<Prediction, TreeError> {
    let (leaf, path) = tree.walk(record)?;
    let predicted = leaf.predicted().expect("walk ends on a leaf");
    Ok(Prediction {
        predicted,
        distribution: leaf.distribution.clone(),
        recommendation: recommend_index(predicted, tree.schema.class_arity()),
        path,
        confidence: leaf.confidence(),
        default_leaf: leaf.is_default(),
    })
}
