//! Recursive tree induction and support-threshold pruning.

use thiserror::Error;

use crate::criteria::{rank_attributes, Criterion, ScoreError};
use crate::dataset::{Dataset, Record, ValidationMode};
use crate::schema::Schema;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("{0}")]
    InvalidRecord(String),
    #[error("no attribute has a defined {0} score at the root")]
    AllUndefined(Criterion),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("record {row} has no value for `{attribute}`, which the tree tests")]
    MissingAttribute { row: usize, attribute: String },
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    pub criterion: Criterion,
    /// Smallest partition that may still be split.
    pub min_split: usize,
    /// Pruning threshold: nodes covering fewer records are removed.
    pub min_support: usize,
    pub max_depth: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::AsmfDiagonal,
            min_split: 2,
            min_support: 2,
            max_depth: None,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.min_split < 1 {
            return Err(TreeError::Config("min_split must be at least 1".into()));
        }
        if self.min_support < 1 {
            return Err(TreeError::Config("min_support must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(TreeError::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Leaf {
        class: usize,
    },
    /// Stands in for an attribute level that no training record reached;
    /// predicts the parent partition's majority class.
    Default {
        class: usize,
    },
    Split {
        attribute: usize,
        /// One child per level of `attribute`, in level order.
        children: Vec<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// Training records that reached this node.
    pub support: usize,
    /// Per-class counts of those records.
    pub distribution: Vec<usize>,
    pub kind: NodeKind,
}

impl Node {
    pub fn leaf(class: usize, distribution: Vec<usize>) -> Self {
        Self {
            support: distribution.iter().sum(),
            distribution,
            kind: NodeKind::Leaf { class },
        }
    }

    pub fn default_leaf(class: usize, classes: usize) -> Self {
        Self {
            support: 0,
            distribution: vec![0; classes],
            kind: NodeKind::Default { class },
        }
    }

    /// Predicted class for leaves of either kind.
    pub fn predicted(&self) -> Option<usize> {
        match self.kind {
            NodeKind::Leaf { class } | NodeKind::Default { class } => Some(class),
            NodeKind::Split { .. } => None,
        }
    }

    pub fn is_default(&self) -> bool {
        matches!(self.kind, NodeKind::Default { .. })
    }

    pub fn children(&self) -> &[Node] {
        match &self.kind {
            NodeKind::Split { children, .. } => children,
            _ => &[],
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(Node::node_count).sum::<usize>()
    }

    /// Leaves that carry training records (default leaves excluded).
    pub fn leaf_count(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf { .. } => 1,
            NodeKind::Default { .. } => 0,
            NodeKind::Split { children, .. } => children.iter().map(Node::leaf_count).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    /// Fraction of the node's records that carry `class`; `None` on an
    /// empty node.
    pub fn confidence(&self) -> Option<f64> {
        let class = self.predicted()?;
        (self.support > 0).then(|| self.distribution[class] as f64 / self.support as f64)
    }
}

/// Index of the largest count; the lowest index wins ties.
pub fn majority(distribution: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in distribution.iter().enumerate() {
        if c > distribution[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub schema: Schema,
    pub root: Node,
}

/// Attribute/level pairs traversed from the root to a leaf.
pub type Path = Vec<(usize, usize)>;

impl DecisionTree {
    /// Walks `record` down to its leaf.
    pub fn walk(&self, record: &Record) -> Result<(&Node, Path), TreeError> {
        let mut node = &self.root;
        let mut path = Vec::new();
        while let NodeKind::Split { attribute, children } = &node.kind {
            let level = record.value(*attribute).ok_or_else(|| TreeError::MissingAttribute {
                row: record.row_id,
                attribute: self.schema.attribute(*attribute).name.clone(),
            })?;
            path.push((*attribute, level));
            node = &children[level];
        }
        Ok((node, path))
    }

    pub fn predict(&self, record: &Record) -> Result<usize, TreeError> {
        let (leaf, _) = self.walk(record)?;
        Ok(leaf.predicted().expect("walk ends on a leaf"))
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn root_attribute(&self) -> Option<&str> {
        match &self.root.kind {
            NodeKind::Split { attribute, .. } => Some(&self.schema.attribute(*attribute).name),
            _ => None,
        }
    }
}

fn distribution(records: &[&Record], classes: usize) -> Vec<usize> {
    let mut d = vec![0; classes];
    for r in records {
        d[r.label.expect("labels checked before induction")] += 1;
    }
    d
}

struct Builder<'a> {
    schema: &'a Schema,
    config: &'a TreeConfig,
}

impl Builder<'_> {
    fn grow(&self, records: Vec<&Record>, available: Vec<usize>, depth: usize) -> Result<Node, TreeError> {
        let classes = self.schema.class_arity();
        let dist = distribution(&records, classes);
        let majority_class = majority(&dist);
        let pure = dist.iter().filter(|&&c| c > 0).count() <= 1;
        if pure
            || records.len() < self.config.min_split
            || available.is_empty()
            || self.config.max_depth.is_some_and(|d| depth >= d)
        {
            return Ok(Node::leaf(majority_class, dist));
        }

        let ranked = rank_attributes(self.schema, &records, &available, self.config.criterion)?;
        let best = &ranked[0];
        if !best.defined {
            if depth == 0 {
                return Err(TreeError::AllUndefined(self.config.criterion));
            }
            return Ok(Node::leaf(majority_class, dist));
        }
        let attribute = best.index;

        let arity = self.schema.attribute(attribute).arity();
        let mut parts: Vec<Vec<&Record>> = vec![Vec::new(); arity];
        for r in records {
            let level = r.value(attribute).expect("values checked before induction");
            parts[level].push(r);
        }
        let rest: Vec<usize> = available.into_iter().filter(|&a| a != attribute).collect();
        let children = parts
            .into_iter()
            .map(|part| {
                if part.is_empty() {
                    Ok(Node::default_leaf(majority_class, classes))
                } else {
                    self.grow(part, rest.clone(), depth + 1)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Node {
            support: dist.iter().sum(),
            distribution: dist,
            kind: NodeKind::Split { attribute, children },
        })
    }
}

/// Grows a tree by splitting each partition on its best-scoring remaining
/// attribute. No pruning is applied; see [`prune`].
pub fn build_tree(dataset: &Dataset, config: &TreeConfig) -> Result<DecisionTree, TreeError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(TreeError::EmptyDataset);
    }
    if let Some(v) = dataset.validate(ValidationMode::Training).first() {
        return Err(TreeError::InvalidRecord(v.to_string()));
    }
    let schema = &dataset.schema;
    if config.criterion == Criterion::AsmfDiagonal {
        for attr in schema.attributes() {
            if attr.arity() != schema.class_arity() {
                return Err(ScoreError::ArityMismatch {
                    attribute: attr.name.clone(),
                    levels: attr.arity(),
                    classes: schema.class_arity(),
                }
                .into());
            }
        }
    }

    let builder = Builder { schema, config };
    let records: Vec<&Record> = dataset.records.iter().collect();
    let root = builder.grow(records, (0..schema.attributes().len()).collect(), 0)?;
    Ok(DecisionTree {
        schema: schema.clone(),
        root,
    })
}

/// Bottom-up support pruning.
///
/// A split node with any non-default child covering fewer than
/// `min_support` records becomes a leaf predicting its own majority class.
/// A split node whose children are all leaves predicting one class becomes
/// a single leaf for that class.
pub fn prune(tree: &DecisionTree, min_support: usize) -> Result<DecisionTree, TreeError> {
    if min_support < 1 {
        return Err(TreeError::Config("min_support must be at least 1".into()));
    }
    Ok(DecisionTree {
        schema: tree.schema.clone(),
        root: prune_node(&tree.root, min_support),
    })
}

fn prune_node(node: &Node, min_support: usize) -> Node {
    let NodeKind::Split { attribute, children } = &node.kind else {
        return node.clone();
    };
    let children: Vec<Node> = children.iter().map(|c| prune_node(c, min_support)).collect();

    if children.iter().any(|c| !c.is_default() && c.support < min_support) {
        return Node::leaf(majority(&node.distribution), node.distribution.clone());
    }

    if let Some(first) = children[0].predicted() {
        if children.iter().all(|c| c.predicted() == Some(first)) {
            // Each child predicts a mode of its own counts, so the shared
            // class is also a mode of the summed counts.
            return Node::leaf(first, node.distribution.clone());
        }
    }

    Node {
        support: node.support,
        distribution: node.distribution.clone(),
        kind: NodeKind::Split {
            attribute: *attribute,
            children,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::schema::AttributeDef;

    fn corpus_tree() -> DecisionTree {
        build_tree(&corpus::training_set(), &TreeConfig::default()).unwrap()
    }

    fn child(node: &Node, level: usize) -> &Node {
        &node.children()[level]
    }

    #[test]
    fn root_is_ps_with_expected_partitions() {
        let tree = corpus_tree();
        assert_eq!(tree.root_attribute(), Some("PS"));
        let supports: Vec<usize> = tree.root.children().iter().map(|c| c.support).collect();
        assert_eq!(supports, vec![13, 14, 13]);
        assert_eq!(tree.root.distribution, vec![10, 16, 14]);
    }

    #[test]
    fn unpruned_shape_matches_reference_build() {
        // Node counts from an independent straight-line rebuild of the
        // corpus tree (defaults included).
        let tree = corpus_tree();
        assert_eq!(tree.node_count(), 31);
        let pruned = prune(&tree, 2).unwrap();
        assert_eq!(pruned.node_count(), 13);
    }

    #[test]
    fn ps_poor_collapses_after_pruning() {
        let pruned = prune(&corpus_tree(), 2).unwrap();
        let poor = child(&pruned.root, 2);
        assert_eq!(poor.kind, NodeKind::Leaf { class: 2 });
        assert_eq!(poor.support, 13);
        assert_eq!(poor.distribution, vec![0, 1, 12]);
    }

    #[test]
    fn min_support_one_only_merges_same_class_children() {
        let tree = corpus_tree();
        let pruned = prune(&tree, 1).unwrap();
        assert!(pruned.node_count() <= tree.node_count());
        for r in &corpus::training_set().records {
            assert_eq!(pruned.predict(r).unwrap(), tree.predict(r).unwrap());
        }
    }

    #[test]
    fn huge_threshold_leaves_majority_root() {
        let pruned = prune(&corpus_tree(), 41).unwrap();
        assert_eq!(pruned.root.kind, NodeKind::Leaf { class: 1 });
        assert_eq!(pruned.root.distribution, vec![10, 16, 14]);
        assert_eq!(pruned.node_count(), 1);
    }

    #[test]
    fn prune_rejects_zero_threshold() {
        assert!(matches!(prune(&corpus_tree(), 0), Err(TreeError::Config(_))));
    }

    #[test]
    fn single_record_is_a_leaf() {
        let mut data = corpus::training_set();
        data.records.truncate(1);
        let tree = build_tree(&data, &TreeConfig::default()).unwrap();
        assert_eq!(tree.root.kind, NodeKind::Leaf { class: 0 });
        assert_eq!(tree.root.support, 1);
    }

    #[test]
    fn empty_and_unlabeled_inputs() {
        let mut data = corpus::training_set();
        data.records.clear();
        assert_eq!(
            build_tree(&data, &TreeConfig::default()),
            Err(TreeError::EmptyDataset)
        );
        let mut data = corpus::training_set();
        data.records[5].label = None;
        assert!(matches!(
            build_tree(&data, &TreeConfig::default()),
            Err(TreeError::InvalidRecord(_))
        ));
    }

    #[test]
    fn max_depth_caps_the_tree() {
        let config = TreeConfig {
            max_depth: Some(1),
            ..TreeConfig::default()
        };
        let tree = build_tree(&corpus::training_set(), &config).unwrap();
        assert_eq!(tree.root.depth(), 1);
        let bad = TreeConfig {
            max_depth: Some(0),
            ..TreeConfig::default()
        };
        assert!(build_tree(&corpus::training_set(), &bad).is_err());
    }

    #[test]
    fn gain_ratio_with_constant_attributes_fails_at_root() {
        let schema = Schema::new(
            "C",
            vec!["a".into(), "b".into()],
            None,
            vec![AttributeDef::new("K", &["x", "y"])],
        )
        .unwrap();
        let data = Dataset::new(
            schema,
            vec![
                Record::new(vec![0], Some(0), 1),
                Record::new(vec![0], Some(1), 2),
            ],
        );
        let config = TreeConfig {
            criterion: Criterion::GainRatio,
            ..TreeConfig::default()
        };
        assert_eq!(
            build_tree(&data, &config),
            Err(TreeError::AllUndefined(Criterion::GainRatio))
        );
    }

    #[test]
    fn constant_attribute_never_chosen_by_gain_ratio() {
        let schema = Schema::new(
            "C",
            vec!["a".into(), "b".into()],
            None,
            vec![
                AttributeDef::new("K", &["x", "y"]),
                AttributeDef::new("V", &["x", "y"]),
            ],
        )
        .unwrap();
        let data = Dataset::new(
            schema,
            vec![
                Record::new(vec![0, 0], Some(0), 1),
                Record::new(vec![0, 1], Some(1), 2),
                Record::new(vec![0, 1], Some(0), 3),
            ],
        );
        let config = TreeConfig {
            criterion: Criterion::GainRatio,
            ..TreeConfig::default()
        };
        let tree = build_tree(&data, &config).unwrap();
        assert_eq!(tree.root_attribute(), Some("V"));
        // The V=y partition is mixed but only K remains, which is constant.
        assert!(matches!(child(&tree.root, 1).kind, NodeKind::Leaf { .. }));
    }

    #[test]
    fn diagonal_mode_checks_arity() {
        let schema = Schema::new(
            "C",
            vec!["a".into(), "b".into()],
            None,
            vec![AttributeDef::new("K", &["x", "y", "z"])],
        )
        .unwrap();
        let data = Dataset::new(schema, vec![Record::new(vec![0], Some(0), 1)]);
        assert!(matches!(
            build_tree(&data, &TreeConfig::default()),
            Err(TreeError::Score(ScoreError::ArityMismatch { .. }))
        ));
        let config = TreeConfig {
            criterion: Criterion::AsmfMaxCell,
            ..TreeConfig::default()
        };
        assert!(build_tree(&data, &config).is_ok());
    }

    #[test]
    fn walk_reports_missing_attribute() {
        let tree = corpus_tree();
        let record = Record {
            values: vec![None; 6],
            label: None,
            row_id: 9,
        };
        assert_eq!(
            tree.walk(&record).unwrap_err(),
            TreeError::MissingAttribute {
                row: 9,
                attribute: "PS".into()
            }
        );
    }

    #[test]
    fn majority_prefers_first_class_on_ties() {
        assert_eq!(majority(&[1, 1, 0]), 0);
        assert_eq!(majority(&[0, 2, 2]), 1);
        assert_eq!(majority(&[0, 0, 0]), 0);
    }
}
