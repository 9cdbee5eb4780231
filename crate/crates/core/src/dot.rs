//! Graphviz export.

use std::fmt::Write as _;

use crate::tree::{DecisionTree, Node, NodeKind};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the tree as a `digraph`. Node ids are assigned in pre-order, so
/// the same tree always yields the same text.
pub fn export_dot(tree: &DecisionTree) -> String {
    let mut out = String::from("digraph tree {\n    node [fontname=\"Helvetica\"];\n    edge [fontname=\"Helvetica\"];\n");
    let mut next_id = 0;
    write_node(&mut out, tree, &tree.root, &mut next_id);
    out.push_str("}\n");
    out
}

fn write_node(out: &mut String, tree: &DecisionTree, node: &Node, next_id: &mut usize) -> usize {
    let id = *next_id;
    *next_id += 1;
    let schema = &tree.schema;
    match &node.kind {
        NodeKind::Split { attribute, children } => {
            let attr = schema.attribute(*attribute);
            let _ = writeln!(
                out,
                "    n{id} [label=\"{}\\nsupport={}\", shape=box];",
                escape(&attr.name),
                node.support
            );
            for (level, child) in attr.levels.iter().zip(children) {
                let child_id = write_node(out, tree, child, next_id);
                let _ = writeln!(out, "    n{id} -> n{child_id} [label=\"{}\"];", escape(level));
            }
        }
        NodeKind::Leaf { class } | NodeKind::Default { class } => {
            let confidence = node.confidence().map_or("-".to_string(), |c| format!("{c:.2}"));
            let style = if node.is_default() { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "    n{id} [label=\"{}\\nsupport={}\\nconfidence={}\", shape=ellipse{style}];",
                escape(&schema.class_levels()[*class]),
                node.support,
                confidence
            );
        }
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::tree::{build_tree, prune, TreeConfig};

    #[test]
    fn single_leaf_graph() {
        let data = corpus::training_set();
        let tree = prune(&build_tree(&data, &TreeConfig::default()).unwrap(), 99).unwrap();
        let dot = export_dot(&tree);
        assert_eq!(dot.matches("shape=").count(), 1);
        assert!(!dot.contains("->"));
        assert!(dot.contains("n0 [label=\"Average\\nsupport=40\\nconfidence=0.40\", shape=ellipse];"));
    }

    #[test]
    fn pruned_corpus_root_edges() {
        let data = corpus::training_set();
        let tree = prune(&build_tree(&data, &TreeConfig::default()).unwrap(), 2).unwrap();
        let dot = export_dot(&tree);
        assert!(dot.starts_with("digraph tree {\n"));
        assert!(dot.contains("n0 [label=\"PS\\nsupport=40\", shape=box];"));
        let root_edges: Vec<&str> = dot.lines().filter(|l| l.trim_start().starts_with("n0 -> ")).collect();
        assert_eq!(root_edges.len(), 3);
        assert!(root_edges[0].ends_with("[label=\"Good\"];"));
        assert!(root_edges[1].ends_with("[label=\"Average\"];"));
        assert!(root_edges[2].ends_with("[label=\"Poor\"];"));
        assert_eq!(dot, export_dot(&tree));
    }
}
