use std::fmt::Write;

use super::tree::{tree_depth, Node};
use super::DecisionTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RuleOptions {
    pub max_depth: usize,
    /// Display name of each model column.
    pub feature_names: Vec<String>,
    /// Variable number of each model column, rendered as `x<n>`.
    pub feature_numbers: Vec<usize>,
}

impl RuleOptions {
    /// Columns named by `names`, numbered from 1 in column order.
    pub fn new(names: &[String]) -> Self {
        Self {
            max_depth: 3,
            feature_names: names.to_vec(),
            feature_numbers: (1..=names.len()).collect(),
        }
    }
}

const FAKE: &str = "return true;   // this is a fake news";
const REAL: &str = "return false;  // this is not a fake news";

fn leaf_line(value: f64) -> &'static str {
    if value > 0.5 {
        FAKE
    } else {
        REAL
    }
}

fn render(nodes: &[Node], i: usize, depth: usize, opts: &RuleOptions, out: &mut String) {
    let pad = "    ".repeat(depth);
    match &nodes[i] {
        Node::Leaf { value } => {
            let _ = writeln!(out, "{pad}{}", leaf_line(*value));
        }
        Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            let _ = writeln!(
                out,
                "{pad}if x{} <= {:.3} then",
                opts.feature_numbers[*feature], threshold
            );
            render(nodes, *left, depth + 1, opts, out);
            let _ = writeln!(out, "{pad}else");
            render(nodes, *right, depth + 1, opts, out);
            let _ = writeln!(out, "{pad}end");
        }
    }
}

/// Renders a shallow decision tree as if/else pseudo-code.
pub fn export_rule(tree: &DecisionTree, opts: &RuleOptions) -> Result<String> {
    if opts.feature_names.len() != tree.n_features || opts.feature_numbers.len() != tree.n_features
    {
        return Err(Error::Dimension {
            expected: tree.n_features,
            got: opts.feature_names.len(),
        });
    }
    let depth = tree_depth(&tree.nodes);
    if depth > opts.max_depth {
        return Err(Error::Model(format!(
            "tree depth {depth} exceeds the readable export limit of {}",
            opts.max_depth
        )));
    }
    if let [Node::Leaf { value }] = tree.nodes.as_slice() {
        return Ok(format!("{}\n", leaf_line(*value)));
    }
    let mut used: Vec<usize> = tree
        .nodes
        .iter()
        .filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            _ => None,
        })
        .collect();
    used.sort_unstable();
    used.dedup();
    let mut out = String::from("input: a news t\n");
    for f in used {
        let _ = writeln!(
            out,
            "x{} <- the value of the linguistic {} feature of t",
            opts.feature_numbers[f], opts.feature_names[f]
        );
    }
    render(&tree.nodes, 0, 0, opts, &mut out);
    Ok(out)
}
