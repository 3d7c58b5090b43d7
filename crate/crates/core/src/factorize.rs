//! Hierarchical sentence factorization.
//!
//! An aligned AMR tree is purified into a tree of surface tokens, re-addressed
//! under a new empty root, completed so every branch has the same depth, and
//! finally filled bottom-up so each node's semantic unit is the ordered
//! concatenation of its subtree's leaves. The root unit is the sentence in
//! predicate-argument order and every depth re-expresses the whole sentence
//! at a different granularity.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::amr::{AmrNode, AnnotatedSentence, TreePath};

#[derive(Debug, Error)]
pub enum FactorizeError {
    #[error("sentence has no token alignments; nothing to factorize")]
    EmptyAlignment,
    #[error("node {path} has {children} children but the branching factor is {k}")]
    Capacity {
        path: TreePath,
        children: usize,
        k: usize,
    },
    #[error("invalid factorization parameters: {0}")]
    InvalidParams(String),
}

/// Maximum depth `D` and branching factor `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FactorizationParams {
    pub depth: usize,
    pub branching: usize,
}

impl Default for FactorizationParams {
    fn default() -> Self {
        FactorizationParams {
            depth: 2,
            branching: 4,
        }
    }
}

impl FactorizationParams {
    pub fn new(depth: usize, branching: usize) -> Result<Self, FactorizeError> {
        if depth == 0 {
            return Err(FactorizeError::InvalidParams(
                "depth must be at least 1".into(),
            ));
        }
        if branching == 0 {
            return Err(FactorizeError::InvalidParams("k must be at least 1".into()));
        }
        Ok(FactorizationParams { depth, branching })
    }
}

/// AMR node after purification: concepts replaced by the aligned surface
/// tokens, relation labels gone.
///
/// `tokens` usually holds one token. It holds several when distinct tokens
/// share a position, and none for a grouping node that only exists to keep
/// two or more aligned subtrees together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PurifiedNode {
    pub tokens: Vec<String>,
    pub token_indices: Vec<usize>,
    pub children: Vec<PurifiedNode>,
    pub path: TreePath,
}

impl PurifiedNode {
    pub fn iter(&self) -> impl Iterator<Item = &PurifiedNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    fn assign_paths(&mut self, path: TreePath) {
        for (i, child) in self.children.iter_mut().enumerate() {
            child.assign_paths(path.child(i));
        }
        self.path = path;
    }
}

/// A semantic unit and its sub-units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorNode {
    pub unit: Vec<String>,
    pub children: Vec<FactorNode>,
    pub path: TreePath,
}

impl FactorNode {
    pub fn iter(&self) -> impl Iterator<Item = &FactorNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Units of the nodes at `depth`, in path order, without padding.
    pub fn units_at_depth(&self, depth: usize) -> Vec<&[String]> {
        self.iter()
            .filter(|n| n.path.depth() == depth)
            .map(|n| n.unit.as_slice())
            .collect()
    }

    /// Depth of the deepest node.
    pub fn height(&self) -> usize {
        self.iter().map(|n| n.path.depth()).max().unwrap_or(0)
    }

    fn assign_paths(&mut self, path: TreePath) {
        for (i, child) in self.children.iter_mut().enumerate() {
            child.assign_paths(path.child(i));
        }
        self.path = path;
    }
}

/// Replaces concepts with aligned tokens.
///
/// Each aligned token sits at the longest common prefix of its alignment
/// paths. Tokens that land on the same node are merged in sentence order.
/// Subtrees without aligned tokens are dropped and an unaligned node with a
/// single surviving child is replaced by that child. Children keep their
/// textual AMR order and are renumbered contiguously.
pub fn purify(sent: &AnnotatedSentence) -> Result<PurifiedNode, FactorizeError> {
    if sent.alignments.is_empty() {
        return Err(FactorizeError::EmptyAlignment);
    }
    let mut positions: HashMap<TreePath, Vec<usize>> = HashMap::new();
    for (token, paths) in sent.alignments.iter() {
        let position = TreePath::longest_common_prefix(paths).expect("path sets are nonempty");
        positions.entry(position).or_default().push(token);
    }
    let mut root =
        purify_node(&sent.amr, &positions, sent).ok_or(FactorizeError::EmptyAlignment)?;
    root.assign_paths(TreePath::root());
    Ok(root)
}

fn purify_node(
    node: &AmrNode,
    positions: &HashMap<TreePath, Vec<usize>>,
    sent: &AnnotatedSentence,
) -> Option<PurifiedNode> {
    let mut children: Vec<PurifiedNode> = node
        .children
        .iter()
        .filter_map(|child| purify_node(child, positions, sent))
        .collect();
    let token_indices = positions.get(&node.path).cloned().unwrap_or_default();
    if token_indices.is_empty() && children.len() <= 1 {
        return children.pop();
    }
    Some(PurifiedNode {
        tokens: token_indices
            .iter()
            .map(|&i| sent.unit_token(i).to_string())
            .collect(),
        token_indices,
        children,
        path: node.path.clone(),
    })
}

/// Re-addresses a purified-tree path in the factorization tree: the root
/// moves to `0.0` and every other segment after the first shifts by one.
pub fn map_index(path: &TreePath) -> TreePath {
    let segments = path.segments();
    let mapped = if segments.len() == 1 {
        vec![0, 0]
    } else {
        std::iter::once(segments[0])
            .chain(segments[1..].iter().map(|i| i + 1))
            .collect()
    };
    TreePath::from_segments(mapped).expect("mapped paths start at 0")
}

/// Index mapping plus node completion.
///
/// Every purified node moves to its mapped path under a new empty root.
/// Each non-root internal node then receives a copy of itself as child 0
/// (its children start at index 1 after mapping), and each leaf is extended
/// by a chain of self-copies so that all leaves end at the same depth: `D`,
/// or the natural height of the mapped tree when that is deeper.
pub fn build_factor_tree(purified: &PurifiedNode, params: FactorizationParams) -> FactorNode {
    let mut units: BTreeMap<TreePath, Vec<String>> = BTreeMap::new();
    units.insert(TreePath::root(), Vec::new());
    for node in purified.iter() {
        units.insert(map_index(&node.path), node.tokens.clone());
    }

    let internal: Vec<TreePath> = units
        .keys()
        .filter_map(TreePath::parent)
        .filter(|p| !p.is_root())
        .collect();
    for parent in internal {
        let first = parent.child(0);
        if !units.contains_key(&first) {
            let copy = units[&parent].clone();
            units.insert(first, copy);
        }
    }

    let mut children_of: HashMap<TreePath, Vec<TreePath>> = HashMap::new();
    for path in units.keys() {
        if let Some(parent) = path.parent() {
            children_of.entry(parent).or_default().push(path.clone());
        }
    }
    let mut root = assemble(&TreePath::root(), &units, &children_of);

    let target = params.depth.max(root.height());
    extend_leaves(&mut root, 0, target);
    root.assign_paths(TreePath::root());
    root
}

fn assemble(
    path: &TreePath,
    units: &BTreeMap<TreePath, Vec<String>>,
    children_of: &HashMap<TreePath, Vec<TreePath>>,
) -> FactorNode {
    let children = children_of
        .get(path)
        .map(|kids| {
            debug_assert!(kids.iter().enumerate().all(|(i, k)| k.last() == i));
            kids.iter()
                .map(|k| assemble(k, units, children_of))
                .collect()
        })
        .unwrap_or_default();
    FactorNode {
        unit: units[path].clone(),
        children,
        path: path.clone(),
    }
}

fn extend_leaves(node: &mut FactorNode, depth: usize, target: usize) {
    if node.is_leaf() {
        if depth < target {
            let mut chain = FactorNode {
                unit: node.unit.clone(),
                children: Vec::new(),
                path: TreePath::root(),
            };
            for _ in depth + 1..target {
                chain = FactorNode {
                    unit: node.unit.clone(),
                    children: vec![chain],
                    path: TreePath::root(),
                };
            }
            node.children.push(chain);
        }
        return;
    }
    for child in &mut node.children {
        extend_leaves(child, depth + 1, target);
    }
}

/// Fills every internal node's unit with the concatenation of its subtree's
/// leaf units in depth-first order.
pub fn traverse_units(mut tree: FactorNode) -> FactorNode {
    fill(&mut tree);
    tree
}

fn fill(node: &mut FactorNode) {
    if node.is_leaf() {
        return;
    }
    for child in &mut node.children {
        fill(child);
    }
    node.unit = node
        .children
        .iter()
        .flat_map(|c| c.unit.iter().cloned())
        .collect();
}

/// Units at depths `0..=D`, padded so every node has exactly `k` children;
/// depth `d` therefore holds `k^d` entries and padding entries are empty.
pub fn multiscale_units(
    tree: &FactorNode,
    params: FactorizationParams,
) -> Result<Vec<Vec<Vec<String>>>, FactorizeError> {
    let k = params.branching;
    let mut levels = Vec::with_capacity(params.depth + 1);
    let mut slots: Vec<Option<&FactorNode>> = vec![Some(tree)];
    for depth in 0..=params.depth {
        levels.push(
            slots
                .iter()
                .map(|slot| slot.map(|n| n.unit.clone()).unwrap_or_default())
                .collect(),
        );
        if depth == params.depth {
            break;
        }
        let mut next = Vec::with_capacity(slots.len() * k);
        for slot in &slots {
            match slot {
                Some(node) => {
                    if node.children.len() > k {
                        return Err(FactorizeError::Capacity {
                            path: node.path.clone(),
                            children: node.children.len(),
                            k,
                        });
                    }
                    next.extend(node.children.iter().map(Some));
                    next.extend(std::iter::repeat_n(None, k - node.children.len()));
                }
                None => next.extend(std::iter::repeat_n(None, k)),
            }
        }
        slots = next;
    }
    Ok(levels)
}

/// Purification, index mapping, node completion and node traversal.
pub fn factorize_sentence(
    sent: &AnnotatedSentence,
    params: FactorizationParams,
) -> Result<FactorNode, FactorizeError> {
    let purified = purify(sent)?;
    Ok(traverse_units(build_factor_tree(&purified, params)))
}

fn render_unit(unit: &[String]) -> String {
    if unit.is_empty() {
        "-".to_string()
    } else {
        unit.join(" ")
    }
}

/// One line per node, pre-order: two spaces of indentation per depth, then
/// `<path>\t<unit>`.
pub fn render_tree(tree: &FactorNode) -> String {
    let mut out = String::new();
    for node in tree.iter() {
        let indent = "  ".repeat(node.path.depth());
        let _ = writeln!(out, "{indent}{}\t{}", node.path, render_unit(&node.unit));
    }
    out
}

/// One line per depth: `d<depth>\t<unit>|<unit>|...`, empty units as `-`.
pub fn render_multiscale(levels: &[Vec<Vec<String>>]) -> String {
    let mut out = String::new();
    for (depth, units) in levels.iter().enumerate() {
        let joined: Vec<String> = units.iter().map(|u| render_unit(u)).collect();
        let _ = writeln!(out, "d{depth}\t{}", joined.join("|"));
    }
    out
}
