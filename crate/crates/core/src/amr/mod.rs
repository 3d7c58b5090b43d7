//! AMR ingestion: Penman reader, reentrancy expansion, token alignments and
//! the annotated-sentence file format.

mod align;
mod file;
mod path;
mod penman;
mod reentrancy;

use thiserror::Error;

pub use align::{parse_alignments, AlignmentTable};
pub use file::{parse_annotated, parse_blocks, read_annotated, AnnotatedSentence, Block};
pub use path::TreePath;
pub use penman::parse_amr;
pub use reentrancy::graph_to_tree;

#[derive(Debug, Error)]
pub enum AmrError {
    #[error("AMR parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid tree path `{0}`")]
    InvalidPath(String),
    #[error("reference to undefined variable `{0}`")]
    UndefinedVariable(String),
    #[error("variable `{0}` is referenced inside its own subtree")]
    CyclicReference(String),
    #[error("malformed alignment record `{0}`")]
    MalformedAlignment(String),
    #[error("alignment record `{record}` refers to token {index} but the sentence has {n_tokens} tokens")]
    TokenOutOfRange {
        record: String,
        index: usize,
        n_tokens: usize,
    },
    #[error("alignment path {0} does not resolve to an AMR node")]
    UnresolvedPath(TreePath),
    #[error("sentence block starting at line {line}: {message}")]
    Block { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One node of an AMR tree.
///
/// Instances carry a variable (`(a / army)`), constants do not (`"Asia"`,
/// `3`, `-`). A bare variable standing where a child is expected is a
/// re-reference to the node that defines it; such nodes have `reference`
/// set and no children until [`graph_to_tree`] expands them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrNode {
    pub concept: String,
    pub variable: Option<String>,
    /// Role label on the edge from the parent, e.g. `:ARG0`.
    pub relation: Option<String>,
    pub children: Vec<AmrNode>,
    pub path: TreePath,
    pub reference: Option<String>,
}

impl AmrNode {
    pub fn is_reference(&self) -> bool {
        self.reference.is_some()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(AmrNode::node_count).sum::<usize>()
    }

    /// Pre-order traversal.
    pub fn iter(&self) -> impl Iterator<Item = &AmrNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    /// Resolves a path relative to this node, which must be the root.
    pub fn find(&self, path: &TreePath) -> Option<&AmrNode> {
        let (first, rest) = path.segments().split_first()?;
        if *first != 0 {
            return None;
        }
        let mut node = self;
        for &index in rest {
            node = node.children.get(index)?;
        }
        Some(node)
    }

    /// Rewrites every path from the tree shape, starting at `path`.
    pub fn assign_paths(&mut self, path: TreePath) {
        for (i, child) in self.children.iter_mut().enumerate() {
            child.assign_paths(path.child(i));
        }
        self.path = path;
    }

    /// Canonical single-line Penman rendering.
    pub fn to_penman(&self) -> String {
        let mut out = String::new();
        self.write_penman(&mut out);
        out
    }

    fn write_penman(&self, out: &mut String) {
        if let Some(var) = &self.reference {
            out.push_str(var);
            return;
        }
        match &self.variable {
            Some(var) => {
                out.push('(');
                out.push_str(var);
                out.push_str(" / ");
                out.push_str(&self.concept);
                for child in &self.children {
                    out.push(' ');
                    out.push_str(child.relation.as_deref().unwrap_or(":mod"));
                    out.push(' ');
                    child.write_penman(out);
                }
                out.push(')');
            }
            None => out.push_str(&self.concept),
        }
    }
}
