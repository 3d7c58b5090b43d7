use std::collections::HashMap;

use super::{AmrError, AmrNode, TreePath};

/// Expands every re-reference into a deep copy of the subtree that defines
/// the referenced variable, turning the AMR graph into a strict tree.
///
/// A re-reference keeps its own relation label and child position, so paths
/// of all pre-existing nodes are unchanged; only the copied subtrees receive
/// new, longer paths.
pub fn graph_to_tree(root: &AmrNode) -> Result<AmrNode, AmrError> {
    let mut definitions = HashMap::new();
    for node in root.iter() {
        if let (Some(var), None) = (&node.variable, &node.reference) {
            definitions.entry(var.clone()).or_insert(node);
        }
    }
    let mut open = Vec::new();
    let mut tree = expand(root, &definitions, &mut open)?;
    tree.assign_paths(TreePath::root());
    Ok(tree)
}

fn expand(
    node: &AmrNode,
    definitions: &HashMap<String, &AmrNode>,
    open: &mut Vec<String>,
) -> Result<AmrNode, AmrError> {
    if let Some(var) = &node.reference {
        let definition = definitions
            .get(var)
            .ok_or_else(|| AmrError::UndefinedVariable(var.clone()))?;
        if open.contains(var) {
            return Err(AmrError::CyclicReference(var.clone()));
        }
        let mut copy = expand(definition, definitions, open)?;
        copy.relation = node.relation.clone();
        return Ok(copy);
    }

    let pushed = match &node.variable {
        Some(var) => {
            open.push(var.clone());
            true
        }
        None => false,
    };
    let children = node
        .children
        .iter()
        .map(|child| expand(child, definitions, open))
        .collect::<Result<Vec<_>, _>>();
    if pushed {
        open.pop();
    }
    Ok(AmrNode {
        concept: node.concept.clone(),
        variable: node.variable.clone(),
        relation: node.relation.clone(),
        children: children?,
        path: node.path.clone(),
        reference: None,
    })
}
