use std::collections::{BTreeMap, BTreeSet};

use super::{AmrError, AmrNode, TreePath};

/// Token index (0-based) to the set of AMR node paths aligned with it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentTable {
    entries: BTreeMap<usize, BTreeSet<TreePath>>,
}

impl AlignmentTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token: usize, path: TreePath) {
        self.entries.entry(token).or_default().insert(path);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of aligned tokens.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn paths(&self, token: usize) -> Option<&BTreeSet<TreePath>> {
        self.entries.get(&token)
    }

    /// Aligned tokens in ascending index order with their path sets.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &BTreeSet<TreePath>)> {
        self.entries.iter().map(|(&token, paths)| (token, paths))
    }

    /// Checks that every aligned path names an existing node of `root`.
    pub fn validate(&self, root: &AmrNode) -> Result<(), AmrError> {
        for paths in self.entries.values() {
            for path in paths {
                if root.find(path).is_none() {
                    return Err(AmrError::UnresolvedPath(path.clone()));
                }
            }
        }
        Ok(())
    }

    /// Renders the table back into `token-path` records.
    pub fn to_records(&self) -> String {
        let mut records = Vec::new();
        for (token, paths) in &self.entries {
            for path in paths {
                records.push(format!("{token}-{path}"));
            }
        }
        records.join(" ")
    }
}

/// Parses whitespace-separated `tokenIndex-path` records such as `4-0.1.0`.
pub fn parse_alignments(text: &str, n_tokens: usize) -> Result<AlignmentTable, AmrError> {
    let mut table = AlignmentTable::new();
    for record in text.split_whitespace() {
        let malformed = || AmrError::MalformedAlignment(record.to_string());
        let (token, path) = record.split_once('-').ok_or_else(malformed)?;
        let token: usize = token.parse().map_err(|_| malformed())?;
        let path: TreePath = path.parse().map_err(|_| malformed())?;
        if token >= n_tokens {
            return Err(AmrError::TokenOutOfRange {
                record: record.to_string(),
                index: token,
                n_tokens,
            });
        }
        table.insert(token, path);
    }
    Ok(table)
}
