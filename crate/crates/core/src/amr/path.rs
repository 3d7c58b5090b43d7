use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::AmrError;

/// Dotted address of a node in a tree: `0` is the root, `0.1` its second
/// child, and so on.
///
/// Ordering is lexicographic over segments, so a parent sorts before its
/// children and siblings sort by their last segment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(into = "String")]
pub struct TreePath(Vec<usize>);

impl TreePath {
    pub fn root() -> Self {
        TreePath(vec![0])
    }

    /// Builds a path from raw segments. The first segment must be 0.
    pub fn from_segments(segments: Vec<usize>) -> Result<Self, AmrError> {
        match segments.first() {
            Some(0) => Ok(TreePath(segments)),
            _ => Err(AmrError::InvalidPath(
                segments
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join("."),
            )),
        }
    }

    pub fn segments(&self) -> &[usize] {
        &self.0
    }

    /// Depth below the root; the root has depth 0.
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_root(&self) -> bool {
        self.0.len() == 1
    }

    pub fn child(&self, index: usize) -> Self {
        let mut segments = self.0.clone();
        segments.push(index);
        TreePath(segments)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.is_root() {
            None
        } else {
            Some(TreePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Position among siblings (the last segment).
    pub fn last(&self) -> usize {
        *self.0.last().expect("paths are nonempty")
    }

    pub fn is_prefix_of(&self, other: &TreePath) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Longest common prefix of a set of paths. Because every path starts
    /// at the root, the result always contains at least the root segment.
    pub fn longest_common_prefix<'a, I>(paths: I) -> Option<TreePath>
    where
        I: IntoIterator<Item = &'a TreePath>,
    {
        let mut iter = paths.into_iter();
        let mut prefix = iter.next()?.0.clone();
        for path in iter {
            let common = prefix
                .iter()
                .zip(&path.0)
                .take_while(|(a, b)| a == b)
                .count();
            prefix.truncate(common);
        }
        Some(TreePath(prefix))
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, segment) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{segment}")?;
        }
        Ok(())
    }
}

impl From<TreePath> for String {
    fn from(path: TreePath) -> String {
        path.to_string()
    }
}

impl FromStr for TreePath {
    type Err = AmrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let segments = s
            .split('.')
            .map(|part| part.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| AmrError::InvalidPath(s.to_string()))?;
        TreePath::from_segments(segments).map_err(|_| AmrError::InvalidPath(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> TreePath {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(p("0.1.0").segments(), &[0, 1, 0]);
        assert_eq!(p("0.1.0").to_string(), "0.1.0");
        assert_eq!(p("0").depth(), 0);
        assert!(p("0").is_root());
    }

    #[test]
    fn rejects_bad_paths() {
        assert!("".parse::<TreePath>().is_err());
        assert!("1.0".parse::<TreePath>().is_err());
        assert!("0..1".parse::<TreePath>().is_err());
        assert!("0.x".parse::<TreePath>().is_err());
    }

    #[test]
    fn ordering_parent_first_then_siblings() {
        let mut paths = [p("0.1"), p("0.0.3"), p("0"), p("0.0"), p("0.10"), p("0.2")];
        paths.sort();
        let rendered: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
        assert_eq!(rendered, ["0", "0.0", "0.0.3", "0.1", "0.2", "0.10"]);
    }

    #[test]
    fn common_prefix() {
        let set = [p("0.0.0"), p("0.0.0.0"), p("0.0.0.0.0"), p("0.0.0.1")];
        assert_eq!(TreePath::longest_common_prefix(&set), Some(p("0.0.0")));
        assert_eq!(
            TreePath::longest_common_prefix(&[p("0.1.0")]),
            Some(p("0.1.0"))
        );
        assert_eq!(
            TreePath::longest_common_prefix(&[p("0.1"), p("0.2")]),
            Some(p("0"))
        );
        assert_eq!(TreePath::longest_common_prefix(std::iter::empty()), None);
    }
}
