use std::collections::HashMap;

use super::{AmrError, AmrNode, TreePath};

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Slash,
    Role(&'a str),
    Symbol(&'a str),
    Quoted(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn error(offset: usize, message: impl Into<String>) -> AmrError {
        AmrError::Parse {
            offset,
            message: message.into(),
        }
    }

    /// Next token with its starting byte offset, or `None` at end of input.
    fn next(&mut self) -> Result<Option<(usize, Tok<'a>)>, AmrError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(start) else {
            return Ok(None);
        };
        let tok = match b {
            b'(' => {
                self.pos += 1;
                Tok::Open
            }
            b')' => {
                self.pos += 1;
                Tok::Close
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'"' => {
                let mut i = start + 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(Self::error(start, "unterminated string")),
                        Some(b'\\') => i += 2,
                        Some(b'"') => break,
                        Some(_) => i += 1,
                    }
                }
                self.pos = i + 1;
                Tok::Quoted(&self.src[start..self.pos])
            }
            _ => {
                let mut i = start;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b'/' | b'"')
                {
                    i += 1;
                }
                self.pos = i;
                let text = &self.src[start..i];
                if text.starts_with(':') {
                    if text.len() == 1 {
                        return Err(Self::error(start, "empty role name"));
                    }
                    Tok::Role(text)
                } else {
                    Tok::Symbol(text)
                }
            }
        };
        Ok(Some((start, tok)))
    }

    fn peek(&mut self) -> Result<Option<(usize, Tok<'a>)>, AmrError> {
        let saved = self.pos;
        let tok = self.next();
        self.pos = saved;
        tok
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    defined: HashMap<String, usize>,
}

impl<'a> Parser<'a> {
    fn node(&mut self, open_at: usize, relation: Option<String>) -> Result<AmrNode, AmrError> {
        let unbalanced = || Lexer::error(open_at, "unbalanced parentheses: missing ')'");
        let (var_at, var) = match self.lexer.next()? {
            Some((at, Tok::Symbol(s))) => (at, s.to_string()),
            Some((at, _)) => return Err(Lexer::error(at, "expected a variable after '('")),
            None => return Err(unbalanced()),
        };
        match self.lexer.next()? {
            Some((_, Tok::Slash)) => {}
            Some((at, _)) => return Err(Lexer::error(at, "expected '/' after variable")),
            None => return Err(unbalanced()),
        }
        let concept = match self.lexer.peek()? {
            Some((_, Tok::Symbol(s))) | Some((_, Tok::Quoted(s))) => {
                self.lexer.next()?;
                s.to_string()
            }
            Some((at, _)) => return Err(Lexer::error(at, "empty concept")),
            None => return Err(unbalanced()),
        };
        if let Some(prev) = self.defined.insert(var.clone(), var_at) {
            return Err(Lexer::error(
                var_at,
                format!("duplicate definition of variable `{var}` (first defined at byte {prev})"),
            ));
        }

        let mut children = Vec::new();
        loop {
            match self.lexer.next()? {
                Some((_, Tok::Close)) => break,
                Some((role_at, Tok::Role(role))) => {
                    let role = role.to_string();
                    let child = match self.lexer.next()? {
                        Some((at, Tok::Open)) => self.node(at, Some(role))?,
                        Some((_, Tok::Symbol(s))) | Some((_, Tok::Quoted(s))) => {
                            leaf(s.to_string(), Some(role))
                        }
                        Some((at, _)) => {
                            return Err(Lexer::error(at, format!("missing value for role {role}")))
                        }
                        None => {
                            return Err(Lexer::error(
                                role_at,
                                format!("missing value for role {role}"),
                            ))
                        }
                    };
                    children.push(child);
                }
                Some((at, tok)) => {
                    return Err(Lexer::error(
                        at,
                        format!("expected a role or ')', found {tok:?}"),
                    ))
                }
                None => return Err(unbalanced()),
            }
        }

        Ok(AmrNode {
            concept,
            variable: Some(var),
            relation,
            children,
            path: TreePath::root(),
            reference: None,
        })
    }
}

fn leaf(concept: String, relation: Option<String>) -> AmrNode {
    AmrNode {
        concept,
        variable: None,
        relation,
        children: Vec::new(),
        path: TreePath::root(),
        reference: None,
    }
}

fn mark_references(node: &mut AmrNode, defined: &HashMap<String, usize>) {
    if node.variable.is_none() && node.children.is_empty() && defined.contains_key(&node.concept) {
        node.reference = Some(node.concept.clone());
    }
    for child in &mut node.children {
        mark_references(child, defined);
    }
}

/// Parses one Penman-notation AMR expression.
///
/// Bare symbols that name a variable defined anywhere in the expression are
/// marked as re-references; all other bare symbols and quoted strings
/// become constant leaves. Paths are assigned from child positions.
pub fn parse_amr(text: &str) -> Result<AmrNode, AmrError> {
    let mut parser = Parser {
        lexer: Lexer::new(text),
        defined: HashMap::new(),
    };
    let mut root = match parser.lexer.next()? {
        Some((at, Tok::Open)) => parser.node(at, None)?,
        Some((at, Tok::Close)) => {
            return Err(Lexer::error(at, "unbalanced parentheses: unexpected ')'"))
        }
        Some((at, _)) => return Err(Lexer::error(at, "expected '(' to open the AMR")),
        None => return Err(Lexer::error(0, "empty input")),
    };
    match parser.lexer.next()? {
        None => {}
        Some((at, Tok::Close)) => {
            return Err(Lexer::error(at, "unbalanced parentheses: unexpected ')'"))
        }
        Some((at, _)) => return Err(Lexer::error(at, "trailing input after the AMR")),
    }
    mark_references(&mut root, &parser.defined);
    root.assign_paths(TreePath::root());
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OBSERVE: &str =
        "(o / observe-01 :ARG0 (i / i) :ARG1 (m / move-01 :ARG0 (a / army) :manner (q / quick)))";

    fn offset_of(err: AmrError) -> usize {
        match err {
            AmrError::Parse { offset, .. } => offset,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn single_node() {
        let root = parse_amr("(a / army)").unwrap();
        assert_eq!(root.concept, "army");
        assert_eq!(root.variable.as_deref(), Some("a"));
        assert_eq!(root.path, TreePath::root());
        assert!(root.children.is_empty());
    }

    #[test]
    fn observe_example_paths() {
        let root = parse_amr(OBSERVE).unwrap();
        assert_eq!(root.node_count(), 5);
        let army = root.iter().find(|n| n.concept == "army").unwrap();
        assert_eq!(army.path.to_string(), "0.1.0");
        assert_eq!(army.relation.as_deref(), Some(":ARG0"));
        let quick = root.find(&"0.1.1".parse().unwrap()).unwrap();
        assert_eq!(quick.concept, "quick");
        assert_eq!(quick.relation.as_deref(), Some(":manner"));
    }

    #[test]
    fn multiline_and_constants() {
        let text = "(d / dance-01\n  :ARG0 (k / kid\n     :mod (c / continent :name (n / name :op1 \"Asia\") :wiki \"Asia\")\n     :quant 3))";
        let root = parse_amr(text).unwrap();
        assert_eq!(root.node_count(), 7);
        let three = root.find(&"0.0.1".parse().unwrap()).unwrap();
        assert_eq!(three.concept, "3");
        assert!(three.variable.is_none());
        let wiki = root.find(&"0.0.0.1".parse().unwrap()).unwrap();
        assert_eq!(wiki.concept, "\"Asia\"");
        assert!(!wiki.is_reference());
    }

    #[test]
    fn unbalanced_is_an_error() {
        assert_eq!(offset_of(parse_amr("(a / army").unwrap_err()), 0);
        assert_eq!(offset_of(parse_amr("(a / army))").unwrap_err()), 10);
        assert!(parse_amr("(o / observe-01 :ARG0 (i / i)").is_err());
    }

    #[test]
    fn empty_concept_is_an_error() {
        assert_eq!(offset_of(parse_amr("(a / )").unwrap_err()), 5);
        assert!(parse_amr("(a /").is_err());
        assert!(parse_amr("(a army)").is_err());
    }

    #[test]
    fn duplicate_variable_is_an_error() {
        let err = parse_amr("(a / army :mod (a / big))").unwrap_err();
        assert_eq!(offset_of(err), 16);
    }

    #[test]
    fn role_without_value_is_an_error() {
        assert!(parse_amr("(a / army :mod)").is_err());
        assert!(parse_amr("(a / army :mod").is_err());
        assert!(parse_amr("").is_err());
        assert!(parse_amr("army").is_err());
        assert!(parse_amr("(a / \"unterminated)").is_err());
    }

    #[test]
    fn reentrant_reference_is_marked() {
        let root = parse_amr("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))").unwrap();
        let reference = root.find(&"0.1.0".parse().unwrap()).unwrap();
        assert_eq!(reference.reference.as_deref(), Some("b"));
        assert_eq!(root.node_count(), 4);
    }

    #[test]
    fn canonical_round_trip() {
        for text in [
            OBSERVE,
            "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))",
            "(d / dance-01 :ARG0 (k / kid :mod (c / continent :name (n / name :op1 \"Asia\") :wiki \"Asia\") :quant 3))",
        ] {
            let parsed = parse_amr(text).unwrap();
            let again = parse_amr(&parsed.to_penman()).unwrap();
            assert_eq!(parsed, again);
        }
    }
}
