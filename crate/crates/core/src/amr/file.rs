use std::fs;
use std::path::Path;

use super::{graph_to_tree, parse_alignments, parse_amr, AlignmentTable, AmrError, AmrNode};

/// A sentence with its AMR tree (reentrancies already expanded) and token
/// alignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    /// Optional normalized forms, one per token (`# ::lemma`). When present
    /// they are what the factorization tree shows.
    pub lemmas: Option<Vec<String>>,
    pub amr: AmrNode,
    pub alignments: AlignmentTable,
}

impl AnnotatedSentence {
    pub fn new(
        tokens: Vec<String>,
        lemmas: Option<Vec<String>>,
        amr: AmrNode,
        alignments: AlignmentTable,
    ) -> Result<Self, AmrError> {
        if let Some(lemmas) = &lemmas {
            if lemmas.len() != tokens.len() {
                return Err(AmrError::Block {
                    line: 0,
                    message: format!("{} lemmas for {} tokens", lemmas.len(), tokens.len()),
                });
            }
        }
        if let Some((index, _)) = alignments.iter().find(|&(i, _)| i >= tokens.len()) {
            return Err(AmrError::TokenOutOfRange {
                record: index.to_string(),
                index,
                n_tokens: tokens.len(),
            });
        }
        let amr = graph_to_tree(&amr)?;
        alignments.validate(&amr)?;
        Ok(AnnotatedSentence {
            tokens,
            lemmas,
            amr,
            alignments,
        })
    }

    /// The form of token `index` used inside semantic units.
    pub fn unit_token(&self, index: usize) -> &str {
        match &self.lemmas {
            Some(lemmas) => &lemmas[index],
            None => &self.tokens[index],
        }
    }

    /// Builds a sentence from one parsed block.
    pub fn from_block(block: &Block) -> Result<Self, AmrError> {
        let fail = |message: String| AmrError::Block {
            line: block.line,
            message,
        };
        let tokens: Vec<String> = block
            .meta("tok")
            .ok_or_else(|| fail("missing `# ::tok` line".into()))?
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let lemmas = block
            .meta("lemma")
            .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>());
        let align = block
            .meta("align")
            .ok_or_else(|| fail("missing `# ::align` line".into()))?;
        if block.amr.trim().is_empty() {
            return Err(fail("missing AMR".into()));
        }
        let amr = parse_amr(&block.amr).map_err(|e| fail(e.to_string()))?;
        let alignments = parse_alignments(align, tokens.len()).map_err(|e| fail(e.to_string()))?;
        AnnotatedSentence::new(tokens, lemmas, amr, alignments).map_err(|e| fail(e.to_string()))
    }
}

/// A blank-line-separated chunk of an annotated file: `# ::key value`
/// metadata lines plus the Penman text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Block {
    /// 1-based line number of the block's first line.
    pub line: usize,
    pub entries: Vec<(String, String)>,
    pub amr: String,
}

impl Block {
    /// First value recorded under `key`.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Splits annotated text into blocks. Lines starting with `#` but not
/// `# ::` are comments.
pub fn parse_blocks(text: &str) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut current: Option<Block> = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            blocks.extend(current.take());
            continue;
        }
        if trimmed.starts_with('#') && !trimmed.starts_with("# ::") {
            continue;
        }
        let block = current.get_or_insert_with(|| Block {
            line: i + 1,
            ..Block::default()
        });
        if let Some(rest) = trimmed.strip_prefix("# ::") {
            let (key, value) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            block
                .entries
                .push((key.to_string(), value.trim().to_string()));
        } else {
            if !block.amr.is_empty() {
                block.amr.push('\n');
            }
            block.amr.push_str(line);
        }
    }
    blocks.extend(current);
    blocks
}

/// Parses every sentence block in `text`.
pub fn parse_annotated(text: &str) -> Result<Vec<AnnotatedSentence>, AmrError> {
    parse_blocks(text)
        .iter()
        .map(AnnotatedSentence::from_block)
        .collect()
}

pub fn read_annotated(path: impl AsRef<Path>) -> Result<Vec<AnnotatedSentence>, AmrError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| AmrError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_annotated(&text)
}
