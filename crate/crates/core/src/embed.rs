//! Word vectors, unit vectors and pairwise cost matrices.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("cannot read embeddings from {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("no in-vocabulary tokens in the {side} sentence")]
    EmptySentence { side: &'static str },
    #[error("vector dimension {found} does not match store dimension {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Read-only map from lowercased token to a vector of fixed dimension.
#[derive(Clone, Debug)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
}

impl EmbeddingStore {
    /// Builds a store from `(token, vector)` pairs. Tokens are lowercased;
    /// on collision the first vector wins.
    pub fn from_pairs<I, S>(dim: usize, pairs: I) -> Result<Self, EmbedError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut index = HashMap::new();
        let mut flat = Vec::new();
        for (token, vector) in pairs {
            if vector.len() != dim {
                return Err(EmbedError::Dimension {
                    expected: dim,
                    found: vector.len(),
                });
            }
            let key = token.as_ref().to_lowercase();
            if index.contains_key(&key) {
                continue;
            }
            index.insert(key, index.len());
            flat.extend(vector);
        }
        let vectors =
            Array2::from_shape_vec((index.len(), dim), flat).expect("every row has `dim` entries");
        Ok(EmbeddingStore {
            dim,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, token: &str) -> Option<ArrayView1<'_, f64>> {
        let row = match self.index.get(token) {
            Some(&row) => row,
            None => *self.index.get(&token.to_lowercase())?,
        };
        Some(self.vectors.row(row))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.get(token).is_some()
    }
}

/// Reads word2vec text format: a `<count> <dim>` header, then one
/// `<token> <v1> ... <vdim>` line per word. `filter`, when given, keeps only
/// the listed tokens (compared lowercased).
pub fn read_embeddings<R: BufRead>(
    reader: R,
    filter: Option<&HashSet<String>>,
) -> Result<EmbeddingStore, EmbedError> {
    let filter: Option<HashSet<String>> =
        filter.map(|f| f.iter().map(|t| t.to_lowercase()).collect());
    let mut lines = reader.lines().enumerate();
    let io_err = |source| EmbedError::Io {
        path: "<reader>".into(),
        source,
    };

    let (count, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(EmbedError::Format {
                line: 1,
                message: "missing `<count> <dim>` header".into(),
            });
        };
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let header_err = || EmbedError::Format {
            line: i + 1,
            message: format!("expected `<count> <dim>` header, found `{}`", line.trim()),
        };
        let mut fields = line.split_whitespace();
        let count: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(header_err)?;
        let dim: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(header_err)?;
        if fields.next().is_some() || dim == 0 {
            return Err(header_err());
        }
        break (count, dim);
    };

    let mut pairs = Vec::new();
    let mut seen = 0usize;
    for (i, line) in lines {
        let line = line.map_err(io_err)?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        seen += 1;
        let values = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EmbedError::Format {
                line: i + 1,
                message: format!("bad component for `{token}`: {e}"),
            })?;
        if values.len() != dim {
            return Err(EmbedError::Format {
                line: i + 1,
                message: format!("`{token}` has {} components, expected {dim}", values.len()),
            });
        }
        let keep = match &filter {
            Some(f) => f.contains(&token.to_lowercase()),
            None => true,
        };
        if keep {
            pairs.push((token.to_string(), values));
        }
    }
    if seen != count {
        log::warn!("embedding header announces {count} vectors, file has {seen}");
    }
    EmbeddingStore::from_pairs(dim, pairs)
}

/// Loads a word2vec text file, decompressing gzip transparently.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    filter: Option<&HashSet<String>>,
) -> Result<EmbeddingStore, EmbedError> {
    let path = path.as_ref();
    let wrap = |source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = BufReader::new(File::open(path).map_err(wrap)?);
    let gzipped = file.fill_buf().map_err(wrap)?.starts_with(&[0x1f, 0x8b]);
    let reader: Box<dyn Read> = if gzipped {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    read_embeddings(BufReader::new(reader), filter).map_err(|e| match e {
        EmbedError::Io { source, .. } => wrap(source),
        other => other,
    })
}

/// Sum of the vectors of the in-vocabulary tokens; the zero vector for an
/// empty or fully out-of-vocabulary unit.
pub fn unit_vector<S: AsRef<str>>(unit: &[S], store: &EmbeddingStore) -> Array1<f64> {
    let mut sum = Array1::zeros(store.dim());
    for token in unit {
        if let Some(v) = store.get(token.as_ref()) {
            sum += &v;
        }
    }
    sum
}

pub fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distances between the in-vocabulary tokens of two sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    pub values: Array2<f64>,
    /// Positions in the first sequence that survived OOV filtering.
    pub rows_kept: Vec<usize>,
    /// Positions in the second sequence that survived OOV filtering.
    pub cols_kept: Vec<usize>,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// Tokens dropped from each side.
    pub fn dropped(&self, len_a: usize, len_b: usize) -> (usize, usize) {
        (len_a - self.rows_kept.len(), len_b - self.cols_kept.len())
    }
}

/// `values[i][j] = ‖a_i − b_j‖₂` over the tokens found in `store`.
pub fn cost_matrix<S: AsRef<str>>(
    a: &[S],
    b: &[S],
    store: &EmbeddingStore,
) -> Result<CostMatrix, EmbedError> {
    let lookup = |tokens: &[S]| -> (Vec<usize>, Vec<ArrayView1<'_, f64>>) {
        tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| store.get(t.as_ref()).map(|v| (i, v)))
            .unzip()
    };
    let (rows_kept, va) = lookup(a);
    let (cols_kept, vb) = lookup(b);
    if va.is_empty() {
        return Err(EmbedError::EmptySentence { side: "first" });
    }
    if vb.is_empty() {
        return Err(EmbedError::EmptySentence { side: "second" });
    }
    let values = Array2::from_shape_fn((va.len(), vb.len()), |(i, j)| euclidean(va[i], vb[j]));
    Ok(CostMatrix {
        values,
        rows_kept,
        cols_kept,
    })
}
