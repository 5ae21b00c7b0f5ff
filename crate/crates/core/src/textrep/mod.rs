//! Comment text features: tokenization, vocabularies, TF-IDF vectors and a
//! trainable word-embedding table pooled by mean.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const DEFAULT_EMBEDDING_DIM: usize = 32;
pub const DEFAULT_MAX_VOCAB: usize = 5000;
pub const DEFAULT_MIN_DF: u32 = 2;

/// Lowercased alphanumeric tokens. Runs of non-alphanumeric characters
/// separate tokens, and identifiers are split at camelCase boundaries
/// (`getFoo` -> `get`, `foo`; `HTTPServer` -> `http`, `server`).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = split_pass(text);
    // Letters without a lowercase form can expose a new boundary once
    // their neighbors are lowered, so split again until nothing changes.
    loop {
        let next: Vec<String> = out.iter().flat_map(|t| split_pass(t)).collect();
        if next == out {
            return out;
        }
        out = next;
    }
}

fn split_pass(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower);
            if boundary {
                push_lower(&mut out, &chars[start..i]);
                start = i;
            }
        }
        push_lower(&mut out, &chars[start..]);
    }
    out
}

fn push_lower(out: &mut Vec<String>, chars: &[char]) {
    // Some lowercase mappings emit combining marks; dropping them keeps
    // tokenize idempotent on its own output.
    let s: String = chars
        .iter()
        .flat_map(|c| c.to_lowercase())
        .filter(|c| c.is_alphanumeric())
        .collect();
    if !s.is_empty() {
        out.push(s);
    }
}

/// Token ids by position: 0 is PAD, 1 is UNK, stored tokens start at 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRecord", into = "VocabularyRecord")]
pub struct Vocabulary {
    tokens: Vec<String>,
    df: Vec<u32>,
    n_docs: u32,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    tokens: Vec<String>,
    df: Vec<u32>,
    n_docs: u32,
}

impl From<VocabularyRecord> for Vocabulary {
    fn from(r: VocabularyRecord) -> Self {
        Vocabulary::from_parts(r.tokens, r.df, r.n_docs)
    }
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        VocabularyRecord {
            tokens: v.tokens,
            df: v.df,
            n_docs: v.n_docs,
        }
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_parts(Vec::new(), Vec::new(), 0)
    }
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, df: Vec<u32>, n_docs: u32) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 2))
            .collect();
        Self {
            tokens,
            df,
            n_docs,
            index,
        }
    }

    /// Number of ids including PAD and UNK.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    /// Stored tokens in id order, without PAD/UNK.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        match id {
            PAD_ID => Some("<pad>"),
            UNK_ID => Some("<unk>"),
            _ => self.tokens.get(id - 2).map(String::as_str),
        }
    }

    pub fn df(&self, token: &str) -> Option<u32> {
        self.get(token).map(|id| self.df[id - 2])
    }

    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }
}

/// Keeps tokens with document frequency at least `min_df`, ordered by
/// descending df then token, at most `max_size` ids including PAD and UNK.
pub fn build_vocabulary<S: AsRef<str>>(
    docs: &[Vec<S>],
    min_df: u32,
    max_size: usize,
) -> Vocabulary {
    assert!(min_df >= 1, "min_df must be at least 1");
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(|t| t.as_ref()).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u32)> = df.into_iter().filter(|&(_, n)| n >= min_df).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.truncate(max_size.saturating_sub(2));
    let (tokens, df) = kept.into_iter().map(|(t, n)| (t.to_string(), n)).unzip();
    Vocabulary::from_parts(tokens, df, docs.len() as u32)
}

/// Sparse token-id -> weight map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TfIdfVector(pub BTreeMap<usize, f64>);

impl TfIdfVector {
    pub fn weight(&self, id: usize) -> f64 {
        self.0.get(&id).copied().unwrap_or(0.0)
    }
}

/// `tf(t) * ln(n_docs / df(t))`, no smoothing; out-of-vocabulary tokens are
/// skipped.
pub fn tfidf<S: AsRef<str>>(doc: &[S], vocab: &Vocabulary) -> TfIdfVector {
    let mut tf: BTreeMap<usize, u32> = BTreeMap::new();
    for t in doc {
        if let Some(id) = vocab.get(t.as_ref()) {
            *tf.entry(id).or_default() += 1;
        }
    }
    let n = f64::from(vocab.n_docs);
    TfIdfVector(
        tf.into_iter()
            .map(|(id, count)| {
                let df = f64::from(vocab.df[id - 2]);
                (id, f64::from(count) * (n / df).ln())
            })
            .collect(),
    )
}

/// `rows x dim` row-major matrix; row 0 (PAD) stays zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub rows: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            values: vec![0.0; rows * dim],
        }
    }

    /// Uniform in `[-1/sqrt(dim), 1/sqrt(dim)]`, PAD row zero.
    pub fn random(rows: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (dim.max(1) as f64).sqrt();
        let mut t = Self::zeros(rows, dim);
        for v in t.values.iter_mut().skip(dim) {
            *v = rng.gen_range(-bound..=bound);
        }
        t
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.values[id * self.dim..(id + 1) * self.dim]
    }
}

/// Mean of the rows of `ids`; zero vector for no ids.
pub fn embed_ids(ids: &[usize], table: &EmbeddingTable) -> Vec<f64> {
    let mut out = vec![0.0; table.dim];
    if ids.is_empty() {
        return out;
    }
    for &id in ids {
        for (o, v) in out.iter_mut().zip(table.row(id)) {
            *o += v;
        }
    }
    let n = ids.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Mean-pooled comment vector; unknown tokens use the UNK row.
pub fn embed_comment<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
) -> Vec<f64> {
    embed_ids(&vocab.ids(tokens), table)
}
