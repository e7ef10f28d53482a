//! Token-encoder profiles behind one contract.
//!
//! Three profiles cover the desk-scale needs without downloading weights:
//! a deterministic hash-based stub for unit tests, a trainable-then-frozen
//! table encoder (hash-bucket vocabulary), and the same table encoder
//! driven by an explicit vocabulary loaded from a checkpoint file.

use crate::nn::layers::GraphBuilder;
use crate::nn::params::{fnv1a, Init, ParamStore};
use crate::nn::tape::Var;
use crate::textenc::blocks::positional_encoding;
use crate::textenc::TextEncodeError;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Mutex;

pub const START_TOKEN: &str = "[S]";
pub const END_TOKEN: &str = "[E]";

/// One encoded text: token rows (including `[S]`/`[E]`), marker positions,
/// and whether the context limit truncated the input.
#[derive(Debug, Clone)]
pub struct TokenEncoding {
    pub rows: Array2<f64>,
    pub s_index: usize,
    pub e_index: usize,
    pub truncated: bool,
}

/// Lowercased word/punctuation tokens.
pub fn tokenize_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let mut word = raw.to_lowercase();
        let mut trailing = Vec::new();
        while let Some(last) = word.chars().last() {
            if ".,!?;:()\"'".contains(last) {
                trailing.push(last.to_string());
                word.pop();
            } else {
                break;
            }
        }
        while let Some(first) = word.chars().next() {
            if "(\"'".contains(first) {
                out.push(first.to_string());
                word.remove(0);
            } else {
                break;
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

/// Frozen-by-default token encoder contract.
pub trait TokenEncoder {
    fn d_model(&self) -> usize;
    fn max_tokens(&self) -> usize;
    fn frozen(&self) -> bool {
        true
    }
    /// Name of the embedding-table parameter, when table-backed.
    fn table_param(&self) -> Option<&str> {
        None
    }
    /// Registers this profile's parameters (if any).
    fn init_params(&self, _store: &mut ParamStore, _seed: u64) {}
    /// Plain (inference) encoding.
    fn encode(&self, store: &ParamStore, text: &str) -> Result<TokenEncoding, TextEncodeError>;
    /// Tape encoding: the returned node carries gradients into the table
    /// when the profile is table-backed and not frozen by the caller.
    fn encode_on_graph(
        &self,
        g: &mut GraphBuilder<'_>,
        text: &str,
    ) -> Result<(Var, TokenEncoding), TextEncodeError>;
}

fn wrap_tokens(text: &str, max_tokens: usize) -> (Vec<String>, bool) {
    let mut words = tokenize_words(text);
    let budget = max_tokens.saturating_sub(2);
    let truncated = words.len() > budget;
    words.truncate(budget);
    let mut tokens = Vec::with_capacity(words.len() + 2);
    tokens.push(START_TOKEN.to_string());
    tokens.extend(words);
    tokens.push(END_TOKEN.to_string());
    (tokens, truncated)
}

/// Deterministic hash-based stub: each token's row is a pure function of
/// its text. No parameters, no position information.
#[derive(Debug, Clone)]
pub struct HashStubEncoder {
    pub d_model: usize,
    pub max_tokens: usize,
}

impl HashStubEncoder {
    pub fn new(d_model: usize, max_tokens: usize) -> Self {
        Self { d_model, max_tokens }
    }

    pub fn token_row(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()));
        (0..self.d_model).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn encoding(&self, text: &str) -> TokenEncoding {
        let (tokens, truncated) = wrap_tokens(text, self.max_tokens);
        let mut rows = Array2::zeros((tokens.len(), self.d_model));
        for (i, tok) in tokens.iter().enumerate() {
            let row = self.token_row(tok);
            for (c, v) in row.into_iter().enumerate() {
                rows[(i, c)] = v;
            }
        }
        TokenEncoding { s_index: 0, e_index: tokens.len() - 1, truncated, rows }
    }
}

impl TokenEncoder for HashStubEncoder {
    fn d_model(&self) -> usize {
        self.d_model
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn encode(&self, _store: &ParamStore, text: &str) -> Result<TokenEncoding, TextEncodeError> {
        Ok(self.encoding(text))
    }

    fn encode_on_graph(
        &self,
        g: &mut GraphBuilder<'_>,
        text: &str,
    ) -> Result<(Var, TokenEncoding), TextEncodeError> {
        let enc = self.encoding(text);
        let var = g.c(enc.rows.clone());
        Ok((var, enc))
    }
}

/// Vocabulary strategy for [`TableEncoder`].
#[derive(Debug, Clone)]
pub enum Vocab {
    /// Words hash into `buckets` ids; collisions are accepted.
    Hash { buckets: usize },
    /// Explicit word map (e.g. loaded from checkpoint metadata); unknown
    /// words share one reserved id.
    Explicit(BTreeMap<String, usize>),
}

/// Embedding-table encoder: row lookup plus sinusoidal position content,
/// so `[E]` depends on where it lands. This is the trainable-then-frozen
/// profile; a checkpoint-backed table makes it the pretrained profile.
#[derive(Debug, Clone)]
pub struct TableEncoder {
    pub d_model: usize,
    pub max_tokens: usize,
    pub vocab: Vocab,
    pub param_name: String,
    pub frozen: bool,
}

const ID_START: usize = 0;
const ID_END: usize = 1;
const ID_UNK: usize = 2;
const RESERVED: usize = 3;

impl TableEncoder {
    pub fn toy(d_model: usize, max_tokens: usize, buckets: usize) -> Self {
        Self {
            d_model,
            max_tokens,
            vocab: Vocab::Hash { buckets },
            param_name: "tok.embed".into(),
            frozen: true,
        }
    }

    pub fn with_vocab(d_model: usize, max_tokens: usize, vocab: BTreeMap<String, usize>) -> Self {
        Self {
            d_model,
            max_tokens,
            vocab: Vocab::Explicit(vocab),
            param_name: "tok.embed".into(),
            frozen: true,
        }
    }

    pub fn table_rows(&self) -> usize {
        match &self.vocab {
            Vocab::Hash { buckets } => RESERVED + buckets,
            Vocab::Explicit(map) => {
                RESERVED + map.values().copied().max().map_or(0, |m| m + 1)
            }
        }
    }

    fn token_id(&self, token: &str) -> usize {
        if token == START_TOKEN {
            return ID_START;
        }
        if token == END_TOKEN {
            return ID_END;
        }
        match &self.vocab {
            Vocab::Hash { buckets } => RESERVED + (fnv1a(token.as_bytes()) as usize) % buckets,
            Vocab::Explicit(map) => map.get(token).map_or(ID_UNK, |id| RESERVED + id),
        }
    }

    pub fn token_ids(&self, text: &str) -> (Vec<usize>, bool) {
        let (tokens, truncated) = wrap_tokens(text, self.max_tokens);
        (tokens.iter().map(|t| self.token_id(t)).collect(), truncated)
    }
}

impl TokenEncoder for TableEncoder {
    fn d_model(&self) -> usize {
        self.d_model
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn frozen(&self) -> bool {
        self.frozen
    }

    fn table_param(&self) -> Option<&str> {
        Some(&self.param_name)
    }

    fn init_params(&self, store: &mut ParamStore, seed: u64) {
        store.init(&self.param_name, self.table_rows(), self.d_model, Init::Normal(0.3), seed);
    }

    fn encode(&self, store: &ParamStore, text: &str) -> Result<TokenEncoding, TextEncodeError> {
        let (ids, truncated) = self.token_ids(text);
        let table = store.get(&self.param_name);
        let pe = positional_encoding(ids.len(), self.d_model)?;
        let mut rows = Array2::zeros((ids.len(), self.d_model));
        for (i, &id) in ids.iter().enumerate() {
            for c in 0..self.d_model {
                rows[(i, c)] = table[(id, c)] + pe[(i, c)];
            }
        }
        Ok(TokenEncoding { s_index: 0, e_index: ids.len() - 1, truncated, rows })
    }

    fn encode_on_graph(
        &self,
        g: &mut GraphBuilder<'_>,
        text: &str,
    ) -> Result<(Var, TokenEncoding), TextEncodeError> {
        let (ids, truncated) = self.token_ids(text);
        let pe = positional_encoding(ids.len(), self.d_model)?;
        let table = g.p(&self.param_name);
        let gathered = g.tape.gather(table, &ids);
        let pe_var = g.c(pe);
        let rows = g.tape.add(gathered, pe_var);
        let enc = TokenEncoding {
            s_index: 0,
            e_index: ids.len() - 1,
            truncated,
            rows: g.tape.value(rows).clone(),
        };
        Ok((rows, enc))
    }
}

/// Instrumentation wrapper: records every text the inner encoder sees.
pub struct RecordingEncoder<E> {
    pub inner: E,
    texts: Mutex<Vec<String>>,
}

impl<E> RecordingEncoder<E> {
    pub fn new(inner: E) -> Self {
        Self { inner, texts: Mutex::new(Vec::new()) }
    }

    pub fn seen(&self) -> Vec<String> {
        self.texts.lock().unwrap().clone()
    }

    pub fn clear(&self) {
        self.texts.lock().unwrap().clear();
    }
}

impl<E: TokenEncoder> TokenEncoder for RecordingEncoder<E> {
    fn d_model(&self) -> usize {
        self.inner.d_model()
    }

    fn max_tokens(&self) -> usize {
        self.inner.max_tokens()
    }

    fn frozen(&self) -> bool {
        self.inner.frozen()
    }

    fn table_param(&self) -> Option<&str> {
        self.inner.table_param()
    }

    fn init_params(&self, store: &mut ParamStore, seed: u64) {
        self.inner.init_params(store, seed);
    }

    fn encode(&self, store: &ParamStore, text: &str) -> Result<TokenEncoding, TextEncodeError> {
        self.texts.lock().unwrap().push(text.to_string());
        self.inner.encode(store, text)
    }

    fn encode_on_graph(
        &self,
        g: &mut GraphBuilder<'_>,
        text: &str,
    ) -> Result<(Var, TokenEncoding), TextEncodeError> {
        self.texts.lock().unwrap().push(text.to_string());
        self.inner.encode_on_graph(g, text)
    }
}
