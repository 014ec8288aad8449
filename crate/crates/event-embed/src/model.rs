//! Event representations and the forward pass.
//!
//! An event is a predicate lemma plus the head lemmas of its arguments. Its
//! vector representation is computed compositionally: word embeddings are
//! linearly transformed (one matrix for the predicate, another shared by all
//! arguments), summed, and squashed twice:
//!
//! ```text
//! hidden = sigmoid(pred_transform * c(pred) + sum_k arg_transform * c(arg_k) + hidden_bias)
//! event  = sigmoid(event_transform * hidden + event_bias)
//! score  = ranking_weights . event
//! ```
//!
//! Ordering two events reduces to comparing their scalar scores, which makes
//! the induced pairwise relation transitive and acyclic by construction.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Logistic sigmoid. Saturates cleanly at extreme inputs instead of
/// overflowing: `exp(-z)` underflows to 0 for large `z` and the negative
/// branch is rewritten so `exp(z)` never overflows either.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A lower-cased token. Construction folds case and rejects empty strings and
/// whitespace, so two lemmas are equal exactly when their folded bytes match.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lemma(String);

impl Lemma {
    pub fn new(text: &str) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::invalid("empty lemma"));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!(
                "lemma {text:?} contains whitespace"
            )));
        }
        Ok(Lemma(text.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A predicate with the head lemmas of its arguments, in input order.
/// Duplicate argument lemmas are kept; each occurrence contributes its own
/// term to the composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub predicate: Lemma,
    pub args: Vec<Lemma>,
}

impl Event {
    pub fn new(predicate: Lemma, args: Vec<Lemma>) -> Self {
        Event { predicate, args }
    }

    /// Parses one event from tab-separated tokens: predicate first, then
    /// argument heads.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut lemmas = tokens
            .into_iter()
            .map(Lemma::new)
            .collect::<Result<Vec<_>>>()?;
        if lemmas.is_empty() {
            return Err(Error::invalid("event has no predicate"));
        }
        let args = lemmas.split_off(1);
        Ok(Event::new(lemmas.pop().expect("nonempty"), args))
    }

    /// Renders the event back to corpus line syntax (tab-separated tokens).
    pub fn to_line(&self) -> String {
        let mut line = self.predicate.as_str().to_string();
        for arg in &self.args {
            line.push('\t');
            line.push_str(arg.as_str());
        }
        line
    }
}

/// One annotator's ordered description of a scenario: the order of `events`
/// is the gold temporal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSequence {
    pub scenario: String,
    pub events: Vec<Event>,
}

/// Layer dimensionalities: word embedding width, hidden layer width, and
/// event representation width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub word: usize,
    pub hidden: usize,
    pub event: usize,
}

impl Dims {
    pub fn new(word: usize, hidden: usize, event: usize) -> Self {
        Dims {
            word,
            hidden,
            event,
        }
    }
}

impl Default for Dims {
    fn default() -> Self {
        Dims::new(50, 50, 50)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.word, self.hidden, self.event)
    }
}

/// Whether composition uses the full predicate-argument structure or the
/// predicate alone (the verb-only ablation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Full,
    VerbOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::VerbOnly => "verb",
        }
    }
}

/// Where a lemma resolved inside an [`EmbeddingTable`]: a vocabulary row or
/// the shared unknown-word vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Word(usize),
    Unk,
}

/// Word embedding table with a dedicated fallback vector for out-of-vocabulary
/// lemmas. Vocabulary order is preserved so serialization round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    lemmas: Vec<Lemma>,
    index: HashMap<Lemma, usize>,
    vectors: Vec<Vec<f64>>,
    unk: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            lemmas: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            unk: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn insert(&mut self, lemma: Lemma, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector for {lemma:?} has length {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if self.index.contains_key(&lemma) {
            return Err(Error::invalid(format!("duplicate lemma {lemma:?}")));
        }
        self.index.insert(lemma.clone(), self.lemmas.len());
        self.lemmas.push(lemma);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn contains(&self, lemma: &Lemma) -> bool {
        self.index.contains_key(lemma)
    }

    /// Resolves a lemma to its stored vector, falling back to the unknown-word
    /// vector when absent.
    pub fn lookup(&self, lemma: &Lemma) -> &[f64] {
        match self.slot(lemma) {
            Slot::Word(i) => &self.vectors[i],
            Slot::Unk => &self.unk,
        }
    }

    pub fn slot(&self, lemma: &Lemma) -> Slot {
        match self.index.get(lemma) {
            Some(&i) => Slot::Word(i),
            None => Slot::Unk,
        }
    }

    pub fn vector_for_slot(&self, slot: Slot) -> &[f64] {
        match slot {
            Slot::Word(i) => &self.vectors[i],
            Slot::Unk => &self.unk,
        }
    }

    pub fn get(&self, lemma: &Lemma) -> Option<&[f64]> {
        self.index.get(lemma).map(|&i| self.vectors[i].as_slice())
    }

    /// Vocabulary in insertion order, paired with each vector.
    pub fn iter(&self) -> impl Iterator<Item = (&Lemma, &[f64])> {
        self.lemmas
            .iter()
            .zip(self.vectors.iter().map(Vec::as_slice))
    }

    pub fn lemmas(&self) -> &[Lemma] {
        &self.lemmas
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.vectors[row]
    }

    pub fn vector_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.vectors[row]
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }

    pub fn unk_mut(&mut self) -> &mut [f64] {
        &mut self.unk
    }

    pub fn set_unk(&mut self, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "unk vector has length {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        self.unk = vector;
        Ok(())
    }

    /// Sets the unknown-word vector to the componentwise mean of all stored
    /// vectors (zero when the table is empty).
    pub fn set_unk_to_mean(&mut self) {
        let mut mean = vec![0.0; self.dim];
        if self.vectors.is_empty() {
            self.unk = mean;
            return;
        }
        for vector in &self.vectors {
            for (m, v) in mean.iter_mut().zip(vector) {
                *m += v;
            }
        }
        let n = self.vectors.len() as f64;
        for m in &mut mean {
            *m /= n;
        }
        self.unk = mean;
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in &rows {
            if row.len() != ncols {
                return Err(Error::invalid("ragged matrix rows"));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `out += self * x`
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (r, v) in row.iter().zip(x) {
                acc += r * v;
            }
            *o += acc;
        }
    }

    /// `out += self^T * x`
    pub fn matvec_transpose_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (i, xi) in x.iter().enumerate() {
            let row = self.row(i);
            for (o, r) in out.iter_mut().zip(row) {
                *o += xi * r;
            }
        }
    }

    /// Rank-1 update `self += scale * (u ⊗ v)`.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64], scale: f64) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, ui) in u.iter().enumerate() {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, vj) in row.iter_mut().zip(v) {
                *r += scale * ui * vj;
            }
        }
    }
}

/// Everything the model learns: the embedding table, the three transforms,
/// both biases, and the ranking weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub table: EmbeddingTable,
    /// hidden x word transform applied to the predicate embedding.
    pub pred_transform: Mat,
    /// hidden x word transform shared by every argument embedding.
    pub arg_transform: Mat,
    /// event x hidden transform producing the event representation.
    pub event_transform: Mat,
    pub hidden_bias: Vec<f64>,
    pub event_bias: Vec<f64>,
    pub ranking_weights: Vec<f64>,
    pub dims: Dims,
}

impl ModelParams {
    /// Checks that every block has the shape announced by `dims`.
    pub fn validate_shapes(&self) -> Result<()> {
        let Dims {
            word,
            hidden,
            event,
        } = self.dims;
        let checks = [
            (self.table.dim() == word, "embedding width"),
            (
                self.pred_transform.rows() == hidden && self.pred_transform.cols() == word,
                "predicate transform shape",
            ),
            (
                self.arg_transform.rows() == hidden && self.arg_transform.cols() == word,
                "argument transform shape",
            ),
            (
                self.event_transform.rows() == event && self.event_transform.cols() == hidden,
                "event transform shape",
            ),
            (self.hidden_bias.len() == hidden, "hidden bias length"),
            (self.event_bias.len() == event, "event bias length"),
            (
                self.ranking_weights.len() == event,
                "ranking weights length",
            ),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::invalid(format!("inconsistent {what}")));
            }
        }
        Ok(())
    }
}

/// An event representation: every component lies strictly in (0, 1) because
/// the final layer is a sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct EventVector(Vec<f64>);

impl EventVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

/// Intermediate activations kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct ForwardTrace {
    pub pred_slot: Slot,
    pub arg_slots: Vec<Slot>,
    pub hidden: Vec<f64>,
    pub event: Vec<f64>,
}

pub(crate) fn forward_trace(event: &Event, params: &ModelParams, mode: Mode) -> ForwardTrace {
    let table = &params.table;
    let pred_slot = table.slot(&event.predicate);
    let arg_slots: Vec<Slot> = match mode {
        Mode::Full => event.args.iter().map(|a| table.slot(a)).collect(),
        Mode::VerbOnly => Vec::new(),
    };

    let mut pre_hidden = params.hidden_bias.clone();
    params
        .pred_transform
        .matvec_add(table.vector_for_slot(pred_slot), &mut pre_hidden);
    for &slot in &arg_slots {
        params
            .arg_transform
            .matvec_add(table.vector_for_slot(slot), &mut pre_hidden);
    }
    let hidden: Vec<f64> = pre_hidden.into_iter().map(sigmoid).collect();

    let mut pre_event = params.event_bias.clone();
    params.event_transform.matvec_add(&hidden, &mut pre_event);
    let event_vec: Vec<f64> = pre_event.into_iter().map(sigmoid).collect();

    ForwardTrace {
        pred_slot,
        arg_slots,
        hidden,
        event: event_vec,
    }
}

/// Computes the event representation. In [`Mode::VerbOnly`] the arguments are
/// discarded and the hidden layer sees only the predicate term plus bias.
pub fn embed_event(event: &Event, params: &ModelParams, mode: Mode) -> EventVector {
    EventVector(forward_trace(event, params, mode).event)
}

/// Ranking score of an event: the dot product of the ranking weights with its
/// representation.
pub fn score_event(event: &Event, params: &ModelParams, mode: Mode) -> f64 {
    let x = forward_trace(event, params, mode).event;
    dot(&params.ranking_weights, &x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds the initial parameters for a vocabulary.
///
/// Embeddings are copied from `pretrained` where the lemma is present and
/// drawn uniformly from [-0.1, 0.1] otherwise; the unknown-word vector is the
/// mean of all initialized rows. Transform matrices are drawn uniformly from
/// [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases and ranking weights start at
/// zero. The same seed always yields bitwise-identical parameters: the
/// vocabulary is laid out in sorted order and random draws happen in a fixed
/// sequence (embeddings, then the predicate, argument, and event transforms).
pub fn init_params(
    dims: Dims,
    seed: u64,
    pretrained: Option<&EmbeddingTable>,
    vocab: &BTreeSet<Lemma>,
) -> Result<ModelParams> {
    if dims.word == 0 || dims.hidden == 0 || dims.event == 0 {
        return Err(Error::invalid("dimensions must be positive"));
    }
    if let Some(table) = pretrained {
        if table.dim() != dims.word {
            return Err(Error::invalid(format!(
                "pretrained embeddings have width {}, expected {}",
                table.dim(),
                dims.word
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new(dims.word);
    for lemma in vocab {
        let vector = match pretrained.and_then(|t| t.get(lemma)) {
            Some(v) => v.to_vec(),
            None => (0..dims.word).map(|_| rng.gen_range(-0.1..=0.1)).collect(),
        };
        table.insert(lemma.clone(), vector)?;
    }
    table.set_unk_to_mean();

    let mut draw_mat = |rows: usize, cols: usize| {
        let bound = 1.0 / (cols as f64).sqrt();
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        Mat { rows, cols, data }
    };
    let pred_transform = draw_mat(dims.hidden, dims.word);
    let arg_transform = draw_mat(dims.hidden, dims.word);
    let event_transform = draw_mat(dims.event, dims.hidden);

    Ok(ModelParams {
        table,
        pred_transform,
        arg_transform,
        event_transform,
        hidden_bias: vec![0.0; dims.hidden],
        event_bias: vec![0.0; dims.event],
        ranking_weights: vec![0.0; dims.event],
        dims,
    })
}
