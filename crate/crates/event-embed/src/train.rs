//! Online large-margin training of the ranker and the composition network.
//!
//! For each gold-ordered sequence the events are scored, every ordered pair
//! whose score gap falls below the margin counts as a violation, and the
//! margin hinge over the violated pairs is backpropagated through the ranking
//! weights, the event layer, the hidden layer, and the embedding rows that
//! were touched. One SGD step with L2 weight decay is applied per sequence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    dot, forward_trace, score_event, Dims, EventSequence, Mat, Mode, ModelParams, Slot,
};

/// Training configuration. `gamma` is the fixed global margin, `lambda` the
/// L2 weight-decay strength applied to every parameter at each update.
#[derive(Debug, Clone)]
pub struct Hyperparams {
    pub gamma: f64,
    pub eta: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub mode: Mode,
    pub freeze_embeddings: bool,
    pub shuffle: bool,
    pub dims: Dims,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 1.0,
            eta: 0.01,
            lambda: 1e-4,
            epochs: 200,
            seed: 0,
            mode: Mode::Full,
            freeze_embeddings: false,
            shuffle: false,
            dims: Dims::default(),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma must be positive and finite"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta must be positive and finite"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be non-negative and finite"));
        }
        Ok(())
    }
}

/// Gradient blocks, shape-identical to [`ModelParams`]. Embedding rows are
/// index-aligned with the table's vocabulary order; rows never touched by a
/// sequence stay exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: Vec<Vec<f64>>,
    pub unk: Vec<f64>,
    pub pred_transform: Mat,
    pub arg_transform: Mat,
    pub event_transform: Mat,
    pub hidden_bias: Vec<f64>,
    pub event_bias: Vec<f64>,
    pub ranking_weights: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let d = params.dims;
        Gradients {
            embeddings: vec![vec![0.0; d.word]; params.table.len()],
            unk: vec![0.0; d.word],
            pred_transform: Mat::zeros(d.hidden, d.word),
            arg_transform: Mat::zeros(d.hidden, d.word),
            event_transform: Mat::zeros(d.event, d.hidden),
            hidden_bias: vec![0.0; d.hidden],
            event_bias: vec![0.0; d.event],
            ranking_weights: vec![0.0; d.event],
        }
    }

    fn embedding_row_mut(&mut self, slot: Slot) -> &mut [f64] {
        match slot {
            Slot::Word(i) => &mut self.embeddings[i],
            Slot::Unk => &mut self.unk,
        }
    }

    /// True when every component of every block is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.embeddings.iter().flatten().all(|&g| g == 0.0)
            && self.unk.iter().all(|&g| g == 0.0)
            && self.pred_transform.as_slice().iter().all(|&g| g == 0.0)
            && self.arg_transform.as_slice().iter().all(|&g| g == 0.0)
            && self.event_transform.as_slice().iter().all(|&g| g == 0.0)
            && self.hidden_bias.iter().all(|&g| g == 0.0)
            && self.event_bias.iter().all(|&g| g == 0.0)
            && self.ranking_weights.iter().all(|&g| g == 0.0)
    }
}

/// All index pairs `(i, j)` with `i < j` whose score gap `scores[i] -
/// scores[j]` falls below the margin. Indices are 0-based positions in the
/// gold temporal order; each unordered pair is reported once. The violation
/// count is the length of the returned list.
pub fn ranking_violations(scores: &[f64], gamma: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..scores.len() {
        for j in (i + 1)..scores.len() {
            if scores[i] - scores[j] < gamma {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Margin hinge summed over violated pairs: `sum (gamma - (scores[i] -
/// scores[j]))`. Non-negative, and zero exactly when there are no violations.
pub fn sequence_loss(scores: &[f64], gamma: f64) -> f64 {
    ranking_violations(scores, gamma)
        .into_iter()
        .map(|(i, j)| gamma - (scores[i] - scores[j]))
        .sum()
}

/// Scores every event of a sequence, index-aligned with the gold order.
pub fn score_sequence(seq: &EventSequence, params: &ModelParams, mode: Mode) -> Vec<f64> {
    seq.events
        .iter()
        .map(|e| score_event(e, params, mode))
        .collect()
}

/// Hinge loss of a sequence and its exact gradient with respect to every
/// parameter. Sequences shorter than two events produce zero loss and zero
/// gradients. With `freeze_embeddings` set, the embedding blocks are forced
/// to zero while all other blocks are unaffected.
pub fn sequence_gradients(
    seq: &EventSequence,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> (f64, Gradients) {
    let (loss, _, grads) = sequence_backward(seq, params, hyper);
    (loss, grads)
}

fn sequence_backward(
    seq: &EventSequence,
    params: &ModelParams,
    hyper: &Hyperparams,
) -> (f64, usize, Gradients) {
    let mut grads = Gradients::zeros_like(params);
    if seq.events.len() < 2 {
        return (0.0, 0, grads);
    }

    let traces: Vec<_> = seq
        .events
        .iter()
        .map(|e| forward_trace(e, params, hyper.mode))
        .collect();
    let scores: Vec<f64> = traces
        .iter()
        .map(|t| dot(&params.ranking_weights, &t.event))
        .collect();

    let violations = ranking_violations(&scores, hyper.gamma);
    let loss: f64 = violations
        .iter()
        .map(|&(i, j)| hyper.gamma - (scores[i] - scores[j]))
        .sum();

    // d loss / d score_k: each violated pair (i, j) contributes -1 to the
    // earlier event and +1 to the later one.
    let mut score_grads = vec![0.0; scores.len()];
    for &(i, j) in &violations {
        score_grads[i] -= 1.0;
        score_grads[j] += 1.0;
    }

    for (trace, &ds) in traces.iter().zip(&score_grads) {
        if ds == 0.0 {
            continue;
        }
        // score = w . x
        for (gw, &x) in grads.ranking_weights.iter_mut().zip(&trace.event) {
            *gw += ds * x;
        }
        // Through the event sigmoid: d loss / d pre_event.
        let event_delta: Vec<f64> = params
            .ranking_weights
            .iter()
            .zip(&trace.event)
            .map(|(&w, &x)| ds * w * x * (1.0 - x))
            .collect();
        grads
            .event_transform
            .add_outer(&event_delta, &trace.hidden, 1.0);
        for (gb, &d) in grads.event_bias.iter_mut().zip(&event_delta) {
            *gb += d;
        }
        // Through the hidden sigmoid: d loss / d pre_hidden.
        let mut hidden_grad = vec![0.0; trace.hidden.len()];
        params
            .event_transform
            .matvec_transpose_add(&event_delta, &mut hidden_grad);
        let hidden_delta: Vec<f64> = hidden_grad
            .iter()
            .zip(&trace.hidden)
            .map(|(&g, &h)| g * h * (1.0 - h))
            .collect();
        for (gb, &d) in grads.hidden_bias.iter_mut().zip(&hidden_delta) {
            *gb += d;
        }

        let table = &params.table;
        grads
            .pred_transform
            .add_outer(&hidden_delta, table.vector_for_slot(trace.pred_slot), 1.0);
        params
            .pred_transform
            .matvec_transpose_add(&hidden_delta, grads.embedding_row_mut(trace.pred_slot));
        for &slot in &trace.arg_slots {
            grads
                .arg_transform
                .add_outer(&hidden_delta, table.vector_for_slot(slot), 1.0);
            params
                .arg_transform
                .matvec_transpose_add(&hidden_delta, grads.embedding_row_mut(slot));
        }
    }

    if hyper.freeze_embeddings {
        for row in &mut grads.embeddings {
            row.iter_mut().for_each(|g| *g = 0.0);
        }
        grads.unk.iter_mut().for_each(|g| *g = 0.0);
    }

    (loss, violations.len(), grads)
}

/// Central-difference estimate of the loss gradient, one scalar parameter at
/// a time: `(L(p + step) - L(p - step)) / (2 step)`. A verification oracle
/// for [`sequence_gradients`]: it evaluates the loss through the forward pass
/// only and never touches the analytic backward path. Freezing is ignored;
/// the estimate is always the derivative of the loss itself.
pub fn finite_difference_gradients(
    seq: &EventSequence,
    params: &ModelParams,
    hyper: &Hyperparams,
    step: f64,
) -> Gradients {
    assert!(step > 0.0, "step must be positive");
    let loss_of = |p: &ModelParams| -> f64 {
        let scores = score_sequence(seq, p, hyper.mode);
        sequence_loss(&scores, hyper.gamma)
    };

    let mut work = params.clone();
    let central = |work: &mut ModelParams,
                   read: &dyn Fn(&ModelParams) -> f64,
                   write: &dyn Fn(&mut ModelParams, f64)| {
        let original = read(work);
        write(work, original + step);
        let plus = loss_of(work);
        write(work, original - step);
        let minus = loss_of(work);
        write(work, original);
        (plus - minus) / (2.0 * step)
    };

    let mut grads = Gradients::zeros_like(params);
    let word = params.dims.word;
    for row in 0..params.table.len() {
        for k in 0..word {
            grads.embeddings[row][k] = central(&mut work, &|p| p.table.vector(row)[k], &|p, v| {
                p.table.vector_mut(row)[k] = v
            });
        }
    }
    for k in 0..word {
        grads.unk[k] = central(&mut work, &|p| p.table.unk()[k], &|p, v| {
            p.table.unk_mut()[k] = v
        });
    }
    for (idx, g) in grads.pred_transform.as_mut_slice().iter_mut().enumerate() {
        *g = central(&mut work, &|p| p.pred_transform.as_slice()[idx], &|p, v| {
            p.pred_transform.as_mut_slice()[idx] = v
        });
    }
    for (idx, g) in grads.arg_transform.as_mut_slice().iter_mut().enumerate() {
        *g = central(&mut work, &|p| p.arg_transform.as_slice()[idx], &|p, v| {
            p.arg_transform.as_mut_slice()[idx] = v
        });
    }
    for (idx, g) in grads.event_transform.as_mut_slice().iter_mut().enumerate() {
        *g = central(
            &mut work,
            &|p| p.event_transform.as_slice()[idx],
            &|p, v| p.event_transform.as_mut_slice()[idx] = v,
        );
    }
    for (idx, g) in grads.hidden_bias.iter_mut().enumerate() {
        *g = central(&mut work, &|p| p.hidden_bias[idx], &|p, v| {
            p.hidden_bias[idx] = v
        });
    }
    for (idx, g) in grads.event_bias.iter_mut().enumerate() {
        *g = central(&mut work, &|p| p.event_bias[idx], &|p, v| {
            p.event_bias[idx] = v
        });
    }
    for (idx, g) in grads.ranking_weights.iter_mut().enumerate() {
        *g = central(&mut work, &|p| p.ranking_weights[idx], &|p, v| {
            p.ranking_weights[idx] = v
        });
    }
    grads
}

/// One SGD step with L2 weight decay on every scalar:
/// `p <- p - eta * (g + lambda * p)`. Decay applies to all parameter blocks,
/// embeddings, biases, and ranking weights included.
pub fn apply_update(params: &mut ModelParams, grads: &Gradients, eta: f64, lambda: f64) {
    apply_update_with_freeze(params, grads, eta, lambda, false);
}

/// Like [`apply_update`], but with `freeze_embeddings` set the embedding
/// table (unk row included) is left untouched entirely, decay included, so a
/// frozen table stays bitwise fixed over any number of updates.
pub(crate) fn apply_update_with_freeze(
    params: &mut ModelParams,
    grads: &Gradients,
    eta: f64,
    lambda: f64,
    freeze_embeddings: bool,
) {
    let step = |p: &mut f64, g: f64| *p -= eta * (g + lambda * *p);

    if !freeze_embeddings {
        for (row, grow) in (0..params.table.len()).zip(&grads.embeddings) {
            for (p, &g) in params.table.vector_mut(row).iter_mut().zip(grow) {
                step(p, g);
            }
        }
        for (p, &g) in params.table.unk_mut().iter_mut().zip(&grads.unk) {
            step(p, g);
        }
    }
    for (p, &g) in params
        .pred_transform
        .as_mut_slice()
        .iter_mut()
        .zip(grads.pred_transform.as_slice())
    {
        step(p, g);
    }
    for (p, &g) in params
        .arg_transform
        .as_mut_slice()
        .iter_mut()
        .zip(grads.arg_transform.as_slice())
    {
        step(p, g);
    }
    for (p, &g) in params
        .event_transform
        .as_mut_slice()
        .iter_mut()
        .zip(grads.event_transform.as_slice())
    {
        step(p, g);
    }
    for (p, &g) in params.hidden_bias.iter_mut().zip(&grads.hidden_bias) {
        step(p, g);
    }
    for (p, &g) in params.event_bias.iter_mut().zip(&grads.event_bias) {
        step(p, g);
    }
    for (p, &g) in params
        .ranking_weights
        .iter_mut()
        .zip(&grads.ranking_weights)
    {
        step(p, g);
    }
}

/// Per-epoch totals: violations and hinge loss, both measured when each
/// sequence was scored (before its update was applied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub violations: usize,
    pub loss: f64,
}

/// Runs the online training loop: for each epoch, for each sequence in
/// order, score all events, backpropagate the hinge over violated pairs, and
/// apply one regularized update. Deterministic given the seed and the input
/// order; with `shuffle` set, sequence order is re-drawn each epoch from a
/// generator seeded by `hyper.seed`.
pub fn train(
    corpus: &[EventSequence],
    hyper: &Hyperparams,
    init: ModelParams,
) -> Result<(ModelParams, Vec<EpochStats>)> {
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    hyper.validate()?;
    init.validate_shapes()?;
    if init.dims != hyper.dims {
        return Err(Error::invalid(format!(
            "initial parameters have dims {}, hyperparameters say {}",
            init.dims, hyper.dims
        )));
    }

    let mut params = init;
    let mut history = Vec::with_capacity(hyper.epochs);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(hyper.seed);

    for _ in 0..hyper.epochs {
        if hyper.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut stats = EpochStats {
            violations: 0,
            loss: 0.0,
        };
        for &k in &order {
            let seq = &corpus[k];
            let (loss, violations, grads) = sequence_backward(seq, &params, hyper);
            stats.violations += violations;
            stats.loss += loss;
            apply_update_with_freeze(
                &mut params,
                &grads,
                hyper.eta,
                hyper.lambda,
                hyper.freeze_embeddings,
            );
        }
        history.push(stats);
    }
    Ok((params, history))
}
