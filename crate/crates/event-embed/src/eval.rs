//! Pairwise order prediction and precision/recall/F1 against gold labels,
//! plus the verb-frequency baseline.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::LabeledPair;
use crate::model::{score_event, Event, EventSequence, Lemma, Mode, ModelParams};

/// Confusion counts with the derived precision, recall, and F1. Each ratio is
/// defined as 0 when its denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
            precision,
            recall,
            f1,
        }
    }

    /// The one-line rendering used by the CLI.
    pub fn summary_line(&self) -> String {
        format!(
            "precision={:.4} recall={:.4} f1={:.4} tp={} fp={} fn={} tn={}",
            self.precision,
            self.recall,
            self.f1,
            self.true_positives,
            self.false_positives,
            self.false_negatives,
            self.true_negatives
        )
    }
}

/// Predicts that `first` stereotypically precedes `second`: true exactly when
/// the score of `first` strictly exceeds the score of `second`. Ties predict
/// false, so `predict_pair(a, b)` and `predict_pair(b, a)` are never both
/// true.
pub fn predict_pair(first: &Event, second: &Event, params: &ModelParams, mode: Mode) -> bool {
    score_event(first, params, mode) > score_event(second, params, mode)
}

fn tally(pairs: &[LabeledPair], mut predict: impl FnMut(&LabeledPair) -> bool) -> Metrics {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for pair in pairs {
        match (predict(pair), pair.gold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Metrics::from_counts(tp, fp, fn_, tn)
}

/// Scores every pair with the model and tallies against the gold labels.
pub fn evaluate(pairs: &[LabeledPair], params: &ModelParams, mode: Mode) -> Result<Metrics> {
    if pairs.is_empty() {
        return Err(Error::invalid("no pairs to evaluate"));
    }
    Ok(tally(pairs, |pair| {
        predict_pair(&pair.first, &pair.second, params, mode)
    }))
}

/// Verb-precedence baseline: `counts[(a, b)]` is the number of times
/// predicate `a` occurred before predicate `b` (not necessarily adjacently)
/// across the training ESDs.
#[derive(Debug, Clone)]
pub struct BlModel {
    counts: HashMap<(Lemma, Lemma), u64>,
    seed: u64,
    invocations: u64,
}

/// Counts ordered predicate co-occurrences over all index pairs i < j of
/// every sequence.
pub fn train_bl(corpus: &[EventSequence], seed: u64) -> BlModel {
    let mut counts: HashMap<(Lemma, Lemma), u64> = HashMap::new();
    for seq in corpus {
        for i in 0..seq.events.len() {
            for j in (i + 1)..seq.events.len() {
                let key = (
                    seq.events[i].predicate.clone(),
                    seq.events[j].predicate.clone(),
                );
                *counts.entry(key).or_insert(0) += 1;
            }
        }
    }
    BlModel {
        counts,
        seed,
        invocations: 0,
    }
}

impl BlModel {
    pub fn count(&self, before: &Lemma, after: &Lemma) -> u64 {
        self.counts
            .get(&(before.clone(), after.clone()))
            .copied()
            .unwrap_or(0)
    }

    /// Predicts by comparing verb-precedence counts. Equal counts and equal
    /// verbs fall back to a fair coin drawn from a stream derived from
    /// (seed, invocation index), so a run over the same pairs in the same
    /// order reproduces bitwise.
    pub fn predict_pair(&mut self, first: &Event, second: &Event) -> bool {
        let pair_index = self.invocations;
        self.invocations += 1;
        let v1 = &first.predicate;
        let v2 = &second.predicate;
        if v1 != v2 {
            let forward = self.count(v1, v2);
            let backward = self.count(v2, v1);
            if forward != backward {
                return forward > backward;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(pair_index);
        rng.gen_bool(0.5)
    }

    /// Resets the invocation counter, replaying the coin stream from the
    /// start.
    pub fn reset(&mut self) {
        self.invocations = 0;
    }
}

/// Tallies baseline predictions against the gold labels.
pub fn evaluate_bl(pairs: &[LabeledPair], bl: &mut BlModel) -> Result<Metrics> {
    if pairs.is_empty() {
        return Err(Error::invalid("no pairs to evaluate"));
    }
    Ok(tally(pairs, |pair| {
        bl.predict_pair(&pair.first, &pair.second)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, Dims};
    use std::collections::BTreeSet;

    fn lemma(s: &str) -> Lemma {
        Lemma::new(s).unwrap()
    }

    fn event(pred: &str, args: &[&str]) -> Event {
        Event::new(lemma(pred), args.iter().map(|a| lemma(a)).collect())
    }

    fn seq(preds: &[&str]) -> EventSequence {
        EventSequence {
            scenario: "s".to_string(),
            events: preds.iter().map(|p| event(p, &[])).collect(),
        }
    }

    fn pair(first: Event, second: Event, gold: bool) -> LabeledPair {
        LabeledPair {
            scenario: "s".to_string(),
            first,
            second,
            gold,
        }
    }

    fn any_params(seed: u64) -> ModelParams {
        let vocab: BTreeSet<Lemma> = ["a", "b", "c"].iter().map(|s| lemma(s)).collect();
        let mut params = init_params(Dims::new(3, 3, 3), seed, None, &vocab).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut params.ranking_weights {
            *w = rng.gen_range(-1.0..=1.0);
        }
        params
    }

    #[test]
    fn metrics_definition_arithmetic() {
        let m = Metrics::from_counts(2, 1, 1, 0);
        assert!((m.precision - 0.6667).abs() < 1e-4);
        assert!((m.recall - 0.6667).abs() < 1e-4);
        assert!((m.f1 - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn metrics_zero_denominators() {
        let m = Metrics::from_counts(0, 0, 0, 5);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn summary_line_format() {
        let m = Metrics::from_counts(2, 1, 1, 3);
        assert_eq!(
            m.summary_line(),
            "precision=0.6667 recall=0.6667 f1=0.6667 tp=2 fp=1 fn=1 tn=3"
        );
    }

    #[test]
    fn identical_events_tie_to_false() {
        let params = any_params(0);
        let e = event("a", &["b"]);
        assert!(!predict_pair(&e, &e, &params, Mode::Full));
    }

    #[test]
    fn prediction_is_antisymmetric() {
        let params = any_params(1);
        let e1 = event("a", &["b"]);
        let e2 = event("b", &["c"]);
        if predict_pair(&e1, &e2, &params, Mode::Full) {
            assert!(!predict_pair(&e2, &e1, &params, Mode::Full));
        }
    }

    #[test]
    fn zero_weights_predict_nothing() {
        let vocab: BTreeSet<Lemma> = ["a", "b"].iter().map(|s| lemma(s)).collect();
        let params = init_params(Dims::new(2, 2, 2), 0, None, &vocab).unwrap();
        let pairs = vec![
            pair(event("a", &[]), event("b", &[]), true),
            pair(event("b", &[]), event("a", &[]), false),
        ];
        let m = evaluate(&pairs, &params, Mode::Full).unwrap();
        assert_eq!(m.true_positives, 0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.true_negatives, 1);
    }

    #[test]
    fn evaluate_rejects_empty_pair_list() {
        let params = any_params(2);
        assert!(evaluate(&[], &params, Mode::Full).is_err());
    }

    #[test]
    fn perfect_scores_give_perfect_f1() {
        // Hand-built model whose scores strictly decrease along a latent
        // order of five predicates: embeddings 2, 1, 0, -1, -2 pass through
        // positive transforms and a positive ranking weight, so every gold
        // pair is predicted correctly.
        use crate::model::{EmbeddingTable, Mat};
        let mut table = EmbeddingTable::new(1);
        let preds = ["e0", "e1", "e2", "e3", "e4"];
        for (t, p) in preds.iter().enumerate() {
            table.insert(lemma(p), vec![2.0 - t as f64]).unwrap();
        }
        let params = ModelParams {
            table,
            pred_transform: Mat::from_rows(vec![vec![1.0]]).unwrap(),
            arg_transform: Mat::from_rows(vec![vec![0.0]]).unwrap(),
            event_transform: Mat::from_rows(vec![vec![1.0]]).unwrap(),
            hidden_bias: vec![0.0],
            event_bias: vec![0.0],
            ranking_weights: vec![1.0],
            dims: crate::model::Dims::new(1, 1, 1),
        };
        let mut pairs = Vec::new();
        for a in 0..preds.len() {
            for b in (a + 1)..preds.len() {
                pairs.push(pair(event(preds[a], &[]), event(preds[b], &[]), true));
                pairs.push(pair(event(preds[b], &[]), event(preds[a], &[]), false));
            }
        }
        let m = evaluate(&pairs, &params, Mode::Full).unwrap();
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.false_positives, 0);
        assert_eq!(m.false_negatives, 0);
    }

    #[test]
    fn bl_counts_match_hand_tally() {
        let corpus = [seq(&["a", "b"]), seq(&["a", "b"]), seq(&["b", "a"])];
        let bl = train_bl(&corpus, 0);
        assert_eq!(bl.count(&lemma("a"), &lemma("b")), 2);
        assert_eq!(bl.count(&lemma("b"), &lemma("a")), 1);
    }

    #[test]
    fn bl_counts_include_non_adjacent_pairs() {
        let bl = train_bl(&[seq(&["a", "b", "c"])], 0);
        assert_eq!(bl.count(&lemma("a"), &lemma("b")), 1);
        assert_eq!(bl.count(&lemma("a"), &lemma("c")), 1);
        assert_eq!(bl.count(&lemma("b"), &lemma("c")), 1);
        assert_eq!(bl.count(&lemma("c"), &lemma("a")), 0);
    }

    #[test]
    fn bl_ignores_arguments() {
        let with_args = [EventSequence {
            scenario: "s".to_string(),
            events: vec![event("a", &["x", "y"]), event("b", &["z"])],
        }];
        let bl = train_bl(&with_args, 0);
        assert_eq!(bl.count(&lemma("a"), &lemma("b")), 1);
    }

    #[test]
    fn bl_majority_order_wins() {
        let corpus = [seq(&["a", "b"]), seq(&["a", "b"]), seq(&["b", "a"])];
        let mut bl = train_bl(&corpus, 0);
        assert!(bl.predict_pair(&event("a", &[]), &event("b", &[])));
        assert!(!bl.predict_pair(&event("b", &[]), &event("a", &[])));
    }

    #[test]
    fn bl_coin_is_reproducible() {
        let corpus = [seq(&["a", "b"])];
        let flips = |seed: u64| -> Vec<bool> {
            let mut bl = train_bl(&corpus, seed);
            // Same verb and unseen verbs both go through the coin.
            (0..32)
                .map(|_| bl.predict_pair(&event("a", &[]), &event("a", &[])))
                .collect()
        };
        assert_eq!(flips(7), flips(7));
        assert_ne!(flips(7), flips(8));
        let mut bl = train_bl(&corpus, 7);
        let first: Vec<bool> = (0..8)
            .map(|_| bl.predict_pair(&event("x", &[]), &event("y", &[])))
            .collect();
        bl.reset();
        let second: Vec<bool> = (0..8)
            .map(|_| bl.predict_pair(&event("x", &[]), &event("y", &[])))
            .collect();
        assert_eq!(first, second);
    }

    #[test]
    fn bl_coin_is_roughly_fair() {
        let corpus = [seq(&["a", "b"])];
        let mut bl = train_bl(&corpus, 3);
        let heads = (0..1000)
            .filter(|_| bl.predict_pair(&event("a", &[]), &event("a", &[])))
            .count();
        assert!((400..=600).contains(&heads), "heads={heads}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        const POOL: [&str; 5] = ["go", "fill", "turn", "stir", "pour"];

        fn arb_pairs() -> impl Strategy<Value = Vec<LabeledPair>> {
            proptest::collection::vec((0..POOL.len(), 0..POOL.len(), proptest::bool::ANY), 1..24)
                .prop_map(|raw| {
                    raw.into_iter()
                        .map(|(a, b, gold)| pair(event(POOL[a], &[]), event(POOL[b], &[]), gold))
                        .collect()
                })
        }

        proptest! {
            #[test]
            fn metrics_match_brute_force_tally(
                outcomes in proptest::collection::vec((proptest::bool::ANY, proptest::bool::ANY), 0..64),
            ) {
                let tp = outcomes.iter().filter(|&&(p, g)| p && g).count();
                let fp = outcomes.iter().filter(|&&(p, g)| p && !g).count();
                let fn_ = outcomes.iter().filter(|&&(p, g)| !p && g).count();
                let tn = outcomes.iter().filter(|&&(p, g)| !p && !g).count();
                let m = Metrics::from_counts(tp, fp, fn_, tn);
                let expect_precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
                let expect_recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
                let expect_f1 = if expect_precision + expect_recall == 0.0 {
                    0.0
                } else {
                    2.0 * expect_precision * expect_recall / (expect_precision + expect_recall)
                };
                prop_assert_eq!(m.precision, expect_precision);
                prop_assert_eq!(m.recall, expect_recall);
                prop_assert_eq!(m.f1, expect_f1);
            }

            #[test]
            fn evaluate_is_invariant_under_pair_permutation(
                seed in 0u64..500,
                pairs in arb_pairs().prop_shuffle(),
                rotation in 0usize..8,
            ) {
                let params = any_params(seed);
                let mut rotated = pairs.clone();
                let len = rotated.len().max(1);
                rotated.rotate_left(rotation % len);
                let a = evaluate(&pairs, &params, Mode::Full).unwrap();
                let b = evaluate(&rotated, &params, Mode::Full).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn strict_score_predictions_never_cycle(
                seed in 0u64..500,
                ids in (0..POOL.len(), 0..POOL.len(), 0..POOL.len()),
            ) {
                let params = any_params(seed);
                let (a, b, c) = ids;
                let events = [event(POOL[a], &[]), event(POOL[b], &[]), event(POOL[c], &[])];
                let forward = predict_pair(&events[0], &events[1], &params, Mode::Full)
                    && predict_pair(&events[1], &events[2], &params, Mode::Full)
                    && predict_pair(&events[2], &events[0], &params, Mode::Full);
                let backward = predict_pair(&events[1], &events[0], &params, Mode::Full)
                    && predict_pair(&events[2], &events[1], &params, Mode::Full)
                    && predict_pair(&events[0], &events[2], &params, Mode::Full);
                prop_assert!(!forward && !backward);
            }
        }
    }
}
