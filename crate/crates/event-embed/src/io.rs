//! Text formats: ESD corpora, pretrained embeddings, labeled evaluation
//! pairs, and model files.
//!
//! Corpus format: a scenario starts with a line `#scenario <id>`; each event
//! is one line of tab-separated tokens (predicate first, then argument
//! heads); a blank line terminates an ESD; a new header or end of input
//! terminates the scenario. Tokens are case-folded while parsing.
//!
//! Pairs format: one pair per line, four tab-separated fields — scenario id,
//! event 1, event 2, label (1 when event 1 stereotypically precedes event 2,
//! else 0). Within an event field, tokens are single-space separated.
//!
//! Embeddings format: one lemma per line followed by its vector components,
//! whitespace separated; the width is inferred from the first line.
//!
//! All parsers reject malformed input with the offending 1-based line number
//! instead of repairing it. Model files render reals via the shortest
//! round-trip decimal form, so read(write(params)) is bitwise identity.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Dims, EmbeddingTable, Event, EventSequence, Lemma, Mat, ModelParams};

const MODEL_MAGIC: &str = "EEMODEL v1";

/// Scenario-keyed collection of event sequences, preserving both scenario
/// order of first appearance and sequence order within each scenario.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    names: Vec<String>,
    index: HashMap<String, usize>,
    sequences: Vec<Vec<EventSequence>>,
}

impl Corpus {
    pub fn new() -> Self {
        Corpus::default()
    }

    /// Registers a scenario (idempotent) and returns its position.
    pub fn add_scenario(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.names.len();
        self.names.push(id.to_string());
        self.index.insert(id.to_string(), i);
        self.sequences.push(Vec::new());
        i
    }

    pub fn push_sequence(&mut self, seq: EventSequence) {
        let i = self.add_scenario(&seq.scenario);
        self.sequences[i].push(seq);
    }

    pub fn scenarios(&self) -> impl Iterator<Item = (&str, &[EventSequence])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.sequences.iter().map(Vec::as_slice))
    }

    pub fn get(&self, id: &str) -> Option<&[EventSequence]> {
        self.index.get(id).map(|&i| self.sequences[i].as_slice())
    }

    /// Every sequence in file order, scenarios flattened.
    pub fn all_sequences(&self) -> Vec<EventSequence> {
        self.sequences.iter().flatten().cloned().collect()
    }

    pub fn num_sequences(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_sequences() == 0
    }

    /// All distinct lemmas (predicates and arguments), sorted.
    pub fn vocabulary(&self) -> std::collections::BTreeSet<Lemma> {
        let mut vocab = std::collections::BTreeSet::new();
        for seqs in &self.sequences {
            for seq in seqs {
                for event in &seq.events {
                    vocab.insert(event.predicate.clone());
                    vocab.extend(event.args.iter().cloned());
                }
            }
        }
        vocab
    }
}

fn strip_cr(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

pub fn parse_corpus(input: &str) -> Result<Corpus> {
    let mut corpus = Corpus::new();
    let mut scenario: Option<String> = None;
    let mut open_esd: Vec<Event> = Vec::new();

    let flush = |corpus: &mut Corpus, scenario: &Option<String>, open_esd: &mut Vec<Event>| {
        if !open_esd.is_empty() {
            corpus.push_sequence(EventSequence {
                scenario: scenario
                    .clone()
                    .expect("events only collect inside a scenario"),
                events: std::mem::take(open_esd),
            });
        }
    };

    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_cr(raw);
        if line.trim().is_empty() {
            flush(&mut corpus, &scenario, &mut open_esd);
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let id = rest
                .strip_prefix("scenario")
                .filter(|r| r.starts_with(char::is_whitespace))
                .map(str::trim)
                .filter(|id| !id.is_empty())
                .ok_or_else(|| Error::parse(line_no, format!("malformed header {line:?}")))?;
            if id.contains('\t') {
                return Err(Error::parse(line_no, "scenario id contains a tab"));
            }
            flush(&mut corpus, &scenario, &mut open_esd);
            corpus.add_scenario(id);
            scenario = Some(id.to_string());
            continue;
        }
        if scenario.is_none() {
            return Err(Error::parse(line_no, "event outside scenario"));
        }
        let event = Event::from_tokens(line.split('\t'))
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        open_esd.push(event);
    }
    flush(&mut corpus, &scenario, &mut open_esd);
    Ok(corpus)
}

pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (id, seqs) in corpus.scenarios() {
        out.push_str("#scenario ");
        out.push_str(id);
        out.push('\n');
        for seq in seqs {
            for event in &seq.events {
                out.push_str(&event.to_line());
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

fn parse_reals(line_no: usize, fields: impl Iterator<Item = impl AsRef<str>>) -> Result<Vec<f64>> {
    fields
        .map(|f| {
            let f = f.as_ref();
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("non-numeric field {f:?}")))
        })
        .collect()
}

pub fn parse_embeddings(input: &str) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_cr(raw);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let lemma = Lemma::new(fields.next().expect("nonempty line"))
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let vector = parse_reals(line_no, fields)?;
        if vector.is_empty() {
            return Err(Error::parse(line_no, "no vector components"));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
        if vector.len() != table.dim() {
            return Err(Error::parse(
                line_no,
                format!(
                    "vector has {} components, expected {}",
                    vector.len(),
                    table.dim()
                ),
            ));
        }
        if table.contains(&lemma) {
            return Err(Error::parse(line_no, format!("duplicate lemma {lemma:?}")));
        }
        table.insert(lemma, vector).expect("checked width");
    }
    let mut table = table.ok_or_else(|| Error::invalid("empty embeddings input"))?;
    table.set_unk_to_mean();
    Ok(table)
}

pub fn write_embeddings(table: &EmbeddingTable) -> String {
    let mut out = String::new();
    for (lemma, vector) in table.iter() {
        out.push_str(lemma.as_str());
        for v in vector {
            out.push(' ');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// An evaluation pair with its gold order: `gold` is true exactly when
/// `first` stereotypically precedes `second`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair {
    pub scenario: String,
    pub first: Event,
    pub second: Event,
    pub gold: bool,
}

fn parse_event_field(line_no: usize, field: &str) -> Result<Event> {
    if field.split(' ').any(str::is_empty) {
        return Err(Error::parse(
            line_no,
            format!("empty token in event field {field:?}"),
        ));
    }
    Event::from_tokens(field.split(' ')).map_err(|e| Error::parse(line_no, e.to_string()))
}

pub fn parse_pairs(input: &str) -> Result<Vec<LabeledPair>> {
    let mut pairs = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_cr(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        if fields[0].is_empty() {
            return Err(Error::parse(line_no, "empty scenario id"));
        }
        let first = parse_event_field(line_no, fields[1])?;
        let second = parse_event_field(line_no, fields[2])?;
        let gold = match fields[3] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("label must be 0 or 1, found {other:?}"),
                ))
            }
        };
        pairs.push(LabeledPair {
            scenario: fields[0].to_string(),
            first,
            second,
            gold,
        });
    }
    Ok(pairs)
}

fn event_field(event: &Event) -> String {
    let mut s = event.predicate.as_str().to_string();
    for arg in &event.args {
        s.push(' ');
        s.push_str(arg.as_str());
    }
    s
}

pub fn write_pairs(pairs: &[LabeledPair]) -> String {
    let mut out = String::new();
    for pair in pairs {
        out.push_str(&pair.scenario);
        out.push('\t');
        out.push_str(&event_field(&pair.first));
        out.push('\t');
        out.push_str(&event_field(&pair.second));
        out.push('\t');
        out.push(if pair.gold { '1' } else { '0' });
        out.push('\n');
    }
    out
}

fn push_row(out: &mut String, row: &[f64]) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        out.push_str(&v.to_string());
        first = false;
    }
    out.push('\n');
}

pub fn write_model(params: &ModelParams) -> String {
    let Dims {
        word,
        hidden,
        event,
    } = params.dims;
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    out.push_str(&format!("dims {word} {hidden} {event}\n"));
    out.push_str(&format!("vocab {}\n", params.table.len()));
    for (lemma, vector) in params.table.iter() {
        out.push_str(lemma.as_str());
        out.push(' ');
        push_row(&mut out, vector);
    }
    out.push_str("unk ");
    push_row(&mut out, params.table.unk());
    for (label, mat) in [
        ("R", &params.pred_transform),
        ("T", &params.arg_transform),
        ("A", &params.event_transform),
    ] {
        out.push_str(label);
        out.push('\n');
        for i in 0..mat.rows() {
            push_row(&mut out, mat.row(i));
        }
    }
    for (label, vector) in [
        ("b_h", &params.hidden_bias),
        ("b_x", &params.event_bias),
        ("w", &params.ranking_weights),
    ] {
        out.push_str(label);
        out.push('\n');
        push_row(&mut out, vector);
    }
    out
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn new(input: &'a str) -> Self {
        LineReader {
            lines: input.lines(),
            line_no: 0,
        }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some(line) => {
                self.line_no += 1;
                Ok((self.line_no, strip_cr(line)))
            }
            None => Err(Error::parse(self.line_no + 1, "unexpected end of input")),
        }
    }

    fn expect_label(&mut self, label: &str) -> Result<()> {
        let (line_no, line) = self.next()?;
        if line != label {
            return Err(Error::parse(
                line_no,
                format!("expected {label:?}, found {line:?}"),
            ));
        }
        Ok(())
    }

    fn row(&mut self, len: usize) -> Result<Vec<f64>> {
        let (line_no, line) = self.next()?;
        let row = parse_reals(line_no, line.split_whitespace())?;
        if row.len() != len {
            return Err(Error::parse(
                line_no,
                format!("expected {len} values, found {}", row.len()),
            ));
        }
        Ok(row)
    }

    fn mat(&mut self, label: &str, rows: usize, cols: usize) -> Result<Mat> {
        self.expect_label(label)?;
        let mut data = Vec::with_capacity(rows);
        for _ in 0..rows {
            data.push(self.row(cols)?);
        }
        Mat::from_rows(data)
    }
}

pub fn read_model(input: &str) -> Result<ModelParams> {
    let mut reader = LineReader::new(input);

    let (line_no, magic) = reader.next()?;
    if magic != MODEL_MAGIC {
        return Err(Error::parse(line_no, format!("bad magic line {magic:?}")));
    }

    let (line_no, dims_line) = reader.next()?;
    let dims = match dims_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["dims", d, h, e] => {
            let parse = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .ok()
                    .filter(|&v| v > 0)
                    .ok_or_else(|| Error::parse(line_no, format!("bad dimension {s:?}")))
            };
            Dims::new(parse(d)?, parse(h)?, parse(e)?)
        }
        _ => return Err(Error::parse(line_no, "expected \"dims <d> <h> <e>\"")),
    };

    let (line_no, vocab_line) = reader.next()?;
    let vocab_len = match vocab_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["vocab", n] => n
            .parse::<usize>()
            .map_err(|_| Error::parse(line_no, format!("bad vocabulary size {n:?}")))?,
        _ => return Err(Error::parse(line_no, "expected \"vocab <n>\"")),
    };

    let mut table = EmbeddingTable::new(dims.word);
    for _ in 0..vocab_len {
        let (line_no, line) = reader.next()?;
        let mut fields = line.split_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| Error::parse(line_no, "empty vocabulary line"))?;
        let lemma = Lemma::new(token).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let vector = parse_reals(line_no, fields)?;
        if vector.len() != dims.word {
            return Err(Error::parse(
                line_no,
                format!("expected {} values, found {}", dims.word, vector.len()),
            ));
        }
        table
            .insert(lemma, vector)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }

    let (line_no, unk_line) = reader.next()?;
    let mut fields = unk_line.split_whitespace();
    if fields.next() != Some("unk") {
        return Err(Error::parse(line_no, "expected \"unk <values>\""));
    }
    let unk = parse_reals(line_no, fields)?;
    if unk.len() != dims.word {
        return Err(Error::parse(
            line_no,
            format!("expected {} values, found {}", dims.word, unk.len()),
        ));
    }
    table
        .set_unk(unk)
        .map_err(|e| Error::parse(line_no, e.to_string()))?;

    let pred_transform = reader.mat("R", dims.hidden, dims.word)?;
    let arg_transform = reader.mat("T", dims.hidden, dims.word)?;
    let event_transform = reader.mat("A", dims.event, dims.hidden)?;
    reader.expect_label("b_h")?;
    let hidden_bias = reader.row(dims.hidden)?;
    reader.expect_label("b_x")?;
    let event_bias = reader.row(dims.event)?;
    reader.expect_label("w")?;
    let ranking_weights = reader.row(dims.event)?;

    while let Ok((line_no, line)) = reader.next() {
        if !line.trim().is_empty() {
            return Err(Error::parse(line_no, "unexpected trailing content"));
        }
    }

    let params = ModelParams {
        table,
        pred_transform,
        arg_transform,
        event_transform,
        hidden_bias,
        event_bias,
        ranking_weights,
        dims,
    };
    params.validate_shapes()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn lemma(s: &str) -> Lemma {
        Lemma::new(s).unwrap()
    }

    #[test]
    fn empty_corpus_input_parses_to_empty_corpus() {
        let corpus = parse_corpus("").unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn corpus_example_parses() {
        let corpus = parse_corpus("#scenario coffee\ngo\tmaker\nfill\twater\tmaker\n\n").unwrap();
        assert_eq!(corpus.scenarios().count(), 1);
        let seqs = corpus.get("coffee").unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].events.len(), 2);
        assert_eq!(seqs[0].events[1].predicate, lemma("fill"));
        assert_eq!(seqs[0].events[1].args, vec![lemma("water"), lemma("maker")]);
    }

    #[test]
    fn event_before_header_is_rejected() {
        let err = parse_corpus("go\tmaker\n").unwrap_err();
        assert!(err.to_string().contains("event outside scenario"), "{err}");
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn empty_event_token_is_rejected() {
        let err = parse_corpus("#scenario s\ngo\t\tmaker\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn malformed_header_is_rejected() {
        assert!(parse_corpus("#scenario\ngo\n").is_err());
        assert!(parse_corpus("#scene s\ngo\n").is_err());
    }

    #[test]
    fn corpus_case_folds_and_splits_esds() {
        let corpus =
            parse_corpus("#scenario bus\nGo\tBus\n\n\nWait\n\n#scenario bus\nSit\n").unwrap();
        let seqs = corpus.get("bus").unwrap();
        assert_eq!(seqs.len(), 3);
        assert_eq!(seqs[0].events[0].predicate, lemma("go"));
        assert_eq!(seqs[0].events[0].args, vec![lemma("bus")]);
        assert_eq!(seqs[1].events[0].predicate, lemma("wait"));
        assert_eq!(seqs[2].events[0].predicate, lemma("sit"));
    }

    #[test]
    fn corpus_round_trips_through_writer() {
        let text = "#scenario coffee\ngo\tmaker\nfill\twater\tmaker\n\nboil\n\n#scenario bus\nwait\tstop\n\n";
        let corpus = parse_corpus(text).unwrap();
        let written = write_corpus(&corpus);
        let reparsed = parse_corpus(&written).unwrap();
        assert_eq!(corpus, reparsed);
        assert_eq!(written, write_corpus(&reparsed));
    }

    #[test]
    fn embeddings_example_parses_with_mean_unk() {
        let table = parse_embeddings("bus 0.1 0.2\ngo 0.3 0.4\n").unwrap();
        assert_eq!(table.dim(), 2);
        assert_eq!(table.len(), 2);
        assert_eq!(table.get(&lemma("bus")).unwrap(), &[0.1, 0.2]);
        let unk = table.unk();
        assert!((unk[0] - 0.2).abs() < 1e-15);
        assert!((unk[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn empty_embeddings_input_is_rejected() {
        assert!(parse_embeddings("").is_err());
        assert!(parse_embeddings("\n\n").is_err());
    }

    #[test]
    fn inconsistent_embedding_width_names_the_line() {
        let err = parse_embeddings("bus 0.1 0.2\ngo 0.3 0.4 0.5\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn non_numeric_embedding_field_is_rejected() {
        assert!(parse_embeddings("bus 0.1 x\n").is_err());
        assert!(parse_embeddings("bus 0.1 inf\n").is_err());
        assert!(parse_embeddings("bus 0.1 NaN\n").is_err());
    }

    #[test]
    fn duplicate_embedding_lemma_is_rejected() {
        let err = parse_embeddings("bus 0.1 0.2\nBus 0.3 0.4\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn embeddings_write_then_parse_is_idempotent() {
        let table = parse_embeddings("bus 0.25 -0.5\ngo 0.125 1.75\nfill -0.375 0.0625\n").unwrap();
        let written = write_embeddings(&table);
        let reparsed = parse_embeddings(&written).unwrap();
        assert_eq!(table, reparsed);
        assert_eq!(written, write_embeddings(&reparsed));
    }

    #[test]
    fn pairs_example_parses() {
        let pairs = parse_pairs("coffee\tgo maker\tfill water maker\t1\n").unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].scenario, "coffee");
        assert!(pairs[0].gold);
        assert_eq!(pairs[0].first.predicate, lemma("go"));
        assert_eq!(pairs[0].second.args, vec![lemma("water"), lemma("maker")]);
    }

    #[test]
    fn empty_pairs_input_is_empty_list() {
        assert!(parse_pairs("").unwrap().is_empty());
    }

    #[test]
    fn bad_pair_label_is_rejected() {
        let err = parse_pairs("coffee\tgo\tfill\t2\n").unwrap_err();
        assert!(err.to_string().contains("label"), "{err}");
    }

    #[test]
    fn short_pair_line_is_rejected() {
        let err = parse_pairs("coffee\tgo\tfill\n").unwrap_err();
        assert!(err.to_string().contains("4 tab-separated"), "{err}");
    }

    #[test]
    fn pairs_round_trip_through_writer() {
        let text = "coffee\tgo maker\tfill water maker\t1\nbus\twait stop\tsit\t0\n";
        let pairs = parse_pairs(text).unwrap();
        assert_eq!(write_pairs(&pairs), text);
    }

    fn random_params(seed: u64) -> ModelParams {
        let vocab: BTreeSet<Lemma> = ["go", "fill", "maker", "water"]
            .iter()
            .map(|s| lemma(s))
            .collect();
        let mut params = init_params(Dims::new(3, 4, 2), seed, None, &vocab).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31));
        for b in &mut params.hidden_bias {
            *b = rng.gen_range(-2.0..=2.0);
        }
        for b in &mut params.event_bias {
            *b = rng.gen_range(-2.0..=2.0);
        }
        for w in &mut params.ranking_weights {
            *w = rng.gen_range(-2.0..=2.0);
        }
        params
    }

    #[test]
    fn model_round_trip_is_bitwise() {
        for seed in 0..5 {
            let params = random_params(seed);
            let text = write_model(&params);
            let reparsed = read_model(&text).unwrap();
            assert_eq!(params, reparsed, "seed {seed}");
            assert_eq!(text, write_model(&reparsed), "seed {seed}");
        }
    }

    #[test]
    fn model_vocab_order_survives_round_trip() {
        let params = random_params(1);
        let reparsed = read_model(&write_model(&params)).unwrap();
        assert_eq!(params.table.lemmas(), reparsed.table.lemmas());
    }

    #[test]
    fn model_bad_magic_is_rejected() {
        let err = read_model("EEMODEL v2\n").unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn model_shape_mismatch_is_rejected() {
        let params = random_params(2);
        let text = write_model(&params);
        // Claim one more hidden unit than the R block provides.
        let tampered = text.replacen("dims 3 4 2", "dims 3 5 2", 1);
        assert!(read_model(&tampered).is_err());
    }

    #[test]
    fn model_non_numeric_field_is_rejected() {
        let params = random_params(3);
        let text = write_model(&params);
        let first_value_line = text.lines().nth(3).unwrap().to_string();
        let tampered = text.replacen(&first_value_line, "go x y z", 1);
        assert!(read_model(&tampered).is_err());
    }

    #[test]
    fn model_trailing_content_is_rejected() {
        let params = random_params(4);
        let mut text = write_model(&params);
        text.push_str("extra\n");
        assert!(read_model(&text).is_err());
    }

    #[test]
    fn model_truncated_input_is_rejected() {
        let params = random_params(5);
        let text = write_model(&params);
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        let err = read_model(&truncated).unwrap_err();
        assert!(err.to_string().contains("end of input"), "{err}");
    }
}
