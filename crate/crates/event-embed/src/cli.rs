//! Command-line interface: train / eval / order / baseline / synth.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or format errors.
//! Every run prints its resolved configuration to stderr; results go to
//! stdout.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_bl, train_bl};
use crate::io::{
    parse_corpus, parse_embeddings, parse_pairs, read_model, write_corpus, write_model, write_pairs,
};
use crate::model::{init_params, score_event, Dims, Event, Mode};
use crate::synth::{generate, SynthConfig};
use crate::train::{train, Hyperparams};

#[derive(Parser)]
#[command(
    name = "event-embed",
    version,
    about = "Learn event embeddings and rank events by prototypical temporal order"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on an ESD corpus and write it to a file.
    Train(TrainArgs),
    /// Evaluate a model on labeled pairs and print one metrics line.
    Eval(EvalArgs),
    /// Score events from a file and echo them in descending score order.
    Order(OrderArgs),
    /// Train the verb-frequency baseline and evaluate it on labeled pairs.
    Baseline(BaselineArgs),
    /// Generate a synthetic corpus and pairs from a latent total order.
    Synth(SynthArgs),
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    match s {
        "full" => Ok(Mode::Full),
        "verb" => Ok(Mode::VerbOnly),
        other => Err(format!("unknown mode {other:?}, expected full or verb")),
    }
}

fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated dimensions d,h,e".to_string());
    }
    let dim = |p: &str| -> std::result::Result<usize, String> {
        p.trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| format!("bad dimension {p:?}"))
    };
    Ok(Dims::new(dim(parts[0])?, dim(parts[1])?, dim(parts[2])?))
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn parse_non_negative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("{s:?} is not a non-negative number")),
    }
}

fn parse_dropout(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..1.0).contains(&v) => Ok(v),
        _ => Err(format!("{s:?} is not in [0, 1)")),
    }
}

#[derive(Args)]
struct TrainArgs {
    /// ESD corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Where to write the trained model.
    #[arg(long)]
    out: PathBuf,
    /// Optional pretrained word embeddings (text format).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Composition mode: full or verb.
    #[arg(long, default_value = "full", value_parser = parse_mode)]
    mode: Mode,
    /// Ranking margin.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    gamma: f64,
    /// Learning rate.
    #[arg(long, default_value_t = 0.01, value_parser = parse_positive)]
    eta: f64,
    /// Weight-decay strength.
    #[arg(long, default_value_t = 1e-4, value_parser = parse_non_negative)]
    lambda: f64,
    /// Number of passes over the corpus.
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Layer widths d,h,e.
    #[arg(long, default_value = "50,50,50", value_parser = parse_dims)]
    dims: Dims,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep word embeddings fixed; learn only transforms and ranking weights.
    #[arg(long)]
    freeze_embeddings: bool,
    /// Reshuffle sequence order each epoch (seeded).
    #[arg(long)]
    shuffle: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Labeled pairs file.
    #[arg(long)]
    pairs: PathBuf,
    /// Composition mode: full or verb.
    #[arg(long, default_value = "full", value_parser = parse_mode)]
    mode: Mode,
}

#[derive(Args)]
struct OrderArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// File of event lines in corpus line syntax.
    #[arg(long)]
    events: PathBuf,
    /// Composition mode: full or verb.
    #[arg(long, default_value = "full", value_parser = parse_mode)]
    mode: Mode,
}

#[derive(Args)]
struct BaselineArgs {
    /// ESD corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Labeled pairs file.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write the generated corpus.
    #[arg(long)]
    out_corpus: PathBuf,
    /// Where to write the generated pairs.
    #[arg(long)]
    out_pairs: PathBuf,
    /// Number of latent event types.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    types: u64,
    /// ESDs to generate.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    esds: u64,
    /// Probability of dropping each event from an ESD.
    #[arg(long, default_value_t = 0.2, value_parser = parse_dropout)]
    dropout: f64,
    /// Predicate lemma variants per event type.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    variants: u64,
    /// Make event types share predicates and differ only in arguments.
    #[arg(long)]
    arg_determined: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses argv and runs the selected subcommand, returning the process exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help and version go to stdout, usage errors to stderr.
            let _ = err.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => run_train(args),
        Command::Eval(args) => run_eval(args),
        Command::Order(args) => run_order(args),
        Command::Baseline(args) => run_baseline(args),
        Command::Synth(args) => run_synth(args),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T>) -> Result<T> {
    parse(&read_file(path)?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

fn display_opt(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

fn run_train(args: TrainArgs) -> Result<()> {
    eprintln!(
        "train: corpus={} out={} embeddings={} mode={} gamma={} eta={} lambda={} epochs={} dims={} seed={} freeze_embeddings={} shuffle={}",
        args.corpus.display(),
        args.out.display(),
        display_opt(&args.embeddings),
        args.mode.as_str(),
        args.gamma,
        args.eta,
        args.lambda,
        args.epochs,
        args.dims,
        args.seed,
        args.freeze_embeddings,
        args.shuffle,
    );

    let corpus = in_file(&args.corpus, parse_corpus)?;
    let sequences = corpus.all_sequences();
    if sequences.is_empty() {
        return Err(Error::invalid(format!(
            "{}: corpus contains no event sequences",
            args.corpus.display()
        )));
    }
    let vocab = corpus.vocabulary();
    let pretrained = match &args.embeddings {
        Some(path) => Some(in_file(path, parse_embeddings)?),
        None => None,
    };

    let hyper = Hyperparams {
        gamma: args.gamma,
        eta: args.eta,
        lambda: args.lambda,
        epochs: args.epochs,
        seed: args.seed,
        mode: args.mode,
        freeze_embeddings: args.freeze_embeddings,
        shuffle: args.shuffle,
        dims: args.dims,
    };
    let init = init_params(args.dims, args.seed, pretrained.as_ref(), &vocab)?;
    let (params, history) = train(&sequences, &hyper, init)?;
    if let Some(last) = history.last() {
        eprintln!(
            "trained {} epochs over {} sequences; final epoch: violations={} loss={:.6}",
            history.len(),
            sequences.len(),
            last.violations,
            last.loss
        );
    }
    write_file(&args.out, &write_model(&params))
}

fn run_eval(args: EvalArgs) -> Result<()> {
    eprintln!(
        "eval: model={} pairs={} mode={}",
        args.model.display(),
        args.pairs.display(),
        args.mode.as_str(),
    );
    let params = in_file(&args.model, read_model)?;
    let pairs = in_file(&args.pairs, parse_pairs)?;
    if pairs.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no pairs to evaluate",
            args.pairs.display()
        )));
    }
    let metrics = evaluate(&pairs, &params, args.mode)?;
    println!("{}", metrics.summary_line());
    Ok(())
}

fn run_order(args: OrderArgs) -> Result<()> {
    eprintln!(
        "order: model={} events={} mode={}",
        args.model.display(),
        args.events.display(),
        args.mode.as_str(),
    );
    let params = in_file(&args.model, read_model)?;
    let text = read_file(&args.events)?;
    let mut scored: Vec<(f64, &str)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let event = Event::from_tokens(line.split('\t')).map_err(|e| {
            Error::invalid(format!("{}: line {}: {e}", args.events.display(), idx + 1))
        })?;
        scored.push((score_event(&event, &params, args.mode), line));
    }
    // Stable sort: equal scores keep their input order.
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("scores are finite"));
    for (score, line) in scored {
        println!("{score:.6}\t{line}");
    }
    Ok(())
}

fn run_baseline(args: BaselineArgs) -> Result<()> {
    eprintln!(
        "baseline: corpus={} pairs={} seed={}",
        args.corpus.display(),
        args.pairs.display(),
        args.seed,
    );
    let corpus = in_file(&args.corpus, parse_corpus)?;
    let sequences = corpus.all_sequences();
    if sequences.is_empty() {
        return Err(Error::invalid(format!(
            "{}: corpus contains no event sequences",
            args.corpus.display()
        )));
    }
    let pairs = in_file(&args.pairs, parse_pairs)?;
    if pairs.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no pairs to evaluate",
            args.pairs.display()
        )));
    }
    let mut bl = train_bl(&sequences, args.seed);
    let metrics = evaluate_bl(&pairs, &mut bl)?;
    println!("{}", metrics.summary_line());
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    eprintln!(
        "synth: out_corpus={} out_pairs={} types={} esds={} dropout={} variants={} arg_determined={} seed={}",
        args.out_corpus.display(),
        args.out_pairs.display(),
        args.types,
        args.esds,
        args.dropout,
        args.variants,
        args.arg_determined,
        args.seed,
    );
    let config = SynthConfig {
        num_event_types: args.types as usize,
        esds_per_scenario: args.esds as usize,
        dropout: args.dropout,
        lexical_variants: args.variants as usize,
        arg_determined: args.arg_determined,
        seed: args.seed,
    };
    let (corpus, pairs) = generate(&config)?;
    write_file(&args.out_corpus, &write_corpus(&corpus))?;
    write_file(&args.out_pairs, &write_pairs(&pairs))
}
