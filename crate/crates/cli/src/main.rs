use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dictnn::datapipe::{load_merge, read_corpus, stratified_split, write_corpus, DavidsonMapping, SplitName, SplitSet, TweetRecord};
use dictnn::fusion::{Mode, Vectorizer};
use dictnn::harness::{
    avg_hate_score_per_class, evaluate_checkpoint, full_grid, grid_search, history_csv, seed_override, train,
    write_report, EncodedSplit, ExperimentConfig, RunConfig,
};
use dictnn::hatedict::{ingest_hatebase_json, HateDictionary, NullOffensiveness, TokenScorer, DEFAULT_CUTOFF};
use dictnn::synthetic::{generate, SyntheticOptions};
use dictnn::tokenscalar::{PrecomputedSequences, ScalarProvider, Vocab, VocabEncoder};
use dictnn::Label;

#[derive(Parser)]
#[command(name = "dictnn", version, about = "Dictionary-augmented CNN hate speech classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hate dictionary tools.
    #[command(subcommand)]
    Dict(DictCommand),
    /// Load and merge the two labelled datasets, then write a stratified split.
    Prepare(PrepareArgs),
    /// Write model inputs for a corpus as binary matrices.
    Vectorize(VectorizeArgs),
    /// Train one configuration.
    Train(ConfigArg),
    /// Train every point of the hyperparameter grid.
    GridSearch(ConfigArg),
    /// Evaluate a checkpoint on a split.
    Evaluate(EvaluateArgs),
    /// Diagnostics.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Write a generated toy corpus with vocab, dictionary, split and config.
    Synth(SynthArgs),
}

#[derive(Subcommand)]
enum DictCommand {
    /// Convert Hatebase API JSON pages into a dictionary CSV.
    Ingest {
        /// One or more JSON page files.
        #[arg(required = true)]
        pages: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Offensiveness used when the API reports null.
        #[arg(long, default_value_t = 50, conflicts_with = "drop_null")]
        null_offensiveness: u8,
        /// Drop terms with null offensiveness instead.
        #[arg(long)]
        drop_null: bool,
    },
}

#[derive(Args)]
struct PrepareArgs {
    #[arg(long)]
    davidson: PathBuf,
    #[arg(long)]
    founta: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Split seed; the DICTNN_SEED environment variable overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InputArgs {
    /// Vocab file for WordPiece token-id scalars.
    #[arg(long, required_unless_present = "precomputed")]
    vocab: Option<PathBuf>,
    /// Precomputed scalar sequences, one `id<TAB>v1,v2,...` line per tweet; replaces the vocab.
    #[arg(long)]
    precomputed: Option<PathBuf>,
    /// Hate dictionary CSV; required for 2d.
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: f64,
}

#[derive(Args)]
struct VectorizeArgs {
    #[arg(long, value_parser = ["1d", "2d"])]
    mode: String,
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    inputs: InputArgs,
    /// Output file: matrices back to back, each a row-count byte followed by little-endian f32 values.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value = "test", value_parser = ["test", "validation"])]
    split: String,
    /// Experiment config naming the corpus, split and input files.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report files; defaults to the checkpoint directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Per-class mean of per-tweet dictionary score sums.
    HateScores {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        /// Restrict to one split, read from this directory.
        #[arg(long)]
        splits_dir: Option<PathBuf>,
        #[arg(long, default_value = "test", value_parser = ["train", "validation", "test"])]
        split: String,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 3000)]
    tweets: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Dict(DictCommand::Ingest {
            pages,
            output,
            null_offensiveness,
            drop_null,
        }) => dict_ingest(&pages, &output, null_offensiveness, drop_null),
        Command::Prepare(args) => prepare(&args),
        Command::Vectorize(args) => vectorize(&args),
        Command::Train(args) => train_cmd(&args.config),
        Command::GridSearch(args) => grid_cmd(&args.config),
        Command::Evaluate(args) => evaluate_cmd(&args),
        Command::Report(ReportCommand::HateScores {
            corpus,
            dictionary,
            splits_dir,
            split,
            cutoff,
        }) => hate_scores(&corpus, &dictionary, splits_dir.as_deref(), &split, cutoff),
        Command::Synth(args) => synth(&args),
    }
}

fn dict_ingest(pages: &[PathBuf], output: &Path, null_offensiveness: u8, drop_null: bool) -> Result<()> {
    let texts = pages
        .iter()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let nulls = if drop_null {
        NullOffensiveness::Drop
    } else {
        NullOffensiveness::Default(null_offensiveness)
    };
    let report = ingest_hatebase_json(&texts, nulls)?;
    fs::write(output, &report.csv).with_context(|| format!("writing {}", output.display()))?;
    eprintln!(
        "wrote {} terms to {} (missing term: {}, null offensiveness defaulted: {}, dropped: {})",
        report.rows,
        output.display(),
        report.skipped_missing_term,
        report.null_defaulted,
        report.null_dropped
    );
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn prepare(args: &PrepareArgs) -> Result<()> {
    let merged = load_merge(open(&args.davidson)?, open(&args.founta)?, DavidsonMapping::default())?;
    let seed = seed_override()?.unwrap_or(args.seed);
    let splits = stratified_split(&merged.records, dictnn::datapipe::DEFAULT_FRACTIONS, seed)?;
    fs::create_dir_all(&args.out_dir)?;
    write_corpus(File::create(args.out_dir.join("corpus.csv"))?, &merged.records)?;
    splits.save_manifests(&args.out_dir)?;
    let counts = merged.counts();
    eprintln!(
        "merged {} tweets ({} davidson, {} founta, {} spam dropped); hateful {} abusive {} normal {}",
        merged.records.len(),
        merged.davidson_rows,
        merged.founta_rows,
        merged.spam_dropped,
        counts[0],
        counts[1],
        counts[2]
    );
    for name in SplitName::ALL {
        eprintln!("{}: {}", name.as_str(), splits.get(name).len());
    }
    Ok(())
}

fn load_provider(vocab: Option<&Path>, precomputed: Option<&Path>) -> Result<Box<dyn ScalarProvider>> {
    Ok(match (precomputed, vocab) {
        (Some(p), _) => Box::new(PrecomputedSequences::load(open(p)?)?),
        (None, Some(v)) => Box::new(VocabEncoder::new(Vocab::load(open(v)?)?)),
        (None, None) => bail!("either a vocab or a precomputed sequence file is required"),
    })
}

fn load_dictionary(path: Option<&Path>, mode: Mode) -> Result<Option<HateDictionary>> {
    match path {
        Some(p) => Ok(Some(HateDictionary::load(open(p)?)?)),
        None if mode == Mode::TwoD => bail!("the 2d mode needs a dictionary"),
        None => Ok(None),
    }
}

fn vectorize(args: &VectorizeArgs) -> Result<()> {
    let mode: Mode = args.mode.parse().map_err(anyhow::Error::msg)?;
    let records = read_corpus(open(&args.corpus)?)?;
    let provider = load_provider(args.inputs.vocab.as_deref(), args.inputs.precomputed.as_deref())?;
    let dict = load_dictionary(args.inputs.dictionary.as_deref(), mode)?;
    let scorer = dict.as_ref().map(|d| TokenScorer::with_cutoff(d, args.inputs.cutoff));
    let vectorizer = Vectorizer {
        mode,
        provider: provider.as_ref(),
        scorer: scorer.as_ref(),
    };
    let mut out = BufWriter::new(File::create(&args.output)?);
    for r in &records {
        vectorizer.vectorize(&r.id, &r.text)?.write_to(&mut out)?;
    }
    out.flush()?;
    eprintln!("wrote {} {} matrices to {}", records.len(), mode, args.output.display());
    Ok(())
}

struct Experiment {
    config: ExperimentConfig,
    splits: SplitSet,
    provider: Box<dyn ScalarProvider>,
    dictionary: Option<HateDictionary>,
}

impl Experiment {
    fn load(path: &Path) -> Result<Self> {
        let config = ExperimentConfig::load(path)?;
        let corpus = read_corpus(open(&config.corpus)?)?;
        let splits = SplitSet::from_manifests(&config.splits_dir, &corpus)?;
        let provider: Box<dyn ScalarProvider> = match (&config.precomputed, &config.vocab) {
            (Some(p), _) => Box::new(PrecomputedSequences::load(open(p)?)?),
            (None, Some(v)) => Box::new(VocabEncoder {
                vocab: Vocab::load(open(v)?)?,
                scale: config.scalar_scale,
            }),
            (None, None) => bail!("the config needs a vocab or a precomputed sequence file"),
        };
        let dictionary = load_dictionary(config.dictionary.as_deref(), config.run.model)?;
        Ok(Experiment {
            config,
            splits,
            provider,
            dictionary,
        })
    }

    fn encode(&self, records: &[TweetRecord]) -> Result<EncodedSplit> {
        let scorer = self
            .dictionary
            .as_ref()
            .map(|d| TokenScorer::with_cutoff(d, self.config.cutoff));
        let vectorizer = Vectorizer {
            mode: self.config.run.model,
            provider: self.provider.as_ref(),
            scorer: scorer.as_ref(),
        };
        Ok(EncodedSplit::encode(records, &vectorizer)?)
    }

    fn split(&self, name: SplitName) -> Result<EncodedSplit> {
        self.encode(self.splits.get(name))
    }
}

fn train_cmd(config: &Path) -> Result<()> {
    let exp = Experiment::load(config)?;
    let run = &exp.config.run;
    let out_dir = exp.config.output_dir.join(format!("{}_{}", run.model, run.label()));
    let (tr, va) = (exp.split(SplitName::Train)?, exp.split(SplitName::Validation)?);
    eprintln!("training {} on {} tweets, validating on {}", run.label(), tr.len(), va.len());
    let checkpoint = out_dir.join("checkpoint");
    let outcome = train(run, &tr, &va, Some(&checkpoint))?;
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("history.csv"), history_csv(&outcome.history))?;
    for e in &outcome.history {
        eprintln!(
            "epoch {:>3}  lr {:.0e}  train loss {:.4}  val loss {:.4}  val macro F1 {:.4}",
            e.epoch, e.lr, e.train_loss, e.val_loss, e.val_macro_f1
        );
    }
    match &outcome.best_report {
        Some(report) => {
            write_report(report, &out_dir, "validation_report")?;
            println!("{}", report.to_table());
            println!(
                "best epoch {} (validation macro F1 {:.4}); checkpoint in {}",
                outcome.best_epoch.unwrap_or(0),
                report.macro_f1(),
                checkpoint.display()
            );
        }
        None => println!("no epochs trained"),
    }
    Ok(())
}

fn grid_cmd(config: &Path) -> Result<()> {
    let exp = Experiment::load(config)?;
    let base = RunConfig {
        epochs: exp.config.grid_epochs,
        ..exp.config.run.clone()
    };
    let (tr, va) = (exp.split(SplitName::Train)?, exp.split(SplitName::Validation)?);
    let points = full_grid();
    let total = points.len();
    let mut done = 0;
    let report = grid_search(&base, &points, &tr, &va, |run| {
        done += 1;
        match (&run.best_val_f1, &run.error) {
            (Some(f1), _) => eprintln!("[{done}/{total}] {}: {f1:.4}", run.label),
            (None, err) => eprintln!("[{done}/{total}] {}: failed: {}", run.label, err.as_deref().unwrap_or("?")),
        }
    })?;
    fs::create_dir_all(&exp.config.output_dir)?;
    let path = exp.config.output_dir.join("grid.json");
    fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    match report.best_run() {
        Some(best) => println!("best: {} with validation macro F1 {:.4}", best.label, best.best_val_f1.unwrap_or(0.0)),
        None => println!("every run failed"),
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let exp = Experiment::load(&args.config)?;
    let name: SplitName = args.split.parse().map_err(anyhow::Error::msg)?;
    let split = exp.split(name)?;
    let report = evaluate_checkpoint(&args.checkpoint, &split)?;
    let out_dir = args.out_dir.clone().unwrap_or_else(|| args.checkpoint.clone());
    let files = write_report(&report, &out_dir, &format!("{}_report", name.as_str()))?;
    println!("{}", report.to_table());
    println!("wrote {}", files.json.display());
    Ok(())
}

fn hate_scores(corpus: &Path, dictionary: &Path, splits_dir: Option<&Path>, split: &str, cutoff: f64) -> Result<()> {
    let records = read_corpus(open(corpus)?)?;
    let records = match splits_dir {
        Some(dir) => SplitSet::from_manifests(dir, &records)?.get(split.parse().map_err(anyhow::Error::msg)?).to_vec(),
        None => records,
    };
    let dict = HateDictionary::load(open(dictionary)?)?;
    let scorer = TokenScorer::with_cutoff(&dict, cutoff);
    let avg = avg_hate_score_per_class(&records, &scorer);
    for label in Label::ALL {
        match avg[label.index()] {
            Some(v) => println!("{label}\t{v:.2}"),
            None => println!("{label}\tabsent"),
        }
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let seed = seed_override()?.unwrap_or(args.seed);
    let corpus = generate(&SyntheticOptions {
        tweets: args.tweets,
        seed,
        ..SyntheticOptions::default()
    });
    corpus.write_to(&args.out_dir)?;
    let splits = stratified_split(&corpus.records, dictnn::datapipe::DEFAULT_FRACTIONS, seed)?;
    splits.save_manifests(&args.out_dir)?;
    let config = serde_json::json!({
        "model": "2d",
        "epochs": 30,
        "seed": seed,
        "corpus": "corpus.csv",
        "splits_dir": ".",
        "vocab": "vocab.txt",
        "dictionary": "dictionary.csv",
        "output_dir": "runs",
    });
    fs::write(args.out_dir.join("config.json"), serde_json::to_string_pretty(&config)? + "\n")?;
    println!("wrote {} tweets to {}", corpus.records.len(), args.out_dir.display());
    Ok(())
}
