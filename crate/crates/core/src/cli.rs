//! Command-line interface.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{read_sentences, TokenFilterRules, WindowMode};
use crate::error::{Error, Result};
use crate::evaluation::{
    eval_analogy, eval_word_similarity, n_nearest, pca_project, run_sweep, AnalogyDataset,
    EvalReport, SimilarityDataset, SweepAxis,
};
use crate::io::{
    load_embeddings, save_embeddings, save_vocabulary, write_atomic, EmbeddingFormat, RunManifest,
};
use crate::model::ModelVariant;
use crate::morphology::{build_word_morpheme_map, select_max_meanings, MorphemeLexicon};
use crate::trainer::{train, TrainingConfig};
use crate::{Float, Vectors};

#[derive(Debug, Parser)]
#[command(
    name = "mwe",
    version,
    about = "Morpheme-enhanced CBOW word embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train embeddings on a corpus (one sentence per line).
    Train(TrainCmd),
    /// Build the word -> morpheme meanings map from pretrained embeddings.
    BuildMap(BuildMapCmd),
    /// Spearman correlation on word-similarity datasets.
    EvalSim(EvalSimCmd),
    /// Accuracy on a syntactic analogy dataset.
    EvalAnalogy(EvalAnalogyCmd),
    /// Nearest neighbours of words.
    Nn(NnCmd),
    /// 2-D PCA coordinates of words, for plotting.
    Project(ProjectCmd),
    /// Train and evaluate over a range of corpus sizes or window sizes.
    Sweep(SweepCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Cbow,
    Emwe,
    MweA,
    MweS,
    MweM,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Cbow => ModelVariant::Cbow,
            VariantArg::Emwe => ModelVariant::Emwe,
            VariantArg::MweA => ModelVariant::MweA,
            VariantArg::MweS => ModelVariant::MweS,
            VariantArg::MweM => ModelVariant::MweM,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Binary,
}

impl From<FormatArg> for EmbeddingFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => EmbeddingFormat::Text,
            FormatArg::Binary => EmbeddingFormat::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ExportArg {
    /// Input vectors composed with morpheme information.
    Composed,
    /// Raw input rows.
    Input,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    TokenFraction,
    Window,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Corpus file, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Morpheme lexicon (type<TAB>morpheme<TAB>meanings); required except for cbow.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "cbow")]
    variant: VariantArg,
    #[arg(long, default_value_t = 200)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 20)]
    negative: usize,
    /// Total epochs, pretraining included.
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Subsampling threshold; 0 disables.
    #[arg(long, default_value_t = 1e-4)]
    sample: f64,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Sum context vectors instead of averaging them.
    #[arg(long)]
    context_sum: bool,
    /// Keep meaning/morpheme vectors fixed during variant training.
    #[arg(long)]
    freeze_meanings: bool,
    /// Always use the full window radius.
    #[arg(long)]
    fixed_window: bool,
    #[arg(long, default_value_t = 10_000_000)]
    table_size: usize,
    /// Keep numeric tokens.
    #[arg(long)]
    keep_numbers: bool,
    /// Keep token case.
    #[arg(long)]
    keep_case: bool,
}

impl TrainArgs {
    fn config(&self) -> TrainingConfig {
        TrainingConfig {
            dim: self.dim,
            window: self.window,
            negative: self.negative,
            epochs: self.epochs,
            pretrain_epochs: self.pretrain_epochs,
            lr: self.lr,
            sample: self.sample,
            min_count: self.min_count,
            lambda: self.lambda,
            variant: self.variant.into(),
            seed: self.seed,
            workers: self.workers,
            window_mode: if self.fixed_window {
                WindowMode::Fixed
            } else {
                WindowMode::Dynamic
            },
            context_sum: self.context_sum,
            freeze_meanings: self.freeze_meanings,
            table_size: self.table_size,
            ..TrainingConfig::default()
        }
    }

    fn rules(&self) -> TokenFilterRules {
        TokenFilterRules {
            drop_numeric: !self.keep_numbers,
            lowercase: !self.keep_case,
            ..TokenFilterRules::default()
        }
    }

    fn lexicon(&self) -> Result<Option<MorphemeLexicon>> {
        self.lexicon
            .as_deref()
            .map(MorphemeLexicon::load)
            .transpose()
    }

    fn record(&self, m: &mut RunManifest) {
        let c = self.config();
        m.set("corpus", self.corpus.display())
            .set(
                "lexicon",
                self.lexicon
                    .as_ref()
                    .map_or("-".into(), |p| p.display().to_string()),
            )
            .set("variant", c.variant)
            .set("dim", c.dim)
            .set("window", c.window)
            .set("negative", c.negative)
            .set("epochs", c.epochs)
            .set("pretrain_epochs", c.pretrain_epochs)
            .set("lr", c.lr)
            .set("sample", c.sample)
            .set("min_count", c.min_count)
            .set("lambda", c.lambda)
            .set("seed", c.seed)
            .set("workers", c.workers)
            .set("context_sum", c.context_sum)
            .set("freeze_meanings", c.freeze_meanings)
            .set("fixed_window", self.fixed_window)
            .set("table_size", c.table_size)
            .set("keep_numbers", self.keep_numbers)
            .set("keep_case", self.keep_case);
    }
}

#[derive(Debug, Args)]
struct TrainCmd {
    #[command(flatten)]
    train: TrainArgs,
    /// Output embedding file.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Which vectors to write.
    #[arg(long, value_enum, default_value = "composed")]
    export: ExportArg,
    /// Also write the vocabulary (word<TAB>count).
    #[arg(long)]
    save_vocab: Option<PathBuf>,
    /// Also write the morpheme meaning map (meaning-based variants).
    #[arg(long)]
    save_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildMapCmd {
    /// Pretrained embeddings.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    lambda: f64,
    /// Keep only the most similar meaning per morpheme class.
    #[arg(long)]
    max: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EvalSimCmd {
    #[arg(long)]
    embeddings: PathBuf,
    /// Similarity dataset(s); repeat for several.
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalAnalogyCmd {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Allow the question words themselves as answers.
    #[arg(long)]
    no_exclude: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NnCmd {
    #[arg(long)]
    embeddings: PathBuf,
    /// Query word(s); repeat for several.
    #[arg(long = "word", required = true)]
    words: Vec<String>,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProjectCmd {
    #[arg(long)]
    embeddings: PathBuf,
    /// Comma-separated words.
    #[arg(long, value_delimiter = ',')]
    words: Vec<String>,
    /// File with one word per line (added to --words).
    #[arg(long)]
    words_file: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepCmd {
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(cmd) => cmd_train(cmd),
        Command::BuildMap(cmd) => cmd_build_map(cmd),
        Command::EvalSim(cmd) => cmd_eval_sim(cmd),
        Command::EvalAnalogy(cmd) => cmd_eval_analogy(cmd),
        Command::Nn(cmd) => cmd_nn(cmd),
        Command::Project(cmd) => cmd_project(cmd),
        Command::Sweep(cmd) => cmd_sweep(cmd),
    }
}

/// Writes a report to `output` (plus its manifest) or to standard output.
fn emit(
    output: Option<&Path>,
    manifest: &mut RunManifest,
    body: impl Fn(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match output {
        Some(path) => {
            write_atomic(path, |w| body(w))?;
            manifest.set("output", path.display());
            manifest.save(&RunManifest::path_for(path))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn cmd_train(cmd: TrainCmd) -> Result<()> {
    let mut manifest = RunManifest::new("train");
    cmd.train.record(&mut manifest);
    let start = Instant::now();
    let sentences = read_sentences(&cmd.train.corpus, &cmd.train.rules())?;
    let lexicon = cmd.train.lexicon()?;
    let out = train::<Float>(&sentences, &cmd.train.config(), lexicon.as_ref())?;
    let vectors = match cmd.export {
        ExportArg::Composed => out.word_vectors(),
        ExportArg::Input => out.input_vectors(),
    };
    save_embeddings(&vectors, &cmd.output, cmd.format.into())?;
    if let Some(path) = &cmd.save_vocab {
        save_vocabulary(&out.vocab, path)?;
        manifest.set("vocab_output", path.display());
    }
    if let Some(path) = &cmd.save_map {
        let map = out
            .max_meanings
            .as_ref()
            .or(out.morpheme_map.as_ref())
            .ok_or_else(|| {
                Error::Config(format!("variant {} has no meaning map", out_variant(&cmd)))
            })?;
        write_atomic(path, |w| map.write_tsv(out.vocab.index(), w))?;
        manifest.set("map_output", path.display());
    }
    manifest
        .set("format", format!("{:?}", cmd.format).to_lowercase())
        .set("export", format!("{:?}", cmd.export).to_lowercase())
        .set("corpus_tokens", out.corpus_tokens)
        .set("vocab_size", out.vocab.len())
        .set("pretrain_seconds", out.timings.pretrain.as_secs_f64())
        .set("map_seconds", out.timings.map.as_secs_f64())
        .set("train_seconds", out.timings.train.as_secs_f64())
        .set("total_seconds", start.elapsed().as_secs_f64())
        .set("output", cmd.output.display());
    if let Some(last) = out.epochs.last() {
        manifest.set("final_loss", last.mean_loss);
    }
    manifest.save(&RunManifest::path_for(&cmd.output))
}

fn out_variant(cmd: &TrainCmd) -> ModelVariant {
    cmd.train.variant.into()
}

fn cmd_build_map(cmd: BuildMapCmd) -> Result<()> {
    let vectors: Vectors = load_embeddings(&cmd.embeddings)?;
    let lexicon = MorphemeLexicon::load(&cmd.lexicon)?;
    let mut map = build_word_morpheme_map(&vectors.index, &lexicon, &vectors.vectors, cmd.lambda)?;
    if cmd.max {
        map = select_max_meanings(&map, &vectors.index);
    }
    let mut manifest = RunManifest::new("build-map");
    manifest
        .set("embeddings", cmd.embeddings.display())
        .set("lexicon", cmd.lexicon.display())
        .set("lambda", cmd.lambda)
        .set("max", cmd.max)
        .set("mapped_words", map.mapped_words());
    emit(Some(&cmd.output), &mut manifest, |w| {
        map.write_tsv(&vectors.index, w)
    })
}

fn write_reports(w: &mut dyn Write, reports: &[EvalReport]) -> io::Result<()> {
    writeln!(w, "{}", EvalReport::TSV_HEADER)?;
    for r in reports {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

fn cmd_eval_sim(cmd: EvalSimCmd) -> Result<()> {
    let vectors: Vectors = load_embeddings(&cmd.embeddings)?;
    let reports = cmd
        .datasets
        .iter()
        .map(|p| eval_word_similarity(&vectors, &SimilarityDataset::load(p)?))
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = RunManifest::new("eval-sim");
    manifest.set("embeddings", cmd.embeddings.display()).set(
        "datasets",
        cmd.datasets
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    emit(cmd.output.as_deref(), &mut manifest, |w| {
        write_reports(w, &reports)
    })
}

fn cmd_eval_analogy(cmd: EvalAnalogyCmd) -> Result<()> {
    let vectors: Vectors = load_embeddings(&cmd.embeddings)?;
    let dataset = AnalogyDataset::load(&cmd.dataset)?;
    let report = eval_analogy(&vectors, &dataset, !cmd.no_exclude);
    let mut manifest = RunManifest::new("eval-analogy");
    manifest
        .set("embeddings", cmd.embeddings.display())
        .set("dataset", cmd.dataset.display())
        .set("exclude_queries", !cmd.no_exclude);
    emit(cmd.output.as_deref(), &mut manifest, |w| {
        write_reports(w, std::slice::from_ref(&report))
    })
}

fn cmd_nn(cmd: NnCmd) -> Result<()> {
    let vectors: Vectors = load_embeddings(&cmd.embeddings)?;
    let results = cmd
        .words
        .iter()
        .map(|w| {
            let w = w.to_lowercase();
            n_nearest(&vectors, &w, cmd.n).map(|r| (w, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = RunManifest::new("nn");
    manifest
        .set("embeddings", cmd.embeddings.display())
        .set("words", cmd.words.join(","))
        .set("n", cmd.n);
    emit(cmd.output.as_deref(), &mut manifest, |w| {
        writeln!(w, "query\tneighbor\tcosine")?;
        for (q, neighbors) in &results {
            for (n, c) in neighbors {
                writeln!(w, "{q}\t{n}\t{c:.6}")?;
            }
        }
        Ok(())
    })
}

fn cmd_project(cmd: ProjectCmd) -> Result<()> {
    let vectors: Vectors = load_embeddings(&cmd.embeddings)?;
    let mut words: Vec<String> = cmd
        .words
        .iter()
        .map(|w| w.trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    if let Some(path) = &cmd.words_file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        words.extend(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty()),
        );
    }
    let projection = pca_project(&vectors, &words)?;
    let mut manifest = RunManifest::new("project");
    manifest
        .set("embeddings", cmd.embeddings.display())
        .set("words", words.join(","))
        .set("variance_1", projection.variances[0])
        .set("variance_2", projection.variances[1]);
    emit(cmd.output.as_deref(), &mut manifest, |w| {
        writeln!(w, "word\tx\ty")?;
        for (word, x, y) in &projection.points {
            writeln!(w, "{word}\t{x:.6}\t{y:.6}")?;
        }
        Ok(())
    })
}

fn cmd_sweep(cmd: SweepCmd) -> Result<()> {
    let sentences = read_sentences(&cmd.train.corpus, &cmd.train.rules())?;
    let lexicon = cmd.train.lexicon()?;
    let datasets = cmd
        .datasets
        .iter()
        .map(|p| SimilarityDataset::load(p))
        .collect::<Result<Vec<_>>>()?;
    let axis = match cmd.axis {
        AxisArg::TokenFraction => SweepAxis::TokenFraction,
        AxisArg::Window => SweepAxis::Window,
    };
    let table = run_sweep::<Float>(
        &sentences,
        &cmd.train.config(),
        lexicon.as_ref(),
        axis,
        &cmd.values,
        &datasets,
    )?;
    let mut manifest = RunManifest::new("sweep");
    cmd.train.record(&mut manifest);
    manifest.set("axis", axis).set(
        "values",
        cmd.values
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    emit(cmd.output.as_deref(), &mut manifest, |w| table.write_tsv(w))
}
