//! Negative-sampling objective, noise distribution and the two-phase
//! training pipeline.

use std::marker::PhantomData;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    build_vocabulary, encode_sentences, for_each_window, Subsampler, TrainingWindow, Vocabulary,
    WindowMode,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{
    CompositionTable, EmbeddingMatrix, ModelVariant, MorphemeTable, RowRef, WordVectors,
};
use crate::morphology::{
    build_word_morpheme_map, select_max_meanings, MaxMeaningSet, MorphemeLexicon, WordMorphemeMap,
};
use crate::scalar::{axpy, dot, Real};

/// Tokens a worker processes between learning-rate updates.
const LR_UPDATE_INTERVAL: u64 = 10_000;
/// Final learning rate as a fraction of the initial one.
const MIN_LR_FRACTION: f64 = 1e-4;
const MAX_NEGATIVE_REDRAWS: usize = 100;
const SIGMOID_SLOTS: usize = 1000;
const SIGMOID_MAX_EXP: f64 = 6.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SigmoidMode {
    /// Lookup table over `[-6, 6]`, saturating outside.
    #[default]
    Table,
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub dim: usize,
    pub window: usize,
    pub negative: usize,
    /// Total number of passes over the corpus, pretraining included.
    pub epochs: usize,
    /// Leading epochs trained as plain CBOW before morpheme information is
    /// attached.
    pub pretrain_epochs: usize,
    pub lr: f64,
    /// Subsampling threshold; `0` disables subsampling.
    pub sample: f64,
    pub min_count: u64,
    pub lambda: f64,
    pub variant: ModelVariant,
    pub seed: u64,
    pub workers: usize,
    pub window_mode: WindowMode,
    /// Sum composed context vectors instead of averaging them.
    pub context_sum: bool,
    /// Do not update meaning (or morpheme) rows reached through composition.
    pub freeze_meanings: bool,
    pub table_size: usize,
    pub sigmoid: SigmoidMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 200,
            window: 5,
            negative: 20,
            epochs: 5,
            pretrain_epochs: 1,
            lr: 0.05,
            sample: 1e-4,
            min_count: 5,
            lambda: 0.4,
            variant: ModelVariant::Cbow,
            seed: 1,
            workers: 1,
            window_mode: WindowMode::Dynamic,
            context_sum: false,
            freeze_meanings: false,
            table_size: 10_000_000,
            sigmoid: SigmoidMode::Table,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.dim == 0 {
            return fail("dim must be at least 1".into());
        }
        if self.window == 0 {
            return fail("window must be at least 1".into());
        }
        if self.negative == 0 {
            return fail("negative must be at least 1".into());
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.sample >= 0.0) {
            return fail(format!("sample must be non-negative, got {}", self.sample));
        }
        if !(-1.0..=1.0).contains(&self.lambda) {
            return fail(format!("lambda must lie in [-1, 1], got {}", self.lambda));
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.pretrain_epochs > self.epochs {
            return fail(format!(
                "pretrain epochs ({}) exceed total epochs ({})",
                self.pretrain_epochs, self.epochs
            ));
        }
        if self.variant.needs_lexicon()
            && (self.pretrain_epochs == 0 || self.pretrain_epochs == self.epochs)
        {
            return fail(format!(
                "variant {} needs at least one pretraining epoch and one epoch after it",
                self.variant
            ));
        }
        Ok(())
    }
}

/// Noise distribution for negative sampling: word ids laid out so that a
/// uniform slot draw picks word `w` with probability proportional to
/// `count(w)^power`.
#[derive(Clone, Debug)]
pub struct UnigramTable {
    table: Vec<u32>,
}

impl UnigramTable {
    pub fn new(counts: &[u64], power: f64, size: usize) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if size < counts.len() {
            return Err(Error::Config(format!(
                "unigram table size {size} is smaller than the vocabulary ({})",
                counts.len()
            )));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        let mut table = Vec::with_capacity(size);
        let mut cumulative = 0.0;
        for (id, w) in weights.iter().enumerate() {
            cumulative += w;
            let end = if id + 1 == counts.len() {
                size
            } else {
                ((cumulative / total) * size as f64).round() as usize
            };
            while table.len() < end.min(size) {
                table.push(id as u32);
            }
        }
        Ok(UnigramTable { table })
    }

    pub fn from_vocabulary(vocab: &Vocabulary, size: usize) -> Result<Self> {
        Self::new(vocab.counts(), 0.75, size)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.table[rng.random_range(0..self.table.len())]
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Number of slots holding `id`.
    pub fn slots(&self, id: u32) -> usize {
        self.table.iter().filter(|&&w| w == id).count()
    }
}

#[derive(Clone, Debug)]
pub struct Sigmoid<F> {
    table: Vec<F>,
    exact: bool,
}

impl<F: Real> Sigmoid<F> {
    pub fn new(mode: SigmoidMode) -> Self {
        let table = match mode {
            SigmoidMode::Exact => Vec::new(),
            SigmoidMode::Table => (0..SIGMOID_SLOTS)
                .map(|i| {
                    let x = (i as f64 / SIGMOID_SLOTS as f64 * 2.0 - 1.0) * SIGMOID_MAX_EXP;
                    F::of(1.0 / (1.0 + (-x).exp()))
                })
                .collect(),
        };
        Sigmoid {
            table,
            exact: mode == SigmoidMode::Exact,
        }
    }

    #[inline]
    pub fn eval(&self, x: F) -> F {
        if self.exact {
            return F::one() / (F::one() + (-x).exp());
        }
        let max = F::of(SIGMOID_MAX_EXP);
        if x >= max {
            F::one()
        } else if x <= -max {
            F::zero()
        } else {
            let slot = ((x + max) * F::of(SIGMOID_SLOTS as f64 / (2.0 * SIGMOID_MAX_EXP)))
                .to_usize()
                .unwrap_or(0);
            self.table[slot.min(SIGMOID_SLOTS - 1)]
        }
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus<F: Real>(x: F) -> F {
    x.max(F::zero()) + (-x.abs()).exp().ln_1p()
}

/// Negative log-likelihood of the target against the negatives:
/// `-[ln s(o_t . h) + sum ln(1 - s(o_n . h))]`.
pub fn negative_sampling_loss<F: Real>(
    h: &[F],
    target: u32,
    negatives: &[u32],
    output: &Matrix<F>,
) -> F {
    let pos = softplus(-dot(output.row(target as usize), h));
    negatives.iter().fold(pos, |acc, &n| {
        acc + softplus(dot(output.row(n as usize), h))
    })
}

/// Lock-free view of the parameter tables shared by training workers.
///
/// Rows are handed out as mutable slices without synchronization: workers
/// race on shared rows and the resulting lost updates are tolerated.
struct SharedParams<'a, F> {
    input: *mut F,
    output: *mut F,
    morphemes: *mut F,
    dim: usize,
    input_rows: usize,
    morpheme_rows: usize,
    _marker: PhantomData<&'a mut EmbeddingMatrix<F>>,
}

unsafe impl<F: Send + Sync> Send for SharedParams<'_, F> {}
unsafe impl<F: Send + Sync> Sync for SharedParams<'_, F> {}

impl<'a, F: Real> SharedParams<'a, F> {
    fn new(emb: &'a mut EmbeddingMatrix<F>) -> Self {
        SharedParams {
            dim: emb.dim(),
            input_rows: emb.input.rows(),
            morpheme_rows: emb.morphemes.rows(),
            input: emb.input.as_mut_slice().as_mut_ptr(),
            output: emb.output.as_mut_slice().as_mut_ptr(),
            morphemes: emb.morphemes.as_mut_slice().as_mut_ptr(),
            _marker: PhantomData,
        }
    }

    /// SAFETY: the caller must not hold another slice of the same row in
    /// the current thread.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    unsafe fn input_row(&self, r: RowRef) -> &mut [F] {
        let (base, i) = match r {
            RowRef::Word(i) => {
                assert!((i as usize) < self.input_rows);
                (self.input, i as usize)
            }
            RowRef::Morpheme(i) => {
                assert!((i as usize) < self.morpheme_rows);
                (self.morphemes, i as usize)
            }
        };
        std::slice::from_raw_parts_mut(base.add(i * self.dim), self.dim)
    }

    /// SAFETY: as for [`SharedParams::input_row`].
    #[inline]
    #[allow(clippy::mut_from_ref)]
    unsafe fn output_row(&self, id: u32) -> &mut [F] {
        assert!((id as usize) < self.input_rows);
        std::slice::from_raw_parts_mut(self.output.add(id as usize * self.dim), self.dim)
    }
}

/// Scratch buffers reused across steps.
#[derive(Clone, Debug)]
pub struct StepWorkspace<F> {
    h: Vec<F>,
    e: Vec<F>,
    gains: Vec<F>,
    negatives: Vec<u32>,
}

impl<F: Real> StepWorkspace<F> {
    pub fn new(dim: usize) -> Self {
        StepWorkspace {
            h: vec![F::zero(); dim],
            e: vec![F::zero(); dim],
            gains: Vec::new(),
            negatives: Vec::new(),
        }
    }

    /// Hidden vector of the last step.
    pub fn hidden(&self) -> &[F] {
        &self.h
    }
}

/// Everything a single SGD step reads besides the parameters.
#[derive(Clone, Copy)]
pub struct StepContext<'a, F> {
    pub compositions: &'a CompositionTable<F>,
    pub unigram: &'a UnigramTable,
    pub sigmoid: &'a Sigmoid<F>,
    pub negative: usize,
    pub context_sum: bool,
    pub freeze_meanings: bool,
}

impl<'a, F: Real> StepContext<'a, F> {
    /// Draws `negative` noise words, redrawing any that equal the target.
    pub fn draw_negatives<R: Rng + ?Sized>(&self, target: u32, rng: &mut R, out: &mut Vec<u32>) {
        out.clear();
        for _ in 0..self.negative {
            for _ in 0..MAX_NEGATIVE_REDRAWS {
                let n = self.unigram.sample(rng);
                if n != target {
                    out.push(n);
                    break;
                }
            }
        }
    }

    /// One SGD step on a training window with freshly drawn negatives.
    /// Returns the loss before the update.
    pub fn sgd_step<R: Rng + ?Sized>(
        &self,
        embeddings: &mut EmbeddingMatrix<F>,
        window: &TrainingWindow,
        lr: F,
        rng: &mut R,
        ws: &mut StepWorkspace<F>,
    ) -> F {
        let mut negatives = std::mem::take(&mut ws.negatives);
        self.draw_negatives(window.target, rng, &mut negatives);
        let loss = self.update(
            embeddings,
            &window.context,
            window.target,
            &negatives,
            lr,
            ws,
        );
        ws.negatives = negatives;
        loss
    }

    /// One SGD step with the given negatives. Returns the loss before the
    /// update.
    pub fn update(
        &self,
        embeddings: &mut EmbeddingMatrix<F>,
        context: &[u32],
        target: u32,
        negatives: &[u32],
        lr: F,
        ws: &mut StepWorkspace<F>,
    ) -> F {
        let params = SharedParams::new(embeddings);
        self.update_shared(&params, context, target, negatives, lr, ws)
    }

    fn update_shared(
        &self,
        params: &SharedParams<'_, F>,
        context: &[u32],
        target: u32,
        negatives: &[u32],
        lr: F,
        ws: &mut StepWorkspace<F>,
    ) -> F {
        let StepWorkspace { h, e, gains, .. } = ws;
        h.iter_mut().for_each(|x| *x = F::zero());
        e.iter_mut().for_each(|x| *x = F::zero());

        // SAFETY (all blocks below): each borrowed row is dropped before the
        // next one is taken.
        for &c in context {
            for &(row, coef) in self.compositions.plan(c) {
                axpy(coef, unsafe { params.input_row(row) }, h);
            }
        }
        let scale = if self.context_sum {
            F::one()
        } else {
            F::one() / F::of(context.len() as f64)
        };
        if !self.context_sum {
            h.iter_mut().for_each(|x| *x *= scale);
        }

        // Scores and e use pre-update output rows even when a negative
        // repeats, so the step follows the exact gradient.
        let mut loss = F::zero();
        let samples =
            || std::iter::once((target, F::one())).chain(negatives.iter().map(|&n| (n, F::zero())));
        gains.clear();
        for (id, label) in samples() {
            let out = unsafe { params.output_row(id) };
            let f = dot(out, h);
            loss += if label > F::zero() {
                softplus(-f)
            } else {
                softplus(f)
            };
            let g = (label - self.sigmoid.eval(f)) * lr;
            axpy(g, out, e);
            gains.push(g);
        }
        for ((id, _), &g) in samples().zip(gains.iter()) {
            axpy(g, h, unsafe { params.output_row(id) });
        }

        for &c in context {
            for (k, &(row, coef)) in self.compositions.plan(c).iter().enumerate() {
                if k > 0 && self.freeze_meanings {
                    continue;
                }
                axpy(scale * coef, e, unsafe { params.input_row(row) });
            }
        }
        loss
    }
}

/// Linear decay from `lr0` over `budget` tokens, floored at
/// `lr0 * MIN_LR_FRACTION`.
fn scheduled_lr(lr0: f64, budget: u64, processed: u64) -> f64 {
    let progress = processed as f64 / (budget + 1) as f64;
    lr0 * (1.0 - progress).max(MIN_LR_FRACTION)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// 1 for CBOW pretraining, 2 for variant training.
    pub phase: u8,
    pub mean_loss: f64,
    pub windows: u64,
    pub final_lr: f64,
    pub seconds: f64,
}

/// Holds the encoded corpus, parameters and random streams of one run.
pub struct Trainer<F> {
    config: TrainingConfig,
    corpus: Vec<Vec<u32>>,
    corpus_tokens: u64,
    embeddings: EmbeddingMatrix<F>,
    unigram: UnigramTable,
    subsampler: Subsampler,
    sigmoid: Sigmoid<F>,
    rngs: Vec<ChaCha8Rng>,
    processed: u64,
}

impl<F: Real> Trainer<F> {
    pub fn new(
        vocab: &Vocabulary,
        corpus: Vec<Vec<u32>>,
        config: &TrainingConfig,
        morpheme_rows: usize,
    ) -> Result<Self> {
        config.validate()?;
        let corpus_tokens = corpus.iter().map(|s| s.len() as u64).sum();
        if corpus_tokens == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
        init_rng.set_stream(u64::MAX);
        let embeddings =
            EmbeddingMatrix::random(vocab.len(), morpheme_rows, config.dim, &mut init_rng);
        let rngs = (0..config.workers as u64)
            .map(|w| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(w);
                rng
            })
            .collect();
        Ok(Trainer {
            unigram: UnigramTable::from_vocabulary(vocab, config.table_size.max(vocab.len()))?,
            subsampler: Subsampler::new(vocab, Some(config.sample).filter(|&t| t > 0.0))?,
            sigmoid: Sigmoid::new(config.sigmoid),
            config: config.clone(),
            corpus,
            corpus_tokens,
            embeddings,
            rngs,
            processed: 0,
        })
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix<F> {
        &self.embeddings
    }

    pub fn into_embeddings(self) -> EmbeddingMatrix<F> {
        self.embeddings
    }

    pub fn corpus_tokens(&self) -> u64 {
        self.corpus_tokens
    }

    /// Runs `epochs` passes over the corpus composing context words with
    /// `compositions`. The learning-rate schedule spans the configured
    /// total epoch count across calls.
    pub fn run_epochs(
        &mut self,
        epochs: usize,
        compositions: &CompositionTable<F>,
        phase: u8,
    ) -> Vec<EpochStats> {
        (0..epochs)
            .map(|_| self.run_epoch(compositions, phase))
            .collect()
    }

    fn run_epoch(&mut self, compositions: &CompositionTable<F>, phase: u8) -> EpochStats {
        let start = Instant::now();
        let workers = self.config.workers;
        let shard_len = self.corpus.len().div_ceil(workers).max(1);
        let global = AtomicU64::new(self.processed);
        let (lr0, budget) = (
            self.config.lr,
            self.config.epochs as u64 * self.corpus_tokens,
        );
        let lr_at = |p: u64| scheduled_lr(lr0, budget, p);
        let ctx = StepContext {
            compositions,
            unigram: &self.unigram,
            sigmoid: &self.sigmoid,
            negative: self.config.negative,
            context_sum: self.config.context_sum,
            freeze_meanings: self.config.freeze_meanings,
        };
        let params = SharedParams::new(&mut self.embeddings);
        let (window, mode, dim) = (self.config.window, self.config.window_mode, self.config.dim);
        let subsampler = &self.subsampler;

        let run_shard = |shard: &[Vec<u32>], rng: &mut ChaCha8Rng| -> (f64, u64, f64) {
            let mut ws = StepWorkspace::new(dim);
            let mut kept = Vec::new();
            let mut ctx_buf = Vec::with_capacity(2 * window);
            let mut negatives = Vec::with_capacity(ctx.negative);
            let mut lr = lr_at(global.load(Ordering::Relaxed));
            let mut pending = 0u64;
            let (mut loss, mut windows) = (0.0f64, 0u64);
            for sentence in shard {
                pending += sentence.len() as u64;
                if pending >= LR_UPDATE_INTERVAL {
                    let done = global.fetch_add(pending, Ordering::Relaxed) + pending;
                    pending = 0;
                    lr = lr_at(done);
                }
                subsampler.filter_into(sentence, rng, &mut kept);
                let lr_f = F::of(lr);
                for_each_window(
                    &kept,
                    window,
                    mode,
                    rng,
                    &mut ctx_buf,
                    |rng, target, context| {
                        ctx.draw_negatives(target, rng, &mut negatives);
                        let l =
                            ctx.update_shared(&params, context, target, &negatives, lr_f, &mut ws);
                        loss += l.as_f64();
                        windows += 1;
                    },
                );
            }
            global.fetch_add(pending, Ordering::Relaxed);
            (loss, windows, lr)
        };

        let results: Vec<(f64, u64, f64)> = if workers == 1 {
            vec![run_shard(&self.corpus, &mut self.rngs[0])]
        } else {
            let corpus = &self.corpus;
            std::thread::scope(|s| {
                let handles: Vec<_> = corpus
                    .chunks(shard_len)
                    .zip(self.rngs.iter_mut())
                    .map(|(shard, rng)| s.spawn(|| run_shard(shard, rng)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .collect()
            })
        };

        self.processed = global.into_inner();
        let loss: f64 = results.iter().map(|r| r.0).sum();
        let windows: u64 = results.iter().map(|r| r.1).sum();
        let final_lr = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        let seconds = start.elapsed().as_secs_f64();
        let stats = EpochStats {
            phase,
            mean_loss: if windows > 0 {
                loss / windows as f64
            } else {
                0.0
            },
            windows,
            final_lr,
            seconds,
        };
        log::info!(
            "phase {} epoch done: loss {:.4}, lr {:.6}, {:.0} tokens/s",
            phase,
            stats.mean_loss,
            stats.final_lr,
            self.corpus_tokens as f64 / seconds.max(1e-9)
        );
        stats
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub pretrain: Duration,
    pub map: Duration,
    pub train: Duration,
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutput<F> {
    pub vocab: Vocabulary,
    pub embeddings: EmbeddingMatrix<F>,
    pub compositions: CompositionTable<F>,
    /// Phase-1 input vectors, kept for variants that derive morpheme
    /// information from them.
    pub pretrained: Option<Matrix<F>>,
    pub morpheme_map: Option<WordMorphemeMap<F>>,
    pub max_meanings: Option<MaxMeaningSet<F>>,
    pub morpheme_table: Option<MorphemeTable>,
    pub epochs: Vec<EpochStats>,
    pub timings: PhaseTimings,
    pub corpus_tokens: u64,
}

impl<F: Real> TrainOutput<F> {
    /// Word representations: each word's composed input vector. Equal to
    /// [`Self::input_vectors`] for CBOW and for words without morpheme
    /// information.
    pub fn word_vectors(&self) -> WordVectors<F> {
        WordVectors {
            index: self.vocab.index().clone(),
            vectors: self.compositions.composed_vectors(&self.embeddings),
        }
    }

    /// Raw trained input rows, without composition.
    pub fn input_vectors(&self) -> WordVectors<F> {
        WordVectors {
            index: self.vocab.index().clone(),
            vectors: self.embeddings.input.clone(),
        }
    }
}

/// Trains embeddings on tokenized sentences.
///
/// Phase 1 trains plain CBOW for `pretrain_epochs`. For morpheme variants
/// the Phase-1 input vectors then fix the meaning map (and its max
/// restriction for MWE-M), and the remaining epochs train with the
/// variant's composition. CBOW simply continues for the remaining epochs.
pub fn train<F: Real>(
    sentences: &[Vec<String>],
    config: &TrainingConfig,
    lexicon: Option<&MorphemeLexicon>,
) -> Result<TrainOutput<F>> {
    config.validate()?;
    let lexicon = match (config.variant.needs_lexicon(), lexicon) {
        (true, None) => return Err(Error::MissingLexicon(config.variant.name())),
        (_, l) => l,
    };
    let vocab = build_vocabulary(sentences.iter().flatten(), config.min_count)?;
    let corpus = encode_sentences(sentences, &vocab);

    let morpheme_table = match (config.variant, lexicon) {
        (ModelVariant::Emwe, Some(lex)) => Some(MorphemeTable::build(vocab.index(), lex)),
        _ => None,
    };
    let mut trainer = Trainer::<F>::new(
        &vocab,
        corpus,
        config,
        morpheme_table.as_ref().map_or(0, MorphemeTable::len),
    )?;
    let corpus_tokens = trainer.corpus_tokens();
    log::info!(
        "vocabulary {} words, {} training tokens, variant {}",
        vocab.len(),
        corpus_tokens,
        config.variant
    );

    let mut timings = PhaseTimings::default();
    let identity = CompositionTable::identity(vocab.len());
    let start = Instant::now();
    let mut epochs = trainer.run_epochs(config.pretrain_epochs, &identity, 1);
    timings.pretrain = start.elapsed();

    let start = Instant::now();
    let mut pretrained = None;
    let mut morpheme_map = None;
    let mut max_meanings = None;
    let compositions = match config.variant {
        ModelVariant::Cbow => identity,
        ModelVariant::Emwe => CompositionTable::from_morphemes(
            morpheme_table.as_ref().expect("built above"),
            vocab.len(),
        )?,
        variant => {
            let snapshot = trainer.embeddings().input.clone();
            let lex = lexicon.expect("checked above");
            let map = build_word_morpheme_map(vocab.index(), lex, &snapshot, config.lambda)?;
            log::info!(
                "{} of {} words carry morpheme meanings",
                map.mapped_words(),
                vocab.len()
            );
            let table = if variant == ModelVariant::MweM {
                let max = select_max_meanings(&map, vocab.index());
                let t = CompositionTable::from_meanings(variant, &max)?;
                max_meanings = Some(max);
                t
            } else {
                CompositionTable::from_meanings(variant, &map)?
            };
            morpheme_map = Some(map);
            pretrained = Some(snapshot);
            table
        }
    };
    timings.map = start.elapsed();

    let start = Instant::now();
    epochs.extend(trainer.run_epochs(config.epochs - config.pretrain_epochs, &compositions, 2));
    timings.train = start.elapsed();

    Ok(TrainOutput {
        vocab,
        embeddings: trainer.into_embeddings(),
        compositions,
        pretrained,
        morpheme_map,
        max_meanings,
        morpheme_table,
        epochs,
        timings,
        corpus_tokens,
    })
}
