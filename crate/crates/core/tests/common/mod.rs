//! Shared fixtures for integration tests.
#![allow(dead_code)]

use mwe::evaluation::{AnalogyDataset, AnalogyQuestion};
use mwe::morphology::{MorphemeClass, MorphemeLexicon};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Letters used for generated strings; `x` is reserved to start affixes so
/// that no stem, topic or filler word ends in one.
const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwyz";

fn random_word<R: Rng>(rng: &mut R, len: usize) -> String {
    (0..len)
        .map(|_| *LETTERS.choose(rng).unwrap() as char)
        .collect()
}

fn distinct_words<R: Rng>(
    rng: &mut R,
    n: usize,
    len: usize,
    taken: &mut std::collections::HashSet<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = random_word(rng, len);
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// A corpus with planted morphology.
///
/// Every family word is `stem + affix`. The affix of family `f` is a suffix
/// whose lexicon meaning is a frequent token that shares topic words with
/// the family. Family words are rare; meaning tokens are frequent.
pub struct PlantedCorpus {
    pub sentences: Vec<Vec<String>>,
    pub lexicon: MorphemeLexicon,
    /// `families[f][s]` is stem `s` carrying affix `f`.
    pub families: Vec<Vec<String>>,
    pub meanings: Vec<String>,
    /// `stem_a+f : stem_a+g :: stem_b+f : stem_b+g`.
    pub analogies: AnalogyDataset,
}

#[derive(Clone, Copy, Debug)]
pub struct PlantedParams {
    pub families: usize,
    pub stems: usize,
    pub tokens: usize,
    /// Occurrences of each family word.
    pub family_word_uses: usize,
    pub topic_words: usize,
    pub filler_words: usize,
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            families: 20,
            stems: 8,
            tokens: 1_000_000,
            family_word_uses: 5,
            topic_words: 12,
            filler_words: 3000,
            seed: 7,
        }
    }
}

pub fn planted_corpus(params: PlantedParams) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut taken = std::collections::HashSet::new();
    let affixes: Vec<String> = (0..params.families)
        .map(|f| {
            format!(
                "x{}{}",
                LETTERS[f / LETTERS.len()] as char,
                LETTERS[f % LETTERS.len()] as char
            )
        })
        .collect();
    let stems = distinct_words(&mut rng, params.stems, 5, &mut taken);
    let meanings = distinct_words(&mut rng, params.families, 6, &mut taken);
    let family_topics: Vec<Vec<String>> = (0..params.families)
        .map(|_| distinct_words(&mut rng, params.topic_words, 7, &mut taken))
        .collect();
    let stem_topics: Vec<Vec<String>> = (0..params.stems)
        .map(|_| distinct_words(&mut rng, params.topic_words, 7, &mut taken))
        .collect();
    let filler = distinct_words(&mut rng, params.filler_words, 4, &mut taken);
    // Zipf-like filler frequencies.
    let filler_cdf: Vec<f64> = {
        let w: Vec<f64> = (1..=filler.len()).map(|r| 1.0 / r as f64).collect();
        let total: f64 = w.iter().sum();
        w.iter()
            .scan(0.0, |acc, x| {
                *acc += x / total;
                Some(*acc)
            })
            .collect()
    };
    let draw_filler = |rng: &mut ChaCha8Rng| -> String {
        let u: f64 = rng.random();
        let i = filler_cdf.partition_point(|&c| c < u).min(filler.len() - 1);
        filler[i].clone()
    };

    let families: Vec<Vec<String>> = affixes
        .iter()
        .map(|a| stems.iter().map(|s| format!("{s}{a}")).collect())
        .collect();

    let mut lexicon = MorphemeLexicon::new();
    for (a, m) in affixes.iter().zip(&meanings) {
        lexicon.insert(MorphemeClass::Suffix, a, [m.as_str()]);
    }

    let mut sentences = Vec::new();
    let push = |mut s: Vec<String>, rng: &mut ChaCha8Rng, sentences: &mut Vec<Vec<String>>| {
        s.shuffle(rng);
        sentences.push(s);
    };
    // Family words: family topic plus stem topic plus noise.
    for (f, fam) in families.iter().enumerate() {
        for (s, word) in fam.iter().enumerate() {
            for _ in 0..params.family_word_uses {
                let mut sent = vec![word.clone()];
                sent.extend(family_topics[f].choose_multiple(&mut rng, 2).cloned());
                sent.extend(stem_topics[s].choose_multiple(&mut rng, 2).cloned());
                for _ in 0..5 {
                    sent.push(draw_filler(&mut rng));
                }
                push(sent, &mut rng, &mut sentences);
            }
        }
    }
    // Meaning tokens with their family topic; stem topics alone; filler.
    let mut tokens: usize = sentences.iter().map(Vec::len).sum();
    while tokens < params.tokens {
        let kind = rng.random_range(0..10);
        let mut sent = Vec::new();
        if kind < 4 {
            let f = rng.random_range(0..params.families);
            sent.push(meanings[f].clone());
            sent.extend(family_topics[f].choose_multiple(&mut rng, 4).cloned());
        } else if kind < 6 {
            let s = rng.random_range(0..params.stems);
            sent.extend(stem_topics[s].choose_multiple(&mut rng, 4).cloned());
        }
        for _ in 0..5 {
            sent.push(draw_filler(&mut rng));
        }
        tokens += sent.len();
        push(sent, &mut rng, &mut sentences);
    }
    sentences.shuffle(&mut rng);

    let mut questions = Vec::new();
    for f in 0..params.families {
        let g = (f + 1) % params.families;
        for a in 0..params.stems {
            let b = (a + 1) % params.stems;
            questions.push(AnalogyQuestion {
                a: families[f][a].clone(),
                b: families[g][a].clone(),
                c: families[f][b].clone(),
                d: families[g][b].clone(),
            });
        }
    }
    PlantedCorpus {
        sentences,
        lexicon,
        families,
        meanings,
        analogies: AnalogyDataset::new("planted", questions),
    }
}

// ---------------------------------------------------------------------------
// Gradient oracle
// ---------------------------------------------------------------------------

use mwe::corpus::WordIndex;
use mwe::matrix::Matrix;
use mwe::model::{CompositionTable, EmbeddingMatrix, ModelVariant, MorphemeTable};
use mwe::morphology::{Meaning, WordMeanings, WordMorphemeMap};
use mwe::trainer::{Sigmoid, SigmoidMode, StepContext, StepWorkspace, UnigramTable};

/// Parameter addressed by table (0 input, 1 output, 2 morpheme), row, column.
type Param = (usize, usize, usize);

/// One randomly drawn training step and the independent description of how
/// each context word is composed.
pub struct GradientCase {
    pub variant: ModelVariant,
    pub embeddings: EmbeddingMatrix<f64>,
    pub compositions: CompositionTable<f64>,
    /// Per word: (table, row, coefficient) derived from the raw morpheme data.
    pub oracle_plans: Vec<Vec<(usize, usize, f64)>>,
    pub context: Vec<u32>,
    pub target: u32,
    pub negatives: Vec<u32>,
    pub context_sum: bool,
}

const GRADIENT_WORDS: [&str; 12] = [
    "unkind", "kindness", "rekindle", "happy", "unhappy", "happily", "redo", "doer", "undo",
    "kind", "do", "ness",
];

pub fn random_gradient_case<R: Rng>(
    rng: &mut R,
    variant: ModelVariant,
    dim: usize,
    negative: usize,
) -> GradientCase {
    let v = GRADIENT_WORDS.len();
    let index =
        WordIndex::from_words(GRADIENT_WORDS.iter().map(|s| s.to_string()).collect()).unwrap();
    let (compositions, oracle_plans, morpheme_rows) = match variant {
        ModelVariant::Cbow => (
            CompositionTable::identity(v),
            (0..v).map(|w| vec![(0, w, 1.0)]).collect(),
            0,
        ),
        ModelVariant::Emwe => {
            let mut lex = MorphemeLexicon::new();
            lex.insert(MorphemeClass::Prefix, "un", ["not"]);
            lex.insert(MorphemeClass::Prefix, "re", ["again"]);
            lex.insert(MorphemeClass::Root, "kind", ["kind"]);
            lex.insert(MorphemeClass::Root, "happ", ["luck"]);
            lex.insert(MorphemeClass::Suffix, "ness", ["state"]);
            lex.insert(MorphemeClass::Suffix, "er", ["agent"]);
            let table = MorphemeTable::build(&index, &lex);
            let plans = (0..v)
                .map(|w| {
                    let ms = table.morphemes_of(w as u32);
                    if ms.is_empty() {
                        vec![(0, w, 1.0)]
                    } else {
                        let each = 0.5 / ms.len() as f64;
                        std::iter::once((0, w, 0.5))
                            .chain(ms.iter().map(|&m| (2, m as usize, each)))
                            .collect()
                    }
                })
                .collect();
            (
                CompositionTable::from_morphemes(&table, v).unwrap(),
                plans,
                table.len(),
            )
        }
        _ => {
            let mut entries = Vec::with_capacity(v);
            let mut plans = Vec::with_capacity(v);
            for w in 0..v {
                if rng.random_bool(0.25) {
                    entries.push(None);
                    plans.push(vec![(0, w, 1.0)]);
                    continue;
                }
                let n = rng.random_range(1..=4);
                let cos: Vec<f64> = (0..n).map(|_| rng.random_range(0.4..1.0)).collect();
                let total: f64 = cos.iter().sum();
                let meanings: Vec<Meaning<f64>> = cos
                    .iter()
                    .map(|&c| Meaning {
                        id: rng.random_range(0..v as u32),
                        cosine: c,
                        weight: c / total,
                    })
                    .collect();
                let mut plan = vec![(0, w, 0.5)];
                for m in &meanings {
                    let coef = if variant == ModelVariant::MweA {
                        0.5 / n as f64
                    } else {
                        0.5 * m.weight
                    };
                    plan.push((0, m.id as usize, coef));
                }
                plans.push(plan);
                let mut wm = WordMeanings {
                    prefix: Vec::new(),
                    root: Vec::new(),
                    suffix: Vec::new(),
                };
                for (k, m) in meanings.into_iter().enumerate() {
                    match k % 3 {
                        0 => wm.prefix.push(m),
                        1 => wm.root.push(m),
                        _ => wm.suffix.push(m),
                    }
                }
                entries.push(Some(wm));
            }
            let map = WordMorphemeMap::from_entries(entries);
            (
                CompositionTable::from_meanings(variant, &map).unwrap(),
                plans,
                0,
            )
        }
    };
    let mut uniform = |rows: usize| {
        Matrix::from_vec(
            rows,
            dim,
            (0..rows * dim)
                .map(|_| rng.random_range(-0.5..0.5))
                .collect(),
        )
    };
    let embeddings = EmbeddingMatrix {
        input: uniform(v),
        output: uniform(v),
        morphemes: uniform(morpheme_rows),
    };
    let target = rng.random_range(0..v as u32);
    let context = (0..rng.random_range(1..=4))
        .map(|_| rng.random_range(0..v as u32))
        .collect();
    let negatives = (0..negative)
        .map(|_| loop {
            let n = rng.random_range(0..v as u32);
            if n != target {
                break n;
            }
        })
        .collect();
    GradientCase {
        variant,
        embeddings,
        compositions,
        oracle_plans,
        context,
        target,
        negatives,
        context_sum: rng.random_bool(0.5),
    }
}

fn table_of(e: &EmbeddingMatrix<f64>, t: usize) -> &Matrix<f64> {
    match t {
        0 => &e.input,
        1 => &e.output,
        _ => &e.morphemes,
    }
}

fn table_of_mut(e: &mut EmbeddingMatrix<f64>, t: usize) -> &mut Matrix<f64> {
    match t {
        0 => &mut e.input,
        1 => &mut e.output,
        _ => &mut e.morphemes,
    }
}

fn ln_sigmoid(x: f64) -> f64 {
    // ln(1/(1+e^-x)), branch-stable.
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

impl GradientCase {
    /// Loss recomputed from first principles.
    pub fn oracle_loss(&self, e: &EmbeddingMatrix<f64>) -> f64 {
        let dim = e.input.cols();
        let mut h = vec![0.0; dim];
        for &c in &self.context {
            for &(t, r, coef) in &self.oracle_plans[c as usize] {
                for (hk, x) in h.iter_mut().zip(table_of(e, t).row(r)) {
                    *hk += coef * x;
                }
            }
        }
        if !self.context_sum {
            h.iter_mut().for_each(|x| *x /= self.context.len() as f64);
        }
        let score = |w: u32| {
            e.output
                .row(w as usize)
                .iter()
                .zip(&h)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        -ln_sigmoid(score(self.target))
            - self
                .negatives
                .iter()
                .map(|&n| ln_sigmoid(-score(n)))
                .sum::<f64>()
    }

    /// Largest relative error between the analytic update divided by `-lr`
    /// and the central finite-difference gradient, over every parameter.
    /// Differences are measured relative to `max(|a|, |b|, floor)`.
    pub fn max_relative_error(&self, lr: f64, step: f64, floor: f64) -> (f64, usize) {
        let unigram = UnigramTable::new(&[1; GRADIENT_WORDS.len()], 0.75, 100).unwrap();
        let sigmoid = Sigmoid::new(SigmoidMode::Exact);
        let ctx = StepContext {
            compositions: &self.compositions,
            unigram: &unigram,
            sigmoid: &sigmoid,
            negative: self.negatives.len(),
            context_sum: self.context_sum,
            freeze_meanings: false,
        };
        let mut updated = self.embeddings.clone();
        let mut ws = StepWorkspace::new(updated.dim());
        ctx.update(
            &mut updated,
            &self.context,
            self.target,
            &self.negatives,
            lr,
            &mut ws,
        );

        let mut worst = 0.0f64;
        let mut checked = 0;
        for t in 0..3 {
            let before = table_of(&self.embeddings, t);
            for r in 0..before.rows() {
                for k in 0..before.cols() {
                    let p: Param = (t, r, k);
                    let analytic = (table_of(&updated, t).row(r)[k] - before.row(r)[k]) / -lr;
                    let numeric = self.central_difference(p, step);
                    let denom = analytic.abs().max(numeric.abs()).max(floor);
                    worst = worst.max((analytic - numeric).abs() / denom);
                    checked += 1;
                }
            }
        }
        (worst, checked)
    }

    fn central_difference(&self, (t, r, k): Param, step: f64) -> f64 {
        let mut e = self.embeddings.clone();
        let base = table_of(&e, t).row(r)[k];
        table_of_mut(&mut e, t).row_mut(r)[k] = base + step;
        let up = self.oracle_loss(&e);
        table_of_mut(&mut e, t).row_mut(r)[k] = base - step;
        let down = self.oracle_loss(&e);
        (up - down) / (2.0 * step)
    }
}

/// Runs the finite-difference check on `cases` random configurations cycling
/// through every variant and `m in {1, 5}`. Returns the worst relative error
/// and the number of parameters compared.
pub fn gradient_check(cases: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut total = 0;
    for i in 0..cases {
        let variant = ModelVariant::ALL[i % ModelVariant::ALL.len()];
        let negative = if (i / ModelVariant::ALL.len()).is_multiple_of(2) {
            1
        } else {
            5
        };
        let case = random_gradient_case(&mut rng, variant, 8, negative);
        let (err, n) = case.max_relative_error(1e-6, 1e-4, 1e-6);
        worst = worst.max(err);
        total += n;
    }
    (worst, total)
}

// ---------------------------------------------------------------------------
// Rank-correlation oracle
// ---------------------------------------------------------------------------

/// Average rank by counting: `1 + #less + (#equal - 1) / 2`.
pub fn brute_force_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&a| {
            let less = x.iter().filter(|&&b| b < a).count() as f64;
            let equal = x.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn brute_force_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (brute_force_ranks(x), brute_force_ranks(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            // Pairwise form of the covariance: sum_ij (a_i - a_j)(b_i - b_j) / 2.
            sxy += (rx[i] - rx[j]) * (ry[i] - ry[j]);
            sxx += (rx[i] - rx[j]).powi(2);
            syy += (ry[i] - ry[j]).powi(2);
        }
    }
    sxy / (sxx * syy).sqrt()
}

/// Random scores on a coarse grid so that ties are common.
pub fn tied_scores<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let levels = rng.random_range(2..=10);
    (0..n)
        .map(|_| rng.random_range(0..levels) as f64 * 0.5)
        .collect()
}

// ---------------------------------------------------------------------------
// Planted-morphology measurements
// ---------------------------------------------------------------------------

use mwe::evaluation::cosine;
use mwe::model::WordVectors;

/// Mean cosine over all unordered pairs of words sharing an affix.
pub fn mean_family_cosine<F: mwe::Real>(vectors: &WordVectors<F>, families: &[Vec<String>]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for fam in families {
        for i in 0..fam.len() {
            for j in i + 1..fam.len() {
                if let (Some(a), Some(b)) = (vectors.get(&fam[i]), vectors.get(&fam[j])) {
                    sum += cosine(a, b).map_or(0.0, |c| c.as_f64());
                    n += 1;
                }
            }
        }
    }
    assert!(n > 0, "no family pair in vocabulary");
    sum / n as f64
}
