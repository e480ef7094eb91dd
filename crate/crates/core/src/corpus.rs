//! Corpus reading, tokenization, vocabulary construction, subsampling and
//! context-window iteration.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{Error, Result};

/// Token normalization switches applied by [`tokenize_line`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TokenFilterRules {
    pub drop_numeric: bool,
    pub strip_punctuation: bool,
    pub lowercase: bool,
}

impl Default for TokenFilterRules {
    fn default() -> Self {
        TokenFilterRules {
            drop_numeric: true,
            strip_punctuation: true,
            lowercase: true,
        }
    }
}

fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

/// Splits a line on whitespace and normalizes each token.
///
/// Rules run in order: punctuation is trimmed from both token edges and
/// interior commas/periods are removed, purely numeric tokens are dropped,
/// then the token is lowercased. Tokens that end up empty are discarded.
pub fn tokenize_line(line: &str, rules: &TokenFilterRules) -> Vec<String> {
    line.split_whitespace()
        .filter_map(|raw| {
            let token = if rules.strip_punctuation {
                raw.trim_matches(is_punctuation)
                    .chars()
                    .filter(|&c| c != ',' && c != '.')
                    .collect::<String>()
            } else {
                raw.to_owned()
            };
            if token.is_empty() {
                return None;
            }
            if rules.drop_numeric && token.chars().all(char::is_numeric) {
                return None;
            }
            Some(if rules.lowercase {
                token.to_lowercase()
            } else {
                token
            })
        })
        .collect()
}

/// Reads a corpus file, one sentence per line. Lines that tokenize to
/// nothing are skipped.
pub fn read_sentences(path: &Path, rules: &TokenFilterRules) -> Result<Vec<Vec<String>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sentences = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let tokens = tokenize_line(&line, rules);
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    Ok(sentences)
}

/// Bidirectional word <-> dense id mapping.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordIndex {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl WordIndex {
    /// Builds an index from words in id order. Returns the first duplicate
    /// word as the error value.
    pub fn from_words(words: Vec<String>) -> Result<Self, String> {
        let mut ids = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if ids.insert(w.clone(), i as u32).is_some() {
                return Err(w.clone());
            }
        }
        Ok(WordIndex { words, ids })
    }

    #[inline]
    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    #[inline]
    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Corpus vocabulary: words sorted by descending count, ties broken
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    index: WordIndex,
    counts: Vec<u64>,
    total_tokens: u64,
}

impl Vocabulary {
    pub fn index(&self) -> &WordIndex {
        &self.index
    }

    #[inline]
    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.id(word)
    }

    #[inline]
    pub fn word(&self, id: u32) -> &str {
        self.index.word(id)
    }

    #[inline]
    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of counts over retained words.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.index
            .words()
            .iter()
            .map(String::as_str)
            .zip(self.counts.iter().copied())
    }

    /// Builds a vocabulary from explicit `(word, count)` entries, e.g. a
    /// saved vocabulary file. Entries are re-sorted into canonical order.
    pub fn from_counts(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut entries = entries;
        if entries.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if entries.iter().any(|(_, c)| *c == 0) {
            return Err(Error::Config("vocabulary counts must be positive".into()));
        }
        entries.sort_by(|(wa, ca), (wb, cb)| cb.cmp(ca).then_with(|| wa.cmp(wb)));
        let total_tokens = entries.iter().map(|(_, c)| c).sum();
        let (words, counts): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let index = WordIndex::from_words(words)
            .map_err(|w| Error::Config(format!("duplicate vocabulary word {w:?}")))?;
        Ok(Vocabulary {
            index,
            counts,
            total_tokens,
        })
    }
}

/// Counts tokens and keeps words occurring at least `min_count` times.
pub fn build_vocabulary<I, S>(tokens: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut seen = false;
    for token in tokens {
        seen = true;
        let token = token.as_ref();
        match counts.get_mut(token) {
            Some(c) => *c += 1,
            None => {
                counts.insert(token.to_owned(), 1);
            }
        }
    }
    if !seen {
        return Err(Error::EmptyCorpus);
    }
    let retained: Vec<_> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .collect();
    if retained.is_empty() {
        return Err(Error::Config(format!(
            "no word occurs at least {min_count} times"
        )));
    }
    Vocabulary::from_counts(retained)
}

/// Maps sentences to vocabulary ids, dropping out-of-vocabulary tokens and
/// sentences left empty.
pub fn encode_sentences(sentences: &[Vec<String>], vocab: &Vocabulary) -> Vec<Vec<u32>> {
    sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.id(t)).collect::<Vec<_>>())
        .filter(|s: &Vec<u32>| !s.is_empty())
        .collect()
}

/// Probability of keeping one occurrence of a word during frequent-word
/// subsampling: `min(1, (sqrt(f/t) + 1) * t/f)` with `f` its relative
/// frequency.
pub fn subsample_keep_probability(word_count: u64, total_tokens: u64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Config(format!(
            "subsampling threshold must be positive, got {t}"
        )));
    }
    if word_count == 0 || total_tokens < word_count {
        return Err(Error::Config(format!(
            "invalid word count {word_count} for {total_tokens} tokens"
        )));
    }
    let f = word_count as f64 / total_tokens as f64;
    Ok(((f / t).sqrt() + 1.0) * t / f).map(|p| p.min(1.0))
}

/// Per-word keep probabilities for subsampling a whole vocabulary.
#[derive(Clone, Debug)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    /// `threshold = None` (or a non-positive value) disables subsampling.
    pub fn new(vocab: &Vocabulary, threshold: Option<f64>) -> Result<Self> {
        let keep = match threshold {
            Some(t) if t > 0.0 => vocab
                .counts()
                .iter()
                .map(|&c| subsample_keep_probability(c, vocab.total_tokens(), t))
                .collect::<Result<_>>()?,
            _ => vec![1.0; vocab.len()],
        };
        Ok(Subsampler { keep })
    }

    pub fn keep_probability(&self, id: u32) -> f64 {
        self.keep[id as usize]
    }

    /// Writes the surviving positions of `sentence` into `out`.
    pub fn filter_into<R: Rng + ?Sized>(&self, sentence: &[u32], rng: &mut R, out: &mut Vec<u32>) {
        out.clear();
        for &w in sentence {
            let p = self.keep[w as usize];
            if p >= 1.0 || rng.random::<f64>() < p {
                out.push(w);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WindowMode {
    /// Effective radius drawn uniformly from `1..=k` for every position.
    #[default]
    Dynamic,
    /// Radius always `k`.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingWindow {
    pub target: u32,
    pub context: Vec<u32>,
}

/// Calls `f(rng, target, context)` for every position of `sentence` with a
/// non-empty context. The context buffer is reused between calls.
pub fn for_each_window<R, Fn_>(
    sentence: &[u32],
    window: usize,
    mode: WindowMode,
    rng: &mut R,
    context: &mut Vec<u32>,
    mut f: Fn_,
) where
    R: Rng + ?Sized,
    Fn_: FnMut(&mut R, u32, &[u32]),
{
    debug_assert!(window >= 1);
    let n = sentence.len();
    for i in 0..n {
        let b = match mode {
            WindowMode::Dynamic => rng.random_range(1..=window),
            WindowMode::Fixed => window,
        };
        context.clear();
        let lo = i.saturating_sub(b);
        let hi = (i + b).min(n - 1);
        context.extend(sentence[lo..i].iter().chain(&sentence[i + 1..=hi]));
        if !context.is_empty() {
            f(rng, sentence[i], context);
        }
    }
}

/// Collects the training windows of an already subsampled sentence.
pub fn iterate_windows<R: Rng + ?Sized>(
    sentence: &[u32],
    window: usize,
    mode: WindowMode,
    rng: &mut R,
) -> Vec<TrainingWindow> {
    let mut out = Vec::new();
    let mut buf = Vec::with_capacity(2 * window);
    for_each_window(
        sentence,
        window,
        mode,
        rng,
        &mut buf,
        |_, target, context| {
            out.push(TrainingWindow {
                target,
                context: context.to_vec(),
            })
        },
    );
    out
}
