//! Morpheme lexicon, longest-match segmentation and the per-word map from
//! words to the meaning words of their morphemes.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;

use crate::corpus::WordIndex;
use crate::error::{Error, Result};
use crate::evaluation::cosine;
use crate::matrix::Matrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MorphemeClass {
    Prefix,
    Root,
    Suffix,
}

impl MorphemeClass {
    pub const ALL: [MorphemeClass; 3] = [
        MorphemeClass::Prefix,
        MorphemeClass::Root,
        MorphemeClass::Suffix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MorphemeClass::Prefix => "prefix",
            MorphemeClass::Root => "root",
            MorphemeClass::Suffix => "suffix",
        }
    }

    fn tag(self) -> char {
        match self {
            MorphemeClass::Prefix => 'P',
            MorphemeClass::Root => 'R',
            MorphemeClass::Suffix => 'S',
        }
    }
}

impl std::str::FromStr for MorphemeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "prefix" => Ok(MorphemeClass::Prefix),
            "root" => Ok(MorphemeClass::Root),
            "suffix" => Ok(MorphemeClass::Suffix),
            other => Err(format!("unknown morpheme type {other:?}")),
        }
    }
}

impl fmt::Display for MorphemeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Prefix, root and suffix tables mapping a morpheme to its meaning words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MorphemeLexicon {
    prefixes: HashMap<String, Vec<String>>,
    roots: HashMap<String, Vec<String>>,
    suffixes: HashMap<String, Vec<String>>,
}

impl MorphemeLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    fn table(&self, class: MorphemeClass) -> &HashMap<String, Vec<String>> {
        match class {
            MorphemeClass::Prefix => &self.prefixes,
            MorphemeClass::Root => &self.roots,
            MorphemeClass::Suffix => &self.suffixes,
        }
    }

    fn table_mut(&mut self, class: MorphemeClass) -> &mut HashMap<String, Vec<String>> {
        match class {
            MorphemeClass::Prefix => &mut self.prefixes,
            MorphemeClass::Root => &mut self.roots,
            MorphemeClass::Suffix => &mut self.suffixes,
        }
    }

    /// Adds meanings for a morpheme, merging with existing ones. Morphemes
    /// and meanings are trimmed and lowercased; empty strings are ignored.
    pub fn insert<I, S>(&mut self, class: MorphemeClass, morpheme: &str, meanings: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let morpheme = morpheme.trim().to_lowercase();
        if morpheme.is_empty() {
            return;
        }
        let entry = self.table_mut(class).entry(morpheme).or_default();
        for m in meanings {
            let m = m.as_ref().trim().to_lowercase();
            if !m.is_empty() && !entry.contains(&m) {
                entry.push(m);
            }
        }
    }

    pub fn meanings(&self, class: MorphemeClass, morpheme: &str) -> Option<&[String]> {
        self.table(class).get(morpheme).map(Vec::as_slice)
    }

    pub fn len(&self, class: MorphemeClass) -> usize {
        self.table(class).len()
    }

    pub fn is_empty(&self) -> bool {
        MorphemeClass::ALL.iter().all(|&c| self.table(c).is_empty())
    }

    pub fn contains(&self, class: MorphemeClass, morpheme: &str) -> bool {
        self.table(class).contains_key(morpheme)
    }

    /// Parses the `type<TAB>morpheme<TAB>meaning1,meaning2,...` format.
    /// `path` is only used for error messages.
    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut lexicon = MorphemeLexicon::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let class: MorphemeClass = fields[0].parse().map_err(err)?;
            let morpheme = fields[1].trim();
            if morpheme.is_empty() {
                return Err(err("empty morpheme".into()));
            }
            let meanings: Vec<&str> = fields[2]
                .split(',')
                .map(str::trim)
                .filter(|m| !m.is_empty())
                .collect();
            if meanings.is_empty() {
                return Err(err(format!("morpheme {morpheme:?} has no meanings")));
            }
            lexicon.insert(class, morpheme, meanings);
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(io::BufReader::new(file), path)
    }
}

/// Longest matching prefix, root and suffix of a word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MorphemeSegmentation {
    pub prefix: Option<String>,
    pub root: Option<String>,
    pub suffix: Option<String>,
}

impl MorphemeSegmentation {
    pub fn get(&self, class: MorphemeClass) -> Option<&str> {
        match class {
            MorphemeClass::Prefix => self.prefix.as_deref(),
            MorphemeClass::Root => self.root.as_deref(),
            MorphemeClass::Suffix => self.suffix.as_deref(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_none() && self.root.is_none() && self.suffix.is_none()
    }

    /// Matched `(class, morpheme)` pairs in prefix, root, suffix order.
    pub fn iter(&self) -> impl Iterator<Item = (MorphemeClass, &str)> {
        MorphemeClass::ALL
            .into_iter()
            .filter_map(move |c| self.get(c).map(|m| (c, m)))
    }
}

/// Segments a word by longest match: prefixes are anchored at the start,
/// suffixes at the end and roots may occur anywhere (leftmost wins among
/// equally long roots). A morpheme may span the entire word.
pub fn segment_word(word: &str, lexicon: &MorphemeLexicon) -> MorphemeSegmentation {
    // Byte offsets of every char boundary, including 0 and word.len().
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let nchars = bounds.len() - 1;

    let prefix = bounds[1..]
        .iter()
        .rev()
        .map(|&end| &word[..end])
        .find(|p| lexicon.contains(MorphemeClass::Prefix, p));

    let suffix = bounds[..nchars]
        .iter()
        .map(|&start| &word[start..])
        .find(|s| lexicon.contains(MorphemeClass::Suffix, s));

    let root = (1..=nchars).rev().find_map(|len| {
        (0..=nchars - len)
            .map(|start| &word[bounds[start]..bounds[start + len]])
            .find(|r| lexicon.contains(MorphemeClass::Root, r))
    });

    MorphemeSegmentation {
        prefix: prefix.map(str::to_owned),
        root: root.map(str::to_owned),
        suffix: suffix.map(str::to_owned),
    }
}

/// A meaning word retained for some word, with its cosine similarity to
/// that word under the pretrained embedding and its normalized weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Meaning<F> {
    pub id: u32,
    pub cosine: F,
    pub weight: F,
}

/// Meaning words of one vocabulary word, grouped by morpheme class.
#[derive(Clone, Debug, PartialEq)]
pub struct WordMeanings<F> {
    pub prefix: Vec<Meaning<F>>,
    pub root: Vec<Meaning<F>>,
    pub suffix: Vec<Meaning<F>>,
}

impl<F: Real> WordMeanings<F> {
    pub fn class(&self, class: MorphemeClass) -> &[Meaning<F>] {
        match class {
            MorphemeClass::Prefix => &self.prefix,
            MorphemeClass::Root => &self.root,
            MorphemeClass::Suffix => &self.suffix,
        }
    }

    /// Number of meanings across all classes.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.root.len() + self.suffix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Meaning<F>> {
        self.prefix.iter().chain(&self.root).chain(&self.suffix)
    }

    /// Sets every weight to `cosine / sum(cosines)`. Returns `None` when the
    /// set is empty or the denominator is not strictly positive.
    fn normalized(mut self) -> Option<Self> {
        let total = self.iter().fold(F::zero(), |acc, m| acc + m.cosine);
        if self.is_empty() || !(total > F::zero()) {
            return None;
        }
        for m in self
            .prefix
            .iter_mut()
            .chain(self.root.iter_mut())
            .chain(self.suffix.iter_mut())
        {
            m.weight = m.cosine / total;
        }
        Some(self)
    }
}

/// Per-word meaning sets, indexed by vocabulary id. Words without any
/// surviving meaning have no entry.
#[derive(Clone, Debug, PartialEq)]
pub struct WordMorphemeMap<F> {
    entries: Vec<Option<WordMeanings<F>>>,
}

/// The per-class arg-max restriction of a [`WordMorphemeMap`]; at most one
/// meaning per class, weights renormalized.
pub type MaxMeaningSet<F> = WordMorphemeMap<F>;

impl<F: Real> WordMorphemeMap<F> {
    pub fn get(&self, id: u32) -> Option<&WordMeanings<F>> {
        self.entries.get(id as usize).and_then(Option::as_ref)
    }

    /// Size of the vocabulary the map was built for.
    pub fn vocab_len(&self) -> usize {
        self.entries.len()
    }

    /// Number of words with a non-empty meaning set.
    pub fn mapped_words(&self) -> usize {
        self.entries.iter().flatten().count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &WordMeanings<F>)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|m| (i as u32, m)))
    }

    /// Builds a map directly from meaning sets, normalizing the weights.
    /// Mostly useful for tests and tools that bring their own cosines.
    pub fn from_entries(entries: Vec<Option<WordMeanings<F>>>) -> Self {
        WordMorphemeMap {
            entries: entries
                .into_iter()
                .map(|e| e.and_then(WordMeanings::normalized))
                .collect(),
        }
    }

    /// Writes `word<TAB>P:m:w,...<TAB>R:...<TAB>S:...` rows, weights to six
    /// decimals, in vocabulary order.
    pub fn write_tsv<W: Write>(&self, index: &WordIndex, mut out: W) -> io::Result<()> {
        for (id, meanings) in self.iter() {
            write!(out, "{}", index.word(id))?;
            for class in MorphemeClass::ALL {
                write!(out, "\t{}:", class.tag())?;
                for (i, m) in meanings.class(class).iter().enumerate() {
                    if i > 0 {
                        write!(out, ",")?;
                    }
                    write!(out, "{}:{:.6}", index.word(m.id), m.weight.as_f64())?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Builds the word -> morpheme-meanings map.
///
/// Every word is segmented, each matched morpheme expands to its meaning
/// words (phrases split on whitespace), meanings outside the vocabulary
/// are dropped, and a meaning survives only if its cosine similarity to
/// the word under `pretrained` is strictly greater than `lambda`.
/// Surviving weights are `cos / sum(cos)` over all classes of the word.
pub fn build_word_morpheme_map<F: Real>(
    index: &WordIndex,
    lexicon: &MorphemeLexicon,
    pretrained: &Matrix<F>,
    lambda: f64,
) -> Result<WordMorphemeMap<F>> {
    if !(-1.0..=1.0).contains(&lambda) {
        return Err(Error::Config(format!(
            "lambda must lie in [-1, 1], got {lambda}"
        )));
    }
    if pretrained.rows() != index.len() {
        return Err(Error::Config(format!(
            "pretrained embedding has {} rows for {} words",
            pretrained.rows(),
            index.len()
        )));
    }
    let threshold = F::of(lambda);
    let entries = (0..index.len() as u32)
        .map(|id| {
            let seg = segment_word(index.word(id), lexicon);
            if seg.is_empty() {
                return None;
            }
            let word_vec = pretrained.row(id as usize);
            let mut per_class: [Vec<Meaning<F>>; 3] = Default::default();
            for (slot, class) in MorphemeClass::ALL.into_iter().enumerate() {
                let Some(morpheme) = seg.get(class) else {
                    continue;
                };
                let meanings = lexicon.meanings(class, morpheme).unwrap_or_default();
                for meaning_id in meanings
                    .iter()
                    .flat_map(|m| m.split_whitespace())
                    .filter_map(|w| index.id(w))
                {
                    if per_class[slot].iter().any(|m| m.id == meaning_id) {
                        continue;
                    }
                    let Ok(cos) = cosine(word_vec, pretrained.row(meaning_id as usize)) else {
                        continue;
                    };
                    if cos > threshold {
                        per_class[slot].push(Meaning {
                            id: meaning_id,
                            cosine: cos,
                            weight: F::zero(),
                        });
                    }
                }
            }
            let [prefix, root, suffix] = per_class;
            WordMeanings {
                prefix,
                root,
                suffix,
            }
            .normalized()
        })
        .collect();
    Ok(WordMorphemeMap { entries })
}

/// Keeps, per word and class, only the meaning most similar to the word
/// (ties go to the lexicographically smallest meaning word) and
/// renormalizes the kept weights.
pub fn select_max_meanings<F: Real>(
    map: &WordMorphemeMap<F>,
    index: &WordIndex,
) -> MaxMeaningSet<F> {
    let pick = |ms: &[Meaning<F>]| -> Vec<Meaning<F>> {
        ms.iter()
            .copied()
            .reduce(|best, m| {
                if m.cosine > best.cosine
                    || (m.cosine == best.cosine && index.word(m.id) < index.word(best.id))
                {
                    m
                } else {
                    best
                }
            })
            .into_iter()
            .collect()
    };
    let entries = map
        .entries
        .iter()
        .map(|e| {
            e.as_ref().and_then(|m| {
                WordMeanings {
                    prefix: pick(&m.prefix),
                    root: pick(&m.root),
                    suffix: pick(&m.suffix),
                }
                .normalized()
            })
        })
        .collect();
    WordMorphemeMap { entries }
}
