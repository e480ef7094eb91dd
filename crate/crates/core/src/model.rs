//! Embedding tables and the context-word composition used by every model
//! variant.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::corpus::WordIndex;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::morphology::{
    segment_word, MorphemeClass, MorphemeLexicon, WordMeanings, WordMorphemeMap,
};
use crate::scalar::{axpy, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelVariant {
    /// Plain CBOW.
    Cbow,
    /// Explicit baseline: morpheme strings get their own vectors.
    Emwe,
    /// Meaning vectors averaged with equal weight.
    MweA,
    /// Meaning vectors weighted by normalized similarity to the word.
    MweS,
    /// Only the most similar meaning per morpheme class, similarity weighted.
    MweM,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 5] = [
        ModelVariant::Cbow,
        ModelVariant::Emwe,
        ModelVariant::MweA,
        ModelVariant::MweS,
        ModelVariant::MweM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Cbow => "cbow",
            ModelVariant::Emwe => "emwe",
            ModelVariant::MweA => "mwe-a",
            ModelVariant::MweS => "mwe-s",
            ModelVariant::MweM => "mwe-m",
        }
    }

    /// Variants composing context words with morpheme meaning words.
    pub fn uses_meanings(self) -> bool {
        matches!(
            self,
            ModelVariant::MweA | ModelVariant::MweS | ModelVariant::MweM
        )
    }

    pub fn needs_lexicon(self) -> bool {
        self != ModelVariant::Cbow
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.to_lowercase();
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == lower || v.name().replace('-', "_") == lower)
            .ok_or_else(|| {
                format!("unknown variant {s:?} (expected cbow, emwe, mwe-a, mwe-s or mwe-m)")
            })
    }
}

/// A row of one of the input-side tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowRef {
    /// Input vector of a vocabulary word (words and meaning words alike).
    Word(u32),
    /// Vector of a morpheme string in the explicit baseline's table.
    Morpheme(u32),
}

/// Input, output and morpheme vector tables.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix<F> {
    pub input: Matrix<F>,
    pub output: Matrix<F>,
    /// Empty unless the explicit baseline is trained.
    pub morphemes: Matrix<F>,
}

impl<F: Real> EmbeddingMatrix<F> {
    /// Input and morpheme vectors uniform in `[-0.5/dim, 0.5/dim]`, output
    /// vectors zero.
    pub fn random<R: Rng + ?Sized>(
        vocab_len: usize,
        morpheme_len: usize,
        dim: usize,
        rng: &mut R,
    ) -> Self {
        let scale = 1.0 / dim as f64;
        let mut init = |rows: usize| {
            let data = (0..rows * dim)
                .map(|_| F::of((rng.random::<f64>() - 0.5) * scale))
                .collect();
            Matrix::from_vec(rows, dim, data)
        };
        let input = init(vocab_len);
        let morphemes = init(morpheme_len);
        EmbeddingMatrix {
            input,
            output: Matrix::zeros(vocab_len, dim),
            morphemes,
        }
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn vocab_len(&self) -> usize {
        self.input.rows()
    }

    pub fn row(&self, r: RowRef) -> &[F] {
        match r {
            RowRef::Word(i) => self.input.row(i as usize),
            RowRef::Morpheme(i) => self.morphemes.row(i as usize),
        }
    }

    pub fn row_mut(&mut self, r: RowRef) -> &mut [F] {
        match r {
            RowRef::Word(i) => self.input.row_mut(i as usize),
            RowRef::Morpheme(i) => self.morphemes.row_mut(i as usize),
        }
    }

    fn contains(&self, r: RowRef) -> bool {
        match r {
            RowRef::Word(i) => (i as usize) < self.input.rows(),
            RowRef::Morpheme(i) => (i as usize) < self.morphemes.rows(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.input.is_finite() && self.output.is_finite() && self.morphemes.is_finite()
    }
}

/// Word vectors for evaluation: an index plus one row per word.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors<F> {
    pub index: WordIndex,
    pub vectors: Matrix<F>,
}

impl<F: Real> WordVectors<F> {
    pub fn new(index: WordIndex, vectors: Matrix<F>) -> Result<Self> {
        if index.len() != vectors.rows() {
            return Err(Error::Config(format!(
                "{} words but {} vectors",
                index.len(),
                vectors.rows()
            )));
        }
        Ok(WordVectors { index, vectors })
    }

    pub fn get(&self, word: &str) -> Option<&[F]> {
        self.index.id(word).map(|i| self.vectors.row(i as usize))
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Morpheme strings of the explicit baseline, keyed by class so that a
/// prefix and a root with the same spelling stay distinct, plus every
/// vocabulary word's matched morpheme rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MorphemeTable {
    keys: Vec<(MorphemeClass, String)>,
    word_morphemes: Vec<Vec<u32>>,
}

impl MorphemeTable {
    pub fn build(index: &WordIndex, lexicon: &MorphemeLexicon) -> Self {
        let mut ids: HashMap<(MorphemeClass, String), u32> = HashMap::new();
        let mut keys = Vec::new();
        let word_morphemes = index
            .words()
            .iter()
            .map(|w| {
                segment_word(w, lexicon)
                    .iter()
                    .map(|(class, m)| {
                        let key = (class, m.to_owned());
                        *ids.entry(key.clone()).or_insert_with(|| {
                            keys.push(key);
                            keys.len() as u32 - 1
                        })
                    })
                    .collect()
            })
            .collect();
        MorphemeTable {
            keys,
            word_morphemes,
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, id: u32) -> (MorphemeClass, &str) {
        let (c, m) = &self.keys[id as usize];
        (*c, m)
    }

    pub fn morphemes_of(&self, word: u32) -> &[u32] {
        self.word_morphemes
            .get(word as usize)
            .map_or(&[], Vec::as_slice)
    }
}

/// Auxiliary information used to compose one context word.
#[derive(Clone, Copy, Debug)]
pub enum MorphemeInfo<'a, F> {
    None,
    Meanings(&'a WordMeanings<F>),
    Morphemes(&'a [u32]),
}

/// A composed context vector together with the rows it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Composition<F> {
    pub constituents: Vec<(RowRef, F)>,
    pub value: Vec<F>,
}

/// Rows and coefficients making up a context word's composed vector.
///
/// The word itself always comes first. With no morpheme information the
/// word gets coefficient 1; otherwise it gets one half and the remaining
/// half is spread over meanings (equally for MWE-A, by weight for MWE-S/M)
/// or over morpheme rows (equally, explicit baseline).
pub fn composition_plan<F: Real>(
    variant: ModelVariant,
    word_id: u32,
    info: MorphemeInfo<'_, F>,
) -> Result<Vec<(RowRef, F)>> {
    let word = RowRef::Word(word_id);
    let half = F::of(0.5);
    let plan = match (variant, info) {
        (ModelVariant::Cbow, _) | (_, MorphemeInfo::None) => vec![(word, F::one())],
        (ModelVariant::MweA, MorphemeInfo::Meanings(m)) if !m.is_empty() => {
            let each = half / F::of(m.len() as f64);
            std::iter::once((word, half))
                .chain(m.iter().map(|x| (RowRef::Word(x.id), each)))
                .collect()
        }
        (ModelVariant::MweS | ModelVariant::MweM, MorphemeInfo::Meanings(m)) if !m.is_empty() => {
            std::iter::once((word, half))
                .chain(m.iter().map(|x| (RowRef::Word(x.id), half * x.weight)))
                .collect()
        }
        (ModelVariant::Emwe, MorphemeInfo::Morphemes(ms)) if !ms.is_empty() => {
            let each = half / F::of(ms.len() as f64);
            std::iter::once((word, half))
                .chain(ms.iter().map(|&m| (RowRef::Morpheme(m), each)))
                .collect()
        }
        (_, MorphemeInfo::Meanings(m)) if m.is_empty() => vec![(word, F::one())],
        (_, MorphemeInfo::Morphemes([])) => vec![(word, F::one())],
        (v, _) => {
            return Err(Error::Config(format!(
                "morpheme information does not match variant {v}"
            )))
        }
    };
    Ok(plan)
}

/// Composes the input-side representation of context word `word_id`.
pub fn compose_context_vector<F: Real>(
    variant: ModelVariant,
    word_id: u32,
    info: MorphemeInfo<'_, F>,
    embeddings: &EmbeddingMatrix<F>,
) -> Result<Composition<F>> {
    if word_id as usize >= embeddings.vocab_len() {
        return Err(Error::UnknownId(word_id as usize));
    }
    let constituents = composition_plan(variant, word_id, info)?;
    let mut value = vec![F::zero(); embeddings.dim()];
    for &(row, coef) in &constituents {
        if !embeddings.contains(row) {
            return Err(Error::Config(format!(
                "composition refers to missing row {row:?}"
            )));
        }
        axpy(coef, embeddings.row(row), &mut value);
    }
    Ok(Composition {
        constituents,
        value,
    })
}

/// Per-row scale factors of a gradient flowing into the composed vector.
/// The composition is linear, so these are exactly its coefficients.
pub fn gradient_coefficients<F: Real>(composition: &Composition<F>) -> Vec<(RowRef, F)> {
    composition.constituents.clone()
}

/// Precomputed composition plans for every vocabulary word, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionTable<F> {
    offsets: Vec<usize>,
    entries: Vec<(RowRef, F)>,
}

impl<F: Real> CompositionTable<F> {
    /// Identity plans: every word composes to itself.
    pub fn identity(vocab_len: usize) -> Self {
        CompositionTable {
            offsets: (0..=vocab_len).collect(),
            entries: (0..vocab_len as u32)
                .map(|i| (RowRef::Word(i), F::one()))
                .collect(),
        }
    }

    /// Plans for a meaning-based variant from its (possibly max-restricted)
    /// meaning map.
    pub fn from_meanings(variant: ModelVariant, map: &WordMorphemeMap<F>) -> Result<Self> {
        Self::build(map.vocab_len(), |id| {
            composition_plan(
                variant,
                id,
                map.get(id)
                    .map_or(MorphemeInfo::None, MorphemeInfo::Meanings),
            )
        })
    }

    pub fn from_morphemes(table: &MorphemeTable, vocab_len: usize) -> Result<Self> {
        Self::build(vocab_len, |id| {
            composition_plan(
                ModelVariant::Emwe,
                id,
                MorphemeInfo::Morphemes(table.morphemes_of(id)),
            )
        })
    }

    fn build(
        vocab_len: usize,
        mut plan: impl FnMut(u32) -> Result<Vec<(RowRef, F)>>,
    ) -> Result<Self> {
        let mut offsets = Vec::with_capacity(vocab_len + 1);
        let mut entries = Vec::with_capacity(vocab_len);
        offsets.push(0);
        for id in 0..vocab_len as u32 {
            entries.extend(plan(id)?);
            offsets.push(entries.len());
        }
        Ok(CompositionTable { offsets, entries })
    }

    #[inline]
    pub fn plan(&self, word: u32) -> &[(RowRef, F)] {
        let w = word as usize;
        &self.entries[self.offsets[w]..self.offsets[w + 1]]
    }

    pub fn vocab_len(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Composed vector of every word (the word's representation as a
    /// context word).
    pub fn composed_vectors(&self, embeddings: &EmbeddingMatrix<F>) -> Matrix<F> {
        let dim = embeddings.dim();
        let mut out = Matrix::zeros(self.vocab_len(), dim);
        for w in 0..self.vocab_len() {
            let row = out.row_mut(w);
            for &(r, c) in self.plan(w as u32) {
                axpy(c, embeddings.row(r), row);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::Meaning;
    use proptest::prelude::*;

    fn emb(rows: &[Vec<f64>]) -> EmbeddingMatrix<f64> {
        let input = Matrix::from_rows(rows);
        EmbeddingMatrix {
            output: Matrix::zeros(input.rows(), input.cols()),
            morphemes: Matrix::zeros(0, input.cols()),
            input,
        }
    }

    fn meanings(ws: &[(u32, f64)]) -> WordMeanings<f64> {
        WordMeanings {
            prefix: ws
                .iter()
                .map(|&(id, weight)| Meaning {
                    id,
                    cosine: weight,
                    weight,
                })
                .collect(),
            root: vec![],
            suffix: vec![],
        }
    }

    #[test]
    fn mwe_a_single_meaning() {
        let e = emb(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let m = meanings(&[(1, 1.0)]);
        let c =
            compose_context_vector(ModelVariant::MweA, 0, MorphemeInfo::Meanings(&m), &e).unwrap();
        assert_eq!(c.value, vec![1.0, 1.0]);
        let s =
            compose_context_vector(ModelVariant::MweS, 0, MorphemeInfo::Meanings(&m), &e).unwrap();
        assert_eq!(s.value, c.value);
    }

    #[test]
    fn empty_info_degrades_to_cbow() {
        let e = emb(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let empty = meanings(&[]);
        for v in ModelVariant::ALL {
            for info in [
                MorphemeInfo::None,
                MorphemeInfo::Meanings(&empty),
                MorphemeInfo::Morphemes(&[]),
            ] {
                let c = compose_context_vector(v, 0, info, &e).unwrap();
                assert_eq!(c.value, vec![2.0, 0.0]);
                assert_eq!(gradient_coefficients(&c), vec![(RowRef::Word(0), 1.0)]);
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        let e = emb(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let m = meanings(&[(1, 0.75), (2, 0.25)]);
        let a =
            compose_context_vector(ModelVariant::MweA, 0, MorphemeInfo::Meanings(&m), &e).unwrap();
        assert_eq!(
            gradient_coefficients(&a),
            vec![
                (RowRef::Word(0), 0.5),
                (RowRef::Word(1), 0.25),
                (RowRef::Word(2), 0.25)
            ]
        );
        let s =
            compose_context_vector(ModelVariant::MweS, 0, MorphemeInfo::Meanings(&m), &e).unwrap();
        assert_eq!(
            gradient_coefficients(&s),
            vec![
                (RowRef::Word(0), 0.5),
                (RowRef::Word(1), 0.375),
                (RowRef::Word(2), 0.125)
            ]
        );
        let c =
            compose_context_vector(ModelVariant::Cbow, 0, MorphemeInfo::Meanings(&m), &e).unwrap();
        assert_eq!(gradient_coefficients(&c), vec![(RowRef::Word(0), 1.0)]);
    }

    #[test]
    fn explicit_baseline_uses_morpheme_rows() {
        let mut e = emb(&[vec![2.0, 2.0]]);
        e.morphemes = Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 4.0]]);
        let c = compose_context_vector(ModelVariant::Emwe, 0, MorphemeInfo::Morphemes(&[0, 1]), &e)
            .unwrap();
        assert_eq!(c.value, vec![2.0, 2.0]);
        assert_eq!(c.constituents[1], (RowRef::Morpheme(0), 0.25));
    }

    #[test]
    fn unknown_word_and_mismatched_info_are_errors() {
        let e = emb(&[vec![1.0]]);
        assert!(
            compose_context_vector::<f64>(ModelVariant::Cbow, 3, MorphemeInfo::None, &e).is_err()
        );
        assert!(compose_context_vector::<f64>(
            ModelVariant::MweA,
            0,
            MorphemeInfo::Morphemes(&[0]),
            &e
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn meaning_coefficients_sum_to_one(ws in prop::collection::vec(0.01f64..1.0, 1..6)) {
            let total: f64 = ws.iter().sum();
            let m = meanings(&ws.iter().enumerate().map(|(i, w)| (i as u32 + 1, w / total)).collect::<Vec<_>>());
            for v in [ModelVariant::MweA, ModelVariant::MweS, ModelVariant::MweM] {
                let plan = composition_plan(v, 0, MorphemeInfo::Meanings(&m)).unwrap();
                let sum: f64 = plan.iter().map(|(_, c)| c).sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn composition_is_linear(scale in -3.0f64..3.0, rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 3)) {
            let m = meanings(&[(1, 0.4), (2, 0.6)]);
            let e = emb(&rows);
            let scaled = emb(&rows.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect::<Vec<_>>());
            for v in ModelVariant::ALL.into_iter().filter(|v| *v != ModelVariant::Emwe) {
                let a = compose_context_vector(v, 0, MorphemeInfo::Meanings(&m), &e).unwrap();
                let b = compose_context_vector(v, 0, MorphemeInfo::Meanings(&m), &scaled).unwrap();
                for (x, y) in a.value.iter().zip(&b.value) {
                    prop_assert!((x * scale - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
        }
        assert!("skipgram".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn morpheme_table_keys_by_class() {
        let mut lex = MorphemeLexicon::new();
        lex.insert(MorphemeClass::Prefix, "un", ["not"]);
        lex.insert(MorphemeClass::Root, "un", ["one"]);
        lex.insert(MorphemeClass::Suffix, "able", ["capable"]);
        let index =
            WordIndex::from_words(vec!["unable".into(), "fun".into(), "xyz".into()]).unwrap();
        let t = MorphemeTable::build(&index, &lex);
        assert_eq!(t.len(), 3);
        assert_eq!(t.morphemes_of(0).len(), 3);
        assert_eq!(t.morphemes_of(1).len(), 1);
        assert_eq!(t.key(t.morphemes_of(1)[0]), (MorphemeClass::Root, "un"));
        assert!(t.morphemes_of(2).is_empty());
    }
}
