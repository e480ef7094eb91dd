use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::matrix::Matrix;
use crate::model::WordVectors;
use crate::scalar::{dot, norm, Real};

/// `a` is to `b` as `c` is to `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogyDataset {
    pub name: String,
    pub questions: Vec<AnalogyQuestion>,
}

impl AnalogyDataset {
    /// Builds a dataset, dropping questions whose four words are not
    /// pairwise distinct.
    pub fn new(name: impl Into<String>, questions: Vec<AnalogyQuestion>) -> Self {
        let name = name.into();
        let total = questions.len();
        let questions: Vec<_> = questions
            .into_iter()
            .filter(|q| {
                let w = [&q.a, &q.b, &q.c, &q.d];
                (0..4).all(|i| (i + 1..4).all(|j| w[i] != w[j]))
            })
            .collect();
        if questions.len() < total {
            log::warn!(
                "{name}: dropped {} questions with repeated words",
                total - questions.len()
            );
        }
        AnalogyDataset { name, questions }
    }

    /// Parses whitespace-separated `a b c d` lines; `:` lines are section
    /// headers and ignored.
    pub fn parse<R: BufRead>(name: impl Into<String>, reader: R, path: &Path) -> Result<Self> {
        let mut questions = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with(':') {
                continue;
            }
            let w: Vec<String> = trimmed.split_whitespace().map(str::to_lowercase).collect();
            let Ok([a, b, c, d]) = <[String; 4]>::try_from(w) else {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: i + 1,
                    message: "expected 4 words".into(),
                });
            };
            questions.push(AnalogyQuestion { a, b, c, d });
        }
        Ok(Self::new(name, questions))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_stem().map_or_else(
            || path.display().to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        Self::parse(name, std::io::BufReader::new(file), path)
    }
}

fn unit_rows<F: Real>(m: &Matrix<F>) -> Matrix<F> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let n = norm(row);
        if n > F::zero() {
            row.iter_mut().for_each(|x| *x /= n);
        }
    }
    out
}

/// Answers each question with the word whose vector has the largest cosine
/// to `v_b - v_a + v_c`. With `exclude_queries`, `a`, `b` and `c` are not
/// candidates. Ties go to the lexicographically smallest word. Questions
/// with an out-of-vocabulary word are skipped; the metric is the accuracy
/// over attempted questions, as a percentage.
pub fn eval_analogy<F: Real>(
    vectors: &WordVectors<F>,
    dataset: &AnalogyDataset,
    exclude_queries: bool,
) -> EvalReport {
    let unit = unit_rows(&vectors.vectors);
    let index = &vectors.index;
    let outcomes: Vec<Option<bool>> = dataset
        .questions
        .par_iter()
        .map(|q| {
            let ids = [&q.a, &q.b, &q.c, &q.d].map(|w| index.id(&w.to_lowercase()));
            let [Some(a), Some(b), Some(c), Some(d)] = ids else {
                return None;
            };
            let mut query: Vec<F> = vectors.vectors.row(b as usize).to_vec();
            for ((x, &va), &vc) in query
                .iter_mut()
                .zip(vectors.vectors.row(a as usize))
                .zip(vectors.vectors.row(c as usize))
            {
                *x = *x - va + vc;
            }
            if !(norm(&query) > F::zero()) {
                return Some(false);
            }
            let mut best: Option<(F, u32)> = None;
            for (w, row) in unit.iter_rows().enumerate() {
                let w = w as u32;
                if exclude_queries && (w == a || w == b || w == c) {
                    continue;
                }
                // the query norm is common to all candidates
                let score = dot(row, &query);
                let better = match best {
                    None => true,
                    Some((s, bw)) => score > s || (score == s && index.word(w) < index.word(bw)),
                };
                if better {
                    best = Some((score, w));
                }
            }
            Some(best.is_some_and(|(_, w)| w == d))
        })
        .collect();
    let covered = outcomes.iter().flatten().count();
    let correct = outcomes.iter().flatten().filter(|&&ok| ok).count();
    EvalReport {
        dataset: dataset.name.clone(),
        metric: if covered > 0 {
            100.0 * correct as f64 / covered as f64
        } else {
            0.0
        },
        covered,
        skipped: dataset.questions.len() - covered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::WordIndex;

    fn q(a: &str, b: &str, c: &str, d: &str) -> AnalogyQuestion {
        AnalogyQuestion {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        }
    }

    fn vectors(words: &[&str], rows: &[Vec<f64>]) -> WordVectors<f64> {
        let index = WordIndex::from_words(words.iter().map(|s| s.to_string()).collect()).unwrap();
        WordVectors::new(index, Matrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn exact_offset_is_found() {
        // d = b - a + c, distractors orthogonal to it
        let v = vectors(
            &["a", "b", "c", "d", "x", "y"],
            &[
                vec![1.0, 0.0, 0.0, 0.0],
                vec![1.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 1.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
                vec![0.0, 1.0, -1.0, 0.5],
            ],
        );
        let ds = AnalogyDataset::new("t", vec![q("a", "b", "c", "d")]);
        let r = eval_analogy(&v, &ds, true);
        assert_eq!((r.metric, r.covered, r.skipped), (100.0, 1, 0));
    }

    #[test]
    fn exclusion_forces_remaining_word() {
        let v = vectors(
            &["a", "b", "c", "d"],
            &[
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
                vec![-1.0, -1.0],
            ],
        );
        let ds = AnalogyDataset::new("t", vec![q("a", "b", "c", "d")]);
        assert_eq!(eval_analogy(&v, &ds, true).metric, 100.0);
        assert_eq!(eval_analogy(&v, &ds, false).metric, 0.0);
    }

    #[test]
    fn oov_questions_are_skipped() {
        let v = vectors(
            &["a", "b", "c", "d"],
            &[vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
        );
        let ds = AnalogyDataset::new("t", vec![q("a", "b", "c", "zzz"), q("a", "b", "c", "d")]);
        let r = eval_analogy(&v, &ds, true);
        assert_eq!((r.covered, r.skipped), (1, 1));
    }

    #[test]
    fn scaling_does_not_change_answers() {
        let rows = vec![
            vec![0.3, -0.2, 0.9],
            vec![0.1, 0.8, -0.4],
            vec![-0.7, 0.2, 0.5],
            vec![0.2, 0.4, 0.1],
            vec![-0.3, 0.9, 0.05],
        ];
        let words = ["a", "b", "c", "d", "e"];
        let ds = AnalogyDataset::new(
            "t",
            vec![
                q("a", "b", "c", "d"),
                q("b", "c", "d", "e"),
                q("e", "a", "b", "c"),
            ],
        );
        let base = eval_analogy(&vectors(&words, &rows), &ds, true);
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|x| x * 7.5).collect())
            .collect();
        assert_eq!(eval_analogy(&vectors(&words, &scaled), &ds, true), base);
    }

    #[test]
    fn parse_skips_headers_and_repeats() {
        let text = ": gram1\nGood Better Bad Worse\nbad bad good good\n";
        let ds = AnalogyDataset::parse("msr", text.as_bytes(), Path::new("a.txt")).unwrap();
        assert_eq!(ds.questions, vec![q("good", "better", "bad", "worse")]);
        assert!(AnalogyDataset::parse("x", "a b c\n".as_bytes(), Path::new("a.txt")).is_err());
    }
}
