use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{cosine, EvalReport};
use crate::model::WordVectors;
use crate::scalar::Real;

/// Word pairs with human similarity judgements.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    pub fn new(name: impl Into<String>, pairs: Vec<(String, String, f64)>) -> Result<Self> {
        let name = name.into();
        if pairs.is_empty() {
            return Err(Error::Eval(format!("similarity dataset {name} is empty")));
        }
        if let Some(p) = pairs.iter().find(|p| !p.2.is_finite()) {
            return Err(Error::Eval(format!(
                "non-finite score for pair {} {}",
                p.0, p.1
            )));
        }
        Ok(SimilarityDataset { name, pairs })
    }

    /// Parses `word1, word2, score` rows separated by tabs or commas. A
    /// first row whose score is not a number is treated as a header; `#`
    /// lines are comments. Words are lowercased.
    pub fn parse<R: BufRead>(name: impl Into<String>, reader: R, path: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut first = true;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let is_first = std::mem::replace(&mut first, false);
            let fields: Vec<&str> = if trimmed.contains('\t') {
                trimmed.split('\t')
            } else {
                trimmed.split(',')
            }
            .map(str::trim)
            .collect();
            let err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message,
            };
            if fields.len() < 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            match fields[2].parse::<f64>() {
                Ok(score) if score.is_finite() => {
                    pairs.push((fields[0].to_lowercase(), fields[1].to_lowercase(), score))
                }
                _ if is_first => continue,
                _ => return Err(err(format!("invalid score {:?}", fields[2]))),
            }
        }
        Self::new(name, pairs)
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

/// Average (fractional) ranks, 1-based.
fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of fractional ranks.
pub fn spearman_rho(model_scores: &[f64], human_scores: &[f64]) -> Result<f64> {
    if model_scores.len() != human_scores.len() {
        return Err(Error::Eval(format!(
            "score lists differ in length ({} vs {})",
            model_scores.len(),
            human_scores.len()
        )));
    }
    if model_scores.len() < 2 {
        return Err(Error::Eval("need at least 2 scored pairs".into()));
    }
    if model_scores.iter().chain(human_scores).any(|x| x.is_nan()) {
        return Err(Error::Eval("NaN score".into()));
    }
    let rx = fractional_ranks(model_scores);
    let ry = fractional_ranks(human_scores);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in rx.iter().zip(&ry) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Eval("zero rank variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation (as a percentage) between cosine similarities and
/// human scores. Pairs with an out-of-vocabulary word are skipped.
pub fn eval_word_similarity<F: Real>(
    vectors: &WordVectors<F>,
    dataset: &SimilarityDataset,
) -> Result<EvalReport> {
    let mut model = Vec::with_capacity(dataset.pairs.len());
    let mut human = Vec::with_capacity(dataset.pairs.len());
    for (a, b, score) in &dataset.pairs {
        let (Some(u), Some(v)) = (
            vectors.get(&a.to_lowercase()),
            vectors.get(&b.to_lowercase()),
        ) else {
            continue;
        };
        model.push(cosine(u, v)?.as_f64());
        human.push(*score);
    }
    if model.len() < 2 {
        return Err(Error::Eval(format!(
            "{}: only {} of {} pairs covered by the vocabulary",
            dataset.name,
            model.len(),
            dataset.pairs.len()
        )));
    }
    let rho = spearman_rho(&model, &human)?;
    Ok(EvalReport {
        dataset: dataset.name.clone(),
        metric: rho * 100.0,
        covered: model.len(),
        skipped: dataset.pairs.len() - model.len(),
    })
}
