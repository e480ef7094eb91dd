use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::{eval_word_similarity, EvalReport, SimilarityDataset};
use crate::morphology::MorphemeLexicon;
use crate::scalar::Real;
use crate::trainer::{train, TrainingConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Train on the leading fraction of the corpus tokens.
    TokenFraction,
    /// Override the context window radius.
    Window,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::TokenFraction => "token-fraction",
            SweepAxis::Window => "window",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('_', "-").as_str() {
            "token-fraction" => Ok(SweepAxis::TokenFraction),
            "window" => Ok(SweepAxis::Window),
            _ => Err(format!(
                "unknown sweep axis {s:?} (expected token-fraction or window)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// One entry per dataset; training failures repeat across the row.
    pub results: Vec<Result<EvalReport, String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub datasets: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `axis<TAB>dataset...` header, then one row per value with rho to two
    /// decimals or `NA` for failed cells.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "{}", self.axis)?;
        for d in &self.datasets {
            write!(out, "\t{d}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{}", row.value)?;
            for r in &row.results {
                match r {
                    Ok(rep) => write!(out, "\t{:.2}", rep.metric)?,
                    Err(_) => write!(out, "\tNA")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Leading `fraction` of the corpus tokens, cutting inside a sentence if
/// needed.
fn truncate_tokens(sentences: &[Vec<String>], fraction: f64) -> Vec<Vec<String>> {
    let total: usize = sentences.iter().map(Vec::len).sum();
    let mut budget = (fraction * total as f64).floor() as usize;
    let mut out = Vec::new();
    for s in sentences {
        if budget == 0 {
            break;
        }
        let take = s.len().min(budget);
        out.push(s[..take].to_vec());
        budget -= take;
    }
    out
}

fn cell_config(base: &TrainingConfig, axis: SweepAxis, value: f64) -> Result<TrainingConfig> {
    let mut config = base.clone();
    match axis {
        SweepAxis::TokenFraction => {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::Config(format!(
                    "token fraction {value} outside (0, 1]"
                )));
            }
        }
        SweepAxis::Window => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::Config(format!(
                    "window {value} is not a positive integer"
                )));
            }
            config.window = value as usize;
        }
    }
    Ok(config)
}

/// Trains one model per axis value and evaluates it on every dataset.
/// Failures are recorded per cell and the sweep continues.
pub fn run_sweep<F: Real>(
    sentences: &[Vec<String>],
    config: &TrainingConfig,
    lexicon: Option<&MorphemeLexicon>,
    axis: SweepAxis,
    values: &[f64],
    datasets: &[SimilarityDataset],
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let rows = values
        .iter()
        .map(|&value| {
            let trained = cell_config(config, axis, value).and_then(|cfg| {
                let corpus = match axis {
                    SweepAxis::TokenFraction => truncate_tokens(sentences, value),
                    SweepAxis::Window => sentences.to_vec(),
                };
                train::<F>(&corpus, &cfg, lexicon)
            });
            let results = match trained {
                Ok(out) => {
                    let vectors = out.word_vectors();
                    datasets
                        .iter()
                        .map(|d| eval_word_similarity(&vectors, d).map_err(|e| e.to_string()))
                        .collect()
                }
                Err(e) => {
                    log::warn!("sweep {axis}={value}: {e}");
                    vec![Err(e.to_string()); datasets.len()]
                }
            };
            SweepRow { value, results }
        })
        .collect();
    Ok(SweepTable {
        axis,
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        rows,
    })
}
