//! Embedding, vocabulary and manifest files.
//!
//! Embeddings use the word2vec layouts: a `rows dim` header line followed by
//! either `word v1 .. vD` text rows (six decimals) or, in binary form, the
//! word, a space, `dim` little-endian `f32` values and a newline. Loading
//! detects the layout from the file body.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::{Vocabulary, WordIndex};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::WordVectors;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmbeddingFormat {
    #[default]
    Text,
    Binary,
}

impl FromStr for EmbeddingFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(EmbeddingFormat::Text),
            "binary" => Ok(EmbeddingFormat::Binary),
            _ => Err(format!(
                "unknown embedding format {s:?} (expected text or binary)"
            )),
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place once `write` succeeds.
pub fn write_atomic<T>(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<T>,
) -> Result<T> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e| Error::io(path, e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    let value = {
        let mut w = BufWriter::new(tmp.as_file_mut());
        let value = write(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        value
    };
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(value)
}

pub fn write_embeddings<F: Real>(
    vectors: &WordVectors<F>,
    out: &mut dyn Write,
    format: EmbeddingFormat,
) -> std::io::Result<()> {
    writeln!(out, "{} {}", vectors.len(), vectors.dim())?;
    for (word, row) in vectors
        .index
        .words()
        .iter()
        .zip(vectors.vectors.iter_rows())
    {
        match format {
            EmbeddingFormat::Text => {
                write!(out, "{word}")?;
                for v in row {
                    write!(out, " {:.6}", v.as_f64())?;
                }
            }
            EmbeddingFormat::Binary => {
                write!(out, "{word} ")?;
                for v in row {
                    out.write_all(&(v.as_f64() as f32).to_le_bytes())?;
                }
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_embeddings<F: Real>(
    vectors: &WordVectors<F>,
    path: &Path,
    format: EmbeddingFormat,
) -> Result<()> {
    write_atomic(path, |w| write_embeddings(vectors, w, format))
}

fn looks_textual(body: &[u8]) -> bool {
    std::str::from_utf8(body).is_ok_and(|s| {
        !s.chars()
            .any(|c| c.is_control() && !matches!(c, '\n' | '\r' | '\t'))
    })
}

pub fn load_embeddings<F: Real>(path: &Path) -> Result<WordVectors<F>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&bytes, path)
}

/// Parses embeddings from memory; `path` only labels errors.
pub fn parse_embeddings<F: Real>(bytes: &[u8], path: &Path) -> Result<WordVectors<F>> {
    let fail = |message: String| Error::Format {
        path: path.to_owned(),
        message,
    };
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| fail("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| fail("header is not UTF-8".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| fail(format!("invalid header {header:?}")))?;
    let [rows, dim] = dims[..] else {
        return Err(fail(format!("invalid header {header:?}")));
    };
    let body = &bytes[header_end + 1..];
    let (words, data) = if looks_textual(body) {
        parse_text_body::<F>(std::str::from_utf8(body).expect("checked"), rows, dim)
            .map_err(fail)?
    } else {
        parse_binary_body::<F>(body, rows, dim, header_end + 1).map_err(fail)?
    };
    let index = WordIndex::from_words(words).map_err(|w| fail(format!("duplicate word {w:?}")))?;
    WordVectors::new(index, Matrix::from_vec(rows, dim, data))
}

fn parse_text_body<F: Real>(
    body: &str,
    rows: usize,
    dim: usize,
) -> Result<(Vec<String>, Vec<F>), String> {
    let lines: Vec<&str> = body.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != rows {
        return Err(format!("expected {rows} rows, found {}", lines.len()));
    }
    let mut words = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for (i, line) in lines.iter().enumerate() {
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line");
        let values: Vec<f64> = fields
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| format!("row {}: invalid number", i + 1))?;
        if values.len() != dim {
            return Err(format!(
                "row {}: expected {dim} values, found {}",
                i + 1,
                values.len()
            ));
        }
        words.push(word.to_owned());
        data.extend(values.into_iter().map(F::of));
    }
    Ok((words, data))
}

fn parse_binary_body<F: Real>(
    body: &[u8],
    rows: usize,
    dim: usize,
    base: usize,
) -> Result<(Vec<String>, Vec<F>), String> {
    let mut pos = 0;
    let mut words = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for i in 0..rows {
        while pos < body.len() && body[pos] == b'\n' {
            pos += 1;
        }
        let truncated = |at: usize| {
            format!(
                "expected {rows} rows, file truncated in row {} at byte {}",
                i + 1,
                base + at
            )
        };
        let space = body[pos..]
            .iter()
            .position(|&b| b == b' ')
            .ok_or_else(|| truncated(pos))?;
        let word = std::str::from_utf8(&body[pos..pos + space])
            .map_err(|_| format!("row {}: word is not UTF-8 at byte {}", i + 1, base + pos))?;
        if word.is_empty() {
            return Err(format!("row {}: empty word at byte {}", i + 1, base + pos));
        }
        pos += space + 1;
        if body.len() - pos < 4 * dim {
            return Err(truncated(pos));
        }
        for chunk in body[pos..pos + 4 * dim].chunks_exact(4) {
            let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            data.push(F::of(v as f64));
        }
        pos += 4 * dim;
        words.push(word.to_owned());
    }
    if body[pos..].iter().any(|b| !b.is_ascii_whitespace()) {
        return Err(format!("trailing data at byte {}", base + pos));
    }
    Ok((words, data))
}

/// `word<TAB>count` per line in vocabulary order.
pub fn save_vocabulary(vocab: &Vocabulary, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        for (word, count) in vocab.iter() {
            writeln!(w, "{word}\t{count}")?;
        }
        Ok(())
    })
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let parsed = line
                .split_once('\t')
                .and_then(|(w, c)| Some((w.to_owned(), c.trim().parse::<u64>().ok()?)));
            parsed.ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "expected word<TAB>count".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Vocabulary::from_counts(entries)
}

/// Flat `key=value` record of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut m = RunManifest::default();
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    /// Sets `key`, replacing an earlier value.
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_owned(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Manifest location for an output file: `<output>.manifest`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut p = output.as_os_str().to_owned();
        p.push(".manifest");
        PathBuf::from(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| {
            for (k, v) in &self.entries {
                writeln!(w, "{k}={v}")?;
            }
            Ok(())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = RunManifest::default();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "expected key=value".into(),
            })?;
            m.set(k, v);
        }
        Ok(m)
    }
}
