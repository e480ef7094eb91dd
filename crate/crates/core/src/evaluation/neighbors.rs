use crate::error::{Error, Result};
use crate::evaluation::cosine;
use crate::model::WordVectors;
use crate::scalar::Real;

/// The `n` words most cosine-similar to `word`, most similar first, the
/// query itself excluded. Ties are ordered lexicographically.
pub fn n_nearest<F: Real>(
    vectors: &WordVectors<F>,
    word: &str,
    n: usize,
) -> Result<Vec<(String, F)>> {
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    let query_id = vectors
        .index
        .id(word)
        .ok_or_else(|| Error::UnknownWord(word.to_owned()))?;
    let query = vectors.vectors.row(query_id as usize);
    let mut scored: Vec<(u32, F)> = (0..vectors.len() as u32)
        .filter(|&w| w != query_id)
        .filter_map(|w| {
            cosine(query, vectors.vectors.row(w as usize))
                .ok()
                .map(|c| (w, c))
        })
        .collect();
    let index = &vectors.index;
    scored.sort_by(|(wa, ca), (wb, cb)| {
        cb.partial_cmp(ca)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| index.word(*wa).cmp(index.word(*wb)))
    });
    Ok(scored
        .into_iter()
        .take(n)
        .map(|(w, c)| (index.word(w).to_owned(), c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::WordIndex;
    use crate::matrix::Matrix;

    fn vectors(words: &[&str], rows: &[Vec<f64>]) -> WordVectors<f64> {
        let index = WordIndex::from_words(words.iter().map(|s| s.to_string()).collect()).unwrap();
        WordVectors::new(index, Matrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn examples() {
        let v = vectors(&["a", "b"], &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(n_nearest(&v, "a", 1).unwrap(), vec![("b".to_string(), 0.0)]);

        let v = vectors(
            &["a", "b", "c"],
            &[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.0, 1.0]],
        );
        let got: Vec<String> = n_nearest(&v, "a", 2)
            .unwrap()
            .into_iter()
            .map(|x| x.0)
            .collect();
        assert_eq!(got, ["b", "c"]);
        assert!(n_nearest(&v, "a", 10)
            .unwrap()
            .iter()
            .all(|(w, _)| w != "a"));
        assert!(n_nearest(&v, "zzz", 1).is_err());
        assert!(n_nearest(&v, "a", 0).is_err());
    }

    #[test]
    fn ties_are_lexicographic_and_order_independent() {
        let v1 = vectors(
            &["q", "zeta", "alpha", "mid"],
            &[
                vec![1.0, 0.0],
                vec![0.5, 0.5],
                vec![0.5, 0.5],
                vec![1.0, 0.1],
            ],
        );
        let v2 = vectors(
            &["alpha", "mid", "q", "zeta"],
            &[
                vec![0.5, 0.5],
                vec![1.0, 0.1],
                vec![1.0, 0.0],
                vec![0.5, 0.5],
            ],
        );
        let a = n_nearest(&v1, "q", 3).unwrap();
        assert_eq!(a, n_nearest(&v2, "q", 3).unwrap());
        assert_eq!(a[1].0, "alpha");
        assert_eq!(a[2].0, "zeta");
    }
}
