use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::WordVectors;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors as the rows of the returned matrix.
pub fn symmetric_eigen<F: Real>(matrix: &Matrix<F>) -> (Vec<F>, Matrix<F>) {
    let n = matrix.rows();
    assert_eq!(n, matrix.cols(), "matrix must be square");
    let mut a = matrix.clone();
    // Columns of `v` accumulate the rotations.
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.row_mut(i)[i] = F::one();
    }
    let at = |m: &Matrix<F>, i: usize, j: usize| m.as_slice()[i * n + j];

    let frob: F = a.as_slice().iter().map(|&x| x * x).sum();
    let tol = frob * F::epsilon() * F::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut off = F::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += at(&a, p, q) * at(&a, p, q);
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = at(&a, p, q);
                if apq == F::zero() {
                    continue;
                }
                let theta = (at(&a, q, q) - at(&a, p, p)) / (F::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                let data = a.as_mut_slice();
                for k in 0..n {
                    let (kp, kq) = (data[k * n + p], data[k * n + q]);
                    data[k * n + p] = c * kp - s * kq;
                    data[k * n + q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (data[p * n + k], data[q * n + k]);
                    data[p * n + k] = c * pk - s * qk;
                    data[q * n + k] = s * pk + c * qk;
                }
                let vd = v.as_mut_slice();
                for k in 0..n {
                    let (kp, kq) = (vd[k * n + p], vd[k * n + q]);
                    vd[k * n + p] = c * kp - s * kq;
                    vd[k * n + q] = s * kp + c * kq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        at(&a, j, j)
            .partial_cmp(&at(&a, i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| at(&a, i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (r, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors.row_mut(r)[k] = at(&v, k, i);
        }
    }
    (values, vectors)
}

/// Two-dimensional PCA coordinates of selected words.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection<F> {
    pub points: Vec<(String, F, F)>,
    /// Variances along the two components (top covariance eigenvalues).
    pub variances: [F; 2],
    /// Unit principal directions; the first clearly non-zero loading of each
    /// is positive.
    pub components: [Vec<F>; 2],
}

/// Projects the vectors of `words` onto their top two principal components.
pub fn pca_project<F: Real, S: AsRef<str>>(
    vectors: &WordVectors<F>,
    words: &[S],
) -> Result<PcaProjection<F>> {
    if words.len() < 3 {
        return Err(Error::Eval(format!(
            "PCA needs at least 3 words, got {}",
            words.len()
        )));
    }
    let dim = vectors.dim();
    let rows: Vec<&[F]> = words
        .iter()
        .map(|w| {
            vectors
                .get(w.as_ref())
                .ok_or_else(|| Error::UnknownWord(w.as_ref().to_owned()))
        })
        .collect::<Result<_>>()?;
    let n = F::of(rows.len() as f64);
    let mut mean = vec![F::zero(); dim];
    for r in &rows {
        for (m, &x) in mean.iter_mut().zip(*r) {
            *m += x / n;
        }
    }
    let centered: Vec<Vec<F>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();

    let mut cov = Matrix::zeros(dim, dim);
    let denom = n - F::one();
    for r in &centered {
        for i in 0..dim {
            let ri = r[i] / denom;
            let row = cov.row_mut(i);
            for j in 0..dim {
                row[j] += ri * r[j];
            }
        }
    }
    let (values, vecs) = symmetric_eigen(&cov);
    let (l1, l2) = (values[0], values.get(1).copied().unwrap_or_else(F::zero));
    if !(l1 > F::zero()) || !(l2 > l1 * F::epsilon().sqrt()) {
        return Err(Error::Eval(
            "selected vectors span fewer than 2 dimensions".into(),
        ));
    }

    let loading_tol = F::epsilon().sqrt() / F::of(dim as f64).sqrt();
    let orient = |mut c: Vec<F>| {
        if let Some(first) = c.iter().find(|x| x.abs() > loading_tol) {
            if *first < F::zero() {
                c.iter_mut().for_each(|x| *x = -*x);
            }
        }
        c
    };
    let c1 = orient(vecs.row(0).to_vec());
    let c2 = orient(vecs.row(1).to_vec());
    let project = |r: &[F], c: &[F]| r.iter().zip(c).fold(F::zero(), |acc, (&a, &b)| acc + a * b);
    let points = words
        .iter()
        .zip(&centered)
        .map(|(w, r)| (w.as_ref().to_owned(), project(r, &c1), project(r, &c2)))
        .collect();
    Ok(PcaProjection {
        points,
        variances: [l1, l2],
        components: [c1, c2],
    })
}
