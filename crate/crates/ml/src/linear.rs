//! Ordinary least squares and ridge regression via centered normal
//! equations solved with a Cholesky factorization.

use crate::{Matrix, MlError, Scalar};

/// Coefficients of a fitted linear model: `y ≈ intercept + x · weights`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound(
    serialize = "F: serde::Serialize",
    deserialize = "F: serde::de::DeserializeOwned"
))]
pub struct LinearModel<F> {
    pub weights: Vec<F>,
    pub intercept: F,
}

impl<F: Scalar> LinearModel<F> {
    pub fn predict_row(&self, row: &[F]) -> F {
        let mut acc = self.intercept;
        for (w, x) in self.weights.iter().zip(row) {
            acc += *w * *x;
        }
        acc
    }
}

/// Fits `y ≈ intercept + X·w` minimizing squared error plus `alpha·|w|²`.
///
/// Features and targets are centered first so the penalty never touches the
/// intercept. The Gram matrix is solved by Cholesky; if factorization fails
/// (singular or near-singular Gram), a deterministic ladder of diagonal
/// jitters is applied before giving up.
pub fn fit_ridge<F: Scalar>(x: &Matrix<F>, y: &[F], alpha: F) -> Result<LinearModel<F>, MlError> {
    let n = x.n_rows();
    let d = x.n_cols();
    if n == 0 || y.is_empty() {
        return Err(MlError::EmptyData("ridge fit requires at least one row".into()));
    }
    if n != y.len() {
        return Err(MlError::DimensionMismatch(format!(
            "{n} feature rows but {} targets",
            y.len()
        )));
    }
    if alpha < F::zero() {
        return Err(MlError::InvalidSpec("ridge alpha must be non-negative".into()));
    }

    let nf = F::from_usize(n).expect("row count fits in scalar");
    let mut x_mean = vec![F::zero(); d];
    for row in x.rows_iter() {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += *v;
        }
    }
    for m in &mut x_mean {
        *m /= nf;
    }
    let y_mean = y.iter().copied().sum::<F>() / nf;

    // Gram = Xc' Xc + alpha I, rhs = Xc' yc, on centered data.
    let mut gram = vec![F::zero(); d * d];
    let mut rhs = vec![F::zero(); d];
    for (i, row) in x.rows_iter().enumerate() {
        let yc = y[i] - y_mean;
        for a in 0..d {
            let xa = row[a] - x_mean[a];
            rhs[a] += xa * yc;
            for b in a..d {
                gram[a * d + b] += xa * (row[b] - x_mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[a * d + b] = gram[b * d + a];
        }
    }

    // Jitter ladder: alpha itself, then progressively larger diagonal boosts.
    let jitters = [
        F::zero(),
        F::from_f64(1e-10).expect("constant fits in scalar"),
        F::from_f64(1e-8).expect("constant fits in scalar"),
        F::from_f64(1e-4).expect("constant fits in scalar"),
    ];
    let mut weights = None;
    for jitter in jitters {
        let mut g = gram.clone();
        for a in 0..d {
            g[a * d + a] += alpha + jitter;
        }
        if let Some(w) = cholesky_solve(&g, &rhs, d) {
            weights = Some(w);
            break;
        }
    }
    let weights = weights
        .ok_or_else(|| MlError::SolveFailed("normal equations are singular".into()))?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(MlError::SolveFailed("non-finite coefficients".into()));
    }

    let mut intercept = y_mean;
    for (w, m) in weights.iter().zip(&x_mean) {
        intercept -= *w * *m;
    }
    Ok(LinearModel { weights, intercept })
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, d×d).
/// Returns `None` when the factorization hits a non-positive pivot.
fn cholesky_solve<F: Scalar>(a: &[F], b: &[F], d: usize) -> Option<Vec<F>> {
    if d == 0 {
        return Some(Vec::new());
    }
    // Lower-triangular factor L with A = L L'.
    let mut l = vec![F::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= F::zero() || !sum.is_finite() {
                    return None;
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    // Forward substitution: L z = b.
    let mut z = vec![F::zero(); d];
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * d + k] * z[k];
        }
        z[i] = sum / l[i * d + i];
    }
    // Back substitution: L' x = z.
    let mut x = vec![F::zero(); d];
    for i in (0..d).rev() {
        let mut sum = z[i];
        for k in i + 1..d {
            sum -= l[k * d + i] * x[k];
        }
        x[i] = sum / l[i * d + i];
    }
    Some(x)
}
