//! Weighted ridge regression for surrogate models.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit<T> {
    pub coefficients: Vec<T>,
    pub intercept: T,
    /// Weighted coefficient of determination of the fit.
    pub r_squared: T,
}

/// Minimizes `Σ w_s (y_s - b - x_s·β)² + l2 |β|²` with an unpenalized
/// intercept `b`.
pub fn weighted_ridge<T: Scalar>(
    features: &[Vec<T>],
    targets: &[T],
    weights: &[T],
    l2: T,
) -> Result<RidgeFit<T>> {
    let n = features.len();
    if n == 0 || targets.len() != n || weights.len() != n {
        return Err(Error::InvalidInput("ridge: inconsistent sample counts".into()));
    }
    let d = features[0].len();
    if features.iter().any(|row| row.len() != d) {
        return Err(Error::InvalidInput("ridge: ragged feature matrix".into()));
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::Numeric("ridge: sample weights sum to zero".into()));
    }

    let mut x_mean = vec![T::zero(); d];
    let mut y_mean = T::zero();
    for ((row, &y), &w) in features.iter().zip(targets).zip(weights) {
        for (m, &v) in x_mean.iter_mut().zip(row) {
            *m = *m + w * v;
        }
        y_mean = y_mean + w * y;
    }
    x_mean.iter_mut().for_each(|m| *m = *m / total);
    y_mean = y_mean / total;

    // Normal equations on centered data.
    let mut gram = vec![vec![T::zero(); d]; d];
    let mut rhs = vec![T::zero(); d];
    let mut centered = vec![T::zero(); d];
    for ((row, &y), &w) in features.iter().zip(targets).zip(weights) {
        for (c, (&v, &m)) in centered.iter_mut().zip(row.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = y - y_mean;
        for i in 0..d {
            let wi = w * centered[i];
            rhs[i] = rhs[i] + wi * yc;
            for j in 0..=i {
                gram[i][j] = gram[i][j] + wi * centered[j];
            }
        }
    }
    for i in 0..d {
        gram[i][i] = gram[i][i] + l2;
        for j in 0..i {
            gram[j][i] = gram[i][j];
        }
    }

    let coefficients = cholesky_solve(gram, rhs)?;
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .fold(T::zero(), |acc, (&b, &m)| acc + b * m);

    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    for ((row, &y), &w) in features.iter().zip(targets).zip(weights) {
        let pred = row
            .iter()
            .zip(&coefficients)
            .fold(intercept, |acc, (&v, &b)| acc + v * b);
        ss_res = ss_res + w * (y - pred) * (y - pred);
        ss_tot = ss_tot + w * (y - y_mean) * (y - y_mean);
    }
    let r_squared = if ss_tot > T::zero() {
        T::one() - ss_res / ss_tot
    } else {
        T::one()
    };
    Ok(RidgeFit {
        coefficients,
        intercept,
        r_squared,
    })
}

/// Solves `A x = b` for symmetric positive-definite `A`.
fn cholesky_solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let d = b.len();
    for j in 0..d {
        let mut diag = a[j][j];
        for k in 0..j {
            diag = diag - a[j][k] * a[j][k];
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return Err(Error::Numeric(
                "singular normal equations; increase the l2 penalty".into(),
            ));
        }
        let diag = diag.sqrt();
        a[j][j] = diag;
        for i in (j + 1)..d {
            let mut v = a[i][j];
            for k in 0..j {
                v = v - a[i][k] * a[j][k];
            }
            a[i][j] = v / diag;
        }
    }
    for i in 0..d {
        let mut v = b[i];
        for k in 0..i {
            v = v - a[i][k] * b[k];
        }
        b[i] = v / a[i][i];
    }
    for i in (0..d).rev() {
        let mut v = b[i];
        for k in (i + 1)..d {
            v = v - a[k][i] * b[k];
        }
        b[i] = v / a[i][i];
    }
    Ok(b)
}
