//! Perron-Frobenius eigen-solvers for irreducible nonnegative matrices.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Matrices up to this size use the dense solver.
pub const DENSE_LIMIT: usize = 64;

const RESIDUAL_TOL: f64 = 1e-10;

/// Perron root with unnormalised positive right and left eigenvectors.
#[derive(Debug, Clone)]
pub struct PerronPair {
    pub root: f64,
    pub right: DVector<f64>,
    pub left: DVector<f64>,
}

pub fn perron_pair(m: &DMatrix<f64>) -> Result<PerronPair> {
    if m.nrows() <= DENSE_LIMIT {
        perron_dense(m)
    } else {
        perron_power(m)
    }
}

/// Dense route: spectral radius from the real Schur form, eigenvectors from
/// the bordered singular system `(M - rho I) x = 0, 1'x = 1`, then one
/// Rayleigh-quotient refinement of the root.
pub fn perron_dense(m: &DMatrix<f64>) -> Result<PerronPair> {
    let n = m.nrows();
    if n == 1 {
        let root = m[(0, 0)];
        if !(root > 0.0) || !root.is_finite() {
            return Err(Error::NoConvergence {
                what: "Perron eigenvalue",
                residual: f64::NAN,
            });
        }
        return Ok(PerronPair {
            root,
            right: DVector::from_element(1, 1.0),
            left: DVector::from_element(1, 1.0),
        });
    }
    let scale = m.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NoConvergence {
            what: "Perron eigenvalue",
            residual: f64::NAN,
        });
    }
    let a = m / scale;
    let mut root = a
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut right = bordered_null_vector(&a, root)?;
    let mut left = bordered_null_vector(&a.transpose(), root)?;
    for _ in 0..2 {
        let num = left.dot(&(&a * &right));
        let den = left.dot(&right);
        root = num / den;
        right = bordered_null_vector(&a, root)?;
        left = bordered_null_vector(&a.transpose(), root)?;
    }
    let pair = PerronPair {
        root: root * scale,
        right: make_positive(right)?,
        left: make_positive(left)?,
    };
    check_residual(m, &pair)?;
    Ok(pair)
}

/// Iterative route: power iteration on `M + cI`, which is primitive for any
/// irreducible `M` and shares its Perron vectors.
pub fn perron_power(m: &DMatrix<f64>) -> Result<PerronPair> {
    let n = m.nrows();
    let scale = m.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::NoConvergence {
            what: "Perron eigenvalue",
            residual: f64::NAN,
        });
    }
    let a = m / scale + DMatrix::identity(n, n);
    let iterate = |mat: &DMatrix<f64>| -> Result<(f64, DVector<f64>)> {
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut lambda = 0.0;
        for _ in 0..200_000 {
            let y = mat * &x;
            let norm = y.sum();
            let y = y / norm;
            let change = (&y - &x).amax();
            x = y;
            lambda = norm;
            if change < 1e-15 {
                return Ok((lambda, x));
            }
        }
        let resid = (mat * &x - &x * lambda).amax();
        if resid <= 1e-13 {
            Ok((lambda, x))
        } else {
            Err(Error::NoConvergence {
                what: "power iteration",
                residual: resid,
            })
        }
    };
    let (lambda, right) = iterate(&a)?;
    let (_, left) = iterate(&a.transpose())?;
    let pair = PerronPair {
        root: (lambda - 1.0) * scale,
        right: make_positive(right)?,
        left: make_positive(left)?,
    };
    check_residual(m, &pair)?;
    Ok(pair)
}

fn bordered_null_vector(a: &DMatrix<f64>, root: f64) -> Result<DVector<f64>> {
    let n = a.nrows();
    let mut b = a - DMatrix::identity(n, n) * root;
    for j in 0..n {
        b[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    b.lu().solve(&rhs).ok_or(Error::NoConvergence {
        what: "Perron eigenvector",
        residual: f64::NAN,
    })
}

fn make_positive(mut x: DVector<f64>) -> Result<DVector<f64>> {
    if x.sum() < 0.0 {
        x = -x;
    }
    let max = x.amax();
    for v in x.iter_mut() {
        if *v <= 0.0 {
            if *v < -1e-12 * max {
                return Err(Error::NoConvergence {
                    what: "Perron eigenvector positivity",
                    residual: *v,
                });
            }
            *v = f64::MIN_POSITIVE;
        }
    }
    Ok(x)
}

fn check_residual(m: &DMatrix<f64>, pair: &PerronPair) -> Result<()> {
    let r = (m * &pair.right - &pair.right * pair.root).amax()
        / (pair.root.abs() * pair.right.amax());
    let l = (m.transpose() * &pair.left - &pair.left * pair.root).amax()
        / (pair.root.abs() * pair.left.amax());
    let resid = r.max(l);
    if resid.is_finite() && resid <= RESIDUAL_TOL {
        Ok(())
    } else {
        Err(Error::NoConvergence {
            what: "Perron eigenpair",
            residual: resid,
        })
    }
}
