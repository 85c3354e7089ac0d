use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{CopulaSpec, GridCopula};
use crate::{Error, Result};

pub const DEFAULT_GRID: usize = 512;
const MIN_GRID: usize = 64;

/// Darsow product `(A * B)(x, y) = int_0^1 dA/dt(x, t) dB/dt(t, y) dt` on a
/// uniform lattice with `grid_n` cells per axis.
///
/// Both factors are replaced by their checkerboard approximations (cell
/// masses on the lattice); the product of two checkerboard copulas is again
/// a checkerboard copula whose cell masses are `n * DA * DB`. The result is
/// exact on the lattice whenever both factors are piecewise bilinear there,
/// which covers M, W, P and the Frechet family.
pub fn star(a: &CopulaSpec, b: &CopulaSpec, grid_n: usize) -> Result<CopulaSpec> {
    if grid_n < MIN_GRID {
        return Err(Error::InvalidArgument(format!(
            "star product needs at least {MIN_GRID} grid cells, got {grid_n}"
        )));
    }
    let n = grid_n;
    let da = cell_masses(a, n);
    let db = cell_masses(b, n);
    let prod = (&da * &db) * n as f64;

    let mut values = vec![vec![0.0; n + 1]; n + 1];
    for i in 1..=n {
        let mut row_acc = 0.0;
        for j in 1..=n {
            row_acc += prod[(i - 1, j - 1)].max(0.0);
            values[i][j] = values[i - 1][j] + row_acc;
        }
    }
    // margins are known exactly
    for k in 0..=n {
        let x = k as f64 / n as f64;
        values[k][n] = x;
        values[n][k] = x;
        values[k][0] = 0.0;
        values[0][k] = 0.0;
    }
    Ok(CopulaSpec::Grid(GridCopula::uniform(values)?))
}

fn cell_masses(c: &CopulaSpec, n: usize) -> DMatrix<f64> {
    let nodes: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let u = i as f64 / n as f64;
            (0..=n).map(|j| c.eval_unchecked(u, j as f64 / n as f64)).collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        nodes[i + 1][j + 1] - nodes[i][j + 1] - nodes[i + 1][j] + nodes[i][j]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sup_distance(a: &CopulaSpec, b: &CopulaSpec, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                worst = worst.max((a.eval(u, v).unwrap() - b.eval(u, v).unwrap()).abs());
            }
        }
        worst
    }

    #[test]
    fn extremal_identities() {
        let ww = star(&CopulaSpec::W, &CopulaSpec::W, 64).unwrap();
        assert!(sup_distance(&ww, &CopulaSpec::M, 64) < 1e-12);
        let pp = star(&CopulaSpec::P, &CopulaSpec::P, 64).unwrap();
        assert!(sup_distance(&pp, &CopulaSpec::P, 50) < 1e-12);
    }

    #[test]
    fn rejects_small_grid() {
        assert!(star(&CopulaSpec::M, &CopulaSpec::M, 10).is_err());
    }
}
