//! Markov additive kernels, their transform matrices and Perron-Frobenius
//! spectra.
//!
//! For a kernel with transition matrix `P` and increment laws `H_ij`, the
//! transform matrix at `theta` has entries `p_ij E[exp(theta X_ij)]`. Its
//! Perron root is `exp(kappa(theta))` where `kappa` is the cumulant
//! generating function of the additive component.

pub mod eigen;
mod kernel;
mod law;
mod root;

use nalgebra::DMatrix;

pub use kernel::MapKernel;
pub use law::{IncrementLaw, Pmf};
pub(crate) use law::exponential_gain;
pub use root::{find_increasing_root, stability_root, StabilityRoot};

use crate::Result;

/// Perron-Frobenius data of a kernel at one value of `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub theta: f64,
    /// Logarithm of the Perron root.
    pub kappa: f64,
    /// Right eigenvector, normalised so that `pi . h = 1`.
    pub h: Vec<f64>,
    /// Left eigenvector, normalised so that `v . h = 1`.
    pub v: Vec<f64>,
    /// Stationary distribution of the modulating chain.
    pub pi: Vec<f64>,
}

impl SpectralSolution {
    pub fn h_min(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.h.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `F[theta]_ij = p_ij E[exp(theta X_ij)]`.
pub fn transform_matrix(kernel: &MapKernel, theta: f64) -> Result<DMatrix<f64>> {
    entrywise(kernel, |law| law.mgf(theta))
}

/// Entrywise derivative of the transform matrix: `p_ij E[X_ij exp(theta X_ij)]`.
pub fn transform_derivative(kernel: &MapKernel, theta: f64) -> Result<DMatrix<f64>> {
    entrywise(kernel, |law| law.tilted_mean(theta))
}

fn entrywise(
    kernel: &MapKernel,
    f: impl Fn(&IncrementLaw) -> Result<f64>,
) -> Result<DMatrix<f64>> {
    let n = kernel.n_states();
    let p = kernel.transition();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                out[(i, j)] = p[(i, j)] * f(kernel.increment(i, j))?;
            }
        }
    }
    Ok(out)
}

pub fn perron(kernel: &MapKernel, theta: f64) -> Result<SpectralSolution> {
    let pi = kernel.stationary().to_vec();
    if theta == 0.0 {
        // F[0] = P: the root is 1, h is flat and v is the stationary law
        return Ok(SpectralSolution {
            theta,
            kappa: 0.0,
            h: vec![1.0; pi.len()],
            v: pi.clone(),
            pi,
        });
    }
    let f = transform_matrix(kernel, theta)?;
    let pair = eigen::perron_pair(&f)?;
    let pi_h: f64 = pair.right.iter().zip(&pi).map(|(h, p)| h * p).sum();
    let h: Vec<f64> = pair.right.iter().map(|x| x / pi_h).collect();
    let v_h: f64 = pair.left.iter().zip(&h).map(|(v, h)| v * h).sum();
    let v: Vec<f64> = pair.left.iter().map(|x| x / v_h).collect();
    Ok(SpectralSolution {
        theta,
        kappa: pair.root.ln(),
        h,
        v,
        pi,
    })
}

/// Cumulant generating function `kappa(theta)`.
pub fn cgf(kernel: &MapKernel, theta: f64) -> Result<f64> {
    Ok(perron(kernel, theta)?.kappa)
}

/// `kappa'(theta) = v F'[theta] h / exp(kappa)`.
pub fn cgf_derivative(kernel: &MapKernel, theta: f64) -> Result<f64> {
    let sol = perron(kernel, theta)?;
    cgf_derivative_at(kernel, &sol)
}

/// Derivative of the cumulant generating function reusing a solved spectrum.
pub fn cgf_derivative_at(kernel: &MapKernel, sol: &SpectralSolution) -> Result<f64> {
    let d = transform_derivative(kernel, sol.theta)?;
    let n = kernel.n_states();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += sol.v[i] * d[(i, j)] * sol.h[j];
        }
    }
    Ok(acc * (-sol.kappa).exp())
}

/// Long-run mean increment per slot, `kappa'(0)`.
pub fn mean_rate(kernel: &MapKernel) -> Result<f64> {
    cgf_derivative(kernel, 0.0)
}

/// Kernel of the sign-flipped process: `cgf(negate(k), theta) = cgf(k, -theta)`.
pub fn negate(kernel: &MapKernel) -> MapKernel {
    kernel.map_increments(|law| law.clone().negated())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state_constant() -> MapKernel {
        MapKernel::with_destination_increments(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![IncrementLaw::Constant(1.0), IncrementLaw::Constant(3.0)],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn transform_matrix_at_zero_is_transition() {
        let k = two_state_constant();
        let f = transform_matrix(&k, 0.0).unwrap();
        assert_eq!(f, DMatrix::from_element(2, 2, 0.5));
    }

    #[test]
    fn transform_matrix_constant_laws() {
        let k = two_state_constant();
        let f = transform_matrix(&k, 1.0).unwrap();
        let e1 = 0.5 * 1f64.exp();
        let e3 = 0.5 * 3f64.exp();
        assert!((f[(0, 0)] - e1).abs() < 1e-14 && (f[(1, 0)] - e1).abs() < 1e-14);
        assert!((f[(0, 1)] - e3).abs() < 1e-13 && (f[(1, 1)] - e3).abs() < 1e-13);
    }

    #[test]
    fn perron_identical_rows() {
        let k = two_state_constant();
        let s = perron(&k, 1.0).unwrap();
        let expect = (0.5 * 1f64.exp() + 0.5 * 3f64.exp()).ln();
        assert!((s.kappa - expect).abs() < 1e-13);
        assert!((s.h[0] - 1.0).abs() < 1e-12 && (s.h[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perron_at_zero() {
        let k = two_state_constant();
        let s = perron(&k, 0.0).unwrap();
        assert_eq!(s.kappa, 0.0);
        assert_eq!(s.h, vec![1.0, 1.0]);
        assert_eq!(s.v, s.pi);
    }

    #[test]
    fn cgf_single_state() {
        let k = MapKernel::constant(2.5).unwrap();
        assert!((cgf(&k, 1.3).unwrap() - 3.25).abs() < 1e-14);
        assert!((cgf_derivative(&k, 0.4).unwrap() - 2.5).abs() < 1e-14);
        let p = MapKernel::iid(IncrementLaw::DiscretePmf(
            Pmf::uniform(vec![1.0, 3.0]).unwrap(),
        ))
        .unwrap();
        let expect = (0.5 * 1f64.exp() + 0.5 * 3f64.exp()).ln();
        assert!((cgf(&p, 1.0).unwrap() - expect).abs() < 1e-14);
        assert!((mean_rate(&p).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mean_rate_two_state() {
        assert!((mean_rate(&two_state_constant()).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn negate_constant() {
        let k = MapKernel::constant(2.0).unwrap();
        let n = negate(&k);
        assert!((cgf(&n, 0.5).unwrap() + 1.0).abs() < 1e-15);
        let f = transform_matrix(&n, 0.5).unwrap();
        assert!((f[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
    }
}
