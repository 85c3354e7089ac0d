use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::law::IncrementLaw;
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite-state discrete-time Markov additive process: a transition matrix
/// together with the law of the increment attached to every transition.
#[derive(Debug, Clone, PartialEq)]
pub struct MapKernel {
    labels: Vec<String>,
    transition: DMatrix<f64>,
    increments: Vec<Vec<IncrementLaw>>,
    initial: Vec<f64>,
    stationary: Vec<f64>,
}

impl MapKernel {
    pub fn new(
        labels: Vec<String>,
        transition: Vec<Vec<f64>>,
        increments: Vec<Vec<IncrementLaw>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let n = transition.len();
        if n == 0 {
            return Err(Error::InvalidKernel("empty state space".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidKernel(format!(
                "{} labels for {n} states",
                labels.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidKernel(format!(
                    "transition row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidKernel(format!(
                    "transition row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidKernel(format!(
                    "transition row {i} sums to {s}"
                )));
            }
        }
        if increments.len() != n || increments.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidKernel(
                "increment matrix must match the transition matrix".into(),
            ));
        }
        for law in increments.iter().flatten() {
            law.validate()?;
        }
        if initial.len() != n {
            return Err(Error::InvalidKernel(format!(
                "initial distribution has {} entries, expected {n}",
                initial.len()
            )));
        }
        if initial.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidKernel(
                "initial distribution has a negative entry".into(),
            ));
        }
        let s: f64 = initial.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidKernel(format!(
                "initial distribution sums to {s}"
            )));
        }
        if !is_irreducible(&transition) {
            return Err(Error::InvalidKernel("transition matrix is reducible".into()));
        }
        let transition = DMatrix::from_fn(n, n, |i, j| transition[i][j]);
        let stationary = stationary_distribution(&transition)?;
        Ok(MapKernel {
            labels,
            transition,
            increments,
            initial,
            stationary,
        })
    }

    /// One-state kernel: an i.i.d. increment sequence.
    pub fn iid(law: IncrementLaw) -> Result<Self> {
        MapKernel::new(
            vec!["s0".into()],
            vec![vec![1.0]],
            vec![vec![law]],
            vec![1.0],
        )
    }

    /// Deterministic process with `value` per slot.
    pub fn constant(value: f64) -> Result<Self> {
        MapKernel::iid(IncrementLaw::Constant(value))
    }

    /// Kernel whose increment depends only on the destination state.
    pub fn with_destination_increments(
        transition: Vec<Vec<f64>>,
        laws: Vec<IncrementLaw>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let n = transition.len();
        let labels = (0..n).map(|i| format!("s{i}")).collect();
        let increments = (0..n).map(|_| laws.clone()).collect();
        MapKernel::new(labels, transition, increments, initial)
    }

    /// Kernel whose increment depends only on the source state.
    pub fn with_source_increments(
        transition: Vec<Vec<f64>>,
        laws: Vec<IncrementLaw>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let n = transition.len();
        let labels = (0..n).map(|i| format!("s{i}")).collect();
        let increments = laws.iter().map(|l| vec![l.clone(); n]).collect();
        MapKernel::new(labels, transition, increments, initial)
    }

    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_states())
            .map(|i| self.transition.row(i).iter().copied().collect())
            .collect()
    }

    pub fn increment(&self, from: usize, to: usize) -> &IncrementLaw {
        &self.increments[from][to]
    }

    pub fn increments(&self) -> &[Vec<IncrementLaw>] {
        &self.increments
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Same chain and increments with a different initial distribution.
    pub fn with_initial(&self, initial: Vec<f64>) -> Result<Self> {
        MapKernel::new(
            self.labels.clone(),
            self.transition_rows(),
            self.increments.clone(),
            initial,
        )
    }

    /// Replace every increment law through `f`.
    pub fn map_increments(&self, f: impl Fn(&IncrementLaw) -> IncrementLaw) -> Self {
        MapKernel {
            labels: self.labels.clone(),
            transition: self.transition.clone(),
            increments: self
                .increments
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
            initial: self.initial.clone(),
            stationary: self.stationary.clone(),
        }
    }

    /// State distribution after `t` steps: `initial * P^t`.
    pub fn distribution_at(&self, t: u64) -> Vec<f64> {
        let mut dist = DVector::from_vec(self.initial.clone()).transpose();
        for _ in 0..t {
            dist = &dist * &self.transition;
        }
        dist.iter().copied().collect()
    }
}

fn is_irreducible(p: &[Vec<f64>]) -> bool {
    let n = p.len();
    let reaches_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let w = if forward { p[i][j] } else { p[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reaches_all(true) && reaches_all(false)
}

/// Solve `pi P = pi`, `sum(pi) = 1` for an irreducible chain.
fn stationary_distribution(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a.lu().solve(&rhs).ok_or(Error::NoConvergence {
        what: "stationary distribution",
        residual: f64::NAN,
    })?;
    let mut pi: Vec<f64> = pi.iter().map(|x| x.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= s);
    Ok(pi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> IncrementLaw {
        IncrementLaw::Constant(x)
    }

    #[test]
    fn rejects_bad_rows() {
        let r = MapKernel::with_destination_increments(
            vec![vec![0.5, 0.6], vec![0.5, 0.5]],
            vec![c(1.0), c(2.0)],
            vec![0.5, 0.5],
        );
        assert!(matches!(r, Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn rejects_reducible_chain() {
        let r = MapKernel::with_destination_increments(
            vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            vec![c(1.0), c(2.0)],
            vec![0.5, 0.5],
        );
        assert!(matches!(r, Err(Error::InvalidKernel(m)) if m.contains("reducible")));
    }

    #[test]
    fn stationary_of_two_state_chain() {
        let k = MapKernel::with_destination_increments(
            vec![vec![0.9, 0.1], vec![0.3, 0.7]],
            vec![c(1.0), c(2.0)],
            vec![1.0, 0.0],
        )
        .unwrap();
        assert!((k.stationary()[0] - 0.75).abs() < 1e-14);
        assert!((k.stationary()[1] - 0.25).abs() < 1e-14);
        let d = k.distribution_at(200);
        assert!((d[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn periodic_chain_is_irreducible() {
        let k = MapKernel::with_destination_increments(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![c(1.0), c(2.0)],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(k.stationary(), &[0.5, 0.5]);
    }
}
