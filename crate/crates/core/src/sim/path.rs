use rand::Rng;

use super::stream_rng;
use crate::spectral::MapKernel;

/// Modulating states `J_0 .. J_T` and increments `X_1 .. X_T`, where `X_t`
/// is drawn from the law of the transition `J_{t-1} -> J_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub states: Vec<usize>,
    pub increments: Vec<f64>,
}

/// Reusable sampler holding the cumulative transition rows of a kernel.
#[derive(Debug, Clone)]
pub struct PathSampler<'a> {
    kernel: &'a MapKernel,
    rows: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

fn cumulative(p: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut c: Vec<f64> = p
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    // the last state with positive mass absorbs rounding
    if let Some(&top) = c.last() {
        for v in c.iter_mut().rev() {
            if *v == top {
                *v = f64::INFINITY;
            } else {
                break;
            }
        }
    }
    c
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|c| *c <= u).min(cum.len() - 1)
}

impl<'a> PathSampler<'a> {
    pub fn new(kernel: &'a MapKernel) -> Self {
        let rows = kernel
            .transition_rows()
            .into_iter()
            .map(|r| cumulative(r.into_iter()))
            .collect();
        PathSampler {
            kernel,
            rows,
            initial: cumulative(kernel.initial().iter().copied()),
        }
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(&self.initial, rng.random())
    }

    /// Advance one slot from `state`; returns the new state and the increment.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> (usize, f64) {
        let next = pick(&self.rows[state], rng.random());
        (next, self.kernel.increment(state, next).sample(rng))
    }

    pub fn run<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> SamplePath {
        let mut states = Vec::with_capacity(horizon + 1);
        let mut increments = Vec::with_capacity(horizon);
        let mut s = self.initial_state(rng);
        states.push(s);
        for _ in 0..horizon {
            let (next, x) = self.step(s, rng);
            states.push(next);
            increments.push(x);
            s = next;
        }
        SamplePath { states, increments }
    }
}

pub fn sample_path_with<R: Rng + ?Sized>(kernel: &MapKernel, horizon: usize, rng: &mut R) -> SamplePath {
    PathSampler::new(kernel).run(horizon, rng)
}

/// Sample path from stream 0 of `seed`.
pub fn sample_path(kernel: &MapKernel, horizon: usize, seed: u64) -> SamplePath {
    sample_path_with(kernel, horizon, &mut stream_rng(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::IncrementLaw;

    #[test]
    fn constant_kernel_path() {
        let k = MapKernel::constant(2.5).unwrap();
        let p = sample_path(&k, 10, 7);
        assert!(p.increments.iter().all(|x| *x == 2.5));
        assert_eq!(p.states, vec![0; 11]);
    }

    #[test]
    fn deterministic_given_seed() {
        let k = MapKernel::with_destination_increments(
            vec![vec![0.9, 0.1], vec![0.4, 0.6]],
            vec![IncrementLaw::Constant(1.0), IncrementLaw::rayleigh(3.0, 2.0).unwrap()],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(sample_path(&k, 500, 3), sample_path(&k, 500, 3));
        assert_ne!(sample_path(&k, 500, 3), sample_path(&k, 500, 4));
    }

    #[test]
    fn zero_probability_states_are_never_drawn() {
        let c = cumulative([0.5, 0.5, 0.0].into_iter());
        assert_eq!(pick(&c, 0.9999999999), 1);
        assert_eq!(pick(&c, 0.2), 0);
    }
}
