use super::{CopulaSpec, GridCopula};
use crate::{Error, Result};

const DIST_TOL: f64 = 1e-12;
const NEGATIVE_TOL: f64 = 1e-9;

/// Cumulative distribution of a finite state distribution evaluated at each
/// ordered state. The final level is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalLadder {
    levels: Vec<f64>,
}

impl MarginalLadder {
    pub fn new(dist: &[f64]) -> Result<Self> {
        if dist.is_empty() {
            return Err(Error::InvalidArgument("empty state distribution".into()));
        }
        if dist.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument(
                "state distribution has a negative entry".into(),
            ));
        }
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > DIST_TOL {
            return Err(Error::InvalidArgument(format!(
                "state distribution sums to {total}"
            )));
        }
        let mut acc = 0.0;
        let mut levels: Vec<f64> = dist
            .iter()
            .map(|p| {
                acc += p;
                acc.min(1.0)
            })
            .collect();
        *levels.last_mut().unwrap() = 1.0;
        Ok(MarginalLadder { levels })
    }

    pub fn state_count(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Ladder level below state `x`: 0 for the first state.
    fn below(&self, x: usize) -> f64 {
        if x == 0 {
            0.0
        } else {
            self.levels[x - 1]
        }
    }
}

/// Transition matrix whose one-step joint law of successive states has the
/// given copula over the state ladder of `varpi`, together with the next
/// state distribution `varpi P`.
///
/// `p_xy = [G(x, y) - G(x-1, y) - G(x, y-1) + G(x-1, y-1)] / varpi_x` with
/// `G(x, y) = C(F(x), F(y))`.
pub fn transition_from_copula(
    copula: &CopulaSpec,
    varpi: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    copula.validate()?;
    let ladder = MarginalLadder::new(varpi)?;
    let n = varpi.len();
    if let Some(x) = varpi.iter().position(|p| *p == 0.0) {
        return Err(Error::ZeroMassState(x));
    }
    let p = match copula {
        CopulaSpec::P => vec![varpi.to_vec(); n],
        CopulaSpec::M => (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
        _ => {
            let g = |x: f64, y: f64| copula.eval_unchecked(x, y);
            let mut p = vec![vec![0.0; n]; n];
            for x in 0..n {
                let (fx, fx0) = (ladder.levels[x], ladder.below(x));
                for y in 0..n {
                    let (fy, fy0) = (ladder.levels[y], ladder.below(y));
                    let mass = g(fx, fy) - g(fx0, fy) - g(fx, fy0) + g(fx0, fy0);
                    let value = mass / varpi[x];
                    if value < -NEGATIVE_TOL {
                        return Err(Error::IncompatibleCopula {
                            row: x,
                            col: y,
                            value,
                        });
                    }
                    p[x][y] = value.max(0.0);
                }
            }
            p
        }
    };
    let next = step_distribution(varpi, &p);
    Ok((p, next))
}

/// `varpi P`.
pub(crate) fn step_distribution(varpi: &[f64], p: &[Vec<f64>]) -> Vec<f64> {
    let n = varpi.len();
    (0..n)
        .map(|y| (0..n).map(|x| varpi[x] * p[x][y]).sum())
        .collect()
}

/// Copula of successive states of a chain started in `varpi`, extended off
/// the state ladders by bilinear interpolation.
pub fn implied_copula(transition: &[Vec<f64>], varpi: &[f64]) -> Result<CopulaSpec> {
    let n = varpi.len();
    if transition.len() != n || transition.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            left: transition.len(),
            right: n,
        });
    }
    if let Some(x) = varpi.iter().position(|p| *p == 0.0) {
        return Err(Error::ZeroMassState(x));
    }
    let next = step_distribution(varpi, transition);
    if let Some(y) = next.iter().position(|p| *p == 0.0) {
        return Err(Error::ZeroMassState(y));
    }
    let u = knots(&MarginalLadder::new(varpi)?);
    let next_total: f64 = next.iter().sum();
    let next: Vec<f64> = next.iter().map(|p| p / next_total).collect();
    let v = knots(&MarginalLadder::new(&next)?);
    let mut values = vec![vec![0.0; n + 1]; n + 1];
    for i in 1..=n {
        let mut row_acc = 0.0;
        for j in 1..=n {
            row_acc += varpi[i - 1] * transition[i - 1][j - 1];
            values[i][j] = values[i - 1][j] + row_acc;
        }
    }
    for i in 0..=n {
        values[i][n] = u[i];
    }
    for j in 0..=n {
        values[n][j] = v[j];
    }
    Ok(CopulaSpec::Grid(GridCopula::with_knots(u, v, values)?))
}

fn knots(ladder: &MarginalLadder) -> Vec<f64> {
    std::iter::once(0.0).chain(ladder.levels().iter().copied()).collect()
}

/// Transition matrices and state distributions for one controllable dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDimension {
    /// `P_j` for `j = 0 .. horizon - 1`.
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// `varpi_j` for `j = 0 .. horizon`.
    pub distributions: Vec<Vec<f64>>,
}

/// Output of the dependence-control algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    pub horizon: usize,
    pub dimensions: Vec<PlanDimension>,
}

/// For each step `j < horizon` and each dimension, extract `P_j` from the
/// temporal copula `C_{j,j+1}` over the ladder of `varpi_j` and advance
/// `varpi_{j+1} = varpi_j P_j`.
///
/// A copula sequence of length 1 is used at every step. Dimensions are
/// treated independently, which is the product spatial copula case.
pub fn dependence_control(
    temporal_copulas: &[Vec<CopulaSpec>],
    varpi0: &[Vec<f64>],
    horizon: usize,
) -> Result<ControlPlan> {
    if temporal_copulas.len() != varpi0.len() {
        return Err(Error::DimensionMismatch {
            left: temporal_copulas.len(),
            right: varpi0.len(),
        });
    }
    let mut dimensions = Vec::with_capacity(varpi0.len());
    for (copulas, start) in temporal_copulas.iter().zip(varpi0) {
        if copulas.is_empty() || (copulas.len() != 1 && copulas.len() < horizon) {
            return Err(Error::InvalidArgument(format!(
                "need 1 or at least {horizon} temporal copulas per dimension, got {}",
                copulas.len()
            )));
        }
        let mut varpi = start.clone();
        let mut transitions = Vec::with_capacity(horizon);
        let mut distributions = vec![varpi.clone()];
        for j in 0..horizon {
            let c = if copulas.len() == 1 { &copulas[0] } else { &copulas[j] };
            let (p, next) = transition_from_copula(c, &varpi)?;
            transitions.push(p);
            varpi = next;
            distributions.push(varpi.clone());
        }
        dimensions.push(PlanDimension {
            transitions,
            distributions,
        });
    }
    Ok(ControlPlan {
        horizon,
        dimensions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[Vec<f64>], b: &[[f64; 2]; 2], tol: f64) -> bool {
        a.iter()
            .zip(b)
            .all(|(r, s)| r.iter().zip(s).all(|(x, y)| (x - y).abs() <= tol))
    }

    #[test]
    fn fig_matrices() {
        let varpi = [0.3, 0.7];
        let (p, _) =
            transition_from_copula(&CopulaSpec::one_param_frechet(0.5).unwrap(), &varpi).unwrap();
        assert!(close(&p, &[[0.4125, 0.5875], [0.2518, 0.7482]], 5e-5));
        let (p, _) =
            transition_from_copula(&CopulaSpec::one_param_frechet(-0.5).unwrap(), &varpi).unwrap();
        assert!(close(&p, &[[0.2875, 0.7125], [0.3054, 0.6946]], 5e-5));
    }

    #[test]
    fn product_and_comonotone_are_exact() {
        let varpi = [0.2, 0.5, 0.3];
        let (p, next) = transition_from_copula(&CopulaSpec::P, &varpi).unwrap();
        assert!(p.iter().all(|r| r == &varpi));
        assert_eq!(next.len(), 3);
        let (m, _) = transition_from_copula(&CopulaSpec::M, &varpi).unwrap();
        assert_eq!(m[1], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_mass_and_lattice_comonotone() {
        assert_eq!(
            transition_from_copula(&CopulaSpec::W, &[0.0, 1.0]),
            Err(Error::ZeroMassState(0))
        );
        let lattice_m = GridCopula::with_knots(
            vec![0.0, 0.5, 1.0],
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0; 3], vec![0.0, 0.5, 0.5], vec![0.0, 0.5, 1.0]],
        )
        .unwrap();
        let (p, _) = transition_from_copula(&CopulaSpec::Grid(lattice_m), &[0.5, 0.5]).unwrap();
        assert_eq!(p, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn implied_copula_round_trip() {
        let p = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
        let varpi = vec![0.75, 0.25];
        let c = implied_copula(&p, &varpi).unwrap();
        let (q, _) = transition_from_copula(&c, &varpi).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[i][j] - q[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn homogeneous_plan() {
        let plan = dependence_control(
            &[vec![CopulaSpec::one_param_frechet(0.5).unwrap()]],
            &[vec![0.3, 0.7]],
            5,
        )
        .unwrap();
        let d = &plan.dimensions[0];
        assert_eq!(d.transitions.len(), 5);
        assert_eq!(d.distributions.len(), 6);
        for w in &d.distributions {
            assert!((w[0] - 0.3).abs() < 1e-12);
        }
    }
}
