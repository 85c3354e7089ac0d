use crate::{Error, Result};

/// Backlog and virtual delay of a single-server queue fed slot by slot.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    pub horizon: usize,
    /// `B(0) .. B(T)` with `B(0) = 0`.
    pub backlog: Vec<f64>,
    /// `D(0) .. D(T)`.
    pub virtual_delay: Vec<u64>,
    pub arrivals: Vec<f64>,
    pub services: Vec<f64>,
}

/// Run `B(t+1) = max(B(t) + a(t) - c(t), 0)` and compute the virtual delay
/// `D(t) = min { d >= 0 : A(t - d) <= A(t) - B(t) }`.
pub fn lindley(arrivals: &[f64], services: &[f64]) -> Result<QueueTrace> {
    if arrivals.len() != services.len() {
        return Err(Error::LengthMismatch {
            left: arrivals.len(),
            right: services.len(),
        });
    }
    let horizon = arrivals.len();
    let mut backlog = Vec::with_capacity(horizon + 1);
    let mut cumulative = Vec::with_capacity(horizon + 1);
    backlog.push(0.0);
    cumulative.push(0.0);
    for t in 0..horizon {
        backlog.push((backlog[t] + arrivals[t] - services[t]).max(0.0));
        cumulative.push(cumulative[t] + arrivals[t]);
    }
    let virtual_delay = (0..=horizon)
        .map(|t| delay_at(&cumulative, backlog[t], t))
        .collect();
    Ok(QueueTrace {
        horizon,
        backlog,
        virtual_delay,
        arrivals: arrivals.to_vec(),
        services: services.to_vec(),
    })
}

/// Virtual delay at `t` from the cumulative arrivals `A(0) .. A(t)`.
pub(crate) fn delay_at(cumulative: &[f64], backlog: f64, t: usize) -> u64 {
    if backlog <= 0.0 {
        return 0;
    }
    let served = cumulative[t] - backlog;
    // absorbs rounding in the subtraction above
    let slack = 1e-12 * cumulative[t].abs().max(1.0);
    let mut d = 0;
    while d < t && cumulative[t - d] > served + slack {
        d += 1;
    }
    d as u64
}

/// Backlog and virtual delay at the final slot only.
pub(crate) fn final_state(arrivals: &[f64], services: &[f64], cumulative: &mut Vec<f64>) -> (f64, u64) {
    cumulative.clear();
    cumulative.push(0.0);
    let mut b: f64 = 0.0;
    for (a, c) in arrivals.iter().zip(services) {
        b = (b + a - c).max(0.0);
        cumulative.push(cumulative.last().unwrap() + a);
    }
    let t = arrivals.len();
    (b, delay_at(cumulative, b, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underloaded_queue_stays_empty() {
        let q = lindley(&[1.0; 10], &[2.0; 10]).unwrap();
        assert!(q.backlog.iter().all(|b| *b == 0.0));
        assert!(q.virtual_delay.iter().all(|d| *d == 0));
    }

    #[test]
    fn overloaded_queue_accumulates() {
        let q = lindley(&[2.0; 10], &[1.0; 10]).unwrap();
        for t in 0..=10 {
            assert_eq!(q.backlog[t], t as f64);
        }
    }

    #[test]
    fn constant_arrival_delay_is_ceiling() {
        let services = [0.0, 0.5, 3.0, 0.0, 0.0, 1.7, 0.2, 4.0, 0.0, 0.9];
        let lambda = 1.3;
        let q = lindley(&[lambda; 10], &services).unwrap();
        for t in 0..=10 {
            let expect = (q.backlog[t] / lambda - 1e-9).ceil().max(0.0) as u64;
            assert_eq!(q.virtual_delay[t], expect, "t={t}");
        }
    }

    #[test]
    fn final_state_matches_trace() {
        let a = [0.4, 2.0, 0.0, 1.1, 3.0];
        let c = [1.0, 0.5, 0.5, 0.2, 0.1];
        let q = lindley(&a, &c).unwrap();
        let (b, d) = final_state(&a, &c, &mut Vec::new());
        assert_eq!(b, q.backlog[5]);
        assert_eq!(d, q.virtual_delay[5]);
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            lindley(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        );
    }
}
