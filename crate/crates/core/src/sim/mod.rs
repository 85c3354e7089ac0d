//! Monte Carlo simulation of queues with Markov additive arrivals and
//! service, plus empirical checks of the stochastic orders.
//!
//! Every replication `r` draws from its own ChaCha stream `(seed, r)`, so
//! results do not depend on the number of worker threads.

mod experiment;
mod martingale;
mod order;
mod path;
mod queue;
pub mod stats;
mod tail;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use experiment::{
    ordering_experiment, ConvexCheck, DecayEstimate, Experiment, ExperimentReport,
    ExperimentSettings,
};
pub use martingale::{martingale_check, MartingaleReport};
pub use order::{convex_order_leq, cumulative_pmf, supermodular_battery, OrderReport, TestStatistic, Verdict};
pub use path::{sample_path, sample_path_with, PathSampler, SamplePath};
pub use queue::{lindley, QueueTrace};
pub use tail::{
    decay_fit, simulate_queue, tail_estimate, tail_from_samples, ArrivalModel, DecayFit, Metric,
    QueueSamples, SimulationSettings, TailEstimate, MIN_HITS,
};

/// Random stream `stream` of the generator family keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
