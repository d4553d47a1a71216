//! Application harnesses: a single-server queue and discrete delta hedging.

pub mod hedge;
pub mod queue;

pub use hedge::{bs_delta, bs_price, hedging_error, HedgeConfig, HedgeCost};
pub use queue::{lindley_waiting_times, queue_cost, QueueConfig, QueueCost, QueueMeasure};
