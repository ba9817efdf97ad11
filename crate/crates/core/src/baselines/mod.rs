//! Non-learning reference policies.

pub mod heuristic;
pub mod lp;
pub mod perfect_info;

pub use heuristic::{heuristic_action, HeuristicConfig};
pub use perfect_info::{build_perfect_info_lp, lp_upper_bound, surrogate_period_score, LpBound, PerfectInfoLp};
