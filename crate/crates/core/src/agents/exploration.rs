use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::NUM_ACTIONS;

pub const NUM_GVFS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorationMode {
    EpsilonGreedy,
    DezGreedy,
}

/// Linear ε decay over the first `anneal_episodes` episodes, constant after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_episodes: usize,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, total_episodes: usize, anneal_fraction: f64) -> Self {
        Self {
            start,
            end,
            anneal_episodes: (anneal_fraction * total_episodes as f64).round() as usize,
        }
    }

    pub fn constant(epsilon: f64) -> Self {
        Self {
            start: epsilon,
            end: epsilon,
            anneal_episodes: 0,
        }
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.anneal_episodes == 0 || episode >= self.anneal_episodes {
            return self.end;
        }
        let frac = episode as f64 / self.anneal_episodes as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Which rule produced an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSource {
    Main,
    Random,
    Gvf1,
    Gvf2,
    Gvf3,
}

impl ActionSource {
    pub fn gvf(k: usize) -> Self {
        match k {
            1 => ActionSource::Gvf1,
            2 => ActionSource::Gvf2,
            3 => ActionSource::Gvf3,
            _ => panic!("no GVF head {k}"),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionSource::Main => "main",
            ActionSource::Random => "random",
            ActionSource::Gvf1 => "gvf1",
            ActionSource::Gvf2 => "gvf2",
            ActionSource::Gvf3 => "gvf3",
        }
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the smallest value; the lowest index wins ties.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// What the exploration rule decided before any head is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    /// Act greedily on the main head.
    Greedy,
    Random(usize),
    /// Act on the argmin of GVF head `k` (1-based).
    Gvf(usize),
}

/// Draws the exploration decision. With ε = 0 no randomness is consumed.
pub fn explore(mode: ExplorationMode, epsilon: f64, rng: &mut impl Rng) -> Choice {
    if epsilon <= 0.0 || rng.random::<f64>() >= epsilon {
        return Choice::Greedy;
    }
    match mode {
        ExplorationMode::EpsilonGreedy => Choice::Random(rng.random_range(0..NUM_ACTIONS)),
        ExplorationMode::DezGreedy => match rng.random_range(0..=NUM_GVFS) {
            0 => Choice::Random(rng.random_range(0..NUM_ACTIONS)),
            k => Choice::Gvf(k),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule_anneals_then_holds() {
        let s = EpsilonSchedule::new(1.0, 0.05, 200, 0.5);
        assert_eq!(s.anneal_episodes, 100);
        assert_eq!(s.epsilon(0), 1.0);
        assert!((s.epsilon(50) - 0.525).abs() < 1e-12);
        assert_eq!(s.epsilon(100), 0.05);
        assert_eq!(s.epsilon(199), 0.05);
        let mut prev = f64::INFINITY;
        for e in 0..200 {
            let eps = s.epsilon(e);
            assert!(eps <= prev && (0.05..=1.0).contains(&eps));
            prev = eps;
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmin(&[2.0, 0.0, 0.0, 5.0]), 1);
        assert_eq!(argmax(&[0.0; 14]), 0);
    }

    #[test]
    fn zero_epsilon_is_greedy_without_drawing() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let b = a.clone();
        assert_eq!(explore(ExplorationMode::DezGreedy, 0.0, &mut a), Choice::Greedy);
        assert_eq!(a, b);
    }

    #[test]
    fn epsilon_greedy_never_uses_gvfs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert!(!matches!(explore(ExplorationMode::EpsilonGreedy, 1.0, &mut rng), Choice::Gvf(_)));
        }
    }
}
