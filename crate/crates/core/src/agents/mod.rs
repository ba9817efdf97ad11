//! DQN agents with general value function (GVF) heads.
//!
//! One network is shared by every product: each product's 7 features go
//! through the same trunk, and all products' transitions land in one replay
//! buffer. Head 0 is the main Q head; heads 1..=3 predict discounted sums of
//! the wastage, stock-out and depletion cumulants.

pub mod exploration;
pub mod replay;

use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use exploration::{argmax, argmin, explore, ActionSource, Choice, EpsilonSchedule, ExplorationMode, NUM_GVFS};
pub use replay::{ReplayBuffer, Transition};

use crate::datagen::{Dataset, Window};
use crate::env::{build_features, Environment, Features, StoreState, ACTION_SET, FEATURE_DIM, NUM_ACTIONS};
use crate::episode::{check_window, primed_forecast, DecisionRecord, EpisodeStats, MetricsAccumulator};
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, HeadTargets, MlpConfig, Network, NetworkCheckpoint};

pub const MAIN_HEAD: usize = 0;
pub const NUM_HEADS: usize = 1 + NUM_GVFS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Dqn,
    DqnGvf,
    DezDqnGvf,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Dqn, Variant::DqnGvf, Variant::DezDqnGvf];

    pub fn trains_gvfs(self) -> bool {
        !matches!(self, Variant::Dqn)
    }

    pub fn exploration(self) -> ExplorationMode {
        match self {
            Variant::DezDqnGvf => ExplorationMode::DezGreedy,
            _ => ExplorationMode::EpsilonGreedy,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dqn => "dqn",
            Variant::DqnGvf => "dqn_gvf",
            Variant::DezDqnGvf => "dez_dqn_gvf",
        }
    }

    pub fn head_mask(self) -> [bool; NUM_HEADS] {
        let g = self.trains_gvfs();
        [true, g, g, g]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Environment periods between training rounds.
    pub train_every: usize,
    /// Gradient steps per training round.
    pub updates_per_train: usize,
    /// Gradient steps between target-network copies.
    pub target_sync: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub anneal_fraction: f64,
    pub hidden: Vec<usize>,
    pub adam: AdamConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            replay_capacity: 100_000,
            batch_size: 64,
            train_every: 4,
            updates_per_train: 2,
            target_sync: 500,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            anneal_fraction: 0.5,
            hidden: vec![64, 64],
            adam: AdamConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.replay_capacity == 0 || self.batch_size == 0 || self.train_every == 0 || self.target_sync == 0 {
            return bad("replay capacity, batch size, train interval and target sync must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_end)
            || self.epsilon_end > self.epsilon_start
        {
            return bad("epsilon schedule must satisfy 0 <= end <= start <= 1");
        }
        if !(0.0..=1.0).contains(&self.anneal_fraction) {
            return bad("anneal fraction must lie in [0, 1]");
        }
        if self.adam.lr <= 0.0 {
            return bad("learning rate must be positive");
        }
        Ok(())
    }

    pub fn mlp(&self) -> MlpConfig {
        MlpConfig {
            hidden: self.hidden.clone(),
            ..MlpConfig::default()
        }
    }

    pub fn schedule(&self, total_episodes: usize) -> EpsilonSchedule {
        EpsilonSchedule::new(self.epsilon_start, self.epsilon_end, total_episodes, self.anneal_fraction)
    }
}

/// Regression targets for one sampled minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct TdBatch {
    pub inputs: Vec<f64>,
    pub actions: Vec<usize>,
    /// `targets[k][b]`; rows of untrained heads are left at zero.
    pub targets: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    variant: Variant,
    config: AgentConfig,
    online: Network,
    target: Network,
    adam: Adam,
    replay: ReplayBuffer,
    rng: ChaCha8Rng,
    train_steps: u64,
    periods: u64,
    episodes: usize,
    last_loss: f64,
}

impl Agent {
    pub fn new(variant: Variant, config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = ChaCha8Rng::seed_from_u64(seed);
        let online = Network::new(config.mlp(), &mut init);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self::assemble(variant, config, online, rng))
    }

    fn assemble(variant: Variant, config: AgentConfig, online: Network, rng: ChaCha8Rng) -> Self {
        Self {
            variant,
            target: online.clone(),
            adam: Adam::new(config.adam, online.num_params()),
            replay: ReplayBuffer::new(config.replay_capacity),
            online,
            config,
            rng,
            train_steps: 0,
            periods: 0,
            episodes: 0,
            last_loss: f64::NAN,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.online
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.online
    }

    pub fn target_network(&self) -> &Network {
        &self.target
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes
    }

    /// Loss of the most recent gradient step.
    pub fn last_loss(&self) -> f64 {
        self.last_loss
    }

    /// Reseeds the acting/sampling generator.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.rng.set_stream(1);
    }

    pub fn remember(&mut self, t: Transition) {
        self.replay.push(t);
    }

    /// All head outputs of the online network.
    pub fn q_values(&self, features: &Features) -> Result<Vec<Vec<f64>>> {
        Ok(self.online.forward(features)?.1)
    }

    /// Picks one action per the variant's exploration rule.
    pub fn select_action(&mut self, features: &Features, epsilon: f64) -> (usize, ActionSource) {
        let choice = explore(self.variant.exploration(), epsilon, &mut self.rng);
        resolve(&self.online, features, choice)
    }

    /// TD targets for the sampled transitions, from the target network.
    pub fn td_targets(&self, indices: &[usize]) -> TdBatch {
        let mask = self.variant.head_mask();
        let gamma = self.config.gamma;
        let b = indices.len();
        let mut inputs = Vec::with_capacity(b * FEATURE_DIM);
        let mut actions = Vec::with_capacity(b);
        let mut targets = vec![vec![0.0; b]; NUM_HEADS];
        for (n, &idx) in indices.iter().enumerate() {
            let t = self.replay.get(idx);
            inputs.extend_from_slice(&t.state);
            actions.push(t.action);
            let e = self.target.embed(&t.next_state);
            for (k, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
                let bootstrap = if t.terminal {
                    0.0
                } else {
                    let q = self.target.head(&e, k);
                    if k == MAIN_HEAD {
                        q[argmax(&q)]
                    } else {
                        q[argmin(&q)]
                    }
                };
                let signal = if k == MAIN_HEAD { t.reward } else { t.cumulants[k - 1] };
                targets[k][n] = signal + gamma * bootstrap;
            }
        }
        TdBatch {
            inputs,
            actions,
            targets,
        }
    }

    fn trained_ranges(&self) -> Vec<Range<usize>> {
        let mut ranges = vec![self.online.trunk_span()];
        for (k, m) in self.variant.head_mask().iter().enumerate() {
            if *m {
                ranges.push(self.online.head_span(k));
            }
        }
        ranges
    }

    /// One gradient step on a uniformly sampled minibatch. `None` while the
    /// buffer is smaller than a batch.
    pub fn train_step(&mut self) -> Option<f64> {
        let indices = self.replay.sample_indices(self.config.batch_size, &mut self.rng)?;
        let batch = self.td_targets(&indices);
        let mask = self.variant.head_mask();
        let (loss, grads) = self.online.backward(
            &batch.inputs,
            &HeadTargets {
                actions: &batch.actions,
                targets: &batch.targets,
                mask: &mask,
            },
        );
        let ranges = self.trained_ranges();
        self.adam.step(self.online.params_mut(), &grads, &ranges);
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.config.target_sync) {
            self.sync_target();
        }
        self.last_loss = loss;
        Some(loss)
    }

    pub fn sync_target(&mut self) {
        self.target.copy_from(&self.online);
    }

    /// Counts one environment period and trains when the cadence says so.
    fn tick(&mut self) {
        self.periods += 1;
        if self.periods.is_multiple_of(self.config.train_every as u64) {
            for _ in 0..self.config.updates_per_train {
                if self.train_step().is_none() {
                    break;
                }
            }
        }
    }

    pub fn to_checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            format: AGENT_FORMAT.to_string(),
            version: AGENT_VERSION,
            variant: self.variant,
            config: self.config.clone(),
            episodes: self.episodes,
            train_steps: self.train_steps,
            network: self.online.to_checkpoint(),
        }
    }

    /// Restores an agent. Optimizer moments and replay contents are not part
    /// of a checkpoint and start fresh.
    pub fn from_checkpoint(ckpt: &AgentCheckpoint, seed: u64) -> Result<Self> {
        if ckpt.format != AGENT_FORMAT || ckpt.version != AGENT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported agent checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        ckpt.config.validate()?;
        let online = Network::from_checkpoint(&ckpt.network)?;
        if online.config().input_dim != FEATURE_DIM || online.config().outputs != NUM_ACTIONS {
            return Err(Error::Checkpoint("network does not match the feature/action contract".into()));
        }
        if online.config().heads != NUM_HEADS {
            return Err(Error::Checkpoint(format!("expected {NUM_HEADS} heads, found {}", online.config().heads)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let mut agent = Self::assemble(ckpt.variant, ckpt.config.clone(), online, rng);
        agent.episodes = ckpt.episodes;
        agent.train_steps = ckpt.train_steps;
        Ok(agent)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(&self.to_checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: AgentCheckpoint =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_checkpoint(&ckpt, seed)
    }
}

fn resolve(net: &Network, features: &Features, choice: Choice) -> (usize, ActionSource) {
    match choice {
        Choice::Random(a) => (a, ActionSource::Random),
        Choice::Greedy => {
            let e = net.embed(features);
            (argmax(&net.head(&e, MAIN_HEAD)), ActionSource::Main)
        }
        Choice::Gvf(k) => {
            let e = net.embed(features);
            (argmin(&net.head(&e, k)), ActionSource::gvf(k))
        }
    }
}

pub const AGENT_FORMAT: &str = "shelfwise-agent";
pub const AGENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub format: String,
    pub version: u32,
    pub variant: Variant,
    pub config: AgentConfig,
    pub episodes: usize,
    pub train_steps: u64,
    pub network: NetworkCheckpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpisodeMode {
    /// Explore with the given ε, store transitions and learn.
    Train { epsilon: f64 },
    /// Greedy and frozen.
    Eval,
}

/// Where an episode runs.
#[derive(Debug, Clone, Copy)]
pub struct Rollout<'a> {
    pub env: &'a Environment,
    pub dataset: &'a Dataset,
    pub window: Window,
    pub forecast_window: usize,
}

/// Runs one pass over `rollout.window`. Every product acts through the same
/// network; in training mode each product contributes one transition per
/// period.
pub fn run_episode(
    agent: &mut Agent,
    rollout: &Rollout,
    initial: Vec<f64>,
    mode: EpisodeMode,
    mut log: Option<&mut Vec<DecisionRecord>>,
) -> Result<EpisodeStats> {
    let Rollout {
        env,
        dataset,
        window,
        forecast_window,
    } = *rollout;
    check_window(dataset, window)?;
    if dataset.num_products() != env.num_products() {
        return Err(Error::DimensionMismatch {
            context: "dataset products",
            expected: env.num_products(),
            actual: dataset.num_products(),
        });
    }
    let epsilon = match mode {
        EpisodeMode::Train { epsilon } => epsilon,
        EpisodeMode::Eval => 0.0,
    };
    let training = matches!(mode, EpisodeMode::Train { .. });
    let p = env.num_products();
    let mut forecast = primed_forecast(dataset, window.start, forecast_window);
    let mut state = StoreState::new(initial);
    let mut features = build_features(&state, &forecast, env.catalog());
    let mut acc = MetricsAccumulator::default();
    let mut actions = vec![0usize; p];
    let mut sources = vec![ActionSource::Main; p];
    let mut raw = vec![0.0; p];
    for t in window.start..window.end {
        for i in 0..p {
            let (a, src) = agent.select_action(&features[i], epsilon);
            actions[i] = a;
            sources[i] = src;
            raw[i] = ACTION_SET[a];
        }
        let demand = &dataset.demand[t];
        let outcome = env.step(&state, &raw, demand)?;
        acc.record(env, &outcome);
        if let Some(log) = log.as_deref_mut() {
            for i in 0..p {
                let gvf = if agent.variant.trains_gvfs() {
                    let e = agent.online.embed(&features[i]);
                    let a = actions[i];
                    Some([
                        agent.online.head(&e, 1)[a],
                        agent.online.head(&e, 2)[a],
                        agent.online.head(&e, 3)[a],
                    ])
                } else {
                    None
                };
                log.push(DecisionRecord {
                    inventory: state.inventory[i],
                    order: demand[i],
                    replenishment: outcome.requested[i],
                    gvf,
                    source: Some(sources[i]),
                });
            }
        }
        forecast.update(demand);
        let next_features = build_features(&outcome.next_state, &forecast, env.catalog());
        if training {
            for i in 0..p {
                agent.remember(Transition {
                    state: features[i],
                    action: actions[i],
                    reward: outcome.product_rewards[i],
                    cumulants: outcome.cumulants[i],
                    next_state: next_features[i],
                    terminal: false,
                });
            }
            agent.tick();
        }
        features = next_features;
        state = outcome.next_state;
    }
    if training {
        agent.episodes += 1;
    }
    Ok(acc.finish())
}

/// Continues training with a constant ε, e.g. under a modified reward.
/// `initial(e)` gives the starting inventories of fine-tuning episode `e`.
pub fn fine_tune(
    agent: &mut Agent,
    rollout: &Rollout,
    episodes: usize,
    epsilon: f64,
    mut initial: impl FnMut(usize) -> Vec<f64>,
) -> Result<Vec<EpisodeStats>> {
    (0..episodes)
        .map(|e| run_episode(agent, rollout, initial(e), EpisodeMode::Train { epsilon }, None))
        .collect()
}

/// Samples `draws` exploration decisions at ε and counts their sources.
pub fn source_frequencies(mode: ExplorationMode, epsilon: f64, draws: usize, seed: u64) -> [usize; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0usize; 5];
    for _ in 0..draws {
        let idx = match explore(mode, epsilon, &mut rng) {
            Choice::Greedy => 0,
            Choice::Random(_) => 1,
            Choice::Gvf(k) => 1 + k,
        };
        counts[idx] += 1;
    }
    counts
}
