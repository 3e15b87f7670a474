//! Seeded stochastic trial generator.
//!
//! Every trial owns an RNG substream derived from `(seed, trial_id)` by a
//! counter-based construction (a ChaCha stream per trial), so trials are
//! independent of execution order and the parallel and sequential drivers
//! produce identical record lists. Records are merged in `trial_id` order
//! before emission.
//!
//! Logical timestamps stand in for the wall-clock ordering of the narrative:
//! under `SystemFirst` the system photon is detected before the choice is
//! made (`t_sys < t_choice < t_env`); under `EnvironmentFirst` the choice
//! precedes the environment detection which precedes the system detection;
//! under `JointSingleShot` the choice is made and both detections share one
//! logical instant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::Ket;
use crate::measurement::{collapse, joint_probability, OutcomeDistribution, ProjectiveMeasurement};
use crate::optics::{Choice, ElementCatalog};
use crate::ZERO_PROB_TOL;

/// How the per-trial analyzer choice is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChoicePolicy {
    Fixed(Choice),
    Random,
}

impl std::fmt::Display for ChoicePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChoicePolicy::Fixed(c) => write!(f, "{c}"),
            ChoicePolicy::Random => write!(f, "random"),
        }
    }
}

impl std::str::FromStr for ChoicePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(ChoicePolicy::Fixed(Choice::Zero)),
            "1" => Ok(ChoicePolicy::Fixed(Choice::One)),
            "random" => Ok(ChoicePolicy::Random),
            other => Err(Error::InvalidConfig(format!(
                "choice must be 0, 1 or random, got `{other}`"
            ))),
        }
    }
}

impl Serialize for ChoicePolicy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Which measurement is sampled first within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementOrder {
    SystemFirst,
    EnvironmentFirst,
    JointSingleShot,
}

impl MeasurementOrder {
    pub const ALL: [MeasurementOrder; 3] = [
        MeasurementOrder::SystemFirst,
        MeasurementOrder::EnvironmentFirst,
        MeasurementOrder::JointSingleShot,
    ];
}

impl std::fmt::Display for MeasurementOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            MeasurementOrder::SystemFirst => "system-first",
            MeasurementOrder::EnvironmentFirst => "environment-first",
            MeasurementOrder::JointSingleShot => "joint",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for MeasurementOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "system-first" => Ok(MeasurementOrder::SystemFirst),
            "environment-first" => Ok(MeasurementOrder::EnvironmentFirst),
            "joint" => Ok(MeasurementOrder::JointSingleShot),
            other => Err(Error::InvalidConfig(format!(
                "ordering must be system-first, environment-first or joint, got `{other}`"
            ))),
        }
    }
}

impl Serialize for MeasurementOrder {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// One Monte Carlo run: dephasing, choice policy, sampling order, trial
/// count and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    theta: f64,
    choice_policy: ChoicePolicy,
    ordering: MeasurementOrder,
    trials: u64,
    seed: u64,
}

impl RunConfig {
    pub fn new(
        theta: f64,
        choice_policy: ChoicePolicy,
        ordering: MeasurementOrder,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidConfig(format!("theta {theta} is not finite")));
        }
        if trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(Self {
            theta: crate::optics::wrap_angle(theta),
            choice_policy,
            ordering,
            trials,
            seed,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn choice_policy(&self) -> ChoicePolicy {
        self.choice_policy
    }

    pub fn ordering(&self) -> MeasurementOrder {
        self.ordering
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Environment-side detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EnvDetector {
    D1,
    D2,
}

impl EnvDetector {
    pub const ALL: [EnvDetector; 2] = [EnvDetector::D1, EnvDetector::D2];

    pub fn index(self) -> usize {
        match self {
            EnvDetector::D1 => 0,
            EnvDetector::D2 => 1,
        }
    }

    fn from_index(idx: usize) -> Self {
        Self::ALL[idx]
    }
}

impl std::fmt::Display for EnvDetector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "D{}", self.index() + 1)
    }
}

/// System-side detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SysDetector {
    D3,
    D4,
}

impl SysDetector {
    pub const ALL: [SysDetector; 2] = [SysDetector::D3, SysDetector::D4];

    pub fn index(self) -> usize {
        match self {
            SysDetector::D3 => 0,
            SysDetector::D4 => 1,
        }
    }

    fn from_index(idx: usize) -> Self {
        Self::ALL[idx]
    }
}

impl std::fmt::Display for SysDetector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "D{}", self.index() + 3)
    }
}

/// One simulated coincidence event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub choice: Choice,
    pub env_detector: EnvDetector,
    pub sys_detector: SysDetector,
    pub t_sys: u32,
    pub t_choice: u32,
    pub t_env: u32,
    /// RNG substream the trial consumed; equals `trial_id`.
    pub substream: u64,
}

/// Immutable per-run context shared by all trials.
struct TrialScene {
    state: Ket,
    ports: ProjectiveMeasurement,
    analyzers: [ProjectiveMeasurement; 2],
    policy: ChoicePolicy,
    ordering: MeasurementOrder,
}

impl TrialScene {
    fn new(config: &RunConfig) -> Self {
        let catalog = ElementCatalog::ideal();
        Self {
            state: catalog.full_eraser_state(config.theta),
            ports: catalog.port_measurement(),
            analyzers: [
                catalog.env_analyzer(Choice::Zero),
                catalog.env_analyzer(Choice::One),
            ],
            policy: config.choice_policy,
            ordering: config.ordering,
        }
    }
}

/// Inverse-CDF sampling: returns the index of the outcome whose cumulative
/// interval contains `uniform`, with intervals laid out in the
/// distribution's declared order. Outcomes at or below the impossible-branch
/// threshold get zero-width intervals and are never selected.
pub fn sample_outcome(distribution: &OutcomeDistribution, uniform: f64) -> usize {
    let mut cumulative = 0.0;
    let mut fallback = 0;
    for idx in 0..distribution.len() {
        let p = distribution.probability_at(idx);
        if p <= ZERO_PROB_TOL {
            continue;
        }
        cumulative += p;
        fallback = idx;
        if uniform < cumulative {
            return idx;
        }
    }
    fallback
}

fn draw_choice<R: Rng>(policy: ChoicePolicy, rng: &mut R) -> Choice {
    match policy {
        ChoicePolicy::Fixed(c) => c,
        ChoicePolicy::Random => {
            if rng.random::<f64>() < 0.5 {
                Choice::Zero
            } else {
                Choice::One
            }
        }
    }
}

fn run_one(scene: &TrialScene, trial_id: u64, seed: u64) -> TrialRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_id);

    let (choice, env, sys, t_sys, t_choice, t_env) = match scene.ordering {
        MeasurementOrder::SystemFirst => {
            let sys_dist = scene
                .ports
                .distribution(&scene.state)
                .expect("port register present");
            let sys_idx = sample_outcome(&sys_dist, rng.random());
            let collapsed = collapse(&scene.state, &scene.ports, sys_dist.label(sys_idx))
                .expect("sampled outcome has positive probability");
            let choice = draw_choice(scene.policy, &mut rng);
            let env_dist = scene.analyzers[choice.bit() as usize]
                .distribution(&collapsed)
                .expect("env register present");
            let env_idx = sample_outcome(&env_dist, rng.random());
            (choice, env_idx, sys_idx, 1, 2, 3)
        }
        MeasurementOrder::EnvironmentFirst => {
            let choice = draw_choice(scene.policy, &mut rng);
            let analyzer = &scene.analyzers[choice.bit() as usize];
            let env_dist = analyzer
                .distribution(&scene.state)
                .expect("env register present");
            let env_idx = sample_outcome(&env_dist, rng.random());
            let collapsed = collapse(&scene.state, analyzer, env_dist.label(env_idx))
                .expect("sampled outcome has positive probability");
            let sys_dist = scene
                .ports
                .distribution(&collapsed)
                .expect("port register present");
            let sys_idx = sample_outcome(&sys_dist, rng.random());
            (choice, env_idx, sys_idx, 3, 1, 2)
        }
        MeasurementOrder::JointSingleShot => {
            let choice = draw_choice(scene.policy, &mut rng);
            let analyzer = &scene.analyzers[choice.bit() as usize];
            // Four-outcome joint distribution in env-major order.
            let mut entries = Vec::with_capacity(4);
            for env_idx in 0..2 {
                for sys_idx in 0..2 {
                    let p = joint_probability(
                        &scene.state,
                        analyzer,
                        analyzer.outcome_label(env_idx),
                        &scene.ports,
                        scene.ports.outcome_label(sys_idx),
                    )
                    .expect("distinct registers");
                    entries.push((
                        format!("{}:{}", analyzer.detector(env_idx), scene.ports.detector(sys_idx)),
                        p,
                    ));
                }
            }
            let joint = OutcomeDistribution::new(entries).expect("Born rule probabilities");
            let pair = sample_outcome(&joint, rng.random());
            (choice, pair / 2, pair % 2, 2, 1, 2)
        }
    };

    TrialRecord {
        trial_id,
        choice,
        env_detector: EnvDetector::from_index(env),
        sys_detector: SysDetector::from_index(sys),
        t_sys,
        t_choice,
        t_env,
        substream: trial_id,
    }
}

/// Runs every trial on the current thread, in `trial_id` order.
pub fn run_trials_sequential(config: &RunConfig) -> Vec<TrialRecord> {
    let scene = TrialScene::new(config);
    (0..config.trials)
        .map(|id| run_one(&scene, id, config.seed))
        .collect()
}

/// Runs trials across the rayon pool. Identical output to the sequential
/// driver because each trial draws from its own substream.
#[cfg(feature = "parallel")]
pub fn run_trials_parallel(config: &RunConfig) -> Vec<TrialRecord> {
    use rayon::prelude::*;
    let scene = TrialScene::new(config);
    (0..config.trials)
        .into_par_iter()
        .map(|id| run_one(&scene, id, config.seed))
        .collect()
}

/// Generates the trial records for one run configuration; parallel when the
/// `parallel` feature is enabled, sequential otherwise.
pub fn run_trials(config: &RunConfig) -> Vec<TrialRecord> {
    #[cfg(feature = "parallel")]
    {
        run_trials_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_trials_sequential(config)
    }
}
