//! Training environments: the planar biped and a 1-DoF double-integrator
//! cart used as a fast sanity check for the whole optimization stack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curriculum::{CommandGenerator, PhaseSpec};
use crate::gait::{
    advance_phase, apply_obs_noise, build_actor_obs, build_critic_obs, initial_mode,
    GaitClassifier, GaitCommand, GaitMode, GaitParams, PhaseClock, PRIV_EXTRA,
};
use crate::rewards::{build_mask, route_total, RewardContext, RewardRegistry};
use crate::sim::{
    apply_push, centroidal_momenta, randomize_with_ranges, reset_with_noise, step, GenVec,
    ModelSpec, RandomizationRanges, SimState, NJ,
};
use crate::policy::action_to_targets;

pub const SIM_DT: f64 = 1e-3;
pub const DECIMATION: usize = 10;
pub const CONTROL_DT: f64 = SIM_DT * DECIMATION as f64;
pub const EPISODE_TIMEOUT: f64 = 20.0;
pub const MIN_BASE_HEIGHT: f64 = 0.35;
pub const MAX_PITCH: f64 = 1.0;
/// Uniform actor-observation noise as a fraction of each field's scale.
pub const TRAIN_OBS_NOISE: f64 = 0.01;

/// Result of one control step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Actor observation for the next decision; from a freshly reset
    /// episode when `done`.
    pub obs: Vec<f64>,
    pub priv_obs: Vec<f64>,
    /// Routed scalar reward.
    pub reward: f64,
    /// Raw per-term values, registry order.
    pub terms: Vec<f64>,
    pub done: bool,
    /// Active gait-mode index at this step.
    pub mode: usize,
    /// The simulator diverged and the episode was force-reset.
    pub diverged: bool,
}

/// A vectorizable episodic environment. Privileged observations are always
/// `obs_dim() + PRIV_EXTRA` wide; environments without privileged signals
/// pad with zeros.
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn term_names(&self) -> Vec<String>;
    /// Starts a fresh episode and returns (actor obs, privileged obs).
    fn reset(&mut self, phase: &PhaseSpec) -> (Vec<f64>, Vec<f64>);
    fn step(&mut self, action: &[f64], phase: &PhaseSpec) -> StepOutcome;
}

// --- planar biped ------------------------------------------------------------

/// Command source: generated from the curriculum during training, or an
/// externally scheduled profile during evaluation.
#[allow(clippy::large_enum_variant)] // one per env, generator dwarfs the f64
enum CommandSource {
    Curriculum(CommandGenerator),
    External(f64),
}

pub struct BipedEnv {
    nominal: ModelSpec,
    spec: ModelSpec,
    ranges: RandomizationRanges,
    registry: RewardRegistry,
    state: SimState,
    classifier: GaitClassifier,
    clock: PhaseClock,
    command: CommandSource,
    v_cmd: f64,
    prev_action: [f64; NJ],
    rng: ChaCha8Rng,
    next_push: f64,
    /// Domain randomization + pushes + observation noise on/off.
    randomize: bool,
    obs_noise: f64,
    /// Reset immediately when an episode ends (training). Evaluation keeps
    /// the final state so the trace can record it.
    auto_reset: bool,
    /// Episode time limit, s.
    timeout: f64,
    pub divergence_count: usize,
}

impl BipedEnv {
    /// Training-mode env: randomized per episode, noised observations.
    pub fn train(
        nominal: ModelSpec,
        ranges: RandomizationRanges,
        gait: GaitParams,
        registry: RewardRegistry,
        seed: u64,
    ) -> Self {
        BipedEnv {
            spec: nominal.clone(),
            nominal,
            ranges,
            registry,
            state: SimState::new(GenVec::zeros(), GenVec::zeros()),
            classifier: GaitClassifier::new(gait),
            clock: PhaseClock::new(gait),
            command: CommandSource::External(0.0),
            v_cmd: 0.0,
            prev_action: [0.0; NJ],
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_push: f64::INFINITY,
            randomize: true,
            obs_noise: TRAIN_OBS_NOISE,
            auto_reset: true,
            timeout: EPISODE_TIMEOUT,
            divergence_count: 0,
        }
    }

    /// Evaluation-mode env: nominal dynamics, no noise, externally
    /// commanded velocity.
    pub fn eval(nominal: ModelSpec, gait: GaitParams, registry: RewardRegistry, seed: u64) -> Self {
        let mut env = BipedEnv::train(nominal, RandomizationRanges::default(), gait, registry, seed);
        env.randomize = false;
        env.obs_noise = 0.0;
        env.auto_reset = false;
        env.timeout = f64::INFINITY;
        env
    }

    pub fn registry(&self) -> &RewardRegistry {
        &self.registry
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Sets the commanded velocity directly (evaluation mode).
    pub fn set_command(&mut self, v_cmd: f64) {
        self.command = CommandSource::External(v_cmd);
    }

    pub fn mode(&self) -> GaitMode {
        self.classifier.mode
    }

    fn reset_internal(&mut self, phase: &PhaseSpec) {
        if self.randomize {
            self.spec = randomize_with_ranges(&self.nominal, &self.ranges, &mut self.rng);
            self.next_push = self.ranges.push_interval;
        } else {
            self.spec = self.nominal.clone();
            self.next_push = f64::INFINITY;
        }
        self.state = reset_with_noise(&self.spec, 0.05, &mut self.rng);
        match &mut self.command {
            CommandSource::Curriculum(_) => {
                let seed = self.rng.gen();
                let generator = CommandGenerator::new(phase, seed);
                self.v_cmd = generator.current().v_cmd;
                self.command = CommandSource::Curriculum(generator);
            }
            CommandSource::External(v) => self.v_cmd = *v,
        }
        let mode = initial_mode(self.v_cmd, self.classifier.params());
        self.classifier.reset(mode);
        self.clock.phase = 0.0;
        self.prev_action = [0.0; NJ];
    }

    /// Switches to curriculum-driven commands on the next reset.
    pub fn use_curriculum_commands(&mut self) {
        self.command = CommandSource::Curriculum(CommandGenerator::new(
            &crate::curriculum::default_phases()[0],
            0,
        ));
    }

    fn observations(&mut self) -> (Vec<f64>, Vec<f64>) {
        let cmd = GaitCommand { v_cmd: self.v_cmd };
        let mut obs = build_actor_obs(
            &self.state,
            cmd,
            &self.clock,
            self.classifier.mode,
            &self.prev_action,
            &self.spec,
        );
        let priv_obs = build_critic_obs(
            &self.state,
            cmd,
            &self.clock,
            self.classifier.mode,
            &self.prev_action,
            &self.spec,
        );
        apply_obs_noise(&mut obs, self.obs_noise, &mut self.rng);
        (obs.as_slice().to_vec(), priv_obs.as_slice().to_vec())
    }

    fn terminated(&self) -> bool {
        self.state.base_pos().y < MIN_BASE_HEIGHT
            || self.state.pitch().abs() > MAX_PITCH
            || self.state.t >= self.timeout
    }
}

impl Environment for BipedEnv {
    fn obs_dim(&self) -> usize {
        crate::gait::OBS_DIM
    }

    fn action_dim(&self) -> usize {
        NJ
    }

    fn term_names(&self) -> Vec<String> {
        self.registry.terms().iter().map(|t| t.name.clone()).collect()
    }

    fn reset(&mut self, phase: &PhaseSpec) -> (Vec<f64>, Vec<f64>) {
        self.reset_internal(phase);
        self.observations()
    }

    fn step(&mut self, action: &[f64], phase: &PhaseSpec) -> StepOutcome {
        assert_eq!(action.len(), NJ);
        let mut act = [0.0; NJ];
        act.copy_from_slice(action);
        let targets = action_to_targets(&act, &self.spec.default_pose);

        if self.state.t >= self.next_push {
            let kick = self
                .rng
                .gen_range(-self.ranges.push_magnitude..=self.ranges.push_magnitude);
            self.state = apply_push(&self.state, nalgebra::Vector2::new(kick, 0.0));
            self.next_push += self.ranges.push_interval;
        }

        let v_before = self.state.qd[0];
        for _ in 0..DECIMATION {
            match step(&self.state, &targets, SIM_DT, &self.spec) {
                Ok(next) => self.state = next,
                Err(_) => {
                    // divergence: force-reset, terminal with zero reward
                    self.divergence_count += 1;
                    let n_terms = self.registry.len();
                    let mode = self.classifier.mode.index();
                    if self.auto_reset {
                        self.reset_internal(phase);
                    }
                    let (obs, priv_obs) = self.observations();
                    return StepOutcome {
                        obs,
                        priv_obs,
                        reward: 0.0,
                        terms: vec![0.0; n_terms],
                        done: true,
                        mode,
                        diverged: true,
                    };
                }
            }
        }

        self.v_cmd = match &mut self.command {
            CommandSource::Curriculum(generator) => generator.step(phase, CONTROL_DT).v_cmd,
            CommandSource::External(v) => *v,
        };
        let mode = self.classifier.step(self.v_cmd, &self.state, CONTROL_DT);
        self.clock = advance_phase(&self.clock, mode, CONTROL_DT);

        let momenta = centroidal_momenta(&self.state, &self.spec);
        let ctx = RewardContext {
            state: &self.state,
            momenta,
            clock: &self.clock,
            mode,
            v_cmd: self.v_cmd,
            action: act,
            prev_action: self.prev_action,
            base_accel: (self.state.qd[0] - v_before) / CONTROL_DT,
        };
        let terms = self.registry.evaluate(&ctx);
        let mask = build_mask(&self.registry, mode);
        let reward = route_total(&terms, &mask, &self.registry)
            .expect("registry-built vectors always match");
        self.prev_action = act;

        let done = self.terminated();
        if done && self.auto_reset {
            self.reset_internal(phase);
        }
        let (obs, priv_obs) = self.observations();
        StepOutcome {
            obs,
            priv_obs,
            reward,
            terms,
            done,
            mode: mode.index(),
            diverged: false,
        }
    }
}

// --- double-integrator cart ---------------------------------------------------

pub const TOY_DT: f64 = 0.05;
pub const TOY_EPISODE_STEPS: usize = 100;
const TOY_FORCE_LIMIT: f64 = 2.0;
const TOY_DRAG: f64 = 0.1;

/// 1-DoF velocity-tracking cart: action is a bounded acceleration, reward
/// is negative squared velocity error. Exercises the full optimization
/// stack in seconds.
pub struct ToyEnv {
    v: f64,
    v_cmd: f64,
    steps: usize,
    rng: ChaCha8Rng,
}

impl ToyEnv {
    pub const OBS: usize = 3;

    pub fn new(seed: u64) -> Self {
        ToyEnv {
            v: 0.0,
            v_cmd: 0.0,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn obs(&self) -> (Vec<f64>, Vec<f64>) {
        let obs = vec![self.v_cmd - self.v, self.v, self.v_cmd];
        let mut priv_obs = obs.clone();
        priv_obs.extend(std::iter::repeat_n(0.0, PRIV_EXTRA));
        (obs, priv_obs)
    }

    fn reward(&self) -> f64 {
        let err = self.v - self.v_cmd;
        -err * err
    }

    /// Per-episode return of a hand-coded proportional controller, the
    /// performance ceiling used by the learning check.
    pub fn oracle_return(seed: u64, episodes: usize) -> f64 {
        let mut total = 0.0;
        let mut env = ToyEnv::new(seed);
        let phase = crate::curriculum::default_phases().remove(0);
        for _ in 0..episodes {
            env.reset(&phase);
            let mut ep = 0.0;
            loop {
                let a = (4.0 * (env.v_cmd - env.v)).clamp(-1.0, 1.0);
                let out = env.step(&[a], &phase);
                ep += out.reward;
                if out.done {
                    break;
                }
            }
            total += ep;
        }
        total / episodes as f64
    }
}

impl Environment for ToyEnv {
    fn obs_dim(&self) -> usize {
        Self::OBS
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn term_names(&self) -> Vec<String> {
        vec!["tracking".into()]
    }

    fn reset(&mut self, _phase: &PhaseSpec) -> (Vec<f64>, Vec<f64>) {
        self.v = 0.0;
        self.v_cmd = self.rng.gen_range(-1.0..1.0);
        self.steps = 0;
        self.obs()
    }

    fn step(&mut self, action: &[f64], phase: &PhaseSpec) -> StepOutcome {
        let a = action[0].clamp(-TOY_FORCE_LIMIT, TOY_FORCE_LIMIT);
        self.v += (a - TOY_DRAG * self.v) * TOY_DT;
        self.steps += 1;
        let reward = self.reward();
        let done = self.steps >= TOY_EPISODE_STEPS;
        if done {
            self.reset(phase);
        }
        let (obs, priv_obs) = self.obs();
        StepOutcome {
            obs,
            priv_obs,
            reward,
            terms: vec![reward],
            done,
            mode: 0,
            diverged: false,
        }
    }
}
