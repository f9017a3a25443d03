use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adapters::{
    base_reward, denormalize_action, fixed_profile_target, normalize_observation, redraw_target,
    sample_range, truncation_reward, PenaltyWindow,
};
use super::{FormulationConfig, InitialTiltMode, Observation, StepInfo, StepResult, TargetMode};
use crate::error::{Error, Result};
use crate::plant::{self, PlantParams, PlantState};

/// Everything one plant sample produced, before any reward shaping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub pitch: f64,
    pub omega: f64,
    pub target: f64,
    pub voltage: f64,
    pub base_reward: f64,
    pub truncated: bool,
    pub done: bool,
    pub remaining_steps: u64,
}

impl Transition {
    fn raw_observation(&self) -> Observation {
        Observation {
            pitch: self.pitch,
            omega: self.omega,
            target: self.target,
        }
    }

    fn info(&self) -> StepInfo {
        StepInfo {
            pitch_deg: self.pitch.to_degrees(),
            target_deg: self.target.to_degrees(),
            voltage: self.voltage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    NeedsReset,
    Running,
    Done,
}

/// The raw tracking task: applied volts in, raw radians out.
#[derive(Debug, Clone)]
pub struct TrackingTask {
    plant: PlantParams,
    config: FormulationConfig,
    episode_steps: u64,
    state: PlantState,
    prev_pitch: f64,
    target: f64,
    rng: ChaCha8Rng,
    phase: Phase,
}

impl TrackingTask {
    pub fn new(plant: PlantParams, config: FormulationConfig, seed: u64) -> Result<Self> {
        plant.validate()?;
        config.validate(&plant)?;
        let episode_steps = config.episode_steps(plant.dt)?;
        Ok(Self {
            plant,
            config,
            episode_steps,
            state: PlantState::default(),
            prev_pitch: 0.0,
            target: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            phase: Phase::NeedsReset,
        })
    }

    pub fn config(&self) -> &FormulationConfig {
        &self.config
    }

    pub fn plant(&self) -> &PlantParams {
        &self.plant
    }

    pub fn plant_state(&self) -> &PlantState {
        &self.state
    }

    pub fn episode_steps(&self) -> u64 {
        self.episode_steps
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Reseed the task's random stream and start a new episode.
    pub fn reset_seeded(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.reset()
    }

    /// Start a new episode, continuing the task's random stream.
    pub fn reset(&mut self) -> Observation {
        let theta0 = match self.config.initial_tilt_mode {
            InitialTiltMode::FixedZero => 0.0,
            InitialTiltMode::UniformRandom => sample_range(&mut self.rng, self.config.initial_tilt_range),
        };
        self.target = match self.config.target_mode {
            TargetMode::FixedProfile => fixed_profile_target(0),
            TargetMode::RandomRedraw => sample_range(&mut self.rng, self.config.target_range),
        };
        self.state = PlantState::at_rest(theta0);
        self.prev_pitch = theta0;
        self.phase = Phase::Running;
        Observation {
            pitch: theta0,
            omega: 0.0,
            target: self.target,
        }
    }

    /// Advance one sample with `voltage` already inside the actuator range.
    pub fn advance(&mut self, voltage: f64) -> Result<Transition> {
        match self.phase {
            Phase::NeedsReset => return Err(Error::Contract("step before reset".into())),
            Phase::Done => return Err(Error::Contract("step after episode end".into())),
            Phase::Running => {}
        }
        self.state = plant::step(&self.state, voltage, &self.plant)?;
        let steps = self.state.steps;
        self.target = match self.config.target_mode {
            TargetMode::FixedProfile => fixed_profile_target(steps),
            TargetMode::RandomRedraw => redraw_target(self.target, &mut self.rng, &self.config),
        };
        let pitch = self.state.theta;
        let omega = pitch - self.prev_pitch;
        self.prev_pitch = pitch;
        let truncated = pitch.abs() >= self.config.truncation_bound;
        let done = truncated || steps >= self.episode_steps;
        if done {
            self.phase = Phase::Done;
        }
        Ok(Transition {
            pitch,
            omega,
            target: self.target,
            voltage,
            base_reward: base_reward(pitch, self.target),
            truncated,
            done,
            remaining_steps: self.episode_steps.saturating_sub(steps),
        })
    }

    /// Baseline MDP step: clamp volts, reward `−|θ − r|`, truncation scaling.
    pub fn step(&mut self, voltage: f64) -> Result<StepResult> {
        let voltage = denormalize_action(voltage, &FormulationConfig::baseline(), self.plant.v_max);
        let t = self.advance(voltage)?;
        let reward = if t.truncated {
            truncation_reward(t.base_reward, t.remaining_steps, self.config.truncation_penalty_clamp)
        } else {
            t.base_reward
        };
        Ok(StepResult {
            observation: t.raw_observation(),
            reward,
            truncated: t.truncated,
            done: t.done,
            info: t.info(),
        })
    }
}

/// The tracking task wrapped in the adapters its formulation selects.
#[derive(Debug, Clone)]
pub struct PitchEnv {
    task: TrackingTask,
    window: PenaltyWindow,
}

impl PitchEnv {
    pub fn new(plant: PlantParams, config: FormulationConfig, seed: u64) -> Result<Self> {
        let window = PenaltyWindow::new(config.penalty_window_len(plant.dt));
        Ok(Self {
            task: TrackingTask::new(plant, config, seed)?,
            window,
        })
    }

    pub fn config(&self) -> &FormulationConfig {
        self.task.config()
    }

    pub fn plant(&self) -> &PlantParams {
        self.task.plant()
    }

    pub fn task(&self) -> &TrackingTask {
        &self.task
    }

    pub fn episode_steps(&self) -> u64 {
        self.task.episode_steps()
    }

    pub fn reset(&mut self) -> Observation {
        self.window.clear();
        let raw = self.task.reset();
        self.present(raw)
    }

    pub fn reset_seeded(&mut self, seed: u64) -> Observation {
        self.window.clear();
        let raw = self.task.reset_seeded(seed);
        self.present(raw)
    }

    fn present(&self, raw: Observation) -> Observation {
        if self.config().normalize_obs {
            normalize_observation(raw, self.config())
        } else {
            raw
        }
    }

    pub fn step(&mut self, action: f64) -> Result<StepResult> {
        let v_max = self.plant().v_max;
        let voltage = denormalize_action(action, self.config(), v_max);
        let t = self.task.advance(voltage)?;
        let cfg = self.task.config();
        let penalty = self.window.push(voltage / v_max, cfg.action_penalty_coeff);
        let mut reward = t.base_reward - penalty;
        if t.truncated {
            reward = truncation_reward(reward, t.remaining_steps, cfg.truncation_penalty_clamp);
        }
        Ok(StepResult {
            observation: self.present(t.raw_observation()),
            reward,
            truncated: t.truncated,
            done: t.done,
            info: t.info(),
        })
    }
}
