use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use super::{FormulationConfig, Observation};

/// Evaluation profile in degrees; each value is held for one segment.
pub const PROFILE_DEG: [f64; 8] = [0.0, 5.0, -5.0, 20.0, -20.0, 40.0, -40.0, 0.0];
/// 10 s at 0.1 s per sample.
pub const PROFILE_SEGMENT_STEPS: u64 = 100;

/// Reference pitch of the fixed profile at `step_index`, in radians. Indices
/// past the end hold the last value.
pub fn fixed_profile_target(step_index: u64) -> f64 {
    let segment = (step_index / PROFILE_SEGMENT_STEPS).min(PROFILE_DEG.len() as u64 - 1);
    PROFILE_DEG[segment as usize].to_radians()
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

pub(crate) fn sample_range<R: Rng + ?Sized>(rng: &mut R, range: (f64, f64)) -> f64 {
    uniform(rng, range)
}

/// One Bernoulli trial: with probability `target_redraw_prob` return a fresh
/// uniform target, otherwise keep `current`.
pub fn redraw_target<R: Rng + ?Sized>(current: f64, rng: &mut R, config: &FormulationConfig) -> f64 {
    if rng.gen::<f64>() < config.target_redraw_prob {
        uniform(rng, config.target_range)
    } else {
        current
    }
}

pub fn base_reward(pitch: f64, target: f64) -> f64 {
    -(pitch - target).abs()
}

/// Reward on the truncating step: `reward × min(remaining, clamp)`.
pub fn truncation_reward(reward: f64, remaining_steps: u64, clamp: Option<u64>) -> f64 {
    let factor = clamp.map_or(remaining_steps, |c| remaining_steps.min(c));
    reward * factor as f64
}

/// `coeff ×` population standard deviation of the normalised commands.
pub fn action_penalty(history: &[f64], coeff: f64) -> f64 {
    if history.len() < 2 {
        return 0.0;
    }
    // Shift by the first entry so a constant window gives exactly zero.
    let n = history.len() as f64;
    let origin = history[0];
    let mean = history.iter().map(|x| x - origin).sum::<f64>() / n;
    let var = history
        .iter()
        .map(|x| {
            let d = x - origin - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    coeff * var.sqrt()
}

/// Sliding window of the most recent normalised commands.
#[derive(Debug, Clone, Default)]
pub struct PenaltyWindow {
    entries: VecDeque<f64>,
    capacity: usize,
}

impl PenaltyWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Record a command and return the penalty over the updated window.
    pub fn push(&mut self, command: f64, coeff: f64) -> f64 {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(command);
        action_penalty(self.entries.make_contiguous(), coeff)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn normalize_observation(raw: Observation, config: &FormulationConfig) -> Observation {
    Observation {
        pitch: raw.pitch / FRAC_PI_2,
        omega: raw.omega / config.velocity_norm_scale,
        target: raw.target / FRAC_PI_2,
    }
}

pub fn denormalize_observation(obs: Observation, config: &FormulationConfig) -> Observation {
    Observation {
        pitch: obs.pitch * FRAC_PI_2,
        omega: obs.omega * config.velocity_norm_scale,
        target: obs.target * FRAC_PI_2,
    }
}

/// Map an agent action to the applied voltage, clamping to the actuator range.
/// A non-finite action is treated as zero.
pub fn denormalize_action(action: f64, config: &FormulationConfig, v_max: f64) -> f64 {
    let action = if action.is_finite() { action } else { 0.0 };
    if config.normalize_action {
        action.clamp(-1.0, 1.0) * v_max
    } else {
        action.clamp(-v_max, v_max)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn profile_lookup() {
        assert_eq!(fixed_profile_target(0), 0.0);
        assert_eq!(fixed_profile_target(99), 0.0);
        assert_eq!(fixed_profile_target(100), deg(5.0));
        assert_eq!(fixed_profile_target(350), deg(20.0));
        assert_eq!(fixed_profile_target(650), deg(-40.0));
        assert_eq!(fixed_profile_target(799), 0.0);
        assert_eq!(fixed_profile_target(1200), 0.0);
    }

    #[test]
    fn redraw_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cfg = FormulationConfig::new_setting();
        cfg.target_redraw_prob = 0.0;
        let mut t = 0.123;
        for _ in 0..1000 {
            t = redraw_target(t, &mut rng, &cfg);
        }
        assert_eq!(t, 0.123);

        cfg.target_redraw_prob = 1.0;
        let mut prev = t;
        for _ in 0..1000 {
            let next = redraw_target(prev, &mut rng, &cfg);
            assert_ne!(next, prev);
            assert!(next >= deg(-40.0) && next <= deg(40.0));
            prev = next;
        }
    }

    #[test]
    fn reward_examples() {
        assert_eq!(base_reward(0.3, 0.3), 0.0);
        let r = base_reward(deg(10.0), deg(5.0));
        assert!((r + 0.087_266_462_599_716_47).abs() < 1e-15, "{r}");
        assert_eq!(base_reward(0.2, -0.7), base_reward(-0.7, 0.2));
    }

    #[test]
    fn truncation_examples() {
        assert!((truncation_reward(-0.1, 100, None) + 10.0).abs() < 1e-12);
        assert_eq!(truncation_reward(-0.1, 0, None), 0.0);
        assert!((truncation_reward(-0.1, 1_000_000, Some(800)) + 80.0).abs() < 1e-12);
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(action_penalty(&[0.4; 10], 0.25), 0.0);
        let alternating: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((action_penalty(&alternating, 0.25) - 0.25).abs() < 1e-15);
        assert_eq!(action_penalty(&[0.7], 0.25), 0.0);
        assert_eq!(action_penalty(&[], 0.25), 0.0);
    }

    #[test]
    fn penalty_window_slides() {
        let mut w = PenaltyWindow::new(10);
        assert_eq!(w.push(1.0, 0.25), 0.0);
        for i in 1..24 {
            w.push(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.25);
        }
        assert_eq!(w.len(), 10);
        // Ten alternating entries remain.
        assert!((w.push(1.0, 0.25) - 0.25).abs() < 1e-15);
        w.clear();
        assert!(w.is_empty());
    }

    #[test]
    fn observation_normalisation() {
        let cfg = FormulationConfig::new_setting();
        let raw = Observation {
            pitch: FRAC_PI_2 / 2.0,
            omega: 0.2441,
            target: -FRAC_PI_2,
        };
        let n = normalize_observation(raw, &cfg);
        assert!((n.pitch - 0.5).abs() < 1e-15);
        assert!((n.omega - 1.0).abs() < 1e-15);
        assert!((n.target + 1.0).abs() < 1e-15);
    }

    #[test]
    fn action_denormalisation() {
        let norm = FormulationConfig::new_setting();
        let raw = FormulationConfig::baseline();
        assert_eq!(denormalize_action(0.5, &norm, 24.0), 12.0);
        assert_eq!(denormalize_action(1.7, &norm, 24.0), 24.0);
        assert_eq!(denormalize_action(-24.0, &raw, 24.0), -24.0);
        assert_eq!(denormalize_action(31.0, &raw, 24.0), 24.0);
        assert_eq!(denormalize_action(f64::NAN, &raw, 24.0), 0.0);
    }
}
