//! Reproducible network instances: free-space path loss, Rayleigh fading,
//! truncated-Gaussian or evenly spaced placements, and weight assignment.
//!
//! Every random draw comes from its own ChaCha stream keyed by
//! `(seed, placement, realization, device, purpose)`, so instances do not
//! depend on generation order and can be built in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NetworkInstance, SystemParams};

const SPEED_OF_LIGHT: f64 = 3e8;
/// Half-width of the placement truncation window, meters.
pub const TRUNCATION: f64 = 1.5;

/// How device distances are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Layout {
    /// `d_i = clamp(X, mean - 1.5, mean + 1.5)`, `X ~ N(mean, spread^2)`.
    TruncatedGaussian,
    /// `d_i = start + step * i` for zero-based `i`.
    Spaced { start: f64, step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// `h_i` equals the mean path gain.
    Static,
    /// `h_i = mean gain * alpha`, `alpha ~ Exp(1)`.
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightRule {
    /// Same weight for every device.
    Equal { value: f64 },
    /// 1 for odd device numbers (1-based), 2 for even ones.
    Alternating,
    /// 1 or 2 with equal probability, fixed per placement.
    RandomOneTwo,
}

/// Geometry and randomness of a family of instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementSpec {
    pub n: usize,
    /// Mean AP-to-device distance, meters.
    pub mean_dist: f64,
    /// Standard deviation of the placement spread, meters.
    pub spread: f64,
    pub pathloss_exp: f64,
    pub antenna_gain: f64,
    /// Carrier frequency, Hz.
    pub carrier: f64,
    /// Computation energy-efficiency coefficient shared by every device.
    pub compute_eff: f64,
    pub layout: Layout,
    pub fading: Fading,
    pub seed: u64,
}

impl Default for PlacementSpec {
    fn default() -> Self {
        Self {
            n: 10,
            mean_dist: 4.0,
            spread: 0.2,
            pathloss_exp: 2.8,
            antenna_gain: 4.11,
            carrier: 915e6,
            compute_eff: 1e-26,
            layout: Layout::TruncatedGaussian,
            fading: Fading::Rayleigh,
            seed: 0,
        }
    }
}

impl PlacementSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value: f64, reason| Err(Error::InvalidParameter { name, value, reason });
        if self.n == 0 {
            return bad("n", 0.0, "at least one device is required");
        }
        if !(self.pathloss_exp >= 2.0 && self.pathloss_exp.is_finite()) {
            return bad("pathloss_exp", self.pathloss_exp, "must be >= 2");
        }
        for (name, v) in [
            ("mean_dist", self.mean_dist),
            ("antenna_gain", self.antenna_gain),
            ("carrier", self.carrier),
            ("compute_eff", self.compute_eff),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, v, "must be finite and > 0");
            }
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return bad("spread", self.spread, "must be finite and >= 0");
        }
        match self.layout {
            Layout::TruncatedGaussian if self.mean_dist <= TRUNCATION => bad(
                "mean_dist",
                self.mean_dist,
                "must exceed the 1.5 m truncation window",
            ),
            Layout::Spaced { start, step } if !(start > 0.0 && step >= 0.0) => {
                bad("start", start, "spaced layout needs start > 0 and step >= 0")
            }
            _ => Ok(()),
        }
    }
}

/// Identifies one instance within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct InstanceKey {
    pub placement: u64,
    pub realization: u64,
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Distance = 1,
    Fading = 2,
    Weight = 3,
    ModeInit = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one `(seed, placement, realization, device, purpose)` tuple.
fn stream(seed: u64, placement: u64, realization: u64, device: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut key = splitmix(seed);
    for part in [placement, realization, device as u64, purpose as u64] {
        key = splitmix(key ^ part);
    }
    ChaCha8Rng::seed_from_u64(key)
}

/// Generator for the random initial modes of an iterative solver on `key`.
pub fn mode_init_rng(spec: &PlacementSpec, key: InstanceKey) -> ChaCha8Rng {
    stream(spec.seed, key.placement, key.realization, 0, Purpose::ModeInit)
}

/// Average channel gain at distance `d`: `A_d (c / (4 pi f_c d))^d_e`.
pub fn mean_gain(spec: &PlacementSpec, d: f64) -> f64 {
    spec.antenna_gain
        * (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * spec.carrier * d)).powf(spec.pathloss_exp)
}

/// Device distances for one placement.
pub fn sample_distances(spec: &PlacementSpec, placement: u64) -> Vec<f64> {
    (0..spec.n)
        .map(|i| match spec.layout {
            Layout::Spaced { start, step } => start + step * i as f64,
            Layout::TruncatedGaussian => {
                let z: f64 =
                    StandardNormal.sample(&mut stream(spec.seed, placement, 0, i, Purpose::Distance));
                let x = spec.mean_dist + spec.spread * z;
                x.clamp(spec.mean_dist - TRUNCATION, spec.mean_dist + TRUNCATION)
            }
        })
        .collect()
}

/// Fading coefficients `alpha_i` for one realization.
pub fn sample_fading(spec: &PlacementSpec, key: InstanceKey) -> Vec<f64> {
    (0..spec.n)
        .map(|i| match spec.fading {
            Fading::Static => 1.0,
            Fading::Rayleigh => {
                let mut rng = stream(spec.seed, key.placement, key.realization, i, Purpose::Fading);
                // Exp1 can return exactly 0 with negligible probability
                loop {
                    let a: f64 = Exp1.sample(&mut rng);
                    if a > 0.0 {
                        break a;
                    }
                }
            }
        })
        .collect()
}

pub fn sample_weights(spec: &PlacementSpec, rule: WeightRule, placement: u64) -> Vec<f64> {
    (0..spec.n)
        .map(|i| match rule {
            WeightRule::Equal { value } => value,
            WeightRule::Alternating => {
                if i % 2 == 0 {
                    1.0
                } else {
                    2.0
                }
            }
            WeightRule::RandomOneTwo => {
                let mut rng = stream(spec.seed, placement, 0, i, Purpose::Weight);
                if rng.random_bool(0.5) {
                    2.0
                } else {
                    1.0
                }
            }
        })
        .collect()
}

/// Builds the instance for `key`.
///
/// Fails only if a fading draw breaks the energy-constrained assumption for
/// `params.f_max`, which the default parameters make vanishingly unlikely.
pub fn sample_instance(
    spec: &PlacementSpec,
    params: &SystemParams,
    weights: WeightRule,
    key: InstanceKey,
) -> Result<NetworkInstance> {
    spec.validate()?;
    let dist = sample_distances(spec, key.placement);
    let alpha = sample_fading(spec, key);
    let h: Vec<f64> = dist
        .iter()
        .zip(&alpha)
        .map(|(&d, &a)| mean_gain(spec, d) * a)
        .collect();
    let w = sample_weights(spec, weights, key.placement);
    NetworkInstance::new(*params, h, w, vec![spec.compute_eff; spec.n])
}
