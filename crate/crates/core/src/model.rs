//! Domain types shared by every solver: system constants, network instances,
//! binary mode selections, time allocations and the computation-rate
//! objective.
//!
//! All time quantities are fractions of the frame, so `a` and every `tau[i]`
//! live in `[0, 1]`. Uplink gains `g` default to the downlink gains `h`; the
//! offloading term always uses the product `h[i] * g[i]`.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the shared time budget `a + sum(tau) <= 1`.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Physical and protocol constants of the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// AP transmit power for energy broadcast, watts.
    pub ap_power: f64,
    /// Energy harvesting efficiency, in (0, 1).
    pub harvest_eff: f64,
    /// Uplink bandwidth, Hz.
    pub bandwidth: f64,
    /// Offloading overhead factor, > 1.
    pub offload_overhead: f64,
    /// Receiver noise power, watts.
    pub noise: f64,
    /// CPU cycles needed per bit of raw data.
    pub cycles_per_bit: f64,
    /// Frame length, seconds.
    pub frame: f64,
    /// Maximum CPU frequency of a device, cycles/s.
    pub f_max: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            ap_power: 3.0,
            harvest_eff: 0.51,
            bandwidth: 2e6,
            offload_overhead: 1.1,
            noise: 3e-10,
            cycles_per_bit: 100.0,
            frame: 1.0,
            f_max: 1e8,
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

impl SystemParams {
    /// Checks every field against its allowed range.
    pub fn validate(&self) -> Result<()> {
        positive("ap_power", self.ap_power)?;
        if !(self.harvest_eff > 0.0 && self.harvest_eff < 1.0) {
            return Err(Error::InvalidParameter {
                name: "harvest_eff",
                value: self.harvest_eff,
                reason: "must lie in (0, 1)",
            });
        }
        positive("bandwidth", self.bandwidth)?;
        if !(self.offload_overhead.is_finite() && self.offload_overhead > 1.0) {
            return Err(Error::InvalidParameter {
                name: "offload_overhead",
                value: self.offload_overhead,
                reason: "must be finite and > 1",
            });
        }
        positive("noise", self.noise)?;
        positive("cycles_per_bit", self.cycles_per_bit)?;
        positive("frame", self.frame)?;
        positive("f_max", self.f_max)?;
        for (name, v) in [
            ("eta1", self.eta1()),
            ("eta2", self.eta2()),
            ("epsilon", self.epsilon()),
        ] {
            positive(name, v)?;
        }
        Ok(())
    }

    /// `(mu P)^(1/3) / phi`.
    pub fn eta1(&self) -> f64 {
        (self.harvest_eff * self.ap_power).cbrt() / self.cycles_per_bit
    }

    /// `mu P / N0`.
    pub fn eta2(&self) -> f64 {
        self.harvest_eff * self.ap_power / self.noise
    }

    /// `B / (v_u ln 2)`.
    pub fn epsilon(&self) -> f64 {
        self.bandwidth / (self.offload_overhead * std::f64::consts::LN_2)
    }
}

/// One solvable problem instance: per-device channel gains, weights and
/// computation energy-efficiency coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    params: SystemParams,
    h: Vec<f64>,
    g: Vec<f64>,
    w: Vec<f64>,
    k: Vec<f64>,
}

impl NetworkInstance {
    /// Builds an instance with reciprocal channels (`g = h`).
    pub fn new(params: SystemParams, h: Vec<f64>, w: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        let g = h.clone();
        Self::with_uplink(params, h, g, w, k)
    }

    pub fn with_uplink(
        params: SystemParams,
        h: Vec<f64>,
        g: Vec<f64>,
        w: Vec<f64>,
        k: Vec<f64>,
    ) -> Result<Self> {
        params.validate()?;
        let n = h.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "at least one device is required",
            });
        }
        for (name, v) in [("g", &g), ("w", &w), ("k", &k)] {
            if v.len() != n {
                return Err(Error::Dimension {
                    name,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        for (name, v) in [("h", &h), ("g", &g), ("w", &w), ("k", &k)] {
            for &x in v.iter() {
                positive(name, x)?;
            }
        }
        for i in 0..n {
            let harvest = params.harvest_eff * params.ap_power * h[i] * params.frame;
            let capacity = k[i] * params.f_max.powi(3) * params.frame;
            if harvest >= capacity {
                return Err(Error::NotEnergyConstrained {
                    device: i,
                    harvest,
                    capacity,
                });
            }
        }
        Ok(Self { params, h, g, w, k })
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Local-computing rate of device `i` at `a = 1`, unweighted:
    /// `eta1 (h_i / k_i)^(1/3)`.
    pub fn local_coeff(&self, i: usize) -> f64 {
        self.params.eta1() * (self.h[i] / self.k[i]).cbrt()
    }

    /// `eta2 h_i g_i`, the received SNR scale of an offloading device.
    pub fn offload_gain(&self, i: usize) -> f64 {
        self.params.eta2() * self.h[i] * self.g[i]
    }

    /// `sum_i w_i eta1 (h_i/k_i)^(1/3)` over the local devices of `modes`.
    pub fn local_weight_sum(&self, modes: &ModeSelection) -> f64 {
        modes
            .local_devices()
            .map(|i| self.w[i] * self.local_coeff(i))
            .sum()
    }
}

/// Computing mode of a single device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Mode 0: compute locally with harvested energy.
    Local,
    /// Mode 1: offload the whole task to the edge server.
    Offload,
}

impl Mode {
    pub fn flipped(self) -> Self {
        match self {
            Mode::Local => Mode::Offload,
            Mode::Offload => Mode::Local,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Mode::Local => 0,
            Mode::Offload => 1,
        }
    }
}

/// Binary mode vector partitioning the devices into local and offloading sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeSelection(Vec<Mode>);

impl ModeSelection {
    pub fn new(modes: Vec<Mode>) -> Self {
        Self(modes)
    }

    pub fn all_local(n: usize) -> Self {
        Self(vec![Mode::Local; n])
    }

    pub fn all_offload(n: usize) -> Self {
        Self(vec![Mode::Offload; n])
    }

    /// Bit `i` of `bits` is the mode of device `i` (1 = offload).
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self(
            (0..n)
                .map(|i| {
                    if bits >> i & 1 == 1 {
                        Mode::Offload
                    } else {
                        Mode::Local
                    }
                })
                .collect(),
        )
    }

    pub fn from_bools(offload: &[bool]) -> Self {
        Self(
            offload
                .iter()
                .map(|&b| if b { Mode::Offload } else { Mode::Local })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Mode {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[Mode] {
        &self.0
    }

    pub fn is_offload(&self, i: usize) -> bool {
        self.0[i] == Mode::Offload
    }

    /// Copy with the mode of device `j` swapped.
    pub fn flipped(&self, j: usize) -> Self {
        let mut m = self.clone();
        m.0[j] = m.0[j].flipped();
        m
    }

    pub fn local_devices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == Mode::Local)
            .map(|(i, _)| i)
    }

    pub fn offload_devices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == Mode::Offload)
            .map(|(i, _)| i)
    }

    pub fn offload_count(&self) -> usize {
        self.offload_devices().count()
    }
}

impl fmt::Display for ModeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.0 {
            write!(f, "{}", m.bit())?;
        }
        Ok(())
    }
}

/// Energy-transfer fraction `a` plus per-device offloading fractions `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub a: f64,
    pub tau: Vec<f64>,
}

impl Allocation {
    pub fn new(a: f64, tau: Vec<f64>) -> Self {
        Self { a, tau }
    }

    /// Whole frame spent on energy transfer.
    pub fn all_wpt(n: usize) -> Self {
        Self {
            a: 1.0,
            tau: vec![0.0; n],
        }
    }

    /// `a + sum(tau)`.
    pub fn time_used(&self) -> f64 {
        self.a + self.tau.iter().sum::<f64>()
    }

    /// Checks the allocation against the time budget for `modes`, naming the
    /// first violated constraint.
    pub fn check(&self, modes: &ModeSelection) -> Result<()> {
        let infeasible = |constraint: String| Err(Error::Infeasible { constraint });
        if self.tau.len() != modes.len() {
            return Err(Error::Dimension {
                name: "tau",
                expected: modes.len(),
                got: self.tau.len(),
            });
        }
        if !(self.a.is_finite() && (0.0..=1.0 + BUDGET_TOLERANCE).contains(&self.a)) {
            return infeasible(format!("0 <= a <= 1 violated (a = {})", self.a));
        }
        for (i, &t) in self.tau.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0) {
                return infeasible(format!("tau[{i}] >= 0 violated (tau = {t})"));
            }
            if !modes.is_offload(i) && t != 0.0 {
                return infeasible(format!("tau[{i}] = {t} but device {i} computes locally"));
            }
        }
        let used = self.time_used();
        if used > 1.0 + BUDGET_TOLERANCE {
            return infeasible(format!("a + sum(tau) <= 1 violated (sum = {used})"));
        }
        Ok(())
    }
}

/// Uniform result of every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Weighted sum computation rate, bits/s.
    pub objective: f64,
    pub allocation: Allocation,
    pub modes: ModeSelection,
    /// Solver-specific iteration count (CD sweeps, ADMM iterations, ...).
    pub iterations: usize,
    /// Final convergence residual, solver-specific.
    pub residual: f64,
    pub wall_time: Duration,
    /// False when an iteration cap was hit and the best point so far returned.
    pub converged: bool,
}

/// Maximum local computation rate of device `i` when the energy-transfer
/// phase occupies fraction `a` of the frame.
///
/// The device computes over the whole frame at `f = (E/(kT))^(1/3)`, which
/// gives `eta1 (h_i/k_i)^(1/3) a^(1/3)`.
pub fn local_rate(inst: &NetworkInstance, i: usize, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    inst.local_coeff(i) * a.cbrt()
}

/// Maximum offloading rate of device `i` with energy-transfer fraction `a`
/// and offload fraction `tau_i`: `eps tau ln(1 + eta2 h g a / tau)`.
///
/// Defined as 0 at `tau_i = 0` by continuity.
pub fn offload_rate(inst: &NetworkInstance, i: usize, a: f64, tau_i: f64) -> f64 {
    offload_term(inst.params().epsilon(), inst.offload_gain(i), a, tau_i)
}

/// `eps * tau * ln(1 + gain * a / tau)` with the `tau = 0` limit handled.
pub(crate) fn offload_term(epsilon: f64, gain: f64, a: f64, tau: f64) -> f64 {
    if tau <= 0.0 || a <= 0.0 {
        return 0.0;
    }
    epsilon * tau * (gain * a / tau).ln_1p()
}

/// Weighted sum computation rate of an allocation under `modes`.
pub fn objective(inst: &NetworkInstance, modes: &ModeSelection, alloc: &Allocation) -> Result<f64> {
    if modes.len() != inst.len() {
        return Err(Error::Dimension {
            name: "modes",
            expected: inst.len(),
            got: modes.len(),
        });
    }
    alloc.check(modes)?;
    Ok(objective_unchecked(inst, modes, alloc))
}

pub(crate) fn objective_unchecked(inst: &NetworkInstance, modes: &ModeSelection, alloc: &Allocation) -> f64 {
    let w = inst.w();
    (0..inst.len())
        .map(|i| match modes.get(i) {
            Mode::Local => w[i] * local_rate(inst, i, alloc.a),
            Mode::Offload => w[i] * offload_rate(inst, i, alloc.a, alloc.tau[i]),
        })
        .sum()
}
