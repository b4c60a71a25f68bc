//! Coordinate-descent search over binary computing modes.
//!
//! Each sweep evaluates the reward of swapping every single device's mode
//! (one conditional time-allocation solve per device) and applies the best
//! positive swap. The search stops at a single-flip local maximum.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{objective_unchecked, Mode, ModeSelection, NetworkInstance, SolveReport};
use crate::time_alloc::{conditional_value, solve_time_allocation, BisectionOptions};

/// Gain in objective from swapping the mode of one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapReward {
    pub device: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CdOptions {
    pub bisection: BisectionOptions,
    /// Evaluate the swap rewards of a sweep on the rayon pool.
    pub parallel: bool,
}

/// Objective trajectory of a coordinate-descent run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CdTrace {
    /// `V(m^l)` after every accepted flip, starting with `V(m^0)`.
    pub values: Vec<f64>,
    /// Device flipped at each accepted step.
    pub flips: Vec<usize>,
}

/// Uniformly random initial modes.
pub fn random_modes<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ModeSelection {
    ModeSelection::new(
        (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Mode::Offload
                } else {
                    Mode::Local
                }
            })
            .collect(),
    )
}

/// `V(m)` and the reward `V(m(j)) - V(m)` of every single-device swap.
pub fn swap_rewards(
    inst: &NetworkInstance,
    modes: &ModeSelection,
    opts: &CdOptions,
) -> Result<(f64, Vec<SwapReward>)> {
    let base = conditional_value(inst, modes, &opts.bisection)?;
    let eval = |j: usize| -> Result<SwapReward> {
        let v = conditional_value(inst, &modes.flipped(j), &opts.bisection)?;
        Ok(SwapReward {
            device: j,
            reward: v - base,
        })
    };
    let rewards = if opts.parallel {
        (0..modes.len())
            .into_par_iter()
            .map(eval)
            .collect::<Result<Vec<_>>>()?
    } else {
        (0..modes.len()).map(eval).collect::<Result<Vec<_>>>()?
    };
    Ok((base, rewards))
}

pub fn cd_solve(inst: &NetworkInstance, initial: &ModeSelection, opts: &CdOptions) -> Result<SolveReport> {
    cd_solve_traced(inst, initial, opts).map(|(r, _)| r)
}

/// Runs coordinate descent from `initial`, also returning the ascent trace.
///
/// `iterations` in the report counts sweeps, including the final sweep that
/// finds no improving swap.
pub fn cd_solve_traced(
    inst: &NetworkInstance,
    initial: &ModeSelection,
    opts: &CdOptions,
) -> Result<(SolveReport, CdTrace)> {
    let start = Instant::now();
    if initial.len() != inst.len() {
        return Err(Error::Dimension {
            name: "initial",
            expected: inst.len(),
            got: initial.len(),
        });
    }
    let mut modes = initial.clone();
    let mut trace = CdTrace::default();
    let mut sweeps = 0;
    let best_reward = loop {
        sweeps += 1;
        let (base, rewards) = swap_rewards(inst, &modes, opts)?;
        if trace.values.is_empty() {
            trace.values.push(base);
        }
        // first maximum wins ties
        let best = rewards
            .iter()
            .copied()
            .reduce(|acc, r| if r.reward > acc.reward { r } else { acc })
            .expect("instances have at least one device");
        if best.reward <= 0.0 {
            break best.reward;
        }
        modes = modes.flipped(best.device);
        trace.values.push(base + best.reward);
        trace.flips.push(best.device);
    };

    let (allocation, _) = solve_time_allocation(inst, &modes, &opts.bisection)?;
    let objective = objective_unchecked(inst, &modes, &allocation);
    Ok((
        SolveReport {
            objective,
            allocation,
            modes,
            iterations: sweeps,
            residual: best_reward.max(0.0),
            wall_time: start.elapsed(),
            converged: true,
        },
        trace,
    ))
}
