//! Scenario execution: instance generation, per-scheme solves, invariant
//! checks and aggregation into one row per `(sweep value, scheme)`.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CdInit, ScenarioConfig, Scheme};
use crate::benchmarks::{enumerate_optimal, local_only, lr_bound, lr_round, offloading_only, LrOptions};
use crate::channel_gen::{mode_init_rng, sample_instance, InstanceKey};
use crate::error::Result;
use crate::mode_admm::{admm_solve, AdmmConfig};
use crate::mode_cd::{cd_solve, random_modes, CdOptions};
use crate::model::{ModeSelection, NetworkInstance, SolveReport};
use crate::time_alloc::BisectionOptions;

/// Slack on orderings between schemes that share the same time-allocation solver.
const EXACT_SLACK: f64 = 1e-12;
/// Slack on orderings against the relaxation bound, which is solved to a
/// first-order tolerance only.
const BOUND_SLACK: f64 = 1e-6;

/// Aggregate of one scheme at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub scheme: Scheme,
    /// Mean weighted sum computation rate, bits/s.
    pub mean_rate: f64,
    /// Smallest per-instance `V_reference / V_scheme`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub mean_iters: f64,
    pub mean_time_s: f64,
}

/// Outcome of one scheme on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub objective: f64,
    pub iterations: usize,
    pub time_s: f64,
    pub converged: bool,
    /// Mode vector, for the schemes that produce one.
    pub modes: Option<ModeSelection>,
}

/// An ordering between two schemes that was expected to hold and did not.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub sweep: f64,
    pub key: InstanceKey,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub sweep: f64,
    pub key: InstanceKey,
    /// `None` when instance generation itself failed.
    pub scheme: Option<Scheme>,
    pub error: String,
}

/// Per-sweep-point diagnostics that do not fit the table.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDiagnostics {
    pub sweep: f64,
    /// Instances solved by every scheme.
    pub instances: usize,
    pub failures: usize,
    /// Scheme whose modes were checked for the threshold structure.
    pub structure_source: Option<Scheme>,
    /// Whether, within every group of devices sharing `(w, k)`, the
    /// offloading devices are exactly the strongest channels.
    pub threshold_structure: Option<bool>,
    /// Mean number of offloading devices under `structure_source`.
    pub mean_offloaders: Option<f64>,
    /// Instances where CD fell below LR-Round, out of `instances`.
    pub cd_below_lr_round: usize,
    /// ADMM runs that hit the iteration cap.
    pub admm_unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    /// Sorted by sweep value, then scheme name.
    pub rows: Vec<ResultRow>,
    pub points: Vec<PointDiagnostics>,
    pub violations: Vec<Violation>,
    pub failures: Vec<Failure>,
    pub reference: Option<Scheme>,
    /// Failed instances tolerated by the configuration.
    pub max_failures: usize,
}

impl ResultTable {
    pub fn row(&self, sweep: f64, scheme: Scheme) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.sweep == sweep && r.scheme == scheme)
    }

    pub fn failed_instances(&self) -> usize {
        self.points.iter().map(|p| p.failures).sum()
    }

    /// True when no ordering invariant was violated and failures stayed
    /// within the configured threshold.
    pub fn invariants_held(&self) -> bool {
        self.violations.is_empty() && self.failed_instances() <= self.max_failures
    }
}

/// Everything solved on one instance.
#[derive(Debug, Clone)]
pub struct InstanceRecord {
    pub key: InstanceKey,
    pub outcomes: BTreeMap<Scheme, SchemeOutcome>,
    pub failures: Vec<Failure>,
    pub structure: Option<(Scheme, bool, usize)>,
}

fn outcome(report: SolveReport, time_s: f64) -> SchemeOutcome {
    SchemeOutcome {
        objective: report.objective,
        iterations: report.iterations,
        time_s,
        converged: report.converged,
        modes: Some(report.modes),
    }
}

/// Runs one scheme on one instance.
pub fn solve_scheme(
    cfg: &ScenarioConfig,
    scheme: Scheme,
    inst: &NetworkInstance,
    key: InstanceKey,
    sweep: f64,
) -> Result<SchemeOutcome> {
    let bisection = BisectionOptions::default();
    let start = Instant::now();
    let elapsed = |s: Instant| {
        if cfg.record_time {
            s.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };
    let result = match scheme {
        Scheme::Optimal => enumerate_optimal(inst, &bisection)?,
        Scheme::Cd => {
            let initial = match cfg.cd_init {
                CdInit::Random => random_modes(inst.len(), &mut mode_init_rng(&cfg.spec_at(sweep), key)),
                CdInit::AllLocal => ModeSelection::all_local(inst.len()),
                CdInit::AllOffload => ModeSelection::all_offload(inst.len()),
            };
            cd_solve(inst, &initial, &CdOptions::default())?
        }
        Scheme::Admm => admm_solve(inst, &AdmmConfig::default())?,
        Scheme::LrBound => {
            let lr = lr_bound(inst, &LrOptions::default())?;
            return Ok(SchemeOutcome {
                objective: lr.upper_bound,
                iterations: lr.iterations,
                time_s: elapsed(start),
                converged: true,
                modes: None,
            });
        }
        Scheme::LrRound => lr_round(inst, &LrOptions::default(), &bisection)?.0,
        Scheme::OffloadingOnly => offloading_only(inst, &bisection)?,
        Scheme::LocalOnly => local_only(inst, &bisection)?,
    };
    Ok(outcome(result, elapsed(start)))
}

/// Within each group of devices with equal `(w, k)`, offloaders must be the
/// strongest channels: `min h g` over offloaders `>=` `max h g` over locals.
pub fn has_threshold_structure(inst: &NetworkInstance, modes: &ModeSelection) -> bool {
    let strength = |i: usize| inst.h()[i] * inst.g()[i];
    let group = |i: usize| (inst.w()[i].to_bits(), inst.k()[i].to_bits());
    let mut bounds: BTreeMap<(u64, u64), (f64, f64)> = BTreeMap::new();
    for i in 0..inst.len() {
        let entry = bounds
            .entry(group(i))
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        if modes.is_offload(i) {
            entry.0 = entry.0.min(strength(i));
        } else {
            entry.1 = entry.1.max(strength(i));
        }
    }
    bounds.values().all(|&(min_off, max_local)| min_off >= max_local)
}

fn solve_instance(cfg: &ScenarioConfig, sweep: f64, key: InstanceKey) -> InstanceRecord {
    let mut record = InstanceRecord {
        key,
        outcomes: BTreeMap::new(),
        failures: Vec::new(),
        structure: None,
    };
    let spec = cfg.spec_at(sweep);
    let inst = match sample_instance(&spec, &cfg.system, cfg.weights, key) {
        Ok(inst) => inst,
        Err(e) => {
            record.failures.push(Failure {
                sweep,
                key,
                scheme: None,
                error: e.to_string(),
            });
            return record;
        }
    };
    for &scheme in &cfg.schemes {
        match solve_scheme(cfg, scheme, &inst, key, sweep) {
            Ok(o) => {
                record.outcomes.insert(scheme, o);
            }
            Err(e) => record.failures.push(Failure {
                sweep,
                key,
                scheme: Some(scheme),
                error: e.to_string(),
            }),
        }
    }
    let source = [Scheme::Optimal, Scheme::Cd]
        .into_iter()
        .find(|s| record.outcomes.get(s).is_some_and(|o| o.modes.is_some()));
    if let Some(s) = source {
        let modes = record.outcomes[&s].modes.as_ref().expect("checked above");
        record.structure = Some((s, has_threshold_structure(&inst, modes), modes.offload_count()));
    }
    record
}

/// Orderings every instance must satisfy, as `(lhs, rhs, slack)`.
const ORDERINGS: [(Scheme, Scheme, f64); 10] = [
    (Scheme::LocalOnly, Scheme::Optimal, EXACT_SLACK),
    (Scheme::OffloadingOnly, Scheme::Optimal, EXACT_SLACK),
    (Scheme::Cd, Scheme::Optimal, EXACT_SLACK),
    (Scheme::Admm, Scheme::Optimal, EXACT_SLACK),
    (Scheme::LrRound, Scheme::Optimal, EXACT_SLACK),
    (Scheme::Optimal, Scheme::LrBound, BOUND_SLACK),
    (Scheme::LrRound, Scheme::LrBound, BOUND_SLACK),
    (Scheme::Cd, Scheme::LrBound, BOUND_SLACK),
    (Scheme::Admm, Scheme::LrBound, BOUND_SLACK),
    (Scheme::LocalOnly, Scheme::LrBound, BOUND_SLACK),
];

fn check_orderings(sweep: f64, record: &InstanceRecord, out: &mut Vec<Violation>) {
    for (lhs, rhs, slack) in ORDERINGS {
        if let (Some(l), Some(r)) = (record.outcomes.get(&lhs), record.outcomes.get(&rhs)) {
            if l.objective > r.objective * (1.0 + slack) {
                out.push(Violation {
                    sweep,
                    key: record.key,
                    relation: format!("{lhs} <= {rhs}"),
                    lhs: l.objective,
                    rhs: r.objective,
                });
            }
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn aggregate(cfg: &ScenarioConfig, sweep: f64, records: &[InstanceRecord], table: &mut ResultTable) {
    let reference = cfg.reference_scheme();
    let complete: Vec<&InstanceRecord> = records.iter().filter(|r| r.failures.is_empty()).collect();
    for r in records {
        table.failures.extend(r.failures.iter().cloned());
    }
    for r in &complete {
        check_orderings(sweep, r, &mut table.violations);
    }

    let mut schemes = cfg.schemes.clone();
    schemes.sort_by_key(|s| s.name());
    for scheme in schemes {
        let outcomes: Vec<(&SchemeOutcome, &SchemeOutcome)> = complete
            .iter()
            .map(|r| (&r.outcomes[&scheme], &r.outcomes[&reference]))
            .collect();
        let ratios: Vec<f64> = outcomes
            .iter()
            .map(|(o, reference)| reference.objective / o.objective)
            .collect();
        table.rows.push(ResultRow {
            sweep,
            scheme,
            mean_rate: mean(outcomes.iter().map(|(o, _)| o.objective)),
            ratio_min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            ratio_max: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_iters: mean(outcomes.iter().map(|(o, _)| o.iterations as f64)),
            mean_time_s: mean(outcomes.iter().map(|(o, _)| o.time_s)),
        });
    }

    let structures: Vec<(Scheme, bool, usize)> = complete.iter().filter_map(|r| r.structure).collect();
    let both = |r: &&&InstanceRecord| {
        r.outcomes.contains_key(&Scheme::Cd) && r.outcomes.contains_key(&Scheme::LrRound)
    };
    table.points.push(PointDiagnostics {
        sweep,
        instances: complete.len(),
        failures: records.len() - complete.len(),
        structure_source: structures.first().map(|s| s.0),
        threshold_structure: (!structures.is_empty()).then(|| structures.iter().all(|s| s.1)),
        mean_offloaders: (!structures.is_empty()).then(|| mean(structures.iter().map(|s| s.2 as f64))),
        cd_below_lr_round: complete
            .iter()
            .filter(both)
            .filter(|r| r.outcomes[&Scheme::Cd].objective < r.outcomes[&Scheme::LrRound].objective)
            .count(),
        admm_unconverged: complete
            .iter()
            .filter_map(|r| r.outcomes.get(&Scheme::Admm))
            .filter(|o| !o.converged)
            .count(),
    });
}

/// Solves every instance of every sweep point, in parallel across instances.
pub fn run_instances(cfg: &ScenarioConfig) -> Result<Vec<(f64, Vec<InstanceRecord>)>> {
    cfg.validate()?;
    let jobs: Vec<(usize, f64, InstanceKey)> = cfg
        .sweep
        .values
        .iter()
        .enumerate()
        .flat_map(|(p, &v)| {
            (0..cfg.placements as u64).flat_map(move |placement| {
                (0..cfg.fadings as u64).map(move |realization| {
                    (
                        p,
                        v,
                        InstanceKey {
                            placement,
                            realization,
                        },
                    )
                })
            })
        })
        .collect();
    let records: Vec<(usize, InstanceRecord)> = jobs
        .into_par_iter()
        .map(|(p, v, key)| (p, solve_instance(cfg, v, key)))
        .collect();
    let mut grouped: Vec<(f64, Vec<InstanceRecord>)> =
        cfg.sweep.values.iter().map(|&v| (v, Vec::new())).collect();
    for (p, r) in records {
        grouped[p].1.push(r);
    }
    Ok(grouped)
}

/// Runs a scenario. Deterministic given the configuration; solver failures
/// are recorded per instance and do not stop the run.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ResultTable> {
    let grouped = run_instances(cfg)?;
    let mut table = ResultTable {
        reference: Some(cfg.reference_scheme()),
        max_failures: cfg.max_failures,
        ..Default::default()
    };
    let mut order: Vec<usize> = (0..grouped.len()).collect();
    order.sort_by(|&a, &b| grouped[a].0.total_cmp(&grouped[b].0));
    for i in order {
        let (sweep, records) = &grouped[i];
        aggregate(cfg, *sweep, records, &mut table);
    }
    Ok(table)
}
