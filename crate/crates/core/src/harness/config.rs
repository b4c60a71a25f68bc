//! Scenario configuration: a flat TOML document with `[system]`,
//! `[placement]` and exactly one `[sweep]` table. Unknown keys are rejected.
//!
//! ```toml
//! name = "custom"
//! seed = 42
//! placements = 20
//! fadings = 20
//! schemes = ["optimal", "cd", "admm", "offloading_only", "local_only"]
//! reference = "optimal"
//! weights = { kind = "random_one_two" }
//! cd_init = "random"
//!
//! [system]
//! noise = 3e-10
//!
//! [placement]
//! n = 10
//! mean_dist = 4.0
//! spread = 0.2
//!
//! [sweep]
//! axis = "pathloss_exp"
//! values = [2.0, 2.4, 2.8, 3.2, 3.6]
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmarks::ENUMERATION_LIMIT;
use crate::channel_gen::{Fading, Layout, PlacementSpec, WeightRule};
use crate::error::{Error, Result};
use crate::model::SystemParams;

pub const DEFAULT_PLACEMENTS: usize = 20;
pub const DEFAULT_FADINGS: usize = 20;
/// Fading realizations per placement used by `--paper-scale`.
pub const FULL_SCALE_FADINGS: usize = 100;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = ["fig2", "fig3", "fig4a", "fig4b", "fig5", "fig6"];

/// A solver or reference scheme run by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Optimal,
    Cd,
    Admm,
    LrBound,
    LrRound,
    OffloadingOnly,
    LocalOnly,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Optimal,
        Scheme::Cd,
        Scheme::Admm,
        Scheme::LrBound,
        Scheme::LrRound,
        Scheme::OffloadingOnly,
        Scheme::LocalOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Optimal => "optimal",
            Scheme::Cd => "cd",
            Scheme::Admm => "admm",
            Scheme::LrBound => "lr_bound",
            Scheme::LrRound => "lr_round",
            Scheme::OffloadingOnly => "offloading_only",
            Scheme::LocalOnly => "local_only",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Starting point of coordinate descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdInit {
    /// Uniformly random modes, seeded per instance.
    #[default]
    Random,
    AllLocal,
    AllOffload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PathlossExp,
    MeanDist,
    /// Number of devices.
    N,
    /// Multiplier applied to the placement's `compute_eff`.
    ComputeEff,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PathlossExp => "pathloss_exp",
            SweepAxis::MeanDist => "mean_dist",
            SweepAxis::N => "n",
            SweepAxis::ComputeEff => "compute_eff",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Placement geometry; the seed comes from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementConfig {
    pub n: usize,
    pub mean_dist: f64,
    pub spread: f64,
    pub pathloss_exp: f64,
    pub antenna_gain: f64,
    pub carrier: f64,
    pub compute_eff: f64,
    pub layout: Layout,
    pub fading: Fading,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        let s = PlacementSpec::default();
        Self {
            n: s.n,
            mean_dist: s.mean_dist,
            spread: s.spread,
            pathloss_exp: s.pathloss_exp,
            antenna_gain: s.antenna_gain,
            carrier: s.carrier,
            compute_eff: s.compute_eff,
            layout: s.layout,
            fading: s.fading,
        }
    }
}

fn default_placements() -> usize {
    DEFAULT_PLACEMENTS
}

fn default_fadings() -> usize {
    DEFAULT_FADINGS
}

fn default_weights() -> WeightRule {
    WeightRule::RandomOneTwo
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_placements")]
    pub placements: usize,
    /// Fading realizations per placement.
    #[serde(default = "default_fadings")]
    pub fadings: usize,
    pub schemes: Vec<Scheme>,
    /// Scheme in the numerator of every ratio; see [`ScenarioConfig::reference_scheme`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Scheme>,
    #[serde(default = "default_weights")]
    pub weights: WeightRule,
    #[serde(default)]
    pub cd_init: CdInit,
    /// Failed instances tolerated before the run counts as failed.
    #[serde(default)]
    pub max_failures: usize,
    /// Record wall time; when false the time column is written as 0 so that
    /// output files are byte-reproducible.
    #[serde(default = "default_true")]
    pub record_time: bool,
    #[serde(default)]
    pub system: SystemParams,
    #[serde(default)]
    pub placement: PlacementConfig,
    pub sweep: Sweep,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Explicit reference, else `optimal`, else `cd`, else the first scheme.
    pub fn reference_scheme(&self) -> Scheme {
        self.reference.unwrap_or_else(|| {
            [Scheme::Optimal, Scheme::Cd]
                .into_iter()
                .find(|s| self.schemes.contains(s))
                .unwrap_or(self.schemes[0])
        })
    }

    /// Placement spec at one sweep value.
    pub fn spec_at(&self, value: f64) -> PlacementSpec {
        let p = &self.placement;
        let mut spec = PlacementSpec {
            n: p.n,
            mean_dist: p.mean_dist,
            spread: p.spread,
            pathloss_exp: p.pathloss_exp,
            antenna_gain: p.antenna_gain,
            carrier: p.carrier,
            compute_eff: p.compute_eff,
            layout: p.layout,
            fading: p.fading,
            seed: self.seed,
        };
        match self.sweep.axis {
            SweepAxis::PathlossExp => spec.pathloss_exp = value,
            SweepAxis::MeanDist => spec.mean_dist = value,
            SweepAxis::N => spec.n = value as usize,
            SweepAxis::ComputeEff => spec.compute_eff *= value,
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.schemes.is_empty() {
            return err("solver set is empty; list at least one scheme".into());
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return err(format!("scheme `{s}` listed twice"));
            }
        }
        if let Some(r) = self.reference {
            if !self.schemes.contains(&r) {
                return err(format!("reference scheme `{r}` is not in the solver set"));
            }
        }
        if self.placements == 0 || self.fadings == 0 {
            return err("placements and fadings must both be >= 1".into());
        }
        if let WeightRule::Equal { value } = self.weights {
            if !(value > 0.0 && value.is_finite()) {
                return err(format!("equal weight must be > 0, got {value}"));
            }
        }
        self.system.validate()?;
        if self.sweep.values.is_empty() {
            return err("sweep needs at least one value".into());
        }
        for (i, &v) in self.sweep.values.iter().enumerate() {
            if !v.is_finite() {
                return err(format!("sweep value {v} is not finite"));
            }
            if self.sweep.values[..i].contains(&v) {
                return err(format!("sweep value {v} listed twice"));
            }
            match self.sweep.axis {
                SweepAxis::N if !(v >= 1.0 && v.fract() == 0.0) => {
                    return err(format!("device counts must be positive integers, got {v}"));
                }
                SweepAxis::ComputeEff if v <= 0.0 => {
                    return err(format!("compute_eff multiplier must be > 0, got {v}"));
                }
                _ => {}
            }
            let spec = self.spec_at(v);
            spec.validate()?;
            if self.schemes.contains(&Scheme::Optimal) && spec.n > ENUMERATION_LIMIT {
                return err(format!(
                    "`optimal` enumerates 2^n modes and is limited to n <= {ENUMERATION_LIMIT}, sweep reaches n = {}",
                    spec.n
                ));
            }
        }
        Ok(())
    }
}

fn base(name: &str, schemes: Vec<Scheme>, axis: SweepAxis, values: Vec<f64>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        seed: 2018,
        placements: DEFAULT_PLACEMENTS,
        fadings: DEFAULT_FADINGS,
        schemes,
        reference: None,
        weights: WeightRule::RandomOneTwo,
        cd_init: CdInit::Random,
        max_failures: 0,
        record_time: true,
        system: SystemParams::default(),
        placement: PlacementConfig::default(),
        sweep: Sweep { axis, values },
    }
}

/// Ten devices at `2.5 + 0.3 (i - 1)` meters with static channels.
fn static_line(cfg: &mut ScenarioConfig) {
    cfg.placement.layout = Layout::Spaced {
        start: 2.5,
        step: 0.3,
    };
    cfg.placement.fading = Fading::Static;
    cfg.placements = 1;
    cfg.fadings = 1;
}

/// Built-in scenarios, one per experiment family.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    use Scheme::*;
    let comparison = vec![Optimal, Cd, Admm, OffloadingOnly, LocalOnly];
    let cfg = match name {
        "fig2" => {
            let mut c = base(
                name,
                vec![Optimal, Cd, Admm],
                SweepAxis::ComputeEff,
                vec![1.0, 4.0, 16.0],
            );
            static_line(&mut c);
            c.weights = WeightRule::Equal { value: 1.0 };
            c
        }
        "fig3" => {
            let mut c = base(
                name,
                vec![Optimal, Cd, Admm],
                SweepAxis::PathlossExp,
                vec![2.0, 2.4, 2.8],
            );
            static_line(&mut c);
            c.weights = WeightRule::Alternating;
            c
        }
        "fig4a" => base(
            name,
            comparison,
            SweepAxis::PathlossExp,
            vec![2.0, 2.4, 2.8, 3.2, 3.6],
        ),
        "fig4b" => base(
            name,
            comparison,
            SweepAxis::MeanDist,
            vec![3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0],
        ),
        "fig5" => {
            let mut c = base(
                name,
                vec![Cd, Admm, LrBound, LrRound, OffloadingOnly, LocalOnly],
                SweepAxis::N,
                vec![10.0, 15.0, 20.0, 25.0, 30.0],
            );
            c.reference = Some(Cd);
            c
        }
        "fig6" => base(
            name,
            vec![Cd, Admm],
            SweepAxis::N,
            vec![10.0, 15.0, 20.0, 25.0, 30.0],
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schemes = ["cd"]
[sweep]
axis = "n"
values = [10, 20]
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.placements, 20);
        assert_eq!(c.fadings, 20);
        assert_eq!(c.system, SystemParams::default());
        assert_eq!(c.spec_at(20.0).n, 20);
        assert_eq!(c.reference_scheme(), Scheme::Cd);
    }

    #[test]
    fn empty_solver_set_is_rejected() {
        let text = MINIMAL.replace(r#"["cd"]"#, "[]");
        let e = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(e.to_string().contains("solver set is empty"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            format!("colour = 1\n{MINIMAL}"),
            format!("{MINIMAL}\n[system]\nnoise_power = 1e-10\n"),
            MINIMAL.replace("axis = \"n\"", "axis = \"noise\""),
        ] {
            assert!(
                matches!(ScenarioConfig::from_toml_str(&text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn sweep_is_required() {
        assert!(ScenarioConfig::from_toml_str("schemes = [\"cd\"]").is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        let cases = [
            MINIMAL.replace("[10, 20]", "[10.5]"),
            MINIMAL.replace("[10, 20]", "[]"),
            MINIMAL.replace("[10, 20]", "[10, 10]"),
            MINIMAL.replace(r#"["cd"]"#, r#"["cd", "cd"]"#),
            MINIMAL
                .replace(r#"["cd"]"#, r#"["optimal"]"#)
                .replace("[10, 20]", "[30]"),
            format!("reference = \"admm\"\n{MINIMAL}"),
            format!("placements = 0\n{MINIMAL}"),
            MINIMAL
                .replace("axis = \"n\"", "axis = \"pathloss_exp\"")
                .replace("[10, 20]", "[1.5]"),
        ];
        for text in cases {
            assert!(ScenarioConfig::from_toml_str(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            let back = ScenarioConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
            assert_eq!(back, c, "{name}");
        }
        assert!(preset("fig7").is_err());
    }

    #[test]
    fn compute_eff_axis_multiplies() {
        let c = preset("fig2").unwrap();
        assert_eq!(c.spec_at(16.0).compute_eff, 16e-26);
    }
}
