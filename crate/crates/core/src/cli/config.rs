//! Run configuration: the TOML document a user writes, and its fully
//! resolved form (every `"auto"` expanded, random initials drawn).

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digraph::Digraph;
use crate::energy::{auto_select_c, c_lower_bound, diameter, TheoryBounds, TheoryConfig};
use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, DEFAULT_MAX_STEPS};
use crate::model::{ModelParams, State};

/// Name of the generator used for seed-based initial states.
pub const PRNG_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub initial: InitialSection,
    pub theory: TheorySection,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub m: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub omega_nat: Vec<f64>,
    /// Row-major 0/1 entries; row `i` lists the vertices that influence `i`.
    pub adjacency: Adjacency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Adjacency {
    Flat(Vec<i64>),
    Rows(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    pub gamma: f64,
    pub d_inf: f64,
    pub epsilon: f64,
    pub c: AutoOr<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: AutoOr<f64>,
    pub t_end: f64,
    #[serde(default = "one")]
    pub record_stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    /// Accept a `dt` above the stiffness guard `m/4`.
    #[serde(default, skip_serializing_if = "is_false")]
    pub force_dt: bool,
}

fn one() -> u64 {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Grid axes; an omitted axis holds the base model value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync_threshold: Option<f64>,
}

pub const DEFAULT_SYNC_THRESHOLD: f64 = 1e-6;

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::InvalidArgument(format!("{e}")))?;
        // A metadata document embeds the resolved config under [config].
        let doc = match doc.get("config") {
            Some(toml::Value::Table(inner)) if !doc.contains_key("model") => inner.clone(),
            _ => doc,
        };
        let cfg: RunConfig =
            toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| Error::InvalidArgument(format!("{e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::InvalidArgument(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn graph(&self) -> Result<Digraph> {
        let n = self.model.n;
        let g = match &self.model.adjacency {
            Adjacency::Flat(v) => Digraph::from_row_major(n, v)?,
            Adjacency::Rows(rows) => Digraph::from_rows(rows)?,
        };
        if g.n() != n {
            return Err(Error::InvalidArgument(format!(
                "model.adjacency has {} rows but model.n = {n}",
                g.n()
            )));
        }
        Ok(g)
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.m, m.kappa, m.alpha, m.omega_nat.clone(), self.graph()?)
    }

    /// Explicit initial state, or one drawn uniformly from the configured
    /// ranges with a seeded generator.
    pub fn initial_state(&self) -> Result<State> {
        let n = self.model.n;
        let ini = &self.initial;
        let explicit = ini.theta0.is_some() || ini.omega0.is_some();
        let seeded = ini.seed.is_some() || ini.theta_range.is_some() || ini.omega_range.is_some();
        match (explicit, seeded) {
            (true, true) => Err(Error::InvalidArgument(
                "initial: give either theta0/omega0 or seed/theta_range/omega_range, not both".into(),
            )),
            (false, false) => Err(Error::InvalidArgument(
                "initial: missing theta0/omega0 (or seed/theta_range/omega_range)".into(),
            )),
            (true, false) => {
                let theta = ini
                    .theta0
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("initial.theta0 is missing".into()))?;
                let omega = ini
                    .omega0
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("initial.omega0 is missing".into()))?;
                State::new(0.0, theta, omega)
            }
            (false, true) => {
                let seed = ini.seed.ok_or_else(|| Error::InvalidArgument("initial.seed is missing".into()))?;
                let tr = ini
                    .theta_range
                    .ok_or_else(|| Error::InvalidArgument("initial.theta_range is missing".into()))?;
                let wr = ini
                    .omega_range
                    .ok_or_else(|| Error::InvalidArgument("initial.omega_range is missing".into()))?;
                for (name, r) in [("theta_range", tr), ("omega_range", wr)] {
                    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                        return Err(Error::InvalidArgument(format!(
                            "initial.{name} must be finite with lo <= hi, got {r:?}"
                        )));
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = |r: [f64; 2]| -> f64 {
                    if r[0] == r[1] {
                        r[0]
                    } else {
                        rng.gen_range(r[0]..r[1])
                    }
                };
                let theta: Vec<f64> = (0..n).map(|_| draw(tr)).collect();
                let omega: Vec<f64> = (0..n).map(|_| draw(wr)).collect();
                State::new(0.0, theta, omega)
            }
        }
    }

    pub fn bounds(&self) -> TheoryBounds {
        TheoryBounds {
            gamma: self.theory.gamma,
            d_inf: self.theory.d_inf,
            epsilon: self.theory.epsilon,
        }
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.output.as_ref().and_then(|o| o.dir.as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Explicit,
    Auto,
    /// `"auto"` had no admissible value; the smallest `c` above the lower
    /// bound was used and the initial-diameter condition reports the failure.
    AutoFallback,
    Seeded,
}

/// How the `"auto"` and seeded entries were filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub c: u32,
    pub c_source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_note: Option<String>,
    pub dt: f64,
    pub dt_source: Source,
    pub initial_source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<String>,
}

/// A configuration with every derived value pinned down.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Equivalent config with explicit `c`, `dt` and initial vectors.
    pub config: RunConfig,
    pub resolution: Resolution,
    pub params: ModelParams,
    pub init: State,
    pub theory: TheoryConfig,
    pub integrator: IntegratorConfig,
}

/// `auto_select_c`, falling back to the smallest `c > 2` above the lower
/// bound when no `c` satisfies the initial-diameter condition.
pub fn resolve_c(p: &ModelParams, bounds: &TheoryBounds, d_theta0: f64) -> Result<(u32, Source, Option<String>)> {
    match auto_select_c(p, bounds, d_theta0) {
        Ok(c) => Ok((c, Source::Auto, None)),
        Err(Error::Infeasible(msg)) => {
            let lower = c_lower_bound(p, bounds);
            let c = if lower.is_finite() && lower < (u32::MAX - 1) as f64 {
                (lower.floor() as u32 + 1).max(3)
            } else {
                3
            };
            Ok((c, Source::AutoFallback, Some(msg)))
        }
        Err(e) => Err(e),
    }
}

impl Resolved {
    pub fn new(cfg: &RunConfig, force_dt: bool) -> Result<Self> {
        let params = cfg.params()?;
        let init = cfg.initial_state()?;
        if init.n() != params.n() {
            return Err(Error::InvalidArgument(format!(
                "initial vectors have length {} but model.n = {}",
                init.n(),
                params.n()
            )));
        }
        let bounds = cfg.bounds();
        bounds.validate()?;

        let (c, c_source, c_note) = match cfg.theory.c {
            AutoOr::Value(c) => (c, Source::Explicit, None),
            AutoOr::Auto(_) => resolve_c(&params, &bounds, diameter(&init.theta)?)?,
        };
        let theory = bounds.with_c(c);
        theory.validate()?;

        let (dt, dt_source) = match cfg.integrator.dt {
            AutoOr::Value(dt) => (dt, Source::Explicit),
            AutoOr::Auto(_) => (IntegratorConfig::auto_dt(params.m), Source::Auto),
        };
        let force = force_dt || cfg.integrator.force_dt;
        let mut integrator = IntegratorConfig::new(dt, cfg.integrator.t_end, cfg.integrator.record_stride);
        integrator.max_steps = cfg.integrator.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
        integrator.force_dt = force;
        integrator.validate(params.m)?;

        let seeded = cfg.initial.seed.is_some();
        let mut config = cfg.clone();
        config.theory.c = AutoOr::Value(c);
        config.integrator.dt = AutoOr::Value(dt);
        config.integrator.force_dt = force;
        config.initial = InitialSection {
            theta0: Some(init.theta.clone()),
            omega0: Some(init.omega.clone()),
            ..Default::default()
        };

        Ok(Self {
            config,
            resolution: Resolution {
                c,
                c_source,
                c_note,
                dt,
                dt_source,
                initial_source: if seeded { Source::Seeded } else { Source::Explicit },
                seed: cfg.initial.seed,
                prng: seeded.then(|| PRNG_NAME.to_string()),
            },
            params,
            init,
            theory,
            integrator,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
n = 3
m = 1e-5
kappa = 1.0
alpha = 1e-5
omega_nat = [-5e-5, 1e-4, 2e-5]
adjacency = [0, 0, 1,
             1, 0, 0,
             0, 1, 0]

[initial]
theta0 = [-0.5037, -0.0037, 0.5293]
omega0 = [-0.3, 0.308, 0.1]

[theory]
gamma = 1.8955
d_inf = 0.4
epsilon = 1e-3
c = "auto"

[integrator]
dt = "auto"
t_end = 15.0
record_stride = 40
"#;

    #[test]
    fn parses_and_resolves_auto() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        let r = Resolved::new(&cfg, false).unwrap();
        assert_eq!(r.resolution.c, 7);
        assert_eq!(r.resolution.c_source, Source::Auto);
        assert_eq!(r.resolution.dt, 2.5e-6);
        assert_eq!(r.config.theory.c, AutoOr::Value(7));
        assert_eq!(r.config.integrator.dt, AutoOr::Value(2.5e-6));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        let r = Resolved::new(&cfg, false).unwrap();
        let text = r.config.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, r.config);
        let again = Resolved::new(&back, false).unwrap();
        assert_eq!(again.init, r.init);
        assert_eq!(again.theory, r.theory);
        assert_eq!(again.integrator, r.integrator);
    }

    #[test]
    fn nested_rows_accepted() {
        let text = BASE.replace(
            "adjacency = [0, 0, 1,\n             1, 0, 0,\n             0, 1, 0]",
            "adjacency = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]",
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.graph().unwrap(), Digraph::directed_ring(3).unwrap());
    }

    #[test]
    fn missing_adjacency_names_field() {
        let text = BASE.replace("adjacency = [0, 0, 1,\n             1, 0, 0,\n             0, 1, 0]", "");
        let err = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("adjacency"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = BASE.replace("t_end = 15.0", "t_end = 15.0\nt_stop = 3");
        let err = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("t_stop"), "{err}");
    }

    #[test]
    fn seeded_initials_are_deterministic() {
        let text = BASE.replace(
            "theta0 = [-0.5037, -0.0037, 0.5293]\nomega0 = [-0.3, 0.308, 0.1]",
            "seed = 42\ntheta_range = [0.0, 1.0]\nomega_range = [-0.3, 0.3]",
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        let a = cfg.initial_state().unwrap();
        let b = cfg.initial_state().unwrap();
        assert_eq!(a, b);
        assert!(a.theta.iter().all(|x| (0.0..1.0).contains(x)));
        assert!(a.omega.iter().all(|x| (-0.3..0.3).contains(x)));
        let r = Resolved::new(&cfg, false).unwrap();
        assert_eq!(r.resolution.seed, Some(42));
        assert_eq!(r.resolution.prng.as_deref(), Some(PRNG_NAME));
        assert_eq!(r.config.initial.theta0.as_ref(), Some(&a.theta));
    }

    #[test]
    fn both_initial_forms_rejected() {
        let text = BASE.replace("omega0 = [-0.3, 0.308, 0.1]", "omega0 = [-0.3, 0.308, 0.1]\nseed = 1");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert!(cfg.initial_state().is_err());
    }

    #[test]
    fn infeasible_auto_c_falls_back() {
        // D_θ(0) beyond (1−ε)γ: no c satisfies the initial condition.
        let text = BASE.replace("theta0 = [-0.5037, -0.0037, 0.5293]", "theta0 = [0.0, 1.0, 1.9]");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        let r = Resolved::new(&cfg, false).unwrap();
        assert_eq!(r.resolution.c_source, Source::AutoFallback);
        assert_eq!(r.resolution.c, 7);
        assert!(r.resolution.c_note.is_some());
    }

    #[test]
    fn explicit_dt_above_guard_needs_force() {
        let text = BASE.replace("dt = \"auto\"", "dt = 1e-5");
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert!(Resolved::new(&cfg, false).is_err());
        assert!(Resolved::new(&cfg, true).unwrap().integrator.force_dt);
    }

    #[test]
    fn meta_document_accepted_as_config() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        let doc = format!("[run]\nstatus = \"completed\"\n\n{}", {
            let mut t = toml::Table::new();
            t.insert("config".into(), toml::Value::try_from(&cfg).unwrap());
            toml::to_string(&t).unwrap()
        });
        assert_eq!(RunConfig::from_toml_str(&doc).unwrap(), cfg);
    }
}
