//! Run configuration: which suites to run, with what parameters, and where
//! to write the reports. Every field has a desk-scale default, so `{}` is
//! a valid config that runs everything.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::scattering::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Poincare,
    Graph,
    Scattering,
    Symmetrization,
    Bogoliubov,
    Budget,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Poincare,
        Suite::Graph,
        Suite::Scattering,
        Suite::Symmetrization,
        Suite::Bogoliubov,
        Suite::Budget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Poincare => "poincare",
            Suite::Graph => "graph",
            Suite::Scattering => "scattering",
            Suite::Symmetrization => "symmetrization",
            Suite::Bogoliubov => "bogoliubov",
            Suite::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl ReportFormat {
    pub fn csv(self) -> bool {
        matches!(self, ReportFormat::Csv | ReportFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, ReportFormat::Json | ReportFormat::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoincareConfig {
    /// Nodes of the 1-D grid for the spectral gap check.
    pub gap_n: usize,
    /// Grids for the operator inequality and the constant fit.
    pub operator_grids: Vec<GridSpec>,
    pub m_list: Vec<usize>,
    /// `eps = factor / lambda_1`.
    pub eps_factors: Vec<f64>,
    pub staircase_steps: Vec<usize>,
    pub staircase_p: f64,
    pub cells_per_ramp: usize,
    pub kinetic_n: usize,
    pub kinetic_m: usize,
    pub kinetic_alphas: Vec<f64>,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        PoincareConfig {
            gap_n: 256,
            operator_grids: vec![GridSpec { dim: 1, n: 256 }, GridSpec { dim: 2, n: 128 }],
            m_list: vec![2, 4],
            eps_factors: vec![0.2, 0.05],
            staircase_steps: vec![1, 2, 4],
            staircase_p: 2.0,
            cells_per_ramp: 4,
            kinetic_n: 128,
            kinetic_m: 4,
            kinetic_alphas: vec![0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub m_list: Vec<usize>,
    pub dim: usize,
    pub p: f64,
    pub trials: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            m_list: vec![4, 8, 16, 32],
            dim: 1,
            p: 2.0,
            trials: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringConfig {
    pub potential: PotentialSpec,
    pub born_amplitude: f64,
    pub n_r: usize,
    pub ell_list: Vec<f64>,
    pub lambda: f64,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig {
            potential: PotentialSpec::SquareWell {
                amplitude: 2.0,
                range: 0.5,
            },
            born_amplitude: 1e-3,
            n_r: 4096,
            ell_list: vec![8.0, 16.0, 32.0],
            lambda: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetrizationConfig {
    pub ell: f64,
    pub lambda: f64,
    pub order: usize,
    pub max_mode: u32,
    pub spot_pairs: usize,
    pub sample_pairs: usize,
    pub boundary_ells: Vec<f64>,
    pub boundary_lambda: f64,
    /// Particle number per cell relative to `l`.
    pub n_over_ell: f64,
    pub split_potential: PotentialSpec,
    pub split_cutoff: u32,
    pub split_pairs: usize,
}

impl Default for SymmetrizationConfig {
    fn default() -> Self {
        SymmetrizationConfig {
            ell: 16.0,
            lambda: 0.5,
            order: 64,
            max_mode: 3,
            spot_pairs: 10,
            sample_pairs: 200,
            boundary_ells: vec![8.0, 16.0, 32.0],
            boundary_lambda: 0.25,
            n_over_ell: 1.0,
            split_potential: PotentialSpec::SmoothBump {
                amplitude: 2.0,
                range: 0.5,
            },
            split_cutoff: 48,
            split_pairs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BogoliubovConfig {
    pub samples: usize,
    pub n_max: usize,
    /// Largest `|B|/A` drawn in the oracle sweep.
    pub max_ratio: f64,
    pub ell_list: Vec<f64>,
    pub n_over_ell: f64,
    pub mu: f64,
    pub cutoff: u32,
    pub table_max_k: u32,
}

impl Default for BogoliubovConfig {
    fn default() -> Self {
        BogoliubovConfig {
            samples: 200,
            n_max: 80,
            max_ratio: 0.9,
            ell_list: vec![16.0, 32.0],
            n_over_ell: 0.25,
            mu: PI / 2.0,
            cutoff: 64,
            table_max_k: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    pub kappas: Vec<f64>,
    pub sweep_points: usize,
    pub n_particles: f64,
    pub a0: f64,
    pub c0: f64,
    pub k: f64,
    pub rho_a3: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            kappas: (1..=30).map(|i| i as f64 * 0.01).collect(),
            sweep_points: 100,
            n_particles: 1e6,
            a0: 1.0,
            c0: 1.0,
            k: 20.0,
            rho_a3: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub format: ReportFormat,
    /// Suites run concurrently on this many threads.
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
    pub poincare: PoincareConfig,
    pub graph: GraphConfig,
    pub scattering: ScatteringConfig,
    pub symmetrization: SymmetrizationConfig,
    pub bogoliubov: BogoliubovConfig,
    pub budget: BudgetConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suites: Suite::ALL.to_vec(),
            seed: 12345,
            format: ReportFormat::Both,
            workers: 1,
            out_dir: None,
            poincare: PoincareConfig::default(),
            graph: GraphConfig::default(),
            scattering: ScatteringConfig::default(),
            symmetrization: SymmetrizationConfig::default(),
            bogoliubov: BogoliubovConfig::default(),
            budget: BudgetConfig::default(),
        }
    }
}

fn bad(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn check(ok: bool, path: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(bad(path, reason))
    }
}

fn nonempty<T>(v: &[T], path: &str) -> Result<()> {
    check(!v.is_empty(), path, "must be nonempty")
}

fn potential(v: &PotentialSpec, path: &str) -> Result<()> {
    v.validate().map_err(|e| bad(path, e.to_string()))?;
    check(v.range() < 1.0, path, "range must be below 1")
}

impl RunConfig {
    /// Parses a JSON config; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| bad("<config>", e.to_string()))?;
        Self::from_value(v)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| bad("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(&path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Applies `key=value` overrides. `key` is a dotted path into the config;
    /// `value` is parsed as JSON, falling back to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, sets: &[S]) -> Result<Self> {
        let mut v = self.to_value();
        for s in sets {
            let s = s.as_ref();
            let (key, raw) = s.split_once('=').ok_or_else(|| bad(s, "expected key=value"))?;
            let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut slot = &mut v;
            for part in key.split('.') {
                slot = match slot {
                    Value::Object(map) if map.contains_key(part) => map.get_mut(part).expect("key present"),
                    _ => return Err(bad(key, "no such config key")),
                };
            }
            *slot = new;
            serde_json::from_value::<RunConfig>(v.clone()).map_err(|e| bad(key, e.to_string()))?;
        }
        Self::from_value(v)
    }

    pub fn validate(&self) -> Result<()> {
        check(!self.suites.is_empty(), "suites", "at least one suite is required")?;
        let mut seen = self.suites.clone();
        seen.sort();
        seen.dedup();
        check(seen.len() == self.suites.len(), "suites", "duplicate suite")?;
        check((1..=256).contains(&self.workers), "workers", "must be in 1..=256")?;

        let p = &self.poincare;
        check((8..=4096).contains(&p.gap_n), "poincare.gap_n", "must be in 8..=4096")?;
        nonempty(&p.operator_grids, "poincare.operator_grids")?;
        for g in &p.operator_grids {
            check(
                (1..=3).contains(&g.dim),
                "poincare.operator_grids.dim",
                "must be 1, 2 or 3",
            )?;
            check(
                g.n >= 4 && g.n.pow(g.dim as u32) <= 1 << 20,
                "poincare.operator_grids.n",
                "need n >= 4 and n^d <= 2^20",
            )?;
            for &m in &p.m_list {
                check(
                    m >= 1 && g.n % m == 0,
                    "poincare.m_list",
                    "every M must divide every grid size",
                )?;
            }
        }
        nonempty(&p.m_list, "poincare.m_list")?;
        nonempty(&p.eps_factors, "poincare.eps_factors")?;
        check(
            p.eps_factors.iter().all(|e| *e > 0.0 && *e <= 1.0),
            "poincare.eps_factors",
            "must be in (0, 1]",
        )?;
        nonempty(&p.staircase_steps, "poincare.staircase_steps")?;
        check(
            p.staircase_steps.iter().all(|n| (1..=16).contains(n)),
            "poincare.staircase_steps",
            "must be in 1..=16",
        )?;
        check(
            p.staircase_p > 1.0 && p.staircase_p.is_finite(),
            "poincare.staircase_p",
            "must be > 1",
        )?;
        check(p.cells_per_ramp >= 4, "poincare.cells_per_ramp", "must be >= 4")?;
        check(p.kinetic_m >= 3, "poincare.kinetic_m", "need l = 1/M < 1/2")?;
        check(
            p.kinetic_n.is_multiple_of(p.kinetic_m) && p.kinetic_n <= 8192,
            "poincare.kinetic_n",
            "must be a multiple of kinetic_m, at most 8192",
        )?;
        nonempty(&p.kinetic_alphas, "poincare.kinetic_alphas")?;
        check(
            p.kinetic_alphas.iter().all(|a| *a >= 0.0 && *a <= 8.0),
            "poincare.kinetic_alphas",
            "must be in [0, 8]",
        )?;

        let g = &self.graph;
        nonempty(&g.m_list, "graph.m_list")?;
        check(
            g.m_list.iter().all(|m| (2..=4096).contains(m)),
            "graph.m_list",
            "must be in 2..=4096",
        )?;
        check((1..=3).contains(&g.dim), "graph.dim", "must be 1, 2 or 3")?;
        check(g.p > 1.0 && g.p.is_finite(), "graph.p", "must be > 1")?;
        check(g.trials >= 1, "graph.trials", "must be >= 1")?;

        let s = &self.scattering;
        potential(&s.potential, "scattering.potential")?;
        check(
            s.born_amplitude > 0.0 && s.born_amplitude <= 1e-2,
            "scattering.born_amplitude",
            "must be in (0, 1e-2]",
        )?;
        check(
            (256..=1 << 20).contains(&s.n_r),
            "scattering.n_r",
            "must be in 256..=2^20",
        )?;
        nonempty(&s.ell_list, "scattering.ell_list")?;
        check(
            s.lambda > 0.0 && s.lambda <= 1.0,
            "scattering.lambda",
            "must be in (0, 1]",
        )?;
        check(
            s.ell_list
                .iter()
                .all(|l| *l >= 1.0 && 2.0 * s.potential.range() / l < s.lambda),
            "scattering.ell_list",
            "need l >= 1 and 2R/l < lambda",
        )?;

        let y = &self.symmetrization;
        check(
            y.ell >= 1.0 && y.lambda > 0.0 && y.lambda < 1.0,
            "symmetrization.lambda",
            "need l >= 1, lambda in (0, 1)",
        )?;
        check(
            (4..=256).contains(&y.order),
            "symmetrization.order",
            "must be in 4..=256",
        )?;
        check(y.max_mode <= 16, "symmetrization.max_mode", "must be at most 16")?;
        check(y.spot_pairs >= 1, "symmetrization.spot_pairs", "must be >= 1")?;
        check(y.sample_pairs >= 1, "symmetrization.sample_pairs", "must be >= 1")?;
        nonempty(&y.boundary_ells, "symmetrization.boundary_ells")?;
        check(
            y.boundary_ells.iter().all(|l| *l > 1.0),
            "symmetrization.boundary_ells",
            "must exceed 1",
        )?;
        check(
            y.boundary_lambda > 0.0 && y.boundary_lambda < 1.0,
            "symmetrization.boundary_lambda",
            "must be in (0, 1)",
        )?;
        check(y.n_over_ell > 0.0, "symmetrization.n_over_ell", "must be positive")?;
        potential(&y.split_potential, "symmetrization.split_potential")?;
        check(
            (1..=256).contains(&y.split_cutoff),
            "symmetrization.split_cutoff",
            "must be in 1..=256",
        )?;
        check(y.split_pairs >= 1, "symmetrization.split_pairs", "must be >= 1")?;

        let b = &self.bogoliubov;
        check(b.samples >= 1, "bogoliubov.samples", "must be >= 1")?;
        check((2..=4096).contains(&b.n_max), "bogoliubov.n_max", "must be in 2..=4096")?;
        check(
            b.max_ratio > 0.0 && b.max_ratio < 1.0,
            "bogoliubov.max_ratio",
            "must be in (0, 1)",
        )?;
        nonempty(&b.ell_list, "bogoliubov.ell_list")?;
        check(
            b.ell_list.iter().all(|l| *l >= 1.0),
            "bogoliubov.ell_list",
            "must be >= 1",
        )?;
        check(b.n_over_ell > 0.0, "bogoliubov.n_over_ell", "must be positive")?;
        check(b.mu > 0.0 && b.mu < PI, "bogoliubov.mu", "must be in (0, pi)")?;
        check((1..=512).contains(&b.cutoff), "bogoliubov.cutoff", "must be in 1..=512")?;
        check(b.table_max_k <= 16, "bogoliubov.table_max_k", "must be at most 16")?;

        let u = &self.budget;
        nonempty(&u.kappas, "budget.kappas")?;
        check(
            u.kappas.iter().all(|k| *k > 0.0 && *k < 2.0 / 3.0),
            "budget.kappas",
            "must be in (0, 2/3)",
        )?;
        check(u.sweep_points >= 2, "budget.sweep_points", "must be >= 2")?;
        check(u.n_particles >= 1.0, "budget.n_particles", "must be >= 1")?;
        check(u.a0 > 0.0 && u.c0 >= 0.0, "budget.a0", "need a0 > 0 and c0 >= 0")?;
        check(u.k >= 1.0, "budget.k", "must be >= 1")?;
        check(u.rho_a3 > 0.0 && u.rho_a3 < 1.0, "budget.rho_a3", "must be in (0, 1)")?;
        Ok(())
    }
}
