use std::path::Path;

use anyhow::{bail, Context, Result};
use kgfock::conserved::SeriesConfig;
use kgfock::dynamics::{Monomial, NonlinearitySpec, Scheme, SolverConfig};
use kgfock::texp::{TexpMethod, TexpOptions};
use kgfock::SpectralGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    #[serde(rename = "M")]
    pub modes: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub m: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub monomials: Vec<Monomial>,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub scheme: Scheme,
    #[serde(default)]
    pub dealias: bool,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    #[serde(rename = "capP")]
    pub cap: usize,
    pub order: usize,
    pub nodes: usize,
    #[serde(default = "default_method")]
    pub method: TexpMethod,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_method() -> TexpMethod {
    TexpMethod::Ode
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiChoice {
    /// A random free solution of unit norm.
    Random,
    /// Data (0, δ_x): reads off u.
    DeltaU,
    /// Data (−δ_x, 0): reads off ∂ₜu.
    DeltaDtu,
}

fn default_phi() -> PhiChoice {
    PhiChoice::Random
}

fn default_d0_norm() -> f64 {
    0.3
}

fn default_budget() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub times: Vec<f64>,
    #[serde(default = "default_phi")]
    pub phi: PhiChoice,
    #[serde(default = "default_d0_norm")]
    pub d0_norm: f64,
    /// Evaluation point; defaults to argmax |u₀|.
    #[serde(default)]
    pub x: Option<[f64; 2]>,
    #[serde(default = "default_budget")]
    pub r_budget: f64,
}

/// Explicit majorant coefficients for `certify`, overriding the derived one.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MajorantSection {
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    pub nonlinearity: NonlinearitySection,
    pub solver: SolverSection,
    pub series: SeriesSection,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub majorant: Option<MajorantSection>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.v().validate(grid.n)?;
        self.solver().validate()?;
        let e = &self.experiment;
        if !(e.t_end >= 0.0) {
            bail!("experiment.T must be nonnegative");
        }
        let mut prev = 0.0;
        for &t in &e.times {
            if !(t >= prev) || t > e.t_end {
                bail!("experiment.times must ascend within [0, T]");
            }
            prev = t;
        }
        if !(e.d0_norm >= 0.0) || !(e.r_budget > 0.0) {
            bail!("experiment.d0_norm must be >= 0 and r_budget > 0");
        }
        if self.series.nodes == 0 || self.series.cap == 0 || self.series.cap > 8 {
            bail!("series.nodes must be >= 1 and capP in 1..=8");
        }
        if !(self.series.tol > 0.0) {
            bail!("series.tol must be positive");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        let g = &self.grid;
        Ok(SpectralGrid::new(g.n, g.modes, g.length, g.m, g.s)?)
    }

    pub fn v(&self) -> NonlinearitySpec {
        NonlinearitySpec { monomials: self.nonlinearity.monomials.clone(), lambda: self.nonlinearity.lambda }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt,
            scheme: self.solver.scheme,
            dealias: self.solver.dealias,
            ..Default::default()
        }
    }

    pub fn series(&self) -> SeriesConfig {
        SeriesConfig {
            cap: self.series.cap,
            texp: TexpOptions {
                method: self.series.method,
                order: self.series.order,
                tol: self.series.tol,
                simplex_nodes: self.series.nodes,
                dealias: self.solver.dealias,
                radius: self.experiment.r_budget,
                ..Default::default()
            },
        }
    }
}
