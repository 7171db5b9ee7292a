//! TOML experiment configuration.
//!
//! One file drives one invocation: an optional `[domain]` section (for
//! experiments that build their own grid), an optional `[solver]` section
//! (for experiments that integrate in time), and an `[experiment]` section
//! with the knobs of the chosen subcommand.  A top-level `seed` feeds every
//! sampled quantity; `--seed` on the command line takes precedence.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use kpi3_core::bench::{BilinearOptions, DyadicBand, L4Options, LeibnizOptions};
use kpi3_core::domain::DomainSpec;
use kpi3_core::evolve::SolverConfig;

/// Parsed configuration file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Base seed for all sampling.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: Option<DomainSpec<f64>>,
    #[serde(default)]
    pub solver: Option<SolverConfig<f64>>,
    #[serde(default)]
    pub experiment: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
    }

    pub fn domain(&self) -> Result<DomainSpec<f64>> {
        self.domain
            .context("this experiment needs a [domain] section")
    }

    pub fn solver(&self) -> Result<SolverConfig<f64>> {
        self.solver
            .clone()
            .context("this experiment needs a [solver] section")
    }

    /// Deserialize the `[experiment]` section into the subcommand's knobs.
    pub fn experiment<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        let table = self
            .experiment
            .clone()
            .context("missing [experiment] section")?;
        toml::Value::Table(table)
            .try_into()
            .context("invalid [experiment] section")
    }
}

/// Initial state of a time integration.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// Random real field on the dyadic band `|ξ| ∼ n`, `|η| ∼ m`, scaled to
    /// the given `L²` amplitude.  Needs a `[domain]` section.
    RandomBand {
        n: f64,
        m: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Stored snapshot; the grid comes from the file.
    Snapshot { path: PathBuf },
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateExperiment {
    pub initial: InitialData,
}

/// Random-pair resonance census.  Frequencies are drawn uniformly with
/// `|ξ| ∈ [xi_max/1024, xi_max]` (both signs, pairs with `ξ₁+ξ₂` below the
/// floor are redrawn) and `η ∈ [−eta_max, eta_max]²`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceExperiment {
    pub alpha: f64,
    pub pairs: usize,
    #[serde(default = "default_freq_max")]
    pub xi_max: f64,
    #[serde(default = "default_freq_max")]
    pub eta_max: f64,
    /// Factor standing in for "much smaller than" in the resonance test.
    #[serde(default = "default_smallness")]
    pub smallness: f64,
}

fn default_freq_max() -> f64 {
    8.0
}

fn default_smallness() -> f64 {
    kpi3_core::dispersion::DEFAULT_SMALLNESS
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingExperiment {
    /// Factor applied to the transverse period; the target λ must stay ≥ 1.
    pub lambda_factor: f64,
    /// Integration horizon of the unscaled flow.
    pub horizon: f64,
    pub initial: InitialData,
    /// Sobolev pairs `(s1, s2)` whose scaling exponents are tabulated.
    #[serde(default)]
    pub exponents: Vec<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IllposedExperiment {
    pub alphas: Vec<f64>,
    pub ns: Vec<f64>,
    pub theta: f64,
    /// Evaluation time in `[0, 1]` units of the short horizon.
    pub t: f64,
    /// Exponents `(s̄₁, s̄₂)` of the norm the ratio is measured in.
    pub sbar: (f64, f64),
}

/// One dyadic band pair of the bilinear bench.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub n1: f64,
    pub m1: f64,
    pub l1: f64,
    pub n2: f64,
    pub m2: f64,
    pub l2: f64,
}

impl CellSpec {
    pub fn bands(&self) -> (DyadicBand, DyadicBand) {
        (
            DyadicBand {
                n: self.n1,
                m: self.m1,
                l: self.l1,
            },
            DyadicBand {
                n: self.n2,
                m: self.m2,
                l: self.l2,
            },
        )
    }
}

/// Optional overrides of [`L4Options`]; unset fields keep their defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L4Knobs {
    pub lambda: Option<f64>,
    pub time_steps: Option<usize>,
    pub epsilon: Option<f64>,
    pub coherent: Option<bool>,
}

impl L4Knobs {
    pub fn build(&self, seed: u64) -> L4Options {
        let d = L4Options::default();
        L4Options {
            lambda: self.lambda.unwrap_or(d.lambda),
            time_steps: self.time_steps.unwrap_or(d.time_steps),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            coherent: self.coherent.unwrap_or(d.coherent),
            seed,
        }
    }
}

/// Optional overrides of [`BilinearOptions`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearKnobs {
    pub lambda: Option<f64>,
    pub support_cap: Option<usize>,
    pub seed_search_tries: Option<usize>,
}

impl BilinearKnobs {
    pub fn build(&self, seed: u64) -> BilinearOptions {
        let d = BilinearOptions::default();
        BilinearOptions {
            lambda: self.lambda.unwrap_or(d.lambda),
            support_cap: self.support_cap.unwrap_or(d.support_cap),
            seed_search_tries: self.seed_search_tries.unwrap_or(d.seed_search_tries),
            seed,
        }
    }
}

/// Optional overrides of [`LeibnizOptions`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeibnizKnobs {
    pub grid_n: Option<usize>,
    pub lambda: Option<f64>,
    pub decay: Option<f64>,
    pub band_limit: Option<i64>,
}

impl LeibnizKnobs {
    pub fn build(&self, seed: u64) -> LeibnizOptions {
        let d = LeibnizOptions::default();
        LeibnizOptions {
            grid_n: self.grid_n.unwrap_or(d.grid_n),
            lambda: self.lambda.unwrap_or(d.lambda),
            decay: self.decay.unwrap_or(d.decay),
            band_limit: self.band_limit.or(d.band_limit),
            seed,
        }
    }
}

/// Which inequality to bench, with its cell geometry.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchExperiment {
    /// Space-time `L⁴` bound of the linear propagator.  Give `m` for one
    /// cell or `ms` for an exponent sweep over transverse sizes.
    L4 {
        alpha: f64,
        n: f64,
        k: f64,
        #[serde(default)]
        m: Option<f64>,
        #[serde(default)]
        ms: Vec<f64>,
        samples: usize,
        #[serde(default)]
        options: L4Knobs,
    },
    /// Bilinear transverse `L²` bound.  One cell runs a single bench; more
    /// cells plus `parameter ∈ {n_min, m_min, l_min}` runs an exponent
    /// sweep.
    Bilinear {
        alpha: f64,
        cells: Vec<CellSpec>,
        #[serde(default)]
        parameter: Option<String>,
        samples: usize,
        #[serde(default)]
        options: BilinearKnobs,
    },
    /// Fractional Leibniz bound for products.
    Leibniz {
        a: f64,
        b: f64,
        delta: f64,
        p: usize,
        samples: usize,
        #[serde(default)]
        options: LeibnizKnobs,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsExperiment {
    /// Snapshot whose norms are evaluated.
    pub input: PathBuf,
    /// Sobolev pairs `(s1, s2)` to evaluate.
    #[serde(default)]
    pub sobolev: Vec<(f64, f64)>,
    /// Slope-weighted norms, given as `(s, lambda)` pairs.
    #[serde(default)]
    pub es: Vec<(f64, f64)>,
}
