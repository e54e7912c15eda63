//! TOML run configuration shared by every `scr` command.
//!
//! ```toml
//! schema_version = 1
//!
//! [traps]
//! file = "traps.csv"          # or: rows = 12, cols = 16, spacing = 7.0
//!
//! [domain]
//! buffer = 15.0               # or: xmin, xmax, ymin, ymax
//!
//! [priors]
//! n_max = 200
//!
//! [table]
//! file = "table.bin"
//! n_min = 100
//!
//! [chain]
//! iterations = 50000
//! burn_in = 10000
//! seed = 7
//! ```
//!
//! Unknown keys are rejected. Relative paths are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, TrapArray};
use crate::norm_const::{a_grid, BuildOptions, GridSpec, DEFAULT_DEGREE};
use crate::sampler::{ChainConfig, Priors};
use crate::simstudy::{PeriodDesign, SimDesign, StudyFitConfig};
use crate::strauss::DEFAULT_BURN_IN;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub buffer: Option<f64>,
    pub xmin: Option<f64>,
    pub xmax: Option<f64>,
    pub ymin: Option<f64>,
    pub ymax: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapsConfig {
    pub file: Option<PathBuf>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub spacing: Option<f64>,
}

/// Where the normalizing-constant table lives and how to build it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableConfig {
    pub file: Option<PathBuf>,
    pub a_max: f64,
    pub a_points: usize,
    pub b_grid: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub n_samples: usize,
    /// Sweeps between successive recorded states.
    pub burn_in: usize,
    pub seed: u64,
    pub degree: usize,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            file: None,
            a_max: 3.0,
            a_points: 31,
            b_grid: (1..=10).map(f64::from).collect(),
            n_min: 100,
            n_max: 200,
            n_samples: 1000,
            burn_in: DEFAULT_BURN_IN,
            seed: 1,
            degree: DEFAULT_DEGREE,
        }
    }
}

/// Desk builds use 13 `a'` points, 200 recorded states and 5 sweeps
/// between states, keeping the configured `b`, `n`, seed and degree.
pub const DESK_A_POINTS: usize = 13;
pub const DESK_SAMPLES: usize = 200;
pub const DESK_SWEEPS: usize = 5;

impl TableConfig {
    pub fn grid(&self, desk: bool) -> GridSpec {
        let points = if desk { DESK_A_POINTS } else { self.a_points };
        GridSpec {
            a_grid: a_grid(self.a_max, points),
            b_grid: self.b_grid.clone(),
            n_grid: (self.n_min..=self.n_max).collect(),
        }
    }

    pub fn build_options(&self, desk: bool) -> BuildOptions {
        BuildOptions {
            n_samples: if desk { DESK_SAMPLES } else { self.n_samples },
            burn_in: if desk { DESK_SWEEPS } else { self.burn_in },
            seed: self.seed,
            degree: self.degree,
        }
    }
}

/// Simulation-study settings; one study is run per value of `a_values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub a_values: Vec<f64>,
    pub b_true: f64,
    pub n_true: usize,
    pub lambda: f64,
    pub rho: f64,
    pub occasions: usize,
    pub replicates: usize,
    pub seed: u64,
    pub strauss_burn_in: usize,
    pub periods: Option<PeriodDesign>,
    /// 50,000 / 10,000 chains and 100 replicates instead of the
    /// 10,000 / 2,000, 20-replicate desk scale.
    pub paper_scale: bool,
    /// Overrides the chain length implied by the scale.
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
}

impl Default for DesignConfig {
    fn default() -> Self {
        let d = SimDesign::default();
        Self {
            a_values: vec![0.0, 1.0, 2.0],
            b_true: d.b_true,
            n_true: d.n_true,
            lambda: d.lambda,
            rho: d.rho,
            occasions: d.occasions,
            replicates: d.replicates,
            seed: d.seed,
            strauss_burn_in: d.strauss_burn_in,
            periods: None,
            paper_scale: false,
            iterations: None,
            burn_in: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub traps: TrapsConfig,
    #[serde(default)]
    pub priors: Priors,
    #[serde(default)]
    pub table: TableConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub design: Option<DesignConfig>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            domain: DomainConfig::default(),
            traps: TrapsConfig::default(),
            priors: Priors::default(),
            table: TableConfig::default(),
            chain: ChainConfig::default(),
            design: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Parses and validates a config document; relative paths resolve
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Self::from_toml_str(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let t = &self.traps;
        let grid_keys = [t.rows.is_some(), t.cols.is_some(), t.spacing.is_some()];
        match (&t.file, grid_keys) {
            (Some(_), [false, false, false]) | (None, [true, true, true]) | (None, [false, false, false]) => {}
            _ => {
                return Err(Error::Config(
                    "[traps] takes either `file` or all of `rows`, `cols`, `spacing`".into(),
                ))
            }
        }
        let d = &self.domain;
        let bounds = [d.xmin, d.xmax, d.ymin, d.ymax];
        if d.buffer.is_some() && bounds.iter().any(Option::is_some) {
            return Err(Error::Config("[domain] takes either `buffer` or explicit bounds, not both".into()));
        }
        if bounds.iter().any(Option::is_some) && !bounds.iter().all(Option::is_some) {
            return Err(Error::Config("[domain] bounds need all of xmin, xmax, ymin, ymax".into()));
        }
        self.priors.validate()?;
        self.chain.validate()?;
        let tb = &self.table;
        if tb.n_min > tb.n_max || tb.a_points == 0 || !(tb.a_max > 0.0) {
            return Err(Error::Config("[table] needs n_min <= n_max, a_points >= 1 and a_max > 0".into()));
        }
        self.table.grid(false).validate()?;
        for p in self.referenced_files() {
            if !p.exists() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        if let Some(design) = &self.design {
            if design.a_values.is_empty() {
                return Err(Error::Config("[design] a_values is empty".into()));
            }
            for d in self.sim_designs()? {
                d.validate()?;
            }
        }
        Ok(())
    }

    /// Input files named by the config.
    pub fn referenced_files(&self) -> Vec<PathBuf> {
        [&self.traps.file, &self.table.file]
            .into_iter()
            .flatten()
            .map(|p| self.resolve(p))
            .collect()
    }

    pub fn table_path(&self) -> Option<PathBuf> {
        self.table.file.as_ref().map(|p| self.resolve(p))
    }

    /// Traps from `[traps]`; a grid centered on the origin when given by
    /// dimensions, the default 12 x 16 grid at 7 m when absent.
    pub fn trap_array(&self) -> Result<TrapArray> {
        let t = &self.traps;
        match (&t.file, t.rows, t.cols, t.spacing) {
            (Some(f), ..) => TrapArray::read_csv(&self.resolve(f)),
            (None, Some(r), Some(c), Some(s)) => TrapArray::grid(r, c, s, Point::new(0.0, 0.0)),
            _ => {
                let d = SimDesign::default();
                TrapArray::grid(d.trap_rows, d.trap_cols, d.trap_spacing, Point::new(0.0, 0.0))
            }
        }
    }

    /// Domain from `[domain]`; defaults to a 15 m buffer around the traps.
    pub fn domain(&self, traps: &TrapArray) -> Result<Domain> {
        let d = &self.domain;
        match (d.xmin, d.xmax, d.ymin, d.ymax) {
            (Some(x0), Some(x1), Some(y0), Some(y1)) => Domain::new(x0, x1, y0, y1),
            _ => Domain::around_traps(traps, d.buffer.unwrap_or(SimDesign::default().buffer)),
        }
    }

    /// One design per `a` value, from `[design]` or its defaults. Traps
    /// must be a grid (or the default).
    pub fn sim_designs(&self) -> Result<Vec<SimDesign>> {
        let dc = self.design.clone().unwrap_or_default();
        if self.traps.file.is_some() {
            return Err(Error::Config("simulation designs need a trap grid, not a trap file".into()));
        }
        if self.domain.xmin.is_some() {
            return Err(Error::Config("simulation designs use a buffer around the traps".into()));
        }
        let base = SimDesign::default();
        let replicates = if dc.paper_scale && dc.replicates == base.replicates { 100 } else { dc.replicates };
        Ok(dc
            .a_values
            .iter()
            .map(|&a| SimDesign {
                a_true: a,
                b_true: dc.b_true,
                n_true: dc.n_true,
                n_max: self.priors.n_max,
                lambda: dc.lambda,
                rho: dc.rho,
                trap_rows: self.traps.rows.unwrap_or(base.trap_rows),
                trap_cols: self.traps.cols.unwrap_or(base.trap_cols),
                trap_spacing: self.traps.spacing.unwrap_or(base.trap_spacing),
                buffer: self.domain.buffer.unwrap_or(base.buffer),
                occasions: dc.occasions,
                replicates,
                seed: dc.seed,
                strauss_burn_in: dc.strauss_burn_in,
                periods: dc.periods.clone(),
            })
            .collect())
    }

    /// Chain settings for the study: `[chain]` with the length set by the
    /// design scale or its explicit overrides.
    pub fn study_fit(&self) -> Result<StudyFitConfig> {
        let dc = self.design.clone().unwrap_or_default();
        let base = if dc.paper_scale {
            StudyFitConfig::paper(self.priors.n_max)
        } else {
            StudyFitConfig::desk(self.priors.n_max)
        };
        let chain = ChainConfig {
            iterations: dc.iterations.unwrap_or(base.chain.iterations),
            burn_in: dc.burn_in.unwrap_or(base.chain.burn_in),
            ..self.chain.clone()
        };
        chain.validate()?;
        Ok(StudyFitConfig { priors: self.priors.clone(), chain })
    }

    /// Canonical TOML rendering, used for hashing.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text, Path::new("."))
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse("schema_version = 1\n").unwrap();
        assert_eq!(c.priors, Priors::default());
        assert_eq!(c.trap_array().unwrap().len(), 192);
        let dom = c.domain(&c.trap_array().unwrap()).unwrap();
        assert_eq!(dom.area(), 135.0 * 107.0);
        assert_eq!(c.table.grid(false), GridSpec::full());
        assert_eq!(c.table.grid(true), GridSpec::desk());
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(matches!(parse("schema_version = 2\n"), Err(Error::Config(_))));
        assert!(matches!(parse("schema_version = 1\nfoo = 3\n"), Err(Error::Config(_))));
        assert!(matches!(parse("schema_version = 1\n[priors]\nnmax = 3\n"), Err(Error::Config(_))));
        assert!(matches!(parse("schema_version = 1\n[chain]\nthin = 0\n"), Err(Error::Config(_))));
        assert!(matches!(parse("[chain]\nthin = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn missing_files_are_rejected() {
        let e = parse("schema_version = 1\n[traps]\nfile = \"does-not-exist.csv\"\n").unwrap_err();
        assert!(e.to_string().contains("does-not-exist.csv"));
        assert!(parse("schema_version = 1\n[traps]\nrows = 3\n").is_err());
        assert!(parse("schema_version = 1\n[domain]\nbuffer = 3.0\nxmin = 0.0\n").is_err());
    }

    #[test]
    fn designs_expand_over_a_values() {
        let c = parse(
            "schema_version = 1\n[priors]\nn_max = 220\n[design]\na_values = [0.0, 2.0]\nreplicates = 4\niterations = 300\nburn_in = 100\n",
        )
        .unwrap();
        let d = c.sim_designs().unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[1].a_true, 2.0);
        assert_eq!(d[0].n_max, 220);
        assert_eq!(d[0].replicates, 4);
        let fit = c.study_fit().unwrap();
        assert_eq!((fit.chain.iterations, fit.chain.burn_in), (300, 100));
        assert_eq!(fit.priors.n_max, 220);

        let paper = parse("schema_version = 1\n[design]\npaper_scale = true\n").unwrap();
        assert_eq!(paper.sim_designs().unwrap()[0].replicates, 100);
        assert_eq!(paper.study_fit().unwrap().chain.iterations, 50_000);
    }

    #[test]
    fn canonical_rendering_round_trips() {
        let c = parse("schema_version = 1\n[chain]\nseed = 9\n[design]\n").unwrap();
        let again = parse(&c.to_canonical_toml()).unwrap();
        assert_eq!(c, again);
    }
}
