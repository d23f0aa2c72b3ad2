//! Flat INI-style run configuration: sections [domain], [current],
//! [physics], [run], [output] with typed keys. Unknown sections or keys are
//! errors so typos never silently fall back to defaults; every diagnostic
//! carries the line number and key name.

use crate::domain::CurrentProfile;
use crate::error::{GlError, Result};
use crate::tdgl::Stepper;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Initial order-parameter choice for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialData {
    /// |psi| = 1 tapered to zero at the contacts.
    Tapered,
    /// Seeded random |psi| <= 1.
    Random,
    /// psi = 0 (the normal state).
    Normal,
}

/// Current profile family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileFamily {
    Wire,
    Bump,
    Zero,
}

/// Fully resolved, validated run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    // [domain]
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    // [current]
    pub profile: ProfileFamily,
    pub j0: f64,
    // [physics]
    pub kappa: f64,
    pub c: f64,
    pub h_ex: f64,
    // [run]
    pub dt_factor: f64,
    pub tol: f64,
    pub t_max: f64,
    pub n_proj: usize,
    pub seed: u64,
    pub initial: InitialData,
    pub stepper: Stepper,
    // [output]
    pub out_dir: String,
    pub dump_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lx: 1.0,
            ly: 2.0,
            nx: 33,
            ny: 65,
            profile: ProfileFamily::Wire,
            j0: 4.0,
            kappa: 4.0,
            c: 1.0,
            h_ex: 0.0,
            dt_factor: 1.0,
            tol: 1e-5,
            t_max: 40.0,
            n_proj: 10,
            seed: 0,
            initial: InitialData::Tapered,
            stepper: Stepper::Explicit,
            out_dir: "out".into(),
            dump_every: 0,
        }
    }
}

impl RunConfig {
    /// The configured current profile.
    pub fn current_profile(&self) -> CurrentProfile {
        match self.profile {
            ProfileFamily::Wire => CurrentProfile::wire(self.j0),
            ProfileFamily::Bump => CurrentProfile::bump(self.j0),
            ProfileFamily::Zero => CurrentProfile::zero(),
        }
    }

    /// Deterministic key = value listing of the resolved configuration, for
    /// embedding in output files.
    pub fn resolved_pairs(&self) -> Vec<(String, String)> {
        let fam = match self.profile {
            ProfileFamily::Wire => "wire",
            ProfileFamily::Bump => "bump",
            ProfileFamily::Zero => "zero",
        };
        let init = match self.initial {
            InitialData::Tapered => "tapered",
            InitialData::Random => "random",
            InitialData::Normal => "normal",
        };
        let stepper = match self.stepper {
            Stepper::Explicit => "explicit",
            Stepper::SemiImplicit => "semi_implicit",
        };
        vec![
            ("domain.lx".into(), format!("{}", self.lx)),
            ("domain.ly".into(), format!("{}", self.ly)),
            ("domain.nx".into(), format!("{}", self.nx)),
            ("domain.ny".into(), format!("{}", self.ny)),
            ("current.profile".into(), fam.into()),
            ("current.j0".into(), format!("{}", self.j0)),
            ("physics.kappa".into(), format!("{}", self.kappa)),
            ("physics.c".into(), format!("{}", self.c)),
            ("physics.h_ex".into(), format!("{}", self.h_ex)),
            ("run.dt_factor".into(), format!("{}", self.dt_factor)),
            ("run.tol".into(), format!("{}", self.tol)),
            ("run.t_max".into(), format!("{}", self.t_max)),
            ("run.n_proj".into(), format!("{}", self.n_proj)),
            ("run.seed".into(), format!("{}", self.seed)),
            ("run.initial".into(), init.into()),
            ("run.stepper".into(), stepper.into()),
            ("output.dir".into(), self.out_dir.clone()),
            ("output.dump_every".into(), format!("{}", self.dump_every)),
        ]
    }

    fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: String| -> Result<()> {
            Err(GlError::Config(format!("{key}: {why}")))
        };
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return bad("domain.lx/domain.ly", "side lengths must be positive".into());
        }
        if self.nx < 3 || self.ny < 3 {
            return bad("domain.nx/domain.ny", "need at least 3 nodes per side".into());
        }
        let hx = self.lx / (self.nx - 1) as f64;
        let hy = self.ly / (self.ny - 1) as f64;
        if ((hx - hy) / hx).abs() > 1e-9 {
            return bad(
                "domain.nx/domain.ny",
                format!(
                    "the mesh must be square: lx/(nx-1) = {hx} but ly/(ny-1) = {hy}; \
                     pick nx, ny with (nx-1)/(ny-1) = lx/ly"
                ),
            );
        }
        if self.kappa < 1.0 {
            return bad("physics.kappa", format!("must be >= 1, got {}", self.kappa));
        }
        if !(self.c > 0.0) {
            return bad("physics.c", format!("must be positive, got {}", self.c));
        }
        if !(self.j0 >= 0.0) {
            return bad("current.j0", format!("must be nonnegative, got {}", self.j0));
        }
        if !(self.dt_factor > 0.0) {
            return bad("run.dt_factor", format!("must be positive, got {}", self.dt_factor));
        }
        if !(self.tol > 0.0) {
            return bad("run.tol", format!("must be positive, got {}", self.tol));
        }
        if !(self.t_max > 0.0) {
            return bad("run.t_max", format!("must be positive, got {}", self.t_max));
        }
        if self.n_proj == 0 {
            return bad("run.n_proj", "must be at least 1".into());
        }
        Ok(())
    }
}

fn parse_typed<T: std::str::FromStr>(key: &str, line: usize, raw: &str) -> Result<T> {
    raw.parse::<T>().map_err(|_| {
        GlError::Config(format!(
            "line {line}: key '{key}' has invalid value '{raw}' (expected {})",
            std::any::type_name::<T>()
        ))
    })
}

/// Parse a configuration from INI text. Missing keys keep their defaults;
/// unknown sections or keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find(['#', ';']) {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                GlError::Config(format!("line {line_no}: unterminated section header '{line}'"))
            })?;
            section = name.trim().to_string();
            if !matches!(section.as_str(), "domain" | "current" | "physics" | "run" | "output")
            {
                return Err(GlError::Config(format!(
                    "line {line_no}: unknown section '[{section}]'"
                )));
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            GlError::Config(format!("line {line_no}: expected 'key = value', got '{line}'"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if section.is_empty() {
            return Err(GlError::Config(format!(
                "line {line_no}: key '{key}' appears before any [section] header"
            )));
        }
        let full = format!("{section}.{key}");
        if let Some(prev) = seen.insert(full.clone(), line_no) {
            return Err(GlError::Config(format!(
                "line {line_no}: key '{full}' already set on line {prev}"
            )));
        }
        match full.as_str() {
            "domain.lx" => cfg.lx = parse_typed(&full, line_no, value)?,
            "domain.ly" => cfg.ly = parse_typed(&full, line_no, value)?,
            "domain.nx" => cfg.nx = parse_typed(&full, line_no, value)?,
            "domain.ny" => cfg.ny = parse_typed(&full, line_no, value)?,
            "current.profile" => {
                cfg.profile = match value {
                    "wire" => ProfileFamily::Wire,
                    "bump" => ProfileFamily::Bump,
                    "zero" => ProfileFamily::Zero,
                    other => {
                        return Err(GlError::Config(format!(
                            "line {line_no}: current.profile must be wire|bump|zero, got '{other}'"
                        )))
                    }
                }
            }
            "current.j0" => cfg.j0 = parse_typed(&full, line_no, value)?,
            "physics.kappa" => cfg.kappa = parse_typed(&full, line_no, value)?,
            "physics.c" => cfg.c = parse_typed(&full, line_no, value)?,
            "physics.h_ex" => cfg.h_ex = parse_typed(&full, line_no, value)?,
            "run.dt_factor" => cfg.dt_factor = parse_typed(&full, line_no, value)?,
            "run.tol" => cfg.tol = parse_typed(&full, line_no, value)?,
            "run.t_max" => cfg.t_max = parse_typed(&full, line_no, value)?,
            "run.n_proj" => cfg.n_proj = parse_typed(&full, line_no, value)?,
            "run.seed" => cfg.seed = parse_typed(&full, line_no, value)?,
            "run.initial" => {
                cfg.initial = match value {
                    "tapered" => InitialData::Tapered,
                    "random" => InitialData::Random,
                    "normal" => InitialData::Normal,
                    other => {
                        return Err(GlError::Config(format!(
                            "line {line_no}: run.initial must be tapered|random|normal, got '{other}'"
                        )))
                    }
                }
            }
            "run.stepper" => {
                cfg.stepper = match value {
                    "explicit" => Stepper::Explicit,
                    "semi_implicit" => Stepper::SemiImplicit,
                    other => {
                        return Err(GlError::Config(format!(
                            "line {line_no}: run.stepper must be explicit|semi_implicit, got '{other}'"
                        )))
                    }
                }
            }
            "output.dir" => cfg.out_dir = value.to_string(),
            "output.dump_every" => cfg.dump_every = parse_typed(&full, line_no, value)?,
            _ => {
                return Err(GlError::Config(format!(
                    "line {line_no}: unknown key '{key}' in section '[{section}]'"
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Read and parse a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GlError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}
