//! Run configuration: a TOML file with dotted section keys.
//!
//! ```toml
//! config_version = 1
//! seed = 7
//! geometry.kind = "ellipsoid"
//! geometry.size = [1.0, 0.5, 0.5]
//! grid.cells = 16
//! solver.tol = 1e-8
//! ```
//!
//! Every key except `config_version` has a default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use magnetovar_core::energy::{AppliedField, EnergyTerms, MaterialParams};
use magnetovar_core::geometry::{Geometry, Surface};
use magnetovar_core::grid::GridSpec;
use magnetovar_core::magnetostatics::{Backend, SolverConfig};
use magnetovar_core::minimize::{Method, MinimizeConfig};
use magnetovar_core::thin_shell::{DeltaPolicy, GridPolicy, StudyConfig, SurfaceField};
use magnetovar_core::vec3::Vec3;
use serde::Deserialize;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Tolerances above this are accepted by `validate` only, with a warning.
pub const LOOSE_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Demag,
    Solve,
    ShellStudy,
    Oracle,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    /// If present, must match the command given on the command line.
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub minimize: MinimizeSection,
    #[serde(default)]
    pub shell: ShellSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    Ellipsoid,
    Box,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub kind: BodyKind,
    pub center: Vec3,
    /// Semi-axes of the ellipsoid or half extents of the box.
    pub size: Vec3,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection { kind: BodyKind::Ellipsoid, center: [0.0; 3], size: [1.0; 3] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Cells across the largest extent of the body.
    pub cells: usize,
    /// Explicit spacing; overrides `cells`.
    pub h: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { cells: 16, h: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKey {
    Iterative,
    Dense,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub pad_ratio: f64,
    pub backend: BackendKey,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection { tol: d.tol, max_iter: d.max_iter, pad_ratio: d.pad_ratio, backend: BackendKey::Iterative }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSection {
    pub q: f64,
    pub easy_axis: Vec3,
    pub h_applied: Vec3,
    /// Subset of `exchange`, `anisotropy`, `zeeman`, `stray`.
    pub terms: Vec<String>,
}

impl Default for MaterialSection {
    fn default() -> Self {
        MaterialSection {
            q: 0.0,
            easy_axis: [0.0, 0.0, 1.0],
            h_applied: [0.0; 3],
            terms: ["exchange", "anisotropy", "zeeman", "stray"].map(String::from).to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKey {
    ProjectedGradient,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKey {
    Random,
    Uniform,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeSection {
    pub method: MethodKey,
    pub step: f64,
    pub backtrack: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub initial: InitialKey,
    /// Direction of the uniform start.
    pub direction: Vec3,
}

impl Default for MinimizeSection {
    fn default() -> Self {
        let d = MinimizeConfig::default();
        MinimizeSection {
            method: MethodKey::ProjectedGradient,
            step: d.step,
            backtrack: d.backtrack,
            grad_tol: d.grad_tol,
            max_iter: d.max_iter,
            max_backtracks: d.max_backtracks,
            initial: InitialKey::Random,
            direction: [0.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere,
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum M0Kind {
    Uniform,
    Normal,
    Azimuthal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShellSection {
    pub surface: SurfaceKind,
    pub center: Vec3,
    pub radius: f64,
    pub major: f64,
    pub minor: f64,
    pub m0: M0Kind,
    pub m0_direction: Vec3,
    pub eps_list: Vec<f64>,
    /// Cells across the thickness `2 eps`.
    pub cells_across: f64,
    /// Fixed spacing; overrides `cells_across`.
    pub h: Option<f64>,
    /// Fixed recovery reach.
    pub delta: f64,
    /// Recovery reach `delta = delta_factor * eps`; overrides `delta`.
    pub delta_factor: Option<f64>,
    pub mesh_level: u32,
    pub t_nodes: usize,
    pub pad_ratio: f64,
}

impl Default for ShellSection {
    fn default() -> Self {
        let d = StudyConfig::default();
        let (cells, delta) = match (d.grid, d.delta) {
            (GridPolicy::CellsAcross { cells }, DeltaPolicy::Fixed { delta }) => (cells, delta),
            _ => (4.0, 0.75),
        };
        ShellSection {
            surface: SurfaceKind::Sphere,
            center: [0.0; 3],
            radius: 1.0,
            major: 1.0,
            minor: 0.4,
            m0: M0Kind::Uniform,
            m0_direction: [0.0, 0.0, 1.0],
            eps_list: vec![0.2, 0.1, 0.05],
            cells_across: cells,
            h: None,
            delta,
            delta_factor: None,
            mesh_level: d.mesh_level,
            t_nodes: d.t_nodes,
            pad_ratio: d.pad_ratio,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Random magnetizations for the solver checks.
    pub cases: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection { cases: 3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Random magnetizations compared in addition to the uniform one.
    pub cases: usize,
    /// Relative agreement required between dense and iterative energies.
    pub rel_tol: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { cases: 3, rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Write ASCII field dumps next to the tables.
    pub vtk: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, vtk: true }
    }
}

fn cfg_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(cfg_err)?;
        if cfg.config_version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config_version {} (expected {CONFIG_VERSION})",
                cfg.config_version
            )));
        }
        Ok(cfg)
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        let g = &self.geometry;
        let geom = match g.kind {
            BodyKind::Ellipsoid => Geometry::Ellipsoid { center: g.center, semi_axes: g.size },
            BodyKind::Box => Geometry::Box { center: g.center, half_extents: g.size },
        };
        geom.validate().map_err(cfg_err)?;
        Ok(geom)
    }

    pub fn spacing(&self, geom: &Geometry) -> Result<f64, CliError> {
        let h = match self.grid.h {
            Some(h) => h,
            None => {
                if self.grid.cells < 2 {
                    return Err(CliError::Config(format!("grid.cells must be at least 2, got {}", self.grid.cells)));
                }
                let e = geom.half_extent();
                2.0 * e.iter().cloned().fold(0.0, f64::max) / self.grid.cells as f64
            }
        };
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Config(format!("grid spacing must be positive, got {h}")));
        }
        Ok(h)
    }

    /// Grid around the configured body.
    pub fn body_grid(&self) -> Result<(Geometry, GridSpec), CliError> {
        let geom = self.geometry()?;
        let h = self.spacing(&geom)?;
        let grid = GridSpec::around(&geom, h, self.solver.pad_ratio).map_err(cfg_err)?;
        Ok((geom, grid))
    }

    /// Solver settings without the range check on `tol`.
    pub fn solver_unchecked(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            tol: s.tol,
            max_iter: s.max_iter,
            pad_ratio: s.pad_ratio,
            backend: match s.backend {
                BackendKey::Iterative => Backend::Iterative,
                BackendKey::Dense => Backend::DenseOracle,
            },
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, CliError> {
        let c = self.solver_unchecked();
        c.validate().map_err(cfg_err)?;
        Ok(c)
    }

    pub fn material(&self) -> Result<MaterialParams, CliError> {
        let m = &self.material;
        let mut terms = EnergyTerms { exchange: false, anisotropy: false, zeeman: false, stray: false };
        for t in &m.terms {
            match t.as_str() {
                "exchange" => terms.exchange = true,
                "anisotropy" => terms.anisotropy = true,
                "zeeman" => terms.zeeman = true,
                "stray" => terms.stray = true,
                other => return Err(CliError::Config(format!("unknown energy term {other:?}"))),
            }
        }
        let p = MaterialParams { q: m.q, easy_axis: m.easy_axis, h_applied: AppliedField::Uniform(m.h_applied), terms };
        p.validate().map_err(cfg_err)?;
        Ok(p)
    }

    pub fn minimizer(&self, seed: u64) -> Result<MinimizeConfig, CliError> {
        let m = &self.minimize;
        let c = MinimizeConfig {
            method: match m.method {
                MethodKey::ProjectedGradient => Method::ProjectedGradient,
                MethodKey::Joint => Method::JointAlternating,
            },
            step: m.step,
            backtrack: m.backtrack,
            grad_tol: m.grad_tol,
            max_iter: m.max_iter,
            max_backtracks: m.max_backtracks,
            seed,
        };
        c.validate().map_err(cfg_err)?;
        Ok(c)
    }

    pub fn surface(&self) -> Result<Surface, CliError> {
        let s = &self.shell;
        let surf = match s.surface {
            SurfaceKind::Sphere => Surface::Sphere { center: s.center, radius: s.radius },
            SurfaceKind::Torus => Surface::Torus { center: s.center, major: s.major, minor: s.minor },
        };
        surf.validate().map_err(cfg_err)?;
        Ok(surf)
    }

    pub fn surface_field(&self) -> Result<SurfaceField, CliError> {
        let f = match self.shell.m0 {
            M0Kind::Uniform => SurfaceField::Uniform(self.shell.m0_direction),
            M0Kind::Normal => SurfaceField::Normal,
            M0Kind::Azimuthal => SurfaceField::Azimuthal,
        };
        f.validate().map_err(cfg_err)?;
        Ok(f)
    }

    pub fn study(&self, threads: usize) -> Result<StudyConfig, CliError> {
        let s = &self.shell;
        let grid = match s.h {
            Some(h) if h > 0.0 => GridPolicy::Fixed { h },
            Some(h) => return Err(CliError::Config(format!("shell.h must be positive, got {h}"))),
            None if s.cells_across > 0.0 => GridPolicy::CellsAcross { cells: s.cells_across },
            None => return Err(CliError::Config("shell.cells_across must be positive".into())),
        };
        let delta = match s.delta_factor {
            Some(f) if f > 1.0 => DeltaPolicy::Proportional { factor: f },
            Some(f) => return Err(CliError::Config(format!("shell.delta_factor must exceed 1, got {f}"))),
            None if s.delta > 0.0 => DeltaPolicy::Fixed { delta: s.delta },
            None => return Err(CliError::Config("shell.delta must be positive".into())),
        };
        if s.t_nodes == 0 {
            return Err(CliError::Config("shell.t_nodes must be at least 1".into()));
        }
        if !(s.pad_ratio >= 0.0 && s.pad_ratio.is_finite()) {
            return Err(CliError::Config("shell.pad_ratio must be finite and >= 0".into()));
        }
        Ok(StudyConfig { grid, delta, mesh_level: s.mesh_level, t_nodes: s.t_nodes, pad_ratio: s.pad_ratio, threads })
    }
}

/// Worker-pool size: available parallelism, capped by `MAGNETOVAR_THREADS`.
pub fn thread_cap() -> Result<usize, CliError> {
    let avail = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("MAGNETOVAR_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("MAGNETOVAR_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(avail),
    }
}
