//! Versioned JSON configuration of the reconstruction pipelines.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envelope::{SolverConfig, StencilConfig};
use crate::error::{CcxError, Result};
use crate::field::Module;
use crate::tasks::{NoiseSpec, PaddingMode, PaddingSpec, TestFunctionId};
use crate::transforms::{Engine, TransformParams};

/// Version of the configuration and report layout.
pub const SCHEMA_VERSION: u32 = 1;

fn cfg(msg: impl Into<String>) -> CcxError {
    CcxError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Levelset,
    Scatter,
    Inpaint,
    Denoise,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Levelset => "levelset",
            Task::Scatter => "scatter",
            Task::Inpaint => "inpaint",
            Task::Denoise => "denoise",
        }
    }
}

/// `"auto"` or a positive number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModuleArg {
    Value(f64),
    Word(String),
}

impl ModuleArg {
    pub fn resolve(&self) -> Result<Module> {
        match self {
            ModuleArg::Value(m) if m.is_finite() && *m > 0.0 => Ok(Module::Finite(*m)),
            ModuleArg::Value(m) => Err(cfg(format!("module must be positive and finite, got {m}"))),
            ModuleArg::Word(w) if w == "auto" => Ok(Module::AutoInfinity),
            ModuleArg::Word(w) => Err(cfg(format!("module must be a number or \"auto\", got {w:?}"))),
        }
    }
}

impl std::str::FromStr for ModuleArg {
    type Err = CcxError;

    fn from_str(s: &str) -> Result<Self> {
        let arg = match s.parse::<f64>() {
            Ok(v) => ModuleArg::Value(v),
            Err(_) => ModuleArg::Word(s.to_string()),
        };
        arg.resolve()?;
        Ok(arg)
    }
}

fn default_module() -> ModuleArg {
    ModuleArg::Word("auto".into())
}

fn default_tol() -> f64 {
    SolverConfig::default().tol
}

fn default_max_sweeps() -> usize {
    SolverConfig::default().max_sweeps
}

fn default_radius() -> usize {
    1
}

/// Scale, module and envelope solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSection {
    pub lambda: f64,
    #[serde(default = "default_module")]
    pub module: ModuleArg,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_radius")]
    pub stencil_radius: usize,
}

impl TransformSection {
    pub fn params(&self) -> Result<TransformParams> {
        let solver = SolverConfig { tol: self.tol, max_sweeps: self.max_sweeps, ..SolverConfig::default() };
        let p = TransformParams::new(self.lambda)
            .with_module(self.module.resolve()?)
            .with_engine(self.engine)
            .with_solver(solver)
            .with_stencil(StencilConfig::with_radius(self.stencil_radius)?);
        p.validate()?;
        Ok(p)
    }
}

/// Where the data comes from: a bundled test function on an `n x n` unit grid or a CSV field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Source {
    Function { id: TestFunctionId, grid: usize },
    Field(PathBuf),
}

/// Level values given explicitly or as `count` levels `min + k (max - min) / count`, `k = 1..count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Levels {
    Count(usize),
    Values(Vec<f64>),
}

/// A grey-scale image: the bundled photograph or a PGM file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ImageSource {
    Camera,
    Pgm(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub task: Task,
    pub transform: TransformSection,
    #[serde(default)]
    pub source: Option<Source>,
    #[serde(default)]
    pub levels: Option<Levels>,
    #[serde(default)]
    pub density: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Unsampled nodes added on each side of the computational grid; half the grid side by default.
    #[serde(default)]
    pub margin: Option<usize>,
    #[serde(default)]
    pub image: Option<ImageSource>,
    /// CSV mask of damaged pixels.
    #[serde(default)]
    pub damage: Option<PathBuf>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub padding: Option<PaddingSpec>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| cfg(format!("invalid configuration: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads and validates a configuration, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
        let mut c = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            c.rebase(dir);
        }
        c.check_paths()?;
        Ok(c)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(Source::Field(p)) = &mut self.source {
            fix(p);
        }
        if let Some(ImageSource::Pgm(p)) = &mut self.image {
            fix(p);
        }
        if let Some(p) = &mut self.damage {
            fix(p);
        }
    }

    /// Input files referenced by the configuration.
    pub fn inputs(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        if let Some(Source::Field(p)) = &self.source {
            out.push(p.as_path());
        }
        if let Some(ImageSource::Pgm(p)) = &self.image {
            out.push(p.as_path());
        }
        if let Some(p) = &self.damage {
            out.push(p.as_path());
        }
        out
    }

    pub fn check_paths(&self) -> Result<()> {
        for p in self.inputs() {
            if !p.is_file() {
                return Err(cfg(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(cfg(format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema)));
        }
        self.transform.params().map_err(|e| match e {
            CcxError::Config(_) => e,
            other => cfg(other.to_string()),
        })?;
        let need = |present: bool, key: &str| {
            if present {
                Ok(())
            } else {
                Err(cfg(format!("task {} needs `{key}`", self.task.name())))
            }
        };
        let forbid = |present: bool, key: &str| {
            if present {
                Err(cfg(format!("`{key}` does not apply to task {}", self.task.name())))
            } else {
                Ok(())
            }
        };
        match self.task {
            Task::Levelset | Task::Scatter => {
                need(self.source.is_some(), "source")?;
                forbid(self.image.is_some(), "image")?;
                forbid(self.damage.is_some(), "damage")?;
                forbid(self.noise.is_some(), "noise")?;
                forbid(self.padding.is_some(), "padding")?;
                if let Some(Source::Function { grid, .. }) = &self.source {
                    if *grid < 2 {
                        return Err(cfg(format!("grid must have at least 2 nodes per side, got {grid}")));
                    }
                }
                if self.task == Task::Levelset {
                    need(self.levels.is_some(), "levels")?;
                    forbid(self.density.is_some(), "density")?;
                    forbid(self.seed.is_some(), "seed")?;
                    match &self.levels {
                        Some(Levels::Count(0)) => return Err(cfg("levels.count must be positive")),
                        Some(Levels::Values(v)) if v.is_empty() => return Err(cfg("levels.values is empty")),
                        Some(Levels::Values(v)) if v.windows(2).any(|w| w[0] >= w[1]) => {
                            return Err(cfg("levels.values must be strictly increasing"))
                        }
                        _ => {}
                    }
                } else {
                    need(self.density.is_some(), "density")?;
                    forbid(self.levels.is_some(), "levels")?;
                    let d = self.density.unwrap_or(0.0);
                    if !(d > 0.0 && d <= 1.0) {
                        return Err(cfg(format!("density must lie in (0, 1], got {d}")));
                    }
                }
            }
            Task::Inpaint | Task::Denoise => {
                need(self.image.is_some(), "image")?;
                forbid(self.source.is_some(), "source")?;
                forbid(self.levels.is_some(), "levels")?;
                forbid(self.density.is_some(), "density")?;
                forbid(self.seed.is_some(), "seed")?;
                forbid(self.margin.is_some(), "margin")?;
                if self.task == Task::Inpaint {
                    need(self.damage.is_some(), "damage")?;
                    forbid(self.noise.is_some(), "noise")?;
                    forbid(self.padding.is_some(), "padding")?;
                } else {
                    need(self.noise.is_some(), "noise")?;
                    forbid(self.damage.is_some(), "damage")?;
                    let n = self.noise.as_ref().map_or(0.0, |n| n.density);
                    if !(n > 0.0 && n <= 1.0) {
                        return Err(cfg(format!("noise.density must lie in (0, 1], got {n}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn padding_or_default(&self) -> PaddingSpec {
        self.padding.unwrap_or(PaddingSpec { width: 0, mode: PaddingMode::Mirror })
    }
}
