//! Lower and upper compensated convex transforms and the average approximation operator.

use serde::{Deserialize, Serialize};

use crate::envelope::{convex_envelope, Envelope, EnvelopeReport, SolverConfig, StencilConfig};
use crate::error::{CcxError, Result};
use crate::field::{extend, GridSpec, Module, SampleMask, SampledFunction, ScalarField, Sign};
use crate::hull;

/// Algorithm used for the convex envelope inside each transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Lower convex hull of the lifted grid points, exact up to rounding of the final plane
    /// evaluation.
    #[default]
    Exact,
    /// Gauss-Seidel stencil iteration.
    Stencil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub lambda: f64,
    pub module: Module,
    pub stencil: StencilConfig,
    pub solver: SolverConfig,
    pub engine: Engine,
}

impl TransformParams {
    pub fn new(lambda: f64) -> Self {
        TransformParams {
            lambda,
            module: Module::AutoInfinity,
            stencil: StencilConfig::default(),
            solver: SolverConfig::default(),
            engine: Engine::Exact,
        }
    }

    pub fn with_module(mut self, module: Module) -> Self {
        self.module = module;
        self
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_stencil(mut self, stencil: StencilConfig) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(CcxError::InvalidLambda(self.lambda));
        }
        if let Module::Finite(m) = self.module {
            if !(m > 0.0 && m.is_finite()) {
                return Err(CcxError::ModuleTooSmall { m, max_abs: 0.0 });
            }
        }
        self.stencil.validate()?;
        self.solver.validate()
    }
}

/// A transformed field with the envelope solver report.
///
/// The exact engine reports zero sweeps and zero residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub field: ScalarField,
    pub report: EnvelopeReport,
}

/// Result of the average approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Average {
    pub field: ScalarField,
    pub m_used: f64,
    pub lower: EnvelopeReport,
    pub upper: EnvelopeReport,
}

fn exact_report() -> EnvelopeReport {
    EnvelopeReport { sweeps_used: 0, final_residual: 0.0, converged: true, omega: 1.0 }
}

/// Convex envelope of `f` with the engine selected in `p`.
pub fn envelope_with(f: &ScalarField, p: &TransformParams) -> Result<Envelope> {
    match p.engine {
        Engine::Stencil => convex_envelope(f, &p.stencil, &p.solver),
        Engine::Exact => {
            if let Some(k) = f.values.iter().position(|v| !v.is_finite()) {
                return Err(CcxError::NonFiniteValue(k));
            }
            let values = hull::lower_envelope_lattice(f.spec.nx, f.spec.ny, &f.values);
            Ok(Envelope { field: ScalarField { spec: f.spec, values }, report: exact_report() })
        }
    }
}

fn quadratic(spec: &GridSpec, lambda: f64) -> Vec<f64> {
    (0..spec.len())
        .map(|k| {
            let (i, j) = spec.ij(k);
            lambda * spec.centered_sq(i, j)
        })
        .collect()
}

/// `co[lambda |x - c|^2 + f] - lambda |x - c|^2` with `c` the grid centre.
pub fn lower_transform(f: &ScalarField, p: &TransformParams) -> Result<Transformed> {
    p.validate()?;
    let q = quadratic(&f.spec, p.lambda);
    let lifted: Vec<f64> = f.values.iter().zip(&q).map(|(v, w)| v + w).collect();
    let lifted = ScalarField::new(f.spec, lifted)?;
    let unlift = |env: Envelope| {
        let values = env.field.values.iter().zip(&q).map(|(v, w)| v - w).collect();
        Transformed { field: ScalarField { spec: f.spec, values }, report: env.report }
    };
    match envelope_with(&lifted, p) {
        Ok(env) => Ok(unlift(env)),
        Err(CcxError::NotConverged(env)) => {
            let t = unlift(*env);
            Err(CcxError::NotConverged(Box::new(Envelope { field: t.field, report: t.report })))
        }
        Err(e) => Err(e),
    }
}

/// `lambda |x - c|^2 - co[lambda |x - c|^2 - f]`, computed as `-lower_transform(-f)`.
pub fn upper_transform(f: &ScalarField, p: &TransformParams) -> Result<Transformed> {
    let neg = f.map(|v| -v);
    match lower_transform(&neg, p) {
        Ok(t) => Ok(Transformed { field: t.field.map(|v| -v), report: t.report }),
        Err(CcxError::NotConverged(env)) => {
            let env = *env;
            Err(CcxError::NotConverged(Box::new(Envelope { field: env.field.map(|v| -v), report: env.report })))
        }
        Err(e) => Err(e),
    }
}

/// Automatic module: `1.5 (lambda d^2 + A0)` with `d` the diameter of the grid box.
pub fn auto_module(spec: &GridSpec, lambda: f64, a0: f64) -> f64 {
    let d = spec.diameter();
    1.5 * (lambda * d * d + a0)
}

/// Concrete module used for `sf` under `p`.
pub fn resolve_module(sf: &SampledFunction, p: &TransformParams) -> Result<f64> {
    match p.module {
        Module::Finite(m) => {
            sf.check_module(m)?;
            Ok(m)
        }
        Module::AutoInfinity => {
            let m = auto_module(&sf.spec(), p.lambda, sf.max_abs());
            // a constant zero sample on a single node grid still needs a positive sentinel
            Ok(if m > 0.0 { m } else { 1.0 })
        }
    }
}

/// `(C^l(f_K^M) + C^u(f_K^-M)) / 2` on the grid of `sf`.
pub fn average_approximation(sf: &SampledFunction, p: &TransformParams) -> Result<Average> {
    p.validate()?;
    let m = resolve_module(sf, p)?;
    let spec = sf.spec();
    let mut samples = sf.samples();
    if let (Some((_, v)), None) = (samples.next(), samples.next()) {
        return Ok(Average {
            field: ScalarField::constant(spec, v),
            m_used: m,
            lower: exact_report(),
            upper: exact_report(),
        });
    }
    let plus = extend(sf, Sign::Plus, Some(m))?;
    let minus = extend(sf, Sign::Minus, Some(m))?;
    let (lo, up) = rayon::join(|| lower_transform(&plus, p), || upper_transform(&minus, p));
    let (lo_field, lo_rep, lo_ok) = split(lo)?;
    let (up_field, up_rep, up_ok) = split(up)?;
    let values = lo_field.values.iter().zip(&up_field.values).map(|(a, b)| 0.5 * (a + b)).collect();
    let avg = Average { field: ScalarField { spec, values }, m_used: m, lower: lo_rep, upper: up_rep };
    if lo_ok && up_ok {
        Ok(avg)
    } else {
        let report = if lo_ok { avg.upper } else { avg.lower };
        Err(CcxError::NotConverged(Box::new(Envelope { field: avg.field, report })))
    }
}

fn split(r: Result<Transformed>) -> Result<(ScalarField, EnvelopeReport, bool)> {
    match r {
        Ok(t) => Ok((t.field, t.report, true)),
        Err(CcxError::NotConverged(env)) => Ok((env.field, env.report, false)),
        Err(e) => Err(e),
    }
}

/// Largest deviation on the line between the transforms of a one-dimensional sample embedded
/// in a two-dimensional grid and the transforms computed directly in one dimension.
///
/// The line becomes the middle row of a five-row grid whose other rows carry `+-M`.
pub fn restriction_check(sf_1d: &SampledFunction, p: &TransformParams) -> Result<f64> {
    let spec = sf_1d.spec();
    if !spec.is_1d() {
        return Err(CcxError::InvalidGrid("restriction check needs a one-dimensional grid".into()));
    }
    let n = spec.len();
    let rows = 5;
    let mid = rows / 2;
    let spec2 = GridSpec::new(n, rows, spec.x0, spec.y0 - mid as f64 * spec.h, spec.h)?;
    let m = match p.module {
        Module::Finite(m) => {
            sf_1d.check_module(m)?;
            m
        }
        Module::AutoInfinity => auto_module(&spec2, p.lambda, sf_1d.max_abs()).max(1.0),
    };
    let line = GridSpec::new(n, 1, spec.x0, spec.y0, spec.h)?;
    let opts = sf_1d.to_options();
    let sf_line = SampledFunction::from_options(line, &opts, Module::Finite(m))?;
    let mut opts2 = vec![None; spec2.len()];
    for (k, v) in opts.iter().enumerate() {
        opts2[spec2.index(k, mid)] = *v;
    }
    let sf2 = SampledFunction::from_options(spec2, &opts2, Module::Finite(m))?;
    let mut dev = 0.0f64;
    for sign in [Sign::Plus, Sign::Minus] {
        let f1 = extend(&sf_line, sign, Some(m))?;
        let f2 = extend(&sf2, sign, Some(m))?;
        let (t1, t2) = match sign {
            Sign::Plus => (lower_transform(&f1, p)?, lower_transform(&f2, p)?),
            Sign::Minus => (upper_transform(&f1, p)?, upper_transform(&f2, p)?),
        };
        for k in 0..n {
            dev = dev.max((t1.field.values[k] - t2.field.values[spec2.index(k, mid)]).abs());
        }
    }
    Ok(dev)
}

/// Sample mask of all nodes.
pub fn full_mask(spec: GridSpec) -> SampleMask {
    SampleMask { spec, member: vec![true; spec.len()] }
}
