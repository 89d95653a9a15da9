//! Iterative stencil computation of the convex envelope of a grid function.
//!
//! Each node is repeatedly replaced by the minimum of its input value and the convex
//! combinations of opposite neighbours along the stencil directions, sweeping forward and
//! backward in Gauss-Seidel order until the relative L2 change of a sweep drops below `tol`.

use serde::{Deserialize, Serialize};

use crate::error::{CcxError, Result};
use crate::field::ScalarField;
use crate::hull;

/// Stencil radius and the primitive offset directions it uses.
///
/// Each direction `r` stands for the pair `{r, -r}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StencilConfig {
    pub radius: usize,
    pub directions: Vec<(i32, i32)>,
}

impl Default for StencilConfig {
    fn default() -> Self {
        Self::with_radius(1).expect("radius 1 is valid")
    }
}

impl StencilConfig {
    /// All primitive directions with max-norm at most `radius`, one per opposite pair.
    ///
    /// For radius 1 this is `[(1,0), (0,1), (1,1), (1,-1)]`.
    pub fn with_radius(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(CcxError::InvalidStencil("radius must be positive".into()));
        }
        let s = radius as i32;
        let mut dirs = vec![(1, 0), (0, 1), (1, 1), (1, -1)];
        for norm in 2..=s {
            for a in -norm..=norm {
                for b in -norm..=norm {
                    if a.abs().max(b.abs()) != norm || gcd(a.abs(), b.abs()) != 1 {
                        continue;
                    }
                    if a > 0 || (a == 0 && b > 0) {
                        dirs.push((a, b));
                    }
                }
            }
        }
        let st = StencilConfig { radius, directions: dirs };
        st.validate()?;
        Ok(st)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(CcxError::InvalidStencil("radius must be positive".into()));
        }
        if self.directions.is_empty() {
            return Err(CcxError::InvalidStencil("direction list is empty".into()));
        }
        for (n, &(a, b)) in self.directions.iter().enumerate() {
            if (a, b) == (0, 0) {
                return Err(CcxError::InvalidStencil("zero direction".into()));
            }
            if gcd(a.abs(), b.abs()) != 1 {
                return Err(CcxError::InvalidStencil(format!("({a},{b}) is not primitive")));
            }
            if a.abs().max(b.abs()) as usize > self.radius {
                return Err(CcxError::InvalidStencil(format!("({a},{b}) exceeds the radius")));
            }
            for &(c, d) in &self.directions[..n] {
                if (c, d) == (a, b) || (c, d) == (-a, -b) {
                    return Err(CcxError::InvalidStencil(format!("({a},{b}) is repeated")));
                }
            }
        }
        Ok(())
    }
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    #[default]
    ForwardBackward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Clamp,
}

/// Relaxation factor for the node update `g <- min(f, g + w (c - g))`.
///
/// `Auto` picks the optimal SOR factor `2 / (1 + sin(pi / (n - 1)))` on one-dimensional grids
/// with radius 1, where the update is projected SOR for a tridiagonal obstacle problem, and
/// plain Gauss-Seidel (`w = 1`) otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relaxation {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    pub sweep_order: SweepOrder,
    pub boundary: Boundary,
    pub relaxation: Relaxation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_sweeps: 1_000_000,
            sweep_order: SweepOrder::ForwardBackward,
            boundary: Boundary::Clamp,
            relaxation: Relaxation::Auto,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig { tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CcxError::InvalidSolver(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(CcxError::InvalidSolver("max_sweeps must be at least 1".into()));
        }
        if let Relaxation::Fixed(w) = self.relaxation {
            if !(w > 0.0 && w < 2.0) {
                return Err(CcxError::InvalidSolver(format!("relaxation must lie in (0, 2), got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub sweeps_used: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub field: ScalarField,
    pub report: EnvelopeReport,
}

struct Pair {
    da: isize,
    db: isize,
    ai: i64,
    aj: i64,
    bi: i64,
    bj: i64,
    wa: f64,
    wb: f64,
}

/// Convex envelope of `f` on its grid with respect to the stencil directions.
///
/// Returns `CcxError::NotConverged` carrying the last iterate when `max_sweeps` is exhausted.
pub fn convex_envelope(f: &ScalarField, stencil: &StencilConfig, cfg: &SolverConfig) -> Result<Envelope> {
    stencil.validate()?;
    cfg.validate()?;
    if let Some(k) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(CcxError::NonFiniteValue(k));
    }
    let spec = f.spec;
    let (nx, ny) = (spec.nx as i64, spec.ny as i64);

    let mut pairs = Vec::new();
    for &(dx, dy) in &stencil.directions {
        let tmax = stencil.radius as i64 / (dx.abs().max(dy.abs()) as i64);
        for t1 in 1..=tmax {
            for t2 in 1..=tmax {
                let (ai, aj) = (t1 * dx as i64, t1 * dy as i64);
                let (bi, bj) = (-t2 * dx as i64, -t2 * dy as i64);
                if (ai.abs() >= nx && ai != 0) || (aj.abs() >= ny && aj != 0) {
                    continue;
                }
                if (bi.abs() >= nx && bi != 0) || (bj.abs() >= ny && bj != 0) {
                    continue;
                }
                let s = (t1 + t2) as f64;
                pairs.push(Pair {
                    da: (aj * nx + ai) as isize,
                    db: (bj * nx + bi) as isize,
                    ai,
                    aj,
                    bi,
                    bj,
                    wa: t2 as f64 / s,
                    wb: t1 as f64 / s,
                });
            }
        }
    }

    let omega = match cfg.relaxation {
        Relaxation::Fixed(w) => w,
        Relaxation::Auto if spec.is_1d() && stencil.radius == 1 => {
            let n = spec.nx.max(spec.ny);
            if n > 2 {
                2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin())
            } else {
                1.0
            }
        }
        Relaxation::Auto => 1.0,
    };

    let fv = &f.values;
    let mut g = fv.clone();
    let norm0 = fv.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut prev = g.clone();
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;

    let update = |g: &mut [f64], i: i64, j: i64| {
        let k = (j * nx + i) as usize;
        let gc = g[k];
        let mut c = fv[k];
        for p in &pairs {
            let (ai, aj, bi, bj) = (i + p.ai, j + p.aj, i + p.bi, j + p.bj);
            if ai < 0 || ai >= nx || aj < 0 || aj >= ny || bi < 0 || bi >= nx || bj < 0 || bj >= ny {
                continue;
            }
            let ga = g[(k as isize + p.da) as usize];
            let gb = g[(k as isize + p.db) as usize];
            let v = gc + (p.wa * (ga - gc) + p.wb * (gb - gc));
            if v < c {
                c = v;
            }
        }
        let next = if omega == 1.0 { c } else { gc + omega * (c - gc) };
        g[k] = next.min(fv[k]);
    };

    while sweeps < cfg.max_sweeps {
        prev.copy_from_slice(&g);
        for j in 0..ny {
            for i in 0..nx {
                update(&mut g, i, j);
            }
        }
        for j in (0..ny).rev() {
            for i in (0..nx).rev() {
                update(&mut g, i, j);
            }
        }
        sweeps += 1;
        let change = g.iter().zip(&prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        residual = change / norm0;
        if residual <= cfg.tol {
            break;
        }
    }

    let converged = residual <= cfg.tol;
    let env = Envelope {
        field: ScalarField { spec, values: g },
        report: EnvelopeReport { sweeps_used: sweeps, final_residual: residual, converged, omega },
    };
    if converged {
        Ok(env)
    } else {
        Err(CcxError::NotConverged(Box::new(env)))
    }
}

/// Exact lower convex hull values of the points `(xs[i], fs[i])`, evaluated at `xs`.
pub fn brute_force_envelope_1d(xs: &[f64], fs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() != fs.len() {
        return Err(CcxError::GridMismatch("xs and fs differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(CcxError::InvalidGrid("need at least two points".into()));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CcxError::UnsortedInput);
    }
    Ok(hull::lower_hull_1d(xs, fs))
}
