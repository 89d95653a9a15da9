//! Closed-form transforms and average approximations of the worked prototype examples, and
//! grid versions of their sample sets for comparison with the numerical pipeline.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{CcxError, Result};
use crate::field::{crossing_nodes, snap_points, GridSpec, Module, SampledFunction, ScalarField};

/// A prototype example together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum PrototypeId {
    /// `sign(x)` on the real line.
    SignJump1D { lambda: f64 },
    /// Corners of `[-1,1]^2` with `+1` at `(1,-1), (-1,1)` and `-1` at `(1,1), (-1,-1)`.
    FourPoint { lambda: f64 },
    /// Eight points `e^{i k pi/4}` on the unit circle with values `(-1)^k`.
    EightPoint { lambda: f64 },
    /// Diagonals with `-x^2` on `y = x` and `y^2` on `y = -x`.
    CrossParabolas { lambda: f64 },
    /// Axes with `|x|` on `y = 0` and `-|y|` on `x = 0`.
    CrossAbs { lambda: f64 },
    /// Segments `x = +-r, |y| <= h` carrying `1 - |y|`.
    TwoGables { lambda: f64, r: f64, h: f64 },
    /// Boundary of `[-r,r] x [-h,h]` with `h - |y|` on the gables and `0` on the eaves.
    RoofBox { lambda: f64, r: f64, h: f64 },
    /// Boundary of `[-r,r] x [-h,h]` carrying `sign(x)`.
    JumpStrip { lambda: f64, r: f64, h: f64 },
    /// Circles of radii `r < big_r` carrying `m` (inner) and `0` (outer).
    AnnulusLevels { lambda: f64, r: f64, big_r: f64, m: f64 },
    /// Nested wedges `|y| = a x` (value 1) and its shifted copy (value 2).
    WedgeLevels { lambda: f64, a: f64 },
    /// Rays `y = -alpha x` (value `m`) and `y = alpha x` (value `-m`).
    FanJump { lambda: f64, alpha: f64, m: f64 },
}

impl PrototypeId {
    pub fn name(&self) -> &'static str {
        match self {
            PrototypeId::SignJump1D { .. } => "sign_jump_1d",
            PrototypeId::FourPoint { .. } => "four_point",
            PrototypeId::EightPoint { .. } => "eight_point",
            PrototypeId::CrossParabolas { .. } => "cross_parabolas",
            PrototypeId::CrossAbs { .. } => "cross_abs",
            PrototypeId::TwoGables { .. } => "two_gables",
            PrototypeId::RoofBox { .. } => "roof_box",
            PrototypeId::JumpStrip { .. } => "jump_strip",
            PrototypeId::AnnulusLevels { .. } => "annulus_levels",
            PrototypeId::WedgeLevels { .. } => "wedge_levels",
            PrototypeId::FanJump { .. } => "fan_jump",
        }
    }

    /// Example with the default geometry for `name` and the given scale.
    pub fn from_name(name: &str, lambda: f64) -> Result<Self> {
        Ok(match name {
            "sign_jump_1d" => PrototypeId::SignJump1D { lambda },
            "four_point" => PrototypeId::FourPoint { lambda },
            "eight_point" => PrototypeId::EightPoint { lambda },
            "cross_parabolas" => PrototypeId::CrossParabolas { lambda },
            "cross_abs" => PrototypeId::CrossAbs { lambda },
            "two_gables" => PrototypeId::TwoGables { lambda, r: 1.0, h: 1.0 },
            "roof_box" => PrototypeId::RoofBox { lambda, r: 0.9, h: 1.0 },
            "jump_strip" => PrototypeId::JumpStrip { lambda, r: 1.0, h: 0.6 },
            "annulus_levels" => PrototypeId::AnnulusLevels { lambda, r: 1.0, big_r: 2.0, m: 5.0 },
            "wedge_levels" => PrototypeId::WedgeLevels { lambda, a: 1.0 },
            "fan_jump" => PrototypeId::FanJump { lambda, alpha: 0.25, m: 1.0 },
            other => return Err(CcxError::Config(format!("unknown prototype {other:?}"))),
        })
    }

    pub const NAMES: [&'static str; 11] = [
        "sign_jump_1d",
        "four_point",
        "eight_point",
        "cross_parabolas",
        "cross_abs",
        "two_gables",
        "roof_box",
        "jump_strip",
        "annulus_levels",
        "wedge_levels",
        "fan_jump",
    ];

    pub fn lambda(&self) -> f64 {
        match *self {
            PrototypeId::SignJump1D { lambda }
            | PrototypeId::FourPoint { lambda }
            | PrototypeId::EightPoint { lambda }
            | PrototypeId::CrossParabolas { lambda }
            | PrototypeId::CrossAbs { lambda }
            | PrototypeId::TwoGables { lambda, .. }
            | PrototypeId::RoofBox { lambda, .. }
            | PrototypeId::JumpStrip { lambda, .. }
            | PrototypeId::AnnulusLevels { lambda, .. }
            | PrototypeId::WedgeLevels { lambda, .. }
            | PrototypeId::FanJump { lambda, .. } => lambda,
        }
    }

    /// Checks the parameter ranges under which the closed forms hold.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CcxError::ParamOutOfRange(msg));
        let lambda = self.lambda();
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CcxError::InvalidLambda(lambda));
        }
        match *self {
            PrototypeId::CrossParabolas { lambda } if lambda <= 0.5 => bad(format!("need lambda > 1/2, got {lambda}")),
            PrototypeId::TwoGables { lambda, r, h } => {
                if !(r > 0.0 && h > 0.0) {
                    bad("r and h must be positive".into())
                } else if lambda <= 1.0 / (2.0 * h) {
                    bad(format!("need lambda > 1/(2h) = {}", 1.0 / (2.0 * h)))
                } else {
                    Ok(())
                }
            }
            PrototypeId::RoofBox { r, h, .. } | PrototypeId::JumpStrip { r, h, .. } if !(r > 0.0 && h > 0.0) => {
                bad("r and h must be positive".into())
            }
            PrototypeId::AnnulusLevels { lambda, r, big_r, m } => {
                if !(0.0 < r && r < big_r && m > 0.0) {
                    bad("need 0 < r < R and M > 0".into())
                } else if lambda <= m / (big_r * big_r - r * r) {
                    bad(format!("need lambda > M/(R^2 - r^2) = {}", m / (big_r * big_r - r * r)))
                } else {
                    Ok(())
                }
            }
            PrototypeId::WedgeLevels { a, .. } if a <= 0.0 => bad("a must be positive".into()),
            PrototypeId::FanJump { alpha, m, .. } if !(alpha > 0.0 && m > 0.0) => {
                bad("alpha and m must be positive".into())
            }
            _ => Ok(()),
        }
    }
}

const C8: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn eight_p_plus(x: f64, y: f64) -> f64 {
    1.0 - 2.0 * (x.abs() + y.abs() - 1.0).max(0.0) / (SQRT_2 - 1.0)
}

fn eight_p_minus(x: f64, y: f64) -> f64 {
    -1.0 + 2.0 * (x.abs().max(y.abs()) - C8).max(0.0) / (1.0 - C8)
}

fn in_octagon(x: f64, y: f64) -> bool {
    (0..8).all(|k| {
        let t = FRAC_PI_8 + k as f64 * FRAC_PI_4;
        x * t.cos() + y * t.sin() <= FRAC_PI_8.cos() * (1.0 + 1e-12)
    })
}

fn domain(id: &PrototypeId, x: f64, y: f64) -> Result<()> {
    let slack = 1e-12;
    let ok = match *id {
        PrototypeId::FourPoint { .. } => x.abs() <= 1.0 + slack && y.abs() <= 1.0 + slack,
        PrototypeId::EightPoint { .. } => in_octagon(x, y),
        PrototypeId::TwoGables { r, h, .. }
        | PrototypeId::RoofBox { r, h, .. }
        | PrototypeId::JumpStrip { r, h, .. } => x.abs() <= r * (1.0 + slack) && y.abs() <= h * (1.0 + slack),
        PrototypeId::AnnulusLevels { big_r, .. } => x.hypot(y) <= big_r * (1.0 + slack),
        PrototypeId::WedgeLevels { a, .. } => x >= 0.0 && y.abs() <= a * x * (1.0 + slack) + slack,
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(CcxError::OutOfDomain(x, y))
    }
}

fn sign_lower(lambda: f64, x: f64) -> f64 {
    let a = (2.0 / lambda).sqrt();
    if x <= 0.0 {
        -1.0
    } else if x <= a {
        1.0 - lambda * (x - a).powi(2)
    } else {
        1.0
    }
}

fn sign_upper(lambda: f64, x: f64) -> f64 {
    -sign_lower(lambda, -x)
}

fn sign_average(lambda: f64, x: f64) -> f64 {
    let a = (2.0 / lambda).sqrt();
    if x <= -a {
        -1.0
    } else if x <= 0.0 {
        0.5 * lambda * (x + a).powi(2) - 1.0
    } else if x <= a {
        1.0 - 0.5 * lambda * (x - a).powi(2)
    } else {
        1.0
    }
}

/// Closed-form average approximation `A(x, y)` of the example.
pub fn analytic_average(id: &PrototypeId, x: f64, y: f64) -> Result<f64> {
    id.validate()?;
    domain(id, x, y)?;
    Ok(match *id {
        PrototypeId::SignJump1D { lambda } => sign_average(lambda, x),
        PrototypeId::FourPoint { .. } => 0.5 * ((x - y).abs() - (x + y).abs()),
        PrototypeId::EightPoint { .. } => 0.5 * (eight_p_plus(x, y) + eight_p_minus(x, y)),
        PrototypeId::CrossParabolas { .. } => -x * y,
        PrototypeId::CrossAbs { .. } => x.abs() - y.abs(),
        PrototypeId::TwoGables { lambda, .. } => {
            if y.abs() <= 0.5 / lambda {
                1.0 - 1.0 / (8.0 * lambda) - 0.5 * lambda * y * y - 0.5 * y.abs()
            } else {
                1.0 - y.abs()
            }
        }
        PrototypeId::RoofBox { lambda, r, h } => {
            if h <= r {
                return Err(CcxError::RegimeUnsupported(if h == r {
                    "h = r: the roof dips in the middle, ridge preserved".into()
                } else {
                    "h < r: the roof collapses to the ground, ridge lost".into()
                }));
            }
            if y.abs() <= 0.5 / lambda {
                h - 1.0 / (4.0 * lambda) - lambda * y * y
            } else {
                h - y.abs()
            }
        }
        PrototypeId::JumpStrip { lambda, .. } => sign_average(lambda, x),
        PrototypeId::AnnulusLevels { r, big_r, m, .. } => {
            let rho = x.hypot(y);
            if rho <= r {
                m
            } else {
                m * (big_r - rho) / (big_r - r)
            }
        }
        PrototypeId::WedgeLevels { lambda, a } => wedge_unit(a, lambda.sqrt() * x, lambda.sqrt() * y),
        PrototypeId::FanJump { .. } => {
            return Err(CcxError::NotAvailable("the fan jump average is parametric; use fan_jump_graph".into()))
        }
    })
}

/// Wedge average at scale one; other scales follow from `A_lambda(p) = A_1(sqrt(lambda) p)`.
///
/// Strips between parallel arms interpolate linearly. In the corner region the lower transform
/// is a vertical chord on `K_1` up to `x = tau`, then the facet spanned by `K_1` at `tau` and the
/// apex of `K_2`. The upper transform uses the chord up to `tau_u`, the facet at `tau_u`, then a
/// fan of segments from the apex to `K_1`.
fn wedge_unit(a: f64, x: f64, y: f64) -> f64 {
    let y = y.abs();
    let s2 = 1.0 + a * a;
    let s = s2.sqrt();
    let d = s / a;
    let tau = 1.0 / (a * s);
    let tau_u = d - (s2 + 1.0).sqrt() / s;
    let delta = (a * x - y) / s;
    if delta >= 1.0 {
        return 2.0;
    }
    if (x + a * y) / s >= 1.0 / a {
        return 1.0 + delta;
    }
    let q = x * x + y * y;
    let lower = if x <= tau { 1.0 + a * a * x * x - y * y } else { 1.0 - s2 * tau * tau + 2.0 * s2 * tau * x - q };
    let upper = if x <= tau_u {
        1.0 - a * a * x * x + y * y
    } else if d + (x - d) / (1.0 - delta) <= tau_u {
        1.0 + s2 * tau_u * tau_u - 2.0 * s2 * tau_u * x + q
    } else {
        1.0 + delta - delta * ((x - d).powi(2) + y * y) / (1.0 - delta)
    };
    0.5 * (lower + upper)
}

/// Closed-form lower transform `C^l` of the (extended) sample.
pub fn analytic_lower(id: &PrototypeId, x: f64, y: f64) -> Result<f64> {
    id.validate()?;
    domain(id, x, y)?;
    let q = x * x + y * y;
    Ok(match *id {
        PrototypeId::SignJump1D { lambda } => sign_lower(lambda, x),
        PrototypeId::FourPoint { lambda } => 2.0 * lambda - lambda * q - 1.0 + (x - y).abs(),
        PrototypeId::EightPoint { lambda } => lambda - lambda * q + eight_p_minus(x, y),
        PrototypeId::CrossParabolas { lambda } => {
            -x * y + (4.0 * lambda * lambda - 1.0).sqrt() * (x * x - y * y).abs() / 2.0
        }
        PrototypeId::CrossAbs { lambda } => {
            if x.abs() + y.abs() <= 0.5 / lambda {
                2.0 * x.abs() - 0.25 / lambda - lambda * q
            } else {
                x.abs() + 2.0 * lambda * x.abs() * y.abs() - y.abs()
            }
        }
        PrototypeId::TwoGables { lambda, r, .. } => {
            if y.abs() <= 0.5 / lambda {
                1.0 - 0.25 / lambda + lambda * r * r - lambda * q
            } else {
                1.0 + lambda * r * r - lambda * x * x - y.abs()
            }
        }
        PrototypeId::AnnulusLevels { lambda, r, big_r, m } => {
            let rho = q.sqrt();
            if rho <= r {
                m + lambda * (r * r - q)
            } else {
                lambda * (big_r * big_r - q) - (lambda * (big_r * big_r - r * r) - m) / (big_r - r) * (big_r - rho)
            }
        }
        _ => return Err(CcxError::NotAvailable(format!("{} has no closed-form lower transform", id.name()))),
    })
}

/// Closed-form upper transform `C^u` of the (extended) sample.
pub fn analytic_upper(id: &PrototypeId, x: f64, y: f64) -> Result<f64> {
    id.validate()?;
    domain(id, x, y)?;
    let q = x * x + y * y;
    Ok(match *id {
        PrototypeId::SignJump1D { lambda } => sign_upper(lambda, x),
        PrototypeId::FourPoint { lambda } => -2.0 * lambda + lambda * q + 1.0 - (x + y).abs(),
        PrototypeId::EightPoint { lambda } => lambda * q - lambda + eight_p_plus(x, y),
        PrototypeId::CrossParabolas { lambda } => {
            -x * y - (4.0 * lambda * lambda - 1.0).sqrt() * (x * x - y * y).abs() / 2.0
        }
        PrototypeId::CrossAbs { lambda } => {
            if x.abs() + y.abs() <= 0.5 / lambda {
                -2.0 * y.abs() + 0.25 / lambda + lambda * q
            } else {
                x.abs() - 2.0 * lambda * x.abs() * y.abs() - y.abs()
            }
        }
        PrototypeId::TwoGables { lambda, r, .. } => 1.0 - lambda * r * r + lambda * x * x - y.abs(),
        PrototypeId::AnnulusLevels { lambda, r, big_r, m } => {
            let rho = q.sqrt();
            if rho <= r {
                m + lambda * (q - r * r)
            } else {
                lambda * (q - big_r * big_r) + (m + lambda * (big_r * big_r - r * r)) / (big_r - r) * (big_r - rho)
            }
        }
        _ => return Err(CcxError::NotAvailable(format!("{} has no closed-form upper transform", id.name()))),
    })
}

/// Point `(x, y, A)` of the parametric fan-jump average surface.
///
/// `s_l, s_u >= 0` with `|s_u^2 - s_l^2| <= 2m/lambda`.
pub fn fan_jump_graph(alpha: f64, m: f64, lambda: f64, s_l: f64, s_u: f64) -> Result<(f64, f64, f64)> {
    if !(alpha > 0.0 && m > 0.0 && lambda > 0.0) {
        return Err(CcxError::ParamOutOfRange("alpha, m and lambda must be positive".into()));
    }
    let c = 2.0 * m / lambda;
    if !(s_l >= 0.0 && s_u >= 0.0) || (s_u * s_u - s_l * s_l).abs() > c * (1.0 + 1e-12) {
        return Err(CcxError::ParamOutOfRange(format!("need s_l, s_u >= 0 and |s_u^2 - s_l^2| <= {c}")));
    }
    let rl = (s_l * s_l + c).sqrt();
    let ru = (s_u * s_u + c).sqrt();
    let den = ru * rl - s_u * s_l;
    let t_l = ru * (rl - s_u) / den;
    let t_u = s_l * (rl - s_u) / den;
    let n = (1.0 + alpha * alpha).sqrt();
    let x = ((1.0 - t_l) * rl + t_l * s_l) / n;
    let y = (-alpha * (1.0 - t_l) * rl + alpha * t_l * s_l) / n;
    let a = 0.5 * (lambda * (s_l * s_l - s_u * s_u) + 2.0 * lambda * c * (1.0 - t_l - t_u));
    Ok((x, y, a))
}

/// A grid sample of a prototype and the region where the closed form is compared.
pub struct GridSetup {
    pub id: PrototypeId,
    pub sample: SampledFunction,
    /// Nodes where the grid average is compared with the closed form.
    pub compare: Vec<bool>,
    /// Lipschitz constant of the closed form on the comparison region.
    pub scale: f64,
    /// Largest distance between a sample node and the continuum sample set.
    pub max_snap: f64,
}

fn region(spec: &GridSpec, keep: impl Fn(f64, f64) -> bool) -> Vec<bool> {
    (0..spec.len())
        .map(|k| {
            let (x, y) = spec.node(k);
            keep(x, y)
        })
        .collect()
}

fn from_curves(
    spec: GridSpec,
    curves: &[(&dyn Fn(f64, f64) -> f64, &dyn Fn(f64, f64) -> f64)],
) -> Result<SampledFunction> {
    let mut vals: Vec<Option<f64>> = vec![None; spec.len()];
    for (phi, value) in curves {
        let field = ScalarField::from_fn(spec, phi);
        for (k, on) in crossing_nodes(&field, 0.0).into_iter().enumerate() {
            if on && vals[k].is_none() {
                let (x, y) = spec.node(k);
                vals[k] = Some(value(x, y));
            }
        }
    }
    SampledFunction::from_options(spec, &vals, Module::AutoInfinity)
}

/// Grid sample with spacing `h` for the prototypes that have a pointwise closed form.
pub fn grid_setup(id: &PrototypeId, h: f64) -> Result<GridSetup> {
    id.validate()?;
    let none = |spec: GridSpec, sample: SampledFunction, compare: Vec<bool>, scale: f64| GridSetup {
        id: *id,
        sample,
        compare,
        scale,
        max_snap: 0.0 * spec.h,
    };
    Ok(match *id {
        PrototypeId::FourPoint { .. } => {
            let spec = GridSpec::over_box(-1.0, 1.0, -1.0, 1.0, h)?;
            let pts = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
            let (nodes, snap) = snap_points(&spec, &pts)?;
            let mut vals = vec![None; spec.len()];
            for (&k, v) in nodes.iter().zip([-1.0, 1.0, -1.0, 1.0]) {
                vals[k] = Some(v);
            }
            let sample = SampledFunction::from_options(spec, &vals, Module::AutoInfinity)?;
            GridSetup { id: *id, sample, compare: vec![true; spec.len()], scale: 1.0, max_snap: snap }
        }
        PrototypeId::EightPoint { .. } => {
            let spec = GridSpec::over_box(-1.0, 1.0, -1.0, 1.0, h)?;
            let pts: Vec<(f64, f64)> = (0..8)
                .map(|k| {
                    let t = k as f64 * FRAC_PI_4;
                    (t.cos(), t.sin())
                })
                .collect();
            let (nodes, snap) = snap_points(&spec, &pts)?;
            let mut vals = vec![None; spec.len()];
            for (k, &node) in nodes.iter().enumerate() {
                vals[node] = Some(if k % 2 == 0 { 1.0 } else { -1.0 });
            }
            let sample = SampledFunction::from_options(spec, &vals, Module::AutoInfinity)?;
            // keep clear of the gap between the octagon and the hull of the snapped points
            let compare = region(&spec, |x, y| in_octagon(x / (1.0 - 2.0 * h), y / (1.0 - 2.0 * h)));
            GridSetup { id: *id, sample, compare, scale: 2.0 / (1.0 - C8), max_snap: snap }
        }
        PrototypeId::CrossParabolas { .. } => {
            let spec = GridSpec::over_box(-1.0, 1.0, -1.0, 1.0, h)?;
            let sample = from_curves(spec, &[(&|x, y| y - x, &|x, y| -x * y), (&|x, y| y + x, &|x, y| -x * y)])?;
            let b = 0.8;
            let compare = region(&spec, |x, y| x.abs().max(y.abs()) <= b + 1e-9);
            none(spec, sample, compare, SQRT_2 * b)
        }
        PrototypeId::CrossAbs { .. } => {
            let spec = GridSpec::over_box(-1.0, 1.0, -1.0, 1.0, h)?;
            let sample = from_curves(spec, &[(&|_, y| y, &|x, _| x.abs()), (&|x, _| x, &|_, y| -y.abs())])?;
            let compare = region(&spec, |x, y| x.abs() + y.abs() <= 0.9 + 1e-9);
            none(spec, sample, compare, SQRT_2)
        }
        PrototypeId::TwoGables { r, h: gh, .. } => {
            let spec = GridSpec::over_box(-r, r, -gh, gh, h)?;
            let mut vals = vec![None; spec.len()];
            for j in 0..spec.ny {
                for i in [0, spec.nx - 1] {
                    vals[spec.index(i, j)] = Some(1.0 - spec.y(j).abs());
                }
            }
            let sample = SampledFunction::from_options(spec, &vals, Module::AutoInfinity)?;
            none(spec, sample, vec![true; spec.len()], 1.0)
        }
        PrototypeId::JumpStrip { lambda, r, h: gh } => {
            let spec = GridSpec::over_box(-r, r, -gh, gh, h)?;
            let mut vals = vec![None; spec.len()];
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    if i == 0 || j == 0 || i + 1 == spec.nx || j + 1 == spec.ny {
                        let x = spec.x(i);
                        let s = if x.abs() < 0.5 * h { 0.0 } else { x.signum() };
                        vals[spec.index(i, j)] = Some(s);
                    }
                }
            }
            let sample = SampledFunction::from_options(spec, &vals, Module::AutoInfinity)?;
            none(spec, sample, vec![true; spec.len()], (2.0 * lambda).sqrt())
        }
        PrototypeId::AnnulusLevels { r, big_r, m, .. } => {
            let e = big_r + 2.0 * h;
            let spec = GridSpec::over_box(-e, e, -e, e, h)?;
            let sample = from_curves(
                spec,
                &[(&|x: f64, y: f64| x.hypot(y) - r, &|_, _| m), (&|x: f64, y: f64| x.hypot(y) - big_r, &|_, _| 0.0)],
            )?;
            let compare = region(&spec, |x, y| x.hypot(y) <= big_r - h);
            GridSetup { id: *id, sample, compare, scale: m / (big_r - r), max_snap: 0.5 * h }
        }
        PrototypeId::WedgeLevels { lambda, a } => {
            let x2 = (1.0 + a * a).sqrt() / (a * lambda.sqrt());
            let (xm, ym) = (1.5, 1.5 * a);
            let spec = GridSpec::over_box(0.0, xm, -ym, ym, h)?;
            let sample = from_curves(
                spec,
                &[
                    (&|x: f64, y: f64| y.abs() - a * x, &|_, _| 1.0),
                    (&|x: f64, y: f64| if x >= x2 { y.abs() - a * (x - x2) } else { 1.0 }, &|_, _| 2.0),
                ],
            )?;
            let compare = region(&spec, |x, y| x <= 1.2 && y.abs() <= a * x - h);
            let scale = lambda.sqrt() * (1.0 + a * a).sqrt() / a;
            GridSetup { id: *id, sample, compare, scale, max_snap: 0.5 * h }
        }
        _ => return Err(CcxError::NotAvailable(format!("no grid comparison for {}", id.name()))),
    })
}
