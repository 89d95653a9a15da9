//! Uniform grids, scalar fields, sample masks and the extended functions f_K^{±M}.

use serde::{Deserialize, Serialize};

use crate::error::{CcxError, Result};

/// Uniform rectangular grid with equal spacing in both axes.
///
/// Node `(i, j)` sits at `(x0 + i h, y0 + j h)` and has flat index `j * nx + i`.
/// A grid with `ny == 1` (or `nx == 1`) represents a one-dimensional problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, h: f64) -> Result<Self> {
        let g = GridSpec { nx, ny, x0, y0, h };
        g.validate()?;
        Ok(g)
    }

    /// Grid with `nx` by `ny` nodes spanning `[xmin, xmin + (nx-1) h]` from a lower-left corner.
    pub fn covering(xmin: f64, ymin: f64, h: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, xmin, ymin, h)
    }

    /// Square-celled grid over `[xmin, xmax] x [ymin, ymax]` with spacing `h`.
    ///
    /// The node count is rounded to the nearest integer so that the far edges land on nodes
    /// whenever the extent is a multiple of `h`.
    pub fn over_box(xmin: f64, xmax: f64, ymin: f64, ymax: f64, h: f64) -> Result<Self> {
        let nx = ((xmax - xmin) / h).round() as usize + 1;
        let ny = ((ymax - ymin) / h).round() as usize + 1;
        Self::new(nx, ny, xmin, ymin, h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nx * self.ny < 2 {
            return Err(CcxError::InvalidGrid(format!("need at least two nodes, got {}x{}", self.nx, self.ny)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(CcxError::InvalidGrid(format!("spacing must be positive, got {}", self.h)));
        }
        if !self.x0.is_finite() || !self.y0.is_finite() {
            return Err(CcxError::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_1d(&self) -> bool {
        self.nx == 1 || self.ny == 1
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    #[inline]
    pub fn node(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.ij(idx);
        (self.x(i), self.y(j))
    }

    pub fn xmax(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn ymax(&self) -> f64 {
        self.y(self.ny - 1)
    }

    /// Diameter of the grid bounding box.
    pub fn diameter(&self) -> f64 {
        let w = (self.nx - 1) as f64;
        let t = (self.ny - 1) as f64;
        self.h * (w * w + t * t).sqrt()
    }

    /// Squared distance to the grid centre, computed from integer offsets so that
    /// nodes at equal lattice distance get bit-identical values.
    #[inline]
    pub fn centered_sq(&self, i: usize, j: usize) -> f64 {
        let di = 2 * i as i64 - (self.nx as i64 - 1);
        let dj = 2 * j as i64 - (self.ny as i64 - 1);
        ((di * di + dj * dj) as f64) * (0.25 * self.h * self.h)
    }

    /// Nearest node to `(x, y)` and the snap distance, or `None` if the point is more than
    /// half a cell outside the grid.
    pub fn nearest(&self, x: f64, y: f64) -> Option<(usize, f64)> {
        let fi = ((x - self.x0) / self.h).round();
        let fj = ((y - self.y0) / self.h).round();
        if fi < 0.0 || fj < 0.0 || fi > (self.nx - 1) as f64 || fj > (self.ny - 1) as f64 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        let d = ((self.x(i) - x).powi(2) + (self.y(j) - y).powi(2)).sqrt();
        Some((self.index(i, j), d))
    }

    /// The lattice grown by `margin` nodes on every side.
    pub fn padded(&self, margin: usize) -> Result<GridSpec> {
        let w = margin as f64 * self.h;
        GridSpec::new(self.nx + 2 * margin, self.ny + 2 * margin, self.x0 - w, self.y0 - w, self.h)
    }

    /// Same lattice shifted by whole cells.
    pub fn shifted(&self, di: i64, dj: i64) -> GridSpec {
        GridSpec { x0: self.x0 + di as f64 * self.h, y0: self.y0 + dj as f64 * self.h, ..*self }
    }
}

/// Real values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(CcxError::GridMismatch(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(CcxError::NonFiniteValue(k));
        }
        Ok(ScalarField { spec, values })
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        ScalarField { spec, values: vec![c; spec.len()] }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..spec.len())
            .map(|k| {
                let (x, y) = spec.node(k);
                f(x, y)
            })
            .collect();
        ScalarField { spec, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Removes a border of `margin` nodes.
    pub fn crop(&self, margin: usize) -> Result<ScalarField> {
        let s = self.spec;
        if 2 * margin >= s.nx || 2 * margin >= s.ny {
            return Err(CcxError::InvalidGrid(format!("cannot crop {margin} nodes from a {}x{} grid", s.nx, s.ny)));
        }
        let w = margin as f64 * s.h;
        let spec = GridSpec::new(s.nx - 2 * margin, s.ny - 2 * margin, s.x0 + w, s.y0 + w, s.h)?;
        let mut values = Vec::with_capacity(spec.len());
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                values.push(self.at(i + margin, j + margin));
            }
        }
        ScalarField::new(spec, values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Membership of grid nodes in the sample set K.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMask {
    pub spec: GridSpec,
    pub member: Vec<bool>,
}

impl SampleMask {
    pub fn new(spec: GridSpec, member: Vec<bool>) -> Result<Self> {
        spec.validate()?;
        if member.len() != spec.len() {
            return Err(CcxError::GridMismatch(format!("expected {} mask entries, got {}", spec.len(), member.len())));
        }
        if !member.iter().any(|&m| m) {
            return Err(CcxError::EmptySample);
        }
        Ok(SampleMask { spec, member })
    }

    pub fn from_indices(spec: GridSpec, idx: &[usize]) -> Result<Self> {
        let mut member = vec![false; spec.len()];
        for &k in idx {
            if k >= member.len() {
                return Err(CcxError::GridMismatch(format!("node {k} outside grid")));
            }
            member[k] = true;
        }
        Self::new(spec, member)
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.member.iter().enumerate().filter_map(|(k, &m)| m.then_some(k)).collect()
    }

    pub fn complement(&self) -> Vec<bool> {
        self.member.iter().map(|&m| !m).collect()
    }
}

/// The module M used off the sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Module {
    Finite(f64),
    AutoInfinity,
}

/// Which extension to build: `Plus` gives f_K^M, `Minus` gives f_K^{-M}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Sample values on K together with the module parameter.
///
/// `values_on_k[n]` belongs to the `n`-th member node in ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub mask: SampleMask,
    pub values_on_k: Vec<f64>,
    pub module_m: Module,
}

impl SampledFunction {
    pub fn new(mask: SampleMask, values_on_k: Vec<f64>, module_m: Module) -> Result<Self> {
        let n = mask.count();
        if values_on_k.len() != n {
            return Err(CcxError::GridMismatch(format!(
                "mask has {} members but {} values were given",
                n,
                values_on_k.len()
            )));
        }
        let idx = mask.indices();
        for (v, &k) in values_on_k.iter().zip(&idx) {
            if !v.is_finite() {
                return Err(CcxError::NonFiniteValue(k));
            }
        }
        let sf = SampledFunction { mask, values_on_k, module_m };
        if let Module::Finite(m) = module_m {
            sf.check_module(m)?;
        }
        Ok(sf)
    }

    /// Sample a full field on the member nodes of `mask`.
    pub fn from_field(field: &ScalarField, mask: SampleMask, module_m: Module) -> Result<Self> {
        if field.spec != mask.spec {
            return Err(CcxError::GridMismatch("field and mask grids differ".into()));
        }
        let vals = mask.indices().iter().map(|&k| field.values[k]).collect();
        Self::new(mask, vals, module_m)
    }

    /// Sample from a per-node value array where `None` marks nodes outside K.
    pub fn from_options(spec: GridSpec, vals: &[Option<f64>], module_m: Module) -> Result<Self> {
        let member: Vec<bool> = vals.iter().map(|v| v.is_some()).collect();
        let mask = SampleMask::new(spec, member)?;
        let v = vals.iter().filter_map(|v| *v).collect();
        Self::new(mask, v, module_m)
    }

    pub fn spec(&self) -> GridSpec {
        self.mask.spec
    }

    /// A_0 = max |f_K|.
    pub fn max_abs(&self) -> f64 {
        self.values_on_k.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Member node indices paired with their values.
    pub fn samples(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.mask.member.iter().enumerate().filter_map(|(k, &m)| m.then_some(k)).zip(self.values_on_k.iter().copied())
    }

    /// Per-node values with `None` off K.
    pub fn to_options(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.spec().len()];
        for (k, v) in self.samples() {
            out[k] = Some(v);
        }
        out
    }

    /// The same samples on a grid grown by `margin` unsampled nodes on every side.
    pub fn padded(&self, margin: usize) -> Result<Self> {
        let s = self.spec();
        let big = s.padded(margin)?;
        let mut member = vec![false; big.len()];
        for k in self.mask.indices() {
            let (i, j) = s.ij(k);
            member[big.index(i + margin, j + margin)] = true;
        }
        // row-major order is preserved, so the value list carries over unchanged
        Self::new(SampleMask::new(big, member)?, self.values_on_k.clone(), self.module_m)
    }

    pub fn with_module(&self, module_m: Module) -> Result<Self> {
        Self::new(self.mask.clone(), self.values_on_k.clone(), module_m)
    }

    pub fn check_module(&self, m: f64) -> Result<()> {
        let a0 = self.max_abs();
        if !(m.is_finite() && m > a0) {
            return Err(CcxError::ModuleTooSmall { m, max_abs: a0 });
        }
        Ok(())
    }
}

/// Build f_K^{M} (`Sign::Plus`) or f_K^{-M} (`Sign::Minus`).
///
/// With `Module::Finite(M)` the stored M is used; with `Module::AutoInfinity` the caller
/// must pass the resolved value in `resolved`.
pub fn extend(sf: &SampledFunction, sign: Sign, resolved: Option<f64>) -> Result<ScalarField> {
    let m = match (sf.module_m, resolved) {
        (Module::Finite(m), _) => m,
        (Module::AutoInfinity, Some(m)) => m,
        (Module::AutoInfinity, None) => return Err(CcxError::Config("AutoInfinity needs a resolved module".into())),
    };
    for (k, v) in sf.samples() {
        if !v.is_finite() {
            return Err(CcxError::NonFiniteValue(k));
        }
    }
    sf.check_module(m)?;
    let fill = match sign {
        Sign::Plus => m,
        Sign::Minus => -m,
    };
    let spec = sf.spec();
    let mut values = vec![fill; spec.len()];
    for (k, v) in sf.samples() {
        values[k] = v;
    }
    Ok(ScalarField { spec, values })
}

/// Lipschitz lower bound L and minimal separation alpha of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lipschitz {
    pub l: f64,
    pub alpha: f64,
}

/// Max slope over member pairs and the minimum pairwise distance.
///
/// Exact over all pairs when #K <= 4096, otherwise restricted to nearest-neighbour pairs.
pub fn lipschitz_lower_bound(sf: &SampledFunction) -> Result<Lipschitz> {
    let spec = sf.spec();
    let pts: Vec<(usize, usize, f64)> = sf
        .samples()
        .map(|(k, v)| {
            let (i, j) = spec.ij(k);
            (i, j, v)
        })
        .collect();
    if pts.len() < 2 {
        return Err(CcxError::SingleSample);
    }
    let mut l = 0.0f64;
    let mut alpha2 = u64::MAX;
    let mut visit = |a: &(usize, usize, f64), b: &(usize, usize, f64)| {
        let di = a.0 as i64 - b.0 as i64;
        let dj = a.1 as i64 - b.1 as i64;
        let d2 = (di * di + dj * dj) as u64;
        alpha2 = alpha2.min(d2);
        let d = (d2 as f64).sqrt() * spec.h;
        l = l.max((a.2 - b.2).abs() / d);
    };
    if pts.len() <= 4096 {
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                visit(&pts[a], &pts[b]);
            }
        }
    } else {
        let mut slot = vec![usize::MAX; spec.len()];
        for (n, p) in pts.iter().enumerate() {
            slot[spec.index(p.0, p.1)] = n;
        }
        for (n, p) in pts.iter().enumerate() {
            // expand square rings until the nearest member is certainly found
            let mut best = u64::MAX;
            let mut ring = 1i64;
            loop {
                if (ring as u64).pow(2) > best {
                    break;
                }
                for (di, dj) in ring_offsets(ring) {
                    let (i, j) = (p.0 as i64 + di, p.1 as i64 + dj);
                    if i < 0 || j < 0 || i >= spec.nx as i64 || j >= spec.ny as i64 {
                        continue;
                    }
                    let m = slot[spec.index(i as usize, j as usize)];
                    if m != usize::MAX && m != n {
                        best = best.min((di * di + dj * dj) as u64);
                        visit(p, &pts[m]);
                    }
                }
                ring += 1;
                if ring as usize > spec.nx.max(spec.ny) {
                    break;
                }
            }
        }
    }
    Ok(Lipschitz { l, alpha: (alpha2 as f64).sqrt() * spec.h })
}

fn ring_offsets(r: i64) -> impl Iterator<Item = (i64, i64)> {
    (-r..=r).flat_map(move |di| (-r..=r).filter_map(move |dj| (di.abs() == r || dj.abs() == r).then_some((di, dj))))
}

/// Snap planar points to their nearest grid nodes.
///
/// Returns node indices and the largest snap distance; fails if a point is off the grid
/// or two points land on the same node.
pub fn snap_points(spec: &GridSpec, pts: &[(f64, f64)]) -> Result<(Vec<usize>, f64)> {
    let mut seen = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(pts.len());
    let mut worst = 0.0f64;
    for (n, &(x, y)) in pts.iter().enumerate() {
        let (k, d) = spec.nearest(x, y).ok_or(CcxError::OutOfDomain(x, y))?;
        if let Some(&prev) = seen.get(&k) {
            return Err(CcxError::DuplicatePoints(prev, n));
        }
        seen.insert(k, n);
        worst = worst.max(d);
        out.push(k);
    }
    Ok((out, worst))
}

/// Nodes adjacent to a crossing of `level`.
///
/// Node `x` is marked when some axis neighbour `y` has `(f(x) - a)(f(y) - a) <= 0` and
/// `|f(x) - a| <= |f(y) - a|`, i.e. `x` is the closer end of a crossed grid edge.
pub fn crossing_nodes(field: &ScalarField, level: f64) -> Vec<bool> {
    crossing_nodes_within(field, level, None)
}

/// As [`crossing_nodes`], but only edges joining nodes with equal `pieces` labels count.
pub fn crossing_nodes_within(field: &ScalarField, level: f64, pieces: Option<&[u8]>) -> Vec<bool> {
    let spec = field.spec;
    let d: Vec<f64> = field.values.iter().map(|v| v - level).collect();
    let mut out = vec![false; spec.len()];
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let k = spec.index(i, j);
            let mut check = |m: usize| {
                let same = pieces.is_none_or(|p| p[k] == p[m]);
                if same && d[k] * d[m] <= 0.0 && d[k].abs() <= d[m].abs() {
                    out[k] = true;
                }
            };
            if i > 0 {
                check(k - 1);
            }
            if i + 1 < spec.nx {
                check(k + 1);
            }
            if j > 0 {
                check(k - spec.nx);
            }
            if j + 1 < spec.ny {
                check(k + spec.nx);
            }
        }
    }
    out
}

/// Nodes with an axis neighbour carrying a different `pieces` label.
pub fn piece_boundary_nodes(spec: &GridSpec, pieces: &[u8]) -> Vec<bool> {
    (0..spec.len())
        .map(|k| {
            let (i, j) = spec.ij(k);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(k - 1);
            }
            if i + 1 < spec.nx {
                nb.push(k + 1);
            }
            if j > 0 {
                nb.push(k - spec.nx);
            }
            if j + 1 < spec.ny {
                nb.push(k + spec.nx);
            }
            nb.into_iter().any(|m| pieces[m] != pieces[k])
        })
        .collect()
}
