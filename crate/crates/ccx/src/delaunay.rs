//! Delaunay cells of planar point clouds, exact piecewise-affine interpolants on each cell and
//! the structural comparison of the grid average approximation against them.

use std::collections::HashMap;

use robust::{incircle, orient2d, orient3d, Coord, Coord3D};
use serde::Serialize;

use crate::error::{CcxError, Result};
use crate::field::{snap_points, GridSpec, Module, SampledFunction};
use crate::transforms::{auto_module, average_approximation, TransformParams};

/// Planar points with one value each.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<(f64, f64)>,
    pub values: Vec<f64>,
}

impl PointCloud {
    /// Validates finiteness and pairwise separation of at least `1e-9` times the diameter.
    pub fn new(points: Vec<(f64, f64)>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(CcxError::GridMismatch("points and values differ in length".into()));
        }
        for (k, (&(x, y), v)) in points.iter().zip(&values).enumerate() {
            if !(x.is_finite() && y.is_finite() && v.is_finite()) {
                return Err(CcxError::NonFiniteValue(k));
            }
        }
        let pc = PointCloud { points, values };
        let eps = 1e-9 * pc.diameter();
        for a in 0..pc.len() {
            for b in a + 1..pc.len() {
                if dist(pc.points[a], pc.points[b]) <= eps {
                    return Err(CcxError::DuplicatePoints(a, b));
                }
            }
        }
        Ok(pc)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                d = d.max(dist(self.points[a], self.points[b]));
            }
        }
        d
    }

    /// Max slope over all pairs and the minimum pairwise distance.
    pub fn lipschitz(&self) -> (f64, f64) {
        let (mut l, mut alpha) = (0.0f64, f64::INFINITY);
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                let d = dist(self.points[a], self.points[b]);
                alpha = alpha.min(d);
                l = l.max((self.values[a] - self.values[b]).abs() / d);
            }
        }
        (l, alpha)
    }

    /// A_0 = max |value|.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn c2(&self, k: usize) -> Coord<f64> {
        Coord { x: self.points[k].0, y: self.points[k].1 }
    }

    fn c3(&self, k: usize) -> Coord3D<f64> {
        Coord3D { x: self.points[k].0, y: self.points[k].1, z: self.values[k] }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// A Delaunay cell: the convex hull of co-circular generators whose circle is empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelaunayCell {
    /// Generators in counter-clockwise order.
    pub vertex_ids: Vec<usize>,
    pub center: (f64, f64),
    pub radius: f64,
    pub regular: bool,
}

fn circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> ((f64, f64), f64) {
    let (bx, by) = (b.0 - a.0, b.1 - a.1);
    let (cx, cy) = (c.0 - a.0, c.1 - a.1);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    ((a.0 + ux, a.1 + uy), ux.hypot(uy))
}

/// Delaunay cells of `pc` by Bowyer-Watson insertion.
///
/// Adjacent triangles whose circumcircles agree within `cocircular_tol` (relative to the
/// radius) are merged into one irregular cell.
pub fn triangulate(pc: &PointCloud, cocircular_tol: f64) -> Result<Vec<DelaunayCell>> {
    let n = pc.len();
    if n < 3 {
        return Err(CcxError::Degenerate("triangulation needs at least three points".into()));
    }
    if (2..n).all(|k| orient2d(pc.c2(0), pc.c2(1), pc.c2(k)) == 0.0) {
        return Err(CcxError::CollinearInput);
    }
    let tris = bowyer_watson(pc);
    check_coverage(pc, &tris)?;

    // merge triangles across edges whose opposite vertex lies on the same circle
    let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            edge_owner.insert((tri[k], tri[(k + 1) % 3]), t);
        }
    }
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for (t, tri) in tris.iter().enumerate() {
        let (center, radius) = circumcircle(pc.points[tri[0]], pc.points[tri[1]], pc.points[tri[2]]);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let Some(&u) = edge_owner.get(&(b, a)) else { continue };
            let d = tris[u].iter().copied().find(|&v| v != a && v != b).expect("triangle has three vertices");
            let exact = incircle(pc.c2(tri[0]), pc.c2(tri[1]), pc.c2(tri[2]), pc.c2(d)) == 0.0;
            let near = (dist(center, pc.points[d]) - radius).abs() <= cocircular_tol * radius;
            if exact || near {
                let (ra, rb) = (find(&mut parent, t), find(&mut parent, u));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for t in 0..tris.len() {
        let r = find(&mut parent, t);
        groups.entry(r).or_default().push(t);
    }
    let mut cells = Vec::with_capacity(groups.len());
    for (_, members) in groups {
        let mut ids: Vec<usize> = members.iter().flat_map(|&t| tris[t]).collect();
        ids.sort_unstable();
        ids.dedup();
        let t0 = tris[members[0]];
        let (center, radius) = circumcircle(pc.points[t0[0]], pc.points[t0[1]], pc.points[t0[2]]);
        let cx = ids.iter().map(|&k| pc.points[k].0).sum::<f64>() / ids.len() as f64;
        let cy = ids.iter().map(|&k| pc.points[k].1).sum::<f64>() / ids.len() as f64;
        ids.sort_by(|&a, &b| {
            let ta = (pc.points[a].1 - cy).atan2(pc.points[a].0 - cx);
            let tb = (pc.points[b].1 - cy).atan2(pc.points[b].0 - cx);
            ta.total_cmp(&tb)
        });
        cells.push(DelaunayCell { regular: ids.len() == 3, vertex_ids: ids, center, radius });
    }
    cells.sort_by(|a, b| {
        let mut ka = a.vertex_ids.clone();
        let mut kb = b.vertex_ids.clone();
        ka.sort_unstable();
        kb.sort_unstable();
        ka.cmp(&kb)
    });
    Ok(cells)
}

fn bowyer_watson(pc: &PointCloud) -> Vec<[usize; 3]> {
    let n = pc.len();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pc.points {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let (cx, cy) = (0.5 * (xmin + xmax), 0.5 * (ymin + ymax));
    let span = (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
    // far enough that no Delaunay circle of the cloud can reach a super vertex in practice;
    // coverage of the hull is verified afterwards
    let big = 1e10 * span;
    let mut pts: Vec<Coord<f64>> = pc.points.iter().map(|&(x, y)| Coord { x, y }).collect();
    pts.push(Coord { x: cx - big, y: cy - big });
    pts.push(Coord { x: cx + big, y: cy - big });
    pts.push(Coord { x: cx, y: cy + big });
    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for p in 0..n {
        let mut bad = Vec::new();
        let mut keep = Vec::with_capacity(tris.len() + 2);
        for t in tris.drain(..) {
            if incircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[p]) > 0.0 {
                bad.push(t);
            } else {
                keep.push(t);
            }
        }
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &bad {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for t in &bad {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if count[&(a.min(b), a.max(b))] == 1 {
                    keep.push([a, b, p]);
                }
            }
        }
        tris = keep;
    }
    tris.retain(|t| t.iter().all(|&v| v < n));
    tris.sort();
    tris
}

fn hull_area(pc: &PointCloud) -> f64 {
    let mut idx: Vec<usize> = (0..pc.len()).collect();
    idx.sort_by(|&a, &b| pc.points[a].0.total_cmp(&pc.points[b].0).then(pc.points[a].1.total_cmp(&pc.points[b].1)));
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &k in iter {
            while hull.len() >= start + 2
                && orient2d(pc.c2(hull[hull.len() - 2]), pc.c2(hull[hull.len() - 1]), pc.c2(k)) <= 0.0
            {
                hull.pop();
            }
            hull.push(k);
        }
        hull.pop();
    }
    polygon_area(&hull.iter().map(|&k| pc.points[k]).collect::<Vec<_>>())
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        s += a.0 * b.1 - a.1 * b.0;
    }
    0.5 * s
}

fn check_coverage(pc: &PointCloud, tris: &[[usize; 3]]) -> Result<()> {
    let hull = hull_area(pc);
    let covered: f64 = tris.iter().map(|t| polygon_area(&[pc.points[t[0]], pc.points[t[1]], pc.points[t[2]]])).sum();
    if (hull - covered).abs() > 1e-9 * hull {
        return Err(CcxError::Degenerate(format!("triangles cover area {covered} of hull area {hull}")));
    }
    Ok(())
}

/// One affine piece `a . x + b` on a convex polygon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinePiece {
    pub vertex_ids: Vec<usize>,
    pub polygon: Vec<(f64, f64)>,
    pub a: (f64, f64),
    pub b: f64,
}

impl AffinePiece {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a.0 * x + self.a.1 * y + self.b
    }

    pub fn gradient_norm(&self) -> f64 {
        self.a.0.hypot(self.a.1)
    }

    /// Whether `(x, y)` lies in the polygon, with boundary slack `tol` in length units.
    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        let n = self.polygon.len();
        (0..n).all(|k| {
            let (p, q) = (self.polygon[k], self.polygon[(k + 1) % n]);
            let (ex, ey) = (q.0 - p.0, q.1 - p.1);
            let c = ex * (y - p.1) - ey * (x - p.0);
            c >= -tol * ex.hypot(ey)
        })
    }
}

/// A continuous function that is affine on each polygon of a tiling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseAffine {
    pub cells: Vec<AffinePiece>,
}

impl PiecewiseAffine {
    /// Value from the first piece containing the point.
    pub fn eval(&self, x: f64, y: f64) -> Option<f64> {
        let scale =
            self.cells.iter().flat_map(|c| c.polygon.iter()).fold(0.0f64, |m, p| m.max(p.0.abs()).max(p.1.abs()));
        let tol = 1e-12 * scale.max(1.0);
        self.cells.iter().find(|c| c.contains(x, y, tol)).map(|c| c.eval(x, y))
    }

    pub fn max_gradient(&self) -> f64 {
        self.cells.iter().fold(0.0, |m, c| m.max(c.gradient_norm()))
    }
}

/// The affine function through three lifted points, in coordinates relative to the first.
fn plane(pc: &PointCloud, i: usize, j: usize, k: usize) -> ((f64, f64), f64) {
    let (p0, p1, p2) = (pc.points[i], pc.points[j], pc.points[k]);
    let (v0, v1, v2) = (pc.values[i], pc.values[j], pc.values[k]);
    let (x1, y1) = (p1.0 - p0.0, p1.1 - p0.1);
    let (x2, y2) = (p2.0 - p0.0, p2.1 - p0.1);
    let det = x1 * y2 - x2 * y1;
    let (d1, d2) = (v1 - v0, v2 - v0);
    let ax = (d1 * y2 - d2 * y1) / det;
    let ay = (x1 * d2 - x2 * d1) / det;
    ((ax, ay), v0 - ax * p0.0 - ay * p0.1)
}

/// Largest-area triangle among polygon vertices, for a well-conditioned plane fit.
fn best_triple(pc: &PointCloud, ids: &[usize]) -> (usize, usize, usize) {
    let mut best = (ids[0], ids[1], ids[2]);
    let mut area = 0.0f64;
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            for c in b + 1..ids.len() {
                let s = orient2d(pc.c2(ids[a]), pc.c2(ids[b]), pc.c2(ids[c])).abs();
                if s > area {
                    area = s;
                    best = (ids[a], ids[b], ids[c]);
                }
            }
        }
    }
    best
}

fn piece(pc: &PointCloud, cell: &DelaunayCell, ids: &[usize]) -> AffinePiece {
    let mut ids: Vec<usize> = cell.vertex_ids.iter().copied().filter(|v| ids.contains(v)).collect();
    ids.dedup();
    let (i, j, k) = best_triple(pc, &ids);
    let (a, b) = plane(pc, i, j, k);
    AffinePiece { polygon: ids.iter().map(|&v| pc.points[v]).collect(), vertex_ids: ids, a, b }
}

/// Concave (`p_plus`) and convex (`p_minus`) piecewise-affine interpolants on a cell.
///
/// They coincide with the affine interpolant on regular cells and whenever the lifted
/// generators are coplanar.
pub fn cell_interpolant(pc: &PointCloud, cell: &DelaunayCell) -> Result<(PiecewiseAffine, PiecewiseAffine)> {
    let ids = &cell.vertex_ids;
    if ids.len() > 64 {
        return Err(CcxError::CellTooLarge(ids.len()));
    }
    if ids.len() < 3 {
        return Err(CcxError::Degenerate("cell with fewer than three generators".into()));
    }
    let (i, j, k) = best_triple(pc, ids);
    let coplanar = ids.iter().all(|&q| orient3d(pc.c3(i), pc.c3(j), pc.c3(k), pc.c3(q)) == 0.0);
    if cell.regular || coplanar {
        let whole = PiecewiseAffine { cells: vec![piece(pc, cell, ids)] };
        return Ok((whole.clone(), whole));
    }
    let mut upper: Vec<Vec<usize>> = Vec::new();
    let mut lower: Vec<Vec<usize>> = Vec::new();
    let m = ids.len();
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let (mut p, mut q, r) = (ids[a], ids[b], ids[c]);
                let o = orient2d(pc.c2(p), pc.c2(q), pc.c2(r));
                if o == 0.0 {
                    continue;
                }
                if o < 0.0 {
                    std::mem::swap(&mut p, &mut q);
                }
                let (mut below, mut above) = (false, false);
                let mut on = Vec::new();
                for &s in ids {
                    let d = orient3d(pc.c3(p), pc.c3(q), pc.c3(r), pc.c3(s));
                    if d > 0.0 {
                        below = true;
                    } else if d < 0.0 {
                        above = true;
                    } else {
                        on.push(s);
                    }
                }
                on.sort_unstable();
                if !below && !lower.contains(&on) {
                    lower.push(on.clone());
                }
                if !above && !upper.contains(&on) {
                    upper.push(on);
                }
            }
        }
    }
    let build = |faces: Vec<Vec<usize>>| PiecewiseAffine { cells: faces.iter().map(|f| piece(pc, cell, f)).collect() };
    Ok((build(upper), build(lower)))
}

/// Gradient bound of the interpolation lemma for the affine function through a triangle:
/// `|V^-1|_F (sum |x_j - x_1|^2)^(1/2)` with `V` the matrix of edge vectors.
pub fn matrix_norm_constant(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (a, b) = (p1.0 - p0.0, p1.1 - p0.1);
    let (c, d) = (p2.0 - p0.0, p2.1 - p0.1);
    let det = a * d - b * c;
    let frob = (a * a + b * b + c * c + d * d).sqrt() / det.abs();
    frob * (a * a + b * b + c * c + d * d).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub vertex_ids: Vec<usize>,
    pub regular: bool,
    pub center: (f64, f64),
    pub radius: f64,
    pub sigma: f64,
    /// Max face gradient of the exact interpolants.
    pub cs_l: f64,
    /// Matrix-norm bound times the Lipschitz constant.
    pub cs_l_matrix: f64,
    pub lambda_required: f64,
    pub m_required: f64,
    pub max_deviation: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralReport {
    pub cells: Vec<CellReport>,
    pub lipschitz: f64,
    pub a0: f64,
    pub lambda: f64,
    pub m_used: f64,
    pub lambda_required: f64,
    pub m_required: f64,
    pub h: f64,
    pub max_snap: f64,
    pub max_gradient: f64,
    pub max_deviation: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Theorem thresholds for one cell.
fn thresholds(pc: &PointCloud, cell: &DelaunayCell, cs_l: f64, a0: f64, lambda: f64) -> (f64, f64, f64) {
    let outside = (0..pc.len()).filter(|k| !cell.vertex_ids.contains(k));
    let sigma = outside.map(|k| dist(pc.points[k], cell.center) - cell.radius).fold(f64::INFINITY, f64::min);
    let sigma = if sigma.is_finite() { sigma } else { pc.diameter() };
    let r = cell.radius;
    let lambda_req = 2.0 * a0 / (sigma * (2.0 * r + sigma)) + cs_l / sigma;
    let m_req = lambda * r * r + cs_l * r + a0 + cs_l * cs_l / (4.0 * lambda);
    (sigma, lambda_req, m_req)
}

/// Compare the grid average approximation of a cloud with the exact cell interpolants.
///
/// Cloud points are snapped to the nearest nodes of `grid` and the analysis is carried out on
/// the snapped positions. With `Module::AutoInfinity` the module is the larger of the grid
/// rule and 1.5 times the largest cell requirement.
pub fn structural_check(pc: &PointCloud, p: &TransformParams, grid: GridSpec) -> Result<StructuralReport> {
    p.validate()?;
    let (nodes, max_snap) = snap_points(&grid, &pc.points)?;
    let snapped = PointCloud::new(nodes.iter().map(|&k| grid.node(k)).collect(), pc.values.clone())?;
    let pc = &snapped;
    let cells = triangulate(pc, 1e-9)?;
    let (l, _) = pc.lipschitz();
    let a0 = pc.max_abs();

    let mut interps = Vec::with_capacity(cells.len());
    let mut reports = Vec::with_capacity(cells.len());
    let (mut lam_req, mut m_req) = (0.0f64, 0.0f64);
    let mut max_grad = 0.0f64;
    for cell in &cells {
        let (pp, pm) = cell_interpolant(pc, cell)?;
        let cs_l = pp.max_gradient().max(pm.max_gradient());
        max_grad = max_grad.max(cs_l);
        let cs_l_matrix = pp
            .cells
            .iter()
            .chain(&pm.cells)
            .map(|c| {
                let (i, j, k) = best_triple(pc, &c.vertex_ids);
                matrix_norm_constant(pc.points[i], pc.points[j], pc.points[k]) * l
            })
            .fold(0.0, f64::max);
        let (sigma, lr, mr) = thresholds(pc, cell, cs_l, a0, p.lambda);
        lam_req = lam_req.max(lr);
        m_req = m_req.max(mr);
        reports.push(CellReport {
            vertex_ids: cell.vertex_ids.clone(),
            regular: cell.regular,
            center: cell.center,
            radius: cell.radius,
            sigma,
            cs_l,
            cs_l_matrix,
            lambda_required: lr,
            m_required: mr,
            max_deviation: 0.0,
            nodes: 0,
        });
        interps.push((pp, pm));
    }
    let m_used = match p.module {
        Module::Finite(m) => m,
        Module::AutoInfinity => auto_module(&grid, p.lambda, a0).max(1.5 * m_req),
    };
    if p.lambda <= lam_req || m_used <= m_req {
        return Err(CcxError::ThresholdUnsatisfied { lambda_required: lam_req, m_required: m_req });
    }

    let mut opts = vec![None; grid.len()];
    for (&k, &v) in nodes.iter().zip(&pc.values) {
        opts[k] = Some(v);
    }
    let sf = SampledFunction::from_options(grid, &opts, Module::Finite(m_used))?;
    let avg = average_approximation(&sf, &p.clone().with_module(Module::Finite(m_used)))?;

    let tol = 1e-9 * grid.h;
    let mut max_dev = 0.0f64;
    for (rep, (cell, (pp, pm))) in reports.iter_mut().zip(cells.iter().zip(&interps)) {
        let poly = AffinePiece {
            vertex_ids: cell.vertex_ids.clone(),
            polygon: cell.vertex_ids.iter().map(|&k| pc.points[k]).collect(),
            a: (0.0, 0.0),
            b: 0.0,
        };
        let xs = poly.polygon.iter().map(|p| p.0);
        let ys = poly.polygon.iter().map(|p| p.1);
        let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (y_lo, y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let i0 = (((x_lo - grid.x0) / grid.h).floor().max(0.0)) as usize;
        let i1 = (((x_hi - grid.x0) / grid.h).ceil() as usize).min(grid.nx - 1);
        let j0 = (((y_lo - grid.y0) / grid.h).floor().max(0.0)) as usize;
        let j1 = (((y_hi - grid.y0) / grid.h).ceil() as usize).min(grid.ny - 1);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let (x, y) = (grid.x(i), grid.y(j));
                if !poly.contains(x, y, tol) {
                    continue;
                }
                let (Some(a), Some(b)) = (pp.eval(x, y), pm.eval(x, y)) else { continue };
                let dev = (avg.field.values[grid.index(i, j)] - 0.5 * (a + b)).abs();
                rep.max_deviation = rep.max_deviation.max(dev);
                rep.nodes += 1;
            }
        }
        max_dev = max_dev.max(rep.max_deviation);
    }
    let bound = 10.0 * grid.h * (1.0 + max_grad);
    Ok(StructuralReport {
        cells: reports,
        lipschitz: l,
        a0,
        lambda: p.lambda,
        m_used,
        lambda_required: lam_req,
        m_required: m_req,
        h: grid.h,
        max_snap,
        max_gradient: max_grad,
        max_deviation: max_dev,
        bound,
        passed: max_dev <= bound,
    })
}

/// Smallest lambda strictly above every cell's threshold, with a safety factor.
pub fn required_lambda(pc: &PointCloud) -> Result<f64> {
    let cells = triangulate(pc, 1e-9)?;
    let a0 = pc.max_abs();
    let mut req = 0.0f64;
    for cell in &cells {
        let (pp, pm) = cell_interpolant(pc, cell)?;
        let cs_l = pp.max_gradient().max(pm.max_gradient());
        let (_, lr, _) = thresholds(pc, cell, cs_l, a0, 1.0);
        req = req.max(lr);
    }
    Ok(req)
}
