//! Exact discrete convex envelopes through lifted lower convex hulls.
//!
//! The convex envelope of a grid function, restricted to the grid nodes, is the lower convex
//! hull of the lifted points `(i, j, z)` evaluated at every node. The hull is built with an
//! incremental quickhull driven by adaptive exact orientation predicates; its lower faces are
//! then scan-converted onto the lattice.

use robust::{orient2d, orient3d, Coord, Coord3D};

const NONE: u32 = u32::MAX;

/// Lower convex hull of `(xs[i], fs[i])` evaluated at each `xs[i]`.
///
/// `xs` must be strictly increasing.
pub fn lower_hull_1d(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let pt = |k: usize| Coord { x: xs[k], y: fs[k] };
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while stack.len() >= 2 {
            let (a, b) = (stack[stack.len() - 2], stack[stack.len() - 1]);
            if orient2d(pt(a), pt(b), pt(k)) <= 0.0 {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(k);
    }
    let mut out = fs.to_vec();
    for w in stack.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (xa, xb, fa, fb) = (xs[a], xs[b], fs[a], fs[b]);
        for k in a + 1..b {
            let t = (xs[k] - xa) / (xb - xa);
            out[k] = fa + (fb - fa) * t;
        }
    }
    out
}

/// Lower convex envelope of the lattice points `(i, j, z[j * nx + i])`, evaluated at every node.
pub fn lower_envelope_lattice(nx: usize, ny: usize, z: &[f64]) -> Vec<f64> {
    assert_eq!(nx * ny, z.len());
    if nx == 1 || ny == 1 {
        let xs: Vec<f64> = (0..z.len()).map(|k| k as f64).collect();
        return lower_hull_1d(&xs, z);
    }
    let pts: Vec<[f64; 3]> = (0..z.len()).map(|k| [(k % nx) as f64, (k / nx) as f64, z[k]]).collect();
    let faces = match Hull::build(&pts, [0, (nx - 1) as u32, ((ny - 1) * nx) as u32]) {
        Some(faces) => faces,
        None => return z.to_vec(),
    };
    let mut out = vec![f64::INFINITY; z.len()];
    for f in faces {
        let [a, b, c] = f.map(|v| {
            let v = v as usize;
            ((v % nx) as i64, (v / nx) as i64, z[v])
        });
        let area = cross(a, b, c);
        if area > 0 {
            raster(nx, a, b, c, area, &mut out);
        }
    }
    for (k, o) in out.iter_mut().enumerate() {
        // nodes are always covered; keep the input as a guard against a missed node
        if !o.is_finite() {
            *o = z[k];
        }
    }
    out
}

#[inline]
fn cross(a: (i64, i64, f64), b: (i64, i64, f64), c: (i64, i64, f64)) -> i64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Scan-convert a counter-clockwise lattice triangle, writing plane values with a running min.
fn raster(nx: usize, a: (i64, i64, f64), b: (i64, i64, f64), c: (i64, i64, f64), area: i64, out: &mut [f64]) {
    let inv = 1.0 / area as f64;
    let ymin = a.1.min(b.1).min(c.1);
    let ymax = a.1.max(b.1).max(c.1);
    let edges = [(a, b), (b, c), (c, a)];
    for y in ymin..=ymax {
        let mut xl = f64::INFINITY;
        let mut xr = f64::NEG_INFINITY;
        for &(p, q) in &edges {
            let (lo, hi) = (p.1.min(q.1), p.1.max(q.1));
            if y < lo || y > hi {
                continue;
            }
            if p.1 == q.1 {
                xl = xl.min(p.0.min(q.0) as f64);
                xr = xr.max(p.0.max(q.0) as f64);
            } else {
                let x = p.0 as f64 + (y - p.1) as f64 * (q.0 - p.0) as f64 / (q.1 - p.1) as f64;
                xl = xl.min(x);
                xr = xr.max(x);
            }
        }
        if xl > xr {
            continue;
        }
        let i0 = (xl.floor() as i64 - 1).max(0);
        let i1 = (xr.ceil() as i64 + 1).min(nx as i64 - 1);
        for x in i0..=i1 {
            let p = (x, y, 0.0);
            let wa = cross(b, c, p);
            let wb = cross(c, a, p);
            let wc = cross(a, b, p);
            if wa < 0 || wb < 0 || wc < 0 {
                continue;
            }
            let v = if wa == area {
                a.2
            } else if wb == area {
                b.2
            } else if wc == area {
                c.2
            } else {
                (wa as f64 * a.2 + wb as f64 * b.2 + wc as f64 * c.2) * inv
            };
            let k = y as usize * nx + x as usize;
            if v < out[k] {
                out[k] = v;
            }
        }
    }
}

struct Face {
    v: [u32; 3],
    adj: [u32; 3],
    outside: Vec<u32>,
    far: u32,
    far_d: f64,
    alive: bool,
    stamp: u32,
    visible: bool,
}

struct Hull<'a> {
    pts: &'a [[f64; 3]],
    faces: Vec<Face>,
    free: Vec<u32>,
}

#[inline]
fn c3(p: &[f64; 3]) -> Coord3D<f64> {
    Coord3D { x: p[0], y: p[1], z: p[2] }
}

impl<'a> Hull<'a> {
    /// Faces of the convex hull, oriented so that `orient3d(face, q) > 0` means `q` is outside.
    /// Returns `None` when all points are coplanar.
    fn build(pts: &'a [[f64; 3]], base: [u32; 3]) -> Option<Vec<[u32; 3]>> {
        let [p0, p1, p2] = base;
        let (mut best, mut p3) = (0.0f64, NONE);
        for (k, p) in pts.iter().enumerate() {
            let d = orient3d(c3(&pts[p0 as usize]), c3(&pts[p1 as usize]), c3(&pts[p2 as usize]), c3(p));
            if d.abs() > best {
                best = d.abs();
                p3 = k as u32;
            }
        }
        if p3 == NONE {
            return None;
        }
        let mut h = Hull { pts, faces: Vec::new(), free: Vec::new() };
        let tet = [p0, p1, p2, p3];
        let combos = [([0, 1, 2], 3), ([0, 1, 3], 2), ([0, 2, 3], 1), ([1, 2, 3], 0)];
        let mut ids = Vec::new();
        for (tri, opp) in combos {
            let mut v = [tet[tri[0]], tet[tri[1]], tet[tri[2]]];
            if h.orient(&v, tet[opp]) > 0.0 {
                v.swap(1, 2);
            }
            ids.push(h.alloc(v));
        }
        // link adjacency of the tetrahedron
        for &f in &ids {
            for k in 0..3 {
                let (a, b) = (h.faces[f as usize].v[k], h.faces[f as usize].v[(k + 1) % 3]);
                for &g in &ids {
                    if g == f {
                        continue;
                    }
                    let gv = h.faces[g as usize].v;
                    for m in 0..3 {
                        if gv[m] == b && gv[(m + 1) % 3] == a {
                            h.faces[f as usize].adj[k] = g;
                        }
                    }
                }
            }
        }
        for q in 0..pts.len() as u32 {
            if tet.contains(&q) {
                continue;
            }
            h.assign(q, &ids);
        }
        let mut stack: Vec<u32> = ids.iter().copied().filter(|&f| !h.faces[f as usize].outside.is_empty()).collect();
        let mut stamp = 0u32;
        let mut visible: Vec<u32> = Vec::new();
        let mut horizon: Vec<(u32, usize)> = Vec::new();
        let mut start_of = vec![NONE; pts.len()];
        let mut end_of = vec![NONE; pts.len()];
        while let Some(f) = stack.pop() {
            if !h.faces[f as usize].alive || h.faces[f as usize].outside.is_empty() {
                continue;
            }
            let p = h.faces[f as usize].far;
            stamp = stamp.wrapping_add(1);
            visible.clear();
            horizon.clear();
            h.faces[f as usize].stamp = stamp;
            h.faces[f as usize].visible = true;
            visible.push(f);
            let mut n = 0;
            while n < visible.len() {
                let g = visible[n];
                n += 1;
                for k in 0..3 {
                    let nb = h.faces[g as usize].adj[k];
                    let vis = if h.faces[nb as usize].stamp == stamp {
                        h.faces[nb as usize].visible
                    } else {
                        let v = h.orient(&h.faces[nb as usize].v, p) > 0.0;
                        let face = &mut h.faces[nb as usize];
                        face.stamp = stamp;
                        face.visible = v;
                        if v {
                            visible.push(nb);
                        }
                        v
                    };
                    if !vis {
                        horizon.push((g, k));
                    }
                }
            }
            let mut new_faces = Vec::with_capacity(horizon.len());
            for &(g, k) in &horizon {
                let gv = h.faces[g as usize].v;
                let (a, b) = (gv[k], gv[(k + 1) % 3]);
                let outer = h.faces[g as usize].adj[k];
                let nf = h.alloc([a, b, p]);
                h.faces[nf as usize].adj[0] = outer;
                let ov = h.faces[outer as usize].v;
                for m in 0..3 {
                    if ov[m] == b && ov[(m + 1) % 3] == a {
                        h.faces[outer as usize].adj[m] = nf;
                    }
                }
                start_of[a as usize] = nf;
                end_of[b as usize] = nf;
                new_faces.push(nf);
            }
            for &nf in &new_faces {
                let [a, b, _] = h.faces[nf as usize].v;
                h.faces[nf as usize].adj[1] = start_of[b as usize];
                h.faces[nf as usize].adj[2] = end_of[a as usize];
            }
            let mut orphans = Vec::new();
            for &g in &visible {
                let face = &mut h.faces[g as usize];
                face.alive = false;
                orphans.append(&mut face.outside);
                h.free.push(g);
            }
            for q in orphans {
                if q != p {
                    h.assign(q, &new_faces);
                }
            }
            for &nf in &new_faces {
                if !h.faces[nf as usize].outside.is_empty() {
                    stack.push(nf);
                }
            }
        }
        Some(h.faces.iter().filter(|f| f.alive).map(|f| f.v).collect())
    }

    #[inline]
    fn orient(&self, v: &[u32; 3], q: u32) -> f64 {
        let p = self.pts;
        orient3d(c3(&p[v[0] as usize]), c3(&p[v[1] as usize]), c3(&p[v[2] as usize]), c3(&p[q as usize]))
    }

    fn alloc(&mut self, v: [u32; 3]) -> u32 {
        let face = Face {
            v,
            adj: [NONE; 3],
            outside: Vec::new(),
            far: NONE,
            far_d: 0.0,
            alive: true,
            stamp: 0,
            visible: false,
        };
        if let Some(id) = self.free.pop() {
            let old = std::mem::replace(&mut self.faces[id as usize], face);
            // keep the allocation of the recycled outside list
            let mut buf = old.outside;
            buf.clear();
            self.faces[id as usize].outside = buf;
            id
        } else {
            self.faces.push(face);
            (self.faces.len() - 1) as u32
        }
    }

    fn assign(&mut self, q: u32, candidates: &[u32]) {
        for &f in candidates {
            let d = self.orient(&self.faces[f as usize].v, q);
            if d > 0.0 {
                let face = &mut self.faces[f as usize];
                face.outside.push(q);
                if d > face.far_d {
                    face.far_d = d;
                    face.far = q;
                }
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Minimum over all lattice triangles containing the node of the interpolated value,
    /// capped by the node's own value.
    fn brute(nx: usize, z: &[f64]) -> Vec<f64> {
        let n = z.len();
        let p = |k: usize| ((k % nx) as i64, (k / nx) as i64, z[k]);
        let mut out = z.to_vec();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let (pa, pb, pc) = (p(a), p(b), p(c));
                    let area = cross(pa, pb, pc);
                    if area == 0 {
                        continue;
                    }
                    for (k, o) in out.iter_mut().enumerate() {
                        let q = p(k);
                        let (wa, wb, wc) = (cross(pb, pc, q), cross(pc, pa, q), cross(pa, pb, q));
                        let inside =
                            if area > 0 { wa >= 0 && wb >= 0 && wc >= 0 } else { wa <= 0 && wb <= 0 && wc <= 0 };
                        if inside {
                            let v = (wa as f64 * pa.2 + wb as f64 * pb.2 + wc as f64 * pc.2) / area as f64;
                            *o = o.min(v);
                        }
                    }
                }
            }
        }
        // collinear triples on lattice lines are covered by degenerate triangles: add segments
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let (pa, pb) = (p(a), p(b));
                for (k, o) in out.iter_mut().enumerate() {
                    let q = p(k);
                    if cross(pa, pb, q) != 0 {
                        continue;
                    }
                    let t_num = (q.0 - pa.0) * (pb.0 - pa.0) + (q.1 - pa.1) * (pb.1 - pa.1);
                    let t_den = (pb.0 - pa.0).pow(2) + (pb.1 - pa.1).pow(2);
                    if t_num < 0 || t_num > t_den {
                        continue;
                    }
                    let t = t_num as f64 / t_den as f64;
                    *o = o.min(pa.2 + t * (pb.2 - pa.2));
                }
            }
        }
        out
    }

    #[test]
    fn matches_brute_force_on_small_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let nx = rng.gen_range(2..6);
            let ny = rng.gen_range(2..6);
            let z: Vec<f64> = (0..nx * ny)
                .map(|_| if trial % 3 == 0 { rng.gen_range(0..3) as f64 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let got = lower_envelope_lattice(nx, ny, &z);
            let want = brute(nx, &z);
            for k in 0..z.len() {
                assert!((got[k] - want[k]).abs() < 1e-12, "trial {trial} node {k}: {} vs {}", got[k], want[k]);
            }
        }
    }

    #[test]
    fn paraboloid_is_its_own_envelope() {
        let (nx, ny) = (30, 20);
        let z: Vec<f64> = (0..nx * ny)
            .map(|k| {
                let (i, j) = ((k % nx) as f64, (k / nx) as f64);
                0.3 * i * i + 0.2 * j * j - i + 2.0
            })
            .collect();
        let got = lower_envelope_lattice(nx, ny, &z);
        for k in 0..z.len() {
            assert!((got[k] - z[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn coplanar_input_is_returned() {
        let (nx, ny) = (5, 4);
        let z: Vec<f64> = (0..nx * ny).map(|k| (k % nx) as f64 - 2.0 * (k / nx) as f64).collect();
        assert_eq!(lower_envelope_lattice(nx, ny, &z), z);
    }

    #[test]
    fn sentinel_field_with_sparse_samples() {
        // three samples in a large sentinel field: the envelope is their plane inside the triangle
        let (nx, ny) = (41, 41);
        let mut z = vec![1e6; nx * ny];
        let at = |i: usize, j: usize| j * nx + i;
        z[at(5, 5)] = 1.0;
        z[at(35, 5)] = 2.0;
        z[at(5, 35)] = 4.0;
        let got = lower_envelope_lattice(nx, ny, &z);
        for j in 5..=35 {
            for i in 5..=35 {
                if i + j <= 40 {
                    let want = 1.0 + (i as f64 - 5.0) / 30.0 + 3.0 * (j as f64 - 5.0) / 30.0;
                    assert!((got[at(i, j)] - want).abs() < 1e-9, "{i},{j}");
                }
            }
        }
    }

    #[test]
    fn one_dimensional_chain() {
        let z = vec![0.0, 3.0, 1.0, 5.0, 0.0];
        assert_eq!(lower_envelope_lattice(5, 1, &z), vec![0.0, 0.0, 0.0, 0.0, 0.0]);
        let w = vec![2.0, 0.0, 1.0];
        assert_eq!(lower_envelope_lattice(1, 3, &w), vec![2.0, 0.0, 1.0]);
    }
}
