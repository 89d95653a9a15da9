//! Test functions on the unit square.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{CcxError, Result};
use crate::field::{GridSpec, ScalarField};

/// Smooth, continuous piecewise affine and discontinuous piecewise affine test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionId {
    Franke,
    Cpa,
    Dpa,
}

impl TestFunctionId {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            TestFunctionId::Franke => franke(x, y),
            TestFunctionId::Cpa => cpa_triangulation().eval(x, y).unwrap_or(0.0),
            TestFunctionId::Dpa => dpa(x, y),
        }
    }

    /// Label of the continuous piece containing `(x, y)`.
    pub fn piece(&self, x: f64, y: f64) -> u8 {
        match self {
            TestFunctionId::Dpa => u8::from(x >= 0.5) + 2 * u8::from(y >= 0.5),
            _ => 0,
        }
    }

    pub fn field(&self, spec: GridSpec) -> ScalarField {
        ScalarField::from_fn(spec, |x, y| self.eval(x, y))
    }

    pub fn pieces(&self, spec: &GridSpec) -> Vec<u8> {
        (0..spec.len())
            .map(|k| {
                let (x, y) = spec.node(k);
                self.piece(x, y)
            })
            .collect()
    }
}

/// `n x n` grid on the closed unit square.
pub fn unit_grid(n: usize) -> Result<GridSpec> {
    if n < 2 {
        return Err(CcxError::InvalidGrid(format!("need at least 2 nodes per side, got {n}")));
    }
    GridSpec::new(n, n, 0.0, 0.0, 1.0 / (n - 1) as f64)
}

/// Franke's test function: two Gaussian peaks and a sharper dip on a sloping surface.
pub fn franke(x: f64, y: f64) -> f64 {
    let (u, v) = (9.0 * x, 9.0 * y);
    0.75 * (-((u - 2.0).powi(2) + (v - 2.0).powi(2)) / 4.0).exp()
        + 0.75 * (-((u + 1.0).powi(2) / 49.0 + (v + 1.0) / 10.0)).exp()
        + 0.5 * (-((u - 7.0).powi(2) + (v - 3.0).powi(2)) / 4.0).exp()
        - 0.2 * (-((u - 4.0).powi(2) + (v - 7.0).powi(2))).exp()
}

/// Four affine pieces with jumps along `x = 1/2` and `y = 1/2`.
pub fn dpa(x: f64, y: f64) -> f64 {
    match (x >= 0.5, y >= 0.5) {
        (true, true) => x + y - 1.0,
        (true, false) => x - y - 0.5,
        (false, true) => -x + y - 0.5,
        (false, false) => -x - y,
    }
}

/// Nodal values on a planar triangulation, evaluated by barycentric interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub nodes: Vec<(f64, f64, f64)>,
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    /// Parses `nodes N` followed by `x y value` lines and `triangles T` followed by index
    /// triples. Lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| CcxError::Format(format!("triangulation: {msg}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut header = |name: &str| -> Result<usize> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{name}` header")))?;
            match line.split_whitespace().collect::<Vec<_>>()[..] {
                [h, n] if h == name => n.parse().map_err(|_| bad(format!("bad count in {line:?}"))),
                _ => Err(bad(format!("expected `{name} <count>`, got {line:?}"))),
            }
        };
        let n = header("nodes")?;
        let mut node_lines = Vec::with_capacity(n);
        let mut rest = Vec::new();
        for line in lines.by_ref() {
            if node_lines.len() < n {
                node_lines.push(line);
            } else {
                rest.push(line);
                break;
            }
        }
        let nodes = node_lines
            .iter()
            .map(|l| {
                let v: Vec<f64> = l
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(format!("bad node line {l:?}")))?;
                match v[..] {
                    [x, y, z] => Ok((x, y, z)),
                    _ => Err(bad(format!("node line needs 3 numbers: {l:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if nodes.len() != n {
            return Err(bad(format!("expected {n} nodes, found {}", nodes.len())));
        }
        let mut rest_lines = rest.into_iter().chain(lines);
        let tline = rest_lines.next().ok_or_else(|| bad("missing `triangles` header".into()))?;
        let t = match tline.split_whitespace().collect::<Vec<_>>()[..] {
            ["triangles", c] => c.parse::<usize>().map_err(|_| bad(format!("bad count in {tline:?}")))?,
            _ => return Err(bad(format!("expected `triangles <count>`, got {tline:?}"))),
        };
        let triangles = rest_lines
            .map(|l| {
                let v: Vec<usize> = l
                    .split_whitespace()
                    .map(|t| t.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(format!("bad triangle line {l:?}")))?;
                match v[..] {
                    [a, b, c] if a < n && b < n && c < n => Ok([a, b, c]),
                    _ => Err(bad(format!("triangle line needs 3 node indices below {n}: {l:?}"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if triangles.len() != t {
            return Err(bad(format!("expected {t} triangles, found {}", triangles.len())));
        }
        Ok(Triangulation { nodes, triangles })
    }

    /// Interpolated value, or `None` outside every triangle.
    pub fn eval(&self, x: f64, y: f64) -> Option<f64> {
        let tol = 1e-12;
        self.triangles.iter().find_map(|&[a, b, c]| {
            let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
            let det = (pb.0 - pa.0) * (pc.1 - pa.1) - (pc.0 - pa.0) * (pb.1 - pa.1);
            let wb = ((x - pa.0) * (pc.1 - pa.1) - (pc.0 - pa.0) * (y - pa.1)) / det;
            let wc = ((pb.0 - pa.0) * (y - pa.1) - (x - pa.0) * (pb.1 - pa.1)) / det;
            let wa = 1.0 - wb - wc;
            (wa >= -tol && wb >= -tol && wc >= -tol).then_some(wa * pa.2 + wb * pb.2 + wc * pc.2)
        })
    }
}

/// The bundled pyramid used for the continuous piecewise affine test function.
pub fn cpa_triangulation() -> &'static Triangulation {
    static T: OnceLock<Triangulation> = OnceLock::new();
    T.get_or_init(|| {
        Triangulation::parse(include_str!("../../data/cpa_triangulation.txt")).expect("bundled triangulation parses")
    })
}
