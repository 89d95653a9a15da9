//! Sample sets made of level lines and their reconstruction.

use serde::Serialize;

use crate::error::{CcxError, Result};
use crate::field::{crossing_nodes_within, piece_boundary_nodes, Module, SampledFunction, ScalarField};
use crate::tasks::padded_average;
use crate::transforms::TransformParams;

/// A level-line sample with the bookkeeping needed by the reconstruction checks.
#[derive(Debug, Clone)]
pub struct LevelSetSample {
    pub sample: SampledFunction,
    pub levels: Vec<f64>,
    /// Level index of each node on a level line; `None` off K and on sampled jump nodes.
    pub node_level: Vec<Option<usize>>,
    /// Nodes sampled with their own value because they border a jump.
    pub jump_nodes: usize,
    /// Smallest distance between nodes of different levels.
    pub delta0: f64,
    /// Level pairs closer than two grid spacings.
    pub under_resolved: Vec<(usize, usize)>,
}

impl LevelSetSample {
    /// `(a_m - a_0) / delta0^2`.
    pub fn lambda_required(&self) -> f64 {
        let span = self.levels.last().unwrap_or(&0.0) - self.levels.first().unwrap_or(&0.0);
        if self.delta0.is_finite() {
            span / (self.delta0 * self.delta0)
        } else {
            0.0
        }
    }
}

/// `n + 1` equispaced levels from `lo` to `hi` inclusive.
pub fn equispaced_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * step }).collect()
}

/// Samples `field` on its crossings of `levels`, assigning each marked node its level value.
///
/// With `pieces`, crossings are only detected between nodes of the same piece and the nodes
/// bordering another piece are sampled with their own value, so a jump is sampled exactly. A
/// node marked by several levels takes the level closest to its value.
pub fn build_levelset_sample(field: &ScalarField, levels: &[f64], pieces: Option<&[u8]>) -> Result<LevelSetSample> {
    let spec = field.spec;
    if levels.is_empty() {
        return Err(CcxError::Config("at least one level is required".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CcxError::UnsortedInput);
    }
    if let Some(p) = pieces {
        if p.len() != spec.len() {
            return Err(CcxError::GridMismatch("piece labels do not match the grid".into()));
        }
    }
    let mut node_level: Vec<Option<usize>> = vec![None; spec.len()];
    for (li, &a) in levels.iter().enumerate() {
        let marked = crossing_nodes_within(field, a, pieces);
        if !marked.iter().any(|&m| m) {
            return Err(CcxError::EmptyLevelSet(a));
        }
        for (k, m) in marked.into_iter().enumerate() {
            if !m {
                continue;
            }
            let v = field.values[k];
            node_level[k] = match node_level[k] {
                Some(prev) if (levels[prev] - v).abs() <= (a - v).abs() => Some(prev),
                _ => Some(li),
            };
        }
    }
    let jump = pieces.map(|p| piece_boundary_nodes(&spec, p)).unwrap_or_else(|| vec![false; spec.len()]);
    let mut vals: Vec<Option<f64>> = vec![None; spec.len()];
    let mut jump_nodes = 0;
    for k in 0..spec.len() {
        if jump[k] {
            vals[k] = Some(field.values[k]);
            node_level[k] = None;
            jump_nodes += 1;
        } else if let Some(li) = node_level[k] {
            vals[k] = Some(levels[li]);
        }
    }
    let sample = SampledFunction::from_options(spec, &vals, Module::AutoInfinity)?;
    let (delta0, under_resolved) = separation(&spec, &node_level);
    Ok(LevelSetSample { sample, levels: levels.to_vec(), node_level, jump_nodes, delta0, under_resolved })
}

/// Minimum distance between nodes of different levels and the level pairs closer than `2h`.
fn separation(spec: &crate::field::GridSpec, node_level: &[Option<usize>]) -> (f64, Vec<(usize, usize)>) {
    let (nx, ny) = (spec.nx as i64, spec.ny as i64);
    let at = |i: i64, j: i64| -> Option<usize> {
        if i < 0 || j < 0 || i >= nx || j >= ny {
            None
        } else {
            node_level[(j * nx + i) as usize]
        }
    };
    let mut best = i64::MAX;
    let mut close = std::collections::BTreeSet::new();
    for k in 0..node_level.len() {
        let Some(li) = node_level[k] else { continue };
        let (i, j) = spec.ij(k);
        let (i, j) = (i as i64, j as i64);
        let mut local = i64::MAX;
        let mut r = 1i64;
        // rings of growing Chebyshev radius until no closer node can exist
        while r * r < local.min(best) && r <= nx.max(ny) {
            for di in -r..=r {
                for dj in -r..=r {
                    if di.abs() != r && dj.abs() != r {
                        continue;
                    }
                    if let Some(lj) = at(i + di, j + dj) {
                        if lj != li {
                            let d2 = di * di + dj * dj;
                            local = local.min(d2);
                            if d2 < 4 {
                                close.insert((li.min(lj), li.max(lj)));
                            }
                        }
                    }
                }
            }
            r += 1;
        }
        best = best.min(local);
    }
    let delta0 = if best == i64::MAX { f64::INFINITY } else { (best as f64).sqrt() * spec.h };
    (delta0, close.into_iter().collect())
}

/// Level-set reconstruction with the threshold bookkeeping.
#[derive(Debug, Clone)]
pub struct LevelSetReconstruction {
    pub field: ScalarField,
    pub m_used: f64,
    pub lambda_required: f64,
    pub lambda_below_threshold: bool,
    pub delta0: f64,
}

/// Average approximation of a level-line sample over its whole grid, computed with `margin`
/// extra unsampled nodes on each side.
///
/// A scale below `(a_m - a_0) / delta0^2` is flagged, not rejected.
pub fn reconstruct_levelset(ls: &LevelSetSample, p: &TransformParams, margin: usize) -> Result<LevelSetReconstruction> {
    let (field, avg) = padded_average(&ls.sample, p, margin)?;
    let lambda_required = ls.lambda_required();
    Ok(LevelSetReconstruction {
        field,
        m_used: avg.m_used,
        lambda_required,
        lambda_below_threshold: p.lambda <= lambda_required,
        delta0: ls.delta0,
    })
}

/// Discrete maximum principle check of a level-set reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxPrincipleReport {
    /// Largest excursion outside `[a_i, a_{i+1}]` over nodes whose true value lies in that band.
    pub band_violation: f64,
    /// Largest deviation from `a_0` where the true value is below `a_0`.
    pub flat_deviation: f64,
    pub eps_band: f64,
    pub passed: bool,
}

/// Compares `recon` with the band structure of `truth`; `eps_band = 10 h (a_m - a_0)`.
pub fn max_principle_check(truth: &ScalarField, recon: &ScalarField, levels: &[f64]) -> Result<MaxPrincipleReport> {
    if truth.spec != recon.spec {
        return Err(CcxError::GridMismatch("reconstruction and reference grids differ".into()));
    }
    let (a0, am) = (levels[0], levels[levels.len() - 1]);
    let eps_band = 10.0 * truth.spec.h * (am - a0);
    let (mut band_violation, mut flat_deviation) = (0.0f64, 0.0f64);
    for (&f, &a) in truth.values.iter().zip(&recon.values) {
        if f < a0 {
            flat_deviation = flat_deviation.max((a - a0).abs());
            continue;
        }
        let i = levels.partition_point(|&l| l <= f);
        let (lo, hi) = if i >= levels.len() { (am, am) } else { (levels[i - 1], levels[i]) };
        band_violation = band_violation.max(lo - a).max(a - hi);
    }
    let passed = band_violation <= eps_band && flat_deviation <= eps_band;
    Ok(MaxPrincipleReport { band_violation: band_violation.max(0.0), flat_deviation, eps_band, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use crate::tasks::functions::{unit_grid, TestFunctionId};

    #[test]
    fn plane_gives_nearest_column() {
        let spec = unit_grid(21).unwrap();
        let f = ScalarField::from_fn(spec, |x, _| x);
        let ls = build_levelset_sample(&f, &[0.5], None).unwrap();
        for (k, v) in ls.sample.samples() {
            assert_eq!(spec.ij(k).0, 10);
            assert_eq!(v, 0.5);
        }
        assert_eq!(ls.sample.mask.count(), 21);
    }

    #[test]
    fn levels_must_increase_and_be_crossed() {
        let spec = unit_grid(11).unwrap();
        let f = ScalarField::from_fn(spec, |x, _| x);
        assert!(matches!(build_levelset_sample(&f, &[0.5, 0.2], None), Err(CcxError::UnsortedInput)));
        assert!(matches!(build_levelset_sample(&f, &[0.5, 2.0], None), Err(CcxError::EmptyLevelSet(_))));
    }

    #[test]
    fn circles_are_within_a_diagonal_of_the_grid_set() {
        let spec = GridSpec::over_box(-2.5, 2.5, -2.5, 2.5, 0.02).unwrap();
        let f = ScalarField::from_fn(spec, |x, y| x.hypot(y));
        let ls = build_levelset_sample(&f, &[1.0, 2.0], None).unwrap();
        for (k, v) in ls.sample.samples() {
            let (x, y) = spec.node(k);
            assert!((x.hypot(y) - v).abs() <= spec.h * 2f64.sqrt());
        }
        // every point of each circle has a sampled node within a diagonal
        for t in 0..360 {
            let th = (t as f64).to_radians();
            for r in [1.0, 2.0] {
                let (px, py) = (r * th.cos(), r * th.sin());
                let hit = ls.sample.samples().any(|(k, _)| {
                    let (x, y) = spec.node(k);
                    (x - px).hypot(y - py) <= spec.h * 2f64.sqrt()
                });
                assert!(hit, "no node near ({px}, {py})");
            }
        }
        assert!((ls.delta0 - 1.0).abs() < 2.0 * spec.h);
        assert!(ls.under_resolved.is_empty());
    }

    #[test]
    fn parallel_lines_give_a_plane() {
        let spec = unit_grid(41).unwrap();
        let f = ScalarField::from_fn(spec, |x, _| x);
        let ls = build_levelset_sample(&f, &[0.25, 0.75], None).unwrap();
        let rec = reconstruct_levelset(&ls, &TransformParams::new(50.0), 20).unwrap();
        assert!(!rec.lambda_below_threshold);
        for k in 0..spec.len() {
            let (x, _) = spec.node(k);
            if (0.25..=0.75).contains(&x) {
                assert!((rec.field.values[k] - x).abs() <= 10.0 * spec.h, "x = {x}");
            }
        }
    }

    #[test]
    fn jumps_are_sampled_exactly() {
        let spec = unit_grid(21).unwrap();
        let id = TestFunctionId::Dpa;
        let f = id.field(spec);
        let pieces = id.pieces(&spec);
        // the infimum -1 is not attained, so the lowest level is dropped
        let levels = &equispaced_levels(-1.0, 1.0, 20)[1..];
        let ls = build_levelset_sample(&f, levels, Some(&pieces)).unwrap();
        assert!(ls.jump_nodes > 0);
        for (k, v) in ls.sample.samples() {
            assert!((v - f.values[k]).abs() < 1e-12, "node {k}");
        }
    }

    #[test]
    fn equispaced_levels_hit_both_ends() {
        let l = equispaced_levels(-1.0, 1.0, 20);
        assert_eq!(l.len(), 21);
        assert_eq!(l[0], -1.0);
        assert_eq!(l[20], 1.0);
        assert!((l[10]).abs() < 1e-15);
    }
}
