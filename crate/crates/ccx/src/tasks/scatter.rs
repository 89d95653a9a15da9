//! Random node subsets for scattered-data reconstruction.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CcxError, Result};
use crate::field::{Module, SampleMask, SampledFunction, ScalarField};
use crate::tasks::padded_average;
use crate::transforms::TransformParams;

/// Exactly `round(density n)` distinct nodes drawn uniformly with a seeded generator.
pub fn random_mask(spec: crate::field::GridSpec, density: f64, seed: u64) -> Result<SampleMask> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(CcxError::Config(format!("density must lie in (0, 1], got {density}")));
    }
    let n = spec.len();
    let count = ((density * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = sample(&mut rng, n, count).into_vec();
    SampleMask::from_indices(spec, &idx)
}

/// The values of `field` on a random node subset.
pub fn build_scatter_sample(field: &ScalarField, density: f64, seed: u64) -> Result<SampledFunction> {
    let mask = random_mask(field.spec, density, seed)?;
    SampledFunction::from_field(field, mask, Module::AutoInfinity)
}

/// Reconstruction from scattered samples and the module it used.
pub fn reconstruct_scatter(sample: &SampledFunction, p: &TransformParams, margin: usize) -> Result<(ScalarField, f64)> {
    let (field, avg) = padded_average(sample, p, margin)?;
    Ok((field, avg.m_used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::functions::{unit_grid, TestFunctionId};

    #[test]
    fn counts_and_reproducibility() {
        let spec = unit_grid(201).unwrap();
        let f = TestFunctionId::Franke.field(spec);
        let a = build_scatter_sample(&f, 0.01, 7).unwrap();
        assert_eq!(a.mask.count(), 404);
        let b = build_scatter_sample(&f, 0.01, 7).unwrap();
        assert_eq!(a.mask, b.mask);
        let c = build_scatter_sample(&f, 0.01, 8).unwrap();
        assert_ne!(a.mask, c.mask);
        assert_eq!(build_scatter_sample(&f, 1.0, 1).unwrap().mask.count(), spec.len());
        assert!(build_scatter_sample(&f, 0.0, 1).is_err());
        assert!(build_scatter_sample(&f, 1.5, 1).is_err());
        for (k, v) in a.samples() {
            assert_eq!(v, f.values[k]);
        }
    }

    #[test]
    fn plane_is_reproduced_everywhere() {
        // inside the hull by interpolation, outside thanks to the margin
        let spec = unit_grid(41).unwrap();
        let f = ScalarField::from_fn(spec, |x, y| 2.0 * x - y + 1.0);
        let s = build_scatter_sample(&f, 0.05, 3).unwrap();
        let p = TransformParams::new(1e3);
        let (inside, _) = reconstruct_scatter(&s, &p, 0).unwrap();
        let (padded, m) = reconstruct_scatter(&s, &p, 20).unwrap();
        assert!(m > 0.0);
        for (k, v) in s.samples() {
            assert!((padded.values[k] - v).abs() < 1e-9);
            assert!((inside.values[k] - v).abs() < 1e-9);
        }
        let err = |g: &ScalarField| crate::metrics::relative_l2(&f, g, None).unwrap();
        assert!(err(&padded) < err(&inside));
    }
}
