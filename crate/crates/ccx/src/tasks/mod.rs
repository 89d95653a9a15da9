//! End-to-end reconstruction pipelines and their test functions.

pub mod functions;
pub mod image;
pub mod levelset;
pub mod scatter;

pub use functions::{cpa_triangulation, dpa, franke, unit_grid, TestFunctionId, Triangulation};
pub use image::{denoise_salt_pepper, inpaint, mirror_pad, Denoised, NoiseKind, NoiseSpec, PaddingMode, PaddingSpec};
pub use levelset::{
    build_levelset_sample, equispaced_levels, max_principle_check, reconstruct_levelset, LevelSetReconstruction,
    LevelSetSample, MaxPrincipleReport,
};
pub use scatter::{build_scatter_sample, random_mask, reconstruct_scatter};

use crate::error::Result;
use crate::field::{GridSpec, SampledFunction, ScalarField};
use crate::transforms::{average_approximation, Average, TransformParams};

/// Half the larger grid side, the margin used when none is given.
pub fn default_margin(spec: &GridSpec) -> usize {
    spec.nx.max(spec.ny) / 2
}

/// Average approximation computed on the grid grown by `margin` unsampled nodes and cropped back.
///
/// The transforms are defined on the whole plane; the margin keeps the edge of the computational
/// grid away from the sample grid, so values outside the hull of K are not pulled towards zero.
pub fn padded_average(sf: &SampledFunction, p: &TransformParams, margin: usize) -> Result<(ScalarField, Average)> {
    let avg = average_approximation(&sf.padded(margin)?, p)?;
    Ok((avg.field.crop(margin)?, avg))
}
