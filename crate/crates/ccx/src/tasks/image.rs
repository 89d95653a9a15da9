//! Inpainting and salt & pepper restoration of grey-scale images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CcxError, Result};
use crate::field::{SampleMask, SampledFunction, ScalarField};
use crate::metrics::psnr;
use crate::tasks::scatter::random_mask;
use crate::transforms::{average_approximation, TransformParams};

/// Fills the damaged nodes of `image` from the undamaged ones, leaving the latter untouched.
///
/// `damage` flags one entry per node and may be empty of damage.
pub fn inpaint(image: &ScalarField, damage: &[bool], p: &TransformParams) -> Result<ScalarField> {
    if damage.len() != image.spec.len() {
        return Err(CcxError::GridMismatch("damage mask and image grids differ".into()));
    }
    let n_damaged = damage.iter().filter(|&&d| d).count();
    if n_damaged == 0 {
        return Ok(image.clone());
    }
    if n_damaged == image.spec.len() {
        return Err(CcxError::AllDamaged);
    }
    let keep = SampleMask::new(image.spec, damage.iter().map(|&d| !d).collect())?;
    let sf = SampledFunction::from_field(image, keep, p.module)?;
    let avg = average_approximation(&sf, p)?;
    let mut out = image.clone();
    for (k, &d) in damage.iter().enumerate() {
        if d {
            out.values[k] = avg.field.values[k];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    SaltPepper,
}

/// Impulse noise hitting `round(density n)` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub density: f64,
    pub seed: u64,
    #[serde(default = "salt_pepper")]
    pub kind: NoiseKind,
}

fn salt_pepper() -> NoiseKind {
    NoiseKind::SaltPepper
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaddingMode {
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaddingSpec {
    pub width: usize,
    #[serde(default = "mirror")]
    pub mode: PaddingMode,
}

fn mirror() -> PaddingMode {
    PaddingMode::Mirror
}

/// Sets each selected pixel to 0 or 255 with equal probability and returns the corruption mask.
pub fn corrupt_salt_pepper(image: &ScalarField, noise: &NoiseSpec) -> Result<(ScalarField, SampleMask)> {
    let mask = random_mask(image.spec, noise.density, noise.seed)?;
    // a separate stream so the choice of pixels does not depend on the coin flips
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(1);
    let mut out = image.clone();
    for k in mask.indices() {
        out.values[k] = if rng.gen::<bool>() { 255.0 } else { 0.0 };
    }
    Ok((out, mask))
}

/// Reflection of an index into `0..n` with the edge pixel repeated.
fn mirror_index(i: i64, n: i64) -> usize {
    let period = 2 * n;
    let r = i.rem_euclid(period);
    (if r < n { r } else { period - 1 - r }) as usize
}

/// Pads an image and a per-pixel flag array by mirror reflection about the image border.
pub fn mirror_pad(image: &ScalarField, flags: &[bool], width: usize) -> Result<(ScalarField, Vec<bool>)> {
    let s = image.spec;
    let spec = s.padded(width)?;
    let (nx, ny) = (spec.nx, spec.ny);
    let mut values = Vec::with_capacity(nx * ny);
    let mut padded = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let sj = mirror_index(j as i64 - width as i64, s.ny as i64);
        for i in 0..nx {
            let si = mirror_index(i as i64 - width as i64, s.nx as i64);
            let k = s.index(si, sj);
            values.push(image.values[k]);
            padded.push(flags[k]);
        }
    }
    Ok((ScalarField::new(spec, values)?, padded))
}

/// Outcome of a salt & pepper restoration.
#[derive(Debug, Clone)]
pub struct Denoised {
    pub corrupted: ScalarField,
    pub noise_mask: SampleMask,
    pub restored: ScalarField,
    pub psnr_db: f64,
    pub corrupted_psnr_db: f64,
    pub m_used: f64,
}

/// Corrupts `image`, restores it from the untouched pixels and scores it against the original.
pub fn denoise_salt_pepper(
    image: &ScalarField,
    noise: &NoiseSpec,
    pad: &PaddingSpec,
    p: &TransformParams,
) -> Result<Denoised> {
    let (corrupted, noise_mask) = corrupt_salt_pepper(image, noise)?;
    let corrupted_psnr_db = psnr(image, &corrupted)?;
    if noise_mask.count() == image.spec.len() {
        return Err(CcxError::AllDamaged);
    }
    let (padded, keep) = mirror_pad(&corrupted, &noise_mask.complement(), pad.width)?;
    let sf = SampledFunction::from_field(&padded, SampleMask::new(padded.spec, keep)?, p.module)?;
    let avg = average_approximation(&sf, p)?;
    let inner = avg.field.crop(pad.width)?;
    let mut restored = corrupted.clone();
    for (k, &hit) in noise_mask.member.iter().enumerate() {
        if hit {
            restored.values[k] = inner.values[k].clamp(0.0, 255.0);
        }
    }
    let psnr_db = psnr(image, &restored)?;
    Ok(Denoised { corrupted, noise_mask, restored, psnr_db, corrupted_psnr_db, m_used: avg.m_used })
}
