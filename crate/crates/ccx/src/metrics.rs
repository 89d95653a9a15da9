//! Relative L2 errors, PSNR and the combined error report.

use serde::{Serialize, Serializer};

use crate::error::{CcxError, Result};
use crate::field::{SampleMask, SampledFunction, ScalarField};

/// Error measures of an approximation against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    /// Relative L2 error over all nodes.
    pub eps: f64,
    /// Relative L2 error over the sample set, against the sample values.
    pub eps_k: f64,
    /// PSNR in dB for 8-bit data; infinite when the images agree.
    #[serde(serialize_with = "serialize_db")]
    pub psnr_db: f64,
    /// Largest absolute deviation.
    pub linf: f64,
}

/// Writes finite values as numbers and infinity as the string `"inf"`.
pub fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn same_grid(f: &ScalarField, g: &ScalarField) -> Result<()> {
    if f.spec != g.spec {
        return Err(CcxError::GridMismatch("fields are on different grids".into()));
    }
    Ok(())
}

/// `sqrt(sum (f - g)^2) / sqrt(sum f^2)` over all nodes or over the members of `mask`.
pub fn relative_l2(f: &ScalarField, g: &ScalarField, mask: Option<&SampleMask>) -> Result<f64> {
    same_grid(f, g)?;
    if let Some(m) = mask {
        if m.spec != f.spec {
            return Err(CcxError::GridMismatch("mask is on a different grid".into()));
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (k, (a, b)) in f.values.iter().zip(&g.values).enumerate() {
        if mask.is_some_and(|m| !m.member[k]) {
            continue;
        }
        num += (a - b) * (a - b);
        den += a * a;
    }
    if den == 0.0 {
        return Err(CcxError::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

/// `10 log10(255^2 / MSE)`, infinite when the mean squared error is zero.
pub fn psnr(original: &ScalarField, restored: &ScalarField) -> Result<f64> {
    same_grid(original, restored)?;
    let n = original.values.len() as f64;
    let mse = original.values.iter().zip(&restored.values).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0 * 255.0 / mse).log10() })
}

/// Relative L2 deviation of `approx` from the sample values on K.
pub fn sample_l2(sample: &SampledFunction, approx: &ScalarField) -> Result<f64> {
    if sample.spec() != approx.spec {
        return Err(CcxError::GridMismatch("sample and field grids differ".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (k, v) in sample.samples() {
        num += (v - approx.values[k]).powi(2);
        den += v * v;
    }
    if den == 0.0 {
        return Err(CcxError::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

/// All error measures of `approx` against `reference`, with `eps_k` taken against the samples.
pub fn error_report(reference: &ScalarField, approx: &ScalarField, sample: &SampledFunction) -> Result<ErrorReport> {
    Ok(ErrorReport {
        eps: relative_l2(reference, approx, None)?,
        eps_k: sample_l2(sample, approx)?,
        psnr_db: psnr(reference, approx)?,
        linf: reference.max_abs_diff(approx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    fn field(v: &[f64]) -> ScalarField {
        ScalarField::new(GridSpec::new(v.len(), 1, 0.0, 0.0, 1.0).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn relative_l2_by_hand() {
        let f = field(&[3.0, 4.0]);
        assert_eq!(relative_l2(&f, &f, None).unwrap(), 0.0);
        assert_eq!(relative_l2(&f, &field(&[0.0, 0.0]), None).unwrap(), 1.0);
        assert!((relative_l2(&f, &field(&[3.0, 0.0]), None).unwrap() - 0.8).abs() < 1e-15);
        let mask = SampleMask::new(f.spec, vec![false, true]).unwrap();
        assert_eq!(relative_l2(&f, &field(&[0.0, 4.0]), Some(&mask)).unwrap(), 0.0);
        assert!(matches!(relative_l2(&field(&[0.0, 0.0]), &f, None), Err(CcxError::ZeroDenominator)));
    }

    #[test]
    fn sample_error_uses_sample_values() {
        let f = field(&[3.0, 4.0, 5.0]);
        let mask = SampleMask::new(f.spec, vec![true, false, true]).unwrap();
        // samples carry 3 and 6, not the field values
        let s = SampledFunction::new(mask, vec![3.0, 6.0], crate::field::Module::AutoInfinity).unwrap();
        assert!((sample_l2(&s, &f).unwrap() - (1.0f64 / 45.0).sqrt()).abs() < 1e-15);
        let r = error_report(&f, &f, &s).unwrap();
        assert_eq!(r.eps, 0.0);
        assert!(r.eps_k > 0.0);
    }

    #[test]
    fn psnr_by_hand() {
        let f = field(&[10.0, 20.0, 30.0]);
        assert_eq!(psnr(&f, &f).unwrap(), f64::INFINITY);
        let shifted = f.map(|v| v + 1.0);
        assert!((psnr(&f, &shifted).unwrap() - 10.0 * 65025f64.log10()).abs() < 1e-12);
        assert!((psnr(&field(&[0.0; 4]), &field(&[255.0; 4])).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn infinite_psnr_serialises_as_sentinel() {
        let r = ErrorReport { eps: 0.0, eps_k: 0.0, psnr_db: f64::INFINITY, linf: 0.0 };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"psnr_db\":\"inf\""), "{s}");
    }
}
