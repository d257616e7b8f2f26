//! Rotation of Stokes space estimated from prepared and measured polarizations.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEstimate {
    pub rotation: Matrix3<f64>,
    /// Root-mean-square distance between measured and rotated prepared vectors.
    pub rms_error: f64,
}

impl RotationEstimate {
    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) / 2.0)
            .clamp(-1.0, 1.0)
            .acos()
    }
}

/// Proper rotation `R` minimizing `Σ |m − R p|²` over pairs `(p, m)` (Kabsch).
pub fn estimate_polarization_rotation(
    pairs: &[(Vector3<f64>, Vector3<f64>)],
) -> Result<RotationEstimate> {
    let mut spread = Matrix3::<f64>::zeros();
    let mut cross = Matrix3::<f64>::zeros();
    for (p, m) in pairs {
        spread += p * p.transpose();
        cross += p * m.transpose();
    }
    let sv = spread.singular_values();
    let (max, min) = (sv.max(), sv.min());
    if pairs.len() < 3 || !(min > 1e-9 * max) {
        return Err(Error::Degenerate(
            "prepared Stokes vectors must not be coplanar".into(),
        ));
    }
    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u.expect("computed"), svd.v_t.expect("computed"));
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rotation = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let ss: f64 = pairs
        .iter()
        .map(|(p, m)| (m - rotation * p).norm_squared())
        .sum();
    Ok(RotationEstimate {
        rotation,
        rms_error: (ss / pairs.len() as f64).sqrt(),
    })
}
