use nalgebra::Complex;

use super::{JcmEstimate, Method};
use crate::error::{JcmError, Result};
use crate::linalg::hermitize;
use crate::signal::ObservationBatch;

/// Sample covariance `(1/K) sum_k y[k] y[k]^H`.
pub fn scm(batch: &ObservationBatch) -> Result<JcmEstimate> {
    if batch.is_empty() {
        return Err(JcmError::EmptyBatch);
    }
    let y = &batch.samples;
    let r = hermitize(&(y * y.adjoint() / Complex::new(batch.len() as f64, 0.0)));
    Ok(JcmEstimate::direct(r, Method::Scm, None))
}
