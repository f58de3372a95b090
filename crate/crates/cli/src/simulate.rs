use dsvkernel::fock::{circuit_kernel, SqueezeParams};
use dsvkernel::kernel::{gamma_from_squeeze, kernel_scalar};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Fock-space detection probability next to the closed-form kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapRecord {
    pub xp: f64,
    pub xq: f64,
    pub r: f64,
    pub theta: f64,
    pub cutoff: usize,
    pub gamma: f64,
    pub probability: f64,
    pub closed_form: f64,
    pub abs_error: f64,
}

pub fn simulate_overlap(
    xp: f64,
    xq: f64,
    r: f64,
    theta: f64,
    cutoff: usize,
) -> Result<OverlapRecord> {
    let eta = SqueezeParams::new(r, theta)?;
    let probability = circuit_kernel(xp, xq, eta, cutoff)?;
    let gamma = gamma_from_squeeze(eta);
    let closed_form = kernel_scalar(xp, xq, gamma)?;
    Ok(OverlapRecord {
        xp,
        xq,
        r,
        theta,
        cutoff,
        gamma,
        probability,
        closed_form,
        abs_error: (probability - closed_form).abs(),
    })
}
