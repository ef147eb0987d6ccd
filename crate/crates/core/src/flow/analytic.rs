use crate::error::{Error, Result};
use crate::profile::RadialProfile;

/// Exact ∂ₜψ_r at t = 0 on the ray where the slope is identically 1.
///
/// There ψ ≡ n − k, and differentiating the ψ-equation in r gives
/// (n−1)(n−k)·e^{kr}(e^{kr} − kc)/φ^{2n+1}. For k = 1 this is
/// (n−1)²eʳ(eʳ − c)/φ^{2n+1}.
pub fn analytic_dt_psi_r(profile: &RadialProfile, r: f64) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::NonFinite("r"));
    }
    if !profile.on_cap_ray(r) {
        return Err(Error::OutsideCapRay { r });
    }
    let p = profile.params();
    let (n, k) = (p.n as f64, p.k as f64);
    let x = (k * r).exp();
    let phi = profile.phi(r);
    Ok((n - 1.0) * (n - k) * x * (x - k * p.c) / phi.powi(2 * p.n as i32 + 1))
}

/// The r at which ∂ₜψ_r(·, 0) changes sign on the cap ray: log(kc)/k.
pub fn sign_threshold(profile: &RadialProfile) -> f64 {
    let p = profile.params();
    (p.k as f64 * p.c).ln() / p.k as f64
}
