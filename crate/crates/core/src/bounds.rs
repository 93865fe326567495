//! Generalization bounds for sample-compressed margin and VC classifiers.
//!
//! `n` is the sample size and `k` the number of sample points used to build
//! the feature map (the data-dependent split points of an adaptive model).

use statrs::function::gamma::ln_gamma;

use crate::error::{NbcsError, Result};

/// `ln(n choose k)` through log-gamma.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "k must not exceed n");
    if k == 0 || k == n {
        return 0.0;
    }
    let n = n as f64;
    let k = k as f64;
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

fn check_common(n: u64, k: u64, delta: f64) -> Result<()> {
    if n <= k {
        return Err(NbcsError::BoundDomain { term: "n - k", reason: format!("need n > k, got n = {n}, k = {k}") });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(NbcsError::BoundDomain { term: "delta", reason: format!("need 0 < delta < 1, got {delta}") });
    }
    Ok(())
}

/// Margin bound for an SVM trained on a `k`-compressed feature map:
///
/// `hinge_sum/n + 4/(‖w‖√(n−k)) + √(ln log₂(2/‖w‖)/(n−k)) + √(ln(2·C(n,k)/δ)/(2(n−k)))`
pub fn margin_bound(n: u64, k: u64, w_norm: f64, hinge_sum: f64, delta: f64) -> Result<f64> {
    check_common(n, k, delta)?;
    if !(w_norm > 0.0 && w_norm <= 1.0) {
        return Err(NbcsError::BoundDomain { term: "w_norm", reason: format!("need 0 < |w| <= 1, got {w_norm}") });
    }
    if !(hinge_sum >= 0.0 && hinge_sum.is_finite()) {
        return Err(NbcsError::BoundDomain { term: "hinge_sum", reason: format!("need a finite value >= 0, got {hinge_sum}") });
    }
    let m = (n - k) as f64;
    let empirical = hinge_sum / n as f64;
    let complexity = 4.0 / (w_norm * m.sqrt());
    let stratification = ((2.0 / w_norm).log2().ln() / m).sqrt();
    let confidence = ((std::f64::consts::LN_2 + ln_binomial(n, k) - delta.ln()) / (2.0 * m)).sqrt();
    Ok(empirical + complexity + stratification + confidence)
}

/// VC-dimension bound for a hybrid `(k, d)` compression scheme with the
/// constant 144:
///
/// `err_hat + 144·√(d/(n−k)) + √(ln(C(n,k)/δ)/(2(n−k)))`
pub fn vc_compression_bound(n: u64, k: u64, vc_dim: u64, err_hat: f64, delta: f64) -> Result<f64> {
    check_common(n, k, delta)?;
    if !(0.0..=1.0).contains(&err_hat) {
        return Err(NbcsError::BoundDomain { term: "err_hat", reason: format!("need 0 <= err_hat <= 1, got {err_hat}") });
    }
    let m = (n - k) as f64;
    let complexity = 144.0 * (vc_dim as f64 / m).sqrt();
    let confidence = ((ln_binomial(n, k) - delta.ln()) / (2.0 * m)).sqrt();
    Ok(err_hat + complexity + confidence)
}
