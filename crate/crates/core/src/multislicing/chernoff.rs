//! Chernoff upper-tail bound for sums of i.i.d. Bernoulli variables.

use crate::error::{Error, Result};

/// `s^{−⌈tJ⌉}(sp + 1 − p)^J` with `s = t(1−p)/(p(1−t))`, an upper bound for
/// `P[Bin(J, p) ≥ tJ]`. Returns the trivial bound `1` when `t ≤ p`.
pub fn chernoff_bound(p: f64, t: f64, j: u32) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("J must be at least 1".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
    }
    if !(t < 1.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be below 1")));
    }
    if t <= p {
        return Ok(1.0);
    }
    let s = t * (1.0 - p) / (p * (1.0 - t));
    let k = (t * j as f64).ceil();
    let log = -k * s.ln() + j as f64 * (s * p + 1.0 - p).ln();
    Ok(log.exp().min(1.0))
}
