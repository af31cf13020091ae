//! Plain-text formatting shared by the CSV writers.

use crate::real::Real;

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}
