use crate::error::{Error, Result};
use crate::linalg::CMat;

/// MIMO capacity in bits/s/Hz of parallel layers with gains `sigma_i^2`.
pub fn mimo_capacity(sigma: &[f64], noise_var: f64) -> Result<f64> {
    if !(noise_var > 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var} must be > 0")));
    }
    if sigma.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::InvalidArgument("singular values must be >= 0".into()));
    }
    Ok(sigma.iter().map(|s| (1.0 + s * s / noise_var).log2()).sum())
}

/// Post-detection SINR of each layer of `h * w` with a linear MMSE receiver.
pub fn layer_sinr_mmse(h: &CMat, w: &CMat, noise_var: f64) -> Result<Vec<f64>> {
    if h.ncols() != w.nrows() {
        return Err(Error::Dimension(format!(
            "channel has {} tx ports, precoder has {} rows",
            h.ncols(),
            w.nrows()
        )));
    }
    if w.ncols() == 0 {
        return Err(Error::Dimension("precoder has no layers".into()));
    }
    if !(noise_var > 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {noise_var} must be > 0")));
    }
    Ok(mmse_sinr(&(h * w), noise_var))
}

/// `SINR_i = 1 / [(I + G^H G / noise_var)^-1]_ii - 1` for an effective channel `G`.
pub(crate) fn mmse_sinr(g: &CMat, noise_var: f64) -> Vec<f64> {
    let r = g.ncols();
    let mut a = g.adjoint() * g;
    a.scale_mut(1.0 / noise_var);
    for i in 0..r {
        a[(i, i)] += 1.0;
    }
    let inv = match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a.try_inverse().expect("I + G^H G is positive definite"),
    };
    (0..r).map(|i| (1.0 / inv[(i, i)].re - 1.0).max(0.0)).collect()
}

/// Capacity-domain average of SINRs (MIESM with Shannon mutual information):
/// `2^(mean log2(1 + s)) - 1`. The input is flattened over layers and subbands.
pub fn effective_sinr(sinrs: &[f64]) -> Result<f64> {
    if sinrs.is_empty() {
        return Err(Error::InvalidArgument("no SINR values".into()));
    }
    if sinrs.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::InvalidArgument("SINR values must be >= 0".into()));
    }
    let mean = sinrs.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / sinrs.len() as f64;
    Ok(mean.exp2() - 1.0)
}

/// Effective SINR from an already accumulated `sum log2(1 + s)` over `count` entries.
pub(crate) fn effective_from_capacity(sum_log: f64, count: usize) -> f64 {
    (sum_log / count as f64).exp2() - 1.0
}
