use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, CMat, C64};

/// Full singular value decomposition `H = U Sigma V^H`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `num_rx x num_rx` unitary.
    pub u: CMat,
    /// Non-increasing, length `min(num_rx, num_tx)`.
    pub sigma: Vec<f64>,
    /// `num_tx x num_tx` unitary; the first `k` columns are the rank-`k` precoder.
    pub v: CMat,
}

impl SvdResult {
    /// Right singular vectors of the `k` strongest layers.
    pub fn precoder(&self, k: usize) -> CMat {
        self.v.columns(0, k).into_owned()
    }

    /// Number of non-zero singular values.
    pub fn rank(&self) -> usize {
        let tol = self.sigma.first().copied().unwrap_or(0.0) * 1e-12;
        self.sigma.iter().filter(|&&s| s > tol).count()
    }
}

/// Extends orthonormal columns to a full unitary basis by Gram-Schmidt
/// against the standard basis.
fn complete_basis(thin: &CMat, n: usize) -> CMat {
    let mut cols: Vec<nalgebra::DVector<C64>> = thin.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < n && e < n {
        let mut v = nalgebra::DVector::<C64>::zeros(n);
        v[e] = C64::new(1.0, 0.0);
        e += 1;
        // two passes for numerical orthogonality
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / C64::new(norm, 0.0));
        }
    }
    CMat::from_columns(&cols)
}

pub fn svd_precode(h: &CMat) -> Result<SvdResult> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(Error::Dimension("empty channel matrix".into()));
    }
    if !all_finite(h) {
        return Err(Error::NonFinite("channel matrix"));
    }
    let (nr, nt) = h.shape();
    let svd = SVD::new(h.clone(), true, true);
    let u_thin = svd.u.expect("u requested");
    let vt_thin = svd.v_t.expect("v_t requested");
    let k = svd.singular_values.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = CMat::from_fn(nr, k, |r, c| u_thin[(r, order[c])]);
    let v_sorted = CMat::from_fn(nt, k, |r, c| vt_thin[(order[c], r)].conj());

    Ok(SvdResult {
        u: complete_basis(&u_sorted, nr),
        sigma,
        v: complete_basis(&v_sorted, nt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(nr: usize, nt: usize, seed: u64) -> CMat {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(nr, nt, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn reconstruct(s: &SvdResult, nr: usize, nt: usize) -> CMat {
        let mut sig = CMat::zeros(nr, nt);
        for (i, &x) in s.sigma.iter().enumerate() {
            sig[(i, i)] = C64::new(x, 0.0);
        }
        &s.u * sig * s.v.adjoint()
    }

    fn assert_unitary(m: &CMat) {
        let g = m.adjoint() * m;
        let id = CMat::identity(m.ncols(), m.ncols());
        assert!((g - id).norm() < 1e-10);
    }

    #[test]
    fn identity_and_diagonal() {
        let s = svd_precode(&CMat::identity(2, 2)).unwrap();
        assert!((s.sigma[0] - 1.0).abs() < 1e-12 && (s.sigma[1] - 1.0).abs() < 1e-12);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(4.0, 0.0)]));
        let s = svd_precode(&d).unwrap();
        assert!((s.sigma[0] - 4.0).abs() < 1e-12);
        assert!((s.sigma[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_unitarity() {
        for (nr, nt, seed) in [(4, 8, 1), (8, 4, 2), (2, 8, 3), (3, 3, 4)] {
            let h = random(nr, nt, seed);
            let s = svd_precode(&h).unwrap();
            assert_eq!(s.u.shape(), (nr, nr));
            assert_eq!(s.v.shape(), (nt, nt));
            assert_unitary(&s.u);
            assert_unitary(&s.v);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
            let err = (reconstruct(&s, nr, nt) - &h).norm() / h.norm();
            assert!(err <= 1e-9, "relative error {err}");
        }
    }

    #[test]
    fn zero_channel_has_zero_rank() {
        let s = svd_precode(&CMat::zeros(2, 4)).unwrap();
        assert_eq!(s.rank(), 0);
        assert_unitary(&s.v);
    }

    #[test]
    fn rejects_non_finite() {
        let mut h = CMat::identity(2, 2);
        h[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(svd_precode(&h), Err(Error::NonFinite(_))));
    }
}
