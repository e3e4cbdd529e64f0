//! Dense complex kernels on top of nalgebra: Hermitian eigensolver, SVD,
//! PSD square roots and Schatten norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{QError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative deviation from Hermitian symmetry accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 10_000;

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectralReport {
    /// descending
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tolerance_used: f64,
}

#[derive(Debug, Clone)]
pub struct Svd {
    pub report: SpectralReport,
    pub u: CMat,
    pub v_t: CMat,
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_deviation(a: &CMat) -> f64 {
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let mut dev = 0.0_f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev / scale
}

fn check_finite(a: &CMat) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(QError::EigFail("non-finite entry".into()))
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub fn hermitian_eig(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    if a.nrows() != a.ncols() {
        return Err(QError::ShapeMismatch(format!(
            "eigendecomposition of {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok((vec![], CMat::zeros(0, 0)));
    }
    let dev = hermitian_deviation(a);
    if dev > HERMITIAN_TOL {
        return Err(QError::NotHermitian(dev));
    }
    // symmetrize so that the solver sees an exactly Hermitian input
    let h = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| QError::EigFail(format!("no convergence on {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigvals(a: &CMat) -> Result<Vec<f64>> {
    hermitian_eig(a).map(|(v, _)| v)
}

pub fn default_tolerance(dim: usize, scale: f64) -> f64 {
    dim.max(1) as f64 * f64::EPSILON * scale
}

/// Full SVD with singular values sorted descending. Rank uses
/// `tol` (absolute) if given, else `max(rows, cols)·eps·σ₁`.
pub fn svd(a: &CMat, tol: Option<f64>) -> Result<Svd> {
    check_finite(a)?;
    let (r, cdim) = a.shape();
    let k = r.min(cdim);
    if k == 0 {
        return Ok(Svd {
            report: SpectralReport { singular_values: vec![], rank: 0, tolerance_used: 0.0 },
            u: CMat::zeros(r, 0),
            v_t: CMat::zeros(0, cdim),
        });
    }
    let s = SVD::try_new(a.clone(), true, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| QError::EigFail(format!("svd did not converge on {r}x{cdim}")))?;
    let u0 = s.u.expect("requested u");
    let vt0 = s.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s.singular_values[j].total_cmp(&s.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| s.singular_values[i].max(0.0)).collect();
    let mut u = CMat::zeros(r, k);
    let mut v_t = CMat::zeros(k, cdim);
    for (p, &i) in order.iter().enumerate() {
        u.set_column(p, &u0.column(i));
        v_t.set_row(p, &vt0.row(i));
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(r.max(cdim), sv[0]));
    let rank = sv.iter().filter(|&&x| x > tol).count();
    Ok(Svd { report: SpectralReport { singular_values: sv, rank, tolerance_used: tol }, u, v_t })
}

pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    Ok(svd(a, None)?.report.singular_values)
}

pub fn op_norm(a: &CMat) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(singular_values(a)?[0])
}

/// Schatten p-norm; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(a: &CMat, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(QError::BadExponent(p));
    }
    let sv = singular_values(a)?;
    Ok(schatten_from_values(&sv, p))
}

pub fn schatten_from_values(sv: &[f64], p: f64) -> f64 {
    if sv.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return sv.iter().cloned().fold(0.0, f64::max);
    }
    // scale first to stay clear of overflow for large p
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    top * sv.iter().map(|s| (s / top).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn psd_spectrum(g: &CMat, tol: Option<f64>) -> Result<(Vec<f64>, CMat, f64)> {
    let (vals, vecs) = hermitian_eig(g)?;
    let lmax = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = tol.unwrap_or_else(|| default_tolerance(g.nrows(), 1.0));
    let floor = tol * lmax;
    if let Some(&min) = vals.first() {
        if min < -floor {
            return Err(QError::NotPsd { min, tol: floor });
        }
    }
    Ok((vals, vecs, floor))
}

fn spectral_apply(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = vecs.nrows();
    let mut scaled = vecs.clone();
    for (k, &l) in vals.iter().enumerate() {
        let fk = f(l);
        for i in 0..n {
            scaled[(i, k)] *= fk;
        }
    }
    &scaled * vecs.adjoint()
}

/// Square root of a PSD matrix. `tol` is relative to λ_max.
pub fn psd_sqrt(g: &CMat, tol: Option<f64>) -> Result<CMat> {
    let (vals, vecs, _) = psd_spectrum(g, tol)?;
    Ok(spectral_apply(&vals, &vecs, |l| l.max(0.0).sqrt()))
}

/// Pseudo-inverse of a PSD matrix, zeroing eigenvalues below `tol·λ_max`.
pub fn pinv(g: &CMat, tol: Option<f64>) -> Result<CMat> {
    let (vals, vecs, floor) = psd_spectrum(g, tol)?;
    Ok(spectral_apply(&vals, &vecs, |l| if l > floor { 1.0 / l } else { 0.0 }))
}

/// G^{-1/2} on the range of G.
pub fn psd_inv_sqrt(g: &CMat, tol: Option<f64>) -> Result<CMat> {
    let (vals, vecs, floor) = psd_spectrum(g, tol)?;
    Ok(spectral_apply(&vals, &vecs, |l| if l > floor { 1.0 / l.sqrt() } else { 0.0 }))
}

/// Projects a nearly-PSD Hermitian matrix onto the PSD cone after checking
/// the negative part is below `tol·λ_max`.
pub fn psd_clip(g: &CMat, tol: f64) -> Result<CMat> {
    let (vals, vecs, _) = psd_spectrum(g, Some(tol))?;
    Ok(spectral_apply(&vals, &vecs, |l| l.max(0.0)))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMat {
        CMat::from_row_slice(rows, cols, &data.iter().map(|&x| c(x)).collect::<Vec<_>>())
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, cdim: usize) -> CMat {
        CMat::from_fn(r, cdim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn eig_examples() {
        let (v, _) = hermitian_eig(&identity(3)).unwrap();
        assert_eq!(v, vec![1.0, 1.0, 1.0]);
        let v = hermitian_eigvals(&real(2, 2, &[2.0, 0.0, 0.0, -1.0])).unwrap();
        assert_relative_eq!(v[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 2.0, epsilon = 1e-14);
        let v = hermitian_eigvals(&real(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_relative_eq!(v[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let e = hermitian_eig(&real(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap_err();
        assert_eq!(e.code(), "NOT_HERMITIAN");
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 40, 40);
        let h = &a + a.adjoint();
        let (vals, v) = hermitian_eig(&h).unwrap();
        let d = CMat::from_diagonal(&CVec::from_iterator(40, vals.iter().map(|&x| c(x))));
        let rec = &v * d * v.adjoint();
        assert!(frobenius(&(rec - &h)) <= 1e-9 * op_norm(&h).unwrap());
        let unit = v.adjoint() * &v;
        assert!(max_abs(&(unit - identity(40))) < 1e-9);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_examples() {
        let z = svd(&CMat::zeros(3, 2), None).unwrap();
        assert_eq!(z.report.singular_values, vec![0.0, 0.0]);
        assert_eq!(z.report.rank, 0);
        let s = singular_values(&real(2, 2, &[3.0, 0.0, 0.0, 4.0])).unwrap();
        assert_relative_eq!(s[0], 4.0, epsilon = 1e-14);
        assert_relative_eq!(s[1], 3.0, epsilon = 1e-14);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let s = singular_values(&real(2, 2, &[1.0, 1.0, 0.0, 1.0])).unwrap();
        assert_relative_eq!(s[0], phi, epsilon = 1e-13);
        assert_relative_eq!(s[1], 1.0 / phi, epsilon = 1e-13);
    }

    #[test]
    fn svd_reconstructs_512() {
        let mut rng = ChaCha8Rng::seed_from_u64(512);
        let a = random(&mut rng, 512, 512);
        let s = svd(&a, None).unwrap();
        let d = CMat::from_diagonal(&CVec::from_iterator(
            512,
            s.report.singular_values.iter().map(|&x| c(x)),
        ));
        let rec = &s.u * d * &s.v_t;
        assert!(frobenius(&(rec - &a)) <= 1e-9 * frobenius(&a));
    }

    #[test]
    fn schatten_examples() {
        assert_relative_eq!(schatten_norm(&identity(5), 2.0).unwrap(), 5f64.sqrt(), epsilon = 1e-13);
        let d = real(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        assert_relative_eq!(schatten_norm(&d, 1.0).unwrap(), 7.0, epsilon = 1e-13);
        assert_relative_eq!(schatten_norm(&d, f64::INFINITY).unwrap(), 4.0, epsilon = 1e-13);
        assert_eq!(schatten_norm(&d, 0.5).unwrap_err().code(), "BAD_EXPONENT");
    }

    #[test]
    fn psd_examples() {
        let s = psd_sqrt(&identity(3), None).unwrap();
        assert!(max_abs(&(s - identity(3))) < 1e-14);
        let g = real(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let s = psd_sqrt(&g, None).unwrap();
        assert!(max_abs(&(s - real(2, 2, &[2.0, 0.0, 0.0, 0.0]))) < 1e-14);
        let p = pinv(&g, None).unwrap();
        assert!(max_abs(&(p - real(2, 2, &[0.25, 0.0, 0.0, 0.0]))) < 1e-14);

        let g = real(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = psd_sqrt(&g, None).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let minus = CVec::from_vec(vec![c(r2), c(-r2)]);
        let plus = CVec::from_vec(vec![c(r2), c(r2)]);
        assert!((&s * &minus - minus.scale(1.0)).norm() < 1e-13);
        assert!((&s * &plus - plus.scale(3f64.sqrt())).norm() < 1e-13);
        assert!(max_abs(&(&s * &s - &g)) < 1e-8 * 3.0);
    }

    #[test]
    fn psd_rejects_negative() {
        let g = real(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert_eq!(psd_sqrt(&g, Some(1e-9)).unwrap_err().code(), "NOT_PSD");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn schatten_two_is_frobenius(seed in 0u64..10_000, r in 1usize..9, cdim in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(&mut rng, r, cdim);
            let s2 = schatten_norm(&a, 2.0).unwrap();
            let f2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            proptest::prop_assert!((s2 * s2 - f2).abs() <= 1e-10 * f2);
        }

        #[test]
        fn schatten_monotone_and_dimension_bound(seed in 0u64..10_000, n in 1usize..8, p in 1.0f64..6.0, dp in 0.0f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(&mut rng, n, n + 1);
            let lo = schatten_norm(&a, p).unwrap();
            let hi = schatten_norm(&a, p + dp).unwrap();
            proptest::prop_assert!(hi <= lo * (1.0 + 1e-12));
            let op = op_norm(&a).unwrap();
            proptest::prop_assert!(lo <= (n as f64).powf(1.0 / p) * op * (1.0 + 1e-12));
        }
    }
}
