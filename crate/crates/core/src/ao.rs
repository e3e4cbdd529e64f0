//! Akemann-Ostrand witnesses for filtered generators: eigenspace data, the
//! normalized derivation S and the commutator maps T_{x,y}.

use std::fmt;
use std::str::FromStr;

use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::gradient::GradientVector;
use crate::numerics::{c, hermitian_eigvals, CMat, C64};
use crate::qfock::{FockParams, FockVector};
use crate::torus::{self, FreqWindow, TorusKind};
use crate::wick::product;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "OU-qFock")]
    OuQFock,
    #[serde(rename = "Poisson-Z")]
    PoissonZ,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::OuQFock => "OU-qFock",
            ModelKind::PoissonZ => "Poisson-Z",
        })
    }
}

impl FromStr for ModelKind {
    type Err = QError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ou" | "ou-qfock" => Ok(ModelKind::OuQFock),
            "poisson" | "poisson-z" => Ok(ModelKind::PoissonZ),
            other => Err(QError::InvalidParams(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ModelSpec {
    Ou(FockParams),
    Poisson(FreqWindow),
}

/// How to orthonormalize a level of the q-Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orthonormalization {
    /// Columns of P^{−1/2}.
    Symmetric,
    /// Gram-Schmidt in index order (Cholesky of P).
    GramSchmidt,
}

#[derive(Clone, Debug)]
pub struct FilteredModel {
    pub kind: ModelKind,
    pub eigenvalues: Vec<f64>,
    pub eigenspace_dims: Vec<usize>,
    spec: ModelSpec,
}

/// Products of eigenbasis elements are checked up to this total level when
/// an OU model is built.
pub const BUILD_FILTRATION_LEVELS: usize = 4;
pub const FILTRATION_TOL: f64 = 1e-9;

pub fn build_model(spec: ModelSpec) -> Result<FilteredModel> {
    let model = match &spec {
        ModelSpec::Ou(p) => FilteredModel {
            kind: ModelKind::OuQFock,
            eigenvalues: (0..=p.max_level()).map(|n| n as f64).collect(),
            eigenspace_dims: (0..=p.max_level()).map(|n| p.level_dim(n)).collect(),
            spec: spec.clone(),
        },
        ModelSpec::Poisson(w) => FilteredModel {
            kind: ModelKind::PoissonZ,
            eigenvalues: (0..=w.k()).map(|j| j as f64).collect(),
            eigenspace_dims: (0..=w.k()).map(|j| if j == 0 { 1 } else { 2 }).collect(),
            spec: spec.clone(),
        },
    };
    match &model.spec {
        ModelSpec::Ou(p) => {
            let top = p.max_level().min(BUILD_FILTRATION_LEVELS);
            for n in 0..=p.max_level() {
                for v in eigenbasis(p, n, Orthonormalization::Symmetric)? {
                    let d = v.number().sub(&v.scale(c(n as f64)))?.max_abs();
                    if d > 1e-10 {
                        return Err(QError::FiltrationViolation(format!("level {n} is not an eigenspace ({d:.3e})")));
                    }
                }
            }
            for s in 0..=top {
                for m in 0..=s {
                    let r = filtration_check(&model, m, s - m)?;
                    if !r.pass {
                        return Err(QError::FiltrationViolation(format!(
                            "({m},{}) out-of-band {:.3e}, wrong parity {:.3e}",
                            s - m,
                            r.out_of_band,
                            r.wrong_parity
                        )));
                    }
                }
            }
        }
        ModelSpec::Poisson(w) => {
            let d = torus::filtration_defect(*w);
            if d != 0 {
                return Err(QError::FiltrationViolation(format!("frequency band missed by {d}")));
            }
        }
    }
    Ok(model)
}

impl FilteredModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> Result<&FockParams> {
        match &self.spec {
            ModelSpec::Ou(p) => Ok(p),
            ModelSpec::Poisson(_) => Err(QError::InvalidParams("Poisson model has no Fock parameters".into())),
        }
    }

    /// λ_{n+1}/λ_n for n ≥ 1.
    pub fn growth_ratios(&self) -> Vec<f64> {
        self.eigenvalues.windows(2).skip(1).map(|w| w[1] / w[0]).collect()
    }
}

/// L₂-orthonormal basis of level n as complete symbols.
pub fn eigenbasis(params: &FockParams, n: usize, how: Orthonormalization) -> Result<Vec<FockVector>> {
    let b = match how {
        Orthonormalization::Symmetric => params.gram_inv_sqrt(n)?.clone(),
        Orthonormalization::GramSchmidt => {
            let ch = Cholesky::new(params.gram(n)?.clone())
                .ok_or_else(|| QError::EigFail(format!("Cholesky failed on level {n}")))?;
            let linv = ch
                .l()
                .solve_lower_triangular(&CMat::identity(params.level_dim(n), params.level_dim(n)))
                .ok_or_else(|| QError::EigFail(format!("triangular solve failed on level {n}")))?;
            linv.adjoint()
        }
    };
    (0..b.ncols()).map(|i| FockVector::from_level(params, n, b.column(i).into_owned())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiltrationReport {
    pub m: usize,
    pub n: usize,
    /// Largest q-norm of a product component outside [|m−n|, m+n].
    pub out_of_band: f64,
    /// Largest q-norm at levels of parity different from m+n.
    pub wrong_parity: f64,
    pub pass: bool,
}

pub fn filtration_check(model: &FilteredModel, m: usize, n: usize) -> Result<FiltrationReport> {
    match &model.spec {
        ModelSpec::Poisson(w) => {
            let k = w.k() as usize;
            if m > k || n > k {
                return Err(QError::WindowOverflow { freq: m.max(n) as i64, window: w.k() });
            }
            let mut bad = 0i64;
            for a in [m as i64, -(m as i64)] {
                for b in [n as i64, -(n as i64)] {
                    let p = (a + b).unsigned_abs() as usize;
                    if p < m.abs_diff(n) || p > m + n {
                        bad += 1;
                    }
                }
            }
            let v = bad as f64;
            Ok(FiltrationReport { m, n, out_of_band: v, wrong_parity: 0.0, pass: bad == 0 })
        }
        ModelSpec::Ou(p) => {
            if m + n > p.max_level() {
                return Err(QError::TruncationLoss(format!("filtration check ({m},{n}) exceeds level {}", p.max_level())));
            }
            let us = eigenbasis(p, m, Orthonormalization::Symmetric)?;
            let vs = eigenbasis(p, n, Orthonormalization::Symmetric)?;
            let pairs: Vec<(usize, usize)> = (0..us.len()).flat_map(|i| (0..vs.len()).map(move |j| (i, j))).collect();
            let (lo, hi) = (m.abs_diff(n), m + n);
            let vals: Vec<(f64, f64)> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    let w = product(&us[i], &vs[j])?;
                    let mut band: f64 = 0.0;
                    let mut parity: f64 = 0.0;
                    for k in 0..=w.degree() {
                        let nk = w.component(k)?.q_norm()?;
                        if k < lo || k > hi {
                            band = band.max(nk);
                        }
                        if (k + hi) % 2 == 1 {
                            parity = parity.max(nk);
                        }
                    }
                    Ok((band, parity))
                })
                .collect::<Result<_>>()?;
            let out_of_band = vals.iter().map(|v| v.0).fold(0.0, f64::max);
            let wrong_parity = vals.iter().map(|v| v.1).fold(0.0, f64::max);
            Ok(FiltrationReport {
                m,
                n,
                out_of_band,
                wrong_parity,
                pass: out_of_band < FILTRATION_TOL && wrong_parity < FILTRATION_TOL,
            })
        }
    }
}

/// The unit vector standing in for S(1): e₁ ⊗_∇ ξ₀ with ξ₀ the normalized
/// e₁^{⊗(M−1)}. Γ(e₁,e₁) = 1 makes it a unit vector, and it is orthogonal
/// to ∂ of every element of level ≤ M−3.
pub fn s_unit(params: &FockParams) -> Result<GradientVector> {
    let top = params.max_level().saturating_sub(1);
    let xi = FockVector::basis(params, &vec![0; top])?;
    let xi = xi.scale(c(1.0 / xi.q_norm()?));
    GradientVector::term(&FockVector::basis(params, &[0])?, &xi)
}

/// S(v) = Σ_{n≥1} n^{−1/2} P_n(v) ⊗_∇ Ω + τ(v)·S(1).
pub fn s_apply(v: &FockVector, unit: &GradientVector) -> Result<GradientVector> {
    v.require_complete("S")?;
    let scaled = v.level_map(|n| if n == 0 { 0.0 } else { (n as f64).powf(-0.5) });
    let mut out = GradientVector::partial(&scaled.trimmed());
    let t = v.tau();
    if t != c(0.0) {
        out = out.add(&unit.scale(t))?;
    }
    Ok(out)
}

/// S built literally from a basis: S(uᵢ) = ∂(uᵢ)/‖∂(uᵢ)‖, extended
/// linearly, evaluated on the coordinate vector e_J of level n.
fn s_from_basis(basis: &[FockVector], coords: &CMat, j: usize, unit: &GradientVector) -> Result<GradientVector> {
    let mut out = GradientVector::zero(unit.params());
    for (i, u) in basis.iter().enumerate() {
        let w = coords[(i, j)];
        if w == c(0.0) {
            continue;
        }
        let d = GradientVector::partial(u);
        let nd = d.norm()?;
        let img = if nd == 0.0 { unit.clone() } else { d.scale(c(1.0 / nd)) };
        out = out.add(&img.scale(w))?;
    }
    Ok(out)
}

/// Hermitian family Gram G_ij = ⟨v_j, v_i⟩.
pub fn family_gram(vs: &[GradientVector]) -> Result<CMat> {
    let vs: Vec<GradientVector> = vs.par_iter().map(|v| v.compressed()).collect::<Result<_>>()?;
    let n = vs.len();
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let vals: Vec<C64> = idx.par_iter().map(|&(i, j)| vs[j].inner(&vs[i])).collect::<Result<_>>()?;
    let mut g = CMat::zeros(n, n);
    for (&(i, j), v) in idx.iter().zip(vals) {
        g[(i, j)] = v;
        g[(j, i)] = v.conj();
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SIsometryReport {
    pub model: ModelKind,
    /// Eigenspaces 0..=top_level were included.
    pub top_level: usize,
    pub family_size: usize,
    /// max |⟨S eᵢ, S e_j⟩ − δᵢⱼ|.
    pub max_deviation: f64,
    /// max |⟨S(1), S eᵢ⟩| over i with λ > 0.
    pub unit_overlap: f64,
    /// max ‖S_U(e_J) − S_V(e_J)‖_∇ over two orthonormalizations U, V.
    pub basis_dependence: f64,
}

/// ∇-Gram of S on the orthonormalized eigenbasis. For the OU model the
/// levels 0..=M/2 are used (their pairings stay within the truncation).
pub fn s_isometry_check(model: &FilteredModel) -> Result<SIsometryReport> {
    match &model.spec {
        ModelSpec::Poisson(w) => {
            let dev = torus::s_isometry_defect(TorusKind::Poisson, *w)?;
            let unit = torus::s_image(TorusKind::Poisson, 0, *w)?;
            let overlap = w
                .freqs()
                .filter(|&k| k != 0)
                .map(|k| Ok(unit.inner(&torus::s_image(TorusKind::Poisson, k, *w)?, TorusKind::Poisson).abs()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(SIsometryReport {
                model: model.kind,
                top_level: w.k() as usize,
                family_size: 2 * w.k() as usize + 1,
                max_deviation: dev,
                unit_overlap: overlap,
                basis_dependence: 0.0,
            })
        }
        ModelSpec::Ou(p) => {
            let top = p.max_level() / 2;
            if top == 0 || p.max_level() < 3 {
                return Err(QError::TruncationLoss("S isometry needs max level ≥ 3".into()));
            }
            let unit = s_unit(p)?;
            let mut family = vec![unit.clone()];
            for n in 1..=top {
                for u in eigenbasis(p, n, Orthonormalization::Symmetric)? {
                    family.push(s_apply(&u, &unit)?);
                }
            }
            let g = family_gram(&family)?;
            let mut dev: f64 = 0.0;
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    let t = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((g[(i, j)] - c(t)).norm());
                }
            }
            let overlap = (1..g.nrows()).map(|i| g[(0, i)].norm()).fold(0.0, f64::max);
            let mut dependence: f64 = 0.0;
            for n in 1..=top {
                let a = eigenbasis(p, n, Orthonormalization::Symmetric)?;
                let b = eigenbasis(p, n, Orthonormalization::GramSchmidt)?;
                let ca = coordinates(p, n, &a)?;
                let cb = coordinates(p, n, &b)?;
                let worst = (0..p.level_dim(n))
                    .into_par_iter()
                    .map(|j| s_from_basis(&a, &ca, j, &unit)?.sub(&s_from_basis(&b, &cb, j, &unit)?)?.norm())
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                dependence = dependence.max(worst);
            }
            Ok(SIsometryReport {
                model: model.kind,
                top_level: top,
                family_size: family.len(),
                max_deviation: dev,
                unit_overlap: overlap,
                basis_dependence: dependence,
            })
        }
    }
}

/// Coefficients of the standard basis e_J in terms of `basis` (columns).
fn coordinates(params: &FockParams, n: usize, basis: &[FockVector]) -> Result<CMat> {
    let d = params.level_dim(n);
    let b = CMat::from_fn(d, d, |r, s| basis[s].level(n).expect("level present")[r]);
    b.try_inverse().ok_or_else(|| QError::EigFail(format!("singular eigenbasis on level {n}")))
}

/// T_{x,y}(v) = x S(v) y − S(xvy).
pub fn t_apply(x: &FockVector, y: &FockVector, v: &FockVector, unit: &GradientVector) -> Result<GradientVector> {
    let moved = s_apply(v, unit)?.left_action(x)?.right_action(y)?;
    let xvy = product(&product(x, v)?, y)?;
    moved.sub(&s_apply(&xvy, unit)?)
}

fn check_budget(params: &FockParams, x: &FockVector, y: &FockVector, n: usize) -> Result<()> {
    if n + x.degree() + y.degree() > params.max_level() {
        return Err(QError::TruncationLoss(format!(
            "T block {n} with deg x = {}, deg y = {} exceeds level {}",
            x.degree(),
            y.degree(),
            params.max_level()
        )));
    }
    Ok(())
}

fn block_images(params: &FockParams, x: &FockVector, y: &FockVector, n: usize) -> Result<Vec<GradientVector>> {
    check_budget(params, x, y, n)?;
    let unit = s_unit(params)?;
    eigenbasis(params, n, Orthonormalization::Symmetric)?.par_iter().map(|u| t_apply(x, y, u, &unit)).collect()
}

/// Operator norm of T_{x,y} on the level-n eigenspace of the OU model.
pub fn t_block_norm(model: &FilteredModel, x: &FockVector, y: &FockVector, n: usize) -> Result<f64> {
    let p = model.params()?;
    let g = family_gram(&block_images(p, x, y, n)?)?;
    let top = hermitian_eigvals(&g)?.iter().copied().fold(0.0, f64::max);
    Ok(top.sqrt())
}

/// max |⟨T u, T v⟩| over orthonormal u in level n and v in level m.
pub fn distant_block_overlap(model: &FilteredModel, x: &FockVector, y: &FockVector, n: usize, m: usize) -> Result<f64> {
    let p = model.params()?;
    let a: Vec<GradientVector> = block_images(p, x, y, n)?.iter().map(|v| v.compressed()).collect::<Result<_>>()?;
    let b: Vec<GradientVector> = block_images(p, x, y, m)?.iter().map(|v| v.compressed()).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs.par_iter().map(|&(i, j)| Ok(a[i].inner(&b[j])?.norm())).collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AoDecayRow {
    pub n: usize,
    pub lambda_n: f64,
    pub block_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AoDecay {
    pub model: ModelKind,
    pub rows: Vec<AoDecayRow>,
    /// Max over the first two rows.
    pub head: f64,
    /// Max over the last two rows.
    pub tail: f64,
    /// tail < TREND_FACTOR · head.
    pub trend_pass: bool,
}

pub const TREND_FACTOR: f64 = 0.5;

impl AoDecay {
    fn from_rows(model: ModelKind, rows: Vec<AoDecayRow>) -> Self {
        let k = rows.len();
        let head = rows.iter().take(2).map(|r| r.block_norm).fold(0.0, f64::max);
        let tail = rows.iter().skip(k.saturating_sub(2)).map(|r| r.block_norm).fold(0.0, f64::max);
        Self { model, rows, head, tail, trend_pass: k >= 4 && tail < TREND_FACTOR * head }
    }
}

/// T-block norms for n = 1..=M − deg x − deg y.
pub fn ou_t_decay(model: &FilteredModel, x: &FockVector, y: &FockVector) -> Result<AoDecay> {
    let p = model.params()?;
    let last = p.max_level().saturating_sub(x.degree() + y.degree());
    let rows = (1..=last)
        .map(|n| Ok(AoDecayRow { n, lambda_n: n as f64, block_norm: t_block_norm(model, x, y, n)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(AoDecay::from_rows(model.kind, rows))
}

/// Poisson-ℤ blocks j = 1..=K for x = e_l, y = e_m.
pub fn poisson_ao_decay(window: FreqWindow, l: i64, m: i64) -> Result<AoDecay> {
    let t = torus::poisson_t_decay(l, m, window)?;
    let rows = t
        .rows
        .iter()
        .filter(|r| r.j >= 1)
        .map(|r| AoDecayRow { n: r.j as usize, lambda_n: r.j as f64, block_norm: r.block_norm })
        .collect();
    Ok(AoDecay::from_rows(ModelKind::PoissonZ, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(q: f64, m: usize) -> FilteredModel {
        build_model(ModelSpec::Ou(FockParams::new(q, 2, m).unwrap())).unwrap()
    }

    #[test]
    fn models_build() {
        let m = ou(0.5, 6);
        assert_eq!(m.eigenvalues, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.eigenspace_dims[3], 8);
        let g = m.growth_ratios();
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        let p = build_model(ModelSpec::Poisson(FreqWindow::new(20).unwrap())).unwrap();
        assert_eq!(p.eigenspace_dims.len(), 21);
        assert_eq!(p.eigenspace_dims[5], 2);
    }

    #[test]
    fn filtration_bands() {
        let m = ou(0.5, 6);
        let r = filtration_check(&m, 2, 1).unwrap();
        assert!(r.pass && r.out_of_band < 1e-9);
        assert!(filtration_check(&m, 0, 3).unwrap().pass);
        assert_eq!(filtration_check(&m, 4, 3).unwrap_err().code(), "TRUNCATION_LOSS");
    }

    #[test]
    fn eigenbases_are_orthonormal() {
        let p = FockParams::new(0.6, 2, 4).unwrap();
        for how in [Orthonormalization::Symmetric, Orthonormalization::GramSchmidt] {
            let b = eigenbasis(&p, 3, how).unwrap();
            for (i, u) in b.iter().enumerate() {
                for (j, v) in b.iter().enumerate() {
                    let t = if i == j { 1.0 } else { 0.0 };
                    assert!((u.q_inner(v).unwrap() - c(t)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn s_isometry() {
        let r = s_isometry_check(&ou(0.5, 6)).unwrap();
        assert_eq!(r.family_size, 15);
        assert!(r.max_deviation < 1e-8, "{r:?}");
        assert!(r.unit_overlap < 1e-12);
        assert!(r.basis_dependence < 1e-9);
        let t = s_isometry_check(&build_model(ModelSpec::Poisson(FreqWindow::new(20).unwrap())).unwrap()).unwrap();
        assert!(t.max_deviation < 1e-10);
    }

    #[test]
    fn t_trivial_for_units() {
        let m = ou(0.3, 6);
        let one = FockVector::vacuum(m.params().unwrap());
        for n in 1..=3 {
            assert!(t_block_norm(&m, &one, &one, n).unwrap() < 1e-12);
        }
        let e1 = FockVector::basis(m.params().unwrap(), &[0]).unwrap();
        assert_eq!(t_block_norm(&m, &e1, &e1, 5).unwrap_err().code(), "TRUNCATION_LOSS");
    }

    #[test]
    fn distant_blocks_orthogonal() {
        let m = ou(0.3, 6);
        let e1 = FockVector::basis(m.params().unwrap(), &[0]).unwrap();
        assert!(distant_block_overlap(&m, &e1, &e1, 1, 4).unwrap() < 1e-9);
    }
}
