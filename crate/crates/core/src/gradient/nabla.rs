use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::numerics::{self, c, CMat, CVec, C64};
use crate::qfock::{FockParams, FockVector};
use crate::wick::{product, product_capped};

use super::{delta, gamma_symbol};

/// Singular values below this fraction of the term-size scale are dropped
/// when compressing tensor sums.
pub const COMPRESSION_DROP: f64 = 1e-15;

/// Finite sum Σ aᵢ ⊗_∇ ξᵢ with aᵢ given by symbols and ξᵢ ∈ L₂.
#[derive(Clone, Debug)]
pub struct GradientVector {
    params: FockParams,
    terms: Vec<(FockVector, FockVector)>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Coordinates of v over levels 0..=top.
fn coords(v: &FockVector, top: usize) -> CVec {
    let p = v.params();
    let mut out = Vec::with_capacity((0..=top).map(|m| p.level_dim(m)).sum());
    for m in 0..=top {
        match v.level(m) {
            Some(l) => out.extend(l.iter().copied()),
            None => out.extend(std::iter::repeat(zero()).take(p.level_dim(m))),
        }
    }
    CVec::from_vec(out)
}

fn from_coords(params: &FockParams, x: &[C64], top: usize) -> FockVector {
    let mut v = FockVector::zeros(params, top);
    let mut off = 0;
    for m in 0..=top {
        let d = params.level_dim(m);
        v.level_mut(m).copy_from_slice(&x[off..off + d]);
        off += d;
    }
    v.trimmed()
}

fn max_degree<'a>(vs: impl Iterator<Item = &'a FockVector>) -> usize {
    vs.map(|v| v.degree()).max().unwrap_or(0)
}

/// Rewrites Σ uᵢ⊗vᵢ (bilinear) in a minimal number of terms by an SVD of
/// the coefficient matrix, separately for each bidegree so that merged
/// terms keep the degrees of their sources.
fn compress_pairs(params: &FockParams, terms: &[(FockVector, FockVector)]) -> Result<Vec<(FockVector, FockVector)>> {
    let mut groups: BTreeMap<(usize, usize), Vec<(FockVector, FockVector)>> = BTreeMap::new();
    for (u, v) in terms {
        let (u, v) = (u.clone().trimmed(), v.clone().trimmed());
        groups.entry((u.degree(), v.degree())).or_default().push((u, v));
    }
    let scale: f64 = terms.iter().map(|(u, v)| u.plain_norm() * v.plain_norm()).sum();
    let mut out = Vec::new();
    for group in groups.values() {
        out.extend(compress_group(params, group, scale)?);
    }
    Ok(out)
}

fn compress_group(
    params: &FockParams,
    terms: &[(FockVector, FockVector)],
    scale: f64,
) -> Result<Vec<(FockVector, FockVector)>> {
    if terms.is_empty() || scale == 0.0 {
        return Ok(Vec::new());
    }
    let du = max_degree(terms.iter().map(|t| &t.0));
    let dv = max_degree(terms.iter().map(|t| &t.1));
    let u: Vec<CVec> = terms.iter().map(|t| coords(&t.0, du)).collect();
    let v: Vec<CVec> = terms.iter().map(|t| coords(&t.1, dv)).collect();
    let mut cm = CMat::zeros(u[0].len(), v[0].len());
    for (a, b) in u.iter().zip(&v) {
        cm += a * b.transpose();
    }
    let svd = numerics::svd(&cm, Some(0.0))?;
    let mut out = Vec::new();
    for (k, &s) in svd.report.singular_values.iter().enumerate() {
        if s <= COMPRESSION_DROP * scale {
            break;
        }
        let left: Vec<C64> = svd.u.column(k).iter().map(|z| z * s).collect();
        let right: Vec<C64> = svd.v_t.row(k).iter().copied().collect();
        out.push((from_coords(params, &left, du), from_coords(params, &right, dv)));
    }
    Ok(out)
}

impl GradientVector {
    pub fn zero(params: &FockParams) -> Self {
        Self { params: params.clone(), terms: Vec::new() }
    }

    /// a ⊗_∇ ξ.
    pub fn term(a: &FockVector, xi: &FockVector) -> Result<Self> {
        a.params().check_same(xi.params())?;
        Ok(Self { params: a.params().clone(), terms: vec![(a.clone(), xi.clone())] })
    }

    /// ∂(a) = a ⊗_∇ Ω.
    pub fn partial(a: &FockVector) -> Self {
        Self { params: a.params().clone(), terms: vec![(a.clone(), FockVector::vacuum(a.params()))] }
    }

    pub fn params(&self) -> &FockParams {
        &self.params
    }

    pub fn terms(&self) -> &[(FockVector, FockVector)] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.params.check_same(&other.params)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { params: self.params.clone(), terms })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self.terms.iter().map(|(a, x)| (a.scale(s), x.clone())).collect();
        Self { params: self.params.clone(), terms }
    }

    /// x·(a⊗ξ) = xa⊗ξ − x⊗aξ.
    pub fn left_action(&self, x: &FockVector) -> Result<Self> {
        self.params.check_same(x.params())?;
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for (a, xi) in &self.terms {
            terms.push((product(x, a)?, xi.clone()));
            terms.push((x.scale(c(-1.0)), product(a, xi)?));
        }
        Ok(Self { params: self.params.clone(), terms })
    }

    /// (a⊗ξ)·y = a⊗ξy.
    pub fn right_action(&self, y: &FockVector) -> Result<Self> {
        self.params.check_same(y.params())?;
        let terms = self
            .terms
            .iter()
            .map(|(a, xi)| Ok((a.clone(), product(xi, y)?)))
            .collect::<Result<_>>()?;
        Ok(Self { params: self.params.clone(), terms })
    }

    fn require_complete(&self) -> Result<()> {
        for (a, xi) in &self.terms {
            a.require_complete("gradient vector element")?;
            xi.require_complete("gradient vector vector")?;
        }
        Ok(())
    }

    /// Same element with merged terms.
    pub fn compressed(&self) -> Result<Self> {
        self.require_complete()?;
        Ok(Self { params: self.params.clone(), terms: compress_pairs(&self.params, &self.terms)? })
    }

    /// ⟨a⊗ξ, b⊗η⟩ = ⟨Γ(a,b)ξ, η⟩ = ½(⟨aξ, Δ(b)η⟩ + ⟨Δ(a)ξ, bη⟩ − ⟨ξ·Iη, Δ(Ia·b)⟩).
    pub fn pair(a: &FockVector, xi: &FockVector, b: &FockVector, eta: &FockVector) -> Result<C64> {
        let pa = Prepared::new(a, xi)?;
        let pb = Prepared::new(b, eta)?;
        pa.pair(&pb)
    }

    /// Literal form ⟨Γ(a,b)ξ, η⟩_q through the symbol of Γ.
    pub fn pair_literal(a: &FockVector, xi: &FockVector, b: &FockVector, eta: &FockVector) -> Result<C64> {
        let g = gamma_symbol(a, b)?;
        product(&g, xi)?.q_inner(eta)
    }

    /// Gram matrix G_ij = ⟨termᵢ, term_j⟩.
    pub fn gram(&self) -> Result<CMat> {
        self.require_complete()?;
        let prepared: Vec<Prepared> =
            self.terms.iter().map(|(a, x)| Prepared::new(a, x)).collect::<Result<_>>()?;
        let n = prepared.len();
        let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let vals: Vec<C64> = idx.par_iter().map(|&(i, j)| prepared[i].pair(&prepared[j])).collect::<Result<_>>()?;
        let mut g = CMat::zeros(n, n);
        for (&(i, j), v) in idx.iter().zip(vals) {
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        Ok(g)
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.params.check_same(&other.params)?;
        self.require_complete()?;
        other.require_complete()?;
        let left: Vec<Prepared> = self.terms.iter().map(|(a, x)| Prepared::new(a, x)).collect::<Result<_>>()?;
        let right: Vec<Prepared> = other.terms.iter().map(|(a, x)| Prepared::new(a, x)).collect::<Result<_>>()?;
        let pairs: Vec<(usize, usize)> =
            (0..left.len()).flat_map(|i| (0..right.len()).map(move |j| (i, j))).collect();
        pairs
            .par_iter()
            .map(|&(i, j)| left[i].pair(&right[j]))
            .try_reduce(zero, |a, b| Ok(a + b))
    }

    /// Quotient norm: compress, assemble the Gram, check and clip it.
    pub fn norm(&self) -> Result<f64> {
        let v = self.compressed()?;
        if v.terms.is_empty() {
            return Ok(0.0);
        }
        let g = v.gram()?;
        let g = numerics::psd_clip(&g, 1e-9)?;
        let s: C64 = g.iter().copied().sum();
        Ok(s.re.max(0.0).sqrt())
    }
}

/// Per-term data reused across Gram entries.
struct Prepared {
    a: FockVector,
    xi: FockVector,
    a_xi: FockVector,
    da_xi: FockVector,
}

impl Prepared {
    fn new(a: &FockVector, xi: &FockVector) -> Result<Self> {
        Ok(Self { a: a.clone(), xi: xi.clone(), a_xi: product(a, xi)?, da_xi: product(&delta(a), xi)? })
    }

    fn pair(&self, other: &Prepared) -> Result<C64> {
        let t1 = self.a_xi.q_inner(&other.da_xi)?;
        let t2 = self.da_xi.q_inner(&other.a_xi)?;
        let cap = self.a.degree() + other.a.degree();
        let left = product_capped(&self.xi, &other.xi.conj(), cap)?;
        let right = delta(&product(&self.a.conj(), &other.a)?);
        let t3 = left.q_inner(&right)?;
        Ok((t1 + t2 - t3) * c(0.5))
    }
}

/// Finite sum Σ uᵢ ⊗_∇ vᵢ ⊗_∇ wᵢ in the two-fold gradient module, with
/// uᵢ, vᵢ symbols and wᵢ ∈ L₂.
#[derive(Clone, Debug)]
pub struct Nabla2Vector {
    params: FockParams,
    terms: Vec<(FockVector, FockVector, FockVector)>,
}

impl Nabla2Vector {
    pub fn zero(params: &FockParams) -> Self {
        Self { params: params.clone(), terms: Vec::new() }
    }

    pub fn term(u: &FockVector, v: &FockVector, w: &FockVector) -> Result<Self> {
        u.params().check_same(v.params())?;
        u.params().check_same(w.params())?;
        Ok(Self { params: u.params().clone(), terms: vec![(u.clone(), v.clone(), w.clone())] })
    }

    pub fn params(&self) -> &FockParams {
        &self.params
    }

    pub fn terms(&self) -> &[(FockVector, FockVector, FockVector)] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.params.check_same(&other.params)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { params: self.params.clone(), terms })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c(-1.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self.terms.iter().map(|(u, v, w)| (u.scale(s), v.clone(), w.clone())).collect();
        Self { params: self.params.clone(), terms }
    }

    /// x·(u⊗v⊗w) = xu⊗v⊗w − x⊗uv⊗w + x⊗u⊗vw.
    pub fn left_action(&self, x: &FockVector) -> Result<Self> {
        self.params.check_same(x.params())?;
        let mut terms = Vec::with_capacity(3 * self.terms.len());
        for (u, v, w) in &self.terms {
            terms.push((product(x, u)?, v.clone(), w.clone()));
            terms.push((x.scale(c(-1.0)), product(u, v)?, w.clone()));
            terms.push((x.clone(), u.clone(), product(v, w)?));
        }
        Ok(Self { params: self.params.clone(), terms })
    }

    /// (u⊗v⊗w)·y = u⊗v⊗wy.
    pub fn right_action(&self, y: &FockVector) -> Result<Self> {
        self.params.check_same(y.params())?;
        let terms = self
            .terms
            .iter()
            .map(|(u, v, w)| Ok((u.clone(), v.clone(), product(w, y)?)))
            .collect::<Result<_>>()?;
        Ok(Self { params: self.params.clone(), terms })
    }

    fn require_complete(&self) -> Result<()> {
        for (u, v, w) in &self.terms {
            u.require_complete("two-fold gradient element")?;
            v.require_complete("two-fold gradient element")?;
            w.require_complete("two-fold gradient vector")?;
        }
        Ok(())
    }

    /// Same element with merged terms: an orthonormal basis for the first
    /// factor, then an SVD of each remaining coefficient matrix.
    pub fn compressed(&self) -> Result<Self> {
        self.require_complete()?;
        let params = &self.params;
        if self.terms.is_empty() {
            return Ok(self.clone());
        }
        let du = max_degree(self.terms.iter().map(|t| &t.0));
        let u: Vec<CVec> = self.terms.iter().map(|t| coords(&t.0, du)).collect();
        let mut um = CMat::zeros(u[0].len(), u.len());
        for (i, col) in u.iter().enumerate() {
            um.set_column(i, col);
        }
        let svd = numerics::svd(&um, Some(0.0))?;
        let smax = svd.report.singular_values.first().copied().unwrap_or(0.0);
        let mut terms = Vec::new();
        for (r, &s) in svd.report.singular_values.iter().enumerate() {
            if s <= COMPRESSION_DROP * smax {
                break;
            }
            // u_i = Σ_r W_r (S Vᴴ)_{r i}
            let basis: Vec<C64> = svd.u.column(r).iter().copied().collect();
            let inner: Vec<(FockVector, FockVector)> = self
                .terms
                .iter()
                .enumerate()
                .map(|(i, (_, v, w))| (v.scale(svd.v_t[(r, i)] * s), w.clone()))
                .collect();
            let ur = from_coords(params, &basis, du);
            for (v, w) in compress_pairs(params, &inner)? {
                terms.push((ur.clone(), v, w));
            }
        }
        Ok(Self { params: params.clone(), terms })
    }

    fn inner_terms(&self, i: usize, other: &Self, j: usize) -> Result<C64> {
        let (u, v, w) = &self.terms[i];
        let (u2, v2, w2) = &other.terms[j];
        let g = gamma_symbol(u, u2)?;
        let lhs = GradientVector::term(v, w)?.left_action(&g)?;
        lhs.inner(&GradientVector::term(v2, w2)?)
    }

    /// ⟨u⊗V, u′⊗V′⟩ = ⟨Γ(u,u′)·V, V′⟩_∇ summed over terms.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.params.check_same(&other.params)?;
        self.require_complete()?;
        other.require_complete()?;
        let pairs: Vec<(usize, usize)> =
            (0..self.terms.len()).flat_map(|i| (0..other.terms.len()).map(move |j| (i, j))).collect();
        pairs.par_iter().map(|&(i, j)| self.inner_terms(i, other, j)).try_reduce(zero, |a, b| Ok(a + b))
    }

    /// Gram over the compressed terms.
    pub fn gram(&self) -> Result<CMat> {
        let n = self.terms.len();
        let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let vals: Vec<C64> = idx.par_iter().map(|&(i, j)| self.inner_terms(i, self, j)).collect::<Result<_>>()?;
        let mut g = CMat::zeros(n, n);
        for (&(i, j), v) in idx.iter().zip(vals) {
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        Ok(g)
    }

    pub fn norm(&self) -> Result<f64> {
        let v = self.compressed()?;
        if v.terms.is_empty() {
            return Ok(0.0);
        }
        let g = numerics::psd_clip(&v.gram()?, 1e-9)?;
        let s: C64 = g.iter().copied().sum();
        Ok(s.re.max(0.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradient::{dirichlet_form, PsiMap, Route};
    use crate::numerics::hermitian_eigvals;
    use crate::wick::wick;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_element(params: &FockParams, rng: &mut ChaCha8Rng, top: usize) -> FockVector {
        let mut v = FockVector::zeros(params, top);
        for m in 0..=top {
            for z in v.level_mut(m).iter_mut() {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        v
    }

    #[test]
    fn pair_matches_literal_gamma() {
        let pp = FockParams::new(0.35, 2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..4 {
            let a = random_element(&pp, &mut rng, 2);
            let b = random_element(&pp, &mut rng, 2);
            let xi = random_element(&pp, &mut rng, 2);
            let eta = random_element(&pp, &mut rng, 2);
            let x = GradientVector::pair(&a, &xi, &b, &eta).unwrap();
            let y = GradientVector::pair_literal(&a, &xi, &b, &eta).unwrap();
            assert!((x - y).norm() < 1e-10 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn norm_examples() {
        let pp = FockParams::new(0.5, 2, 6).unwrap();
        let one = FockVector::vacuum(&pp);
        assert_eq!(GradientVector::partial(&one).norm().unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let a = random_element(&pp, &mut rng, 3);
            let n = GradientVector::partial(&a).norm().unwrap();
            assert!((n * n - dirichlet_form(&a).unwrap().re).abs() < 1e-9);
        }
    }

    #[test]
    fn gram_is_psd() {
        let pp = FockParams::new(-0.6, 2, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut v = GradientVector::zero(&pp);
        for _ in 0..6 {
            let a = random_element(&pp, &mut rng, 2);
            let xi = random_element(&pp, &mut rng, 2);
            v = v.add(&GradientVector::term(&a, &xi).unwrap()).unwrap();
        }
        let ev = hermitian_eigvals(&v.gram().unwrap()).unwrap();
        let top = ev.last().unwrap().abs();
        assert!(ev[0] >= -1e-9 * top);
    }

    #[test]
    fn bimodule_axioms() {
        let pp = FockParams::new(0.3, 2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = GradientVector::term(&random_element(&pp, &mut rng, 1), &random_element(&pp, &mut rng, 1)).unwrap();
        let x = random_element(&pp, &mut rng, 1);
        let y = random_element(&pp, &mut rng, 1);
        let xy = product(&x, &y).unwrap();
        let r1 = v.left_action(&y).unwrap().left_action(&x).unwrap().sub(&v.left_action(&xy).unwrap()).unwrap();
        assert!(r1.norm().unwrap() < 1e-8);
        let r2 = v.right_action(&x).unwrap().right_action(&y).unwrap().sub(&v.right_action(&xy).unwrap()).unwrap();
        assert!(r2.norm().unwrap() < 1e-8);
        let r3 = v
            .left_action(&x)
            .unwrap()
            .right_action(&y)
            .unwrap()
            .sub(&v.right_action(&y).unwrap().left_action(&x).unwrap())
            .unwrap();
        assert!(r3.norm().unwrap() < 1e-8);
    }

    #[test]
    fn left_action_is_contractive() {
        let pp = FockParams::new(0.4, 2, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let x = random_element(&pp, &mut rng, 1);
            let v = GradientVector::term(&random_element(&pp, &mut rng, 2), &random_element(&pp, &mut rng, 2)).unwrap();
            let op = wick(&pp, &x).unwrap().realized().to_dense(6);
            // operator norm of x in the q-inner product on levels ≤ 6
            let mut sq = CMat::zeros(op.nrows(), op.ncols());
            let mut isq = sq.clone();
            let mut off = 0;
            for m in 0..=6 {
                let d = pp.level_dim(m);
                sq.view_mut((off, off), (d, d)).copy_from(pp.gram_sqrt(m).unwrap());
                isq.view_mut((off, off), (d, d)).copy_from(pp.gram_inv_sqrt(m).unwrap());
                off += d;
            }
            let xn = crate::numerics::op_norm(&(&sq * op * &isq)).unwrap();
            let lhs = v.left_action(&x).unwrap().norm().unwrap();
            assert!(lhs <= xn * v.norm().unwrap() + 1e-8);
        }
    }

    #[test]
    fn compression_preserves_norm() {
        let pp = FockParams::new(0.5, 2, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut v = GradientVector::zero(&pp);
        for _ in 0..4 {
            v = v
                .add(&GradientVector::term(&random_element(&pp, &mut rng, 2), &random_element(&pp, &mut rng, 2)).unwrap())
                .unwrap();
        }
        let raw = v.gram().unwrap().iter().copied().sum::<C64>().re.sqrt();
        assert!((v.norm().unwrap() - raw).abs() < 1e-9 * raw.max(1.0));
        assert!(v.sub(&v).unwrap().norm().unwrap() == 0.0);
    }

    #[test]
    fn lemma_pairing_identity() {
        let pp = FockParams::new(0.3, 2, 8).unwrap();
        let e1 = FockVector::basis(&pp, &[0]).unwrap();
        let e2 = FockVector::basis(&pp, &[1]).unwrap();
        let one = FockVector::vacuum(&pp);
        let check = |x: &FockVector, y: &FockVector, a: &FockVector, xi: &FockVector, b: &FockVector, eta: &FockVector| {
            let lhs = GradientVector::term(a, xi)
                .unwrap()
                .left_action(x)
                .unwrap()
                .right_action(y)
                .unwrap()
                .inner(&GradientVector::term(b, eta).unwrap())
                .unwrap();
            let psi = PsiMap::new(&b.conj(), a, 0.0, Route::Partition).unwrap();
            let rhs = product(&psi.apply(x).unwrap(), &product(xi, y).unwrap()).unwrap().q_inner(eta).unwrap();
            (lhs - rhs).norm()
        };
        assert!(check(&e1, &e1, &e2, &one, &e2, &one) < 1e-8);
        assert!(check(&one, &one, &e2, &e1, &e1, &e1) < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..3 {
            let r: Vec<FockVector> = (0..6).map(|_| random_element(&pp, &mut rng, 1)).collect();
            assert!(check(&r[0], &r[1], &r[2], &r[3], &r[4], &r[5]) < 1e-8);
        }
    }

    #[test]
    fn nabla2_inner_product_two_ways() {
        let pp = FockParams::new(0.4, 2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..2 {
            let r: Vec<FockVector> = (0..6).map(|_| random_element(&pp, &mut rng, 1)).collect();
            let a = Nabla2Vector::term(&r[0], &r[1], &r[2]).unwrap();
            let b = Nabla2Vector::term(&r[3], &r[4], &r[5]).unwrap();
            let nested = a.inner(&b).unwrap();
            let g = gamma_symbol(&r[0], &r[3]).unwrap();
            let psi = PsiMap::new(&r[4].conj(), &r[1], 0.0, Route::Partition).unwrap();
            let via_psi = product(&psi.apply(&g).unwrap(), &r[2]).unwrap().q_inner(&r[5]).unwrap();
            assert!((nested - via_psi).norm() < 1e-8);
            let n = a.norm().unwrap();
            assert!((n * n - a.inner(&a).unwrap().re).abs() < 1e-8);
            assert!(a.sub(&a).unwrap().norm().unwrap() == 0.0);
        }
    }
}
