//! Bar-resolution differentials, the gradient-tensoring map G and the
//! cocycles ∂_n, evaluated pointwise on sampled tuples.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QError, Result};
use crate::gradient::{dirichlet_form, GradientVector, Nabla2Vector};
use crate::numerics::{c, CMat, C64};
use crate::qfock::{FockParams, FockVector};
use crate::wick::{product, product_chain};

/// An A-A bimodule whose vectors can be added, acted on and measured.
pub trait Bimodule: Clone + Send + Sync + 'static {
    fn zero(params: &FockParams) -> Self;
    fn add(&self, other: &Self) -> Result<Self>;
    fn scale(&self, s: C64) -> Self;
    fn left(&self, x: &FockVector) -> Result<Self>;
    fn right(&self, x: &FockVector) -> Result<Self>;
    fn norm(&self) -> Result<f64>;
}

/// Bimodules H admitting a ⊗_∇ (·): H → H_∇.
pub trait Gradable: Bimodule {
    type Grad: Bimodule;
    fn tensor(a: &FockVector, v: &Self) -> Result<Self::Grad>;
}

impl Bimodule for FockVector {
    fn zero(params: &FockParams) -> Self {
        FockVector::zeros(params, 0)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        FockVector::add(self, other)
    }
    fn scale(&self, s: C64) -> Self {
        FockVector::scale(self, s)
    }
    fn left(&self, x: &FockVector) -> Result<Self> {
        product(x, self)
    }
    fn right(&self, x: &FockVector) -> Result<Self> {
        product(self, x)
    }
    fn norm(&self) -> Result<f64> {
        self.require_complete("L2 norm")?;
        self.q_norm()
    }
}

impl Bimodule for GradientVector {
    fn zero(params: &FockParams) -> Self {
        GradientVector::zero(params)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        GradientVector::add(self, other)
    }
    fn scale(&self, s: C64) -> Self {
        GradientVector::scale(self, s)
    }
    fn left(&self, x: &FockVector) -> Result<Self> {
        self.left_action(x)
    }
    fn right(&self, x: &FockVector) -> Result<Self> {
        self.right_action(x)
    }
    fn norm(&self) -> Result<f64> {
        GradientVector::norm(self)
    }
}

impl Bimodule for Nabla2Vector {
    fn zero(params: &FockParams) -> Self {
        Nabla2Vector::zero(params)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        Nabla2Vector::add(self, other)
    }
    fn scale(&self, s: C64) -> Self {
        Nabla2Vector::scale(self, s)
    }
    fn left(&self, x: &FockVector) -> Result<Self> {
        self.left_action(x)
    }
    fn right(&self, x: &FockVector) -> Result<Self> {
        self.right_action(x)
    }
    fn norm(&self) -> Result<f64> {
        Nabla2Vector::norm(self)
    }
}

impl Gradable for FockVector {
    type Grad = GradientVector;
    fn tensor(a: &FockVector, v: &Self) -> Result<GradientVector> {
        GradientVector::term(a, v)
    }
}

impl Gradable for GradientVector {
    type Grad = Nabla2Vector;
    fn tensor(a: &FockVector, v: &Self) -> Result<Nabla2Vector> {
        let mut out = Nabla2Vector::zero(v.params());
        for (b, xi) in v.terms() {
            out = out.add(&Nabla2Vector::term(a, b, xi)?)?;
        }
        Ok(out)
    }
}

type Evaluator<V> = Arc<dyn Fn(&[FockVector]) -> Result<V> + Send + Sync>;

/// An n-linear map from algebra elements (given by symbols) into V.
#[derive(Clone)]
pub struct Cochain<V> {
    arity: usize,
    params: FockParams,
    eval: Evaluator<V>,
}

impl<V: Bimodule> Cochain<V> {
    pub fn new(
        params: &FockParams,
        arity: usize,
        eval: impl Fn(&[FockVector]) -> Result<V> + Send + Sync + 'static,
    ) -> Self {
        Self { arity, params: params.clone(), eval: Arc::new(eval) }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn params(&self) -> &FockParams {
        &self.params
    }

    pub fn eval(&self, args: &[FockVector]) -> Result<V> {
        if args.len() != self.arity {
            return Err(QError::ShapeMismatch(format!(
                "cochain of arity {} evaluated on {} arguments",
                self.arity,
                args.len()
            )));
        }
        (self.eval)(args)
    }

    /// The 0-cochain with value ξ.
    pub fn constant(params: &FockParams, xi: V) -> Self {
        Self::new(params, 0, move |_| Ok(xi.clone()))
    }
}

/// (df)(a₁,…,a_{n+1}) = a₁f(a₂,…) + Σ_k (−1)^k f(…,a_k a_{k+1},…)
/// + (−1)^{n+1} f(a₁,…,a_n)a_{n+1}.
pub fn bar_d<V: Bimodule>(f: &Cochain<V>) -> Cochain<V> {
    let n = f.arity;
    let g = f.clone();
    Cochain::new(&f.params, n + 1, move |a| {
        let mut acc = g.eval(&a[1..])?.left(&a[0])?;
        for k in 1..=n {
            let mut args: Vec<FockVector> = Vec::with_capacity(n);
            args.extend_from_slice(&a[..k - 1]);
            args.push(product(&a[k - 1], &a[k])?);
            args.extend_from_slice(&a[k + 1..]);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc = acc.add(&g.eval(&args)?.scale(c(sign)))?;
        }
        let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(&g.eval(&a[..n])?.right(&a[n])?.scale(c(sign)))
    })
}

/// (Gf)(a₁,…,a_n) = a₁ ⊗_∇ f(a₂,…,a_n).
pub fn g_map<V: Gradable>(f: &Cochain<V>) -> Cochain<V::Grad> {
    let g = f.clone();
    Cochain::new(&f.params, f.arity + 1, move |a| V::tensor(&a[0], &g.eval(&a[1..])?))
}

/// a ↦ aΩ.
pub fn identity_cochain(params: &FockParams) -> Cochain<FockVector> {
    Cochain::new(params, 1, |a| Ok(a[0].clone()))
}

/// ∂₁(a) = a ⊗_∇ Ω.
pub fn partial_1(params: &FockParams) -> Cochain<GradientVector> {
    Cochain::new(params, 1, |a| Ok(GradientVector::partial(&a[0])))
}

/// ∂₂(a, b) = a ⊗_∇ b ⊗_∇ Ω.
pub fn partial_2(params: &FockParams) -> Cochain<Nabla2Vector> {
    let p = params.clone();
    Cochain::new(params, 2, move |a| Nabla2Vector::term(&a[0], &a[1], &FockVector::vacuum(&p)))
}

/// f(a₁,…,a_n) = L(a₁⋯a_nΩ) for a seeded random level-preserving L.
pub fn random_cochain(params: &FockParams, arity: usize, seed: u64) -> Cochain<FockVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let maps: Vec<CMat> = (0..=params.max_level())
        .map(|m| {
            let d = params.level_dim(m);
            CMat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        })
        .collect();
    let p = params.clone();
    Cochain::new(params, arity, move |a| {
        let v = if a.is_empty() { FockVector::vacuum(&p) } else { product_chain(&a.iter().collect::<Vec<_>>())? };
        let mut out = v.clone();
        for m in 0..=v.top() {
            *out.level_mut(m) = &maps[m] * v.level(m).expect("stored level");
        }
        Ok(out)
    })
}

/// Random element with complex coefficients on levels 0..=top.
pub fn random_element(params: &FockParams, rng: &mut impl Rng, top: usize) -> FockVector {
    let mut v = FockVector::zeros(params, top);
    for m in 0..=top {
        for z in v.level_mut(m).iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    v
}

pub fn random_tuple(params: &FockParams, rng: &mut impl Rng, len: usize, top: usize) -> Vec<FockVector> {
    (0..len).map(|_| random_element(params, rng, top)).collect()
}

/// ‖d(df)(tuple)‖.
pub fn d_squared_residual<V: Bimodule>(f: &Cochain<V>, tuple: &[FockVector]) -> Result<f64> {
    bar_d(&bar_d(f)).eval(tuple)?.norm()
}

/// ‖(G d f + d G f)(tuple)‖_∇.
pub fn gd_dg_residual<V: Gradable>(f: &Cochain<V>, tuple: &[FockVector]) -> Result<f64> {
    let lhs = g_map(&bar_d(f)).eval(tuple)?;
    let rhs = bar_d(&g_map(f)).eval(tuple)?;
    lhs.add(&rhs)?.norm()
}

/// ‖∂(ab) − a∂(b) − ∂(a)b‖_∇, i.e. ‖(d∂₁)(a,b)‖.
pub fn leibniz_residual(a: &FockVector, b: &FockVector) -> Result<f64> {
    d_partial_residual(&partial_1(a.params()), &[a.clone(), b.clone()])
}

/// ‖(d f)(tuple)‖, used for the cocycle property of ∂_n.
pub fn d_partial_residual<V: Bimodule>(f: &Cochain<V>, tuple: &[FockVector]) -> Result<f64> {
    bar_d(f).eval(tuple)?.norm()
}

/// |‖∂a‖²_∇ − ⟨ΔaΩ, aΩ⟩_q|.
pub fn partial_norm_residual(a: &FockVector) -> Result<f64> {
    let n = GradientVector::partial(a).norm()?;
    Ok((n * n - dirichlet_form(a)?.re).abs())
}

/// ‖f(…, αx+βy, …) − αf(…x…) − βf(…y…)‖ in the given slot.
pub fn multilinearity_residual<V: Bimodule>(
    f: &Cochain<V>,
    tuple: &[FockVector],
    slot: usize,
    other: &FockVector,
    alpha: C64,
    beta: C64,
) -> Result<f64> {
    let mut mixed = tuple.to_vec();
    mixed[slot] = tuple[slot].scale(alpha).add(&other.scale(beta))?;
    let mut second = tuple.to_vec();
    second[slot] = other.clone();
    let lhs = f.eval(&mixed)?;
    let rhs = f.eval(tuple)?.scale(alpha).add(&f.eval(&second)?.scale(beta))?;
    lhs.add(&rhs.scale(c(-1.0)))?.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FockParams {
        FockParams::new(0.4, 2, 8).unwrap()
    }

    #[test]
    fn d_zero_on_vacuum_vanishes() {
        let pp = params();
        let f = Cochain::constant(&pp, FockVector::vacuum(&pp));
        let e1 = FockVector::basis(&pp, &[0]).unwrap();
        assert!(bar_d(&f).eval(&[e1]).unwrap().norm().unwrap() < 1e-15);
    }

    #[test]
    fn d_squared_vanishes() {
        let pp = params();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for arity in 0..=2 {
            let f = random_cochain(&pp, arity, 10 + arity as u64);
            for _ in 0..3 {
                let t = random_tuple(&pp, &mut rng, arity + 2, 2);
                assert!(d_squared_residual(&f, &t).unwrap() < 1e-8, "arity {arity}");
            }
        }
        let f = partial_1(&pp);
        let t = random_tuple(&pp, &mut rng, 3, 1);
        assert!(d_squared_residual(&f, &t).unwrap() < 1e-8);
    }

    #[test]
    fn g_map_examples_and_anticommutation() {
        let pp = params();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zero = Cochain::new(&pp, 1, {
            let p = pp.clone();
            move |_| Ok(FockVector::zeros(&p, 0))
        });
        let t = random_tuple(&pp, &mut rng, 2, 2);
        assert_eq!(g_map(&zero).eval(&t).unwrap().norm().unwrap(), 0.0);
        let gid = g_map(&identity_cochain(&pp)).eval(&t).unwrap();
        let expect = GradientVector::term(&t[0], &t[1]).unwrap();
        assert!(gid.sub(&expect).unwrap().norm().unwrap() < 1e-12);
        for arity in 0..=2 {
            let f = random_cochain(&pp, arity, 20 + arity as u64);
            let t = random_tuple(&pp, &mut rng, arity + 2, 2);
            assert!(gd_dg_residual(&f, &t).unwrap() < 1e-8, "arity {arity}");
        }
    }

    #[test]
    fn partial_cocycles() {
        let pp = FockParams::new(0.5, 2, 8).unwrap();
        let one = FockVector::vacuum(&pp);
        assert_eq!(partial_1(&pp).eval(&[one]).unwrap().norm().unwrap(), 0.0);
        let e1 = FockVector::basis(&pp, &[0]).unwrap();
        assert!(leibniz_residual(&e1, &e1).unwrap() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let t = random_tuple(&pp, &mut rng, 3, 2);
            assert!(leibniz_residual(&t[0], &t[1]).unwrap() < 1e-8);
            assert!(partial_norm_residual(&t[2]).unwrap() < 1e-8);
            let r = d_partial_residual(&partial_2(&pp), &t).unwrap();
            assert!(r < 1e-8, "{r}");
        }
    }

    #[test]
    fn cochains_are_multilinear() {
        let pp = params();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_cochain(&pp, 2, 1);
        let t = random_tuple(&pp, &mut rng, 2, 2);
        let o = random_element(&pp, &mut rng, 2);
        let (al, be) = (C64::new(0.3, -1.2), C64::new(-0.7, 0.4));
        for slot in 0..2 {
            assert!(multilinearity_residual(&f, &t, slot, &o, al, be).unwrap() < 1e-9);
            assert!(multilinearity_residual(&partial_2(&pp), &t, slot, &o, al, be).unwrap() < 1e-9);
        }
        assert!(multilinearity_residual(&partial_1(&pp), &t[..1], 0, &o, al, be).unwrap() < 1e-9);
        assert_eq!(f.eval(&t[..1]).unwrap_err().code(), "SHAPE_MISMATCH");
    }
}
