//! Truncated q-Fock space: Gram operators, creation/annihilation, the
//! conjugation I, splitting operators R* and the pairings m_j.

mod operator;
mod params;
mod shuffle;
mod vector;

pub use operator::FockOperator;
pub use params::{digits, index, FockParams, MAX_LEVEL_BUDGET, MAX_TOP_DIM};
pub use shuffle::{ShuffleTable, ShuffleTerm};
pub use vector::{FockVector, SerialVector};

use crate::error::{QError, Result};
use crate::numerics::{self, c, CMat, CVec, C64};

/// P_q^m.
pub fn symmetrizer(params: &FockParams, m: usize) -> Result<CMat> {
    params.gram(m).cloned()
}

pub fn q_inner(u: &FockVector, v: &FockVector) -> Result<C64> {
    u.q_inner(v)
}

pub fn conjugation(v: &FockVector) -> FockVector {
    v.conj()
}

fn check_one_particle(params: &FockParams, xi: &CVec) -> Result<()> {
    if xi.len() != params.dim() {
        return Err(QError::ShapeMismatch(format!(
            "one-particle vector has length {}, expected {}",
            xi.len(),
            params.dim()
        )));
    }
    Ok(())
}

/// l_q(ξ): η ↦ ξ⊗η. The block from level M is dropped.
pub fn creation(params: &FockParams, xi: &CVec) -> Result<FockOperator> {
    check_one_particle(params, xi)?;
    let top = params.max_level();
    let mut op = FockOperator::new(params, 1, 0, top as i64 - 1, true);
    for m in 0..top {
        let id = CMat::identity(params.level_dim(m), params.level_dim(m));
        let col = CMat::from_column_slice(xi.len(), 1, xi.as_slice());
        op.add_block(m, m + 1, col.kronecker(&id));
    }
    Ok(op)
}

/// l_q*(ξ)(η₁⊗…⊗η_m) = Σ_k q^{k−1} ⟨ξ, η_k⟩ η₁⊗…η̂_k…⊗η_m, antilinear in ξ.
pub fn annihilation(params: &FockParams, xi: &CVec) -> Result<FockOperator> {
    check_one_particle(params, xi)?;
    let n = params.dim();
    let q = params.q();
    let mut op = FockOperator::new(params, 0, 1, params.max_level() as i64, true);
    for m in 1..=params.max_level() {
        let mut b = CMat::zeros(params.level_dim(m - 1), params.level_dim(m));
        for col in 0..params.level_dim(m) {
            let d = digits(col, n, m);
            for k in 0..m {
                let w = xi[d[k]].conj() * q.powi(k as i32);
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut rest = d.clone();
                rest.remove(k);
                b[(index(&rest, n), col)] += w;
            }
        }
        op.add_block(m, m - 1, b);
    }
    Ok(op)
}

/// Applies the weighted shuffle sum for `parts` to a level-Σparts tensor.
pub fn apply_shuffle(params: &FockParams, parts: &[usize], v: &CVec) -> Result<CVec> {
    let table = params.shuffle(parts)?;
    if v.len() != params.level_dim(table.level) {
        return Err(QError::ShapeMismatch(format!(
            "shuffle on level {} got length {}",
            table.level,
            v.len()
        )));
    }
    let mut out = CVec::zeros(v.len());
    for term in &table.terms {
        for (j, &dst) in term.map.iter().enumerate() {
            out[dst as usize] += v[j] * term.weight;
        }
    }
    Ok(out)
}

fn shuffle_matrix(params: &FockParams, parts: &[usize]) -> Result<CMat> {
    let table = params.shuffle(parts)?;
    let d = params.level_dim(table.level);
    let mut m = CMat::zeros(d, d);
    for term in &table.terms {
        for (j, &dst) in term.map.iter().enumerate() {
            m[(dst as usize, j)] += c(term.weight);
        }
    }
    Ok(m)
}

/// R*_{n,k} on level n+k: e_J ↦ Σ_{|A|=n} q^{i(A)} e_{J_A J_{Aᶜ}}.
pub fn r_star(params: &FockParams, n: usize, k: usize) -> Result<CMat> {
    shuffle_matrix(params, &[n, k])
}

/// R*_{n,k,l} on level n+k+l, the unique solution of
/// P^{n+k+l} = (Pⁿ⊗Pᵏ⊗Pˡ)R*.
pub fn r_star3(params: &FockParams, n: usize, k: usize, l: usize) -> Result<CMat> {
    shuffle_matrix(params, &[n, k, l])
}

/// m_j(v⊗w) = ⟨Iv, w⟩_q for level-j tensors (bilinear).
pub fn pairing(params: &FockParams, j: usize, v: &CVec, w: &CVec) -> Result<C64> {
    let m = params.pairing_matrix(j)?;
    if v.len() != m.nrows() || w.len() != m.nrows() {
        return Err(QError::ShapeMismatch(format!("pairing m_{j} on lengths {} and {}", v.len(), w.len())));
    }
    Ok((v.transpose() * m * w)[(0, 0)])
}

/// Contracts factor `a` with factor `b` (a < b, both of level j) of a tensor
/// in H^{⊗f₀}⊗H^{⊗f₁}⊗…, pairing a on the left. Remaining factors keep
/// their order.
pub fn contract_pair(params: &FockParams, t: &CVec, factors: &[usize], a: usize, b: usize) -> Result<CVec> {
    if a >= b || b >= factors.len() || factors[a] != factors[b] {
        return Err(QError::ShapeMismatch(format!(
            "cannot pair factors {a} and {b} of shape {factors:?}"
        )));
    }
    let total: usize = factors.iter().sum();
    if t.len() != params.level_dim(total) {
        return Err(QError::ShapeMismatch(format!("tensor length {} for shape {factors:?}", t.len())));
    }
    let j = factors[a];
    let m = params.pairing_matrix(j)?;
    let n = params.dim();
    let out_level = total - 2 * j;
    let mut out = CVec::zeros(params.level_dim(out_level));
    let starts: Vec<usize> = factors
        .iter()
        .scan(0, |acc, &f| {
            let s = *acc;
            *acc += f;
            Some(s)
        })
        .collect();
    for (i, &x) in t.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        let d = digits(i, n, total);
        let da = index(&d[starts[a]..starts[a] + j], n);
        let db = index(&d[starts[b]..starts[b] + j], n);
        let w = m[(da, db)];
        if w == C64::new(0.0, 0.0) {
            continue;
        }
        let rest: Vec<usize> = d
            .iter()
            .enumerate()
            .filter(|(p, _)| {
                !((*p >= starts[a] && *p < starts[a] + j) || (*p >= starts[b] && *p < starts[b] + j))
            })
            .map(|(_, &v)| v)
            .collect();
        out[index(&rest, n)] += x * w;
    }
    Ok(out)
}

/// Norm of m_j as a functional on H_q^{⊗j} ⊗ H_q^{⊗j}.
pub fn pairing_norm(params: &FockParams, j: usize) -> Result<f64> {
    let m = params.pairing_matrix(j)?;
    let a = params.gram_inv_sqrt(j)?;
    let ortho = a.transpose() * m * a;
    let row = CMat::from_row_iterator(1, ortho.len(), ortho.iter().copied());
    numerics::op_norm(&row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{hermitian_eigvals, max_abs};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(q: f64, n: usize, m: usize) -> FockParams {
        FockParams::new(q, n, m).unwrap()
    }

    fn e(params: &FockParams, i: usize) -> CVec {
        let mut v = CVec::zeros(params.dim());
        v[i] = c(1.0);
        v
    }

    fn random_vector(params: &FockParams, rng: &mut ChaCha8Rng, top: usize) -> FockVector {
        let mut v = FockVector::zeros(params, top);
        for m in 0..=top {
            for z in v.level_mut(m).iter_mut() {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        v
    }

    #[test]
    fn symmetrizer_examples() {
        let pp = p(0.37, 3, 4);
        assert!(max_abs(&(symmetrizer(&pp, 1).unwrap() - CMat::identity(3, 3))) < 1e-15);
        let z = p(0.0, 2, 4);
        assert!(max_abs(&(symmetrizer(&z, 4).unwrap() - CMat::identity(16, 16))) < 1e-15);
        let one = p(0.3, 1, 3);
        assert_relative_eq!(symmetrizer(&one, 2).unwrap()[(0, 0)].re, 1.3, epsilon = 1e-15);
        assert!(symmetrizer(&one, 4).is_err());
    }

    #[test]
    fn q_inner_examples() {
        let pp = p(0.4, 2, 3);
        let om = FockVector::vacuum(&pp);
        assert_relative_eq!(q_inner(&om, &om).unwrap().re, 1.0);
        let a = FockVector::basis(&pp, &[0, 1]).unwrap();
        let b = FockVector::basis(&pp, &[1, 0]).unwrap();
        assert_relative_eq!(q_inner(&a, &b).unwrap().re, 0.4, epsilon = 1e-15);
        assert_relative_eq!(q_inner(&a, &a).unwrap().re, 1.0, epsilon = 1e-15);
        let other = p(0.5, 2, 3);
        let err = q_inner(&a, &FockVector::vacuum(&other)).unwrap_err();
        assert_eq!(err.code(), "PARAM_MISMATCH");
    }

    #[test]
    fn creation_annihilation_examples() {
        let pp = p(0.3, 2, 3);
        let om = FockVector::vacuum(&pp);
        let out = creation(&pp, &e(&pp, 0)).unwrap().apply(&om).unwrap();
        assert!(out.max_abs_diff(&FockVector::basis(&pp, &[0]).unwrap()) < 1e-15);
        let ann = annihilation(&pp, &e(&pp, 0)).unwrap();
        let out = ann.apply(&FockVector::basis(&pp, &[0, 1]).unwrap()).unwrap();
        assert!(out.max_abs_diff(&FockVector::basis(&pp, &[1]).unwrap()) < 1e-15);
        let out = ann.apply(&FockVector::basis(&pp, &[1, 0]).unwrap()).unwrap();
        assert!(out.max_abs_diff(&FockVector::basis(&pp, &[1]).unwrap().scale(c(0.3))) < 1e-15);
    }

    #[test]
    fn annihilation_is_gram_adjoint_of_creation() {
        for q in [-0.5, 0.0, 0.3, 0.7] {
            for n in 1..=3 {
                let top = if n == 3 { 4 } else { 5 };
                let pp = p(q, n, top);
                for i in 0..n {
                    let cr = creation(&pp, &e(&pp, i)).unwrap().adjoint().unwrap();
                    let an = annihilation(&pp, &e(&pp, i)).unwrap();
                    assert!(cr.max_abs_diff(&an, 4) < 1e-10, "q={q} n={n} i={i}");
                }
            }
        }
    }

    #[test]
    fn gram_positive_definite() {
        for q in [-0.8, -0.5, 0.0, 0.5, 0.8] {
            for n in 1..=3 {
                let pp = p(q, n, 5);
                for m in 0..=5 {
                    let ev = hermitian_eigvals(pp.gram(m).unwrap()).unwrap();
                    assert!(ev[0] > 0.0, "q={q} n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn conjugation_examples() {
        let pp = p(0.5, 2, 4);
        let v = FockVector::basis(&pp, &[0, 1]).unwrap();
        assert!(v.conj().max_abs_diff(&FockVector::basis(&pp, &[1, 0]).unwrap()) < 1e-15);
        let v = FockVector::basis(&pp, &[0]).unwrap().scale(C64::i());
        assert!(v.conj().max_abs_diff(&v.scale(c(-1.0))) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let u = random_vector(&pp, &mut rng, 4);
            let w = random_vector(&pp, &mut rng, 4);
            let lhs = u.conj().q_inner(&w.conj()).unwrap();
            let rhs = u.q_inner(&w).unwrap().conj();
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
            assert!(u.conj().conj().max_abs_diff(&u) == 0.0);
        }
    }

    fn kron3(a: &CMat, b: &CMat, cm: &CMat) -> CMat {
        a.kronecker(b).kronecker(cm)
    }

    fn rel(a: &CMat, b: &CMat) -> f64 {
        max_abs(&(a - b)) / max_abs(b).max(1.0)
    }

    #[test]
    fn r_star_examples_and_factorization() {
        let pp = p(0.5, 2, 5);
        assert!(max_abs(&(r_star(&pp, 0, 3).unwrap() - CMat::identity(8, 8))) < 1e-15);
        assert!(max_abs(&(r_star(&pp, 3, 0).unwrap() - CMat::identity(8, 8))) < 1e-15);
        let one = p(0.25, 1, 3);
        assert_relative_eq!(r_star(&one, 1, 1).unwrap()[(0, 0)].re, 1.25, epsilon = 1e-15);
        for (n, k) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let lhs = pp.gram(n + k).unwrap().clone();
            let rhs = pp.gram(n).unwrap().kronecker(pp.gram(k).unwrap()) * r_star(&pp, n, k).unwrap();
            assert!(rel(&rhs, &lhs) < 1e-11, "({n},{k})");
        }
    }

    #[test]
    fn r_star3_splitting() {
        for q in [-0.5, 0.3, 0.5] {
            for nd in 1..=3 {
                let top = if nd == 3 { 4 } else { 5 };
                let pp = p(q, nd, top);
                for n in 0..=top {
                    for k in 0..=top - n {
                        for l in 0..=top - n - k {
                            let r3 = r_star3(&pp, n, k, l).unwrap();
                            let id = |m: usize| CMat::identity(pp.level_dim(m), pp.level_dim(m));
                            let left = r_star(&pp, n, k).unwrap().kronecker(&id(l)) * r_star(&pp, n + k, l).unwrap();
                            let right = id(n).kronecker(&r_star(&pp, k, l).unwrap()) * r_star(&pp, n, k + l).unwrap();
                            assert!(rel(&left, &r3) < 1e-12, "q={q} ({n},{k},{l})");
                            assert!(rel(&right, &r3) < 1e-12, "q={q} ({n},{k},{l})");
                            let g = kron3(pp.gram(n).unwrap(), pp.gram(k).unwrap(), pp.gram(l).unwrap()) * &r3;
                            assert!(rel(&g, pp.gram(n + k + l).unwrap()) < 1e-11);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pairing_examples() {
        let pp = p(0.5, 2, 4);
        assert_relative_eq!(pairing(&pp, 1, &e(&pp, 0), &e(&pp, 0)).unwrap().re, 1.0);
        for n in 1..=5 {
            let pn = p(0.3, n, 1);
            assert!((pairing_norm(&pn, 1).unwrap() - (n as f64).sqrt()).abs() < 1e-9);
        }
        // m_2(e₁⊗e₂, e₂⊗e₁) = ⟨I(e₁⊗e₂), e₂⊗e₁⟩_q = ⟨e₂⊗e₁, e₂⊗e₁⟩_q
        let v = FockVector::basis(&pp, &[0, 1]).unwrap();
        let w = FockVector::basis(&pp, &[1, 0]).unwrap();
        let via_gram = v.conj().q_inner(&w).unwrap();
        let got = pairing(&pp, 2, v.level(2).unwrap(), w.level(2).unwrap()).unwrap();
        assert!((got - via_gram.conj()).norm() < 1e-15);
        assert_eq!(pairing(&pp, 2, &e(&pp, 0), &e(&pp, 0)).unwrap_err().code(), "SHAPE_MISMATCH");
    }

    #[test]
    fn pairing_is_bilinear_conjugated_inner_product() {
        let pp = p(-0.4, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for j in 0..=3 {
            let v = random_vector(&pp, &mut rng, j).component(j).unwrap();
            let w = random_vector(&pp, &mut rng, j).component(j).unwrap();
            // ⟨Iv, w⟩ in the antilinear-first convention is our q_inner(w, Iv)
            let expect = w.q_inner(&v.conj()).unwrap();
            let got = pairing(&pp, j, v.level(j).unwrap(), w.level(j).unwrap()).unwrap();
            assert!((got - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn contract_pair_matches_pairing() {
        let pp = p(0.3, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_vector(&pp, &mut rng, 2).component(2).unwrap();
        let w = random_vector(&pp, &mut rng, 2).component(2).unwrap();
        let t = v.level(2).unwrap().kronecker(w.level(2).unwrap());
        let got = contract_pair(&pp, &t, &[2, 2], 0, 1).unwrap();
        let expect = pairing(&pp, 2, v.level(2).unwrap(), w.level(2).unwrap()).unwrap();
        assert!((got[0] - expect).norm() < 1e-14);
        assert!(contract_pair(&pp, &t, &[1, 3], 0, 1).is_err());
    }

    #[test]
    fn fock_vector_json_roundtrip() {
        let pp = p(0.3, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_vector(&pp, &mut rng, 3);
        let s = serde_json::to_string(&v.to_json()).unwrap();
        let back: SerialVector = serde_json::from_str(&s).unwrap();
        assert_eq!(FockVector::from_json(&pp, &back).unwrap().max_abs_diff(&v), 0.0);
    }

    #[test]
    fn params_validation() {
        assert_eq!(FockParams::new(1.0, 2, 3).unwrap_err().code(), "INVALID_PARAMS");
        assert_eq!(FockParams::new(0.5, 2, 9).unwrap_err().code(), "LEVEL_TOO_LARGE");
        assert_eq!(FockParams::new(0.5, 5, 6).unwrap_err().code(), "LEVEL_TOO_LARGE");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn q_inner_conjugate_symmetric_and_positive(seed in 0u64..5000, q in -0.8f64..0.8, n in 1usize..4) {
            let pp = p(q, n, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_vector(&pp, &mut rng, 3);
            let v = random_vector(&pp, &mut rng, 3);
            let a = u.q_inner(&v).unwrap();
            let b = v.q_inner(&u).unwrap();
            proptest::prop_assert!((a - b.conj()).norm() < 1e-10 * (1.0 + a.norm()));
            let uu = u.q_inner(&u).unwrap();
            proptest::prop_assert!(uu.re >= -1e-10 * u.plain_norm().powi(2));
            proptest::prop_assert!(uu.im.abs() < 1e-10 * (1.0 + uu.re));
        }
    }
}
