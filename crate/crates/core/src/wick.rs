//! Wick operators W_q(v) and the three product formulas: direct composition,
//! the pair-partition sum, and the R*-contraction form.

use rayon::prelude::*;

use crate::error::{QError, Result};
use crate::numerics::{c, CMat, CVec, C64};
use crate::partitions::{enumerate_partitions, PairPartition, SegmentShape};
use crate::qfock::{apply_shuffle, digits, index, FockOperator, FockParams, FockVector};

/// A symbol together with its realized operator.
#[derive(Clone, Debug)]
pub struct WickWord {
    symbol: FockVector,
    realized: FockOperator,
}

impl WickWord {
    pub fn symbol(&self) -> &FockVector {
        &self.symbol
    }
    pub fn realized(&self) -> &FockOperator {
        &self.realized
    }
    pub fn params(&self) -> &FockParams {
        self.symbol.params()
    }
    pub fn degree(&self) -> usize {
        self.symbol.degree()
    }
    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        self.realized.apply(v)
    }
}

pub(crate) fn row_major(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), m.transpose().iter().copied())
}

pub(crate) fn from_row_major(rows: usize, cols: usize, v: &[C64]) -> CMat {
    CMat::from_row_slice(rows, cols, v)
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Block (m → n+m−2j) of W(x) for a level-n symbol.
fn two_word_block(params: &FockParams, x: &CVec, n: usize, m: usize, j: usize) -> Result<CMat> {
    let xs = apply_shuffle(params, &[n - j, j], x)?;
    let a = params.level_dim(n - j);
    let z = from_row_major(a, params.level_dim(j), xs.as_slice()) * params.pairing_matrix(j)?;
    let b = params.level_dim(m - j);
    let t = n + m - 2 * j;
    let mut block = CMat::zeros(params.level_dim(t), params.level_dim(m));
    let table = params.shuffle(&[j, m - j])?;
    debug_assert_eq!(params.level_dim(t), a * b);
    for term in &table.terms {
        let w = c(term.weight);
        for (col, &dst) in term.map.iter().enumerate() {
            let (g, beta) = (dst as usize / b, dst as usize % b);
            for alpha in 0..a {
                block[(alpha * b + beta, col)] += w * z[(alpha, g)];
            }
        }
    }
    Ok(block)
}

/// Level n+m−2j part of W(x)y for homogeneous x (level n) and y (level m).
fn two_word_vec(params: &FockParams, x: &CVec, n: usize, y: &CVec, m: usize, j: usize) -> Result<CVec> {
    let xs = apply_shuffle(params, &[n - j, j], x)?;
    let ys = apply_shuffle(params, &[j, m - j], y)?;
    let xm = from_row_major(params.level_dim(n - j), params.level_dim(j), xs.as_slice());
    let ym = from_row_major(params.level_dim(j), params.level_dim(m - j), ys.as_slice());
    Ok(row_major(&(xm * params.pairing_matrix(j)? * ym)))
}

/// W_q(v) for a complete symbol v (levels may be mixed). Source columns m with
/// m + deg v ≤ M are complete; higher columns lose targets above M.
pub fn wick(params: &FockParams, v: &FockVector) -> Result<WickWord> {
    params.check_same(v.params())?;
    v.require_complete("wick symbol")?;
    let top = params.max_level();
    let deg = v.degree();
    let mut op = FockOperator::new(params, deg, deg, top as i64 - deg as i64, true);
    let jobs: Vec<(usize, usize, usize)> = (0..=v.top())
        .filter(|&n| v.level(n).is_some_and(|l| l.iter().any(|z| *z != zero())))
        .flat_map(|n| {
            (0..=top).flat_map(move |m| {
                (0..=n.min(m)).filter(move |&j| n + m - 2 * j <= top).map(move |j| (n, m, j))
            })
        })
        .collect();
    let blocks: Vec<(usize, usize, CMat)> = jobs
        .par_iter()
        .map(|&(n, m, j)| {
            let x = v.level(n).expect("stored level");
            two_word_block(params, x, n, m, j).map(|b| (m, n + m - 2 * j, b))
        })
        .collect::<Result<_>>()?;
    for (s, t, b) in blocks {
        op.add_block(s, t, b);
    }
    Ok(WickWord { symbol: v.clone(), realized: op })
}

/// W(x)y via the two-word formula.
pub fn product(x: &FockVector, y: &FockVector) -> Result<FockVector> {
    product_capped(x, y, usize::MAX)
}

/// W(x)y computed only on output levels ≤ cap.
pub fn product_capped(x: &FockVector, y: &FockVector, cap: usize) -> Result<FockVector> {
    let params = x.params();
    params.check_same(y.params())?;
    let degree = x.degree() + y.degree();
    let top = degree.min(params.max_level());
    let limit = top.min(cap);
    let mut levels: Vec<CVec> = (0..=top).map(|t| CVec::zeros(params.level_dim(t))).collect();
    for n in 0..=x.top() {
        let xn = x.level(n).expect("stored level");
        if xn.iter().all(|z| *z == zero()) {
            continue;
        }
        for m in 0..=y.top() {
            let ym = y.level(m).expect("stored level");
            if ym.iter().all(|z| *z == zero()) {
                continue;
            }
            for j in 0..=n.min(m) {
                let t = n + m - 2 * j;
                if t <= limit {
                    levels[t] += two_word_vec(params, xn, n, ym, m, j)?;
                }
            }
        }
    }
    let mut known = limit + 1;
    if !x.is_complete() {
        known = known.min(x.known().saturating_sub(y.degree()));
    }
    if !y.is_complete() {
        known = known.min(y.known().saturating_sub(x.degree()));
    }
    Ok(FockVector::from_parts(params, levels, degree, known))
}

/// Product of several elements, left to right: x₁x₂⋯x_k as a vector.
pub fn product_chain(xs: &[&FockVector]) -> Result<FockVector> {
    let (last, rest) = xs.split_last().ok_or_else(|| QError::ShapeMismatch("empty product".into()))?;
    let mut acc = (*last).clone();
    for x in rest.iter().rev() {
        acc = product(x, &acc)?;
    }
    Ok(acc)
}

/// Right multiplication ξ ↦ ξ·b as an operator; column J is W(e_J)b.
pub fn right_mult(b: &FockVector) -> Result<FockOperator> {
    let params = b.params();
    b.require_complete("right multiplier")?;
    let top = params.max_level();
    let deg = b.degree();
    let mut op = FockOperator::new(params, deg, deg, top as i64 - deg as i64, true);
    let cols: Vec<(usize, usize, Vec<CVec>)> = (0..=top)
        .flat_map(|m| (0..params.level_dim(m)).map(move |i| (m, i)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(m, i)| {
            let mut e = CVec::zeros(params.level_dim(m));
            e[i] = c(1.0);
            let ej = FockVector::from_level(params, m, e)?;
            let out = product(&ej, b)?;
            Ok((m, i, out.levels().to_vec()))
        })
        .collect::<Result<_>>()?;
    let mut blocks: std::collections::BTreeMap<(usize, usize), CMat> = Default::default();
    for (m, i, levels) in cols {
        for (t, l) in levels.iter().enumerate() {
            if t + deg < m || t > m + deg {
                continue;
            }
            let blk = blocks
                .entry((m, t))
                .or_insert_with(|| CMat::zeros(params.level_dim(t), params.level_dim(m)));
            blk.set_column(i, l);
        }
    }
    for ((s, t), b) in blocks {
        op.add_block(s, t, b);
    }
    Ok(op)
}

/// ⟨aΩ, Ω⟩_q.
pub fn trace(a: &FockOperator) -> C64 {
    a.block(0, 0).map_or(zero(), |b| b[(0, 0)])
}

/// Applies realized words right to left to Ω: W₁W₂⋯W_kΩ.
pub fn product_direct(words: &[&WickWord]) -> Result<FockVector> {
    let params = words.first().ok_or_else(|| QError::ShapeMismatch("empty product".into()))?.params();
    let mut v = FockVector::vacuum(params);
    for w in words.iter().rev() {
        v = w.apply(&v)?;
    }
    Ok(v)
}

/// A partition prepared for contracting tensors of a fixed segment shape.
#[derive(Clone, Debug)]
pub(crate) struct PreparedPartition {
    pub(crate) pairs: Vec<(usize, usize)>,
    pub(crate) singles: Vec<usize>,
    pub(crate) weight: f64,
    pub(crate) level: usize,
}

/// Enumerates partitions of segments with the given sizes (zeros allowed)
/// and keeps those with nonzero weight. The weight closure sees the
/// partition and the original segment id of every 1-based index.
pub(crate) fn prepare_partitions(
    sizes: &[usize],
    weight: impl Fn(&PairPartition, &[usize]) -> f64,
) -> Vec<PreparedPartition> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        let w = weight(
            &PairPartition { pairs: vec![], singletons: vec![], shape: SegmentShape::new(&[1]).expect("shape") },
            &[usize::MAX],
        );
        return if w != 0.0 { vec![PreparedPartition { pairs: vec![], singles: vec![], weight: w, level: 0 }] } else { vec![] };
    }
    let mut seg = vec![usize::MAX];
    for (s, &n) in sizes.iter().enumerate() {
        seg.extend(std::iter::repeat(s).take(n));
    }
    let shape = SegmentShape::nonempty(sizes).expect("nonempty shape");
    enumerate_partitions(&shape)
        .into_iter()
        .filter_map(|p| {
            let w = weight(&p, &seg);
            (w != 0.0).then(|| PreparedPartition {
                pairs: p.pairs.iter().map(|&(l, r)| (l - 1, r - 1)).collect(),
                singles: p.singletons.iter().map(|&s| s - 1).collect(),
                weight: w,
                level: p.singletons.len(),
            })
        })
        .collect()
}

/// Σ_π w(π) (Π δ_pairs) e_{J_S(π)} for a level-`total` tensor.
pub(crate) fn contract_partitions(
    params: &FockParams,
    parts: &[PreparedPartition],
    t: &CVec,
    total: usize,
    out: &mut [CVec],
) {
    let n = params.dim();
    let entries: Vec<(Vec<usize>, C64)> = t
        .iter()
        .enumerate()
        .filter(|(_, z)| **z != zero())
        .map(|(i, z)| (digits(i, n, total), *z))
        .collect();
    contract_entries(params, parts, &entries, out);
}

/// Same contraction on a sparse list of (multi-index, coefficient) entries.
pub(crate) fn contract_entries(
    params: &FockParams,
    parts: &[PreparedPartition],
    entries: &[(Vec<usize>, C64)],
    out: &mut [CVec],
) {
    let n = params.dim();
    let mut buf = Vec::new();
    for p in parts {
        let o = &mut out[p.level];
        for (d, z) in entries {
            if p.pairs.iter().all(|&(l, r)| d[l] == d[r]) {
                buf.clear();
                buf.extend(p.singles.iter().map(|&s| d[s]));
                o[index(&buf, n)] += z * p.weight;
            }
        }
    }
}

pub(crate) fn homogeneous_parts(v: &FockVector) -> Vec<(usize, &CVec)> {
    (0..=v.top())
        .filter_map(|m| v.level(m).map(|l| (m, l)))
        .filter(|(_, l)| l.iter().any(|z| *z != zero()))
        .collect()
}

/// W(ξ₁)⋯W(ξ_k)Ω by the pair-partition formula with undeformed pair weights.
pub fn product_partition(symbols: &[&FockVector]) -> Result<FockVector> {
    let params = symbols.first().ok_or_else(|| QError::ShapeMismatch("empty product".into()))?.params();
    let mut degree = 0;
    for s in symbols {
        params.check_same(s.params())?;
        s.require_complete("partition product")?;
        degree += s.degree();
    }
    if degree > params.max_level() {
        return Err(QError::TruncationLoss(format!(
            "partition product of total degree {degree} exceeds M={}",
            params.max_level()
        )));
    }
    let mut out: Vec<CVec> = (0..=degree).map(|t| CVec::zeros(params.level_dim(t))).collect();
    let comps: Vec<Vec<(usize, &CVec)>> = symbols.iter().map(|s| homogeneous_parts(s)).collect();
    let mut pick = vec![0usize; symbols.len()];
    'outer: loop {
        if comps.iter().all(|c| !c.is_empty()) {
            let sizes: Vec<usize> = pick.iter().zip(&comps).map(|(&i, c)| c[i].0).collect();
            let total: usize = sizes.iter().sum();
            let mut t = CVec::from_element(1, c(1.0));
            for (&i, c) in pick.iter().zip(&comps) {
                t = t.kronecker(c[i].1);
            }
            let q = params.q();
            let parts = prepare_partitions(&sizes, |p, _| q.powi(p.crossings().cr as i32));
            contract_partitions(params, &parts, &t, total, &mut out);
        } else {
            break;
        }
        for k in (0..pick.len()).rev() {
            pick[k] += 1;
            if pick[k] < comps[k].len() {
                continue 'outer;
            }
            pick[k] = 0;
        }
        break;
    }
    Ok(FockVector::from_parts(params, out, degree, degree + 1))
}

/// Σ_{j,r,s} w(j,r,s) m_r^{13} m_s^{12} m_j^{23} applied to
/// R*_{n−r−s,r,s}ξ ⊗ R*_{s,m−s−j,j}μ ⊗ R*_{j,r,k−j−r}η for homogeneous parts.
pub(crate) fn triple_contract_levels(
    params: &FockParams,
    (xi, n): (&CVec, usize),
    (mu, m): (&CVec, usize),
    (eta, k): (&CVec, usize),
    weight: &dyn Fn(usize, usize, usize) -> f64,
    out: &mut [CVec],
) -> Result<()> {
    let d = |l: usize| params.level_dim(l);
    for r in 0..=n.min(k) {
        for s in 0..=(n - r).min(m) {
            for j in 0..=(m - s).min(k - r) {
                let w = weight(j, r, s);
                if w == 0.0 {
                    continue;
                }
                let lvl = n + m + k - 2 * (j + r + s);
                if lvl >= out.len() {
                    continue;
                }
                let (a, rr, ss) = (d(n - r - s), d(r), d(s));
                let (b, jj) = (d(m - s - j), d(j));
                let g = d(k - j - r);
                let xs = apply_shuffle(params, &[n - r - s, r, s], xi)?;
                let ys = apply_shuffle(params, &[s, m - s - j, j], mu)?;
                let zs = apply_shuffle(params, &[j, r, k - j - r], eta)?;
                let x2 = from_row_major(a * rr, ss, xs.as_slice()) * params.pairing_matrix(s)?;
                let t1 = x2 * from_row_major(ss, b * jj, ys.as_slice());
                let t1 = from_row_major(a * rr * b, jj, row_major(&t1).as_slice());
                let z2 = params.pairing_matrix(j)? * from_row_major(jj, rr * g, zs.as_slice());
                let t2 = t1 * z2;
                let mr = params.pairing_matrix(r)?;
                let o = &mut out[lvl];
                for alpha in 0..a {
                    for beta in 0..b {
                        for gamma in 0..g {
                            let mut acc = zero();
                            for x in 0..rr {
                                let row = (alpha * rr + x) * b + beta;
                                for e in 0..rr {
                                    let mre = mr[(x, e)];
                                    if mre != zero() {
                                        acc += t2[(row, e * g + gamma)] * mre;
                                    }
                                }
                            }
                            o[(alpha * b + beta) * g + gamma] += acc * w;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// W(ξ)W(μ)W(η)Ω by the R*-contraction triple-product formula.
pub fn product_triple(xi: &FockVector, mu: &FockVector, eta: &FockVector) -> Result<FockVector> {
    let params = xi.params();
    params.check_same(mu.params())?;
    params.check_same(eta.params())?;
    for v in [xi, mu, eta] {
        v.require_complete("triple product")?;
    }
    let degree = xi.degree() + mu.degree() + eta.degree();
    if degree > params.max_level() {
        return Err(QError::TruncationLoss(format!(
            "triple product of total degree {degree} exceeds M={}",
            params.max_level()
        )));
    }
    let q = params.q();
    let mut out: Vec<CVec> = (0..=degree).map(|t| CVec::zeros(params.level_dim(t))).collect();
    for (n, x) in homogeneous_parts(xi) {
        for (m, y) in homogeneous_parts(mu) {
            for (k, z) in homogeneous_parts(eta) {
                let w = move |j: usize, r: usize, s: usize| q.powi((r * (m - j - s)) as i32);
                triple_contract_levels(params, (x, n), (y, m), (z, k), &w, &mut out)?;
            }
        }
    }
    Ok(FockVector::from_parts(params, out, degree, degree + 1))
}
