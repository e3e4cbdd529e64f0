use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::numerics::{self, c, CMat, CVec, C64};
use crate::qfock::{digits, FockOperator, FockParams, FockVector};
use crate::wick::{
    contract_entries, homogeneous_parts, prepare_partitions, right_mult, triple_contract_levels, wick,
};

use super::{number_operator, semigroup};

/// Verdicts need the tail ratio below 1 − RATIO_MARGIN.
pub const RATIO_MARGIN: f64 = 1e-3;

/// How the matrix of Ψ^{a,b}_t is assembled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Literal composition of Δ, left and right multiplication.
    Direct,
    /// Pair-partition sum over a↔b pairings.
    Partition,
    /// R*-contraction triple product with weight r.
    Rstar,
}

impl FromStr for Route {
    type Err = QError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Route::Direct),
            "partition" => Ok(Route::Partition),
            "rstar" => Ok(Route::Rstar),
            other => Err(QError::UnknownRoute(other.to_string())),
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Direct => "direct",
            Route::Partition => "partition",
            Route::Rstar => "rstar",
        })
    }
}

/// Ψ^{a,b}_t realized as a level-block matrix on its lossless columns.
#[derive(Clone, Debug)]
pub struct PsiMap {
    a: FockVector,
    b: FockVector,
    t: f64,
    route: Route,
    realized: FockOperator,
}

fn nonzero_levels(v: &FockVector) -> Vec<usize> {
    homogeneous_parts(v).into_iter().map(|(n, _)| n).collect()
}

/// Largest source level on which the pairing routes are lossless.
fn pairing_horizon(a: &FockVector, b: &FockVector) -> i64 {
    let top = a.params().max_level() as i64;
    let mut e = top;
    for n in nonzero_levels(a).into_iter().filter(|&n| n > 0) {
        for k in nonzero_levels(b).into_iter().filter(|&k| k > 0) {
            e = e.min(top - (n + k) as i64 + 2);
        }
    }
    e
}

/// Highest level shift n+k−2 over contributing level pairs.
fn pairing_reach(a: &FockVector, b: &FockVector) -> usize {
    let mut reach = 0;
    for n in nonzero_levels(a).into_iter().filter(|&n| n > 0) {
        for k in nonzero_levels(b).into_iter().filter(|&k| k > 0) {
            reach = reach.max(n + k - 2);
        }
    }
    reach
}

fn sparse_entries(v: &CVec, n: usize, level: usize) -> Vec<(Vec<usize>, C64)> {
    v.iter()
        .enumerate()
        .filter(|(_, z)| **z != C64::new(0.0, 0.0))
        .map(|(i, z)| (digits(i, n, level), *z))
        .collect()
}

impl PsiMap {
    pub fn new(a: &FockVector, b: &FockVector, t: f64, route: Route) -> Result<Self> {
        let params = a.params();
        params.check_same(b.params())?;
        a.require_complete("psi left word")?;
        b.require_complete("psi right word")?;
        if !(t >= 0.0) {
            return Err(QError::InvalidParams(format!("t = {t} must be nonnegative")));
        }
        let realized = match route {
            Route::Direct => build_direct(a, b, t)?,
            Route::Partition | Route::Rstar => build_pairing(a, b, t, route)?,
        };
        Ok(Self { a: a.clone(), b: b.clone(), t, route, realized })
    }

    pub fn a(&self) -> &FockVector {
        &self.a
    }
    pub fn b(&self) -> &FockVector {
        &self.b
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn route(&self) -> Route {
        self.route
    }
    pub fn realized(&self) -> &FockOperator {
        &self.realized
    }
    pub fn params(&self) -> &FockParams {
        self.a.params()
    }

    /// Highest source level whose column is exact, or None if there is none.
    pub fn lossless_through(&self) -> Option<usize> {
        let e = self.realized.exact_through();
        (e >= 0).then_some(e as usize)
    }

    /// Ψ(x) for complete x supported on lossless columns.
    pub fn apply(&self, x: &FockVector) -> Result<FockVector> {
        x.require_complete("psi argument")?;
        let x = x.clone().trimmed();
        for m in 0..=x.top() {
            if x.level(m).is_some_and(|l| l.iter().any(|z| *z != C64::new(0.0, 0.0))) {
                self.realized.require_column(m, "psi apply")?;
            }
        }
        let out = self.realized.apply(&x)?;
        let params = self.params();
        let deg = x.degree() + pairing_reach(&self.a, &self.b);
        if deg > params.max_level() {
            return Ok(out);
        }
        let levels = (0..=deg)
            .map(|t| out.level(t).cloned().unwrap_or_else(|| CVec::zeros(params.level_dim(t))))
            .collect();
        Ok(FockVector::from_parts(params, levels, deg, deg + 1))
    }

    /// Operator norm of Ψ restricted to level m, after Gram orthonormalization.
    pub fn level_norm(&self, m: usize) -> Result<f64> {
        self.realized.require_column(m, "level_norm")?;
        let params = self.params();
        let d = params.level_dim(m);
        let mut g = CMat::zeros(d, d);
        for (&(s, t), blk) in self.realized.blocks() {
            if s == m {
                g += blk.adjoint() * params.gram(t)? * blk;
            }
        }
        let w = params.gram_inv_sqrt(m)?;
        let h = w * g * w;
        let h = (&h + h.adjoint()) * c(0.5);
        let ev = numerics::hermitian_eigvals(&h)?;
        Ok(ev.last().copied().unwrap_or(0.0).max(0.0).sqrt())
    }

    /// P^{1/2} Ψ P^{-1/2} over lossless columns and all target levels.
    pub fn orthonormal_matrix(&self) -> Result<CMat> {
        let params = self.params();
        let e = self.lossless_through().ok_or_else(|| {
            QError::TruncationLoss("psi map has no lossless source level".into())
        })?;
        let top = params.max_level();
        let row_off: Vec<usize> = (0..=top).scan(0, |acc, m| {
            let o = *acc;
            *acc += params.level_dim(m);
            Some(o)
        }).collect();
        let col_off: Vec<usize> = row_off[..=e].to_vec();
        let rows = params.total_dim();
        let cols: usize = (0..=e).map(|m| params.level_dim(m)).sum();
        let mut out = CMat::zeros(rows, cols);
        for (&(s, t), blk) in self.realized.blocks() {
            if s <= e {
                let m = params.gram_sqrt(t)? * blk * params.gram_inv_sqrt(s)?;
                out.view_mut((row_off[t], col_off[s]), m.shape()).copy_from(&m);
            }
        }
        Ok(out)
    }
}

fn build_direct(a: &FockVector, b: &FockVector, t: f64) -> Result<FockOperator> {
    let params = a.params();
    let l = wick(params, a)?;
    let l = l.realized();
    let r = right_mult(b)?;
    let d = number_operator(params);
    let lr = l.compose(&r)?;
    let s1 = d.compose(&lr)?;
    let s2 = lr.compose(&d)?;
    let s3 = r.compose(&d.compose(l)?)?;
    let s4 = l.compose(&d.compose(&r)?)?;
    let sum = s1.add(&s2)?.sub(&s3)?.sub(&s4)?;
    Ok(semigroup(params, t).compose(&sum)?.scale(c(-0.5)))
}

fn build_pairing(a: &FockVector, b: &FockVector, t: f64, route: Route) -> Result<FockOperator> {
    let params = a.params();
    let top = params.max_level();
    let nd = params.dim();
    let q = params.q();
    let e = pairing_horizon(a, b);
    let (up, down) = (a.degree() + b.degree(), a.degree() + b.degree());
    let mut op = FockOperator::new(params, up, down, e, false);
    if e < 0 {
        return Ok(op);
    }
    let e = e as usize;
    let damp: Vec<C64> = (0..=top).map(|l| c((-t * l as f64).exp())).collect();
    for (n, an) in homogeneous_parts(a).into_iter().filter(|(n, _)| *n > 0) {
        for (k, bk) in homogeneous_parts(b).into_iter().filter(|(k, _)| *k > 0) {
            let ea = sparse_entries(an, nd, n);
            let eb = sparse_entries(bk, nd, k);
            let columns: Vec<(usize, Vec<Vec<CVec>>)> = (0..=e)
                .into_par_iter()
                .map(|m| -> Result<(usize, Vec<Vec<CVec>>)> {
                    let parts = match route {
                        Route::Partition => prepare_partitions(&[n, m, k], |p, seg| {
                            let r = p
                                .pairs
                                .iter()
                                .filter(|&&(l, rr)| seg[l] == 0 && seg[rr] == 2)
                                .count();
                            if r == 0 {
                                0.0
                            } else {
                                r as f64 * q.powi(p.crossings().cr as i32)
                            }
                        }),
                        _ => Vec::new(),
                    };
                    let mut cols = Vec::with_capacity(params.level_dim(m));
                    for jdx in 0..params.level_dim(m) {
                        let mut out: Vec<CVec> = (0..=top).map(|l| CVec::zeros(params.level_dim(l))).collect();
                        match route {
                            Route::Partition => {
                                let mid = digits(jdx, nd, m);
                                let mut entries = Vec::with_capacity(ea.len() * eb.len());
                                for (da, ca) in &ea {
                                    for (db, cb) in &eb {
                                        let mut d = da.clone();
                                        d.extend_from_slice(&mid);
                                        d.extend_from_slice(db);
                                        entries.push((d, ca * cb));
                                    }
                                }
                                contract_entries(params, &parts, &entries, &mut out);
                            }
                            _ => {
                                let mut mu = CVec::zeros(params.level_dim(m));
                                mu[jdx] = c(1.0);
                                let w = |j: usize, r: usize, s: usize| {
                                    if r == 0 {
                                        0.0
                                    } else {
                                        r as f64 * q.powi((r * (m - j - s)) as i32)
                                    }
                                };
                                triple_contract_levels(params, (an, n), (&mu, m), (bk, k), &w, &mut out)?;
                            }
                        }
                        for (l, v) in out.iter_mut().enumerate() {
                            *v *= damp[l];
                        }
                        cols.push(out);
                    }
                    Ok((m, cols))
                })
                .collect::<Result<_>>()?;
            for (m, cols) in columns {
                let reach = (n + m + k - 2).min(top);
                for tl in (0..=reach).filter(|tl| (tl + n + m + k) % 2 == 0) {
                    let mut blk = CMat::zeros(params.level_dim(tl), params.level_dim(m));
                    for (jdx, col) in cols.iter().enumerate() {
                        blk.set_column(jdx, &col[tl]);
                    }
                    op.add_block(m, tl, blk);
                }
            }
        }
    }
    Ok(op)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Convergent,
    Divergent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Convergent => "CONVERGENT",
            Verdict::Divergent => "DIVERGENT",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub m: usize,
    pub level_norm: f64,
    pub sp_bound: f64,
    pub partial_sum: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub q: f64,
    pub dim: usize,
    pub max_level: usize,
    pub p: f64,
    pub route: Route,
    pub lossless_through: usize,
    pub rows: Vec<DecayRow>,
    pub ratio: f64,
    pub predicted_ratio: f64,
    pub verdict: Verdict,
    /// Least-squares slope of log level_norm over the reported rows.
    pub slope: Option<f64>,
    /// max level_norm(m)/|q|^m over the reported rows.
    pub fitted_c: Option<f64>,
    /// S_p norm of the realized matrix in orthonormal coordinates; filled in
    /// by `with_truncated_schatten`.
    pub schatten_truncated: Option<f64>,
}

impl DecayReport {
    /// Adds the S_p norm of the whole truncated matrix (one dense SVD).
    pub fn with_truncated_schatten(mut self, psi: &PsiMap) -> Result<Self> {
        self.schatten_truncated = Some(numerics::schatten_norm(&psi.orthonormal_matrix()?, self.p)?);
        Ok(self)
    }
}

/// Level norms for every lossless source level, starting at 0.
pub fn level_norm_profile(psi: &PsiMap) -> Result<Vec<f64>> {
    let e = psi.lossless_through().ok_or_else(|| QError::TruncationLoss("no lossless level".into()))?;
    (0..=e).into_par_iter().map(|m| psi.level_norm(m)).collect()
}

fn ratio_of(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Per-level S_p bounds N^{m/p}·‖Ψ|_m‖, their partial sums and the tail
/// ratio verdict.
pub fn schatten_diagnostic(psi: &PsiMap, p: f64) -> Result<DecayReport> {
    if !(p >= 1.0) {
        return Err(QError::BadExponent(p));
    }
    let params = psi.params();
    let nd = params.dim() as f64;
    let norms = level_norm_profile(psi)?;
    let e = norms.len() - 1;
    let start = (psi.a().degree() + psi.b().degree()).min(e);
    if e < 1 || e <= start {
        return Err(QError::TruncationLoss(format!(
            "need at least two lossless levels from {start}, have through {e}"
        )));
    }
    let bounds: Vec<f64> = norms.iter().enumerate().map(|(m, v)| nd.powf(m as f64 / p) * v).collect();
    let mut partial = 0.0;
    let mut rows = Vec::new();
    for (m, &b) in bounds.iter().enumerate() {
        partial += b;
        if m >= start {
            let ratio = if m == 0 { 0.0 } else { ratio_of(b, bounds[m - 1]) };
            rows.push(DecayRow { m, level_norm: norms[m], sp_bound: b, partial_sum: partial, ratio });
        }
    }
    let ratio = ratio_of(bounds[e], bounds[e - 1]);
    let verdict = if ratio < 1.0 - RATIO_MARGIN { Verdict::Convergent } else { Verdict::Divergent };
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.level_norm > f64::MIN_POSITIVE)
        .map(|r| (r.m as f64, r.level_norm.ln()))
        .collect();
    let slope = least_squares_slope(&pts);
    let q = params.q();
    let fitted_c = (q != 0.0).then(|| {
        rows.iter().map(|r| r.level_norm / q.abs().powi(r.m as i32)).fold(0.0, f64::max)
    });
    Ok(DecayReport {
        q,
        dim: params.dim(),
        max_level: params.max_level(),
        p,
        route: psi.route(),
        lossless_through: e,
        rows,
        ratio,
        predicted_ratio: q.abs() * nd.powf(1.0 / p),
        verdict,
        slope,
        fitted_c,
        schatten_truncated: None,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdRow {
    pub q: f64,
    pub ratio: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    pub dim: usize,
    pub p: f64,
    pub max_level: usize,
    pub predicted_threshold: f64,
    pub rows: Vec<ThresholdRow>,
    pub flips: usize,
    /// Consecutive grid points between which the verdict changes first.
    pub flip_bracket: Option<(f64, f64)>,
}

/// Runs the Schatten diagnostic for Ψ^{a,b} over a grid of q values; a and
/// b are given as 0-based basis index lists.
pub fn threshold_scan(
    dim: usize,
    p: f64,
    max_level: usize,
    qs: &[f64],
    a: &[usize],
    b: &[usize],
    route: Route,
) -> Result<ThresholdReport> {
    if !(p >= 1.0) {
        return Err(QError::BadExponent(p));
    }
    let rows: Vec<ThresholdRow> = qs
        .par_iter()
        .map(|&q| {
            let params = FockParams::new(q, dim, max_level)?;
            let psi = PsiMap::new(&FockVector::basis(&params, a)?, &FockVector::basis(&params, b)?, 0.0, route)?;
            let rep = schatten_diagnostic(&psi, p)?;
            Ok(ThresholdRow { q, ratio: rep.ratio, verdict: rep.verdict })
        })
        .collect::<Result<_>>()?;
    let mut flips = 0;
    let mut flip_bracket = None;
    for w in rows.windows(2) {
        if w[0].verdict != w[1].verdict {
            flips += 1;
            flip_bracket.get_or_insert((w[0].q, w[1].q));
        }
    }
    Ok(ThresholdReport {
        dim,
        p,
        max_level,
        predicted_threshold: (dim as f64).powf(-1.0 / p),
        rows,
        flips,
        flip_bracket,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradient::psi_element;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_level(params: &FockParams, rng: &mut ChaCha8Rng, n: usize) -> FockVector {
        let v = CVec::from_fn(params.level_dim(n), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        FockVector::from_level(params, n, v).unwrap()
    }

    #[test]
    fn route_parsing() {
        assert_eq!("rstar".parse::<Route>().unwrap(), Route::Rstar);
        assert_eq!("bogus".parse::<Route>().unwrap_err().code(), "UNKNOWN_ROUTE");
        assert_eq!(Route::Partition.to_string(), "partition");
    }

    #[test]
    fn single_pairing_example() {
        let pp = FockParams::new(0.5, 1, 4).unwrap();
        let e1 = FockVector::basis(&pp, &[0]).unwrap();
        let one = FockVector::vacuum(&pp);
        for route in [Route::Direct, Route::Partition, Route::Rstar] {
            let psi = PsiMap::new(&e1, &e1, 0.0, route).unwrap();
            let v = psi.apply(&one).unwrap();
            assert!(v.max_abs_diff(&one) < 1e-14, "{route}");
        }
    }

    #[test]
    fn identity_word_gives_zero() {
        let pp = FockParams::new(0.3, 2, 5).unwrap();
        let one = FockVector::vacuum(&pp);
        let e1 = FockVector::basis(&pp, &[0]).unwrap();
        for route in [Route::Direct, Route::Partition, Route::Rstar] {
            let psi = PsiMap::new(&one, &e1, 0.0, route).unwrap();
            assert!(psi.realized().max_abs(psi.lossless_through().unwrap()) < 1e-14, "{route}");
        }
    }

    fn route_triangle(q: f64, nd: usize, top: usize, n: usize, k: usize, t: f64, seed: u64) -> f64 {
        let pp = FockParams::new(q, nd, top).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_level(&pp, &mut rng, n);
        let b = random_level(&pp, &mut rng, k);
        let d = PsiMap::new(&a, &b, t, Route::Direct).unwrap();
        let p = PsiMap::new(&a, &b, t, Route::Partition).unwrap();
        let r = PsiMap::new(&a, &b, t, Route::Rstar).unwrap();
        let through = d.lossless_through().unwrap();
        assert!(p.lossless_through().unwrap() >= through);
        let scale = d.realized().max_abs(through).max(1.0);
        d.realized().max_abs_diff(p.realized(), through).max(d.realized().max_abs_diff(r.realized(), through)) / scale
    }

    #[test]
    fn routes_agree() {
        assert!(route_triangle(0.5, 2, 6, 2, 2, 0.0, 1) < 1e-8);
        assert!(route_triangle(-0.3, 2, 5, 1, 2, 0.2, 2) < 1e-8);
        assert!(route_triangle(0.6, 3, 4, 1, 1, 0.0, 3) < 1e-8);
        assert!(route_triangle(-0.6, 2, 6, 2, 1, 0.0, 4) < 1e-8);
    }

    #[test]
    fn psi_map_matches_literal_element() {
        let pp = FockParams::new(0.4, 2, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_level(&pp, &mut rng, 2);
        let b = random_level(&pp, &mut rng, 1);
        let x = random_level(&pp, &mut rng, 3);
        let psi = PsiMap::new(&a, &b, 0.3, Route::Partition).unwrap();
        let lit = psi_element(&a, &b, &x, 0.3).unwrap();
        assert!(psi.apply(&x).unwrap().max_abs_diff(&lit) < 1e-10);
    }

    #[test]
    fn level_norm_examples() {
        let pp = FockParams::new(0.5, 2, 8).unwrap();
        let e1 = FockVector::basis(&pp, &[0]).unwrap();
        let psi = PsiMap::new(&e1, &e1, 0.0, Route::Partition).unwrap();
        for m in 0..=8 {
            assert!((psi.level_norm(m).unwrap() - 0.5_f64.powi(m as i32)).abs() < 1e-12);
        }
        let z = FockParams::new(0.0, 2, 6).unwrap();
        let e1 = FockVector::basis(&z, &[0]).unwrap();
        let psi = PsiMap::new(&e1, &e1, 0.0, Route::Direct).unwrap();
        for m in 2..=psi.lossless_through().unwrap() {
            assert!(psi.level_norm(m).unwrap() < 1e-14);
        }
        let pp = FockParams::new(0.4, 2, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_level(&pp, &mut rng, 1);
        let b = random_level(&pp, &mut rng, 2);
        let p0 = PsiMap::new(&a, &b, 0.0, Route::Partition).unwrap();
        let pt = PsiMap::new(&a, &b, 0.5, Route::Partition).unwrap();
        for m in 3..=p0.lossless_through().unwrap() {
            let bound = (-0.5 * (m as f64 - 3.0)).exp() * p0.level_norm(m).unwrap();
            assert!(pt.level_norm(m).unwrap() <= bound + 1e-12);
        }
    }

    #[test]
    fn diagnostic_reports() {
        let pp = FockParams::new(0.5, 2, 8).unwrap();
        let e1 = FockVector::basis(&pp, &[0]).unwrap();
        let psi = PsiMap::new(&e1, &e1, 0.0, Route::Partition).unwrap();
        let rep = schatten_diagnostic(&psi, 2.0).unwrap();
        assert_eq!(rep.rows.len(), 7);
        assert!((rep.slope.unwrap() - 0.5_f64.ln()).abs() < 1e-9);
        assert!((rep.fitted_c.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(rep.verdict, Verdict::Convergent);
        assert_eq!(schatten_diagnostic(&psi, 0.5).unwrap_err().code(), "BAD_EXPONENT");
        for (q, v) in [(0.4, Verdict::Convergent), (0.6, Verdict::Divergent)] {
            let pp = FockParams::new(q, 4, 4).unwrap();
            let e1 = FockVector::basis(&pp, &[0]).unwrap();
            let rep = schatten_diagnostic(&PsiMap::new(&e1, &e1, 0.0, Route::Partition).unwrap(), 2.0).unwrap();
            assert_eq!(rep.verdict, v);
            assert!((rep.ratio - 2.0 * q).abs() < 0.1);
        }
    }

    #[test]
    fn threshold_flips_near_prediction() {
        let qs: Vec<f64> = (0..9).map(|i| 0.30 + 0.05 * i as f64).collect();
        let rep = threshold_scan(4, 2.0, 4, &qs, &[0], &[0], Route::Partition).unwrap();
        assert_eq!(rep.flips, 1);
        let (lo, hi) = rep.flip_bracket.unwrap();
        assert!(lo >= 0.45 - 1e-12 && hi <= 0.55 + 1e-12);
    }
}
