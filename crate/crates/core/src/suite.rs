//! Experiment configuration, the verification harness and the report types
//! behind the command-line runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao::{self, AoDecay, FilteredModel, ModelKind, ModelSpec};
use crate::cohomology::{self as coh, Cochain};
use crate::error::{QError, Result};
use crate::gradient::{
    gamma_symbol, schatten_diagnostic, threshold_scan, DecayReport, GradientVector, Nabla2Vector, PsiMap, Route,
    ThresholdReport,
};
use crate::numerics::{hermitian_eigvals, max_abs, CMat, CVec, C64};
use crate::partitions::{enumerate_partitions, PairPartition, SegmentShape};
use crate::qfock::{annihilation, creation, r_star, r_star3, FockParams, FockVector, MAX_LEVEL_BUDGET};
use crate::torus::{self, FreqWindow, TorusKind};
use crate::wick::{product, product_direct, product_partition, product_triple, wick};

pub const SCHEMA_VERSION: &str = "qgrad-report/1";

/// Largest |q| accepted by the runner; beyond it the Gram matrices are too
/// ill-conditioned for the default tolerances.
pub const MAX_ABS_Q: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub q: f64,
    pub dim: usize,
    /// None resolves to a command-dependent default.
    pub max_level: Option<usize>,
    pub p: f64,
    /// 1-based basis indices, one per tensor factor.
    pub word_a: Vec<usize>,
    pub word_b: Vec<usize>,
    pub word_x: Vec<usize>,
    pub word_y: Vec<usize>,
    pub window: i64,
    /// lo:hi:step
    pub grid: String,
    pub seed: u64,
    /// Replaces every verification tolerance.
    pub tol: Option<f64>,
    pub route: Route,
    /// Torus semigroup: heat or poisson.
    pub kind: String,
    /// AO model: ou or poisson.
    pub model: String,
    pub l: i64,
    pub m: i64,
    /// Samples per identity in `verify`.
    pub tuples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            q: 0.5,
            dim: 2,
            max_level: None,
            p: 2.0,
            word_a: vec![1],
            word_b: vec![1],
            word_x: vec![1],
            word_y: vec![1],
            window: 8,
            grid: "0.30:0.70:0.05".into(),
            seed: 42,
            tol: None,
            route: Route::Partition,
            kind: "poisson".into(),
            model: "ou".into(),
            l: 1,
            m: 1,
            tuples: 20,
        }
    }
}

/// Top-level dimension used when no max level is given; the hard limit is
/// MAX_TOP_DIM, reachable with an explicit level.
pub const DEFAULT_TOP_DIM: usize = 512;

/// Highest level ≤ `cap` with N^M ≤ DEFAULT_TOP_DIM.
pub fn level_budget(dim: usize, cap: usize) -> usize {
    let mut m = 0;
    while m < cap.min(MAX_LEVEL_BUDGET) && (dim as u128).pow(m as u32 + 1) <= DEFAULT_TOP_DIM as u128 {
        m += 1;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Decay,
    Threshold,
    AoDecay,
    Torus,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(QError::InvalidParams(s));
        if !self.q.is_finite() || self.q.abs() > MAX_ABS_Q {
            return bad(format!("|q| = {} outside the supported range |q| <= {MAX_ABS_Q}", self.q.abs()));
        }
        if !(1..=5).contains(&self.dim) {
            return bad(format!("dim = {} outside 1..=5", self.dim));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return bad(format!("p = {} (need p >= 1)", self.p));
        }
        for (name, w) in [("a", &self.word_a), ("b", &self.word_b), ("x", &self.word_x), ("y", &self.word_y)] {
            if let Some(&i) = w.iter().find(|&&i| i == 0 || i > self.dim) {
                return bad(format!("word {name}: index {i} outside 1..={}", self.dim));
            }
        }
        if self.window < 1 {
            return bad(format!("window = {} (need >= 1)", self.window));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("tol = {t} (need a positive number)"));
            }
        }
        if self.tuples == 0 {
            return bad("tuples must be positive".into());
        }
        self.grid_points()?;
        self.kind.parse::<TorusKind>()?;
        self.model.parse::<ModelKind>()?;
        if let Some(m) = self.max_level {
            FockParams::new(self.q, self.dim, m)?;
        }
        Ok(())
    }

    pub fn resolved_max_level(&self, cmd: Command) -> usize {
        self.max_level.unwrap_or(match cmd {
            Command::Verify => level_budget(self.dim, 6),
            _ => level_budget(self.dim, 8),
        })
    }

    pub fn params(&self, cmd: Command) -> Result<FockParams> {
        FockParams::new(self.q, self.dim, self.resolved_max_level(cmd))
    }

    /// Grid points lo, lo+step, … ≤ hi, rounded to 12 decimals.
    pub fn grid_points(&self) -> Result<Vec<f64>> {
        let parts: Vec<&str> = self.grid.split(':').collect();
        let err = || QError::InvalidParams(format!("grid '{}' is not lo:hi:step", self.grid));
        if parts.len() != 3 {
            return Err(err());
        }
        let v: Vec<f64> = parts.iter().map(|s| s.trim().parse::<f64>().map_err(|_| err())).collect::<Result<_>>()?;
        let (lo, hi, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(err());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        if n > 10_000 {
            return Err(QError::InvalidParams(format!("grid '{}' has too many points", self.grid)));
        }
        let pts: Vec<f64> = (0..=n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect();
        if let Some(q) = pts.iter().find(|q| q.abs() > MAX_ABS_Q) {
            return Err(QError::InvalidParams(format!("grid point {q} outside |q| <= {MAX_ABS_Q}")));
        }
        Ok(pts)
    }
}

fn zero_based(w: &[usize]) -> Vec<usize> {
    w.iter().map(|i| i - 1).collect()
}

/// 15 significant digits, no locale, `inf`/`nan` spelled out.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.14e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("exponent digits");
    if (-5..15).contains(&e) {
        let s = format!("{:.*}", (14 - e) as usize, x);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let m = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{m}e{e}")
    }
}

/// x rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.14e}", x).parse().expect("float")
}

/// A table with a fixed header; cells are already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

// ---------------------------------------------------------------- verify

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub identity: String,
    pub tuple_id: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sampling {
    pub seed: u64,
    pub tuples: usize,
    pub word_level: usize,
    /// Truncation used for the gradient-module and cocycle checks.
    pub nabla_max_level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub max_level: usize,
    pub sampling: Sampling,
    pub rows: Vec<CheckRow>,
    pub failed_checks: Vec<String>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn table(&self) -> Table {
        Table {
            header: vec!["identity", "tuple_id", "residual", "tolerance", "pass"],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.identity.clone(),
                        r.tuple_id.to_string(),
                        fmt_num(r.residual),
                        fmt_num(r.tolerance),
                        r.pass.to_string(),
                    ]
                })
                .collect(),
        }
    }
}

/// Random complex element on levels 0..=top.
pub fn random_element(params: &FockParams, rng: &mut impl Rng, top: usize) -> FockVector {
    coh::random_element(params, rng, top)
}

/// Random complex tensor of level n.
pub fn random_level(params: &FockParams, rng: &mut impl Rng, n: usize) -> FockVector {
    let v = CVec::from_fn(params.level_dim(n), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    FockVector::from_level(params, n, v).expect("level within truncation")
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Number of partial matchings of k points: T(k) = T(k−1) + (k−1)T(k−2).
pub fn telephone(k: usize) -> usize {
    let (mut a, mut b) = (1usize, 1usize);
    for i in 1..k {
        let c = b + i * a;
        a = b;
        b = c;
    }
    b
}

/// The partition pictured with c = 2, d = 5.
pub fn figure_partition() -> PairPartition {
    PairPartition {
        pairs: vec![(2, 7), (4, 9), (8, 10)],
        singletons: vec![1, 3, 5, 6, 11],
        shape: SegmentShape::new(&[4, 4, 3]).expect("shape"),
    }
}

fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(1.0)
}

/// max over n+k ≤ M of the factorization residual P^{n+k} vs (Pⁿ⊗Pᵏ)R*.
pub fn rstar_factorization_residual(params: &FockParams) -> Result<f64> {
    let top = params.max_level();
    let mut worst: f64 = 0.0;
    for n in 0..=top {
        for k in 0..=top - n {
            let rhs = params.gram(n)?.kronecker(params.gram(k)?) * r_star(params, n, k)?;
            worst = worst.max(rel_diff(&rhs, params.gram(n + k)?));
        }
    }
    Ok(worst)
}

/// max over n+k+l ≤ M of the disagreement between the two splitting orders
/// and R*_{n,k,l}.
pub fn rstar_splitting_residual(params: &FockParams) -> Result<f64> {
    let top = params.max_level();
    let id = |m: usize| CMat::identity(params.level_dim(m), params.level_dim(m));
    let mut worst: f64 = 0.0;
    for n in 0..=top {
        for k in 0..=top - n {
            for l in 0..=top - n - k {
                let r3 = r_star3(params, n, k, l)?;
                let left = r_star(params, n, k)?.kronecker(&id(l)) * r_star(params, n + k, l)?;
                let right = id(n).kronecker(&r_star(params, k, l)?) * r_star(params, n, k + l)?;
                worst = worst.max(rel_diff(&left, &right)).max(rel_diff(&left, &r3));
            }
        }
    }
    Ok(worst)
}

pub fn min_gram_eigenvalue(params: &FockParams, m: usize) -> Result<f64> {
    Ok(hermitian_eigvals(params.gram(m)?)?[0])
}

/// |⟨l(ξ)u, v⟩ − ⟨u, l*(ξ)v⟩| relative, u of level m, v of level m+1.
pub fn adjointness_residual(params: &FockParams, rng: &mut impl Rng, m: usize) -> Result<f64> {
    let xi = CVec::from_fn(params.dim(), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let u = random_level(params, rng, m);
    let v = random_level(params, rng, m + 1);
    let lu = creation(params, &xi)?.apply(&u)?;
    let lsv = annihilation(params, &xi)?.apply(&v)?;
    let a = lu.q_inner(&v)?;
    let b = u.q_inner(&lsv)?;
    Ok((a - b).norm() / a.norm().max(1.0))
}

/// Relative disagreement of the partition, triple and direct products of
/// three random homogeneous words of the given levels.
pub fn wick_triangle_residual(params: &FockParams, rng: &mut impl Rng, levels: [usize; 3]) -> Result<f64> {
    let w: Vec<FockVector> = levels.iter().map(|&n| random_level(params, rng, n)).collect();
    let part = product_partition(&[&w[0], &w[1], &w[2]])?;
    let triple = product_triple(&w[0], &w[1], &w[2])?;
    let words: Vec<_> = w.iter().map(|v| wick(params, v)).collect::<Result<_>>()?;
    let direct = product_direct(&[&words[0], &words[1], &words[2]])?;
    let scale = direct.max_abs().max(1.0);
    Ok(part.max_abs_diff(&direct).max(triple.max_abs_diff(&direct)) / scale)
}

/// Levels (n₁, n₂, n₃) with sum ≤ top, drawn uniformly by rejection.
pub fn random_levels(rng: &mut impl Rng, top: usize, each: usize) -> [usize; 3] {
    loop {
        let l = [rng.gen_range(0..=each), rng.gen_range(0..=each), rng.gen_range(0..=each)];
        if l.iter().sum::<usize>() <= top {
            return l;
        }
    }
}

/// Disagreement of the three Ψ routes on the direct route's lossless levels.
pub fn psi_triangle_residual(a: &FockVector, b: &FockVector, t: f64) -> Result<f64> {
    let d = PsiMap::new(a, b, t, Route::Direct)?;
    let p = PsiMap::new(a, b, t, Route::Partition)?;
    let r = PsiMap::new(a, b, t, Route::Rstar)?;
    let through = d
        .lossless_through()
        .ok_or_else(|| QError::TruncationLoss("Ψ has no lossless level".into()))?;
    let scale = d.realized().max_abs(through).max(1.0);
    Ok(d.realized().max_abs_diff(p.realized(), through).max(d.realized().max_abs_diff(r.realized(), through)) / scale)
}

/// −⟨Γ(a,a)ξ, ξ⟩ relative to ‖Γ(a,a)ξ‖‖ξ‖; negative means positive.
pub fn gamma_positivity_residual(a: &FockVector, xi: &FockVector) -> Result<f64> {
    let g = gamma_symbol(a, a)?;
    let gx = product(&g, xi)?;
    let v = gx.q_inner(xi)?;
    let scale = (gx.q_norm()? * xi.q_norm()?).max(1e-300);
    Ok((-v.re).max(v.im.abs()) / scale)
}

/// |⟨x(a⊗ξ)y, b⊗η⟩_∇ − ⟨Ψ^{b*,a}(x)ξy, η⟩_q|.
pub fn pairing_identity_residual(w: &[FockVector; 6]) -> Result<f64> {
    let [x, y, a, xi, b, eta] = w;
    let lhs = GradientVector::term(a, xi)?
        .left_action(x)?
        .right_action(y)?
        .inner(&GradientVector::term(b, eta)?)?;
    let psi = PsiMap::new(&b.conj(), a, 0.0, Route::Partition)?;
    let rhs = product(&psi.apply(x)?, &product(xi, y)?)?.q_inner(eta)?;
    Ok((lhs - rhs).norm() / rhs.norm().max(1.0))
}

/// Two-fold iterate: |⟨x·(a₀⊗a₁⊗a₂)·y, b₀⊗b₁⊗b₂⟩ −
/// ⟨Ψ^{b₁*,a₁}(Ψ^{b₀*,a₀}(x))·a₂y, b₂⟩|.
pub fn two_fold_residual(x: &FockVector, y: &FockVector, a: &[FockVector; 3], b: &[FockVector; 3]) -> Result<f64> {
    let alpha = Nabla2Vector::term(&a[0], &a[1], &a[2])?.left_action(x)?.right_action(y)?;
    let beta = Nabla2Vector::term(&b[0], &b[1], &b[2])?;
    let lhs = alpha.inner(&beta)?;
    let inner = PsiMap::new(&b[0].conj(), &a[0], 0.0, Route::Partition)?.apply(x)?;
    let outer = PsiMap::new(&b[1].conj(), &a[1], 0.0, Route::Partition)?.apply(&inner)?;
    let rhs = product(&outer, &product(&a[2], y)?)?.q_inner(&b[2])?;
    Ok((lhs - rhs).norm() / rhs.norm().max(1.0))
}

/// Parameters for the gradient-module checks: the same q and N at the
/// largest truncation ≤ 8 within budget.
pub fn nabla_params(q: f64, dim: usize) -> Result<FockParams> {
    FockParams::new(q, dim, level_budget(dim, 8))
}

fn word_level_for(p: &FockParams) -> usize {
    if p.max_level() >= 8 {
        2
    } else {
        1
    }
}

/// One sampled instance of each cocycle identity, as (identity, residual).
pub fn cohomology_case(params: &FockParams, seed: u64, id: usize, word_level: usize) -> Result<Vec<(&'static str, f64)>> {
    let mut rng = rng_for(seed, 0xC0 + id as u64);
    // arities 0..=2 when words have level 2 at M = 8, lower otherwise
    let max_arity = if word_level >= 2 { 2 } else { (params.max_level() / 2).saturating_sub(1).min(2) };
    let arity = id % (max_arity + 1);
    let f = coh::random_cochain(params, arity, seed.wrapping_add(id as u64));
    let t = coh::random_tuple(params, &mut rng, arity + 2, word_level);
    let d2 = coh::d_squared_residual(&f, &t)?;
    let gd = coh::gd_dg_residual(&f, &t)?;
    let ab = coh::random_tuple(params, &mut rng, 3, word_level);
    let leib = coh::leibniz_residual(&ab[0], &ab[1])?;
    let pn = coh::partial_norm_residual(&ab[2])?;
    let d2p = coh::d_partial_residual(&coh::partial_2(params), &ab)?;
    let o = random_element(params, &mut rng, word_level);
    let (al, be) = (C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), C64::new(rng.gen_range(-1.0..1.0), 0.5));
    let p2: Cochain<Nabla2Vector> = coh::partial_2(params);
    let ml = coh::multilinearity_residual(&p2, &ab[..2], id % 2, &o, al, be)?;
    Ok(vec![
        ("d_squared", d2),
        ("gd_plus_dg", gd),
        ("leibniz", leib),
        ("partial_norm", pn),
        ("d2_partial2", d2p),
        ("multilinearity", ml),
    ])
}

struct Checker {
    tol: Option<f64>,
}

impl Checker {
    fn row(&self, identity: &str, tuple_id: usize, residual: f64, default_tol: f64) -> CheckRow {
        let tolerance = self.tol.unwrap_or(default_tol);
        CheckRow { identity: identity.into(), tuple_id, residual, tolerance, pass: residual < tolerance }
    }
}

type Group<'a> = Box<dyn Fn() -> Result<Vec<CheckRow>> + Send + Sync + 'a>;

pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let params = cfg.params(Command::Verify)?;
    let np = nabla_params(cfg.q, cfg.dim)?;
    let word_level = word_level_for(&np);
    let ck = Checker { tol: cfg.tol };
    let seed = cfg.seed;
    let top = params.max_level();
    let k = cfg.tuples;
    let groups: Vec<Group> = vec![
        Box::new(|| {
            let mut rows: Vec<CheckRow> = (1..=8)
                .map(|n| {
                    let sh = SegmentShape::new(&vec![1; n]).expect("shape");
                    let got = enumerate_partitions(&sh).len();
                    ck.row("partition_count", n, got.abs_diff(telephone(n)) as f64, 0.5)
                })
                .collect();
            let c = figure_partition().crossings();
            let r = c.c.abs_diff(2) + c.d.abs_diff(5) + c.cr.abs_diff(7);
            rows.push(ck.row("partition_figure", 0, r as f64, 0.5));
            Ok(rows)
        }),
        Box::new(|| {
            (0..=top)
                .map(|m| Ok(ck.row("gram_positivity", m, -min_gram_eigenvalue(&params, m)?, 0.0)))
                .collect()
        }),
        Box::new(|| {
            Ok(vec![
                ck.row("rstar_factorization", 0, rstar_factorization_residual(&params)?, 1e-11),
                ck.row("rstar_splitting", 0, rstar_splitting_residual(&params)?, 1e-11),
            ])
        }),
        Box::new(|| {
            let mut rng = rng_for(seed, 1);
            (0..top)
                .map(|m| Ok(ck.row("annihilation_adjoint", m, adjointness_residual(&params, &mut rng, m)?, 1e-12)))
                .collect()
        }),
        Box::new(|| {
            (0..k)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_for(seed, 100 + i as u64);
                    let lv = random_levels(&mut rng, top.min(6), 3);
                    Ok(ck.row("wick_route_triangle", i, wick_triangle_residual(&params, &mut rng, lv)?, 1e-9))
                })
                .collect()
        }),
        Box::new(|| {
            (0..k.min(6))
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_for(seed, 200 + i as u64);
                    let cap = 2.min(top.saturating_sub(2) / 2).max(1);
                    let (na, nb) = (rng.gen_range(1..=cap), rng.gen_range(1..=cap));
                    let a = random_level(&params, &mut rng, na);
                    let b = random_level(&params, &mut rng, nb);
                    let t = if i % 2 == 0 { 0.0 } else { 0.25 };
                    Ok(ck.row("psi_route_triangle", i, psi_triangle_residual(&a, &b, t)?, 1e-8))
                })
                .collect()
        }),
        Box::new(|| {
            (0..k)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_for(seed, 300 + i as u64);
                    let a = random_element(&np, &mut rng, word_level);
                    let xi = random_element(&np, &mut rng, word_level);
                    Ok(ck.row("gamma_positivity", i, gamma_positivity_residual(&a, &xi)?, 1e-9))
                })
                .collect()
        }),
        Box::new(|| {
            (0..k)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_for(seed, 400 + i as u64);
                    let w: [FockVector; 6] = std::array::from_fn(|_| random_element(&np, &mut rng, 1));
                    Ok(ck.row("pairing_identity", i, pairing_identity_residual(&w)?, 1e-8))
                })
                .collect()
        }),
        Box::new(|| {
            if np.max_level() < 7 {
                return Ok(Vec::new());
            }
            (0..k.min(5))
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_for(seed, 500 + i as u64);
                    let x = random_element(&np, &mut rng, 1);
                    let y = random_element(&np, &mut rng, 1);
                    let a: [FockVector; 3] = std::array::from_fn(|_| random_element(&np, &mut rng, 1));
                    let b: [FockVector; 3] = std::array::from_fn(|_| random_element(&np, &mut rng, 1));
                    Ok(ck.row("two_fold_pairing", i, two_fold_residual(&x, &y, &a, &b)?, 1e-8))
                })
                .collect()
        }),
        Box::new(|| {
            let cases: Vec<Vec<(&'static str, f64)>> =
                (0..k).into_par_iter().map(|i| cohomology_case(&np, seed, i, word_level)).collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for name in ["d_squared", "gd_plus_dg", "leibniz", "partial_norm", "d2_partial2", "multilinearity"] {
                for (i, c) in cases.iter().enumerate() {
                    let r = c.iter().find(|e| e.0 == name).expect("identity").1;
                    let tol = if name == "multilinearity" { 1e-9 } else { 1e-8 };
                    rows.push(ck.row(name, i, r, tol));
                }
            }
            Ok(rows)
        }),
        Box::new(|| {
            if top < 3 {
                return Ok(Vec::new());
            }
            let model = ao::build_model(ModelSpec::Ou(params.clone()))?;
            let r = ao::s_isometry_check(&model)?;
            Ok(vec![
                ck.row("s_isometry", 0, r.max_deviation, 1e-8),
                ck.row("s_unit_orthogonality", 0, r.unit_overlap, 1e-8),
                ck.row("s_basis_independence", 0, r.basis_dependence, 1e-9),
            ])
        }),
        Box::new(|| {
            let model = ao::build_model(ModelSpec::Ou(params.clone()))?;
            let mut rows = Vec::new();
            let mut id = 0;
            for s in 0..=top.min(5) {
                for m in 0..=s {
                    let r = ao::filtration_check(&model, m, s - m)?;
                    rows.push(ck.row("filtration", id, r.out_of_band.max(r.wrong_parity), 1e-9));
                    id += 1;
                }
            }
            Ok(rows)
        }),
    ];
    let rows: Vec<Vec<CheckRow>> = groups.par_iter().map(|g| g()).collect::<Result<_>>()?;
    let rows: Vec<CheckRow> = rows.into_iter().flatten().collect();
    let mut failed_checks: Vec<String> = Vec::new();
    for r in rows.iter().filter(|r| !r.pass) {
        if !failed_checks.contains(&r.identity) {
            failed_checks.push(r.identity.clone());
        }
    }
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        config: cfg.clone(),
        max_level: top,
        sampling: Sampling { seed, tuples: k, word_level, nabla_max_level: np.max_level() },
        pass: failed_checks.is_empty(),
        failed_checks,
        rows,
    })
}

// ---------------------------------------------------------------- decay

#[derive(Clone, Debug, Serialize)]
pub struct DecayOutput {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub report: DecayReport,
}

impl DecayOutput {
    pub fn table(&self) -> Table {
        Table {
            header: vec!["m", "level_norm", "sp_bound", "partial_sum", "ratio"],
            rows: self
                .report
                .rows
                .iter()
                .map(|r| {
                    vec![r.m.to_string(), fmt_num(r.level_norm), fmt_num(r.sp_bound), fmt_num(r.partial_sum), fmt_num(r.ratio)]
                })
                .collect(),
        }
    }
}

pub fn run_decay(cfg: &ExperimentConfig) -> Result<DecayOutput> {
    cfg.validate()?;
    let params = cfg.params(Command::Decay)?;
    let a = FockVector::basis(&params, &zero_based(&cfg.word_a))?;
    let b = FockVector::basis(&params, &zero_based(&cfg.word_b))?;
    let psi = PsiMap::new(&a, &b, 0.0, cfg.route)?;
    let report = schatten_diagnostic(&psi, cfg.p)?.with_truncated_schatten(&psi)?;
    Ok(DecayOutput { schema_version: SCHEMA_VERSION, command: "decay", config: cfg.clone(), report })
}

// ---------------------------------------------------------------- threshold

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdOutput {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub report: ThresholdReport,
}

impl ThresholdOutput {
    pub fn table(&self) -> Table {
        Table {
            header: vec!["q", "ratio", "verdict"],
            rows: self
                .report
                .rows
                .iter()
                .map(|r| vec![fmt_num(r.q), fmt_num(r.ratio), r.verdict.to_string()])
                .collect(),
        }
    }
}

pub fn run_threshold(cfg: &ExperimentConfig) -> Result<ThresholdOutput> {
    cfg.validate()?;
    let qs = cfg.grid_points()?;
    let m = cfg.resolved_max_level(Command::Threshold);
    let report = threshold_scan(cfg.dim, cfg.p, m, &qs, &zero_based(&cfg.word_a), &zero_based(&cfg.word_b), cfg.route)?;
    Ok(ThresholdOutput { schema_version: SCHEMA_VERSION, command: "threshold", config: cfg.clone(), report })
}

// ---------------------------------------------------------------- ao-decay

#[derive(Clone, Debug, Serialize)]
pub struct AoVerdict {
    pub head: f64,
    pub tail: f64,
    pub trend_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AoOutput {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub model: ModelKind,
    pub decay: AoDecay,
    pub verdict: AoVerdict,
}

impl AoOutput {
    pub fn table(&self) -> Table {
        Table {
            header: vec!["n", "lambda_n", "block_norm"],
            rows: self
                .decay
                .rows
                .iter()
                .map(|r| vec![r.n.to_string(), fmt_num(r.lambda_n), fmt_num(r.block_norm)])
                .collect(),
        }
    }
}

pub fn run_ao(cfg: &ExperimentConfig) -> Result<AoOutput> {
    cfg.validate()?;
    let kind: ModelKind = cfg.model.parse()?;
    let decay = match kind {
        ModelKind::OuQFock => {
            let params = cfg.params(Command::AoDecay)?;
            let model: FilteredModel = ao::build_model(ModelSpec::Ou(params.clone()))?;
            let x = FockVector::basis(&params, &zero_based(&cfg.word_x))?;
            let y = FockVector::basis(&params, &zero_based(&cfg.word_y))?;
            ao::ou_t_decay(&model, &x, &y)?
        }
        ModelKind::PoissonZ => {
            let w = FreqWindow::new(cfg.window)?;
            ao::build_model(ModelSpec::Poisson(w))?;
            ao::poisson_ao_decay(w, cfg.l, cfg.m)?
        }
    };
    let verdict = AoVerdict { head: decay.head, tail: decay.tail, trend_pass: decay.trend_pass };
    Ok(AoOutput { schema_version: SCHEMA_VERSION, command: "ao-decay", config: cfg.clone(), model: kind, decay, verdict })
}

// ---------------------------------------------------------------- torus

#[derive(Clone, Debug, Serialize)]
pub struct TorusOutput {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub kind: TorusKind,
    pub l: i64,
    pub m: i64,
    pub window: i64,
    pub coefficients: Vec<(i64, i64)>,
    pub nonzero_count: usize,
    /// 2(|l|+|m|)−1 for Poisson, None for heat.
    pub rank_bound: Option<i64>,
    /// Residual of the generic multiplier-composition route (exact).
    pub generic_route_mismatches: usize,
}

impl TorusOutput {
    pub fn table(&self) -> Table {
        Table {
            header: vec!["k", "coefficient"],
            rows: self.coefficients.iter().map(|(k, c)| vec![k.to_string(), c.to_string()]).collect(),
        }
    }
}

pub fn run_torus(cfg: &ExperimentConfig) -> Result<TorusOutput> {
    cfg.validate()?;
    let kind: TorusKind = cfg.kind.parse()?;
    let w = FreqWindow::new(cfg.window)?;
    let map = match kind {
        TorusKind::Heat => torus::heat_psi(cfg.l, cfg.m, w)?,
        TorusKind::Poisson => torus::poisson_psi(cfg.l, cfg.m, w)?,
    };
    let generic = torus::generic_psi(kind, cfg.l, cfg.m, w)?;
    let mismatches = map.coeffs.iter().zip(&generic.coeffs).filter(|(a, b)| a != b).count();
    let rank_bound = match kind {
        TorusKind::Heat => None,
        TorusKind::Poisson => Some((2 * (cfg.l.abs() + cfg.m.abs()) - 1).max(0)),
    };
    Ok(TorusOutput {
        schema_version: SCHEMA_VERSION,
        command: "torus",
        config: cfg.clone(),
        kind,
        l: cfg.l,
        m: cfg.m,
        window: cfg.window,
        nonzero_count: map.nonzero().len(),
        coefficients: map.coeffs,
        rank_bound,
        generic_route_mismatches: mismatches,
    })
}
