//! Fourier multipliers on the circle: heat and Poisson semigroups, their
//! gradient maps Ψ^{e_l,e_m}, the gradient module over ℤ and the maps S, T.
//!
//! Coefficients are exact integers; floats appear only in norms.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::numerics::{hermitian_eigvals, CMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TorusKind {
    /// Δ e_k = k² e_k.
    Heat,
    /// Generator Δ^{1/2} with symbol |k|.
    Poisson,
}

impl TorusKind {
    pub fn symbol(self, k: i64) -> i64 {
        match self {
            TorusKind::Heat => k * k,
            TorusKind::Poisson => k.abs(),
        }
    }
}

impl FromStr for TorusKind {
    type Err = QError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(TorusKind::Heat),
            "poisson" => Ok(TorusKind::Poisson),
            other => Err(QError::InvalidParams(format!("unknown torus kind '{other}'"))),
        }
    }
}

impl fmt::Display for TorusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TorusKind::Heat => "heat",
            TorusKind::Poisson => "poisson",
        })
    }
}

/// Frequencies −K..=K.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqWindow {
    k: i64,
}

impl FreqWindow {
    pub fn new(k: i64) -> Result<Self> {
        if k < 1 {
            return Err(QError::InvalidParams(format!("window must be positive, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn contains(&self, freq: i64) -> bool {
        freq.abs() <= self.k
    }

    pub fn check(&self, freq: i64) -> Result<()> {
        if self.contains(freq) {
            Ok(())
        } else {
            Err(QError::WindowOverflow { freq, window: self.k })
        }
    }

    pub fn freqs(&self) -> impl Iterator<Item = i64> {
        -self.k..=self.k
    }
}

/// −½(ψ(l+k+m) + ψ(k) − ψ(l+k) − ψ(k+m)); the bracket is always even.
pub fn closed_form(kind: TorusKind, l: i64, m: i64, k: i64) -> i64 {
    let s = |x| kind.symbol(x);
    let twice = s(l + k + m) + s(k) - s(l + k) - s(k + m);
    debug_assert!(twice % 2 == 0);
    -twice / 2
}

/// The map e_k ↦ c(k) e_{l+k+m} on the k whose image stays in the window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TorusPsi {
    pub kind: TorusKind,
    pub l: i64,
    pub m: i64,
    pub window: i64,
    /// (k, coefficient) in increasing k.
    pub coeffs: Vec<(i64, i64)>,
}

impl TorusPsi {
    pub fn coefficient(&self, k: i64) -> Result<i64> {
        let w = FreqWindow::new(self.window)?;
        w.check(k)?;
        w.check(self.l + k + self.m)?;
        let i = self.coeffs.binary_search_by_key(&k, |c| c.0).expect("represented frequency");
        Ok(self.coeffs[i].1)
    }

    pub fn nonzero(&self) -> Vec<(i64, i64)> {
        self.coeffs.iter().copied().filter(|c| c.1 != 0).collect()
    }
}

fn build(kind: TorusKind, l: i64, m: i64, window: FreqWindow, f: impl Fn(i64) -> Result<i64>) -> Result<TorusPsi> {
    window.check(l)?;
    window.check(m)?;
    let coeffs = window
        .freqs()
        .filter(|k| window.contains(l + k + m))
        .map(|k| Ok((k, f(k)?)))
        .collect::<Result<_>>()?;
    Ok(TorusPsi { kind, l, m, window: window.k(), coeffs })
}

/// Heat semigroup: coefficient −lm for every k.
pub fn heat_psi(l: i64, m: i64, window: FreqWindow) -> Result<TorusPsi> {
    build(TorusKind::Heat, l, m, window, |k| Ok(closed_form(TorusKind::Heat, l, m, k)))
}

/// Poisson semigroup: supported on |k| < |l| + |m|.
pub fn poisson_psi(l: i64, m: i64, window: FreqWindow) -> Result<TorusPsi> {
    build(TorusKind::Poisson, l, m, window, |k| Ok(closed_form(TorusKind::Poisson, l, m, k)))
}

type Sparse = BTreeMap<i64, i64>;

fn shift(v: &Sparse, by: i64) -> Sparse {
    v.iter().map(|(&k, &c)| (k + by, c)).collect()
}

fn diag(kind: TorusKind, v: &Sparse) -> Sparse {
    v.iter().map(|(&k, &c)| (k, kind.symbol(k) * c)).collect()
}

fn combine(parts: &[(i64, &Sparse)]) -> Sparse {
    let mut out = Sparse::new();
    for (s, p) in parts {
        for (&k, &c) in p.iter() {
            *out.entry(k).or_insert(0) += s * c;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Ψ by composing multiplication and multiplier operators on finitely
/// supported vectors: 2Ψ = −(Δ L R + L R Δ − R Δ L − L Δ R).
pub fn generic_psi(kind: TorusKind, l: i64, m: i64, window: FreqWindow) -> Result<TorusPsi> {
    build(kind, l, m, window, |k| {
        let x: Sparse = [(k, 1)].into_iter().collect();
        let lr = shift(&shift(&x, m), l);
        let t1 = diag(kind, &lr);
        let t2 = shift(&shift(&diag(kind, &x), m), l);
        let t3 = shift(&diag(kind, &shift(&x, l)), m);
        let t4 = shift(&diag(kind, &shift(&x, m)), l);
        let twice = combine(&[(1, &t1), (1, &t2), (-1, &t3), (-1, &t4)]);
        let target = l + k + m;
        window.check(target)?;
        let v = twice.get(&target).copied().unwrap_or(0);
        if twice.keys().any(|&f| f != target) {
            return Err(QError::ShapeMismatch("multiplier composition left its frequency".into()));
        }
        Ok(-v / 2)
    })
}

/// Σ cᵢ e_{aᵢ} ⊗_∇ e_{cᵢ} in the gradient module of ℤ.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TorusGradient {
    pub terms: Vec<(i64, i64, f64)>,
}

/// 2⟨e_a⊗e_c, e_b⊗e_d⟩ = (ψ(a) + ψ(b) − ψ(a−b))·[a + c = b + d].
pub fn twice_gram_entry(kind: TorusKind, (a, c): (i64, i64), (b, d): (i64, i64)) -> i64 {
    if a + c != b + d {
        return 0;
    }
    kind.symbol(a) + kind.symbol(b) - kind.symbol(a - b)
}

impl TorusGradient {
    pub fn term(a: i64, c: i64, coeff: f64) -> Self {
        Self { terms: vec![(a, c, coeff)] }
    }

    pub fn add(mut self, other: &Self) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn scale(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.2 *= s;
        }
        self
    }

    /// e_l·(e_a⊗e_c) = e_{l+a}⊗e_c − e_l⊗e_{a+c}.
    pub fn left(&self, l: i64) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for &(a, c, w) in &self.terms {
            terms.push((l + a, c, w));
            terms.push((l, a + c, -w));
        }
        Self { terms }
    }

    /// (e_a⊗e_c)·e_m = e_a⊗e_{c+m}.
    pub fn right(&self, m: i64) -> Self {
        Self { terms: self.terms.iter().map(|&(a, c, w)| (a, c + m, w)).collect() }
    }

    pub fn inner(&self, other: &Self, kind: TorusKind) -> f64 {
        let mut s = 0.0;
        for &(a, c, u) in &self.terms {
            for &(b, d, v) in &other.terms {
                let g = twice_gram_entry(kind, (a, c), (b, d));
                if g != 0 {
                    s += u * v * g as f64;
                }
            }
        }
        0.5 * s
    }

    pub fn norm(&self, kind: TorusKind) -> f64 {
        self.inner(self, kind).max(0.0).sqrt()
    }
}

/// S(e_k) = ψ(k)^{−1/2} e_k⊗e_0, and S(e_0) = e_1⊗e_K.
pub fn s_image(kind: TorusKind, k: i64, window: FreqWindow) -> Result<TorusGradient> {
    window.check(k)?;
    if k == 0 {
        return Ok(TorusGradient::term(1, window.k(), 1.0));
    }
    Ok(TorusGradient::term(k, 0, (kind.symbol(k) as f64).powf(-0.5)))
}

/// T(e_k) = e_l S(e_k) e_m − S(e_{l+k+m}).
pub fn t_image(kind: TorusKind, l: i64, m: i64, k: i64, window: FreqWindow) -> Result<TorusGradient> {
    let s = s_image(kind, k, window)?;
    let moved = s.left(l).right(m);
    Ok(moved.add(&s_image(kind, l + k + m, window)?.scale(-1.0)))
}

/// Max deviation of the S Gram over the window from the identity.
pub fn s_isometry_defect(kind: TorusKind, window: FreqWindow) -> Result<f64> {
    let imgs: Vec<TorusGradient> = window.freqs().map(|k| s_image(kind, k, window)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, u) in imgs.iter().enumerate() {
        for (j, v) in imgs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((u.inner(v, kind) - target).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusDecayRow {
    /// Eigenvalue index j; the block is span{e_j, e_{−j}}.
    pub j: i64,
    pub block_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorusDecay {
    pub kind: TorusKind,
    pub l: i64,
    pub m: i64,
    pub window: i64,
    pub rows: Vec<TorusDecayRow>,
    /// max j·‖T P_j‖ over j ∈ [K/2, K].
    pub fitted_constant: f64,
    /// Block norms nonincreasing for j ≥ |l| + |m|.
    pub monotone_tail: bool,
}

impl TorusDecay {
    /// max over j ∈ [lo, hi] of j^power·‖T P_j‖.
    pub fn weighted_sup(&self, lo: i64, hi: i64, power: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.j >= lo && r.j <= hi)
            .map(|r| (r.j as f64).powf(power) * r.block_norm)
            .fold(0.0, f64::max)
    }
}

/// ‖T_{e_l,e_m}‖ on each eigenspace of the generator, j = 0..=K. Images
/// live in the padded window K + |l| + |m|.
pub fn t_decay(kind: TorusKind, l: i64, m: i64, window: FreqWindow) -> Result<TorusDecay> {
    let k = window.k();
    if k < 4 * (l.abs() + m.abs()) {
        return Err(QError::WindowOverflow { freq: 4 * (l.abs() + m.abs()), window: k });
    }
    let padded = FreqWindow::new(k + l.abs() + m.abs())?;
    let rows = (0..=k)
        .map(|j| {
            let freqs: Vec<i64> = if j == 0 { vec![0] } else { vec![j, -j] };
            let imgs: Vec<TorusGradient> =
                freqs.iter().map(|&f| t_image(kind, l, m, f, padded)).collect::<Result<_>>()?;
            let g = CMat::from_fn(imgs.len(), imgs.len(), |r, s| C64::new(imgs[s].inner(&imgs[r], kind), 0.0));
            let top = hermitian_eigvals(&g)?.iter().copied().fold(0.0, f64::max);
            Ok(TorusDecayRow { j, block_norm: top.sqrt() })
        })
        .collect::<Result<Vec<_>>>()?;
    let start = l.abs() + m.abs();
    let monotone_tail = rows
        .windows(2)
        .filter(|w| w[0].j >= start)
        .all(|w| w[1].block_norm <= w[0].block_norm * (1.0 + 1e-12));
    let mut out = TorusDecay { kind, l, m, window: k, rows, fitted_constant: 0.0, monotone_tail };
    out.fitted_constant = out.weighted_sup(k / 2, k, 1.0);
    Ok(out)
}

/// Poisson T-block decay table.
pub fn poisson_t_decay(l: i64, m: i64, window: FreqWindow) -> Result<TorusDecay> {
    t_decay(TorusKind::Poisson, l, m, window)
}

/// Largest |a+b| outside [||a|−|b||, |a|+|b|] for products e_a e_b with
/// |a|, |b| ≤ K; zero when the generator is filtered.
pub fn filtration_defect(window: FreqWindow) -> i64 {
    let mut worst = 0;
    for a in window.freqs() {
        for b in window.freqs() {
            let p = (a + b).abs();
            let (lo, hi) = ((a.abs() - b.abs()).abs(), a.abs() + b.abs());
            if p < lo {
                worst = worst.max(lo - p);
            } else if p > hi {
                worst = worst.max(p - hi);
            }
        }
    }
    worst
}
