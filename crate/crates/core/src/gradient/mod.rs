//! Ornstein-Uhlenbeck generator Δ, the semigroup Φ_t, the gradient form Γ
//! and the gradient maps Ψ^{a,b}_t.
//!
//! Algebra elements are represented by their symbols aΩ (complete
//! FockVectors); products go through the two-word formula.

mod nabla;
mod psi;

pub use nabla::{GradientVector, Nabla2Vector, COMPRESSION_DROP};
pub use psi::{
    level_norm_profile, schatten_diagnostic, threshold_scan, DecayReport, DecayRow, PsiMap, Route,
    ThresholdReport, ThresholdRow, Verdict, RATIO_MARGIN,
};

use crate::error::Result;
use crate::numerics::{c, C64};
use crate::qfock::{FockOperator, FockParams, FockVector};
use crate::wick::{product, wick, WickWord};

/// Δ as the diagonal operator m·Id on level m.
pub fn number_operator(params: &FockParams) -> FockOperator {
    FockOperator::diagonal(params, |m| c(m as f64))
}

/// Φ_t = e^{−tΔ}.
pub fn semigroup(params: &FockParams, t: f64) -> FockOperator {
    FockOperator::diagonal(params, |m| c((-t * m as f64).exp()))
}

/// Δ on an element given by its symbol.
pub fn delta(a: &FockVector) -> FockVector {
    a.number()
}

/// Δ on an operator: re-quantizes Δ(aΩ).
pub fn delta_on_element(a: &FockOperator) -> Result<WickWord> {
    a.require_column(0, "delta_on_element")?;
    let v = a.apply(&FockVector::vacuum(a.params()))?;
    wick(a.params(), &v.trimmed().number())
}

/// Symbol of Γ(x,y) = ½(Δ(y)*x + y*Δ(x) − Δ(y*x)).
pub fn gamma_symbol(x: &FockVector, y: &FockVector) -> Result<FockVector> {
    let ys = y.conj();
    let t1 = product(&delta(&ys), x)?;
    let t2 = product(&ys, &delta(x))?;
    let t3 = delta(&product(&ys, x)?);
    let s = t1.add(&t2)?.sub(&t3)?.scale(c(0.5));
    s.require_complete("gamma")?;
    Ok(s)
}

pub fn gamma(x: &FockVector, y: &FockVector) -> Result<WickWord> {
    let s = gamma_symbol(x, y)?;
    wick(x.params(), &s)
}

/// Ψ^{a,b}_t(x) = −½Φ_t(Δ(axb) + aΔ(x)b − Δ(ax)b − aΔ(xb)), evaluated
/// literally on symbols.
pub fn psi_element(a: &FockVector, b: &FockVector, x: &FockVector, t: f64) -> Result<FockVector> {
    let xb = product(x, b)?;
    let ax = product(a, x)?;
    let axb = product(a, &xb)?;
    let s1 = delta(&axb);
    let s2 = product(a, &product(&delta(x), b)?)?;
    let s3 = product(&delta(&ax), b)?;
    let s4 = product(a, &delta(&xb))?;
    let s = s1.add(&s2)?.sub(&s3)?.sub(&s4)?;
    s.require_complete("psi element")?;
    Ok(s.level_map(|m| (-t * m as f64).exp()).scale(c(-0.5)))
}

/// ⟨Δv, v⟩_q.
pub fn dirichlet_form(v: &FockVector) -> Result<C64> {
    delta(v).q_inner(v)
}
