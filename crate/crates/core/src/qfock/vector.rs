use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{QError, Result};
use crate::numerics::{c, CVec, C64};

use super::params::{index, FockParams};

/// Level-graded vector on the truncated Fock space.
///
/// `degree` is the structural top level (may exceed the truncation M); only
/// levels `0..=min(degree, M)` are stored. Levels `< known` are exact; a
/// vector is complete when every level up to `degree` is stored and exact.
#[derive(Clone, Debug)]
pub struct FockVector {
    params: FockParams,
    levels: Vec<CVec>,
    degree: usize,
    known: usize,
}

impl FockVector {
    pub fn zeros(params: &FockParams, degree: usize) -> Self {
        let top = degree.min(params.max_level());
        let levels = (0..=top).map(|m| CVec::zeros(params.level_dim(m))).collect();
        Self { params: params.clone(), levels, degree, known: top + 1 }
    }

    pub fn vacuum(params: &FockParams) -> Self {
        let mut v = Self::zeros(params, 0);
        v.levels[0][0] = c(1.0);
        v
    }

    /// Pure tensor at one level. Errors if the level is above M.
    pub fn from_level(params: &FockParams, m: usize, coeffs: CVec) -> Result<Self> {
        params.check_level(m)?;
        if coeffs.len() != params.level_dim(m) {
            return Err(QError::ShapeMismatch(format!(
                "level {m} needs {} coefficients, got {}",
                params.level_dim(m),
                coeffs.len()
            )));
        }
        let mut v = Self::zeros(params, m);
        v.levels[m] = coeffs;
        Ok(v)
    }

    /// e_{i₁}⊗…⊗e_{i_m} with 0-based basis indices.
    pub fn basis(params: &FockParams, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= params.dim()) {
            return Err(QError::ShapeMismatch(format!(
                "basis index {bad} outside dimension {}",
                params.dim()
            )));
        }
        let m = idx.len();
        params.check_level(m)?;
        let mut v = Self::zeros(params, m);
        v.levels[m][index(idx, params.dim())] = c(1.0);
        Ok(v)
    }

    /// Builds a vector from explicit parts; used by the algebra routines.
    pub(crate) fn from_parts(params: &FockParams, levels: Vec<CVec>, degree: usize, known: usize) -> Self {
        let top = degree.min(params.max_level());
        debug_assert_eq!(levels.len(), top + 1);
        Self { params: params.clone(), levels, degree, known: known.min(top + 1) }
    }

    pub fn params(&self) -> &FockParams {
        &self.params
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn known(&self) -> usize {
        self.known
    }
    /// Highest stored level.
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }
    pub fn is_complete(&self) -> bool {
        self.known > self.degree
    }
    /// Exact-level horizon for combination rules; complete vectors never limit.
    pub fn effective_known(&self) -> usize {
        if self.is_complete() {
            usize::MAX
        } else {
            self.known
        }
    }

    pub fn level(&self, m: usize) -> Option<&CVec> {
        self.levels.get(m)
    }

    pub fn levels(&self) -> &[CVec] {
        &self.levels
    }

    pub fn level_mut(&mut self, m: usize) -> &mut CVec {
        &mut self.levels[m]
    }

    /// Errors unless levels `0..=m` are exact.
    pub fn require_exact_through(&self, m: usize, what: &str) -> Result<()> {
        if m < self.known || (m > self.degree && self.is_complete()) {
            Ok(())
        } else {
            Err(QError::TruncationLoss(format!(
                "{what}: level {m} needed but exact only below {} (degree {}, M={})",
                self.known,
                self.degree,
                self.params.max_level()
            )))
        }
    }

    pub fn require_complete(&self, what: &str) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(QError::TruncationLoss(format!(
                "{what}: degree {} not exactly represented (exact below {}, M={})",
                self.degree,
                self.known,
                self.params.max_level()
            )))
        }
    }

    /// Lowers the structural degree to the highest nonzero level if the
    /// vector is complete.
    pub fn trimmed(mut self) -> Self {
        if !self.is_complete() {
            return self;
        }
        while self.levels.len() > 1 && self.levels.last().is_some_and(|v| v.iter().all(|z| *z == C64::new(0.0, 0.0))) {
            self.levels.pop();
        }
        self.degree = self.levels.len() - 1;
        self.known = self.degree + 1;
        self
    }

    fn combine(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.params.check_same(&other.params)?;
        let degree = self.degree.max(other.degree);
        let top = degree.min(self.params.max_level());
        let levels = (0..=top)
            .map(|m| {
                let d = self.params.level_dim(m);
                let zero = C64::new(0.0, 0.0);
                CVec::from_iterator(
                    d,
                    (0..d).map(|i| {
                        let a = self.levels.get(m).map_or(zero, |v| v[i]);
                        let b = other.levels.get(m).map_or(zero, |v| v[i]);
                        f(a, b)
                    }),
                )
            })
            .collect();
        let known = self.effective_known().min(other.effective_known()).min(top + 1);
        Ok(Self::from_parts(&self.params, levels, degree, known))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    /// self + s·other
    pub fn axpy(&self, s: C64, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut v = self.clone();
        for l in &mut v.levels {
            *l *= s;
        }
        v
    }

    /// Conjugation I: reverse tensor order and conjugate entries.
    pub fn conj(&self) -> Self {
        let mut v = self.clone();
        for (m, l) in v.levels.iter_mut().enumerate() {
            let rev = self.params.reverse_map(m).expect("stored level within M");
            let src = &self.levels[m];
            for (i, z) in l.iter_mut().enumerate() {
                *z = src[rev[i]].conj();
            }
        }
        v
    }

    /// Number operator: level m scaled by m.
    pub fn number(&self) -> Self {
        self.level_map(|m| m as f64)
    }

    /// Multiplies level m by f(m).
    pub fn level_map(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut v = self.clone();
        for (m, l) in v.levels.iter_mut().enumerate() {
            *l *= c(f(m));
        }
        v
    }

    /// Component at level m as a standalone vector.
    pub fn component(&self, m: usize) -> Result<Self> {
        self.require_exact_through(m, "component")?;
        match self.levels.get(m) {
            Some(l) => Self::from_level(&self.params, m, l.clone()),
            None => Ok(Self::zeros(&self.params, 0)),
        }
    }

    /// Vacuum coefficient.
    pub fn tau(&self) -> C64 {
        self.levels[0][0]
    }

    /// ⟨u, v⟩_q = Σ_m v_mᴴ P_m u_m, linear in `self`.
    pub fn q_inner(&self, other: &Self) -> Result<C64> {
        self.params.check_same(&other.params)?;
        let top = self.degree.min(other.degree);
        self.require_exact_through(top, "inner product")?;
        other.require_exact_through(top, "inner product")?;
        let mut acc = C64::new(0.0, 0.0);
        for m in 0..=top.min(self.top()).min(other.top()) {
            let p = self.params.gram(m)?;
            acc += (p * &self.levels[m]).dot(&other.levels[m].conjugate());
        }
        Ok(acc)
    }

    pub fn q_norm(&self) -> Result<f64> {
        Ok(self.q_inner(self)?.re.max(0.0).sqrt())
    }

    pub fn plain_norm(&self) -> f64 {
        self.levels.iter().map(|l| l.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let top = self.top().max(other.top());
        let mut d = 0.0_f64;
        for m in 0..=top {
            let dim = self.params.level_dim(m);
            for i in 0..dim {
                let a = self.levels.get(m).map_or(C64::new(0.0, 0.0), |v| v[i]);
                let b = other.levels.get(m).map_or(C64::new(0.0, 0.0), |v| v[i]);
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.levels.iter().flat_map(|l| l.iter()).fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Flat coefficient list over the stored levels.
    pub fn flatten(&self) -> Vec<C64> {
        self.levels.iter().flat_map(|l| l.iter().copied()).collect()
    }

    /// JSON form `{level: [[re, im], …]}`.
    pub fn to_json(&self) -> SerialVector {
        SerialVector(
            self.levels
                .iter()
                .enumerate()
                .map(|(m, l)| (m, l.iter().map(|z| [z.re, z.im]).collect()))
                .collect(),
        )
    }

    pub fn from_json(params: &FockParams, s: &SerialVector) -> Result<Self> {
        let degree = s.0.keys().copied().max().unwrap_or(0);
        params.check_level(degree)?;
        let mut v = Self::zeros(params, degree);
        for (&m, coeffs) in &s.0 {
            if coeffs.len() != params.level_dim(m) {
                return Err(QError::ShapeMismatch(format!("level {m} has {} entries", coeffs.len())));
            }
            for (i, [re, im]) in coeffs.iter().enumerate() {
                v.levels[m][i] = C64::new(*re, *im);
            }
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SerialVector(pub BTreeMap<usize, Vec<[f64; 2]>>);
