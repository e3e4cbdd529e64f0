use std::collections::BTreeMap;

use crate::error::{QError, Result};
use crate::numerics::{c, CMat, CVec, C64};

use super::params::FockParams;
use super::vector::FockVector;

/// Level-block operator in the standard tensor basis.
///
/// Block `(s, t)` maps level s to level t; missing blocks are zero. Truncation
/// bookkeeping: every source column `s <= exact_through` has all its target
/// blocks present and exact; when `blocks_exact` holds, each stored block is
/// exact even if its column lost targets above M.
#[derive(Clone, Debug)]
pub struct FockOperator {
    params: FockParams,
    blocks: BTreeMap<(usize, usize), CMat>,
    up: usize,
    down: usize,
    exact_through: i64,
    blocks_exact: bool,
}

impl FockOperator {
    pub fn new(params: &FockParams, up: usize, down: usize, exact_through: i64, blocks_exact: bool) -> Self {
        Self {
            params: params.clone(),
            blocks: BTreeMap::new(),
            up,
            down,
            exact_through: exact_through.min(params.max_level() as i64),
            blocks_exact,
        }
    }

    pub fn zero(params: &FockParams) -> Self {
        Self::new(params, 0, 0, params.max_level() as i64, true)
    }

    pub fn identity(params: &FockParams) -> Self {
        Self::diagonal(params, |_| c(1.0))
    }

    /// Block-diagonal operator f(m)·Id on level m.
    pub fn diagonal(params: &FockParams, f: impl Fn(usize) -> C64) -> Self {
        let mut op = Self::zero(params);
        for m in 0..=params.max_level() {
            let d = params.level_dim(m);
            op.blocks.insert((m, m), CMat::identity(d, d) * f(m));
        }
        op
    }

    pub fn params(&self) -> &FockParams {
        &self.params
    }
    pub fn up(&self) -> usize {
        self.up
    }
    pub fn down(&self) -> usize {
        self.down
    }
    pub fn exact_through(&self) -> i64 {
        self.exact_through
    }
    pub fn blocks_exact(&self) -> bool {
        self.blocks_exact
    }
    pub fn blocks(&self) -> &BTreeMap<(usize, usize), CMat> {
        &self.blocks
    }

    /// Adds into block (s → t).
    pub fn add_block(&mut self, s: usize, t: usize, m: CMat) {
        debug_assert_eq!(m.shape(), (self.params.level_dim(t), self.params.level_dim(s)));
        match self.blocks.get_mut(&(s, t)) {
            Some(b) => *b += m,
            None => {
                self.blocks.insert((s, t), m);
            }
        }
    }

    pub fn block(&self, s: usize, t: usize) -> Option<&CMat> {
        self.blocks.get(&(s, t))
    }

    /// Dense block or zeros.
    pub fn block_or_zero(&self, s: usize, t: usize) -> CMat {
        self.blocks
            .get(&(s, t))
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.params.level_dim(t), self.params.level_dim(s)))
    }

    /// Whether source column s is fully represented.
    pub fn column_exact(&self, s: usize) -> bool {
        (s as i64) <= self.exact_through
    }

    pub fn require_column(&self, s: usize, what: &str) -> Result<()> {
        if self.column_exact(s) {
            Ok(())
        } else {
            Err(QError::TruncationLoss(format!(
                "{what}: source level {s} beyond lossless region (exact through {}, M={})",
                self.exact_through,
                self.params.max_level()
            )))
        }
    }

    fn block_is_exact(&self, s: usize) -> bool {
        self.blocks_exact || self.column_exact(s)
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        self.params.check_same(v.params())?;
        let degree = v.degree() + self.up;
        let top = degree.min(self.params.max_level());
        let mut levels: Vec<CVec> = (0..=top).map(|t| CVec::zeros(self.params.level_dim(t))).collect();
        for (&(s, t), b) in &self.blocks {
            if t <= top {
                if let Some(x) = v.level(s) {
                    levels[t] += b * x;
                }
            }
        }
        let mut known = top + 1;
        for (t, _) in levels.iter().enumerate() {
            let lo = t.saturating_sub(self.up);
            let hi = (t + self.down).min(v.degree());
            let ok = (lo..=hi).all(|s| s < v.known() && self.block_is_exact(s));
            if !ok {
                known = t;
                break;
            }
        }
        Ok(FockVector::from_parts(&self.params, levels, degree, known))
    }

    /// self ∘ other.
    pub fn compose(&self, other: &FockOperator) -> Result<FockOperator> {
        self.params.check_same(&other.params)?;
        let e = other.exact_through.min(self.exact_through - other.up as i64);
        let trivial = other.up == 0 || (self.up == 0 && self.down == 0);
        let mut out = FockOperator::new(
            &self.params,
            self.up + other.up,
            self.down + other.down,
            e,
            self.blocks_exact && other.blocks_exact && trivial,
        );
        for (&(s, u), b) in &other.blocks {
            for (&(u2, t), a) in self.blocks.range((u, 0)..=(u, usize::MAX)) {
                debug_assert_eq!(u, u2);
                out.add_block(s, t, a * b);
            }
        }
        Ok(out)
    }

    fn combine(&self, other: &FockOperator, s: C64) -> Result<FockOperator> {
        self.params.check_same(&other.params)?;
        let mut out = FockOperator::new(
            &self.params,
            self.up.max(other.up),
            self.down.max(other.down),
            self.exact_through.min(other.exact_through),
            self.blocks_exact && other.blocks_exact,
        );
        out.blocks = self.blocks.clone();
        for (&(a, b), m) in &other.blocks {
            out.add_block(a, b, m * s);
        }
        Ok(out)
    }

    pub fn add(&self, other: &FockOperator) -> Result<FockOperator> {
        self.combine(other, c(1.0))
    }

    pub fn sub(&self, other: &FockOperator) -> Result<FockOperator> {
        self.combine(other, c(-1.0))
    }

    pub fn scale(&self, s: C64) -> FockOperator {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            *b *= s;
        }
        out
    }

    /// Adjoint for the q-inner product: block (t → s) = P_s⁻¹ Bᴴ P_t.
    pub fn adjoint(&self) -> Result<FockOperator> {
        let e = if self.blocks_exact {
            self.params.max_level() as i64 - self.down as i64
        } else {
            self.exact_through - self.down as i64
        };
        let mut out = FockOperator::new(&self.params, self.down, self.up, e, self.blocks_exact);
        for (&(s, t), b) in &self.blocks {
            let m = self.params.gram_inv(s)? * b.adjoint() * self.params.gram(t)?;
            out.add_block(t, s, m);
        }
        Ok(out)
    }

    /// Largest entrywise difference over blocks with source ≤ `through`.
    pub fn max_abs_diff(&self, other: &FockOperator, through: usize) -> f64 {
        let keys: std::collections::BTreeSet<_> =
            self.blocks.keys().chain(other.blocks.keys()).copied().collect();
        let mut d = 0.0_f64;
        for (s, t) in keys {
            if s > through {
                continue;
            }
            let diff = self.block_or_zero(s, t) - other.block_or_zero(s, t);
            d = d.max(diff.iter().fold(0.0, |m, z| m.max(z.norm())));
        }
        d
    }

    pub fn max_abs(&self, through: usize) -> f64 {
        self.blocks
            .iter()
            .filter(|((s, _), _)| *s <= through)
            .flat_map(|(_, b)| b.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Dense matrix over levels `0..=through` in both source and target.
    pub fn to_dense(&self, through: usize) -> CMat {
        let offs: Vec<usize> = (0..=through + 1)
            .scan(0, |acc, m| {
                let o = *acc;
                if m <= through {
                    *acc += self.params.level_dim(m);
                }
                Some(o)
            })
            .collect();
        let n = offs[through + 1];
        let mut out = CMat::zeros(n, n);
        for (&(s, t), b) in &self.blocks {
            if s <= through && t <= through {
                out.view_mut((offs[t], offs[s]), b.shape()).copy_from(b);
            }
        }
        out
    }
}
