use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{QError, Result};
use crate::numerics::{self, c, CMat};
use crate::partitions::inversions_perm;

use super::shuffle::ShuffleTable;

/// Largest level for which P_q^m is built by the explicit sum over S_m.
pub const MAX_LEVEL_BUDGET: usize = 8;
/// Largest top-level tensor dimension N^M accepted.
pub const MAX_TOP_DIM: usize = 4096;

/// Truncated q-Fock space parameters plus a shared, lazily filled cache of
/// Gram matrices and shuffle tables.
#[derive(Clone)]
pub struct FockParams {
    q: f64,
    dim: usize,
    max_level: usize,
    cache: Arc<GramCache>,
}

impl PartialEq for FockParams {
    fn eq(&self, other: &Self) -> bool {
        self.q.to_bits() == other.q.to_bits()
            && self.dim == other.dim
            && self.max_level == other.max_level
    }
}

impl fmt::Debug for FockParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockParams")
            .field("q", &self.q)
            .field("dim", &self.dim)
            .field("max_level", &self.max_level)
            .finish()
    }
}

#[derive(Default)]
struct LevelCache {
    gram: OnceLock<CMat>,
    gram_inv: OnceLock<CMat>,
    gram_sqrt: OnceLock<CMat>,
    gram_inv_sqrt: OnceLock<CMat>,
    pairing: OnceLock<CMat>,
    reverse: OnceLock<Vec<usize>>,
}

struct GramCache {
    levels: Vec<LevelCache>,
    shuffles: RwLock<HashMap<Vec<usize>, Arc<ShuffleTable>>>,
}

impl FockParams {
    pub fn new(q: f64, dim: usize, max_level: usize) -> Result<Self> {
        if !q.is_finite() || q.abs() >= 1.0 {
            return Err(QError::InvalidParams(format!("q = {q} must satisfy |q| < 1")));
        }
        if dim == 0 {
            return Err(QError::InvalidParams("dim must be at least 1".into()));
        }
        if max_level > MAX_LEVEL_BUDGET {
            return Err(QError::LevelTooLarge(format!(
                "max level {max_level} exceeds budget {MAX_LEVEL_BUDGET}"
            )));
        }
        let top = (dim as u128).pow(max_level as u32);
        if top > MAX_TOP_DIM as u128 {
            return Err(QError::LevelTooLarge(format!(
                "N^M = {dim}^{max_level} exceeds budget {MAX_TOP_DIM}"
            )));
        }
        let levels = (0..=max_level).map(|_| LevelCache::default()).collect();
        Ok(Self {
            q,
            dim,
            max_level,
            cache: Arc::new(GramCache { levels, shuffles: RwLock::new(HashMap::new()) }),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Same space with a different truncation level (fresh cache).
    pub fn with_max_level(&self, max_level: usize) -> Result<Self> {
        Self::new(self.q, self.dim, max_level)
    }

    pub fn check_same(&self, other: &FockParams) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(QError::ParamMismatch)
        }
    }

    pub fn check_level(&self, m: usize) -> Result<()> {
        if m > self.max_level {
            Err(QError::LevelTooLarge(format!("level {m} > max level {}", self.max_level)))
        } else {
            Ok(())
        }
    }

    /// N^m.
    pub fn level_dim(&self, m: usize) -> usize {
        self.dim.pow(m as u32)
    }

    pub fn total_dim(&self) -> usize {
        (0..=self.max_level).map(|m| self.level_dim(m)).sum()
    }

    /// q-Gram matrix P_q^m in the standard tensor basis.
    pub fn gram(&self, m: usize) -> Result<&CMat> {
        self.check_level(m)?;
        Ok(self.cache.levels[m].gram.get_or_init(|| build_symmetrizer(self.q, self.dim, m)))
    }

    pub fn gram_inv(&self, m: usize) -> Result<&CMat> {
        let g = self.gram(m)?;
        let lc = &self.cache.levels[m];
        if let Some(x) = lc.gram_inv.get() {
            return Ok(x);
        }
        let inv = numerics::pinv(g, None)?;
        Ok(lc.gram_inv.get_or_init(|| inv))
    }

    pub fn gram_sqrt(&self, m: usize) -> Result<&CMat> {
        let g = self.gram(m)?;
        let lc = &self.cache.levels[m];
        if let Some(x) = lc.gram_sqrt.get() {
            return Ok(x);
        }
        let s = numerics::psd_sqrt(g, None)?;
        Ok(lc.gram_sqrt.get_or_init(|| s))
    }

    pub fn gram_inv_sqrt(&self, m: usize) -> Result<&CMat> {
        let g = self.gram(m)?;
        let lc = &self.cache.levels[m];
        if let Some(x) = lc.gram_inv_sqrt.get() {
            return Ok(x);
        }
        let s = numerics::psd_inv_sqrt(g, None)?;
        Ok(lc.gram_inv_sqrt.get_or_init(|| s))
    }

    /// Bilinear pairing matrix M_j with m_j(v⊗w) = vᵀ M_j w = ⟨Iv, w⟩_q.
    pub fn pairing_matrix(&self, j: usize) -> Result<&CMat> {
        let g = self.gram(j)?;
        let rev = self.reverse_map(j)?;
        Ok(self.cache.levels[j].pairing.get_or_init(|| {
            let n = g.nrows();
            CMat::from_fn(n, n, |a, b| g[(rev[a], b)])
        }))
    }

    /// Index of the reversed multi-index at level m.
    pub fn reverse_map(&self, m: usize) -> Result<&[usize]> {
        self.check_level(m)?;
        Ok(self.cache.levels[m].reverse.get_or_init(|| {
            (0..self.level_dim(m))
                .map(|i| {
                    let mut d = digits(i, self.dim, m);
                    d.reverse();
                    index(&d, self.dim)
                })
                .collect()
        }))
    }

    /// Shuffle table for an ordered split of level Σparts into the given parts.
    pub fn shuffle(&self, parts: &[usize]) -> Result<Arc<ShuffleTable>> {
        let m: usize = parts.iter().sum();
        self.check_level(m)?;
        if let Some(t) = self.cache.shuffles.read().expect("shuffle cache poisoned").get(parts) {
            return Ok(t.clone());
        }
        let table = Arc::new(ShuffleTable::new(self.q, self.dim, parts));
        let mut w = self.cache.shuffles.write().expect("shuffle cache poisoned");
        Ok(w.entry(parts.to_vec()).or_insert(table).clone())
    }
}

/// Base-N digits of `idx` at level m, most significant first.
pub fn digits(mut idx: usize, n: usize, m: usize) -> Vec<usize> {
    let mut d = vec![0; m];
    for k in (0..m).rev() {
        d[k] = idx % n;
        idx /= n;
    }
    d
}

pub fn index(d: &[usize], n: usize) -> usize {
    d.iter().fold(0, |acc, &x| acc * n + x)
}

fn for_each_permutation(m: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..m).collect();
    fn rec(k: usize, perm: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k == perm.len() {
            f(perm);
            return;
        }
        for j in k..perm.len() {
            perm.swap(k, j);
            rec(k + 1, perm, f);
            perm.swap(k, j);
        }
    }
    rec(0, &mut perm, &mut f);
}

/// P e_J = Σ_σ q^{i(σ)} e_{J∘σ}, by the explicit sum over S_m.
fn build_symmetrizer(q: f64, n: usize, m: usize) -> CMat {
    let dim = n.pow(m as u32);
    let mut p = vec![0.0_f64; dim * dim];
    let all: Vec<Vec<usize>> = (0..dim).map(|j| digits(j, n, m)).collect();
    let mut permuted = vec![0usize; m];
    for_each_permutation(m, |sigma| {
        let w = q.powi(inversions_perm(sigma) as i32);
        if w == 0.0 {
            return;
        }
        for (col, d) in all.iter().enumerate() {
            for (i, &s) in sigma.iter().enumerate() {
                permuted[i] = d[s];
            }
            let row = index(&permuted, n);
            p[row * dim + col] += w;
        }
    });
    CMat::from_row_iterator(dim, dim, p.into_iter().map(c))
}
