//! Multi-indices, total-degree truncations and coefficient tensors.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

/// Multi-index α ∈ ℕ^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

/// Largest |α| for which α! is computed as an exact integer.
pub const EXACT_FACTORIAL_MAX: u32 = 34;

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, j: usize) -> Self {
        let mut v = vec![0; d];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn abs(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Exact α! for |α| ≤ 34, `None` beyond.
    pub fn factorial_exact(&self) -> Option<u128> {
        if self.abs() > EXACT_FACTORIAL_MAX {
            return None;
        }
        Some(self.0.iter().map(|&a| factorial_u128(a)).product())
    }

    pub fn ln_factorial(&self) -> f64 {
        match self.factorial_exact() {
            Some(f) => (f as f64).ln(),
            None => self.0.iter().map(|&a| ln_factorial(a)).sum(),
        }
    }

    pub fn factorial(&self) -> f64 {
        match self.factorial_exact() {
            Some(f) => f as f64,
            None => self.ln_factorial().exp(),
        }
    }

    /// Componentwise γ ≤ α.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Product of binomials C(α_j, γ_j).
    pub fn binom(&self, gamma: &MultiIndex) -> f64 {
        self.0
            .iter()
            .zip(&gamma.0)
            .map(|(&a, &g)| binomial(a as u64, g as u64))
            .product()
    }

    /// Concatenation (α, β) used by the two-block kernel layout.
    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MultiIndex(v)
    }

    pub fn split(&self, d_first: usize) -> (MultiIndex, MultiIndex) {
        (
            MultiIndex(self.0[..d_first].to_vec()),
            MultiIndex(self.0[d_first..].to_vec()),
        )
    }
}

pub fn factorial_u128(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// ln n!, exact integer route when it fits.
pub fn ln_factorial(n: u32) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        (factorial_u128(n) as f64).ln()
    } else {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

fn binom_usize(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Total-degree truncation {α ∈ ℕ^d : |α| ≤ N}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TruncationSpec {
    pub d: usize,
    pub n: usize,
}

impl TruncationSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(TruncationSpec { d, n })
    }

    pub fn len(&self) -> usize {
        binom_usize(self.n + self.d, self.d)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = vec![0u32; self.d];
        for shell in 0..=self.n {
            push_shell(&mut out, &mut cur, 0, shell as u32);
        }
        out
    }

    /// Position of α in the graded-lex enumeration, `None` if |α| > N.
    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.dim() != self.d {
            return None;
        }
        let n = alpha.abs() as usize;
        if n > self.n {
            return None;
        }
        let d = self.d;
        // indices in lower shells
        let mut rank = if n == 0 { 0 } else { binom_usize(n - 1 + d, d) };
        let mut rem = n;
        for j in 0..d - 1 {
            let a = alpha.0[j] as usize;
            let parts = d - j - 1;
            // compositions with a larger leading entry come first
            for k in (a + 1)..=rem {
                rank += binom_usize(rem - k + parts - 1, parts - 1);
            }
            rem -= a;
        }
        Some(rank)
    }

    /// Start offset of shell |α| = n.
    pub fn shell_start(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            binom_usize(n - 1 + self.d, self.d)
        }
    }
}

fn push_shell(out: &mut Vec<MultiIndex>, cur: &mut [u32], j: usize, rem: u32) {
    if j == cur.len() - 1 {
        cur[j] = rem;
        out.push(MultiIndex(cur.to_vec()));
        return;
    }
    for a in (0..=rem).rev() {
        cur[j] = a;
        push_shell(out, cur, j + 1, rem - a);
    }
    cur[j] = 0;
}

pub fn enumerate_indices(trunc: &TruncationSpec) -> Result<Vec<MultiIndex>> {
    if trunc.d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok(trunc.indices())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Hermite,
    Fock,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Hermite => "hermite",
            Basis::Fock => "fock",
        }
    }
}

/// Truncated coefficient tensor in graded-lex order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffArray {
    pub trunc: TruncationSpec,
    pub values: Vec<C64>,
    pub basis: Basis,
}

pub enum CoeffOp<'a> {
    Add(&'a CoeffArray),
    Scale(C64),
    IndexMap(&'a dyn Fn(&MultiIndex, C64) -> C64),
}

impl CoeffArray {
    pub fn zeros(trunc: TruncationSpec, basis: Basis) -> Self {
        CoeffArray {
            values: vec![C64::new(0.0, 0.0); trunc.len()],
            trunc,
            basis,
        }
    }

    pub fn from_fn(
        trunc: TruncationSpec,
        basis: Basis,
        mut f: impl FnMut(&MultiIndex) -> C64,
    ) -> Self {
        let values = trunc.indices().iter().map(&mut f).collect();
        CoeffArray {
            trunc,
            values,
            basis,
        }
    }

    pub fn delta(trunc: TruncationSpec, basis: Basis, alpha: &MultiIndex) -> Result<Self> {
        let mut c = Self::zeros(trunc, basis);
        let k = trunc
            .index_of(alpha)
            .ok_or_else(|| Error::Invalid(format!("{:?} outside truncation", alpha.0)))?;
        c.values[k] = C64::new(1.0, 0.0);
        Ok(c)
    }

    pub fn d(&self) -> usize {
        self.trunc.d
    }

    pub fn n(&self) -> usize {
        self.trunc.n
    }

    /// Coefficient at α; exact zero outside the truncation.
    pub fn get(&self, alpha: &MultiIndex) -> C64 {
        match self.trunc.index_of(alpha) {
            Some(k) => self.values[k],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, alpha: &MultiIndex, v: C64) -> Result<()> {
        let k = self
            .trunc
            .index_of(alpha)
            .ok_or_else(|| Error::Invalid(format!("{:?} outside truncation", alpha.0)))?;
        self.values[k] = v;
        Ok(())
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }

    pub fn add(&self, other: &CoeffArray) -> Result<CoeffArray> {
        coeff_binop(self, CoeffOp::Add(other))
    }

    pub fn scale(&self, s: C64) -> CoeffArray {
        CoeffArray {
            trunc: self.trunc,
            values: self.values.iter().map(|v| v * s).collect(),
            basis: self.basis,
        }
    }

    pub fn map_indexed(&self, f: &dyn Fn(&MultiIndex, C64) -> C64) -> CoeffArray {
        let values = self
            .trunc
            .indices()
            .iter()
            .zip(&self.values)
            .map(|(a, &v)| f(a, v))
            .collect();
        CoeffArray {
            trunc: self.trunc,
            values,
            basis: self.basis,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CoeffArray) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Copy into a truncation of different degree, dropping or zero-padding.
    pub fn retruncate(&self, n: usize) -> CoeffArray {
        let t = TruncationSpec { d: self.trunc.d, n };
        CoeffArray::from_fn(t, self.basis, |a| self.get(a))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CoeffArrayJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: CoeffArrayJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        j.try_into()
    }
}

pub fn coeff_binop(a: &CoeffArray, op: CoeffOp<'_>) -> Result<CoeffArray> {
    match op {
        CoeffOp::Add(b) => {
            if a.trunc != b.trunc {
                return Err(Error::TruncationMismatch {
                    d1: a.trunc.d,
                    n1: a.trunc.n,
                    d2: b.trunc.d,
                    n2: b.trunc.n,
                });
            }
            if a.basis != b.basis {
                return Err(Error::BasisMismatch {
                    expected: a.basis.name(),
                    found: b.basis.name(),
                });
            }
            Ok(CoeffArray {
                trunc: a.trunc,
                values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
                basis: a.basis,
            })
        }
        CoeffOp::Scale(s) => Ok(a.scale(s)),
        CoeffOp::IndexMap(f) => Ok(a.map_indexed(f)),
    }
}

#[derive(Serialize, Deserialize)]
pub struct CoeffArrayJson {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub basis: Basis,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CoeffArray> for CoeffArrayJson {
    fn from(c: &CoeffArray) -> Self {
        CoeffArrayJson {
            d: c.trunc.d,
            n: c.trunc.n,
            basis: c.basis,
            re: c.values.iter().map(|v| v.re).collect(),
            im: c.values.iter().map(|v| v.im).collect(),
        }
    }
}

impl TryFrom<CoeffArrayJson> for CoeffArray {
    type Error = Error;
    fn try_from(j: CoeffArrayJson) -> Result<Self> {
        let trunc = TruncationSpec::new(j.d, j.n)?;
        if j.re.len() != trunc.len() || j.im.len() != trunc.len() {
            return Err(Error::Parse(format!(
                "expected {} coefficients, got re={} im={}",
                trunc.len(),
                j.re.len(),
                j.im.len()
            )));
        }
        Ok(CoeffArray {
            trunc,
            values: j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect(),
            basis: j.basis,
        })
    }
}
