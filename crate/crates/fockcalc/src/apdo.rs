//! Analytic pseudo-differential calculus on coefficient tensors: T₀,ₜ,
//! symbol/kernel conversion, kernel operators, Gaussian symbol bounds and
//! the kernel-norm continuity harness.

use crate::bargmann::fock_basis_values;
use crate::coeff::{Basis, CoeffArray, MultiIndex, TruncationSpec, C64};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::mixednorm::{fock_norm_fn, MixedNormSpec};
use crate::weights::{ProbeSpec, WeightFn};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, SQRT_2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelTag {
    Kernel,
    Symbol,
}

/// Σ c(α,β) e_α(z) e_β(w̄), α over {|α| ≤ N} in ℕ^{d2}, β over {|β| ≤ N} in ℕ^{d1}.
/// Row-major: α selects the row.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelCoeff {
    pub d2: usize,
    pub d1: usize,
    pub n: usize,
    pub values: Vec<C64>,
    pub tag: KernelTag,
}

#[derive(Serialize, Deserialize)]
struct KernelCoeffJson {
    d2: usize,
    d1: usize,
    #[serde(rename = "N")]
    n: usize,
    tag: KernelTag,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl KernelCoeff {
    pub fn zeros(d2: usize, d1: usize, n: usize, tag: KernelTag) -> Self {
        let l2 = TruncationSpec { d: d2, n }.len();
        let l1 = TruncationSpec { d: d1, n }.len();
        KernelCoeff {
            d2,
            d1,
            n,
            values: vec![C64::new(0.0, 0.0); l2 * l1],
            tag,
        }
    }

    pub fn from_fn(d: usize, n: usize, tag: KernelTag, mut f: impl FnMut(&MultiIndex, &MultiIndex) -> C64) -> Result<Self> {
        let mut k = Self::zeros(d, d, n, tag);
        let rows = k.rows()?.indices();
        let cols = k.cols()?.indices();
        let l1 = cols.len();
        for (i, a) in rows.iter().enumerate() {
            for (j, b) in cols.iter().enumerate() {
                k.values[i * l1 + j] = f(a, b);
            }
        }
        Ok(k)
    }

    pub fn rows(&self) -> Result<TruncationSpec> {
        TruncationSpec::new(self.d2, self.n)
    }

    pub fn cols(&self) -> Result<TruncationSpec> {
        TruncationSpec::new(self.d1, self.n)
    }

    fn ncols(&self) -> usize {
        TruncationSpec { d: self.d1, n: self.n }.len()
    }

    pub fn get(&self, a: &MultiIndex, b: &MultiIndex) -> C64 {
        let r = TruncationSpec { d: self.d2, n: self.n }.index_of(a);
        let c = TruncationSpec { d: self.d1, n: self.n }.index_of(b);
        match (r, c) {
            (Some(r), Some(c)) => self.values[r * self.ncols() + c],
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, a: &MultiIndex, b: &MultiIndex, v: C64) -> Result<()> {
        let r = TruncationSpec { d: self.d2, n: self.n }.index_of(a);
        let c = TruncationSpec { d: self.d1, n: self.n }.index_of(b);
        match (r, c) {
            (Some(r), Some(c)) => {
                let nc = self.ncols();
                self.values[r * nc + c] = v;
                Ok(())
            }
            _ => Err(Error::Invalid(format!("({a:?},{b:?}) outside truncation N={}", self.n))),
        }
    }

    /// Single entry c(α,β) = 1.
    pub fn delta(d: usize, n: usize, tag: KernelTag, a: &MultiIndex, b: &MultiIndex) -> Result<Self> {
        let mut k = Self::zeros(d, d, n, tag);
        k.set(a, b, C64::new(1.0, 0.0))?;
        Ok(k)
    }

    /// Symbol z_j.
    pub fn symbol_z(d: usize, n: usize, j: usize) -> Result<Self> {
        Self::delta(d, n, KernelTag::Symbol, &MultiIndex::unit(d, j), &MultiIndex::zero(d))
    }

    /// Symbol w̄_j.
    pub fn symbol_wbar(d: usize, n: usize, j: usize) -> Result<Self> {
        Self::delta(d, n, KernelTag::Symbol, &MultiIndex::zero(d), &MultiIndex::unit(d, j))
    }

    /// Truncated coefficients of e^{t(z,w)}: c(α,α) = t^{|α|}.
    pub fn exp_pairing(d: usize, n: usize, t: C64, tag: KernelTag) -> Result<Self> {
        Self::from_fn(d, n, tag, |a, b| if a == b { t.powu(a.abs()) } else { C64::new(0.0, 0.0) })
    }

    pub fn scale(&self, s: C64) -> Self {
        KernelCoeff {
            values: self.values.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// Same entries on a new per-side truncation; dropped or padded with zeros.
    pub fn retruncate(&self, n: usize) -> Result<Self> {
        if self.d2 != self.d1 {
            return Err(Error::Invalid("retruncate needs equal blocks".into()));
        }
        Self::from_fn(self.d2, n, self.tag, |a, b| self.get(a, b))
    }

    pub fn max_abs_diff(&self, other: &KernelCoeff) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest max(|α|,|β|) over nonzero entries.
    pub fn degree(&self) -> usize {
        let rows = TruncationSpec { d: self.d2, n: self.n }.indices();
        let cols = TruncationSpec { d: self.d1, n: self.n }.indices();
        let nc = cols.len();
        let mut deg = 0;
        for (k, v) in self.values.iter().enumerate() {
            if v.norm() != 0.0 {
                deg = deg.max(rows[k / nc].abs().max(cols[k % nc].abs()) as usize);
            }
        }
        deg
    }

    /// Evaluate at (z,w), the second slot entering as w̄.
    pub fn eval(&self, z: &[C64], w: &[C64]) -> Result<C64> {
        if z.len() != self.d2 || w.len() != self.d1 {
            return Err(Error::InvalidDimension(z.len() + w.len()));
        }
        let ez = fock_basis_values(TruncationSpec { d: self.d2, n: self.n }, z);
        let wb: Vec<C64> = w.iter().map(|v| v.conj()).collect();
        let ew = fock_basis_values(TruncationSpec { d: self.d1, n: self.n }, &wb);
        Ok(self.eval_tables(&ez, &ew))
    }

    fn eval_tables(&self, ez: &[C64], ew: &[C64]) -> C64 {
        let nc = ew.len();
        ez.iter()
            .enumerate()
            .map(|(i, e)| {
                let row = &self.values[i * nc..(i + 1) * nc];
                e * row.iter().zip(ew).map(|(c, f)| c * f).sum::<C64>()
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        let nc = self.ncols();
        let j = KernelCoeffJson {
            d2: self.d2,
            d1: self.d1,
            n: self.n,
            tag: self.tag,
            re: self.values.chunks(nc).map(|r| r.iter().map(|v| v.re).collect()).collect(),
            im: self.values.chunks(nc).map(|r| r.iter().map(|v| v.im).collect()).collect(),
        };
        serde_json::to_string(&j).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: KernelCoeffJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut k = KernelCoeff::zeros(j.d2, j.d1, j.n, j.tag);
        k.rows()?;
        k.cols()?;
        let nc = k.ncols();
        if j.re.len() * nc != k.values.len() || j.im.len() != j.re.len() {
            return Err(Error::Parse("kernel rows do not match truncation".into()));
        }
        for (i, (r, m)) in j.re.iter().zip(&j.im).enumerate() {
            if r.len() != nc || m.len() != nc {
                return Err(Error::Parse("kernel row length".into()));
            }
            for c in 0..nc {
                k.values[i * nc + c] = C64::new(r[c], m[c]);
            }
        }
        Ok(k)
    }
}

fn box_below(m: &[u32]) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex(vec![])];
    for &mj in m {
        out = out
            .into_iter()
            .flat_map(|g| {
                (0..=mj).map(move |k| {
                    let mut v = g.0.clone();
                    v.push(k);
                    MultiIndex(v)
                })
            })
            .collect();
    }
    out
}

/// (T₀,ₜc)(α,β) = Σ_{γ≤α,β} c(α−γ,β−γ) t^{|γ|} √(C(α,γ)C(β,γ)).
pub fn t0t_transform(c: &KernelCoeff, t: C64) -> Result<KernelCoeff> {
    if c.d2 != c.d1 {
        return Err(Error::Invalid(format!("T0,t needs equal blocks (d2={}, d1={})", c.d2, c.d1)));
    }
    let tr = c.rows()?;
    let idx = tr.indices();
    let nc = idx.len();
    let tp: Vec<C64> = (0..=c.n as u32).map(|k| t.powu(k)).collect();
    let mut out = c.clone();
    out.values.par_chunks_mut(nc).enumerate().for_each(|(i, row)| {
        let a = &idx[i];
        for (j, b) in idx.iter().enumerate() {
            let m: Vec<u32> = a.0.iter().zip(&b.0).map(|(x, y)| *x.min(y)).collect();
            let mut acc = C64::new(0.0, 0.0);
            for g in box_below(&m) {
                let ag = a.checked_sub(&g).unwrap();
                let bg = b.checked_sub(&g).unwrap();
                let v = c.values[tr.index_of(&ag).unwrap() * nc + tr.index_of(&bg).unwrap()];
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                acc += v * tp[g.abs() as usize] * (a.binom(&g) * b.binom(&g)).sqrt();
            }
            row[j] = acc;
        }
    });
    Ok(out)
}

/// Largest ρ with Σ_{n>N}(|t|ρ²)^n/n! < 1e-12.
pub fn certified_radius(n_eff: usize, t_abs: f64) -> f64 {
    if t_abs == 0.0 {
        return f64::INFINITY;
    }
    let tail = |x: f64| -> f64 {
        let mut term = 1.0;
        for k in 1..=n_eff + 1 {
            term *= x / k as f64;
        }
        let mut s = 0.0;
        let mut k = n_eff + 1;
        while term > 1e-300 && k < n_eff + 400 {
            s += term;
            k += 1;
            term *= x / k as f64;
            if term < s * 1e-17 {
                break;
            }
        }
        s
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while tail(hi) < 1e-12 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) < 1e-12 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo / t_abs).sqrt()
}

fn cnorm(z: &[C64]) -> f64 {
    z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// (z,w) = Σ z_j w̄_j.
pub fn pairing(z: &[C64], w: &[C64]) -> C64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub type Probe = (Vec<C64>, Vec<C64>);

/// max over probes of |(T₀,ₜa)(z,w) − e^{t(z,w)} a(z,w)|.
pub fn tt_pointwise_check(a: &KernelCoeff, t: C64, probes: &[Probe]) -> Result<f64> {
    let n_eff = a.n.saturating_sub(a.degree());
    let rho = certified_radius(n_eff, t.norm());
    let ta = t0t_transform(a, t)?;
    let mut worst: f64 = 0.0;
    for (z, w) in probes {
        if cnorm(z) > rho || cnorm(w) > rho {
            return Err(Error::OutsideAccuracy(format!(
                "probe |z|={:.3}, |w|={:.3} outside certified radius {rho:.3}",
                cnorm(z),
                cnorm(w)
            )));
        }
        let lhs = ta.eval(z, w)?;
        let rhs = (t * pairing(z, w)).exp() * a.eval(z, w)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

fn retag(c: &KernelCoeff, from: KernelTag, to: KernelTag, t: f64) -> Result<KernelCoeff> {
    if c.tag != from {
        return Err(Error::BasisMismatch {
            expected: tag_name(from),
            found: tag_name(c.tag),
        });
    }
    let mut out = t0t_transform(c, C64::new(t, 0.0))?;
    out.tag = to;
    Ok(out)
}

fn tag_name(t: KernelTag) -> &'static str {
    match t {
        KernelTag::Kernel => "kernel",
        KernelTag::Symbol => "symbol",
    }
}

/// K(z,w) = a(z,w) e^{(z,w)}.
pub fn symbol_to_kernel(a: &KernelCoeff) -> Result<KernelCoeff> {
    retag(a, KernelTag::Symbol, KernelTag::Kernel, 1.0)
}

pub fn kernel_to_symbol(k: &KernelCoeff) -> Result<KernelCoeff> {
    retag(k, KernelTag::Kernel, KernelTag::Symbol, -1.0)
}

/// (T_K F)_α = Σ_β c_K(α,β) c_F(β).
pub fn kernel_apply(k: &KernelCoeff, f: &CoeffArray) -> Result<CoeffArray> {
    if k.tag != KernelTag::Kernel {
        return Err(Error::BasisMismatch {
            expected: "kernel",
            found: "symbol",
        });
    }
    if f.basis != Basis::Fock {
        return Err(Error::BasisMismatch {
            expected: "fock",
            found: f.basis.name(),
        });
    }
    if f.d() != k.d1 || f.n() != k.n {
        return Err(Error::TruncationMismatch {
            d1: k.d1,
            n1: k.n,
            d2: f.d(),
            n2: f.n(),
        });
    }
    let nc = f.values.len();
    let vals: Vec<C64> = k
        .values
        .par_chunks(nc)
        .map(|row| row.iter().zip(&f.values).map(|(a, b)| a * b).sum())
        .collect();
    Ok(CoeffArray {
        trunc: k.rows()?,
        values: vals,
        basis: Basis::Fock,
    })
}

/// Op_𝔙(a) = T_K with K = a·e^{(z,w)}.
pub fn apdo_apply(a: &KernelCoeff, f: &CoeffArray) -> Result<CoeffArray> {
    kernel_apply(&symbol_to_kernel(a)?, f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    /// e^{|z−w|²/2 − r(|z|^{1/s}+|w|^{1/s})}
    Minus,
    /// e^{|z−w|²/2 + r(|z|^{1/s}+|w|^{1/s})}
    Plus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub holds: bool,
    pub worst_ratio: f64,
    pub worst_probe: usize,
}

/// |a(z,w)| against the Gaussian envelope; holds when the worst ratio ≤ `threshold`.
pub fn gaussian_bound_check(
    a: &KernelCoeff,
    s: f64,
    r: f64,
    side: BoundSide,
    probes: &[Probe],
    threshold: f64,
) -> Result<BoundReport> {
    if s < 0.5 {
        return Err(Error::Invalid(format!("s={s} must be at least 1/2")));
    }
    let sign = match side {
        BoundSide::Minus => -1.0,
        BoundSide::Plus => 1.0,
    };
    let mut worst = (0.0f64, 0usize);
    for (k, (z, w)) in probes.iter().enumerate() {
        let v = a.eval(z, w)?.norm();
        if v == 0.0 {
            continue;
        }
        let dz: f64 = z.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
        let ln_env = dz / 2.0 + sign * r * (cnorm(z).powf(1.0 / s) + cnorm(w).powf(1.0 / s));
        let ratio = (v.ln() - ln_env).exp();
        if ratio > worst.0 {
            worst = (ratio, k);
        }
    }
    Ok(BoundReport {
        holds: worst.0 <= threshold,
        worst_ratio: worst.0,
        worst_probe: worst.1,
    })
}

// ---------------------------------------------------------------------------
// block matrix C and G_{K,C,ω}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrixC {
    pub d: usize,
    pub c: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixFlags {
    pub det: f64,
    pub det11: f64,
    pub det12: f64,
    pub det21: f64,
    pub det22: f64,
    pub invertible: bool,
    pub cond1: bool,
    pub cond2: bool,
}

const DET_TOL: f64 = 1e-10;

impl BlockMatrixC {
    pub fn from_blocks(c11: &DMatrix<f64>, c12: &DMatrix<f64>, c21: &DMatrix<f64>, c22: &DMatrix<f64>) -> Result<Self> {
        let m = c11.nrows();
        if m % 2 != 0 || [c11, c12, c21, c22].iter().any(|b| b.nrows() != m || b.ncols() != m) {
            return Err(Error::Invalid("blocks must all be 2d x 2d".into()));
        }
        let mut c = DMatrix::zeros(2 * m, 2 * m);
        c.view_mut((0, 0), (m, m)).copy_from(c11);
        c.view_mut((0, m), (m, m)).copy_from(c12);
        c.view_mut((m, 0), (m, m)).copy_from(c21);
        c.view_mut((m, m), (m, m)).copy_from(c22);
        Ok(BlockMatrixC { d: m / 2, c })
    }

    pub fn block(&self, j: usize, k: usize) -> DMatrix<f64> {
        let m = 2 * self.d;
        self.c.view(((j - 1) * m, (k - 1) * m), (m, m)).into_owned()
    }

    pub fn flags(&self) -> MatrixFlags {
        let det = self.c.determinant();
        let (d11, d12, d21, d22) = (
            self.block(1, 1).determinant(),
            self.block(1, 2).determinant(),
            self.block(2, 1).determinant(),
            self.block(2, 2).determinant(),
        );
        let invertible = det.abs() > DET_TOL;
        MatrixFlags {
            det,
            det11: d11,
            det12: d12,
            det21: d21,
            det22: d22,
            invertible,
            cond1: invertible && (d11 * d21).abs() > DET_TOL,
            cond2: invertible && (d12 * d22).abs() > DET_TOL,
        }
    }

    /// C₁₁=C₂₁=C₂₂=I, C₁₂=0, so G(z,w) = K_ω(z, z+w).
    pub fn shear_lower(d: usize) -> Self {
        let i = DMatrix::identity(2 * d, 2 * d);
        let z = DMatrix::zeros(2 * d, 2 * d);
        Self::from_blocks(&i, &z, &i, &i).unwrap()
    }

    /// C₁₁=C₁₂=C₂₂=I, C₂₁=0, so G(z,w) = K_ω(z+w, w).
    pub fn shear_upper(d: usize) -> Self {
        let i = DMatrix::identity(2 * d, 2 * d);
        let z = DMatrix::zeros(2 * d, 2 * d);
        Self::from_blocks(&i, &i, &z, &i).unwrap()
    }

    /// C₁₁=C₂₁=I, C₁₂=diag(0,I), C₂₂=diag(I,0).
    pub fn split_phase(d: usize) -> Self {
        let i = DMatrix::identity(2 * d, 2 * d);
        let c12 = DMatrix::from_fn(2 * d, 2 * d, |a, b| if a == b && a >= d { 1.0 } else { 0.0 });
        let c22 = DMatrix::from_fn(2 * d, 2 * d, |a, b| if a == b && a < d { 1.0 } else { 0.0 });
        Self::from_blocks(&i, &c12, &i, &c22).unwrap()
    }

    pub fn identity(d: usize) -> Self {
        BlockMatrixC {
            d,
            c: DMatrix::identity(4 * d, 4 * d),
        }
    }
}

/// Which conjugation pattern enters the weight in K_ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightConj {
    /// ω(√2 z̄, √2 w)
    #[default]
    AsPrinted,
    /// ω(√2 z̄, √2 w̄)
    BothConjugated,
}

/// Kernel input for [`g_kco_build`]. Grids over ℂ^{2d} use the layout
/// (Re z, Im z, Re w, Im w), each block of length d.
pub enum KernelSource<'a> {
    Coeff(&'a KernelCoeff),
    Fn(&'a (dyn Fn(&[C64], &[C64]) -> C64 + Sync)),
    Grid(&'a GridField),
}

fn split_point(p: &[f64], d: usize) -> (Vec<C64>, Vec<C64>) {
    let z = (0..d).map(|j| C64::new(p[j], p[d + j])).collect();
    let w = (0..d).map(|j| C64::new(p[2 * d + j], p[3 * d + j])).collect();
    (z, w)
}

/// K_ω(z,w) = e^{-(|z|²+|w|²)/2} |K(z,w)| ω(√2 z̄, √2 w).
pub fn k_omega(k: C64, z: &[C64], w: &[C64], omega: &WeightFn, conj: WeightConj) -> f64 {
    let q: f64 = z.iter().chain(w).map(|v| v.norm_sqr()).sum();
    let mut base = (-q / 2.0).exp() * k.norm();
    if !omega.is_one() && base != 0.0 {
        let d = z.len();
        let mut pt = vec![0.0; 4 * d];
        let ws = match conj {
            WeightConj::AsPrinted => 1.0,
            WeightConj::BothConjugated => -1.0,
        };
        for j in 0..d {
            pt[j] = SQRT_2 * z[j].re;
            pt[d + j] = -SQRT_2 * z[j].im;
            pt[2 * d + j] = SQRT_2 * w[j].re;
            pt[3 * d + j] = ws * SQRT_2 * w[j].im;
        }
        base *= omega.eval(&pt);
    }
    base
}

/// G_{K,C,ω} = K_ω ∘ U_{d,d}^{-1} ∘ C ∘ U_{d,d} sampled on [−R,R]^{4d}.
pub fn g_kco_build(
    k: KernelSource<'_>,
    c: &BlockMatrixC,
    omega: &WeightFn,
    conj: WeightConj,
    r: f64,
    h: f64,
) -> Result<GridField> {
    let d = c.d;
    let flags = c.flags();
    if !flags.invertible {
        return Err(Error::NonInvertible(flags.det));
    }
    if let KernelSource::Coeff(kc) = &k {
        if kc.d2 != d || kc.d1 != d {
            return Err(Error::InvalidDimension(kc.d2));
        }
    }
    if let KernelSource::Grid(g) = &k {
        if g.dim != 4 * d {
            return Err(Error::InvalidDimension(g.dim));
        }
    }
    let is_identity = c.c == DMatrix::identity(4 * d, 4 * d);
    let mut out = GridField::zeros(4 * d, r, h)?;
    let vals: Result<Vec<C64>> = (0..out.len())
        .into_par_iter()
        .map(|idx| {
            let p = out.point(idx);
            let x = if is_identity {
                p
            } else {
                (&c.c * nalgebra::DVector::from_vec(p)).as_slice().to_vec()
            };
            let (z, w) = split_point(&x, d);
            let kv = match &k {
                KernelSource::Coeff(kc) => kc.eval(&z, &w)?,
                KernelSource::Fn(f) => f(&z, &w),
                KernelSource::Grid(g) => match g.interp(&x) {
                    Ok(v) => v,
                    Err(Error::OutsideHull(_)) => C64::new(0.0, 0.0),
                    Err(e) => return Err(e),
                },
            };
            Ok(C64::new(k_omega(kv, &z, &w, omega, conj), 0.0))
        })
        .collect();
    out.values = vals?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// continuity harness

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "Thm-LebOpCont-1")]
    LebOpCont1,
    #[serde(rename = "Thm-LebOpCont-2")]
    LebOpCont2,
    #[serde(rename = "Thm-LebOpCont3")]
    LebOpCont3,
}

#[derive(Clone, Debug)]
pub struct HarnessConfig {
    pub variant: Variant,
    pub p: f64,
    pub q: f64,
    /// Input exponents in [1,∞]^{2d}; unused for `LebOpCont3`, whose input space is A^{p′,q′}.
    pub p1: Vec<f64>,
    /// Output exponents; unused for `LebOpCont3` (output A^{q,p}_*).
    pub p2: Vec<f64>,
    pub c: BlockMatrixC,
    pub conj: WeightConj,
    /// Weight on ℂ^d×ℂ^d, argument layout (Re z, Im z, Re w, Im w).
    pub omega: WeightFn,
    pub omega1: WeightFn,
    pub omega2: WeightFn,
    /// Extra rhs exponent vectors (standard basis) to evaluate the input norm with.
    pub relaxed_inputs: Vec<Vec<f64>>,
    pub ensemble: usize,
    pub seed: u64,
    /// Coefficient damping e^{-damping·|α|} of the random ensemble.
    pub damping: f64,
    /// Lattice for A-norms (U_𝔙^{-1}F on [−R,R]^{2d}).
    pub a_grid: (f64, f64),
    /// Lattice for G on [−R,R]^{4d}.
    pub g_grid: (f64, f64),
}

impl HarnessConfig {
    pub fn new(variant: Variant, d: usize, p: f64, q: f64, p1: Vec<f64>, p2: Vec<f64>) -> Self {
        let c = match variant {
            Variant::LebOpCont1 => BlockMatrixC::shear_lower(d),
            Variant::LebOpCont2 => BlockMatrixC::shear_upper(d),
            Variant::LebOpCont3 => BlockMatrixC::split_phase(d),
        };
        HarnessConfig {
            variant,
            p,
            q,
            p1,
            p2,
            c,
            conj: WeightConj::AsPrinted,
            omega: WeightFn::one(),
            omega1: WeightFn::one(),
            omega2: WeightFn::one(),
            relaxed_inputs: Vec::new(),
            ensemble: 50,
            seed: 1,
            damping: 0.5,
            a_grid: (12.0, 0.25),
            g_grid: (6.0, 0.375),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnessReport {
    pub variant: Variant,
    pub p: String,
    pub q: String,
    pub input_space: String,
    pub output_space: String,
    pub g_space: String,
    pub g_norm: f64,
    pub lhs: Vec<f64>,
    pub input_norms: Vec<f64>,
    pub max_ratio: f64,
    /// (rhs exponents, max ratio) per relaxed input norm.
    pub relaxed: Vec<(String, f64)>,
    pub ensemble: usize,
    pub seed: u64,
    pub matrix: MatrixFlags,
    pub weight_constant: f64,
}

impl HarnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        a == b
    } else {
        (a - b).abs() < 1e-12
    }
}

/// 1/𝐩₁ − 1/𝐩₂ = 1 − 1/p − 1/q and q ≤ 𝐩₂ ≤ p, componentwise.
pub fn check_exponents(p: f64, q: f64, p1: &[f64], p2: &[f64]) -> Result<()> {
    if p1.len() != p2.len() {
        return Err(Error::ExponentRelation("p1 and p2 differ in length".into()));
    }
    for &e in [p, q].iter().chain(p1).chain(p2) {
        if !(e >= 1.0) {
            return Err(Error::ExponentRelation(format!("exponent {e} outside [1,inf]")));
        }
    }
    let target = 1.0 - 1.0 / p - 1.0 / q;
    for (k, (&a, &b)) in p1.iter().zip(p2).enumerate() {
        let lhs = 1.0 / a - 1.0 / b;
        if !close(lhs, target) {
            return Err(Error::ExponentRelation(format!(
                "component {k}: 1/p1-1/p2={lhs} but 1-1/p-1/q={target}"
            )));
        }
        if b < q || b > p {
            return Err(Error::ExponentRelation(format!("component {k}: need q<=p2<=p, got p2={b}")));
        }
    }
    Ok(())
}

/// Probe ω₂(z)/(ω₁(w)·ω(z,w̄)) on growing lattices; returns the observed constant,
/// or a counterexample when the ratio keeps growing with the radius.
pub fn weight_compat_check(omega: &WeightFn, omega1: &WeightFn, omega2: &WeightFn, d: usize) -> Result<f64> {
    if omega.is_one() && omega1.is_one() && omega2.is_one() {
        return Ok(1.0);
    }
    let spec = ProbeSpec {
        dim: 2 * d,
        radii: vec![4.0, 8.0, 16.0],
        per_axis: if d == 1 { 33 } else { 7 },
    };
    let mut per_radius = Vec::new();
    let mut worst = (f64::NEG_INFINITY, Vec::new(), Vec::new());
    for &radius in &spec.radii {
        let pts = spec.lattice(radius);
        let best = pts
            .par_iter()
            .map(|z| {
                let mut b = (f64::NEG_INFINITY, z.clone(), Vec::new());
                let l2 = omega2.ln_eval(z);
                for w in &pts {
                    let mut zw = z.clone();
                    zw.extend(w[..d].iter().copied());
                    zw.extend(w[d..].iter().map(|v| -v));
                    let v = l2 - omega1.ln_eval(w) - omega.ln_eval(&zw);
                    if v > b.0 {
                        b = (v, z.clone(), w.clone());
                    }
                }
                b
            })
            .reduce(|| (f64::NEG_INFINITY, Vec::new(), Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
        per_radius.push(best.0);
        worst = best;
    }
    let growing = per_radius[2] - per_radius[1] > 0.5 * LN_2 && per_radius[1] - per_radius[0] > 0.0;
    if growing {
        return Err(Error::WeightCondition(format!(
            "omega2(z)/(omega1(w) omega(z,conj w)) grows: {:.3e} at z={:?}, w={:?}",
            worst.0.exp(),
            worst.1,
            worst.2
        )));
    }
    Ok(per_radius.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp())
}

/// Random Fock coefficients: i.i.d. complex Gaussian damped by e^{-damping·|α|}.
pub fn random_ensemble(trunc: TruncationSpec, count: usize, seed: u64, damping: f64) -> Vec<CoeffArray> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            CoeffArray::from_fn(trunc, Basis::Fock, |a| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im) * (std::f64::consts::FRAC_1_SQRT_2 * (-damping * a.abs() as f64).exp())
            })
        })
        .collect()
}

fn exps_label(e: &[f64]) -> String {
    e.iter()
        .map(|&p| if p.is_infinite() { "inf".to_string() } else { format!("{p}") })
        .collect::<Vec<_>>()
        .join(",")
}

fn a_norm(f: &CoeffArray, spec: &MixedNormSpec, omega: &WeightFn, grid: (f64, f64)) -> Result<f64> {
    let eval = |z: &[C64]| crate::bargmann::fock_eval(f, z).unwrap_or_default();
    fock_norm_fn(&eval, f.d(), spec, omega, grid.0, grid.1)
}

/// lhs = ‖T_K F‖, rhs = ‖G_{K,C,ω}‖·‖F‖ over a random ensemble; reports max lhs/rhs.
pub fn continuity_harness(k: &KernelCoeff, cfg: &HarnessConfig) -> Result<HarnessReport> {
    continuity_harness_with_g(k, cfg, None)
}

/// [`continuity_harness`] reusing a G_{K,C,ω} already built from `k` with the
/// same C, ω and weight convention as `cfg`.
pub fn continuity_harness_with_g(k: &KernelCoeff, cfg: &HarnessConfig, g: Option<&GridField>) -> Result<HarnessReport> {
    if k.tag != KernelTag::Kernel {
        return Err(Error::BasisMismatch {
            expected: "kernel",
            found: "symbol",
        });
    }
    let d = k.d1;
    if k.d2 != d || cfg.c.d != d {
        return Err(Error::InvalidDimension(k.d2));
    }
    let flags = cfg.c.flags();
    let (p, q) = (cfg.p, cfg.q);
    let (in_spec, out_spec, g_spec, g_label) = match cfg.variant {
        Variant::LebOpCont1 | Variant::LebOpCont2 => {
            if cfg.p1.len() != 2 * d {
                return Err(Error::ExponentRelation(format!("p1 needs {} entries", 2 * d)));
            }
            check_exponents(p, q, &cfg.p1, &cfg.p2)?;
            if cfg.variant == Variant::LebOpCont1 {
                if !flags.cond1 {
                    return Err(Error::MatrixCondition(format!("det(C)det(C11 C21) ~ 0: {flags:?}")));
                }
                (
                    MixedNormSpec::standard(cfg.p1.clone())?,
                    MixedNormSpec::standard(cfg.p2.clone())?,
                    MixedNormSpec::lpq(2 * d, p, q)?,
                    format!("L^{{{},{}}}", exps_label(&[p]), exps_label(&[q])),
                )
            } else {
                if !flags.cond2 {
                    return Err(Error::MatrixCondition(format!("det(C)det(C12 C22) ~ 0: {flags:?}")));
                }
                (
                    MixedNormSpec::standard(cfg.p1.clone())?,
                    MixedNormSpec::standard(cfg.p2.clone())?,
                    MixedNormSpec::lpq_star(2 * d, q, p)?,
                    format!("L^{{{},{}}}_*", exps_label(&[q]), exps_label(&[p])),
                )
            }
        }
        Variant::LebOpCont3 => {
            if !flags.cond1 {
                return Err(Error::MatrixCondition(format!("det(C)det(C11 C21) ~ 0: {flags:?}")));
            }
            let (pc, qc) = (
                crate::mixednorm::conjugate_exponent(p),
                crate::mixednorm::conjugate_exponent(q),
            );
            (
                MixedNormSpec::lpq(d, pc, qc)?,
                MixedNormSpec::lpq_star(d, q, p)?,
                MixedNormSpec::lpq_star(2 * d, p, q)?,
                format!("L^{{{},{}}}_*", exps_label(&[p]), exps_label(&[q])),
            )
        }
    };
    let weight_constant = weight_compat_check(&cfg.omega, &cfg.omega1, &cfg.omega2, d)?;
    let g_norm = match g {
        Some(g) => crate::mixednorm::mixed_norm(g, &g_spec)?,
        None => {
            let g = g_kco_build(KernelSource::Coeff(k), &cfg.c, &cfg.omega, cfg.conj, cfg.g_grid.0, cfg.g_grid.1)?;
            crate::mixednorm::mixed_norm(&g, &g_spec)?
        }
    };
    let trunc = k.cols()?;
    let ens = random_ensemble(trunc, cfg.ensemble, cfg.seed, cfg.damping);
    let mut lhs = Vec::with_capacity(ens.len());
    let mut input_norms = Vec::with_capacity(ens.len());
    let relaxed_specs: Vec<MixedNormSpec> = cfg
        .relaxed_inputs
        .iter()
        .map(|e| MixedNormSpec::standard(e.clone()))
        .collect::<Result<_>>()?;
    let mut relaxed_max = vec![0.0f64; relaxed_specs.len()];
    let mut max_ratio = 0.0f64;
    for f in &ens {
        let tf = kernel_apply(k, f)?;
        let l = a_norm(&tf, &out_spec, &cfg.omega2, cfg.a_grid)?;
        let nf = a_norm(f, &in_spec, &cfg.omega1, cfg.a_grid)?;
        let ratio = |n: f64| if l == 0.0 { 0.0 } else { l / (g_norm * n) };
        max_ratio = max_ratio.max(ratio(nf));
        for (slot, spec) in relaxed_max.iter_mut().zip(&relaxed_specs) {
            let nr = a_norm(f, spec, &cfg.omega1, cfg.a_grid)?;
            *slot = slot.max(ratio(nr));
        }
        lhs.push(l);
        input_norms.push(nf);
    }
    Ok(HarnessReport {
        variant: cfg.variant,
        p: exps_label(&[p]),
        q: exps_label(&[q]),
        input_space: format!("A^{{{}}}", in_spec),
        output_space: format!("A^{{{}}}", out_spec),
        g_space: g_label,
        g_norm,
        lhs,
        input_norms,
        max_ratio,
        relaxed: cfg
            .relaxed_inputs
            .iter()
            .map(|e| exps_label(e))
            .zip(relaxed_max)
            .collect(),
        ensemble: cfg.ensemble,
        seed: cfg.seed,
        matrix: flags,
        weight_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bargmann::{fock_eval, reproducing_project};
    use crate::hermite::QuadratureRule;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_kernel(d: usize, n: usize, seed: u64, tag: KernelTag) -> KernelCoeff {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        KernelCoeff::from_fn(d, n, tag, |a, b| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c(re, im) * (-0.3 * (a.abs() + b.abs()) as f64).exp()
        })
        .unwrap()
    }

    #[test]
    fn t0t_of_delta_is_exponential() {
        let t = c(0.7, -0.2);
        let k = KernelCoeff::delta(1, 10, KernelTag::Symbol, &mi(&[0]), &mi(&[0])).unwrap();
        let out = t0t_transform(&k, t).unwrap();
        for a in 0..=10u32 {
            for b in 0..=10u32 {
                let want = if a == b { t.powu(a) } else { c(0.0, 0.0) };
                assert!((out.get(&mi(&[a]), &mi(&[b])) - want).norm() < 1e-14);
            }
        }
        assert_eq!(t0t_transform(&k, c(0.0, 0.0)).unwrap(), k);
    }

    /// Entrywise rounding scale of the round trip: T_{0,2|t|} applied to |c|.
    fn fp_scale(k: &KernelCoeff, t: C64) -> KernelCoeff {
        let mut a = k.clone();
        a.values.iter_mut().for_each(|v| *v = c(v.norm(), 0.0));
        t0t_transform(&a, c(2.0 * t.norm(), 0.0)).unwrap()
    }

    fn stable_round_trip(k: &KernelCoeff, t: C64) -> bool {
        let back = t0t_transform(&t0t_transform(k, t).unwrap(), -t).unwrap();
        let s = fp_scale(k, t);
        back.values.iter().zip(&k.values).zip(&s.values).all(|((b, v), s)| (b - v).norm() <= 1e-13 * s.re)
    }

    #[test]
    fn t0t_inverse_exact() {
        for t in [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.5), c(-2.0, 0.0)] {
            let k = random_kernel(1, 16, 3, KernelTag::Symbol);
            assert!(stable_round_trip(&k, t), "t={t}");
        }
        assert!(stable_round_trip(&random_kernel(2, 6, 5, KernelTag::Symbol), c(1.0, 0.5)));
        // a sparse symbol round-trips to machine precision
        let one = KernelCoeff::delta(1, 16, KernelTag::Symbol, &mi(&[0]), &mi(&[0])).unwrap();
        let back = t0t_transform(&t0t_transform(&one, c(1.0, 0.5)).unwrap(), c(-1.0, -0.5)).unwrap();
        assert!(back.max_abs_diff(&one) < 1e-12);
    }

    #[test]
    fn certified_radius_examples() {
        let rho = certified_radius(24, 1.0);
        let x: f64 = rho * rho;
        let tail: f64 = (25..200).map(|n| (n as f64 * x.ln() - crate::coeff::ln_factorial(n)).exp()).sum();
        assert!(tail < 1.001e-12 && tail > 1e-14, "{rho} {tail}");
        assert!(rho > 1.0);
        assert!(certified_radius(24, 2.0) < rho);
        assert!(certified_radius(3, 0.0).is_infinite());
    }

    fn disk_probes(n: usize, rad: f64) -> Vec<Probe> {
        (0..n)
            .map(|k| {
                let a = k as f64 * 0.7;
                let b = k as f64 * 1.3 + 0.4;
                let s = rad * ((k % 5) as f64 + 1.0) / 5.0;
                (vec![C64::from_polar(s, a)], vec![C64::from_polar(rad - s * 0.5, b)])
            })
            .collect()
    }

    #[test]
    fn tt_pointwise_examples() {
        let one = KernelCoeff::delta(1, 24, KernelTag::Symbol, &mi(&[0]), &mi(&[0])).unwrap();
        let probes = disk_probes(25, 1.0);
        assert!(tt_pointwise_check(&one, c(1.0, 0.0), &probes).unwrap() <= 1e-10);
        assert_eq!(tt_pointwise_check(&one, c(0.0, 0.0), &probes).unwrap(), 0.0);
        let z = KernelCoeff::symbol_z(1, 24, 0).unwrap();
        assert!(tt_pointwise_check(&z, c(1.0, 0.0), &probes).unwrap() <= 1e-10);
        let far = vec![(vec![c(5.0, 0.0)], vec![c(5.0, 0.0)])];
        assert!(matches!(tt_pointwise_check(&one, c(1.0, 0.0), &far), Err(Error::OutsideAccuracy(_))));
    }

    #[test]
    fn symbol_kernel_round_trip() {
        let one = KernelCoeff::delta(1, 8, KernelTag::Symbol, &mi(&[0]), &mi(&[0])).unwrap();
        let k = symbol_to_kernel(&one).unwrap();
        assert_eq!(k, KernelCoeff::exp_pairing(1, 8, c(1.0, 0.0), KernelTag::Kernel).unwrap());
        let a = random_kernel(1, 10, 9, KernelTag::Symbol);
        assert!(kernel_to_symbol(&symbol_to_kernel(&a).unwrap()).unwrap().max_abs_diff(&a) < 1e-12);
        let zero = KernelCoeff::zeros(1, 1, 5, KernelTag::Symbol);
        assert!(symbol_to_kernel(&zero).unwrap().values.iter().all(|v| v.norm() == 0.0));
        assert!(symbol_to_kernel(&k).is_err());
    }

    #[test]
    fn kernel_apply_examples() {
        let t = TruncationSpec::new(1, 8).unwrap();
        let f = random_ensemble(t, 1, 4, 0.3).remove(0);
        let pi = KernelCoeff::exp_pairing(1, 8, c(1.0, 0.0), KernelTag::Kernel).unwrap();
        assert!(kernel_apply(&pi, &f).unwrap().max_abs_diff(&f) == 0.0);
        let r1 = KernelCoeff::delta(1, 8, KernelTag::Kernel, &mi(&[2]), &mi(&[5])).unwrap();
        let out = kernel_apply(&r1, &CoeffArray::delta(t, Basis::Fock, &mi(&[5])).unwrap()).unwrap();
        assert_eq!(out, CoeffArray::delta(t, Basis::Fock, &mi(&[2])).unwrap());
        let out = kernel_apply(&r1, &CoeffArray::delta(t, Basis::Fock, &mi(&[4])).unwrap()).unwrap();
        assert_eq!(out.l2_norm(), 0.0);
        let bad = CoeffArray::zeros(TruncationSpec::new(1, 7).unwrap(), Basis::Fock);
        assert!(kernel_apply(&pi, &bad).is_err());
    }

    #[test]
    fn kernel_apply_matches_quadrature() {
        let t = TruncationSpec::new(1, 8).unwrap();
        let rule = QuadratureRule::gauss_hermite(32).unwrap();
        let k = random_kernel(1, 8, 11, KernelTag::Kernel);
        let f = random_ensemble(t, 1, 12, 0.3).remove(0);
        let tf = kernel_apply(&k, &f).unwrap();
        for z in [c(0.3, 0.1), c(-1.0, 0.8), c(0.0, -1.4)] {
            let integrand = |w: &[C64]| k.eval(&[z], w).unwrap() * fock_eval(&f, w).unwrap();
            // ∫K(z,w)F(w)dμ(w) written as Π_A-style quadrature with the pairing factor removed
            let quad: C64 = {
                let g = |w: &[C64]| integrand(w) * (-pairing(&[z], w)).exp();
                reproducing_project(&g, &[z], &rule, true).unwrap()
            };
            assert!((quad - fock_eval(&tf, &[z]).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn creation_annihilation() {
        let n = 16;
        let t = TruncationSpec::new(1, n).unwrap();
        let f = random_ensemble(t, 1, 2, 0.1).remove(0);
        let zf = apdo_apply(&KernelCoeff::symbol_z(1, n, 0).unwrap(), &f).unwrap();
        let df = apdo_apply(&KernelCoeff::symbol_wbar(1, n, 0).unwrap(), &f).unwrap();
        for a in 0..n as u32 {
            let shifted = if a == 0 { c(0.0, 0.0) } else { f.get(&mi(&[a - 1])) * (a as f64).sqrt() };
            assert!((zf.get(&mi(&[a])) - shifted).norm() < 1e-14);
            let der = f.get(&mi(&[a + 1])) * ((a + 1) as f64).sqrt();
            assert!((df.get(&mi(&[a])) - der).norm() < 1e-14);
        }
        // ∂ z² = 2z
        let z2 = CoeffArray::delta(t, Basis::Fock, &mi(&[2])).unwrap().scale(c(2f64.sqrt(), 0.0));
        let d = apdo_apply(&KernelCoeff::symbol_wbar(1, n, 0).unwrap(), &z2).unwrap();
        assert!((d.get(&mi(&[1])) - 2.0).norm() < 1e-14);
        let one = KernelCoeff::delta(1, n, KernelTag::Symbol, &mi(&[0]), &mi(&[0])).unwrap();
        assert!(apdo_apply(&one, &f).unwrap().max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn gaussian_bound_examples() {
        let probes = disk_probes(30, 2.0);
        let one = KernelCoeff::delta(1, 6, KernelTag::Symbol, &mi(&[0]), &mi(&[0])).unwrap();
        assert!(gaussian_bound_check(&one, 1.0, 0.5, BoundSide::Plus, &probes, 1.0).unwrap().holds);
        let e = KernelCoeff::exp_pairing(1, 30, c(1.0, 0.0), KernelTag::Symbol).unwrap();
        let rep = gaussian_bound_check(&e, 0.5, 0.0, BoundSide::Plus, &probes, 1.0).unwrap();
        // |e^{(z,w)}| e^{-|z-w|²/2} = e^{(|z|²+|w|²)/2 - |z-w|²}... bounded by e^{(|z|²+|w|²)/2}
        let worst = &probes[rep.worst_probe];
        let zn = worst.0[0].norm_sqr() + worst.1[0].norm_sqr();
        assert!(rep.worst_ratio <= (zn / 2.0).exp() * (1.0 + 1e-9));
        let zero = KernelCoeff::zeros(1, 1, 4, KernelTag::Symbol);
        let rep = gaussian_bound_check(&zero, 1.0, 1.0, BoundSide::Minus, &probes, 1.0).unwrap();
        assert!(rep.holds && rep.worst_ratio == 0.0);
    }

    #[test]
    fn matrix_presets() {
        let f = BlockMatrixC::shear_lower(1).flags();
        assert!(f.cond1 && !f.cond2);
        let f = BlockMatrixC::shear_upper(1).flags();
        assert!(!f.cond1 && f.cond2);
        let f = BlockMatrixC::split_phase(1).flags();
        assert!(f.cond1 && f.invertible);
        let z = DMatrix::zeros(2, 2);
        let sing = BlockMatrixC::from_blocks(&z, &z, &z, &z).unwrap();
        assert!(!sing.flags().invertible);
        let pi = KernelCoeff::exp_pairing(1, 4, c(1.0, 0.0), KernelTag::Kernel).unwrap();
        assert!(matches!(
            g_kco_build(KernelSource::Coeff(&pi), &sing, &WeightFn::one(), WeightConj::AsPrinted, 1.0, 0.5),
            Err(Error::NonInvertible(_))
        ));
    }

    #[test]
    fn g_matches_a_omega_form() {
        // K = e^{(z,w)} a with a = 1 + z w̄²; shear_upper gives G(z,w) = e^{-|z|²/2}|a(z+w,w)|
        let a_fn = |z: C64, w: C64| 1.0 + z * w.conj() * w.conj();
        let kf = move |z: &[C64], w: &[C64]| a_fn(z[0], w[0]) * pairing(z, w).exp();
        let g = g_kco_build(
            KernelSource::Fn(&kf),
            &BlockMatrixC::shear_upper(1),
            &WeightFn::one(),
            WeightConj::AsPrinted,
            2.0,
            0.5,
        )
        .unwrap();
        for k in (0..g.len()).step_by(37) {
            let p = g.point(k);
            let (z, w) = (c(p[0], p[1]), c(p[2], p[3]));
            let want = (-z.norm_sqr() / 2.0).exp() * a_fn(z + w, w).norm();
            assert!((g.values[k].re - want).abs() < 1e-10 * want.max(1.0));
        }
        let zero = |_: &[C64], _: &[C64]| c(0.0, 0.0);
        let g0 = g_kco_build(KernelSource::Fn(&zero), &BlockMatrixC::split_phase(1), &WeightFn::one(), WeightConj::AsPrinted, 1.0, 0.5).unwrap();
        assert_eq!(g0.max_abs(), 0.0);
    }

    #[test]
    fn g_from_coeff_and_grid_agree() {
        let k = random_kernel(1, 4, 21, KernelTag::Kernel);
        let grid = GridField::from_fn(4, 3.0, 0.25, |p| {
            k.eval(&[c(p[0], p[1])], &[c(p[2], p[3])]).unwrap()
        })
        .unwrap();
        let a = g_kco_build(KernelSource::Coeff(&k), &BlockMatrixC::identity(1), &WeightFn::one(), WeightConj::AsPrinted, 2.0, 0.5).unwrap();
        let b = g_kco_build(KernelSource::Grid(&grid), &BlockMatrixC::identity(1), &WeightFn::one(), WeightConj::AsPrinted, 2.0, 0.5).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn exponent_relation() {
        let inf = f64::INFINITY;
        assert!(check_exponents(inf, 1.0, &[2.0, 2.0], &[2.0, 2.0]).is_ok());
        assert!(check_exponents(inf, inf, &[1.0, 1.0], &[inf, inf]).is_ok());
        assert!(check_exponents(2.0, 1.0, &[inf, inf], &[2.0, 2.0]).is_ok());
        assert!(check_exponents(2.0, 2.0, &[2.0, 2.0], &[2.0, 2.0]).is_ok());
        assert!(matches!(check_exponents(2.0, 1.0, &[2.0, 2.0], &[2.0, 2.0]), Err(Error::ExponentRelation(_))));
        assert!(matches!(check_exponents(inf, 1.0, &[1.0, 1.0], &[inf, inf]), Err(Error::ExponentRelation(_))));
        assert!(check_exponents(inf, 1.0, &[0.5, 2.0], &[2.0, 2.0]).is_err());
    }

    fn small_cfg(variant: Variant, p: f64, q: f64, p1: Vec<f64>, p2: Vec<f64>) -> HarnessConfig {
        let mut cfg = HarnessConfig::new(variant, 1, p, q, p1, p2);
        cfg.ensemble = 6;
        cfg.a_grid = (10.0, 0.5);
        cfg.g_grid = (5.0, 0.5);
        cfg
    }

    #[test]
    fn harness_projection_kernel() {
        let inf = f64::INFINITY;
        let pi = KernelCoeff::exp_pairing(1, 30, c(1.0, 0.0), KernelTag::Kernel).unwrap();
        let mut cfg = small_cfg(Variant::LebOpCont1, inf, 1.0, vec![2.0, 2.0], vec![2.0, 2.0]);
        cfg.g_grid = (2.0, 0.25);
        let rep = continuity_harness(&pi, &cfg).unwrap();
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        // on a small window G = e^{-|w|²/2}, so ‖G‖_{L^{∞,1}} is the Riemann sum of that Gaussian
        let s1: f64 = (-8..=8).map(|k| 0.25 * (-(0.25 * k as f64).powi(2) / 2.0).exp()).sum();
        assert!((rep.g_norm - s1 * s1).abs() < 1e-4 * s1 * s1, "{} {}", rep.g_norm, s1 * s1);
        // scaling K by 2 leaves the ratio unchanged
        let rep2 = continuity_harness(&pi.scale(c(2.0, 0.0)), &cfg).unwrap();
        assert_eq!(rep.max_ratio, rep2.max_ratio);
        let zero = KernelCoeff::zeros(1, 1, 6, KernelTag::Kernel);
        let rep0 = continuity_harness(&zero, &cfg).unwrap();
        assert!(rep0.lhs.iter().all(|&l| l == 0.0) && rep0.max_ratio == 0.0);
        let bad = small_cfg(Variant::LebOpCont1, 2.0, 1.0, vec![2.0, 2.0], vec![2.0, 2.0]);
        assert!(matches!(continuity_harness(&pi, &bad), Err(Error::ExponentRelation(_))));
        let mut wrong_c = cfg.clone();
        wrong_c.c = BlockMatrixC::shear_upper(1);
        assert!(matches!(continuity_harness(&pi, &wrong_c), Err(Error::MatrixCondition(_))));
        assert!(rep.to_json().contains("\"seed\""));
    }

    #[test]
    fn harness_weight_conditions() {
        let inf = f64::INFINITY;
        let pi = KernelCoeff::exp_pairing(1, 4, c(1.0, 0.0), KernelTag::Kernel).unwrap();
        let mut cfg = small_cfg(Variant::LebOpCont1, inf, 1.0, vec![2.0, 2.0], vec![2.0, 2.0]);
        cfg.omega2 = WeightFn::parse("poly:1").unwrap();
        assert!(matches!(continuity_harness(&pi, &cfg), Err(Error::WeightCondition(_))));
        // Peetre: ⟨z⟩/⟨w⟩ ≤ √2⟨z−w⟩
        cfg.omega1 = WeightFn::parse("poly:1").unwrap();
        cfg.omega = WeightFn::custom("peetre", |x: &[f64]| {
            let (a, b) = (x[0] - x[2], x[1] + x[3]);
            0.5 * (2.0 * (1.0 + a * a + b * b)).ln()
        });
        let rep = continuity_harness(&pi, &cfg).unwrap();
        assert!(rep.weight_constant <= 1.0 + 1e-12 && rep.max_ratio.is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn t0t_round_trip(seed in 0u64..1000, tr in -2.0f64..2.0, ti in -2.0f64..2.0) {
            let k = random_kernel(1, 10, seed, KernelTag::Symbol);
            let t = c(tr, ti);
            prop_assert!(stable_round_trip(&k, t));
        }

        #[test]
        fn t0t_only_reads_lower_sets(a in 0u32..8, b in 0u32..8, pa in 0u32..8, pb in 0u32..8) {
            let probe = KernelCoeff::delta(1, 8, KernelTag::Symbol, &mi(&[pa]), &mi(&[pb])).unwrap();
            let out = t0t_transform(&probe, c(1.3, -0.4)).unwrap();
            let v = out.get(&mi(&[a]), &mi(&[b]));
            if !(pa <= a && pb <= b) {
                prop_assert_eq!(v, c(0.0, 0.0));
            }
        }

        #[test]
        fn kernel_json_round_trip(seed in 0u64..500) {
            let k = random_kernel(2, 3, seed, KernelTag::Kernel);
            prop_assert_eq!(KernelCoeff::from_json(&k.to_json()).unwrap(), k);
        }
    }
}
