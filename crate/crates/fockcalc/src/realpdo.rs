//! Real pseudo-differential operators on ℝ (d = 1) and their Bargmann picture.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::apdo::{check_exponents, kernel_apply};
use crate::bargmann::{bargmann_coeff, bargmann_kernel, fock_eval, scb_transform, stft_gaussian, uv_inverse_fn, StftQuad};
use crate::coeff::{Basis, CoeffArray, TruncationSpec, C64};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::hermite::{hermite_analyze, hermite_functions, QuadratureRule, Sampled};
use crate::mixednorm::{conjugate_exponent, mixed_norm, MixedNormSpec};
use crate::weights::{ProbeSpec, WeightFn};

pub type SymbolFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;

/// Relative size below which boundary samples count as negligible.
pub const DAMPING_TOL: f64 = 1e-10;

/// a(x,ξ) sampled on [−R,R]², optionally backed by an exact closure.
#[derive(Clone)]
pub struct SymbolField {
    pub grid: GridField,
    pub func: Option<SymbolFn>,
    /// quantization parameter the symbol is meant for, if any
    pub quant: Option<f64>,
}

impl std::fmt::Debug for SymbolField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolField")
            .field("r", &self.grid.r)
            .field("h", &self.grid.h)
            .field("exact", &self.func.is_some())
            .field("quant", &self.quant)
            .finish()
    }
}

impl SymbolField {
    pub const DEFAULT_R: f64 = 8.0;
    pub const DEFAULT_H: f64 = 0.0625;

    pub fn from_fn(f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static, r: f64, h: f64) -> Result<Self> {
        let func: SymbolFn = Arc::new(f);
        let g = func.clone();
        let grid = GridField::from_fn(2, r, h, move |p| g(p[0], p[1]))?;
        Ok(Self { grid, func: Some(func), quant: None })
    }

    pub fn from_grid(grid: GridField) -> Result<Self> {
        if grid.dim != 2 {
            return Err(Error::InvalidDimension(grid.dim));
        }
        Ok(Self { grid, func: None, quant: None })
    }

    pub fn with_quant(mut self, a: f64) -> Self {
        self.quant = Some(a);
        self
    }

    /// Closure if present, otherwise bilinear interpolation; zero outside the hull.
    pub fn eval(&self, x: f64, xi: f64) -> C64 {
        match &self.func {
            Some(f) => f(x, xi),
            None => self.grid.interp(&[x, xi]).unwrap_or(C64::new(0.0, 0.0)),
        }
    }

    pub fn zero(r: f64, h: f64) -> Result<Self> {
        Self::from_fn(|_, _| C64::new(0.0, 0.0), r, h)
    }

    /// exp(−(x−x₀)²/2w_x² − (ξ−ξ₀)²/2w_ξ²)·e^{i(p_x x + p_ξ ξ)}
    pub fn gaussian(center: (f64, f64), widths: (f64, f64), phase: (f64, f64)) -> Result<Self> {
        Self::from_fn(
            move |x, xi| {
                let e = -(x - center.0).powi(2) / (2.0 * widths.0 * widths.0)
                    - (xi - center.1).powi(2) / (2.0 * widths.1 * widths.1);
                C64::from_polar(e.exp(), phase.0 * x + phase.1 * xi)
            },
            Self::DEFAULT_R,
            Self::DEFAULT_H,
        )
    }

    /// h_α(x)·h_β(ξ)
    pub fn hermite_symbol(alpha: usize, beta: usize) -> Result<Self> {
        Self::from_fn(
            move |x, xi| C64::new(hermite_functions(alpha, x)[alpha] * hermite_functions(beta, xi)[beta], 0.0),
            Self::DEFAULT_R,
            Self::DEFAULT_H,
        )
    }

    /// Σ_{α+β≤N} c_{αβ} h_α(x)h_β(ξ) with damped complex Gaussian c.
    pub fn random_bandlimited(seed: u64, n: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for a in 0..=n {
            for b in 0..=n - a {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                terms.push((a, b, C64::new(re, im) * (-0.5 * (a + b) as f64).exp()));
            }
        }
        Self::from_fn(
            move |x, xi| {
                let hx = hermite_functions(n, x);
                let hxi = hermite_functions(n, xi);
                terms.iter().map(|&(a, b, c)| c * hx[a] * hxi[b]).sum()
            },
            Self::DEFAULT_R,
            Self::DEFAULT_H,
        )
    }

    /// Preset by name: `gaussian`, `gaussian:x0,xi0,wx,wxi,px,pxi`, `hermite:a,b`, `random:seed,N`.
    pub fn preset(spec: &str) -> Result<Self> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad symbol argument '{v}'"))))
                .collect::<Result<_>>()?
        };
        match (name, nums.len()) {
            ("gaussian", 0) => Self::gaussian((0.0, 0.0), (1.0, 1.0), (0.0, 0.0)),
            ("gaussian", 6) => Self::gaussian((nums[0], nums[1]), (nums[2], nums[3]), (nums[4], nums[5])),
            ("hermite", 2) => Self::hermite_symbol(nums[0] as usize, nums[1] as usize),
            ("random", 2) => Self::random_bandlimited(nums[0] as u64, nums[1] as usize),
            ("zero", 0) => Self::zero(Self::DEFAULT_R, Self::DEFAULT_H),
            _ => Err(Error::Parse(format!("unknown symbol preset '{spec}'"))),
        }
    }

    fn boundary_ratio(&self) -> f64 {
        let n = self.grid.n;
        let max = self.grid.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let mut b: f64 = 0.0;
        for i in 0..n {
            for idx in [[0, i], [n - 1, i], [i, 0], [i, n - 1]] {
                b = b.max(self.grid.get(&idx).norm());
            }
        }
        b / max
    }
}

fn zero_c() -> C64 {
    C64::new(0.0, 0.0)
}

fn check_line(f: &GridField) -> Result<()> {
    if f.dim != 1 {
        return Err(Error::InvalidDimension(f.dim));
    }
    Ok(())
}

/// (Op_A(a)f)(x) = (2π)^{-1} ∫∫ a(x−A(x−y),ξ) f(y) e^{i(x−y)ξ} dy dξ on the lattice of f.
///
/// The y-sum runs over the nodes of f, the ξ-sum over the ξ-nodes of the
/// symbol grid. The ξ-sum is certified by requiring the partial transform to
/// vanish at the ξ-boundary.
pub fn op_a_apply(a: &SymbolField, amat: f64, f: &GridField) -> Result<GridField> {
    check_line(f)?;
    let xs = f.coords();
    let xis = a.grid.coords();
    let (h, hxi) = (f.h, a.grid.h);
    let nxi = xis.len();
    // e^{-i y ξ} table
    let ph: Vec<C64> = xs.iter().flat_map(|&y| xis.iter().map(move |&xi| C64::from_polar(1.0, -y * xi))).collect();
    // A = 0 factors as a(x,ξ)·Σ_y f(y)e^{-iyξ}
    let fhat: Vec<C64> = if amat == 0.0 {
        (0..nxi).map(|k| xs.iter().enumerate().map(|(j, _)| f.values[j] * ph[j * nxi + k]).sum()).collect()
    } else {
        Vec::new()
    };
    let rows: Vec<(Vec<C64>, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let mut s = vec![zero_c(); nxi];
            if amat == 0.0 {
                for (k, &xi) in xis.iter().enumerate() {
                    s[k] = a.eval(x, xi) * fhat[k];
                }
            }
            for (j, &y) in xs.iter().enumerate().filter(|_| amat != 0.0) {
                let fy = f.values[j];
                if fy == zero_c() {
                    continue;
                }
                let xa = x - amat * (x - y);
                for (k, &xi) in xis.iter().enumerate() {
                    s[k] += a.eval(xa, xi) * fy * ph[j * nxi + k];
                }
            }
            let edge = s[0].norm().max(s[nxi - 1].norm());
            let peak = s.iter().map(|v| v.norm()).fold(0.0, f64::max);
            (s, edge, peak)
        })
        .collect();
    let peak = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let edge = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if peak > 0.0 && edge > DAMPING_TOL * peak {
        return Err(Error::NotCertified(format!(
            "partial transform at the xi boundary is {:.2e} of its peak; widen the symbol grid or damp the symbol",
            edge / peak
        )));
    }
    let mut out = f.clone();
    out.values = rows
        .par_iter()
        .zip(&xs)
        .map(|((s, _, _), &x)| {
            let acc: C64 = s.iter().zip(&xis).map(|(v, &xi)| v * C64::from_polar(1.0, x * xi)).sum();
            acc * (h * hxi / (2.0 * PI))
        })
        .collect();
    Ok(out)
}

/// K_{a,A}(x,y) = (2π)^{-1} ∫ a(x−A(x−y),ξ) e^{i(x−y)ξ} dξ on [−R,R]² with step h.
pub fn kernel_of_symbol(a: &SymbolField, amat: f64, r: f64, h: f64) -> Result<GridField> {
    let mut out = GridField::zeros(2, r, h)?;
    let xs = out.coords();
    let n = out.n;
    let xis = a.grid.coords();
    let nxi = xis.len();
    if a.func.is_none() {
        let (lo, hi) = (-a.grid.r - 1e-12, a.grid.r + 1e-12);
        for &x in [xs[0], xs[n - 1]].iter() {
            for &y in [xs[0], xs[n - 1]].iter() {
                let xa = x - amat * (x - y);
                if xa < lo || xa > hi {
                    return Err(Error::OutsideHull(format!("shear point {xa} outside symbol grid [-{0},{0}]", a.grid.r)));
                }
            }
        }
    }
    let peak = a.grid.max_abs();
    let edge = (0..a.grid.n)
        .map(|i| a.grid.get(&[i, 0]).norm().max(a.grid.get(&[i, nxi - 1]).norm()))
        .fold(0.0, f64::max);
    if peak > 0.0 && edge > DAMPING_TOL * peak {
        return Err(Error::NotCertified(format!("symbol at the xi boundary is {:.2e} of its peak", edge / peak)));
    }
    // e^{i s ξ} for s = (i−j)h
    let phase = |di: isize| -> Vec<C64> { xis.iter().map(|&xi| C64::from_polar(1.0, di as f64 * h * xi)).collect() };
    let table: Vec<Vec<C64>> = (-(n as isize - 1)..n as isize).map(phase).collect();
    let c = a.grid.h / (2.0 * PI);
    out.values = (0..n * n)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / n, flat % n);
            let (x, y) = (xs[i], xs[j]);
            let xa = x - amat * (x - y);
            let ph = &table[i + n - 1 - j];
            let acc: C64 = xis.iter().zip(ph).map(|(&xi, p)| a.eval(xa, xi) * p).sum();
            acc * c
        })
        .collect();
    Ok(out)
}

/// ∫K(x,y)f(y)dy by the trapezoid rule; K and f share the lattice.
pub fn kernel_integrate(k: &GridField, f: &GridField) -> Result<GridField> {
    check_line(f)?;
    if k.dim != 2 || k.n != f.n || (k.h - f.h).abs() > 1e-15 || (k.r - f.r).abs() > 1e-12 {
        return Err(Error::Invalid("kernel and function lattices differ".into()));
    }
    let n = f.n;
    let mut out = f.clone();
    out.values = (0..n)
        .into_par_iter()
        .map(|i| k.values[i * n..(i + 1) * n].iter().zip(&f.values).map(|(a, b)| a * b).sum::<C64>() * f.h)
        .collect();
    Ok(out)
}

fn fft2(data: &mut [C64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
    let mut t = vec![zero_c(); n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = data[i * n + j];
        }
    }
    t.par_chunks_mut(n).for_each(|row| fft.process(row));
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = t[j * n + i];
        }
    }
}

fn is_constant_along(g: &GridField, axis: usize) -> bool {
    let n = g.n;
    let tol = 1e-14 * g.max_abs().max(f64::MIN_POSITIVE);
    (0..n).all(|i| {
        let first = if axis == 0 { g.get(&[0, i]) } else { g.get(&[i, 0]) };
        (1..n).all(|k| {
            let v = if axis == 0 { g.get(&[k, i]) } else { g.get(&[i, k]) };
            (v - first).norm() <= tol
        })
    })
}

/// a₂ = e^{i(A₁−A₂)D_ξD_x} a₁ as a discrete Fourier multiplier on the symbol grid.
pub fn calculi_transform(a: &SymbolField, a1: f64, a2: f64) -> Result<SymbolField> {
    let da = a1 - a2;
    if da == 0.0 || is_constant_along(&a.grid, 0) || is_constant_along(&a.grid, 1) {
        let mut out = a.clone();
        out.quant = Some(a2);
        return Ok(out);
    }
    let b = a.boundary_ratio();
    if b > 1e-8 {
        return Err(Error::Aliasing(format!("symbol does not decay at the grid boundary ({b:.2e} of its peak)")));
    }
    let n = a.grid.n;
    let h = a.grid.h;
    let mut data = a.grid.values.clone();
    fft2(&mut data, n, false);
    let freq = |k: usize| -> (f64, usize) {
        let s = if k <= n / 2 { k as isize } else { k as isize - n as isize };
        (2.0 * PI * s as f64 / (n as f64 * h), s.unsigned_abs())
    };
    let peak = data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let band = (0.9 * (n / 2) as f64) as usize;
    let mut nyq: f64 = 0.0;
    for i in 0..n {
        let (ex, ax) = freq(i);
        for j in 0..n {
            let (ey, ay) = freq(j);
            let v = &mut data[i * n + j];
            if ax > band || ay > band {
                nyq = nyq.max(v.norm());
            }
            *v *= C64::from_polar(1.0 / (n * n) as f64, da * ex * ey);
        }
    }
    if peak > 0.0 && nyq > 1e-8 * peak {
        return Err(Error::Aliasing(format!("spectral mass near Nyquist is {:.2e} of the peak", nyq / peak)));
    }
    fft2(&mut data, n, true);
    let mut grid = a.grid.clone();
    grid.values = data;
    Ok(SymbolField { grid, func: None, quant: Some(a2) })
}

// ---------------------------------------------------------------------------
// STFT/kernel transfer

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TransferConvention {
    /// window π^{-1/2}e^{ixξ}e^{-(x²+ξ²)/2} conjugated inside V_φ, prefactor 2^{1/2}
    Printed,
    /// window π^{-1/2}e^{-ixξ}e^{-(x²+ξ²)/2} conjugated inside V_φ, prefactor (2π)^{1/2}
    Conjugated,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub convention: TransferConvention,
    pub max_dev: f64,
    pub max_lhs: f64,
    /// least-squares c in lhs ≈ c·rhs
    pub fitted_re: f64,
    pub fitted_im: f64,
    /// max |lhs − c·rhs| after the fit
    pub fit_residual: f64,
}

/// e^{-(|z|²+|w|²)/2} ∫∫ 𝔄(z,x) K(x,y) 𝔄(w̄,y) dx dy on the lattice of K.
pub fn transfer_lhs(k: &GridField, z: C64, w: C64) -> C64 {
    let xs = k.coords();
    let n = k.n;
    let bz: Vec<C64> = xs.iter().map(|&x| bargmann_kernel(&[z], &[x])).collect();
    let bw: Vec<C64> = xs.iter().map(|&y| bargmann_kernel(&[w.conj()], &[y])).collect();
    let mut acc = zero_c();
    for i in 0..n {
        let row = &k.values[i * n..(i + 1) * n];
        let s: C64 = row.iter().zip(&bw).map(|(a, b)| a * b).sum();
        acc += bz[i] * s;
    }
    acc * k.h * k.h * (-(z.norm_sqr() + w.norm_sqr()) / 2.0).exp()
}

/// (2π)^{-1} ∫ a(Y) conj(Φ(Y−X)) e^{-i⟨Y,Ξ⟩} dY with Φ = π^{-1/2}e^{s·i y₁y₂}e^{-|y|²/2}.
fn window_stft(a: &GridField, x: [f64; 2], xi: [f64; 2], sgn: f64) -> C64 {
    let ys = a.coords();
    let n = a.n;
    let c0 = 1.0 / PI.sqrt();
    let mut acc = zero_c();
    for i in 0..n {
        let u = ys[i] - x[0];
        let gu = (-u * u / 2.0).exp();
        if gu < 1e-300 {
            continue;
        }
        for j in 0..n {
            let v = ys[j] - x[1];
            let g = gu * (-v * v / 2.0).exp();
            if g < 1e-300 {
                continue;
            }
            // conj(Φ) = π^{-1/2}e^{-s·iuv}e^{-(u²+v²)/2}
            let ph = -sgn * u * v - ys[i] * xi[0] - ys[j] * xi[1];
            acc += a.values[i * n + j] * C64::from_polar(c0 * g, ph);
        }
    }
    acc * a.h * a.h / (2.0 * PI)
}

/// Right-hand side of the transfer identity at (z,w) = (x+iξ, y+iη).
pub fn transfer_rhs(a: &SymbolField, z: C64, w: C64, conv: TransferConvention) -> C64 {
    let (x, xi, y, eta) = (z.re, z.im, w.re, w.im);
    let (sgn, pref) = match conv {
        TransferConvention::Printed => (1.0, SQRT_2),
        TransferConvention::Conjugated => (-1.0, (2.0 * PI).sqrt()),
    };
    let v = window_stft(&a.grid, [SQRT_2 * x, -SQRT_2 * eta], [SQRT_2 * (eta - xi), SQRT_2 * (y - x)], sgn);
    v * C64::from_polar(pref, -(x * (xi - 2.0 * eta) + y * eta))
}

/// Both sides of the STFT/kernel transfer identity on the probes (A = 0).
pub fn stft_kernel_transfer_check(
    a: &SymbolField,
    probes: &[(C64, C64)],
    conv: TransferConvention,
) -> Result<TransferReport> {
    if probes.is_empty() {
        return Err(Error::Invalid("no probes".into()));
    }
    let k = kernel_of_symbol(a, 0.0, 8.0, 0.125)?;
    let pairs: Vec<(C64, C64)> = probes
        .par_iter()
        .map(|&(z, w)| (transfer_lhs(&k, z, w), transfer_rhs(a, z, w, conv)))
        .collect();
    let max_dev = pairs.iter().map(|(l, r)| (l - r).norm()).fold(0.0, f64::max);
    let max_lhs = pairs.iter().map(|(l, _)| l.norm()).fold(0.0, f64::max);
    let den: f64 = pairs.iter().map(|(_, r)| r.norm_sqr()).sum();
    let c = if den > 0.0 { pairs.iter().map(|(l, r)| r.conj() * l).sum::<C64>() / den } else { zero_c() };
    let fit_residual = pairs.iter().map(|(l, r)| (l - c * r).norm()).fold(0.0, f64::max);
    Ok(TransferReport { convention: conv, max_dev, max_lhs, fitted_re: c.re, fitted_im: c.im, fit_residual })
}

/// Probes with |z|,|w| ≤ radius from a seeded generator.
pub fn disk_probes(count: usize, radius: f64, seed: u64) -> Vec<(C64, C64)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let r = radius * rng.random::<f64>().sqrt();
        C64::from_polar(r, 2.0 * PI * rng.random::<f64>())
    };
    (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

// ---------------------------------------------------------------------------
// Bargmann diagram and modulation-space harness

/// Lattices and truncations used by the diagram check.
#[derive(Clone, Debug, Serialize)]
pub struct DiagramConfig {
    /// f, kernel and phase-space lattice [−R,R] with step h
    pub r: f64,
    pub h: f64,
    /// Hermite truncation of the kernel on ℝ²
    pub n_kernel: usize,
    /// 4-D lattice for ‖a‖_{M^{p,q}}
    pub symbol_grid: (f64, f64),
}

impl Default for DiagramConfig {
    fn default() -> Self {
        Self { r: 8.0, h: 0.125, n_kernel: 60, symbol_grid: (6.0, 0.375) }
    }
}

/// Hermite-analyzed Bargmann kernel K₀ of Op(a), on the truncation `n`.
pub fn bargmann_kernel_of_symbol(a: &SymbolField, cfg: &DiagramConfig) -> Result<crate::apdo::KernelCoeff> {
    let k = kernel_of_symbol(a, 0.0, cfg.r, cfg.h)?;
    let rule = QuadratureRule::default_for(cfg.n_kernel)?;
    let ck = hermite_analyze(Sampled::Grid(&k), TruncationSpec { d: 2, n: cfg.n_kernel }, &rule)?;
    scb_transform(&ck, 1, 1)
}

/// V_φ(Op(a)f) two ways: direct STFT of the grid output, and U_𝔙^{-1} of T_{K₀}𝔙f.
pub struct DiagramSides {
    pub direct: GridField,
    pub bargmann: GridField,
}

pub fn diagram_sides(
    a: &SymbolField,
    k0: &crate::apdo::KernelCoeff,
    f: &CoeffArray,
    cfg: &DiagramConfig,
) -> Result<DiagramSides> {
    if f.basis != Basis::Hermite || f.d() != 1 {
        return Err(Error::Invalid("f must be a one-dimensional Hermite series".into()));
    }
    let fg = GridField::from_fn(1, cfg.r, cfg.h, |p| crate::hermite::hermite_synthesize(f, p).unwrap_or(zero_c()))?;
    let g = op_a_apply(a, 0.0, &fg)?;
    let direct = stft_gaussian(Sampled::Grid(&g), 1, cfg.r, cfg.h, StftQuad::default())?;
    let big = f.retruncate(k0.n);
    let tf = kernel_apply(k0, &bargmann_coeff(&big)?)?;
    let func = |z: &[C64]| fock_eval(&tf, z).unwrap_or(zero_c());
    let bargmann = uv_inverse_fn(&func, 1, cfg.r, cfg.h)?;
    Ok(DiagramSides { direct, bargmann })
}

fn weighted(mut g: GridField, omega: &WeightFn) -> GridField {
    if !omega.is_one() {
        g = g.map_with_point(|p, v| v * omega.eval(p));
    }
    g
}

/// ‖a‖ of a symbol in M^{p,q}_{(ω₀)} (or W^{p,q} when `wiener`), 4-D STFT (x,ξ,η,y).
pub fn symbol_mod_norm(a: &SymbolField, p: f64, q: f64, omega0: &WeightFn, wiener: bool, grid: (f64, f64)) -> Result<f64> {
    let v = stft_gaussian(Sampled::Grid(&a.grid), 2, grid.0, grid.1, StftQuad::default())?;
    let spec = if wiener { MixedNormSpec::lpq_star(2, p, q)? } else { MixedNormSpec::lpq(2, p, q)? };
    mixed_norm(&weighted(v, omega0), &spec)
}

/// Which continuity statement the harness checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PseudoVariant {
    /// M^{𝐩₁} → M^{𝐩₂} with a ∈ M^{p,q}
    Modulation,
    /// M^{q′,p′} → W^{p,q} with a ∈ W^{p,q}
    Wiener,
}

#[derive(Clone, Debug)]
pub struct PseudoConfig {
    pub variant: PseudoVariant,
    pub amat: f64,
    pub p: f64,
    pub q: f64,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub omega0: WeightFn,
    pub omega1: WeightFn,
    pub omega2: WeightFn,
    pub ensemble: usize,
    pub seed: u64,
    /// Hermite degree of the random f
    pub f_degree: usize,
    /// Extra input exponent vectors (standard basis) for the nesting check.
    pub relaxed_inputs: Vec<Vec<f64>>,
    pub diagram: DiagramConfig,
}

impl PseudoConfig {
    pub fn modulation(p: f64, q: f64, p1: Vec<f64>, p2: Vec<f64>) -> Self {
        Self {
            variant: PseudoVariant::Modulation,
            amat: 0.0,
            p,
            q,
            p1,
            p2,
            omega0: WeightFn::one(),
            omega1: WeightFn::one(),
            omega2: WeightFn::one(),
            ensemble: 10,
            seed: 1,
            f_degree: 12,
            relaxed_inputs: Vec::new(),
            diagram: DiagramConfig::default(),
        }
    }

    /// The exponent pattern M^{q′,p′} → W^{p,q}.
    pub fn wiener(p: f64, q: f64) -> Self {
        let (pc, qc) = (conjugate_exponent(p), conjugate_exponent(q));
        let mut c = Self::modulation(p, q, vec![qc, pc], vec![p, q]);
        c.variant = PseudoVariant::Wiener;
        c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PseudoReport {
    pub variant: PseudoVariant,
    pub amat: f64,
    pub p: f64,
    pub q: f64,
    pub symbol_norm: f64,
    pub direct_norms: Vec<f64>,
    pub bargmann_norms: Vec<f64>,
    pub input_norms: Vec<f64>,
    /// max over f of |direct − bargmann| / max(direct, tiny)
    pub max_path_gap: f64,
    pub max_ratio: f64,
    /// (input exponents, max ratio with that input norm)
    pub relaxed: Vec<(Vec<f64>, f64)>,
    pub weight_constant: f64,
    pub ensemble: usize,
    pub seed: u64,
}

impl PseudoReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

/// Random Hermite series of degree ≤ n, unit ℓ².
pub fn random_hermite(n: usize, seed: u64) -> CoeffArray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = CoeffArray::from_fn(TruncationSpec { d: 1, n }, Basis::Hermite, |_| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let s = c.l2_norm();
    c = c.scale(C64::new(1.0 / s, 0.0));
    c
}

/// Probe ω₂(x−Ay, ξ+(1−A)η)/ω₁(x+(1−A)y, ξ−Aη) against ω₀(x,ξ,η,y).
pub fn pseudo_weight_check(omega0: &WeightFn, omega1: &WeightFn, omega2: &WeightFn, amat: f64) -> Result<f64> {
    if omega0.is_one() && omega1.is_one() && omega2.is_one() {
        return Ok(1.0);
    }
    let spec = ProbeSpec { dim: 4, radii: vec![4.0, 8.0, 16.0], per_axis: 9 };
    let mut per_radius = Vec::new();
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    for &radius in &spec.radii {
        let best = spec
            .lattice(radius)
            .into_par_iter()
            .map(|pt| {
                let (x, xi, eta, y) = (pt[0], pt[1], pt[2], pt[3]);
                let v = omega2.ln_eval(&[x - amat * y, xi + (1.0 - amat) * eta])
                    - omega1.ln_eval(&[x + (1.0 - amat) * y, xi - amat * eta])
                    - omega0.ln_eval(&pt);
                (v, pt)
            })
            .reduce(|| (f64::NEG_INFINITY, Vec::new()), |a, b| if b.0 > a.0 { b } else { a });
        per_radius.push(best.0);
        worst = best;
    }
    if per_radius[2] - per_radius[1] > 0.5 * std::f64::consts::LN_2 && per_radius[1] > per_radius[0] {
        return Err(Error::WeightCondition(format!(
            "weight quotient grows: {:.3e} at (x,xi,eta,y)={:?}",
            worst.0.exp(),
            worst.1
        )));
    }
    Ok(per_radius.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp())
}

/// ‖Op_A(a)f‖ in the output space two ways, and the ratio to ‖a‖·‖f‖.
pub fn pseudo_mod_harness(a: &SymbolField, cfg: &PseudoConfig) -> Result<PseudoReport> {
    match cfg.variant {
        PseudoVariant::Modulation => check_exponents(cfg.p, cfg.q, &cfg.p1, &cfg.p2)?,
        PseudoVariant::Wiener => {
            for e in [cfg.p, cfg.q] {
                if !(e >= 1.0) {
                    return Err(Error::ExponentRelation(format!("exponent {e} outside [1,inf]")));
                }
            }
        }
    }
    if cfg.p1.len() != 2 || cfg.p2.len() != 2 {
        return Err(Error::ExponentRelation("d = 1 needs two exponents per space".into()));
    }
    let weight_constant = pseudo_weight_check(&cfg.omega0, &cfg.omega1, &cfg.omega2, cfg.amat)?;
    let a0 = if cfg.amat != 0.0 { calculi_transform(a, cfg.amat, 0.0)? } else { a.clone() };
    let wiener = cfg.variant == PseudoVariant::Wiener;
    let symbol_norm = symbol_mod_norm(&a0, cfg.p, cfg.q, &cfg.omega0, wiener, cfg.diagram.symbol_grid)?;
    let in_spec = MixedNormSpec::standard(cfg.p1.clone())?;
    let out_spec = if wiener {
        MixedNormSpec::lpq_star(1, cfg.p2[0], cfg.p2[1])?
    } else {
        MixedNormSpec::standard(cfg.p2.clone())?
    };
    let k0 = bargmann_kernel_of_symbol(&a0, &cfg.diagram)?;
    let mut direct_norms = Vec::new();
    let mut bargmann_norms = Vec::new();
    let mut input_norms = Vec::new();
    let (mut gap, mut ratio) = (0.0f64, 0.0f64);
    let relaxed_specs: Vec<MixedNormSpec> =
        cfg.relaxed_inputs.iter().map(|e| MixedNormSpec::standard(e.clone())).collect::<Result<_>>()?;
    let mut relaxed_max = vec![0.0f64; relaxed_specs.len()];
    for k in 0..cfg.ensemble {
        let f = random_hermite(cfg.f_degree, cfg.seed.wrapping_mul(1000).wrapping_add(k as u64));
        let sides = diagram_sides(&a0, &k0, &f, &cfg.diagram)?;
        let dn = mixed_norm(&weighted(sides.direct, &cfg.omega2), &out_spec)?;
        let bn = mixed_norm(&weighted(sides.bargmann, &cfg.omega2), &out_spec)?;
        let fg = GridField::from_fn(1, cfg.diagram.r, cfg.diagram.h, |p| {
            crate::hermite::hermite_synthesize(&f, p).unwrap_or(zero_c())
        })?;
        let vf = stft_gaussian(Sampled::Grid(&fg), 1, cfg.diagram.r, cfg.diagram.h, StftQuad::default())?;
        let vf = weighted(vf, &cfg.omega1);
        let inn = mixed_norm(&vf, &in_spec)?;
        gap = gap.max((dn - bn).abs() / dn.max(1e-300));
        let r = |n: f64| if dn == 0.0 { 0.0 } else { dn / (symbol_norm * n) };
        ratio = ratio.max(r(inn));
        for (slot, spec) in relaxed_max.iter_mut().zip(&relaxed_specs) {
            *slot = slot.max(r(mixed_norm(&vf, spec)?));
        }
        direct_norms.push(dn);
        bargmann_norms.push(bn);
        input_norms.push(inn);
    }
    if symbol_norm == 0.0 {
        gap = 0.0;
    }
    Ok(PseudoReport {
        variant: cfg.variant,
        amat: cfg.amat,
        p: cfg.p,
        q: cfg.q,
        symbol_norm,
        direct_norms,
        bargmann_norms,
        input_norms,
        max_path_gap: gap,
        max_ratio: ratio,
        relaxed: cfg.relaxed_inputs.iter().cloned().zip(relaxed_max).collect(),
        weight_constant,
        ensemble: cfg.ensemble,
        seed: cfg.seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpOpReport {
    pub amat: f64,
    pub norm_a: f64,
    pub norm_ta: f64,
    pub ratio: f64,
}

/// ‖e^{iA D_ξ D_x}a‖_{M^{p,q}_{(ω_A)}} against ‖a‖_{M^{p,q}_{(ω)}}, ω_A(x,ξ,η,y) = ω(x+Ay, ξ+Aη, η, y).
pub fn exp_op_stft_check(a: &SymbolField, amat: f64, p: f64, q: f64, omega: &WeightFn, grid: (f64, f64)) -> Result<ExpOpReport> {
    let ta = calculi_transform(a, amat, 0.0)?;
    let om = omega.clone();
    let omega_a = if omega.is_one() {
        WeightFn::one()
    } else {
        WeightFn::custom("omega_A", move |p: &[f64]| om.ln_eval(&[p[0] + amat * p[3], p[1] + amat * p[2], p[2], p[3]]))
    };
    let norm_a = symbol_mod_norm(a, p, q, omega, false, grid)?;
    let norm_ta = symbol_mod_norm(&ta, p, q, &omega_a, false, grid)?;
    Ok(ExpOpReport { amat, norm_a, norm_ta, ratio: norm_ta / norm_a })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_f(r: f64, h: f64) -> GridField {
        GridField::from_fn(1, r, h, |p| C64::from_polar((-(p[0] - 0.5).powi(2) / 2.0).exp(), 0.7 * p[0])).unwrap()
    }

    fn one_symbol() -> SymbolField {
        SymbolField::from_fn(|_, _| C64::new(1.0, 0.0), 8.0, 0.0625).unwrap()
    }

    #[test]
    fn identity_and_derivative() {
        let f = gauss_f(8.0, 0.125);
        for am in [0.0, 0.5, 1.0] {
            let g = op_a_apply(&one_symbol(), am, &f).unwrap();
            assert!(g.max_abs_diff(&f).unwrap() < 1e-6);
        }
        let xi = SymbolField::from_fn(|_, xi| C64::new(xi, 0.0), 8.0, 0.0625).unwrap();
        let g = op_a_apply(&xi, 0.0, &f).unwrap();
        // −i f′ for f = e^{-(x−½)²/2 + 0.7ix}
        let want = f.map_with_point(|p, v| -C64::i() * v * C64::new(-(p[0] - 0.5), 0.7));
        assert!(g.max_abs_diff(&want).unwrap() < 1e-5);
        let z = f.map(|_| zero_c());
        assert_eq!(op_a_apply(&xi, 0.0, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn undamped_integrand_is_rejected() {
        // a narrow f has a wide spectrum that the ξ-range [−3,3] cuts off
        let f = GridField::from_fn(1, 8.0, 0.125, |p| C64::new((-p[0] * p[0] * 20.0).exp(), 0.0)).unwrap();
        let cut = SymbolField::from_fn(|_, _| C64::new(1.0, 0.0), 3.0, 0.0625).unwrap();
        assert!(matches!(op_a_apply(&cut, 0.0, &f), Err(Error::NotCertified(_))));
        let k = kernel_of_symbol(&cut, 0.0, 2.0, 0.125);
        assert!(matches!(k, Err(Error::NotCertified(_))));
    }

    #[test]
    fn kernel_paths_agree() {
        let a = SymbolField::gaussian((0.3, -0.2), (1.2, 0.9), (0.4, 0.0)).unwrap();
        let f = gauss_f(8.0, 0.125);
        for am in [0.0, 0.5] {
            let k = kernel_of_symbol(&a, am, 8.0, 0.125).unwrap();
            let via_k = kernel_integrate(&k, &f).unwrap();
            let direct = op_a_apply(&a, am, &f).unwrap();
            assert!(via_k.max_abs_diff(&direct).unwrap() < 1e-5);
        }
        let zero = SymbolField::zero(8.0, 0.0625).unwrap();
        assert_eq!(kernel_of_symbol(&zero, 0.0, 8.0, 0.125).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn separable_kernel_closed_form() {
        // a = g(x)e^{-ξ²/2} gives K = (2π)^{-1/2} g(x−A(x−y)) e^{-(x−y)²/2}
        let g = |x: f64| (-(x - 0.4) * (x - 0.4) / 3.0).exp();
        let a = SymbolField::from_fn(move |x, xi| C64::new(g(x) * (-xi * xi / 2.0).exp(), 0.0), 8.0, 0.0625).unwrap();
        for am in [0.0, 0.5, 0.25] {
            let k = kernel_of_symbol(&a, am, 6.0, 0.125).unwrap();
            let want = GridField::from_fn(2, 6.0, 0.125, |p| {
                let (x, y) = (p[0], p[1]);
                C64::new(g(x - am * (x - y)) * (-(x - y) * (x - y) / 2.0).exp() / (2.0 * PI).sqrt(), 0.0)
            })
            .unwrap();
            assert!(k.max_abs_diff(&want).unwrap() < 1e-10);
        }
    }

    #[test]
    fn kernel_of_grid_symbol_rejects_outside_hull() {
        let a = SymbolField::gaussian((0.0, 0.0), (1.0, 1.0), (0.0, 0.0)).unwrap();
        let g = SymbolField::from_grid(a.grid.clone()).unwrap();
        assert!(matches!(kernel_of_symbol(&g, 2.0, 8.0, 0.125), Err(Error::OutsideHull(_))));
        assert!(kernel_of_symbol(&g, 0.5, 8.0, 0.125).is_ok());
    }

    #[test]
    fn calculi_transform_examples() {
        let a = SymbolField::gaussian((0.2, 0.1), (1.0, 0.8), (0.3, -0.5)).unwrap();
        let same = calculi_transform(&a, 0.5, 0.5).unwrap();
        assert_eq!(same.grid, a.grid);
        let x = SymbolField::from_fn(|x, _| C64::new(x, 0.0), 8.0, 0.0625).unwrap();
        assert_eq!(calculi_transform(&x, 0.0, 0.5).unwrap().grid, x.grid);
        let there = calculi_transform(&a, 0.0, 0.5).unwrap();
        let back = calculi_transform(&there, 0.5, 0.0).unwrap();
        assert!(back.grid.max_abs_diff(&a.grid).unwrap() < 1e-8);
        assert!(there.grid.max_abs_diff(&a.grid).unwrap() > 1e-3);
        let rough = SymbolField::from_fn(|x, xi| C64::new((-(x * x + xi * xi) / 2.0).exp() * (40.0 * x).cos(), 0.0), 8.0, 0.0625)
            .unwrap();
        assert!(matches!(calculi_transform(&rough, 0.0, 0.5), Err(Error::Aliasing(_))));
    }

    #[test]
    fn calculi_transform_of_product_matches_closed_form() {
        // e^{iA D_ξ D_x}(x·e^{-ξ²/2}·e^{-x²/2}) against the series e^{iA∂∂}: with
        // a = e^{-(x²+ξ²)/2}, the transform is (1+A²)^{-1/2} exp(−(x²+ξ²+2iAxξ)/(2(1+A²)))
        let a = SymbolField::gaussian((0.0, 0.0), (1.0, 1.0), (0.0, 0.0)).unwrap();
        let am = 0.5;
        let t = calculi_transform(&a, am, 0.0).unwrap();
        let s = 1.0 + am * am;
        let want = GridField::from_fn(2, 8.0, 0.0625, |p| {
            let (x, xi) = (p[0], p[1]);
            C64::new(-(x * x + xi * xi) / (2.0 * s), -am * x * xi / s).exp() / s.sqrt()
        })
        .unwrap();
        assert!(t.grid.max_abs_diff(&want).unwrap() < 1e-10);
    }

    #[test]
    fn quantization_covariance() {
        let a = SymbolField::gaussian((0.2, 0.1), (1.0, 0.8), (0.3, -0.5)).unwrap();
        let f = gauss_f(8.0, 0.125);
        let a2 = calculi_transform(&a, 0.0, 0.5).unwrap();
        let lhs = op_a_apply(&a, 0.0, &f).unwrap();
        let rhs = op_a_apply(&a2, 0.5, &f).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-5);
    }

    #[test]
    fn transfer_conventions() {
        let a = SymbolField::gaussian((0.3, -0.2), (1.0, 1.0), (0.4, 0.0)).unwrap();
        let probes = disk_probes(8, 1.5, 3);
        let c = stft_kernel_transfer_check(&a, &probes, TransferConvention::Conjugated).unwrap();
        assert!(c.max_dev < 1e-6, "{c:?}");
        assert!((c.fitted_re - 1.0).abs() < 1e-6 && c.fitted_im.abs() < 1e-6);
        let p = stft_kernel_transfer_check(&a, &probes, TransferConvention::Printed).unwrap();
        assert!(p.max_dev > 1e-3 && p.fit_residual > 1e-3, "{p:?}");
        let z = SymbolField::zero(8.0, 0.0625).unwrap();
        let r = stft_kernel_transfer_check(&z, &probes, TransferConvention::Printed).unwrap();
        assert_eq!(r.max_dev, 0.0);
    }

    #[test]
    fn diagram_commutes() {
        let a = SymbolField::gaussian((0.2, 0.0), (1.0, 1.0), (0.0, 0.3)).unwrap();
        let cfg = DiagramConfig::default();
        let k0 = bargmann_kernel_of_symbol(&a, &cfg).unwrap();
        let f = random_hermite(8, 4);
        let s = diagram_sides(&a, &k0, &f, &cfg).unwrap();
        assert!(s.direct.max_abs_diff(&s.bargmann).unwrap() < 1e-4 * s.direct.max_abs());
    }

    #[test]
    fn pseudo_harness_examples() {
        let inf = f64::INFINITY;
        let a = SymbolField::gaussian((0.0, 0.0), (1.0, 1.0), (0.0, 0.0)).unwrap();
        let mut cfg = PseudoConfig::modulation(inf, 1.0, vec![2.0, 2.0], vec![2.0, 2.0]);
        cfg.ensemble = 3;
        let rep = pseudo_mod_harness(&a, &cfg).unwrap();
        assert!(rep.max_path_gap < 1e-4, "{}", rep.max_path_gap);
        assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
        let z = SymbolField::zero(8.0, 0.0625).unwrap();
        let rz = pseudo_mod_harness(&z, &cfg).unwrap();
        assert!(rz.direct_norms.iter().chain(&rz.bargmann_norms).all(|&v| v == 0.0) && rz.symbol_norm == 0.0);
        let bad = PseudoConfig::modulation(2.0, 1.0, vec![2.0, 2.0], vec![2.0, 2.0]);
        assert!(matches!(pseudo_mod_harness(&a, &bad), Err(Error::ExponentRelation(_))));
        let mut wb = cfg.clone();
        wb.omega2 = WeightFn::parse("poly:1").unwrap();
        assert!(matches!(pseudo_mod_harness(&a, &wb), Err(Error::WeightCondition(_))));
    }

    #[test]
    fn exp_op_ratio_is_bounded() {
        let a = SymbolField::gaussian((0.2, 0.1), (1.0, 0.8), (0.3, -0.5)).unwrap();
        let inf = f64::INFINITY;
        for (p, q) in [(2.0, 2.0), (inf, 1.0)] {
            let r = exp_op_stft_check(&a, 0.5, p, q, &WeightFn::one(), (6.0, 0.375)).unwrap();
            assert!(r.ratio > 0.5 && r.ratio < 2.0, "{r:?}");
        }
    }
}
