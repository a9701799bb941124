//! Bargmann transform in coefficient and quadrature form, Fock evaluation,
//! the reproducing projection, the Gaussian-window STFT, U_𝔙 and SCB.

use crate::apdo::{KernelCoeff, KernelTag};
use crate::coeff::{Basis, CoeffArray, MultiIndex, TruncationSpec, C64};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::hermite::{QuadratureRule, Sampled};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

/// Basis relabelling h_α → e_α.
pub fn bargmann_coeff(c: &CoeffArray) -> Result<CoeffArray> {
    if c.basis != Basis::Hermite {
        return Err(Error::BasisMismatch {
            expected: "hermite",
            found: c.basis.name(),
        });
    }
    Ok(c.clone().with_basis(Basis::Fock))
}

pub fn inverse_bargmann_coeff(c: &CoeffArray) -> Result<CoeffArray> {
    if c.basis != Basis::Fock {
        return Err(Error::BasisMismatch {
            expected: "fock",
            found: c.basis.name(),
        });
    }
    Ok(c.clone().with_basis(Basis::Hermite))
}

/// e_0(z), …, e_n(z) with e_k(z) = z^k/√k!.
pub fn fock_basis(n: usize, z: C64) -> Vec<C64> {
    let mut e = Vec::with_capacity(n + 1);
    e.push(C64::new(1.0, 0.0));
    for k in 1..=n {
        let prev = e[k - 1];
        e.push(prev * z / (k as f64).sqrt());
    }
    e
}

/// e_α(z) = Π_j e_{α_j}(z_j) for every α of a truncation, in enumeration order.
pub fn fock_basis_values(trunc: TruncationSpec, z: &[C64]) -> Vec<C64> {
    if trunc.d == 1 {
        return fock_basis(trunc.n, z[0]);
    }
    let tables: Vec<Vec<C64>> = z.iter().map(|&zj| fock_basis(trunc.n, zj)).collect();
    trunc
        .indices()
        .iter()
        .map(|a| {
            a.0.iter()
                .enumerate()
                .fold(C64::new(1.0, 0.0), |acc, (j, &aj)| acc * tables[j][aj as usize])
        })
        .collect()
}

pub fn fock_eval(c: &CoeffArray, z: &[C64]) -> Result<C64> {
    if c.basis != Basis::Fock {
        return Err(Error::BasisMismatch {
            expected: "fock",
            found: c.basis.name(),
        });
    }
    if z.len() != c.d() {
        return Err(Error::InvalidDimension(z.len()));
    }
    if c.d() == 1 {
        let (mut e, mut acc) = (C64::new(1.0, 0.0), c.values[0]);
        for (k, v) in c.values.iter().enumerate().skip(1) {
            e = e * z[0] / (k as f64).sqrt();
            acc += e * v;
        }
        return Ok(acc);
    }
    Ok(fock_basis_values(c.trunc, z)
        .iter()
        .zip(&c.values)
        .map(|(e, v)| e * v)
        .sum())
}

/// 𝔄_d(z,y) = π^{-d/4} exp(-(⟨z,z⟩+|y|²)/2 + √2⟨z,y⟩), ⟨z,z⟩ without conjugation.
pub fn bargmann_kernel(z: &[C64], y: &[f64]) -> C64 {
    let d = z.len() as f64;
    let mut e = C64::new(0.0, 0.0);
    for (zj, &yj) in z.iter().zip(y) {
        e += -(zj * zj + yj * yj) / 2.0 + SQRT_2 * zj * yj;
    }
    PI.powf(-d / 4.0) * e.exp()
}

/// Largest |z| accepted by the quadrature paths for a rule of order Q.
pub fn quad_radius(rule: &QuadratureRule) -> f64 {
    (rule.q as f64).sqrt() / 2.0
}

fn check_radius(z: &[C64], rule: &QuadratureRule, enforce: bool) -> Result<()> {
    let nz = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if enforce && nz > quad_radius(rule) {
        return Err(Error::OutsideAccuracy(format!(
            "|z|={nz:.3} exceeds sqrt(Q)/2={:.3}",
            quad_radius(rule)
        )));
    }
    Ok(())
}

/// Tensor-product node iterator over `dim` copies of the rule.
fn tensor_nodes(rule: &QuadratureRule, dim: usize) -> impl Iterator<Item = (Vec<usize>, usize)> + '_ {
    let q = rule.q;
    (0..q.pow(dim as u32)).map(move |mut k| {
        let flat = k;
        let mut idx = vec![0; dim];
        for j in (0..dim).rev() {
            idx[j] = k % q;
            k /= q;
        }
        (idx, flat)
    })
}

/// ∫ 𝔄_d(z,y) f(y) dy by tensor Gauss–Hermite.
pub fn bargmann_quad(
    f: &(dyn Fn(&[f64]) -> C64 + Sync),
    z: &[C64],
    rule: &QuadratureRule,
    enforce_radius: bool,
) -> Result<C64> {
    let d = z.len();
    if d == 0 || d > 3 {
        return Err(Error::InvalidDimension(d));
    }
    check_radius(z, rule, enforce_radius)?;
    let mut acc = C64::new(0.0, 0.0);
    let mut y = vec![0.0; d];
    for (idx, _) in tensor_nodes(rule, d) {
        let mut w = 1.0;
        for j in 0..d {
            y[j] = rule.nodes[idx[j]];
            w *= rule.scaled[idx[j]];
        }
        acc += f(&y) * bargmann_kernel(z, &y) * w;
    }
    Ok(acc)
}

/// Nodes and weights of the 2d-dimensional rule for dμ = π^{-d} e^{-|w|²} dλ.
fn mu_nodes(rule: &QuadratureRule, d: usize) -> Vec<(Vec<C64>, f64)> {
    tensor_nodes(rule, 2 * d)
        .map(|(idx, _)| {
            let mut w = PI.powi(-(d as i32));
            let pts = (0..d)
                .map(|j| {
                    w *= rule.weights[idx[j]] * rule.weights[idx[d + j]];
                    C64::new(rule.nodes[idx[j]], rule.nodes[idx[d + j]])
                })
                .collect();
            (pts, w)
        })
        .collect()
}

/// ‖F‖_{A²} = (∫|F|² dμ)^{1/2} by quadrature.
pub fn fock_a2_norm_quad(f: &(dyn Fn(&[C64]) -> C64 + Sync), d: usize, rule: &QuadratureRule) -> Result<f64> {
    if d == 0 || d > 2 {
        return Err(Error::InvalidDimension(d));
    }
    let terms: Vec<f64> = mu_nodes(rule, d)
        .par_iter()
        .map(|(w, wt)| wt * f(w).norm_sqr())
        .collect();
    Ok(terms.iter().sum::<f64>().sqrt())
}

/// (Π_A F)(z) = ∫ F(w) e^{(z,w)} dμ(w), (z,w) = Σ z_j w̄_j.
pub fn reproducing_project(
    f: &(dyn Fn(&[C64]) -> C64 + Sync),
    z: &[C64],
    rule: &QuadratureRule,
    enforce_radius: bool,
) -> Result<C64> {
    let d = z.len();
    if d == 0 || d > 2 {
        return Err(Error::InvalidDimension(d));
    }
    check_radius(z, rule, enforce_radius)?;
    let terms: Vec<C64> = mu_nodes(rule, d)
        .par_iter()
        .map(|(w, wt)| {
            let pair: C64 = z.iter().zip(w).map(|(zj, wj)| zj * wj.conj()).sum();
            f(w) * pair.exp() * *wt
        })
        .collect();
    Ok(terms.iter().sum())
}

/// Row-major contraction of `axis` with a complex `m × shape[axis]` matrix.
pub(crate) fn contract_axis_c(data: &[C64], shape: &[usize], axis: usize, mat: &[C64], m: usize) -> Vec<C64> {
    let n = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![C64::new(0.0, 0.0); outer * m * inner];
    out.par_chunks_mut(m * inner).enumerate().for_each(|(o, block)| {
        for a in 0..m {
            let row = &mat[a * n..(a + 1) * n];
            let dst = &mut block[a * inner..(a + 1) * inner];
            for (j, w) in row.iter().enumerate() {
                if w.re == 0.0 && w.im == 0.0 {
                    continue;
                }
                let src = &data[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (dv, s) in dst.iter_mut().zip(src) {
                    *dv += s * w;
                }
            }
        }
    });
    out
}

/// Integration lattice for the STFT when f is given as a callable.
#[derive(Clone, Copy, Debug)]
pub struct StftQuad {
    pub r: f64,
    pub h: f64,
}

impl Default for StftQuad {
    fn default() -> Self {
        StftQuad { r: 14.0, h: 0.05 }
    }
}

/// V_φ f(x,ξ) = (2π)^{-d/2} ∫ f(y) φ(y−x) e^{-i⟨y,ξ⟩} dy on the grid [−R,R]^{2d}.
///
/// The y-integral is a trapezoid sum, spectrally accurate for the smooth
/// Gaussian-damped integrands involved. Axes run separably.
pub fn stft_gaussian(f: Sampled<'_>, d: usize, r: f64, h: f64, quad: StftQuad) -> Result<GridField> {
    if d == 0 || d > 2 {
        return Err(Error::InvalidDimension(d));
    }
    let (ys, hy, samples): (Vec<f64>, f64, Vec<C64>) = match f {
        Sampled::Fn(func) => {
            let g = GridField::from_fn(d, quad.r, quad.h, func)?;
            (g.coords(), g.h, g.values)
        }
        Sampled::Grid(g) => {
            if g.dim != d {
                return Err(Error::InvalidDimension(g.dim));
            }
            (g.coords(), g.h, g.values.clone())
        }
    };
    let out = GridField::zeros(2 * d, r, h)?;
    let xs = out.coords();
    let n = out.n;
    let ny = ys.len();
    let c0 = PI.powf(-0.25);
    // M[(ix·n + ik), j] = h_y φ(y_j − x_i) e^{−i y_j ξ_k}, from separate window and phase tables
    let win: Vec<f64> = (0..n * ny)
        .map(|m| {
            let t = ys[m % ny] - xs[m / ny];
            hy * c0 * (-t * t / 2.0).exp()
        })
        .collect();
    let phase: Vec<C64> = (0..n * ny).map(|m| C64::from_polar(1.0, -ys[m % ny] * xs[m / ny])).collect();
    let mut mat = vec![C64::new(0.0, 0.0); n * n * ny];
    mat.par_chunks_mut(n * ny).enumerate().for_each(|(i, blk)| {
        let w = &win[i * ny..(i + 1) * ny];
        let live: Vec<usize> = (0..ny).filter(|&j| w[j] >= 1e-300 * hy * c0).collect();
        for k in 0..n {
            let ph = &phase[k * ny..(k + 1) * ny];
            let row = &mut blk[k * ny..(k + 1) * ny];
            for &j in &live {
                row[j] = ph[j] * w[j];
            }
        }
    });
    let mut shape = vec![ny; d];
    let mut data = samples;
    for axis in 0..d {
        data = contract_axis_c(&data, &shape, axis, &mat, n * n);
        shape[axis] = n * n;
    }
    let scale = (2.0 * PI).powf(-(d as f64) / 2.0);
    let mut res = out;
    if d == 1 {
        for (v, s) in res.values.iter_mut().zip(&data) {
            *v = s * scale;
        }
    } else {
        // data index ((ix1,ik1),(ix2,ik2)) → grid (x1,x2,ξ1,ξ2)
        for ix1 in 0..n {
            for ik1 in 0..n {
                for ix2 in 0..n {
                    for ik2 in 0..n {
                        let src = (ix1 * n + ik1) * n * n + ix2 * n + ik2;
                        let dst = res.flat_index(&[ix1, ix2, ik1, ik2]);
                        res.values[dst] = data[src] * scale;
                    }
                }
            }
        }
    }
    Ok(res)
}

fn uv_factor(x: &[f64], xi: &[f64]) -> C64 {
    let d = x.len() as f64;
    let q: f64 = x.iter().chain(xi).map(|v| v * v).sum();
    let s: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
    C64::from_polar((2.0 * PI).powf(d / 2.0) * (q / 2.0).exp(), -s)
}

/// U_𝔙 on node-aligned lattices: the output grid has step h/√2, so every
/// read (√2x, −√2ξ) is a node of the input grid.
pub fn uv_apply(g: &GridField) -> Result<GridField> {
    if g.dim % 2 != 0 {
        return Err(Error::InvalidDimension(g.dim));
    }
    let d = g.dim / 2;
    let mut out = GridField::zeros(g.dim, g.r / SQRT_2, g.h / SQRT_2)?;
    let n = g.n;
    let vals: Vec<C64> = (0..out.len())
        .into_par_iter()
        .map(|k| {
            let mut idx = out.multi_index(k);
            let p: Vec<f64> = idx.iter().map(|&i| out.coord(i)).collect();
            for j in d..2 * d {
                idx[j] = n - 1 - idx[j];
            }
            uv_factor(&p[..d], &p[d..]) * g.get(&idx)
        })
        .collect();
    out.values = vals;
    Ok(out)
}

/// U_𝔙 onto an arbitrary lattice, reading G by multilinear interpolation.
pub fn uv_apply_interp(g: &GridField, r: f64, h: f64) -> Result<GridField> {
    if g.dim % 2 != 0 {
        return Err(Error::InvalidDimension(g.dim));
    }
    let d = g.dim / 2;
    let mut out = GridField::zeros(g.dim, r, h)?;
    let vals: Result<Vec<C64>> = (0..out.len())
        .into_par_iter()
        .map(|k| {
            let p = out.point(k);
            let mut q = p.clone();
            for j in 0..d {
                q[j] = SQRT_2 * p[j];
                q[d + j] = -SQRT_2 * p[d + j];
            }
            Ok(uv_factor(&p[..d], &p[d..]) * g.interp(&q)?)
        })
        .collect();
    out.values = vals?;
    Ok(out)
}

/// (U_𝔙^{-1}F)(u,v) = (2π)^{-d/2} e^{-(|u|²+|v|²)/4} e^{-i⟨u,v⟩/2} F((u−iv)/√2).
pub fn uv_inverse_point(f: &dyn Fn(&[C64]) -> C64, u: &[f64], v: &[f64]) -> C64 {
    let z: Vec<C64> = u.iter().zip(v).map(|(&a, &b)| C64::new(a, -b) / SQRT_2).collect();
    uv_inverse_factor(u, v) * f(&z)
}

/// Sample U_𝔙^{-1}F on [−R,R]^{2d}.
pub fn uv_inverse_fn(f: &(dyn Fn(&[C64]) -> C64 + Sync), d: usize, r: f64, h: f64) -> Result<GridField> {
    GridField::from_fn(2 * d, r, h, |p| uv_inverse_point(f, &p[..d], &p[d..]))
}

/// Inverse of [`uv_apply`] on node-aligned lattices.
pub fn uv_inverse(fz: &GridField) -> Result<GridField> {
    if fz.dim % 2 != 0 {
        return Err(Error::InvalidDimension(fz.dim));
    }
    let d = fz.dim / 2;
    let mut out = GridField::zeros(fz.dim, fz.r * SQRT_2, fz.h * SQRT_2)?;
    let n = fz.n;
    let vals: Vec<C64> = (0..out.len())
        .into_par_iter()
        .map(|k| {
            let mut idx = out.multi_index(k);
            let p: Vec<f64> = idx.iter().map(|&i| out.coord(i)).collect();
            for j in d..2 * d {
                idx[j] = n - 1 - idx[j];
            }
            fz.get(&idx) * uv_inverse_factor(&p[..d], &p[d..])
        })
        .collect();
    out.values = vals;
    Ok(out)
}

fn uv_inverse_factor(u: &[f64], v: &[f64]) -> C64 {
    let d = u.len() as f64;
    let q: f64 = u.iter().chain(v).map(|a| a * a).sum();
    let s: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    C64::from_polar((2.0 * PI).powf(-d / 2.0) * (-q / 4.0).exp(), -s / 2.0)
}

/// Θ_{C,1}∘𝔙 in coefficients: split α = (α₂, α₁) into a two-block tensor.
pub fn scb_transform(c: &CoeffArray, d2: usize, d1: usize) -> Result<KernelCoeff> {
    if c.basis != Basis::Hermite {
        return Err(Error::BasisMismatch {
            expected: "hermite",
            found: c.basis.name(),
        });
    }
    if d2 + d1 != c.d() || d2 == 0 || d1 == 0 {
        return Err(Error::Invalid(format!("split {d2}+{d1} inconsistent with d={}", c.d())));
    }
    let mut k = KernelCoeff::zeros(d2, d1, c.n(), KernelTag::Kernel);
    for (a, v) in c.trunc.indices().iter().zip(&c.values) {
        let (a2, a1) = a.split(d2);
        k.set(&a2, &a1, *v)?;
    }
    Ok(k)
}

/// Inverse of [`scb_transform`], keeping entries with |α₂|+|α₁| ≤ N.
pub fn inverse_scb(k: &KernelCoeff) -> Result<CoeffArray> {
    let t = TruncationSpec::new(k.d2 + k.d1, k.n)?;
    Ok(CoeffArray::from_fn(t, Basis::Hermite, |a: &MultiIndex| {
        let (a2, a1) = a.split(k.d2);
        k.get(&a2, &a1)
    }))
}
