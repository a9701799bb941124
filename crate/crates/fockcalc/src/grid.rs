//! Sampled complex fields on uniform cubic grids.
//!
//! A grid of dimension `dim` has `n = 2m+1` nodes per axis at `-R + i h`,
//! `R = m h`, stored row-major (last axis fastest). Fields over ℂ^d use
//! `dim = 2d` with axes ordered `(x_1..x_d, ξ_1..ξ_d)`, i.e. `z = x + iξ`.

use crate::coeff::C64;
use crate::error::{Error, Result};
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub dim: usize,
    pub r: f64,
    pub h: f64,
    pub n: usize,
    pub values: Vec<C64>,
}

pub const GRID_MAGIC: &[u8; 4] = b"GFLD";

impl GridField {
    pub fn zeros(dim: usize, r: f64, h: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(h > 0.0) || !(r >= 0.0) {
            return Err(Error::Invalid(format!("grid needs h>0, R>=0 (R={r}, h={h})")));
        }
        let m = (r / h).round();
        if (m * h - r).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::Invalid(format!("R={r} is not a multiple of h={h}")));
        }
        let n = 2 * m as usize + 1;
        let total = n
            .checked_pow(dim as u32)
            .filter(|&t| t <= 400_000_000)
            .ok_or_else(|| Error::Invalid(format!("grid too large: {n}^{dim}")))?;
        Ok(GridField {
            dim,
            r,
            h,
            n,
            values: vec![C64::new(0.0, 0.0); total],
        })
    }

    pub fn from_fn<F>(dim: usize, r: f64, h: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let mut g = Self::zeros(dim, r, h)?;
        let (n, r0, h0) = (g.n, g.r, g.h);
        g.values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(row, chunk)| {
                let mut p = vec![0.0; dim];
                let mut rem = row;
                for k in (0..dim - 1).rev() {
                    p[k] = -r0 + (rem % n) as f64 * h0;
                    rem /= n;
                }
                for (i, v) in chunk.iter_mut().enumerate() {
                    p[dim - 1] = -r0 + i as f64 * h0;
                    *v = f(&p);
                }
            });
        Ok(g)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.r + i as f64 * self.h
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            idx[k] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().map(|&i| self.coord(i)).collect()
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.values[self.flat_index(idx)]
    }

    /// Multilinear interpolation; exact at nodes.
    pub fn interp(&self, p: &[f64]) -> Result<C64> {
        if p.len() != self.dim {
            return Err(Error::InvalidDimension(p.len()));
        }
        let mut base = vec![0usize; self.dim];
        let mut frac = vec![0.0; self.dim];
        for k in 0..self.dim {
            let t = (p[k] + self.r) / self.h;
            let tol = 1e-9;
            if t < -tol || t > (self.n - 1) as f64 + tol {
                return Err(Error::OutsideHull(format!("{:?}", p)));
            }
            let t = t.clamp(0.0, (self.n - 1) as f64);
            let mut i = t.floor() as usize;
            if i >= self.n - 1 {
                i = self.n.saturating_sub(2);
            }
            base[k] = i;
            frac[k] = if self.n == 1 { 0.0 } else { t - i as f64 };
        }
        let mut acc = C64::new(0.0, 0.0);
        let corners = 1usize << self.dim;
        let mut idx = vec![0usize; self.dim];
        for c in 0..corners {
            let mut w = 1.0;
            for k in 0..self.dim {
                let hi = (c >> k) & 1 == 1;
                w *= if hi { frac[k] } else { 1.0 - frac[k] };
                idx[k] = (base[k] + hi as usize).min(self.n - 1);
            }
            if w != 0.0 {
                acc += self.get(&idx) * w;
            }
        }
        Ok(acc)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64 + Sync) -> GridField {
        GridField {
            values: self.values.par_iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Pointwise map with access to node coordinates.
    pub fn map_with_point(&self, f: impl Fn(&[f64], C64) -> C64 + Sync) -> GridField {
        let values = (0..self.len())
            .into_par_iter()
            .map(|k| f(&self.point(k), self.values[k]))
            .collect();
        GridField {
            values,
            ..self.clone()
        }
    }

    pub fn same_lattice(&self, other: &GridField) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && (self.r - other.r).abs() < 1e-12
            && (self.h - other.h).abs() < 1e-12
    }

    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        if !self.same_lattice(other) {
            return Err(Error::Invalid("grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Binary form: magic, dim, n (u32 LE), R, h (f64 LE), then re/im pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 16 * self.len());
        out.extend_from_slice(GRID_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&self.r.to_le_bytes());
        out.extend_from_slice(&self.h.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("grid file: {m}"));
        if b.len() < 28 || &b[..4] != GRID_MAGIC {
            return Err(bad("missing header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        let dim = u32_at(4);
        let n = u32_at(8);
        let r = f64_at(12);
        let h = f64_at(20);
        let mut g = GridField::zeros(dim, r, h)?;
        if g.n != n {
            return Err(bad("node count disagrees with R/h"));
        }
        if b.len() != 28 + 16 * g.len() {
            return Err(bad("payload length"));
        }
        for (k, v) in g.values.iter_mut().enumerate() {
            let o = 28 + 16 * k;
            *v = C64::new(f64_at(o), f64_at(o + 8));
        }
        Ok(g)
    }

    /// CSV of the slice along `axis` through the origin.
    pub fn slice_csv(&self, axis: usize) -> String {
        let mut idx = vec![self.n / 2; self.dim];
        let mut s = String::from("t,re,im,abs\n");
        for i in 0..self.n {
            idx[axis] = i;
            let v = self.get(&idx);
            s.push_str(&format!("{},{:e},{:e},{:e}\n", self.coord(i), v.re, v.im, v.norm()));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_points() {
        let g = GridField::from_fn(2, 1.0, 0.5, |p| C64::new(p[0], p[1])).unwrap();
        assert_eq!(g.n, 5);
        assert_eq!(g.len(), 25);
        assert_eq!(g.get(&[0, 4]), C64::new(-1.0, 1.0));
        assert_eq!(g.point(7), vec![-0.5, 0.0]);
        assert!(GridField::zeros(1, 1.0, 0.3).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_bilinear() {
        let g = GridField::from_fn(2, 2.0, 0.25, |p| C64::new(1.0 + 2.0 * p[0] - p[1] + p[0] * p[1], 0.0)).unwrap();
        let v = g.interp(&[0.3, -1.1]).unwrap();
        assert!((v.re - (1.0 + 0.6 + 1.1 - 0.33)).abs() < 1e-12);
        assert!(g.interp(&[2.5, 0.0]).is_err());
        assert_eq!(g.interp(&[2.0, 2.0]).unwrap(), g.get(&[16, 16]));
    }

    #[test]
    fn bytes_round_trip() {
        let g = GridField::from_fn(2, 1.0, 0.25, |p| C64::new(p[0].sin(), p[1])).unwrap();
        assert_eq!(GridField::from_bytes(&g.to_bytes()).unwrap(), g);
        assert!(GridField::from_bytes(b"nope").is_err());
    }
}
