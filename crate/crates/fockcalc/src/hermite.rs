//! Hermite functions, Gauss–Hermite rules, analysis and synthesis.

use crate::coeff::{Basis, CoeffArray, MultiIndex, TruncationSpec, C64};
use crate::error::{Error, Result};
use crate::grid::GridField;
use std::f64::consts::PI;

/// Per-axis degree bound for the three-term recurrence.
pub const MAX_AXIS_DEGREE: u32 = 60;

/// Gauss–Hermite rule for the weight e^{-y²}.
///
/// `scaled[i] = weights[i]·e^{y_i²}` is kept separately so integrals of the
/// form ∫g(y)dy can be taken as Σ scaled·g without overflow for large Q.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub q: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scaled: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_hermite(q: usize) -> Result<Self> {
        if q == 0 || q > 400 {
            return Err(Error::Invalid(format!("Gauss-Hermite order {q} unsupported")));
        }
        let n = q as f64;
        let m = q.div_ceil(2);
        let mut roots = vec![0.0f64; m];
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * n + 1.0).sqrt() - 1.85575 * (2.0 * n + 1.0).powf(-0.16667),
                1 => z - 1.14 * n.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * roots[0],
                3 => 1.91 * z - 0.91 * roots[1],
                _ => 2.0 * z - roots[i - 2],
            };
            for _ in 0..100 {
                let (p, pm1) = poly_pair(q, z);
                let dp = (2.0 * n).sqrt() * pm1;
                let dz = p / dp;
                z -= dz;
                if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            roots[i] = z;
        }
        let mut nodes = Vec::with_capacity(q);
        for (i, &r) in roots.iter().enumerate() {
            if q % 2 == 1 && i == m - 1 {
                nodes.push(0.0);
            } else {
                nodes.push(-r);
                nodes.push(r);
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scaled: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let hm1 = hermite_functions(q - 1, x)[q - 1];
                1.0 / (n * hm1 * hm1)
            })
            .collect();
        let weights = nodes
            .iter()
            .zip(&scaled)
            .map(|(&x, &s)| s * (-x * x).exp())
            .collect();
        Ok(QuadratureRule {
            q,
            nodes,
            weights,
            scaled,
        })
    }

    /// Default rule Q = 2N + 8.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::gauss_hermite(2 * n + 8)
    }
}

/// Orthonormal polynomials (w.r.t. e^{-x²}) p_q(x) and p_{q-1}(x).
fn poly_pair(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = PI.powf(-0.25);
    let mut p1 = 0.0;
    for j in 1..=q {
        let jf = j as f64;
        let p2 = p1;
        p1 = p0;
        p0 = x * (2.0 / jf).sqrt() * p1 - ((jf - 1.0) / jf).sqrt() * p2;
    }
    (p0, p1)
}

/// h_0(x), …, h_nmax(x) by the stable recurrence.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(nmax + 1);
    h.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if nmax >= 1 {
        h.push(2f64.sqrt() * x * h[0]);
    }
    for k in 1..nmax {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

fn check_degree(alpha: &MultiIndex) -> Result<()> {
    match alpha.0.iter().find(|&&a| a > MAX_AXIS_DEGREE) {
        Some(&a) => Err(Error::DegreeTooHigh(a)),
        None => Ok(()),
    }
}

pub fn hermite_eval(alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
    if alpha.dim() != x.len() {
        return Err(Error::InvalidDimension(x.len()));
    }
    check_degree(alpha)?;
    Ok(alpha
        .0
        .iter()
        .zip(x)
        .map(|(&a, &xj)| hermite_functions(a as usize, xj)[a as usize])
        .product())
}

/// Input for [`hermite_analyze`].
pub enum Sampled<'a> {
    /// Callable on ℝ^d, integrated with the tensor Gauss–Hermite rule.
    Fn(&'a (dyn Fn(&[f64]) -> C64 + Sync)),
    /// Samples on a uniform grid, integrated with the trapezoid rule.
    Grid(&'a GridField),
}

/// Contract `axis` of a row-major tensor with a row-major `m × shape[axis]` matrix.
fn contract_axis(data: &[C64], shape: &[usize], axis: usize, mat: &[f64], m: usize) -> Vec<C64> {
    let n = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![C64::new(0.0, 0.0); outer * m * inner];
    for o in 0..outer {
        for a in 0..m {
            let row = &mat[a * n..(a + 1) * n];
            let dst = &mut out[(o * m + a) * inner..(o * m + a + 1) * inner];
            for (j, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &data[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * w;
                }
            }
        }
    }
    out
}

/// Project tensor samples onto the box {α_j ≤ N} with per-axis tables
/// `table[a*n + i] = weight_i·h_a(x_i)` and keep the simplex |α| ≤ N.
fn project(values: Vec<C64>, d: usize, n_nodes: usize, table: &[f64], trunc: TruncationSpec) -> CoeffArray {
    let m = trunc.n + 1;
    let mut shape = vec![n_nodes; d];
    let mut data = values;
    for axis in 0..d {
        data = contract_axis(&data, &shape, axis, table, m);
        shape[axis] = m;
    }
    CoeffArray::from_fn(trunc, Basis::Hermite, |a| {
        let flat = a.0.iter().fold(0usize, |acc, &i| acc * m + i as usize);
        data[flat]
    })
}

pub fn hermite_analyze(f: Sampled<'_>, trunc: TruncationSpec, rule: &QuadratureRule) -> Result<CoeffArray> {
    if trunc.n as u32 > MAX_AXIS_DEGREE {
        return Err(Error::DegreeTooHigh(trunc.n as u32));
    }
    match f {
        Sampled::Fn(func) => {
            if rule.q < trunc.n + 1 {
                return Err(Error::RuleTooCoarse { q: rule.q, n: trunc.n });
            }
            if trunc.d > 3 {
                return Err(Error::InvalidDimension(trunc.d));
            }
            let q = rule.q;
            let mut table = vec![0.0; (trunc.n + 1) * q];
            for (i, &y) in rule.nodes.iter().enumerate() {
                let h = hermite_functions(trunc.n, y);
                for a in 0..=trunc.n {
                    table[a * q + i] = rule.scaled[i] * h[a];
                }
            }
            let total = q.pow(trunc.d as u32);
            let mut p = vec![0.0; trunc.d];
            let values: Vec<C64> = (0..total)
                .map(|mut k| {
                    for j in (0..trunc.d).rev() {
                        p[j] = rule.nodes[k % q];
                        k /= q;
                    }
                    func(&p)
                })
                .collect();
            Ok(project(values, trunc.d, q, &table, trunc))
        }
        Sampled::Grid(g) => {
            if g.dim != trunc.d {
                return Err(Error::InvalidDimension(g.dim));
            }
            let n = g.n;
            let mut table = vec![0.0; (trunc.n + 1) * n];
            for i in 0..n {
                let h = hermite_functions(trunc.n, g.coord(i));
                for a in 0..=trunc.n {
                    table[a * n + i] = g.h * h[a];
                }
            }
            Ok(project(g.values.clone(), trunc.d, n, &table, trunc))
        }
    }
}

pub fn hermite_synthesize(c: &CoeffArray, x: &[f64]) -> Result<C64> {
    if c.basis != Basis::Hermite {
        return Err(Error::BasisMismatch {
            expected: "hermite",
            found: c.basis.name(),
        });
    }
    if x.len() != c.d() {
        return Err(Error::InvalidDimension(x.len()));
    }
    if c.n() as u32 > MAX_AXIS_DEGREE {
        return Err(Error::DegreeTooHigh(c.n() as u32));
    }
    let tables: Vec<Vec<f64>> = x.iter().map(|&xj| hermite_functions(c.n(), xj)).collect();
    let mut acc = C64::new(0.0, 0.0);
    for (a, v) in c.trunc.indices().iter().zip(&c.values) {
        let h: f64 = a.0.iter().enumerate().map(|(j, &aj)| tables[j][aj as usize]).product();
        acc += v * h;
    }
    Ok(acc)
}

/// c_α ↦ (2|α|+d)^n c_α.
pub fn harmonic_oscillator_apply(c: &CoeffArray, n: u32) -> Result<CoeffArray> {
    if c.basis != Basis::Hermite {
        return Err(Error::BasisMismatch {
            expected: "hermite",
            found: c.basis.name(),
        });
    }
    let d = c.d() as f64;
    Ok(c.map_indexed(&|a, v| v * (2.0 * a.abs() as f64 + d).powi(n as i32)))
}

/// Grid maximum of |Σ c_α h_α| over [-R,R]^d with step h.
pub fn sup_norm_on_grid(c: &CoeffArray, r: f64, h: f64) -> Result<f64> {
    let g = GridField::from_fn(c.d(), r, h, |p| hermite_synthesize(c, p).unwrap_or_default())?;
    Ok(g.max_abs())
}

/// Successive ratios ‖H^{k+1}f‖_∞ / ‖H^k f‖_∞ for k = 0..kmax-1.
pub fn harmonic_growth_probe(c: &CoeffArray, kmax: u32, r: f64, h: f64) -> Result<Vec<f64>> {
    let mut norms = Vec::with_capacity(kmax as usize + 1);
    for k in 0..=kmax {
        norms.push(sup_norm_on_grid(&harmonic_oscillator_apply(c, k)?, r, h)?);
    }
    Ok(norms.windows(2).map(|w| w[1] / w[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn rule_moments() {
        for q in [1usize, 2, 5, 20, 40, 101] {
            let r = QuadratureRule::gauss_hermite(q).unwrap();
            let m0: f64 = r.weights.iter().sum();
            assert!((m0 - PI.sqrt()).abs() < 1e-12, "q={q} m0={m0}");
            if q >= 2 {
                let m2: f64 = r.weights.iter().zip(&r.nodes).map(|(w, x)| w * x * x).sum();
                assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
            }
            for (a, b) in r.nodes.iter().zip(r.nodes.iter().rev()) {
                assert!((a + b).abs() < 1e-12);
            }
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn eval_examples() {
        assert!((hermite_eval(&mi(&[0]), &[0.0]).unwrap() - 0.7511255444649425).abs() < 1e-15);
        assert_eq!(hermite_eval(&mi(&[1]), &[0.0]).unwrap(), 0.0);
        assert!(matches!(hermite_eval(&mi(&[61]), &[0.0]), Err(Error::DegreeTooHigh(61))));
        // closed form h_2 = π^{-1/4}(2x²-1)/√2 e^{-x²/2}
        let x = 0.7;
        let h2 = PI.powf(-0.25) * (2.0 * x * x - 1.0) / 2f64.sqrt() * (-x * x / 2.0).exp();
        assert!((hermite_eval(&mi(&[2]), &[x]).unwrap() - h2).abs() < 1e-15);
    }

    #[test]
    fn h2_norm_by_quadrature() {
        let r = QuadratureRule::gauss_hermite(20).unwrap();
        let s: f64 = r
            .nodes
            .iter()
            .zip(&r.scaled)
            .map(|(&y, &w)| w * hermite_functions(2, y)[2].powi(2))
            .sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analyze_examples() {
        let t = TruncationSpec::new(1, 8).unwrap();
        let rule = QuadratureRule::gauss_hermite(20).unwrap();
        let f = |x: &[f64]| C64::new(hermite_functions(3, x[0])[3], 0.0);
        let c = hermite_analyze(Sampled::Fn(&f), t, &rule).unwrap();
        let e3 = CoeffArray::delta(t, Basis::Hermite, &mi(&[3])).unwrap();
        assert!(c.max_abs_diff(&e3) < 1e-10);

        let g = |x: &[f64]| {
            let h = hermite_functions(2, x[0]);
            C64::new(h[0] + 2.0 * h[2], 0.0)
        };
        let c = hermite_analyze(Sampled::Fn(&g), t, &rule).unwrap();
        assert!((c.get(&mi(&[0])) - 1.0).norm() < 1e-10);
        assert!((c.get(&mi(&[2])) - 2.0).norm() < 1e-10);

        let zero = |_: &[f64]| C64::new(0.0, 0.0);
        let c = hermite_analyze(Sampled::Fn(&zero), t, &rule).unwrap();
        assert!(c.l2_norm() == 0.0);

        let coarse = QuadratureRule::gauss_hermite(5).unwrap();
        assert!(matches!(
            hermite_analyze(Sampled::Fn(&zero), t, &coarse),
            Err(Error::RuleTooCoarse { .. })
        ));
    }

    #[test]
    fn grid_analysis_matches_quadrature() {
        let t = TruncationSpec::new(2, 6).unwrap();
        let f = |x: &[f64]| {
            C64::new(
                (-(x[0] - 0.3).powi(2) - 0.5 * (x[1] + 0.2).powi(2)).exp(),
                0.1 * x[0] * (-x[0] * x[0] - x[1] * x[1]).exp(),
            )
        };
        let rule = QuadratureRule::gauss_hermite(40).unwrap();
        let a = hermite_analyze(Sampled::Fn(&f), t, &rule).unwrap();
        let g = GridField::from_fn(2, 12.0, 0.1, f).unwrap();
        let b = hermite_analyze(Sampled::Grid(&g), t, &rule).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10, "{}", a.max_abs_diff(&b));
    }

    #[test]
    fn synthesize_examples() {
        let t = TruncationSpec::new(1, 10).unwrap();
        let d0 = CoeffArray::delta(t, Basis::Hermite, &mi(&[0])).unwrap();
        assert!((hermite_synthesize(&d0, &[0.0]).unwrap().re - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(hermite_synthesize(&CoeffArray::zeros(t, Basis::Hermite), &[0.3]).unwrap(), C64::new(0.0, 0.0));
        assert!(hermite_synthesize(&d0.clone().with_basis(Basis::Fock), &[0.0]).is_err());
    }

    #[test]
    fn oscillator_examples() {
        let t = TruncationSpec::new(1, 4).unwrap();
        let c = CoeffArray::delta(t, Basis::Hermite, &mi(&[2])).unwrap();
        assert_eq!(harmonic_oscillator_apply(&c, 1).unwrap().get(&mi(&[2])), C64::new(5.0, 0.0));
        assert_eq!(harmonic_oscillator_apply(&c, 0).unwrap(), c);
        let t2 = TruncationSpec::new(2, 3).unwrap();
        let c2 = CoeffArray::delta(t2, Basis::Hermite, &mi(&[1, 1])).unwrap();
        assert_eq!(harmonic_oscillator_apply(&c2, 2).unwrap().get(&mi(&[1, 1])), C64::new(36.0, 0.0));
    }

    #[test]
    fn oscillator_matches_differential_operator() {
        // (x² - d²/dx²) h_n by central differences against (2n+1) h_n
        let t = TruncationSpec::new(1, 5).unwrap();
        let c = CoeffArray::from_fn(t, Basis::Hermite, |a| C64::new(1.0 / (1.0 + a.abs() as f64), 0.0));
        let hc = harmonic_oscillator_apply(&c, 1).unwrap();
        let e = 1e-3;
        for &x in &[-1.3, 0.2, 2.1] {
            let f = |y: f64| hermite_synthesize(&c, &[y]).unwrap().re;
            let lap = (f(x + e) - 2.0 * f(x) + f(x - e)) / (e * e);
            let direct = x * x * f(x) - lap;
            assert!((direct - hermite_synthesize(&hc, &[x]).unwrap().re).abs() < 1e-5);
        }
    }

    #[test]
    fn pilipovic_growth_probe_is_constant() {
        let t = TruncationSpec::new(1, 6).unwrap();
        let c = CoeffArray::delta(t, Basis::Hermite, &mi(&[3])).unwrap();
        for r in harmonic_growth_probe(&c, 4, 6.0, 0.05).unwrap() {
            assert!((r - 7.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn gram_matrix_is_identity(n in 1usize..25, extra in 0usize..6) {
            let rule = QuadratureRule::gauss_hermite(n + 1 + extra).unwrap();
            let tabs: Vec<Vec<f64>> = rule.nodes.iter().map(|&y| hermite_functions(n, y)).collect();
            for a in 0..=n {
                for b in 0..=n {
                    let g: f64 = tabs.iter().zip(&rule.scaled).map(|(h, w)| w * h[a] * h[b]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((g - want).abs() < 1e-10, "a={} b={} g={}", a, b, g);
                }
            }
        }

        #[test]
        fn analyze_synthesize_round_trip(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = TruncationSpec::new(1, 10).unwrap();
            let c = CoeffArray::from_fn(t, Basis::Hermite, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let f = |x: &[f64]| hermite_synthesize(&c, x).unwrap();
            let rule = QuadratureRule::default_for(10).unwrap();
            let back = hermite_analyze(Sampled::Fn(&f), t, &rule).unwrap();
            prop_assert!(back.max_abs_diff(&c) < 1e-10);
        }
    }
}
