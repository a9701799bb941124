//! Named verification suites shared by the command line and the acceptance run.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::apdo::{
    apdo_apply, certified_radius, continuity_harness_with_g, g_kco_build, kernel_apply, pairing, random_ensemble, t0t_transform,
    tt_pointwise_check, HarnessConfig, KernelCoeff, KernelSource, KernelTag, Probe, Variant,
};
use crate::bargmann::{
    bargmann_coeff, bargmann_quad, fock_a2_norm_quad, fock_basis, fock_eval, reproducing_project, stft_gaussian,
    uv_apply, StftQuad,
};
use crate::coeff::{Basis, CoeffArray, MultiIndex, TruncationSpec, C64};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::hermite::{hermite_analyze, hermite_functions, hermite_synthesize, QuadratureRule, Sampled};
use crate::mixednorm::{mixed_norm, MixedNormSpec};
use crate::realpdo::{
    bargmann_kernel_of_symbol, calculi_transform, diagram_sides, disk_probes, op_a_apply, pseudo_mod_harness,
    random_hermite, stft_kernel_transfer_check, DiagramConfig, PseudoConfig, SymbolField, TransferConvention,
};
use crate::weights::{classify_growth, synthetic_family, GrowthFamily, SeqKind, SeqWeightSpec};

pub const SUITES: [&str; 9] = [
    "isometry",
    "reproducing",
    "creation-annihilation",
    "t0t",
    "bargstft1",
    "transfer-lemma",
    "diagram",
    "continuity",
    "classify",
];

/// Overrides for a verification run; `None` means the suite default.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub d: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "Q")]
    pub q: Option<usize>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub h: Option<f64>,
    pub seed: u64,
    pub t: Option<C64>,
    pub tol: BTreeMap<String, f64>,
    pub preset: Option<String>,
}

impl RunConfig {
    pub fn new(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn tol(&self, name: &str, default: f64) -> f64 {
        self.tol.get(name).copied().unwrap_or(default)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tol: f64,
    pub detail: String,
    /// Reported alongside but not counted toward pass/fail.
    pub notes: Vec<String>,
}

impl Check {
    fn at_most(name: &str, measured: f64, tol: f64, detail: String) -> Self {
        Check { name: name.into(), pass: measured <= tol, measured, tol, detail, notes: Vec::new() }
    }

    fn from_error(name: &str, tol: f64, e: Error) -> Self {
        Check { name: name.into(), pass: false, measured: f64::NAN, tol, detail: format!("error: {e}"), notes: Vec::new() }
    }
}

fn guard(name: &str, tol: f64, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::from_error(name, tol, e))
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Vec<Check>> {
    Ok(match name {
        "isometry" => vec![isometry(cfg), basis_mapping(cfg)],
        "reproducing" => vec![reproducing(cfg)],
        "creation-annihilation" => vec![creation_annihilation(cfg), kernel_quadrature(cfg)],
        "t0t" => vec![t0t_exactness(cfg)],
        "bargstft1" => vec![bargstft(cfg)],
        "transfer-lemma" => vec![transfer_lemma(cfg)],
        "diagram" => vec![diagram(cfg), quantization_covariance(cfg)],
        "continuity" => vec![continuity(cfg)],
        "classify" => vec![classify(cfg)],
        other => return Err(Error::Invalid(format!("unknown suite '{other}'; expected one of {}", SUITES.join(", ")))),
    })
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

fn random_coeffs(trunc: TruncationSpec, basis: Basis, rng: &mut ChaCha8Rng) -> CoeffArray {
    CoeffArray::from_fn(trunc, basis, |_| complex_normal(rng))
}

/// Points in the ball |z| ≤ radius of ℂ^d.
fn ball_points(count: usize, d: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
    (0..count)
        .map(|_| {
            let v: Vec<C64> = (0..d).map(|_| complex_normal(rng)).collect();
            let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let s = radius * rng.random::<f64>().powf(1.0 / (2 * d) as f64) / n;
            v.into_iter().map(|c| c * s).collect()
        })
        .collect()
}

fn gh_l2_norm(f: &dyn Fn(&[f64]) -> C64, d: usize, rule: &QuadratureRule) -> f64 {
    let q = rule.q;
    let mut acc = 0.0;
    let mut y = vec![0.0; d];
    for k in 0..q.pow(d as u32) {
        let (mut rem, mut w) = (k, 1.0);
        for j in (0..d).rev() {
            y[j] = rule.nodes[rem % q];
            w *= rule.scaled[rem % q];
            rem /= q;
        }
        acc += w * f(&y).norm_sqr();
    }
    acc.sqrt()
}

/// ‖𝔙f‖_{A²} by quadrature against ‖f‖_{L²} by quadrature.
pub fn isometry(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("isometry", 1e-8);
    guard("Bargmann isometry", tol, || {
        let (d, n, q) = (cfg.d.unwrap_or(1), cfg.n.unwrap_or(12), cfg.q.unwrap_or(40));
        let count = if d == 1 { 100 } else { 10 };
        let rule = QuadratureRule::gauss_hermite(q)?;
        let trunc = TruncationSpec::new(d, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let c = random_coeffs(trunc, Basis::Hermite, &mut rng);
            let f = |y: &[f64]| hermite_synthesize(&c, y).unwrap();
            let l2 = gh_l2_norm(&f, d, &rule);
            let fock = bargmann_coeff(&hermite_analyze(Sampled::Fn(&f), trunc, &rule)?)?;
            let a2 = fock_a2_norm_quad(&|z: &[C64]| fock_eval(&fock, z).unwrap(), d, &rule)?;
            worst = worst.max((a2 - l2).abs());
        }
        Ok(Check::at_most(
            "Bargmann isometry",
            worst,
            tol,
            format!("{count} random f, d={d}, N={n}, Q={q}: max |A2 - L2|"),
        ))
    })
}

/// 𝔙h_α by quadrature against e_α.
pub fn basis_mapping(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("basis", 1e-8);
    guard("Basis mapping", tol, || {
        let (d, q) = (cfg.d.unwrap_or(1), cfg.q.unwrap_or(40));
        let nmax = cfg.n.unwrap_or(8).min(8);
        let rule = QuadratureRule::gauss_hermite(q)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let probes = ball_points(25, d, 1.5, &mut rng);
        let trunc = TruncationSpec::new(d, nmax)?;
        let mut worst: f64 = 0.0;
        for alpha in trunc.indices() {
            let a = alpha.clone();
            let h = move |y: &[f64]| {
                C64::new(a.0.iter().zip(y).map(|(&k, &x)| hermite_functions(k as usize, x)[k as usize]).product(), 0.0)
            };
            for z in &probes {
                let got = bargmann_quad(&h, z, &rule, true)?;
                let want: C64 = alpha.0.iter().zip(z).map(|(&k, &zj)| fock_basis(k as usize, zj)[k as usize]).product();
                worst = worst.max((got - want).norm());
            }
        }
        Ok(Check::at_most(
            "Basis mapping",
            worst,
            tol,
            format!("{} indices |alpha|<={nmax}, 25 probes |z|<=1.5, d={d}, Q={q}", trunc.len()),
        ))
    })
}

/// Π_A on analytic polynomials and on w̄.
pub fn reproducing(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("reproducing", 1e-8);
    guard("Reproducing projection", tol, || {
        let (d, q) = (cfg.d.unwrap_or(1), cfg.q.unwrap_or(40));
        let deg = cfg.n.unwrap_or(8);
        let rule = QuadratureRule::gauss_hermite(q)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
        let probes = ball_points(25, d, 1.5, &mut rng);
        let trunc = TruncationSpec::new(d, deg)?;
        let mut polys: Vec<CoeffArray> =
            trunc.indices().iter().map(|a| CoeffArray::delta(trunc, Basis::Fock, a).unwrap()).collect();
        for _ in 0..5 {
            polys.push(random_coeffs(trunc, Basis::Fock, &mut rng));
        }
        let mut worst: f64 = 0.0;
        for p in &polys {
            let f = |w: &[C64]| fock_eval(p, w).unwrap();
            for z in &probes {
                let got = reproducing_project(&f, z, &rule, true)?;
                worst = worst.max((got - f(z)).norm());
            }
        }
        let mut wbar: f64 = 0.0;
        for j in 0..d {
            let f = move |w: &[C64]| w[j].conj();
            for z in &probes {
                wbar = wbar.max(reproducing_project(&f, z, &rule, true)?.norm());
            }
        }
        let mut c = Check::at_most(
            "Reproducing projection",
            worst.max(wbar),
            tol,
            format!("{} polynomials of degree <= {deg}, 25 probes, Q={q}", polys.len()),
        );
        c.notes.push(format!("max |Pi_A p - p| = {worst:.3e}, max |Pi_A(conj w)| = {wbar:.3e}"));
        Ok(c)
    })
}

/// 𝔙f against U_𝔙(V_φ f) on a 41×41 lattice.
pub fn bargstft(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("bargstft1", 1e-6);
    guard("Bargmann = U(STFT)", tol, || {
        let n = cfg.n.unwrap_or(12);
        let (r, h) = (cfg.r.unwrap_or(2.0), cfg.h.unwrap_or(0.1));
        let sq = std::f64::consts::SQRT_2;
        let mut worst: f64 = 0.0;
        let mut side = 0;
        for k in 0..10 {
            let c = random_hermite(n, cfg.seed.wrapping_mul(31).wrapping_add(k));
            let f = |y: &[f64]| hermite_synthesize(&c, y).unwrap();
            let v = stft_gaussian(Sampled::Fn(&f), 1, r * sq, h * sq, StftQuad::default())?;
            let u = uv_apply(&v)?;
            side = u.n;
            let fc = bargmann_coeff(&c)?;
            for i in 0..u.len() {
                let p = u.point(i);
                let want = fock_eval(&fc, &[C64::new(p[0], p[1])])?;
                worst = worst.max((u.values[i] - want).norm());
            }
        }
        Ok(Check::at_most(
            "Bargmann = U(STFT)",
            worst,
            tol,
            format!("10 random f (N={n}, unit l2) on a {side}x{side} lattice [-{r},{r}]^2"),
        ))
    })
}

fn random_symbol(n: usize, damping: f64, rng: &mut ChaCha8Rng) -> Result<KernelCoeff> {
    KernelCoeff::from_fn(1, n, KernelTag::Symbol, |a, b| {
        complex_normal(rng) * (-damping * (a.abs() + b.abs()) as f64).exp()
    })
}

fn frob(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse property of T₀,ₜ and pointwise agreement with e^{t(z,w)}a.
pub fn t0t_exactness(cfg: &RunConfig) -> Check {
    let tol_inv = cfg.tol("t0t-inverse", 1e-12);
    let tol_pt = cfg.tol("t0t-pointwise", 1e-10);
    guard("T0,t exactness", tol_inv, || {
        let ts = match cfg.t {
            Some(t) => vec![t],
            None => vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(1.0, 0.5), C64::new(-2.0, 0.0)],
        };
        let n_inv = cfg.n.unwrap_or(16);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(5));
        let mut notes = Vec::new();
        let mut worst_inv: f64 = 0.0;
        let mut worst_scaled: f64 = 0.0;
        for &t in &ts {
            let mut rel: f64 = 0.0;
            let mut scaled: f64 = 0.0;
            for _ in 0..10 {
                let c = random_symbol(n_inv, 0.5, &mut rng)?;
                let back = t0t_transform(&t0t_transform(&c, t)?, -t)?;
                let diff: Vec<C64> = back.values.iter().zip(&c.values).map(|(a, b)| a - b).collect();
                rel = rel.max(frob(&diff) / frob(&c.values));
                // entrywise error against the rounding scale T_{0,2|t|}|c|
                let mut ac = c.clone();
                ac.values.iter_mut().for_each(|v| *v = C64::new(v.norm(), 0.0));
                let s = t0t_transform(&ac, C64::new(2.0 * t.norm(), 0.0))?;
                for (dv, sv) in diff.iter().zip(&s.values) {
                    scaled = scaled.max(dv.norm() / (sv.re * f64::EPSILON));
                }
            }
            notes.push(format!("inverse t={t}: relative l2 error {rel:.3e}, entrywise error / (eps * rounding scale) {scaled:.1}"));
            worst_inv = worst_inv.max(rel);
            worst_scaled = worst_scaled.max(scaled);
        }
        let n_pt = 24;
        let mut worst_pt: f64 = 0.0;
        let mut syms = vec![
            KernelCoeff::delta(1, n_pt, KernelTag::Symbol, &MultiIndex(vec![0]), &MultiIndex(vec![0]))?,
            KernelCoeff::symbol_z(1, n_pt, 0)?,
            KernelCoeff::symbol_wbar(1, n_pt, 0)?,
        ];
        for _ in 0..3 {
            let low = random_symbol(4, 0.3, &mut rng)?;
            syms.push(low.retruncate(n_pt)?);
        }
        for &t in &ts {
            for a in &syms {
                let rho = certified_radius(n_pt - a.degree(), t.norm());
                let probes: Vec<Probe> = (0..25)
                    .map(|_| {
                        let z = ball_points(1, 1, 0.99 * rho, &mut rng).remove(0);
                        let w = ball_points(1, 1, 0.99 * rho, &mut rng).remove(0);
                        (z, w)
                    })
                    .collect();
                worst_pt = worst_pt.max(tt_pointwise_check(a, t, &probes)?);
            }
        }
        notes.push(format!("pointwise N={n_pt}: max deviation {worst_pt:.3e} (tol {tol_pt:.0e})"));
        Ok(Check {
            name: "T0,t exactness".into(),
            pass: worst_inv <= tol_inv && worst_pt <= tol_pt,
            measured: worst_inv,
            tol: tol_inv,
            detail: format!(
                "inverse relative l2 error over 10 random symbols per t (N={n_inv}); max scaled entrywise error {worst_scaled:.1}"
            ),
            notes,
        })
    })
}

/// a = z_j and a = w̄_j act as exact shifts with weight √(α_j+1).
pub fn creation_annihilation(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("creation", 0.0);
    guard("Creation/annihilation", tol, || {
        let n = cfg.n.unwrap_or(16);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(6));
        let mut worst: f64 = 0.0;
        let mut checked = 0usize;
        for d in [1usize, 2] {
            let trunc = TruncationSpec::new(d, n)?;
            let f = random_coeffs(trunc, Basis::Fock, &mut rng);
            for j in 0..d {
                let zf = apdo_apply(&KernelCoeff::symbol_z(d, n, j)?, &f)?;
                let df = apdo_apply(&KernelCoeff::symbol_wbar(d, n, j)?, &f)?;
                for alpha in TruncationSpec::new(d, n - 1)?.indices() {
                    let mut up = alpha.clone();
                    up.0[j] += 1;
                    let w = ((alpha.0[j] + 1) as f64).sqrt();
                    worst = worst.max((zf.get(&up) - f.get(&alpha) * w).norm());
                    worst = worst.max((df.get(&alpha) - f.get(&up) * w).norm());
                    checked += 2;
                }
            }
        }
        Ok(Check::at_most("Creation/annihilation", worst, tol, format!("{checked} coefficient identities, d=1,2, N={n}")))
    })
}

/// Coefficient contraction against a quadrature of ∫K(z,w)F(w)dμ(w).
pub fn kernel_quadrature(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("kernel-quad", 1e-8);
    guard("Kernel vs quadrature", tol, || {
        let (n, q) = (cfg.n.unwrap_or(8), cfg.q.unwrap_or(32));
        let rule = QuadratureRule::gauss_hermite(q)?;
        let trunc = TruncationSpec::new(1, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(7));
        let mut worst: f64 = 0.0;
        for k in 0..20u64 {
            let mut kern = random_symbol(n, 0.3, &mut rng)?;
            kern.tag = KernelTag::Kernel;
            let f = random_ensemble(trunc, 1, cfg.seed.wrapping_mul(97).wrapping_add(k), 0.3).remove(0);
            let tf = kernel_apply(&kern, &f)?;
            for z in ball_points(5, 1, 1.5, &mut rng) {
                // ∫K(z,w)F(w)dμ(w) through the Π_A rule with the pairing factor divided out
                let g = |w: &[C64]| kern.eval(&z, w).unwrap() * fock_eval(&f, w).unwrap() * (-pairing(&z, w)).exp();
                let quad = reproducing_project(&g, &z, &rule, true)?;
                worst = worst.max((quad - fock_eval(&tf, &z)?).norm());
            }
        }
        Ok(Check::at_most("Kernel vs quadrature", worst, tol, format!("20 random kernels, 5 probes each, N={n}, Q={q}")))
    })
}

pub fn transfer_symbols() -> Result<Vec<SymbolField>> {
    Ok(vec![
        SymbolField::gaussian((0.0, 0.0), (1.0, 1.0), (0.0, 0.0))?,
        SymbolField::gaussian((0.3, -0.2), (1.2, 0.9), (0.0, 0.0))?,
        SymbolField::gaussian((0.0, 0.0), (1.0, 1.0), (0.4, -0.3))?,
        SymbolField::gaussian((-0.5, 0.4), (0.8, 1.0), (0.2, 0.5))?,
        SymbolField::gaussian((0.2, 0.1), (1.2, 0.7), (-0.6, 0.0))?,
    ])
}

fn symbols_for(cfg: &RunConfig) -> Result<Vec<SymbolField>> {
    match &cfg.preset {
        Some(p) => Ok(vec![SymbolField::preset(p)?]),
        None => transfer_symbols(),
    }
}

/// Transfer identity with the window and prefactor exactly as printed.
pub fn transfer_lemma(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("transfer", 1e-6);
    guard("Transfer lemma", tol, || {
        let probes = disk_probes(50, 1.5, cfg.seed.wrapping_add(8));
        let mut printed: f64 = 0.0;
        let mut conj: f64 = 0.0;
        let mut notes = Vec::new();
        for (k, a) in symbols_for(cfg)?.iter().enumerate() {
            let p = stft_kernel_transfer_check(a, &probes, TransferConvention::Printed)?;
            let c = stft_kernel_transfer_check(a, &probes, TransferConvention::Conjugated)?;
            notes.push(format!(
                "symbol {k}: printed dev {:.3e} (max |lhs| {:.3e}, fitted c = {:.4}{:+.4}i, residual {:.3e}); conjugated-window dev {:.3e}",
                p.max_dev, p.max_lhs, p.fitted_re, p.fitted_im, p.fit_residual, c.max_dev
            ));
            printed = printed.max(p.max_dev);
            conj = conj.max(c.max_dev);
        }
        notes.push(format!(
            "window pi^(-1/2) e^(-ix xi) e^(-|.|^2/2) with prefactor (2 pi)^(1/2): max dev {conj:.3e} ({})",
            if conj <= tol { "within tolerance" } else { "outside tolerance" }
        ));
        let mut c = Check::at_most(
            "Transfer lemma",
            printed,
            tol,
            "printed form: window pi^(-1/2) e^(ix xi) e^(-|.|^2/2), prefactor 2^(1/2); 50 probes |z|,|w|<=1.5".into(),
        );
        c.notes = notes;
        Ok(c)
    })
}

/// Bargmann path against direct path in M², over (symbol, f) pairs.
pub fn diagram(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("diagram", 1e-4);
    guard("Diagram commutation", tol, || {
        let dcfg = DiagramConfig { n_kernel: cfg.n.unwrap_or(60), ..DiagramConfig::default() };
        let spec = MixedNormSpec::uniform(2, 2.0)?;
        let mut worst: f64 = 0.0;
        let mut pairs = 0;
        for (k, a) in symbols_for(cfg)?.iter().enumerate() {
            let k0 = bargmann_kernel_of_symbol(a, &dcfg)?;
            for j in 0..2u64 {
                let f = random_hermite(12, cfg.seed.wrapping_mul(17).wrapping_add(10 * k as u64 + j));
                let s = diagram_sides(a, &k0, &f, &dcfg)?;
                if !s.direct.same_lattice(&s.bargmann) {
                    return Err(Error::Invalid("diagram sides on different lattices".into()));
                }
                let mut diff = s.direct.clone();
                diff.values.iter_mut().zip(&s.bargmann.values).for_each(|(a, b)| *a -= b);
                worst = worst.max(mixed_norm(&diff, &spec)? / mixed_norm(&s.direct, &spec)?);
                pairs += 1;
            }
        }
        Ok(Check::at_most(
            "Diagram commutation",
            worst,
            tol,
            format!("{pairs} (a,f) pairs, kernel Hermite degree {}: max ||direct - bargmann||_M2 / ||direct||_M2", dcfg.n_kernel),
        ))
    })
}

fn packet(r: f64, h: f64, x0: f64, w: f64, p: f64) -> Result<GridField> {
    GridField::from_fn(1, r, h, move |y| C64::from_polar((-(y[0] - x0).powi(2) / (2.0 * w * w)).exp(), p * y[0]))
}

/// Op_{A₁}(a)f against Op_{A₂}(a₂)f with a₂ from the calculi transform.
pub fn quantization_covariance(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("covariance", 1e-5);
    guard("Quantization covariance", tol, || {
        let fs = [packet(8.0, 0.125, 0.5, 1.0, 0.7)?, packet(8.0, 0.125, -0.8, 1.3, -1.1)?];
        let mut worst: f64 = 0.0;
        let mut pairs = 0;
        for (k, a) in transfer_symbols()?.iter().enumerate() {
            for (j, f) in fs.iter().enumerate() {
                let (a1, a2) = if (k + j) % 2 == 0 { (0.0, 0.5) } else { (0.5, 0.0) };
                let lhs = op_a_apply(a, a1, f)?;
                let rhs = op_a_apply(&calculi_transform(a, a1, a2)?, a2, f)?;
                worst = worst.max(lhs.max_abs_diff(&rhs)?);
                pairs += 1;
            }
        }
        Ok(Check::at_most("Quantization covariance", worst, tol, format!("{pairs} pairs, A in {{0, 1/2}}")))
    })
}

/// One tuple of the continuity catalog.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub label: &'static str,
    pub kind: CatalogKind,
}

#[derive(Clone, Debug)]
pub enum CatalogKind {
    Kernel { kernel: &'static str, cfg: HarnessConfig },
    Pseudo { cfg: PseudoConfig },
}

/// Bargmann kernel of the standard Gaussian symbol, truncated per side to `n`.
pub fn gaussian_symbol_kernel(n: usize) -> Result<KernelCoeff> {
    let a = SymbolField::gaussian((0.0, 0.0), (1.0, 1.0), (0.0, 0.0))?;
    let dcfg = DiagramConfig { n_kernel: 2 * n, ..DiagramConfig::default() };
    bargmann_kernel_of_symbol(&a, &dcfg)?.retruncate(n)
}

pub fn continuity_catalog(ensemble: usize) -> Vec<CatalogEntry> {
    let inf = f64::INFINITY;
    let kernel = |kernel: &'static str, variant: Variant, p: f64, q: f64, p1: Vec<f64>, p2: Vec<f64>, relaxed: Vec<Vec<f64>>| {
        let mut cfg = HarnessConfig::new(variant, 1, p, q, p1, p2);
        cfg.ensemble = ensemble;
        cfg.relaxed_inputs = relaxed;
        CatalogKind::Kernel { kernel, cfg }
    };
    let mut pseudo = PseudoConfig::modulation(inf, 1.0, vec![2.0, 2.0], vec![2.0, 2.0]);
    pseudo.ensemble = ensemble;
    pseudo.f_degree = 8;
    pseudo.relaxed_inputs = vec![vec![1.0, 2.0], vec![1.0, 1.0]];
    vec![
        CatalogEntry {
            label: "LebOpCont1 (inf,1): A2 -> A2, Pi_A",
            kind: kernel("projection", Variant::LebOpCont1, inf, 1.0, vec![2.0, 2.0], vec![2.0, 2.0], vec![vec![1.0, 2.0], vec![1.0, 1.0]]),
        },
        CatalogEntry {
            label: "LebOpCont1 (inf,1): A1 -> A1, K0 of a Gaussian",
            kind: kernel("gaussian", Variant::LebOpCont1, inf, 1.0, vec![1.0, 1.0], vec![1.0, 1.0], vec![]),
        },
        CatalogEntry {
            label: "LebOpCont1 (2,1): Ainf -> A2, K0 of a Gaussian",
            kind: kernel("gaussian", Variant::LebOpCont1, 2.0, 1.0, vec![inf, inf], vec![2.0, 2.0], vec![vec![2.0, 2.0], vec![1.0, 1.0]]),
        },
        CatalogEntry {
            label: "LebOpCont2 (inf,1): A2 -> A2, Pi_A",
            kind: kernel("projection", Variant::LebOpCont2, inf, 1.0, vec![2.0, 2.0], vec![2.0, 2.0], vec![vec![1.0, 1.0]]),
        },
        CatalogEntry {
            label: "LebOpCont3 (inf,1): A^{1,inf} -> A^{1,inf}_*, Pi_A",
            kind: kernel("projection", Variant::LebOpCont3, inf, 1.0, vec![], vec![], vec![vec![1.0, 1.0]]),
        },
        CatalogEntry { label: "PseudoModCont (inf,1): M2 -> M2, Gaussian symbol", kind: CatalogKind::Pseudo { cfg: pseudo } },
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogOutcome {
    pub label: String,
    pub ratios: Vec<f64>,
    /// per seed, (relaxed exponents, ratio)
    pub relaxed: Vec<Vec<(String, f64)>>,
    pub seed_variation: f64,
    pub finite: bool,
    pub monotone: bool,
}

/// G_{K,C,ω} for the catalog kernels, keyed by kernel name and variant (which fixes C).
pub struct GCache(BTreeMap<(&'static str, String), (KernelCoeff, GridField)>);

impl GCache {
    pub fn new() -> Self {
        GCache(BTreeMap::new())
    }

    fn get(&mut self, name: &'static str, cfg: &HarnessConfig) -> Result<&(KernelCoeff, GridField)> {
        let key = (name, format!("{:?}", cfg.variant));
        if !self.0.contains_key(&key) {
            let k = match name {
                "projection" => KernelCoeff::exp_pairing(1, 8, C64::new(1.0, 0.0), KernelTag::Kernel)?,
                _ => gaussian_symbol_kernel(8)?,
            };
            let g = g_kco_build(KernelSource::Coeff(&k), &cfg.c, &cfg.omega, cfg.conj, cfg.g_grid.0, cfg.g_grid.1)?;
            self.0.insert(key.clone(), (k, g));
        }
        Ok(&self.0[&key])
    }
}

impl Default for GCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Runs one catalog tuple per seed. Kernel tuples use the default C, ω and
/// weight convention of their variant, so G is shared through `cache`.
pub fn run_catalog_entry(entry: &CatalogEntry, seeds: &[u64], cache: &mut GCache) -> Result<CatalogOutcome> {
    let mut ratios = Vec::new();
    let mut relaxed = Vec::new();
    match &entry.kind {
        CatalogKind::Kernel { kernel, cfg } => {
            let (k, g) = cache.get(kernel, cfg)?;
            for &s in seeds {
                let mut c = cfg.clone();
                c.seed = s;
                let rep = continuity_harness_with_g(k, &c, Some(g))?;
                ratios.push(rep.max_ratio);
                relaxed.push(rep.relaxed);
            }
        }
        CatalogKind::Pseudo { cfg } => {
            let a = SymbolField::gaussian((0.0, 0.0), (1.0, 1.0), (0.0, 0.0))?;
            for &s in seeds {
                let mut c = cfg.clone();
                c.seed = s;
                let rep = pseudo_mod_harness(&a, &c)?;
                ratios.push(rep.max_ratio);
                relaxed.push(rep.relaxed.into_iter().map(|(e, r)| (format!("{e:?}"), r)).collect());
            }
        }
    }
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let finite = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let monotone = ratios
        .iter()
        .zip(&relaxed)
        .all(|(base, rel)| rel.iter().all(|(_, r)| *r <= base * (1.0 + 1e-12)));
    Ok(CatalogOutcome {
        label: entry.label.into(),
        seed_variation: (hi - lo) / hi,
        ratios,
        relaxed,
        finite,
        monotone,
    })
}

/// The six-tuple continuity catalog over three seeds.
pub fn continuity(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("seed-variation", 0.2);
    guard("Continuity harnesses", tol, || {
        let seeds = [cfg.seed, cfg.seed + 1, cfg.seed + 2];
        let mut notes = Vec::new();
        let mut pass = true;
        let mut worst_var: f64 = 0.0;
        let mut cache = GCache::new();
        for entry in continuity_catalog(50) {
            let started = std::time::Instant::now();
            let o = run_catalog_entry(&entry, &seeds, &mut cache)?;
            let secs = started.elapsed().as_secs_f64();
            let ok = o.finite && o.monotone && o.seed_variation < tol;
            pass &= ok;
            worst_var = worst_var.max(o.seed_variation);
            let rel: Vec<String> = o.relaxed[0].iter().map(|(e, r)| format!("{e}:{r:.4}")).collect();
            notes.push(format!(
                "{} {}: ratios {:?}, seed variation {:.3}, relaxed (seed {}) [{}] in {secs:.1}s",
                if ok { "ok  " } else { "FAIL" },
                o.label,
                o.ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>(),
                o.seed_variation,
                seeds[0],
                rel.join(", ")
            ));
        }
        Ok(Check {
            name: "Continuity harnesses".into(),
            pass,
            measured: worst_var,
            tol,
            detail: "6 tuples, 50-member ensembles, 3 seeds: finite, seed variation, nonincreasing under relaxation".into(),
            notes,
        })
    })
}

/// Synthetic ϑ families recovered by the growth classifier.
pub fn classify(cfg: &RunConfig) -> Check {
    let tol = cfg.tol("classify", 0.1);
    guard("Growth classification", tol, || {
        let n = cfg.n.unwrap_or(40);
        let trunc = TruncationSpec::new(1, n)?;
        let mut worst: f64 = 0.0;
        let mut families_ok = true;
        let mut notes = Vec::new();
        let mut cases = Vec::new();
        for s in [0.4, 0.5, 1.0] {
            for growth in [false, true] {
                cases.push((SeqWeightSpec { kind: SeqKind::PowerExp { s }, r: 1.0 }, growth, s));
            }
        }
        for sigma in [0.5, 1.0, 2.0] {
            for growth in [false, true] {
                cases.push((SeqWeightSpec { kind: SeqKind::Flat { sigma }, r: 1.5 }, growth, sigma));
            }
        }
        for (spec, growth, truth) in cases {
            let c = synthetic_family(trunc, &spec, growth)?;
            let g = classify_growth(&c)?;
            let want = match (spec.kind, growth) {
                (SeqKind::PowerExp { .. }, false) => GrowthFamily::PowerExpDecay,
                (SeqKind::PowerExp { .. }, true) => GrowthFamily::PowerExpGrowth,
                (SeqKind::Flat { .. }, false) => GrowthFamily::FlatDecay,
                (SeqKind::Flat { .. }, true) => GrowthFamily::FlatGrowth,
            };
            let err = (g.parameter - truth).abs() / truth;
            let fam = g.family == want;
            families_ok &= fam;
            worst = worst.max(err);
            notes.push(format!(
                "{:?} {}: got {} parameter {:.4} (rel err {err:.2e}){}",
                spec.kind,
                if growth { "growth" } else { "decay" },
                g.family.label(),
                g.parameter,
                if fam { "" } else { " WRONG FAMILY" }
            ));
        }
        Ok(Check {
            name: "Growth classification".into(),
            pass: families_ok && worst <= tol,
            measured: worst,
            tol,
            detail: format!("12 synthetic families, d=1, N={n}: max relative parameter error"),
            notes,
        })
    })
}

const CRITERIA: [fn(&RunConfig) -> Check; 12] = [
    isometry,
    basis_mapping,
    reproducing,
    bargstft,
    t0t_exactness,
    creation_annihilation,
    kernel_quadrature,
    transfer_lemma,
    diagram,
    continuity,
    quantization_covariance,
    classify,
];

/// All twelve acceptance criteria in order.
pub fn acceptance_checks(cfg: &RunConfig) -> Vec<(usize, Check)> {
    CRITERIA.iter().enumerate().map(|(i, f)| (i + 1, f(cfg))).collect()
}

/// Like [`acceptance_checks`] but reports each result as soon as it is ready.
pub fn acceptance_checks_with(cfg: &RunConfig, mut report: impl FnMut(usize, &Check, std::time::Instant)) {
    for (i, f) in CRITERIA.iter().enumerate() {
        let t = std::time::Instant::now();
        let c = f(cfg);
        report(i + 1, &c, t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(run_suite("bogus", &RunConfig::default()), Err(Error::Invalid(_))));
    }

    #[test]
    fn fast_suites_pass() {
        let cfg = RunConfig::new(1);
        for c in run_suite("creation-annihilation", &cfg).unwrap() {
            assert!(c.pass, "{c:?}");
        }
        let mut small = RunConfig::new(1);
        small.n = Some(6);
        small.q = Some(20);
        assert!(isometry(&small).pass);
    }

    #[test]
    fn tolerance_override_flips_verdict() {
        let mut cfg = RunConfig::new(1);
        cfg.tol.insert("reproducing".into(), 1e-300);
        cfg.n = Some(3);
        assert!(!reproducing(&cfg).pass);
    }

    #[test]
    fn t0t_single_parameter() {
        let mut cfg = RunConfig::new(1);
        cfg.t = Some(C64::new(0.0, 0.0));
        let c = t0t_exactness(&cfg);
        assert!(c.pass && c.measured == 0.0, "{c:?}");
    }
}
