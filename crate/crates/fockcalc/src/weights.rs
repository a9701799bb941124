//! Weights on ℝ^n / ℂ^n, sequence weights ϑ, κ bounds, moderateness
//! probes and growth classification of coefficient arrays.

use crate::coeff::{CoeffArray, MultiIndex, TruncationSpec, C64};
use crate::error::{Error, Result};
use crate::grid::GridField;
use std::fmt;
use std::sync::Arc;

/// Log-weight closure used by [`WeightKind::Custom`].
pub type LnWeight = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum WeightKind {
    One,
    /// ⟨x⟩^t
    Polynomial { t: f64 },
    /// e^{r|x|^{1/s}}
    Exp { r: f64, s: f64 },
    /// e^{c|x|²}
    GaussQuadratic { c: f64 },
    /// e^{r|x|^{2σ/(σ+1)}}
    FlatSigma { r: f64, sigma: f64 },
    Product(Vec<WeightFn>),
    Custom { label: String, ln: LnWeight },
}

/// Positive weight. Points of ℂ^n are passed as (Re z, Im z) in ℝ^{2n}.
#[derive(Clone)]
pub struct WeightFn {
    pub kind: WeightKind,
    pub cert: Option<(Box<WeightFn>, f64)>,
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightFn({})", self)
    }
}

impl fmt::Display for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::One => write!(f, "1"),
            WeightKind::Polynomial { t } => write!(f, "poly:{t}"),
            WeightKind::Exp { r, s } => write!(f, "exp:{r},{s}"),
            WeightKind::GaussQuadratic { c } => write!(f, "gauss:{c}"),
            WeightKind::FlatSigma { r, sigma } => write!(f, "flat:{r},{sigma}"),
            WeightKind::Product(ws) => {
                let parts: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
                write!(f, "{}", parts.join("*"))
            }
            WeightKind::Custom { label, .. } => write!(f, "{label}"),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl WeightFn {
    pub fn new(kind: WeightKind) -> Self {
        WeightFn { kind, cert: None }
    }

    pub fn one() -> Self {
        Self::new(WeightKind::One)
    }

    pub fn custom(label: &str, ln: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(WeightKind::Custom {
            label: label.to_string(),
            ln: Arc::new(ln),
        })
    }

    pub fn product(self, other: WeightFn) -> Self {
        let mut parts = match self.kind {
            WeightKind::Product(v) => v,
            k => vec![WeightFn::new(k)],
        };
        match other.kind {
            WeightKind::Product(v) => parts.extend(v),
            k => parts.push(WeightFn::new(k)),
        }
        Self::new(WeightKind::Product(parts))
    }

    pub fn with_certificate(mut self, v: WeightFn, c: f64) -> Self {
        self.cert = Some((Box::new(v), c));
        self
    }

    pub fn is_one(&self) -> bool {
        match &self.kind {
            WeightKind::One => true,
            WeightKind::Product(v) => v.iter().all(|w| w.is_one()),
            _ => false,
        }
    }

    pub fn ln_eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            WeightKind::One => 0.0,
            WeightKind::Polynomial { t } => 0.5 * t * (1.0 + x.iter().map(|v| v * v).sum::<f64>()).ln(),
            WeightKind::Exp { r, s } => r * norm(x).powf(1.0 / s),
            WeightKind::GaussQuadratic { c } => c * x.iter().map(|v| v * v).sum::<f64>(),
            WeightKind::FlatSigma { r, sigma } => r * norm(x).powf(2.0 * sigma / (sigma + 1.0)),
            WeightKind::Product(ws) => ws.iter().map(|w| w.ln_eval(x)).sum(),
            WeightKind::Custom { ln, .. } => ln(x),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.ln_eval(x).exp()
    }

    /// Parse "1", "poly:t", "exp:r,s", "gauss:c", "flat:r,sigma", joined by '*'.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty weight".into()));
        }
        let mut parts = s.split('*').map(parse_atom).collect::<Result<Vec<_>>>()?;
        if parts.len() == 1 {
            return Ok(parts.pop().unwrap());
        }
        Ok(Self::new(WeightKind::Product(parts)))
    }
}

fn parse_atom(s: &str) -> Result<WeightFn> {
    let s = s.trim();
    let bad = || Error::Parse(format!("weight preset '{s}'"));
    if s == "1" {
        return Ok(WeightFn::one());
    }
    let (name, args) = s.split_once(':').ok_or_else(bad)?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let kind = match (name, nums.as_slice()) {
        ("poly", [t]) => WeightKind::Polynomial { t: *t },
        ("exp", [r, s]) if *s > 0.0 => WeightKind::Exp { r: *r, s: *s },
        ("gauss", [c]) => WeightKind::GaussQuadratic { c: *c },
        ("flat", [r, sigma]) if *sigma > 0.0 => WeightKind::FlatSigma { r: *r, sigma: *sigma },
        _ => return Err(bad()),
    };
    Ok(WeightFn::new(kind))
}

// ---------------------------------------------------------------------------
// sequence weights and κ bounds

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeqKind {
    PowerExp { s: f64 },
    Flat { sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeqWeightSpec {
    pub kind: SeqKind,
    pub r: f64,
}

impl SeqWeightSpec {
    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(Error::Invalid(format!("nonpositive r={}", self.r)));
        }
        match self.kind {
            SeqKind::PowerExp { s } if !(s > 0.0) => Err(Error::Invalid(format!("s={s}"))),
            SeqKind::Flat { sigma } if !(sigma > 0.0) => Err(Error::Invalid(format!("sigma={sigma}"))),
            _ => Ok(()),
        }
    }

    pub fn ln_eval(&self, alpha: &MultiIndex) -> Result<f64> {
        self.validate()?;
        let n = alpha.abs() as f64;
        Ok(match self.kind {
            SeqKind::PowerExp { s } => self.r * n.powf(1.0 / (2.0 * s)),
            SeqKind::Flat { sigma } => n * self.r.ln() + alpha.ln_factorial() / (2.0 * sigma),
        })
    }
}

/// ϑ_{r,s}(α), computed in log space.
pub fn seq_weight_eval(spec: &SeqWeightSpec, alpha: &MultiIndex) -> Result<f64> {
    Ok(spec.ln_eval(alpha)?.exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kappa {
    K1,
    K2,
}

/// Index s ∈ 𝐑_♭: either a real s or ♭_σ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    S(f64),
    Flat(f64),
}

pub fn ln_kappa(which: Kappa, r: f64, s: Scale, z: &[C64]) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("nonpositive r={r}")));
    }
    let n2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
    let n1 = n2.sqrt();
    match (which, s) {
        (Kappa::K1, Scale::S(s)) if s > 0.0 && s < 0.5 => {
            Ok(r * (0.5 * (1.0 + n2).ln()).powf(1.0 / (1.0 - 2.0 * s)))
        }
        (Kappa::K1, Scale::Flat(sg)) if sg > 0.0 => Ok(r * n1.powf(2.0 * sg / (sg + 1.0))),
        (Kappa::K1, Scale::S(s)) if s >= 0.5 => Ok(n2 / 2.0 - r * n1.powf(1.0 / s)),
        (Kappa::K2, Scale::Flat(sg)) if sg > 1.0 => Ok(r * n1.powf(2.0 * sg / (sg - 1.0))),
        (Kappa::K2, Scale::S(s)) if s >= 0.5 => Ok(n2 / 2.0 + r * n1.powf(1.0 / s)),
        _ => Err(Error::Invalid(format!("no κ case for {which:?} with {s:?}"))),
    }
}

pub fn kappa_eval(which: Kappa, r: f64, s: Scale, z: &[C64]) -> Result<f64> {
    Ok(ln_kappa(which, r, s, z)?.exp())
}

// ---------------------------------------------------------------------------
// moderateness

#[derive(Clone, Debug)]
pub struct ProbeSpec {
    pub dim: usize,
    pub radii: Vec<f64>,
    pub per_axis: usize,
}

impl ProbeSpec {
    pub fn standard(dim: usize) -> Self {
        let budget = 2.0e6f64;
        let mut m = budget.powf(1.0 / (2.0 * dim as f64)).floor() as usize;
        m = m.clamp(3, 41);
        if m % 2 == 0 {
            m -= 1;
        }
        ProbeSpec {
            dim,
            radii: vec![4.0, 8.0, 16.0],
            per_axis: m,
        }
    }

    pub fn lattice(&self, radius: f64) -> Vec<Vec<f64>> {
        let m = self.per_axis;
        let step = 2.0 * radius / (m - 1) as f64;
        let total = m.pow(self.dim as u32);
        (0..total)
            .map(|mut k| {
                let mut p = vec![0.0; self.dim];
                for j in (0..self.dim).rev() {
                    p[j] = -radius + (k % m) as f64 * step;
                    k /= m;
                }
                p
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum Moderate {
    Certified {
        c: f64,
        ln_max_per_radius: Vec<(f64, f64)>,
    },
    Counterexample {
        x: Vec<f64>,
        y: Vec<f64>,
        ratio: f64,
        ln_max_per_radius: Vec<(f64, f64)>,
    },
}

impl Moderate {
    pub fn accepted(&self) -> bool {
        matches!(self, Moderate::Certified { .. })
    }
}

/// Probe ω(x+y) ≤ C ω(x) v(y) on lattices of growing radius.
pub fn moderate_check(omega: &WeightFn, v: &WeightFn, probes: &ProbeSpec) -> Moderate {
    use rayon::prelude::*;
    let mut per_radius = Vec::new();
    let mut worst = (Vec::new(), Vec::new(), f64::NEG_INFINITY);
    for &radius in &probes.radii {
        let pts = probes.lattice(radius);
        let lw: Vec<f64> = pts.iter().map(|p| omega.ln_eval(p)).collect();
        let lv: Vec<f64> = pts.iter().map(|p| v.ln_eval(p)).collect();
        let (best, i, j) = pts
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut s = vec![0.0; x.len()];
                let mut b = (f64::NEG_INFINITY, i, 0usize);
                for (j, y) in pts.iter().enumerate() {
                    for k in 0..x.len() {
                        s[k] = x[k] + y[k];
                    }
                    let val = omega.ln_eval(&s) - lw[i] - lv[j];
                    if val > b.0 {
                        b = (val, i, j);
                    }
                }
                b
            })
            .reduce(
                || (f64::NEG_INFINITY, 0, 0),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
            );
        per_radius.push((radius, best));
        worst = (pts[i].clone(), pts[j].clone(), best);
    }
    let n = per_radius.len();
    let growing = n >= 3 && {
        let d1 = per_radius[n - 2].1 - per_radius[n - 3].1;
        let d2 = per_radius[n - 1].1 - per_radius[n - 2].1;
        d2 > 0.5 * std::f64::consts::LN_2 && d1 > 0.0
    };
    if growing {
        Moderate::Counterexample {
            x: worst.0,
            y: worst.1,
            ratio: worst.2.exp(),
            ln_max_per_radius: per_radius,
        }
    } else {
        let c = per_radius.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).exp();
        Moderate::Certified {
            c: c.max(1.0),
            ln_max_per_radius: per_radius,
        }
    }
}

// ---------------------------------------------------------------------------
// growth classification

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthFamily {
    /// Finite expansion.
    H0,
    /// log|c_α| ≈ b − r|α|^{1/(2s)}: 𝓗_{0,s} or 𝓗_s.
    PowerExpDecay,
    /// log|c_α| ≈ b + r|α|^{1/(2s)}: dual 𝓗'_s side.
    PowerExpGrowth,
    /// |c_α| ≈ r^{|α|}(α!)^{-1/(2σ)}: flat_{0,σ} or flat_σ.
    FlatDecay,
    /// |c_α| ≈ r^{|α|}(α!)^{1/(2σ)}: dual flat side.
    FlatGrowth,
}

impl GrowthFamily {
    pub fn label(self) -> &'static str {
        match self {
            GrowthFamily::H0 => "H_0",
            GrowthFamily::PowerExpDecay => "H_s|H_{0,s}",
            GrowthFamily::PowerExpGrowth => "dual H_s",
            GrowthFamily::FlatDecay => "flat_sigma|flat_{0,sigma}",
            GrowthFamily::FlatGrowth => "dual flat_sigma",
        }
    }

    pub fn is_flat(self) -> bool {
        matches!(self, GrowthFamily::FlatDecay | GrowthFamily::FlatGrowth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Undetermined,
}

#[derive(Clone, Debug)]
pub struct GrowthClass {
    pub family: GrowthFamily,
    /// s for power-exponential families, σ for flat families.
    pub parameter: f64,
    /// Decay/growth rate r (always ≥ 0 for the reported family).
    pub r: f64,
    /// Signed coefficient of the growth term (positive means growth).
    pub signed_rate: f64,
    pub residual: f64,
    pub side: Side,
}

/// Shells with their per-shell maximum modulus (zero shells omitted).
fn shell_maxima(c: &CoeffArray) -> Vec<(usize, f64)> {
    let t = c.trunc;
    let mut out = Vec::new();
    for n in 0..=t.n {
        let lo = t.shell_start(n);
        let hi = if n == t.n { t.len() } else { t.shell_start(n + 1) };
        let m = c.values[lo..hi].iter().map(|v| v.norm()).fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            out.push((n, m));
        }
    }
    out
}

/// ln of the smallest and largest α! in shell n for dimension d.
fn shell_ln_factorials(d: usize, n: usize) -> (f64, f64) {
    let q = n / d;
    let rem = n % d;
    let mut balanced = vec![q as u32; d];
    for b in balanced.iter_mut().take(rem) {
        *b += 1;
    }
    (MultiIndex(balanced).ln_factorial(), crate::coeff::ln_factorial(n as u32))
}

/// Least squares y ≈ X β, returning (β, rms residual).
fn lstsq(cols: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = y.len();
    let k = cols.len();
    if m < k {
        return None;
    }
    let x = nalgebra::DMatrix::from_fn(m, k, |i, j| cols[j][i]);
    let yv = nalgebra::DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let beta = svd.solve(&yv, 1e-13).ok()?;
    let r = &x * &beta - &yv;
    Some((beta.iter().copied().collect(), (r.norm_squared() / m as f64).sqrt()))
}

fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
        if (hi - lo).abs() < 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Minimize `f` over a log-spaced grid on [lo, hi] then refine.
fn scan_min(lo: f64, hi: f64, steps: usize, f: impl Fn(f64) -> f64) -> f64 {
    let ratio = (hi / lo).ln();
    let grid: Vec<f64> = (0..=steps).map(|i| lo * (ratio * i as f64 / steps as f64).exp()).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
    let mut k = 0;
    for i in 1..vals.len() {
        if vals[i] < vals[k] {
            k = i;
        }
    }
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(steps)];
    golden_min(a, b, &f)
}

/// Smallest number of populated shells needed for a fit.
pub const MIN_SHELLS: usize = 8;
/// Flat fits with |1/(2σ)| below this are reported as the s = 1/2 power family.
pub const FLAT_COEFF_FLOOR: f64 = 0.02;

pub fn classify_growth(c: &CoeffArray) -> Result<GrowthClass> {
    if c.n() + 1 < MIN_SHELLS {
        return Err(Error::Invalid(format!(
            "N={} gives fewer than {MIN_SHELLS} graded shells",
            c.n()
        )));
    }
    let shells = shell_maxima(c);
    let top = shells.last().map(|s| s.0);
    if shells.is_empty() || (shells.len() < MIN_SHELLS && top < Some(c.n())) {
        return Ok(GrowthClass {
            family: GrowthFamily::H0,
            parameter: 0.0,
            r: 0.0,
            signed_rate: 0.0,
            residual: 0.0,
            side: Side::Undetermined,
        });
    }
    if shells.len() < MIN_SHELLS {
        return Err(Error::InsufficientRange(format!(
            "{} populated shells, need {MIN_SHELLS}",
            shells.len()
        )));
    }
    let ns: Vec<f64> = shells.iter().map(|s| s.0 as f64).collect();
    let y: Vec<f64> = shells.iter().map(|s| s.1.ln()).collect();
    let ones = vec![1.0; ns.len()];

    let pe_fit = |s: f64| {
        let t: Vec<f64> = ns.iter().map(|n| n.powf(1.0 / (2.0 * s))).collect();
        lstsq(&[ones.clone(), t], &y)
    };
    let s_best = scan_min(0.05, 20.0, 600, |s| pe_fit(s).map(|f| f.1).unwrap_or(f64::INFINITY));
    let (pe_beta, pe_res) = pe_fit(s_best).ok_or_else(|| Error::InsufficientRange("fit".into()))?;

    let d = c.d();
    let mut flat_best: Option<(Vec<f64>, f64, bool)> = None;
    for use_max in [false, true] {
        let l: Vec<f64> = shells
            .iter()
            .map(|s| {
                let (lo, hi) = shell_ln_factorials(d, s.0);
                if use_max { hi } else { lo }
            })
            .collect();
        if let Some((beta, res)) = lstsq(&[ones.clone(), ns.clone(), l], &y) {
            // β[2] = ∓1/(2σ): the balanced shell member dominates decay, the corner member growth
            let consistent = if use_max { beta[2] > 0.0 } else { beta[2] <= 0.0 };
            if consistent && flat_best.as_ref().is_none_or(|f| res < f.1) {
                flat_best = Some((beta, res, use_max));
            }
        }
    }

    let pick_flat = match &flat_best {
        Some((beta, res, _)) => beta[2].abs() >= FLAT_COEFF_FLOOR && *res < pe_res,
        None => false,
    };
    if pick_flat {
        let (beta, res, _) = flat_best.unwrap();
        let k = beta[2];
        let family = if k < 0.0 { GrowthFamily::FlatDecay } else { GrowthFamily::FlatGrowth };
        Ok(GrowthClass {
            family,
            parameter: 1.0 / (2.0 * k.abs()),
            r: beta[1].exp(),
            signed_rate: beta[1],
            residual: res,
            side: Side::Undetermined,
        })
    } else {
        let k = pe_beta[1];
        let family = if k < 0.0 { GrowthFamily::PowerExpDecay } else { GrowthFamily::PowerExpGrowth };
        Ok(GrowthClass {
            family,
            parameter: s_best,
            r: k.abs(),
            signed_rate: k,
            residual: pe_res,
            side: Side::Undetermined,
        })
    }
}

/// Synthetic coefficients |c_α| = ϑ_{r,s}(α)^{±1}, handy for calibration.
pub fn synthetic_family(trunc: TruncationSpec, spec: &SeqWeightSpec, growth: bool) -> Result<CoeffArray> {
    spec.validate()?;
    let sign = if growth { 1.0 } else { -1.0 };
    Ok(CoeffArray::from_fn(trunc, crate::coeff::Basis::Fock, |a| {
        C64::new((sign * spec.ln_eval(a).unwrap()).exp(), 0.0)
    }))
}

#[derive(Clone, Debug)]
pub struct StftDecayFit {
    pub s: f64,
    pub r: f64,
    pub residual: f64,
    pub decades: f64,
    pub side: Side,
}

/// Relative level below which STFT samples are treated as quadrature noise.
pub const STFT_NOISE_FLOOR: f64 = 1e-13;

/// Fit log|V_φ f| ≈ b − r(|x|^{1/s} + |ξ|^{1/s}) on the upper envelope.
///
/// The same exponent is used on x and ξ.
pub fn classify_gs_via_stft(field: &GridField) -> Result<StftDecayFit> {
    if field.dim % 2 != 0 {
        return Err(Error::InvalidDimension(field.dim));
    }
    let d = field.dim / 2;
    let mags: Vec<f64> = field.values.iter().map(|v| v.norm()).collect();
    let m = mags.iter().cloned().fold(0.0, f64::max);
    if !(m > 0.0) {
        return Err(Error::InsufficientRange("field is zero".into()));
    }
    let floor = m * STFT_NOISE_FLOOR;
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    let mut min_kept = m;
    for (k, &a) in mags.iter().enumerate() {
        if a > floor {
            let p = field.point(k);
            let x = norm(&p[..d]);
            let xi = norm(&p[d..]);
            pts.push((x, xi, a.ln()));
            min_kept = min_kept.min(a);
        }
    }
    let decades = (m / min_kept).log10();
    if decades < 3.0 {
        return Err(Error::InsufficientRange(format!("{decades:.2} decades, need 3")));
    }
    let envelope = |s: f64| -> Vec<(f64, f64)> {
        let t: Vec<f64> = pts.iter().map(|p| p.0.powf(1.0 / s) + p.1.powf(1.0 / s)).collect();
        let ipk = (0..pts.len()).max_by(|&a, &b| pts[a].2.partial_cmp(&pts[b].2).unwrap()).unwrap();
        let t0 = t[ipk];
        let tmax = t.iter().cloned().fold(0.0, f64::max);
        let bins = 48usize;
        let mut best: Vec<Option<(f64, f64)>> = vec![None; bins];
        for (i, p) in pts.iter().enumerate() {
            if t[i] < t0 || tmax <= t0 {
                continue;
            }
            let b = (((t[i] - t0) / (tmax - t0)) * bins as f64).floor().min((bins - 1) as f64) as usize;
            if best[b].is_none_or(|q| p.2 > q.1) {
                best[b] = Some((t[i], p.2));
            }
        }
        best.into_iter().flatten().collect()
    };
    let fit = |s: f64| -> Option<(Vec<f64>, f64)> {
        let env = envelope(s);
        if env.len() < 4 {
            return None;
        }
        let ys: Vec<f64> = env.iter().map(|e| e.1).collect();
        let ts: Vec<f64> = env.iter().map(|e| e.0).collect();
        let (beta, res) = lstsq(&[vec![1.0; ts.len()], ts], &ys)?;
        let span = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - ys.iter().cloned().fold(f64::INFINITY, f64::min);
        Some((beta, res / span.max(1e-300)))
    };
    let s = scan_min(0.15, 4.0, 200, |s| fit(s).map(|f| f.1).unwrap_or(f64::INFINITY));
    let (beta, res) = fit(s).ok_or_else(|| Error::InsufficientRange("envelope too short".into()))?;
    Ok(StftDecayFit {
        s,
        r: -beta[1],
        residual: res,
        decades,
        side: Side::Undetermined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Basis;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn seq_weight_examples() {
        let s = SeqWeightSpec { kind: SeqKind::PowerExp { s: 0.5 }, r: 1.0 };
        assert!((seq_weight_eval(&s, &mi(&[3])).unwrap() - 3f64.exp()).abs() < 1e-12);
        let f = SeqWeightSpec { kind: SeqKind::Flat { sigma: 1.0 }, r: 2.0 };
        assert!((seq_weight_eval(&f, &mi(&[2])).unwrap() - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(seq_weight_eval(&f, &mi(&[0, 0])).unwrap(), 1.0);
        let bad = SeqWeightSpec { kind: SeqKind::Flat { sigma: 1.0 }, r: 0.0 };
        assert!(seq_weight_eval(&bad, &mi(&[1])).is_err());
    }

    #[test]
    fn kappa_examples() {
        // κ1, s ≥ 1/2, |z|² = 2, s = 1: e^{1 - r√2}
        let z = [C64::new(1.0, 1.0)];
        let v = kappa_eval(Kappa::K1, 0.5, Scale::S(1.0), &z).unwrap();
        assert!((v - (1.0 - 0.5 * 2f64.sqrt()).exp()).abs() < 1e-12);
        let z1 = [C64::new(0.0, 1.0)];
        let v = kappa_eval(Kappa::K1, 0.7, Scale::Flat(1.0), &z1).unwrap();
        assert!((v - 0.7f64.exp()).abs() < 1e-12);
        let z0 = [C64::new(0.0, 0.0)];
        for (k, s) in [(Kappa::K1, Scale::S(0.3)), (Kappa::K1, Scale::S(2.0)), (Kappa::K2, Scale::Flat(2.0))] {
            assert_eq!(kappa_eval(k, 1.0, s, &z0).unwrap(), 1.0);
        }
        assert!(kappa_eval(Kappa::K2, 1.0, Scale::S(0.3), &z0).is_err());
        assert!(kappa_eval(Kappa::K2, 1.0, Scale::Flat(0.5), &z0).is_err());
    }

    #[test]
    fn weight_parse_and_eval() {
        let w = WeightFn::parse("poly:2*exp:1,1").unwrap();
        let x = [3.0, 4.0];
        assert!((w.ln_eval(&x) - (26f64.ln() + 5.0)).abs() < 1e-12);
        assert_eq!(w.to_string(), "poly:2*exp:1,1");
        assert!(WeightFn::parse("").is_err());
        assert!(WeightFn::parse("exp:1").is_err());
        assert!(WeightFn::parse("1").unwrap().is_one());
        let f = WeightFn::parse("flat:1,1").unwrap();
        assert!((f.ln_eval(&[2.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn peetre_weight_is_moderate() {
        let w = WeightFn::parse("poly:2").unwrap();
        let res = moderate_check(&w, &w, &ProbeSpec::standard(1));
        match res {
            Moderate::Certified { c, .. } => assert!(c <= 2.0 + 1e-12, "C={c}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gaussian_weight_is_not_moderate() {
        let w = WeightFn::parse("gauss:1").unwrap();
        let v = WeightFn::parse("exp:1,1").unwrap();
        let res = moderate_check(&w, &v, &ProbeSpec::standard(1));
        assert!(!res.accepted());
        if let Moderate::Counterexample { x, y, ratio, .. } = res {
            let direct = w.ln_eval(&[x[0] + y[0]]) - w.ln_eval(&x) - v.ln_eval(&y);
            assert!(direct > 100.0);
            assert!(ratio.ln() >= direct - 1e-9 || ratio.is_infinite());
        }
    }

    #[test]
    fn trivial_weight_has_unit_constant() {
        match moderate_check(&WeightFn::one(), &WeightFn::one(), &ProbeSpec::standard(2)) {
            Moderate::Certified { c, .. } => assert_eq!(c, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certified_moderate_gives_two_sided_bound() {
        // ω(x)/v(y) ≤ C ω(x+y) follows from ω(x) = ω(x+y-y) ≤ C ω(x+y) v(-y)
        let w = WeightFn::parse("exp:0.5,2").unwrap();
        let v = WeightFn::parse("exp:0.5,2").unwrap();
        let spec = ProbeSpec::standard(1);
        let c = match moderate_check(&w, &v, &spec) {
            Moderate::Certified { c, .. } => c,
            other => panic!("{other:?}"),
        };
        let pts = spec.lattice(16.0);
        for x in &pts {
            for y in &pts {
                let lhs = w.ln_eval(x) - v.ln_eval(y);
                let rhs = c.ln() + w.ln_eval(&[x[0] + y[0]]);
                assert!(lhs <= rhs + 1e-9);
            }
        }
    }

    #[test]
    fn classify_examples() {
        let t = TruncationSpec::new(1, 30).unwrap();
        let c = CoeffArray::from_fn(t, Basis::Fock, |a| C64::new((-0.5 * a.ln_factorial()).exp(), 0.0));
        let g = classify_growth(&c).unwrap();
        assert_eq!(g.family, GrowthFamily::FlatDecay);
        assert!((g.parameter - 1.0).abs() < 1e-6);

        let d = CoeffArray::delta(t, Basis::Fock, &mi(&[0])).unwrap();
        assert_eq!(classify_growth(&d).unwrap().family, GrowthFamily::H0);
        assert_eq!(classify_growth(&CoeffArray::zeros(t, Basis::Fock)).unwrap().family, GrowthFamily::H0);

        let e = CoeffArray::from_fn(t, Basis::Fock, |a| C64::new((-(a.abs() as f64)).exp(), 0.0));
        let g = classify_growth(&e).unwrap();
        assert_eq!(g.family, GrowthFamily::PowerExpDecay);
        assert!((g.parameter - 0.5).abs() < 1e-3, "{g:?}");
        assert!((g.r - 1.0).abs() < 1e-6);
        assert_eq!(g.side, Side::Undetermined);

        let short = CoeffArray::zeros(TruncationSpec::new(1, 5).unwrap(), Basis::Fock);
        assert!(classify_growth(&short).is_err());
    }

    #[test]
    fn classify_two_dimensional_flat() {
        let t = TruncationSpec::new(2, 24).unwrap();
        let spec = SeqWeightSpec { kind: SeqKind::Flat { sigma: 2.0 }, r: 1.5 };
        let c = synthetic_family(t, &spec, false).unwrap();
        let g = classify_growth(&c).unwrap();
        assert_eq!(g.family, GrowthFamily::FlatDecay);
        assert!((g.parameter - 2.0).abs() < 0.2, "{g:?}");
    }

    proptest! {
        #[test]
        fn theta_nondecreasing_in_r(s in 0.2f64..3.0, r in 0.1f64..3.0, dr in 0.0f64..2.0, n in 0u32..40) {
            let a = mi(&[n]);
            let lo = SeqWeightSpec { kind: SeqKind::PowerExp { s }, r };
            let hi = SeqWeightSpec { kind: SeqKind::PowerExp { s }, r: r + dr };
            prop_assert!(lo.ln_eval(&a).unwrap() <= hi.ln_eval(&a).unwrap() + 1e-12);
        }

        #[test]
        fn duality_shift_of_fitted_rate(s in 0.4f64..1.5, r0 in 1.0f64..2.0, r in 0.1f64..0.9) {
            let t = TruncationSpec::new(1, 36).unwrap();
            let spec = SeqWeightSpec { kind: SeqKind::PowerExp { s }, r: r0 };
            let c = synthetic_family(t, &spec, false).unwrap();
            let base = classify_growth(&c).unwrap();
            let theta = SeqWeightSpec { kind: SeqKind::PowerExp { s }, r };
            let shifted = c.map_indexed(&|a, v| v * theta.ln_eval(a).unwrap().exp());
            let moved = classify_growth(&shifted).unwrap();
            prop_assert_eq!(base.family, moved.family);
            prop_assert!((moved.signed_rate - base.signed_rate - r).abs() < 1e-3 * (1.0 + r0),
                "base {:?} moved {:?}", base, moved);
        }
    }
}
