//! `fockcalc`: transforms, norms and verification suites with JSON reports.
//!
//! Exit codes: 0 success, 1 a verification tolerance was violated, 2 usage
//! error, 3 input or numerical failure.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fockcalc::bargmann::{bargmann_coeff, fock_eval, stft_gaussian, StftQuad};
use fockcalc::hermite::{hermite_analyze, hermite_synthesize, QuadratureRule, Sampled};
use fockcalc::mixednorm::{b_norm_closed_form, fock_norm_fn, mixed_norm, modulation_norm, MixedNormSpec};
use fockcalc::verify::{run_suite, RunConfig, SUITES};
use fockcalc::weights::{classify_growth, WeightFn};
use fockcalc::{Basis, CoeffArray, GridField, MultiIndex, TruncationSpec, C64};

use config::Settings;

#[derive(Debug)]
pub struct UsageError(pub String);

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<fockcalc::Error> for Failure {
    fn from(e: fockcalc::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "fockcalc", version, about = "Bargmann-transform calculus: transforms, norms and verification suites")]
struct Cli {
    /// key=value config file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// dimension d
    #[arg(long, global = true)]
    d: Option<usize>,
    /// truncation order N (|alpha| <= N)
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Gauss-Hermite nodes per axis
    #[arg(long = "Q", global = true)]
    q: Option<usize>,
    /// grid half-width
    #[arg(long = "R", global = true)]
    r: Option<f64>,
    /// grid step
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// complex parameter, e.g. 1+0.5i
    #[arg(long, global = true, allow_hyphen_values = true)]
    t: Option<String>,
    /// tolerance override, written --tol.NAME VALUE
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE", hide = true)]
    tol: Vec<String>,
    /// gauss, h:3, h:1,2, packet:x0,xi0, one, fock:k
    #[arg(long, global = true)]
    preset: Option<String>,
    /// CoeffArray JSON or binary grid file instead of a preset
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Hermite analysis, Bargmann transform or Gaussian STFT of an input
    Transform { kind: TransformKind },
    /// Run a named verification suite
    Verify { suite: String },
    /// Mixed, modulation or Fock norm of an input
    Norm {
        /// L (on R^d), M (modulation), A (Fock, via U), B (Fock, closed form)
        #[arg(long)]
        space: Space,
        /// exponents, e.g. 2,2 or p=2,1;E=swap or Lpq(2,1)
        #[arg(long)]
        p: String,
        /// weight, e.g. 1, poly:1, exp:1,0.5
        #[arg(long, default_value = "1")]
        omega: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TransformKind {
    Bargmann,
    Stft,
    Hermite,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Space {
    #[value(name = "L")]
    L,
    #[value(name = "M")]
    M,
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
}

/// An input object: a callable, a coefficient series or samples.
enum Input {
    Func(Box<dyn Fn(&[f64]) -> C64 + Sync>),
    Hermite(CoeffArray),
    Fock(CoeffArray),
    Grid(GridField),
}

fn nums(s: &str) -> Result<Vec<f64>, UsageError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| UsageError(format!("bad number '{v}' in preset"))))
        .collect()
}

fn delta(d: usize, n: usize, basis: Basis, alpha: Vec<u32>) -> Result<CoeffArray, Failure> {
    if alpha.len() != d {
        return Err(Failure::Usage(format!("index {alpha:?} does not match d = {d}")));
    }
    let need = alpha.iter().sum::<u32>() as usize;
    let trunc = TruncationSpec::new(d, n.max(need))?;
    Ok(CoeffArray::delta(trunc, basis, &MultiIndex(alpha))?)
}

fn preset_input(p: &str, d: usize, n: usize) -> Result<Input, Failure> {
    let (name, args) = p.split_once(':').unwrap_or((p, ""));
    let index = |s: &str| -> Result<Vec<u32>, Failure> {
        s.split(',')
            .map(|v| v.trim().parse::<u32>().map_err(|_| Failure::Usage(format!("bad index '{v}' in preset '{p}'"))))
            .collect()
    };
    match name {
        "gauss" => Ok(Input::Hermite(delta(d, n, Basis::Hermite, vec![0; d])?)),
        "h" => Ok(Input::Hermite(delta(d, n, Basis::Hermite, index(args)?)?)),
        "one" => Ok(Input::Fock(delta(d, n, Basis::Fock, vec![0; d])?)),
        "fock" => Ok(Input::Fock(delta(d, n, Basis::Fock, index(args)?)?)),
        "packet" => {
            let v = nums(args)?;
            if d != 1 || v.len() != 2 {
                return Err(Failure::Usage("packet:x0,xi0 is one-dimensional".into()));
            }
            let (x0, xi0) = (v[0], v[1]);
            let c = std::f64::consts::PI.powf(-0.25);
            Ok(Input::Func(Box::new(move |x| C64::from_polar(c * (-(x[0] - x0).powi(2) / 2.0).exp(), xi0 * x[0]))))
        }
        _ => Err(Failure::Usage(format!("unknown preset '{p}'"))),
    }
}

fn file_input(path: &Path, bytes: &[u8]) -> Result<Input, Failure> {
    if bytes.is_empty() {
        return Err(Failure::Runtime(format!("input file {} is empty", path.display())));
    }
    if let Ok(text) = std::str::from_utf8(bytes) {
        if text.trim_start().starts_with('{') {
            let c = CoeffArray::from_json(text)?;
            return Ok(match c.basis {
                Basis::Hermite => Input::Hermite(c),
                Basis::Fock => Input::Fock(c),
            });
        }
    }
    Ok(Input::Grid(GridField::from_bytes(bytes)?))
}

struct Ctx {
    settings: Settings,
    input: Option<(Input, Vec<u8>)>,
}

impl Ctx {
    fn d(&self) -> usize {
        self.settings.run.d.unwrap_or(1)
    }

    fn n(&self) -> usize {
        self.settings.run.n.unwrap_or(16)
    }

    fn rule(&self) -> Result<QuadratureRule, Failure> {
        Ok(match self.settings.run.q {
            Some(q) => QuadratureRule::gauss_hermite(q)?,
            None => QuadratureRule::default_for(self.n())?,
        })
    }

    /// Default lattice: fine in d = 1, coarser in d = 2 so a 4-D grid stays small.
    fn lattice(&self) -> (f64, f64) {
        let (r0, h0) = if self.d() == 1 { (6.0, 0.1) } else { (5.0, 0.25) };
        (self.settings.run.r.unwrap_or(r0), self.settings.run.h.unwrap_or(h0))
    }

    fn take_input(&mut self) -> Result<Input, Failure> {
        match self.input.take() {
            Some((i, _)) => Ok(i),
            None => match &self.settings.run.preset {
                Some(p) => preset_input(p, self.d(), self.n()),
                None => Err(Failure::Usage("no input: pass --preset or --input".into())),
            },
        }
    }

    fn hermite_of(&self, input: Input) -> Result<CoeffArray, Failure> {
        let trunc = TruncationSpec::new(self.d(), self.n())?;
        match input {
            Input::Hermite(c) => Ok(if self.settings.run.n.is_some() { c.retruncate(trunc.n) } else { c }),
            Input::Func(f) => Ok(hermite_analyze(Sampled::Fn(&*f), trunc, &self.rule()?)?),
            Input::Grid(g) => Ok(hermite_analyze(Sampled::Grid(&g), trunc, &self.rule()?)?),
            Input::Fock(_) => Err(Failure::Usage("input is already a Fock-space series".into())),
        }
    }

    fn fock_of(&self, input: Input) -> Result<CoeffArray, Failure> {
        match input {
            Input::Fock(c) => Ok(c),
            other => Ok(bargmann_coeff(&self.hermite_of(other)?)?),
        }
    }
}

/// sha256 over a git-style blob header followed by the content.
fn content_hash(parts: &[&[u8]]) -> String {
    let len: usize = parts.iter().map(|p| p.len()).sum();
    let mut h = Sha256::new();
    h.update(format!("blob {len}\0").as_bytes());
    for p in parts {
        h.update(p);
    }
    format!("sha256:{:x}", h.finalize())
}

fn report(ctx: &Ctx, command: &str, target: &str, args: Value, result: Value) -> Value {
    let config = serde_json::to_value(&ctx.settings.run).unwrap_or(Value::Null);
    let echo = json!({ "config": config, "args": args });
    let canon = serde_json::to_vec(&echo).unwrap_or_default();
    let input_bytes: &[u8] = ctx.input.as_ref().map(|(_, b)| b.as_slice()).unwrap_or(&[]);
    json!({
        "command": command,
        "target": target,
        "config": echo["config"],
        "args": echo["args"],
        "content_hash": content_hash(&[&canon, input_bytes]),
        "result": result,
    })
}

fn out_dir(ctx: &Ctx, default: Option<&str>) -> Result<Option<PathBuf>, Failure> {
    let dir = match (&ctx.settings.out, default) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Ok(None),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(Some(dir))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<String, Failure> {
    let p = dir.join(name);
    std::fs::write(&p, bytes).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display())))?;
    Ok(p.display().to_string())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

fn cmd_transform(ctx: &mut Ctx, kind: TransformKind) -> Result<(Value, bool), Failure> {
    let input = ctx.take_input()?;
    let dir = out_dir(ctx, Some("fockcalc-out"))?.expect("default directory");
    let mut files = Vec::new();
    let result = match kind {
        TransformKind::Hermite | TransformKind::Bargmann => {
            let herm = ctx.hermite_of(input)?;
            let c = if matches!(kind, TransformKind::Bargmann) { bargmann_coeff(&herm)? } else { herm };
            let name = if matches!(kind, TransformKind::Bargmann) { "bargmann.json" } else { "hermite.json" };
            files.push(write(&dir, name, c.to_json().as_bytes())?);
            let growth = classify_growth(&c).ok().map(|g| {
                json!({ "family": g.family.label(), "parameter": g.parameter, "r": g.r, "residual": g.residual })
            });
            let largest = c
                .trunc
                .indices()
                .into_iter()
                .zip(&c.values)
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .map(|(a, v)| json!({ "index": a.0, "value": [v.re, v.im] }));
            json!({ "basis": c.basis.name(), "d": c.d(), "N": c.n(), "l2_norm": c.l2_norm(),
                    "largest": largest, "growth": growth })
        }
        TransformKind::Stft => {
            let d = ctx.d();
            let (r, h) = ctx.lattice();
            let g = match input {
                Input::Func(f) => stft_gaussian(Sampled::Fn(&*f), d, r, h, StftQuad::default())?,
                Input::Grid(s) => stft_gaussian(Sampled::Grid(&s), s.dim, r, h, StftQuad::default())?,
                Input::Hermite(c) => {
                    let f = |y: &[f64]| hermite_synthesize(&c, y).unwrap_or_default();
                    stft_gaussian(Sampled::Fn(&f), c.d(), r, h, StftQuad::default())?
                }
                Input::Fock(_) => return Err(Failure::Usage("stft needs a function on R^d".into())),
            };
            files.push(write(&dir, "stft.grid", &g.to_bytes())?);
            files.push(write(&dir, "stft_x.csv", g.slice_csv(0).as_bytes())?);
            json!({ "dim": g.dim, "R": g.r, "h": g.h, "nodes_per_axis": g.n, "max_abs": g.max_abs() })
        }
    };
    let kind_name = serde_json::to_value(kind).unwrap_or(Value::Null);
    let mut rep = report(ctx, "transform", kind_name.as_str().unwrap_or(""), json!({}), result);
    rep["files"] = json!(files);
    write(&dir, "report.json", pretty(&rep).as_bytes())?;
    Ok((rep, true))
}

fn cmd_verify(ctx: &Ctx, suite: &str) -> Result<(Value, bool), Failure> {
    if !SUITES.contains(&suite) {
        return Err(Failure::Usage(format!("unknown suite '{suite}'; expected one of: {}", SUITES.join(", "))));
    }
    let checks = run_suite(suite, &ctx.settings.run)?;
    let pass = checks.iter().all(|c| c.pass);
    let result = json!({ "pass": pass, "checks": checks });
    let rep = report(ctx, "verify", suite, json!({}), result);
    if let Some(dir) = out_dir(ctx, None)? {
        write(&dir, &format!("verify-{suite}.json"), pretty(&rep).as_bytes())?;
    }
    Ok((rep, pass))
}

fn norm_spec(p: &str, dim: usize) -> Result<MixedNormSpec, Failure> {
    let t = p.trim();
    if t.is_empty() {
        return Err(Failure::Usage("empty exponent spec".into()));
    }
    let s = if t.contains('=') || t.starts_with("Lpq") { t.to_string() } else { format!("p={t}") };
    Ok(MixedNormSpec::parse(&s, dim)?)
}

fn cmd_norm(ctx: &mut Ctx, space: Space, p: &str, omega: &str) -> Result<(Value, bool), Failure> {
    let w = WeightFn::parse(omega)?;
    let input = ctx.take_input()?;
    let d = ctx.d();
    let (r, h) = ctx.lattice();
    let value = match space {
        Space::L => {
            let g = match input {
                Input::Grid(g) => g,
                Input::Func(f) => GridField::from_fn(d, r, h, |x| f(x))?,
                Input::Hermite(c) => GridField::from_fn(c.d(), r, h, |x| hermite_synthesize(&c, x).unwrap_or_default())?,
                Input::Fock(_) => return Err(Failure::Usage("space L needs a function on R^d".into())),
            };
            let g = if w.is_one() { g } else { g.map_with_point(|x, v| v * w.eval(x)) };
            mixed_norm(&g, &norm_spec(p, g.dim)?)?
        }
        Space::M => match input {
            Input::Grid(g) => modulation_norm(Sampled::Grid(&g), g.dim, &norm_spec(p, 2 * g.dim)?, &w, r, h, StftQuad::default())?,
            Input::Func(f) => modulation_norm(Sampled::Fn(&*f), d, &norm_spec(p, 2 * d)?, &w, r, h, StftQuad::default())?,
            Input::Hermite(c) => {
                let f = |y: &[f64]| hermite_synthesize(&c, y).unwrap_or_default();
                modulation_norm(Sampled::Fn(&f), c.d(), &norm_spec(p, 2 * c.d())?, &w, r, h, StftQuad::default())?
            }
            Input::Fock(_) => return Err(Failure::Usage("space M needs a function on R^d".into())),
        },
        Space::A | Space::B => {
            let c = ctx.fock_of(input)?;
            let f = |z: &[C64]| fock_eval(&c, z).unwrap_or_default();
            if matches!(space, Space::A) {
                fock_norm_fn(&f, c.d(), &norm_spec(p, 2 * c.d())?, &w, r, h)?
            } else {
                let e = p.trim().trim_start_matches("p=");
                let pe = if e == "inf" { f64::INFINITY } else { e.parse::<f64>().map_err(|_| Failure::Usage(format!("space B takes one exponent, got '{p}'")))? };
                b_norm_closed_form(&f, c.d(), pe, &w, r, h)?
            }
        }
    };
    let args = json!({ "space": space, "p": p, "omega": omega, "R": r, "h": h });
    let rep = report(ctx, "norm", &format!("{space:?}"), args, json!({ "norm": value }));
    if let Some(dir) = out_dir(ctx, None)? {
        write(&dir, "norm.json", pretty(&rep).as_bytes())?;
    }
    Ok((rep, true))
}

fn settings_from(cli: &Cli) -> Result<Settings, Failure> {
    let mut s = Settings { run: RunConfig::new(1), out: None };
    if let Some(path) = &cli.config {
        config::load_file(path, &mut s)?;
    }
    let mut set = |k: &str, v: Option<String>| v.map(|v| config::apply(&mut s, k, &v)).transpose();
    set("d", cli.d.map(|v| v.to_string()))?;
    set("N", cli.n.map(|v| v.to_string()))?;
    set("Q", cli.q.map(|v| v.to_string()))?;
    set("R", cli.r.map(|v| v.to_string()))?;
    set("h", cli.h.map(|v| v.to_string()))?;
    set("seed", cli.seed.map(|v| v.to_string()))?;
    set("t", cli.t.clone())?;
    set("preset", cli.preset.clone())?;
    set("out", cli.out.as_ref().map(|p| p.display().to_string()))?;
    for kv in &cli.tol {
        let (k, v) = kv.split_once('=').ok_or_else(|| UsageError(format!("--tol.{kv} needs a value")))?;
        config::apply(&mut s, &format!("tol.{k}"), v)?;
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<(Value, bool), Failure> {
    let settings = settings_from(&cli)?;
    let input = match &cli.input {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
            Some((file_input(path, &bytes)?, bytes))
        }
        None => None,
    };
    let mut ctx = Ctx { settings, input };
    match &cli.cmd {
        Cmd::Transform { kind } => cmd_transform(&mut ctx, *kind),
        Cmd::Verify { suite } => cmd_verify(&ctx, suite),
        Cmd::Norm { space, p, omega } => cmd_norm(&mut ctx, *space, p, omega),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(config::normalize_args(std::env::args())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok((rep, pass)) => {
            let _ = std::io::stdout().write_all(pretty(&rep).as_bytes());
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
