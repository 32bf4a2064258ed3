//! Experiment runner behind the CLI: resolved configs, deterministic
//! CSV/JSON artifacts plus a manifest per run, an output-prefix lockfile,
//! and the property-suite verifier that turns module invariants into a
//! reusable proof harness.
//!
//! Determinism contract: identical configs produce byte-identical CSV and
//! JSON files. Floats print with 17 significant digits, exact rationals as
//! "num/den", and record order is fixed per subcommand. Parallel float
//! reductions are always collected in a fixed order before summing.

use crate::circle::{self, ArcConfig, NormKind};
use crate::densities;
use crate::enumerate;
use crate::forms::{self, Form};
use crate::freeness;
use crate::lattice::Lattice;
use crate::minima::successive_minima;
use crate::theta;
use crate::{rat, Budget, Error, Result, DEFAULT_BUDGET};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const SUBCOMMANDS: &[&str] = &[
    "survey",
    "count",
    "e-star",
    "tangent-count",
    "theta",
    "majorant",
    "arcs",
    "s-beta",
    "major-integral",
    "count-m",
    "shrink",
    "lemma23",
    "c-dn",
    "densities",
    "verify-lemmas",
];

/// A resolved experiment: subcommand name, optional form file, the raw
/// key-value parameters, and an optional artifact path prefix.
#[derive(Debug, Clone, Default)]
pub struct ExperimentConfig {
    pub command: String,
    pub form_file: Option<PathBuf>,
    pub params: BTreeMap<String, String>,
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub aggregates: Value,
    pub csv: Option<String>,
    pub manifest: Value,
    pub written: Vec<PathBuf>,
}

/// Process exit status for a failed run: 2 for configuration problems,
/// 3 when a node budget or 128-bit range is exhausted, 4 when a checked
/// invariant fails at runtime.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::BudgetExceeded { .. } | Error::Overflow => 3,
        Error::InvariantViolation(_) => 4,
        _ => 2,
    }
}

struct Params<'a> {
    map: &'a BTreeMap<String, String>,
    seen: RefCell<BTreeMap<String, String>>,
}

impl<'a> Params<'a> {
    fn new(map: &'a BTreeMap<String, String>) -> Self {
        Params {
            map,
            seen: RefCell::new(BTreeMap::new()),
        }
    }

    fn record(&self, key: &str, resolved: String) {
        self.seen.borrow_mut().insert(key.to_string(), resolved);
    }

    fn raw(&self, key: &str) -> Option<String> {
        let v = self.map.get(key).cloned();
        if let Some(v) = &v {
            self.record(key, v.clone());
        }
        v
    }

    fn req(&self, key: &str) -> Result<String> {
        self.raw(key)
            .ok_or_else(|| Error::Config(format!("missing required parameter --{key}")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, &self.req(key)?)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(v) => parse_f64(key, &v),
            None => {
                self.record(key, fmt_f64(default));
                Ok(default)
            }
        }
    }

    fn u64(&self, key: &str) -> Result<u64> {
        parse_int(key, &self.req(key)?)
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            Some(v) => parse_int(key, &v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    fn u32(&self, key: &str) -> Result<u32> {
        parse_int(key, &self.req(key)?)
    }

    fn i64(&self, key: &str) -> Result<i64> {
        parse_int(key, &self.req(key)?)
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            Some(v) => match v.as_str() {
                "true" | "1" => Ok(true),
                "false" | "0" => Ok(false),
                other => Err(Error::Config(format!(
                    "parameter --{key}: expected true or false, got {other:?}"
                ))),
            },
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    /// Exact rational parse ("p/q" or decimal), for threshold parameters.
    fn rational_or(&self, key: &str, default: &str) -> Result<BigRational> {
        let v = match self.raw(key) {
            Some(v) => v,
            None => {
                self.record(key, default.to_string());
                default.to_string()
            }
        };
        rat::parse(&v).map_err(|_| Error::Config(format!("parameter --{key}: not a rational: {v:?}")))
    }

    fn rational(&self, key: &str) -> Result<BigRational> {
        let v = self.req(key)?;
        rat::parse(&v).map_err(|_| Error::Config(format!("parameter --{key}: not a rational: {v:?}")))
    }

    /// Comma-separated integer vector, e.g. "3,4,5,-6".
    fn point(&self, key: &str) -> Result<Vec<i128>> {
        let v = self.req(key)?;
        v.split(',')
            .map(|t| {
                t.trim()
                    .parse::<i128>()
                    .map_err(|_| Error::Config(format!("parameter --{key}: bad integer {t:?}")))
            })
            .collect()
    }

    /// Every provided parameter must have been consumed by the subcommand;
    /// the resolved map (defaults included) feeds the manifest.
    fn finish(self) -> Result<BTreeMap<String, String>> {
        let seen = self.seen.into_inner();
        for key in self.map.keys() {
            if !seen.contains_key(key) {
                return Err(Error::Config(format!(
                    "parameter --{key} is not used by this subcommand"
                )));
            }
        }
        Ok(seen)
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("parameter --{key}: expected a number, got {v:?}")))
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("parameter --{key}: expected an integer, got {v:?}")))
}

/// 17 significant digits: enough for an exact f64 round trip, fixed width.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Always "num/den", even for integers, so fields parse uniformly.
pub fn fmt_rat(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn fmt_ivec(x: &[i128]) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn lock_path(prefix: &Path) -> PathBuf {
    with_suffix(prefix, ".lock")
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn acquire_lock(prefix: &Path) -> Result<LockGuard> {
    let path = lock_path(prefix);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    match fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&path)
    {
        Ok(mut fh) => {
            let _ = writeln!(fh, "pid {}", std::process::id());
            Ok(LockGuard { path })
        }
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
            "output prefix {} is busy: lockfile {} exists",
            prefix.display(),
            path.display()
        ))),
        Err(e) => Err(e.into()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

fn pretty(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

type Csv = (String, Vec<String>);

fn csv_text(csv: &Csv) -> String {
    let mut out = String::with_capacity(csv.0.len() + 32 * csv.1.len());
    out.push_str(&csv.0);
    out.push('\n');
    for row in &csv.1 {
        out.push_str(row);
        out.push('\n');
    }
    out
}

/// Execute one experiment: acquire the output lock, parse the form,
/// dispatch, then write manifest + CSV + JSON aggregates under the prefix.
pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    if !SUBCOMMANDS.contains(&cfg.command.as_str()) {
        return Err(Error::Config(format!(
            "unknown subcommand {:?}",
            cfg.command
        )));
    }
    let _lock = match &cfg.output {
        Some(prefix) => Some(acquire_lock(prefix)?),
        None => None,
    };
    let params = Params::new(&cfg.params);
    let budget_cap = resolve_budget(&params)?;
    let form = match &cfg.form_file {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let mut f = Form::parse_poly(&text)?;
            if let Some(delta) = params.raw("delta") {
                let delta: i128 = parse_int("delta", &delta)?;
                f = f.with_discriminant(BigInt::from(delta))?;
            }
            Some(f)
        }
        None => None,
    };
    let (csv, aggregates) = dispatch(&cfg.command, form.as_ref(), &params, budget_cap)?;
    let consumed = params.finish()?;
    let manifest = json!({
        "command": cfg.command,
        "form_file": cfg.form_file.as_ref().map(|p| p.display().to_string()),
        "output": cfg.output.as_ref().map(|p| p.display().to_string()),
        "params": consumed,
        "budget": budget_cap,
        "library_version": env!("CARGO_PKG_VERSION"),
    });
    let mut written = Vec::new();
    if let Some(prefix) = &cfg.output {
        written.push(write_text(
            &with_suffix(prefix, ".manifest.json"),
            &pretty(&manifest)?,
        )?);
        if let Some(csv_data) = &csv {
            written.push(write_text(&with_suffix(prefix, ".csv"), csv_data)?);
        }
        written.push(write_text(
            &with_suffix(prefix, ".json"),
            &pretty(&aggregates)?,
        )?);
    }
    Ok(RunArtifacts {
        aggregates,
        csv,
        manifest,
        written,
    })
}

/// FREEPOINTS_BUDGET overrides --budget overrides the library default.
fn resolve_budget(params: &Params) -> Result<u64> {
    if let Ok(v) = std::env::var("FREEPOINTS_BUDGET") {
        let cap: u64 = v.trim().parse().map_err(|_| {
            Error::Config(format!("FREEPOINTS_BUDGET must be an integer, got {v:?}"))
        })?;
        params.record("budget", cap.to_string());
        return Ok(cap);
    }
    params.u64_or("budget", DEFAULT_BUDGET)
}

fn require_form<'f>(form: Option<&'f Form>) -> Result<&'f Form> {
    form.ok_or_else(|| Error::Config("this subcommand needs --form <file.poly>".into()))
}

fn dispatch(
    command: &str,
    form: Option<&Form>,
    p: &Params,
    cap: u64,
) -> Result<(Option<String>, Value)> {
    let (csv, aggregates) = match command {
        "survey" => cmd_survey(require_form(form)?, p, cap)?,
        "count" => cmd_count(require_form(form)?, p, cap)?,
        "e-star" => cmd_e_star(require_form(form)?, p, cap)?,
        "tangent-count" => cmd_tangent_count(require_form(form)?, p, cap)?,
        "theta" => cmd_theta(require_form(form)?, p, cap)?,
        "majorant" => cmd_majorant(require_form(form)?, p, cap)?,
        "arcs" => cmd_arcs(form, p)?,
        "s-beta" => cmd_s_beta(require_form(form)?, p, cap)?,
        "major-integral" => cmd_major_integral(require_form(form)?, p, cap)?,
        "count-m" => cmd_count_m(require_form(form)?, p, cap)?,
        "shrink" => cmd_shrink(p, cap)?,
        "lemma23" => cmd_lemma23(p)?,
        "c-dn" => cmd_c_dn(p)?,
        "densities" => cmd_densities(require_form(form)?, p, cap)?,
        "verify-lemmas" => cmd_verify(p, cap)?,
        _ => unreachable!("validated above"),
    };
    Ok((csv.as_ref().map(csv_text), aggregates))
}

fn cmd_survey(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let b = p.f64("B")?;
    let eps = p.rational_or("epsilon", "0")?;
    let survey = freeness::freeness_survey(f, b, &eps, cap)?;
    let header = "x,norm_sq,grad_gcd,det_sq,minima_sq,freeness".to_string();
    let rows = survey
        .records
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                fmt_ivec(&r.x),
                r.norm_sq,
                r.grad_gcd,
                fmt_rat(&r.det_sq),
                r.minima_sq
                    .iter()
                    .map(fmt_rat)
                    .collect::<Vec<_>>()
                    .join(" "),
                fmt_f64(r.freeness)
            )
        })
        .collect();
    let histogram: BTreeMap<String, u64> = survey
        .histogram
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let aggregates = json!({
        "b": b,
        "epsilon": fmt_rat(&eps),
        "n_points": survey.n_points,
        "n_free": survey.n_free,
        "n_nonfree": survey.n_nonfree,
        "excluded_low_height": survey.excluded_low_height,
        "median_freeness": survey.median,
        "mean_freeness": survey.mean,
        "reference": survey.reference,
        "histogram_bin_width": 0.05,
        "histogram": histogram,
    });
    Ok((Some((header, rows)), aggregates))
}

fn cmd_count(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let b = p.f64("B")?;
    let count = enumerate::count_nv(f, b, cap)?;
    let n = f.n_vars() as i32;
    let d = f.degree() as i32;
    let ratio = if n > d {
        Some(count as f64 / b.powi(n - d))
    } else {
        None
    };
    Ok((
        None,
        json!({
            "b": b,
            "count": count,
            "growth_exponent": n - d,
            "ratio": ratio,
        }),
    ))
}

fn cmd_e_star(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let r = p.f64("R")?;
    let eps = p.rational("epsilon")?;
    let eps_f = rat::to_f64(&eps);
    let mut data = enumerate::shell_lattice_data(f, r, cap)?;
    data.sort_by(|a, b| (forms::norm_sq(&a.x), &a.x).cmp(&(forms::norm_sq(&b.x), &b.x)));
    let count = enumerate::count_e_star_from(&data, r, &eps)?;
    let majorant = enumerate::e_star_majorant_from(&data, r, eps_f, cap)?;
    let header = "x,norm_sq,last_minima_sq".to_string();
    let rows = data
        .iter()
        .map(|sp| {
            format!(
                "{},{},{}",
                fmt_ivec(&sp.x),
                forms::norm_sq(&sp.x),
                fmt_rat(&sp.last_minima_sq)
            )
        })
        .collect();
    let aggregates = json!({
        "r": r,
        "epsilon": fmt_rat(&eps),
        "shell_points": data.len(),
        "count_e_star": count,
        "majorant": majorant,
        "dominated": (count as f64) <= majorant,
    });
    Ok((Some((header, rows)), aggregates))
}

fn cmd_tangent_count(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let b = p.f64("B")?;
    let y = p.f64("Y")?;
    let primitive = p.bool_or("primitive", false)?;
    let count = enumerate::count_tangent_pairs(f, b, y, primitive, cap)?;
    Ok((
        None,
        json!({
            "b": b,
            "y_bound": y,
            "primitive_only": primitive,
            "count": count,
        }),
    ))
}

fn point_lattice_checked(f: &Form, p: &Params) -> Result<(Vec<i128>, Lattice)> {
    let x = p.point("x")?;
    let lat = freeness::point_lattice(f, &x)?;
    Ok((x, lat))
}

fn cmd_theta(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let (x, lat) = point_lattice_checked(f, p)?;
    let r = p.f64("R")?;
    let tol = p.f64_or("tol", 1e-10)?;
    let budget = Budget::new(cap);
    let tv = theta::theta_sum(&lat, r, tol, &budget)?;
    let residual = theta::poisson_residual(&lat, r, tol, &budget)?;
    Ok((
        None,
        json!({
            "x": fmt_ivec(&x),
            "lattice_rank": lat.rank(),
            "r": r,
            "tol": tol,
            "theta": tv.value,
            "truncation_radius": tv.truncation_radius,
            "tail_bound": tv.tail_bound,
            "poisson_residual": residual,
            "residual_within_budget": residual <= 4.0 * tol,
        }),
    ))
}

fn cmd_majorant(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let (x, lat) = point_lattice_checked(f, p)?;
    let r = p.f64("R")?;
    let tol = p.f64_or("tol", 1e-10)?;
    let budget = Budget::new(cap);
    let majorant = theta::skew_majorant(&lat, r, &budget)?;
    let bracket = theta::majorant_bracket(&lat, r, tol, &budget)?;
    let prof = successive_minima(&lat, &budget)?;
    let rsq = BigRational::from_float(r * r).ok_or(Error::Overflow)?;
    let indicator = if prof.minima_sq.last().unwrap() <= &rsq {
        1u8
    } else {
        0
    };
    Ok((
        None,
        json!({
            "x": fmt_ivec(&x),
            "r": r,
            "majorant": majorant,
            "bracket": bracket,
            "indicator": indicator,
            "dominates": majorant >= indicator as f64,
        }),
    ))
}

fn arc_config(d: u32, p: &Params) -> Result<ArcConfig> {
    let r = p.f64("R")?;
    let k = p.u64_or("k", 1)?;
    let epsilon = p.f64_or("epsilon", 0.0)?;
    let eta = p.f64("eta")?;
    let c_f = p.f64("C_f")?;
    ArcConfig::new(d, r, k, epsilon, eta, c_f)
}

fn cmd_arcs(form: Option<&Form>, p: &Params) -> Result<(Option<Csv>, Value)> {
    let d = match form {
        Some(f) => f.degree(),
        None => p.u32("d")?,
    };
    let cfg = arc_config(d, p)?;
    let beta = p.f64("beta")?;
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Config("beta must lie in [0, 1)".into()));
    }
    let membership = circle::is_major_arc(beta, &cfg);
    let approx = circle::dirichlet_approx(beta, cfg.q_bound().max(1.0))?;
    Ok((
        None,
        json!({
            "beta": beta,
            "d": d,
            "x_shell": cfg.x,
            "y_window": cfg.y,
            "q_bound": cfg.q_bound(),
            "major": membership.is_some(),
            "arc": membership.map(|(a, q)| json!({"a": a, "q": q})),
            "dirichlet": {
                "a": approx.a,
                "q": approx.q,
                "remainder": approx.remainder,
            },
        }),
    ))
}

fn cmd_s_beta(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let x = p.point("x")?;
    let beta = p.f64("beta")?;
    let r = p.f64("R")?;
    let epsilon = p.f64_or("epsilon", 0.0)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Config("epsilon must lie in [0, 1)".into()));
    }
    let y = r.powf(1.0 - epsilon);
    let tol = p.f64_or("tol", 1e-8)?;
    let budget = Budget::new(cap);
    let sb = circle::s_beta(f, &x, beta, y, tol, &budget)?;
    let gap = (sb.direct - sb.poisson_form).abs();
    Ok((
        None,
        json!({
            "x": fmt_ivec(&x),
            "beta": beta,
            "y": y,
            "tol": tol,
            "direct": sb.direct,
            "poisson_form": sb.poisson_form,
            "agreement_bound": sb.agreement_bound,
            "gap": gap,
            "certified": gap <= sb.agreement_bound,
        }),
    ))
}

fn cmd_major_integral(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let x = p.point("x")?;
    let r = p.f64("R")?;
    let k = p.u64_or("k", 1)?;
    let epsilon = p.f64_or("epsilon", 0.0)?;
    let eta = p.f64("eta")?;
    if !(0.0 < eta && eta < 1.0) || !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Config("need eta in (0,1) and epsilon in [0,1)".into()));
    }
    let x_shell = r / k as f64;
    let y = r.powf(1.0 - epsilon);
    let c_f = match p.raw("C_f") {
        Some(v) => parse_f64("C_f", &v)?,
        None => {
            let seed = p.u64_or("seed", 7)?;
            let cf = circle::calibrate_cf(f, x_shell, y, eta, 400, seed)?;
            p.record("C_f", fmt_f64(cf));
            cf
        }
    };
    let cfg = ArcConfig::new(f.degree(), r, k, epsilon, eta, c_f)?;
    let n = f.n_vars() as i32;
    let tol = p.f64_or("tol", 1e-3 * y.powi(n - 1))?;
    let budget = Budget::new(cap);
    let rep = circle::major_arc_integral(f, &x, &cfg, tol, &budget)?;
    Ok((
        None,
        json!({
            "x": fmt_ivec(&x),
            "r": r,
            "k": k,
            "y": y,
            "c_f": c_f,
            "tol": tol,
            "integral": rep.integral,
            "prediction": rep.prediction,
            "rel_error": (rep.integral - rep.prediction) / rep.prediction,
            "flagged": rep.flagged,
            "arc_count": rep.arc_count,
            "arc_measure": rep.arc_measure,
        }),
    ))
}

fn parse_norm(p: &Params) -> Result<NormKind> {
    match p
        .raw("norm")
        .unwrap_or_else(|| {
            p.record("norm", "euclid".to_string());
            "euclid".to_string()
        })
        .as_str()
    {
        "euclid" | "euclidean" => Ok(NormKind::Euclidean),
        "max" => Ok(NormKind::Max),
        other => Err(Error::Config(format!(
            "parameter --norm: expected euclid or max, got {other:?}"
        ))),
    }
}

fn cmd_count_m(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let tau = p.f64("tau")?;
    let pp = p.f64("P")?;
    let q = p.f64("Q")?;
    let norm = parse_norm(p)?;
    let budget = Budget::new(cap);
    let count = circle::count_m(tau, f, pp, q, norm, &budget)?;
    Ok((
        None,
        json!({
            "tau": tau,
            "p": pp,
            "q": q,
            "tuple_arity": f.degree() - 1,
            "count": count,
        }),
    ))
}

fn cmd_shrink(p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let pp = p.f64("P")?;
    let q = p.f64("Q")?;
    let theta_shrink = p.f64("theta")?;
    let norm = parse_norm(p)?;
    let gamma: Vec<Vec<f64>> = match p.raw("gamma") {
        Some(text) => {
            // rows separated by ';', entries by whitespace
            let rows: Vec<Vec<f64>> = text
                .split(';')
                .map(|row| {
                    row.split_whitespace()
                        .map(|t| parse_f64("gamma", t))
                        .collect()
                })
                .collect::<Result<_>>()?;
            rows
        }
        None => {
            let n = p.u64_or("n", 2)? as usize;
            let seed = p.u64_or("seed", 0)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut g = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(0.0..1.0);
                    g[i][j] = v;
                    g[j][i] = v;
                }
            }
            g
        }
    };
    let budget = Budget::new(cap);
    let rep = circle::shrink_ratio(&gamma, pp, q, theta_shrink, norm, &budget)?;
    Ok((
        None,
        json!({
            "n": gamma.len(),
            "p": pp,
            "q": q,
            "theta": theta_shrink,
            "numerator": rep.numerator,
            "denominator": rep.denominator,
            "ratio": rep.ratio,
            "envelope": rep.envelope,
            "constant": rep.ratio / rep.envelope,
        }),
    ))
}

fn cmd_lemma23(p: &Params) -> Result<(Option<Csv>, Value)> {
    let m = p.i64("m")?;
    let a = p.i64("a")?;
    let q = p.i64("q")?;
    let z = p.f64("z")?;
    let m_bound = p.i64("M")?;
    let r = p.f64("R")?;
    let chk = circle::lemma23_check(m, a, q, z, m_bound, r)?;
    Ok((
        None,
        json!({
            "m": m, "a": a, "q": q, "z": z, "m_bound": m_bound, "r": r,
            "m_bounded": chk.m_bounded,
            "approx_close": chk.approx_close,
            "z_small": chk.z_small,
            "q_small": chk.q_small,
            "q_large": chk.q_large,
            "holds": chk.all(),
        }),
    ))
}

fn cmd_c_dn(p: &Params) -> Result<(Option<Csv>, Value)> {
    let d = p.u32("d")?;
    let n = p.u64("n")?;
    let c = circle::c_dn(d, n)?;
    let big_d = circle::big_d(d, n)?;
    let big_e = circle::big_e(d, n)?;
    Ok((
        None,
        json!({
            "d": d,
            "n": n,
            "c_dn": fmt_rat(&c),
            "c_dn_float": rat::to_f64(&c),
            "big_d": fmt_rat(&big_d),
            "big_e": fmt_rat(&big_e),
            "positive": c.is_positive(),
        }),
    ))
}

fn cmd_densities(f: &Form, p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let p_max = p.u64("p_max")?;
    let tol = p.f64_or("tol", 0.05)?;
    let budget = Budget::new(cap);
    let est = densities::leading_constant(f, p_max, tol, &budget)?;
    let header = "p,level,sigma_p,sigma_p_float".to_string();
    let rows = est
        .sigma_p
        .iter()
        .map(|(prime, s)| {
            format!(
                "{},{},{},{}",
                prime,
                est.levels[prime],
                fmt_rat(s),
                fmt_f64(rat::to_f64(s))
            )
        })
        .collect();
    let sigma_p: BTreeMap<String, String> = est
        .sigma_p
        .iter()
        .map(|(prime, s)| (prime.to_string(), fmt_rat(s)))
        .collect();
    let levels: BTreeMap<String, u32> = est
        .levels
        .iter()
        .map(|(prime, k)| (prime.to_string(), *k))
        .collect();
    let aggregates = json!({
        "p_max": est.p_max,
        "seed": est.seed,
        "tol": tol,
        "sigma_inf": est.sigma_inf,
        "sigma_inf_std_err": est.sigma_inf_std_err,
        "product": est.product,
        "sigma_p": sigma_p,
        "levels": levels,
    });
    Ok((Some((header, rows)), aggregates))
}

fn cmd_verify(p: &Params, cap: u64) -> Result<(Option<Csv>, Value)> {
    let suite = p.req("suite")?;
    let results = verify_suite(&suite, cap)?;
    let failed = results.iter().filter(|r| !r.pass).count();
    let aggregates = json!({
        "suite": suite,
        "passed": results.len() - failed,
        "failed": failed,
        "results": results
            .iter()
            .map(|r| json!({"name": r.name, "pass": r.pass, "detail": r.detail}))
            .collect::<Vec<_>>(),
    });
    Ok((None, aggregates))
}

/// One verified property: a short stable name, the verdict, and a detail
/// line with the measured extremes.
#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn prop(name: &str, pass: bool, detail: String) -> PropertyResult {
    PropertyResult {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// Run a module's invariant corpus; `all` chains every suite in a fixed
/// order. Used by CI and by the `verify-lemmas` subcommand.
pub fn verify_suite(name: &str, budget_cap: u64) -> Result<Vec<PropertyResult>> {
    match name {
        "lattices" => Ok(suite_lattices(budget_cap)),
        "theta" => Ok(suite_theta(budget_cap)),
        "freeness" => suite_freeness(budget_cap),
        "circle" => Ok(suite_circle(budget_cap)),
        "densities" => suite_densities(budget_cap),
        "all" => {
            let mut out = suite_lattices(budget_cap);
            out.extend(suite_theta(budget_cap));
            out.extend(suite_freeness(budget_cap)?);
            out.extend(suite_circle(budget_cap));
            out.extend(suite_densities(budget_cap)?);
            Ok(out)
        }
        other => Err(Error::Config(format!(
            "unknown suite {other:?}: expected lattices, theta, freeness, circle, densities or all"
        ))),
    }
}

fn random_kernel_lattice(rng: &mut rand_chacha::ChaCha8Rng) -> Lattice {
    loop {
        let n = rng.gen_range(2..=4usize);
        let c: Vec<i128> = (0..n).map(|_| rng.gen_range(-9i128..=9)).collect();
        if c.iter().all(|&v| v == 0) {
            continue;
        }
        return Lattice::kernel_of_vector(&c).unwrap();
    }
}

fn unit_ball_volume(r: usize) -> f64 {
    let half = r as f64 / 2.0;
    let mut log_gamma = 0.0f64;
    if r % 2 == 0 {
        for k in 2..=(r / 2) {
            log_gamma += (k as f64).ln();
        }
    } else {
        log_gamma = 0.5 * std::f64::consts::PI.ln();
        let mut x = 0.5;
        while x < half + 0.6 {
            log_gamma += x.ln();
            x += 1.0;
        }
    }
    (half * std::f64::consts::PI.ln() - log_gamma).exp()
}

fn suite_lattices(budget_cap: u64) -> Vec<PropertyResult> {
    let budget = Budget::new(budget_cap);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x1a77);
    let mut transference_ok = true;
    let mut minkowski_ok = true;
    let mut kernel_det_ok = true;
    let mut worst_prod = 0.0f64;
    let mut worst_mink = 0.0f64;
    for _ in 0..60 {
        let lat = random_kernel_lattice(&mut rng);
        let r = lat.rank();
        let prof = successive_minima(&lat, &budget).unwrap().minima_sq;
        let dual = lat.dual().unwrap();
        let dual_prof = successive_minima(&dual, &budget).unwrap().minima_sq;
        for k in 0..r {
            let prod = &prof[k] * &dual_prof[r - 1 - k];
            worst_prod = worst_prod.max(rat::to_f64(&prod) / (r * r) as f64);
            if prod < rat::ratio(1, 1) || prod > rat::ratio((r * r) as i128, 1) {
                transference_ok = false;
            }
        }
        let det_sq = lat.determinant_sq();
        let prod: BigRational = prof.iter().product();
        let cons = (2f64.powi(r as i32) / unit_ball_volume(r)).powi(2);
        let ratio = rat::to_f64(&(&prod / &det_sq));
        worst_mink = worst_mink.max(ratio / cons);
        if det_sq > prod || ratio > cons * (1.0 + 1e-9) {
            minkowski_ok = false;
        }
    }
    for _ in 0..60 {
        let n = rng.gen_range(2..=5usize);
        let c: Vec<i128> = (0..n).map(|_| rng.gen_range(-20i128..=20)).collect();
        if c.iter().all(|&v| v == 0) || forms::content(&c) != 1 {
            continue;
        }
        let lat = Lattice::kernel_of_vector(&c).unwrap();
        if lat.determinant_sq() != rat::from_int(forms::norm_sq(&c)) {
            kernel_det_ok = false;
        }
    }
    vec![
        prop(
            "lattices/transference",
            transference_ok,
            format!("60 lattices, worst product at {worst_prod:.3} of the bound"),
        ),
        prop(
            "lattices/minkowski",
            minkowski_ok,
            format!("60 lattices, worst ratio at {worst_mink:.3} of the pinned constant"),
        ),
        prop(
            "lattices/kernel-determinant",
            kernel_det_ok,
            "det^2 of the kernel lattice equals |c|^2 on primitive c".to_string(),
        ),
    ]
}

fn suite_theta(budget_cap: u64) -> Vec<PropertyResult> {
    let budget = Budget::new(budget_cap);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7e7a);
    let tol = 1e-10;
    let mut residual_ok = true;
    let mut domination_ok = true;
    let mut worst_residual = 0.0f64;
    for _ in 0..40 {
        let lat = random_kernel_lattice(&mut rng);
        let radius = [0.8, 1.5, 3.0][rng.gen_range(0..3)];
        let residual = theta::poisson_residual(&lat, radius, tol, &budget).unwrap();
        worst_residual = worst_residual.max(residual / (4.0 * tol));
        if residual > 4.0 * tol {
            residual_ok = false;
        }
        let prof = successive_minima(&lat, &budget).unwrap().minima_sq;
        let rsq = BigRational::from_float(radius * radius).unwrap();
        let indicator = if prof.last().unwrap() <= &rsq { 1.0 } else { 0.0 };
        let majorant = theta::skew_majorant(&lat, radius, &budget).unwrap();
        if majorant < indicator {
            domination_ok = false;
        }
    }
    vec![
        prop(
            "theta/poisson-residual",
            residual_ok,
            format!("40 pairs, worst residual at {worst_residual:.3} of 4 tol"),
        ),
        prop(
            "theta/majorant-domination",
            domination_ok,
            "skew majorant covers the exact covering indicator".to_string(),
        ),
    ]
}

fn suite_freeness(budget_cap: u64) -> Result<Vec<PropertyResult>> {
    let budget = Budget::new(budget_cap);
    let f = Form::diagonal(3, &[1, 1, 1, 1])?;
    let mut line_ok = true;
    let mut bound_ok = true;
    let mut checked = 0u32;
    for q in 1..=9i128 {
        for p in 1..q {
            if num_integer::gcd(p, q) != 1 || 2 * (p * p + q * q) <= 100 {
                continue;
            }
            let x = vec![p, -p, q, -q];
            let lt = freeness::freeness_tilde(&f, &x, &budget)?;
            checked += 1;
            if lt >= 0.0 {
                line_ok = false;
            }
            if lt > 1.0 {
                bound_ok = false;
            }
        }
    }
    Ok(vec![
        prop(
            "freeness/line-points-negative",
            line_ok && checked >= 10,
            format!("{checked} Fermat line points above height 10, all ltilde < 0"),
        ),
        prop(
            "freeness/upper-bound",
            bound_ok,
            "ltilde never exceeds 1 on integer lattices".to_string(),
        ),
    ])
}

fn suite_circle(budget_cap: u64) -> Vec<PropertyResult> {
    let _ = budget_cap;
    // small lemma23 grid: every all-true row must have m = 0
    let (m_bound, r) = (3i64, 8.0f64);
    let mut grid_ok = true;
    let mut rows = 0u64;
    for q in 1..=4i64 {
        for a in 0..q {
            if num_integer::gcd(a, q) != 1 && q > 1 {
                continue;
            }
            for m in -5..=5i64 {
                for t in -12..=12i64 {
                    let z = t as f64 / 24.0;
                    let chk = circle::lemma23_check(m, a, q, z, m_bound, r).unwrap();
                    if chk.all() {
                        rows += 1;
                        if m != 0 {
                            grid_ok = false;
                        }
                    }
                }
            }
        }
    }
    // arc membership against a brute scan over all a/q
    let cfg = ArcConfig::new(3, 16.0, 2, 0.25, 0.1, 2.0).unwrap();
    let mut member_ok = true;
    for i in 0..2000 {
        let beta = i as f64 / 2000.0;
        let got = circle::is_major_arc(beta, &cfg).is_some();
        let qmax = cfg.q_bound().floor() as i64;
        let thr = 1.0 / (cfg.c_f * cfg.x.powi(cfg.d as i32 - 1));
        let mut brute = false;
        for q in 1..=qmax {
            for a in 0..=q {
                if (beta - a as f64 / q as f64).abs() <= thr / q as f64 {
                    brute = true;
                }
            }
        }
        if got != brute {
            member_ok = false;
        }
    }
    // dirichlet contract on seeded uniforms
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xd111);
    let mut dirichlet_ok = true;
    for _ in 0..500 {
        let alpha: f64 = rng.gen_range(0.0..1.0);
        let qb = [10.0, 100.0, 1000.0][rng.gen_range(0..3)];
        let ap = circle::dirichlet_approx(alpha, qb).unwrap();
        let in_range = ap.q >= 1 && ap.q as f64 <= qb && num_integer::gcd(ap.a, ap.q) == 1;
        let tight = ap.remainder.abs() <= 1.0 / (ap.q as f64 * qb) + 1e-15;
        let frac = alpha - ap.a as f64 / ap.q as f64 - ap.remainder;
        let circle_dist = (frac - frac.round()).abs();
        if !in_range || !tight || circle_dist > 1e-9 {
            dirichlet_ok = false;
        }
    }
    vec![
        prop(
            "circle/lemma23-grid",
            grid_ok && rows > 0,
            format!("{rows} hypothesis-satisfying rows, every one at m = 0"),
        ),
        prop(
            "circle/arc-membership",
            member_ok,
            "is_major_arc matches the brute scan on 2000 grid points".to_string(),
        ),
        prop(
            "circle/dirichlet-contract",
            dirichlet_ok,
            "gcd, range, tightness and reconstruction on 500 samples".to_string(),
        ),
    ]
}

fn suite_densities(budget_cap: u64) -> Result<Vec<PropertyResult>> {
    let budget = Budget::new(budget_cap);
    let f4 = Form::diagonal(3, &[1, 1, 1, 1])?;
    let mut bijective_ok = true;
    for p in [2u64, 3] {
        if densities::sigma_p(&f4, p, 1, &budget)? != rat::from_int(1) {
            bijective_ok = false;
        }
    }
    let mut floor_ok = true;
    for p in [2u64, 3, 5] {
        let s = densities::sigma_p(&f4, p, 1, &budget)?;
        if s < BigRational::new(1.into(), BigInt::from(p).pow(3)) {
            floor_ok = false;
        }
    }
    let c6 = Form::diagonal(3, &[1, 1, 1, 1, 1, 1])?.with_discriminant(BigInt::from(3))?;
    // levels 1 and 2 at a good prime differ exactly by the zero branch,
    // (p-1)/p^(n-1): every nonzero solution is smooth and lifts cleanly
    let drift = densities::sigma_p(&c6, 7, 2, &budget)? - densities::sigma_p(&c6, 7, 1, &budget)?;
    let hensel_ok = drift == BigRational::new(6.into(), BigInt::from(7).pow(5));
    Ok(vec![
        prop(
            "densities/cube-bijection",
            bijective_ok,
            "sigma_p = 1 at p = 2, 3 for the Fermat cubic".to_string(),
        ),
        prop(
            "densities/zero-floor",
            floor_ok,
            "sigma_p >= p^{-k(n-1)}".to_string(),
        ),
        prop(
            "densities/hensel-good-prime",
            hensel_ok,
            "level drift at the good prime 7 is exactly the zero branch".to_string(),
        ),
    ])
}
