//! Circle-method machinery around a fixed point of the hypersurface:
//! Dirichlet approximation, major-arc membership, the Gaussian-windowed
//! exponential sum S(beta) evaluated two ways, the integral of S over the
//! modified major arcs against its closed-form prediction, exhaustive
//! multilinear and shrinking counts, and the exponent constants D, E, c_{d,n}.

use crate::forms::{self, Form};
use crate::{Budget, Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::f64::consts::PI;

/// Arc-geometry parameters. X = R/k is the shell height, Y = R^{1-epsilon}
/// the Gaussian window; both are derived in the constructor and never set
/// directly. `c_f` is the form-dependent arc-width constant, `eta` the
/// denominator-exponent safety margin.
#[derive(Debug, Clone, Copy)]
pub struct ArcConfig {
    pub d: u32,
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub k: u64,
    pub epsilon: f64,
    pub eta: f64,
    pub c_f: f64,
}

impl ArcConfig {
    pub fn new(d: u32, r: f64, k: u64, epsilon: f64, eta: f64, c_f: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Config("degree must be at least 2".into()));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::Config("R must be a finite real >= 1".into()));
        }
        if k == 0 {
            return Err(Error::Config("k must be a positive integer".into()));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Config("epsilon must lie in [0, 1)".into()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Config("eta must lie in (0, 1)".into()));
        }
        if !(c_f > 0.0) || !c_f.is_finite() {
            return Err(Error::Config("C_f must be a positive real".into()));
        }
        Ok(ArcConfig {
            d,
            x: r / k as f64,
            y: r.powf(1.0 - epsilon),
            r,
            k,
            epsilon,
            eta,
            c_f,
        })
    }

    /// Largest admissible arc denominator, Y^{1-eta}.
    pub fn q_bound(&self) -> f64 {
        self.y.powf(1.0 - self.eta)
    }

    /// Half-width cap 1/(q C_f X^{d-1}) of the arc at denominator q.
    pub fn width_cap(&self, q: u64) -> f64 {
        1.0 / (q as f64 * self.c_f * self.x.powi(self.d as i32 - 1))
    }

    /// Whether the window is narrow enough for the pointwise route
    /// (Y <= X^{d-1}).
    pub fn window_within_shell(&self) -> bool {
        self.y <= self.x.powi(self.d as i32 - 1)
    }
}

/// Rational approximation a/q to a real number, plus the leftover.
/// `remainder` is the signed distance to the underlying convergent p/q;
/// `a` is p reduced mod q, so a/q + remainder recovers the input only up
/// to an integer (relevant solely for inputs within 1/(qQ) of 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalApprox {
    pub a: i64,
    pub q: i64,
    pub remainder: f64,
}

/// Best rational approximation with denominator at most `q_bound`, by
/// continued fractions. The output satisfies gcd(a,q) = 1, q <= q_bound
/// and |remainder| <= 1/(q * q_bound).
pub fn dirichlet_approx(alpha: f64, q_bound: f64) -> Result<RationalApprox> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config("alpha must lie in [0, 1)".into()));
    }
    if !(q_bound >= 1.0) || !q_bound.is_finite() {
        return Err(Error::Config("denominator bound must be >= 1".into()));
    }
    let qmax = q_bound.floor().min(1e15) as i128;
    // convergents p/q of alpha; stop before the denominator passes qmax
    let (mut p_prev, mut q_prev) = (1i128, 0i128);
    let (mut p_cur, mut q_cur) = (0i128, 1i128);
    let mut frac = alpha;
    while frac > 1e-15 {
        let inv = 1.0 / frac;
        let a = inv.floor();
        if a > 1e15 {
            break;
        }
        let ai = a as i128;
        let p_next = ai * p_cur + p_prev;
        let q_next = ai * q_cur + q_prev;
        if q_next > qmax {
            break;
        }
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
        frac = inv - a;
    }
    let q = q_cur as i64;
    let p = p_cur as i64;
    debug_assert_eq!(p.gcd(&q), 1);
    Ok(RationalApprox {
        a: p.rem_euclid(q),
        q,
        remainder: alpha - p as f64 / q as f64,
    })
}

/// Major-arc membership: a witness (a, q) with gcd(a,q) = 1, q <= Y^{1-eta}
/// and |q beta - a| <= 1/(C_f X^{d-1}), or None on the minor arcs. For beta
/// near 1 the witness can be (1, 1).
pub fn is_major_arc(beta: f64, cfg: &ArcConfig) -> Option<(i64, i64)> {
    let qmax = cfg.q_bound().floor().max(1.0) as i64;
    let thr = 1.0 / (cfg.c_f * cfg.x.powi(cfg.d as i32 - 1));
    for q in 1..=qmax {
        let a = (q as f64 * beta).round() as i64;
        if (q as f64 * beta - a as f64).abs() <= thr {
            // the first denominator that qualifies is automatically reduced:
            // a common factor g would make q/g qualify earlier
            let g = a.gcd(&q);
            return Some((a / g, q / g));
        }
    }
    None
}

/// The windowed exponential sum at a point, both routes.
#[derive(Debug, Clone, Copy)]
pub struct SBeta {
    /// truncated lattice sum sum_y exp(-pi|y|^2/Y^2) e(beta y.grad f(x));
    /// exactly real since the Gaussian window pairs y with -y
    pub direct: f64,
    /// the Poisson main term Y^n prod_i exp(-pi (Y <beta d_i f(x)>)^2)
    pub poisson_form: f64,
    /// certified bound on |direct - poisson_form| (one-dimensional Poisson
    /// summation per factor, plus the truncation tolerance)
    pub agreement_bound: f64,
}

/// Evaluate S(beta) at x with window Y. The sum factors over coordinates,
/// so each one-dimensional factor is truncated with certified Gaussian
/// tail at most tol / (2 n (1+Y)^{n-1}), keeping the product within tol.
pub fn s_beta(
    f: &Form,
    x: &[i128],
    beta: f64,
    y: f64,
    tol: f64,
    budget: &Budget,
) -> Result<SBeta> {
    let n = f.n_vars();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if !(1.0..=1e3).contains(&y) {
        return Err(Error::Config("window Y must lie in [1, 1e3]".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let grad = f.gradient(x)?;
    let factor_cap = (1.0 + y).powi(n as i32 - 1);
    let tol_f = tol / (2.0 * n as f64 * factor_cap);
    // truncation point: tail of one factor bounded by a geometric series
    let mut t_lim = (y * ((2.0 / tol_f).ln().max(1.0) / PI).sqrt()).ceil();
    loop {
        let decay = (-PI * (2.0 * t_lim + 1.0) / (y * y)).exp();
        let tail = 2.0 * (-PI * (t_lim + 1.0).powi(2) / (y * y)).exp() / (1.0 - decay);
        if tail <= tol_f {
            break;
        }
        t_lim += (y / 8.0).ceil().max(1.0);
        if t_lim > 5e7 {
            return Err(Error::Config(
                "window tolerance unreachable at this Y".into(),
            ));
        }
    }
    let t_lim = t_lim as i64;
    budget.charge(n as u64 * t_lim as u64)?;
    let mut direct = 1.0f64;
    let mut poisson = y.powi(n as i32);
    for &g in &grad {
        let c = (beta * g as f64).fract();
        let mut s = 0.0;
        // ascending magnitude: the Gaussian weight grows as t decreases
        for t in (1..=t_lim).rev() {
            let tf = t as f64;
            s += 2.0 * (-PI * tf * tf / (y * y)).exp() * (2.0 * PI * c * tf).cos();
        }
        direct *= 1.0 + s;
        let dist = dist_to_int(beta * g as f64);
        poisson *= (-PI * (y * dist).powi(2)).exp();
    }
    // per factor: |S_i - Y exp(-pi (Y<c>)^2)| <= 2.1 Y exp(-pi Y^2/4) for
    // Y >= 1 (non-nearest images of the dual Gaussian), plus truncation
    let per_factor = 2.1 * y * (-PI * y * y / 4.0).exp() + tol_f;
    Ok(SBeta {
        direct,
        poisson_form: poisson,
        agreement_bound: n as f64 * per_factor * factor_cap,
    })
}

/// Outcome of integrating S over the modified major arcs of one point.
#[derive(Debug, Clone, Copy)]
pub struct MajorArcReport {
    pub integral: f64,
    /// the closed-form target Y^{n-1} gcd(grad f(x)) / |grad f(x)|
    pub prediction: f64,
    /// true when gcd(grad f(x)) C_f^2 > Y^{1-eta}: the error term of the
    /// prediction is then of main-term size and no tight agreement is owed
    pub flagged: bool,
    pub arc_count: usize,
    /// total length of the arcs integrated over
    pub arc_measure: f64,
}

/// Integrate S(beta) over the arcs a/q + theta with q | gcd(grad f(x)),
/// q <= Y^{1-eta}, gcd(a,q) = 1 and |theta| <= min(Y^{eta-1}/|grad f(x)|,
/// 1/(q C_f X^{d-1})), by adaptive quadrature, and compare with the
/// prediction. Errors with ArcOverlap if the arcs are not pairwise
/// disjoint on the circle, which signals that C_f is too small.
pub fn major_arc_integral(
    f: &Form,
    x: &[i128],
    cfg: &ArcConfig,
    tol: f64,
    budget: &Budget,
) -> Result<MajorArcReport> {
    let n = f.n_vars();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if n > 6 {
        return Err(Error::Config(
            "arc quadrature is limited to at most 6 variables".into(),
        ));
    }
    if cfg.d != f.degree() {
        return Err(Error::Config(
            "arc configuration degree differs from the form degree".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let norm_sq = forms::norm_sq(x) as f64;
    if !(norm_sq > cfg.x * cfg.x / 4.0 && norm_sq <= cfg.x * cfg.x * (1.0 + 1e-9)) {
        return Err(Error::Config(
            "point is not in the dyadic shell at height X".into(),
        ));
    }
    let h = f.gcd_gradient(x)?.unsigned_abs();
    let h: u64 = h.try_into().map_err(|_| Error::Overflow)?;
    let grad = f.gradient(x)?;
    let gnorm = grad
        .iter()
        .map(|&g| (g as f64) * (g as f64))
        .sum::<f64>()
        .sqrt();
    let q_bound = cfg.q_bound();
    let support = cfg.y.powf(cfg.eta - 1.0) / gnorm;
    let mut arcs: Vec<(f64, f64)> = Vec::new();
    for q in divisors(h) {
        if q as f64 > q_bound * (1.0 + 1e-12) {
            continue;
        }
        let w = support.min(cfg.width_cap(q));
        for a in 0..q {
            if a.gcd(&q) == 1 {
                arcs.push((a as f64 / q as f64, w));
            }
        }
    }
    arcs.sort_by(|p, r| p.0.total_cmp(&r.0));
    // pairwise disjointness on the circle, including the wrap-around pair
    for i in 0..arcs.len() {
        let (c1, w1) = arcs[i];
        let (c2, w2) = if i + 1 < arcs.len() {
            arcs[i + 1]
        } else {
            (arcs[0].0 + 1.0, arcs[0].1)
        };
        if c2 - w2 < c1 + w1 {
            return Err(Error::ArcOverlap);
        }
    }
    let tol_arc = tol / arcs.len() as f64;
    let mut integral = 0.0;
    let mut measure = 0.0;
    for &(c, w) in &arcs {
        measure += 2.0 * w;
        // integrand bias over the arc stays below tol_arc/2
        let tol_inner = (tol_arc / (4.0 * w)).min(0.01 * cfg.y.powi(n as i32));
        integral += adaptive_simpson(
            &mut |th| Ok(s_beta(f, x, c + th, cfg.y, tol_inner, budget)?.direct),
            -w,
            w,
            tol_arc * 0.5,
            budget,
        )?;
    }
    Ok(MajorArcReport {
        integral,
        prediction: cfg.y.powi(n as i32 - 1) * h as f64 / gnorm,
        flagged: h as f64 * cfg.c_f * cfg.c_f > q_bound,
        arc_count: arcs.len(),
        arc_measure: measure,
    })
}

/// Smallest safe arc constant for a form, times two: covers both the
/// disjointness requirement 2 Y^{1-eta} / X^{d-1} and the measured lower
/// gradient-growth constant on the shell (|x| > X/2 costs a factor
/// 2^{d-1}).
pub fn calibrate_cf(
    f: &Form,
    x_shell: f64,
    y: f64,
    eta: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(x_shell >= 1.0 && y >= 1.0) {
        return Err(Error::Config("shell height and window must be >= 1".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Config("eta must lie in (0, 1)".into()));
    }
    let (c1, _) = f.gradient_growth_bounds(samples.max(16), seed)?;
    if !(c1 > 0.0) {
        return Err(Error::Config(
            "measured gradient lower constant is zero".into(),
        ));
    }
    let dm1 = f.degree() as i32 - 1;
    let disjoint_floor = 2.0 * y.powf(1.0 - eta) / x_shell.powi(dm1);
    let growth_floor = 2f64.powi(dm1) / c1;
    Ok(2.0 * disjoint_floor.max(growth_floor).max(1.0))
}

/// Which norm bounds the brute-force boxes of the counting probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Euclidean,
    Max,
}

/// Exact count of (d-1)-tuples (u_1, .., u_{d-1}) of integer vectors with
/// every |u_i| < p and <tau m_j(u_1,..,u_{d-1})> < 1/q for every j, by
/// exhaustive search.
pub fn count_m(
    tau: f64,
    f: &Form,
    p: f64,
    q: f64,
    norm: NormKind,
    budget: &Budget,
) -> Result<u64> {
    if !(q > 0.0) {
        return Err(Error::Config("fractional-part bound must be positive".into()));
    }
    let n = f.n_vars();
    let arity = f.degree() as usize - 1;
    let us = ball_points(n, p, norm, budget)?;
    let qinv = 1.0 / q;
    let mut idx = vec![0usize; arity];
    let mut count = 0u64;
    if us.is_empty() {
        return Ok(0);
    }
    loop {
        budget.charge(1)?;
        let tuple: Vec<&[i128]> = idx.iter().map(|&i| us[i].as_slice()).collect();
        let mut ok = true;
        for j in 0..n {
            let m = f.multilinear(j, &tuple)?;
            if dist_to_int(tau * m as f64) >= qinv {
                ok = false;
                break;
            }
        }
        if ok {
            count += 1;
        }
        let mut k = 0;
        loop {
            if k == arity {
                return Ok(count);
            }
            idx[k] += 1;
            if idx[k] < us.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Numerator, denominator and ratio of the shrinking comparison.
#[derive(Debug, Clone, Copy)]
pub struct ShrinkReport {
    pub numerator: u64,
    pub denominator: u64,
    pub ratio: f64,
    /// the reference envelope theta^{-n} max(sqrt(p/q), 1)^n; the measured
    /// constant of an experiment is ratio / envelope
    pub envelope: f64,
}

/// N_{gamma,P,Q} / N_{gamma,theta P, Q/theta} where N counts integer x
/// with |x| < P and every coordinate of gamma x within 1/Q of an integer.
/// Both counts are exhaustive and exact; the denominator always counts
/// x = 0.
pub fn shrink_ratio(
    gamma: &[Vec<f64>],
    p: f64,
    q: f64,
    theta: f64,
    norm: NormKind,
    budget: &Budget,
) -> Result<ShrinkReport> {
    let n = gamma.len();
    if n == 0 || gamma.iter().any(|row| row.len() != n) {
        return Err(Error::Config("gamma must be a square matrix".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if gamma[i][j] != gamma[j][i] {
                return Err(Error::Config("gamma must be symmetric".into()));
            }
        }
    }
    if !(q > 2.0) {
        return Err(Error::Config("Q must exceed 2".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Config("theta must lie in (0, 1]".into()));
    }
    let count = |pp: f64, qq: f64| -> Result<u64> {
        let pts = ball_points(n, pp, norm, budget)?;
        let qinv = 1.0 / qq;
        let mut c = 0u64;
        for x in &pts {
            let ok = (0..n).all(|i| {
                let dot: f64 = (0..n).map(|j| gamma[i][j] * x[j] as f64).sum();
                dist_to_int(dot) < qinv
            });
            if ok {
                c += 1;
            }
        }
        Ok(c)
    };
    let numerator = count(p, q)?;
    let denominator = count(theta * p, q / theta)?;
    debug_assert!(denominator >= 1);
    Ok(ShrinkReport {
        numerator,
        denominator,
        ratio: numerator as f64 / denominator as f64,
        envelope: theta.powi(-(n as i32)) * (p / q).sqrt().max(1.0).powi(n as i32),
    })
}

/// The five hypotheses of the small-denominator approximation lemma,
/// individually, for alpha = a/q + z.
#[derive(Debug, Clone, Copy)]
pub struct Lemma23Check {
    /// |m| <= M
    pub m_bounded: bool,
    /// <alpha m> < 1/R
    pub approx_close: bool,
    /// |z| <= 1/(2qM)
    pub z_small: bool,
    /// q <= R/2
    pub q_small: bool,
    /// q > min(M, 1/(|z| R))
    pub q_large: bool,
}

impl Lemma23Check {
    pub fn all(&self) -> bool {
        self.m_bounded && self.approx_close && self.z_small && self.q_small && self.q_large
    }
}

pub fn lemma23_check(
    m: i64,
    a: i64,
    q: i64,
    z: f64,
    m_bound: i64,
    r: f64,
) -> Result<Lemma23Check> {
    if q < 1 {
        return Err(Error::Config("q must be a positive integer".into()));
    }
    if a.rem_euclid(q).gcd(&q) != 1 {
        return Err(Error::Config("a and q must be coprime".into()));
    }
    if m_bound < 1 || !(r > 0.0) {
        return Err(Error::Config("M and R must be positive".into()));
    }
    // the rational part of alpha*m is exact; only m*z rides on floats
    let frac = ((m as i128 * a as i128).rem_euclid(q as i128)) as f64 / q as f64;
    let dist = dist_to_int(frac + m as f64 * z);
    let q_f = q as f64;
    let z_cut = if z == 0.0 {
        m_bound as f64
    } else {
        (m_bound as f64).min(1.0 / (z.abs() * r))
    };
    Ok(Lemma23Check {
        m_bounded: m.abs() <= m_bound,
        approx_close: dist < 1.0 / r,
        z_small: z.abs() <= 1.0 / (2.0 * q_f * m_bound as f64),
        q_small: q_f <= r / 2.0,
        q_large: q_f > z_cut,
    })
}

/// True iff all five hypotheses hold; the lemma then concludes m = 0, so
/// a true verdict at m != 0 would be a counterexample.
pub fn lemma23_holds(m: i64, a: i64, q: i64, z: f64, m_bound: i64, r: f64) -> Result<bool> {
    Ok(lemma23_check(m, a, q, z, m_bound, r)?.all())
}

/// The exponent constant (2n - 3(d-1)2^d) / (n(d^2-2d+3) - 3(d-1)2^d),
/// exactly. Positive iff n > 3(d-1)2^{d-1} wherever the denominator is
/// positive; below the denominator's zero both signs flip and the formula
/// carries no meaning.
pub fn c_dn(d: u32, n: u64) -> Result<BigRational> {
    if d < 3 || n < 1 {
        return Err(Error::Config("need degree >= 3 and n >= 1".into()));
    }
    let corr = BigInt::from(3) * BigInt::from(d - 1) * (BigInt::one() << d as usize);
    let num = BigInt::from(2) * BigInt::from(n) - &corr;
    let den =
        BigInt::from(n) * (BigInt::from(d) * BigInt::from(d) - BigInt::from(2) * BigInt::from(d) + BigInt::from(3))
            - &corr;
    if den.is_zero() {
        return Err(Error::Config(
            "degenerate denominator: n(d^2-2d+3) = 3(d-1)2^d".into(),
        ));
    }
    Ok(BigRational::new(num, den))
}

/// D = n / (2^{d-1}(d-1)), exactly.
pub fn big_d(d: u32, n: u64) -> Result<BigRational> {
    if d < 3 || n < 1 {
        return Err(Error::Config("need degree >= 3 and n >= 1".into()));
    }
    let den = (BigInt::one() << (d as usize - 1)) * BigInt::from(d - 1);
    Ok(BigRational::new(BigInt::from(n), den))
}

/// E = n / (2^{d-2}(d-1)), exactly; E = 2D, and E - 6 > 0 is the same
/// threshold n > 3(d-1)2^{d-1} that governs the sign of c_{d,n}.
pub fn big_e(d: u32, n: u64) -> Result<BigRational> {
    if d < 3 || n < 1 {
        return Err(Error::Config("need degree >= 3 and n >= 1".into()));
    }
    let den = (BigInt::one() << (d as usize - 2)) * BigInt::from(d - 1);
    Ok(BigRational::new(BigInt::from(n), den))
}

fn dist_to_int(t: f64) -> f64 {
    (t - t.round()).abs()
}

fn divisors(h: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= h {
        if h % d == 0 {
            out.push(d);
            if d != h / d {
                out.push(h / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Largest integer strictly below v (for strict norm bounds on floats).
fn strict_below(v: f64) -> i128 {
    (v * (1.0 - 1e-12) - 1e-12).floor() as i128
}

/// All integer vectors with |x| < p in the chosen norm, in lexicographic
/// order.
fn ball_points(n: usize, p: f64, norm: NormKind, budget: &Budget) -> Result<Vec<Vec<i128>>> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Config("ball radius must be positive".into()));
    }
    let cmax = strict_below(p);
    if cmax < 0 {
        return Ok(Vec::new());
    }
    let nsq_lim = match norm {
        NormKind::Euclidean => strict_below(p * p),
        NormKind::Max => i128::MAX / 2,
    };
    fn descend(
        i: usize,
        cmax: i128,
        nsq_left: i128,
        cur: &mut Vec<i128>,
        out: &mut Vec<Vec<i128>>,
        budget: &Budget,
    ) -> Result<()> {
        if i == cur.len() {
            budget.charge(1)?;
            out.push(cur.clone());
            return Ok(());
        }
        for v in -cmax..=cmax {
            let vv = v * v;
            if vv > nsq_left {
                continue;
            }
            cur[i] = v;
            descend(i + 1, cmax, nsq_left - vv, cur, out, budget)?;
        }
        cur[i] = 0;
        Ok(())
    }
    let mut out = Vec::new();
    let mut cur = vec![0i128; n];
    descend(0, cmax, nsq_lim, &mut cur, &mut out, budget)?;
    Ok(out)
}

/// Adaptive Simpson quadrature with the classic Richardson acceptance
/// test; the tolerance is an absolute bound on the quadrature error.
fn adaptive_simpson<F: FnMut(f64) -> Result<f64>>(
    g: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    budget: &Budget,
) -> Result<f64> {
    struct Frame {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        s: f64,
        tol: f64,
        depth: u32,
    }
    let fa = g(a)?;
    let fb = g(b)?;
    let fm = g(0.5 * (a + b))?;
    let s = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut stack = vec![Frame {
        a,
        b,
        fa,
        fm,
        fb,
        s,
        tol,
        depth: 0,
    }];
    let mut total = 0.0;
    while let Some(fr) = stack.pop() {
        budget.charge(2)?;
        let m = 0.5 * (fr.a + fr.b);
        let flm = g(0.5 * (fr.a + m))?;
        let frm = g(0.5 * (m + fr.b))?;
        let sl = (m - fr.a) / 6.0 * (fr.fa + 4.0 * flm + fr.fm);
        let sr = (fr.b - m) / 6.0 * (fr.fm + 4.0 * frm + fr.fb);
        let err = sl + sr - fr.s;
        if err.abs() <= 15.0 * fr.tol || fr.depth >= 36 {
            total += sl + sr + err / 15.0;
        } else {
            stack.push(Frame {
                a: fr.a,
                b: m,
                fa: fr.fa,
                fm: flm,
                fb: fr.fm,
                s: sl,
                tol: 0.5 * fr.tol,
                depth: fr.depth + 1,
            });
            stack.push(Frame {
                a: m,
                b: fr.b,
                fa: fr.fm,
                fm: frm,
                fb: fr.fb,
                s: sr,
                tol: 0.5 * fr.tol,
                depth: fr.depth + 1,
            });
        }
    }
    Ok(total)
}
