//! Enumeration of rational points of bounded height on the hypersurface,
//! shell counts, the Moebius primitivity identity, and tangent-pair counts.
//!
//! Height convention: Euclidean norm throughout; a box bound B means
//! norm_sq <= floor(B^2), a shell at R means floor(R^2/4) < norm_sq <= floor(R^2).
//! Points are reported once per projective class: primitive, first nonzero
//! coordinate positive, sorted lexicographically.

use crate::forms::{self, Form};
use crate::lattice::Lattice;
use crate::minima::{norm_histogram, successive_minima};
use crate::theta::{skew_majorant, theta_sum};
use crate::{rat, Budget, Error, Result};
use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct EnumerationPlan {
    /// outer height bound B
    pub box_bound: f64,
    /// restrict to the dyadic shell (box_bound/2, box_bound]
    pub shell: bool,
    /// meet-in-the-middle variable split for diagonal forms
    pub split: Option<(Vec<usize>, Vec<usize>)>,
    /// node cap for the search
    pub budget_cap: u64,
}

impl EnumerationPlan {
    pub fn bounded(b: f64) -> Self {
        EnumerationPlan {
            box_bound: b,
            shell: false,
            split: None,
            budget_cap: crate::DEFAULT_BUDGET,
        }
    }

    pub fn shell_at(r: f64) -> Self {
        EnumerationPlan {
            shell: true,
            ..EnumerationPlan::bounded(r)
        }
    }

    pub fn with_split(mut self, left: Vec<usize>, right: Vec<usize>) -> Self {
        self.split = Some((left, right));
        self
    }

    pub fn with_budget(mut self, cap: u64) -> Self {
        self.budget_cap = cap;
        self
    }

    fn validate(&self, f: &Form) -> Result<()> {
        if !(self.box_bound >= 1.0) || !self.box_bound.is_finite() {
            return Err(Error::Config("height bound must be >= 1".into()));
        }
        if let Some((left, right)) = &self.split {
            let n = f.n_vars();
            let mut seen = vec![false; n];
            for &i in left.iter().chain(right) {
                if i >= n || seen[i] {
                    return Err(Error::Config(
                        "split must cover each variable exactly once".into(),
                    ));
                }
                seen[i] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Config(
                    "split must cover each variable exactly once".into(),
                ));
            }
            if f.diagonal_coeffs().is_none() {
                return Err(Error::Config(
                    "meet-in-the-middle split requires a diagonal form".into(),
                ));
            }
        }
        Ok(())
    }

    fn norm_sq_max(&self) -> i128 {
        (self.box_bound * self.box_bound * (1.0 + 1e-12)).floor() as i128
    }

    fn norm_sq_min_excl(&self) -> i128 {
        if self.shell {
            let half = self.box_bound / 2.0;
            (half * half * (1.0 + 1e-12)).floor() as i128
        } else {
            0
        }
    }
}

fn keep_point(x: &[i128], norm: i128, min_excl: i128) -> bool {
    if norm <= min_excl {
        return false;
    }
    match x.iter().find(|&&v| v != 0) {
        None => false,
        Some(&lead) if lead < 0 => false,
        _ => forms::content(x).is_one(),
    }
}

fn naive_search(f: &Form, plan: &EnumerationPlan, budget: &Budget) -> Result<Vec<Vec<i128>>> {
    let n = f.n_vars();
    let bsq = plan.norm_sq_max();
    let min_excl = plan.norm_sq_min_excl();
    let mut out = Vec::new();
    let mut x = vec![0i128; n];
    // depth-first over coordinates with partial-norm pruning; while every
    // prior coordinate is zero only nonnegative values are explored, which
    // realizes the leading-sign normalization for free
    fn descend(
        f: &Form,
        x: &mut Vec<i128>,
        depth: usize,
        partial_norm: i128,
        all_zero: bool,
        bsq: i128,
        min_excl: i128,
        budget: &Budget,
        out: &mut Vec<Vec<i128>>,
    ) -> Result<()> {
        if depth == f.n_vars() {
            if !all_zero
                && keep_point(x, partial_norm, min_excl)
                && f.eval(x)?.is_zero()
            {
                out.push(x.clone());
            }
            return Ok(());
        }
        let m = (bsq - partial_norm).sqrt();
        let lo = if all_zero { 0 } else { -m };
        for v in lo..=m {
            budget.charge(1)?;
            x[depth] = v;
            descend(
                f,
                x,
                depth + 1,
                partial_norm + v * v,
                all_zero && v == 0,
                bsq,
                min_excl,
                budget,
                out,
            )?;
        }
        x[depth] = 0;
        Ok(())
    }
    descend(f, &mut x, 0, 0, true, bsq, min_excl, budget, &mut out)?;
    out.sort();
    Ok(out)
}

fn half_tuples(
    coeffs: &[i128],
    degree: u32,
    indices: &[usize],
    bsq: i128,
    budget: &Budget,
) -> Result<Vec<(i128, i128, Vec<i128>)>> {
    // (form value, norm_sq, coordinate values) for every assignment of the
    // chosen variables inside the ball
    let mut out = Vec::new();
    let mut vals = vec![0i128; indices.len()];
    fn descend(
        coeffs: &[i128],
        degree: u32,
        indices: &[usize],
        pos: usize,
        vals: &mut Vec<i128>,
        value: i128,
        norm: i128,
        bsq: i128,
        budget: &Budget,
        out: &mut Vec<(i128, i128, Vec<i128>)>,
    ) -> Result<()> {
        if pos == indices.len() {
            out.push((value, norm, vals.clone()));
            return Ok(());
        }
        let m = (bsq - norm).sqrt();
        for v in -m..=m {
            budget.charge(1)?;
            vals[pos] = v;
            let mut pw = 1i128;
            for _ in 0..degree {
                pw = pw.checked_mul(v).ok_or(Error::Overflow)?;
            }
            let term = coeffs[indices[pos]]
                .checked_mul(pw)
                .ok_or(Error::Overflow)?;
            let nv = value.checked_add(term).ok_or(Error::Overflow)?;
            descend(
                coeffs, degree, indices, pos + 1, vals, nv,
                norm + v * v, bsq, budget, out,
            )?;
        }
        Ok(())
    }
    descend(
        coeffs, degree, indices, 0, &mut vals, 0, 0, bsq, budget, &mut out,
    )?;
    Ok(out)
}

fn mitm_search(f: &Form, plan: &EnumerationPlan, budget: &Budget) -> Result<Vec<Vec<i128>>> {
    let n = f.n_vars();
    let coeffs = f
        .diagonal_coeffs()
        .ok_or_else(|| Error::Config("meet-in-the-middle needs a diagonal form".into()))?;
    let (left, right) = match &plan.split {
        Some(pair) => pair.clone(),
        None => ((0..n / 2).collect(), (n / 2..n).collect()),
    };
    let bsq = plan.norm_sq_max();
    let min_excl = plan.norm_sq_min_excl();
    let lhs = half_tuples(&coeffs, f.degree(), &left, bsq, budget)?;
    let mut buckets: HashMap<i128, Vec<(i128, Vec<i128>)>> = HashMap::new();
    for (value, norm, vals) in lhs {
        buckets.entry(value).or_default().push((norm, vals));
    }
    for entries in buckets.values_mut() {
        entries.sort();
    }
    let rhs = half_tuples(&coeffs, f.degree(), &right, bsq, budget)?;
    let mut out = Vec::new();
    for (value, norm_r, vals_r) in rhs {
        let Some(entries) = buckets.get(&-value) else {
            continue;
        };
        // entries sorted by norm: take the admissible prefix
        let cut = entries.partition_point(|(norm_l, _)| norm_l + norm_r <= bsq);
        for (norm_l, vals_l) in &entries[..cut] {
            budget.charge(1)?;
            let mut x = vec![0i128; n];
            for (&i, &v) in left.iter().zip(vals_l) {
                x[i] = v;
            }
            for (&i, &v) in right.iter().zip(&vals_r) {
                x[i] = v;
            }
            let total = norm_l + norm_r;
            if keep_point(&x, total, min_excl) {
                debug_assert!(f.eval(&x).unwrap().is_zero());
                out.push(x);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Primitive points with f(x) = 0 in the plan's region, one normalized
/// representative per projective class, sorted. Diagonal forms go through
/// the meet-in-the-middle path, everything else through the naive search.
pub fn enumerate_points(f: &Form, plan: &EnumerationPlan) -> Result<Vec<Vec<i128>>> {
    plan.validate(f)?;
    let budget = Budget::new(plan.budget_cap);
    if f.diagonal_coeffs().is_some() && f.n_vars() >= 2 {
        mitm_search(f, plan, &budget)
    } else {
        naive_search(f, plan, &budget)
    }
}

/// Same region and filters as `enumerate_points`, forced through the naive
/// nested-loop path; the cross-validation twin of the bucketed search.
pub fn enumerate_points_naive(f: &Form, plan: &EnumerationPlan) -> Result<Vec<Vec<i128>>> {
    plan.validate(f)?;
    let budget = Budget::new(plan.budget_cap);
    naive_search(f, plan, &budget)
}

/// Number of projective rational points of height <= b.
pub fn count_nv(f: &Form, b: f64, budget_cap: u64) -> Result<u64> {
    let pts = enumerate_points(f, &EnumerationPlan::bounded(b).with_budget(budget_cap))?;
    Ok(pts.len() as u64)
}

/// One shell's worth of per-point lattice data, the shared input of the
/// shell statistics below.
pub struct ShellPoint {
    pub x: Vec<i128>,
    pub lattice: Lattice,
    pub last_minima_sq: BigRational,
}

pub fn shell_lattice_data(f: &Form, r: f64, budget_cap: u64) -> Result<Vec<ShellPoint>> {
    let pts = enumerate_points(f, &EnumerationPlan::shell_at(r).with_budget(budget_cap))?;
    pts.into_par_iter()
        .map(|x| {
            let grad = f.gradient(&x)?;
            let lattice = Lattice::kernel_of_vector(&grad)?;
            let budget = Budget::new(budget_cap);
            let prof = successive_minima(&lattice, &budget)?;
            Ok(ShellPoint {
                x,
                last_minima_sq: prof.minima_sq.last().unwrap().clone(),
                lattice,
            })
        })
        .collect()
}

/// #{x in the shell at r with s_{n-1}(Lambda_x) > r^(1-eps)}, decided on
/// exact squared quantities: with eps = p/q, (s^2)^q > (r^2)^(q-p), where
/// r^2 enters as the exact rational value of the given float.
pub fn count_e_star_from(data: &[ShellPoint], r: f64, eps: &BigRational) -> Result<u64> {
    if eps.is_negative() || eps > &BigRational::one() {
        return Err(Error::Config("eps must lie in [0, 1]".into()));
    }
    let qq = eps.denom().to_u32().ok_or(Error::Overflow)?;
    let pp = eps.numer().to_u32().ok_or(Error::Overflow)?;
    let rsq = BigRational::from_float(r * r).ok_or(Error::Overflow)?;
    let rhs = rat::powi(&rsq, qq - pp);
    let mut count = 0;
    for sp in data {
        if rat::powi(&sp.last_minima_sq, qq) > rhs {
            count += 1;
        }
    }
    Ok(count)
}

pub fn count_e_star(f: &Form, r: f64, eps: &BigRational, budget_cap: u64) -> Result<u64> {
    let data = shell_lattice_data(f, r, budget_cap)?;
    count_e_star_from(&data, r, eps)
}

/// The Gaussian-majorant upper bound for the shell statistic:
/// 1 + sum over shell points of the skewness majorant of Lambda_x at
/// radius r^(1-eps). The radius is nudged down by one part in 10^12 so the
/// float rounding of the exponent can only strengthen the bound.
pub fn e_star_majorant_from(data: &[ShellPoint], r: f64, eps: f64, budget_cap: u64) -> Result<f64> {
    let y = r.powf(1.0 - eps) * (1.0 - 1e-12);
    // collect in lattice order and sum sequentially: float addition order
    // must not depend on thread scheduling or reruns change their output
    let terms: Result<Vec<f64>> = data
        .par_iter()
        .map(|sp| skew_majorant(&sp.lattice, y, &Budget::new(budget_cap)))
        .collect();
    Ok(1.0 + terms?.iter().sum::<f64>())
}

/// mu(k) by trial division; k is tiny here.
fn moebius_mu(mut k: u64) -> i64 {
    let mut mu = 1i64;
    let mut p = 2u64;
    while p * p <= k {
        if k % p == 0 {
            k /= p;
            if k % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if k > 1 {
        mu = -mu;
    }
    mu
}

/// d(z) for z = k*x without forming z: the gradient scales by k^(d-1).
/// Needs the form's discriminant once k > 1. Returns (weight, gcd used).
fn dx_weight(f: &Form, x: &[i128], k: u64) -> Result<f64> {
    let grad = f.gradient(x)?;
    let kpow = BigInt::from(k).pow(f.degree() - 1);
    let mut g = BigInt::zero();
    let mut norm_sq = BigInt::zero();
    for &gi in &grad {
        let v = BigInt::from(gi) * &kpow;
        g = g.gcd(&v);
        norm_sq += &v * &v;
    }
    if g.is_zero() {
        return Err(Error::SingularPoint);
    }
    let g = match f.discriminant_abs() {
        Some(delta) => g.gcd(delta),
        None => {
            if k > 1 {
                return Err(Error::Config(
                    "imprimitive weights need the form's discriminant".into(),
                ));
            }
            g
        }
    };
    let num = rat::to_f64(&BigRational::from_integer(norm_sq)).sqrt();
    Ok(num / rat::to_f64(&BigRational::from_integer(g)))
}

#[derive(Debug, Clone)]
pub struct MoebiusReport {
    pub direct: f64,
    pub inverted: f64,
    pub residual: f64,
    pub tolerance_budget: f64,
    pub theta_terms: u64,
}

/// Checks the Moebius-inversion identity for the weighted shell sum
/// M(R) = sum over primitive x ~ R of d(x) theta_{Lambda_x}(R^(1-eps))
///       = sum_k mu(k) sum over all integer x ~ R/k of d(kx) theta(...).
/// Both sides are evaluated over normalized representatives (each side
/// halves exactly, preserving the identity). Every theta call is tightened
/// to tol / weight so each term contributes at most tol of error, keeping
/// the residual within terms * 4 * tol.
pub fn moebius_identity_check(
    f: &Form,
    r: f64,
    eps: f64,
    tol: f64,
    budget_cap: u64,
) -> Result<MoebiusReport> {
    if !(r >= 2.0) {
        return Err(Error::Config("moebius check needs r >= 2".into()));
    }
    let y = r.powf(1.0 - eps);
    let rsq = (r * r * (1.0 + 1e-12)).floor() as i128;
    // primitive generators once; multiples are reconstructed per shell
    let prims = enumerate_points(f, &EnumerationPlan::bounded(r).with_budget(budget_cap))?;
    // terms: (weight, generator index) per side
    let mut direct_terms: Vec<(f64, usize)> = Vec::new();
    let mut inverted_terms: Vec<(f64, usize)> = Vec::new();
    let shell_min = |bound_sq: i128| bound_sq / 4; // norm > bound/2, see below
    for (idx, x) in prims.iter().enumerate() {
        let norm = forms::norm_sq(x);
        if norm > shell_min(rsq) && norm <= rsq {
            direct_terms.push((dx_weight(f, x, 1)?, idx));
        }
    }
    let mut k = 1u64;
    while (k as f64) <= r {
        let mu = moebius_mu(k);
        if mu != 0 {
            // all integer x with norm ~ r/k are m * (primitive generator)
            let rk_sq = ((r / k as f64) * (r / k as f64) * (1.0 + 1e-12)).floor() as i128;
            for (idx, x) in prims.iter().enumerate() {
                let norm = forms::norm_sq(x);
                if norm > rk_sq {
                    continue;
                }
                let mut m = 1i128;
                while m * m * norm <= rk_sq {
                    if m * m * norm > shell_min(rk_sq) {
                        let mx: Vec<i128> = x.iter().map(|&v| v * m).collect();
                        let w = dx_weight(f, &mx, k)?;
                        inverted_terms.push((mu as f64 * w, idx));
                    }
                    m += 1;
                }
            }
        }
        k += 1;
    }
    // one theta value per generator, at the tightest tolerance any term needs
    let mut needed: HashMap<usize, f64> = HashMap::new();
    for (w, idx) in direct_terms.iter().chain(&inverted_terms) {
        let t = tol / w.abs().max(1.0);
        needed
            .entry(*idx)
            .and_modify(|cur| *cur = cur.min(t))
            .or_insert(t);
    }
    let theta_values: Result<HashMap<usize, f64>> = needed
        .par_iter()
        .map(|(&idx, &t)| {
            let grad = f.gradient(&prims[idx])?;
            let lat = Lattice::kernel_of_vector(&grad)?;
            let budget = Budget::new(budget_cap);
            Ok((idx, theta_sum(&lat, y, t, &budget)?.value))
        })
        .collect();
    let theta_values = theta_values?;
    let direct: f64 = direct_terms
        .iter()
        .map(|(w, idx)| w * theta_values[idx])
        .sum();
    let inverted: f64 = inverted_terms
        .iter()
        .map(|(w, idx)| w * theta_values[idx])
        .sum();
    let theta_terms = (direct_terms.len() + inverted_terms.len()) as u64;
    Ok(MoebiusReport {
        direct,
        inverted,
        residual: (direct - inverted).abs(),
        tolerance_budget: theta_terms as f64 * 4.0 * tol,
        theta_terms,
    })
}

/// Exact rational square of d(kx), for the scaling identity tests:
/// d(kx)^2 = k^(2d-2) |grad f(x)|^2 / gcd(grad f(kx), Delta)^2.
pub fn dx_weight_sq(f: &Form, x: &[i128], k: u64) -> Result<BigRational> {
    let grad = f.gradient(x)?;
    let kpow = BigInt::from(k).pow(f.degree() - 1);
    let mut g = BigInt::zero();
    let mut norm_sq = BigInt::zero();
    for &gi in &grad {
        let v = BigInt::from(gi) * &kpow;
        g = g.gcd(&v);
        norm_sq += &v * &v;
    }
    if g.is_zero() {
        return Err(Error::SingularPoint);
    }
    if let Some(delta) = f.discriminant_abs() {
        g = g.gcd(delta);
    } else if k > 1 {
        return Err(Error::Config(
            "imprimitive weights need the form's discriminant".into(),
        ));
    }
    Ok(BigRational::new(norm_sq, &g * &g))
}

/// #{(x, y): f(x) = 0, y . grad f(x) = 0, 0 < |x| <= b, |y| <= y_bound}.
/// x runs over all integer vectors (imprimitive included) unless
/// primitive_only; the zero x is excluded since its gradient vanishes.
pub fn count_tangent_pairs(
    f: &Form,
    b: f64,
    y_bound: f64,
    primitive_only: bool,
    budget_cap: u64,
) -> Result<u64> {
    let bsq = (b * b * (1.0 + 1e-12)).floor() as i128;
    let ysq = (y_bound * y_bound * (1.0 + 1e-12)).floor() as i128;
    if ysq < 0 || bsq < 1 {
        return Err(Error::Config("tangent pair bounds must be >= 1".into()));
    }
    let prims = enumerate_points(f, &EnumerationPlan::bounded(b).with_budget(budget_cap))?;
    let per_point: Result<Vec<u64>> = prims
        .par_iter()
        .map(|x| {
            let norm = forms::norm_sq(x);
            let grad = f.gradient(x)?;
            let lat = Lattice::kernel_of_vector(&grad)?;
            let budget = Budget::new(budget_cap);
            let hist = norm_histogram(&lat, &rat::ratio(ysq, 1), &budget)?;
            let y_count = 1 + 2 * hist.total_half_count();
            let k_max = if primitive_only {
                1
            } else {
                (bsq / norm).sqrt() as u64
            };
            // each class contributes both signs at every admissible multiple
            Ok(2 * k_max * y_count)
        })
        .collect();
    Ok(per_point?.iter().sum())
}

/// Shell counts for R = 2^0, ..., 2^j_max; their sum tiles the ball count
/// exactly since consecutive shells share the floor'd boundary.
pub fn dyadic_shell_counts(f: &Form, j_max: u32, budget_cap: u64) -> Result<Vec<u64>> {
    (0..=j_max)
        .map(|j| {
            let r = 2f64.powi(j as i32);
            let pts = enumerate_points(f, &EnumerationPlan::shell_at(r).with_budget(budget_cap))?;
            Ok(pts.len() as u64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Form;

    fn fermat4() -> Form {
        Form::diagonal(3, &[1, 1, 1, 1]).unwrap()
    }

    #[test]
    fn frozen_small_ball_counts() {
        let f = fermat4();
        for (b, want) in [(1.0, 0u64), (2.0, 9), (4.0, 21), (10.0, 165)] {
            assert_eq!(count_nv(&f, b, crate::DEFAULT_BUDGET).unwrap(), want, "B={b}");
        }
    }

    #[test]
    fn frozen_two_ball_point_set() {
        let f = fermat4();
        let got = enumerate_points(&f, &EnumerationPlan::bounded(2.0)).unwrap();
        let want: Vec<Vec<i128>> = vec![
            vec![0, 0, 1, -1],
            vec![0, 1, -1, 0],
            vec![0, 1, 0, -1],
            vec![1, -1, -1, 1],
            vec![1, -1, 0, 0],
            vec![1, -1, 1, -1],
            vec![1, 0, -1, 0],
            vec![1, 0, 0, -1],
            vec![1, 1, -1, -1],
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn ten_ball_contains_the_pythagorean_style_point() {
        let f = fermat4();
        let pts = enumerate_points(&f, &EnumerationPlan::bounded(10.0)).unwrap();
        assert!(pts.contains(&vec![3, 4, 5, -6]));
        // no duplicates
        let mut dedup = pts.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), pts.len());
    }

    #[test]
    fn both_backends_agree_on_diagonal_forms() {
        let f = fermat4();
        for b in [2.0, 4.0, 7.0] {
            let plan = EnumerationPlan::bounded(b);
            assert_eq!(
                enumerate_points(&f, &plan).unwrap(),
                enumerate_points_naive(&f, &plan).unwrap(),
                "B={b}"
            );
        }
        let g = Form::diagonal(3, &[1, 1, 1, 1, 1, 1]).unwrap();
        let plan = EnumerationPlan::bounded(4.0);
        assert_eq!(
            enumerate_points(&g, &plan).unwrap(),
            enumerate_points_naive(&g, &plan).unwrap()
        );
        // shell plans too
        let shell = EnumerationPlan::shell_at(4.0);
        assert_eq!(
            enumerate_points(&f, &shell).unwrap(),
            enumerate_points_naive(&f, &shell).unwrap()
        );
    }

    #[test]
    fn custom_split_matches_default() {
        let f = fermat4();
        let plan = EnumerationPlan::bounded(6.0).with_split(vec![0, 2], vec![1, 3]);
        let default = EnumerationPlan::bounded(6.0);
        assert_eq!(
            enumerate_points(&f, &plan).unwrap(),
            enumerate_points(&f, &default).unwrap()
        );
    }

    #[test]
    fn split_validation_rejects_bad_partitions() {
        let f = fermat4();
        let plan = EnumerationPlan::bounded(2.0).with_split(vec![0, 1], vec![1, 3]);
        assert!(matches!(
            enumerate_points(&f, &plan),
            Err(Error::Config(_))
        ));
        let plan = EnumerationPlan::bounded(2.0).with_split(vec![0], vec![1, 3]);
        assert!(matches!(
            enumerate_points(&f, &plan),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn monotone_counts_and_dyadic_tiling() {
        let f = fermat4();
        let mut prev = 0;
        for b in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let c = count_nv(&f, b, crate::DEFAULT_BUDGET).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        let shells = dyadic_shell_counts(&f, 4, crate::DEFAULT_BUDGET).unwrap();
        let total: u64 = shells.iter().sum();
        assert_eq!(total, count_nv(&f, 16.0, crate::DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn e_star_degenerate_threshold() {
        // eps = 1: condition degenerates to s_{n-1} > 1
        let f = fermat4();
        let data = shell_lattice_data(&f, 4.0, crate::DEFAULT_BUDGET).unwrap();
        let one = rat::ratio(1, 1);
        let count = count_e_star_from(&data, 4.0, &one).unwrap();
        let direct = data
            .iter()
            .filter(|sp| sp.last_minima_sq > rat::ratio(1, 1))
            .count() as u64;
        assert_eq!(count, direct);
    }

    #[test]
    fn e_star_majorant_dominates_small_grid() {
        let f = fermat4();
        for r in [4.0, 8.0] {
            let data = shell_lattice_data(&f, r, crate::DEFAULT_BUDGET).unwrap();
            for (num, den) in [(0i128, 1i128), (1, 10), (3, 10)] {
                let eps = rat::ratio(num, den);
                let count = count_e_star_from(&data, r, &eps).unwrap();
                let maj = e_star_majorant_from(
                    &data,
                    r,
                    num as f64 / den as f64,
                    crate::DEFAULT_BUDGET,
                )
                .unwrap();
                assert!(
                    maj >= count as f64,
                    "majorant {maj} < count {count} at r={r} eps={num}/{den}"
                );
            }
        }
    }

    #[test]
    fn moebius_identity_within_budget() {
        let f = fermat4().with_discriminant(3u32.into()).unwrap();
        for r in [2.0, 4.0] {
            let rep = moebius_identity_check(&f, r, 0.1, 1e-10, crate::DEFAULT_BUDGET).unwrap();
            assert!(
                rep.residual <= rep.tolerance_budget,
                "residual {} budget {} at r={r}",
                rep.residual,
                rep.tolerance_budget
            );
        }
    }

    #[test]
    fn dx_scaling_identity_for_small_k() {
        // d(kx)^2 * gcd(k^(d-1), D)^2 * gcd(grad f(x), D/gcd(k^(d-1),D))^2
        //   = k^(2d-2) |grad f(x)|^2
        let f = fermat4().with_discriminant(3u32.into()).unwrap();
        let delta = f.discriminant_abs().unwrap().clone();
        let pts = enumerate_points(&f, &EnumerationPlan::bounded(4.0)).unwrap();
        for x in &pts {
            let grad = f.gradient(x).unwrap();
            let gnorm: BigInt = grad.iter().map(|&g| BigInt::from(g) * g).sum();
            for k in 1..=6u64 {
                let kpow = BigInt::from(k).pow(f.degree() - 1);
                let gk = kpow.gcd(&delta);
                let tilde = &delta / &gk;
                let gx = grad
                    .iter()
                    .fold(BigInt::zero(), |acc, &g| acc.gcd(&BigInt::from(g)))
                    .gcd(&tilde);
                let scale = BigRational::from_integer(&gk * &gx);
                let lhs = dx_weight_sq(&f, x, k).unwrap() * &scale * &scale;
                let rhs = BigRational::from_integer(&kpow * &kpow * &gnorm);
                assert_eq!(lhs, rhs, "x={x:?} k={k}");
            }
        }
    }

    #[test]
    fn tangent_pairs_match_brute_force() {
        let f = fermat4();
        let got = count_tangent_pairs(&f, 4.0, 4.0, false, crate::DEFAULT_BUDGET).unwrap();
        // independent double loop over both boxes
        let mut brute = 0u64;
        let reach = 4i128;
        for a in -reach..=reach {
            for b in -reach..=reach {
                for c in -reach..=reach {
                    for d in -reach..=reach {
                        let x = [a, b, c, d];
                        let norm: i128 = x.iter().map(|v| v * v).sum();
                        if norm == 0 || norm > 16 {
                            continue;
                        }
                        if a * a * a + b * b * b + c * c * c + d * d * d != 0 {
                            continue;
                        }
                        let grad = [3 * a * a, 3 * b * b, 3 * c * c, 3 * d * d];
                        for ya in -reach..=reach {
                            for yb in -reach..=reach {
                                for yc in -reach..=reach {
                                    for yd in -reach..=reach {
                                        let ynorm = ya * ya + yb * yb + yc * yc + yd * yd;
                                        if ynorm > 16 {
                                            continue;
                                        }
                                        if ya * grad[0] + yb * grad[1] + yc * grad[2] + yd * grad[3]
                                            == 0
                                        {
                                            brute += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(got, brute);
        // flag variant only counts k = 1 multiples
        let prim_only = count_tangent_pairs(&f, 4.0, 4.0, true, crate::DEFAULT_BUDGET).unwrap();
        assert!(prim_only <= got);
        // nondecreasing in both bounds
        let wider = count_tangent_pairs(&f, 5.0, 4.0, false, crate::DEFAULT_BUDGET).unwrap();
        let taller = count_tangent_pairs(&f, 4.0, 5.0, false, crate::DEFAULT_BUDGET).unwrap();
        assert!(wider >= got && taller >= got);
    }

    #[test]
    fn budget_violations_surface() {
        let f = fermat4();
        let plan = EnumerationPlan::bounded(10.0).with_budget(50);
        assert!(matches!(
            enumerate_points(&f, &plan),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
