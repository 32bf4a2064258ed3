//! Truncated local densities: sigma_p as an exact count of solutions
//! modulo p^k, the real density sigma_inf by seeded quasi-Monte-Carlo,
//! and their assembled product over primes up to a bound.
//!
//! Normalizations are internal conventions (unit ball for the real
//! factor); downstream checks compare ratios and stability, never a
//! claimed exact constant.

use crate::forms::Form;
use crate::{Budget, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Everything the truncated-product experiment produced.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    /// prime -> exact local density at the level recorded in `levels`
    pub sigma_p: BTreeMap<u64, BigRational>,
    pub levels: BTreeMap<u64, u32>,
    pub sigma_inf: f64,
    pub sigma_inf_std_err: f64,
    /// sigma_inf times every sigma_p, primes ascending, real factor last
    pub product: f64,
    pub p_max: u64,
    pub seed: u64,
}

/// Exact local density p^{-k(n-1)} #{x in (Z/p^k)^n : f(x) = 0 mod p^k}.
/// Diagonal forms go through per-variable value histograms and circular
/// convolution; everything else is brute force over all p^{kn} residues.
pub fn sigma_p(f: &Form, p: u64, k: u32, budget: &Budget) -> Result<BigRational> {
    if !is_prime(p) {
        return Err(Error::Config(format!("{p} is not prime")));
    }
    if k == 0 {
        return Err(Error::Config("level k must be at least 1".into()));
    }
    let n = f.n_vars();
    let m = (p as u128)
        .checked_pow(k)
        .filter(|&m| m <= 1 << 24)
        .ok_or_else(|| Error::Config("modulus p^k too large".into()))? as u64;
    let count = match f.diagonal_coeffs() {
        Some(coeffs) => {
            budget.charge(n as u64 * m + n as u64 * m * m)?;
            count_diagonal(&coeffs, f.degree(), m)
        }
        None => {
            let total = (m as u128).checked_pow(n as u32).ok_or(Error::Overflow)?;
            budget.charge(u64::try_from(total).map_err(|_| Error::Overflow)?)?;
            count_generic(f, m)?
        }
    };
    // density = count / p^{k(n-1)}
    let den = BigInt::from(p).pow(k * (n as u32 - 1));
    Ok(BigRational::new(BigInt::from(count), den))
}

/// Default level: 2 at primes dividing d or the supplied discriminant
/// bound (one extra level where Hensel lifting can fail), 1 elsewhere.
pub fn default_level(f: &Form, p: u64) -> u32 {
    if f.degree() as u64 % p == 0 {
        return 2;
    }
    if let Some(delta) = f.discriminant_abs() {
        if (delta % BigInt::from(p)).to_u64() == Some(0) {
            return 2;
        }
    }
    1
}

fn count_diagonal(coeffs: &[i128], degree: u32, m: u64) -> u128 {
    let mm = m as u128;
    // histogram of a x^d mod m for one variable, then fold by convolution
    let mut acc: Vec<u128> = vec![0; m as usize];
    acc[0] = 1;
    for &a in coeffs {
        let am = (a.rem_euclid(m as i128)) as u128;
        let mut hist = vec![0u128; m as usize];
        for x in 0..mm {
            let v = (am * pow_mod(x, degree, mm)) % mm;
            hist[v as usize] += 1;
        }
        let mut next = vec![0u128; m as usize];
        for (r, &c) in acc.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (s, &h) in hist.iter().enumerate() {
                if h == 0 {
                    continue;
                }
                let t = (r + s) % m as usize;
                next[t] += c * h;
            }
        }
        acc = next;
    }
    acc[0]
}

fn count_generic(f: &Form, m: u64) -> Result<u128> {
    let n = f.n_vars();
    let mm = m as u128;
    let mut x = vec![0u128; n];
    let mut count = 0u128;
    loop {
        let mut value = 0u128;
        for (exps, c) in f.monomials() {
            let mut term = (c.rem_euclid(m as i128)) as u128;
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term = term * pow_mod(x[i], e, mm) % mm;
                }
            }
            value = (value + term) % mm;
        }
        if value == 0 {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(count);
            }
            x[i] += 1;
            if x[i] < mm {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

fn pow_mod(mut base: u128, mut e: u32, m: u128) -> u128 {
    let mut acc = 1u128 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Quasi-Monte-Carlo estimate of the real density: the limit of the
/// volume of {|f| < tau} inside the unit ball over the window width
/// 2 tau. The raw window estimate carries an O(tau) bias (the surface
/// measure of the level set varies with the level), so the estimator runs
/// three halved windows tau, tau/2, tau/4 on one point stream, checks
/// that the refinement steps contract, and reports the linear
/// extrapolation from the two finest windows, which cancels the bias.
#[derive(Debug, Clone, Copy)]
pub struct SigmaInf {
    /// extrapolated estimate 2 v(tau/4) - v(tau/2)
    pub value: f64,
    /// standard error of `value` across the seeded blocks
    pub std_err: f64,
    /// raw window estimates at tau, tau/2, tau/4
    pub raw: [f64; 3],
    pub tau: f64,
    pub samples: u64,
}

/// sigma_inf at the default window tau = 1e-2 and seed; the block size
/// doubles until the standard error reaches `tol` or the sample cap.
pub fn sigma_inf(f: &Form, tol: f64, budget: &Budget) -> Result<SigmaInf> {
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let mut per_block = 1u64 << 14;
    loop {
        let est = sigma_inf_windows(f, 1e-2, per_block, 0x5eed_f00d, budget)?;
        if est.std_err <= tol || per_block >= 1 << 21 {
            return Ok(est);
        }
        per_block *= 2;
    }
}

/// The windowed estimator itself: 16 blocks of `per_block` points from a
/// rank-1 lattice stream, each block shifted by a seeded rotation; all
/// three windows are counted on the same stream, so two runs with the
/// same seed and scaled windows hit exactly the same points.
///
/// Non-convergence flag: with v0, v1, v2 the window means at tau, tau/2,
/// tau/4, a convergent refinement contracts, |v2 - v1| <= (3/4)|v1 - v0|
/// up to sampling noise. A violation beyond three standard errors of the
/// steps is reported as an invariant violation.
pub fn sigma_inf_windows(
    f: &Form,
    tau: f64,
    per_block: u64,
    seed: u64,
    budget: &Budget,
) -> Result<SigmaInf> {
    let n = f.n_vars();
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config("window width tau must be positive".into()));
    }
    const BLOCKS: usize = 16;
    budget.charge(BLOCKS as u64 * per_block)?;
    let taus = [tau, tau / 2.0, tau / 4.0];
    let alphas = kronecker_alphas(n);
    let box_volume = 2f64.powi(n as i32);
    let estimates: Vec<[f64; 3]> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                seed ^ (b as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            let shift: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut hits = [0u64; 3];
            let mut x = vec![0.0f64; n];
            for j in 1..=per_block {
                let mut norm_sq = 0.0;
                for i in 0..n {
                    let t = (j as f64 * alphas[i] + shift[i]).fract();
                    x[i] = 2.0 * t - 1.0;
                    norm_sq += x[i] * x[i];
                }
                if norm_sq > 1.0 {
                    continue;
                }
                let v = eval_f64(f, &x).abs();
                for (h, &t) in hits.iter_mut().zip(&taus) {
                    if v < t {
                        *h += 1;
                    }
                }
            }
            let scale = box_volume / per_block as f64;
            [
                hits[0] as f64 * scale / (2.0 * taus[0]),
                hits[1] as f64 * scale / (2.0 * taus[1]),
                hits[2] as f64 * scale / (2.0 * taus[2]),
            ]
        })
        .collect();
    let window_means: Vec<(f64, f64)> = (0..3)
        .map(|w| mean_and_std_err(estimates.iter().map(|e| e[w])))
        .collect();
    let (s1, se_s1) = mean_and_std_err(estimates.iter().map(|e| e[1] - e[0]));
    let (s2, se_s2) = mean_and_std_err(estimates.iter().map(|e| e[2] - e[1]));
    if s2.abs() > 0.75 * s1.abs() + 3.0 * (se_s1 + se_s2).max(1e-12) {
        return Err(Error::InvariantViolation(format!(
            "real density refinement does not contract: steps {s1} then {s2} \
             (step std errs {se_s1}, {se_s2})"
        )));
    }
    let (value, std_err) = mean_and_std_err(estimates.iter().map(|e| 2.0 * e[2] - e[1]));
    Ok(SigmaInf {
        value,
        std_err,
        raw: [window_means[0].0, window_means[1].0, window_means[2].0],
        tau,
        samples: BLOCKS as u64 * per_block,
    })
}

/// Direction vector of the rank-1 stream: inverse powers of the root of
/// x^{n+1} = x + 1 (the usual generalization of the golden rotation).
fn kronecker_alphas(n: usize) -> Vec<f64> {
    let mut g = 1.5f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (n as f64 + 1.0));
    }
    (1..=n).map(|i| (1.0 / g.powi(i as i32)).fract()).collect()
}

fn eval_f64(f: &Form, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (exps, c) in f.monomials() {
        let mut term = c as f64;
        for (i, &e) in exps.iter().enumerate() {
            if e > 0 {
                term *= x[i].powi(e as i32);
            }
        }
        acc += term;
    }
    acc
}

fn mean_and_std_err(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let vs: Vec<f64> = values.collect();
    let k = vs.len() as f64;
    let mean = vs.iter().sum::<f64>() / k;
    let var = vs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// The assembled truncated product: exact sigma_p at the default level
/// for every prime up to p_max, times the real density.
pub fn leading_constant(
    f: &Form,
    p_max: u64,
    tol: f64,
    budget: &Budget,
) -> Result<DensityEstimate> {
    if p_max < 2 {
        return Err(Error::Config("prime bound must be at least 2".into()));
    }
    let primes = primes_up_to(p_max);
    let levels: BTreeMap<u64, u32> = primes.iter().map(|&p| (p, default_level(f, p))).collect();
    let locals: Vec<(u64, BigRational)> = primes
        .par_iter()
        .map(|&p| Ok((p, sigma_p(f, p, levels[&p], budget)?)))
        .collect::<Result<_>>()?;
    let inf = sigma_inf(f, tol, budget)?;
    let mut product = 1.0f64;
    for (_, s) in &locals {
        product *= crate::rat::to_f64(s);
    }
    product *= inf.value;
    Ok(DensityEstimate {
        sigma_p: locals.into_iter().collect(),
        levels,
        sigma_inf: inf.value,
        sigma_inf_std_err: inf.std_err,
        product,
        p_max,
        seed: 0x5eed_f00d,
    })
}

fn primes_up_to(p_max: u64) -> Vec<u64> {
    (2..=p_max).filter(|&p| is_prime(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn fermat4() -> Form {
        Form::diagonal(3, &[1, 1, 1, 1]).unwrap()
    }

    fn cubic6() -> Form {
        Form::diagonal(3, &[1, 1, 1, 1, 1, 1])
            .unwrap()
            .with_discriminant(BigInt::from(3))
            .unwrap()
    }

    #[test]
    fn sigma_p_fermat_small_primes_are_one() {
        // cubes are a bijection mod 2 and mod 3, so f counts like a
        // linear form: p^{n-1} solutions
        let f = fermat4();
        let budget = Budget::default();
        assert_eq!(sigma_p(&f, 2, 1, &budget).unwrap(), rat::from_int(1));
        assert_eq!(sigma_p(&f, 3, 1, &budget).unwrap(), rat::from_int(1));
    }

    #[test]
    fn sigma_p_never_below_the_zero_solution() {
        let f = fermat4();
        let budget = Budget::default();
        for &(p, k) in &[(2u64, 1u32), (2, 2), (3, 1), (3, 2), (5, 1), (5, 2)] {
            let s = sigma_p(&f, p, k, &budget).unwrap();
            let floor = BigRational::new(1.into(), BigInt::from(p).pow(k * 3));
            assert!(s >= floor, "sigma_{p} at level {k} below the floor");
        }
    }

    #[test]
    fn diagonal_and_generic_paths_agree() {
        let f = fermat4();
        for &(p, k) in &[(2u64, 1u32), (3, 1), (5, 1), (3, 2)] {
            let m = p.pow(k);
            let fast = count_diagonal(&[1, 1, 1, 1], 3, m);
            let slow = count_generic(&f, m).unwrap();
            assert_eq!(fast, slow, "paths disagree at p {p} level {k}");
        }
    }

    #[test]
    fn sigma_p_frozen_values_for_the_six_variable_cubic() {
        let f = cubic6();
        let budget = Budget::default();
        assert_eq!(sigma_p(&f, 3, 2, &budget).unwrap(), rat::ratio(47, 27));
        assert_eq!(sigma_p(&f, 7, 1, &budget).unwrap(), rat::ratio(3163, 2401));
        assert_eq!(
            sigma_p(&f, 13, 1, &budget).unwrap(),
            rat::ratio(31669, 28561)
        );
    }

    #[test]
    fn hensel_drift_between_levels_is_exactly_the_zero_branch() {
        // at a good prime every nonzero solution mod p is smooth and lifts
        // p^(n-1)-fold, so the only drift between levels 1 and 2 comes from
        // the zero vector: its p^n lifts replace a single level-1 solution,
        // giving sigma_p(2) - sigma_p(1) = (p-1)/p^(n-1) exactly
        let f = cubic6();
        let budget = Budget::default();
        for &p in &[7u64, 13] {
            assert_eq!(default_level(&f, p), 1);
            let k1 = sigma_p(&f, p, 1, &budget).unwrap();
            let k2 = sigma_p(&f, p, 2, &budget).unwrap();
            let drift = BigRational::new((p - 1).into(), BigInt::from(p).pow(5));
            assert_eq!(k2 - k1, drift, "good prime {p} drifted off the zero branch");
        }
        // the bad prime 3 has extra singular residues and breaks the formula
        assert_eq!(default_level(&f, 3), 2);
        let k1 = sigma_p(&f, 3, 1, &budget).unwrap();
        let k2 = sigma_p(&f, 3, 2, &budget).unwrap();
        assert_eq!(k1, rat::from_int(1));
        assert_eq!(k2.clone() - k1, rat::ratio(20, 27));
        assert_ne!(
            k2 - rat::from_int(1),
            BigRational::new(2.into(), BigInt::from(3).pow(5))
        );
    }

    #[test]
    fn sigma_p_is_invariant_under_unimodular_substitution() {
        // g(x) = f(Ux) for an upper unitriangular U permutes residues
        let f = fermat4();
        let u = [
            [1i128, 1, 0, 0],
            [0, 1, 1, 0],
            [0, 0, 1, 1],
            [0, 0, 0, 1],
        ];
        let mut terms: BTreeMap<Vec<u32>, i128> = BTreeMap::new();
        for row in &u {
            // (row . x)^3 expanded monomial by monomial
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        let c = row[i] * row[j] * row[k];
                        if c == 0 {
                            continue;
                        }
                        let mut e = vec![0u32; 4];
                        e[i] += 1;
                        e[j] += 1;
                        e[k] += 1;
                        *terms.entry(e).or_insert(0) += c;
                    }
                }
            }
        }
        let g = Form::new(4, &terms.into_iter().collect::<Vec<_>>()).unwrap();
        assert!(g.diagonal_coeffs().is_none());
        let budget = Budget::default();
        for &(p, k) in &[(2u64, 1u32), (3, 1), (3, 2)] {
            assert_eq!(
                sigma_p(&f, p, k, &budget).unwrap(),
                sigma_p(&g, p, k, &budget).unwrap(),
                "p {p} level {k}"
            );
        }
    }

    #[test]
    fn sigma_p_rejects_bad_input() {
        let f = fermat4();
        let budget = Budget::default();
        assert!(matches!(
            sigma_p(&f, 4, 1, &budget),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            sigma_p(&f, 3, 0, &budget),
            Err(Error::Config(_))
        ));
        let tiny = Budget::new(10);
        assert!(matches!(
            sigma_p(&f, 5, 2, &tiny),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn sigma_inf_recovers_a_hyperplane_cross_section() {
        // |x_1| < tau inside the unit 3-ball has volume 2 tau pi (1+O(tau^2)),
        // so the estimator should land on pi
        let f = Form::new_low_degree(3, &[(vec![1, 0, 0], 1)]).unwrap();
        let budget = Budget::default();
        let est = sigma_inf(&f, 0.03, &budget).unwrap();
        let target = std::f64::consts::PI;
        assert!(
            (est.value - target).abs() <= 3.0 * est.std_err + 0.002 * target,
            "estimate {} +- {} vs {target}",
            est.value,
            est.std_err
        );
    }

    #[test]
    fn sigma_inf_windows_are_consistent_for_the_fermat_cubic() {
        // the raw window estimates carry an O(tau) bias and genuinely move
        // between tau = 1e-2 and 1e-3; the extrapolated values must not
        let f = fermat4();
        let budget = Budget::default();
        let coarse = sigma_inf_windows(&f, 1e-2, 1 << 16, 0x5eed_f00d, &budget).unwrap();
        let fine = sigma_inf_windows(&f, 1e-3, 1 << 18, 0x5eed_f00d, &budget).unwrap();
        assert!(coarse.value > 0.0 && fine.value > 0.0);
        let combined = (coarse.std_err * coarse.std_err + fine.std_err * fine.std_err).sqrt();
        assert!(
            (coarse.value - fine.value).abs() <= 3.0 * combined.max(1e-12),
            "windows disagree: {} vs {} (combined std err {combined})",
            coarse.value,
            fine.value
        );
    }

    #[test]
    fn sigma_inf_scaling_is_exact_on_a_shared_stream() {
        // lambda f with window tau hits exactly the points of f with
        // window tau/lambda, so the estimates differ by exactly 1/lambda
        let f = fermat4();
        let g = Form::diagonal(3, &[3, 3, 3, 3]).unwrap();
        let budget = Budget::default();
        let base = sigma_inf_windows(&f, 1e-2 / 3.0, 1 << 14, 99, &budget).unwrap();
        let scaled = sigma_inf_windows(&g, 1e-2, 1 << 14, 99, &budget).unwrap();
        assert!((3.0 * scaled.value - base.value).abs() < 1e-12 * base.value.max(1.0));
    }

    #[test]
    fn sigma_inf_is_stable_under_signed_permutations() {
        let f = fermat4();
        let g = Form::diagonal(3, &[-1, 1, -1, 1]).unwrap();
        let budget = Budget::default();
        let a = sigma_inf(&f, 0.05, &budget).unwrap();
        let b = sigma_inf(&g, 0.05, &budget).unwrap();
        let combined = (a.std_err * a.std_err + b.std_err * b.std_err).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * combined.max(1e-12));
    }

    #[test]
    fn leading_constant_assembles_and_factors() {
        // sigma_inf enters both products with the same seed and tolerance,
        // so it cancels exactly in the factor comparison; a coarse
        // tolerance keeps the six-variable sampler cheap
        let f = cubic6();
        let budget = Budget::default();
        let lc11 = leading_constant(&f, 11, 0.5, &budget).unwrap();
        let lc13 = leading_constant(&f, 13, 0.5, &budget).unwrap();
        assert!(lc11.product > 0.0 && lc13.product > 0.0);
        assert_eq!(lc13.sigma_p.len(), 6);
        // adding the prime 13 multiplies the product by sigma_13 exactly
        let factor = rat::to_f64(&lc13.sigma_p[&13]);
        let rel = (lc13.product - lc11.product * factor).abs() / lc13.product;
        assert!(rel < 1e-12, "factor mismatch {rel}");
        // primes of residue 2 mod 3 contribute exactly 1
        assert_eq!(lc13.sigma_p[&2], rat::from_int(1));
        assert_eq!(lc13.sigma_p[&5], rat::from_int(1));
        assert_eq!(lc13.sigma_p[&11], rat::from_int(1));
    }
}
