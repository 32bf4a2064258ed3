//! The freeness statistic of a rational point, its tangent lattice, the
//! renormalized quotient surrogate, and whole-ball freeness surveys.
//!
//! For a primitive x with f(x) = 0 and |x| > 1 the statistic is
//! ltilde(x) = (log|x| - log s_{n-1}(Lambda_x)) / log|x|, computed from the
//! exact squared minima. Threshold decisions never go through floats:
//! ltilde(x) >= p/q is decided as (s^2)^q <= (|x|^2)^(q-p) in exact
//! rational arithmetic, boundary counted as free.

use crate::enumerate::{enumerate_points, EnumerationPlan};
use crate::forms::{self, Form};
use crate::lattice::Lattice;
use crate::minima::successive_minima;
use crate::{rat, Budget, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct PointRecord {
    pub x: Vec<i128>,
    pub norm_sq: i128,
    pub grad_gcd: BigInt,
    pub det_sq: BigRational,
    pub minima_sq: Vec<BigRational>,
    pub freeness: f64,
}

/// Lambda_x: integer vectors orthogonal to the primitivized gradient.
pub fn point_lattice(f: &Form, x: &[i128]) -> Result<Lattice> {
    let content = forms::content(x);
    if !content.is_one() {
        return Err(Error::NotPrimitive {
            content: content.into(),
        });
    }
    let grad = f.gradient(x)?;
    Lattice::kernel_of_vector(&grad)
}

fn validate_on_hypersurface(f: &Form, x: &[i128]) -> Result<i128> {
    if !f.eval(x)?.is_zero() {
        return Err(Error::NotOnHypersurface);
    }
    Ok(forms::norm_sq(x))
}

/// ltilde(x) from exact minima; needs |x| > 1 so the normalizing log is
/// positive.
pub fn freeness_tilde(f: &Form, x: &[i128], budget: &Budget) -> Result<f64> {
    let norm_sq = validate_on_hypersurface(f, x)?;
    if norm_sq <= 1 {
        return Err(Error::HeightTooSmall);
    }
    let lat = point_lattice(f, x)?;
    let prof = successive_minima(&lat, budget)?;
    let last = prof.minima_sq.last().unwrap();
    Ok(1.0 - rat::ln(last) / (norm_sq as f64).ln())
}

/// Exact threshold decision: ltilde(x) >= eps, i.e. with eps = p/q,
/// (s_{n-1}^2)^q <= (|x|^2)^(q-p). Boundary ties count as free.
pub fn eps_free(f: &Form, x: &[i128], eps: &BigRational, budget: &Budget) -> Result<bool> {
    let norm_sq = validate_on_hypersurface(f, x)?;
    if norm_sq <= 1 {
        return Err(Error::HeightTooSmall);
    }
    if eps.is_negative() || eps > &BigRational::one() {
        return Err(Error::Config("eps must lie in [0, 1]".into()));
    }
    let lat = point_lattice(f, x)?;
    let prof = successive_minima(&lat, budget)?;
    let last = prof.minima_sq.last().unwrap();
    let q = eps.denom().to_u32().ok_or(Error::Overflow)?;
    let p = eps.numer().to_u32().ok_or(Error::Overflow)?;
    Ok(rat::powi(last, q) <= rat::powi(&rat::from_int(norm_sq), q - p))
}

pub fn point_record(f: &Form, x: &[i128], budget: &Budget) -> Result<PointRecord> {
    let norm_sq = validate_on_hypersurface(f, x)?;
    if norm_sq <= 1 {
        return Err(Error::HeightTooSmall);
    }
    let grad = f.gradient(x)?;
    let grad_gcd = f.gcd_gradient(x)?;
    let lat = Lattice::kernel_of_vector(&grad)?;
    let prof = successive_minima(&lat, budget)?;
    let last = prof.minima_sq.last().unwrap();
    let freeness = 1.0 - rat::ln(last) / (norm_sq as f64).ln();
    Ok(PointRecord {
        x: x.to_vec(),
        norm_sq,
        grad_gcd: grad_gcd.into(),
        det_sq: lat.determinant_sq(),
        minima_sq: prof.minima_sq,
        freeness,
    })
}

/// The rank n-2 tangent surrogate: Lambda_x modulo the line through x,
/// renormalized by 1/|x|. x itself always lies in Lambda_x by the Euler
/// identity, so the quotient is well defined.
pub fn tangent_quotient(f: &Form, x: &[i128]) -> Result<Lattice> {
    let lat = point_lattice(f, x)?;
    lat.quotient_mod_integer_vector(x)
}

/// The logged (never asserted) slope inequality: returns the exact pair
/// (s_{n-2}(quotient)^2, n^2 s_{n-1}(Lambda_x)^2 / |x|^2); the surrogate
/// holds when the first is at most the second.
pub fn slope_surrogate(f: &Form, x: &[i128], budget: &Budget) -> Result<(BigRational, BigRational)> {
    let n = f.n_vars();
    let norm_sq = validate_on_hypersurface(f, x)?;
    let lat = point_lattice(f, x)?;
    let quot = tangent_quotient(f, x)?;
    let lat_prof = successive_minima(&lat, budget)?;
    let quot_prof = successive_minima(&quot, budget)?;
    let lhs = quot_prof.minima_sq.last().unwrap().clone();
    let rhs = rat::ratio((n * n) as i128, 1) * lat_prof.minima_sq.last().unwrap()
        / rat::from_int(norm_sq);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone)]
pub struct Survey {
    /// one record per surveyed point, sorted by (norm_sq, x)
    pub records: Vec<PointRecord>,
    pub n_points: u64,
    pub n_free: u64,
    pub n_nonfree: u64,
    /// points with |x| <= 1 where the statistic is undefined
    pub excluded_low_height: u64,
    /// bin index floor(ltilde / 0.05) -> count
    pub histogram: BTreeMap<i64, u64>,
    pub median: f64,
    pub mean: f64,
    /// the heuristic typical value (n - d) / (n - 1)
    pub reference: f64,
}

/// Full-ball freeness survey: every projective point of height <= b gets a
/// record; freeness is aggregated with the exact threshold at eps.
pub fn freeness_survey(
    f: &Form,
    b: f64,
    eps: &BigRational,
    budget_cap: u64,
) -> Result<Survey> {
    if !(b >= 2.0) {
        return Err(Error::Config("survey bound must be >= 2".into()));
    }
    let pts = enumerate_points(f, &EnumerationPlan::bounded(b).with_budget(budget_cap))?;
    let excluded_low_height = pts
        .iter()
        .filter(|x| forms::norm_sq(x) <= 1)
        .count() as u64;
    let mut records: Vec<PointRecord> = pts
        .into_par_iter()
        .filter(|x| forms::norm_sq(x) > 1)
        .map(|x| point_record(f, &x, &Budget::new(budget_cap)))
        .collect::<Result<_>>()?;
    records.sort_by(|a, b| (a.norm_sq, &a.x).cmp(&(b.norm_sq, &b.x)));
    let q = eps.denom().to_u32().ok_or(Error::Overflow)?;
    let p = eps.numer().to_u32().ok_or(Error::Overflow)?;
    let mut n_free = 0u64;
    let mut histogram: BTreeMap<i64, u64> = BTreeMap::new();
    let mut values: Vec<f64> = Vec::with_capacity(records.len());
    for rec in &records {
        let last = rec.minima_sq.last().unwrap();
        if rat::powi(last, q) <= rat::powi(&rat::from_int(rec.norm_sq), q - p) {
            n_free += 1;
        }
        *histogram
            .entry((rec.freeness / 0.05).floor() as i64)
            .or_insert(0) += 1;
        values.push(rec.freeness);
    }
    let n_points = records.len() as u64;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if values.is_empty() {
        f64::NAN
    } else if values.len() % 2 == 1 {
        values[values.len() / 2]
    } else {
        (values[values.len() / 2 - 1] + values[values.len() / 2]) / 2.0
    };
    let mean = if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    let n = f.n_vars() as f64;
    let d = f.degree() as f64;
    Ok(Survey {
        records,
        n_points,
        n_free,
        n_nonfree: n_points - n_free,
        excluded_low_height,
        histogram,
        median,
        mean,
        reference: (n - d) / (n - 1.0),
    })
}
