//! Homogeneous integer forms: exact evaluation, gradients, symmetric
//! coefficients, and the integral multilinear forms `m_j`.
//!
//! A form of degree `d` in `n` variables is stored as a sparse monomial map.
//! The symmetric coefficients `c_{j_1..j_d}` (rationals with denominator
//! dividing `d!`) and the multilinear forms
//! `m_j(u_1,..,u_{d-1}) = d! * sum c_{j_1..j_{d-1} j} u^(1)_{j_1} ... `
//! are derived from it; the `d!` factor makes every `m_j` value an integer.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct Form {
    n_vars: usize,
    degree: u32,
    /// exponent vector -> coefficient, zero coefficients dropped
    monomials: BTreeMap<Vec<u32>, i128>,
    /// sorted index tuple (len d) -> d! * c_{tuple}, always integral
    dfact_sym: BTreeMap<Vec<usize>, i128>,
    /// user-supplied bound with gcd(grad f(x)) | disc for primitive x
    discriminant_abs: Option<BigInt>,
}

fn factorial(k: u32) -> i128 {
    (1..=k as i128).product::<i128>().max(1)
}

impl Form {
    pub fn new(n_vars: usize, terms: &[(Vec<u32>, i128)]) -> Result<Self> {
        Self::build(n_vars, terms, 3)
    }

    /// Test harness entry that admits degree >= 1 (linear sanity forms).
    #[cfg(test)]
    pub(crate) fn new_low_degree(n_vars: usize, terms: &[(Vec<u32>, i128)]) -> Result<Self> {
        Self::build(n_vars, terms, 1)
    }

    fn build(n_vars: usize, terms: &[(Vec<u32>, i128)], min_degree: u32) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidForm("need at least one variable".into()));
        }
        let mut monomials: BTreeMap<Vec<u32>, i128> = BTreeMap::new();
        let mut degree: Option<u32> = None;
        for (exps, coeff) in terms {
            if exps.len() != n_vars {
                return Err(Error::DimensionMismatch {
                    expected: n_vars,
                    got: exps.len(),
                });
            }
            let d: u32 = exps.iter().sum();
            match degree {
                None => degree = Some(d),
                Some(d0) if d0 != d => {
                    return Err(Error::InvalidForm(format!(
                        "mixed degrees {d0} and {d}: form must be homogeneous"
                    )))
                }
                _ => {}
            }
            *monomials.entry(exps.clone()).or_insert(0) += coeff;
        }
        monomials.retain(|_, c| *c != 0);
        let degree = degree.unwrap_or(0);
        if monomials.is_empty() {
            return Err(Error::InvalidForm("zero form".into()));
        }
        if degree < min_degree {
            return Err(Error::InvalidForm(format!(
                "degree {degree} below supported minimum {min_degree}"
            )));
        }
        let mut dfact_sym = BTreeMap::new();
        let dfact = factorial(degree);
        for (exps, &a) in &monomials {
            let mut tuple = Vec::with_capacity(degree as usize);
            let mut mult = 1i128;
            for (i, &e) in exps.iter().enumerate() {
                mult *= factorial(e);
                tuple.extend(std::iter::repeat(i).take(e as usize));
            }
            // d! * c = a * prod(e_i!) since c = a * prod(e_i!)/d!
            debug_assert!(dfact % 1 == 0);
            dfact_sym.insert(tuple, a.checked_mul(mult).ok_or(Error::Overflow)?);
        }
        let _ = dfact;
        Ok(Form {
            n_vars,
            degree,
            monomials,
            dfact_sym,
            discriminant_abs: None,
        })
    }

    /// Diagonal form `sum a_i x_i^d`.
    pub fn diagonal(d: u32, coeffs: &[i128]) -> Result<Self> {
        let n = coeffs.len();
        let terms: Vec<(Vec<u32>, i128)> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(i, &a)| {
                let mut e = vec![0u32; n];
                e[i] = d;
                (e, a)
            })
            .collect();
        Self::build(n, &terms, 3)
    }

    pub fn with_discriminant(mut self, delta: BigInt) -> Result<Self> {
        if !delta.is_positive() {
            return Err(Error::InvalidForm("discriminant bound must be positive".into()));
        }
        self.discriminant_abs = Some(delta);
        Ok(self)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn discriminant_abs(&self) -> Option<&BigInt> {
        self.discriminant_abs.as_ref()
    }

    pub fn monomials(&self) -> impl Iterator<Item = (&[u32], i128)> {
        self.monomials.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    /// Per-variable coefficients when the form is diagonal (`sum a_i x_i^d`).
    pub fn diagonal_coeffs(&self) -> Option<Vec<i128>> {
        let mut coeffs = vec![0i128; self.n_vars];
        for (exps, &c) in &self.monomials {
            let mut support = exps.iter().enumerate().filter(|(_, &e)| e > 0);
            match (support.next(), support.next()) {
                (Some((i, &e)), None) if e == self.degree => coeffs[i] = c,
                _ => return None,
            }
        }
        Some(coeffs)
    }

    fn check_dim(&self, x: &[i128]) -> Result<()> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[i128]) -> Result<i128> {
        self.check_dim(x)?;
        let mut acc: i128 = 0;
        for (exps, &c) in &self.monomials {
            let mut term = c;
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    let p = x[i].checked_pow(e).ok_or(Error::Overflow)?;
                    term = term.checked_mul(p).ok_or(Error::Overflow)?;
                }
            }
            acc = acc.checked_add(term).ok_or(Error::Overflow)?;
        }
        Ok(acc)
    }

    pub fn gradient(&self, x: &[i128]) -> Result<Vec<i128>> {
        self.check_dim(x)?;
        let mut grad = vec![0i128; self.n_vars];
        for (exps, &c) in &self.monomials {
            for (j, &ej) in exps.iter().enumerate() {
                if ej == 0 {
                    continue;
                }
                let mut term = c.checked_mul(ej as i128).ok_or(Error::Overflow)?;
                for (i, &e) in exps.iter().enumerate() {
                    let e = if i == j { e - 1 } else { e };
                    if e > 0 {
                        let p = x[i].checked_pow(e).ok_or(Error::Overflow)?;
                        term = term.checked_mul(p).ok_or(Error::Overflow)?;
                    }
                }
                grad[j] = grad[j].checked_add(term).ok_or(Error::Overflow)?;
            }
        }
        Ok(grad)
    }

    /// gcd of the gradient entries. Errors on a vanishing gradient, which
    /// flags a singular point of the cone away from the origin.
    pub fn gcd_gradient(&self, x: &[i128]) -> Result<i128> {
        let grad = self.gradient(x)?;
        let g = grad.iter().fold(0i128, |acc, &v| acc.gcd(&v));
        if g == 0 {
            return Err(Error::SingularPoint);
        }
        Ok(g)
    }

    /// Symmetric coefficient `c_{tuple}` as an exact rational
    /// (tuple sorted ascending, length d, 0-based indices).
    pub fn sym_coeff(&self, tuple: &[usize]) -> BigRational {
        let key: Vec<usize> = {
            let mut t = tuple.to_vec();
            t.sort_unstable();
            t
        };
        match self.dfact_sym.get(&key) {
            Some(&v) => BigRational::new(BigInt::from(v), BigInt::from(factorial(self.degree))),
            None => BigRational::zero(),
        }
    }

    /// `m_j(u_1,..,u_{d-1})`, an exact integer, symmetric and multilinear
    /// in its arguments; `m_j(x,..,x) = (d-1)! * df/dx_j`.
    pub fn multilinear(&self, j: usize, us: &[&[i128]]) -> Result<i128> {
        if j >= self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: j,
            });
        }
        let d = self.degree as usize;
        if us.len() != d - 1 {
            return Err(Error::DimensionMismatch {
                expected: d - 1,
                got: us.len(),
            });
        }
        for u in us {
            self.check_dim(u)?;
        }
        // sum over all (d-1)-tuples of indices; d!*c lookups are integral
        let mut acc: i128 = 0;
        let mut idx = vec![0usize; d - 1];
        loop {
            let mut prod: i128 = 1;
            for (k, &i) in idx.iter().enumerate() {
                prod = prod.checked_mul(us[k][i]).ok_or(Error::Overflow)?;
                if prod == 0 {
                    break;
                }
            }
            if prod != 0 {
                let mut key: Vec<usize> = Vec::with_capacity(d);
                key.extend_from_slice(&idx);
                key.push(j);
                key.sort_unstable();
                if let Some(&dc) = self.dfact_sym.get(&key) {
                    acc = acc
                        .checked_add(dc.checked_mul(prod).ok_or(Error::Overflow)?)
                        .ok_or(Error::Overflow)?;
                }
            }
            // odometer over [0,n)^{d-1}
            let mut k = 0;
            loop {
                if k == d - 1 {
                    return Ok(acc);
                }
                idx[k] += 1;
                if idx[k] < self.n_vars {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Parse the text format: one `coeff e1 .. en` monomial per line,
    /// `#` starts a comment. Variable count inferred from the first record.
    pub fn parse_poly(text: &str) -> Result<Self> {
        let mut terms: Vec<(Vec<u32>, i128)> = Vec::new();
        let mut n_vars: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((head, _)) => head,
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let bad = |what: &str| {
                Error::InvalidForm(format!("line {}: {what}: {raw:?}", lineno + 1))
            };
            let coeff: i128 = fields
                .next()
                .ok_or_else(|| bad("missing coefficient"))?
                .parse()
                .map_err(|_| bad("bad coefficient"))?;
            let exps: Vec<u32> = fields
                .map(|t| t.parse().map_err(|_| bad("bad exponent")))
                .collect::<Result<_>>()?;
            match n_vars {
                None => n_vars = Some(exps.len()),
                Some(n) if n != exps.len() => {
                    return Err(bad("inconsistent variable count"));
                }
                _ => {}
            }
            terms.push((exps, coeff));
        }
        let n = n_vars.ok_or_else(|| Error::InvalidForm("empty polynomial file".into()))?;
        Self::build(n, &terms, 3)
    }

    pub fn to_poly_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# degree {} form in {} variables", self.degree, self.n_vars);
        for (exps, &c) in &self.monomials {
            let _ = write!(out, "{c}");
            for e in exps {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
        out
    }

    /// Measured gradient-growth window: min and max of
    /// `|grad f(x)| / |x|^{d-1}` over deterministic pseudo-random samples.
    pub fn gradient_growth_bounds(&self, samples: usize, seed: u64) -> Result<(f64, f64)> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut taken = 0usize;
        while taken < samples {
            let scale = 10f64.powf(rng.gen_range(0.0..3.0));
            let x: Vec<i128> = (0..self.n_vars)
                .map(|_| (rng.gen_range(-1.0..1.0) * scale).round() as i128)
                .collect();
            let norm_sq: i128 = x.iter().map(|v| v * v).sum();
            if norm_sq == 0 {
                continue;
            }
            taken += 1;
            let grad = self.gradient(&x)?;
            let gnorm_sq: f64 = grad.iter().map(|&v| (v as f64) * (v as f64)).sum();
            let ratio = gnorm_sq.sqrt() / (norm_sq as f64).sqrt().powi(self.degree as i32 - 1);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        Ok((lo, hi))
    }
}

/// Norm squared of an integer vector, exact.
pub fn norm_sq(x: &[i128]) -> i128 {
    x.iter().map(|&v| v * v).sum()
}

/// gcd of all entries (0 for the zero vector).
pub fn content(x: &[i128]) -> i128 {
    x.iter().fold(0i128, |acc, &v| acc.gcd(&v))
}
