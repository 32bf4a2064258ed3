//! Basis preprocessing for enumeration: clearing denominators to an
//! integer basis and LLL reduction (delta = 0.99).
//!
//! LLL here is a speedup, not a correctness requirement: enumeration always
//! verifies candidate norms in exact integer arithmetic. The reducer uses a
//! floating-point Gram-Schmidt shadow with exact i128 row operations; on
//! overflow or iteration cap it stops and returns the current (still valid)
//! basis.

use crate::{lattice::Lattice, Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

/// An integer basis carrying the exact conversion factor back to the
/// lattice metric: metric_norm_sq(v) = norm_factor * (integer coords of v
/// in this basis, squared under the plain dot product).
#[derive(Debug, Clone)]
pub struct IntegerBasis {
    pub vectors: Vec<Vec<i128>>,
    pub norm_factor: BigRational,
    pub den: BigInt,
}

/// Scale a rational basis by the lcm of all denominators.
pub fn integerize(lat: &Lattice) -> Result<IntegerBasis> {
    let mut den = BigInt::one();
    for v in lat.basis() {
        for e in v {
            den = den.lcm(e.denom());
        }
    }
    let mut vectors = Vec::with_capacity(lat.rank());
    for v in lat.basis() {
        let mut iv = Vec::with_capacity(v.len());
        for e in v {
            let scaled = e.numer() * (&den / e.denom());
            iv.push(scaled.to_i128().ok_or(Error::Overflow)?);
        }
        vectors.push(iv);
    }
    let den_sq = BigRational::from_integer(&den * &den);
    Ok(IntegerBasis {
        vectors,
        norm_factor: lat.scale_sq() / den_sq,
        den,
    })
}

fn dot_i128(u: &[i128], v: &[i128]) -> Option<i128> {
    let mut acc: i128 = 0;
    for (a, b) in u.iter().zip(v) {
        acc = acc.checked_add(a.checked_mul(*b)?)?;
    }
    Some(acc)
}

/// Exact Gram matrix of integer vectors; None on overflow.
pub fn gram_i128(vectors: &[Vec<i128>]) -> Option<Vec<Vec<i128>>> {
    let r = vectors.len();
    let mut g = vec![vec![0i128; r]; r];
    for i in 0..r {
        for j in i..r {
            let d = dot_i128(&vectors[i], &vectors[j])?;
            g[i][j] = d;
            g[j][i] = d;
        }
    }
    Some(g)
}

/// Floating-point Gram-Schmidt data (mu coefficients and squared star
/// norms) computed from exact integer dot products. None if the shadow
/// degenerates numerically.
fn gram_schmidt_f64(vectors: &[Vec<i128>]) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let r = vectors.len();
    let gram = gram_i128(vectors)?;
    let mut mu = vec![vec![0.0f64; r]; r];
    let mut bstar = vec![0.0f64; r];
    for i in 0..r {
        let mut b = gram[i][i] as f64;
        for j in 0..i {
            let mut m = gram[i][j] as f64;
            for k in 0..j {
                m -= mu[i][k] * mu[j][k] * bstar[k];
            }
            if bstar[j] <= 0.0 {
                return None;
            }
            let m = m / bstar[j];
            mu[i][j] = m;
            b -= m * m * bstar[j];
        }
        if !b.is_finite() || b <= 0.0 {
            return None;
        }
        bstar[i] = b;
    }
    Some((mu, bstar))
}

/// In-place LLL reduction with delta = 0.99. Returns false when it gave up
/// early (overflow, numeric degeneracy, or iteration cap); the basis is a
/// valid basis of the same lattice either way.
pub fn lll(vectors: &mut [Vec<i128>]) -> bool {
    let r = vectors.len();
    if r <= 1 {
        return true;
    }
    const DELTA: f64 = 0.99;
    let max_steps = 50_000 + 5_000 * r * r;
    let mut steps = 0usize;
    let mut k = 1usize;
    while k < r {
        steps += 1;
        if steps > max_steps {
            return false;
        }
        let (mu, bstar) = match gram_schmidt_f64(vectors) {
            Some(g) => g,
            None => return false,
        };
        // size-reduce vector k against the largest offending j < k
        let mut reduced = true;
        for j in (0..k).rev() {
            if mu[k][j].abs() > 0.5 {
                let q = mu[k][j].round();
                if !q.is_finite() || q.abs() >= 9.2e18 {
                    return false;
                }
                let qi = q as i128;
                let mut new_row = vectors[k].clone();
                for (nv, bj) in new_row.iter_mut().zip(&vectors[j]) {
                    match qi.checked_mul(*bj).and_then(|p| nv.checked_sub(p)) {
                        Some(v) => *nv = v,
                        None => return false,
                    }
                }
                vectors[k] = new_row;
                reduced = false;
                break;
            }
        }
        if !reduced {
            continue;
        }
        let lovasz = bstar[k] + mu[k][k - 1] * mu[k][k - 1] * bstar[k - 1];
        if lovasz < (DELTA - 1e-12) * bstar[k - 1] {
            vectors.swap(k, k - 1);
            k = k.max(2) - 1;
        } else {
            k += 1;
        }
    }
    true
}

/// Integerize and LLL-reduce a lattice basis in one step.
pub fn reduced_basis(lat: &Lattice) -> Result<IntegerBasis> {
    let mut ib = integerize(lat)?;
    lll(&mut ib.vectors);
    Ok(ib)
}
