//! Exact lattices with rational basis vectors and a rational metric scale.
//!
//! A lattice here is a list of linearly independent basis vectors in Q^n
//! together with `scale_sq`: the inner product is
//! `<u, v> = scale_sq * (u . v)`, so lengths are `sqrt(scale_sq) * |v|`.
//! Keeping the scale symbolic lets quotient constructions stay exact even
//! when the geometric scale factor 1/|x| is irrational.

use crate::{rat, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone)]
pub struct Lattice {
    /// basis vectors, each of length `ambient_dim`
    vectors: Vec<Vec<BigRational>>,
    ambient_dim: usize,
    scale_sq: BigRational,
}

pub fn dot(u: &[BigRational], v: &[BigRational]) -> BigRational {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn to_rational_vec(v: &[i128]) -> Vec<BigRational> {
    v.iter().map(|&c| rat::from_int(c)).collect()
}

/// Exact determinant of a square rational matrix by Gaussian elimination.
fn det_rational(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(p) => p,
            None => return BigRational::zero(),
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

/// Solve a square nonsingular rational system `A x = b`.
fn solve_rational(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(pivot, col);
        let p = m[col][col].clone();
        for c in col..=n {
            m[col][c] = &m[col][c] / &p;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for c in col..=n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

impl Lattice {
    pub fn new(vectors: Vec<Vec<BigRational>>, scale_sq: BigRational) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Config("lattice needs at least one basis vector".into()));
        }
        let ambient_dim = vectors[0].len();
        if ambient_dim == 0 || vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch {
                expected: ambient_dim,
                got: vectors.iter().map(|v| v.len()).find(|&l| l != ambient_dim).unwrap_or(0),
            });
        }
        if vectors.len() > ambient_dim {
            return Err(Error::Config("more basis vectors than ambient dimensions".into()));
        }
        if !scale_sq.is_positive() {
            return Err(Error::Config("metric scale must be positive".into()));
        }
        let lat = Lattice {
            vectors,
            ambient_dim,
            scale_sq,
        };
        if det_rational(lat.gram_unscaled()).is_zero() {
            return Err(Error::Config("basis vectors are linearly dependent".into()));
        }
        Ok(lat)
    }

    pub fn standard(n: usize) -> Self {
        let vectors = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Lattice {
            vectors,
            ambient_dim: n,
            scale_sq: BigRational::one(),
        }
    }

    pub fn from_integer_vectors(vectors: &[Vec<i128>]) -> Result<Self> {
        Self::new(
            vectors.iter().map(|v| to_rational_vec(v)).collect(),
            BigRational::one(),
        )
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn scale_sq(&self) -> &BigRational {
        &self.scale_sq
    }

    pub fn basis(&self) -> &[Vec<BigRational>] {
        &self.vectors
    }

    /// Metric norm squared of an ambient vector: `scale_sq * v.v`.
    pub fn metric_norm_sq(&self, v: &[BigRational]) -> BigRational {
        &self.scale_sq * dot(v, v)
    }

    fn gram_unscaled(&self) -> Vec<Vec<BigRational>> {
        let r = self.rank();
        let mut g = vec![vec![BigRational::zero(); r]; r];
        for i in 0..r {
            for j in i..r {
                let d = dot(&self.vectors[i], &self.vectors[j]);
                g[i][j] = d.clone();
                g[j][i] = d;
            }
        }
        g
    }

    /// Gram matrix of the basis under the scaled inner product.
    pub fn gram(&self) -> Vec<Vec<BigRational>> {
        let mut g = self.gram_unscaled();
        for row in &mut g {
            for entry in row {
                *entry *= &self.scale_sq;
            }
        }
        g
    }

    /// det(L)^2, exact.
    pub fn determinant_sq(&self) -> BigRational {
        let unscaled = det_rational(self.gram_unscaled());
        unscaled * rat::powi(&self.scale_sq, self.rank() as u32)
    }

    /// Coordinates of `v` in this basis, if `v` lies in the rational span.
    pub fn span_coordinates(&self, v: &[BigRational]) -> Option<Vec<BigRational>> {
        if v.len() != self.ambient_dim {
            return None;
        }
        // normal equations; basis independence makes Gram invertible
        let g = self.gram_unscaled();
        let rhs: Vec<BigRational> = self.vectors.iter().map(|b| dot(b, v)).collect();
        let coords = solve_rational(&g, &rhs)?;
        // confirm v really is in the span, not just its projection
        for i in 0..self.ambient_dim {
            let mut rec = BigRational::zero();
            for (k, c) in coords.iter().enumerate() {
                rec += c * &self.vectors[k][i];
            }
            if rec != v[i] {
                return None;
            }
        }
        Some(coords)
    }

    pub fn contains(&self, v: &[BigRational]) -> bool {
        match self.span_coordinates(v) {
            Some(coords) => coords.iter().all(|c| c.is_integer()),
            None => false,
        }
    }

    pub fn contains_integer_vec(&self, v: &[i128]) -> bool {
        self.contains(&to_rational_vec(v))
    }

    /// Dual lattice with respect to the same scaled inner product.
    /// det(dual) * det(self) = 1.
    pub fn dual(&self) -> Result<Self> {
        let r = self.rank();
        let g = self.gram_unscaled();
        // columns of (B^T B)^{-1}, solved column by column
        let mut inv_cols: Vec<Vec<BigRational>> = Vec::with_capacity(r);
        for j in 0..r {
            let mut e = vec![BigRational::zero(); r];
            e[j] = BigRational::one();
            let col = solve_rational(&g, &e)
                .ok_or_else(|| Error::InvariantViolation("gram matrix not invertible".into()))?;
            inv_cols.push(col);
        }
        // dual vector j: (1/scale_sq) * sum_k B_k * inv[k][j]
        let inv_scale = BigRational::one() / &self.scale_sq;
        let mut dual_vectors = Vec::with_capacity(r);
        for col in &inv_cols {
            let mut v = vec![BigRational::zero(); self.ambient_dim];
            for (k, c) in col.iter().enumerate() {
                for i in 0..self.ambient_dim {
                    v[i] += c * &self.vectors[k][i];
                }
            }
            for entry in &mut v {
                *entry *= &inv_scale;
            }
            dual_vectors.push(v);
        }
        Lattice::new(dual_vectors, self.scale_sq.clone())
    }

    /// Sublattice of Z^n orthogonal to the integer vector `c`.
    /// For primitive `c` its determinant squared equals `|c|^2`.
    pub fn kernel_of_vector(c: &[i128]) -> Result<Self> {
        let n = c.len();
        if n < 2 {
            return Err(Error::Config("kernel lattice needs ambient dimension >= 2".into()));
        }
        let content = crate::forms::content(c);
        if content == 0 {
            return Err(Error::ZeroVector);
        }
        let cp: Vec<i128> = c.iter().map(|&v| v / content).collect();
        // column-reduce cp to a single nonzero entry, tracking the
        // unimodular transform; the other columns then span the kernel
        let mut u: Vec<Vec<i128>> = (0..n)
            .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
            .collect();
        let mut d = cp.clone();
        loop {
            let mut pivot = usize::MAX;
            for (j, &v) in d.iter().enumerate() {
                if v != 0 && (pivot == usize::MAX || v.abs() < d[pivot].abs()) {
                    pivot = j;
                }
            }
            debug_assert!(pivot != usize::MAX);
            let mut changed = false;
            for j in 0..n {
                if j == pivot || d[j] == 0 {
                    continue;
                }
                let q = d[j].div_euclid(d[pivot]);
                if q != 0 {
                    d[j] -= q * d[pivot];
                    for row in 0..n {
                        let sub = q.checked_mul(u[pivot][row]).ok_or(Error::Overflow)?;
                        u[j][row] = u[j][row].checked_sub(sub).ok_or(Error::Overflow)?;
                    }
                    changed = true;
                }
            }
            if !changed {
                if pivot != 0 {
                    d.swap(0, pivot);
                    u.swap(0, pivot);
                }
                break;
            }
        }
        debug_assert_eq!(d[0].abs(), 1);
        debug_assert!(d[1..].iter().all(|&v| v == 0));
        let kernel: Vec<Vec<i128>> = u.into_iter().skip(1).collect();
        Self::from_integer_vectors(&kernel)
    }

    /// Quotient of the lattice by a primitive vector `x` in it: the image
    /// of the orthogonal projection away from `x`, with lengths further
    /// scaled by 1/|x| (metric norm). Rank drops by one.
    pub fn quotient_mod_vector(&self, x: &[BigRational]) -> Result<Self> {
        let r = self.rank();
        if r < 2 {
            return Err(Error::Config("quotient needs rank >= 2".into()));
        }
        let x_dot = dot(x, x);
        if x_dot.is_zero() {
            return Err(Error::ZeroVector);
        }
        let coords = self
            .span_coordinates(x)
            .ok_or(Error::NotInLattice)?;
        if coords.iter().any(|c| !c.is_integer()) {
            return Err(Error::NotInLattice);
        }
        let ints: Vec<BigInt> = coords.iter().map(|c| c.to_integer()).collect();
        let content = ints
            .iter()
            .fold(BigInt::zero(), |acc, v| num_integer::Integer::gcd(&acc, v));
        if !content.magnitude().is_one() {
            return Err(Error::NotPrimitive { content });
        }
        // extend x to a basis of the lattice: build a unimodular matrix
        // whose first column is the coordinate vector of x
        let v = unimodular_with_first_column(&ints)?;
        // remaining columns, mapped to ambient space and projected off x
        let mut out = Vec::with_capacity(r - 1);
        for col in v.iter().skip(1) {
            let mut w = vec![BigRational::zero(); self.ambient_dim];
            for (k, c) in col.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let cr = BigRational::from_integer(c.clone());
                for i in 0..self.ambient_dim {
                    w[i] += &cr * &self.vectors[k][i];
                }
            }
            let coeff = dot(&w, x) / &x_dot;
            for i in 0..self.ambient_dim {
                let sub = &coeff * &x[i];
                w[i] -= sub;
            }
            out.push(w);
        }
        let metric_x = &self.scale_sq * &x_dot;
        Lattice::new(out, &self.scale_sq / metric_x)
    }

    pub fn quotient_mod_integer_vector(&self, x: &[i128]) -> Result<Self> {
        self.quotient_mod_vector(&to_rational_vec(x))
    }
}

/// Unimodular integer matrix (as columns) whose first column is the given
/// primitive vector. Built by undoing the elementary operations that
/// reduce the vector to a standard basis vector.
fn unimodular_with_first_column(a: &[BigInt]) -> Result<Vec<Vec<BigInt>>> {
    let n = a.len();
    let mut work = a.to_vec();
    // matrix accumulating the inverse operations, stored as columns
    let mut m: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    // Each op on `work` is mirrored by the inverse op on the COLUMNS of m
    // acting from the right, so that m * work stays equal to a.
    loop {
        let mut pivot = usize::MAX;
        for (j, v) in work.iter().enumerate() {
            if !v.is_zero() && (pivot == usize::MAX || v.magnitude() < work[pivot].magnitude()) {
                pivot = j;
            }
        }
        if pivot == usize::MAX {
            return Err(Error::ZeroVector);
        }
        let mut changed = false;
        for j in 0..n {
            if j == pivot || work[j].is_zero() {
                continue;
            }
            let q = num_integer::Integer::div_floor(&work[j], &work[pivot]);
            if !q.is_zero() {
                let sub = &q * &work[pivot];
                work[j] -= sub;
                // work[j] -= q*work[pivot]  =>  column pivot += q * column j
                for row in 0..n {
                    let add = &q * &m[j][row];
                    m[pivot][row] += add;
                }
                changed = true;
            }
        }
        if !changed {
            if work[pivot].is_negative() {
                work[pivot] = -work[pivot].clone();
                for row in 0..n {
                    m[pivot][row] = -m[pivot][row].clone();
                }
            }
            if !work[pivot].is_one() {
                return Err(Error::NotPrimitive {
                    content: work[pivot].clone(),
                });
            }
            if pivot != 0 {
                work.swap(0, pivot);
                m.swap(0, pivot);
            }
            debug_assert_eq!(m[0], a.to_vec());
            return Ok(m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> BigRational {
        rat::ratio(n, d)
    }

    #[test]
    fn standard_lattice_basics() {
        let z3 = Lattice::standard(3);
        assert_eq!(z3.rank(), 3);
        assert_eq!(z3.determinant_sq(), q(1, 1));
        assert!(z3.contains_integer_vec(&[5, -7, 0]));
        assert!(!z3.contains(&[q(1, 2), q(0, 1), q(0, 1)]));
    }

    #[test]
    fn kernel_lattice_of_3_4() {
        let lat = Lattice::kernel_of_vector(&[3, 4]).unwrap();
        assert_eq!(lat.rank(), 1);
        assert_eq!(lat.determinant_sq(), q(25, 1));
        assert!(lat.contains_integer_vec(&[4, -3]));
        assert!(lat.contains_integer_vec(&[-8, 6]));
        assert!(!lat.contains_integer_vec(&[1, 0]));
    }

    #[test]
    fn kernel_lattice_determinant_matches_vector_norm() {
        for c in [
            vec![3i128, 3, 0, 0],
            vec![1, -1, 2, 5],
            vec![12, 8, -20, 4],
            vec![7, 0, 0, 0],
            vec![2, 3, 5, 7, 11, 13],
        ] {
            let lat = Lattice::kernel_of_vector(&c).unwrap();
            let content = crate::forms::content(&c);
            let prim: Vec<i128> = c.iter().map(|&v| v / content).collect();
            let norm: i128 = prim.iter().map(|&v| v * v).sum();
            assert_eq!(lat.rank(), c.len() - 1);
            assert_eq!(lat.determinant_sq(), q(norm, 1));
            // every basis vector is orthogonal to c
            for b in lat.basis() {
                let d: BigRational = b
                    .iter()
                    .zip(&c)
                    .map(|(bi, &ci)| bi * q(ci, 1))
                    .sum();
                assert!(d.is_zero());
            }
        }
    }

    #[test]
    fn kernel_lattice_saturated() {
        // (2,2,2) has content 2; kernel must equal kernel of (1,1,1)
        let lat = Lattice::kernel_of_vector(&[2, 2, 2]).unwrap();
        assert_eq!(lat.determinant_sq(), q(3, 1));
        assert!(lat.contains_integer_vec(&[1, -1, 0]));
    }

    #[test]
    fn dual_inverts_determinant_and_doubles_back() {
        let lat = Lattice::kernel_of_vector(&[1, -1, 2, 5]).unwrap();
        let dual = lat.dual().unwrap();
        assert_eq!(
            lat.determinant_sq() * dual.determinant_sq(),
            BigRational::one()
        );
        // pairing integrality both ways
        for b in lat.basis() {
            assert!(dual.dual().unwrap().contains(b));
        }
        let dd = dual.dual().unwrap();
        for b in dd.basis() {
            assert!(lat.contains(b));
        }
        // <dual_i, b_j> integral under the metric (scale is 1 here)
        for db in dual.basis() {
            for b in lat.basis() {
                assert!(dot(db, b).is_integer());
            }
        }
    }

    #[test]
    fn dual_respects_metric_scale() {
        // Z^2 with lengths doubled: scale_sq = 4
        let lat = Lattice::new(
            vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]],
            q(4, 1),
        )
        .unwrap();
        assert_eq!(lat.determinant_sq(), q(16, 1));
        let dual = lat.dual().unwrap();
        assert_eq!(dual.determinant_sq(), q(1, 16));
        // shortest dual vector (1/4, 0) has metric norm 1/2
        assert_eq!(dual.metric_norm_sq(&[q(1, 4), q(0, 1)]), q(1, 4));
    }

    #[test]
    fn quotient_of_plane_by_3_4() {
        let z2 = Lattice::standard(2);
        let quot = z2.quotient_mod_integer_vector(&[3, 4]).unwrap();
        assert_eq!(quot.rank(), 1);
        assert_eq!(quot.determinant_sq(), q(1, 625));
        // the single basis vector has metric norm 1/25
        let b = &quot.basis()[0];
        assert_eq!(quot.metric_norm_sq(b), q(1, 625));
    }

    #[test]
    fn quotient_determinant_factors() {
        // det(L) = det(L/x) * |x| before the 1/|x| rescale; with the
        // rescale det(L/x) = det(L) / |x|^rank
        let lat = Lattice::kernel_of_vector(&[3, 3, 0, 0]).unwrap();
        // x = (1,-1,2,-2) lies in the lattice and is primitive
        let x = [1i128, -1, 2, -2];
        assert!(lat.contains_integer_vec(&x));
        let quot = lat.quotient_mod_integer_vector(&x).unwrap();
        assert_eq!(quot.rank(), 2);
        let norm_x = q(10, 1);
        let expected = lat.determinant_sq() / &norm_x / rat::powi(&norm_x, 2);
        assert_eq!(quot.determinant_sq(), expected);
    }

    #[test]
    fn quotient_rejects_bad_vectors() {
        let z2 = Lattice::standard(2);
        assert!(matches!(
            z2.quotient_mod_integer_vector(&[6, 8]),
            Err(Error::NotPrimitive { .. })
        ));
        let lat = Lattice::kernel_of_vector(&[1, 1, 1]).unwrap();
        assert!(matches!(
            lat.quotient_mod_integer_vector(&[1, 0, 0]),
            Err(Error::NotInLattice)
        ));
    }

    #[test]
    fn unimodular_completion_has_unit_determinant() {
        for a in [
            vec![3i128, 4],
            vec![1, 0, 0],
            vec![15, -7, 3],
            vec![2, 3, 5, 7],
        ] {
            let big: Vec<BigInt> = a.iter().map(|&v| BigInt::from(v)).collect();
            let m = unimodular_with_first_column(&big).unwrap();
            assert_eq!(m[0], big);
            let rows: Vec<Vec<BigRational>> = (0..a.len())
                .map(|i| {
                    (0..a.len())
                        .map(|j| BigRational::from_integer(m[j][i].clone()))
                        .collect()
                })
                .collect();
            let d = det_rational(rows);
            assert!(d == BigRational::one() || d == -BigRational::one());
        }
    }

    #[test]
    fn rejects_dependent_basis() {
        let res = Lattice::from_integer_vectors(&[vec![1, 2], vec![2, 4]]);
        assert!(res.is_err());
    }
}
