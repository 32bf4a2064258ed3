//! Exact successive minima and exact lattice-point enumeration.
//!
//! Strategy: LLL-reduce, then Fincke-Pohst with a floating-point
//! Gram-Schmidt shadow for pruning. Pruning intervals are padded so the
//! float shadow can only ever admit extra candidates; membership of every
//! candidate is decided by an exact i128 norm. Results are exact or the
//! computation fails loudly (budget, overflow); it never returns a wrong
//! minimum. Enumeration proceeds over canonical representatives (last
//! nonzero coordinate positive), so every +-pair is seen exactly once.
//!
//! Skew lattices (a dense hyperplane plus one far direction, the shape of
//! gradient kernels at lopsided points) defeat plain enumeration: the ball
//! of radius s_r holds astronomically many dense-part vectors. For those
//! the profile is assembled by a split that stays exact. Drop one basis
//! vector b; the rest generate a primitive sublattice D, and the dropped
//! vector's projection length m obeys m^2 = det(G)/det(G_D) exactly. When
//! s_{r-1}(D) <= m, every lattice vector outside D has length >= m, so the
//! first r-1 minima are D's minima and
//!   s_r = min_{q >= 1} min_{u in D} |q b + u|,
//! a short exact CVP per fiber (the q loop stops once q^2 m^2 exceeds the
//! best candidate). D's own profile is computed recursively.

use crate::reduce::{self, IntegerBasis};
use crate::{lattice::Lattice, Budget, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

static DENSE_NODES: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
static CVP_NODES: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

/// Gaussian-heuristic node count below which plain enumeration is used.
const PLAIN_NODE_ESTIMATE: f64 = 2_000.0;
/// Hard cap on vectors held by a complete enumeration; crossing it means
/// the instance needed a split and no admissible one exists.
const COLLECT_CAP: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct MinimaProfile {
    /// s_k^2 for k = 1..rank, ascending, exact in the lattice metric
    pub minima_sq: Vec<BigRational>,
    /// independent lattice vectors achieving them, ambient coordinates
    pub witnesses: Vec<Vec<BigRational>>,
}

/// Nonzero vectors of metric squared norm <= bound, counted up to sign.
#[derive(Debug, Clone)]
pub struct NormHistogram {
    /// metric norm_sq of a bucket = norm_factor * key
    pub norm_factor: BigRational,
    pub half_counts: BTreeMap<i128, u64>,
}

impl NormHistogram {
    pub fn total_half_count(&self) -> u64 {
        self.half_counts.values().sum()
    }
}

struct Enumerator<'a> {
    gram: &'a [Vec<i128>],
    mu: Vec<Vec<f64>>,
    bstar: Vec<f64>,
    bound: i128,
    bound_padded: f64,
    budget: &'a Budget,
}

impl<'a> Enumerator<'a> {
    fn new(gram: &'a [Vec<i128>], bound: i128, budget: &'a Budget) -> Result<Self> {
        let r = gram.len();
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
                    return Err(Error::InvariantViolation(
                        "gram-schmidt breakdown in enumeration".into(),
                    ));
                }
                mu[i][j] = m / bstar[j];
                b -= mu[i][j] * mu[i][j] * bstar[j];
            }
            if !b.is_finite() || b <= 0.0 {
                return Err(Error::InvariantViolation(
                    "gram matrix numerically singular".into(),
                ));
            }
            bstar[i] = b;
        }
        // pruning must only over-admit: pad the float budget generously
        let bound_padded = (bound as f64) * (1.0 + 1e-7) + 1.0;
        Ok(Enumerator {
            gram,
            mu,
            bstar,
            bound,
            bound_padded,
            budget,
        })
    }

    fn exact_norm(&self, z: &[i128]) -> Result<i128> {
        let mut acc: i128 = 0;
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0 {
                continue;
            }
            for (j, &zj) in z.iter().enumerate() {
                if zj == 0 {
                    continue;
                }
                let term = zi
                    .checked_mul(zj)
                    .and_then(|p| p.checked_mul(self.gram[i][j]))
                    .ok_or(Error::Overflow)?;
                acc = acc.checked_add(term).ok_or(Error::Overflow)?;
            }
        }
        Ok(acc)
    }

    /// Depth-first descent from the top level; `all_above_zero` tracks
    /// whether every chosen coordinate so far is zero (canonical half).
    fn descend(
        &self,
        level: usize,
        z: &mut [i128],
        remaining: f64,
        all_above_zero: bool,
        visit: &mut dyn FnMut(&[i128], i128) -> Result<()>,
    ) -> Result<()> {
        let r = self.gram.len();
        // interval center from the mu shadow
        let mut center = 0.0f64;
        for j in level + 1..r {
            center += self.mu[j][level] * z[j] as f64;
        }
        let half_width = (remaining.max(0.0) / self.bstar[level]).sqrt() + 1e-6;
        let lo_f = -center - half_width;
        let hi_f = -center + half_width;
        if lo_f > 9.0e17 || hi_f < -9.0e17 {
            return Ok(());
        }
        let mut lo = lo_f.ceil() as i128;
        let hi = hi_f.floor() as i128;
        if all_above_zero {
            lo = lo.max(0);
        }
        for v in lo..=hi {
            self.budget.charge(1)?;
            z[level] = v;
            let dist = (v as f64 + center) * (v as f64 + center) * self.bstar[level];
            let rem = remaining - dist;
            if rem < -1e-6 * self.bound_padded.max(1.0) {
                continue;
            }
            let zero_so_far = all_above_zero && v == 0;
            if level == 0 {
                if zero_so_far {
                    continue; // zero vector
                }
                let norm = self.exact_norm(z)?;
                if norm <= self.bound {
                    visit(z, norm)?;
                }
            } else {
                self.descend(level - 1, z, rem, zero_so_far, visit)?;
            }
        }
        z[level] = 0;
        Ok(())
    }

    fn run(&self, visit: &mut dyn FnMut(&[i128], i128) -> Result<()>) -> Result<()> {
        if self.bound < 0 {
            return Ok(());
        }
        let r = self.gram.len();
        let mut z = vec![0i128; r];
        self.descend(r - 1, &mut z, self.bound_padded, true, visit)
    }
}

/// All canonical (up to sign) nonzero vectors with exact integer gram norm
/// <= bound, as (norm, coordinates), sorted by norm then coordinates.
fn collect_up_to(
    gram: &[Vec<i128>],
    bound: i128,
    budget: &Budget,
) -> Result<Vec<(i128, Vec<i128>)>> {
    let mut out = Vec::new();
    let en = Enumerator::new(gram, bound, budget)?;
    en.run(&mut |z, norm| {
        if out.len() >= COLLECT_CAP {
            return Err(Error::BudgetExceeded {
                limit: budget.cap(),
            });
        }
        out.push((norm, z.to_vec()));
        Ok(())
    })?;
    out.sort();
    Ok(out)
}

/// Exact integer row-echelon accumulator for greedy independence tests.
struct Echelon {
    rows: Vec<Vec<BigInt>>, // each with a pivot column, sorted by pivot
}

impl Echelon {
    fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    fn try_insert(&mut self, z: &[i128]) -> bool {
        let mut v: Vec<BigInt> = z.iter().map(|&e| BigInt::from(e)).collect();
        for row in &self.rows {
            let p = row.iter().position(|e| !e.is_zero()).unwrap();
            if v[p].is_zero() {
                continue;
            }
            let (a, b) = (row[p].clone(), v[p].clone());
            for (ve, re) in v.iter_mut().zip(row) {
                *ve = &*ve * &a - re * &b;
            }
        }
        if v.iter().all(|e| e.is_zero()) {
            return false;
        }
        let content = v
            .iter()
            .fold(BigInt::zero(), |acc, e| num_integer::Integer::gcd(&acc, e));
        for e in &mut v {
            *e /= &content;
        }
        let pivot = v.iter().position(|e| !e.is_zero()).unwrap();
        let pos = self
            .rows
            .iter()
            .position(|r| r.iter().position(|e| !e.is_zero()).unwrap() > pivot)
            .unwrap_or(self.rows.len());
        self.rows.insert(pos, v);
        true
    }
}

fn ambient_witness(ib: &IntegerBasis, z: &[i128]) -> Result<Vec<BigRational>> {
    let dim = ib.vectors[0].len();
    let mut acc = vec![0i128; dim];
    for (k, &c) in z.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for (a, &b) in acc.iter_mut().zip(&ib.vectors[k]) {
            *a = c
                .checked_mul(b)
                .and_then(|p| a.checked_add(p))
                .ok_or(Error::Overflow)?;
        }
    }
    let den = BigRational::from_integer(ib.den.clone());
    Ok(acc
        .into_iter()
        .map(|e| BigRational::from_integer(BigInt::from(e)) / &den)
        .collect())
}

/// Exact successive minima with witnesses, in gram units with integer
/// coefficient witnesses. Dispatches between complete enumeration and the
/// dense-plus-far split on the predicted ball count.
fn minima_gram(gram: &[Vec<i128>], budget: &Budget) -> Result<(Vec<i128>, Vec<Vec<i128>>)> {
    let r = gram.len();
    let hi = (0..r).map(|i| gram[i][i]).max().unwrap();
    let det = det_bigint(gram);
    if det.is_negative() || det.is_zero() {
        return Err(Error::InvariantViolation(
            "gram matrix is not positive definite".into(),
        ));
    }
    let det_f = rat_f64(&det).max(1.0);
    let count = 0.5 * unit_ball_volume(r) * (hi as f64).powf(r as f64 / 2.0) / det_f.sqrt();
    if count <= PLAIN_NODE_ESTIMATE {
        return plain_minima(gram, budget);
    }
    // the far direction is almost always the longest basis vector; the
    // last LLL vector is the other natural candidate
    let longest = (0..r).max_by_key(|&i| gram[i][i]).unwrap();
    let mut drops = vec![longest];
    if longest != r - 1 {
        drops.push(r - 1);
    }
    for drop in drops {
        if let Some(res) = try_split(gram, &det, drop, budget)? {
            return Ok(res);
        }
    }
    plain_minima(gram, budget)
}

/// Progressive bound doubling: each round enumerates completely below the
/// bound, so a completed greedy extraction is provably the true profile.
fn plain_minima(gram: &[Vec<i128>], budget: &Budget) -> Result<(Vec<i128>, Vec<Vec<i128>>)> {
    let r = gram.len();
    let diag: Vec<i128> = (0..r).map(|i| gram[i][i]).collect();
    let lo = *diag.iter().min().unwrap();
    let hi = *diag.iter().max().unwrap();
    let mut bound = lo;
    loop {
        let stream = collect_up_to(gram, bound, budget)?;
        let mut ech = Echelon::new();
        let mut chosen: Vec<(i128, Vec<i128>)> = Vec::with_capacity(r);
        for (norm, z) in stream {
            if ech.try_insert(&z) {
                chosen.push((norm, z));
                if chosen.len() == r {
                    break;
                }
            }
        }
        if chosen.len() == r {
            return Ok(chosen.into_iter().unzip());
        }
        debug_assert!(bound < hi, "basis vectors guarantee completion at hi");
        bound = hi.min(bound.checked_mul(2).ok_or(Error::Overflow)?);
    }
}

/// Bareiss fraction-free determinant; gram matrices stay well inside
/// BigInt range at any rank this library meets.
fn det_bigint(gram: &[Vec<i128>]) -> BigInt {
    let n = gram.len();
    let mut m: Vec<Vec<BigInt>> = gram
        .iter()
        .map(|row| row.iter().map(|&e| BigInt::from(e)).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

fn rat_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::MAX)
}

/// V_r = pi^{r/2} / Gamma(r/2 + 1), the Euclidean unit ball volume.
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

/// The dense-plus-far split at one drop index. Returns None when the
/// admissibility condition s_{r-1}(D) <= m fails and the split is not
/// sound for this drop.
fn try_split(
    gram: &[Vec<i128>],
    det_full: &BigInt,
    drop: usize,
    budget: &Budget,
) -> Result<Option<(Vec<i128>, Vec<Vec<i128>>)>> {
    let r = gram.len();
    if r < 2 {
        return Ok(None);
    }
    let keep: Vec<usize> = (0..r).filter(|&i| i != drop).collect();
    let dense: Vec<Vec<i128>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| gram[i][j]).collect())
        .collect();
    let det_dense = det_bigint(&dense);
    if det_dense.is_zero() {
        return Ok(None);
    }
    let m2 = BigRational::new(det_full.clone(), det_dense);
    let before_dense = budget.used();
    let (dense_vals, dense_wits) = minima_gram(&dense, budget)?;
    DENSE_NODES.fetch_add(budget.used() - before_dense, std::sync::atomic::Ordering::Relaxed);
    if BigRational::from_integer(BigInt::from(*dense_vals.last().unwrap())) > m2 {
        return Ok(None);
    }
    // fiber search: each candidate has norm q^2 m^2 + (dense CVP part)
    let mut best = gram[drop][drop];
    let mut best_z = {
        let mut z = vec![0i128; r];
        z[drop] = 1;
        z
    };
    let mut q: i128 = 1;
    loop {
        let floor_cost = BigRational::from_integer(BigInt::from(q) * BigInt::from(q)) * &m2;
        if floor_cost > BigRational::from_integer(BigInt::from(best)) {
            break;
        }
        let m2_f = m2.to_f64().unwrap_or(f64::MAX);
        let before_cvp = budget.used();
        let fiber = cvp_fiber(gram, &dense, &keep, drop, q, (q * q) as f64 * m2_f, best, budget)?;
        CVP_NODES.fetch_add(budget.used() - before_cvp, std::sync::atomic::Ordering::Relaxed);
        if let Some((norm, z)) = fiber {
            if norm < best {
                best = norm;
                best_z = z;
            }
        }
        q = q.checked_add(1).ok_or(Error::Overflow)?;
    }
    let mut vals = dense_vals;
    let mut wits: Vec<Vec<i128>> = dense_wits
        .into_iter()
        .map(|w| {
            let mut z = vec![0i128; r];
            for (&slot, c) in keep.iter().zip(w) {
                z[slot] = c;
            }
            z
        })
        .collect();
    vals.push(best);
    wits.push(best_z);
    Ok(Some((vals, wits)))
}

/// Exact minimum of |q b_drop + u| over u in the dense sublattice, kept
/// strictly below `bound`, as (full gram norm, full coefficient vector).
/// Float Gram-Schmidt of the dense part prunes; every candidate is judged
/// by its exact integer norm in the full gram.
#[allow(clippy::too_many_arguments)]
fn cvp_fiber(
    gram: &[Vec<i128>],
    dense: &[Vec<i128>],
    keep: &[usize],
    drop: usize,
    q: i128,
    fiber_floor: f64,
    bound: i128,
    budget: &Budget,
) -> Result<Option<(i128, Vec<i128>)>> {
    let rd = dense.len();
    // Gram-Schmidt shadow of the dense form
    let mut mu = vec![vec![0.0f64; rd]; rd];
    let mut bstar = vec![0.0f64; rd];
    for i in 0..rd {
        let mut b = dense[i][i] as f64;
        for j in 0..i {
            let mut m = dense[i][j] as f64;
            for k in 0..j {
                m -= mu[i][k] * mu[j][k] * bstar[k];
            }
            mu[i][j] = m / bstar[j];
            b -= mu[i][j] * mu[i][j] * bstar[j];
        }
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvariantViolation(
                "gram matrix numerically singular".into(),
            ));
        }
        bstar[i] = b;
    }
    // center: solve G_d beta = -q * cross in floats (exactness comes from
    // the integer norm check, completeness from padded pruning)
    let mut aug: Vec<Vec<f64>> = (0..rd)
        .map(|i| {
            let mut row: Vec<f64> = dense[i].iter().map(|&e| e as f64).collect();
            row.push(-(q as f64) * gram[keep[i]][drop] as f64);
            row
        })
        .collect();
    for k in 0..rd {
        let piv = (k..rd)
            .max_by(|&a, &b| aug[a][k].abs().partial_cmp(&aug[b][k].abs()).unwrap())
            .unwrap();
        aug.swap(k, piv);
        let p = aug[k][k];
        if p == 0.0 {
            return Err(Error::InvariantViolation(
                "gram matrix numerically singular".into(),
            ));
        }
        for i in 0..rd {
            if i == k {
                continue;
            }
            let f = aug[i][k] / p;
            for j in k..=rd {
                aug[i][j] -= f * aug[k][j];
            }
        }
    }
    let beta: Vec<f64> = (0..rd).map(|i| aug[i][rd] / aug[i][i]).collect();

    let mut state = CvpState {
        gram,
        keep,
        drop,
        q,
        mu: &mu,
        bstar: &bstar,
        beta: &beta,
        budget,
        best: None,
        bound,
    };
    // the floor is subtracted with a downward bias so the float shadow
    // can only ever admit extra candidates
    let padded = (bound as f64) * (1.0 + 1e-7) + 2.0 - fiber_floor * (1.0 - 1e-9);
    if padded > 0.0 {
        let mut u = vec![0i128; rd];
        state.descend(rd - 1, &mut u, padded)?;
    }
    Ok(state.best)
}

struct CvpState<'a> {
    gram: &'a [Vec<i128>],
    keep: &'a [usize],
    drop: usize,
    q: i128,
    mu: &'a [Vec<f64>],
    bstar: &'a [f64],
    beta: &'a [f64],
    budget: &'a Budget,
    best: Option<(i128, Vec<i128>)>,
    bound: i128,
}

impl CvpState<'_> {
    fn exact_norm(&self, u: &[i128]) -> Result<(i128, Vec<i128>)> {
        let r = self.gram.len();
        let mut z = vec![0i128; r];
        z[self.drop] = self.q;
        for (&slot, &c) in self.keep.iter().zip(u) {
            z[slot] = c;
        }
        let mut acc: i128 = 0;
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0 {
                continue;
            }
            for (j, &zj) in z.iter().enumerate() {
                if zj == 0 {
                    continue;
                }
                let term = zi
                    .checked_mul(zj)
                    .and_then(|p| p.checked_mul(self.gram[i][j]))
                    .ok_or(Error::Overflow)?;
                acc = acc.checked_add(term).ok_or(Error::Overflow)?;
            }
        }
        Ok((acc, z))
    }

    fn descend(&mut self, level: usize, u: &mut [i128], remaining: f64) -> Result<()> {
        let rd = self.keep.len();
        let mut center = self.beta[level];
        for l in level + 1..rd {
            center += self.mu[l][level] * (u[l] as f64 + self.beta[l]);
        }
        let half_width = (remaining.max(0.0) / self.bstar[level]).sqrt() + 1e-6;
        let lo_f = -center - half_width;
        let hi_f = -center + half_width;
        if lo_f > 9.0e17 || hi_f < -9.0e17 {
            return Ok(());
        }
        let lo = lo_f.ceil() as i128;
        let hi = hi_f.floor() as i128;
        for v in lo..=hi {
            self.budget.charge(1)?;
            u[level] = v;
            let t = v as f64 + center;
            let rem = remaining - t * t * self.bstar[level];
            if rem < -1e-6 * remaining.abs().max(1.0) {
                continue;
            }
            if level == 0 {
                let (norm, z) = self.exact_norm(u)?;
                if norm < self.bound && self.best.as_ref().map_or(true, |(b, _)| norm < *b) {
                    self.best = Some((norm, z));
                }
            } else {
                self.descend(level - 1, u, rem)?;
            }
        }
        u[level] = 0;
        Ok(())
    }
}

/// Exact successive minima with witnesses.
pub fn successive_minima(lat: &Lattice, budget: &Budget) -> Result<MinimaProfile> {
    let ib = reduce::reduced_basis(lat)?;
    let gram = reduce::gram_i128(&ib.vectors).ok_or(Error::Overflow)?;
    let (vals, wits) = minima_gram(&gram, budget)?;
    let mut minima_sq = Vec::with_capacity(vals.len());
    let mut witnesses = Vec::with_capacity(vals.len());
    for (norm, z) in vals.into_iter().zip(wits) {
        minima_sq.push(&ib.norm_factor * BigRational::from_integer(BigInt::from(norm)));
        witnesses.push(ambient_witness(&ib, &z)?);
    }
    Ok(MinimaProfile {
        minima_sq,
        witnesses,
    })
}

/// Exact squared length of a shortest nonzero vector.
pub fn shortest_sq(lat: &Lattice, budget: &Budget) -> Result<BigRational> {
    let ib = reduce::reduced_basis(lat)?;
    let gram = reduce::gram_i128(&ib.vectors).ok_or(Error::Overflow)?;
    let bound = (0..gram.len()).map(|i| gram[i][i]).min().unwrap();
    let mut best: Option<i128> = None;
    let en = Enumerator::new(&gram, bound, budget)?;
    en.run(&mut |_, norm| {
        best = Some(best.map_or(norm, |b: i128| b.min(norm)));
        Ok(())
    })?;
    let best = best.expect("a shortest basis vector lies within its own norm bound");
    Ok(&ib.norm_factor * BigRational::from_integer(BigInt::from(best)))
}

/// Histogram of nonzero vectors (up to sign) with metric squared norm
/// <= bound_metric.
pub fn norm_histogram(
    lat: &Lattice,
    bound_metric: &BigRational,
    budget: &Budget,
) -> Result<NormHistogram> {
    let ib = reduce::reduced_basis(lat)?;
    let gram = reduce::gram_i128(&ib.vectors).ok_or(Error::Overflow)?;
    let ratio = bound_metric / &ib.norm_factor;
    let bound = ratio.floor().to_integer().to_i128().ok_or(Error::Overflow)?;
    let mut half_counts = BTreeMap::new();
    if bound >= 0 {
        let en = Enumerator::new(&gram, bound, budget)?;
        en.run(&mut |_, norm| {
            *half_counts.entry(norm).or_insert(0u64) += 1;
            Ok(())
        })?;
    }
    Ok(NormHistogram {
        norm_factor: ib.norm_factor,
        half_counts,
    })
}
