//! Gaussian theta sums over lattices with certified truncation, the
//! Poisson-summation identity, and the Gaussian majorant of the skewness
//! indicator.
//!
//! Convention: theta(L, R) = sum over y in L of exp(-pi |y|^2 / R^2),
//! so larger R means a wider Gaussian and more mass.

use crate::lattice::Lattice;
use crate::minima::{norm_histogram, shortest_sq};
use crate::rat;
use crate::{Budget, Error, Result};
use num_rational::BigRational;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct ThetaValue {
    pub value: f64,
    /// metric radius up to which lattice points were summed exactly
    pub truncation_radius: f64,
    /// certified upper bound on the omitted Gaussian mass
    pub tail_bound: f64,
}

/// Upper bound on the mass of exp(-pi |y|^2 / R^2) over |y| > t, using the
/// packing bound #{y : |y| <= u} <= (2u/s1 + 1)^r on shells of width R.
/// s1_low must be a certified lower bound on the shortest vector length.
fn tail_mass_bound(t: f64, r: usize, s1_low: f64, radius: f64) -> f64 {
    let mut total = 0.0f64;
    let mut prev = f64::INFINITY;
    for k in 0..100_000 {
        let inner = t + k as f64 * radius;
        let outer = inner + radius;
        let count = (2.0 * outer / s1_low + 1.0).powi(r as i32);
        let term = count * (-PI * inner * inner / (radius * radius)).exp();
        total += term;
        if term < prev * 0.5 && term < total.max(f64::MIN_POSITIVE) * 1e-9 {
            // ratio keeps shrinking, geometric remainder <= term
            return total + term;
        }
        prev = term;
    }
    f64::INFINITY
}

/// Sum of exp(-pi |y|^2 / R^2) over the lattice, truncation certified to tol.
/// Terms are accumulated in ascending magnitude (largest norms first), the
/// zero vector's contribution of 1 last.
pub fn theta_sum(lat: &Lattice, radius: f64, tol: f64, budget: &Budget) -> Result<ThetaValue> {
    if !(radius > 0.0) || !(tol > 0.0) {
        return Err(Error::Config("theta_sum needs radius > 0 and tol > 0".into()));
    }
    let r = lat.rank();
    let s1_low = rat::to_f64(&shortest_sq(lat, budget)?).sqrt() * (1.0 - 1e-9);
    let mut trunc = radius * (1.0f64.max((1.0 / tol).ln() / PI)).sqrt() + s1_low.min(radius);
    let mut steps = 0;
    while tail_mass_bound(trunc, r, s1_low, radius) > tol {
        trunc *= 1.25;
        steps += 1;
        if steps > 200 {
            return Err(Error::InvariantViolation(
                "theta tail bound failed to converge".into(),
            ));
        }
    }
    let tail_bound = tail_mass_bound(trunc, r, s1_low, radius);
    let bound_metric = BigRational::from_float(trunc * trunc)
        .ok_or_else(|| Error::Config("nonfinite truncation radius".into()))?;
    let hist = norm_histogram(lat, &bound_metric, budget)?;
    let nf = rat::to_f64(&hist.norm_factor);
    let mut value = 0.0f64;
    for (&key, &count) in hist.half_counts.iter().rev() {
        value += 2.0 * count as f64 * (-PI * nf * key as f64 / (radius * radius)).exp();
    }
    value += 1.0;
    Ok(ThetaValue {
        value,
        truncation_radius: trunc,
        tail_bound,
    })
}

/// |theta_L(R) - (R^r / det L) theta_{L*}(1/R)|. Internal tolerances are
/// tightened by the Poisson factor so the reported residual is certified
/// below 4 * tol.
pub fn poisson_residual(lat: &Lattice, radius: f64, tol: f64, budget: &Budget) -> Result<f64> {
    let r = lat.rank();
    let det = rat::to_f64(&lat.determinant_sq()).sqrt();
    let factor = radius.powi(r as i32) / det;
    let tol_each = tol / (1.0 + factor);
    let left = theta_sum(lat, radius, tol_each, budget)?;
    let dual = lat.dual()?;
    let right = theta_sum(&dual, 1.0 / radius, tol_each, budget)?;
    Ok((left.value - factor * right.value).abs())
}

/// Gaussian majorant of the indicator [s_r(L) > R]:
/// exp(pi r^2) (det L / R^r)(theta_L(R) - R^r / det L), evaluated through
/// its Poisson form exp(pi r^2) (theta_{L*}(1/R) - 1) so every term is a
/// positive exponential. The dual sum is truncated from below, which only
/// shrinks the value; the shortest dual vector is always included, and by
/// transference its term alone already exceeds 1 whenever s_r(L) > R.
pub fn skew_majorant(lat: &Lattice, radius: f64, budget: &Budget) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Config("skew_majorant needs radius > 0".into()));
    }
    let r = lat.rank();
    let dual = lat.dual()?;
    let s1_dual_sq = shortest_sq(&dual, budget)?;
    let reach = BigRational::from_float((3.0 / radius) * (3.0 / radius))
        .ok_or_else(|| Error::Config("nonfinite radius".into()))?;
    let forced = &s1_dual_sq * rat::ratio(1_000_001, 1_000_000);
    let bound_metric = if forced > reach { forced } else { reach };
    let hist = norm_histogram(&dual, &bound_metric, budget)?;
    let nf = rat::to_f64(&hist.norm_factor);
    let rr = PI * (r * r) as f64;
    let mut value = 0.0f64;
    for (&key, &count) in hist.half_counts.iter().rev() {
        value += 2.0 * count as f64 * (rr - PI * nf * key as f64 * radius * radius).exp();
    }
    Ok(value)
}

/// theta_L(R) - R^r / det L, the bracket whose nonnegativity underpins the
/// majorant; uses a certified theta value and the exact determinant.
pub fn majorant_bracket(lat: &Lattice, radius: f64, tol: f64, budget: &Budget) -> Result<f64> {
    let r = lat.rank();
    let det = rat::to_f64(&lat.determinant_sq()).sqrt();
    let theta = theta_sum(lat, radius, tol, budget)?;
    Ok(theta.value - radius.powi(r as i32) / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use crate::minima::successive_minima;
    use num_traits::FromPrimitive;
    use rand::{Rng, SeedableRng};

    const TOL: f64 = 1e-10;

    fn theta(lat: &Lattice, radius: f64) -> f64 {
        theta_sum(lat, radius, TOL, &Budget::default()).unwrap().value
    }

    #[test]
    fn integer_line_value_matches_series_oracle() {
        let z = Lattice::standard(1);
        let v = theta(&z, 1.0);
        assert!((v - 1.0864348112127259).abs() < TOL, "{v}");
        assert!(v >= 1.0);
    }

    #[test]
    fn plane_factorizes_as_square_of_line() {
        let z2 = Lattice::standard(2);
        let line = theta(&Lattice::standard(1), 1.0);
        assert!((theta(&z2, 1.0) - line * line).abs() < 2.0 * TOL);
    }

    #[test]
    fn doubled_line_matches_direct_series() {
        let lat = Lattice::from_integer_vectors(&[vec![2]]).unwrap();
        let expect = 1.0 + 2.0 * (-4.0 * PI).exp() + 2.0 * (-16.0 * PI).exp();
        assert!((theta(&lat, 1.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn poisson_identity_on_line_and_doubled_line() {
        let b = Budget::default();
        let z = Lattice::standard(1);
        assert!(poisson_residual(&z, 1.0, TOL, &b).unwrap() <= 4.0 * TOL);
        let two_z = Lattice::from_integer_vectors(&[vec![2]]).unwrap();
        assert!(poisson_residual(&two_z, 1.0, TOL, &b).unwrap() <= 4.0 * TOL);
    }

    fn random_integer_lattice(rng: &mut impl Rng, max_rank: usize) -> Lattice {
        loop {
            let r = rng.gen_range(1..=max_rank);
            let n = r + rng.gen_range(0..=1usize);
            let basis: Vec<Vec<i128>> = (0..r)
                .map(|_| (0..n).map(|_| rng.gen_range(-4i128..=4)).collect())
                .collect();
            if let Ok(lat) = Lattice::from_integer_vectors(&basis) {
                return lat;
            }
        }
    }

    #[test]
    fn poisson_identity_on_random_corpus() {
        let b = Budget::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let lat = random_integer_lattice(&mut rng, 3);
            for radius in [0.5, 1.0, 2.0] {
                let res = poisson_residual(&lat, radius, TOL, &b).unwrap();
                assert!(res <= 4.0 * TOL, "residual {res} at radius {radius}");
            }
        }
    }

    #[test]
    fn majorant_examples() {
        let b = Budget::default();
        let z2 = Lattice::standard(2);
        assert!(skew_majorant(&z2, 2.0, &b).unwrap() >= 0.0);
        assert!(skew_majorant(&z2, 0.5, &b).unwrap() >= 1.0);
        let tall = Lattice::from_integer_vectors(&[vec![1, 0], vec![0, 100]]).unwrap();
        assert!(skew_majorant(&tall, 10.0, &b).unwrap() >= 1.0);
    }

    #[test]
    fn majorant_dominates_indicator_on_random_corpus() {
        let b = Budget::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let lat = random_integer_lattice(&mut rng, 4);
            let r = lat.rank();
            let prof = successive_minima(&lat, &b).unwrap();
            let last_sq = prof.minima_sq[r - 1].clone();
            for num in [1i128, 2, 3, 4, 6] {
                let radius_sq = rat::ratio(num * num, 4); // radius = num/2
                let radius = num as f64 / 2.0;
                let maj = skew_majorant(&lat, radius, &b).unwrap();
                assert!(maj >= 0.0);
                if last_sq > radius_sq {
                    assert!(maj >= 1.0, "majorant {maj} with s_r^2 {last_sq} > {radius_sq}");
                }
            }
        }
    }

    #[test]
    fn bracket_is_nonnegative_on_random_corpus() {
        let b = Budget::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..15 {
            let lat = random_integer_lattice(&mut rng, 3);
            for radius in [0.5, 1.0, 2.0] {
                let v = majorant_bracket(&lat, radius, TOL, &b).unwrap();
                assert!(v >= -4.0 * TOL, "bracket {v}");
            }
        }
    }

    #[test]
    fn scaling_covariance() {
        let b = Budget::default();
        let base = Lattice::kernel_of_vector(&[1, 2, 3]).unwrap();
        let tripled: Vec<Vec<i128>> = base
            .basis()
            .iter()
            .map(|v| {
                v.iter()
                    .map(|e| e.to_integer().to_i128().unwrap() * 3)
                    .collect()
            })
            .collect();
        let lat3 = Lattice::from_integer_vectors(&tripled).unwrap();
        for radius in [0.7, 1.0, 2.5] {
            let a = theta_sum(&base, radius, TOL, &b).unwrap().value;
            let c = theta_sum(&lat3, 3.0 * radius, TOL, &b).unwrap().value;
            assert!((a - c).abs() < 2.0 * TOL + 1e-9, "{a} vs {c}");
        }
        // rational scale factor 3/2 applied through the metric
        let scaled = Lattice::new(
            base.basis().to_vec(),
            BigRational::from_f64(2.25).unwrap(),
        )
        .unwrap();
        let a = theta_sum(&base, 1.0, TOL, &b).unwrap().value;
        let c = theta_sum(&scaled, 1.5, TOL, &b).unwrap().value;
        assert!((a - c).abs() < 2.0 * TOL + 1e-9);
    }

    #[test]
    fn tail_bound_shrinks_as_truncation_grows() {
        let b = Budget::default();
        let z2 = Lattice::standard(2);
        let loose = theta_sum(&z2, 1.0, 1e-6, &b).unwrap();
        let tight = theta_sum(&z2, 1.0, 1e-12, &b).unwrap();
        assert!(loose.truncation_radius <= tight.truncation_radius);
        assert!(loose.tail_bound >= tight.tail_bound);
        assert!(tight.tail_bound <= 1e-12);
    }
}
