//! Two exhaustive probes behind the minor-arc analysis: the multilinear
//! count of tuples whose form gradients sit near the integer lattice, and
//! the compatibility window that forces the approximation denominator of
//! a useful alpha into a narrow range.

use freepoints::circle::{count_m, lemma23_check, lemma23_holds, NormKind};
use freepoints::forms::Form;
use freepoints::Budget;

fn main() -> freepoints::Result<()> {
    let f = Form::diagonal(3, &[1, 1, 1, 1])?;
    let budget = Budget::default();

    // tau = a/q + z with a small denominator: the multilinear values
    // concentrate and the count jumps against a generic tau
    println!("pairs (u1, u2) with |u_i| < 4 and <tau m(u1, u2)> < 1/8:");
    for tau in [1.0 / 3.0, 0.3333, 0.3956521, 0.125] {
        let c = count_m(tau, &f, 4.0, 8.0, NormKind::Max, &budget)?;
        println!("  tau = {tau:<9.7} count = {c}");
    }

    // the window: |m| <= M, <alpha m> < 1/R forces q into a narrow range
    let (m_bound, r) = (3i64, 8.0);
    println!("\nadmissible (m, a, q, z) with M = {m_bound}, R = {r}:");
    let mut seen = 0;
    for q in 1..=4i64 {
        for a in 0..q {
            if num_integer::gcd(a, q) != 1 {
                continue;
            }
            for m in -m_bound..=m_bound {
                for &z in &[-1.0 / 24.0, 0.0, 1.0 / 24.0] {
                    let chk = lemma23_check(m, a, q, z, m_bound, r)?;
                    if chk.all() {
                        seen += 1;
                        println!("  m = {m}, a/q = {a}/{q}, z = {z:+.4}");
                        assert!(lemma23_holds(m, a, q, z, m_bound, r)?);
                    }
                }
            }
        }
    }
    println!("{seen} admissible rows, all with m = 0: a nonzero m would need");
    println!("an alpha simultaneously too close to and too far from a/q");
    Ok(())
}
