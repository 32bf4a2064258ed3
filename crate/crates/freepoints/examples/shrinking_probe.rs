//! The shrinking probe: how the count of integer points with gamma x near
//! the integer lattice responds when the box shrinks by theta and the
//! approximation tightens by 1/theta. The envelope theta^(-n) times
//! max(sqrt(P/Q), 1)^n caps the measured ratio for symmetric gamma.

use freepoints::circle::{shrink_ratio, NormKind};
use freepoints::Budget;
use rand::{Rng, SeedableRng};

fn main() -> freepoints::Result<()> {
    let budget = Budget::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);

    println!(
        "{:>3} {:>7} {:>7} {:>6} {:>9} {:>9} {:>10} {:>10}",
        "i", "P", "Q", "theta", "N(P,Q)", "N(tP,Q/t)", "ratio", "envelope"
    );
    for i in 0..6 {
        let mut gamma = vec![vec![0.0f64; 2]; 2];
        for r in 0..2 {
            for c in r..2 {
                let v = rng.gen_range(-0.5..0.5);
                gamma[r][c] = v;
                gamma[c][r] = v;
            }
        }
        let (p, q, theta) = (40.0, 40.0, 0.5);
        let rep = shrink_ratio(&gamma, p, q, theta, NormKind::Max, &budget)?;
        println!(
            "{i:>3} {p:>7} {q:>7} {theta:>6} {:>9} {:>9} {:>10.3} {:>10.3}",
            rep.numerator, rep.denominator, rep.ratio, rep.envelope
        );
        assert!(rep.ratio.is_finite() && rep.ratio <= rep.envelope * 30.0);
    }

    println!("\ngamma = 0 makes every x qualify, so the ratio is pure box scaling:");
    let gamma = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
    let rep = shrink_ratio(&gamma, 20.0, 10.0, 0.5, NormKind::Max, &budget)?;
    println!(
        "  ratio {:.3} vs envelope {:.3}",
        rep.ratio, rep.envelope
    );
    Ok(())
}
