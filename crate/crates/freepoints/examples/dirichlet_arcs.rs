//! Dirichlet rational approximation and the major/minor arc dissection of
//! the unit circle it induces.

use freepoints::circle::{dirichlet_approx, is_major_arc, ArcConfig};

fn main() -> freepoints::Result<()> {
    // every alpha has a fraction a/q with q <= Q and |alpha - a/q| <= 1/(q Q)
    println!("Dirichlet approximations with q <= 50:");
    for alpha in [std::f64::consts::PI - 3.0, 0.5f64.sqrt(), 0.618034, 1.0 / 7.0] {
        let ap = dirichlet_approx(alpha, 50.0)?;
        println!(
            "  alpha = {alpha:.6}  ~  {}/{}  error {:.2e}  (certificate {:.2e})",
            ap.a,
            ap.q,
            (alpha - ap.a as f64 / ap.q as f64).abs(),
            1.0 / (ap.q as f64 * 50.0)
        );
    }

    // dissect [0, 1) for a cubic problem at R = 64: beta is major when
    // some q <= R^(1-eta) catches it within the arc half-width
    let cfg = ArcConfig::new(3, 64.0, 2, 0.25, 0.2, 2.0)?;
    println!(
        "\narc dissection at R = {}, X = {}, Y = {:.2}:",
        cfg.r, cfg.x, cfg.y
    );
    let grid = 96;
    let mut major = 0;
    let mut line = String::new();
    for i in 0..grid {
        let beta = i as f64 / grid as f64;
        match is_major_arc(beta, &cfg) {
            Some(_) => {
                major += 1;
                line.push('M');
            }
            None => line.push('.'),
        }
    }
    println!("  {line}");
    println!("  {major}/{grid} grid points are major");
    println!(
        "  beta = 1/3 -> {:?}, beta = 1/3 + 0.001 -> {:?}",
        is_major_arc(1.0 / 3.0, &cfg),
        is_major_arc(1.0 / 3.0 + 0.001, &cfg)
    );
    Ok(())
}
