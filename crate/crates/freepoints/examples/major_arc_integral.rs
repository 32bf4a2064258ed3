//! Integrate S(beta) over the major arcs attached to a point and compare
//! with the closed-form prediction Y^(n-1) gcd(grad f(x)) / |grad f(x)|.

use freepoints::circle::{calibrate_cf, major_arc_integral, ArcConfig};
use freepoints::forms::Form;
use freepoints::Budget;

fn main() -> freepoints::Result<()> {
    let f = Form::diagonal(3, &[1, 1, 1, 1])?;
    let budget = Budget::default();

    // the arc constant comes from measured gradient growth on the shell
    let x_shell = 10.0;
    let y = 150.0;
    let eta = 0.1;
    let c_f = calibrate_cf(&f, x_shell, y, eta, 200, 7)?;
    println!("calibrated C_f = {c_f:.4} for shell height {x_shell}, window Y = {y}");

    let r = y.powf(1.0 / (1.0 - 0.25));
    let cfg = ArcConfig::new(3, r, (r / x_shell).floor() as u64, 0.25, eta, c_f)?;

    // points on the hypersurface inside the dyadic shell (X/2, X]
    for x in [[1i128, -1, 7, -7], [3, -3, 5, -5], [2, -2, 5, -5]] {
        let rep = major_arc_integral(&f, &x, &cfg, 1e-3 * cfg.y.powi(3), &budget)?;
        let rel = (rep.integral - rep.prediction).abs() / rep.prediction;
        println!(
            "x = {x:?}: {} arcs of total measure {:.3e}",
            rep.arc_count, rep.arc_measure
        );
        println!(
            "  integral {:.6e}  prediction {:.6e}  relative gap {:.2}%{}",
            rep.integral,
            rep.prediction,
            100.0 * rel,
            if rep.flagged { "  [flagged: gcd too large for this window]" } else { "" }
        );
    }
    Ok(())
}
