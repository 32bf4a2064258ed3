//! The exceptional-set count E*(R, eps) on a dyadic shell, dominated by
//! its Gaussian majorant, and the exact count of tangent pairs that the
//! multilinear argument bounds. The majorant carries an exp(pi r^2)
//! factor, so it is astronomically lossy here; what matters downstream is
//! that it is a certified upper bound with the right decay in eps.

use freepoints::enumerate::{
    count_e_star_from, count_tangent_pairs, e_star_majorant_from, shell_lattice_data,
};
use freepoints::forms::Form;
use freepoints::rat;

fn main() -> freepoints::Result<()> {
    let f = Form::diagonal(3, &[1, 1, 1, 1])?;
    let cap = 50_000_000;

    let r = 32.0;
    let data = shell_lattice_data(&f, r, cap)?;
    println!("shell 16 < |x| <= 32 on the Fermat cubic: {} points", data.len());

    println!("\n{:>6} {:>8} {:>12}", "eps", "E*", "majorant");
    for (num, den) in [(0i128, 1i128), (1, 20), (1, 10), (3, 20), (1, 5)] {
        let eps = rat::ratio(num, den);
        let exact = count_e_star_from(&data, r, &eps)?;
        let maj = e_star_majorant_from(&data, r, num as f64 / den as f64, cap)?;
        println!("{:>6} {exact:>8} {maj:>12.3e}", rat::display(&eps));
        assert!(maj >= exact as f64);
    }

    // pairs (x, y) with y tangent at x: the quantity the shell bound feeds
    println!("\ntangent pairs on the full ball, |x| <= 8:");
    for y_bound in [2.0, 4.0, 8.0] {
        let pairs = count_tangent_pairs(&f, 8.0, y_bound, false, cap)?;
        let prim = count_tangent_pairs(&f, 8.0, y_bound, true, cap)?;
        println!("  |y| <= {y_bound}: {pairs} pairs ({prim} with x primitive)");
    }
    Ok(())
}
