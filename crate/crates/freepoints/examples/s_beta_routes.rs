//! The linearized exponential sum S(beta) at a point, evaluated two ways:
//! the truncated lattice sum and the Poisson product form. The certified
//! agreement bound covers their difference.

use freepoints::circle::s_beta;
use freepoints::forms::Form;
use freepoints::Budget;

fn main() -> freepoints::Result<()> {
    let f = Form::diagonal(3, &[1, 1, 1, 1])?;
    let x = [1i128, -1, 2, -2];
    let budget = Budget::default();
    let tol = 1e-9;

    println!("S(beta) at x = {x:?}, window Y = 12:");
    println!(
        "{:>10} {:>16} {:>16} {:>12} {:>12}",
        "beta", "direct", "poisson form", "difference", "certified"
    );
    for beta in [0.0, 1.0 / 3.0, 1.0 / 3.0 + 0.002, 1.0 / 3.0 + 0.005, 0.123456] {
        let s = s_beta(&f, &x, beta, 12.0, tol, &budget)?;
        let diff = (s.direct - s.poisson_form).abs();
        println!(
            "{beta:>10.6} {:>16.6} {:>16.6} {diff:>12.3e} {:>12.3e}",
            s.direct, s.poisson_form, s.agreement_bound
        );
        assert!(diff <= s.agreement_bound);
    }

    // near a rational a/q with q | gcd(grad f(x)) the sum peaks: the
    // gradient phases all sit close to integers
    let g = f.gradient(&x)?;
    println!("\ngradient {g:?}: S is large at multiples of 1/3, small off them");
    Ok(())
}
