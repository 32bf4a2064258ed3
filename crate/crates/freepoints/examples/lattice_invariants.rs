//! Exact invariants of the gradient-orthogonal lattice of a point on the
//! Fermat cubic: determinant, dual, quotient, successive minima, and the
//! transference products tying them together.

use freepoints::forms::Form;
use freepoints::freeness;
use freepoints::lattice::Lattice;
use freepoints::minima::successive_minima;
use freepoints::rat;
use freepoints::Budget;

fn main() -> freepoints::Result<()> {
    let f = Form::diagonal(3, &[1, 1, 1, 1])?;
    let x = [1i128, -1, 2, -2];
    println!("point x = {x:?} on x1^3 + x2^3 + x3^3 + x4^3, f(x) = {}", f.eval(&x)?);

    let lat = freeness::point_lattice(&f, &x)?;
    let grad = f.gradient(&x)?;
    println!("gradient  {grad:?}");
    println!("rank      {}", lat.rank());
    println!("det^2     {}", rat::display(&lat.determinant_sq()));

    // det(L) det(L*) = 1, visible on the squares
    let dual = lat.dual()?;
    let product = lat.determinant_sq() * dual.determinant_sq();
    println!("dual det^2 {} (product {})", rat::display(&dual.determinant_sq()), product);

    let budget = Budget::default();
    let prof = successive_minima(&lat, &budget)?;
    let dual_prof = successive_minima(&dual, &budget)?;
    println!("minima^2       {:?}", prof.minima_sq.iter().map(rat::display).collect::<Vec<_>>());
    println!("dual minima^2  {:?}", dual_prof.minima_sq.iter().map(rat::display).collect::<Vec<_>>());

    // transference: 1 <= s_k(L) s_{r-k+1}(L*) <= r, checked on squares
    let r = lat.rank();
    for k in 0..r {
        let t = &prof.minima_sq[k] * &dual_prof.minima_sq[r - 1 - k];
        println!(
            "  s_{}(L)^2 s_{}(L*)^2 = {}  (must lie in [1, {}])",
            k + 1,
            r - k,
            rat::display(&t),
            r * r
        );
        assert!(t >= rat::from_int(1) && t <= rat::from_int((r * r) as i128));
    }

    // quotient by a primitive lattice vector drops the rank by one and
    // divides the determinant by the vector's norm in the quotient metric
    let w = &prof.witnesses[0];
    let quot = lat.quotient_mod_vector(w)?;
    println!(
        "quotient by the shortest witness: rank {} det^2 {}",
        quot.rank(),
        rat::display(&quot.determinant_sq())
    );

    // a standard cross-check: the kernel lattice of c has det^2 = |c|^2
    let c = [3i128, 4, 12];
    let k = Lattice::kernel_of_vector(&c)?;
    println!(
        "kernel of {c:?}: det^2 = {} = |c|^2 = {}",
        rat::display(&k.determinant_sq()),
        3 * 3 + 4 * 4 + 12 * 12
    );
    Ok(())
}
