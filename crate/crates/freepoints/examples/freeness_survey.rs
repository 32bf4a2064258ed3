//! Survey the freeness statistic over all primitive points of bounded
//! height on the Fermat cubic. Points on the obvious lines (p, -p, q, -q)
//! drag the distribution far below the heuristic value (n-d)/(n-1).

use freepoints::forms::Form;
use freepoints::freeness::freeness_survey;
use freepoints::rat;

fn main() -> freepoints::Result<()> {
    let f = Form::diagonal(3, &[1, 1, 1, 1])?;
    let b = 12.0;
    let survey = freeness_survey(&f, b, &rat::ratio(1, 10), 50_000_000)?;

    println!("primitive points with |x| <= {b}: {}", survey.n_points);
    println!(
        "free at eps = 1/10: {}   non-free: {}   below the height floor: {}",
        survey.n_free, survey.n_nonfree, survey.excluded_low_height
    );
    println!(
        "ltilde median {:.4}  mean {:.4}  heuristic (n-d)/(n-1) = {:.4}",
        survey.median, survey.mean, survey.reference
    );

    println!("histogram (bins of width 0.05):");
    let peak = survey.histogram.values().copied().max().unwrap_or(1);
    for (bin, count) in &survey.histogram {
        let lo = *bin as f64 * 0.05;
        let bar = "#".repeat((count * 40 / peak) as usize);
        println!("  [{:+.2}, {:+.2})  {count:4}  {bar}", lo, lo + 0.05);
    }

    // the most and least free points seen
    let mut recs = survey.records.clone();
    recs.sort_by(|a, b| a.freeness.partial_cmp(&b.freeness).unwrap());
    if let (Some(lo), Some(hi)) = (recs.first(), recs.last()) {
        println!("least free: {:?} with ltilde {:.4}", lo.x, lo.freeness);
        println!("most free:  {:?} with ltilde {:.4}", hi.x, hi.freeness);
    }
    Ok(())
}
