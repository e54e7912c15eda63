//! Fixed-n Strauss patterns: interaction strength against pair counts.

use strauss_scr::rng::stream_from_seed;
use strauss_scr::strauss::{pair_count, sample_fixed_n, DEFAULT_BURN_IN};
use strauss_scr::{Domain, StraussParams};

fn main() -> strauss_scr::Result<()> {
    let domain = Domain::square(100.0)?;
    let (n, b) = (150, 5.0);
    let mut rng = stream_from_seed(42);

    println!("  a   mean pairs within {b} m   min distance");
    for a in [0.0, 0.5, 1.0, 2.0, 3.0, 20.0] {
        let params = StraussParams::new(a, b)?;
        let reps = 50;
        let mut pairs = 0;
        let mut min_d = f64::INFINITY;
        for _ in 0..reps {
            let pattern = sample_fixed_n(n, params, &domain, DEFAULT_BURN_IN, None, &mut rng)?;
            pairs += pair_count(&pattern.points, b);
            min_d = min_d.min(pattern.min_pairwise_distance());
        }
        println!("{a:>4}   {:>10.2}             {min_d:.2}", pairs as f64 / reps as f64);
    }
    Ok(())
}
