//! Thinning a Strauss process by a habitat covariate.

use strauss_scr::rng::stream_from_seed;
use strauss_scr::thinning::{simulate_thinned_process, thinning_prob, FnField, ThinningParams};
use strauss_scr::{Domain, Point, StraussParams};

fn main() -> strauss_scr::Result<()> {
    let domain = Domain::square(100.0)?;
    // intercept plus a west-east habitat gradient in [-1, 1]
    let field = FnField::new(2, |p: Point| vec![1.0, p.x / 50.0 - 1.0]);
    let beta = ThinningParams::new(vec![0.5, 2.0])?;
    for x in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let p = thinning_prob(&[1.0, x / 50.0 - 1.0], &beta)?;
        println!("retention probability at x = {x:>5}: {p:.3}");
    }

    let mut rng = stream_from_seed(3);
    let (kept, removed) =
        simulate_thinned_process(200, StraussParams::new(2.0, 5.0)?, &field, &beta, &domain, &mut rng)?;
    let east = kept.points.iter().filter(|p| p.x > 50.0).count();
    println!(
        "retained {} of 200 ({} removed); {east} retained points in the eastern half",
        kept.len(),
        removed.len()
    );
    Ok(())
}
