//! Simulates encounter histories from the multinomial trap model.

use strauss_scr::likelihood::{capture_probs, log_likelihood_individual, simulate_captures};
use strauss_scr::rng::stream_from_seed;
use strauss_scr::strauss::{sample_fixed_n, DEFAULT_BURN_IN};
use strauss_scr::{DetectionParams, Domain, Point, StraussParams, TrapArray};

fn main() -> strauss_scr::Result<()> {
    let traps = TrapArray::grid(6, 6, 7.0, Point::new(0.0, 0.0))?;
    let domain = Domain::around_traps(&traps, 15.0)?;
    let params = DetectionParams::new(0.3, 5.0)?;
    let mut rng = stream_from_seed(7);

    let centers = sample_fixed_n(40, StraussParams::new(2.0, 5.0)?, &domain, DEFAULT_BURN_IN, None, &mut rng)?;
    let members = vec![true; centers.len()];
    let sim = simulate_captures(&centers, &members, params, &traps, 10, &mut rng)?;
    println!("{} of {} individuals caught at least once", sim.history.n_observed(), centers.len());

    // per-occasion cell probabilities of the first caught individual
    let first = sim.observed[0];
    let s = centers.points[first];
    let probs = capture_probs(s, true, params, &traps);
    let (best, p) = probs[..traps.len()]
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (j, &p)| if p > acc.1 { (j, p) } else { acc });
    println!(
        "individual {first}: nearest-trap probability {p:.3} (trap {}), not caught {:.3}",
        best + 1,
        probs[traps.len()]
    );
    let y = &sim.history.records()[0];
    println!("history {:?}", y);
    println!("log-likelihood {:.3}", log_likelihood_individual(y, s, true, params, &traps));

    let path = std::env::temp_dir().join("scr-example-captures.csv");
    sim.history.write_csv(&path)?;
    println!("written to {}", path.display());
    Ok(())
}
