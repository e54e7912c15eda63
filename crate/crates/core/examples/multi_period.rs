//! Multi-period data: members may be absent from some primary periods.

use strauss_scr::simstudy::{generate_dataset, PeriodDesign, SimDesign};
use strauss_scr::{run_chain, ChainConfig, Model, Priors};

fn main() -> strauss_scr::Result<()> {
    let design = SimDesign {
        n_true: 60,
        n_max: 100,
        trap_rows: 8,
        trap_cols: 8,
        periods: Some(PeriodDesign { block_sizes: vec![5, 4, 4, 4], pi2: 0.8 }),
        ..SimDesign::default()
    };
    let (data, truth) = generate_dataset(&design, 0)?;
    let presence = truth.presence.as_ref().unwrap();
    let present = presence.iter().take(truth.n_true).flatten().filter(|p| **p).count();
    println!(
        "observed {} of {}; realized presence rate {:.3}",
        data.n_observed(),
        truth.n_true,
        present as f64 / (truth.n_true * 4) as f64
    );

    let priors = Priors { n_max: design.n_max, ..Priors::default() };
    let cfg = ChainConfig { model: Model::Independence, iterations: 3000, burn_in: 1000, seed: 2, ..ChainConfig::default() };
    let out = run_chain(&data, &design.traps()?, &design.domain()?, &priors, None, &cfg)?;
    for p in out.summary() {
        println!("{:>7}: mean {:.3}, 90% interval ({:.3}, {:.3})", p.name, p.mean, p.q05, p.q95);
    }
    Ok(())
}
