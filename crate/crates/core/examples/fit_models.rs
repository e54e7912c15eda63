//! Fits the Strauss and independence models to one simulated dataset.
//!
//! Uses a reduced table and a short chain so it finishes in well under a minute;
//! `cargo run --release --example fit_models`.

use strauss_scr::norm_const::{a_grid, build_table, BuildOptions};
use strauss_scr::sampler::summary_markdown;
use strauss_scr::simstudy::{generate_dataset, SimDesign};
use strauss_scr::{run_chain, ChainConfig, GridSpec, Model, Priors};

fn main() -> strauss_scr::Result<()> {
    let design = SimDesign { a_true: 2.0, n_true: 60, n_max: 90, trap_rows: 8, trap_cols: 8, ..SimDesign::default() };
    let (data, truth) = generate_dataset(&design, 0)?;
    let traps = design.traps()?;
    let domain = design.domain()?;
    println!("N = {}, observed {}", truth.n_true, data.n_observed());

    let b_support = vec![3.0, 5.0, 7.0];
    let grid = GridSpec {
        a_grid: a_grid(3.0, 16),
        b_grid: b_support.clone(),
        n_grid: (data.n_observed()..=design.n_max).collect(),
    };
    let table = build_table(&grid, &domain, &BuildOptions { n_samples: 60, burn_in: 4, seed: 1, degree: 8 })?;

    let priors = Priors { n_max: design.n_max, b_support, ..Priors::default() };
    for model in [Model::Strauss, Model::Independence] {
        let cfg = ChainConfig { model, iterations: 4000, burn_in: 1000, seed: 3, ..ChainConfig::default() };
        let out = run_chain(&data, &traps, &domain, &priors, Some(&table), &cfg)?;
        println!("\n{model} model, acceptance {:?}", out.acceptance);
        print!("{}", summary_markdown(&out.summary()));
    }
    Ok(())
}
