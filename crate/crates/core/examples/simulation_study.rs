//! A miniature version of the model-comparison study.
//!
//! Real runs use 20-100 replicates and 10,000+ iterations (`scr simstudy
//! run`); this one shrinks everything to finish quickly in release mode.

use strauss_scr::norm_const::{a_grid, build_table, BuildOptions};
use strauss_scr::simstudy::{report_markdown, run_study, SimDesign, StudyFitConfig};
use strauss_scr::GridSpec;

fn main() -> strauss_scr::Result<()> {
    let base = SimDesign { n_true: 40, n_max: 60, trap_rows: 6, trap_cols: 6, replicates: 6, ..SimDesign::default() };
    let mut fit = StudyFitConfig::with_length(base.n_max, 2000, 500);
    fit.priors.b_support = vec![3.0, 5.0, 7.0];
    let grid = GridSpec {
        a_grid: a_grid(3.0, 16),
        b_grid: fit.priors.b_support.clone(),
        n_grid: (10..=base.n_max).collect(),
    };
    let table = build_table(&grid, &base.domain()?, &BuildOptions { n_samples: 40, burn_in: 3, seed: 1, degree: 8 })?;

    let mut results = Vec::new();
    for a in [0.0, 2.0] {
        results.push(run_study(&SimDesign { a_true: a, ..base.clone() }, &fit, &table)?);
    }
    print!("{}", report_markdown(&results));
    Ok(())
}
