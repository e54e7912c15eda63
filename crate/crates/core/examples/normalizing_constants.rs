//! Builds a small normalizing-constant table and queries it.
//!
//! For two points the constant has a closed form, which makes a handy check.

use strauss_scr::norm_const::{a_grid, build_table, BuildOptions};
use strauss_scr::{Domain, GridSpec, NormConstTable};

fn main() -> strauss_scr::Result<()> {
    let domain = Domain::square(20.0)?;
    let grid = GridSpec {
        a_grid: a_grid(3.0, 31),
        b_grid: vec![3.0, 5.0],
        n_grid: vec![2, 5, 10, 20],
    };
    let opts = BuildOptions { n_samples: 2000, burn_in: 5, seed: 1, degree: 10 };
    let table = build_table(&grid, &domain, &opts)?;

    // P(two uniform points are closer than b) for a square, b <= side
    let close = |b: f64| {
        let t: f64 = b / 20.0;
        std::f64::consts::PI * t * t - 8.0 / 3.0 * t.powi(3) + 0.5 * t.powi(4)
    };
    println!("   b    a    log c_2 (table)   log c_2 (exact)");
    for b in [3.0, 5.0] {
        for a in [0.0f64, 0.5, 1.0, 2.0, 3.0] {
            let p = close(b);
            let exact = (domain.area().powi(2) * ((1.0 - p) + p * (-a).exp())).ln();
            println!("{b:>4} {a:>4}   {:>15.6}   {exact:>15.6}", table.log_c(a, b, 2)?);
        }
    }

    println!("\nlog c_n(a = 1, b = 5) - n log|D|:");
    for n in [5, 10, 20] {
        let excess = table.log_c(1.0, 5.0, n)? - n as f64 * domain.area().ln();
        println!("  n = {n:>2}: {excess:.4}");
    }

    let path = std::env::temp_dir().join("scr-example-table.bin");
    table.save(&path)?;
    let back = NormConstTable::load(&path)?;
    assert_eq!(back.log_c(1.3, 3.0, 10)?, table.log_c(1.3, 3.0, 10)?);
    println!("\nsaved to {}", path.display());
    Ok(())
}
