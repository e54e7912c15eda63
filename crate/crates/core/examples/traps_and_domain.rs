//! Trap arrays, study areas and the CSV layout used by the CLI.

use strauss_scr::{Domain, Point, TrapArray};

fn main() -> strauss_scr::Result<()> {
    // 12 x 16 grid with 7 m spacing, as in a typical small-mammal study
    let traps = TrapArray::grid(12, 16, 7.0, Point::new(0.0, 0.0))?;
    let domain = Domain::around_traps(&traps, 15.0)?;
    println!("{} traps", traps.len());
    println!(
        "domain [{}, {}] x [{}, {}], area {} m^2",
        domain.xmin(),
        domain.xmax(),
        domain.ymin(),
        domain.ymax(),
        domain.area()
    );

    // trap ids are 1-based; 0 is reserved for "not caught"
    let first = traps.get(1).unwrap();
    let last = traps.get(traps.len()).unwrap();
    println!("trap 1 at ({}, {}), trap {} at ({}, {})", first.x, first.y, traps.len(), last.x, last.y);

    let dir = std::env::temp_dir().join("scr-traps-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("traps.csv");
    traps.write_csv(&path)?;
    let back = TrapArray::read_csv(&path)?;
    assert_eq!(back, traps);
    println!("round-tripped through {}", path.display());
    Ok(())
}
