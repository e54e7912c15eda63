//! Run configs and manifests: what the CLI records for every output.

use std::path::Path;

use strauss_scr::config::RunConfig;
use strauss_scr::manifest::{sha256_hex, RunManifest};

fn main() -> strauss_scr::Result<()> {
    let text = r#"
schema_version = 1

[traps]
rows = 6
cols = 6
spacing = 7.0

[priors]
n_max = 80

[chain]
iterations = 5000
burn_in = 1000
seed = 17

[design]
a_values = [0.0, 2.0]
n_true = 50
"#;
    let config = RunConfig::from_toml_str(text, Path::new("."))?;
    let traps = config.trap_array()?;
    println!("{} traps, domain area {}", traps.len(), config.domain(&traps)?.area());
    for d in config.sim_designs()? {
        println!("design a = {}: N = {}, {} replicates", d.a_true, d.n_max, d.replicates);
    }

    let canonical = config.to_canonical_toml();
    println!("config digest {}", sha256_hex(canonical.as_bytes()));

    let dir = std::env::temp_dir().join("scr-manifest-example");
    std::fs::create_dir_all(&dir)?;
    let out = dir.join("notes.txt");
    std::fs::write(&out, "example output\n")?;
    let mut manifest = RunManifest::new(vec!["example".into()]).with_config(&canonical).seed("chain", config.chain.seed);
    manifest.output(&out)?;
    let path = dir.join("manifest.json");
    manifest.write(&path)?;
    print!("{}", std::fs::read_to_string(&path)?);
    Ok(())
}
