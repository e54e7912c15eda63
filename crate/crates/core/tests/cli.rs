use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"schema_version = 1

[traps]
rows = 3
cols = 3
spacing = 6.0

[domain]
buffer = 8.0

[priors]
n_max = 30
a_max = 2.0
b_support = [3.0]

[table]
a_max = 2.0
a_points = 5
b_grid = [3.0]
n_min = 2
n_max = 30
n_samples = 10
burn_in = 2
degree = 4

[chain]
iterations = 200
burn_in = 50

[design]
n_true = 12
occasions = 4
replicates = 2
iterations = 100
burn_in = 20
"#;

fn scr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scr")).args(args).output().expect("run scr")
}

fn scr_env(args: &[&str], key: &str, value: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scr")).args(args).env(key, value).output().expect("run scr")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("config.toml"), CONFIG).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.dir.path().join(name), text).unwrap();
        self.path(name)
    }

    fn simulate(&self) -> String {
        let o = scr(&["simulate", "--config", &self.path("config.toml"), "--out", &self.path("sim")]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        self.path("sim/captures.csv")
    }

    fn table(&self) -> String {
        let o = scr(&["table", "build", "--config", &self.path("config.toml"), "--out", &self.path("t.bin")]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        self.path("t.bin")
    }
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&scr(&["--help"])), 0);
    assert_eq!(code(&scr(&["fit", "--help"])), 0);
    assert_eq!(code(&scr(&[])), 2);
    assert_eq!(code(&scr(&["fit", "--bogus"])), 2);
    assert_eq!(code(&scr(&["report", "x.csv", "--model", "poisson"])), 2);
}

#[test]
fn strauss_fit_without_table_explains_how_to_build_one() {
    let ws = Workspace::new();
    let captures = ws.simulate();
    let o = scr(&["fit", "--config", &ws.path("config.toml"), "--captures", &captures, "--out", &ws.path("fit")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("scr table build"), "{}", stderr(&o));
    assert!(!Path::new(&ws.path("fit")).exists());
}

#[test]
fn config_errors_exit_with_2() {
    let ws = Workspace::new();
    let bad = ws.write("bad.toml", "schema_version = 1\n[chain]\nitterations = 5\n");
    let o = scr(&["simulate", "--config", &bad, "--out", &ws.path("o")]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("itterations"), "{}", stderr(&o));

    let newer = ws.write("newer.toml", "schema_version = 7\n");
    assert_eq!(code(&scr(&["simulate", "--config", &newer, "--out", &ws.path("o")])), 2);

    let missing = ws.write("missing.toml", "schema_version = 1\n[traps]\nfile = \"nowhere.csv\"\n");
    let o = scr(&["simulate", "--config", &missing, "--out", &ws.path("o")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nowhere.csv"));
}

#[test]
fn malformed_captures_exit_with_2_and_missing_files_with_4() {
    let ws = Workspace::new();
    let cfg = ws.path("config.toml");
    let no_header = ws.write("c1.csv", "1,1,2\n");
    let o = scr(&["fit", "--config", &cfg, "--captures", &no_header, "--model", "independence", "--out", &ws.path("f")]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let bad_trap = ws.write("c2.csv", "individual_id,occasion,trap_id\n1,1,99\n");
    let o = scr(&["fit", "--config", &cfg, "--captures", &bad_trap, "--model", "independence", "--out", &ws.path("f")]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let o = scr(&["fit", "--config", &cfg, "--captures", &ws.path("absent.csv"), "--model", "independence", "--out", &ws.path("f")]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));

    let junk = ws.write("junk.bin", "not a table");
    assert_eq!(code(&scr(&["table", "inspect", &junk])), 4);
}

#[test]
fn table_not_covering_n_max_is_rejected() {
    let ws = Workspace::new();
    let table = ws.table();
    let captures = ws.simulate();
    let wide = ws.write("wide.toml", &CONFIG.replace("n_max = 30\na_max", "n_max = 45\na_max"));
    let o = scr(&["fit", "--config", &wide, "--captures", &captures, "--table", &table, "--out", &ws.path("f")]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("31"), "{}", stderr(&o));
}

#[test]
fn full_workflow_writes_expected_files() {
    let ws = Workspace::new();
    let cfg = ws.path("config.toml");
    let table = ws.table();
    assert!(Path::new(&ws.path("t.bin.manifest.json")).exists());

    let o = scr(&["table", "inspect", &table, "--csv", &ws.path("tcsv")]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("polynomial degree: 4"), "{text}");
    assert!(Path::new(&ws.path("tcsv/coefficients.csv")).exists());
    assert!(Path::new(&ws.path("tcsv/means.csv")).exists());

    let captures = ws.simulate();
    for f in ["truth.csv", "truth.json", "traps.csv", "captures.csv", "manifest.json"] {
        assert!(Path::new(&ws.path(&format!("sim/{f}"))).exists(), "{f}");
    }
    let header = std::fs::read_to_string(&captures).unwrap();
    assert!(header.starts_with("individual_id,occasion,trap_id\n"));

    // output directory from the environment
    let o = scr_env(
        &["fit", "--config", &cfg, "--captures", &captures, "--table", &table],
        "SCR_OUTPUT_DIR",
        Path::new(&ws.path("fit")),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["chain.csv", "summary.md", "summary.csv", "diagnostics.json", "manifest.json"] {
        assert!(Path::new(&ws.path(&format!("fit/{f}"))).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.path("fit/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["chain"], 1);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);

    let o = scr(&["report", &ws.path("fit/chain.csv")]);
    assert_eq!(code(&o), 0);
    let md = String::from_utf8_lossy(&o.stdout);
    assert!(md.starts_with("| Parameter | Posterior mean (SD) |"), "{md}");
    assert_eq!(md.lines().count(), 2 + 6, "{md}");
    assert_eq!(md, std::fs::read_to_string(ws.path("fit/summary.md")).unwrap());

    let o = scr(&["simstudy", "run", "--design", &cfg, "--table", &table, "--out", &ws.path("study")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = std::fs::read_to_string(ws.path("study/report.md")).unwrap();
    assert!(report.contains("Strauss") && report.contains("Cover90"), "{report}");
}
