use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use helmpso::mesh::{validate, Mesh};

const QUICK: &str = "[experiment]\nmesh_n = 8\n[pso]\nswarm_size = 12\nmax_iter = 15\n";

fn helmpso(args: &[&str], dir: &Path, config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_helmpso"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn lines(dir: &Path, name: &str) -> Vec<String> {
    fs::read_to_string(dir.join("out").join(name))
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn validate_fem_writes_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = helmpso(&["validate-fem"], dir.path(), "[experiment]\ncase = \"disc\"\n");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = lines(dir.path(), "fem_convergence.csv");
    assert_eq!(rows[0], "n,h,l2_error,ratio");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("16,"));
    assert!(rows[3].starts_with("64,"));
}

#[test]
fn malformed_config_exits_with_2_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = helmpso(&["reconstruct"], dir.path(), "[pso]\nswarmsize = 3\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("swarmsize"));

    let out = helmpso(&["validate-fem"], dir.path(), "[experiment]\nbasis = \"legendre\"\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment.basis"));
}

#[test]
fn numerical_failure_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    // n/4 = 1 is too coarse for the convergence study
    let out = helmpso(&["validate-fem"], dir.path(), "[experiment]\nmesh_n = 4\n");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reconstruct_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = helmpso(&["reconstruct"], dir.path(), QUICK);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trace.csv", "pso_trace.csv", "summary.csv", "timing.txt", "cost.svg", "trace.svg"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let trace = lines(dir.path(), "trace.csv");
    assert_eq!(trace[0], "s,exact,reconstructed,oracle");
    assert_eq!(trace.len(), 1 + 9);
    assert_eq!(lines(dir.path(), "pso_trace.csv").len(), 1 + 16);
    let summary = lines(dir.path(), "summary.csv");
    assert_eq!(summary[0], "key,value");
    for key in ["experiment.alpha", "pso.omega", "noise.level", "final_j", "oracle_j", "relative_error", "evaluations"] {
        assert!(summary.iter().any(|l| l.starts_with(&format!("{key},"))), "{key}");
    }
    assert!(summary.contains(&"evaluations,192".to_string()));
    // 17 significant digits
    let final_j = summary.iter().find(|l| l.starts_with("final_j,")).unwrap();
    let mantissa = final_j.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').len(), 18);
}

#[test]
fn sweep_study_and_comparison_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{QUICK}[sweep]\netas = [1e-5]\n[noise]\nlevels = [0.0, 0.03]\nseeds = [1, 2, 3]\n");
    assert!(helmpso(&["reg-sweep"], dir.path(), &cfg).status.success());
    let sweep = lines(dir.path(), "reg_sweep.csv");
    assert_eq!(sweep[0], "eta,J_final,trace_error");
    assert_eq!(sweep.len(), 2);

    assert!(helmpso(&["noise-study"], dir.path(), &cfg).status.success());
    let study = lines(dir.path(), "noise_study.csv");
    assert_eq!(study[0], "nu,seed,J_final,trace_error");
    assert_eq!(study.len(), 1 + 6);
    assert!(dir.path().join("out/noise_traces.svg").exists());

    assert!(helmpso(&["compare-dn"], dir.path(), &cfg).status.success());
    let cmp = lines(dir.path(), "dn_compare.csv");
    assert_eq!(cmp.len(), 1 + 4);
    let first = fs::read(dir.path().join("out/dn_compare.csv")).unwrap();
    assert!(helmpso(&["compare-dn"], dir.path(), &cfg).status.success());
    assert_eq!(first, fs::read(dir.path().join("out/dn_compare.csv")).unwrap());
}

#[test]
fn exported_mesh_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = helmpso(&["mesh"], dir.path(), "[experiment]\ncase = \"disc\"\nmesh_n = 16\n");
    assert!(out.status.success());
    let text = fs::read(dir.path().join("out/mesh.txt")).unwrap();
    let mesh = Mesh::read_text(text.as_slice()).unwrap();
    assert!(validate(&mesh).is_empty());
    assert_eq!(mesh.boundary_edges.len(), 16);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        helmpso_cli::config::Settings::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 5);
}
