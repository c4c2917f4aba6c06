use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sir")).args(args).env("SIR_LOG", "error").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TINY_FIG3: &str = "[fig3]\ngrid_db = [-4.0, 0.0]\nwindow_samples = 2000\ntrain_windows = 200\neval_windows = 100\ngibbs_sweeps = 40\nburn_in = 20\nem_restarts = 1\nem_iters = 50\n";

const TINY_FIG6: &str = "[fig6]\nu_values = [1, 2]\n[fig6.access]\nn_channels = 4\nspan_len = 10\nlearn_spans = 2\ntest_spans = 2\nhistory_len = 2\n";

#[test]
fn fig3_writes_csv_manifest_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TINY_FIG3);
    let out = dir.path().join("out");
    let o = sir(&["bench", "fig3", "--config", &cfg, "--seeds", "5", "--out", out.to_str().unwrap(), "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("fig3.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("gamma_st_db,method,pc,ci95"));
    assert_eq!(csv.lines().count(), 1 + 2 * 7);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 5);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(fs::read_to_string(out.join("fig3.svg")).unwrap().starts_with("<svg"));

    // the same seeds give byte-identical output
    let again = dir.path().join("again");
    let o = sir(&["bench", "fig3", "--config", &cfg, "--seeds", "0,1,2,3,4", "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(csv, fs::read_to_string(again.join("fig3.csv")).unwrap());
}

#[test]
fn fig6_writes_accuracy_agreement_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TINY_FIG6);
    let out = dir.path().join("out");
    let o = sir(&["bench", "fig6", "--config", &cfg, "--seeds", "20", "--out", out.to_str().unwrap(), "--jobs", "2", "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("fig6.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("u,method,accuracy,ci95"));
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
    assert!(out.join("fig6_agreement.csv").exists());
    assert!(out.join("learning_curves.csv").exists());
    assert!(out.join("traces/trace_u2_gprl.csv").exists());
    let svg = fs::read_to_string(out.join("fig6.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad = write(dir.path(), "bad.toml", "[fig3]\nwindow_size = 3\n");
    let o = sir(&["bench", "fig3", "--config", &bad, "--seeds", "5", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml:2:"));

    let ok = write(dir.path(), "ok.toml", TINY_FIG3);
    let o = sir(&["bench", "fig3", "--config", &ok, "--seeds", "3", "--out", out]);
    assert_eq!(o.status.code(), Some(2), "too few seeds");
    let o = sir(&["bench", "fig3", "--config", &ok, "--seeds", "1,1,2,3,4", "--out", out]);
    assert_eq!(o.status.code(), Some(2), "duplicate seeds");
    let o = sir(&["bench", "fig3", "--config", &ok, "--seeds", "five", "--out", out]);
    assert_eq!(o.status.code(), Some(2), "unparsable seeds");
    let o = sir(&["simulate", "--config", &ok, "--out", out]);
    assert_eq!(o.status.code(), Some(2), "simulate without a scenario");
}

#[test]
fn simulate_then_query_a_map() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/fig5.toml");
    let out = dir.path().join("sim");
    let o = sir(&["simulate", "--config", cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let data = fs::read_to_string(out.join("dataset.csv")).unwrap();
    assert_eq!(data.lines().next(), Some("su_id,seq,x_km,y_km,ch0_energy,ch1_energy,ch2_energy,label_bits"));
    assert_eq!(data.lines().count(), 1 + 9 * 300);

    let map = write(
        dir.path(),
        "map.toml",
        "area_km = [12.0, 12.0]\nn_channels = 3\nstates = [0]\noccupancy = [[0, 0, 0]]\n\n[[circles]]\nchannel = 0\ncenter = [3.0, 7.0]\nradius = 2.0\n",
    );
    let o = sir(&["map", "query", "--map", &map, "--x", "3.5", "--y", "7.0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "idle channels: 1,2");
    let o = sir(&["map", "query", "--map", &map, "--x", "11", "--y", "1"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "idle channels: 0,1,2");
    let o = sir(&["map", "query", "--map", &map, "--x", "-1", "--y", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
