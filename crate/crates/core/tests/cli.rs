use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ringtumble::harness::read_csv;

fn ringtumble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringtumble")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const CIRCLE: &str = "signal.b0 = 0.25464790894703254\ninit.psi_dot = 0.2\nduration = 0.4\noutput.dt = 0.01\n";

#[test]
fn oversized_amplitude_is_rejected_with_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "oversized.conf", "signal.b_prime = 0.2\n");
    let out = ringtumble(&["rom", "run", "-c", &cfg, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("4·(b0 + b') = 2 < P = 1.6"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.conf", "slope_deg = 10\nslope = 3\n");
    let out = ringtumble(&["highfi", "run", "-c", &cfg, "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn default_scenario_exits_on_contact_loss_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.conf");
    let out_dir = dir.path().join("out");
    let out = ringtumble(&["rom", "run", "-c", cfg, "-o", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("rom.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "contact_loss");
    let t = meta["contact_loss_t"].as_f64().unwrap();
    let tr = read_csv(&out_dir.join("rom.csv")).unwrap();
    assert_eq!(*tr.times().last().unwrap(), t);
}

#[test]
fn run_compare_and_rerun_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "circle.conf", CIRCLE);
    let run = |tag: &str| {
        let out = dir.path().join(tag);
        let o = out.to_str().unwrap();
        assert!(ringtumble(&["rom", "run", "-c", &cfg, "-o", o]).status.success());
        assert!(ringtumble(&["highfi", "run", "-c", &cfg, "-o", o]).status.success());
        let cmp = out.join("cmp");
        let status = ringtumble(&[
            "compare",
            out.join("rom.csv").to_str().unwrap(),
            out.join("highfi.csv").to_str().unwrap(),
            "-o",
            cmp.to_str().unwrap(),
        ])
        .status;
        assert_eq!(status.code(), Some(0));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let cmp = a.join("cmp");
    assert!(cmp.join("report.json").is_file() && cmp.join("report.txt").is_file());
    let svg = fs::read_to_string(cmp.join("heading_deg.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(fs::read_dir(&cmp).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "svg").count(), 22);
    for f in ["rom.csv", "highfi.csv", "rom.json", "cmp/report.json", "cmp/report.txt", "cmp/heading_deg.svg", "cmp/f_n.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.conf", "duration = 0.2\nsignal.t0 = 0.1\ncascade.contact_event = false\n");
    let out = dir.path().join("sweep");
    let res = ringtumble(&[
        "sweep",
        "-c",
        &cfg,
        "--param",
        "signal.b_prime",
        "--values",
        "0.02,0.04,0.2",
        "-o",
        out.to_str().unwrap(),
    ]);
    // The last value is infeasible.
    assert_eq!(res.status.code(), Some(2));
    for v in ["0.02", "0.04"] {
        let tr = read_csv(&out.join(format!("signal.b_prime={v}/rom.csv"))).unwrap();
        assert_eq!(tr.len(), 101);
    }
    let peak = |v: &str| {
        let tr = read_csv(&out.join(format!("signal.b_prime={v}/rom.csv"))).unwrap();
        tr.channel("b").unwrap().into_iter().fold(0.0, f64::max)
    };
    assert!((peak("0.04") - peak("0.02") - 0.02).abs() < 1e-6);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let values: Vec<&str> = summary.as_array().unwrap().iter().map(|o| o["value"].as_str().unwrap()).collect();
    assert_eq!(values, ["0.02", "0.04", "0.2"]);
    assert_eq!(summary[2]["runs"][0]["exit_code"], 2);
}
