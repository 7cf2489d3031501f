use std::fs;
use std::path::Path;
use std::process::Command;

fn write_room(dir: &Path, spec: &str) -> std::path::PathBuf {
    let scene = serde_json::json!({
        "map": {"resolution": 0.25, "grid": [
            "################",
            "#..............#",
            "#..............#",
            "#.........####.#",
            "#.........####.#",
            "#.........####.#",
            "#..............#",
            "################"]},
        "regions": [
            {"name": "pad", "shape": "circle", "center": [1.125, 1.375], "radius": 0.3},
            {"name": "sealed", "shape": "circle", "center": [3.0, 1.0], "radius": 0.1},
            {"name": "goal", "shape": "circle", "center": [2.125, 0.625], "radius": 0.3}
        ],
        "start": {"x": 0.625, "y": 0.625, "heading": 0},
        "goal_region": "goal",
        "heading_count": 4
    });
    fs::write(dir.join("room.json"), scene.to_string()).unwrap();
    let config = format!(
        r#"{{"scene": "room.json", "spec": "{spec}", "instruction": {{"goal_region": "goal"}},
            "synthesis": {{"episodes": 3000, "learning_rate": 1.0, "seed": 1}},
            "run": {{"t_max": 40, "seed": 2}}, "n_runs": 4, "out": "out"}}"#
    );
    let path = dir.join("experiment.json");
    fs::write(&path, config).unwrap();
    path
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_specshield"))
        .args(args)
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    cli(args).status.code().unwrap()
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["fly"]), 1);
    assert_eq!(code(&["run", "--config", "x.json", "--mode", "sideways"]), 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_room(dir.path(), "F[0,10] pad");
    assert_eq!(
        code(&["run", "--config", cfg.to_str().unwrap(), "--override", "novalue"]),
        1
    );
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn unreachable_region_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_room(dir.path(), "F[0,10] sealed");
    assert_eq!(code(&["synth", "--config", cfg.to_str().unwrap()]), 2);
    let cfg = write_room(dir.path(), "F[0,10] nowhere");
    assert_eq!(code(&["synth", "--config", cfg.to_str().unwrap()]), 2);
}

#[test]
fn missing_files_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&["synth", "--config", dir.path().join("none.json").to_str().unwrap()]),
        3
    );
    let cfg = write_room(dir.path(), "F[0,10] pad");
    assert_eq!(code(&["run", "--config", cfg.to_str().unwrap()]), 3);
    assert_eq!(code(&["plot", "--config", cfg.to_str().unwrap()]), 3);
}

#[test]
fn synth_run_mc_plot_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_room(dir.path(), "F[0,10] pad");
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    let synth = cli(&["synth", "--config", cfg, "--seed", "5"]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    assert!(String::from_utf8_lossy(&synth.stdout).starts_with("gate: pass"));
    assert!(out.join("qtable.bin").is_file());
    assert!(out.join("synth_report.json").is_file());
    for mode in ["shielded", "unmodified"] {
        assert_eq!(code(&["run", "--config", cfg, "--mode", mode]), 0);
        assert_eq!(code(&["mc", "--config", cfg, "--mode", mode]), 0);
        assert_eq!(code(&["plot", "--config", cfg, "--mode", mode]), 0);
        assert!(out.join(format!("run_{mode}.svg")).is_file());
        let csv = fs::read_to_string(out.join(format!("mc_{mode}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 6);
    }
    let summary = fs::read_to_string(out.join("mc_shielded_summary.json")).unwrap();
    assert!(summary.contains("\"stl_rate\": 100.0"), "{summary}");
}
