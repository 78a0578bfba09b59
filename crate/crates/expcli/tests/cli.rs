use std::process::Command;

fn diffrast() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diffrast"))
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = diffrast()
        .args(["cube", "--res", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let out = diffrast().args(["teapot", "--out", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cube_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = diffrast()
        .args(["cube", "--res", "8", "--iters", "30", "--seed", "2", "--snapshot-every", "10", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = dir.path();
    let config: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["resolution"], 8);
    assert_eq!(config["seed"], 2);
    let log = diffrast_cli::io::read_csv(&p.join("log.csv")).unwrap();
    assert_eq!(log.len(), 30);
    let mesh = diffrast_cli::load_obj(&p.join("mesh.obj")).unwrap();
    assert_eq!((mesh.positions.len(), mesh.pos_idx.len()), (8, 12));
    for it in [0, 10, 20] {
        let frame = p.join(format!("frame_{it:06}.png"));
        let img = diffrast_cli::read_png(&frame, true).unwrap();
        assert_eq!((img.width(), img.height()), (8, 8));
    }
}

#[test]
fn pose_run_writes_poses() {
    let dir = tempfile::tempdir().unwrap();
    let out = diffrast()
        .args(["pose", "--mode", "symmetry", "--trials", "2", "--iters", "100", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let poses: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("poses.json")).unwrap()).unwrap();
    assert_eq!(poses.as_array().unwrap().len(), 2);
}
