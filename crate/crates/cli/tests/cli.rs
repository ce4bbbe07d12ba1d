use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgeharden"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn edgeharden")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn objective(out: &Output) -> f64 {
    stdout(out)
        .lines()
        .find_map(|l| l.strip_prefix("objective"))
        .and_then(|v| v.trim().parse().ok())
        .expect("objective line")
}

fn small_instance(dir: &Path, name: &str) {
    let out = run(
        &["gen", "--seed", "2", "--areas", "2", "--nodes", "6", "--out", name],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    small_instance(dir.path(), "i.txt");
    let solved = run(&["solve", "i.txt", "-f", "rddu", "-o", "s.txt"], dir.path());
    assert_eq!(code(&solved), 0);
    let checked = run(&["verify", "i.txt", "s.txt"], dir.path());
    assert_eq!(code(&checked), 0, "{}", stdout(&checked));
}

#[test]
fn square_encodings_give_the_same_optimum() {
    let dir = tempfile::tempdir().unwrap();
    small_instance(dir.path(), "i.txt");
    let args = ["solve", "i.txt", "-f", "erddu", "--gap", "1e-9"];
    let envelope = run(&args, dir.path());
    let binary = run(&[&args[..], &["--squares", "binary"]].concat(), dir.path());
    assert_eq!(code(&envelope), 0);
    assert_eq!(code(&binary), 0);
    let (a, b) = (objective(&envelope), objective(&binary));
    assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_levels = run(
        &["gen", "--levels", "3", "--dgamma", "0.5", "--out", "x.txt"],
        dir.path(),
    );
    assert_eq!(code(&bad_levels), 2);
    small_instance(dir.path(), "i.txt");
    assert_eq!(code(&run(&["solve", "i.txt", "-f", "nope"], dir.path())), 2);
    assert_eq!(
        code(&run(&["solve", "i.txt", "-f", "nh", "--squares", "cubic"], dir.path())),
        2
    );
}

#[test]
fn unreadable_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["solve", "missing.txt", "-f", "nh"], dir.path())), 3);
    std::fs::write(dir.path().join("junk.txt"), "not an instance\n").unwrap();
    assert_eq!(code(&run(&["solve", "junk.txt", "-f", "nh"], dir.path())), 3);
}

#[test]
fn infeasible_instance_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "gen",
            "--areas",
            "2",
            "--nodes",
            "3",
            "--alpha",
            "0",
            "--delta",
            "0.01",
            "--out",
            "tight.txt",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(code(&run(&["solve", "tight.txt", "-f", "nh"], dir.path())), 4);
}

#[test]
fn export_writes_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    small_instance(dir.path(), "i.txt");
    assert_eq!(
        code(&run(&["export", "i.txt", "-f", "erddu", "-o", "m.mps"], dir.path())),
        0
    );
    assert_eq!(
        code(&run(
            &["export", "i.txt", "-f", "erddu", "--format", "lp", "-o", "m.lp"],
            dir.path()
        )),
        0
    );
    let mps = std::fs::read_to_string(dir.path().join("m.mps")).unwrap();
    assert!(mps.contains("ROWS") && mps.contains("COLUMNS"));
    assert!(dir.path().join("m.lp").exists());
}
