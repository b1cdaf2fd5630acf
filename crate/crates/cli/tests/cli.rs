use std::path::Path;
use std::process::{Command, Output};

fn tailfair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailfair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SWEEP: &str =
    "dist.p=0.2\ndist.k=10\ndist.c=0.5\ndist.m=500\nsweep.var=eps\nsweep.grid=0.1,1,inf\n";

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let out = dir.path().join("rows.csv");
    let o = tailfair(&[
        "sweep",
        "--config",
        &cfg,
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert!(lines[1].starts_with("value,eps,eta,c,n_minority,m,"));
    assert!(lines[1].ends_with(",wall_ms"));
    assert_eq!(lines.len(), 5);
    let width = lines[1].split(',').count();
    assert!(lines[2..].iter().all(|l| l.split(',').count() == width));
    let rows = tailfair::experiment::read_csv(text.as_bytes()).unwrap();
    assert!(rows.iter().all(|r| r.m == 500));
}

#[test]
fn sweep_to_stdout_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let run = || {
        let o = tailfair(&["sweep", "--config", &cfg, "--trials", "3", "--seed", "9"]);
        assert!(o.status.success());
        let mut rows = tailfair::experiment::read_csv(&o.stdout[..]).unwrap();
        rows.iter_mut().for_each(|r| r.wall_ms = 0.0);
        rows
    };
    assert_eq!(run(), run());
}

#[test]
fn sweep_renders_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let o = tailfair(&[
        "sweep", "--config", &cfg, "--trials", "2", "--format", "svg",
    ]);
    assert!(o.status.success());
    let svg = stdout(&o);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn bounds_prints_tables() {
    let o = tailfair(&["bounds", "s0", "eps=0.1", "delta=1e-3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains('6'));

    let o = tailfair(&["bounds", "thm1", "p=0.26", "c=10", "c1=0.1", "c2=0.6896"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0.0266") && text.contains("0.497"), "{text}");

    let o = tailfair(&["bounds", "lemma2", "l=4", "eta=0.475"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.contains("literal_lower") && text.contains("0.3517878"),
        "{text}"
    );
}

#[test]
fn gensynth_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dist.p=0.2\ndist.k=10\ndist.c=0.5\ndist.m=200\n",
    );
    let o = tailfair(&["gensynth", "--config", &cfg, "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("f0,") && header.ends_with("label,group,cluster"));
    assert_eq!(lines.count(), 200);
}

#[test]
fn verify_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dist.k=10\ndist.c=1\ndist.m=1000\nmech.eps=0.1\n",
    );
    let o = tailfair(&["verify", "--config", &cfg, "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("lemma2-sandwich"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dist.p=0.2\nnot.a.key=1\n");
    let o = tailfair(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    // sweep without a grid
    let cfg = write_config(dir.path(), "dist.p=0.2\n");
    assert_eq!(
        tailfair(&["sweep", "--config", &cfg]).status.code(),
        Some(2)
    );

    assert_eq!(tailfair(&["bounds", "nope"]).status.code(), Some(2));
    assert_eq!(
        tailfair(&["bounds", "s0", "delta=0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(tailfair(&["bounds", "s0", "eps=x"]).status.code(), Some(2));
}
