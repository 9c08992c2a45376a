use std::path::Path;
use std::process::{Command, Output};

use dicke_cli::record::{read_table, Cell};

fn dicke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicke"))
        .args(args)
        .env_remove("DICKE_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn critical_to_stdout() {
    let out = dicke(&["critical", "--g1", "2", "--g2", "0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("command,index,omega0,Omega,g1,g2,lambda,n_atoms,beta,"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("critical,0,"));
    // β_c = 4·artanh(1/4).
    assert!(row.contains("1.0216512475319814e0"), "{row}");
}

#[test]
fn invalid_parameters_exit_2() {
    let out = dicke(&["critical", "--omega0", "-1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega0"));
    assert_eq!(code(&dicke(&["spectrum", "--sweep", "g1=0:1"])), 2);
    assert_eq!(code(&dicke(&["exactdiag", "--sweep", "g1=0:1:3", "--sweep", "g2=0:1:3", "--sweep", "g=0:1:3"])), 2);
    assert_eq!(code(&dicke(&["critical", "--config", "/nonexistent/dicke.toml"])), 2);
}

#[test]
fn truncation_cap_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ed.csv");
    let run = dicke(&["exactdiag", "--g1", "1", "--g2", "1", "--n-atoms", "4", "--n-max", "2", "--out", path(&out)]);
    assert_eq!(code(&run), 4);
    let table = read_table(&out).unwrap();
    let k = table.column("status").unwrap();
    assert_eq!(table.rows[0][k], Cell::Text("truncation-capped".into()));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "command = \"critical\"\nomega0 = 2.0\nOmega = 1.0\ng1 = 3.0\nsweep = \"g2=0:1:3\"\n").unwrap();
    let out = dir.path().join("c.csv");
    let run = dicke(&["critical", "--config", path(&cfg), "--g1", "4", "--out", path(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let table = read_table(&out).unwrap();
    assert_eq!(table.rows.len(), 3);
    let (o0, g1, g2) = (table.column("omega0").unwrap(), table.column("g1").unwrap(), table.column("g2").unwrap());
    for (i, row) in table.rows.iter().enumerate() {
        assert_eq!(row[o0], Cell::Num(2.0));
        assert_eq!(row[g1], Cell::Num(4.0));
        assert_eq!(row[g2], Cell::Num(0.5 * i as f64));
    }

    // A config written for another command is refused.
    assert_eq!(code(&dicke(&["spectrum", "--config", path(&cfg)])), 2);
    std::fs::write(&cfg, "omega0 = 1.0\ncolour = 3\n").unwrap();
    assert_eq!(code(&dicke(&["critical", "--config", path(&cfg)])), 2);
}

#[test]
fn plotdata_reads_csv_and_json_alike() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = (dir.path().join("s.csv"), dir.path().join("s.jsonl"));
    let sweep = ["critical", "--sweep", "g1=0.5:3:6", "--sweep", "g2=0:1:4"];
    for (file, format) in [(&csv, "csv"), (&json, "json")] {
        let mut args = sweep.to_vec();
        args.extend(["--format", format, "--out", path(file)]);
        assert_eq!(code(&dicke(&args)), 0);
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&dicke(&["plotdata", path(&csv), "--out", path(&a)])), 0);
    assert_eq!(code(&dicke(&["plotdata", path(&json), "--out", path(&b)])), 0);
    let dat = |p: &Path| std::fs::read_to_string(p.with_extension("dat")).unwrap();
    assert_eq!(dat(&a), dat(&b));
    assert!(dat(&a).starts_with("# critical:"));
    let svg = std::fs::read_to_string(a.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn plotdata_rejects_mixed_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (c, s) = (dir.path().join("c.csv"), dir.path().join("s.csv"));
    assert_eq!(code(&dicke(&["critical", "--sweep", "g1=1:2:3", "--out", path(&c)])), 0);
    assert_eq!(code(&dicke(&["spectrum", "--sweep", "g1=1:2:3", "--out", path(&s)])), 0);
    let prefix = dir.path().join("p");
    assert_eq!(code(&dicke(&["plotdata", path(&c), path(&s), "--out", path(&prefix)])), 2);
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&dicke(&["plotdata", path(&empty), "--out", path(&prefix)])), 2);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("e{workers}.csv"));
        let run = dicke(&["entropy", "--sweep", "g=0:1:9", "--n-atoms", "4", "--workers", workers, "--out", path(&out)]);
        assert_eq!(code(&run), 0);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
