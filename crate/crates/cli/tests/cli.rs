use std::path::Path;
use std::process::{Command, Output};

fn ergokit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergokit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("ERGOKIT_THREADS", "2")
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run_all = || {
        for exp in ["spectrum", "sff", "otoc", "quench", "entanglement"] {
            let times = if exp == "sff" { "0.1:20:50" } else { "0:20:21" };
            let args = [exp, "--n", "5", "--jr-grid", "1:3:3", "--times", times];
            assert!(ergokit(&args, dir.path()).status.success(), "{exp}");
        }
        let args = ["krylov", "--n", "3", "--operator", "o1,random", "--seeds", "4,5", "--times", "0:50:11"];
        assert!(ergokit(&args, dir.path()).status.success());
        files(dir.path())
    };
    let first = run_all();
    let second = run_all();
    assert!(first.len() > 15);
    assert_eq!(first.len(), second.len());
    for ((na, ca), (nb, cb)) in first.iter().zip(&second) {
        assert_eq!(na, nb);
        assert!(ca == cb, "{na} differs between runs");
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# spectrum sweep\nexperiment = spectrum\nn = 5\njr = 2.0\nformat = csv\n").unwrap();
    let out = dir.path().join("o");
    let r = ergokit(&["--config", cfg.to_str().unwrap(), "--jr", "3"], &out);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let names: Vec<_> = files(&out).into_iter().map(|f| f.0).collect();
    assert_eq!(names, vec!["spectrum_N5_Jr3.csv"]);
    let text = std::fs::read_to_string(out.join("spectrum_N5_Jr3.csv")).unwrap();
    assert_eq!(text.lines().count(), 33);
    assert!(text.starts_with("index,energy\n0,"));
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "experiment = sff\nn = 5\nwindow = wide\n").unwrap();
    let r = ergokit(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("window") && err.contains("line 3"), "{err}");

    let r = ergokit(&["spectrum", "--n", "6"], dir.path());
    assert_eq!(r.status.code(), Some(2));
    let r = ergokit(&["teleport"], dir.path());
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn oversized_run_is_refused_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let r = ergokit(&["krylov", "--n", "9", "--mem-cap-gb", "1"], dir.path());
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("scratch"));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn krylov_summary_reports_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let scratch = tempfile::tempdir().unwrap();
    let r = ergokit(
        &["krylov", "--n", "3", "--jr", "1.5", "--times", "0:100:21", "--scratch", scratch.path().to_str().unwrap()],
        dir.path(),
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("krylov_N3.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    let cell = &json["cells"][0];
    assert!(cell["K"].as_u64().unwrap() >= 50);
    assert!(cell["max_completeness_defect"].as_f64().unwrap() < 1e-8);
    let kc = std::fs::read_to_string(dir.path().join("krylov_N3_Jr1.5_o1_kc.csv")).unwrap();
    let first = kc.lines().nth(1).unwrap();
    let (t, k) = first.split_once(',').unwrap();
    assert_eq!(t.parse::<f64>().unwrap(), 0.0);
    assert!(k.parse::<f64>().unwrap().abs() < 1e-20, "{first}");
}

#[test]
fn verify_bch_passes() {
    let dir = tempfile::tempdir().unwrap();
    let r = ergokit(&["verify-bch", "--n", "5", "--seeds", "1,2,3"], dir.path());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(dir.path().join("verify-bch_N5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}
