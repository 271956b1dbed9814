use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn hourglass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hourglass"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn values(o: &Output) -> Vec<u64> {
    stdout(o).lines().map(|l| l.parse().unwrap()).collect()
}

#[test]
fn sort_random_1024_streams_without_bubbles() {
    let o = hourglass(&["sort", "--random", "1024", "--width", "8", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = values(&o);
    assert_eq!(out.len(), 1024);
    assert!(out.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(stderr(&o).trim(), "first=10 total=1034 bubbles=0");
}

#[test]
fn sort_file() {
    let path = data("three.txt");
    let o = hourglass(&["sort", "--input", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1\n2\n3\n");
}

#[test]
fn sort_with_indices_and_check() {
    let path = data("four.txt");
    let o = hourglass(&["sort", "--input", path.to_str().unwrap(), "--indices", "--check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1,1\n2,3\n3,0\n4,2\n");
}

#[test]
fn registered_variant_alternates() {
    let o = hourglass(&["sort", "--random", "64", "--variant", "registered"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(values(&o).len(), 64);
    assert!(stderr(&o).trim().ends_with("bubbles=63"), "{}", stderr(&o));
}

#[test]
fn take_and_sink_flags() {
    let o = hourglass(&["sort", "--random", "100", "--take", "5", "--sink", "every:3", "--check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(values(&o).len(), 5);
}

#[test]
fn resources_rows() {
    let o = hourglass(&["resources", "--sizes", "1024", "--widths", "8"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "n,w,lut,reg,carry8,freq,latency\n1024,8,28132,27630,1023,,10+1024\n"
    );

    let o = hourglass(&["resources", "--sizes", "64", "--widths", "32"]);
    assert!(stdout(&o).contains("\n64,32,5482,6270,126,,6+64\n"));

    let o = hourglass(&["resources", "--sizes", "2", "--widths", "8"]);
    let row: Vec<String> = stdout(&o).lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row[3], "36");
}

#[test]
fn resources_default_sweep_has_fifteen_rows() {
    let o = hourglass(&["resources"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 16);
    assert!(stderr(&o).is_empty());
}

#[test]
fn resources_unfitted_width_warns() {
    let o = hourglass(&["resources", "--sizes", "64", "--widths", "12"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\n64,12,,2470,63,,6+64\n"));
    assert!(stderr(&o).contains("width 12"));
}

#[test]
fn golden_trace_n4() {
    let path = data("four.txt");
    let o = hourglass(&["trace", "--input", path.to_str().unwrap(), "--width", "8", "--verbose"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = std::fs::read_to_string(data("golden_n4.jsonl")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn trace_starts_with_empty_root() {
    for n in ["2", "7", "64"] {
        let o = hourglass(&["trace", "--random", n]);
        let first = stdout(&o).lines().next().unwrap().to_string();
        assert!(first.starts_with(r#"{"cycle":0,"root_valid":false,"#), "{first}");
    }
}

#[test]
fn trace_to_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("t{i}.jsonl"))).collect();
    for f in &files {
        let o = hourglass(&[
            "trace", "--random", "50", "--seed", "9", "--sink", "random:0.5", "--verbose", "--out",
            f.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(&files[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&files[1]).unwrap());
}

#[test]
fn gen_heavy_range() {
    let o = hourglass(&["gen", "--n", "8", "--width", "8", "--seed", "0", "--duplicates", "heavy"]);
    assert!(o.status.success());
    let out = values(&o);
    assert_eq!(out.len(), 8);
    assert!(out.iter().all(|&v| v < 2));
}

#[test]
fn gen_is_deterministic_and_feeds_sort() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for f in [&a, &b] {
        let o = hourglass(&["gen", "--n", "300", "--width", "12", "--seed", "4", "--out", f.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = hourglass(&["sort", "--input", a.to_str().unwrap(), "--width", "12", "--check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(values(&o).len(), 300);
}

#[test]
fn gen_zero_is_an_error() {
    let o = hourglass(&["gen", "--n", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_reports_both_variants() {
    let o = hourglass(&["compare", "--random", "64"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["hourglass_total"], 70);
    assert_eq!(v["registered_bubbles"], 63);
    assert_eq!(v["same_output"], true);
}

#[test]
fn dump_topology() {
    let o = hourglass(&["sort", "--random", "6", "--dump-topology"]);
    assert!(o.status.success());
    assert!(stderr(&o).lines().count() > 5);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let wide = dir.path().join("wide.txt");
    std::fs::write(&wide, "1\n300\n").unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1\nx\n").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["sort".into(), "--input".into(), wide.display().to_string(), "--width".into(), "8".into()],
        vec!["sort".into(), "--input".into(), bad.display().to_string()],
        vec!["sort".into(), "--input".into(), dir.path().join("missing").display().to_string()],
        vec!["sort".into(), "--random".into(), "4".into(), "--input".into(), wide.display().to_string()],
        vec!["sort".into(), "--random".into(), "4".into(), "--bogus".into()],
        vec!["sort".into(), "--random".into(), "4".into(), "--sink".into(), "random:2".into()],
        vec!["sort".into(), "--random".into(), "4".into(), "--take".into(), "5".into()],
        vec!["sort".into()],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = hourglass(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).is_empty());
    }
}

#[test]
fn stalled_sink_exits_three() {
    let o = hourglass(&["sort", "--random", "8", "--sink", "random:0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn help_exits_zero() {
    let o = hourglass(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("sort"));
}
