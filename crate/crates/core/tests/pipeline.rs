use qidlab::harness::{run_pipeline, sweep, ExperimentConfig, SweepGrid, SWEEP_COLUMNS};
use qidlab::io::to_json_string;
use serde_json::{json, Value};

fn config(v: Value) -> ExperimentConfig {
    serde_json::from_value(v).unwrap()
}

fn noisy_base() -> Value {
    json!({
        "seed": 5,
        "channel": {"kind": "random-near-identity", "dim": 2, "p": 0.02},
        "block_n": 3,
        "messages": 8,
        "code_kind": "noisy-basis",
        "family": {"size": 1, "count": 4},
        "mc_samples": 100
    })
}

fn rows(csv: &str) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let headers = r.headers().unwrap().clone();
    (headers, r.records().map(Result::unwrap).collect())
}

fn column(headers: &csv::StringRecord, name: &str) -> usize {
    headers.iter().position(|h| h == name).unwrap()
}

#[test]
fn noiseless_basis_run_is_exact() {
    let cfg = config(json!({
        "seed": 1,
        "channel": {"kind": "identity", "dim": 2},
        "block_n": 3,
        "messages": 8,
        "family": {"size": 2, "count": 2},
        "mc_samples": 50
    }));
    let run = run_pipeline(&cfg).unwrap();
    let id = &run.report.id.report;
    assert!(id.lambda1_max <= 1e-12);
    assert!(id.lambda2_max <= 1e-12);
    assert_eq!(run.report.exit_code(), 0);
}

#[test]
fn extended_channel_haar_run_is_reproducible() {
    let cfg = config(json!({
        "seed": 11,
        "channel": {"kind": "extended", "dim_a": 2, "dim_c": 2},
        "block_n": 2,
        "messages": 4,
        "code_kind": "haar",
        "family": {"size": 1, "count": 2},
        "mc_samples": 100
    }));
    let a = run_pipeline(&cfg).unwrap();
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(to_json_string(&a.report).unwrap(), to_json_string(&b.report).unwrap());
    assert_eq!(to_json_string(&a.idcode).unwrap(), to_json_string(&b.idcode).unwrap());
    assert_eq!(a.channel.in_dim(), 4);
    assert_eq!(a.channel.out_dim(), 2);
}

#[test]
fn report_is_recomputable_from_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = noisy_base();
    v["output_dir"] = json!(dir.path());
    let run = run_pipeline(&config(v)).unwrap();
    let code: qidlab::idcode::IdCode = qidlab::io::read_json(dir.path().join("idcode.json")).unwrap();
    let again = qidlab::idcode::verify_id_code(&code).unwrap();
    assert!((again.lambda1_max - run.report.id.report.lambda1_max).abs() <= 1e-7);
    assert!((again.lambda2_max - run.report.id.report.lambda2_max).abs() <= 1e-7);
}

#[test]
fn one_point_grid() {
    let grid: SweepGrid = serde_json::from_value(json!({"base": noisy_base(), "axes": [{"param": "seed", "values": [3]}]})).unwrap();
    let (csv, _) = sweep(&grid, false).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let (headers, _) = rows(&csv);
    assert_eq!(headers.len(), 1 + SWEEP_COLUMNS.len());
}

#[test]
fn three_by_two_grid_is_lexicographic() {
    let grid: SweepGrid = serde_json::from_value(json!({
        "base": noisy_base(),
        "axes": [{"param": "seed", "values": [1, 2, 3]}, {"param": "channel.p", "values": [0.01, 0.02]}]
    }))
    .unwrap();
    let (csv, _) = sweep(&grid, false).unwrap();
    let (_, rows) = rows(&csv);
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[0].to_string(), r[1].to_string())).collect();
    let expected: Vec<(String, String)> = ["1", "2", "3"]
        .iter()
        .flat_map(|s| ["0.01", "0.02"].iter().map(move |p| (s.to_string(), p.to_string())))
        .collect();
    assert_eq!(keys, expected);
    let (again, _) = sweep(&grid, false).unwrap();
    assert_eq!(csv, again);
}

#[test]
fn thresholds_track_delta() {
    let grid: SweepGrid = serde_json::from_value(json!({
        "base": noisy_base(),
        "axes": [{"param": "code_kind", "values": ["basis", "noisy-basis"]}, {"param": "channel.p", "values": [0.0, 0.02, 0.05]}]
    }))
    .unwrap();
    let (csv, _) = sweep(&grid, false).unwrap();
    let (headers, rows) = rows(&csv);
    let (d, t1, t2) = (column(&headers, "delta_out"), column(&headers, "threshold_first"), column(&headers, "threshold_second"));
    let mut triples: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| (r[d].parse().unwrap(), r[t1].parse().unwrap(), r[t2].parse().unwrap()))
        .collect();
    for &(delta, a, b) in &triples {
        assert!((a - 3.0 * delta).abs() < 1e-12);
        assert!((b - 5.0 * delta).abs() < 1e-12);
    }
    triples.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in triples.windows(2) {
        assert!(w[0].1 <= w[1].1 && w[0].2 <= w[1].2);
    }
}
