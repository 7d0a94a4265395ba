use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn symlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symlab"))
        .args(args)
        .env_remove("SYMLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn sign_statistic_of_balanced_sample_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.txt", "-1\n2\n3\n-4\n");
    let out = symlab(&["test", &data, "--stat", "S", "--alpha", "0", "--reps", "200", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["statistic"].as_f64(), Some(0.0));
    assert_eq!(v["manifest"]["seed"].as_u64(), Some(20_261_016));
    let p = v["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn wilcoxon_on_three_points() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.txt", "# header comment\n1\n2  # inline\n\n3\n");
    let out = symlab(&["test", &data, "--stat", "W", "--reps", "200", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let w = json(&out)["statistic"].as_f64().unwrap();
    assert!((w + 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn csv_column_by_name_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.csv", "id,value\na,-1\nb,2\nc,3\nd,-4\n");
    let by_name = symlab(&["test", &data, "--col", "value", "--stat", "S", "--reps", "200", "--json"]);
    assert_eq!(by_name.status.code(), Some(0));
    assert_eq!(json(&by_name)["n"].as_u64(), Some(4));
    let headless = write(dir.path(), "y.csv", "a,-1\nb,2\nc,3\n");
    let by_pos = symlab(&["test", &headless, "--col", "1", "--stat", "S", "--reps", "200", "--json"]);
    assert_eq!(json(&by_pos)["n"].as_u64(), Some(3));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.txt", "0.3\n-1.2\n2.5\n0.1\n");
    let bad = write(dir.path(), "bad.txt", "1\nnot-a-number\n");
    let short = write(dir.path(), "short.txt", "1\n");
    let missing = dir.path().join("missing.txt").display().to_string();

    assert_eq!(symlab(&["test", &good, "--stat", "CM", "--null", "cauchy"]).status.code(), Some(3));
    assert_eq!(symlab(&["test", &bad, "--stat", "S"]).status.code(), Some(2));
    assert_eq!(symlab(&["test", &short, "--stat", "W"]).status.code(), Some(2));
    assert_eq!(symlab(&["test", &missing, "--stat", "S"]).status.code(), Some(2));
    assert_eq!(symlab(&["test", &good, "--stat", "XYZ"]).status.code(), Some(2));
    assert_eq!(symlab(&["index", "--null", "cauchy", "--tests", "CM,SQRT_B1", "--grid", "3"]).status.code(), Some(3));
    assert_eq!(symlab(&["index", "--null", "cauchy", "--tests", "CM,W", "--grid", "3"]).status.code(), Some(0));
}

#[test]
fn index_csv_round_trip_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("idx.csv");
    let out = symlab(&[
        "index", "--null", "logistic", "--alt", "fs", "--tests", "BH_I,MO_I_1,W", "--grid", "11", "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let read = |name: &str| -> Vec<(f64, f64)> {
        let mut r = csv::Reader::from_path(dir.path().join(name)).unwrap();
        r.records()
            .map(|row| {
                let row = row.unwrap();
                (row[0].parse().unwrap(), row[1].parse().unwrap())
            })
            .collect()
    };
    let bh = read("idx.BH_I.csv");
    let mo = read("idx.MO_I_1.csv");
    assert_eq!(bh.len(), 11);
    assert_eq!(bh.first().unwrap().0, 0.0);
    assert_eq!(bh.last().unwrap().0, 0.5);
    for ((a1, i1), (a2, i2)) in bh.iter().zip(&mo) {
        assert_eq!(a1, a2);
        assert!((i1 - i2).abs() <= 1e-12 * i1.abs().max(1e-300), "{a1}: {i1} vs {i2}");
    }

    let long = fs::read_to_string(&out_path).unwrap();
    assert_eq!(long.lines().count(), 1 + 3 * 11);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("idx.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "index");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 5);

    // values survive the text round trip to 12 significant digits
    let lib = symlab::efficiency::index_curve(
        symlab::StatKind::W,
        &symlab::AlternativeFamily::new(symlab::AltKind::FernandezSteel, symlab::SymmetricNull::Logistic),
        &symlab::efficiency::alpha_grid(11),
    )
    .unwrap();
    for ((_, written), exact) in read("idx.W.csv").iter().zip(&lib.index) {
        assert!((written - exact).abs() <= 1e-12 * exact.abs());
    }
}

#[test]
fn variance_over_t_peaks_at_zero_for_light_trimming() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ks.csv");
    let out = symlab(&[
        "variance", "--stat", "KS", "--alpha", "0.1", "--over-t", "--nulls", "normal", "--t-points", "41", "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<(f64, f64)> = r
        .records()
        .map(|row| {
            let row = row.unwrap();
            (row[0].parse().unwrap(), row[1].parse().unwrap())
        })
        .collect();
    let best = rows.iter().cloned().fold((f64::NAN, f64::NEG_INFINITY), |b, r| if r.1 > b.1 { r } else { b });
    assert_eq!(best.0, 0.0);
}

#[test]
fn variance_grid_leaves_not_applicable_cells_empty() {
    let out = symlab(&["variance", "--stat", "CM", "--grid", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,normal,logistic,cauchy"));
    for line in lines {
        assert!(line.ends_with(','), "{line}");
    }
    assert_eq!(symlab(&["variance", "--stat", "CM", "--nulls", "cauchy"]).status.code(), Some(3));
}

#[test]
fn thread_count_does_not_change_p_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.txt", "0.4\n-0.2\n1.7\n0.9\n-0.6\n2.2\n0.1\n");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_symlab"))
            .args(["test", &data, "--stat", "NA_K(2)", "--alpha", "0.2", "--reps", "500", "--json"])
            .env("SYMLAB_THREADS", threads)
            .output()
            .unwrap();
        let v = json(&out);
        (v["p_value"].as_f64().unwrap(), v["critical_value"].as_f64().unwrap())
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn validate_reports_every_criterion() {
    let out = symlab(&["validate", "--suite", "quick", "--json"]);
    let v = json(&out);
    let criteria = v["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 10);
    let all_pass = criteria.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
}
