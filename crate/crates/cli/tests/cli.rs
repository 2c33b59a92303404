use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn streamgov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamgov"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

fn toy_directory(root: &Path) -> PathBuf {
    let data = root.join("toy");
    fs::create_dir_all(data.join("flows")).unwrap();
    fs::write(
        data.join("stations.csv"),
        "station_id,name,latitude,longitude,state\n\
         A1,Alpha,-35.1,149.1,ACT\nB2,Bravo,-33.9,151.2,NSW\nC3,Charlie,-37.8,145.0,VIC\n",
    )
    .unwrap();
    let series = [[1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.0], [4.0, 3.0, 2.0, 1.0]];
    for (id, values) in ["A1", "B2", "C3"].iter().zip(series) {
        let mut body = String::from("date,flow\n");
        for (d, v) in values.iter().enumerate() {
            body.push_str(&format!("2001-01-0{},{v}\n", d + 1));
        }
        fs::write(data.join("flows").join(format!("{id}.csv")), body).unwrap();
    }
    data
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.clone(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn temporal_on_toy_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let data = toy_directory(tmp.path());
    let before = snapshot(&data);
    let cfg = write_config(tmp.path(), "data_dir = \"toy\"\n[temporal]\nclusters = 2\n");
    let out = tmp.path().join("out");
    let res = streamgov(&["temporal", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(snapshot(&data), before);

    let text = fs::read_to_string(out.join("temporal_affinity.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("A1,B2,C3"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for i in 0..3 {
        assert_eq!(rows[i][i], 1.0);
    }
    // A1 and B2 have the same trajectory
    assert_eq!(rows[0][1], 1.0);

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("temporal_affinity.json")).unwrap()).unwrap();
    assert_eq!(sidecar["domain"], "temporal");
    assert!((sidecar["nu"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);

    let linkage = fs::read_to_string(out.join("temporal_linkage.csv")).unwrap();
    assert!(linkage.starts_with("step,cluster_a,cluster_b,height,size\n1,0,1,"));
    let clusters = fs::read_to_string(out.join("temporal_clusters.csv")).unwrap();
    assert_eq!(clusters, "station_id,label\nA1,0\nB2,0\nC3,1\n");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "temporal");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let files: Vec<&String> = manifest["files"].as_object().unwrap().keys().collect();
    assert_eq!(
        files,
        ["temporal_affinity.csv", "temporal_affinity.json", "temporal_clusters.csv", "temporal_linkage.csv"]
    );
}

#[test]
fn synth_then_align_recovers_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "data_dir = \"data\"\n[synth]\nn = 8\ndays = 1460\nseed = 4\noffsets = [0, 17, 0, 0, 0, 120, 0, 0]\n",
    );
    let data = tmp.path().join("data");
    let res = streamgov(&["synth", "--config", path_str(&cfg), "--out", path_str(&data)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let out = tmp.path().join("out");
    let res = streamgov(&["align", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let truth: serde_json::Value = serde_json::from_str(&fs::read_to_string(data.join("truth.json")).unwrap()).unwrap();
    let planted: Vec<u64> = truth["offsets"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let recovered: Vec<u64> = fs::read_to_string(out.join("offsets.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(recovered, planted);
    let loaded = streamgov::ingest::load_collection::<f64>(&data, &Default::default()).unwrap();
    let direct = streamgov::alignment::estimate_governing_process(&loaded, &Default::default()).unwrap();
    assert_eq!(recovered, direct.offsets.iter().map(|&o| o as u64).collect::<Vec<_>>());
    for f in ["governing.csv", "offsets_by_state.csv", "loss_history.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn exit_codes_by_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let data = toy_directory(tmp.path());

    let bad = write_config(tmp.path(), "data_dir = \"toy\"\nunknown_key = 3\n");
    assert_eq!(streamgov(&["temporal", "--config", path_str(&bad)]).status.code(), Some(2));

    let missing = tmp.path().join("nope.toml");
    assert_eq!(streamgov(&["temporal", "--config", path_str(&missing)]).status.code(), Some(2));

    // S = 3750 cannot fit in four days: rejected before any computation
    let long = write_config(tmp.path(), "data_dir = \"toy\"\n");
    let res = streamgov(&["spectral", "--config", path_str(&long), "--out", path_str(&tmp.path().join("o1"))]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());

    fs::write(data.join("flows/C3.csv"), "date,flow\n2001-01-01,1\n2001-01-02,-4\n2001-01-03,1\n2001-01-04,1\n").unwrap();
    let res = streamgov(&["ingest-check", "--config", path_str(&long), "--out", path_str(&tmp.path().join("o2"))]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("C3"));

    let inside = data.join("results");
    let res = streamgov(&["ingest-check", "--config", path_str(&long), "--out", path_str(&inside)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!inside.exists());

    assert_eq!(streamgov(&["frobnicate", "--config", path_str(&long)]).status.code(), Some(2));
}

#[test]
fn version_and_help() {
    let v = streamgov(&["--version"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    let h = streamgov(&["--help"]);
    assert!(h.status.success());
    let text = String::from_utf8_lossy(&h.stdout);
    for cmd in ["ingest-check", "optimize-welch", "synth", "all", "--threads"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
