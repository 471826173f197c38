use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn iotnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iotnet"))
        .env_remove("IOTNET_OUT_DIR")
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const FLOWS: &str = "\
period,payer,payee,value,count
2019-01,01110,10110,100,4
2019-02,10110,47110,250.5,10
2019-03,47110,01110,80,2
";

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn build_writes_matrix_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let flows = write(dir.path(), "flows.csv", FLOWS);
    let out = iotnet(dir.path(), &["build", "--flows", &flows, "--span", "2019", "--division-concordance"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let matrix = fs::read_to_string(dir.path().join("build_2019_value.json")).unwrap();
    assert!(matrix.contains("\"C10\""));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("build_2019_value.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "build");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["parameters"]["span"], "2019");
}

#[test]
fn bad_concordance_row_is_an_input_error_naming_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let flows = write(dir.path(), "flows.csv", FLOWS);
    let conc = write(dir.path(), "conc.csv", "sic_prefix,cpa_code\n01,A01\n10,C10,extra\n");
    let out = iotnet(dir.path(), &["build", "--flows", &flows, "--concordance", &conc, "--span", "2019"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn malformed_flow_value_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let flows = write(dir.path(), "flows.csv", "period,payer,payee,value,count\n2019-01,01110,10110,abc,1\n");
    let out = iotnet(dir.path(), &["build", "--flows", &flows, "--span", "2019"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ParseError at line 2"), "{}", stderr(&out));
}

#[test]
fn span_without_records_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let flows = write(dir.path(), "flows.csv", FLOWS);
    let out = iotnet(dir.path(), &["build", "--flows", &flows, "--span", "2015"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"));
    assert!(dir.path().join("build_2015_value.json").exists());
}

#[test]
fn identity_network_has_uniform_influence() {
    let dir = tempfile::tempdir().unwrap();
    let n = 4;
    let mut flows = String::from("period,payer,payee,value,count\n");
    for k in 0..n {
        flows.push_str(&format!("2019-01,{0},{0},{1},1\n", 10_000 + k, 5 * (k + 1)));
    }
    let flows = write(dir.path(), "flows.csv", &flows);
    assert!(iotnet(dir.path(), &["build", "--flows", &flows, "--span", "2019-01", "--out", "m.json"]).status.success());
    let m = dir.path().join("m.json");
    let out = iotnet(dir.path(), &["centrality", "--matrix", m.to_str().unwrap(), "--alpha-l", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("centrality_alpha-l0.5_threshold0.csv")).unwrap();
    let values: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(values, ["0.25"; 4]);
}

#[test]
fn too_few_bootstrap_reps_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let values = write(dir.path(), "v.csv", &(1..50).fold(String::from("value\n"), |s, k| s + &format!("{k}\n")));
    let out = iotnet(dir.path(), &["plfit", "--values", &values, "--reps", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("UsageError"));
}

#[test]
fn unknown_flag_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(iotnet(dir.path(), &["stats", "--matrix", "m.json", "--frobnicate"]).status.code(), Some(64));
    assert_eq!(iotnet(dir.path(), &["nonsense"]).status.code(), Some(64));
    assert_eq!(iotnet(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn seeded_synth_is_byte_identical_and_unseeded_records_its_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(iotnet(d.path(), &["synth", "--seed", "7", "--n", "30", "--density", "0.2", "--months", "24"])
            .status
            .success());
    }
    let name = "synth_seed7_n30.csv";
    assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());

    let c = tempfile::tempdir().unwrap();
    assert!(iotnet(c.path(), &["synth", "--n", "30", "--density", "0.2", "--months", "24"]).status.success());
    let manifest = fs::read_dir(c.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().ends_with(".manifest.json"))
        .unwrap();
    let json: serde_json::Value = serde_json::from_slice(&fs::read(manifest).unwrap()).unwrap();
    let seed = json["seed"].as_u64().unwrap();
    assert!(c.path().join(format!("synth_seed{seed}_n30.csv")).exists());
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_iotnet"))
        .env("IOTNET_OUT_DIR", dir.path())
        .args(["synth", "--seed", "1", "--n", "20", "--density", "0.2", "--months", "24"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("synth_seed1_n20.csv").exists());
}

#[test]
fn analysis_chain_on_synthetic_flows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(iotnet(d, &["synth", "--seed", "5", "--n", "60", "--density", "0.1", "--months", "36"]).status.success());
    let flows = d.join("synth_seed5_n60.csv");
    let flows = flows.to_str().unwrap();
    for (year, source) in [("2016", "value"), ("2017", "ixi")] {
        let out = format!("{year}.json");
        assert!(iotnet(d, &["build", "--flows", flows, "--span", year, "--source", source, "--out", &out])
            .status
            .success());
    }
    let (a, b) = (d.join("2016.json"), d.join("2017.json"));
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());

    let out = iotnet(d, &["stats", "--matrix", a, "--threshold", "0", "--threshold", "0.05"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stats = fs::read_to_string(d.join("stats_by-input_threshold0-0.05.csv")).unwrap();
    assert_eq!(stats.lines().count(), 3);

    assert!(iotnet(d, &["correlate", "edges", "--matrix", a, "--matrix", b]).status.success());
    assert!(iotnet(d, &["correlate", "industry", "--matrix", a, "--matrix", b]).status.success());
    let out = iotnet(d, &["correlate", "distance", "--flows", flows, "--max-distance", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let curve = fs::read_to_string(d.join("correlate_distance_threshold0.csv")).unwrap();
    assert!(curve.starts_with("threshold,distance,correlation,n_pairs\n"));

    let out =
        iotnet(d, &["diff", "--a", a, "--b", b, "--metric", "scaled-percentage", "--zero-policy", "keep-one-sided"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(d.join("diff_scaled-percentage_Value-vs-IxI.csv").exists());

    let gdp = (0..36).fold(String::from("date,value\n"), |s, k| {
        s + &format!("{}-{:02},{}\n", 2016 + k / 12, k % 12 + 1, 100.0 + k as f64)
    });
    let gdp = write(d, "gdp.csv", &gdp);
    let spec = format!("gdp={gdp}");
    let out = iotnet(d, &["macro", "--flows", flows, "--monthly", &spec, "--share-year", "2017"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(d.join("macro_full.csv")).unwrap();
    assert!(table.starts_with("panel,series,gdp\nshare,Share in 2017,"));
    assert_eq!(table.lines().count(), 14);
}
