use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_forgecot"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const PERFECT: &str = "<think>\nI examine the face region by region, comparing color, illumination, local contrast, sharpness and geometry with the surrounding skin.\nIn the nose I observe: unnatural color transition.\nThese local inconsistencies do not match the rest of the face and are typical of a manipulated patch blended onto a genuine image.\n</think>\n<key>Regions: nose; Clues: unnatural color transition</key>\n<answer>Fake</answer>";

fn perfect_request(id: Value) -> Value {
    json!({
        "id": id,
        "response_text": PERFECT,
        "gt_label": "fake",
        "gt_regions": ["nose"],
        "gt_keywords": ["unnatural color transition"],
        "length_bounds": [48, 320],
    })
}

#[test]
fn prints_config_schema() {
    let out = run(&["--print-config-schema"]);
    assert!(out.status.success());
    let schema: Value = serde_json::from_slice(&out.stdout).unwrap();
    let text = schema.to_string();
    assert!(text.contains("\"seed\"") && text.contains("\"inputs\""));
}

fn write_config(dir: &Path, real: usize, fake: usize) -> std::path::PathBuf {
    let cfg = format!(
        "seed = 11\noutput_dir = \"out\"\n[inputs]\nimages = \"fx/images\"\nlandmarks = \"fx/landmarks\"\n[counts]\nreal = {real}\nfake = {fake}\n"
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn generate_validate_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert!(run(&["synth-fixtures", "--out", fx.to_str().unwrap(), "--count", "3", "--seed", "4"]).status.success());
    let cfg = write_config(dir.path(), 2, 4);
    let out = run(&["generate", "--config", cfg.to_str().unwrap(), "--seed", "5", "--annotate", "template", "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["requested"], json!({"real": 2, "fake": 4}));

    let manifest = dir.path().join("out/manifest.jsonl");
    let header: Value = serde_json::from_str(std::fs::read_to_string(&manifest).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(header["seed"], 5);

    let out = run(&["validate", manifest.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["violations"], json!([]));

    let out = run(&["replay", manifest.to_str().unwrap()]);
    assert!(out.status.success());
    let verdicts: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(verdicts.len(), 6);
    assert!(verdicts.iter().all(|v| v["verdict"] == "identical"));

    std::fs::remove_file(dir.path().join("out/masks/s000002.png")).unwrap();
    let out = run(&["validate", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["violations"][0]["kind"], "missing_file");
    assert_eq!(report["violations"][0]["row"], 4);
}

#[test]
fn missing_config_fails_cleanly() {
    let out = run(&["generate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn stdio_scoring() {
    let mut child = bin()
        .args(["serve", "--stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let group = json!({"id": "g", "items": (0..8).map(|i| perfect_request(json!(i))).collect::<Vec<_>>()});
    {
        let stdin = child.stdin.as_mut().unwrap();
        writeln!(stdin, "{}", perfect_request(json!("a"))).unwrap();
        writeln!(stdin, "not json").unwrap();
        writeln!(stdin, "{group}").unwrap();
    }
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["id"], "a");
    assert_eq!(lines[0]["r_total"].as_f64(), Some(4.0));
    assert!(lines[1]["error"].is_string());
    assert_eq!(lines[2]["advantages"].as_array().unwrap().len(), 8);
    assert!(lines[2]["advantages"].as_array().unwrap().iter().all(|a| a.as_f64() == Some(0.0)));
}

struct Server {
    child: Child,
    base: String,
}

impl Server {
    fn start() -> Server {
        let mut child = bin()
            .args(["serve", "--port", "0"])
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut line).unwrap();
        let base = line.trim().strip_prefix("listening on ").expect("address line").to_string();
        Server { child, base }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[test]
fn http_scoring_endpoints() {
    let server = Server::start();
    let client = reqwest::blocking::Client::new();

    let reply: Value = client.post(format!("{}/score", server.base)).json(&perfect_request(json!(7))).send().unwrap().json().unwrap();
    assert_eq!(reply["id"], 7);
    assert_eq!(reply["r_total"].as_f64(), Some(4.0));
    for k in ["r_acc", "r_format", "r_key", "r_len"] {
        assert_eq!(reply[k].as_f64(), Some(1.0), "{k}");
    }

    let group = json!({"id": "g", "items": (0..8).map(|i| perfect_request(json!(i))).collect::<Vec<_>>()});
    let reply: Value = client.post(format!("{}/score_group", server.base)).json(&group).send().unwrap().json().unwrap();
    assert_eq!(reply["results"].as_array().unwrap().len(), 8);
    assert!(reply["advantages"].as_array().unwrap().iter().all(|a| a.as_f64() == Some(0.0)));

    let bad = json!({"id": 1, "response_text": "x", "gt_label": "fake", "gt_regions": ["elbow"]});
    let resp = client.post(format!("{}/score", server.base)).json(&bad).send().unwrap();
    assert_eq!(resp.status().as_u16(), 400);

    let resp = client.get(format!("{}/healthz", server.base)).send().unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let health: Value = resp.json().unwrap();
    assert!(health["version"].as_str().unwrap().starts_with("forgecot-"));
    assert!(health["uptime_secs"].as_f64().unwrap() >= 0.0);
}

#[cfg(unix)]
#[test]
fn terminate_shuts_down_cleanly() {
    let mut server = Server::start();
    let status = Command::new("kill").args(["-TERM", &server.child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let exit = server.child.wait().unwrap();
    assert!(exit.success(), "{exit:?}");
}

#[test]
fn port_in_use_is_a_bind_error() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = run(&["serve", "--port", &port]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BindError"));
}

#[test]
fn curriculum_sim_reports_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rewards.csv");
    let mut text = String::from("reward\n");
    for i in 0..30 {
        text.push_str(if i % 2 == 0 { "3.5\n" } else { "3.7\n" });
    }
    std::fs::write(&csv, text).unwrap();
    let audit = dir.path().join("audit.csv");
    let out = run(&["curriculum-sim", "--rewards", csv.to_str().unwrap(), "--audit-log", audit.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let batches: Vec<u64> = stdout.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(batches, vec![10, 15, 20, 25, 30]);
    assert_eq!(std::fs::read_to_string(audit).unwrap().lines().count(), 6);
}
