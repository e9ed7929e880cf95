//! Prints difference-measure quantiles split by whether the factor was
//! actually applied, plus how often each factor's captions fire. Useful
//! when retuning caption table thresholds.
//!
//! `cargo run --release --example calibrate_thresholds -- [fakes] [seed]`

use std::collections::BTreeMap;

use forgecot_core::pipeline::{generate_dataset, RunConfig, SampleRecord};
use forgecot_core::synthetic::write_fixture_set;

fn quantiles(v: &mut [f64]) -> String {
    if v.is_empty() {
        return "-".into();
    }
    v.sort_by(f64::total_cmp);
    let p = |q: f64| v[((v.len() - 1) as f64 * q) as usize];
    format!("n={:4} p10={:.4} p50={:.4} p90={:.4} p99={:.4}", v.len(), p(0.1), p(0.5), p(0.9), p(0.99))
}

fn main() {
    let mut args = std::env::args().skip(1);
    let fakes: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    let dir = tempfile::tempdir().expect("temp dir");
    write_fixture_set(&dir.path().join("fx"), 10, 100, 128, 128).expect("fixtures");
    let mut cfg = RunConfig::minimal(dir.path().join("fx/images"), dir.path().join("fx/landmarks"), dir.path().join("out"));
    cfg.seed = seed;
    cfg.counts.fake = fakes;
    let summary = generate_dataset(&cfg).expect("generation");
    println!("produced {} fakes, skipped {}", summary.produced.fake, summary.skipped.len());

    let mut applied: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut absent: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut fired: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut draws: BTreeMap<u32, usize> = BTreeMap::new();
    for line in std::fs::read_to_string(&summary.manifest).expect("manifest").lines().skip(1) {
        let r: SampleRecord = serde_json::from_str(line).expect("row");
        let xi = r.xi.expect("fake rows carry xi");
        *draws.entry(r.draws.unwrap_or(1)).or_default() += 1;
        for per_factor in r.diff_stats.expect("fake rows carry stats").measures.values() {
            for (f, v) in per_factor {
                let bucket = if xi.factors.contains_key(f) { &mut applied } else { &mut absent };
                bucket.entry(f.as_str()).or_default().push(*v);
            }
        }
        for k in &r.captions.keywords {
            let e = fired.entry(k.factor.as_str()).or_default();
            if xi.factors.contains_key(&k.factor) {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    println!("draws per sample: {draws:?}");
    for (f, mut v) in applied {
        let (on, off) = fired.get(f).copied().unwrap_or_default();
        println!("{f:12} captions: {on} applied, {off} incidental");
        println!("  applied  {}", quantiles(&mut v));
        println!("  absent   {}", quantiles(absent.get_mut(f).map(Vec::as_mut_slice).unwrap_or(&mut [])));
    }
}
