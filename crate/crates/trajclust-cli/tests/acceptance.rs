//! Determinism acceptance: every subcommand, rerun with the manifest it
//! wrote, reproduces byte-identical CSV and SVG artifacts.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_trajclust")
}

fn run(args: &[&str]) {
    let output = Command::new(bin()).args(args).output().expect("spawn trajclust");
    assert!(
        output.status.success(),
        "trajclust {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

/// All CSV and SVG files of a directory, sorted by name.
fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|entry| entry.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "svg")))
        .map(|p| {
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Run every subcommand into `dir`. Stage settings come either from
/// `--set` overrides (first run) or from the first run's manifests.
fn chain(dir: &Path, manifests_from: Option<&Path>) {
    let out = dir.display().to_string();
    let small: Vec<String> = [
        "sim.n_a=15",
        "sim.n_b=15",
        "sim.t_len=10",
        "train.epochs=30",
        "arch.hidden=8",
        "arch.decoder_widths=8",
        "kml.k_max=4",
        "kml.restarts=4",
        "cluster.restarts=4",
        "gbtm.max_iters=50",
    ]
    .iter()
    .flat_map(|kv| ["--set".to_string(), kv.to_string()])
    .collect();

    let stages: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate".into()]),
        ("train", vec!["train".into()]),
        ("embed", vec!["embed".into()]),
        ("cluster", vec!["cluster".into()]),
        ("kml", vec!["kml".into()]),
        ("gbtm", vec!["gbtm".into()]),
        ("evaluate-ch-sweep", vec!["evaluate".into(), "ch-sweep".into()]),
        ("evaluate-ari", vec!["evaluate".into(), "ari".into()]),
        (
            "evaluate-coherence",
            vec![
                "evaluate".into(),
                "coherence".into(),
                format!("ae={out}/membership.csv"),
                format!("kml={out}/kml_membership.csv"),
                format!("gbtm={out}/gbtm_membership.csv"),
            ],
        ),
        (
            "plot-trajectories",
            vec![
                "plot".into(),
                "trajectories".into(),
                "--labels".into(),
                format!("{out}/labels.csv"),
            ],
        ),
        (
            "plot-embedding",
            vec![
                "plot".into(),
                "embedding".into(),
                "--partition".into(),
                format!("{out}/partition.csv"),
            ],
        ),
        ("plot-ch-bars", vec!["plot".into(), "ch-bars".into()]),
        (
            "plot-mean-curves",
            vec![
                "plot".into(),
                "mean-curves".into(),
                "--partition".into(),
                format!("{out}/kml_partition.csv"),
            ],
        ),
    ];

    for (name, stage_args) in stages {
        let mut args: Vec<String> = stage_args;
        args.push("--out".into());
        args.push(out.clone());
        match manifests_from {
            Some(source) => {
                args.push("--config".into());
                args.push(source.join(format!("manifest_{name}.txt")).display().to_string());
            }
            None => args.extend(small.iter().cloned()),
        }
        let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run(&arg_refs);
    }
}

#[test]
fn a8_manifest_reruns_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let first = root.path().join("first");
    let replay = root.path().join("replay");
    std::fs::create_dir_all(&first).unwrap();
    std::fs::create_dir_all(&replay).unwrap();

    chain(&first, None);
    chain(&replay, Some(&first));

    let a = artifacts(&first);
    let b = artifacts(&replay);
    let names: Vec<&String> = a.iter().map(|(name, _)| name).collect();
    let ok = !a.is_empty() && a == b;
    println!(
        "[8] determinism: {} ({} artifacts byte-identical: {names:?})",
        if ok { "PASS" } else { "FAIL" },
        a.len()
    );
    assert!(!a.is_empty(), "the pipeline produced no artifacts");
    assert_eq!(
        a.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        b.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "artifact sets differ"
    );
    for ((name, bytes_a), (_, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(bytes_a, bytes_b, "`{name}` differs between the run and its replay");
    }
}

#[test]
fn reproduce_sim_rerun_is_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let first = root.path().join("first");
    let replay = root.path().join("replay");

    let small = [
        "--set",
        "sim.n_a=12",
        "--set",
        "sim.n_b=12",
        "--set",
        "sim.t_len=10",
        "--set",
        "train.epochs=25",
        "--set",
        "arch.hidden=8",
        "--set",
        "arch.decoder_widths=8",
        "--set",
        "kml.k_max=4",
        "--set",
        "kml.restarts=4",
    ];
    let mut args = vec!["reproduce-sim", "--out"];
    let first_str = first.display().to_string();
    args.push(&first_str);
    args.extend_from_slice(&small);
    run(&args);

    let manifest = first.join("manifest_reproduce-sim.txt");
    let replay_str = replay.display().to_string();
    let manifest_str = manifest.display().to_string();
    run(&["reproduce-sim", "--out", &replay_str, "--config", &manifest_str]);

    let a = artifacts(&first);
    let b = artifacts(&replay);
    assert!(!a.is_empty());
    assert_eq!(a, b, "reproduce-sim artifacts differ between runs");
}

fn read_to_string(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn unknown_config_key_fails_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let output = Command::new(bin())
        .args(["simulate", "--out", &out, "--set", "train.epocs=5"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("train.epocs"), "stderr: {stderr}");
}

#[test]
fn ari_of_a_partition_with_itself_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    run(&[
        "simulate",
        "--out",
        &out,
        "--set",
        "sim.n_a=6",
        "--set",
        "sim.n_b=6",
        "--set",
        "sim.t_len=8",
    ]);
    let labels = format!("{out}/labels.csv");
    run(&["evaluate", "ari", &labels, &labels, "--out", &out]);
    let ari = read_to_string(dir.path().join("ari.csv"));
    assert_eq!(ari, "ari\n1\n");
}
