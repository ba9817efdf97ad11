use std::path::Path;
use std::process::{Command, Output};

fn shelfwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shelfwise")).args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> String {
    let out = shelfwise(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn end_to_end_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let spec = dir.join("spec.toml");
    std::fs::write(&spec, "products = 5\nhorizon = 80\ntrain_len = 50\n").unwrap();
    let data = dir.join("small.txt");
    ok(&["datagen", "--config", p(&spec), "--seed", "4", "--out", p(&data)]);
    let other = dir.join("other.txt");
    ok(&["datagen", "--products", "7", "--tightness", "0.8", "--out", p(&other)]);

    let exp = dir.join("exp.toml");
    std::fs::write(
        &exp,
        "dataset = \"small.txt\"\nalgorithm = \"dez_dqn_gvf\"\nepisodes = 2\nlog_decisions = true\n\
         [agent]\nbatch_size = 8\nhidden = [8]\n[finetune]\nepisodes = 1\n",
    )
    .unwrap();
    let run = dir.join("run");
    let out = ok(&["train", "--config", p(&exp), "--seeds", "0..2", "--out", p(&run)]);
    assert!(out.contains("dez_dqn_gvf on small: 2 seeds"), "{out}");
    assert!(run.join("manifest.json").exists());

    let again = dir.join("again");
    ok(&["train", "--from-manifest", p(&run), "--out", p(&again)]);
    assert_eq!(
        std::fs::read(run.join("test_metrics.csv")).unwrap(),
        std::fs::read(again.join("test_metrics.csv")).unwrap()
    );

    ok(&["eval", "--run", p(&run)]);
    assert!(run.join("eval.csv").exists());
    ok(&["transfer", "--run", p(&run), "--dataset", p(&other)]);
    assert!(run.join("transfer-other.csv").exists());
    let maps = ok(&["heatmap", "--run", p(&run)]);
    assert!(maps.contains("policy:"), "{maps}");
    assert!(run.join("heatmaps/heatmap_policy.csv").exists());
    ok(&["finetune", "--run", p(&run), "--out", p(&dir.join("ft"))]);
    assert!(dir.join("ft/finetune.csv").exists());

    let lp = dir.join("lp");
    ok(&["lp-bound", "--dataset", p(&data), "--seed", "0", "--out", p(&lp)]);
    let heur = dir.join("heur");
    ok(&["train", "--config", p(&exp), "--algorithm", "heuristic", "--seed", "0", "--out", p(&heur)]);

    let table = ok(&["summarize", p(&run), p(&heur), p(&lp), "--out", p(&dir.join("sum"))]);
    assert!(table.starts_with("algorithm,dataset,seeds"), "{table}");
    assert!(table.contains("dez_dqn_gvf,small,2,"), "{table}");
    assert!(dir.join("sum/transfer_matrix.csv").exists());
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let out = shelfwise(&["train", "--out", "/nonexistent/x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
    let out = shelfwise(&["datagen", "--tightness", "1.5", "--out", "/tmp/never.txt"]);
    assert!(!out.status.success());
    let out = shelfwise(&["--seed", "1", "--seeds", "0..2", "summarize", "x"]);
    assert!(!out.status.success());
}
