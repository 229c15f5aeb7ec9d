use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wordweights"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Toy {
    dir: tempfile::TempDir,
}

impl Toy {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let w = |n: &str, t: &str| fs::write(dir.path().join(n), t).unwrap();
        w(
            "in.txt",
            "red shoe box\nred leather shoe\nshoe box sale\nleather box with lid\nred box lid\n",
        );
        w(
            "out.txt",
            "the cat sat on the mat\nthe dog ran away\na cat ran to the box\nthe mat was red\n",
        );
        w(
            "target.txt",
            "the red lea@@ ther shoe\ncat sat on the mat\nbox with lid the dog ran\n\nshoe box sale on the mat\n",
        );
        Toy { dir }
    }

    fn p(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, extra: &str) -> PathBuf {
        let path = self.p("c.json");
        let text = format!(
            r#"{{"in_domain": "{}", "out_domain": "{}", "target": "{}", "output_dir": "{}", "order": 3{extra}}}"#,
            s(&self.p("in.txt")),
            s(&self.p("out.txt")),
            s(&self.p("target.txt")),
            s(&self.p("run"))
        );
        fs::write(&path, text).unwrap();
        path
    }
}

#[test]
fn pipeline_from_config_writes_every_file() {
    let toy = Toy::new();
    let cfg = toy.config("");
    let out = run(&["pipeline", "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["raw_scores.txt", "scores.txt", "weights.txt", "stats.json", "stats.txt"] {
        assert!(toy.p("run").join(f).exists(), "{f}");
    }
    let weights = fs::read_to_string(toy.p("run/weights.txt")).unwrap();
    let lens: Vec<usize> = weights.lines().map(|l| l.split_whitespace().count()).collect();
    assert_eq!(lens, [5, 5, 6, 0, 6]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("+word weights"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(toy.p("run/stats.json")).unwrap()).unwrap();
    assert_eq!(json["total_sentences"], 5);
    assert_eq!(json["total_tokens"], 22);
}

#[test]
fn smoothing_with_unit_kernel_is_byte_identical() {
    let toy = Toy::new();
    let raw = toy.p("raw.txt");
    fs::write(&raw, "0.123456 -1.500000 2.000001\n\n-0.000001 7.250000\n").unwrap();
    let out = run(&["smooth", "--input", s(&raw), "--output", s(&toy.p("sm.txt")), "--kernel", "mean", "--L", "1"]);
    assert!(out.status.success());
    assert_eq!(fs::read(&raw).unwrap(), fs::read(toy.p("sm.txt")).unwrap());
}

#[test]
fn missing_required_path_exits_one_naming_the_key() {
    let toy = Toy::new();
    let cfg = toy.p("c.json");
    fs::write(&cfg, format!(r#"{{"in_domain": "{}", "out_domain": "{}", "output_dir": "x"}}"#, s(&toy.p("in.txt")), s(&toy.p("out.txt")))).unwrap();
    let out = run(&["pipeline", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`target`"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["smooth", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn malformed_arpa_is_reported() {
    let toy = Toy::new();
    let bad = toy.p("bad.arpa");
    fs::write(&bad, "").unwrap();
    let out = run(&["lm-score", "--model", s(&bad), "--input", s(&toy.p("target.txt")), "--output", s(&toy.p("o.txt"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing \\data\\ header"));
}

#[test]
fn individual_stages_reproduce_the_fused_pipeline() {
    let toy = Toy::new();
    let cfg = toy.config(r#", "mode": "chunk", "save_lms": true"#);
    assert!(run(&["--seed", "5", "pipeline", "--config", s(&cfg)]).status.success());

    let step = |args: &[&str]| {
        let out = run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    step(&["lm-train", "--corpus", s(&toy.p("in.txt")), "--output", s(&toy.p("in.arpa")), "--order", "3"]);
    step(&["lm-train", "--corpus", s(&toy.p("out.txt")), "--output", s(&toy.p("out.arpa")), "--order", "3"]);
    assert_eq!(fs::read(toy.p("in.arpa")).unwrap(), fs::read(toy.p("run/lm_in.arpa")).unwrap());
    step(&[
        "score", "--lm-in", s(&toy.p("in.arpa")), "--lm-out", s(&toy.p("out.arpa")),
        "--input", s(&toy.p("target.txt")), "--output", s(&toy.p("raw.txt")),
    ]);
    step(&["smooth", "--input", s(&toy.p("raw.txt")), "--output", s(&toy.p("sm.txt"))]);
    step(&["binarize", "--input", s(&toy.p("sm.txt")), "--output", s(&toy.p("w.txt"))]);
    step(&["--seed", "5", "lcw", "--input", s(&toy.p("w.txt")), "--output", s(&toy.p("chunk.txt"))]);

    let same = |a: &str, b: &str| assert_eq!(fs::read_to_string(toy.p(a)).unwrap(), fs::read_to_string(toy.p(b)).unwrap(), "{a} vs {b}");
    same("raw.txt", "run/raw_scores.txt");
    same("sm.txt", "run/scores.txt");
    same("chunk.txt", "run/weights.txt");

    // Chunk mode through binarize directly is the same fused step.
    step(&["--seed", "5", "binarize", "--mode", "chunk", "--input", s(&toy.p("sm.txt")), "--output", s(&toy.p("chunk2.txt"))]);
    same("chunk2.txt", "run/weights.txt");
}

#[test]
fn stats_subcommand_prints_table_and_json() {
    let toy = Toy::new();
    let w = toy.p("w.txt");
    fs::write(&w, "1 1\n0 0\n").unwrap();
    let json = toy.p("stats.json");
    let out = run(&["stats", "--weights", s(&w), "--json", s(&json)]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("ood. sentences"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["modes"][0]["kept_sentences"], 1);
    assert_eq!(v["modes"][0]["selected_tokens"], 2);
    assert_eq!(v["total_tokens"], 4);
}

#[test]
fn random_mode_depends_only_on_seed() {
    let toy = Toy::new();
    let sm = toy.p("sm.txt");
    fs::write(&sm, "0.1 0.2 0.3 0.4 0.5 0.6 0.7 0.8\n1 2 3\n").unwrap();
    let go = |seed: &str, threads: &str, out: &str| {
        let o = run(&["--seed", seed, "--threads", threads, "binarize", "--mode", "random", "--keep-fraction", "0.5", "--input", s(&sm), "--output", s(&toy.p(out))]);
        assert!(o.status.success());
        fs::read(toy.p(out)).unwrap()
    };
    assert_eq!(go("3", "1", "a.txt"), go("3", "4", "b.txt"));
}

#[test]
fn lm_score_writes_one_value_per_token() {
    let toy = Toy::new();
    let model = toy.p("m.arpa");
    assert!(run(&["lm-train", "--corpus", s(&toy.p("in.txt")), "--output", s(&model)]).status.success());
    let out = toy.p("lp.txt");
    assert!(run(&["lm-score", "--model", s(&model), "--input", s(&toy.p("target.txt")), "--output", s(&out)]).status.success());
    let text = fs::read_to_string(out).unwrap();
    let lens: Vec<usize> = text.lines().map(|l| l.split_whitespace().count()).collect();
    assert_eq!(lens, [5, 5, 6, 0, 6]);
    // "lea@@ ther" shares the score of "leather".
    let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
    assert_eq!(first[2], first[3]);
}
