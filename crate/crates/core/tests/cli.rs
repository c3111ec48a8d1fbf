use std::ffi::OsString;
use std::path::PathBuf;

use labelnoise::cli::run;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn labelnoise(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<OsString> = std::iter::once("labelnoise").chain(args.iter().copied()).map(OsString::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn corpus_args() -> Vec<String> {
    vec![
        "--pairs".into(),
        fixture("pairs.csv"),
        "--annotations".into(),
        fixture("annotations.csv"),
    ]
}

fn with_corpus<'a>(cmd: &'a str, corpus: &'a [String], rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(corpus.iter().map(String::as_str));
    v.extend_from_slice(rest);
    v
}

#[test]
fn report_over_all_subsets() {
    let c = corpus_args();
    let (code, out, err) = labelnoise(&with_corpus("report", &c, &["--heuristics", "all", "--metrics", "lexical"]));
    assert_eq!(code, 0, "{err}");
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "report,metric,orientation,subset,pearson,spearman,percent_change,n_pairs,undefined,annotators_removed,status"
    );
    // 8 metrics, each with a baseline row and 31 subset rows
    assert_eq!(lines.count(), 8 * 32);
    assert!(out.contains("all annotators,ROUGE-1,similarity,baseline,"));
}

#[test]
fn flag_lists_planted_annotators() {
    let c = corpus_args();
    let (code, out, _) = labelnoise(&with_corpus("flag", &c, &[]));
    assert_eq!(code, 0);
    let row = |id: &str| out.lines().find(|l| l.starts_with(id)).unwrap().to_string();
    assert!(row("lazy,2,true,").contains("variance=0.0000<1"));
    assert!(row("slowpoke,1,true,").contains("mean_duration="));
    assert!(row("ann1,,false").ends_with(",,,,,"));
}

#[test]
fn text_report_with_embeddings() {
    let c = corpus_args();
    let vectors = fixture("vectors.txt");
    let (code, out, err) = labelnoise(&with_corpus(
        "report",
        &c,
        &["--metrics", "all", "--glove", &vectors, "--fasttext", &vectors, "--heuristics", "1;2", "--format", "text"],
    ));
    assert_eq!(code, 0, "{err}");
    for metric in ["WMD", "glove_cosine", "fasttext_cosine", "L2_score", "POS_dist_score"] {
        assert!(out.lines().any(|l| l.starts_with(metric)), "{metric} missing from\n{out}");
    }
    assert!(!out.contains("-0.00%"));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let (code, out, err) = labelnoise(&["report", "--pairs", &fixture("pairs.csv"), "--annotations", "/no/such/annotations.csv"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.starts_with("error: ") && err.contains("/no/such/annotations.csv"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    let (code, _, err) = labelnoise(&["report", "--pairs"]);
    assert_eq!(code, 2);
    assert!(err.contains("--pairs"));
    let c = corpus_args();
    let (code, _, err) = labelnoise(&with_corpus("report", &c, &["--metrics", "bertscore"]));
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = labelnoise(&with_corpus("report", &c, &["--heuristics", "6"]));
    assert_eq!(code, 2);
}

#[test]
fn help_goes_to_stdout() {
    let (code, out, _) = labelnoise(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("style-report"));
    let (code, out, _) = labelnoise(&["report", "--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("--sinkhorn-epsilon"));
}

#[test]
fn config_file_sits_below_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "slow_threshold = 1000\nlow_variance_threshold = 0\n").unwrap();
    let c = corpus_args();
    let cfg = cfg.to_str().unwrap();
    let (_, out, _) = labelnoise(&with_corpus("flag", &c, &["--config", cfg]));
    assert!(out.lines().skip(1).all(|l| l.split(',').nth(1) == Some("")), "{out}");
    let (_, out, _) = labelnoise(&with_corpus("flag", &c, &["--config", cfg, "--slow-threshold", "300"]));
    assert!(out.contains("slowpoke,1,true"));
}

#[test]
fn stats_and_validate() {
    let c = corpus_args();
    let (code, out, _) = labelnoise(&with_corpus("validate", &c, &[]));
    assert_eq!(code, 0);
    assert_eq!(out, "pairs: 12 (random: 4)\nannotations: 60\nannotators: 5\nsources: forum (6), news (6)\n");
    let (code, out, _) = labelnoise(&with_corpus("stats", &c, &["--format", "json"]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 5);
}

#[test]
fn simulate_writes_corpus_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, err) = labelnoise(&["simulate", "--seed", "5", "--out-dir", d, "--confusion"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("500 pairs"));
    for f in ["pairs.csv", "annotations.csv", "truth_annotators.csv", "truth_pairs.csv", "confusion.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let (code, out, _) = labelnoise(&[
        "validate",
        "--pairs",
        &format!("{d}/pairs.csv"),
        "--annotations",
        &format!("{d}/annotations.csv"),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("annotators: 60"));
}

#[test]
fn precomputed_channels_join_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("bert.csv");
    let mut body = String::from("pair_id,score\n");
    for i in 1..=12 {
        body.push_str(&format!("p{i:02},{}\n", if i > 8 { 0.1 } else { 0.5 + i as f64 / 20.0 }));
    }
    std::fs::write(&scores, body).unwrap();
    let c = corpus_args();
    let arg = format!("BertScore={}", scores.display());
    let (code, out, err) = labelnoise(&with_corpus("metrics", &c, &["--metrics", "bleu", "--precomputed", &arg]));
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().next().unwrap(), "pair_id,bleu,BertScore");
    assert!(out.contains("\np09,0,0.1\n"), "{out}");
}
