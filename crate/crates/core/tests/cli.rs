mod common;

use std::ffi::OsString;
use std::fs;
use std::path::Path;
use std::process::Command;

use common::{fixture, golden};
use targetspan::cli::main_with_args;
use targetspan::llm::{CacheKey, ResponseCache};

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut argv: Vec<OsString> = vec!["targetspan".into()];
    argv.extend(args.iter().map(|a| a.as_ref().to_os_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with_args(argv, &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn ok(args: &[&dyn AsRef<std::ffi::OsStr>]) -> String {
    let out = run(args);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    out.stdout
}

fn golden_text(name: &str) -> String {
    fs::read_to_string(golden(name)).unwrap()
}

#[test]
fn eval_matches_golden() {
    let out = ok(&[&"eval", &"--gold", &fixture("gold.jsonl"), &"--pred", &fixture("pred.jsonl"), &"--per-sample"]);
    assert_eq!(out, golden_text("eval_strict.tsv"));
}

#[test]
fn resolved_configuration_goes_to_stderr() {
    let out = run(&[&"stats", &fixture("gold.jsonl")]);
    assert!(out.stderr.starts_with("resolved: "), "{}", out.stderr);
    assert!(!out.stdout.contains("resolved"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("targetspan.toml");
    fs::write(&config, "[eval]\nmode = \"coverage\"\nmicro = true\n\n[stats]\nalt = \"per-sample\"\n").unwrap();

    let from_config =
        ok(&[&"--config", &config, &"eval", &"--gold", &fixture("gold.jsonl"), &"--pred", &fixture("pred.jsonl")]);
    assert_eq!(from_config, golden_text("eval_coverage_micro.tsv"));

    let overridden = ok(&[
        &"--config",
        &config,
        &"eval",
        &"--gold",
        &fixture("gold.jsonl"),
        &"--pred",
        &fixture("pred.jsonl"),
        &"--mode",
        &"strict",
    ]);
    assert!(overridden.starts_with("mode\tstrict\naveraging\tmicro\n"), "{overridden}");
}

#[test]
fn jsonl_conll_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let conll = dir.path().join("gold.conll");
    let back = dir.path().join("gold.jsonl");
    ok(&[&"convert", &"--input", &fixture("gold.jsonl"), &"--to", &"conll", &"--out", &conll]);
    assert_eq!(fs::read_to_string(&conll).unwrap(), golden_text("convert_gold.conll"));
    ok(&[&"convert", &"--input", &conll, &"--to", &"jsonl", &"--out", &back]);
    assert_eq!(fs::read(&back).unwrap(), fs::read(fixture("gold.jsonl")).unwrap());
}

#[test]
fn tag_eval_scores_conll_files() {
    let dir = tempfile::tempdir().unwrap();
    let (g, p) = (dir.path().join("g.conll"), dir.path().join("p.conll"));
    ok(&[&"convert", &"--input", &fixture("gold.jsonl"), &"--to", &"conll", &"--out", &g]);
    ok(&[&"convert", &"--input", &fixture("pred.jsonl"), &"--to", &"conll", &"--out", &p]);
    // 3 exact entities of 6 predicted / 5 gold; 20 of 24 tags agree
    let out = ok(&[&"tag-eval", &"--gold", &g, &"--pred", &p]);
    assert_eq!(out, "n_samples\t4\nf1\t0.545455\nprecision\t0.500000\nrecall\t0.600000\naccuracy\t0.833333\n");
}

#[test]
fn agreement_between_annotator_files() {
    let files = [fixture("annotator_a1.jsonl"), fixture("annotator_a2.jsonl"), fixture("annotator_a3.jsonl")];
    let out = ok(&[&"agree", &files[0], &files[1], &files[2]]);
    assert_eq!(
        out,
        "annotator_a\tannotator_b\tdsc\tlcs\tn_samples\n\
         a1\ta2\t0.700000\t0.700000\t4\n\
         a1\ta3\t0.650000\t0.650000\t4\n\
         a2\ta3\t0.450000\t0.450000\t4\n"
    );
    let vs = ok(&[&"agree", &files[0], &files[1], &files[2], &"--vs-aggregate"]);
    assert!(vs.contains("a1\t0.416667"), "{vs}");
    assert!(vs.contains("a3\t0.666667"), "{vs}");
}

#[test]
fn pool_rank_then_select() {
    let dir = tempfile::tempdir().unwrap();
    let ranking = dir.path().join("ranking.tsv");
    ok(&[&"pool-rank", &"--gold", &fixture("gold.jsonl"), &"--pool", &fixture("pool.jsonl"), &"--out", &ranking]);
    assert_eq!(fs::read_to_string(&ranking).unwrap(), golden_text("pool_rank.tsv"));
    let best = ok(&[&"pool-select", &"--ranking", &ranking]);
    assert_eq!(best, "system\tprompt\tf1_m\ngpt-x\tprompt1\t1.000000\n");
}

#[test]
fn split_writes_three_deterministic_folds() {
    let read_all = |dir: &Path| -> Vec<String> {
        ["train.jsonl", "dev.jsonl", "test.jsonl"].iter().map(|f| fs::read_to_string(dir.join(f)).unwrap()).collect()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = ok(&[&"split", &"--input", &fixture("gold.jsonl"), &"--seed", &"7", &"--out-dir", &dir.path()]);
        assert_eq!(out, "fold\tsize\ntrain\t3\ndev\t1\ntest\t0\n");
    }
    let folds = read_all(a.path());
    assert_eq!(folds, read_all(b.path()));
    assert_eq!(folds.iter().map(|f| f.lines().count()).sum::<usize>(), 4);
}

#[test]
fn tokenize_prints_offsets() {
    let out = ok(&[&"tokenize", &"--text", &"the  purple\tperson"]);
    assert_eq!(
        out,
        "id\tindex\ttoken\tchar_start\tchar_end\n-\t0\tthe\t0\t3\n-\t1\tpurple\t5\t11\n-\t2\tperson\t12\t18\n"
    );
}

fn seeded_cache(dir: &Path) {
    let cache = ResponseCache::open(dir).unwrap();
    for line in fs::read_to_string(fixture("recorded_responses.jsonl")).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let key = CacheKey {
            model: v["model"].as_str().unwrap().into(),
            prompt_id: v["prompt_id"].as_str().unwrap().into(),
            sample_id: v["sample_id"].as_str().unwrap().into(),
            temperature: v["temperature"].as_f64().unwrap(),
        };
        cache.put(&key, v["response_text"].as_str().unwrap()).unwrap();
    }
}

#[test]
fn offline_annotate_replays_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    seeded_cache(&cache);
    let mut pools = Vec::new();
    for name in ["pool1.jsonl", "pool2.jsonl"] {
        let out = dir.path().join(name);
        let res = run(&[
            &"annotate",
            &"--samples",
            &fixture("samples.jsonl"),
            &"--model",
            &"gpt-x",
            &"--model",
            &"small-lm",
            &"--cache-dir",
            &cache,
            &"--offline",
            &"--out",
            &out,
        ]);
        assert_eq!(res.code, 0, "{}", res.stderr);
        assert!(res.stderr.contains("16 from cache"), "{}", res.stderr);
        pools.push(fs::read(&out).unwrap());
    }
    assert_eq!(pools[0], pools[1]);

    let ranked = ok(&[&"pool-rank", &"--gold", &fixture("samples.jsonl"), &"--pool", &dir.path().join("pool1.jsonl")]);
    assert!(ranked.lines().nth(1).unwrap().starts_with("gpt-x\tprompt1\t1.000000"), "{ranked}");
}

#[test]
fn offline_annotate_without_cache_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let failures = dir.path().join("failures.jsonl");
    let res = run(&[
        &"annotate",
        &"--samples",
        &fixture("samples.jsonl"),
        &"--model",
        &"gpt-x",
        &"--cache-dir",
        &dir.path().join("empty"),
        &"--offline",
        &"--failures",
        &failures,
    ]);
    assert_eq!(res.code, 0, "{}", res.stderr);
    assert!(res.stdout.is_empty());
    let manifest = fs::read_to_string(&failures).unwrap();
    assert_eq!(manifest.lines().count(), 8);
    assert!(manifest.contains("offline"));
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_targetspan")).args(args).current_dir(env!("CARGO_MANIFEST_DIR")).output().unwrap()
}

#[test]
fn exit_codes() {
    let ok = binary(&["stats", "tests/fixtures/gold.jsonl"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8(ok.stdout).unwrap(), golden_text("stats.tsv"));

    assert_eq!(binary(&["--help"]).status.code(), Some(0));
    assert_eq!(binary(&["eval", "--gold", "tests/fixtures/gold.jsonl"]).status.code(), Some(2));
    assert_eq!(binary(&["no-such-command"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\":\"x\",\"text\":\"a b\",\"spans\":[[0,3],[2,3]]}\n").unwrap();
    let out = binary(&["stats", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overlap"));

    let missing = binary(&["stats", "tests/fixtures/does-not-exist.jsonl"]);
    assert_eq!(missing.status.code(), Some(1));
}
