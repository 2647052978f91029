use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn topicnet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn topicnet")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = topicnet(dir, args);
    assert!(
        out.status.success(),
        "topicnet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small synthetic corpus plus vocabulary and topic model.
fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-synth", "--out", "c.jsonl", "--seed", "1", "--articles", "40", "--k", "3", "--vocab-size", "30"]);
    ok(d, &["build-vocab", "--corpus", "c.jsonl", "--out", "v.txt"]);
    ok(d, &["train-lda", "--corpus", "c.jsonl", "--vocab", "v.txt", "--k", "3", "--sweeps", "40", "--seed", "2", "--out", "m.json"]);
    dir
}

#[test]
fn no_arguments_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = topicnet(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "gen-synth",
        "build-vocab",
        "train-lda",
        "infer-topics",
        "build-triples",
        "train-net",
        "build-index",
        "retrieve",
        "evaluate-map",
        "probe",
        "grad-check",
    ] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
}

#[test]
fn version_lists_every_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["--version"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["topicnet-lda-model\tv1", "topicnet-checkpoint\tv1", "TNTRIPLE\tv1", "topicnet-synth-truth\tv1"] {
        assert!(text.contains(name), "missing {name} in {text}");
    }
}

#[test]
fn missing_seed_prints_synopsis() {
    let dir = tempfile::tempdir().unwrap();
    let out = topicnet(dir.path(), &["train-lda", "--corpus", "c.jsonl", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("--seed") && err.contains("Usage"), "{err}");
}

#[test]
fn bad_enum_value_is_a_usage_error() {
    let dir = fixture();
    let d = dir.path();
    fs::write(d.join("idx.jsonl"), "{\"item_id\":\"a\",\"modality\":\"text\",\"distribution\":[1.0,0.0]}\n").unwrap();
    let out = topicnet(d, &["evaluate-map", "--index", "idx.jsonl", "--out", "s.csv", "--kl", "backwards"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_corpus_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let good = r#"{"doc_id":"a","text":"alpha beta","images":[{"image_id":"i","caption":"c","features":[1.0]}]}"#;
    fs::write(d.join("bad.jsonl"), format!("{good}\n{{not json\n")).unwrap();
    let out = topicnet(d, &["build-vocab", "--corpus", "bad.jsonl", "--out", "v.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bad.jsonl:2:"), "{err}");
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = topicnet(dir.path(), &["evaluate-map", "--index", "nope.jsonl", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.jsonl"));
}

#[test]
fn train_lda_defaults_to_forty_topics_and_writes_vocab_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-synth", "--out", "c.jsonl", "--seed", "1", "--articles", "30", "--k", "3", "--vocab-size", "30"]);
    ok(d, &["train-lda", "--corpus", "c.jsonl", "--seed", "7", "--sweeps", "5", "--out", "model.bin"]);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("model.bin")).unwrap()).unwrap();
    assert_eq!(model["k"], 40);
    assert_eq!(model["alpha"], 50.0 / 40.0);
    assert!(d.join("model.bin.vocab.txt").exists());
    ok(d, &["train-lda", "--corpus", "c.jsonl", "--k", "40", "--seed", "7", "--sweeps", "5", "--out", "model2.bin"]);
    assert_eq!(fs::read(d.join("model.bin")).unwrap(), fs::read(d.join("model2.bin")).unwrap());
}

#[test]
fn flags_override_config_file_and_sidecar_echoes_result() {
    let dir = fixture();
    let d = dir.path();
    fs::write(d.join("cfg.toml"), "[lda]\nk = 7\nsweeps = 3\nbeta = 0.05\n").unwrap();
    ok(d, &["--config", "cfg.toml", "train-lda", "--corpus", "c.jsonl", "--vocab", "v.txt", "--k", "4", "--seed", "1", "--out", "m4.json"]);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m4.json")).unwrap()).unwrap();
    assert_eq!(model["k"], 4);
    assert_eq!(model["beta"], 0.05);
    let echoed = fs::read_to_string(d.join("m4.json.config.toml")).unwrap();
    let cfg = topicnet::config::Config::from_toml_str(&echoed).unwrap();
    assert_eq!(cfg.lda.k, 4);
    assert_eq!(cfg.lda.sweeps, 3);
    assert!(echoed.contains("# seed = 1"));
}

#[test]
fn unknown_config_key_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("cfg.toml"), "[lda]\ntopics = 7\n").unwrap();
    let out = topicnet(d, &["--config", "cfg.toml", "grad-check", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cfg.toml"));
}

#[test]
fn retrieve_top_eight_emits_eight_rows() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["build-triples", "--corpus", "c.jsonl", "--model", "m.json", "--vocab", "v.txt", "--seed", "3", "--infer-sweeps", "30", "--burn-in", "5", "--out", "t.bin"]);
    ok(d, &["train-net", "--triples", "t.bin", "--seed", "4", "--hidden", "8", "--epochs", "2", "--batch-size", "8", "--out", "n.json"]);
    let history = fs::read_to_string(d.join("n.json.history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("iteration,lr,loss_global,loss_local,loss_total"));
    assert_eq!(history.lines().count(), 3);
    ok(d, &["build-index", "--corpus", "c.jsonl", "--model", "m.json", "--vocab", "v.txt", "--net", "n.json", "--seed", "5", "--infer-sweeps", "30", "--burn-in", "5", "--out", "idx.jsonl"]);

    let out = ok(d, &["retrieve", "--index", "idx.jsonl", "--model", "m.json", "--vocab", "v.txt", "--text", "w0001 w0002 w0003", "--top", "8"]);
    let tsv = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = tsv.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 8);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 4);
        assert_eq!(row[0], (i + 1).to_string());
        assert!(row[1].contains("-i"), "text queries return images, got {}", row[1]);
        assert!(row[2].parse::<f64>().unwrap() >= 0.0);
        assert!(row[3].starts_with("topic"));
    }
    let divs: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(divs.windows(2).all(|w| w[0] <= w[1]));

    let feats = "0.1,0.2,0.3,0.1,0.2,0.3,0.1,0.2,0.3,0.1,0.2,0.3,0.1,0.2,0.3,0.1";
    let out = ok(d, &["retrieve", "--index", "idx.jsonl", "--net", "n.json", "--features", feats, "--top", "3"]);
    let tsv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(tsv.lines().count(), 3);
    assert!(tsv.lines().all(|l| l.split('\t').nth(1).unwrap().starts_with('a') && !l.contains("-i")));

    let out = topicnet(d, &["retrieve", "--index", "idx.jsonl", "--text", "w0001"]);
    assert_eq!(out.status.code(), Some(1), "text query without model is a usage error");
    let out = topicnet(d, &["retrieve", "--index", "idx.jsonl", "--net", "n.json", "--features", "1,2"]);
    assert_eq!(out.status.code(), Some(2), "wrong feature length is a data error");
}

#[test]
fn evaluate_map_on_one_hot_fixture_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut lines = String::new();
    for class in 0..3 {
        let mut dist = vec![0.0; 3];
        dist[class] = 1.0;
        for j in 0..2 {
            for (m, prefix) in [("text", "t"), ("image", "i")] {
                lines.push_str(&format!(
                    "{{\"item_id\":\"{prefix}{class}{j}\",\"modality\":\"{m}\",\"label\":\"c{class}\",\"distribution\":{dist:?}}}\n"
                ));
            }
        }
    }
    fs::write(d.join("idx.jsonl"), lines).unwrap();
    let out = ok(d, &["evaluate-map", "--index", "idx.jsonl", "--out", "summary.csv"]);
    let summary = fs::read_to_string(d.join("summary.csv")).unwrap();
    assert_eq!(summary, "query_modality,map\nimage,1\ntext,1\naverage,1\n");
    assert_eq!(String::from_utf8(out.stdout).unwrap(), summary);
    let per_class = fs::read_to_string(d.join("summary.csv.text_query.csv")).unwrap();
    assert_eq!(per_class, "class,ap\nc0,1\nc1,1\nc2,1\n");
}

#[test]
fn probe_writes_per_class_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut lines = String::new();
    for i in 0..40 {
        let class = i % 2;
        let p = if class == 0 { 0.8 } else { 0.2 } + (i as f64) * 1e-3;
        lines.push_str(&format!(
            "{{\"item_id\":\"i{i:02}\",\"modality\":\"image\",\"label\":\"c{class}\",\"distribution\":[{p},{}]}}\n",
            1.0 - p
        ));
    }
    fs::write(d.join("idx.jsonl"), lines).unwrap();
    let out = ok(d, &["probe", "--index", "idx.jsonl", "--seed", "1", "--out", "probe.csv"]);
    let table = fs::read_to_string(d.join("probe.csv")).unwrap();
    assert_eq!(table, "class,ap\nc0,1\nc1,1\n");
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "mean_ap,1");
}

#[test]
fn grad_check_reports_small_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["grad-check", "--seed", "3", "--hidden", "8,6"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let err: f64 = text.trim().split('\t').nth(1).unwrap().parse().unwrap();
    assert!(err < 1e-5);
    let out = topicnet(dir.path(), &["grad-check", "--seed", "3", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infer_topics_emits_one_line_per_article() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["infer-topics", "--corpus", "c.jsonl", "--model", "m.json", "--vocab", "v.txt", "--seed", "1", "--infer-sweeps", "30", "--burn-in", "5", "--out", "topics.jsonl"]);
    let text = fs::read_to_string(d.join("topics.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 40);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let article: Vec<f64> = serde_json::from_value(first["article"].clone()).unwrap();
    assert_eq!(article.len(), 3);
    assert!((article.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(first["captions"].as_array().unwrap().len(), 2);
}

#[test]
fn ppm_features_file_is_read() {
    let dir = fixture();
    let d = dir.path();
    ok(d, &["build-triples", "--corpus", "c.jsonl", "--model", "m.json", "--vocab", "v.txt", "--seed", "3", "--infer-sweeps", "20", "--burn-in", "5", "--out", "t.bin"]);
    let mut ppm = b"P6\n4 4\n255\n".to_vec();
    ppm.extend((0..48).map(|i| (i * 5) as u8));
    fs::write(d.join("img.ppm"), &ppm).unwrap();
    // a 48-dim net can embed the 4×4×3 pixmap
    let mut lines = String::new();
    lines.push_str("{\"item_id\":\"t\",\"modality\":\"text\",\"label\":\"x\",\"distribution\":[0.5,0.25,0.25]}\n");
    fs::write(d.join("idx.jsonl"), lines).unwrap();
    let triples = topicnet::trainer::load_triples(d.join("t.bin")).unwrap().0;
    let widened: Vec<_> = triples
        .into_iter()
        .map(|mut t| {
            t.x.resize(48, 0.0);
            t
        })
        .collect();
    topicnet::trainer::save_triples(d.join("t48.bin"), &widened, "h").unwrap();
    ok(d, &["train-net", "--triples", "t48.bin", "--seed", "1", "--hidden", "4", "--epochs", "1", "--out", "n48.json"]);
    let out = ok(d, &["retrieve", "--index", "idx.jsonl", "--net", "n48.json", "--features-file", "img.ppm", "--top", "1"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("1\tt\t"));
    fs::write(d.join("bad.ppm"), b"P3\n1 1\n255\n0 0 0\n").unwrap();
    let out = topicnet(d, &["retrieve", "--index", "idx.jsonl", "--net", "n48.json", "--features-file", "bad.ppm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unsupported"));
}
