use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cmqr::dense::{Encoder, HashProjectionEncoder};
use cmqr::rewrite::read_rewrite_file;
use serde_json::Value;
use tempfile::TempDir;

const WORDS: [&str; 30] = [
    "tower", "paris", "river", "bridge", "museum", "garden", "castle", "train", "market", "church",
    "harbor", "island", "mountain", "valley", "forest", "desert", "library", "palace", "square",
    "station", "canal", "lake", "temple", "statue", "opera", "theatre", "stadium", "beach",
    "avenue", "fountain",
];

fn cmqr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmqr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn collection(n: usize) -> String {
    (0..n)
        .map(|i| {
            let text: Vec<&str> = (0..3 + i % 5)
                .map(|j| WORDS[(i * 7 + j * 11 + j * j) % 30])
                .collect();
            format!(
                "{{\"id\":\"p{i:03}\",\"contents\":\"{}\"}}\n",
                text.join(" ")
            )
        })
        .collect()
}

const CONVERSATIONS: &str = concat!(
    r#"{"id":"c1","turns":[{"query":"where is the tower","response":"the tower stands by the river in paris"},"#,
    r#"{"query":"is there a museum near it","response":"a museum and a garden are across the bridge"},"#,
    r#"{"query":"what about the castle"}]}"#,
    "\n",
    r#"{"id":"c2","turns":[{"query":"tell me about the harbor","response":"the harbor faces the island"},"#,
    r#"{"query":"and the lake"}]}"#,
    "\n",
);

fn run_lines(run: &str) -> BTreeMap<String, Vec<(String, f64)>> {
    let mut out: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for line in run.lines() {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 6, "{line}");
        out.entry(f[0].to_owned())
            .or_default()
            .push((f[2].to_owned(), f[4].parse().unwrap()));
    }
    out
}

#[test]
fn index_reports_statistics() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.jsonl",
        "{\"id\":\"a\",\"contents\":\"one two\"}\n{\"id\":\"b\",\"contents\":\"two three\"}\n{\"id\":\"c\",\"contents\":\"four\"}\n",
    );
    let out = ok(&cmqr(
        &["index", "--collection", "c.jsonl", "--index", "idx"],
        dir.path(),
    ));
    assert!(out.contains("documents: 3"), "{out}");
    assert!(out.contains("vocabulary: 4"), "{out}");
    assert!(out.contains("avgdl: 1.6667"), "{out}");
    assert!(dir.path().join("idx/index.bin").is_file());
}

#[test]
fn malformed_line_is_reported() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "c.jsonl",
        "{\"id\":\"a\",\"contents\":\"fine\"}\n{\"id\": oops\n",
    );
    let out = cmqr(
        &["index", "--collection", "c.jsonl", "--index", "idx"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("c.jsonl:2:"), "{}", stderr(&out));
}

#[test]
fn reindexing_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "c.jsonl", &collection(120));
    ok(&cmqr(
        &["index", "--collection", "c.jsonl", "--index", "a"],
        dir.path(),
    ));
    ok(&cmqr(
        &["index", "--collection", "c.jsonl", "--index", "b"],
        dir.path(),
    ));
    let a = fs::read(dir.path().join("a/index.bin")).unwrap();
    let b = fs::read(dir.path().join("b/index.bin")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cmqr(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(cmqr(&[], dir.path()).status.code(), Some(1));
    assert_eq!(cmqr(&["index"], dir.path()).status.code(), Some(1));
    assert_eq!(
        cmqr(&["--beam-width", "5", "index"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        cmqr(&["--b", "1.5", "--print-config"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        cmqr(
            &["index", "--collection", "missing.jsonl", "--index", "x"],
            dir.path()
        )
        .status
        .code(),
        Some(3)
    );
    assert_eq!(cmqr(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn print_config_defaults_and_overrides() {
    let dir = TempDir::new().unwrap();
    let v: Value = serde_json::from_str(&ok(&cmqr(&["--print-config"], dir.path()))).unwrap();
    assert_eq!(v["beam_width"], 10);
    assert_eq!(v["num_rewrites"], 10);
    assert_eq!(v["bm25_k1"], 0.82);
    assert_eq!(v["bm25_b"], 0.68);
    assert_eq!(v["max_context_tokens"], 512);
    assert_eq!(v["top_k_results"], 100);
    assert_eq!(v["dense_normalize_rs"], false);
    assert_eq!(v["encoder"], "hash");

    write(
        dir.path(),
        "cfg.json",
        r#"{"bm25_k1": 1.5, "top_k_results": 7, "mode": "dense"}"#,
    );
    let v: Value = serde_json::from_str(&ok(&cmqr(
        &[
            "--config",
            "cfg.json",
            "--top-k",
            "3",
            "--dense-normalize-rs",
            "--print-config",
        ],
        dir.path(),
    )))
    .unwrap();
    assert_eq!(v["bm25_k1"], 1.5);
    assert_eq!(v["top_k_results"], 3);
    assert_eq!(v["mode"], "dense");
    assert_eq!(v["dense_normalize_rs"], true);

    write(
        dir.path(),
        "bad.json",
        r#"{"beam_width": 10, "typo_field": 1}"#,
    );
    assert_eq!(
        cmqr(&["--config", "bad.json", "--print-config"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn rewrite_single_turn_passthrough() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "conv.jsonl",
        "{\"id\":\"solo\",\"turns\":[{\"query\":\"Who built it?\"}]}\n",
    );
    let out = ok(&cmqr(
        &["rewrite", "--conversations", "conv.jsonl"],
        dir.path(),
    ));
    assert_eq!(
        out,
        "{\"conversation_id\":\"solo\",\"turn_index\":1,\"rewrites\":[{\"text\":\"Who built it?\",\"score\":1.0}]}\n"
    );
}

#[test]
fn rewrite_multi_turn_sets_are_valid() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "conv.jsonl", CONVERSATIONS);
    ok(&cmqr(
        &[
            "rewrite",
            "--conversations",
            "conv.jsonl",
            "--output",
            "rw.jsonl",
        ],
        dir.path(),
    ));
    let loaded = read_rewrite_file(&dir.path().join("rw.jsonl")).unwrap();
    assert!(loaded.warnings.is_empty(), "{:?}", loaded.warnings);
    let ids: Vec<String> = loaded.value.iter().map(|s| s.query_id()).collect();
    assert_eq!(ids, ["c1_1", "c1_2", "c1_3", "c2_1", "c2_2"]);
    for set in &loaded.value {
        assert!(set.len() <= 10);
        for w in set.rewrites().windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        assert!(set
            .rewrites()
            .iter()
            .all(|r| r.score > 0.0 && r.score <= 1.0));
        if set.turn_index() > 1 {
            assert!(set.len() > 1, "{}", set.query_id());
        }
    }
    // Validating our own output passes it through unchanged.
    let again = ok(&cmqr(
        &[
            "rewrite",
            "--external",
            "rw.jsonl",
            "--conversations",
            "conv.jsonl",
        ],
        dir.path(),
    ));
    assert_eq!(
        again,
        fs::read_to_string(dir.path().join("rw.jsonl")).unwrap()
    );
}

#[test]
fn rewrite_rejects_bad_external_files() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "high.jsonl",
        "{\"conversation_id\":\"c\",\"turn_index\":1,\"rewrites\":[{\"text\":\"x\",\"score\":1.2}]}\n",
    );
    let out = cmqr(&["rewrite", "--external", "high.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("1.2"), "{}", stderr(&out));

    write(
        dir.path(),
        "unsorted.jsonl",
        "{\"conversation_id\":\"c\",\"turn_index\":1,\"rewrites\":[{\"text\":\"x\",\"score\":0.2},{\"text\":\"y\",\"score\":0.4}]}\n",
    );
    assert_eq!(
        cmqr(&["rewrite", "--external", "unsorted.jsonl"], dir.path())
            .status
            .code(),
        Some(2)
    );

    write(dir.path(), "conv.jsonl", CONVERSATIONS);
    write(
        dir.path(),
        "stray.jsonl",
        "{\"conversation_id\":\"c1\",\"turn_index\":9,\"rewrites\":[{\"text\":\"x\",\"score\":0.5}]}\n",
    );
    assert_eq!(
        cmqr(
            &[
                "rewrite",
                "--external",
                "stray.jsonl",
                "--conversations",
                "conv.jsonl"
            ],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}

fn pipeline_fixture(docs: usize) -> TempDir {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "coll.jsonl", &collection(docs));
    write(dir.path(), "conv.jsonl", CONVERSATIONS);
    ok(&cmqr(
        &["index", "--collection", "coll.jsonl", "--index", "idx"],
        dir.path(),
    ));
    ok(&cmqr(
        &[
            "encode",
            "--collection",
            "coll.jsonl",
            "--embeddings",
            "emb.cmqe",
        ],
        dir.path(),
    ));
    ok(&cmqr(
        &[
            "rewrite",
            "--conversations",
            "conv.jsonl",
            "--output",
            "rw.jsonl",
        ],
        dir.path(),
    ));
    dir
}

#[test]
fn sparse_run_shape_and_top_k() {
    let dir = pipeline_fixture(300);
    let run = ok(&cmqr(
        &["retrieve", "--rewrites", "rw.jsonl", "--index", "idx"],
        dir.path(),
    ));
    let blocks = run_lines(&run);
    assert_eq!(
        blocks.keys().collect::<Vec<_>>(),
        ["c1_1", "c1_2", "c1_3", "c2_1", "c2_2"]
    );
    assert!(blocks.values().all(|b| !b.is_empty() && b.len() <= 100));
    assert!(blocks.values().any(|b| b.len() == 100));
    assert!(run.lines().all(|l| l.ends_with(" cmqr-sparse")));

    let small = ok(&cmqr(
        &[
            "retrieve",
            "--rewrites",
            "rw.jsonl",
            "--index",
            "idx",
            "--top-k",
            "5",
        ],
        dir.path(),
    ));
    assert!(run_lines(&small).values().all(|b| b.len() <= 5));

    let again = ok(&cmqr(
        &["retrieve", "--rewrites", "rw.jsonl", "--index", "idx"],
        dir.path(),
    ));
    assert_eq!(run, again);
}

#[test]
fn sparse_n1_equals_single_rewrite_run() {
    let dir = pipeline_fixture(200);
    let n1 = ok(&cmqr(
        &[
            "retrieve",
            "--rewrites",
            "rw.jsonl",
            "--index",
            "idx",
            "--num-rewrites",
            "1",
        ],
        dir.path(),
    ));
    // The same turns with only their best rewrite kept.
    let best: String = fs::read_to_string(dir.path().join("rw.jsonl"))
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            let top = v["rewrites"][0]["text"].clone();
            v["rewrites"] = serde_json::json!([{"text": top, "score": 1.0}]);
            format!("{v}\n")
        })
        .collect();
    write(dir.path(), "best.jsonl", &best);
    let single = ok(&cmqr(
        &["retrieve", "--rewrites", "best.jsonl", "--index", "idx"],
        dir.path(),
    ));
    assert_eq!(n1, single);
    let full = ok(&cmqr(
        &["retrieve", "--rewrites", "rw.jsonl", "--index", "idx"],
        dir.path(),
    ));
    assert_ne!(n1, full);
}

#[test]
fn dense_run_matches_naive_pipeline() {
    let dir = pipeline_fixture(100);
    let run = ok(&cmqr(
        &[
            "retrieve",
            "--mode",
            "dense",
            "--rewrites",
            "rw.jsonl",
            "--embeddings",
            "emb.cmqe",
            "--num-rewrites",
            "4",
        ],
        dir.path(),
    ));
    assert!(run.lines().all(|l| l.ends_with(" cmqr-dense")));
    let got = run_lines(&run);

    let enc = HashProjectionEncoder::default();
    let docs: Vec<(String, Vec<f32>)> = collection(100)
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            let e = enc.encode(v["contents"].as_str().unwrap()).unwrap();
            (
                v["id"].as_str().unwrap().to_owned(),
                e.iter().map(|&x| x as f32).collect(),
            )
        })
        .collect();
    let sets = read_rewrite_file(&dir.path().join("rw.jsonl"))
        .unwrap()
        .value;
    assert_eq!(got.len(), sets.len());
    for set in &sets {
        let mut q = vec![0.0f64; enc.dimension()];
        for r in set.top(4) {
            for (qi, ei) in q.iter_mut().zip(enc.encode(&r.text).unwrap()) {
                *qi += ei * r.score;
            }
        }
        let mut scored: Vec<(String, f64)> = docs
            .iter()
            .map(|(id, row)| {
                let mut s = 0.0f64;
                for i in 0..row.len() {
                    s += row[i] as f64 * q[i];
                }
                (id.clone(), s)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let want = &scored[..100];
        let have = &got[&set.query_id()];
        assert_eq!(have.len(), want.len());
        for (h, w) in have.iter().zip(want) {
            assert_eq!(h.0, w.0);
            assert_eq!(h.1, w.1, "{}", h.0);
        }
    }
}

#[test]
fn dense_dimension_mismatch_is_a_data_error() {
    let dir = pipeline_fixture(20);
    let out = cmqr(
        &[
            "retrieve",
            "--mode",
            "dense",
            "--rewrites",
            "rw.jsonl",
            "--embeddings",
            "emb.cmqe",
            "--hash-dimension",
            "64",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dimension"), "{}", stderr(&out));
    let missing = cmqr(
        &["retrieve", "--rewrites", "rw.jsonl", "--index", "nowhere"],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn evaluate_perfect_run_and_subsets() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "run.txt",
        "a_1 Q0 d1 1 3.0 t\nb_1 Q0 d2 1 2.0 t\nc_1 Q0 d3 1 1.0 t\nz_9 Q0 d3 1 1.0 t\n",
    );
    write(
        dir.path(),
        "qrels.txt",
        "a_1 0 d1 1\nb_1 0 d2 2\nc_1 0 d3 1\n",
    );
    write(
        dir.path(),
        "subsets.txt",
        "a_1 quac\nb_1 nq\nc_1 trec-cast\n",
    );
    let out = cmqr(
        &[
            "evaluate",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--subsets",
            "subsets.txt",
        ],
        dir.path(),
    );
    let v: Value = serde_json::from_str(&ok(&out)).unwrap();
    for key in ["overall", "quac", "nq", "trec-cast"] {
        for m in ["mrr", "map", "recall_at_10"] {
            assert_eq!(v[key][m], 1.0, "{key}.{m}");
        }
    }
    assert_eq!(v["overall"]["query_count"], 3);
    assert_eq!(v["quac"]["query_count"], 1);
    assert!(stderr(&out).contains("z_9"), "{}", stderr(&out));

    let bad = cmqr(
        &["evaluate", "--run", "missing.txt", "--qrels", "qrels.txt"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(3));
}

// Naive full-depth metrics over a scripted 20-query fixture.
#[test]
fn evaluate_matches_reference_on_fixture() {
    let dir = TempDir::new().unwrap();
    let mut run = String::new();
    let mut qrels = String::new();
    let mut subsets = String::new();
    let mut rankings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut judged: BTreeMap<String, HashSet<String>> = BTreeMap::new();
    let labels = ["quac", "nq", "trec-cast"];
    for q in 0..20usize {
        let qid = format!("q{q:02}");
        let depth = 5 + q % 15;
        let ranking: Vec<String> = (0..depth)
            .map(|j| format!("d{}", (q * 7 + j * 3) % 40))
            .collect();
        for (r, pid) in ranking.iter().enumerate() {
            run.push_str(&format!("{qid} Q0 {pid} {} {} fx\n", r + 1, 100 - r));
        }
        let mut rel = HashSet::new();
        for j in 0..(q % 4) {
            let pid = format!("d{}", (q * 5 + j * 13) % 40);
            qrels.push_str(&format!("{qid} 0 {pid} {}\n", 1 + j % 2));
            rel.insert(pid);
        }
        qrels.push_str(&format!("{qid} 0 n{q} 0\n"));
        subsets.push_str(&format!("{qid} {}\n", labels[q % 3]));
        rankings.insert(qid.clone(), ranking);
        judged.insert(qid, rel);
    }
    write(dir.path(), "run.txt", &run);
    write(dir.path(), "qrels.txt", &qrels);
    write(dir.path(), "subsets.txt", &subsets);
    let v: Value = serde_json::from_str(&ok(&cmqr(
        &[
            "evaluate",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--subsets",
            "subsets.txt",
        ],
        dir.path(),
    )))
    .unwrap();

    let mut per: BTreeMap<&str, Vec<[f64; 3]>> = BTreeMap::new();
    for (q, (qid, ranking)) in rankings.iter().enumerate() {
        let rel = &judged[qid];
        if rel.is_empty() {
            continue;
        }
        let mut rr = 0.0;
        let mut hits = 0.0;
        let mut ap = 0.0;
        for (i, pid) in ranking.iter().enumerate() {
            if rel.contains(pid) {
                hits += 1.0;
                ap += hits / (i + 1) as f64;
                if rr == 0.0 {
                    rr = 1.0 / (i + 1) as f64;
                }
            }
        }
        let r10 =
            ranking.iter().take(10).filter(|p| rel.contains(*p)).count() as f64 / rel.len() as f64;
        let m = [rr, ap / rel.len() as f64, r10];
        per.entry("overall").or_default().push(m);
        per.entry(labels[q % 3]).or_default().push(m);
    }
    for (subset, rows) in &per {
        let n = rows.len() as f64;
        assert_eq!(v[subset]["query_count"], rows.len());
        for (k, name) in ["mrr", "map", "recall_at_10"].iter().enumerate() {
            let want = rows.iter().map(|r| r[k]).sum::<f64>() / n;
            let have = v[subset][name].as_f64().unwrap();
            assert!(
                (have - want).abs() < 1e-12,
                "{subset}.{name}: {have} vs {want}"
            );
        }
    }
}
