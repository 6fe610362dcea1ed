use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn wsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsp"))
        .args(args)
        .env_remove("WSP_CACHE_DIR")
        .output()
        .expect("wsp runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_running_example_with_every_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixture("running_example.json");
    for algorithm in ["pattern-enum", "backtrack", "bruteforce"] {
        let plan = dir.path().join(format!("{algorithm}.json"));
        let out = wsp(&[
            "solve",
            path_str(&inst),
            "--algorithm",
            algorithm,
            "--plan-out",
            path_str(&plan),
        ]);
        assert_eq!(code(&out), 10, "{out:?}");
        assert_eq!(stdout(&out), "SAT\n");
        let check = wsp(&["verify", path_str(&inst), path_str(&plan)]);
        assert_eq!(code(&check), 0);
    }
}

#[test]
fn solve_prints_plan_without_plan_out() {
    let out = wsp(&["solve", path_str(&fixture("running_example.json"))]);
    assert_eq!(code(&out), 10);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("SAT"));
    assert!(lines.next().unwrap().starts_with("{\"assignment\":["));
    assert!(String::from_utf8_lossy(&out.stderr).contains("patterns_visited="));
}

#[test]
fn unauthorisable_step_is_unsat() {
    for algorithm in ["pattern-enum", "backtrack", "bruteforce"] {
        let out = wsp(&[
            "solve",
            path_str(&fixture("s6_unauthorisable.json")),
            "--algorithm",
            algorithm,
        ]);
        assert_eq!(code(&out), 20);
        assert_eq!(stdout(&out), "UNSAT\n");
    }
}

#[test]
fn tiny_time_budget_is_exceeded() {
    let dir = tempfile::tempdir().unwrap();
    let k = 14;
    let auth: Vec<Vec<usize>> = (0..k).map(|_| (0..k - 1).collect()).collect();
    let doc = serde_json::json!({
        "k": k,
        "n": k - 1,
        "auth": auth,
        "constraints": [{"kind": "at_least", "r": k, "scope": (0..k).collect::<Vec<_>>()}],
    });
    let inst = dir.path().join("hard.json");
    fs::write(&inst, doc.to_string()).unwrap();
    let out = wsp(&[
        "solve",
        path_str(&inst),
        "--algorithm",
        "pattern-enum",
        "--max-millis",
        "1",
    ]);
    assert_eq!(code(&out), 30);
    assert_eq!(stdout(&out), "BUDGET_EXCEEDED\n");
}

#[test]
fn unreadable_instance_is_an_error() {
    let out = wsp(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn verify_outcomes() {
    let inst = fixture("running_example.json");
    let ok = wsp(&["verify", path_str(&inst), path_str(&fixture("plan1.json"))]);
    assert_eq!(code(&ok), 0);
    assert_eq!(stdout(&ok), "valid\n");

    let bad = wsp(&["verify", path_str(&inst), path_str(&fixture("constant_plan.json"))]);
    assert_eq!(code(&bad), 2);
    assert!(stdout(&bad).contains("SoD(s1,s2)"), "{}", stdout(&bad));

    let short = wsp(&["verify", path_str(&inst), path_str(&fixture("truncated_plan.json"))]);
    assert_eq!(code(&short), 1);
}

#[test]
fn verify_names_unauthorised_users() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(&plan, r#"{"assignment":[0,1,0,3,2,7]}"#).unwrap();
    let out = wsp(&["verify", path_str(&fixture("running_example.json")), path_str(&plan)]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout(&out), "invalid: u8 is not authorised for s6\n");
}

#[test]
fn generate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = wsp(&[
            "generate", "--k", "8", "--n", "80", "--am3", "8", "--sod", "12", "--seed", "1", "--out-dir",
            path_str(dir.path()),
        ]);
        assert_eq!(code(&out), 0, "{out:?}");
    }
    let name = "k8-n80-sod12-am38-sual0-wl0-ada0-seed1.json";
    let first = fs::read(a.path().join(name)).unwrap();
    assert_eq!(first, fs::read(b.path().join(name)).unwrap());
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(doc["k"], 8);
    assert_eq!(doc["constraints"].as_array().unwrap().len(), 20);
    assert_eq!(doc["meta"]["seed"], 1);
}

#[test]
fn generate_requires_k() {
    let out = wsp(&["generate", "--n", "80"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&wsp(&["--help"])), 0);
    assert_eq!(code(&wsp(&["solve", "--help"])), 0);
    assert_eq!(code(&wsp(&["--version"])), 0);
    assert_eq!(code(&wsp(&["frobnicate"])), 1);
}

#[test]
fn generate_family_uses_cache() {
    let out_dir = tempfile::tempdir().unwrap();
    let cache = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_wsp"))
            .args([
                "generate", "--family", "wsp", "--k", "8", "--n", "80", "--seed", "1", "--count", "10", "--samples",
                "20", "--jobs", "4", "--out-dir",
            ])
            .arg(out_dir.path())
            .env("WSP_CACHE_DIR", cache.path())
            .output()
            .unwrap()
    };
    let out = run();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 10);
    assert!(cache.path().join("sod-k8-n80.json").exists());
    let files: Vec<_> = fs::read_dir(out_dir.path()).unwrap().collect();
    assert_eq!(files.len(), 10);
    let again = run();
    assert_eq!(stdout(&again), stdout(&out));
}

fn encode(repr: &str, format: &str, out: &Path) -> Output {
    wsp(&[
        "encode",
        path_str(&fixture("running_example.json")),
        "--repr",
        repr,
        "--format",
        format,
        "--out",
        path_str(out),
    ])
}

#[test]
fn pbpb_opb_row_count_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model.opb");
    assert_eq!(code(&encode("pbpb", "opb", &out)), 0);
    let text = fs::read_to_string(&out).unwrap();

    let auth: [&[usize]; 6] = [&[0, 1], &[1, 2], &[0, 2], &[2, 3], &[2, 3, 4, 7], &[4, 5, 6]];
    let k = auth.len();
    let mut linking = 0;
    for s in 0..k {
        for t in s + 1..k {
            let common = auth[s].iter().filter(|u| auth[t].contains(u)).count();
            linking += 3 * common + (auth[s].len() - common) + (auth[t].len() - common);
        }
    }
    // exactly-one, symmetry, diagonal, transitivity, linking, 4 SoD + 1 BoD
    let rows = k + k * (k - 1) / 2 + k + 2 * k * (k - 1) * (k - 2) + linking + 5;
    let vars = auth.iter().map(|a| a.len()).sum::<usize>() + k * k;
    let header = format!("* #variable= {vars} #constraint= {rows}");
    assert_eq!(text.lines().next().unwrap(), header);
    assert_eq!(text.lines().count(), rows + 1);

    let map = fs::read_to_string(dir.path().join("model.opb.map")).unwrap();
    assert_eq!(map.lines().count(), vars);
    assert_eq!(map.lines().next(), Some("x_0_0 1"));
}

#[test]
fn encode_is_deterministic_and_rejects_bad_pairs() {
    let dir = tempfile::tempdir().unwrap();
    for (repr, format) in [("udpb", "opb"), ("udpb", "dimacs"), ("pbpb", "dimacs"), ("cs", "json")] {
        let a = dir.path().join(format!("{repr}-a.{format}"));
        let b = dir.path().join(format!("{repr}-b.{format}"));
        assert_eq!(code(&encode(repr, format, &a)), 0);
        assert_eq!(code(&encode(repr, format, &b)), 0);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
    let bad = dir.path().join("bad");
    assert_eq!(code(&encode("cs", "opb", &bad)), 1);
    assert_eq!(code(&encode("udpb", "json", &bad)), 1);
    assert!(!bad.exists());
}

#[test]
fn inspect_reports_work_bounds() {
    let out = wsp(&["inspect", path_str(&fixture("running_example.json"))]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("non_ui 0\n"));
    assert!(text.contains("bell 203\n"));
    assert!(text.contains("work_bound 203\n"));
    assert!(text.contains("constraint SoD(s1,s2) ui bound 1"));

    let dir = tempfile::tempdir().unwrap();
    let doc = serde_json::json!({
        "k": 3,
        "n": 4,
        "auth": [[0, 1, 2, 3], [0, 1, 2, 3], [0, 1, 2, 3]],
        "constraints": [
            {"kind": "wl", "scope": [0, 1], "teams": [[0, 1], [2, 3]]},
            {"kind": "wl", "scope": [1, 2], "teams": [[0, 2], [1, 3]]},
            {"kind": "ada", "s1": 0, "s2": 2, "u1": [0], "u2": [1]},
        ],
    });
    let inst = dir.path().join("non_ui.json");
    fs::write(&inst, doc.to_string()).unwrap();
    let out = wsp(&["inspect", path_str(&inst), "--json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["non_ui"], 3);
    assert_eq!(report["family_bound"], "8");
    assert_eq!(report["work_bound"], "40");
}

#[test]
fn bench_writes_rows_and_medians() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = wsp(&[
        "bench",
        "--k",
        "5..6",
        "--n",
        "10k",
        "--seeds",
        "3",
        "--sod",
        "3",
        "--algorithm",
        "backtrack,pattern-enum",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "k,n,family,seed,algorithm,verdict,millis,patterns_visited,nodes_expanded"
    );
    // 2 k values x 3 seeds x 2 algorithms, then 2 x 2 medians
    assert_eq!(lines.len(), 1 + 12 + 4);
    assert!(lines[1].starts_with("5,50,wsp,"));
    assert_eq!(lines.iter().filter(|l| l.contains(",median,")).count(), 4);
    assert!(lines[13..].iter().all(|l| l.contains(",median,")));
}

#[test]
fn calibrate_prints_counts() {
    let cache = tempfile::tempdir().unwrap();
    let out = wsp(&[
        "calibrate",
        "--k",
        "6",
        "--n",
        "60",
        "--samples",
        "20",
        "--cache-dir",
        path_str(cache.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["family"], "wsp");
    assert!(report["sod"].as_u64().unwrap() <= 15);
    assert_eq!(report["spec"]["am3"], 6);
}
