//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any check fails or overruns its time budget.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dqclean::analysis;
use dqclean::core::aggregate::{aggregate, build_clean_list, AggregationMode, AnnotatorLog};
use dqclean::core::data::{DatasetManifest, Metric, SampleRecord};
use dqclean::core::eval::{auprg, auroc, average_precision, cleaning_delta, DeltaFlag, MetricKind, ScoredBinarySet};
use dqclean::core::protocol::{
    compute_n_clean, sensitivity_sweep, stop_index, AnnotationSession, NextCandidate, Rounding, SessionStatus,
    StoppingParams, Verdict,
};
use dqclean::core::rank::{CandidateRef, IssueRanking, NoiseType, RankedCandidate};
use dqclean::core::stats::{
    cohen_kappa, krippendorff_alpha, paired_permutation_test, speed_up, Alternative, PermutationMode,
};
use dqclean::simulate::{simulate, Script, SimulationOptions};
use dqclean::store::{NewSession, RegisterDataset, SessionSnapshot};
use dqclean_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdicts(bits: &[bool]) -> Vec<Verdict> {
    bits.iter().map(|&b| Verdict::from(b)).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn n_clean_criterion() {
    assert_eq!(compute_n_clean(0.05, 0.05).unwrap(), 58);
    assert_eq!(oracle::n_clean_by_multiplication(0.05, 0.05), 58);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1_000 {
        let p_plus: f64 = rng.random_range(0.001..0.999);
        let p_chance: f64 = rng.random_range(0.001..0.999);
        let n = compute_n_clean(p_plus, p_chance).unwrap();
        let up = (p_plus + rng.random_range(0.0..(0.999 - p_plus))).min(0.999);
        let down = p_chance * rng.random_range(0.01..1.0);
        assert!(compute_n_clean(up, p_chance).unwrap() <= n, "p_plus {p_plus} -> {up}");
        assert!(compute_n_clean(p_plus, down).unwrap() >= n, "p_chance {p_chance} -> {down}");
    }
}

fn toy_ranking(n: usize) -> Arc<IssueRanking> {
    let entries =
        (0..n).map(|i| RankedCandidate { candidate: CandidateRef::single(i), score: 1.0 / (1 + i) as f64 }).collect();
    Arc::new(IssueRanking::from_entries(NoiseType::Irrelevant, entries))
}

fn drive(bits: &[bool], ranking: Arc<IssueRanking>, params: StoppingParams) -> AnnotationSession {
    let (mut s, _) = AnnotationSession::start("s", "a", "toy", ranking, params).unwrap();
    for &b in bits {
        let NextCandidate::Candidate(c) = s.next_candidate() else { break };
        s.submit_answer(c, Verdict::from(b)).unwrap();
    }
    s
}

fn stopping_criterion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pool = 120;
    let ranking = toy_ranking(pool);
    for k in 0..10_000 {
        let n_clean = rng.random_range(1..10u32);
        let p_yes = rng.random_range(0.05..0.6);
        let len = rng.random_range(0..pool);
        let bits: Vec<bool> = (0..len).map(|_| rng.random_bool(p_yes)).collect();
        let expected = oracle::first_clean_window(&bits, n_clean as usize);
        assert_eq!(stop_index(&verdicts(&bits), n_clean as u64), expected, "sequence {k}");
        let params = StoppingParams::new(0.5, 0.5f64.powi(n_clean as i32)).unwrap();
        assert_eq!(params.n_clean(), n_clean as u64);
        let s = drive(&bits, ranking.clone(), params);
        match expected {
            Some(stop) => {
                assert_eq!(s.status(), SessionStatus::StoppedByCriterion);
                assert_eq!(s.verdicts().len(), stop);
            }
            None => assert_eq!(s.verdicts().len(), bits.len()),
        }
    }
    for _ in 0..200 {
        let bits: Vec<bool> = (0..pool).map(|_| rng.random_bool(0.04)).collect();
        let live = drive(&bits, ranking.clone(), StoppingParams::default());
        let point = sensitivity_sweep(&verdicts(&bits), pool as u64, &[(0.05, 0.05)], Rounding::Floor).unwrap()[0];
        assert_eq!(point.annotated, live.verdicts().len());
        assert_eq!(point.confirmed, live.confirmed().count());
        assert_eq!(point.stopped, live.status() == SessionStatus::StoppedByCriterion);
    }
}

fn agreement_criterion() {
    let t = |s: &str| s.chars().map(|c| c == '1').collect::<Vec<bool>>();
    let tables = [("1100", "1000", 0.5), ("1010", "1010", 1.0), ("1100", "0011", -1.0), ("1110", "1100", 0.5)];
    for (a, b, want) in tables {
        let got = cohen_kappa(&verdicts(&t(a)), &verdicts(&t(b))).unwrap();
        assert!(close(got, want, 1e-12), "{a} vs {b}: {got}");
        assert!(close(oracle::kappa_from_table(&t(a), &t(b)).unwrap(), want, 1e-12));
    }
    let worked = [
        vec![Some(Verdict::Yes), Some(Verdict::Yes)],
        vec![Some(Verdict::No), Some(Verdict::No)],
        vec![Some(Verdict::No), Some(Verdict::Yes)],
    ];
    assert!(close(krippendorff_alpha(&worked).unwrap(), 4.0 / 9.0, 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5_000 {
        let units_n = rng.random_range(1..=6);
        let coders = rng.random_range(2..=4);
        let units: Vec<Vec<Option<bool>>> = (0..units_n)
            .map(|_| (0..coders).map(|_| rng.random_bool(0.8).then(|| rng.random_bool(0.5))).collect())
            .collect();
        let as_verdicts: Vec<Vec<Option<Verdict>>> =
            units.iter().map(|u| u.iter().map(|c| c.map(Verdict::from)).collect()).collect();
        match (krippendorff_alpha(&as_verdicts), oracle::alpha_by_definition(&units)) {
            (Ok(a), Some(b)) => assert!(close(a, b, 1e-12), "{units:?}: {a} vs {b}"),
            (Err(_), None) => {}
            (a, b) => panic!("{units:?}: {a:?} vs {b:?}"),
        }
        let n = rng.random_range(1..12);
        let a: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let b: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        match (cohen_kappa(&verdicts(&a), &verdicts(&b)), oracle::kappa_from_table(&a, &b)) {
            (Ok(x), Some(y)) => assert!(close(x, y, 1e-12)),
            (Err(_), None) => {}
            (x, y) => panic!("{a:?} {b:?}: {x:?} vs {y:?}"),
        }
    }
}

fn metric_criterion() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    for n in 2..=8usize {
        for mask in 0u32..(1 << n) {
            let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            if labels.iter().all(|l| *l) || labels.iter().all(|l| !*l) {
                continue;
            }
            for trial in 0..12 {
                let scores: Vec<f64> = match trial {
                    0 => vec![0.5; n],
                    1 => (0..n).map(|i| i as f64).collect(),
                    2..=6 => (0..n).map(|_| rng.random_range(0..4) as f64 / 4.0).collect(),
                    _ => (0..n).map(|_| rng.random::<f64>()).collect(),
                };
                let set = ScoredBinarySet::from_scores(&scores, &labels).unwrap();
                let pairs = [
                    ("auroc", auroc(&set).ok(), oracle::auroc_by_pairs(&scores, &labels)),
                    ("ap", average_precision(&set).ok(), oracle::ap_by_threshold_sweep(&scores, &labels)),
                    ("auprg", auprg(&set).ok(), oracle::auprg_by_threshold_sweep(&scores, &labels)),
                ];
                for (name, got, want) in pairs {
                    match (got, want) {
                        (Some(g), Some(w)) => assert!(close(g, w, 1e-9), "{name} {scores:?} {labels:?}: {g} vs {w}"),
                        (None, None) => {}
                        (g, w) => panic!("{name} {scores:?} {labels:?}: {g:?} vs {w:?}"),
                    }
                }
                if trial == 0 {
                    let prevalence = labels.iter().filter(|l| **l).count() as f64 / n as f64;
                    assert!(close(average_precision(&set).unwrap(), prevalence, 1e-12));
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 5_000);
}

fn permutation_criterion() {
    let p = paired_permutation_test(&[1.0, 2.0, 3.0], Alternative::Greater, PermutationMode::Exhaustive).unwrap();
    assert_eq!((p.p_value, p.extreme, p.denominator), (0.125, 1, 8));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let n = rng.random_range(1..=12);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0f64)).collect();
        let r = paired_permutation_test(&d, Alternative::Greater, PermutationMode::Exhaustive).unwrap();
        assert_eq!(r.denominator, 1 << n);
        assert_eq!((r.extreme, r.denominator), oracle::permutation_count(&d));
        assert_eq!(r.p_value, r.extreme as f64 / r.denominator as f64);
    }
    for _ in 0..10 {
        let d: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..2.0f64)).collect();
        let exact = paired_permutation_test(&d, Alternative::Greater, PermutationMode::Exhaustive).unwrap();
        let mc = PermutationMode::MonteCarlo { draws: 100_000, seed: rng.random() };
        let approx = paired_permutation_test(&d, Alternative::Greater, mc).unwrap();
        assert!(close(exact.p_value, approx.p_value, 0.01), "{} vs {}", exact.p_value, approx.p_value);
    }
}

fn manifest(n: usize) -> DatasetManifest {
    let samples = (0..n).map(|i| SampleRecord::new(format!("img{i:03}"), format!("img{i:03}.jpg"), None)).collect();
    DatasetManifest::new("synthetic", samples).unwrap()
}

fn cleaning_criterion() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1_000 {
        let n = rng.random_range(2..80);
        let m = manifest(n);
        let id = |i: usize| m.samples()[i].id.clone();
        let irr: Vec<String> = (0..rng.random_range(0..6)).map(|_| id(rng.random_range(0..n))).collect();
        let pairs: Vec<(String, String)> = (0..rng.random_range(0..8))
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (id(a), id(b)))
            .collect();
        let r = build_clean_list(&m, AggregationMode::Unanimous, &irr, &pairs, rng.random()).unwrap();
        let kept: BTreeSet<&str> = r.cleaned_ids.iter().map(String::as_str).collect();
        assert!(irr.iter().all(|i| !kept.contains(i.as_str())));
        assert!(pairs.iter().all(|(a, b)| !(kept.contains(a.as_str()) && kept.contains(b.as_str()))));

        let annotators = rng.random_range(2..6);
        let rows = rng.random_range(1..30);
        let cells: Vec<Vec<Option<bool>>> = (0..rows)
            .map(|_| (0..annotators).map(|_| rng.random_bool(0.8).then(|| rng.random_bool(0.4))).collect())
            .collect();
        let logs: Vec<AnnotatorLog> = (0..annotators)
            .map(|a| AnnotatorLog {
                annotator: format!("e{a}"),
                noise_type: NoiseType::Irrelevant,
                verdicts: cells
                    .iter()
                    .enumerate()
                    .filter_map(|(k, r)| r[a].map(|v| (CandidateRef::single(k), Verdict::from(v))))
                    .collect(),
            })
            .collect();
        let maj: BTreeSet<_> = aggregate(&logs, AggregationMode::Majority).unwrap().candidates.into_iter().collect();
        let una: BTreeSet<_> = aggregate(&logs, AggregationMode::Unanimous).unwrap().candidates.into_iter().collect();
        assert!(una.is_subset(&maj));
    }
    let m = manifest(170);
    let r =
        build_clean_list(&m, AggregationMode::Unanimous, &["img010", "img050", "img099"], &[("img001", "img002")], 0)
            .unwrap();
    assert_eq!(r.cleaned_ids.len(), 166);
}

fn delta_criterion() {
    let scores = [0.9, 0.8, 0.75, 0.6, 0.55, 0.4, 0.35, 0.3, 0.2, 0.1];
    let labels = [true, true, false, true, false, true, false, false, true, false];
    let set = ScoredBinarySet::from_scores(&scores, &labels).unwrap();
    for r in cleaning_delta(&set, &BTreeSet::new(), &MetricKind::ALL, 500, 95.0, 9).unwrap() {
        assert_eq!(r.median_delta, 0.0);
        assert_eq!(r.ci, [0.0, 0.0]);
        assert_eq!(r.flag, DeltaFlag::Borderline);
        assert_eq!(r.flag.symbol(), "°");
    }
    assert_eq!(DeltaFlag::from_interval(-1.9, -0.2).symbol(), "*");
    assert_eq!(DeltaFlag::from_interval(-2.5, 0.0).symbol(), "°");
    assert_eq!(DeltaFlag::from_interval(-0.5, 0.7).symbol(), "");
    let removed: BTreeSet<String> = set.items().iter().take(2).map(|i| i.id.clone()).collect();
    let a = cleaning_delta(&set, &removed, &MetricKind::ALL, 500, 95.0, 11).unwrap();
    let b = cleaning_delta(&set, &removed, &MetricKind::ALL, 500, 95.0, 11).unwrap();
    assert_eq!(a, b);
}

fn speed_up_criterion() {
    assert_eq!(NoiseType::Irrelevant.pool_size(170), 170);
    assert_eq!(NoiseType::LabelError.pool_size(170), 170);
    assert_eq!(NoiseType::NearDuplicate.pool_size(170), 14_365);
    let s = speed_up(14_365, 67).unwrap();
    assert!(close(s.factor(), 214.4, 0.05), "{}", s.factor());
    assert!(speed_up(10, 0).is_err());
}

fn new_session(dataset: &str, noise_type: NoiseType, annotator: &str) -> NewSession {
    NewSession {
        dataset: dataset.into(),
        noise_type,
        annotator: annotator.into(),
        p_plus: None,
        p_chance: None,
        rounding: None,
        session_id: None,
    }
}

fn pipeline_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = common::synthetic_corpus(&tmp.path().join("src"));
    let store = common::open_store(&tmp.path().join("data"));
    store
        .register_dataset(&RegisterDataset {
            name: "syn".into(),
            manifest: syn.manifest.clone(),
            embeddings: None,
            baseline: Some(16),
            image_dir: None,
        })
        .unwrap();
    assert_eq!(store.dataset("syn").unwrap().manifest().len(), 60);
    let ds = store.dataset("syn").unwrap();
    let top = |t: NoiseType, k: usize| -> Vec<Vec<String>> {
        store.rank("syn", t, Metric::Cosine).unwrap();
        let r = ds.ranking(t).unwrap().ranking;
        r.candidates().take(k).map(|c| ds.candidate_ids(&c)).collect()
    };
    let irr = top(NoiseType::Irrelevant, 5);
    for o in &syn.outliers {
        assert!(irr.contains(&vec![o.clone()]), "{o} not in {irr:?}");
    }
    let dup: BTreeSet<Vec<String>> = top(NoiseType::NearDuplicate, 2).into_iter().collect();
    let want: BTreeSet<Vec<String>> = syn.duplicates.iter().map(|p| p.to_vec()).collect();
    assert_eq!(dup, want);
    let lab = top(NoiseType::LabelError, 5);
    for s in &syn.swaps {
        assert!(lab.contains(&vec![s.clone()]), "{s} not in {lab:?}");
    }

    let scripts = [
        (NoiseType::Irrelevant, Script::truth(syn.outliers.iter().map(|o| [o.clone()]))),
        (NoiseType::NearDuplicate, Script::truth(syn.duplicates.clone())),
        (NoiseType::LabelError, Script::truth(syn.swaps.iter().map(|s| [s.clone()]))),
    ];
    for (t, script) in &scripts {
        for a in ["ann1", "ann2", "ann3"] {
            simulate(&store, &new_session("syn", *t, a), script, &SimulationOptions::default()).unwrap();
        }
    }
    let report = analysis::clean(&store, "syn", AggregationMode::Unanimous, 5).unwrap();
    assert_eq!(report.cleaned_ids.len(), 56);
    assert_eq!(report.label_error_count, 2);
    let kept: BTreeSet<&str> = report.cleaned_ids.iter().map(String::as_str).collect();
    let all: BTreeSet<&str> = ds.manifest().samples().iter().map(|s| s.id.as_str()).collect();
    let removed: BTreeSet<&str> = all.difference(&kept).copied().collect();
    assert!(syn.outliers.iter().all(|o| removed.contains(o.as_str())));
    for [a, b] in &syn.duplicates {
        assert_eq!(usize::from(removed.contains(a.as_str())) + usize::from(removed.contains(b.as_str())), 1);
    }
    let agg = analysis::aggregate_dataset(&store, "syn", AggregationMode::Unanimous).unwrap();
    let labels = agg.results.iter().find(|r| r.noise_type == NoiseType::LabelError).unwrap();
    let got: BTreeSet<String> = labels.confirmed.iter().flatten().cloned().collect();
    assert_eq!(got, syn.swaps.iter().cloned().collect());
}

/// Answers a 100-event session, then reopens a store from every line prefix
/// of its log (with a torn fragment of the following line) and checks the
/// recovered state and the continuation.
fn crash_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::small_store(tmp.path());
    let script: Vec<Verdict> = (0..99).map(|i| Verdict::from(i % 20 == 0)).collect();
    let mut req = new_session("small", NoiseType::NearDuplicate, "ann");
    req.session_id = Some("crash".into());
    store.create_session(&req).unwrap();
    let mut states = vec![store.snapshot("crash").unwrap()];
    let answer_rest = |store: &dqclean::Store, from: usize, states: Option<&mut Vec<SessionSnapshot>>| {
        let mut states = states;
        for v in &script[from..] {
            let dqclean::store::NextView::Candidate { candidate, .. } = store.next("crash").unwrap() else {
                panic!("session ended early")
            };
            store.answer("crash", &candidate.ids, *v).unwrap();
            if let Some(s) = states.as_deref_mut() {
                s.push(store.snapshot("crash").unwrap());
            }
        }
    };
    answer_rest(&store, 0, Some(&mut states));
    let log_path = store.session_log_path("crash").unwrap();
    let log = fs::read_to_string(&log_path).unwrap();
    let lines: Vec<&str> = log.split_inclusive('\n').collect();
    assert_eq!(lines.len(), 100);
    assert_eq!(states.len(), 100);
    let final_state = states.last().unwrap().session.clone();
    drop(store);

    let datasets = tmp.path().join("data").join("datasets");
    for k in 1..=100 {
        let root = tmp.path().join(format!("crash{k}"));
        common::copy_dir(&datasets, &root.join("datasets"));
        fs::create_dir_all(root.join("sessions")).unwrap();
        let mut content: String = lines[..k].concat();
        if k < 100 {
            let next = lines[k];
            content.push_str(&next[..next.len() / 2]);
        }
        fs::write(root.join("sessions").join("crash.jsonl"), content).unwrap();
        let recovered = common::open_store(&root);
        assert_eq!(recovered.snapshot("crash").unwrap(), states[k - 1], "prefix {k}");
        answer_rest(&recovered, k - 1, None);
        assert_eq!(recovered.snapshot("crash").unwrap().session, final_state, "continuation after {k}");
        drop(recovered);
        let reopened = common::open_store(&root);
        assert_eq!(reopened.snapshot("crash").unwrap().session, final_state);
        drop(reopened);
        fs::remove_dir_all(&root).unwrap();
    }
    kill_cli_mid_session(tmp.path());
}

/// Kills a running `simulate-annotator` process and checks the log on disk
/// replays to a prefix of an uninterrupted run.
fn kill_cli_mid_session(tmp: &Path) {
    let root = tmp.join("data");
    let bin = env!("CARGO_BIN_EXE_dqclean");
    let mut child = std::process::Command::new(bin)
        .args(["--data-dir"])
        .arg(&root)
        .args(["simulate-annotator", "--dataset", "small", "--noise-type", "near_duplicate", "--annotator", "k"])
        .args(["--verdicts", "y,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,y", "--session-id", "killed", "--delay-ms", "20"])
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let log = root.join("sessions").join("killed.jsonl");
    let deadline = Instant::now() + Duration::from_secs(20);
    while fs::read_to_string(&log).map_or(0, |s| s.lines().count()) < 5 {
        assert!(Instant::now() < deadline, "CLI made no progress");
        std::thread::sleep(Duration::from_millis(5));
    }
    child.kill().unwrap();
    child.wait().unwrap();

    let store = common::open_store(&root);
    let recovered = store.snapshot("killed").unwrap().session;
    let n = recovered.verdicts().len();
    assert!(n >= 4, "only {n} answers recovered");
    let mut reference = new_session("small", NoiseType::NearDuplicate, "k");
    reference.session_id = Some("reference".into());
    let script = Script::sequence("y,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,n,y", Verdict::No).unwrap();
    simulate(&store, &reference, &script, &SimulationOptions { max_answers: Some(n), delay: None }).unwrap();
    let expected = store.snapshot("reference").unwrap().session;
    assert_eq!(recovered.verdicts(), expected.verdicts());
    assert_eq!(recovered.status(), expected.status());
    assert_eq!(recovered.streak(), expected.streak());
}

#[test]
fn acceptance() {
    type Check = fn();
    let criteria: [(&str, Duration, Check); 10] = [
        ("stopping constant n_clean = 58 and monotonicity", Duration::from_secs(1), n_clean_criterion),
        (
            "stop index matches brute-force window scan; sweep matches live session",
            Duration::from_secs(10),
            stopping_criterion,
        ),
        ("kappa and alpha match hand tables and definition oracles", Duration::from_secs(30), agreement_criterion),
        (
            "AUROC / AP / AUPRG match exhaustive oracles; AP on constant scores = prevalence",
            Duration::from_secs(120),
            metric_criterion,
        ),
        (
            "permutation p-values exact over 2^n; Monte-Carlo within 0.01",
            Duration::from_secs(30),
            permutation_criterion,
        ),
        (
            "cleaned lists drop confirmed issues; unanimous within majority; 170 -> 166",
            Duration::from_secs(10),
            cleaning_criterion,
        ),
        ("cleaning-delta zero case, flags and seeded determinism", Duration::from_secs(30), delta_criterion),
        ("pool sizes and speed-up 14,365 / 67 = 214.4", Duration::from_secs(1), speed_up_criterion),
        ("synthetic 60-image pipeline removes exactly the planted issues", Duration::from_secs(60), pipeline_criterion),
        ("every prefix of a 100-event log recovers the uninterrupted state", Duration::from_secs(120), crash_criterion),
    ];
    let mut failures = Vec::new();
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let verdict = match (&outcome, elapsed <= budget) {
            (Ok(()), true) => "PASS",
            _ => "FAIL",
        };
        let note = match outcome {
            Err(_) => " (assertion failed)".to_string(),
            Ok(()) if elapsed > budget => format!(" (over budget {budget:?})"),
            Ok(()) => String::new(),
        };
        println!("{verdict}  {name}  [{:.2}s]{note}", elapsed.as_secs_f64());
        if verdict == "FAIL" {
            failures.push(name);
        }
    }
    assert!(failures.is_empty(), "failed: {failures:?}");
}
