//! Acceptance report: one PASS or FAIL line per criterion.
//!
//! Runs without the test harness so the lines always reach the output.
//! Criteria that fail here are also held red by an ordinary test.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use datamation::store::{read_ledger, SharedLedger};
use datamation::{canonical_json, load_table, LoadOptions};
use datamation_core::compile::{translate_op, ActionKind, GroupAxisPolicy, TranslateContext};
use datamation_core::decompose::{decompose_text, eval_metrics, record_feedback, EvalCase};
use datamation_core::layout::{circle_pack, HIGHLIGHT_FILL};
use datamation_core::qdmr::OpKind;
use datamation_core::{
    compile_datamation, execute_pipeline, parse_pipeline, ColumnKind, CompileOptions, DatamationDoc, FeedbackStore,
    Pipeline, RowId, Table,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[allow(dead_code)]
#[path = "../../core/tests/differential.rs"]
mod differential;
#[allow(dead_code, unused_imports)]
#[path = "../../core/tests/layout.rs"]
mod layout;
#[allow(dead_code)]
#[path = "../../core/tests/reorder.rs"]
mod reorder;
#[allow(dead_code, unused_imports)]
#[path = "../../core/tests/square_packing.rs"]
mod square_packing;

const STUDENTS_QUERY: &str = "how many students were born in 2000?";
const CARS_QUERY: &str = "which cars from 1980 have fewer than 6 cylinders and the best mpg?";

/// Criteria known to fail, each with the ordinary test that fails with it.
const KNOWN_RED: [(&str, &str); 1] = [("layout invariants", "datamation-core tests/square_packing.rs")];

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn table(name: &str) -> Table {
    load_table(&fixtures().join(format!("{name}.csv")), &LoadOptions::default()).unwrap()
}

fn script(name: &str) -> Pipeline {
    parse_pipeline(&std::fs::read_to_string(fixtures().join(name)).unwrap()).unwrap()
}

fn action_kinds(doc: &DatamationDoc) -> Vec<Vec<&'static str>> {
    doc.steps
        .iter()
        .map(|s| s.actions.iter().map(|a| a.kind.as_str()).collect())
        .collect()
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

// ------------------------------------------------------------ criteria

fn students_counting() -> Verdict {
    let started = Instant::now();
    let t = table("students");
    let p = decompose_text(STUDENTS_QUERY, &t, &FeedbackStore::new()).map_err(|e| e.to_string())?;
    let opts = CompileOptions {
        query: Some(STUDENTS_QUERY.to_string()),
        ..CompileOptions::default()
    };
    let doc = compile_datamation(&p, &t, &opts).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();

    let expected = "#1 = SELECT(\"students\")\n#2 = PROJECT(\"birth_year\", #1)\n#3 = COMPARATIVE(#1, #2, \"= 2000\")\n#4 = AGGREGATE(count, #3)\n";
    ensure(p.to_script() == expected, || format!("pipeline was\n{}", p.to_script()))?;
    let ops: Vec<OpKind> = p.steps().iter().map(|s| s.kind()).collect();
    ensure(
        ops == [OpKind::Select, OpKind::Project, OpKind::Comparative, OpKind::Aggregate],
        || format!("operators {ops:?}"),
    )?;
    let actions = action_kinds(&doc);
    let wanted: Vec<Vec<&str>> = vec![
        vec!["select", "layout"],
        vec!["x_axis"],
        vec!["filter", "highlight", "hide"],
        vec!["aggregate", "annotate"],
    ];
    ensure(actions == wanted, || format!("actions {actions:?}"))?;
    ensure(doc.keyframes().count() == 4, || format!("{} keyframes", doc.keyframes().count()))?;
    let count = doc.steps[3].result.value;
    ensure(count == Some(3.0), || format!("final count {count:?}"))?;
    ensure(elapsed < Duration::from_millis(100), || format!("took {elapsed:?}"))?;
    Ok(format!("4 steps, 4 keyframes, count 3, {elapsed:.2?}"))
}

/// The operator-to-action table, written out independently of the
/// translator: operator, argument kind, expected action kinds.
fn action_table() -> Verdict {
    let header: Vec<String> = ["name", "score", "major", "year"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = [
        ["Ann", "81", "CS", "2000"],
        ["Bob", "64", "EE", "1999"],
        ["Cid", "92", "CS", "2000"],
        ["Dee", "57", "ME", "2001"],
        ["Eve", "73", "EE", "2000"],
        ["Fay", "88", "CS", "1998"],
    ]
    .iter()
    .map(|r| r.iter().map(|s| s.to_string()).collect())
    .collect();
    let kinds: BTreeMap<String, ColumnKind> = [
        ("name", ColumnKind::Text),
        ("score", ColumnKind::Numerical),
        ("major", ColumnKind::Categorical),
        ("year", ColumnKind::Temporal),
    ]
    .iter()
    .map(|(c, k)| (c.to_string(), *k))
    .collect();
    let t = Table::from_strings("t", &header, &rows, &kinds).unwrap();

    use GroupAxisPolicy::{Adaptive, TableDefault};
    let select = "#1 = SELECT(\"t\")\n";
    let cs = "#2 = COMPARATIVE(#1, \"major\", \"= CS\")\n";
    let score = "#2 = PROJECT(\"score\", #1)\n";
    let rows_table: Vec<(&str, String, GroupAxisPolicy, &[&str])> = vec![
        ("SELECT", select.to_string(), Adaptive, &["select", "layout"]),
        ("PROJECT numerical", format!("{select}{score}"), Adaptive, &["size"]),
        ("PROJECT categorical", format!("{select}#2 = PROJECT(\"major\", #1)\n"), Adaptive, &["color"]),
        ("PROJECT temporal", format!("{select}#2 = PROJECT(\"year\", #1)\n"), Adaptive, &["x_axis"]),
        ("COMPARATIVE numerical", format!("{select}#2 = COMPARATIVE(#1, \"score\", \"> 70\")\n"), Adaptive, &["filter", "highlight", "hide"]),
        ("COMPARATIVE categorical", format!("{select}{cs}"), Adaptive, &["filter", "highlight", "hide"]),
        ("COMPARATIVE temporal", format!("{select}#2 = COMPARATIVE(#1, \"year\", \"= 2000\")\n"), Adaptive, &["filter", "highlight", "hide"]),
        ("SUPERLATIVE numerical", format!("{select}#2 = SUPERLATIVE(#1, \"score\", max)\n"), Adaptive, &["filter", "highlight", "hide"]),
        ("SUPERLATIVE temporal", format!("{select}#2 = SUPERLATIVE(#1, \"year\", min)\n"), Adaptive, &["filter", "highlight", "hide"]),
        ("AGGREGATE count", format!("{select}#2 = AGGREGATE(count, #1)\n"), Adaptive, &["aggregate", "annotate"]),
        ("AGGREGATE numerical", format!("{select}{score}#3 = AGGREGATE(avg, #2)\n"), Adaptive, &["aggregate", "annotate"]),
        ("GROUP temporal key", format!("{select}#2 = GROUP(count, #1, \"year\")\n"), Adaptive, &["x_axis", "annotate"]),
        ("GROUP categorical key", format!("{select}#2 = GROUP(count, #1, \"major\")\n"), TableDefault, &["y_axis", "annotate"]),
        ("GROUP numerical values", format!("{select}{score}#3 = GROUP(avg, #2, \"major\")\n"), TableDefault, &["y_axis", "annotate"]),
        ("UNION", format!("{select}{cs}#3 = UNION(#2, #1)\n"), Adaptive, &["union"]),
        ("DISCARD", format!("{select}{cs}#3 = DISCARD(#1, #2)\n"), Adaptive, &["filter", "hide"]),
        ("INTERSECTION", format!("{select}{cs}#3 = INTERSECTION(#1, #2)\n"), Adaptive, &["intersect", "hide"]),
        ("SORT numerical", format!("{select}#2 = SORT(#1, \"score\", desc)\n"), Adaptive, &["sort"]),
        ("SORT temporal", format!("{select}#2 = SORT(#1, \"year\", asc)\n"), Adaptive, &["sort"]),
        ("SORT categorical", format!("{select}#2 = SORT(#1, \"major\", asc)\n"), Adaptive, &["sort"]),
    ];

    let last_step_actions = |text: &str, policy: GroupAxisPolicy| -> Vec<&'static str> {
        let p = parse_pipeline(text).unwrap();
        let values = execute_pipeline(&p, &t).unwrap();
        let index = p.len() - 1;
        let ctx = TranslateContext {
            table: &t,
            values: &values,
            index,
            x_bound: None,
            policy,
        };
        translate_op(&p.steps()[index], &ctx).actions.iter().map(|a| a.kind.as_str()).collect()
    };

    let mut covered = BTreeSet::new();
    for (label, text, policy, expected) in &rows_table {
        let got = last_step_actions(text, *policy);
        ensure(got == *expected, || format!("{label}: expected {expected:?}, got {got:?}"))?;
        covered.insert(label.split(' ').next().unwrap());
    }
    ensure(covered.len() == 10, || format!("only {} operators covered", covered.len()))?;

    // The two documented departures, asserted explicitly.
    ensure(ActionKind::parse("fill") == Some(ActionKind::Highlight), || "fill is not an alias of highlight".into())?;
    let adaptive = last_step_actions(&format!("{select}#2 = GROUP(count, #1, \"major\")\n"), Adaptive);
    ensure(adaptive == ["x_axis", "annotate"], || format!("categorical GROUP by default gave {adaptive:?}"))?;
    Ok(format!(
        "{} cells across 10 operators; fill is highlight; categorical GROUP defaults to x",
        rows_table.len()
    ))
}

fn differential_execution() -> Verdict {
    let a = differential::run_differential();
    ensure(a.compared >= 1000, || format!("only {} pipelines compared", a.compared))?;
    ensure(a.elapsed < Duration::from_secs(60), || format!("took {:?}", a.elapsed))?;
    Ok(format!(
        "{} pipelines agree with the oracle, {} agree on an empty extremum, {:.2?}",
        a.compared, a.empty_extrema, a.elapsed
    ))
}

fn reorder_property() -> Verdict {
    let (orderable, broken) = reorder::run_two_hundred_cases();
    ensure(orderable == 100 && broken == 100, || format!("{orderable} orderable, {broken} broken"))?;
    Ok("100 orderable pipelines reordered, 100 non-orderable refused".into())
}

fn layout_invariants() -> Verdict {
    let golden = layout::check_golden_frames();
    let (docs, fuzzed) = layout::check_fuzzed_frames();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..500 {
        let n = rng.random_range(1..=60);
        let radii: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..40.0)).collect();
        let c = circle_pack(&radii);
        if let Some((i, j, depth)) = layout::first_overlap(&c) {
            return Err(format!("random packing {case}: circles {i} and {j} overlap by {depth}"));
        }
    }
    for r in [0.5, 1.0, 9.6, 24.0, 28.8, 1e3] {
        let c = circle_pack(&[r, r]);
        let d = ((c[0].x - c[1].x).powi(2) + (c[0].y - c[1].y).powi(2)).sqrt();
        ensure(d == 2.0 * r, || format!("equal circles of radius {r} sit {d} apart"))?;
    }
    let pack_summary = format!(
        "no overlaps in {golden} golden frames, {fuzzed} frames of {docs} fuzzed documents and 500 random packings; tangency exact"
    );
    let violations = square_packing::aspect_violations(10_000);
    ensure(violations.is_empty(), || {
        let list: Vec<String> = violations.iter().map(|(n, r)| format!("n = {n} gives {r}")).collect();
        format!("grid aspect ratio outside [1, 2): {} ({pack_summary})", list.join(", "))
    })?;
    Ok(pack_summary)
}

struct CorpusLine {
    dataset: String,
    query: String,
    gold: Pipeline,
}

fn corpus() -> Vec<CorpusLine> {
    std::fs::read_to_string(fixtures().join("corpus.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            CorpusLine {
                dataset: v["dataset"].as_str().unwrap().to_string(),
                query: v["query"].as_str().unwrap().to_string(),
                gold: parse_pipeline(v["gold"].as_str().unwrap()).unwrap(),
            }
        })
        .collect()
}

fn calibration() -> Verdict {
    let lines = corpus();
    ensure(lines.len() == 50, || format!("{} corpus lines", lines.len()))?;
    let tables: BTreeMap<String, Table> = lines
        .iter()
        .map(|l| l.dataset.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|d| (d.clone(), table(&d)))
        .collect();
    let cases: Vec<EvalCase<'_>> = lines
        .iter()
        .map(|l| EvalCase {
            query: &l.query,
            table: &tables[&l.dataset],
            gold: &l.gold,
        })
        .collect();
    let report = eval_metrics(&cases, &FeedbackStore::new());
    ensure(!report.success.is_vacuous() && !report.retain.is_vacuous(), || "vacuous rates".into())?;
    ensure(report.success.value() == 1.0, || format!("success {:?}", report.success))?;
    ensure(report.retain.value() == 1.0, || format!("retain {:?}", report.retain))?;

    // Recording every correction a second time changes nothing, in memory
    // and through the on-disk ledger.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("feedback.jsonl");
    let ledger = SharedLedger::open(&path).unwrap();
    let mut once = FeedbackStore::new();
    for round in 0..2 {
        for i in &report.failing {
            let (case, empty) = (&cases[*i], FeedbackStore::new());
            let original = decompose_text(case.query, case.table, &empty).unwrap_or_else(|_| case.gold.clone());
            if round == 0 {
                record_feedback(&mut once, case.query, case.table, &original, case.gold, 1).unwrap();
            }
            ledger.record(case.query, case.table, &original, case.gold, 2 + round).unwrap();
        }
    }
    let mut twice = once.clone();
    for i in &report.failing {
        let case = &cases[*i];
        let original = decompose_text(case.query, case.table, &FeedbackStore::new()).unwrap_or_else(|_| case.gold.clone());
        record_feedback(&mut twice, case.query, case.table, &original, case.gold, 9).unwrap();
    }
    ensure(once == twice, || "recording the corrections twice changed the store".into())?;
    let (reloaded, skipped) = read_ledger(&path).unwrap();
    ensure(skipped.is_empty(), || format!("skipped ledger lines {skipped:?}"))?;
    for case in &cases {
        let a = decompose_text(case.query, case.table, &once).map_err(|e| e.to_string())?;
        let b = decompose_text(case.query, case.table, &reloaded).map_err(|e| e.to_string())?;
        let c = decompose_text(case.query, case.table, &ledger.snapshot()).map_err(|e| e.to_string())?;
        ensure(a == b && b == c, || format!("ledger replay changed {:?}", case.query))?;
    }
    Ok(format!(
        "exact match {}/{}, success {}/{}, retain {}/{}, ledger idempotent",
        report.exact_match.hits,
        report.exact_match.total,
        report.success.hits,
        report.success.total,
        report.retain.hits,
        report.retain.total
    ))
}

fn golden_text(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("golden").join(name)).unwrap()
}

fn stable(p: &Pipeline, t: &Table, golden: &str) -> Result<(), String> {
    let a = canonical_json(&compile_datamation(p, t, &CompileOptions::default()).unwrap()).unwrap();
    let b = canonical_json(&compile_datamation(p, t, &CompileOptions::default()).unwrap()).unwrap();
    ensure(a == b, || format!("{golden} differs between runs"))?;
    ensure(a == golden_text(golden), || format!("{golden} drifted from the stored golden"))
}

fn visible(doc: &DatamationDoc, frame: usize) -> BTreeSet<RowId> {
    doc.steps[frame].keyframe.visible_ids().into_iter().collect()
}

fn scenarios() -> Verdict {
    let flights = table("flights");
    let doc = compile_datamation(&script("flights_max_passengers.qdmr"), &flights, &CompileOptions::default()).map_err(|e| e.to_string())?;
    ensure(doc.steps.len() == 6, || format!("flights: {} frames", doc.steps.len()))?;
    let country = flights.column_index("country").unwrap();
    let us: BTreeSet<RowId> = flights
        .row_ids()
        .filter(|id| flights.rows()[id.index()].cells[country].text() == Some("United States"))
        .collect();
    let all: BTreeSet<RowId> = flights.row_ids().collect();
    let f = |k: usize| &doc.steps[k].keyframe;
    ensure(visible(&doc, 0) == all && f(0).axes.is_empty(), || "frame 1 is not all flights".into())?;
    ensure(
        f(1).axes.iter().any(|a| a.attribute == "country") && f(1).annotations.len() == 3,
        || "frame 2 is not grouped by country".into(),
    )?;
    let highlighted: BTreeSet<RowId> = f(2).units.iter().filter(|u| u.fill == HIGHLIGHT_FILL).map(|u| u.unit_id).collect();
    ensure(highlighted == us, || format!("frame 3 highlights {highlighted:?}"))?;
    ensure(visible(&doc, 3) == us, || "frame 4 does not hide the other countries".into())?;
    let radii: BTreeSet<u64> = f(4).units.iter().filter(|u| u.is_visible()).map(|u| u.radius.to_bits()).collect();
    ensure(
        action_kinds(&doc)[4] == ["size"] && radii.len() == 2,
        || "frame 5 does not size by passengers".into(),
    )?;
    ensure(
        f(5).annotations.iter().any(|a| a.text.contains("240")),
        || "frame 6 has no maximum tooltip".into(),
    )?;
    stable(&script("flights_max_passengers.qdmr"), &flights, "flights_max_passengers.json")?;

    let cars = table("cars");
    let mut ledger = FeedbackStore::new();
    let before = decompose_text(CARS_QUERY, &cars, &ledger).map_err(|e| e.to_string())?;
    let first = compile_datamation(&before, &cars, &CompileOptions::default()).map_err(|e| e.to_string())?;
    ensure(first.steps.len() == 6, || format!("cars: {} frames before feedback", first.steps.len()))?;
    let corrected = script("cars_1980_corrected.qdmr");
    record_feedback(&mut ledger, CARS_QUERY, &cars, &before, &corrected, 1).map_err(|e| e.to_string())?;
    let after = decompose_text(CARS_QUERY, &cars, &ledger).map_err(|e| e.to_string())?;
    let second = compile_datamation(&after, &cars, &CompileOptions::default()).map_err(|e| e.to_string())?;
    ensure(second.steps.len() == 8, || format!("cars: {} frames after feedback", second.steps.len()))?;
    stable(&script("cars_1980.qdmr"), &cars, "cars_1980.json")?;
    stable(&corrected, &cars, "cars_1980_corrected.json")?;
    stable(&script("students_count.qdmr"), &table("students"), "students_count.json")?;
    Ok("flights 6 frames in caption order; cars 6 frames, then 8 after feedback; canonical JSON byte-stable".into())
}

// ------------------------------------------------------------- runner

fn message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panicked".to_string())
}

fn first_line(text: &str) -> &str {
    text.lines().next().unwrap_or("")
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: [Criterion; 7] = [
        ("students counting end to end", students_counting),
        ("operator to action table", action_table),
        ("differential execution", differential_execution),
        ("continuity reordering", reorder_property),
        ("layout invariants", layout_invariants),
        ("calibration contract", calibration),
        ("scenario goldens", scenarios),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| Err(message(p.as_ref())));
        match verdict {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                println!("FAIL  {name}: {}", first_line(&why));
                failed.push(name);
            }
        }
    }
    println!(
        "SKIP  benchmark scores of a trained decomposer and user-study results: not reproducible by a deterministic grammar; excluded"
    );
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed.len(), criteria.len());
    let mut unexplained = false;
    for name in &failed {
        match KNOWN_RED.iter().find(|(criterion, _)| criterion == name) {
            Some((_, test)) => println!("acceptance: {name} stays red in {test}"),
            None => unexplained = true,
        }
    }
    if unexplained {
        std::process::exit(1);
    }
}
