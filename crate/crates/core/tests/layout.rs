//! Geometric invariants of packings and of compiled keyframes.

use std::collections::{BTreeMap, BTreeSet};

use datamation_core::compile::ActionKind;
use datamation_core::dataset::Cell;
use datamation_core::layout::{
    arrange, circle_pack, grid_layout, ArrangeInput, AxisBinding, AxisScale, Circle, Keyframe, TransitionPlan,
};
use datamation_core::{compile_datamation, parse_pipeline, ColumnKind, CompileOptions, DatamationDoc, RowId, Table};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

pub fn first_overlap(circles: &[Circle]) -> Option<(usize, usize, f64)> {
    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            let (a, b) = (circles[i], circles[j]);
            let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            if d < a.r + b.r - TOL {
                return Some((i, j, a.r + b.r - d));
            }
        }
    }
    None
}

fn visible_circles(k: &Keyframe) -> Vec<Circle> {
    k.units
        .iter()
        .filter(|u| u.opacity > 0.0)
        .map(|u| Circle::new(u.x, u.y, u.radius))
        .collect()
}

#[test]
fn equal_pair_is_tangent_at_exactly_two_radii() {
    for r in [0.5, 1.0, 7.2, 9.6, 24.0, 28.8, 1e3] {
        let c = circle_pack(&[r, r]);
        let d = ((c[0].x - c[1].x).powi(2) + (c[0].y - c[1].y).powi(2)).sqrt();
        assert_eq!(d, 2.0 * r, "radius {r}");
    }
}

#[test]
fn packing_is_centered_on_its_enclosing_circle() {
    let c = circle_pack(&[3.0, 1.0, 2.0, 2.5, 1.5]);
    let hull = datamation_core::layout::enclose(&c);
    assert!(hull.x.abs() < 1e-9 && hull.y.abs() < 1e-9);
    for circle in &c {
        let d = (circle.x.powi(2) + circle.y.powi(2)).sqrt();
        assert!(d + circle.r <= hull.r + TOL);
    }
}

#[test]
fn grid_cells_hold_default_units_apart() {
    for n in 0..200 {
        let pos = grid_layout(n, 24.0);
        let circles: Vec<Circle> = pos.iter().map(|(x, y)| Circle::new(*x, *y, 9.6)).collect();
        assert_eq!(first_overlap(&circles), None, "n = {n}");
        let distinct: BTreeSet<(i64, i64)> = pos.iter().map(|(x, y)| (*x as i64, *y as i64)).collect();
        assert_eq!(distinct.len(), n);
    }
}

fn number(v: f64) -> Cell {
    Cell::Number {
        value: v,
        text: format!("{v}"),
    }
}

proptest! {
    #[test]
    fn circle_pack_never_overlaps(radii in prop::collection::vec(0.3f64..40.0, 1..80)) {
        let c = circle_pack(&radii);
        prop_assert_eq!(c.len(), radii.len());
        for (circle, r) in c.iter().zip(&radii) {
            prop_assert_eq!(circle.r, *r);
        }
        prop_assert_eq!(first_overlap(&c), None);
    }

    #[test]
    fn circle_pack_is_deterministic(radii in prop::collection::vec(0.3f64..40.0, 1..40)) {
        prop_assert_eq!(circle_pack(&radii), circle_pack(&radii));
    }

    #[test]
    fn bands_are_ordered_and_disjoint(
        units in prop::collection::vec((0u8..6, 0.3f64..30.0), 1..60),
        packed in any::<bool>(),
    ) {
        let ids: Vec<RowId> = (0..units.len() as u32).map(RowId).collect();
        let cells: Vec<Cell> = units.iter().map(|(k, _)| number(f64::from(*k))).collect();
        let radii: Vec<f64> = units.iter().map(|(_, r)| if packed { *r } else { 9.6 }).collect();
        let out = arrange(&ArrangeInput {
            ids: &ids,
            radii: &radii,
            packed,
            x: Some(AxisBinding { attribute: "k", kind: ColumnKind::Numerical, cells: &cells, scale: AxisScale::Band }),
            y: None,
            cell: 24.0,
        });
        let circles: Vec<Circle> = out.positions.iter().zip(&radii).map(|((x, y), r)| Circle::new(*x, *y, *r)).collect();
        prop_assert_eq!(first_overlap(&circles), None);
        // Every unit of a smaller key lies wholly left of every unit of a larger key.
        let mut span: BTreeMap<u8, (f64, f64)> = BTreeMap::new();
        for ((k, _), c) in units.iter().zip(&circles) {
            let e = span.entry(*k).or_insert((f64::INFINITY, f64::NEG_INFINITY));
            *e = (e.0.min(c.x - c.r), e.1.max(c.x + c.r));
        }
        let spans: Vec<(f64, f64)> = span.values().copied().collect();
        for w in spans.windows(2) {
            prop_assert!(w[0].1 <= w[1].0 + TOL, "bands {:?}", spans);
        }
        let ticks: Vec<f64> = out.axes[0].ticks.iter().map(|t| t.position).collect();
        prop_assert!(ticks.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(ticks.len(), span.len());
    }
}

// ------------------------------------------------------- compiled frames

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

fn csv_table(name: &str, text: &str) -> Table {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Table::from_strings(name, &header, &rows, &BTreeMap::new()).unwrap()
}

fn golden_docs() -> Vec<DatamationDoc> {
    [
        ("students", "students_count.qdmr"),
        ("flights", "flights_max_passengers.qdmr"),
        ("cars", "cars_1980.qdmr"),
        ("cars", "cars_1980_corrected.qdmr"),
    ]
    .iter()
    .map(|(table, script)| {
        let t = csv_table(table, &fixture(&format!("{table}.csv")));
        let p = parse_pipeline(&fixture(script)).unwrap();
        compile_datamation(&p, &t, &CompileOptions::default()).unwrap()
    })
    .collect()
}

/// Units that appear or disappear between frames are named by a stage of
/// a matching action.
fn conserved(prev: &Keyframe, next: &Keyframe, plan: &TransitionPlan) -> Result<(), String> {
    let vis = |k: &Keyframe| -> BTreeSet<RowId> { k.units.iter().filter(|u| u.opacity > 0.0).map(|u| u.unit_id).collect() };
    let (before, after) = (vis(prev), vis(next));
    let staged = |id: &RowId, kinds: &[ActionKind]| {
        plan.stages.iter().any(|s| kinds.contains(&s.action) && s.units.contains(id))
    };
    for id in after.difference(&before) {
        if !staged(id, &[ActionKind::Select, ActionKind::Union, ActionKind::Filter]) {
            return Err(format!("unit {id} appears without a select, union or filter stage"));
        }
    }
    for id in before.difference(&after) {
        if !staged(id, &[ActionKind::Hide, ActionKind::Filter, ActionKind::Intersect]) {
            return Err(format!("unit {id} vanishes without a hide, filter or intersect stage"));
        }
    }
    Ok(())
}

fn check_doc(doc: &DatamationDoc, label: &str) {
    for k in doc.keyframes() {
        if let Some((i, j, depth)) = first_overlap(&visible_circles(k)) {
            panic!("{label} frame {}: units {i} and {j} overlap by {depth}", k.index);
        }
        let ids: BTreeSet<RowId> = k.units.iter().map(|u| u.unit_id).collect();
        assert_eq!(ids.len(), k.units.len(), "{label}: duplicate unit ids");
        for a in &k.annotations {
            assert!(a.targets.iter().all(|t| ids.contains(t)), "{label}: dangling annotation");
        }
    }
    assert_eq!(doc.transitions.len() + 1, doc.steps.len());
    for (t, w) in doc.transitions.iter().zip(doc.steps.windows(2)) {
        conserved(&w[0].keyframe, &w[1].keyframe, t).unwrap_or_else(|e| panic!("{label}: {e}"));
    }
}

/// Checks every frame of the fixture scenarios; returns the frame count.
pub fn check_golden_frames() -> usize {
    let docs = golden_docs();
    for (i, doc) in docs.iter().enumerate() {
        check_doc(doc, &format!("golden {i}"));
    }
    docs.iter().map(|d| d.steps.len()).sum()
}

#[test]
fn golden_frames_hold_the_invariants() {
    assert_eq!(check_golden_frames(), 4 + 6 + 6 + 8);
}

#[test]
fn compiling_twice_gives_identical_documents() {
    assert_eq!(golden_docs(), golden_docs());
}

fn random_cars(rng: &mut ChaCha8Rng) -> Table {
    let origins = ["usa", "japan", "europe", "korea"];
    let n = rng.random_range(1..=30);
    let header: Vec<String> = ["name", "mpg", "cylinders", "year", "origin"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            vec![
                format!("car {i}"),
                format!("{:.1}", rng.random_range(90..450) as f64 / 10.0),
                ["4", "6", "8"][rng.random_range(0..3)].to_string(),
                rng.random_range(1970..1983).to_string(),
                origins[rng.random_range(0..4)].to_string(),
            ]
        })
        .collect();
    let kinds = [("name".to_string(), ColumnKind::Text)].into_iter().collect();
    Table::from_strings("cars", &header, &rows, &kinds).unwrap()
}

fn random_continuous_script(rng: &mut ChaCha8Rng) -> String {
    let steps = rng.random_range(1..=6);
    let mut lines = vec!["SELECT(\"cars\")".to_string()];
    let mut last_projection: Option<usize> = None;
    while lines.len() < steps {
        let prev = lines.len();
        let line = match rng.random_range(0..9) {
            0 => {
                last_projection = Some(prev + 1);
                format!("PROJECT(\"{}\", #{prev})", ["mpg", "origin", "year", "cylinders"][rng.random_range(0..4)])
            }
            1 => format!("GROUP(count, #{prev}, \"{}\")", ["origin", "year", "cylinders"][rng.random_range(0..3)]),
            2 => format!("COMPARATIVE(#{prev}, \"mpg\", \"> {}\")", rng.random_range(10..40)),
            3 => format!("SUPERLATIVE(#{prev}, \"mpg\", {})", ["max", "min"][rng.random_range(0..2)]),
            4 => format!("SORT(#{prev}, \"mpg\", {})", ["asc", "desc"][rng.random_range(0..2)]),
            5 => format!("COMPARATIVE(#{prev}, \"origin\", \"= {}\")", ["usa", "japan"][rng.random_range(0..2)]),
            6 => format!("UNION(#{prev}, #1)"),
            7 if prev >= 2 => format!("DISCARD(#{}, #{prev})", rng.random_range(1..prev)),
            _ => match last_projection {
                Some(p) if p == prev => format!("AGGREGATE(avg, #{prev})"),
                _ => format!("AGGREGATE(count, #{prev})"),
            },
        };
        let scalar = line.starts_with("AGGREGATE");
        lines.push(line);
        if scalar {
            break;
        }
    }
    lines.iter().enumerate().map(|(i, l)| format!("#{} = {l}\n", i + 1)).collect()
}

/// Checks every frame of seeded random pipelines over random tables;
/// returns the number of compiled documents and of frames.
pub fn check_fuzzed_frames() -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut compiled, mut frames) = (0, 0);
    for case in 0..300 {
        let t = random_cars(&mut rng);
        let script = random_continuous_script(&mut rng);
        let p = parse_pipeline(&script).unwrap();
        let Ok(doc) = compile_datamation(&p, &t, &CompileOptions::default()) else {
            continue;
        };
        check_doc(&doc, &format!("case {case}\n{script}"));
        assert_eq!(doc, compile_datamation(&p, &t, &CompileOptions::default()).unwrap());
        compiled += 1;
        frames += doc.steps.len();
    }
    (compiled, frames)
}

#[test]
fn fuzzed_frames_hold_the_invariants() {
    let (compiled, _) = check_fuzzed_frames();
    assert!(compiled >= 250, "only {compiled} pipelines compiled");
}
