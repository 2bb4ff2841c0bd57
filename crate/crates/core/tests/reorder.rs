//! Continuity reordering against a brute-force search over all step orders.

use datamation_core::compile::{reorder_steps, ReorderError};
use datamation_core::qdmr::{parse_steps, RefPolicy};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One step as the indices (zero-based) of the steps it reads, plus its
/// operator template with `{}` standing for those references.
#[derive(Debug, Clone)]
struct Step {
    reads: Vec<usize>,
    template: &'static str,
}

fn render(steps: &[Step]) -> String {
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut text = s.template.to_string();
            for r in &s.reads {
                text = text.replacen("{}", &format!("#{}", r + 1), 1);
            }
            format!("#{} = {text}\n", i + 1)
        })
        .collect()
}

/// Places the steps in `order` (new position k holds old step order[k]).
fn permute(steps: &[Step], order: &[usize]) -> Vec<Step> {
    let mut position = vec![0; steps.len()];
    for (new, old) in order.iter().enumerate() {
        position[*old] = new;
    }
    order
        .iter()
        .map(|old| Step {
            reads: steps[*old].reads.iter().map(|r| position[*r]).collect(),
            template: steps[*old].template,
        })
        .collect()
}

fn continuous(steps: &[Step]) -> bool {
    steps
        .iter()
        .enumerate()
        .all(|(i, s)| s.reads.iter().all(|r| *r < i) && (i == 0 || s.reads.contains(&(i - 1))))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Tries every order.
fn brute_force_orderable(steps: &[Step]) -> bool {
    let mut order: Vec<usize> = (0..steps.len()).collect();
    loop {
        if continuous(&permute(steps, &order)) {
            return true;
        }
        if !next_permutation(&mut order) {
            return false;
        }
    }
}

const ONE: [&str; 4] = [
    "PROJECT(\"a\", {})",
    "COMPARATIVE({}, \"a\", \"= 1\")",
    "SORT({}, \"a\", asc)",
    "GROUP(count, {}, \"a\")",
];
const TWO: [&str; 3] = ["UNION({}, {})", "DISCARD({}, {})", "INTERSECTION({}, {})"];

/// A random dependency graph in topological order: a SELECT followed by
/// steps reading one or two earlier steps.
fn random_dag(rng: &mut ChaCha8Rng, max: usize) -> Vec<Step> {
    let n = rng.random_range(2..=max);
    let mut steps = vec![Step {
        reads: vec![],
        template: "SELECT(\"t\")",
    }];
    for i in 1..n {
        if i >= 2 && rng.random_bool(0.35) {
            let a = rng.random_range(0..i);
            let mut b = rng.random_range(0..i);
            if b == a {
                b = (a + 1) % i;
            }
            steps.push(Step {
                reads: vec![a, b],
                template: TWO[rng.random_range(0..TWO.len())],
            });
        } else {
            let src = if rng.random_bool(0.6) { i - 1 } else { rng.random_range(0..i) };
            steps.push(Step {
                reads: vec![src],
                template: ONE[rng.random_range(0..ONE.len())],
            });
        }
    }
    steps
}

/// A pipeline no order can make continuous: two steps that read only the
/// same step can never both follow it.
fn broken_dag(rng: &mut ChaCha8Rng) -> Vec<Step> {
    let mut steps = random_dag(rng, 5);
    let k = rng.random_range(0..steps.len());
    for _ in 0..2 {
        steps.push(Step {
            reads: vec![k],
            template: ONE[rng.random_range(0..ONE.len())],
        });
    }
    steps
}

fn check(case: usize, steps: &[Step], rng: &mut ChaCha8Rng) -> bool {
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.shuffle(rng);
    let shuffled = permute(steps, &order);
    let script = render(&shuffled);
    let ops = parse_steps(&script, RefPolicy::AllowForward).unwrap();
    let expected = brute_force_orderable(&shuffled);
    match reorder_steps(&ops) {
        Ok(out) => {
            assert!(expected, "case {case}: reordered a pipeline the oracle cannot order\n{script}");
            assert_eq!(out.len(), ops.len());
            for (i, op) in out.iter().enumerate() {
                let refs: Vec<usize> = op.refs().iter().map(|r| r.0).collect();
                assert!(refs.iter().all(|r| *r <= i), "case {case}: forward reference\n{script}");
                assert!(i == 0 || refs.contains(&i), "case {case}: step {} skips its predecessor", i + 1);
            }
            let mut before: Vec<String> = ops.iter().map(|o| o.kind().to_string()).collect();
            let mut after: Vec<String> = out.iter().map(|o| o.kind().to_string()).collect();
            before.sort();
            after.sort();
            assert_eq!(before, after, "case {case}: operators changed");
            true
        }
        Err(ReorderError::NoContinuousOrder { .. }) => {
            assert!(!expected, "case {case}: missed an order the oracle finds\n{script}");
            false
        }
        Err(e) => panic!("case {case}: unexpected {e}\n{script}"),
    }
}

/// The seeded suite of 100 orderable and 100 non-orderable pipelines.
/// Returns the two counts; panics on the first wrong answer.
pub fn run_two_hundred_cases() -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let (mut orderable, mut broken, mut case) = (0, 0, 0);
    while orderable < 100 {
        let dag = random_dag(&mut rng, 7);
        if brute_force_orderable(&dag) {
            assert!(check(case, &dag, &mut rng));
            orderable += 1;
            case += 1;
        }
    }
    while broken < 100 {
        let dag = broken_dag(&mut rng);
        assert!(!brute_force_orderable(&dag), "construction produced an orderable pipeline");
        assert!(!check(case, &dag, &mut rng));
        broken += 1;
        case += 1;
    }
    assert_eq!(case, 200);
    (orderable, broken)
}

#[test]
fn two_hundred_case_suite() {
    assert_eq!(run_two_hundred_cases(), (100, 100));
}

#[test]
fn random_graphs_agree_with_brute_force_either_way() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..300 {
        let dag = random_dag(&mut rng, 7);
        check(case, &dag, &mut rng);
    }
}

#[test]
fn cycles_are_reported_as_cycles() {
    let ops = parse_steps(
        "#1 = SELECT(\"t\")\n#2 = COMPARATIVE(#3, \"a\", \"= 1\")\n#3 = SORT(#2, \"a\", asc)\n",
        RefPolicy::AllowForward,
    )
    .unwrap();
    assert_eq!(reorder_steps(&ops), Err(ReorderError::Cycle { steps: vec![2, 3] }));
}
