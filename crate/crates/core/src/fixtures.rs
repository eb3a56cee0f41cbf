//! Small reference systems used by tests, the CLI and benchmarks.

use crate::engine::{ActionQueue, Request};
use crate::formula::parse_formula;
use crate::model::{Model, SystemState, ValidationOptions};

pub const EXAMPLE1_FORMULAS: [&str; 4] = [
    "v1 & v2 & (~v3 | v5 | ~v4)",
    "(~v5 | ~v3) & ~v6",
    "v7 & (~v8 | ~v6)",
    "(v8 | v5 | ~v9) & v2 & v1",
];

pub const EXAMPLE1_PARTITION: [(&str, &[&str]); 5] = [
    ("a1", &["v1", "v7", "v8"]),
    ("a2", &["v3"]),
    ("a3", &["v2", "v6"]),
    ("a4", &["v4", "v5"]),
    ("a5", &["v9"]),
];

/// Requests in arrival order: agent, variable, new value.
pub const EXAMPLE1_QUEUE: [(&str, &str, bool); 4] = [
    ("a1", "v1", true),
    ("a2", "v3", false),
    ("a4", "v4", false),
    ("a3", "v6", false),
];

/// Nine variables split over five agents, four critical formulas, and a
/// secure state with only `v1` and `v5` false.
pub fn example1() -> (Model, SystemState) {
    let model = Model::new(
        (1..=9).map(|i| format!("v{i}").into()),
        EXAMPLE1_PARTITION
            .iter()
            .map(|(a, vs)| ((*a).into(), vs.iter().map(|&v| v.into()).collect())),
        EXAMPLE1_FORMULAS
            .iter()
            .map(|f| parse_formula(f).expect("fixture formula"))
            .collect(),
        ValidationOptions::default(),
    )
    .expect("fixture model");
    let state = model
        .state(0, (1..=9).map(|i| (format!("v{i}"), i != 1 && i != 5)))
        .expect("fixture state");
    (model, state)
}

pub fn example1_queue(model: &Model) -> ActionQueue {
    let mut q = ActionQueue::new();
    for (a, v, b) in EXAMPLE1_QUEUE {
        q.enqueue(model, Request::new(a, v, b)).expect("fixture request");
    }
    q
}

/// Two agents each owning one of `A`, `B`, with the single critical
/// formula `A xor B`.
pub fn xor_model() -> Model {
    Model::new(
        ["A".into(), "B".into()],
        [("a1".into(), vec!["A".into()]), ("a2".into(), vec!["B".into()])],
        vec![parse_formula("(~A & B) | (A & ~B)").expect("fixture formula")],
        ValidationOptions::default(),
    )
    .expect("fixture model")
}

/// Two agents each owning one of `A`, `B`, with critical formula `A & B`.
pub fn and_model() -> Model {
    Model::new(
        ["A".into(), "B".into()],
        [("a1".into(), vec!["A".into()]), ("a2".into(), vec!["B".into()])],
        vec![parse_formula("A & B").expect("fixture formula")],
        ValidationOptions::default(),
    )
    .expect("fixture model")
}
