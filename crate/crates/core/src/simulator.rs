//! Step-by-step plan execution: traces, executability, validity and the
//! last executable action (LEA).

use serde::{Deserialize, Serialize};

use crate::pddl::{Atom, GroundAction, Plan, ProblemModel, Unresolvable};
pub use crate::pddl::State;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimulationError {
    #[error("action {action} cannot be executed: {reason}")]
    UnresolvableAction { action: String, reason: Unresolvable },
    #[error("action {action} is not applicable; unmet: {}", format_atoms(.missing))]
    NotApplicable { action: String, missing: Vec<Atom> },
}

fn format_atoms(atoms: &[Atom]) -> String {
    atoms.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// Why execution stopped. `index` is 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Failure {
    Unresolvable { index: usize, reason: Unresolvable },
    UnmetPreconditions { index: usize, missing: Vec<Atom> },
}

impl Failure {
    pub fn index(&self) -> usize {
        match self {
            Failure::Unresolvable { index, .. } | Failure::UnmetPreconditions { index, .. } => *index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationResult {
    /// `trace[0]` is the initial state, then one state per executed action.
    pub trace: Vec<State>,
    /// Number of actions executed before the first failure.
    pub lea: usize,
    pub executable: bool,
    pub goal_reached: bool,
    pub failure: Option<Failure>,
}

impl SimulationResult {
    pub fn valid(&self) -> bool {
        self.executable && self.goal_reached
    }

    pub fn final_state(&self) -> &State {
        self.trace.last().expect("trace always holds the initial state")
    }
}

fn grounding_of(action: &GroundAction) -> Result<&crate::pddl::Grounding, SimulationError> {
    action.grounding().ok_or_else(|| SimulationError::UnresolvableAction {
        action: action.to_string(),
        reason: action.unresolved_reason().cloned().unwrap_or(Unresolvable::UnknownAction),
    })
}

pub fn applicable(state: &State, action: &GroundAction) -> Result<bool, SimulationError> {
    Ok(state.satisfies(&grounding_of(action)?.preconditions))
}

/// `(state \ del) ∪ add`, after checking preconditions.
pub fn apply(state: &State, action: &GroundAction) -> Result<State, SimulationError> {
    let g = grounding_of(action)?;
    let missing: Vec<Atom> = g
        .preconditions
        .iter()
        .filter(|p| !state.contains(p))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(SimulationError::NotApplicable {
            action: action.to_string(),
            missing,
        });
    }
    let mut next = state.clone();
    effects(&mut next, g);
    Ok(next)
}

fn effects(state: &mut State, g: &crate::pddl::Grounding) {
    for d in &g.del_effects {
        state.remove(d);
    }
    for a in &g.add_effects {
        state.insert(a.clone());
    }
}

/// Executes the longest executable prefix of `plan` from the problem's
/// initial state. Failures are reported in the result, never as errors.
pub fn simulate(plan: &Plan, problem: &ProblemModel) -> SimulationResult {
    let mut trace = vec![problem.init.clone()];
    let mut failure = None;
    for (index, action) in plan.iter().enumerate() {
        let current = trace.last().expect("non-empty trace");
        match apply(current, action) {
            Ok(next) => trace.push(next),
            Err(SimulationError::UnresolvableAction { reason, .. }) => {
                failure = Some(Failure::Unresolvable { index, reason });
                break;
            }
            Err(SimulationError::NotApplicable { missing, .. }) => {
                failure = Some(Failure::UnmetPreconditions { index, missing });
                break;
            }
        }
    }
    let lea = trace.len() - 1;
    let executable = failure.is_none();
    let goal_reached = problem.goal_satisfied(trace.last().expect("non-empty trace"));
    SimulationResult {
        trace,
        lea,
        executable,
        goal_reached,
        failure,
    }
}

/// Same verdict as `simulate(plan, problem).valid()` without keeping the trace.
pub fn is_valid(plan: &Plan, problem: &ProblemModel) -> bool {
    let mut state = problem.init.clone();
    for action in plan.iter() {
        match action.grounding() {
            Some(g) if state.satisfies(&g.preconditions) => effects(&mut state, g),
            _ => return false,
        }
    }
    problem.goal_satisfied(&state)
}

/// One state per line in canonical form.
pub fn dump_trace(trace: &[State]) -> String {
    let mut out = String::new();
    for s in trace {
        out.push_str(&s.canonical());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_plan, parse_problem, Grounding, Task};

    fn task() -> Task {
        let d = parse_domain(include_str!("../fixtures/blocksworld/domain.pddl")).unwrap();
        let p = parse_problem(include_str!("../fixtures/blocksworld/instance-10.pddl"), &d).unwrap();
        Task::new(d, p)
    }

    fn plan(t: &Task, text: &str) -> Plan {
        parse_plan(text, t).unwrap()
    }

    #[test]
    fn unstack_a_c_not_applicable_at_init() {
        let t = task();
        assert!(!applicable(&t.problem.init, &t.action("unstack", &["a", "c"])).unwrap());
        assert!(applicable(&t.problem.init, &t.action("unstack", &["b", "c"])).unwrap());
    }

    #[test]
    fn empty_preconditions_always_applicable() {
        let a = GroundAction::resolved(
            "noop".into(),
            vec![],
            Grounding {
                preconditions: vec![],
                add_effects: vec![],
                del_effects: vec![],
            },
        );
        assert!(applicable(&State::new(), &a).unwrap());
        assert_eq!(apply(&State::new(), &a).unwrap(), State::new());
    }

    #[test]
    fn unresolvable_action_is_an_error_for_applicable() {
        let t = task();
        let a = t.action("fly", &["a"]);
        assert!(matches!(
            applicable(&t.problem.init, &a),
            Err(SimulationError::UnresolvableAction { .. })
        ));
    }

    #[test]
    fn apply_unstack_b_c() {
        let t = task();
        let next = apply(&t.problem.init, &t.action("unstack", &["b", "c"])).unwrap();
        assert!(next.contains(&Atom::new("holding", ["b"])));
        assert!(next.contains(&Atom::new("clear", ["c"])));
        assert!(!next.contains(&Atom::new("on", ["b", "c"])));
        assert!(!next.contains(&Atom::new("handempty", [])));
        assert!(next.contains(&Atom::new("ontable", ["a"])));
    }

    #[test]
    fn apply_reports_missing_atoms() {
        let t = task();
        match apply(&t.problem.init, &t.action("unstack", &["a", "c"])) {
            Err(SimulationError::NotApplicable { missing, .. }) => {
                assert_eq!(missing, vec![Atom::new("on", ["a", "c"])]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reverse_apply_restores_state() {
        let t = task();
        let a = t.action("unstack", &["b", "c"]);
        let g = a.grounding().unwrap();
        let next = apply(&t.problem.init, &a).unwrap();
        let reverse = GroundAction::resolved(
            "reverse".into(),
            vec![],
            Grounding {
                preconditions: vec![],
                add_effects: g.del_effects.clone(),
                del_effects: g.add_effects.clone(),
            },
        );
        assert_eq!(apply(&next, &reverse).unwrap(), t.problem.init);
    }

    #[test]
    fn llm_plan_fails_at_first_action() {
        let t = task();
        let r = simulate(&plan(&t, include_str!("../fixtures/blocksworld/instance-10.llm.plan")), &t.problem);
        assert_eq!(r.lea, 0);
        assert_eq!(r.trace, vec![t.problem.init.clone()]);
        assert!(!r.executable);
        assert!(!r.valid());
        assert_eq!(r.failure.as_ref().map(Failure::index), Some(0));
    }

    #[test]
    fn ground_truth_is_valid() {
        let t = task();
        let r = simulate(&plan(&t, include_str!("../fixtures/blocksworld/instance-10.gt.plan")), &t.problem);
        assert_eq!(r.lea, 6);
        assert!(r.executable && r.valid());
        assert_eq!(r.trace.len(), 7);
    }

    #[test]
    fn empty_plan() {
        let t = task();
        let r = simulate(&Plan::default(), &t.problem);
        assert_eq!((r.lea, r.executable, r.valid()), (0, true, false));
        let mut trivial = t.problem.clone();
        trivial.goal = [Atom::new("ontable", ["a"])].into_iter().collect();
        assert!(is_valid(&Plan::default(), &trivial));
    }

    #[test]
    fn hallucinated_action_stops_simulation() {
        let t = task();
        let r = simulate(&plan(&t, "(unstack b c)\n(teleport b)\n(put-down b)"), &t.problem);
        assert_eq!(r.lea, 1);
        assert!(matches!(r.failure, Some(Failure::Unresolvable { index: 1, .. })));
    }

    #[test]
    fn trace_dump_is_sorted() {
        let t = task();
        let dump = dump_trace(std::slice::from_ref(&t.problem.init));
        assert_eq!(
            dump,
            "(clear a) (clear b) (handempty) (on b c) (ontable a) (ontable c)\n"
        );
    }
}
