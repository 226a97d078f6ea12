use std::cell::Cell;
use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rustc_hash::FxHashMap;

use super::compiled::{BitState, CompiledTask};
use super::heuristic::{HMax, Heuristic};
use super::{Planner, PlannerError};
use crate::pddl::{Plan, Task};

struct Node {
    parent: Option<usize>,
    action: usize,
    g: u32,
    /// Heuristic value, or a lower bound on it until `exact`.
    h: u32,
    exact: bool,
}

/// Optimal A* over the compiled task. Ties on f go to fewer unsatisfied
/// goals, then to the deeper node, then to the earliest generated.
pub struct AStarPlanner {
    heuristic: Box<dyn Heuristic>,
}

impl Default for AStarPlanner {
    fn default() -> Self {
        AStarPlanner::new(HMax)
    }
}

impl AStarPlanner {
    pub fn new(h: impl Heuristic + 'static) -> Self {
        AStarPlanner { heuristic: Box::new(h) }
    }

    pub fn heuristic_name(&self) -> &'static str {
        self.heuristic.name()
    }

    /// Action indices of an optimal plan. On timeout the shortest goal path
    /// generated so far, if any, is returned as the incumbent.
    pub fn search(&self, ct: &CompiledTask, timeout: Duration) -> Result<Vec<usize>, SearchFailure> {
        if !ct.goal_reachable {
            return Err(SearchFailure::Unsolvable);
        }
        let mut buffers = BUFFERS.take();
        let result = self.search_with(ct, timeout, &mut buffers);
        if buffers.nodes.capacity() <= KEEP_NODES {
            buffers.clear();
            BUFFERS.set(buffers);
        }
        result
    }

    fn search_with(&self, ct: &CompiledTask, timeout: Duration, buffers: &mut Buffers) -> Result<Vec<usize>, SearchFailure> {
        let start = Instant::now();
        let unsat = |s: &BitState| ct.goal.iter().filter(|&&g| !s.contains(g)).count() as u32;
        let Buffers {
            nodes,
            states,
            seen,
            open,
        } = buffers;

        let Some(h0) = self.heuristic.estimate(ct, &ct.init) else {
            return Err(SearchFailure::Unsolvable);
        };
        nodes.push(Node {
            parent: None,
            action: usize::MAX,
            g: 0,
            h: h0,
            exact: true,
        });
        states.push(ct.init.clone());
        seen.insert(ct.init.clone(), (0, 0));
        open.push(Reverse((h0, unsat(&ct.init), Reverse(0u32), 0usize)));

        let mut incumbent: Option<(u32, usize)> = None;
        let mut expansions = 0u64;

        // successors are queued with h(parent) - 1, which a consistent
        // heuristic never exceeds, and evaluated when first popped
        while let Some(Reverse((f, u, _, id))) = open.pop() {
            let g = nodes[id].g;
            if seen[&states[id]].1 != id {
                continue;
            }
            if ct.is_goal(&states[id]) {
                return Ok(extract(nodes, id));
            }
            if !nodes[id].exact {
                nodes[id].exact = true;
                let Some(h) = self.heuristic.estimate(ct, &states[id]) else {
                    continue;
                };
                nodes[id].h = h;
                if g + h > f {
                    open.push(Reverse((g + h, u, Reverse(g), id)));
                    continue;
                }
            }
            expansions += 1;
            if expansions.is_multiple_of(1024) && start.elapsed() > timeout {
                return Err(SearchFailure::Timeout(incumbent.map(|(_, n)| extract(nodes, n))));
            }
            let state = states[id].clone();
            let h = nodes[id].h.saturating_sub(1);
            let w = state.words().len();
            for (ai, (a, pre)) in ct.actions.iter().zip(ct.pre_words.chunks_exact(w)).enumerate() {
                if !pre.iter().zip(state.words()).all(|(p, s)| p & !s == 0) {
                    continue;
                }
                let next = ct.successor(a, &state);
                let g2 = g + 1;
                let nid = nodes.len();
                match seen.entry(next.clone()) {
                    Entry::Occupied(mut e) => {
                        if e.get().0 <= g2 {
                            continue;
                        }
                        e.insert((g2, nid));
                    }
                    Entry::Vacant(e) => {
                        e.insert((g2, nid));
                    }
                }
                let u = unsat(&next);
                if u == 0 && incumbent.is_none_or(|(c, _)| g2 < c) {
                    incumbent = Some((g2, nid));
                }
                nodes.push(Node {
                    parent: Some(id),
                    action: ai,
                    g: g2,
                    h,
                    exact: false,
                });
                states.push(next);
                open.push(Reverse((g2 + h, u, Reverse(g2), nid)));
            }
        }
        Err(SearchFailure::Unsolvable)
    }
}

type OpenItem = Reverse<(u32, u32, Reverse<u32>, usize)>;

/// Search storage kept per thread between calls.
#[derive(Default)]
struct Buffers {
    nodes: Vec<Node>,
    states: Vec<BitState>,
    // state -> (best g, node id)
    seen: FxHashMap<BitState, (u32, usize)>,
    open: BinaryHeap<OpenItem>,
}

impl Buffers {
    fn clear(&mut self) {
        self.nodes.clear();
        self.states.clear();
        self.seen.clear();
        self.open.clear();
    }
}

const KEEP_NODES: usize = 1 << 16;

thread_local! {
    static BUFFERS: Cell<Buffers> = Cell::default();
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchFailure {
    Unsolvable,
    Timeout(Option<Vec<usize>>),
}

fn extract(nodes: &[Node], mut id: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while let Some(p) = nodes[id].parent {
        out.push(nodes[id].action);
        id = p;
    }
    out.reverse();
    out
}

impl Planner for AStarPlanner {
    fn solve(&self, task: &Task, timeout: Duration) -> Result<Plan, PlannerError> {
        let ct = CompiledTask::compile(task);
        let to_plan = |ids: Vec<usize>| Plan::new(ids.into_iter().map(|i| ct.ground_action(i)).collect());
        match self.search(&ct, timeout) {
            Ok(ids) => Ok(to_plan(ids)),
            Err(SearchFailure::Timeout(inc)) => Err(PlannerError::Timeout {
                incumbent: inc.map(to_plan),
            }),
            Err(SearchFailure::Unsolvable) => Err(PlannerError::Unsolvable),
        }
    }
}
