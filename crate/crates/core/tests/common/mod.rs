#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::PathBuf;

use itertools::Itertools;
use plan_eval::pddl::{parse_domain, parse_plan, parse_problem, Atom, DomainModel, GroundAction, Plan, State, Task};
use plan_eval::simulator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn bw_domain() -> DomainModel {
    parse_domain(&fixture("blocksworld/domain.pddl")).unwrap()
}

pub fn load_task(domain: &str, problem: &str) -> Task {
    let d = parse_domain(&fixture(domain)).unwrap();
    let p = parse_problem(&fixture(problem), &d).unwrap();
    Task::new(d, p)
}

pub fn instance10() -> Task {
    load_task("blocksworld/domain.pddl", "blocksworld/instance-10.pddl")
}

pub fn plan(text: &str, task: &Task) -> Plan {
    parse_plan(text, task).unwrap()
}

pub fn gt10(task: &Task) -> Plan {
    plan(&fixture("blocksworld/instance-10.gt.plan"), task)
}

pub fn pi0_10(task: &Task) -> Plan {
    plan(&fixture("blocksworld/instance-10.llm.plan"), task)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every type-correct ground action of the task.
pub fn ground_all(task: &Task) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in &task.domain.schemas {
        let pools: Vec<Vec<String>> = schema
            .params
            .iter()
            .map(|p| task.objects_of_type(&p.ty).into_iter().map(String::from).collect())
            .collect();
        for args in pools.iter().map(|p| p.iter().cloned()).multi_cartesian_product() {
            out.push(task.ground(schema, &args).unwrap());
        }
        if pools.is_empty() {
            out.push(task.ground(schema, &[]).unwrap());
        }
    }
    out
}

/// Breadth-first distances from `init` over the explicit state space.
pub fn bfs_distances(actions: &[GroundAction], init: &State) -> HashMap<State, usize> {
    let mut dist = HashMap::from([(init.clone(), 0)]);
    let mut queue = VecDeque::from([init.clone()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        for a in actions {
            if simulator::applicable(&s, a).unwrap() {
                let n = simulator::apply(&s, a).unwrap();
                if !dist.contains_key(&n) {
                    dist.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    dist
}

/// Length of a shortest plan, by exhaustive search.
pub fn bfs_cost(task: &Task) -> Option<usize> {
    let dist = bfs_distances(&ground_all(task), &task.problem.init);
    dist.iter()
        .filter(|(s, _)| s.satisfies(&task.problem.goal))
        .map(|(_, d)| *d)
        .min()
}

/// All arrangements of `blocks` into towers, each listed bottom to top.
pub fn bw_configs(blocks: &[&str]) -> Vec<Vec<Vec<String>>> {
    let mut configs: Vec<Vec<Vec<String>>> = vec![Vec::new()];
    for b in blocks {
        let mut next = Vec::new();
        for c in &configs {
            let mut fresh = c.clone();
            fresh.push(vec![b.to_string()]);
            next.push(fresh);
            for t in 0..c.len() {
                for pos in 0..=c[t].len() {
                    let mut v = c.clone();
                    v[t].insert(pos, b.to_string());
                    next.push(v);
                }
            }
        }
        configs = next;
    }
    configs
}

/// `on`/`ontable` atoms of a configuration.
pub fn config_atoms(towers: &[Vec<String>]) -> BTreeSet<Atom> {
    let mut atoms = BTreeSet::new();
    for t in towers {
        atoms.insert(Atom::new("ontable", [t[0].as_str()]));
        for w in t.windows(2) {
            atoms.insert(Atom::new("on", [w[1].as_str(), w[0].as_str()]));
        }
    }
    atoms
}

/// Hand-empty state of a configuration.
pub fn config_state(towers: &[Vec<String>]) -> State {
    let mut s: State = config_atoms(towers).into_iter().collect();
    for t in towers {
        s.insert(Atom::new("clear", [t.last().unwrap().as_str()]));
    }
    s.insert(Atom::new("handempty", Vec::<&str>::new()));
    s
}

pub fn bw_problem_text(blocks: &[&str], init: &[Vec<String>], goal: &BTreeSet<Atom>) -> String {
    let init: String = config_state(init).atoms().iter().map(|a| a.to_string()).join(" ");
    let goal: String = goal.iter().map(|a| a.to_string()).join(" ");
    format!(
        "(define (problem gen) (:domain blocksworld-4ops) (:objects {}) (:init {init}) (:goal (and {goal})))",
        blocks.join(" ")
    )
}

/// The 18 Blocksworld actions over a, b, c without self-stacking.
pub fn bw_alphabet(task: &Task) -> Vec<GroundAction> {
    let objs = ["a", "b", "c"];
    let mut out = Vec::new();
    for x in objs {
        out.push(task.action("pick-up", &[x]));
        out.push(task.action("put-down", &[x]));
        for y in objs.iter().filter(|y| **y != x) {
            out.push(task.action("stack", &[x, y]));
            out.push(task.action("unstack", &[x, y]));
        }
    }
    out
}

pub fn random_plan(rng: &mut ChaCha8Rng, alphabet: &[GroundAction], max_len: usize) -> Plan {
    let n = rng.gen_range(0..=max_len);
    Plan::new((0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone()).collect())
}

/// Exponential reference for the longest common subsequence length.
pub fn brute_subsequence<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let picked: Vec<&T> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if picked.len() <= best {
            continue;
        }
        let mut it = b.iter();
        if picked.iter().all(|x| it.any(|y| y == *x)) {
            best = picked.len();
        }
    }
    best
}

/// Quadratic-in-starts reference for the longest common substring length.
pub fn brute_substring<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut best = 0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            best = best.max(k);
        }
    }
    best
}
