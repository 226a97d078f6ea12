mod common;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::OnceLock;

use common::*;
use itertools::Itertools;
use plan_eval::lcs::{best_subplan, lcs_analyze};
use plan_eval::pddl::{parse_domain, parse_plan, parse_problem, GroundAction, Plan, PddlError, State, Task};
use plan_eval::planner::{replan_from, solve_optimal, AStarPlanner, CompiledTask, HMax, Heuristic, DEFAULT_TIMEOUT};
use plan_eval::recovery::{recover, steps_to_validity, RepairKind, RepairTarget};
use plan_eval::score::{int, Score};
use plan_eval::scoring::{length_penalty, plan_score};
use plan_eval::similarity::{pair_actions, CharLcs, ExactMatch, NameSimilarity, QualityLabel};
use plan_eval::simulator;
use plan_eval::transform::{self, circular_shift, find_best_variant, remap_params, score_variant, TransformConfig, Transformation};
use proptest::prelude::*;

struct World {
    task: Task,
    gt: Plan,
    alphabet: Vec<GroundAction>,
}

fn world() -> &'static World {
    static W: OnceLock<World> = OnceLock::new();
    W.get_or_init(|| {
        let task = instance10();
        let gt = gt10(&task);
        let mut alphabet = bw_alphabet(&task);
        alphabet.push(task.action("teleport", &["a"]));
        alphabet.push(task.action("pick-up", &["z"]));
        alphabet.push(task.action("stack", &["a"]));
        World { task, gt, alphabet }
    })
}

fn plan_of(ix: &[usize]) -> Plan {
    Plan::new(ix.iter().map(|&i| world().alphabet[i].clone()).collect())
}

fn any_plan(max: usize) -> impl Strategy<Value = Plan> {
    prop::collection::vec(0..world().alphabet.len(), 0..=max).prop_map(|ix| plan_of(&ix))
}

/// Only actions of the 18-action Blocksworld alphabet.
fn bw_plan(max: usize) -> impl Strategy<Value = Plan> {
    prop::collection::vec(0..18usize, 0..=max).prop_map(|ix| plan_of(&ix))
}

fn providers() -> Vec<Box<dyn NameSimilarity>> {
    vec![Box::new(ExactMatch), Box::new(CharLcs::default())]
}

fn three_block_task(init: usize, goal: usize) -> Task {
    let blocks = ["a", "b", "c"];
    let configs = bw_configs(&blocks);
    let text = bw_problem_text(&blocks, &configs[init], &config_atoms(&configs[goal]));
    Task::new(bw_domain(), parse_problem(&text, &bw_domain()).unwrap())
}

fn random_bijection(objects: &[String], keys: &[u32]) -> BTreeMap<String, String> {
    let mut image = objects.to_vec();
    image.sort_by_key(|o| keys[objects.iter().position(|x| x == o).unwrap() % keys.len()]);
    objects.iter().cloned().zip(image).collect()
}

#[test]
fn fixture_domains_and_problems_round_trip() {
    let logistics = (1..=5).map(|i| format!("logistics/p{i:02}.pddl")).collect_vec();
    for (d, problems) in [
        ("blocksworld/domain.pddl", vec!["blocksworld/instance-10.pddl".to_string()]),
        ("logistics/domain.pddl", logistics),
    ] {
        let domain = parse_domain(&fixture(d)).unwrap();
        assert_eq!(parse_domain(&domain.to_string()).unwrap(), domain, "{d}");
        for p in problems {
            let problem = parse_problem(&fixture(&p), &domain).unwrap();
            assert_eq!(parse_problem(&problem.to_string(), &domain).unwrap(), problem, "{p}");
        }
    }
}

/// Reverse breadth-first distances to the goal over the whole state space.
fn distances_to_goal(edges: &HashMap<State, Vec<State>>, task: &Task) -> HashMap<State, usize> {
    let mut preds: HashMap<&State, Vec<&State>> = HashMap::new();
    for (s, next) in edges {
        for n in next {
            preds.entry(n).or_default().push(s);
        }
    }
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    for s in edges.keys().filter(|s| s.satisfies(&task.problem.goal)) {
        dist.insert(s.clone(), 0);
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[s];
        for p in preds.get(s).into_iter().flatten() {
            if !dist.contains_key(*p) {
                dist.insert((*p).clone(), d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

#[test]
fn hmax_never_overestimates_on_four_blocks() {
    let blocks = ["a", "b", "c", "d"];
    let configs = bw_configs(&blocks);
    let text = bw_problem_text(&blocks, &configs[0], &config_atoms(&configs[0]));
    let domain = bw_domain();
    let mut task = Task::new(domain.clone(), parse_problem(&text, &domain).unwrap());
    let actions = ground_all(&task);
    let states: Vec<State> = bfs_distances(&actions, &task.problem.init).into_keys().collect();
    let edges: HashMap<State, Vec<State>> = states
        .iter()
        .map(|s| {
            let next = actions
                .iter()
                .filter(|a| simulator::applicable(s, a).unwrap())
                .map(|a| simulator::apply(s, a).unwrap())
                .collect();
            (s.clone(), next)
        })
        .collect();
    assert_eq!(states.len(), 125);
    for goal in &configs {
        task.problem.goal = config_atoms(goal);
        let dist = distances_to_goal(&edges, &task);
        for s in &states {
            let t = task.with_init(s.clone());
            let ct = CompiledTask::compile(&t);
            let h = HMax.estimate(&ct, &ct.init).expect("every configuration is reachable");
            assert!(h as usize <= dist[s], "h {h} > {} from {s:?}", dist[s]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn problem_text_round_trips(init in 0..13usize, goal in 0..13usize, keep in prop::collection::vec(any::<bool>(), 3)) {
        let blocks = ["a", "b", "c"];
        let configs = bw_configs(&blocks);
        let goal: std::collections::BTreeSet<_> = config_atoms(&configs[goal])
            .into_iter()
            .zip(keep.iter().cycle())
            .filter(|(_, k)| **k)
            .map(|(a, _)| a)
            .collect();
        let domain = bw_domain();
        let p = parse_problem(&bw_problem_text(&blocks, &configs[init], &goal), &domain).unwrap();
        prop_assert_eq!(parse_problem(&p.to_string(), &domain).unwrap(), p);
    }

    #[test]
    fn plan_text_round_trips(plan in any_plan(8)) {
        prop_assert_eq!(parse_plan(&plan.to_string(), &world().task).unwrap(), plan);
    }

    #[test]
    fn plan_parsing_is_total(lines in prop::collection::vec("[a-zA-Z(), ;-]{0,16}", 0..8)) {
        let text = lines.join("\n");
        let wordy = |l: &str| l.split(';').next().unwrap().split(|c: char| c.is_whitespace() || "(),".contains(c)).any(|t| !t.is_empty());
        match parse_plan(&text, &world().task) {
            Ok(plan) => prop_assert_eq!(plan.len(), lines.iter().filter(|l| wordy(l)).count()),
            Err(PddlError::MalformedLine { line }) => {
                let l = &lines[line - 1];
                prop_assert!(!wordy(l) && !l.split(';').next().unwrap().trim().is_empty());
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn grounding_substitutes_only(i in 0..18usize) {
        let w = world();
        let a = &w.alphabet[i];
        let schema = w.task.domain.schema(&a.name).unwrap();
        let g = a.grounding().unwrap();
        let preds = |v: &[plan_eval::pddl::Atom]| v.iter().map(|x| x.predicate.clone()).sorted().collect_vec();
        let templates = |v: &[plan_eval::pddl::AtomTemplate]| v.iter().map(|x| x.predicate.clone()).sorted().collect_vec();
        prop_assert_eq!(preds(&g.add_effects), templates(&schema.add_effects));
        prop_assert_eq!(preds(&g.del_effects), templates(&schema.del_effects));
        prop_assert_eq!(preds(&g.preconditions), templates(&schema.preconditions));
    }

    #[test]
    fn apply_leaves_other_atoms_alone(prefix in bw_plan(6), i in 0..18usize) {
        let w = world();
        let s = simulator::simulate(&prefix, &w.task.problem).final_state().clone();
        let a = &w.alphabet[i];
        if let Ok(next) = simulator::apply(&s, a) {
            let g = a.grounding().unwrap();
            let touched = |x| g.add_effects.contains(x) || g.del_effects.contains(x);
            for x in s.atoms().iter().chain(next.atoms()).filter(|x| !touched(x)) {
                prop_assert_eq!(s.contains(x), next.contains(x));
            }
        }
    }

    #[test]
    fn simulation_prefixes_agree(plan in any_plan(8)) {
        let w = world();
        let sim = simulator::simulate(&plan, &w.task.problem);
        prop_assert_eq!(&sim, &simulator::simulate(&plan, &w.task.problem));
        prop_assert_eq!(sim.valid(), simulator::is_valid(&plan, &w.task.problem));
        prop_assert!(!sim.valid() || sim.executable);
        for k in 0..=sim.lea {
            let head = simulator::simulate(&plan.select(0..k), &w.task.problem);
            prop_assert_eq!(&head.trace[..], &sim.trace[..=k]);
        }
    }

    #[test]
    fn solved_plans_are_valid_and_optimal(init in 0..13usize, goal in 0..13usize) {
        let task = three_block_task(init, goal);
        let plan = solve_optimal(&task, DEFAULT_TIMEOUT).unwrap();
        prop_assert!(simulator::is_valid(&plan, &task.problem));
        prop_assert_eq!(Some(plan.len()), bfs_cost(&task));
    }

    #[test]
    fn pairing_is_one_to_one(plan in any_plan(8), gt in bw_plan(8)) {
        for sigma in providers() {
            let (pairing, aqm) = pair_actions(&plan, &gt, sigma.as_ref());
            prop_assert_eq!(pairing.pairs.iter().map(|p| p.gt).unique().count(), pairing.pairs.len());
            prop_assert_eq!(pairing.pairs.iter().map(|p| p.candidate).unique().count(), pairing.pairs.len());
            prop_assert_eq!(aqm.labels.len(), plan.len());
            prop_assert_eq!(pairing.pairs.len() + aqm.count(QualityLabel::Redundant), plan.len());
            if plan.len() > gt.len() {
                prop_assert!(aqm.count(QualityLabel::Redundant) >= plan.len() - gt.len());
            }
            prop_assert_eq!((pairing.clone(), aqm.clone()), pair_actions(&plan, &gt, sigma.as_ref()));
        }
    }

    #[test]
    fn name_similarity_is_symmetric(a in "[a-z-]{0,9}", b in "[a-z-]{0,9}") {
        for sigma in providers() {
            prop_assert_eq!(sigma.similarity(&a, &b), sigma.similarity(&b, &a));
            prop_assert_eq!(sigma.similarity(&a, &a), int(1));
            let s = sigma.similarity(&a, &b);
            prop_assert!(s >= int(0) && s <= int(1));
        }
    }

    #[test]
    fn common_structures_are_genuine(a in bw_plan(7), b in bw_plan(7)) {
        let r = lcs_analyze(&a, &b);
        for pairs in [&r.substring, &r.subsequence] {
            prop_assert!(pairs.iter().all(|&(i, j)| a.actions[i] == b.actions[j]));
            prop_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        }
        prop_assert!(r.substring.windows(2).all(|w| w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1));
        prop_assert_eq!(r.subsequence.len(), brute_subsequence(&a.actions, &b.actions));
        prop_assert_eq!(r.substring.len(), brute_substring(&a.actions, &b.actions));
        let sub = best_subplan(&a, &b, &world().task.problem);
        let mut rest = a.actions.iter();
        prop_assert!(sub.plan.actions.iter().all(|x| rest.any(|y| y == x)));
    }

    #[test]
    fn breakdown_totals_audit(plan in any_plan(8), gt in bw_plan(8).prop_filter("non-empty", |g| !g.is_empty())) {
        let (pairing, _) = pair_actions(&plan, &gt, &ExactMatch);
        let lcs = lcs_analyze(&plan, &gt);
        for valid in [false, true] {
            let b = plan_score(&plan, &gt, &pairing, &lcs, valid);
            prop_assert_eq!(b.recompute_total(), b.total);
            if valid && plan.len() == gt.len() {
                prop_assert_eq!(b.total, int(gt.len()));
            }
        }
    }

    #[test]
    fn short_plans_pay_double(m in 1..40usize, d in 0..40usize) {
        prop_assume!(d <= m);
        prop_assert_eq!(length_penalty(m - d, m).unwrap(), length_penalty(m + d, m).unwrap() * int(2));
    }

    #[test]
    fn extending_with_a_correct_action_never_lowers_score(ix in prop::collection::vec((0..18usize, 0..18usize), 1..7), x in 0..18usize) {
        let (p, g): (Vec<usize>, Vec<usize>) = ix.into_iter().unzip();
        let score = |p: &Plan, g: &Plan| {
            let (pairing, _) = pair_actions(p, g, &ExactMatch);
            plan_score(p, g, &pairing, &lcs_analyze(p, g), false).total
        };
        let before = score(&plan_of(&p), &plan_of(&g));
        let (p2, g2) = ([p, vec![x]].concat(), [g, vec![x]].concat());
        prop_assert!(score(&plan_of(&p2), &plan_of(&g2)) >= before);
    }

    #[test]
    fn transformations_preserve_multisets(plan in bw_plan(6), shift in 0..8usize, keys in prop::collection::vec(any::<u32>(), 3)) {
        let w = world();
        let names = |p: &Plan| p.iter().map(|a| a.name.clone()).sorted().collect_vec();
        let actions = |p: &Plan| p.iter().map(|a| a.to_string()).sorted().collect_vec();
        let shifted = circular_shift(&plan, shift);
        prop_assert_eq!(actions(&shifted), actions(&plan));
        let mapping = random_bijection(&plan.objects(), &keys);
        let mapped = remap_params(&plan, &mapping, &w.task).unwrap();
        prop_assert_eq!(mapped.len(), plan.len());
        prop_assert_eq!(names(&mapped), names(&plan));
    }

    #[test]
    fn best_variant_ranks_validity_first(plan in bw_plan(5), shift in 0..5usize, keys in prop::collection::vec(any::<u32>(), 3)) {
        let w = world();
        let cfg = TransformConfig::default();
        let (pairing, _) = pair_actions(&plan, &w.gt, &ExactMatch);
        let valid0 = simulator::is_valid(&plan, &w.task.problem);
        let score0 = plan_score(&plan, &w.gt, &pairing, &lcs_analyze(&plan, &w.gt), valid0).total;
        let identity = score_variant(&plan, Transformation::identity(), &w.gt, &w.task, &cfg, &ExactMatch).unwrap();
        prop_assert_eq!(identity.penalized, score0);
        let (best_plan, best) = find_best_variant(&plan, &w.gt, &w.task, &cfg, &ExactMatch).unwrap();
        prop_assert_eq!(&best_plan, &best.plan);
        prop_assert!(best.penalized == best.raw.total - best.penalty && best.penalty >= Score::from_integer(0));
        if best.valid == valid0 {
            prop_assert!(best.penalized >= score0);
        }
        prop_assert!(best.valid || !valid0);
        let t = Transformation { shift: shift % plan.len().max(1), mapping: random_bijection(&plan.objects(), &keys) };
        if simulator::is_valid(&transform::apply(&plan, &t, &w.task).unwrap(), &w.task.problem) {
            prop_assert!(best.valid);
        }
        prop_assert_eq!(find_best_variant(&plan, &w.gt, &w.task, &cfg, &ExactMatch).unwrap().1, best);
    }

    #[test]
    fn repair_scripts_are_sound(plan in any_plan(8)) {
        let w = world();
        let (pairing, aqm) = pair_actions(&plan, &w.gt, &ExactMatch);
        let steps = steps_to_validity(&plan, &aqm, &pairing, &w.gt, &w.task);
        prop_assert!(steps.len() <= plan.len() + w.gt.len());
        let clean = aqm.count(QualityLabel::Redundant) == 0 && simulator::is_valid(&plan, &w.task.problem);
        prop_assert_eq!(steps.is_empty(), clean);
        for s in &steps {
            match (&s.kind, &s.target) {
                (RepairKind::RemoveAction, RepairTarget::Index(i)) => prop_assert_eq!(aqm.labels[*i], QualityLabel::Redundant),
                (RepairKind::AddAction, RepairTarget::GtAction(g)) => {
                    prop_assert!(w.gt.actions.contains(g));
                    let kept = plan.iter().zip(&aqm.labels).filter(|(_, l)| **l != QualityLabel::Redundant);
                    prop_assert!(kept.clone().all(|(a, _)| a != g));
                }
                (RepairKind::AddAction, _) | (RepairKind::RemoveAction, _) => prop_assert!(false, "mistargeted {s:?}"),
                (_, target) => prop_assert!(matches!(target, RepairTarget::Index(_))),
            }
        }
    }

    #[test]
    fn recovery_reaches_the_goal(plan in any_plan(8)) {
        let w = world();
        let out = recover(&plan, &w.gt, &w.task, &AStarPlanner::default(), DEFAULT_TIMEOUT).unwrap();
        prop_assert!(simulator::is_valid(&out.final_plan, &w.task.problem));
        prop_assert_eq!(out.final_plan.clone(), out.corr.concat(&out.comp));
        let gt_trace = simulator::simulate(&w.gt, &w.task.problem).trace;
        let reached = simulator::simulate(&out.corr, &w.task.problem);
        prop_assert!(reached.executable);
        prop_assert_eq!(reached.final_state(), &gt_trace[out.divergence_state_index]);
        prop_assert!(out.final_plan.len() <= out.corr.len() + w.gt.len() - out.divergence_state_index);
        let direct = replan_from(&gt_trace[out.divergence_state_index], &w.task, DEFAULT_TIMEOUT).unwrap();
        prop_assert_eq!(out.comp.len(), direct.len());
    }
}

#[test]
fn plan_equal_to_gt_needs_no_repair() {
    let w = world();
    let (pairing, aqm) = pair_actions(&w.gt, &w.gt, &ExactMatch);
    assert!(steps_to_validity(&w.gt, &aqm, &pairing, &w.gt, &w.task).is_empty());
}
