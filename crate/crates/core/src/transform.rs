//! Plan variants by circular shift and consistent object remapping, and the
//! search for the best-scoring variant (π₁).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lcs::lcs_analyze;
use crate::pddl::{Plan, Task};
use crate::score::{int, Score};
use crate::scoring::{exact_serde, plan_score, ScoreBreakdown};
use crate::similarity::{pair_actions, NameSimilarity};
use crate::simulator;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("mapping is not a bijection over its objects")]
    NonBijectiveMapping,
    #[error("variant budget of {budget} exceeded")]
    SearchBudgetExceeded { budget: u64, best: Box<VariantScore> },
}

/// Mapping is applied first, then the shift.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transformation {
    pub shift: usize,
    pub mapping: BTreeMap<String, String>,
}

impl Transformation {
    pub fn identity() -> Self {
        Transformation::default()
    }

    pub fn changed_objects(&self) -> usize {
        self.mapping.iter().filter(|(k, v)| k != v).count()
    }

    /// Shift distance around the cycle plus changed objects.
    pub fn changes(&self, plan_len: usize) -> usize {
        shift_distance(self.shift, plan_len) + self.changed_objects()
    }
}

fn shift_distance(shift: usize, n: usize) -> usize {
    if n == 0 {
        0
    } else {
        let s = shift % n;
        s.min(n - s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformConfig {
    #[serde(with = "exact_serde")]
    pub c_shift: Score,
    #[serde(with = "exact_serde")]
    pub c_map: Score,
    pub prune_threshold: usize,
    pub budget: u64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            c_shift: int(1),
            c_map: int(1),
            prune_threshold: 6,
            budget: 1_000_000,
        }
    }
}

impl TransformConfig {
    pub fn penalty(&self, t: &Transformation, plan_len: usize) -> Score {
        self.c_shift * int(shift_distance(t.shift, plan_len)) + self.c_map * int(t.changed_objects())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantScore {
    pub transformation: Transformation,
    #[serde(skip)]
    pub plan: Plan,
    pub raw: ScoreBreakdown,
    #[serde(with = "exact_serde")]
    pub penalty: Score,
    #[serde(with = "exact_serde")]
    pub penalized: Score,
    pub valid: bool,
}

/// Action at index `i` moves to `(i + n) mod len`.
pub fn circular_shift(plan: &Plan, n: usize) -> Plan {
    let mut out = plan.clone();
    if !out.actions.is_empty() {
        let len = out.actions.len();
        out.actions.rotate_right(n % len);
    }
    out
}

/// Substitutes every argument simultaneously and re-resolves the actions
/// against `task`. Objects outside the mapping are left alone.
pub fn remap_params(plan: &Plan, mapping: &BTreeMap<String, String>, task: &Task) -> Result<Plan, TransformError> {
    let keys: BTreeSet<&String> = mapping.keys().collect();
    let values: BTreeSet<&String> = mapping.values().collect();
    if keys != values {
        return Err(TransformError::NonBijectiveMapping);
    }
    let actions = plan
        .actions
        .iter()
        .map(|a| {
            let args = a
                .args
                .iter()
                .map(|x| mapping.get(x).unwrap_or(x).clone())
                .collect();
            task.resolve(a.name.clone(), args)
        })
        .collect();
    Ok(Plan {
        actions,
        label: plan.label.clone(),
    })
}

pub fn apply(plan: &Plan, t: &Transformation, task: &Task) -> Result<Plan, TransformError> {
    Ok(circular_shift(&remap_params(plan, &t.mapping, task)?, t.shift))
}

/// Scores one variant with the full composition.
pub fn score_variant(
    plan: &Plan,
    t: Transformation,
    gt: &Plan,
    task: &Task,
    config: &TransformConfig,
    sigma: &dyn NameSimilarity,
) -> Result<VariantScore, TransformError> {
    let variant = apply(plan, &t, task)?;
    let valid = simulator::is_valid(&variant, &task.problem);
    let (pairing, _) = pair_actions(&variant, gt, sigma);
    let lcs = lcs_analyze(&variant, gt);
    let raw = plan_score(&variant, gt, &pairing, &lcs, valid);
    let penalty = config.penalty(&t, plan.len());
    Ok(VariantScore {
        penalized: raw.total - penalty,
        transformation: t,
        plan: variant,
        raw,
        penalty,
        valid,
    })
}

/// Orders `a` before `b` when it ranks higher. `order` is the enumeration
/// position and settles remaining ties.
fn rank(a: &(usize, VariantScore), b: &(usize, VariantScore), n: usize) -> Ordering {
    b.1.valid
        .cmp(&a.1.valid)
        .then_with(|| b.1.penalized.cmp(&a.1.penalized))
        .then_with(|| a.1.transformation.changes(n).cmp(&b.1.transformation.changes(n)))
        .then_with(|| a.0.cmp(&b.0))
}

fn mapping_from(objects: &[String], image: &[String]) -> BTreeMap<String, String> {
    objects.iter().cloned().zip(image.iter().cloned()).collect()
}

/// Candidate transformations in enumeration order, at most `cap` of them.
fn candidates(plan: &Plan, gt: &Plan, config: &TransformConfig, cap: u64) -> (Vec<Transformation>, bool) {
    let objects = plan.objects();
    let shifts = plan.len().max(1);
    let mut out = Vec::new();
    let mut truncated = false;
    if objects.len() <= config.prune_threshold {
        'outer: for image in objects.iter().cloned().permutations(objects.len()) {
            let mapping = mapping_from(&objects, &image);
            for shift in 0..shifts {
                if out.len() as u64 >= cap {
                    truncated = true;
                    break 'outer;
                }
                out.push(Transformation {
                    shift,
                    mapping: mapping.clone(),
                });
            }
        }
        return (out, truncated);
    }

    // Seed from every positional agreement in name and arity, complete the
    // rest of the bijection, keep identity with every shift.
    let mut seeded: BTreeSet<(Vec<String>, usize)> = BTreeSet::new();
    for shift in 0..shifts {
        seeded.insert((objects.clone(), shift));
    }
    let object_set: BTreeSet<&String> = objects.iter().collect();
    for shift in 0..shifts {
        for (i, a) in plan.actions.iter().enumerate() {
            let j = (i + shift) % shifts;
            let Some(g) = gt.actions.get(j) else { continue };
            if g.name != a.name || g.args.len() != a.args.len() {
                continue;
            }
            if let Some(image) = seed_mapping(&objects, &object_set, &a.args, &g.args) {
                seeded.insert((image, shift));
            }
        }
    }
    for (image, shift) in seeded {
        if out.len() as u64 >= cap {
            truncated = true;
            break;
        }
        out.push(Transformation {
            shift,
            mapping: mapping_from(&objects, &image),
        });
    }
    (out, truncated)
}

/// A full bijection extending `from[k] -> to[k]`; free objects keep their
/// own name where possible, the rest pair up in sorted order.
fn seed_mapping(
    objects: &[String],
    object_set: &BTreeSet<&String>,
    from: &[String],
    to: &[String],
) -> Option<Vec<String>> {
    let mut forced: BTreeMap<&String, &String> = BTreeMap::new();
    for (x, y) in from.iter().zip(to) {
        if !object_set.contains(y) {
            return None;
        }
        match forced.get(x) {
            Some(prev) if *prev != y => return None,
            _ => {
                forced.insert(x, y);
            }
        }
    }
    let used: BTreeSet<&String> = forced.values().copied().collect();
    if used.len() != forced.len() {
        return None;
    }
    let mut image: Vec<Option<&String>> = objects.iter().map(|o| forced.get(o).copied()).collect();
    let mut taken = used;
    for (k, o) in objects.iter().enumerate() {
        if image[k].is_none() && !taken.contains(o) {
            image[k] = Some(o);
            taken.insert(o);
        }
    }
    let mut free = objects.iter().filter(|o| !taken.contains(o));
    for slot in image.iter_mut().filter(|s| s.is_none()) {
        *slot = free.next();
    }
    image.into_iter().map(|o| o.cloned()).collect()
}

/// Best variant of `plan`: valid variants first, then highest penalized
/// score, then fewest changes, then earliest in enumeration order (the
/// identity comes first).
pub fn find_best_variant(
    plan: &Plan,
    gt: &Plan,
    task: &Task,
    config: &TransformConfig,
    sigma: &dyn NameSimilarity,
) -> Result<(Plan, VariantScore), TransformError> {
    let (cands, truncated) = candidates(plan, gt, config, config.budget.max(1));
    let n = plan.len();
    let scored: Vec<(usize, VariantScore)> = cands
        .into_par_iter()
        .enumerate()
        .map(|(i, t)| score_variant(plan, t, gt, task, config, sigma).map(|v| (i, v)))
        .collect::<Result<_, _>>()?;
    let best = scored
        .into_iter()
        .min_by(|a, b| rank(a, b, n))
        .expect("identity is always a candidate")
        .1;
    if truncated {
        return Err(TransformError::SearchBudgetExceeded {
            budget: config.budget,
            best: Box::new(best),
        });
    }
    Ok((best.plan.clone(), best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_plan, parse_problem};
    use crate::score::ratio;
    use crate::similarity::ExactMatch;

    fn task() -> Task {
        let d = parse_domain(include_str!("../fixtures/blocksworld/domain.pddl")).unwrap();
        let p = parse_problem(include_str!("../fixtures/blocksworld/instance-10.pddl"), &d).unwrap();
        Task::new(d, p)
    }

    fn plans(t: &Task) -> (Plan, Plan) {
        (
            parse_plan(include_str!("../fixtures/blocksworld/instance-10.llm.plan"), t).unwrap(),
            parse_plan(include_str!("../fixtures/blocksworld/instance-10.gt.plan"), t).unwrap(),
        )
    }

    fn swap_ab() -> BTreeMap<String, String> {
        [("a", "b"), ("b", "a"), ("c", "c")]
            .into_iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect()
    }

    #[test]
    fn shift_moves_forward() {
        let t = task();
        let p = parse_plan("(pick-up a)\n(pick-up b)\n(pick-up c)", &t).unwrap();
        assert_eq!(circular_shift(&p, 1).to_string(), "(pick-up c)\n(pick-up a)\n(pick-up b)\n");
        assert_eq!(circular_shift(&p, 0), p);
        assert_eq!(circular_shift(&p, 3), p);
        assert!(circular_shift(&Plan::default(), 5).is_empty());
    }

    #[test]
    fn remap_running_example() {
        let t = task();
        let (p0, _) = plans(&t);
        let p1 = remap_params(&p0, &swap_ab(), &t).unwrap();
        assert_eq!(p1.actions[0].to_string(), "(unstack b c)");
        assert_eq!(p1.actions[1].to_string(), "(put-down b)");
        assert_eq!(remap_params(&p1, &swap_ab(), &t).unwrap(), p0);
        assert_eq!(remap_params(&p0, &BTreeMap::new(), &t).unwrap(), p0);

        let bad: BTreeMap<String, String> = [("a", "b"), ("b", "b")]
            .into_iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        assert_eq!(remap_params(&p0, &bad, &t), Err(TransformError::NonBijectiveMapping));
    }

    #[test]
    fn running_example_best_variant() {
        let t = task();
        let (p0, gt) = plans(&t);
        let (p1, v) = find_best_variant(&p0, &gt, &t, &TransformConfig::default(), &ExactMatch).unwrap();
        assert_eq!(v.transformation.shift, 0);
        assert_eq!(v.transformation.mapping, swap_ab());
        assert!(!v.valid);
        assert!(v.penalized > ratio(278, 15));
        assert_eq!(p1.actions[0].to_string(), "(unstack b c)");
    }

    #[test]
    fn gt_is_its_own_best_variant() {
        let t = task();
        let (_, gt) = plans(&t);
        let (p, v) = find_best_variant(&gt, &gt, &t, &TransformConfig::default(), &ExactMatch).unwrap();
        assert_eq!(p.actions, gt.actions);
        assert_eq!(v.transformation.shift, 0);
        assert_eq!(v.transformation.changed_objects(), 0);
        assert_eq!(v.penalty, int(0));
    }

    #[test]
    fn budget_is_reported_with_best_so_far() {
        let t = task();
        let (p0, gt) = plans(&t);
        let config = TransformConfig {
            budget: 5,
            ..TransformConfig::default()
        };
        match find_best_variant(&p0, &gt, &t, &config, &ExactMatch) {
            Err(TransformError::SearchBudgetExceeded { best, .. }) => {
                assert_eq!(best.transformation.changed_objects(), 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pruned_search_keeps_identity_and_seeds() {
        let t = task();
        let (p0, gt) = plans(&t);
        let config = TransformConfig {
            prune_threshold: 0,
            ..TransformConfig::default()
        };
        let (cands, _) = candidates(&p0, &gt, &config, u64::MAX);
        assert!(cands.iter().any(|c| c.changed_objects() == 0 && c.shift == 0));
        assert!(cands.iter().any(|c| c.mapping == swap_ab() && c.shift == 0));
        assert!(cands.len() < 6 * 8);
        let (_, v) = find_best_variant(&p0, &gt, &t, &config, &ExactMatch).unwrap();
        assert!(v.penalized > ratio(278, 15));
    }

    #[test]
    fn seed_completion_is_bijective() {
        let objs: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let set: BTreeSet<&String> = objs.iter().collect();
        let img = seed_mapping(&objs, &set, &["a".into()], &["c".into()]).unwrap();
        assert_eq!(img, vec!["c", "b", "a", "d"]);
        assert!(seed_mapping(&objs, &set, &["a".into(), "b".into()], &["c".into(), "c".into()]).is_none());
        assert!(seed_mapping(&objs, &set, &["a".into()], &["z".into()]).is_none());
    }
}
