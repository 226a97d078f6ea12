//! Longest common substring ("subset": contiguous in both plans) and longest
//! common subsequence between a candidate plan and the ground truth, and
//! extraction of the best sub-plan from them.
//!
//! Both run in O(n·m) time with a rolling row over the shorter sequence;
//! the subsequence alignment is recovered with Hirschberg's divide and
//! conquer so space stays linear.

use serde::{Deserialize, Serialize};

use crate::pddl::{Plan, ProblemModel};
use crate::simulator;

/// Index pairs `(candidate, gt)`, 0-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LcsResult {
    pub substring: Vec<(usize, usize)>,
    pub subsequence: Vec<(usize, usize)>,
}

pub fn lcs_analyze(plan: &Plan, gt: &Plan) -> LcsResult {
    LcsResult {
        substring: longest_common_substring(&plan.actions, &gt.actions),
        subsequence: longest_common_subsequence(&plan.actions, &gt.actions),
    }
}

/// Length of the longest common subsequence.
pub fn subsequence_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.len() < b.len() {
        return subsequence_len(b, a);
    }
    forward_row(a, b)[b.len()]
}

/// `row[k]` = LCS length of `a` and `b[..k]`.
fn forward_row<T: PartialEq>(a: &[T], b: &[T]) -> Vec<usize> {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (k, y) in b.iter().enumerate() {
            cur[k + 1] = if x == y {
                prev[k] + 1
            } else {
                cur[k].max(prev[k + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev
}

/// `row[k]` = LCS length of `a` and `b[k..]`.
fn backward_row<T: PartialEq>(a: &[T], b: &[T]) -> Vec<usize> {
    let m = b.len();
    let mut prev = vec![0; m + 1];
    let mut cur = vec![0; m + 1];
    for x in a.iter().rev() {
        cur[m] = 0;
        for k in (0..m).rev() {
            cur[k] = if *x == b[k] {
                prev[k + 1] + 1
            } else {
                cur[k + 1].max(prev[k])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev
}

fn hirschberg<T: PartialEq>(a: &[T], b: &[T], a_off: usize, b_off: usize, out: &mut Vec<(usize, usize)>) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    if a.len() == 1 {
        if let Some(j) = b.iter().position(|y| *y == a[0]) {
            out.push((a_off, b_off + j));
        }
        return;
    }
    let mid = a.len() / 2;
    let left = forward_row(&a[..mid], b);
    let right = backward_row(&a[mid..], b);
    let split = (0..=b.len())
        .max_by(|&x, &y| (left[x] + right[x]).cmp(&(left[y] + right[y])).then(y.cmp(&x)))
        .expect("non-empty range");
    hirschberg(&a[..mid], &b[..split], a_off, b_off, out);
    hirschberg(&a[mid..], &b[split..], a_off + mid, b_off + split, out);
}

/// A maximum-length common subsequence as `(i, j)` pairs, strictly
/// increasing on both sides.
pub fn longest_common_subsequence<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if b.len() <= a.len() {
        hirschberg(a, b, 0, 0, &mut out);
    } else {
        hirschberg(b, a, 0, 0, &mut out);
        for p in &mut out {
            *p = (p.1, p.0);
        }
        out.sort_unstable();
    }
    out
}

/// A longest run contiguous in both sequences. Among equally long runs the
/// one starting earliest in `a`, then earliest in `b`, wins.
pub fn longest_common_substring<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    // (len, start_a, start_b)
    let mut best: Option<(usize, usize, usize)> = None;
    let mut consider = |len: usize, end_a: usize, end_b: usize| {
        if len == 0 {
            return;
        }
        let cand = (len, end_a + 1 - len, end_b + 1 - len);
        let better = match best {
            None => true,
            Some((l, sa, sb)) => len > l || (len == l && (cand.1, cand.2) < (sa, sb)),
        };
        if better {
            best = Some(cand);
        }
    };

    // roll over the shorter sequence
    if b.len() <= a.len() {
        let mut prev = vec![0usize; b.len() + 1];
        let mut cur = vec![0usize; b.len() + 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                cur[j + 1] = if x == y { prev[j] + 1 } else { 0 };
                consider(cur[j + 1], i, j);
            }
            std::mem::swap(&mut prev, &mut cur);
        }
    } else {
        let mut prev = vec![0usize; a.len() + 1];
        let mut cur = vec![0usize; a.len() + 1];
        for (j, y) in b.iter().enumerate() {
            for (i, x) in a.iter().enumerate() {
                cur[i + 1] = if x == y { prev[i] + 1 } else { 0 };
                consider(cur[i + 1], i, j);
            }
            std::mem::swap(&mut prev, &mut cur);
        }
    }
    match best {
        None => Vec::new(),
        Some((len, sa, sb)) => (0..len).map(|k| (sa + k, sb + k)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubplanSource {
    Substring,
    Subsequence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubPlan {
    pub plan: Plan,
    pub source: SubplanSource,
}

/// The common substring if it is a valid plan on its own, otherwise the
/// common subsequence (both projected onto the candidate plan).
pub fn best_subplan(plan: &Plan, gt: &Plan, problem: &ProblemModel) -> SubPlan {
    let lcs = lcs_analyze(plan, gt);
    best_subplan_from(plan, &lcs, problem)
}

pub fn best_subplan_from(plan: &Plan, lcs: &LcsResult, problem: &ProblemModel) -> SubPlan {
    let substring = plan.select(lcs.substring.iter().map(|p| p.0));
    if simulator::is_valid(&substring, problem) {
        return SubPlan {
            plan: substring,
            source: SubplanSource::Substring,
        };
    }
    SubPlan {
        plan: plan.select(lcs.subsequence.iter().map(|p| p.0)),
        source: SubplanSource::Subsequence,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_plan, parse_problem, Task};

    fn task() -> Task {
        let d = parse_domain(include_str!("../fixtures/blocksworld/domain.pddl")).unwrap();
        let p = parse_problem(include_str!("../fixtures/blocksworld/instance-10.pddl"), &d).unwrap();
        Task::new(d, p)
    }

    #[test]
    fn substring_tie_break_prefers_earliest_candidate_start() {
        let a = [1, 2, 9, 3, 4];
        let b = [3, 4, 1, 2];
        assert_eq!(longest_common_substring(&a, &b), vec![(0, 2), (1, 3)]);
        let b2 = [3, 4, 7, 1, 2];
        assert_eq!(longest_common_substring(&b2, &a), vec![(0, 3), (1, 4)]);
    }

    #[test]
    fn subsequence_is_common_and_increasing() {
        let a = b"ABCBDAB";
        let b = b"BDCABA";
        let s = longest_common_subsequence(a, b);
        assert_eq!(s.len(), 4);
        assert!(s.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert!(s.iter().all(|&(i, j)| a[i] == b[j]));
        assert_eq!(subsequence_len(a, b), 4);
        assert_eq!(longest_common_subsequence(b, a).len(), 4);
    }

    #[test]
    fn empty_inputs() {
        let e: [u8; 0] = [];
        assert!(longest_common_substring(&e, b"ab").is_empty());
        assert!(longest_common_subsequence(b"ab", &e).is_empty());
        assert!(longest_common_substring(b"ab", b"cd").is_empty());
    }

    #[test]
    fn running_example_lcs() {
        let t = task();
        let p0 = parse_plan(include_str!("../fixtures/blocksworld/instance-10.llm.plan"), &t).unwrap();
        let gt = parse_plan(include_str!("../fixtures/blocksworld/instance-10.gt.plan"), &t).unwrap();
        let r = lcs_analyze(&p0, &gt);
        assert_eq!(r.substring, vec![(2, 2)]);
        assert_eq!(r.subsequence, vec![(2, 2)]);

        let pi2 = best_subplan(&p0, &gt, &t.problem);
        assert_eq!(pi2.plan.to_string(), "(pick-up c)\n");
        assert!(!simulator::is_valid(&pi2.plan, &t.problem));

        let pi1 = parse_plan(
            "(unstack b c)\n(put-down b)\n(pick-up c)\n(stack c b)\n(unstack c b)\n(put-down c)\n(pick-up a)\n(stack a c)",
            &t,
        )
        .unwrap();
        let r1 = lcs_analyze(&pi1, &gt);
        assert_eq!(r1.substring.len(), 4);
        assert_eq!(r1.subsequence.len(), 6);
        assert_eq!(r1.subsequence.iter().map(|p| p.1).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
        let pi3 = best_subplan(&pi1, &gt, &t.problem);
        assert_eq!(pi3.source, SubplanSource::Subsequence);
        assert_eq!(pi3.plan.actions, gt.actions);
        assert!(simulator::is_valid(&pi3.plan, &t.problem));
    }

    #[test]
    fn no_common_actions_gives_empty_subplan() {
        let t = task();
        let gt = parse_plan(include_str!("../fixtures/blocksworld/instance-10.gt.plan"), &t).unwrap();
        let p = parse_plan("(pick-up b)\n(stack b a)", &t).unwrap();
        let sub = best_subplan(&p, &gt, &t.problem);
        assert!(sub.plan.is_empty());
    }
}
