//! State heuristics over a compiled task.

use std::cell::RefCell;

use smallvec::SmallVec;

use super::compiled::{BitState, CompiledTask};

/// Lower bound on the remaining number of actions, `None` for dead ends.
pub trait Heuristic: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, task: &CompiledTask, state: &BitState) -> Option<u32>;
}

/// Always 0; turns A* into uniform-cost search.
#[derive(Debug, Clone, Copy, Default)]
pub struct Blind;

impl Heuristic for Blind {
    fn name(&self) -> &'static str {
        "blind"
    }

    fn estimate(&self, _: &CompiledTask, _: &BitState) -> Option<u32> {
        Some(0)
    }
}

/// Max-cost relaxed reachability. With unit costs this is the first layer
/// of the relaxed planning graph containing every goal.
#[derive(Debug, Clone, Copy, Default)]
pub struct HMax;

impl Heuristic for HMax {
    fn name(&self) -> &'static str {
        "hmax"
    }

    fn estimate(&self, task: &CompiledTask, state: &BitState) -> Option<u32> {
        match state.words() {
            &[word] => hmax1(task, word),
            _ => PENDING.with_borrow_mut(|pending| hmax(task, state, pending)),
        }
    }
}

thread_local! {
    static PENDING: RefCell<Vec<u32>> = const { RefCell::new(Vec::new()) };
}

fn hmax(task: &CompiledTask, state: &BitState, pending: &mut Vec<u32>) -> Option<u32> {
    let w = state.words().len();
    let goal = task.goal_mask.words();
    let subset = |a: &[u64], b: &[u64]| a.iter().zip(b).all(|(x, y)| x & !y == 0);
    let mut reached: SmallVec<[u64; 4]> = state.words().into();
    let mut next = reached.clone();
    pending.clear();
    pending.extend(0..task.actions.len() as u32);
    let mut level = 0;
    loop {
        if subset(goal, &reached) {
            return Some(level);
        }
        next.copy_from_slice(&reached);
        pending.retain(|&a| {
            let i = a as usize * w;
            if !subset(&task.pre_words[i..i + w], &reached) {
                return true;
            }
            for (n, x) in next.iter_mut().zip(&task.add_words[i..i + w]) {
                *n |= x;
            }
            false
        });
        if next == reached {
            return None;
        }
        std::mem::swap(&mut reached, &mut next);
        level += 1;
    }
}

/// Same as [`hmax`] for tasks with at most 64 atoms.
fn hmax1(task: &CompiledTask, state: u64) -> Option<u32> {
    let goal = task.goal_mask.words()[0];
    let mut reached = state;
    let mut level = 0;
    loop {
        if goal & !reached == 0 {
            return Some(level);
        }
        let next = task
            .pre_words
            .iter()
            .zip(&task.add_words)
            .fold(reached, |n, (&p, &a)| n | if p & !reached == 0 { a } else { 0 });
        if next == reached {
            return None;
        }
        reached = next;
        level += 1;
    }
}
