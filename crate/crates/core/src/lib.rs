//! Evaluation and recovery of candidate PDDL plans against optimal
//! ground-truth plans.

pub mod lcs;
pub mod pddl;
pub mod planner;
pub mod recovery;
pub mod report;
pub mod score;
pub mod scoring;
pub mod similarity;
pub mod simulator;
pub mod transform;
