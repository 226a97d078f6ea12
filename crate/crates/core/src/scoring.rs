//! Plan score composition: base length credit, action similarity, pairing
//! bonuses, LCS bonuses and the length penalty; plus plan potential and
//! 0–1 normalization.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::lcs::LcsResult;
use crate::pddl::Plan;
use crate::score::{int, ratio, Score};
use crate::similarity::PairingResult;

/// Bonus per pair whose action names agree.
pub const PAIR_BONUS: (i128, i128) = (1, 2);
/// Bonus per action of the longest common substring.
pub const SUBSTRING_BONUS: i128 = 2;
/// Bonus per action of the longest common subsequence.
pub const SUBSEQUENCE_BONUS: i128 = 1;
/// Normalizer for invalid plans: base 1 + similarity 1 + pair bonus 0.5 +
/// substring 2 per action.
pub const MAX_PER_ACTION: (i128, i128) = (9, 2);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("ground-truth plan is empty")]
    ZeroLengthGroundTruth,
    #[error("plan is empty")]
    EmptyPlan,
}

/// Serde adapter writing scores as exact `n/d` strings.
pub mod exact_serde {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::score::{exact_string, parse_exact, Score};

    pub fn serialize<S: Serializer>(s: &Score, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&exact_string(s))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Score, D::Error> {
        let text = String::deserialize(de)?;
        parse_exact(&text).ok_or_else(|| D::Error::custom(format!("not an exact score: {text}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub valid: bool,
    #[serde(with = "exact_serde")]
    pub base: Score,
    #[serde(with = "exact_serde")]
    pub similarity_sum: Score,
    #[serde(with = "exact_serde")]
    pub pair_bonus: Score,
    #[serde(with = "exact_serde")]
    pub substring_bonus: Score,
    #[serde(with = "exact_serde")]
    pub subsequence_bonus: Score,
    #[serde(with = "exact_serde")]
    pub length_penalty: Score,
    #[serde(with = "exact_serde")]
    pub total: Score,
}

impl ScoreBreakdown {
    pub fn recompute_total(&self) -> Score {
        self.base + self.similarity_sum + self.pair_bonus + self.substring_bonus + self.subsequence_bonus
            - self.length_penalty
    }
}

/// `(n − m)² / m` for plans at least as long as the ground truth, twice that
/// for shorter ones.
pub fn length_penalty(n: usize, m: usize) -> Result<Score, ScoringError> {
    if m == 0 {
        return Err(ScoringError::ZeroLengthGroundTruth);
    }
    let d = n.abs_diff(m) as i128;
    let base = ratio(d * d, m as i128);
    Ok(if n >= m { base } else { base * int(2) })
}

/// Valid plans are only charged for sub-optimal length; invalid plans get
/// the full similarity composition. An empty ground truth is charged as if
/// it had one action.
pub fn plan_score(plan: &Plan, gt: &Plan, pairing: &PairingResult, lcs: &LcsResult, valid: bool) -> ScoreBreakdown {
    let length_penalty = length_penalty(plan.len(), gt.len().max(1)).expect("non-zero length");
    let base = int(plan.len());
    let mut b = ScoreBreakdown {
        valid,
        base,
        similarity_sum: Score::zero(),
        pair_bonus: Score::zero(),
        substring_bonus: Score::zero(),
        subsequence_bonus: Score::zero(),
        length_penalty,
        total: Score::zero(),
    };
    if !valid {
        b.similarity_sum = pairing.similarity_sum();
        b.pair_bonus = ratio(PAIR_BONUS.0, PAIR_BONUS.1) * int(pairing.name_matching_pairs());
        b.substring_bonus = int(lcs.substring.len()) * SUBSTRING_BONUS;
        b.subsequence_bonus = int(lcs.subsequence.len()) * SUBSEQUENCE_BONUS;
    }
    b.total = b.recompute_total();
    b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialScore {
    #[serde(with = "exact_serde")]
    pub score0: Score,
    #[serde(with = "exact_serde")]
    pub score1: Score,
    #[serde(with = "exact_serde")]
    pub potential: Score,
    pub validity_reward: bool,
}

/// Mean of the π₀ and π₁ scores per action of π₀, plus `reward` when π₀ is
/// valid.
pub fn potential(
    score0: Score,
    score1: Score,
    n0: usize,
    valid0: bool,
    reward: Score,
) -> Result<PotentialScore, ScoringError> {
    if n0 == 0 {
        return Err(ScoringError::EmptyPlan);
    }
    let mut potential = (score0 + score1) / int(2 * n0);
    if valid0 {
        potential += reward;
    }
    Ok(PotentialScore {
        score0,
        score1,
        potential,
        validity_reward: valid0,
    })
}

/// Per-action score scaled to at most 1. Invalid plans are divided by
/// [`MAX_PER_ACTION`], valid ones by their base credit of 1 per action.
/// Large length penalties may push the result below zero; it is not
/// clipped there.
pub fn normalize_score(breakdown: &ScoreBreakdown, plan_len: usize) -> Score {
    let per_action = if breakdown.valid {
        int(1)
    } else {
        ratio(MAX_PER_ACTION.0, MAX_PER_ACTION.1)
    };
    let n = int(plan_len.max(1));
    let s = breakdown.total / (n * per_action);
    if s > int(1) {
        int(1)
    } else {
        s
    }
}
