//! Action pairing between a candidate plan and the ground truth, per-action
//! similarity, and action-quality maps (AQM / NP-AQM).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::lcs;
use crate::pddl::{GroundAction, Plan};
use crate::score::{self, int, max_zero, ratio, Score};

/// σ: similarity between two action names, in `[0, 1]`.
///
/// Implementations must be symmetric and return 1 on identical names.
pub trait NameSimilarity: Send + Sync {
    fn similarity(&self, a: &str, b: &str) -> Score;
}

/// 1 on equal names, 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl NameSimilarity for ExactMatch {
    fn similarity(&self, a: &str, b: &str) -> Score {
        if a.eq_ignore_ascii_case(b) {
            int(1)
        } else {
            Score::zero()
        }
    }
}

/// `2·|LCS| / (|a| + |b|)` over characters, zeroed below `floor`.
#[derive(Debug, Clone)]
pub struct CharLcs {
    pub floor: Score,
}

impl Default for CharLcs {
    fn default() -> Self {
        CharLcs { floor: ratio(1, 2) }
    }
}

impl NameSimilarity for CharLcs {
    fn similarity(&self, a: &str, b: &str) -> Score {
        let a: Vec<char> = a.to_lowercase().chars().collect();
        let b: Vec<char> = b.to_lowercase().chars().collect();
        if a == b {
            return int(1);
        }
        let total = a.len() + b.len();
        if total == 0 {
            return int(1);
        }
        let common = lcs::subsequence_len(&a, &b);
        let r = ratio(2 * common as i128, total as i128);
        if r >= self.floor {
            r
        } else {
            Score::zero()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynonymTableError {
    #[error("synonym table line {line}: expected `name1 name2 score`")]
    Malformed { line: usize },
    #[error("synonym table line {line}: score must be in [0, 1]")]
    OutOfRange { line: usize },
}

/// Explicit name pairs with fixed scores; other pairs go to a fallback.
pub struct SynonymTable {
    entries: HashMap<(String, String), Score>,
    fallback: Box<dyn NameSimilarity>,
}

impl SynonymTable {
    pub fn new(fallback: Box<dyn NameSimilarity>) -> Self {
        SynonymTable {
            entries: HashMap::new(),
            fallback,
        }
    }

    /// Reads `name1 name2 score` lines; `#` starts a comment.
    pub fn parse(text: &str, fallback: Box<dyn NameSimilarity>) -> Result<Self, SynonymTableError> {
        let mut table = SynonymTable::new(fallback);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [a, b, s] = parts[..] else {
                return Err(SynonymTableError::Malformed { line: i + 1 });
            };
            let s = score::parse_exact(s).ok_or(SynonymTableError::Malformed { line: i + 1 })?;
            if s < Score::zero() || s > int(1) {
                return Err(SynonymTableError::OutOfRange { line: i + 1 });
            }
            table.insert(a, b, s);
        }
        Ok(table)
    }

    pub fn insert(&mut self, a: &str, b: &str, s: Score) {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        self.entries.insert((b.clone(), a.clone()), s);
        self.entries.insert((a, b), s);
    }
}

impl NameSimilarity for SynonymTable {
    fn similarity(&self, a: &str, b: &str) -> Score {
        let (a, b) = (a.to_lowercase(), b.to_lowercase());
        if a == b {
            return int(1);
        }
        match self.entries.get(&(a.clone(), b.clone())) {
            Some(s) => *s,
            None => self.fallback.similarity(&a, &b),
        }
    }
}

/// σ with the default character-LCS provider.
pub fn name_similarity(a: &str, b: &str) -> Score {
    CharLcs::default().similarity(a, b)
}

/// `C(p, p′) = 0.25·F + 0.1·M − 0.1·||p| − |p′||`.
///
/// F counts positions holding the same object; M counts objects present in
/// both lists that never share a position.
pub fn param_score(p: &[String], q: &[String]) -> Score {
    let exact = p.iter().zip(q).filter(|(x, y)| x == y).count();
    let mut seen: Vec<&String> = Vec::new();
    let mut partial = 0;
    for obj in p {
        if seen.contains(&obj) {
            continue;
        }
        seen.push(obj);
        let shares_position = p
            .iter()
            .zip(q)
            .any(|(x, y)| x == obj && y == obj);
        if q.contains(obj) && !shares_position {
            partial += 1;
        }
    }
    let gap = p.len().abs_diff(q.len());
    ratio(1, 4) * int(exact) + ratio(1, 10) * int(partial) - ratio(1, 10) * int(gap)
}

/// `S(a, a′) = σ(name, name′) + C(args, args′)`, floored at zero.
pub fn action_similarity(a: &GroundAction, b: &GroundAction, sigma: &dyn NameSimilarity) -> Score {
    max_zero(sigma.similarity(&a.name, &b.name) + param_score(&a.args, &b.args))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityLabel {
    Correct,
    Misplaced,
    SameAct,
    DiffAct,
    Redundant,
}

impl QualityLabel {
    pub fn value(self) -> u32 {
        match self {
            QualityLabel::Correct => 4,
            QualityLabel::Misplaced => 3,
            QualityLabel::SameAct => 2,
            QualityLabel::DiffAct => 1,
            QualityLabel::Redundant => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::Correct => "correct",
            QualityLabel::Misplaced => "misplaced",
            QualityLabel::SameAct => "same_act",
            QualityLabel::DiffAct => "diff_act",
            QualityLabel::Redundant => "redundant",
        }
    }

    /// Pairs whose action names agree.
    pub fn names_match(self) -> bool {
        matches!(
            self,
            QualityLabel::Correct | QualityLabel::Misplaced | QualityLabel::SameAct
        )
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AqmVariant {
    Positional,
    NonPositional,
}

/// One label per candidate action. Serialized with 1-based keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "AqmRepr", try_from = "AqmRepr")]
pub struct ActionQualityMap {
    pub labels: Vec<QualityLabel>,
    pub variant: AqmVariant,
}

#[derive(Serialize, Deserialize)]
struct AqmRepr {
    variant: AqmVariant,
    labels: BTreeMap<usize, QualityLabel>,
}

impl From<ActionQualityMap> for AqmRepr {
    fn from(m: ActionQualityMap) -> Self {
        AqmRepr {
            variant: m.variant,
            labels: m.labels.into_iter().enumerate().map(|(i, l)| (i + 1, l)).collect(),
        }
    }
}

impl TryFrom<AqmRepr> for ActionQualityMap {
    type Error = String;

    fn try_from(r: AqmRepr) -> Result<Self, Self::Error> {
        let keys: Vec<usize> = r.labels.keys().copied().collect();
        if keys.iter().enumerate().any(|(i, k)| *k != i + 1) {
            return Err("AQM keys must be 1..=n".into());
        }
        Ok(ActionQualityMap {
            labels: r.labels.into_values().collect(),
            variant: r.variant,
        })
    }
}

impl ActionQualityMap {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, label: QualityLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

impl fmt::Display for ActionQualityMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {l}", i + 1)?;
        }
        f.write_str("}")
    }
}

/// A candidate action matched to a ground-truth action (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionPair {
    pub candidate: usize,
    pub gt: usize,
    pub label: QualityLabel,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingResult {
    /// Sorted by candidate index.
    pub pairs: Vec<ActionPair>,
    /// Per candidate action: 1 for correct/misplaced, S for similarity
    /// pairs, 0 when unpaired.
    pub per_action_scores: Vec<Score>,
    pub unpaired: Vec<usize>,
}

impl PairingResult {
    pub fn similarity_sum(&self) -> Score {
        self.per_action_scores.iter().sum()
    }

    /// Pairs that earn the pairing bonus (action names agree).
    pub fn name_matching_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.label.names_match()).count()
    }
}

/// Pairs `plan` against `gt` one-to-one.
///
/// Identical actions at the same index come first (`correct`), then identical
/// actions elsewhere (`misplaced`, earliest free GT index), then each remaining
/// candidate action in order takes its highest-scoring free GT action; the
/// first GT action wins ties. Candidates with no positive score are
/// `redundant`.
pub fn pair_actions(plan: &Plan, gt: &Plan, sigma: &dyn NameSimilarity) -> (PairingResult, ActionQualityMap) {
    let n = plan.len();
    let mut labels: Vec<Option<QualityLabel>> = vec![None; n];
    let mut scores = vec![Score::zero(); n];
    let mut gt_free = vec![true; gt.len()];
    let mut pairs = Vec::new();

    for i in 0..n.min(gt.len()) {
        if plan.actions[i] == gt.actions[i] {
            labels[i] = Some(QualityLabel::Correct);
            scores[i] = int(1);
            gt_free[i] = false;
            pairs.push(ActionPair {
                candidate: i,
                gt: i,
                label: QualityLabel::Correct,
                score: int(1),
            });
        }
    }

    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        if let Some(j) = (0..gt.len()).find(|&j| gt_free[j] && gt.actions[j] == plan.actions[i]) {
            labels[i] = Some(QualityLabel::Misplaced);
            scores[i] = int(1);
            gt_free[j] = false;
            pairs.push(ActionPair {
                candidate: i,
                gt: j,
                label: QualityLabel::Misplaced,
                score: int(1),
            });
        }
    }

    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        let mut best: Option<(usize, Score)> = None;
        for j in (0..gt.len()).filter(|&j| gt_free[j]) {
            let s = action_similarity(&plan.actions[i], &gt.actions[j], sigma);
            if s > best.as_ref().map_or(Score::zero(), |(_, b)| *b) {
                best = Some((j, s));
            }
        }
        if let Some((j, s)) = best {
            let label = if plan.actions[i].name == gt.actions[j].name {
                QualityLabel::SameAct
            } else {
                QualityLabel::DiffAct
            };
            labels[i] = Some(label);
            scores[i] = s;
            gt_free[j] = false;
            pairs.push(ActionPair {
                candidate: i,
                gt: j,
                label,
                score: s,
            });
        }
    }

    pairs.sort_by_key(|p| p.candidate);
    let unpaired: Vec<usize> = (0..n).filter(|&i| labels[i].is_none()).collect();
    let labels = labels
        .into_iter()
        .map(|l| l.unwrap_or(QualityLabel::Redundant))
        .collect();
    (
        PairingResult {
            pairs,
            per_action_scores: scores,
            unpaired,
        },
        ActionQualityMap {
            labels,
            variant: AqmVariant::Positional,
        },
    )
}

/// Position-agnostic relabelling of a positional AQM: misplaced actions
/// count as correct, and a redundant action keeps that label only if it has
/// zero similarity to every GT action (GT actions may be reused here).
pub fn non_positional_aqm(
    aqm: &ActionQualityMap,
    plan: &Plan,
    gt: &Plan,
    sigma: &dyn NameSimilarity,
) -> ActionQualityMap {
    let labels = aqm
        .labels
        .iter()
        .enumerate()
        .map(|(i, label)| match label {
            QualityLabel::Misplaced => QualityLabel::Correct,
            QualityLabel::Redundant => {
                let mut best: Option<(usize, Score)> = None;
                for (j, g) in gt.iter().enumerate() {
                    let s = action_similarity(&plan.actions[i], g, sigma);
                    if s > best.as_ref().map_or(Score::zero(), |(_, b)| *b) {
                        best = Some((j, s));
                    }
                }
                match best {
                    Some((j, _)) if gt.actions[j].name == plan.actions[i].name => QualityLabel::SameAct,
                    Some(_) => QualityLabel::DiffAct,
                    None => QualityLabel::Redundant,
                }
            }
            other => *other,
        })
        .collect();
    ActionQualityMap {
        labels,
        variant: AqmVariant::NonPositional,
    }
}

/// Mean label value (correct 4 … redundant 0) divided by 4; 0 when empty.
pub fn aqm_score(aqm: &ActionQualityMap) -> Score {
    if aqm.is_empty() {
        return Score::zero();
    }
    let total: u32 = aqm.labels.iter().map(|l| l.value()).sum();
    ratio(total as i128, 4 * aqm.len() as i128)
}
