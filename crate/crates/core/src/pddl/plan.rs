use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Atom, PddlError, Task};

/// Preconditions and effects of a ground action.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grounding {
    pub preconditions: Vec<Atom>,
    pub add_effects: Vec<Atom>,
    pub del_effects: Vec<Atom>,
}

/// Why a plan step could not be matched to a schema instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Unresolvable {
    UnknownAction,
    ArityMismatch { expected: usize, found: usize },
    UnknownObject { object: String },
    TypeMismatch { object: String, expected: String },
}

impl fmt::Display for Unresolvable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unresolvable::UnknownAction => f.write_str("unknown action"),
            Unresolvable::ArityMismatch { expected, found } => {
                write!(f, "expected {expected} argument(s), got {found}")
            }
            Unresolvable::UnknownObject { object } => write!(f, "unknown object `{object}`"),
            Unresolvable::TypeMismatch { object, expected } => {
                write!(f, "`{object}` is not a `{expected}`")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Resolution {
    Resolved(Arc<Grounding>),
    Unresolved(Unresolvable),
}

/// One plan step. Hallucinated steps are kept, flagged as unresolved.
///
/// Equality, ordering and hashing look at the name and arguments only; the
/// resolution is a function of those given a task.
#[derive(Debug, Clone)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    pub resolution: Resolution,
}

impl GroundAction {
    pub fn resolved(name: String, args: Vec<String>, grounding: Grounding) -> Self {
        GroundAction {
            name,
            args,
            resolution: Resolution::Resolved(Arc::new(grounding)),
        }
    }

    pub fn unresolved(name: String, args: Vec<String>, reason: Unresolvable) -> Self {
        GroundAction {
            name,
            args,
            resolution: Resolution::Unresolved(reason),
        }
    }

    pub fn grounding(&self) -> Option<&Grounding> {
        match &self.resolution {
            Resolution::Resolved(g) => Some(g),
            Resolution::Unresolved(_) => None,
        }
    }

    pub fn is_resolved(&self) -> bool {
        matches!(self.resolution, Resolution::Resolved(_))
    }

    pub fn unresolved_reason(&self) -> Option<&Unresolvable> {
        match &self.resolution {
            Resolution::Resolved(_) => None,
            Resolution::Unresolved(r) => Some(r),
        }
    }
}

impl PartialEq for GroundAction {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.args == other.args
    }
}

impl Eq for GroundAction {}

impl Hash for GroundAction {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.args.hash(state);
    }
}

impl PartialOrd for GroundAction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroundAction {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.name, &self.args).cmp(&(&other.name, &other.args))
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// Ordered action sequence. Positions are 0-based in code and reported
/// 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<GroundAction>,
    pub label: Option<String>,
}

impl Plan {
    pub fn new(actions: Vec<GroundAction>) -> Self {
        Plan { actions, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroundAction> {
        self.actions.iter()
    }

    /// Distinct object constants used as arguments, sorted.
    pub fn objects(&self) -> Vec<String> {
        self.actions
            .iter()
            .flat_map(|a| a.args.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Projects the plan onto the given positions, keeping their order.
    pub fn select(&self, positions: impl IntoIterator<Item = usize>) -> Plan {
        Plan::new(positions.into_iter().map(|i| self.actions[i].clone()).collect())
    }

    pub fn concat(&self, other: &Plan) -> Plan {
        Plan::new(self.actions.iter().chain(&other.actions).cloned().collect())
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.actions {
            writeln!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Reads a plan, one action per line.
///
/// Parentheses are optional, `;` starts a comment, blank lines are skipped
/// and case is ignored. Steps that do not match the task are kept as
/// unresolved actions.
pub fn parse_plan(text: &str, task: &Task) -> Result<Plan, PddlError> {
    let mut actions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line
            .split(|c: char| c.is_whitespace() || matches!(c, '(' | ')' | ','))
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase);
        let name = tokens.next().ok_or(PddlError::MalformedLine { line: i + 1 })?;
        actions.push(task.resolve(name, tokens.collect()));
    }
    Ok(Plan::new(actions))
}
