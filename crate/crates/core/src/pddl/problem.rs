use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::domain::{expect_keyword, expect_list, expect_symbol, missing, parse_typed_list, syntax};
use super::sexpr::{self, SExpr};
use super::{Atom, DomainModel, PddlError, State, TypedName, OBJECT_TYPE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemModel {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: State,
    pub goal: BTreeSet<Atom>,
}

impl ProblemModel {
    pub fn goal_satisfied(&self, state: &State) -> bool {
        state.satisfies(&self.goal)
    }
}

/// Parses a `(define (problem ...))` form and validates it against `domain`.
pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemModel, PddlError> {
    let root = sexpr::parse_one(text)?;
    let items = expect_list(&root, "`(define ...)`")?;
    expect_keyword(items.first(), &root, "define")?;
    let header = items.get(1).ok_or_else(|| missing(&root, "`(problem <name>)`"))?;
    let header_items = expect_list(header, "`(problem <name>)`")?;
    expect_keyword(header_items.first(), header, "problem")?;
    let name = expect_symbol(header_items.get(1), header, "problem name")?.to_string();

    let mut domain_name = None;
    let mut objects = Vec::new();
    let mut init = None;
    let mut goal = None;
    for section in &items[2..] {
        let sec = expect_list(section, "a problem section")?;
        match expect_symbol(sec.first(), section, "section keyword")? {
            ":domain" => {
                domain_name = Some(expect_symbol(sec.get(1), section, "domain name")?.to_string());
            }
            ":requirements" => {}
            ":objects" => {
                for (name, ty) in parse_typed_list(&sec[1..])? {
                    objects.push(TypedName {
                        name,
                        ty: ty.unwrap_or_else(|| OBJECT_TYPE.to_string()),
                    });
                }
            }
            ":init" => {
                init = Some(
                    sec[1..]
                        .iter()
                        .map(parse_ground_atom)
                        .collect::<Result<State, _>>()?,
                );
            }
            ":goal" => {
                let g = sec.get(1).ok_or_else(|| missing(section, "a goal formula"))?;
                let mut atoms = BTreeSet::new();
                collect_goal(g, &mut atoms)?;
                goal = Some(atoms);
            }
            other => return Err(PddlError::UnsupportedFeature(format!("section {other}"))),
        }
    }

    let domain_name = domain_name.ok_or_else(|| missing(&root, "`(:domain <name>)`"))?;
    if domain_name != domain.name {
        return Err(PddlError::DomainMismatch {
            expected: domain.name.clone(),
            found: domain_name,
        });
    }
    let problem = ProblemModel {
        name,
        domain_name,
        objects,
        init: init.unwrap_or_default(),
        goal: goal.ok_or_else(|| missing(&root, "`(:goal ...)`"))?,
    };
    validate(&problem, domain)?;
    Ok(problem)
}

fn validate(problem: &ProblemModel, domain: &DomainModel) -> Result<(), PddlError> {
    let mut types: HashMap<&str, &str> = HashMap::new();
    for o in domain.constants.iter().chain(&problem.objects) {
        if !domain.has_type(&o.ty) {
            return Err(PddlError::UndeclaredSymbol {
                kind: "type",
                name: o.ty.clone(),
            });
        }
        if let Some(prev) = types.insert(&o.name, &o.ty) {
            if prev != o.ty {
                return Err(PddlError::InvalidProblem(format!(
                    "object `{}` declared with types `{prev}` and `{}`",
                    o.name, o.ty
                )));
            }
        }
    }
    let lookup = |name: &str| types.get(name).map(|t| t.to_string());
    for atom in problem.init.atoms().iter().chain(&problem.goal) {
        domain.check_atom(atom, lookup)?;
    }
    Ok(())
}

fn parse_ground_atom(node: &SExpr) -> Result<Atom, PddlError> {
    let items = expect_list(node, "a ground atom")?;
    let pred = expect_symbol(items.first(), node, "a predicate name")?;
    if matches!(pred, "not" | "or" | "forall" | "exists" | "imply" | "=") {
        return Err(PddlError::UnsupportedFeature(format!("`{pred}` in problem")));
    }
    let args = items[1..]
        .iter()
        .map(|a| {
            let s = a.as_symbol().ok_or_else(|| syntax(a, "an object name"))?;
            if s.starts_with('?') {
                return Err(syntax(a, "an object name"));
            }
            Ok(s.to_string())
        })
        .collect::<Result<_, _>>()?;
    Ok(Atom {
        predicate: pred.to_string(),
        args,
    })
}

fn collect_goal(node: &SExpr, out: &mut BTreeSet<Atom>) -> Result<(), PddlError> {
    let items = expect_list(node, "a goal formula")?;
    match items.first().and_then(SExpr::as_symbol) {
        None if items.is_empty() => Ok(()),
        Some("and") => items[1..].iter().try_for_each(|g| collect_goal(g, out)),
        _ => {
            out.insert(parse_ground_atom(node)?);
            Ok(())
        }
    }
}

impl fmt::Display for ProblemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain_name)?;
        f.write_str("  (:objects")?;
        for o in &self.objects {
            write!(f, " {} - {}", o.name, o.ty)?;
        }
        writeln!(f, ")")?;
        f.write_str("  (:init")?;
        for a in &self.init {
            write!(f, " {a}")?;
        }
        writeln!(f, ")")?;
        f.write_str("  (:goal (and")?;
        for a in &self.goal {
            write!(f, " {a}")?;
        }
        writeln!(f, ")))")
    }
}
