use std::collections::{BTreeMap, HashSet};
use std::fmt;

use super::sexpr::{self, SExpr};
use super::{Atom, Grounding, PddlError, OBJECT_TYPE};

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing"];

/// Formula heads outside the STRIPS fragment.
const UNSUPPORTED_HEADS: &[&str] = &[
    "not", "or", "imply", "forall", "exists", "when", "=", "increase", "decrease", "assign",
    "scale-up", "scale-down", "either", "preference",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Schema variable, stored with its leading `?`.
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomTemplate {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for t in &self.terms {
            write!(f, " {t}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub preconditions: Vec<AtomTemplate>,
    pub add_effects: Vec<AtomTemplate>,
    pub del_effects: Vec<AtomTemplate>,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Substitutes `args` for the parameters. Only the arity is checked here;
    /// type checking needs the problem's objects (see [`super::Task::ground`]).
    pub fn instantiate(&self, args: &[String]) -> Result<Grounding, PddlError> {
        if args.len() != self.params.len() {
            return Err(PddlError::ArityMismatch {
                name: self.name.clone(),
                expected: self.params.len(),
                found: args.len(),
            });
        }
        let subst = |t: &AtomTemplate| Atom {
            predicate: t.predicate.clone(),
            args: t
                .terms
                .iter()
                .map(|term| match term {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => {
                        let i = self
                            .params
                            .iter()
                            .position(|p| &p.name == v)
                            .expect("schema variables are validated at parse time");
                        args[i].clone()
                    }
                })
                .collect(),
        };
        Ok(Grounding {
            preconditions: self.preconditions.iter().map(subst).collect(),
            add_effects: self.add_effects.iter().map(subst).collect(),
            del_effects: self.del_effects.iter().map(subst).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    /// Declared type -> explicit parent (`None` means directly under `object`).
    pub types: BTreeMap<String, Option<String>>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub schemas: Vec<ActionSchema>,
}

impl DomainModel {
    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.contains_key(ty)
    }

    /// True when `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE || ty == ancestor {
            return true;
        }
        let mut current = ty;
        // bounded walk guards against cyclic declarations
        for _ in 0..=self.types.len() {
            match self.types.get(current) {
                Some(Some(parent)) if parent == ancestor => return true,
                Some(Some(parent)) => current = parent,
                _ => return false,
            }
        }
        false
    }

    pub(crate) fn check_atom(
        &self,
        atom: &Atom,
        object_type: impl Fn(&str) -> Option<String>,
    ) -> Result<(), PddlError> {
        let decl = self
            .predicate(&atom.predicate)
            .ok_or_else(|| PddlError::UndeclaredSymbol {
                kind: "predicate",
                name: atom.predicate.clone(),
            })?;
        if decl.params.len() != atom.args.len() {
            return Err(PddlError::ArityMismatch {
                name: atom.predicate.clone(),
                expected: decl.params.len(),
                found: atom.args.len(),
            });
        }
        for (arg, param) in atom.args.iter().zip(&decl.params) {
            let ty = object_type(arg).ok_or_else(|| PddlError::UndeclaredSymbol {
                kind: "object",
                name: arg.clone(),
            })?;
            if !self.is_subtype(&ty, &param.ty) {
                return Err(PddlError::TypeMismatch {
                    object: arg.clone(),
                    expected: param.ty.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Parses a `(define (domain ...))` form in the STRIPS + typing subset.
pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    let root = sexpr::parse_one(text)?;
    let items = expect_list(&root, "`(define ...)`")?;
    expect_keyword(items.first(), &root, "define")?;
    let header = items.get(1).ok_or_else(|| missing(&root, "`(domain <name>)`"))?;
    let header_items = expect_list(header, "`(domain <name>)`")?;
    expect_keyword(header_items.first(), header, "domain")?;
    let name = expect_symbol(header_items.get(1), header, "domain name")?.to_string();

    let mut domain = DomainModel {
        name,
        requirements: Vec::new(),
        types: BTreeMap::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        schemas: Vec::new(),
    };

    for section in &items[2..] {
        let sec = expect_list(section, "a domain section")?;
        let head = expect_symbol(sec.first(), section, "section keyword")?;
        match head {
            ":requirements" => {
                for r in &sec[1..] {
                    let r = expect_symbol(Some(r), section, "requirement flag")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r) {
                        return Err(PddlError::UnsupportedFeature(format!("requirement {r}")));
                    }
                    domain.requirements.push(r.to_string());
                }
            }
            ":types" => {
                for (name, parent) in parse_typed_list(&sec[1..])? {
                    if name == OBJECT_TYPE {
                        continue;
                    }
                    domain.types.insert(name, parent);
                }
            }
            ":constants" => {
                for (name, ty) in parse_typed_list(&sec[1..])? {
                    domain.constants.push(TypedName {
                        name,
                        ty: ty.unwrap_or_else(|| OBJECT_TYPE.to_string()),
                    });
                }
            }
            ":predicates" => {
                for p in &sec[1..] {
                    let pitems = expect_list(p, "a predicate declaration")?;
                    let pname = expect_symbol(pitems.first(), p, "predicate name")?;
                    if domain.predicate(pname).is_some() {
                        return Err(PddlError::InvalidDomain(format!(
                            "predicate `{pname}` declared twice"
                        )));
                    }
                    let params = typed_vars(&pitems[1..])?;
                    domain.predicates.push(PredicateDecl {
                        name: pname.to_string(),
                        params,
                    });
                }
            }
            ":action" => {
                let schema = parse_action(&domain, section, sec)?;
                if domain.schema(&schema.name).is_some() {
                    return Err(PddlError::InvalidDomain(format!(
                        "action `{}` declared twice",
                        schema.name
                    )));
                }
                domain.schemas.push(schema);
            }
            other => {
                return Err(PddlError::UnsupportedFeature(format!("section {other}")));
            }
        }
    }

    // Parents that are never declared on their own become root types.
    let parents: Vec<String> = domain.types.values().flatten().cloned().collect();
    for p in parents {
        if p != OBJECT_TYPE && !domain.types.contains_key(&p) {
            domain.types.insert(p, None);
        }
    }
    for t in domain
        .predicates
        .iter()
        .flat_map(|p| &p.params)
        .chain(&domain.constants)
        .chain(domain.schemas.iter().flat_map(|s| &s.params))
    {
        if !domain.has_type(&t.ty) {
            return Err(PddlError::UndeclaredSymbol {
                kind: "type",
                name: t.ty.clone(),
            });
        }
    }
    Ok(domain)
}

fn parse_action(domain: &DomainModel, node: &SExpr, sec: &[SExpr]) -> Result<ActionSchema, PddlError> {
    let name = expect_symbol(sec.get(1), node, "action name")?.to_string();
    let mut schema = ActionSchema {
        name,
        params: Vec::new(),
        preconditions: Vec::new(),
        add_effects: Vec::new(),
        del_effects: Vec::new(),
    };
    let mut precondition = None;
    let mut effect = None;
    let mut rest = sec[2..].iter();
    while let Some(key) = rest.next() {
        let key_str = expect_symbol(Some(key), node, "`:parameters`, `:precondition` or `:effect`")?;
        let value = rest
            .next()
            .ok_or_else(|| missing(node, &format!("a value after `{key_str}`")))?;
        match key_str {
            ":parameters" => {
                schema.params = typed_vars(expect_list(value, "a parameter list")?)?;
            }
            ":precondition" => precondition = Some(value),
            ":effect" => effect = Some(value),
            other => return Err(PddlError::UnsupportedFeature(format!("action key {other}"))),
        }
    }
    let mut seen = HashSet::new();
    for p in &schema.params {
        if !seen.insert(&p.name) {
            return Err(PddlError::InvalidDomain(format!(
                "parameter `{}` repeated in `{}`",
                p.name, schema.name
            )));
        }
    }
    if let Some(pre) = precondition {
        collect_conjunction(pre, &mut schema.preconditions)?;
    }
    if let Some(eff) = effect {
        let (mut add, mut del) = (Vec::new(), Vec::new());
        collect_effects(eff, &mut add, &mut del)?;
        schema.add_effects = add;
        schema.del_effects = del;
    }
    for t in schema
        .preconditions
        .iter()
        .chain(&schema.add_effects)
        .chain(&schema.del_effects)
    {
        validate_template(domain, &schema, t)?;
    }
    if let Some(t) = schema.add_effects.iter().find(|t| schema.del_effects.contains(t)) {
        return Err(PddlError::InvalidDomain(format!(
            "`{}` both adds and deletes {t}",
            schema.name
        )));
    }
    Ok(schema)
}

fn validate_template(domain: &DomainModel, schema: &ActionSchema, t: &AtomTemplate) -> Result<(), PddlError> {
    let decl = domain
        .predicate(&t.predicate)
        .ok_or_else(|| PddlError::UndeclaredSymbol {
            kind: "predicate",
            name: t.predicate.clone(),
        })?;
    if decl.params.len() != t.terms.len() {
        return Err(PddlError::ArityMismatch {
            name: t.predicate.clone(),
            expected: decl.params.len(),
            found: t.terms.len(),
        });
    }
    for term in &t.terms {
        match term {
            Term::Var(v) if !schema.params.iter().any(|p| &p.name == v) => {
                return Err(PddlError::UndeclaredSymbol {
                    kind: "variable",
                    name: v.clone(),
                })
            }
            Term::Const(c) if !domain.constants.iter().any(|k| &k.name == c) => {
                return Err(PddlError::UndeclaredSymbol {
                    kind: "constant",
                    name: c.clone(),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

fn collect_conjunction(node: &SExpr, out: &mut Vec<AtomTemplate>) -> Result<(), PddlError> {
    let items = expect_list(node, "a precondition formula")?;
    match items.first().and_then(SExpr::as_symbol) {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for sub in &items[1..] {
                collect_conjunction(sub, out)?;
            }
            Ok(())
        }
        _ => {
            out.push(parse_template(node)?);
            Ok(())
        }
    }
}

fn collect_effects(node: &SExpr, add: &mut Vec<AtomTemplate>, del: &mut Vec<AtomTemplate>) -> Result<(), PddlError> {
    let items = expect_list(node, "an effect formula")?;
    match items.first().and_then(SExpr::as_symbol) {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for sub in &items[1..] {
                collect_effects(sub, add, del)?;
            }
            Ok(())
        }
        Some("not") => {
            let inner = items.get(1).ok_or_else(|| missing(node, "an atom inside `not`"))?;
            if items.len() > 2 {
                return Err(syntax(&items[2], "`)`"));
            }
            del.push(parse_template(inner)?);
            Ok(())
        }
        _ => {
            add.push(parse_template(node)?);
            Ok(())
        }
    }
}

fn parse_template(node: &SExpr) -> Result<AtomTemplate, PddlError> {
    let items = expect_list(node, "an atom")?;
    let pred = expect_symbol(items.first(), node, "a predicate name")?;
    if UNSUPPORTED_HEADS.contains(&pred) {
        return Err(PddlError::UnsupportedFeature(format!("`{pred}` formulas")));
    }
    let terms = items[1..]
        .iter()
        .map(|t| {
            let s = expect_symbol(Some(t), node, "a term")?;
            Ok(if s.starts_with('?') {
                Term::Var(s.to_string())
            } else {
                Term::Const(s.to_string())
            })
        })
        .collect::<Result<_, PddlError>>()?;
    Ok(AtomTemplate {
        predicate: pred.to_string(),
        terms,
    })
}

fn typed_vars(items: &[SExpr]) -> Result<Vec<TypedName>, PddlError> {
    parse_typed_list(items).map(|v| {
        v.into_iter()
            .map(|(name, ty)| TypedName {
                name,
                ty: ty.unwrap_or_else(|| OBJECT_TYPE.to_string()),
            })
            .collect()
    })
}

/// Reads `a b - t c` style lists. Names without a trailing `- type` get `None`.
pub(crate) fn parse_typed_list(items: &[SExpr]) -> Result<Vec<(String, Option<String>)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        match item {
            SExpr::Symbol(s, _) if s == "-" => {
                let ty_node = items.get(i + 1).ok_or_else(|| syntax(item, "a type name after `-`"))?;
                if let Some("either") = ty_node.head() {
                    return Err(PddlError::UnsupportedFeature("`either` types".into()));
                }
                let ty = ty_node
                    .as_symbol()
                    .ok_or_else(|| syntax(ty_node, "a type name"))?;
                if pending.is_empty() {
                    return Err(syntax(item, "a name before `-`"));
                }
                for name in pending.drain(..) {
                    out.push((name, Some(ty.to_string())));
                }
                i += 2;
            }
            SExpr::Symbol(s, _) => {
                pending.push(s.clone());
                i += 1;
            }
            SExpr::List(..) => return Err(syntax(item, "a name")),
        }
    }
    out.extend(pending.into_iter().map(|n| (n, None)));
    Ok(out)
}

pub(crate) fn syntax(node: &SExpr, expected: &str) -> PddlError {
    let pos = node.pos();
    PddlError::Syntax {
        line: pos.line,
        col: pos.col,
        expected: expected.to_string(),
        found: node.describe(),
    }
}

pub(crate) fn missing(parent: &SExpr, expected: &str) -> PddlError {
    let pos = parent.pos();
    PddlError::Syntax {
        line: pos.line,
        col: pos.col,
        expected: expected.to_string(),
        found: "end of list".into(),
    }
}

pub(crate) fn expect_list<'a>(node: &'a SExpr, expected: &str) -> Result<&'a [SExpr], PddlError> {
    node.as_list().ok_or_else(|| syntax(node, expected))
}

pub(crate) fn expect_symbol<'a>(node: Option<&'a SExpr>, parent: &SExpr, expected: &str) -> Result<&'a str, PddlError> {
    match node {
        None => Err(missing(parent, expected)),
        Some(n) => n.as_symbol().ok_or_else(|| syntax(n, expected)),
    }
}

pub(crate) fn expect_keyword(node: Option<&SExpr>, parent: &SExpr, kw: &str) -> Result<(), PddlError> {
    let expected = format!("`{kw}`");
    match expect_symbol(node, parent, &expected)? {
        s if s == kw => Ok(()),
        _ => Err(syntax(node.expect("checked above"), &expected)),
    }
}

fn write_typed(f: &mut fmt::Formatter<'_>, names: &[TypedName]) -> fmt::Result {
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{} - {}", n.name, n.ty)?;
    }
    Ok(())
}

fn write_conjunction(f: &mut fmt::Formatter<'_>, atoms: impl Iterator<Item = String>) -> fmt::Result {
    f.write_str("(and")?;
    for a in atoms {
        write!(f, " {a}")?;
    }
    f.write_str(")")
}

impl fmt::Display for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            f.write_str("  (:types")?;
            for (t, parent) in &self.types {
                match parent {
                    Some(p) => write!(f, " {t} - {p}")?,
                    None => write!(f, " {t}")?,
                }
            }
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            f.write_str("  (:constants ")?;
            write_typed(f, &self.constants)?;
            writeln!(f, ")")?;
        }
        f.write_str("  (:predicates")?;
        for p in &self.predicates {
            write!(f, " ({}", p.name)?;
            if !p.params.is_empty() {
                f.write_str(" ")?;
                write_typed(f, &p.params)?;
            }
            f.write_str(")")?;
        }
        f.write_str(")")?;
        for s in &self.schemas {
            write!(f, "\n  (:action {}\n    :parameters (", s.name)?;
            write_typed(f, &s.params)?;
            f.write_str(")\n    :precondition ")?;
            write_conjunction(f, s.preconditions.iter().map(ToString::to_string))?;
            f.write_str("\n    :effect ")?;
            write_conjunction(
                f,
                s.add_effects
                    .iter()
                    .map(ToString::to_string)
                    .chain(s.del_effects.iter().map(|d| format!("(not {d})"))),
            )?;
            f.write_str(")")?;
        }
        writeln!(f, ")")
    }
}
