use std::collections::HashMap;

use super::{
    ActionSchema, DomainModel, GroundAction, PddlError, ProblemModel, State, Unresolvable,
};

/// A domain paired with one of its problems; the context plans are
/// resolved and executed in.
#[derive(Debug, Clone)]
pub struct Task {
    pub domain: DomainModel,
    pub problem: ProblemModel,
    object_types: HashMap<String, String>,
}

impl Task {
    pub fn new(domain: DomainModel, problem: ProblemModel) -> Self {
        let object_types = domain
            .constants
            .iter()
            .chain(&problem.objects)
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect();
        Task {
            domain,
            problem,
            object_types,
        }
    }

    /// Same task with a different initial state; the goal is kept.
    pub fn with_init(&self, init: State) -> Task {
        let mut t = self.clone();
        t.problem.init = init;
        t
    }

    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.object_types.get(name).map(String::as_str)
    }

    /// Problem objects and domain constants whose type is `ty` or below it,
    /// sorted by name.
    pub fn objects_of_type(&self, ty: &str) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .object_types
            .iter()
            .filter(|(_, t)| self.domain.is_subtype(t, ty))
            .map(|(n, _)| n.as_str())
            .collect();
        v.sort_unstable();
        v
    }

    /// Strict grounding: arity and argument types must match.
    pub fn ground(&self, schema: &ActionSchema, args: &[String]) -> Result<GroundAction, PddlError> {
        if args.len() != schema.arity() {
            return Err(PddlError::ArityMismatch {
                name: schema.name.clone(),
                expected: schema.arity(),
                found: args.len(),
            });
        }
        for (arg, param) in args.iter().zip(&schema.params) {
            let ty = self
                .object_type(arg)
                .ok_or_else(|| PddlError::UndeclaredSymbol {
                    kind: "object",
                    name: arg.clone(),
                })?;
            if !self.domain.is_subtype(ty, &param.ty) {
                return Err(PddlError::TypeMismatch {
                    object: arg.clone(),
                    expected: param.ty.clone(),
                });
            }
        }
        let grounding = schema.instantiate(args)?;
        Ok(GroundAction::resolved(schema.name.clone(), args.to_vec(), grounding))
    }

    /// Lenient grounding used for candidate plans: failures become an
    /// unresolved action instead of an error.
    pub fn resolve(&self, name: String, args: Vec<String>) -> GroundAction {
        let Some(schema) = self.domain.schema(&name) else {
            return GroundAction::unresolved(name, args, Unresolvable::UnknownAction);
        };
        match self.ground(schema, &args) {
            Ok(a) => a,
            Err(e) => {
                let reason = match e {
                    PddlError::ArityMismatch { expected, found, .. } => {
                        Unresolvable::ArityMismatch { expected, found }
                    }
                    PddlError::TypeMismatch { object, expected } => {
                        Unresolvable::TypeMismatch { object, expected }
                    }
                    PddlError::UndeclaredSymbol { name: object, .. } => {
                        Unresolvable::UnknownObject { object }
                    }
                    _ => Unresolvable::UnknownAction,
                };
                GroundAction::unresolved(name, args, reason)
            }
        }
    }

    pub fn action(&self, name: &str, args: &[&str]) -> GroundAction {
        self.resolve(name.to_string(), args.iter().map(|s| s.to_string()).collect())
    }
}
