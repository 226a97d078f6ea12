//! Integer-indexed grounding of a task for search.

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use crate::pddl::{ActionSchema, Atom, AtomTemplate, GroundAction, State, Task, Term};

/// Fixed-width bit set over atom indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitState(SmallVec<[u64; 2]>);

impl BitState {
    pub fn empty(bits: usize) -> Self {
        BitState(smallvec::smallvec![0; bits.div_ceil(64).max(1)])
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        self.0[(i / 64) as usize] & (1u64 << (i % 64)) != 0
    }

    #[inline]
    pub fn insert(&mut self, i: u32) {
        self.0[(i / 64) as usize] |= 1u64 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: u32) {
        self.0[(i / 64) as usize] &= !(1u64 << (i % 64));
    }

    pub fn words(&self) -> &[u64] {
        &self.0
    }

    pub fn is_subset(&self, other: &BitState) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a & !b == 0)
    }

    fn from_ids(bits: usize, ids: impl IntoIterator<Item = u32>) -> Self {
        let mut s = BitState::empty(bits);
        for i in ids {
            s.insert(i);
        }
        s
    }

    pub fn ones(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                (rest != 0).then(|| {
                    let b = rest.trailing_zeros();
                    rest &= rest - 1;
                    w as u32 * 64 + b
                })
            })
        })
    }
}

type Key = SmallVec<[u32; 4]>;

/// Schema index, binding, and pre/add/del atom ids of a ground action.
type RawAction = (usize, Key, [SmallVec<[u32; 8]>; 3]);

#[derive(Debug, Clone)]
pub struct CompiledAction {
    /// Index into the domain's schemas.
    pub schema: usize,
    /// Name ids of the arguments.
    pub args: SmallVec<[u32; 4]>,
    pub pre: BitState,
    pub add: BitState,
    pub del: BitState,
}

/// A task grounded over its relaxed-reachable atoms.
#[derive(Debug, Clone)]
pub struct CompiledTask<'a> {
    task: &'a Task,
    names: Vec<&'a str>,
    /// `[predicate, args...]` name ids, sorted as the atoms they denote.
    atoms: Vec<Key>,
    pub actions: Vec<CompiledAction>,
    pub init: BitState,
    pub goal: Vec<u32>,
    pub goal_mask: BitState,
    /// False when some goal atom is not even relaxed-reachable.
    pub goal_reachable: bool,
    /// Precondition and add masks of all actions, laid end to end.
    pub(crate) pre_words: Vec<u64>,
    pub(crate) add_words: Vec<u64>,
}

impl<'a> CompiledTask<'a> {
    pub fn compile(task: &'a Task) -> CompiledTask<'a> {
        let static_preds = static_predicates(task);
        let mut keys = Keys::default();
        // init atoms are interned first, so they are exactly the ids below `in_init`
        for a in task.problem.init.atoms() {
            keys.atom(a);
        }
        let in_init = keys.atoms.len() as u32;

        // ground straight onto atom ids
        let mut raw: Vec<RawAction> = Vec::new();
        for (si, schema) in task.domain.schemas.iter().enumerate() {
            let pre = lower(schema, &schema.preconditions, &static_preds, &mut keys);
            let add = lower(schema, &schema.add_effects, &static_preds, &mut keys);
            let del = lower(schema, &schema.del_effects, &static_preds, &mut keys);
            let candidates: Vec<Vec<u32>> = schema
                .params
                .iter()
                .map(|p| task.objects_of_type(&p.ty).into_iter().map(|o| keys.name(o)).collect())
                .collect();
            let mut found = Vec::new();
            enumerate(&pre, &candidates, &mut keys, in_init, &mut Key::new(), &mut found);
            for b in found {
                let effects = [&pre, &add, &del].map(|ts| ts.iter().map(|t| keys.ground(t, &b)).collect());
                raw.push((si, b, effects));
            }
        }

        // relaxed reachability
        let n = keys.atoms.len();
        let mut reached = vec![false; n];
        reached[..in_init as usize].fill(true);
        let mut live = vec![false; raw.len()];
        loop {
            let mut changed = false;
            for (i, (_, _, [pre, add, _])) in raw.iter().enumerate() {
                if live[i] || !pre.iter().all(|&p| reached[p as usize]) {
                    continue;
                }
                live[i] = true;
                for &e in add {
                    reached[e as usize] = true;
                }
                changed = true;
            }
            if !changed {
                break;
            }
        }

        let mut order: Vec<u32> = (0..n as u32).filter(|&i| reached[i as usize]).collect();
        let spelled = |i: u32| keys.atoms[i as usize].iter().map(|&n| keys.names[n as usize]);
        order.sort_by(|&x, &y| spelled(x).cmp(spelled(y)));
        let mut remap = vec![u32::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let bits = order.len();
        let mask = |v: &[u32]| {
            BitState::from_ids(bits, v.iter().map(|&i| remap[i as usize]).filter(|&i| i != u32::MAX))
        };

        let actions: Vec<CompiledAction> = raw
            .iter()
            .zip(&live)
            .filter(|(_, l)| **l)
            .map(|((schema, args, [pre, add, del]), _)| CompiledAction {
                schema: *schema,
                args: args.clone(),
                pre: mask(pre),
                add: mask(add),
                del: mask(del),
            })
            .collect();
        let init = BitState::from_ids(bits, (0..in_init).map(|i| remap[i as usize]));
        let mut goal = Vec::new();
        let mut goal_reachable = true;
        for g in &task.problem.goal {
            match keys.find(g).map(|i| remap[i as usize]).filter(|&i| i != u32::MAX) {
                Some(i) => goal.push(i),
                None => goal_reachable = false,
            }
        }
        let mut pre_words = Vec::with_capacity(actions.len() * init.words().len());
        let mut add_words = Vec::with_capacity(pre_words.capacity());
        for a in &actions {
            pre_words.extend_from_slice(a.pre.words());
            add_words.extend_from_slice(a.add.words());
        }
        let mut atoms = std::mem::take(&mut keys.atoms);
        let atoms = order.iter().map(|&i| std::mem::take(&mut atoms[i as usize])).collect();
        CompiledTask {
            task,
            names: keys.names,
            atoms,
            goal_mask: BitState::from_ids(bits, goal.iter().copied()),
            actions,
            init,
            goal,
            goal_reachable,
            pre_words,
            add_words,
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, i: u32) -> Atom {
        let key = &self.atoms[i as usize];
        Atom {
            predicate: self.names[key[0] as usize].to_string(),
            args: key[1..].iter().map(|&o| self.names[o as usize].to_string()).collect(),
        }
    }

    pub fn ground_action(&self, i: usize) -> GroundAction {
        let a = &self.actions[i];
        let args = a.args.iter().map(|&o| self.names[o as usize].to_string()).collect();
        self.task.resolve(self.task.domain.schemas[a.schema].name.clone(), args)
    }

    pub fn is_goal(&self, s: &BitState) -> bool {
        self.goal_mask.is_subset(s)
    }

    pub fn applicable(&self, action: &CompiledAction, s: &BitState) -> bool {
        action.pre.is_subset(s)
    }

    pub fn successor(&self, action: &CompiledAction, s: &BitState) -> BitState {
        let mut next = s.clone();
        for ((n, d), a) in next.0.iter_mut().zip(action.del.0.iter()).zip(action.add.0.iter()) {
            *n = (*n & !d) | a;
        }
        next
    }

    pub fn to_state(&self, s: &BitState) -> State {
        s.ones().map(|i| self.atom(i)).collect()
    }
}

fn static_predicates(task: &Task) -> FxHashSet<&str> {
    let dynamic: FxHashSet<&str> = task
        .domain
        .schemas
        .iter()
        .flat_map(|s| s.add_effects.iter().chain(&s.del_effects))
        .map(|t| t.predicate.as_str())
        .collect();
    task.domain
        .predicates
        .iter()
        .map(|p| p.name.as_str())
        .filter(|p| !dynamic.contains(p))
        .collect()
}

enum Slot<'a> {
    Param(usize),
    Const(&'a str),
}

struct Template<'a> {
    pred: u32,
    slots: Vec<Slot<'a>>,
    is_static: bool,
}

fn lower<'a>(
    schema: &'a ActionSchema,
    templates: &'a [AtomTemplate],
    static_preds: &FxHashSet<&str>,
    keys: &mut Keys<'a>,
) -> Vec<Template<'a>> {
    let slot = |t: &'a Term| match t {
        Term::Var(v) => Slot::Param(
            schema
                .params
                .iter()
                .position(|p| &p.name == v)
                .expect("schema variables are validated at parse time"),
        ),
        Term::Const(c) => Slot::Const(c.as_str()),
    };
    templates
        .iter()
        .map(|t| Template {
            pred: keys.name(&t.predicate),
            slots: t.terms.iter().map(slot).collect(),
            is_static: static_preds.contains(t.predicate.as_str()),
        })
        .collect()
}

/// Atoms interned as `[predicate, args...]` name ids.
#[derive(Default)]
struct Keys<'a> {
    names: Vec<&'a str>,
    name_ix: FxHashMap<&'a str, u32>,
    atoms: Vec<Key>,
    index: FxHashMap<Key, u32>,
    scratch: Key,
}

impl<'a> Keys<'a> {
    fn name(&mut self, n: &'a str) -> u32 {
        *self.name_ix.entry(n).or_insert_with(|| {
            self.names.push(n);
            self.names.len() as u32 - 1
        })
    }

    fn intern_scratch(&mut self) -> u32 {
        if let Some(&i) = self.index.get(&self.scratch[..]) {
            return i;
        }
        self.atoms.push(self.scratch.clone());
        self.index.insert(self.scratch.clone(), self.atoms.len() as u32 - 1);
        self.atoms.len() as u32 - 1
    }

    fn atom(&mut self, a: &'a Atom) -> u32 {
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        scratch.push(self.name(&a.predicate));
        for x in &a.args {
            scratch.push(self.name(x));
        }
        self.scratch = scratch;
        self.intern_scratch()
    }

    /// Writes the key of `t` under a possibly partial binding into the
    /// scratch buffer; false if an unbound parameter is needed.
    fn fill(&mut self, t: &Template<'a>, binding: &[u32]) -> bool {
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        scratch.push(t.pred);
        let mut complete = true;
        for s in &t.slots {
            match *s {
                Slot::Param(i) if i < binding.len() => scratch.push(binding[i]),
                Slot::Param(_) => {
                    complete = false;
                    break;
                }
                Slot::Const(c) => scratch.push(self.name(c)),
            }
        }
        self.scratch = scratch;
        complete
    }

    fn ground(&mut self, t: &Template<'a>, binding: &[u32]) -> u32 {
        self.fill(t, binding);
        self.intern_scratch()
    }

    fn find(&self, a: &Atom) -> Option<u32> {
        let mut key = Key::new();
        key.push(*self.name_ix.get(a.predicate.as_str())?);
        for x in &a.args {
            key.push(*self.name_ix.get(x.as_str())?);
        }
        self.index.get(&key).copied()
    }
}

/// Backtracking over parameter bindings; a static precondition whose
/// parameters are all bound must hold initially.
fn enumerate<'a>(
    pre: &[Template<'a>],
    candidates: &[Vec<u32>],
    keys: &mut Keys<'a>,
    in_init: u32,
    binding: &mut Key,
    found: &mut Vec<Key>,
) {
    if binding.len() == candidates.len() {
        found.push(binding.clone());
        return;
    }
    for &obj in &candidates[binding.len()] {
        binding.push(obj);
        let ok = pre.iter().filter(|t| t.is_static).all(|t| {
            !keys.fill(t, binding) || keys.index.get(&keys.scratch).is_some_and(|&i| i < in_init)
        });
        if ok {
            enumerate(pre, candidates, keys, in_init, binding, found);
        }
        binding.pop();
    }
}
