//! Exhaustive breadth-first reachability with on-the-fly property checking
//! and shortest counterexample extraction via parent links.
//!
//! The visited set deduplicates by structural equality over every state
//! field, including the counter. The frontier expands successors in
//! ascending rule id and BFS layer order, so reported witnesses are
//! deterministic. A brute-force depth-bounded enumerator without in-recursion
//! deduplication serves as an independent oracle for the visited-set logic.

use crate::engine::{Trace, TraceStep};
use crate::invariants::{conjunct_singleton_channels, PropertyDef};
use crate::rules::{RuleCatalog, RuleId};
use crate::state::SystemState;
use serde::Serialize;
use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

#[derive(Debug, Clone)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: Option<usize>,
    /// Names of registered properties to check on every discovered state.
    pub properties: Vec<String>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 10_000_000,
            max_depth: None,
            properties: Vec::new(),
        }
    }
}

impl Limits {
    pub fn with_properties(names: &[&str]) -> Self {
        Limits {
            properties: names.iter().map(|s| s.to_string()).collect(),
            ..Limits::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Violation(Trace),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExploreReport {
    pub reachable_count: usize,
    pub terminal_count: usize,
    pub depth_reached: usize,
    pub verdicts: BTreeMap<String, Verdict>,
    pub truncated: bool,
}

impl ExploreReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.values().all(|v| v.holds())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("unknown property: {0}")]
    UnknownProperty(String),
}

/// The raw result of a breadth-first run: every discovered state with its
/// depth and the (parent, rule) edge it was first reached by.
pub struct Exploration {
    pub states: Vec<SystemState>,
    pub depths: Vec<usize>,
    pub parents: Vec<Option<(usize, RuleId)>>,
    pub terminal: Vec<bool>,
    pub truncated: bool,
}

impl Exploration {
    pub fn depth_reached(&self) -> usize {
        self.depths.last().copied().unwrap_or(0)
    }

    /// States discovered at depth `<= depth`.
    pub fn slice_to_depth(&self, depth: usize) -> HashSet<SystemState> {
        self.states
            .iter()
            .zip(&self.depths)
            .filter(|(_, d)| **d <= depth)
            .map(|(s, _)| s.clone())
            .collect()
    }

    /// Shortest trace from the initial state to the state at `index`.
    pub fn trace_to(&self, catalog: &RuleCatalog, index: usize) -> Trace {
        let mut chain = Vec::new();
        let mut cur = index;
        while let Some((parent, rule)) = self.parents[cur] {
            chain.push((rule, cur));
            cur = parent;
        }
        chain.reverse();
        let mut trace = Trace::new(self.states[0].clone());
        for (rule, state_idx) in chain {
            trace.steps.push(TraceStep {
                rule: catalog.rule(rule).name.clone(),
                state: self.states[state_idx].clone(),
            });
        }
        trace
    }
}

/// Runs BFS from `initial` under `limits`. Stored states are concrete; the
/// visited set is keyed by [`SystemState::canonical_form`], which quotients
/// away the unbounded transaction-identifier history (an instruction whose
/// line keeps being stolen re-issues with ever-fresh identifiers, so the
/// concrete space is infinite while the quotient is finite and exact for
/// every property checked here). States violating the singleton-channel
/// property are recorded but never expanded, so a relaxation can never drive
/// the search into unbounded channel growth.
pub fn explore_states(catalog: &RuleCatalog, initial: &SystemState, limits: &Limits) -> Exploration {
    let mut states: Vec<SystemState> = vec![initial.clone()];
    let mut depths: Vec<usize> = vec![0];
    let mut parents: Vec<Option<(usize, RuleId)>> = vec![None];
    let mut terminal: Vec<bool> = vec![false];
    let mut index: HashMap<SystemState, usize> = HashMap::new();
    index.insert(initial.canonical_form(), 0);

    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);
    let mut truncated = false;

    while let Some(cur) = queue.pop_front() {
        let depth = depths[cur];
        if let Some(max) = limits.max_depth {
            if depth >= max {
                truncated = true;
                continue;
            }
        }
        if !conjunct_singleton_channels(&states[cur]) {
            // channel overflow: report via properties, do not expand
            continue;
        }
        let mut any = false;
        let successors: Vec<(RuleId, SystemState)> = catalog
            .rules
            .iter()
            .filter(|r| r.enabled(&states[cur]))
            .map(|r| (r.id, r.apply_unchecked(&states[cur])))
            .collect();
        for (rule, next) in successors {
            any = true;
            let key = next.canonical_form();
            if states.len() >= limits.max_states && !index.contains_key(&key) {
                truncated = true;
                continue;
            }
            match index.entry(key) {
                Entry::Occupied(_) => {}
                Entry::Vacant(slot) => {
                    let id = states.len();
                    states.push(next);
                    depths.push(depth + 1);
                    parents.push(Some((cur, rule)));
                    terminal.push(false);
                    slot.insert(id);
                    queue.push_back(id);
                }
            }
        }
        terminal[cur] = !any;
    }

    Exploration { states, depths, parents, terminal, truncated }
}

/// Exhaustive exploration with property checking. Verdicts carry the
/// shortest-by-BFS witness trace for the first violating state found.
pub fn explore(
    catalog: &RuleCatalog,
    initial: &SystemState,
    limits: &Limits,
    registry: &[PropertyDef],
) -> Result<ExploreReport, ExploreError> {
    let props: Vec<&PropertyDef> = limits
        .properties
        .iter()
        .map(|name| {
            registry
                .iter()
                .find(|p| p.name == name.as_str())
                .ok_or_else(|| ExploreError::UnknownProperty(name.clone()))
        })
        .collect::<Result<_, _>>()?;

    let exploration = explore_states(catalog, initial, limits);
    let mut verdicts: BTreeMap<String, Verdict> = props
        .iter()
        .map(|p| (p.name.to_string(), Verdict::Holds))
        .collect();

    // BFS discovery order is depth order, so the first violation per
    // property is a shortest one.
    for (idx, state) in exploration.states.iter().enumerate() {
        for p in &props {
            if !(p.predicate)(state) {
                let entry = verdicts.get_mut(p.name).unwrap();
                if entry.holds() {
                    *entry = Verdict::Violation(exploration.trace_to(catalog, idx));
                }
            }
        }
    }

    Ok(ExploreReport {
        reachable_count: exploration.states.len(),
        terminal_count: exploration.terminal.iter().filter(|t| **t).count(),
        depth_reached: exploration.depth_reached(),
        verdicts,
        truncated: exploration.truncated,
    })
}

/// Shortest violating trace for one property, if any reachable state
/// violates it within the limits.
pub fn find_violation(
    catalog: &RuleCatalog,
    initial: &SystemState,
    property: &str,
    limits: &Limits,
    registry: &[PropertyDef],
) -> Result<Option<Trace>, ExploreError> {
    let mut limits = limits.clone();
    limits.properties = vec![property.to_string()];
    let report = explore(catalog, initial, &limits, registry)?;
    Ok(match report.verdicts.into_iter().next() {
        Some((_, Verdict::Violation(trace))) => Some(trace),
        _ => None,
    })
}

/// Brute-force oracle: every state reachable in at most `depth` steps,
/// computed by naive recursive expansion with no deduplication during the
/// recursion; duplicates collapse only in the returned set. Exponential in
/// `depth`; useful only at small depths.
pub fn enumerate_oracle(
    catalog: &RuleCatalog,
    initial: &SystemState,
    depth: usize,
) -> HashSet<SystemState> {
    fn recurse(
        catalog: &RuleCatalog,
        state: &SystemState,
        depth_left: usize,
        acc: &mut Vec<SystemState>,
    ) {
        acc.push(state.clone());
        if depth_left == 0 {
            return;
        }
        for rule in &catalog.rules {
            if rule.enabled(state) {
                let next = rule.apply_unchecked(state);
                recurse(catalog, &next, depth_left - 1, acc);
            }
        }
    }
    let mut acc = Vec::new();
    recurse(catalog, initial, depth, &mut acc);
    acc.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::build_catalog;
    use crate::invariants::default_properties;
    use crate::rules::RelaxConfig;
    use crate::state::{
        mk_initial_state, DeviceLine, DeviceState, HostLine, HostState, Instruction,
    };

    fn store_load_initial() -> SystemState {
        mk_initial_state(
            DeviceLine::new(-1, DeviceState::I),
            DeviceLine::new(-1, DeviceState::I),
            HostLine::new(0, HostState::I),
            vec![Instruction::Store],
            vec![Instruction::Load],
        )
        .unwrap()
    }

    #[test]
    fn faithful_store_load_holds_swmr() {
        let c = build_catalog(RelaxConfig::faithful());
        let report = explore(
            &c,
            &store_load_initial(),
            &Limits::with_properties(&["swmr"]),
            &default_properties(),
        )
        .unwrap();
        assert!(report.all_hold());
        assert!(!report.truncated);
    }

    #[test]
    fn relaxed_store_load_violates_swmr_within_eight_steps() {
        let mut cfg = RelaxConfig::faithful();
        cfg.snoop_pushes_go = false;
        let c = build_catalog(cfg);
        let witness = find_violation(
            &c,
            &store_load_initial(),
            "swmr",
            &Limits::default(),
            &default_properties(),
        )
        .unwrap()
        .expect("violation must be reachable");
        assert!(witness.len() <= 8);
        let last = witness.final_state();
        assert_eq!(last.devcache1.state, DeviceState::EM);
        assert_eq!(last.devcache2.state, DeviceState::SH);
    }

    #[test]
    fn empty_programs_explore_to_single_state() {
        let c = build_catalog(RelaxConfig::faithful());
        let s = mk_initial_state(
            DeviceLine::new(0, DeviceState::I),
            DeviceLine::new(0, DeviceState::I),
            HostLine::new(0, HostState::I),
            vec![],
            vec![],
        )
        .unwrap();
        let report = explore(&c, &s, &Limits::default(), &default_properties()).unwrap();
        assert_eq!(report.reachable_count, 1);
        assert_eq!(report.terminal_count, 1);
        assert!(!report.truncated);
    }

    #[test]
    fn unknown_property_is_an_error() {
        let c = build_catalog(RelaxConfig::faithful());
        let err = explore(
            &c,
            &store_load_initial(),
            &Limits::with_properties(&["no_such_property"]),
            &default_properties(),
        )
        .unwrap_err();
        assert_eq!(err, ExploreError::UnknownProperty("no_such_property".into()));
    }

    #[test]
    fn oracle_depth_zero_is_singleton() {
        let c = build_catalog(RelaxConfig::faithful());
        let s = store_load_initial();
        let set = enumerate_oracle(&c, &s, 0);
        assert_eq!(set.len(), 1);
        assert!(set.contains(&s));
    }

    #[test]
    fn bfs_slice_equals_oracle_up_to_canonical_form() {
        let c = build_catalog(RelaxConfig::faithful());
        let s = store_load_initial();
        let exploration = explore_states(&c, &s, &Limits::default());
        for depth in 0..=4 {
            let bfs: HashSet<SystemState> = exploration
                .slice_to_depth(depth)
                .into_iter()
                .map(|s| s.canonical_form())
                .collect();
            let oracle: HashSet<SystemState> = enumerate_oracle(&c, &s, depth)
                .into_iter()
                .map(|s| s.canonical_form())
                .collect();
            assert_eq!(bfs, oracle, "slice mismatch at depth {depth}");
        }
    }

    #[test]
    fn max_states_limit_truncates() {
        let c = build_catalog(RelaxConfig::faithful());
        let s = store_load_initial();
        let limits = Limits { max_states: 10, ..Limits::default() };
        let exploration = explore_states(&c, &s, &limits);
        assert!(exploration.truncated);
        assert!(exploration.states.len() <= 10);
    }
}
