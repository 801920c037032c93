//! Deterministic single-step and scheduled execution over a rule catalog.

use crate::rules::{RuleCatalog, RuleId};
use crate::state::SystemState;
use serde::{Deserialize, Serialize};

/// A replayable execution: the initial state plus one (rule name, resulting
/// state) pair per step. Each stored state equals the application of the
/// named rule to its predecessor; [`Trace::validate`] re-checks this.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: SystemState,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule: String,
    pub state: SystemState,
}

impl Trace {
    pub fn new(initial: SystemState) -> Self {
        Trace { initial, steps: Vec::new() }
    }

    pub fn final_state(&self) -> &SystemState {
        self.steps.last().map(|s| &s.state).unwrap_or(&self.initial)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// All states in order, starting with the initial one.
    pub fn states(&self) -> impl Iterator<Item = &SystemState> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.state))
    }

    /// Re-applies every named rule and checks each stored state is exactly
    /// reproduced.
    pub fn validate(&self, catalog: &RuleCatalog) -> Result<(), EngineError> {
        let mut current = self.initial.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let next = step_state(catalog, &current, &step.rule)?;
            if next != step.state {
                return Err(EngineError::ScheduleStuck {
                    index: i,
                    rule: step.rule.clone(),
                    state: Box::new(current),
                });
            }
            current = next;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown rule: {0}")]
    UnknownRule(String),
    #[error("rule {0} is not enabled")]
    RuleNotEnabled(String),
    #[error("schedule stuck at step {index}: rule {rule} not enabled")]
    ScheduleStuck {
        index: usize,
        rule: String,
        state: Box<SystemState>,
    },
}

/// Applies the named rule if it exists and is enabled.
pub fn step_state(
    catalog: &RuleCatalog,
    state: &SystemState,
    rule_name: &str,
) -> Result<SystemState, EngineError> {
    let rule = catalog
        .by_name(rule_name)
        .ok_or_else(|| EngineError::UnknownRule(rule_name.to_string()))?;
    if !rule.enabled(state) {
        return Err(EngineError::RuleNotEnabled(rule_name.to_string()));
    }
    Ok(rule.apply_unchecked(state))
}

/// Applies a sequence of rules, stopping with full context at the first rule
/// that is unknown or not enabled.
pub fn run_schedule(
    catalog: &RuleCatalog,
    initial: SystemState,
    schedule: &[String],
) -> Result<Trace, EngineError> {
    let mut trace = Trace::new(initial);
    let mut current = trace.initial.clone();
    for (index, name) in schedule.iter().enumerate() {
        let rule = catalog
            .by_name(name)
            .ok_or_else(|| EngineError::UnknownRule(name.clone()))?;
        if !rule.enabled(&current) {
            return Err(EngineError::ScheduleStuck {
                index,
                rule: name.clone(),
                state: Box::new(current),
            });
        }
        current = rule.apply_unchecked(&current);
        trace.steps.push(TraceStep { rule: name.clone(), state: current.clone() });
    }
    Ok(trace)
}

/// True iff no rule of the catalog is enabled. Scenarios legitimately end
/// with residual Evict instructions on an invalid line, so termination is
/// defined by rule enabledness, not by empty programs.
pub fn is_terminal(catalog: &RuleCatalog, state: &SystemState) -> bool {
    catalog.rules.iter().all(|r| !r.enabled(state))
}

/// Successors of `state` under every enabled rule, in ascending rule id.
pub fn successors(catalog: &RuleCatalog, state: &SystemState) -> Vec<(RuleId, SystemState)> {
    catalog
        .rules
        .iter()
        .filter(|r| r.enabled(state))
        .map(|r| (r.id, r.apply_unchecked(state)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::build_catalog;
    use crate::rules::RelaxConfig;
    use crate::state::{
        mk_initial_state, DeviceLine, DeviceState, HostLine, HostState, Instruction,
    };

    fn catalog() -> RuleCatalog {
        build_catalog(RelaxConfig::faithful())
    }

    fn clean_evict_initial() -> SystemState {
        mk_initial_state(
            DeviceLine::new(0, DeviceState::SH),
            DeviceLine::new(0, DeviceState::SH),
            HostLine::new(0, HostState::SH),
            vec![Instruction::Evict, Instruction::Evict],
            vec![],
        )
        .unwrap()
    }

    fn schedule(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn step_examples() {
        let c = catalog();
        let s = clean_evict_initial();
        let next = step_state(&c, &s, "SharedEvict1").unwrap();
        assert_eq!(next.devcache1.state, DeviceState::SIA);
        assert_eq!(next.counter, 1);

        assert_eq!(
            step_state(&c, &s, "InvalidLoad1").unwrap_err(),
            EngineError::RuleNotEnabled("InvalidLoad1".into())
        );
        assert_eq!(
            step_state(&c, &s, "NoSuchRule").unwrap_err(),
            EngineError::UnknownRule("NoSuchRule".into())
        );
    }

    #[test]
    fn clean_evict_schedule_reaches_expected_final_state() {
        let c = catalog();
        let trace = run_schedule(
            &c,
            clean_evict_initial(),
            &schedule(&[
                "SharedEvict1",
                "Shared_CleanEvict_NotLastDrop1",
                "SIA_GO_WritePullDrop1",
            ]),
        )
        .unwrap();
        let last = trace.final_state();
        assert_eq!(last.devcache1, DeviceLine::new(0, DeviceState::I));
        assert_eq!(last.devcache2, DeviceLine::new(0, DeviceState::SH));
        assert_eq!(last.hcache, HostLine::new(0, HostState::SH));
        assert_eq!(last.counter, 1);
        assert_eq!(last.dprog1, vec![Instruction::Evict]);
        assert!(is_terminal(&c, last));
        trace.validate(&c).unwrap();
    }

    #[test]
    fn empty_schedule_is_identity() {
        let c = catalog();
        let s = clean_evict_initial();
        let trace = run_schedule(&c, s.clone(), &[]).unwrap();
        assert!(trace.is_empty());
        assert_eq!(*trace.final_state(), s);
    }

    #[test]
    fn schedule_stuck_carries_context() {
        let c = catalog();
        let err = run_schedule(
            &c,
            clean_evict_initial(),
            &schedule(&["SharedEvict1", "SharedEvict1"]),
        )
        .unwrap_err();
        match err {
            EngineError::ScheduleStuck { index, rule, state } => {
                assert_eq!(index, 1);
                assert_eq!(rule, "SharedEvict1");
                assert_eq!(state.devcache1.state, DeviceState::SIA);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn schedule_composition() {
        let c = catalog();
        let full = run_schedule(
            &c,
            clean_evict_initial(),
            &schedule(&["SharedEvict1", "Shared_CleanEvict_NotLastDrop1"]),
        )
        .unwrap();
        let first = run_schedule(&c, clean_evict_initial(), &schedule(&["SharedEvict1"])).unwrap();
        let second = run_schedule(
            &c,
            first.final_state().clone(),
            &schedule(&["Shared_CleanEvict_NotLastDrop1"]),
        )
        .unwrap();
        assert_eq!(full.final_state(), second.final_state());
    }

    #[test]
    fn terminality_examples() {
        let c = catalog();
        let quiescent = mk_initial_state(
            DeviceLine::new(0, DeviceState::I),
            DeviceLine::new(0, DeviceState::I),
            HostLine::new(0, HostState::I),
            vec![],
            vec![],
        )
        .unwrap();
        assert!(is_terminal(&c, &quiescent));
        assert!(!is_terminal(&c, &clean_evict_initial()));
    }
}
