//! An executable model of the CXL.cache inter-device coherence protocol:
//! two devices, one host, one cache line.
//!
//! The crate provides the protocol state space ([`state`]), the guarded
//! transition-rule catalog with selectively relaxable ordering restrictions
//! ([`rules`], [`catalog`]), deterministic guided execution ([`engine`]),
//! exhaustive breadth-first exploration with shortest counterexample
//! extraction ([`explore`]), the coherence properties and the rule-by-
//! property consecution matrix ([`invariants`]), a litmus-test harness
//! ([`litmus`]) and trace/report renderers ([`render`]).
//!
//! See the crate examples for one runnable entry point per capability, and
//! the `cxlmc` binary for the command-line surface.

pub mod catalog;
pub mod engine;
pub mod explore;
pub mod invariants;
pub mod litmus;
pub mod render;
pub mod rules;
pub mod state;

pub use catalog::{build_catalog, is_readable, READABLE};
pub use engine::{is_terminal, run_schedule, step_state, EngineError, Trace, TraceStep};
pub use explore::{enumerate_oracle, explore, find_violation, ExploreError, ExploreReport, Exploration, Limits, Verdict};
pub use invariants::{
    conjunct_data_no_conflict, conjunct_honest_snoop, conjunct_singleton_channels,
    conjunct_transient_swmr, default_properties, matrix_check, property_names, swmr, CellOutcome,
    MatrixReport, PropertyDef, StateSampler,
};
pub use litmus::{
    builtin_suite, parse_litmus, run_litmus, FieldAssert, LitmusError, LitmusMode, LitmusResult,
    LitmusTest, BUILTIN_SOURCES,
};
pub use rules::{
    apply_rule, guard_holds, Family, GuardConjunct, RelaxConfig, RelaxFlag, Rule, RuleCatalog,
    RuleError, RuleId,
};
pub use state::{
    changed_locs, mk_initial_state, state_fingerprint, BufferEntry, BufferMsg, DataMsg, DeviceId,
    DeviceLine, DeviceState, DthReq, DthReqKind, DthResp, DthRespKind, HostLine, HostState,
    HtdReq, HtdReqKind, HtdResp, HtdRespKind, Instruction, Loc, StateError, SystemState, Utid,
    Val, DEFAULT_VALUE_DOMAIN, STORE_VALUE,
};
