//! Litmus tests: a line-oriented file format describing an initial
//! configuration, optional relaxations, an optional guided schedule and the
//! expected outcome; plus the built-in suite.
//!
//! Grammar, one directive per line (`#` starts a comment):
//!
//! ```text
//! test <name>
//! relax <flag>                      # repeatable; clears the named flag
//! devcache1 = (<val>, <State>)
//! devcache2 = (<val>, <State>)
//! hcache = (<val>, <State>)
//! prog1 = [Load, Store, Evict, ...]
//! prog2 = [...]
//! schedule = [RuleName, ...]        # optional; present = guided mode
//! expect coherent
//! expect violation <property>
//! expect terminal <field> = <value>
//! ```

use crate::catalog::build_catalog;
use crate::engine::{run_schedule, EngineError, Trace};
use crate::explore::{explore, ExploreReport, Limits, Verdict};
use crate::invariants::{default_properties, property_names};
use crate::render::{field_value, is_known_field};
use crate::rules::RelaxConfig;
use crate::state::{
    mk_initial_state, DeviceLine, DeviceState, HostLine, HostState, Instruction, SystemState,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LitmusMode {
    Exhaustive,
    Guided(Vec<String>),
}

/// One field assertion on a terminal (or schedule-final) state. Values are
/// compared against the canonical rendering with whitespace ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldAssert {
    pub field: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LitmusTest {
    pub name: String,
    pub relax: RelaxConfig,
    pub devcache1: DeviceLine,
    pub devcache2: DeviceLine,
    pub hcache: HostLine,
    pub prog1: Vec<Instruction>,
    pub prog2: Vec<Instruction>,
    pub mode: LitmusMode,
    pub expect_coherent: bool,
    pub expect_violation: Vec<String>,
    pub terminal_asserts: Vec<FieldAssert>,
}

impl LitmusTest {
    pub fn initial_state(&self) -> Result<SystemState, crate::state::StateError> {
        mk_initial_state(
            self.devcache1,
            self.devcache2,
            self.hcache,
            self.prog1.clone(),
            self.prog2.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LitmusError {
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown rule name at line {line}: {name}")]
    UnknownRuleName { line: usize, name: String },
    #[error("unknown field at line {line}: {name}")]
    UnknownField { line: usize, name: String },
    #[error("schedule stuck at step {index} ({rule})")]
    Stuck { index: usize, rule: String },
}

impl From<EngineError> for LitmusError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::ScheduleStuck { index, rule, .. } => LitmusError::Stuck { index, rule },
            EngineError::UnknownRule(name) => LitmusError::UnknownRuleName { line: 0, name },
            EngineError::RuleNotEnabled(rule) => LitmusError::Stuck { index: 0, rule },
        }
    }
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> LitmusError {
    LitmusError::ParseError { line, column, message: message.into() }
}

fn strip_spaces(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn parse_cache_literal(line_no: usize, col: usize, text: &str) -> Result<(i32, String), LitmusError> {
    let t = text.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| perr(line_no, col, format!("expected (val, State), got {t}")))?;
    let mut parts = inner.splitn(2, ',');
    let val_part = parts.next().unwrap_or("").trim();
    let state_part = parts
        .next()
        .ok_or_else(|| perr(line_no, col, "expected (val, State)"))?
        .trim();
    let val: i32 = val_part
        .parse()
        .map_err(|_| perr(line_no, col, format!("invalid value {val_part}")))?;
    Ok((val, state_part.to_string()))
}

fn parse_list(line_no: usize, col: usize, text: &str) -> Result<Vec<String>, LitmusError> {
    let t = text.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| perr(line_no, col, format!("expected [ ... ], got {t}")))?;
    if inner.trim().is_empty() {
        return Ok(vec![]);
    }
    Ok(inner.split(',').map(|s| s.trim().to_string()).collect())
}

fn parse_device_cache(line_no: usize, col: usize, text: &str) -> Result<DeviceLine, LitmusError> {
    let (val, state) = parse_cache_literal(line_no, col, text)?;
    let state = DeviceState::parse(&state)
        .ok_or_else(|| perr(line_no, col, format!("unknown device state {state}")))?;
    Ok(DeviceLine::new(val, state))
}

fn parse_host_cache(line_no: usize, col: usize, text: &str) -> Result<HostLine, LitmusError> {
    let (val, state) = parse_cache_literal(line_no, col, text)?;
    let state = HostState::parse(&state)
        .ok_or_else(|| perr(line_no, col, format!("unknown host state {state}")))?;
    Ok(HostLine::new(val, state))
}

fn parse_prog(line_no: usize, col: usize, text: &str) -> Result<Vec<Instruction>, LitmusError> {
    parse_list(line_no, col, text)?
        .into_iter()
        .map(|item| {
            Instruction::parse(&item)
                .ok_or_else(|| perr(line_no, col, format!("unknown instruction {item}")))
        })
        .collect()
}

/// Parses one litmus file. Unknown directives, states, rule names and fields
/// are rejected.
pub fn parse_litmus(text: &str) -> Result<LitmusTest, LitmusError> {
    let mut name: Option<String> = None;
    let mut relax = RelaxConfig::faithful();
    let mut dev1: Option<DeviceLine> = None;
    let mut dev2: Option<DeviceLine> = None;
    let mut host: Option<HostLine> = None;
    let mut prog1: Option<Vec<Instruction>> = None;
    let mut prog2: Option<Vec<Instruction>> = None;
    let mut schedule: Option<Vec<String>> = None;
    let mut expect_coherent = false;
    let mut expect_violation: Vec<String> = Vec::new();
    let mut terminal_asserts: Vec<FieldAssert> = Vec::new();

    // rule and property names are config-independent
    let known_rules = build_catalog(RelaxConfig::faithful());
    let known_props = property_names();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (key, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (trimmed, ""),
        };
        let value_col = line.find(rest).map(|p| p + 1).unwrap_or(1);
        match key {
            "test" => {
                if rest.is_empty() {
                    return Err(perr(line_no, 1, "test needs a name"));
                }
                name = Some(rest.to_string());
            }
            "relax" | "relax:" => {
                let flag = rest.trim_start_matches(':').trim();
                if !relax.relax(flag) {
                    return Err(perr(line_no, value_col, format!("unknown relax flag {flag}")));
                }
            }
            "devcache1" | "devcache2" | "hcache" | "prog1" | "prog2" | "schedule" => {
                let rest = rest
                    .strip_prefix('=')
                    .ok_or_else(|| perr(line_no, value_col, "expected '='"))?
                    .trim();
                let col = line.find(rest).map(|p| p + 1).unwrap_or(value_col);
                match key {
                    "devcache1" => dev1 = Some(parse_device_cache(line_no, col, rest)?),
                    "devcache2" => dev2 = Some(parse_device_cache(line_no, col, rest)?),
                    "hcache" => host = Some(parse_host_cache(line_no, col, rest)?),
                    "prog1" => prog1 = Some(parse_prog(line_no, col, rest)?),
                    "prog2" => prog2 = Some(parse_prog(line_no, col, rest)?),
                    "schedule" => {
                        let names = parse_list(line_no, col, rest)?;
                        for n in &names {
                            if known_rules.by_name(n).is_none() {
                                return Err(LitmusError::UnknownRuleName {
                                    line: line_no,
                                    name: n.clone(),
                                });
                            }
                        }
                        schedule = Some(names);
                    }
                    _ => unreachable!(),
                }
            }
            "expect" => {
                let (what, detail) = match rest.split_once(char::is_whitespace) {
                    Some((w, d)) => (w, d.trim()),
                    None => (rest, ""),
                };
                match what {
                    "coherent" => expect_coherent = true,
                    "violation" => {
                        if !known_props.contains(&detail) {
                            return Err(perr(
                                line_no,
                                value_col,
                                format!("unknown property {detail}"),
                            ));
                        }
                        expect_violation.push(detail.to_string());
                    }
                    "terminal" => {
                        let (field, expected) = detail
                            .split_once('=')
                            .ok_or_else(|| perr(line_no, value_col, "expected <field> = <value>"))?;
                        let field = field.trim();
                        if !is_known_field(field) {
                            return Err(LitmusError::UnknownField {
                                line: line_no,
                                name: field.to_string(),
                            });
                        }
                        terminal_asserts.push(FieldAssert {
                            field: field.to_string(),
                            expected: strip_spaces(expected),
                        });
                    }
                    other => {
                        return Err(perr(
                            line_no,
                            value_col,
                            format!("unknown expectation {other}"),
                        ))
                    }
                }
            }
            other => return Err(perr(line_no, 1, format!("unknown directive {other}"))),
        }
    }

    let name = name.ok_or_else(|| perr(text.lines().count().max(1), 1, "missing test name"))?;
    let test = LitmusTest {
        name,
        relax,
        devcache1: dev1.unwrap_or(DeviceLine::new(0, DeviceState::I)),
        devcache2: dev2.unwrap_or(DeviceLine::new(0, DeviceState::I)),
        hcache: host.unwrap_or(HostLine::new(0, HostState::I)),
        prog1: prog1.unwrap_or_default(),
        prog2: prog2.unwrap_or_default(),
        mode: match schedule {
            Some(s) => LitmusMode::Guided(s),
            None => LitmusMode::Exhaustive,
        },
        expect_coherent,
        expect_violation,
        terminal_asserts,
    };
    for (which, stable) in [
        ("devcache1", test.devcache1.state.is_stable()),
        ("devcache2", test.devcache2.state.is_stable()),
        ("hcache", test.hcache.state.is_stable()),
    ] {
        if !stable {
            return Err(perr(1, 1, format!("initial {which} state must be stable")));
        }
    }
    Ok(test)
}

#[derive(Debug, Clone)]
pub struct LitmusResult {
    pub name: String,
    pub pass: bool,
    /// Human-readable notes; non-empty whenever the test failed.
    pub details: Vec<String>,
    /// The guided trace, when the test ran a schedule.
    pub trace: Option<Trace>,
    /// A violation witness, when one was found.
    pub witness: Option<Trace>,
    /// Exploration statistics, when the test ran exhaustively.
    pub report: Option<ExploreReport>,
}

fn check_asserts(state: &SystemState, asserts: &[FieldAssert], details: &mut Vec<String>) -> bool {
    let mut ok = true;
    for a in asserts {
        let actual = field_value(state, &a.field).unwrap_or_default();
        if strip_spaces(&actual) != a.expected {
            ok = false;
            details.push(format!(
                "terminal assertion failed: {} = {}, expected {}",
                a.field, actual, a.expected
            ));
        }
    }
    ok
}

/// Runs one litmus test. Guided mode replays the schedule and checks the
/// final state; exhaustive mode explores every interleaving, requiring all
/// registered properties everywhere for a coherent expectation and a found
/// witness for a violation expectation.
pub fn run_litmus(test: &LitmusTest) -> Result<LitmusResult, LitmusError> {
    let catalog = build_catalog(test.relax);
    let registry = default_properties();
    let initial = test.initial_state().map_err(|e| LitmusError::ParseError {
        line: 0,
        column: 0,
        message: e.to_string(),
    })?;
    let mut details: Vec<String> = Vec::new();
    let mut pass = true;

    match &test.mode {
        LitmusMode::Guided(schedule) => {
            let trace = run_schedule(&catalog, initial, schedule)?;
            if !check_asserts(trace.final_state(), &test.terminal_asserts, &mut details) {
                pass = false;
            }
            if test.expect_coherent {
                for (i, state) in trace.states().enumerate() {
                    for p in &registry {
                        if !(p.predicate)(state) {
                            pass = false;
                            details.push(format!(
                                "property {} violated at step {} of the schedule",
                                p.name, i
                            ));
                        }
                    }
                }
            }
            for prop in &test.expect_violation {
                let p = registry.iter().find(|p| p.name == prop).expect("validated");
                if trace.states().all(|s| (p.predicate)(s)) {
                    pass = false;
                    details.push(format!("expected a violation of {prop}, none occurred"));
                }
            }
            Ok(LitmusResult {
                name: test.name.clone(),
                pass,
                details,
                trace: Some(trace),
                witness: None,
                report: None,
            })
        }
        LitmusMode::Exhaustive => {
            let limits = Limits {
                properties: registry.iter().map(|p| p.name.to_string()).collect(),
                ..Limits::default()
            };
            let report = explore(&catalog, &initial, &limits, &registry)
                .expect("default registry covers its own names");
            let mut witness = None;
            if test.expect_coherent {
                if report.truncated {
                    pass = false;
                    details.push("exploration truncated; coherence not established".to_string());
                }
                for (prop, verdict) in &report.verdicts {
                    if let Verdict::Violation(trace) = verdict {
                        pass = false;
                        details.push(format!(
                            "property {} violated after {} steps",
                            prop,
                            trace.len()
                        ));
                        if witness.is_none() {
                            witness = Some(trace.clone());
                        }
                    }
                }
                if !test.terminal_asserts.is_empty() {
                    // terminal assertions must hold in every quiescent state
                    let exploration =
                        crate::explore::explore_states(&catalog, &initial, &limits);
                    for (i, is_term) in exploration.terminal.iter().enumerate() {
                        if *is_term
                            && !check_asserts(
                                &exploration.states[i],
                                &test.terminal_asserts,
                                &mut details,
                            )
                        {
                            pass = false;
                        }
                    }
                }
            }
            for prop in &test.expect_violation {
                match report.verdicts.get(prop) {
                    Some(Verdict::Violation(trace)) => {
                        if witness.is_none() {
                            witness = Some(trace.clone());
                        }
                    }
                    _ => {
                        pass = false;
                        details.push(format!("expected a violation of {prop}, none found"));
                    }
                }
            }
            Ok(LitmusResult {
                name: test.name.clone(),
                pass,
                details,
                trace: None,
                witness,
                report: Some(report),
            })
        }
    }
}

/// Sources of the built-in suite; parsed by [`builtin_suite`]. The three
/// scenario replays each carry an exhaustive twin that verifies the
/// properties over every interleaving of the same instance.
pub const BUILTIN_SOURCES: [&str; 11] = [
    "test clean_evict_test\n\
     devcache1 = (0, SH)\n\
     devcache2 = (0, SH)\n\
     hcache = (0, SH)\n\
     prog1 = [Evict, Evict]\n\
     prog2 = []\n\
     schedule = [SharedEvict1, Shared_CleanEvict_NotLastDrop1, SIA_GO_WritePullDrop1]\n\
     expect coherent\n\
     expect terminal devcache1 = (0, I)\n\
     expect terminal devcache2 = (0, SH)\n\
     expect terminal hcache = (0, SH)\n\
     expect terminal counter = 1\n\
     expect terminal prog1 = [Evict]\n\
     expect terminal dthreq1 = []\n\
     expect terminal htdrsp1 = []\n",
    "test clean_evict_exhaustive\n\
     devcache1 = (0, SH)\n\
     devcache2 = (0, SH)\n\
     hcache = (0, SH)\n\
     prog1 = [Evict, Evict]\n\
     prog2 = []\n\
     expect coherent\n",
    "test dirty_evict_test\n\
     devcache1 = (1, EM)\n\
     devcache2 = (0, I)\n\
     hcache = (0, EM)\n\
     prog1 = [Evict]\n\
     prog2 = []\n\
     schedule = [ModifiedEvict1, HostModifiedDirtyEvict1, MIA_GO_WritePull1, IDData1]\n\
     expect coherent\n\
     expect terminal devcache1 = (1, I)\n\
     expect terminal devcache2 = (0, I)\n\
     expect terminal hcache = (1, I)\n\
     expect terminal counter = 1\n\
     expect terminal prog1 = []\n\
     expect terminal dthdata1 = []\n\
     expect terminal htdrsp1 = []\n",
    "test dirty_evict_exhaustive\n\
     devcache1 = (1, EM)\n\
     devcache2 = (0, I)\n\
     hcache = (0, EM)\n\
     prog1 = [Evict]\n\
     prog2 = []\n\
     expect coherent\n",
    "test snoop_pushes_go_test\n\
     relax snoop_pushes_go\n\
     devcache1 = (-1, I)\n\
     devcache2 = (-1, I)\n\
     hcache = (0, I)\n\
     prog1 = [Store]\n\
     prog2 = [Load]\n\
     expect violation swmr\n",
    "test snoop_pushes_go_replay\n\
     relax snoop_pushes_go\n\
     devcache1 = (-1, I)\n\
     devcache2 = (-1, I)\n\
     hcache = (0, I)\n\
     prog1 = [Store]\n\
     prog2 = [Load]\n\
     schedule = [InvalidStore1, InvalidLoad2, InvalidRdShared2, SharedRdOwn1, ISADSnpInv2, ISADGO+Data2, MARspIHitI1, IMADGO+Data1]\n\
     expect terminal devcache1.state = EM\n\
     expect terminal devcache2.state = SH\n\
     expect terminal hcache.state = EM\n\
     expect terminal counter = 2\n",
    "test store_load_test\n\
     devcache1 = (-1, I)\n\
     devcache2 = (-1, I)\n\
     hcache = (0, I)\n\
     prog1 = [Store]\n\
     prog2 = [Load]\n\
     expect coherent\n",
    "test multiple_reads_test\n\
     devcache1 = (0, I)\n\
     devcache2 = (0, I)\n\
     hcache = (0, I)\n\
     prog1 = [Load, Load]\n\
     prog2 = [Load, Load]\n\
     expect coherent\n",
    "test multiple_writes_test\n\
     devcache1 = (0, I)\n\
     devcache2 = (0, I)\n\
     hcache = (0, I)\n\
     prog1 = [Store, Store]\n\
     prog2 = [Store, Store]\n\
     expect coherent\n",
    "test multiple_evicts_test\n\
     devcache1 = (0, SH)\n\
     devcache2 = (0, SH)\n\
     hcache = (0, SH)\n\
     prog1 = [Evict, Evict]\n\
     prog2 = [Evict]\n\
     expect coherent\n",
    "test alternating_test\n\
     devcache1 = (0, I)\n\
     devcache2 = (0, I)\n\
     hcache = (0, I)\n\
     prog1 = [Load, Store, Evict]\n\
     prog2 = [Store, Load, Evict]\n\
     expect coherent\n",
];

/// The built-in suite: the three scenario replays, their exhaustive twins,
/// and reconstructions of the remaining concurrent-access instances.
pub fn builtin_suite() -> Vec<LitmusTest> {
    BUILTIN_SOURCES
        .iter()
        .map(|src| parse_litmus(src).expect("builtin sources parse"))
        .collect()
}
