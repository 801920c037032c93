//! Guarded transition rules. A rule is a named guard/action pair over
//! [`SystemState`]; the catalog instantiates every rule for both devices from
//! one parametric definition. Guard conjuncts that encode the standard's
//! ordering restrictions are tagged so they can be selectively relaxed.

use crate::state::{DeviceId, Loc, SystemState};
use std::fmt;
use std::sync::Arc;

/// Which of the ordering restrictions are enforced. All flags true is the
/// faithful model; turning a flag off drops the tagged guard conjuncts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelaxConfig {
    pub snoop_pushes_go: bool,
    pub go_cannot_tailgate: bool,
    pub one_snoop_per_addr: bool,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig::faithful()
    }
}

impl RelaxConfig {
    pub fn faithful() -> Self {
        RelaxConfig {
            snoop_pushes_go: true,
            go_cannot_tailgate: true,
            one_snoop_per_addr: true,
        }
    }

    pub fn enforced(&self, flag: RelaxFlag) -> bool {
        match flag {
            RelaxFlag::SnoopPushesGo => self.snoop_pushes_go,
            RelaxFlag::GoCannotTailgate => self.go_cannot_tailgate,
            RelaxFlag::OneSnoopPerAddr => self.one_snoop_per_addr,
        }
    }

    /// Clears the named flag; returns false for an unknown name.
    pub fn relax(&mut self, name: &str) -> bool {
        match RelaxFlag::parse(name) {
            Some(RelaxFlag::SnoopPushesGo) => {
                self.snoop_pushes_go = false;
                true
            }
            Some(RelaxFlag::GoCannotTailgate) => {
                self.go_cannot_tailgate = false;
                true
            }
            Some(RelaxFlag::OneSnoopPerAddr) => {
                self.one_snoop_per_addr = false;
                true
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelaxFlag {
    SnoopPushesGo,
    GoCannotTailgate,
    OneSnoopPerAddr,
}

impl RelaxFlag {
    pub const ALL: [RelaxFlag; 3] = [
        RelaxFlag::SnoopPushesGo,
        RelaxFlag::GoCannotTailgate,
        RelaxFlag::OneSnoopPerAddr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelaxFlag::SnoopPushesGo => "snoop_pushes_go",
            RelaxFlag::GoCannotTailgate => "go_cannot_tailgate",
            RelaxFlag::OneSnoopPerAddr => "one_snoop_per_addr",
        }
    }

    pub fn parse(s: &str) -> Option<RelaxFlag> {
        RelaxFlag::ALL.iter().copied().find(|f| f.name() == s)
    }
}

impl fmt::Display for RelaxFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rule families, grouping rules by who acts and what message they consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Device issues a D2H request triggered by its next instruction.
    InstrIssue,
    /// Device completes an instruction locally without coherence traffic.
    LocalHit,
    /// Host consumes a D2H request from a stable host state.
    HostD2HReq,
    /// Device consumes a snoop from the head of its H2D request channel.
    DeviceSnoop,
    /// Device consumes a GO-class response (possibly together with data).
    DeviceH2DResp,
    /// Host consumes a D2H snoop response mid-transaction.
    HostD2HResp,
    /// Host consumes a D2H data message.
    HostData,
    /// Device consumes an H2D data message on its own.
    DeviceData,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::InstrIssue => "InstrIssue",
            Family::LocalHit => "LocalHit",
            Family::HostD2HReq => "HostD2HReq",
            Family::DeviceSnoop => "DeviceSnoop",
            Family::DeviceH2DResp => "DeviceH2DResp",
            Family::HostD2HResp => "HostD2HResp",
            Family::HostData => "HostData",
            Family::DeviceData => "DeviceData",
        }
    }

    pub fn is_host_side(self) -> bool {
        matches!(self, Family::HostD2HReq | Family::HostD2HResp | Family::HostData)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type Pred = Arc<dyn Fn(&SystemState) -> bool + Send + Sync>;
type Action = Arc<dyn Fn(&mut SystemState) + Send + Sync>;

/// One guard conjunct: a predicate plus a description for the catalog
/// reference, optionally tagged with the restriction it encodes.
pub struct GuardConjunct {
    pub desc: String,
    pub relax: Option<RelaxFlag>,
    pred: Pred,
}

impl GuardConjunct {
    pub fn new(desc: impl Into<String>, pred: impl Fn(&SystemState) -> bool + Send + Sync + 'static) -> Self {
        GuardConjunct {
            desc: desc.into(),
            relax: None,
            pred: Arc::new(pred),
        }
    }

    pub fn relaxable(
        desc: impl Into<String>,
        flag: RelaxFlag,
        pred: impl Fn(&SystemState) -> bool + Send + Sync + 'static,
    ) -> Self {
        GuardConjunct {
            desc: desc.into(),
            relax: Some(flag),
            pred: Arc::new(pred),
        }
    }

    pub fn holds(&self, state: &SystemState) -> bool {
        (self.pred)(state)
    }
}

impl fmt::Debug for GuardConjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GuardConjunct")
            .field("desc", &self.desc)
            .field("relax", &self.relax)
            .finish()
    }
}

pub type RuleId = usize;

/// A named guarded command. `guards` holds only the conjuncts active under
/// the catalog's config; `relaxable_guards` records every restriction tag the
/// parametric definition carries, whether or not it is currently enforced.
pub struct Rule {
    pub id: RuleId,
    pub name: String,
    /// Name without the device suffix, e.g. "SharedSnpInv".
    pub base_name: &'static str,
    pub device: DeviceId,
    pub family: Family,
    pub guards: Vec<GuardConjunct>,
    pub action_desc: Vec<String>,
    pub writes: Vec<Loc>,
    pub relaxable_guards: Vec<RelaxFlag>,
    /// True when a host-side guard reads a device cache state directly.
    pub perfect_tracking: bool,
    action: Action,
}

impl Rule {
    /// True iff every active guard conjunct holds.
    pub fn enabled(&self, state: &SystemState) -> bool {
        self.guards.iter().all(|g| g.holds(state))
    }

    /// Applies the action to a copy of `state`. Callers must check the guard;
    /// see [`apply_rule`] for the checked variant.
    pub fn apply_unchecked(&self, state: &SystemState) -> SystemState {
        let mut next = state.clone();
        (self.action)(&mut next);
        next
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rule")
            .field("id", &self.id)
            .field("name", &self.name)
            .field("family", &self.family)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule {0} is not enabled in this state")]
    NotEnabled(String),
}

/// True iff every non-relaxed guard conjunct of `rule` holds in `state`.
pub fn guard_holds(rule: &Rule, state: &SystemState) -> bool {
    rule.enabled(state)
}

/// Applies a rule after checking its guard.
pub fn apply_rule(rule: &Rule, state: &SystemState) -> Result<SystemState, RuleError> {
    if !rule.enabled(state) {
        return Err(RuleError::NotEnabled(rule.name.clone()));
    }
    Ok(rule.apply_unchecked(state))
}

/// The full rule set built for one [`RelaxConfig`]. Immutable after
/// construction and safe to share across threads.
pub struct RuleCatalog {
    pub rules: Vec<Rule>,
    pub config: RelaxConfig,
}

impl RuleCatalog {
    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id]
    }

    pub fn by_name(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Ids of all rules whose guards hold, in ascending id order.
    pub fn enabled_rules(&self, state: &SystemState) -> Vec<RuleId> {
        self.rules
            .iter()
            .filter(|r| r.enabled(state))
            .map(|r| r.id)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Builder used by the catalog construction; collects guards, actions and
/// metadata for one concrete (device-indexed) rule.
pub(crate) struct RuleBuilder {
    name: String,
    base_name: &'static str,
    device: DeviceId,
    family: Family,
    guards: Vec<GuardConjunct>,
    action_desc: Vec<String>,
    writes: Vec<Loc>,
    relaxable_guards: Vec<RelaxFlag>,
    perfect_tracking: bool,
    actions: Vec<Action>,
}

impl RuleBuilder {
    pub fn new(base_name: &'static str, device: DeviceId, family: Family) -> Self {
        RuleBuilder {
            name: format!("{}{}", base_name, device.suffix()),
            base_name,
            device,
            family,
            guards: Vec::new(),
            action_desc: Vec::new(),
            writes: Vec::new(),
            relaxable_guards: Vec::new(),
            perfect_tracking: false,
            actions: Vec::new(),
        }
    }

    pub fn guard(
        mut self,
        desc: impl Into<String>,
        pred: impl Fn(&SystemState) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.guards.push(GuardConjunct::new(desc, pred));
        self
    }

    /// A guard conjunct enforcing one of the standard's restrictions. It is
    /// recorded in `relaxable_guards` always, and evaluated only when the
    /// config enforces the flag.
    pub fn relaxable_guard(
        mut self,
        config: &RelaxConfig,
        flag: RelaxFlag,
        desc: impl Into<String>,
        pred: impl Fn(&SystemState) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.relaxable_guards.push(flag);
        if config.enforced(flag) {
            self.guards.push(GuardConjunct::relaxable(desc, flag, pred));
        }
        self
    }

    pub fn tracking(mut self) -> Self {
        self.perfect_tracking = true;
        self
    }

    pub fn act(
        mut self,
        desc: impl Into<String>,
        writes: &[Loc],
        action: impl Fn(&mut SystemState) + Send + Sync + 'static,
    ) -> Self {
        self.action_desc.push(desc.into());
        for w in writes {
            if !self.writes.contains(w) {
                self.writes.push(*w);
            }
        }
        self.actions.push(Arc::new(action));
        self
    }

    pub fn build(self, id: RuleId) -> Rule {
        let actions = self.actions;
        let combined: Action = Arc::new(move |state: &mut SystemState| {
            for a in &actions {
                a(state);
            }
        });
        Rule {
            id,
            name: self.name,
            base_name: self.base_name,
            device: self.device,
            family: self.family,
            guards: self.guards,
            action_desc: self.action_desc,
            writes: self.writes,
            relaxable_guards: self.relaxable_guards,
            perfect_tracking: self.perfect_tracking,
            action: combined,
        }
    }
}
