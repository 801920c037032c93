//! The coherence properties and the rule-by-property consecution matrix.
//!
//! `swmr` is the headline property: no device may hold write access while the
//! other holds read or write access. The four conjuncts are the invariant
//! fragments that make near-miss states checkable: transient upgrades need
//! the same exclusion, snoop responses must be honest about the responder's
//! state, every channel holds at most one message, and opposing data
//! channels must not both be occupied.
//!
//! [`matrix_check`] tests consecution over a supplied set of states: from
//! every state satisfying all properties, every enabled rule must lead to a
//! state that still satisfies them. This is testing over the supplied
//! states, not a proof over all states.

use crate::rules::RuleCatalog;
use crate::state::{
    DataMsg, DeviceId, DeviceLine, DeviceState, DthReq, DthReqKind, DthResp, DthRespKind,
    HostLine, HostState, HtdReq, HtdReqKind, HtdResp, HtdRespKind, Instruction, SystemState,
    DEFAULT_VALUE_DOMAIN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// A named predicate over system states.
pub struct PropertyDef {
    pub name: &'static str,
    pub description: &'static str,
    pub predicate: fn(&SystemState) -> bool,
}

/// Single-Writer-Multiple-Reader over the two device caches.
pub fn swmr(s: &SystemState) -> bool {
    let d1 = s.devcache1.state;
    let d2 = s.devcache2.state;
    let w1 = d1 == DeviceState::EM && (d2 == DeviceState::SH || d2 == DeviceState::EM);
    let w2 = d2 == DeviceState::EM && (d1 == DeviceState::SH || d1 == DeviceState::EM);
    !(w1 || w2)
}

fn almost_modified(s: &SystemState, d: DeviceId) -> bool {
    let st = s.devcache(d).state;
    matches!(st, DeviceState::IMD | DeviceState::SMD)
        || (matches!(st, DeviceState::IMAD | DeviceState::SMAD) && !s.htdrsp(d).is_empty())
}

fn transient_swmr_side(s: &SystemState, writer: DeviceId) -> bool {
    if !almost_modified(s, writer) {
        return true;
    }
    let other = writer.other();
    // A snoop on its way to the other device excuses its remaining validity.
    if matches!(s.htdreq(other).first(), Some(m) if m.kind == HtdReqKind::SnpInv) {
        return true;
    }
    let os = s.devcache(other).state;
    let forbidden = matches!(
        os,
        DeviceState::ISD
            | DeviceState::IMD
            | DeviceState::SMD
            | DeviceState::ISA
            | DeviceState::IMA
            | DeviceState::SMA
            | DeviceState::SH
            | DeviceState::EM
    );
    if forbidden || !s.htddata(other).is_empty() {
        return false;
    }
    let awaiting = matches!(os, DeviceState::ISAD | DeviceState::IMAD | DeviceState::SMAD);
    !awaiting || s.htdrsp(other).is_empty()
}

/// Transient states need the same exclusion as SWMR: a device that is about
/// to gain write access forbids the other device any valid or about-to-be
/// valid copy, unless an invalidating snoop is already on its way.
pub fn conjunct_transient_swmr(s: &SystemState) -> bool {
    transient_swmr_side(s, DeviceId::D1) && transient_swmr_side(s, DeviceId::D2)
}

/// A device reporting that it invalidated its line must be in a state
/// consistent with that report.
pub fn conjunct_honest_snoop(s: &SystemState) -> bool {
    DeviceId::BOTH.iter().all(|&d| {
        match s.dthrsp(d).first() {
            Some(r) if matches!(r.kind, DthRespKind::RspIFwdM | DthRespKind::RspIHitSE) => {
                matches!(
                    s.devcache(d).state,
                    DeviceState::I
                        | DeviceState::ISDI
                        | DeviceState::ISAD
                        | DeviceState::IMAD
                        | DeviceState::IIA
                )
            }
            _ => true,
        }
    })
}

/// With a single location every channel carries at most one message.
pub fn conjunct_singleton_channels(s: &SystemState) -> bool {
    s.dthreq1.len() <= 1
        && s.dthreq2.len() <= 1
        && s.dthrsp1.len() <= 1
        && s.dthrsp2.len() <= 1
        && s.dthdata1.len() <= 1
        && s.dthdata2.len() <= 1
        && s.htdreq1.len() <= 1
        && s.htdreq2.len() <= 1
        && s.htdrsp1.len() <= 1
        && s.htdrsp2.len() <= 1
        && s.htddata1.len() <= 1
        && s.htddata2.len() <= 1
}

/// Opposing data channels must not both carry a message.
pub fn conjunct_data_no_conflict(s: &SystemState) -> bool {
    (s.dthdata1.is_empty() || s.htddata2.is_empty())
        && (s.dthdata2.is_empty() || s.htddata1.is_empty())
}

/// The registered properties: SWMR plus the four invariant conjuncts.
pub fn default_properties() -> Vec<PropertyDef> {
    vec![
        PropertyDef {
            name: "swmr",
            description: "no device holds EM while the other holds SH or EM",
            predicate: swmr,
        },
        PropertyDef {
            name: "transient_swmr",
            description: "a device about to gain write access excludes valid copies elsewhere",
            predicate: conjunct_transient_swmr,
        },
        PropertyDef {
            name: "honest_snoop",
            description: "an invalidation report implies an invalid-consistent responder state",
            predicate: conjunct_honest_snoop,
        },
        PropertyDef {
            name: "singleton_channels",
            description: "every channel holds at most one message",
            predicate: conjunct_singleton_channels,
        },
        PropertyDef {
            name: "data_no_conflict",
            description: "opposing data channels are never both occupied",
            predicate: conjunct_data_no_conflict,
        },
    ]
}

pub fn property_names() -> Vec<&'static str> {
    default_properties().iter().map(|p| p.name).collect()
}

/// Outcome of one (rule, property) cell: pass, or the first witness where a
/// fully property-satisfying state stepped into a violation of the property.
#[derive(Debug, Clone, Serialize)]
pub enum CellOutcome {
    Pass,
    Fail {
        pre: Box<SystemState>,
        post: Box<SystemState>,
    },
}

impl CellOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CellOutcome::Pass)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixReport {
    /// Keyed by (rule name, property name); complete over the grid.
    pub cells: BTreeMap<(String, String), CellOutcome>,
    pub states_checked: usize,
}

impl MatrixReport {
    pub fn all_pass(&self) -> bool {
        self.cells.values().all(|c| c.passed())
    }

    pub fn failing_cells(&self) -> Vec<(&str, &str)> {
        self.cells
            .iter()
            .filter(|(_, v)| !v.passed())
            .map(|((r, p), _)| (r.as_str(), p.as_str()))
            .collect()
    }
}

/// Consecution check over a state source: for each supplied state satisfying
/// every property, fire each enabled rule and evaluate every property on the
/// successor. The first failing witness per cell is kept.
pub fn matrix_check<'a, I>(catalog: &RuleCatalog, props: &[PropertyDef], states: I) -> MatrixReport
where
    I: IntoIterator<Item = &'a SystemState>,
{
    let mut cells: BTreeMap<(String, String), CellOutcome> = BTreeMap::new();
    for rule in &catalog.rules {
        for p in props {
            cells.insert((rule.name.clone(), p.name.to_string()), CellOutcome::Pass);
        }
    }
    let mut states_checked = 0;
    for state in states {
        if !props.iter().all(|p| (p.predicate)(state)) {
            continue;
        }
        states_checked += 1;
        for rule in &catalog.rules {
            if !rule.enabled(state) {
                continue;
            }
            let post = rule.apply_unchecked(state);
            for p in props {
                if !(p.predicate)(&post) {
                    let key = (rule.name.clone(), p.name.to_string());
                    if cells[&key].passed() {
                        cells.insert(
                            key,
                            CellOutcome::Fail {
                                pre: Box::new(state.clone()),
                                post: Box::new(post.clone()),
                            },
                        );
                    }
                }
            }
        }
    }
    MatrixReport { cells, states_checked }
}

/// Seeded generator of well-formed states: channels hold at most one
/// message, GO targets are stable, utids stay below the counter. Used as a
/// state source for consecution testing beyond the reachable sets.
pub struct StateSampler {
    rng: ChaCha8Rng,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        StateSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn val(&mut self) -> i32 {
        DEFAULT_VALUE_DOMAIN[self.rng.gen_range(0..DEFAULT_VALUE_DOMAIN.len())]
    }

    fn utid(&mut self) -> u32 {
        self.rng.gen_range(0..3)
    }

    fn prog(&mut self) -> Vec<Instruction> {
        let choices = [Instruction::Load, Instruction::Store, Instruction::Evict];
        let len = self.rng.gen_range(0..=2);
        (0..len).map(|_| choices[self.rng.gen_range(0..3)]).collect()
    }

    fn dthreq(&mut self) -> Vec<DthReq> {
        if self.rng.gen_bool(0.5) {
            return vec![];
        }
        let kinds = [
            DthReqKind::RdShared,
            DthReqKind::RdOwn,
            DthReqKind::CleanEvict,
            DthReqKind::DirtyEvict,
            DthReqKind::CleanEvictNoData,
        ];
        vec![DthReq { kind: kinds[self.rng.gen_range(0..5)], utid: self.utid() }]
    }

    fn dthrsp(&mut self) -> Vec<DthResp> {
        if self.rng.gen_bool(0.5) {
            return vec![];
        }
        let kinds = [
            DthRespKind::RspIHitSE,
            DthRespKind::RspIFwdM,
            DthRespKind::RspSFwdM,
            DthRespKind::RspIHitI,
        ];
        vec![DthResp { kind: kinds[self.rng.gen_range(0..4)], utid: self.utid() }]
    }

    fn data(&mut self) -> Vec<DataMsg> {
        if self.rng.gen_bool(0.5) {
            return vec![];
        }
        let val = self.val();
        vec![DataMsg { utid: self.utid(), val }]
    }

    fn htdreq(&mut self) -> Vec<HtdReq> {
        if self.rng.gen_bool(0.5) {
            return vec![];
        }
        let kind = if self.rng.gen_bool(0.5) { HtdReqKind::SnpInv } else { HtdReqKind::SnpData };
        vec![HtdReq { kind, utid: self.utid() }]
    }

    fn htdrsp(&mut self) -> Vec<HtdResp> {
        if self.rng.gen_bool(0.5) {
            return vec![];
        }
        let kinds = [HtdRespKind::Go, HtdRespKind::GoWritePull, HtdRespKind::GoWritePullDrop];
        let targets = [DeviceState::I, DeviceState::SH, DeviceState::EM];
        vec![HtdResp {
            kind: kinds[self.rng.gen_range(0..3)],
            target: targets[self.rng.gen_range(0..3)],
            utid: self.utid(),
        }]
    }

    fn device_state(&mut self) -> DeviceState {
        DeviceState::ALL[self.rng.gen_range(0..DeviceState::ALL.len())]
    }

    fn host_state(&mut self) -> HostState {
        HostState::ALL[self.rng.gen_range(0..HostState::ALL.len())]
    }

    pub fn sample(&mut self) -> SystemState {
        let dv1 = self.val();
        let dv2 = self.val();
        let hv = self.val();
        let s = SystemState {
            dprog1: self.prog(),
            dprog2: self.prog(),
            devcache1: DeviceLine::new(dv1, self.device_state()),
            devcache2: DeviceLine::new(dv2, self.device_state()),
            dthreq1: self.dthreq(),
            dthreq2: self.dthreq(),
            dthrsp1: self.dthrsp(),
            dthrsp2: self.dthrsp(),
            dthdata1: self.data(),
            dthdata2: self.data(),
            htdreq1: self.htdreq(),
            htdreq2: self.htdreq(),
            htdrsp1: self.htdrsp(),
            htdrsp2: self.htdrsp(),
            htddata1: self.data(),
            htddata2: self.data(),
            dbuffer1: None,
            dbuffer2: None,
            hcache: HostLine::new(hv, self.host_state()),
            counter: 0,
        };
        let mut s = s;
        // utids were issued by counter increments, so keep the counter above
        // every utid in flight
        s.counter = 4 + self.rng.gen_range(0..2);
        s
    }

    pub fn take(&mut self, n: usize) -> Vec<SystemState> {
        (0..n).map(|_| self.sample()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{mk_initial_state, DeviceLine, HostLine};

    fn quiescent() -> SystemState {
        mk_initial_state(
            DeviceLine::new(0, DeviceState::I),
            DeviceLine::new(0, DeviceState::I),
            HostLine::new(0, HostState::I),
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn swmr_cases() {
        let mut s = quiescent();
        s.devcache1.state = DeviceState::EM;
        assert!(swmr(&s));
        s.devcache2.state = DeviceState::SH;
        assert!(!swmr(&s));
        s.devcache1.state = DeviceState::SH;
        assert!(swmr(&s));
    }

    #[test]
    fn transient_swmr_cases() {
        let mut s = quiescent();
        s.devcache1.state = DeviceState::IMD;
        s.devcache2.state = DeviceState::SH;
        assert!(!conjunct_transient_swmr(&s));
        s.htdreq2.push(HtdReq { kind: HtdReqKind::SnpInv, utid: 0 });
        assert!(conjunct_transient_swmr(&s));
        assert!(conjunct_transient_swmr(&quiescent()));
    }

    #[test]
    fn transient_swmr_awaiting_go_side() {
        let mut s = quiescent();
        s.devcache1.state = DeviceState::IMAD;
        s.devcache2.state = DeviceState::ISAD;
        // writer side antecedent needs a pending GO
        assert!(conjunct_transient_swmr(&s));
        s.htdrsp1.push(HtdResp { kind: HtdRespKind::Go, target: DeviceState::EM, utid: 0 });
        assert!(conjunct_transient_swmr(&s));
        s.htdrsp2.push(HtdResp { kind: HtdRespKind::Go, target: DeviceState::SH, utid: 1 });
        assert!(!conjunct_transient_swmr(&s));
    }

    #[test]
    fn honest_snoop_cases() {
        let mut s = quiescent();
        s.dthrsp1.push(DthResp { kind: DthRespKind::RspIHitSE, utid: 0 });
        s.devcache1.state = DeviceState::I;
        assert!(conjunct_honest_snoop(&s));
        s.devcache1.state = DeviceState::SH;
        assert!(!conjunct_honest_snoop(&s));
        assert!(conjunct_honest_snoop(&quiescent()));
    }

    #[test]
    fn singleton_and_data_conflict_cases() {
        let mut s = quiescent();
        assert!(conjunct_singleton_channels(&s));
        s.dthreq1.push(DthReq { kind: DthReqKind::RdOwn, utid: 0 });
        s.dthreq1.push(DthReq { kind: DthReqKind::RdOwn, utid: 1 });
        assert!(!conjunct_singleton_channels(&s));

        let mut s = quiescent();
        s.dthdata1.push(DataMsg { utid: 0, val: 1 });
        assert!(conjunct_data_no_conflict(&s));
        s.htddata2.push(DataMsg { utid: 1, val: 2 });
        assert!(!conjunct_data_no_conflict(&s));
    }

    #[test]
    fn sampler_is_deterministic_and_well_formed() {
        let mut a = StateSampler::new(7);
        let mut b = StateSampler::new(7);
        let xs = a.take(50);
        assert_eq!(xs, b.take(50));
        for s in &xs {
            assert!(conjunct_singleton_channels(s));
            for r in s.htdrsp1.iter().chain(&s.htdrsp2) {
                assert!(r.target.is_stable());
            }
            assert!(s.counter >= 3);
        }
    }
}
