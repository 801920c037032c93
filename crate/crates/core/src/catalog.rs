//! Construction of the full transition-rule catalog.
//!
//! Every rule is defined once, parametrically over the acting (or requesting)
//! device, and instantiated for both devices. Host-side rules read device
//! cache states directly where a tracking decision is needed (the
//! perfect-tracking assumption); those rules are marked.
//!
//! Three ordering restrictions appear as tagged guard conjuncts:
//!
//! * `snoop_pushes_go` — a device must not process a snoop while a GO-class
//!   response to it is still in flight (`htdrsp = []` on every snoop rule).
//! * `go_cannot_tailgate` — the host must not answer an eviction with a GO
//!   while response or data traffic for that device is pending
//!   (`htddata = [] and dthrsp = []` on the eviction responders).
//! * `one_snoop_per_addr` — the host must not have two snoops outstanding to
//!   a device (`htdreq = []` on every snoop-sending rule).
//!
//! Building with a flag cleared drops the tagged conjuncts and nothing else:
//! both configurations contain exactly the same rule names.

use crate::rules::{Family, RelaxConfig, RelaxFlag, Rule, RuleBuilder, RuleCatalog};
use crate::state::{
    DataMsg, DeviceId, DeviceState, DthReq, DthReqKind, DthResp, DthRespKind, HostState, HtdReq,
    HtdReqKind, HtdResp, HtdRespKind, Instruction, Loc, SystemState, BufferMsg, STORE_VALUE,
};

/// Device states the host counts as "holds, or may still come to hold, a
/// readable copy". Used by the tracking guards that decide whether the peer
/// must be invalidated before granting ownership.
pub const READABLE: [DeviceState; 9] = [
    DeviceState::SH,
    DeviceState::SMAD,
    DeviceState::SMA,
    DeviceState::SMD,
    DeviceState::SIA,
    DeviceState::SIAC,
    DeviceState::ISAD,
    DeviceState::ISA,
    DeviceState::ISD,
];

pub fn is_readable(s: DeviceState) -> bool {
    READABLE.contains(&s)
}

fn pop_front<T>(v: &mut Vec<T>) {
    if !v.is_empty() {
        v.remove(0);
    }
}

fn head_dthreq(s: &SystemState, d: DeviceId) -> Option<DthReq> {
    s.dthreq(d).first().copied()
}

fn head_dthrsp(s: &SystemState, d: DeviceId) -> Option<DthResp> {
    s.dthrsp(d).first().copied()
}

fn head_htdreq(s: &SystemState, d: DeviceId) -> Option<HtdReq> {
    s.htdreq(d).first().copied()
}

fn head_htdrsp(s: &SystemState, d: DeviceId) -> Option<HtdResp> {
    s.htdrsp(d).first().copied()
}

fn head_htddata(s: &SystemState, d: DeviceId) -> Option<DataMsg> {
    s.htddata(d).first().copied()
}

fn head_dthdata(s: &SystemState, d: DeviceId) -> Option<DataMsg> {
    s.dthdata(d).first().copied()
}

fn prog_head_is(s: &SystemState, d: DeviceId, i: Instruction) -> bool {
    s.dprog(d).first() == Some(&i)
}

fn dev_is(s: &SystemState, d: DeviceId, ds: DeviceState) -> bool {
    s.devcache(d).state == ds
}

fn host_is(s: &SystemState, hs: HostState) -> bool {
    s.hcache.state == hs
}

// Guard-description shorthands.
fn d_state(d: DeviceId, s: DeviceState) -> String {
    format!("devcache{}.state = {}", d.suffix(), s)
}

fn h_state(s: HostState) -> String {
    format!("hcache.state = {}", s)
}

/// The snoop-pushes-GO conjunct for device `d`.
fn spg_guard(b: RuleBuilder, cfg: &RelaxConfig, d: DeviceId) -> RuleBuilder {
    b.relaxable_guard(
        cfg,
        RelaxFlag::SnoopPushesGo,
        format!("htdrsp{} = []", d.suffix()),
        move |s| s.htdrsp(d).is_empty(),
    )
}

/// The GO-cannot-tailgate-snoop conjunct for eviction responses to device `d`.
fn gct_guard(b: RuleBuilder, cfg: &RelaxConfig, d: DeviceId) -> RuleBuilder {
    b.relaxable_guard(
        cfg,
        RelaxFlag::GoCannotTailgate,
        format!("htddata{d} = [] and dthrsp{d} = []", d = d.suffix()),
        move |s| s.htddata(d).is_empty() && s.dthrsp(d).is_empty(),
    )
}

/// The one-snoop-pending conjunct for snoops sent to device `t`.
fn one_snoop_guard(b: RuleBuilder, cfg: &RelaxConfig, t: DeviceId) -> RuleBuilder {
    b.relaxable_guard(
        cfg,
        RelaxFlag::OneSnoopPerAddr,
        format!("htdreq{} = []", t.suffix()),
        move |s| s.htdreq(t).is_empty(),
    )
}

// ---------------------------------------------------------------------------
// InstrIssue: a device turns its next instruction into a D2H request.
// Load/Store issues stamp the request with the counter value before the
// increment; evictions stamp it with the incremented value (both leave the
// counter one higher). The instruction itself stays queued: loads and stores
// are retired by a later local hit, evictions by the GO that completes them.
// ---------------------------------------------------------------------------

fn invalid_load(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new("InvalidLoad", d, Family::InstrIssue)
        .guard(d_state(d, DeviceState::I), move |s| dev_is(s, d, DeviceState::I))
        .guard(format!("head(dprog{dn}) = Load"), move |s| {
            prog_head_is(s, d, Instruction::Load)
        })
        .act(
            format!("dthreq{dn} @= (RdShared, counter); devcache{dn}.state := ISAD; counter += 1"),
            &[Loc::DthReq(d), Loc::DevCache(d), Loc::Counter],
            move |s| {
                let u = s.counter;
                s.dthreq_mut(d).push(DthReq { kind: DthReqKind::RdShared, utid: u });
                s.devcache_mut(d).state = DeviceState::ISAD;
                s.counter += 1;
            },
        )
}

fn invalid_store(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new("InvalidStore", d, Family::InstrIssue)
        .guard(d_state(d, DeviceState::I), move |s| dev_is(s, d, DeviceState::I))
        .guard(format!("head(dprog{dn}) = Store"), move |s| {
            prog_head_is(s, d, Instruction::Store)
        })
        .act(
            format!("dthreq{dn} @= (RdOwn, counter); devcache{dn}.state := IMAD; counter += 1"),
            &[Loc::DthReq(d), Loc::DevCache(d), Loc::Counter],
            move |s| {
                let u = s.counter;
                s.dthreq_mut(d).push(DthReq { kind: DthReqKind::RdOwn, utid: u });
                s.devcache_mut(d).state = DeviceState::IMAD;
                s.counter += 1;
            },
        )
}

fn shared_store(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new("SharedStore", d, Family::InstrIssue)
        .guard(d_state(d, DeviceState::SH), move |s| dev_is(s, d, DeviceState::SH))
        .guard(format!("head(dprog{dn}) = Store"), move |s| {
            prog_head_is(s, d, Instruction::Store)
        })
        .act(
            format!("dthreq{dn} @= (RdOwn, counter); devcache{dn}.state := SMAD; counter += 1"),
            &[Loc::DthReq(d), Loc::DevCache(d), Loc::Counter],
            move |s| {
                let u = s.counter;
                s.dthreq_mut(d).push(DthReq { kind: DthReqKind::RdOwn, utid: u });
                s.devcache_mut(d).state = DeviceState::SMAD;
                s.counter += 1;
            },
        )
}

fn shared_evict(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new("SharedEvict", d, Family::InstrIssue)
        .guard(d_state(d, DeviceState::SH), move |s| dev_is(s, d, DeviceState::SH))
        .guard(format!("head(dprog{dn}) = Evict"), move |s| {
            prog_head_is(s, d, Instruction::Evict)
        })
        .act(
            format!("counter += 1; dthreq{dn} @= (CleanEvict, counter); devcache{dn}.state := SIA"),
            &[Loc::DthReq(d), Loc::DevCache(d), Loc::Counter],
            move |s| {
                s.counter += 1;
                let u = s.counter;
                s.dthreq_mut(d).push(DthReq { kind: DthReqKind::CleanEvict, utid: u });
                s.devcache_mut(d).state = DeviceState::SIA;
            },
        )
}

fn shared_evict_no_data(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new("SharedEvictNoData", d, Family::InstrIssue)
        .guard(d_state(d, DeviceState::SH), move |s| dev_is(s, d, DeviceState::SH))
        .guard(format!("head(dprog{dn}) = Evict"), move |s| {
            prog_head_is(s, d, Instruction::Evict)
        })
        .act(
            format!(
                "counter += 1; dthreq{dn} @= (CleanEvictNoData, counter); devcache{dn}.state := SIAC"
            ),
            &[Loc::DthReq(d), Loc::DevCache(d), Loc::Counter],
            move |s| {
                s.counter += 1;
                let u = s.counter;
                s.dthreq_mut(d).push(DthReq { kind: DthReqKind::CleanEvictNoData, utid: u });
                s.devcache_mut(d).state = DeviceState::SIAC;
            },
        )
}

fn modified_evict(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new("ModifiedEvict", d, Family::InstrIssue)
        .guard(d_state(d, DeviceState::EM), move |s| dev_is(s, d, DeviceState::EM))
        .guard(format!("head(dprog{dn}) = Evict"), move |s| {
            prog_head_is(s, d, Instruction::Evict)
        })
        .act(
            format!("counter += 1; dthreq{dn} @= (DirtyEvict, counter); devcache{dn}.state := MIA"),
            &[Loc::DthReq(d), Loc::DevCache(d), Loc::Counter],
            move |s| {
                s.counter += 1;
                let u = s.counter;
                s.dthreq_mut(d).push(DthReq { kind: DthReqKind::DirtyEvict, utid: u });
                s.devcache_mut(d).state = DeviceState::MIA;
            },
        )
}

// ---------------------------------------------------------------------------
// LocalHit: the line is already in the right state; the instruction retires
// locally. These rules keep the counter bump and buffer clear of the store
// variant for all three, matching one uniform shape.
// ---------------------------------------------------------------------------

fn local_hit(
    base: &'static str,
    d: DeviceId,
    state: DeviceState,
    instr: Instruction,
    write_val: bool,
) -> RuleBuilder {
    let dn = d.suffix();
    let mut b = RuleBuilder::new(base, d, Family::LocalHit)
        .guard(d_state(d, state), move |s| dev_is(s, d, state))
        .guard(format!("head(dprog{dn}) = {instr}"), move |s| prog_head_is(s, d, instr));
    if write_val {
        b = b.act(
            format!("devcache{dn}.val := {STORE_VALUE}"),
            &[Loc::DevCache(d)],
            move |s| {
                s.devcache_mut(d).val = STORE_VALUE;
            },
        );
    }
    b.act(
        format!("dprog{dn} := tail(dprog{dn}); dbuffer{dn} := empty; counter += 1"),
        &[Loc::DProg(d), Loc::DBuffer(d), Loc::Counter],
        move |s| {
            pop_front(s.dprog_mut(d));
            *s.dbuffer_mut(d) = None;
            s.counter += 1;
        },
    )
}

fn shared_load(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    local_hit("SharedLoad", d, DeviceState::SH, Instruction::Load, false)
}

fn modified_load(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    local_hit("ModifiedLoad", d, DeviceState::EM, Instruction::Load, false)
}

fn modified_store(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    local_hit("ModifiedStore", d, DeviceState::EM, Instruction::Store, true)
}

// ---------------------------------------------------------------------------
// DeviceSnoop: the device consumes the snoop at the head of its H2D request
// channel, stores it in the buffer and answers on its D2H response channel.
// Every snoop rule carries the snoop-pushes-GO conjunct.
// ---------------------------------------------------------------------------

struct SnoopSpec {
    base: &'static str,
    from: DeviceState,
    snoop: HtdReqKind,
    to: DeviceState,
    resp: DthRespKind,
    forwards_data: bool,
}

fn snoop_rule(spec: SnoopSpec, d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    let SnoopSpec { base, from, snoop, to, resp, forwards_data } = spec;
    let mut b = RuleBuilder::new(base, d, Family::DeviceSnoop)
        .guard(d_state(d, from), move |s| dev_is(s, d, from))
        .guard(format!("head(htdreq{dn}) = ({snoop}, u)"), move |s| {
            matches!(head_htdreq(s, d), Some(m) if m.kind == snoop)
        });
    b = spg_guard(b, cfg, d);
    if to != from {
        b = b.act(
            format!("devcache{dn}.state := {to}"),
            &[Loc::DevCache(d)],
            move |s| {
                s.devcache_mut(d).state = to;
            },
        );
    }
    b = b.act(
        format!("htdreq{dn} := tail(htdreq{dn}); dbuffer{dn} := ({snoop}, u); dthrsp{dn} @= ({resp}, u)"),
        &[Loc::HtdReq(d), Loc::DBuffer(d), Loc::DthRsp(d)],
        move |s| {
            if let Some(m) = head_htdreq(s, d) {
                pop_front(s.htdreq_mut(d));
                *s.dbuffer_mut(d) = Some(BufferMsg::Req(m));
                s.dthrsp_mut(d).push(DthResp { kind: resp, utid: m.utid });
            }
        },
    );
    if forwards_data {
        b = b.act(
            format!("dthdata{dn} @= (u, devcache{dn}.val)"),
            &[Loc::DthData(d)],
            move |s| {
                if let Some(r) = s.dthrsp(d).last().copied() {
                    let v = s.devcache(d).val;
                    s.dthdata_mut(d).push(DataMsg { utid: r.utid, val: v });
                }
            },
        );
    }
    b
}

fn shared_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    snoop_rule(
        SnoopSpec {
            base: "SharedSnpInv",
            from: DeviceState::SH,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::I,
            resp: DthRespKind::RspIHitSE,
            forwards_data: false,
        },
        d,
        cfg,
    )
}

fn modified_snp_data(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    snoop_rule(
        SnoopSpec {
            base: "ModifiedSnpData",
            from: DeviceState::EM,
            snoop: HtdReqKind::SnpData,
            to: DeviceState::SH,
            resp: DthRespKind::RspSFwdM,
            forwards_data: true,
        },
        d,
        cfg,
    )
}

fn modified_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    snoop_rule(
        SnoopSpec {
            base: "ModifiedSnpInv",
            from: DeviceState::EM,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::I,
            resp: DthRespKind::RspIFwdM,
            forwards_data: true,
        },
        d,
        cfg,
    )
}

fn isad_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    // The device holds nothing yet; it answers honestly and keeps waiting for
    // its own grant.
    snoop_rule(
        SnoopSpec {
            base: "ISADSnpInv",
            from: DeviceState::ISAD,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::ISAD,
            resp: DthRespKind::RspIHitI,
            forwards_data: false,
        },
        d,
        cfg,
    )
}

fn smad_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    // Loses its shared copy; the pending ownership upgrade now starts from I.
    snoop_rule(
        SnoopSpec {
            base: "SMADSnpInv",
            from: DeviceState::SMAD,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::IMAD,
            resp: DthRespKind::RspIHitSE,
            forwards_data: false,
        },
        d,
        cfg,
    )
}

fn mia_snp_data(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    snoop_rule(
        SnoopSpec {
            base: "MIASnpData",
            from: DeviceState::MIA,
            snoop: HtdReqKind::SnpData,
            to: DeviceState::IIA,
            resp: DthRespKind::RspIFwdM,
            forwards_data: true,
        },
        d,
        cfg,
    )
}

fn mia_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    snoop_rule(
        SnoopSpec {
            base: "MIASnpInv",
            from: DeviceState::MIA,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::IIA,
            resp: DthRespKind::RspIFwdM,
            forwards_data: true,
        },
        d,
        cfg,
    )
}

fn sia_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    snoop_rule(
        SnoopSpec {
            base: "SIASnpInv",
            from: DeviceState::SIA,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::IIA,
            resp: DthRespKind::RspIHitSE,
            forwards_data: false,
        },
        d,
        cfg,
    )
}

fn siac_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    snoop_rule(
        SnoopSpec {
            base: "SIACSnpInv",
            from: DeviceState::SIAC,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::IIA,
            resp: DthRespKind::RspIHitSE,
            forwards_data: false,
        },
        d,
        cfg,
    )
}

fn invalid_snp_inv(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    // A snoop can race with the GO that already invalidated the line (the
    // eviction drop completed first). The device answers that it holds
    // nothing.
    snoop_rule(
        SnoopSpec {
            base: "InvalidSnpInv",
            from: DeviceState::I,
            snoop: HtdReqKind::SnpInv,
            to: DeviceState::I,
            resp: DthRespKind::RspIHitI,
            forwards_data: false,
        },
        d,
        cfg,
    )
}

// ---------------------------------------------------------------------------
// DeviceH2DResp: the device consumes a GO-class response, alone or combined
// with the matching data message.
// ---------------------------------------------------------------------------

fn go_data_combined(
    base: &'static str,
    d: DeviceId,
    from: DeviceState,
    target: DeviceState,
) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new(base, d, Family::DeviceH2DResp)
        .guard(d_state(d, from), move |s| dev_is(s, d, from))
        .guard(format!("head(htdrsp{dn}) = (GO, {target}, u)"), move |s| {
            matches!(head_htdrsp(s, d), Some(r) if r.kind == HtdRespKind::Go && r.target == target)
        })
        .guard(format!("head(htddata{dn}) = (u, v)"), move |s| {
            match (head_htdrsp(s, d), head_htddata(s, d)) {
                (Some(r), Some(m)) => r.utid == m.utid,
                _ => false,
            }
        })
        .act(
            format!(
                "devcache{dn} := (v, {target}); htdrsp{dn} := tail(htdrsp{dn}); htddata{dn} := tail(htddata{dn})"
            ),
            &[Loc::DevCache(d), Loc::HtdRsp(d), Loc::HtdData(d)],
            move |s| {
                if let Some(m) = head_htddata(s, d) {
                    s.devcache_mut(d).val = m.val;
                }
                s.devcache_mut(d).state = target;
                pop_front(s.htdrsp_mut(d));
                pop_front(s.htddata_mut(d));
            },
        )
}

fn go_only(base: &'static str, d: DeviceId, from: DeviceState, target: DeviceState, to: DeviceState) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new(base, d, Family::DeviceH2DResp)
        .guard(d_state(d, from), move |s| dev_is(s, d, from))
        .guard(format!("head(htdrsp{dn}) = (GO, {target}, u)"), move |s| {
            matches!(head_htdrsp(s, d), Some(r) if r.kind == HtdRespKind::Go && r.target == target)
        })
        .act(
            format!("devcache{dn}.state := {to}; htdrsp{dn} := tail(htdrsp{dn})"),
            &[Loc::DevCache(d), Loc::HtdRsp(d)],
            move |s| {
                s.devcache_mut(d).state = to;
                pop_front(s.htdrsp_mut(d));
            },
        )
}

/// Completion of an eviction: the GO-WritePull(-Drop) retires the Evict
/// instruction; a WritePull additionally ships the line's value to the host.
fn evict_go(
    base: &'static str,
    d: DeviceId,
    from: DeviceState,
    kind: HtdRespKind,
    send_data: bool,
) -> RuleBuilder {
    let dn = d.suffix();
    let mut b = RuleBuilder::new(base, d, Family::DeviceH2DResp)
        .guard(d_state(d, from), move |s| dev_is(s, d, from))
        .guard(format!("head(htdrsp{dn}) = ({kind}, I, u)"), move |s| {
            matches!(head_htdrsp(s, d), Some(r) if r.kind == kind)
        });
    if send_data {
        b = b.act(
            format!("dthdata{dn} @= (u, devcache{dn}.val)"),
            &[Loc::DthData(d)],
            move |s| {
                if let Some(r) = head_htdrsp(s, d) {
                    let v = s.devcache(d).val;
                    s.dthdata_mut(d).push(DataMsg { utid: r.utid, val: v });
                }
            },
        );
    }
    b.act(
        format!(
            "devcache{dn}.state := I; htdrsp{dn} := tail(htdrsp{dn}); dprog{dn} := tail(dprog{dn})"
        ),
        &[Loc::DevCache(d), Loc::HtdRsp(d), Loc::DProg(d)],
        move |s| {
            s.devcache_mut(d).state = DeviceState::I;
            pop_front(s.htdrsp_mut(d));
            pop_front(s.dprog_mut(d));
        },
    )
}

// ---------------------------------------------------------------------------
// DeviceData: the device consumes an H2D data message on its own.
// ---------------------------------------------------------------------------

fn data_step(base: &'static str, d: DeviceId, from: DeviceState, to: DeviceState, take_val: bool) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new(base, d, Family::DeviceData)
        .guard(d_state(d, from), move |s| dev_is(s, d, from))
        .guard(format!("head(htddata{dn}) = (u, v)"), move |s| head_htddata(s, d).is_some())
        .act(
            if take_val {
                format!("devcache{dn} := (v, {to}); htddata{dn} := tail(htddata{dn})")
            } else {
                format!("devcache{dn}.state := {to}; htddata{dn} := tail(htddata{dn})")
            },
            &[Loc::DevCache(d), Loc::HtdData(d)],
            move |s| {
                if take_val {
                    if let Some(m) = head_htddata(s, d) {
                        s.devcache_mut(d).val = m.val;
                    }
                }
                s.devcache_mut(d).state = to;
                pop_front(s.htddata_mut(d));
            },
        )
}

// ---------------------------------------------------------------------------
// HostD2HReq: the host consumes a D2H request from a stable state.
// ---------------------------------------------------------------------------

/// Grant issued directly from a stable host state: GO plus the host's value.
fn direct_grant(
    base: &'static str,
    d: DeviceId,
    host: HostState,
    req: DthReqKind,
    target: DeviceState,
    host_to: HostState,
) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new(base, d, Family::HostD2HReq)
        .guard(h_state(host), move |s| host_is(s, host))
        .guard(format!("head(dthreq{dn}) = ({req}, u)"), move |s| {
            matches!(head_dthreq(s, d), Some(r) if r.kind == req)
        })
        .act(
            format!(
                "dthreq{dn} := tail(dthreq{dn}); htdrsp{dn} @= (GO, {target}, u); htddata{dn} @= (u, hcache.val); hcache.state := {host_to}"
            ),
            &[Loc::DthReq(d), Loc::HtdRsp(d), Loc::HtdData(d), Loc::HCache],
            move |s| {
                if let Some(r) = head_dthreq(s, d) {
                    pop_front(s.dthreq_mut(d));
                    s.htdrsp_mut(d).push(HtdResp { kind: HtdRespKind::Go, target, utid: r.utid });
                    let v = s.hcache.val;
                    s.htddata_mut(d).push(DataMsg { utid: r.utid, val: v });
                    s.hcache.state = host_to;
                }
            },
        )
}

fn invalid_rd_shared(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    direct_grant("InvalidRdShared", d, HostState::I, DthReqKind::RdShared, DeviceState::SH, HostState::SH)
}

fn shared_rd_shared(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    direct_grant("SharedRdShared", d, HostState::SH, DthReqKind::RdShared, DeviceState::SH, HostState::SH)
}

fn invalid_rd_own(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    direct_grant("InvalidRdOwn", d, HostState::I, DthReqKind::RdOwn, DeviceState::EM, HostState::EM)
}

fn shared_rd_own_last(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let o = d.other();
    let on = o.suffix();
    direct_grant("SharedRdOwnLast", d, HostState::SH, DthReqKind::RdOwn, DeviceState::EM, HostState::EM)
        .guard(format!("devcache{on}.state not in Readable"), move |s| {
            !is_readable(s.devcache(o).state)
        })
        .tracking()
}

fn shared_rd_own(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    let o = d.other();
    let dn = d.suffix();
    let on = o.suffix();
    let b = RuleBuilder::new("SharedRdOwn", d, Family::HostD2HReq)
        .guard(h_state(HostState::SH), move |s| host_is(s, HostState::SH))
        .guard(format!("head(dthreq{dn}) = (RdOwn, u)"), move |s| {
            matches!(head_dthreq(s, d), Some(r) if r.kind == DthReqKind::RdOwn)
        })
        .guard(format!("devcache{on}.state in Readable"), move |s| {
            is_readable(s.devcache(o).state)
        })
        .tracking();
    one_snoop_guard(b, cfg, o).act(
        format!(
            "dthreq{dn} := tail(dthreq{dn}); htdreq{on} @= (SnpInv, u); htddata{dn} @= (u, hcache.val); hcache.state := MA"
        ),
        &[Loc::DthReq(d), Loc::HtdReq(o), Loc::HtdData(d), Loc::HCache],
        move |s| {
            if let Some(r) = head_dthreq(s, d) {
                pop_front(s.dthreq_mut(d));
                s.htdreq_mut(o).push(HtdReq { kind: HtdReqKind::SnpInv, utid: r.utid });
                let v = s.hcache.val;
                s.htddata_mut(d).push(DataMsg { utid: r.utid, val: v });
                s.hcache.state = HostState::MA;
            }
        },
    )
}

fn modified_rd_shared(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    let o = d.other();
    let dn = d.suffix();
    let on = o.suffix();
    let b = RuleBuilder::new("ModifiedRdShared", d, Family::HostD2HReq)
        .guard(h_state(HostState::EM), move |s| host_is(s, HostState::EM))
        .guard(format!("head(dthreq{dn}) = (RdShared, u)"), move |s| {
            matches!(head_dthreq(s, d), Some(r) if r.kind == DthReqKind::RdShared)
        });
    one_snoop_guard(b, cfg, o).act(
        format!("dthreq{dn} := tail(dthreq{dn}); htdreq{on} @= (SnpData, u); hcache.state := SAD"),
        &[Loc::DthReq(d), Loc::HtdReq(o), Loc::HCache],
        move |s| {
            if let Some(r) = head_dthreq(s, d) {
                pop_front(s.dthreq_mut(d));
                s.htdreq_mut(o).push(HtdReq { kind: HtdReqKind::SnpData, utid: r.utid });
                s.hcache.state = HostState::SAD;
            }
        },
    )
}

fn modified_rd_own(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    let o = d.other();
    let dn = d.suffix();
    let on = o.suffix();
    let b = RuleBuilder::new("ModifiedRdOwn", d, Family::HostD2HReq)
        .guard(h_state(HostState::EM), move |s| host_is(s, HostState::EM))
        .guard(format!("head(dthreq{dn}) = (RdOwn, u)"), move |s| {
            matches!(head_dthreq(s, d), Some(r) if r.kind == DthReqKind::RdOwn)
        });
    one_snoop_guard(b, cfg, o).act(
        format!("dthreq{dn} := tail(dthreq{dn}); htdreq{on} @= (SnpInv, u); hcache.state := MAD"),
        &[Loc::DthReq(d), Loc::HtdReq(o), Loc::HCache],
        move |s| {
            if let Some(r) = head_dthreq(s, d) {
                pop_front(s.dthreq_mut(d));
                s.htdreq_mut(o).push(HtdReq { kind: HtdReqKind::SnpInv, utid: r.utid });
                s.hcache.state = HostState::MAD;
            }
        },
    )
}

fn host_modified_dirty_evict(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    let b = RuleBuilder::new("HostModifiedDirtyEvict", d, Family::HostD2HReq)
        .guard(h_state(HostState::EM), move |s| host_is(s, HostState::EM))
        .guard(d_state(d, DeviceState::MIA), move |s| dev_is(s, d, DeviceState::MIA))
        .guard(format!("head(dthreq{dn}) = (DirtyEvict, u)"), move |s| {
            matches!(head_dthreq(s, d), Some(r) if r.kind == DthReqKind::DirtyEvict)
        })
        .tracking();
    gct_guard(b, cfg, d).act(
        format!(
            "hcache.state := ID; dthreq{dn} := tail(dthreq{dn}); htdrsp{dn} @= (GO_WritePull, I, u); dbuffer{dn} := empty"
        ),
        &[Loc::HCache, Loc::DthReq(d), Loc::HtdRsp(d), Loc::DBuffer(d)],
        move |s| {
            if let Some(r) = head_dthreq(s, d) {
                s.hcache.state = HostState::ID;
                pop_front(s.dthreq_mut(d));
                s.htdrsp_mut(d).push(HtdResp {
                    kind: HtdRespKind::GoWritePull,
                    target: DeviceState::I,
                    utid: r.utid,
                });
                *s.dbuffer_mut(d) = None;
            }
        },
    )
}

/// Host answers an eviction request with GO-WritePullDrop; the host keeps its
/// own copy and never pulls clean or already-collected data.
fn evict_drop(
    base: &'static str,
    d: DeviceId,
    cfg: &RelaxConfig,
    dev_state_req: DeviceState,
    req: DthReqKind,
    extra: Option<(&'static str, Box<dyn Fn(&SystemState) -> bool + Send + Sync>)>,
    host_guard: Option<HostState>,
) -> RuleBuilder {
    let dn = d.suffix();
    let mut b = RuleBuilder::new(base, d, Family::HostD2HReq);
    b = match host_guard {
        Some(hs) => b.guard(h_state(hs), move |s| host_is(s, hs)),
        None => b.guard("hcache.state stable".to_string(), move |s| s.hcache.state.is_stable()),
    };
    b = b
        .guard(d_state(d, dev_state_req), move |s| dev_is(s, d, dev_state_req))
        .guard(format!("head(dthreq{dn}) = ({req}, u)"), move |s| {
            matches!(head_dthreq(s, d), Some(r) if r.kind == req)
        })
        .tracking();
    if let Some((desc, pred)) = extra {
        b = b.guard(desc.to_string(), move |s| pred(s));
    }
    gct_guard(b, cfg, d).act(
        format!(
            "dthreq{dn} := tail(dthreq{dn}); htdrsp{dn} @= (GO_WritePullDrop, I, u); dbuffer{dn} := empty"
        ),
        &[Loc::DthReq(d), Loc::HtdRsp(d), Loc::DBuffer(d)],
        move |s| {
            if let Some(r) = head_dthreq(s, d) {
                pop_front(s.dthreq_mut(d));
                s.htdrsp_mut(d).push(HtdResp {
                    kind: HtdRespKind::GoWritePullDrop,
                    target: DeviceState::I,
                    utid: r.utid,
                });
                *s.dbuffer_mut(d) = None;
            }
        },
    )
}

fn shared_clean_evict_not_last_drop(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    let o = d.other();
    evict_drop(
        "Shared_CleanEvict_NotLastDrop",
        d,
        cfg,
        DeviceState::SIA,
        DthReqKind::CleanEvict,
        Some((
            if o == DeviceId::D2 { "devcache2.state in Readable" } else { "devcache1.state in Readable" },
            Box::new(move |s| is_readable(s.devcache(o).state)),
        )),
        Some(HostState::SH),
    )
}

fn shared_clean_evict_last_drop(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    let o = d.other();
    evict_drop(
        "Shared_CleanEvict_LastDrop",
        d,
        cfg,
        DeviceState::SIA,
        DthReqKind::CleanEvict,
        Some((
            if o == DeviceId::D2 { "devcache2.state not in Readable" } else { "devcache1.state not in Readable" },
            Box::new(move |s| !is_readable(s.devcache(o).state)),
        )),
        Some(HostState::SH),
    )
}

fn shared_clean_evict_no_data_drop(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    evict_drop(
        "SharedCleanEvictNoDataDrop",
        d,
        cfg,
        DeviceState::SIAC,
        DthReqKind::CleanEvictNoData,
        None,
        Some(HostState::SH),
    )
}

fn iia_dirty_evict_drop(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    // The line was already collected by a snoop; the pending eviction is
    // answered with a drop so the device never sends stale data.
    evict_drop("IIADirtyEvictDrop", d, cfg, DeviceState::IIA, DthReqKind::DirtyEvict, None, None)
}

fn iia_clean_evict_drop(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    evict_drop("IIACleanEvictDrop", d, cfg, DeviceState::IIA, DthReqKind::CleanEvict, None, None)
}

fn iia_clean_evict_no_data_drop(d: DeviceId, cfg: &RelaxConfig) -> RuleBuilder {
    evict_drop(
        "IIACleanEvictNoDataDrop",
        d,
        cfg,
        DeviceState::IIA,
        DthReqKind::CleanEvictNoData,
        None,
        None,
    )
}

// ---------------------------------------------------------------------------
// HostD2HResp / HostData: the host finishes an open snoop transaction for
// requester `d` by consuming the peer's response and (if the line was dirty)
// its writeback data, then grants.
// ---------------------------------------------------------------------------

/// MA-completion: the data for the requester was already sent when the snoop
/// went out, so only the GO is issued here.
fn ma_complete(base: &'static str, d: DeviceId, resp: DthRespKind, send_data: bool) -> RuleBuilder {
    let o = d.other();
    let dn = d.suffix();
    let on = o.suffix();
    let mut b = RuleBuilder::new(base, d, Family::HostD2HResp)
        .guard(h_state(HostState::MA), move |s| host_is(s, HostState::MA))
        .guard(format!("head(dthrsp{on}) = ({resp}, u)"), move |s| {
            matches!(head_dthrsp(s, o), Some(r) if r.kind == resp)
        });
    if send_data {
        b = b.act(
            format!("htddata{dn} @= (u, hcache.val)"),
            &[Loc::HtdData(d)],
            move |s| {
                if let Some(r) = head_dthrsp(s, o) {
                    let v = s.hcache.val;
                    s.htddata_mut(d).push(DataMsg { utid: r.utid, val: v });
                }
            },
        );
    }
    b.act(
        format!("dthrsp{on} := tail(dthrsp{on}); htdrsp{dn} @= (GO, EM, u); hcache.state := EM"),
        &[Loc::DthRsp(o), Loc::HtdRsp(d), Loc::HCache],
        move |s| {
            if let Some(r) = head_dthrsp(s, o) {
                pop_front(s.dthrsp_mut(o));
                s.htdrsp_mut(d).push(HtdResp { kind: HtdRespKind::Go, target: DeviceState::EM, utid: r.utid });
                s.hcache.state = HostState::EM;
            }
        },
    )
}

/// Intermediate host wait-state advance on a snoop response.
fn wait_resp(base: &'static str, d: DeviceId, from: HostState, resp: DthRespKind, to: HostState) -> RuleBuilder {
    let o = d.other();
    let on = o.suffix();
    RuleBuilder::new(base, d, Family::HostD2HResp)
        .guard(h_state(from), move |s| host_is(s, from))
        .guard(format!("head(dthrsp{on}) = ({resp}, u)"), move |s| {
            matches!(head_dthrsp(s, o), Some(r) if r.kind == resp)
        })
        .act(
            format!("dthrsp{on} := tail(dthrsp{on}); hcache.state := {to}"),
            &[Loc::DthRsp(o), Loc::HCache],
            move |s| {
                pop_front(s.dthrsp_mut(o));
                s.hcache.state = to;
            },
        )
}

/// SA-completion: writeback data was already captured into the host line;
/// grant shared access with it.
fn sa_complete(base: &'static str, d: DeviceId, resp: DthRespKind) -> RuleBuilder {
    let o = d.other();
    let dn = d.suffix();
    let on = o.suffix();
    RuleBuilder::new(base, d, Family::HostD2HResp)
        .guard(h_state(HostState::SA), move |s| host_is(s, HostState::SA))
        .guard(format!("head(dthrsp{on}) = ({resp}, u)"), move |s| {
            matches!(head_dthrsp(s, o), Some(r) if r.kind == resp)
        })
        .act(
            format!(
                "dthrsp{on} := tail(dthrsp{on}); htdrsp{dn} @= (GO, SH, u); htddata{dn} @= (u, hcache.val); hcache.state := SH"
            ),
            &[Loc::DthRsp(o), Loc::HtdRsp(d), Loc::HtdData(d), Loc::HCache],
            move |s| {
                if let Some(r) = head_dthrsp(s, o) {
                    pop_front(s.dthrsp_mut(o));
                    s.htdrsp_mut(d).push(HtdResp { kind: HtdRespKind::Go, target: DeviceState::SH, utid: r.utid });
                    let v = s.hcache.val;
                    s.htddata_mut(d).push(DataMsg { utid: r.utid, val: v });
                    s.hcache.state = HostState::SH;
                }
            },
        )
}

/// Host consumes writeback data mid-transaction, capturing the value.
fn wait_data(base: &'static str, d: DeviceId, from: HostState, to: HostState, grant: Option<DeviceState>) -> RuleBuilder {
    let o = d.other();
    let dn = d.suffix();
    let on = o.suffix();
    let mut b = RuleBuilder::new(base, d, Family::HostData)
        .guard(h_state(from), move |s| host_is(s, from))
        .guard(format!("head(dthdata{on}) = (u, v)"), move |s| head_dthdata(s, o).is_some());
    if let Some(target) = grant {
        b = b.act(
            format!(
                "hcache.val := v; dthdata{on} := tail(dthdata{on}); htdrsp{dn} @= (GO, {target}, u); htddata{dn} @= (u, v); hcache.state := {to}"
            ),
            &[Loc::HCache, Loc::DthData(o), Loc::HtdRsp(d), Loc::HtdData(d)],
            move |s| {
                if let Some(m) = head_dthdata(s, o) {
                    s.hcache.val = m.val;
                    pop_front(s.dthdata_mut(o));
                    s.htdrsp_mut(d).push(HtdResp { kind: HtdRespKind::Go, target, utid: m.utid });
                    s.htddata_mut(d).push(DataMsg { utid: m.utid, val: m.val });
                    s.hcache.state = to;
                }
            },
        );
    } else {
        b = b.act(
            format!("hcache.val := v; dthdata{on} := tail(dthdata{on}); hcache.state := {to}"),
            &[Loc::HCache, Loc::DthData(o)],
            move |s| {
                if let Some(m) = head_dthdata(s, o) {
                    s.hcache.val = m.val;
                    pop_front(s.dthdata_mut(o));
                    s.hcache.state = to;
                }
            },
        );
    }
    b
}

fn id_data(d: DeviceId, _cfg: &RelaxConfig) -> RuleBuilder {
    let dn = d.suffix();
    RuleBuilder::new("IDData", d, Family::HostData)
        .guard(h_state(HostState::ID), move |s| host_is(s, HostState::ID))
        .guard(format!("head(dthdata{dn}) = (u, v)"), move |s| head_dthdata(s, d).is_some())
        .act(
            format!("hcache := (v, I); dthdata{dn} := tail(dthdata{dn})"),
            &[Loc::HCache, Loc::DthData(d)],
            move |s| {
                if let Some(m) = head_dthdata(s, d) {
                    s.hcache.val = m.val;
                    s.hcache.state = HostState::I;
                    pop_front(s.dthdata_mut(d));
                }
            },
        )
}

/// Builds the complete catalog for `config`. Rule ids follow construction
/// order and are identical across configurations.
pub fn build_catalog(config: RelaxConfig) -> RuleCatalog {
    let cfg = &config;
    let mut builders: Vec<RuleBuilder> = Vec::new();

    for d in DeviceId::BOTH {
        builders.push(invalid_load(d, cfg));
        builders.push(invalid_store(d, cfg));
        builders.push(shared_store(d, cfg));
        builders.push(shared_evict(d, cfg));
        builders.push(shared_evict_no_data(d, cfg));
        builders.push(modified_evict(d, cfg));

        builders.push(shared_load(d, cfg));
        builders.push(modified_load(d, cfg));
        builders.push(modified_store(d, cfg));

        builders.push(shared_snp_inv(d, cfg));
        builders.push(modified_snp_data(d, cfg));
        builders.push(modified_snp_inv(d, cfg));
        builders.push(isad_snp_inv(d, cfg));
        builders.push(smad_snp_inv(d, cfg));
        builders.push(mia_snp_data(d, cfg));
        builders.push(mia_snp_inv(d, cfg));
        builders.push(sia_snp_inv(d, cfg));
        builders.push(siac_snp_inv(d, cfg));
        builders.push(invalid_snp_inv(d, cfg));

        builders.push(go_data_combined("ISADGO+Data", d, DeviceState::ISAD, DeviceState::SH));
        builders.push(go_data_combined("IMADGO+Data", d, DeviceState::IMAD, DeviceState::EM));
        builders.push(go_data_combined("SMADGO+Data", d, DeviceState::SMAD, DeviceState::EM));
        builders.push(go_only("ISADGO", d, DeviceState::ISAD, DeviceState::SH, DeviceState::ISD));
        builders.push(go_only("IMADGO", d, DeviceState::IMAD, DeviceState::EM, DeviceState::IMD));
        builders.push(go_only("SMADGO", d, DeviceState::SMAD, DeviceState::EM, DeviceState::SMD));
        builders.push(go_only("ISAGO", d, DeviceState::ISA, DeviceState::SH, DeviceState::SH));
        builders.push(go_only("IMAGO", d, DeviceState::IMA, DeviceState::EM, DeviceState::EM));
        builders.push(go_only("SMAGO", d, DeviceState::SMA, DeviceState::EM, DeviceState::EM));
        builders.push(evict_go(
            "SIA_GO_WritePullDrop",
            d,
            DeviceState::SIA,
            HtdRespKind::GoWritePullDrop,
            false,
        ));
        builders.push(evict_go(
            "SIACGO_WritePullDrop",
            d,
            DeviceState::SIAC,
            HtdRespKind::GoWritePullDrop,
            false,
        ));
        builders.push(evict_go(
            "MIA_GO_WritePull",
            d,
            DeviceState::MIA,
            HtdRespKind::GoWritePull,
            true,
        ));
        builders.push(evict_go(
            "SIAGO_WritePull",
            d,
            DeviceState::SIA,
            HtdRespKind::GoWritePull,
            true,
        ));
        builders.push(evict_go(
            "IIA_GO_WritePullDrop",
            d,
            DeviceState::IIA,
            HtdRespKind::GoWritePullDrop,
            false,
        ));

        builders.push(data_step("ISADData", d, DeviceState::ISAD, DeviceState::ISA, true));
        builders.push(data_step("IMADData", d, DeviceState::IMAD, DeviceState::IMA, true));
        builders.push(data_step("SMADData", d, DeviceState::SMAD, DeviceState::SMA, true));
        builders.push(data_step("ISDData", d, DeviceState::ISD, DeviceState::SH, true));
        builders.push(data_step("IMDData", d, DeviceState::IMD, DeviceState::EM, true));
        builders.push(data_step("SMDData", d, DeviceState::SMD, DeviceState::EM, true));
        builders.push(data_step("ISDIData", d, DeviceState::ISDI, DeviceState::I, false));

        builders.push(invalid_rd_shared(d, cfg));
        builders.push(shared_rd_shared(d, cfg));
        builders.push(modified_rd_shared(d, cfg));
        builders.push(invalid_rd_own(d, cfg));
        builders.push(shared_rd_own(d, cfg));
        builders.push(shared_rd_own_last(d, cfg));
        builders.push(modified_rd_own(d, cfg));
        builders.push(host_modified_dirty_evict(d, cfg));
        builders.push(shared_clean_evict_not_last_drop(d, cfg));
        builders.push(shared_clean_evict_last_drop(d, cfg));
        builders.push(shared_clean_evict_no_data_drop(d, cfg));
        builders.push(iia_dirty_evict_drop(d, cfg));
        builders.push(iia_clean_evict_drop(d, cfg));
        builders.push(iia_clean_evict_no_data_drop(d, cfg));

        builders.push(ma_complete("MARspIHitI", d, DthRespKind::RspIHitI, false));
        builders.push(ma_complete("MARspIHitSE", d, DthRespKind::RspIHitSE, false));
        builders.push(ma_complete("MARspIFwdM", d, DthRespKind::RspIFwdM, true));
        builders.push(wait_resp("MADRspIFwdM", d, HostState::MAD, DthRespKind::RspIFwdM, HostState::MD));
        builders.push(wait_resp("SADRspSFwdM", d, HostState::SAD, DthRespKind::RspSFwdM, HostState::SD));
        builders.push(wait_resp("SADRspIFwdM", d, HostState::SAD, DthRespKind::RspIFwdM, HostState::SD));
        builders.push(sa_complete("SARspSFwdM", d, DthRespKind::RspSFwdM));
        builders.push(sa_complete("SARspIFwdM", d, DthRespKind::RspIFwdM));

        builders.push(wait_data("MADData", d, HostState::MAD, HostState::MA, None));
        builders.push(wait_data("MDData", d, HostState::MD, HostState::EM, Some(DeviceState::EM)));
        builders.push(wait_data("SADData", d, HostState::SAD, HostState::SA, None));
        builders.push(wait_data("SDData", d, HostState::SD, HostState::SH, Some(DeviceState::SH)));
        builders.push(id_data(d, cfg));
    }

    let rules: Vec<Rule> = builders
        .into_iter()
        .enumerate()
        .map(|(id, b)| b.build(id))
        .collect();

    debug_assert_eq!(
        rules.len(),
        rules.iter().map(|r| r.name.as_str()).collect::<std::collections::HashSet<_>>().len(),
        "rule names must be unique"
    );

    RuleCatalog { rules, config }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{mk_initial_state, DeviceLine, HostLine, SystemState};
    use std::collections::BTreeSet;

    fn faithful() -> RuleCatalog {
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

    fn dirty_evict_initial() -> SystemState {
        mk_initial_state(
            DeviceLine::new(1, DeviceState::EM),
            DeviceLine::new(0, DeviceState::I),
            HostLine::new(0, HostState::EM),
            vec![Instruction::Evict],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn catalog_shape() {
        let c = faithful();
        assert_eq!(c.rules.len(), 134);
        let names: BTreeSet<&str> = c.rules.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names.len(), c.rules.len());
        // relaxation changes guards only, never the rule inventory
        let relaxed = build_catalog(RelaxConfig {
            snoop_pushes_go: false,
            go_cannot_tailgate: false,
            one_snoop_per_addr: false,
        });
        let relaxed_names: BTreeSet<&str> = relaxed.rules.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, relaxed_names);
        for (a, b) in c.rules.iter().zip(&relaxed.rules) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.name, b.name);
        }
    }

    #[test]
    fn named_rules_present() {
        let c = faithful();
        for name in [
            "InvalidLoad1",
            "InvalidLoad2",
            "ModifiedStore1",
            "SharedSnpInv1",
            "HostModifiedDirtyEvict1",
            "ISADSnpInv2",
            "SharedEvict1",
            "Shared_CleanEvict_NotLastDrop1",
            "SIA_GO_WritePullDrop1",
            "ModifiedEvict1",
            "MIA_GO_WritePull1",
            "IDData1",
            "InvalidStore1",
            "InvalidRdShared2",
            "SharedRdOwn1",
            "ISADGO+Data2",
            "MARspIHitI1",
            "IMADGO+Data1",
        ] {
            assert!(c.by_name(name).is_some(), "missing rule {name}");
        }
    }

    #[test]
    fn guard_examples() {
        let c = faithful();
        let s = clean_evict_initial();
        assert!(!c.by_name("InvalidLoad1").unwrap().enabled(&s));
        assert!(c.by_name("SharedEvict1").unwrap().enabled(&s));
    }

    #[test]
    fn snoop_pushes_go_guard_is_relaxable() {
        let mut s = clean_evict_initial();
        s.htdreq1.push(HtdReq { kind: HtdReqKind::SnpInv, utid: 0 });
        s.htdrsp1.push(HtdResp { kind: HtdRespKind::Go, target: DeviceState::SH, utid: 1 });
        let faithful = faithful();
        assert!(!faithful.by_name("SharedSnpInv1").unwrap().enabled(&s));
        let mut cfg = RelaxConfig::faithful();
        cfg.snoop_pushes_go = false;
        let relaxed = build_catalog(cfg);
        assert!(relaxed.by_name("SharedSnpInv1").unwrap().enabled(&s));
        // the tag stays recorded even when the conjunct is dropped
        assert_eq!(
            relaxed.by_name("SharedSnpInv1").unwrap().relaxable_guards,
            vec![RelaxFlag::SnoopPushesGo]
        );
        let active: Vec<_> = faithful
            .by_name("SharedSnpInv1")
            .unwrap()
            .guards
            .iter()
            .filter(|g| g.relax == Some(RelaxFlag::SnoopPushesGo))
            .collect();
        assert_eq!(active.len(), 1);
        assert_eq!(active[0].desc, "htdrsp1 = []");
    }

    #[test]
    fn shared_evict_apply_matches_scenario_row() {
        let c = faithful();
        let s = clean_evict_initial();
        let next = crate::rules::apply_rule(c.by_name("SharedEvict1").unwrap(), &s).unwrap();
        assert_eq!(next.devcache1, DeviceLine::new(0, DeviceState::SIA));
        assert_eq!(next.dthreq1, vec![DthReq { kind: DthReqKind::CleanEvict, utid: 1 }]);
        assert_eq!(next.counter, 1);
        assert_eq!(next.dprog1, s.dprog1);
        assert_eq!(next.devcache2, s.devcache2);
        assert_eq!(next.hcache, s.hcache);
    }

    #[test]
    fn dirty_evict_rows_apply() {
        let c = faithful();
        let s0 = dirty_evict_initial();
        let s1 = crate::rules::apply_rule(c.by_name("ModifiedEvict1").unwrap(), &s0).unwrap();
        assert_eq!(s1.devcache1, DeviceLine::new(1, DeviceState::MIA));
        assert_eq!(s1.dthreq1, vec![DthReq { kind: DthReqKind::DirtyEvict, utid: 1 }]);
        assert_eq!(s1.counter, 1);

        let s2 = crate::rules::apply_rule(c.by_name("HostModifiedDirtyEvict1").unwrap(), &s1).unwrap();
        assert_eq!(s2.hcache.state, HostState::ID);
        assert_eq!(s2.dthreq1, vec![]);
        assert_eq!(
            s2.htdrsp1,
            vec![HtdResp { kind: HtdRespKind::GoWritePull, target: DeviceState::I, utid: 1 }]
        );

        let s3 = crate::rules::apply_rule(c.by_name("MIA_GO_WritePull1").unwrap(), &s2).unwrap();
        assert_eq!(s3.devcache1, DeviceLine::new(1, DeviceState::I));
        assert_eq!(s3.dprog1, vec![]);
        assert_eq!(s3.dthdata1, vec![DataMsg { utid: 1, val: 1 }]);
        assert_eq!(s3.htdrsp1, vec![]);

        let s4 = crate::rules::apply_rule(c.by_name("IDData1").unwrap(), &s3).unwrap();
        assert_eq!(s4.hcache, HostLine::new(1, HostState::I));
        assert_eq!(s4.dthdata1, vec![]);
    }

    #[test]
    fn apply_requires_guard() {
        let c = faithful();
        let s = clean_evict_initial();
        let err = crate::rules::apply_rule(c.by_name("InvalidLoad1").unwrap(), &s).unwrap_err();
        assert!(matches!(err, crate::rules::RuleError::NotEnabled(_)));
    }

    #[test]
    fn enabled_rules_examples() {
        let c = faithful();
        let s = clean_evict_initial();
        let enabled: Vec<&str> = c.enabled_rules(&s).iter().map(|&id| c.rule(id).name.as_str()).collect();
        assert!(enabled.contains(&"SharedEvict1"));
        assert!(enabled.contains(&"SharedEvictNoData1"));
        for id in c.enabled_rules(&s) {
            assert!(!c.rule(id).family.is_host_side(), "no requests pending yet");
        }
        // ascending id order
        let ids = c.enabled_rules(&s);
        assert!(ids.windows(2).all(|w| w[0] < w[1]));

        let quiescent = mk_initial_state(
            DeviceLine::new(0, DeviceState::I),
            DeviceLine::new(0, DeviceState::I),
            HostLine::new(0, HostState::I),
            vec![],
            vec![],
        )
        .unwrap();
        assert!(c.enabled_rules(&quiescent).is_empty());

        let row2 = crate::rules::apply_rule(
            c.by_name("ModifiedEvict1").unwrap(),
            &dirty_evict_initial(),
        )
        .unwrap();
        let names: Vec<&str> = c.enabled_rules(&row2).iter().map(|&id| c.rule(id).name.as_str()).collect();
        assert!(names.contains(&"HostModifiedDirtyEvict1"));
    }

    #[test]
    fn counter_never_decreases_and_evict_utid_is_post_increment() {
        let c = faithful();
        let s = clean_evict_initial();
        for id in c.enabled_rules(&s) {
            let next = c.rule(id).apply_unchecked(&s);
            assert!(next.counter >= s.counter);
        }
        let next = crate::rules::apply_rule(c.by_name("SharedEvictNoData1").unwrap(), &s).unwrap();
        assert_eq!(next.dthreq1[0].utid, 1);
        assert_eq!(next.counter, 1);
    }
}
