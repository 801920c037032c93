//! The whole-system state: two device caches, a host cache, twelve message
//! channels, two single-entry buffers, two instruction programs and a
//! transaction-identifier counter.
//!
//! All state values are immutable snapshots; rule application produces a new
//! [`SystemState`]. Structural equality over every field (including the
//! counter) is the identity used for visited-set deduplication.

use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

/// Cache-line state on a device. `EM` collapses Exclusive and Modified:
/// transitions between the two do not change ownership, which is all the
/// coherence properties care about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum DeviceState {
    I,
    SH,
    EM,
    IMAD,
    IMA,
    IMD,
    SMAD,
    SMD,
    SMA,
    ISD,
    ISAD,
    ISA,
    MIA,
    SIA,
    IIA,
    SIAC,
    ISDI,
}

impl DeviceState {
    pub const ALL: [DeviceState; 17] = [
        DeviceState::I,
        DeviceState::SH,
        DeviceState::EM,
        DeviceState::IMAD,
        DeviceState::IMA,
        DeviceState::IMD,
        DeviceState::SMAD,
        DeviceState::SMD,
        DeviceState::SMA,
        DeviceState::ISD,
        DeviceState::ISAD,
        DeviceState::ISA,
        DeviceState::MIA,
        DeviceState::SIA,
        DeviceState::IIA,
        DeviceState::SIAC,
        DeviceState::ISDI,
    ];

    pub fn is_stable(self) -> bool {
        matches!(self, DeviceState::I | DeviceState::SH | DeviceState::EM)
    }

    pub fn parse(s: &str) -> Option<DeviceState> {
        DeviceState::ALL.iter().copied().find(|d| d.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            DeviceState::I => "I",
            DeviceState::SH => "SH",
            DeviceState::EM => "EM",
            DeviceState::IMAD => "IMAD",
            DeviceState::IMA => "IMA",
            DeviceState::IMD => "IMD",
            DeviceState::SMAD => "SMAD",
            DeviceState::SMD => "SMD",
            DeviceState::SMA => "SMA",
            DeviceState::ISD => "ISD",
            DeviceState::ISAD => "ISAD",
            DeviceState::ISA => "ISA",
            DeviceState::MIA => "MIA",
            DeviceState::SIA => "SIA",
            DeviceState::IIA => "IIA",
            DeviceState::SIAC => "SIAC",
            DeviceState::ISDI => "ISDI",
        }
    }
}

impl fmt::Display for DeviceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cache-line state on the host. `IB`, `SB` and `MB` are part of the state
/// universe but no rule in the catalog produces them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
pub enum HostState {
    I,
    SH,
    EM,
    MAD,
    MA,
    MD,
    SAD,
    SD,
    SA,
    ID,
    IB,
    SB,
    MB,
}

impl HostState {
    pub const ALL: [HostState; 13] = [
        HostState::I,
        HostState::SH,
        HostState::EM,
        HostState::MAD,
        HostState::MA,
        HostState::MD,
        HostState::SAD,
        HostState::SD,
        HostState::SA,
        HostState::ID,
        HostState::IB,
        HostState::SB,
        HostState::MB,
    ];

    pub fn is_stable(self) -> bool {
        matches!(self, HostState::I | HostState::SH | HostState::EM)
    }

    pub fn parse(s: &str) -> Option<HostState> {
        HostState::ALL.iter().copied().find(|h| h.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            HostState::I => "I",
            HostState::SH => "SH",
            HostState::EM => "EM",
            HostState::MAD => "MAD",
            HostState::MA => "MA",
            HostState::MD => "MD",
            HostState::SAD => "SAD",
            HostState::SD => "SD",
            HostState::SA => "SA",
            HostState::ID => "ID",
            HostState::IB => "IB",
            HostState::SB => "SB",
            HostState::MB => "MB",
        }
    }
}

impl fmt::Display for HostState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A cached data value. The protocol itself never interprets values; they are
/// drawn from a small finite domain so exploration stays finite.
pub type Val = i32;

/// The value a `Store` instruction writes when it hits.
pub const STORE_VALUE: Val = 42;

/// The default finite value domain used by state generators.
pub const DEFAULT_VALUE_DOMAIN: [Val; 4] = [-1, 0, 1, 42];

/// Unique transaction identifier. Freshness comes from the global counter.
pub type Utid = u32;

/// One of the two devices. Rules are defined parametrically over this index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceId {
    D1,
    D2,
}

impl DeviceId {
    pub const BOTH: [DeviceId; 2] = [DeviceId::D1, DeviceId::D2];

    pub fn other(self) -> DeviceId {
        match self {
            DeviceId::D1 => DeviceId::D2,
            DeviceId::D2 => DeviceId::D1,
        }
    }

    /// The numeric suffix used in rule names ("1" / "2").
    pub fn suffix(self) -> &'static str {
        match self {
            DeviceId::D1 => "1",
            DeviceId::D2 => "2",
        }
    }
}

/// A device cache line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceLine {
    pub val: Val,
    pub state: DeviceState,
}

impl DeviceLine {
    pub fn new(val: Val, state: DeviceState) -> Self {
        DeviceLine { val, state }
    }
}

/// The host cache line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HostLine {
    pub val: Val,
    pub state: HostState,
}

impl HostLine {
    pub fn new(val: Val, state: HostState) -> Self {
        HostLine { val, state }
    }
}

/// Device-to-host request kinds. Only the five request types that affect
/// ownership of a line are modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DthReqKind {
    RdShared,
    RdOwn,
    CleanEvict,
    DirtyEvict,
    CleanEvictNoData,
}

impl fmt::Display for DthReqKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DthReq {
    pub kind: DthReqKind,
    pub utid: Utid,
}

/// Device-to-host response kinds. `RspIHitI` is the honest answer of a device
/// that is snooped while holding nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DthRespKind {
    RspIHitSE,
    RspIFwdM,
    RspSFwdM,
    RspIHitI,
}

impl fmt::Display for DthRespKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DthResp {
    pub kind: DthRespKind,
    pub utid: Utid,
}

/// Host-to-device snoop kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HtdReqKind {
    SnpData,
    SnpInv,
}

impl fmt::Display for HtdReqKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HtdReq {
    pub kind: HtdReqKind,
    pub utid: Utid,
}

/// Host-to-device response kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HtdRespKind {
    #[serde(rename = "GO")]
    Go,
    #[serde(rename = "GO_WritePull")]
    GoWritePull,
    #[serde(rename = "GO_WritePullDrop")]
    GoWritePullDrop,
}

impl fmt::Display for HtdRespKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HtdRespKind::Go => f.write_str("GO"),
            HtdRespKind::GoWritePull => f.write_str("GO_WritePull"),
            HtdRespKind::GoWritePullDrop => f.write_str("GO_WritePullDrop"),
        }
    }
}

/// A GO-class response. `target` is the stable state the device line should
/// enter once the response is consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HtdResp {
    pub kind: HtdRespKind,
    #[serde(rename = "target_state")]
    pub target: DeviceState,
    pub utid: Utid,
}

/// A data message, tied to its transaction by the utid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DataMsg {
    pub utid: Utid,
    pub val: Val,
}

/// The single H2D message a device most recently consumed, or nothing.
/// Snoop-consuming rules store the snoop here; some completion rules clear it.
/// No guard reads the buffer; it is kept for trace display and state identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BufferMsg {
    Resp(HtdResp),
    Req(HtdReq),
}

pub type BufferEntry = Option<BufferMsg>;

/// Program instructions driving a device. They only trigger coherence
/// transactions; loads and stores do not move data by themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instruction {
    Load,
    Store,
    Evict,
}

impl Instruction {
    pub fn parse(s: &str) -> Option<Instruction> {
        match s {
            "Load" => Some(Instruction::Load),
            "Store" => Some(Instruction::Store),
            "Evict" => Some(Instruction::Evict),
            _ => None,
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// The full 20-field system snapshot. All twelve channels are FIFOs: messages
/// are consumed at the head and appended at the tail only. Singleton channel
/// length is a checked property of reachable states, not a type constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemState {
    pub dprog1: Vec<Instruction>,
    pub dprog2: Vec<Instruction>,
    pub devcache1: DeviceLine,
    pub devcache2: DeviceLine,
    pub dthreq1: Vec<DthReq>,
    pub dthreq2: Vec<DthReq>,
    pub dthrsp1: Vec<DthResp>,
    pub dthrsp2: Vec<DthResp>,
    pub dthdata1: Vec<DataMsg>,
    pub dthdata2: Vec<DataMsg>,
    pub htdreq1: Vec<HtdReq>,
    pub htdreq2: Vec<HtdReq>,
    pub htdrsp1: Vec<HtdResp>,
    pub htdrsp2: Vec<HtdResp>,
    pub htddata1: Vec<DataMsg>,
    pub htddata2: Vec<DataMsg>,
    pub dbuffer1: BufferEntry,
    pub dbuffer2: BufferEntry,
    pub hcache: HostLine,
    pub counter: Utid,
}

/// Error from building an initial state.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("initial {which} state must be stable, got {got}")]
    TransientInitial { which: &'static str, got: String },
}

/// Builds an initial state: all channels empty, both buffers empty,
/// counter zero. All three cache states must be stable.
pub fn mk_initial_state(
    dev1: DeviceLine,
    dev2: DeviceLine,
    host: HostLine,
    prog1: Vec<Instruction>,
    prog2: Vec<Instruction>,
) -> Result<SystemState, StateError> {
    if !dev1.state.is_stable() {
        return Err(StateError::TransientInitial {
            which: "devcache1",
            got: dev1.state.to_string(),
        });
    }
    if !dev2.state.is_stable() {
        return Err(StateError::TransientInitial {
            which: "devcache2",
            got: dev2.state.to_string(),
        });
    }
    if !host.state.is_stable() {
        return Err(StateError::TransientInitial {
            which: "hcache",
            got: host.state.to_string(),
        });
    }
    Ok(SystemState {
        dprog1: prog1,
        dprog2: prog2,
        devcache1: dev1,
        devcache2: dev2,
        dthreq1: vec![],
        dthreq2: vec![],
        dthrsp1: vec![],
        dthrsp2: vec![],
        dthdata1: vec![],
        dthdata2: vec![],
        htdreq1: vec![],
        htdreq2: vec![],
        htdrsp1: vec![],
        htdrsp2: vec![],
        htddata1: vec![],
        htddata2: vec![],
        dbuffer1: None,
        dbuffer2: None,
        hcache: host,
        counter: 0,
    })
}

impl SystemState {
    pub fn dprog(&self, d: DeviceId) -> &Vec<Instruction> {
        match d {
            DeviceId::D1 => &self.dprog1,
            DeviceId::D2 => &self.dprog2,
        }
    }

    pub fn dprog_mut(&mut self, d: DeviceId) -> &mut Vec<Instruction> {
        match d {
            DeviceId::D1 => &mut self.dprog1,
            DeviceId::D2 => &mut self.dprog2,
        }
    }

    pub fn devcache(&self, d: DeviceId) -> &DeviceLine {
        match d {
            DeviceId::D1 => &self.devcache1,
            DeviceId::D2 => &self.devcache2,
        }
    }

    pub fn devcache_mut(&mut self, d: DeviceId) -> &mut DeviceLine {
        match d {
            DeviceId::D1 => &mut self.devcache1,
            DeviceId::D2 => &mut self.devcache2,
        }
    }

    pub fn dthreq(&self, d: DeviceId) -> &Vec<DthReq> {
        match d {
            DeviceId::D1 => &self.dthreq1,
            DeviceId::D2 => &self.dthreq2,
        }
    }

    pub fn dthreq_mut(&mut self, d: DeviceId) -> &mut Vec<DthReq> {
        match d {
            DeviceId::D1 => &mut self.dthreq1,
            DeviceId::D2 => &mut self.dthreq2,
        }
    }

    pub fn dthrsp(&self, d: DeviceId) -> &Vec<DthResp> {
        match d {
            DeviceId::D1 => &self.dthrsp1,
            DeviceId::D2 => &self.dthrsp2,
        }
    }

    pub fn dthrsp_mut(&mut self, d: DeviceId) -> &mut Vec<DthResp> {
        match d {
            DeviceId::D1 => &mut self.dthrsp1,
            DeviceId::D2 => &mut self.dthrsp2,
        }
    }

    pub fn dthdata(&self, d: DeviceId) -> &Vec<DataMsg> {
        match d {
            DeviceId::D1 => &self.dthdata1,
            DeviceId::D2 => &self.dthdata2,
        }
    }

    pub fn dthdata_mut(&mut self, d: DeviceId) -> &mut Vec<DataMsg> {
        match d {
            DeviceId::D1 => &mut self.dthdata1,
            DeviceId::D2 => &mut self.dthdata2,
        }
    }

    pub fn htdreq(&self, d: DeviceId) -> &Vec<HtdReq> {
        match d {
            DeviceId::D1 => &self.htdreq1,
            DeviceId::D2 => &self.htdreq2,
        }
    }

    pub fn htdreq_mut(&mut self, d: DeviceId) -> &mut Vec<HtdReq> {
        match d {
            DeviceId::D1 => &mut self.htdreq1,
            DeviceId::D2 => &mut self.htdreq2,
        }
    }

    pub fn htdrsp(&self, d: DeviceId) -> &Vec<HtdResp> {
        match d {
            DeviceId::D1 => &self.htdrsp1,
            DeviceId::D2 => &self.htdrsp2,
        }
    }

    pub fn htdrsp_mut(&mut self, d: DeviceId) -> &mut Vec<HtdResp> {
        match d {
            DeviceId::D1 => &mut self.htdrsp1,
            DeviceId::D2 => &mut self.htdrsp2,
        }
    }

    pub fn htddata(&self, d: DeviceId) -> &Vec<DataMsg> {
        match d {
            DeviceId::D1 => &self.htddata1,
            DeviceId::D2 => &self.htddata2,
        }
    }

    pub fn htddata_mut(&mut self, d: DeviceId) -> &mut Vec<DataMsg> {
        match d {
            DeviceId::D1 => &mut self.htddata1,
            DeviceId::D2 => &mut self.htddata2,
        }
    }

    pub fn dbuffer(&self, d: DeviceId) -> &BufferEntry {
        match d {
            DeviceId::D1 => &self.dbuffer1,
            DeviceId::D2 => &self.dbuffer2,
        }
    }

    pub fn dbuffer_mut(&mut self, d: DeviceId) -> &mut BufferEntry {
        match d {
            DeviceId::D1 => &mut self.dbuffer1,
            DeviceId::D2 => &mut self.dbuffer2,
        }
    }

    /// Swaps every device-1 field with its device-2 counterpart.
    pub fn mirror(&self) -> SystemState {
        SystemState {
            dprog1: self.dprog2.clone(),
            dprog2: self.dprog1.clone(),
            devcache1: self.devcache2,
            devcache2: self.devcache1,
            dthreq1: self.dthreq2.clone(),
            dthreq2: self.dthreq1.clone(),
            dthrsp1: self.dthrsp2.clone(),
            dthrsp2: self.dthrsp1.clone(),
            dthdata1: self.dthdata2.clone(),
            dthdata2: self.dthdata1.clone(),
            htdreq1: self.htdreq2.clone(),
            htdreq2: self.htdreq1.clone(),
            htdrsp1: self.htdrsp2.clone(),
            htdrsp2: self.htdrsp1.clone(),
            htddata1: self.htddata2.clone(),
            htddata2: self.htddata1.clone(),
            dbuffer1: self.dbuffer2,
            dbuffer2: self.dbuffer1,
            hcache: self.hcache,
            counter: self.counter,
        }
    }
}

/// 64-bit hash over every field. Equal states yield equal keys; used to
/// bucket visited-set lookups and for quick state identity in reports.
/// Deduplication itself always confirms by structural equality.
pub fn state_fingerprint(state: &SystemState) -> u64 {
    let mut hasher = DefaultHasher::new();
    state.hash(&mut hasher);
    hasher.finish()
}

struct UtidRenamer {
    map: std::collections::HashMap<Utid, Utid>,
}

impl UtidRenamer {
    fn new() -> Self {
        UtidRenamer { map: std::collections::HashMap::new() }
    }

    fn rename(&mut self, u: Utid) -> Utid {
        let next = self.map.len() as Utid;
        *self.map.entry(u).or_insert(next)
    }
}

impl SystemState {
    /// The state with every in-flight transaction identifier renamed to its
    /// first-appearance index (scanning the channels and buffers in field
    /// order) and the counter set to the number of identifiers in flight.
    ///
    /// Rules compare identifiers only for equality and always mint a fresh
    /// one from the counter, so this renaming commutes with every transition
    /// and the quotient is a bisimulation of the concrete system. Visited-set
    /// deduplication uses this form: without it, an instruction whose line is
    /// repeatedly stolen before its local hit re-issues with an ever-fresh
    /// identifier and the concrete state space is infinite.
    pub fn canonical_form(&self) -> SystemState {
        let mut s = self.clone();
        let mut r = UtidRenamer::new();
        for d in DeviceId::BOTH {
            for m in s.dthreq_mut(d) {
                m.utid = r.rename(m.utid);
            }
        }
        for d in DeviceId::BOTH {
            for m in s.dthrsp_mut(d) {
                m.utid = r.rename(m.utid);
            }
        }
        for d in DeviceId::BOTH {
            for m in s.dthdata_mut(d) {
                m.utid = r.rename(m.utid);
            }
        }
        for d in DeviceId::BOTH {
            for m in s.htdreq_mut(d) {
                m.utid = r.rename(m.utid);
            }
        }
        for d in DeviceId::BOTH {
            for m in s.htdrsp_mut(d) {
                m.utid = r.rename(m.utid);
            }
        }
        for d in DeviceId::BOTH {
            for m in s.htddata_mut(d) {
                m.utid = r.rename(m.utid);
            }
        }
        for d in DeviceId::BOTH {
            match s.dbuffer_mut(d) {
                Some(BufferMsg::Req(m)) => m.utid = r.rename(m.utid),
                Some(BufferMsg::Resp(m)) => m.utid = r.rename(m.utid),
                None => {}
            }
        }
        s.counter = r.map.len() as Utid;
        s
    }
}

/// Identifies one of the twenty state fields; rules declare which locations
/// their action writes so the frame property is checkable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Loc {
    DProg(DeviceId),
    DevCache(DeviceId),
    DthReq(DeviceId),
    DthRsp(DeviceId),
    DthData(DeviceId),
    HtdReq(DeviceId),
    HtdRsp(DeviceId),
    HtdData(DeviceId),
    DBuffer(DeviceId),
    HCache,
    Counter,
}

impl Loc {
    pub const ALL: [Loc; 20] = [
        Loc::DProg(DeviceId::D1),
        Loc::DProg(DeviceId::D2),
        Loc::DevCache(DeviceId::D1),
        Loc::DevCache(DeviceId::D2),
        Loc::DthReq(DeviceId::D1),
        Loc::DthReq(DeviceId::D2),
        Loc::DthRsp(DeviceId::D1),
        Loc::DthRsp(DeviceId::D2),
        Loc::DthData(DeviceId::D1),
        Loc::DthData(DeviceId::D2),
        Loc::HtdReq(DeviceId::D1),
        Loc::HtdReq(DeviceId::D2),
        Loc::HtdRsp(DeviceId::D1),
        Loc::HtdRsp(DeviceId::D2),
        Loc::HtdData(DeviceId::D1),
        Loc::HtdData(DeviceId::D2),
        Loc::DBuffer(DeviceId::D1),
        Loc::DBuffer(DeviceId::D2),
        Loc::HCache,
        Loc::Counter,
    ];

    pub fn name(self) -> String {
        match self {
            Loc::DProg(d) => format!("dprog{}", d.suffix()),
            Loc::DevCache(d) => format!("devcache{}", d.suffix()),
            Loc::DthReq(d) => format!("dthreq{}", d.suffix()),
            Loc::DthRsp(d) => format!("dthrsp{}", d.suffix()),
            Loc::DthData(d) => format!("dthdata{}", d.suffix()),
            Loc::HtdReq(d) => format!("htdreq{}", d.suffix()),
            Loc::HtdRsp(d) => format!("htdrsp{}", d.suffix()),
            Loc::HtdData(d) => format!("htddata{}", d.suffix()),
            Loc::DBuffer(d) => format!("dbuffer{}", d.suffix()),
            Loc::HCache => "hcache".to_string(),
            Loc::Counter => "counter".to_string(),
        }
    }
}

/// The locations at which two states differ.
pub fn changed_locs(a: &SystemState, b: &SystemState) -> Vec<Loc> {
    let mut out = Vec::new();
    for loc in Loc::ALL {
        let differs = match loc {
            Loc::DProg(d) => a.dprog(d) != b.dprog(d),
            Loc::DevCache(d) => a.devcache(d) != b.devcache(d),
            Loc::DthReq(d) => a.dthreq(d) != b.dthreq(d),
            Loc::DthRsp(d) => a.dthrsp(d) != b.dthrsp(d),
            Loc::DthData(d) => a.dthdata(d) != b.dthdata(d),
            Loc::HtdReq(d) => a.htdreq(d) != b.htdreq(d),
            Loc::HtdRsp(d) => a.htdrsp(d) != b.htdrsp(d),
            Loc::HtdData(d) => a.htddata(d) != b.htddata(d),
            Loc::DBuffer(d) => a.dbuffer(d) != b.dbuffer(d),
            Loc::HCache => a.hcache != b.hcache,
            Loc::Counter => a.counter != b.counter,
        };
        if differs {
            out.push(loc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_state() -> SystemState {
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
    fn stable_states() {
        assert!(DeviceState::EM.is_stable());
        assert!(!DeviceState::ISAD.is_stable());
        assert!(!DeviceState::IIA.is_stable());
        assert!(HostState::SH.is_stable());
        assert!(!HostState::ID.is_stable());
    }

    #[test]
    fn initial_state_shape() {
        let s = mk_initial_state(
            DeviceLine::new(0, DeviceState::SH),
            DeviceLine::new(0, DeviceState::SH),
            HostLine::new(0, HostState::SH),
            vec![Instruction::Evict, Instruction::Evict],
            vec![],
        )
        .unwrap();
        assert_eq!(s.counter, 0);
        assert!(s.dthreq1.is_empty() && s.htdrsp2.is_empty());
        assert_eq!(s.dbuffer1, None);
        assert_eq!(s.dprog1.len(), 2);
    }

    #[test]
    fn initial_state_rejects_transient() {
        let err = mk_initial_state(
            DeviceLine::new(0, DeviceState::ISAD),
            DeviceLine::new(0, DeviceState::I),
            HostLine::new(0, HostState::I),
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, StateError::TransientInitial { which: "devcache1", .. }));
    }

    #[test]
    fn fingerprint_is_deterministic_and_field_sensitive() {
        let s = empty_state();
        let copy = s.clone();
        assert_eq!(state_fingerprint(&s), state_fingerprint(&copy));
        let mut bumped = s.clone();
        bumped.counter += 1;
        assert_ne!(state_fingerprint(&s), state_fingerprint(&bumped));
    }

    #[test]
    fn json_field_names_match_wire_schema() {
        let mut s = empty_state();
        s.devcache1 = DeviceLine::new(-1, DeviceState::ISAD);
        s.htdrsp2.push(HtdResp {
            kind: HtdRespKind::Go,
            target: DeviceState::SH,
            utid: 1,
        });
        s.dbuffer2 = Some(BufferMsg::Req(HtdReq {
            kind: HtdReqKind::SnpInv,
            utid: 0,
        }));
        let json: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(json["devcache1"], serde_json::json!({"val": -1, "state": "ISAD"}));
        assert_eq!(
            json["htdrsp2"],
            serde_json::json!([{"kind": "GO", "target_state": "SH", "utid": 1}])
        );
        assert_eq!(json["dbuffer2"], serde_json::json!({"kind": "SnpInv", "utid": 0}));
        assert_eq!(json["dbuffer1"], serde_json::Value::Null);
        let back: SystemState = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn mirror_swaps_device_fields() {
        let mut s = empty_state();
        s.dprog1 = vec![Instruction::Store];
        s.devcache2 = DeviceLine::new(1, DeviceState::SH);
        let m = s.mirror();
        assert_eq!(m.dprog2, vec![Instruction::Store]);
        assert_eq!(m.devcache1, DeviceLine::new(1, DeviceState::SH));
        assert_eq!(m.mirror(), s);
    }

    #[test]
    fn changed_locs_reports_diffs() {
        let a = empty_state();
        let mut b = a.clone();
        b.counter = 3;
        b.hcache.val = 7;
        assert_eq!(changed_locs(&a, &b), vec![Loc::HCache, Loc::Counter]);
    }
}
