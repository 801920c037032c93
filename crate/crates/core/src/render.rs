//! Text renderings: scenario tables, message-sequence charts, the catalog
//! reference document and the consecution-matrix grid.

use crate::engine::Trace;
use crate::invariants::MatrixReport;
use crate::rules::RuleCatalog;
use crate::state::{
    BufferMsg, DataMsg, DeviceId, DeviceLine, DthReq, DthResp, HostLine, HtdReq, HtdResp,
    Instruction, Loc, SystemState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Table,
    Msc,
    Markdown,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<OutputFormat> {
        match s {
            "json" => Some(OutputFormat::Json),
            "table" => Some(OutputFormat::Table),
            "msc" => Some(OutputFormat::Msc),
            "markdown" => Some(OutputFormat::Markdown),
            _ => None,
        }
    }
}

pub fn fmt_device_line(l: &DeviceLine) -> String {
    format!("({}, {})", l.val, l.state)
}

pub fn fmt_host_line(l: &HostLine) -> String {
    format!("({}, {})", l.val, l.state)
}

pub fn fmt_dthreq(m: &DthReq) -> String {
    format!("({}, {})", m.kind, m.utid)
}

pub fn fmt_dthrsp(m: &DthResp) -> String {
    format!("({}, {})", m.kind, m.utid)
}

pub fn fmt_htdreq(m: &HtdReq) -> String {
    format!("({}, {})", m.kind, m.utid)
}

pub fn fmt_htdrsp(m: &HtdResp) -> String {
    format!("({}, {}, {})", m.kind, m.target, m.utid)
}

pub fn fmt_data(m: &DataMsg) -> String {
    format!("({}, {})", m.utid, m.val)
}

fn fmt_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    let inner: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", inner.join(", "))
}

pub fn fmt_prog(prog: &[Instruction]) -> String {
    fmt_list(prog, |i| i.to_string())
}

pub fn fmt_buffer(b: &Option<BufferMsg>) -> String {
    match b {
        None => "empty".to_string(),
        Some(BufferMsg::Req(m)) => fmt_htdreq(m),
        Some(BufferMsg::Resp(m)) => fmt_htdrsp(m),
    }
}

/// Canonical rendering of one state field by location.
pub fn loc_value(state: &SystemState, loc: Loc) -> String {
    match loc {
        Loc::DProg(d) => fmt_prog(state.dprog(d)),
        Loc::DevCache(d) => fmt_device_line(state.devcache(d)),
        Loc::DthReq(d) => fmt_list(state.dthreq(d), fmt_dthreq),
        Loc::DthRsp(d) => fmt_list(state.dthrsp(d), fmt_dthrsp),
        Loc::DthData(d) => fmt_list(state.dthdata(d), fmt_data),
        Loc::HtdReq(d) => fmt_list(state.htdreq(d), fmt_htdreq),
        Loc::HtdRsp(d) => fmt_list(state.htdrsp(d), fmt_htdrsp),
        Loc::HtdData(d) => fmt_list(state.htddata(d), fmt_data),
        Loc::DBuffer(d) => fmt_buffer(state.dbuffer(d)),
        Loc::HCache => fmt_host_line(&state.hcache),
        Loc::Counter => state.counter.to_string(),
    }
}

/// Looks up a field by its external name. Supports the twenty state fields,
/// `progN` as an alias for `dprogN`, and the `.state` / `.val` sub-fields of
/// the three cache lines.
pub fn field_value(state: &SystemState, field: &str) -> Option<String> {
    let by_loc = |loc: Loc| Some(loc_value(state, loc));
    match field {
        "dprog1" | "prog1" => by_loc(Loc::DProg(DeviceId::D1)),
        "dprog2" | "prog2" => by_loc(Loc::DProg(DeviceId::D2)),
        "devcache1" => by_loc(Loc::DevCache(DeviceId::D1)),
        "devcache2" => by_loc(Loc::DevCache(DeviceId::D2)),
        "dthreq1" => by_loc(Loc::DthReq(DeviceId::D1)),
        "dthreq2" => by_loc(Loc::DthReq(DeviceId::D2)),
        "dthrsp1" => by_loc(Loc::DthRsp(DeviceId::D1)),
        "dthrsp2" => by_loc(Loc::DthRsp(DeviceId::D2)),
        "dthdata1" => by_loc(Loc::DthData(DeviceId::D1)),
        "dthdata2" => by_loc(Loc::DthData(DeviceId::D2)),
        "htdreq1" => by_loc(Loc::HtdReq(DeviceId::D1)),
        "htdreq2" => by_loc(Loc::HtdReq(DeviceId::D2)),
        "htdrsp1" => by_loc(Loc::HtdRsp(DeviceId::D1)),
        "htdrsp2" => by_loc(Loc::HtdRsp(DeviceId::D2)),
        "htddata1" => by_loc(Loc::HtdData(DeviceId::D1)),
        "htddata2" => by_loc(Loc::HtdData(DeviceId::D2)),
        "dbuffer1" => by_loc(Loc::DBuffer(DeviceId::D1)),
        "dbuffer2" => by_loc(Loc::DBuffer(DeviceId::D2)),
        "hcache" => by_loc(Loc::HCache),
        "counter" => by_loc(Loc::Counter),
        "devcache1.state" => Some(state.devcache1.state.to_string()),
        "devcache1.val" => Some(state.devcache1.val.to_string()),
        "devcache2.state" => Some(state.devcache2.state.to_string()),
        "devcache2.val" => Some(state.devcache2.val.to_string()),
        "hcache.state" => Some(state.hcache.state.to_string()),
        "hcache.val" => Some(state.hcache.val.to_string()),
        _ => None,
    }
}

pub fn is_known_field(field: &str) -> bool {
    // probe against an arbitrary state; field resolution is name-only
    let probe = crate::state::mk_initial_state(
        DeviceLine::new(0, crate::state::DeviceState::I),
        DeviceLine::new(0, crate::state::DeviceState::I),
        HostLine::new(0, crate::state::HostState::I),
        vec![],
        vec![],
    )
    .unwrap();
    field_value(&probe, field).is_some()
}

/// Column order for scenario tables: device 1 block, host, device 2 block,
/// then the counter.
const DISPLAY_ORDER: [Loc; 20] = [
    Loc::DProg(DeviceId::D1),
    Loc::DevCache(DeviceId::D1),
    Loc::DthReq(DeviceId::D1),
    Loc::DthRsp(DeviceId::D1),
    Loc::DthData(DeviceId::D1),
    Loc::HtdReq(DeviceId::D1),
    Loc::HtdRsp(DeviceId::D1),
    Loc::HtdData(DeviceId::D1),
    Loc::DBuffer(DeviceId::D1),
    Loc::HCache,
    Loc::DProg(DeviceId::D2),
    Loc::DevCache(DeviceId::D2),
    Loc::DthReq(DeviceId::D2),
    Loc::DthRsp(DeviceId::D2),
    Loc::DthData(DeviceId::D2),
    Loc::HtdReq(DeviceId::D2),
    Loc::HtdRsp(DeviceId::D2),
    Loc::HtdData(DeviceId::D2),
    Loc::DBuffer(DeviceId::D2),
    Loc::Counter,
];

fn table_columns(trace: &Trace, all_fields: bool) -> Vec<Loc> {
    if all_fields {
        return DISPLAY_ORDER.to_vec();
    }
    let mut changed: Vec<Loc> = Vec::new();
    let states: Vec<&SystemState> = trace.states().collect();
    for pair in states.windows(2) {
        for loc in crate::state::changed_locs(pair[0], pair[1]) {
            if !changed.contains(&loc) {
                changed.push(loc);
            }
        }
    }
    DISPLAY_ORDER
        .iter()
        .copied()
        .filter(|l| changed.contains(l))
        .collect()
}

fn table_cells(trace: &Trace, cols: &[Loc]) -> (Vec<String>, Vec<Vec<String>>) {
    let header: Vec<String> = std::iter::once("transition rule".to_string())
        .chain(cols.iter().map(|l| l.name()))
        .collect();
    let mut rows = Vec::new();
    let mut label = "(initial state)".to_string();
    for state in trace.states() {
        let mut row = vec![label.clone()];
        row.extend(cols.iter().map(|l| loc_value(state, *l)));
        rows.push(row);
        label.clear();
    }
    for (i, step) in trace.steps.iter().enumerate() {
        rows[i + 1][0] = step.rule.clone();
    }
    (header, rows)
}

/// Scenario table: header of field names, one row per fired rule. Only
/// fields that change somewhere in the trace are shown unless `all_fields`.
pub fn render_table(trace: &Trace, all_fields: bool) -> String {
    let cols = table_columns(trace, all_fields);
    let (header, rows) = table_cells(trace, &cols);
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: &[String], widths: &[usize]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:w$}", c, w = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&fmt_row(&header, &widths));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &rows {
        out.push_str(&fmt_row(row, &widths));
        out.push('\n');
    }
    out
}

/// Same table as a markdown grid.
pub fn render_markdown(trace: &Trace, all_fields: bool) -> String {
    let cols = table_columns(trace, all_fields);
    let (header, rows) = table_cells(trace, &cols);
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}\n", " --- |".repeat(header.len())));
    for row in &rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

const LANE_WIDTH: usize = 26;

fn msc_line(left: &str, mid: &str, right: &str, note: &str) -> String {
    let mut s = format!("{:<w$}{:<w$}{:<w$}", left, mid, right, w = LANE_WIDTH);
    let trimmed = s.trim_end().len();
    s.truncate(trimmed.max(0));
    if !note.is_empty() {
        let pad = 3 * LANE_WIDTH;
        let mut line = format!("{:<pw$}", s, pw = pad);
        line.push_str(note);
        return line.trim_end().to_string();
    }
    s.trim_end().to_string()
}

fn arrow(label: &str, rightwards: bool) -> String {
    let body_len = LANE_WIDTH.saturating_sub(label.len() + 6);
    let dashes = "-".repeat(body_len / 2);
    if rightwards {
        format!("|{d}{l}{d}->|", d = dashes, l = label)
    } else {
        format!("|<-{d}{l}{d}|", d = dashes, l = label)
    }
}

/// Message-sequence chart over three lanes (device1, host, device2): one
/// line per message send or consume event, annotated with the firing rule.
pub fn render_msc(trace: &Trace) -> String {
    let mut out = String::new();
    out.push_str(&msc_line("device1", "host", "device2", ""));
    out.push('\n');
    let states: Vec<&SystemState> = trace.states().collect();
    for (i, step) in trace.steps.iter().enumerate() {
        let pre = states[i];
        let post = states[i + 1];
        let note = format!("[{}]", step.rule);
        let mut lines: Vec<String> = Vec::new();
        for d in DeviceId::BOTH {
            let dev_is_left = d == DeviceId::D1;
            // device-to-host sends (appended at tail)
            let d2h_sends: Vec<String> = {
                let mut v = Vec::new();
                if post.dthreq(d).len() > pre.dthreq(d).len() {
                    v.push(fmt_dthreq(post.dthreq(d).last().unwrap()));
                }
                if post.dthrsp(d).len() > pre.dthrsp(d).len() {
                    v.push(fmt_dthrsp(post.dthrsp(d).last().unwrap()));
                }
                if post.dthdata(d).len() > pre.dthdata(d).len() {
                    v.push(format!("Data{}", fmt_data(post.dthdata(d).last().unwrap())));
                }
                v
            };
            for label in d2h_sends {
                lines.push(if dev_is_left {
                    msc_line("", &arrow(&label, true), "", "")
                } else {
                    msc_line("", &arrow(&label, false), "", "")
                });
            }
            // host-to-device sends
            let h2d_sends: Vec<String> = {
                let mut v = Vec::new();
                if post.htdreq(d).len() > pre.htdreq(d).len() {
                    v.push(fmt_htdreq(post.htdreq(d).last().unwrap()));
                }
                if post.htdrsp(d).len() > pre.htdrsp(d).len() {
                    v.push(fmt_htdrsp(post.htdrsp(d).last().unwrap()));
                }
                if post.htddata(d).len() > pre.htddata(d).len() {
                    v.push(format!("Data{}", fmt_data(post.htddata(d).last().unwrap())));
                }
                v
            };
            for label in h2d_sends {
                lines.push(if dev_is_left {
                    msc_line("", &arrow(&label, false), "", "")
                } else {
                    msc_line("", &arrow(&label, true), "", "")
                });
            }
            // consumes (popped from head)
            let mut consumed: Vec<String> = Vec::new();
            if pre.htdreq(d).len() > post.htdreq(d).len() {
                consumed.push(format!("* takes {}", fmt_htdreq(&pre.htdreq(d)[0])));
            }
            if pre.htdrsp(d).len() > post.htdrsp(d).len() {
                consumed.push(format!("* takes {}", fmt_htdrsp(&pre.htdrsp(d)[0])));
            }
            if pre.htddata(d).len() > post.htddata(d).len() {
                consumed.push(format!("* takes Data{}", fmt_data(&pre.htddata(d)[0])));
            }
            for c in consumed {
                lines.push(if dev_is_left {
                    msc_line(&c, "", "", "")
                } else {
                    msc_line("", "", &c, "")
                });
            }
            let mut host_consumed: Vec<String> = Vec::new();
            if pre.dthreq(d).len() > post.dthreq(d).len() {
                host_consumed.push(format!("* takes {}", fmt_dthreq(&pre.dthreq(d)[0])));
            }
            if pre.dthrsp(d).len() > post.dthrsp(d).len() {
                host_consumed.push(format!("* takes {}", fmt_dthrsp(&pre.dthrsp(d)[0])));
            }
            if pre.dthdata(d).len() > post.dthdata(d).len() {
                host_consumed.push(format!("* takes Data{}", fmt_data(&pre.dthdata(d)[0])));
            }
            for c in host_consumed {
                lines.push(msc_line("", &c, "", ""));
            }
        }
        // cache transitions, shown in the acting lanes
        for d in DeviceId::BOTH {
            if pre.devcache(d).state != post.devcache(d).state {
                let t = format!(
                    "{} -> {}",
                    pre.devcache(d).state,
                    post.devcache(d).state
                );
                lines.push(if d == DeviceId::D1 {
                    msc_line(&t, "", "", "")
                } else {
                    msc_line("", "", &t, "")
                });
            }
        }
        if pre.hcache.state != post.hcache.state {
            let t = format!("{} -> {}", pre.hcache.state, post.hcache.state);
            lines.push(msc_line("", &t, "", ""));
        }
        if lines.is_empty() {
            lines.push(msc_line("", "", "", ""));
        }
        // annotate the first line of the step with the rule name
        let first = lines.remove(0);
        out.push_str(&msc_line_with_note(&first, &note));
        out.push('\n');
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}

fn msc_line_with_note(line: &str, note: &str) -> String {
    let pad = 3 * LANE_WIDTH;
    let mut s = format!("{:<pw$}", line, pw = pad);
    s.push_str(note);
    s.trim_end().to_string()
}

/// One of the four trace formats.
pub fn render_trace(trace: &Trace, fmt: OutputFormat, all_fields: bool) -> String {
    match fmt {
        OutputFormat::Json => serde_json::to_string_pretty(trace).expect("trace is serializable"),
        OutputFormat::Table => render_table(trace, all_fields),
        OutputFormat::Markdown => render_markdown(trace, all_fields),
        OutputFormat::Msc => render_msc(trace),
    }
}

/// The generated catalog reference: one section per rule with guard
/// conjuncts (tagged where relaxable), actions, written fields and family.
pub fn catalog_markdown(catalog: &RuleCatalog) -> String {
    let mut out = String::new();
    out.push_str("# Rule catalog reference\n\n");
    out.push_str(&format!(
        "{} rules ({} parametric definitions instantiated for both devices).\n\n",
        catalog.rules.len(),
        catalog.rules.len() / 2
    ));
    out.push_str(&format!(
        "Configuration: snoop_pushes_go={}, go_cannot_tailgate={}, one_snoop_per_addr={}.\n\n",
        catalog.config.snoop_pushes_go,
        catalog.config.go_cannot_tailgate,
        catalog.config.one_snoop_per_addr
    ));
    out.push_str(
        "`Readable` denotes the device states the host's tracking treats as \
         holding or still acquiring a readable copy: SH, SMAD, SMA, SMD, SIA, \
         SIAC, ISAD, ISA, ISD.\n\n",
    );
    let tracked = catalog.rules.iter().filter(|r| r.perfect_tracking).count();
    out.push_str(&format!(
        "{} rules read a device cache state from a host-side guard (perfect tracking).\n\n",
        tracked
    ));
    for rule in &catalog.rules {
        out.push_str(&format!("## {}\n\n", rule.name));
        out.push_str(&format!("- id: {}\n- family: {}\n", rule.id, rule.family));
        if rule.perfect_tracking {
            out.push_str("- perfect tracking: reads a device cache state from the host side\n");
        }
        if !rule.relaxable_guards.is_empty() {
            let tags: Vec<&str> = rule.relaxable_guards.iter().map(|f| f.name()).collect();
            out.push_str(&format!("- relaxable guards: {}\n", tags.join(", ")));
        }
        out.push_str("- guards:\n");
        for g in &rule.guards {
            match g.relax {
                Some(flag) => out.push_str(&format!("  - {} [{}]\n", g.desc, flag.name())),
                None => out.push_str(&format!("  - {}\n", g.desc)),
            }
        }
        for flag in &rule.relaxable_guards {
            if !catalog.config.enforced(*flag) {
                out.push_str(&format!("  - (dropped by relaxation: {})\n", flag.name()));
            }
        }
        out.push_str("- actions:\n");
        for a in &rule.action_desc {
            out.push_str(&format!("  - {}\n", a));
        }
        let writes: Vec<String> = rule.writes.iter().map(|l| l.name()).collect();
        out.push_str(&format!("- writes: {}\n\n", writes.join(", ")));
    }
    out
}

/// The consecution matrix as a markdown grid: rules as rows, properties as
/// columns, `pass` or `FAIL` per cell.
pub fn matrix_markdown(report: &MatrixReport, catalog: &RuleCatalog, props: &[&str]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# Consecution matrix ({} states checked)\n\n",
        report.states_checked
    ));
    out.push_str(&format!("| rule | {} |\n", props.join(" | ")));
    out.push_str(&format!("|---{}\n", "|---".repeat(props.len()) + "|"));
    for rule in &catalog.rules {
        let mut row = format!("| {} ", rule.name);
        for p in props {
            let cell = &report.cells[&(rule.name.clone(), p.to_string())];
            row.push_str(if cell.passed() { "| pass " } else { "| FAIL " });
        }
        out.push_str(&row);
        out.push_str("|\n");
    }
    let failing = report.failing_cells();
    if !failing.is_empty() {
        out.push_str("\nFailing cells:\n");
        for (r, p) in failing {
            out.push_str(&format!("- ({}, {})\n", r, p));
        }
    }
    out
}
