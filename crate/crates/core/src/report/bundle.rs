use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::run::{ReportBundle, BERRY_ESSEEN_C};
use crate::construction::Schedule;
use crate::diagnostics::Direction;
use crate::error::{Error, Result};

pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_NDJSON: &str = "report.ndjson";
pub const CURVES_CSV: &str = "curves.csv";

/// Floats with 17 significant digits; integers as integers.
fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                let f = n.as_f64().expect("finite number");
                write!(out, "{f:.16e}").unwrap();
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, x);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push(':');
                write_value(out, x);
            }
            out.push('}');
        }
    }
}

fn record<T: Serialize>(kind: &str, body: &T) -> String {
    let mut m = Map::new();
    m.insert("record".into(), json!(kind));
    m.insert("data".into(), serde_json::to_value(body).expect("serializable"));
    let mut s = String::new();
    write_value(&mut s, &Value::Object(m));
    s.push('\n');
    s
}

/// Line-delimited JSON: provenance, config, schedule, model, one line per
/// probe, mixing, summary.
pub fn to_ndjson(b: &ReportBundle) -> String {
    let mut s = String::new();
    s.push_str(&record("provenance", &b.provenance));
    // Worker count is a runtime choice; the report must not depend on it.
    let mut cfg = serde_json::to_value(&b.config).expect("serializable");
    if let Some(budgets) = cfg["budgets"].as_object_mut() {
        budgets.remove("workers");
    }
    s.push_str(&record("config", &cfg));
    if let Some(sched) = &b.schedule {
        s.push_str(&record("schedule", sched));
    }
    s.push_str(&record("model", &b.model));
    for p in &b.probes {
        s.push_str(&record("probe", p));
    }
    if let Some(m) = &b.mixing {
        s.push_str(&record("mixing", m));
    }
    s.push_str(&record("summary", &b.summary));
    s
}

/// Drop the provenance timestamp, for byte comparisons between runs.
pub fn strip_timestamp(ndjson: &str) -> String {
    ndjson
        .lines()
        .map(|l| match serde_json::from_str::<Value>(l) {
            Ok(mut v) if v["record"] == "provenance" => {
                if let Some(data) = v["data"].as_object_mut() {
                    data.remove("timestamp");
                }
                let mut s = String::new();
                write_value(&mut s, &v);
                s
            }
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn fmt_opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

fn dir_symbol(d: Direction) -> &'static str {
    match d {
        Direction::AtLeast => ">=",
        Direction::AtMost => "<=",
        Direction::Within => "~=",
    }
}

fn method_name<T: Serialize>(m: &T) -> String {
    serde_json::to_value(m)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn to_text(b: &ReportBundle) -> String {
    let mut s = String::new();
    let c = &b.config;
    writeln!(s, "mdstowers {}  variant {}  seed {}", b.provenance.version, c.variant.name(), c.seed).unwrap();
    writeln!(
        s,
        "model: {} towers, {} states, mu(weight = 0) = {:.6e}, sigma^2 = {:.10e}",
        b.model.heights.len(),
        b.model.state_count,
        b.model.mass_a,
        b.model.sigma2
    )
    .unwrap();
    if let Some(sc) = &b.schedule {
        writeln!(s, "\nschedule").unwrap();
        writeln!(s, "{:>3} {:>8} {:>14} {:>12} {:>14}", "k", "n_k", "a_n_k", "H_k", "p_k").unwrap();
        for k in 0..sc.k_count() {
            writeln!(
                s,
                "{:>3} {:>8} {:>14.6e} {:>12} {:>14.6e}",
                k, sc.n[k], sc.a_n[k], sc.heights[k], sc.p[k]
            )
            .unwrap();
        }
        writeln!(
            s,
            "remainder: mass {:.6e}, height {}",
            sc.remainder_mass, sc.remainder_height
        )
        .unwrap();
        if !sc.mixing_lags.is_empty() {
            writeln!(s, "mixing lags m_k: {:?}", sc.mixing_lags).unwrap();
        }
    }
    writeln!(s, "\nprobes").unwrap();
    writeln!(
        s,
        "{:<26} {:>3} {:>7} {:>16}    {:>16} {:>12} {:>11}  result",
        "name", "k", "n", "value", "bound", "method", "error"
    )
    .unwrap();
    for p in &b.probes {
        writeln!(
            s,
            "{:<26} {:>3} {:>7} {:>16.9e} {} {:>16.9e} {:>12} {:>11.3e}  {}",
            p.name,
            fmt_opt(p.k),
            fmt_opt(p.n),
            p.value,
            dir_symbol(p.direction),
            p.bound,
            method_name(&p.method),
            p.error_bar,
            if p.pass { "PASS" } else { "FAIL" }
        )
        .unwrap();
        for a in &p.aux {
            writeln!(
                s,
                "  {:<34} {:>16.9e} {} {:>16.9e}   tol {:>9.2e}  {}",
                a.name,
                a.value,
                dir_symbol(a.direction),
                a.bound,
                a.tolerance,
                if a.pass { "ok" } else { "VIOLATED" }
            )
            .unwrap();
        }
    }
    writeln!(
        s,
        "\n{} of {} probes pass: {}",
        b.summary.passed,
        b.summary.probe_count,
        if b.summary.pass { "PASS" } else { "FAIL" }
    )
    .unwrap();
    s
}

pub fn to_csv(b: &ReportBundle) -> String {
    let mut s = String::from("variant,k,n,llt_value,llt_bound,clt_value,clt_bound,method\n");
    for r in &b.curves {
        writeln!(
            s,
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            b.config.variant.name(),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            r.n,
            r.llt_value,
            r.llt_bound,
            r.clt_value,
            r.clt_bound,
            method_name(&r.method)
        )
        .unwrap();
    }
    s
}

/// Write to a sibling temporary file, then rename over the target.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Write `report.txt`, `report.ndjson` and `curves.csv` into `dir`.
pub fn write_reports(b: &ReportBundle, dir: &Path) -> Result<()> {
    write_atomic(&dir.join(REPORT_TXT), &to_text(b))?;
    write_atomic(&dir.join(REPORT_NDJSON), &to_ndjson(b))?;
    write_atomic(&dir.join(CURVES_CSV), &to_csv(b))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOutcome {
    pub probes: usize,
    pub bounds_checked: usize,
    /// Every recorded probe passed.
    pub all_pass: bool,
}

fn num(v: &Value, field: &str, probe: &str) -> Result<f64> {
    v.get(field)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse(format!("probe `{probe}` lacks numeric `{field}`")))
}

fn check(probe: &str, recorded: f64, recomputed: f64, count: &mut usize) -> Result<()> {
    *count += 1;
    if recorded.to_bits() != recomputed.to_bits() {
        return Err(Error::BoundMismatch {
            probe: probe.to_string(),
            recorded,
            recomputed,
        });
    }
    Ok(())
}

fn aux_field(p: &Value, name: &str, field: &str, probe: &str) -> Result<Option<f64>> {
    let Some(list) = p.get("aux").and_then(Value::as_array) else {
        return Ok(None);
    };
    match list.iter().find(|a| a.get("name").and_then(Value::as_str) == Some(name)) {
        Some(a) => Ok(Some(num(a, field, probe)?)),
        None => Ok(None),
    }
}

/// Recompute every closed-form bound from the recorded schedule and compare
/// it bit for bit with the recorded probe bounds.
pub fn verify_certificate(path: &Path) -> Result<VerifyOutcome> {
    let text = std::fs::read_to_string(path)?;
    verify_text(&text)
}

pub fn verify_text(text: &str) -> Result<VerifyOutcome> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty report".into()));
    }
    let mut schedule: Option<Schedule> = None;
    let mut probes = Vec::new();
    let mut summary_seen = false;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        let kind = v
            .get("record")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse(format!("line {}: no record kind", i + 1)))?;
        let data = v
            .get("data")
            .cloned()
            .ok_or_else(|| Error::Parse(format!("line {}: no data", i + 1)))?;
        match kind {
            "schedule" => {
                schedule = Some(
                    serde_json::from_value(data)
                        .map_err(|e| Error::Parse(format!("schedule: {e}")))?,
                )
            }
            "probe" => probes.push(data),
            "summary" => summary_seen = true,
            _ => {}
        }
    }
    if !summary_seen {
        return Err(Error::Parse("report has no summary record".into()));
    }
    let mut count = 0;
    let mut all_pass = true;
    for p in &probes {
        let name = p
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("probe without name".into()))?;
        let k = p.get("k").and_then(Value::as_u64).map(|k| k as usize);
        let n = p.get("n").and_then(Value::as_u64);
        let label = match k {
            Some(k) => format!("{name}[k={k}]"),
            None => name.to_string(),
        };
        all_pass &= p.get("pass").and_then(Value::as_bool).unwrap_or(false);
        let bound = num(p, "bound", &label)?;
        let need_sched = || {
            schedule
                .as_ref()
                .ok_or_else(|| Error::Parse(format!("probe `{label}` needs the schedule record")))
        };
        let need_k = |s: &Schedule| {
            k.filter(|&k| k < s.k_count())
                .ok_or_else(|| Error::Parse(format!("probe `{label}` has no valid k")))
        };
        match name {
            "llt-lattice" => {
                let s = need_sched()?;
                let k = need_k(s)?;
                let a = s.rate.value(s.n[k]);
                check(&label, bound, a, &mut count)?;
                check(&label, s.a_n[k], a, &mut count)?;
                if let Some(b) = aux_field(p, "intersection-slab-bound", "bound", &label)? {
                    check(&label, b, s.d[k] * (1.0 - s.rho[k]), &mut count)?;
                }
                if let Some(b) = aux_field(p, "slab-bound-rate", "bound", &label)? {
                    check(&label, b, a, &mut count)?;
                }
                if let Some(b) = aux_field(p, "chain-quarter-mass", "bound", &label)? {
                    check(&label, b, s.p[k] / 4.0, &mut count)?;
                }
                if let Some(v) = aux_field(p, "quarter-mass-rate", "value", &label)? {
                    check(&label, v, s.p[k] / 4.0, &mut count)?;
                }
                if let Some(b) = aux_field(p, "quarter-mass-rate", "bound", &label)? {
                    check(&label, b, a, &mut count)?;
                }
            }
            "clt-lattice" => {
                let s = need_sched()?;
                let k = need_k(s)?;
                check(&label, bound, s.rate.value(s.n[k]) / 2.0, &mut count)?;
            }
            "clt-density" => {
                let s = need_sched()?;
                let k = need_k(s)?;
                check(&label, bound, s.rate.value(s.n[k]), &mut count)?;
            }
            "llt-density" => {
                let s = need_sched()?;
                let c = s
                    .density
                    .as_ref()
                    .ok_or_else(|| Error::Parse("density constants missing".into()))?;
                check(&label, bound, c.l, &mut count)?;
            }
            "density-bound" => {
                let s = need_sched()?;
                let c = s
                    .density
                    .as_ref()
                    .ok_or_else(|| Error::Parse("density constants missing".into()))?;
                check(&label, bound, c.l1 + c.l2, &mut count)?;
            }
            "mixing-beta" => {
                let s = need_sched()?;
                check(&label, bound, 7.0, &mut count)?;
                for kk in 0..s.k_count() {
                    if let Some(b) = aux_field(p, &format!("beta-after-m{kk}"), "bound", &label)? {
                        check(&label, b, 7.0 * s.eps[kk], &mut count)?;
                    }
                }
            }
            "berry-esseen" => {
                let n = n.ok_or_else(|| Error::Parse(format!("probe `{label}` has no n")))?;
                check(&label, bound, BERRY_ESSEEN_C / (n as f64).sqrt(), &mut count)?;
            }
            _ => {}
        }
    }
    Ok(VerifyOutcome {
        probes: probes.len(),
        bounds_checked: count,
        all_pass,
    })
}
