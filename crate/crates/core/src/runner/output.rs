//! CSV and text outputs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::metrics::TraceRecord;

use super::driver::{RunSet, SummaryRow};

pub const TRACE_HEADER: &str = "t,selected,err,q,J,fcp,bound,ier,power";
pub const SUMMARY_HEADER: &str = "rep,seed,final_fcp,final_q,selection_rate,restarts,t_converge";

/// Shortest `%.10g`-style rendering: 10 significant digits, trailing zeros
/// dropped, exponent form outside `[1e-5, 1e10)`. NaN renders empty.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_num)
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(64 * (trace.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            u8::from(r.selected),
            opt(r.err),
            fmt_num(r.q),
            r.j,
            fmt_num(r.fcp),
            fmt_num(r.bound),
            opt(r.ier),
            opt(r.power)
        );
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.rep,
            r.seed,
            fmt_num(r.final_fcp),
            fmt_num(r.final_q),
            fmt_num(r.selection_rate),
            r.restarts,
            r.t_converge.map_or_else(String::new, |t| t.to_string())
        );
    }
    s
}

/// `t,indicator` rows for the steps where the side indicator is defined.
pub fn side_csv(side: &[Option<f64>]) -> String {
    let mut s = String::from("t,false_discovery\n");
    for (i, v) in side.iter().enumerate() {
        if let Some(v) = v {
            let _ = writeln!(s, "{},{}", i + 1, fmt_num(*v));
        }
    }
    s
}

/// Write `config.txt`, one trace per replication, baseline traces and `summary.csv` into `dir`.
pub fn write_run_set(dir: &Path, set: &RunSet) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), set.resolved.cfg.to_text())?;
    let width = set.runs.len().saturating_sub(1).to_string().len().max(3);
    for run in &set.runs {
        let tag = format!("{:0width$}", run.rep);
        fs::write(dir.join(format!("trace_{tag}.csv")), trace_csv(&run.trace))?;
        if let Some(b) = &run.baseline {
            fs::write(dir.join(format!("baseline_{tag}.csv")), trace_csv(b))?;
        }
        if run.side.iter().any(Option::is_some) {
            fs::write(dir.join(format!("false_discovery_{tag}.csv")), side_csv(&run.side))?;
        }
    }
    fs::write(dir.join("summary.csv"), summary_csv(&set.summary_rows()))
}
