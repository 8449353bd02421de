//! Files written by a run, always through a temporary file in the target
//! directory so a crash never leaves a half-written output behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use varorder_core::analysis::TrajectoryStats;
use varorder_core::Error;

use crate::error::CliError;

pub const PLOT_HEADER: &str = "t,mean_N_low,ci_low,mean_N_high,ci_high,mean_logN_low,mean_logN_high";

/// Side-by-side means of two ensembles, one row per `t`, ready for plotting.
pub fn emit_plot_data(low: &TrajectoryStats, high: &TrajectoryStats) -> Result<String, Error> {
    if low.horizon() != high.horizon() {
        return Err(Error::HorizonMismatch(low.horizon(), high.horizon()));
    }
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for (l, h) in low.times.iter().zip(&high.times) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            l.t, l.mean_n, l.ci_halfwidth_n, h.mean_n, h.ci_halfwidth_n, l.mean_log_n, h.mean_log_n
        );
    }
    Ok(out)
}

/// Both ensembles in one table, tagged by a leading `member` column.
pub fn paired_stats_csv(low: &TrajectoryStats, high: &TrajectoryStats) -> String {
    let mut out = format!("member,{}\n", TrajectoryStats::CSV_HEADER);
    for (name, stats) in [("low", low), ("high", high)] {
        for line in stats.to_csv().lines().skip(1) {
            let _ = writeln!(out, "{name},{line}");
        }
    }
    out
}

pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<(), CliError> {
    let target = dir.join(name);
    let io = |source| CliError::Io { path: target.clone(), source };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    // reports hold only plain data; serialization cannot fail
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
