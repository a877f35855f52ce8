use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use spopt_core::optimizer::SolverTrace;

use crate::error::{CliError, CliResult};

pub const TRACE_HEADER: &str = "iter,f,gradnorm,feasibility,tau,backtracks,time_s";

/// Full-precision (17 significant digits) representation.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("invalid output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn trace_csv(trace: &SolverTrace) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iter,
            num(r.cost),
            num(r.grad_norm),
            num(r.feasibility),
            num(r.tau),
            r.backtracks,
            num(r.time_s)
        );
    }
    s
}

/// CSV document with the given header; each row is already formatted.
pub fn table_csv(header: &str, rows: &[String]) -> String {
    let mut s = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Worker pool bounded by `SPOPT_THREADS` (all cores when unset).
pub fn worker_pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var("SPOPT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| CliError::Config(format!("SPOPT_THREADS must be a positive integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use spopt_core::optimizer::IterationRecord;

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn trace_layout() {
        let trace = SolverTrace {
            records: vec![IterationRecord {
                iter: 0,
                cost: 2.0,
                grad_norm: 1.0,
                feasibility: 0.0,
                tau: 0.0,
                backtracks: 3,
                time_s: 0.0,
                reference: 2.0,
            }],
        };
        let csv = trace_csv(&trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines[1].split(',').count(), 7);
        assert!(lines[1].starts_with("0,2.0000000000000000e0,"));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
