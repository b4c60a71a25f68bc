//! Plot-ready CSV tables and a plain-text summary of headline ratios.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use super::config::Scheme;
use super::run::{ResultRow, ResultTable};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "sweep",
    "scheme",
    "mean_rate",
    "ratio_min",
    "ratio_max",
    "mean_iters",
    "mean_time_s",
];

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Writes the table rows to `path`, header first.
pub fn emit_csv(table: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(&table.rows, std::io::BufWriter::new(file))
}

/// Reads rows written by [`write_csv`]; the header must match exactly.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!(
            "unexpected CSV header `{}`; expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            CSV_HEADER.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn sweeps(table: &ResultTable) -> Vec<f64> {
    let mut v: Vec<f64> = table.rows.iter().map(|r| r.sweep).collect();
    v.dedup();
    v
}

/// `sum over sweep points of mean(V_num) / sum of mean(V_den)`.
fn pooled_ratio(table: &ResultTable, num: Scheme, den: Scheme) -> Option<f64> {
    let (mut a, mut b) = (0.0, 0.0);
    for s in sweeps(table) {
        a += table.row(s, num)?.mean_rate;
        b += table.row(s, den)?.mean_rate;
    }
    Some(a / b)
}

/// Human-readable summary: per-point ratios of the proposed schemes against
/// every benchmark, diagnostics, and any invariant violations.
pub fn emit_summary(table: &ResultTable) -> String {
    let mut s = String::new();
    let proposed = [Scheme::Cd, Scheme::Admm];
    let others = [
        Scheme::Optimal,
        Scheme::LrBound,
        Scheme::LrRound,
        Scheme::OffloadingOnly,
        Scheme::LocalOnly,
    ];
    let present = |x: Scheme| table.rows.iter().any(|r| r.scheme == x);

    if let Some(r) = table.reference {
        let _ = writeln!(s, "reference scheme: {r}");
    }
    for p in proposed.into_iter().filter(|&p| present(p)) {
        for o in others.into_iter().filter(|&o| present(o)) {
            let per_point: Vec<String> = sweeps(table)
                .into_iter()
                .filter_map(|sw| {
                    let num = table.row(sw, p)?.mean_rate;
                    let den = table.row(sw, o)?.mean_rate;
                    Some(format!("{sw}: {:.4}", num / den))
                })
                .collect();
            if let Some(pooled) = pooled_ratio(table, p, o) {
                let _ = writeln!(s, "{p}/{o}: {pooled:.4} overall ({})", per_point.join(", "));
            }
        }
    }
    if present(Scheme::Cd) && present(Scheme::Admm) {
        if let Some(r) = pooled_ratio(table, Scheme::Admm, Scheme::Cd) {
            let _ = writeln!(s, "admm/cd: {r:.5} overall");
        }
    }
    for p in &table.points {
        let mut line = format!("sweep {}: {} instances", p.sweep, p.instances);
        if p.failures > 0 {
            let _ = write!(line, ", {} failed", p.failures);
        }
        if let (Some(src), Some(t), Some(m)) = (p.structure_source, p.threshold_structure, p.mean_offloaders)
        {
            let _ = write!(line, ", threshold structure ({src}) {t}, mean offloaders {m:.2}");
        }
        if p.cd_below_lr_round > 0 {
            let _ = write!(line, ", cd < lr_round on {} (flagged)", p.cd_below_lr_round);
        }
        if p.admm_unconverged > 0 {
            let _ = write!(line, ", admm hit the iteration cap on {}", p.admm_unconverged);
        }
        let _ = writeln!(s, "{line}");
    }
    for v in &table.violations {
        let _ = writeln!(
            s,
            "VIOLATION at sweep {} placement {} fading {}: {} ({:.9e} vs {:.9e})",
            v.sweep, v.key.placement, v.key.realization, v.relation, v.lhs, v.rhs
        );
    }
    for f in table.failures.iter().take(20) {
        let scheme = f.scheme.map_or("instance".to_string(), |s| s.to_string());
        let _ = writeln!(
            s,
            "FAILURE at sweep {} placement {} fading {} [{scheme}]: {}",
            f.sweep, f.key.placement, f.key.realization, f.error
        );
    }
    if table.failures.len() > 20 {
        let _ = writeln!(s, "... {} more failures", table.failures.len() - 20);
    }
    let _ = writeln!(
        s,
        "invariants {}",
        if table.invariants_held() {
            "held"
        } else {
            "VIOLATED"
        }
    );
    s
}
