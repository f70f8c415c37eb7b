//! CSV and gnuplot emission.
//!
//! CSV is RFC-4180-compatible: LF line endings, '.' decimal separator, no
//! quoting needed (no field ever contains a comma). Metric values carry 17
//! significant digits so curves round-trip exactly. The first line is a
//! `#` metadata comment recording the seed and spec.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use quditlab::experiments::{ExperimentSpec, Family, ResultRow, CSV_HEADER};

/// 17 significant digits (1 leading + 16 fractional).
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_rows_csv(path: &Path, spec: &ExperimentSpec, rows: &[ResultRow]) -> io::Result<()> {
    let mut out = String::with_capacity(rows.len() * 64 + 128);
    let spec_json = serde_json::to_string(spec).unwrap_or_default();
    writeln!(out, "# quditlab seed={} spec={}", spec.seed, spec_json).unwrap();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.model,
            r.d,
            r.l0,
            r.l1,
            r.p,
            r.t,
            r.metric,
            fmt_value(r.value)
        )
        .unwrap();
    }
    std::fs::write(path, out)
}

/// Extracts per-d `(times, values)` of `process_fidelity` rows from a CSV
/// produced by `write_rows_csv`, sorted by d.
#[allow(clippy::type_complexity)]
pub fn read_fidelity_curves(text: &str) -> Result<Vec<(usize, (Vec<f64>, Vec<f64>))>, String> {
    let mut curves: std::collections::BTreeMap<usize, (Vec<f64>, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() || line.starts_with("experiment,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(format!("line {}: expected 9 fields", lineno + 1));
        }
        if fields[7] != "process_fidelity" {
            continue;
        }
        let d: usize = fields[2]
            .parse()
            .map_err(|e| format!("line {}: d: {e}", lineno + 1))?;
        let t: f64 = fields[6]
            .parse()
            .map_err(|e| format!("line {}: t: {e}", lineno + 1))?;
        let v: f64 = fields[8]
            .parse()
            .map_err(|e| format!("line {}: value: {e}", lineno + 1))?;
        let entry = curves.entry(d).or_default();
        entry.0.push(t);
        entry.1.push(v);
    }
    Ok(curves.into_iter().collect())
}

/// Emits a gnuplot script reproducing the family's figure layout from the
/// long-format CSV. Pure text templating; the script filters rows with awk.
pub fn write_gnuplot(path: &Path, spec: &ExperimentSpec, csv: &Path) -> io::Result<()> {
    let csv_name = csv.file_name().and_then(|s| s.to_str()).unwrap_or("data.csv");
    let mut s = String::new();
    writeln!(s, "# gnuplot script generated by quditlab").unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set key outside right").unwrap();
    writeln!(s, "set xlabel 't'").unwrap();
    match spec.family {
        Family::FidelityVsD | Family::FidelityVsL1 | Family::FidelityShiftedPair => {
            writeln!(s, "set ylabel 'process fidelity'").unwrap();
            writeln!(s, "set yrange [0:1.02]").unwrap();
            let (column, values): (usize, Vec<usize>) = match spec.family {
                Family::FidelityVsD => (3, spec.d_values.clone()),
                Family::FidelityVsL1 => {
                    let d = spec.d_values.last().copied().unwrap_or(6);
                    (5, (1..d).collect())
                }
                _ => {
                    let d = spec.d_values.last().copied().unwrap_or(6);
                    (4, (0..d - 1).collect())
                }
            };
            let label = if column == 3 { "d" } else { "level" };
            let mut parts = Vec::new();
            for v in values {
                parts.push(format!(
                    "'< awk -F, ''${column}=={v} && $8==\"process_fidelity\"'' {csv_name}' \
                     using 7:9 with lines title '{label}={v}'"
                ));
            }
            writeln!(s, "plot {}", parts.join(", \\\n     ")).unwrap();
        }
        Family::EntropyVsD => {
            writeln!(s, "set ylabel 'entropy production'").unwrap();
            let mut parts = Vec::new();
            for metric in [
                "entropy_production_en",
                "entropy_production_nonen",
                "entropy_production_total",
            ] {
                for &d in &spec.d_values {
                    parts.push(format!(
                        "'< awk -F, ''$3=={d} && $8==\"{metric}\"'' {csv_name}' \
                         using 7:9 with lines title '{metric} d={d}'"
                    ));
                }
            }
            writeln!(s, "plot {}", parts.join(", \\\n     ")).unwrap();
        }
        Family::KohlrauschTable => {
            writeln!(s, "set ylabel 'fit parameter'").unwrap();
            writeln!(s, "set xlabel 'd'").unwrap();
            let mut parts = Vec::new();
            for metric in ["b", "tau", "alpha"] {
                parts.push(format!(
                    "'< awk -F, ''$8==\"{metric}\"'' {csv_name}' \
                     using 3:9 with linespoints title '{metric}'"
                ));
            }
            writeln!(s, "plot {}", parts.join(", \\\n     ")).unwrap();
        }
        Family::QecCompare => {
            writeln!(s, "set ylabel 'process fidelity'").unwrap();
            writeln!(s, "set xlabel 'p'").unwrap();
            writeln!(s, "set logscale x").unwrap();
            let mut parts = Vec::new();
            for &tau in &spec.taus {
                for (metric, style) in [
                    ("fidelity_with_qec", "with lines"),
                    ("fidelity_without_qec", "with lines dashtype 2"),
                ] {
                    parts.push(format!(
                        "'< awk -F, ''$7=={tau} && $8==\"{metric}\"'' {csv_name}' \
                         using 6:9 {style} title '{metric} tau={tau}'"
                    ));
                }
            }
            writeln!(s, "plot {}", parts.join(", \\\n     ")).unwrap();
        }
    }
    writeln!(s, "pause -1 'press enter'").unwrap();
    std::fs::write(path, s)
}
