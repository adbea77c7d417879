use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RankStatistics;
use crate::error::{Error, Result};
use crate::geometry::InteractionKind;
use crate::probmodel::{expected_r, BoundInputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    /// One row per cell.
    Csv,
    /// The full statistics, configuration included.
    Json,
    /// Kernels as rows and `n` as columns, means then variances.
    Table,
}

impl std::str::FromStr for EmitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            "table" => Ok(EmitFormat::Table),
            _ => Err(Error::Config(format!("unknown format `{s}` (expected csv, json or table)"))),
        }
    }
}

/// One CSV row. Failed cells have empty mean and variance fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kernel: String,
    pub n: u64,
    pub trials: u64,
    pub mean_rank: Option<f64>,
    pub var_rank: Option<f64>,
    pub master_seed: u64,
    pub eps: f64,
}

impl RankStatistics {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.cells
            .iter()
            .map(|c| SummaryRow {
                kernel: c.kernel.clone(),
                n: c.n,
                trials: c.trials,
                mean_rank: c.is_ok().then_some(c.mean),
                var_rank: c.is_ok().then_some(c.variance),
                master_seed: self.config.master_seed,
                eps: self.config.eps,
            })
            .collect()
    }
}

const CSV_HEADER: [&str; 7] = ["kernel", "n", "trials", "mean_rank", "var_rank", "master_seed", "eps"];

fn csv_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Numerical(format!("csv encoding: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::Numerical(format!("csv encoding: {e}")))
}

fn table_text(stats: &RankStatistics) -> String {
    let mut kernels: Vec<&str> = Vec::new();
    for c in &stats.cells {
        if !kernels.contains(&c.kernel.as_str()) {
            kernels.push(&c.kernel);
        }
    }
    let ns = &stats.config.n;
    let mut out = String::new();
    for (title, pick) in [("mean", true), ("variance", false)] {
        out.push_str(&format!("{title} of {} over {} trials\n", stats.quantity, stats.config.trials));
        out.push_str("kernel");
        for n in ns {
            out.push_str(&format!(",n={n}"));
        }
        out.push('\n');
        for k in &kernels {
            out.push_str(k);
            for &n in ns {
                match stats.cell(k, n) {
                    Some(c) if c.is_ok() => out.push_str(&format!(",{:.2}", if pick { c.mean } else { c.variance })),
                    _ => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        if pick {
            out.push('\n');
        }
    }
    out
}

fn write_new(path: &Path, bytes: &[u8], force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::OutputExists { path: path.to_path_buf() });
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Serialize `stats` to bytes in `format`.
pub fn render(stats: &RankStatistics, format: EmitFormat) -> Result<Vec<u8>> {
    match format {
        EmitFormat::Csv => csv_bytes(&CSV_HEADER, &stats.summary_rows()),
        EmitFormat::Json => {
            let mut s = serde_json::to_string_pretty(stats).map_err(|e| Error::Numerical(format!("json encoding: {e}")))?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        EmitFormat::Table => Ok(table_text(stats).into_bytes()),
    }
}

/// Write `stats` to `path`. An existing file is only replaced with `force`.
pub fn emit(stats: &RankStatistics, format: EmitFormat, path: &Path, force: bool) -> Result<()> {
    write_new(path, &render(stats, format)?, force)
}

pub fn parse_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })?;
    r.deserialize().map(|row| row.map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })).collect()
}

pub fn parse_json(path: &Path) -> Result<RankStatistics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
}

/// One line of plot data: simulation next to the rank model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub n: u64,
    pub mean: f64,
    pub var: f64,
    pub theory_exact: Option<f64>,
    pub theory_witness: Option<f64>,
}

/// Plot rows for one kernel. Theory columns are filled for shared-surface
/// experiments when a truncation level `p` is given.
pub fn plot_rows(stats: &RankStatistics, kernel: &str, p: Option<u64>) -> Result<Vec<PlotRow>> {
    let cfg = &stats.config;
    stats
        .cells
        .iter()
        .filter(|c| c.kernel.eq_ignore_ascii_case(kernel) && c.is_ok())
        .map(|c| {
            let theory = match (cfg.surface, p) {
                (InteractionKind::SharedSurface(dp), Some(p)) => Some(expected_r(&BoundInputs::new(cfg.dim, dp, c.n, p)?)),
                _ => None,
            };
            Ok(PlotRow {
                n: c.n,
                mean: c.mean,
                var: c.variance,
                theory_exact: theory.map(|t| t.exact_sum),
                theory_witness: theory.map(|t| t.witness),
            })
        })
        .collect()
}

pub fn emit_plot(rows: &[PlotRow], path: &Path, force: bool) -> Result<()> {
    write_new(path, &csv_bytes(&["n", "mean", "var", "theory_exact", "theory_witness"], rows)?, force)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{CellStats, ExperimentConfig};
    use crate::kernels::KernelId;

    fn stats(cells: Vec<CellStats>) -> RankStatistics {
        RankStatistics {
            config: ExperimentConfig::new(1, InteractionKind::SharedSurface(0), &[KernelId::K1], vec![8, 16], 3, 5),
            quantity: "eps_rank".into(),
            variance: "population".into(),
            format_version: crate::FORMAT_VERSION,
            cells,
        }
    }

    #[test]
    fn empty_stats_give_header_only() {
        let bytes = render(&stats(vec![]), EmitFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "kernel,n,trials,mean_rank,var_rank,master_seed,eps\n");
    }

    #[test]
    fn round_trips_and_overwrite_guard() {
        let dir = tempfile::tempdir().unwrap();
        let s = stats(vec![
            CellStats::from_samples("K1", 8, &[3, 4, 4], true),
            CellStats::from_samples("K1", 16, &[5, 7, 6], false),
        ]);
        let json = dir.path().join("s.json");
        emit(&s, EmitFormat::Json, &json, false).unwrap();
        assert_eq!(parse_json(&json).unwrap(), s);
        assert!(matches!(emit(&s, EmitFormat::Json, &json, false), Err(Error::OutputExists { .. })));
        emit(&s, EmitFormat::Json, &json, true).unwrap();

        let csv = dir.path().join("s.csv");
        emit(&s, EmitFormat::Csv, &csv, false).unwrap();
        assert_eq!(parse_csv(&csv).unwrap(), s.summary_rows());
        assert_eq!(render(&s, EmitFormat::Csv).unwrap(), render(&s, EmitFormat::Csv).unwrap());
    }

    #[test]
    fn table_layout() {
        let s = stats(vec![CellStats::from_samples("K1", 8, &[3, 4, 4], false)]);
        let t = String::from_utf8(render(&s, EmitFormat::Table).unwrap()).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[1], "kernel,n=8,n=16");
        assert_eq!(lines[2], "K1,3.67,NA");
        assert_eq!(lines[6], "K1,0.22,NA");
    }

    #[test]
    fn plot_rows_carry_theory() {
        let s = stats(vec![CellStats::from_samples("K1", 8, &[3, 4, 4], false)]);
        let rows = plot_rows(&s, "k1", Some(2)).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].theory_exact.unwrap() <= rows[0].theory_witness.unwrap());
        assert!(plot_rows(&s, "K1", None).unwrap()[0].theory_exact.is_none());
    }
}
