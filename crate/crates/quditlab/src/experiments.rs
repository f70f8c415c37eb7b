//! Declarative experiment sweeps producing long-format result rows.
//!
//! Each family maps to one figure or table: per-d fidelity decay curves,
//! the logical-level sweeps, entropy productions, the Kohlrausch parameter
//! table and the with/without-QEC comparison. Cells run in parallel; rows
//! merge in spec order, so a fixed spec and seed give identical output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{evolve, Channel, ErrorModelKind};
use crate::error::Result;
use crate::fit::{fit, FidelitySeries};
use crate::metrics::{
    encoded_process_fidelity, entropy_productions, SubspaceWeighting,
};
use crate::ops::{encoding_projectors, logical_bell, LogicalLevels, QuditDim, RegisterShape};
use crate::qec::{compare_with_without, dense_round_allowed, QecMode};

/// Experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Fidelity decay per qudit dimension, maximally polarized encoding.
    FidelityVsD,
    /// Fidelity decay at fixed d while `|1_L>` sweeps from `|1>` to `|d-1>`.
    FidelityVsL1,
    /// Fidelity decay for level pairs `(k, k+1)` at fixed separation 1.
    FidelityShiftedPair,
    /// Entropy production series per qudit dimension.
    EntropyVsD,
    /// Kohlrausch fit parameters per qudit dimension.
    KohlrauschTable,
    /// With/without-QEC process fidelity over a p grid.
    QecCompare,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::FidelityVsD => "fidelity_vs_d",
            Family::FidelityVsL1 => "fidelity_vs_l1",
            Family::FidelityShiftedPair => "fidelity_shifted_pair",
            Family::EntropyVsD => "entropy_vs_d",
            Family::KohlrauschTable => "kohlrausch_table",
            Family::QecCompare => "qec_compare",
        }
    }
}

fn default_d_values() -> Vec<usize> {
    vec![2, 3, 4, 5, 6]
}

fn default_p() -> f64 {
    0.01
}

fn default_steps() -> usize {
    1000
}

fn default_seed() -> u64 {
    42
}

fn default_taus() -> Vec<usize> {
    vec![1, 10, 100]
}

fn default_p_grid_points() -> usize {
    21
}

fn default_trajectories() -> usize {
    10_000
}

/// One experiment specification; the CLI mirrors this as its JSON config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub family: Family,
    pub model: ErrorModelKind,
    #[serde(default = "default_d_values")]
    pub d_values: Vec<usize>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Logical levels; `None` means maximally polarized `(0, d-1)`.
    #[serde(default)]
    pub levels: Option<(usize, usize)>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Storage times for `qec_compare`.
    #[serde(default = "default_taus")]
    pub taus: Vec<usize>,
    /// Log-spaced error-probability grid for `qec_compare`.
    #[serde(default = "default_p_grid_points")]
    pub p_grid_points: usize,
    #[serde(default = "default_p_grid_bounds")]
    pub p_grid_bounds: (f64, f64),
    /// Trajectory count when a register exceeds the dense cap.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
}

fn default_p_grid_bounds() -> (f64, f64) {
    (1e-3, 0.5)
}

impl ExperimentSpec {
    pub fn new(family: Family, model: ErrorModelKind) -> Self {
        Self {
            family,
            model,
            d_values: default_d_values(),
            p: default_p(),
            steps: default_steps(),
            levels: None,
            seed: default_seed(),
            taus: default_taus(),
            p_grid_points: default_p_grid_points(),
            p_grid_bounds: default_p_grid_bounds(),
            trajectories: default_trajectories(),
        }
    }

    /// Log-spaced p grid for the QEC comparison.
    pub fn p_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.p_grid_bounds;
        let n = self.p_grid_points.max(2);
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                (lo.ln() + f * (hi.ln() - lo.ln())).exp()
            })
            .collect()
    }
}

/// One long-format output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: &'static str,
    pub model: &'static str,
    pub d: usize,
    pub l0: usize,
    pub l1: usize,
    pub p: f64,
    pub t: usize,
    pub metric: String,
    pub value: f64,
}

/// CSV header matching [`ResultRow`] field order.
pub const CSV_HEADER: &str = "experiment,model,d,l0,l1,p,t,metric,value";

fn fidelity_curve(
    kind: ErrorModelKind,
    d: QuditDim,
    levels: LogicalLevels,
    p: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let shape = RegisterShape::new(2, d)?;
    let bell = logical_bell(d, levels)?;
    let (p_en, _) = encoding_projectors(d, levels)?;
    let channel = Channel::from_model(kind, d, p, vec![2])?;
    let mut out = Vec::with_capacity(steps + 1);
    crate::channels::evolve_visit(&bell, shape, &channel, steps, |_, m| {
        let state = crate::state::DensityMatrix::from_matrix(m.hermitian_part())?;
        out.push(encoded_process_fidelity(&bell, &state, &p_en)?);
        Ok(())
    })?;
    Ok(out)
}

type CellResult = Result<Vec<ResultRow>>;

fn levels_for(spec: &ExperimentSpec, d: QuditDim) -> Result<LogicalLevels> {
    match spec.levels {
        Some((l0, l1)) => {
            let lv = LogicalLevels::new(l0, l1)?;
            lv.check_against(d)?;
            Ok(lv)
        }
        None => Ok(LogicalLevels::polarized(d)),
    }
}

fn run_fidelity_vs_d(spec: &ExperimentSpec) -> Vec<CellResult> {
    spec.d_values
        .par_iter()
        .map(|&dv| {
            let d = QuditDim::new(dv)?;
            let levels = levels_for(spec, d)?;
            let curve = fidelity_curve(spec.model, d, levels, spec.p, spec.steps)?;
            Ok(curve
                .into_iter()
                .enumerate()
                .map(|(t, value)| ResultRow {
                    experiment: spec.family.label(),
                    model: spec.model.label(),
                    d: dv,
                    l0: levels.l0(),
                    l1: levels.l1(),
                    p: spec.p,
                    t,
                    metric: "process_fidelity".into(),
                    value,
                })
                .collect())
        })
        .collect()
}

fn run_fidelity_vs_l1(spec: &ExperimentSpec) -> Vec<CellResult> {
    let dv = spec.d_values.last().copied().unwrap_or(6);
    let l1_values: Vec<usize> = (1..dv).collect();
    l1_values
        .par_iter()
        .map(|&l1| {
            let d = QuditDim::new(dv)?;
            let levels = LogicalLevels::new(0, l1)?;
            levels.check_against(d)?;
            let curve = fidelity_curve(spec.model, d, levels, spec.p, spec.steps)?;
            Ok(curve
                .into_iter()
                .enumerate()
                .map(|(t, value)| ResultRow {
                    experiment: spec.family.label(),
                    model: spec.model.label(),
                    d: dv,
                    l0: 0,
                    l1,
                    p: spec.p,
                    t,
                    metric: "process_fidelity".into(),
                    value,
                })
                .collect())
        })
        .collect()
}

fn run_fidelity_shifted_pair(spec: &ExperimentSpec) -> Vec<CellResult> {
    let dv = spec.d_values.last().copied().unwrap_or(6);
    let pairs: Vec<usize> = (0..dv.saturating_sub(1)).collect();
    pairs
        .par_iter()
        .map(|&k| {
            let d = QuditDim::new(dv)?;
            let levels = LogicalLevels::new(k, k + 1)?;
            levels.check_against(d)?;
            let curve = fidelity_curve(spec.model, d, levels, spec.p, spec.steps)?;
            Ok(curve
                .into_iter()
                .enumerate()
                .map(|(t, value)| ResultRow {
                    experiment: spec.family.label(),
                    model: spec.model.label(),
                    d: dv,
                    l0: k,
                    l1: k + 1,
                    p: spec.p,
                    t,
                    metric: "process_fidelity".into(),
                    value,
                })
                .collect())
        })
        .collect()
}

fn run_entropy_vs_d(spec: &ExperimentSpec) -> Vec<CellResult> {
    spec.d_values
        .par_iter()
        .map(|&dv| {
            let d = QuditDim::new(dv)?;
            let levels = levels_for(spec, d)?;
            let shape = RegisterShape::new(2, d)?;
            let bell = logical_bell(d, levels)?;
            let (p_en, q_en) = encoding_projectors(d, levels)?;
            let channel = Channel::from_model(spec.model, d, spec.p, vec![2])?;
            let states = evolve(&bell, shape, &channel, spec.steps)?;
            let series =
                entropy_productions(&states, &p_en, &q_en, SubspaceWeighting::Unnormalized)?;
            let mut rows = Vec::with_capacity(3 * (spec.steps + 1));
            for (metric, data) in [
                ("entropy_production_total", &series.ds_total),
                ("entropy_production_en", &series.ds_en),
                ("entropy_production_nonen", &series.ds_nonen),
            ] {
                for (t, &value) in data.iter().enumerate() {
                    rows.push(ResultRow {
                        experiment: spec.family.label(),
                        model: spec.model.label(),
                        d: dv,
                        l0: levels.l0(),
                        l1: levels.l1(),
                        p: spec.p,
                        t,
                        metric: metric.into(),
                        value,
                    });
                }
            }
            Ok(rows)
        })
        .collect()
}

fn run_kohlrausch_table(spec: &ExperimentSpec) -> Vec<CellResult> {
    // longer horizon than the fidelity families so the slowest curve (d=6)
    // still resolves its asymptote
    let steps = spec.steps.max(3600);
    spec.d_values
        .par_iter()
        .map(|&dv| {
            let d = QuditDim::new(dv)?;
            let levels = levels_for(spec, d)?;
            let curve = fidelity_curve(spec.model, d, levels, spec.p, steps)?;
            let series = FidelitySeries::from_values(curve)?;
            let k = fit(&series)?;
            let mk = |metric: &str, value: f64| ResultRow {
                experiment: spec.family.label(),
                model: spec.model.label(),
                d: dv,
                l0: levels.l0(),
                l1: levels.l1(),
                p: spec.p,
                t: 0,
                metric: metric.into(),
                value,
            };
            Ok(vec![
                mk("b", k.b),
                mk("tau", k.tau),
                mk("alpha", k.alpha),
                mk("sse", k.sse),
                mk("converged", if k.converged { 1.0 } else { 0.0 }),
            ])
        })
        .collect()
}

fn run_qec_compare(spec: &ExperimentSpec) -> Vec<CellResult> {
    let grid = spec.p_grid();
    spec.d_values
        .par_iter()
        .map(|&dv| {
            let d = QuditDim::new(dv)?;
            let mode = if dense_round_allowed(d) {
                QecMode::Dense
            } else {
                QecMode::Trajectory {
                    trajectories: spec.trajectories,
                    seed: spec.seed,
                }
            };
            let cells = compare_with_without(spec.model, d, &grid, &spec.taus, mode)?;
            let mut rows = Vec::with_capacity(cells.len() * 3);
            for cell in cells {
                let mk = |metric: &str, value: f64| ResultRow {
                    experiment: spec.family.label(),
                    model: spec.model.label(),
                    d: dv,
                    l0: 0,
                    l1: dv - 1,
                    p: cell.p,
                    t: cell.tau,
                    metric: metric.into(),
                    value,
                };
                rows.push(mk("fidelity_with_qec", cell.with_qec));
                rows.push(mk("fidelity_without_qec", cell.without_qec));
                rows.push(mk("uncorrectable_fraction", cell.uncorrectable_fraction));
            }
            Ok(rows)
        })
        .collect()
}

/// Runs one experiment. A failing sweep cell is recorded as a single row
/// with `metric = "error"` and NaN value (the message goes to stderr);
/// the other cells proceed.
pub fn run(spec: &ExperimentSpec) -> Vec<ResultRow> {
    let cells = match spec.family {
        Family::FidelityVsD => run_fidelity_vs_d(spec),
        Family::FidelityVsL1 => run_fidelity_vs_l1(spec),
        Family::FidelityShiftedPair => run_fidelity_shifted_pair(spec),
        Family::EntropyVsD => run_entropy_vs_d(spec),
        Family::KohlrauschTable => run_kohlrausch_table(spec),
        Family::QecCompare => run_qec_compare(spec),
    };
    let mut rows = Vec::new();
    for (i, cell) in cells.into_iter().enumerate() {
        match cell {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => {
                eprintln!("quditlab: cell {i} of {} failed: {e}", spec.family.label());
                rows.push(ResultRow {
                    experiment: spec.family.label(),
                    model: spec.model.label(),
                    d: 0,
                    l0: 0,
                    l1: 0,
                    p: spec.p,
                    t: i,
                    metric: "error".into(),
                    value: f64::NAN,
                });
            }
        }
    }
    rows
}

/// Whether any cell failed (drives the CLI's numerical-failure exit code).
pub fn has_errors(rows: &[ResultRow]) -> bool {
    rows.iter().any(|r| r.metric == "error")
}
