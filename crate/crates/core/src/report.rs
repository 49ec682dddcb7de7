//! Versioned JSON report types and CSV table helpers.
//!
//! Every run emits a report whose header carries the schema version, the
//! seed, the grid resolution, and the frozen constants in force, so a
//! stored report is self-describing. Serialization goes through serde_json
//! with struct-ordered fields and shortest-round-trip floats: two runs with
//! the same inputs produce byte-identical files.

use crate::field::CylinderState;
use crate::fueter::{EnergyIdentity, FueterProblem};
use crate::hyperkahler::{frame, xi_norm};
use crate::solver::NewtonHistory;
use crate::{estimates::EstimateReport, Error, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Bumped whenever a field changes meaning or layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportHeader {
    pub schema_version: u32,
    /// Producing tool and version.
    pub tool: String,
    /// RNG seed for runs that sample; absent for deterministic checks.
    pub seed: Option<u64>,
    /// Human-readable grid resolution.
    pub resolution: Option<String>,
    /// Named constants the run treated as frozen (sorted by name).
    pub frozen_constants: BTreeMap<String, f64>,
}

impl ReportHeader {
    pub fn new() -> Self {
        ReportHeader {
            schema_version: SCHEMA_VERSION,
            tool: format!("crpslab {}", env!("CARGO_PKG_VERSION")),
            seed: None,
            resolution: None,
            frozen_constants: BTreeMap::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_resolution(mut self, resolution: impl Into<String>) -> Self {
        self.resolution = Some(resolution.into());
        self
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.frozen_constants.insert(name.to_string(), value);
        self
    }
}

impl Default for ReportHeader {
    fn default() -> Self {
        ReportHeader::new()
    }
}

/// A batch of inequality checks under one header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub header: ReportHeader,
    pub all_pass: bool,
    pub reports: Vec<EstimateReport>,
}

impl EstimateBundle {
    pub fn new(header: ReportHeader, reports: Vec<EstimateReport>) -> Self {
        let all_pass = reports.iter().all(|r| r.pass);
        EstimateBundle {
            header,
            all_pass,
            reports,
        }
    }
}

/// Outcome of a boundary-value solve: Newton trajectory, the integrated
/// energy identity, and the field diagnostics that the confinement
/// hypotheses care about.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub header: ReportHeader,
    pub residual_rms: Vec<f64>,
    pub matvecs: usize,
    pub converged: bool,
    pub energy: EnergyIdentity,
    /// sup over nodes of the fiber norm |p|_g.
    pub sup_momentum_norm: f64,
    /// Minimum eigenvalue of the feature metric G over sampled nodes.
    pub min_metric_eigenvalue: f64,
}

impl ConvergenceReport {
    pub fn collect(
        header: ReportHeader,
        prob: &FueterProblem,
        state: &CylinderState,
        history: &NewtonHistory,
    ) -> Result<Self> {
        let energy = prob.energy_identity(state)?;
        let (sup_momentum_norm, min_metric_eigenvalue) = field_diagnostics(prob, state)?;
        Ok(ConvergenceReport {
            header,
            residual_rms: history.rms_history.clone(),
            matvecs: history.matvecs,
            converged: history.converged,
            energy,
            sup_momentum_norm,
            min_metric_eigenvalue,
        })
    }
}

/// One amplitude rung of a perturbation sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRung {
    /// Sampled first-derivative norm of the perturbation.
    pub c1: f64,
    /// Measured sup Φ = ½ sup |p|² on the solved state.
    pub sup_phi: f64,
    /// Budget C∞ · α^(3/5) · c1^(2/5) at the frozen constant.
    pub budget: f64,
    pub within_budget: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub header: ReportHeader,
    /// The constant the budgets were evaluated with.
    pub c_infty: f64,
    /// Whether c_infty was fitted on the first rung of this very run
    /// (as opposed to passed in frozen).
    pub calibrated_on_first_rung: bool,
    pub rungs: Vec<SweepRung>,
    /// sup Φ decreases along the rungs.
    pub monotone: bool,
    pub all_within_budget: bool,
}

/// Outcome of a harmonic-map heat flow run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowReport {
    pub header: ReportHeader,
    pub steps: usize,
    pub converged: bool,
    pub tension_sup: f64,
    pub dirichlet_energy: f64,
    pub energy_history: Vec<f64>,
    /// Euler–Lagrange residual of the lifted momentum section.
    pub lift_residual_sup: f64,
}

/// Evenly spaced sample indices, always including both endpoints.
fn stride_indices(len: usize, max_count: usize) -> Vec<usize> {
    if len <= max_count {
        return (0..len).collect();
    }
    let step = len.div_ceil(max_count);
    let mut out: Vec<usize> = (0..len).step_by(step).collect();
    if *out.last().unwrap() != len - 1 {
        out.push(len - 1);
    }
    out
}

/// sup |p|_g over all nodes and the minimum eigenvalue of the feature
/// metric G over a deterministic node subsample (the metric varies slowly,
/// so a 17-per-axis sample bounds it well; the sup is exact).
pub fn field_diagnostics(prob: &FueterProblem, state: &CylinderState) -> Result<(f64, f64)> {
    let chart = prob.ham.chart;
    let d = 2 * state.n;
    let mut sup_p = 0.0f64;
    for js in 0..state.ns {
        for iy in 0..state.ny {
            for ix in 0..state.nx {
                let node = state.node(js, ix, iy);
                let q = node.rows(0, d).into_owned();
                let p = node.rows(d, d).into_owned();
                sup_p = sup_p.max(xi_norm(&chart, &q, &p));
            }
        }
    }

    let mut min_eig = f64::INFINITY;
    for &js in &stride_indices(state.ns, 17) {
        for &iy in &stride_indices(state.ny, 17) {
            for &ix in &stride_indices(state.nx, 17) {
                let node = state.node(js, ix, iy);
                let q = node.rows(0, d).into_owned();
                let p = node.rows(d, d).into_owned();
                let f = frame(&chart, &q, &p)?;
                let eigs = nalgebra::SymmetricEigen::new(f.metric.clone()).eigenvalues;
                min_eig = min_eig.min(eigs.min());
            }
        }
    }
    Ok((sup_p, min_eig))
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Snapshot(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Snapshot(format!("report parse: {e}")))
}

/// Renders a numeric table as CSV with shortest-round-trip floats.
pub fn csv_table(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}
