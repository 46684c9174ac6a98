//! Experiment driver: config parsing, solves, checks and versioned artifacts.

pub mod artifacts;
pub mod checks;
pub mod config;
pub mod pipeline;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use conic_ma::energy::EnergyReport;
use conic_ma::metric::{fit_envelope, ConvergenceReport};
use conic_ma::solver::Reference;
use serde::Serialize;

use artifacts::{
    write_csv, write_json, write_json_compact, ArtifactError, VerifyDoc, CONVERGENCE,
    CONVERGENCE_SCHEMA, ENERGIES, ENERGIES_SCHEMA, EXTRAPOLATED, GEODESICS, GEODESICS_SCHEMA,
    SUMMARY, SUMMARY_SCHEMA, TRACE, TRACE_SCHEMA, VERIFY,
};
use checks::OrderData;
use config::ExperimentConfig;
use pipeline::{Analysis, DeltaMetrics, EnergyConstants, Lab, LabError, ReferenceInfo, Sweep};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CONIC_MA_LAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Energies,
    Geodesics,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Energies => "energies",
            Command::Geodesics => "geodesics",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridInfo {
    pub n: usize,
    pub n_u: usize,
    pub nodes: usize,
    pub depth: f64,
    pub r_overlap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FinalState {
    pub delta: f64,
    pub t: f64,
    pub residual: f64,
    pub steps: usize,
    pub phi_min: f64,
    pub phi_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricConstants {
    pub c1_min: f64,
    pub c2_max: f64,
    pub diameters: Vec<f64>,
    pub convergence_rate: Option<f64>,
    /// (cone, C) with L(r0) <= C r0^beta / beta on the smallest delta
    pub envelope: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckCounts {
    pub passed: usize,
    pub failed: usize,
    pub all_enabled_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub command: &'static str,
    pub config: BTreeMap<String, String>,
    pub grid: GridInfo,
    pub mu: f64,
    pub s: f64,
    pub c: f64,
    pub deltas: Vec<f64>,
    pub finals: Vec<FinalState>,
    pub reference: Option<String>,
    pub energy: Option<EnergyConstants>,
    pub metric: Option<MetricConstants>,
    pub checks: Option<CheckCounts>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceDoc {
    pub schema: &'static str,
    pub reference: ReferenceInfo,
    pub c: f64,
    pub study: ConvergenceReport,
    pub per_delta: Vec<DeltaMetrics>,
    pub envelope: Vec<(usize, f64)>,
    pub order: Option<OrderData>,
}

/// What a run produced, for the exit code.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub verify: Option<VerifyDoc>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match &self.verify {
            Some(v) if !v.all_enabled_pass() => 3,
            _ => 0,
        }
    }
}

fn envelope(per_delta: &[DeltaMetrics]) -> Vec<(usize, f64)> {
    let Some(last) = per_delta.last() else {
        return Vec::new();
    };
    let mut cones: Vec<(usize, f64)> = last.radial.iter().map(|r| (r.cone, r.beta)).collect();
    cones.dedup();
    cones
        .into_iter()
        .map(|(i, beta)| {
            let s: Vec<(f64, f64)> = last
                .radial
                .iter()
                .filter(|r| r.cone == i)
                .map(|r| (r.r0, r.length))
                .collect();
            (i, fit_envelope(&s, beta))
        })
        .collect()
}

/// Potential tested as the minimizer of the Ding functional. An extrapolated reference is
/// only valid on its mask, so the smallest-delta solution stands in for it.
fn minimizer_candidate<'a>(a: &'a Analysis, sweep: &'a Sweep) -> &'a conic_ma::sphere::ScalarField {
    match &a.reference {
        Reference::Extrapolated { .. } => &sweep.finals().last().expect("nonempty sweep").phi,
        r => r.phi(),
    }
}

fn metric_constants(a: &Analysis) -> MetricConstants {
    let pd = &a.per_delta;
    MetricConstants {
        c1_min: pd
            .iter()
            .map(|m| m.sandwich.c1)
            .fold(f64::INFINITY, f64::min),
        c2_max: pd.iter().map(|m| m.sandwich.c2).fold(0.0, f64::max),
        diameters: pd.iter().map(|m| m.diameter).collect(),
        convergence_rate: a.convergence.rate,
        envelope: envelope(pd),
    }
}

fn summary(lab: &Lab, command: Command, sweep: &Sweep) -> Summary {
    let g = &lab.grid;
    Summary {
        schema: SUMMARY_SCHEMA,
        command: command.name(),
        config: lab.cfg.entries.clone(),
        grid: GridInfo {
            n: g.n_phi(),
            n_u: g.n_u(),
            nodes: g.len(),
            depth: lab.cfg.geometry.depth,
            r_overlap: g.r_overlap(),
        },
        mu: lab.mu(),
        s: lab.rhs.twist.s,
        c: lab.rhs.c,
        deltas: sweep.deltas.clone(),
        finals: sweep
            .paths
            .iter()
            .map(|p| {
                let s = p.last().expect("nonempty path");
                FinalState {
                    delta: s.delta,
                    t: s.t,
                    residual: s.residual,
                    steps: p.len(),
                    phi_min: s.phi.min(),
                    phi_max: s.phi.max(),
                }
            })
            .collect(),
        reference: None,
        energy: None,
        metric: None,
        checks: None,
    }
}

fn ensure_dir(dir: &Path) -> Result<(), ArtifactError> {
    std::fs::create_dir_all(dir).map_err(|source| ArtifactError::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Output directory: `--out`, then `output.dir`, then `out`.
pub fn resolve_out(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn run(
    command: Command,
    cfg: ExperimentConfig,
    out: Option<&Path>,
) -> Result<Outcome, LabError> {
    let dir = resolve_out(&cfg, out);
    let lab = Lab::new(cfg)?;
    ensure_dir(&dir)?;
    let all = lab.cfg.solver.deltas.clone();
    let deltas = match command {
        Command::Solve => vec![*all.last().expect("validated delta list")],
        _ => all,
    };
    let sweep = lab.sweep(&deltas)?;
    write_csv(&dir.join(TRACE), TRACE_SCHEMA, &sweep.trace_rows())?;
    let mut sum = summary(&lab, command, &sweep);
    if command == Command::Solve {
        write_json(&dir.join(SUMMARY), &sum)?;
        return Ok(Outcome {
            out_dir: dir,
            verify: None,
        });
    }

    let mut verify_checks = Vec::new();
    let wants_energy = matches!(command, Command::Energies | Command::Verify);
    let wants_metric = matches!(
        command,
        Command::Sweep | Command::Geodesics | Command::Verify
    );

    let analysis = if wants_metric {
        Some(lab.analyse(&sweep)?)
    } else {
        None
    };

    if wants_energy {
        let rows: Vec<EnergyReport> = lab.energy_rows(&sweep)?;
        write_csv(&dir.join(ENERGIES), ENERGIES_SCHEMA, &rows)?;
        let family = lab.family();
        let constants = lab.energy_constants(&family)?;
        if command == Command::Verify {
            let a = analysis.as_ref().expect("verify runs the analysis");
            verify_checks.extend(checks::solver_checks(&lab, &sweep));
            verify_checks.extend(checks::energy_checks(
                &lab,
                &sweep,
                &family,
                minimizer_candidate(a, &sweep),
                constants.i_over_j_defect,
            )?);
        }
        sum.energy = Some(constants);
    }

    if let Some(a) = &analysis {
        let order = if command == Command::Verify
            && lab.cfg.experiment.order_checks
            && checks::order_checks_possible(&lab.grid)
        {
            Some(checks::order_data(&lab, &sweep)?)
        } else {
            None
        };
        let doc = ConvergenceDoc {
            schema: CONVERGENCE_SCHEMA,
            reference: a.reference_info.clone(),
            c: lab.rhs.c,
            study: a.convergence.clone(),
            per_delta: a.per_delta.clone(),
            envelope: envelope(&a.per_delta),
            order: order.clone(),
        };
        write_json(&dir.join(CONVERGENCE), &doc)?;
        if let Some(phi) = &a.extrapolated {
            let field = lab
                .grid
                .to_document(phi)
                .map_err(|e| ArtifactError::Format {
                    path: EXTRAPOLATED.into(),
                    msg: e.to_string(),
                })?;
            write_json_compact(&dir.join(EXTRAPOLATED), &field)?;
        }
        sum.reference = Some(a.reference_info.kind.clone());
        sum.metric = Some(metric_constants(a));
        if command == Command::Verify {
            verify_checks.extend(checks::analysis_checks(&lab, a, order.as_ref()));
        }
        if matches!(command, Command::Geodesics | Command::Verify) {
            let geo = lab.geodesics(a)?;
            write_csv(&dir.join(GEODESICS), GEODESICS_SCHEMA, &geo.rows)?;
            if command == Command::Verify {
                verify_checks.extend(checks::geodesic_checks(&geo));
            }
        }
    }

    let verify = if command == Command::Verify {
        let doc = VerifyDoc::new(verify_checks);
        write_json(&dir.join(VERIFY), &doc)?;
        sum.checks = Some(CheckCounts {
            passed: doc.passed,
            failed: doc.failed,
            all_enabled_pass: doc.all_enabled_pass(),
        });
        Some(doc)
    } else {
        None
    };
    write_json(&dir.join(SUMMARY), &sum)?;
    Ok(Outcome {
        out_dir: dir,
        verify,
    })
}
