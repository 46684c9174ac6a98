//! Solves and analyses shared by the subcommands.

use conic_ma::energy::{
    alpha_probe, properness_scan, AlphaProbe, EnergyContext, EnergyEstimator, EnergyReport,
    PotentialFamily, ProperScan,
};
use conic_ma::metric::{
    c2_sandwich, convergence_study, graph_diameter, metric_density, radial_length, ricci_check,
    shortcut_test, ConformalMetric, ConvergenceReport, GraphNode, MetricGraph, RicciReport,
    Sandwich, ShortcutReport,
};
use conic_ma::regularization::{normalization_defect, RegularizedRhs};
use conic_ma::solver::{
    continuity_run, extrapolate_states, football_density, football_potential, is_football,
    Reference, SolveState, SolverConfig,
};
use conic_ma::sphere::{Density, ScalarField, SphereGrid};
use conic_ma::{EnergyError, MetricError, SolverError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::artifacts::{ArtifactError, GeodesicRow, TraceRow};
use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("energy evaluation failed: {0}")]
    Energy(#[from] EnergyError),
    #[error("metric analysis failed: {0}")]
    Metric(#[from] MetricError),
    #[error("artifact error: {0}")]
    Artifact(#[from] ArtifactError),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Artifact(_) => 1,
            _ => 2,
        }
    }
}

pub struct Lab {
    pub cfg: ExperimentConfig,
    pub grid: SphereGrid,
    pub rhs: RegularizedRhs,
}

/// One continuity path per delta, in sweep order.
pub struct Sweep {
    pub deltas: Vec<f64>,
    pub paths: Vec<Vec<SolveState>>,
}

impl Sweep {
    pub fn finals(&self) -> Vec<&SolveState> {
        self.paths
            .iter()
            .map(|p| p.last().expect("nonempty path"))
            .collect()
    }

    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.paths
            .iter()
            .flatten()
            .map(|s| TraceRow {
                delta: s.delta,
                t: s.t,
                residual: s.residual,
                lambda1: s.lambda1,
                iterations: s.iterations,
                margin: s.margin,
                phi_min: s.phi.min(),
                phi_max: s.phi.max(),
            })
            .collect()
    }
}

pub fn run_paths(
    grid: &SphereGrid,
    rhs: &RegularizedRhs,
    deltas: &[f64],
    solver: &SolverConfig,
) -> Result<Sweep, SolverError> {
    let paths: Vec<Result<Vec<SolveState>, SolverError>> = deltas
        .par_iter()
        .map(|&d| continuity_run(grid, rhs, d, solver))
        .collect();
    Ok(Sweep {
        deltas: deltas.to_vec(),
        paths: paths.into_iter().collect::<Result<_, _>>()?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialLength {
    pub cone: usize,
    pub beta: f64,
    pub r0: f64,
    pub length: f64,
}

/// Geometry of one solved omega_delta at t = mu.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaMetrics {
    pub delta: f64,
    pub c_delta: f64,
    pub c_gap: f64,
    pub normalization_defect: f64,
    pub volume: f64,
    pub ricci: Option<RicciReport>,
    pub ricci_error: Option<String>,
    pub sandwich: Sandwich,
    pub diameter: f64,
    pub radial: Vec<RadialLength>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceInfo {
    pub kind: String,
    /// sup over {r_lo <= |z| <= r_hi} of |extrapolated - closed form| (football only)
    pub extrapolation_error: Option<f64>,
    pub extrapolation_differences: Option<Vec<f64>>,
}

pub struct Analysis {
    pub reference: Reference,
    pub reference_info: ReferenceInfo,
    /// Delta extrapolation of the sweep, when there are cones and it succeeded.
    pub extrapolated: Option<ScalarField>,
    pub per_delta: Vec<DeltaMetrics>,
    pub convergence: ConvergenceReport,
}

/// Exact metrics used as oracles in the football configuration.
#[derive(Clone, Debug, Serialize)]
pub struct FootballOracle {
    pub beta: f64,
    pub radial: Vec<(f64, f64, f64)>,
    pub diameter: f64,
    pub diameter_oracle: f64,
    /// (eps, graph distance eps -> -eps, through length)
    pub graph_shortcut: Vec<(f64, f64, f64)>,
}

pub struct Geodesics {
    pub rows: Vec<GeodesicRow>,
    pub background_diameter: f64,
    pub shortcuts: Vec<ShortcutReport>,
    pub football: Option<FootballOracle>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyConstants {
    /// max |I / J - 2| over the family
    pub i_over_j_defect: f64,
    pub alpha: Option<AlphaProbe>,
    pub alpha_error: Option<String>,
    pub properness: ProperScan,
}

impl Lab {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, LabError> {
        let grid = cfg.grid()?;
        let twist = cfg.twist_spec()?;
        let rhs =
            RegularizedRhs::new(&grid, &twist).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(Lab { cfg, grid, rhs })
    }

    pub fn mu(&self) -> f64 {
        self.rhs.mu()
    }

    pub fn is_football(&self) -> bool {
        is_football(&self.grid, &self.rhs)
    }

    pub fn sweep(&self, deltas: &[f64]) -> Result<Sweep, LabError> {
        Ok(run_paths(&self.grid, &self.rhs, deltas, &self.cfg.solver)?)
    }

    pub fn family(&self) -> PotentialFamily {
        let e = &self.cfg.experiment;
        PotentialFamily::random(&self.grid, e.family_size, self.cfg.seed, e.margin)
    }

    /// Closed form for the football, the smooth solution without cones, otherwise extrapolation.
    /// Also returns the extrapolated potential when one was computed.
    pub fn reference(
        &self,
        sweep: &Sweep,
    ) -> Result<(Reference, ReferenceInfo, Option<ScalarField>), LabError> {
        let finals: Vec<SolveState> = sweep.finals().into_iter().cloned().collect();
        if !self.rhs.has_cones() {
            let phi = finals.last().expect("nonempty sweep").phi.clone();
            let info = ReferenceInfo {
                kind: "smooth".into(),
                extrapolation_error: None,
                extrapolation_differences: None,
            };
            return Ok((Reference::Smooth(phi), info, None));
        }
        let extrapolated = extrapolate_states(&self.grid, &finals);
        if self.is_football() {
            let exact = football_potential(&self.grid, self.grid.cones().cones[0].beta);
            let k = self.cfg.experiment.compact;
            let mask = self.grid.annulus_mask(k.r_lo, k.r_hi);
            let (err, diffs) = match &extrapolated {
                Ok(Reference::Extrapolated {
                    phi, differences, ..
                }) => {
                    let e = (0..self.grid.len())
                        .filter(|&i| mask[i])
                        .map(|i| (phi.values[i] - exact.values[i]).abs())
                        .fold(0.0, f64::max);
                    (Some(e), Some(differences.clone()))
                }
                _ => (None, None),
            };
            let info = ReferenceInfo {
                kind: "closed-form".into(),
                extrapolation_error: err,
                extrapolation_differences: diffs,
            };
            let extrapolated = extrapolated.ok().map(|r| r.phi().clone());
            return Ok((Reference::ClosedForm(exact), info, extrapolated));
        }
        let r = extrapolated?;
        let diffs = match &r {
            Reference::Extrapolated { differences, .. } => Some(differences.clone()),
            _ => None,
        };
        let info = ReferenceInfo {
            kind: "extrapolated".into(),
            extrapolation_error: None,
            extrapolation_differences: diffs,
        };
        let phi = r.phi().clone();
        Ok((r, info, Some(phi)))
    }

    fn polar_cones(&self) -> Vec<usize> {
        self.grid
            .cones()
            .cones
            .iter()
            .enumerate()
            .filter(|(i, c)| c.is_polar() && self.grid.zones()[*i].is_some())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn delta_metrics(&self, state: &SolveState) -> Result<DeltaMetrics, LabError> {
        let g = &self.grid;
        let (h, c_delta) = self
            .rhs
            .build(g, state.delta)
            .map_err(|e| LabError::Metric(MetricError::Regularization(e)))?;
        let rho = metric_density(g, &state.phi)?;
        let (ricci, ricci_error) = match ricci_check(g, &self.rhs, state) {
            Ok(r) => (Some(r), None),
            Err(e @ MetricError::Discrepancy(..)) => (None, Some(e.to_string())),
            Err(e) => return Err(e.into()),
        };
        let mut radial = Vec::new();
        for i in self.polar_cones() {
            let beta = g.cones().cones[i].beta;
            for &r0 in &self.cfg.experiment.radii {
                let l = radial_length(g, &rho, i, r0, state.delta)?;
                radial.push(RadialLength {
                    cone: i,
                    beta,
                    r0,
                    length: l.length,
                });
            }
        }
        Ok(DeltaMetrics {
            delta: state.delta,
            c_delta,
            c_gap: (c_delta - self.rhs.c).abs(),
            normalization_defect: normalization_defect(g, &h),
            volume: g.sum_weighted(&rho.0.values),
            sandwich: c2_sandwich(g, &self.rhs, &rho, state.delta)?,
            diameter: graph_diameter(g, &rho)?,
            ricci,
            ricci_error,
            radial,
        })
    }

    pub fn analyse(&self, sweep: &Sweep) -> Result<Analysis, LabError> {
        let (reference, reference_info, extrapolated) = self.reference(sweep)?;
        let finals = sweep.finals();
        let per_delta: Vec<Result<DeltaMetrics, LabError>> =
            finals.par_iter().map(|s| self.delta_metrics(s)).collect();
        let per_delta = per_delta.into_iter().collect::<Result<Vec<_>, _>>()?;
        let pairs: Vec<(f64, &ScalarField)> = finals.iter().map(|s| (s.delta, &s.phi)).collect();
        let convergence = convergence_study(
            &self.grid,
            &pairs,
            reference.phi(),
            self.cfg.experiment.compact,
        )?;
        Ok(Analysis {
            reference,
            reference_info,
            extrapolated,
            per_delta,
            convergence,
        })
    }

    fn football_oracle(&self) -> Result<Option<FootballOracle>, LabError> {
        if !self.is_football() {
            return Ok(None);
        }
        let g = &self.grid;
        let beta = g.cones().cones[0].beta;
        let rho = Density(football_density(g, beta));
        let scale = (2.0 / beta).sqrt();
        let mut radial = Vec::new();
        for &r0 in &self.cfg.experiment.radii {
            let l = radial_length(g, &rho, 0, r0, 0.0)?.length;
            radial.push((r0, l, scale * r0.powf(beta).atan()));
        }
        let graph = MetricGraph::new(g, &rho)?;
        let diameter = graph.diameter()?.0;
        let model = ConformalMetric::Football { beta };
        let mut graph_shortcut = Vec::new();
        for &eps in &self.cfg.experiment.eps {
            let Some(p) = nearest_node(g, eps) else {
                continue;
            };
            let q = g.index(g.row_of(p), (g.col_of(p) + g.n_phi() / 2) % g.n_phi());
            let d = graph.distance(GraphNode::Grid(p), GraphNode::Grid(q))?;
            let r = g.z(p).norm();
            let through = shortcut_test(r, model, f64::INFINITY)?.through;
            graph_shortcut.push((r, d, through));
        }
        Ok(Some(FootballOracle {
            beta,
            radial,
            diameter,
            diameter_oracle: std::f64::consts::PI * scale / 2.0,
            graph_shortcut,
        }))
    }

    pub fn geodesics(&self, analysis: &Analysis) -> Result<Geodesics, LabError> {
        let g = &self.grid;
        let mut rows = Vec::new();
        let fs = Density(ScalarField::constant(g.len(), 1.0));
        let background_diameter = graph_diameter(g, &fs)?;
        rows.push(GeodesicRow {
            kind: "diameter".into(),
            metric: "background".into(),
            delta: 0.0,
            beta: 1.0,
            param: 0.0,
            value: background_diameter,
            oracle: Some(std::f64::consts::PI / 2f64.sqrt()),
        });
        for m in &analysis.per_delta {
            let metric = format!("solved delta = {}", m.delta);
            rows.push(GeodesicRow {
                kind: "diameter".into(),
                metric: metric.clone(),
                delta: m.delta,
                beta: 1.0,
                param: 0.0,
                value: m.diameter,
                oracle: None,
            });
            for r in &m.radial {
                rows.push(GeodesicRow {
                    kind: "radial".into(),
                    metric: format!("{metric}, cone {}", r.cone),
                    delta: m.delta,
                    beta: r.beta,
                    param: r.r0,
                    value: r.length,
                    oracle: None,
                });
            }
        }
        let football = self.football_oracle()?;
        if let Some(f) = &football {
            rows.push(GeodesicRow {
                kind: "diameter".into(),
                metric: "football exact".into(),
                delta: 0.0,
                beta: f.beta,
                param: 0.0,
                value: f.diameter,
                oracle: Some(f.diameter_oracle),
            });
            for &(r0, l, o) in &f.radial {
                rows.push(GeodesicRow {
                    kind: "radial".into(),
                    metric: "football exact".into(),
                    delta: 0.0,
                    beta: f.beta,
                    param: r0,
                    value: l,
                    oracle: Some(o),
                });
            }
            for &(eps, d, through) in &f.graph_shortcut {
                rows.push(GeodesicRow {
                    kind: "shortcut_graph".into(),
                    metric: "football exact".into(),
                    delta: 0.0,
                    beta: f.beta,
                    param: eps,
                    value: d,
                    oracle: Some(through),
                });
            }
        }
        let r_max = g.r_overlap().min(0.5);
        let mut shortcuts = Vec::new();
        for &beta in &self.cfg.experiment.betas {
            for &eps in &self.cfg.experiment.eps {
                for metric in [
                    ConformalMetric::ModelCone { beta },
                    ConformalMetric::Football { beta },
                ] {
                    let s = shortcut_test(eps, metric, r_max)?;
                    for (kind, value) in [
                        ("shortcut_through", s.through),
                        ("shortcut_around", s.around),
                    ] {
                        rows.push(GeodesicRow {
                            kind: kind.into(),
                            metric: metric.label(),
                            delta: 0.0,
                            beta,
                            param: eps,
                            value,
                            oracle: None,
                        });
                    }
                    shortcuts.push(s);
                }
            }
        }
        Ok(Geodesics {
            rows,
            background_diameter,
            shortcuts,
            football,
        })
    }

    /// Energies and error estimates at every accepted state.
    pub fn energy_rows(&self, sweep: &Sweep) -> Result<Vec<EnergyReport>, LabError> {
        let est = EnergyEstimator::new(&self.grid, &self.rhs);
        let mu = self.mu();
        let states: Vec<&SolveState> = sweep.paths.iter().flatten().collect();
        let rows: Vec<Result<EnergyReport, EnergyError>> = states
            .par_iter()
            .map(|s| est.report(&s.phi, s.t, s.delta, mu))
            .collect();
        Ok(rows.into_iter().collect::<Result<_, _>>()?)
    }

    pub fn energy_constants(&self, family: &PotentialFamily) -> Result<EnergyConstants, LabError> {
        let ctx = EnergyContext::new(&self.grid, &self.rhs);
        let mut i_over_j_defect: f64 = 0.0;
        for m in &family.members {
            let (i, j) = (ctx.i(&m.phi)?, ctx.j(&m.phi)?);
            i_over_j_defect = i_over_j_defect.max((i / j - 2.0).abs());
        }
        let fields = family.fields();
        let (alpha, alpha_error) = if self.rhs.has_cones() {
            match alpha_probe(
                &ctx,
                &fields,
                &self.cfg.experiment.alphas,
                self.cfg.experiment.alpha_cap,
            ) {
                Ok(a) => (Some(a), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, Some("no cone points".into()))
        };
        let labelled: Vec<(String, ScalarField)> = family
            .members
            .iter()
            .map(|m| (m.label.clone(), m.phi.clone()))
            .collect();
        let properness = properness_scan(&ctx, &labelled, self.mu())?;
        Ok(EnergyConstants {
            i_over_j_defect,
            alpha,
            alpha_error,
            properness,
        })
    }
}

/// Node on the ray at angle 0 closest to |z| = r, if that row lies strictly inside the grid.
fn nearest_node(g: &SphereGrid, r: f64) -> Option<usize> {
    let target = r.ln();
    let j = (0..g.n_u())
        .min_by(|&a, &b| (g.u(a) - target).abs().total_cmp(&(g.u(b) - target).abs()))?;
    (j > 1 && j + 2 < g.n_u()).then(|| g.index(j, 0))
}
