//! Energy functionals J, I, F^0, twisted Ding and Mabuchi, the approximating Ding
//! functional, and the identities and inequalities relating them.

mod checks;
mod family;
mod functionals;
mod probes;

pub use checks::{
    approximation_slack, cocycle_defect, first_variation_j, gauge_defect, interpolation_slack,
    j_background, jensen_gap, mabuchi_ding_bound, minimizer_check, path_identity, scaling_check,
    t_ding, variation_profile, BaseChange, CocycleDefects, MinimizerReport, PathPoint,
};
pub use family::{Member, PotentialFamily};
pub use functionals::{EnergyContext, EnergyEstimator, EnergyReport};
pub use probes::{alpha_probe, properness_scan, AlphaProbe, ProperScan, ScanPoint};
