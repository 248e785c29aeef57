//! Extinction-time statistics for fast diffusion (`0 < m < 1`) and the sign
//! graph (`m = 0`): the discrete Sobolev constant, the probability bound,
//! empirical survival and the discounted-norm supermartingale.

mod report;
mod sobolev;

pub use report::{
    first_passage_time, first_passage_times, lemma_integrand, supermartingale_check, survival_curve, survival_from_times,
    theoretical_bound, uniform_grid, verify_extinction_bound, BoundVerdict, ExtinctionReport, ExtinctionSetup, ReportRow,
    SupermartingalePoint, SupermartingaleReport, SurvivalPoint, ThresholdVerdict, DEFAULT_EPS_FACTOR, REPORT_HEADER,
};
pub use sobolev::{dimension_condition, dimension_ok, estimate_cm, sobolev_ratio, CmEstimate, CM_SAFETY_FACTOR};
