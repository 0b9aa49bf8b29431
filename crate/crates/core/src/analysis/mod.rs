//! Analytical BER: ICI statistics, pairwise error probabilities and the
//! union bound.

mod ici;
mod pep;
mod union;

pub use ici::{awgn_ici_variance, conditional_ici_moments, IciStats};
pub use pep::{
    conditional_pep, pep_montecarlo, pep_series, ConditionalPep, FadingLink, McEstimate,
    PepConvention, ReFactorSeries, SeriesControls, SeriesOutcome, MIN_MC_SAMPLES, Q_APPROX_WEIGHTS,
    UPSILON_CLOSED_FORM,
};
pub use union::{
    union_bound_ber, AnalysisChannel, BoundMethod, PairProfiles, ProfileGroup, UnionBound,
};
