//! Exact transcript laws for small sequentially interactive protocols, the
//! channel functionals that bound them, and certifiers for each inequality.

mod checks;
mod functionals;
mod protocol;
mod random;
mod simulate;
mod transcript;

pub use checks::{
    assouad_inequality_check, check_cut_paste, check_theorem_main, measure_change_check, reachable_channels,
    AssouadCoordinate, AssouadRecord, BoundCheck, CutPasteRecord, Decoder, MeasureChangeRecord, TheoremRecord,
    TranscriptEstimator, MAX_THEOREM_K, SLACK,
};
pub use functionals::{info_functional, mutual_info_bits, var_functional};
pub use protocol::{ChannelRule, FixedRule, FnRule, Protocol, TabulatedRule};
pub use random::{random_instance, InstanceOptions, InstanceSpec, RandomInstance};
pub use simulate::{chi_square_pvalue, simulate_counts};
pub use transcript::{
    all_transcripts, avg_discrepancy, avg_discrepancy_from, enumerate, hellinger_sq, mixture_from, mixture_pm,
    transcript_dist, tv, tv_hellinger_ordered, TranscriptDist, DEFAULT_BUDGET,
};
