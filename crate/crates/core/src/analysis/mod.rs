//! Validation instruments: restricted-isometry estimates, recovery and
//! error bounds, the block pseudoinverse identity, metrics and resource
//! accounting.

pub mod bounds;
pub mod instances;
pub mod metrics;
pub mod naive;
pub mod pinv;
pub mod resources;
pub mod rip;

pub use bounds::{
    amplitude_bound, recovery_conditions, segment_theorem1, theorem1_bounds, theorem4_bounds, AmplitudeBound, Leak, NoiseBounds,
    RecoveryConditions,
};
pub use metrics::{metrics, MetricsReport};
pub use naive::{naive_segmentation_diagnostic, NaiveReport};
pub use pinv::{direct_pinv, partitioned_pinv, partitioned_pinv_expanded, two_block_pinv};
pub use resources::{format_binary, resource_accounting, ResourceAccount};
pub use rip::{lemma1_checks, rip_bruteforce, rip_sampled, RipEstimate, RipMethod, RipTable};
