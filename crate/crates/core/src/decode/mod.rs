//! Majority-vote decoding and readout statistics.

mod ground;
mod histogram;
mod majority;
mod record;
mod samples;

pub use ground::{align_and_distance, ground_reference, hamming, MAX_GROUND_SEARCH_SPINS};
pub use histogram::{histogram_suite, DecodabilityCell, HistogramSuite, PositionErrors};
pub use majority::{majority_decode, MajorityDecoded};
pub use record::{domain_wall_profile, physical_hamming, Classifier, DecodedRecord};
pub use samples::{SampleRecord, SampleSet};
