//! Dual random-binning codes over `W^n`.
//!
//! A [`SchemeSpec`] fixes the single-letter chain and the rates; [`build_code`]
//! draws the two bin maps. The encoder draws `W^n` from the source-conditional
//! posterior inside the bin pair `(C, F)`, the decoder recovers it from `(C, F, Y^n)`,
//! and [`extract_and_fix_f`] pins the extra-randomness index to a good value.

mod code;
mod decode;
mod exact;
mod extract;
mod run;
pub(crate) mod scheme;

pub use code::{build_code, build_code_auto, common_hasher, extra_hasher, BinHasher, BinningCode, CodeMode, MAX_EXACT_SEQUENCES};
pub use decode::{sw_decode, Decoded, LAZY_DECODE_CAP};
pub use exact::{conditional_laws, law_axes, rb_joint_exact, rc_joint_exact, ConditionalLaws};
pub use extract::{extract_and_fix_f, extraction_divergence, window, ExtractionMode, ExtractionResult};
pub use run::{rc_run, rc_run_with, Resample, Trace, MAX_RESAMPLES};
pub use scheme::{bin_count, decode_index, encode_index, seq_axes, seq_count, Dims, SchemeSpec, Thresholds, COMMON_LABEL, EXTRA_LABEL};
