//! Computable estimators for BMO, the local-polynomial BMO variant, three
//! Besov norms and the sequence norms `ℓ^τ` and `g^q`.

mod besov;
mod bmo;
mod sequence;

pub use self::besov::{
    besov_norm_e, besov_norm_e_sampled, besov_norm_modulus, besov_norm_q, bmo_qk_norm, local_errors_sampled,
    modulus_scales, BesovNorm, BesovVariant,
};
pub use self::bmo::{bmo_family, bmo_norm, bmo_norm_sampled, BmoEstimate};
pub use self::sequence::{gq_norm, gq_norm_argmax, ltau_norm, CoeffSequence};
