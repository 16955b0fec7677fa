//! Frozen equivalence constants.
//!
//! The values are produced by [`crate::calibration::calibrate`] and stored in
//! `data/constants_v1.json`. Tests compare fresh measurements against them
//! with [`HEADROOM`]: an upper constant `C` accepts `measured ≤ HEADROOM·C`
//! and an interval `[lo, hi]` accepts `lo/HEADROOM ≤ r ≤ HEADROOM·hi`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const CONSTANTS_VERSION: u32 = 1;
pub const HEADROOM: f64 = 1.5;

const FROZEN_V1: &str = include_str!("../data/constants_v1.json");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauConstant {
    pub tau: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub version: u32,
    pub headroom: f64,
    /// Largest `E_k(f, J)_q / ω_k(f, J)_q`.
    pub whitney_reverse: f64,
    /// Range of `‖f‖_{B(Q)} / ‖f‖_{B(E)}`.
    pub besov_q_over_e: [f64; 2],
    /// Range of `‖f‖_{B(mod)} / ‖f‖_{B(E)}`.
    pub besov_modulus_over_e: [f64; 2],
    /// Largest `σ_n(f)_BMO n^α / ‖f‖_{B(E)}`.
    pub jackson_normalized: f64,
    /// Largest `‖g‖_{B(E)} / (n^α ‖g‖_BMO)` over random n-term splines.
    pub bernstein_ratio: f64,
    /// Largest `σ_n(h)_{g^1} n^{1/τ} / ‖h‖_{ℓ^τ}`.
    pub sequence_jackson: f64,
    /// Allowed greedy/oracle ratio in `g^1`.
    pub greedy_oracle_factor: f64,
    pub greedy_oracle_measured: f64,
    /// Largest `‖g‖_BMO / ‖b‖_{ℓ^τ}` per `τ`.
    pub embedding_ltau: Vec<TauConstant>,
    /// Largest `‖g‖_BMO / ‖b‖_{g^1}`.
    pub embedding_gq: f64,
    /// Largest `‖f‖_{BMO_2} / ‖f‖_{BMO_1}`.
    pub john_nirenberg: f64,
    /// Largest `|I|^{−1}‖f‖_{L^1(I)} / ‖f‖_BMO` for `f` vanishing off `I`.
    pub l1_bmo: f64,
    /// Range of the stable-basis ratio with `p = τ = 2`.
    pub stable_basis: [f64; 2],
    /// Largest ratio between normalized `L^p(J)` norms of a polynomial of
    /// degree at most 3, `p ∈ {1, 2, ∞}`.
    pub poly_norm: f64,
    /// Largest `|J|‖P′‖_{L^1(J)} / ‖P‖_{L^1(J)}` for degree at most 3.
    pub markov_l1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl Constants {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.version != CONSTANTS_VERSION {
            return Err(invalid("version", format!("expected {CONSTANTS_VERSION}, found {}", c.version)));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn embedding_ltau(&self, tau: f64) -> Option<f64> {
        self.embedding_ltau.iter().find(|c| c.tau == tau).map(|c| c.value)
    }

    pub fn within_upper(&self, measured: f64, frozen: f64) -> bool {
        measured <= self.headroom * frozen
    }

    pub fn within_range(&self, measured: f64, frozen: [f64; 2]) -> bool {
        frozen[0] / self.headroom <= measured && measured <= self.headroom * frozen[1]
    }
}

/// The constants shipped with this build.
pub fn frozen() -> &'static Constants {
    static C: OnceLock<Constants> = OnceLock::new();
    C.get_or_init(|| Constants::from_json(FROZEN_V1).expect("bundled constants parse"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_parses_and_is_sane() {
        let c = frozen();
        assert_eq!(c.headroom, HEADROOM);
        assert!(c.besov_q_over_e[0] > 0.0 && c.besov_q_over_e[0] <= c.besov_q_over_e[1]);
        assert!(c.greedy_oracle_factor >= c.greedy_oracle_measured);
        for tau in [0.5, 1.0, 2.0] {
            assert!(c.embedding_ltau(tau).is_some());
        }
        let back = Constants::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(&back, c);
    }

    #[test]
    fn headroom_checks() {
        let c = frozen();
        assert!(c.within_upper(1.4, 1.0));
        assert!(!c.within_upper(1.6, 1.0));
        assert!(c.within_range(0.7, [1.0, 2.0]));
        assert!(!c.within_range(0.6, [1.0, 2.0]));
        assert!(!c.within_range(3.1, [1.0, 2.0]));
    }
}
