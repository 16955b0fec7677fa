use serde::{Deserialize, Serialize};

use crate::bspline::SplineDecomposition;
use crate::error::{invalid, Result};
use crate::partition::NestedStructure;

/// Scalar values `h_ξ` indexed by the nodes of a nested structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffSequence {
    pub values: Vec<f64>,
}

impl CoeffSequence {
    pub fn new(structure: &NestedStructure, values: Vec<f64>) -> Result<Self> {
        if values.len() != structure.len() {
            return Err(invalid(
                "values",
                format!("structure has {} indices, got {} values", structure.len(), values.len()),
            ));
        }
        Ok(Self { values })
    }

    pub fn zeros(structure: &NestedStructure) -> Self {
        Self { values: vec![0.0; structure.len()] }
    }

    /// Coefficients of a decomposition in the order of the partition's
    /// nested structure (level, then position).
    pub fn from_decomposition(dec: &SplineDecomposition) -> Self {
        Self { values: dec.iter().map(|(_, c)| c).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect() }
    }
}

/// `(Σ |h_ξ|^τ)^{1/τ}`, `τ > 0`; `τ = ∞` gives the maximum.
pub fn ltau_norm(h: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(invalid("tau", format!("must be positive, got {tau}")));
    }
    if tau.is_infinite() {
        return Ok(h.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    // scale by the maximum to keep small τ from overflowing
    let top = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = h.iter().map(|v| (v.abs() / top).powf(tau)).sum();
    Ok(top * s.powf(1.0 / tau))
}

/// `sup_ξ (Σ_{U_η ⊆ U_ξ} |h_η|^q |U_η| / |U_ξ|)^{1/q}` by one bottom-up pass;
/// `q = ∞` gives the maximum of `|h|`. Returns the value and the maximising
/// index (`None` for the zero sequence).
pub fn gq_norm_argmax(structure: &NestedStructure, h: &CoeffSequence, q: f64) -> Result<(f64, Option<usize>)> {
    if !(q > 0.0) {
        return Err(invalid("q", format!("must be positive, got {q}")));
    }
    if h.len() != structure.len() {
        return Err(invalid("h", format!("structure has {} indices, got {}", structure.len(), h.len())));
    }
    if q.is_infinite() {
        let mut best = (0.0, None);
        for (i, v) in h.values.iter().enumerate() {
            if v.abs() > best.0 {
                best = (v.abs(), Some(i));
            }
        }
        return Ok(best);
    }
    let nodes = structure.nodes();
    let mut acc: Vec<f64> = nodes.iter().zip(&h.values).map(|(n, v)| v.abs().powf(q) * n.u.len()).collect();
    // children always follow their parent in storage order
    for i in (0..nodes.len()).rev() {
        if let Some(p) = nodes[i].parent {
            acc[p] += acc[i];
        }
    }
    let mut best = (0.0, None);
    for (i, n) in nodes.iter().enumerate() {
        let v = (acc[i] / n.u.len()).powf(1.0 / q);
        if v > best.0 {
            best = (v, Some(i));
        }
    }
    Ok(best)
}

pub fn gq_norm(structure: &NestedStructure, h: &CoeffSequence, q: f64) -> Result<f64> {
    Ok(gq_norm_argmax(structure, h, q)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ltau_examples() {
        assert_eq!(ltau_norm(&[1.0], 0.5).unwrap(), 1.0);
        assert!((ltau_norm(&[3.0, 4.0], 2.0).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(ltau_norm(&[3.0, -4.0], f64::INFINITY).unwrap(), 4.0);
        assert!(ltau_norm(&[1.0], 0.0).is_err());
    }

    #[test]
    fn gq_examples() {
        let s = NestedStructure::dyadic(2);
        let mut h = CoeffSequence::zeros(&s);
        h.values[1] = 1.0;
        assert_eq!(gq_norm_argmax(&s, &h, 2.0).unwrap(), (1.0, Some(1)));
        // |U_ξ| = 1 with a child of length 1/2, both entries 1
        h.values[0] = 1.0;
        assert!((gq_norm(&s, &h, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(gq_norm(&s, &h, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(gq_norm(&s, &CoeffSequence::zeros(&s), 1.0).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn homogeneous_and_permutation_invariant(
            vals in prop::collection::vec(-5.0f64..5.0, 15),
            a in 0.01f64..10.0,
            tau in 0.3f64..3.0,
        ) {
            let s = NestedStructure::dyadic(4);
            let h = CoeffSequence::new(&s, vals.clone()).unwrap();
            let g = gq_norm(&s, &h, 1.0).unwrap();
            let ga = gq_norm(&s, &h.scaled(a), 1.0).unwrap();
            prop_assert!((ga - a * g).abs() <= 1e-12 * (a * g).max(1.0));
            let l = ltau_norm(&vals, tau).unwrap();
            let la = ltau_norm(&h.scaled(a).values, tau).unwrap();
            prop_assert!((la - a * l).abs() <= 1e-12 * (a * l).max(1.0));
            let mut rev = vals.clone();
            rev.reverse();
            prop_assert!((ltau_norm(&rev, tau).unwrap() - l).abs() <= 1e-12 * l.max(1.0));
        }
    }
}
