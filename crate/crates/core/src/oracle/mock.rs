//! Deterministic stand-in scores: a stable hash of (canonical SMILES,
//! property letter) mapped into the property's range.

use std::collections::BTreeSet;

use crate::fingerprint::{fnv1a64, mix64};
use crate::propmodel::{PropertyId, PropertyVector};

/// Letters the mock scorer answers for: the six defaults plus SAS.
pub const MOCK_PROPERTIES: &str = "BDHMPQS";

/// Value range used for a property letter.
pub fn mock_range(id: PropertyId) -> (f64, f64) {
    match id {
        PropertyId::PLOGP => (-10.0, 4.0),
        PropertyId::SAS => (1.0, 10.0),
        _ => (0.0, 1.0),
    }
}

/// Score of one canonical molecule on one property.
pub fn mock_score(canonical: &str, id: PropertyId) -> f64 {
    let mut key = Vec::with_capacity(canonical.len() + 2);
    key.extend_from_slice(canonical.as_bytes());
    key.push(b'\t');
    key.push(id.letter() as u8);
    let unit = (mix64(fnv1a64(&key)) >> 11) as f64 / (1u64 << 53) as f64;
    let (lo, hi) = mock_range(id);
    lo + unit * (hi - lo)
}

pub fn mock_vector(canonical: &str, props: &BTreeSet<PropertyId>) -> PropertyVector {
    props.iter().map(|&p| (p, mock_score(canonical, p))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_in_range() {
        for s in ["CCO", "c1ccccc1", "CC(=O)Nc1ccc(O)cc1"] {
            for c in MOCK_PROPERTIES.chars() {
                let id = PropertyId::new(c).unwrap();
                let v = mock_score(s, id);
                let (lo, hi) = mock_range(id);
                assert!(v >= lo && v < hi);
                assert_eq!(v, mock_score(s, id));
            }
        }
        assert_ne!(mock_score("CCO", PropertyId::QED), mock_score("CCN", PropertyId::QED));
    }
}
