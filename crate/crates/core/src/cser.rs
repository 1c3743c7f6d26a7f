//! Serde adapters storing complex vectors as `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CVec;

pub fn to_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

pub fn from_pairs(p: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(p.len(), p.iter().map(|&[re, im]| Complex64::new(re, im)))
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let p = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(from_pairs(&p))
    }
}

pub mod vecs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CVec], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(to_pairs).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVec>, D::Error> {
        let p = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(p.iter().map(|v| from_pairs(v)).collect())
    }
}
