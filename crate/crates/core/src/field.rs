//! Finite spectral representation of a vorticity field: the coefficients
//! `⟨ω, e_l⟩` for every `l` in `Λ_M`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{e_k, lambda_set, WaveVector};
use crate::error::{Error, Result};
use crate::torus::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    cutoff: u32,
    modes: Arc<Vec<WaveVector>>,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(cutoff: u32) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::invalid("cutoff", "spectral field needs M >= 1"));
        }
        let modes = Arc::new(lambda_set(cutoff));
        let coeffs = vec![0.0; modes.len()];
        Ok(Self {
            cutoff,
            modes,
            coeffs,
        })
    }

    /// Builds a field from coefficients ordered like `lambda_set(cutoff)`.
    pub fn from_vec(cutoff: u32, coeffs: Vec<f64>) -> Result<Self> {
        let mut f = Self::zeros(cutoff)?;
        if coeffs.len() != f.modes.len() {
            return Err(Error::Mismatch(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                f.modes.len()
            )));
        }
        f.coeffs = coeffs;
        Ok(f)
    }

    /// Builds a field from an explicit map whose keys must be exactly `Λ_M`.
    pub fn from_map(cutoff: u32, map: &BTreeMap<WaveVector, f64>) -> Result<Self> {
        let mut f = Self::zeros(cutoff)?;
        for (i, k) in f.modes.clone().iter().enumerate() {
            f.coeffs[i] = *map.get(k).ok_or(Error::MissingMode(*k))?;
        }
        if let Some(extra) = map.keys().find(|k| f.index_of(**k).is_none()) {
            return Err(Error::OutsideCutoff {
                mode: *extra,
                cutoff,
            });
        }
        Ok(f)
    }

    /// A field with one nonzero coefficient.
    pub fn single_mode(cutoff: u32, l: WaveVector, value: f64) -> Result<Self> {
        let mut f = Self::zeros(cutoff)?;
        f.set(l, value)?;
        Ok(f)
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn modes(&self) -> &[WaveVector] {
        &self.modes
    }

    pub fn shared_modes(&self) -> Arc<Vec<WaveVector>> {
        self.modes.clone()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn index_of(&self, l: WaveVector) -> Option<usize> {
        self.modes.binary_search(&l).ok()
    }

    pub fn get(&self, l: WaveVector) -> Result<f64> {
        self.index_of(l)
            .map(|i| self.coeffs[i])
            .ok_or(Error::MissingMode(l))
    }

    pub fn set(&mut self, l: WaveVector, value: f64) -> Result<()> {
        let i = self.index_of(l).ok_or(Error::OutsideCutoff {
            mode: l,
            cutoff: self.cutoff,
        })?;
        self.coeffs[i] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (WaveVector, f64)> + '_ {
        self.modes.iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Pointwise value `Σ_l ω̂_l e_l(x)`.
    pub fn eval(&self, x: Point) -> f64 {
        self.iter().map(|(l, c)| c * e_k(l, x)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn to_map(&self) -> BTreeMap<WaveVector, f64> {
        self.iter().collect()
    }
}

/// Serialisable view used in summary documents.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldRecord {
    pub cutoff: u32,
    pub coeffs: Vec<(WaveVector, f64)>,
}

impl From<&SpectralField> for FieldRecord {
    fn from(f: &SpectralField) -> Self {
        Self {
            cutoff: f.cutoff,
            coeffs: f.iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_key_is_an_error() {
        let mut map = BTreeMap::new();
        for k in lambda_set(1) {
            map.insert(k, 1.0);
        }
        assert!(SpectralField::from_map(1, &map).is_ok());
        map.remove(&WaveVector::of(0, 1));
        assert!(matches!(
            SpectralField::from_map(1, &map),
            Err(Error::MissingMode(_))
        ));
        map.insert(WaveVector::of(0, 1), 0.0);
        map.insert(WaveVector::of(2, 0), 0.0);
        assert!(matches!(
            SpectralField::from_map(1, &map),
            Err(Error::OutsideCutoff { .. })
        ));
    }

    #[test]
    fn get_and_set() {
        let mut f = SpectralField::zeros(2).unwrap();
        assert_eq!(f.len(), 12);
        f.set(WaveVector::of(1, 1), 3.0).unwrap();
        assert_eq!(f.get(WaveVector::of(1, 1)).unwrap(), 3.0);
        assert!(f.get(WaveVector::of(3, 0)).is_err());
        assert!(f.set(WaveVector::of(3, 0), 1.0).is_err());
    }
}
