//! Thermal systems, population vectors, β-orderings and the photoisomer
//! instance triple.
//!
//! Energies are stored dimensionless (in units of the inverse temperature)
//! and Gibbs weights are derived from them on construction, so the energy
//! vector is the log-space source of truth. A level at `f64::INFINITY`
//! carries weight exactly zero.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance for probability normalization checks.
pub const TOL_P: f64 = 1e-9;

/// Index of the cis ground level whose final population is the yield.
pub const YIELD_LEVEL: usize = 1;

/// A set of energy levels in contact with a heat bath at unit inverse
/// temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSystem {
    energies: Vec<f64>,
    weights: Vec<f64>,
    z: f64,
}

impl ThermalSystem {
    /// Builds a system from dimensionless level energies.
    ///
    /// Each energy must be a finite real or `+inf`; at least two levels are
    /// required and at least one energy must be finite so that `Z > 0`.
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::TooFewLevels(energies.len()));
        }
        for (index, &e) in energies.iter().enumerate() {
            if e.is_nan() || e == f64::NEG_INFINITY {
                return Err(Error::InvalidEnergy { index });
            }
        }
        // exp(-inf) is exactly 0, which is the defined weight of an
        // infinite-energy level.
        let weights: Vec<f64> = energies.iter().map(|&e| (-e).exp()).collect();
        let z: f64 = weights.iter().sum();
        if z <= 0.0 {
            return Err(Error::VanishingPartitionFunction);
        }
        Ok(Self {
            energies,
            weights,
            z,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Gibbs weights `w_i = exp(-E_i)`; they sum to the partition function.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Partition function `Z = sum_i exp(-E_i)`.
    pub fn partition_function(&self) -> f64 {
        self.z
    }

    /// The Gibbs state `w_i / Z`.
    pub fn gibbs_state(&self) -> PopulationVector {
        let probs = self.weights.iter().map(|w| w / self.z).collect();
        PopulationVector::new(probs).expect("Gibbs state is a valid distribution")
    }
}

/// A probability vector over the levels of a thermal system.
///
/// Construction clamps entries in `[-TOL_P, 0)` to zero and renormalizes,
/// so a stored vector is always non-negative with unit sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPopulation")]
pub struct PopulationVector {
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPopulation {
    probs: Vec<f64>,
}

impl TryFrom<RawPopulation> for PopulationVector {
    type Error = Error;

    fn try_from(raw: RawPopulation) -> Result<Self> {
        PopulationVector::new(raw.probs)
    }
}

impl PopulationVector {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        for (index, p) in probs.iter_mut().enumerate() {
            if p.is_nan() || *p < -TOL_P {
                return Err(Error::NegativePopulation {
                    index,
                    value: *p,
                    tol: TOL_P,
                });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if !((1.0 - TOL_P)..=(1.0 + TOL_P)).contains(&sum) {
            return Err(Error::UnnormalizedPopulation { sum, tol: TOL_P });
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Permutation of level indices sorting `p_i / w_i` in non-increasing order.
///
/// Zero-weight levels with positive population sort first (infinite ratio),
/// zero-weight unpopulated levels sort last; ties break by ascending index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BetaOrdering {
    perm: Vec<usize>,
}

impl BetaOrdering {
    /// Wraps an explicit permutation of `0..n`.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &i in &perm {
            if i >= n || seen[i] {
                return Err(Error::MalformedOrdering);
            }
            seen[i] = true;
        }
        Ok(Self { perm })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &i)| k == i)
    }
}

/// Sorting keys for the β-ordering: the ratio `p_i / w_i`, with `+inf` for
/// occupied zero-weight levels and `-inf` for unoccupied zero-weight levels
/// (which must sort after the finite ratios).
pub fn beta_ratios(p: &PopulationVector, system: &ThermalSystem) -> Result<Vec<f64>> {
    if p.len() != system.len() {
        return Err(Error::DimensionMismatch {
            expected: system.len(),
            got: p.len(),
        });
    }
    Ok(p.probs()
        .iter()
        .zip(system.weights())
        .map(|(&pi, &wi)| {
            if wi == 0.0 {
                if pi > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                pi / wi
            }
        })
        .collect())
}

/// Computes the β-ordering of `p` with respect to `system`.
pub fn beta_order(p: &PopulationVector, system: &ThermalSystem) -> Result<BetaOrdering> {
    let ratios = beta_ratios(p, system)?;
    let mut perm: Vec<usize> = (0..p.len()).collect();
    perm.sort_by(|&a, &b| {
        ratios[b]
            .partial_cmp(&ratios[a])
            .expect("ratios are never NaN")
            .then(a.cmp(&b))
    });
    Ok(BetaOrdering { perm })
}

/// One photoisomerization problem: cis-trans gap `delta`, photoexcited level
/// `w` (possibly infinite) and photoexcitation factor `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotoisomerInstance {
    delta: f64,
    w: f64,
    q: f64,
}

impl PhotoisomerInstance {
    pub fn new(delta: f64, w: f64, q: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::ParamOutOfRange {
                name: "delta",
                value: delta,
                range: "[0, inf)",
            });
        }
        if w.is_nan() || w < delta {
            return Err(Error::ParamOutOfRange {
                name: "w",
                value: w,
                range: "[delta, inf]",
            });
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::ParamOutOfRange {
                name: "q",
                value: q,
                range: "[0, 1]",
            });
        }
        Ok(Self { delta, w, q })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The three-level system `(0, delta, w)`.
    pub fn system(&self) -> ThermalSystem {
        ThermalSystem::new(vec![0.0, self.delta, self.w]).expect("instance energies are valid")
    }

    /// The four-level extension `(0, delta, w, w_prime)` with `w_prime >= w`.
    pub fn four_level_system(&self, w_prime: f64) -> Result<ThermalSystem> {
        if w_prime.is_nan() || w_prime < self.w {
            return Err(Error::ParamOutOfRange {
                name: "w_prime",
                value: w_prime,
                range: "[w, inf]",
            });
        }
        ThermalSystem::new(vec![0.0, self.delta, self.w, w_prime])
    }

    /// Post-photoexcitation populations `(1 - q, 0, q)`.
    pub fn initial_state(&self) -> PopulationVector {
        PopulationVector::new(vec![1.0 - self.q, 0.0, self.q])
            .expect("initial state is a valid distribution")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gibbs_weights_two_levels_with_dead_level() {
        let sys = ThermalSystem::new(vec![0.0, f64::INFINITY]).unwrap();
        assert_eq!(sys.weights(), &[1.0, 0.0]);
        assert_eq!(sys.partition_function(), 1.0);
        assert_eq!(sys.gibbs_state().probs(), &[1.0, 0.0]);
    }

    #[test]
    fn gibbs_weights_three_levels() {
        let sys = ThermalSystem::new(vec![0.0, 1.0, 3.0]).unwrap();
        let expected = [1.0, (-1.0f64).exp(), (-3.0f64).exp()];
        for (w, e) in sys.weights().iter().zip(expected.iter()) {
            assert_relative_eq!(w, e, max_relative = 1e-15);
        }
        // summation oracle for Z
        let z_direct: f64 = expected.iter().sum();
        assert_relative_eq!(sys.partition_function(), z_direct, max_relative = 1e-15);
        for (p, w) in sys.gibbs_state().probs().iter().zip(expected.iter()) {
            assert_relative_eq!(p, &(w / z_direct), max_relative = 1e-15);
        }
    }

    #[test]
    fn gibbs_state_symmetric_pair() {
        let sys = ThermalSystem::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(sys.gibbs_state().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_degenerate_systems() {
        assert!(matches!(
            ThermalSystem::new(vec![0.0]),
            Err(Error::TooFewLevels(1))
        ));
        assert!(matches!(
            ThermalSystem::new(vec![f64::INFINITY, f64::INFINITY]),
            Err(Error::VanishingPartitionFunction)
        ));
        assert!(matches!(
            ThermalSystem::new(vec![0.0, f64::NAN]),
            Err(Error::InvalidEnergy { index: 1 })
        ));
    }

    #[test]
    fn population_canonicalization() {
        let p = PopulationVector::new(vec![1.0 + 5e-10, -5e-10, 0.0]).unwrap();
        assert_eq!(p.get(1), 0.0);
        let sum: f64 = p.probs().iter().sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-15);

        assert!(PopulationVector::new(vec![1.0, -1e-6]).is_err());
        assert!(PopulationVector::new(vec![0.6, 0.6]).is_err());
    }

    #[test]
    fn beta_order_of_gibbs_is_identity() {
        for energies in [vec![0.0, 1.0, 3.0], vec![0.0, 0.5, f64::INFINITY]] {
            let sys = ThermalSystem::new(energies).unwrap();
            let order = beta_order(&sys.gibbs_state(), &sys).unwrap();
            assert!(order.is_identity());
        }
    }

    #[test]
    fn beta_order_excited_first_above_threshold() {
        let sys = ThermalSystem::new(vec![0.0, 1.0, 3.0]).unwrap();
        let p = PopulationVector::new(vec![0.5, 0.0, 0.5]).unwrap();
        // q e^W = 0.5 e^3 > 0.5 = 1 - q, so the excited level leads.
        assert_eq!(beta_order(&p, &sys).unwrap().perm(), &[2, 0, 1]);
    }

    #[test]
    fn beta_order_ground_first_below_threshold() {
        let w = 3.0f64;
        let q = 0.5 / (1.0 + w.exp()); // well below q_tilde
        let sys = ThermalSystem::new(vec![0.0, 1.0, w]).unwrap();
        let p = PopulationVector::new(vec![1.0 - q, 0.0, q]).unwrap();
        assert!(1.0 - q > q * w.exp());
        assert_eq!(beta_order(&p, &sys).unwrap().perm(), &[0, 2, 1]);
    }

    #[test]
    fn beta_order_zero_weight_levels() {
        let sys = ThermalSystem::new(vec![0.0, f64::INFINITY, f64::INFINITY]).unwrap();
        let p = PopulationVector::new(vec![0.7, 0.3, 0.0]).unwrap();
        // occupied dead level first, unoccupied dead level last
        assert_eq!(beta_order(&p, &sys).unwrap().perm(), &[1, 0, 2]);
    }

    #[test]
    fn instance_validation() {
        assert!(PhotoisomerInstance::new(1.0, 3.0, 0.5).is_ok());
        assert!(PhotoisomerInstance::new(1.0, f64::INFINITY, 0.0).is_ok());
        assert!(PhotoisomerInstance::new(-0.1, 3.0, 0.5).is_err());
        assert!(PhotoisomerInstance::new(2.0, 1.0, 0.5).is_err());
        assert!(PhotoisomerInstance::new(1.0, 3.0, 1.5).is_err());
        assert!(PhotoisomerInstance::new(f64::INFINITY, f64::INFINITY, 0.5).is_err());
    }

    #[test]
    fn initial_state_endpoints() {
        let inst = PhotoisomerInstance::new(1.0, 3.0, 1.0).unwrap();
        assert_eq!(inst.initial_state().probs(), &[0.0, 0.0, 1.0]);
        let inst = PhotoisomerInstance::new(1.0, 3.0, 0.0).unwrap();
        assert_eq!(inst.initial_state().probs(), &[1.0, 0.0, 0.0]);
    }
}
