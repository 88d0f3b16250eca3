//! Thermomajorization curves and the partial order they induce.
//!
//! The curve of a state is the piecewise-linear concave function through the
//! partial sums `(sum of w, sum of p)` taken in β-order. A state
//! thermomajorizes another when its curve lies nowhere below the other's.

use serde::{Deserialize, Serialize};

use crate::thermo::{beta_order, PopulationVector, ThermalSystem};
use crate::{Error, Result};

/// Slack used when comparing two curves; contact cases (the optimal-yield
/// constructions sit exactly on curve touching) must count as dominance.
pub const TOL_C: f64 = 1e-9;

/// Piecewise-linear concave curve given by its elbow points.
///
/// Elbows run from `(0, 0)` to `(Z, 1)`. A zero-weight level with positive
/// population contributes a vertical segment at `x = 0`; evaluation at a
/// repeated abscissa returns the upper value, which is the one that matters
/// for dominance comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoCurve {
    elbows: Vec<(f64, f64)>,
}

impl ThermoCurve {
    pub fn elbows(&self) -> &[(f64, f64)] {
        &self.elbows
    }

    /// Right end of the domain (the partition function).
    pub fn total_weight(&self) -> f64 {
        self.elbows.last().expect("curve has elbows").0
    }

    /// Evaluates the curve at `x` by linear interpolation between elbows.
    ///
    /// `x` must lie in `[0, Z]` up to a relative slack of `1e-9` (partial
    /// sums of the same weights taken in different orders may differ by a
    /// few ulps).
    pub fn eval(&self, x: f64) -> Result<f64> {
        let z = self.total_weight();
        let slack = 1e-9 * z.max(1.0);
        if !(-slack..=z + slack).contains(&x) {
            return Err(Error::CurveDomain { x, z });
        }
        let x = x.clamp(0.0, z);
        // last elbow with abscissa <= x; duplicates share an abscissa in
        // ascending y, so this picks the upper value of a vertical segment
        let idx = self.elbows.partition_point(|&(ex, _)| ex <= x);
        if idx == self.elbows.len() {
            return Ok(self.elbows[idx - 1].1);
        }
        let (x0, y0) = self.elbows[idx - 1];
        if x0 == x {
            return Ok(y0);
        }
        let (x1, y1) = self.elbows[idx];
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Builds the thermomajorization curve of `p` with respect to `system`.
pub fn build_curve(p: &PopulationVector, system: &ThermalSystem) -> Result<ThermoCurve> {
    let order = beta_order(p, system)?;
    let mut elbows = Vec::with_capacity(system.len() + 1);
    let mut x = 0.0;
    let mut y = 0.0;
    elbows.push((x, y));
    for &i in order.perm() {
        x += system.weight(i);
        y += p.get(i);
        elbows.push((x, y));
    }
    Ok(ThermoCurve { elbows })
}

/// Decides whether `p1` thermomajorizes `p2` on the given system.
///
/// Both curves are piecewise linear and concave, so dominance on the union
/// of their elbow abscissas implies dominance everywhere; comparisons carry
/// a slack of [`TOL_C`].
pub fn thermomajorizes(
    p1: &PopulationVector,
    p2: &PopulationVector,
    system: &ThermalSystem,
) -> Result<bool> {
    let c1 = build_curve(p1, system)?;
    let c2 = build_curve(p2, system)?;
    Ok(curve_dominates(&c1, &c2))
}

/// Elbow-wise dominance check used by [`thermomajorizes`].
pub fn curve_dominates(c1: &ThermoCurve, c2: &ThermoCurve) -> bool {
    let mut xs: Vec<f64> = c1
        .elbows()
        .iter()
        .chain(c2.elbows().iter())
        .map(|&(x, _)| x)
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("abscissas are finite"));
    xs.dedup();
    let z = c1.total_weight().min(c2.total_weight());
    xs.iter().all(|&x| {
        let x = x.min(z);
        let f1 = c1.eval(x).expect("x within both domains");
        let f2 = c2.eval(x).expect("x within both domains");
        f1 >= f2 - TOL_C
    })
}
