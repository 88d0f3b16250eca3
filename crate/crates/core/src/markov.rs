//! Two-level thermalizations, the closed-form curves of the two-step
//! relaxation path, and a search-based reachability check for continuous
//! thermomajorization.
//!
//! A full thermalization of a level pair replaces the pair's populations by
//! their Gibbs-conditional shares; a Markovian thermal process is realized
//! by a sequence of such (possibly partial) steps. The search below is a
//! one-sided certificate: a positive answer comes with a replayable witness,
//! a negative answer only means nothing was found at the given resolution.

use serde::{Deserialize, Serialize};

use crate::thermo::{BetaOrdering, PhotoisomerInstance, PopulationVector, ThermalSystem, YIELD_LEVEL};
use crate::{Error, Result};

/// Reachability tolerance in L1 distance; one order below the coarsest
/// yield comparisons downstream.
pub const TOL_R: f64 = 1e-3;

/// One partial thermalization: the level pair and the mixing weight
/// (`lambda = 1` is a full thermalization).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalizationStep {
    pub pair: (usize, usize),
    pub lambda: f64,
}

/// Fully thermalizes the pair `(i, j)`: both populations move to their
/// Gibbs-conditional shares of the pair total.
pub fn full_thermalization(
    p: &PopulationVector,
    i: usize,
    j: usize,
    system: &ThermalSystem,
) -> Result<PopulationVector> {
    if p.len() != system.len() {
        return Err(Error::DimensionMismatch {
            expected: system.len(),
            got: p.len(),
        });
    }
    let n = system.len();
    if i == j || i >= n || j >= n {
        return Err(Error::BadThermalizationPair {
            i,
            j,
            reason: "indices must be distinct levels",
        });
    }
    let (wi, wj) = (system.weight(i), system.weight(j));
    let wsum = wi + wj;
    if wsum <= 0.0 {
        return Err(Error::BadThermalizationPair {
            i,
            j,
            reason: "both Gibbs weights vanish",
        });
    }
    let total = p.get(i) + p.get(j);
    let mut probs = p.probs().to_vec();
    probs[i] = total * wi / wsum;
    probs[j] = total * wj / wsum;
    PopulationVector::new(probs)
}

/// Convex interpolation between the identity and a full thermalization.
pub fn partial_thermalization(
    p: &PopulationVector,
    i: usize,
    j: usize,
    lambda: f64,
    system: &ThermalSystem,
) -> Result<PopulationVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::ParamOutOfRange {
            name: "lambda",
            value: lambda,
            range: "[0, 1]",
        });
    }
    let full = full_thermalization(p, i, j, system)?;
    let probs = p
        .probs()
        .iter()
        .zip(full.probs())
        .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
        .collect();
    PopulationVector::new(probs)
}

/// Replays a sequence of steps from `p0`.
pub fn replay(
    p0: &PopulationVector,
    steps: &[ThermalizationStep],
    system: &ThermalSystem,
) -> Result<PopulationVector> {
    let mut p = p0.clone();
    for step in steps {
        p = partial_thermalization(&p, step.pair.0, step.pair.1, step.lambda, system)?;
    }
    Ok(p)
}

/// The two admissible full-thermalization sequences that move the yield
/// level from last to first in a three-level β-ordering.
///
/// Adjacent transpositions must alternate between the two available pairs,
/// which leaves a three-step path and a two-step path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingPaths {
    pub three_step: Vec<(usize, usize)>,
    pub two_step: Vec<(usize, usize)>,
}

/// Computes both paths for an ordering `(a, b, yield)`.
pub fn ordering_paths(ordering: &BetaOrdering) -> Result<OrderingPaths> {
    let perm = ordering.perm();
    if perm.len() != 3 || perm[2] != YIELD_LEVEL {
        return Err(Error::MalformedOrdering);
    }
    let (a, b) = (perm[0], perm[1]);
    Ok(OrderingPaths {
        three_step: vec![(a, b), (a, YIELD_LEVEL), (b, YIELD_LEVEL)],
        two_step: vec![(b, YIELD_LEVEL), (a, YIELD_LEVEL)],
    })
}

fn check_curve_domain(x: f64, z: f64) -> Result<f64> {
    let slack = 1e-9 * z.max(1.0);
    if !(-slack..=z + slack).contains(&x) {
        return Err(Error::CurveDomain { x, z });
    }
    Ok(x.clamp(0.0, z))
}

/// Closed form of the initial-state curve for the excited-first ordering
/// (`q` at or above the branch threshold): slope `q e^W` up to `e^{-W}`,
/// then slope `1 - q`, then flat.
pub fn initial_curve_value(instance: &PhotoisomerInstance, x: f64) -> Result<f64> {
    let q = instance.q();
    let ew = (-instance.w()).exp();
    let z = 1.0 + (-instance.delta()).exp() + ew;
    let x = check_curve_domain(x, z)?;
    if x < ew {
        // q e^W x, written against the elbow to mirror the interpolation
        Ok(q * x / ew)
    } else if x <= 1.0 + ew {
        Ok(q + (1.0 - q) * (x - ew))
    } else {
        Ok(1.0)
    }
}

/// Closed form of the curve after the two-step full-thermalization path
/// from the excited-first ordering; its elbow sits at `e^{-delta} + e^{-W}`.
pub fn two_step_curve_value(instance: &PhotoisomerInstance, x: f64) -> Result<f64> {
    let q = instance.q();
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    let z = 1.0 + ed + ew;
    let x = check_curve_domain(x, z)?;
    let elbow = ed + ew;
    if x <= elbow {
        Ok((q + (1.0 - q) * ed / (1.0 + ed)) * x / elbow)
    } else {
        Ok(q + (1.0 - q) * (x - ew) / (1.0 + ed))
    }
}

/// What counts as reaching the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReachGoal {
    /// Endpoint within [`TOL_R`] of the target in L1.
    MatchL1,
    /// Endpoint population at `level` at least the target's.
    DominateYield { level: usize },
}

/// Search configuration; defaults follow the documented resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachOptions {
    pub max_steps: usize,
    pub lambda_step: f64,
    pub goal: ReachGoal,
}

impl Default for ReachOptions {
    fn default() -> Self {
        Self {
            max_steps: 6,
            lambda_step: 0.01,
            goal: ReachGoal::MatchL1,
        }
    }
}

/// Outcome of the reachability search.
///
/// `reachable = false` is resolution-qualified: it only states that no
/// witness was found at `lambda_step` within `max_steps` steps.
#[derive(Debug, Clone)]
pub struct ReachabilityResult {
    pub reachable: bool,
    pub witness: Option<Vec<ThermalizationStep>>,
    pub achieved: PopulationVector,
    pub max_steps: usize,
    pub lambda_step: f64,
}

struct Search<'a> {
    system: &'a ThermalSystem,
    pairs: Vec<(usize, usize)>,
    lambda_step: f64,
}

impl<'a> Search<'a> {
    fn replay_raw(&self, p0: &PopulationVector, seq: &[(usize, usize)], lambdas: &[f64]) -> PopulationVector {
        let mut p = p0.clone();
        for (&(i, j), &lambda) in seq.iter().zip(lambdas) {
            p = partial_thermalization(&p, i, j, lambda, self.system)
                .expect("search pairs and lambdas are valid");
        }
        p
    }

    /// Coordinate descent over the lambda vector of one pair sequence:
    /// per-coordinate grid scan followed by a ternary refinement. The
    /// endpoint is affine in each lambda, so the scans are unimodal.
    fn optimize_sequence<F: Fn(&PopulationVector) -> f64>(
        &self,
        p0: &PopulationVector,
        seq: &[(usize, usize)],
        objective: &F,
    ) -> (f64, Vec<f64>, PopulationVector) {
        let len = seq.len();
        let mut lambdas = vec![1.0; len];
        let mut best = objective(&self.replay_raw(p0, seq, &lambdas));
        if len == 0 {
            return (best, lambdas, p0.clone());
        }
        let grid_points = (1.0 / self.lambda_step).round() as usize;
        for _sweep in 0..6 {
            let mut improved = false;
            for k in 0..len {
                let prefix = self.replay_raw(p0, &seq[..k], &lambdas[..k]);
                let mut suffix_lambdas = lambdas[k..].to_vec();
                let eval_at = |lambda: f64, suffix_lambdas: &mut [f64]| {
                    suffix_lambdas[0] = lambda;
                    objective(&self.replay_raw(&prefix, &seq[k..], suffix_lambdas))
                };
                let mut best_lambda = lambdas[k];
                let mut best_value = best;
                for g in 0..=grid_points {
                    let lambda = (g as f64 * self.lambda_step).min(1.0);
                    let v = eval_at(lambda, &mut suffix_lambdas);
                    if v < best_value - 1e-15 {
                        best_value = v;
                        best_lambda = lambda;
                    }
                }
                let mut lo = (best_lambda - self.lambda_step).max(0.0);
                let mut hi = (best_lambda + self.lambda_step).min(1.0);
                for _ in 0..60 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    let v1 = eval_at(m1, &mut suffix_lambdas);
                    let v2 = eval_at(m2, &mut suffix_lambdas);
                    if v1 < v2 {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                let mid = 0.5 * (lo + hi);
                let v = eval_at(mid, &mut suffix_lambdas);
                if v < best_value - 1e-15 {
                    best_value = v;
                    best_lambda = mid;
                }
                if best_value < best - 1e-15 {
                    lambdas[k] = best_lambda;
                    best = best_value;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        let endpoint = self.replay_raw(p0, seq, &lambdas);
        (best, lambdas, endpoint)
    }

    /// Exhaustive scan over pair sequences (consecutive pairs distinct, up
    /// to `max_steps`), returning the global objective minimum.
    fn optimize<F: Fn(&PopulationVector) -> f64>(
        &self,
        p0: &PopulationVector,
        max_steps: usize,
        objective: &F,
    ) -> (f64, Vec<ThermalizationStep>, PopulationVector) {
        let mut best_value = objective(p0);
        let mut best_steps: Vec<ThermalizationStep> = Vec::new();
        let mut best_endpoint = p0.clone();
        let mut seq: Vec<(usize, usize)> = Vec::new();
        self.scan(
            p0,
            max_steps,
            objective,
            &mut seq,
            &mut best_value,
            &mut best_steps,
            &mut best_endpoint,
        );
        (best_value, best_steps, best_endpoint)
    }

    #[allow(clippy::too_many_arguments)]
    fn scan<F: Fn(&PopulationVector) -> f64>(
        &self,
        p0: &PopulationVector,
        remaining: usize,
        objective: &F,
        seq: &mut Vec<(usize, usize)>,
        best_value: &mut f64,
        best_steps: &mut Vec<ThermalizationStep>,
        best_endpoint: &mut PopulationVector,
    ) {
        if !seq.is_empty() {
            let (value, lambdas, endpoint) = self.optimize_sequence(p0, seq, objective);
            if value < *best_value - 1e-15 {
                *best_value = value;
                *best_steps = seq
                    .iter()
                    .zip(&lambdas)
                    .filter(|&(_, &lambda)| lambda != 0.0)
                    .map(|(&pair, &lambda)| ThermalizationStep { pair, lambda })
                    .collect();
                *best_endpoint = endpoint;
            }
        }
        if remaining == 0 {
            return;
        }
        for &pair in &self.pairs {
            if seq.last() == Some(&pair) {
                continue;
            }
            seq.push(pair);
            self.scan(
                p0,
                remaining - 1,
                objective,
                seq,
                best_value,
                best_steps,
                best_endpoint,
            );
            seq.pop();
        }
    }
}

fn make_search<'a>(system: &'a ThermalSystem, options: &ReachOptions) -> Result<Search<'a>> {
    if options.max_steps == 0 {
        return Err(Error::ParamOutOfRange {
            name: "max_steps",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    if !(options.lambda_step > 0.0 && options.lambda_step <= 1.0) {
        return Err(Error::ParamOutOfRange {
            name: "lambda_step",
            value: options.lambda_step,
            range: "(0, 1]",
        });
    }
    let n = system.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if system.weight(i) + system.weight(j) > 0.0 {
                pairs.push((i, j));
            }
        }
    }
    Ok(Search {
        system,
        pairs,
        lambda_step: options.lambda_step,
    })
}

/// Searches for a sequence of partial thermalizations carrying `p0` to
/// `target` (in the sense of `options.goal`).
pub fn ctm_reachable(
    p0: &PopulationVector,
    target: &PopulationVector,
    system: &ThermalSystem,
    options: &ReachOptions,
) -> Result<ReachabilityResult> {
    if p0.len() != system.len() || target.len() != system.len() {
        return Err(Error::DimensionMismatch {
            expected: system.len(),
            got: p0.len().max(target.len()),
        });
    }
    let search = make_search(system, options)?;
    let objective: Box<dyn Fn(&PopulationVector) -> f64> = match options.goal {
        ReachGoal::MatchL1 => {
            let target = target.clone();
            Box::new(move |p: &PopulationVector| p.l1_distance(&target))
        }
        ReachGoal::DominateYield { level } => Box::new(move |p: &PopulationVector| -p.get(level)),
    };
    let (_, steps, achieved) = search.optimize(p0, options.max_steps, &objective);
    let reachable = match options.goal {
        ReachGoal::MatchL1 => achieved.l1_distance(target) <= TOL_R,
        ReachGoal::DominateYield { level } => achieved.get(level) >= target.get(level) - 1e-12,
    };
    Ok(ReachabilityResult {
        reachable,
        witness: reachable.then_some(steps),
        achieved,
        max_steps: options.max_steps,
        lambda_step: options.lambda_step,
    })
}

/// Maximizes the population of `level` over all step sequences; returns the
/// best value with its witness.
pub fn max_yield_search(
    p0: &PopulationVector,
    system: &ThermalSystem,
    level: usize,
    options: &ReachOptions,
) -> Result<(f64, Vec<ThermalizationStep>)> {
    if p0.len() != system.len() || level >= system.len() {
        return Err(Error::DimensionMismatch {
            expected: system.len(),
            got: p0.len(),
        });
    }
    let search = make_search(system, options)?;
    let objective = |p: &PopulationVector| -p.get(level);
    let (value, steps, _) = search.optimize(p0, options.max_steps, &objective);
    Ok((-value, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, curve_dominates, thermomajorizes};
    use approx::assert_relative_eq;

    fn inst(delta: f64, w: f64, q: f64) -> PhotoisomerInstance {
        PhotoisomerInstance::new(delta, w, q).unwrap()
    }

    #[test]
    fn full_thermalization_basic() {
        let sys = ThermalSystem::new(vec![0.0, 1.0, 3.0]).unwrap();
        let p = PopulationVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let out = full_thermalization(&p, 0, 1, &sys).unwrap();
        let e1 = (-1.0f64).exp();
        assert_relative_eq!(out.get(0), 1.0 / (1.0 + e1), epsilon = 1e-12);
        assert_relative_eq!(out.get(1), e1 / (1.0 + e1), epsilon = 1e-12);
        assert_eq!(out.get(2), 0.0);
        // spot values
        assert_relative_eq!(out.get(0), 0.731059, epsilon = 1e-6);
        assert_relative_eq!(out.get(1), 0.268941, epsilon = 1e-6);
    }

    #[test]
    fn full_thermalization_fixes_gibbs_and_is_idempotent() {
        let sys = ThermalSystem::new(vec![0.0, 1.0, 3.0]).unwrap();
        let gibbs = sys.gibbs_state();
        let out = full_thermalization(&gibbs, 1, 2, &sys).unwrap();
        assert!(out.l1_distance(&gibbs) < 1e-15);

        let p = PopulationVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let once = full_thermalization(&p, 0, 2, &sys).unwrap();
        let twice = full_thermalization(&once, 0, 2, &sys).unwrap();
        assert!(once.l1_distance(&twice) < 1e-15);
    }

    #[test]
    fn dead_pair_is_rejected() {
        let sys = ThermalSystem::new(vec![0.0, f64::INFINITY, f64::INFINITY]).unwrap();
        let p = PopulationVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(full_thermalization(&p, 1, 2, &sys).is_err());
        assert!(full_thermalization(&p, 0, 0, &sys).is_err());
    }

    #[test]
    fn partial_thermalization_interpolates() {
        let sys = ThermalSystem::new(vec![0.0, 1.0, 3.0]).unwrap();
        let p = PopulationVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let zero = partial_thermalization(&p, 0, 1, 0.0, &sys).unwrap();
        assert!(zero.l1_distance(&p) < 1e-15);
        let one = partial_thermalization(&p, 0, 1, 1.0, &sys).unwrap();
        let full = full_thermalization(&p, 0, 1, &sys).unwrap();
        assert!(one.l1_distance(&full) < 1e-15);
        let half = partial_thermalization(&p, 0, 1, 0.5, &sys).unwrap();
        assert_relative_eq!(half.get(0), 0.865529, epsilon = 1e-6);
        assert_relative_eq!(half.get(1), 0.134471, epsilon = 1e-6);
    }

    #[test]
    fn steps_never_raise_the_curve() {
        let sys = ThermalSystem::new(vec![0.0, 0.7, 2.5]).unwrap();
        let p = PopulationVector::new(vec![0.3, 0.1, 0.6]).unwrap();
        for &(i, j) in &[(0, 1), (0, 2), (1, 2)] {
            for &lambda in &[0.25, 0.5, 1.0] {
                let out = partial_thermalization(&p, i, j, lambda, &sys).unwrap();
                assert!(thermomajorizes(&p, &out, &sys).unwrap());
            }
        }
    }

    #[test]
    fn ordering_paths_shapes() {
        let ordering = BetaOrdering::from_perm(vec![2, 0, 1]).unwrap();
        let paths = ordering_paths(&ordering).unwrap();
        assert_eq!(paths.three_step, vec![(2, 0), (2, 1), (0, 1)]);
        assert_eq!(paths.two_step, vec![(0, 1), (2, 1)]);

        let bad = BetaOrdering::from_perm(vec![1, 0, 2]).unwrap();
        assert!(ordering_paths(&bad).is_err());
    }

    #[test]
    fn two_step_path_moves_yield_level_first() {
        let instance = inst(1.0, 3.0, 0.5);
        let sys = instance.system();
        let ordering =
            crate::thermo::beta_order(&instance.initial_state(), &sys).unwrap();
        let paths = ordering_paths(&ordering).unwrap();
        let steps: Vec<ThermalizationStep> = paths
            .two_step
            .iter()
            .map(|&pair| ThermalizationStep { pair, lambda: 1.0 })
            .collect();
        let end = replay(&instance.initial_state(), &steps, &sys).unwrap();
        let final_ordering = crate::thermo::beta_order(&end, &sys).unwrap();
        assert_eq!(final_ordering.perm()[0], YIELD_LEVEL);
    }

    #[test]
    fn closed_forms_match_generic_machinery() {
        let instance = inst(1.0, 3.0, 0.5);
        let sys = instance.system();
        let z = sys.partition_function();
        let p0 = instance.initial_state();
        let initial = build_curve(&p0, &sys).unwrap();
        let two = {
            let ordering = crate::thermo::beta_order(&p0, &sys).unwrap();
            let paths = ordering_paths(&ordering).unwrap();
            let steps: Vec<ThermalizationStep> = paths
                .two_step
                .iter()
                .map(|&pair| ThermalizationStep { pair, lambda: 1.0 })
                .collect();
            build_curve(&replay(&p0, &steps, &sys).unwrap(), &sys).unwrap()
        };
        for k in 0..=100 {
            let x = z * f64::from(k) / 100.0;
            assert_relative_eq!(
                initial_curve_value(&instance, x).unwrap(),
                initial.eval(x).unwrap(),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                two_step_curve_value(&instance, x).unwrap(),
                two.eval(x).unwrap(),
                epsilon = 1e-12
            );
        }
        assert!(curve_dominates(&initial, &two));
    }

    #[test]
    fn closed_form_spot_values() {
        let instance = inst(1.0, 3.0, 0.5);
        let ew = (-3.0f64).exp();
        let ed = (-1.0f64).exp();
        let z = 1.0 + ed + ew;
        assert_relative_eq!(
            initial_curve_value(&instance, ew).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            initial_curve_value(&instance, ew / 2.0).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert_relative_eq!(initial_curve_value(&instance, z).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            two_step_curve_value(&instance, z).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(initial_curve_value(&instance, -0.1).is_err());
        assert!(initial_curve_value(&instance, z + 0.1).is_err());
    }

    #[test]
    fn infinite_w_closed_form() {
        let instance = inst(1.0, f64::INFINITY, 0.4);
        let sys = instance.system();
        let curve = build_curve(&instance.initial_state(), &sys).unwrap();
        for k in 0..=50 {
            let x = sys.partition_function() * f64::from(k) / 50.0;
            assert_relative_eq!(
                initial_curve_value(&instance, x).unwrap(),
                curve.eval(x).unwrap(),
                epsilon = 1e-12
            );
        }
        // the vertical jump at zero carries the photoexcited weight
        assert_relative_eq!(initial_curve_value(&instance, 0.0).unwrap(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn reach_self_with_empty_witness() {
        let instance = inst(1.0, 3.0, 0.5);
        let sys = instance.system();
        let p0 = instance.initial_state();
        let result = ctm_reachable(&p0, &p0, &sys, &ReachOptions::default()).unwrap();
        assert!(result.reachable);
        assert_eq!(result.witness.as_deref(), Some(&[][..]));
        assert!(result.achieved.l1_distance(&p0) < 1e-12);
    }

    #[test]
    fn reach_gibbs() {
        let instance = inst(1.0, 3.0, 0.5);
        let sys = instance.system();
        let result = ctm_reachable(
            &instance.initial_state(),
            &sys.gibbs_state(),
            &sys,
            &ReachOptions::default(),
        )
        .unwrap();
        assert!(result.reachable);
        let witness = result.witness.unwrap();
        let end = replay(&instance.initial_state(), &witness, &sys).unwrap();
        assert!(end.l1_distance(&result.achieved) < 1e-9);
        assert!(end.l1_distance(&sys.gibbs_state()) <= TOL_R);
    }

    #[test]
    fn witness_json_shape() {
        let step = ThermalizationStep {
            pair: (0, 1),
            lambda: 0.5,
        };
        let json = serde_json::to_value(vec![step]).unwrap();
        assert_eq!(json, serde_json::json!([{ "pair": [0, 1], "lambda": 0.5 }]));
        let back: Vec<ThermalizationStep> = serde_json::from_value(json).unwrap();
        assert_eq!(back, vec![step]);
    }

    #[test]
    fn monotone_curve_along_witness() {
        let instance = inst(1.0, 3.0, 0.5);
        let sys = instance.system();
        let result = ctm_reachable(
            &instance.initial_state(),
            &sys.gibbs_state(),
            &sys,
            &ReachOptions::default(),
        )
        .unwrap();
        let witness = result.witness.unwrap();
        let mut p = instance.initial_state();
        for step in &witness {
            let next =
                partial_thermalization(&p, step.pair.0, step.pair.1, step.lambda, &sys).unwrap();
            assert!(thermomajorizes(&p, &next, &sys).unwrap());
            p = next;
        }
    }
}
