//! Closed-form yield bounds under general, Markovian and embeddable thermal
//! operations, together with independent brute-force oracles for each.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::build_curve;
use crate::gibbs::{gs4_from_params, sample_gs4, Gs3Params, Gs4Params};
use crate::markov::{ordering_paths, replay, ThermalizationStep};
use crate::thermo::{BetaOrdering, PhotoisomerInstance, PopulationVector, YIELD_LEVEL};
use crate::{Error, Result};

/// Threshold separating the two β-ordering regimes of the initial state.
pub fn q_tilde(w: f64) -> f64 {
    if w.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + w.exp())
    }
}

/// Equilibrium yield `e^{-delta} / Z`.
pub fn gamma_th(instance: &PhotoisomerInstance) -> f64 {
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    ed / (1.0 + ed + ew)
}

/// Yield of the generic three-level matrix as a linear form in `(g3, g4)`.
pub fn yield_of_gs3(params: &Gs3Params, instance: &PhotoisomerInstance) -> f64 {
    let q = instance.q();
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    (1.0 - q) * ed * (1.0 - params.g3) + ((1.0 + ew) * q - ew) * params.g4
}

/// Optimal yield under general thermal operations.
pub fn gamma_star(instance: &PhotoisomerInstance) -> f64 {
    let q = instance.q();
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    if q >= q_tilde(instance.w()) {
        q + (1.0 - q) * (ed - ew)
    } else {
        (1.0 - q) * ed
    }
}

/// Parameters achieving [`gamma_star`] in the generic parametrization.
pub fn optimal_gs3_params(instance: &PhotoisomerInstance) -> Gs3Params {
    if instance.q() >= q_tilde(instance.w()) {
        Gs3Params::new(1.0, 0.0, 0.0, 1.0).expect("optimal parameters are in range")
    } else {
        Gs3Params::new(1.0, 0.0, 0.0, 0.0).expect("optimal parameters are in range")
    }
}

/// Brute-force oracle for [`gamma_star`]: maximizes the yield over a
/// `grid_n x grid_n` grid of `(g3, g4)`.
///
/// For fixed `(g3, g4)` the remaining constraints are interval conditions
/// on the linear functional `h = g1 e^{-delta} + g2 e^{-W}`, so feasibility
/// is decided exactly rather than by sampling `(g1, g2)`.
pub fn gamma_star_bruteforce(instance: &PhotoisomerInstance, grid_n: usize) -> f64 {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    let mut best = f64::NEG_INFINITY;
    for i in 0..grid_n {
        let g3 = i as f64 / (grid_n - 1) as f64;
        for j in 0..grid_n {
            let g4 = j as f64 / (grid_n - 1) as f64;
            // entry (1,0) must be non-negative and doubles as the lower
            // bound that h has to reach
            let h_lo = (1.0 - g3) * ed - g4 * ew;
            if h_lo < 0.0 {
                continue;
            }
            // h spans [0, h_hi] over the (g1, g2) box left by row three
            let h_hi = (1.0 - g3) * ed + (1.0 - g4) * ew;
            if h_lo > 1.0 || h_lo > h_hi {
                continue;
            }
            let params = Gs3Params { g1: 0.0, g2: 0.0, g3, g4 };
            let value = yield_of_gs3(&params, instance);
            if value > best {
                best = value;
            }
        }
    }
    best
}

/// Optimal yield under Markovian thermal operations.
pub fn gamma_markov(instance: &PhotoisomerInstance) -> f64 {
    let q = instance.q();
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    if q >= q_tilde(instance.w()) {
        (q + (1.0 - q) * ed / (1.0 + ed)) * ed / (ed + ew)
    } else {
        (1.0 - q * ew / (ew + ed)) * ed / (1.0 + ed)
    }
}

/// Yields reached by replaying the two admissible full-thermalization
/// paths; the larger one equals [`gamma_markov`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathYields {
    pub three_step: f64,
    pub two_step: f64,
}

impl PathYields {
    pub fn max(&self) -> f64 {
        self.three_step.max(self.two_step)
    }
}

/// Replays both β-ordering paths from the initial state and reads off each
/// final curve at `e^{-delta}`, the abscissa bounding the yield.
///
/// The ordering is picked from the branch of `q` (excited level first at or
/// above the threshold), which also resolves the ties at `q = 0`.
pub fn gamma_markov_paths(instance: &PhotoisomerInstance) -> Result<PathYields> {
    let system = instance.system();
    let perm = if instance.q() >= q_tilde(instance.w()) {
        vec![2, 0, 1]
    } else {
        vec![0, 2, 1]
    };
    let paths = ordering_paths(&BetaOrdering::from_perm(perm)?)?;
    let ed = (-instance.delta()).exp();
    let mut values = [0.0; 2];
    for (slot, path) in [&paths.three_step, &paths.two_step].into_iter().enumerate() {
        let steps: Vec<ThermalizationStep> = path
            .iter()
            .map(|&pair| ThermalizationStep { pair, lambda: 1.0 })
            .collect();
        let end = replay(&instance.initial_state(), &steps, &system)?;
        values[slot] = build_curve(&end, &system)?.eval(ed)?;
    }
    Ok(PathYields {
        three_step: values[0],
        two_step: values[1],
    })
}

/// The spectral threshold function in transfer coordinates `k = 1 - lambda`,
/// extended by continuity to `k1 = k2` and vanishing when either argument
/// is zero.
pub fn f_k(k1: f64, k2: f64) -> Result<f64> {
    for (name, k) in [("k1", k1), ("k2", k2)] {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::ParamOutOfRange {
                name,
                value: k,
                range: "[0, 1)",
            });
        }
    }
    crate::gibbs::f_lambda(1.0 - k1, 1.0 - k2)
}

/// Grid configuration of the embeddable-yield optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedOptions {
    /// Points per axis of the dense first pass.
    pub grid_n: usize,
    /// Number of shrinking refinement rounds around the incumbent.
    pub refine_rounds: usize,
    /// Points per axis in each refinement round.
    pub refine_n: usize,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            grid_n: 400,
            refine_rounds: 3,
            refine_n: 41,
        }
    }
}

/// Optimal yield under embeddable (time-independent Markovian) operations
/// in the infinite-photoexcitation limit.
///
/// The objective `(1-q) gamma_th k1 + q (k2 - k3) / 2` decreases in `k3`,
/// so `k3` is eliminated analytically (`k3* = max(-1, 2 f / Z - k2)`,
/// feasible when `k3* <= k2 - 2 f e^{-delta} / Z`); the remaining plane is
/// scanned on a dense grid with local refinement. Deterministic for fixed
/// options.
pub fn gamma_embed_optimize(delta: f64, q: f64, options: &EmbedOptions) -> Result<f64> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::ParamOutOfRange {
            name: "delta",
            value: delta,
            range: "[0, inf)",
        });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::ParamOutOfRange {
            name: "q",
            value: q,
            range: "[0, 1]",
        });
    }
    assert!(options.grid_n >= 2 && options.refine_n >= 2);
    let ed = (-delta).exp();
    let z = 1.0 + ed;
    let gth = ed / z;
    let hi = 1.0 - 1e-6;

    let value = |k1: f64, k2: f64| -> Option<f64> {
        let f = f_k(k1, k2).expect("grid stays inside [0, 1)");
        let k3 = (2.0 * f / z - k2).max(-1.0);
        if k3 > k2 - 2.0 * f * ed / z + 1e-12 {
            return None;
        }
        Some((1.0 - q) * gth * k1 + 0.5 * q * (k2 - k3))
    };

    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let (mut lo1, mut hi1, mut lo2, mut hi2) = (0.0, hi, 0.0, hi);
    for round in 0..=options.refine_rounds {
        let m = if round == 0 {
            options.grid_n
        } else {
            options.refine_n
        };
        for i in 0..m {
            let k1 = lo1 + (hi1 - lo1) * i as f64 / (m - 1) as f64;
            for j in 0..m {
                let k2 = lo2 + (hi2 - lo2) * j as f64 / (m - 1) as f64;
                if let Some(v) = value(k1, k2) {
                    if v > best.0 {
                        best = (v, k1, k2);
                    }
                }
            }
        }
        let (_, b1, b2) = best;
        let s1 = (hi1 - lo1) / (m - 1) as f64;
        let s2 = (hi2 - lo2) / (m - 1) as f64;
        lo1 = (b1 - s1).max(0.0);
        hi1 = (b1 + s1).min(hi);
        lo2 = (b2 - s2).max(0.0);
        hi2 = (b2 + s2).min(hi);
    }
    Ok(best.0)
}

/// Best yield found over seeded random four-level matrices plus the
/// block-embedded three-level optimum, acting on `(1-q, 0, q, 0)`.
pub fn gamma_star_gs4_bound(
    instance: &PhotoisomerInstance,
    w_prime: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    instance.four_level_system(w_prime)?; // validates w_prime >= w
    let initial = PopulationVector::new(vec![1.0 - instance.q(), 0.0, instance.q(), 0.0])?;
    let block = Gs4Params::embed_gs3(&optimal_gs3_params(instance));
    let m = gs4_from_params(&block, instance.delta(), instance.w(), w_prime)?;
    let mut best = m.apply(&initial)?.get(YIELD_LEVEL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let params = sample_gs4(&mut rng, instance.delta(), instance.w(), w_prime)?;
        let m = gs4_from_params(&params, instance.delta(), instance.w(), w_prime)?;
        let y = m.apply(&initial)?.get(YIELD_LEVEL);
        if y > best {
            best = y;
        }
    }
    Ok(best)
}

/// All bounds of one instance side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldReport {
    pub gamma_star: f64,
    pub gamma_markov: f64,
    /// Available only in the infinite-photoexcitation limit.
    pub gamma_embed: Option<f64>,
    pub gamma_th: f64,
    pub q_tilde: f64,
    /// Whether `q` sits at or above the branch threshold.
    pub branch_high_q: bool,
    pub gap_star_markov: f64,
    pub gap_markov_embed: Option<f64>,
}

/// Aggregates the bounds; the embeddable yield is filled in only for
/// `W = inf`, where its optimization is defined.
pub fn report(instance: &PhotoisomerInstance) -> Result<YieldReport> {
    let gs = gamma_star(instance);
    let gm = gamma_markov(instance);
    let ge = if instance.w().is_infinite() {
        Some(gamma_embed_optimize(
            instance.delta(),
            instance.q(),
            &EmbedOptions::default(),
        )?)
    } else {
        None
    };
    Ok(YieldReport {
        gamma_star: gs,
        gamma_markov: gm,
        gamma_embed: ge,
        gamma_th: gamma_th(instance),
        q_tilde: q_tilde(instance.w()),
        branch_high_q: instance.q() >= q_tilde(instance.w()),
        gap_star_markov: gs - gm,
        gap_markov_embed: ge.map(|e| gm - e),
    })
}
