//! Verification suites cross-checking the closed forms against their
//! independent oracles. The CLI `verify` command and the acceptance test
//! target both run these.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    gamma_embed_optimize, gamma_markov, gamma_markov_paths, gamma_star,
    gamma_star_bruteforce, gamma_star_gs4_bound, optimal_gs3_params, q_tilde, EmbedOptions,
};
use crate::curve::{build_curve, thermomajorizes};
use crate::gibbs::{
    embeddability_check, exp_rate, gs3_from_params, gs3_inf_from_params, gs4_from_params,
    sample_gs3, thermal_rate_matrix, GibbsStochasticMatrix, Gs4Params, Spectrum3, Verdict,
    ZERO_EIG_TOL,
};
use crate::markov::{
    initial_curve_value, max_yield_search, ordering_paths, replay, two_step_curve_value,
    ReachOptions, ThermalizationStep,
};
use crate::thermo::{beta_order, PhotoisomerInstance, PopulationVector, YIELD_LEVEL};

/// Result of one verification check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Tolerance the check enforces (on its primary measurement).
    pub tolerance: f64,
    /// Worst measured deviation against that tolerance.
    pub worst: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: worst {:.3e} (tol {:.0e}) — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.detail
        )
    }
}

const GRID_DELTAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
const GRID_QS: [f64; 5] = [0.0, 0.1, 0.5, 0.9, 1.0];

fn grid_instances(include_infinite: bool) -> Vec<PhotoisomerInstance> {
    let mut out = Vec::new();
    for &delta in &GRID_DELTAS {
        let mut ws = vec![delta, delta + 1.0, delta + 3.0];
        if include_infinite {
            ws.push(f64::INFINITY);
        }
        for w in ws {
            for &q in &GRID_QS {
                out.push(PhotoisomerInstance::new(delta, w, q).expect("grid instance"));
            }
        }
    }
    out
}

fn sweep_deltas() -> Vec<f64> {
    (0..25)
        .map(|i| 0.1 + (6.0 - 0.1) * f64::from(i) / 24.0)
        .collect()
}

const SWEEP_QS: [f64; 4] = [0.0, 0.4, 0.7, 1.0];

/// Closed-form optimal yield against the grid oracle.
pub fn check_gamma_star_oracle() -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut excess = 0.0f64;
    for instance in grid_instances(true) {
        let exact = gamma_star(&instance);
        let brute = gamma_star_bruteforce(&instance, 200);
        worst = worst.max((brute - exact).abs());
        excess = excess.max(brute - exact);
    }
    CheckOutcome {
        name: "gamma_star closed form vs bruteforce oracle",
        passed: worst <= 5e-3 && excess <= 1e-9,
        tolerance: 5e-3,
        worst,
        detail: format!("max oracle excess over closed form {excess:.3e} (cap 1e-9)"),
    }
}

/// Path replays and the thermalization-sequence search against the
/// closed-form Markovian yield.
pub fn check_markov_consistency() -> CheckOutcome {
    let mut worst_path = 0.0f64;
    let mut worst_search_deficit = 0.0f64;
    let mut worst_search_excess = 0.0f64;
    let options = ReachOptions::default();
    for instance in grid_instances(false) {
        let gm = gamma_markov(&instance);
        if instance.q() >= q_tilde(instance.w()) {
            let paths = gamma_markov_paths(&instance).expect("paths on valid instance");
            worst_path = worst_path.max((paths.max() - gm).abs());
        }
        let (found, _) = max_yield_search(
            &instance.initial_state(),
            &instance.system(),
            YIELD_LEVEL,
            &options,
        )
        .expect("search on valid instance");
        worst_search_deficit = worst_search_deficit.max(gm - found);
        worst_search_excess = worst_search_excess.max(found - gm);
    }
    CheckOutcome {
        name: "markov yield: paths and sequence search",
        passed: worst_path <= 1e-12
            && worst_search_deficit <= 1e-2
            && worst_search_excess <= 1e-6,
        tolerance: 1e-12,
        worst: worst_path,
        detail: format!(
            "search deficit {worst_search_deficit:.3e} (cap 1e-2), excess {worst_search_excess:.3e} (cap 1e-6)"
        ),
    }
}

/// Strict gap between the optimal and the Markovian yield.
pub fn check_markov_gap() -> CheckOutcome {
    let mut min_gap = f64::INFINITY;
    for instance in grid_instances(false) {
        if instance.delta() <= 0.0 || instance.delta() >= instance.w() {
            continue;
        }
        min_gap = min_gap.min(gamma_star(&instance) - gamma_markov(&instance));
    }
    let spot = PhotoisomerInstance::new(1.0, 3.0, 0.5).expect("spot instance");
    let spot_gap = gamma_star(&spot) - gamma_markov(&spot);
    let spot_dev = (spot_gap - 0.100).abs();
    CheckOutcome {
        name: "strict markovian gap",
        passed: min_gap > 1e-6 && spot_dev <= 5e-3,
        tolerance: 1e-6,
        worst: min_gap,
        detail: format!("min gap {min_gap:.3e}; spot gap {spot_gap:.6} vs 0.100 (tol 5e-3)"),
    }
}

/// Embeddable yield against the `max(q, gamma_th)` envelope in the
/// infinite-photoexcitation limit.
pub fn check_embed_envelope() -> CheckOutcome {
    let opts = EmbedOptions::default();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for &q in &SWEEP_QS {
        for &delta in &sweep_deltas() {
            let ed = (-delta).exp();
            let envelope = q.max(ed / (1.0 + ed));
            let ge = gamma_embed_optimize(delta, q, &opts).expect("optimizer on valid input");
            let dev = (ge - envelope).abs();
            if dev > worst {
                worst = dev;
            }
            if dev > 1e-2 {
                failures.push(format!(
                    "delta={delta:.4}, q={q}: gamma_embed={ge:.6} vs envelope={envelope:.6} (dev {dev:.3e})"
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        "all 100 sweep points within tolerance".to_string()
    } else {
        format!(
            "{} point(s) above tolerance: {}",
            failures.len(),
            failures.join("; ")
        )
    };
    CheckOutcome {
        name: "embeddable yield envelope",
        passed: failures.is_empty(),
        tolerance: 1e-2,
        worst,
        detail,
    }
}

/// Four-level matrices never beat the three-level optimum, and the
/// block-embedded optimum attains it.
pub fn check_gs4_reduction() -> CheckOutcome {
    let instances = [
        PhotoisomerInstance::new(1.0, 3.0, 0.5).expect("instance"),
        PhotoisomerInstance::new(0.5, 2.5, 0.9).expect("instance"),
        PhotoisomerInstance::new(2.0, 4.0, 0.01).expect("instance"),
    ];
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_block = 0.0f64;
    let mut seed = 0xA11CE;
    for instance in &instances {
        for dw in [0.0, 1.0] {
            let w_prime = instance.w() + dw;
            let exact = gamma_star(instance);
            let bound = gamma_star_gs4_bound(instance, w_prime, 100_000, seed)
                .expect("sampling on valid instance");
            seed += 1;
            max_excess = max_excess.max(bound - exact);
            // the block embedding of the optimum is a candidate, so the
            // bound must come back at least gamma_star
            worst_block = worst_block.max(exact - bound);
            let block = Gs4Params::embed_gs3(&optimal_gs3_params(instance));
            let m = gs4_from_params(&block, instance.delta(), instance.w(), w_prime)
                .expect("block embedding is feasible");
            let initial =
                PopulationVector::new(vec![1.0 - instance.q(), 0.0, instance.q(), 0.0])
                    .expect("four-level initial state");
            let achieved = m.apply(&initial).expect("matrix action").get(YIELD_LEVEL);
            worst_block = worst_block.max((achieved - exact).abs());
        }
    }
    CheckOutcome {
        name: "four-level reduction",
        passed: max_excess <= 1e-9 && worst_block <= 1e-12,
        tolerance: 1e-9,
        worst: max_excess,
        detail: format!(
            "6 x 100000 sampled matrices; block-embedded optimum deviation {worst_block:.3e} (cap 1e-12)"
        ),
    }
}

/// Soundness of the embeddability classifier on generated exponentials and
/// on constructed negative cases.
pub fn check_classifier_soundness() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE16E55);
    let mut misclassified = 0u32;
    let mut tested = 0u32;
    let mut detail_parts = Vec::new();
    for _ in 0..1000 {
        let delta = 0.1 + 2.9 * rng.gen::<f64>();
        let w = delta + 3.0 * rng.gen::<f64>();
        let system = PhotoisomerInstance::new(delta, w, 0.0)
            .expect("random system")
            .system();
        let mut rates = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let r = rng.gen::<f64>();
                rates[i][j] = r;
                rates[j][i] = r;
            }
        }
        let q = thermal_rate_matrix(&system, &rates).expect("rates are symmetric");
        let t = 5.0 * rng.gen::<f64>();
        let m = exp_rate(&q, t).expect("exponential of a valid generator");
        let verdict = embeddability_check(&m).expect("3x3 matrix");
        match verdict.spectrum {
            Spectrum3::Real { lambda1, lambda2 }
                if lambda1 > ZERO_EIG_TOL && lambda2 > ZERO_EIG_TOL =>
            {
                tested += 1;
                if verdict.verdict != Verdict::Embeddable {
                    misclassified += 1;
                }
            }
            _ => {}
        }
        // generator exponentials must never be ruled out
        if verdict.verdict == Verdict::NotEmbeddable {
            misclassified += 1;
        }
    }
    detail_parts.push(format!("{tested}/1000 exponentials with positive real spectra"));

    // rank-deficient and zero-eigenvalue cases
    let sys = PhotoisomerInstance::new(1.0, 3.0, 0.5).expect("instance").system();
    let ct = GibbsStochasticMatrix::complete_thermalization(&sys).expect("columns are Gibbs");
    if embeddability_check(&ct).expect("3x3").verdict != Verdict::NotEmbeddable {
        misclassified += 1;
        detail_parts.push("complete thermalization not rejected".into());
    }
    let zero_eig = gs3_inf_from_params(0.3, 0.4, 0.6, 1.0).expect("boundary parameters");
    if embeddability_check(&zero_eig).expect("3x3").verdict != Verdict::NotEmbeddable {
        misclassified += 1;
        detail_parts.push("zero-eigenvalue matrix not rejected".into());
    }
    // negative eigenvalue without an equal partner
    for (g1, g2, g4) in [(0.9, 0.2, 0.3), (1.0, 0.1, 0.2), (0.8, 0.05, 0.15)] {
        let m = gs3_inf_from_params(g1, g2, g4, 1.0).expect("parameters in range");
        let v = embeddability_check(&m).expect("3x3");
        match spectrum_has_unequal_negative(&v.spectrum) {
            true if v.verdict != Verdict::NotEmbeddable => {
                misclassified += 1;
                detail_parts.push(format!("unequal negative pair accepted for g1={g1}"));
            }
            false => detail_parts.push(format!("construction g1={g1} lacks a negative eigenvalue")),
            _ => {}
        }
    }
    CheckOutcome {
        name: "embeddability classifier soundness",
        passed: misclassified == 0 && tested > 900,
        tolerance: 0.0,
        worst: f64::from(misclassified),
        detail: detail_parts.join("; "),
    }
}

fn spectrum_has_unequal_negative(s: &Spectrum3) -> bool {
    match *s {
        Spectrum3::Real { lambda1, lambda2 } => {
            (lambda1 < 0.0 || lambda2 < 0.0) && (lambda1 - lambda2).abs() > 1e-9
        }
        Spectrum3::Complex { .. } => false,
    }
}

/// Closed-form curves against the generic machinery, strict interior
/// dominance, and order monotonicity under sampled matrices.
pub fn check_curve_machinery() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCC_0FFE);
    let mut worst = 0.0f64;
    let mut strict_ok = true;
    for _ in 0..20 {
        let delta = 0.1 + 3.9 * rng.gen::<f64>();
        let w = delta + 4.0 * rng.gen::<f64>();
        let qt = q_tilde(w);
        let q = qt + (1.0 - qt) * rng.gen::<f64>();
        let instance = PhotoisomerInstance::new(delta, w, q).expect("random instance");
        let system = instance.system();
        let z = system.partition_function();
        let p0 = instance.initial_state();
        let initial = build_curve(&p0, &system).expect("curve");
        let ordering = beta_order(&p0, &system).expect("ordering");
        let paths = ordering_paths(&ordering).expect("excited-first ordering");
        let steps: Vec<ThermalizationStep> = paths
            .two_step
            .iter()
            .map(|&pair| ThermalizationStep { pair, lambda: 1.0 })
            .collect();
        let relaxed = build_curve(
            &replay(&p0, &steps, &system).expect("replay"),
            &system,
        )
        .expect("curve");
        for k in 0..=100 {
            let x = z * f64::from(k) / 100.0;
            let f = initial_curve_value(&instance, x).expect("in domain");
            let ft = two_step_curve_value(&instance, x).expect("in domain");
            worst = worst.max((f - initial.eval(x).expect("in domain")).abs());
            worst = worst.max((ft - relaxed.eval(x).expect("in domain")).abs());
            if (1..100).contains(&k) && ft >= f {
                strict_ok = false;
            }
        }
    }

    let mut monotone_failures = 0u32;
    for trial in 0..10_000u64 {
        let delta = 0.05 + 3.0 * rng.gen::<f64>();
        let w = delta + 3.0 * rng.gen::<f64>();
        let instance = PhotoisomerInstance::new(delta, w, 0.5).expect("random instance");
        let system = instance.system();
        let params = sample_gs3(0xBEEF + trial, &instance).expect("sampler");
        let g = gs3_from_params(&params, &instance).expect("sampled parameters are feasible");
        let raw: Vec<f64> = (0..3).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
        let total: f64 = raw.iter().sum();
        let p = PopulationVector::new(raw.iter().map(|r| r / total).collect())
            .expect("normalized simplex point");
        let out = g.apply(&p).expect("matrix action");
        if !thermomajorizes(&p, &out, &system).expect("comparison") {
            monotone_failures += 1;
        }
    }
    CheckOutcome {
        name: "curve closed forms and order monotonicity",
        passed: worst <= 1e-12 && strict_ok && monotone_failures == 0,
        tolerance: 1e-12,
        worst,
        detail: format!(
            "strict interior dominance {}; monotonicity failures {monotone_failures}/10000",
            if strict_ok { "holds" } else { "violated" }
        ),
    }
}

/// Bound hierarchy on the infinite-photoexcitation sweep rows.
pub fn check_hierarchy_sweep() -> CheckOutcome {
    let opts = EmbedOptions::default();
    let mut worst = 0.0f64;
    for &q in &SWEEP_QS {
        for &delta in &sweep_deltas() {
            let instance = PhotoisomerInstance::new(delta, f64::INFINITY, q).expect("instance");
            let gth = crate::bounds::gamma_th(&instance);
            let ge = gamma_embed_optimize(delta, q, &opts).expect("optimizer");
            let gm = gamma_markov(&instance);
            let gs = gamma_star(&instance);
            worst = worst.max(gth - (ge + 1e-6));
            worst = worst.max((ge + 1e-6) - (gm + 2e-6));
            worst = worst.max((gm + 2e-6) - (gs + 3e-6));
        }
    }
    CheckOutcome {
        name: "bound hierarchy on the sweep",
        passed: worst <= 0.0,
        tolerance: 1e-6,
        worst,
        detail: "gamma_th <= gamma_embed + 1e-6 <= gamma_markov + 2e-6 <= gamma_star + 3e-6"
            .to_string(),
    }
}

/// Named check groups exposed through the CLI.
pub fn suite(name: &str) -> Option<Vec<CheckOutcome>> {
    match name {
        "gs3" => Some(vec![check_gamma_star_oracle(), check_markov_gap()]),
        "gs4" => Some(vec![check_gs4_reduction()]),
        "markov" => Some(vec![check_markov_consistency()]),
        "embed" => Some(vec![
            check_embed_envelope(),
            check_classifier_soundness(),
            check_hierarchy_sweep(),
        ]),
        "curves" => Some(vec![check_curve_machinery()]),
        "all" => {
            let mut all = Vec::new();
            all.push(check_gamma_star_oracle());
            all.push(check_markov_consistency());
            all.push(check_markov_gap());
            all.push(check_embed_envelope());
            all.push(check_gs4_reduction());
            all.push(check_classifier_soundness());
            all.push(check_curve_machinery());
            all.push(check_hierarchy_sweep());
            Some(all)
        }
        _ => None,
    }
}
