//! Gibbs-stochastic matrices: construction from the generic three- and
//! four-level parametrizations, validation, seeded sampling, spectra,
//! thermal rate matrices with their exponentials, and the embeddability
//! classifier for real spectra.
//!
//! Matrices act on population column vectors, `q = G p`, so every column
//! sums to one and the Gibbs vector is a fixed point.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::thermo::{PhotoisomerInstance, PopulationVector, ThermalSystem};
use crate::{Error, Result};

/// Entries above this negative floor are treated as rounding noise and
/// clamped to zero.
pub const TOL_ENTRY: f64 = 1e-12;

/// Tolerance on column sums and on the Gibbs fixed-point residual.
pub const TOL_STOCH: f64 = 1e-9;

const MAX_REJECTS: u64 = 1_000_000;

/// Column-stochastic matrix fixing the Gibbs vector of its system.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsStochasticMatrix {
    entries: Vec<f64>, // row-major n x n
    n: usize,
    system: ThermalSystem,
}

/// Outcome of validating a candidate matrix against a system.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub failures: Vec<String>,
}

impl Diagnostics {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks stochasticity, entry non-negativity and the Gibbs fixed point.
pub fn validate(rows: &[Vec<f64>], system: &ThermalSystem) -> Diagnostics {
    let n = system.len();
    let mut diag = Diagnostics::default();
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        diag.failures
            .push(format!("expected a {n}x{n} matrix for this system"));
        return diag;
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if !e.is_finite() || e < -TOL_ENTRY {
                diag.failures
                    .push(format!("entry ({i},{j}) = {e} is negative"));
            }
        }
    }
    for j in 0..n {
        let sum: f64 = (0..n).map(|i| rows[i][j]).sum();
        if (sum - 1.0).abs() > TOL_STOCH {
            diag.failures
                .push(format!("column {j} sums to {sum}, expected 1"));
        }
    }
    let gibbs = system.gibbs_state();
    let mut worst = 0.0f64;
    for i in 0..n {
        let out: f64 = (0..n).map(|j| rows[i][j] * gibbs.get(j)).sum();
        worst = worst.max((out - gibbs.get(i)).abs());
    }
    if worst > TOL_STOCH {
        diag.failures
            .push(format!("Gibbs state moved by {worst} under the matrix"));
    }
    diag
}

impl GibbsStochasticMatrix {
    /// Validates `rows` against `system`, clamping entries in
    /// `[-TOL_ENTRY, 0)` to zero.
    pub fn from_rows(system: &ThermalSystem, mut rows: Vec<Vec<f64>>) -> Result<Self> {
        for row in rows.iter_mut() {
            for e in row.iter_mut() {
                if *e < 0.0 && *e >= -TOL_ENTRY {
                    *e = 0.0;
                }
            }
        }
        let diag = validate(&rows, system);
        if !diag.passed() {
            return Err(Error::InvalidMatrix(diag.failures.join("; ")));
        }
        let n = system.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            entries.extend(row);
        }
        Ok(Self {
            entries,
            n,
            system: system.clone(),
        })
    }

    pub fn identity(system: &ThermalSystem) -> Self {
        let n = system.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self {
            entries,
            n,
            system: system.clone(),
        }
    }

    /// The map sending every population to the Gibbs state (all columns
    /// equal to the Gibbs vector).
    pub fn complete_thermalization(system: &ThermalSystem) -> Result<Self> {
        let gibbs = system.gibbs_state();
        let n = system.len();
        let rows = (0..n)
            .map(|i| vec![gibbs.get(i); n])
            .collect::<Vec<_>>();
        Self::from_rows(system, rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.entries[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    pub fn system(&self) -> &ThermalSystem {
        &self.system
    }

    /// Applies the matrix to a population column vector.
    pub fn apply(&self, p: &PopulationVector) -> Result<PopulationVector> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let out: Vec<f64> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.entry(i, j) * p.get(j)).sum())
            .collect();
        PopulationVector::new(out)
    }

    /// Matrix product `self * other`, validated on the shared system.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let n = self.n;
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.entry(i, k) * other.entry(k, j)).sum())
                    .collect()
            })
            .collect();
        Self::from_rows(&self.system, rows)
    }
}

/// JSON wire format for a matrix together with its level energies,
/// `{"energies": [...], "matrix": [[...], ...]}` (row-major, columns acting
/// on populations). Infinite energies are written as `"inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    #[serde(with = "crate::json::energy_vec")]
    pub energies: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &GibbsStochasticMatrix) -> Self {
        Self {
            energies: m.system().energies().to_vec(),
            matrix: m.rows(),
        }
    }

    pub fn into_matrix(self) -> Result<GibbsStochasticMatrix> {
        let system = ThermalSystem::new(self.energies)?;
        GibbsStochasticMatrix::from_rows(&system, self.matrix)
    }
}

/// Parameters of the generic three-level Gibbs-stochastic matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gs3Params {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

impl Gs3Params {
    pub fn new(g1: f64, g2: f64, g3: f64, g4: f64) -> Result<Self> {
        for (name, value) in [("g1", g1), ("g2", g2), ("g3", g3), ("g4", g4)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ParamOutOfRange {
                    name,
                    value,
                    range: "[0, 1]",
                });
            }
        }
        Ok(Self { g1, g2, g3, g4 })
    }
}

fn gs3_rows(params: &Gs3Params, ed: f64, ew: f64) -> [[f64; 3]; 3] {
    let Gs3Params { g1, g2, g3, g4 } = *params;
    [
        [1.0 - g1 * ed - g2 * ew, g1, g2],
        [(1.0 - g3) * ed - g4 * ew, g3, g4],
        [
            (g2 + g4) * ew - (1.0 - g1 - g3) * ed,
            1.0 - g1 - g3,
            1.0 - g2 - g4,
        ],
    ]
}

fn check_rows_nonneg<const N: usize>(rows: &[[f64; N]; N]) -> Result<()> {
    for (i, row) in rows.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e < -TOL_ENTRY {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: e,
                });
            }
        }
    }
    Ok(())
}

/// Builds the generic three-level matrix for `instance`, checking the
/// entry non-negativity constraints and reporting the first failing entry.
pub fn gs3_from_params(
    params: &Gs3Params,
    instance: &PhotoisomerInstance,
) -> Result<GibbsStochasticMatrix> {
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    let rows = gs3_rows(params, ed, ew);
    check_rows_nonneg(&rows)?;
    GibbsStochasticMatrix::from_rows(&instance.system(), rows.map(|r| r.to_vec()).to_vec())
}

/// Builds the three-level matrix in the infinite-photoexcitation limit,
/// where the third row collapses to `(0, 0, 1 - g2 - g4)`.
pub fn gs3_inf_from_params(
    g1: f64,
    g2: f64,
    g4: f64,
    delta: f64,
) -> Result<GibbsStochasticMatrix> {
    for (name, value) in [("g1", g1), ("g2", g2), ("g4", g4)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ParamOutOfRange {
                name,
                value,
                range: "[0, 1]",
            });
        }
    }
    if g2 + g4 > 1.0 {
        return Err(Error::ParamOutOfRange {
            name: "g2 + g4",
            value: g2 + g4,
            range: "[0, 1]",
        });
    }
    let ed = (-delta).exp();
    let rows = vec![
        vec![1.0 - g1 * ed, g1, g2],
        vec![g1 * ed, 1.0 - g1, g4],
        vec![0.0, 0.0, 1.0 - g2 - g4],
    ];
    let system = ThermalSystem::new(vec![0.0, delta, f64::INFINITY])?;
    GibbsStochasticMatrix::from_rows(&system, rows)
}

/// Parameters of the generic four-level Gibbs-stochastic matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gs4Params {
    g: [f64; 9],
}

impl Gs4Params {
    pub fn new(g: [f64; 9]) -> Result<Self> {
        for &value in g.iter() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ParamOutOfRange {
                    name: "g1..g9",
                    value,
                    range: "[0, 1]",
                });
            }
        }
        Ok(Self { g })
    }

    /// `g_k` with the conventional 1-based index.
    pub fn g(&self, k: usize) -> f64 {
        self.g[k - 1]
    }

    /// Embeds a three-level parameter set as the block `G3 (+) 1`,
    /// leaving the fourth level untouched.
    pub fn embed_gs3(p: &Gs3Params) -> Self {
        Self {
            g: [
                p.g1,
                p.g2,
                p.g3,
                p.g4,
                0.0,
                0.0,
                1.0 - p.g1 - p.g3,
                1.0 - p.g2 - p.g4,
                0.0,
            ],
        }
    }
}

fn gs4_rows(p: &Gs4Params, ed: f64, ew: f64, ewp: f64) -> [[f64; 4]; 4] {
    let [g1, g2, g3, g4, g5, g6, g7, g8, g9] = p.g;
    [
        [1.0 - g1 * ed - g2 * ew - g5 * ewp, g1, g2, g5],
        [(1.0 - g3) * ed - g4 * ew - g6 * ewp, g3, g4, g6],
        [(1.0 - g8) * ew - g7 * ed - g9 * ewp, g7, g8, g9],
        [
            (g5 + g6 + g9) * ewp
                - (1.0 - g1 - g3 - g7) * ed
                - (1.0 - g2 - g4 - g8) * ew,
            1.0 - g1 - g3 - g7,
            1.0 - g2 - g4 - g8,
            1.0 - g5 - g6 - g9,
        ],
    ]
}

/// Builds the generic four-level matrix, checking all sixteen entries.
pub fn gs4_from_params(
    params: &Gs4Params,
    delta: f64,
    w: f64,
    w_prime: f64,
) -> Result<GibbsStochasticMatrix> {
    let ed = (-delta).exp();
    let ew = (-w).exp();
    let ewp = (-w_prime).exp();
    let rows = gs4_rows(params, ed, ew, ewp);
    check_rows_nonneg(&rows)?;
    let system = ThermalSystem::new(vec![0.0, delta, w, w_prime])?;
    GibbsStochasticMatrix::from_rows(&system, rows.map(|r| r.to_vec()).to_vec())
}

/// Draws a uniform sample from the three-level constraint polytope by
/// rejection; deterministic for a fixed seed.
///
/// In the infinite-`W` limit the constraints force `g1 + g3 = 1` exactly, a
/// measure-zero surface under box sampling, so that case samples `g1` and
/// sets `g3 = 1 - g1`.
pub fn sample_gs3(seed: u64, instance: &PhotoisomerInstance) -> Result<Gs3Params> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if instance.w().is_infinite() {
        for _ in 0..MAX_REJECTS {
            let g1: f64 = rng.gen();
            let g2: f64 = rng.gen();
            let g4: f64 = rng.gen();
            if g2 + g4 <= 1.0 {
                return Gs3Params::new(g1, g2, 1.0 - g1, g4);
            }
        }
        return Err(Error::SamplerExhausted(MAX_REJECTS));
    }
    let ed = (-instance.delta()).exp();
    let ew = (-instance.w()).exp();
    for _ in 0..MAX_REJECTS {
        let params = Gs3Params {
            g1: rng.gen(),
            g2: rng.gen(),
            g3: rng.gen(),
            g4: rng.gen(),
        };
        let rows = gs3_rows(&params, ed, ew);
        if rows.iter().all(|r| r.iter().all(|&e| e >= 0.0)) {
            return Ok(params);
        }
    }
    Err(Error::SamplerExhausted(MAX_REJECTS))
}

/// Draws a random valid point of the four-level constraint polytope.
///
/// Each column triple is drawn uniformly in its sub-simplex, which settles
/// twelve of the sixteen entry constraints outright. The four first-column
/// entries are linear in the parameters, so a draw that violates them is
/// pulled back along the ray toward the complete-thermalization point
/// (strictly interior for finite energies) exactly as far as needed, with a
/// random radial factor so samples spread between the interior and the
/// boundary. Plain rejection is hopeless here: for small `e^{-W'}` the
/// feasible region is a thin sliver of the box.
pub fn sample_gs4(rng: &mut ChaCha8Rng, delta: f64, w: f64, w_prime: f64) -> Result<Gs4Params> {
    let ed = (-delta).exp();
    let ew = (-w).exp();
    let ewp = (-w_prime).exp();
    let mut budget = MAX_REJECTS;
    let mut simplex3 = |rng: &mut ChaCha8Rng| -> Result<(f64, f64, f64)> {
        while budget > 0 {
            budget -= 1;
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let c: f64 = rng.gen();
            if a + b + c <= 1.0 {
                return Ok((a, b, c));
            }
        }
        Err(Error::SamplerExhausted(MAX_REJECTS))
    };
    let (g1, g3, g7) = simplex3(rng)?;
    let (g2, g4, g8) = simplex3(rng)?;
    let (g5, g6, g9) = simplex3(rng)?;
    let target = [g1, g2, g3, g4, g5, g6, g7, g8, g9];
    // complete thermalization: every column equals the Gibbs vector
    let z = 1.0 + ed + ew + ewp;
    let center = [
        1.0 / z,
        1.0 / z,
        ed / z,
        ed / z,
        1.0 / z,
        ed / z,
        ew / z,
        ew / z,
        ew / z,
    ];
    let col0 = |g: &[f64; 9]| {
        let rows = gs4_rows(&Gs4Params { g: *g }, ed, ew, ewp);
        [rows[0][0], rows[1][0], rows[2][0], rows[3][0]]
    };
    let at_center = col0(&center);
    let at_target = col0(&target);
    let mut alpha_max = 1.0f64;
    for (c, t) in at_center.iter().zip(at_target.iter()) {
        if *t < 0.0 {
            // entry is linear along the ray; zero crossing at c / (c - t)
            alpha_max = alpha_max.min(c / (c - t));
        }
    }
    let radial = rng.gen::<f64>().powf(1.0 / 9.0);
    let alpha = alpha_max * radial;
    let mut g = [0.0; 9];
    for k in 0..9 {
        g[k] = center[k] + alpha * (target[k] - center[k]);
    }
    Ok(Gs4Params { g })
}

/// Spectrum of a three-level Gibbs-stochastic matrix; the Perron eigenvalue
/// is always one, so only the remaining pair is reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Spectrum3 {
    /// Real pair ordered `lambda1 >= lambda2`.
    Real { lambda1: f64, lambda2: f64 },
    /// Complex-conjugate pair `re +/- i im`.
    Complex { re: f64, im: f64 },
}

impl fmt::Display for Spectrum3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spectrum3::Real { lambda1, lambda2 } => {
                write!(f, "{{1, {lambda1}, {lambda2}}}")
            }
            Spectrum3::Complex { re, im } => {
                write!(f, "{{1, {re} + {im}i, {re} - {im}i}}")
            }
        }
    }
}

fn det3(m: &GibbsStochasticMatrix) -> f64 {
    let e = |i, j| m.entry(i, j);
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
        - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}

/// Computes the non-Perron eigenvalue pair of a validated 3x3 matrix.
///
/// The known eigenvalue one is deflated from the characteristic polynomial,
/// which leaves the quadratic `x^2 - (tr - 1) x + det`; no iterative solver
/// is involved.
pub fn spectrum3(m: &GibbsStochasticMatrix) -> Result<Spectrum3> {
    if m.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: m.dim(),
        });
    }
    let b = m.entry(0, 0) + m.entry(1, 1) + m.entry(2, 2) - 1.0;
    let c = det3(m);
    let disc = b * b - 4.0 * c;
    let scale = (b * b).max((4.0 * c).abs()).max(1e-30);
    if disc < -1e-12 * scale {
        return Ok(Spectrum3::Complex {
            re: b / 2.0,
            im: (-disc).sqrt() / 2.0,
        });
    }
    let s = disc.max(0.0).sqrt();
    Ok(Spectrum3::Real {
        lambda1: (b + s) / 2.0,
        lambda2: (b - s) / 2.0,
    })
}

/// The spectral threshold function of the entry-bound embeddability test,
/// extended to `l1 = l2` by continuity.
pub fn f_lambda(l1: f64, l2: f64) -> Result<f64> {
    for l in [l1, l2] {
        if !(l > 0.0) {
            return Err(Error::NonPositiveEigenvalue(l));
        }
        if l > 1.0 + 1e-9 {
            return Err(Error::ParamOutOfRange {
                name: "lambda",
                value: l,
                range: "(0, 1]",
            });
        }
    }
    let l1 = l1.min(1.0);
    let l2 = l2.min(1.0);
    if (l1 - l2).abs() <= 1e-9 {
        let l = 0.5 * (l1 + l2);
        return Ok(l * l.ln() - l + 1.0);
    }
    let (ln1, ln2) = (l1.ln(), l2.ln());
    Ok(((l2 - 1.0) * ln1 - (l1 - 1.0) * ln2) / (ln2 - ln1))
}

/// Embeddability classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Embeddable,
    NotEmbeddable,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Embeddable => "EMBEDDABLE",
            Verdict::NotEmbeddable => "NOT_EMBEDDABLE",
            Verdict::Undetermined => "UNDETERMINED",
        };
        f.write_str(s)
    }
}

/// Which test decided the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum VerdictReason {
    /// A zero eigenvalue rules out any generator.
    ZeroEigenvalue,
    /// A negative eigenvalue without its equal partner.
    UnequalWithNegative,
    /// Positive spectrum and all off-diagonal entries above the threshold.
    EntryBoundHolds,
    /// Positive spectrum but an off-diagonal entry below the threshold.
    EntryBoundViolated {
        row: usize,
        col: usize,
        entry: f64,
        bound: f64,
    },
    /// Complex spectra are outside the real-spectrum characterization.
    ComplexSpectrum,
    /// An equal negative pair is necessary but not sufficient.
    EqualNegativePair,
}

impl fmt::Display for VerdictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictReason::ZeroEigenvalue => write!(f, "zero eigenvalue"),
            VerdictReason::UnequalWithNegative => {
                write!(f, "negative eigenvalue without an equal partner")
            }
            VerdictReason::EntryBoundHolds => {
                write!(f, "positive spectrum, entry bound satisfied")
            }
            VerdictReason::EntryBoundViolated {
                row,
                col,
                entry,
                bound,
            } => write!(
                f,
                "entry ({row},{col}) = {entry} below the spectral bound {bound}"
            ),
            VerdictReason::ComplexSpectrum => write!(f, "complex spectrum"),
            VerdictReason::EqualNegativePair => {
                write!(f, "equal negative pair (necessary condition only)")
            }
        }
    }
}

/// Full embeddability verdict with the clause that fired and the spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddabilityVerdict {
    pub verdict: Verdict,
    pub reason: VerdictReason,
    pub spectrum: Spectrum3,
}

/// Eigenvalues within this band around zero are treated as vanishing.
pub const ZERO_EIG_TOL: f64 = 1e-10;
/// Tolerance for deciding that two eigenvalues coincide.
pub const EIG_EQ_TOL: f64 = 1e-9;
/// Slack on the entry bound; exponentials of generators satisfy the bound
/// exactly in real arithmetic, so only rounding must be absorbed.
pub const ENTRY_BOUND_SLACK: f64 = 1e-9;

/// Classifies a validated 3x3 Gibbs-stochastic matrix.
///
/// Matrices with a vanishing eigenvalue, or with a negative eigenvalue that
/// lacks an equal partner, admit no generator; positive real spectra are
/// decided by the off-diagonal entry bound. Complex spectra and equal
/// negative pairs fall outside the real-spectrum characterization and come
/// back undetermined.
pub fn embeddability_check(m: &GibbsStochasticMatrix) -> Result<EmbeddabilityVerdict> {
    let spectrum = spectrum3(m)?;
    let (l1, l2) = match spectrum {
        Spectrum3::Complex { .. } => {
            return Ok(EmbeddabilityVerdict {
                verdict: Verdict::Undetermined,
                reason: VerdictReason::ComplexSpectrum,
                spectrum,
            })
        }
        Spectrum3::Real { lambda1, lambda2 } => (lambda1, lambda2),
    };
    if l1.abs() <= ZERO_EIG_TOL || l2.abs() <= ZERO_EIG_TOL {
        return Ok(EmbeddabilityVerdict {
            verdict: Verdict::NotEmbeddable,
            reason: VerdictReason::ZeroEigenvalue,
            spectrum,
        });
    }
    if l1 < 0.0 || l2 < 0.0 {
        if (l1 - l2).abs() <= EIG_EQ_TOL {
            return Ok(EmbeddabilityVerdict {
                verdict: Verdict::Undetermined,
                reason: VerdictReason::EqualNegativePair,
                spectrum,
            });
        }
        return Ok(EmbeddabilityVerdict {
            verdict: Verdict::NotEmbeddable,
            reason: VerdictReason::UnequalWithNegative,
            spectrum,
        });
    }
    let f = f_lambda(l1, l2)?;
    let system = m.system();
    let z = system.partition_function();
    for i in 0..3 {
        let bound = f * system.weight(i) / z;
        for j in 0..3 {
            if i != j && m.entry(i, j) < bound - ENTRY_BOUND_SLACK {
                return Ok(EmbeddabilityVerdict {
                    verdict: Verdict::NotEmbeddable,
                    reason: VerdictReason::EntryBoundViolated {
                        row: i,
                        col: j,
                        entry: m.entry(i, j),
                        bound,
                    },
                    spectrum,
                });
            }
        }
    }
    Ok(EmbeddabilityVerdict {
        verdict: Verdict::Embeddable,
        reason: VerdictReason::EntryBoundHolds,
        spectrum,
    })
}

/// Generator of a continuous thermal relaxation: non-negative off-diagonal
/// rates, zero column sums and the Gibbs vector in the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    entries: Vec<f64>, // row-major n x n
    n: usize,
    system: ThermalSystem,
}

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn system(&self) -> &ThermalSystem {
        &self.system
    }
}

/// Builds a detailed-balance rate matrix from symmetric non-negative base
/// rates: `Q_ij = r_ij w_i` for `i != j`, diagonals fixing the column sums
/// to zero, so `Q_ij w_j = Q_ji w_i` and the Gibbs vector is annihilated.
pub fn thermal_rate_matrix(system: &ThermalSystem, base_rates: &[Vec<f64>]) -> Result<RateMatrix> {
    let n = system.len();
    if base_rates.len() != n || base_rates.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: base_rates.len(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = base_rates[i][j];
            if !r.is_finite() || r < 0.0 || (r - base_rates[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidBaseRate {
                    row: i,
                    col: j,
                    value: r,
                });
            }
        }
    }
    let mut entries = vec![0.0; n * n];
    for j in 0..n {
        let mut col_sum = 0.0;
        for i in 0..n {
            if i != j {
                let q = base_rates[i][j] * system.weight(i);
                entries[i * n + j] = q;
                col_sum += q;
            }
        }
        entries[j * n + j] = -col_sum;
    }
    Ok(RateMatrix {
        entries,
        n,
        system: system.clone(),
    })
}

/// Exponential `exp(Q t)` by scaling and squaring with a truncated series;
/// columns are renormalized afterwards and the result is validated.
pub fn exp_rate(q: &RateMatrix, t: f64) -> Result<GibbsStochasticMatrix> {
    if !(t >= 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "t",
            value: t,
            range: "[0, inf)",
        });
    }
    let n = q.n;
    let a: Vec<f64> = q.entries.iter().map(|e| e * t).collect();
    let norm = (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let b: Vec<f64> = a.iter().map(|e| e * scale).collect();

    let mul = |x: &[f64], y: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let xik = x[i * n + k];
                if xik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += xik * y[k * n + j];
                }
            }
        }
        out
    };

    let mut result = vec![0.0; n * n];
    let mut term = vec![0.0; n * n];
    for i in 0..n {
        result[i * n + i] = 1.0;
        term[i * n + i] = 1.0;
    }
    for k in 1..=30u32 {
        term = mul(&term, &b);
        let kf = f64::from(k);
        for e in term.iter_mut() {
            *e /= kf;
        }
        for (r, &e) in result.iter_mut().zip(term.iter()) {
            *r += e;
        }
        if term.iter().map(|e| e.abs()).fold(0.0f64, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }

    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| result[i * n..(i + 1) * n].to_vec()).collect();
    for j in 0..n {
        let sum: f64 = (0..n).map(|i| rows[i][j]).sum();
        if (sum - 1.0).abs() > TOL_STOCH {
            return Err(Error::InvalidMatrix(format!(
                "exponential column {j} sums to {sum}"
            )));
        }
        for row in rows.iter_mut() {
            row[j] /= sum;
        }
    }
    GibbsStochasticMatrix::from_rows(&q.system, rows)
}
