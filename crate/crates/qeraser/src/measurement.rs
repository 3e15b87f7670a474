//! Projective measurement with collapse, joint/conditional probabilities on
//! bipartite states, and the measurement-order-independence checker.
//!
//! A measurement owns a complete orthonormal family of outcome vectors on one
//! register; an outcome may own several vectors (degenerate projector), in
//! which case its probability sums the squared projections. Conditioning on
//! an outcome whose probability is at or below [`crate::ZERO_PROB_TOL`] is an
//! error; conditional probabilities given such an outcome are defined as
//! zero, so `joint = first * conditional` holds as an identity in both
//! measurement orders.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{BasisSet, Ket, Register};
use crate::{ANALYTIC_TOL, ZERO_PROB_TOL};

#[derive(Debug, Clone)]
struct Outcome {
    label: String,
    detector: String,
    vectors: Vec<Vec<Complex64>>,
}

/// A complete projective measurement on one register, with detector labels.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    register: Register,
    outcomes: Vec<Outcome>,
}

impl ProjectiveMeasurement {
    /// Builds a measurement from `(outcome label, detector label, vectors)`
    /// triples. The vectors of all outcomes together must form an orthonormal
    /// basis of the register; an outcome with several vectors is degenerate.
    pub fn new(
        register: Register,
        outcomes: Vec<(String, String, Vec<Vec<Complex64>>)>,
    ) -> Result<Self> {
        let dim = register.dim();
        let mut flat: Vec<(String, Vec<Complex64>)> = Vec::new();
        for (label, _, vectors) in &outcomes {
            if vectors.is_empty() {
                return Err(Error::NotOrthonormal(format!(
                    "outcome `{label}` owns no vectors"
                )));
            }
            for (k, v) in vectors.iter().enumerate() {
                flat.push((format!("{label}#{k}"), v.clone()));
            }
        }
        if flat.len() != dim {
            return Err(Error::NotOrthonormal(format!(
                "{} outcome vectors do not span a register of dimension {dim}",
                flat.len()
            )));
        }
        // Reuse the basis validation for pairwise orthonormality.
        BasisSet::new(register.clone(), flat)?;
        for (i, (label, ..)) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|(l, ..)| l == label) {
                return Err(Error::UnknownOutcome(format!(
                    "duplicate outcome label `{label}`"
                )));
            }
        }
        Ok(Self {
            register,
            outcomes: outcomes
                .into_iter()
                .map(|(label, detector, vectors)| Outcome {
                    label,
                    detector,
                    vectors,
                })
                .collect(),
        })
    }

    /// Non-degenerate measurement: one vector per outcome.
    pub fn simple(
        register: Register,
        outcomes: Vec<(String, String, Vec<Complex64>)>,
    ) -> Result<Self> {
        Self::new(
            register,
            outcomes
                .into_iter()
                .map(|(label, det, v)| (label, det, vec![v]))
                .collect(),
        )
    }

    /// Measurement in a basis, with detector labels aligned to the basis
    /// outcome order.
    pub fn from_basis(basis: &BasisSet, detectors: &[&str]) -> Result<Self> {
        if detectors.len() != basis.outcome_labels().len() {
            return Err(Error::DimensionMismatch {
                expected: basis.outcome_labels().len(),
                found: detectors.len(),
            });
        }
        Self::simple(
            basis.register().clone(),
            basis
                .outcome_labels()
                .iter()
                .zip(detectors)
                .map(|(label, det)| {
                    (
                        label.clone(),
                        det.to_string(),
                        basis.vector(label).expect("label from basis").to_vec(),
                    )
                })
                .collect(),
        )
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcome_labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|o| o.label.as_str())
    }

    pub fn outcome_label(&self, idx: usize) -> &str {
        &self.outcomes[idx].label
    }

    pub fn detector(&self, idx: usize) -> &str {
        &self.outcomes[idx].detector
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o.label == label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    /// Projector matrix of one outcome, row-major over the register.
    fn projector(&self, idx: usize) -> Vec<Complex64> {
        let dim = self.register.dim();
        let mut p = vec![Complex64::ZERO; dim * dim];
        for v in &self.outcomes[idx].vectors {
            for row in 0..dim {
                for col in 0..dim {
                    p[row * dim + col] += v[row] * v[col].conj();
                }
            }
        }
        p
    }

    fn project(&self, state: &Ket, idx: usize) -> Result<Ket> {
        state.apply_on_register(self.register.name(), &self.register, &self.projector(idx))
    }

    /// Born-rule probabilities of every outcome, in declared order.
    pub fn distribution(&self, state: &Ket) -> Result<OutcomeDistribution> {
        let entries = (0..self.outcomes.len())
            .map(|idx| {
                Ok((
                    self.outcomes[idx].label.clone(),
                    self.project(state, idx)?.squared_norm(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        OutcomeDistribution::new(entries)
    }
}

/// Probabilities per outcome label, in the measurement's declared order.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    entries: Vec<(String, f64)>,
}

impl OutcomeDistribution {
    /// Validates that entries are probabilities summing to 1. Negative values
    /// within rounding noise are clamped to zero.
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        let mut clean = Vec::with_capacity(entries.len());
        let mut sum = 0.0;
        for (label, p) in entries {
            if !p.is_finite() || !(-ANALYTIC_TOL..=1.0 + ANALYTIC_TOL).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "probability {p} for outcome `{label}` is out of range"
                )));
            }
            let p = p.clamp(0.0, 1.0);
            sum += p;
            clean.push((label, p));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self { entries: clean })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.entries[idx].0
    }

    pub fn probability_at(&self, idx: usize) -> f64 {
        self.entries[idx].1
    }

    pub fn probability(&self, label: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(l, p)| (l.as_str(), *p))
    }
}

/// Probability of one outcome on a normalized state.
pub fn outcome_probability(
    state: &Ket,
    meas: &ProjectiveMeasurement,
    outcome: &str,
) -> Result<f64> {
    let idx = meas.outcome_index(outcome)?;
    Ok(meas.project(state, idx)?.squared_norm())
}

/// Projects onto the outcome and renormalizes. The measured register is left
/// inside the outcome subspace. Errors on impossible outcomes.
pub fn collapse(state: &Ket, meas: &ProjectiveMeasurement, outcome: &str) -> Result<Ket> {
    let idx = meas.outcome_index(outcome)?;
    let projected = meas.project(state, idx)?;
    let p = projected.squared_norm();
    if p <= ZERO_PROB_TOL {
        return Err(Error::ImpossibleOutcome(outcome.to_string()));
    }
    Ok(projected.scaled(Complex64::new(1.0 / p.sqrt(), 0.0)))
}

fn check_distinct_registers(
    meas_a: &ProjectiveMeasurement,
    meas_b: &ProjectiveMeasurement,
) -> Result<()> {
    if meas_a.register().name() == meas_b.register().name() {
        return Err(Error::RegisterConflict(
            meas_a.register().name().to_string(),
        ));
    }
    Ok(())
}

/// Joint probability of two outcomes measured on distinct registers. The
/// result is symmetric in the two measurements.
pub fn joint_probability(
    state: &Ket,
    meas_a: &ProjectiveMeasurement,
    outcome_a: &str,
    meas_b: &ProjectiveMeasurement,
    outcome_b: &str,
) -> Result<f64> {
    check_distinct_registers(meas_a, meas_b)?;
    let idx_a = meas_a.outcome_index(outcome_a)?;
    let idx_b = meas_b.outcome_index(outcome_b)?;
    let projected = meas_b.project(&meas_a.project(state, idx_a)?, idx_b)?;
    Ok(projected.squared_norm())
}

/// Two-step route to the joint probability: probability of the first outcome
/// times the conditional probability of the second on the collapsed state.
/// A zero-probability first outcome yields zero.
pub fn sequential_joint(
    state: &Ket,
    first: (&ProjectiveMeasurement, &str),
    second: (&ProjectiveMeasurement, &str),
) -> Result<f64> {
    check_distinct_registers(first.0, second.0)?;
    let p_first = outcome_probability(state, first.0, first.1)?;
    if p_first <= ZERO_PROB_TOL {
        return Ok(0.0);
    }
    let conditioned = collapse(state, first.0, first.1)?;
    let p_second = outcome_probability(&conditioned, second.0, second.1)?;
    Ok(p_first * p_second)
}

/// Worst deviations between the joint probability and both sequential routes,
/// over every outcome pair of two measurements on distinct registers.
#[derive(Debug, Clone)]
pub struct OrderIndependenceReport {
    /// Max |joint − (A first, then B)| over all outcome pairs.
    pub max_dev_a_first: f64,
    /// Max |joint − (B first, then A)| over all outcome pairs.
    pub max_dev_b_first: f64,
    /// Outcome pair attaining the overall worst deviation.
    pub worst_pair: (String, String),
    pub tolerance: f64,
    pub pass: bool,
}

impl OrderIndependenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_dev_a_first.max(self.max_dev_b_first)
    }
}

pub fn order_independence_report(
    state: &Ket,
    meas_a: &ProjectiveMeasurement,
    meas_b: &ProjectiveMeasurement,
    tol: f64,
) -> Result<OrderIndependenceReport> {
    check_distinct_registers(meas_a, meas_b)?;
    let mut report = OrderIndependenceReport {
        max_dev_a_first: 0.0,
        max_dev_b_first: 0.0,
        worst_pair: (
            meas_a.outcome_label(0).to_string(),
            meas_b.outcome_label(0).to_string(),
        ),
        tolerance: tol,
        pass: true,
    };
    let mut worst = -1.0f64;
    for a in 0..meas_a.len() {
        for b in 0..meas_b.len() {
            let label_a = meas_a.outcome_label(a);
            let label_b = meas_b.outcome_label(b);
            let joint = joint_probability(state, meas_a, label_a, meas_b, label_b)?;
            let a_first = sequential_joint(state, (meas_a, label_a), (meas_b, label_b))?;
            let b_first = sequential_joint(state, (meas_b, label_b), (meas_a, label_a))?;
            let dev_a = (joint - a_first).abs();
            let dev_b = (joint - b_first).abs();
            report.max_dev_a_first = report.max_dev_a_first.max(dev_a);
            report.max_dev_b_first = report.max_dev_b_first.max(dev_b);
            if dev_a.max(dev_b) > worst {
                worst = dev_a.max(dev_b);
                report.worst_pair = (label_a.to_string(), label_b.to_string());
            }
        }
    }
    report.pass = report.max_deviation() <= tol;
    Ok(report)
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; the 1 - u shift keeps the logarithm finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// A normalized state with Gaussian-random complex amplitudes.
pub fn random_state<R: Rng + ?Sized>(layout: Vec<Register>, rng: &mut R) -> Ket {
    let dim: usize = layout.iter().map(Register::dim).product();
    loop {
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(standard_normal(rng), standard_normal(rng)))
            .collect();
        let ket = Ket::from_amplitudes(layout.clone(), amps).expect("layout validated by caller");
        if let Ok(normalized) = ket.normalized() {
            return normalized;
        }
    }
}

/// A measurement in a random orthonormal basis, built by Gram-Schmidt on a
/// Gaussian-random complex matrix. Outcome and detector labels are `m0`,
/// `m1`, ... in basis order.
pub fn random_measurement<R: Rng + ?Sized>(
    register: &Register,
    rng: &mut R,
) -> ProjectiveMeasurement {
    let dim = register.dim();
    'draw: loop {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        for _ in 0..dim {
            let mut v: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(standard_normal(rng), standard_normal(rng)))
                .collect();
            // Two orthogonalization passes push residuals to machine noise.
            for _ in 0..2 {
                for u in &basis {
                    let overlap: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in v.iter_mut().zip(u) {
                        *x -= overlap * y;
                    }
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue 'draw;
            }
            for x in &mut v {
                *x /= norm;
            }
            basis.push(v);
        }
        let outcomes = basis
            .into_iter()
            .enumerate()
            .map(|(k, v)| (format!("m{k}"), format!("m{k}"), v))
            .collect();
        match ProjectiveMeasurement::simple(register.clone(), outcomes) {
            Ok(m) => return m,
            Err(_) => continue 'draw,
        }
    }
}
