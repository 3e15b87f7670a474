//! Complex vector algebra over named registers with labeled orthonormal bases.
//!
//! States live in tensor products of small labeled registers (a register is a
//! named degree of freedom such as a photon polarization or a spatial path).
//! Composite amplitudes are stored row-major over the layout's register order,
//! so a basis-label tuple is the canonical key for one amplitude. All values
//! are immutable after construction; every operation returns a new value.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ANALYTIC_TOL;

/// A named degree of freedom with an ordered list of basis-state labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Register {
    name: String,
    labels: Vec<String>,
}

impl Register {
    /// Builds a register. Labels must be unique and at least two.
    pub fn new(name: &str, labels: &[&str]) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidRegister(format!(
                "register `{name}` needs at least 2 labels, got {}",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidRegister(format!(
                    "register `{name}` has duplicate label `{a}`"
                )));
            }
        }
        Ok(Self {
            name: name.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn check_finite(amps: &[Complex64]) -> Result<()> {
    for (i, a) in amps.iter().enumerate() {
        if !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

/// A pure state: one complex amplitude per composite basis label tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    layout: Vec<Register>,
    amps: Vec<Complex64>,
}

impl Ket {
    /// Builds a state from explicit amplitudes in row-major layout order.
    pub fn from_amplitudes(layout: Vec<Register>, amps: Vec<Complex64>) -> Result<Self> {
        let expected: usize = layout.iter().map(Register::dim).product();
        for (i, r) in layout.iter().enumerate() {
            if layout[..i].iter().any(|s| s.name() == r.name()) {
                return Err(Error::LayoutConflict(r.name().to_string()));
            }
        }
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: amps.len(),
            });
        }
        check_finite(&amps)?;
        Ok(Self { layout, amps })
    }

    /// The basis state of a single register picked out by `label`.
    pub fn basis(register: Register, label: &str) -> Result<Self> {
        let idx = register.index_of(label).ok_or_else(|| Error::UnknownLabel {
            register: register.name().to_string(),
            label: label.to_string(),
        })?;
        let mut amps = vec![Complex64::ZERO; register.dim()];
        amps[idx] = Complex64::ONE;
        Ok(Self {
            layout: vec![register],
            amps,
        })
    }

    /// A single-register superposition from `(label, amplitude)` terms.
    /// Omitted labels get amplitude zero; repeated labels accumulate.
    pub fn superposition(register: Register, terms: &[(&str, Complex64)]) -> Result<Self> {
        let mut amps = vec![Complex64::ZERO; register.dim()];
        for (label, amp) in terms {
            let idx = register.index_of(label).ok_or_else(|| Error::UnknownLabel {
                register: register.name().to_string(),
                label: label.to_string(),
            })?;
            amps[idx] += amp;
        }
        check_finite(&amps)?;
        Ok(Self {
            layout: vec![register],
            amps,
        })
    }

    pub fn layout(&self) -> &[Register] {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn register_position(&self, name: &str) -> Option<usize> {
        self.layout.iter().position(|r| r.name() == name)
    }

    /// Stride of each layout slot in the flat row-major amplitude index.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.layout.len()];
        for i in (0..self.layout.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.layout[i + 1].dim();
        }
        strides
    }

    /// Amplitude at a composite basis label tuple, one label per register
    /// in layout order.
    pub fn amplitude(&self, labels: &[&str]) -> Result<Complex64> {
        if labels.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                found: labels.len(),
            });
        }
        let strides = self.strides();
        let mut flat = 0usize;
        for ((reg, label), stride) in self.layout.iter().zip(labels).zip(&strides) {
            let idx = reg.index_of(label).ok_or_else(|| Error::UnknownLabel {
                register: reg.name().to_string(),
                label: label.to_string(),
            })?;
            flat += idx * stride;
        }
        Ok(self.amps[flat])
    }

    pub fn squared_norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.squared_norm() - 1.0).abs() <= tol
    }

    /// Rescales to unit norm. Errors on (numerically) zero states.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= crate::ZERO_PROB_TOL.sqrt() {
            return Err(Error::NotNormalized(self.squared_norm()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            layout: self.layout.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(
                self.layout.iter().map(|r| r.name().to_string()).collect(),
                other.layout.iter().map(|r| r.name().to_string()).collect(),
            ));
        }
        Ok(())
    }

    /// Componentwise sum. Layouts must match exactly.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_layout(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Inner product ⟨self|other⟩. Layouts must match exactly.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_layout(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product. Register names must not collide; the result layout is
    /// `self`'s registers followed by `other`'s.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for r in &other.layout {
            if self.register_position(r.name()).is_some() {
                return Err(Error::LayoutConflict(r.name().to_string()));
            }
        }
        let mut layout = self.layout.clone();
        layout.extend(other.layout.iter().cloned());
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { layout, amps })
    }

    /// True iff both states are normalized, share a layout, and
    /// |⟨self|other⟩| ≥ 1 − tol.
    pub fn equal_up_to_global_phase(&self, other: &Self, tol: f64) -> Result<bool> {
        // 1e-9 leaves headroom over the construction tolerance without
        // accepting genuinely unnormalized inputs.
        if !self.is_normalized(1e-9) {
            return Err(Error::NotNormalized(self.squared_norm()));
        }
        if !other.is_normalized(1e-9) {
            return Err(Error::NotNormalized(other.squared_norm()));
        }
        let overlap = self.inner(other)?;
        Ok(overlap.norm() >= 1.0 - tol)
    }

    /// Applies `matrix` (row-major, `out_register.dim()` × input dim) to the
    /// register named `name`, acting as identity on every other register. The
    /// register at that slot is replaced by `out_register`.
    pub(crate) fn apply_on_register(
        &self,
        name: &str,
        out_register: &Register,
        matrix: &[Complex64],
    ) -> Result<Self> {
        let pos = self
            .register_position(name)
            .ok_or_else(|| Error::MissingRegister(name.to_string()))?;
        let in_dim = self.layout[pos].dim();
        let out_dim = out_register.dim();
        debug_assert_eq!(matrix.len(), in_dim * out_dim);

        // Flat index = prefix * (reg_dim * suffix_len) + reg_idx * suffix_len + suffix.
        let suffix_len: usize = self.layout[pos + 1..].iter().map(Register::dim).product();
        let prefix_len: usize = self.layout[..pos].iter().map(Register::dim).product();

        let mut layout = self.layout.clone();
        layout[pos] = out_register.clone();
        let mut amps = vec![Complex64::ZERO; prefix_len * out_dim * suffix_len];
        for prefix in 0..prefix_len {
            for out_idx in 0..out_dim {
                for suffix in 0..suffix_len {
                    let mut acc = Complex64::ZERO;
                    for in_idx in 0..in_dim {
                        let src = (prefix * in_dim + in_idx) * suffix_len + suffix;
                        acc += matrix[out_idx * in_dim + in_idx] * self.amps[src];
                    }
                    amps[(prefix * out_dim + out_idx) * suffix_len + suffix] = acc;
                }
            }
        }
        Ok(Self { layout, amps })
    }

    /// Coefficients of the state against an orthonormal basis of one register,
    /// keyed by outcome label × remaining composite labels.
    pub fn express_in(&self, basis: &BasisSet) -> Result<CoefficientTable> {
        let pos = self
            .register_position(basis.register().name())
            .ok_or_else(|| Error::MissingRegister(basis.register().name().to_string()))?;
        if self.layout[pos] != *basis.register() {
            return Err(Error::LabelMismatch {
                name: basis.register().name().to_string(),
                expected: basis.register().labels().to_vec(),
                found: self.layout[pos].labels().to_vec(),
            });
        }
        // Rows of the change matrix are conjugated basis vectors.
        let dim = basis.register().dim();
        let mut matrix = Vec::with_capacity(dim * dim);
        for k in 0..dim {
            matrix.extend(basis.vectors[k].iter().map(Complex64::conj));
        }
        // The outcome axis reuses the register machinery with outcome labels.
        let outcome_register = Register::new(
            basis.register().name(),
            &basis
                .outcome_labels()
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>(),
        )?;
        let expressed = self.apply_on_register(basis.register().name(), &outcome_register, &matrix)?;
        let remaining: Vec<Register> = expressed
            .layout
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, r)| r.clone())
            .collect();
        Ok(CoefficientTable {
            basis: basis.clone(),
            position: pos,
            remaining,
            expressed,
        })
    }
}

/// An isometry from one labeled register to another, stored row-major and
/// indexed `(output label, input label)`. Construction rejects matrices whose
/// columns are not orthonormal.
#[derive(Debug, Clone)]
pub struct LinearMap {
    input: Register,
    output: Register,
    matrix: Vec<Complex64>,
}

impl LinearMap {
    pub fn new(input: Register, output: Register, matrix: Vec<Complex64>) -> Result<Self> {
        let map = Self::new_unchecked(input, output, matrix)?;
        let defect = map.isometry_defect();
        if defect > ANALYTIC_TOL {
            return Err(Error::NotOrthonormal(format!(
                "columns of map {} -> {} deviate from orthonormality by {defect:.3e}",
                map.input.name(),
                map.output.name()
            )));
        }
        Ok(map)
    }

    /// Skips the isometry check. Used to inject deliberate faults into the
    /// verification suite; everything else goes through [`LinearMap::new`].
    pub(crate) fn new_unchecked(
        input: Register,
        output: Register,
        matrix: Vec<Complex64>,
    ) -> Result<Self> {
        if matrix.len() != input.dim() * output.dim() {
            return Err(Error::DimensionMismatch {
                expected: input.dim() * output.dim(),
                found: matrix.len(),
            });
        }
        if output.dim() < input.dim() {
            return Err(Error::NotOrthonormal(format!(
                "map {} -> {} shrinks dimension {} -> {}",
                input.name(),
                output.name(),
                input.dim(),
                output.dim()
            )));
        }
        check_finite(&matrix)?;
        Ok(Self {
            input,
            output,
            matrix,
        })
    }

    pub fn input(&self) -> &Register {
        &self.input
    }

    pub fn output(&self) -> &Register {
        &self.output
    }

    /// Row-major entries, `output.dim()` × `input.dim()`.
    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn entry(&self, out_label: &str, in_label: &str) -> Result<Complex64> {
        let row = self
            .output
            .index_of(out_label)
            .ok_or_else(|| Error::UnknownLabel {
                register: self.output.name().to_string(),
                label: out_label.to_string(),
            })?;
        let col = self
            .input
            .index_of(in_label)
            .ok_or_else(|| Error::UnknownLabel {
                register: self.input.name().to_string(),
                label: in_label.to_string(),
            })?;
        Ok(self.matrix[row * self.input.dim() + col])
    }

    /// Max-entry deviation of M†M from the identity.
    pub fn isometry_defect(&self) -> f64 {
        let n = self.input.dim();
        let m = self.output.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..m {
                    acc += self.matrix[k * n + i].conj() * self.matrix[k * n + j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - expected).norm());
            }
        }
        worst
    }

    /// Applies the map to the matching register of `state`, identity on the
    /// rest. The input register is replaced by the output register in the
    /// layout; the state's register must match the map's input labels.
    pub fn apply(&self, state: &Ket) -> Result<Ket> {
        let pos = state
            .register_position(self.input.name())
            .ok_or_else(|| Error::MissingRegister(self.input.name().to_string()))?;
        if state.layout[pos] != self.input {
            return Err(Error::LabelMismatch {
                name: self.input.name().to_string(),
                expected: self.input.labels().to_vec(),
                found: state.layout[pos].labels().to_vec(),
            });
        }
        state.apply_on_register(self.input.name(), &self.output, &self.matrix)
    }

    /// Composition `self ∘ first`; requires `first.output == self.input`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if first.output != self.input {
            return Err(Error::LabelMismatch {
                name: self.input.name().to_string(),
                expected: self.input.labels().to_vec(),
                found: first.output.labels().to_vec(),
            });
        }
        let n = first.input.dim();
        let mid = self.input.dim();
        let m = self.output.dim();
        let mut matrix = vec![Complex64::ZERO; n * m];
        for row in 0..m {
            for col in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..mid {
                    acc += self.matrix[row * mid + k] * first.matrix[k * n + col];
                }
                matrix[row * n + col] = acc;
            }
        }
        Self::new_unchecked(first.input.clone(), self.output.clone(), matrix)
    }
}

/// An orthonormal, complete family of outcome vectors on one register.
#[derive(Debug, Clone)]
pub struct BasisSet {
    register: Register,
    outcome_labels: Vec<String>,
    vectors: Vec<Vec<Complex64>>,
}

impl BasisSet {
    /// Builds a basis from `(outcome label, vector)` pairs. The vectors must
    /// be pairwise orthonormal and span the register.
    pub fn new(register: Register, vectors: Vec<(String, Vec<Complex64>)>) -> Result<Self> {
        if vectors.len() != register.dim() {
            return Err(Error::NotOrthonormal(format!(
                "basis on `{}` has {} vectors for dimension {}",
                register.name(),
                vectors.len(),
                register.dim()
            )));
        }
        for (label, v) in &vectors {
            if v.len() != register.dim() {
                return Err(Error::DimensionMismatch {
                    expected: register.dim(),
                    found: v.len(),
                });
            }
            check_finite(v).map_err(|_| {
                Error::NotOrthonormal(format!("vector `{label}` has a non-finite entry"))
            })?;
        }
        for i in 0..vectors.len() {
            for j in i..vectors.len() {
                let dot: Complex64 = vectors[i]
                    .1
                    .iter()
                    .zip(&vectors[j].1)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).norm() > ANALYTIC_TOL {
                    return Err(Error::NotOrthonormal(format!(
                        "⟨{}|{}⟩ deviates by {:.3e}",
                        vectors[i].0,
                        vectors[j].0,
                        (dot - expected).norm()
                    )));
                }
            }
        }
        let (outcome_labels, vectors) = vectors.into_iter().unzip();
        Ok(Self {
            register,
            outcome_labels,
            vectors,
        })
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn vector(&self, outcome: &str) -> Result<&[Complex64]> {
        let idx = self
            .outcome_labels
            .iter()
            .position(|l| l == outcome)
            .ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))?;
        Ok(&self.vectors[idx])
    }

    /// The outcome vector as a single-register state.
    pub fn vector_ket(&self, outcome: &str) -> Result<Ket> {
        Ket::from_amplitudes(vec![self.register.clone()], self.vector(outcome)?.to_vec())
    }
}

/// Result of [`Ket::express_in`]: inner products against one register's basis,
/// keyed by outcome label × remaining composite labels.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    basis: BasisSet,
    position: usize,
    remaining: Vec<Register>,
    /// The re-expressed state; its register at `position` carries outcome labels.
    expressed: Ket,
}

impl CoefficientTable {
    /// Coefficient for `outcome` and one label per remaining register, in
    /// layout order.
    pub fn coefficient(&self, outcome: &str, rest: &[&str]) -> Result<Complex64> {
        if rest.len() != self.remaining.len() {
            return Err(Error::DimensionMismatch {
                expected: self.remaining.len(),
                found: rest.len(),
            });
        }
        let mut labels: Vec<&str> = Vec::with_capacity(rest.len() + 1);
        labels.extend_from_slice(&rest[..self.position]);
        labels.push(outcome);
        labels.extend_from_slice(&rest[self.position..]);
        self.expressed.amplitude(&labels)
    }

    pub fn outcome_labels(&self) -> &[String] {
        self.basis.outcome_labels()
    }

    pub fn remaining(&self) -> &[Register] {
        &self.remaining
    }

    /// Sum of squared coefficient magnitudes; equals the squared norm of the
    /// original state.
    pub fn squared_norm(&self) -> f64 {
        self.expressed.squared_norm()
    }

    /// Rebuilds the original state from the coefficients.
    pub fn reconstruct(&self) -> Result<Ket> {
        let dim = self.basis.register().dim();
        // Columns of the synthesis matrix are the basis vectors.
        let mut matrix = vec![Complex64::ZERO; dim * dim];
        for (k, v) in self.basis.vectors.iter().enumerate() {
            for (l, amp) in v.iter().enumerate() {
                matrix[l * dim + k] = *amp;
            }
        }
        self.expressed.apply_on_register(
            self.basis.register().name(),
            self.basis.register(),
            &matrix,
        )
    }
}
