//! Optical element catalog and pipelines for the two-photon eraser apparatus
//! and the single-photon Mach-Zehnder scenario.
//!
//! # Phase conventions
//!
//! Beam-splitter phase bookkeeping is error prone, so every convention below
//! is pinned by a test (and re-checked by `qeraser verify`):
//!
//! | element        | action |
//! |----------------|--------|
//! | front PBS      | `\|H⟩_s → i\|a⟩`, `\|V⟩_s → \|b⟩` (H reflected into arm a with factor i, V transmitted into arm b) |
//! | dephasing plate| `\|a⟩ → e^{iθ}\|a⟩`, `\|b⟩ → \|b⟩` (plate sits on arm a) |
//! | symmetric BS   | `\|a⟩ → (\|3⟩ + i\|4⟩)/√2`, `\|b⟩ → (\|4⟩ + i\|3⟩)/√2` (reflection factor i) |
//! | EOM on         | `\|R⟩ → \|V⟩`, `\|L⟩ → \|H⟩`; off is the identity |
//!
//! The polarization controllers that align the two arms for interference
//! carry no free parameter and are absorbed into the ideal symmetric BS.
//! With these conventions the source state `(\|H⟩_e\|V⟩_s + \|V⟩_e\|H⟩_s)/√2`
//! evolves through the front stage into
//! `(\|H⟩_e\|b⟩_s + i e^{iθ}\|V⟩_e\|a⟩_s)/√2` exactly, and the full
//! interferometer is port-pure on the elliptical polarization pair.
//!
//! The Mach-Zehnder scenario with an insertable second splitter uses the same
//! symmetric-BS matrix for both splitters; with the splitter inserted, zero
//! phase sends the photon to detector D2 with certainty.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::hilbert::{BasisSet, Ket, LinearMap, Register};
use crate::measurement::ProjectiveMeasurement;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Environment-photon polarization register.
pub fn env_register() -> Register {
    Register::new("env", &["H", "V"]).expect("static register")
}

/// System-photon polarization register (before the interferometer).
pub fn sys_polarization_register() -> Register {
    Register::new("sys", &["H", "V"]).expect("static register")
}

/// System-photon interferometer-arm register (between PBS and final BS).
pub fn arm_register() -> Register {
    Register::new("sys", &["a", "b"]).expect("static register")
}

/// System-photon output-port register (after the final BS).
pub fn port_register() -> Register {
    Register::new("sys", &["3", "4"]).expect("static register")
}

/// Which analyzer setting the environment photon meets: `Zero` leaves the
/// EOM off (linear V/H analysis), `One` switches it on (circular R/L
/// analysis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Zero,
    One,
}

impl Choice {
    pub fn bit(self) -> u8 {
        match self {
            Choice::Zero => 0,
            Choice::One => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Choice::Zero),
            1 => Ok(Choice::One),
            other => Err(Error::InvalidConfig(format!("choice bit {other}"))),
        }
    }

    pub const ALL: [Choice; 2] = [Choice::Zero, Choice::One];
}

impl std::fmt::Display for Choice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.bit())
    }
}

impl Serialize for Choice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.bit())
    }
}

/// Wraps an angle into `[-π, π]`. Values already in range pass through
/// unchanged, so both interval endpoints are representable.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..=PI).contains(&theta) {
        return theta;
    }
    let wrapped = theta.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Fringe phase `α = θ/2 + π/4`, reported in `[0, π)`.
pub fn fringe_phase(theta: f64) -> f64 {
    (wrap_angle(theta) / 2.0 + FRAC_PI_4).rem_euclid(PI)
}

/// Dephasing and analyzer setting for one apparatus configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparatusParams {
    theta: f64,
    choice: Choice,
}

impl ApparatusParams {
    pub fn new(theta: f64, choice: Choice) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidConfig(format!("theta {theta} is not finite")));
        }
        Ok(Self {
            theta: wrap_angle(theta),
            choice,
        })
    }

    /// Dephasing between the arms, wrapped to `[-π, π]`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn choice(&self) -> Choice {
        self.choice
    }

    /// Fringe phase `α = θ/2 + π/4` in `[0, π)`.
    pub fn alpha(&self) -> f64 {
        fringe_phase(self.theta)
    }
}

/// Constructors for every optical element, plus the pipelines built from
/// them. The default catalog is the ideal apparatus; `with_bs_phase_error`
/// deliberately corrupts the final beam splitter so the verification suite
/// can prove it catches broken conventions.
#[derive(Debug, Clone, Copy, Default)]
pub struct ElementCatalog {
    bs_phase_error: f64,
}

impl ElementCatalog {
    pub fn ideal() -> Self {
        Self::default()
    }

    /// Fault-injection hook: multiplies the final-BS reflection amplitudes by
    /// `e^{i·error}`, which breaks unitarity for any nonzero error.
    pub fn with_bs_phase_error(error: f64) -> Self {
        Self {
            bs_phase_error: error,
        }
    }

    /// Polarizing beam splitter at the interferometer input:
    /// `|H⟩_s → i|a⟩`, `|V⟩_s → |b⟩`.
    pub fn front_pbs(&self) -> LinearMap {
        LinearMap::new(
            sys_polarization_register(),
            arm_register(),
            vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .expect("static unitary")
    }

    /// Dephasing plate on arm a: `|a⟩ → e^{iθ}|a⟩`, `|b⟩ → |b⟩`.
    pub fn phase_plate(&self, theta: f64) -> LinearMap {
        phase_shift_map(&arm_register(), "a", theta).expect("static unitary")
    }

    /// Symmetric 50/50 splitter from the arms to the output ports:
    /// `|a⟩ → (|3⟩ + i|4⟩)/√2`, `|b⟩ → (|4⟩ + i|3⟩)/√2`.
    pub fn final_bs(&self) -> LinearMap {
        symmetric_bs(&arm_register(), &port_register(), self.bs_phase_error)
    }

    /// Electro-optic modulator in its "on" state: `|R⟩ → |V⟩`, `|L⟩ → |H⟩`.
    pub fn eom_on(&self) -> LinearMap {
        let reg = env_register();
        LinearMap::new(
            reg.clone(),
            reg,
            vec![
                c(SQRT_HALF, 0.0),
                c(0.0, SQRT_HALF),
                c(SQRT_HALF, 0.0),
                c(0.0, -SQRT_HALF),
            ],
        )
        .expect("static unitary")
    }

    /// The environment-photon analyzer for one choice setting. Choice 0 sends
    /// V to detector D1 and H to D2. Choice 1 routes the EOM output through
    /// the same linear analyzer, which lands R on D1 and L on D2.
    pub fn env_analyzer(&self, choice: Choice) -> ProjectiveMeasurement {
        let reg = env_register();
        let (v_vec, h_vec) = match choice {
            Choice::Zero => (vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]),
            Choice::One => {
                // Measuring V (or H) behind the EOM projects onto the EOM
                // preimage of |V⟩ (or |H⟩); those preimages are |R⟩ and |L⟩.
                let eom = self.eom_on();
                let preimage = |target: usize| -> Vec<Complex64> {
                    (0..2)
                        .map(|col| eom.matrix()[target * 2 + col].conj())
                        .collect()
                };
                (preimage(1), preimage(0))
            }
        };
        let labels = match choice {
            Choice::Zero => ("V", "H"),
            Choice::One => ("R", "L"),
        };
        ProjectiveMeasurement::simple(
            reg,
            vec![
                (labels.0.into(), "D1".into(), v_vec),
                (labels.1.into(), "D2".into(), h_vec),
            ],
        )
        .expect("static analyzer")
    }

    /// Output-port measurement: port 3 fires detector D3, port 4 fires D4.
    pub fn port_measurement(&self) -> ProjectiveMeasurement {
        ProjectiveMeasurement::simple(
            port_register(),
            vec![
                ("3".into(), "D3".into(), vec![c(1.0, 0.0), c(0.0, 0.0)]),
                ("4".into(), "D4".into(), vec![c(0.0, 0.0), c(1.0, 0.0)]),
            ],
        )
        .expect("static measurement")
    }

    /// PBS followed by the dephasing plate, applied to the system register.
    pub fn front_stage(&self, state: &Ket, theta: f64) -> Result<Ket> {
        self.phase_plate(theta).apply(&self.front_pbs().apply(state)?)
    }

    /// Whole-interferometer transfer map `final BS ∘ plate(θ) ∘ PBS`, from
    /// the system polarization register to the output ports.
    pub fn interferometer_transfer(&self, theta: f64) -> LinearMap {
        self.final_bs()
            .compose(&self.phase_plate(theta))
            .and_then(|m| m.compose(&self.front_pbs()))
            .expect("registers chain by construction")
    }

    /// The post-interferometer two-photon state, built by driving the source
    /// state through the element pipeline.
    pub fn full_eraser_state(&self, theta: f64) -> Ket {
        let state = initial_state();
        self.final_bs()
            .apply(&self.front_stage(&state, theta).expect("sys register present"))
            .expect("sys register present")
    }

    /// The same state built along an independent route: the source state
    /// rewritten in the elliptical pair basis, then pushed through the
    /// interferometer transfer map.
    pub fn eraser_state_via_elliptical(&self, theta: f64) -> Ket {
        self.interferometer_transfer(theta)
            .apply(&entangled_state_elliptical(theta))
            .expect("sys register present")
    }

    /// Detector probabilities `(D1, D2)` of the single-photon Mach-Zehnder
    /// interferometer of the delayed-choice scenario. With the second
    /// splitter removed the detectors see the arms directly; inserted, they
    /// see the interfering output ports.
    pub fn wheeler_mz(&self, phase: f64, second_bs_inserted: bool) -> (f64, f64) {
        let arm = Register::new("mz", &["a", "b"]).expect("static register");
        let first_bs = symmetric_bs(&arm, &arm, 0.0);
        let plate = phase_shift_map(&arm, "a", phase).expect("static unitary");
        let photon = Ket::basis(arm.clone(), "a").expect("label exists");
        let inside = plate
            .apply(&first_bs.apply(&photon).expect("arm register"))
            .expect("arm register");
        let (state, register) = if second_bs_inserted {
            let port = Register::new("mz", &["1", "2"]).expect("static register");
            let second_bs = symmetric_bs(&arm, &port, self.bs_phase_error);
            (second_bs.apply(&inside).expect("arm register"), port)
        } else {
            (inside, arm)
        };
        let labels = register.labels().to_vec();
        let meas = ProjectiveMeasurement::simple(
            register,
            vec![
                (
                    labels[0].clone(),
                    "D1".into(),
                    vec![c(1.0, 0.0), c(0.0, 0.0)],
                ),
                (
                    labels[1].clone(),
                    "D2".into(),
                    vec![c(0.0, 0.0), c(1.0, 0.0)],
                ),
            ],
        )
        .expect("static measurement");
        // Per-outcome probabilities instead of a validated distribution, so
        // a corrupted splitter shows up as rows that fail to sum to 1 rather
        // than as a panic.
        let p1 = crate::measurement::outcome_probability(&state, &meas, &labels[0])
            .expect("register present");
        let p2 = crate::measurement::outcome_probability(&state, &meas, &labels[1])
            .expect("register present");
        (p1, p2)
    }
}

/// Symmetric 50/50 splitter matrix between two 2-label registers, reflection
/// factor `i`. A nonzero `phase_error` multiplies the reflection amplitudes
/// by `e^{i·phase_error}` and is only reachable through the fault-injection
/// catalog.
fn symmetric_bs(input: &Register, output: &Register, phase_error: f64) -> LinearMap {
    let reflect = Complex64::from_polar(SQRT_HALF, FRAC_PI_2 + phase_error);
    let transmit = c(SQRT_HALF, 0.0);
    let matrix = vec![transmit, reflect, reflect, transmit];
    if phase_error == 0.0 {
        LinearMap::new(input.clone(), output.clone(), matrix).expect("static unitary")
    } else {
        LinearMap::new_unchecked(input.clone(), output.clone(), matrix)
            .expect("dimensions are static")
    }
}

/// Phase shift `e^{iθ}` on a single label of a register, identity elsewhere.
fn phase_shift_map(register: &Register, label: &str, theta: f64) -> Result<LinearMap> {
    let dim = register.dim();
    let shifted = register.index_of(label).ok_or_else(|| Error::UnknownLabel {
        register: register.name().to_string(),
        label: label.to_string(),
    })?;
    let mut matrix = vec![Complex64::ZERO; dim * dim];
    for k in 0..dim {
        matrix[k * dim + k] = if k == shifted {
            Complex64::from_polar(1.0, theta)
        } else {
            Complex64::ONE
        };
    }
    LinearMap::new(register.clone(), register.clone(), matrix)
}

/// The source state `(|H⟩_e|V⟩_s + |V⟩_e|H⟩_s)/√2`.
pub fn initial_state() -> Ket {
    let hv = Ket::basis(env_register(), "H")
        .and_then(|e| e.tensor(&Ket::basis(sys_polarization_register(), "V")?))
        .expect("static labels");
    let vh = Ket::basis(env_register(), "V")
        .and_then(|e| e.tensor(&Ket::basis(sys_polarization_register(), "H")?))
        .expect("static labels");
    hv.add(&vh).expect("same layout").scaled(c(SQRT_HALF, 0.0))
}

/// Circular polarization basis on the environment register:
/// `|R⟩ = (|H⟩ + i|V⟩)/√2`, `|L⟩ = (|H⟩ − i|V⟩)/√2`.
pub fn circular_basis() -> BasisSet {
    BasisSet::new(
        env_register(),
        vec![
            ("R".into(), vec![c(SQRT_HALF, 0.0), c(0.0, SQRT_HALF)]),
            ("L".into(), vec![c(SQRT_HALF, 0.0), c(0.0, -SQRT_HALF)]),
        ],
    )
    .expect("static basis")
}

/// Elliptical polarization pair on an `{H, V}` register:
/// `|E⟩ = (|H⟩ + e^{iθ}|V⟩)/√2`, `|E_perp⟩ = (|H⟩ − e^{iθ}|V⟩)/√2`.
pub fn elliptical_basis_for(register: &Register, theta: f64) -> Result<BasisSet> {
    if register.labels() != ["H", "V"] {
        return Err(Error::LabelMismatch {
            name: register.name().to_string(),
            expected: vec!["H".into(), "V".into()],
            found: register.labels().to_vec(),
        });
    }
    let phase = Complex64::from_polar(SQRT_HALF, theta);
    BasisSet::new(
        register.clone(),
        vec![
            ("E".into(), vec![c(SQRT_HALF, 0.0), phase]),
            ("E_perp".into(), vec![c(SQRT_HALF, 0.0), -phase]),
        ],
    )
}

/// Elliptical pair on the environment register.
pub fn elliptical_basis(theta: f64) -> BasisSet {
    elliptical_basis_for(&env_register(), theta).expect("env register is {H, V}")
}

/// The source state rewritten as `(|E⟩_e|E⟩_s − |E_perp⟩_e|E_perp⟩_s)/√2`,
/// built directly from the elliptical vectors (it equals the source state up
/// to a global phase).
pub fn entangled_state_elliptical(theta: f64) -> Ket {
    let env = elliptical_basis(theta);
    let sys = elliptical_basis_for(&sys_polarization_register(), theta)
        .expect("sys polarization register is {H, V}");
    let ee = env
        .vector_ket("E")
        .and_then(|e| e.tensor(&sys.vector_ket("E")?))
        .expect("static labels");
    let pp = env
        .vector_ket("E_perp")
        .and_then(|e| e.tensor(&sys.vector_ket("E_perp")?))
        .expect("static labels");
    ee.add(&pp.scaled(c(-1.0, 0.0)))
        .expect("same layout")
        .scaled(c(SQRT_HALF, 0.0))
}

/// The post-interferometer state written directly against the elliptical
/// environment pair: `(i|E⟩_e|3⟩ + |E_perp⟩_e|4⟩)/√2`.
pub fn hybrid_state_elliptical(theta: f64) -> Ket {
    let env = elliptical_basis(theta);
    let e3 = env
        .vector_ket("E")
        .and_then(|e| e.tensor(&Ket::basis(port_register(), "3")?))
        .expect("static labels")
        .scaled(c(0.0, 1.0));
    let p4 = env
        .vector_ket("E_perp")
        .and_then(|e| e.tensor(&Ket::basis(port_register(), "4")?))
        .expect("static labels");
    e3.add(&p4).expect("same layout").scaled(c(SQRT_HALF, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{collapse, outcome_probability};
    use crate::ANALYTIC_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_state_amplitudes() {
        let state = initial_state();
        assert!((state.amplitude(&["H", "V"]).unwrap() - c(SQRT_HALF, 0.0)).norm() < 1e-15);
        assert!((state.amplitude(&["V", "H"]).unwrap() - c(SQRT_HALF, 0.0)).norm() < 1e-15);
        assert!(state.amplitude(&["H", "H"]).unwrap().norm() < 1e-15);
        assert!(state.amplitude(&["V", "V"]).unwrap().norm() < 1e-15);
        assert!((state.squared_norm() - 1.0).abs() < ANALYTIC_TOL);
    }

    #[test]
    fn initial_state_env_marginals_are_even() {
        let catalog = ElementCatalog::ideal();
        let state = initial_state();
        let analyzer = catalog.env_analyzer(Choice::Zero);
        for outcome in ["V", "H"] {
            let p = outcome_probability(&state, &analyzer, outcome).unwrap();
            assert!((p - 0.5).abs() < ANALYTIC_TOL);
        }
    }

    #[test]
    fn front_stage_matches_pinned_convention() {
        let catalog = ElementCatalog::ideal();
        // theta = 0: amplitudes 1/√2 at (H, b) and i/√2 at (V, a).
        let state = catalog.front_stage(&initial_state(), 0.0).unwrap();
        assert!((state.amplitude(&["H", "b"]).unwrap() - c(SQRT_HALF, 0.0)).norm() < 1e-15);
        assert!((state.amplitude(&["V", "a"]).unwrap() - c(0.0, SQRT_HALF)).norm() < 1e-15);
        assert!(state.amplitude(&["H", "a"]).unwrap().norm() < 1e-15);
        assert!(state.amplitude(&["V", "b"]).unwrap().norm() < 1e-15);
        // theta = π flips the sign of the (V, a) amplitude.
        let state = catalog.front_stage(&initial_state(), PI).unwrap();
        assert!((state.amplitude(&["V", "a"]).unwrap() - c(0.0, -SQRT_HALF)).norm() < 1e-12);
    }

    #[test]
    fn front_stage_preserves_norm_for_random_theta() {
        let catalog = ElementCatalog::ideal();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let theta: f64 = rng.random::<f64>() * 2.0 * PI - PI;
            let state = catalog.front_stage(&initial_state(), theta).unwrap();
            assert!((state.squared_norm() - 1.0).abs() < ANALYTIC_TOL);
        }
    }

    #[test]
    fn front_stage_requires_polarization_register() {
        let catalog = ElementCatalog::ideal();
        let wrong = Ket::basis(env_register(), "H").unwrap();
        assert!(catalog.front_stage(&wrong, 0.0).is_err());
    }

    #[test]
    fn final_bs_splits_arm_a_evenly_with_i_on_reflection() {
        let catalog = ElementCatalog::ideal();
        let a = Ket::basis(arm_register(), "a").unwrap();
        let out = catalog.final_bs().apply(&a).unwrap();
        assert!((out.amplitude(&["3"]).unwrap() - c(SQRT_HALF, 0.0)).norm() < 1e-15);
        assert!((out.amplitude(&["4"]).unwrap() - c(0.0, SQRT_HALF)).norm() < 1e-15);
    }

    #[test]
    fn catalog_maps_are_unitary() {
        let catalog = ElementCatalog::ideal();
        for map in [
            catalog.front_pbs(),
            catalog.phase_plate(0.7),
            catalog.final_bs(),
            catalog.eom_on(),
        ] {
            assert!(map.isometry_defect() < ANALYTIC_TOL);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let theta: f64 = rng.random::<f64>() * 2.0 * PI - PI;
            assert!(catalog.interferometer_transfer(theta).isometry_defect() < ANALYTIC_TOL);
        }
    }

    #[test]
    fn bs_phase_error_breaks_unitarity() {
        let catalog = ElementCatalog::with_bs_phase_error(0.01);
        assert!(catalog.final_bs().isometry_defect() > 1e-3);
    }

    #[test]
    fn eom_turns_circular_into_linear() {
        let catalog = ElementCatalog::ideal();
        let eom = catalog.eom_on();
        let circular = circular_basis();
        let r_out = eom.apply(&circular.vector_ket("R").unwrap()).unwrap();
        let l_out = eom.apply(&circular.vector_ket("L").unwrap()).unwrap();
        assert!((r_out.amplitude(&["V"]).unwrap().norm() - 1.0).abs() < ANALYTIC_TOL);
        assert!(r_out.amplitude(&["H"]).unwrap().norm() < ANALYTIC_TOL);
        assert!((l_out.amplitude(&["H"]).unwrap().norm() - 1.0).abs() < ANALYTIC_TOL);
        assert!(l_out.amplitude(&["V"]).unwrap().norm() < ANALYTIC_TOL);
    }

    #[test]
    fn analyzers_measure_their_eigenstates() {
        let catalog = ElementCatalog::ideal();
        let linear = catalog.env_analyzer(Choice::Zero);
        let v = Ket::basis(env_register(), "V").unwrap();
        assert!((outcome_probability(&v, &linear, "V").unwrap() - 1.0).abs() < ANALYTIC_TOL);

        let circular = catalog.env_analyzer(Choice::One);
        let r = circular_basis().vector_ket("R").unwrap();
        assert!((outcome_probability(&r, &circular, "R").unwrap() - 1.0).abs() < ANALYTIC_TOL);
        // A linear input splits evenly between the circular outcomes.
        let h = Ket::basis(env_register(), "H").unwrap();
        assert!((outcome_probability(&h, &circular, "R").unwrap() - 0.5).abs() < ANALYTIC_TOL);
        assert!((outcome_probability(&h, &circular, "L").unwrap() - 0.5).abs() < ANALYTIC_TOL);
    }

    #[test]
    fn choice1_analyzer_vectors_are_the_circular_pair() {
        let catalog = ElementCatalog::ideal();
        let analyzer = catalog.env_analyzer(Choice::One);
        let basis = circular_basis();
        let state_r = basis.vector_ket("R").unwrap();
        let state_l = basis.vector_ket("L").unwrap();
        assert!((outcome_probability(&state_r, &analyzer, "R").unwrap() - 1.0).abs() < ANALYTIC_TOL);
        assert!((outcome_probability(&state_l, &analyzer, "L").unwrap() - 1.0).abs() < ANALYTIC_TOL);
    }

    #[test]
    fn circular_expansion_of_front_stage_state() {
        // Coefficient pattern of the front-stage state in the R/L basis,
        // checked up to one common phase: (R, a) and (L, a) carry ±e^{iθ}/2,
        // (R, b) and (L, b) carry 1/2.
        let catalog = ElementCatalog::ideal();
        let theta = 0.9f64;
        let state = catalog.front_stage(&initial_state(), theta).unwrap();
        let table = state.express_in(&circular_basis()).unwrap();
        let expected = [
            ("R", "a", Complex64::from_polar(0.5, theta)),
            ("R", "b", c(0.5, 0.0)),
            ("L", "a", -Complex64::from_polar(0.5, theta)),
            ("L", "b", c(0.5, 0.0)),
        ];
        let reference = table.coefficient("R", &["b"]).unwrap() / c(0.5, 0.0);
        assert!((reference.norm() - 1.0).abs() < ANALYTIC_TOL);
        for (outcome, arm, want) in expected {
            let got = table.coefficient(outcome, &[arm]).unwrap();
            assert!(
                (got - want * reference).norm() < ANALYTIC_TOL,
                "coefficient ({outcome}, {arm}) = {got}, want {want} up to common phase"
            );
        }
    }

    #[test]
    fn full_state_coincidence_magnitudes_at_quarter_turn() {
        // theta = π/2 puts all weight on (R, 3) and (L, 4).
        let catalog = ElementCatalog::ideal();
        let state = catalog.full_eraser_state(FRAC_PI_2);
        let table = state.express_in(&circular_basis()).unwrap();
        let p = |o: &str, port: &str| table.coefficient(o, &[port]).unwrap().norm_sqr();
        assert!((p("R", "3") - 0.5).abs() < ANALYTIC_TOL);
        assert!((p("L", "4") - 0.5).abs() < ANALYTIC_TOL);
        assert!(p("L", "3") < ANALYTIC_TOL);
        assert!(p("R", "4") < ANALYTIC_TOL);
    }

    #[test]
    fn full_state_coincidence_magnitudes_at_zero() {
        // theta = 0 spreads the weight evenly over all four pairs.
        let catalog = ElementCatalog::ideal();
        let state = catalog.full_eraser_state(0.0);
        let table = state.express_in(&circular_basis()).unwrap();
        for outcome in ["R", "L"] {
            for port in ["3", "4"] {
                let p = table.coefficient(outcome, &[port]).unwrap().norm_sqr();
                assert!((p - 0.25).abs() < ANALYTIC_TOL, "({outcome}, {port}) = {p}");
            }
        }
    }

    #[test]
    fn elliptical_basis_limits() {
        // theta = 0 is the diagonal/antidiagonal pair.
        let basis = elliptical_basis(0.0);
        let e = basis.vector("E").unwrap();
        assert!((e[0] - c(SQRT_HALF, 0.0)).norm() < 1e-15);
        assert!((e[1] - c(SQRT_HALF, 0.0)).norm() < 1e-15);
        // theta = π/2 is the circular pair.
        let basis = elliptical_basis(FRAC_PI_2);
        let circ = circular_basis();
        let e = basis.vector_ket("E").unwrap();
        let r = circ.vector_ket("R").unwrap();
        assert!(e.equal_up_to_global_phase(&r, ANALYTIC_TOL).unwrap());
    }

    #[test]
    fn elliptical_pair_is_orthogonal_for_random_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let theta: f64 = rng.random::<f64>() * 2.0 * PI - PI;
            let basis = elliptical_basis(theta);
            let e = basis.vector_ket("E").unwrap();
            let p = basis.vector_ket("E_perp").unwrap();
            assert!(e.inner(&p).unwrap().norm() < ANALYTIC_TOL);
        }
    }

    #[test]
    fn interferometer_is_port_pure_on_elliptical_pair() {
        let catalog = ElementCatalog::ideal();
        let theta = -2.1f64;
        let transfer = catalog.interferometer_transfer(theta);
        let sys_basis = elliptical_basis_for(&sys_polarization_register(), theta).unwrap();
        let e_out = transfer.apply(&sys_basis.vector_ket("E").unwrap()).unwrap();
        let p_out = transfer
            .apply(&sys_basis.vector_ket("E_perp").unwrap())
            .unwrap();
        // |E⟩ exits port 3 as i e^{iθ}|3⟩; |E_perp⟩ exits port 4 as −e^{iθ}|4⟩.
        let want_3 = Complex64::from_polar(1.0, FRAC_PI_2 + theta);
        let want_4 = -Complex64::from_polar(1.0, theta);
        assert!((e_out.amplitude(&["3"]).unwrap() - want_3).norm() < ANALYTIC_TOL);
        assert!(e_out.amplitude(&["4"]).unwrap().norm() < ANALYTIC_TOL);
        assert!((p_out.amplitude(&["4"]).unwrap() - want_4).norm() < ANALYTIC_TOL);
        assert!(p_out.amplitude(&["3"]).unwrap().norm() < ANALYTIC_TOL);
    }

    #[test]
    fn route_equivalence_for_random_theta() {
        let catalog = ElementCatalog::ideal();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let theta: f64 = rng.random::<f64>() * 2.0 * PI - PI;
            let direct = catalog.full_eraser_state(theta);
            let elliptical = catalog.eraser_state_via_elliptical(theta);
            assert!(direct
                .equal_up_to_global_phase(&elliptical, ANALYTIC_TOL)
                .unwrap());
            let hybrid = hybrid_state_elliptical(theta);
            assert!(direct
                .equal_up_to_global_phase(&hybrid, ANALYTIC_TOL)
                .unwrap());
        }
    }

    #[test]
    fn port_collapse_leaves_env_in_elliptical_state() {
        let catalog = ElementCatalog::ideal();
        let theta = 1.3f64;
        let state = hybrid_state_elliptical(theta);
        let ports = catalog.port_measurement();
        let basis = elliptical_basis(theta);

        let after_3 = collapse(&state, &ports, "3").unwrap();
        let env_e = basis.vector_ket("E").unwrap();
        let expected = env_e
            .tensor(&Ket::basis(port_register(), "3").unwrap())
            .unwrap();
        assert!(after_3
            .equal_up_to_global_phase(&expected, ANALYTIC_TOL)
            .unwrap());

        let after_4 = collapse(&state, &ports, "4").unwrap();
        let env_p = basis.vector_ket("E_perp").unwrap();
        let expected = env_p
            .tensor(&Ket::basis(port_register(), "4").unwrap())
            .unwrap();
        assert!(after_4
            .equal_up_to_global_phase(&expected, ANALYTIC_TOL)
            .unwrap());
    }

    #[test]
    fn port_probabilities_on_the_hybrid_state_are_even() {
        let catalog = ElementCatalog::ideal();
        let ports = catalog.port_measurement();
        for theta in [0.0, 0.8, FRAC_PI_2, -2.4] {
            let state = hybrid_state_elliptical(theta);
            assert!((outcome_probability(&state, &ports, "3").unwrap() - 0.5).abs() < ANALYTIC_TOL);
            assert!((outcome_probability(&state, &ports, "4").unwrap() - 0.5).abs() < ANALYTIC_TOL);
        }
        // The circular analyzer sees the same even split on the full state.
        let full = catalog.full_eraser_state(FRAC_PI_2);
        let analyzer = catalog.env_analyzer(Choice::One);
        assert!((outcome_probability(&full, &analyzer, "R").unwrap() - 0.5).abs() < ANALYTIC_TOL);
    }

    #[test]
    fn sequential_routes_agree_at_quarter_turn() {
        // With θ = π/2, conditioning either way pins the partner photon:
        // p(R) = 1/2 with p(3|R) = 1, and p(3) = 1/2 with p(R|3) = 1.
        use crate::measurement::sequential_joint;
        let catalog = ElementCatalog::ideal();
        let state = catalog.full_eraser_state(FRAC_PI_2);
        let analyzer = catalog.env_analyzer(Choice::One);
        let ports = catalog.port_measurement();

        let p_r = outcome_probability(&state, &analyzer, "R").unwrap();
        let after_r = collapse(&state, &analyzer, "R").unwrap();
        let p_3_given_r = outcome_probability(&after_r, &ports, "3").unwrap();
        assert!((p_r - 0.5).abs() < ANALYTIC_TOL);
        assert!((p_3_given_r - 1.0).abs() < ANALYTIC_TOL);

        let env_first = sequential_joint(&state, (&analyzer, "R"), (&ports, "3")).unwrap();
        let sys_first = sequential_joint(&state, (&ports, "3"), (&analyzer, "R")).unwrap();
        assert!((env_first - 0.5).abs() < ANALYTIC_TOL);
        assert!((sys_first - 0.5).abs() < ANALYTIC_TOL);
    }

    #[test]
    fn linear_expansion_of_hybrid_state_has_quarter_weights() {
        let state = hybrid_state_elliptical(0.6);
        for env in ["H", "V"] {
            for port in ["3", "4"] {
                let p = state.amplitude(&[env, port]).unwrap().norm_sqr();
                assert!((p - 0.25).abs() < ANALYTIC_TOL);
            }
        }
    }

    #[test]
    fn wheeler_removed_is_flat() {
        let catalog = ElementCatalog::ideal();
        for phase in [-PI, -1.0, 0.0, 0.4, PI] {
            let (p1, p2) = catalog.wheeler_mz(phase, false);
            assert!((p1 - 0.5).abs() < ANALYTIC_TOL);
            assert!((p2 - 0.5).abs() < ANALYTIC_TOL);
        }
    }

    #[test]
    fn wheeler_inserted_has_unit_visibility_fringes() {
        let catalog = ElementCatalog::ideal();
        // Pinned convention: zero phase sends everything to D2.
        let (p1, p2) = catalog.wheeler_mz(0.0, true);
        assert!(p1 < ANALYTIC_TOL);
        assert!((p2 - 1.0).abs() < ANALYTIC_TOL);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..=180 {
            let phase = -PI + 2.0 * PI * k as f64 / 180.0;
            let (p1, p2) = catalog.wheeler_mz(phase, true);
            assert!((p1 + p2 - 1.0).abs() < ANALYTIC_TOL);
            lo = lo.min(p1);
            hi = hi.max(p1);
        }
        assert!(lo < ANALYTIC_TOL);
        assert!((hi - 1.0).abs() < ANALYTIC_TOL);
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.3) - 0.3).abs() < 1e-15);
        let alpha = fringe_phase(FRAC_PI_2);
        assert!((alpha - FRAC_PI_2).abs() < 1e-12);
        for theta in [-3.0, -0.5, 0.0, 2.9] {
            let alpha = fringe_phase(theta);
            assert!((0.0..PI).contains(&alpha));
        }
    }

    #[test]
    fn apparatus_params_wrap_and_validate() {
        let params = ApparatusParams::new(3.0 * PI, Choice::One).unwrap();
        assert!((params.theta() - PI).abs() < 1e-12);
        assert_eq!(params.choice(), Choice::One);
        assert!(ApparatusParams::new(f64::NAN, Choice::Zero).is_err());
    }
}
