//! Phase estimation: the closed-form acceptance kernel, the eigenvalue route
//! built on it, and an explicit ancilla circuit used to cross-check.

use std::f64::consts::PI;

use nalgebra::{linalg::Schur, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    unitarity_deviation, Circuit, Control, Gate, Register, SimError, Statevector, C64, NORM_TOL,
};
use crate::simulator::gate::UNITARY_TOL;

/// `sin(πx)`, exactly zero at integers.
fn sinpi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        return 0.0;
    }
    (PI * x.rem_euclid(2.0)).sin()
}

/// Probability that a `bits`-qubit phase register reads 0 for eigenphase
/// `theta`: `|2^-b Σ_{k<2^b} e^{ikθ}|²`.
pub fn phase_kernel(bits: u32, theta: f64) -> f64 {
    let mut t = (theta / (2.0 * PI)).rem_euclid(1.0);
    if t >= 1.0 {
        t = 0.0;
    }
    if t == 0.0 {
        return 1.0;
    }
    let size = 2f64.powi(bits as i32);
    let den = sinpi(t);
    let num = sinpi(size * t);
    let k = (num * num) / (size * size * den * den);
    k.min(1.0)
}

/// `max(1, ⌈log2(√(T·n)/β)⌉)`.
pub fn precision_bits(tree_size: usize, n: usize, beta: f64) -> u32 {
    assert!(beta > 0.0, "beta must be positive");
    let x = ((tree_size * n) as f64).sqrt() / beta;
    let b = x.log2().ceil();
    if b < 1.0 {
        1
    } else {
        b as u32
    }
}

/// Eigenphases of a unitary with the weight of a state on each eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Phases in `(-π, π]`.
    pub phases: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Spectrum {
    pub fn of(u: &DMatrix<C64>, psi: &DVector<C64>) -> Result<Spectrum, SimError> {
        check_operator(u, psi.len())?;
        let norm = psi.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::Input(format!("input state norm² is {norm}")));
        }
        let dim = u.nrows();
        // A unitary is normal, so its Schur form is diagonal.
        match Schur::try_new(u.clone(), f64::EPSILON, 1000 + 100 * dim) {
            Some(schur) => {
                let (q, t) = schur.unpack();
                let coeffs = q.adjoint() * psi;
                Ok(Spectrum {
                    phases: (0..dim).map(|j| t[(j, j)].arg()).collect(),
                    weights: coeffs.iter().map(|c| c.norm_sqr()).collect(),
                })
            }
            None => Ok(Self::folded(u, psi)),
        }
    }

    /// Spectrum with each phase folded to `|θ|`, read off the Hermitian part
    /// `(U + U†)/2` whose eigenvalues are `cos θ`. The acceptance kernel is
    /// even in `θ`, so this gives the same acceptance probabilities. Used when
    /// the Schur iteration stalls, which happens on some highly symmetric
    /// walk operators.
    pub fn folded(u: &DMatrix<C64>, psi: &DVector<C64>) -> Spectrum {
        let h = (u + u.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let coeffs = eig.eigenvectors.adjoint() * psi;
        Spectrum {
            phases: eig
                .eigenvalues
                .iter()
                .map(|&c| c.clamp(-1.0, 1.0).acos())
                .collect(),
            weights: coeffs.iter().map(|c| c.norm_sqr()).collect(),
        }
    }

    pub fn acceptance(&self, bits: u32) -> f64 {
        self.phases
            .iter()
            .zip(&self.weights)
            .map(|(&theta, &w)| w * phase_kernel(bits, theta))
            .sum()
    }
}

fn check_operator(u: &DMatrix<C64>, dim: usize) -> Result<(), SimError> {
    if u.nrows() != dim || u.ncols() != dim {
        return Err(SimError::Input(format!(
            "operator is {}x{} but the state has dimension {dim}",
            u.nrows(),
            u.ncols()
        )));
    }
    let dev = unitarity_deviation(u);
    if dev > UNITARY_TOL {
        return Err(SimError::NotUnitary(dev));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    Sample { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceptance {
    Probability(f64),
    Sampled(bool),
}

/// Probability that phase estimation of `u` on `psi` reads phase 0, or a
/// single Bernoulli draw with that probability.
pub fn phase_estimate_accept(
    u: &DMatrix<C64>,
    psi: &DVector<C64>,
    bits: u32,
    mode: EstimateMode,
) -> Result<Acceptance, SimError> {
    if bits == 0 {
        return Err(SimError::Input(
            "phase estimation needs at least one bit".into(),
        ));
    }
    let p = Spectrum::of(u, psi)?.acceptance(bits);
    Ok(match mode {
        EstimateMode::Exact => Acceptance::Probability(p),
        EstimateMode::Sample { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Acceptance::Sampled(rng.random::<f64>() < p)
        }
    })
}

/// Fourier transform on `reg`, most significant bit first, ending with the
/// bit-reversal swaps.
pub fn qft(reg: Register) -> Vec<Gate> {
    let b = reg.width;
    let mut gates = Vec::new();
    for i in (0..b).rev() {
        gates.push(Gate::H(reg.qubit(i)));
        for j in (0..i).rev() {
            let angle = PI / f64::from(1u32 << (i - j));
            gates.push(Gate::Phase(reg.qubit(i), angle).controlled([Control::on(reg.qubit(j))]));
        }
    }
    for i in 0..b / 2 {
        gates.push(Gate::Swap(reg.qubit(i), reg.qubit(b - 1 - i)));
    }
    gates
}

pub fn inverse_qft(reg: Register) -> Vec<Gate> {
    qft(reg).iter().rev().map(Gate::inverse).collect()
}

/// Textbook phase estimation: system on the low qubits, `bits` phase qubits
/// above them, controlled powers of `u` as two-entry multiplexers.
pub fn phase_estimation_circuit(u: &DMatrix<C64>, bits: u32) -> Result<Circuit, SimError> {
    let dim = u.nrows();
    if !dim.is_power_of_two() {
        return Err(SimError::Input(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    check_operator(u, dim)?;
    let s = dim.trailing_zeros() as usize;
    let phase = Register::new(s, bits as usize);
    let mut circ = Circuit::new(s + bits as usize);
    circ.extend(phase.qubits().into_iter().map(Gate::H));
    let system: Vec<usize> = (0..s).collect();
    let mut power = u.clone();
    for j in 0..bits as usize {
        let table = vec![DMatrix::identity(dim, dim), power.clone()];
        circ.push(Gate::multiplexed(
            vec![phase.qubit(j)],
            system.clone(),
            table,
        )?);
        power = &power * &power;
    }
    circ.extend(inverse_qft(phase));
    Ok(circ)
}

/// Acceptance probability computed by simulating
/// [`phase_estimation_circuit`].
pub fn phase_estimate_accept_circuit(
    u: &DMatrix<C64>,
    psi: &DVector<C64>,
    bits: u32,
) -> Result<f64, SimError> {
    let circ = phase_estimation_circuit(u, bits)?;
    let s = u.nrows().trailing_zeros() as usize;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << circ.num_qubits()];
    amps[..psi.len()].copy_from_slice(psi.as_slice());
    let mut state = Statevector::from_amplitudes(amps)?;
    state.apply(&circ)?;
    Ok(state.probability_of(Register::new(s, bits as usize), 0))
}

/// Unitary from the QR factorization of a matrix with uniform entries.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    m.qr().q()
}
