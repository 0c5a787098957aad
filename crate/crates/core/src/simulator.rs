//! Exact state-vector simulation of the QAOA ansatz.
//!
//! Basis index `k` encodes an assignment little-endian: bit `i` of `k` is the
//! value of the `i`-th variable in the QUBO's `var_order`. A circuit starts in
//! the uniform superposition and alternates a diagonal phase layer
//! `exp(-i * gamma * E_k)` with the transverse mixer `RX(2 * beta)` on every
//! qubit.

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::qubo::Qubo;
use crate::scalar::Scalar;

pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Below this many amplitudes the layers run on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulatorError {
    #[error("{n} variables exceed the simulator cap of {cap} qubits")]
    TooManyVariables { n: usize, cap: usize },
    #[error("angles must be a 2 x p array with equal-length rows (got {gammas} gammas and {betas} betas)")]
    AngleShape { gammas: usize, betas: usize },
    #[error("energy table has {got} entries, state has {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Variational angles: one phase angle and one mixer angle per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Angles<T> {
    pub gammas: Vec<T>,
    pub betas: Vec<T>,
}

impl<T: Scalar> Angles<T> {
    pub fn new(gammas: Vec<T>, betas: Vec<T>) -> Result<Self, SimulatorError> {
        if gammas.len() != betas.len() {
            return Err(SimulatorError::AngleShape {
                gammas: gammas.len(),
                betas: betas.len(),
            });
        }
        Ok(Self { gammas, betas })
    }

    /// From the configuration layout `[[gamma_1..gamma_p], [beta_1..beta_p]]`.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, SimulatorError> {
        match rows {
            [g, b] => Self::new(g.clone(), b.clone()),
            _ => Err(SimulatorError::AngleShape {
                gammas: rows.first().map_or(0, Vec::len),
                betas: rows.len(),
            }),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        vec![self.gammas.clone(), self.betas.clone()]
    }

    /// Flat parameter vector `[gammas.., betas..]` for the optimizers.
    pub fn to_flat(&self) -> Vec<T> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_flat(flat: &[T]) -> Result<Self, SimulatorError> {
        if !flat.len().is_multiple_of(2) {
            return Err(SimulatorError::AngleShape {
                gammas: flat.len() / 2 + 1,
                betas: flat.len() / 2,
            });
        }
        let (g, b) = flat.split_at(flat.len() / 2);
        Self::new(g.to_vec(), b.to_vec())
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    pub fn zeros(layers: usize) -> Self {
        Self {
            gammas: vec![T::zero(); layers],
            betas: vec![T::zero(); layers],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    amps: Vec<Complex<T>>,
    n: usize,
    var_order: Vec<String>,
}

impl<T: Scalar> StateVector<T> {
    /// `|+>^n`: every amplitude equal to `2^(-n/2)`.
    pub fn uniform(var_order: Vec<String>) -> Self {
        let n = var_order.len();
        let dim = 1usize << n;
        let a = T::one() / T::of(dim as f64).sqrt();
        Self {
            amps: vec![Complex::new(a, T::zero()); dim],
            n,
            var_order,
        }
    }

    /// Computational basis state for the given bits (in `var_order`).
    pub fn basis(var_order: Vec<String>, bits: &[u8]) -> Self {
        let n = var_order.len();
        let index = bits_to_index(bits);
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[index] = Complex::new(T::one(), T::zero());
        Self { amps, n, var_order }
    }

    /// Wraps raw amplitudes; the caller is responsible for normalization.
    pub fn from_amplitudes(var_order: Vec<String>, amps: Vec<Complex<T>>) -> Result<Self, SimulatorError> {
        let n = var_order.len();
        if amps.len() != 1 << n {
            return Err(SimulatorError::LengthMismatch {
                expected: 1 << n,
                got: amps.len(),
            });
        }
        Ok(Self { amps, n, var_order })
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn var_order(&self) -> &[String] {
        &self.var_order
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|amp_k|^2` in ascending basis order.
    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `(bits, probability)` rows in ascending basis order.
    pub fn probability_table(&self) -> Vec<(Vec<u8>, T)> {
        self.amps
            .iter()
            .enumerate()
            .map(|(k, a)| (index_to_bits(k, self.n), a.norm_sqr()))
            .collect()
    }

    /// Multiplies amplitude `k` by `exp(-i * gamma * energies[k])`.
    pub fn apply_phase(&mut self, energies: &[T], gamma: T) {
        let rotate = |(a, &e): (&mut Complex<T>, &T)| {
            *a *= Complex::from_polar(T::one(), -gamma * e);
        };
        if self.amps.len() >= PARALLEL_THRESHOLD {
            self.amps.par_iter_mut().zip(energies.par_iter()).for_each(rotate);
        } else {
            self.amps.iter_mut().zip(energies.iter()).for_each(rotate);
        }
    }

    /// Applies `RX(2 * beta) = [[cos b, -i sin b], [-i sin b, cos b]]` to every qubit.
    pub fn apply_mixer(&mut self, beta: T) {
        let (s, c) = beta.sin_cos();
        for q in 0..self.n {
            let stride = 1usize << q;
            let rotate_block = |block: &mut [Complex<T>]| {
                let (lo, hi) = block.split_at_mut(stride);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    // -i*s*z = (s*z.im, -s*z.re)
                    *a = Complex::new(c * x.re + s * y.im, c * x.im - s * y.re);
                    *b = Complex::new(c * y.re + s * x.im, c * y.im - s * x.re);
                }
            };
            if self.amps.len() >= PARALLEL_THRESHOLD {
                self.amps.par_chunks_mut(2 * stride).for_each(rotate_block);
            } else {
                self.amps.chunks_mut(2 * stride).for_each(rotate_block);
            }
        }
    }
}

pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |k, (i, &b)| k | (usize::from(b != 0) << i))
}

pub fn index_to_bits(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| (index >> i & 1) as u8).collect()
}

/// QUBO energy (offset included) of every basis state.
pub fn precompute_energies<T: Scalar>(q: &Qubo<T>, cap: usize) -> Result<Vec<T>, SimulatorError> {
    let n = q.num_vars();
    if n > cap {
        return Err(SimulatorError::TooManyVariables { n, cap });
    }
    let dim = 1usize << n;
    Ok(if dim >= PARALLEL_THRESHOLD {
        (0..dim).into_par_iter().map(|k| q.energy_of_index(k)).collect()
    } else {
        (0..dim).map(|k| q.energy_of_index(k)).collect()
    })
}

/// `sum_k |amp_k|^2 * energies[k]`.
pub fn expectation<T: Scalar>(state: &StateVector<T>, energies: &[T]) -> Result<T, SimulatorError> {
    if energies.len() != state.amps.len() {
        return Err(SimulatorError::LengthMismatch {
            expected: state.amps.len(),
            got: energies.len(),
        });
    }
    Ok(state
        .amps
        .iter()
        .zip(energies)
        .map(|(a, &e)| a.norm_sqr() * e)
        .sum())
}

/// A QAOA circuit bound to one QUBO, with the diagonal energies cached.
#[derive(Debug, Clone)]
pub struct QaoaCircuit<T> {
    energies: Vec<T>,
    var_order: Vec<String>,
}

impl<T: Scalar> QaoaCircuit<T> {
    pub fn new(q: &Qubo<T>, cap: usize) -> Result<Self, SimulatorError> {
        Ok(Self {
            energies: precompute_energies(q, cap)?,
            var_order: q.var_order().to_vec(),
        })
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn var_order(&self) -> &[String] {
        &self.var_order
    }

    pub fn run(&self, angles: &Angles<T>) -> StateVector<T> {
        let mut state = StateVector::uniform(self.var_order.clone());
        for (&gamma, &beta) in angles.gammas.iter().zip(&angles.betas) {
            state.apply_phase(&self.energies, gamma);
            state.apply_mixer(beta);
        }
        state
    }

    /// Expected QUBO energy of the circuit output.
    pub fn expectation(&self, angles: &Angles<T>) -> T {
        let state = self.run(angles);
        expectation(&state, &self.energies).expect("circuit energies match its own state")
    }
}

/// One-shot circuit run with the default qubit cap.
pub fn run_qaoa_circuit<T: Scalar>(q: &Qubo<T>, angles: &Angles<T>) -> Result<StateVector<T>, SimulatorError> {
    Ok(QaoaCircuit::new(q, DEFAULT_QUBIT_CAP)?.run(angles))
}
