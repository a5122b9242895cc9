use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pauli axis of a single-qubit rotation `R_P(φ) = exp(-iφP/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Axis {
    X,
    #[default]
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Axis::X),
            "Y" | "y" => Ok(Axis::Y),
            "Z" | "z" => Ok(Axis::Z),
            other => Err(Error::Parameter(format!("unknown rotation axis {other:?}"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(s)
    }
}

type Gate2 = [[Complex64; 2]; 2];

fn rotation_matrix(axis: Axis, angle: f64) -> Gate2 {
    let (s, c) = (0.5 * angle).sin_cos();
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [[Complex64::new(c, -s), zero], [zero, Complex64::new(c, s)]],
    }
}

/// Pure state of `n_qubits` qubits as `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

pub const MAX_QUBITS: usize = 20;

impl StateVector {
    /// `|0…0⟩`
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Parameter(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps explicit amplitudes. The length must be a power of two and the
    /// norm must be 1 within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Shape(format!(
                "amplitude count must be a power of two >= 2, got {len}"
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state amplitude".into()));
        }
        let state = Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter(format!("state norm² is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::Index(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn apply_rotation(&mut self, qubit: usize, axis: Axis, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        self.apply_single(qubit, &rotation_matrix(axis, angle));
        Ok(())
    }

    pub(crate) fn apply_single(&mut self, qubit: usize, u: &Gate2) {
        let mask = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let a0 = self.amps[i];
            let a1 = self.amps[j];
            self.amps[i] = u[0][0] * a0 + u[0][1] * a1;
            self.amps[j] = u[1][0] * a0 + u[1][1] * a1;
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Parameter(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// `⟨Z_k⟩` for every qubit.
    pub fn measure_z(&self) -> QuantumOutput {
        let mut exp = vec![0.0; self.n_qubits];
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (k, e) in exp.iter_mut().enumerate() {
                if b & self.mask(k) == 0 {
                    *e += p;
                } else {
                    *e -= p;
                }
            }
        }
        for e in &mut exp {
            *e = e.clamp(-1.0, 1.0);
        }
        QuantumOutput { expectations: exp }
    }
}

/// Pauli-Z expectation values, one per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumOutput {
    pub expectations: Vec<f64>,
}

impl QuantumOutput {
    pub fn as_slice(&self) -> &[f64] {
        &self.expectations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ry_pi_flips_the_bit() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_rotation(0, Axis::Y, PI).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
        assert!((s.measure_z().expectations[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rz_leaves_z_expectation_alone() {
        for theta in [0.0, 0.3, 1.7, -2.5, 6.0] {
            let mut s = StateVector::zero(1).unwrap();
            s.apply_rotation(0, Axis::Z, theta).unwrap();
            assert!((s.measure_z().expectations[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ry_expectation_matches_explicit_matrix_product() {
        for theta in [0.0, FRAC_PI_3, FRAC_PI_2] {
            // explicit [[c,-s],[s,c]]·(1,0)
            let (cc, ss) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let oracle = cc * cc - ss * ss;
            let mut s = StateVector::zero(1).unwrap();
            s.apply_rotation(0, Axis::Y, theta).unwrap();
            let z = s.measure_z().expectations[0];
            assert!((z - oracle).abs() < 1e-14);
            assert!((z - theta.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_out_of_range_is_index_error() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(s.apply_rotation(2, Axis::X, 0.1), Err(Error::Index(_))));
    }

    #[test]
    fn cnot_truth_table() {
        let mut s = StateVector::basis(2, 0b00).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b00).unwrap());
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());
        let mut s = StateVector::basis(2, 0b01).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b01).unwrap());
    }

    #[test]
    fn cnot_is_an_involution() {
        for n in 2..=4 {
            for b in 0..(1 << n) {
                for (ctl, tgt) in [(0, 1), (1, 0), (0, n - 1), (n - 1, 0)] {
                    let orig = StateVector::basis(n, b).unwrap();
                    let mut s = orig.clone();
                    s.apply_cnot(ctl, tgt).unwrap();
                    s.apply_cnot(ctl, tgt).unwrap();
                    assert_eq!(s, orig);
                }
            }
        }
    }

    #[test]
    fn cnot_same_wire_is_rejected() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(s.apply_cnot(1, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn uniform_superposition_has_zero_expectations() {
        let n = 3;
        let a = 1.0 / ((1 << n) as f64).sqrt();
        let s = StateVector::from_amplitudes(vec![c(a); 1 << n]).unwrap();
        assert!(s.measure_z().expectations.iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn bell_state_expectations() {
        let s = StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)])
            .unwrap();
        let z = s.measure_z().expectations;
        assert!(z[0].abs() < 1e-12 && z[1].abs() < 1e-12);
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(StateVector::from_amplitudes(vec![c(1.0); 3]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(1.0)]).is_err());
    }
}
