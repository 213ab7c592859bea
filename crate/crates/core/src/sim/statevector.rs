//! Dense statevectors over a qubit register.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliTerm};

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl Statevector {
    pub fn basis(n_qubits: usize, bits: u64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[bits as usize] = Complex64::new(1.0, 0.0);
        Self { n: n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(Error::Dimension(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Dimension(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `P|psi>` for a string acting as `i^{#Y} X^x Z^z`.
    pub fn apply_pauli(&self, p: &PauliTerm) -> Result<Self> {
        self.check(p)?;
        let (x, z) = (p.x_bits() as usize, p.z_bits() as usize);
        let phase = i_pow(p.y_count());
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let s = if (b & z).count_ones() % 2 == 1 { -phase } else { phase };
            out[b ^ x] = s * a;
        }
        Ok(Self { n: self.n, amps: out })
    }

    /// In place `exp(i angle P)|psi> = cos(angle)|psi> + i sin(angle) P|psi>`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliTerm, angle: f64) -> Result<()> {
        self.check(p)?;
        let (x, z) = (p.x_bits() as usize, p.z_bits() as usize);
        let (s, c) = angle.sin_cos();
        let phase = i_pow(p.y_count()) * Complex64::new(0.0, s);
        let sign = |b: usize| if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= c + phase * sign(b);
            }
            return Ok(());
        }
        let top = 1usize << (63 - (x as u64).leading_zeros());
        for b in 0..self.amps.len() {
            if b & top != 0 {
                continue;
            }
            let b2 = b ^ x;
            let (a1, a2) = (self.amps[b], self.amps[b2]);
            // P|b> = phase' |b^x> with phase' = i^y (-1)^{|b&z|}
            self.amps[b2] = c * a2 + phase * sign(b) * a1;
            self.amps[b] = c * a1 + phase * sign(b2) * a2;
        }
        Ok(())
    }

    /// `<psi|P|psi>`.
    pub fn pauli_expectation(&self, p: &PauliTerm) -> Result<Complex64> {
        self.check(p)?;
        Ok(self.pauli_expectation_unchecked(p))
    }

    pub(crate) fn pauli_expectation_unchecked(&self, p: &PauliTerm) -> Complex64 {
        let (x, z) = (p.x_bits() as usize, p.z_bits() as usize);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in self.amps.iter().enumerate() {
            let t = self.amps[b ^ x].conj() * a;
            if (b & z).count_ones() % 2 == 1 {
                acc -= t;
            } else {
                acc += t;
            }
        }
        acc * i_pow(p.y_count())
    }

    /// `sum_l c_l <psi|P_l|psi>` without discarding any part.
    pub fn expectation_complex(&self, op: &PauliSum) -> Result<Complex64> {
        if op.n_qubits() != self.n {
            return Err(Error::SizeMismatch(self.n, op.n_qubits()));
        }
        Ok(op.iter().map(|(t, c)| c * self.pauli_expectation_unchecked(t)).sum())
    }

    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        if other.n != self.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    fn check(&self, p: &PauliTerm) -> Result<()> {
        if p.n_qubits() != self.n {
            return Err(Error::SizeMismatch(self.n, p.n_qubits()));
        }
        Ok(())
    }
}

/// `sum_l Re{c_l <P_l>}`; Pauli expectations of a state are real, so this is
/// the real part of the full expectation.
pub fn exact_expectation(state: &Statevector, op: &PauliSum) -> Result<f64> {
    Ok(state.expectation_complex(op)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliTerm {
        s.parse().unwrap()
    }

    #[test]
    fn z_on_zero_and_plus() {
        let zero = Statevector::basis(2, 0);
        assert_eq!(zero.pauli_expectation(&p("IZ")).unwrap().re, 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Statevector::from_amplitudes(vec![Complex64::new(h, 0.0); 2]).unwrap();
        assert!(plus.pauli_expectation(&p("Z")).unwrap().norm() < 1e-15);
        assert!((plus.pauli_expectation(&p("X")).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_matches_closed_form() {
        // exp(i t Y)|0> = cos t |0> - sin t |1>
        let mut s = Statevector::basis(1, 0);
        s.apply_pauli_rotation(&p("Y"), 0.3).unwrap();
        assert!((s.amplitudes()[0].re - 0.3f64.cos()).abs() < 1e-15);
        assert!((s.amplitudes()[1].re + 0.3f64.sin()).abs() < 1e-15);
        let mut d = Statevector::basis(2, 1);
        d.apply_pauli_rotation(&p("ZZ"), 0.2).unwrap();
        assert!((d.amplitudes()[1] - Complex64::new(0.0, -0.2f64).exp()).norm() < 1e-15);
    }

    #[test]
    fn size_checks() {
        let s = Statevector::basis(2, 0);
        assert!(s.pauli_expectation(&p("Z")).is_err());
        assert!(Statevector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }
}
