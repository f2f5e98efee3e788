//! Orbit amplitudes from the scaled action Hamiltonian
//! `eps(I_r, I_theta) = (2 I_r s + I_theta^2)^{3/2} / (3 s)`, `s = sqrt(2 beta)`.

use std::f64::consts::PI;

use super::TheoryPoint;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledHamiltonian {
    sqrt_two_beta: f64,
}

impl ScaledHamiltonian {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(Self {
            sqrt_two_beta: (2.0 * beta).sqrt(),
        })
    }

    fn q(&self, i_r: f64, i_theta: f64) -> f64 {
        2.0 * i_r * self.sqrt_two_beta + i_theta * i_theta
    }

    pub fn energy(&self, i_r: f64, i_theta: f64) -> f64 {
        self.q(i_r, i_theta).powf(1.5) / (3.0 * self.sqrt_two_beta)
    }

    /// `(omega_r, omega_theta)`, the action gradient of the energy.
    pub fn frequencies(&self, i_r: f64, i_theta: f64) -> [f64; 2] {
        let root = self.q(i_r, i_theta).sqrt();
        [root, i_theta * root / self.sqrt_two_beta]
    }

    /// `d omega_i / d I_k`.
    pub fn frequency_jacobian(&self, i_r: f64, i_theta: f64) -> [[f64; 2]; 2] {
        let s = self.sqrt_two_beta;
        let q = self.q(i_r, i_theta);
        let root = q.sqrt();
        let mixed = i_theta / root;
        [
            [s / root, mixed],
            [mixed, (q + i_theta * i_theta) / (s * root)],
        ]
    }

    /// Actions of the torus at energy `eps` whose frequency ratio is
    /// `m_r / m_theta`.
    pub fn resonant_actions(&self, eps: f64, m_r: u64, m_theta: u64) -> Result<(f64, f64)> {
        if m_r == 0 || m_theta == 0 {
            return Err(invalid("winding numbers must be positive"));
        }
        let s = self.sqrt_two_beta;
        let q = (3.0 * s * eps).powf(2.0 / 3.0);
        let i_theta = s * m_theta as f64 / m_r as f64;
        let i_r = (q - i_theta * i_theta) / (2.0 * s);
        if i_r < 0.0 {
            return Err(invalid(format!(
                "winding ratio {m_r}/{m_theta} is below the circular-orbit bound"
            )));
        }
        Ok((i_r, i_theta))
    }
}

/// Squared amplitude from the general action-space formula,
/// `2 pi / (T |-(w1^2 dw2/dI2 + w2^2 dw1/dI1) + w1 w2 (dw1/dI2 + dw2/dI1)|)`,
/// with `T = 2 pi m_r / omega_r`.
pub fn amplitude_sq_general(beta: f64, eps: f64, m_r: u64, m_theta: u64) -> Result<f64> {
    let h = ScaledHamiltonian::new(beta)?;
    let (i_r, i_theta) = h.resonant_actions(eps, m_r, m_theta)?;
    let [w1, w2] = h.frequencies(i_r, i_theta);
    let [[d11, d12], [d21, d22]] = h.frequency_jacobian(i_r, i_theta);
    let period = 2.0 * PI * m_r as f64 / w1;
    let denominator = -(w1 * w1 * d22 + w2 * w2 * d11) + w1 * w2 * (d12 + d21);
    Ok(2.0 * PI / (period * denominator.abs()))
}

/// Closed form `omega_r / (3 eps m_r)`.
pub fn amplitude_sq(tp: &TheoryPoint, m_r: u64) -> f64 {
    tp.omega_r / (3.0 * tp.eps * m_r as f64)
}
