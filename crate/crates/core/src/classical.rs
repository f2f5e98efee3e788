//! Classical motion in `V(r) = -alpha / r + beta / r^2` with `hbar = 1`.
//!
//! Energies here are physical (negative for bound motion); the scaled
//! model uses `beta_model = m * beta_raw`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::theory::gcd;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub alpha: f64,
    pub beta_raw: f64,
    pub m: f64,
}

impl PotentialParams {
    pub fn new(alpha: f64, beta_raw: f64, m: f64) -> Result<Self> {
        let pp = Self { alpha, beta_raw, m };
        pp.validate()?;
        Ok(pp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(invalid(format!("m must be positive, got {}", self.m)));
        }
        if !(self.beta_raw.is_finite() && self.beta_raw >= 0.0) {
            return Err(invalid(format!(
                "beta_raw must be nonnegative, got {}",
                self.beta_raw
            )));
        }
        Ok(())
    }

    /// Depth scale `alpha^2 / (4 beta)`; infinite for the pure Coulomb case.
    pub fn well_depth(&self) -> f64 {
        if self.beta_raw == 0.0 {
            f64::INFINITY
        } else {
            self.alpha * self.alpha / (4.0 * self.beta_raw)
        }
    }

    fn two_m_beta(&self) -> f64 {
        2.0 * self.m * self.beta_raw
    }

    fn check_bound_energy(&self, energy: f64) -> Result<()> {
        self.validate()?;
        if !(energy.is_finite() && energy < 0.0) {
            return Err(Error::Unbound(format!("energy {energy} is not negative")));
        }
        if -energy >= self.well_depth() {
            return Err(Error::Unbound(format!(
                "|energy| = {} reaches the well depth {}",
                -energy,
                self.well_depth()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitGeometry {
    pub p: f64,
    pub e: f64,
    pub gamma: f64,
    pub theta0: f64,
}

fn check_l(l: f64) -> Result<()> {
    if !(l.is_finite() && l > 0.0) {
        return Err(invalid(format!(
            "angular momentum must be positive, got {l}"
        )));
    }
    Ok(())
}

/// Orbit shape `r = p / (1 + e cos(gamma (theta - theta0)))` with `theta0 = 0`.
pub fn orbit_geometry(pp: &PotentialParams, energy: f64, l: f64) -> Result<OrbitGeometry> {
    pp.validate()?;
    check_l(l)?;
    if !(energy.is_finite() && energy < 0.0) {
        return Err(Error::Unbound(format!("energy {energy} is not negative")));
    }
    let b = pp.beta_raw + l * l / (2.0 * pp.m);
    let e_sq = 1.0 + 4.0 * energy * b / (pp.alpha * pp.alpha);
    // Allow rounding just below zero on the circular orbit.
    if e_sq < -1e-12 {
        return Err(invalid(format!(
            "energy {energy} lies below the effective-potential minimum for L = {l}"
        )));
    }
    let e = e_sq.max(0.0).sqrt();
    if e >= 1.0 {
        return Err(Error::Unbound(format!("eccentricity {e} >= 1")));
    }
    Ok(OrbitGeometry {
        p: 2.0 * b / pp.alpha,
        e,
        gamma: (1.0 + pp.two_m_beta() / (l * l)).sqrt(),
        theta0: 0.0,
    })
}

pub fn trajectory_radius(g: &OrbitGeometry, theta: f64) -> Result<f64> {
    let denominator = 1.0 + g.e * (g.gamma * (theta - g.theta0)).cos();
    if denominator <= 0.0 {
        return Err(Error::Unbound(format!(
            "radius diverges at theta = {theta} (e = {})",
            g.e
        )));
    }
    Ok(g.p / denominator)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionPair {
    pub i_r: f64,
    pub i_theta: f64,
}

pub fn actions(pp: &PotentialParams, energy: f64, l: f64) -> Result<ActionPair> {
    pp.validate()?;
    check_l(l)?;
    if !(energy.is_finite() && energy < 0.0) {
        return Err(Error::Unbound(format!("energy {energy} is not negative")));
    }
    let i_r = -(l * l + pp.two_m_beta()).sqrt() + pp.alpha * (pp.m / (2.0 * -energy)).sqrt();
    if i_r < -1e-12 * l.max(1.0) {
        return Err(invalid(format!(
            "negative radial action {i_r}: no turning points at energy {energy}, L = {l}"
        )));
    }
    Ok(ActionPair {
        i_r: i_r.max(0.0),
        i_theta: l,
    })
}

pub fn energy_from_actions(pp: &PotentialParams, a: &ActionPair) -> Result<f64> {
    pp.validate()?;
    if !(a.i_r >= 0.0 && a.i_theta > 0.0) {
        return Err(invalid(format!(
            "actions must satisfy I_r >= 0, I_theta > 0, got ({}, {})",
            a.i_r, a.i_theta
        )));
    }
    let n = a.i_r + (a.i_theta * a.i_theta + pp.two_m_beta()).sqrt();
    Ok(-pp.m * pp.alpha * pp.alpha / (2.0 * n * n))
}

/// `(omega_r, omega_theta)`; `omega_r` depends on the energy only.
pub fn frequencies(pp: &PotentialParams, energy: f64, l: f64) -> Result<(f64, f64)> {
    pp.validate()?;
    check_l(l)?;
    if !(energy.is_finite() && energy < 0.0) {
        return Err(Error::Unbound(format!("energy {energy} is not negative")));
    }
    let omega_r = radial_frequency(pp, energy);
    let gamma = (1.0 + pp.two_m_beta() / (l * l)).sqrt();
    Ok((omega_r, omega_r / gamma))
}

fn radial_frequency(pp: &PotentialParams, energy: f64) -> f64 {
    ((-2.0 * energy).powi(3) / (pp.m * pp.alpha * pp.alpha)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularOrbit {
    pub l_cir: f64,
    pub gamma_cir: f64,
    pub period: f64,
}

pub fn circular_orbit(pp: &PotentialParams, energy: f64) -> Result<CircularOrbit> {
    pp.check_bound_energy(energy)?;
    let abs = -energy;
    let omega_r = radial_frequency(pp, energy);
    let (l_cir, gamma_cir) = if pp.beta_raw == 0.0 {
        (pp.alpha * (pp.m / (2.0 * abs)).sqrt(), 1.0)
    } else {
        let depth = pp.well_depth();
        (
            pp.two_m_beta().sqrt() * ((depth - abs) / abs).sqrt(),
            (depth / (depth - abs)).sqrt(),
        )
    };
    Ok(CircularOrbit {
        l_cir,
        gamma_cir,
        period: 2.0 * PI * gamma_cir / omega_r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub m_r: u64,
    pub m_theta: u64,
    pub l: f64,
    pub period: f64,
}

/// Angular momentum at which the orbit closes after `m_r` radial and
/// `m_theta` angular windings, if that orbit exists at `energy`.
pub fn periodic_condition(
    pp: &PotentialParams,
    energy: f64,
    m_r: u64,
    m_theta: u64,
) -> Result<Option<PeriodicOrbit>> {
    if m_r == 0 || m_theta == 0 || gcd(m_r, m_theta) != 1 {
        return Err(invalid(format!(
            "winding numbers {m_r}, {m_theta} must be positive and coprime"
        )));
    }
    let cir = circular_orbit(pp, energy)?;
    let period = 2.0 * PI * m_r as f64 / radial_frequency(pp, energy);
    let ratio = m_r as f64 / m_theta as f64;
    if pp.beta_raw == 0.0 {
        // Every Kepler orbit closes with gamma = 1; report the circular one.
        return Ok((m_r == 1 && m_theta == 1).then_some(PeriodicOrbit {
            m_r,
            m_theta,
            l: cir.l_cir,
            period,
        }));
    }
    if ratio <= 1.0 || ratio < cir.gamma_cir {
        return Ok(None);
    }
    let l = (pp.two_m_beta() / (ratio * ratio - 1.0)).sqrt();
    Ok(Some(PeriodicOrbit {
        m_r,
        m_theta,
        l,
        period,
    }))
}

/// Every periodic orbit with `m_r <= mr_max`, ordered by `(m_r, m_theta)`.
pub fn admissible_orbits(
    pp: &PotentialParams,
    energy: f64,
    mr_max: u64,
) -> Result<Vec<PeriodicOrbit>> {
    let mut out = Vec::new();
    for m_r in 1..=mr_max {
        for m_theta in 1..=m_r {
            if gcd(m_r, m_theta) != 1 {
                continue;
            }
            if let Some(o) = periodic_condition(pp, energy, m_r, m_theta)? {
                out.push(o);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> PotentialParams {
        PotentialParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn geometry_worked_case() {
        let g = orbit_geometry(&unit(), -0.125, 1.0).unwrap();
        assert_relative_eq!(g.p, 3.0, max_relative = 1e-15);
        assert_relative_eq!(g.gamma, 3f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(g.e, 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            trajectory_radius(&g, 0.0).unwrap(),
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn coulomb_limit() {
        let pp = PotentialParams::new(1.0, 0.0, 1.0).unwrap();
        let g = orbit_geometry(&pp, -0.3, 1.1).unwrap();
        assert_eq!(g.gamma, 1.0);
        let (wr, wt) = frequencies(&pp, -0.3, 1.1).unwrap();
        assert_eq!(wr, wt);
        let e = energy_from_actions(
            &pp,
            &ActionPair {
                i_r: 0.4,
                i_theta: 0.9,
            },
        )
        .unwrap();
        assert_relative_eq!(e, -0.5 / 1.69, max_relative = 1e-15);
    }

    #[test]
    fn circular_orbit_is_round_and_consistent() {
        let pp = unit();
        let c = circular_orbit(&pp, -0.125).unwrap();
        let g = orbit_geometry(&pp, -0.125, c.l_cir).unwrap();
        assert!(g.e < 1e-6);
        assert_relative_eq!(g.gamma, c.gamma_cir, max_relative = 1e-12);
        let a = actions(&pp, -0.125, c.l_cir).unwrap();
        assert!(a.i_r.abs() < 1e-12);
        assert!(circular_orbit(&pp, -0.25).is_err());
        assert!(circular_orbit(&pp, 0.1).is_err());
    }

    #[test]
    fn unbound_flagged() {
        assert!(matches!(
            orbit_geometry(&unit(), 0.5, 1.0),
            Err(Error::Unbound(_))
        ));
        let g = OrbitGeometry {
            p: 1.0,
            e: 1.5,
            gamma: 1.0,
            theta0: 0.0,
        };
        assert!(trajectory_radius(&g, PI).is_err());
    }

    #[test]
    fn actions_reject_energy_below_minimum() {
        // L = 3 cannot reach energy -0.2 in the unit well.
        assert!(actions(&unit(), -0.2, 3.0).is_err());
    }

    #[test]
    fn periodic_orbits() {
        let pp = unit();
        let c = circular_orbit(&pp, -0.125).unwrap();
        // gamma_cir = sqrt(2) here.
        assert_relative_eq!(c.gamma_cir, 2f64.sqrt(), max_relative = 1e-14);
        assert!(periodic_condition(&pp, -0.125, 4, 3).unwrap().is_none());
        let o = periodic_condition(&pp, -0.125, 3, 2).unwrap().unwrap();
        let g = orbit_geometry(&pp, -0.125, o.l).unwrap();
        assert_relative_eq!(g.gamma, 1.5, max_relative = 1e-12);
        let (wr, _) = frequencies(&pp, -0.125, o.l).unwrap();
        assert_relative_eq!(o.period, 6.0 * PI / wr, max_relative = 1e-15);
        assert!(periodic_condition(&pp, -0.125, 4, 2).is_err());
    }

    #[test]
    fn kepler_admits_only_unit_ratio() {
        let pp = PotentialParams::new(1.0, 0.0, 1.0).unwrap();
        let orbits = admissible_orbits(&pp, -0.5, 6).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!((orbits[0].m_r, orbits[0].m_theta), (1, 1));
    }
}
