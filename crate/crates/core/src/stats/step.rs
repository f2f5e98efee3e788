use serde::{Deserialize, Serialize};

use super::StatCurve;
use crate::error::{invalid, Result};

/// Two-plateau least-squares fit to a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepFit {
    /// First index of the right-hand plateau.
    pub split: usize,
    /// Midpoint between the last left and first right abscissa.
    pub location: f64,
    pub left_level: f64,
    pub right_level: f64,
    pub residual: f64,
}

impl StepFit {
    pub fn jump(&self) -> f64 {
        self.right_level - self.left_level
    }
}

/// Best single step (piecewise constant with one break) through the means.
pub fn fit_step(curve: &StatCurve) -> Result<StepFit> {
    let x = curve.abscissa();
    let y = curve.mean();
    let n = y.len();
    if n < 2 {
        return Err(invalid("a step fit needs at least two points"));
    }
    let total: f64 = y.iter().sum();
    let total_sq: f64 = y.iter().map(|v| v * v).sum();
    let mut best: Option<StepFit> = None;
    let mut left = 0.0;
    let mut left_sq = 0.0;
    for k in 1..n {
        left += y[k - 1];
        left_sq += y[k - 1] * y[k - 1];
        let (nl, nr) = (k as f64, (n - k) as f64);
        let right = total - left;
        let right_sq = total_sq - left_sq;
        let residual = (left_sq - left * left / nl) + (right_sq - right * right / nr);
        if best.map_or(true, |b| residual < b.residual) {
            best = Some(StepFit {
                split: k,
                location: 0.5 * (x[k - 1] + x[k]),
                left_level: left / nl,
                right_level: right / nr,
                residual: residual.max(0.0),
            });
        }
    }
    Ok(best.expect("n >= 2"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_noisy_step() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| if v < 7.0 { 30.0 } else { 75.0 } + if (v as i32) % 2 == 0 { 1.5 } else { -1.5 })
            .collect();
        let fit = fit_step(&StatCurve::new(x, y, None).unwrap()).unwrap();
        assert_eq!(fit.split, 7);
        assert_eq!(fit.location, 6.5);
        assert!((fit.jump() - 45.0).abs() < 1.0);
    }

    #[test]
    fn needs_two_points() {
        assert!(fit_step(&StatCurve::new(vec![1.0], vec![1.0], None).unwrap()).is_err());
    }
}
