//! Serializable catalog of scalar functions `f(t, x)` used for initial data,
//! fixed charges, sources, exact solutions and time-dependent boundary fluxes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `Σ coeffs[n] x^n`
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `Σ coeffs[n] t^n`, constant in space
    TimePolynomial {
        coeffs: Vec<f64>,
    },
    /// `offset + amplitude · sin(frequency · x)`
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `e^{-rate·t} · inner(t, x)`
    ExpDecay {
        rate: f64,
        inner: Box<Profile>,
    },
    Sum {
        terms: Vec<Profile>,
    },
    Product {
        factors: Vec<Profile>,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn zero() -> Self {
        Profile::Constant { value: 0.0 }
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        Profile::Polynomial {
            coeffs: coeffs.to_vec(),
        }
    }

    pub fn exp_decay(rate: f64, inner: Profile) -> Self {
        Profile::ExpDecay {
            rate,
            inner: Box::new(inner),
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Profile::TimePolynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Profile::Sine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (frequency * x).sin(),
            Profile::ExpDecay { rate, inner } => (-rate * t).exp() * inner.eval(t, x),
            Profile::Sum { terms } => terms.iter().map(|p| p.eval(t, x)).sum(),
            Profile::Product { factors } => factors.iter().map(|p| p.eval(t, x)).product(),
        }
    }

    /// True when the profile is identically zero by construction.
    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Constant { value } => *value == 0.0,
            Profile::Polynomial { coeffs } | Profile::TimePolynomial { coeffs } => coeffs.iter().all(|&c| c == 0.0),
            Profile::Sine { offset, amplitude, .. } => *offset == 0.0 && *amplitude == 0.0,
            Profile::ExpDecay { inner, .. } => inner.is_zero(),
            Profile::Sum { terms } => terms.iter().all(Profile::is_zero),
            Profile::Product { factors } => factors.iter().any(Profile::is_zero),
        }
    }

    /// True when the profile does not depend on `t`.
    pub fn is_time_independent(&self) -> bool {
        match self {
            Profile::Constant { .. } | Profile::Polynomial { .. } | Profile::Sine { .. } => true,
            Profile::TimePolynomial { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
            Profile::ExpDecay { rate, inner } => *rate == 0.0 || inner.is_zero(),
            Profile::Sum { terms } => terms.iter().all(Profile::is_time_independent),
            Profile::Product { factors } => factors.iter().all(Profile::is_time_independent),
        }
    }
}

/// Product of two ascending coefficient lists.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_horner() {
        let p = Profile::poly(&[4.0, -2.0]);
        assert_eq!(p.eval(0.0, 0.25), 3.5);
        let q = Profile::poly(&[0.0, 0.0, 1.0]);
        assert_eq!(q.eval(7.0, 3.0), 9.0);
    }

    #[test]
    fn compositions() {
        let p = Profile::exp_decay(1.0, Profile::constant(2.0));
        assert!((p.eval(1.0, 0.0) - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert!(!p.is_time_independent());
        let s = Profile::Sum {
            terms: vec![Profile::constant(1.0), Profile::poly(&[0.0, 1.0])],
        };
        assert_eq!(s.eval(0.0, 2.0), 3.0);
        assert!(s.is_time_independent());
        assert!(Profile::zero().is_zero());
    }

    #[test]
    fn json_round_trip() {
        let p = Profile::Sum {
            terms: vec![
                Profile::exp_decay(2.0, Profile::poly(&[0.1, 0.2])),
                Profile::Sine {
                    offset: 1.0,
                    amplitude: std::f64::consts::PI,
                    frequency: std::f64::consts::PI,
                },
            ],
        };
        let text = serde_json::to_string(&p).unwrap();
        let back: Profile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn poly_mul_expands() {
        // (1 - x)^2 = 1 - 2x + x^2
        assert_eq!(poly_mul(&[1.0, -1.0], &[1.0, -1.0]), vec![1.0, -2.0, 1.0]);
    }
}
