use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar function `f` generating the Lax flow `T' = [T, Π_sk f(T)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum FlowFunction {
    /// `f(x) = x`: the Toda lattice.
    Identity,
    /// `f(x) = ln x`: interpolates unshifted QR at integer times.
    Log,
    /// `f(x) = Σ c_k x^k`, coefficients in ascending degree.
    Polynomial(Vec<f64>),
    /// `f(x) = ln |x − s|`: interpolates QR with shift `s`.
    ShiftedLog(f64),
}

impl FlowFunction {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("polynomial coefficients must be finite".into()));
        }
        Ok(Self::Polynomial(coeffs))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Self::Identity => Ok(x),
            Self::Log => {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(Error::Domain(format!("ln undefined at {x}")))
                }
            }
            Self::Polynomial(c) => Ok(horner(c, x)),
            Self::ShiftedLog(s) => {
                let d = (x - s).abs();
                if d > 0.0 {
                    Ok(d.ln())
                } else {
                    Err(Error::Domain(format!("ln|x - {s}| undefined at the shift")))
                }
            }
        }
    }

    /// Evaluation used by the bidiagonal chart flow: `Log` becomes `ln |x|`
    /// so that `exp(t f(Λ))` stays a positive diagonal matrix.
    pub fn eval_abs(&self, x: f64) -> Result<f64> {
        match self {
            Self::Log => {
                if x != 0.0 {
                    Ok(x.abs().ln())
                } else {
                    Err(Error::Domain("ln|x| undefined at 0".into()))
                }
            }
            other => other.eval(x),
        }
    }

    /// True for variants that can be evaluated on a matrix without an
    /// eigendecomposition.
    pub fn is_polynomial(&self) -> bool {
        matches!(self, Self::Identity | Self::Polynomial(_))
    }
}

pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

impl fmt::Display for FlowFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Log => write!(f, "log"),
            Self::Polynomial(c) => {
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "poly:{}", parts.join(","))
            }
            Self::ShiftedLog(s) => write!(f, "shiftlog:{s}"),
        }
    }
}

impl FromStr for FlowFunction {
    type Err = Error;

    /// Accepts `identity`, `log`, `poly:c0,c1,...` and `shiftlog:s`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "identity" | "id" => return Ok(Self::Identity),
            "log" | "ln" => return Ok(Self::Log),
            _ => {}
        }
        let bad = || Error::InvalidInput(format!("unrecognised flow function '{s}'"));
        if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs = rest
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            return Self::polynomial(coeffs);
        }
        if let Some(rest) = s.strip_prefix("shiftlog:") {
            let shift = rest.trim().parse::<f64>().map_err(|_| bad())?;
            if !shift.is_finite() {
                return Err(bad());
            }
            return Ok(Self::ShiftedLog(shift));
        }
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        for s in ["identity", "log", "poly:0,1,0,0.5", "shiftlog:1.5"] {
            let f: FlowFunction = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<FlowFunction>().unwrap(), f);
        }
        assert!("poly:".parse::<FlowFunction>().is_err());
        assert!("exp".parse::<FlowFunction>().is_err());
    }

    #[test]
    fn domains() {
        assert!(FlowFunction::Log.eval(0.0).is_err());
        assert!(FlowFunction::Log.eval(-1.0).is_err());
        assert_eq!(FlowFunction::Log.eval_abs(-1.0).unwrap(), 0.0);
        assert!(FlowFunction::ShiftedLog(2.0).eval(2.0).is_err());
        assert!((FlowFunction::ShiftedLog(2.0).eval(1.0).unwrap()).abs() < 1e-15);
        let p = FlowFunction::polynomial(vec![1.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.eval(3.0).unwrap(), 19.0);
        assert!(FlowFunction::polynomial(vec![]).is_err());
    }
}
