//! Exchange-option pricers and their shared contract types.

pub mod closed;
pub mod fourier;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// European exchange/spread contract on two assets, payoff
/// `(S2(T) - S1(T) - K)^+`. The closed-form pricers require `K = 0`;
/// the Fourier and Monte Carlo routes accept any `K >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeContract {
    pub s1_0: f64,
    pub s2_0: f64,
    pub maturity_t: f64,
    #[serde(default)]
    pub strike_k: f64,
}

impl ExchangeContract {
    pub fn new(s1_0: f64, s2_0: f64, maturity_t: f64, strike_k: f64) -> Result<Self> {
        let c = ExchangeContract { s1_0, s2_0, maturity_t, strike_k };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s1_0 > 0.0 && self.s2_0 > 0.0) {
            return Err(Error::domain(format!(
                "initial values ({}, {}) must be > 0",
                self.s1_0, self.s2_0
            )));
        }
        if !(self.maturity_t > 0.0) {
            return Err(Error::domain(format!(
                "maturity {} must be > 0",
                self.maturity_t
            )));
        }
        if !(self.strike_k >= 0.0) {
            return Err(Error::domain(format!(
                "strike {} must be >= 0",
                self.strike_k
            )));
        }
        Ok(())
    }

    pub(crate) fn require_zero_strike(&self, what: &str) -> Result<()> {
        if self.strike_k != 0.0 {
            return Err(Error::domain(format!(
                "{what} supports only zero-strike (exchange) contracts, got K = {}",
                self.strike_k
            )));
        }
        Ok(())
    }
}

/// Pricing route tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "closed")]
    Closed,
    #[serde(rename = "quadrature")]
    Quadrature,
    #[serde(rename = "fourier")]
    Fourier,
    #[serde(rename = "mc")]
    MonteCarlo,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Closed => "closed",
            Method::Quadrature => "quadrature",
            Method::Fourier => "fourier",
            Method::MonteCarlo => "mc",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(Method::Closed),
            "quadrature" => Ok(Method::Quadrature),
            "fourier" => Ok(Method::Fourier),
            "mc" => Ok(Method::MonteCarlo),
            other => Err(Error::domain(format!(
                "unknown method '{other}' (expected closed, quadrature, fourier or mc)"
            ))),
        }
    }
}

/// A price with its provenance: method tag, Monte Carlo standard error when
/// applicable, wall-clock runtime and numerical diagnostics (series terms,
/// truncation residuals, quadrature node counts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub price: f64,
    pub method: Method,
    pub std_error: Option<f64>,
    /// Wall-clock seconds spent producing the price.
    pub runtime: f64,
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PriceReport {
    pub(crate) fn new(price: f64, method: Method) -> Self {
        PriceReport {
            // the exchange payoff is nonnegative, so clamp quadrature noise
            price: price.max(0.0),
            method,
            std_error: None,
            runtime: 0.0,
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn with_diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }
}
