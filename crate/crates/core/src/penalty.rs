//! SCAD-like folded concave penalties and the FCLS penalty value.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{spectral_summary, EdgeVector};
use crate::scalar::Scalar;

/// Default SCAD shape for the Laplacian spectral penalty.
pub const FCLS_DEFAULT_A: f64 = 2.1;
/// Default SCAD shape for entrywise penalties.
pub const ENTRYWISE_DEFAULT_A: f64 = 3.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Scad,
    Mcp,
    Lasso,
}

impl std::str::FromStr for PenaltyKind {
    type Err = crate::error::FclsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scad" => Ok(Self::Scad),
            "mcp" => Ok(Self::Mcp),
            "lasso" => Ok(Self::Lasso),
            other => Err(invalid(format!("unknown penalty kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Scad => "scad",
            Self::Mcp => "mcp",
            Self::Lasso => "lasso",
        })
    }
}

/// A concave penalty `g_τ` together with its shape constants.
///
/// SCAD-like penalties satisfy `g'(0+) = a0 τ`, `g'(t) ≥ a1 τ` on
/// `(0, b1 τ]` and `g'(t) = 0` beyond `b2 τ`. The Lasso member `g(t) = τ t`
/// has no flat region, so `b1` and `b2` are absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty<T> {
    pub kind: PenaltyKind,
    pub tau: T,
    pub a: T,
    pub a0: T,
    pub a1: T,
    pub b1: Option<T>,
    pub b2: Option<T>,
}

impl<T: Scalar> Penalty<T> {
    pub fn new(kind: PenaltyKind, tau: T, a: T) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(invalid(format!("tau must be positive and finite, got {tau}")));
        }
        let one = T::one();
        let half = T::lit(0.5);
        match kind {
            PenaltyKind::Scad => {
                if !(a > T::lit(2.0)) || !a.is_finite() {
                    return Err(invalid(format!("SCAD requires a > 2, got {a}")));
                }
                Ok(Self { kind, tau, a, a0: one, a1: one, b1: Some(one), b2: Some(a) })
            }
            PenaltyKind::Mcp => {
                if !(a > one) || !a.is_finite() {
                    return Err(invalid(format!("MCP requires a > 1, got {a}")));
                }
                Ok(Self { kind, tau, a, a0: one, a1: half, b1: Some(a * half), b2: Some(a) })
            }
            PenaltyKind::Lasso => Ok(Self { kind, tau, a, a0: one, a1: one, b1: None, b2: None }),
        }
    }

    pub fn scad(tau: T, a: T) -> Result<Self> {
        Self::new(PenaltyKind::Scad, tau, a)
    }

    pub fn mcp(tau: T, a: T) -> Result<Self> {
        Self::new(PenaltyKind::Mcp, tau, a)
    }

    pub fn lasso(tau: T) -> Result<Self> {
        Self::new(PenaltyKind::Lasso, tau, T::one())
    }

    /// Same family and shape with a different `τ`.
    pub fn with_tau(&self, tau: T) -> Result<Self> {
        Self::new(self.kind, tau, self.a)
    }

    pub fn is_scad_like(&self) -> bool {
        self.b2.is_some()
    }

    /// Right derivative `g'(t)`; at kinks the right limit is returned.
    pub fn g_prime(&self, t: T) -> Result<T> {
        if t < T::zero() || t.is_nan() {
            return Err(invalid(format!("penalty derivative needs t >= 0, got {t}")));
        }
        Ok(self.derivative(t))
    }

    /// `g(t)` in closed form.
    pub fn g_value(&self, t: T) -> Result<T> {
        if t < T::zero() || t.is_nan() {
            return Err(invalid(format!("penalty value needs t >= 0, got {t}")));
        }
        Ok(self.value(t))
    }

    /// `g'` for `t ≥ 0`, without validation.
    pub(crate) fn derivative(&self, t: T) -> T {
        let tau = self.tau;
        let a = self.a;
        match self.kind {
            PenaltyKind::Scad => {
                if t < tau {
                    tau
                } else {
                    ((a * tau - t) / (a - T::one())).max(T::zero())
                }
            }
            PenaltyKind::Mcp => (tau - t / a).max(T::zero()),
            PenaltyKind::Lasso => tau,
        }
    }

    pub(crate) fn value(&self, t: T) -> T {
        let tau = self.tau;
        let a = self.a;
        let two = T::lit(2.0);
        match self.kind {
            PenaltyKind::Scad => {
                if t <= tau {
                    tau * t
                } else if t < a * tau {
                    (two * a * tau * t - t * t - tau * tau) / (two * (a - T::one()))
                } else {
                    tau * tau * (a + T::one()) / two
                }
            }
            PenaltyKind::Mcp => {
                if t < a * tau {
                    tau * t - t * t / (two * a)
                } else {
                    a * tau * tau / two
                }
            }
            PenaltyKind::Lasso => tau * t,
        }
    }
}

/// `τ` as configured: a fixed value or `"auto"` (resolved to `tau_max`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSpec {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl TauSpec {
    pub const AUTO: TauSpec = TauSpec::Auto(AutoTag::Auto);

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(*v),
            Self::Auto(_) => None,
        }
    }
}

impl std::str::FromStr for TauSpec {
    type Err = crate::error::FclsError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::AUTO);
        }
        s.parse::<f64>()
            .map(Self::Value)
            .map_err(|_| invalid(format!("tau must be a number or 'auto', got '{s}'")))
    }
}

/// Penalty configuration `{"kind": "scad", "tau": 0.5 | "auto", "a": 2.1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub tau: TauSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

impl PenaltySpec {
    /// Shape parameter, falling back to the FCLS default.
    pub fn shape(&self) -> f64 {
        self.a.unwrap_or(FCLS_DEFAULT_A)
    }

    /// Builds the penalty; `auto_tau` supplies `τ` when configured as `"auto"`.
    pub fn build<T: Scalar>(&self, auto_tau: impl FnOnce() -> Result<T>) -> Result<Penalty<T>> {
        let tau = match self.tau.value() {
            Some(v) => T::lit(v),
            None => auto_tau()?,
        };
        Penalty::new(self.kind, tau, T::lit(self.shape()))
    }
}

/// FCLS penalty `½ Σ_i g(λ_i(L(|β|)))`.
pub fn fcls_value<T: Scalar>(penalty: &Penalty<T>, beta: &EdgeVector<T>) -> Result<T> {
    let spectrum = spectral_summary(beta)?;
    Ok(spectral_sum(penalty, spectrum.eigenvalues.iter().copied()) * T::lit(0.5))
}

/// `Σ g(λ)` over eigenvalues, clamping tiny negative round-off to zero.
pub(crate) fn spectral_sum<T: Scalar>(penalty: &Penalty<T>, eigenvalues: impl Iterator<Item = T>) -> T {
    eigenvalues.map(|l| penalty.value(l.max(T::zero()))).sum()
}

/// Sum of an entrywise penalty `Σ_ℓ g(|β_ℓ|)`.
pub fn entrywise_value<T: Scalar>(penalty: &Penalty<T>, beta: &ndarray::Array1<T>) -> T {
    beta.iter().map(|b| penalty.value(b.abs())).sum()
}
