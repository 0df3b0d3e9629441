//! Closed-form Cournot, Stackelberg and capacity-constrained duopolies.
//!
//! Inverse demand is `p(Q) = p₀ − αQ` for total output `Q = q₁ + q₂`, both
//! firms have marginal cost `c`, and firm `i` earns `(p₀ − αQ − c)·qᵢ`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuopolyParams {
    pub p0: f64,
    pub alpha: f64,
    pub c: f64,
    /// Shared market capacity `q₁ + q₂ ≤ K`.
    pub capacity: Option<f64>,
}

impl DuopolyParams {
    pub fn new(p0: f64, alpha: f64, c: f64) -> Self {
        Self {
            p0,
            alpha,
            c,
            capacity: None,
        }
    }

    pub fn with_capacity(self, k: f64) -> Self {
        Self {
            capacity: Some(k),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.p0, self.alpha, self.c].iter().all(|v| v.is_finite());
        if !(finite && self.c > 0.0 && self.p0 > self.c && self.alpha > 0.0) {
            return Err(Error::InvalidParams(format!(
                "need p0 > c > 0 and alpha > 0, got p0={}, alpha={}, c={}",
                self.p0, self.alpha, self.c
            )));
        }
        if let Some(k) = self.capacity {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "capacity must be positive, got {k}"
                )));
            }
        }
        Ok(())
    }

    fn capacity_or_err(&self) -> Result<f64> {
        self.capacity.ok_or_else(|| {
            Error::InvalidParams("capacity K is required for the constrained game".into())
        })
    }

    /// Profit of a firm producing `q_own` against `q_other`.
    pub fn profit(&self, q_own: f64, q_other: f64) -> f64 {
        (self.p0 - self.alpha * (q_own + q_other) - self.c) * q_own
    }

    /// `(p₀ − c)/α`: the output at which price falls to marginal cost.
    fn margin(&self) -> f64 {
        (self.p0 - self.c) / self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DuopolyModel {
    Cournot,
    Stackelberg,
    GnepCapacity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub model: DuopolyModel,
    /// Set when the equilibrium is a single point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantities: Option<(f64, f64)>,
    /// Set when the equilibria form the segment between these endpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment: Option<[(f64, f64); 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profits: Option<(f64, f64)>,
}

impl EquilibriumReport {
    fn point(model: DuopolyModel, params: &DuopolyParams, q1: f64, q2: f64) -> Self {
        Self {
            model,
            quantities: Some((q1, q2)),
            segment: None,
            profits: Some((params.profit(q1, q2), params.profit(q2, q1))),
        }
    }
}

fn check_quantity(q: f64) -> Result<()> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "quantity must be finite and nonnegative, got {q}"
        )));
    }
    Ok(())
}

/// `B(q) = max{0, (p₀ − c − αq)/(2α)}`.
pub fn cournot_best_response(params: &DuopolyParams, q_other: f64) -> Result<f64> {
    params.validate()?;
    check_quantity(q_other)?;
    Ok(((params.p0 - params.c - params.alpha * q_other) / (2.0 * params.alpha)).max(0.0))
}

/// Both firms produce `(p₀ − c)/(3α)` and earn `(p₀ − c)²/(9α)`.
pub fn cournot_equilibrium(params: &DuopolyParams) -> Result<EquilibriumReport> {
    params.validate()?;
    let q = params.margin() / 3.0;
    Ok(EquilibriumReport::point(
        DuopolyModel::Cournot,
        params,
        q,
        q,
    ))
}

/// Firm 1 leads with `(p₀ − c)/(2α)`, firm 2 answers `(p₀ − c)/(4α)`.
pub fn stackelberg_equilibrium(params: &DuopolyParams) -> Result<EquilibriumReport> {
    params.validate()?;
    let leader = params.margin() / 2.0;
    let follower = cournot_best_response(params, leader)?;
    Ok(EquilibriumReport::point(
        DuopolyModel::Stackelberg,
        params,
        leader,
        follower,
    ))
}

/// Best response under `q₁ + q₂ ≤ K`: `max{0, min{(p₀ − c − αq)/(2α), K − q}}`.
pub fn gnep_best_response(params: &DuopolyParams, q_other: f64) -> Result<f64> {
    params.validate()?;
    let k = params.capacity_or_err()?;
    check_quantity(q_other)?;
    if q_other > k {
        return Err(Error::InfeasibleOpponent {
            q_other,
            capacity: k,
        });
    }
    let unconstrained = (params.p0 - params.c - params.alpha * q_other) / (2.0 * params.alpha);
    Ok(unconstrained.min(k - q_other).max(0.0))
}

/// Equilibria of the capacity-constrained game.
///
/// When the Cournot total `2(p₀ − c)/(3α)` fits under `K` the Cournot point
/// is the equilibrium. Otherwise every point of `q₁ + q₂ = K` where each
/// firm's unconstrained response is at least its residual capacity is an
/// equilibrium, i.e. `qᵢ ≥ max{0, 2K − (p₀ − c)/α}` for both firms.
pub fn gnep_equilibria(params: &DuopolyParams) -> Result<EquilibriumReport> {
    params.validate()?;
    let k = params.capacity_or_err()?;
    let margin = params.margin();
    if 2.0 * margin / 3.0 <= k {
        let q = margin / 3.0;
        return Ok(EquilibriumReport::point(
            DuopolyModel::GnepCapacity,
            params,
            q,
            q,
        ));
    }
    let lo = (2.0 * k - margin).max(0.0);
    let hi = k - lo;
    Ok(EquilibriumReport {
        model: DuopolyModel::GnepCapacity,
        quantities: None,
        segment: Some([(lo, hi), (hi, lo)]),
        profits: None,
    })
}

/// Mutual best-response test within `tol`.
pub fn is_gnep_equilibrium(params: &DuopolyParams, q1: f64, q2: f64, tol: f64) -> Result<bool> {
    params.validate()?;
    let k = params.capacity_or_err()?;
    if q1 < -tol || q2 < -tol || q1 + q2 > k + tol {
        return Ok(false);
    }
    let (q1c, q2c) = (q1.clamp(0.0, k), q2.clamp(0.0, k));
    let b1 = gnep_best_response(params, q2c)?;
    let b2 = gnep_best_response(params, q1c)?;
    Ok((q1 - b1).abs() <= tol && (q2 - b2).abs() <= tol)
}
