//! The bistable reaction term and its structural conditions.
//!
//! A valid reaction `f` vanishes at -1 and +1 with negative slope, has exactly
//! one further zero between them, integrates to zero over [-1, 1] (the
//! balance condition), and has a globally bounded derivative.

use crate::linalg::adaptive_simpson;
use std::fmt;

/// Bistable nonlinearity with explicit derivatives.
#[derive(Clone, Copy)]
pub struct Bistable {
    pub f: fn(f64) -> f64,
    pub f_prime: fn(f64) -> f64,
    pub f_double_prime: fn(f64) -> f64,
    /// Global upper bound of f'.
    pub c_bar_1: f64,
    /// The three zeros, ordered: -1, inner, +1.
    pub zeros: [f64; 3],
}

impl fmt::Debug for Bistable {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Bistable")
            .field("c_bar_1", &self.c_bar_1)
            .field("zeros", &self.zeros)
            .finish()
    }
}

/// The cubic f(u) = u - u^3.
pub fn make_cubic() -> Bistable {
    Bistable {
        f: |u| u - u * u * u,
        f_prime: |u| 1.0 - 3.0 * u * u,
        f_double_prime: |u| -6.0 * u,
        c_bar_1: 1.0,
        zeros: [-1.0, 0.0, 1.0],
    }
}

impl Bistable {
    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }
    pub fn df(&self, u: f64) -> f64 {
        (self.f_prime)(u)
    }
    pub fn ddf(&self, u: f64) -> f64 {
        (self.f_double_prime)(u)
    }

    /// Decay rate of the standing profile toward its end states.
    pub fn zeta(&self) -> f64 {
        (-self.df(-1.0)).sqrt().min((-self.df(1.0)).sqrt())
    }
}

/// Potential V(u) = int_u^1 f(v) dv.
pub fn potential_v(b: &Bistable, u: f64) -> f64 {
    adaptive_simpson(&|v| b.f(v), u, 1.0, 1e-13)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReactionError {
    /// Endpoint values or the integral over [-1, 1] fail condition (i).
    BalanceViolation { residual: f64 },
    ZeroCountViolation { count: usize },
    SlopeSignViolation { at: f64, slope: f64 },
}

impl fmt::Display for ReactionError {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReactionError::BalanceViolation { residual } => {
                write!(fm, "balance condition violated, residual {residual:e}")
            }
            ReactionError::ZeroCountViolation { count } => {
                write!(fm, "expected 3 zeros on [-1.5, 1.5], found {count}")
            }
            ReactionError::SlopeSignViolation { at, slope } => {
                write!(fm, "f'({at}) = {slope} must be negative")
            }
        }
    }
}

impl std::error::Error for ReactionError {}

/// Per-condition outcome of `validate`.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub zero_count: usize,
    pub endpoint_residual: f64,
    pub balance_residual: f64,
    pub slope_minus: f64,
    pub slope_plus: f64,
    /// max f' - c_bar_1 over the sampled grid (negative when the bound holds).
    pub slope_bound_excess: f64,
}

const ZERO_GRID: usize = 10_000;

fn count_sign_changes(b: &Bistable) -> usize {
    let mut count = 0;
    let mut prev = b.f(-1.5);
    for i in 1..=ZERO_GRID {
        let u = -1.5 + 3.0 * i as f64 / ZERO_GRID as f64;
        let cur = b.f(u);
        if prev == 0.0 || prev * cur < 0.0 {
            count += 1;
        }
        prev = cur;
    }
    count
}

/// Check conditions (i)-(iii); fails loudly on the first violated one.
///
/// Order of checks: zero count, then endpoint/balance, then slope signs.
pub fn validate(b: &Bistable) -> Result<ValidationReport, ReactionError> {
    let zero_count = count_sign_changes(b);
    let endpoint_residual = b.f(-1.0).abs().max(b.f(1.0).abs());
    let balance_residual = adaptive_simpson(&|v| b.f(v), -1.0, 1.0, 1e-14);
    let slope_minus = b.df(-1.0);
    let slope_plus = b.df(1.0);
    let mut excess = f64::NEG_INFINITY;
    for i in 0..=600 {
        let u = -3.0 + 6.0 * i as f64 / 600.0;
        excess = excess.max(b.df(u) - b.c_bar_1);
    }

    if zero_count != 3 {
        return Err(ReactionError::ZeroCountViolation { count: zero_count });
    }
    if endpoint_residual > 1e-12 || balance_residual.abs() > 1e-12 {
        return Err(ReactionError::BalanceViolation {
            residual: endpoint_residual.max(balance_residual.abs()),
        });
    }
    if slope_minus >= 0.0 {
        return Err(ReactionError::SlopeSignViolation {
            at: -1.0,
            slope: slope_minus,
        });
    }
    if slope_plus >= 0.0 {
        return Err(ReactionError::SlopeSignViolation {
            at: 1.0,
            slope: slope_plus,
        });
    }

    Ok(ValidationReport {
        zero_count,
        endpoint_residual,
        balance_residual,
        slope_minus,
        slope_plus,
        slope_bound_excess: excess,
    })
}
