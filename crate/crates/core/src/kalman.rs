//! Scalar Kalman filtering and its steady-state Riccati fixed point.
//!
//! For the plant `x[n+1] = a x[n] + u[n] + w[n]`, `y[n] = x[n] + v[n]`
//! (`Var w = 1`, `Var v = sigma_v^2`), the one-step estimation error
//! variance obeys the scalar Riccati recursion
//!
//! ```text
//! S <- (a^2 S + 1) sigma_v^2 / (a^2 S + 1 + sigma_v^2)
//! ```
//!
//! whose unique nonnegative fixed point is returned by
//! [`kalman_steady_state_error`].

use crate::{Error, Result};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Conditional state belief `(E[x | history], Var[x | history])`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KalmanBelief {
    pub estimate: f64,
    pub error_var: f64,
}

impl KalmanBelief {
    pub fn new(estimate: f64, error_var: f64) -> Result<Self> {
        if !error_var.is_finite() || error_var < 0.0 {
            return Err(Error::InvalidArgument(
                "belief error variance must be finite and nonnegative",
            ));
        }
        Ok(KalmanBelief {
            estimate,
            error_var,
        })
    }
}

/// Steady-state estimation error variance `Sigma_E` of the optimal causal
/// estimator.
///
/// Evaluates the closed form
/// `((a^2-1) s - 1 + sqrt(((a^2-1) s - 1)^2 + 4 a^2 s)) / (2 a^2)` for
/// `s = sigma_v_sq`, switching to the conjugate form
/// `2 s / ((1-a^2) s + 1 + sqrt(((1-a^2) s + 1)^2 + 4 a^2 s))`
/// whenever the headline numerator would cancel. The conjugate form also
/// covers `a = 0`, where the fixed point is `s / (s + 1)`.
pub fn kalman_steady_state_error(a: f64, sigma_v_sq: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument("plant eigenvalue must be finite"));
    }
    if !sigma_v_sq.is_finite() || sigma_v_sq < 0.0 {
        return Err(Error::InvalidArgument(
            "observation-noise variance must be finite and nonnegative",
        ));
    }
    let a2 = a * a;
    let s = sigma_v_sq;
    let x = (a2 - 1.0) * s - 1.0;
    let disc = (x * x + 4.0 * a2 * s).sqrt();
    let value = if x >= 0.0 {
        (x + disc) / (2.0 * a2)
    } else {
        // -x > 0, so the denominator is a sum of positive terms.
        2.0 * s / (-x + disc)
    };
    Ok(value.max(0.0))
}

/// One predict-and-correct step of the scalar Kalman filter.
///
/// `u_prev` is the total input applied at the previous step. The returned
/// error variance is independent of the data and converges to
/// [`kalman_steady_state_error`] as updates repeat.
pub fn kalman_update(
    belief: KalmanBelief,
    a: f64,
    sigma_v_sq: f64,
    y: f64,
    u_prev: f64,
) -> Result<KalmanBelief> {
    if !belief.error_var.is_finite() || belief.error_var < 0.0 {
        return Err(Error::InvalidArgument(
            "belief error variance must be finite and nonnegative",
        ));
    }
    if !sigma_v_sq.is_finite() || sigma_v_sq < 0.0 {
        return Err(Error::InvalidArgument(
            "observation-noise variance must be finite and nonnegative",
        ));
    }
    let predicted = a * belief.estimate + u_prev;
    let m = a * a * belief.error_var + 1.0;
    let gain = m / (m + sigma_v_sq);
    Ok(KalmanBelief {
        estimate: predicted + gain * (y - predicted),
        error_var: (1.0 - gain) * m,
    })
}

/// Measurement-only update of a prior belief (no prediction step); used to
/// fold in the very first observation `y[0]`.
pub fn kalman_correct(belief: KalmanBelief, sigma_v_sq: f64, y: f64) -> KalmanBelief {
    let total = belief.error_var + sigma_v_sq;
    if total == 0.0 {
        // Exact prior and exact observation agree almost surely.
        return KalmanBelief {
            estimate: y,
            error_var: 0.0,
        };
    }
    let gain = belief.error_var / total;
    KalmanBelief {
        estimate: belief.estimate + gain * (y - belief.estimate),
        error_var: (1.0 - gain) * belief.error_var,
    }
}
