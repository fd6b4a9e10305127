use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::Trace;
use crate::viscoelastic::{SlsCoefficients, ViscoParams};

/// Condition number above which the regressor is declared rank deficient.
pub const SINGULAR_CONDITION: f64 = 1e10;

/// Minimum number of samples accepted by [`estimate_theta`].
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Moving-average window in samples applied to strain and stress before
    /// differentiation; 1 disables smoothing, even values round up.
    pub smoothing_window: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { smoothing_window: 5 }
    }
}

/// Least-squares estimate of `sigma + a*dsigma = b*eps + c*deps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Of the column-normalised regressor.
    pub condition_number: f64,
    /// RMS of the stress residual, Pa.
    pub residual_rms: f64,
    /// `a > 0`; the stress dynamics are only invertible when this holds.
    pub stable: bool,
}

impl ThetaEstimate {
    pub fn coefficients(&self) -> SlsCoefficients {
        SlsCoefficients {
            a: self.a,
            b: self.b,
            c: self.c,
        }
    }
}

/// Centered moving average. Near the ends the window is truncated, so each
/// output is the mean of the samples that fall inside it.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    if half == 0 || x.is_empty() {
        return x.to_vec();
    }
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Central differences inside, first-order one-sided differences at the ends.
pub fn derivative(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    (x[1] - x[0]) / dt
                } else if i == n - 1 {
                    (x[n - 1] - x[n - 2]) / dt
                } else {
                    (x[i + 1] - x[i - 1]) / (2.0 * dt)
                }
            })
            .collect(),
    }
}

/// Builds the rows `[eps, deps, -dsigma]` and the target `sigma` from the
/// smoothed traces.
pub fn regressor(strain: &Trace, stress: &Trace, config: &EstimatorConfig) -> Result<(DMatrix<f64>, DVector<f64>)> {
    strain.check_time_base(stress)?;
    if strain.len() < MIN_SAMPLES {
        return Err(Error::invalid(
            "strain",
            format!("need at least {MIN_SAMPLES} samples, got {}", strain.len()),
        ));
    }
    let dt = strain.dt();
    let eps = moving_average(strain.values(), config.smoothing_window);
    let sig = moving_average(stress.values(), config.smoothing_window);
    let deps = derivative(&eps, dt);
    let dsig = derivative(&sig, dt);
    let n = eps.len();
    let phi = DMatrix::from_fn(n, 3, |r, col| match col {
        0 => eps[r],
        1 => deps[r],
        _ => -dsig[r],
    });
    Ok((phi, DVector::from_vec(sig)))
}

/// Solves for `[b, c, a]` by SVD of the column-normalised regressor and
/// returns them as `(a, b, c)` with diagnostics.
pub fn estimate_theta(strain: &Trace, stress: &Trace, config: &EstimatorConfig) -> Result<ThetaEstimate> {
    let (phi, sigma) = regressor(strain, stress, config)?;
    solve(phi, sigma)
}

/// Stacks the regressors of several trials into one least-squares problem.
pub fn estimate_theta_pooled(trials: &[(&Trace, &Trace)], config: &EstimatorConfig) -> Result<ThetaEstimate> {
    let mut blocks = Vec::with_capacity(trials.len());
    for (strain, stress) in trials {
        blocks.push(regressor(strain, stress, config)?);
    }
    let rows: usize = blocks.iter().map(|(p, _)| p.nrows()).sum();
    if rows == 0 {
        return Err(Error::invalid("trials", "no trials supplied"));
    }
    let mut phi = DMatrix::zeros(rows, 3);
    let mut sigma = DVector::zeros(rows);
    let mut at = 0;
    for (p, s) in blocks {
        let n = p.nrows();
        phi.rows_mut(at, n).copy_from(&p);
        sigma.rows_mut(at, n).copy_from(&s);
        at += n;
    }
    solve(phi, sigma)
}

fn solve(mut phi: DMatrix<f64>, sigma: DVector<f64>) -> Result<ThetaEstimate> {
    let scales: Vec<f64> = (0..3).map(|j| phi.column(j).norm()).collect();
    if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::SingularRegressor {
            condition_number: f64::INFINITY,
        });
    }
    let unscaled = phi.clone();
    for (j, s) in scales.iter().enumerate() {
        phi.column_mut(j).unscale_mut(*s);
    }
    let svd = phi.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition_number <= SINGULAR_CONDITION) {
        return Err(Error::SingularRegressor { condition_number });
    }
    let scaled = svd
        .solve(&sigma, 0.0)
        .map_err(|_| Error::SingularRegressor { condition_number })?;
    let theta: Vec<f64> = (0..3).map(|j| scaled[j] / scales[j]).collect();
    let residual = &sigma - &unscaled * DVector::from_column_slice(&theta);
    let residual_rms = (residual.norm_squared() / sigma.len() as f64).sqrt();
    let (b, c, a) = (theta[0], theta[1], theta[2]);
    Ok(ThetaEstimate {
        a,
        b,
        c,
        condition_number,
        residual_rms,
        stable: a > 0.0,
    })
}

/// Inverts `a = mu1/(E0+E1)`, `b = E0 E1/(E0+E1)`, `c = mu1 E0/(E0+E1)`.
pub fn recover_viscoelastic(coefficients: SlsCoefficients) -> Result<ViscoParams> {
    let SlsCoefficients { a, b, c } = coefficients;
    let fail = |reason: &str| Error::DegenerateInversion {
        a,
        b,
        c,
        reason: reason.to_owned(),
    };
    if !(a > 0.0) {
        return Err(fail("a must be positive"));
    }
    if !(b > 0.0) {
        return Err(fail("b must be positive"));
    }
    let e0 = c / a;
    if !(e0 > b) {
        return Err(fail("E0 = c/a must exceed b"));
    }
    let e1 = b * e0 / (e0 - b);
    let mu1 = a * (e0 + e1);
    ViscoParams::new(e0, e1, mu1).map_err(|e| fail(&e.to_string()))
}
