//! Fixed-step integration of the controlled network and the reduced branch
//! systems, period detection, delay tuning and stabilization experiments.

mod experiment;
mod integrate;
mod slope;
mod trajectory;

use crate::error::{Error, Result};
use crate::model::{controlled_rhs, ControlSpec, Params, ReducedSystem};
use crate::symgroup::{Vec8, N};

pub use experiment::{
    control_residual, stabilization_experiment, stabilization_run, symmetric_seed, tune_delay, ExperimentSettings, ExperimentVerdict, Outcome,
    TuneSettings, Tuned,
};
pub use integrate::{integrate, DdeSystem, OVERFLOW_GUARD};
pub use slope::{amplitude_slope_fit, SlopeFit, SlopePoint};
pub use trajectory::Trajectory;

/// The full 16-dimensional controlled network with delay `t₀T`.
#[derive(Debug, Clone)]
pub struct ControlledNetwork {
    pub params: Params,
    pub spec: ControlSpec,
    lags: Vec<f64>,
}

impl ControlledNetwork {
    /// A control with zero gain or zero delay needs no history lookups.
    pub fn new(params: Params, spec: ControlSpec, period: f64) -> Self {
        let lags = if spec.is_delayed() && params.b != 0.0 {
            vec![spec.delay(period)]
        } else {
            Vec::new()
        };
        Self { params, spec, lags }
    }

    pub fn delay(&self) -> f64 {
        self.lags.first().copied().unwrap_or(0.0)
    }
}

impl DdeSystem for ControlledNetwork {
    fn dim(&self) -> usize {
        2 * N
    }

    fn lags(&self) -> &[f64] {
        &self.lags
    }

    fn rhs(&self, _t: f64, y: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
        let x = Vec8::from_column_slice(&y[..N]);
        let v = Vec8::from_column_slice(&y[N..]);
        let vd = match lagged.first() {
            Some(l) => Vec8::from_column_slice(&l[N..]),
            None => v,
        };
        let acc = controlled_rhs(&self.params, &self.spec, &x, &v, &vd);
        out[..N].copy_from_slice(&y[N..]);
        out[N..].copy_from_slice(acc.as_slice());
    }
}

/// A reduced branch system with state `(x₁[, x₂], ẋ₁[, ẋ₂])`.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub params: Params,
    pub system: ReducedSystem,
    lags: Vec<f64>,
}

impl ReducedNetwork {
    pub fn new(params: Params, system: ReducedSystem, period: f64) -> Self {
        let lags = system.delay_fractions().iter().map(|f| f * period).collect();
        Self { params, system, lags }
    }
}

impl DdeSystem for ReducedNetwork {
    fn dim(&self) -> usize {
        2 * self.system.oscillators()
    }

    fn lags(&self) -> &[f64] {
        &self.lags
    }

    fn rhs(&self, _t: f64, y: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
        let m = self.system.oscillators();
        let lv: Vec<&[f64]> = lagged.iter().map(|l| &l[m..]).collect();
        out[..m].copy_from_slice(&y[m..]);
        let (x, v) = y.split_at(m);
        self.system.accel(&self.params, x, v, &lv, &mut out[m..]);
    }
}

/// Step size `min(T/240, τ/8)`; the delay bound is skipped when `τ = 0`.
/// With `τ = t₀T` and `t₀ ∈ {1/2, 1/3, 1/4, 1/6}` the lag is a whole number
/// of steps, which keeps the global error at clean fourth order.
pub fn default_step(period: f64, tau: f64) -> f64 {
    let h = period / 240.0;
    if tau > 0.0 {
        h.min(tau / 8.0)
    } else {
        h
    }
}

/// Upward zero crossings of component `coord` at times `≥ t_from`, located
/// by bisection on the Hermite interpolant.
pub fn upward_crossings(traj: &Trajectory, coord: usize, t_from: f64) -> Vec<f64> {
    let ts = traj.times();
    let mut out = Vec::new();
    for i in 0..traj.len().saturating_sub(1) {
        if ts[i] < t_from {
            continue;
        }
        let (y0, y1) = (traj.knot(i)[coord], traj.knot(i + 1)[coord]);
        if y0 < 0.0 && y1 >= 0.0 {
            let (mut lo, mut hi) = (ts[i], ts[i + 1]);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if traj.component(mid, coord) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

/// Number of trailing crossings averaged by [`detect_period`].
const PERIOD_CROSSINGS: usize = 21;

/// Mean spacing of the last upward zero crossings of `coord` after the
/// first `cutoff` fraction of the run.
pub fn detect_period(traj: &Trajectory, coord: usize, cutoff: f64) -> Result<f64> {
    let t_from = traj.start().max(0.0) + cutoff * (traj.end() - traj.start().max(0.0));
    let cr = upward_crossings(traj, coord, t_from);
    if cr.len() < 3 {
        return Err(Error::Inconclusive(format!("{} upward crossings of coordinate {}", cr.len(), coord + 1)));
    }
    let tail = &cr[cr.len().saturating_sub(PERIOD_CROSSINGS)..];
    Ok((tail[tail.len() - 1] - tail[0]) / (tail.len() - 1) as f64)
}

/// Coordinate among the first `n` with the largest amplitude after the cutoff.
pub fn dominant_coord(traj: &Trajectory, n: usize, cutoff: f64) -> usize {
    let t_from = traj.start().max(0.0) + cutoff * (traj.end() - traj.start().max(0.0));
    (0..n)
        .map(|k| (k, traj.max_abs(k, t_from, traj.end())))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{control_matrix, reduced_system, ControlLaw};
    use crate::symgroup::named_group;
    use std::f64::consts::PI;

    #[test]
    fn cosine_period() {
        let tr = Trajectory::from_fn(1, 0.0, 60.0, 6001, |t, y, dy| {
            y[0] = t.cos();
            dy[0] = -t.sin();
        });
        let t = detect_period(&tr, 0, 0.0).unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-8, "{t}");
    }

    #[test]
    fn too_few_crossings() {
        let tr = Trajectory::from_fn(1, 0.0, 5.0, 501, |t, y, dy| {
            y[0] = t.cos();
            dy[0] = -t.sin();
        });
        assert!(matches!(detect_period(&tr, 0, 0.0), Err(Error::Inconclusive(_))));
    }

    /// Single Van der Pol at α = 0.04: amplitude close to 2√α and period
    /// close to 2π.
    #[test]
    fn weakly_nonlinear_van_der_pol() {
        let p = Params::new(0.04, 0.0, 0.0);
        let sys = ReducedNetwork::new(p, reduced_system("+S4").unwrap(), 2.0 * PI);
        let init = |_t: f64, y: &mut [f64], dy: &mut [f64]| {
            y.copy_from_slice(&[0.1, 0.0]);
            dy.fill(0.0);
        };
        let tr = integrate(&sys, &init, 1200.0, 2.0 * PI / 200.0).unwrap();
        let amp = tr.max_abs(0, 1100.0, 1200.0);
        assert!((amp - 0.4).abs() < 0.01, "{amp}");
        let t = detect_period(&tr, 0, 0.8).unwrap();
        assert!((t - 2.0 * PI).abs() < 5e-3, "{t}");
    }

    #[test]
    fn oddness_of_the_flow() {
        let h = named_group("-Z3t").unwrap();
        let spec = control_matrix(ControlLaw::LevelSetAverage, &h).unwrap();
        let sys = ControlledNetwork::new(Params::new(0.6, 0.5, 0.8), spec, 2.0 * PI);
        let f = |s: f64| {
            move |t: f64, y: &mut [f64], dy: &mut [f64]| {
                for j in 0..2 * N {
                    y[j] = s * 0.1 * ((j + 1) as f64 * 0.3 + t).sin();
                    dy[j] = s * 0.1 * ((j + 1) as f64 * 0.3 + t).cos();
                }
            }
        };
        let a = integrate(&sys, &f(1.0), 30.0, default_step(2.0 * PI, sys.delay())).unwrap();
        let b = integrate(&sys, &f(-1.0), 30.0, default_step(2.0 * PI, sys.delay())).unwrap();
        for i in 0..a.len() {
            for (u, v) in a.knot(i).iter().zip(b.knot(i)) {
                assert!((u + v).abs() <= 1e-14 * u.abs().max(1.0));
            }
        }
    }
}
