use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{detect_period, integrate, ReducedNetwork, Trajectory, TuneSettings};
use crate::error::{Error, Result};
use crate::model::{reduced_system, Params, ReducedSystem};
use crate::par;
use crate::symgroup::branch;

/// One grid point of [`amplitude_slope_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopePoint {
    /// `α − α₀`.
    pub offset: f64,
    /// First-harmonic amplitude of the measured coordinate.
    pub amplitude: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    /// Least-squares slope of `r²` against `α − α₀`.
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<SlopePoint>,
    /// Grid points without a converged orbit, with the reason.
    pub dropped: Vec<(f64, String)>,
}

/// First-harmonic amplitude of component `k` over the last `periods` whole
/// periods, by the trapezoid rule on knots spaced `T/steps`.
fn first_harmonic(traj: &Trajectory, k: usize, period: f64, periods: usize, steps: usize) -> f64 {
    let n = periods * steps;
    let last = traj.len() - 1;
    let first = last.saturating_sub(n);
    let t_end = traj.times()[last];
    let mut acc = Complex64::new(0.0, 0.0);
    // periodic integrand: the trapezoid rule reduces to a plain sum
    for i in first..last {
        let t = traj.times()[i] - t_end;
        acc += Complex64::from_polar(traj.knot(i)[k], -2.0 * PI * t / period);
    }
    2.0 * acc.norm() / (last - first) as f64
}

fn run_point(system: ReducedSystem, alpha0: f64, a: f64, offset: f64, coord: usize, settings: &TuneSettings) -> Result<SlopePoint> {
    let p = Params::new(alpha0 + offset, a, 0.0);
    let eps = 2.0 * offset.sqrt();
    let m = system.oscillators();
    let init = move |t: f64, y: &mut [f64], dy: &mut [f64]| {
        y.fill(0.0);
        dy.fill(0.0);
        y[coord] = eps * t.cos();
        y[m + coord] = -eps * t.sin();
        dy[coord] = -eps * t.sin();
        dy[m + coord] = -eps * t.cos();
    };
    let mut period = settings.period_guess;
    let mut prev: Option<Trajectory> = None;
    let steps = settings.steps_per_period.round() as usize;
    for _ in 0..settings.max_iter {
        let sys = ReducedNetwork::new(p, system, period);
        let h = period / steps as f64;
        let periods = if prev.is_some() { settings.next_periods } else { settings.first_periods };
        let traj = match &prev {
            None => integrate(&sys, &init, periods * period, h)?,
            Some(pr) => {
                let end = pr.end();
                let hist = move |t: f64, y: &mut [f64], dy: &mut [f64]| {
                    pr.eval_into(end + t, y);
                    pr.deriv_into(end + t, dy);
                };
                integrate(&sys, &hist, periods * period, h)?
            }
        };
        let measured = detect_period(&traj, coord, settings.cutoff)?;
        let converged = system.delay_fractions().is_empty() || (measured - period).abs() < settings.tol;
        if converged {
            let amplitude = first_harmonic(&traj, coord, period, 20, steps);
            return Ok(SlopePoint {
                offset,
                amplitude,
                period: measured,
            });
        }
        period = measured;
        prev = Some(traj);
    }
    Err(Error::NotContracting(settings.max_iter))
}

/// Fits `r² = slope · (α − α₀) + intercept` over the offsets, where `r` is
/// the first-harmonic amplitude of the steady orbit of the branch's reduced
/// system (coordinate `x₂` for the delayed pairs, `x₁` otherwise) and the
/// period is tuned until the lags `T/3`, `2T/3` match the orbit.
pub fn amplitude_slope_fit(label: &str, a: f64, offsets: &[f64], settings: &TuneSettings) -> Result<SlopeFit> {
    let br = branch(label)?;
    let system = reduced_system(label)?;
    let coord = if system.delay_fractions().is_empty() { 0 } else { 1 };
    let alpha0 = br.hopf_index as f64 * a;
    if offsets.len() < 3 || offsets.iter().any(|&o| !(o > 0.0)) {
        return Err(Error::TooFewPoints(offsets.iter().filter(|&&o| o > 0.0).count()));
    }
    let results = par::map(offsets, |&o| (o, run_point(system, alpha0, a, o, coord, settings)));
    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (o, r) in results {
        match r {
            Ok(pt) => points.push(pt),
            Err(e) => dropped.push((o, e.to_string())),
        }
    }
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.offset).sum::<f64>() / n;
    let my = points.iter().map(|p| p.amplitude * p.amplitude).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.offset - mx) * (p.amplitude * p.amplitude - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.offset - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        points,
        dropped,
    })
}
