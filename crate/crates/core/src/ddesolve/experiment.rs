use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{detect_period, dominant_coord, integrate, ControlledNetwork, Trajectory};
use crate::error::{Error, Result};
use crate::model::{control_matrix, ControlLaw, ControlSpec, Params};
use crate::spectral::{isotypical_basis, CHANNEL_RANGES};
use crate::symgroup::{branch, symmetry_residual, SymGroup, Vec8, N};

/// Settings of the delay-tuning loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneSettings {
    /// Initial guess of the period.
    pub period_guess: f64,
    /// Length of the first run, in periods.
    pub first_periods: f64,
    /// Length of each continuation run, in periods.
    pub next_periods: f64,
    /// Stop when successive delays differ by less than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of each run discarded as transient.
    pub cutoff: f64,
    /// Keep divisible by the delay denominators so lags fall on knots.
    pub steps_per_period: f64,
}

impl Default for TuneSettings {
    fn default() -> Self {
        Self {
            period_guess: 2.0 * PI,
            first_periods: 300.0,
            next_periods: 120.0,
            tol: 1e-6,
            max_iter: 20,
            cutoff: 0.6,
            steps_per_period: 240.0,
        }
    }
}

/// Result of [`tune_delay`].
#[derive(Debug, Clone)]
pub struct Tuned {
    pub tau: f64,
    pub period: f64,
    pub iterations: usize,
    pub trajectory: Trajectory,
}

fn step_for(settings: &TuneSettings, period: f64, tau: f64) -> f64 {
    let h = period / settings.steps_per_period;
    if tau > 0.0 {
        h.min(tau / 8.0)
    } else {
        h
    }
}

fn history_from(prev: &Trajectory) -> impl Fn(f64, &mut [f64], &mut [f64]) + '_ {
    let end = prev.end();
    move |t, y, dy| {
        prev.eval_into(end + t, y);
        prev.deriv_into(end + t, dy);
    }
}

/// Fixed-point iteration `τ_{n+1} = t₀ T(τ_n)` starting from
/// `τ₀ = t₀ · period_guess`. Each run after the first continues from the
/// tail of the previous one. Without gain or delay the delay does not
/// matter and one run is made.
pub fn tune_delay(
    spec: &ControlSpec,
    p: &Params,
    init: &dyn Fn(f64, &mut [f64], &mut [f64]),
    settings: &TuneSettings,
) -> Result<Tuned> {
    let t0 = spec.delay_fraction.to_f64();
    let mut period = settings.period_guess;
    let mut tau = t0 * period;
    let mut prev: Option<Trajectory> = None;
    for iter in 1..=settings.max_iter {
        let sys = ControlledNetwork::new(*p, spec.clone(), period);
        let h = step_for(settings, period, sys.delay());
        let periods = if prev.is_some() { settings.next_periods } else { settings.first_periods };
        let traj = match &prev {
            None => integrate(&sys, init, periods * period, h)?,
            Some(pr) => integrate(&sys, &history_from(pr), periods * period, h)?,
        };
        let coord = dominant_coord(&traj, N, settings.cutoff);
        let measured = detect_period(&traj, coord, settings.cutoff)?;
        if t0 == 0.0 || p.b == 0.0 {
            let mut traj = traj;
            traj.period = Some(measured);
            return Ok(Tuned {
                tau,
                period: measured,
                iterations: iter,
                trajectory: traj,
            });
        }
        let next = t0 * measured;
        let done = (next - tau).abs() < settings.tol;
        tau = next;
        period = measured;
        let mut traj = traj;
        traj.period = Some(measured);
        if done {
            return Ok(Tuned {
                tau,
                period,
                iterations: iter,
                trajectory: traj,
            });
        }
        prev = Some(traj);
    }
    Err(Error::NotContracting(settings.max_iter))
}

/// `max_t ‖avg · ẋ(t − τ) − ẋ(t)‖∞` over `[t_from, end]`, sampled at knots.
/// This is the control term without the gain `b`.
pub fn control_residual(traj: &Trajectory, spec: &ControlSpec, tau: f64, t_from: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut buf = vec![0.0; traj.dim()];
    for i in 0..traj.len() {
        let t = traj.times()[i];
        if t < t_from || t - tau < traj.start() {
            continue;
        }
        let v = Vec8::from_column_slice(&traj.knot(i)[N..]);
        traj.eval_into(t - tau, &mut buf);
        let vd = Vec8::from_column_slice(&buf[N..]);
        worst = worst.max((spec.avg_matrix * vd - v).amax());
    }
    worst
}

/// A complex vector `w` in the isotypical channel `channel` with
/// `e^{−2πiθ} r𝒯_h w = w` for every element, so that `Re(w e^{it})` has the
/// spatio-temporal symmetry of `h` with period `2π`. Random within the fixed
/// space, scaled to unit max-norm. `None` if the fixed space is trivial.
pub fn symmetric_seed(h: &SymGroup, channel: usize, rng: &mut impl Rng) -> Option<[Complex64; N]> {
    let iso = isotypical_basis();
    let cols: Vec<usize> = CHANNEL_RANGES[channel].clone().collect();
    let m = cols.len();
    let qe = DMatrix::<Complex64>::from_fn(N, m, |i, j| Complex64::new(iso.q[(i, cols[j])], 0.0));
    let mut stacked = DMatrix::<Complex64>::zeros(N * h.len() + m, m);
    for (s, g) in h.elements().iter().enumerate() {
        let w = Complex64::from_polar(1.0, -2.0 * PI * g.phase.to_f64());
        let mg = g.matrix();
        let op = DMatrix::<Complex64>::from_fn(N, N, |i, j| {
            let e = Complex64::new(mg[(i, j)], 0.0) * w;
            if i == j {
                e - 1.0
            } else {
                e
            }
        });
        stacked.view_mut((N * s, 0), (N, m)).copy_from(&(op * &qe));
    }
    let svd = stacked.svd(false, true);
    let vt = svd.v_t?;
    let top = svd.singular_values.iter().copied().fold(0.0f64, f64::max).max(1.0);
    let mut w = DMatrix::<Complex64>::zeros(N, 1);
    let mut any = false;
    for (r, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-9 * top {
            any = true;
            let coef = Complex64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
            let null: DMatrix<Complex64> = vt.rows(r, 1).adjoint();
            w += &qe * null * coef;
        }
    }
    if !any {
        return None;
    }
    let scale = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Some(std::array::from_fn(|j| w[j] / scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    StabilizedTarget,
    ConvergedOther,
    Unbounded,
    Inconclusive,
}

/// Thresholds of a stabilization experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSettings {
    pub tune: TuneSettings,
    /// Size of the symmetric part of the initial history; `None` picks
    /// `√(α − α₀)`, at least `0.05`.
    pub seed_amplitude: Option<f64>,
    /// Relative size of the generic transverse perturbation.
    pub transverse: f64,
    /// Relative tolerance for the symmetry and control residuals.
    pub residual_tol: f64,
    /// Relative spread allowed in the per-period amplitude.
    pub stationary_tol: f64,
    pub stationary_periods: usize,
    /// Share of the energy that must sit in the target channel.
    pub min_channel_fraction: f64,
    pub residual_samples: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            tune: TuneSettings::default(),
            seed_amplitude: None,
            transverse: 0.1,
            residual_tol: 1e-3,
            stationary_tol: 0.01,
            stationary_periods: 10,
            min_channel_fraction: 0.5,
            residual_samples: 200,
        }
    }
}

/// Outcome of one experiment with its full parameter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentVerdict {
    pub group: String,
    pub law: ControlLaw,
    pub params: Params,
    pub seed: u64,
    pub outcome: Outcome,
    pub symmetry_residual: f64,
    pub control_residual: f64,
    pub period: f64,
    pub tau: f64,
    pub amplitude: f64,
    /// Spread of the per-period amplitude over the last periods.
    pub amplitude_drift: f64,
    /// Energy share of the target isotypical channel.
    pub channel_fraction: f64,
    pub iterations: usize,
    pub note: Option<String>,
}

impl ExperimentVerdict {
    fn failed(group: &str, law: ControlLaw, p: &Params, seed: u64, outcome: Outcome, note: String) -> Self {
        Self {
            group: group.to_string(),
            law,
            params: *p,
            seed,
            outcome,
            symmetry_residual: f64::NAN,
            control_residual: f64::NAN,
            period: f64::NAN,
            tau: f64::NAN,
            amplitude: f64::NAN,
            amplitude_drift: f64::NAN,
            channel_fraction: f64::NAN,
            iterations: 0,
            note: Some(note),
        }
    }

    /// One JSON line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}

/// Channel of the Hopf point of `h`: the branch table if `h` labels a branch,
/// otherwise the first channel carrying a symmetric seed.
fn target_channel(h: &SymGroup) -> Option<usize> {
    if let Some(b) = h.name.as_deref().and_then(|n| branch(n).ok()) {
        return Some(b.hopf_index);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..4).find(|&k| symmetric_seed(h, k, &mut rng).is_some())
}

/// Simulates the controlled network from a history near the target branch
/// and classifies the long-time behaviour.
///
/// The history is `x(t) = ε Re((w + u) e^{it})` with `w` a symmetric seed
/// in the Hopf channel and `u` a random complex vector, `‖u‖ = transverse·‖w‖`.
pub fn stabilization_experiment(
    h: &SymGroup,
    law: ControlLaw,
    p: &Params,
    seed: u64,
    settings: &ExperimentSettings,
) -> ExperimentVerdict {
    stabilization_run(h, law, p, seed, settings).0
}

/// [`stabilization_experiment`] that also hands back the last tuned
/// trajectory, when the run got that far.
pub fn stabilization_run(
    h: &SymGroup,
    law: ControlLaw,
    p: &Params,
    seed: u64,
    settings: &ExperimentSettings,
) -> (ExperimentVerdict, Option<Trajectory>) {
    let label = h.name.clone().unwrap_or_else(|| "?".into());
    let fail = |o: Outcome, note: String| (ExperimentVerdict::failed(&label, law, p, seed, o, note), None);
    let spec = match control_matrix(law, h) {
        Ok(s) => s,
        Err(e) => return fail(Outcome::Inconclusive, e.to_string()),
    };
    let Some(channel) = target_channel(h) else {
        return fail(Outcome::Inconclusive, "no symmetric seed in any channel".into());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(w) = symmetric_seed(h, channel, &mut rng) else {
        return fail(Outcome::Inconclusive, format!("no symmetric seed in channel {}", channel + 1));
    };
    let mut u: [Complex64; N] = std::array::from_fn(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let (wn, un) = (w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    for z in &mut u {
        *z *= settings.transverse * wn / un;
    }
    let alpha0 = channel as f64 * p.a;
    let eps = settings.seed_amplitude.unwrap_or_else(|| (p.alpha - alpha0).max(0.0).sqrt().max(0.05));
    let init = move |t: f64, y: &mut [f64], dy: &mut [f64]| {
        let e = Complex64::from_polar(eps, t);
        for j in 0..N {
            let z = (w[j] + u[j]) * e;
            let iz = z * Complex64::i();
            y[j] = z.re;
            y[N + j] = iz.re;
            dy[j] = iz.re;
            dy[N + j] = -z.re;
        }
    };
    let tuned = match tune_delay(&spec, p, &init, &settings.tune) {
        Ok(t) => t,
        Err(Error::Unbounded(t)) => return fail(Outcome::Unbounded, format!("unbounded at t = {t:.3}")),
        Err(e) => return fail(Outcome::Inconclusive, e.to_string()),
    };
    let verdict = classify(h, &label, law, p, seed, &spec, channel, &tuned, settings);
    (verdict, Some(tuned.trajectory))
}

#[allow(clippy::too_many_arguments)]
fn classify(
    h: &SymGroup,
    label: &str,
    law: ControlLaw,
    p: &Params,
    seed: u64,
    spec: &ControlSpec,
    channel: usize,
    tuned: &Tuned,
    settings: &ExperimentSettings,
) -> ExperimentVerdict {
    let traj = &tuned.trajectory;
    let period = tuned.period;
    let t_from = traj.start().max(0.0) + settings.tune.cutoff * (traj.end() - traj.start().max(0.0));
    let amplitude = (0..N).map(|k| traj.max_abs(k, t_from, traj.end())).fold(0.0, f64::max);
    let sym = symmetry_residual(traj, h.elements(), period, settings.residual_samples).unwrap_or(f64::INFINITY);
    let ctrl = control_residual(traj, spec, spec.delay(period), t_from);

    // per-period amplitude over the last periods
    let mut amps = Vec::new();
    for k in 0..settings.stationary_periods {
        let hi = traj.end() - k as f64 * period;
        let lo = hi - period;
        if lo < t_from {
            break;
        }
        amps.push((0..N).map(|j| traj.max_abs(j, lo, hi)).fold(0.0, f64::max));
    }
    let amax = amps.iter().copied().fold(0.0, f64::max);
    let amin = amps.iter().copied().fold(f64::INFINITY, f64::min);
    let drift = if amax > 0.0 { (amax - amin) / amax } else { 0.0 };

    let iso = isotypical_basis();
    let (mut e_target, mut e_total) = (0.0, 0.0);
    for i in 0..traj.len() {
        if traj.times()[i] < t_from {
            continue;
        }
        let x = Vec8::from_column_slice(&traj.knot(i)[..N]);
        let y = iso.q.transpose() * x;
        e_total += y.norm_squared();
        e_target += CHANNEL_RANGES[channel].clone().map(|r| y[r] * y[r]).sum::<f64>();
    }
    let fraction = if e_total > 0.0 { e_target / e_total } else { 0.0 };

    let stationary = amps.len() == settings.stationary_periods && drift < settings.stationary_tol;
    let outcome = if amplitude < 1e-6 {
        Outcome::ConvergedOther
    } else if stationary
        && sym < settings.residual_tol * amplitude
        && ctrl < settings.residual_tol * amplitude
        && fraction > settings.min_channel_fraction
    {
        Outcome::StabilizedTarget
    } else if stationary {
        Outcome::ConvergedOther
    } else {
        Outcome::Inconclusive
    };
    ExperimentVerdict {
        group: label.to_string(),
        law,
        params: *p,
        seed,
        outcome,
        symmetry_residual: sym,
        control_residual: ctrl,
        period,
        tau: spec.delay(period),
        amplitude,
        amplitude_drift: drift,
        channel_fraction: fraction,
        iterations: tuned.iterations,
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symgroup::named_group;

    #[test]
    fn seed_has_the_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (label, k) in [("-Z4c", 1), ("+Z3t", 2), ("-Z3t", 1), ("+D3", 2), ("-D2d", 1)] {
            let h = named_group(label).unwrap();
            let w = symmetric_seed(&h, k, &mut rng).unwrap();
            for g in h.elements() {
                let m = g.matrix();
                let rot = Complex64::from_polar(1.0, -2.0 * PI * g.phase.to_f64());
                for i in 0..N {
                    let gw: Complex64 = (0..N).map(|j| w[j] * m[(i, j)]).sum::<Complex64>() * rot;
                    assert!((gw - w[i]).norm() < 1e-10, "{label} {g}");
                }
            }
        }
    }

    #[test]
    fn no_seed_in_wrong_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // the +S4 branch lives in the constant channel only
        let h = named_group("+S4").unwrap();
        assert!(symmetric_seed(&h, 0, &mut rng).is_some());
        assert!(symmetric_seed(&h, 2, &mut rng).is_none());
    }

    #[test]
    fn uncontrolled_tuning_is_one_run() {
        let h = named_group("-Z4c").unwrap();
        let spec = control_matrix(ControlLaw::LevelSetAverage, &h).unwrap();
        let p = Params::new(0.05, 0.0, 0.0);
        let init = |_t: f64, y: &mut [f64], dy: &mut [f64]| {
            y.fill(0.1);
            dy.fill(0.0);
        };
        let settings = TuneSettings {
            first_periods: 40.0,
            ..TuneSettings::default()
        };
        let t = tune_delay(&spec, &p, &init, &settings).unwrap();
        assert_eq!(t.iterations, 1);
        assert!((t.tau - 0.25 * 2.0 * PI).abs() < 1e-15);
    }
}
