use super::Trajectory;
use crate::error::{Error, Result};

/// A delay differential equation `y′(t) = f(t, y(t), y(t − τ₁), …)`.
pub trait DdeSystem {
    fn dim(&self) -> usize;
    /// Discrete lags; a zero lag means the current state.
    fn lags(&self) -> &[f64];
    /// `lagged[j]` holds `y(t − lags()[j])`.
    fn rhs(&self, t: f64, y: &[f64], lagged: &[&[f64]], out: &mut [f64]);
}

/// State norm above which a run is declared unbounded.
pub const OVERFLOW_GUARD: f64 = 1e6;

/// Classical RK4 for a DDE by the method of steps. The history on
/// `[−max lag, 0]` is sampled from `init(t, y, y′)` onto the step grid and
/// every delayed value, initial or computed, is read from the cubic Hermite
/// interpolant of the knots. Needs `h ≤ τ` for every nonzero lag so that no
/// lookup runs ahead of the computed solution.
pub fn integrate<S: DdeSystem + ?Sized>(
    sys: &S,
    init: &dyn Fn(f64, &mut [f64], &mut [f64]),
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStep(format!("h = {h}")));
    }
    let lags = sys.lags();
    if let Some(tau) = lags.iter().find(|&&t| t > 0.0 && t < h) {
        return Err(Error::InvalidStep(format!("h = {h} exceeds lag {tau}")));
    }
    let n = sys.dim();
    let max_lag = lags.iter().copied().fold(0.0, f64::max);
    let back = (max_lag / h).ceil() as usize + 1;
    let steps = (t_end / h).round() as usize;
    let mut tr = Trajectory::with_capacity(n, back + steps + 1);
    let (mut y, mut dy) = (vec![0.0; n], vec![0.0; n]);
    for k in (1..=back).rev() {
        init(-(k as f64) * h, &mut y, &mut dy);
        tr.push(-(k as f64) * h, &y, &dy);
    }
    init(0.0, &mut y, &mut dy);

    let mut lag_buf = vec![vec![0.0; n]; lags.len()];
    let eval = |tr: &Trajectory, t: f64, state: &[f64], lag_buf: &mut Vec<Vec<f64>>, out: &mut [f64]| {
        for (j, &tau) in lags.iter().enumerate() {
            if tau == 0.0 {
                lag_buf[j].copy_from_slice(state);
            } else {
                tr.eval_into(t - tau, &mut lag_buf[j]);
            }
        }
        let refs: Vec<&[f64]> = lag_buf.iter().map(|v| v.as_slice()).collect();
        sys.rhs(t, state, &refs, out);
    };

    // the first knot at t = 0 uses the true right-hand side as its slope
    let mut k1 = vec![0.0; n];
    // lookups at t − τ ≤ 0 only touch history knots before t = 0
    eval(&tr, 0.0, &y, &mut lag_buf, &mut k1);
    tr.push(0.0, &y, &k1);

    let (mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for step in 0..steps {
        let t = step as f64 * h;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        eval(&tr, t + 0.5 * h, &tmp, &mut lag_buf, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        eval(&tr, t + 0.5 * h, &tmp, &mut lag_buf, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        eval(&tr, t + h, &tmp, &mut lag_buf, &mut k4);
        let mut norm = 0.0f64;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            norm = norm.max(y[i].abs());
        }
        let t1 = (step + 1) as f64 * h;
        if !(norm < OVERFLOW_GUARD) {
            return Err(Error::Unbounded(t1));
        }
        eval(&tr, t1, &y, &mut lag_buf, &mut k1);
        tr.push(t1, &y, &k1);
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    struct Delayed;

    impl DdeSystem for Delayed {
        fn dim(&self) -> usize {
            1
        }
        fn lags(&self) -> &[f64] {
            &[PI / 2.0]
        }
        fn rhs(&self, _t: f64, _y: &[f64], lagged: &[&[f64]], out: &mut [f64]) {
            out[0] = -lagged[0][0];
        }
    }

    fn sine(t: f64, y: &mut [f64], dy: &mut [f64]) {
        y[0] = t.sin();
        dy[0] = t.cos();
    }

    fn error(h: f64) -> f64 {
        let tr = integrate(&Delayed, &sine, 20.0, h).unwrap();
        (0..tr.len())
            .filter(|&i| tr.times()[i] >= 0.0)
            .map(|i| (tr.knot(i)[0] - tr.times()[i].sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sine_is_reproduced() {
        assert!(error(0.01) < 1e-8);
    }

    #[test]
    fn fourth_order() {
        let lag = PI / 2.0;
        let ratio = error(lag / 8.0) / error(lag / 16.0);
        assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
    }

    #[test]
    fn zero_history_stays_zero() {
        let tr = integrate(&Delayed, &|_t: f64, y: &mut [f64], dy: &mut [f64]| {
            y[0] = 0.0;
            dy[0] = 0.0;
        }, 5.0, 0.1)
        .unwrap();
        assert!((0..tr.len()).all(|i| tr.knot(i)[0] == 0.0));
    }

    #[test]
    fn step_longer_than_lag_rejected() {
        assert!(matches!(integrate(&Delayed, &sine, 1.0, 2.0), Err(Error::InvalidStep(_))));
        assert!(matches!(integrate(&Delayed, &sine, 1.0, -0.1), Err(Error::InvalidStep(_))));
    }
}
