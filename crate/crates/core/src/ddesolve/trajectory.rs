use crate::symgroup::{DenseOutput, Vec8, N};

/// Knots `(t, y, y′)` with cubic Hermite interpolation between them. Serves
/// both as the history buffer during integration and as dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
    /// Period detected on this trajectory, if any.
    pub period: Option<f64>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            times: Vec::new(),
            y: Vec::new(),
            dy: Vec::new(),
            period: None,
        }
    }

    pub fn with_capacity(dim: usize, knots: usize) -> Self {
        Self {
            dim,
            times: Vec::with_capacity(knots),
            y: Vec::with_capacity(knots * dim),
            dy: Vec::with_capacity(knots * dim),
            period: None,
        }
    }

    /// Builds a trajectory from sampled values and derivatives of a known
    /// function.
    pub fn from_fn(dim: usize, t0: f64, t1: f64, knots: usize, f: impl Fn(f64, &mut [f64], &mut [f64])) -> Self {
        let mut tr = Self::with_capacity(dim, knots);
        let (mut y, mut dy) = (vec![0.0; dim], vec![0.0; dim]);
        for k in 0..knots {
            let t = t0 + (t1 - t0) * k as f64 / (knots - 1) as f64;
            f(t, &mut y, &mut dy);
            tr.push(t, &y, &dy);
        }
        tr
    }

    /// Appends a knot. Times must increase strictly.
    pub fn push(&mut self, t: f64, y: &[f64], dy: &[f64]) {
        debug_assert!(self.times.last().is_none_or(|&l| t > l));
        self.times.push(t);
        self.y.extend_from_slice(y);
        self.dy.extend_from_slice(dy);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn knot(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn knot_deriv(&self, i: usize) -> &[f64] {
        &self.dy[i * self.dim..(i + 1) * self.dim]
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    fn segment(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.clamp(1, self.times.len() - 1) - 1
    }

    /// Interpolated state at `t` (clamped to the knot range).
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let n = self.times.len();
        if n == 1 {
            out.copy_from_slice(self.knot(0));
            return;
        }
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = (s3 - 2.0 * s2 + s) * h;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = (s3 - s2) * h;
        let (y0, y1) = (self.knot(i), self.knot(i + 1));
        let (d0, d1) = (self.knot_deriv(i), self.knot_deriv(i + 1));
        for k in 0..self.dim {
            out[k] = h00 * y0[k] + h10 * d0[k] + h01 * y1[k] + h11 * d1[k];
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    /// One component at `t`.
    pub fn component(&self, t: f64, k: usize) -> f64 {
        let i = self.segment(t);
        if self.times.len() == 1 {
            return self.knot(0)[k];
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.knot(i)[k]
            + (s3 - 2.0 * s2 + s) * h * self.knot_deriv(i)[k]
            + (-2.0 * s3 + 3.0 * s2) * self.knot(i + 1)[k]
            + (s3 - s2) * h * self.knot_deriv(i + 1)[k]
    }

    /// Time derivative of the interpolant at `t`.
    pub fn deriv_into(&self, t: f64, out: &mut [f64]) {
        if self.times.len() == 1 {
            out.copy_from_slice(self.knot_deriv(0));
            return;
        }
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let g00 = (6.0 * s2 - 6.0 * s) / h;
        let g10 = 3.0 * s2 - 4.0 * s + 1.0;
        let g01 = (-6.0 * s2 + 6.0 * s) / h;
        let g11 = 3.0 * s2 - 2.0 * s;
        let (y0, y1) = (self.knot(i), self.knot(i + 1));
        let (d0, d1) = (self.knot_deriv(i), self.knot_deriv(i + 1));
        for k in 0..self.dim {
            out[k] = g00 * y0[k] + g10 * d0[k] + g01 * y1[k] + g11 * d1[k];
        }
    }

    /// Keeps only knots with `t ≥ t_from` (plus the one before it, so that
    /// `t_from` stays interpolable).
    pub fn trim_before(&mut self, t_from: f64) {
        let i = self.segment(t_from);
        if i == 0 {
            return;
        }
        self.times.drain(..i);
        self.y.drain(..i * self.dim);
        self.dy.drain(..i * self.dim);
    }

    /// CSV with header `t,x1..x8,v1..v8` for the full network, `t,y1..yn`
    /// otherwise. Writes every `stride`-th knot.
    pub fn to_csv(&self, stride: usize) -> String {
        let mut out = String::from("t");
        if self.dim == 2 * N {
            for j in 1..=N {
                out.push_str(&format!(",x{j}"));
            }
            for j in 1..=N {
                out.push_str(&format!(",v{j}"));
            }
        } else {
            for j in 1..=self.dim {
                out.push_str(&format!(",y{j}"));
            }
        }
        out.push('\n');
        for i in (0..self.len()).step_by(stride.max(1)) {
            out.push_str(&format!("{:.16e}", self.times[i]));
            for v in self.knot(i) {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Max over `[t0, t1]` of `|y_k|`, sampled at knots.
    pub fn max_abs(&self, k: usize, t0: f64, t1: f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.times[i] >= t0 && self.times[i] <= t1)
            .map(|i| self.knot(i)[k].abs())
            .fold(0.0, f64::max)
    }
}

impl DenseOutput for Trajectory {
    fn t_start(&self) -> f64 {
        self.start()
    }

    fn t_end(&self) -> f64 {
        self.end()
    }

    fn position(&self, t: f64) -> Vec8 {
        let mut buf = [0.0; 2 * N];
        self.eval_into(t, &mut buf[..self.dim]);
        Vec8::from_fn(|j, _| buf[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_is_fourth_order() {
        let err = |knots: usize| {
            let tr = Trajectory::from_fn(1, 0.0, 3.0, knots, |t, y, dy| {
                y[0] = t.sin();
                dy[0] = t.cos();
            });
            (0..997).map(|k| 3.0 * k as f64 / 997.0).map(|t| (tr.component(t, 0) - t.sin()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(31) / err(61);
        assert!((ratio - 16.0).abs() < 2.0, "{ratio}");
    }

    #[test]
    fn knots_reproduced_and_trim() {
        let mut tr = Trajectory::from_fn(2, 0.0, 1.0, 11, |t, y, dy| {
            y[0] = t;
            y[1] = t * t;
            dy[0] = 1.0;
            dy[1] = 2.0 * t;
        });
        let y = tr.eval(0.3);
        assert!((y[0] - 0.3).abs() < 1e-15 && (y[1] - 0.09).abs() < 1e-15);
        assert!((tr.component(0.35, 1) - 0.1225).abs() < 1e-15);
        tr.trim_before(0.55);
        assert_eq!(tr.start(), 0.5);
        assert!(tr.to_csv(1).starts_with("t,y1,y2\n5.0000000000000000e-1,"));
    }
}
