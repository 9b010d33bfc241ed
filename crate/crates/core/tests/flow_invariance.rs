use std::f64::consts::PI;

use equistab::ddesolve::{default_step, integrate, ControlledNetwork};
use equistab::model::{control_matrix, ControlLaw, Params};
use equistab::symgroup::{fixed_subspace, kernel, named_group, Vec8, N};

/// A history inside the fixed subspace of the kernel stays there under the
/// controlled flow, up to roundoff.
#[test]
fn kernel_fixed_space_is_flow_invariant() {
    for (label, p) in [
        ("-Z3t", Params::new(0.6, 0.5, 0.8)),
        ("-Z4c", Params::new(0.55, 0.5, 1.0)),
        ("+Z3t", Params::new(1.1, 0.5, 0.7)),
    ] {
        let h = named_group(label).unwrap();
        let k = kernel(&h);
        let basis = fixed_subspace(k.elements());
        let spec = control_matrix(ControlLaw::LevelSetAverage, &h).unwrap();
        let sys = ControlledNetwork::new(p, spec, 2.0 * PI);
        let b2 = basis.clone();
        let init = move |t: f64, y: &mut [f64], dy: &mut [f64]| {
            let (mut x, mut v, mut acc) = (Vec8::zeros(), Vec8::zeros(), Vec8::zeros());
            for (i, e) in b2.iter().enumerate() {
                let w = 1.0 + 0.3 * i as f64;
                let c = 0.2 / (1.0 + i as f64);
                x += e * c * (w * t + i as f64).sin();
                v += e * c * w * (w * t + i as f64).cos();
                acc -= e * c * w * w * (w * t + i as f64).sin();
            }
            y[..N].copy_from_slice(x.as_slice());
            y[N..].copy_from_slice(v.as_slice());
            dy[..N].copy_from_slice(v.as_slice());
            dy[N..].copy_from_slice(acc.as_slice());
        };
        let tr = integrate(&sys, &init, 60.0, default_step(2.0 * PI, sys.delay())).unwrap();
        let mut worst = 0.0f64;
        for i in 0..tr.len() {
            let x = Vec8::from_column_slice(&tr.knot(i)[..N]);
            for g in k.elements() {
                worst = worst.max((g.act(&x) - x).amax());
            }
        }
        assert!(worst <= 1e-12, "{label}: {worst:e}");
    }
}
