use std::f64::consts::PI;

use equistab::model::{control_matrix, ControlLaw, Params};
use equistab::spectral::{char_system_eq2, full_char_det};
use equistab::symgroup::named_group;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn table_rows_match() {
    let h = (PI / 3.0).sin();
    let eta = c(0.5, h);
    let (z, i, m) = (c(0.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0));
    let table = [
        ("-Z4c", [z, i, i.conj(), z, z, z, z, z], 0.25),
        ("-Z3t", [z, m, eta, eta.conj(), z, z, z, m], 1.0 / 6.0),
        ("+Z4c", [z, z, z, z, i, i.conj(), z, z], 0.25),
        ("+Z3t", [m, z, z, z, m, eta, eta.conj(), z], 1.0 / 6.0),
    ];
    let p = Params::new(0.8, 0.4, 1.3);
    for (label, nus, t0) in table {
        let cs = char_system_eq2(&p, &named_group(label).unwrap(), 2.0 * PI).unwrap();
        assert!((cs.delay_fraction - t0).abs() < 1e-15, "{label}");
        for (k, (row, want)) in cs.rows.iter().zip(nus).enumerate() {
            assert!((row.nu - want).norm() < 1e-12, "{label} row {}: {} vs {}", k + 1, row.nu, want);
        }
    }
}

#[test]
fn determinant_factorizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for label in ["-Z4c", "-Z3t", "+Z4c", "+Z3t"] {
        let h = named_group(label).unwrap();
        let spec = control_matrix(ControlLaw::LevelSetAverage, &h).unwrap();
        for _ in 0..20 {
            let p = Params::new(rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..3.0));
            let period = rng.gen_range(1.0..10.0);
            let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0));
            let cs = char_system_eq2(&p, &h, period).unwrap();
            let det = full_char_det(&p, &spec, period, z);
            let prod = cs.eval(z);
            assert!((det - prod).norm() / det.norm() <= 1e-10, "{label}: {det} vs {prod}");
        }
    }
}
