use crate::field::{Scalar, C64};

/// `max(1 - gamma / x, 0)`, with 0 at `x = 0`.
pub fn shrink_weight(x: f64, gamma: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (1.0 - gamma / x).max(0.0)
    }
}

pub fn shrink_weights(x: &[f64], gamma: f64) -> Vec<f64> {
    x.iter().map(|&v| shrink_weight(v, gamma)).collect()
}

/// Isotropic shrinkage of the gradient pair with per-direction thresholds,
/// using the joint magnitude `sqrt(|z_x|^2 + |z_z|^2)`.
pub fn joint_shrink<T: Scalar>(zx: &[T], zz: &[T], thr_x: f64, thr_z: f64) -> (Vec<T>, Vec<T>) {
    zx.iter()
        .zip(zz)
        .map(|(&x, &z)| {
            let mag = (x.abs2() + z.abs2()).sqrt();
            (x * shrink_weight(mag, thr_x), z * shrink_weight(mag, thr_z))
        })
        .unzip()
}

/// Prox update of the isotropic complex TV (threshold `1 / gamma`).
pub fn joint_prox_update(zx: &[C64], zz: &[C64], gamma_x: f64, gamma_z: f64) -> (Vec<C64>, Vec<C64>) {
    joint_shrink(zx, zz, 1.0 / gamma_x, 1.0 / gamma_z)
}

/// Prox update with real parts thresholded at `tau / gamma` and imaginary parts
/// at `(1 - tau) / gamma`, each with its own joint magnitude.
pub fn separate_ri_prox_update(
    zx: &[C64],
    zz: &[C64],
    gamma_x: f64,
    gamma_z: f64,
    tau: f64,
) -> (Vec<C64>, Vec<C64>) {
    let re = |v: &[C64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
    let im = |v: &[C64]| v.iter().map(|z| z.im).collect::<Vec<_>>();
    let (rx, rz) = joint_shrink(&re(zx), &re(zz), tau / gamma_x, tau / gamma_z);
    let (ix, iz) = joint_shrink(&im(zx), &im(zz), (1.0 - tau) / gamma_x, (1.0 - tau) / gamma_z);
    let join = |r: Vec<f64>, i: Vec<f64>| r.into_iter().zip(i).map(|(a, b)| C64::new(a, b)).collect();
    (join(rx, ix), join(rz, iz))
}
