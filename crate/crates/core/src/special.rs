//! Small special-function helpers.

use core::f64::consts::PI;

/// Volume of the unit ball in `k` dimensions, `pi^{k/2} / Gamma(k/2 + 1)`.
/// `k = 0` gives 1 (a point). Uses `V_k = 2 pi / k * V_{k-2}` so that
/// `V_1 = 2` and `V_2 = pi` are exact.
pub fn unit_ball_volume(k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// Surface measure of the unit sphere `S^{k-1}` in `R^k`, `2 pi^{k/2} / Gamma(k/2)`.
pub fn unit_sphere_area(k: u32) -> f64 {
    assert!(k >= 1, "sphere area needs k >= 1");
    let half = 0.5 * k as f64;
    2.0 * libm::pow(PI, half) / libm::tgamma(half)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
