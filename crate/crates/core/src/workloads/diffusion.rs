//! Steady diffusion with the anisotropic tensor
//! `D(x) = alpha (|x|² I - x xᵀ) + I` and the manufactured solution
//! `c = sin(2πx) sin(2πy) sin(2πz)` on the unit cube.

use std::f64::consts::PI;

pub type Mat3 = [[f64; 3]; 3];

pub fn diffusivity_tensor(x: [f64; 3], alpha: f64) -> Mat3 {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let mut d = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            d[i][j] = alpha * (r2 * delta - x[i] * x[j]) + delta;
        }
    }
    d
}

pub fn exact_solution(x: [f64; 3]) -> f64 {
    (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin() * (2.0 * PI * x[2]).sin()
}

/// Exact solution `c(x)` and forcing `f(x) = -div(D ∇c)`.
///
/// With `div` of the columns of `D` equal to `-2 alpha x`, the forcing
/// expands to `2 alpha x·∇c - (1 + alpha |x|²) Δc + alpha xᵀ H x`, where `H`
/// is the Hessian of `c`.
pub fn manufactured_solution(x: [f64; 3], alpha: f64) -> (f64, f64) {
    let k = 2.0 * PI;
    let s = x.map(|t| (k * t).sin());
    let co = x.map(|t| (k * t).cos());
    let c = s[0] * s[1] * s[2];

    let grad = [k * co[0] * s[1] * s[2], k * s[0] * co[1] * s[2], k * s[0] * s[1] * co[2]];
    let k2 = k * k;
    let hess = [
        [-k2 * c, k2 * co[0] * co[1] * s[2], k2 * co[0] * s[1] * co[2]],
        [k2 * co[0] * co[1] * s[2], -k2 * c, k2 * s[0] * co[1] * co[2]],
        [k2 * co[0] * s[1] * co[2], k2 * s[0] * co[1] * co[2], -k2 * c],
    ];
    let laplacian = -3.0 * k2 * c;

    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let x_dot_grad = x[0] * grad[0] + x[1] * grad[1] + x[2] * grad[2];
    let mut xhx = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            xhx += x[i] * hess[i][j] * x[j];
        }
    }
    let f = 2.0 * alpha * x_dot_grad - (1.0 + alpha * r2) * laplacian + alpha * xhx;
    (c, f)
}
