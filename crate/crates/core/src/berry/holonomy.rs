//! Parallel transport of tangent vectors on the unit sphere.
//!
//! A tangent vector `v` carried along a curve `p(t)` without rotation obeys
//! `dv/dt = -(v . p') p`. Going once around a closed loop rotates it by the
//! enclosed curvature, here the enclosed area.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn axpy(a: f64, x: Vec3, y: Vec3) -> Vec3 {
    [a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2]]
}

fn sphere_point(theta: f64, phi: f64) -> Vec3 {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Transport `v` along `curve` (returning position and velocity) from `t0`
/// to `t1` with `steps` classical Runge-Kutta steps.
pub fn transport<C>(curve: C, t0: f64, t1: f64, steps: usize, v: Vec3) -> Vec3
where
    C: Fn(f64) -> (Vec3, Vec3),
{
    let h = (t1 - t0) / steps as f64;
    let rhs = |t: f64, v: Vec3| {
        let (p, dp) = curve(t);
        let c = -dot(v, dp);
        [c * p[0], c * p[1], c * p[2]]
    };
    let mut v = v;
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = rhs(t, v);
        let k2 = rhs(t + h / 2.0, axpy(h / 2.0, k1, v));
        let k3 = rhs(t + h / 2.0, axpy(h / 2.0, k2, v));
        let k4 = rhs(t + h, axpy(h, k3, v));
        for i in 0..3 {
            v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    v
}

/// Signed rotation angle from `v0` to `v1` about the outward normal at `p`.
fn rotation_angle(p: Vec3, v0: Vec3, v1: Vec3) -> f64 {
    dot(cross(v0, v1), p).atan2(dot(v0, v1))
}

/// Transport along the arc of constant polar angle from `phi0` to `phi1`.
fn along_parallel(theta: f64, phi0: f64, phi1: f64, steps: usize, v: Vec3) -> Vec3 {
    transport(
        |phi| {
            let (s, c) = (theta.sin(), theta.cos());
            (
                [s * phi.cos(), s * phi.sin(), c],
                [-s * phi.sin(), s * phi.cos(), 0.0],
            )
        },
        phi0,
        phi1,
        steps,
        v,
    )
}

/// Transport along the meridian at `phi` from polar angle `theta0` to `theta1`.
fn along_meridian(phi: f64, theta0: f64, theta1: f64, steps: usize, v: Vec3) -> Vec3 {
    transport(
        |theta| {
            let (s, c) = (theta.sin(), theta.cos());
            (
                [s * phi.cos(), s * phi.sin(), c],
                [c * phi.cos(), c * phi.sin(), -s],
            )
        },
        theta0,
        theta1,
        steps,
        v,
    )
}

/// Holonomy angle in `[0, 2pi)` after transporting a tangent vector eastward
/// once around the circle of constant `latitude`. Equals `-2 pi sin(latitude)`
/// modulo `2 pi`; zero at the poles, where the loop degenerates to a point.
pub fn latitude_holonomy(latitude: f64, steps: usize) -> Result<f64> {
    if steps < 100 {
        return Err(Error::InvalidArgument(format!(
            "holonomy needs at least 100 steps, got {steps}"
        )));
    }
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&latitude) {
        return Err(Error::InvalidArgument(format!(
            "latitude {latitude} off the sphere"
        )));
    }
    if FRAC_PI_2 - latitude.abs() < 1e-12 {
        return Ok(0.0);
    }
    let theta = FRAC_PI_2 - latitude;
    let p0 = sphere_point(theta, 0.0);
    let v0 = [0.0, 1.0, 0.0];
    let v1 = along_parallel(theta, 0.0, TAU, steps, v0);
    let angle = rotation_angle(p0, v0, v1).rem_euclid(TAU);
    Ok(if angle >= TAU { 0.0 } else { angle })
}

/// Total curvature of the cap north of `latitude`, summed from the holonomies
/// of `n_rings x n_sectors` small cells that tile it, each going once around
/// its boundary with `steps_per_edge` transport steps per edge.
pub fn cap_curvature_integral(
    latitude: f64,
    n_rings: usize,
    n_sectors: usize,
    steps_per_edge: usize,
) -> Result<f64> {
    if !(-FRAC_PI_2..FRAC_PI_2).contains(&latitude) {
        return Err(Error::InvalidArgument(format!(
            "latitude {latitude} outside (-pi/2, pi/2)"
        )));
    }
    if n_rings == 0 || n_sectors < 3 || steps_per_edge == 0 {
        return Err(Error::InvalidArgument("cap tiling too coarse".into()));
    }
    let theta_cap = FRAC_PI_2 - latitude;
    let mut total = 0.0;
    for i in 0..n_rings {
        let (t0, t1) = (
            theta_cap * i as f64 / n_rings as f64,
            theta_cap * (i + 1) as f64 / n_rings as f64,
        );
        for j in 0..n_sectors {
            let (f0, f1) = (
                TAU * j as f64 / n_sectors as f64,
                TAU * (j + 1) as f64 / n_sectors as f64,
            );
            // (t0, f0) -> (t1, f0) -> (t1, f1) -> (t0, f1) -> back
            let start = sphere_point(t0, f0);
            let v0 = if i == 0 {
                [1.0, 0.0, 0.0]
            } else {
                [-f0.sin(), f0.cos(), 0.0]
            };
            let mut v = along_meridian(f0, t0, t1, steps_per_edge, v0);
            v = along_parallel(t1, f0, f1, steps_per_edge, v);
            v = along_meridian(f1, t1, t0, steps_per_edge, v);
            if i > 0 {
                v = along_parallel(t0, f1, f0, steps_per_edge, v);
            }
            total += rotation_angle(start, v0, v);
        }
    }
    Ok(total)
}

/// `-2 pi sin(latitude)` reduced to `[0, 2pi)`.
pub fn closed_form_holonomy(latitude: f64) -> f64 {
    (-TAU * latitude.sin()).rem_euclid(TAU)
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
