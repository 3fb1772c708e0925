//! Adiabatic transport: the current `I = dH/dtheta` in a slowly driven
//! ground state equals `dE/dtheta - K dPhi/dt` to first order in the drive
//! rate, with `K = 2 Im <d_Phi psi | d_theta psi>` and time evolution
//! `i d psi/dt = H psi`. Reversing the direction of time flips the sign of the
//! curvature term.
//!
//! The Schrodinger equation is integrated with a fourth-order Magnus
//! propagator, which is unitary by construction; the state is never
//! renormalised so that its norm drift measures integration error.

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hofstadter::eigensystem;

/// A two-parameter Hermitian family `H(Phi, theta)`.
pub trait ParameterFamily: Sync {
    fn hamiltonian(&self, phi: f64, theta: f64) -> Mat<c64>;

    fn d_phi(&self, phi: f64, theta: f64) -> Mat<c64> {
        central_difference(|x| self.hamiltonian(x, theta), phi)
    }

    fn d_theta(&self, phi: f64, theta: f64) -> Mat<c64> {
        central_difference(|x| self.hamiltonian(phi, x), theta)
    }
}

fn central_difference<F: Fn(f64) -> Mat<c64>>(f: F, x: f64) -> Mat<c64> {
    let h = 1e-5;
    (f(x + h) - f(x - h)) * faer::Scale(c64::new(0.5 / h, 0.0))
}

/// `H = sigma . B(Phi, theta)` with `Phi` polar and `theta` azimuthal.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpinFamily;

fn spin_matrix(n: [f64; 3]) -> Mat<c64> {
    let mut h = Mat::zeros(2, 2);
    h[(0, 0)] = c64::new(n[2], 0.0);
    h[(1, 1)] = c64::new(-n[2], 0.0);
    h[(0, 1)] = c64::new(n[0], -n[1]);
    h[(1, 0)] = c64::new(n[0], n[1]);
    h
}

impl ParameterFamily for SpinFamily {
    fn hamiltonian(&self, phi: f64, theta: f64) -> Mat<c64> {
        spin_matrix([phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()])
    }

    fn d_phi(&self, phi: f64, theta: f64) -> Mat<c64> {
        spin_matrix([phi.cos() * theta.cos(), phi.cos() * theta.sin(), -phi.sin()])
    }

    fn d_theta(&self, phi: f64, theta: f64) -> Mat<c64> {
        spin_matrix([-phi.sin() * theta.sin(), phi.sin() * theta.cos(), 0.0])
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResponseOptions {
    /// Local error tolerance per step.
    pub tolerance: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_step: 0.1,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResponseReport {
    pub rate: f64,
    pub theta_0: f64,
    pub cycle_fraction: f64,
    pub duration: f64,
    /// Time integral of `<psi| dH/dtheta |psi>`.
    pub measured: f64,
    /// Time integral of `dE/dtheta - K rate`.
    pub predicted: f64,
    pub absolute_error: f64,
    /// `|measured - predicted| / |predicted|`, or the absolute error when the
    /// prediction vanishes.
    pub relative_error: f64,
    pub max_norm_drift: f64,
    pub min_gap: f64,
    pub steps: usize,
}

/// Ground-state quantities at one parameter point.
struct Instant {
    gap: f64,
    d_theta_energy: f64,
    curvature: f64,
}

fn instant<F: ParameterFamily + ?Sized>(family: &F, phi: f64, theta: f64) -> Result<Instant> {
    let (e, v) = eigensystem(&family.hamiltonian(phi, theta))?;
    if e.len() < 2 {
        return Err(Error::InvalidArgument(
            "family must have dimension at least 2".into(),
        ));
    }
    let dp = v.adjoint() * family.d_phi(phi, theta) * &v;
    let dt = v.adjoint() * family.d_theta(phi, theta) * &v;
    let mut curvature = 0.0;
    for m in 1..e.len() {
        curvature += 2.0 * (dp[(0, m)] * dt[(m, 0)]).im / (e[m] - e[0]).powi(2);
    }
    Ok(Instant {
        gap: e[1] - e[0],
        d_theta_energy: dt[(0, 0)].re,
        curvature,
    })
}

fn expectation(op: &Mat<c64>, psi: &Mat<c64>) -> f64 {
    (psi.adjoint() * op * psi)[(0, 0)].re
}

fn norm(psi: &Mat<c64>) -> f64 {
    psi.norm_l2()
}

/// Fourth-order Magnus step for `i psi' = H(t) psi`.
fn magnus_step<H: Fn(f64) -> Mat<c64>>(
    h_of_t: &H,
    t: f64,
    dt: f64,
    psi: &Mat<c64>,
) -> Result<Mat<c64>> {
    let s = 3f64.sqrt() / 6.0;
    let h1 = h_of_t(t + (0.5 - s) * dt);
    let h2 = h_of_t(t + (0.5 + s) * dt);
    let comm = &h2 * &h1 - &h1 * &h2;
    // exponent -i M with M Hermitian
    let m = (&h1 + &h2) * faer::Scale(c64::new(dt / 2.0, 0.0))
        - comm * faer::Scale(c64::new(0.0, 3f64.sqrt() * dt * dt / 12.0));
    let (lambda, v) = eigensystem(&m)?;
    let mut coeffs = v.adjoint() * psi;
    for (i, l) in lambda.iter().enumerate() {
        coeffs[(i, 0)] *= c64::from_polar(1.0, -l);
    }
    Ok(v * coeffs)
}

pub fn adiabatic_response_check<F: ParameterFamily + ?Sized>(
    family: &F,
    theta_0: f64,
    rate: f64,
    cycle_fraction: f64,
) -> Result<ResponseReport> {
    adiabatic_response_with(
        family,
        theta_0,
        rate,
        cycle_fraction,
        ResponseOptions::default(),
    )
}

pub fn adiabatic_response_with<F: ParameterFamily + ?Sized>(
    family: &F,
    theta_0: f64,
    rate: f64,
    cycle_fraction: f64,
    options: ResponseOptions,
) -> Result<ResponseReport> {
    if !(rate >= 0.0 && rate.is_finite()) || !(cycle_fraction > 0.0 && cycle_fraction.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} and cycle fraction {cycle_fraction} must be finite, rate >= 0, fraction > 0"
        )));
    }
    if rate == 0.0 {
        return static_response(family, theta_0);
    }
    let duration = std::f64::consts::TAU * cycle_fraction / rate;
    let h_of_t = |t: f64| family.hamiltonian(rate * t, theta_0);

    let start = family.hamiltonian(0.0, theta_0);
    let (_, v0) = eigensystem(&start)?;
    let mut psi = v0.as_ref().subcols(0, 1).to_owned();

    let mut min_gap = f64::INFINITY;
    let mut sample = |t: f64, psi: &Mat<c64>| -> Result<(f64, f64)> {
        let phi = rate * t;
        let inst = instant(family, phi, theta_0)?;
        min_gap = min_gap.min(inst.gap);
        if inst.gap < 10.0 * rate {
            return Err(Error::GapClosure { phi, gap: inst.gap });
        }
        let measured = expectation(&family.d_theta(phi, theta_0), psi);
        Ok((measured, inst.d_theta_energy - inst.curvature * rate))
    };

    let mut t = 0.0;
    let mut dt = options.max_step.min(duration);
    let (mut f_prev, mut g_prev) = sample(0.0, &psi)?;
    let (mut measured, mut predicted) = (0.0, 0.0);
    let mut max_norm_drift: f64 = 0.0;
    let mut steps = 0;
    while t < duration {
        if steps >= options.max_steps {
            return Err(Error::IntegratorFailure(format!(
                "step budget {} exhausted at t = {t}",
                options.max_steps
            )));
        }
        let last = t + dt >= duration;
        if last {
            dt = duration - t;
        }
        let big = magnus_step(&h_of_t, t, dt, &psi)?;
        let half = magnus_step(&h_of_t, t, dt / 2.0, &psi)?;
        let small = magnus_step(&h_of_t, t + dt / 2.0, dt / 2.0, &half)?;
        let err = (&small - &big).norm_l2() / 15.0;
        if !err.is_finite() {
            return Err(Error::IntegratorFailure(format!(
                "non-finite error at t = {t}"
            )));
        }
        if err > options.tolerance {
            dt *= (0.9 * (options.tolerance / err).powf(0.2)).max(0.2);
            if dt < 1e-12 * duration.max(1.0) {
                return Err(Error::IntegratorFailure(format!(
                    "step size underflow at t = {t}"
                )));
            }
            continue;
        }
        let (f_mid, g_mid) = sample(t + dt / 2.0, &half)?;
        let (f_end, g_end) = sample(t + dt, &small)?;
        measured += dt / 6.0 * (f_prev + 4.0 * f_mid + f_end);
        predicted += dt / 6.0 * (g_prev + 4.0 * g_mid + g_end);
        (f_prev, g_prev) = (f_end, g_end);
        psi = small;
        max_norm_drift = max_norm_drift.max((norm(&psi) - 1.0).abs());
        steps += 1;
        if last {
            break;
        }
        t += dt;
        let grow = if err > 0.0 {
            (0.9 * (options.tolerance / err).powf(0.2)).clamp(0.2, 2.0)
        } else {
            2.0
        };
        dt = (dt * grow).min(options.max_step);
    }
    Ok(report(
        rate,
        theta_0,
        cycle_fraction,
        duration,
        measured,
        predicted,
        max_norm_drift,
        min_gap,
        steps,
    ))
}

/// Zero drive: the instantaneous current against a finite-difference
/// `dE/dtheta`.
fn static_response<F: ParameterFamily + ?Sized>(
    family: &F,
    theta_0: f64,
) -> Result<ResponseReport> {
    let ground =
        |theta: f64| -> Result<f64> { Ok(eigensystem(&family.hamiltonian(0.0, theta))?.0[0]) };
    let (e, v) = eigensystem(&family.hamiltonian(0.0, theta_0))?;
    let psi = v.as_ref().subcols(0, 1).to_owned();
    let measured = expectation(&family.d_theta(0.0, theta_0), &psi);
    let h = 1e-4;
    let predicted = (ground(theta_0 + h)? - ground(theta_0 - h)?) / (2.0 * h);
    let min_gap = if e.len() > 1 {
        e[1] - e[0]
    } else {
        f64::INFINITY
    };
    Ok(report(
        0.0, theta_0, 0.0, 0.0, measured, predicted, 0.0, min_gap, 0,
    ))
}

#[allow(clippy::too_many_arguments)]
fn report(
    rate: f64,
    theta_0: f64,
    cycle_fraction: f64,
    duration: f64,
    measured: f64,
    predicted: f64,
    max_norm_drift: f64,
    min_gap: f64,
    steps: usize,
) -> ResponseReport {
    let absolute_error = (measured - predicted).abs();
    let relative_error = if predicted.abs() > 1e-12 {
        absolute_error / predicted.abs()
    } else {
        absolute_error
    };
    ResponseReport {
        rate,
        theta_0,
        cycle_fraction,
        duration,
        measured,
        predicted,
        absolute_error,
        relative_error,
        max_norm_drift,
        min_gap,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Spin in a tilted field whose energy depends on theta at Phi = 0.
    struct Tilted;

    impl ParameterFamily for Tilted {
        fn hamiltonian(&self, phi: f64, theta: f64) -> Mat<c64> {
            let b = [
                0.4 * theta.cos() + phi.sin(),
                0.3 * theta.sin(),
                1.0 + 0.2 * theta.sin(),
            ];
            spin_matrix(b)
        }
    }

    /// Depends on Phi only.
    struct ThetaFree;

    impl ParameterFamily for ThetaFree {
        fn hamiltonian(&self, phi: f64, _theta: f64) -> Mat<c64> {
            spin_matrix([phi.sin(), 0.0, phi.cos()])
        }
    }

    #[test]
    fn spin_curvature_closed_form() {
        for phi in [0.2, 0.7, 1.3, 2.5] {
            let inst = instant(&SpinFamily, phi, 0.4).unwrap();
            assert!((inst.curvature + 0.5 * f64::sin(phi)).abs() < 1e-12);
            assert!(inst.d_theta_energy.abs() < 1e-12);
            assert!((inst.gap - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let (p, t) = (0.9, 2.1);
        let fd_p = central_difference(|x| SpinFamily.hamiltonian(x, t), p);
        let fd_t = central_difference(|x| SpinFamily.hamiltonian(p, x), t);
        assert!((fd_p - SpinFamily.d_phi(p, t)).norm_max() < 1e-9);
        assert!((fd_t - SpinFamily.d_theta(p, t)).norm_max() < 1e-9);
    }

    #[test]
    fn quarter_cycle_spin() {
        let r = adiabatic_response_check(&SpinFamily, 0.3, 1e-3, 0.25).unwrap();
        assert!((r.predicted - 0.5).abs() < 1e-6, "{r:?}");
        assert!(r.relative_error <= 5e-2, "{r:?}");
        assert!(r.max_norm_drift < 1e-8);
    }

    #[test]
    fn static_limit_is_feynman_hellmann() {
        let r = adiabatic_response_check(&Tilted, 0.8, 0.0, 0.25).unwrap();
        assert!(r.measured.abs() > 1e-2);
        assert!(r.absolute_error < 1e-7, "{r:?}");
    }

    #[test]
    fn theta_independent_family_transports_nothing() {
        let r = adiabatic_response_check(&ThetaFree, 0.5, 1e-2, 0.25).unwrap();
        assert_eq!(r.measured, 0.0);
        assert_eq!(r.predicted, 0.0);
    }

    #[test]
    fn gap_closure_detected() {
        struct Closing;
        impl ParameterFamily for Closing {
            fn hamiltonian(&self, phi: f64, theta: f64) -> Mat<c64> {
                spin_matrix([0.0, 0.01 * theta.cos(), phi.cos()])
            }
        }
        let err = adiabatic_response_check(&Closing, 0.0, 1e-2, 0.3);
        assert!(matches!(err, Err(Error::GapClosure { .. })), "{err:?}");
    }

    #[test]
    fn rejects_bad_rate() {
        assert!(adiabatic_response_check(&SpinFamily, 0.0, -1.0, 0.25).is_err());
        assert!(adiabatic_response_check(&SpinFamily, 0.0, f64::NAN, 0.25).is_err());
    }
}
