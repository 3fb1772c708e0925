//! Spin one-half in a magnetic field of fixed magnitude, `H = sigma . B`.
//!
//! The parameter space is the sphere of field directions, coordinates
//! `(theta, phi)` = (polar, azimuthal). The degeneracy at `B = 0` acts as a
//! monopole of Berry curvature: on the sphere with outward orientation the
//! ground band has Chern number `-1` and the excited band `+1`.

use std::f64::consts::{PI, TAU};

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::Serialize;

use super::StateFamily;
use crate::error::{Error, Result};
use crate::hofstadter::eigensystem;

/// Pivot magnitudes below this make a gauge choice meaningless.
const GAUGE_PIVOT_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MonopoleBand {
    Ground,
    Excited,
}

impl MonopoleBand {
    pub fn eigenvalue(self) -> f64 {
        match self {
            MonopoleBand::Ground => -1.0,
            MonopoleBand::Excited => 1.0,
        }
    }

    fn index(self) -> usize {
        match self {
            MonopoleBand::Ground => 0,
            MonopoleBand::Excited => 1,
        }
    }
}

/// Which pole a gauge is singular at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Gauge {
    /// Continuous everywhere except the north pole.
    North,
    /// Continuous everywhere except the south pole.
    South,
}

pub fn field_direction(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

pub fn hamiltonian(theta: f64, phi: f64) -> Mat<c64> {
    let [x, y, z] = field_direction(theta, phi);
    let mut h = Mat::zeros(2, 2);
    h[(0, 0)] = c64::new(z, 0.0);
    h[(1, 1)] = c64::new(-z, 0.0);
    h[(0, 1)] = c64::new(x, -y);
    h[(1, 0)] = c64::new(x, y);
    h
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MonopoleState {
    pub theta: f64,
    pub phi: f64,
    pub band: MonopoleBand,
    pub eigenvalue: f64,
    #[serde(skip)]
    pub spinor: [c64; 2],
}

impl MonopoleState {
    /// Eigenstate of `sigma . B(theta, phi)` in the phase returned by the
    /// eigensolver.
    pub fn new(theta: f64, phi: f64, band: MonopoleBand) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite field direction ({theta}, {phi})"
            )));
        }
        let h = hamiltonian(theta, phi);
        let (values, vectors) = eigensystem(&h)?;
        let k = band.index();
        let state = Self {
            theta,
            phi,
            band,
            eigenvalue: values[k],
            spinor: [vectors[(0, k)], vectors[(1, k)]],
        };
        let norm = state.norm();
        let residual = state.residual();
        if (norm - 1.0).abs() > 1e-12 || residual > 1e-10 {
            return Err(Error::EigensolveFailure(format!(
                "spinor norm {norm}, residual {residual:.3e}"
            )));
        }
        Ok(state)
    }

    pub fn norm(&self) -> f64 {
        (self.spinor[0].norm_sqr() + self.spinor[1].norm_sqr()).sqrt()
    }

    /// `|(sigma . B - lambda) chi|`.
    pub fn residual(&self) -> f64 {
        let h = hamiltonian(self.theta, self.phi);
        let [a, b] = self.spinor;
        let r0 = h[(0, 0)] * a + h[(0, 1)] * b - a * self.eigenvalue;
        let r1 = h[(1, 0)] * a + h[(1, 1)] * b - b * self.eigenvalue;
        (r0.norm_sqr() + r1.norm_sqr()).sqrt()
    }

    /// The same state in the requested gauge: the spinor component that
    /// vanishes at the gauge's singular pole is made real and positive.
    pub fn in_gauge(&self, gauge: Gauge) -> Result<[c64; 2]> {
        let pole = match gauge {
            Gauge::North => 0.0,
            Gauge::South => PI,
        };
        let at_pole = MonopoleState::new(pole, 0.0, self.band)?;
        let pivot = if at_pole.spinor[0].norm() < at_pole.spinor[1].norm() {
            0
        } else {
            1
        };
        let c = self.spinor[pivot];
        if c.norm() < GAUGE_PIVOT_MIN {
            return Err(Error::GaugeUndefined { theta: self.theta });
        }
        let phase = c.conj() / c.norm();
        Ok([self.spinor[0] * phase, self.spinor[1] * phase])
    }

    /// `gamma` in `chi_n = e^{i gamma} chi_s`, in `(-pi, pi]`.
    pub fn transition_phase(&self) -> Result<f64> {
        let n = self.in_gauge(Gauge::North)?;
        let s = self.in_gauge(Gauge::South)?;
        Ok((s[0].conj() * n[0] + s[1].conj() * n[1]).arg())
    }
}

/// One monopole band as a state family over `(theta, phi)`.
#[derive(Debug, Clone, Copy)]
pub struct MonopoleFamily {
    pub band: MonopoleBand,
}

impl StateFamily for MonopoleFamily {
    fn states(&self, point: [f64; 2]) -> Result<Mat<c64>> {
        let s = MonopoleState::new(point[0], point[1], self.band)?;
        Ok(Mat::from_fn(2, 1, |i, _| s.spinor[i]))
    }
}

/// Winding number of the transition phase between the north- and
/// south-singular gauges of the ground state, around the circle of constant
/// `latitude` (eastward).
pub fn transition_phase_winding(latitude: f64, steps: usize) -> Result<i64> {
    band_transition_winding(latitude, steps, MonopoleBand::Ground)
}

pub fn band_transition_winding(latitude: f64, steps: usize, band: MonopoleBand) -> Result<i64> {
    if steps < 3 {
        return Err(Error::InvalidArgument(
            "winding needs at least 3 steps".into(),
        ));
    }
    let theta = PI / 2.0 - latitude;
    let gamma = |j: usize| {
        MonopoleState::new(theta, TAU * j as f64 / steps as f64, band)?.transition_phase()
    };
    let first = gamma(0)?;
    let mut prev = first;
    let mut total = 0.0;
    for j in 1..=steps {
        let g = if j == steps { first } else { gamma(j)? };
        total += wrap(g - prev);
        prev = g;
    }
    Ok((total / TAU).round() as i64)
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::berry::{chern_number, curvature_field, ClosedMesh};

    /// Closed-form north-singular ground spinor.
    fn ground_north(theta: f64, phi: f64) -> [c64; 2] {
        [
            c64::new((theta / 2.0).sin(), 0.0),
            -c64::from_polar(1.0, phi) * (theta / 2.0).cos(),
        ]
    }

    /// Solid angle of the geodesic triangle `a b c`.
    fn triangle_solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
        let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let cross = [
            b[1] * c[2] - b[2] * c[1],
            b[2] * c[0] - b[0] * c[2],
            b[0] * c[1] - b[1] * c[0],
        ];
        let num = dot(a, cross);
        let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
        2.0 * num.atan2(den)
    }

    #[test]
    fn spinors_normalized_and_exact() {
        for i in 0..=12 {
            for j in 0..12 {
                let (t, p) = (PI * i as f64 / 12.0, TAU * j as f64 / 12.0);
                for band in [MonopoleBand::Ground, MonopoleBand::Excited] {
                    let s = MonopoleState::new(t, p, band).unwrap();
                    assert!((s.norm() - 1.0).abs() < 1e-12);
                    assert!(s.residual() < 1e-10);
                    assert!((s.eigenvalue - band.eigenvalue()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn north_gauge_matches_closed_form() {
        let s = MonopoleState::new(1.1, 2.3, MonopoleBand::Ground).unwrap();
        let got = s.in_gauge(Gauge::North).unwrap();
        let want = ground_north(1.1, 2.3);
        for k in 0..2 {
            assert!((got[k] - want[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn gauges_fail_at_their_pole() {
        let n = MonopoleState::new(0.0, 0.0, MonopoleBand::Ground).unwrap();
        assert!(matches!(
            n.in_gauge(Gauge::North),
            Err(Error::GaugeUndefined { .. })
        ));
        assert!(n.in_gauge(Gauge::South).is_ok());
        let s = MonopoleState::new(PI, 0.0, MonopoleBand::Excited).unwrap();
        assert!(matches!(
            s.in_gauge(Gauge::South),
            Err(Error::GaugeUndefined { .. })
        ));
        assert!(matches!(
            transition_phase_winding(PI / 2.0, 16),
            Err(Error::GaugeUndefined { .. })
        ));
    }

    #[test]
    fn winding_numbers() {
        assert_eq!(transition_phase_winding(0.0, 64).unwrap(), 1);
        assert_eq!(
            band_transition_winding(0.0, 64, MonopoleBand::Excited).unwrap(),
            -1
        );
        for deg in [-80.0f64, -45.0, -10.0, 20.0, 60.0, 85.0] {
            assert_eq!(transition_phase_winding(deg.to_radians(), 64).unwrap(), 1);
        }
    }

    #[test]
    fn ground_band_chern_is_minus_one() {
        let mesh = ClosedMesh::sphere(24, 48);
        let ground = chern_number(
            &MonopoleFamily {
                band: MonopoleBand::Ground,
            },
            &mesh,
        )
        .unwrap();
        let excited = chern_number(
            &MonopoleFamily {
                band: MonopoleBand::Excited,
            },
            &mesh,
        )
        .unwrap();
        assert_eq!(ground.value, -1);
        assert_eq!(excited.value, 1);
        let fine = chern_number(
            &MonopoleFamily {
                band: MonopoleBand::Ground,
            },
            &ClosedMesh::sphere(48, 96),
        )
        .unwrap();
        assert_eq!(fine.value, -1);
    }

    #[test]
    fn curvature_is_half_the_solid_angle() {
        let mesh = ClosedMesh::sphere(12, 24);
        let field = curvature_field(
            &MonopoleFamily {
                band: MonopoleBand::Ground,
            },
            &mesh,
        )
        .unwrap();
        for (face, value) in mesh.faces.iter().zip(&field.values) {
            let p: Vec<[f64; 3]> = face
                .iter()
                .map(|&v| field_direction(mesh.vertices[v][0], mesh.vertices[v][1]))
                .collect();
            let mut omega = 0.0;
            for k in 1..p.len() - 1 {
                omega += triangle_solid_angle(p[0], p[k], p[k + 1]);
            }
            assert!((value + omega / 2.0).abs() < 1e-12, "{value} vs {omega}");
        }
    }
}
