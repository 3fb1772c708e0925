//! Discrete Berry curvature and Chern numbers.
//!
//! The curvature of a family of `n` orthonormal states over a closed
//! two-parameter surface is computed with link variables: for every oriented
//! edge `a -> b` of a face the overlap matrix `S_ab = psi_a^dagger psi_b` is
//! formed, and the face phase is the principal argument of the product of the
//! link determinants around the face. Face phases are gauge invariant and sum
//! to `2 pi` times an integer on any closed mesh, whatever its resolution.
//!
//! Orientation: faces run `(i, j) -> (i+1, j) -> (i+1, j+1) -> (i, j+1)` in the
//! mesh parameters, i.e. right-handed in `(parameter 1, parameter 2)`.

use std::f64::consts::{PI, TAU};
use std::ops::Range;

use faer::Mat;
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hofstadter::{bloch_matrix, eigensystem, MomentumMesh, RationalFlux};

pub mod holonomy;
pub mod monopole;
pub mod response;

pub use holonomy::{cap_curvature_integral, latitude_holonomy};
pub use monopole::{transition_phase_winding, MonopoleBand, MonopoleFamily, MonopoleState};
pub use response::{adiabatic_response_check, ParameterFamily, ResponseReport, SpinFamily};

/// Link determinants with smaller modulus mean the projector jumps between
/// neighboring grid points.
pub const LINK_TOLERANCE: f64 = 1e-6;

/// Largest distance from an integer accepted before rounding a curvature sum.
pub const ROUND_TOLERANCE: f64 = 1e-3;

/// A closed, oriented surface mesh over two parameters.
#[derive(Debug, Clone)]
pub struct ClosedMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Each face lists its vertices in positive orientation.
    pub faces: Vec<Vec<usize>>,
    /// Faces are laid out row-major as `shape.0 x shape.1`.
    pub shape: (usize, usize),
}

impl ClosedMesh {
    /// Periodic `n1 x n2` grid on `[0, extent1) x [0, extent2)`.
    pub fn torus(n1: usize, n2: usize, extent1: f64, extent2: f64) -> Self {
        let vertices = (0..n1)
            .flat_map(|i| {
                (0..n2).map(move |j| {
                    [
                        extent1 * i as f64 / n1 as f64,
                        extent2 * j as f64 / n2 as f64,
                    ]
                })
            })
            .collect();
        let id = |i: usize, j: usize| (i % n1) * n2 + (j % n2);
        let faces = (0..n1)
            .flat_map(|i| {
                (0..n2).map(move |j| vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)])
            })
            .collect();
        Self {
            vertices,
            faces,
            shape: (n1, n2),
        }
    }

    /// Magnetic Brillouin zone `[0, 2pi/q) x [0, 2pi)` with vertex coordinates
    /// `(k1, k2)` on the same points as [`MomentumMesh`], oriented as
    /// `dk2 ^ dk1`. With this orientation the Chern number of the bands below
    /// gap `r` equals the Diophantine label `t` of that gap.
    pub fn brillouin_zone(flux: RationalFlux, mesh: MomentumMesh) -> Self {
        Self::torus(mesh.n1, mesh.n2, TAU / flux.q() as f64, TAU).reversed()
    }

    /// Unit sphere in (polar, azimuthal) coordinates: `n_theta` rings of faces
    /// and `n_phi` faces per ring. The first and last rings are triangles
    /// fanning out of the north and south poles.
    pub fn sphere(n_theta: usize, n_phi: usize) -> Self {
        assert!(n_theta >= 2 && n_phi >= 3, "sphere mesh too coarse");
        let mut vertices = vec![[0.0, 0.0]];
        for i in 1..n_theta {
            let theta = PI * i as f64 / n_theta as f64;
            for j in 0..n_phi {
                vertices.push([theta, TAU * j as f64 / n_phi as f64]);
            }
        }
        vertices.push([PI, 0.0]);
        let south = vertices.len() - 1;
        let ring = |i: usize, j: usize| 1 + (i - 1) * n_phi + (j % n_phi);
        let mut faces = Vec::with_capacity(n_theta * n_phi);
        for j in 0..n_phi {
            faces.push(vec![0, ring(1, j), ring(1, j + 1)]);
        }
        for i in 1..n_theta - 1 {
            for j in 0..n_phi {
                faces.push(vec![
                    ring(i, j),
                    ring(i + 1, j),
                    ring(i + 1, j + 1),
                    ring(i, j + 1),
                ]);
            }
        }
        for j in 0..n_phi {
            faces.push(vec![ring(n_theta - 1, j), south, ring(n_theta - 1, j + 1)]);
        }
        Self {
            vertices,
            faces,
            shape: (n_theta, n_phi),
        }
    }

    /// The same mesh with every face orientation flipped.
    pub fn reversed(mut self) -> Self {
        for f in &mut self.faces {
            f.reverse();
        }
        self
    }
}

/// A map from surface parameters to `n` orthonormal states (as columns).
pub trait StateFamily: Sync {
    fn states(&self, point: [f64; 2]) -> Result<Mat<c64>>;
}

/// Adapter turning a closure into a [`StateFamily`].
pub struct FnFamily<F>(pub F);

impl<F> StateFamily for FnFamily<F>
where
    F: Fn([f64; 2]) -> Result<Mat<c64>> + Sync,
{
    fn states(&self, point: [f64; 2]) -> Result<Mat<c64>> {
        (self.0)(point)
    }
}

/// Selected bands of the magnetic Bloch Hamiltonian, as a function of
/// `(k1, k2)`.
#[derive(Debug, Clone)]
pub struct BlochBands {
    pub flux: RationalFlux,
    pub bands: Range<usize>,
}

impl BlochBands {
    pub fn new(flux: RationalFlux, bands: Range<usize>) -> Result<Self> {
        let q = flux.q() as usize;
        if bands.is_empty() || bands.end > q {
            return Err(Error::InvalidArgument(format!(
                "band range {bands:?} outside 0..{q}"
            )));
        }
        Ok(Self { flux, bands })
    }

    /// The `r` lowest bands.
    pub fn filled(flux: RationalFlux, r: usize) -> Result<Self> {
        Self::new(flux, 0..r)
    }
}

impl StateFamily for BlochBands {
    fn states(&self, point: [f64; 2]) -> Result<Mat<c64>> {
        let (_, vectors) = eigensystem(&bloch_matrix(self.flux, point[0], point[1]))?;
        Ok(vectors
            .as_ref()
            .subcols(self.bands.start, self.bands.len())
            .to_owned())
    }
}

/// Per-face curvature phases in `(-pi, pi]`.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureField {
    pub shape: (usize, usize),
    pub values: Vec<f64>,
}

impl CurvatureField {
    /// Sum of all face phases, accumulated in face order.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.shape.1 + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernResult {
    pub value: i64,
    /// Sum of face phases over `2 pi`, before rounding.
    pub curvature_sum: f64,
    pub residue: f64,
}

pub fn curvature_field<F: StateFamily + ?Sized>(
    family: &F,
    mesh: &ClosedMesh,
) -> Result<CurvatureField> {
    let states = mesh
        .vertices
        .par_iter()
        .map(|&v| family.states(v))
        .collect::<Result<Vec<_>>>()?;
    let n = states.first().map_or(0, |s| s.ncols());
    if n == 0 || states.iter().any(|s| s.ncols() != n) {
        return Err(Error::InvalidArgument(
            "state family must return the same nonzero number of states everywhere".into(),
        ));
    }
    let values = mesh
        .faces
        .par_iter()
        .enumerate()
        .map(|(face_idx, face)| {
            let mut product = c64::new(1.0, 0.0);
            for (k, &a) in face.iter().enumerate() {
                let b = face[(k + 1) % face.len()];
                let overlap = states[a].adjoint() * &states[b];
                let det = overlap.determinant();
                let modulus = det.norm();
                if modulus < LINK_TOLERANCE {
                    return Err(Error::SingularLink {
                        face: face_idx,
                        modulus,
                    });
                }
                product *= det / modulus;
            }
            Ok(principal_phase(product.arg()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurvatureField {
        shape: mesh.shape,
        values,
    })
}

/// Map `atan2` output from `[-pi, pi]` onto `(-pi, pi]`.
fn principal_phase(x: f64) -> f64 {
    if x <= -PI {
        x + TAU
    } else {
        x
    }
}

pub fn chern_number<F: StateFamily + ?Sized>(family: &F, mesh: &ClosedMesh) -> Result<ChernResult> {
    chern_from_field(&curvature_field(family, mesh)?)
}

pub fn chern_from_field(field: &CurvatureField) -> Result<ChernResult> {
    let curvature_sum = field.total() / TAU;
    let value = curvature_sum.round();
    let residue = (curvature_sum - value).abs();
    if residue > ROUND_TOLERANCE {
        return Err(Error::NotQuantized {
            curvature_sum,
            residue,
        });
    }
    Ok(ChernResult {
        value: value as i64,
        curvature_sum,
        residue,
    })
}

/// Chern number of a single Hofstadter band (0-based).
pub fn band_chern(flux: RationalFlux, mesh: MomentumMesh, band: usize) -> Result<ChernResult> {
    chern_number(
        &BlochBands::new(flux, band..band + 1)?,
        &ClosedMesh::brillouin_zone(flux, mesh),
    )
}

/// Chern number of the `r` bands below gap `r`, i.e. the gap's Hall conductance.
pub fn gap_chern(flux: RationalFlux, mesh: MomentumMesh, r: usize) -> Result<ChernResult> {
    chern_number(
        &BlochBands::filled(flux, r)?,
        &ClosedMesh::brillouin_zone(flux, mesh),
    )
}
