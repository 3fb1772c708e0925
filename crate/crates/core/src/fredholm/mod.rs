//! Hall conductance as a relative index on a finite lattice.
//!
//! With `P` the Fermi projector and `U` the diagonal gauge transformation that
//! threads one flux quantum through a point `a` between sites, the index of the
//! pair of projectors `(P, U P U*)` is `Tr (P - U P U*)^3`. On a finite box
//! both projectors have the same rank, so the full trace and the naive kernel
//! count vanish identically. The index lives near `a`: this module evaluates
//! the trace density `((P - U P U*)^3)_xx` summed over the disk of radius `R`
//! around `a`, and counts eigenvalues of `P - U P U*` restricted to that disk
//! which lie near `+1` and `-1`.
//!
//! Sites are numbered `y L + x`. Vertical bonds `(x, y) -> (x, y + 1)` carry
//! the Peierls phase `e^{2 pi i phi x}`, horizontal bonds carry `1`.

use std::f64::consts::TAU;

use faer::{Mat, MatRef};
use num_complex::Complex64 as c64;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hofstadter::{eigensystem, eigenvalues, RationalFlux};

pub mod torus;

pub use torus::TorusProjector;

/// Half-width of the windows around `+1` and `-1` used for eigenvalue counting.
pub const EIG_TOL: f64 = 0.1;

/// Relative cutoff on singular values for [`kernel_dims`].
pub const RANK_TOL: f64 = 1e-8;

/// Minimum distance between the Fermi energy and the spectrum.
pub const SPECTRAL_MARGIN: f64 = 1e-9;

/// Estimates further than this from an integer are flagged non-convergent.
pub const CONVERGENCE_RESIDUE: f64 = 0.2;

/// Largest imaginary part tolerated in a trace before it is rejected.
pub const IMAG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticeModel {
    pub l: usize,
    pub flux: RationalFlux,
    pub disorder: f64,
    pub seed: u64,
    pub boundary: Boundary,
}

impl LatticeModel {
    pub fn clean(l: usize, flux: RationalFlux, boundary: Boundary) -> Self {
        Self {
            l,
            flux,
            disorder: 0.0,
            seed: 0,
            boundary,
        }
    }

    pub fn with_disorder(mut self, disorder: f64, seed: u64) -> Self {
        self.disorder = disorder;
        self.seed = seed;
        self
    }

    pub fn with_size(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn sites(&self) -> usize {
        self.l * self.l
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 4 {
            return Err(Error::InvalidModel(format!("L = {} below 4", self.l)));
        }
        if !(self.disorder >= 0.0 && self.disorder.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "disorder strength {} must be finite and >= 0",
                self.disorder
            )));
        }
        if self.boundary == Boundary::Periodic && self.l as i64 % self.flux.q() != 0 {
            return Err(Error::InvalidModel(format!(
                "periodic boundary needs L = {} divisible by q = {}",
                self.l,
                self.flux.q()
            )));
        }
        Ok(())
    }
}

/// Real-space Hamiltonian of the model, `L^2 x L^2`.
pub fn build_lattice(model: &LatticeModel) -> Result<Mat<c64>> {
    model.validate()?;
    let l = model.l;
    let site = |x: usize, y: usize| y * l + x;
    let periodic = model.boundary == Boundary::Periodic;
    let mut h = Mat::<c64>::zeros(l * l, l * l);
    let phi = model.flux.value();
    for y in 0..l {
        for x in 0..l {
            let i = site(x, y);
            if x + 1 < l || periodic {
                let j = site((x + 1) % l, y);
                h[(j, i)] += c64::new(1.0, 0.0);
                h[(i, j)] += c64::new(1.0, 0.0);
            }
            if y + 1 < l || periodic {
                let j = site(x, (y + 1) % l);
                let hop = c64::from_polar(1.0, TAU * phi * x as f64);
                h[(j, i)] += hop;
                h[(i, j)] += hop.conj();
            }
        }
    }
    if model.disorder > 0.0 {
        let half = model.disorder / 2.0;
        let dist =
            Uniform::new_inclusive(-half, half).map_err(|e| Error::InvalidModel(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        for i in 0..l * l {
            h[(i, i)] += c64::new(dist.sample(&mut rng), 0.0);
        }
    }
    Ok(h)
}

/// Eigen-decomposition of a lattice Hamiltonian, reusable for several Fermi
/// energies.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat<c64>,
}

impl SpectralDecomposition {
    pub fn new(h: &Mat<c64>) -> Result<Self> {
        let (values, vectors) = eigensystem(h)?;
        Ok(Self { values, vectors })
    }

    pub fn projector(&self, e_f: f64) -> Result<FermiProjector> {
        if !e_f.is_finite() {
            return Err(Error::InvalidArgument(format!("Fermi energy {e_f}")));
        }
        if let Some(&eigenvalue) = self
            .values
            .iter()
            .find(|&&e| (e - e_f).abs() < SPECTRAL_MARGIN)
        {
            return Err(Error::FermiOnSpectrum { e_f, eigenvalue });
        }
        let occupied = self.values.iter().filter(|&&e| e < e_f).count();
        let v = self.vectors.as_ref().subcols(0, occupied);
        Ok(FermiProjector {
            e_f,
            occupied,
            matrix: v * v.adjoint(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct FermiProjector {
    pub e_f: f64,
    /// Number of eigenvalues below `e_f`, which is the rank.
    pub occupied: usize,
    pub matrix: Mat<c64>,
}

impl FermiProjector {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max(|P^2 - P|, |P - P*|)` entrywise.
    pub fn projector_defect(&self) -> f64 {
        let p = self.matrix.as_ref();
        let idem = (p * p - p).norm_max();
        let herm = (p - p.adjoint()).norm_max();
        idem.max(herm)
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }
}

pub fn fermi_projector(h: &Mat<c64>, e_f: f64) -> Result<FermiProjector> {
    SpectralDecomposition::new(h)?.projector(e_f)
}

/// Diagonal unitary `e^{i arg(x - a)}` for a flux quantum at `a`.
#[derive(Debug, Clone)]
pub struct FluxUnitary {
    pub l: usize,
    pub center: [f64; 2],
    pub phases: Vec<c64>,
}

impl FluxUnitary {
    pub fn new(l: usize, center: [f64; 2]) -> Result<Self> {
        let [ax, ay] = center;
        if !ax.is_finite() || !ay.is_finite() {
            return Err(Error::InvalidArgument(format!("flux center ({ax}, {ay})")));
        }
        let on_grid =
            |c: f64| (c - c.round()).abs() < 1e-12 && c.round() >= 0.0 && c.round() < l as f64;
        if on_grid(ax) && on_grid(ay) {
            return Err(Error::CenterOnSite { x: ax, y: ay });
        }
        let phases = (0..l * l)
            .map(|s| {
                let (x, y) = ((s % l) as f64, (s / l) as f64);
                c64::from_polar(1.0, (y - ay).atan2(x - ax))
            })
            .collect();
        Ok(Self { l, center, phases })
    }

    /// Flux through the plaquette nearest the middle of the box.
    pub fn centered(l: usize) -> Result<Self> {
        Self::new(l, default_center(l))
    }

    pub fn matrix(&self) -> Mat<c64> {
        let n = self.phases.len();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                self.phases[i]
            } else {
                c64::new(0.0, 0.0)
            }
        })
    }

    /// Sites within `radius` of the center, in site order.
    pub fn disk(&self, radius: f64) -> Vec<usize> {
        let l = self.l;
        (0..l * l)
            .filter(|&s| {
                let (x, y) = ((s % l) as f64, (s / l) as f64);
                (x - self.center[0]).hypot(y - self.center[1]) <= radius
            })
            .collect()
    }
}

/// Plaquette center nearest the middle of an `l x l` box.
pub fn default_center(l: usize) -> [f64; 2] {
    let c = ((l - 1) / 2) as f64 + 0.5;
    [c, c]
}

/// Default disk radius for the local trace: large enough to hold most of the
/// trace density, small enough to stay clear of the box edge.
pub fn default_radius(l: usize) -> f64 {
    0.3 * l as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexEstimate {
    /// Real part of the trace of `(P - U P U*)^3` over the disk.
    pub trace_value: f64,
    pub trace_imag: f64,
    pub rounded: i64,
    pub residue: f64,
    /// Eigenvalues of the disk block near `+1` minus those near `-1`.
    pub eigencount: i64,
    pub tolerance_used: f64,
    pub radius: f64,
    pub disk_sites: usize,
    pub non_convergent: bool,
}

impl IndexEstimate {
    pub(crate) fn from_parts(trace: c64, block_eigenvalues: &[f64], radius: f64) -> Result<Self> {
        if trace.im.abs() > IMAG_TOLERANCE {
            return Err(Error::ComplexTrace(trace.im));
        }
        let rounded = trace.re.round();
        let residue = (trace.re - rounded).abs();
        let near = |target: f64| {
            block_eigenvalues
                .iter()
                .filter(|&&e| (e - target).abs() <= EIG_TOL)
                .count() as i64
        };
        Ok(Self {
            trace_value: trace.re,
            trace_imag: trace.im,
            rounded: rounded as i64,
            residue,
            eigencount: near(1.0) - near(-1.0),
            tolerance_used: EIG_TOL,
            radius,
            disk_sites: block_eigenvalues.len(),
            non_convergent: residue > CONVERGENCE_RESIDUE,
        })
    }

    pub fn consistent(&self) -> bool {
        self.non_convergent || self.rounded == self.eigencount
    }
}

/// Trace density `((P - U P U*)^3)_ss` at each listed site.
///
/// With `v = P e_s`, the diagonal of `(P - Q)^3 = P - Q - P Q P + Q P Q` is
/// `<U v, P U v> - <U* v, P U* v>`, the `P - Q` part having zero diagonal.
pub fn trace_density(p: &FermiProjector, u: &FluxUnitary, sites: &[usize]) -> Vec<c64> {
    let n = p.dim();
    let pm = p.matrix.as_ref();
    let cols = Mat::from_fn(n, sites.len(), |i, k| pm[(i, sites[k])]);
    let w_plus = Mat::from_fn(n, sites.len(), |i, k| u.phases[i] * cols[(i, k)]);
    let w_minus = Mat::from_fn(n, sites.len(), |i, k| u.phases[i].conj() * cols[(i, k)]);
    let pw_plus = pm * &w_plus;
    let pw_minus = pm * &w_minus;
    (0..sites.len())
        .map(|k| {
            let mut acc = c64::new(0.0, 0.0);
            for i in 0..n {
                acc += w_plus[(i, k)].conj() * pw_plus[(i, k)];
                acc -= w_minus[(i, k)].conj() * pw_minus[(i, k)];
            }
            acc
        })
        .collect()
}

/// `(P - U P U*)` restricted to `sites`.
pub fn difference_block(p: &FermiProjector, u: &FluxUnitary, sites: &[usize]) -> Mat<c64> {
    let k = sites.len();
    Mat::from_fn(k, k, |a, b| {
        let (s, t) = (sites[a], sites[b]);
        p.matrix[(s, t)] * (c64::new(1.0, 0.0) - u.phases[s] * u.phases[t].conj())
    })
}

pub fn relative_index(p: &FermiProjector, u: &FluxUnitary) -> Result<IndexEstimate> {
    relative_index_with_radius(p, u, default_radius(u.l))
}

pub fn relative_index_with_radius(
    p: &FermiProjector,
    u: &FluxUnitary,
    radius: f64,
) -> Result<IndexEstimate> {
    if p.dim() != u.phases.len() {
        return Err(Error::InvalidArgument(format!(
            "projector dimension {} does not match lattice with {} sites",
            p.dim(),
            u.phases.len()
        )));
    }
    let sites = u.disk(radius);
    let trace: c64 = trace_density(p, u, &sites).into_iter().sum();
    let block = eigenvalues(&difference_block(p, u, &sites))?;
    IndexEstimate::from_parts(trace, &block, radius)
}

/// `(Tr A, Tr A^3)` over the whole box, `A = P - U P U*`. Both vanish at finite
/// volume.
pub fn full_traces(p: &FermiProjector, u: &FluxUnitary) -> (c64, c64) {
    let all: Vec<usize> = (0..p.dim()).collect();
    let a = difference_block(p, u, &all);
    let tr_a: c64 = (0..a.nrows()).map(|i| a[(i, i)]).sum();
    let tr_a3: c64 = trace_density(p, u, &all).into_iter().sum();
    (tr_a, tr_a3)
}

/// Spectrum of the full `P - U P U*`.
pub fn difference_spectrum(p: &FermiProjector, u: &FluxUnitary) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..p.dim()).collect();
    eigenvalues(&difference_block(p, u, &all))
}

/// Build, diagonalise and estimate the index for one model.
pub fn estimate(model: &LatticeModel, e_f: f64) -> Result<IndexEstimate> {
    let h = build_lattice(model)?;
    let p = fermi_projector(&h, e_f)?;
    relative_index(&p, &FluxUnitary::centered(model.l)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanEntry {
    pub l: usize,
    pub seed: u64,
    pub estimate: IndexEstimate,
}

/// One estimate per size, with everything but `L` taken from `template`.
pub fn index_convergence_scan(
    template: &LatticeModel,
    e_f: f64,
    sizes: &[usize],
) -> Result<Vec<ScanEntry>> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "sizes {sizes:?} must be strictly ascending"
        )));
    }
    sizes
        .par_iter()
        .map(|&l| {
            let model = template.with_size(l);
            Ok(ScanEntry {
                l,
                seed: model.seed,
                estimate: estimate(&model, e_f)?,
            })
        })
        .collect()
}

/// One estimate per disorder seed.
pub fn disorder_ensemble(
    template: &LatticeModel,
    e_f: f64,
    seeds: &[u64],
) -> Result<Vec<ScanEntry>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let model = LatticeModel { seed, ..*template };
            Ok(ScanEntry {
                l: model.l,
                seed,
                estimate: estimate(&model, e_f)?,
            })
        })
        .collect()
}

/// `(dim ker M, dim ker M*)` from the singular values of `m`.
pub fn kernel_dims(m: MatRef<'_, c64>) -> Result<(usize, usize)> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return Ok((cols, rows));
    }
    if (0..rows).any(|i| (0..cols).any(|j| !m[(i, j)].re.is_finite() || !m[(i, j)].im.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))?;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if max == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > RANK_TOL * max).count()
    };
    Ok((cols - rank, rows - rank))
}

/// Parameters and results of an index scan, as written by the command line.
#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub flux: String,
    pub fermi_energy: f64,
    pub disorder: f64,
    pub boundary: Boundary,
    pub entries: Vec<ScanEntry>,
}
