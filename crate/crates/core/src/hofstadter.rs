//! Magnetic Bloch reduction of the Hofstadter Hamiltonian `U + U* + V + V*`.
//!
//! Gauge: Landau gauge with the magnetic unit cell enlarged `q` times along the
//! first lattice direction. For flux `p/q` and Bloch momentum `(k1, k2)` the
//! reduced Hamiltonian is the cyclic tridiagonal `q x q` matrix
//!
//! ```text
//! H[j][j]     = 2 cos(k2 + 2 pi (p/q) j)
//! H[j][j+1]   = H[j+1][j] = 1
//! H[q-1][0]  += exp(+i q k1)
//! H[0][q-1]  += exp(-i q k1)
//! ```
//!
//! with `k1` in `[0, 2pi/q)` and `k2` in `[0, 2pi)`. For `q = 1` the corner terms
//! land on the diagonal and give the free dispersion `2cos k1 + 2cos k2`.

use std::f64::consts::{PI, TAU};

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum separation between the top of band `r` and the bottom of band `r+1`
/// for the gap to be declared open.
pub const GAP_TOLERANCE: f64 = 1e-8;

/// Smallest mesh accepted by [`band_gaps`] along either direction.
pub const MIN_GAP_MESH: usize = 16;

/// Flux per plaquette in units of the flux quantum, stored in lowest terms.
///
/// `canonical_p` is the numerator reduced into `[0, q)`; `numerator` keeps the
/// signed value the flux was built from, so `7/3` and `1/3` share a canonical
/// form but remain distinguishable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RationalFlux {
    numerator: i64,
    canonical_p: i64,
    q: i64,
}

/// Reduce `p/q` to lowest terms with a positive denominator.
pub fn reduce_flux(p: i64, q: i64) -> Result<RationalFlux> {
    if q == 0 {
        return Err(Error::ZeroDenominator);
    }
    let g = gcd(p.unsigned_abs(), q.unsigned_abs()) as i64;
    let (mut p, mut q) = (p / g, q / g);
    if q < 0 {
        p = -p;
        q = -q;
    }
    Ok(RationalFlux {
        numerator: p,
        canonical_p: p.rem_euclid(q),
        q,
    })
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    // gcd(0, 0) never reaches callers with q != 0, but keep the division safe
    a.max(1)
}

impl RationalFlux {
    /// Numerator reduced into `[0, q)`.
    pub fn p(&self) -> i64 {
        self.canonical_p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// Signed numerator in lowest terms, before reduction modulo `q`.
    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    /// Value of the original (signed) fraction.
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.q as f64
    }

    /// Value of the canonical representative in `[0, 1)`.
    pub fn canonical_value(&self) -> f64 {
        self.canonical_p as f64 / self.q as f64
    }

    /// The flux `-p/q`.
    pub fn negated(&self) -> RationalFlux {
        reduce_flux(-self.numerator, self.q).expect("q is nonzero")
    }

    /// The flux `p/q + n`.
    pub fn shifted(&self, n: i64) -> RationalFlux {
        reduce_flux(self.numerator + n * self.q, self.q).expect("q is nonzero")
    }

    /// The flux `q/p`; fails for zero flux.
    pub fn inverted(&self) -> Result<RationalFlux> {
        if self.numerator == 0 {
            return Err(Error::InvalidFlux("zero flux has no inverse".to_string()));
        }
        reduce_flux(self.q, self.numerator)
    }

    /// Same canonical representative (equal modulo 1).
    pub fn same_class(&self, other: &RationalFlux) -> bool {
        self.q == other.q && self.canonical_p == other.canonical_p
    }
}

impl std::fmt::Display for RationalFlux {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numerator, self.q)
    }
}

/// All reduced fractions `p/q` with `1 <= q <= q_max` and value in `[lo, hi]`,
/// sorted by value.
pub fn farey_fluxes(q_max: i64, lo: f64, hi: f64) -> Vec<RationalFlux> {
    let mut out = Vec::new();
    for q in 1..=q_max.max(1) {
        let p_lo = (lo * q as f64).ceil() as i64;
        let p_hi = (hi * q as f64).floor() as i64;
        for p in p_lo..=p_hi {
            if gcd(p.unsigned_abs(), q as u64) == 1 {
                out.push(reduce_flux(p, q).expect("q >= 1"));
            }
        }
    }
    // cross-multiplication keeps the ordering exact
    out.sort_by(|a, b| (a.numerator * b.q).cmp(&(b.numerator * a.q)));
    out
}

/// Bloch momentum in the reduced magnetic Brillouin zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochMomentum {
    pub k1: f64,
    pub k2: f64,
}

impl BlochMomentum {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::InvalidMomentum { k1, k2 });
        }
        Ok(Self { k1, k2 })
    }

    /// Representative inside `[0, 2pi/q) x [0, 2pi)`.
    pub fn wrapped(&self, q: i64) -> Self {
        let period1 = TAU / q as f64;
        Self {
            k1: self.k1.rem_euclid(period1),
            k2: self.k2.rem_euclid(TAU),
        }
    }
}

/// The `q x q` magnetic Bloch Hamiltonian at one momentum.
#[derive(Debug, Clone)]
pub struct BlochHamiltonian {
    pub flux: RationalFlux,
    pub k: BlochMomentum,
    pub matrix: Mat<c64>,
}

pub fn bloch_hamiltonian(flux: RationalFlux, k: BlochMomentum) -> BlochHamiltonian {
    BlochHamiltonian {
        flux,
        k,
        matrix: bloch_matrix(flux, k.k1, k.k2),
    }
}

pub(crate) fn bloch_matrix(flux: RationalFlux, k1: f64, k2: f64) -> Mat<c64> {
    let q = flux.q() as usize;
    let alpha = flux.p() as f64 / flux.q() as f64;
    let mut h = Mat::<c64>::zeros(q, q);
    for j in 0..q {
        h[(j, j)] = c64::new(2.0 * (k2 + TAU * alpha * j as f64).cos(), 0.0);
    }
    for j in 0..q.saturating_sub(1) {
        h[(j, j + 1)] += c64::new(1.0, 0.0);
        h[(j + 1, j)] += c64::new(1.0, 0.0);
    }
    let corner = c64::from_polar(1.0, q as f64 * k1);
    h[(q - 1, 0)] += corner;
    h[(0, q - 1)] += corner.conj();
    h
}

impl BlochHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Spectral norm (largest eigenvalue magnitude, the matrix being Hermitian).
    pub fn operator_norm(&self) -> Result<f64> {
        let e = eigenvalues(&self.matrix)?;
        Ok(e.iter().fold(0.0f64, |m, x| m.max(x.abs())))
    }
}

pub(crate) fn eigenvalues(m: &Mat<c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))
}

/// Eigenvalues ascending and the matching orthonormal eigenvectors as columns.
pub(crate) fn eigensystem(m: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigensolveFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Ascending eigenvalues of the Bloch Hamiltonian at `k`.
pub fn spectrum(flux: RationalFlux, k: BlochMomentum) -> Result<Vec<f64>> {
    eigenvalues(&bloch_matrix(flux, k.k1, k.k2))
}

/// Periodic momentum mesh over the magnetic Brillouin zone.
///
/// Points are `k1 = 2pi i / (q n1)`, `k2 = 2pi j / n2`; the right-hand edge of
/// each interval is the image of the left-hand one and is not sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MomentumMesh {
    pub n1: usize,
    pub n2: usize,
}

impl MomentumMesh {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2 }
    }

    pub fn square(n: usize) -> Self {
        Self { n1: n, n2: n }
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, q: i64, i: usize, j: usize) -> BlochMomentum {
        BlochMomentum {
            k1: TAU * i as f64 / (q as f64 * self.n1 as f64),
            k2: TAU * j as f64 / self.n2 as f64,
        }
    }
}

/// Band energies over a momentum mesh.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub flux: RationalFlux,
    pub mesh: MomentumMesh,
    /// Row-major over `(i, j)`; each entry holds `q` ascending energies.
    pub energies: Vec<Vec<f64>>,
}

pub fn band_structure(flux: RationalFlux, mesh: MomentumMesh) -> Result<BandStructure> {
    let q = flux.q();
    let energies = (0..mesh.len())
        .into_par_iter()
        .map(|idx| {
            let k = mesh.point(q, idx / mesh.n2, idx % mesh.n2);
            spectrum(flux, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandStructure {
        flux,
        mesh,
        energies,
    })
}

impl BandStructure {
    pub fn band_count(&self) -> usize {
        self.flux.q() as usize
    }

    pub fn momentum(&self, idx: usize) -> BlochMomentum {
        self.mesh
            .point(self.flux.q(), idx / self.mesh.n2, idx % self.mesh.n2)
    }

    /// `(min, max)` of band `n` (0-based) over the mesh.
    pub fn band_range(&self, n: usize) -> (f64, f64) {
        self.energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e[n]), hi.max(e[n]))
            })
    }

    /// Lowest and highest energy on the mesh.
    pub fn bounds(&self) -> (f64, f64) {
        let q = self.band_count();
        (self.band_range(0).0, self.band_range(q - 1).1)
    }

    pub fn gaps(&self) -> Vec<GapWindow> {
        let q = self.band_count();
        let ranges: Vec<_> = (0..q).map(|n| self.band_range(n)).collect();
        (1..q)
            .filter_map(|r| {
                let e_low = ranges[r - 1].1;
                let e_high = ranges[r].0;
                (e_high - e_low > GAP_TOLERANCE).then_some(GapWindow { r, e_low, e_high })
            })
            .collect()
    }
}

/// An open spectral gap with `r` bands filled below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapWindow {
    pub r: usize,
    pub e_low: f64,
    pub e_high: f64,
}

impl GapWindow {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.e_low + self.e_high)
    }

    pub fn width(&self) -> f64 {
        self.e_high - self.e_low
    }

    /// Strict interior membership.
    pub fn contains(&self, mu: f64) -> bool {
        self.e_low < mu && mu < self.e_high
    }
}

/// Open gaps of the spectrum at `flux`, detected on `mesh`.
pub fn band_gaps(flux: RationalFlux, mesh: MomentumMesh) -> Result<Vec<GapWindow>> {
    if mesh.n1 < MIN_GAP_MESH || mesh.n2 < MIN_GAP_MESH {
        return Err(Error::InvalidMesh(format!(
            "gap detection needs at least {MIN_GAP_MESH}x{MIN_GAP_MESH}, got {}x{}",
            mesh.n1, mesh.n2
        )));
    }
    Ok(band_structure(flux, mesh)?.gaps())
}

/// Momentum at which the `phi = 1/2` bands touch in this gauge.
pub const HALF_FLUX_DIRAC_POINT: (f64, f64) = (PI / 2.0, PI / 2.0);

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn flux(p: i64, q: i64) -> RationalFlux {
        reduce_flux(p, q).unwrap()
    }

    #[test]
    fn reduction_examples() {
        let f = flux(2, 4);
        assert_eq!((f.p(), f.q()), (1, 2));
        let f = flux(0, 7);
        assert_eq!((f.p(), f.q()), (0, 1));
        let f = flux(7, 3);
        assert_eq!((f.p(), f.q(), f.numerator()), (1, 3, 7));
        assert_eq!(reduce_flux(1, 0), Err(Error::ZeroDenominator));
        let f = flux(1, -3);
        assert_eq!((f.p(), f.q(), f.numerator()), (2, 3, -1));
    }

    #[test]
    fn flux_helpers() {
        let f = flux(1, 3);
        assert!(f.shifted(1).same_class(&f));
        assert_eq!(f.shifted(1).numerator(), 4);
        assert_eq!(f.negated().p(), 2);
        assert_eq!(f.inverted().unwrap(), flux(3, 1));
        assert!(flux(0, 1).inverted().is_err());
    }

    #[test]
    fn farey_sequence_order_five() {
        let f = farey_fluxes(5, 0.0, 1.0);
        let vals: Vec<String> = f.iter().map(|x| x.to_string()).collect();
        assert_eq!(
            vals,
            ["0/1", "1/5", "1/4", "1/3", "2/5", "1/2", "3/5", "2/3", "3/4", "4/5", "1/1"]
        );
        assert_eq!(farey_fluxes(2, -1.0, 0.0).len(), 3);
    }

    #[test]
    fn zero_flux_matrix() {
        let h = bloch_hamiltonian(flux(0, 1), BlochMomentum::new(0.0, 0.0).unwrap());
        assert_eq!(h.dim(), 1);
        assert_abs_diff_eq!(h.matrix[(0, 0)].re, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h.matrix[(0, 0)].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn half_flux_at_origin() {
        // independent 2x2 oracle: [[a, b], [conj b, d]] has eigenvalues
        // (a+d)/2 -+ sqrt(((a-d)/2)^2 + |b|^2)
        let h = bloch_hamiltonian(flux(1, 2), BlochMomentum::new(0.0, 0.0).unwrap());
        let (a, b, d) = (h.matrix[(0, 0)].re, h.matrix[(0, 1)], h.matrix[(1, 1)].re);
        let disc = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        let e = spectrum(flux(1, 2), h.k).unwrap();
        assert_abs_diff_eq!(e[0], (a + d) / 2.0 - disc, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], (a + d) / 2.0 + disc, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 2.0 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn spectrum_examples() {
        let e = spectrum(flux(0, 1), BlochMomentum::new(PI, PI).unwrap()).unwrap();
        assert_abs_diff_eq!(e[0], -4.0, epsilon = 1e-12);

        let (k1, k2) = HALF_FLUX_DIRAC_POINT;
        let e = spectrum(flux(1, 2), BlochMomentum::new(k1, k2).unwrap()).unwrap();
        assert_abs_diff_eq!(e[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-12);

        let e = spectrum(flux(1, 3), BlochMomentum::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(e.len(), 3);
        assert_abs_diff_eq!(e.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn hermitian_and_bounded() {
        for (p, q) in [(1, 3), (2, 5), (3, 7), (5, 12)] {
            for &(k1, k2) in &[(0.1, 0.2), (0.4, 5.0), (1.0, 3.0)] {
                let h = bloch_hamiltonian(flux(p, q), BlochMomentum::new(k1, k2).unwrap());
                assert!(h.is_hermitian(1e-12));
                assert!(h.operator_norm().unwrap() <= 4.0 + 1e-12);
            }
        }
    }

    #[test]
    fn momentum_validation() {
        assert!(BlochMomentum::new(f64::NAN, 0.0).is_err());
        let k = BlochMomentum::new(-0.1, 7.0).unwrap().wrapped(3);
        assert!(k.k1 >= 0.0 && k.k1 < TAU / 3.0);
        assert!(k.k2 >= 0.0 && k.k2 < TAU);
    }

    #[test]
    fn gap_examples() {
        let mesh = MomentumMesh::square(64);
        assert!(band_gaps(flux(0, 1), mesh).unwrap().is_empty());
        assert!(band_gaps(flux(1, 2), mesh).unwrap().is_empty());
        let g = band_gaps(flux(1, 3), mesh).unwrap();
        assert_eq!(g.iter().map(|w| w.r).collect::<Vec<_>>(), [1, 2]);
        assert_abs_diff_eq!(g[0].e_low, -g[1].e_high, epsilon = 1e-10);
        assert_abs_diff_eq!(g[0].e_high, -g[1].e_low, epsilon = 1e-10);
        assert!(band_gaps(flux(1, 3), MomentumMesh::square(8)).is_err());
    }

    #[test]
    fn gap_mesh_oracle_one_third() {
        // brute-force min/max over the same 64x64 points, independent of
        // BandStructure bookkeeping
        let f = flux(1, 3);
        let mut hi0 = f64::NEG_INFINITY;
        let mut lo1 = f64::INFINITY;
        for i in 0..64 {
            for j in 0..64 {
                let k1 = TAU * i as f64 / (3.0 * 64.0);
                let k2 = TAU * j as f64 / 64.0;
                let e = spectrum(f, BlochMomentum { k1, k2 }).unwrap();
                hi0 = hi0.max(e[0]);
                lo1 = lo1.min(e[1]);
            }
        }
        let g = band_gaps(f, MomentumMesh::square(64)).unwrap();
        assert_eq!(g[0].e_low, hi0);
        assert_eq!(g[0].e_high, lo1);
        assert!(lo1 - hi0 > 1.0);
    }
}
