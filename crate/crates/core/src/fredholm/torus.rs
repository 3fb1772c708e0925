//! Fermi projector of the clean model on an `L x L` torus without forming it.
//!
//! With `q | L` the Hamiltonian commutes with translations by `q` along `x`
//! and by `1` along `y`. Writing `x = q X + j`, eigenstates are
//! `e^{i q k1 X} e^{-i k2 y} c_j(k1, k2)` with `k1 = 2 pi n / L`,
//! `k2 = 2 pi m / L` and `c` an eigenvector of the Bloch matrix, so `P` acts
//! as a `q x q` matrix per momentum after a two-dimensional FFT over `(X, y)`.
//! Site numbering matches the dense path, `y L + x`.

use std::f64::consts::TAU;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{FluxUnitary, IndexEstimate, SPECTRAL_MARGIN};
use crate::error::{Error, Result};
use crate::hofstadter::{bloch_matrix, eigensystem, eigenvalues, RationalFlux};

pub struct TorusProjector {
    pub flux: RationalFlux,
    pub l: usize,
    pub e_f: f64,
    q: usize,
    m_cells: usize,
    /// Bloch projectors indexed `m * m_cells + n`.
    blocks: Vec<Mat<c64>>,
    /// `P e_s` for the sites `(j, 0)`, `j < q`.
    columns: Vec<Vec<c64>>,
    fft_x: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    fft_y: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
}

impl TorusProjector {
    pub fn new(flux: RationalFlux, l: usize, e_f: f64) -> Result<Self> {
        let q = flux.q() as usize;
        if l < 4 || !l.is_multiple_of(q) {
            return Err(Error::InvalidModel(format!(
                "torus needs L >= 4 divisible by q, got L = {l}, q = {q}"
            )));
        }
        if !e_f.is_finite() {
            return Err(Error::InvalidArgument(format!("Fermi energy {e_f}")));
        }
        let m_cells = l / q;
        let blocks = (0..l * m_cells)
            .into_par_iter()
            .map(|idx| {
                let (m, n) = (idx / m_cells, idx % m_cells);
                let h = bloch_matrix(flux, TAU * n as f64 / l as f64, TAU * m as f64 / l as f64);
                let (values, vectors) = eigensystem(&h)?;
                if let Some(&eigenvalue) =
                    values.iter().find(|&&e| (e - e_f).abs() < SPECTRAL_MARGIN)
                {
                    return Err(Error::FermiOnSpectrum { e_f, eigenvalue });
                }
                let occ = values.iter().filter(|&&e| e < e_f).count();
                let v = vectors.as_ref().subcols(0, occ);
                Ok(v * v.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut planner = FftPlanner::new();
        let fft_x = (
            planner.plan_fft_forward(m_cells),
            planner.plan_fft_inverse(m_cells),
        );
        let fft_y = (planner.plan_fft_forward(l), planner.plan_fft_inverse(l));
        let mut proj = Self {
            flux,
            l,
            e_f,
            q,
            m_cells,
            blocks,
            columns: Vec::new(),
            fft_x,
            fft_y,
        };
        proj.columns = (0..q)
            .map(|j| {
                let mut e = vec![c64::new(0.0, 0.0); l * l];
                e[j] = c64::new(1.0, 0.0);
                proj.apply(&e)
            })
            .collect();
        Ok(proj)
    }

    pub fn sites(&self) -> usize {
        self.l * self.l
    }

    /// Rank of the projector.
    pub fn occupied(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| (0..b.nrows()).map(|i| b[(i, i)].re).sum::<f64>())
            .sum::<f64>()
            .round() as usize
    }

    /// `P v`.
    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        let (l, q, mc) = (self.l, self.q, self.m_cells);
        assert_eq!(v.len(), l * l);
        // per channel, rows X of length L
        let mut chan: Vec<Vec<c64>> = (0..q)
            .map(|j| {
                let mut b = vec![c64::new(0.0, 0.0); mc * l];
                for xx in 0..mc {
                    for y in 0..l {
                        b[xx * l + y] = v[y * l + q * xx + j];
                    }
                }
                b
            })
            .collect();
        // sum_y e^{+i k2 y}, then sum_X e^{-i q k1 X}; layout becomes [m][n]
        for b in &mut chan {
            self.fft_y.1.process(b);
            *b = transpose(b, mc, l);
            self.fft_x.0.process(b);
        }
        let mut out: Vec<Vec<c64>> = vec![vec![c64::new(0.0, 0.0); mc * l]; q];
        for idx in 0..mc * l {
            let block = &self.blocks[idx];
            for a in 0..q {
                let mut acc = c64::new(0.0, 0.0);
                for b in 0..q {
                    acc += block[(a, b)] * chan[b][idx];
                }
                out[a][idx] = acc;
            }
        }
        let scale = 1.0 / (mc * l) as f64;
        let mut w = vec![c64::new(0.0, 0.0); l * l];
        for (j, b) in out.iter_mut().enumerate() {
            self.fft_x.1.process(b);
            *b = transpose(b, l, mc);
            self.fft_y.0.process(b);
            for xx in 0..mc {
                for y in 0..l {
                    w[y * l + q * xx + j] = b[xx * l + y] * scale;
                }
            }
        }
        w
    }

    /// `P_{s t}`.
    pub fn entry(&self, s: usize, t: usize) -> c64 {
        let l = self.l;
        let (xs, ys, xt, yt) = (s % l, s / l, t % l, t / l);
        let j = xt % self.q;
        let dx = (xs + l - (xt - j)) % l;
        let dy = (ys + l - yt) % l;
        self.columns[j][dy * l + dx]
    }

    /// `P e_t`.
    pub fn column(&self, t: usize) -> Vec<c64> {
        (0..self.sites()).map(|s| self.entry(s, t)).collect()
    }

    /// Trace of `(P - U P U*)^3` over the sites within `radius` of the flux.
    pub fn local_trace(&self, u: &FluxUnitary, radius: f64) -> Result<c64> {
        self.check(u)?;
        Ok(self.disk_trace(u, &u.disk(radius)))
    }

    /// Local trace and disk-block eigenvalue count, as in the dense path.
    pub fn relative_index(&self, u: &FluxUnitary, radius: f64) -> Result<IndexEstimate> {
        self.check(u)?;
        let sites = u.disk(radius);
        let trace = self.disk_trace(u, &sites);
        let k = sites.len();
        let block = Mat::from_fn(k, k, |a, b| {
            let (s, t) = (sites[a], sites[b]);
            self.entry(s, t) * (c64::new(1.0, 0.0) - u.phases[s] * u.phases[t].conj())
        });
        IndexEstimate::from_parts(trace, &eigenvalues(&block)?, radius)
    }

    fn check(&self, u: &FluxUnitary) -> Result<()> {
        if u.l != self.l {
            return Err(Error::InvalidArgument(format!(
                "flux unitary for L = {} on a torus of L = {}",
                u.l, self.l
            )));
        }
        Ok(())
    }

    fn disk_trace(&self, u: &FluxUnitary, sites: &[usize]) -> c64 {
        let density: Vec<c64> = sites
            .par_iter()
            .map(|&s| {
                let v = self.column(s);
                let plus: Vec<c64> = v.iter().zip(&u.phases).map(|(a, z)| a * z).collect();
                let minus: Vec<c64> = v.iter().zip(&u.phases).map(|(a, z)| a * z.conj()).collect();
                inner(&plus, &self.apply(&plus)) - inner(&minus, &self.apply(&minus))
            })
            .collect();
        density.into_iter().sum()
    }
}

fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Transpose a row-major `rows x cols` buffer.
fn transpose(b: &[c64], rows: usize, cols: usize) -> Vec<c64> {
    let mut t = vec![c64::new(0.0, 0.0); b.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = b[r * cols + c];
        }
    }
    t
}
