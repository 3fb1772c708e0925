//! Quantum Hall phase diagrams over (chemical potential, flux).
//!
//! Rows are the rational fluxes `p/q` with `q <= q_max` of a window, in
//! ascending order. The vertical coordinate is always the flux of the
//! tight-binding model, so both diagrams share the same gaps; they differ in
//! the integer attached to a gap. In tight-binding mode it is `t`. In
//! split-Landau mode the row coordinate is read as `Phi_0 / Phi`, the
//! split-Landau point is its inverse, and the Hall conductance is `s`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::diophantine::{GapLabelling, HallConductance};
use crate::error::{Error, Result};
use crate::hofstadter::{farey_fluxes, MomentumMesh, RationalFlux};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TightBinding,
    SplitLandau,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::TightBinding => "tight-binding",
            Mode::SplitLandau => "split-landau",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight-binding" => Ok(Mode::TightBinding),
            "split-landau" => Ok(Mode::SplitLandau),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode {s:?}, expected tight-binding or split-landau"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Cell {
    Chern(i64),
    InBand,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Chern(c) => write!(f, "{c}"),
            Cell::InBand => f.write_str("band"),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagramParams {
    pub mode: Mode,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_steps: usize,
    pub q_max: i64,
    pub flux_min: f64,
    pub flux_max: f64,
    pub mesh: usize,
}

impl Default for DiagramParams {
    fn default() -> Self {
        Self {
            mode: Mode::TightBinding,
            mu_min: -4.2,
            mu_max: 4.2,
            mu_steps: 512,
            q_max: 12,
            flux_min: 0.0,
            flux_max: 1.0,
            mesh: 32,
        }
    }
}

impl DiagramParams {
    pub fn validate(&self) -> Result<()> {
        if self.q_max < 2 {
            return Err(Error::InvalidArgument(format!(
                "q_max = {} below 2",
                self.q_max
            )));
        }
        if self.mu_steps < 16 {
            return Err(Error::InvalidArgument(format!(
                "mu_steps = {} below 16",
                self.mu_steps
            )));
        }
        if !self.mu_min.is_finite() || !self.mu_max.is_finite() || self.mu_min >= self.mu_max {
            return Err(Error::InvalidArgument(format!(
                "empty mu range [{}, {}]",
                self.mu_min, self.mu_max
            )));
        }
        if !self.flux_min.is_finite() || !self.flux_max.is_finite() || self.flux_min > self.flux_max
        {
            return Err(Error::InvalidArgument(format!(
                "empty flux window [{}, {}]",
                self.flux_min, self.flux_max
            )));
        }
        Ok(())
    }

    /// Cell centers, placed symmetrically about the middle of the range.
    pub fn mu_axis(&self) -> Vec<f64> {
        let n = self.mu_steps;
        let center = 0.5 * (self.mu_min + self.mu_max);
        let step = (self.mu_max - self.mu_min) / n as f64;
        (0..n)
            .map(|i| center + (i as f64 + 0.5 - n as f64 / 2.0) * step)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagram {
    pub params: DiagramParams,
    pub mu_axis: Vec<f64>,
    pub flux_axis: Vec<RationalFlux>,
    /// Row-major: `cells[row * mu_axis.len() + i]`.
    pub cells: Vec<Cell>,
}

impl PhaseDiagram {
    pub fn rows(&self) -> usize {
        self.flux_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.mu_axis.len()
    }

    pub fn cell(&self, row: usize, i: usize) -> Cell {
        self.cells[row * self.cols() + i]
    }

    pub fn row_of(&self, flux: RationalFlux) -> Option<usize> {
        self.flux_axis.iter().position(|f| *f == flux)
    }

    /// Every cell pair related by one of the tight-binding symmetries that
    /// fails it. A pair fails when both cells carry integers that break the
    /// relation, or when exactly one of them is in a band.
    pub fn symmetry_violations(&self) -> SymmetryReport {
        let n = self.cols();
        let mut report = SymmetryReport::default();
        let check = |a: Cell, b: Cell, sign: i64| match (a, b) {
            (Cell::Chern(x), Cell::Chern(y)) => y == sign * x,
            (Cell::InBand, Cell::InBand) => true,
            _ => false,
        };
        for row in 0..self.rows() {
            for i in 0..n {
                let (a, b) = (self.cell(row, i), self.cell(row, n - 1 - i));
                report.mu_reflection.checked += 1;
                if !check(a, b, -1) {
                    report.mu_reflection.witnesses.push(Witness::new(
                        self,
                        (row, i),
                        (row, n - 1 - i),
                    ));
                }
            }
        }
        for ra in 0..self.rows() {
            for rb in 0..self.rows() {
                let (fa, fb) = (self.flux_axis[ra], self.flux_axis[rb]);
                if fa.q() != fb.q() {
                    continue;
                }
                let (pa, pb) = (fa.numerator(), fb.numerator());
                if ra < rb && (pa - pb) % fa.q() == 0 {
                    for i in 0..n {
                        report.period.checked += 1;
                        if !check(self.cell(ra, i), self.cell(rb, i), 1) {
                            report
                                .period
                                .witnesses
                                .push(Witness::new(self, (ra, i), (rb, i)));
                        }
                    }
                }
                if ra <= rb && (pa + pb) % fa.q() == 0 {
                    for i in 0..n {
                        report.flux_reflection.checked += 1;
                        if !check(self.cell(ra, i), self.cell(rb, i), -1) {
                            report.flux_reflection.witnesses.push(Witness::new(
                                self,
                                (ra, i),
                                (rb, i),
                            ));
                        }
                    }
                }
            }
        }
        report
    }
}

/// Two cells that break a symmetry.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Witness {
    pub mu_a: f64,
    pub flux_a: RationalFlux,
    pub cell_a: Cell,
    pub mu_b: f64,
    pub flux_b: RationalFlux,
    pub cell_b: Cell,
}

impl Witness {
    fn new(d: &PhaseDiagram, a: (usize, usize), b: (usize, usize)) -> Self {
        Self {
            mu_a: d.mu_axis[a.1],
            flux_a: d.flux_axis[a.0],
            cell_a: d.cell(a.0, a.1),
            mu_b: d.mu_axis[b.1],
            flux_b: d.flux_axis[b.0],
            cell_b: d.cell(b.0, b.1),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C({:.4}, {}) = {} vs C({:.4}, {}) = {}",
            self.mu_a, self.flux_a, self.cell_a, self.mu_b, self.flux_b, self.cell_b
        )
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SymmetryCheck {
    pub checked: usize,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SymmetryReport {
    /// `C(mu, phi) = C(mu, phi + 1)`.
    pub period: SymmetryCheck,
    /// `C(-mu, phi) = -C(mu, phi)`.
    pub mu_reflection: SymmetryCheck,
    /// `C(mu, -phi) = -C(mu, phi)`, modulo the period.
    pub flux_reflection: SymmetryCheck,
}

pub fn compute_diagram(params: &DiagramParams) -> Result<PhaseDiagram> {
    params.validate()?;
    let mut flux_axis = farey_fluxes(params.q_max, params.flux_min, params.flux_max);
    if params.mode == Mode::SplitLandau {
        flux_axis.retain(|f| f.numerator() != 0);
    }
    let mu_axis = params.mu_axis();
    let mesh = MomentumMesh::square(params.mesh);
    let rows = flux_axis
        .par_iter()
        .map(|&flux| {
            let labelling = GapLabelling::new(flux, mesh)?;
            mu_axis
                .iter()
                .map(|&mu| {
                    let c = match params.mode {
                        Mode::TightBinding => labelling.conductance_at(mu),
                        Mode::SplitLandau => labelling.split_landau_conductance_at(mu),
                    };
                    match c {
                        Ok(HallConductance::Quantized(v)) => Ok(Cell::Chern(v)),
                        Ok(HallConductance::NotInGap) | Err(Error::AmbiguousLabel { .. }) => {
                            Ok(Cell::InBand)
                        }
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram {
        params: *params,
        mu_axis,
        flux_axis,
        cells: rows.into_iter().flatten().collect(),
    })
}

/// Integer to color: white for zero, red to yellow for `+1..+8`, blue to cyan
/// for `-1..-8`, the `+-8` color darkened in steps for `|c| = 9..12`, and
/// clamped beyond. Cells inside a band are black.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorMap {
    pub band: [u8; 3],
    pub zero: [u8; 3],
}

impl Default for ColorMap {
    fn default() -> Self {
        Self {
            band: [0, 0, 0],
            zero: [255, 255, 255],
        }
    }
}

/// Largest `|c|` with a distinct color.
pub const PALETTE_LIMIT: i64 = 12;

impl ColorMap {
    pub fn rgb(&self, cell: Cell) -> [u8; 3] {
        match cell {
            Cell::InBand => self.band,
            Cell::Chern(0) => self.zero,
            Cell::Chern(c) => {
                let m = c.unsigned_abs().min(PALETTE_LIMIT as u64) as i64;
                let ramp = |k: i64| (255.0 * (k - 1) as f64 / 7.0).round() as u8;
                let (base, shade) = if m <= 8 {
                    (ramp(m), 1.0)
                } else {
                    (255, 1.0 - 0.15 * (m - 8) as f64)
                };
                let dim = |v: u8| (v as f64 * shade).round() as u8;
                if c > 0 {
                    [dim(255), dim(base), 0]
                } else {
                    [0, dim(base), dim(255)]
                }
            }
        }
    }

    /// Whether distinct cells among `cells` get distinct colors.
    pub fn injective_on<I: IntoIterator<Item = Cell>>(&self, cells: I) -> bool {
        let mut seen = std::collections::HashMap::new();
        for c in cells {
            if let Some(prev) = seen.insert(self.rgb(c), c) {
                if prev != c {
                    return false;
                }
            }
        }
        true
    }
}

/// An 8-bit RGB image, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let o = 3 * (y * self.width + x);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    /// Binary PPM with an optional comment line after the magic number.
    pub fn to_ppm(&self, comment: Option<&str>) -> Vec<u8> {
        let mut out = b"P6\n".to_vec();
        if let Some(c) = comment {
            for line in c.lines() {
                out.extend_from_slice(b"# ");
                out.extend_from_slice(line.as_bytes());
                out.push(b'\n');
            }
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Nearest-cell rasterization: columns by mu index, rows by flux value with
/// the largest flux at the top.
pub fn render(
    diagram: &PhaseDiagram,
    colors: &ColorMap,
    width: usize,
    height: usize,
) -> Result<Raster> {
    if width < 16 || height < 16 {
        return Err(Error::InvalidArgument(format!(
            "image {width}x{height} smaller than 16x16"
        )));
    }
    if diagram.rows() == 0 || diagram.cols() == 0 {
        return Err(Error::InvalidArgument("empty diagram".into()));
    }
    let values: Vec<f64> = diagram.flux_axis.iter().map(|f| f.value()).collect();
    let (lo, hi) = (values[0], values[values.len() - 1]);
    let row_for = |y: usize| -> usize {
        if values.len() == 1 {
            return 0;
        }
        let v = hi - (y as f64 + 0.5) / height as f64 * (hi - lo);
        // first row at or above v, then pick the nearer neighbor
        let k = values.partition_point(|&x| x < v);
        if k == 0 {
            0
        } else if k == values.len() || v - values[k - 1] <= values[k] - v {
            k - 1
        } else {
            k
        }
    };
    let cols = diagram.cols();
    let pixels = (0..height)
        .into_par_iter()
        .flat_map_iter(|y| {
            let row = row_for(y);
            (0..width).flat_map(move |x| {
                let i = ((x as f64 + 0.5) * cols as f64 / width as f64) as usize;
                colors.rgb(diagram.cell(row, i.min(cols - 1)))
            })
        })
        .collect();
    Ok(Raster {
        width,
        height,
        pixels,
    })
}
