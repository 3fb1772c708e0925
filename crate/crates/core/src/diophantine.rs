//! Gap labelling by the Diophantine equation `r = s q + t p`.
//!
//! For flux `p/q` the `r`-th gap (with `r` of the `q` bands filled) carries the
//! unique solution with `|t| < q/2`; `t` is the Hall conductance in units of
//! e^2/h. Everything here is exact integer arithmetic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hofstadter::{band_structure, GapWindow, MomentumMesh, RationalFlux, MIN_GAP_MESH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GapLabel {
    /// Number of filled bands.
    pub r: i64,
    pub s: i64,
    /// Hall conductance of the gap in the tight-binding reading.
    pub t: i64,
}

/// Extended Euclid: `(g, x, y)` with `a x + b y = g`.
fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_x, mut x) = (1i64, 0i64);
    let (mut old_y, mut y) = (0i64, 1i64);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_x, x) = (x, old_x - quot * x);
        (old_y, y) = (y, old_y - quot * y);
    }
    (old_r, old_x, old_y)
}

/// Label of gap `r` at `flux`, using the flux's signed numerator.
pub fn gap_label(flux: RationalFlux, r: i64) -> Result<GapLabel> {
    let (p, q) = (flux.numerator(), flux.q());
    if q < 2 || r < 1 || r > q - 1 {
        return Err(Error::InvalidGapIndex { r, q });
    }
    let (g, p_inv, _) = extended_gcd(p.rem_euclid(q), q);
    debug_assert_eq!(g, 1, "flux is stored in lowest terms");
    let mut t = ((r % q) * p_inv.rem_euclid(q)).rem_euclid(q);
    if 2 * t > q {
        t -= q;
    }
    if 2 * t.abs() == q {
        return Err(Error::AmbiguousLabel { p, q, r });
    }
    let rest = r - t * p;
    debug_assert_eq!(rest % q, 0);
    Ok(GapLabel { r, s: rest / q, t })
}

/// Label for the split-Landau-level reading of the same model: the
/// tight-binding label at the inverted flux `q/p`. In this reading the Hall
/// conductance of the gap is `s`, not `t`.
pub fn split_landau_label(flux_ratio: RationalFlux, r: i64) -> Result<GapLabel> {
    gap_label(flux_ratio.inverted()?, r)
}

/// Hall conductance at a chemical potential, or a report that `mu` sits in a
/// band (or on a gap edge).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HallConductance {
    Quantized(i64),
    NotInGap,
}

impl HallConductance {
    pub fn value(&self) -> Option<i64> {
        match self {
            HallConductance::Quantized(t) => Some(*t),
            HallConductance::NotInGap => None,
        }
    }
}

/// Gap windows and spectral bounds of one flux, reusable across many `mu`.
#[derive(Debug, Clone)]
pub struct GapLabelling {
    pub flux: RationalFlux,
    pub gaps: Vec<GapWindow>,
    pub e_min: f64,
    pub e_max: f64,
}

impl GapLabelling {
    pub fn new(flux: RationalFlux, mesh: MomentumMesh) -> Result<Self> {
        if mesh.n1 < MIN_GAP_MESH || mesh.n2 < MIN_GAP_MESH {
            return Err(Error::InvalidMesh(format!(
                "gap detection needs at least {MIN_GAP_MESH}x{MIN_GAP_MESH}"
            )));
        }
        let bands = band_structure(flux, mesh)?;
        let (e_min, e_max) = bands.bounds();
        Ok(Self {
            flux,
            gaps: bands.gaps(),
            e_min,
            e_max,
        })
    }

    fn classify(&self, mu: f64) -> Position {
        if mu < self.e_min {
            Position::Below
        } else if mu > self.e_max {
            Position::Above
        } else {
            self.gaps
                .iter()
                .find(|g| g.contains(mu))
                .map_or(Position::InBand, |g| Position::Gap(g.r as i64))
        }
    }

    /// Tight-binding Hall conductance at `mu`.
    pub fn conductance_at(&self, mu: f64) -> Result<HallConductance> {
        Ok(match self.classify(mu) {
            Position::Below | Position::Above => HallConductance::Quantized(0),
            Position::InBand => HallConductance::NotInGap,
            Position::Gap(r) => HallConductance::Quantized(gap_label(self.flux, r)?.t),
        })
    }

    /// Split-Landau-level Hall conductance at `mu`, with `self.flux` the
    /// inverted (tight-binding) flux: zero below the level, one above it, and
    /// the `s` integer of the gap label inside a gap.
    pub fn split_landau_conductance_at(&self, mu: f64) -> Result<HallConductance> {
        Ok(match self.classify(mu) {
            Position::Below => HallConductance::Quantized(0),
            Position::Above => HallConductance::Quantized(1),
            Position::InBand => HallConductance::NotInGap,
            Position::Gap(r) => HallConductance::Quantized(gap_label(self.flux, r)?.s),
        })
    }
}

enum Position {
    Below,
    Above,
    InBand,
    Gap(i64),
}

pub fn hall_conductance_at(
    mu: f64,
    flux: RationalFlux,
    mesh: MomentumMesh,
) -> Result<HallConductance> {
    GapLabelling::new(flux, mesh)?.conductance_at(mu)
}

/// Split-Landau Hall conductance at vertical coordinate `flux_ratio`.
pub fn split_landau_conductance_at(
    mu: f64,
    flux_ratio: RationalFlux,
    mesh: MomentumMesh,
) -> Result<HallConductance> {
    GapLabelling::new(flux_ratio.inverted()?, mesh)?.split_landau_conductance_at(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hofstadter::reduce_flux;
    use proptest::prelude::*;

    fn flux(p: i64, q: i64) -> RationalFlux {
        reduce_flux(p, q).unwrap()
    }

    /// Every `(s, t)` with `|t| <= q/2` solving `r = s q + t p`.
    fn brute_force(p: i64, q: i64, r: i64) -> Vec<(i64, i64)> {
        (-q / 2..=q / 2)
            .filter(|t| (r - t * p) % q == 0)
            .map(|t| ((r - t * p) / q, t))
            .collect()
    }

    #[test]
    fn documented_labels() {
        assert_eq!(
            gap_label(flux(1, 3), 1).unwrap(),
            GapLabel { r: 1, s: 0, t: 1 }
        );
        assert_eq!(
            gap_label(flux(2, 5), 1).unwrap(),
            GapLabel { r: 1, s: 1, t: -2 }
        );
        assert_eq!(
            gap_label(flux(1, 3), 2).unwrap(),
            GapLabel { r: 2, s: 1, t: -1 }
        );
        assert_eq!(brute_force(1, 3, 1), [(0, 1)]);
        assert_eq!(brute_force(2, 5, 1), [(1, -2)]);
    }

    #[test]
    fn band_cherns_from_consecutive_differences() {
        let f = flux(1, 3);
        let t: Vec<i64> = std::iter::once(0)
            .chain((1..3).map(|r| gap_label(f, r).unwrap().t))
            .chain(std::iter::once(0))
            .collect();
        let bands: Vec<i64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(bands, [1, -2, 1]);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            gap_label(flux(1, 2), 1),
            Err(Error::AmbiguousLabel { .. })
        ));
        assert!(matches!(
            gap_label(flux(1, 4), 2),
            Err(Error::AmbiguousLabel { .. })
        ));
        assert!(matches!(
            gap_label(flux(1, 3), 0),
            Err(Error::InvalidGapIndex { .. })
        ));
        assert!(matches!(
            gap_label(flux(1, 3), 3),
            Err(Error::InvalidGapIndex { .. })
        ));
        assert!(matches!(
            gap_label(flux(0, 1), 1),
            Err(Error::InvalidGapIndex { .. })
        ));
        assert!(matches!(
            split_landau_label(flux(0, 1), 1),
            Err(Error::InvalidFlux(_))
        ));
    }

    #[test]
    fn split_landau_examples() {
        assert_eq!(flux(1, 3).inverted().unwrap(), flux(3, 1));
        // vertical coordinate 3/2 is the tight-binding model at 2/3
        let l = split_landau_label(flux(3, 2), 1).unwrap();
        assert_eq!((l.s, l.t), (1, -1));
        assert_eq!(brute_force(2, 3, 1), [(1, -1)]);
    }

    #[test]
    fn conductance_outside_and_inside() {
        let mesh = MomentumMesh::square(32);
        for (p, q) in [(1, 3), (2, 5), (1, 2)] {
            let f = flux(p, q);
            assert_eq!(
                hall_conductance_at(-5.0, f, mesh).unwrap(),
                HallConductance::Quantized(0)
            );
            assert_eq!(
                hall_conductance_at(5.0, f, mesh).unwrap(),
                HallConductance::Quantized(0)
            );
        }
        assert_eq!(
            hall_conductance_at(0.0, flux(1, 2), mesh).unwrap(),
            HallConductance::NotInGap
        );
        assert_eq!(
            hall_conductance_at(-1.4, flux(1, 3), mesh).unwrap(),
            HallConductance::Quantized(1)
        );
        assert_eq!(
            hall_conductance_at(1.4, flux(1, 3), mesh).unwrap(),
            HallConductance::Quantized(-1)
        );
        // inside the lowest band of 1/3
        assert_eq!(
            hall_conductance_at(-2.5, flux(1, 3), mesh).unwrap(),
            HallConductance::NotInGap
        );
    }

    #[test]
    fn gap_edges_are_not_interior() {
        let labelling = GapLabelling::new(flux(1, 3), MomentumMesh::square(32)).unwrap();
        let g = labelling.gaps[0];
        assert_eq!(
            labelling.conductance_at(g.e_low).unwrap(),
            HallConductance::NotInGap
        );
        assert_eq!(
            labelling.conductance_at(g.e_high).unwrap(),
            HallConductance::NotInGap
        );
    }

    #[test]
    fn split_landau_not_antisymmetric() {
        let mesh = MomentumMesh::square(32);
        let f = flux(3, 1);
        assert_eq!(
            split_landau_conductance_at(-5.0, f, mesh).unwrap(),
            HallConductance::Quantized(0)
        );
        assert_eq!(
            split_landau_conductance_at(5.0, f, mesh).unwrap(),
            HallConductance::Quantized(1)
        );
    }

    proptest! {
        #[test]
        fn label_is_exact_and_unique(q in 2i64..40, p_raw in -200i64..200, r_raw in 1i64..1000) {
            let f = reduce_flux(p_raw, q).unwrap();
            prop_assume!(f.q() >= 2);
            let (p, q) = (f.numerator(), f.q());
            let r = 1 + r_raw % (q - 1);
            let strict: Vec<_> = brute_force(p, q, r)
                .into_iter()
                .filter(|&(_, t)| 2 * t.abs() < q)
                .collect();
            match gap_label(f, r) {
                Ok(l) => {
                    prop_assert_eq!(l.r, l.s * q + l.t * p);
                    prop_assert_eq!(strict, vec![(l.s, l.t)]);
                }
                Err(Error::AmbiguousLabel { .. }) => {
                    prop_assert!(strict.is_empty());
                    prop_assert_eq!(q % 2, 0);
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn periodic_and_antisymmetric(q in 2i64..30, p_raw in 0i64..30, shift in -3i64..3) {
            let f = reduce_flux(p_raw, q).unwrap();
            prop_assume!(f.q() >= 2);
            for r in 1..f.q() {
                if let Ok(l) = gap_label(f, r) {
                    prop_assert_eq!(gap_label(f.shifted(shift), r).unwrap().t, l.t);
                    prop_assert_eq!(gap_label(f.negated(), r).unwrap().t, -l.t);
                }
            }
        }
    }
}
