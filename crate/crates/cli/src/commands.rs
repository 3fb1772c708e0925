use serde_json::json;

use qhall::berry::holonomy::{angle_distance, closed_form_holonomy};
use qhall::berry::monopole::band_transition_winding;
use qhall::berry::{
    adiabatic_response_check, band_chern, chern_number, gap_chern, latitude_holonomy, ClosedMesh,
    MonopoleBand, MonopoleFamily, SpinFamily,
};
use qhall::butterfly::{compute_diagram, render, Cell, ColorMap, DiagramParams};
use qhall::diophantine::{
    gap_label, hall_conductance_at, split_landau_conductance_at, split_landau_label,
    HallConductance,
};
use qhall::fredholm::{estimate, index_convergence_scan, LatticeModel, ScanReport};
use qhall::hofstadter::{band_gaps, band_structure, MomentumMesh};
use qhall::{reduce_flux, RationalFlux};

use crate::output::{emit, Echo};
use crate::*;

pub(crate) fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Spectrum(a) => spectrum(a),
        Command::Gaps(a) => gaps(a),
        Command::Chern(a) => chern(a),
        Command::Label(a) => label(a),
        Command::Butterfly(a) => butterfly(a),
        Command::Monopole(a) => monopole(a),
        Command::Holonomy(a) => holonomy(a),
        Command::PumpCheck(a) => pump_check(a),
        Command::Index(a) => index(a),
        Command::IndexScan(a) => index_scan(a),
    }
}

fn flux(a: &FluxArgs) -> Result<RationalFlux, CliError> {
    Ok(reduce_flux(a.p, a.q)?)
}

fn spectrum(a: &SpectrumArgs) -> Result<(), CliError> {
    let f = flux(&a.flux)?;
    if a.nk == 0 {
        return Err(CliError::Usage("--nk must be positive".into()));
    }
    let bands = band_structure(f, MomentumMesh::square(a.nk))?;
    let mut header = vec!["k1".to_string(), "k2".to_string()];
    header.extend((1..=f.q()).map(|n| format!("E_{n}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = bands.energies.iter().enumerate().map(|(idx, e)| {
        let k = bands.momentum(idx);
        let mut row = vec![k.k1.to_string(), k.k2.to_string()];
        row.extend(e.iter().map(f64::to_string));
        row
    });
    let echo = Echo::new("spectrum", a);
    emit(a.out.as_deref(), &echo.csv(&header, rows)?)
}

fn gaps(a: &GapsArgs) -> Result<(), CliError> {
    let f = flux(&a.flux)?;
    let windows = band_gaps(f, MomentumMesh::square(a.mesh))?;
    let mut rows = Vec::new();
    for g in windows {
        let label = gap_label(f, g.r as i64)?;
        rows.push(vec![
            g.r.to_string(),
            g.e_low.to_string(),
            g.e_high.to_string(),
            g.midpoint().to_string(),
            g.width().to_string(),
            label.s.to_string(),
            label.t.to_string(),
        ]);
    }
    let echo = Echo::new("gaps", a);
    let header = ["r", "e_low", "e_high", "midpoint", "width", "s", "t"];
    emit(a.out.as_deref(), &echo.csv(&header, rows)?)
}

fn chern(a: &ChernArgs) -> Result<(), CliError> {
    let f = flux(&a.flux)?;
    let mesh = MomentumMesh::square(a.mesh);
    let result = match (a.band, a.gap) {
        (Some(0), _) => return Err(CliError::Usage("bands are numbered from 1".into())),
        (Some(n), _) => {
            let c = band_chern(f, mesh, n - 1)?;
            json!({ "band": n, "chern": c.value, "curvature_sum": c.curvature_sum, "residue": c.residue })
        }
        (None, Some(r)) => {
            let label = gap_label(f, r as i64)?;
            let c = gap_chern(f, mesh, r)?;
            json!({
                "gap": r,
                "chern": c.value,
                "curvature_sum": c.curvature_sum,
                "residue": c.residue,
                "diophantine_t": label.t,
            })
        }
        (None, None) => unreachable!("clap requires a selector"),
    };
    emit(a.out.as_deref(), &Echo::new("chern", a).document(&result)?)
}

fn label(a: &LabelArgs) -> Result<(), CliError> {
    let f = flux(&a.flux)?;
    let split = a.mode == ModeArg::SplitLandau;
    let result = if let Some(r) = a.r {
        let l = if split {
            split_landau_label(f, r)?
        } else {
            gap_label(f, r)?
        };
        let conductance = if split { l.s } else { l.t };
        json!({ "r": l.r, "s": l.s, "t": l.t, "hall_conductance": conductance })
    } else {
        let mu = a.mu.expect("clap requires a selector");
        let mesh = MomentumMesh::square(a.mesh);
        let c = if split {
            split_landau_conductance_at(mu, f, mesh)?
        } else {
            hall_conductance_at(mu, f, mesh)?
        };
        match c {
            HallConductance::Quantized(v) => json!({ "mu": mu, "hall_conductance": v }),
            HallConductance::NotInGap => {
                return Err(CliError::Failed(format!(
                    "mu = {mu} is not in a gap at {f}"
                )))
            }
        }
    };
    emit(a.out.as_deref(), &Echo::new("label", a).document(&result)?)
}

fn butterfly(a: &ButterflyArgs) -> Result<(), CliError> {
    if a.out.is_none() && a.data.is_none() {
        return Err(CliError::Usage(
            "butterfly needs --out, --data or both".into(),
        ));
    }
    let params = DiagramParams {
        mode: a.mode.into(),
        mu_min: a.mu_min,
        mu_max: a.mu_max,
        mu_steps: a.mu_steps,
        q_max: a.qmax,
        flux_min: a.flux_min,
        flux_max: a.flux_max,
        mesh: a.mesh,
    };
    let diagram = compute_diagram(&params)?;
    let echo = Echo::new("butterfly", a);
    if let Some(path) = &a.out {
        let image = render(
            &diagram,
            &ColorMap::default(),
            a.width.unwrap_or(a.mu_steps),
            a.height,
        )?;
        emit(Some(path), &image.to_ppm(Some(&echo.line())))?;
    }
    if let Some(path) = &a.data {
        let cols = diagram.cols();
        let rows = diagram.cells.iter().enumerate().map(|(idx, cell)| {
            let f = diagram.flux_axis[idx / cols];
            let chern = match cell {
                Cell::Chern(c) => c.to_string(),
                Cell::InBand => "band".to_string(),
            };
            [
                diagram.mu_axis[idx % cols].to_string(),
                f.numerator().to_string(),
                f.q().to_string(),
                chern,
            ]
        });
        emit(Some(path), &echo.csv(&["mu", "p", "q", "chern"], rows)?)?;
    }
    Ok(())
}

fn monopole(a: &MonopoleArgs) -> Result<(), CliError> {
    let lat = a.latitude.to_radians();
    let mut bands = Vec::new();
    for band in [MonopoleBand::Ground, MonopoleBand::Excited] {
        let family = MonopoleFamily { band };
        let c = chern_number(&family, &ClosedMesh::sphere(a.n_theta, a.n_phi))?;
        let fine = chern_number(&family, &ClosedMesh::sphere(2 * a.n_theta, 2 * a.n_phi))?;
        bands.push(json!({
            "band": band,
            "chern": c.value,
            "curvature_sum": c.curvature_sum,
            "chern_doubled_grid": fine.value,
            "winding": band_transition_winding(lat, a.winding_steps, band)?,
        }));
    }
    emit(
        a.out.as_deref(),
        &Echo::new("monopole", a).document(&bands)?,
    )
}

fn holonomy(a: &HolonomyArgs) -> Result<(), CliError> {
    let lat = a.latitude.to_radians();
    let h = latitude_holonomy(lat, a.steps)?;
    let exact = closed_form_holonomy(lat);
    let result = json!({
        "holonomy": h,
        "closed_form": exact,
        "difference": angle_distance(h, exact),
    });
    emit(
        a.out.as_deref(),
        &Echo::new("holonomy", a).document(&result)?,
    )
}

fn pump_check(a: &PumpArgs) -> Result<(), CliError> {
    let report = adiabatic_response_check(&SpinFamily, a.theta0, a.rate, a.fraction)?;
    emit(
        a.out.as_deref(),
        &Echo::new("pump-check", a).document(&report)?,
    )
}

fn model(
    l: usize,
    f: &FluxArgs,
    disorder: f64,
    seed: u64,
    b: BoundaryArg,
) -> Result<LatticeModel, CliError> {
    Ok(LatticeModel::clean(l, flux(f)?, b.into()).with_disorder(disorder, seed))
}

fn index(a: &IndexArgs) -> Result<(), CliError> {
    let m = model(a.l, &a.flux, a.disorder, a.seed, a.boundary)?;
    let e = estimate(&m, a.ef)?;
    emit(a.out.as_deref(), &Echo::new("index", a).document(&e)?)
}

fn index_scan(a: &IndexScanArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    let first = *a.sizes.first().expect("clap requires sizes");
    let mut entries = Vec::new();
    for seed in a.seed..a.seed + a.samples {
        let template = model(first, &a.flux, a.disorder, seed, a.boundary)?;
        entries.extend(index_convergence_scan(&template, a.ef, &a.sizes)?);
    }
    let report = ScanReport {
        flux: flux(&a.flux)?.to_string(),
        fermi_energy: a.ef,
        disorder: a.disorder,
        boundary: a.boundary.into(),
        entries,
    };
    emit(
        a.out.as_deref(),
        &Echo::new("index-scan", a).document(&report)?,
    )
}
