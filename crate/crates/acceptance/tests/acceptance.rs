//! Acceptance criteria, one line each. Exits non-zero if any fails.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use qhall::berry::holonomy::{angle_distance, closed_form_holonomy};
use qhall::berry::monopole::band_transition_winding;
use qhall::berry::response::{adiabatic_response_with, ResponseOptions};
use qhall::berry::{
    chern_number, gap_chern, latitude_holonomy, BlochBands, ClosedMesh, MonopoleBand,
    MonopoleFamily, SpinFamily,
};
use qhall::butterfly::{compute_diagram, render, ColorMap, DiagramParams, Mode};
use qhall::diophantine::gap_label;
use qhall::fredholm::{
    default_radius, disorder_ensemble, Boundary, FluxUnitary, LatticeModel, TorusProjector,
};
use qhall::hofstadter::{band_gaps, farey_fluxes, MomentumMesh};
use qhall::reduce_flux;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fail(e: impl std::fmt::Display) -> Outcome {
    outcome(false, format!("error: {e}"))
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

/// Diophantine t, filled-band Chern number and finite-volume index for every
/// open gap with q <= 8.
fn agreement_triangle() -> Outcome {
    let start = Instant::now();
    let mesh = MomentumMesh::square(32);
    let mut cases = Vec::new();
    for f in farey_fluxes(8, 0.0, 1.0) {
        let gaps = match band_gaps(f, mesh) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        cases.extend(gaps.into_iter().map(|g| (f, g)));
    }
    let mut bad = Vec::new();
    for (f, g) in &cases {
        let r = g.r as i64;
        let t = gap_label(*f, r).map(|l| l.t);
        let c = gap_chern(*f, mesh, g.r).map(|c| c.value);
        let l = 12 * f.q() as usize;
        let idx = TorusProjector::new(*f, l, g.midpoint())
            .and_then(|p| p.local_trace(&FluxUnitary::centered(l)?, default_radius(l)));
        match (t, c, idx) {
            (Ok(t), Ok(c), Ok(tr)) => {
                let rounded = tr.re.round() as i64;
                let residue = (tr.re - tr.re.round()).abs();
                if !(t == c && c == rounded && residue < 0.1) {
                    bad.push(format!(
                        "{f} r={r}: t={t} chern={c} trace={:.4} (gap width {:.4})",
                        tr.re,
                        g.width()
                    ));
                }
            }
            (t, c, i) => bad.push(format!("{f} r={r}: {t:?} {c:?} {i:?}")),
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed < Duration::from_secs(600);
    let mut detail = format!(
        "{}/{} gaps agree, {}",
        cases.len() - bad.len(),
        cases.len(),
        secs(elapsed)
    );
    for b in bad {
        detail.push_str(&format!("\n      {b}"));
    }
    outcome(pass, detail)
}

fn diagram(
    mode: Mode,
    flux_min: f64,
    flux_max: f64,
) -> qhall::Result<qhall::butterfly::PhaseDiagram> {
    compute_diagram(&DiagramParams {
        mode,
        q_max: 12,
        mu_steps: 512,
        flux_min,
        flux_max,
        ..Default::default()
    })
}

fn tight_binding_symmetries() -> Outcome {
    let d = match diagram(Mode::TightBinding, -1.0, 2.0) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let r = d.symmetry_violations();
    let counts = [&r.period, &r.mu_reflection, &r.flux_reflection];
    let pass = counts
        .iter()
        .all(|c| c.witnesses.is_empty() && c.checked > 0);
    outcome(
        pass,
        format!(
            "violations: period {}/{}, mu-reflection {}/{}, flux-reflection {}/{}",
            r.period.witnesses.len(),
            r.period.checked,
            r.mu_reflection.witnesses.len(),
            r.mu_reflection.checked,
            r.flux_reflection.witnesses.len(),
            r.flux_reflection.checked
        ),
    )
}

fn split_landau_contrast() -> Outcome {
    let d = match diagram(Mode::SplitLandau, 0.0, 2.0) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let r = d.symmetry_violations();
    let first = |c: &qhall::butterfly::SymmetryCheck| {
        c.witnesses
            .first()
            .map_or("none".to_string(), |w| w.to_string())
    };
    let pass = [&r.period, &r.mu_reflection, &r.flux_reflection]
        .iter()
        .all(|c| !c.witnesses.is_empty());
    outcome(
        pass,
        format!(
            "period: {}; mu-reflection: {}; flux-reflection: {}",
            first(&r.period),
            first(&r.mu_reflection),
            first(&r.flux_reflection)
        ),
    )
}

fn monopole() -> Outcome {
    let start = Instant::now();
    let run = || -> qhall::Result<(i64, i64, i64)> {
        let family = MonopoleFamily {
            band: MonopoleBand::Ground,
        };
        let c = chern_number(&family, &ClosedMesh::sphere(24, 48))?.value;
        let fine = chern_number(&family, &ClosedMesh::sphere(48, 96))?.value;
        let w = band_transition_winding(0.0, 64, MonopoleBand::Ground)?;
        Ok((c, fine, w))
    };
    match run() {
        Ok((c, fine, w)) => {
            let elapsed = start.elapsed();
            outcome(
                c.abs() == 1 && fine == c && w == 1 && elapsed < Duration::from_secs(1),
                format!(
                    "chern {c}, doubled grid {fine}, winding {w}, {}",
                    secs(elapsed)
                ),
            )
        }
        Err(e) => fail(e),
    }
}

fn holonomy() -> Outcome {
    let mut worst: f64 = 0.0;
    for deg in [-60.0f64, -30.0, 0.0, 30.0, 60.0] {
        let lat = deg.to_radians();
        match latitude_holonomy(lat, 100_000) {
            Ok(h) => worst = worst.max(angle_distance(h, closed_form_holonomy(lat))),
            Err(e) => return fail(e),
        }
    }
    outcome(worst <= 1e-6, format!("max deviation {worst:.2e}"))
}

fn adiabatic_response() -> Outcome {
    let options = ResponseOptions {
        tolerance: 1e-13,
        max_step: 0.02,
        ..Default::default()
    };
    let slow = adiabatic_response_with(&SpinFamily, 0.0, 1e-4, 0.25, options);
    let fast = adiabatic_response_with(&SpinFamily, 0.0, 1e-3, 0.25, options);
    match (fast, slow) {
        (Ok(f), Ok(s)) => {
            let ratio = f.relative_error / s.relative_error;
            let pass = f.relative_error <= 0.05
                && s.relative_error <= 0.005
                && (5.0..=20.0).contains(&ratio);
            outcome(
                pass,
                format!(
                    "predicted {:.6}, relative error {:.3e} at 1e-3, {:.3e} at 1e-4, ratio {ratio:.1}",
                    f.predicted, f.relative_error, s.relative_error
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => fail(e),
    }
}

fn whole_space() -> Outcome {
    let mesh = MomentumMesh::square(32);
    let fluxes: Vec<_> = (2..=8)
        .flat_map(|q| (0..q).filter_map(move |p| reduce_flux(p, q).ok().filter(|f| f.q() == q)))
        .collect();
    let results: Vec<_> = fluxes
        .par_iter()
        .map(|&f| {
            let q = f.q() as usize;
            BlochBands::new(f, 0..q)
                .and_then(|b| chern_number(&b, &ClosedMesh::brillouin_zone(f, mesh)))
                .map(|c| (f, c.value))
        })
        .collect();
    let mut bad = Vec::new();
    for r in &results {
        match r {
            Ok((_, 0)) => {}
            Ok((f, c)) => bad.push(format!("{f}: {c}")),
            Err(e) => bad.push(e.to_string()),
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} fluxes, nonzero: [{}]", results.len(), bad.join(", ")),
    )
}

fn disorder() -> Outcome {
    let f = reduce_flux(1, 3).unwrap();
    let run = || -> qhall::Result<_> {
        let e_f = band_gaps(f, MomentumMesh::square(64))?[0].midpoint();
        let template = LatticeModel::clean(24, f, Boundary::Open).with_disorder(1.0, 1);
        disorder_ensemble(&template, e_f, &[1, 2, 3, 4, 5])
    };
    match run() {
        Ok(entries) => {
            let pass = entries
                .iter()
                .all(|e| e.estimate.rounded == 1 && e.estimate.residue < 0.2);
            let list: Vec<String> = entries
                .iter()
                .map(|e| format!("{}:{:.4}", e.seed, e.estimate.trace_value))
                .collect();
            outcome(pass, format!("traces {}", list.join(" ")))
        }
        Err(e) => fail(e),
    }
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let mut outputs = Vec::new();
    for threads in [1, 4, 8] {
        let ppm = dir.path().join(format!("t{threads}.ppm"));
        let csv = dir.path().join(format!("t{threads}.csv"));
        let code = qhall_cli::run([
            "qhall".into(),
            "butterfly".into(),
            "--qmax".into(),
            "12".into(),
            "--threads".into(),
            threads.to_string().into(),
            "--out".into(),
            ppm.clone().into_os_string(),
            "--data".into(),
            csv.clone().into_os_string(),
        ] as [std::ffi::OsString; 10]);
        if code != 0 {
            return fail(format!("butterfly exited with {code}"));
        }
        match (std::fs::read(&ppm), std::fs::read(&csv)) {
            (Ok(a), Ok(b)) => outputs.push((a, b)),
            (Err(e), _) | (_, Err(e)) => return fail(e),
        }
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!(
            "{} image bytes, {} data bytes, threads 1/4/8",
            outputs[0].0.len(),
            outputs[0].1.len()
        ),
    )
}

fn performance() -> Outcome {
    let start = Instant::now();
    let params = DiagramParams {
        q_max: 20,
        mu_steps: 512,
        ..Default::default()
    };
    let result = compute_diagram(&params)
        .and_then(|d| render(&d, &ColorMap::default(), 512, 512).map(|img| (d.rows(), img)));
    match result {
        Ok((rows, _)) => {
            let elapsed = start.elapsed();
            outcome(
                elapsed < Duration::from_secs(60),
                format!(
                    "{rows} flux rows in {} on {} threads",
                    secs(elapsed),
                    rayon::current_num_threads()
                ),
            )
        }
        Err(e) => fail(e),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    faer::set_global_parallelism(faer::Par::Seq);
    let criteria: [Criterion; 10] = [
        ("1 agreement triangle", agreement_triangle),
        ("2 tight-binding symmetries", tight_binding_symmetries),
        ("3 split-landau contrast", split_landau_contrast),
        ("4 monopole", monopole),
        ("5 holonomy", holonomy),
        ("6 adiabatic response", adiabatic_response),
        ("7 whole-space triviality", whole_space),
        ("8 disorder robustness", disorder),
        ("9 determinism", determinism),
        ("10 performance", performance),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
