use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::BathSpec;
use crate::dynamics::{
    estimate_period, evolve_with, fidelity_series, site_state, survival_probability, trajectory_ipr, window_mean,
    EvolveOptions, TimeGrid,
};
use crate::lattice::{
    build_lattice, classify_edge_modes, eigensystem, find_gaps, inverse_participation_ratio, peak_site, Boundary,
    Edge, EdgeCriteria, EigenSystem, GapKind, LatticeSpec,
};
use crate::oracle::{
    commensurate_levels_q3, discretize_bath, exact_cross_check, kernel_by_quadrature, CrossCheckReport,
    CrossCheckRequest,
};
use crate::spectral::{bound_state_weight, find_bound_states, roots_between_poles, BoundKind, BoundStates, SearchOptions};

use super::config::{InitialKind, Scenario, SweepAxis, Task};
use super::{fmt_num, Artifact, CliError, Csv};

type Outcome = Result<(Vec<Artifact>, String), CliError>;

pub(super) fn run(sc: &Scenario) -> Outcome {
    match sc.task {
        Task::Spectrum => spectrum(sc),
        Task::Bound | Task::Bic => bound(sc),
        Task::Evolve => evolve(sc),
        Task::Sweep => sweep(sc),
        Task::Oracle => oracle(sc),
        Task::KernelCheck => kernel_check(sc),
    }
}

fn rt<T>(r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::runtime)
}

fn system(spec: &LatticeSpec) -> Result<EigenSystem, CliError> {
    rt(eigensystem(&build_lattice(spec)))
}

fn search_options(sc: &Scenario) -> SearchOptions {
    SearchOptions {
        min_gap_width: sc.min_gap_width,
        grid_points: sc.grid_points,
        include_positive: sc.include_positive,
        gaps: None,
    }
}

fn criteria(sc: &Scenario) -> EdgeCriteria {
    EdgeCriteria { ipr_threshold: sc.edge_ipr, edge_window: sc.edge_window }
}

fn edge_tags(es: &EigenSystem, sc: &Scenario) -> Result<Vec<&'static str>, CliError> {
    let mut tags = vec!["none"; es.len()];
    if sc.lattice.boundary() == Boundary::Open {
        let gaps = rt(find_gaps(es, sc.min_gap_width))?;
        for m in classify_edge_modes(es, &gaps, &criteria(sc)) {
            tags[m.index] = match m.end {
                Edge::Left => "left",
                Edge::Right => "right",
            };
        }
    }
    Ok(tags)
}

fn spectrum(sc: &Scenario) -> Outcome {
    let es = system(&sc.lattice)?;
    let tags = edge_tags(&es, sc)?;
    let mut csv = Csv::new(&["index", "energy", "ipr", "w", "edge_tag"]);
    for (i, tag) in tags.iter().enumerate() {
        let ipr = rt(inverse_participation_ratio(es.mode(i).as_slice()))?;
        csv.row(&[(i + 1).to_string(), fmt_num(es.energies[i]), fmt_num(ipr), fmt_num(es.weights[i]), (*tag).into()]);
    }
    let mut summary = format!("lattice spectrum: {} levels in [{:.6}, {:.6}]\n", es.len(), es.min_energy(), es.max_energy());
    for g in rt(find_gaps(&es, sc.min_gap_width))?.iter().filter(|g| g.kind == GapKind::Interior) {
        let _ = writeln!(summary, "interior gap ({:.6}, {:.6}), width {:.6}", g.lower, g.upper, g.width());
    }
    for (i, t) in tags.iter().enumerate().filter(|(_, t)| **t != "none") {
        let _ = writeln!(summary, "edge mode {} at E = {:.6}, {t} end", i + 1, es.energies[i]);
    }
    Ok((vec![csv.into_artifact("spectrum.csv")], summary))
}

pub(super) const BOUND_HEADER: [&str; 8] = ["kind", "energy", "ipr", "d", "sum_alpha", "loc_site", "gap_lo", "gap_hi"];

fn bound_row(b: &crate::spectral::BoundState) -> Vec<String> {
    vec![
        b.kind.to_string(),
        fmt_num(b.energy),
        fmt_num(b.ipr),
        fmt_num(b.emission),
        fmt_num(b.sum_alpha),
        (b.loc_site + 1).to_string(),
        fmt_num(b.gap.0),
        fmt_num(b.gap.1),
    ]
}

fn initial_state(sc: &Scenario, es: &EigenSystem) -> Result<Vec<Complex64>, CliError> {
    match sc.initial {
        InitialKind::Site => rt(site_state(es.len(), sc.n0 - 1)),
        InitialKind::Mode => Ok(es.mode(sc.n0 - 1).into_iter().map(|x| Complex64::new(x, 0.0)).collect()),
    }
}

fn describe_bound(found: &BoundStates) -> String {
    let mut s = String::new();
    for b in &found.states {
        let _ = write!(
            s,
            "{:<10} E = {:.6}  IPR = {:.4}  d = {:.4e}  d/(1+d) = {:.4}  site {}",
            b.kind.as_str(),
            b.energy,
            b.ipr,
            b.emission,
            b.bath_fraction(),
            b.loc_site + 1
        );
        if !b.emission_is_physical() {
            s.push_str("  (principal-value d, not an emission probability)");
        }
        s.push('\n');
    }
    for w in &found.warnings {
        let _ = writeln!(s, "warning: sign change in ({}, {}) did not refine, |F| = {:.3e}", w.lower, w.upper, w.residual);
    }
    s.push_str("amplitudes are normalized on the chain; the full state has norm 1 + d\n");
    s
}

fn bound(sc: &Scenario) -> Outcome {
    let es = system(&sc.lattice)?;
    let found = rt(find_bound_states(&es, &sc.bath, &search_options(sc)))?;
    let mut csv = Csv::new(&BOUND_HEADER);
    for b in &found.states {
        csv.row(&bound_row(b));
    }
    let mut artifacts = vec![csv.into_artifact("bound_states.csv")];
    let mut summary = describe_bound(&found);
    if sc.task == Task::Bic {
        let init = initial_state(sc, &es)?;
        let mut w = Csv::new(&["energy", "residue", "projection"]);
        for b in found.of_kind(BoundKind::Bic) {
            let weight = rt(bound_state_weight(b, &init, &es, &sc.bath))?;
            w.row(&[fmt_num(b.energy), fmt_num(weight.residue), fmt_num(weight.projection)]);
            let _ = writeln!(summary, "weight of bic at E = {:.6} in the initial state: {:.6}", b.energy, weight.residue);
        }
        artifacts.push(w.into_artifact("bic_weights.csv"));
    }
    Ok((artifacts, summary))
}

fn evolve(sc: &Scenario) -> Outcome {
    let es = system(&sc.lattice)?;
    let init = initial_state(sc, &es)?;
    let grid = rt(TimeGrid::new(sc.t_max, sc.dt))?;
    let tr = rt(evolve_with(&es, &init, &sc.bath, &grid, &EvolveOptions { record_every: sc.record_every }))?;

    let home = peak_site(init.as_slice());
    let mut sites = sc.sites.clone();
    if sites.is_empty() {
        sites = vec![1, home + 1, es.len()];
    }
    sites.sort_unstable();
    sites.dedup();

    let columns: Vec<Vec<f64>> = sites.iter().map(|&s| rt(survival_probability(&tr, s - 1))).collect::<Result<_, _>>()?;
    let survival = rt(survival_probability(&tr, home))?;
    let ipr = trajectory_ipr(&tr);
    let fidelity = rt(fidelity_series(&tr, &init))?;

    let mut header: Vec<String> = vec!["t".into()];
    header.extend(sites.iter().map(|s| format!("site_{s}")));
    header.extend(["survival", "ipr", "norm", "fidelity"].map(String::from));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for k in 0..tr.len() {
        let mut row = vec![fmt_num(tr.times[k])];
        row.extend(columns.iter().map(|c| fmt_num(c[k])));
        row.push(fmt_num(survival[k]));
        row.push(ipr[k].map(fmt_num).unwrap_or_default());
        row.push(fmt_num(tr.norms[k]));
        row.push(fmt_num(fidelity[k]));
        csv.row(&row);
    }

    let (t0, t1) = sc.window;
    let mut summary = format!(
        "evolved {} steps of dt = {} from {} {}\nfinal norm on the chain: {:.6}\n",
        grid.n_steps(),
        grid.dt(),
        sc.initial.as_str(),
        sc.n0,
        tr.norms.last().copied().unwrap_or(f64::NAN)
    );
    if let Ok(mean) = window_mean(&tr.times, &survival, t0, t1) {
        let _ = writeln!(summary, "mean survival at site {} over [{t0}, {t1}]: {mean:.6}", home + 1);
    }
    if let Ok(mean) = window_mean(&tr.times, &fidelity, t0, t1) {
        let _ = writeln!(summary, "mean fidelity over [{t0}, {t1}]: {mean:.6}");
    }
    match estimate_period(&tr.times, &survival, t0, t1) {
        Ok(p) => {
            let _ = writeln!(summary, "survival period: {p:.6} (frequency {:.6})", 2.0 * std::f64::consts::PI / p);
        }
        Err(e) => {
            let _ = writeln!(summary, "survival period: n/a ({e})");
        }
    }
    Ok((vec![csv.into_artifact("trajectory.csv")], summary))
}

const SOURCES: [&str; 4] = ["lattice", "dbs_gap", "dbs_ground", "bic"];

struct SweepRow {
    source: usize,
    energy: f64,
    fields: Vec<String>,
}

fn sweep_point(sc: &Scenario, spec: &LatticeSpec) -> Result<Vec<SweepRow>, CliError> {
    let es = system(spec)?;
    let local = Scenario { lattice: *spec, ..sc.clone() };
    let tags = edge_tags(&es, &local)?;
    let mut rows = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        let mode = es.mode(i);
        rows.push(SweepRow {
            source: 0,
            energy: es.energies[i],
            fields: vec![
                "lattice".into(),
                fmt_num(es.energies[i]),
                fmt_num(rt(inverse_participation_ratio(mode.as_slice()))?),
                String::new(),
                (peak_site(mode.as_slice()) + 1).to_string(),
                (*tag).into(),
                "ok".into(),
            ],
        });
    }
    let found = rt(find_bound_states(&es, &sc.bath, &search_options(sc)))?;
    for b in &found.states {
        let source = SOURCES.iter().position(|s| *s == b.kind.as_str()).unwrap_or(SOURCES.len());
        rows.push(SweepRow {
            source,
            energy: b.energy,
            fields: vec![
                b.kind.to_string(),
                fmt_num(b.energy),
                fmt_num(b.ipr),
                fmt_num(b.emission),
                (b.loc_site + 1).to_string(),
                "none".into(),
                if found.warnings.is_empty() { "ok".into() } else { format!("warnings:{}", found.warnings.len()) },
            ],
        });
    }
    rows.sort_by(|a, b| a.source.cmp(&b.source).then(a.energy.total_cmp(&b.energy)));
    Ok(rows)
}

fn sweep(sc: &Scenario) -> Outcome {
    let p = sc.points;
    let values: Vec<f64> =
        (0..p).map(|k| if k + 1 == p { sc.to } else { sc.from + (sc.to - sc.from) * k as f64 / (p - 1) as f64 }).collect();
    let results: Vec<Result<Vec<SweepRow>, String>> = values
        .par_iter()
        .map(|&v| {
            let spec = match sc.axis {
                SweepAxis::Phi => Ok(sc.lattice.with_phi(v)),
                SweepAxis::Delta => sc.lattice.with_delta(v),
            };
            match spec {
                Err(e) => Err(e.to_string()),
                Ok(spec) => sweep_point(sc, &spec).map_err(|e| e.to_string()),
            }
        })
        .collect();

    let mut csv = Csv::new(&[sc.axis.as_str(), "source", "energy", "ipr", "d", "loc_site", "edge_tag", "status"]);
    let mut failures = 0;
    for (v, res) in values.iter().zip(results) {
        match res {
            Ok(rows) => {
                for r in rows {
                    let mut fields = vec![fmt_num(*v)];
                    fields.extend(r.fields);
                    csv.row(&fields);
                }
            }
            Err(msg) => {
                failures += 1;
                let status = format!("error:{}", msg.replace([',', '\n'], ";"));
                csv.row(&[fmt_num(*v), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), status]);
            }
        }
    }
    let summary = format!("swept {} over {} points in [{}, {}]; {failures} point(s) failed\n", sc.axis.as_str(), p, sc.from, sc.to);
    Ok((vec![csv.into_artifact("sweep_levels.csv")], summary))
}

fn oracle(sc: &Scenario) -> Outcome {
    let db = rt(discretize_bath(&sc.bath, sc.modes, sc.omega_max))?;
    let mut artifacts = Vec::new();
    let mut summary = format!(
        "discretized bath: {} modes on [0, {}], total weight {:.8}\n",
        db.len(),
        sc.omega_max,
        db.total_weight()
    );

    if let CrossCheckReport::Energies { isolated, matches } =
        rt(exact_cross_check(&sc.lattice, &sc.bath, &db, &CrossCheckRequest::Energies))?
    {
        let mut csv = Csv::new(&["secular", "exact", "deviation"]);
        for m in &matches {
            csv.row(&[fmt_num(m.secular), fmt_num(m.exact), fmt_num(m.deviation())]);
            let _ = writeln!(summary, "bound state {:.8}: exact {:.8}, deviation {:.3e}", m.secular, m.exact, m.deviation());
        }
        artifacts.push(csv.into_artifact("oracle_levels.csv"));
        let mut iso = Csv::new(&["energy"]);
        for e in &isolated {
            iso.row(&[fmt_num(*e)]);
        }
        artifacts.push(iso.into_artifact("oracle_isolated.csv"));
    }

    let period3 = (sc.lattice.beta() - 1.0 / 3.0).abs() < 1e-15 && sc.lattice.n_sites().is_multiple_of(3);
    if sc.lattice.boundary() == Boundary::Periodic && period3 {
        let cells = sc.lattice.n_sites() / 3;
        let q3 = rt(commensurate_levels_q3(cells, sc.lattice.delta(), sc.lattice.phi(), &sc.bath))?;
        let es = system(&sc.lattice)?;
        let (roots, _) = rt(roots_between_poles(&es, &sc.bath, -crate::spectral::ZERO_GUARD, sc.grid_points))?;
        let mut csv = Csv::new(&["branch", "closed_form", "secular"]);
        for (k, level) in q3.branches.iter().enumerate() {
            let nearest = level.and_then(|l| {
                roots.iter().copied().filter(|r| (r - l).abs() < 1e-6).min_by(|a, b| (a - l).abs().total_cmp(&(b - l).abs()))
            });
            csv.row(&[k.to_string(), level.map(fmt_num).unwrap_or_default(), nearest.map(fmt_num).unwrap_or_default()]);
        }
        artifacts.push(csv.into_artifact("oracle_q3.csv"));
    }

    if sc.oracle_t_max > 0.0 {
        let es = system(&sc.lattice)?;
        let init = initial_state(sc, &es)?;
        let grid = rt(TimeGrid::new(sc.oracle_t_max, sc.dt))?;
        let record_dt = sc.dt * sc.record_every as f64;
        let req = CrossCheckRequest::Trajectory { initial: init.clone(), grid, record_dt };
        if let CrossCheckReport::Trajectory { exact, max_deviation } = rt(exact_cross_check(&sc.lattice, &sc.bath, &db, &req))? {
            let memory = rt(evolve_with(&es, &init, &sc.bath, &grid, &EvolveOptions { record_every: sc.record_every }))?;
            let home = peak_site(init.as_slice());
            let mut csv = Csv::new(&["t", "exact_survival", "memory_survival", "abs_deviation"]);
            for (k, t) in exact.times.iter().enumerate() {
                let a = exact.amps[k][home].norm_sqr();
                let b = memory.amps.get(k).map_or(f64::NAN, |r| r[home].norm_sqr());
                csv.row(&[fmt_num(*t), fmt_num(a), fmt_num(b), fmt_num((a - b).abs())]);
            }
            artifacts.push(csv.into_artifact("oracle_trajectory.csv"));
            let _ = writeln!(summary, "trajectory max amplitude deviation up to t = {}: {max_deviation:.3e}", sc.oracle_t_max);
        }
    }
    Ok((artifacts, summary))
}

fn kernel_check(sc: &Scenario) -> Outcome {
    let bath: &BathSpec = &sc.bath;
    let p = sc.points.max(2);
    let mut csv = Csv::new(&["t", "re_closed", "im_closed", "re_quadrature", "im_quadrature", "abs_deviation"]);
    let rows: Vec<(f64, Complex64, Complex64)> = (0..p)
        .into_par_iter()
        .map(|k| {
            let t = sc.t_max * k as f64 / (p - 1) as f64;
            (t, bath.kernel(t), kernel_by_quadrature(bath, t))
        })
        .collect();
    let mut worst: f64 = 0.0;
    for (t, c, q) in rows {
        let dev = (c - q).norm();
        worst = worst.max(dev);
        csv.row(&[fmt_num(t), fmt_num(c.re), fmt_num(c.im), fmt_num(q.re), fmt_num(q.im), fmt_num(dev)]);
    }
    let summary = format!("memory kernel on {p} points in [0, {}]: max |closed − quadrature| = {worst:.3e}\n", sc.t_max);
    Ok((vec![csv.into_artifact("kernel.csv")], summary))
}
