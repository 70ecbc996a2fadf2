//! Task pipelines. Each writes its artifacts into the output directory and
//! fills the report with a result payload and checks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use geomqm_core::evolution::{
    commutator_norm, default_steps, heisenberg_evolve, heisenberg_residual, propagator, Unitary,
};
use geomqm_core::geometry::{geodesic_integrate, zeroth_residual, GeodesicState, MetricInterpolant, SpacetimeMetric};
use geomqm_core::holonomy::{ab_spectrum, chern_number, holonomy_class, uniform_flux_phases};
use geomqm_core::linalg::hermitian_eigenvalues;
use geomqm_core::maxwell::{
    assemble_potential, continuity_defect, d_cochain, field_strength, source_current, SpacetimeComplex,
};
use geomqm_core::operators::{build_hamiltonian, connection_phases, validate_operator};
use geomqm_core::reconstruct::{gauge_transform, reconstruct, roundtrip_report};
use geomqm_core::{LinkField, MetricField, ScalarField, SparseOperator, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::report::{Check, Report};
use crate::scenario::{ConfigError, Fields, Scenario, Task};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] geomqm_core::Error),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub struct Context<'a> {
    pub scenario: &'a Scenario,
    /// Directory of the scenario file, for relative input paths.
    pub base_dir: &'a Path,
    pub out: &'a Path,
    pub seed: u64,
    pub tol_scale: f64,
}

impl Context<'_> {
    fn tol(&self, t: f64) -> f64 {
        t * self.tol_scale
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> geomqm_core::Result<()>) -> Result<(), RunError> {
        let path = self.out.join(name);
        let io = |source| RunError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w).map_err(|e| match e {
            geomqm_core::Error::Io(source) => RunError::Io { path: path.clone(), source },
            other => RunError::Numerical(other),
        })?;
        w.flush().map_err(io)
    }
}

/// Per-sample scale factors, linear in between and clamped at the ends.
struct Schedule<'a> {
    dt: f64,
    metric: &'a [f64],
    connection: &'a [f64],
    potential: &'a [f64],
}

impl<'a> Schedule<'a> {
    fn new(s: &'a Scenario) -> Self {
        Self {
            dt: s.time.dt,
            metric: &s.time.metric_scales,
            connection: &s.time.connection_scales,
            potential: &s.time.potential_scales,
        }
    }

    fn at(&self, scales: &[f64], t: f64) -> f64 {
        match scales.len() {
            0 => 1.0,
            1 => scales[0],
            n => {
                let x = (t / self.dt).clamp(0.0, (n - 1) as f64);
                let k = (x.floor() as usize).min(n - 2);
                let w = x - k as f64;
                scales[k] * (1.0 - w) + scales[k + 1] * w
            }
        }
    }

    fn metric_static(&self) -> bool {
        self.metric.windows(2).all(|w| w[0] == w[1])
    }
}

struct Sample {
    g: MetricField,
    a: LinkField,
    phi: ScalarField,
}

fn sample_at(f: &Fields, sched: &Schedule, t: f64) -> Sample {
    let p = sched.at(sched.potential, t);
    Sample {
        g: f.metric.scaled(1.0 / sched.at(sched.metric, t)),
        a: f.connection.scaled(sched.at(sched.connection, t)),
        phi: ScalarField::new(f.potential.values.iter().map(|v| v * p).collect()),
    }
}

fn hamiltonian_at(f: &Fields, sched: &Schedule, t: f64) -> geomqm_core::Result<SparseOperator> {
    let s = sample_at(f, sched, t);
    build_hamiltonian(&f.lattice, &s.g, &s.a, &s.phi, f.mass)
}

pub fn run(ctx: &Context, report: &mut Report) -> Result<(), RunError> {
    let fields = Fields::build(ctx.scenario)?;
    match ctx.scenario.task {
        Task::Build => build(ctx, &fields, report),
        Task::Reconstruct => reconstruct_task(ctx, &fields, report),
        Task::Roundtrip => roundtrip(ctx, &fields, report),
        Task::Geodesic => geodesic(ctx, &fields, report),
        Task::Maxwell => maxwell(ctx, &fields, report),
        Task::Holonomy => holonomy(ctx, &fields, report),
        Task::Evolve => evolve(ctx, &fields, report),
    }
}

fn operator_checks(ctx: &Context, f: &Fields, h: &SparseOperator, report: &mut Report) -> serde_json::Value {
    let v = validate_operator(&f.lattice, h, 1e-14);
    let tol = ctx.tol(ctx.scenario.tolerances.hermiticity) * h.max_abs().max(1.0);
    report.checks.push(Check::at_most("hermiticity_defect", v.hermiticity_defect, tol));
    report.checks.push(Check::at_most("locality_radius", v.locality_radius as f64, 1.0));
    serde_json::to_value(&v).expect("serializable")
}

fn build(ctx: &Context, f: &Fields, report: &mut Report) -> Result<(), RunError> {
    let sched = Schedule::new(ctx.scenario);
    let h = hamiltonian_at(f, &sched, 0.0)?;
    ctx.write("hamiltonian.txt", |w| h.write_triplets(w))?;
    let validation = operator_checks(ctx, f, &h, report);
    report.result = json!({
        "sites": f.lattice.num_sites(),
        "links": f.lattice.num_links(),
        "nnz": h.nnz(),
        "row_sum_norm": h.row_sum_norm(),
        "validation": validation,
    });
    Ok(())
}

fn reconstruct_task(ctx: &Context, f: &Fields, report: &mut Report) -> Result<(), RunError> {
    let h = match &ctx.scenario.input.operator {
        Some(rel) => {
            let path = ctx.base_dir.join(rel);
            let file = File::open(&path).map_err(|source| ConfigError::Read { path: path.clone(), source })?;
            let h = SparseOperator::read_triplets(BufReader::new(file)).map_err(|e| ConfigError::Invalid {
                field: "input.operator".into(),
                message: e.to_string(),
            })?;
            if h.dim() != f.lattice.num_sites() {
                return Err(ConfigError::Invalid {
                    field: "input.operator".into(),
                    message: format!("operator has dimension {}, lattice has {} sites", h.dim(), f.lattice.num_sites()),
                }
                .into());
            }
            h
        }
        None => hamiltonian_at(f, &Schedule::new(ctx.scenario), 0.0)?,
    };
    ctx.write("hamiltonian.txt", |w| h.write_triplets(w))?;
    let validation = operator_checks(ctx, f, &h, report);
    let tol = &ctx.scenario.tolerances;
    let rec = reconstruct(&f.lattice, &h, f.mass, tol.axiom)?;
    report.checks.push(Check::flag("positivity", rec.axioms.positivity_ok));
    report.checks.push(Check::flag("nondegeneracy", rec.axioms.nondegeneracy_ok));
    report.checks.push(Check::at_most("cure_max", rec.axioms.cure_max(), ctx.tol(tol.cure)));
    report.result = json!({
        "validation": validation,
        "reconstruction": rec,
        "holonomy": holonomy_class(&f.lattice, &rec.decomposition.phases)?,
    });
    Ok(())
}

fn roundtrip(ctx: &Context, f: &Fields, report: &mut Report) -> Result<(), RunError> {
    let rep = roundtrip_report(&f.lattice, &f.metric, &f.connection, &f.potential, f.mass)?;
    let h = build_hamiltonian(&f.lattice, &f.metric, &f.connection, &f.potential, f.mass)?;
    ctx.write("hamiltonian.txt", |w| h.write_triplets(w))?;
    let e = rep.errors.expect("roundtrip sets errors");
    let tol = ctx.tol(ctx.scenario.tolerances.roundtrip);
    report.checks.push(Check::at_most("e_g", e.e_g, tol));
    report.checks.push(Check::at_most("e_F", e.e_f, tol));
    report.checks.push(Check::at_most("e_phi", e.e_phi, tol));
    report.result = serde_json::to_value(&rep).expect("serializable");
    Ok(())
}

fn geodesic(ctx: &Context, f: &Fields, report: &mut Report) -> Result<(), RunError> {
    let s = ctx.scenario;
    let cfg = s.geodesic.as_ref().expect("validated");
    let sched = Schedule::new(s);
    let h = hamiltonian_at(f, &sched, 0.0)?;
    let rec = reconstruct(&f.lattice, &h, f.mass, s.tolerances.axiom)?;
    let slice = MetricInterpolant::new(&f.lattice, &rec.g_rec)?;
    let eta = cfg.eta.unwrap_or_else(|| slice.default_eta());
    let traj = geodesic_integrate(&slice, &GeodesicState::new(cfg.q0.clone(), cfg.v0.clone()), cfg.dt, cfg.duration, eta)?;

    let samples = s.time.samples;
    let stationary = sched.metric_static();
    let spacetime = if samples == 1 || stationary {
        SpacetimeMetric::stationary(slice.clone())
    } else {
        let times: Vec<f64> = (0..samples).map(|k| k as f64 * s.time.dt).collect();
        let slices = s.time.metric_scales.iter().map(|&m| slice.scaled(m / s.time.metric_scales[0])).collect();
        SpacetimeMetric::from_slices(times, slices)?
    };
    // Residual samples are limited to the span of the time series.
    let t_max = *spacetime.times().last().expect("non-empty");
    let inside: Vec<usize> = (0..traj.len()).filter(|&i| spacetime.num_samples() == 1 || traj.times[i] <= t_max).collect();
    let mut residual = vec![f64::NAN; traj.len()];
    let sub = geomqm_core::geometry::Trajectory {
        times: inside.iter().map(|&i| traj.times[i]).collect(),
        states: inside.iter().map(|&i| traj.states[i].clone()).collect(),
        speed2: inside.iter().map(|&i| traj.speed2[i]).collect(),
        truncated: traj.truncated,
    };
    for (&i, r) in inside.iter().zip(zeroth_residual(&spacetime, &sub)?) {
        residual[i] = r;
    }
    ctx.write("trajectory.csv", |w| traj.write_csv(w, Some(&residual)))?;

    let tol = &s.tolerances;
    report.checks.push(Check::at_most("speed2_drift", traj.speed2_drift(), ctx.tol(tol.speed2_drift)));
    let max_residual = residual.iter().filter(|r| r.is_finite()).fold(0.0f64, |m, r| m.max(r.abs()));
    if stationary {
        report.checks.push(Check::at_most("static_zeroth_residual", max_residual, ctx.tol(tol.static_residual)));
    }
    let last = traj.last();
    report.result = json!({
        "steps": traj.len() - 1,
        "eta": eta,
        "truncated": traj.truncated,
        "final_q": last.q,
        "final_v": last.v,
        "speed2_initial": traj.speed2[0],
        "speed2_drift": traj.speed2_drift(),
        "stationary_metric": stationary,
        "zeroth_residual_max": max_residual,
        "zeroth_residual_samples": inside.len(),
        "metric_min_eigenvalue": rec.axioms.min_eigenvalue(),
    });
    Ok(())
}

fn maxwell(ctx: &Context, f: &Fields, report: &mut Report) -> Result<(), RunError> {
    let s = ctx.scenario;
    let sched = Schedule::new(s);
    let nt = s.time.samples;
    let times: Vec<f64> = (0..nt).map(|k| k as f64 * s.time.dt).collect();
    let complex = SpacetimeComplex::new(&f.lattice, nt, s.time.dt)?;
    let hs = times.iter().map(|&t| hamiltonian_at(f, &sched, t)).collect::<geomqm_core::Result<Vec<_>>>()?;

    let recover = |hs: &[SparseOperator]| -> geomqm_core::Result<(Vec<MetricField>, Vec<LinkField>, Vec<ScalarField>)> {
        let (mut g, mut a, mut phi) = (Vec::new(), Vec::new(), Vec::new());
        for h in hs {
            let rec = reconstruct(&f.lattice, h, f.mass, s.tolerances.axiom)?;
            g.push(rec.g_rec);
            a.push(rec.a_rec);
            phi.push(rec.phi_rec);
        }
        Ok((g, a, phi))
    };
    let (g, a, phi) = recover(&hs)?;
    let metric = geomqm_core::geometry::lorentzian_lift(&f.lattice, &times, &g)?;
    let potential = assemble_potential(&complex, &a, &phi)?;
    let field = field_strength(&complex, &potential)?;
    let df = d_cochain(&complex, &field)?.max_abs();
    let j = source_current(&complex, &field, &metric)?;
    let continuity = continuity_defect(&complex, &j, &metric)?;

    // One time-independent gauge function for every sample.
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let chi = ScalarField::new((0..f.lattice.num_sites()).map(|_| rng.random_range(-0.3..0.3)).collect());
    let hs_gauged: Vec<SparseOperator> = hs.iter().map(|h| gauge_transform(h, &chi)).collect();
    let (_, a2, phi2) = recover(&hs_gauged)?;
    let field2 = field_strength(&complex, &assemble_potential(&complex, &a2, &phi2)?)?;
    let gauge = field.max_abs_diff(&field2);

    ctx.write("cochains.csv", |w| field.write_csv(&complex, w))?;
    ctx.write("current.csv", |w| j.write_csv(&complex, w))?;
    ctx.write("potential.csv", |w| potential.write_csv(&complex, w))?;
    ctx.write("hamiltonian.txt", |w| hs[0].write_triplets(w))?;

    let tol = ctx.tol(s.tolerances.maxwell);
    report.checks.push(Check::at_most("dF_max", df, tol));
    report.checks.push(Check::at_most("continuity_defect", continuity, tol));
    report.checks.push(Check::at_most("gauge_invariance_F", gauge, tol));
    report.result = json!({
        "complex_hash": complex.hash(),
        "dim": complex.dim(),
        "cells": (0..=complex.dim()).map(|k| complex.num_cells(k)).collect::<Vec<_>>(),
        "F_max": field.max_abs(),
        "j_max": j.max_abs(),
        "dF_max": df,
        "continuity_defect": continuity,
        "gauge_invariance_F": gauge,
    });
    Ok(())
}

fn holonomy(ctx: &Context, f: &Fields, report: &mut Report) -> Result<(), RunError> {
    let s = ctx.scenario;
    let cfg = s.holonomy.as_ref().expect("validated");
    let tol = ctx.tol(s.tolerances.periodicity);
    if f.lattice.topology() == Topology::Torus {
        let mut theta = connection_phases(&f.lattice, &f.connection);
        if let Some(k) = cfg.flux_quanta {
            theta = theta.add(&uniform_flux_phases(&f.lattice, k)?);
        }
        let chern = chern_number(&f.lattice, &theta)?;
        if let Some(k) = cfg.flux_quanta {
            report.checks.push(Check::equals("chern_number", chern, k));
        }
        report.result = json!({
            "chern_number": chern,
            "holonomy": holonomy_class(&f.lattice, &theta)?,
            "max_plaquette_flux": f.lattice.plaquette_sums(&theta).iter().fold(0.0f64, |m, x| m.max(x.abs())),
        });
        return Ok(());
    }
    let alphas = cfg.samples();
    let flow = ab_spectrum(&f.lattice, &f.metric, &f.potential, f.mass, &alphas)?;
    let shifted: Vec<f64> = alphas.iter().map(|a| a + 2.0 * std::f64::consts::PI).collect();
    let flow2 = ab_spectrum(&f.lattice, &f.metric, &f.potential, f.mass, &shifted)?;
    let periodicity = flow
        .eigenvalues
        .iter()
        .zip(&flow2.eigenvalues)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
    ctx.write("spectral_flow.csv", |w| flow.write_csv(w))?;
    report.checks.push(Check::at_most("periodicity_2pi", periodicity, tol));
    let gaps: Vec<f64> = flow
        .eigenvalues
        .iter()
        .map(|ev| ev.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min))
        .collect();
    report.result = json!({
        "alphas": alphas,
        "ground_energy": flow.eigenvalues.iter().map(|ev| ev[0]).collect::<Vec<_>>(),
        "min_gap": gaps,
        "periodicity_2pi": periodicity,
    });
    Ok(())
}

fn evolve(ctx: &Context, f: &Fields, report: &mut Report) -> Result<(), RunError> {
    let s = ctx.scenario;
    let cfg = s.evolve.as_ref().expect("validated");
    let sched = Schedule::new(s);
    let sampler = |t: f64| hamiltonian_at(f, &sched, t);
    let h1 = sampler(cfg.t1)?;
    let norm = h1.row_sum_norm();
    let steps = cfg.steps.unwrap_or_else(|| default_steps(norm, cfg.t1, cfg.t2));
    let u = propagator(sampler, cfg.t1, cfg.t2, steps)?;
    let n = f.lattice.num_sites();
    let cyclic = u.then(&u.adjoint()).max_abs_diff(&Unitary::identity(n));

    let x = ScalarField::coordinate(&f.lattice, cfg.observable_axis);
    let xt = heisenberg_evolve(&x, &u)?;
    let mut want = x.values.clone();
    want.sort_by(f64::total_cmp);
    let spectrum = hermitian_eigenvalues(&xt)
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let x0 = heisenberg_evolve(&x, &Unitary::identity(n))?;
    let noncommutation = commutator_norm(&x0, &xt);

    let t = cfg.t2;
    let steps_to_t = if t == 0.0 { 1 } else { default_steps(norm, 0.0_f64.min(t), 0.0_f64.max(t)) };
    let r1 = heisenberg_residual(sampler, &x, t, cfg.delta, steps_to_t)?;
    let r2 = heisenberg_residual(sampler, &x, t, cfg.delta / 2.0, steps_to_t)?;

    ctx.write("hamiltonian.txt", |w| h1.write_triplets(w))?;
    let tol = &s.tolerances;
    report.checks.push(Check::at_most("unitarity_defect", u.unitarity_defect(), ctx.tol(tol.unitarity)));
    report.checks.push(Check::at_most("cyclicity_defect", cyclic, ctx.tol(tol.unitarity)));
    report.checks.push(Check::at_most("spectrum_defect", spectrum, ctx.tol(tol.spectrum)));
    let ratio = r1 / r2;
    if r1 <= 1e-12 {
        report.checks.push(Check::at_most("heisenberg_residual", r1, 1e-12));
    } else {
        report.checks.push(Check::within("heisenberg_ratio", ratio, tol.heisenberg_ratio_min, tol.heisenberg_ratio_max));
    }
    report.result = json!({
        "steps": steps,
        "h_row_sum_norm": norm,
        "unitarity_defect": u.unitarity_defect(),
        "cyclicity_defect": cyclic,
        "spectrum_defect": spectrum,
        "heisenberg_residual": [r1, r2],
        "heisenberg_ratio": if r1 <= 1e-12 { serde_json::Value::Null } else { json!(ratio) },
        "slice_commutator_norm": noncommutation,
    });
    Ok(())
}
