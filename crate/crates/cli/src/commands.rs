use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lambda1_core::eigen::{fmt17, solve_spectrum_complete, write_eigenfunctions};
use lambda1_core::extremal::{bubble_from_functions, RECOVERY_LIMIT};
use lambda1_core::geometry::write_mesh_cache;
use lambda1_core::potentials::{dirac_limit_pairing, weak_pairing, RESOLUTION_LIMIT};
use lambda1_core::{
    bubble_extract, concentration_family, energy_density_on_mesh, hersch_balance, indefiniteness_test,
    maximize_lambda1, recover_potential, sos_certificate, sphere_upper_bound, MobiusMap, EIGHT_PI,
};
use serde_json::json;

use crate::config::{
    BubbleCmd, BubbleSource, DensitySpec, EigenCmd, ExtremalCmd, FamilyCmd, HerschCmd, MaximizeCmd, MeshCmd,
};
use crate::error::CliError;

type Outcome = Result<Option<String>, CliError>;

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn eigen(cfg: &EigenCmd, out: &Path) -> Outcome {
    let (mesh, ops) = cfg.mesh.build()?;
    let v = cfg.potential.build(&mesh, &ops, cfg.seed)?;
    let spec = solve_spectrum_complete(&ops, Some(&v), &cfg.eigen)?;
    fs::write(out.join("spectrum.csv"), spec.to_csv())?;
    write_eigenfunctions(&spec, &out.join("eigenfunctions.bin"))?;
    Ok(Some(mesh.checksum().to_string()))
}

pub fn extremal_check(cfg: &ExtremalCmd, out: &Path) -> Outcome {
    let (mesh, ops) = cfg.mesh.build()?;
    let v = cfg.potential.build(&mesh, &ops, cfg.seed)?;
    let spec = solve_spectrum_complete(&ops, Some(&v), &cfg.eigen)?;
    let mut report = indefiniteness_test(&mesh, &ops, &spec, &cfg.extremal)?;
    let cert = sos_certificate(&ops, &spec, spec.lambda1_cluster(), cfg.sos_tol, cfg.sos_maxiter)?;
    if cert.residual_inf <= RECOVERY_LIMIT {
        recover_potential(&ops, &mesh, &cert, spec.lambda1())?.write_csv(&out.join("recovered_potential.csv"))?;
    }
    report.sos = Some(cert.clone());
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("certificate.json"), &cert)?;
    Ok(Some(mesh.checksum().to_string()))
}

/// Smooth test functions for the weak pairings, on the unit sphere.
fn test_functions(x: [f64; 3]) -> [f64; 3] {
    [x[0] + 0.5 * x[1] + 0.25 * x[2], x[0] * x[2] + 0.5 * x[1], (x[0] + 0.5 * x[1]).exp()]
}

pub fn family(cfg: &FamilyCmd, out: &Path, with_limits: bool) -> Outcome {
    let (mesh, ops) = cfg.mesh.build()?;
    if cfg.target_vertex >= mesh.num_vertices() {
        return Err(CliError::config(format!("target vertex {} outside the mesh", cfg.target_vertex)));
    }
    let members = concentration_family(&mesh, &ops, cfg.target_vertex, &cfg.t)?;
    fs::create_dir(out.join("potentials"))?;
    let points = mesh.unit_sphere_points();
    let phis: Vec<Vec<f64>> = (0..3).map(|k| points.iter().map(|&x| test_functions(x)[k]).collect()).collect();

    let mut lam = String::from("t,lambda1,cluster_dim,sup_norm,max_v,max_density,resolved\n");
    let mut pairs = String::from("t,phi,pairing,limit,error\n");
    let mut bubbles = String::from("t,lambda_max,radius,local_energy,fraction\n");
    let mut listing = Vec::new();
    for (i, m) in members.iter().enumerate() {
        let spec = solve_spectrum_complete(&ops, Some(&m.potential), &cfg.eigen)?;
        let name = format!("potentials/t_{i:02}.csv");
        m.potential.write_csv(&out.join(&name))?;
        let _ = writeln!(
            lam,
            "{},{},{},{},{},{},{}",
            fmt17(m.t),
            fmt17(spec.lambda1()),
            spec.lambda1_cluster().len(),
            fmt17(m.potential.sup_norm()),
            fmt17(m.potential.max()),
            fmt17(m.max_density),
            m.resolved
        );
        listing.push(json!({
            "t": m.t,
            "map": m.map.to_real8(),
            "potential": name,
            "potential_checksum": m.potential.checksum(),
            "resolved": m.resolved,
        }));
        if with_limits {
            for (k, phi) in phis.iter().enumerate() {
                let p = weak_pairing(&ops, &m.potential, phi)?;
                let limit = dirac_limit_pairing(&ops, cfg.target_vertex, phi)?;
                let _ = writeln!(pairs, "{},{k},{},{},{}", fmt17(m.t), fmt17(p), fmt17(limit), fmt17((p - limit).abs()));
            }
            let density = energy_density_on_mesh(&mesh, &m.map)?;
            let b = bubble_extract(&mesh, &ops, &density, cfg.window)?;
            let _ = writeln!(
                bubbles,
                "{},{},{},{},{}",
                fmt17(m.t),
                fmt17(b.lambda_max),
                fmt17(b.radius),
                fmt17(b.local_energy),
                fmt17(b.local_energy / EIGHT_PI)
            );
        }
    }
    fs::write(out.join("lambda_vs_t.csv"), lam)?;
    if with_limits {
        fs::write(out.join("pairings.csv"), pairs)?;
        fs::write(out.join("bubble.csv"), bubbles)?;
    }
    write_json(
        &out.join("family.json"),
        &json!({
            "target_vertex": cfg.target_vertex,
            "resolution_limit": RESOLUTION_LIMIT,
            "members": listing,
        }),
    )?;
    Ok(Some(mesh.checksum().to_string()))
}

pub fn maximize(cfg: &MaximizeCmd, out: &Path) -> Outcome {
    let (mesh, ops) = cfg.mesh.build()?;
    let v0 = cfg.start.build(&mesh, &ops, cfg.seed)?;
    let (v, trace) = maximize_lambda1(&mesh, &ops, &v0, &cfg.ascent).map_err(|f| {
        let mut e = CliError::from(f.error);
        e.message = format!("{} after {} iterations", e.message, f.trace.records.len());
        e
    })?;
    trace.write_csv(&out.join("trace.csv"))?;
    fs::write(out.join("trace.json"), trace.to_json()? + "\n")?;
    v.write_csv(&out.join("final_potential.csv"))?;
    Ok(Some(mesh.checksum().to_string()))
}

pub fn hersch(cfg: &HerschCmd, out: &Path) -> Outcome {
    let (mesh, ops) = cfg.mesh.build()?;
    if !mesh.is_sphere() {
        return Err(CliError::config("hersch needs a sphere mesh"));
    }
    let v = cfg.potential.build(&mesh, &ops, cfg.seed)?;
    let spec = solve_spectrum_complete(&ops, Some(&v), &cfg.eigen)?;
    let points = mesh.unit_sphere_points();
    let mu: Vec<f64> = match &cfg.density {
        DensitySpec::Uniform => vec![1.0; mesh.num_vertices()],
        DensitySpec::Bump { axis, kappa } => {
            let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
            if !(n > 0.0) {
                return Err(CliError::config("bump axis must be nonzero"));
            }
            // Shifted exponent so that sharp bumps do not overflow.
            points
                .iter()
                .map(|x| (kappa * ((x[0] * axis[0] + x[1] * axis[1] + x[2] * axis[2]) / n - 1.0)).exp())
                .collect()
        }
        DensitySpec::GroundState => spec.ground_state().iter().map(|u| u * u).collect(),
    };
    let balance = hersch_balance(&mesh, &mu, cfg.tol)?;

    let weights: Vec<f64> = mu.iter().zip(&mesh.vertex_area).map(|(m, a)| m * a).collect();
    let total: f64 = weights.iter().sum();
    let mut before = [0.0; 3];
    let mut after = [0.0; 3];
    for (w, x) in weights.iter().zip(&points) {
        let y = balance.map.apply(*x);
        for k in 0..3 {
            before[k] += w * x[k] / total;
            after[k] += w * y[k] / total;
        }
    }
    let mut res = String::from("axis,center_before,center_after\n");
    for k in 0..3 {
        let _ = writeln!(res, "{k},{},{}", fmt17(before[k]), fmt17(after[k]));
    }
    fs::write(out.join("residuals.csv"), res)?;
    write_json(&out.join("mobius.json"), &balance)?;

    let bound = sphere_upper_bound(&mesh, &ops, &v, spec.ground_state())?;
    write_json(
        &out.join("bound.json"),
        &json!({ "lambda1": spec.lambda1(), "eight_pi": EIGHT_PI, "report": bound }),
    )?;
    Ok(Some(mesh.checksum().to_string()))
}

pub fn bubble(cfg: &BubbleCmd, out: &Path) -> Outcome {
    let (mesh, ops) = cfg.mesh.build()?;
    let report = match &cfg.source {
        BubbleSource::Dilation { target_vertex, t } => {
            if *target_vertex >= mesh.num_vertices() {
                return Err(CliError::config(format!("target vertex {target_vertex} outside the mesh")));
            }
            let s = MobiusMap::concentrating_at(mesh.unit_sphere_point(*target_vertex), *t)?;
            bubble_extract(&mesh, &ops, &energy_density_on_mesh(&mesh, &s)?, cfg.window)?
        }
        BubbleSource::Certificate { potential } => {
            let v = potential.build(&mesh, &ops, cfg.seed)?;
            let spec = solve_spectrum_complete(&ops, Some(&v), &cfg.eigen)?;
            let cert = sos_certificate(&ops, &spec, spec.lambda1_cluster(), 1e-10, 500)?;
            bubble_from_functions(&mesh, &ops, &cert.factorized_functions(), cfg.window)?
        }
    };
    write_json(&out.join("bubble.json"), &report)?;
    Ok(Some(mesh.checksum().to_string()))
}

pub fn mesh(cfg: &MeshCmd, out: &Path) -> Outcome {
    let (mesh, _) = cfg.mesh.build()?;
    write_mesh_cache(&mesh, &out.join("mesh.cache"))?;
    write_json(
        &out.join("mesh.json"),
        &json!({
            "kind": mesh.kind,
            "vertices": mesh.num_vertices(),
            "triangles": mesh.num_triangles(),
            "genus": mesh.genus,
            "euler_characteristic": mesh.euler_characteristic(),
            "total_area": mesh.total_area(),
            "max_edge_length": mesh.max_edge_length(),
            "checksum": mesh.checksum(),
        }),
    )?;
    Ok(Some(mesh.checksum().to_string()))
}
