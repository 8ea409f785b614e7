//! Subcommands: run an experiment, write its CSV tables and SVG charts.
//!
//! CSV floats use 17 significant digits. Wall-clock measurements go to
//! `timing.txt` so the CSV files stay byte-identical across reruns.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use helmpso::pso::PsoTrace;

use crate::config::Settings;
use crate::experiments::{
    compare_dn, fem_convergence, noise_medians, noise_study, ratios_in_band, reconstruct, reg_sweep, setup,
    time_paths, Reconstruction, FEM_RATIO_BAND,
};
use crate::plot::{Chart, Series};
use crate::CliError;

fn e(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>, CliError> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn write_rows(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Returns whether every refinement ratio is inside the expected band.
pub fn cmd_validate_fem(settings: &Settings) -> Result<bool, CliError> {
    let levels = fem_convergence(settings.case, settings.mesh_n)?;
    let rows: Vec<String> = levels
        .iter()
        .map(|l| format!("{},{},{},{}", l.n, e(l.h), e(l.l2_error), e(l.ratio)))
        .collect();
    write_rows(&settings.out_dir, "fem_convergence.csv", "n,h,l2_error,ratio", &rows)?;
    for l in &levels {
        println!("{} n={:<4} h={:.4e} rel_l2={:.4e} ratio={:.3}", settings.case, l.n, l.h, l.l2_error, l.ratio);
    }
    let ok = ratios_in_band(&levels);
    if !ok {
        eprintln!(
            "refinement ratios outside [{}, {}]",
            FEM_RATIO_BAND.0, FEM_RATIO_BAND.1
        );
    }
    Ok(ok)
}

fn cost_chart(title: &str, traces: &[(String, &PsoTrace)]) -> Chart {
    let mut chart = Chart::new(title, "iteration", "best cost").log_y();
    for (label, t) in traces {
        let pts = t.rows.iter().map(|r| (r.iteration as f64, r.best_cost)).collect();
        chart = chart.with(Series::new(label.clone(), pts));
    }
    chart
}

fn unknown_name(settings: &Settings) -> &'static str {
    match settings.formulation {
        helmpso::objective::Formulation::DirichletRecovery => "trace on Γi",
        helmpso::objective::Formulation::NeumannRecovery => "flux on Γi",
    }
}

pub fn cmd_reconstruct(settings: &Settings) -> Result<(), CliError> {
    let dir = &settings.out_dir;
    let seed = settings.pso.seed;
    let r = reconstruct(settings, settings.noise_level, seed)?;
    let seg = &r.gamma_i;

    let rows: Vec<String> = (0..seg.len())
        .map(|k| {
            let o = r.oracle_field.as_ref().map_or(f64::NAN, |f| f.values[k]);
            format!("{},{},{},{}", e(seg.s[k]), e(r.exact.values[k]), e(r.reconstructed.values[k]), e(o))
        })
        .collect();
    write_rows(dir, "trace.csv", "s,exact,reconstructed,oracle", &rows)?;

    let mut w = create(dir, "pso_trace.csv")?;
    r.trace.write_csv(&mut w)?;
    w.flush()?;

    let mut summary = settings.echo();
    let (oracle_j, inside) = match &r.oracle {
        Some(o) => (e(o.value), o.inside_bounds.to_string()),
        None => ("unavailable".into(), "unavailable".into()),
    };
    summary.extend([
        ("final_j".into(), e(r.final_j)),
        ("oracle_j".into(), oracle_j),
        ("oracle_inside_bounds".into(), inside),
        ("relative_error".into(), e(r.trace_error)),
        ("oracle_relative_error".into(), e(r.oracle_error)),
        ("error_vs_oracle".into(), e(r.gap_to_oracle)),
        ("iterations".into(), (r.trace.rows.len() - 1).to_string()),
        ("evaluations".into(), r.trace.evaluations.to_string()),
    ]);
    for (j, c) in r.coeffs.iter().enumerate() {
        summary.push((format!("coeff_{j}"), e(*c)));
    }
    let rows: Vec<String> = summary.iter().map(|(k, v)| format!("{k},{v}")).collect();
    write_rows(dir, "summary.csv", "key,value", &rows)?;

    let s = setup(settings, settings.noise_level, seed)?;
    let (fast, naive) = time_paths(&s, 5)?;
    write_text(
        dir,
        "timing.txt",
        &format!(
            "response_basis_build_s {:.6e}\npso_wall_time_s {:.6e}\nfast_eval_s {fast:.6e}\nnaive_eval_s {naive:.6e}\nspeedup {:.3e}\n",
            r.build_time.as_secs_f64(),
            r.trace.wall_time.as_secs_f64(),
            naive / fast
        ),
    )?;

    let title = format!("{} / {}", settings.case, settings.formulation);
    write_text(dir, "cost.svg", &cost_chart(&title, &[("global best".into(), &r.trace)]).render())?;
    let pts = |v: &[f64]| seg.s.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let mut chart = Chart::new(&title, "arclength s", unknown_name(settings))
        .with(Series::new("exact", pts(&r.exact.values)))
        .with(Series::new("reconstructed", pts(&r.reconstructed.values)));
    if let Some(f) = &r.oracle_field {
        chart = chart.with(Series::new("oracle", pts(&f.values)).dashed());
    }
    write_text(dir, "trace.svg", &chart.render())?;

    println!("final J            {:.6e}", r.final_j);
    if let Some(o) = &r.oracle {
        println!("oracle J           {:.6e} (inside bounds: {})", o.value, o.inside_bounds);
    }
    println!("relative error     {:.4e}", r.trace_error);
    println!("error vs oracle    {:.4e}", r.gap_to_oracle);
    println!("evaluations        {}", r.trace.evaluations);
    println!("wall time          {:.3} s (fast/naive speedup {:.0}x)", r.trace.wall_time.as_secs_f64(), naive / fast);
    Ok(())
}

pub fn cmd_reg_sweep(settings: &Settings) -> Result<(), CliError> {
    let rows = reg_sweep(settings)?;
    let lines: Vec<String> = rows
        .iter()
        .map(|r| format!("{},{},{}", e(r.eta), e(r.j_final), e(r.trace_error)))
        .collect();
    write_rows(&settings.out_dir, "reg_sweep.csv", "eta,J_final,trace_error", &lines)?;
    for r in &rows {
        println!("eta={:.0e} J={:.4e} error={:.4e}", r.eta, r.j_final, r.trace_error);
    }
    Ok(())
}

pub fn cmd_noise_study(settings: &Settings) -> Result<(), CliError> {
    let runs = noise_study(settings)?;
    let lines: Vec<String> = runs
        .iter()
        .map(|r| format!("{},{},{},{}", e(r.noise_level), r.seed, e(r.final_j), e(r.trace_error)))
        .collect();
    write_rows(&settings.out_dir, "noise_study.csv", "nu,seed,J_final,trace_error", &lines)?;

    let first_seed = settings.noise_seeds[0];
    let shown: Vec<&Reconstruction> = runs.iter().filter(|r| r.seed == first_seed).collect();
    if let Some(r0) = shown.first() {
        let seg = &r0.gamma_i;
        let pts = |v: &[f64]| seg.s.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
        let mut chart = Chart::new(
            &format!("{} / {}, seed {first_seed}", settings.case, settings.formulation),
            "arclength s",
            unknown_name(settings),
        )
        .with(Series::new("exact", pts(&r0.exact.values)).dashed());
        for r in &shown {
            chart = chart.with(Series::new(format!("ν = {:.1}%", r.noise_level * 100.0), pts(&r.reconstructed.values)));
        }
        write_text(&settings.out_dir, "noise_traces.svg", &chart.render())?;
        let traces: Vec<(String, &PsoTrace)> = shown
            .iter()
            .map(|r| (format!("ν = {:.1}%", r.noise_level * 100.0), &r.trace))
            .collect();
        write_text(&settings.out_dir, "noise_cost.svg", &cost_chart("best cost per noise level", &traces).render())?;
    }
    for (nu, j, err) in noise_medians(settings, &runs) {
        println!("nu={nu:<5} median J={j:.4e} median error={err:.4e}");
    }
    Ok(())
}

pub fn cmd_compare_dn(settings: &Settings) -> Result<(), CliError> {
    let rows = compare_dn(settings)?;
    let lines: Vec<String> = rows
        .iter()
        .map(|r| format!("{},{},{},{},{}", r.case, r.formulation, e(r.j_final), e(r.oracle_j), e(r.relative_error)))
        .collect();
    write_rows(
        &settings.out_dir,
        "dn_compare.csv",
        "case,formulation,J_final,oracle_J,relative_error",
        &lines,
    )?;
    for r in &rows {
        println!("{:<7}{:<10} J={:.4e} error={:.4e}", r.case.to_string(), r.formulation.to_string(), r.j_final, r.relative_error);
    }
    Ok(())
}

pub fn cmd_mesh(settings: &Settings) -> Result<(), CliError> {
    let mesh = crate::experiments::build_mesh(settings.case, settings.mesh_n)?;
    let mut w = create(&settings.out_dir, "mesh.txt")?;
    mesh.write_text(&mut w)?;
    w.flush()?;
    println!(
        "{} n={}: {} nodes, {} triangles, {} boundary edges, h={:.4e}",
        settings.case,
        settings.mesh_n,
        mesh.nodes.len(),
        mesh.triangles.len(),
        mesh.boundary_edges.len(),
        mesh.h
    );
    Ok(())
}
