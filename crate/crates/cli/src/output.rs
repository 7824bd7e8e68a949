//! Human-readable tables, CSV series and the consolidated report.

use std::path::Path;

use anyhow::{Context, Result};
use delay_noether::document::ProblemDocument;
use delay_noether::functional::{self, ActionReport};
use delay_noether::noether::{self, ConservationReport};
use delay_noether::report::{FirstIntegralReport, FitMode, ResidualReport, Sample, Sampling, Verdict};
use delay_noether::solver::SolveResult;
use delay_noether::{conditions, PiecewiseTrajectory, Problem};
use serde::Serialize;

fn verdict(v: Verdict) -> &'static str {
    if v.holds() {
        "holds"
    } else {
        "fails"
    }
}

fn vector(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.9e}")).collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("[{}]", parts.join(", "))
    }
}

pub fn print_residual(r: &ResidualReport) {
    println!("{}", r.quantity);
    println!("  points      {}", r.points);
    println!("  max |r|     {:.3e} at t = {}", r.max_abs, r.worst_t);
    println!("  threshold   {:.3e}", r.tolerance * r.scale);
    println!("  verdict     {}", verdict(r.verdict));
}

pub fn print_first_integral(r: &FirstIntegralReport) {
    let mode = match r.mode {
        FitMode::Regional => "regional",
        FitMode::Global => "global",
    };
    println!("{} ({mode} fit)", r.quantity);
    for region in &r.regions {
        println!(
            "  region {}    constant {}  max deviation {:.3e}",
            region.region.number(),
            vector(&region.constant),
            region.max_dev
        );
        for s in &region.segments {
            println!(
                "    [{}, {}]  constant {}  max deviation {:.3e}",
                s.interval[0],
                s.interval[1],
                vector(&s.constant),
                s.max_dev
            );
        }
    }
    if let Some(poly) = &r.polynomial {
        for (i, c) in poly.iter().enumerate() {
            println!("  p_{i}(t) coefficients {}", vector(c));
        }
    }
    println!("  threshold   {:.3e}", r.tolerance * r.scale);
    println!("  verdict     {}", verdict(r.verdict));
    if !r.failing_segments.is_empty() {
        let list: Vec<String> = r.failing_segments.iter().map(|s| format!("[{}, {}]", s[0], s[1])).collect();
        println!("  failing     {}", list.join(" "));
    }
}

pub fn print_conservation(r: &ConservationReport) {
    print_first_integral(&r.report);
    match r.junction_gap {
        Some(gap) => println!("  junction gap {gap:.3e} (not judged)"),
        None => println!("  junction gap n/a"),
    }
}

pub fn print_solve(r: &SolveResult) {
    println!("action          {:e}", r.action);
    println!("iterations      {}", r.iterations);
    println!("gradient norm   {:.3e}", r.gradient_norm);
    println!("grid            h = {}, tau = {} h, {} cells", r.grid.h, r.grid.k, r.grid.cells);
    println!("converged       {}", if r.converged { "yes" } else { "no" });
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write_samples_csv(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let dim = samples.first().map_or(0, |s| s.value.len());
    let mut header = vec!["t".to_string(), "region".to_string()];
    header.extend((0..dim).map(|i| format!("value{i}")));
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.t.to_string(), s.region.number().to_string()];
        row.extend(s.value.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_nodes_csv(path: &Path, r: &SolveResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    let dim = r.nodes.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((0..dim).map(|i| format!("q{i}")));
    w.write_record(&header)?;
    for (t, q) in r.times.iter().zip(&r.nodes) {
        let mut row = vec![t.to_string()];
        row.extend(q.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Classification {
    pub el_regional: bool,
    pub dbr: bool,
    pub noether: Option<bool>,
    pub line: String,
}

#[derive(Debug, Serialize)]
pub struct FullReport {
    pub action: ActionReport,
    pub el: ResidualReport,
    pub el_integral_regional: FirstIntegralReport,
    pub el_integral_global: FirstIntegralReport,
    pub dbr: FirstIntegralReport,
    pub invariance: Option<ResidualReport>,
    pub noether: Option<ConservationReport>,
    pub classification: Classification,
}

fn yes_no(v: bool) -> &'static str {
    if v {
        "yes"
    } else {
        "no"
    }
}

pub fn full_report(doc: &ProblemDocument, problem: &Problem, q: &PiecewiseTrajectory, sampling: &Sampling) -> Result<FullReport> {
    let action = functional::action(problem, q, doc.quadrature())?;
    let el = conditions::el_residual_report(problem, q, sampling)?;
    let el_integral_regional = conditions::el_first_integral(problem, q, sampling, FitMode::Regional)?;
    let el_integral_global = conditions::el_first_integral(problem, q, sampling, FitMode::Global)?;
    let dbr = conditions::dbr_first_integral(problem, q, sampling)?;
    let (invariance, conservation) = match &doc.symmetry {
        Some(_) => {
            let sym = doc.symmetry()?;
            (
                Some(noether::invariance_report(problem, q, &sym, sampling)?),
                Some(noether::check_conservation(problem, q, &sym, sampling)?),
            )
        }
        None => (None, None),
    };
    let el_ok = el.verdict.holds();
    let dbr_ok = dbr.verdict.holds();
    let noether_ok = conservation.as_ref().map(|c| c.report.verdict.holds());
    let line = format!(
        "EL-extremal (regional): {}; DBR-extremal: {}; Noether charge conserved: {}",
        yes_no(el_ok),
        yes_no(dbr_ok),
        noether_ok.map_or("n/a", yes_no)
    );
    Ok(FullReport {
        action,
        el,
        el_integral_regional,
        el_integral_global,
        dbr,
        invariance,
        noether: conservation,
        classification: Classification {
            el_regional: el_ok,
            dbr: dbr_ok,
            noether: noether_ok,
            line,
        },
    })
}

pub fn print_full_report(r: &FullReport) {
    println!("action = {}", r.action.action);
    for w in &r.action.warnings {
        println!("warning: {w}");
    }
    println!();
    print_residual(&r.el);
    print_first_integral(&r.el_integral_regional);
    print_first_integral(&r.el_integral_global);
    print_first_integral(&r.dbr);
    if let Some(inv) = &r.invariance {
        print_residual(inv);
    }
    if let Some(c) = &r.noether {
        print_conservation(c);
    }
    println!();
    println!("{}", r.classification.line);
}
