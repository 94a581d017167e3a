use std::fs::File;
use std::path::Path;

use dbarpos::forms::commutator_of_hermitian;
use dbarpos::geometry::{
    check_q_positive, check_uniform_q_positive, complex_hessian, parse_weight, Expr, PositivityReport, Weight,
    DEFAULT_H_STEP,
};
use dbarpos::linalg::{from_pairs, to_pairs};
use dbarpos::probes::{
    build_control_probe, build_probe_form, default_schedule, fiber_integrate_prekopa, monotone_limit_check,
    probe_rhs, run_probe, Fiber, ProbeReport,
};
use dbarpos::solver::{estimate_ratio, minimal_solution, GridField, GridSpec};
use dbarpos::{eig_hermitian, multi_indices, q_smallest_sum, subset_sums_oracle, Error, HermitianMatrix, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;

/// Relative tolerance for the control probe: `R(m) ≥ −CONTROL_TOLERANCE · scale`.
pub const CONTROL_TOLERANCE: f64 = 1e-6;

pub struct Outcome {
    pub pass: bool,
    pub result: Value,
    /// CSV files written to the output directory.
    pub files: Vec<String>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Input(format!("cannot write {}: {e}", path.display()))
}

fn write_field(out: &Path, name: &str, u: &GridField) -> Result<String> {
    let path = out.join(name);
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    u.write_csv(file)?;
    Ok(name.to_string())
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    match cfg {
        RunConfig::CheckPositivity(c) => check_positivity(c),
        RunConfig::Commutator(c) => commutator(c, out),
        RunConfig::SolveDbar(c) => solve_dbar(c, out),
        RunConfig::VerifyEstimate(c) => verify_estimate(c, out),
        RunConfig::ProbeCounterexample(c) => probe_counterexample(c, out),
        RunConfig::MonotoneLimit(c) => monotone_limit(c, out),
        RunConfig::Prekopa(c) => prekopa(c, out),
    }
}

fn weight_with_dim(src: &str, n: Option<usize>) -> Result<Weight> {
    let expr = Expr::parse(src)?;
    let n = n.unwrap_or_else(|| expr.max_indices().0.max(1));
    expr.into_weight(n, 0)
}

fn check_positivity(c: &CheckPositivity) -> Result<Outcome> {
    let w = weight_with_dim(&c.weight, c.n)?;
    let d = domain_or_default(&c.domain, w.dim())?;
    let w = w.on_domain(d.clone())?;
    let report = match c.criterion {
        CriterionChoice::QPositive => check_q_positive(&w, c.q, &d, &c.options)?,
        CriterionChoice::UniformQPositive => check_uniform_q_positive(&w, c.q, c.c, &d, &c.options)?,
    };
    Ok(Outcome {
        pass: report.pass,
        result: to_value(&report),
        files: vec![],
    })
}

fn commutator(c: &Commutator, out: &Path) -> Result<Outcome> {
    let theta = match (&c.theta, &c.weight, &c.point) {
        (Some(rows), _, _) => {
            let rows: Vec<_> = rows.iter().map(|r| from_pairs(r)).collect();
            HermitianMatrix::from_rows(&rows)?
        }
        (None, Some(w), Some(p)) => {
            let z = from_pairs(p);
            complex_hessian(&parse_weight(w, z.len())?, &z, DEFAULT_H_STEP)?
        }
        _ => return Err(Error::Input("commutator needs either theta, or weight with point".into())),
    };
    let n = theta.dim();
    let op = commutator_of_hermitian(&theta, c.q)?;
    let op_spec = eig_hermitian(op.matrix())?;
    let spec = eig_hermitian(&theta)?;
    let smallest = q_smallest_sum(&spec, c.q)?;
    let min = op_spec.min();

    let mut sums: Vec<(String, f64)> = multi_indices(n, c.q)?
        .iter()
        .zip(subset_sums_oracle(&spec, c.q)?)
        .map(|(m, s)| (m.to_string(), s))
        .collect();
    sums.sort_by(|a, b| a.1.total_cmp(&b.1));
    let spectrum_gap = sums
        .iter()
        .zip(&op_spec.eigenvalues)
        .map(|(s, e)| (s.1 - e).abs())
        .fold(0.0, f64::max);

    let name = "subset_sums.csv";
    let path = out.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
    w.write_record(["subset", "subset_sum", "operator_eigenvalue"]).map_err(|e| io_error(&path, e))?;
    for ((m, s), e) in sums.iter().zip(&op_spec.eigenvalues) {
        w.write_record([m.clone(), format!("{s:e}"), format!("{e:e}")]).map_err(|e| io_error(&path, e))?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;

    let margin = min - c.c;
    Ok(Outcome {
        pass: margin >= -c.tolerance,
        result: json!({
            "n": n,
            "q": c.q,
            "c": c.c,
            "theta_eigenvalues": spec.eigenvalues,
            "operator_dimension": op.dim(),
            "operator_eigenvalues": op_spec.eigenvalues,
            "q_smallest_sum": smallest,
            "min_eigenvalue": min,
            "bridge_gap": (min - smallest).abs(),
            "spectrum_gap": spectrum_gap,
            "margin": margin,
            "witness_subset": sums[0].0,
        }),
        files: vec![name.into()],
    })
}

fn rhs_on_grid(n: usize, domain: &Option<dbarpos::geometry::Domain>, ppa: usize, q: usize, rhs: &ProbeRhs) -> Result<GridField> {
    let d = domain_or_default(domain, n)?;
    let grid = GridSpec::over_domain(&d, ppa)?;
    let center = from_pairs(&rhs.center);
    if center.len() != n {
        return Err(Error::Input(format!("rhs.center has dimension {}, expected {n}", center.len())));
    }
    probe_rhs(&grid, q, &center, rhs.radius)
}

fn solve_dbar(c: &SolveDbar, out: &Path) -> Result<Outcome> {
    let w = parse_weight(&c.weight, c.n)?;
    let f = rhs_on_grid(c.n, &c.domain, c.points_per_axis, c.q, &c.rhs)?;
    let grid = &f.grid;
    let weight: Vec<f64> = (0..grid.len())
        .map(|p| if grid.in_mask(p) { w.eval(&grid.point(p)) } else { 0.0 })
        .collect();
    let sol = minimal_solution(&f, &weight)?;
    let file = write_field(out, "solution.csv", &sol.u)?;
    Ok(Outcome {
        pass: true,
        result: json!({
            "n": c.n,
            "q": c.q,
            "points_per_axis": c.points_per_axis,
            "lhs": sol.lhs,
            "cg_iterations": sol.cg_iterations,
            "residual": sol.residual,
        }),
        files: vec![file],
    })
}

fn verify_estimate(c: &VerifyEstimate, out: &Path) -> Result<Outcome> {
    let phi = parse_weight(&c.phi, c.n)?;
    let psi = parse_weight(&c.psi, c.n)?;
    let f = rhs_on_grid(c.n, &c.domain, c.points_per_axis, c.q, &c.rhs)?;
    let est = estimate_ratio(&f, &phi, &psi, c.c, c.q)?;
    let file = write_field(out, "solution.csv", &est.u)?;
    let mut result = to_value(&est.report);
    result["max_ratio"] = json!(c.max_ratio);
    Ok(Outcome {
        pass: est.report.ratio <= c.max_ratio,
        result,
        files: vec![file],
    })
}

fn probe_counterexample(c: &ProbeCounterexample, out: &Path) -> Result<Outcome> {
    let w = weight_with_dim(&c.weight, c.n)?;
    let n = w.dim();
    let d = domain_or_default(&c.domain, n)?;
    let w = w.on_domain(d.clone())?;
    let (search, witness): (Option<PositivityReport>, Option<Vec<_>>) = match &c.witness {
        Some(p) => (None, Some(from_pairs(p))),
        None => {
            let rep = check_uniform_q_positive(&w, c.q, c.c, &d, &c.options)?;
            let witness = (rep.margin < 0.0).then(|| from_pairs(&rep.witness_point));
            (Some(rep), witness)
        }
    };
    let schedule = c.m_schedule.clone().unwrap_or_else(default_schedule);

    let (report, control): (ProbeReport, bool) = match &witness {
        Some(z) => {
            let (g, mut cfg) = build_probe_form(&w, c.q, c.c, z, c.radius)?;
            cfg.m_schedule = schedule;
            (run_probe(&g, &cfg, &w, c.c)?, false)
        }
        None => {
            let (g, mut cfg) = build_control_probe(&w, c.q, c.c, &d.center, c.radius)?;
            cfg.m_schedule = schedule;
            (run_probe(&g, &cfg, &w, c.c)?, true)
        }
    };
    let name = "probe_trace.csv";
    report.write_csv(&out.join(name))?;
    let pass = if control {
        report.min_relative() >= -CONTROL_TOLERANCE
    } else {
        false
    };
    Ok(Outcome {
        pass,
        result: json!({
            "search": search,
            "witness": witness.as_deref().map(to_pairs),
            "control": control,
            "m_star": report.m_star,
            "min_relative": report.min_relative(),
            "probe": report,
        }),
        files: vec![name.into()],
    })
}

fn monotone_limit(c: &MonotoneLimit, out: &Path) -> Result<Outcome> {
    let seq = c.sequence.iter().map(|s| parse_weight(s, c.n)).collect::<Result<Vec<_>>>()?;
    let limit = parse_weight(&c.limit, c.n)?;
    let d = domain_or_default(&c.domain, c.n)?;
    let seq = seq.into_iter().map(|w| w.on_domain(d.clone())).collect::<Result<Vec<_>>>()?;
    let limit = limit.on_domain(d.clone())?;
    let rep = monotone_limit_check(&seq, &limit, c.q, c.c, &d, &c.options)?;

    let name = "monotone.csv";
    let path = out.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
    w.write_record(["member", "min_value", "margin", "pass"]).map_err(|e| io_error(&path, e))?;
    let rows = rep.sequence.iter().enumerate().map(|(j, r)| ((j + 1).to_string(), r));
    for (label, r) in rows.chain(std::iter::once(("limit".to_string(), &rep.limit))) {
        w.write_record([label, format!("{:e}", r.min_value), format!("{:e}", r.margin), r.pass.to_string()])
            .map_err(|e| io_error(&path, e))?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    Ok(Outcome {
        pass: rep.limit_passes && rep.consistent,
        result: to_value(&rep),
        files: vec![name.into()],
    })
}

fn prekopa(c: &Prekopa, out: &Path) -> Result<Outcome> {
    let m = c.fiber.outer.len();
    let inner = c.fiber.inner.clone().unwrap_or_else(|| vec![0.0; m]);
    let fiber = Fiber::annuli(inner, c.fiber.outer.clone())?;
    let w = Expr::parse(&c.weight)?.into_weight(c.base.dim(), m)?;
    let outcome = fiber_integrate_prekopa(&w, &fiber, &c.base, c.q, c.c, &c.options)?;
    let name = "fiber_field.csv";
    outcome.field.write_csv(&out.join(name))?;
    let f = &outcome.field;
    Ok(Outcome {
        pass: outcome.report.pass,
        result: json!({
            "label": outcome.label,
            "note": outcome.note,
            "report": outcome.report,
            "fiber": fiber,
            "quadrature": f.quadrature,
            "base_points": f.points.len(),
            "min_q_sum": f.q_sums.iter().copied().fold(f64::INFINITY, f64::min),
            "min_eigenvalue": f.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
        }),
        files: vec![name.into()],
    })
}
