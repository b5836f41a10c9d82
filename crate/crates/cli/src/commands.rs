//! Pipelines behind each subcommand.

use std::path::Path;

use dnmap_core::bridge::{
    bridge_check, elliptic_dn_matrix, fit_log_slope, run_time_domain, time_domain_dn_matrix, BridgeConfig, EllipticOptions, LaplaceProbe,
};
use dnmap_core::calculus::{layer_strip, LayerStripOptions, RiccatiState};
use dnmap_core::linalg::{CMat3, CVec3, C64};
use dnmap_core::medium::{BoundaryChart, MediumJet};
use dnmap_core::reconstruct::taylor::Series;
use dnmap_core::reconstruct::{analytic_probes, closed_form_probes, recover_all, recover_jet, relative_errors};
use dnmap_core::split::{decay_check, diagonalization_defect, split_boundary_field, splitting_matrices};
use dnmap_core::symbol::{self, factorization_residual, random_sweep, SweepSample};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{complex, vector, Command, ExperimentConfig};
use crate::summary::{header, tau_key, Rule, Summary, Table};

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, profile or output location.
    Config(String),
    /// A numerical routine failed.
    Numeric(String),
}

impl From<dnmap_core::Error> for Failure {
    fn from(e: dnmap_core::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

type Run = Result<Summary, Failure>;

fn num(x: f64) -> String {
    x.to_string()
}

fn max(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Run {
    let mut summary = Summary::new(command.name(), cfg.seed);
    match command {
        Command::FactorCheck => factor_sweep(cfg, out, &mut summary, false)?,
        Command::Sweep => factor_sweep(cfg, out, &mut summary, true)?,
        Command::Reconstruct => reconstruct(cfg, out, &mut summary)?,
        Command::LayerStrip => layer_strip_run(cfg, out, &mut summary)?,
        Command::Bridge => bridge(cfg, out, &mut summary)?,
        Command::Split => split(cfg, out, &mut summary)?,
    }
    summary.write(out)?;
    Ok(summary)
}

struct DrawRow {
    residual: f64,
    oracle: f64,
    imag_gap: f64,
    misassigned: usize,
    diagonalization: f64,
    completeness: f64,
    round_trip: f64,
}

fn draw_row(s: &SweepSample, full: bool) -> Result<DrawRow, Failure> {
    let (t, f) = symbol::factorize(&s.jet, &BoundaryChart::flat(), s.xi, s.tau_hat)?;
    let o = symbol::factor_oracle(&t)?;
    let imag_gap = symbol::pencil_roots(&t)?.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min);
    let misassigned =
        f.eigenvalues_plus.iter().filter(|z| z.im <= 0.0).count() + f.eigenvalues_minus.iter().filter(|z| z.im >= 0.0).count();
    let mut row = DrawRow {
        residual: factorization_residual(&t, &f.s0_plus, &f.s0_minus),
        oracle: (f.s0_plus - o.s0_plus).norm().max((f.s0_minus - o.s0_minus).norm()),
        imag_gap,
        misassigned,
        diagonalization: f64::NAN,
        completeness: f64::NAN,
        round_trip: f64::NAN,
    };
    if full {
        let state = splitting_matrices(&f, &t)?;
        row.diagonalization = diagonalization_defect(&state, &t);
        let v = CVec3::new(C64::new(1.0, s.xi[0]), C64::new(s.jet.rho, -1.0), C64::new(s.xi[1], s.jet.mu));
        let dn = CVec3::new(C64::new(s.jet.lambda, 0.5), C64::new(0.0, 1.0), C64::new(-1.0, s.xi[0]));
        let (vp, vm) = split_boundary_field(&state, &v, &dn, &t);
        row.completeness = (vp + vm - v).norm() / v.norm();
        let got = recover_jet(&closed_form_probes(&s.jet, 1.0)?)?;
        row.round_trip = max(relative_errors(&s.jet, &got).into_iter());
    }
    Ok(row)
}

fn factor_sweep(cfg: &ExperimentConfig, out: &Path, summary: &mut Summary, full: bool) -> Result<(), Failure> {
    let samples = random_sweep(cfg.seed, cfg.sweep.n_real, cfg.sweep.n_complex);
    let rows: Result<Vec<DrawRow>, Failure> = samples.par_iter().map(|s| draw_row(s, full)).collect();
    let rows = rows?;
    let prefix = if full { "sweep" } else { "factor_check" };
    let mut cols = vec![
        "draw",
        "lambda",
        "mu",
        "rho",
        "xi1",
        "xi2",
        "tau_hat_re",
        "tau_hat_im",
        "residual",
        "oracle_diff",
        "min_imag_root",
        "misassigned",
    ];
    if full {
        cols.extend(["diagonalization", "completeness", "round_trip"]);
    }
    let mut table = Table::create(out, &format!("{prefix}.csv"), &header(&cols), summary)?;
    for (i, (s, r)) in samples.iter().zip(&rows).enumerate() {
        let mut rec = vec![
            i.to_string(),
            num(s.jet.lambda),
            num(s.jet.mu),
            num(s.jet.rho),
            num(s.xi[0]),
            num(s.xi[1]),
            num(s.tau_hat.re),
            num(s.tau_hat.im),
            num(r.residual),
            num(r.oracle),
            num(r.imag_gap),
            r.misassigned.to_string(),
        ];
        if full {
            rec.extend([num(r.diagonalization), num(r.completeness), num(r.round_trip)]);
        }
        table.row(&rec)?;
    }
    table.finish()?;

    let tol = &cfg.tolerances;
    summary.value(format!("{prefix}.draws"), samples.len() as f64);
    summary.value(format!("{prefix}.complex_draws"), cfg.sweep.n_complex as f64);
    summary.check(format!("{prefix}.max_residual"), max(rows.iter().map(|r| r.residual)), Rule::AtMost, tol.residual);
    summary.check(format!("{prefix}.max_oracle_diff"), max(rows.iter().map(|r| r.oracle)), Rule::AtMost, tol.oracle);
    summary.check(
        format!("{prefix}.min_imag_root"),
        rows.iter().map(|r| r.imag_gap).fold(f64::INFINITY, f64::min),
        Rule::AtLeast,
        tol.imag_gap,
    );
    summary.check(format!("{prefix}.misassigned_eigenvalues"), rows.iter().map(|r| r.misassigned).sum::<usize>() as f64, Rule::AtMost, 0.0);
    if full {
        summary.check("sweep.max_diagonalization", max(rows.iter().map(|r| r.diagonalization)), Rule::AtMost, tol.diagonalization);
        summary.check("sweep.max_completeness", max(rows.iter().map(|r| r.completeness)), Rule::AtMost, tol.completeness);
        summary.check("sweep.max_round_trip", max(rows.iter().map(|r| r.round_trip)), Rule::AtMost, tol.round_trip);
    }
    Ok(())
}

fn series(value: f64, derivatives: &[f64]) -> Series {
    let mut d = vec![value];
    d.extend_from_slice(derivatives);
    Series::from_derivatives(&d)
}

fn reconstruct(cfg: &ExperimentConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let profile = cfg.profile().map_err(Failure::Config)?;
    let order = profile.order();
    let mut cols = vec!["depth".to_string(), "lambda".into(), "mu".into(), "rho".into()];
    for k in 1..=order {
        cols.extend([format!("d{k}_lambda"), format!("d{k}_mu"), format!("d{k}_rho")]);
    }
    cols.extend(["err_lambda", "err_mu", "err_rho", "err_derivatives"].map(String::from));
    let mut table = Table::create(out, "reconstruct.csv", &cols, summary)?;
    let mut worst: f64 = 0.0;
    let mut worst_d: f64 = 0.0;
    for &s in &cfg.grids.depth {
        let truth = profile.evaluate(s, order)?;
        let probe =
            analytic_probes(&series(truth.lambda, &truth.d_lambda), &series(truth.mu, &truth.d_mu), &series(truth.rho, &truth.d_rho), 1.0)?;
        let got = recover_all(&probe, order)?;
        let errs = relative_errors(&truth, &got);
        let err_d = derivative_error(&truth, &got, order)?;
        worst = worst.max(max(errs.into_iter()));
        worst_d = worst_d.max(err_d);
        let mut rec = vec![num(s), num(got.lambda), num(got.mu), num(got.rho)];
        for k in 1..=order {
            let (a, b, c) = got.derivative(k)?;
            rec.extend([num(a), num(b), num(c)]);
        }
        rec.extend([num(errs[0]), num(errs[1]), num(errs[2]), num(err_d)]);
        table.row(&rec)?;
    }
    table.finish()?;
    summary.value("reconstruct.order", order as f64);
    summary.check("reconstruct.max_round_trip", worst, Rule::AtMost, cfg.tolerances.round_trip);
    if order > 0 {
        summary.check("reconstruct.max_derivative_error", worst_d, Rule::AtMost, cfg.tolerances.derivatives);
    }
    Ok(())
}

/// Largest derivative error, scaled by max(1, |value|) of the matching parameter.
fn derivative_error(truth: &MediumJet, got: &MediumJet, order: usize) -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    for k in 1..=order {
        let (a, b, c) = truth.derivative(k)?;
        let (x, y, z) = got.derivative(k)?;
        worst = worst
            .max((a - x).abs() / truth.p_modulus().max(1.0))
            .max((b - y).abs() / truth.mu.max(1.0))
            .max((c - z).abs() / truth.rho.max(1.0));
    }
    Ok(worst)
}

fn entries(m: &CMat3) -> Vec<String> {
    (0..3).flat_map(|i| (0..3).flat_map(move |j| [num(m[(i, j)].re), num(m[(i, j)].im)])).collect()
}

fn entry_names() -> Vec<String> {
    (0..3).flat_map(|i| (0..3).flat_map(move |j| [format!("re_{i}{j}"), format!("im_{i}{j}")])).collect()
}

fn layer_strip_run(cfg: &ExperimentConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let profile = cfg.profile().map_err(Failure::Config)?;
    let tau = complex(cfg.grids.tau[0]);
    let tau_hat = tau / tau.norm();
    let ls = &cfg.layer_strip;
    let opts = LayerStripOptions { eta_max: ls.eta_max.unwrap_or(f64::INFINITY), hermitian_tol: ls.hermitian_tol };
    let mut cols = header(&["h", "step", "depth", "point", "eta1", "eta2"]);
    cols.extend(entry_names());
    cols.extend(header(&["rhs_norm", "hermitian_defect", "min_hermitian_eig", "certified"]));
    let mut table = Table::create(out, "layer_strip.csv", &cols, summary)?;
    let s0 = profile.range().0;
    let mut non_finite = 0usize;
    for &h in &cfg.grids.h {
        let init = RiccatiState::principal(&profile, &cfg.grids.eta, s0, h, tau_hat)?;
        let result = layer_strip(&init, &profile, ls.ds, ls.steps, &opts)?;
        for r in &result.log {
            let eta = cfg.grids.eta[r.point];
            non_finite += r.lambda_hat.iter().filter(|z| !z.re.is_finite() || !z.im.is_finite()).count();
            let mut rec = vec![num(h), r.step.to_string(), num(r.s), r.point.to_string(), num(eta[0]), num(eta[1])];
            rec.extend(entries(&r.lambda_hat));
            rec.extend([num(r.rhs_norm), num(r.hermitian_defect), num(r.min_hermitian_eig), r.certified.to_string()]);
            table.row(&rec)?;
        }
        let target = RiccatiState::principal(&profile, &cfg.grids.eta, result.state.s, h, tau_hat)?;
        let gap = max(result.state.lambda_hat.iter().zip(&target.lambda_hat).map(|(a, b)| (a - b).norm() / b.norm()));
        summary.value(format!("layer_strip[h={h}].terminal_principal_gap"), gap);
        summary.value(format!("layer_strip[h={h}].flagged"), result.flagged as f64);
        summary.value(format!("layer_strip[h={h}].final_depth"), result.state.s);
    }
    table.finish()?;
    summary.check("layer_strip.non_finite_entries", non_finite as f64, Rule::AtMost, 0.0);
    Ok(())
}

#[derive(Serialize)]
struct SymbolPoint {
    eta: [f64; 2],
    tau: [f64; 2],
    horizon: f64,
    /// Row-major `[re, im]` entries of the transformed time-domain map.
    transformed: Vec<[f64; 2]>,
    /// Same for the elliptic DN map.
    elliptic: Vec<[f64; 2]>,
}

fn pairs(m: &CMat3) -> Vec<[f64; 2]> {
    (0..3).flat_map(|i| (0..3).map(move |j| [m[(i, j)].re, m[(i, j)].im])).collect()
}

fn bridge(cfg: &ExperimentConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let profile = cfg.profile().map_err(Failure::Config)?;
    let b = &cfg.bridge;
    let bc = BridgeConfig { length: b.length, cells: b.cells, cfl: b.cfl, ..Default::default() };
    let psi = vector(&b.psi);
    let eta = cfg.grids.eta[0];
    let mut table = Table::create(out, "bridge.csv", &header(&["tau_re", "tau_im", "horizon", "residual", "continuous_gap"]), summary)?;
    for &t in &cfg.grids.tau {
        let tau = complex(t);
        let reports: Result<Vec<_>, Failure> =
            b.horizons.par_iter().map(|&horizon| Ok(bridge_check(&profile, eta, psi, &LaplaceProbe::new(tau, horizon)?, &bc)?)).collect();
        let reports = reports?;
        for (horizon, r) in b.horizons.iter().zip(&reports) {
            table.row(&[num(tau.re), num(tau.im), num(*horizon), num(r.residual), num(r.continuous_gap)])?;
        }
        let residuals: Vec<f64> = reports.iter().map(|r| r.residual).collect();
        let (slope, _) = fit_log_slope(&b.horizons, &residuals);
        let key = tau_key(tau);
        summary.check(format!("bridge[tau={key}].slope"), slope, Rule::AtMost, -cfg.tolerances.bridge_kappa * tau.re);
        summary.value(format!("bridge[tau={key}].kappa"), -slope / tau.re);
        summary.value(format!("bridge[tau={key}].continuous_gap"), reports.last().map(|r| r.continuous_gap).unwrap_or(f64::NAN));
    }
    table.finish()?;

    let tau = complex(cfg.grids.tau[0]);
    let horizon = *b.horizons.last().expect("validated");
    let probe = LaplaceProbe::new(tau, horizon)?;
    let (_, trace) = run_time_domain(&profile, eta, psi, &probe, &bc)?;
    let mut cols = header(&["t"]);
    cols.extend((0..3).flat_map(|c| [format!("re_traction_{c}"), format!("im_traction_{c}")]));
    let mut table = Table::create(out, "trace.csv", &cols, summary)?;
    for (n, tr) in trace.traction.iter().enumerate() {
        let mut rec = vec![num(n as f64 * trace.dt)];
        rec.extend(tr.iter().flat_map(|z| [num(z.re), num(z.im)]));
        table.row(&rec)?;
    }
    table.finish()?;

    let points: Result<Vec<SymbolPoint>, Failure> = cfg
        .grids
        .eta
        .par_iter()
        .map(|&eta| {
            let transformed = time_domain_dn_matrix(&profile, eta, &probe, &bc)?;
            let elliptic = elliptic_dn_matrix(&profile, eta, tau, &EllipticOptions::default())?;
            Ok(SymbolPoint { eta, tau: [tau.re, tau.im], horizon, transformed: pairs(&transformed), elliptic: pairs(&elliptic) })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&points?).map_err(|e| Failure::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(out.join("symbols.json"), text)?;
    summary.outputs.push("symbols.json".into());
    Ok(())
}

fn split(cfg: &ExperimentConfig, out: &Path, summary: &mut Summary) -> Result<(), Failure> {
    let profile = cfg.profile().map_err(Failure::Config)?;
    let psi = vector(&cfg.split.psi);
    let eta = cfg.grids.eta[0];
    let s0 = profile.range().0;
    let jet = profile.evaluate(s0, 0)?;
    let mut diag: f64 = 0.0;
    for &t in &cfg.grids.tau {
        let tau = complex(t);
        for &e in &cfg.grids.eta {
            let (tr, f) = symbol::factorize(&jet, &BoundaryChart::flat(), e, tau / tau.norm())?;
            diag = diag.max(diagonalization_defect(&splitting_matrices(&f, &tr)?, &tr));
        }
    }
    summary.check("split.max_diagonalization", diag, Rule::AtMost, cfg.tolerances.diagonalization);

    let mut table = Table::create(
        out,
        "split.csv",
        &header(&["tau_re", "tau_im", "depth", "norm_plus", "norm_minus", "fitted_rate", "expected_rate"]),
        summary,
    )?;
    for &t in &cfg.grids.tau {
        let tau = complex(t);
        let probe = LaplaceProbe::new(tau, 1.0)?;
        let r = decay_check(&profile, eta, &probe, psi, &cfg.split.depths)?;
        for i in 0..r.depths.len() {
            table.row(&[
                num(tau.re),
                num(tau.im),
                num(r.depths[i]),
                num(r.norm_plus[i]),
                num(r.norm_minus[i]),
                r.fitted_rate.map(num).unwrap_or_default(),
                num(r.expected_rate),
            ])?;
        }
        let key = tau_key(tau);
        summary.value(format!("split[tau={key}].expected_rate"), r.expected_rate);
        if let (Some(rate), Some(err)) = (r.fitted_rate, r.relative_error) {
            summary.value(format!("split[tau={key}].fitted_rate"), rate);
            summary.check(format!("split[tau={key}].rate_error"), err, Rule::AtMost, cfg.tolerances.decay_rate);
        }
    }
    table.finish()?;
    Ok(())
}
