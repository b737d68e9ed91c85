use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use super::{BilliardCheck, CliError, Common, Format, NamedMatrix, Outcome, QrCheck, Solver};
use crate::acceptance::{self, CriterionResult};
use crate::atlas::{
    chart_factors, chart_flow, decreasing_permutation, from_chart, from_chart_dense, is_majorized,
    momentum_map,
};
use crate::billiard::{mv_polynomial, orbit, random_state, write_orbit_csv, BilliardState, Ellipsoid, StepMethod};
use crate::flows::{
    asymptotic_diagnosis, integrate_at, partial_traces, symes_solve, symes_trajectory,
    trajectory_to_json, uniform_times, write_trajectory_csv,
};
use crate::func::FlowFunction;
use crate::invspec::{moser_evolve, norming_constants, reconstruct, SpectralData};
use crate::linalg::{jacobi_eigenvalues, max_abs_diff_vec, symmetric_eigenvalues, DenseMatrix};
use crate::qrdyn::{
    cholesky_iterate, estimate_order, interpolation_check, power_qr_identity_check, qr_iterate,
    toda_exp_qr_check, ShiftStrategy, Termination,
};
use crate::sample::{
    preset_spectrum, random_jacobi, random_positive_unit, random_spd, random_with_spectrum, Rng64,
};
use crate::tridiag::SymTridiagonal;

type CmdResult = Result<Outcome, CliError>;

/// Files of one command run, all inside `--out`.
struct Output {
    dir: PathBuf,
    timestamp: Option<u64>,
}

impl Output {
    fn new(dir: &Path, no_timestamp: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        let timestamp = (!no_timestamp).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        Ok(Self {
            dir: dir.to_path_buf(),
            timestamp,
        })
    }

    fn from_common(c: &Common) -> Result<Self, CliError> {
        Self::new(&c.out, c.no_timestamp)
    }

    fn comment(&self) -> Option<String> {
        self.timestamp.map(|t| format!("generated_at={t}"))
    }

    fn file(&self, name: &str, out: &mut dyn Write) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
        writeln!(out, "wrote {name}")?;
        let f = std::fs::File::create(self.dir.join(name))?;
        Ok(std::io::BufWriter::new(f))
    }

    fn json(&self, name: &str, mut value: Value, out: &mut dyn Write) -> Result<(), CliError> {
        if let (Some(t), Value::Object(map)) = (self.timestamp, &mut value) {
            map.insert("generated_at".into(), json!(t));
        }
        let mut w = self.file(name, out)?;
        serde_json::to_writer_pretty(&mut w, &value).map_err(|e| CliError::Config(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

/// Named pass/fail checks collected into the report.
#[derive(Default)]
struct Checks {
    entries: Map<String, Value>,
    failures: Vec<String>,
}

impl Checks {
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        let pass = value <= threshold;
        self.entries.insert(
            name.into(),
            json!({ "value": value, "threshold": threshold, "pass": pass }),
        );
        if !pass {
            self.failures.push(format!("{name} = {value:e} exceeds {threshold:e}"));
        }
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.entries.insert(name.into(), json!({ "pass": ok }));
        if !ok {
            self.failures.push(format!("{name} does not hold"));
        }
    }

    fn to_json(&self) -> Value {
        Value::Object(self.entries.clone())
    }

    fn print(&self, out: &mut dyn Write) -> std::io::Result<()> {
        for (name, v) in &self.entries {
            let pass = v["pass"].as_bool().unwrap_or(false);
            match v.get("value") {
                Some(val) => writeln!(out, "  {name}: {:.3e} [{}]", val.as_f64().unwrap_or(f64::NAN), mark(pass))?,
                None => writeln!(out, "  {name}: [{}]", mark(pass))?,
            }
        }
        Ok(())
    }

    fn outcome(self) -> Outcome {
        if self.failures.is_empty() {
            Outcome::Ok
        } else {
            Outcome::CheckFailed(self.failures.join("; "))
        }
    }
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Config(format!("invalid {what} entry '{x}'")))
        })
        .collect()
}

/// Sorted spectrum from `--spectrum` (preset name or list).
fn spectrum_arg(c: &Common) -> Result<Option<Vec<f64>>, CliError> {
    let Some(s) = &c.spectrum else { return Ok(None) };
    let mut v = match preset_spectrum(s.trim()) {
        Some(p) => p,
        None => parse_list(s, "spectrum")?,
    };
    v.sort_by(f64::total_cmp);
    Ok(Some(v))
}

/// `--n`, defaulting to the spectrum length or `default`.
fn dimension(c: &Common, spectrum: Option<&[f64]>, default: usize) -> Result<usize, CliError> {
    let n = match (c.n, spectrum) {
        (Some(n), Some(s)) if n != s.len() => {
            return Err(CliError::Config(format!("--n {n} does not match a spectrum of length {}", s.len())))
        }
        (Some(n), _) => n,
        (None, Some(s)) => s.len(),
        (None, None) => default,
    };
    if n < 2 {
        return Err(CliError::Config("dimension must be at least 2".into()));
    }
    if !(c.tol > 0.0) {
        return Err(CliError::Config("tolerance must be positive".into()));
    }
    Ok(n)
}

/// Jacobi matrix with the requested spectrum, or a random one.
fn start_jacobi(rng: &mut Rng64, spectrum: Option<&[f64]>, n: usize) -> Result<SymTridiagonal, CliError> {
    Ok(match spectrum {
        Some(s) => reconstruct(&SpectralData::new(s.to_vec(), random_positive_unit(rng, n))?)?,
        None => random_jacobi(rng, n),
    })
}

fn write_trajectory(
    o: &Output,
    format: Format,
    traj: &crate::flows::Trajectory,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = o.file("trajectory.csv", out)?;
            write_trajectory_csv(traj, o.comment().as_deref(), &mut w)?;
            w.flush()?;
        }
        Format::Json => o.json("trajectory.json", trajectory_to_json(traj), out)?,
    }
    Ok(())
}

pub(super) fn flow(c: &Common, diag: bool, solver: Solver, out: &mut dyn Write) -> CmdResult {
    let spec = spectrum_arg(c)?;
    let n = dimension(c, spec.as_deref(), 4)?;
    let mut rng = Rng64::seeded(c.seed);
    let s0 = if diag {
        let d = spec.clone().unwrap_or_else(|| (1..=n).map(|k| k as f64).collect());
        DenseMatrix::from_diagonal(&d)
    } else {
        start_jacobi(&mut rng, spec.as_deref(), n)?.to_dense()
    };
    let t_end = c.t.unwrap_or(10.0);
    let times = uniform_times(t_end, c.samples);
    let traj = match solver {
        Solver::Integrate => integrate_at(&s0, &c.f, &times, c.tol)?,
        Solver::Symes => symes_trajectory(&s0, &c.f, &times)?,
    };
    let lam0 = symmetric_eigenvalues(&s0)?;
    let mut drift = 0.0f64;
    for s in &traj.states {
        drift = drift.max(max_abs_diff_vec(&symmetric_eigenvalues(s)?, &lam0));
    }
    let (_, last) = traj.last().expect("at least one sample");
    let reference = symes_solve(&s0, &c.f, t_end)?;
    let solver_gap = last.max_abs_diff(&reference);

    let mut checks = Checks::default();
    checks.at_most("eigenvalue_drift", drift, 1e-8);
    checks.at_most("integrate_vs_symes", solver_gap, 1e-6);
    if c.f == FlowFunction::Identity {
        let sign = if t_end >= 0.0 { 1.0 } else { -1.0 };
        let mut prev = partial_traces(&s0);
        let mut monotone = true;
        for s in traj.states.iter().skip(1) {
            let p = partial_traces(s);
            monotone &= p.iter().zip(&prev).all(|(a, b)| sign * (a - b) >= -1e-10);
            prev = p;
        }
        checks.holds("partial_traces_monotone", monotone);
    }
    if diag {
        let constant = traj.states.iter().map(|s| s.max_abs_diff(&s0)).fold(0.0, f64::max);
        checks.at_most("diagonal_start_constant", constant, 1e-12);
    }
    let asym = asymptotic_diagnosis(&traj, 1e-6);

    let o = Output::from_common(c)?;
    write_trajectory(&o, c.format, &traj, out)?;
    let report = json!({
        "command": "flow",
        "n": n,
        "f": c.f.to_string(),
        "t": t_end,
        "seed": c.seed,
        "spectrum": lam0,
        "off_diagonal_initial": s0.off_diagonal_max(),
        "off_diagonal_final": last.off_diagonal_max(),
        "asymptotics": asym,
        "integrator": traj.meta,
        "checks": checks.to_json(),
    });
    o.json("report.json", report, out)?;
    writeln!(out, "flow n={n} f={} t={t_end}", c.f)?;
    checks.print(out)?;
    Ok(checks.outcome())
}

pub(super) fn invspec(c: &Common, lambdas: Option<&str>, out: &mut dyn Write) -> CmdResult {
    let supplied = match lambdas {
        Some(s) => {
            let mut v = parse_list(s, "lambda")?;
            v.sort_by(f64::total_cmp);
            Some(v)
        }
        None => spectrum_arg(c)?,
    };
    let n = dimension(c, supplied.as_deref(), 5)?;
    let mut rng = Rng64::seeded(c.seed);
    let (j0, sd0) = match supplied {
        Some(lam) => {
            let sd = SpectralData::new(lam, random_positive_unit(&mut rng, n))?;
            (reconstruct(&sd)?, sd)
        }
        None => {
            let j = random_jacobi(&mut rng, n);
            let sd = norming_constants(&j)?;
            (j, sd)
        }
    };
    let j_round = reconstruct(&norming_constants(&j0)?)?.max_abs_diff(&j0);
    let sd1 = norming_constants(&reconstruct(&sd0)?)?;
    let sd_round = max_abs_diff_vec(sd1.lambdas(), sd0.lambdas()).max(max_abs_diff_vec(sd1.v(), sd0.v()));
    let t = c.t.unwrap_or(2.0);
    let evolved = moser_evolve(&sd0, &c.f, t)?;
    let evolved_j = reconstruct(&evolved)?;
    let evolve_gap = evolved_j.to_dense().max_abs_diff(&symes_solve(&j0.to_dense(), &c.f, t)?);

    let mut checks = Checks::default();
    checks.at_most("jacobi_roundtrip", j_round, 1e-10);
    checks.at_most("spectral_roundtrip", sd_round, 1e-10);
    checks.at_most("moser_evolve_vs_symes", evolve_gap, 1e-6);

    let o = Output::from_common(c)?;
    o.json("spectral.json", serde_json::to_value(&sd0).expect("serialisable"), out)?;
    let report = json!({
        "command": "invspec",
        "n": n,
        "seed": c.seed,
        "f": c.f.to_string(),
        "t": t,
        "jacobi": { "a": j0.a(), "b": j0.b() },
        "evolved": evolved,
        "checks": checks.to_json(),
    });
    o.json("report.json", report, out)?;
    writeln!(out, "invspec n={n} t={t}")?;
    checks.print(out)?;
    Ok(checks.outcome())
}

pub(super) fn chart(c: &Common, pi: Option<&str>, out: &mut dyn Write) -> CmdResult {
    let spec = spectrum_arg(c)?;
    let n = dimension(c, spec.as_deref(), 4)?;
    let mut rng = Rng64::seeded(c.seed);
    let j0 = start_jacobi(&mut rng, spec.as_deref(), n)?;
    let pi: Vec<usize> = match pi {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| CliError::Config(format!("invalid permutation entry '{x}'"))))
            .collect::<Result<_, _>>()?,
        None => decreasing_permutation(n),
    };
    let fac = chart_factors(&j0, &pi)?;
    let roundtrip = from_chart(&fac.chart)?.max_abs_diff(&j0);
    let t = c.t.unwrap_or(1.0);
    let moved = chart_flow(&fac.chart, &c.f, t)?;
    let flow_gap = from_chart_dense(&moved)?.max_abs_diff(&symes_solve(&j0.to_dense(), &c.f, t)?);
    let mm = momentum_map(&j0)?;
    let signs_ok = fac
        .chart
        .betas()
        .iter()
        .zip(j0.b())
        .all(|(beta, b)| b.abs() <= 1e-9 || beta.signum() == b.signum());

    let mut checks = Checks::default();
    checks.at_most("roundtrip", roundtrip, 1e-9);
    checks.at_most("pattern_residual", fac.pattern_residual, 1e-9);
    checks.at_most("chart_flow_vs_symes", flow_gap, 1e-6);
    checks.holds("sign_coupling", signs_ok);
    checks.holds("momentum_map_majorized", is_majorized(&mm, fac.chart.lambdas(), 1e-10));

    let o = Output::from_common(c)?;
    o.json("chart.json", serde_json::to_value(&fac.chart).expect("serialisable"), out)?;
    let report = json!({
        "command": "chart",
        "n": n,
        "seed": c.seed,
        "f": c.f.to_string(),
        "t": t,
        "flowed_chart": moved,
        "momentum_map": mm,
        "checks": checks.to_json(),
    });
    o.json("report.json", report, out)?;
    writeln!(out, "chart n={n} pi={pi:?}")?;
    checks.print(out)?;
    Ok(checks.outcome())
}

pub(super) fn qr(
    c: &Common,
    strategy: ShiftStrategy,
    matrix: Option<NamedMatrix>,
    check: Option<QrCheck>,
    max_steps: Option<usize>,
    deflation_tol: f64,
    out: &mut dyn Write,
) -> CmdResult {
    let spec = spectrum_arg(c)?;
    let mut rng = Rng64::seeded(c.seed);
    if let Some(kind) = check {
        let n = dimension(c, spec.as_deref(), 5)?;
        let mut checks = Checks::default();
        let report = match kind {
            QrCheck::Interpolation | QrCheck::Power => {
                let s0 = match &spec {
                    Some(s) => random_with_spectrum(&mut rng, s),
                    None => random_spd(&mut rng, n, 0.5, 3.0),
                };
                if kind == QrCheck::Interpolation {
                    let r = interpolation_check(&s0, c.tol)?;
                    checks.at_most("interpolation_deviation", r.max_deviation(), 1e-6);
                    serde_json::to_value(r).expect("serialisable")
                } else {
                    let r = power_qr_identity_check(&s0, 4)?;
                    checks.at_most("power_identity_deviation", r.deviation(), 1e-8);
                    serde_json::to_value(r).expect("serialisable")
                }
            }
            QrCheck::TodaExp => {
                let j = start_jacobi(&mut rng, spec.as_deref(), n)?;
                let r = toda_exp_qr_check(&j, 3)?;
                checks.at_most("toda_exp_deviation", r.max_deviation(), 1e-7);
                serde_json::to_value(r).expect("serialisable")
            }
        };
        let o = Output::from_common(c)?;
        o.json(
            "check.json",
            json!({ "command": "qr", "check": format!("{kind:?}"), "n": n, "seed": c.seed, "report": report, "checks": checks.to_json() }),
            out,
        )?;
        writeln!(out, "qr check {kind:?} n={n}")?;
        checks.print(out)?;
        return Ok(checks.outcome());
    }

    let t0 = match matrix {
        Some(NamedMatrix::ZeroDiag2) => SymTridiagonal::new(vec![0.0, 0.0], vec![1.0])?,
        None => {
            let n = dimension(c, spec.as_deref(), 6)?;
            start_jacobi(&mut rng, spec.as_deref(), n)?
        }
    };
    let n = t0.dim();
    let steps = max_steps.unwrap_or(50 * n);
    let (eig, trace) = qr_iterate(&t0, strategy, deflation_tol, steps)?;
    let mut oracle = jacobi_eigenvalues(&t0.to_dense())?;
    oracle.sort_by(f64::total_cmp);
    let deviation = max_abs_diff_vec(&eig, &oracle);
    let order = estimate_order(&trace.first_segment()).ok();

    let o = Output::from_common(c)?;
    match c.format {
        Format::Csv => {
            let mut w = o.file("trace.csv", out)?;
            trace.write_csv(o.comment().as_deref(), &mut w)?;
            w.flush()?;
        }
        Format::Json => o.json("trace.json", serde_json::to_value(&trace).expect("serialisable"), out)?,
    }
    let summary = json!({
        "command": "qr",
        "n": n,
        "seed": c.seed,
        "strategy": strategy.to_string(),
        "eigenvalues": eig,
        "oracle": oracle,
        "oracle_deviation": deviation,
        "convergence_order": order,
        "deflations": trace.deflations.len(),
        "steps": trace.step_count(),
        "termination": trace.termination,
    });
    o.json("summary.json", summary, out)?;
    writeln!(out, "qr {strategy} n={n}: {} steps, {} deflations", trace.step_count(), trace.deflations.len())?;
    if let Some(p) = order {
        writeln!(out, "  convergence order {p:.3}")?;
    }
    match trace.termination {
        Termination::FixedPoint { step } => Ok(Outcome::CheckFailed(format!(
            "periodic/fixed-point: the {strategy} step {step} returned its input unchanged; witness a={:?} b={:?}",
            t0.a(),
            t0.b()
        ))),
        Termination::MaxSteps => Ok(Outcome::CheckFailed(format!("not converged after {steps} steps"))),
        Termination::Converged => {
            writeln!(out, "  eigenvalues vs oracle: {deviation:.3e}")?;
            if deviation > 1e-9 {
                Ok(Outcome::CheckFailed(format!("eigenvalues deviate from the oracle by {deviation:e}")))
            } else {
                Ok(Outcome::Ok)
            }
        }
    }
}

pub(super) fn cholesky(c: &Common, steps: usize, out: &mut dyn Write) -> CmdResult {
    let spec = spectrum_arg(c)?;
    let n = dimension(c, spec.as_deref(), 4)?;
    let mut rng = Rng64::seeded(c.seed);
    let m = match &spec {
        Some(s) => random_with_spectrum(&mut rng, s),
        None => random_spd(&mut rng, n, 0.5, 3.0),
    };
    let report = cholesky_iterate(&m, steps)?;
    let drift = max_abs_diff_vec(
        &symmetric_eigenvalues(&report.final_matrix.symmetrized())?,
        &symmetric_eigenvalues(&m)?,
    );
    let o = Output::from_common(c)?;
    {
        let mut w = o.file("cholesky.csv", out)?;
        if let Some(cm) = o.comment() {
            writeln!(w, "# {cm}")?;
        }
        writeln!(w, "step,lower_norm")?;
        for (k, v) in report.lower_norms.iter().enumerate() {
            writeln!(w, "{},{v:.16e}", k + 1)?;
        }
        w.flush()?;
    }
    let mut checks = Checks::default();
    checks.at_most("eigenvalue_drift", drift, 1e-8);
    o.json(
        "report.json",
        json!({
            "command": "cholesky",
            "n": n,
            "seed": c.seed,
            "steps_done": report.steps_done,
            "blowup": report.blowup,
            "final_diagonal": report.final_matrix.diagonal(),
            "checks": checks.to_json(),
        }),
        out,
    )?;
    writeln!(out, "cholesky n={n}: {} steps", report.steps_done)?;
    if let Some((k, why)) = &report.blowup {
        return Err(CliError::Numerical(format!("factorization broke down at step {k}: {why}")));
    }
    checks.print(out)?;
    Ok(checks.outcome())
}

#[allow(clippy::too_many_arguments)]
pub(super) fn billiard(
    c: &Common,
    axes: &str,
    bounces: usize,
    check: Option<BilliardCheck>,
    x: Option<&str>,
    y: Option<&str>,
    out: &mut dyn Write,
) -> CmdResult {
    let axes = parse_list(axes, "semi-axis")?;
    if axes.len() < 2 {
        return Err(CliError::Config("the ellipsoid needs at least two semi-axes".into()));
    }
    let e = Ellipsoid::diagonal(&axes)?;
    let mut rng = Rng64::seeded(c.seed);
    let st = match (x, y) {
        (Some(x), Some(y)) => {
            let x = parse_list(x, "x")?;
            let y = parse_list(y, "y")?;
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(CliError::Config("direction must be nonzero".into()));
            }
            BilliardState::new(&e, x, y.iter().map(|v| v / norm).collect())?
        }
        (None, None) => random_state(&e, &mut rng),
        _ => return Err(CliError::Config("--x and --y must be given together".into())),
    };
    let states = orbit(&e, &st, bounces, StepMethod::Geometric)?;
    let residual = states
        .iter()
        .map(|s| e.boundary_residual(&s.x).abs())
        .fold(0.0, f64::max);

    let mut checks = Checks::default();
    checks.at_most("boundary_residual", residual, 1e-10);
    if check == Some(BilliardCheck::Mv) {
        let mv = orbit(&e, &st, bounces, StepMethod::MoserVeselov)?;
        let dev = states
            .iter()
            .zip(&mv)
            .map(|(g, m)| max_abs_diff_vec(&g.x, &m.x).max(max_abs_diff_vec(&g.y, &m.y)))
            .fold(0.0, f64::max);
        checks.at_most("mv_vs_geometric", dev, 1e-8);
        let lambdas = [-1.7, -0.6, 0.4, 1.1, 2.3];
        let p0 = mv_polynomial(&e, &st);
        let mut det_drift = 0.0f64;
        for s in &mv {
            let p = mv_polynomial(&e, s);
            for &l in &lambdas {
                let d0 = p0.det(l);
                det_drift = det_drift.max((p.det(l) - d0).abs() / d0.abs().max(1.0));
            }
        }
        checks.at_most("det_l_drift", det_drift, 1e-8);
    }

    let o = Output::from_common(c)?;
    match c.format {
        Format::Csv => {
            let mut w = o.file("orbit.csv", out)?;
            write_orbit_csv(&states, o.comment().as_deref(), &mut w)?;
            w.flush()?;
        }
        Format::Json => o.json("orbit.json", json!({ "states": states }), out)?,
    }
    o.json(
        "report.json",
        json!({
            "command": "billiard",
            "axes": axes,
            "bounces": bounces,
            "seed": c.seed,
            "initial": st,
            "checks": checks.to_json(),
        }),
        out,
    )?;
    writeln!(out, "billiard n={} bounces={bounces}", e.dim())?;
    checks.print(out)?;
    Ok(checks.outcome())
}

pub(super) fn selfcheck(
    only: Option<&str>,
    dir: Option<&Path>,
    no_timestamp: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let ids: Vec<u8> = match only {
        Some(s) => s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<u8>()
                    .ok()
                    .filter(|id| (1..=11).contains(id))
                    .ok_or_else(|| CliError::Config(format!("invalid criterion '{x}'")))
            })
            .collect::<Result<_, _>>()?,
        None => (1..=11).collect(),
    };
    let mut results: Vec<CriterionResult> = Vec::new();
    for &id in ids.iter().filter(|&&id| id != 11) {
        let r = acceptance::run_criterion(id);
        writeln!(out, "{}", r.line())?;
        results.push(r);
    }
    if ids.contains(&11) {
        let r = acceptance::criterion_cli(&results);
        writeln!(out, "{}", r.line())?;
        results.push(r);
    }
    let pass = acceptance::overall_pass(&results);
    writeln!(out, "selfcheck: {}", if pass { "PASS" } else { "FAIL" })?;
    if let Some(d) = dir {
        let o = Output::new(d, no_timestamp)?;
        o.json("selfcheck.json", json!({ "pass": pass, "criteria": results }), out)?;
    }
    if pass {
        Ok(Outcome::Ok)
    } else {
        let failed: Vec<String> = results
            .iter()
            .filter(|r| r.status == acceptance::Status::Fail)
            .map(|r| r.id.to_string())
            .collect();
        Ok(Outcome::CheckFailed(format!("criteria {} failed", failed.join(","))))
    }
}
