//! The six experiments. Each is a pure function of the scenario and writes
//! its files under the output directory.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use wonglens::dynamics::{
    integrate, lens_data, ym_convex_boundary_check, ym_convex_function_check, ConvexityReport, LensDatum, PhasePoint,
};
use wonglens::gauge::{curvature_at, curvature_pair, gauge_transform, Connection};
use wonglens::manifold::{Quadratic, ScalarField};
use wonglens::recovery::{recover_f_at_boundary, recovery_entries, RecoveryReport, TableLens};
use wonglens::tensor::Tensor3;
use wonglens::variational::{build_xray_input, pseudo_linearization, xray_transform, XRayInput};

use crate::config::{EntrySource, Experiment};
use crate::error::{CliError, CliResult};
use crate::lens_file::LensTableFile;
use crate::output::{columns, fmt_f64, nums, CsvDoc, Report};
use crate::scenario::{build_gauge, Scenario};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Lens table read by `recover-jet`; `<out>/lens_table.csv` by default.
    pub lens_table: Option<PathBuf>,
}

pub fn run_experiment(sc: &Scenario, experiment: Experiment, opts: &RunOptions) -> CliResult<Vec<PathBuf>> {
    match experiment {
        Experiment::Simulate => run_simulate(sc, &opts.out),
        Experiment::LensTable => run_lens_table(sc, &opts.out),
        Experiment::VerifyIdentity => run_verify_identity(sc, &opts.out),
        Experiment::RecoverJet => {
            let table = opts.lens_table.clone().unwrap_or_else(|| opts.out.join("lens_table.csv"));
            run_recover_jet(sc, &table, &opts.out)
        }
        Experiment::CheckConvexity => run_check_convexity(sc, &opts.out),
        Experiment::GaugeDemo => run_gauge_demo(sc, &opts.out),
    }
}

fn phase_columns(n: usize, d: usize) -> Vec<String> {
    let mut h = columns("z", n);
    h.extend(columns("v", n));
    h.extend(columns("xi", d));
    h
}

fn provenance(doc: &mut CsvDoc, sc: &Scenario) {
    doc.meta("config_hash", sc.config.hash());
    doc.meta("data_hash", sc.config.data_hash());
}

fn report_header(sc: &Scenario) -> Report {
    let mut r = Report::default();
    r.kv("config_hash", sc.config.hash());
    r.kv("data_hash", sc.config.data_hash());
    r
}

/// Sidecar of failed entries.
fn error_doc(sc: &Scenario, failures: &[(usize, &PhasePoint, String)]) -> CsvDoc {
    let mut h = vec!["index".to_string()];
    h.extend(phase_columns(sc.chart.dim(), sc.algebra.dim()));
    h.push("error".into());
    let mut doc = CsvDoc::new(&h);
    provenance(&mut doc, sc);
    for (idx, e, msg) in failures {
        let mut f = vec![idx.to_string()];
        f.extend(nums(e.pack().iter()));
        f.push(msg.clone());
        doc.row(&f);
    }
    doc
}

pub fn run_simulate(sc: &Scenario, out: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = sc.entries()?;
    let (n, d) = (sc.chart.dim(), sc.algebra.dim());
    let samples = sc.config.simulate.samples_per_trajectory;
    let results: Vec<_> = entries
        .par_iter()
        .map(|e| {
            let traj = integrate(&sc.chart, sc.connection.as_ref(), e, &sc.integrator)?;
            let drift = traj.conservation_drift(&sc.chart, &sc.algebra)?;
            Ok::<_, wonglens::Error>((traj, drift))
        })
        .collect();

    let mut h = vec!["trajectory".to_string(), "t".to_string()];
    h.extend(phase_columns(n, d));
    h.extend(["speed", "charge_norm", "speed_drift", "charge_drift"].map(String::from));
    let mut doc = CsvDoc::new(&h);
    provenance(&mut doc, sc);
    let mut failures = Vec::new();
    let (mut exited, mut trapped) = (0, 0);
    let (mut max_ds, mut max_dx) = (0.0_f64, 0.0_f64);
    for (k, (e, res)) in entries.iter().zip(&results).enumerate() {
        let (traj, (ds, dx)) = match res {
            Ok(r) => r,
            Err(err) => {
                failures.push((k, e, err.to_string()));
                continue;
            }
        };
        exited += traj.exited as usize;
        trapped += traj.trapped as usize;
        max_ds = max_ds.max(*ds);
        max_dx = max_dx.max(*dx);
        let s0 = sc.chart.norm(&e.z, &e.v)?;
        let x0 = sc.algebra.norm_lower(&e.xi);
        for (t, p) in traj.sample(samples) {
            let speed = sc.chart.norm(&p.z, &p.v)?;
            let charge = sc.algebra.norm_lower(&p.xi);
            let mut f = vec![k.to_string(), fmt_f64(t)];
            f.extend(nums(p.pack().iter()));
            f.extend(nums(&[speed, charge, (speed - s0).abs(), (charge - x0).abs()]));
            doc.row(&f);
        }
    }
    let mut rep = report_header(sc);
    rep.kv("trajectories", entries.len());
    rep.kv("exited", exited);
    rep.kv("trapped", trapped);
    rep.kv("failures", failures.len());
    rep.num("max_speed_drift", max_ds);
    rep.num("max_charge_drift", max_dx);

    let paths = vec![out.join("trajectories.csv"), out.join("simulate_summary.txt"), out.join("simulate.errors.csv")];
    doc.write(&paths[0])?;
    rep.write(&paths[1])?;
    error_doc(sc, &failures).write(&paths[2])?;
    Ok(paths)
}

/// Entries for the lens table per `[lens_table] entries`.
pub fn lens_table_entries(sc: &Scenario) -> CliResult<Vec<PhasePoint>> {
    match sc.config.lens_table.entries {
        EntrySource::Grid => sc.entries(),
        EntrySource::Recovery => {
            let basis = sc.orbit_basis()?;
            let cfg = sc.recovery_config();
            let mut all = Vec::new();
            for p in sc.recovery_points()? {
                all.extend(recovery_entries(&sc.chart, &sc.algebra, &basis, &p, &cfg)?);
            }
            Ok(all)
        }
    }
}

/// Lens table of the scenario's connection plus the failed entries.
pub fn build_lens_table(sc: &Scenario, entries: &[PhasePoint]) -> (LensTableFile, Vec<(usize, String)>) {
    let results = lens_data(&sc.chart, sc.connection.as_ref(), entries, &sc.integrator);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(datum) => rows.push((k, datum)),
            Err(e) => failures.push((k, e.to_string())),
        }
    }
    let table = LensTableFile {
        config_hash: sc.config.hash(),
        data_hash: sc.config.data_hash(),
        n: sc.chart.dim(),
        d: sc.algebra.dim(),
        rows,
    };
    (table, failures)
}

pub fn run_lens_table(sc: &Scenario, out: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = lens_table_entries(sc)?;
    let (table, failures) = build_lens_table(sc, &entries);
    let failed: Vec<_> = failures.iter().map(|(k, m)| (*k, &entries[*k], m.clone())).collect();
    let paths = vec![out.join("lens_table.csv"), out.join("lens_table.errors.csv")];
    table.write(&paths[0])?;
    error_doc(sc, &failed).write(&paths[1])?;
    Ok(paths)
}

/// `sup |F − F̃|` over `samples` points of the `A` trajectory from `phi`.
pub fn xray_field_scale(sc: &Scenario, input: &XRayInput, phi: &PhasePoint, samples: usize) -> CliResult<f64> {
    let traj = integrate(&sc.chart, sc.connection.as_ref(), phi, &sc.integrator)?;
    let mut worst = 0.0_f64;
    for (_, p) in traj.sample(samples) {
        worst = worst.max(input.f_at(&p.z)?.max_abs());
    }
    Ok(worst)
}

/// One row of `verify-identity`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityRow {
    pub travel_time: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub xray_norm: f64,
    pub xray_scale: f64,
}

pub fn identity_row(sc: &Scenario, input: Option<&XRayInput>, phi: &PhasePoint) -> CliResult<IdentityRow> {
    let at = sc.tilde()?;
    let panels = sc.config.identity.panels;
    let check = pseudo_linearization(&sc.chart, sc.connection.as_ref(), at.as_ref(), phi, panels, &sc.integrator)?;
    let (xray_norm, xray_scale) = match input {
        Some(inp) => {
            let iw = xray_transform(&sc.chart, sc.connection.as_ref(), at.as_ref(), inp, phi, panels, &sc.integrator)?;
            (iw.norm(), xray_field_scale(sc, inp, phi, 2 * panels + 1)?)
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(IdentityRow {
        travel_time: check.travel_time,
        lhs_norm: check.lhs.norm(),
        rhs_norm: check.rhs.norm(),
        residual: check.residual().norm(),
        relative_residual: check.relative_residual(),
        xray_norm,
        xray_scale,
    })
}

pub fn run_verify_identity(sc: &Scenario, out: &Path) -> CliResult<Vec<PathBuf>> {
    let at = sc.tilde()?.clone();
    let mut entries = sc.entries()?;
    let take = sc.config.identity.entries;
    if take > 0 {
        entries.truncate(take);
    }
    let input = if sc.config.identity.xray {
        Some(build_xray_input(sc.connection.clone(), at)?)
    } else {
        None
    };
    let rows: Vec<CliResult<IdentityRow>> = entries.par_iter().map(|e| identity_row(sc, input.as_ref(), e)).collect();

    let mut h = vec!["index".to_string()];
    h.extend(phase_columns(sc.chart.dim(), sc.algebra.dim()));
    h.extend(
        ["travel_time", "lhs_norm", "rhs_norm", "residual", "relative_residual", "xray_norm", "xray_scale"]
            .map(String::from),
    );
    let mut doc = CsvDoc::new(&h);
    provenance(&mut doc, sc);
    doc.meta("panels", sc.config.identity.panels);
    let mut failures = Vec::new();
    let (mut worst_rel, mut worst_xray) = (0.0_f64, 0.0_f64);
    for (k, (e, r)) in entries.iter().zip(rows).enumerate() {
        match r {
            Ok(row) => {
                worst_rel = worst_rel.max(row.relative_residual);
                if row.xray_scale > 0.0 {
                    worst_xray = worst_xray.max(row.xray_norm / row.xray_scale);
                }
                let mut f = vec![k.to_string()];
                f.extend(nums(e.pack().iter()));
                f.extend(nums(&[
                    row.travel_time,
                    row.lhs_norm,
                    row.rhs_norm,
                    row.residual,
                    row.relative_residual,
                    row.xray_norm,
                    row.xray_scale,
                ]));
                doc.row(&f);
            }
            Err(err) => failures.push((k, e, err.to_string())),
        }
    }
    let mut rep = report_header(sc);
    rep.kv("entries", entries.len());
    rep.kv("panels", sc.config.identity.panels);
    rep.kv("failures", failures.len());
    rep.num("max_relative_residual", worst_rel);
    rep.num("max_xray_ratio", worst_xray);
    let paths = vec![out.join("identity.csv"), out.join("identity_summary.txt"), out.join("identity.errors.csv")];
    doc.write(&paths[0])?;
    rep.write(&paths[1])?;
    error_doc(sc, &failures).write(&paths[2])?;
    Ok(paths)
}

/// Reads a lens table and rejects it unless it was generated from the same
/// metric, boundary and connection.
pub fn load_lens_table(sc: &Scenario, path: &Path) -> CliResult<LensTableFile> {
    let table = LensTableFile::read(path)?;
    if table.data_hash != sc.config.data_hash() {
        return Err(CliError::Stale(format!(
            "{} was generated from data hash {}, the config has {}",
            path.display(),
            table.data_hash,
            sc.config.data_hash()
        )));
    }
    if table.n != sc.chart.dim() || table.d != sc.algebra.dim() {
        return Err(CliError::Stale("lens table dimensions differ from the config".into()));
    }
    Ok(table)
}

/// `∂ₙA_a = F(N, T_a)` from a chart-coordinate curvature.
fn normal_derivative_truth(f: &Tensor3, frame: &DMatrix<f64>) -> DMatrix<f64> {
    let n = frame.nrows();
    let normal = frame.column(n - 1).into_owned();
    let d = f.shape()[2];
    let mut out = DMatrix::zeros(n - 1, d);
    for a in 0..n - 1 {
        let t = frame.column(a).into_owned();
        out.set_row(a, &curvature_pair(f, normal.as_slice(), t.as_slice()).transpose());
    }
    out
}

pub fn run_recover_jet(sc: &Scenario, table_path: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    let table = load_lens_table(sc, table_path)?;
    let lens = TableLens::new(table.rows.into_iter().map(|r| r.1).collect());
    let basis = sc.orbit_basis()?;
    let cfg = sc.recovery_config();
    let points = sc.recovery_points()?;
    let a = sc.connection.as_ref();
    let reports: Vec<wonglens::Result<RecoveryReport>> = points
        .par_iter()
        .map(|p| recover_f_at_boundary(&sc.chart, a, &basis, p, &lens, &cfg))
        .collect();

    let mut doc = CsvDoc::new(
        &["point", "kind", "i", "j", "alpha", "recovered", "truth", "abs_error"].map(String::from),
    );
    provenance(&mut doc, sc);
    doc.meta("lens_table_config_hash", &table.config_hash);
    let mut rep = report_header(sc);
    rep.kv("lens_table", table_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    rep.kv("lens_table_config_hash", &table.config_hash);
    rep.kv("points", points.len());
    let mut ok = 0;
    let mut worst_rel = 0.0_f64;
    for (k, (p, r)) in points.iter().zip(&reports).enumerate() {
        rep.blank();
        rep.kv(&format!("point.{k}.p"), nums(p.iter()).join(" "));
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                rep.kv(&format!("point.{k}.status"), "error");
                rep.kv(&format!("point.{k}.error"), e);
                continue;
            }
        };
        ok += 1;
        let truth = curvature_at(a, p)?;
        let dn_truth = normal_derivative_truth(&truth, &r.frame);
        let err = r.f_chart.max_abs_diff(&truth);
        let scale = truth.max_abs();
        let rel = if scale > 0.0 { err / scale } else { f64::NAN };
        if rel.is_finite() {
            worst_rel = worst_rel.max(rel);
        }
        let key = |s: &str| format!("point.{k}.{s}");
        rep.kv(&key("status"), if r.noisy { "noisy" } else { "ok" });
        rep.num(&key("condition_number"), r.condition_number);
        rep.num(&key("fit_residual"), r.fit_residual);
        rep.num(&key("antisymmetry_residual"), r.antisymmetry_residual);
        rep.num(&key("boundary_consistency"), r.boundary_consistency);
        rep.num(&key("charge_block_residual"), r.charge_block_residual);
        rep.num(&key("ell_prime_min"), r.ell_prime_min);
        rep.num(&key("convexity_min"), r.convexity_min);
        rep.kv(
            &key("ell_prime"),
            nums(r.families.iter().map(|f| &f.ell_prime)).join(" "),
        );
        rep.num(&key("max_abs_error"), err);
        rep.num(&key("relative_error"), rel);
        let [n, _, d] = truth.shape();
        for i in 0..n {
            for j in 0..n {
                for al in 0..d {
                    let (x, y) = (r.f_chart.get(i, j, al), truth.get(i, j, al));
                    doc.row(&[
                        k.to_string(),
                        "F".into(),
                        i.to_string(),
                        j.to_string(),
                        al.to_string(),
                        fmt_f64(x),
                        fmt_f64(y),
                        fmt_f64((x - y).abs()),
                    ]);
                }
            }
        }
        for ai in 0..n - 1 {
            for al in 0..d {
                let (x, y) = (r.dn_a[(ai, al)], dn_truth[(ai, al)]);
                doc.row(&[
                    k.to_string(),
                    "dnA".into(),
                    ai.to_string(),
                    (n - 1).to_string(),
                    al.to_string(),
                    fmt_f64(x),
                    fmt_f64(y),
                    fmt_f64((x - y).abs()),
                ]);
            }
        }
    }
    rep.blank();
    rep.kv("recovered", ok);
    rep.num("max_relative_error", worst_rel);
    let paths = vec![out.join("recovery.csv"), out.join("recovery_report.txt")];
    doc.write(&paths[0])?;
    rep.write(&paths[1])?;
    if ok == 0 && !points.is_empty() {
        if let Some(Err(e)) = reports.into_iter().next() {
            return Err(e.into());
        }
    }
    Ok(paths)
}

/// Uniform interior samples of `M ∩ box`.
pub fn interior_points(sc: &Scenario, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let chart = &sc.chart;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 1000 * count.max(1) {
        tries += 1;
        let z = DVector::from_fn(chart.dim(), |i, _| chart.box_lo[i] + rng.gen::<f64>() * (chart.box_hi[i] - chart.box_lo[i]));
        if chart.rho(&z) < 0.0 {
            out.push(z);
        }
    }
    out
}

pub fn direction_seeds(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            e
        })
        .collect();
    while out.len() < count {
        out.push(DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)));
    }
    out.truncate(count.max(1));
    out
}

/// Interior and boundary convexity minima with charges scaled by `lambda`.
pub struct ConvexityPair {
    pub function: ConvexityReport,
    pub boundary: ConvexityReport,
}

pub fn convexity_at_scale(sc: &Scenario, f: &dyn ScalarField, lambda: f64) -> CliResult<ConvexityPair> {
    let spec = &sc.config.convexity;
    let n = sc.chart.dim();
    let charges: Vec<DVector<f64>> = sc.lowered_charges()?.into_iter().map(|c| c * lambda).collect();
    let pts = interior_points(sc, spec.interior_points, sc.config.seed);
    let dirs = direction_seeds(n, spec.directions, sc.config.seed);
    let a = sc.connection.as_ref();
    Ok(ConvexityPair {
        function: ym_convex_function_check(&sc.chart, a, f, &pts, &dirs, &charges)?,
        boundary: ym_convex_boundary_check(&sc.chart, a, &sc.boundary_points(spec.boundary_points), spec.directions, &charges)?,
    })
}

pub fn convexity_function(sc: &Scenario) -> CliResult<Quadratic> {
    let n = sc.chart.dim();
    Ok(match &sc.config.convexity.function {
        None => Quadratic::half_norm_squared(n),
        Some(q) => {
            if q.a.len() != n || q.b.len() != n || q.b.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("convexity.function must have dimension {n}")));
            }
            Quadratic::new(q.c0, DVector::from_column_slice(&q.a), DMatrix::from_fn(n, n, |i, j| q.b[i][j]))
        }
    })
}

pub fn run_check_convexity(sc: &Scenario, out: &Path) -> CliResult<Vec<PathBuf>> {
    let f = convexity_function(sc)?;
    let base = convexity_at_scale(sc, &f, 1.0)?;
    let mut rep = report_header(sc);
    for (label, r) in [("function", &base.function), ("boundary", &base.boundary)] {
        rep.num(&format!("{label}.minimum"), r.minimum);
        rep.num(&format!("{label}.field_free_minimum"), r.field_free_minimum);
        rep.kv(&format!("{label}.samples"), r.samples);
        rep.kv(&format!("{label}.argmin.z"), nums(r.argmin.z.iter()).join(" "));
        rep.kv(&format!("{label}.argmin.v"), nums(r.argmin.v.iter()).join(" "));
        rep.kv(&format!("{label}.argmin.xi"), nums(r.argmin.xi.iter()).join(" "));
        rep.kv(&format!("{label}.strictly_convex"), r.minimum > 0.0);
    }
    let lambdas = &sc.config.convexity.lambdas;
    let sweep: Vec<CliResult<ConvexityPair>> = lambdas.par_iter().map(|&l| convexity_at_scale(sc, &f, l)).collect();
    let mut doc = CsvDoc::new(&["lambda", "function_minimum", "boundary_minimum"].map(String::from));
    provenance(&mut doc, sc);
    for (l, r) in lambdas.iter().zip(sweep) {
        let r = r?;
        doc.row(&nums(&[*l, r.function.minimum, r.boundary.minimum]));
    }
    let paths = vec![out.join("convexity_report.txt"), out.join("lambda_sweep.csv")];
    rep.write(&paths[0])?;
    doc.write(&paths[1])?;
    Ok(paths)
}

/// Largest componentwise difference of two lens rows.
pub fn lens_row_difference(a: &LensDatum, b: &LensDatum) -> f64 {
    let ea = a.exit.pack();
    let eb = b.exit.pack();
    ea.iter()
        .zip(&eb)
        .map(|(x, y)| (x - y).abs())
        .fold((a.travel_time - b.travel_time).abs(), f64::max)
}

pub fn run_gauge_demo(sc: &Scenario, out: &Path) -> CliResult<Vec<PathBuf>> {
    let spec = sc
        .config
        .gauge
        .as_ref()
        .ok_or_else(|| CliError::Config("gauge-demo needs a `[gauge]` section".into()))?;
    let n = sc.chart.dim();
    let u = build_gauge(spec, &sc.algebra, n)?;
    let at = gauge_transform(sc.connection.clone(), u.clone())?;
    let mut defect = 0.0_f64;
    let id = wonglens::linalg::CMatrix::identity(sc.algebra.matrix_size(), sc.algebra.matrix_size());
    for p in sc.boundary_points(sc.config.grid.boundary_points) {
        defect = defect.max((u.value(&p)? - &id).iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    let entries = sc.entries()?;
    let la = lens_data(&sc.chart, sc.connection.as_ref(), &entries, &sc.integrator);
    let lt = lens_data(&sc.chart, &at as &dyn Connection, &entries, &sc.integrator);

    let mut doc = CsvDoc::new(
        &["index", "travel_time", "travel_time_tilde", "trapped", "max_difference", "equal_at_1e-6"].map(String::from),
    );
    provenance(&mut doc, sc);
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    let mut unequal = 0;
    for (k, (e, (ra, rt))) in entries.iter().zip(la.into_iter().zip(lt)).enumerate() {
        match (ra, rt) {
            (Ok(ra), Ok(rt)) => {
                let diff = lens_row_difference(&ra, &rt);
                worst = worst.max(diff);
                let round = |d: &LensDatum| -> Vec<i64> {
                    let mut v: Vec<f64> = d.exit.pack();
                    v.push(d.travel_time);
                    v.iter().map(|x| (x * 1e6).round() as i64).collect()
                };
                let same = round(&ra) == round(&rt);
                unequal += (!same) as usize;
                doc.row(&[
                    k.to_string(),
                    fmt_f64(ra.travel_time),
                    fmt_f64(rt.travel_time),
                    ((ra.trapped || rt.trapped) as u8).to_string(),
                    fmt_f64(diff),
                    (same as u8).to_string(),
                ]);
            }
            (Err(err), _) | (_, Err(err)) => failures.push((k, e, err.to_string())),
        }
    }
    let mut rep = report_header(sc);
    rep.kv("rows", entries.len());
    rep.kv("failures", failures.len());
    rep.num("gauge_boundary_defect", defect);
    rep.num("max_lens_difference", worst);
    rep.kv("rows_differing_after_rounding_1e-6", unequal);
    let paths = vec![out.join("gauge_demo.csv"), out.join("gauge_demo.txt"), out.join("gauge_demo.errors.csv")];
    doc.write(&paths[0])?;
    rep.write(&paths[1])?;
    error_doc(sc, &failures).write(&paths[2])?;
    Ok(paths)
}
