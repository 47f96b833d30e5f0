use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::json;
use supgnet::dataset::{self, DatasetConfig, Sampling};
use supgnet::evaluation::{
    self, compare_all, default_pe_grid, line_comparison, norm_table, pe_sweep_points, prediction_grid,
    theta_points, ComparePoint, Comparison, NormRow, PredictionRow, ReferenceCache,
};
use supgnet::fem::{build_mesh, build_space, SupgSolver};
use supgnet::metrics::{error_report, extract_line, fmt_f64, ErrorReport, Segment};
use supgnet::mlp::{self, Activation, MlpModel, TrainConfig};
use supgnet::problems::ProblemId;
use supgnet::stabilization::{mu_from_global_peclet, mu_from_local_peclet, peclet, tau_theory};
use supgnet::tau_search::{mesh_size, sweep_optimal_tau, SearchSettings, SweepPoint, TauObjective};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

/// Output directory plus the manifest that lists everything written.
pub struct Run {
    pub out: PathBuf,
    pub manifest: RunManifest,
}

impl Run {
    fn write(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out).map_err(|e| supgnet::Error::io(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| supgnet::Error::io(&path, e))?;
        self.manifest.outputs.push(path.clone());
        Ok(path)
    }

    fn write_json(&mut self, name: &str, value: &impl serde::Serialize) -> CliResult<PathBuf> {
        // Round-trip through `Value` so object keys come out sorted.
        let value = serde_json::to_value(value).map_err(supgnet::Error::from)?;
        let mut text = serde_json::to_string_pretty(&value).map_err(supgnet::Error::from)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn track(&mut self, path: PathBuf) {
        self.manifest.outputs.push(path);
    }
}

impl From<&SearchArgs> for SearchSettings {
    fn from(a: &SearchArgs) -> Self {
        SearchSettings {
            bracket: a.bracket,
            tol: a.tol,
            budget: a.budget,
        }
    }
}

fn settings(a: &SearchArgs) -> CliResult<SearchSettings> {
    let s = SearchSettings::from(a);
    s.validate()?;
    Ok(s)
}

/// Diffusion coefficient from whichever of `μ`, `Pe_h`, `Pe_g` was given.
fn resolve_mu(
    problem: ProblemId,
    h: f64,
    mu: Option<f64>,
    pe_h: Option<f64>,
    pe_g: Option<f64>,
) -> CliResult<f64> {
    let beta = problem.advection_norm();
    match (mu, pe_h, pe_g) {
        (Some(mu), None, None) => Ok(mu),
        (None, Some(pe_h), None) => {
            info!("Pe_h = {pe_h} on h = {h}: Pe_g = Pe_h·L/h = {}", pe_h / h);
            Ok(mu_from_local_peclet(beta, h, pe_h)?)
        }
        (None, None, Some(pe_g)) => {
            info!("Pe_g = {pe_g} on h = {h}: Pe_h = Pe_g·h/L = {}", pe_g * h);
            Ok(mu_from_global_peclet(beta, 1.0, pe_g)?)
        }
        _ => Err(CliError::Usage("give exactly one of --mu, --pe-h, --pe-g".into())),
    }
}

fn load_model(path: &Path) -> CliResult<MlpModel> {
    if !path.exists() {
        return Err(CliError::MissingArtifact {
            what: "model file",
            path: path.to_path_buf(),
            producer: "supgnet train",
        });
    }
    Ok(MlpModel::load(path)?)
}

fn model_path(run: &Run, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| run.out.join("model.txt"))
}

fn segment(line: LineSpec) -> Segment {
    match line {
        LineSpec::X(x) => Segment::vertical(x),
        LineSpec::Y(y) => Segment::horizontal(y),
    }
}

pub fn solve(run: &mut Run, a: &SolveArgs) -> CliResult<()> {
    let dim = a.problem.dim();
    let h = mesh_size(dim, a.disc.n);
    let d = &a.diffusion;
    let mu = resolve_mu(a.problem, h, d.mu, d.pe_h, d.pe_g)?;
    let problem = a.problem.build(mu, a.theta)?;
    let space = build_space(build_mesh(dim, a.disc.n)?, a.disc.r)?;
    let beta = problem.beta_norm();
    let tau = match &a.tau_mode {
        TauMode::Theory => tau_theory(beta, h, mu, a.disc.r)?,
        TauMode::Fixed(t) => *t,
        TauMode::None => 0.0,
        TauMode::Ann(path) => {
            let model = load_model(path)?;
            let pe_g = peclet(beta, h, problem.char_length, mu)?.global;
            model.predict_tau(a.disc.r, h, pe_g)?
        }
    };
    info!("solving {} with n={} r={} mu={mu:e} tau={tau:e}", a.problem, a.disc.n, a.disc.r);
    let solution = SupgSolver::new(&problem, &space)?.solve(tau)?;

    let mut text = String::from("x,y,u\n");
    for (x, u) in space.dof_coords().iter().zip(solution.coefficients()) {
        let _ = writeln!(text, "{},{},{}", fmt_f64(x[0]), fmt_f64(x[1]), fmt_f64(*u));
    }
    run.write("solution.csv", &text)?;

    let cache = ReferenceCache::new();
    let reference = evaluation::reference_for(&problem, &cache)?;
    let report = error_report(&problem, &solution, reference.as_ref())?;
    run.write(
        "error_report.csv",
        &format!("{}\n{}\n", ErrorReport::CSV_HEADER, report.csv_row()),
    )?;
    println!(
        "tau={} E={} l2={} h1={}",
        fmt_f64(tau),
        fmt_f64(report.e_nodal),
        fmt_f64(report.l2),
        fmt_f64(report.h1)
    );

    if let Some(line) = a.line {
        let samples = extract_line(&solution, segment(line), a.samples)?;
        let mut text = String::from("coordinate,x,y,u,reference\n");
        for s in samples {
            let r = reference.value(s.point)?;
            let _ = writeln!(
                text,
                "{},{},{},{},{}",
                fmt_f64(s.coordinate),
                fmt_f64(s.point[0]),
                fmt_f64(s.point[1]),
                fmt_f64(s.value),
                fmt_f64(r)
            );
        }
        run.write("line.csv", &text)?;
    }
    Ok(())
}

pub fn tauopt(run: &mut Run, a: &TauoptArgs) -> CliResult<()> {
    let settings = settings(&a.search)?;
    let dim = a.problem.dim();
    let h = mesh_size(dim, a.disc.n);
    let (n, r) = (a.disc.n, a.disc.r);

    if let Some(thetas) = &a.theta_sweep {
        if a.problem != ProblemId::ConstantForcing2d {
            return Err(CliError::Usage("--theta-sweep runs on forced2d".into()));
        }
        let mu = resolve_mu(a.problem, h, a.mu, a.pe_h, a.pe_g)?;
        let pe_g = peclet(a.problem.advection_norm(), h, 1.0, mu)?.global;
        let model = a.model.as_deref().map(load_model).transpose()?;
        let points = theta_points(n, r, pe_g, &thetas.0);
        let rows = compare_all(&points, model.as_ref(), Some(&settings), &ReferenceCache::new())?;
        let mut text = format!("{}\n", Comparison::THETA_CSV_HEADER);
        for row in &rows {
            text.push_str(&row.theta_csv_row());
            text.push('\n');
        }
        run.write("theta_sweep.csv", &text)?;
        return Ok(());
    }

    if let Some(sweep) = &a.sweep {
        let beta = a.problem.advection_norm();
        let points: Vec<SweepPoint> = sweep
            .values()
            .into_iter()
            .map(|pe| {
                let mu = match sweep.kind {
                    PecletKind::Local => mu_from_local_peclet(beta, h, pe),
                    PecletKind::Global => mu_from_global_peclet(beta, 1.0, pe),
                }?;
                Ok(SweepPoint {
                    problem: a.problem,
                    r,
                    n,
                    mu,
                    theta: a.theta,
                })
            })
            .collect::<supgnet::Result<_>>()?;
        let rows = sweep_optimal_tau(&points, &settings);
        let mut text = String::from(
            "r,h,mu,pe_h,pe_g,tau_star,e_star,tau_theory,e_theory,ratio,evaluations,converged\n",
        );
        let mut failures = 0;
        for row in &rows {
            let p = peclet(beta, h, 1.0, row.point.mu)?;
            let (tau, e, evals, conv) = match &row.result {
                Ok(res) => (res.tau_star, res.e_at_star, res.evaluations, res.converged),
                Err(msg) => {
                    warn!("optimization failed at mu={}: {msg}", row.point.mu);
                    failures += 1;
                    (f64::NAN, f64::NAN, 0, false)
                }
            };
            let _ = writeln!(
                text,
                "{r},{},{},{},{},{},{},{},{},{},{evals},{conv}",
                fmt_f64(h),
                fmt_f64(row.point.mu),
                fmt_f64(p.local),
                fmt_f64(p.global),
                fmt_f64(tau),
                fmt_f64(e),
                fmt_f64(row.tau_theory),
                fmt_f64(row.e_theory),
                fmt_f64(tau / row.tau_theory)
            );
        }
        run.write("tauopt_sweep.csv", &text)?;
        if failures == rows.len() {
            return Err(supgnet::Error::OptimizationFailure("every sweep point failed".into()).into());
        }
        return Ok(());
    }

    let mu = resolve_mu(a.problem, h, a.mu, a.pe_h, a.pe_g)?;
    let problem = a.problem.build(mu, a.theta)?;
    let space = build_space(build_mesh(dim, n)?, r)?;
    let cache = ReferenceCache::new();
    let reference = evaluation::reference_for(&problem, &cache)?;
    let objective = TauObjective::new(&problem, &space, reference.as_ref())?;
    let result = objective.minimize(&settings)?;
    let tau_t = tau_theory(problem.beta_norm(), h, mu, r)?;
    let pe = peclet(problem.beta_norm(), h, problem.char_length, mu)?;
    println!(
        "tau_star={} E={} tau_theory={}",
        fmt_f64(result.tau_star),
        fmt_f64(result.e_at_star),
        fmt_f64(tau_t)
    );
    run.write_json(
        "tauopt.json",
        &json!({
            "problem": a.problem,
            "r": r,
            "n": n,
            "h": h,
            "mu": mu,
            "pe_h": pe.local,
            "pe_g": pe.global,
            "theta": a.theta,
            "result": result,
            "tau_theory": tau_t,
            "e_theory": objective.eval(tau_t)?,
        }),
    )?;
    Ok(())
}

pub fn generate(run: &mut Run, a: &GenerateArgs) -> CliResult<()> {
    let config = DatasetConfig {
        m: a.m,
        r_set: a.r_set.clone(),
        n_set: a.n_set.clone(),
        pe_range: a.pe_range,
        sampling: a.sampling.parse::<Sampling>()?,
        seed: a.seed,
        settings: settings(&a.search)?,
    };
    run.manifest.seeds.push(a.seed);
    let data = dataset::generate_dataset(&config)?;
    if data.records.is_empty() {
        return Err(supgnet::Error::OptimizationFailure("no sample produced a record".into()).into());
    }
    for d in &data.dropped {
        warn!("dropped sample {}: {}", d.index, d.reason);
    }
    let path = run.out.join(&a.output);
    fs::create_dir_all(&run.out).map_err(|e| supgnet::Error::io(&run.out, e))?;
    dataset::write_csv(&path, &data.records)?;
    run.track(path.clone());
    let meta = dataset::metadata_path(&path);
    dataset::write_metadata(&meta, &config, &data)?;
    run.track(meta);
    println!("{} records, {} dropped", data.records.len(), data.dropped.len());
    Ok(())
}

pub fn train(run: &mut Run, a: &TrainArgs) -> CliResult<()> {
    let data_path = a.data.clone().unwrap_or_else(|| run.out.join("dataset.csv"));
    if !data_path.exists() {
        return Err(CliError::MissingArtifact {
            what: "dataset",
            path: data_path,
            producer: "supgnet generate",
        });
    }
    if a.hidden.is_empty() || a.hidden.contains(&0) {
        return Err(CliError::Usage("hidden widths must be positive".into()));
    }
    let records = dataset::read_csv(&data_path)?;
    let (training, validation) = dataset::split(&records, a.split, a.seed)?;
    let mut sizes = vec![3];
    sizes.extend(&a.hidden);
    sizes.push(1);
    let output = if a.linear_output {
        Activation::Linear
    } else {
        Activation::Relu
    };
    let mut model = mlp::init_model_with(&sizes, output, a.seed)?;
    let config = TrainConfig {
        learning_rate: a.learning_rate,
        momentum: a.momentum,
        batch_size: a.batch_size,
        epochs: a.epochs,
        patience: (a.patience > 0).then_some(a.patience),
        seed: a.seed,
        shuffle: true,
    };
    run.manifest.seeds.push(a.seed);
    let history = mlp::train(&mut model, &training, &validation, &config)?;
    let model_path = run.out.join(&a.model);
    fs::create_dir_all(&run.out).map_err(|e| supgnet::Error::io(&run.out, e))?;
    model.save(&model_path)?;
    run.track(model_path);
    run.write(&a.history, &history.to_csv())?;
    let best = &history.epochs[history.best_epoch - 1];
    println!(
        "best epoch {} train_mse={} val_mse={}{}",
        best.epoch,
        fmt_f64(best.train_mse),
        fmt_f64(best.val_mse),
        if history.stopped_early { " (stopped early)" } else { "" }
    );
    Ok(())
}

pub fn predict(run: &mut Run, a: &PredictArgs) -> CliResult<()> {
    let model = load_model(&model_path(run, &a.model))?;
    let h_list: Vec<f64> = if !a.h.is_empty() {
        a.h.clone()
    } else if !a.n.is_empty() {
        a.n.iter().map(|&n| mesh_size(2, n)).collect()
    } else {
        return Err(CliError::Usage("give --h or --n".into()));
    };
    let pe_list = match &a.pe_grid {
        Some(spec) => {
            let parts: Vec<&str> = spec.split(':').collect();
            let [lo, hi, count] = parts[..] else {
                return Err(CliError::Usage("--pe-grid expects lo:hi:count".into()));
            };
            let parse = |s: &str| s.parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {s:?}")));
            let count = count
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad count {count:?}")))?;
            supgnet::tau_search::log_grid(parse(lo)?, parse(hi)?, count)
        }
        None if !a.pe_g.is_empty() => a.pe_g.clone(),
        None => return Err(CliError::Usage("give --pe-g or --pe-grid".into())),
    };
    let rows = prediction_grid(&model, &a.r, &h_list, &pe_list)?;
    let mut text = format!("{}\n", PredictionRow::CSV_HEADER);
    for row in &rows {
        text.push_str(&row.csv_row());
        text.push('\n');
        println!("r={} h={} pe_g={} tau={}", row.r, row.h, row.pe_g, fmt_f64(row.tau_ann));
    }
    run.write("predictions.csv", &text)?;
    Ok(())
}

fn comparison_csv(rows: &[Comparison]) -> String {
    let mut text = format!("{}\n", Comparison::CSV_HEADER);
    for row in rows {
        text.push_str(&row.csv_row());
        text.push('\n');
    }
    text
}

fn point(problem: ProblemId, n: usize, r: usize, pe_g: f64) -> CliResult<ComparePoint> {
    Ok(ComparePoint {
        problem,
        r,
        n,
        mu: mu_from_global_peclet(problem.advection_norm(), 1.0, pe_g)?,
        theta: None,
    })
}

/// Line plots of the theoretical and predicted solutions.
fn write_lines(
    run: &mut Run,
    prefix: &str,
    points: &[ComparePoint],
    line_x: impl Fn(f64) -> f64,
    model: &MlpModel,
    samples: usize,
    cache: &ReferenceCache,
) -> CliResult<()> {
    for p in points {
        let h = mesh_size(2, p.n);
        let problem = p.problem.build(p.mu, p.theta)?;
        let beta = problem.beta_norm();
        let tau_t = tau_theory(beta, h, p.mu, p.r)?;
        let pe_g = peclet(beta, h, problem.char_length, p.mu)?.global;
        let tau_a = model.predict_tau(p.r, h, pe_g)?;
        let lines = line_comparison(
            *p,
            &[("u_theory", tau_t), ("u_ann", tau_a)],
            Segment::vertical(line_x(h)),
            samples,
            cache,
        )?;
        let name = format!("{prefix}_r{}_n{}_peg{}.csv", p.r, p.n, pe_g.round() as u64);
        run.write(&name, &lines.to_csv())?;
    }
    Ok(())
}

fn share(rows: &[Comparison], ok: impl Fn(&Comparison) -> bool) -> f64 {
    rows.iter().filter(|c| ok(c)).count() as f64 / rows.len().max(1) as f64
}

pub fn evaluate(run: &mut Run, a: &EvaluateArgs) -> CliResult<()> {
    let model = load_model(&model_path(run, &a.model))?;
    let search = settings(&a.search)?;
    let search = a.optimize.then_some(&search);
    let cache = ReferenceCache::new();
    let grid = default_pe_grid(a.points);
    let n_or = |default: &[usize]| -> Vec<usize> {
        if a.n.is_empty() {
            default.to_vec()
        } else {
            a.n.clone()
        }
    };
    match a.test {
        1 => {
            let rows = norm_table(Some(&model))?;
            let mut text = format!("{}\n", NormRow::CSV_HEADER);
            for row in &rows {
                text.push_str(&row.csv_row());
                text.push('\n');
            }
            run.write("test1_norms.csv", &text)?;
            let beta = ProblemId::Training2d.advection_norm();
            let points = rows
                .iter()
                .map(|row| {
                    Ok(ComparePoint {
                        problem: ProblemId::Training2d,
                        r: row.r,
                        n: row.n,
                        mu: mu_from_local_peclet(beta, row.h, row.pe_h)?,
                        theta: None,
                    })
                })
                .collect::<supgnet::Result<Vec<_>>>()?;
            write_lines(run, "test1_line", &points, |h| 1.0 - h, &model, a.samples, &cache)?;
            let ratio: Vec<f64> = rows.iter().map(|r| r.l2_ann / r.l2_theory).collect();
            run.write_json("test1_summary.json", &json!({ "l2_ann_over_theory": ratio }))?;
        }
        2 => {
            let points = pe_sweep_points(ProblemId::ConstantForcing2d, &n_or(&[10]), &a.r, &grid);
            let rows = compare_all(&points, Some(&model), search, &cache)?;
            run.write("test2_sweep.csv", &comparison_csv(&rows))?;
            let lines = [(7.0, 10, 1), (7071.0, 20, 3), (14142.0, 10, 3), (70710.0, 20, 3)]
                .iter()
                .map(|&(pe, n, r)| point(ProblemId::ConstantForcing2d, n, r, pe))
                .collect::<CliResult<Vec<_>>>()?;
            write_lines(run, "test2_line", &lines, |h| 1.0 - h, &model, a.samples, &cache)?;
            let frac = share(&rows, |c| c.e_ann <= c.e_theory);
            println!("E(tau_ann) <= E(tau_theory) at {:.1}% of points", 100.0 * frac);
            run.write_json("test2_summary.json", &json!({ "points": rows.len(), "ann_not_worse": frac }))?;
        }
        3 => {
            let points = [(7.0, 20, 1), (707.0, 10, 3)]
                .iter()
                .map(|&(pe, n, r)| point(ProblemId::Homogeneous2d, n, r, pe))
                .collect::<CliResult<Vec<_>>>()?;
            let rows = compare_all(&points, Some(&model), search, &cache)?;
            run.write("test3_compare.csv", &comparison_csv(&rows))?;
            write_lines(run, "test3_line", &points, |_| 0.5, &model, a.samples, &cache)?;
        }
        4 => {
            let points = pe_sweep_points(ProblemId::Atan2d, &n_or(&[10, 20]), &a.r, &grid);
            let rows = compare_all(&points, Some(&model), search, &cache)?;
            run.write("test4_sweep.csv", &comparison_csv(&rows))?;
            let frac = share(&rows, |c| c.e_ann <= 2.0 * c.e_theory);
            println!("E(tau_ann) <= 2 E(tau_theory) at {:.1}% of points", 100.0 * frac);
            run.write_json("test4_summary.json", &json!({ "points": rows.len(), "ann_within_factor_2": frac }))?;
        }
        t => return Err(CliError::Usage(format!("unknown test {t}"))),
    }
    Ok(())
}
