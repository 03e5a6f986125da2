use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use blockcap::bench::{random_block_sparse, run_curve, single_instance_demo, DemoReport, TrialSpec};
use blockcap::capacity::{
    capacity_ric_bound, summarize_spectra, support_spectra, symmetric_capacity_ric_bound,
};
use blockcap::recovery::NOISELESS_ETA_REL;
use blockcap::{
    capacity_report, design as run_design, BlockSpec, BlockStructure, CMatrix, EmModel, GroupBasisPursuit, ModelDescriptor,
    RecoveryOptions,
};
use serde_json::json;

use crate::config::{Resolved, RunConfig};
use crate::matrix_file::{format_matrix, format_vector, read_matrix, read_vector};
use crate::{BenchmarkArgs, BlockArgs, CapacityArgs, CliError, DemoArgs, DesignArgs, RecoverArgs, RicArgs, SolverArg};

/// Files collected during a command and written together at the end.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn commit(self, dir: &Path) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for (name, contents) in self.files {
            std::fs::write(dir.join(&name), contents).map_err(io)?;
        }
        Ok(())
    }
}

fn out_dir(flag: &Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    flag.clone().or_else(|| cfg.and_then(|c| c.output_dir.clone())).unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<Resolved, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    cfg.resolve()
}

fn block_structure(args: &BlockArgs, n: usize) -> Result<BlockStructure, CliError> {
    let bs = if let Some(k) = args.blocks {
        BlockStructure::contiguous(n, k)?
    } else if let Some(path) = &args.blocks_file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let spec: BlockSpec =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        spec.build()?
    } else if let Some(path) = &args.config {
        RunConfig::load(path)?.resolve()?.bs
    } else {
        return Err(CliError::Usage("one of --blocks, --blocks-file or --config is required".into()));
    };
    if bs.signal_len() != n {
        return Err(CliError::Usage(format!("blocks cover {} columns, matrix has {n}", bs.signal_len())));
    }
    Ok(bs)
}

fn format_params(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v:.16e}\n")).collect()
}

fn format_grid(grid: &[Vec<f64>]) -> String {
    grid.iter()
        .map(|row| row.iter().map(|v| format!("{v:.9e}")).collect::<Vec<_>>().join(",") + "\n")
        .collect()
}

fn to_json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn design(args: &DesignArgs) -> Result<(), CliError> {
    let r = load_config(&args.config, args.seed)?;
    let dir = out_dir(&args.out, Some(&r.config));
    let model = r.model.as_ref();
    let p0 = model.random_init(r.config.seed)?;
    let res = run_design(model, &r.bs, &p0, &r.config.optimizer)?;

    let mut trace = String::from("iteration,min_capacity,objective,violation,rho,inner_iterations\n");
    for t in &res.trace {
        let _ = writeln!(
            trace,
            "{},{},{},{},{},{}",
            t.iteration, t.min_capacity, t.objective, t.violation, t.rho, t.inner_iterations
        );
    }
    let summary = json!({
        "model": r.config.model,
        "seed": r.config.seed,
        "beta": r.config.beta,
        "baseline_min_capacity": res.initial_report.min_capacity,
        "optimized_min_capacity": res.report.min_capacity,
        "improvement": res.report.min_capacity - res.initial_report.min_capacity,
        "termination": res.termination.as_str(),
        "outer_iterations": res.trace.len(),
    });
    let mut out = Outputs::default();
    out.add("p_baseline.txt", format_params(&p0));
    out.add("p_optimized.txt", format_params(&res.p_final));
    out.add("baseline_matrix.txt", format_matrix(&model.assemble(&p0)?));
    out.add("optimized_matrix.txt", format_matrix(&model.assemble(&res.p_final)?));
    out.add("capacity_trace.csv", trace);
    out.add("summary.json", to_json(&summary));
    out.commit(&dir)?;
    println!(
        "baseline min capacity {:.6}\noptimized min capacity {:.6}\ntermination {}",
        res.initial_report.min_capacity,
        res.report.min_capacity,
        res.termination.as_str()
    );
    Ok(())
}

pub fn capacity(args: &CapacityArgs) -> Result<(), CliError> {
    let a = read_matrix(&args.matrix)?;
    let bs = block_structure(&args.blocks, a.ncols())?;
    let report = capacity_report(&a, &bs, args.beta)?;
    let pairs = bs.pair_supports();
    let mut csv = String::from("pair_id,block_a,block_b,capacity\n");
    for (p, c) in pairs.iter().zip(&report.per_pair) {
        let _ = writeln!(csv, "{},{},{},{:.17e}", p.pair_id, p.blocks.0, p.blocks.1, c);
    }
    print!("{csv}");
    let worst = &pairs[report.argmin_pair];
    println!(
        "min_capacity {:.17e} pair {} blocks {} {}",
        report.min_capacity, worst.pair_id, worst.blocks.0, worst.blocks.1
    );
    if let Some(dir) = &args.out {
        let mut out = Outputs::default();
        out.add("capacity.csv", csv);
        out.commit(dir)?;
    }
    Ok(())
}

pub fn ric(args: &RicArgs) -> Result<(), CliError> {
    let a = read_matrix(&args.matrix)?;
    let bs = block_structure(&args.blocks, a.ncols())?;
    let spectra = support_spectra(&a, &bs, args.t, args.cap)?;
    let ric = summarize_spectra(&spectra, args.t);
    let join = |b: &[usize]| b.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
    let mut csv = String::from("support,lambda_min,lambda_max,deviation\n");
    for s in &spectra {
        let _ = writeln!(csv, "{},{:.17e},{:.17e},{:.17e}", join(&s.blocks), s.lambda_min, s.lambda_max, s.deviation());
    }
    let l = bs.block_len();
    let summary = format!(
        "delta {:.17e}\nT {}\nlambda_min {:.17e} support {}\nlambda_max {:.17e} support {}\ncapacity_bound {:.17e}\nsymmetric_capacity_bound {:.17e}\n",
        ric.delta,
        ric.t,
        ric.lambda_min,
        join(&ric.support_lo),
        ric.lambda_max,
        join(&ric.support_hi),
        capacity_ric_bound(ric.delta, l, args.t, args.beta),
        symmetric_capacity_ric_bound(ric.delta, l, args.t),
    );
    print!("{summary}");
    if let Some(dir) = &args.out {
        let mut out = Outputs::default();
        out.add("ric.csv", csv);
        out.add("ric_summary.txt", summary);
        out.commit(dir)?;
    }
    Ok(())
}

pub fn recover(args: &RecoverArgs) -> Result<(), CliError> {
    let a = read_matrix(&args.matrix)?;
    let y = read_vector(&args.y)?;
    if y.len() != a.nrows() {
        return Err(CliError::Usage(format!("measurement has {} entries, matrix {} rows", y.len(), a.nrows())));
    }
    let truth = args.truth.as_deref().map(read_vector).transpose()?;
    if let Some(x) = &truth {
        if x.len() != a.ncols() {
            return Err(CliError::Usage(format!("truth has {} entries, matrix {} columns", x.len(), a.ncols())));
        }
    }
    let bs = block_structure(&args.blocks, a.ncols())?;
    let eta = args.eta.unwrap_or(NOISELESS_ETA_REL * y.norm());
    let engine = match args.solver {
        SolverArg::Joint => GroupBasisPursuit::new(&a, &bs)?,
        SolverArg::L1 => GroupBasisPursuit::l1(&a)?,
    };
    let r = engine.solve(&y, eta, &RecoveryOptions::default())?;
    let mut line = format!(
        "residual={:.17e} objective={:.17e} iterations={} converged={} eta={:.17e}",
        r.residual, r.objective, r.iterations, r.converged, eta
    );
    if let Some(x) = &truth {
        let err = blockcap::recovery::relative_error(&r.x_hat, x)?;
        let _ = write!(line, " relative_error={err:.17e} success={}", err <= args.tol_success);
    }
    println!("{line}");
    let dir = out_dir(&args.out, None);
    let mut out = Outputs::default();
    out.add("x_hat.txt", format_vector(&r.x_hat));
    out.add("recover_report.txt", line + "\n");
    out.commit(&dir)
}

fn parse_labeled(spec: &str) -> Result<(String, PathBuf), CliError> {
    match spec.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() && !label.contains(',') => {
            Ok((label.to_string(), PathBuf::from(path)))
        }
        _ => Err(CliError::Usage(format!("--matrix expects LABEL=PATH, got {spec:?}"))),
    }
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    let r = load_config(&args.config, args.seed)?;
    let mut cfg = r.config.benchmark.clone();
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(t) = args.tol_success {
        cfg.tol_success = t;
    }
    let mut matrices = Vec::new();
    for spec in &args.matrices {
        let (label, path) = parse_labeled(spec)?;
        let a = read_matrix(&path)?;
        if a.shape() != (r.model.rows(), r.model.cols()) {
            return Err(CliError::Usage(format!(
                "{}: matrix is {}x{}, config describes {}x{}",
                path.display(),
                a.nrows(),
                a.ncols(),
                r.model.rows(),
                r.model.cols()
            )));
        }
        matrices.push((label, a));
    }
    let curve = run_curve(&matrices, &r.bs, &cfg)?;
    let meta = json!({
        "trials": curve.trials,
        "levels": curve.levels,
        "seed": cfg.seed,
        "tol_success": curve.tol_success,
        "eta_rel": curve.eta_rel,
        "solver_tol": cfg.recovery.tol,
        "solver_max_iter": cfg.recovery.max_iter,
    });
    let csv = curve.to_csv();
    print!("{csv}");
    let dir = out_dir(&args.out, Some(&r.config));
    let mut out = Outputs::default();
    out.add("benchmark.csv", csv);
    out.add("benchmark_meta.json", to_json(&meta));
    out.commit(&dir)
}

fn demo_json(r: &DemoReport) -> serde_json::Value {
    json!({
        "normalized_error": r.normalized_error,
        "reported_error": r.reported_error(),
        "residual": r.residual,
        "converged": r.converged,
        "success": r.success(),
    })
}

pub fn demo(args: &DemoArgs) -> Result<(), CliError> {
    let r = load_config(&args.config, args.seed)?;
    let model = r.model.as_ref();
    let tol = args.tol_success.unwrap_or(r.config.benchmark.tol_success);
    let baseline = model.assemble(&model.random_init(r.config.seed)?)?;
    let optimized: CMatrix = match &args.optimized {
        Some(path) => {
            let a = read_matrix(path)?;
            if a.shape() != baseline.shape() {
                return Err(CliError::Usage(format!(
                    "{}: matrix is {}x{}, config describes {}x{}",
                    path.display(),
                    a.nrows(),
                    a.ncols(),
                    baseline.nrows(),
                    baseline.ncols()
                )));
            }
            a
        }
        None => {
            let p0 = model.random_init(r.config.seed)?;
            model.assemble(&run_design(model, &r.bs, &p0, &r.config.optimizer)?.p_final)?
        }
    };
    let spec = TrialSpec::new(r.bs.clone(), r.config.demo.s_b, r.config.demo.trial + 1, r.config.seed)?;
    let x = random_block_sparse(&spec, r.config.demo.trial);
    let opts = &r.config.benchmark.recovery;
    let base = single_instance_demo(&baseline, &r.bs, &x, tol, opts)?;
    let opt = single_instance_demo(&optimized, &r.bs, &x, tol, opts)?;

    let mut out = Outputs::default();
    out.add("x_true.txt", format_vector(&x));
    out.add("x_hat_baseline.txt", format_vector(&base.x_hat));
    out.add("x_hat_optimized.txt", format_vector(&opt.x_hat));
    if let ModelDescriptor::Em(geometry) = &r.config.model {
        let em = EmModel::new(geometry.clone())?;
        let (truth, base_grid) = base.magnitude_grids(&em);
        out.add("truth_grid.csv", format_grid(&truth));
        out.add("baseline_grid.csv", format_grid(&base_grid));
        out.add("optimized_grid.csv", format_grid(&opt.magnitude_grids(&em).1));
    }
    out.add(
        "demo_summary.json",
        to_json(&json!({
            "s_b": r.config.demo.s_b,
            "seed": r.config.seed,
            "eta_rel": NOISELESS_ETA_REL,
            "tol_success": tol,
            "baseline": demo_json(&base),
            "optimized": demo_json(&opt),
        })),
    );
    println!(
        "baseline normalized error {:.4}\noptimized normalized error {:.4}",
        base.reported_error(),
        opt.reported_error()
    );
    out.commit(&out_dir(&args.out, Some(&r.config)))
}
