//! Method-of-multipliers solver for maximizing the minimum block-pair capacity.
//!
//! The program `min |c|_inf s.t. c_r = d_r(p), p in Q_p` is attacked through
//! its scaled augmented Lagrangian. Each outer iteration approximately
//! minimizes the Lagrangian by alternating an exact l-inf prox in `c` with a
//! line-searched projected gradient step in `p`, then takes a multiplier
//! step and possibly grows the penalty.

mod lagrangian;
mod prox;

pub use prox::{project_l1_ball, prox_linf};

use serde::{Deserialize, Serialize};

use crate::blocks::{BlockStructure, PairSupport};
use crate::capacity::{capacity_report, CapacityReport, DEFAULT_BETA};
use crate::error::{Error, Result};
use crate::linalg::linf_norm;
use crate::models::SensingModel;
use lagrangian::{full_value, smooth_gradient, smooth_value, Evaluation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignOptions {
    pub beta: f64,
    /// Initial penalty.
    pub rho0: f64,
    /// Penalty growth factor, applied when the violation fails to shrink enough.
    pub rho_growth: f64,
    /// Required per-iteration violation reduction factor before the penalty is kept.
    pub violation_shrink: f64,
    /// Upper limit on the penalty.
    pub rho_max: f64,
    /// Inner solves stop once the projected gradient norm is below
    /// `max(inner_grad_floor, inner_grad_scale / rho)`.
    pub inner_grad_floor: f64,
    pub inner_grad_scale: f64,
    pub max_inner: usize,
    /// Constraint violation tolerance `|c - d(p)|_inf`.
    pub tol_c: f64,
    /// Relative tolerance on the change of `|c|_inf` between outer iterations.
    pub tol_f: f64,
    pub max_outer: usize,
    pub backtrack_factor: f64,
    pub armijo_c1: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub max_backtracks: usize,
    /// Seed for the baseline design when none is supplied.
    pub seed: u64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            rho0: 1.0,
            rho_growth: 5.0,
            violation_shrink: 0.5,
            rho_max: 1e10,
            inner_grad_floor: 1e-6,
            inner_grad_scale: 1e-2,
            max_inner: 500,
            tol_c: 1e-4,
            tol_f: 1e-6,
            max_outer: 50,
            backtrack_factor: 0.5,
            armijo_c1: 1e-4,
            step_min: 1e-8,
            step_max: 1e2,
            max_backtracks: 60,
            seed: 0,
        }
    }
}

impl DesignOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho0", self.rho0),
            ("rho_max", self.rho_max),
            ("inner_grad_floor", self.inner_grad_floor),
            ("inner_grad_scale", self.inner_grad_scale),
            ("tol_c", self.tol_c),
            ("tol_f", self.tol_f),
            ("armijo_c1", self.armijo_c1),
            ("step_min", self.step_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be non-negative, got {}", self.beta)));
        }
        if !(self.rho_growth > 1.0) {
            return Err(Error::InvalidArgument(format!("rho_growth must exceed 1, got {}", self.rho_growth)));
        }
        if !(self.violation_shrink > 0.0 && self.violation_shrink < 1.0)
            || !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0)
        {
            return Err(Error::InvalidArgument("violation_shrink and backtrack_factor must lie in (0, 1)".into()));
        }
        if !(self.step_max >= self.step_min) {
            return Err(Error::InvalidArgument("step_max must be at least step_min".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.max_backtracks == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        Ok(())
    }

    fn inner_tolerance(&self, rho: f64) -> f64 {
        self.inner_grad_floor.max(self.inner_grad_scale / rho)
    }
}

/// Optimizer state: design `p`, auxiliary capacities `c`, multipliers
/// `gamma` and penalty `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignState {
    pub p: Vec<f64>,
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rho: f64,
    pub outer_iter: usize,
}

impl DesignState {
    /// `c = d(p)`, `gamma = 0`.
    pub fn initial(model: &dyn SensingModel, bs: &BlockStructure, p: Vec<f64>, rho: f64, beta: f64) -> Result<Self> {
        let d = Evaluation::new(model, &bs.pair_supports(), &p, beta)?.d;
        let r = d.len();
        Ok(Self { p, c: d, gamma: vec![0.0; r], rho, outer_iter: 0 })
    }

    fn check(&self, r: usize) -> Result<()> {
        if self.c.len() != r || self.gamma.len() != r {
            return Err(Error::DimensionMismatch(format!(
                "state has {} capacities and {} multipliers for {r} pairs",
                self.c.len(),
                self.gamma.len()
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::InvalidArgument(format!("penalty must be positive, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Per-outer-iteration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub iteration: usize,
    pub min_capacity: f64,
    /// `|c|_inf` after the inner solve.
    pub objective: f64,
    pub violation: f64,
    /// Penalty used during this iteration.
    pub rho: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub p_final: Vec<f64>,
    pub report: CapacityReport,
    pub initial_report: CapacityReport,
    pub trace: Vec<OuterRecord>,
    pub termination: Termination,
    pub state: DesignState,
}

impl DesignResult {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.objective).collect()
    }

    pub fn violation_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.violation).collect()
    }
}

fn check_model(model: &dyn SensingModel, bs: &BlockStructure) -> Result<()> {
    if model.cols() != bs.signal_len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} columns, block structure covers {}",
            model.cols(),
            bs.signal_len()
        )));
    }
    if bs.num_blocks() < 2 {
        return Err(Error::InvalidArgument("at least two blocks are needed to form pairs".into()));
    }
    Ok(())
}

/// `|c|_inf + sum_r rho/2 |c_r - d_r(p) + gamma_r/rho|^2`.
pub fn auglag_value(model: &dyn SensingModel, bs: &BlockStructure, state: &DesignState, beta: f64) -> Result<f64> {
    check_model(model, bs)?;
    state.check(bs.num_pairs())?;
    let eval = Evaluation::new(model, &bs.pair_supports(), &state.p, beta)?;
    Ok(full_value(&eval.d, &state.c, &state.gamma, state.rho))
}

/// Gradient of the augmented Lagrangian with respect to `p`, with `c`,
/// `gamma` and `rho` held fixed.
pub fn grad_p(model: &dyn SensingModel, bs: &BlockStructure, state: &DesignState, beta: f64) -> Result<Vec<f64>> {
    check_model(model, bs)?;
    state.check(bs.num_pairs())?;
    let pairs = bs.pair_supports();
    let eval = Evaluation::new(model, &pairs, &state.p, beta)?;
    smooth_gradient(model, &pairs, &state.p, &eval, &state.c, &state.gamma, state.rho)
}

/// Exact minimization over `c`: `prox_{|.|_inf / rho}(d - gamma / rho)`.
pub fn update_c(state: &DesignState, d: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = d.iter().zip(&state.gamma).map(|(d, g)| d - g / state.rho).collect();
    prox_linf(&v, 1.0 / state.rho)
}

/// `gamma_r + rho (c_r - d_r)`.
pub fn update_multipliers(state: &DesignState, d: &[f64]) -> Vec<f64> {
    state.gamma.iter().zip(&state.c).zip(d).map(|((g, c), d)| g + state.rho * (c - d)).collect()
}

/// One projected gradient step on `p` with Armijo backtracking, starting from
/// a unit step. Returns `p` unchanged when the gradient vanishes.
pub fn update_p(model: &dyn SensingModel, bs: &BlockStructure, state: &DesignState, opts: &DesignOptions) -> Result<Vec<f64>> {
    check_model(model, bs)?;
    state.check(bs.num_pairs())?;
    let pairs = bs.pair_supports();
    let p = model.project_feasible(&state.p);
    let eval = Evaluation::new(model, &pairs, &p, opts.beta)?;
    let grad = smooth_gradient(model, &pairs, &p, &eval, &state.c, &state.gamma, state.rho)?;
    if grad.iter().all(|&g| g == 0.0) {
        return Ok(p);
    }
    let value = smooth_value(&eval.d, &state.c, &state.gamma, state.rho);
    let step = LineSearch { model, pairs: &pairs, state, opts };
    match step.run(&p, value, &grad, 1.0f64.clamp(opts.step_min, opts.step_max))? {
        Some(accepted) => Ok(accepted.p),
        None => Ok(p),
    }
}

struct Accepted {
    p: Vec<f64>,
    eval: Evaluation,
    value: f64,
    step: f64,
}

struct LineSearch<'a> {
    model: &'a dyn SensingModel,
    pairs: &'a [PairSupport],
    state: &'a DesignState,
    opts: &'a DesignOptions,
}

impl LineSearch<'_> {
    /// `Ok(None)` when the projected step is null (p is stationary on the box).
    fn run(&self, p: &[f64], value: f64, grad: &[f64], t0: f64) -> Result<Option<Accepted>> {
        let (c, gamma, rho) = (&self.state.c, &self.state.gamma, self.state.rho);
        let mut t = t0;
        for _ in 0..self.opts.max_backtracks {
            let trial: Vec<f64> = p.iter().zip(grad).map(|(x, g)| x - t * g).collect();
            let trial = self.model.project_feasible(&trial);
            let slope: f64 = trial.iter().zip(p).zip(grad).map(|((x, y), g)| g * (x - y)).sum();
            if trial.iter().zip(p).all(|(x, y)| x == y) {
                return Ok(None);
            }
            match Evaluation::new(self.model, self.pairs, &trial, self.opts.beta) {
                Ok(eval) => {
                    let v = smooth_value(&eval.d, c, gamma, rho);
                    if v < value && v <= value + self.opts.armijo_c1 * slope {
                        return Ok(Some(Accepted { p: trial, eval, value: v, step: t }));
                    }
                }
                Err(Error::NotPositiveDefinite { .. } | Error::DegenerateColumn { .. } | Error::NonFinite(_)) => {}
                Err(e) => return Err(e),
            }
            t *= self.opts.backtrack_factor;
        }
        Err(Error::LineSearchFailed { backtracks: self.opts.max_backtracks })
    }
}

fn projected_gradient_norm(model: &dyn SensingModel, p: &[f64], grad: &[f64]) -> f64 {
    let moved: Vec<f64> = p.iter().zip(grad).map(|(x, g)| x - g).collect();
    model.project_feasible(&moved).iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Approximately minimizes the Lagrangian over `(p, c)` for fixed `gamma`, `rho`.
/// Leaves `state.c` prox-consistent with the final `p`.
fn inner_solve(
    model: &dyn SensingModel,
    pairs: &[PairSupport],
    state: &mut DesignState,
    eval: &mut Evaluation,
    bb_step: &mut f64,
    opts: &DesignOptions,
) -> Result<usize> {
    let tol = opts.inner_tolerance(state.rho);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    state.c = update_c(state, &eval.d);
    while iterations < opts.max_inner {
        let grad = smooth_gradient(model, pairs, &state.p, eval, &state.c, &state.gamma, state.rho)?;
        if projected_gradient_norm(model, &state.p, &grad) <= tol {
            break;
        }
        if let Some((p_old, g_old)) = &prev {
            let s: Vec<f64> = state.p.iter().zip(p_old).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = grad.iter().zip(g_old).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|a| a * a).sum();
            if sy > 0.0 {
                *bb_step = ss / sy;
            }
        }
        let t0 = bb_step.clamp(opts.step_min, opts.step_max);
        let value = smooth_value(&eval.d, &state.c, &state.gamma, state.rho);
        let search = LineSearch { model, pairs, state, opts };
        let accepted = match search.run(&state.p, value, &grad, t0) {
            Ok(Some(a)) => a,
            Ok(None) => break,
            Err(Error::LineSearchFailed { backtracks }) => {
                log::debug!("line search stalled after {backtracks} backtracks at rho={}", state.rho);
                break;
            }
            Err(e) => return Err(e),
        };
        debug_assert!(accepted.value < value);
        *bb_step = accepted.step;
        prev = Some((std::mem::replace(&mut state.p, accepted.p), grad));
        *eval = accepted.eval;
        state.c = update_c(state, &eval.d);
        iterations += 1;
    }
    Ok(iterations)
}

/// Runs the method of multipliers from `p0` (projected onto the box first).
pub fn design(model: &dyn SensingModel, bs: &BlockStructure, p0: &[f64], opts: &DesignOptions) -> Result<DesignResult> {
    check_model(model, bs)?;
    opts.validate()?;
    let pairs = bs.pair_supports();
    let p = model.project_feasible(p0);
    let mut eval = Evaluation::new(model, &pairs, &p, opts.beta)?;
    let initial_report = capacity_report(&eval.a, bs, opts.beta)?;
    let mut state = DesignState { p, c: eval.d.clone(), gamma: vec![0.0; pairs.len()], rho: opts.rho0, outer_iter: 0 };

    let mut best = (eval.min_capacity(), state.p.clone());
    let mut prev_objective = linf_norm(&state.c);
    let mut prev_violation = f64::INFINITY;
    let mut bb_step = 1.0;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIter;

    for k in 1..=opts.max_outer {
        state.outer_iter = k;
        let inner_iterations = inner_solve(model, &pairs, &mut state, &mut eval, &mut bb_step, opts)?;
        let violation = state.c.iter().zip(&eval.d).fold(0.0f64, |m, (c, d)| m.max((c - d).abs()));
        let objective = linf_norm(&state.c);
        let min_capacity = eval.min_capacity();
        if !objective.is_finite() || !min_capacity.is_finite() {
            return Err(Error::NonFinite(format!("objective at outer iteration {k}")));
        }
        trace.push(OuterRecord { iteration: k, min_capacity, objective, violation, rho: state.rho, inner_iterations });
        log::info!("outer {k}: min capacity {min_capacity:.6}, violation {violation:.3e}, rho {:.3e}, inner {inner_iterations}", state.rho);
        if min_capacity > best.0 {
            best = (min_capacity, state.p.clone());
        }

        state.gamma = update_multipliers(&state, &eval.d);
        let converged = violation <= opts.tol_c && (objective - prev_objective).abs() <= opts.tol_f * objective.abs().max(1.0);
        if converged {
            termination = Termination::Converged;
            break;
        }
        if violation > opts.violation_shrink * prev_violation {
            state.rho = (state.rho * opts.rho_growth).min(opts.rho_max);
        }
        prev_violation = violation;
        prev_objective = objective;
    }

    let p_final = match termination {
        Termination::Converged => state.p.clone(),
        Termination::MaxIter => best.1,
    };
    let report = capacity_report(&model.assemble(&p_final)?, bs, opts.beta)?;
    Ok(DesignResult { p_final, report, initial_report, trace, termination, state })
}

/// `design` starting from `model.random_init(opts.seed)`.
pub fn design_from_seed(model: &dyn SensingModel, bs: &BlockStructure, opts: &DesignOptions) -> Result<DesignResult> {
    let p0 = model.random_init(opts.seed)?;
    design(model, bs, &p0, opts)
}
