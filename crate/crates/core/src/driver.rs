//! Relocated fixed-point iterations and their traces.

use std::fmt;
use std::io::{self, Write};

use crate::engine::{first_resolvent, m_star_x, residuals, sweep_with, SplitProblem, Splitting, SweepResult};
use crate::error::{parameter, structural, Result};
use crate::linalg::BlockVector;
use crate::operators::{CocoerciveOp, ResolventOp};
use crate::relocator::{check_kind, relocate, relocate_cheap, RelocatorKind};
use crate::scalar::{self, Scalar};
use crate::schedule::{Observables, RelaxationPlan, StepsizeSchedule};
use crate::scheme::feasibility_margin;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub relocator: RelocatorKind,
    pub schedule: StepsizeSchedule<T>,
    pub relaxation: RelaxationPlan<T>,
    /// Number of updates `z_k -> z_{k+1}` allowed.
    pub max_iters: usize,
    pub fix_res_tol: T,
    pub record_every: usize,
    /// Store `x̄_k` and `z_k` in every recorded row.
    pub keep_iterates: bool,
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(relocator: RelocatorKind, schedule: StepsizeSchedule<T>) -> Self {
        Self {
            relocator,
            schedule,
            relaxation: RelaxationPlan::default(),
            max_iters: 1000,
            fix_res_tol: T::lit(1e-10),
            record_every: 1,
            keep_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(parameter("max_iters must be at least 1"));
        }
        if !(self.fix_res_tol > T::zero()) {
            return Err(parameter("fix_res_tol must be positive"));
        }
        if self.record_every < 1 {
            return Err(parameter("record_every must be at least 1"));
        }
        self.relaxation.validate()
    }
}

pub type Objective<'a, T> = &'a (dyn Fn(&[T]) -> T + Sync);

/// Optional objective and reference solution used to fill trace columns.
pub struct Monitor<'a, T> {
    pub objective: Option<Objective<'a, T>>,
    /// `(x*, φ*)`
    pub reference: Option<(&'a [T], T)>,
}

impl<'a, T: Scalar> Monitor<'a, T> {
    pub fn none() -> Self {
        Self {
            objective: None,
            reference: None,
        }
    }

    pub fn with_objective(objective: Objective<'a, T>) -> Self {
        Self {
            objective: Some(objective),
            reference: None,
        }
    }

    fn columns(&self, x: &[T]) -> (T, T, T) {
        let phi = self.objective.map_or(T::nan(), |f| f(x));
        match self.reference {
            Some((xs, fs)) => (phi, relative_error_x(x, xs), relative_error_f(phi, fs)),
            None => (phi, T::nan(), T::nan()),
        }
    }
}

/// `‖x - x*‖ / max(‖x*‖, 1e-30)`
pub fn relative_error_x<T: Scalar>(x: &[T], x_star: &[T]) -> T {
    scalar::dist(x, x_star) / scalar::norm(x_star).max(T::lit(1e-30))
}

/// `|φ - φ*| / max(|φ*|, 1e-30)`
pub fn relative_error_f<T: Scalar>(phi: T, phi_star: T) -> T {
    (phi - phi_star).abs() / phi_star.abs().max(T::lit(1e-30))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIters,
    Aborted(String),
}

impl RunStatus {
    pub fn is_aborted(&self) -> bool {
        matches!(self, RunStatus::Aborted(_))
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Converged => f.write_str("converged"),
            RunStatus::MaxIters => f.write_str("max-iters"),
            RunStatus::Aborted(why) => write!(f, "aborted: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub k: usize,
    pub gamma: T,
    pub theta: T,
    pub lambda: T,
    pub fix_res: T,
    pub consensus: T,
    /// `φ(x̄_k)`, NaN without an objective.
    pub objective: T,
    pub rel_err_x: T,
    pub rel_err_f: T,
    /// Full sweeps performed so far.
    pub sweeps: usize,
    /// `x̄_k`, when iterates are kept.
    pub x: Option<Vec<T>>,
    /// `z_k` flattened, when iterates are kept.
    pub z: Option<Vec<T>>,
    /// Objective at the second resolvent output (Davis–Yin loop only).
    pub objective_y: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub rows: Vec<TraceRow<T>>,
    pub z_final: BlockVector<T>,
    /// Shadow iterate `x̄ = x_1` of the last sweep.
    pub x_final: Vec<T>,
    pub status: RunStatus,
    /// Updates performed.
    pub iterations: usize,
    pub resolvent_evals: usize,
    pub forward_evals: usize,
    pub sweeps: usize,
    /// `γ_0, γ_1, …` for every iteration reached.
    pub gammas: Vec<T>,
    /// `Σ ζ_k` of the schedule at the end.
    pub zeta_sum: T,
    /// Last computed residuals.
    pub final_fix_res: T,
    pub final_consensus: T,
}

impl<T: Scalar> Trace<T> {
    pub fn last(&self) -> Option<&TraceRow<T>> {
        self.rows.last()
    }

    /// First recorded iteration with `rel_err_f ≤ tol`.
    pub fn first_below_rel_err_f(&self, tol: T) -> Option<usize> {
        self.rows.iter().find(|r| r.rel_err_f <= tol).map(|r| r.k)
    }

    /// Recompute objective and error columns from kept iterates.
    pub fn apply_metrics(&mut self, objective: &dyn Fn(&[T]) -> T, x_star: &[T], phi_star: T) {
        for row in &mut self.rows {
            if let Some(x) = &row.x {
                row.objective = objective(x);
                row.rel_err_x = relative_error_x(x, x_star);
                row.rel_err_f = relative_error_f(row.objective, phi_star);
            }
        }
    }

    /// CSV with header `k,gamma,theta,lambda,fix_res,consensus,objective,rel_err_x,rel_err_f,sweeps`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.k,
                fmt_f(r.gamma),
                fmt_f(r.theta),
                fmt_f(r.lambda),
                fmt_f(r.fix_res),
                fmt_f(r.consensus),
                fmt_f(r.objective),
                fmt_f(r.rel_err_x),
                fmt_f(r.rel_err_f),
                r.sweeps
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

pub const CSV_HEADER: &str = "k,gamma,theta,lambda,fix_res,consensus,objective,rel_err_x,rel_err_f,sweeps";

/// 17 significant digits.
pub fn fmt_f<T: Scalar>(v: T) -> String {
    let v = v.to_f64_lossy();
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

struct Recorder<'m, 'a, T> {
    every: usize,
    keep: bool,
    monitor: &'m Monitor<'a, T>,
    rows: Vec<TraceRow<T>>,
}

impl<T: Scalar> Recorder<'_, '_, T> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        force: bool,
        k: usize,
        gamma: T,
        theta: T,
        lambda: T,
        fix_res: T,
        consensus: T,
        sweeps: usize,
        x: &[T],
        z: &[T],
        y: Option<&[T]>,
    ) {
        if !force && !k.is_multiple_of(self.every) {
            return;
        }
        let (objective, rel_err_x, rel_err_f) = self.monitor.columns(x);
        let objective_y = match (y, self.monitor.objective) {
            (Some(y), Some(f)) => Some(f(y)),
            _ => None,
        };
        self.rows.push(TraceRow {
            k,
            gamma,
            theta,
            lambda,
            fix_res,
            consensus,
            objective,
            rel_err_x,
            rel_err_f,
            sweeps,
            x: self.keep.then(|| x.to_vec()),
            z: self.keep.then(|| z.to_vec()),
            objective_y,
        });
    }
}

/// The relocated iteration
/// `x_k = x^{γ_k}(z_k)`, `w_k = z_k - λ_kθ_k Mᵀx_k`, `z_{k+1} = Q_{γ_{k+1}<-γ_k} w_k`.
///
/// Stops when `‖Mᵀx_k‖ ≤ fix_res_tol` or after `max_iters` updates. A margin
/// below `ε` or an inadmissible stepsize ends the run with
/// [`RunStatus::Aborted`] and the rows recorded so far.
pub fn run<T: Scalar>(
    split: &Splitting<T>,
    prob: &SplitProblem<T>,
    cfg: &RunConfig<T>,
    z0: &BlockVector<T>,
    monitor: &Monitor<'_, T>,
) -> Result<Trace<T>> {
    cfg.validate()?;
    check_kind(cfg.relocator, split)?;
    if z0.num_blocks() != split.m() || z0.dim() != prob.dim {
        return Err(structural("z0 does not match the splitting and problem"));
    }
    let kind = cfg.relocator;
    let beta = prob.beta;
    let mu = split.mu(beta);
    let s = split.scale();
    let plan = cfg.relaxation;
    let mut schedule = cfg.schedule.clone();
    let mut gamma = schedule.current();

    let mut rec = Recorder {
        every: cfg.record_every,
        keep: cfg.keep_iterates,
        monitor,
        rows: Vec::new(),
    };
    let mut z = z0.clone();
    let mut recycled: Option<Vec<T>> = None;
    let mut pending: Option<SweepResult<T>> = None;
    let mut gammas = Vec::new();
    let (mut sweeps, mut evals, mut fevals) = (0usize, 0usize, 0usize);
    let mut iterations = 0;
    let mut x_final = vec![T::zero(); prob.dim];
    let (mut final_fix, mut final_cons) = (T::nan(), T::nan());

    let status = 'outer: {
        if let Some(why) = inadmissible(gamma, s, mu) {
            break 'outer RunStatus::Aborted(why);
        }
        for k in 0..=cfg.max_iters {
            let sw = match pending.take() {
                Some(sw) => sw,
                None => {
                    let sw = sweep_with(split, prob, gamma, &z, recycled.as_deref())?;
                    sweeps += 1;
                    evals += sw.resolvent_evals;
                    fevals += sw.forward_evals;
                    sw
                }
            };
            recycled = None;
            let res = residuals(split, &sw);
            let theta = plan.theta;
            let lambda = plan.lambda(gamma / s, theta / s, mu);
            let margin = split.margin(gamma, lambda, theta, beta);
            gammas.push(gamma);
            x_final.copy_from_slice(sw.x1());
            final_fix = res.fix_res;
            final_cons = res.consensus;

            let converged = res.fix_res <= cfg.fix_res_tol;
            let exhausted = k == cfg.max_iters;
            let infeasible = !(margin >= plan.epsilon);
            rec.push(
                converged || exhausted || infeasible,
                k,
                gamma,
                theta,
                lambda,
                res.fix_res,
                res.consensus,
                sweeps,
                sw.x1(),
                z.as_slice(),
                None,
            );
            if converged {
                break 'outer RunStatus::Converged;
            }
            if exhausted {
                break 'outer RunStatus::MaxIters;
            }
            if infeasible {
                break 'outer RunStatus::Aborted(format!(
                    "feasibility margin {margin:e} below ε = {} at k = {k}",
                    plan.epsilon
                ));
            }

            let mtx = m_star_x(split, &sw.x)?;
            let mut w = z.clone();
            w.axpy(-(lambda * theta), &mtx);

            let (x1w, u1w, sweep_w) = if kind.is_cheap() {
                let (x1, u1) = first_resolvent(split, prob, gamma, &w)?;
                evals += 1;
                (x1, u1, None)
            } else {
                let sw_w = sweep_with(split, prob, gamma, &w, None)?;
                sweeps += 1;
                evals += sw_w.resolvent_evals;
                fevals += sw_w.forward_evals;
                (sw_w.x1().to_vec(), sw_w.u1.clone(), Some(sw_w))
            };
            let obs = Observables {
                x_next_norm: scalar::norm(&x1w),
                x_next_minus_w_norm: scalar::dist(&x1w, &u1w),
                lipschitz: beta,
                k,
            };
            let gnew = schedule.next_gamma(&obs);
            iterations += 1;
            if let Some(why) = inadmissible(gnew, s, mu) {
                gammas.push(gnew);
                break 'outer RunStatus::Aborted(format!("{why} at k = {}", k + 1));
            }
            match sweep_w {
                None => {
                    z = relocate_cheap(kind, split, gnew, gamma, &w, &x1w)?;
                    recycled = Some(x1w);
                }
                Some(sw_w) => {
                    z = relocate(kind, split, gnew, gamma, &w, &sw_w)?;
                    if gnew == gamma {
                        pending = Some(sw_w);
                    }
                }
            }
            gamma = gnew;
        }
        unreachable!("loop exits through a status")
    };

    Ok(Trace {
        rows: rec.rows,
        z_final: z,
        x_final,
        status,
        iterations,
        resolvent_evals: evals,
        forward_evals: fevals,
        sweeps,
        gammas,
        zeta_sum: schedule.zeta_sum(),
        final_fix_res: final_fix,
        final_consensus: final_cons,
    })
}

/// Reason a public stepsize is outside `(0, 2s/μ)`, if it is.
fn inadmissible<T: Scalar>(gamma: T, s: T, mu: T) -> Option<String> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Some(format!("stepsize {gamma} is not positive"));
    }
    if !(gamma / s * mu < T::two()) {
        return Some(format!("stepsize {gamma} is not below the admissible bound {}", T::two() * s / mu));
    }
    None
}

/// Relocated Davis–Yin with variable stepsizes, written out directly:
///
/// ```text
/// x_0     = J_{γ_0 A_1} z_0
/// y_k     = J_{γ_k A_2}(2x_k - z_k - γ_k B x_k)
/// w_k     = z_k + λ_kθ_k(y_k - x_k)
/// x_{k+1} = J_{γ_k A_1} w_k
/// z_{k+1} = (γ_{k+1}/γ_k) w_k + (1 - γ_{k+1}/γ_k) x_{k+1}
/// ```
///
/// Stepsize admissibility and the margin use `μ = β`, as for the two-node
/// chain in [`run`], and the iterates coincide with `run` on that chain.
#[allow(clippy::too_many_arguments)]
pub fn run_davis_yin<T: Scalar>(
    a1: &ResolventOp<T>,
    a2: &ResolventOp<T>,
    b: &CocoerciveOp<T>,
    beta: T,
    cfg: &RunConfig<T>,
    z0: &[T],
    monitor: &Monitor<'_, T>,
) -> Result<Trace<T>> {
    cfg.validate()?;
    if let Some(d) = b.dim() {
        if d != z0.len() {
            return Err(structural("z0 does not match the forward operator"));
        }
    }
    if beta < b.beta() {
        return Err(parameter("β is below the forward operator's constant"));
    }
    let s = T::two();
    let mu = Splitting::<T>::davis_yin().mu(beta);
    let plan = cfg.relaxation;
    let mut schedule = cfg.schedule.clone();
    let mut gamma = schedule.current();
    let mut rec = Recorder {
        every: cfg.record_every,
        keep: cfg.keep_iterates,
        monitor,
        rows: Vec::new(),
    };
    let mut z = z0.to_vec();
    let mut gammas = Vec::new();
    let (mut evals, mut fevals, mut iterations) = (0usize, 0usize, 0usize);
    let mut x = z.clone();
    let (mut final_fix, mut final_cons) = (T::nan(), T::nan());

    let status = 'outer: {
        if let Some(why) = inadmissible(gamma, s, mu) {
            break 'outer RunStatus::Aborted(why);
        }
        a1.resolve_in_place(gamma, &mut x)?;
        evals += 1;
        for k in 0..=cfg.max_iters {
            let bx = b.apply(&x)?;
            fevals += 1;
            let two = T::two();
            let mut y: Vec<T> = z
                .iter()
                .zip(&x)
                .zip(&bx)
                .map(|((&zi, &xi), &fi)| -zi + two * xi - gamma * fi)
                .collect();
            a2.resolve_in_place(gamma, &mut y)?;
            evals += 1;
            let diff: Vec<T> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
            let fix_res = scalar::norm(&diff);
            let theta = plan.theta;
            let lambda = plan.lambda(gamma / s, theta / s, mu);
            let margin = feasibility_margin(gamma / s, lambda, theta / s, mu);
            gammas.push(gamma);
            final_fix = fix_res;
            final_cons = fix_res;

            let converged = fix_res <= cfg.fix_res_tol;
            let exhausted = k == cfg.max_iters;
            let infeasible = !(margin >= plan.epsilon);
            rec.push(
                converged || exhausted || infeasible,
                k,
                gamma,
                theta,
                lambda,
                fix_res,
                fix_res,
                k + 1,
                &x,
                &z,
                Some(&y),
            );
            if converged {
                break 'outer RunStatus::Converged;
            }
            if exhausted {
                break 'outer RunStatus::MaxIters;
            }
            if infeasible {
                break 'outer RunStatus::Aborted(format!(
                    "feasibility margin {margin:e} below ε = {} at k = {k}",
                    plan.epsilon
                ));
            }

            let c = -(lambda * theta);
            let w: Vec<T> = z.iter().zip(&diff).map(|(&zi, &di)| zi + c * di).collect();
            let mut x_next = w.clone();
            a1.resolve_in_place(gamma, &mut x_next)?;
            evals += 1;
            let obs = Observables {
                x_next_norm: scalar::norm(&x_next),
                x_next_minus_w_norm: scalar::dist(&x_next, &w),
                lipschitz: beta,
                k,
            };
            let gnew = schedule.next_gamma(&obs);
            iterations += 1;
            if let Some(why) = inadmissible(gnew, s, mu) {
                gammas.push(gnew);
                break 'outer RunStatus::Aborted(format!("{why} at k = {}", k + 1));
            }
            if gnew == gamma {
                z = w;
            } else {
                let r = gnew / gamma;
                let coef = (T::one() - r) * T::one();
                z = w.iter().zip(&x_next).map(|(&wi, &xi)| r * wi + coef * xi).collect();
            }
            x = x_next;
            gamma = gnew;
        }
        unreachable!("loop exits through a status")
    };

    Ok(Trace {
        rows: rec.rows,
        z_final: BlockVector::from_blocks(vec![z])?,
        x_final: x,
        status,
        iterations,
        resolvent_evals: evals,
        forward_evals: fevals,
        sweeps: iterations + 1,
        gammas,
        zeta_sum: schedule.zeta_sum(),
        final_fix_res: final_fix,
        final_consensus: final_cons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CanonicalKind;
    use crate::linalg::DenseMatrix;
    use crate::schedule::TRule;

    fn one_d_problem() -> (ResolventOp<f64>, ResolventOp<f64>, CocoerciveOp<f64>) {
        let b = CocoerciveOp::least_squares(DenseMatrix::identity(1), vec![2.0]).unwrap();
        (ResolventOp::l1(1.0).unwrap(), ResolventOp::ZeroOp, b)
    }

    #[test]
    fn one_d_davis_yin_converges_to_one() {
        let (a1, a2, b) = one_d_problem();
        let prob = SplitProblem::new(vec![a1, a2], vec![b], 1).unwrap();
        let mut cfg = RunConfig::new(RelocatorKind::DavisYin, StepsizeSchedule::constant(1.0).unwrap());
        cfg.fix_res_tol = 1e-12;
        let split = Splitting::davis_yin();
        let t = run(&split, &prob, &cfg, &split.zeros(1), &Monitor::none()).unwrap();
        assert_eq!(t.status, RunStatus::Converged);
        assert!((t.x_final[0] - 1.0).abs() < 1e-6);
        // grid oracle for argmin |x| + ½(x - 2)²
        let best = (0..=40_000)
            .map(|i| -2.0 + i as f64 * 1e-4)
            .min_by(|a, b| {
                let f = |x: f64| x.abs() + 0.5 * (x - 2.0) * (x - 2.0);
                f(*a).partial_cmp(&f(*b)).unwrap()
            })
            .unwrap();
        assert!((t.x_final[0] - best).abs() < 1e-4);
    }

    #[test]
    fn stationary_under_zero_operators() {
        let cfg = RunConfig {
            max_iters: 5,
            keep_iterates: true,
            ..RunConfig::new(RelocatorKind::DavisYin, StepsizeSchedule::constant(0.5).unwrap())
        };
        let z0 = [1.0, -2.0];
        let t = run_davis_yin(
            &ResolventOp::ZeroOp,
            &ResolventOp::ZeroOp,
            &CocoerciveOp::ZeroForward,
            1.0,
            &cfg,
            &z0,
            &Monitor::none(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].x.as_deref(), Some(&z0[..]));
        assert_eq!(t.rows[0].z.as_deref(), Some(&z0[..]));
        assert_eq!(t.rows[0].fix_res, 0.0);
        assert_eq!(t.status, RunStatus::Converged);
    }

    #[test]
    fn exits_immediately_at_fixed_point() {
        let (a1, a2, b) = one_d_problem();
        let prob = SplitProblem::new(vec![a1, a2], vec![b], 1).unwrap();
        let split = Splitting::davis_yin();
        // z* = x* + γ ∂|x*| = 1 + 1 at γ = 1
        let z = BlockVector::from_blocks(vec![vec![2.0]]).unwrap();
        let cfg = RunConfig::new(RelocatorKind::DavisYin, StepsizeSchedule::constant(1.0).unwrap());
        let t = run(&split, &prob, &cfg, &z, &Monitor::none()).unwrap();
        assert_eq!(t.status, RunStatus::Converged);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.iterations, 0);
    }

    #[test]
    fn infeasible_stepsize_aborts_with_partial_trace() {
        let (a1, a2, b) = one_d_problem();
        let prob = SplitProblem::new(vec![a1, a2], vec![b], 1).unwrap();
        let split = Splitting::davis_yin();
        let cfg = RunConfig::new(RelocatorKind::DavisYin, StepsizeSchedule::constant(4.5).unwrap());
        let t = run(&split, &prob, &cfg, &split.zeros(1), &Monitor::none()).unwrap();
        assert!(t.status.is_aborted());
        let mut cfg = RunConfig::new(RelocatorKind::DavisYin, StepsizeSchedule::constant(1.0).unwrap());
        cfg.relaxation = RelaxationPlan::constant(1.0, 1.9);
        let t = run(&split, &prob, &cfg, &split.zeros(1), &Monitor::none()).unwrap();
        assert!(t.status.is_aborted());
        assert_eq!(t.rows.len(), 1);
    }

    #[test]
    fn csv_layout() {
        let (a1, a2, b) = one_d_problem();
        let prob = SplitProblem::new(vec![a1, a2], vec![b], 1).unwrap();
        let split = Splitting::davis_yin();
        let mut cfg = RunConfig::new(RelocatorKind::DavisYin, StepsizeSchedule::constant(1.0).unwrap());
        cfg.max_iters = 3;
        cfg.fix_res_tol = 1e-300;
        let obj = |x: &[f64]| x[0].abs() + 0.5 * (x[0] - 2.0) * (x[0] - 2.0);
        let t = run(&split, &prob, &cfg, &split.zeros(1), &Monitor::with_objective(&obj)).unwrap();
        let csv = t.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), t.rows.len() + 1);
        assert!(t.rows.len() >= 2);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(fields[1], "1.0000000000000000e0");
        assert_eq!(fields[7], "NaN");
    }

    #[test]
    fn cheap_runs_cost_n_resolvents_per_iteration() {
        let split = Splitting::canonical(CanonicalKind::Sequential, 3).unwrap();
        let prob = SplitProblem::new(
            vec![ResolventOp::NonnegNormalCone, ResolventOp::l1(0.1).unwrap(), ResolventOp::l1(0.1).unwrap()],
            vec![
                CocoerciveOp::least_squares(DenseMatrix::identity(2), vec![1.0, -1.0]).unwrap(),
                CocoerciveOp::scaled_identity(0.1).unwrap(),
            ],
            2,
        )
        .unwrap();
        let sched = StepsizeSchedule::safeguard_default(split.gamma_bound(prob.beta) / 2.0, 0.5, TRule::Harmonic).unwrap();
        let mut cfg = RunConfig::new(RelocatorKind::Sequential, sched.clone());
        cfg.max_iters = 40;
        cfg.fix_res_tol = 1e-300;
        let t = run(&split, &prob, &cfg, &split.zeros(2), &Monitor::none()).unwrap();
        assert_eq!(t.resolvent_evals, 3 * (t.iterations + 1));
        assert_eq!(t.sweeps, t.iterations + 1);
        cfg.relocator = RelocatorKind::General;
        let t = run(&split, &prob, &cfg, &split.zeros(2), &Monitor::none()).unwrap();
        assert_eq!(t.resolvent_evals, 3 * (2 * t.iterations + 1));
    }
}
