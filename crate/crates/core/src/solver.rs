//! ADMM solver for the jointly regularized distribution/multi-label objective
//!
//! ```text
//! min_{W,O}  ½‖W Xᵀ − D‖² + ½‖W Xᵀ O − L‖² + α‖W Xᵀ O‖_* + λ(‖W‖² + ‖O‖²)
//! ```
//!
//! split with `G = W Xᵀ O` and the augmented Lagrangian term
//! `(μ/2)‖G − W Xᵀ O − Γ/μ‖²`. Each sweep updates `G` by singular value
//! thresholding, then `W` and `O` by their closed-form stationarity
//! conditions, then the multipliers and penalty.
//!
//! Matrix conventions: `X` is `n × d` (one row per instance, already
//! preprocessed), `D`, `L`, `G`, `Γ` are `m × n`, `W` is `m × d` and `O` is
//! `n × n`.

use nalgebra::DMatrix;

use crate::data::Standardizer;
use crate::degrade::degrade;
use crate::error::{LdlError, Result};
use crate::linalg::{nuclear_norm, solve_left_spd, solve_right_spd, svt};
use crate::model::TlrldlModel;
use crate::types::{FeatureMatrix, Hyperparams, LabelDistributionMatrix, Variant};

/// The `n × n` map from distribution predictions to multi-label predictions.
///
/// After the first O-step with `λ > 0` the map has rank at most `m` and is
/// kept as `left · right` with `left` `n × m` and `right` `m × n`, which keeps
/// every sweep linear in `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Identity(usize),
    Factored {
        left: DMatrix<f64>,
        right: DMatrix<f64>,
    },
    Dense(DMatrix<f64>),
}

impl Transform {
    pub fn n(&self) -> usize {
        match self {
            Transform::Identity(n) => *n,
            Transform::Factored { left, .. } => left.nrows(),
            Transform::Dense(o) => o.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Transform::Identity(n) => DMatrix::identity(*n, *n),
            Transform::Factored { left, right } => left * right,
            Transform::Dense(o) => o.clone(),
        }
    }

    /// `a · O`
    pub fn right_apply(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Transform::Identity(_) => a.clone(),
            Transform::Factored { left, right } => (a * left) * right,
            Transform::Dense(o) => a * o,
        }
    }

    /// `‖O‖²_F`
    pub fn frobenius_sq(&self) -> f64 {
        match self {
            Transform::Identity(n) => *n as f64,
            Transform::Factored { left, right } => {
                // tr(Rᵀ Lᵀ L R) = tr((Lᵀ L)(R Rᵀ))
                let ll = left.transpose() * left;
                let rr = right * right.transpose();
                ll.component_mul(&rr).sum()
            }
            Transform::Dense(o) => o.norm_squared(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Transform::Identity(_) => true,
            Transform::Factored { left, right } => {
                left.iter().chain(right.iter()).all(|v| v.is_finite())
            }
            Transform::Dense(o) => o.iter().all(|v| v.is_finite()),
        }
    }
}

fn check_shape(what: &'static str, a: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if a.shape() != (rows, cols) {
        return Err(LdlError::dims(
            what,
            format!("{rows}x{cols}"),
            format!("{}x{}", a.nrows(), a.ncols()),
        ));
    }
    Ok(())
}

/// Multiplier, penalty and auxiliary variable carried between sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub g: DMatrix<f64>,
    pub gamma1: DMatrix<f64>,
    pub mu: f64,
    pub mu_max: f64,
    pub mu_growth: f64,
    pub iter: usize,
    /// `‖G − W Xᵀ O‖_F / max(1, ‖G‖_F)` after the latest multiplier update.
    pub primal_residual: f64,
}

impl SolverState {
    pub fn new(g: DMatrix<f64>, hp: &Hyperparams) -> SolverState {
        let gamma1 = DMatrix::zeros(g.nrows(), g.ncols());
        SolverState {
            g,
            gamma1,
            mu: hp.mu0,
            mu_max: hp.mu_max,
            mu_growth: hp.mu_growth,
            iter: 0,
            primal_residual: f64::INFINITY,
        }
    }
}

/// G-step: `svt(W Xᵀ O + Γ/μ, α/μ)`.
pub fn update_g(
    w: &DMatrix<f64>,
    x: &DMatrix<f64>,
    o: &Transform,
    gamma1: &DMatrix<f64>,
    mu: f64,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let (m, n) = (w.nrows(), x.nrows());
    check_shape("W", w, m, x.ncols())?;
    check_shape("Γ1", gamma1, m, n)?;
    if o.n() != n {
        return Err(LdlError::dims("O", n, o.n()));
    }
    if mu.is_nan() || mu <= 0.0 {
        return Err(LdlError::InvalidArgument(format!(
            "mu must be positive, got {mu}"
        )));
    }
    let target = o.right_apply(&(w * x.transpose())) + gamma1 / mu;
    svt(&target, alpha / mu)
}

/// Shared W-step. `l = None` drops the multi-label fit term, which is the
/// direct low-rank variant when `O` is the identity.
#[allow(clippy::too_many_arguments)]
fn solve_w(
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    l: Option<&DMatrix<f64>>,
    o: &Transform,
    g: &DMatrix<f64>,
    gamma1: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let (n, dim) = x.shape();
    let m = d.nrows();
    check_shape("D", d, m, n)?;
    check_shape("G", g, m, n)?;
    check_shape("Γ1", gamma1, m, n)?;
    if let Some(l) = l {
        check_shape("L", l, m, n)?;
    }
    if o.n() != n {
        return Err(LdlError::dims("O", n, o.n()));
    }
    // Xᵀ O, d × n
    let xt_o = o.right_apply(&x.transpose());
    let coupling = if l.is_some() { 1.0 + mu } else { mu };
    let mut gram = x.transpose() * x + (&xt_o * xt_o.transpose()) * coupling;
    for i in 0..dim {
        gram[(i, i)] += 2.0 * lambda;
    }
    let mut target = g * mu - gamma1;
    if let Some(l) = l {
        target += l;
    }
    let rhs = d * x + target * xt_o.transpose();
    solve_right_spd(gram, &rhs, "W-step Gram matrix")
}

/// W-step: the stationary point of
/// `½‖WXᵀ−D‖² + ½‖WXᵀO−L‖² + λ‖W‖² + (μ/2)‖G−WXᵀO−Γ/μ‖²`, i.e.
/// `W = (DX + (L + μG − Γ)OᵀX)(XᵀX + (1+μ)XᵀOOᵀX + 2λI)⁻¹`.
#[allow(clippy::too_many_arguments)]
pub fn update_w(
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    l: &DMatrix<f64>,
    o: &Transform,
    g: &DMatrix<f64>,
    gamma1: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    solve_w(x, d, Some(l), o, g, gamma1, mu, lambda)
}

/// W-step of the variant that penalizes `‖W Xᵀ‖_*` directly (constraint
/// `G = W Xᵀ`, no multi-label term):
/// `W = (DX + (μG − Γ)X)((1+μ)XᵀX + 2λI)⁻¹`.
pub fn update_w_direct(
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    g: &DMatrix<f64>,
    gamma1: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    solve_w(
        x,
        d,
        None,
        &Transform::Identity(x.nrows()),
        g,
        gamma1,
        mu,
        lambda,
    )
}

/// O-step: the stationary point of
/// `½‖PO−L‖² + λ‖O‖² + (μ/2)‖G−PO−Γ/μ‖²` with `P = W Xᵀ`, i.e.
/// `O = ((1+μ)PᵀP + 2λI)⁻¹ Pᵀ(L + μG − Γ)`.
///
/// For `λ > 0` the push-through identity turns the `n × n` system into an
/// `m × m` one: `O = Pᵀ((1+μ)PPᵀ + 2λI)⁻¹(L + μG − Γ)`.
#[allow(clippy::too_many_arguments)]
pub fn update_o(
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    l: &DMatrix<f64>,
    g: &DMatrix<f64>,
    gamma1: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> Result<Transform> {
    let n = x.nrows();
    let m = w.nrows();
    check_shape("W", w, m, x.ncols())?;
    check_shape("L", l, m, n)?;
    check_shape("G", g, m, n)?;
    check_shape("Γ1", gamma1, m, n)?;
    let p = w * x.transpose();
    let target = l + g * mu - gamma1;
    if lambda > 0.0 {
        let mut small = (&p * p.transpose()) * (1.0 + mu);
        for i in 0..m {
            small[(i, i)] += 2.0 * lambda;
        }
        let right = solve_left_spd(small, &target, "O-step label Gram matrix")?;
        Ok(Transform::Factored {
            left: p.transpose(),
            right,
        })
    } else {
        let gram = (p.transpose() * &p) * (1.0 + mu);
        let o = solve_left_spd(
            gram,
            &(p.transpose() * target),
            "O-step instance Gram matrix",
        )?;
        Ok(Transform::Dense(o))
    }
}

/// Dual ascent on the constraint `G = W Xᵀ O` followed by the penalty
/// schedule `μ ← min(growth · μ, μ_max)`.
///
/// With the Lagrangian written as `(μ/2)‖G − WXᵀO − Γ/μ‖²` the multiplier
/// moves against the constraint violation: `Γ ← Γ − μ(G − WXᵀO)`.
pub fn update_multipliers(
    mut state: SolverState,
    w: &DMatrix<f64>,
    x: &DMatrix<f64>,
    o: &Transform,
) -> SolverState {
    let violation = &state.g - o.right_apply(&(w * x.transpose()));
    state.gamma1 -= &violation * state.mu;
    state.mu = (state.mu * state.mu_growth).min(state.mu_max);
    state.iter += 1;
    state.primal_residual = violation.norm() / state.g.norm().max(1.0);
    state
}

/// Value of the training objective for the given variant.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    variant: Variant,
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    l: Option<&DMatrix<f64>>,
    w: &DMatrix<f64>,
    o: Option<&Transform>,
    alpha: f64,
    lambda: f64,
) -> Result<f64> {
    let p = w * x.transpose();
    let fit = 0.5 * (&p - d).norm_squared();
    let ridge = lambda * w.norm_squared();
    Ok(match variant {
        Variant::AblationB => fit + ridge,
        Variant::AblationA => fit + ridge + alpha * nuclear_norm(&p)?,
        Variant::Full => {
            let o = o.ok_or_else(|| LdlError::InvalidArgument("full objective needs O".into()))?;
            let l = l.ok_or_else(|| LdlError::InvalidArgument("full objective needs L".into()))?;
            let po = o.right_apply(&p);
            fit + 0.5 * (&po - l).norm_squared()
                + alpha * nuclear_norm(&po)?
                + ridge
                + lambda * o.frobenius_sq()
        }
    })
}

/// Ridge solution `W = D X (XᵀX + 2λI)⁻¹` of the distribution fit alone.
pub fn ridge(x: &DMatrix<f64>, d: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    check_shape("D", d, d.nrows(), x.nrows())?;
    let mut gram = x.transpose() * x;
    for i in 0..x.ncols() {
        gram[(i, i)] += 2.0 * lambda;
    }
    solve_right_spd(gram, &(d * x), "ridge Gram matrix")
}

/// Feature preprocessing applied before solving and again at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitOptions {
    pub standardize: bool,
    pub bias: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            standardize: true,
            bias: true,
        }
    }
}

/// Standardizes (optionally) and appends a constant-1 column (optionally).
pub fn design_matrix(
    x: &DMatrix<f64>,
    standardizer: Option<&Standardizer>,
    bias: bool,
) -> Result<DMatrix<f64>> {
    let z = match standardizer {
        Some(s) => s.apply(x)?,
        None => x.clone(),
    };
    Ok(if bias {
        let cols = z.ncols();
        z.insert_column(cols, 1.0)
    } else {
        z
    })
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: TlrldlModel,
    pub iterations_run: usize,
    pub final_primal_residual: f64,
    /// Training objective after every sweep.
    pub objective_trace: Vec<f64>,
    /// Penalty used in each sweep.
    pub mu_trace: Vec<f64>,
    pub converged: bool,
}

/// Trains a model. `Full` runs the degradation and the ADMM loop; `AblationA`
/// runs ADMM with the nuclear norm on `W Xᵀ`; `AblationB` is closed-form
/// ridge regression.
///
/// Hitting `max_iters` is not an error: the result reports `converged = false`.
pub fn fit(
    x: &FeatureMatrix,
    d: &LabelDistributionMatrix,
    hp: &Hyperparams,
    variant: Variant,
) -> Result<FitResult> {
    fit_with(x, d, hp, variant, FitOptions::default())
}

pub fn fit_with(
    x: &FeatureMatrix,
    d: &LabelDistributionMatrix,
    hp: &Hyperparams,
    variant: Variant,
    opts: FitOptions,
) -> Result<FitResult> {
    hp.validate()?;
    if x.n() != d.n() {
        return Err(LdlError::ShapeMismatch(format!(
            "{} feature rows but {} distribution columns",
            x.n(),
            d.n()
        )));
    }
    let standardizer = opts.standardize.then(|| Standardizer::fit(x.as_matrix()));
    let xd = design_matrix(x.as_matrix(), standardizer.as_ref(), opts.bias)?;
    let dm = d.as_matrix();

    let w0 = ridge(&xd, dm, hp.lambda)?;
    let mut out = match variant {
        Variant::AblationB => {
            let obj = objective(variant, &xd, dm, None, &w0, None, hp.alpha, hp.lambda)?;
            SolveOutcome {
                w: w0,
                o: None,
                iterations: 0,
                residual: 0.0,
                objective_trace: vec![obj],
                mu_trace: Vec::new(),
                converged: true,
            }
        }
        Variant::AblationA => run_admm(&xd, dm, None, w0, hp)?,
        Variant::Full => {
            hp.degradation.validate_for(d.m())?;
            let l = degrade(d, hp.degradation)?;
            run_admm(&xd, dm, Some(l.as_matrix()), w0, hp)?
        }
    };
    if !out.w.iter().all(|v| v.is_finite()) || !out.o.as_ref().is_none_or(Transform::is_finite) {
        return Err(LdlError::SingularSystem(
            "solver produced non-finite parameters",
        ));
    }
    if !out.converged {
        log::info!(
            "{variant} solver stopped at max_iters={} with residual {:.3e}",
            hp.max_iters,
            out.residual
        );
    }
    let model = TlrldlModel::new(
        std::mem::take(&mut out.w),
        variant,
        standardizer,
        opts.bias,
        x.d(),
        *hp,
    )?
    .with_transform(out.o.take());
    Ok(FitResult {
        model,
        iterations_run: out.iterations,
        final_primal_residual: out.residual,
        objective_trace: out.objective_trace,
        mu_trace: out.mu_trace,
        converged: out.converged,
    })
}

struct SolveOutcome {
    w: DMatrix<f64>,
    o: Option<Transform>,
    iterations: usize,
    residual: f64,
    objective_trace: Vec<f64>,
    mu_trace: Vec<f64>,
    converged: bool,
}

/// ADMM loop shared by `Full` (`labels = Some(L)`) and `AblationA`
/// (`labels = None`, `O` pinned to the identity).
fn run_admm(
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    labels: Option<&DMatrix<f64>>,
    w0: DMatrix<f64>,
    hp: &Hyperparams,
) -> Result<SolveOutcome> {
    let n = x.nrows();
    let variant = if labels.is_some() {
        Variant::Full
    } else {
        Variant::AblationA
    };
    let mut w = w0;
    let mut o = match labels {
        // best multi-label map for the warm-start W, ignoring the constraint
        Some(l) => {
            let zeros = DMatrix::zeros(l.nrows(), n);
            update_o(x, &w, l, &zeros, &zeros, 0.0, hp.lambda)?
        }
        None => Transform::Identity(n),
    };
    let mut state = SolverState::new(o.right_apply(&(&w * x.transpose())), hp);
    let mut objective_trace = Vec::with_capacity(hp.max_iters);
    let mut mu_trace = Vec::with_capacity(hp.max_iters);
    let mut converged = false;

    while state.iter < hp.max_iters {
        let mu = state.mu;
        mu_trace.push(mu);
        state.g = update_g(&w, x, &o, &state.gamma1, mu, hp.alpha)?;
        let w_next = match labels {
            Some(l) => update_w(x, d, l, &o, &state.g, &state.gamma1, mu, hp.lambda)?,
            None => update_w_direct(x, d, &state.g, &state.gamma1, mu, hp.lambda)?,
        };
        let w_change = (&w_next - &w).norm() / w.norm().max(1.0);
        w = w_next;
        if let Some(l) = labels {
            o = update_o(x, &w, l, &state.g, &state.gamma1, mu, hp.lambda)?;
        }
        state = update_multipliers(state, &w, x, &o);
        objective_trace.push(objective(
            variant,
            x,
            d,
            labels,
            &w,
            Some(&o),
            hp.alpha,
            hp.lambda,
        )?);
        if state.primal_residual <= hp.tol && w_change <= hp.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveOutcome {
        w,
        o: labels.is_some().then_some(o),
        iterations: state.iter,
        residual: state.primal_residual,
        objective_trace,
        mu_trace,
        converged,
    })
}
