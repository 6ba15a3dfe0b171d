//! Network-wide error dynamics and executable stability certificates.
//!
//! Stacking the per-node estimation errors `ε_{l,n} = x_n − x̂_{l,n}`
//! turns the diffusion filter into one linear system,
//!
//! ```text
//! E_{n+1} = C(F·E_n + P·(1⊗v_n) − G·W_n)
//! ```
//!
//! with `C = C_weights ⊗ I`, `F = diag{(I − G_l·H_l)·A}`,
//! `P = diag{I − G_l·H_l}` and `G = diag{G_l}`. Everything asserted about
//! the filter is checked on this system: the spectral radius of `C·F`
//! certifies stability, its powers certify contraction and bias decay,
//! and PBH rank tests certify the detectability/stabilizability
//! hypotheses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filters::{observation_information, stacked_observation_matrix};
use crate::linalg::{
    complex_eigenvalues, complex_singular_extremes, max_asymmetry, operator_norm_2,
    spectral_radius, symmetric_eig_range,
};
use crate::model::{GaussianSampler, NodeObservationModel, StateSpaceModel};
use crate::network::CombinationMatrix;
use crate::par;
use crate::rng::{run_seed, substream, StreamKind};

/// Default relative singular-value threshold for the PBH rank tests.
pub const PBH_RANK_TOL: f64 = 1e-8;
/// Modulus margin for treating an eigenvalue as on or outside the unit
/// circle (captures exact-unit eigenvalues under floating point).
pub const UNIT_CIRCLE_MARGIN: f64 = 1e-9;
/// Reporting cap for eigenvalues of diverging Riccati matrices.
pub const M_EIG_CAP: f64 = 1e12;

/// Dense block matrices of the stacked error recursion.
#[derive(Debug, Clone)]
pub struct StackedErrorSystem {
    /// `C_weights ⊗ I` — `(N·n) × (N·n)`.
    pub c_cal: DMatrix<f64>,
    /// `diag{(I − G_l·H_l)·A}` — `(N·n) × (N·n)`.
    pub f_cal: DMatrix<f64>,
    /// `diag{I − G_l·H_l}` — `(N·n) × (N·n)`.
    pub p_cal: DMatrix<f64>,
    /// `diag{G_l}` — `(N·n) × Σ obs dims`.
    pub g_cal: DMatrix<f64>,
    pub node_count: usize,
    pub state_dim: usize,
    pub obs_dims: Vec<usize>,
}

impl StackedErrorSystem {
    pub fn stacked_dim(&self) -> usize {
        self.node_count * self.state_dim
    }

    pub fn total_obs_dim(&self) -> usize {
        self.obs_dims.iter().sum()
    }

    /// The product `C·F` driving the homogeneous error dynamics.
    pub fn cf(&self) -> DMatrix<f64> {
        &self.c_cal * &self.f_cal
    }
}

/// Assembles the stacked error system for a fixed set of gains.
pub fn build_stacked_system(
    cm: &CombinationMatrix,
    gains: &[DMatrix<f64>],
    obs_models: &[NodeObservationModel],
    model: &StateSpaceModel,
) -> Result<StackedErrorSystem> {
    let count = cm.node_count();
    let n = model.state_dim();
    if gains.len() != count || obs_models.len() != count {
        return Err(Error::dimension(format!(
            "expected {count} gains and observation models, got {} and {}",
            gains.len(),
            obs_models.len()
        )));
    }
    let mut f_cal = DMatrix::zeros(count * n, count * n);
    let mut p_cal = DMatrix::zeros(count * n, count * n);
    let total_obs: usize = obs_models.iter().map(|o| o.obs_dim()).sum();
    let mut g_cal = DMatrix::zeros(count * n, total_obs);
    let mut col = 0;
    for l in 0..count {
        let obs = &obs_models[l];
        if obs.state_dim() != n {
            return Err(Error::dimension(format!(
                "node {l} observation map expects state dimension {}, model has {n}",
                obs.state_dim()
            )));
        }
        if gains[l].shape() != (n, obs.obs_dim()) {
            return Err(Error::dimension(format!(
                "gain of node {l} is {}x{}, expected {n}x{}",
                gains[l].nrows(),
                gains[l].ncols(),
                obs.obs_dim()
            )));
        }
        let closed = DMatrix::identity(n, n) - &gains[l] * obs.h();
        f_cal
            .view_mut((l * n, l * n), (n, n))
            .copy_from(&(&closed * model.a()));
        p_cal.view_mut((l * n, l * n), (n, n)).copy_from(&closed);
        g_cal
            .view_mut((l * n, col), (n, obs.obs_dim()))
            .copy_from(&gains[l]);
        col += obs.obs_dim();
    }
    let c_cal = cm.matrix().kronecker(&DMatrix::identity(n, n));
    Ok(StackedErrorSystem {
        c_cal,
        f_cal,
        p_cal,
        g_cal,
        node_count: count,
        state_dim: n,
        obs_dims: obs_models.iter().map(|o| o.obs_dim()).collect(),
    })
}

/// Column-stacks per-node vectors of equal length.
pub fn stack_errors(per_node: &[DVector<f64>]) -> Result<DVector<f64>> {
    if per_node.is_empty() {
        return Err(Error::validation("nothing to stack"));
    }
    let n = per_node[0].len();
    let mut out = DVector::zeros(per_node.len() * n);
    for (l, e) in per_node.iter().enumerate() {
        if e.len() != n {
            return Err(Error::dimension(format!(
                "vector {l} has length {}, expected {n}",
                e.len()
            )));
        }
        out.rows_mut(l * n, n).copy_from(e);
    }
    Ok(out)
}

/// Splits a stacked vector back into `node_count` per-node vectors.
pub fn unstack_errors(stacked: &DVector<f64>, node_count: usize) -> Result<Vec<DVector<f64>>> {
    if node_count == 0 || stacked.len() % node_count != 0 {
        return Err(Error::dimension(format!(
            "stacked length {} does not split into {node_count} nodes",
            stacked.len()
        )));
    }
    let n = stacked.len() / node_count;
    Ok((0..node_count)
        .map(|l| stacked.rows(l * n, n).clone_owned())
        .collect())
}

/// One step of the stacked error recursion:
/// `E' = C(F·E + P·(1⊗v) − G·W)`.
pub fn error_recursion_step(
    sys: &StackedErrorSystem,
    errors: &DVector<f64>,
    process_noise: &DVector<f64>,
    stacked_obs_noise: &DVector<f64>,
) -> Result<DVector<f64>> {
    if errors.len() != sys.stacked_dim() {
        return Err(Error::dimension(format!(
            "stacked error has length {}, expected {}",
            errors.len(),
            sys.stacked_dim()
        )));
    }
    if process_noise.len() != sys.state_dim {
        return Err(Error::dimension(format!(
            "process noise has length {}, expected {}",
            process_noise.len(),
            sys.state_dim
        )));
    }
    if stacked_obs_noise.len() != sys.total_obs_dim() {
        return Err(Error::dimension(format!(
            "stacked observation noise has length {}, expected {}",
            stacked_obs_noise.len(),
            sys.total_obs_dim()
        )));
    }
    let mut v_rep = DVector::zeros(sys.stacked_dim());
    for l in 0..sys.node_count {
        v_rep
            .rows_mut(l * sys.state_dim, sys.state_dim)
            .copy_from(process_noise);
    }
    let inner = &sys.f_cal * errors + &sys.p_cal * v_rep - &sys.g_cal * stacked_obs_noise;
    Ok(&sys.c_cal * inner)
}

/// `(C·F)ⁿ · e1` by repeated multiplication: the expected stacked error
/// after `n` steps from mean initial error `e1`.
pub fn bias_propagation(
    sys: &StackedErrorSystem,
    e1_mean: &DVector<f64>,
    n: usize,
) -> Result<DVector<f64>> {
    if e1_mean.len() != sys.stacked_dim() {
        return Err(Error::dimension(format!(
            "mean initial error has length {}, expected {}",
            e1_mean.len(),
            sys.stacked_dim()
        )));
    }
    let cf = sys.cf();
    let mut e = e1_mean.clone();
    for _ in 0..n {
        e = &cf * e;
    }
    Ok(e)
}

/// Spectral radius of `C·F` plus the smallest `k ≤ k_max` with
/// `‖(C·F)ᵏ‖₂ < 1` (`None` if no such power is found). The spectral
/// radius decides stability; the exponent is the finite-step certificate
/// of monotone decay.
pub fn contraction_certificate(
    sys: &StackedErrorSystem,
    k_max: usize,
) -> Result<(f64, Option<usize>)> {
    if k_max == 0 {
        return Err(Error::validation("k_max must be >= 1"));
    }
    let cf = sys.cf();
    let rho = spectral_radius(&cf)?;
    let mut power = cf.clone();
    let mut exponent = None;
    for k in 1..=k_max {
        if operator_norm_2(&power) < 1.0 {
            exponent = Some(k);
            break;
        }
        power *= &cf;
    }
    Ok((rho, exponent))
}

/// PBH detectability of `{A, H_col}`: for every eigenvalue of `A` with
/// modulus at least `1 − 1e-9`, the stacked matrix `[λI − A; H_col]` has
/// full column rank, judged by `σ_min > tol·σ_max`.
pub fn pbh_detectability(a: &DMatrix<f64>, h_col: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if a.nrows() != a.ncols() {
        return Err(Error::dimension("state matrix must be square"));
    }
    if h_col.ncols() != a.nrows() {
        return Err(Error::dimension(format!(
            "stacked observation matrix has {} columns, expected {}",
            h_col.ncols(),
            a.nrows()
        )));
    }
    let n = a.nrows();
    for lambda in complex_eigenvalues(a)? {
        if lambda.norm() < 1.0 - UNIT_CIRCLE_MARGIN {
            continue;
        }
        let rows = n + h_col.nrows();
        let mut re = DMatrix::zeros(rows, n);
        let mut im = DMatrix::zeros(rows, n);
        re.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::identity(n, n) * lambda.re - a));
        im.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::identity(n, n) * lambda.im));
        re.view_mut((n, 0), (h_col.nrows(), n)).copy_from(h_col);
        let (lo, hi) = complex_singular_extremes(&re, &im)?;
        if lo <= tol * hi {
            return Ok(false);
        }
    }
    Ok(true)
}

/// PBH stabilizability of `{A, Σ_v^{1/2}}`: full row rank of
/// `[λI − A, Σ_v^{1/2}]` at every eigenvalue with modulus at least
/// `1 − 1e-9`. The caller supplies any factor with `F·Fᵀ = Σ_v`.
pub fn pbh_stabilizability(
    a: &DMatrix<f64>,
    sigma_v_sqrt: &DMatrix<f64>,
    tol: f64,
) -> Result<bool> {
    if a.nrows() != a.ncols() {
        return Err(Error::dimension("state matrix must be square"));
    }
    if sigma_v_sqrt.nrows() != a.nrows() {
        return Err(Error::dimension(format!(
            "noise factor has {} rows, expected {}",
            sigma_v_sqrt.nrows(),
            a.nrows()
        )));
    }
    let n = a.nrows();
    for lambda in complex_eigenvalues(a)? {
        if lambda.norm() < 1.0 - UNIT_CIRCLE_MARGIN {
            continue;
        }
        let cols = n + sigma_v_sqrt.ncols();
        let mut re = DMatrix::zeros(n, cols);
        let mut im = DMatrix::zeros(n, cols);
        re.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::identity(n, n) * lambda.re - a));
        im.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::identity(n, n) * lambda.im));
        re.view_mut((0, n), (n, sigma_v_sqrt.ncols()))
            .copy_from(sigma_v_sqrt);
        let (lo, hi) = complex_singular_extremes(&re, &im)?;
        if lo <= tol * hi {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-step `(min, max)` eigenvalue over a set of per-node symmetric
/// matrices; inputs asymmetric beyond `1e-8` are rejected.
pub fn eigen_range_report(m_sets: &[Vec<DMatrix<f64>>]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(m_sets.len());
    for (step, set) in m_sets.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::validation(format!("step {step} has no matrices")));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (l, m) in set.iter().enumerate() {
            let asym = max_asymmetry(m);
            if asym > 1e-8 {
                return Err(Error::numerical(format!(
                    "matrix of node {l} at step {step} is asymmetric by {asym:.3e}"
                )));
            }
            let (a, b) = symmetric_eig_range(m);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        out.push((lo, hi));
    }
    Ok(out)
}

/// `(min, max)` eigenvalue of the Riccati matrices implied by a set of
/// information matrices, as reciprocals of the information eigenvalues
/// capped at [`M_EIG_CAP`] (information eigenvalues at or below the cap's
/// reciprocal report the cap).
pub fn capped_range_from_information(infos: &[DMatrix<f64>]) -> Result<(f64, f64)> {
    if infos.is_empty() {
        return Err(Error::validation("no information matrices given"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for info in infos {
        let (min_info, max_info) = symmetric_eig_range(info);
        let m_hi = if min_info <= 1.0 / M_EIG_CAP {
            M_EIG_CAP
        } else {
            1.0 / min_info
        };
        let m_lo = if max_info <= 1.0 / M_EIG_CAP {
            M_EIG_CAP
        } else {
            1.0 / max_info
        };
        lo = lo.min(m_lo);
        hi = hi.max(m_hi);
    }
    Ok((lo, hi))
}

/// Executable form of the stability and unbiasedness guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    /// PBH detectability of the pair `{A, H_col}`.
    pub detectable: bool,
    /// PBH stabilizability of the pair `{A, Σ_v^{1/2}}`.
    pub stabilizable: bool,
    /// Spectral radius of `C·F` at the supplied gains.
    pub rho_cf: f64,
    /// Smallest `k` with `‖(C·F)ᵏ‖₂ < 1`, if found within the search
    /// budget.
    pub contraction_exponent: Option<usize>,
    /// Spectral radius of the centralized closed loop
    /// `(I − M·Σ_l H_lᵀR_l⁻¹H_l)·A` at the supplied centralized Riccati
    /// matrix.
    pub centralized_rho: f64,
}

impl StabilityCertificate {
    /// Serializes as `key: value` lines.
    pub fn to_key_value_string(&self) -> String {
        let k = match self.contraction_exponent {
            Some(k) => k.to_string(),
            None => "none".to_string(),
        };
        format!(
            "detectable: {}\nstabilizable: {}\nrho_cf: {}\ncontraction_exponent: {}\ncentralized_rho: {}\n",
            self.detectable, self.stabilizable, self.rho_cf, k, self.centralized_rho
        )
    }
}

/// Assembles the full certificate for a gain set: PBH hypotheses, the
/// spectral radius and contraction exponent of `C·F`, and the
/// centralized closed-loop radius at `centralized_m`.
pub fn stability_certificate(
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    cm: &CombinationMatrix,
    gains: &[DMatrix<f64>],
    centralized_m: &DMatrix<f64>,
    k_max: usize,
) -> Result<StabilityCertificate> {
    let h_col = stacked_observation_matrix(obs_models)?;
    let detectable = pbh_detectability(model.a(), &h_col, PBH_RANK_TOL)?;
    let stabilizable = pbh_stabilizability(model.a(), &model.sigma_v_sqrt()?, PBH_RANK_TOL)?;
    let sys = build_stacked_system(cm, gains, obs_models, model)?;
    let (rho_cf, contraction_exponent) = contraction_certificate(&sys, k_max)?;
    let centralized_rho = centralized_closed_loop_rho(model, obs_models, centralized_m)?;
    Ok(StabilityCertificate {
        detectable,
        stabilizable,
        rho_cf,
        contraction_exponent,
        centralized_rho,
    })
}

/// `ρ((I − M·Σ_l H_lᵀR_l⁻¹H_l)·A)` for a centralized Riccati matrix `M`.
pub fn centralized_closed_loop_rho(
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    m: &DMatrix<f64>,
) -> Result<f64> {
    let n = model.state_dim();
    let mut info = DMatrix::zeros(n, n);
    for (l, obs) in obs_models.iter().enumerate() {
        info += observation_information(obs, &format!("weighting factor R of node {l}"))?;
    }
    let closed = (DMatrix::identity(n, n) - m * info) * model.a();
    spectral_radius(&closed)
}

/// Monte-Carlo estimate of the mean stacked error at selected steps.
#[derive(Debug, Clone)]
pub struct BiasValidation {
    /// The recorded step counts, ascending.
    pub steps: Vec<usize>,
    /// Componentwise mean of the stacked error at each recorded step.
    pub means: Vec<DVector<f64>>,
    /// Componentwise standard error of each mean.
    pub std_errs: Vec<DVector<f64>>,
    pub runs: usize,
}

/// Runs `runs` independent realizations of the stacked error recursion
/// and records componentwise means and standard errors at `checkpoints`
/// (step counts; `0` is the initial error).
///
/// Each run draws its initial error as `e1_mean` plus per-node
/// `N(0, e1_std²·I)` perturbations, then drives the recursion with fresh
/// process and observation noises. Runs execute in parallel (under the
/// `parallel` feature) with independent derived seeds; aggregation is in
/// run order with compensated summation, so the result is identical under
/// any scheduling.
pub fn monte_carlo_mean_errors(
    sys: &StackedErrorSystem,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    e1_mean: &DVector<f64>,
    e1_std: f64,
    checkpoints: &[usize],
    runs: usize,
    seed: u64,
) -> Result<BiasValidation> {
    let ctx = McContext::new(sys, model, obs_models, e1_mean, e1_std, checkpoints, runs)?;
    let per_run = par::try_map_indexed(runs, |r| ctx.single_run(run_seed(seed, r as u64)))?;
    ctx.aggregate(per_run)
}

/// Sequential twin of [`monte_carlo_mean_errors`] (for benchmarks).
pub fn monte_carlo_mean_errors_seq(
    sys: &StackedErrorSystem,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    e1_mean: &DVector<f64>,
    e1_std: f64,
    checkpoints: &[usize],
    runs: usize,
    seed: u64,
) -> Result<BiasValidation> {
    let ctx = McContext::new(sys, model, obs_models, e1_mean, e1_std, checkpoints, runs)?;
    let per_run = par::try_map_indexed_seq(runs, |r| ctx.single_run(run_seed(seed, r as u64)))?;
    ctx.aggregate(per_run)
}

struct McContext<'a> {
    sys: &'a StackedErrorSystem,
    process_sampler: GaussianSampler,
    obs_samplers: Vec<GaussianSampler>,
    e1_mean: &'a DVector<f64>,
    e1_std: f64,
    steps: Vec<usize>,
    runs: usize,
}

impl<'a> McContext<'a> {
    fn new(
        sys: &'a StackedErrorSystem,
        model: &StateSpaceModel,
        obs_models: &[NodeObservationModel],
        e1_mean: &'a DVector<f64>,
        e1_std: f64,
        checkpoints: &[usize],
        runs: usize,
    ) -> Result<Self> {
        if runs == 0 {
            return Err(Error::validation("runs must be >= 1"));
        }
        if checkpoints.is_empty() {
            return Err(Error::validation("at least one checkpoint is required"));
        }
        if e1_mean.len() != sys.stacked_dim() {
            return Err(Error::dimension(format!(
                "mean initial error has length {}, expected {}",
                e1_mean.len(),
                sys.stacked_dim()
            )));
        }
        if obs_models.len() != sys.node_count {
            return Err(Error::dimension(format!(
                "expected {} observation models, got {}",
                sys.node_count,
                obs_models.len()
            )));
        }
        let mut steps = checkpoints.to_vec();
        steps.sort_unstable();
        steps.dedup();
        let process_sampler = GaussianSampler::new(model.sigma_v())?;
        let obs_samplers = obs_models
            .iter()
            .map(|o| GaussianSampler::new(o.sigma_w()))
            .collect::<Result<Vec<_>>>()?;
        Ok(McContext {
            sys,
            process_sampler,
            obs_samplers,
            e1_mean,
            e1_std,
            steps,
            runs,
        })
    }

    fn single_run(&self, rs: u64) -> Result<Vec<DVector<f64>>> {
        let n = self.sys.state_dim;
        let mut e = self.e1_mean.clone();
        if self.e1_std != 0.0 {
            for l in 0..self.sys.node_count {
                let mut rng = substream(rs, StreamKind::InitialError, l as u64, 0);
                for i in 0..n {
                    use rand::Rng;
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    e[l * n + i] += self.e1_std * z;
                }
            }
        }
        let horizon = *self.steps.last().unwrap();
        let mut recorded = Vec::with_capacity(self.steps.len());
        let mut next_record = 0;
        if self.steps[next_record] == 0 {
            recorded.push(e.clone());
            next_record += 1;
        }
        let total_obs = self.sys.total_obs_dim();
        for step in 0..horizon {
            let mut rng = substream(rs, StreamKind::ProcessNoise, 0, step as u64);
            let v = self.process_sampler.sample(&mut rng);
            let mut w = DVector::zeros(total_obs);
            let mut row = 0;
            for (l, sampler) in self.obs_samplers.iter().enumerate() {
                let mut rng = substream(rs, StreamKind::ObservationNoise, l as u64, step as u64);
                w.rows_mut(row, sampler.dim())
                    .copy_from(&sampler.sample(&mut rng));
                row += sampler.dim();
            }
            e = error_recursion_step(self.sys, &e, &v, &w)?;
            if next_record < self.steps.len() && self.steps[next_record] == step + 1 {
                recorded.push(e.clone());
                next_record += 1;
            }
        }
        Ok(recorded)
    }

    fn aggregate(&self, per_run: Vec<Vec<DVector<f64>>>) -> Result<BiasValidation> {
        let dim = self.sys.stacked_dim();
        let mut means = Vec::with_capacity(self.steps.len());
        let mut std_errs = Vec::with_capacity(self.steps.len());
        for c in 0..self.steps.len() {
            // compensated (Kahan) summation in run order
            let mut acc = vec![0.0f64; dim];
            let mut comp = vec![0.0f64; dim];
            for run in &per_run {
                for i in 0..dim {
                    let y = run[c][i] - comp[i];
                    let t = acc[i] + y;
                    comp[i] = (t - acc[i]) - y;
                    acc[i] = t;
                }
            }
            let mean = DVector::from_fn(dim, |i, _| acc[i] / self.runs as f64);
            let mut var = vec![0.0f64; dim];
            if self.runs > 1 {
                for run in &per_run {
                    for i in 0..dim {
                        let d = run[c][i] - mean[i];
                        var[i] += d * d;
                    }
                }
                for v in &mut var {
                    *v /= (self.runs - 1) as f64;
                }
            }
            let se = DVector::from_fn(dim, |i, _| (var[i] / self.runs as f64).sqrt());
            means.push(mean);
            std_errs.push(se);
        }
        Ok(BiasValidation {
            steps: self.steps.clone(),
            means,
            std_errs,
            runs: self.runs,
        })
    }
}
