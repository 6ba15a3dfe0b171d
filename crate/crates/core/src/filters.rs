//! The centralized filter, the diffusion filter, and their gain schedules.
//!
//! Three schedules produce the per-node gains `G_l = M_l·H_lᵀ·R_l⁻¹`:
//!
//! - **centralized** — one Riccati recursion over the stacked observation
//!   map; the reference the distributed schedules are measured against,
//! - **modern** — the distributed Riccati recursion: each node forms a
//!   local information update `S_l` and convex-combines its neighbours'
//!   `S_i`, one exchange per step,
//! - **classical** — each node runs the Riccati recursion on its own
//!   observation map only, with fusion applied to estimates but never to
//!   the matrices. Along locally unobservable modes `M_l` grows without
//!   bound, so this schedule is carried in information form.
//!
//! Within one time step the adapt phase reads only pre-step state and the
//! combine phase reads only adapt outputs, so both phases are parallel
//! across nodes and results match sequential execution exactly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    max_asymmetry, min_symmetric_eigenvalue, psd_sqrt_factor, spd_inverse, symmetrize, SpdFactor,
};
use crate::model::{NodeObservationModel, StateSpaceModel};
use crate::network::{CombinationMatrix, Network};
use crate::par;

/// Asymmetry beyond which an information matrix is considered corrupted
/// rather than merely rounded.
const INFO_ASYMMETRY_TOL: f64 = 1e-8;

/// Centralized filter state: estimate, Riccati matrix, stacked gain.
#[derive(Debug, Clone)]
pub struct CentralizedFilterState {
    pub x_hat: DVector<f64>,
    pub m: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl CentralizedFilterState {
    /// Initial state with the gain derived from `m`.
    pub fn initial(
        x_hat: DVector<f64>,
        m: DMatrix<f64>,
        obs_models: &[NodeObservationModel],
    ) -> Result<Self> {
        let g = centralized_gain(&m, obs_models)?;
        Ok(CentralizedFilterState { x_hat, m, g })
    }
}

/// Per-node filter state: estimate, intermediate estimate, Riccati matrix
/// `M_l`, information intermediate `S_l`, gain `G_l`.
#[derive(Debug, Clone)]
pub struct NodeFilterState {
    pub x_hat: DVector<f64>,
    pub phi: DVector<f64>,
    pub m: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl NodeFilterState {
    /// Initial state for node with Riccati matrix `m`; the gain is
    /// derived from `m` and `s` starts as the information of `m`.
    pub fn initial(
        x_hat: DVector<f64>,
        m: DMatrix<f64>,
        obs_model: &NodeObservationModel,
    ) -> Result<Self> {
        let g = distributed_gain(&m, obs_model)?;
        let s = spd_inverse(&m, "initial Riccati matrix")?;
        Ok(NodeFilterState {
            phi: x_hat.clone(),
            x_hat,
            m,
            s,
            g,
        })
    }
}

/// Predicted-covariance pair for the rearranged distributed recursion.
#[derive(Debug, Clone)]
pub struct PZState {
    pub p: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

/// `H_lᵀ·R_l⁻¹·H_l`, with the inversion skipped when `H_l` is zero (the
/// term vanishes regardless of `R_l`).
pub fn observation_information(obs: &NodeObservationModel, context: &str) -> Result<DMatrix<f64>> {
    let n = obs.state_dim();
    if obs.h().iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(n, n));
    }
    let r_factor = SpdFactor::new_strict(obs.r(), context)?;
    let r_inv_h = r_factor.solve_mat(obs.h());
    Ok(symmetrize(&(obs.h().transpose() * r_inv_h)))
}

/// `M·H_lᵀ·R_l⁻¹` for one node.
pub fn distributed_gain(m: &DMatrix<f64>, obs: &NodeObservationModel) -> Result<DMatrix<f64>> {
    if m.ncols() != obs.state_dim() {
        return Err(Error::dimension(format!(
            "gain: Riccati matrix is {}x{}, observation map expects state dimension {}",
            m.nrows(),
            m.ncols(),
            obs.state_dim()
        )));
    }
    if obs.h().iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(m.nrows(), obs.obs_dim()));
    }
    let r_factor = SpdFactor::new_strict(obs.r(), "weighting factor R")?;
    let r_inv_h = r_factor.solve_mat(obs.h());
    Ok(m * r_inv_h.transpose())
}

/// Gain from an information matrix: solves `Ω·G = H_lᵀ·R_l⁻¹` so the
/// explicit (possibly enormous) `M = Ω⁻¹` is never formed.
pub fn gain_from_information(
    info: &DMatrix<f64>,
    obs: &NodeObservationModel,
) -> Result<DMatrix<f64>> {
    if obs.h().iter().all(|&v| v == 0.0) {
        return Ok(DMatrix::zeros(info.nrows(), obs.obs_dim()));
    }
    let r_factor = SpdFactor::new_strict(obs.r(), "weighting factor R")?;
    let r_inv_h = r_factor.solve_mat(obs.h());
    let info_factor = SpdFactor::new(info, "information matrix")?;
    Ok(info_factor.solve_mat(&r_inv_h.transpose()))
}

/// Stacked observation matrix `col{H_l}` over all nodes.
pub fn stacked_observation_matrix(obs_models: &[NodeObservationModel]) -> Result<DMatrix<f64>> {
    if obs_models.is_empty() {
        return Err(Error::validation("no observation models given"));
    }
    let n = obs_models[0].state_dim();
    let total: usize = obs_models.iter().map(|o| o.obs_dim()).sum();
    let mut h_col = DMatrix::zeros(total, n);
    let mut row = 0;
    for (l, o) in obs_models.iter().enumerate() {
        if o.state_dim() != n {
            return Err(Error::dimension(format!(
                "node {l} observation map expects state dimension {}, node 0 has {n}",
                o.state_dim()
            )));
        }
        h_col.view_mut((row, 0), (o.obs_dim(), n)).copy_from(o.h());
        row += o.obs_dim();
    }
    Ok(h_col)
}

/// One centralized Riccati step: returns `M'` with
/// `M'⁻¹ = (A·M·Aᵀ + Σ_v)⁻¹ + Σ_l H_lᵀ·R_l⁻¹·H_l`.
pub fn centralized_riccati_step(
    m: &DMatrix<f64>,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
) -> Result<DMatrix<f64>> {
    let n = model.state_dim();
    if m.shape() != (n, n) {
        return Err(Error::dimension(format!(
            "Riccati matrix is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    let predicted = symmetrize(&(model.a() * m * model.a().transpose() + model.sigma_v()));
    let pred_factor = SpdFactor::new(&predicted, "predicted covariance A·M·Aᵀ + Σ_v")?;
    let mut info = pred_factor.inverse();
    for (l, obs) in obs_models.iter().enumerate() {
        info += observation_information(obs, &format!("weighting factor R of node {l}"))?;
    }
    spd_inverse(&info, "centralized information matrix")
}

/// Stacked gain `G = M·H_colᵀ·R⁻¹ = [M·H_1ᵀ·R_1⁻¹ … M·H_Nᵀ·R_N⁻¹]`.
pub fn centralized_gain(
    m: &DMatrix<f64>,
    obs_models: &[NodeObservationModel],
) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let total: usize = obs_models.iter().map(|o| o.obs_dim()).sum();
    let mut g = DMatrix::zeros(n, total);
    let mut col = 0;
    for (l, obs) in obs_models.iter().enumerate() {
        let block = distributed_gain(m, obs)
            .map_err(|e| Error::numerical(format!("gain block of node {l}: {e}")))?;
        g.view_mut((0, col), (n, obs.obs_dim())).copy_from(&block);
        col += obs.obs_dim();
    }
    Ok(g)
}

/// One centralized filter update consuming the stacked observation of the
/// new state: `x̂' = (I − G·H_col)·A·x̂ + G·y_col`.
pub fn centralized_step(
    state: &CentralizedFilterState,
    y_col: &DVector<f64>,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
) -> Result<CentralizedFilterState> {
    let h_col = stacked_observation_matrix(obs_models)?;
    if y_col.len() != h_col.nrows() {
        return Err(Error::dimension(format!(
            "stacked observation has length {}, expected {}",
            y_col.len(),
            h_col.nrows()
        )));
    }
    if state.g.shape() != (model.state_dim(), h_col.nrows()) {
        return Err(Error::dimension(format!(
            "gain is {}x{}, expected {}x{}",
            state.g.nrows(),
            state.g.ncols(),
            model.state_dim(),
            h_col.nrows()
        )));
    }
    let closed = DMatrix::identity(model.state_dim(), model.state_dim()) - &state.g * &h_col;
    let x_hat = &closed * (model.a() * &state.x_hat) + &state.g * y_col;
    Ok(CentralizedFilterState {
        x_hat,
        m: state.m.clone(),
        g: state.g.clone(),
    })
}

/// One distributed Riccati step over all nodes.
///
/// Phase one (per node): `S_l' = (A·M_l·Aᵀ + Σ_v)⁻¹ + H_lᵀ·R_l⁻¹·H_l`.
/// Phase two (per node): `M_l'⁻¹ = Σ_{i∈N_l} c_{l,i}·S_i'` — each node
/// touches only its neighbours' `S`, one exchange per step. Returns the
/// new `(M, S)` pairs.
pub fn distributed_riccati_step(
    ms: &[DMatrix<f64>],
    net: &Network,
    cm: &CombinationMatrix,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    let count = net.node_count();
    if ms.len() != count || obs_models.len() != count || cm.node_count() != count {
        return Err(Error::dimension(format!(
            "expected {count} Riccati matrices and observation models, got {} and {}",
            ms.len(),
            obs_models.len()
        )));
    }
    let new_ss: Vec<DMatrix<f64>> = par::try_map_indexed(count, |l| {
        let predicted =
            symmetrize(&(model.a() * &ms[l] * model.a().transpose() + model.sigma_v()));
        let factor = SpdFactor::new(
            &predicted,
            &format!("predicted covariance A·M·Aᵀ + Σ_v of node {l}"),
        )?;
        let info = observation_information(
            &obs_models[l],
            &format!("weighting factor R of node {l}"),
        )?;
        Ok::<_, Error>(factor.inverse() + info)
    })?;
    let new_ms: Vec<DMatrix<f64>> = par::try_map_indexed(count, |l| {
        let mut combined = DMatrix::zeros(model.state_dim(), model.state_dim());
        for &i in net.neighborhood(l) {
            combined += cm.weight(l, i) * &new_ss[i];
        }
        spd_inverse(&combined, &format!("combined information of node {l}"))
    })?;
    Ok((new_ms, new_ss))
}

/// One diffusion filter step over all nodes, consuming each node's
/// observation of the new state.
///
/// Adapt: `φ_l' = (I − G_l·H_l)·A·x̂_l + G_l·y_l` from pre-step estimates
/// only. Combine: `x̂_l' = Σ_{i∈N_l} c_{l,i}·φ_i'`.
pub fn diffusion_step(
    states: &[NodeFilterState],
    ys: &[DVector<f64>],
    net: &Network,
    cm: &CombinationMatrix,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
) -> Result<Vec<NodeFilterState>> {
    let count = net.node_count();
    if states.len() != count || ys.len() != count || obs_models.len() != count {
        return Err(Error::dimension(format!(
            "expected {count} states and observations, got {} and {}",
            states.len(),
            ys.len()
        )));
    }
    let n = model.state_dim();
    let phis: Vec<DVector<f64>> = par::try_map_indexed(count, |l| {
        let obs = &obs_models[l];
        if ys[l].len() != obs.obs_dim() {
            return Err(Error::dimension(format!(
                "observation of node {l} has length {}, expected {}",
                ys[l].len(),
                obs.obs_dim()
            )));
        }
        if states[l].g.shape() != (n, obs.obs_dim()) {
            return Err(Error::dimension(format!(
                "gain of node {l} is {}x{}, expected {n}x{}",
                states[l].g.nrows(),
                states[l].g.ncols(),
                obs.obs_dim()
            )));
        }
        let closed = DMatrix::identity(n, n) - &states[l].g * obs.h();
        Ok::<_, Error>(&closed * (model.a() * &states[l].x_hat) + &states[l].g * &ys[l])
    })?;
    let new_states: Vec<NodeFilterState> = par::map_indexed(count, |l| {
        let mut x_hat = DVector::zeros(n);
        for &i in net.neighborhood(l) {
            x_hat += cm.weight(l, i) * &phis[i];
        }
        NodeFilterState {
            x_hat,
            phi: phis[l].clone(),
            m: states[l].m.clone(),
            s: states[l].s.clone(),
            g: states[l].g.clone(),
        }
    });
    Ok(new_states)
}

/// One local-only Riccati step in information form.
///
/// Maps `Ω = M⁻¹` to `Ω' = (A·Ω⁻¹·Aᵀ + Σ_v)⁻¹ + H_lᵀ·R_l⁻¹·H_l` without
/// ever forming `M`: for invertible `A` the predicted information is
/// computed from `Ω̃ = A⁻ᵀ·Ω·A⁻¹` and the factored process noise
/// `Σ_v = F·Fᵀ` as `Ω̃ − Ω̃·F·(I + Fᵀ·Ω̃·F)⁻¹·Fᵀ·Ω̃`, which stays bounded
/// while eigenvalues of `M` along unobservable modes diverge.
pub fn classical_information_step(
    info: &DMatrix<f64>,
    model: &StateSpaceModel,
    obs_model: &NodeObservationModel,
) -> Result<DMatrix<f64>> {
    let n = model.state_dim();
    if info.shape() != (n, n) {
        return Err(Error::dimension(format!(
            "information matrix is {}x{}, expected {n}x{n}",
            info.nrows(),
            info.ncols()
        )));
    }
    let asym = max_asymmetry(info);
    if asym > INFO_ASYMMETRY_TOL {
        return Err(Error::numerical(format!(
            "information matrix lost symmetry by {asym:.3e}"
        )));
    }
    let omega = symmetrize(info);
    let scale = omega.trace().abs().max(1.0) / n as f64;
    let min_eig = min_symmetric_eigenvalue(&omega);
    if min_eig < -1e-10 * scale {
        return Err(Error::numerical(format!(
            "information matrix is indefinite (smallest eigenvalue {min_eig:.3e})"
        )));
    }

    let lu = model.a().clone().lu();
    let predicted_info = if lu.is_invertible() {
        // Ω̃ = A⁻ᵀ Ω A⁻¹ via two solves against Aᵀ
        let at_lu = model.a().transpose().lu();
        let s1 = at_lu
            .solve(&omega)
            .ok_or_else(|| Error::numerical("state matrix solve failed"))?;
        let s2 = at_lu
            .solve(&s1.transpose())
            .ok_or_else(|| Error::numerical("state matrix solve failed"))?;
        let omega_tilde = symmetrize(&s2);
        let f = psd_sqrt_factor(model.sigma_v(), 1e-14, "process-noise covariance")?;
        if f.ncols() == 0 {
            omega_tilde
        } else {
            let of = &omega_tilde * &f;
            let inner = DMatrix::identity(f.ncols(), f.ncols()) + f.transpose() * &of;
            let inner_factor = SpdFactor::new(&inner, "noise-space correction")?;
            symmetrize(&(&omega_tilde - &of * inner_factor.solve_mat(&of.transpose())))
        }
    } else {
        // singular A: the explicit covariance route is safe because
        // A·M·Aᵀ stays bounded on the range of A
        let m = spd_inverse(&omega, "information matrix")?;
        let predicted = symmetrize(&(model.a() * m * model.a().transpose() + model.sigma_v()));
        SpdFactor::new(&predicted, "predicted covariance A·M·Aᵀ + Σ_v")?.inverse()
    };

    let info_term = observation_information(obs_model, "weighting factor R")?;
    Ok(symmetrize(&(predicted_info + info_term)))
}

/// Neighbourhood-stacked observation map of node `l`: rows
/// `√(c_{l,i})·H_i` for `i ∈ N_l` and the matching block-diagonal
/// weighting matrix `diag{R_i : i ∈ N_l}`.
pub fn neighborhood_stacked_observation(
    net: &Network,
    cm: &CombinationMatrix,
    obs_models: &[NodeObservationModel],
    l: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if l >= net.node_count() {
        return Err(Error::dimension(format!(
            "node {l} out of range for {} nodes",
            net.node_count()
        )));
    }
    let n = obs_models[0].state_dim();
    let rows: usize = net.neighborhood(l).iter().map(|&i| obs_models[i].obs_dim()).sum();
    let mut h_bar = DMatrix::zeros(rows, n);
    let mut r_bar = DMatrix::zeros(rows, rows);
    let mut row = 0;
    for &i in net.neighborhood(l) {
        let p = obs_models[i].obs_dim();
        h_bar
            .view_mut((row, 0), (p, n))
            .copy_from(&(cm.weight(l, i).sqrt() * obs_models[i].h()));
        r_bar
            .view_mut((row, row), (p, p))
            .copy_from(obs_models[i].r());
        row += p;
    }
    Ok((h_bar, r_bar))
}

/// `H̄_lᵀ·R̄_l⁻¹·H̄_l` from the neighbourhood stacks, applying `R̄_l⁻¹`
/// block by block (rows of a zero `H_i` block contribute nothing and skip
/// the inversion of that block).
pub fn neighborhood_information(
    net: &Network,
    cm: &CombinationMatrix,
    obs_models: &[NodeObservationModel],
    l: usize,
) -> Result<DMatrix<f64>> {
    let (h_bar, _) = neighborhood_stacked_observation(net, cm, obs_models, l)?;
    let n = h_bar.ncols();
    let mut r_inv_h = DMatrix::zeros(h_bar.nrows(), n);
    let mut row = 0;
    for &i in net.neighborhood(l) {
        let p = obs_models[i].obs_dim();
        let block = h_bar.view((row, 0), (p, n)).clone_owned();
        if block.iter().any(|&v| v != 0.0) {
            let factor = SpdFactor::new_strict(
                obs_models[i].r(),
                &format!("weighting factor R of node {i}"),
            )?;
            r_inv_h
                .view_mut((row, 0), (p, n))
                .copy_from(&factor.solve_mat(&block));
        }
        row += p;
    }
    Ok(symmetrize(&(h_bar.transpose() * r_inv_h)))
}

/// Builds matched predicted/combined pairs from per-node Riccati
/// matrices: `P_l = A·M_l·Aᵀ + Σ_v`, then `Z_l⁻¹ = Σ_{i∈N_l} c_{l,i}·P_i⁻¹`.
pub fn pz_initialize(
    ms: &[DMatrix<f64>],
    net: &Network,
    cm: &CombinationMatrix,
    model: &StateSpaceModel,
) -> Result<Vec<PZState>> {
    let count = net.node_count();
    if ms.len() != count {
        return Err(Error::dimension(format!(
            "expected {count} Riccati matrices, got {}",
            ms.len()
        )));
    }
    let ps: Vec<DMatrix<f64>> = par::try_map_indexed(count, |l| {
        Ok::<_, Error>(symmetrize(
            &(model.a() * &ms[l] * model.a().transpose() + model.sigma_v()),
        ))
    })?;
    combine_pz(&ps, net, cm)
}

fn combine_pz(
    ps: &[DMatrix<f64>],
    net: &Network,
    cm: &CombinationMatrix,
) -> Result<Vec<PZState>> {
    let count = net.node_count();
    let p_invs: Vec<DMatrix<f64>> = par::try_map_indexed(count, |l| {
        spd_inverse(&ps[l], &format!("predicted covariance of node {l}"))
    })?;
    par::try_map_indexed(count, |l| {
        let n = ps[l].nrows();
        let mut z_inv = DMatrix::zeros(n, n);
        for &i in net.neighborhood(l) {
            z_inv += cm.weight(l, i) * &p_invs[i];
        }
        let z = spd_inverse(&z_inv, &format!("combined information of node {l}"))?;
        Ok(PZState {
            p: ps[l].clone(),
            z,
        })
    })
}

/// One step of the rearranged distributed Riccati recursion:
/// `P_l' = A·(Z_l⁻¹ + H̄_lᵀ·R̄_l⁻¹·H̄_l)⁻¹·Aᵀ + Σ_v`, then
/// `Z_l'⁻¹ = Σ_{i∈N_l} c_{l,i}·P_i'⁻¹`.
pub fn pz_form_step(
    pzs: &[PZState],
    net: &Network,
    cm: &CombinationMatrix,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
) -> Result<Vec<PZState>> {
    let count = net.node_count();
    if pzs.len() != count || obs_models.len() != count {
        return Err(Error::dimension(format!(
            "expected {count} PZ states and observation models, got {} and {}",
            pzs.len(),
            obs_models.len()
        )));
    }
    let ps: Vec<DMatrix<f64>> = par::try_map_indexed(count, |l| {
        let posterior = pz_posterior(&pzs[l], net, cm, obs_models, l)?;
        Ok::<_, Error>(symmetrize(
            &(model.a() * posterior * model.a().transpose() + model.sigma_v()),
        ))
    })?;
    combine_pz(&ps, net, cm)
}

/// The Riccati matrix implied by a PZ pair:
/// `M_l = (Z_l⁻¹ + H̄_lᵀ·R̄_l⁻¹·H̄_l)⁻¹`.
pub fn pz_posterior(
    pz: &PZState,
    net: &Network,
    cm: &CombinationMatrix,
    obs_models: &[NodeObservationModel],
    l: usize,
) -> Result<DMatrix<f64>> {
    let z_inv = spd_inverse(&pz.z, &format!("combined covariance of node {l}"))?;
    let info = neighborhood_information(net, cm, obs_models, l)?;
    spd_inverse(&(z_inv + info), &format!("posterior information of node {l}"))
}

/// Outcome of iterating a Riccati recursion to a fixed point.
#[derive(Debug, Clone)]
pub struct RiccatiConvergence<M> {
    pub value: M,
    pub iterations: usize,
    pub converged: bool,
    /// Last observed `max_l ‖ΔM_l‖_F`.
    pub last_delta: f64,
}

/// Iterates the centralized Riccati recursion from `m0` until
/// `‖ΔM‖_F < tol` or `max_iter` steps.
pub fn converge_centralized_riccati(
    m0: &DMatrix<f64>,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiConvergence<DMatrix<f64>>> {
    let mut m = m0.clone();
    let mut delta = f64::INFINITY;
    for it in 1..=max_iter {
        let next = centralized_riccati_step(&m, model, obs_models)?;
        delta = (&next - &m).norm();
        m = next;
        if delta < tol {
            return Ok(RiccatiConvergence {
                value: m,
                iterations: it,
                converged: true,
                last_delta: delta,
            });
        }
    }
    Ok(RiccatiConvergence {
        value: m,
        iterations: max_iter,
        converged: false,
        last_delta: delta,
    })
}

/// Iterates the distributed Riccati recursion until
/// `max_l ‖ΔM_l‖_F < tol` or `max_iter` steps.
pub fn converge_distributed_riccati(
    ms0: &[DMatrix<f64>],
    net: &Network,
    cm: &CombinationMatrix,
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiConvergence<Vec<DMatrix<f64>>>> {
    let mut ms = ms0.to_vec();
    let mut delta = f64::INFINITY;
    for it in 1..=max_iter {
        let (next, _) = distributed_riccati_step(&ms, net, cm, model, obs_models)?;
        delta = next
            .iter()
            .zip(&ms)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        ms = next;
        if delta < tol {
            return Ok(RiccatiConvergence {
                value: ms,
                iterations: it,
                converged: true,
                last_delta: delta,
            });
        }
    }
    Ok(RiccatiConvergence {
        value: ms,
        iterations: max_iter,
        converged: false,
        last_delta: delta,
    })
}
