//! Linear-Gaussian state-space models and trajectory simulation.
//!
//! The state evolves as `x_{n+1} = A·x_n + v_n` and node `l` observes
//! `y_{l,n} = H_l·x_n + w_{l,n}`, with all noises zero-mean Gaussian,
//! independent across time and across nodes. Simulated trajectories keep
//! their noise sequences so error recursions can be replayed exactly.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, psd_sqrt, symmetric_eig_range};
use crate::rng::{substream, StreamKind};

/// Symmetry tolerance for covariance inputs.
const SYMMETRY_TOL: f64 = 1e-12;
/// Most-negative eigenvalue tolerated in a PSD covariance.
const PSD_EIG_TOL: f64 = 1e-10;

/// State evolution `x_{n+1} = A·x_n + v_n` with `v_n ~ N(0, Σ_v)`.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    sigma_v: DMatrix<f64>,
}

impl StateSpaceModel {
    /// Validates that `A` is square and `Σ_v` is symmetric PSD of the
    /// same dimension.
    pub fn new(a: DMatrix<f64>, sigma_v: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::dimension(format!(
                "state matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if sigma_v.shape() != a.shape() {
            return Err(Error::dimension(format!(
                "process-noise covariance is {}x{}, expected {}x{}",
                sigma_v.nrows(),
                sigma_v.ncols(),
                a.nrows(),
                a.nrows()
            )));
        }
        check_symmetric_psd(&sigma_v, "process-noise covariance")?;
        Ok(StateSpaceModel { a, sigma_v })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn sigma_v(&self) -> &DMatrix<f64> {
        &self.sigma_v
    }

    /// Any factor `F` with `F·Fᵀ = Σ_v` (symmetric PSD square root);
    /// valid for the rank-deficient covariances produced by input-driven
    /// models.
    pub fn sigma_v_sqrt(&self) -> Result<DMatrix<f64>> {
        psd_sqrt(&self.sigma_v, 1e-14, "process-noise covariance")
    }
}

/// Per-node observation `y_{l,n} = H_l·x_n + w_{l,n}` with
/// `w_{l,n} ~ N(0, Σ_w)` and gain-weighting factor `R`.
#[derive(Debug, Clone)]
pub struct NodeObservationModel {
    h: DMatrix<f64>,
    sigma_w: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl NodeObservationModel {
    /// Validates that `Σ_w` is symmetric PD and `R` symmetric PSD, both
    /// of the observation dimension. Invertibility of `R` is demanded
    /// only when a gain is computed from it, not here.
    pub fn new(h: DMatrix<f64>, sigma_w: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let obs_dim = h.nrows();
        if obs_dim == 0 || h.ncols() == 0 {
            return Err(Error::dimension("observation matrix must be non-empty"));
        }
        if sigma_w.shape() != (obs_dim, obs_dim) {
            return Err(Error::dimension(format!(
                "observation-noise covariance is {}x{}, expected {obs_dim}x{obs_dim}",
                sigma_w.nrows(),
                sigma_w.ncols()
            )));
        }
        if r.shape() != (obs_dim, obs_dim) {
            return Err(Error::dimension(format!(
                "weighting factor is {}x{}, expected {obs_dim}x{obs_dim}",
                r.nrows(),
                r.ncols()
            )));
        }
        check_symmetric_psd(&sigma_w, "observation-noise covariance")?;
        let (min_eig, _) = symmetric_eig_range(&sigma_w);
        if min_eig <= 0.0 {
            return Err(Error::numerical(format!(
                "observation-noise covariance must be positive definite (smallest eigenvalue {min_eig:.3e})"
            )));
        }
        check_symmetric_psd(&r, "weighting factor")?;
        Ok(NodeObservationModel { h, sigma_w, r })
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn sigma_w(&self) -> &DMatrix<f64> {
        &self.sigma_w
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
}

fn check_symmetric_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::numerical(format!(
            "{what} is asymmetric by {asym:.3e} (tolerance {SYMMETRY_TOL:.0e})"
        )));
    }
    let (min_eig, max_eig) = symmetric_eig_range(m);
    if min_eig < -PSD_EIG_TOL * max_eig.abs().max(1.0) {
        return Err(Error::numerical(format!(
            "{what} is not PSD (eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

/// Zero-mean Gaussian sampler for a fixed PSD covariance.
///
/// Draws are `F·z` with `z` i.i.d. standard normal and `F` the symmetric
/// PSD square root, so rank-deficient covariances are handled and the
/// number of underlying uniform draws per sample is independent of rank.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::dimension(format!(
                "covariance must be square, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let (min_eig, max_eig) = symmetric_eig_range(cov);
        if min_eig < -PSD_EIG_TOL * max_eig.abs().max(1.0) {
            return Err(Error::numerical(format!(
                "covariance is not PSD (eigenvalue {min_eig:.3e})"
            )));
        }
        let factor = psd_sqrt(cov, 1e-14, "covariance")?;
        Ok(GaussianSampler { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.factor.nrows();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.factor * z
    }
}

/// One zero-mean draw with covariance `cov` from the given stream.
pub fn sample_gaussian<R: Rng>(cov: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
    Ok(GaussianSampler::new(cov)?.sample(rng))
}

/// A simulated state/observation record with its noise sequences.
///
/// `states[n+1] = A·states[n] + process_noises[n]` and
/// `observations[l][n] = H_l·states[n] + observation_noises[l][n]` hold
/// bitwise: the noises are stored, never re-derived.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `x_1 .. x_T`.
    pub states: Vec<DVector<f64>>,
    /// Per node, `y_{l,1} .. y_{l,T}`.
    pub observations: Vec<Vec<DVector<f64>>>,
    /// `v_1 .. v_{T-1}`.
    pub process_noises: Vec<DVector<f64>>,
    /// Per node, `w_{l,1} .. w_{l,T}`.
    pub observation_noises: Vec<Vec<DVector<f64>>>,
}

impl Trajectory {
    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.observations.len()
    }
}

/// Simulates `steps` time points starting from the zero state.
pub fn simulate_trajectory(
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let x1 = DVector::zeros(model.state_dim());
    simulate_trajectory_from(model, obs_models, &x1, steps, seed)
}

/// Simulates `steps` time points starting from `x1`.
///
/// Noise draws are per-node, per-step substreams of `seed`, so node `l`'s
/// noise sequence does not depend on how many other nodes exist.
pub fn simulate_trajectory_from(
    model: &StateSpaceModel,
    obs_models: &[NodeObservationModel],
    x1: &DVector<f64>,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::validation("steps must be >= 1"));
    }
    if x1.len() != model.state_dim() {
        return Err(Error::dimension(format!(
            "initial state has length {}, expected {}",
            x1.len(),
            model.state_dim()
        )));
    }
    for (l, obs) in obs_models.iter().enumerate() {
        if obs.state_dim() != model.state_dim() {
            return Err(Error::dimension(format!(
                "observation model of node {l} expects state dimension {}, model has {}",
                obs.state_dim(),
                model.state_dim()
            )));
        }
    }

    let process_sampler = GaussianSampler::new(model.sigma_v())?;
    let obs_samplers: Vec<GaussianSampler> = obs_models
        .iter()
        .map(|o| GaussianSampler::new(o.sigma_w()))
        .collect::<Result<_>>()?;

    let mut states = Vec::with_capacity(steps);
    let mut process_noises = Vec::with_capacity(steps.saturating_sub(1));
    states.push(x1.clone());
    for n in 0..steps - 1 {
        let mut rng = substream(seed, StreamKind::ProcessNoise, 0, n as u64);
        let v = process_sampler.sample(&mut rng);
        let next = model.a() * &states[n] + &v;
        states.push(next);
        process_noises.push(v);
    }

    let mut observations = Vec::with_capacity(obs_models.len());
    let mut observation_noises = Vec::with_capacity(obs_models.len());
    for (l, (obs, sampler)) in obs_models.iter().zip(&obs_samplers).enumerate() {
        let mut ys = Vec::with_capacity(steps);
        let mut ws = Vec::with_capacity(steps);
        for (n, state) in states.iter().enumerate() {
            let mut rng = substream(seed, StreamKind::ObservationNoise, l as u64, n as u64);
            let w = sampler.sample(&mut rng);
            ys.push(obs.h() * state + &w);
            ws.push(w);
        }
        observations.push(ys);
        observation_noises.push(ws);
    }

    Ok(Trajectory {
        states,
        observations,
        process_noises,
        observation_noises,
    })
}

/// The 2-D constant-velocity tracking model.
///
/// State is `(x-pos, y-pos, x-vel, y-vel)` sampled every `dt` seconds.
/// The 2-D driving noise of intensity `q` enters through the input matrix
/// `B = [[dt²/2,0],[0,dt²/2],[dt,0],[0,dt]]`, folded into the (rank-2)
/// process covariance `Σ_v = B·(q·I₂)·Bᵀ`. Returns the state model plus
/// the horizontal-position and vertical-position observation models, each
/// with scalar noise variance `r` and weighting factor `R = r`.
pub fn make_tracking_model(
    dt: f64,
    q: f64,
    r: f64,
) -> Result<(StateSpaceModel, NodeObservationModel, NodeObservationModel)> {
    if !(dt > 0.0) || !(q > 0.0) || !(r > 0.0) {
        return Err(Error::validation(format!(
            "tracking model requires dt > 0, q > 0, r > 0 (got dt={dt}, q={q}, r={r})"
        )));
    }
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, dt, 0.0, //
            0.0, 1.0, 0.0, dt, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    let b = DMatrix::from_row_slice(
        4,
        2,
        &[
            dt * dt / 2.0,
            0.0,
            0.0,
            dt * dt / 2.0,
            dt,
            0.0,
            0.0,
            dt,
        ],
    );
    let sigma_v = &b * (q * DMatrix::identity(2, 2)) * b.transpose();
    let model = StateSpaceModel::new(a, sigma_v)?;

    let r_mat = DMatrix::from_element(1, 1, r);
    let horizontal = NodeObservationModel::new(
        DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]),
        r_mat.clone(),
        r_mat.clone(),
    )?;
    let vertical = NodeObservationModel::new(
        DMatrix::from_row_slice(1, 4, &[0.0, 1.0, 0.0, 0.0]),
        r_mat.clone(),
        r_mat,
    )?;
    Ok((model, horizontal, vertical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamKind};
    use approx::assert_relative_eq;

    fn paper_models(n_horizontal: usize) -> (StateSpaceModel, Vec<NodeObservationModel>) {
        let (model, h, v) = make_tracking_model(0.04, 0.01, 0.16).unwrap();
        let mut obs = vec![h; n_horizontal];
        obs.push(v);
        (model, obs)
    }

    #[test]
    fn zero_covariance_always_samples_zero() {
        let cov = DMatrix::zeros(3, 3);
        let mut rng = substream(1, StreamKind::Auxiliary, 0, 0);
        for _ in 0..10 {
            let x = sample_gaussian(&cov, &mut rng).unwrap();
            assert_eq!(x, DVector::zeros(3));
        }
    }

    #[test]
    fn non_psd_covariance_is_rejected_with_eigenvalue() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let mut rng = substream(1, StreamKind::Auxiliary, 0, 0);
        let err = sample_gaussian(&cov, &mut rng).unwrap_err();
        assert!(err.to_string().contains("-5.0"), "{err}");
    }

    #[test]
    fn identity_covariance_empirics_match() {
        // 1e5 draws from N(0, I4): sample covariance within 5% of I
        let cov = DMatrix::identity(4, 4);
        let sampler = GaussianSampler::new(&cov).unwrap();
        let n = 100_000;
        let mut acc = DMatrix::zeros(4, 4);
        for step in 0..n {
            let mut rng = substream(11, StreamKind::Auxiliary, 0, step);
            let x = sampler.sample(&mut rng);
            acc += &x * x.transpose();
        }
        acc /= n as f64;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (acc[(i, j)] - want).abs() < 0.05,
                    "entry ({i},{j}) = {}",
                    acc[(i, j)]
                );
            }
        }
    }

    #[test]
    fn small_diagonal_covariance_variances_match() {
        let cov = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.01, 0.01]));
        let sampler = GaussianSampler::new(&cov).unwrap();
        let n = 100_000;
        let mut sum_sq = [0.0f64; 2];
        for step in 0..n {
            let mut rng = substream(12, StreamKind::Auxiliary, 0, step);
            let x = sampler.sample(&mut rng);
            sum_sq[0] += x[0] * x[0];
            sum_sq[1] += x[1] * x[1];
        }
        for s in sum_sq {
            let var = s / n as f64;
            assert!((0.0095..=0.0105).contains(&var), "variance {var}");
        }
    }

    #[test]
    fn noiseless_identity_dynamics_hold_state() {
        let model = StateSpaceModel::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let obs = vec![NodeObservationModel::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap()];
        let c = DVector::from_row_slice(&[2.0, -3.0]);
        let traj = simulate_trajectory_from(&model, &obs, &c, 50, 3).unwrap();
        for s in &traj.states {
            assert_eq!(s, &c);
        }
    }

    #[test]
    fn same_seed_reproduces_trajectory_bitwise() {
        let (model, obs) = paper_models(3);
        let t1 = simulate_trajectory(&model, &obs, 200, 42).unwrap();
        let t2 = simulate_trajectory(&model, &obs, 200, 42).unwrap();
        assert_eq!(t1.states, t2.states);
        assert_eq!(t1.observations, t2.observations);
        assert_eq!(t1.process_noises, t2.process_noises);
        assert_eq!(t1.observation_noises, t2.observation_noises);
    }

    #[test]
    fn noiseless_observations_follow_matrix_powers() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let model = StateSpaceModel::new(a.clone(), DMatrix::zeros(2, 2)).unwrap();
        let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        // zero observation noise is not PD, so use a tiny-free construction:
        // drive the check through the stored-noise invariant instead.
        let obs = vec![NodeObservationModel::new(
            h.clone(),
            DMatrix::from_element(1, 1, 1e-4),
            DMatrix::from_element(1, 1, 1e-4),
        )
        .unwrap()];
        let x1 = DVector::from_row_slice(&[1.0, 2.0]);
        let traj = simulate_trajectory_from(&model, &obs, &x1, 20, 9).unwrap();
        // direct matrix-power oracle on the noise-free part
        let mut power = DMatrix::identity(2, 2);
        for n in 0..20 {
            let expected = &h * (&power * &x1) + &traj.observation_noises[0][n];
            assert_relative_eq!(traj.observations[0][n], expected, epsilon = 1e-12);
            power = &a * power;
        }
    }

    #[test]
    fn replay_reproduces_states_and_observations_exactly() {
        let (model, obs) = paper_models(2);
        let x1 = DVector::from_row_slice(&[1.0, -1.0, 0.5, 0.2]);
        let traj = simulate_trajectory_from(&model, &obs, &x1, 100, 7).unwrap();
        for n in 0..99 {
            let re = model.a() * &traj.states[n] + &traj.process_noises[n];
            assert_eq!(re, traj.states[n + 1]);
        }
        for (l, om) in obs.iter().enumerate() {
            for n in 0..100 {
                let re = om.h() * &traj.states[n] + &traj.observation_noises[l][n];
                assert_eq!(re, traj.observations[l][n]);
            }
        }
    }

    #[test]
    fn dimension_mismatch_names_the_node() {
        let (model, mut obs) = paper_models(2);
        obs[1] = NodeObservationModel::new(
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let err = simulate_trajectory(&model, &obs, 10, 0).unwrap_err();
        assert!(err.to_string().contains("node 1"), "{err}");
    }

    #[test]
    fn tracking_model_matches_hand_computation() {
        let (model, h, v) = make_tracking_model(0.04, 0.01, 0.16).unwrap();
        assert_eq!(model.state_dim(), 4);
        assert_relative_eq!(model.a()[(0, 2)], 0.04);
        // Σ_v = B (q I) Bᵀ, entry (2,2) = q·dt²
        assert_relative_eq!(model.sigma_v()[(2, 2)], 1.6e-5, epsilon = 1e-18);
        assert_relative_eq!(model.sigma_v()[(0, 0)], 0.01 * 0.04f64.powi(4) / 4.0);
        assert_relative_eq!(model.sigma_v()[(0, 2)], 0.01 * 0.04f64.powi(3) / 2.0);
        assert_eq!(h.h().as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(v.h().as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_relative_eq!(h.r()[(0, 0)], 0.16);
        assert!(make_tracking_model(1.0, 0.0, 0.16).is_err());
        assert!(make_tracking_model(0.0, 0.01, 0.16).is_err());
        assert!(make_tracking_model(0.04, 0.01, -1.0).is_err());
    }

    #[test]
    fn sigma_v_sqrt_factors_the_rank_two_covariance() {
        let (model, _, _) = make_tracking_model(0.04, 0.01, 0.16).unwrap();
        let f = model.sigma_v_sqrt().unwrap();
        assert_relative_eq!(&f * f.transpose(), model.sigma_v().clone(), epsilon = 1e-15);
    }

    #[test]
    fn noise_streams_are_uncorrelated_across_nodes_and_kinds() {
        // empirical cross-covariances over 1e5 steps stay within 3 standard errors
        let (model, obs) = paper_models(1);
        let traj = simulate_trajectory(&model, &obs, 100_000, 21).unwrap();
        let n = traj.process_noises.len() as f64;
        let se = |sd_a: f64, sd_b: f64| 3.0 * sd_a * sd_b / n.sqrt();

        let sd_v: Vec<f64> = (0..4).map(|i| model.sigma_v()[(i, i)].sqrt()).collect();
        let sd_w = 0.16f64.sqrt();
        // v vs each node's w (aligned in time)
        for l in 0..2 {
            for i in 0..4 {
                let mut acc = 0.0;
                for (k, v) in traj.process_noises.iter().enumerate() {
                    acc += v[i] * traj.observation_noises[l][k][0];
                }
                let cov = acc / n;
                assert!(
                    cov.abs() <= se(sd_v[i], sd_w).max(1e-12),
                    "v[{i}] vs w[{l}]: {cov}"
                );
            }
        }
        // w_0 vs w_1
        let mut acc = 0.0;
        for k in 0..traj.len() {
            acc += traj.observation_noises[0][k][0] * traj.observation_noises[1][k][0];
        }
        let cov = acc / traj.len() as f64;
        assert!(cov.abs() <= se(sd_w, sd_w), "w0 vs w1: {cov}");
    }

    #[test]
    fn adding_nodes_does_not_perturb_existing_noise_streams() {
        let (model, obs2) = paper_models(1);
        let (_, obs3) = paper_models(2);
        let t2 = simulate_trajectory(&model, &obs2, 50, 5).unwrap();
        let t3 = simulate_trajectory(&model, &obs3, 50, 5).unwrap();
        assert_eq!(t2.process_noises, t3.process_noises);
        assert_eq!(t2.observation_noises[0], t3.observation_noises[0]);
    }
}
