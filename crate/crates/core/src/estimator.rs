//! Per-group sequential ridge regression with self-normalized confidence
//! radii and optimistic skill indices.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::{dot, norm, Scalar};

/// Updates between full Cholesky refreshes of the maintained inverse.
pub const REFRESH_INTERVAL: u32 = 256;

/// Ridge state of one group: `V̄ = X'X + λI`, `b = X'Y`, `θ̂ = V̄⁻¹ b`.
#[derive(Debug, Clone)]
pub struct GroupPosterior<T> {
    lambda: T,
    gram: Matrix<T>,
    gram_inv: Matrix<T>,
    moment: Vec<T>,
    theta_hat: Vec<T>,
    log_det: T,
    n_obs: u64,
    max_x_norm: T,
    since_refresh: u32,
}

impl<T: Scalar> GroupPosterior<T> {
    pub fn new(d: usize, lambda: T) -> Result<Self, ConfigError> {
        if d == 0 {
            return Err(ConfigError::invalid("d", "dimension must be at least 1"));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(ConfigError::invalid("lambda_reg", "lambda_reg must be positive"));
        }
        Ok(Self {
            lambda,
            gram: Matrix::scaled_identity(d, lambda),
            gram_inv: Matrix::scaled_identity(d, lambda.recip()),
            moment: vec![T::zero(); d],
            theta_hat: vec![T::zero(); d],
            log_det: T::from_usize(d).unwrap() * lambda.ln(),
            n_obs: 0,
            max_x_norm: T::zero(),
            since_refresh: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn gram(&self) -> &Matrix<T> {
        &self.gram
    }

    pub fn moment(&self) -> &[T] {
        &self.moment
    }

    pub fn theta_hat(&self) -> &[T] {
        &self.theta_hat
    }

    pub fn n_obs(&self) -> u64 {
        self.n_obs
    }

    pub fn max_x_norm(&self) -> T {
        self.max_x_norm
    }

    pub fn log_det(&self) -> T {
        self.log_det
    }

    /// Adds one observation `(x, y)`.
    ///
    /// The inverse and log-determinant are carried by rank-one identities and
    /// rebuilt from a Cholesky factorization every [`REFRESH_INTERVAL`] updates.
    pub fn update(&mut self, x: &[T], y: T) {
        assert_eq!(x.len(), self.dim(), "context dimension mismatch");
        let u = self.gram_inv.mul_vec(x);
        let denom = T::one() + dot(x, &u);
        self.gram_inv.rank_one_update(-denom.recip(), &u);
        self.log_det += denom.ln();
        self.gram.rank_one_update(T::one(), x);
        for (m, &xi) in self.moment.iter_mut().zip(x) {
            *m += y * xi;
        }
        self.n_obs += 1;
        self.max_x_norm = self.max_x_norm.max(norm(x));
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh();
        } else {
            self.theta_hat = self.gram_inv.mul_vec(&self.moment);
        }
    }

    fn refresh(&mut self) {
        self.since_refresh = 0;
        if let Some(ch) = Cholesky::factor(&self.gram) {
            self.gram_inv = ch.inverse();
            self.log_det = ch.log_det();
            self.theta_hat = ch.solve(&self.moment);
        } else {
            self.theta_hat = self.gram_inv.mul_vec(&self.moment);
        }
    }

    /// Estimated skill `x' θ̂`.
    pub fn predict(&self, x: &[T]) -> T {
        dot(x, &self.theta_hat)
    }

    /// `||x||_{V̄⁻¹}`.
    pub fn inverse_norm(&self, x: &[T]) -> T {
        self.gram_inv.quad_form(x).max(T::zero()).sqrt()
    }

    /// `||v||_{V̄}`.
    pub fn gram_norm(&self, v: &[T]) -> T {
        self.gram.quad_form(v).max(T::zero()).sqrt()
    }

    /// `||θ̂ − θ||_{V̄}`, the quantity the confidence radius bounds.
    pub fn self_normalized_error(&self, theta: &[T]) -> T {
        let diff: Vec<T> = self.theta_hat.iter().zip(theta).map(|(&a, &b)| a - b).collect();
        self.gram_norm(&diff)
    }

    pub fn conf_radius(&self, params: &RadiusParams<T>) -> T {
        params.radius(self)
    }

    /// Width of the confidence interval on `x' θ` for a precomputed radius.
    pub fn width(&self, x: &[T], radius: T) -> T {
        radius * self.inverse_norm(x)
    }

    /// Maximum of `x' θ̄` over the confidence ellipsoid.
    pub fn ucb_index(&self, x: &[T], params: &RadiusParams<T>) -> T {
        self.predict(x) + self.width(x, self.conf_radius(params))
    }

    pub fn min_eigenvalue(&self) -> T {
        self.gram.symmetric_eigenvalues()[0]
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }
}

/// Which confidence-radius formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RadiusVariant {
    /// `σ √(d log(det(V̄)^{1/2} det(λI)^{-1/2} / δ)) + √λ S`.
    #[default]
    DetBased,
    /// Same with `2d` inside the root.
    DetBasedTwoD,
    /// `σ √(d log((1 + n L²/λ)/δ)) + √λ S`, L the largest observed `||x||`.
    LBased,
    /// `σ √(d + ℓ + 2√(d ℓ))` with `ℓ = log(π² N² / (6δ))`.
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusParams<T> {
    pub sigma_eps: T,
    pub lambda_reg: T,
    pub delta: T,
    pub s_bound: T,
    /// Horizon N; only the Bayesian radius reads it.
    pub horizon: usize,
    pub variant: RadiusVariant,
}

impl<T: Scalar> RadiusParams<T> {
    pub fn from_config(c: &crate::model::MarketConfig) -> Self {
        Self {
            sigma_eps: T::of(c.sigma_eps),
            lambda_reg: T::of(c.lambda_reg),
            delta: T::of(c.delta),
            s_bound: T::of(c.s_bound),
            horizon: c.horizon,
            variant: c.radius_variant,
        }
    }

    pub fn radius<P: Into<RadiusInputs<T>>>(&self, p: P) -> T {
        let p = p.into();
        let d = T::from_usize(p.dim).unwrap();
        let half = T::of(0.5);
        let log_inv_delta = -self.delta.ln();
        let bias = self.lambda_reg.sqrt() * self.s_bound;
        match self.variant {
            RadiusVariant::DetBased | RadiusVariant::DetBasedTwoD => {
                let factor = if self.variant == RadiusVariant::DetBased { d } else { d * T::of(2.0) };
                let log_ratio = half * p.log_det - half * d * self.lambda_reg.ln() + log_inv_delta;
                self.sigma_eps * (factor * log_ratio).max(T::zero()).sqrt() + bias
            }
            RadiusVariant::LBased => {
                let n = T::from_u64(p.n_obs).unwrap();
                let inner = (T::one() + n * p.max_x_norm * p.max_x_norm / self.lambda_reg).ln() + log_inv_delta;
                self.sigma_eps * (d * inner).max(T::zero()).sqrt() + bias
            }
            RadiusVariant::Bayes => {
                let n = T::from_usize(self.horizon).unwrap();
                let pi = T::PI();
                let ell = (pi * pi * n * n / (T::of(6.0) * self.delta)).ln();
                self.sigma_eps * (d + ell + T::of(2.0) * (d * ell).sqrt()).sqrt()
            }
        }
    }
}

/// The parts of a posterior a radius formula reads.
#[derive(Debug, Clone, Copy)]
pub struct RadiusInputs<T> {
    pub dim: usize,
    pub log_det: T,
    pub n_obs: u64,
    pub max_x_norm: T,
}

impl<T: Scalar> From<&GroupPosterior<T>> for RadiusInputs<T> {
    fn from(p: &GroupPosterior<T>) -> Self {
        Self { dim: p.dim(), log_det: p.log_det, n_obs: p.n_obs, max_x_norm: p.max_x_norm }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(variant: RadiusVariant) -> RadiusParams<f64> {
        RadiusParams { sigma_eps: 1.0, lambda_reg: 1.0, delta: 0.1, s_bound: 1.0, horizon: 1000, variant }
    }

    #[test]
    fn init_state() {
        let p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        assert_eq!(p.gram().as_slice(), &[1.0]);
        assert_eq!(p.theta_hat(), &[0.0]);
        assert_eq!(p.n_obs(), 0);
        assert_eq!(p.predict(&[5.0]), 0.0);
        let p = GroupPosterior::<f64>::new(3, 2.0).unwrap();
        assert!((p.min_eigenvalue() - 2.0).abs() < 1e-15);
        assert!(GroupPosterior::<f64>::new(1, 0.0).is_err());
        assert!(GroupPosterior::<f64>::new(1, -1.0).is_err());
    }

    #[test]
    fn scalar_ridge_updates() {
        let mut p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        p.update(&[1.0], 2.0);
        assert_eq!(p.gram().as_slice(), &[2.0]);
        assert_eq!(p.moment(), &[2.0]);
        assert!((p.theta_hat()[0] - 1.0).abs() < 1e-15);

        let mut p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        p.update(&[1.0], 1.0);
        p.update(&[1.0], 3.0);
        assert!((p.theta_hat()[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((p.min_eigenvalue() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_context_is_a_no_op_on_the_estimate() {
        let mut p = GroupPosterior::<f64>::new(2, 1.0).unwrap();
        p.update(&[1.0, 2.0], 1.5);
        let before = p.theta_hat().to_vec();
        p.update(&[0.0, 0.0], 10.0);
        assert_eq!(p.theta_hat(), &before[..]);
        assert_eq!(p.n_obs(), 2);
    }

    #[test]
    fn predict_is_a_dot_product() {
        let mut p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        // θ̂ = 1.5 after (x=1, y=3)
        p.update(&[1.0], 3.0);
        assert!((p.predict(&[2.0]) - 3.0).abs() < 1e-15);
        let mut q = GroupPosterior::<f64>::new(2, 1.0).unwrap();
        q.theta_hat = vec![1.0, -1.0];
        assert_eq!(q.predict(&[3.0, 3.0]), 0.0);
    }

    #[test]
    fn det_based_radius_on_fresh_posterior() {
        let p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        let r = p.conf_radius(&params(RadiusVariant::DetBased));
        // √(log 10) + 1
        assert!((r - 2.517_427_129_385_146_7).abs() < 1e-12);
    }

    #[test]
    fn smaller_delta_widens_radius() {
        let p = GroupPosterior::<f64>::new(2, 1.0).unwrap();
        for variant in [RadiusVariant::DetBased, RadiusVariant::DetBasedTwoD, RadiusVariant::LBased, RadiusVariant::Bayes] {
            let mut a = params(variant);
            let r1 = p.conf_radius(&a);
            a.delta = 0.01;
            assert!(p.conf_radius(&a) > r1, "{variant:?}");
        }
    }

    #[test]
    fn bayes_radius_matches_formula() {
        let p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        let r = p.conf_radius(&params(RadiusVariant::Bayes));
        let ell = (std::f64::consts::PI.powi(2) * 1e6 / 0.6).ln();
        let want = (1.0 + ell + 2.0 * ell.sqrt()).sqrt();
        assert!((r - want).abs() < 1e-12);
    }

    #[test]
    fn l_based_radius_uses_running_norm() {
        let mut p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        p.update(&[2.0], 0.0);
        p.update(&[-3.0], 0.0);
        let r = p.conf_radius(&params(RadiusVariant::LBased));
        let want = ((1.0f64 + 2.0 * 9.0) / 0.1).ln().sqrt() + 1.0;
        assert!((r - want).abs() < 1e-12);
    }

    #[test]
    fn ucb_index_on_fresh_posterior_is_the_radius() {
        let p = GroupPosterior::<f64>::new(1, 1.0).unwrap();
        let prm = params(RadiusVariant::DetBased);
        let beta = p.conf_radius(&prm);
        assert!((p.ucb_index(&[1.0], &prm) - beta).abs() < 1e-15);
        assert_eq!(p.ucb_index(&[0.0], &prm), 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let mut p = GroupPosterior::<f32>::new(1, 1.0).unwrap();
        p.update(&[1.0], 1.0);
        p.update(&[1.0], 3.0);
        assert!((p.theta_hat()[0] - 4.0 / 3.0).abs() < 1e-6);
        let prm = RadiusParams::<f32> { sigma_eps: 1.0, lambda_reg: 1.0, delta: 0.1, s_bound: 1.0, horizon: 10, variant: RadiusVariant::DetBased };
        assert!(p.ucb_index(&[1.0], &prm) > p.predict(&[1.0]));
    }
}
