//! Search over the orthogonal freedom `U = U₀ · O` of a cluster unitary.
//!
//! Right-multiplying a cluster unitary by a real orthogonal matrix leaves the
//! graph state unchanged for equal squeezers but redistributes unequal
//! squeezing among the nullifiers. The search runs a seeded (1+λ) evolution
//! strategy over the `n(n−1)/2` entries of an antisymmetric generator `A`,
//! `O = exp(A)`, with success-rule step-size control and restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nullifier::{cluster_unitary, quadratic_rows};
use super::Graph;
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeUnitary};
use crate::resource::SqueezingProfile;

/// A real orthogonal matrix together with its antisymmetric generator.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalFreedom {
    generator: DMatrix<f64>,
    orthogonal: DMatrix<f64>,
}

impl OrthogonalFreedom {
    pub fn identity(n: usize) -> Self {
        Self {
            generator: DMatrix::zeros(n, n),
            orthogonal: DMatrix::identity(n, n),
        }
    }

    /// `O = exp(A)`; `A` must be exactly antisymmetric.
    pub fn from_generator(generator: DMatrix<f64>) -> Result<Self> {
        let n = generator.nrows();
        if generator.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: generator.ncols(),
            });
        }
        for i in 0..n {
            for j in 0..=i {
                if generator[(i, j)] != -generator[(j, i)] {
                    return Err(Error::InvalidConfig(format!(
                        "generator is not antisymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let orthogonal = generator.clone().exp();
        Ok(Self {
            generator,
            orthogonal,
        })
    }

    /// Generator from its strict upper triangle, row-major.
    pub fn from_params(n: usize, params: &[f64]) -> Self {
        debug_assert_eq!(params.len(), n * (n - 1) / 2);
        let mut a = DMatrix::zeros(n, n);
        let mut idx = 0;
        for i in 0..n {
            for j in i + 1..n {
                a[(i, j)] = params[idx];
                a[(j, i)] = -params[idx];
                idx += 1;
            }
        }
        let orthogonal = a.clone().exp();
        Self {
            generator: a,
            orthogonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.orthogonal.nrows()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn orthogonal(&self) -> &DMatrix<f64> {
        &self.orthogonal
    }

    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.dim();
        (&self.orthogonal * self.orthogonal.transpose() - DMatrix::identity(n, n))
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Quantity averaged over the nullifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Mean of the operator variances `Δ²δ_k`.
    #[default]
    MeanVariance,
    /// Mean of `10 log10(Δ²δ_k / reference_k)`.
    MeanRelativeDb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsConfig {
    pub seed: u64,
    /// Offspring per generation.
    pub lambda: usize,
    /// Total objective evaluations, shared evenly by the restarts.
    pub max_evals: usize,
    /// Number of runs; the first starts at `O = I`, later ones restart the
    /// step size at the best point found so far.
    pub restarts: usize,
    pub sigma0: f64,
    pub min_sigma: f64,
    pub objective: Objective,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            lambda: 16,
            max_evals: 60_000,
            restarts: 3,
            sigma0: 0.3,
            min_sigma: 1e-9,
            objective: Objective::MeanVariance,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 1 {
            return Err(Error::InvalidConfig("lambda must be at least 1".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_evals < self.restarts * self.lambda {
            return Err(Error::InvalidConfig(format!(
                "max_evals ({}) cannot cover one generation per restart",
                self.max_evals
            )));
        }
        if !(self.sigma0 > 0.0) || !(self.min_sigma > 0.0) || self.min_sigma >= self.sigma0 {
            return Err(Error::InvalidConfig("need 0 < min_sigma < sigma0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub freedom: OrthogonalFreedom,
    pub objective: f64,
    /// Objective at `O = I`.
    pub baseline: f64,
    /// Best objective after every generation, across all restarts.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Evaluates the nullifier objective of `cluster_unitary(g) · O`.
#[derive(Debug, Clone)]
pub struct ClusterObjective {
    anti: DMatrix<f64>,
    squeezed: DMatrix<f64>,
    v_sqz: DMatrix<f64>,
    references: Vec<f64>,
    kind: Objective,
}

impl ClusterObjective {
    pub fn new(g: &Graph, v_sqz: &CovarianceMatrix, kind: Objective) -> Result<Self> {
        if v_sqz.dim() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                found: v_sqz.dim(),
            });
        }
        let u0 = cluster_unitary(g);
        let (x, y) = (u0.re(), u0.im());
        let v = g.adjacency();
        Ok(Self {
            anti: &y - v * &x,
            squeezed: &x + v * &y,
            v_sqz: v_sqz.as_matrix().clone(),
            references: g.vacuum_references(),
            kind,
        })
    }

    /// Operator variances of the nullifiers for the orthogonal factor `o`.
    pub fn variances(&self, o: &DMatrix<f64>) -> Vec<f64> {
        quadratic_rows(&(&self.anti * o), &(&self.squeezed * o), &self.v_sqz)
    }

    pub fn evaluate(&self, o: &DMatrix<f64>) -> f64 {
        let vars = self.variances(o);
        let n = vars.len() as f64;
        match self.kind {
            Objective::MeanVariance => vars.iter().sum::<f64>() / n,
            Objective::MeanRelativeDb => {
                vars.iter()
                    .zip(&self.references)
                    .map(|(v, r)| 10.0 * (v / r).log10())
                    .sum::<f64>()
                    / n
            }
        }
    }
}

/// Optimizes against pure squeezers from `profile` (sorted, most squeezed first).
pub fn optimize_orthogonal(
    g: &Graph,
    profile: &SqueezingProfile,
    cfg: &EsConfig,
) -> Result<OptimizationResult> {
    optimize_orthogonal_cov(g, &profile.covariance(g.n())?, cfg)
}

/// Optimizes against an arbitrary squeezer-basis covariance.
pub fn optimize_orthogonal_cov(
    g: &Graph,
    v_sqz: &CovarianceMatrix,
    cfg: &EsConfig,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "orthogonal optimization needs at least two nodes".into(),
        ));
    }
    let objective = ClusterObjective::new(g, v_sqz, cfg.objective)?;
    let dim = n * (n - 1) / 2;
    let eval =
        |params: &[f64]| objective.evaluate(OrthogonalFreedom::from_params(n, params).orthogonal());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let baseline = objective.evaluate(&DMatrix::identity(n, n));
    let mut best_params = vec![0.0; dim];
    let mut best_value = baseline;
    let mut history = Vec::new();
    let mut evaluations = 1;
    let budget = cfg.max_evals / cfg.restarts;

    for _ in 0..cfg.restarts {
        let mut parent = best_params.clone();
        let mut parent_value = best_value;
        let mut used = 0;
        let mut sigma = cfg.sigma0;

        while used + cfg.lambda <= budget && sigma > cfg.min_sigma {
            let offspring: Vec<Vec<f64>> = (0..cfg.lambda)
                .map(|_| {
                    parent
                        .iter()
                        .map(|p| p + sigma * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect();
            let values: Vec<f64> = offspring.par_iter().map(|p| eval(p)).collect();
            used += cfg.lambda;
            evaluations += cfg.lambda;

            let mut best = 0;
            for i in 1..values.len() {
                if values[i] < values[best] {
                    best = i;
                }
            }
            let successes = values.iter().filter(|&&v| v < parent_value).count();
            if values[best] < parent_value {
                parent_value = values[best];
                parent = offspring[best].clone();
            }
            let rate = successes as f64 / cfg.lambda as f64;
            sigma *= ((rate - 0.2) / 0.8).exp();

            if parent_value < best_value {
                best_value = parent_value;
                best_params = parent.clone();
            }
            history.push(best_value);
        }
    }

    Ok(OptimizationResult {
        freedom: OrthogonalFreedom::from_params(n, &best_params),
        objective: best_value,
        baseline,
        history,
        evaluations,
    })
}

impl OptimizationResult {
    /// `cluster_unitary(g) · O`.
    pub fn unitary(&self, g: &Graph) -> Result<ModeUnitary> {
        cluster_unitary(g).compose_real(self.freedom.orthogonal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{builtin_graph, cluster_condition_residual};
    use approx::assert_abs_diff_eq;

    fn quick() -> EsConfig {
        EsConfig {
            max_evals: 12_000,
            ..EsConfig::default()
        }
    }

    #[test]
    fn generator_must_be_antisymmetric() {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 0.4;
        assert!(OrthogonalFreedom::from_generator(a.clone()).is_err());
        a[(1, 0)] = -0.4;
        let f = OrthogonalFreedom::from_generator(a).unwrap();
        assert!(f.orthogonality_residual() < 1e-14);
    }

    #[test]
    fn config_validation() {
        for cfg in [
            EsConfig {
                lambda: 0,
                ..EsConfig::default()
            },
            EsConfig {
                restarts: 0,
                ..EsConfig::default()
            },
            EsConfig {
                max_evals: 10,
                ..EsConfig::default()
            },
            EsConfig {
                sigma0: -1.0,
                ..EsConfig::default()
            },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        }
        let g = Graph::new(DMatrix::zeros(1, 1)).unwrap();
        assert!(optimize_orthogonal(&g, &SqueezingProfile::vacuum(1), &quick()).is_err());
    }

    #[test]
    fn never_worse_than_identity() {
        let g = builtin_graph("linear", 6).unwrap();
        let profile = SqueezingProfile::from_db(&[-1.0, -2.0, -6.0, -0.5, -3.0, -4.0]).unwrap();
        let r = optimize_orthogonal(&g, &profile, &quick()).unwrap();
        assert!(r.objective <= r.baseline);
        assert!(r.objective < r.baseline - 1e-3);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn optimized_unitary_stays_in_cluster_family() {
        let g = builtin_graph("star", 5).unwrap();
        let profile = SqueezingProfile::from_db(&[-5.0, -4.0, -3.0, -2.0, -1.0]).unwrap();
        let r = optimize_orthogonal(&g, &profile, &quick()).unwrap();
        let u = r.unitary(&g).unwrap();
        assert!(cluster_condition_residual(&g, &u) < 1e-10);
        assert!(r.freedom.orthogonality_residual() < 1e-10);
    }

    #[test]
    fn deterministic_for_seed() {
        let g = builtin_graph("linear", 4).unwrap();
        let profile = SqueezingProfile::from_db(&[-5.0, -4.0, -3.0, -2.0]).unwrap();
        let a = optimize_orthogonal(&g, &profile, &quick()).unwrap();
        let b = optimize_orthogonal(&g, &profile, &quick()).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.freedom, b.freedom);
    }

    #[test]
    fn uniform_squeezing_is_rotation_invariant() {
        let g = builtin_graph("diagonal_square", 6).unwrap();
        let profile = SqueezingProfile::uniform(6, 0.3).unwrap();
        let r = optimize_orthogonal(&g, &profile, &quick()).unwrap();
        assert_abs_diff_eq!(r.objective, r.baseline, epsilon = 1e-9);
    }
}
