use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Graph;
use crate::error::{Error, Result};
use crate::gaussian::{variance_to_db, CovarianceMatrix, ModeUnitary, C64};
use crate::resource::SqueezingProfile;

/// Coefficients of the nullifiers `δ = p^C − V x^C` on the squeezer
/// quadratures: `δ = Mx · x^sqz + Mp · p^sqz`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullifierSet {
    pub mx: DMatrix<f64>,
    pub mp: DMatrix<f64>,
}

/// Nullifier variances next to their vacuum references.
#[derive(Debug, Clone, PartialEq)]
pub struct NullifierVariances {
    /// Variance of the literal operator `δ_k`.
    pub variances: Vec<f64>,
    /// `1 + Σ_j V_kj²`, the same operator on vacuum.
    pub vacuum_references: Vec<f64>,
}

impl NullifierVariances {
    /// `variance / reference`: the normalized-LO variance, 1 at shot noise.
    pub fn relative(&self) -> Vec<f64> {
        self.variances
            .iter()
            .zip(&self.vacuum_references)
            .map(|(v, r)| v / r)
            .collect()
    }

    pub fn relative_db(&self) -> Vec<f64> {
        self.relative()
            .into_iter()
            .map(|r| variance_to_db(r).expect("nullifier variances are positive"))
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.variances.iter().sum::<f64>() / self.variances.len() as f64
    }

    pub fn mean_relative_db(&self) -> f64 {
        let db = self.relative_db();
        db.iter().sum::<f64>() / db.len() as f64
    }
}

/// `(I + iV)(I + V²)^{-1/2}`, a unitary whose rows satisfy `Y = V X`.
pub fn cluster_unitary(g: &Graph) -> ModeUnitary {
    let n = g.n();
    let v = g.adjacency();
    let a = DMatrix::identity(n, n) + v * v;
    let eig = SymmetricEigen::new(a);
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let x = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let x = (&x + x.transpose()) * 0.5;
    let y = v * &x;
    let m = x.zip_map(&y, C64::new);
    let u = ModeUnitary::from_trusted(m);
    debug_assert!(u.unitarity_residual() < 1e-10);
    debug_assert!(cluster_condition_residual(g, &u) < 1e-10);
    u
}

/// Max-entry size of `Y − V X`; zero exactly when `U` generates the cluster of `g`.
pub fn cluster_condition_residual(g: &Graph, u: &ModeUnitary) -> f64 {
    let r = u.im() - g.adjacency() * u.re();
    r.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `Mx = Y − V X`, `Mp = X + V Y` for `U = X + iY`.
pub fn nullifier_matrix(g: &Graph, u: &ModeUnitary) -> Result<NullifierSet> {
    if g.n() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: u.dim(),
        });
    }
    let x = u.re();
    let y = u.im();
    let v = g.adjacency();
    Ok(NullifierSet {
        mx: &y - v * &x,
        mp: &x + v * &y,
    })
}

/// Nullifier variances against pure, uncorrelated squeezers taken from
/// `profile` in sorted order (most squeezed first):
/// `Δ²δ_k = Σ_j Mx_kj² / s_j + Σ_j Mp_kj² s_j`.
pub fn nullifier_variances(
    g: &Graph,
    u: &ModeUnitary,
    profile: &SqueezingProfile,
) -> Result<NullifierVariances> {
    let set = nullifier_matrix(g, u)?;
    let s = profile.leading(g.n())?;
    let variances = (0..g.n())
        .map(|k| {
            (0..g.n())
                .map(|j| set.mx[(k, j)].powi(2) / s[j] + set.mp[(k, j)].powi(2) * s[j])
                .sum()
        })
        .collect();
    Ok(NullifierVariances {
        variances,
        vacuum_references: g.vacuum_references(),
    })
}

/// Nullifier variances for an arbitrary squeezer-basis covariance, using the
/// full quadratic form `(Mx_k, Mp_k) V (Mx_k, Mp_k)ᵀ`.
pub fn nullifier_variances_cov(
    g: &Graph,
    u: &ModeUnitary,
    v_sqz: &CovarianceMatrix,
) -> Result<NullifierVariances> {
    if v_sqz.dim() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: v_sqz.dim(),
        });
    }
    let set = nullifier_matrix(g, u)?;
    Ok(NullifierVariances {
        variances: quadratic_rows(&set.mx, &set.mp, v_sqz.as_matrix()),
        vacuum_references: g.vacuum_references(),
    })
}

/// Diagonal of `W V Wᵀ` with `W = [mx | mp]`.
pub(crate) fn quadratic_rows(mx: &DMatrix<f64>, mp: &DMatrix<f64>, v: &DMatrix<f64>) -> Vec<f64> {
    let n = mx.nrows();
    let mut w = DMatrix::zeros(n, 2 * n);
    w.view_mut((0, 0), (n, n)).copy_from(mx);
    w.view_mut((0, n), (n, n)).copy_from(mp);
    let wv = &w * v;
    (0..n)
        .map(|k| {
            let row: DVector<f64> = w.row(k).transpose();
            wv.row(k).transpose().dot(&row)
        })
        .collect()
}
