//! The multimode squeezed resource: independent p-squeezers plus the unitary
//! relating them to the frequency-pixel measurement basis.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gaussian::{
    apply_loss, apply_symplectic, db_to_variance, fix_sign, unitary_to_symplectic, variance_to_db,
    CovarianceMatrix, ModeUnitary,
};

/// Squeezing of the leading mode of the shipped profile, in dB.
pub const SHIPPED_LEADING_DB: f64 = -6.6;
/// Total detection loss (including fringe visibility) of the measurement chain.
pub const DETECTION_LOSS: f64 = 0.15;

const SHIPPED_PROFILE_JSON: &str = include_str!("../data/shipped_profile.json");

/// p-quadrature variances of independent pure squeezers (vacuum = 1). The
/// conjugate x-variance of each entry is its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingProfile {
    variances: Vec<f64>,
}

impl SqueezingProfile {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::InvalidProfile("empty profile".into()));
        }
        for &v in &variances {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveVariance(v));
            }
            if v > 1.0 + 1e-9 {
                return Err(Error::InvalidProfile(format!(
                    "variance {v} is above the vacuum level"
                )));
            }
        }
        Ok(Self {
            variances: variances.into_iter().map(|v| v.min(1.0)).collect(),
        })
    }

    pub fn from_db(db: &[f64]) -> Result<Self> {
        if let Some(&bad) = db.iter().find(|d| **d > 0.0 || !d.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "squeezing must be non-positive in dB, got {bad}"
            )));
        }
        Self::new(db.iter().map(|&d| db_to_variance(d)).collect())
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            variances: vec![1.0; n],
        }
    }

    pub fn uniform(n: usize, variance: f64) -> Result<Self> {
        Self::new(vec![variance; n])
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn db_values(&self) -> Vec<f64> {
        self.variances
            .iter()
            .map(|&v| variance_to_db(v).expect("profile variances are positive"))
            .collect()
    }

    /// Most squeezed first.
    pub fn sorted(&self) -> Self {
        let mut variances = self.variances.clone();
        variances.sort_by(f64::total_cmp);
        Self { variances }
    }

    /// The `n` most squeezed variances, most squeezed first.
    pub fn leading(&self, n: usize) -> Result<Vec<f64>> {
        if n > self.len() {
            return Err(Error::InvalidProfile(format!(
                "{n} squeezers requested but the profile has only {}",
                self.len()
            )));
        }
        Ok(self.sorted().variances[..n].to_vec())
    }

    pub fn squeezed_count(&self) -> usize {
        self.variances.iter().filter(|&&v| v < 1.0 - 1e-9).count()
    }

    /// Leading (smallest) variance expressed in dB.
    pub fn leading_db(&self) -> f64 {
        let min = self.variances.iter().copied().fold(f64::INFINITY, f64::min);
        variance_to_db(min).expect("profile variances are positive")
    }

    /// Multiplies every dB value by a common factor so that the most squeezed
    /// mode sits at `leading_db`; the shape of the distribution is preserved.
    pub fn scaled_to_leading_db(&self, leading_db: f64) -> Result<Self> {
        if leading_db > 0.0 || !leading_db.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "leading squeezing must be non-positive in dB, got {leading_db}"
            )));
        }
        let current = self.leading_db();
        if current == 0.0 {
            if leading_db == 0.0 {
                return Ok(self.clone());
            }
            return Err(Error::InvalidProfile(
                "cannot rescale an all-vacuum profile".into(),
            ));
        }
        let factor = leading_db / current;
        let db: Vec<f64> = self.db_values().iter().map(|d| d * factor).collect();
        Self::new(db.iter().map(|&d| db_to_variance(d)).collect())
    }

    /// Squeezer-basis covariance `diag(1/s, s)` of the first `n` entries in
    /// sorted order.
    pub fn covariance(&self, n: usize) -> Result<CovarianceMatrix> {
        let p = self.leading(n)?;
        let x: Vec<f64> = p.iter().map(|v| 1.0 / v).collect();
        CovarianceMatrix::from_diagonal(&x, &p)
    }

    /// As [`covariance`](Self::covariance), followed by a uniform loss `eta`.
    pub fn covariance_with_loss(&self, n: usize, eta: f64) -> Result<CovarianceMatrix> {
        apply_loss(&self.covariance(n)?, &vec![eta; n])
    }
}

#[derive(Deserialize)]
struct ProfileFile {
    leading_db: f64,
    profile_db: Vec<f64>,
}

/// The shipped 16-mode profile rescaled so its leading mode is at `leading_db`.
pub fn paper_profile(leading_db: f64) -> Result<SqueezingProfile> {
    if leading_db > 0.0 || !leading_db.is_finite() {
        return Err(Error::InvalidProfile(format!(
            "leading squeezing must be non-positive in dB, got {leading_db}"
        )));
    }
    let file: ProfileFile = serde_json::from_str(SHIPPED_PROFILE_JSON)?;
    let factor = leading_db / file.leading_db;
    let db: Vec<f64> = file.profile_db.iter().map(|d| d * factor).collect();
    SqueezingProfile::from_db(&db)
}

/// Deterministic stand-in for a measured squeezer-to-pixel unitary.
///
/// Row `k` is the pixel-basis envelope of squeezer `k`: the `k`-th
/// harmonic-oscillator eigenfunction sampled on `n` points, orthonormalized
/// in order (Gram–Schmidt) with its largest-magnitude component positive.
/// The matrix is real, so every squeezer stays squeezed along p in the pixel
/// basis.
pub fn default_usqz(n: usize) -> ModeUnitary {
    assert!(n >= 1, "mode count must be positive");
    let h = (2.0 * std::f64::consts::PI / n as f64).sqrt();
    let grid: Vec<f64> = (0..n)
        .map(|j| (j as f64 - (n as f64 - 1.0) / 2.0) * h)
        .collect();

    let mut funcs: Vec<DVector<f64>> = Vec::with_capacity(n);
    let norm0 = std::f64::consts::PI.powf(-0.25);
    let mut prev = DVector::from_iterator(n, grid.iter().map(|t| norm0 * (-t * t / 2.0).exp()));
    let mut prev2 = DVector::zeros(n);
    for k in 0..n {
        funcs.push(prev.clone());
        // ψ_{k+1} = √(2/(k+1)) t ψ_k − √(k/(k+1)) ψ_{k−1}
        let kf = k as f64;
        let next = DVector::from_iterator(
            n,
            (0..n).map(|j| {
                (2.0 / (kf + 1.0)).sqrt() * grid[j] * prev[j] - (kf / (kf + 1.0)).sqrt() * prev2[j]
            }),
        );
        prev2 = std::mem::replace(&mut prev, next);
    }

    let mut envelopes: Vec<DVector<f64>> = Vec::with_capacity(n);
    for f in funcs {
        let mut v = f;
        for _ in 0..2 {
            for e in &envelopes {
                let c = e.dot(&v);
                v -= e * c;
            }
        }
        let norm = v.norm();
        let mut v = v / norm;
        fix_sign(&mut v);
        envelopes.push(v);
    }
    let rows: Vec<_> = envelopes.iter().map(|e| e.transpose()).collect();
    ModeUnitary::from_real(&DMatrix::from_rows(&rows))
        .expect("orthonormalized envelopes form a unitary")
}

/// Everything needed to produce the pixel-basis covariance matrix.
#[derive(Debug, Clone)]
pub struct ResourceSpec {
    pub profile: SqueezingProfile,
    /// `a^sqz = u_sqz · a^pix`.
    pub u_sqz: ModeUnitary,
    /// Per-pixel loss fractions.
    pub loss: Vec<f64>,
    /// Additive variance floor on every quadrature.
    pub dark_noise: f64,
}

impl ResourceSpec {
    pub fn new(
        profile: SqueezingProfile,
        u_sqz: ModeUnitary,
        loss: Vec<f64>,
        dark_noise: f64,
    ) -> Result<Self> {
        let n = profile.len();
        if u_sqz.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u_sqz.dim(),
            });
        }
        if loss.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: loss.len(),
            });
        }
        if let Some(&bad) = loss.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidLoss(bad));
        }
        if !(dark_noise >= 0.0) || !dark_noise.is_finite() {
            return Err(Error::Parse(format!(
                "dark noise must be non-negative, got {dark_noise}"
            )));
        }
        Ok(Self {
            profile,
            u_sqz,
            loss,
            dark_noise,
        })
    }

    /// Shipped profile, synthetic envelopes, no loss, no dark noise.
    pub fn standard() -> Self {
        let profile = paper_profile(SHIPPED_LEADING_DB).expect("shipped profile is valid");
        let n = profile.len();
        Self {
            profile,
            u_sqz: default_usqz(n),
            loss: vec![0.0; n],
            dark_noise: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.profile.len()
    }
}

/// `V_pix = S(u_sqz†) diag(1/s, s) S(u_sqz†)ᵀ`, then loss, then dark noise.
pub fn build_pixel_covariance(spec: &ResourceSpec) -> Result<CovarianceMatrix> {
    let n = spec.dim();
    let s = spec.profile.variances();
    let x: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
    let v_sqz = CovarianceMatrix::from_diagonal(&x, s)?;
    let to_pixels = unitary_to_symplectic(&spec.u_sqz.adjoint());
    let v_pix = apply_symplectic(&to_pixels, &v_sqz)?;
    let lossy = apply_loss(&v_pix, &spec.loss)?;
    if spec.dark_noise == 0.0 {
        return Ok(lossy);
    }
    let noisy = lossy.into_matrix() + DMatrix::identity(2 * n, 2 * n) * spec.dark_noise;
    CovarianceMatrix::new(noisy)
}
