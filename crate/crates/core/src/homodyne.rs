//! Shaped-local-oscillator homodyne detection on a pixel-basis state.
//!
//! An LO with pixel amplitudes `c` and global phase `θ` measures the
//! quadrature `uᵀ r` with `u = (Re c̃, Im c̃)`, `c̃ = c e^{iθ}`. For the LO
//! `conj(row k of U)` this is `cos θ · x_k + sin θ · p_k` of the mode
//! `b_k = Σ_j U_kj a_j`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::cluster::Graph;
use crate::error::{Error, Result};
use crate::gaussian::{quadrature_variance, CovarianceMatrix, ModeUnitary, C64};

/// Default number of phase samples over `[0, π]`.
pub const DEFAULT_SWEEP_POINTS: usize = 201;

const NORM_TOL: f64 = 1e-12;

/// A normalized LO mode with a global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct LoShape {
    c: Vec<C64>,
    theta: f64,
    /// Squared norm of the combination before normalization.
    scale: f64,
}

impl LoShape {
    /// Normalizes `c`, remembering its squared norm for operator-scaled variances.
    pub fn new(c: Vec<C64>, theta: f64) -> Result<Self> {
        let scale: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::UnnormalizedLo(scale));
        }
        let norm = scale.sqrt();
        Ok(Self {
            c: c.into_iter().map(|z| z / norm).collect(),
            theta,
            scale,
        })
    }

    /// Accepts an already normalized mode vector as is.
    pub fn from_normalized(c: Vec<C64>, theta: f64) -> Result<Self> {
        let norm_sq: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::UnnormalizedLo(norm_sq));
        }
        Ok(Self {
            c,
            theta,
            scale: 1.0,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.c
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self {
            theta,
            ..self.clone()
        }
    }

    /// Real `2n` quadrature weights `(Re c̃, Im c̃)`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let phase = C64::from_polar(1.0, self.theta);
        let rotated: Vec<C64> = self.c.iter().map(|z| z * phase).collect();
        rotated
            .iter()
            .map(|z| z.re)
            .chain(rotated.iter().map(|z| z.im))
            .collect()
    }
}

/// LO measuring network mode `k` of `u_lo`; `θ = 0` gives its x-quadrature.
pub fn lo_from_network_row(u_lo: &ModeUnitary, k: usize, theta: f64) -> Result<LoShape> {
    if k >= u_lo.dim() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: u_lo.dim(),
        });
    }
    let c: Vec<C64> = u_lo.row(k).iter().map(|z| z.conj()).collect();
    LoShape::new(c, theta)
}

/// LO for the nullifier `δ_k = p_k − Σ_j V_kj x_j` of the network whose nodes
/// are the rows of `u_lo`, measured at `θ = 0`.
pub fn nullifier_lo(u_lo: &ModeUnitary, graph: &Graph, k: usize) -> Result<LoShape> {
    let n = u_lo.dim();
    if graph.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: graph.n(),
        });
    }
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, len: n });
    }
    let m = u_lo.as_matrix();
    let adj = graph.adjacency();
    let i = C64::new(0.0, 1.0);
    let c: Vec<C64> = (0..n)
        .map(|col| {
            let mut z = i * m[(k, col)].conj();
            for j in 0..n {
                let w = adj[(k, j)];
                if w != 0.0 {
                    z -= m[(j, col)].conj() * w;
                }
            }
            z
        })
        .collect();
    LoShape::new(c, 0.0)
}

/// Variance of the normalized LO quadrature; 1 on vacuum.
pub fn measure_variance(v_pix: &CovarianceMatrix, lo: &LoShape) -> Result<f64> {
    let norm_sq: f64 = lo.c.iter().map(|z| z.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(Error::UnnormalizedLo(norm_sq));
    }
    quadrature_variance(v_pix, &lo.quadrature_weights())
}

/// Variance of the literal (unnormalized) operator combination.
pub fn measure_operator_variance(v_pix: &CovarianceMatrix, lo: &LoShape) -> Result<f64> {
    Ok(measure_variance(v_pix, lo)? * lo.scale)
}

/// `θ` values evenly spaced over `[0, π]`.
pub fn default_theta_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| std::f64::consts::PI * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Normalized-mode variance at every `θ` of the grid, in grid order.
pub fn phase_sweep(v_pix: &CovarianceMatrix, c: &[C64], thetas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if thetas.is_empty() {
        return Err(Error::Parse("empty phase grid".into()));
    }
    let base = LoShape::new(c.to_vec(), 0.0)?;
    if c.len() != v_pix.dim() {
        return Err(Error::DimensionMismatch {
            expected: v_pix.dim(),
            found: c.len(),
        });
    }
    thetas
        .par_iter()
        .map(|&theta| Ok((theta, measure_variance(v_pix, &base.with_theta(theta))?)))
        .collect()
}

/// The x- and p-blocks of a pixel covariance, optionally with the shot-noise
/// identity removed from the diagonal.
pub fn pixel_covariance_blocks(
    v_pix: &CovarianceMatrix,
    subtract_shot_noise: bool,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut cx = v_pix.x_block();
    let mut cp = v_pix.p_block();
    if subtract_shot_noise {
        for i in 0..v_pix.dim() {
            cx[(i, i)] -= 1.0;
            cp[(i, i)] -= 1.0;
        }
    }
    (cx, cp)
}
