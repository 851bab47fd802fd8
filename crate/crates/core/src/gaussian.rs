//! Symplectic linear algebra over quadrature phase space.
//!
//! Conventions used throughout the crate:
//!
//! * the annihilation operator of a mode decomposes as `a = x + i p`;
//! * the vacuum variance of every quadrature is 1, so the vacuum covariance
//!   matrix is the identity and squeezing in dB is `10 log10(variance)`;
//! * quadrature vectors are ordered `(x_1 .. x_n, p_1 .. p_n)`, and the
//!   symplectic form is `Ω = [[0, I], [-I, 0]]`.
//!
//! A passive mode transformation `b = U a` with `U = X + iY` acts on the
//! quadratures as `S = [[X, -Y], [Y, X]]`, which is both symplectic and
//! orthogonal.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::resource::SqueezingProfile;

pub type C64 = Complex<f64>;

/// Tolerance for structural identities (unitarity, symplecticity, symmetry).
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Tolerance used when validating user-supplied matrices.
pub const INPUT_TOL: f64 = 1e-8;
/// Lower bound on the smallest eigenvalue of `V + iΩ`.
pub const UNCERTAINTY_TOL: f64 = 1e-9;

/// The standard symplectic form for `n` modes.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Second moments of the `2n` quadratures of a zero-mean Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    data: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry and the uncertainty bound `V + iΩ ⪰ 0`.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (r, c) = data.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(Error::InvalidCovariance(format!(
                "expected a non-empty 2n x 2n matrix, got {r} x {c}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        let asym = max_abs(&(&data - data.transpose()));
        if asym > STRUCTURAL_TOL {
            return Err(Error::InvalidCovariance(format!(
                "not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        let cov = Self {
            data: symmetrize(&data),
        };
        let margin = cov.uncertainty_margin();
        if margin < -UNCERTAINTY_TOL {
            return Err(Error::InvalidCovariance(format!(
                "violates the uncertainty bound (smallest eigenvalue of V + iΩ is {margin:.3e})"
            )));
        }
        Ok(cov)
    }

    /// Wraps a matrix produced by a validity-preserving operation.
    pub(crate) fn from_trusted(data: DMatrix<f64>) -> Self {
        Self {
            data: symmetrize(&data),
        }
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            data: DMatrix::identity(2 * n, 2 * n),
        }
    }

    /// Uncorrelated modes with the given quadrature variances.
    pub fn from_diagonal(x_vars: &[f64], p_vars: &[f64]) -> Result<Self> {
        if x_vars.len() != p_vars.len() {
            return Err(Error::DimensionMismatch {
                expected: x_vars.len(),
                found: p_vars.len(),
            });
        }
        let diag: Vec<f64> = x_vars.iter().chain(p_vars).copied().collect();
        Self::new(DMatrix::from_diagonal(&DVector::from_vec(diag)))
    }

    /// Number of modes.
    pub fn dim(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn x_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.data.view((0, 0), (n, n)).into_owned()
    }

    pub fn p_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.data.view((n, n), (n, n)).into_owned()
    }

    /// The x–p correlation block `⟨x pᵀ⟩`.
    pub fn xp_block(&self) -> DMatrix<f64> {
        let n = self.dim();
        self.data.view((0, n), (n, n)).into_owned()
    }

    pub fn determinant(&self) -> f64 {
        self.data.determinant()
    }

    /// Smallest eigenvalue of the Hermitian matrix `V + iΩ`.
    ///
    /// Computed from the real symmetric embedding `[[V, -Ω], [Ω, V]]`, whose
    /// spectrum is that of `V + iΩ` with every eigenvalue doubled.
    pub fn uncertainty_margin(&self) -> f64 {
        let m = 2 * self.dim();
        let w = omega(self.dim());
        let mut big = DMatrix::zeros(2 * m, 2 * m);
        big.view_mut((0, 0), (m, m)).copy_from(&self.data);
        big.view_mut((m, m), (m, m)).copy_from(&self.data);
        big.view_mut((0, m), (m, m)).copy_from(&(-&w));
        big.view_mut((m, 0), (m, m)).copy_from(&w);
        SymmetricEigen::new(big).eigenvalues.min()
    }

    /// The `n` symplectic eigenvalues, ascending. All equal 1 for a pure state.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let eig = SymmetricEigen::new(self.data.clone());
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let root =
            &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
        let w = omega(n);
        let m = &root * w.transpose() * &self.data * &w * &root;
        let mut vals: Vec<f64> = SymmetricEigen::new(symmetrize(&m))
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        vals.sort_by(f64::total_cmp);
        // Every symplectic eigenvalue appears twice.
        vals.chunks(2)
            .map(|pair| 0.5 * (pair[0] + pair[1]))
            .collect()
    }
}

/// `n × n` complex unitary mapping one annihilation-operator basis to another.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    m: DMatrix<C64>,
}

/// Max-entry deviation of `M M†` from the identity.
pub fn unitarity_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let prod = m * m.adjoint() - DMatrix::<C64>::identity(n, n);
    prod.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

impl ModeUnitary {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonUnitary {
                residual: f64::INFINITY,
            });
        }
        let residual = unitarity_residual(&m);
        if residual > INPUT_TOL {
            return Err(Error::NonUnitary { residual });
        }
        Ok(Self { m })
    }

    /// Builds `X + iY` from its real and imaginary parts.
    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch {
                expected: re.nrows(),
                found: im.nrows(),
            });
        }
        Self::new(re.zip_map(im, C64::new))
    }

    pub fn from_real(o: &DMatrix<f64>) -> Result<Self> {
        Self::new(o.map(|v| C64::new(v, 0.0)))
    }

    pub(crate) fn from_trusted(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    /// Projects an arbitrary square matrix onto the nearest unitary (polar
    /// factor). Returns the unitary and the largest entry-wise correction.
    pub fn nearest(m: &DMatrix<C64>) -> Result<(Self, f64)> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let svd = m.clone().svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::NonUnitary { residual: f64::NAN }),
        };
        let polar = u * v_t;
        let correction = (&polar - m)
            .iter()
            .fold(0.0_f64, |acc, z| acc.max(z.norm()));
        Ok((Self { m: polar }, correction))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// `e^{iφ} I`.
    pub fn global_phase(n: usize, phase: f64) -> Self {
        Self {
            m: DMatrix::identity(n, n) * C64::from_polar(1.0, phase),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn re(&self) -> DMatrix<f64> {
        self.m.map(|z| z.re)
    }

    pub fn im(&self) -> DMatrix<f64> {
        self.m.map(|z| z.im)
    }

    pub fn row(&self, k: usize) -> Vec<C64> {
        self.m.row(k).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &ModeUnitary) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    /// Right-multiplies by a real orthogonal matrix.
    pub fn compose_real(&self, o: &DMatrix<f64>) -> Result<Self> {
        if o.nrows() != self.dim() || o.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: o.nrows(),
            });
        }
        Ok(Self {
            m: &self.m * o.map(|v| C64::new(v, 0.0)),
        })
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.m)
    }
}

/// Real `2n × 2n` phase-space map preserving `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    data: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (r, c) = data.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        let residual = symplectic_residual(&data);
        if residual > INPUT_TOL {
            return Err(Error::NonSymplectic { residual });
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            data: &self.data * &other.data,
        })
    }

    pub fn symplectic_residual(&self) -> f64 {
        symplectic_residual(&self.data)
    }

    /// Max-entry deviation of `S Sᵀ` from the identity.
    pub fn orthogonality_residual(&self) -> f64 {
        let m = self.data.nrows();
        max_abs(&(&self.data * self.data.transpose() - DMatrix::identity(m, m)))
    }
}

/// Max-entry deviation of `S Ω Sᵀ` from `Ω`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let w = omega(s.nrows() / 2);
    max_abs(&(s * &w * s.transpose() - w))
}

/// Lifts a passive mode transformation to phase space: `[[X, -Y], [Y, X]]`.
pub fn unitary_to_symplectic(u: &ModeUnitary) -> SymplecticMatrix {
    let n = u.dim();
    let x = u.re();
    let y = u.im();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(&x);
    s.view_mut((0, n), (n, n)).copy_from(&(-&y));
    s.view_mut((n, 0), (n, n)).copy_from(&y);
    s.view_mut((n, n), (n, n)).copy_from(&x);
    SymplecticMatrix { data: s }
}

/// `S V Sᵀ`.
pub fn apply_symplectic(s: &SymplecticMatrix, v: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if s.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: s.dim(),
        });
    }
    let out = &s.data * &v.data * s.data.transpose();
    Ok(CovarianceMatrix::from_trusted(out))
}

/// Beamsplitter loss with per-mode loss fractions `eta`:
/// `V' = G V G + (I - G²)`, `G = diag(√(1-η))` on both quadrature blocks.
pub fn apply_loss(v: &CovarianceMatrix, eta: &[f64]) -> Result<CovarianceMatrix> {
    let n = v.dim();
    if eta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eta.len(),
        });
    }
    if let Some(&bad) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidLoss(bad));
    }
    let g: Vec<f64> = (0..2 * n).map(|i| (1.0 - eta[i % n]).sqrt()).collect();
    let mut out = v.data.clone();
    for i in 0..2 * n {
        for j in 0..2 * n {
            out[(i, j)] *= g[i] * g[j];
        }
        out[(i, i)] += 1.0 - g[i] * g[i];
    }
    Ok(CovarianceMatrix::from_trusted(out))
}

/// The quadratic form `uᵀ V u`.
pub fn quadrature_variance(v: &CovarianceMatrix, u: &[f64]) -> Result<f64> {
    if u.len() != v.data.nrows() {
        return Err(Error::DimensionMismatch {
            expected: v.data.nrows(),
            found: u.len(),
        });
    }
    let u = DVector::from_column_slice(u);
    Ok((u.transpose() * &v.data * &u)[(0, 0)])
}

pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn variance_to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::NonPositiveVariance(v));
    }
    Ok(10.0 * v.log10())
}

/// Result of separately diagonalizing the p- and x-blocks of a covariance
/// matrix.
#[derive(Debug, Clone)]
pub struct Eigenmodes {
    /// Rows are the real eigenmode envelopes in the input basis:
    /// `a^eig = modes · a^in`.
    pub modes: ModeUnitary,
    /// p-quadrature variances of the eigenmodes, ascending.
    pub p_variances: Vec<f64>,
    /// x-quadrature variances in the same basis (diagonal of the rotated x-block).
    pub x_variances: Vec<f64>,
    /// Frobenius norm of the off-diagonal part of the rotated x-block plus the
    /// rotated x–p block. Zero when both quadratures share one eigenbasis.
    pub residual: f64,
}

impl Eigenmodes {
    /// The extracted p-variances as a squeezing profile. Fails when a
    /// variance exceeds the vacuum level (e.g. after adding dark noise).
    pub fn profile(&self) -> Result<SqueezingProfile> {
        SqueezingProfile::new(self.p_variances.clone())
    }

    /// Number of modes whose p-variance is below `1 - threshold`.
    pub fn squeezed_count(&self, threshold: f64) -> usize {
        self.p_variances
            .iter()
            .filter(|&&v| v < 1.0 - threshold)
            .count()
    }
}

/// Diagonalizes the p-block, ranks eigenmodes by ascending p-variance and
/// reports how far the x-block is from diagonal in that basis.
///
/// Inside a degenerate eigenspace the basis is not unique; it is fixed by
/// Gram–Schmidt on the projections of the input-basis unit vectors, which
/// orders the vectors lexicographically (descending) by their components.
pub fn eigenmode_extract(v: &CovarianceMatrix) -> Eigenmodes {
    let cp = v.p_block();
    let cx = v.x_block();
    let cxp = v.xp_block();
    let eig = SymmetricEigen::new(cp);
    let (vals, vecs) = canonical_eigenbasis(&eig.eigenvalues, &eig.eigenvectors);

    let rotated_x = vecs.transpose() * &cx * &vecs;
    let rotated_xp = vecs.transpose() * &cxp * &vecs;
    let n = vals.len();
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off += rotated_x[(i, j)].powi(2);
            }
        }
    }
    off += rotated_xp.iter().map(|e| e * e).sum::<f64>();

    Eigenmodes {
        modes: ModeUnitary::from_trusted(vecs.transpose().map(|e| C64::new(e, 0.0))),
        p_variances: vals,
        x_variances: (0..n).map(|i| rotated_x[(i, i)]).collect(),
        residual: off.sqrt(),
    }
}

/// Sorts eigenpairs ascending and makes eigenvectors deterministic: for a
/// simple eigenvalue the largest-magnitude component is made positive, and
/// degenerate eigenspaces are re-spanned canonically.
fn canonical_eigenbasis(values: &DVector<f64>, vectors: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs = DMatrix::zeros(n, n);
    let mut col = 0;
    let mut start = 0;
    while start < n {
        let lead = values[order[start]];
        let tol = 1e-9 * lead.abs().max(1.0);
        let mut end = start + 1;
        while end < n && (values[order[end]] - lead).abs() <= tol {
            end += 1;
        }
        let group = &order[start..end];
        let mean = group.iter().map(|&i| values[i]).sum::<f64>() / group.len() as f64;
        if group.len() == 1 {
            let mut v = vectors.column(group[0]).into_owned();
            fix_sign(&mut v);
            out_vecs.set_column(col, &v);
            out_vals.push(values[group[0]]);
            col += 1;
        } else {
            let q = DMatrix::from_columns(
                &group.iter().map(|&i| vectors.column(i)).collect::<Vec<_>>(),
            );
            let proj = &q * q.transpose();
            let mut basis: Vec<DVector<f64>> = Vec::with_capacity(group.len());
            for seed in 0..n {
                if basis.len() == group.len() {
                    break;
                }
                let mut v = proj.column(seed).into_owned();
                for b in &basis {
                    let c = b.dot(&v);
                    v -= b * c;
                }
                let norm = v.norm();
                if norm > 1e-6 {
                    basis.push(v / norm);
                }
            }
            for b in basis {
                out_vecs.set_column(col, &b);
                out_vals.push(mean);
                col += 1;
            }
        }
        start = end;
    }
    (out_vals, out_vecs)
}

/// Flips `v` so that its largest-magnitude component (first one on ties) is positive.
pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ModeUnitary {
    let z = DMatrix::<C64>::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ModeUnitary::from_trusted(q)
}

/// Haar-random real orthogonal matrix.
pub fn haar_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let z = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}
