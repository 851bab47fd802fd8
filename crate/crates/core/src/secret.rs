//! Threshold secret sharing over a network built from squeezed modes.
//!
//! The last squeezer slot carries the secret; the other slots are resource
//! squeezers, p-squeezed, so their x quadratures are anti-squeezed. Network
//! mode `i` holds `x_i = Σ X_ij x_j − Y_ij p_j` and `p_i = Σ Y_ij x_j + X_ij p_j`.
//! An access party combines its members' local quadratures with the dealer's
//! broadcast `p` outcome so that every anti-squeezed quadrature cancels.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{apply_symplectic, unitary_to_symplectic, CovarianceMatrix, ModeUnitary};
use crate::resource::SqueezingProfile;

const X_SE: [[f64; 6]; 6] = [
    [0.6234, 0.0078, -0.1375, -0.1375, 0.0078, -0.0591],
    [0.0078, 0.6234, 0.0078, -0.1375, -0.1375, -0.0591],
    [-0.1375, 0.0078, 0.6234, 0.0078, -0.1375, -0.0591],
    [-0.1375, -0.1375, 0.0078, 0.6233, 0.0078, -0.0591],
    [0.0078, -0.1375, -0.1375, 0.0078, 0.6234, -0.0591],
    [-0.0591, -0.0591, -0.0591, -0.0591, -0.0591, 0.4822],
];

const Y_SE: [[f64; 6]; 6] = [
    [-0.0434, 0.4268, -0.1887, -0.1887, 0.4268, 0.3641],
    [0.4268, -0.0434, 0.4268, -0.1887, -0.1887, 0.3641],
    [-0.1887, 0.4268, -0.04342, 0.4268, -0.1887, 0.3641],
    [-0.1887, -0.1887, 0.4268, -0.0434, 0.4268, 0.3641],
    [0.4268, -0.1887, -0.1887, 0.4268, -0.04342, 0.3641],
    [0.3641, 0.3641, 0.3641, 0.3641, 0.3641, -0.2954],
];

/// Residual above which a reconstruction is declared infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Residual above which a pair is certified unable to recover the secret.
pub const INFEASIBILITY_TOL: f64 = 1e-6;
const CONDITION_TOL: f64 = 1e-10;

/// The printed six-mode sharing matrices, `X + iY`, as given (4 decimals).
pub fn u6se_printed() -> DMatrix<nalgebra::Complex<f64>> {
    DMatrix::from_fn(6, 6, |i, j| nalgebra::Complex::new(X_SE[i][j], Y_SE[i][j]))
}

/// The six-mode sharing unitary: the printed matrices projected onto the
/// nearest unitary.
pub fn u6se() -> ModeUnitary {
    ModeUnitary::nearest(&u6se_printed())
        .expect("printed matrix is close to unitary")
        .0
}

/// Variances of the secret mode, `(Δ²x_s, Δ²p_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecretState {
    pub vx: f64,
    pub vp: f64,
}

impl SecretState {
    pub fn coherent() -> Self {
        Self { vx: 1.0, vp: 1.0 }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![self.vx, self.vp]))
    }
}

impl Default for SecretState {
    fn default() -> Self {
        Self::coherent()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharingNetwork {
    u: ModeUnitary,
    dealer: usize,
    secret: SecretState,
}

impl SharingNetwork {
    pub fn new(u: ModeUnitary, dealer: usize, secret: SecretState) -> Result<Self> {
        let n = u.dim();
        if n < 2 {
            return Err(Error::InvalidConfig(
                "a sharing network needs at least two modes".into(),
            ));
        }
        if dealer >= n {
            return Err(Error::IndexOutOfRange {
                index: dealer,
                len: n,
            });
        }
        if !(secret.vx > 0.0 && secret.vp > 0.0) || secret.vx * secret.vp < 1.0 - 1e-9 {
            return Err(Error::InvalidCovariance(format!(
                "secret variances ({}, {}) are not a physical state",
                secret.vx, secret.vp
            )));
        }
        Ok(Self { u, dealer, secret })
    }

    /// `u6se()` with dealer at mode 5 and a coherent secret.
    pub fn standard() -> Self {
        Self::new(u6se(), 5, SecretState::coherent()).expect("built-in network is valid")
    }

    pub fn unitary(&self) -> &ModeUnitary {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn dealer(&self) -> usize {
        self.dealer
    }

    pub fn secret(&self) -> SecretState {
        self.secret
    }

    pub fn with_secret(&self, secret: SecretState) -> Result<Self> {
        Self::new(self.u.clone(), self.dealer, secret)
    }

    /// Network modes other than the dealer, ascending.
    pub fn players(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| i != self.dealer).collect()
    }

    /// Smallest party size that can meet the constraints: a strict majority
    /// of the players.
    pub fn threshold(&self) -> usize {
        (self.dim() - 1) / 2 + 1
    }

    /// Index of the secret among the squeezer slots.
    pub fn secret_slot(&self) -> usize {
        self.dim() - 1
    }

    /// Squeezer-basis coefficients of `x_i` of network mode `i`.
    fn x_row(&self, i: usize) -> DVector<f64> {
        let n = self.dim();
        let (x, y) = (self.u.re(), self.u.im());
        DVector::from_fn(2 * n, |j, _| if j < n { x[(i, j)] } else { -y[(i, j - n)] })
    }

    /// Squeezer-basis coefficients of `p_i` of network mode `i`.
    fn p_row(&self, i: usize) -> DVector<f64> {
        let n = self.dim();
        let (x, y) = (self.u.re(), self.u.im());
        DVector::from_fn(2 * n, |j, _| if j < n { y[(i, j)] } else { x[(i, j - n)] })
    }

    /// Squeezer covariance: resource slots from the leading profile entries,
    /// the secret in the last slot.
    pub fn squeezer_covariance(&self, profile: &SqueezingProfile) -> Result<CovarianceMatrix> {
        let n = self.dim();
        let s = profile.leading(n - 1)?;
        let mut x: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
        let mut p = s;
        x.push(self.secret.vx);
        p.push(self.secret.vp);
        CovarianceMatrix::from_diagonal(&x, &p)
    }

    pub fn network_covariance(&self, profile: &SqueezingProfile) -> Result<CovarianceMatrix> {
        apply_symplectic(
            &unitary_to_symplectic(&self.u),
            &self.squeezer_covariance(profile)?,
        )
    }

    fn check_party(&self, party: &[usize]) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidParty {
            party: party.to_vec(),
            reason: reason.to_string(),
        };
        if party.is_empty() {
            return Err(invalid("party is empty"));
        }
        for (k, &i) in party.iter().enumerate() {
            if i >= self.dim() {
                return Err(invalid("index outside the network"));
            }
            if i == self.dealer {
                return Err(invalid("the dealer cannot be a player"));
            }
            if party[..k].contains(&i) {
                return Err(invalid("duplicate player"));
            }
        }
        Ok(())
    }
}

/// Which secret quadrature a recipe reconstructs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

/// Linear combination of the party's outcomes and the dealer broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub quadrature: Quadrature,
    /// Weights `m_i` on the members' `x_i`, in party order.
    pub x_weights: Vec<f64>,
    /// Weights `n_i` on the members' `p_i`, in party order.
    pub p_weights: Vec<f64>,
    /// Weight on the dealer's `p` outcome.
    pub dealer_weight: f64,
    /// The combination expressed on the squeezer quadratures
    /// `(x_1..x_n, p_1..p_n)`.
    pub squeezer_coefficients: Vec<f64>,
    /// Coefficients left on the resource `p` quadratures.
    pub leakage: Vec<f64>,
    /// Norm of the violated constraints.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessSolution {
    pub party: Vec<usize>,
    /// Anti-squeezed slot eliminated with the dealer outcome, if any.
    pub pivot: Option<usize>,
    pub x: Recipe,
    pub p: Recipe,
}

impl AccessSolution {
    pub fn residual(&self) -> f64 {
        self.x.residual.max(self.p.residual)
    }
}

struct Solved {
    z: DVector<f64>,
    smallest_singular: f64,
    condition_ok: bool,
}

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Solved {
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let largest = sv.max();
    let smallest = if a.nrows() >= a.ncols() {
        sv.min()
    } else {
        largest
    };
    let cutoff = CONDITION_TOL * largest.max(f64::MIN_POSITIVE);
    let z = svd
        .solve(b, cutoff)
        .expect("both singular bases were computed");
    Solved {
        z,
        smallest_singular: smallest,
        condition_ok: smallest > cutoff,
    }
}

/// Constraint rows: the resource x slots, then secret x, then secret p.
fn constraint_indices(n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n - 1).collect();
    idx.push(n - 1);
    idx.push(2 * n - 1);
    idx
}

fn target(n: usize, q: Quadrature) -> DVector<f64> {
    let mut b = DVector::zeros(n + 1);
    match q {
        Quadrature::X => b[n - 1] = 1.0,
        Quadrature::P => b[n] = 1.0,
    }
    b
}

/// Columns: members' `x`, members' `p`, then the dealer `p`.
fn outcome_matrix(net: &SharingNetwork, party: &[usize]) -> DMatrix<f64> {
    let n = net.dim();
    let k = party.len();
    let mut m = DMatrix::zeros(2 * n, 2 * k + 1);
    for (c, &i) in party.iter().enumerate() {
        m.set_column(c, &net.x_row(i));
        m.set_column(k + c, &net.p_row(i));
    }
    m.set_column(2 * k, &net.p_row(net.dealer));
    m
}

fn recipe(net: &SharingNetwork, m: &DMatrix<f64>, weights: DVector<f64>, q: Quadrature) -> Recipe {
    let n = net.dim();
    let k = (weights.len() - 1) / 2;
    let full = m * &weights;
    let idx = constraint_indices(n);
    let b = target(n, q);
    let residual = idx
        .iter()
        .enumerate()
        .map(|(r, &row)| (full[row] - b[r]).powi(2))
        .sum::<f64>()
        .sqrt();
    Recipe {
        quadrature: q,
        x_weights: weights.rows(0, k).iter().copied().collect(),
        p_weights: weights.rows(k, k).iter().copied().collect(),
        dealer_weight: weights[2 * k],
        leakage: full.rows(n, n - 1).iter().copied().collect(),
        squeezer_coefficients: full.iter().copied().collect(),
        residual,
    }
}

/// Anti-squeezed slot with the largest dealer coefficient, if any is non-zero.
fn default_pivot(net: &SharingNetwork) -> Option<usize> {
    let d = net.p_row(net.dealer);
    let scale = d.amax().max(1.0);
    (0..net.dim() - 1)
        .filter(|&j| d[j].abs() > CONDITION_TOL * scale)
        .max_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()).then(b.cmp(&a)))
}

struct RawSolve {
    weights: DVector<f64>,
    smallest_singular: f64,
    condition_ok: bool,
}

fn raw_solve(
    net: &SharingNetwork,
    m: &DMatrix<f64>,
    pivot: Option<usize>,
    q: Quadrature,
) -> RawSolve {
    let n = net.dim();
    let cols = m.ncols();
    let k2 = cols - 1;
    let idx = constraint_indices(n);
    let b = target(n, q);
    match pivot {
        Some(piv) => {
            // Substituting the dealer relation removes the pivot constraint:
            // the dealer weight is fixed by the members' weights.
            let d = m.column(k2);
            let rows: Vec<usize> = idx.iter().copied().filter(|&r| r != piv).collect();
            let rhs = DVector::from_iterator(
                rows.len(),
                idx.iter()
                    .zip(b.iter())
                    .filter(|(r, _)| **r != piv)
                    .map(|(_, v)| *v),
            );
            let a = DMatrix::from_fn(rows.len(), k2, |r, c| {
                m[(rows[r], c)] - m[(piv, c)] / d[piv] * d[rows[r]]
            });
            let s = lstsq(&a, &rhs);
            let dealer = -(0..k2).map(|c| s.z[c] * m[(piv, c)]).sum::<f64>() / d[piv];
            let mut weights = DVector::zeros(cols);
            weights.rows_mut(0, k2).copy_from(&s.z);
            weights[k2] = dealer;
            RawSolve {
                weights,
                smallest_singular: s.smallest_singular,
                condition_ok: s.condition_ok,
            }
        }
        None => {
            let a = DMatrix::from_fn(idx.len(), cols, |r, c| m[(idx[r], c)]);
            let s = lstsq(&a, &b);
            RawSolve {
                weights: s.z,
                smallest_singular: s.smallest_singular,
                condition_ok: s.condition_ok,
            }
        }
    }
}

/// Solves for the `x` and `p` reconstructions of the secret by `party`.
pub fn access_party_solve(net: &SharingNetwork, party: &[usize]) -> Result<AccessSolution> {
    access_party_solve_with_pivot(net, party, default_pivot(net))
}

/// As [`access_party_solve`] with an explicit elimination slot; `None` solves
/// the full constraint system with the dealer weight as an unknown.
pub fn access_party_solve_with_pivot(
    net: &SharingNetwork,
    party: &[usize],
    pivot: Option<usize>,
) -> Result<AccessSolution> {
    net.check_party(party)?;
    let n = net.dim();
    let m = outcome_matrix(net, party);
    if let Some(piv) = pivot {
        if piv >= n - 1 {
            return Err(Error::IndexOutOfRange {
                index: piv,
                len: n - 1,
            });
        }
        if m[(piv, 2 * party.len())].abs() < CONDITION_TOL {
            return Err(Error::InvalidConfig(format!(
                "dealer outcome has no component on anti-squeezed slot {piv}"
            )));
        }
    }
    let mut recipes = Vec::with_capacity(2);
    for q in [Quadrature::X, Quadrature::P] {
        let raw = raw_solve(net, &m, pivot, q);
        let r = recipe(net, &m, raw.weights, q);
        if !raw.condition_ok || r.residual > FEASIBILITY_TOL {
            return Err(Error::SingularSystem {
                party: party.to_vec(),
                smallest_singular: raw.smallest_singular,
                residual: r.residual,
            });
        }
        recipes.push(r);
    }
    let p = recipes.pop().expect("two recipes");
    let x = recipes.pop().expect("two recipes");
    Ok(AccessSolution {
        party: party.to_vec(),
        pivot,
        x,
        p,
    })
}

/// Least-squares residuals of a party too small to be an access party.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCertificate {
    pub party: Vec<usize>,
    pub x_residual: f64,
    pub p_residual: f64,
}

impl PairCertificate {
    /// The larger of the two residuals: the party misses at least one quadrature
    /// by this much.
    pub fn residual(&self) -> f64 {
        self.x_residual.max(self.p_residual)
    }

    pub fn is_infeasible(&self) -> bool {
        self.residual() > INFEASIBILITY_TOL
    }
}

/// Best-effort reconstruction residuals for `pair` (any party size works).
pub fn pair_infeasibility(net: &SharingNetwork, pair: &[usize]) -> Result<PairCertificate> {
    net.check_party(pair)?;
    let m = outcome_matrix(net, pair);
    let pivot = default_pivot(net);
    let residual = |q| recipe(net, &m, raw_solve(net, &m, pivot, q).weights, q).residual;
    Ok(PairCertificate {
        party: pair.to_vec(),
        x_residual: residual(Quadrature::X),
        p_residual: residual(Quadrature::P),
    })
}

/// `diag(Δ²x_s + Σ a_i² s_i, Δ²p_s + Σ b_i² s_i)`.
pub fn reconstructed_covariance(
    sol: &AccessSolution,
    profile: &SqueezingProfile,
    secret: SecretState,
) -> Result<DMatrix<f64>> {
    let slots = sol.x.leakage.len();
    let s = profile.leading(slots)?;
    let leak = |a: &[f64]| a.iter().zip(&s).map(|(a, s)| a * a * s).sum::<f64>();
    Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![
        secret.vx + leak(&sol.x.leakage),
        secret.vp + leak(&sol.p.leakage),
    ])))
}

fn check_single_mode(v: &DMatrix<f64>, name: &str) -> Result<f64> {
    if v.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: v.nrows(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) || (v[(0, 1)] - v[(1, 0)]).abs() > 1e-12 {
        return Err(Error::NotPositiveDefinite(format!(
            "{name} is not a symmetric matrix"
        )));
    }
    let det = v.determinant();
    if !(v[(0, 0)] > 0.0 && det > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "{name} has determinant {det} and leading entry {}",
            v[(0, 0)]
        )));
    }
    Ok(det)
}

/// Fidelity between two single-mode Gaussian states with covariances `v1`,
/// `v2` and mean difference `alpha`.
pub fn fidelity(v1: &DMatrix<f64>, v2: &DMatrix<f64>, alpha: [f64; 2]) -> Result<f64> {
    let d1 = check_single_mode(v1, "first covariance")?;
    let d2 = check_single_mode(v2, "second covariance")?;
    let sum = v1 + v2;
    let a = sum.determinant();
    let b = ((d1 - 1.0) * (d2 - 1.0)).max(0.0);
    let mut f = 2.0 / ((a + b).sqrt() - b.sqrt());
    if alpha != [0.0, 0.0] {
        let al = DVector::from_vec(alpha.to_vec());
        let inv = sum
            .try_inverse()
            .expect("sum of positive matrices is invertible");
        f *= (-(al.transpose() * inv * &al)[0]).exp();
    }
    Ok(f)
}

/// Outcome for one access party.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyResult {
    pub party: Vec<usize>,
    pub x_variance: f64,
    pub p_variance: f64,
    pub fidelity: f64,
    pub residual: f64,
}

/// Every `k`-subset of `items` in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(
        items: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Solves, reconstructs and scores every threshold-size party.
pub fn protocol_run(net: &SharingNetwork, profile: &SqueezingProfile) -> Result<Vec<PartyResult>> {
    profile.leading(net.dim() - 1)?;
    let secret = net.secret();
    let vs = secret.covariance();
    combinations(&net.players(), net.threshold())
        .par_iter()
        .map(|party| {
            let sol = access_party_solve(net, party)?;
            let v = reconstructed_covariance(&sol, profile, secret)?;
            Ok(PartyResult {
                party: party.clone(),
                x_variance: v[(0, 0)],
                p_variance: v[(1, 1)],
                fidelity: fidelity(&vs, &v, [0.0, 0.0])?,
                residual: sol.residual(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub leading_db: f64,
    pub f_min: f64,
    pub f_avg: f64,
    pub f_max: f64,
}

/// Fidelity statistics over the access parties as the whole profile is
/// rescaled to each leading squeezing level in `grid`.
pub fn sweep_fidelity(
    net: &SharingNetwork,
    base: &SqueezingProfile,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    grid.par_iter()
        .map(|&db| {
            let profile = base.scaled_to_leading_db(db)?;
            let results = protocol_run(net, &profile)?;
            let f: Vec<f64> = results.iter().map(|r| r.fidelity).collect();
            Ok(SweepPoint {
                leading_db: db,
                f_min: f.iter().copied().fold(f64::INFINITY, f64::min),
                f_avg: f.iter().sum::<f64>() / f.len() as f64,
                f_max: f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

/// `points` evenly spaced levels from `start` to `end` dB inclusive.
pub fn db_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (end - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
