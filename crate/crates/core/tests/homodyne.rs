use gaussnet::cluster::{cluster_unitary, nullifier_variances_cov, Graph};
use gaussnet::gaussian::{
    apply_symplectic, eigenmode_extract, haar_unitary, unitary_to_symplectic, ModeUnitary, C64,
};
use gaussnet::homodyne::{
    lo_from_network_row, measure_operator_variance, measure_variance, nullifier_lo,
    pixel_covariance_blocks, LoShape,
};
use gaussnet::resource::{build_pixel_covariance, ResourceSpec, SqueezingProfile};
use gaussnet::secret::u6se;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_PI_2;

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.5) {
                edges.push((i, j, rng.random_range(-2.0..2.0)));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> SqueezingProfile {
    SqueezingProfile::new((0..n).map(|_| rng.random_range(0.05..1.0)).collect())
        .unwrap()
        .sorted()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Nullifier variances from the Mx/Mp formula agree with measuring the
    /// nullifier LO on the pixel covariance.
    #[test]
    fn nullifier_formula_matches_homodyne(seed in any::<u64>(), n in 2usize..=8, cluster in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n);
        let profile = random_profile(&mut rng, n);
        let u_sqz = haar_unitary(&mut rng, n);
        let u = if cluster { cluster_unitary(&g) } else { haar_unitary(&mut rng, n) };

        let v_sqz = profile.covariance(n).unwrap();
        let formula = nullifier_variances_cov(&g, &u, &v_sqz).unwrap();

        let spec = ResourceSpec::new(profile, u_sqz.clone(), vec![0.0; n], 0.0).unwrap();
        let v_pix = build_pixel_covariance(&spec).unwrap();
        let u_lo = u.compose(&u_sqz).unwrap();
        for k in 0..n {
            let lo = nullifier_lo(&u_lo, &g, k).unwrap();
            let measured = measure_operator_variance(&v_pix, &lo).unwrap();
            prop_assert!((measured - formula.variances[k]).abs() < 1e-10 * formula.variances[k].max(1.0));
            prop_assert!((lo.scale() - formula.vacuum_references[k]).abs() < 1e-10 * lo.scale());
        }
    }
}

#[test]
fn variance_matches_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4;
    let profile = SqueezingProfile::from_db(&[-6.0, -3.0, -1.5, -0.5]).unwrap();
    let v = apply_symplectic(
        &unitary_to_symplectic(&haar_unitary(&mut rng, n)),
        &profile.covariance(n).unwrap(),
    )
    .unwrap();
    let c: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let lo = LoShape::new(c, 0.4).unwrap();
    let exact = measure_variance(&v, &lo).unwrap();

    let l = v.as_matrix().clone().cholesky().unwrap().l();
    let w = DVector::from_vec(lo.quadrature_weights());
    let samples = 1_000_000;
    let mut acc = 0.0;
    for _ in 0..samples {
        let z = DVector::from_fn(2 * n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = w.dot(&(&l * z));
        acc += q * q;
    }
    let estimate = acc / samples as f64;
    let sigma = exact * (2.0 / samples as f64).sqrt();
    assert!(
        (estimate - exact).abs() < 3.0 * sigma,
        "{estimate} vs {exact}"
    );
}

#[test]
fn dealer_row_measures_dealer_momentum() {
    let u = u6se();
    let profile = SqueezingProfile::from_db(&[-6.6, -5.4, -5.3, -5.2, -5.1, 0.0]).unwrap();
    let v_sqz = profile.covariance(6).unwrap();
    let v_net = apply_symplectic(&unitary_to_symplectic(&u), &v_sqz).unwrap();
    let lo = lo_from_network_row(&u, 5, FRAC_PI_2).unwrap();
    let measured = measure_variance(&v_sqz, &lo).unwrap();
    assert!((measured - v_net.as_matrix()[(11, 11)]).abs() < 1e-12);
}

#[test]
fn lifted_u6se_reproduces_printed_blocks() {
    let s = unitary_to_symplectic(&u6se());
    let printed = gaussnet::secret::u6se_printed();
    let m = s.as_matrix();
    for i in 0..6 {
        for j in 0..6 {
            assert!((m[(i, j)] - printed[(i, j)].re).abs() < 5e-4);
            assert!((m[(i, j + 6)] + printed[(i, j)].im).abs() < 5e-4);
            assert!((m[(i + 6, j)] - printed[(i, j)].im).abs() < 5e-4);
            assert!((m[(i + 6, j + 6)] - printed[(i, j)].re).abs() < 5e-4);
        }
    }
}

#[test]
fn diagonal_square_nullifiers_on_shipped_resource() {
    // Cluster on the four leading eigenmodes of the 16-pixel resource; the
    // remaining eigenmodes are left untouched.
    let spec = ResourceSpec::standard();
    let v_pix = build_pixel_covariance(&spec).unwrap();
    let modes = eigenmode_extract(&v_pix);
    let n = 16;
    let g4 = gaussnet::cluster::builtin_graph("diagonal_square", 4).unwrap();
    let mut adj = DMatrix::zeros(n, n);
    adj.view_mut((0, 0), (4, 4)).copy_from(g4.adjacency());
    let g = Graph::new(adj).unwrap();
    let mut m = DMatrix::identity(n, n).map(|v: f64| C64::new(v, 0.0));
    m.view_mut((0, 0), (4, 4))
        .copy_from(cluster_unitary(&g4).as_matrix());
    let u_lo = ModeUnitary::new(m).unwrap().compose(&modes.modes).unwrap();
    for k in 0..4 {
        let lo = nullifier_lo(&u_lo, &g, k).unwrap();
        assert!(measure_variance(&v_pix, &lo).unwrap() < 1.0);
    }
}

#[test]
fn two_node_cluster_correlations() {
    let g = Graph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    let v_sqz = SqueezingProfile::uniform(2, 0.3)
        .unwrap()
        .covariance(2)
        .unwrap();
    // A quarter-period phase on the second node turns the cluster into an
    // EPR-like pair with x-x and p-p correlations.
    let fourier = ModeUnitary::from_parts(
        &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0])),
        &DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])),
    )
    .unwrap();
    let u = fourier.compose(&cluster_unitary(&g)).unwrap();
    let v = apply_symplectic(&unitary_to_symplectic(&u), &v_sqz).unwrap();
    let (cx, cp) = pixel_covariance_blocks(&v, false);
    assert!(cx[(0, 1)].abs() > 0.1);
    assert!(
        cx[(0, 1)] * cp[(0, 1)] < 0.0,
        "x and p correlations must have opposite signs"
    );
    assert!((cx[(0, 1)] - cx[(1, 0)]).abs() < 1e-15);
}

#[test]
fn shipped_resource_blocks() {
    let v = build_pixel_covariance(&ResourceSpec::standard()).unwrap();
    let (cx, cp) = pixel_covariance_blocks(&v, true);
    assert!((&cx - cx.transpose()).amax() < 1e-12);
    assert!((&cp - cp.transpose()).amax() < 1e-12);
    // Squeezing shows up as negative excess noise in p, anti-squeezing in x.
    let trace_p: f64 = cp.diagonal().sum();
    let trace_x: f64 = cx.diagonal().sum();
    assert!(trace_p < 0.0 && trace_x > 0.0);
}
