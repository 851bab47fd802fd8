use gaussnet::cluster::{builtin_graph, cluster_unitary};
use gaussnet::gaussian::ModeUnitary;
use gaussnet::resource::{paper_profile, SqueezingProfile};
use gaussnet::secret::{
    access_party_solve, access_party_solve_with_pivot, combinations, pair_infeasibility,
    protocol_run, reconstructed_covariance, u6se, SecretState, SharingNetwork,
};
use gaussnet::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn triples() -> Vec<Vec<usize>> {
    combinations(&[0, 1, 2, 3, 4], 3)
}

/// Full constraint system solved by LU, written out from the quadrature
/// relations directly. Returns the leakage on p₁..p₅ for the x and p recipes.
fn oracle(u: &ModeUnitary, party: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let (x, y) = (u.re(), u.im());
    // Columns: x_i of each member, p_i of each member, p of the dealer.
    // Rows: squeezer quadratures x₁..x₆, p₁..p₆.
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for &i in party {
        cols.push(
            (0..6)
                .map(|j| x[(i, j)])
                .chain((0..6).map(|j| -y[(i, j)]))
                .collect(),
        );
    }
    for &i in party {
        cols.push(
            (0..6)
                .map(|j| y[(i, j)])
                .chain((0..6).map(|j| x[(i, j)]))
                .collect(),
        );
    }
    cols.push(
        (0..6)
            .map(|j| y[(5, j)])
            .chain((0..6).map(|j| x[(5, j)]))
            .collect(),
    );
    let rows = [0, 1, 2, 3, 4, 5, 11];
    let a = DMatrix::from_fn(7, 7, |r, c| cols[c][rows[r]]);
    let solve = |target: usize| {
        let mut b = DVector::zeros(7);
        b[target] = 1.0;
        let z = a.clone().lu().solve(&b).unwrap();
        (6..11)
            .map(|q| (0..7).map(|c| cols[c][q] * z[c]).sum())
            .collect::<Vec<f64>>()
    };
    (solve(5), solve(6))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn every_triple_matches_the_full_system_oracle() {
    let net = SharingNetwork::standard();
    for party in triples() {
        let sol = access_party_solve(&net, &party).unwrap();
        let (a, b) = oracle(net.unitary(), &party);
        assert!(
            close(&sol.x.leakage, &a, 1e-8),
            "{party:?}: {:?} vs {a:?}",
            sol.x.leakage
        );
        assert!(close(&sol.p.leakage, &b, 1e-8), "{party:?}");
        assert!(sol
            .x
            .leakage
            .iter()
            .chain(&sol.p.leakage)
            .all(|v| v.is_finite()));
    }
}

#[test]
fn substitution_leaves_only_squeezed_quadratures() {
    let net = SharingNetwork::standard();
    for party in triples() {
        let sol = access_party_solve(&net, &party).unwrap();
        assert!(sol.residual() < 1e-8);
        for (r, secret, conjugate) in [(&sol.x, 5, 11), (&sol.p, 11, 5)] {
            let c = &r.squeezer_coefficients;
            assert!(c[..5].iter().all(|v| v.abs() < 1e-8), "{party:?}: {c:?}");
            assert!((c[secret] - 1.0).abs() < 1e-8);
            assert!(c[conjugate].abs() < 1e-8);
            assert_eq!(&c[6..11], r.leakage.as_slice());
        }
    }
}

#[test]
fn leakage_does_not_depend_on_the_pivot() {
    let net = SharingNetwork::standard();
    let reference: Vec<_> = triples()
        .iter()
        .map(|p| access_party_solve_with_pivot(&net, p, None).unwrap())
        .collect();
    for pivot in 0..5 {
        for (party, want) in triples().iter().zip(&reference) {
            let sol = access_party_solve_with_pivot(&net, party, Some(pivot)).unwrap();
            assert!(close(&sol.x.leakage, &want.x.leakage, 1e-8));
            assert!(close(&sol.p.leakage, &want.p.leakage, 1e-8));
        }
    }
}

#[test]
fn pairs_cannot_recover_the_secret() {
    let net = SharingNetwork::standard();
    for pair in combinations(&[0, 1, 2, 3, 4], 2) {
        let cert = pair_infeasibility(&net, &pair).unwrap();
        assert!(cert.is_infeasible(), "{pair:?}: {cert:?}");
        assert!(matches!(
            access_party_solve(&net, &pair),
            Err(Error::SingularSystem { .. })
        ));
    }
}

#[test]
fn a_two_player_toy_network_shares_with_pairs() {
    // Players 0 and 1 hold the secret slot mixed with slot 0; the dealer
    // carries an anti-squeezed quadrature of slot 1.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut re = DMatrix::zeros(6, 6);
    let mut im = DMatrix::zeros(6, 6);
    re[(0, 0)] = h;
    re[(0, 5)] = h;
    re[(1, 0)] = -h;
    re[(1, 5)] = h;
    re[(2, 2)] = 1.0;
    re[(3, 3)] = 1.0;
    re[(4, 4)] = 1.0;
    im[(5, 1)] = 1.0;
    let u = ModeUnitary::from_parts(&re, &im).unwrap();
    let net = SharingNetwork::new(u, 5, SecretState::coherent()).unwrap();
    let cert = pair_infeasibility(&net, &[0, 1]).unwrap();
    assert!(cert.residual() < 1e-10, "{cert:?}");
    assert!(pair_infeasibility(&net, &[2, 3]).unwrap().is_infeasible());
}

#[test]
fn identity_network_cannot_share() {
    let net = SharingNetwork::new(ModeUnitary::identity(6), 5, SecretState::coherent()).unwrap();
    let err = access_party_solve(&net, &[0, 1, 2]).unwrap_err();
    assert!(matches!(err, Error::SingularSystem { .. }));
}

#[test]
fn pentagon_symmetry_under_uniform_squeezing() {
    let profile = SqueezingProfile::uniform(5, 0.4).unwrap();
    let rotate = |p: &[usize]| {
        let mut q: Vec<usize> = p.iter().map(|i| (i + 1) % 5).collect();
        q.sort();
        q
    };
    let check = |net: &SharingNetwork, tol: f64| {
        let results = protocol_run(net, &profile).unwrap();
        for r in &results {
            let image = rotate(&r.party);
            let other = results.iter().find(|o| o.party == image).unwrap();
            assert!((r.fidelity - other.fidelity).abs() < tol, "{:?}", r.party);
        }
    };
    // The exact pentagon cluster is circulant on the players.
    let exact = cluster_unitary(&builtin_graph("pentagon_dealer", 6).unwrap());
    let diff = (exact.as_matrix() - u6se().as_matrix())
        .map(|z| z.norm())
        .max();
    assert!(diff < 5e-4, "{diff}");
    check(
        &SharingNetwork::new(exact, 5, SecretState::coherent()).unwrap(),
        1e-10,
    );
    // The printed matrices are circulant to their last decimal.
    check(&SharingNetwork::standard(), 1e-4);
}

#[test]
fn squeezing_improves_every_party() {
    let net = SharingNetwork::standard();
    let run = |p: SqueezingProfile| protocol_run(&net, &p).unwrap();
    let vac = run(SqueezingProfile::vacuum(16));
    let mid = run(paper_profile(-4.5).unwrap());
    let top = run(paper_profile(-6.6).unwrap());
    for ((v, m), t) in vac.iter().zip(&mid).zip(&top) {
        assert!(t.fidelity > v.fidelity);
        assert!(t.fidelity >= m.fidelity);
        assert!(t.fidelity <= 1.0);
    }
}

#[test]
fn reconstruction_matches_sampling() {
    let profile = paper_profile(-6.6).unwrap();
    let net = SharingNetwork::standard()
        .with_secret(SecretState { vx: 2.0, vp: 0.5 })
        .unwrap();
    let v = net.network_covariance(&profile).unwrap();
    let l = v.as_matrix().clone().cholesky().unwrap().l();

    // Weight vectors on the network quadratures (x₁..x₆, p₁..p₆).
    let mut weights = Vec::new();
    let mut exact = Vec::new();
    for party in triples() {
        let sol = access_party_solve(&net, &party).unwrap();
        let cov = reconstructed_covariance(&sol, &profile, net.secret()).unwrap();
        for (recipe, var) in [(&sol.x, cov[(0, 0)]), (&sol.p, cov[(1, 1)])] {
            let mut w = DVector::zeros(12);
            for (k, &i) in party.iter().enumerate() {
                w[i] = recipe.x_weights[k];
                w[6 + i] = recipe.p_weights[k];
            }
            w[11] += recipe.dealer_weight;
            weights.push(w);
            exact.push(var);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 1_000_000;
    let mut acc = vec![0.0; weights.len()];
    for _ in 0..samples {
        let z = DVector::from_fn(12, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = &l * z;
        for (a, w) in acc.iter_mut().zip(&weights) {
            let r = w.dot(&q);
            *a += r * r;
        }
    }
    for (k, (a, want)) in acc.iter().zip(&exact).enumerate() {
        let est = a / samples as f64;
        let sigma = want * (2.0 / samples as f64).sqrt();
        assert!(
            (est - want).abs() < 3.0 * sigma,
            "recipe {k}: {est} vs {want}"
        );
    }
}
