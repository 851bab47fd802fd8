use gaussnet::gaussian::{eigenmode_extract, haar_orthogonal, ModeUnitary};
use gaussnet::resource::{build_pixel_covariance, default_usqz, ResourceSpec, SqueezingProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn round_trip(profile: &SqueezingProfile, u_sqz: ModeUnitary) {
    let n = profile.len();
    let spec = ResourceSpec::new(profile.clone(), u_sqz.clone(), vec![0.0; n], 0.0).unwrap();
    let modes = eigenmode_extract(&build_pixel_covariance(&spec).unwrap());
    let expected = profile.sorted();
    for (got, want) in modes.p_variances.iter().zip(expected.variances()) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    for (x, p) in modes.x_variances.iter().zip(&modes.p_variances) {
        assert!((x * p - 1.0).abs() < 1e-10);
    }
    assert!(modes.residual < 1e-10);

    // Each recovered non-degenerate mode matches a row of u_sqz up to sign.
    let u = u_sqz.re();
    let w = modes.modes.re();
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| profile.variances()[a].total_cmp(&profile.variances()[b]));
        idx
    };
    for (k, &slot) in order.iter().enumerate() {
        let v = profile.variances()[slot];
        if profile
            .variances()
            .iter()
            .filter(|&&o| (o - v).abs() < 1e-9)
            .count()
            > 1
        {
            continue;
        }
        let overlap: f64 = (0..n).map(|j| w[(k, j)] * u[(slot, j)]).sum();
        assert!(
            (overlap.abs() - 1.0).abs() < 1e-10,
            "mode {k}: overlap {overlap}"
        );
    }
}

#[test]
fn recovers_random_profiles_at_sixteen_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let s: Vec<f64> = (0..16).map(|_| rng.random_range(0.1..0.99)).collect();
        let profile = SqueezingProfile::new(s).unwrap();
        let o = haar_orthogonal(&mut rng, 16);
        round_trip(&profile, ModeUnitary::from_real(&o).unwrap());
    }
}

#[test]
fn shipped_resource_has_twelve_squeezed_modes() {
    let spec = ResourceSpec::standard();
    let modes = eigenmode_extract(&build_pixel_covariance(&spec).unwrap());
    assert_eq!(modes.squeezed_count(1e-9), 12);
    assert_eq!(
        modes
            .p_variances
            .iter()
            .filter(|v| (**v - 1.0).abs() < 1e-10)
            .count(),
        4
    );
    assert!((modes.p_variances[0] - 0.21878).abs() < 1e-5);
    round_trip(&spec.profile, default_usqz(16));
}

#[test]
fn detection_loss_lowers_leading_squeezing() {
    let base = ResourceSpec::standard();
    let spec = ResourceSpec::new(base.profile, base.u_sqz, vec![0.15; 16], 0.0).unwrap();
    let modes = eigenmode_extract(&build_pixel_covariance(&spec).unwrap());
    let db = 10.0 * modes.p_variances[0].log10();
    assert!((db + 4.74).abs() < 5e-3, "{db}");
    // Uniform loss keeps the eigenbasis.
    assert!(modes.residual < 1e-10);
}
