use ddpmix::measure::{sample_marginal, StickConfig};
use ddpmix::mixture::{density_eval, mean_functional, simulate_toy, toy_mean, CenteringMeasure};
use ddpmix::numerics::GaussLegendre;
use ddpmix::stats::mean_estimate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, StudentsT};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn centering() -> CenteringMeasure {
    CenteringMeasure::new(0.5, 0.5, 3.0, 2.0).unwrap()
}

#[test]
fn prior_predictive_density_is_student_t() {
    let g = centering();
    let sc = StickConfig::dirichlet(1.0, 0.5).unwrap();
    let mut r = rng(1);
    let ys = [-1.0, 0.5, 2.0];
    let mut vals = vec![Vec::new(); ys.len()];
    for _ in 0..20_000 {
        let st = sample_marginal(&sc, |r: &mut ChaCha8Rng| g.sample(r), 1e-8, &mut r).unwrap();
        for (k, &y) in ys.iter().enumerate() {
            vals[k].push(density_eval(&st, 0, y).normalized);
        }
    }
    // y - m ~ t with 2 shape dof, scale^2 = rate (1 + kappa) / (shape kappa)
    let scale = (g.rate * (1.0 + g.kappa0) / (g.shape * g.kappa0)).sqrt();
    let t = StudentsT::new(g.mean0, scale, 2.0 * g.shape).unwrap();
    for (k, &y) in ys.iter().enumerate() {
        let e = mean_estimate(&vals[k]);
        assert!(e.z(t.pdf(y)).abs() <= 3.0, "y = {y}: {} ± {} vs {}", e.value, e.se, t.pdf(y));
    }
}

#[test]
fn density_and_mean_functional_agree_with_quadrature() {
    let g = centering();
    let sc = StickConfig::dirichlet(2.0, 1.0).unwrap();
    let mut r = rng(2);
    let gl = GaussLegendre::new(20);
    for _ in 0..20 {
        let st = sample_marginal(&sc, |r: &mut ChaCha8Rng| g.sample(r), 1e-4, &mut r).unwrap();
        let spread = st.atoms.iter().map(|x| x.mean.abs() + 12.0 / x.precision.sqrt()).fold(0.0, f64::max);
        let mass = gl.integrate(|y| density_eval(&st, 0, y).normalized, -spread, spread, 2000);
        let first = gl.integrate(|y| y * density_eval(&st, 0, y).normalized, -spread, spread, 2000);
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        assert!((first - mean_functional(&st, 0)).abs() < 1e-6, "{first} vs {}", mean_functional(&st, 0));
        assert!(density_eval(&st, 0, 0.0).raw >= 0.0);
    }
}

#[test]
fn toy_draws_are_centred_on_the_mean_curve() {
    let data = simulate_toy(3, 100_000, 2.0, &mut rng(3)).unwrap();
    for (t, ys) in data.times().iter().zip(data.observations()) {
        let e = mean_estimate(ys);
        let tol = 3.0 * (0.1f64 / ys.len() as f64).sqrt();
        assert!((e.value - toy_mean(*t)).abs() <= tol, "t = {t}: {} vs {}", e.value, toy_mean(*t));
    }
}
