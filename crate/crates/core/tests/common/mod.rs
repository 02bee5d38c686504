#![allow(dead_code)]

pub mod oracles;

use ddpmix::data::TimeGridDataset;
use ddpmix::gibbs::{gibbs_sweep, sample_prior_path, AdaptiveMh, ChainState, GammaPrior, SamplerConfig};
use ddpmix::measure::{MeasureState, StickConfig, StickKind, TimeScale};
use ddpmix::mixture::{CenteringMeasure, Kernel};
use ddpmix::numerics::sample_log_weights;
use ddpmix::stats::{batch_means_estimate, mean_estimate, Estimate};
use rand::distr::Open01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Prints one aligned result line and returns the flag.
pub fn report(name: &str, pass: bool, detail: &str) -> bool {
    println!("{:<6} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

/// Miniature closed-truncation problem used by the joint-distribution test.
pub fn geweke_setup(n_times: usize, m_cap: usize) -> (TimeGridDataset, SamplerConfig) {
    let times: Vec<f64> = (0..n_times).map(|i| i as f64).collect();
    let data = TimeGridDataset::new(times, vec![vec![0.0]; n_times]).unwrap();
    let cfg = SamplerConfig {
        stick_config: StickConfig::new(StickKind::Dirichlet { theta: 1.0 }, TimeScale::Shared(1.0)).unwrap(),
        centering: CenteringMeasure::new(0.0, 0.5, 3.0, 3.0).unwrap(),
        theta_prior: GammaPrior::new(4.0, 4.0).unwrap(),
        c_prior: GammaPrior::new(4.0, 4.0).unwrap(),
        m_cap,
        truncate_at_cap: true,
        burn_in: 0,
        iters: 1,
        thin: 1,
        ..SamplerConfig::default()
    };
    (data, cfg)
}

/// Exact draw of the full closed-truncation state from the prior.
pub fn prior_state(data: &TimeGridDataset, cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> ChainState {
    let theta = cfg.samples_theta().then(|| cfg.theta_prior.sample(rng)).or(cfg.fix_theta);
    let c = cfg.samples_c().then(|| cfg.c_prior.sample(rng)).or(cfg.fix_c);
    let sc = cfg.sticks_at(theta, c);
    let g = cfg.g().unwrap();
    let psi = cfg.psi().unwrap();
    let gaps = data.gaps();
    let m = cfg.m_cap;
    let mut sticks = Vec::new();
    let mut augs = Vec::new();
    for j in 1..m {
        let (p, a) = sample_prior_path(&gaps, &sc.params(j).unwrap(), &g, rng);
        sticks.push(p);
        augs.push(a);
    }
    let atoms = (0..m).map(|_| cfg.centering.sample(rng)).collect();
    let measure = MeasureState { atoms, sticks, times: data.times().to_vec(), closed: true };
    let mut s = Vec::new();
    let mut u = Vec::new();
    for (i, ys) in data.observations().iter().enumerate() {
        let lw: Vec<f64> = measure.weights_at(i).weights.iter().map(|w| w.ln()).collect();
        for _ in ys {
            let k = sample_log_weights(&lw, rng).unwrap() + 1;
            s.push(k);
            u.push(psi.value(k as u64) * rng.sample::<f64, _>(Open01));
        }
    }
    ChainState {
        m,
        s,
        u,
        measure,
        trans_aug: augs,
        theta,
        c,
        theta_mh: AdaptiveMh::new(cfg.mh_initial_step),
        c_mh: AdaptiveMh::new(cfg.mh_initial_step),
    }
}

/// `y ~ K(. | x_s)` for every observation.
pub fn regenerate_data(state: &ChainState, data: &TimeGridDataset, rng: &mut ChaCha8Rng) -> TimeGridDataset {
    let mut obs = data.observations().to_vec();
    let mut o = 0;
    for ys in obs.iter_mut() {
        for y in ys.iter_mut() {
            let x = state.measure.atoms[state.s[o] - 1];
            *y = Normal::new(x.mean(), x.precision.recip().sqrt()).unwrap().sample(rng);
            o += 1;
        }
    }
    TimeGridDataset::new(data.times().to_vec(), obs).unwrap()
}

pub type Stat = fn(&ChainState) -> f64;

pub fn geweke_stats() -> Vec<(&'static str, Stat)> {
    vec![
        ("theta", |s| s.theta.unwrap()),
        ("c", |s| s.c.unwrap()),
        ("v1(t1)", |s| s.measure.sticks[0][0]),
        ("w1(t1)", |s| s.measure.weights_at(0).weights[0]),
        ("w2(t1)", |s| s.measure.weights_at(0).weights[1]),
        ("v1(tn)", |s| *s.measure.sticks[0].last().unwrap()),
        ("x1 mean", |s| s.measure.atoms[0].mean),
    ]
}

pub struct GewekeComparison {
    pub name: String,
    pub moment: usize,
    pub marginal: Estimate,
    pub successive: Estimate,
}

impl GewekeComparison {
    pub fn z(&self) -> f64 {
        (self.marginal.value - self.successive.value) / (self.marginal.se.powi(2) + self.successive.se.powi(2)).sqrt()
    }
}

/// Marginal-conditional versus successive-conditional simulation; first and
/// second moments of every statistic.
pub fn geweke(data: &TimeGridDataset, cfg: &SamplerConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<GewekeComparison> {
    let stats = geweke_stats();
    let mut marg = vec![Vec::with_capacity(n); stats.len()];
    for _ in 0..n {
        let st = prior_state(data, cfg, rng);
        for (k, (_, f)) in stats.iter().enumerate() {
            marg[k].push(f(&st));
        }
    }
    let mut succ = vec![Vec::with_capacity(n); stats.len()];
    let mut st = prior_state(data, cfg, rng);
    let mut y = regenerate_data(&st, data, rng);
    for _ in 0..n {
        gibbs_sweep(&mut st, &y, cfg, rng, None).unwrap();
        y = regenerate_data(&st, data, rng);
        for (k, (_, f)) in stats.iter().enumerate() {
            succ[k].push(f(&st));
        }
    }
    let mut out = Vec::new();
    for (k, (name, _)) in stats.iter().enumerate() {
        for moment in [1, 2] {
            let pm: Vec<f64> = marg[k].iter().map(|v| v.powi(moment as i32)).collect();
            let ps: Vec<f64> = succ[k].iter().map(|v| v.powi(moment as i32)).collect();
            out.push(GewekeComparison {
                name: name.to_string(),
                moment,
                marginal: mean_estimate(&pm),
                successive: batch_means_estimate(&ps, 50),
            });
        }
    }
    out
}
