//! Exact-target checks of the individual Gibbs updates. Targets are computed
//! here from textbook densities, independently of the sampler's own algebra.

use ddpmix::data::TimeGridDataset;
use ddpmix::gibbs::{
    init_chain, k_log_masses, update_hyperparams, update_locations, update_membership, update_slice_and_truncation,
    update_stick_values, update_transition_latents, AdaptiveMh, ChainState, GammaPrior, SamplerConfig,
};
use ddpmix::measure::{MeasureState, StickConfig};
use ddpmix::mixture::{CenteringMeasure, ClusterStats, KernelParam};
use ddpmix::numerics::sample_log_weights;
use ddpmix::stats::{chi_square_gof, ks_one_sample, ks_p_value, mean_estimate, Estimate};
use ddpmix::wf::{SeriesOptions, TransitionAug, TransitionKernel, WFParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Beta, Binomial, Continuous, ContinuousCDF, Discrete, Gamma, NegativeBinomial, Normal};

pub struct Oracle {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

const MIN_P: f64 = 1e-3;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    Beta::new(a, b).unwrap().ln_pdf(x)
}

/// `ln r_tau(d)` as a Negative-Binomial count of failures.
fn ln_nb(d: u64, size: f64, c_tau: f64) -> f64 {
    NegativeBinomial::new(size, -(-c_tau).exp_m1()).unwrap().ln_pmf(d)
}

fn normal_pdf(y: f64, mean: f64, precision: f64) -> f64 {
    Normal::new(mean, precision.recip().sqrt()).unwrap().pdf(y)
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn total_variation(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    0.5 * counts.iter().zip(probs).map(|(&c, &p)| (c as f64 / n as f64 - p).abs()).sum::<f64>()
}

/// Single-stick closed state on the given times with one observation per time.
fn single_stick(times: &[f64], path: Vec<f64>, augs: Vec<TransitionAug>, s: Vec<usize>) -> ChainState {
    let atom = KernelParam::new(0.0, 1.0).unwrap();
    ChainState {
        m: 2,
        u: vec![0.5; s.len()],
        s,
        measure: MeasureState { atoms: vec![atom; 2], sticks: vec![path], times: times.to_vec(), closed: true },
        trans_aug: vec![augs],
        theta: None,
        c: None,
        theta_mh: AdaptiveMh::new(0.5),
        c_mh: AdaptiveMh::new(0.5),
    }
}

fn fixed_config(theta: f64, c: f64) -> SamplerConfig {
    SamplerConfig {
        stick_config: StickConfig::dirichlet(theta, c).unwrap(),
        fix_theta: Some(theta),
        fix_c: Some(c),
        m_cap: 2,
        truncate_at_cap: true,
        ..SamplerConfig::default()
    }
}

fn start_aug() -> TransitionAug {
    TransitionAug { o: 0.5, k: 0, d: 0 }
}

/// `k | d, v0, v1` against `Bin(k | d, v0) Beta(v1 | a + k, b + d - k)`.
pub fn k_law(seed: u64) -> Oracle {
    let mut r = rng(seed);
    let p = WFParams::new(1.0, 2.0, 1.0).unwrap();
    let (v0, v1) = (0.3, 0.6);
    let n = 100_000;
    let mut parts = Vec::new();
    let mut pass = true;
    for d in [1u64, 6] {
        let exact = normalize(
            (0..=d)
                .map(|k| {
                    Binomial::new(v0, d).unwrap().pmf(k)
                        * ln_beta_pdf(v1, p.a() + k as f64, p.b() + (d - k) as f64).exp()
                })
                .collect(),
        );
        let lm = k_log_masses(d, v0, v1, &p);
        let mut counts = vec![0u64; d as usize + 1];
        for _ in 0..n {
            counts[sample_log_weights(&lm, &mut r).unwrap()] += 1;
        }
        if d == 1 {
            let x: Vec<f64> = (0..n).map(|i| if (i as u64) < counts[1] { 1.0 } else { 0.0 }).collect();
            let e = mean_estimate(&x);
            let z = e.z(exact[1]);
            pass &= z.abs() <= 3.0;
            parts.push(format!("d=1 P(k=1) {:.4} vs {:.4} z={z:.2}", e.value, exact[1]));
        } else {
            let (_, df, pv) = chi_square_gof(&counts, &exact, 5.0);
            pass &= pv > MIN_P;
            parts.push(format!("d={d} chi2 df={df} p={pv:.3}"));
        }
    }
    Oracle { name: "k_law", pass, detail: parts.join("; ") }
}

/// With both stick values fixed, the latent Gibbs chain leaves
/// `P(d | v0, v1) = sum_k r_tau(d) Bin(k | d, v0) Beta(v1 | a + k, b + d - k)`
/// invariant.
pub fn d_marginal(seed: u64) -> Oracle {
    let mut r = rng(seed);
    let (theta, c, tau) = (2.0, 1.0, 0.4);
    let (v0, v1) = (0.3, 0.6);
    let (a, b) = (1.0, theta);
    let d_top = 200u64;
    let exact = normalize(
        (0..=d_top)
            .map(|d| {
                let s: f64 = (0..=d)
                    .map(|k| {
                        Binomial::new(v0, d).unwrap().pmf(k) * ln_beta_pdf(v1, a + k as f64, b + (d - k) as f64).exp()
                    })
                    .sum();
                ln_nb(d, a + b, c * tau).exp() * s
            })
            .collect(),
    );
    let times = [0.0, tau];
    let data = TimeGridDataset::new(times.to_vec(), vec![vec![0.0]; 2]).unwrap();
    let cfg = fixed_config(theta, c);
    let mut st = single_stick(&times, vec![v0, v1], vec![start_aug()], vec![1, 1]);
    let (burn, n, thin) = (1_000, 100_000, 10);
    let mut counts = vec![0u64; d_top as usize + 1];
    for it in 0..burn + n * thin {
        update_transition_latents(&mut st, &data, &cfg, &mut r).unwrap();
        if it >= burn && (it - burn) % thin == 0 {
            counts[(st.trans_aug[0][0].d.min(d_top)) as usize] += 1;
        }
    }
    let (stat, df, pv) = chi_square_gof(&counts, &exact, 5.0);
    Oracle { name: "d_marginal", pass: pv > MIN_P, detail: format!("chi2 {stat:.1} df={df} p={pv:.3}") }
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Two-time single-stick chain of latent and stick updates against
/// `Beta(v1 | 1, theta) p_tau(v2 | v1) v1 (1 - v2)` on a 50 x 50 grid
/// (observation 1 sits on the stick, observation 2 beyond it).
pub fn stick_pair(seed: u64) -> Oracle {
    let (theta, c, tau) = (2.0, 1.0, 0.5);
    let p = WFParams::new(1.0, theta, c).unwrap();
    let bins = 50usize;
    let h = 1.0 / bins as f64;
    let nodes: Vec<(usize, f64, f64)> = (0..bins)
        .flat_map(|i| GL4.iter().map(move |&(x, w)| (i, (i as f64 + 0.5 + 0.5 * x) * h, 0.5 * w * h)))
        .collect();
    let mut cell = vec![0.0; bins * bins];
    for &(i, x, wx) in &nodes {
        let kernel = TransitionKernel::new(x, tau, &p, SeriesOptions::with_tol(1e-14)).unwrap();
        let fx = ln_beta_pdf(x, 1.0, theta).exp() * x * wx;
        for &(j, y, wy) in &nodes {
            cell[i * bins + j] += fx * kernel.density(y) * (1.0 - y) * wy;
        }
    }
    let exact = normalize(cell);

    let times = [0.0, tau];
    let data = TimeGridDataset::new(times.to_vec(), vec![vec![0.0]; 2]).unwrap();
    let cfg = fixed_config(theta, c);
    let (chains, burn, n) = (16u64, 1_000, 500_000);
    let counts = (0..chains)
        .into_par_iter()
        .map(|ch| {
            let mut r = rng(seed);
            r.set_stream(ch + 1);
            let mut st = single_stick(&times, vec![0.5, 0.5], vec![start_aug()], vec![1, 2]);
            let mut counts = vec![0u64; bins * bins];
            for it in 0..burn + n {
                update_transition_latents(&mut st, &data, &cfg, &mut r).unwrap();
                update_stick_values(&mut st, &data, &cfg, &mut r).unwrap();
                if it >= burn {
                    let path = &st.measure.sticks[0];
                    let i = ((path[0] * bins as f64) as usize).min(bins - 1);
                    let j = ((path[1] * bins as f64) as usize).min(bins - 1);
                    counts[i * bins + j] += 1;
                }
            }
            counts
        })
        .reduce(|| vec![0u64; bins * bins], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let tv = total_variation(&counts, &exact);
    Oracle { name: "stick_pair", pass: tv < 0.02, detail: format!("TV {tv:.4} over {} draws", chains as usize * n) }
}

/// Without any stick the concentration chain targets its Gamma prior.
pub fn theta_prior(seed: u64) -> Oracle {
    let mut r = rng(seed);
    let prior = GammaPrior::new(2.0, 0.5).unwrap();
    let cfg = SamplerConfig { theta_prior: prior, fix_c: Some(1.0), ..SamplerConfig::default() };
    let data = TimeGridDataset::new(vec![0.0, 1.0], vec![vec![0.0]; 2]).unwrap();
    let mut st = single_stick(&[0.0, 1.0], vec![], vec![], vec![1, 1]);
    st.measure.sticks.clear();
    st.trans_aug.clear();
    st.theta = Some(1.0);
    st.c = Some(1.0);
    let (burn, n, thin) = (1_000, 100_000, 20);
    let mut draws = Vec::with_capacity(n);
    for it in 0..burn + n * thin {
        update_hyperparams(&mut st, &data, &cfg, &mut r, None).unwrap();
        if it >= burn && (it - burn) % thin == 0 {
            draws.push(st.theta.unwrap());
        }
    }
    let g = Gamma::new(prior.shape, prior.rate).unwrap();
    let d = ks_one_sample(&draws, |x| g.cdf(x));
    let pv = ks_p_value(d, n as f64);
    Oracle { name: "theta_prior", pass: pv > MIN_P, detail: format!("KS D={d:.4} p={pv:.3}") }
}

/// `(theta, c)` given one stick over three times and fixed latents, against
/// the normalized target on a grid; marginal histograms in total variation.
pub fn hyper_posterior(seed: u64) -> Oracle {
    let mut r = rng(seed);
    let times = [0.0, 0.5, 1.0];
    let path = vec![0.3, 0.5, 0.2];
    let kd = [(1u64, 2u64), (0, 3)];
    let prior = GammaPrior::new(2.0, 1.0).unwrap();
    let ln_target = |theta: f64, c: f64| {
        let g = Gamma::new(prior.shape, prior.rate).unwrap();
        let mut lp = g.ln_pdf(theta) + g.ln_pdf(c) + ln_beta_pdf(path[0], 1.0, theta);
        for (i, &(k, d)) in kd.iter().enumerate() {
            let tau = times[i + 1] - times[i];
            lp += ln_nb(d, 1.0 + theta, c * tau) + ln_beta_pdf(path[i + 1], 1.0 + k as f64, theta + (d - k) as f64);
        }
        lp
    };
    // grid of cell midpoints on (0, 20]^2; histogram bins of width 0.2 on [0, 8] plus overflow
    let (step, n_grid, n_bins, width) = (0.02, 1000usize, 40usize, 0.2);
    let bin = |x: f64| ((x / width) as usize).min(n_bins);
    let mut exact_t = vec![0.0; n_bins + 1];
    let mut exact_c = vec![0.0; n_bins + 1];
    for i in 0..n_grid {
        let t = (i as f64 + 0.5) * step;
        for j in 0..n_grid {
            let c = (j as f64 + 0.5) * step;
            let f = ln_target(t, c).exp();
            exact_t[bin(t)] += f;
            exact_c[bin(c)] += f;
        }
    }
    let (exact_t, exact_c) = (normalize(exact_t), normalize(exact_c));

    let data = TimeGridDataset::new(times.to_vec(), vec![vec![0.0]; 3]).unwrap();
    let cfg = SamplerConfig { theta_prior: prior, c_prior: prior, ..SamplerConfig::default() };
    let augs = kd.iter().map(|&(k, d)| TransitionAug { o: 0.0, k, d }).collect();
    let mut st = single_stick(&times, path.clone(), augs, vec![1; 3]);
    st.theta = Some(1.0);
    st.c = Some(1.0);
    let (burn, n, thin) = (1_000, 400_000, 5);
    let mut ct = vec![0u64; n_bins + 1];
    let mut cc = vec![0u64; n_bins + 1];
    for it in 0..burn + n * thin {
        update_hyperparams(&mut st, &data, &cfg, &mut r, None).unwrap();
        if it >= burn && (it - burn) % thin == 0 {
            ct[bin(st.theta.unwrap())] += 1;
            cc[bin(st.c.unwrap())] += 1;
        }
    }
    let (tv_t, tv_c) = (total_variation(&ct, &exact_t), total_variation(&cc, &exact_c));
    Oracle {
        name: "hyper_posterior",
        pass: tv_t < 0.03 && tv_c < 0.03,
        detail: format!("TV theta {tv_t:.4}, TV c {tv_c:.4}"),
    }
}

/// Label draws against `w_j / psi_j N(y | x_j)` over the sliced candidates.
pub fn membership(seed: u64) -> Oracle {
    let mut r = rng(seed);
    let v = [0.3, 0.4, 0.5];
    let atoms = [(-1.0, 1.0), (0.0, 4.0), (1.0, 0.5), (2.0, 2.0)];
    let y = 0.4;
    let cfg = SamplerConfig { m_cap: 4, truncate_at_cap: true, ..SamplerConfig::default() };
    let eta = cfg.slice_eta;
    let mut rest = 1.0;
    let mut w = Vec::new();
    for &vj in &v {
        w.push(rest * vj);
        rest *= 1.0 - vj;
    }
    w.push(rest);
    let exact = normalize(
        (0..4).map(|j| w[j] * (eta * (j + 1) as f64).exp() * normal_pdf(y, atoms[j].0, atoms[j].1)).collect(),
    );
    let data = TimeGridDataset::new(vec![0.0], vec![vec![y]]).unwrap();
    let mut st = ChainState {
        m: 4,
        s: vec![1],
        u: vec![0.01],
        measure: MeasureState {
            atoms: atoms.iter().map(|&(m, p)| KernelParam::new(m, p).unwrap()).collect(),
            sticks: v.iter().map(|&x| vec![x]).collect(),
            times: vec![0.0],
            closed: true,
        },
        trans_aug: vec![vec![]; 3],
        theta: None,
        c: None,
        theta_mh: AdaptiveMh::new(0.5),
        c_mh: AdaptiveMh::new(0.5),
    };
    let mut counts = vec![0u64; 4];
    for _ in 0..100_000 {
        update_membership(&mut st, &data, &cfg, &mut r).unwrap();
        counts[st.s[0] - 1] += 1;
    }
    let (stat, df, pv) = chi_square_gof(&counts, &exact, 5.0);
    Oracle { name: "membership", pass: pv > MIN_P, detail: format!("chi2 {stat:.2} df={df} p={pv:.3}") }
}

fn simpson_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect()
}

/// Atom update for a three-observation cluster: the conjugate posterior
/// density against prior times likelihood normalized by 2-D Simpson
/// quadrature, and sampled moments against quadrature moments.
pub fn locations(seed: u64) -> Oracle {
    let mut r = rng(seed);
    let (mean0, kappa0, shape, rate) = (0.0, 0.5, 3.0, 2.0);
    let ys = [0.2, 1.1, 0.7];
    let unnorm = |m: f64, tau: f64| {
        if tau <= 0.0 {
            return 0.0;
        }
        let prior = Gamma::new(shape, rate).unwrap().pdf(tau) * normal_pdf(m, mean0, kappa0 * tau);
        prior * ys.iter().map(|&y| normal_pdf(y, m, tau)).product::<f64>()
    };
    let (m_lo, m_hi, t_hi, n) = (-15.0, 15.0, 15.0, 2000usize);
    let (hm, ht) = ((m_hi - m_lo) / n as f64, t_hi / n as f64);
    let w = simpson_weights(n);
    let (mut z, mut e_m, mut e_t) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let m = m_lo + i as f64 * hm;
        for j in 0..=n {
            let t = j as f64 * ht;
            let f = w[i] * w[j] * unnorm(m, t);
            z += f;
            e_m += f * m;
            e_t += f * t;
        }
    }
    let (e_m, e_t) = (e_m / z, e_t / z);
    let z = z * hm * ht / 9.0;

    let g = CenteringMeasure::new(mean0, kappa0, shape, rate).unwrap();
    let post = g.posterior(&ClusterStats::from_slice(&ys));
    let mut worst = 0.0f64;
    for (m, t) in [(0.6, 1.0), (0.0, 0.5), (1.2, 2.5), (-1.0, 0.2), (0.7, 4.0)] {
        let lib = post.ln_density(&KernelParam::new(m, t).unwrap()).exp();
        worst = worst.max((lib - unnorm(m, t) / z).abs());
    }

    let data = TimeGridDataset::new(vec![0.0], vec![ys.to_vec()]).unwrap();
    let cfg = SamplerConfig { centering: g, m_cap: 2, truncate_at_cap: true, ..SamplerConfig::default() };
    let mut st = single_stick(&[0.0], vec![0.5], vec![], vec![1; 3]);
    let n_draws = 100_000;
    let (mut ms, mut ts) = (Vec::with_capacity(n_draws), Vec::with_capacity(n_draws));
    for _ in 0..n_draws {
        update_locations(&mut st, &data, &cfg, &mut r).unwrap();
        ms.push(st.measure.atoms[0].mean);
        ts.push(st.measure.atoms[0].precision);
    }
    let (em, et): (Estimate, Estimate) = (mean_estimate(&ms), mean_estimate(&ts));
    let (zm, zt) = (em.z(e_m), et.z(e_t));
    Oracle {
        name: "locations",
        pass: worst < 1e-6 && zm.abs() <= 3.0 && zt.abs() <= 3.0,
        detail: format!("density max err {worst:.1e}; E[mean] z={zm:.2}; E[precision] z={zt:.2}"),
    }
}

/// Slice variables are uniform below `psi_s`, and the open truncation equals
/// the largest candidate count.
pub fn slice_truncation(seed: u64) -> Oracle {
    let mut r = rng(seed);
    let times = vec![0.0, 0.5, 1.0, 1.5];
    let obs = vec![vec![0.1, 2.0], vec![-0.3], vec![1.5, 1.7, 0.0], vec![0.4]];
    let data = TimeGridDataset::new(times, obs).unwrap();
    let cfg = SamplerConfig { m_cap: 10_000, ..SamplerConfig::default() };
    let eta = cfg.slice_eta;
    let mut st = init_chain(&data, &cfg, &mut r).unwrap();
    let mut scaled = Vec::new();
    let mut m_ok = true;
    for _ in 0..20_000 {
        update_slice_and_truncation(&mut st, &data, &cfg, &mut r).unwrap();
        let mut top = 0usize;
        for (&u, &s) in st.u.iter().zip(&st.s) {
            scaled.push(u / (-eta * s as f64).exp());
            top = top.max(((-u.ln() / eta).ceil() - 1.0) as usize);
        }
        m_ok &= st.m == top && st.s.iter().all(|&s| s <= st.m);
        update_membership(&mut st, &data, &cfg, &mut r).unwrap();
    }
    let d = ks_one_sample(&scaled, |x| x.clamp(0.0, 1.0));
    let pv = ks_p_value(d, scaled.len() as f64);
    Oracle {
        name: "slice_truncation",
        pass: pv > MIN_P && m_ok,
        detail: format!("u / psi_s KS D={d:.4} p={pv:.3}; truncation matches count: {m_ok}"),
    }
}

pub fn all(seed: u64) -> Vec<Oracle> {
    vec![
        k_law(seed),
        d_marginal(seed + 1),
        stick_pair(seed + 2),
        theta_prior(seed + 3),
        hyper_posterior(seed + 4),
        membership(seed + 5),
        locations(seed + 6),
        slice_truncation(seed + 7),
    ]
}
