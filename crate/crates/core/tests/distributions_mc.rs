mod common;

use aft_core::distributions::{
    gaussian_copula_sample, normal_cdf, sample_standard_extreme_value, PositiveLaw,
};
use aft_core::scm::presets;
use aft_core::{EffectLaw, FrailtyLaw, GaussianCopula, StreamSeed};
use common::{kendall_tau_b, mean_se, sorted};
use rand::distr::Distribution;

const N: usize = 1_000_000;

fn draws<L: PositiveLaw>(law: &L, seed: u64) -> Vec<f64> {
    let s = law.sampler().unwrap();
    let mut rng = StreamSeed(seed).rng(0);
    (0..N).map(|_| s.sample(&mut rng)).collect()
}

fn frailties() -> Vec<FrailtyLaw> {
    let mut v = vec![];
    for r in [0.5, 1.0, 2.0] {
        v.push(FrailtyLaw::Gamma { variance: r });
        v.push(FrailtyLaw::InverseGaussian { variance: r });
    }
    v
}

#[test]
fn degenerate_is_constant() {
    let d = draws(&FrailtyLaw::Degenerate, 1);
    assert!(d.iter().all(|&x| x == 1.0));
}

#[test]
fn gamma_shape_two_scale_half() {
    // Variance 0.5 is Γ(shape 2, scale 0.5).
    let (m, _) = mean_se(&draws(&FrailtyLaw::Gamma { variance: 0.5 }, 2));
    assert!((m - 1.0).abs() < 0.01);
}

#[test]
fn frailty_moments_within_three_se() {
    for (i, law) in frailties().into_iter().enumerate() {
        let d = draws(&law, 10 + i as u64);
        let (m, se) = mean_se(&d);
        assert!((m - 1.0).abs() < 3.0 * se, "{law:?}: mean {m} se {se}");
        // Sample variance against ρ0, with the fourth-moment standard error.
        let c: Vec<f64> = d.iter().map(|x| (x - m).powi(2)).collect();
        let (v, vse) = mean_se(&c);
        assert!((v - law.variance()).abs() < 3.0 * vse, "{law:?}: var {v} se {vse}");
    }
}

#[test]
fn effect_law_moments() {
    let laws = [presets::bhn_high(), presets::bhn_low(), presets::gamma_effect(1.442, 1.0), presets::gamma_effect(0.693, 0.5)];
    for (i, law) in laws.iter().enumerate() {
        let (m, se) = mean_se(&draws(law, 20 + i as u64));
        assert!((m - law.mean()).abs() < 3.0 * se, "{law:?}: {m} vs {}", law.mean());
    }
    let (m, _) = mean_se(&draws(&presets::bhn_high(), 30));
    assert!((m - 1.430).abs() < 0.01);
}

#[test]
fn bhn_atom_frequencies() {
    let EffectLaw::Bhn { p1, mu1, p2, mu2 } = presets::bhn_high() else { unreachable!() };
    let d = draws(&presets::bhn_high(), 31);
    for (value, p) in [(mu1, p1), (1.0, 1.0 - p1 - p2), (mu2, p2)] {
        let freq = d.iter().filter(|&&x| x == value).count() as f64 / N as f64;
        let se = (p * (1.0 - p) / N as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "atom {value}: {freq} vs {p}");
    }
}

#[test]
fn extreme_value_orientation() {
    let mut rng = StreamSeed(40).rng(0);
    let w: Vec<f64> = (0..N).map(|_| sample_standard_extreme_value(&mut rng)).collect();
    let above = w.iter().filter(|&&x| x.exp() > 1.0).count() as f64 / N as f64;
    assert!((above - (-1.0f64).exp()).abs() < 0.005);
    let w = sorted(w);
    assert!((w[N / 2] - 2f64.ln().ln()).abs() < 0.01);
}

#[test]
fn laplace_transform_matches_monte_carlo() {
    for (i, law) in frailties().into_iter().chain([FrailtyLaw::Degenerate]).enumerate() {
        let d = draws(&law, 50 + i as u64);
        let mut prev = 1.0;
        assert_eq!(law.laplace_transform(0.0).unwrap(), 1.0);
        for s in [0.1, 1.0, 10.0] {
            let closed = law.laplace_transform(s).unwrap();
            let mc = d.iter().map(|u| (-u * s).exp()).sum::<f64>() / N as f64;
            assert!((closed - mc).abs() < 0.003, "{law:?} s={s}: {closed} vs {mc}");
            assert!(closed <= prev);
            prev = closed;
        }
    }
    assert_eq!(FrailtyLaw::Gamma { variance: 1.0 }.laplace_transform(1.0).unwrap(), 0.5);
    let ig = FrailtyLaw::InverseGaussian { variance: 1.0 }.laplace_transform(1.0).unwrap();
    assert!((ig - (1.0 - 3f64.sqrt()).exp()).abs() < 1e-15);
    assert!((ig - 0.4809).abs() < 1e-4);
}

#[test]
fn same_seed_same_sequence() {
    let a = draws(&FrailtyLaw::InverseGaussian { variance: 2.0 }, 77);
    let b = draws(&FrailtyLaw::InverseGaussian { variance: 2.0 }, 77);
    assert_eq!(a, b);
}

fn copula_draws(tau0: f64, tau1: f64, n: usize, seed: u64) -> [Vec<f64>; 3] {
    let mut rng = StreamSeed(seed).rng(0);
    let mut out = [vec![], vec![], vec![]];
    for _ in 0..n {
        let u = gaussian_copula_sample((tau0, tau1), &mut rng).unwrap();
        for k in 0..3 {
            out[k].push(u[k]);
        }
    }
    out
}

fn kolmogorov_uniform(v: &[f64]) -> f64 {
    let s = sorted(v.to_vec());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn copula_kendall_taus_and_margins() {
    for (tau0, tau1) in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5), (-0.3, 0.2)] {
        let [l, u0, u1] = copula_draws(tau0, tau1, 100_000, 60);
        assert!((kendall_tau_b(&l, &u0) - tau0).abs() < 0.01, "tau0 {tau0}");
        assert!((kendall_tau_b(&l, &u1) - tau1).abs() < 0.01, "tau1 {tau1}");
        assert!(kendall_tau_b(&u0, &u1).abs() < 0.01);
        for v in [&l, &u0, &u1] {
            assert!(kolmogorov_uniform(v) < 0.005);
        }
    }
}

#[test]
fn copula_rejects_infeasible_pairs() {
    assert!(GaussianCopula::new(0.6, 0.6).is_err());
    assert!(GaussianCopula::new(1.0, 0.0).is_err());
    assert!(GaussianCopula::new(0.5, 0.5).is_ok());
}

#[test]
fn normal_cdf_reference_values() {
    assert_eq!(normal_cdf(0.0), 0.5);
    assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-9, "{}", normal_cdf(1.959_963_984_540_054) - 0.975);
}
