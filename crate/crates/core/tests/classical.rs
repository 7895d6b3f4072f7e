use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use anonq::adversary::{Coalition, MaliciousAgentPolicy};
use anonq::classical::{
    notification_inputs, parity, parity_with_shares, random_agent, random_bit, BroadcastMode, OrConfig,
    RandomBitDistribution,
};
use anonq::network::{AgentId, Network, Ordering};
use anonq::protocols::sample_angles;
use anonq::rng::{seeded, trial_rng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn honest_net(n: usize) -> Network {
    Network::new(n, &BTreeSet::new(), true).unwrap()
}

fn bits(x: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (x >> i) & 1 == 1).collect()
}

/// Every n-bit row with XOR equal to `bit`.
fn rows(n: usize, bit: bool) -> Vec<u64> {
    (0..1u64 << n).filter(|r| (r.count_ones() % 2 == 1) == bit).collect()
}

/// Distribution of everything agent `observer` sees, over all share choices.
fn view_distribution(n: usize, inputs: &[bool], observer: AgentId, mode: &BroadcastMode) -> BTreeMap<String, usize> {
    let per_agent: Vec<Vec<u64>> = inputs.iter().map(|&b| rows(n, b)).collect();
    let mut counts = BTreeMap::new();
    let total: usize = per_agent.iter().map(Vec::len).product();
    for mut idx in 0..total {
        let shares: Vec<u64> = per_agent
            .iter()
            .map(|opts| {
                let r = opts[idx % opts.len()];
                idx /= opts.len();
                r
            })
            .collect();
        let mut net = honest_net(n);
        parity_with_shares(&mut net, inputs, &shares, mode, None).unwrap();
        let view: String = net
            .transcript()
            .observed_by(observer)
            .iter()
            .map(|m| format!("{}>{:?}:{} ", m.from, m.to, m.payload))
            .collect();
        *counts.entry(view).or_insert(0) += 1;
    }
    counts
}

#[test]
fn parity_view_depends_only_on_own_input_and_result() {
    let n = 3;
    let observer = AgentId(3);
    for mode in [BroadcastMode::Simultaneous, BroadcastMode::Ordered(Ordering::natural(n))] {
        for x in 0..1usize << n {
            for y in 0..1usize << n {
                let (a, b) = (bits(x, n), bits(y, n));
                let same_own = a[2] == b[2];
                let same_parity = x.count_ones() % 2 == y.count_ones() % 2;
                if same_own && same_parity {
                    assert_eq!(view_distribution(n, &a, observer, &mode), view_distribution(n, &b, observer, &mode));
                }
            }
        }
    }
}

#[test]
fn parity_is_correct_for_all_inputs_and_skips() {
    let coalition = Coalition::honest();
    let mut rng = seeded(1);
    for n in 2..=5 {
        for x in 0..1usize << n {
            let inputs = bits(x, n);
            let expected = x.count_ones() % 2 == 1;
            for skip in std::iter::once(None).chain((1..=n).map(|a| Some(AgentId(a)))) {
                let mut net = honest_net(n);
                let run = parity(&mut net, &inputs, &BroadcastMode::Simultaneous, skip, &coalition, &mut rng).unwrap();
                assert_eq!(run.full_result, expected);
                if let Some(s) = skip {
                    assert_eq!(run.announced[s.0 - 1], None);
                    assert_eq!(run.output_for(s), expected);
                }
            }
        }
    }
}

#[test]
fn tampered_shares_flip_the_result() {
    let mut policies = BTreeMap::new();
    policies.insert(2, MaliciousAgentPolicy { tamper_parity_shares: true, ..Default::default() });
    let coalition = Coalition::new(3, policies).unwrap();
    let mut net = Network::new(3, &BTreeSet::from([2]), true).unwrap();
    let run = parity(&mut net, &[true, false, false], &BroadcastMode::Simultaneous, None, &coalition, &mut seeded(4)).unwrap();
    assert!(!run.full_result);
    assert_eq!(run.malformed, vec![AgentId(2)]);
}

#[test]
fn notification_enumerates_to_one_minus_two_to_minus_s() {
    let n = 4;
    let (sender, r) = (AgentId(2), AgentId(4));
    let coalition = Coalition::honest();
    for s in 1..=5 {
        let mut hits = 0;
        for coins in 0..1usize << s {
            let mut y = vec![false; n];
            for i in (1..=n).map(AgentId) {
                for round in 0..s {
                    let coin = i == r && (coins >> round) & 1 == 1;
                    let inputs = notification_inputs(n, sender, r, i, coin);
                    if i != r {
                        assert!(inputs.iter().all(|&b| !b));
                    }
                    let mut net = honest_net(n);
                    let mut rng = trial_rng(5, coins as u64, round as u64);
                    let run = parity(&mut net, &inputs, &BroadcastMode::Ordered(Ordering::natural(n)), Some(i), &coalition, &mut rng).unwrap();
                    y[i.0 - 1] |= run.output_for(i);
                }
            }
            assert!(y.iter().enumerate().all(|(j, &b)| j + 1 == r.0 || !b));
            hits += y[r.0 - 1] as usize;
        }
        assert_eq!(hits, (1 << s) - 1, "S = {s}");
    }
}

#[test]
fn random_agent_is_uniform() {
    let n = 5;
    let trials = 3000;
    let mut counts = vec![0u64; n];
    for t in 0..trials {
        let mut rng = trial_rng(6, 0, t);
        let mut net = Network::new(n, &BTreeSet::new(), false).unwrap();
        let run = random_agent(&mut net, AgentId(1), 4, OrConfig::default(), &Coalition::honest(), &mut rng).unwrap();
        counts[run.agent.unwrap().0 - 1] += 1;
    }
    let expected = trials as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((n - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 1e-3, "χ² = {chi2}, p = {p}, counts {counts:?}");
}

#[test]
fn random_bit_follows_the_sender_distribution() {
    let d = RandomBitDistribution::new(0.25).unwrap();
    let trials = 4000;
    let mut zeros = 0;
    for t in 0..trials {
        let mut rng = trial_rng(7, 0, t);
        let mut net = Network::new(3, &BTreeSet::new(), false).unwrap();
        let run = random_bit(&mut net, AgentId(2), d, 8, OrConfig::default(), &Coalition::honest(), &mut rng).unwrap();
        assert!(run.consistent());
        zeros += !run.output as u64;
    }
    let interval = anonq::stats::wilson99(zeros, trials);
    assert!(interval.contains(0.25), "{zeros}/{trials}");
}

/// Kolmogorov–Smirnov statistic of `xs` against the uniform law on [0, π).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x / PI;
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn angle_marginals_are_uniform() {
    let n = 4;
    let samples = 4000;
    let mut rng = seeded(8);
    let draws: Vec<_> = (0..samples).map(|_| sample_angles(n, &mut rng).unwrap()).collect();
    // 1% critical value of the one-sample KS statistic.
    let critical = 1.628 / (samples as f64).sqrt();
    for j in [0, n - 1] {
        let d = ks_uniform(draws.iter().map(|a| a.thetas[j]).collect());
        assert!(d < critical, "angle {j}: D = {d}");
    }
    for a in &draws {
        let total: f64 = a.thetas.iter().sum();
        assert!((total / PI - a.multiple as f64).abs() < 1e-9);
    }
}
