use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use super::result::{ExperimentResult, Relation, Row};
use super::spec::{ExperimentKind, ExperimentSpec};
use crate::adversary::{
    build_sender_ensemble, craft_state_with_fprime, helstrom_guess_prob, pgm_guess_prob, Coalition,
    MaliciousAgentPolicy, SourceStrategy,
};
use crate::classical::{logical_or, notification, parity, BroadcastMode, OrConfig};
use crate::error::Result;
use crate::network::{AgentId, Network, Ordering};
use crate::orchestrator::{run_protocol5_with, theorem1_bound, AbortReason, ProtocolConfig, Termination};
use crate::protocols::{anonymous_entanglement, epr_pair, estimate_pass_probability};
use crate::quantum::random::with_fidelity;
use crate::quantum::{fidelity, fprime, make_ghz, make_phi, StateVector};
use crate::rng::{trial_rng, SimRng};
use crate::stats::{mean_interval, wilson99, Interval};

/// Fields shared by every row of one grid point.
#[derive(Clone, Copy, Default)]
struct Point {
    index: usize,
    n: Option<usize>,
    k: Option<usize>,
    s: Option<usize>,
    epsilon: Option<f64>,
    delta: Option<f64>,
}

impl Point {
    fn row(&self, kind: ExperimentKind, param: impl Into<String>, trials: u64, estimate: f64, ci: Interval, bound: f64, relation: Relation) -> Row {
        Row {
            experiment: kind,
            point: self.index,
            n: self.n,
            k: self.k,
            s: self.s,
            epsilon: self.epsilon,
            delta: self.delta,
            param: param.into(),
            trials,
            estimate,
            ci_low: ci.low,
            ci_high: ci.high,
            bound,
            relation,
            verdict: relation.verdict(ci.low, ci.high, bound),
        }
    }

    fn frequency(&self, kind: ExperimentKind, param: &str, hits: u64, trials: u64, bound: f64, relation: Relation) -> Row {
        self.row(kind, param, trials, hits as f64 / trials as f64, wilson99(hits, trials), bound, relation)
    }
}

/// Runs `f` once per trial on its own stream, in parallel, keeping trial order.
fn trials<T: Send>(seed: u64, point: usize, count: u64, f: impl Fn(&mut SimRng) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(|t| f(&mut trial_rng(seed, point as u64, t))).collect()
}

/// Agents k+1..=n, the coalition used by the adversarial experiments.
pub fn trailing_malicious(n: usize, k: usize) -> Vec<usize> {
    (k + 1..=n).collect()
}

/// Φ₀-frame state with fidelity drawn uniformly from [0, 1] against Φ₀ⁿ and a
/// Haar-random orthogonal remainder.
pub fn random_test_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    let f: f64 = rng.random();
    with_fidelity(&make_phi(n, false)?, f, rng)
}

/// Executes the grid and, when `spec.out` is set, writes `<kind>.csv` and
/// `<kind>.json` there.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let rows = match spec.experiment {
        ExperimentKind::Theorem1 => theorem1(spec)?,
        ExperimentKind::GuessBound => guess_bound(spec)?,
        ExperimentKind::Soundness => soundness(spec)?,
        ExperimentKind::AeFidelity => ae_fidelity(spec)?,
        ExperimentKind::ClassicalProbs => classical_probs(spec)?,
        ExperimentKind::FullRun => full_run(spec)?,
    };
    let result = ExperimentResult { spec: spec.clone(), rows, duration: start.elapsed() };
    if let Some(dir) = &spec.out {
        result.write(dir, spec.experiment.name())?;
    }
    Ok(result)
}

fn theorem1(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let kind = ExperimentKind::Theorem1;
    let mut rows = Vec::new();
    let mut index = 0;
    for &n in &spec.n {
        for k in spec.ks_for(n) {
            for &s in &spec.s {
                for &epsilon in &spec.epsilon {
                    for &delta in &spec.delta {
                        let point = Point { index, n: Some(n), k: Some(k), s: Some(s), epsilon: Some(epsilon), delta: Some(delta) };
                        let mut cfg = ProtocolConfig::honest(n, s, epsilon, delta, spec.seed);
                        cfg.honest = (1..=k).collect();
                        cfg.source = SourceStrategy::BoundedFidelity { target_fprime: cfg.fprime_threshold() };
                        cfg.malicious_policy = MaliciousAgentPolicy::worst_case_verifier();
                        let hits = trials(spec.seed, index, spec.trials, |rng| Ok(run_protocol5_with(&cfg, rng)?.c_epsilon()))?;
                        let count = hits.iter().filter(|&&h| h).count() as u64;
                        let bound = theorem1_bound(n, s, epsilon)?.value;
                        rows.push(point.frequency(kind, "c_epsilon", count, spec.trials, bound, Relation::Le));
                        index += 1;
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Success probability of the best sender guess on a crafted state.
fn guess_rows(point: &Point, n: usize, k: usize, epsilon: f64) -> Result<Vec<Row>> {
    let kind = ExperimentKind::GuessBound;
    let target = (1.0 - epsilon * epsilon).sqrt();
    let state = craft_state_with_fprime(n, &trailing_malicious(n, k), target)?;
    let honest: Vec<usize> = (1..=k).collect();
    let ens = build_sender_ensemble(&state, &honest)?;
    let bound = 1.0 / k as f64 + epsilon;
    Ok(match k {
        1 => vec![point.row(kind, "trivial", 0, 1.0, Interval::point(1.0), bound, Relation::Le)],
        2 => {
            let p = helstrom_guess_prob(&ens.candidates[0], &ens.candidates[1])?;
            vec![
                point.row(kind, "helstrom", 0, p, Interval::point(p), bound, Relation::Le),
                point.row(kind, "helstrom_sharp", 0, p, Interval::point(p), 0.5 + epsilon / 2.0, Relation::Le),
            ]
        }
        _ => {
            let p = pgm_guess_prob(&ens)?;
            vec![point.row(kind, "pgm", 0, p, Interval::point(p), bound, Relation::Le)]
        }
    })
}

fn guess_bound(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut index = 0;
    for &n in &spec.n {
        for k in spec.ks_for(n) {
            for &epsilon in &spec.epsilon {
                let point = Point { index, n: Some(n), k: Some(k), epsilon: Some(epsilon), ..Point::default() };
                rows.extend(guess_rows(&point, n, k, epsilon)?);
                index += 1;
            }
        }
    }
    Ok(rows)
}

fn soundness(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let kind = ExperimentKind::Soundness;
    let mut rows = Vec::new();
    let mut index = 0;
    for &n in &spec.n {
        for k in spec.ks_for(n) {
            let malicious = trailing_malicious(n, k);
            let point = Point { index, n: Some(n), k: Some(k), ..Point::default() };
            let per_state = trials(spec.seed, index, spec.states as u64, |rng| {
                let state = random_test_state(n, rng)?;
                let f = fprime(&state, &malicious)?.fprime;
                Ok((f, estimate_pass_probability(&state, spec.trials, rng)?))
            })?;
            for (i, (f, est)) in per_state.into_iter().enumerate() {
                let param = format!("state={i} fprime={f:.6}");
                rows.push(point.row(kind, param, est.trials, est.p_hat, est.interval, 0.75 + f / 4.0, Relation::Le));
            }
            index += 1;
        }
    }
    Ok(rows)
}

/// One honest Anonymous Entanglement run on `state` with random Sender and Receiver.
fn ae_once(state: &StateVector, rng: &mut SimRng) -> Result<f64> {
    let n = state.num_qubits();
    let agents: Vec<usize> = (1..=n).collect();
    let sender = *agents.choose(rng).expect("n ≥ 2");
    let others: Vec<usize> = agents.into_iter().filter(|&a| a != sender).collect();
    let receiver = *others.choose(rng).expect("n ≥ 2");
    let mut net = Network::new(n, &BTreeSet::new(), false)?;
    let ae = anonymous_entanglement(&mut net, state, AgentId(sender), AgentId(receiver), &Coalition::honest(), rng)?;
    fidelity(&ae.pair_state, &epr_pair())
}

fn ae_fidelity(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let kind = ExperimentKind::AeFidelity;
    let mut rows = Vec::new();
    let mut index = 0;
    for &n in &spec.n {
        let ghz = make_ghz(n)?;
        for &f in &spec.fidelity {
            let point = Point { index, n: Some(n), ..Point::default() };
            let out = trials(spec.seed, index, spec.trials, |rng| {
                let state = with_fidelity(&ghz, f, rng)?;
                ae_once(&state, rng)
            })?;
            let (mean, ci) = mean_interval(&out);
            rows.push(point.row(kind, format!("input_fidelity={f}"), spec.trials, mean, ci, f - 0.01, Relation::Ge));
            index += 1;
        }
    }
    Ok(rows)
}

fn bits(x: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (x >> i) & 1 == 1).collect()
}

fn classical_probs(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let kind = ExperimentKind::ClassicalProbs;
    let honest = Coalition::honest();
    let mut rows = Vec::new();
    let mut index = 0;
    for &n in &spec.n {
        let point = Point { index, n: Some(n), ..Point::default() };
        let modes = [BroadcastMode::Simultaneous, BroadcastMode::Ordered(Ordering::natural(n))];
        let mut correct = 0u64;
        let mut total = 0u64;
        for x in 0..1usize << n {
            let inputs = bits(x, n);
            let expected = inputs.iter().fold(false, |a, &b| a ^ b);
            for (m, mode) in modes.iter().enumerate() {
                let mut rng = trial_rng(spec.seed, index as u64, (2 * x + m) as u64);
                let mut net = Network::new(n, &BTreeSet::new(), false)?;
                let run = parity(&mut net, &inputs, mode, None, &honest, &mut rng)?;
                correct += (run.outputs().iter().all(|&o| o == expected) && run.public_result == expected) as u64;
                total += 1;
            }
        }
        rows.push(point.row(kind, "parity_exhaustive", total, correct as f64 / total as f64, Interval::point(correct as f64 / total as f64), 1.0, Relation::Eq));
        index += 1;

        for &s in &spec.s {
            let point = Point { index, n: Some(n), s: Some(s), ..Point::default() };
            let target = 1.0 - 0.5f64.powi(s as i32);
            let runs = trials(spec.seed, index, spec.trials, |rng| {
                let mut net = Network::new(n, &BTreeSet::new(), false)?;
                let inputs = bits(rng.random_range(1..1usize << n), n);
                let or_hit = logical_or(&mut net, &inputs, s, OrConfig::single_ordering(), &honest, rng)?.output;
                let zero_hit = logical_or(&mut net, &vec![false; n], s, OrConfig::single_ordering(), &honest, rng)?.output;
                let sender = rng.random_range(1..=n);
                let mut receiver = rng.random_range(1..n);
                if receiver >= sender {
                    receiver += 1;
                }
                let note = notification(&mut net, AgentId(sender), AgentId(receiver), s, &honest, rng)?;
                let spurious = note.receivers().iter().any(|a| a.0 != receiver);
                Ok((or_hit, zero_hit, note.y[receiver - 1], spurious))
            })?;
            let count = |f: fn(&(bool, bool, bool, bool)) -> bool| runs.iter().filter(|r| f(r)).count() as u64;
            rows.push(point.frequency(kind, "or_single_ordering", count(|r| r.0), spec.trials, target, Relation::Eq));
            rows.push(point.frequency(kind, "or_all_zero", count(|r| r.1), spec.trials, 0.0, Relation::Eq));
            rows.push(point.frequency(kind, "notification_receiver", count(|r| r.2), spec.trials, target, Relation::Eq));
            rows.push(point.frequency(kind, "notification_spurious", count(|r| r.3), spec.trials, 0.0, Relation::Eq));
            index += 1;
        }
    }
    Ok(rows)
}

fn full_run(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    let kind = ExperimentKind::FullRun;
    let mut rows = Vec::new();
    let mut index = 0;
    for &n in &spec.n {
        for &s in &spec.s {
            for &epsilon in &spec.epsilon {
                for &delta in &spec.delta {
                    let point = Point { index, n: Some(n), s: Some(s), epsilon: Some(epsilon), delta: Some(delta), ..Point::default() };
                    let cfg = ProtocolConfig::honest(n, s, epsilon, delta, spec.seed);
                    let runs = trials(spec.seed, index, spec.trials, |rng| {
                        let run = run_protocol5_with(&cfg, rng)?;
                        Ok((run.termination, run.rounds.len(), run.pair_fidelity))
                    })?;
                    let two_s = 0.5f64.powi(s as i32);
                    let failed = runs
                        .iter()
                        .filter(|r| r.0 == Termination::Aborted(AbortReason::VerificationFailed))
                        .count() as u64;
                    rows.push(point.frequency(kind, "verification_failed", failed, spec.trials, 0.0, Relation::Le));
                    let established: Vec<_> = runs.iter().filter(|r| r.0 == Termination::Established).collect();
                    rows.push(point.frequency(kind, "established", established.len() as u64, spec.trials, 1.0 - two_s, Relation::Eq));
                    if !established.is_empty() {
                        let p_use = two_s + (1.0 - two_s) * 0.5f64.powi((n * s) as i32);
                        let rounds: Vec<f64> = established.iter().map(|r| r.1 as f64).collect();
                        let (mean, ci) = mean_interval(&rounds);
                        rows.push(point.row(kind, "rounds_mean", rounds.len() as u64, mean, ci, 1.0 / p_use, Relation::Eq));
                        let fids: Vec<f64> = established.iter().map(|r| r.2.unwrap_or(0.0)).collect();
                        let (mean, ci) = mean_interval(&fids);
                        rows.push(point.row(kind, "pair_fidelity_mean", fids.len() as u64, mean, ci, 1.0 - 1e-9, Relation::Ge));
                    }
                    index += 1;
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::spec::{parse_config, SpecFile};

    fn spec(json: &str) -> ExperimentSpec {
        parse_config(None, serde_json::from_str::<SpecFile>(json).unwrap()).unwrap()
    }

    #[test]
    fn guess_bound_rows() {
        let r = run_experiment(&spec(r#"{"experiment":"guess_bound","n":4,"k":[2,3],"epsilon":0.6}"#)).unwrap();
        let names: Vec<&str> = r.rows.iter().map(|r| r.param.as_str()).collect();
        assert_eq!(names, ["helstrom", "helstrom_sharp", "pgm"]);
        assert!(r.rows[0].estimate <= 1.1);
    }

    #[test]
    fn theorem1_small_grid_is_deterministic() {
        let s = spec(r#"{"experiment":"theorem1","n":3,"k":2,"S":4,"trials":200,"seed":3}"#);
        let a = run_experiment(&s).unwrap();
        let b = run_experiment(&s).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.rows.len(), 1);
        assert!((a.rows[0].bound - 0.5f64.powi(4) * 12.0 / 0.2).abs() < 1e-12);
    }

    #[test]
    fn full_run_has_no_failures() {
        let r = run_experiment(&spec(r#"{"experiment":"full_run","n":3,"S":3,"trials":200}"#)).unwrap();
        assert_eq!(r.rows[0].estimate, 0.0);
        assert!(r.all_pass(), "{:?}", r.violations());
    }
}
