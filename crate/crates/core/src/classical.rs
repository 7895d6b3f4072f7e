//! Classical anonymous protocols run over [`Network`]: Parity, LogicalOR,
//! RandomBit, RandomAgent and Notification.
//!
//! Share matrices are stored as one bit mask per sender: bit `j - 1` of
//! `shares[i - 1]` is rᵢʲ, the share agent `i` sends to agent `j`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{Action, Coalition, Hook};
use crate::error::{invalid, Error, Result};
use crate::network::{default_orderings, follow_protocol, AgentId, Network, Ordering};

/// Largest agent count the share masks can hold.
pub const MAX_AGENTS: usize = 64;

/// How the announced column parities zⱼ are revealed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BroadcastMode {
    Simultaneous,
    Ordered(Ordering),
}

/// One execution of Parity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityRun {
    pub inputs: Vec<bool>,
    pub shares: Vec<u64>,
    /// zⱼ as announced; `None` for the skipped announcer.
    pub announced: Vec<Option<bool>>,
    /// ⊕ⱼ zⱼ over every column, as the skipped agent reconstructs it.
    pub full_result: bool,
    /// ⊕ of the announced values only.
    pub public_result: bool,
    pub skipped: Option<AgentId>,
    /// Agents whose share rows do not XOR to their input.
    pub malformed: Vec<AgentId>,
}

impl ParityRun {
    pub fn share(&self, i: AgentId, j: AgentId) -> bool {
        (self.shares[i.0 - 1] >> (j.0 - 1)) & 1 == 1
    }

    /// The parity as agent `a` learns it.
    pub fn output_for(&self, a: AgentId) -> bool {
        if self.skipped == Some(a) {
            self.full_result
        } else {
            self.public_result
        }
    }

    pub fn outputs(&self) -> Vec<bool> {
        (1..=self.inputs.len()).map(|a| self.output_for(AgentId(a))).collect()
    }
}

fn check_inputs(net: &Network, inputs: &[bool]) -> Result<usize> {
    let n = net.n();
    if inputs.len() != n {
        return invalid(format!("expected {n} inputs, got {}", inputs.len()));
    }
    if n > MAX_AGENTS {
        return invalid(format!("at most {MAX_AGENTS} agents supported"));
    }
    Ok(n)
}

fn row_parity(mask: u64) -> bool {
    mask.count_ones() % 2 == 1
}

/// Uniform n-bit share row whose XOR is `bit`.
fn draw_shares<R: Rng + ?Sized>(n: usize, bit: bool, rng: &mut R) -> u64 {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut mask = rng.random::<u64>() & full;
    if row_parity(mask) != bit {
        mask ^= 1;
    }
    mask
}

/// Parity with fresh shares. Malicious agents with `tamper_parity_shares`
/// send a row whose XOR is the complement of their input.
pub fn parity<R: Rng + ?Sized>(
    net: &mut Network,
    inputs: &[bool],
    mode: &BroadcastMode,
    skip: Option<AgentId>,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<ParityRun> {
    let n = check_inputs(net, inputs)?;
    let shares: Vec<u64> = (1..=n)
        .map(|i| {
            let tamper = matches!(
                coalition.act(AgentId(i), Hook::ParityShares),
                Some(Action::Shares { tamper: true })
            );
            draw_shares(n, inputs[i - 1] ^ tamper, rng)
        })
        .collect();
    parity_with_shares(net, inputs, &shares, mode, skip)
}

/// Parity with caller-supplied shares: n² private deliveries, then the column
/// parities zⱼ are announced by every agent except `skip`.
pub fn parity_with_shares(
    net: &mut Network,
    inputs: &[bool],
    shares: &[u64],
    mode: &BroadcastMode,
    skip: Option<AgentId>,
) -> Result<ParityRun> {
    let n = check_inputs(net, inputs)?;
    if shares.len() != n {
        return invalid(format!("expected {n} share rows, got {}", shares.len()));
    }
    if let Some(s) = skip {
        net.agent(s.0)?;
    }
    let mut malformed = Vec::new();
    for i in 1..=n {
        let row = shares[i - 1];
        if row_parity(row) != inputs[i - 1] {
            malformed.push(AgentId(i));
            net.annotate(format!("malformed shares from agent {i}"));
        }
        for j in 1..=n {
            net.send_private(AgentId(i), AgentId(j), &[(row >> (j - 1)) & 1 == 1])?;
        }
    }
    let z: Vec<bool> = (0..n).map(|j| shares.iter().fold(false, |acc, r| acc ^ ((r >> j) & 1 == 1))).collect();
    let bits: Vec<(AgentId, bool)> =
        (1..=n).map(AgentId).filter(|&a| Some(a) != skip).map(|a| (a, z[a.0 - 1])).collect();
    let revealed = match mode {
        BroadcastMode::Simultaneous => net.broadcast_simultaneous(&bits, &mut follow_protocol)?,
        BroadcastMode::Ordered(ordering) => {
            let order: Vec<AgentId> = ordering.agents().iter().copied().filter(|&a| Some(a) != skip).collect();
            net.broadcast_ordered(&Ordering::new(order)?, &bits, &mut follow_protocol)?
        }
    };
    let mut announced = vec![None; n];
    for (a, bit) in revealed {
        announced[a.0 - 1] = Some(bit);
    }
    let public_result = announced.iter().flatten().fold(false, |acc, &b| acc ^ b);
    let full_result = match skip {
        Some(s) => public_result ^ z[s.0 - 1],
        None => public_result,
    };
    Ok(ParityRun {
        inputs: inputs.to_vec(),
        shares: shares.to_vec(),
        announced,
        full_result,
        public_result,
        skipped: skip,
        malformed,
    })
}

/// Controls the LogicalOR loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrConfig {
    /// Orderings to run; `None` runs all n default orderings.
    pub orderings: Option<usize>,
    /// Stop at the first parity of 1.
    pub short_circuit: bool,
}

impl Default for OrConfig {
    fn default() -> Self {
        OrConfig { orderings: None, short_circuit: true }
    }
}

impl OrConfig {
    pub fn single_ordering() -> Self {
        OrConfig { orderings: Some(1), ..Self::default() }
    }

    pub fn full_loop() -> Self {
        OrConfig { orderings: None, short_circuit: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrRound {
    pub ordering: usize,
    pub repetition: usize,
    /// Bit `i - 1` is agent `i`'s flip pᵢ.
    pub flips: u64,
    pub result: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrRun {
    /// Inputs as actually used, after malicious substitution.
    pub inputs: Vec<bool>,
    pub s: usize,
    pub rounds: Vec<OrRound>,
    pub output: bool,
}

impl OrRun {
    pub fn outputs(&self) -> Vec<bool> {
        vec![self.output; self.inputs.len()]
    }
}

/// LogicalOR over the default orderings, S repetitions each.
pub fn logical_or<R: Rng + ?Sized>(
    net: &mut Network,
    inputs: &[bool],
    s: usize,
    config: OrConfig,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<OrRun> {
    let n = check_inputs(net, inputs)?;
    if s == 0 {
        return invalid("S must be at least 1");
    }
    let inputs: Vec<bool> = (1..=n)
        .map(|i| match coalition.act(AgentId(i), Hook::OrInput { prescribed: inputs[i - 1] }) {
            Some(Action::Input(x)) => x,
            _ => inputs[i - 1],
        })
        .collect();
    let orderings = default_orderings(n);
    let count = config.orderings.unwrap_or(n).min(n);
    let mut rounds = Vec::new();
    let mut output = false;
    'outer: for (t, ordering) in orderings.into_iter().take(count).enumerate() {
        let mode = BroadcastMode::Ordered(ordering);
        for rep in 0..s {
            let p: Vec<bool> = inputs.iter().map(|&x| x && rng.random_bool(0.5)).collect();
            let run = parity(net, &p, &mode, None, coalition, rng)?;
            let flips = p.iter().enumerate().fold(0u64, |m, (i, &b)| m | ((b as u64) << i));
            rounds.push(OrRound { ordering: t + 1, repetition: rep + 1, flips, result: run.public_result });
            if run.public_result {
                output = true;
                if config.short_circuit {
                    break 'outer;
                }
            }
        }
    }
    Ok(OrRun { inputs, s, rounds, output })
}

/// The Sender's distribution D over her RandomBit input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomBitDistribution {
    pub probability_of_zero: f64,
}

impl RandomBitDistribution {
    pub fn new(probability_of_zero: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability_of_zero) {
            return invalid(format!("probability {probability_of_zero} outside [0, 1]"));
        }
        Ok(RandomBitDistribution { probability_of_zero })
    }

    pub fn uniform() -> Self {
        RandomBitDistribution { probability_of_zero: 0.5 }
    }

    /// Input 0 iff all of `s` fair coins land heads.
    pub fn all_heads(s: usize) -> Self {
        RandomBitDistribution { probability_of_zero: 0.5f64.powi(s as i32) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        !rng.random_bool(self.probability_of_zero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomBitRun {
    /// The Sender's private input, kept for her consistency check.
    pub sender_input: bool,
    pub output: bool,
    pub or_run: OrRun,
}

impl RandomBitRun {
    pub fn consistent(&self) -> bool {
        self.sender_input == self.output
    }
}

fn check_sender(net: &Network, coalition: &Coalition, sender: AgentId) -> Result<()> {
    net.agent(sender.0)?;
    if coalition.is_malicious(sender) {
        return invalid(format!("Sender {sender} must be honest"));
    }
    Ok(())
}

pub fn random_bit<R: Rng + ?Sized>(
    net: &mut Network,
    sender: AgentId,
    d: RandomBitDistribution,
    s: usize,
    config: OrConfig,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<RandomBitRun> {
    check_sender(net, coalition, sender)?;
    let sender_input = d.sample(rng);
    let mut inputs = vec![false; net.n()];
    inputs[sender.0 - 1] = sender_input;
    let or_run = logical_or(net, &inputs, s, config, coalition, rng)?;
    Ok(RandomBitRun { sender_input, output: or_run.output, or_run })
}

/// Attempts per RandomAgent draw before giving up.
pub const RANDOM_AGENT_ATTEMPTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomAgentRun {
    /// Bit runs grouped by attempt, most significant bit first.
    pub attempts: Vec<Vec<RandomBitRun>>,
    /// `None` when a public bit disagreed with the Sender's input.
    pub agent: Option<AgentId>,
    pub consistent: bool,
}

/// ⌈log₂ n⌉ uniform RandomBits form an index; indices ≥ n are redrawn.
pub fn random_agent<R: Rng + ?Sized>(
    net: &mut Network,
    sender: AgentId,
    s: usize,
    config: OrConfig,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<RandomAgentRun> {
    check_sender(net, coalition, sender)?;
    let n = net.n();
    if n == 1 {
        return Ok(RandomAgentRun { attempts: Vec::new(), agent: Some(AgentId(1)), consistent: true });
    }
    let width = usize::BITS - (n - 1).leading_zeros();
    let mut attempts = Vec::new();
    for _ in 0..RANDOM_AGENT_ATTEMPTS {
        let mut bits = Vec::with_capacity(width as usize);
        let mut index = 0usize;
        for _ in 0..width {
            let run = random_bit(net, sender, RandomBitDistribution::uniform(), s, config, coalition, rng)?;
            index = (index << 1) | run.output as usize;
            let ok = run.consistent();
            bits.push(run);
            if !ok {
                attempts.push(bits);
                return Ok(RandomAgentRun { attempts, agent: None, consistent: false });
            }
        }
        attempts.push(bits);
        if index < n {
            return Ok(RandomAgentRun { attempts, agent: Some(AgentId(index + 1)), consistent: true });
        }
    }
    Err(Error::ImprobableFailure(format!("RandomAgent rejected {RANDOM_AGENT_ATTEMPTS} draws in a row")))
}

/// Flip inputs for one Notification parity round addressed to candidate `i`.
pub fn notification_inputs(n: usize, sender: AgentId, r: AgentId, i: AgentId, coin: bool) -> Vec<bool> {
    (1..=n).map(|j| i == r && AgentId(j) == sender && j != i.0 && coin).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotificationRun {
    /// yᵢ, known only to agent i.
    pub y: Vec<bool>,
    /// Per candidate, the S parity runs addressed to it.
    pub rounds: Vec<Vec<ParityRun>>,
}

impl NotificationRun {
    /// Agents that learned they are the Receiver.
    pub fn receivers(&self) -> Vec<AgentId> {
        self.y.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| AgentId(i + 1)).collect()
    }
}

/// For each candidate i, S Parity rounds in which agent i keeps its zᵢ; only
/// the Sender, and only when i = r, flips a fair coin.
pub fn notification<R: Rng + ?Sized>(
    net: &mut Network,
    sender: AgentId,
    r: AgentId,
    s: usize,
    coalition: &Coalition,
    rng: &mut R,
) -> Result<NotificationRun> {
    check_sender(net, coalition, sender)?;
    net.agent(r.0)?;
    if sender == r {
        return invalid("Sender cannot notify herself");
    }
    if s == 0 {
        return invalid("S must be at least 1");
    }
    let n = net.n();
    let mode = BroadcastMode::Ordered(Ordering::natural(n));
    let mut y = vec![false; n];
    let mut rounds = Vec::with_capacity(n);
    for i in (1..=n).map(AgentId) {
        let mut per = Vec::with_capacity(s);
        for _ in 0..s {
            let coin = i == r && rng.random_bool(0.5);
            let p = notification_inputs(n, sender, r, i, coin);
            let run = parity(net, &p, &mode, Some(i), coalition, rng)?;
            y[i.0 - 1] |= run.full_result;
            per.push(run);
        }
        rounds.push(per);
    }
    Ok(NotificationRun { y, rounds })
}
