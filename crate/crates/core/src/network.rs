//! In-process message fabric: private pairwise channels, regular and
//! simultaneous broadcast, and transcript capture.
//!
//! The fabric is a sequential event loop. Every delivery gets the next round
//! tag; recording can be switched off for bulk Monte Carlo runs, in which case
//! tags still advance but no messages are stored.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// 1-based agent index; agent `j` owns qubit `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipient {
    Agent(AgentId),
    Broadcast,
}

/// Bit string payload, serialized as a string of `0`/`1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn bit(b: bool) -> Self {
        BitString(vec![b])
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!("invalid bit {other:?}"))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(BitString)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelMessage {
    pub round_tag: u64,
    pub phase: String,
    pub from: AgentId,
    pub to: Recipient,
    pub payload: BitString,
}

/// Ordered log of every message in a run, plus phase markers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub messages: Vec<ChannelMessage>,
    /// (index of the first message in the phase, label)
    pub phases: Vec<(usize, String)>,
}

impl Transcript {
    /// What agent `a` can see: messages addressed to it and all broadcasts.
    pub fn observed_by(&self, a: AgentId) -> Vec<&ChannelMessage> {
        self.messages
            .iter()
            .filter(|m| m.to == Recipient::Broadcast || m.to == Recipient::Agent(a))
            .collect()
    }

    pub fn broadcasts(&self) -> impl Iterator<Item = &ChannelMessage> {
        self.messages.iter().filter(|m| m.to == Recipient::Broadcast)
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut w, m)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl(text: &str) -> Result<Transcript> {
        let messages = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<ChannelMessage>, _>>()?;
        Ok(Transcript { messages, phases: Vec::new() })
    }
}

/// A broadcast schedule. The last announcer is the one who sees everyone else
/// before choosing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering {
    order: Vec<AgentId>,
}

impl Ordering {
    pub fn new(order: Vec<AgentId>) -> Result<Self> {
        if order.is_empty() {
            return invalid("ordering must not be empty");
        }
        let unique: BTreeSet<_> = order.iter().collect();
        if unique.len() != order.len() {
            return invalid("ordering repeats an agent");
        }
        Ok(Ordering { order })
    }

    /// Agents in index order.
    pub fn natural(n: usize) -> Self {
        Ordering { order: (1..=n).map(AgentId).collect() }
    }

    /// Ordering `t` of the default scheme: (t+1, …, n, 1, …, t), so agent `t` is last.
    pub fn rotation(n: usize, t: usize) -> Result<Self> {
        if t == 0 || t > n {
            return invalid(format!("rotation index {t} outside 1..={n}"));
        }
        Ok(Ordering { order: (1..=n).map(|i| AgentId((t + i - 1) % n + 1)).collect() })
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.order
    }

    pub fn last(&self) -> AgentId {
        *self.order.last().expect("non-empty ordering")
    }
}

/// The n orderings agreed on before LogicalOR, each with a different last agent.
pub fn default_orderings(n: usize) -> Vec<Ordering> {
    (1..=n).map(|t| Ordering::rotation(n, t).expect("t in range")).collect()
}

/// Called for a malicious announcer with (agent, announcements visible so
/// far, bit the protocol prescribes); returns the bit actually announced.
pub type AnnounceHook<'a> = dyn FnMut(AgentId, &[(AgentId, bool)], bool) -> bool + 'a;

/// Hook that announces the prescribed bit.
pub fn follow_protocol(_: AgentId, _: &[(AgentId, bool)], bit: bool) -> bool {
    bit
}

#[derive(Clone, Debug)]
pub struct Network {
    honest: Vec<bool>,
    record: bool,
    next_tag: u64,
    phase: String,
    transcript: Transcript,
}

impl Network {
    /// `malicious` lists agent indices; at least one agent must be honest.
    pub fn new(n: usize, malicious: &BTreeSet<usize>, record: bool) -> Result<Self> {
        if n == 0 {
            return invalid("network needs at least one agent");
        }
        if let Some(&bad) = malicious.iter().find(|&&a| a == 0 || a > n) {
            return invalid(format!("malicious agent {bad} outside 1..={n}"));
        }
        if malicious.len() == n {
            return invalid("at least one agent must be honest");
        }
        let honest = (1..=n).map(|a| !malicious.contains(&a)).collect();
        Ok(Network { honest, record, next_tag: 0, phase: String::new(), transcript: Transcript::default() })
    }

    pub fn honest(n: usize, record: bool) -> Self {
        Network::new(n, &BTreeSet::new(), record).expect("valid honest network")
    }

    pub fn n(&self) -> usize {
        self.honest.len()
    }

    pub fn is_recording(&self) -> bool {
        self.record
    }

    pub fn agent(&self, index: usize) -> Result<AgentId> {
        if index == 0 || index > self.n() {
            return invalid(format!("unknown agent {index}"));
        }
        Ok(AgentId(index))
    }

    pub fn is_honest(&self, a: AgentId) -> bool {
        self.honest.get(a.0.wrapping_sub(1)).copied().unwrap_or(false)
    }

    fn check(&self, a: AgentId) -> Result<()> {
        self.agent(a.0).map(|_| ())
    }

    pub fn mark_phase(&mut self, label: impl Into<String>) {
        self.phase = label.into();
        if self.record {
            self.transcript.phases.push((self.transcript.messages.len(), self.phase.clone()));
        }
    }

    /// Adds a marker without changing the current phase label.
    pub fn annotate(&mut self, note: impl Into<String>) {
        if self.record {
            self.transcript.phases.push((self.transcript.messages.len(), note.into()));
        }
    }

    fn log(&mut self, from: AgentId, to: Recipient, payload: &[bool]) {
        let tag = self.next_tag;
        self.next_tag += 1;
        if self.record {
            self.transcript.messages.push(ChannelMessage {
                round_tag: tag,
                phase: self.phase.clone(),
                from,
                to,
                payload: BitString(payload.to_vec()),
            });
        }
    }

    /// Delivers `payload` to `to` alone. Self-delivery is allowed.
    pub fn send_private(&mut self, from: AgentId, to: AgentId, payload: &[bool]) -> Result<()> {
        self.check(from)?;
        self.check(to)?;
        self.log(from, Recipient::Agent(to), payload);
        Ok(())
    }

    /// A single announcement on the regular broadcast channel.
    pub fn broadcast(&mut self, from: AgentId, payload: &[bool]) -> Result<()> {
        self.check(from)?;
        self.log(from, Recipient::Broadcast, payload);
        Ok(())
    }

    fn lookup(bits: &[(AgentId, bool)], a: AgentId) -> Result<bool> {
        bits.iter()
            .find(|(b, _)| *b == a)
            .map(|&(_, v)| v)
            .ok_or_else(|| Error::ProtocolViolation(format!("agent {a} has no announcement")))
    }

    /// Sequential broadcast: announcers speak in `ordering`, and a malicious
    /// announcer's hook sees every earlier announcement of this round.
    pub fn broadcast_ordered(
        &mut self,
        ordering: &Ordering,
        bits: &[(AgentId, bool)],
        hook: &mut AnnounceHook<'_>,
    ) -> Result<Vec<(AgentId, bool)>> {
        let mut revealed = Vec::with_capacity(ordering.agents().len());
        for &a in ordering.agents() {
            self.check(a)?;
            let intended = Self::lookup(bits, a)?;
            let bit = if self.is_honest(a) { intended } else { hook(a, &revealed, intended) };
            self.log(a, Recipient::Broadcast, &[bit]);
            revealed.push((a, bit));
        }
        Ok(revealed)
    }

    /// Commit-then-reveal: every announcement in `bits` is fixed before any is
    /// shown, so hooks see no current-round information.
    pub fn broadcast_simultaneous(
        &mut self,
        bits: &[(AgentId, bool)],
        hook: &mut AnnounceHook<'_>,
    ) -> Result<Vec<(AgentId, bool)>> {
        let mut committed = Vec::with_capacity(bits.len());
        for &(a, intended) in bits {
            self.check(a)?;
            if committed.iter().any(|&(b, _)| b == a) {
                return Err(Error::ProtocolViolation(format!("agent {a} announced twice")));
            }
            let bit = if self.is_honest(a) { intended } else { hook(a, &[], intended) };
            committed.push((a, bit));
        }
        for &(a, bit) in &committed {
            self.log(a, Recipient::Broadcast, &[bit]);
        }
        Ok(committed)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}
