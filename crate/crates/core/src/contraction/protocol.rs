//! Sequentially interactive protocols: one message per player, each channel
//! chosen from the messages already on the board.

use std::collections::HashMap;
use std::sync::Arc;

use crate::channels::{Channel, ConstraintSpec};
use crate::error::{invalid, Result};

/// Picks the channel for player `round` from earlier messages.
pub trait ChannelRule: Send + Sync {
    fn channel(&self, round: usize, prefix: &[u32], public_seed: u64) -> Result<Arc<Channel>>;
}

/// Same channel sequence whatever was said before.
pub struct FixedRule(pub Vec<Arc<Channel>>);

impl ChannelRule for FixedRule {
    fn channel(&self, round: usize, _: &[u32], _: u64) -> Result<Arc<Channel>> {
        self.0
            .get(round)
            .cloned()
            .ok_or_else(|| invalid(format!("no channel for round {round}")))
    }
}

/// Rule given by a closure.
pub struct FnRule<F>(pub F);

impl<F> ChannelRule for FnRule<F>
where
    F: Fn(usize, &[u32], u64) -> Result<Arc<Channel>> + Send + Sync,
{
    fn channel(&self, round: usize, prefix: &[u32], seed: u64) -> Result<Arc<Channel>> {
        (self.0)(round, prefix, seed)
    }
}

/// Explicit table from `(round, prefix)` to channel.
#[derive(Default)]
pub struct TabulatedRule {
    table: HashMap<(usize, Vec<u32>), Arc<Channel>>,
}

impl TabulatedRule {
    pub fn insert(&mut self, round: usize, prefix: Vec<u32>, ch: Arc<Channel>) {
        self.table.insert((round, prefix), ch);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl ChannelRule for TabulatedRule {
    fn channel(&self, round: usize, prefix: &[u32], _: u64) -> Result<Arc<Channel>> {
        self.table
            .get(&(round, prefix.to_vec()))
            .cloned()
            .ok_or_else(|| invalid(format!("no channel for round {round} after {prefix:?}")))
    }
}

#[derive(Clone)]
pub struct Protocol {
    n: usize,
    rule: Arc<dyn ChannelRule>,
    constraints: Vec<ConstraintSpec>,
    public_seed: u64,
}

impl std::fmt::Debug for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Protocol")
            .field("n", &self.n)
            .field("constraints", &self.constraints)
            .field("public_seed", &self.public_seed)
            .finish_non_exhaustive()
    }
}

impl Protocol {
    pub fn new(rule: Arc<dyn ChannelRule>, constraints: Vec<ConstraintSpec>, public_seed: u64) -> Result<Self> {
        if constraints.is_empty() {
            return Err(invalid("a protocol needs at least one player"));
        }
        for c in &constraints {
            c.validate()?;
        }
        Ok(Self { n: constraints.len(), rule, constraints, public_seed })
    }

    /// Non-adaptive protocol; each player's constraint is its channel's first tag.
    pub fn fixed(channels: Vec<Channel>) -> Result<Self> {
        let constraints = channels
            .iter()
            .map(|c| c.constraints().first().copied().unwrap_or(ConstraintSpec::Unconstrained))
            .collect();
        Self::new(Arc::new(FixedRule(channels.into_iter().map(Arc::new).collect())), constraints, 0)
    }

    pub fn players(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraints
    }

    pub fn public_seed(&self) -> u64 {
        self.public_seed
    }

    /// Channel for player `round`, checked against that player's constraint.
    pub fn channel_at(&self, round: usize, prefix: &[u32]) -> Result<Arc<Channel>> {
        if round >= self.n || prefix.len() != round {
            return Err(invalid(format!("round {round} with prefix of length {}", prefix.len())));
        }
        let ch = self.rule.channel(round, prefix, self.public_seed)?;
        if !ch.satisfies(&self.constraints[round]) {
            return Err(invalid(format!(
                "round {round}: selected channel violates {:?}",
                self.constraints[round]
            )));
        }
        Ok(ch)
    }
}
