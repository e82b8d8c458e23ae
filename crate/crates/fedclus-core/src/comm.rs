//! Instrumented client/server message accounting.
//!
//! The federated methods never move raw data; what they do move (center
//! sets, single centers) is recorded here so tests can assert communication
//! budgets exactly.

use alloc::vec::Vec;

use crate::metrics::Metrics;
use crate::types::{Assignment, CenterSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Client to server.
    Upload,
    /// Server to client.
    Download,
}

/// One message between a client and the server.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageEvent {
    /// Communication round the message belongs to (0 = initial handshake).
    pub round: usize,
    pub client: usize,
    pub direction: Direction,
    /// Number of center vectors in the payload.
    pub centers: usize,
}

/// Append-only log of every message a protocol run produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MessageLog {
    events: Vec<MessageEvent>,
}

impl MessageLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, round: usize, client: usize, direction: Direction, centers: usize) {
        self.events.push(MessageEvent {
            round,
            client,
            direction,
            centers,
        });
    }

    pub fn events(&self) -> &[MessageEvent] {
        &self.events
    }

    pub fn uploads(&self, client: usize) -> usize {
        self.count(client, Direction::Upload)
    }

    pub fn downloads(&self, client: usize) -> usize {
        self.count(client, Direction::Download)
    }

    fn count(&self, client: usize, direction: Direction) -> usize {
        self.events
            .iter()
            .filter(|e| e.client == client && e.direction == direction)
            .count()
    }

    /// Highest round index present in the log.
    pub fn last_round(&self) -> usize {
        self.events.iter().map(|e| e.round).max().unwrap_or(0)
    }
}

/// What a client ends a protocol run with: the centers it will use and the
/// assignment of its points to them.
#[derive(Debug, Clone)]
pub struct ClientResult {
    pub centers: CenterSet,
    pub assignment: Assignment,
}

/// Uniform result shape for every method in the harness, so metric
/// comparisons are paired on identical inputs.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub per_client: Vec<ClientResult>,
    pub metrics: Metrics,
    pub messages: MessageLog,
    /// Communication rounds executed after the initial handshake; 0 for
    /// non-iterative methods.
    pub rounds: usize,
}
