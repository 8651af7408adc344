//! Message transport between workers.
//!
//! Workers only see a [`Transport`]. The in-process mesh moves encoded
//! bytes over channels and counts every byte that crosses between two
//! different workers.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::Duration;

use super::message::{Message, MessageKind};
use crate::error::{Error, Result};

pub trait Transport: Send {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;
    fn send(&mut self, to: usize, msg: &Message) -> Result<()>;
    /// Blocks until a message of `kind` arrives. Messages of other kinds
    /// are kept for later calls.
    fn recv(&mut self, kind: MessageKind) -> Result<Message>;
    /// Tells the other workers to stop waiting.
    fn abort(&self);

    fn broadcast(&mut self, msg: &Message) -> Result<()> {
        for to in 0..self.size() {
            self.send(to, msg)?;
        }
        Ok(())
    }

    /// One message of `kind` from every worker, ordered by sender.
    fn gather_all(&mut self, kind: MessageKind) -> Result<Vec<Message>> {
        let g = self.size();
        let mut slots: Vec<Option<Message>> = vec![None; g];
        for _ in 0..g {
            let m = self.recv(kind)?;
            let s = m.sender as usize;
            if s >= g || slots[s].is_some() {
                return Err(Error::Engine {
                    worker: self.rank(),
                    message: format!("unexpected {kind:?} message from worker {s}"),
                });
            }
            slots[s] = Some(m);
        }
        Ok(slots
            .into_iter()
            .map(|m| m.expect("all slots filled"))
            .collect())
    }
}

/// Cross-worker bytes per message kind, shared by all endpoints of a mesh.
#[derive(Debug, Default)]
pub struct ByteCounter {
    counts: [AtomicU64; MessageKind::COUNT],
}

impl ByteCounter {
    pub fn add(&self, kind: MessageKind, bytes: u64) {
        self.counts[kind as usize].fetch_add(bytes, Ordering::Relaxed);
    }

    pub fn get(&self, kind: MessageKind) -> u64 {
        self.counts[kind as usize].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        MessageKind::ALL.iter().map(|&k| self.get(k)).sum()
    }
}

pub struct ChannelTransport {
    rank: usize,
    peers: Vec<Sender<Vec<u8>>>,
    inbox: Receiver<Vec<u8>>,
    stash: Vec<VecDeque<Message>>,
    counter: Arc<ByteCounter>,
    aborted: Arc<AtomicBool>,
}

/// Fully connected in-process mesh of `g` endpoints.
pub fn channel_mesh(g: usize) -> (Vec<ChannelTransport>, Arc<ByteCounter>) {
    let counter = Arc::new(ByteCounter::default());
    let aborted = Arc::new(AtomicBool::new(false));
    let (senders, receivers): (Vec<_>, Vec<_>) = (0..g).map(|_| channel()).unzip();
    let endpoints = receivers
        .into_iter()
        .enumerate()
        .map(|(rank, inbox)| ChannelTransport {
            rank,
            peers: senders.clone(),
            inbox,
            stash: (0..MessageKind::COUNT).map(|_| VecDeque::new()).collect(),
            counter: counter.clone(),
            aborted: aborted.clone(),
        })
        .collect();
    (endpoints, counter)
}

impl ChannelTransport {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Engine {
            worker: self.rank,
            message: message.into(),
        }
    }
}

impl Transport for ChannelTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.peers.len()
    }

    fn send(&mut self, to: usize, msg: &Message) -> Result<()> {
        let bytes = msg.encode();
        if to != self.rank {
            self.counter.add(msg.kind, bytes.len() as u64);
        }
        self.peers
            .get(to)
            .ok_or_else(|| self.fail(format!("no worker {to}")))?
            .send(bytes)
            .map_err(|_| self.fail(format!("worker {to} is gone")))
    }

    fn recv(&mut self, kind: MessageKind) -> Result<Message> {
        loop {
            if let Some(m) = self.stash[kind as usize].pop_front() {
                return Ok(m);
            }
            match self.inbox.recv_timeout(Duration::from_millis(50)) {
                Ok(bytes) => {
                    let m = Message::decode(&bytes).map_err(|e| self.fail(e.to_string()))?;
                    self.stash[m.kind as usize].push_back(m);
                }
                Err(RecvTimeoutError::Timeout) => {
                    if self.aborted.load(Ordering::Relaxed) {
                        return Err(self.fail("aborted after another worker failed"));
                    }
                }
                Err(RecvTimeoutError::Disconnected) => return Err(self.fail("transport closed")),
            }
        }
    }

    fn abort(&self) {
        self.aborted.store(true, Ordering::Relaxed);
    }
}
