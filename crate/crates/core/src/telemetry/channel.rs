use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One-directional link with Bernoulli packet loss and fixed latency.
/// Delivery is in order.
#[derive(Debug, Clone)]
pub struct LossyChannel {
    loss: f64,
    latency_ms: u64,
    rng: ChaCha8Rng,
    queue: VecDeque<(u64, Vec<u8>)>,
    sent: u64,
    lost: u64,
}

impl LossyChannel {
    pub fn new(loss: f64, latency_ms: u64, seed: u64) -> Self {
        Self {
            loss: loss.clamp(0.0, 1.0),
            latency_ms,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queue: VecDeque::new(),
            sent: 0,
            lost: 0,
        }
    }

    pub fn perfect() -> Self {
        Self::new(0.0, 0, 0)
    }

    pub fn send(&mut self, now_ms: u64, bytes: Vec<u8>) {
        self.sent += 1;
        // Draw even when loss is zero so the stream does not depend on it.
        let roll: f64 = self.rng.random();
        if roll < self.loss {
            self.lost += 1;
            return;
        }
        self.queue.push_back((now_ms + self.latency_ms, bytes));
    }

    /// Everything due at or before `now_ms`, concatenated.
    pub fn deliver(&mut self, now_ms: u64) -> Vec<u8> {
        let mut out = Vec::new();
        while let Some((due, _)) = self.queue.front() {
            if *due > now_ms {
                break;
            }
            let (_, b) = self.queue.pop_front().unwrap();
            out.extend(b);
        }
        out
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn lost(&self) -> u64 {
        self.lost
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latency_and_order() {
        let mut c = LossyChannel::new(0.0, 50, 1);
        c.send(0, vec![1]);
        c.send(10, vec![2]);
        assert!(c.deliver(49).is_empty());
        assert_eq!(c.deliver(50), vec![1]);
        assert_eq!(c.deliver(100), vec![2]);
    }

    #[test]
    fn loss_rate_close_to_nominal() {
        let mut c = LossyChannel::new(0.2, 0, 7);
        for i in 0..20_000 {
            c.send(i, vec![0]);
        }
        let rate = c.lost() as f64 / c.sent() as f64;
        assert!((rate - 0.2).abs() < 0.015, "{rate}");
    }

    #[test]
    fn total_loss() {
        let mut c = LossyChannel::new(1.0, 0, 3);
        c.send(0, vec![9]);
        assert!(c.deliver(10).is_empty());
    }
}
