//! Pluggable rank transport and the in-process simulated fabric.

use std::collections::VecDeque;
use std::sync::{Arc, Barrier, Mutex};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::util::SplitMix64;

/// Strided gather descriptor: `slow.0 * mid.0` contiguous runs of `run`
/// f64 slots each, starting at `start`. Strides are in f64 slots.
#[derive(Clone, Copy, Debug)]
pub struct Strided<'a> {
    pub base: &'a [f64],
    pub start: usize,
    pub run: usize,
    /// (count, stride)
    pub mid: (usize, usize),
    pub slow: (usize, usize),
}

/// Send payload: either an already contiguous segment or a strided
/// description the transport gathers itself.
pub enum PayloadRef<'a> {
    Contiguous(&'a [f64]),
    Strided(Strided<'a>),
}

impl PayloadRef<'_> {
    pub fn len(&self) -> usize {
        match self {
            PayloadRef::Contiguous(s) => s.len(),
            PayloadRef::Strided(d) => d.run * d.mid.0 * d.slow.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linearize run by run, mid index fastest. Packing a block and gathering
    /// the equivalent strided descriptor produce identical bytes.
    pub fn gather(&self) -> Vec<f64> {
        match self {
            PayloadRef::Contiguous(s) => s.to_vec(),
            PayloadRef::Strided(d) => {
                let mut out = Vec::with_capacity(self.len());
                for s in 0..d.slow.0 {
                    for m in 0..d.mid.0 {
                        let at = d.start + s * d.slow.1 + m * d.mid.1;
                        out.extend_from_slice(&d.base[at..at + d.run]);
                    }
                }
                out
            }
        }
    }
}

/// One completed receive.
#[derive(Debug)]
pub struct Arrival {
    pub src: usize,
    pub tag: u64,
    pub payload: Vec<f64>,
}

/// Minimal message-passing surface the exchange strategies run on.
///
/// Contract: messages between a fixed (src, dst, tag) triple are delivered
/// in post order; sends complete at post (the payload is captured before
/// `post_send` returns, so source memory may be reused immediately);
/// repeated `test_some` calls eventually complete every matched pair.
pub trait Transport {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;
    fn post_send(&mut self, dst: usize, tag: u64, payload: PayloadRef<'_>) -> Result<()>;
    fn post_recv(&mut self, src: usize, tag: u64) -> Result<()>;
    /// Nonblocking: any completed subset of the posted recvs.
    fn test_some(&mut self) -> Vec<Arrival>;
    /// Spin until every posted recv has completed.
    fn wait_all(&mut self) -> Result<Vec<Arrival>>;
    /// All ranks must call; returns when all have.
    fn barrier(&self);
    /// Node/group id for locality-aware ordering. The simulated fabric puts
    /// every rank in one group.
    fn locality_hint(&self, _rank: usize) -> usize {
        0
    }
}

struct Msg {
    tag: u64,
    payload: Vec<f64>,
    /// Polls that declined to reveal this message (adversarial mode).
    withheld: u32,
}

/// Shared in-process fabric connecting `size` simulated ranks.
///
/// Per-pair FIFO queues; receives match by (src, tag). The adversarial mode
/// randomly withholds arrived messages for a bounded number of polls and
/// scans pending receives in random order, exercising arbitrary delivery
/// interleavings without ever violating the per-(src, dst, tag) ordering.
pub struct SimFabric {
    size: usize,
    mail: Vec<Mutex<VecDeque<Msg>>>,
    barrier: Barrier,
    adversary: Option<Mutex<SplitMix64>>,
}

const MAX_WITHHOLD: u32 = 8;

impl SimFabric {
    pub fn new(size: usize) -> Arc<Self> {
        Self::build(size, None)
    }

    /// Fabric whose delivery order is randomized by `seed`.
    pub fn adversarial(size: usize, seed: u64) -> Arc<Self> {
        Self::build(size, Some(seed))
    }

    fn build(size: usize, seed: Option<u64>) -> Arc<Self> {
        assert!(size >= 1);
        Arc::new(Self {
            size,
            mail: (0..size * size).map(|_| Mutex::new(VecDeque::new())).collect(),
            barrier: Barrier::new(size),
            adversary: seed.map(|s| Mutex::new(SplitMix64::new(s))),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn endpoint(self: &Arc<Self>, rank: usize) -> SimEndpoint {
        assert!(rank < self.size);
        SimEndpoint { fabric: Arc::clone(self), rank, pending: Vec::new() }
    }

    fn queue(&self, src: usize, dst: usize) -> &Mutex<VecDeque<Msg>> {
        &self.mail[src * self.size + dst]
    }
}

/// One rank's handle onto the fabric; owned exclusively by that rank's lane.
pub struct SimEndpoint {
    fabric: Arc<SimFabric>,
    rank: usize,
    pending: Vec<(usize, u64)>,
}

impl SimEndpoint {
    /// Try to complete the pending recv at `idx`.
    fn try_match(&self, idx: usize, rng: Option<&mut SplitMix64>) -> Option<Arrival> {
        let (src, tag) = self.pending[idx];
        let mut q = self.fabric.queue(src, self.rank).lock().unwrap();
        let pos = q.iter().position(|m| m.tag == tag)?;
        if let Some(rng) = rng {
            let msg = &mut q[pos];
            if msg.withheld < MAX_WITHHOLD && rng.chance(1, 2) {
                msg.withheld += 1;
                return None;
            }
        }
        let msg = q.remove(pos).unwrap();
        Some(Arrival { src, tag, payload: msg.payload })
    }
}

impl Transport for SimEndpoint {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.fabric.size
    }

    fn post_send(&mut self, dst: usize, tag: u64, payload: PayloadRef<'_>) -> Result<()> {
        if dst >= self.fabric.size {
            return Err(Error::Transport { rank: dst, message: "no such rank".into() });
        }
        let payload = payload.gather();
        self.fabric
            .queue(self.rank, dst)
            .lock()
            .unwrap()
            .push_back(Msg { tag, payload, withheld: 0 });
        Ok(())
    }

    fn post_recv(&mut self, src: usize, tag: u64) -> Result<()> {
        if src >= self.fabric.size {
            return Err(Error::Transport { rank: src, message: "no such rank".into() });
        }
        self.pending.push((src, tag));
        Ok(())
    }

    fn test_some(&mut self) -> Vec<Arrival> {
        let mut order: Vec<usize> = (0..self.pending.len()).collect();
        let mut rng = self.fabric.adversary.as_ref().map(|m| {
            let mut rng_guard = m.lock().unwrap();
            // detach a per-call stream so the fabric lock is not held while
            // matching
            SplitMix64::new(rng_guard.next())
        });
        if let Some(rng) = rng.as_mut() {
            for i in (1..order.len()).rev() {
                let j = (rng.next() % (i as u64 + 1)) as usize;
                order.swap(i, j);
            }
        }
        let mut done = Vec::new();
        let mut matched = Vec::new();
        for &idx in &order {
            if let Some(a) = self.try_match(idx, rng.as_mut()) {
                done.push(a);
                matched.push(idx);
            }
        }
        matched.sort_unstable_by(|a, b| b.cmp(a));
        for idx in matched {
            self.pending.swap_remove(idx);
        }
        done
    }

    fn wait_all(&mut self) -> Result<Vec<Arrival>> {
        let mut out = Vec::new();
        let deadline = Instant::now() + Duration::from_secs(60);
        while !self.pending.is_empty() {
            let got = self.test_some();
            if got.is_empty() {
                if Instant::now() > deadline {
                    let (src, tag) = self.pending[0];
                    return Err(Error::Transport {
                        rank: src,
                        message: format!("timed out waiting for tag {tag}"),
                    });
                }
                std::thread::yield_now();
            } else {
                out.extend(got);
            }
        }
        Ok(out)
    }

    fn barrier(&self) {
        self.fabric.barrier.wait();
    }
}

/// Drive one closure per simulated rank on its own OS thread, returning the
/// per-rank results in rank order. Rank lanes poll each other through the
/// fabric, so they need real threads rather than a cooperative pool.
pub fn run_on<T, F>(fabric: &Arc<SimFabric>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimEndpoint) -> T + Sync,
{
    let size = fabric.size();
    if size == 1 {
        let mut ep = fabric.endpoint(0);
        return vec![f(0, &mut ep)];
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..size)
            .map(|rank| {
                let f = &f;
                let mut ep = fabric.endpoint(rank);
                scope.spawn(move || f(rank, &mut ep))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("rank lane panicked")).collect()
    })
}

/// Convenience wrapper over a fresh in-order fabric.
pub fn run_ranks<T, F>(size: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut SimEndpoint) -> T + Sync,
{
    run_on(&SimFabric::new(size), f)
}

/// Max-reduce `value` across all ranks; every rank gets the result.
/// Uses tags `tag` and `tag + 1`.
pub fn allreduce_max(t: &mut dyn Transport, tag: u64, value: f64) -> Result<f64> {
    let (rank, size) = (t.rank(), t.size());
    if size == 1 {
        return Ok(value);
    }
    if rank == 0 {
        let mut acc = value;
        for src in 1..size {
            t.post_recv(src, tag)?;
        }
        for a in t.wait_all()? {
            acc = acc.max(a.payload[0]);
        }
        for dst in 1..size {
            t.post_send(dst, tag + 1, PayloadRef::Contiguous(&[acc]))?;
        }
        Ok(acc)
    } else {
        t.post_send(0, tag, PayloadRef::Contiguous(&[value]))?;
        t.post_recv(0, tag + 1)?;
        let got = t.wait_all()?;
        Ok(got[0].payload[0])
    }
}
