//! Deterministic round-based simulator comparing coded and uncoded content
//! distribution.
//!
//! Every round, each link carries up to `capacity` packets built from the
//! sender's state at the start of the round; each packet is lost
//! independently with the link's loss probability. Coded senders transmit a
//! fresh random recombination of everything they hold. Uncoded senders
//! forward a uniformly random original packet they hold, with no memory of
//! what the receiver already has.
//!
//! Loss draws and content draws use separate streams derived from the seed,
//! so the two strategies see identical loss patterns for a given seed.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rlnc::{AddOutcome, CodedPacket, Decoder, GenerationId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("peer {0} is unreachable from any source")]
    Disconnected(String),
    #[error("generation size must be at least 1")]
    InvalidK,
    #[error("at least {min} trials required, got {got}")]
    TooFewTrials { min: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Source,
    Peer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub role: Role,
}

/// Directed link between node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    /// Packets per round; zero means the link is down.
    pub capacity: u32,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn add_node(&mut self, id: impl Into<String>, role: Role) -> Result<usize, SimError> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(SimError::InvalidTopology(format!("bad node id {id:?}")));
        }
        if self.node_index(&id).is_some() {
            return Err(SimError::InvalidTopology(format!("duplicate node {id}")));
        }
        self.nodes.push(Node { id, role });
        Ok(self.nodes.len() - 1)
    }

    pub fn add_link(&mut self, from: &str, to: &str, capacity: u32, loss: f64) -> Result<(), SimError> {
        let lookup =
            |id: &str| self.node_index(id).ok_or_else(|| SimError::InvalidTopology(format!("unknown node {id}")));
        let (from, to) = (lookup(from)?, lookup(to)?);
        if from == to {
            return Err(SimError::InvalidTopology("self loop".into()));
        }
        if !(0.0..=1.0).contains(&loss) {
            return Err(SimError::InvalidTopology(format!("loss {loss} outside [0, 1]")));
        }
        self.links.push(Link { from, to, capacity, loss });
        Ok(())
    }

    /// Parses the line format:
    ///
    /// ```text
    /// # comment
    /// node <id> source|peer
    /// link <from> <to> <capacity> <loss>
    /// ```
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut top = Topology::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| SimError::Parse { line, message };
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            match fields.as_slice() {
                ["node", id, role] => {
                    let role = match *role {
                        "source" => Role::Source,
                        "peer" => Role::Peer,
                        other => return Err(err(format!("unknown role {other:?}"))),
                    };
                    top.add_node(*id, role).map_err(|e| err(e.to_string()))?;
                }
                ["link", from, to, cap, loss] => {
                    let cap: u32 = cap.parse().map_err(|_| err(format!("bad capacity {cap:?}")))?;
                    let loss: f64 = loss.parse().map_err(|_| err(format!("bad loss {loss:?}")))?;
                    top.add_link(from, to, cap, loss).map_err(|e| err(e.to_string()))?;
                }
                _ => return Err(err(format!("unrecognized line {trimmed:?}"))),
            }
        }
        Ok(top)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let role = match n.role {
                Role::Source => "source",
                Role::Peer => "peer",
            };
            writeln!(out, "node {} {}", n.id, role).unwrap();
        }
        for l in &self.links {
            writeln!(out, "link {} {} {} {}", self.nodes[l.from].id, self.nodes[l.to].id, l.capacity, l.loss).unwrap();
        }
        out
    }

    /// Hop distance from the nearest source to the farthest peer, over links
    /// with nonzero capacity.
    pub fn diameter(&self) -> Result<usize, SimError> {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        let mut queue = VecDeque::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.role == Role::Source {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(u) = queue.pop_front() {
            for l in self.links.iter().filter(|l| l.from == u && l.capacity > 0) {
                if dist[l.to] == usize::MAX {
                    dist[l.to] = dist[u] + 1;
                    queue.push_back(l.to);
                }
            }
        }
        let mut diameter = 0;
        for (i, &d) in dist.iter().enumerate() {
            if d == usize::MAX {
                return Err(SimError::Disconnected(self.nodes[i].id.clone()));
            }
            diameter = diameter.max(d);
        }
        Ok(diameter)
    }

    /// `S -> P` over one link.
    pub fn single_link(capacity: u32, loss: f64) -> Self {
        let mut t = Topology::new();
        t.add_node("S", Role::Source).unwrap();
        t.add_node("P", Role::Peer).unwrap();
        t.add_link("S", "P", capacity, loss).unwrap();
        t
    }

    /// Source feeds A (both packets) and C; A feeds B; B feeds C.
    pub fn figure21() -> Self {
        let mut t = Topology::new();
        for (id, role) in [("S", Role::Source), ("A", Role::Peer), ("B", Role::Peer), ("C", Role::Peer)] {
            t.add_node(id, role).unwrap();
        }
        t.add_link("S", "A", 2, 0.0).unwrap();
        t.add_link("A", "B", 1, 0.0).unwrap();
        t.add_link("S", "C", 1, 0.0).unwrap();
        t.add_link("B", "C", 1, 0.0).unwrap();
        t
    }

    /// One source and `peers` peers on a bidirectional ring, plus one random
    /// bidirectional chord per peer. The source feeds `fanout` distinct
    /// random peers. All links have capacity 1.
    pub fn random_mesh(peers: usize, fanout: usize, loss: f64, seed: u64) -> Result<Self, SimError> {
        if peers < 3 || fanout == 0 || fanout > peers {
            return Err(SimError::InvalidTopology("mesh needs >= 3 peers and 1..=peers fanout".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Topology::new();
        t.add_node("S", Role::Source)?;
        let names: Vec<String> = (1..=peers).map(|i| format!("P{i:02}")).collect();
        for n in &names {
            t.add_node(n.as_str(), Role::Peer)?;
        }
        let mut edges: Vec<(usize, usize)> = (0..peers).map(|i| (i, (i + 1) % peers)).collect();
        let has = |edges: &[(usize, usize)], a: usize, b: usize| {
            edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a))
        };
        for i in 0..peers {
            for _ in 0..64 {
                let j = rng.gen_range(0..peers);
                if j != i && !has(&edges, i, j) {
                    edges.push((i, j));
                    break;
                }
            }
        }
        for &(a, b) in &edges {
            t.add_link(&names[a], &names[b], 1, loss)?;
            t.add_link(&names[b], &names[a], 1, loss)?;
        }
        let mut targets: Vec<usize> = (0..peers).collect();
        for i in 0..fanout {
            let j = rng.gen_range(i..peers);
            targets.swap(i, j);
            t.add_link("S", &names[targets[i]], 1, loss)?;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Coded,
    UncodedRandom,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Coded => "coded",
            Strategy::UncodedRandom => "uncoded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkStats {
    /// Packets handed to the link.
    pub sent: usize,
    /// Packets that survived loss.
    pub delivered: usize,
    /// Delivered packets that raised the receiver's rank.
    pub innovative: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStats {
    pub seed: u64,
    pub k: usize,
    pub strategy: Strategy,
    pub round_cap: usize,
    /// Rounds actually simulated.
    pub rounds: usize,
    /// Round at which each node reached rank `k` (sources: 0).
    pub completion: Vec<Option<usize>>,
    /// Packets delivered to each node.
    pub received: Vec<usize>,
    /// `rank_trace[r][node]` is the rank at the end of round `r` (row 0 is
    /// the initial state).
    pub rank_trace: Vec<Vec<usize>>,
    pub links: Vec<LinkStats>,
    /// Whether the round cap stopped the run before every peer completed.
    pub cap_hit: bool,
}

impl RunStats {
    /// Round at which the last peer completed, if all did.
    pub fn completion_time(&self) -> Option<usize> {
        self.completion.iter().try_fold(0, |acc, c| c.map(|c| acc.max(c)))
    }

    /// Completion time, counting an incomplete run as the cap.
    pub fn completion_or_cap(&self) -> usize {
        self.completion_time().unwrap_or(self.round_cap)
    }

    pub fn incomplete_nodes(&self) -> Vec<usize> {
        (0..self.completion.len()).filter(|&i| self.completion[i].is_none()).collect()
    }
}

enum NodeState {
    Coded(Decoder),
    Uncoded { held: Vec<usize>, has: Vec<bool> },
}

impl NodeState {
    fn rank(&self) -> usize {
        match self {
            NodeState::Coded(d) => d.rank(),
            NodeState::Uncoded { held, .. } => held.len(),
        }
    }
}

enum Transfer {
    Coded(CodedPacket),
    Uncoded(usize),
}

/// Seed for trial `trial` under base `seed`: splitmix64 of their wrapping sum.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed.wrapping_add(trial))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn default_round_cap(k: usize, diameter: usize) -> usize {
    10 * k * diameter.max(1)
}

pub fn run(topology: &Topology, strategy: Strategy, k: usize, seed: u64) -> Result<RunStats, SimError> {
    let cap = default_round_cap(k, topology.diameter()?);
    run_with_cap(topology, strategy, k, seed, cap)
}

pub fn run_with_cap(
    topology: &Topology,
    strategy: Strategy,
    k: usize,
    seed: u64,
    round_cap: usize,
) -> Result<RunStats, SimError> {
    if k == 0 {
        return Err(SimError::InvalidK);
    }
    topology.diameter()?;
    let n = topology.nodes.len();
    let generation = GenerationId(seed);
    let mut loss_rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x4C05_5000));
    let mut content_rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0xC0DE_0000));

    let source_payloads: Vec<u8> = (0..k).map(|_| content_rng.gen()).collect();
    let mut states: Vec<NodeState> = topology
        .nodes
        .iter()
        .map(|node| {
            let is_source = node.role == Role::Source;
            match strategy {
                Strategy::Coded => {
                    let mut d = Decoder::new(k, 1).expect("k >= 1");
                    if is_source {
                        for (i, &b) in source_payloads.iter().enumerate() {
                            let p = CodedPacket {
                                generation,
                                vector: crate::rlnc::CodingVector::unit(k, i),
                                payload: vec![b],
                            };
                            d.add(&p).expect("shape matches");
                        }
                    }
                    NodeState::Coded(d)
                }
                Strategy::UncodedRandom => {
                    if is_source {
                        NodeState::Uncoded { held: (0..k).collect(), has: vec![true; k] }
                    } else {
                        NodeState::Uncoded { held: Vec::new(), has: vec![false; k] }
                    }
                }
            }
        })
        .collect();

    let mut completion: Vec<Option<usize>> = states.iter().map(|s| (s.rank() == k).then_some(0)).collect();
    let mut received = vec![0usize; n];
    let mut links = vec![LinkStats::default(); topology.links.len()];
    let mut rank_trace = vec![states.iter().map(NodeState::rank).collect::<Vec<_>>()];
    let mut round = 0;

    while completion.iter().any(Option::is_none) && round < round_cap {
        round += 1;
        let mut deliveries: Vec<(usize, usize, Transfer)> = Vec::new();
        for (li, link) in topology.links.iter().enumerate() {
            for _ in 0..link.capacity {
                let lost = loss_rng.gen::<f64>() < link.loss;
                let transfer = match &states[link.from] {
                    NodeState::Coded(d) => {
                        if d.rank() == 0 {
                            continue;
                        }
                        if lost {
                            links[li].sent += 1;
                            continue;
                        }
                        Transfer::Coded(d.recode(&mut content_rng).expect("rank > 0"))
                    }
                    NodeState::Uncoded { held, .. } => {
                        if held.is_empty() {
                            continue;
                        }
                        if lost {
                            links[li].sent += 1;
                            continue;
                        }
                        Transfer::Uncoded(held[content_rng.gen_range(0..held.len())])
                    }
                };
                links[li].sent += 1;
                deliveries.push((li, link.to, transfer));
            }
        }
        for (li, to, transfer) in deliveries {
            links[li].delivered += 1;
            received[to] += 1;
            let innovative = match (&mut states[to], transfer) {
                (NodeState::Coded(d), Transfer::Coded(p)) => {
                    d.add(&p).expect("simulation packets match decoder shape") == AddOutcome::Innovative
                }
                (NodeState::Uncoded { held, has }, Transfer::Uncoded(i)) => {
                    if has[i] {
                        false
                    } else {
                        has[i] = true;
                        held.push(i);
                        true
                    }
                }
                _ => unreachable!("all nodes share one strategy"),
            };
            if innovative {
                links[li].innovative += 1;
            }
        }
        for (i, s) in states.iter().enumerate() {
            if completion[i].is_none() && s.rank() == k {
                completion[i] = Some(round);
            }
        }
        rank_trace.push(states.iter().map(NodeState::rank).collect());
    }

    // decoded content must match what the sources hold
    if strategy == Strategy::Coded {
        for (i, s) in states.iter().enumerate() {
            if let (NodeState::Coded(d), Some(_)) = (s, completion[i]) {
                let out = d.extract().expect("complete decoder extracts");
                debug_assert!(out.iter().zip(&source_payloads).all(|(p, &b)| p.payload == [b]));
            }
        }
    }

    Ok(RunStats {
        seed,
        k,
        strategy,
        round_cap,
        rounds: round,
        cap_hit: completion.iter().any(Option::is_none),
        completion,
        received,
        rank_trace,
        links,
    })
}

/// Innovative fractions of the B→C transfer in the four-node example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure21Result {
    pub trials: usize,
    pub uncoded_fraction: f64,
    pub coded_fraction: f64,
}

pub const FIGURE21_MIN_TRIALS: usize = 1000;

/// A holds packets 1 and 2. B downloads one packet from A while C
/// independently receives packet 1; then B sends one packet to C. Measures
/// how often that last transfer is innovative for C under each strategy.
pub fn figure21_scenario(seed: u64, trials: usize) -> Figure21Result {
    let trials = trials.max(FIGURE21_MIN_TRIALS);
    let g = GenerationId(21);
    let packets = [
        CodedPacket { generation: g, vector: crate::rlnc::CodingVector::unit(2, 0), payload: vec![1] },
        CodedPacket { generation: g, vector: crate::rlnc::CodingVector::unit(2, 1), payload: vec![2] },
    ];
    let mut uncoded = 0usize;
    let mut coded = 0usize;
    for t in 0..trials as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t));

        // uncoded: B picks 1 or 2 uniformly; only packet 2 helps C
        let b_holds = rng.gen_range(0..2usize);
        if b_holds == 1 {
            uncoded += 1;
        }

        let mut a = Decoder::new(2, 1).expect("valid shape");
        for p in &packets {
            a.add(p).expect("valid shape");
        }
        let mut b = Decoder::new(2, 1).expect("valid shape");
        b.add(&a.recode(&mut rng).expect("A holds packets")).expect("valid shape");
        let mut c = Decoder::new(2, 1).expect("valid shape");
        c.add(&packets[0]).expect("valid shape");
        let from_b = b.recode(&mut rng).expect("B holds a packet");
        if c.add(&from_b).expect("valid shape") == AddOutcome::Innovative {
            coded += 1;
        }
    }
    Figure21Result {
        trials,
        uncoded_fraction: uncoded as f64 / trials as f64,
        coded_fraction: coded as f64 / trials as f64,
    }
}

pub const MIN_BENCH_TRIALS: usize = 30;
const BOOTSTRAP_RESAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub coded_rounds: usize,
    pub uncoded_rounds: usize,
    pub coded_complete: bool,
    pub uncoded_complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub k: usize,
    pub seed: u64,
    pub rows: Vec<TrialRow>,
    pub mean_coded: f64,
    pub mean_uncoded: f64,
    /// `100 · (uncoded − coded) / uncoded` over mean completion rounds.
    pub improvement_pct: f64,
    /// 95% percentile bootstrap interval of `improvement_pct`.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BenchReport {
    /// Per-trial table with a header line, followed by `#`-prefixed summary
    /// lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,seed,coded_rounds,uncoded_rounds,coded_complete,uncoded_complete\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.trial, r.seed, r.coded_rounds, r.uncoded_rounds, r.coded_complete, r.uncoded_complete
            )
            .unwrap();
        }
        writeln!(out, "# k={} trials={} seed={}", self.k, self.rows.len(), self.seed).unwrap();
        writeln!(out, "# mean_coded={:.4} mean_uncoded={:.4}", self.mean_coded, self.mean_uncoded).unwrap();
        writeln!(out, "# improvement_pct={:.4} ci95=[{:.4}, {:.4}]", self.improvement_pct, self.ci_low, self.ci_high)
            .unwrap();
        out
    }
}

fn improvement(coded: f64, uncoded: f64) -> f64 {
    if uncoded == 0.0 {
        0.0
    } else {
        100.0 * (uncoded - coded) / uncoded
    }
}

/// Runs both strategies on the same per-trial seeds and reports the
/// relative reduction in mean completion rounds. Runs that hit the round
/// cap count as the cap.
pub fn bench_download(topology: &Topology, k: usize, trials: usize, seed: u64) -> Result<BenchReport, SimError> {
    if trials < MIN_BENCH_TRIALS {
        return Err(SimError::TooFewTrials { min: MIN_BENCH_TRIALS, got: trials });
    }
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t as u64);
            let c = run(topology, Strategy::Coded, k, s)?;
            let u = run(topology, Strategy::UncodedRandom, k, s)?;
            Ok(TrialRow {
                trial: t,
                seed: s,
                coded_rounds: c.completion_or_cap(),
                uncoded_rounds: u.completion_or_cap(),
                coded_complete: !c.cap_hit,
                uncoded_complete: !u.cap_hit,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let means = |idx: &mut dyn Iterator<Item = usize>| {
        let (c, u, n) = idx.fold((0usize, 0usize, 0usize), |(c, u, n), i| {
            (c + rows[i].coded_rounds, u + rows[i].uncoded_rounds, n + 1)
        });
        (c as f64 / n as f64, u as f64 / n as f64)
    };
    let (mean_coded, mean_uncoded) = means(&mut (0..trials));

    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x000B_0075_7AA9));
    let mut samples: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let (c, u) = means(&mut (0..trials).map(|_| rng.gen_range(0..trials)));
            improvement(c, u)
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    let pick = |q: f64| samples[((q * (samples.len() - 1) as f64).round() as usize).min(samples.len() - 1)];

    Ok(BenchReport {
        k,
        seed,
        improvement_pct: improvement(mean_coded, mean_uncoded),
        ci_low: pick(0.025),
        ci_high: pick(0.975),
        mean_coded,
        mean_uncoded,
        rows,
    })
}
