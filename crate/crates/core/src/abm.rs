//! Link-update simulation of the adaptive voter model.
//!
//! One unit of model time is `K` link selections, so each active link is
//! resolved at rate 1 and each of its endpoints acts at rate 1/2.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{self, stream_rng, EdgeId, Graph, NodeId, Opinion, OpinionState};
use crate::series::{sample_times, SeriesMeta, Source, TimeSeries};

const INACTIVE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingMode {
    /// Every link is a candidate; inert selections only advance the clock.
    #[default]
    Uniform,
    /// Only active links are selected; the clock advances by the geometric
    /// number of uniform selections the draw stands for.
    RejectionFree,
}

impl SamplingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplingMode::Uniform => "uniform",
            SamplingMode::RejectionFree => "rejection-free",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    Inert,
    Adopted { node: NodeId, opinion: Opinion },
    Rewired { edge: EdgeId, from: NodeId, to: NodeId },
    /// Rewiring was chosen but the chooser had no admissible target.
    Skipped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub mean_degree: f64,
    pub p: f64,
    pub t_end: f64,
    pub seed: u64,
    pub sample_interval: f64,
    pub sampling: SamplingMode,
}

impl SimConfig {
    pub fn new(n: usize, mean_degree: f64, p: f64, t_end: f64, seed: u64) -> Self {
        SimConfig { n, mean_degree, p, t_end, seed, sample_interval: 1.0, sampling: SamplingMode::Uniform }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid("p", format!("must lie in [0, 1], got {}", self.p)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::invalid("sample_interval", format!("must be positive, got {}", self.sample_interval)));
        }
        if self.n < 2 {
            return Err(Error::invalid("n", format!("need at least 2 nodes, got {}", self.n)));
        }
        Ok(())
    }
}

/// Mutable simulation state with the active-link set kept incrementally.
#[derive(Clone, Debug)]
pub struct SimState {
    graph: Graph,
    opinions: OpinionState,
    active: Vec<EdgeId>,
    active_pos: Vec<usize>,
    // nodes by opinion, for O(1) same-opinion draws
    pools: [Vec<NodeId>; 2],
    pool_pos: Vec<usize>,
    edge_count: usize,
    // uniform selections performed so far; time = trials / K
    trials: u64,
}

impl SimState {
    pub fn new(graph: Graph, opinions: OpinionState) -> Self {
        assert_eq!(graph.node_count(), opinions.len(), "opinion vector does not match graph");
        let edge_count = graph.edge_count();
        let mut state = SimState {
            active: Vec::new(),
            active_pos: vec![INACTIVE; edge_count],
            pools: [Vec::new(), Vec::new()],
            pool_pos: vec![0; graph.node_count()],
            edge_count,
            trials: 0,
            graph,
            opinions,
        };
        for e in 0..edge_count {
            if graph::is_active(&state.graph, &state.opinions, e) {
                state.activate(e);
            }
        }
        for v in 0..state.graph.node_count() as NodeId {
            let pool = &mut state.pools[state.opinions.get(v).index()];
            state.pool_pos[v as usize] = pool.len();
            pool.push(v);
        }
        state
    }

    /// ER graph with balanced random opinions.
    pub fn initialize(n: usize, mean_degree: f64, seed: u64) -> Result<Self> {
        let graph = graph::generate_er(n, mean_degree, seed)?;
        let opinions = graph::assign_opinions(&graph, seed);
        Ok(SimState::new(graph, opinions))
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn opinions(&self) -> &OpinionState {
        &self.opinions
    }

    pub fn time(&self) -> f64 {
        if self.edge_count == 0 {
            0.0
        } else {
            self.trials as f64 / self.edge_count as f64
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Mean active degree of an A-node, `2·|active| / N`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.active.len() as f64 / self.graph.node_count() as f64
    }

    fn activate(&mut self, e: EdgeId) {
        if self.active_pos[e] == INACTIVE {
            self.active_pos[e] = self.active.len();
            self.active.push(e);
        }
    }

    fn deactivate(&mut self, e: EdgeId) {
        let pos = self.active_pos[e];
        if pos != INACTIVE {
            self.active.swap_remove(pos);
            if let Some(&moved) = self.active.get(pos) {
                self.active_pos[moved] = pos;
            }
            self.active_pos[e] = INACTIVE;
        }
    }

    fn set_opinion(&mut self, node: NodeId, opinion: Opinion) {
        let old = self.opinions.get(node);
        if old == opinion {
            return;
        }
        let pos = self.pool_pos[node as usize];
        let pool = &mut self.pools[old.index()];
        pool.swap_remove(pos);
        if let Some(&moved) = pool.get(pos) {
            self.pool_pos[moved as usize] = pos;
        }
        let pool = &mut self.pools[opinion.index()];
        self.pool_pos[node as usize] = pool.len();
        pool.push(node);
        self.opinions.set(node, opinion);

        // every incident link flips between active and inert
        for i in 0..self.graph.degree(node) {
            let e = self.graph.incident_edges(node)[i];
            if self.active_pos[e] == INACTIVE {
                self.activate(e);
            } else {
                self.deactivate(e);
            }
        }
    }

    /// Number of uniform selections until the next event. `None` when there is
    /// nothing left to happen.
    fn waiting_trials<R: Rng + ?Sized>(&self, sampling: SamplingMode, rng: &mut R) -> Option<u64> {
        match sampling {
            _ if self.edge_count == 0 => None,
            SamplingMode::Uniform => Some(1),
            SamplingMode::RejectionFree => {
                if self.active.is_empty() {
                    return None;
                }
                let q = self.active.len() as f64 / self.edge_count as f64;
                let failures = Geometric::new(q).expect("active fraction in (0, 1]").sample(rng);
                Some(failures + 1)
            }
        }
    }

    fn resolve<R: Rng + ?Sized>(&mut self, p: f64, sampling: SamplingMode, rng: &mut R) -> Event {
        let edge = match sampling {
            SamplingMode::Uniform => rng.random_range(0..self.edge_count),
            SamplingMode::RejectionFree => self.active[rng.random_range(0..self.active.len())],
        };
        if self.active_pos[edge] == INACTIVE {
            return Event::Inert;
        }
        let [u, v] = self.graph.endpoints(edge);
        let (chooser, partner) = if rng.random_bool(0.5) { (u, v) } else { (v, u) };

        if rng.random_bool(p) {
            match self.rewiring_target(chooser, rng) {
                Some(target) => {
                    self.graph.move_endpoint(edge, partner, target);
                    self.deactivate(edge);
                    Event::Rewired { edge, from: partner, to: target }
                }
                None => Event::Skipped,
            }
        } else {
            let opinion = self.opinions.get(partner);
            self.set_opinion(chooser, opinion);
            Event::Adopted { node: chooser, opinion }
        }
    }

    /// Uniform same-opinion node that is neither `node` nor one of its
    /// neighbours, redrawing at most `#same-opinion - 1` times.
    fn rewiring_target<R: Rng + ?Sized>(&self, node: NodeId, rng: &mut R) -> Option<NodeId> {
        let pool = &self.pools[self.opinions.get(node).index()];
        for _ in 1..pool.len() {
            let candidate = pool[rng.random_range(0..pool.len())];
            if candidate != node && !self.graph.has_edge(node, candidate) {
                return Some(candidate);
            }
        }
        None
    }

    /// Processes one link selection (uniform mode) or one active-link event
    /// (rejection-free mode), advancing the clock accordingly. With no active
    /// links the state is absorbing and nothing changes.
    pub fn step<R: Rng + ?Sized>(&mut self, p: f64, sampling: SamplingMode, rng: &mut R) -> Event {
        match self.waiting_trials(sampling, rng) {
            Some(trials) => {
                self.trials += trials;
                self.resolve(p, sampling, rng)
            }
            None => Event::Inert,
        }
    }

    /// Connected components and whether each is internally of one opinion.
    pub fn detect_fragmentation(&self) -> Fragmentation {
        let n = self.graph.node_count();
        let mut component = vec![usize::MAX; n];
        let mut consensus = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = consensus.len();
            let opinion = self.opinions.get(start as NodeId);
            let mut uniform = true;
            component[start] = id;
            queue.push_back(start as NodeId);
            while let Some(v) = queue.pop_front() {
                uniform &= self.opinions.get(v) == opinion;
                for w in self.graph.neighbors(v) {
                    if component[w as usize] == usize::MAX {
                        component[w as usize] = id;
                        queue.push_back(w);
                    }
                }
            }
            consensus.push(uniform);
        }
        Fragmentation { consensus }
    }

    /// Recomputes the active set and pools from scratch and compares them
    /// with the incremental bookkeeping. Empty means consistent.
    pub fn audit_report(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.graph.edge_count() != self.edge_count {
            problems.push(format!("edge count {} != K = {}", self.graph.edge_count(), self.edge_count));
        }
        if !self.graph.is_consistent() {
            problems.push("graph is not simple or incidence lists disagree".to_owned());
        }
        let mut expected = 0;
        for e in 0..self.graph.edge_count() {
            let truly = graph::is_active(&self.graph, &self.opinions, e);
            expected += truly as usize;
            let pos = self.active_pos.get(e).copied().unwrap_or(INACTIVE);
            let tracked = pos != INACTIVE && self.active.get(pos) == Some(&e);
            if truly != tracked {
                problems.push(format!("edge {e}: active = {truly}, tracked = {tracked}"));
            }
        }
        if expected != self.active.len() {
            problems.push(format!("{} tracked active links, {expected} actual", self.active.len()));
        }
        for opinion in [Opinion::A, Opinion::B] {
            let pool = &self.pools[opinion.index()];
            if pool.len() != self.opinions.count(opinion) {
                problems.push(format!("pool {opinion:?} has {} nodes, expected {}", pool.len(), self.opinions.count(opinion)));
            }
            for (i, &v) in pool.iter().enumerate() {
                if self.opinions.get(v) != opinion || self.pool_pos[v as usize] != i {
                    problems.push(format!("node {v} misfiled in pool {opinion:?}"));
                }
            }
        }
        problems
    }

    pub fn audit(&self) -> bool {
        let problems = self.audit_report();
        for p in &problems {
            log::error!("audit: {p}");
        }
        problems.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragmentation {
    /// One flag per connected component, in order of lowest node id.
    pub consensus: Vec<bool>,
}

impl Fragmentation {
    pub fn component_count(&self) -> usize {
        self.consensus.len()
    }

    pub fn all_consensus(&self) -> bool {
        self.consensus.iter().all(|&c| c)
    }
}

/// Seed for replicate `r` of a run seeded with `seed` (splitmix64 mix).
pub fn replicate_seed(seed: u64, replicate: u64) -> u64 {
    let mut z = seed ^ replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct AbmRun {
    pub series: TimeSeries,
    pub state: SimState,
}

/// Runs from `state` until `t_end` or absorption, sampling γ on the grid
/// `0, h, 2h, ...`. After absorption the remaining samples are 0.
pub fn run_from<R: Rng + ?Sized>(state: &mut SimState, config: &SimConfig, rng: &mut R, series: &mut TimeSeries) {
    let times = sample_times(config.t_end, config.sample_interval);
    let k = state.edge_count as f64;
    let mut next = times.partition_point(|&t| t < state.time());
    loop {
        let Some(wait) = state.waiting_trials(config.sampling, rng).filter(|_| !state.active.is_empty()) else {
            for &t in &times[next..] {
                series.push(t, state.gamma());
            }
            return;
        };
        let t_event = (state.trials + wait) as f64 / k;
        while next < times.len() && times[next] < t_event {
            series.push(times[next], state.gamma());
            next += 1;
        }
        if next == times.len() {
            return;
        }
        state.trials += wait;
        state.resolve(config.p, config.sampling, rng);
    }
}

pub fn run_replicate(config: &SimConfig, replicate: u64) -> Result<AbmRun> {
    config.validate()?;
    let seed = replicate_seed(config.seed, replicate);
    let mut state = SimState::initialize(config.n, config.mean_degree, seed)?;
    let mut rng = stream_rng(seed, 2);
    let meta = SeriesMeta {
        p: config.p,
        kappa: config.mean_degree,
        replicate,
        mode: config.sampling.as_str().to_owned(),
    };
    let mut series = TimeSeries::new(Source::Abm, meta);
    run_from(&mut state, config, &mut rng, &mut series);
    Ok(AbmRun { series, state })
}

pub fn run(config: &SimConfig) -> Result<TimeSeries> {
    run_replicate(config, 0).map(|r| r.series)
}

/// Independent replicates in parallel, returned in replicate order.
pub fn run_ensemble(config: &SimConfig, replicates: u64) -> Result<Vec<AbmRun>> {
    config.validate()?;
    (0..replicates).into_par_iter().map(|r| run_replicate(config, r)).collect()
}
