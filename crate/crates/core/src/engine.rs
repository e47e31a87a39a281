//! Repeated-game engine: wires the two layers of per-owner learners
//! together, plays simultaneous rounds, and emits a per-iteration trace.
//!
//! Each round, owner `n` observes the curator's previous payment index
//! and samples a noise-saving action; the curator's `n`-th learner
//! observes owner `n`'s previous saving index and samples a payment.
//! Neither side sees the opponent's current move. The `N` learner pairs
//! are mutually independent within a round, so they can be stepped in
//! parallel; per-agent random streams keep parallel and serial runs
//! bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, GameConfig, Scheme};
use crate::game_model::{self, DoProfile};
use crate::learners::LearnerState;
use crate::privacy;

/// One owner's slice of an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoRow {
    pub do_id: usize,
    pub price_index: usize,
    pub noise_index: usize,
    pub do_reward: f64,
    pub curator_reward: f64,
    /// zCDP budget at the realized noise scale; `+inf` at full saving.
    pub alpha: f64,
}

/// Everything recorded about one game round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: u64,
    pub rows: Vec<DoRow>,
    pub curator_total: f64,
    pub mean_delta_sigma: f64,
    pub mean_price: f64,
}

/// End-of-run statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub iterations_run: u64,
    pub converged: bool,
    /// First iteration at which the trailing window was flat, when any.
    pub convergence_iteration: Option<u64>,
    /// Mean saved noise over the final trailing window.
    pub converged_mean_delta_sigma: f64,
    /// Mean payment over the final trailing window.
    pub converged_mean_price: f64,
    /// Mean per-iteration curator payoff over the final trailing window.
    pub converged_curator_payoff: f64,
    pub cumulative_do_payoff: f64,
    pub cumulative_curator_payoff: f64,
}

/// Serializable snapshot of a finished (or paused) run, sufficient for
/// equilibrium verification without replaying the simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub config_hash: String,
    pub master_seed: u64,
    pub profiles: Vec<DoProfile>,
    pub do_learners: Vec<LearnerState>,
    pub curator_learners: Vec<LearnerState>,
}

struct Agent {
    learner: LearnerState,
    rng: ChaCha12Rng,
    scheme: Scheme,
    /// Opponent's last realized action; `None` before the first round.
    opponent_last: Option<usize>,
}

impl Agent {
    fn new(num_states: usize, num_actions: usize, scheme: Scheme, rng: ChaCha12Rng) -> Self {
        Self {
            learner: LearnerState::new(num_states, num_actions),
            rng,
            scheme,
            opponent_last: None,
        }
    }
}

pub struct Engine {
    config: GameConfig,
    profiles: Vec<DoProfile>,
    do_agents: Vec<Agent>,
    curator_agents: Vec<Agent>,
    /// Curator's previous payment index per owner; the owner's state.
    prev_price_idx: Vec<usize>,
    /// Owner's previous saving index; the curator learner's state.
    prev_noise_idx: Vec<usize>,
    t: u64,
}

// Stream ids for deriving independent ChaCha streams from the master seed.
const STREAM_POPULATION: u64 = 0;
const STREAM_DO_BASE: u64 = 1;

fn agent_rng(master_seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Samples the owner population from the master seed: privacy costs
/// uniform on `[c_min, c_max]`, non-IID degrees log-uniform on
/// `[beta_min, beta_max]`.
pub fn sample_population(config: &GameConfig) -> Vec<DoProfile> {
    let p = &config.population;
    let mut rng = agent_rng(config.master_seed, STREAM_POPULATION);
    (0..config.num_dos)
        .map(|_| {
            let c = if p.c_min == p.c_max {
                p.c_min
            } else {
                rng.random_range(p.c_min..p.c_max)
            };
            let beta = if p.beta_min == p.beta_max {
                p.beta_min
            } else {
                let (lo, hi) = (p.beta_min.ln(), p.beta_max.ln());
                rng.random_range(lo..hi).exp()
            };
            DoProfile {
                unit_privacy_cost: c,
                non_iid_degree: beta,
                batch_size: p.batch_size,
                lipschitz: p.lipschitz,
                data_size: p.data_size,
            }
        })
        .collect()
}

struct PairOutcome {
    price_index: usize,
    noise_index: usize,
    do_reward: f64,
    curator_reward: f64,
    alpha: f64,
}

impl Engine {
    /// Validates the configuration and initializes the population and
    /// both layers of learners. Deterministic in the master seed.
    pub fn new(config: GameConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let profiles = sample_population(&config);
        let price_levels = config.grids.price_levels();
        let noise_levels = config.grids.noise_levels();
        let do_agents = (0..config.num_dos)
            .map(|n| {
                Agent::new(
                    price_levels,
                    noise_levels,
                    config.do_scheme,
                    agent_rng(config.master_seed, STREAM_DO_BASE + 2 * n as u64),
                )
            })
            .collect();
        let curator_agents = (0..config.num_dos)
            .map(|n| {
                Agent::new(
                    noise_levels,
                    price_levels,
                    config.curator_scheme,
                    agent_rng(config.master_seed, STREAM_DO_BASE + 2 * n as u64 + 1),
                )
            })
            .collect();
        let n = config.num_dos;
        Ok(Self {
            config,
            profiles,
            do_agents,
            curator_agents,
            prev_price_idx: vec![0; n],
            prev_noise_idx: vec![0; n],
            t: 0,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn profiles(&self) -> &[DoProfile] {
        &self.profiles
    }

    pub fn do_learner(&self, n: usize) -> &LearnerState {
        &self.do_agents[n].learner
    }

    pub fn curator_learner(&self, n: usize) -> &LearnerState {
        &self.curator_agents[n].learner
    }

    pub fn iterations_played(&self) -> u64 {
        self.t
    }

    /// Plays one simultaneous round and updates every learner.
    pub fn step(&mut self) -> IterationRecord {
        self.t += 1;
        let t = self.t;
        let config = &self.config;
        let profiles = &self.profiles;
        let prev_price = &self.prev_price_idx;
        let prev_noise = &self.prev_noise_idx;

        let step_one = |n: usize, owner: &mut Agent, curator: &mut Agent| -> PairOutcome {
            step_pair(
                t,
                config,
                &profiles[n],
                owner,
                curator,
                prev_price[n],
                prev_noise[n],
            )
        };

        #[cfg(feature = "parallel")]
        let outcomes: Vec<PairOutcome> = if config.parallel {
            self.do_agents
                .par_iter_mut()
                .zip(self.curator_agents.par_iter_mut())
                .enumerate()
                .map(|(n, (owner, curator))| step_one(n, owner, curator))
                .collect()
        } else {
            self.do_agents
                .iter_mut()
                .zip(self.curator_agents.iter_mut())
                .enumerate()
                .map(|(n, (owner, curator))| step_one(n, owner, curator))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let outcomes: Vec<PairOutcome> = self
            .do_agents
            .iter_mut()
            .zip(self.curator_agents.iter_mut())
            .enumerate()
            .map(|(n, (owner, curator))| step_one(n, owner, curator))
            .collect();

        let n = outcomes.len() as f64;
        let mut record = IterationRecord {
            t,
            rows: Vec::with_capacity(outcomes.len()),
            curator_total: 0.0,
            mean_delta_sigma: 0.0,
            mean_price: 0.0,
        };
        for (i, o) in outcomes.iter().enumerate() {
            self.prev_price_idx[i] = o.price_index;
            self.prev_noise_idx[i] = o.noise_index;
            record.curator_total += o.curator_reward;
            record.mean_delta_sigma += self
                .config
                .grids
                .noise_saving_of_index(o.noise_index)
                .expect("on-grid");
            record.mean_price += self
                .config
                .grids
                .price_of_index(o.price_index)
                .expect("on-grid");
            record.rows.push(DoRow {
                do_id: i,
                price_index: o.price_index,
                noise_index: o.noise_index,
                do_reward: o.do_reward,
                curator_reward: o.curator_reward,
                alpha: o.alpha,
            });
        }
        record.mean_delta_sigma /= n;
        record.mean_price /= n;
        record
    }

    /// Runs until the configured iteration budget or, when early stopping
    /// is enabled, until the convergence detector fires.
    pub fn run(&mut self) -> (Vec<IterationRecord>, RunSummary) {
        let window = self.config.convergence.window;
        let threshold = self.config.convergence.threshold;
        let mut trace = Vec::new();
        let mut converged_at = None;
        let mut cumulative_do = 0.0;
        let mut cumulative_curator = 0.0;
        while self.t < self.config.max_iterations {
            let record = self.step();
            cumulative_do += record.rows.iter().map(|r| r.do_reward).sum::<f64>();
            cumulative_curator += record.curator_total;
            trace.push(record);
            if converged_at.is_none() && trailing_window_flat(&trace, window, threshold) {
                converged_at = Some(self.t);
                if self.config.convergence.early_stop {
                    break;
                }
            }
        }
        let tail = &trace[trace.len().saturating_sub(window)..];
        let tail_n = tail.len().max(1) as f64;
        let summary = RunSummary {
            iterations_run: self.t,
            converged: converged_at.is_some(),
            convergence_iteration: converged_at,
            converged_mean_delta_sigma: tail.iter().map(|r| r.mean_delta_sigma).sum::<f64>()
                / tail_n,
            converged_mean_price: tail.iter().map(|r| r.mean_price).sum::<f64>() / tail_n,
            converged_curator_payoff: tail.iter().map(|r| r.curator_total).sum::<f64>() / tail_n,
            cumulative_do_payoff: cumulative_do,
            cumulative_curator_payoff: cumulative_curator,
        };
        (trace, summary)
    }

    pub fn snapshot(&self) -> RunSnapshot {
        RunSnapshot {
            config_hash: self.config.hash(),
            master_seed: self.config.master_seed,
            profiles: self.profiles.clone(),
            do_learners: self.do_agents.iter().map(|a| a.learner.clone()).collect(),
            curator_learners: self
                .curator_agents
                .iter()
                .map(|a| a.learner.clone())
                .collect(),
        }
    }

    /// Simplex check over every agent's policy tables.
    pub fn check_all_policies(&self) -> Result<(), game_model::ModelError> {
        for a in self.do_agents.iter().chain(&self.curator_agents) {
            a.learner.check_policies()?;
        }
        Ok(())
    }
}

fn step_pair(
    t: u64,
    config: &GameConfig,
    profile: &DoProfile,
    owner: &mut Agent,
    curator: &mut Agent,
    owner_state: usize,
    curator_state: usize,
) -> PairOutcome {
    let grids = &config.grids;
    let owner_saw = owner.opponent_last;
    let curator_saw = curator.opponent_last;
    // Both sides choose simultaneously, seeing only the opponent's
    // previous realized action.
    let noise_index = select(owner, owner_state, t, config, |j| {
        let p = grids
            .price_of_index(owner_saw.unwrap_or(0))
            .expect("on-grid");
        let ds = grids.noise_saving_of_index(j).expect("on-grid");
        game_model::do_realized_payoff_unchecked(p, ds, profile, &config.econ, grids)
    });
    let price_index = select(curator, curator_state, t, config, |k| {
        let p = grids.price_of_index(k).expect("on-grid");
        let ds = grids
            .noise_saving_of_index(curator_saw.unwrap_or(0))
            .expect("on-grid");
        game_model::curator_realized_payoff_per_do(
            p,
            ds,
            profile.non_iid_degree,
            &config.econ,
            &config.loss,
        )
        .expect("valid domain")
    });

    let p = grids.price_of_index(price_index).expect("on-grid");
    let ds = grids.noise_saving_of_index(noise_index).expect("on-grid");
    let do_reward = game_model::do_realized_payoff_unchecked(p, ds, profile, &config.econ, grids);
    let curator_reward = game_model::curator_realized_payoff_per_do(
        p,
        ds,
        profile.non_iid_degree,
        &config.econ,
        &config.loss,
    )
    .expect("valid domain");
    let alpha = privacy::zcdp_budget(grids.sigma_max - ds, profile).expect("sigma >= 0");

    // Next states are the opponent's just-realized actions.
    update(
        owner,
        owner_state,
        noise_index,
        do_reward,
        price_index,
        t,
        config,
    );
    update(
        curator,
        curator_state,
        price_index,
        curator_reward,
        noise_index,
        t,
        config,
    );
    owner.opponent_last = Some(price_index);
    curator.opponent_last = Some(noise_index);

    PairOutcome {
        price_index,
        noise_index,
        do_reward,
        curator_reward,
        alpha,
    }
}

fn select<F: Fn(usize) -> f64>(
    agent: &mut Agent,
    state: usize,
    t: u64,
    config: &GameConfig,
    immediate_payoff: F,
) -> usize {
    match agent.scheme {
        Scheme::WolfPhc => agent.learner.select_action(state, &mut agent.rng),
        Scheme::QLearning => {
            let eps = config.epsilon.epsilon(t);
            agent.learner.qlearning_select(state, eps, &mut agent.rng)
        }
        Scheme::Greedy => match agent.opponent_last {
            // No observation yet: uniform random first move.
            None => agent.rng.random_range(0..agent.learner.num_actions()),
            Some(_) => {
                crate::learners::greedy_select(agent.learner.num_actions(), immediate_payoff)
            }
        },
    }
}

fn update(
    agent: &mut Agent,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    t: u64,
    config: &GameConfig,
) {
    let wolf = &config.wolf;
    match agent.scheme {
        Scheme::WolfPhc => {
            agent
                .learner
                .q_update(state, action, reward, next_state, wolf.eta, wolf.discount)
                .expect("indices on-grid");
            agent.learner.record_visit(state);
            let step = agent.learner.wolf_step_size(state, t, wolf);
            agent
                .learner
                .phc_policy_update(state, step)
                .expect("valid state");
            agent.learner.avg_policy_update(state).expect("visited");
        }
        Scheme::QLearning => {
            agent
                .learner
                .q_update(state, action, reward, next_state, wolf.eta, wolf.discount)
                .expect("indices on-grid");
            agent.learner.record_visit(state);
            let greedy = agent.learner.greedy_action(state);
            agent.learner.set_point_mass(state, greedy).expect("valid");
            agent.learner.avg_policy_update(state).expect("visited");
        }
        Scheme::Greedy => {
            agent.learner.record_visit(state);
            agent.learner.set_point_mass(state, action).expect("valid");
            agent.learner.avg_policy_update(state).expect("visited");
        }
    }
}

/// True when the last `window` records vary by at most `threshold` in
/// both tracked aggregates. Windows longer than the trace never qualify.
pub fn trailing_window_flat(trace: &[IterationRecord], window: usize, threshold: f64) -> bool {
    if window < 2 || trace.len() < window {
        return false;
    }
    let tail = &trace[trace.len() - window..];
    range_of(tail.iter().map(|r| r.mean_delta_sigma)) <= threshold
        && range_of(tail.iter().map(|r| r.mean_price)) <= threshold
}

/// First iteration index at which the trailing window is flat, if any.
pub fn convergence_iteration(
    trace: &[IterationRecord],
    window: usize,
    threshold: f64,
) -> Option<u64> {
    (window..=trace.len())
        .find(|&end| trailing_window_flat(&trace[..end], window, threshold))
        .map(|end| trace[end - 1].t)
}

fn range_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi < lo {
        0.0
    } else {
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use approx::assert_abs_diff_eq;

    fn small_config(extra: &str) -> GameConfig {
        parse_config(&format!(
            "[game]\nnum_dos = 3\nmax_iterations = 50\nmaster_seed = 11\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn same_seed_same_population() {
        let cfg = small_config("");
        let a = sample_population(&cfg);
        let b = sample_population(&cfg);
        assert_eq!(a, b);
        for p in &a {
            assert!((0.5..=4.0).contains(&p.unit_privacy_cost));
            assert!((0.05..=20.0).contains(&p.non_iid_degree));
            p.validate().unwrap();
        }
    }

    #[test]
    fn degenerate_cost_range() {
        let cfg =
            parse_config("[game]\nnum_dos = 5\n[population]\nc_min = 2.0\nc_max = 2.0\n").unwrap();
        for p in sample_population(&cfg) {
            assert_eq!(p.unit_privacy_cost, 2.0);
        }
    }

    #[test]
    fn single_owner_engine_shape() {
        let cfg = parse_config("[game]\nnum_dos = 1\n").unwrap();
        let engine = Engine::new(cfg).unwrap();
        assert_eq!(engine.profiles().len(), 1);
        assert_eq!(engine.do_learner(0).num_states(), 33);
        assert_eq!(engine.do_learner(0).num_actions(), 13);
        assert_eq!(engine.curator_learner(0).num_states(), 13);
        assert_eq!(engine.curator_learner(0).num_actions(), 33);
    }

    #[test]
    fn first_iteration_contract() {
        let cfg = small_config("");
        let mut engine = Engine::new(cfg).unwrap();
        let rec = engine.step();
        assert_eq!(rec.t, 1);
        assert_eq!(rec.rows.len(), 3);
        for row in &rec.rows {
            assert!(row.price_index <= 32);
            assert!(row.noise_index <= 12);
        }
        // Both sides acted from state 0: only state 0 gained a visit.
        for n in 0..3 {
            assert_eq!(engine.do_learner(n).visit_count(0), 1);
            assert_eq!(
                (1..33)
                    .map(|s| engine.do_learner(n).visit_count(s))
                    .sum::<u64>(),
                0
            );
        }
    }

    #[test]
    fn rewards_recompute_from_indices() {
        let cfg = small_config("");
        let mut engine = Engine::new(cfg.clone()).unwrap();
        for _ in 0..30 {
            let rec = engine.step();
            let mut total = 0.0;
            for row in &rec.rows {
                let p = cfg.grids.price_of_index(row.price_index).unwrap();
                let ds = cfg.grids.noise_saving_of_index(row.noise_index).unwrap();
                let profile = &engine.profiles()[row.do_id];
                let do_r =
                    game_model::do_realized_payoff(p, ds, profile, &cfg.econ, &cfg.grids).unwrap();
                let cur_r = game_model::curator_realized_payoff_per_do(
                    p,
                    ds,
                    profile.non_iid_degree,
                    &cfg.econ,
                    &cfg.loss,
                )
                .unwrap();
                assert_eq!(do_r, row.do_reward);
                assert_eq!(cur_r, row.curator_reward);
                total += cur_r;
            }
            assert_abs_diff_eq!(total, rec.curator_total, epsilon = 1e-9);
        }
    }

    #[test]
    fn visited_states_are_only_opponent_actions() {
        let cfg = small_config("");
        let mut engine = Engine::new(cfg).unwrap();
        let mut seen_prices: Vec<std::collections::HashSet<usize>> =
            vec![[0].into_iter().collect(); 3];
        for _ in 0..40 {
            let rec = engine.step();
            for row in &rec.rows {
                seen_prices[row.do_id].insert(row.price_index);
            }
        }
        for (n, seen) in seen_prices.iter().enumerate() {
            for s in 0..33 {
                if engine.do_learner(n).visit_count(s) > 0 {
                    assert!(seen.contains(&s), "owner {n} visited phantom state {s}");
                }
            }
        }
    }

    #[test]
    fn greedy_curator_with_zero_quality_weight_pays_nothing() {
        let cfg = parse_config(
            "[game]\nnum_dos = 2\nmax_iterations = 20\nscheme = \"greedy\"\n[econ]\nvarpi = 0.0\n",
        )
        .unwrap();
        let mut engine = Engine::new(cfg).unwrap();
        let mut trace = Vec::new();
        for _ in 0..20 {
            trace.push(engine.step());
        }
        for rec in &trace[1..] {
            for row in &rec.rows {
                assert_eq!(row.price_index, 0, "t = {}", rec.t);
                // Best-response owners save everything once they have seen a price.
                assert_eq!(row.noise_index, 12, "t = {}", rec.t);
            }
        }
    }

    #[test]
    fn deterministic_trace_repeats() {
        let cfg = small_config("");
        let run = |cfg: GameConfig| {
            let mut e = Engine::new(cfg).unwrap();
            e.run()
        };
        let (trace_a, sum_a) = run(cfg.clone());
        let (trace_b, sum_b) = run(cfg);
        assert_eq!(trace_a, trace_b);
        assert_eq!(sum_a.iterations_run, sum_b.iterations_run);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_serial() {
        let mut cfg = small_config("");
        cfg.num_dos = 8;
        cfg.parallel = true;
        let mut parallel = Engine::new(cfg.clone()).unwrap();
        cfg.parallel = false;
        let mut serial = Engine::new(cfg).unwrap();
        for _ in 0..50 {
            assert_eq!(parallel.step(), serial.step());
        }
    }

    #[test]
    fn run_respects_iteration_budget() {
        let cfg = parse_config("[game]\nnum_dos = 2\nmax_iterations = 1\n").unwrap();
        let (trace, summary) = Engine::new(cfg).unwrap().run();
        assert_eq!(trace.len(), 1);
        assert_eq!(summary.iterations_run, 1);
        assert!(!summary.converged);
    }

    #[test]
    fn convergence_detector_on_synthetic_traces() {
        let rec = |t: u64, ds: f64, p: f64| IterationRecord {
            t,
            rows: Vec::new(),
            curator_total: 0.0,
            mean_delta_sigma: ds,
            mean_price: p,
        };
        // Constant trace converges exactly at the window end.
        let constant: Vec<_> = (1..=10).map(|t| rec(t, 0.3, 5.0)).collect();
        assert_eq!(convergence_iteration(&constant, 4, 1e-3), Some(4));
        // Oscillation above the threshold never converges.
        let osc: Vec<_> = (1..=50)
            .map(|t| rec(t, 0.3 + 0.01 * (t % 2) as f64, 5.0))
            .collect();
        assert_eq!(convergence_iteration(&osc, 4, 1e-3), None);
        // A ramp that flattens converges at the first flat window end.
        let ramp: Vec<_> = (1..=30)
            .map(|t| {
                let ds = if t < 20 { 0.01 * t as f64 } else { 0.2 };
                rec(t, ds, 1.0)
            })
            .collect();
        // Flat values start at t = 20; a window of 5 first fits at t = 24.
        assert_eq!(convergence_iteration(&ramp, 5, 1e-9), Some(24));
        // Window longer than the trace: not converged.
        assert_eq!(convergence_iteration(&constant, 11, 1e-3), None);
    }

    // Independent hand-stepping of the update rules on the smallest
    // instance, fed the engine's own realized actions.
    #[test]
    fn two_by_two_trajectory_matches_hand_oracle() {
        let cfg = parse_config(
            "[game]\nnum_dos = 1\nmax_iterations = 5\nmaster_seed = 3\n\
             [grids]\nprice_intervals = 1\nnoise_intervals = 1\n\
             [convergence]\nwindow = 2\nearly_stop = false\n",
        )
        .unwrap();
        let mut engine = Engine::new(cfg.clone()).unwrap();
        let mut trace = Vec::new();
        for _ in 0..5 {
            trace.push(engine.step());
        }

        // Oracle state for one agent: q[s][a], policy, avg, visits.
        struct Hand {
            q: [[f64; 2]; 2],
            pol: [[f64; 2]; 2],
            avg: [[f64; 2]; 2],
            visits: [u64; 2],
        }
        impl Hand {
            fn new() -> Self {
                Hand {
                    q: [[0.0; 2]; 2],
                    pol: [[0.5; 2]; 2],
                    avg: [[0.5; 2]; 2],
                    visits: [0; 2],
                }
            }
            fn update(
                &mut self,
                s: usize,
                a: usize,
                r: f64,
                s2: usize,
                t: u64,
                w: &crate::learners::WolfParams,
            ) {
                let next_max = self.q[s2][0].max(self.q[s2][1]);
                self.q[s][a] = (1.0 - w.eta) * self.q[s][a] + w.eta * (r + w.discount * next_max);
                self.visits[s] += 1;
                let v_pol = self.pol[s][0] * self.q[s][0] + self.pol[s][1] * self.q[s][1];
                let v_avg = self.avg[s][0] * self.q[s][0] + self.avg[s][1] * self.q[s][1];
                let psi = if v_pol <= v_avg {
                    w.psi_lose(t)
                } else {
                    w.psi_win(t)
                };
                let greedy = if self.q[s][1] > self.q[s][0] { 1 } else { 0 };
                for a2 in 0..2 {
                    if a2 == greedy {
                        self.pol[s][a2] += psi;
                    } else {
                        self.pol[s][a2] -= psi;
                    }
                    self.pol[s][a2] = self.pol[s][a2].clamp(0.0, 1.0);
                }
                let sum = self.pol[s][0] + self.pol[s][1];
                self.pol[s][0] /= sum;
                self.pol[s][1] /= sum;
                let c = self.visits[s] as f64;
                for a2 in 0..2 {
                    self.avg[s][a2] += (self.pol[s][a2] - self.avg[s][a2]) / c;
                }
            }
        }

        let mut owner = Hand::new();
        let mut curator = Hand::new();
        let mut owner_state = 0usize;
        let mut curator_state = 0usize;
        for rec in &trace {
            let row = rec.rows[0];
            owner.update(
                owner_state,
                row.noise_index,
                row.do_reward,
                row.price_index,
                rec.t,
                &cfg.wolf,
            );
            curator.update(
                curator_state,
                row.price_index,
                row.curator_reward,
                row.noise_index,
                rec.t,
                &cfg.wolf,
            );
            owner_state = row.price_index;
            curator_state = row.noise_index;
        }
        // Compare full tables, exactly.
        for s in 0..2 {
            for a in 0..2 {
                assert_abs_diff_eq!(
                    engine.do_learner(0).q_row(s)[a],
                    owner.q[s][a],
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    engine.do_learner(0).policy_row(s)[a],
                    owner.pol[s][a],
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    engine.do_learner(0).avg_policy_row(s)[a],
                    owner.avg[s][a],
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    engine.curator_learner(0).q_row(s)[a],
                    curator.q[s][a],
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    engine.curator_learner(0).policy_row(s)[a],
                    curator.pol[s][a],
                    epsilon = 1e-12
                );
            }
            assert_eq!(engine.do_learner(0).visit_count(s), owner.visits[s]);
        }
    }
}
