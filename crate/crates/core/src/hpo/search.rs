use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::index;

use super::grid::{neighbourhood, Param, ParamGrid};
use super::HpoError;
use crate::gbt::HyperParams;
use crate::seed;

/// Number of orders of the six parameters.
pub const N_ORDERS: usize = 720;

/// The score of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Score {
    /// Validation RMSE of the configuration as asked.
    Final(f64),
    /// Validation RMSE after every boosting round: entry `r` scores the
    /// first `r` trees. Shorter than `nrounds + 1` entries only when
    /// training stopped early, in which case the last entry holds for any
    /// larger `nrounds`.
    Trajectory(Vec<f64>),
}

/// Something that scores hyperparameters on validation data. Lower is
/// better.
pub trait Objective {
    fn score(&self, hp: &HyperParams) -> Result<Score, HpoError>;
}

impl<F> Objective for F
where
    F: Fn(&HyperParams) -> f64,
{
    fn score(&self, hp: &HyperParams) -> Result<Score, HpoError> {
        Ok(Score::Final(self(hp)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HpoConfig {
    /// Orders to run, sampled uniformly when below [`N_ORDERS`].
    pub permutation_budget: usize,
    pub seed: u64,
    /// Reuse scores of configurations seen before.
    pub memoize: bool,
    /// Run the neighbourhood pass after the best order is known.
    pub refine: bool,
}

impl Default for HpoConfig {
    fn default() -> Self {
        Self { permutation_budget: N_ORDERS, seed: 0, memoize: true, refine: true }
    }
}

pub type Order = [Param; 6];

/// The outcome of one sequential pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PassResult {
    pub order: Vec<Param>,
    pub params: HyperParams,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub params: HyperParams,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpoResult {
    pub best_params: HyperParams,
    pub best_permutation: Order,
    pub best_validation_rmse: f64,
    pub default_params: HyperParams,
    pub default_rmse: f64,
    /// Every executed pass, in execution order.
    pub passes: Vec<PassResult>,
    /// The neighbourhood pass; `None` when refinement is off.
    pub refined: Option<PassResult>,
    /// Each distinct configuration once, in order of first request.
    pub log: Vec<EvalRecord>,
    /// Distinct configurations scored, or every request without memoization.
    pub evaluations_total: usize,
    /// Requests answered from memory.
    pub cache_hits: usize,
    /// Calls to the objective.
    pub trainings: usize,
}

type Key = [u64; 6];

fn key(hp: &HyperParams) -> Key {
    [
        u64::from(hp.nrounds),
        hp.base_score.to_bits(),
        hp.eta.to_bits(),
        hp.gamma.to_bits(),
        u64::from(hp.max_depth),
        hp.subsample.to_bits(),
    ]
}

fn key_without_rounds(hp: &HyperParams) -> Key {
    key(&HyperParams { nrounds: 0, ..*hp })
}

struct Trajectory {
    values: Vec<f64>,
    /// Rounds asked for when it was trained.
    asked: u32,
}

impl Trajectory {
    fn at(&self, nrounds: u32) -> Option<f64> {
        let n = nrounds as usize;
        if n < self.values.len() {
            return Some(self.values[n]);
        }
        // Training stopped before the rounds it was asked for, so any
        // longer run ends the same way.
        let stopped_early = self.values.len() <= self.asked as usize;
        if stopped_early {
            self.values.last().copied()
        } else {
            None
        }
    }
}

/// Scores configurations with optional memoization and keeps the log.
pub struct Search<'o, O: Objective + ?Sized> {
    objective: &'o O,
    grid: ParamGrid,
    memoize: bool,
    exact: BTreeMap<Key, f64>,
    trajectories: BTreeMap<Key, Trajectory>,
    logged: BTreeMap<Key, usize>,
    log: Vec<EvalRecord>,
    requests: usize,
    trainings: usize,
}

impl<'o, O: Objective + ?Sized> Search<'o, O> {
    pub fn new(objective: &'o O, grid: ParamGrid, memoize: bool) -> Self {
        Self {
            objective,
            grid,
            memoize,
            exact: BTreeMap::new(),
            trajectories: BTreeMap::new(),
            logged: BTreeMap::new(),
            log: Vec::new(),
            requests: 0,
            trainings: 0,
        }
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }

    pub fn requests(&self) -> usize {
        self.requests
    }

    pub fn trainings(&self) -> usize {
        self.trainings
    }

    pub fn log(&self) -> &[EvalRecord] {
        &self.log
    }

    pub fn evaluate(&mut self, hp: &HyperParams) -> Result<f64, HpoError> {
        self.requests += 1;
        let k = key(hp);
        let cached = if self.memoize { self.lookup(hp, &k) } else { None };
        let rmse = match cached {
            Some(v) => v,
            None => self.train(hp, k)?,
        };
        if !self.logged.contains_key(&k) {
            self.logged.insert(k, self.log.len());
            self.log.push(EvalRecord { params: *hp, rmse });
        }
        Ok(rmse)
    }

    fn lookup(&mut self, hp: &HyperParams, k: &Key) -> Option<f64> {
        if let Some(&v) = self.exact.get(k) {
            return Some(v);
        }
        let v = self.trajectories.get(&key_without_rounds(hp))?.at(hp.nrounds)?;
        self.exact.insert(*k, v);
        Some(v)
    }

    fn train(&mut self, hp: &HyperParams, k: Key) -> Result<f64, HpoError> {
        hp.validate()?;
        self.trainings += 1;
        let rmse = match self.objective.score(hp)? {
            Score::Final(v) => v,
            Score::Trajectory(values) => {
                let n = hp.nrounds as usize;
                let v = *values.get(n).or(values.last()).ok_or(HpoError::EmptyTrajectory)?;
                if self.memoize {
                    let tk = key_without_rounds(hp);
                    let longer = self.trajectories.get(&tk).map_or(true, |t| t.values.len() < values.len());
                    if longer {
                        self.trajectories.insert(tk, Trajectory { values, asked: hp.nrounds });
                    }
                }
                v
            }
        };
        if !rmse.is_finite() {
            return Err(HpoError::NonFiniteScore);
        }
        if self.memoize {
            self.exact.insert(k, rmse);
        }
        Ok(rmse)
    }

    /// One sweep: each parameter of `order` in turn is scanned over its grid
    /// with the others held, and the best value kept. Earlier grid values
    /// win ties.
    pub fn sequential_pass(&mut self, order: &[Param], start: HyperParams) -> Result<PassResult, HpoError> {
        check_order(order)?;
        let grid = self.grid.clone();
        self.sweep(order, start, |p, _| grid.get(p).to_vec())
    }

    /// A sweep over `{v - h, v, v + h}` around each incumbent value `v`.
    pub fn refine(&mut self, order: &[Param], start: HyperParams) -> Result<PassResult, HpoError> {
        check_order(order)?;
        let grid = self.grid.clone();
        self.sweep(order, start, |p, hp| neighbourhood(p, p.get(hp), &grid))
    }

    fn sweep<F>(&mut self, order: &[Param], start: HyperParams, candidates: F) -> Result<PassResult, HpoError>
    where
        F: Fn(Param, &HyperParams) -> Vec<f64>,
    {
        let mut incumbent = start;
        let mut best_rmse = None;
        for &p in order {
            let mut best: Option<(HyperParams, f64)> = None;
            for v in candidates(p, &incumbent) {
                let hp = p.set(&incumbent, v);
                let rmse = self.evaluate(&hp)?;
                if best.map_or(true, |(_, b)| rmse < b) {
                    best = Some((hp, rmse));
                }
            }
            if let Some((hp, rmse)) = best {
                incumbent = hp;
                best_rmse = Some(rmse);
            }
        }
        let rmse = match best_rmse {
            Some(r) => r,
            None => self.evaluate(&incumbent)?,
        };
        Ok(PassResult { order: order.to_vec(), params: incumbent, rmse })
    }
}

fn check_order(order: &[Param]) -> Result<(), HpoError> {
    for (i, p) in order.iter().enumerate() {
        if order[..i].contains(p) {
            return Err(HpoError::InvalidOrder(alloc::format!("{p} appears twice")));
        }
    }
    Ok(())
}

/// All orders of the six parameters, lexicographic by parameter name.
pub fn all_orders() -> Vec<Order> {
    let mut current = Param::ALL;
    let mut out = Vec::with_capacity(N_ORDERS);
    loop {
        out.push(current);
        // Next lexicographic permutation.
        let Some(i) = (0..5).rev().find(|&i| current[i] < current[i + 1]) else { break };
        let j = (i + 1..6).rev().find(|&j| current[j] > current[i]).expect("successor exists");
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// The orders run for `budget`: all of them, or a seeded uniform sample
/// kept in lexicographic order.
pub fn select_orders(budget: usize, seed: u64) -> Result<Vec<Order>, HpoError> {
    if budget == 0 {
        return Err(HpoError::BudgetZero);
    }
    let all = all_orders();
    if budget >= all.len() {
        return Ok(all);
    }
    let mut rng = seed::rng_for(seed, "hpo-orders");
    let mut picked: Vec<usize> = index::sample(&mut rng, all.len(), budget).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i]).collect())
}

/// Runs a sequential pass from `defaults` for every selected order, then
/// refines the best order's result. The defaults are always scored, and the
/// reported best is the lowest score seen, so it never exceeds theirs.
pub fn optimize<O: Objective + ?Sized>(
    objective: &O,
    grid: ParamGrid,
    defaults: HyperParams,
    config: &HpoConfig,
) -> Result<HpoResult, HpoError> {
    let orders = select_orders(config.permutation_budget, config.seed)?;
    let mut search = Search::new(objective, grid, config.memoize);
    let default_rmse = search.evaluate(&defaults)?;

    let mut passes = Vec::with_capacity(orders.len());
    let mut winner: Option<(Order, usize, f64)> = None;
    for order in &orders {
        let pass = search.sequential_pass(order, defaults)?;
        if winner.map_or(true, |(_, _, w)| pass.rmse < w) {
            winner = Some((*order, passes.len(), pass.rmse));
        }
        passes.push(pass);
    }
    let (best_order, w, _) = winner.expect("at least one order");
    let refined = if config.refine {
        Some(search.refine(&best_order, passes[w].params)?)
    } else {
        None
    };

    let mut best = search.log[0];
    for rec in &search.log[1..] {
        if rec.rmse < best.rmse {
            best = *rec;
        }
    }
    let requests = search.requests();
    let trainings = search.trainings();
    let unique = search.log.len();
    let (evaluations_total, cache_hits) = if config.memoize { (unique, requests - unique) } else { (requests, 0) };
    Ok(HpoResult {
        best_params: best.params,
        best_permutation: best_order,
        best_validation_rmse: best.rmse,
        default_params: defaults,
        default_rmse,
        passes,
        refined,
        log: search.log,
        evaluations_total,
        cache_hits,
        trainings,
    })
}
