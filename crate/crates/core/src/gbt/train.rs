//! Boosting loop and exact greedy tree growth.
//!
//! Squared-error loss gives `g = prediction - target` and `h = 1` for every
//! row. A split of a node with sums `(G, H)` into `(G_L, H_L)` and
//! `(G_R, H_R)` scores
//!
//! ```text
//! gain = 1/2 * (G_L²/(H_L+λ) + G_R²/(H_R+λ) - G²/(H+λ)) - gamma
//! ```
//!
//! and is kept only when positive. Leaves get `-eta * G / (H + λ)`.
//!
//! Candidate thresholds are the midpoints between consecutive distinct
//! values present in a node. Each feature's distinct values are indexed
//! once per dataset; a node then scans them through a per-value histogram
//! (large nodes, the larger child obtained by subtracting its sibling from
//! the parent) or by sorting its rows (small nodes). Both paths evaluate
//! exactly the same candidates.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;

use super::tree::{Node, Tree};
use super::{FeatureMatrix, GbtError, GbtModel, HyperParams, TreeSettings};
use crate::seed::Rng;

/// One accepted split, reported by [`Booster::fit_traced`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitTrace {
    /// Zero-based boosting round.
    pub round: usize,
    /// Pre-order node index within the round's tree.
    pub node: usize,
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Training data indexed for repeated boosting runs.
#[derive(Debug, Clone)]
pub struct Booster {
    matrix: FeatureMatrix,
    targets: Vec<f64>,
    settings: TreeSettings,
    /// Distinct-value index per cell, feature-major: `bins[f * n_rows + r]`.
    bins: Vec<u32>,
    /// Sorted distinct values of every feature, concatenated.
    bin_values: Vec<f64>,
    /// `bin_values[bin_offsets[f]..bin_offsets[f + 1]]` belongs to feature `f`.
    bin_offsets: Vec<usize>,
}

impl Booster {
    pub fn new(matrix: &FeatureMatrix, targets: &[f64]) -> Result<Self, GbtError> {
        Self::with_settings(matrix, targets, TreeSettings::default())
    }

    pub fn with_settings(
        matrix: &FeatureMatrix,
        targets: &[f64],
        settings: TreeSettings,
    ) -> Result<Self, GbtError> {
        let n = matrix.n_rows();
        if n == 0 {
            return Err(GbtError::EmptyDataset);
        }
        if targets.len() != n {
            return Err(GbtError::Shape(alloc::format!(
                "{} targets for {n} rows",
                targets.len()
            )));
        }
        if let Some((row, feature)) = matrix.first_non_finite() {
            return Err(GbtError::NonFiniteInput { row, column: Some(feature) });
        }
        if let Some(row) = targets.iter().position(|t| !t.is_finite()) {
            return Err(GbtError::NonFiniteInput { row, column: None });
        }
        if !(settings.lambda >= 0.0 && settings.min_child_weight >= 0.0) {
            return Err(GbtError::InvalidParam("lambda and min_child_weight must be >= 0".into()));
        }

        let nf = matrix.n_features();
        let mut bins = vec![0u32; nf * n];
        let mut bin_values = Vec::new();
        let mut bin_offsets = Vec::with_capacity(nf + 1);
        let mut column: Vec<(f64, u32)> = Vec::with_capacity(n);
        for f in 0..nf {
            bin_offsets.push(bin_values.len());
            column.clear();
            column.extend((0..n).map(|r| (matrix.value(r, f), r as u32)));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let base = bin_values.len();
            for &(v, r) in &column {
                if bin_values.len() == base || *bin_values.last().unwrap() != v {
                    bin_values.push(v);
                }
                bins[f * n + r as usize] = (bin_values.len() - base - 1) as u32;
            }
        }
        bin_offsets.push(bin_values.len());

        Ok(Self { matrix: matrix.clone(), targets: targets.to_vec(), settings, bins, bin_values, bin_offsets })
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn settings(&self) -> TreeSettings {
        self.settings
    }

    pub fn fit(&self, hp: &HyperParams, seed: u64) -> Result<GbtModel, GbtError> {
        self.run(hp, seed, None, &mut |_| {})
    }

    /// Trains and calls `on_tree` with every appended tree, in order.
    pub fn fit_with(
        &self,
        hp: &HyperParams,
        seed: u64,
        on_tree: &mut dyn FnMut(&Tree),
    ) -> Result<GbtModel, GbtError> {
        self.run(hp, seed, None, on_tree)
    }

    /// Trains and reports every accepted split.
    pub fn fit_traced(&self, hp: &HyperParams, seed: u64) -> Result<(GbtModel, Vec<SplitTrace>), GbtError> {
        let mut trace = Vec::new();
        let model = self.run(hp, seed, Some(&mut trace), &mut |_| {})?;
        Ok((model, trace))
    }

    fn run(
        &self,
        hp: &HyperParams,
        seed: u64,
        mut trace: Option<&mut Vec<SplitTrace>>,
        on_tree: &mut dyn FnMut(&Tree),
    ) -> Result<GbtModel, GbtError> {
        hp.validate()?;
        let n = self.matrix.n_rows();
        let nf = self.matrix.n_features();
        let mut rng = Rng::seed_from_u64(seed);
        let mut preds = vec![hp.base_score; n];
        let mut grads = vec![0.0; n];
        let mut gain = vec![0.0; nf];
        let mut trees: Vec<Tree> = Vec::new();
        let full_sample = subsample_size(hp.subsample, n) == n;
        let mut grower = Grower::new(self, hp);

        for round in 0..hp.nrounds as usize {
            // With eta = 0 and no sampling every round sees the same
            // gradients, so the first tree repeats verbatim.
            if hp.eta == 0.0 && full_sample && trace.is_none() {
                if let Some(first) = trees.first().cloned() {
                    let (_, first_gain) = grower.last_gain.clone();
                    for (acc, g) in gain.iter_mut().zip(&first_gain) {
                        *acc += g;
                    }
                    for (p, row) in preds.iter_mut().zip(self.matrix.rows()) {
                        *p += first.predict(row);
                    }
                    on_tree(&first);
                    trees.push(first);
                    continue;
                }
            }

            for i in 0..n {
                grads[i] = preds[i] - self.targets[i];
            }
            let rows: Vec<u32> = if full_sample {
                (0..n as u32).collect()
            } else {
                let mut picked: Vec<u32> = index::sample(&mut rng, n, subsample_size(hp.subsample, n))
                    .into_iter()
                    .map(|i| i as u32)
                    .collect();
                picked.sort_unstable();
                picked
            };

            let tree = grower.grow(rows, &grads, round, trace.as_deref_mut());
            let Some(tree) = tree else { break };
            for (acc, g) in gain.iter_mut().zip(&grower.last_gain.1) {
                *acc += g;
            }
            for (p, row) in preds.iter_mut().zip(self.matrix.rows()) {
                *p += tree.predict(row);
            }
            on_tree(&tree);
            trees.push(tree);
        }

        Ok(GbtModel::from_parts(*hp, self.settings, seed, self.matrix.names().to_vec(), trees, gain))
    }
}

/// `floor(rate * n)` rows, at least one.
pub fn subsample_size(rate: f64, n: usize) -> usize {
    let m = libm::floor(rate * n as f64) as usize;
    m.clamp(1, n)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    /// Rows whose value index is at most this go left.
    left_bin: u32,
    threshold: f64,
    gain: f64,
    g_left: f64,
    h_left: f64,
}

struct Hist {
    g: Vec<f64>,
    c: Vec<u32>,
}

struct Grower<'b> {
    data: &'b Booster,
    hp: &'b HyperParams,
    n_rows: usize,
    total_bins: usize,
    nodes: Vec<Node>,
    rows: Vec<u32>,
    scratch: Vec<u32>,
    sort_buf: Vec<(u64, f64)>,
    pool: Vec<Hist>,
    /// Whether the last grown tree split, and its per-feature gains.
    last_gain: (bool, Vec<f64>),
}

impl<'b> Grower<'b> {
    fn new(data: &'b Booster, hp: &'b HyperParams) -> Self {
        Self {
            data,
            hp,
            n_rows: data.matrix.n_rows(),
            total_bins: data.bin_values.len(),
            nodes: Vec::new(),
            rows: Vec::new(),
            scratch: Vec::new(),
            sort_buf: Vec::new(),
            pool: Vec::new(),
            last_gain: (false, vec![0.0; data.matrix.n_features()]),
        }
    }

    /// Grows one tree over `rows`; `None` when no split is accepted.
    fn grow(
        &mut self,
        rows: Vec<u32>,
        grads: &[f64],
        round: usize,
        mut trace: Option<&mut Vec<SplitTrace>>,
    ) -> Option<Tree> {
        self.nodes.clear();
        self.last_gain.1.iter_mut().for_each(|g| *g = 0.0);
        self.rows = rows;
        let n = self.rows.len();
        let g_sum: f64 = self.rows.iter().map(|&r| grads[r as usize]).sum();
        let hist = if self.hp.max_depth > 0 && self.use_hist(n) {
            let mut h = self.take_hist();
            self.accumulate(&mut h, 0..n, grads);
            Some(h)
        } else {
            None
        };
        self.node(0..n, 0, hist, g_sum, n as f64, grads, round, &mut trace);
        self.last_gain.0 = self.nodes.len() > 1;
        if self.nodes.len() > 1 {
            Some(Tree::from_nodes_unchecked(core::mem::take(&mut self.nodes)))
        } else {
            None
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn node(
        &mut self,
        seg: core::ops::Range<usize>,
        depth: u32,
        hist: Option<Hist>,
        g_sum: f64,
        h_sum: f64,
        grads: &[f64],
        round: usize,
        trace: &mut Option<&mut Vec<SplitTrace>>,
    ) {
        let idx = self.nodes.len();
        let lambda = self.data.settings.lambda;
        self.nodes.push(Node::Leaf { weight: -self.hp.eta * g_sum / (h_sum + lambda) });

        let can_split = depth < self.hp.max_depth && seg.len() >= 2;
        let best = if can_split { self.best_split(seg.clone(), hist.as_ref(), g_sum, h_sum, grads) } else { None };
        let Some(best) = best else {
            if let Some(h) = hist {
                self.pool.push(h);
            }
            return;
        };

        let mid = self.partition(seg.clone(), best.feature, best.left_bin);
        let left = seg.start..mid;
        let right = mid..seg.end;
        let (g_l, h_l) = (best.g_left, best.h_left);
        let (g_r, h_r) = (g_sum - g_l, h_sum - h_l);

        if let Some(t) = trace.as_deref_mut() {
            t.push(SplitTrace { round, node: idx, feature: best.feature, threshold: best.threshold, gain: best.gain });
        }
        self.last_gain.1[best.feature] += best.gain;

        let (left_hist, right_hist) = if depth + 1 < self.hp.max_depth {
            self.child_hists(hist, left.clone(), right.clone(), grads)
        } else {
            if let Some(h) = hist {
                self.pool.push(h);
            }
            (None, None)
        };

        self.node(left, depth + 1, left_hist, g_l, h_l, grads, round, trace);
        let right_idx = self.nodes.len();
        self.node(right, depth + 1, right_hist, g_r, h_r, grads, round, trace);
        self.nodes[idx] = Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: (idx + 1) as u32,
            right: right_idx as u32,
        };
    }

    fn child_hists(
        &mut self,
        parent: Option<Hist>,
        left: core::ops::Range<usize>,
        right: core::ops::Range<usize>,
        grads: &[f64],
    ) -> (Option<Hist>, Option<Hist>) {
        let left_is_small = left.len() <= right.len();
        let (small, large) = if left_is_small { (left, right) } else { (right, left) };
        let small_wants = self.use_hist(small.len());
        let large_wants = self.use_hist(large.len());

        let (small_hist, large_hist) = match parent {
            Some(mut p) if large_wants => {
                let mut s = self.take_hist();
                self.accumulate(&mut s, small, grads);
                for (pg, sg) in p.g.iter_mut().zip(&s.g) {
                    *pg -= sg;
                }
                for (pc, sc) in p.c.iter_mut().zip(&s.c) {
                    *pc -= sc;
                }
                let s = if small_wants {
                    Some(s)
                } else {
                    self.pool.push(s);
                    None
                };
                (s, Some(p))
            }
            parent => {
                if let Some(p) = parent {
                    self.pool.push(p);
                }
                let l = large_wants.then(|| {
                    let mut h = self.take_hist();
                    self.accumulate(&mut h, large.clone(), grads);
                    h
                });
                let s = small_wants.then(|| {
                    let mut h = self.take_hist();
                    self.accumulate(&mut h, small.clone(), grads);
                    h
                });
                (s, l)
            }
        };
        if left_is_small {
            (small_hist, large_hist)
        } else {
            (large_hist, small_hist)
        }
    }

    /// Histogram scanning costs about `total_bins` per node; sorting costs
    /// about `n log n` per feature.
    fn use_hist(&self, n: usize) -> bool {
        let nf = self.data.matrix.n_features().max(1);
        let log = usize::BITS - n.leading_zeros();
        n * log as usize * nf > 2 * (self.total_bins + n * nf)
    }

    fn take_hist(&mut self) -> Hist {
        match self.pool.pop() {
            Some(mut h) => {
                h.g.iter_mut().for_each(|v| *v = 0.0);
                h.c.iter_mut().for_each(|v| *v = 0);
                h
            }
            None => Hist { g: vec![0.0; self.total_bins], c: vec![0; self.total_bins] },
        }
    }

    fn accumulate(&self, hist: &mut Hist, seg: core::ops::Range<usize>, grads: &[f64]) {
        let n = self.n_rows;
        let rows = &self.rows[seg];
        for f in 0..self.data.matrix.n_features() {
            let bins = &self.data.bins[f * n..(f + 1) * n];
            let off = self.data.bin_offsets[f];
            for &r in rows {
                let b = off + bins[r as usize] as usize;
                hist.g[b] += grads[r as usize];
                hist.c[b] += 1;
            }
        }
    }

    fn best_split(
        &mut self,
        seg: core::ops::Range<usize>,
        hist: Option<&Hist>,
        g_sum: f64,
        h_sum: f64,
        grads: &[f64],
    ) -> Option<Candidate> {
        let lambda = self.data.settings.lambda;
        let min_child = self.data.settings.min_child_weight;
        let gamma = self.hp.gamma;
        let parent_score = g_sum * g_sum / (h_sum + lambda);
        let mut best: Option<Candidate> = None;
        let mut best_gain = 0.0;

        let mut consider = |feature: usize, left_bin: u32, a: f64, b: f64, g_l: f64, h_l: f64| {
            let h_r = h_sum - h_l;
            if h_l < min_child || h_r < min_child {
                return;
            }
            let g_r = g_sum - g_l;
            let gain =
                0.5 * (g_l * g_l / (h_l + lambda) + g_r * g_r / (h_r + lambda) - parent_score) - gamma;
            if gain > best_gain {
                best_gain = gain;
                best = Some(Candidate { feature, left_bin, threshold: midpoint(a, b), gain, g_left: g_l, h_left: h_l });
            }
        };

        let n = self.n_rows;
        for f in 0..self.data.matrix.n_features() {
            let off = self.data.bin_offsets[f];
            let values = &self.data.bin_values[off..self.data.bin_offsets[f + 1]];
            if values.len() < 2 {
                continue;
            }
            let mut g_l = 0.0;
            let mut h_l = 0.0;
            let mut prev: Option<u32> = None;
            match hist {
                Some(h) => {
                    for b in 0..values.len() {
                        let c = h.c[off + b];
                        if c == 0 {
                            continue;
                        }
                        if let Some(p) = prev {
                            consider(f, p, values[p as usize], values[b], g_l, h_l);
                        }
                        g_l += h.g[off + b];
                        h_l += c as f64;
                        prev = Some(b as u32);
                    }
                }
                None => {
                    let bins = &self.data.bins[f * n..(f + 1) * n];
                    self.sort_buf.clear();
                    self.sort_buf.extend(
                        self.rows[seg.clone()]
                            .iter()
                            .map(|&r| ((u64::from(bins[r as usize]) << 32) | u64::from(r), grads[r as usize])),
                    );
                    self.sort_buf.sort_unstable_by_key(|e| e.0);
                    for &(key, g) in &self.sort_buf {
                        let b = (key >> 32) as u32;
                        if let Some(p) = prev {
                            if p != b {
                                consider(f, p, values[p as usize], values[b as usize], g_l, h_l);
                            }
                        }
                        g_l += g;
                        h_l += 1.0;
                        prev = Some(b);
                    }
                }
            }
        }
        best
    }

    /// Stable partition of `seg`: rows with value index `<= left_bin` first.
    fn partition(&mut self, seg: core::ops::Range<usize>, feature: usize, left_bin: u32) -> usize {
        let n = self.n_rows;
        let bins = &self.data.bins[feature * n..(feature + 1) * n];
        self.scratch.clear();
        let mut write = seg.start;
        for i in seg.clone() {
            let r = self.rows[i];
            if bins[r as usize] <= left_bin {
                self.rows[write] = r;
                write += 1;
            } else {
                self.scratch.push(r);
            }
        }
        self.rows[write..seg.end].copy_from_slice(&self.scratch);
        write
    }
}

/// Midpoint of two consecutive distinct values, kept strictly above `a`.
pub fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) * 0.5;
    if t > a {
        t
    } else {
        b
    }
}
