//! Text serialization of boosted tree models.
//!
//! ```text
//! promocast-gbt 1
//! nrounds 100
//! base_score 1.25
//! eta 0.3
//! gamma 0
//! max_depth 6
//! subsample 1
//! lambda 1
//! min_child_weight 1
//! seed 7
//! meta group fruits
//! features 2
//! feature price_change 140.5
//! feature tv 12
//! trees 1
//! tree 3
//! split 0 0.225
//! leaf -0.4
//! leaf 0.31
//! end
//! ```
//!
//! `feature` lines carry the accumulated split gain. Each tree lists its
//! nodes in pre-order. Numbers are printed in shortest round-trip form, so
//! reading a written model gives back the same bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use promocast_core::gbt::{GbtModel, HyperParams, Node, Tree, TreeSettings};
use thiserror::Error;

pub const MAGIC: &str = "promocast-gbt";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("feature name {0:?} contains whitespace")]
    BadName(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A model with free-form metadata such as its group and indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredModel {
    pub model: GbtModel,
    pub meta: BTreeMap<String, String>,
}

impl StoredModel {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.get(key).map(String::as_str)
    }
}

pub fn to_text(stored: &StoredModel) -> Result<String, ModelFileError> {
    let m = &stored.model;
    let hp = m.params;
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "nrounds {}", hp.nrounds);
    let _ = writeln!(s, "base_score {}", hp.base_score);
    let _ = writeln!(s, "eta {}", hp.eta);
    let _ = writeln!(s, "gamma {}", hp.gamma);
    let _ = writeln!(s, "max_depth {}", hp.max_depth);
    let _ = writeln!(s, "subsample {}", hp.subsample);
    let _ = writeln!(s, "lambda {}", m.settings.lambda);
    let _ = writeln!(s, "min_child_weight {}", m.settings.min_child_weight);
    let _ = writeln!(s, "seed {}", m.seed);
    for (k, v) in &stored.meta {
        if k.contains(char::is_whitespace) || v.contains('\n') {
            return Err(ModelFileError::BadName(k.clone()));
        }
        let _ = writeln!(s, "meta {k} {v}");
    }
    let _ = writeln!(s, "features {}", m.feature_names().len());
    for (name, gain) in m.feature_names().iter().zip(m.gain()) {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(ModelFileError::BadName(name.clone()));
        }
        let _ = writeln!(s, "feature {name} {gain}");
    }
    let _ = writeln!(s, "trees {}", m.trees().len());
    for t in m.trees() {
        let _ = writeln!(s, "tree {}", t.nodes().len());
        for node in t.nodes() {
            match node {
                Node::Split { feature, threshold, .. } => {
                    let _ = writeln!(s, "split {feature} {threshold}");
                }
                Node::Leaf { weight } => {
                    let _ = writeln!(s, "leaf {weight}");
                }
            }
        }
    }
    s.push_str("end\n");
    Ok(s)
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, reason: impl Into<String>) -> ModelFileError {
        ModelFileError::Parse { line: self.line, reason: reason.into() }
    }

    fn next_line(&mut self) -> Result<&'a str, ModelFileError> {
        loop {
            let (i, l) = self.iter.next().ok_or_else(|| ModelFileError::Parse {
                line: self.line + 1,
                reason: "unexpected end of file".into(),
            })?;
            self.line = i + 1;
            if !l.trim().is_empty() {
                return Ok(l.trim());
            }
        }
    }

    /// The value of a `key value` line.
    fn field(&mut self, key: &str) -> Result<&'a str, ModelFileError> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim()),
            _ => Err(self.err(format!("expected {key:?}, found {l:?}"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T, ModelFileError> {
        s.parse().map_err(|_| self.err(format!("bad {what}: {s:?}")))
    }
}

pub fn from_text(text: &str) -> Result<StoredModel, ModelFileError> {
    let mut lines = Lines { iter: text.lines().enumerate(), line: 0 };
    let header = lines.next_line()?;
    let version = match header.split_once(' ') {
        Some((MAGIC, v)) => lines.parse::<u32>(v, "version")?,
        _ => return Err(lines.err(format!("not a model file: {header:?}"))),
    };
    if version != VERSION {
        return Err(lines.err(format!("unsupported version {version}")));
    }

    let nrounds = lines.field("nrounds")?;
    let nrounds = lines.parse(nrounds, "nrounds")?;
    let base_score = lines.field("base_score")?;
    let base_score = lines.parse(base_score, "base_score")?;
    let eta = lines.field("eta")?;
    let eta = lines.parse(eta, "eta")?;
    let gamma = lines.field("gamma")?;
    let gamma = lines.parse(gamma, "gamma")?;
    let max_depth = lines.field("max_depth")?;
    let max_depth = lines.parse(max_depth, "max_depth")?;
    let subsample = lines.field("subsample")?;
    let subsample = lines.parse(subsample, "subsample")?;
    let lambda = lines.field("lambda")?;
    let lambda = lines.parse(lambda, "lambda")?;
    let mcw = lines.field("min_child_weight")?;
    let min_child_weight = lines.parse(mcw, "min_child_weight")?;
    let seed = lines.field("seed")?;
    let seed = lines.parse(seed, "seed")?;
    let params = HyperParams { nrounds, base_score, eta, gamma, max_depth, subsample };

    let mut meta = BTreeMap::new();
    let n_features = loop {
        let l = lines.next_line()?;
        match l.split_once(' ') {
            Some(("meta", rest)) => {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                meta.insert(k.to_string(), v.trim().to_string());
            }
            Some(("features", n)) => break lines.parse::<usize>(n, "feature count")?,
            _ => return Err(lines.err(format!("expected meta or features, found {l:?}"))),
        }
    };
    let mut names = Vec::with_capacity(n_features);
    let mut gain = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let rest = lines.field("feature")?;
        let (name, g) = rest.split_once(' ').ok_or_else(|| lines.err("feature needs a name and a gain"))?;
        names.push(name.to_string());
        gain.push(lines.parse::<f64>(g.trim(), "gain")?);
    }

    let n_trees = lines.field("trees")?;
    let n_trees: usize = lines.parse(n_trees, "tree count")?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = lines.field("tree")?;
        let n_nodes: usize = lines.parse(n_nodes, "node count")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let l = lines.next_line()?;
            let node = match l.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["split", f, t] => {
                    let feature: u32 = lines.parse(f, "feature index")?;
                    if feature as usize >= n_features {
                        return Err(lines.err(format!("feature index {feature} out of range")));
                    }
                    Node::Split { feature, threshold: lines.parse(t, "threshold")?, left: 0, right: 0 }
                }
                ["leaf", w] => Node::Leaf { weight: lines.parse(w, "leaf weight")? },
                _ => return Err(lines.err(format!("expected split or leaf, found {l:?}"))),
            };
            nodes.push(node);
        }
        let tree = link_preorder(&mut nodes)
            .and_then(|()| Tree::from_nodes(nodes))
            .ok_or_else(|| lines.err("tree is not a valid pre-order dump"))?;
        trees.push(tree);
    }
    if lines.next_line()? != "end" {
        return Err(lines.err("expected end"));
    }

    let settings = TreeSettings { lambda, min_child_weight };
    Ok(StoredModel { model: GbtModel::from_parts(params, settings, seed, names, trees, gain), meta })
}

/// Fills in child indices of a pre-order node list. Fails unless the list
/// is exactly one complete tree.
fn link_preorder(nodes: &mut [Node]) -> Option<()> {
    // Returns the index one past the subtree rooted at `i`.
    fn walk(nodes: &mut [Node], i: usize, depth: usize) -> Option<usize> {
        if depth > 4096 {
            return None;
        }
        match *nodes.get(i)? {
            Node::Leaf { .. } => Some(i + 1),
            Node::Split { feature, threshold, .. } => {
                let right = walk(nodes, i + 1, depth + 1)?;
                let end = walk(nodes, right, depth + 1)?;
                nodes[i] = Node::Split { feature, threshold, left: (i + 1) as u32, right: right as u32 };
                Some(end)
            }
        }
    }
    (walk(nodes, 0, 0)? == nodes.len()).then_some(())
}

pub fn save(path: &Path, stored: &StoredModel) -> Result<(), ModelFileError> {
    let text = to_text(stored)?;
    crate::write_atomic(path, text.as_bytes())
        .map_err(|source| ModelFileError::Io { path: path.display().to_string(), source })
}

pub fn load(path: &Path) -> Result<StoredModel, ModelFileError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ModelFileError::Io { path: path.display().to_string(), source })?;
    from_text(&text)
}
