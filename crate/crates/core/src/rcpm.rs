//! Recurrent context propagation between visual affinity and trajectory distance.
//!
//! Each round first refreshes the affinity between every pair of sequences
//! using the wireless trajectories as anchors, then refreshes each
//! sequence-to-signal distance as an affinity-weighted average over the
//! sequence's visual neighborhood. The standard variant always rebuilds from
//! the initial matrices; the `Star` variant feeds each round its own previous
//! output and exists only for ablation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{AffinityMatrix, Distance, Matrix, TrajDistanceMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variant {
    /// Updates always start from `S⁰` and `D⁰`.
    #[default]
    Standard,
    /// Updates start from the previous round's `S` and `D`.
    Star,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Star => "star",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Variant::Standard),
            "star" => Ok(Variant::Star),
            other => Err(Error::config("variant", alloc::format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RcpmConfig {
    /// Neighborhood size, counting the sequence itself.
    pub k: usize,
    /// Distance threshold, in the units of the trajectory distances.
    pub sigma: f64,
    pub iterations: usize,
    /// Weight kept on the visual affinity when it is fused with trajectory evidence.
    pub fusion_weight: f64,
    pub variant: Variant,
}

impl Default for RcpmConfig {
    fn default() -> Self {
        RcpmConfig { k: 8, sigma: 74.0, iterations: 4, fusion_weight: 0.5, variant: Variant::Standard }
    }
}

impl RcpmConfig {
    /// Checks the parameters against a database of `n` sequences.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if self.k > n {
            return Err(Error::config("k", alloc::format!("{} exceeds the {n} sequences", self.k)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.fusion_weight) {
            return Err(Error::config("fusion_weight", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Smallest over signals of the mean of the two sequences' distances to that signal.
pub fn min_avg_distance(d: &TrajDistanceMatrix, i: usize, j: usize) -> Distance {
    d.row(i)
        .iter()
        .zip(d.row(j))
        .map(|(a, b)| a.midpoint(*b))
        .min_by(Distance::total_cmp)
        .unwrap_or(Distance::Infinite)
}

/// Indices of the `k` sequences most similar to `i`, most similar first.
///
/// `i` always leads the list. The rest are ordered by descending affinity with
/// ties going to the lower index.
pub fn top_k_neighbors(s: &AffinityMatrix, i: usize, k: usize) -> Vec<usize> {
    let row = s.row(i);
    let mut others: Vec<usize> = (0..row.len()).filter(|&j| j != i).collect();
    let rank = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
    let take = k.saturating_sub(1).min(others.len());
    if take < others.len() && take > 0 {
        others.select_nth_unstable_by(take - 1, rank);
    }
    others.truncate(take);
    others.sort_unstable_by(rank);
    let mut out = Vec::with_capacity(take + 1);
    if k > 0 {
        out.push(i);
    }
    out.extend(others);
    out
}

/// Matrices carried between rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct RcpmState {
    pub s0: AffinityMatrix,
    pub d0: TrajDistanceMatrix,
    pub s: AffinityMatrix,
    pub d: TrajDistanceMatrix,
}

impl RcpmState {
    pub fn new(s0: AffinityMatrix, d0: TrajDistanceMatrix) -> Result<Self> {
        let n = s0.rows();
        if s0.cols() != n {
            return Err(Error::ShapeMismatch(alloc::format!("affinity is {n}x{}", s0.cols())));
        }
        if d0.rows() != n {
            return Err(Error::ShapeMismatch(alloc::format!(
                "affinity has {n} sequences but distances have {} rows",
                d0.rows()
            )));
        }
        Ok(RcpmState { s: s0.clone(), d: d0.clone(), s0, d0 })
    }

    pub fn sequences(&self) -> usize {
        self.s0.rows()
    }

    /// One affinity update followed by one distance update.
    pub fn step(&mut self, config: &RcpmConfig) {
        self.s = affinity_update(self, config);
        self.d = distance_update(self, config);
    }
}

/// Fuses visual affinity with the trajectory evidence in the current distances.
///
/// Pairs whose best shared signal is farther than `sigma` (or unknown) keep the
/// base affinity, as does the diagonal.
pub fn affinity_update(state: &RcpmState, config: &RcpmConfig) -> AffinityMatrix {
    let base = match config.variant {
        Variant::Standard => &state.s0,
        Variant::Star => &state.s,
    };
    let w = config.fusion_weight;
    let n = state.sequences();
    let mut out = base.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let Some(dhat) = min_avg_distance(&state.d, i, j).finite() else {
                continue;
            };
            if dhat > config.sigma {
                continue;
            }
            let evidence = (1.0 - dhat / config.sigma) * (1.0 - w);
            out[(i, j)] = base[(i, j)] * w + evidence;
            out[(j, i)] = base[(j, i)] * w + evidence;
        }
    }
    out
}

/// Affinity-weighted average of the neighbors' distances to each signal.
///
/// Reads the current affinity in `state.s`. Neighbors with no temporal overlap
/// with a signal are skipped; if none overlap, the base entry is kept.
pub fn distance_update(state: &RcpmState, config: &RcpmConfig) -> TrajDistanceMatrix {
    let base = match config.variant {
        Variant::Standard => &state.d0,
        Variant::Star => &state.d,
    };
    let (n, m) = base.shape();
    let mut out = Matrix::filled(n, m, Distance::Infinite);
    for i in 0..n {
        let psi = top_k_neighbors(&state.s, i, config.k);
        for c in 0..m {
            let mut num = 0.0;
            let mut den = 0.0;
            for &k in &psi {
                if let Some(v) = base[(k, c)].finite() {
                    let w = state.s[(i, k)];
                    num += v * w;
                    den += w;
                }
            }
            out[(i, c)] = if den > 0.0 { Distance::Finite(num / den) } else { base[(i, c)] };
        }
    }
    out
}

/// Runs `config.iterations` rounds and returns the final `(S, D)`.
pub fn run(
    s0: &AffinityMatrix,
    d0: &TrajDistanceMatrix,
    config: &RcpmConfig,
) -> Result<(AffinityMatrix, TrajDistanceMatrix)> {
    config.validate(s0.rows())?;
    let mut state = RcpmState::new(s0.clone(), d0.clone())?;
    for _ in 0..config.iterations {
        state.step(config);
    }
    Ok((state.s, state.d))
}
