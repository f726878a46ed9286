//! Transmit-antenna-selection strategies.
//!
//! Spatial modulation needs a power-of-two antenna count for bit mapping,
//! so `N_t = 2^floor(log2 N_a)` antennas are selected from the `N_a`
//! available. Four interchangeable strategies sit behind [`TasStrategy`]
//! and are resolved by name:
//!
//! - `random`: uniform over all size-`N_t` subsets;
//! - `exhaustive-sr`: argmax of Monte Carlo secrecy rate over all subsets
//!   under common random numbers (the optimum, and the most expensive);
//! - `max-slnr`: keep the antennas with the largest per-antenna SLNRs,
//!   a sort instead of a search;
//! - `edas` / `edas-secure`: maximize the minimum received-candidate
//!   Euclidean distance over the desired channel, or the ratio of desired
//!   to eavesdropper minimum distances.
//!
//! Subset-enumerating strategies refuse to run past `subset_cap`
//! ([`DEFAULT_SUBSET_CAP`] by default): at the full 15-choose-8 scale of
//! the literature the Monte Carlo cost explodes, so the big runs must be
//! requested explicitly through the cap override.

use crate::channel::{select, Scenario};
use crate::constellation::Constellation;
use crate::linalg::{ComplexMatrix, RngStream, DEFAULT_NULL_SPACE_TOL};
use crate::secrecy::{secrecy_rate, slnr_per_antenna};
use crate::sm_link::PaSplit;
use crate::{Error, Result};

/// Default cap on enumerated subsets for `exhaustive-sr` and `edas`.
pub const DEFAULT_SUBSET_CAP: u128 = 1_000;

/// Outcome of one selection: the antenna list plus the strategy's own
/// score for it (secrecy rate, threshold SLNR, or minimum distance; zero
/// for `random`).
///
/// Selections are always returned in ascending index order. The canonical
/// form matters: Monte Carlo secrecy-rate estimates pair noise draws with
/// candidate indices, so two orderings of the same subset would score
/// differently and break common-random-number comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct TasResult {
    pub selection: Vec<usize>,
    pub score: f64,
    pub strategy: &'static str,
}

/// Shared inputs for every strategy; each uses the fields it needs.
#[derive(Debug, Clone)]
pub struct TasContext<'a> {
    pub n_t: usize,
    pub pa: PaSplit,
    pub constellation: &'a Constellation,
    /// Noise draws per candidate for Monte Carlo scoring.
    pub noise_samples: usize,
    /// One stream for the whole comparison: subsets are scored under
    /// common random numbers, and the same stream must be passed for every
    /// strategy being compared.
    pub rng_stream: RngStream,
    pub subset_cap: u128,
}

pub trait TasStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(&self, s: &Scenario, ctx: &TasContext) -> Result<TasResult>;
}

pub const TAS_STRATEGY_NAMES: [&str; 5] =
    ["random", "exhaustive-sr", "max-slnr", "edas", "edas-secure"];

pub fn by_name(name: &str) -> Result<Box<dyn TasStrategy>> {
    match name {
        "random" => Ok(Box::new(RandomTas)),
        "exhaustive-sr" => Ok(Box::new(ExhaustiveSrTas)),
        "max-slnr" => Ok(Box::new(MaxSlnrTas)),
        "edas" => Ok(Box::new(EdasTas { mode: EdasMode::Desired })),
        "edas-secure" => Ok(Box::new(EdasTas { mode: EdasMode::SecureRatio })),
        other => Err(Error::UnknownStrategy(other.to_string())),
    }
}

/// Sorted size-`k` subsets of `0..n` in lexicographic order, refusing to
/// enumerate more than `cap` of them.
pub fn k_subsets(n: usize, k: usize, cap: u128) -> Result<Vec<Vec<usize>>> {
    if k > n {
        return Err(Error::InvalidSelection(format!("cannot choose {k} antennas out of {n}")));
    }
    let mut count: u128 = 1;
    for i in 0..k {
        count = count * (n - i) as u128 / (i + 1) as u128;
    }
    if count > cap {
        return Err(Error::BudgetExceeded { subsets: count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // Advance to the next lexicographic combination.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if current[i] != i + n - k {
                break;
            }
            if i == 0 {
                return Ok(out);
            }
        }
        current[i] += 1;
        for j in (i + 1)..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Uniform random subset, returned in ascending order.
pub struct RandomTas;

impl TasStrategy for RandomTas {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&self, s: &Scenario, ctx: &TasContext) -> Result<TasResult> {
        let n_a = s.n_a();
        if ctx.n_t > n_a {
            return Err(Error::InvalidSelection(format!(
                "cannot choose {} antennas out of {n_a}",
                ctx.n_t
            )));
        }
        let mut rng = ctx.rng_stream.rng();
        let mut pool: Vec<usize> = (0..n_a).collect();
        // Partial Fisher-Yates; sorting makes the subset canonical.
        for i in 0..ctx.n_t {
            let j = i + rand::Rng::gen_range(&mut rng, 0..n_a - i);
            pool.swap(i, j);
        }
        let mut selection = pool[..ctx.n_t].to_vec();
        selection.sort_unstable();
        Ok(TasResult { selection, score: 0.0, strategy: self.name() })
    }
}

/// Brute-force argmax of Monte Carlo secrecy rate over all subsets.
pub struct ExhaustiveSrTas;

impl TasStrategy for ExhaustiveSrTas {
    fn name(&self) -> &'static str {
        "exhaustive-sr"
    }

    fn select(&self, s: &Scenario, ctx: &TasContext) -> Result<TasResult> {
        let subsets = k_subsets(s.n_a(), ctx.n_t, ctx.subset_cap)?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        for subset in subsets {
            let ss = select(s, &subset)?;
            // Same stream for every subset: common random numbers.
            let est = secrecy_rate(&ss, &ctx.pa, ctx.constellation, ctx.noise_samples, ctx.rng_stream)?;
            match &best {
                Some((_, score)) if est.sr <= *score => {}
                _ => best = Some((subset, est.sr)),
            }
        }
        let (selection, score) = best.expect("at least one subset");
        Ok(TasResult { selection, score, strategy: self.name() })
    }
}

/// Keep the `N_t` antennas with the largest SLNRs.
///
/// The per-antenna SLNR is computed against the full-array null-space
/// projector (the selection is not known yet); the selected submatrix gets
/// its own projector afterwards when the caller builds the
/// [`crate::channel::SelectedScenario`].
pub struct MaxSlnrTas;

impl TasStrategy for MaxSlnrTas {
    fn name(&self) -> &'static str {
        "max-slnr"
    }

    fn select(&self, s: &Scenario, ctx: &TasContext) -> Result<TasResult> {
        if ctx.n_t > s.n_a() {
            return Err(Error::InvalidSelection(format!(
                "cannot choose {} antennas out of {}",
                ctx.n_t,
                s.n_a()
            )));
        }
        let t_full = s.h_b.null_space_basis(DEFAULT_NULL_SPACE_TOL)?;
        let slnr = slnr_per_antenna(s, &ctx.pa, &t_full);
        let mut order: Vec<usize> = (0..s.n_a()).collect();
        // Descending SLNR, ties to the lower antenna index.
        order.sort_by(|&a, &b| slnr[b].partial_cmp(&slnr[a]).unwrap().then(a.cmp(&b)));
        let score = slnr[order[ctx.n_t - 1]];
        let mut selection = order[..ctx.n_t].to_vec();
        selection.sort_unstable();
        Ok(TasResult { selection, score, strategy: self.name() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdasMode {
    /// Maximize the minimum candidate distance over the desired channel.
    Desired,
    /// Maximize the ratio of desired to eavesdropper minimum distances.
    SecureRatio,
}

/// Euclidean-distance-optimized antenna selection.
pub struct EdasTas {
    pub mode: EdasMode,
}

/// Minimum squared distance between distinct received candidates
/// `H(S) e_j x_m` over all (antenna, point) pairs.
fn min_candidate_distance_sq(h_sel: &ComplexMatrix, c: &Constellation) -> f64 {
    let n_t = h_sel.cols();
    let mut candidates: Vec<Vec<num_complex::Complex64>> = Vec::with_capacity(n_t * c.size());
    for j in 0..n_t {
        let col = h_sel.column(j);
        for x in c.points() {
            candidates.push(col.iter().map(|h| h * x).collect());
        }
    }
    let mut min_d = f64::INFINITY;
    for a in 0..candidates.len() {
        for b in (a + 1)..candidates.len() {
            let d: f64 = candidates[a]
                .iter()
                .zip(&candidates[b])
                .map(|(x, y)| (x - y).norm_sqr())
                .sum();
            if d < min_d {
                min_d = d;
            }
        }
    }
    min_d
}

impl TasStrategy for EdasTas {
    fn name(&self) -> &'static str {
        match self.mode {
            EdasMode::Desired => "edas",
            EdasMode::SecureRatio => "edas-secure",
        }
    }

    fn select(&self, s: &Scenario, ctx: &TasContext) -> Result<TasResult> {
        let subsets = k_subsets(s.n_a(), ctx.n_t, ctx.subset_cap)?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        for subset in subsets {
            let hb = s.h_b.select_columns(&subset);
            let objective = match self.mode {
                EdasMode::Desired => min_candidate_distance_sq(&hb, ctx.constellation),
                EdasMode::SecureRatio => {
                    let he = s.h_e.select_columns(&subset);
                    min_candidate_distance_sq(&hb, ctx.constellation)
                        / min_candidate_distance_sq(&he, ctx.constellation)
                }
            };
            match &best {
                Some((_, score)) if objective <= *score => {}
                _ => best = Some((subset, objective)),
            }
        }
        let (selection, score) = best.expect("at least one subset");
        Ok(TasResult { selection, score, strategy: self.name() })
    }
}
