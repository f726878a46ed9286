//! Wiretap-channel scenarios and received-signal synthesis.
//!
//! SNR convention, used everywhere in this workspace: `SNR = P / sigma2`
//! with `P` the total transmit power and `sigma2` the per-receive-antenna
//! noise variance, identical at Bob and Eve. Channel entries are i.i.d.
//! CN(0,1) Rayleigh fades, one draw per symbol burst (block fading).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{sample_cn, ComplexMatrix, DEFAULT_NULL_SPACE_TOL};
use crate::{Error, Result};

/// One wiretap-channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Desired channel to Bob, `N_b x N_a`.
    pub h_b: ComplexMatrix,
    /// Eavesdrop channel to Eve, `N_e x N_a`.
    pub h_e: ComplexMatrix,
    /// Per-receive-antenna noise variance (same at Bob and Eve).
    pub sigma2: f64,
    /// Total transmit power in watts.
    pub power: f64,
}

impl Scenario {
    pub fn n_a(&self) -> usize {
        self.h_b.cols()
    }

    pub fn n_b(&self) -> usize {
        self.h_b.rows()
    }

    pub fn n_e(&self) -> usize {
        self.h_e.rows()
    }
}

/// Draws a Rayleigh scenario with `sigma2 = P / 10^(snr_db/10)`.
pub fn gen_scenario(
    rng: &mut impl Rng,
    n_a: usize,
    n_b: usize,
    n_e: usize,
    snr_db: f64,
    power: f64,
) -> Scenario {
    assert!(n_a >= 1 && n_b >= 1 && n_e >= 1, "dimensions must be >= 1");
    assert!(power > 0.0, "power must be positive");
    let sigma2 = power / 10f64.powf(snr_db / 10.0);
    let h_b = ComplexMatrix::from_vec(n_b, n_a, sample_cn(rng, n_b * n_a, 1.0));
    let h_e = ComplexMatrix::from_vec(n_e, n_a, sample_cn(rng, n_e * n_a, 1.0));
    Scenario { h_b, h_e, sigma2, power }
}

/// A scenario restricted to an ordered antenna subset, with the
/// artificial-noise projector for the selected desired channel.
#[derive(Debug, Clone)]
pub struct SelectedScenario {
    pub selection: Vec<usize>,
    /// Column-selected desired channel, `N_b x N_t`.
    pub hb_s: ComplexMatrix,
    /// Column-selected eavesdrop channel, `N_e x N_t`.
    pub he_s: ComplexMatrix,
    /// Orthonormal null-space basis of `hb_s`, `N_t x (N_t - N_b)`.
    pub an_projector: ComplexMatrix,
    pub sigma2: f64,
    pub power: f64,
}

impl SelectedScenario {
    pub fn n_t(&self) -> usize {
        self.selection.len()
    }

    pub fn n_b(&self) -> usize {
        self.hb_s.rows()
    }

    pub fn n_e(&self) -> usize {
        self.he_s.rows()
    }
}

/// Restricts a scenario to the given antenna subset.
///
/// The selection must consist of distinct in-range indices and must be
/// strictly larger than `N_b` so that the desired channel has a null space
/// to host artificial noise.
pub fn select(s: &Scenario, selection: &[usize]) -> Result<SelectedScenario> {
    let n_a = s.n_a();
    let mut seen = vec![false; n_a];
    for &idx in selection {
        if idx >= n_a {
            return Err(Error::InvalidSelection(format!(
                "antenna index {idx} out of range 0..{n_a}"
            )));
        }
        if seen[idx] {
            return Err(Error::InvalidSelection(format!("antenna index {idx} repeated")));
        }
        seen[idx] = true;
    }
    if selection.len() <= s.n_b() {
        return Err(Error::NullSpaceEmpty { selected: selection.len(), n_b: s.n_b() });
    }
    let hb_s = s.h_b.select_columns(selection);
    let he_s = s.h_e.select_columns(selection);
    let an_projector = hb_s.null_space_basis(DEFAULT_NULL_SPACE_TOL)?;
    Ok(SelectedScenario {
        selection: selection.to_vec(),
        hb_s,
        he_s,
        an_projector,
        sigma2: s.sigma2,
        power: s.power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverSide {
    Bob,
    Eve,
}

/// Synthesizes `y = H t + n` at the chosen receiver,
/// with `n ~ CN(0, sigma2 I)`.
pub fn receive(
    ss: &SelectedScenario,
    t: &[Complex64],
    rng: &mut impl Rng,
    at: ReceiverSide,
) -> Vec<Complex64> {
    assert_eq!(t.len(), ss.n_t(), "transmit vector length must be N_t");
    let h = match at {
        ReceiverSide::Bob => &ss.hb_s,
        ReceiverSide::Eve => &ss.he_s,
    };
    let noise = sample_cn(rng, h.rows(), ss.sigma2);
    h.mul_vec(t)
        .into_iter()
        .zip(noise)
        .map(|(s, n)| s + n)
        .collect()
}
