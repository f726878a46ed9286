//! The spatial-modulation transmit chain: bits to (antenna, symbol) pairs
//! and the power-split transmit vector with artificial-noise injection.
//!
//! A word of `log2(N_t) + log2(M)` bits maps to one channel use: the high
//! bits pick the active antenna (natural binary), the low bits pick the
//! Gray-labeled constellation point. The confidential symbol is sent on the
//! single active antenna without further beamforming; artificial noise is
//! radiated from all selected antennas through the null-space projector,
//! normalized so that the expected total transmit power is exactly `P`
//! for every power split.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::SelectedScenario;
use crate::constellation::Constellation;
use crate::linalg::sample_cn;
use crate::{Error, Result};

/// One spatial-modulation symbol: active antenna plus constellation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmSymbol {
    pub antenna: usize,
    pub point_index: usize,
    pub point: Complex64,
    /// The source word: antenna bits (high) then symbol bits (low).
    pub bits: u32,
}

/// Fraction `beta` of the power budget on the confidential message;
/// the remaining `1 - beta` drives artificial noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaSplit {
    beta: f64,
    power: f64,
}

impl PaSplit {
    pub fn new(beta: f64, power: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(Error::BetaOutOfBracket { beta, min: 0.0, max: 1.0 });
        }
        assert!(power > 0.0 && power.is_finite(), "power must be positive");
        Ok(Self { beta, power })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

/// Bits per channel use: `log2(N_t) + log2(M)`.
pub fn bits_per_symbol(n_t: usize, m: usize) -> u32 {
    assert!(n_t.is_power_of_two() && m.is_power_of_two());
    n_t.trailing_zeros() + m.trailing_zeros()
}

/// Maps a bit word to its (antenna, point) pair.
pub fn map_bits(bits: u32, n_t: usize, c: &Constellation) -> Result<SmSymbol> {
    assert!(n_t.is_power_of_two(), "N_t must be a power of two");
    let width = bits_per_symbol(n_t, c.size());
    if width < 32 && bits >> width != 0 {
        return Err(Error::WidthMismatch { bits, width });
    }
    let sym_bits = c.bits_per_symbol();
    let antenna = (bits >> sym_bits) as usize;
    let (point_index, point) = c.bits_to_point(bits & ((1u32 << sym_bits) - 1))?;
    Ok(SmSymbol { antenna, point_index, point, bits })
}

/// Reassembles the bit word from a decided (antenna, point) pair.
pub fn unmap_bits(antenna: usize, point_index: usize, c: &Constellation) -> u32 {
    (antenna as u32) << c.bits_per_symbol() | c.point_to_bits(point_index)
}

/// Builds the transmit vector `t = sqrt(beta P) e_j x + sqrt((1-beta) P) T z`
/// with `z ~ CN(0, I / (N_t - N_b))`, so that `E||T z||^2 = 1` and the
/// expected transmit power equals `P` for every `beta`. The artificial-noise
/// term vanishes identically in Bob's channel by the null-space construction.
pub fn transmit_vector(
    ss: &SelectedScenario,
    sym: &SmSymbol,
    pa: &PaSplit,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let n_t = ss.n_t();
    assert!(sym.antenna < n_t, "antenna index out of range");
    let mut t = vec![Complex64::new(0.0, 0.0); n_t];
    t[sym.antenna] = sym.point * (pa.beta * pa.power).sqrt();
    if pa.beta < 1.0 {
        let an_dim = ss.an_projector.cols();
        let z = sample_cn(rng, an_dim, 1.0 / an_dim as f64);
        let an = ss.an_projector.mul_vec(&z);
        let gain = ((1.0 - pa.beta) * pa.power).sqrt();
        for (ti, ai) in t.iter_mut().zip(an) {
            *ti += ai * gain;
        }
    }
    t
}
