//! M-ary constellations with Gray labeling and nearest-point demapping.
//!
//! Point indices coincide with their Gray bit labels, so `bits_to_point`
//! and `point_to_bits` are table lookups and all geometric structure lives
//! in the construction. The frozen labeling conventions are:
//!
//! - Square QAM: per-axis reflected Gray code. The high `log2(sqrt(M))`
//!   bits label the real-axis level (ascending), the low bits the
//!   imaginary-axis level. Every constellation is scaled to unit average
//!   energy.
//! - PSK: reflected Gray code around the circle, counterclockwise from
//!   angle 0, except M = 4 which starts at 45 degrees so that QPSK is the
//!   classic `{(+-1 +-j)/sqrt(2)}` set with labels 00, 01, 11, 10 around
//!   the circle.
//!
//! For square QAM, `demap_nearest` quantizes each axis independently with
//! edge clamping; this is exactly equivalent to exhaustive nearest-point
//! search, including the tie rule (lowest point index wins). That exact
//! equivalence is what makes the per-antenna detector in [`crate::detector`]
//! a true maximum-likelihood receiver.

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    SquareQam,
    Psk,
}

impl ConstellationKind {
    fn label(self) -> &'static str {
        match self {
            ConstellationKind::SquareQam => "square QAM",
            ConstellationKind::Psk => "PSK",
        }
    }
}

impl std::fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Geometry used by the per-axis QAM quantizer.
#[derive(Debug, Clone)]
struct QamGeometry {
    side: usize,
    half_bits: u32,
    /// Scaled amplitude of level index i (ascending).
    levels: Vec<f64>,
    /// Level index -> reflected-Gray axis label.
    level_to_gray: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Constellation {
    kind: ConstellationKind,
    m: usize,
    bits_per_symbol: u32,
    points: Vec<Complex64>,
    qam: Option<QamGeometry>,
}

fn binary_to_gray(i: usize) -> usize {
    i ^ (i >> 1)
}

impl Constellation {
    /// Builds a unit-average-energy, Gray-labeled constellation.
    ///
    /// Valid sizes: powers of 4 in 4..=256 for square QAM, powers of 2
    /// (at least 2) for PSK.
    pub fn build(kind: ConstellationKind, m: usize) -> Result<Self> {
        match kind {
            ConstellationKind::SquareQam => Self::build_square_qam(m),
            ConstellationKind::Psk => Self::build_psk(m),
        }
    }

    fn invalid(kind: ConstellationKind, m: usize) -> Error {
        Error::InvalidModulationOrder { kind: kind.label(), m }
    }

    fn build_square_qam(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        let valid = m >= 4 && side * side == m && side.is_power_of_two();
        if !valid {
            return Err(Self::invalid(ConstellationKind::SquareQam, m));
        }
        let half_bits = side.trailing_zeros();
        // Odd-integer grid +-{1, 3, ...}; average symbol energy 2(M-1)/3.
        let scale = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
        let levels: Vec<f64> = (0..side)
            .map(|i| (2.0 * i as f64 - (side as f64 - 1.0)) * scale)
            .collect();
        let level_to_gray: Vec<usize> = (0..side).map(binary_to_gray).collect();
        let mut gray_to_level = vec![0usize; side];
        for (level, &gray) in level_to_gray.iter().enumerate() {
            gray_to_level[gray] = level;
        }
        let mut points = vec![Complex64::new(0.0, 0.0); m];
        for (label, point) in points.iter_mut().enumerate() {
            let i_level = gray_to_level[label >> half_bits];
            let q_level = gray_to_level[label & (side - 1)];
            *point = Complex64::new(levels[i_level], levels[q_level]);
        }
        Ok(Self {
            kind: ConstellationKind::SquareQam,
            m,
            bits_per_symbol: 2 * half_bits,
            points,
            qam: Some(QamGeometry { side, half_bits, levels, level_to_gray }),
        })
    }

    fn build_psk(m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Self::invalid(ConstellationKind::Psk, m));
        }
        let offset = if m == 4 { std::f64::consts::FRAC_PI_4 } else { 0.0 };
        let mut points = vec![Complex64::new(0.0, 0.0); m];
        for ring_pos in 0..m {
            let theta = offset + 2.0 * std::f64::consts::PI * ring_pos as f64 / m as f64;
            points[binary_to_gray(ring_pos)] = Complex64::new(theta.cos(), theta.sin());
        }
        Ok(Self {
            kind: ConstellationKind::Psk,
            m,
            bits_per_symbol: m.trailing_zeros(),
            points,
            qam: None,
        })
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Nearest constellation point to `g`; ties go to the lowest index.
    ///
    /// Square QAM quantizes each axis independently with edge clamping,
    /// which equals exhaustive search exactly. PSK falls back to the
    /// exhaustive scan.
    pub fn demap_nearest(&self, g: Complex64) -> (usize, Complex64) {
        match &self.qam {
            Some(geom) => {
                let half_bits = geom.half_bits;
                let i_label = Self::axis_demap(geom, g.re);
                let q_label = Self::axis_demap(geom, g.im);
                let label = (i_label << half_bits) | q_label;
                (label, self.points[label])
            }
            None => self.nearest_exhaustive(g),
        }
    }

    /// Quantizes one axis to the Gray label of the nearest level.
    ///
    /// Distance ties between adjacent levels resolve to the smaller Gray
    /// label, which composes to the lowest overall point index because the
    /// index is lexicographic in (real label, imaginary label).
    fn axis_demap(geom: &QamGeometry, x: f64) -> usize {
        let side = geom.side;
        let step = geom.levels[1] - geom.levels[0];
        let pos = (x - geom.levels[0]) / step;
        let lo = (pos.floor() as isize).clamp(0, side as isize - 1) as usize;
        let hi = (lo + 1).min(side - 1);
        let d_lo = (x - geom.levels[lo]).abs();
        let d_hi = (x - geom.levels[hi]).abs();
        let level = if d_lo < d_hi {
            lo
        } else if d_hi < d_lo {
            hi
        } else if geom.level_to_gray[lo] < geom.level_to_gray[hi] {
            lo
        } else {
            hi
        };
        geom.level_to_gray[level]
    }

    /// Brute-force nearest point; the reference the QAM fast path must match.
    pub fn nearest_exhaustive(&self, g: Complex64) -> (usize, Complex64) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (idx, p) in self.points.iter().enumerate() {
            let d = (g - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        (best, self.points[best])
    }

    /// Maps a `log2(M)`-bit word to its constellation point.
    pub fn bits_to_point(&self, bits: u32) -> Result<(usize, Complex64)> {
        if bits as usize >= self.m {
            return Err(Error::WidthMismatch { bits, width: self.bits_per_symbol });
        }
        Ok((bits as usize, self.points[bits as usize]))
    }

    /// Inverse of [`Constellation::bits_to_point`].
    pub fn point_to_bits(&self, index: usize) -> u32 {
        assert!(index < self.m, "point index out of range");
        index as u32
    }
}
