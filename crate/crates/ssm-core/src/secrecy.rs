//! Monte Carlo finite-alphabet mutual information, secrecy rate, and the
//! per-antenna signal-to-leakage-and-noise ratio.
//!
//! Discrete-input continuous-output channels have no closed-form rate, so
//! mutual information is estimated by averaging the log-likelihood ratio
//! over sampled unit-variance noise: for equiprobable candidates `u_i`,
//!
//! ```text
//! I = log2 N - (1/(N K)) sum_{i,k} log2 sum_j exp(-||u_i - u_j + w_k||^2 + ||w_k||^2)
//! ```
//!
//! evaluated with log-sum-exp stabilization. Candidates must already be
//! whitened to unit noise; Eve's colored artificial-noise-plus-thermal
//! covariance goes through [`crate::linalg::ComplexMatrix::cholesky_whitener`]
//! first. Comparisons across power splits or antenna subsets should reuse
//! one [`RngStream`] so common random numbers cancel most Monte Carlo
//! variance out of the orderings.

use num_complex::Complex64;

use crate::channel::{Scenario, SelectedScenario};
use crate::constellation::Constellation;
use crate::linalg::{sample_cn, ComplexMatrix, RngStream};
use crate::sm_link::PaSplit;
use crate::Result;

type CandidateSet = Vec<Vec<Complex64>>;

/// Mutual-information estimate in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub value: f64,
    pub std_error: f64,
    pub noise_samples: usize,
}

/// Secrecy-rate estimate `max(0, I_bob - I_eve)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrEstimate {
    pub sr: f64,
    pub mi_bob: MiEstimate,
    pub mi_eve: MiEstimate,
}

impl SrEstimate {
    /// Combined standard error of the two MI estimates.
    pub fn std_error(&self) -> f64 {
        self.mi_bob
            .std_error
            .hypot(self.mi_eve.std_error)
    }
}

/// Estimates the mutual information of an equiprobable finite alphabet
/// observed through unit-variance complex Gaussian noise.
///
/// `noise_samples` is the number of noise draws per candidate. The standard
/// error comes from the empirical variance of the per-sample log terms.
pub fn mi_finite_alphabet(
    candidates: &[Vec<Complex64>],
    noise_samples: usize,
    rng_stream: RngStream,
) -> MiEstimate {
    let n = candidates.len();
    assert!(n >= 1, "need at least one candidate");
    assert!(noise_samples >= 1, "need at least one noise sample");
    let dim = candidates[0].len();
    assert!(candidates.iter().all(|u| u.len() == dim), "mixed candidate dims");

    let mut rng = rng_stream.rng();
    let log2_n = (n as f64).log2();
    let ln2 = std::f64::consts::LN_2;

    let total = n * noise_samples;
    let mut terms = Vec::with_capacity(total);
    let mut diffs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut diff_norms: Vec<f64> = Vec::with_capacity(n);
    let mut exponents = vec![0.0f64; n];

    for u_i in candidates {
        // d_ij = u_i - u_j, reused across this candidate's noise draws.
        diffs.clear();
        diff_norms.clear();
        for u_j in candidates {
            let d: Vec<Complex64> = u_i.iter().zip(u_j).map(|(a, b)| a - b).collect();
            diff_norms.push(d.iter().map(|z| z.norm_sqr()).sum());
            diffs.push(d);
        }
        for _ in 0..noise_samples {
            let w = sample_cn(&mut rng, dim, 1.0);
            // -||d + w||^2 + ||w||^2 = -||d||^2 - 2 Re<d, w>; exactly zero
            // for j = i, so the estimator is exact at N = 1.
            for j in 0..n {
                let cross: f64 = diffs[j]
                    .iter()
                    .zip(&w)
                    .map(|(d, wl)| (d.conj() * wl).re)
                    .sum();
                exponents[j] = -diff_norms[j] - 2.0 * cross;
            }
            let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = exponents.iter().map(|a| (a - max).exp()).sum();
            terms.push((max + sum.ln()) / ln2);
        }
    }

    let mean = terms.iter().sum::<f64>() / total as f64;
    let std_error = if total > 1 {
        let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (total - 1) as f64;
        (var / total as f64).sqrt()
    } else {
        0.0
    };
    MiEstimate { value: log2_n - mean, std_error, noise_samples }
}

/// Builds the Bob- and Eve-side candidate sets for a selected scenario and
/// power split, whitened to unit noise.
///
/// Bob sees only thermal noise (the artificial noise lies in his channel's
/// null space), so his candidates are scaled by `1/sqrt(sigma2)`. Eve sees
/// thermal noise plus the projected artificial noise with covariance
/// `sigma2 I + ((1-beta) P / (N_t - N_b)) (H_e T)(H_e T)^H`, removed by the
/// Cholesky whitener. Eve is assumed to know the constellation, the
/// selection, and the power split (worst case).
fn candidate_sets(
    ss: &SelectedScenario,
    pa: &PaSplit,
    c: &Constellation,
) -> Result<(CandidateSet, CandidateSet)> {
    let n_t = ss.n_t();
    let amp = (pa.beta() * pa.power()).sqrt();

    let bob_scale = amp / ss.sigma2.sqrt();
    let mut bob = Vec::with_capacity(n_t * c.size());
    for j in 0..n_t {
        let col = ss.hb_s.column(j);
        for x in c.points() {
            bob.push(col.iter().map(|h| h * x * bob_scale).collect());
        }
    }

    let an_power = (1.0 - pa.beta()) * pa.power();
    let het = ss.he_s.mul(&ss.an_projector);
    let n_e = ss.n_e();
    let cov = ComplexMatrix::identity(n_e)
        .scale(ss.sigma2)
        .add(&het.mul(&het.conj_transpose()).scale(an_power / ss.an_projector.cols() as f64));
    let whitener = cov.cholesky_whitener()?;

    let mut eve = Vec::with_capacity(n_t * c.size());
    for j in 0..n_t {
        let col = ss.he_s.column(j);
        for x in c.points() {
            let raw: Vec<Complex64> = col.iter().map(|h| h * x * amp).collect();
            eve.push(whitener.mul_vec(&raw));
        }
    }
    Ok((bob, eve))
}

/// Monte Carlo secrecy rate `[I_bob - I_eve]^+` for one scenario and power
/// split. Bob's and Eve's estimates use disjoint child streams of
/// `rng_stream`, so calls with the same stream are coupled (common random
/// numbers) across power splits and antenna subsets.
pub fn secrecy_rate(
    ss: &SelectedScenario,
    pa: &PaSplit,
    c: &Constellation,
    noise_samples: usize,
    rng_stream: RngStream,
) -> Result<SrEstimate> {
    let (bob, eve) = candidate_sets(ss, pa, c)?;
    let mi_bob = mi_finite_alphabet(&bob, noise_samples, rng_stream.child(0));
    let mi_eve = mi_finite_alphabet(&eve, noise_samples, rng_stream.child(1));
    Ok(SrEstimate { sr: (mi_bob.value - mi_eve.value).max(0.0), mi_bob, mi_eve })
}

/// Per-antenna signal-to-leakage-and-noise ratio over the full array:
///
/// ```text
/// SLNR_j = beta P ||H_b e_j||^2 /
///          (beta P ||H_e e_j||^2 + ((1-beta) P / (N_a - N_b)) ||H_e T||_F^2 + N_b sigma2)
/// ```
///
/// `t_full` is the null-space basis of the full desired channel; the
/// artificial-noise term is the noise power received at Eve (at Bob it is
/// identically zero by construction).
pub fn slnr_per_antenna(s: &Scenario, pa: &PaSplit, t_full: &ComplexMatrix) -> Vec<f64> {
    let n_a = s.n_a();
    assert_eq!(t_full.rows(), n_a, "projector must match the full array");
    let an_term = if t_full.cols() > 0 {
        (1.0 - pa.beta()) * pa.power() / t_full.cols() as f64
            * s.h_e.mul(t_full).frobenius_norm().powi(2)
    } else {
        0.0
    };
    let noise_term = s.n_b() as f64 * s.sigma2;
    let cm_power = pa.beta() * pa.power();
    (0..n_a)
        .map(|j| {
            let sig: f64 = (0..s.n_b()).map(|i| s.h_b[(i, j)].norm_sqr()).sum();
            let leak: f64 = (0..s.n_e()).map(|i| s.h_e[(i, j)].norm_sqr()).sum();
            cm_power * sig / (cm_power * leak + an_term + noise_term)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_scenario, select};
    use crate::constellation::ConstellationKind;
    use crate::linalg::DEFAULT_NULL_SPACE_TOL;

    fn qpsk() -> Constellation {
        Constellation::build(ConstellationKind::Psk, 4).unwrap()
    }

    #[test]
    fn single_candidate_gives_zero_exactly() {
        let candidates = vec![vec![Complex64::new(0.3, -0.7); 2]];
        let est = mi_finite_alphabet(&candidates, 50, RngStream::root(41));
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn duplicate_candidates_indistinguishable() {
        let u = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)];
        let est = mi_finite_alphabet(&[u.clone(), u], 200, RngStream::root(42));
        assert!(est.value.abs() <= (3.0 * est.std_error).max(1e-12), "I {}", est.value);
    }

    #[test]
    fn well_separated_candidates_saturate() {
        let n = 8;
        let candidates: Vec<Vec<Complex64>> = (0..n)
            .map(|i| vec![Complex64::new(150.0 * i as f64, 0.0), Complex64::new(0.0, 0.0)])
            .collect();
        let est = mi_finite_alphabet(&candidates, 200, RngStream::root(43));
        assert!((est.value - 3.0).abs() < 0.01, "I {}", est.value);
    }

    #[test]
    fn mi_stays_inside_bounds() {
        let mut stream = RngStream::root(44);
        for trial in 0..20 {
            stream = stream.child(trial);
            let mut rng = stream.rng();
            let n = 4;
            let candidates: Vec<Vec<Complex64>> =
                (0..n).map(|_| sample_cn(&mut rng, 2, 2.0)).collect();
            let est = mi_finite_alphabet(&candidates, 100, stream.child(99));
            assert!(est.value >= -3.0 * est.std_error);
            assert!(est.value <= (n as f64).log2() + 3.0 * est.std_error);
        }
    }

    #[test]
    fn mi_monotone_in_scale_under_common_noise() {
        let mut rng = RngStream::root(45).rng();
        let base: Vec<Vec<Complex64>> = (0..8).map(|_| sample_cn(&mut rng, 2, 1.0)).collect();
        let stream = RngStream::root(46);
        let mut prev = f64::NEG_INFINITY;
        let mut prev_se = 0.0;
        for scale in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let scaled: Vec<Vec<Complex64>> = base
                .iter()
                .map(|u| u.iter().map(|z| z * scale).collect())
                .collect();
            let est = mi_finite_alphabet(&scaled, 400, stream);
            assert!(
                est.value >= prev - 3.0 * (est.std_error + prev_se),
                "scale {scale}: {} < {prev}",
                est.value
            );
            prev = est.value;
            prev_se = est.std_error;
        }
    }

    #[test]
    fn symmetric_channels_give_zero_sr() {
        let mut rng = RngStream::root(47).rng();
        let mut s = gen_scenario(&mut rng, 4, 2, 2, 10.0, 4.0);
        s.h_e = s.h_b.clone(); // Eve == Bob
        let ss = select(&s, &[0, 1, 2, 3]).unwrap();
        let pa = PaSplit::new(1.0, 4.0).unwrap();
        let est = secrecy_rate(&ss, &pa, &qpsk(), 300, RngStream::root(48)).unwrap();
        assert!(est.sr <= 3.0 * est.std_error(), "sr {}", est.sr);
    }

    #[test]
    fn huge_noise_kills_both_rates() {
        let mut rng = RngStream::root(49).rng();
        let s = gen_scenario(&mut rng, 4, 2, 2, -60.0, 4.0);
        let ss = select(&s, &[0, 1, 2, 3]).unwrap();
        let pa = PaSplit::new(0.5, 4.0).unwrap();
        let est = secrecy_rate(&ss, &pa, &qpsk(), 200, RngStream::root(50)).unwrap();
        assert!(est.mi_bob.value < 0.02, "bob {}", est.mi_bob.value);
        assert!(est.sr < 0.02, "sr {}", est.sr);
    }

    #[test]
    fn heavy_an_beats_balanced_split_at_high_snr() {
        // With strong channels on both sides, pushing power into artificial
        // noise hurts Eve more than Bob.
        let mut rng = RngStream::root(51).rng();
        let s = gen_scenario(&mut rng, 4, 2, 2, 18.0, 4.0);
        let ss = select(&s, &[0, 1, 2, 3]).unwrap();
        let c = qpsk();
        let stream = RngStream::root(52);
        let sr_01 = secrecy_rate(&ss, &PaSplit::new(0.1, 4.0).unwrap(), &c, 400, stream)
            .unwrap();
        let sr_05 = secrecy_rate(&ss, &PaSplit::new(0.5, 4.0).unwrap(), &c, 400, stream)
            .unwrap();
        assert!(
            sr_01.sr > sr_05.sr,
            "beta 0.1 -> {}, beta 0.5 -> {}",
            sr_01.sr,
            sr_05.sr
        );
    }

    #[test]
    fn whitened_estimate_matches_colored_reference() {
        // Direct colored-noise estimator on a small instance, written
        // independently: likelihoods use K^{-1} via 2x2 inversion and noise
        // drawn as L w.
        let mut rng = RngStream::root(53).rng();
        let s = gen_scenario(&mut rng, 4, 2, 2, 8.0, 4.0);
        let ss = select(&s, &[0, 1, 2, 3]).unwrap();
        let pa = PaSplit::new(0.6, 4.0).unwrap();
        let c = Constellation::build(ConstellationKind::Psk, 2).unwrap();

        let est = secrecy_rate(&ss, &pa, &c, 2_000, RngStream::root(54)).unwrap();

        // Reference for Eve's MI with explicit colored covariance.
        let amp = (pa.beta() * pa.power()).sqrt();
        let het = ss.he_s.mul(&ss.an_projector);
        let cov = ComplexMatrix::identity(2).scale(ss.sigma2).add(
            &het.mul(&het.conj_transpose())
                .scale((1.0 - pa.beta()) * pa.power() / ss.an_projector.cols() as f64),
        );
        // 2x2 Hermitian inverse by adjugate.
        let det = (cov[(0, 0)] * cov[(1, 1)] - cov[(0, 1)] * cov[(1, 0)]).re;
        let kinv = ComplexMatrix::from_rows(&[
            vec![cov[(1, 1)] / det, -cov[(0, 1)] / det],
            vec![-cov[(1, 0)] / det, cov[(0, 0)] / det],
        ]);
        let l = cov.cholesky_factor().unwrap();
        let quad = |v: &[Complex64]| -> f64 {
            let kv = kinv.mul_vec(v);
            v.iter().zip(&kv).map(|(a, b)| (a.conj() * b).re).sum()
        };
        let candidates: Vec<Vec<Complex64>> = (0..4)
            .flat_map(|j| {
                let col = ss.he_s.column(j);
                c.points()
                    .iter()
                    .map(move |x| col.iter().map(|h| h * x * amp).collect::<Vec<_>>())
            })
            .collect();
        let n = candidates.len();
        let k_draws = 2_000;
        let mut rng = RngStream::root(55).rng();
        let mut total = 0.0;
        for u_i in &candidates {
            for _ in 0..k_draws {
                let w = sample_cn(&mut rng, 2, 1.0);
                let colored = l.mul_vec(&w);
                let y: Vec<Complex64> =
                    u_i.iter().zip(&colored).map(|(a, b)| a + b).collect();
                let log_terms: Vec<f64> = candidates
                    .iter()
                    .map(|u_j| {
                        let d: Vec<Complex64> =
                            y.iter().zip(u_j).map(|(a, b)| a - b).collect();
                        -quad(&d) + quad(&colored)
                    })
                    .collect();
                let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = log_terms.iter().map(|a| (a - max).exp()).sum();
                total += (max + sum.ln()) / std::f64::consts::LN_2;
            }
        }
        let reference = (n as f64).log2() - total / (n * k_draws) as f64;
        let tol = 3.0 * (est.mi_eve.std_error + 0.02);
        assert!(
            (est.mi_eve.value - reference).abs() <= tol,
            "whitened {} vs colored {reference}",
            est.mi_eve.value
        );
    }

    #[test]
    fn slnr_matches_independent_arithmetic() {
        let mut rng = RngStream::root(56).rng();
        let s = gen_scenario(&mut rng, 4, 2, 2, 6.0, 4.0);
        let pa = PaSplit::new(0.7, 4.0).unwrap();
        let t_full = s.h_b.null_space_basis(DEFAULT_NULL_SPACE_TOL).unwrap();
        let slnr = slnr_per_antenna(&s, &pa, &t_full);

        // Scalar re-derivation for antenna 0, term by term.
        let bp = 0.7 * 4.0;
        let sig = s.h_b[(0, 0)].norm_sqr() + s.h_b[(1, 0)].norm_sqr();
        let leak = s.h_e[(0, 0)].norm_sqr() + s.h_e[(1, 0)].norm_sqr();
        let het = s.h_e.mul(&t_full);
        let mut an = 0.0;
        for i in 0..het.rows() {
            for j in 0..het.cols() {
                an += het[(i, j)].norm_sqr();
            }
        }
        let an_term = (1.0 - 0.7) * 4.0 / t_full.cols() as f64 * an;
        let expected = bp * sig / (bp * leak + an_term + 2.0 * s.sigma2);
        assert!((slnr[0] - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn slnr_leakage_free_limit() {
        let mut rng = RngStream::root(57).rng();
        let mut s = gen_scenario(&mut rng, 4, 2, 2, 6.0, 4.0);
        s.h_e = ComplexMatrix::zeros(2, 4);
        let pa = PaSplit::new(1.0, 4.0).unwrap();
        let t_full = s.h_b.null_space_basis(DEFAULT_NULL_SPACE_TOL).unwrap();
        let slnr = slnr_per_antenna(&s, &pa, &t_full);
        for (j, v) in slnr.iter().enumerate() {
            let sig = s.h_b[(0, j)].norm_sqr() + s.h_b[(1, j)].norm_sqr();
            let expected = 4.0 * sig / (2.0 * s.sigma2);
            assert!((v - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn slnr_argmax_invariant_under_channel_scaling() {
        let mut rng = RngStream::root(58).rng();
        let s = gen_scenario(&mut rng, 6, 2, 2, 6.0, 4.0);
        let pa = PaSplit::new(0.8, 4.0).unwrap();
        let t_full = s.h_b.null_space_basis(DEFAULT_NULL_SPACE_TOL).unwrap();
        let base = slnr_per_antenna(&s, &pa, &t_full);
        let mut scaled = s.clone();
        scaled.h_b = s.h_b.scale(3.0);
        // Same null space after scaling.
        let slnr_scaled = slnr_per_antenna(&scaled, &pa, &t_full);
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmax(&base), argmax(&slnr_scaled));
    }
}
