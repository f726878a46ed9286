//! Power-allocation strategies: how much of the budget goes to the
//! confidential message versus artificial noise.
//!
//! Strategies implement [`PaStrategy`] and are resolved from a spec string
//! (`fixed:0.3`, `grid`, `gradient`, `max-p-sinr-ansnr`); the learned
//! allocator in [`crate::dnn`] joins the same trait. The allocation factor
//! is confined to [`DEFAULT_BRACKET`]; the endpoints are degenerate (all
//! power in one component) and never useful.
//!
//! Every secrecy-rate evaluation a strategy consumes goes through a counted
//! evaluator seeded with one common stream, so (a) the reported
//! `evaluations` field is an honest complexity measure and (b) comparisons
//! across allocation factors ride on common random numbers, which is what
//! makes grid search dominate every fixed factor by construction.

use crate::channel::SelectedScenario;
use crate::constellation::Constellation;
use crate::linalg::RngStream;
use crate::secrecy::secrecy_rate;
use crate::sm_link::PaSplit;
use crate::{Error, Result};

/// Allocation bracket `[beta_min, beta_max]`.
pub const DEFAULT_BRACKET: (f64, f64) = (0.05, 0.95);

/// Default grid pitch for exhaustive search.
pub const DEFAULT_GRID_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PaResult {
    pub beta: f64,
    pub sr_at_beta: f64,
    pub strategy: String,
    /// Secrecy-rate evaluations consumed, including the final report.
    pub evaluations: usize,
    /// False when an iterative strategy hit its iteration cap while still
    /// moving; the best iterate is returned regardless.
    pub converged: bool,
}

/// Tuning for the finite-difference gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientConfig {
    pub beta0: f64,
    /// Central-difference probe half-width.
    pub fd_step: f64,
    /// Initial step size; decays as `step0 / (1 + decay * t)`.
    pub step0: f64,
    pub decay: f64,
    pub max_iters: usize,
    /// Stop once the iterate moves less than this.
    pub min_move: f64,
}

impl Default for GradientConfig {
    fn default() -> Self {
        Self { beta0: 0.5, fd_step: 0.02, step0: 0.1, decay: 0.5, max_iters: 8, min_move: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct PaContext<'a> {
    pub constellation: &'a Constellation,
    pub noise_samples: usize,
    /// Shared across every beta this strategy evaluates (and across
    /// strategies under comparison): common random numbers.
    pub rng_stream: RngStream,
    pub bracket: (f64, f64),
    pub grid_step: f64,
    pub gradient: GradientConfig,
}

impl<'a> PaContext<'a> {
    pub fn new(constellation: &'a Constellation, noise_samples: usize, rng_stream: RngStream) -> Self {
        Self {
            constellation,
            noise_samples,
            rng_stream,
            bracket: DEFAULT_BRACKET,
            grid_step: DEFAULT_GRID_STEP,
            gradient: GradientConfig::default(),
        }
    }
}

pub trait PaStrategy: Send + Sync {
    fn name(&self) -> String;
    fn allocate(&self, ss: &SelectedScenario, ctx: &PaContext) -> Result<PaResult>;
}

/// Parses `fixed:<beta>`, `grid`, `gradient` or `max-p-sinr-ansnr`.
/// (The learned allocator is constructed separately; it needs a model file.)
pub fn classical_from_spec(spec: &str) -> Result<Box<dyn PaStrategy>> {
    if let Some(beta) = spec.strip_prefix("fixed:") {
        let beta: f64 = beta
            .parse()
            .map_err(|_| Error::UnknownStrategy(spec.to_string()))?;
        return Ok(Box::new(FixedPa { beta }));
    }
    match spec {
        "grid" => Ok(Box::new(GridSearchPa)),
        "gradient" => Ok(Box::new(SrGradientPa)),
        "max-p-sinr-ansnr" => Ok(Box::new(MaxPSinrAnsnrPa)),
        other => Err(Error::UnknownStrategy(other.to_string())),
    }
}

/// Counted secrecy-rate evaluator bound to one scenario and one stream.
struct SrEvaluator<'a, 'b> {
    ss: &'a SelectedScenario,
    ctx: &'a PaContext<'b>,
    count: std::cell::Cell<usize>,
}

impl<'a, 'b> SrEvaluator<'a, 'b> {
    fn new(ss: &'a SelectedScenario, ctx: &'a PaContext<'b>) -> Self {
        Self { ss, ctx, count: std::cell::Cell::new(0) }
    }

    fn eval(&self, beta: f64) -> Result<f64> {
        self.count.set(self.count.get() + 1);
        let pa = PaSplit::new(beta, self.ss.power)?;
        Ok(secrecy_rate(self.ss, &pa, self.ctx.constellation, self.ctx.noise_samples, self.ctx.rng_stream)?.sr)
    }

    fn evaluations(&self) -> usize {
        self.count.get()
    }
}

fn check_bracket(beta: f64, bracket: (f64, f64)) -> Result<f64> {
    if beta < bracket.0 || beta > bracket.1 || !beta.is_finite() {
        return Err(Error::BetaOutOfBracket { beta, min: bracket.0, max: bracket.1 });
    }
    Ok(beta)
}

/// A fixed allocation factor, validated against the bracket.
pub struct FixedPa {
    pub beta: f64,
}

impl PaStrategy for FixedPa {
    fn name(&self) -> String {
        format!("fixed:{}", self.beta)
    }

    fn allocate(&self, ss: &SelectedScenario, ctx: &PaContext) -> Result<PaResult> {
        let beta = check_bracket(self.beta, ctx.bracket)?;
        let eval = SrEvaluator::new(ss, ctx);
        let sr = eval.eval(beta)?;
        Ok(PaResult {
            beta,
            sr_at_beta: sr,
            strategy: self.name(),
            evaluations: eval.evaluations(),
            converged: true,
        })
    }
}

/// Exhaustive search over the beta grid; ties go to the smaller beta.
pub struct GridSearchPa;

impl PaStrategy for GridSearchPa {
    fn name(&self) -> String {
        "grid".to_string()
    }

    fn allocate(&self, ss: &SelectedScenario, ctx: &PaContext) -> Result<PaResult> {
        let (lo, hi) = ctx.bracket;
        let step = ctx.grid_step;
        assert!(step > 0.0, "grid step must be positive");
        let span = hi - lo;
        let n_steps = (span / step).round() as usize;
        assert!(
            (n_steps as f64 * step - span).abs() < 1e-9,
            "grid step must divide the bracket"
        );
        let eval = SrEvaluator::new(ss, ctx);
        let mut best_beta = lo;
        let mut best_sr = f64::NEG_INFINITY;
        for i in 0..=n_steps {
            let beta = (lo + i as f64 * step).min(hi);
            let sr = eval.eval(beta)?;
            if sr > best_sr {
                best_sr = sr;
                best_beta = beta;
            }
        }
        Ok(PaResult {
            beta: best_beta,
            sr_at_beta: best_sr,
            strategy: self.name(),
            evaluations: eval.evaluations(),
            converged: true,
        })
    }
}

/// Projected gradient ascent on the Monte Carlo secrecy rate with central
/// finite differences, under fixed noise draws (the evaluator's common
/// stream makes the objective deterministic within a run). Returns the best
/// probed point; `converged` is false when the iteration cap stopped it.
pub struct SrGradientPa;

impl PaStrategy for SrGradientPa {
    fn name(&self) -> String {
        "gradient".to_string()
    }

    fn allocate(&self, ss: &SelectedScenario, ctx: &PaContext) -> Result<PaResult> {
        let (lo, hi) = ctx.bracket;
        let g = ctx.gradient;
        let eval = SrEvaluator::new(ss, ctx);
        let clamp = |b: f64| b.clamp(lo, hi);
        let mut beta = clamp(g.beta0);
        let mut best = (f64::NEG_INFINITY, beta);
        let mut converged = false;
        for t in 0..g.max_iters {
            let h = g.fd_step.min(beta - lo).min(hi - beta).max(1e-4);
            let f_plus = eval.eval(clamp(beta + h))?;
            let f_minus = eval.eval(clamp(beta - h))?;
            if f_plus > best.0 {
                best = (f_plus, clamp(beta + h));
            }
            if f_minus > best.0 {
                best = (f_minus, clamp(beta - h));
            }
            let grad = (f_plus - f_minus) / (2.0 * h);
            let step = g.step0 / (1.0 + g.decay * t as f64);
            let next = clamp(beta + step * grad);
            let moved = (next - beta).abs();
            beta = next;
            if moved < g.min_move {
                converged = true;
                break;
            }
        }
        Ok(PaResult {
            beta: best.1,
            sr_at_beta: best.0,
            strategy: self.name(),
            evaluations: eval.evaluations(),
            converged,
        })
    }
}

/// Product criterion: maximize `SINR_b(beta) * ANSNR_e(beta)` where
///
/// ```text
/// SINR_b(beta)  = beta P avg_j ||h_bj||^2 / (N_b sigma2)
/// ANSNR_e(beta) = ((1-beta) P / (N_t - N_b)) ||H_e T||_F^2
///                 / (beta P avg_j ||h_ej||^2 + N_e sigma2)
/// ```
///
/// The objective is unimodal in beta (a downward quadratic over an affine
/// denominator), so a golden-section search to 1e-6 finds the maximizer
/// without any secrecy-rate evaluations.
pub struct MaxPSinrAnsnrPa;

/// The analytic objective, exposed for verification.
pub fn p_sinr_ansnr_objective(ss: &SelectedScenario, beta: f64) -> f64 {
    let n_t = ss.n_t() as f64;
    let n_b = ss.n_b() as f64;
    let n_e = ss.n_e() as f64;
    let p = ss.power;
    let avg = |m: &crate::linalg::ComplexMatrix| -> f64 {
        let mut sum = 0.0;
        for j in 0..m.cols() {
            for i in 0..m.rows() {
                sum += m[(i, j)].norm_sqr();
            }
        }
        sum / m.cols() as f64
    };
    let gb = avg(&ss.hb_s);
    let ge = avg(&ss.he_s);
    let an_gain = ss.he_s.mul(&ss.an_projector).frobenius_norm().powi(2);
    let sinr_b = beta * p * gb / (n_b * ss.sigma2);
    let ansnr_e = ((1.0 - beta) * p / (n_t - n_b)) * an_gain / (beta * p * ge + n_e * ss.sigma2);
    sinr_b * ansnr_e
}

/// Golden-section maximization on `[a, b]` to interval width `tol`.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, a0: f64, b0: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a0, b0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

impl PaStrategy for MaxPSinrAnsnrPa {
    fn name(&self) -> String {
        "max-p-sinr-ansnr".to_string()
    }

    fn allocate(&self, ss: &SelectedScenario, ctx: &PaContext) -> Result<PaResult> {
        if ss.n_t() <= ss.n_b() {
            return Err(Error::NullSpaceEmpty { selected: ss.n_t(), n_b: ss.n_b() });
        }
        let beta = golden_section_max(
            |b| p_sinr_ansnr_objective(ss, b),
            ctx.bracket.0,
            ctx.bracket.1,
            1e-6,
        );
        let eval = SrEvaluator::new(ss, ctx);
        let sr = eval.eval(beta)?;
        Ok(PaResult {
            beta,
            sr_at_beta: sr,
            strategy: self.name(),
            evaluations: eval.evaluations(),
            converged: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_scenario, select, SelectedScenario};
    use crate::constellation::ConstellationKind;

    fn qpsk() -> Constellation {
        Constellation::build(ConstellationKind::Psk, 4).unwrap()
    }

    fn fig3_scenario(seed: u64, snr_db: f64) -> SelectedScenario {
        let mut rng = RngStream::root(seed).rng();
        let s = gen_scenario(&mut rng, 4, 2, 2, snr_db, 4.0);
        select(&s, &[0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn fixed_is_identity_with_bracket_check() {
        let c = qpsk();
        let ss = fig3_scenario(80, 10.0);
        let ctx = PaContext::new(&c, 50, RngStream::root(81));
        for beta in [0.1, 0.5] {
            let r = FixedPa { beta }.allocate(&ss, &ctx).unwrap();
            assert_eq!(r.beta, beta);
            assert_eq!(r.evaluations, 1);
        }
        assert!(matches!(
            FixedPa { beta: 1.2 }.allocate(&ss, &ctx),
            Err(Error::BetaOutOfBracket { .. })
        ));
    }

    /// No desired channel at all: Bob's rate is exactly zero, so the
    /// clamped secrecy rate is exactly zero at every beta.
    fn zero_sr_scenario(seed: u64) -> SelectedScenario {
        let mut rng = RngStream::root(seed).rng();
        let mut s = gen_scenario(&mut rng, 4, 2, 2, 10.0, 4.0);
        s.h_b = crate::linalg::ComplexMatrix::zeros(2, 4);
        select(&s, &[0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn grid_ties_resolve_to_smaller_beta() {
        let ss = zero_sr_scenario(82);
        let c = qpsk();
        let ctx = PaContext::new(&c, 50, RngStream::root(83));
        let r = GridSearchPa.allocate(&ss, &ctx).unwrap();
        assert_eq!(r.sr_at_beta, 0.0);
        assert_eq!(r.beta, 0.05);
        assert_eq!(r.evaluations, 19);
    }

    #[test]
    fn grid_refinement_never_decreases() {
        let c = qpsk();
        let ss = fig3_scenario(84, 12.0);
        let mut ctx = PaContext::new(&c, 100, RngStream::root(85));
        ctx.grid_step = 0.1;
        let coarse = GridSearchPa.allocate(&ss, &ctx).unwrap();
        ctx.grid_step = 0.05;
        let fine = GridSearchPa.allocate(&ss, &ctx).unwrap();
        // The fine grid contains every coarse point, scored with the same
        // stream, so its maximum cannot be smaller.
        assert!(fine.sr_at_beta >= coarse.sr_at_beta);
    }

    #[test]
    fn grid_dominates_fixed_under_common_randomness() {
        let c = qpsk();
        let ss = fig3_scenario(86, 10.0);
        let ctx = PaContext::new(&c, 100, RngStream::root(87));
        let grid = GridSearchPa.allocate(&ss, &ctx).unwrap();
        for beta in [0.1, 0.3, 0.5, 0.9] {
            let fixed = FixedPa { beta }.allocate(&ss, &ctx).unwrap();
            assert!(grid.sr_at_beta >= fixed.sr_at_beta, "beta {beta}");
        }
    }

    #[test]
    fn high_snr_grid_optimum_favors_artificial_noise() {
        let c = qpsk();
        let ss = fig3_scenario(88, 18.0);
        let ctx = PaContext::new(&c, 300, RngStream::root(89));
        let r = GridSearchPa.allocate(&ss, &ctx).unwrap();
        assert!(r.beta < 0.5, "optimum beta {}", r.beta);
    }

    #[test]
    fn gradient_stays_near_grid_optimum_when_started_there() {
        let c = qpsk();
        let ss = fig3_scenario(90, 12.0);
        let mut ctx = PaContext::new(&c, 200, RngStream::root(91));
        let grid = GridSearchPa.allocate(&ss, &ctx).unwrap();
        ctx.gradient.beta0 = grid.beta;
        let r = SrGradientPa.allocate(&ss, &ctx).unwrap();
        assert!((r.beta - grid.beta).abs() <= ctx.grid_step + 1e-12);
        assert!(r.evaluations <= grid.evaluations);
    }

    #[test]
    fn gradient_handles_zero_sr_scenario() {
        let ss = zero_sr_scenario(92);
        let c = qpsk();
        let ctx = PaContext::new(&c, 50, RngStream::root(93));
        let r = SrGradientPa.allocate(&ss, &ctx).unwrap();
        assert!((DEFAULT_BRACKET.0..=DEFAULT_BRACKET.1).contains(&r.beta));
        assert_eq!(r.sr_at_beta, 0.0);
    }

    #[test]
    fn golden_section_finds_quadratic_peak() {
        let beta = golden_section_max(|b| -(b - 0.37).powi(2), 0.05, 0.95, 1e-6);
        assert!((beta - 0.37).abs() < 1e-5);
    }

    #[test]
    fn product_criterion_limit_is_half() {
        // sigma2 -> infinity turns the objective into beta(1-beta) times a
        // constant, peaking at 1/2.
        let mut ss = fig3_scenario(94, 10.0);
        ss.sigma2 = 1e12;
        let beta = golden_section_max(|b| p_sinr_ansnr_objective(&ss, b), 0.05, 0.95, 1e-6);
        assert!((beta - 0.5).abs() < 1e-5, "beta {beta}");
    }

    #[test]
    fn product_objective_matches_independent_arithmetic() {
        let ss = fig3_scenario(95, 8.0);
        let beta = 0.3;
        let value = p_sinr_ansnr_objective(&ss, beta);

        // Term-by-term scalar recomputation.
        let p = 4.0;
        let mut gb = 0.0;
        let mut ge = 0.0;
        for j in 0..4 {
            for i in 0..2 {
                gb += ss.hb_s[(i, j)].norm_sqr();
                ge += ss.he_s[(i, j)].norm_sqr();
            }
        }
        gb /= 4.0;
        ge /= 4.0;
        let het = ss.he_s.mul(&ss.an_projector);
        let mut an = 0.0;
        for i in 0..het.rows() {
            for j in 0..het.cols() {
                an += het[(i, j)].norm_sqr();
            }
        }
        let sinr = beta * p * gb / (2.0 * ss.sigma2);
        let ansnr = ((1.0 - beta) * p / 2.0) * an / (beta * p * ge + 2.0 * ss.sigma2);
        let expected = sinr * ansnr;
        assert!((value - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn evaluation_counters_are_ordered() {
        let c = qpsk();
        let ss = fig3_scenario(96, 10.0);
        let ctx = PaContext::new(&c, 80, RngStream::root(97));
        let grid = GridSearchPa.allocate(&ss, &ctx).unwrap();
        let gradient = SrGradientPa.allocate(&ss, &ctx).unwrap();
        let product = MaxPSinrAnsnrPa.allocate(&ss, &ctx).unwrap();
        assert!(
            grid.evaluations >= gradient.evaluations
                && gradient.evaluations >= product.evaluations,
            "grid {} gradient {} product {}",
            grid.evaluations,
            gradient.evaluations,
            product.evaluations
        );
    }

    #[test]
    fn spec_parser_round_trips() {
        assert_eq!(classical_from_spec("fixed:0.25").unwrap().name(), "fixed:0.25");
        assert_eq!(classical_from_spec("grid").unwrap().name(), "grid");
        assert_eq!(classical_from_spec("gradient").unwrap().name(), "gradient");
        assert_eq!(
            classical_from_spec("max-p-sinr-ansnr").unwrap().name(),
            "max-p-sinr-ansnr"
        );
        assert!(classical_from_spec("fixed:abc").is_err());
        assert!(classical_from_spec("dnn").is_err());
    }
}
