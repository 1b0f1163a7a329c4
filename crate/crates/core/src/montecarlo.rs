//! Event-driven simulation of the two-sided risk process: Gerber–Shiu and
//! ruin estimates with confidence intervals, and common-random-number
//! ladders over the heavy-tail weight.
//!
//! Paths are simulated in fixed chunks, each with its own ChaCha stream
//! derived from the seed, and merged in chunk order, so results do not
//! depend on the number of worker threads.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{ClaimLaw, PhaseType};
use crate::error::{Error, Result};
use crate::fluid_map::RiskModel;
use crate::gerber_shiu::Penalty;
use crate::Complex;

pub const CHUNK: u64 = 4096;
/// `z` for a two-sided 95% interval.
const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Stop {
    /// Stop at time `T_max`.
    Horizon(f64),
    /// Stop when the surplus reaches `B`.
    Barrier(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Ruin,
    Horizon,
    Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathOutcome {
    pub ruined: bool,
    pub tau: Option<f64>,
    /// `|X_τ|`, zero when not ruined.
    pub deficit: f64,
    /// `X_{τ-}`, zero when not ruined.
    pub surplus_prior: f64,
    pub stop_reason: StopReason,
    /// Heavy claims seen before stopping.
    pub heavy_claims: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Claim { dt: f64, size: f64, heavy: bool },
    Gain { dt: f64, size: f64 },
}

/// Source of inter-event times and jumps.
pub trait EventStream {
    fn next_event(&mut self) -> Event;
}

/// Common random numbers for one event, shared by every `ε` of a ladder.
#[derive(Debug, Clone, Copy)]
struct Draw {
    dt: f64,
    kind: f64,
    coin: f64,
    light: f64,
    heavy: f64,
    gain: f64,
}

impl Draw {
    fn new<H: ClaimLaw, R: Rng + ?Sized>(model: &RiskModel<H>, rng: &mut R) -> Self {
        let rate = model.lambda_minus + model.lambda_plus;
        let e: f64 = Exp1.sample(rng);
        Draw {
            dt: e / rate,
            kind: rng.random(),
            coin: rng.random(),
            light: model.claims.ph.sample(rng),
            heavy: model.claims.heavy.sample(rng),
            gain: model.gains.as_ref().map_or(0.0, |g| g.sample(rng)),
        }
    }

    fn event<H: ClaimLaw>(&self, model: &RiskModel<H>, eps: f64) -> Event {
        let p_claim = model.lambda_minus / (model.lambda_minus + model.lambda_plus);
        if self.kind < p_claim {
            let heavy = self.coin < eps;
            Event::Claim {
                dt: self.dt,
                size: if heavy { self.heavy } else { self.light },
                heavy,
            }
        } else {
            Event::Gain {
                dt: self.dt,
                size: self.gain,
            }
        }
    }
}

/// Events drawn from the model with mixing weight `eps`.
pub struct ModelStream<'a, H, R> {
    pub model: &'a RiskModel<H>,
    pub eps: f64,
    pub rng: R,
}

impl<H: ClaimLaw, R: Rng> EventStream for ModelStream<'_, H, R> {
    fn next_event(&mut self) -> Event {
        Draw::new(self.model, &mut self.rng).event(self.model, self.eps)
    }
}

/// Running state of one path.
#[derive(Debug, Clone, Copy)]
struct PathState {
    t: f64,
    x: f64,
    heavy: u32,
    done: Option<PathOutcome>,
}

impl PathState {
    fn new(u: f64) -> Self {
        Self {
            t: 0.0,
            x: u,
            heavy: 0,
            done: None,
        }
    }

    fn finish(&mut self, reason: StopReason, ruin: Option<(f64, f64)>) {
        let (deficit, prior) = ruin.unwrap_or((0.0, 0.0));
        self.done = Some(PathOutcome {
            ruined: ruin.is_some(),
            tau: ruin.map(|_| self.t),
            deficit,
            surplus_prior: prior,
            stop_reason: reason,
            heavy_claims: self.heavy,
        });
    }

    fn step(&mut self, c: f64, ev: Event, stop: Stop) {
        if self.done.is_some() {
            return;
        }
        let dt = match ev {
            Event::Claim { dt, .. } | Event::Gain { dt, .. } => dt,
        };
        match stop {
            Stop::Horizon(t_max) if self.t + dt > t_max => {
                self.t = t_max;
                return self.finish(StopReason::Horizon, None);
            }
            Stop::Barrier(b) if self.x + c * dt >= b => {
                self.t += (b - self.x).max(0.0) / c;
                self.x = b;
                return self.finish(StopReason::Barrier, None);
            }
            _ => {}
        }
        self.t += dt;
        self.x += c * dt;
        match ev {
            Event::Claim { size, heavy, .. } => {
                self.heavy += u32::from(heavy);
                let prior = self.x;
                self.x -= size;
                if self.x < 0.0 {
                    self.finish(StopReason::Ruin, Some((-self.x, prior)));
                }
            }
            Event::Gain { size, .. } => {
                self.x += size;
                if let Stop::Barrier(b) = stop {
                    if self.x >= b {
                        self.finish(StopReason::Barrier, None);
                    }
                }
            }
        }
    }
}

/// Run one path from `u` with premium rate `c` until ruin or `stop`.
pub fn run_path<S: EventStream>(c: f64, u: f64, stream: &mut S, stop: Stop) -> PathOutcome {
    let mut p = PathState::new(u);
    if let Stop::Barrier(b) = stop {
        if u >= b {
            p.finish(StopReason::Barrier, None);
        }
    }
    while p.done.is_none() {
        p.step(c, stream.next_event(), stop);
    }
    p.done.unwrap()
}

/// Exact event-driven path of the model with mixing weight `eps`.
pub fn simulate_path<H: ClaimLaw, R: Rng>(model: &RiskModel<H>, eps: f64, u: f64, rng: R, stop: Stop) -> PathOutcome {
    let mut s = ModelStream { model, eps, rng };
    run_path(model.c, u, &mut s, stop)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub std_err: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Bound on the bias from stopping paths early; not part of the CI.
    pub truncation_bias_bound: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn estimate(&self, seed: u64, bias: f64) -> McEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let std_err = (var / n).sqrt();
        McEstimate {
            mean,
            half_width_95: Z95 * std_err,
            std_err,
            n_paths: self.n,
            seed,
            truncation_bias_bound: bias,
        }
    }
}

/// Quantity recorded per path.
#[derive(Debug, Clone)]
pub enum Functional {
    /// `e^{-qτ} ω(|X_τ|, X_{τ-}) 1{τ < ∞}`.
    GerberShiu(Penalty),
    /// `1{τ < ∞}`.
    Ruin,
}

impl Functional {
    fn value(&self, q: f64, o: &PathOutcome) -> f64 {
        match (self, o.tau) {
            (_, None) => 0.0,
            (Functional::Ruin, Some(_)) => 1.0,
            (Functional::GerberShiu(p), Some(tau)) => (-q * tau).exp() * p.eval(o.deficit, o.surplus_prior),
        }
    }

    fn bound(&self) -> f64 {
        match self {
            Functional::GerberShiu(p) => p.bound(),
            Functional::Ruin => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub stop: Stop,
    /// Fail with `InsufficientPaths` when the half-width exceeds this.
    pub tolerance: Option<f64>,
    /// At the barrier, finish ruin paths with an exact draw of the
    /// Pollaczek–Khinchine maximum (requires `λ_+ = 0`).
    pub continuation: bool,
}

/// `10 u + 50` mean claims (mean of the `ε`-mixture).
pub fn default_barrier<H: ClaimLaw>(model: &RiskModel<H>, u: f64) -> f64 {
    10.0 * u + 50.0 * model.claims.mean()
}

/// Horizon at which `a e^{-qT} <= tol`.
pub fn default_horizon(q: f64, a: f64, tol: f64) -> f64 {
    if q > 0.0 && a > 0.0 {
        (a / tol).ln().max(1.0) / q
    } else {
        f64::INFINITY
    }
}

/// Light-tail adjustment coefficient `R > 0` with `E e^{-R X_1} = 1` for
/// the base model.
pub fn lundberg_exponent<H: ClaimLaw>(model: &RiskModel<H>) -> Option<f64> {
    let ph = &model.claims.ph;
    let decay = ph
        .subintensity()
        .complex_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, e| m.min(-e.re));
    let kappa = |r: f64| -> Option<f64> {
        let claim = ph.lst(Complex::new(-r, 0.0)).ok()?.re;
        let gain = match &model.gains {
            Some(g) => g.lst(Complex::new(r, 0.0)).ok()?.re,
            None => 1.0,
        };
        Some(-model.c * r + model.lambda_plus * (gain - 1.0) + model.lambda_minus * (claim - 1.0))
    };
    let (mut lo, mut hi) = (1e-12, decay * (1.0 - 1e-9));
    if kappa(hi)? <= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kappa(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(lo)
}

fn barrier_bias<H: ClaimLaw>(model: &RiskModel<H>, eps: f64, b: f64, a: f64) -> f64 {
    let light = lundberg_exponent(model).map_or(1.0, |r| (-r * b).exp());
    let margin = model.c + model.lambda_plus * model.mean_gain()
        - model.lambda_minus * ((1.0 - eps) * model.mu_p() + eps * model.mu_h());
    let heavy = if margin > 0.0 {
        2.0 * eps * model.lambda_minus * model.mu_h() * model.claims.heavy.equilibrium_tail(b) / margin
    } else {
        1.0
    };
    (a * (light + heavy)).min(a)
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
        let n = std::env::var("GSRISK_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .map_or(avail, |n| n.min(avail));
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("worker pool")
    })
}

/// Number of worker threads used for simulation.
pub fn worker_threads() -> usize {
    pool().current_num_threads()
}

/// Exact draw of `1{M_ε > b}` for the Cramér–Lundberg maximum with
/// uniforms shared across `ε` (same seed, same draw order).
struct Continuation<'a, H> {
    model: &'a RiskModel<H>,
    light_eq: PhaseType,
}

impl<H: ClaimLaw> Continuation<'_, H> {
    fn ruined_from(&self, b: f64, eps: f64, seed: u64) -> bool {
        let m = self.model;
        let mu_eps = (1.0 - eps) * m.mu_p() + eps * m.mu_h();
        let rho = m.lambda_minus * mu_eps / m.c;
        let p_heavy = eps * m.mu_h() / mu_eps;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut total = 0.0;
        loop {
            let go: f64 = rng.random();
            let coin: f64 = rng.random();
            let light = self.light_eq.sample(&mut rng);
            let heavy = m.claims.heavy.sample_equilibrium(&mut rng);
            if go >= rho {
                return false;
            }
            total += if coin < p_heavy { heavy } else { light };
            if total > b {
                return true;
            }
        }
    }
}

/// Per-`ε` result of a common-random-number ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderPoint {
    pub eps: f64,
    /// Plain estimate of the functional at `ε`.
    pub raw: McEstimate,
    /// Paired difference against `ε = 0` on the same event streams.
    pub diff: McEstimate,
    /// Paths with 0, 1 and >= 2 heavy claims before stopping.
    pub strata: [u64; 3],
    /// Contribution of each stratum to the summed difference.
    pub strata_diff: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderEstimate {
    pub u: f64,
    pub base: McEstimate,
    pub points: Vec<LadderPoint>,
}

#[derive(Debug, Clone, Default)]
struct LadderAcc {
    base: Moments,
    raw: Vec<Moments>,
    diff: Vec<Moments>,
    strata: Vec<[u64; 3]>,
    strata_diff: Vec<[f64; 3]>,
}

impl LadderAcc {
    fn new(k: usize) -> Self {
        Self {
            base: Moments::default(),
            raw: vec![Moments::default(); k],
            diff: vec![Moments::default(); k],
            strata: vec![[0; 3]; k],
            strata_diff: vec![[0.0; 3]; k],
        }
    }

    fn merge(&mut self, o: &LadderAcc) {
        self.base.merge(&o.base);
        for i in 0..self.raw.len() {
            self.raw[i].merge(&o.raw[i]);
            self.diff[i].merge(&o.diff[i]);
            for s in 0..3 {
                self.strata[i][s] += o.strata[i][s];
                self.strata_diff[i][s] += o.strata_diff[i][s];
            }
        }
    }
}

fn validate_run<H: ClaimLaw>(model: &RiskModel<H>, eps: &[f64], u: f64, cfg: &McConfig) -> Result<()> {
    if cfg.n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be positive".into()));
    }
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::InvalidParameter(format!("surplus u = {u} must be >= 0")));
    }
    if let Some(e) = eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidParameter(format!("eps = {e} outside [0, 1]")));
    }
    match cfg.stop {
        Stop::Horizon(t) if !(t > 0.0 && t.is_finite()) => Err(Error::InvalidParameter(format!(
            "horizon {t} must be positive and finite"
        ))),
        Stop::Horizon(_) if model.q == 0.0 => Err(Error::PreconditionViolated(
            "q = 0 needs barrier stopping; a horizon leaves an unbounded bias".into(),
        )),
        Stop::Barrier(b) if !(b > u && b.is_finite()) => Err(Error::InvalidParameter(format!(
            "barrier {b} must be finite and above u = {u}"
        ))),
        _ if cfg.continuation && (model.lambda_plus > 0.0 || !matches!(cfg.stop, Stop::Barrier(_))) => Err(
            Error::PreconditionViolated("barrier continuation needs λ_+ = 0 and barrier stopping".into()),
        ),
        _ => Ok(()),
    }
}

/// Simulate `cfg.n_paths` event streams and evaluate the functional for
/// every weight in `eps` and for `ε = 0` on each of them.
pub fn estimate_ladder<H: ClaimLaw>(
    model: &RiskModel<H>,
    eps: &[f64],
    functional: &Functional,
    u: f64,
    cfg: &McConfig,
) -> Result<LadderEstimate> {
    validate_run(model, eps, u, cfg)?;
    if let Functional::GerberShiu(p) = functional {
        p.validate()?;
    }
    let cont = cfg.continuation.then(|| Continuation {
        model,
        light_eq: model.claims.ph.equilibrium(),
    });
    let q = if matches!(functional, Functional::Ruin) {
        0.0
    } else {
        model.q
    };
    let k = eps.len();
    let chunks = cfg.n_paths.div_ceil(CHUNK);
    let run_chunk = |ci: u64| -> LadderAcc {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(ci);
        let n = CHUNK.min(cfg.n_paths - ci * CHUNK);
        let mut acc = LadderAcc::new(k);
        let mut paths = vec![PathState::new(u); k + 1];
        let weights: Vec<f64> = std::iter::once(0.0).chain(eps.iter().copied()).collect();
        for _ in 0..n {
            let cont_seed: u64 = rng.random();
            for p in paths.iter_mut() {
                *p = PathState::new(u);
            }
            while paths.iter().any(|p| p.done.is_none()) {
                let d = Draw::new(model, &mut rng);
                for (p, &e) in paths.iter_mut().zip(&weights) {
                    p.step(model.c, d.event(model, e), cfg.stop);
                }
            }
            let values: Vec<f64> = paths
                .iter()
                .zip(&weights)
                .map(|(p, &e)| {
                    let o = p.done.unwrap();
                    match (&cont, cfg.stop, o.stop_reason) {
                        (Some(c), Stop::Barrier(b), StopReason::Barrier) => {
                            f64::from(u8::from(c.ruined_from(b, e, cont_seed)))
                        }
                        _ => functional.value(q, &o),
                    }
                })
                .collect();
            acc.base.push(values[0]);
            for i in 0..k {
                let d = values[i + 1] - values[0];
                acc.raw[i].push(values[i + 1]);
                acc.diff[i].push(d);
                let s = (paths[i + 1].done.unwrap().heavy_claims as usize).min(2);
                acc.strata[i][s] += 1;
                acc.strata_diff[i][s] += d;
            }
        }
        acc
    };
    let parts: Vec<LadderAcc> = pool().install(|| (0..chunks).into_par_iter().map(run_chunk).collect());
    let mut total = LadderAcc::new(k);
    for p in &parts {
        total.merge(p);
    }
    let a = functional.bound();
    let bias = |e: f64| match (cfg.stop, cfg.continuation) {
        (Stop::Horizon(t), _) => a * (-model.q * t).exp(),
        (Stop::Barrier(_), true) => 0.0,
        (Stop::Barrier(b), false) => barrier_bias(model, e, b, a),
    };
    let base = total.base.estimate(cfg.seed, bias(0.0));
    let points: Vec<LadderPoint> = eps
        .iter()
        .enumerate()
        .map(|(i, &e)| LadderPoint {
            eps: e,
            raw: total.raw[i].estimate(cfg.seed, bias(e)),
            diff: total.diff[i].estimate(cfg.seed, bias(e) + bias(0.0)),
            strata: total.strata[i],
            strata_diff: total.strata_diff[i],
        })
        .collect();
    if let Some(tol) = cfg.tolerance {
        let worst = points
            .iter()
            .map(|p| p.raw.half_width_95)
            .fold(base.half_width_95, f64::max);
        if worst > tol {
            return Err(Error::InsufficientPaths {
                half_width: worst,
                tolerance: tol,
            });
        }
    }
    Ok(LadderEstimate { u, base, points })
}

fn single<H: ClaimLaw>(
    model: &RiskModel<H>,
    eps: f64,
    functional: &Functional,
    u: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let ladder = estimate_ladder(
        model,
        &[eps],
        functional,
        u,
        &McConfig {
            tolerance: None,
            ..*cfg
        },
    )?;
    let est = ladder.points[0].raw;
    if let Some(tol) = cfg.tolerance {
        if est.half_width_95 > tol {
            return Err(Error::InsufficientPaths {
                half_width: est.half_width_95,
                tolerance: tol,
            });
        }
    }
    Ok(est)
}

/// `E[e^{-qτ} ω(|X_τ|, X_{τ-}); τ < ∞]` for mixing weight `eps`.
pub fn estimate_gs<H: ClaimLaw>(
    model: &RiskModel<H>,
    eps: f64,
    penalty: &Penalty,
    u: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    single(model, eps, &Functional::GerberShiu(penalty.clone()), u, cfg)
}

/// `P(τ < ∞)` for mixing weight `eps` with barrier stopping.
pub fn estimate_ruin<H: ClaimLaw>(model: &RiskModel<H>, eps: f64, u: f64, cfg: &McConfig) -> Result<McEstimate> {
    if !matches!(cfg.stop, Stop::Barrier(_)) {
        return Err(Error::PreconditionViolated(
            "ruin probabilities need barrier stopping".into(),
        ));
    }
    single(model, eps, &Functional::Ruin, u, cfg)
}
