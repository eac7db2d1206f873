//! Derivative-free minimization over a box: Powell's direction-set method
//! for local refinement, a compass search in ordered-double space to land
//! on exact zeros, and seeded basin hopping for global search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::clamp_total;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub hops: usize,
    /// Perturbation half-width as a fraction of each coordinate's box width.
    pub step_scale: f64,
    pub temperature: f64,
    pub powell_tol: f64,
    pub powell_max_iters: usize,
    /// Independent seeded starts in addition to the first one.
    pub restarts: usize,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            hops: 200,
            step_scale: 0.25,
            temperature: 1.0,
            powell_tol: 1e-10,
            powell_max_iters: 100,
            restarts: 4,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid search box: {0}")]
    InvalidBox(String),
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m| Err(OptimizerError::InvalidConfig(m));
        if self.hops == 0 {
            return bad("hops must be positive");
        }
        if !(self.step_scale > 0.0 && self.step_scale <= 1.0) {
            return bad("step_scale must lie in (0, 1]");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if !(self.powell_tol > 0.0 && self.powell_tol.is_finite()) {
            return bad("powell_tol must be positive");
        }
        if self.powell_max_iters == 0 {
            return bad("powell_max_iters must be positive");
        }
        Ok(())
    }
}

/// Axis-aligned search domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SearchBox {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self, OptimizerError> {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(OptimizerError::InvalidBox(format!(
                    "dimension {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// Membership under IEEE total order: `-0.0` is outside `[0.0, 1.0]`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && (0..self.dim())
                .all(|i| clamp_total(x[i], self.lo[i], self.hi[i]).to_bits() == x[i].to_bits())
    }

    fn clamp(&self, i: usize, v: f64) -> f64 {
        clamp_total(v, self.lo[i], self.hi[i])
    }

    /// Folds `v` back into `[lo, hi]` as if the faces were mirrors.
    pub fn reflect(&self, i: usize, v: f64) -> f64 {
        let (lo, hi) = (self.lo[i], self.hi[i]);
        let w = hi - lo;
        if w == 0.0 || !v.is_finite() {
            return self.clamp(i, v);
        }
        let mut t = (v - lo).rem_euclid(2.0 * w);
        if t > w {
            t = 2.0 * w - t;
        }
        self.clamp(i, lo + t)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                if self.width(i) == 0.0 {
                    self.lo[i]
                } else {
                    self.clamp(i, rng.gen_range(self.lo[i]..=self.hi[i]))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FoundZero,
    HopBudget,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub evaluations: u64,
    pub reason: StopReason,
}

/// Counts evaluations and makes NaN compare as the worst value.
struct Counted<F> {
    f: F,
    evals: u64,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::MAX
        } else {
            v
        }
    }
}

/// Mixes a base seed with an index (splitmix64 finalizer over both).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Position of `x` in IEEE total order; unlike the distance index, the two
/// zeros are distinct neighbours.
fn total_index(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

fn from_total_index(i: i64) -> f64 {
    f64::from_bits(if i < 0 { i ^ i64::MAX } else { i } as u64)
}

/// Feasible step range `[tmin, tmax]` along `dir` from `x`.
fn step_range(bx: &SearchBox, x: &[f64], dir: &[f64]) -> (f64, f64) {
    let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..x.len() {
        if dir[i] == 0.0 {
            continue;
        }
        let a = (bx.lo[i] - x[i]) / dir[i];
        let b = (bx.hi[i] - x[i]) / dir[i];
        tmin = tmin.max(a.min(b));
        tmax = tmax.min(a.max(b));
    }
    if tmin > tmax || !tmin.is_finite() || !tmax.is_finite() {
        (0.0, 0.0)
    } else {
        (tmin.min(0.0), tmax.max(0.0))
    }
}

fn point_along(bx: &SearchBox, x: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| bx.clamp(i, x[i] + t * dir[i]))
        .collect()
}

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's bounded scalar minimization of `g` on `[a, b]`, seeded with a
/// known point `t0` whose value is `g0`. Returns the best `(t, g(t))` seen.
fn brent_bounded(
    g: &mut dyn FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    t0: f64,
    g0: f64,
    max_iter: usize,
) -> (f64, f64) {
    let (mut x, mut w, mut v) = (t0, t0, t0);
    let (mut fx, mut fw, mut fv) = (g0, g0, g0);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol = 1e-13 * x.abs() + 1e-300;
        let tol2 = 2.0 * tol;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) || fx == 0.0 {
            break;
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol {
            x + d
        } else {
            x + tol.copysign(d)
        };
        let fu = g(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}

/// Line minimization along `dir`. Expands outward from the current point
/// in both directions (plateaus keep expanding, a strict rise stops), then
/// runs Brent inside the bracket around the best point. Never returns a
/// worse point.
fn line_minimize<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    bx: &SearchBox,
    x: &[f64],
    fx: f64,
    dir: &[f64],
) -> (Vec<f64>, f64) {
    const FIRST_STEP: f64 = 1e-2;
    const GROW: f64 = 1.618_033_988_749_895;
    let (tmin, tmax) = step_range(bx, x, dir);
    if tmax - tmin <= 0.0 {
        return (x.to_vec(), fx);
    }
    let mut g = |t: f64| f.eval(&point_along(bx, x, dir, t));
    let mut seen = vec![(0.0, fx)];
    for (sign, limit) in [(1.0, tmax), (-1.0, tmin)] {
        let mut step = FIRST_STEP * (tmax - tmin);
        let mut t = 0.0;
        let mut side_best = fx;
        while t != limit {
            t = if sign > 0.0 {
                (t + step).min(limit)
            } else {
                (t - step).max(limit)
            };
            let v = g(t);
            seen.push((t, v));
            if v > side_best {
                break;
            }
            side_best = v;
            step *= GROW;
        }
    }
    seen.sort_by(|p, q| p.0.total_cmp(&q.0));
    let k = (0..seen.len())
        .min_by(|&i, &j| seen[i].1.total_cmp(&seen[j].1))
        .expect("at least the start point");
    let (t0, v0) = seen[k];
    let a = seen[k.saturating_sub(1)].0;
    let b = seen[(k + 1).min(seen.len() - 1)].0;
    let (t, v) = brent_bounded(&mut g, a, b, t0, v0, 100);
    if v < fx {
        (point_along(bx, x, dir, t), v)
    } else {
        (x.to_vec(), fx)
    }
}

fn powell_counted<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x0: &[f64],
    fx0: f64,
    bx: &SearchBox,
    cfg: &OptimizerConfig,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    let mut x = x0.to_vec();
    let mut fx = fx0;
    for _ in 0..cfg.powell_max_iters {
        if fx == 0.0 {
            break;
        }
        let (x_start, f_start) = (x.clone(), fx);
        let (mut biggest, mut biggest_i) = (0.0, 0);
        for (i, d) in dirs.iter().enumerate() {
            let before = fx;
            (x, fx) = line_minimize(f, bx, &x, fx, d);
            if before - fx > biggest {
                (biggest, biggest_i) = (before - fx, i);
            }
            if fx == 0.0 {
                return (x, fx);
            }
        }
        if f_start - fx < cfg.powell_tol {
            break;
        }
        let new_dir: Vec<f64> = (0..n).map(|i| x[i] - x_start[i]).collect();
        if n > 1 && new_dir.iter().any(|&c| c != 0.0) {
            let extrap = point_along(bx, &x, &new_dir, 1.0);
            let fe = f.eval(&extrap);
            if fe < f_start {
                let t = 2.0 * (f_start - 2.0 * fx + fe) * (f_start - fx - biggest).powi(2)
                    - biggest * (f_start - fe).powi(2);
                if t < 0.0 {
                    (x, fx) = line_minimize(f, bx, &x, fx, &new_dir);
                    dirs.remove(biggest_i);
                    dirs.push(new_dir);
                }
            }
        }
    }
    (x, fx)
}

/// Greedy compass search over ordered-double indices: steps of `2^j` ulps
/// per coordinate, coarse to fine. Reaches values Brent's tolerance cannot.
fn ulp_polish<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    bx: &SearchBox,
    mut x: Vec<f64>,
    mut fx: f64,
) -> (Vec<f64>, f64) {
    const REPEATS: usize = 4;
    for j in (0..63).rev() {
        if fx == 0.0 {
            break;
        }
        let step = 1i64 << j;
        for _ in 0..REPEATS {
            let mut improved = false;
            for i in 0..x.len() {
                if bx.width(i) == 0.0 {
                    continue;
                }
                let idx = total_index(x[i]);
                for s in [step, -step] {
                    let cand = bx.clamp(i, from_total_index(idx.saturating_add(s)));
                    if cand.to_bits() == x[i].to_bits() {
                        continue;
                    }
                    let mut y = x.clone();
                    y[i] = cand;
                    let fy = f.eval(&y);
                    if fy < fx {
                        (x, fx) = (y, fy);
                        improved = true;
                        break;
                    }
                }
                if fx == 0.0 {
                    return (x, fx);
                }
            }
            if !improved {
                break;
            }
        }
    }
    (x, fx)
}

fn local_counted<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x0: &[f64],
    bx: &SearchBox,
    cfg: &OptimizerConfig,
) -> (Vec<f64>, f64) {
    let fx0 = f.eval(x0);
    let (x, fx) = powell_counted(f, x0, fx0, bx, cfg);
    ulp_polish(f, bx, x, fx)
}

fn finish<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    best_x: Vec<f64>,
    reason: StopReason,
) -> MinimizationResult {
    let best_value = f.eval(&best_x);
    MinimizationResult {
        best_x,
        best_value,
        evaluations: f.evals,
        reason,
    }
}

/// Powell's method from `x0` followed by the ulp-space polish.
///
/// The result is never worse than `objective(x0)`.
pub fn powell_minimize<F: FnMut(&[f64]) -> f64>(
    objective: F,
    x0: &[f64],
    bx: &SearchBox,
    cfg: &OptimizerConfig,
) -> Result<MinimizationResult, OptimizerError> {
    cfg.validate()?;
    if !bx.contains(x0) {
        return Err(OptimizerError::InvalidBox(
            "start point outside the box".into(),
        ));
    }
    let mut f = Counted {
        f: objective,
        evals: 0,
    };
    let (x, fx) = local_counted(&mut f, x0, bx, cfg);
    let reason = if fx == 0.0 {
        StopReason::FoundZero
    } else {
        StopReason::HopBudget
    };
    Ok(finish(&mut f, x, reason))
}

/// Basin hopping with uniform random starts.
pub fn basinhopping<F: FnMut(&[f64]) -> f64>(
    objective: F,
    bx: &SearchBox,
    cfg: &OptimizerConfig,
) -> Result<MinimizationResult, OptimizerError> {
    basinhopping_from(objective, bx, cfg, None)
}

/// Basin hopping; the first start is `x0` when given, later restarts are
/// sampled uniformly in the box. Stops at the first exact zero.
pub fn basinhopping_from<F: FnMut(&[f64]) -> f64>(
    objective: F,
    bx: &SearchBox,
    cfg: &OptimizerConfig,
    x0: Option<&[f64]>,
) -> Result<MinimizationResult, OptimizerError> {
    cfg.validate()?;
    if let Some(x0) = x0 {
        if !bx.contains(x0) {
            return Err(OptimizerError::InvalidBox(
                "start point outside the box".into(),
            ));
        }
    }
    let mut f = Counted {
        f: objective,
        evals: 0,
    };
    let stall_limit = (cfg.hops / 4).max(20);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut all_stalled = true;

    for restart in 0..=cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, restart as u64));
        let start = match (restart, x0) {
            (0, Some(x0)) => x0.to_vec(),
            _ => bx.sample(&mut rng),
        };
        let (mut cur, mut fcur) = local_counted(&mut f, &start, bx, cfg);
        let mut run_best = fcur;
        if best.as_ref().is_none_or(|b| fcur < b.1) {
            best = Some((cur.clone(), fcur));
        }
        if fcur == 0.0 {
            return Ok(finish(&mut f, cur, StopReason::FoundZero));
        }
        let mut since_improved = 0;
        let mut stalled = false;
        for _ in 0..cfg.hops {
            let trial: Vec<f64> = (0..bx.dim())
                .map(|i| {
                    let h = cfg.step_scale * bx.width(i);
                    let delta = if h > 0.0 { rng.gen_range(-h..=h) } else { 0.0 };
                    bx.reflect(i, cur[i] + delta)
                })
                .collect();
            let (cand, fcand) = local_counted(&mut f, &trial, bx, cfg);
            if fcand == 0.0 {
                return Ok(finish(&mut f, cand, StopReason::FoundZero));
            }
            let delta = fcand - fcur;
            let accept = delta < 0.0 || rng.gen::<f64>() < (-delta / cfg.temperature).exp();
            if fcand < run_best {
                run_best = fcand;
                since_improved = 0;
            } else {
                since_improved += 1;
            }
            if best.as_ref().is_none_or(|b| fcand < b.1) {
                best = Some((cand.clone(), fcand));
            }
            if accept {
                (cur, fcur) = (cand, fcand);
            }
            if since_improved >= stall_limit {
                stalled = true;
                break;
            }
        }
        all_stalled &= stalled;
    }
    let (x, _) = best.expect("at least one start");
    let reason = if all_stalled {
        StopReason::Stalled
    } else {
        StopReason::HopBudget
    };
    Ok(finish(&mut f, x, reason))
}
