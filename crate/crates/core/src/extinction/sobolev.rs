use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::grid::{GridOperators, GridSpec};
use crate::noise::rng::{stream, StreamPurpose};
use crate::scalar::Real;

/// `1 ≤ d < 2(1+m)/(1−m)`, the dimension range in which the Sobolev-type
/// inequality behind the extinction estimate holds.
pub fn dimension_ok(dimension: usize, m: f64) -> bool {
    if dimension < 1 {
        return false;
    }
    m >= 1.0 || (dimension as f64) < 2.0 * (1.0 + m) / (1.0 - m)
}

/// Same as [`dimension_ok`] but as a typed rejection. For `m = 0` the
/// condition leaves only `d = 1`, which the message states.
pub fn dimension_condition(dimension: usize, m: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&m) {
        return Err(invalid("m", format!("{m} must lie in [0, 1)")));
    }
    if dimension_ok(dimension, m) {
        return Ok(());
    }
    let hint = if m == 0.0 { " (m = 0 imposes d = 1)" } else { "" };
    Err(Error::DimensionCondition { dimension, m, hint })
}

/// Ratio `|y|_{1+m}^{1+m} / ‖y‖₋₁^{1+m}`; homogeneous of degree 0 in `y`.
/// Returns `None` for the zero field.
pub fn sobolev_ratio<T: Real>(ops: &GridOperators<T>, y: &[T], m: T) -> Option<T> {
    let p = T::one() + m;
    let q = ops.h_minus1_unchecked(y);
    if q <= T::zero() {
        return None;
    }
    Some(ops.lp_norm_pow(y, p) / q.powf(p))
}

/// Outcome of the search for the discrete Sobolev constant.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CmEstimate {
    pub m: f64,
    /// Smallest ratio found over every evaluated field.
    pub raw: f64,
    /// `0.9 · raw`, the value used in verdicts.
    pub value: f64,
    pub eigen_min: f64,
    pub random_min: f64,
    pub evaluations: usize,
}

pub const CM_SAFETY_FACTOR: f64 = 0.9;
const RANDOM_FIELDS: usize = 10_000;
const DESCENT_ITERS: usize = 400;

/// Discrete constant `C_m = inf_y |y|_{1+m}^{1+m} / ‖y‖₋₁^{1+m}` estimated
/// from the eigenvectors of `−Δ_h`, a batch of random fields and a gradient
/// descent in log-magnitudes from the best candidate.
pub fn estimate_cm<T: Real>(ops: &GridOperators<T>, m: f64, seed: u64) -> Result<CmEstimate> {
    let spec = ops.spec();
    dimension_condition(spec.dimension(), m)?;
    let mt = T::lit(m);
    let mut evaluations = 0usize;
    let mut eval = |y: &[T]| {
        evaluations += 1;
        sobolev_ratio(ops, y, mt).map(|r| r.as_f64())
    };

    let mut best: Option<(f64, Vec<T>)> = None;
    let keep = |r: Option<f64>, y: &[T], best: &mut Option<(f64, Vec<T>)>| {
        if let Some(r) = r {
            if best.as_ref().is_none_or(|b| r < b.0) {
                *best = Some((r, y.to_vec()));
            }
        }
    };

    for modes in mode_list(spec) {
        let y = ops.eigenmode(&modes);
        let r = eval(y.values());
        keep(r, y.values(), &mut best);
    }
    let eigen_min = best.as_ref().map_or(f64::INFINITY, |b| b.0);

    let mut rng = stream(seed, StreamPurpose::ConstantSearch, 0, 0);
    let n = spec.node_count();
    let low = mode_list(spec).into_iter().take(8).map(|modes| ops.eigenmode(&modes)).collect::<Vec<_>>();
    let mut random_min = f64::INFINITY;
    for trial in 0..RANDOM_FIELDS {
        let y: Vec<T> = match trial % 3 {
            // smooth: decaying combination of the lowest modes
            0 => {
                let mut y = vec![T::zero(); n];
                for (j, f) in low.iter().enumerate() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let c = T::lit(z / (1.0 + j as f64).powi(2));
                    for (a, b) in y.iter_mut().zip(f.values()) {
                        *a = *a + c * *b;
                    }
                }
                y
            }
            // positive, rough
            1 => (0..n).map(|_| T::lit(rng.random::<f64>())).collect(),
            // first mode with multiplicative jitter
            _ => {
                let s = rng.random::<f64>();
                low[0]
                    .values()
                    .iter()
                    .map(|v| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *v * T::lit((s * z).exp())
                    })
                    .collect()
            }
        };
        let r = eval(&y);
        if let Some(r) = r {
            random_min = random_min.min(r);
        }
        keep(r, &y, &mut best);
    }

    let (start_ratio, start) = best.ok_or_else(|| invalid("grid", "no nonzero candidate field"))?;
    let mut raw = start_ratio;
    let descended = descend(ops, mt, start, &mut |y| {
        let r = eval(y);
        if let Some(r) = r {
            raw = raw.min(r);
        }
        r
    });
    debug_assert!(descended <= start_ratio);
    Ok(CmEstimate { m, raw, value: CM_SAFETY_FACTOR * raw, eigen_min, random_min, evaluations })
}

fn mode_list(spec: GridSpec) -> Vec<Vec<usize>> {
    let n = spec.cells_per_axis();
    let mut modes: Vec<Vec<usize>> = if spec.dimension() == 1 {
        (1..=n).map(|k| vec![k]).collect()
    } else {
        (1..=n).flat_map(|k| (1..=n).map(move |l| vec![k, l])).collect()
    };
    modes.sort_by_key(|m| m.iter().map(|k| k * k).sum::<usize>());
    modes
}

/// Gradient descent on `θ` with `y_i = s_i e^{θ_i}`, so signs (and zeros)
/// are preserved. Every trial goes through `eval`.
fn descend<T: Real>(ops: &GridOperators<T>, m: T, start: Vec<T>, eval: &mut impl FnMut(&[T]) -> Option<f64>) -> f64 {
    let p = T::one() + m;
    let vol = ops.spec().cell_volume::<T>();
    let mut y = start;
    let Some(mut r) = eval(&y) else {
        return f64::INFINITY;
    };
    let mut step = T::lit(0.5);
    for _ in 0..DESCENT_ITERS {
        let lp = ops.lp_norm_pow(&y, p);
        let z = ops.poisson_unchecked(&y);
        let q2 = ops.h_minus1_unchecked(&y).powi(2);
        // ∂ log R / ∂θ_i = y_i (∂P/P − (1+m)/2 · ∂Q/Q)
        let grad: Vec<T> = y
            .iter()
            .zip(z.values())
            .map(|(yi, zi)| {
                let dp = vol * p * yi.abs().powf(p);
                let dq = vol * T::lit(2.0) * *yi * *zi;
                dp / lp - p / T::lit(2.0) * dq / q2
            })
            .collect();
        let gnorm = grad.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if gnorm <= T::lit(1e-12) {
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<T> = y.iter().zip(&grad).map(|(yi, gi)| *yi * (-step * *gi / gnorm).exp()).collect();
            if let Some(rt) = eval(&trial) {
                if rt < r {
                    let scale = trial.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                    y = trial.into_iter().map(|v| v / scale).collect();
                    r = rt;
                    improved = true;
                    step = (step * T::lit(1.5)).min(T::lit(4.0));
                    break;
                }
            }
            step = step / T::lit(2.0);
        }
        if !improved {
            break;
        }
    }
    r
}
