//! Stretched-exponential (Kohlrausch) lifetime fits.
//!
//! The model is `f(t; b, tau, alpha) = (1 - b) exp(-(t/tau)^alpha) + b`.
//! Fitting runs a deterministic multi-start Nelder-Mead simplex on the
//! transformed parameters `(ln tau, ln alpha, logit b)`, so every parameter
//! stays in bounds by construction and the result is reproducible:
//! identical series in, identical fit out.

use crate::error::{Error, Result};

/// Time-indexed fidelity (or other scalar metric) samples for one cell.
#[derive(Debug, Clone)]
pub struct FidelitySeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl FidelitySeries {
    /// Requires at least 10 points, values in `[0, 1]`, strictly increasing
    /// times.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                left: times.len(),
                right: values.len(),
                context: "fidelity series",
            });
        }
        if times.len() < 10 {
            return Err(Error::InvalidInput(format!(
                "series has {} points, need at least 10",
                times.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || !(0.0..=1.0 + 1e-9).contains(v)) {
            return Err(Error::InvalidInput("values must be finite and in [0, 1]".into()));
        }
        Ok(Self { times, values })
    }

    /// Consecutive integer times `0, 1, 2, ...`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|t| t as f64).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Fitted Kohlrausch parameters with residual diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct KohlrauschFit {
    /// Long-time asymptote.
    pub b: f64,
    /// Lifetime in time steps.
    pub tau: f64,
    /// Stretch exponent.
    pub alpha: f64,
    /// Sum of squared residuals over the fit window.
    pub sse: f64,
    /// Whether the winning simplex met the diameter tolerance.
    pub converged: bool,
}

/// `(1 - b) exp(-(t/tau)^alpha) + b`; equals 1 at `t = 0`.
pub fn kohlrausch(t: f64, b: f64, tau: f64, alpha: f64) -> f64 {
    (1.0 - b) * (-(t / tau).powf(alpha)).exp() + b
}

const ALPHA_SEEDS: [f64; 4] = [0.7, 1.0, 1.5, 2.5];
const MAX_EVALS_PER_START: usize = 20_000;
const SIMPLEX_DIAMETER_TOL: f64 = 1e-10;

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn untransform(x: &[f64; 3]) -> (f64, f64, f64) {
    (sigmoid(x[2]), x[0].exp(), x[1].exp())
}

/// Least-squares Kohlrausch fit.
///
/// The fit window keeps points with `t <= 5 * tau_seed`, where `tau_seed` is
/// the first time the series crosses `(1 + min)/2`; the window always keeps
/// at least 10 points. Returns `converged = false` together with the
/// best-so-far parameters when no start met the diameter tolerance.
pub fn fit(series: &FidelitySeries) -> Result<KohlrauschFit> {
    let values = series.values();
    let times = series.times();

    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = vmax - vmin;
    if span < 1e-12 {
        return Err(Error::DegenerateSeries { span });
    }

    let b_seed = vmin.clamp(1e-6, 1.0 - 1e-6);
    let half_level = (1.0 + vmin) / 2.0;
    let tau_seed = times
        .iter()
        .zip(values)
        .find(|(_, &v)| v <= half_level)
        .map(|(&t, _)| t)
        .unwrap_or(times[times.len() - 1])
        .max(times[1].max(1e-9));

    let mut window = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t <= 5.0 * tau_seed)
        .map(|(&t, &v)| (t, v))
        .collect::<Vec<_>>();
    if window.len() < 10 {
        window = times.iter().zip(values).map(|(&t, &v)| (t, v)).collect();
    }

    let objective = |x: &[f64; 3]| -> f64 {
        let (b, tau, alpha) = untransform(x);
        if !tau.is_finite() || !alpha.is_finite() || tau <= 0.0 || alpha <= 0.0 {
            return f64::INFINITY;
        }
        let mut sse = 0.0;
        for &(t, v) in &window {
            let r = kohlrausch(t, b, tau, alpha) - v;
            sse += r * r;
        }
        if sse.is_finite() {
            sse
        } else {
            f64::INFINITY
        }
    };

    let mut best: Option<(f64, [f64; 3], bool)> = None;
    for &alpha0 in &ALPHA_SEEDS {
        let x0 = [tau_seed.ln(), alpha0.ln(), logit(b_seed)];
        let (x, f, converged) = nelder_mead(&objective, x0);
        let better = match &best {
            None => true,
            Some((fb, _, _)) => f < *fb,
        };
        if better {
            best = Some((f, x, converged));
        }
    }

    let (sse, x, converged) = best.expect("at least one start");
    let (b, tau, alpha) = untransform(&x);
    Ok(KohlrauschFit {
        b,
        tau,
        alpha: alpha.min(5.0),
        sse,
        converged,
    })
}

/// Standard Nelder-Mead on 3 parameters with deterministic initialization.
fn nelder_mead(f: &dyn Fn(&[f64; 3]) -> f64, x0: [f64; 3]) -> ([f64; 3], f64, bool) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;
    const INIT_STEP: f64 = 0.25;

    let mut evals = 0usize;
    let eval = |x: &[f64; 3], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((x0, eval(&x0, &mut evals)));
    for i in 0..3 {
        let mut v = x0;
        v[i] += INIT_STEP;
        simplex.push((v, eval(&v, &mut evals)));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < SIMPLEX_DIAMETER_TOL {
            return (simplex[0].0, simplex[0].1, true);
        }
        if evals >= MAX_EVALS_PER_START {
            return (simplex[0].0, simplex[0].1, false);
        }

        let worst = simplex[3];
        let mut centroid = [0.0; 3];
        for (v, _) in &simplex[..3] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / 3.0;
            }
        }
        let point = |coef: f64| {
            let mut p = [0.0; 3];
            for i in 0..3 {
                p[i] = centroid[i] + coef * (centroid[i] - worst.0[i]);
            }
            p
        };

        let xr = point(REFLECT);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = point(EXPAND);
            let fe = eval(&xe, &mut evals);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
            continue;
        }
        // contraction: outside if the reflection improved on the worst
        let (xc, fc) = if fr < worst.1 {
            let xc = point(CONTRACT);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = point(-CONTRACT);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            simplex[3] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0;
        for entry in simplex.iter_mut().skip(1) {
            for i in 0..3 {
                entry.0[i] = best[i] + SHRINK * (entry.0[i] - best[i]);
            }
            entry.1 = eval(&entry.0, &mut evals);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn synth(b: f64, tau: f64, alpha: f64, tmax: usize) -> FidelitySeries {
        let values: Vec<f64> = (0..=tmax).map(|t| kohlrausch(t as f64, b, tau, alpha)).collect();
        FidelitySeries::from_values(values).unwrap()
    }

    #[test]
    fn model_values() {
        for &(b, tau, alpha) in &[(0.3, 50.0, 1.2), (0.0, 10.0, 0.5), (0.9, 200.0, 2.0)] {
            assert_abs_diff_eq!(kohlrausch(0.0, b, tau, alpha), 1.0, epsilon = 1e-15);
        }
        // b=0.5, tau=49.498, alpha=1 at t=tau: 0.5 + 0.5/e
        let v = kohlrausch(49.498, 0.5, 49.498, 1.0);
        assert_abs_diff_eq!(v, 0.6839397205857212, epsilon = 1e-12);
    }

    #[test]
    fn alpha_one_is_plain_exponential() {
        let (b, tau): (f64, f64) = (0.25, 80.0);
        for t in [0.0, 10.0, 80.0, 400.0] {
            let expected = b + (1.0 - b) * (-t / tau).exp();
            assert_abs_diff_eq!(kohlrausch(t, b, tau, 1.0), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn noiseless_round_trip_single() {
        let series = synth(0.3, 100.0, 1.5, 499);
        let fit = fit(&series).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.b, 0.3, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.tau, 100.0, epsilon = 1e-4);
        assert_abs_diff_eq!(fit.alpha, 1.5, epsilon = 1e-6);
        assert!(fit.sse < 1e-15);
    }

    #[test]
    fn noiseless_round_trip_grid() {
        for &b in &[0.0, 0.3, 0.5] {
            for &tau in &[10.0, 100.0, 700.0] {
                for &alpha in &[0.5, 1.0, 2.0] {
                    let tmax = ((3.0 * tau) as usize).min(2100).max(60);
                    let series = synth(b, tau, alpha, tmax);
                    let got = fit(&series).unwrap();
                    assert_abs_diff_eq!(got.b, b, epsilon = 1e-6);
                    assert!(
                        (got.tau - tau).abs() / tau <= 1e-6,
                        "tau {tau}: fitted {} (b={b}, alpha={alpha})",
                        got.tau
                    );
                    assert_abs_diff_eq!(got.alpha, alpha, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn time_rescaling_rescales_tau_only() {
        let c = 4.0;
        let base = synth(0.2, 60.0, 1.3, 600);
        let scaled = FidelitySeries::new(
            base.times().iter().map(|&t| c * t).collect(),
            base.values().to_vec(),
        )
        .unwrap();
        let f0 = fit(&base).unwrap();
        let f1 = fit(&scaled).unwrap();
        assert_abs_diff_eq!(f1.tau, c * f0.tau, epsilon = c * 60.0 * 1e-6);
        assert_abs_diff_eq!(f1.alpha, f0.alpha, epsilon = 1e-6);
        assert_abs_diff_eq!(f1.b, f0.b, epsilon = 1e-6);
    }

    #[test]
    fn degenerate_series_rejected() {
        let series = FidelitySeries::from_values(vec![0.5; 20]).unwrap();
        assert!(matches!(fit(&series), Err(Error::DegenerateSeries { .. })));
    }

    #[test]
    fn series_validation() {
        assert!(FidelitySeries::from_values(vec![1.0; 5]).is_err());
        assert!(FidelitySeries::new(vec![0.0, 0.0, 1.0], vec![1.0, 0.9, 0.8]).is_err());
        assert!(FidelitySeries::from_values(vec![0.5, 1.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5])
            .is_err());
    }

    #[test]
    fn determinism() {
        let series = synth(0.4, 35.0, 0.8, 300);
        let a = fit(&series).unwrap();
        let b = fit(&series).unwrap();
        assert_eq!(a.b.to_bits(), b.b.to_bits());
        assert_eq!(a.tau.to_bits(), b.tau.to_bits());
        assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
    }
}
