//! Dormand-Prince 5(4) with step-size control and the standard fourth-order
//! continuous extension, for complex-valued state vectors.

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` and returns `y` at each requested
/// time (ascending, all `>= t0`). `f(t, y, dy)` writes into `dy`.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[C64],
    out_times: &[f64],
    tol: Tolerances,
) -> Result<(Vec<Vec<C64>>, Stats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    if out_times.windows(2).any(|w| w[1] < w[0]) || out_times.first().is_some_and(|&t| t < t0) {
        return Err(Error::Invalid("output times must be ascending and not before t0".into()));
    }
    let n = y0.len();
    let mut stats = Stats::default();
    let mut out = Vec::with_capacity(out_times.len());
    let mut next = 0;
    while next < out_times.len() && out_times[next] == t0 {
        out.push(y0.to_vec());
        next += 1;
    }
    let t_end = match out_times.last() {
        Some(&t) if next < out_times.len() => t,
        _ => return Ok((out, stats)),
    };

    let mut y = y0.to_vec();
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];
    let mut t = t0;
    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut h = initial_step(&mut f, t, &y, &k[0], t_end - t0, tol, &mut stats);
    let mut fac_old = 1e-4f64;
    let mut last_rejected = false;

    while next < out_times.len() {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::Integrator { t, reason: "step budget exhausted".into() });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if !(h > 1e-14 * t.abs().max(1.0)) {
            return Err(Error::Integrator { t, reason: format!("step size underflow ({h:e})") });
        }

        let stage = |tmp: &mut [C64], k: &[Vec<C64>; 7], coeffs: &[(usize, f64)]| {
            for i in 0..n {
                let mut s = y[i];
                for &(j, a) in coeffs {
                    s += k[j][i] * (h * a);
                }
                tmp[i] = s;
            }
        };
        stage(&mut tmp, &k, &[(0, A21)]);
        f(t + C2 * h, &tmp, &mut k[1]);
        stage(&mut tmp, &k, &[(0, A31), (1, A32)]);
        f(t + C3 * h, &tmp, &mut k[2]);
        stage(&mut tmp, &k, &[(0, A41), (1, A42), (2, A43)]);
        f(t + C4 * h, &tmp, &mut k[3]);
        stage(&mut tmp, &k, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
        f(t + C5 * h, &tmp, &mut k[4]);
        stage(&mut tmp, &k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        f(t + h, &tmp, &mut k[5]);
        stage(&mut y_new, &k, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
        f(t + h, &y_new, &mut k[6]);
        stats.rhs_evals += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let sc = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integrator { t, reason: "non-finite error estimate".into() });
        }

        // Lund stabilization as in Hairer's code
        let fac11 = err.powf(0.2 - 0.04 * 0.75);
        let fac = (fac11 / fac_old.powf(0.04)) / 0.9;
        let fac = fac.clamp(0.1, 5.0);
        if err <= 1.0 {
            fac_old = err.max(1e-4);
            let t_new = t + h;
            while next < out_times.len() && out_times[next] <= t_new {
                let theta = (out_times[next] - t) / h;
                out.push(dense_output(&y, &y_new, &k, h, theta));
                next += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            h /= (fac11 / 0.9).min(5.0);
            stats.rejected += 1;
            last_rejected = true;
        }
    }
    Ok((out, stats))
}

fn dense_output(y0: &[C64], y1: &[C64], k: &[Vec<C64>; 7], h: f64, theta: f64) -> Vec<C64> {
    if theta >= 1.0 {
        return y1.to_vec();
    }
    let t1 = 1.0 - theta;
    (0..y0.len())
        .map(|i| {
            let r2 = y1[i] - y0[i];
            let r3 = k[0][i] * h - r2;
            let r4 = r2 - k[6][i] * h - r3;
            let r5 = (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6 + k[6][i] * D7) * h;
            y0[i] + (r2 + (r3 + (r4 + r5 * t1) * theta) * t1) * theta
        })
        .collect()
}

fn initial_step<F>(f: &mut F, t: f64, y: &[C64], f0: &[C64], span: f64, tol: Tolerances, stats: &mut Stats) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len().max(1) as f64;
    let sc: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.norm()).collect();
    let rms = |v: &[C64]| (v.iter().zip(&sc).map(|(x, s)| (x.norm() / s).powi(2)).sum::<f64>() / n).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
    f(t + h0, &y1, &mut f1);
    stats.rhs_evals += 1;
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}
