//! Dormand-Prince 5(4) integration of autonomous ODEs over `[0, 1]`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// State norm treated as blow-up.
    pub escape_norm: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { rtol: 1e-10, atol: 1e-10, max_steps: 1_000_000, escape_norm: 1e12 }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(y)`, `y(0) = y0` to time `t_end`.
pub fn integrate<F>(f: F, y0: &[f64], t_end: f64, opts: &FlowOptions) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t_end == 0.0 || n == 0 {
        return Ok(y);
    }
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(&y, &mut k[0]);
    let scale0: f64 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let d1: f64 = k[0].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut h = if d1 > 0.0 { (0.01 * (scale0.max(1e-3)) / d1).min(t_end.abs()) } else { t_end.abs() };
    h = h.max(1e-6 * t_end.abs());
    let dir = t_end.signum();
    let mut t = 0.0f64;
    let mut steps = 0usize;
    while (t_end - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(Error::FlowEscaped { time: t, norm: y.iter().map(|v| v * v).sum::<f64>().sqrt() });
        }
        steps += 1;
        let remaining = (t_end - t).abs();
        if h > remaining {
            h = remaining;
        }
        let hs = h * dir;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += hs * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            f(&tmp, &mut k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut acc = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                acc += hs * B[s] * k[s][i];
                e += hs * (B[s] - B_LOW[s]) * k[s][i];
            }
            y_new[i] = acc;
            let sc = opts.atol + opts.rtol * y[i].abs().max(acc.abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / n as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::FlowEscaped { time: t, norm: f64::INFINITY });
            }
            continue;
        }
        if err <= 1.0 {
            t += hs;
            if remaining - h <= 0.0 {
                t = t_end;
            }
            std::mem::swap(&mut y, &mut y_new);
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nrm > opts.escape_norm {
                return Err(Error::FlowEscaped { time: t, norm: nrm });
            }
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::FlowEscaped { time: t, norm: y.iter().map(|v| v * v).sum::<f64>().sqrt() });
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate(|y, d| d[0] = -y[0], &[1.0], 1.0, &FlowOptions::default()).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rotation_preserves_norm() {
        let y = integrate(
            |y, d| {
                d[0] = -y[1];
                d[1] = y[0];
            },
            &[1.0, 0.0],
            1.0,
            &FlowOptions::default(),
        )
        .unwrap();
        assert!((y[0] - 1.0f64.cos()).abs() < 1e-9 && (y[1] - 1.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn blow_up_reported() {
        let r = integrate(|y, d| d[0] = y[0] * y[0], &[2.0], 1.0, &FlowOptions::default());
        assert!(matches!(r, Err(Error::FlowEscaped { .. })));
    }
}
