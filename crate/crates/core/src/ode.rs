//! Dormand–Prince 5(4) with the continuous extension of Hairer–Nørsett–Wanner.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h0: 1e-3,
            h_max: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

/// One accepted step with its dense output.
#[derive(Debug, Clone)]
pub struct Segment {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl Segment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> &[f64] {
        &self.rcont[0]
    }

    pub fn end(&self) -> Vec<f64> {
        self.eval(self.t1())
    }

    /// Interpolated state at `t` in `[t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub stopped: bool,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(f64::NAN, Segment::t1)
    }

    /// State at `t`, from the segment containing it.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let i = self.segments.partition_point(|s| s.t1() < t);
        self.segments.get(i).filter(|s| t >= s.t0 - 1e-14 * s.h.abs()).map(|s| s.eval(t))
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrate `y' = f(t, y)` from `t0` towards `t_end`, calling `on_step` after
/// each accepted step. A failing right-hand side during a trial step shrinks
/// the step; it is an error only when the step underflows.
pub fn integrate<F, S>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: &Options, mut on_step: S) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    S: FnMut(&Segment) -> Result<Control>,
{
    if !(t_end > t0) {
        return Err(Error::InvalidArgument(format!("integration interval [{t0}, {t_end}] is empty")));
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0])?;
    let mut h = opts.h0.min(opts.h_max).min(t_end - t0);
    let mut out = Trajectory { segments: Vec::new(), stopped: false };
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(out);
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::NoConvergence { what: "ODE step size underflow".into(), residual: h });
        }
        let mut rhs_failed = None;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                ytmp[i] = acc;
            }
            if let Err(e) = f(t + C[s] * h, &ytmp, &mut k[s]) {
                rhs_failed = Some(e);
                break;
            }
            if s == 6 {
                y1.copy_from_slice(&ytmp);
            }
        }
        if let Some(e) = rhs_failed {
            h *= 0.25;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(e);
            }
            continue;
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            continue;
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        if err <= 1.0 {
            let r1 = y.clone();
            let r2: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
            let r3: Vec<f64> = (0..n).map(|i| h * k[0][i] - r2[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k[6][i] - r3[i]).collect();
            let r5: Vec<f64> = (0..n)
                .map(|i| h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>())
                .collect();
            let seg = Segment { t0: t, h, rcont: [r1, r2, r3, r4, r5] };
            let ctl = on_step(&seg)?;
            out.segments.push(seg);
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y1);
            k.swap(0, 6);
            if ctl == Control::Stop {
                out.stopped = true;
                return Ok(out);
            }
            h = (h * fac).min(opts.h_max);
        } else {
            h *= fac.min(1.0);
        }
    }
    Err(Error::NoConvergence { what: "ODE step budget exhausted".into(), residual: t })
}

/// Root of `g` on `[a, b]` by bisection, given a sign change.
pub fn bisect<G: FnMut(f64) -> f64>(mut g: G, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let mut ga = g(a);
    for _ in 0..iters {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let tr = integrate(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &Options::default(),
            |_| Ok(Control::Continue),
        )
        .unwrap();
        assert!(!tr.stopped);
        assert!((tr.eval(2.0).unwrap()[0] - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_tracks_oscillator() {
        let opts = Options { rtol: 1e-11, atol: 1e-13, ..Options::default() };
        let tr = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &opts,
            |_| Ok(Control::Continue),
        )
        .unwrap();
        for k in 0..=100 {
            let t = 0.1 * k as f64;
            let y = tr.eval(t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-8, "t={t}");
            assert!((y[1] - t.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn stop_and_locate_event() {
        let tr = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            100.0,
            &Options::default(),
            |s| Ok(if s.end()[0] < 0.0 { Control::Stop } else { Control::Continue }),
        )
        .unwrap();
        assert!(tr.stopped);
        let seg = tr.segments.last().unwrap();
        let root = bisect(|t| seg.eval(t)[0], seg.t0, seg.t1(), 60);
        assert!((root - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn failing_rhs_shrinks_step() {
        // singular beyond y = 1; the step has to creep towards the wall
        let r = integrate(
            |_, y, dy| {
                if y[0] >= 1.0 {
                    return Err(Error::NonFinite("wall"));
                }
                dy[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            2.0,
            &Options { h0: 0.3, ..Options::default() },
            |_| Ok(Control::Continue),
        );
        assert!(r.is_err());
    }
}
