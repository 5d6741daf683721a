// SPDX-License-Identifier: MIT
//! BFGS with a strong-Wolfe line search.
//!
//! Objectives may be undefined at some points (e.g. where `I - B` is singular);
//! the line search treats those as infinitely bad and backtracks.

use nalgebra::{DMatrix, DVector};

/// A smooth function with an analytic gradient.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Value and gradient, or `None` where the objective is undefined.
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    /// Stop once the sup-norm of the gradient falls below this.
    pub gradient_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value at every accepted iterate, starting point included.
    pub trace: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[derive(Clone)]
struct Point {
    t: f64,
    x: DVector<f64>,
    f: f64,
    g: DVector<f64>,
    slope: f64,
}

struct LineSearch<'a, O: Objective> {
    obj: &'a O,
    x0: &'a DVector<f64>,
    p: &'a DVector<f64>,
    f0: f64,
    slope0: f64,
    g0_norm: f64,
    /// Non-increasing point with a smaller gradient, used when the Wolfe
    /// conditions drown in roundoff.
    fallback: Option<Point>,
}

impl<O: Objective> LineSearch<'_, O> {
    fn eval(&mut self, t: f64) -> Option<Point> {
        let x = self.x0 + self.p * t;
        let (f, g) = self.obj.eval(x.as_slice())?;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let g = DVector::from_vec(g);
        let slope = g.dot(self.p);
        let pt = Point { t, x, f, g, slope };
        if pt.f <= self.f0
            && pt.g.norm() < self.g0_norm
            && self.fallback.as_ref().is_none_or(|b| pt.f < b.f)
        {
            self.fallback = Some(pt.clone());
        }
        Some(pt)
    }

    fn armijo(&self, pt: &Point) -> bool {
        pt.f <= self.f0 + C1 * pt.t * self.slope0
    }

    fn curvature(&self, pt: &Point) -> bool {
        pt.slope.abs() <= -C2 * self.slope0
    }

    fn run(mut self, t_init: f64) -> Option<Point> {
        let mut lo: Option<Point> = None;
        let mut t = t_init;
        for it in 0..40 {
            let Some(pt) = self.eval(t) else {
                return self.zoom(lo, t, None);
            };
            let lo_f = lo.as_ref().map_or(self.f0, |p| p.f);
            if !self.armijo(&pt) || (it > 0 && pt.f >= lo_f) {
                return self.zoom(lo, t, Some(pt.f));
            }
            if self.curvature(&pt) {
                return Some(pt);
            }
            if pt.slope >= 0.0 {
                let hi_t = lo.as_ref().map_or(0.0, |p| p.t);
                return self.zoom(Some(pt), hi_t, None);
            }
            lo = Some(pt);
            t *= 2.0;
        }
        lo.or(self.fallback)
    }

    /// Narrows `[lo, hi]` (in either order) until the strong Wolfe conditions hold.
    fn zoom(mut self, mut lo: Option<Point>, mut hi_t: f64, mut hi_f: Option<f64>) -> Option<Point> {
        for _ in 0..60 {
            let (lo_t, lo_f, lo_slope) = lo
                .as_ref()
                .map_or((0.0, self.f0, self.slope0), |p| (p.t, p.f, p.slope));
            let width = hi_t - lo_t;
            if width.abs() <= 1e-14 * lo_t.abs().max(hi_t.abs()).max(1e-300) {
                break;
            }
            // safeguarded quadratic interpolation through (lo_f, lo_slope, hi_f)
            let mut t = lo_t + 0.5 * width;
            if let Some(fh) = hi_f {
                let denom = 2.0 * (fh - lo_f - lo_slope * width);
                if denom > 0.0 {
                    let cand = lo_t - lo_slope * width * width / denom;
                    let (a, b) = if lo_t < hi_t { (lo_t, hi_t) } else { (hi_t, lo_t) };
                    let margin = 0.1 * width.abs();
                    if cand > a + margin && cand < b - margin {
                        t = cand;
                    }
                }
            }
            match self.eval(t) {
                None => {
                    hi_t = t;
                    hi_f = None;
                }
                Some(pt) => {
                    if !self.armijo(&pt) || pt.f >= lo_f {
                        hi_t = t;
                        hi_f = Some(pt.f);
                    } else {
                        if self.curvature(&pt) {
                            return Some(pt);
                        }
                        if pt.slope * (hi_t - lo_t) >= 0.0 {
                            hi_t = lo_t;
                            hi_f = Some(lo_f);
                        }
                        lo = Some(pt);
                    }
                }
            }
        }
        match lo {
            Some(p) if p.t > 0.0 => Some(p),
            _ => self.fallback,
        }
    }
}

/// Minimizes `obj` from `x0`. Returns `None` if the objective is undefined at `x0`.
///
/// Accepted iterates have non-increasing objective values.
pub fn minimize_bfgs<O: Objective>(obj: &O, x0: &[f64], opts: &MinimizeOptions) -> Option<Minimum> {
    minimize_bfgs_preconditioned(obj, x0, None, opts)
}

/// Forward-difference estimate of the Hessian diagonal at `x`, floored to a
/// positive value, for use as a preconditioner. `None` if `obj` is undefined
/// at `x`.
pub fn diagonal_curvature<O: Objective>(obj: &O, x: &[f64]) -> Option<Vec<f64>> {
    let (_, g) = obj.eval(x)?;
    let raw: Vec<f64> = (0..x.len())
        .map(|j| {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut up = x.to_vec();
            up[j] += h;
            obj.eval(&up).map_or(f64::NAN, |(_, gu)| (gu[j] - g[j]) / h)
        })
        .collect();
    let top = raw.iter().copied().filter(|v| v.is_finite()).fold(0.0_f64, f64::max);
    let floor = (1e-8 * top).max(1e-8);
    // negative or undefined curvature says nothing about scale
    Some(
        raw.into_iter()
            .map(|v| if !(v.is_finite() && v > 0.0) { 1.0 } else { v.max(floor) })
            .collect(),
    )
}

/// BFGS started from the inverse Hessian `diag(1 / curvature)` when given,
/// otherwise from a scaled identity.
pub fn minimize_bfgs_preconditioned<O: Objective>(
    obj: &O,
    x0: &[f64],
    curvature: Option<&[f64]>,
    opts: &MinimizeOptions,
) -> Option<Minimum> {
    let n = x0.len();
    let (f0, g0) = obj.eval(x0)?;
    if !f0.is_finite() {
        return None;
    }
    let mut x = DVector::from_column_slice(x0);
    let mut f = f0;
    let mut g = DVector::from_vec(g0);
    let (mut h, mut scaled) = match curvature {
        Some(c) if c.len() == n => (DMatrix::from_diagonal(&DVector::from_iterator(n, c.iter().map(|v| 1.0 / v))), true),
        _ => (DMatrix::<f64>::identity(n, n), false),
    };
    let reset = h.clone();
    let mut trace = vec![f];
    let mut iterations = 0;

    while iterations < opts.max_iterations && sup_norm(g.as_slice()) > opts.gradient_tolerance {
        let mut p = -(&h * &g);
        if p.dot(&g) >= 0.0 {
            h = reset.clone();
            p = -(&h * &g);
        }
        let t_init = if scaled { 1.0 } else { (1.0 / p.norm()).min(1.0) };
        let ls = LineSearch {
            obj,
            x0: &x,
            p: &p,
            f0: f,
            slope0: p.dot(&g),
            g0_norm: g.norm(),
            fallback: None,
        };
        let Some(next) = ls.run(t_init) else { break };
        iterations += 1;

        let s = &next.x - &x;
        let y = &next.g - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if !scaled {
                h *= sy / y.dot(&y);
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }
        x = next.x;
        f = next.f;
        g = next.g;
        trace.push(f);
    }

    let gradient_norm = sup_norm(g.as_slice());
    Some(Minimum {
        x: x.as_slice().to_vec(),
        value: f,
        gradient: g.as_slice().to_vec(),
        gradient_norm,
        converged: gradient_norm <= opts.gradient_tolerance,
        iterations,
        trace,
    })
}
