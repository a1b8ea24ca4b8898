//! Derivative-free simplex search followed by a quasi-Newton polish.
//!
//! Objectives are minimized; an infeasible point should evaluate to `+inf`.

use crate::numdiff::GRADIENT_STEP;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    /// Converged when the objective changes by less than this...
    pub f_tol: f64,
    /// ...and no coordinate moves by more than this.
    pub x_tol: f64,
    /// Objective evaluations allowed, gradient stencils included.
    pub max_evals: usize,
    /// Simplex spread at which the localization phase hands over.
    pub simplex_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { f_tol: 1e-8, x_tol: 1e-6, max_evals: 10_000, simplex_tol: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() { f64::INFINITY } else { v }
    }

    fn gradient(&mut self, x: &[f64]) -> Option<Vec<f64>> {
        let mut xp = x.to_vec();
        let mut g = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let h = (GRADIENT_STEP * x[i].abs()).max(GRADIENT_STEP);
            xp[i] = x[i] + h;
            let up = self.eval(&xp);
            xp[i] = x[i] - h;
            let down = self.eval(&xp);
            xp[i] = x[i];
            if !up.is_finite() || !down.is_finite() {
                return None;
            }
            g.push((up - down) / (2.0 * h));
        }
        Some(g)
    }
}

/// Simplex localization then BFGS, sharing one evaluation budget.
pub fn minimize<F>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut obj = Counted { f, evals: 0 };
    let (x, _, nm_iters) = simplex_phase(&mut obj, x0, opts);
    let mut res = bfgs_phase(&mut obj, &x, opts);
    res.iterations += nm_iters;
    res
}

pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut obj = Counted { f, evals: 0 };
    let (x, fx, iterations) = simplex_phase(&mut obj, x0, opts);
    let converged = obj.evals < opts.max_evals;
    OptimResult { x, f: fx, evals: obj.evals, iterations, converged }
}

pub fn bfgs<F>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut obj = Counted { f, evals: 0 };
    bfgs_phase(&mut obj, x0, opts)
}

fn simplex_phase<F: Fn(&[f64]) -> f64>(obj: &mut Counted<F>, x0: &[f64], opts: &OptimOptions) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    if n == 0 {
        let f = obj.eval(x0);
        return (x0.to_vec(), f, 0);
    }
    // localization only gets part of the budget
    let budget = (opts.max_evals / 2).max(n + 2);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = obj.eval(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += 0.1 * x0[i].abs().max(0.5);
        let fx = obj.eval(&x);
        simplex.push((x, fx));
    }

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (best.is_finite() && spread <= opts.simplex_tol * (1.0 + best.abs()) && size < 1e-2)
            || size < opts.x_tol
            || obj.evals >= budget
        {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = obj.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = obj.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-0.5);
                let fc = obj.eval(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = obj.eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let xs: Vec<f64> = x_best.iter().zip(&item.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let fs = obj.eval(&xs);
                    *item = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    (x, f, iterations)
}

fn bfgs_phase<F: Fn(&[f64]) -> f64>(obj: &mut Counted<F>, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = obj.eval(&x);
    let fail = |x: Vec<f64>, f: f64, evals: usize, iterations: usize| OptimResult { x, f, evals, iterations, converged: false };
    if n == 0 {
        return OptimResult { x, f: fx, evals: obj.evals, iterations: 0, converged: fx.is_finite() };
    }
    if !fx.is_finite() {
        return fail(x, fx, obj.evals, 0);
    }
    let Some(mut g) = obj.gradient(&x) else {
        return fail(x, fx, obj.evals, 0);
    };
    // inverse Hessian approximation, row-major
    let mut hinv = identity(n);
    let mut iterations = 0;
    let mut converged = false;
    let mut scaled = false;

    while obj.evals + 2 * n + 1 < opts.max_evals {
        iterations += 1;
        let mut d = mat_vec(&hinv, &g, n).into_iter().map(|v| -v).collect::<Vec<f64>>();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hinv = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        if slope == 0.0 {
            converged = true;
            break;
        }

        // backtracking Armijo search
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fnew = obj.eval(&xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
            if obj.evals >= opts.max_evals {
                break;
            }
        }
        let Some((xn, fnew)) = accepted else {
            // no further decrease is resolvable along the quasi-Newton direction
            converged = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-3;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let df = fx - fnew;
        let max_step = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = xn;
        fx = fnew;
        let Some(gn) = obj.gradient(&x) else { break };
        let g_max = gn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // small moves alone are not enough on a badly scaled quasi-Newton step
        if df.abs() < opts.f_tol && max_step < opts.x_tol && g_max < 1e-4 * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        g = gn;
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if !scaled {
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= scale);
                scaled = true;
            }
            bfgs_update(&mut hinv, &s, &y, sy, n);
        }
    }
    OptimResult { x, f: fx, evals: obj.evals, iterations, converged }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `H <- (I - r s y') H (I - r y s') + r s s'` with `r = 1 / y's`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let r = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -r * (s[i] * hy[j] + hy[i] * s[j]) + (r * r * yhy + r) * s[i] * s[j];
        }
    }
}
