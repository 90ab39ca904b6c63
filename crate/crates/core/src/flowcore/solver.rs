//! Coarse-to-fine variational flow with brightness and gradient constancy,
//! Charbonnier penalties and a lagged-nonlinearity SOR inner solver.

use serde::{Deserialize, Serialize};

use super::frame::{warp, FlowField, Frame};
use super::pyramid::{build_pyramid, gradient, upsample_flow};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolverConfig {
    /// Smoothness weight.
    pub alpha: f64,
    /// Charbonnier regularizer: `psi(s2) = sqrt(s2 + eps^2)`.
    pub psi_epsilon: f64,
    /// Weight of the gradient-constancy term relative to brightness constancy.
    pub gradient_weight: f64,
    pub pyramid_factor: f64,
    pub pyramid_min_size: usize,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub sor_omega: f64,
}

impl Default for FlowSolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            psi_epsilon: 1e-3,
            gradient_weight: 1.0,
            pyramid_factor: 0.5,
            pyramid_min_size: 16,
            outer_iterations: 5,
            inner_iterations: 30,
            sor_omega: 1.8,
        }
    }
}

impl FlowSolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("flow solver: {m}")));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be > 0");
        }
        if !(self.psi_epsilon > 0.0 && self.psi_epsilon.is_finite()) {
            return bad("psi_epsilon must be > 0");
        }
        if !(self.gradient_weight >= 0.0 && self.gradient_weight.is_finite()) {
            return bad("gradient_weight must be >= 0");
        }
        if !(self.pyramid_factor > 0.0 && self.pyramid_factor < 1.0) {
            return bad("pyramid_factor must lie in (0, 1)");
        }
        if self.pyramid_min_size == 0 || self.outer_iterations == 0 || self.inner_iterations == 0 {
            return bad("pyramid_min_size and iteration counts must be positive");
        }
        if !(self.sor_omega > 0.0 && self.sor_omega < 2.0) {
            return bad("sor_omega must lie in (0, 2)");
        }
        Ok(())
    }
}

/// Energy before and after refinement at one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    pub width: usize,
    pub height: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Energy after each accepted outer iteration.
    pub outer_energies: Vec<f64>,
}

/// Per-level energies, coarsest level first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTrace {
    pub levels: Vec<LevelTrace>,
}

const MAX_BACKTRACKS: usize = 4;

struct Params<T> {
    alpha: T,
    eps2: T,
    gamma: T,
    omega: T,
    outer: usize,
    inner: usize,
}

impl<T: Scalar> Params<T> {
    fn from_config(cfg: &FlowSolverConfig) -> Self {
        Self {
            alpha: T::lit(cfg.alpha),
            eps2: T::lit(cfg.psi_epsilon * cfg.psi_epsilon),
            gamma: T::lit(cfg.gradient_weight),
            omega: T::lit(cfg.sor_omega),
            outer: cfg.outer_iterations,
            inner: cfg.inner_iterations,
        }
    }

    #[inline]
    fn psi(&self, s2: T) -> T {
        (s2 + self.eps2).sqrt()
    }

    /// `psi'(s2)` up to the common factor 1/2, which cancels in the normal equations.
    #[inline]
    fn psi_prime(&self, s2: T) -> T {
        T::one() / (s2 + self.eps2).sqrt()
    }
}

fn check_inputs<T: Scalar>(a: &Frame<T>, b: &Frame<T>, cfg: &FlowSolverConfig) -> Result<()> {
    cfg.validate()?;
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "frames {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if a.width() < cfg.pyramid_min_size || a.height() < cfg.pyramid_min_size {
        return Err(Error::InvalidInput(format!(
            "frame {}x{} smaller than pyramid_min_size {}",
            a.width(),
            a.height(),
            cfg.pyramid_min_size
        )));
    }
    if a.data().iter().chain(b.data()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("frame intensities"));
    }
    Ok(())
}

/// Estimates the displacement `(u, v)` such that `b(x + u, y + v) ≈ a(x, y)`.
pub fn estimate_flow<T: Scalar>(a: &Frame<T>, b: &Frame<T>, cfg: &FlowSolverConfig) -> Result<FlowField<T>> {
    estimate_flow_traced(a, b, cfg).map(|(flow, _)| flow)
}

/// Same as [`estimate_flow`], also reporting the energy at every pyramid level.
pub fn estimate_flow_traced<T: Scalar>(
    a: &Frame<T>,
    b: &Frame<T>,
    cfg: &FlowSolverConfig,
) -> Result<(FlowField<T>, FlowTrace)> {
    check_inputs(a, b, cfg)?;
    let params = Params::from_config(cfg);
    let pa = build_pyramid(a, cfg.pyramid_factor, cfg.pyramid_min_size);
    let pb = build_pyramid(b, cfg.pyramid_factor, cfg.pyramid_min_size);

    let coarsest = pa.last().expect("pyramid has a level");
    let mut flow = FlowField::zeros(coarsest.width(), coarsest.height());
    let mut trace = FlowTrace::default();
    for (la, lb) in pa.iter().zip(&pb).rev() {
        if flow.width() != la.width() || flow.height() != la.height() {
            flow = upsample_flow(&flow, la.width(), la.height());
        }
        let initial = level_energy(la, lb, &flow, &params);
        let outer_energies = refine_level(la, lb, &mut flow, &params);
        let fin = level_energy(la, lb, &flow, &params);
        trace.levels.push(LevelTrace {
            width: la.width(),
            height: la.height(),
            initial_energy: initial.as_f64(),
            final_energy: fin.as_f64(),
            outer_energies,
        });
    }
    Ok((flow, trace))
}

/// Discretized total energy of `flow` for the frame pair.
pub fn flow_energy<T: Scalar>(a: &Frame<T>, b: &Frame<T>, flow: &FlowField<T>, cfg: &FlowSolverConfig) -> Result<T> {
    cfg.validate()?;
    if !a.same_shape(b) || a.width() != flow.width() || a.height() != flow.height() {
        return Err(Error::DimensionMismatch("flow_energy".into()));
    }
    Ok(level_energy(a, b, flow, &Params::from_config(cfg)))
}

fn level_energy<T: Scalar>(a: &Frame<T>, b: &Frame<T>, flow: &FlowField<T>, p: &Params<T>) -> T {
    let bw = warp(b, flow).expect("shapes checked");
    let (ax, ay) = gradient(a);
    let (bx, by) = gradient(&bw);
    let (w, h) = (a.width(), a.height());
    let (u, v) = (flow.u(), flow.v());
    let mut data = T::zero();
    let mut grad = T::zero();
    let mut smooth = T::zero();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let dz = bw.data()[i] - a.data()[i];
            data += p.psi(dz * dz);
            let gxz = bx.data()[i] - ax.data()[i];
            let gyz = by.data()[i] - ay.data()[i];
            grad += p.psi(gxz * gxz + gyz * gyz);
            smooth += p.psi(smoothness_s2(u, v, w, h, x, y, i));
        }
    }
    data + p.gamma * grad + p.alpha * smooth
}

/// Squared forward-difference gradient norm of `(u, v)` at pixel `i`; zero
/// across the last column/row.
#[inline]
fn smoothness_s2<T: Scalar>(u: &[T], v: &[T], w: usize, h: usize, x: usize, y: usize, i: usize) -> T {
    let mut s = T::zero();
    if x + 1 < w {
        let du = u[i + 1] - u[i];
        let dv = v[i + 1] - v[i];
        s += du * du + dv * dv;
    }
    if y + 1 < h {
        let du = u[i + w] - u[i];
        let dv = v[i + w] - v[i];
        s += du * du + dv * dv;
    }
    s
}

struct Linearized<T> {
    ix: Vec<T>,
    iy: Vec<T>,
    iz: Vec<T>,
    ixx: Vec<T>,
    ixy: Vec<T>,
    iyy: Vec<T>,
    ixz: Vec<T>,
    iyz: Vec<T>,
}

fn linearize<T: Scalar>(a: &Frame<T>, bw: &Frame<T>, a_grads: &[Frame<T>; 5]) -> Linearized<T> {
    let [ax, ay, axx, axy, ayy] = a_grads;
    let (bx, by) = gradient(bw);
    let (bxx, bxy) = gradient(&bx);
    let (_, byy) = gradient(&by);
    let half = T::lit(0.5);
    let avg = |p: &Frame<T>, q: &Frame<T>| -> Vec<T> {
        p.data().iter().zip(q.data()).map(|(&s, &t)| (s + t) * half).collect()
    };
    let diff = |p: &Frame<T>, q: &Frame<T>| -> Vec<T> {
        p.data().iter().zip(q.data()).map(|(&s, &t)| s - t).collect()
    };
    Linearized {
        ix: avg(ax, &bx),
        iy: avg(ay, &by),
        iz: diff(bw, a),
        ixx: avg(axx, &bxx),
        ixy: avg(axy, &bxy),
        iyy: avg(ayy, &byy),
        ixz: diff(&bx, ax),
        iyz: diff(&by, ay),
    }
}

fn refine_level<T: Scalar>(a: &Frame<T>, b: &Frame<T>, flow: &mut FlowField<T>, p: &Params<T>) -> Vec<f64> {
    let (w, h) = (a.width(), a.height());
    let n = w * h;
    let (ax, ay) = gradient(a);
    let (axx, axy) = gradient(&ax);
    let (_, ayy) = gradient(&ay);
    let a_grads = [ax, ay, axx, axy, ayy];

    let mut du = vec![T::zero(); n];
    let mut dv = vec![T::zero(); n];
    let mut psi_d = vec![T::zero(); n];
    let mut psi_g = vec![T::zero(); n];
    let mut psi_s = vec![T::zero(); n];
    let mut ut = vec![T::zero(); n];
    let mut vt = vec![T::zero(); n];
    let mut energy = level_energy(a, b, flow, p);
    let mut history = Vec::with_capacity(p.outer);

    for _ in 0..p.outer {
        let bw = warp(b, flow).expect("shapes checked");
        let lin = linearize(a, &bw, &a_grads);
        du.iter_mut().for_each(|x| *x = T::zero());
        dv.iter_mut().for_each(|x| *x = T::zero());

        for _ in 0..p.inner {
            for i in 0..n {
                let rz = lin.iz[i] + lin.ix[i] * du[i] + lin.iy[i] * dv[i];
                psi_d[i] = p.psi_prime(rz * rz);
                let rx = lin.ixz[i] + lin.ixx[i] * du[i] + lin.ixy[i] * dv[i];
                let ry = lin.iyz[i] + lin.ixy[i] * du[i] + lin.iyy[i] * dv[i];
                psi_g[i] = p.psi_prime(rx * rx + ry * ry);
                ut[i] = flow.u()[i] + du[i];
                vt[i] = flow.v()[i] + dv[i];
            }
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    psi_s[i] = p.psi_prime(smoothness_s2(&ut, &vt, w, h, x, y, i));
                }
            }
            uniform_correction(&lin, &mut du, &mut dv, &psi_d, &psi_g, p);
            sor_sweep(&lin, flow, &mut du, &mut dv, &psi_d, &psi_g, &psi_s, w, h, p);
        }

        // Backtrack along the increment until the warped energy does not rise.
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut candidate = flow.clone();
            for (ui, d) in candidate.u_mut().iter_mut().zip(&du) {
                *ui += step * *d;
            }
            for (vi, d) in candidate.v_mut().iter_mut().zip(&dv) {
                *vi += step * *d;
            }
            let e = level_energy(a, b, &candidate, p);
            if e <= energy {
                accepted = Some((candidate, e));
                break;
            }
            step *= T::lit(0.5);
        }
        match accepted {
            Some((candidate, e)) => {
                *flow = candidate;
                energy = e;
                history.push(e.as_f64());
            }
            None => break,
        }
    }
    history
}

/// Per-pixel normal-equation coefficients `(a11, a12, a22, b1, b2)` of the
/// linearized data terms.
#[inline]
fn data_coefficients<T: Scalar>(lin: &Linearized<T>, i: usize, pd: T, pg: T) -> (T, T, T, T, T) {
    let (ix, iy, iz) = (lin.ix[i], lin.iy[i], lin.iz[i]);
    let (ixx, ixy, iyy) = (lin.ixx[i], lin.ixy[i], lin.iyy[i]);
    let (ixz, iyz) = (lin.ixz[i], lin.iyz[i]);
    (
        pd * ix * ix + pg * (ixx * ixx + ixy * ixy),
        pd * ix * iy + pg * (ixx * ixy + ixy * iyy),
        pd * iy * iy + pg * (ixy * ixy + iyy * iyy),
        pd * ix * iz + pg * (ixx * ixz + ixy * iyz),
        pd * iy * iz + pg * (ixy * ixz + iyy * iyz),
    )
}

/// Exact minimization of the reweighted quadratic over a constant shift of
/// the increment. The smoothness term is blind to constant shifts, so this
/// mode is the one SOR relaxes slowest.
fn uniform_correction<T: Scalar>(
    lin: &Linearized<T>,
    du: &mut [T],
    dv: &mut [T],
    psi_d: &[T],
    psi_g: &[T],
    p: &Params<T>,
) {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for i in 0..du.len() {
        let (a11, a12, a22, b1, b2) = data_coefficients(lin, i, psi_d[i], p.gamma * psi_g[i]);
        s11 += a11;
        s12 += a12;
        s22 += a22;
        r1 += a11 * du[i] + a12 * dv[i] + b1;
        r2 += a12 * du[i] + a22 * dv[i] + b2;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > T::epsilon() * s11 * s22) {
        return;
    }
    let cu = (-r1 * s22 + r2 * s12) / det;
    let cv = (-r2 * s11 + r1 * s12) / det;
    du.iter_mut().for_each(|x| *x += cu);
    dv.iter_mut().for_each(|x| *x += cv);
}

#[allow(clippy::too_many_arguments)]
fn sor_sweep<T: Scalar>(
    lin: &Linearized<T>,
    flow: &FlowField<T>,
    du: &mut [T],
    dv: &mut [T],
    psi_d: &[T],
    psi_g: &[T],
    psi_s: &[T],
    w: usize,
    h: usize,
    p: &Params<T>,
) {
    let (u, v) = (flow.u(), flow.v());
    let one = T::one();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let (a11, a12, a22, b1, b2) = data_coefficients(lin, i, psi_d[i], p.gamma * psi_g[i]);

            // The edge (q, q+1) carries the weight of its origin pixel q.
            let mut sum_w = T::zero();
            let mut su = T::zero();
            let mut sv = T::zero();
            let mut visit = |j: usize, wt: T| {
                sum_w += wt;
                su += wt * (u[j] + du[j] - u[i]);
                sv += wt * (v[j] + dv[j] - v[i]);
            };
            if x + 1 < w {
                visit(i + 1, psi_s[i]);
            }
            if x > 0 {
                visit(i - 1, psi_s[i - 1]);
            }
            if y + 1 < h {
                visit(i + w, psi_s[i]);
            }
            if y > 0 {
                visit(i - w, psi_s[i - w]);
            }

            let diag_s = p.alpha * sum_w;
            let du_gs = (p.alpha * su - b1 - a12 * dv[i]) / (a11 + diag_s);
            du[i] = (one - p.omega) * du[i] + p.omega * du_gs;
            let dv_gs = (p.alpha * sv - b2 - a12 * du[i]) / (a22 + diag_s);
            dv[i] = (one - p.omega) * dv[i] + p.omega * dv_gs;
        }
    }
}
