//! Ground states Q_ω of  ΔQ + f(Q²)Q = ωQ,  Q > 0, radial and decaying.
//!
//! For 1D pure powers the closed form
//!   Q_ω(x) = [ (p+1)ω/2 · sech²((p-1)√ω x / 2) ]^(1/(p-1))
//! is used directly.  Otherwise the radial profile is computed by shooting on
//!   Q'' + (d-1)/r · Q' + f(Q²) Q = ω Q,   Q'(0) = 0,
//! with bisection on Q(0): overshooting initial heights cross zero,
//! undershooting ones turn back upward.  The stored profile is extended by a
//! fitted exponential tail beyond the last reliable sample.

use crate::error::Error;
use crate::nonlinearity::{Kind, Nonlinearity};
use crate::Result;

/// Sign of d/dω ∫Q_ω² (the stability dichotomy for the stable branch).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassSlope {
    Positive,
    Negative,
    /// |Δ| below the finite-difference noise floor (e.g. exactly critical).
    Indeterminate,
}

#[derive(Debug, Clone)]
pub enum Profile {
    /// 1D pure-power closed form.
    ClosedFormPower { p: f64, omega: f64 },
    /// Radial samples on a uniform grid r_i = i·step with Hermite
    /// interpolation and exponential tail c·e^(-m r) beyond the last sample.
    Sampled { step: f64, q: Vec<f64>, dq: Vec<f64>, tail_c: f64, tail_m: f64 },
}

#[derive(Debug, Clone)]
pub struct SolverMeta {
    /// ‖ΔQ + f(Q²)Q − ωQ‖_{L²} / ‖Q‖_{L²} measured by finite differences on
    /// the evaluation grid (independent of how the profile was produced).
    pub residual: f64,
    /// Shooting parameter Q(0); for closed forms the analytic value.
    pub q0: f64,
    /// Bisection bracket history (lo, hi), empty for closed forms.
    pub bracket_history: Vec<(f64, f64)>,
}

/// A ground state: radial profile, frequency, nonlinearity and diagnostics.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub omega: f64,
    pub nl: Nonlinearity,
    pub dim: usize,
    pub profile: Profile,
    /// ∫ Q² over ℝ^d.
    pub mass: f64,
    pub solver: SolverMeta,
}

impl GroundState {
    /// Q(r) for r ≥ 0 (radially symmetric).
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match &self.profile {
            Profile::ClosedFormPower { p, omega } => closed_form_q(*p, *omega, r),
            Profile::Sampled { step, q, dq, tail_c, tail_m } => {
                let n = q.len();
                let pos = r / step;
                let i = pos.floor() as usize;
                if i + 1 >= n {
                    return tail_c * (-tail_m * r).exp();
                }
                hermite(q[i], dq[i], q[i + 1], dq[i + 1], *step, pos - i as f64)
            }
        }
    }

    /// Radial derivative Q'(r) for r ≥ 0.
    pub fn eval_deriv(&self, r: f64) -> f64 {
        let r = r.abs();
        match &self.profile {
            Profile::ClosedFormPower { p, omega } => {
                // Q' = -√ω tanh((p-1)√ω r/2) · Q
                let sw = omega.sqrt();
                -sw * ((*p - 1.0) * sw * r / 2.0).tanh() * closed_form_q(*p, *omega, r)
            }
            Profile::Sampled { step, q, dq, tail_c, tail_m } => {
                let n = q.len();
                let pos = r / step;
                let i = pos.floor() as usize;
                if i + 1 >= n {
                    return -tail_m * tail_c * (-tail_m * r).exp();
                }
                // interpolate dq with nodal derivatives q'' from the ODE
                let d2 = |j: usize| {
                    let rj = j as f64 * step;
                    let lap_correction =
                        if j == 0 { 0.0 } else { (self.dim as f64 - 1.0) / rj * dq[j] };
                    self.omega * q[j] - self.nl.f(q[j] * q[j]) * q[j] - lap_correction
                };
                hermite(dq[i], d2(i), dq[i + 1], d2(i + 1), *step, pos - i as f64)
            }
        }
    }

    /// Decay length Q varies on, 1/√ω.
    pub fn decay_length(&self) -> f64 {
        1.0 / self.omega.sqrt()
    }
}

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

fn closed_form_q(p: f64, omega: f64, r: f64) -> f64 {
    let arg = (p - 1.0) * omega.sqrt() * r / 2.0;
    let sech = 1.0 / arg.cosh();
    ((p + 1.0) * omega / 2.0 * sech * sech).powf(1.0 / (p - 1.0))
}

/// Compute the ground state for the given nonlinearity, frequency and
/// dimension.
pub fn solve_ground_state(nl: &Nonlinearity, omega: f64, d: usize) -> Result<GroundState> {
    if d != 1 && d != 2 {
        return Err(Error::InvalidParameter(format!("ground states supported for d in {{1,2}}, got {d}")));
    }
    nl.validate_for_dim(d)?;
    let (lo, hi) = nl.omega_window();
    if !(omega > lo && omega < hi) {
        return Err(Error::OutsideWindow { omega, lo, hi });
    }
    match (nl.kind, d) {
        (Kind::PurePower { p }, 1) => closed_form_ground_state(p, omega, *nl),
        _ => shoot_ground_state(nl, omega, d),
    }
}

fn closed_form_ground_state(p: f64, omega: f64, nl: Nonlinearity) -> Result<GroundState> {
    let mut gs = GroundState {
        omega,
        nl,
        dim: 1,
        profile: Profile::ClosedFormPower { p, omega },
        mass: 0.0,
        solver: SolverMeta {
            residual: 0.0,
            q0: closed_form_q(p, omega, 0.0),
            bracket_history: Vec::new(),
        },
    };
    gs.mass = radial_mass(&gs);
    gs.solver.residual = fd_residual(&gs);
    Ok(gs)
}

/// ∫ Q² over ℝ^d by radial quadrature (trapezoid on a fine uniform grid; the
/// integrand is smooth with exponentially decaying tails, so endpoint
/// corrections vanish).
fn radial_mass(gs: &GroundState) -> f64 {
    let sw = gs.omega.sqrt();
    let rmax = 45.0 / sw;
    let n = 60_000usize;
    let h = rmax / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let q = gs.eval(r);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let measure = if gs.dim == 1 { 1.0 } else { r };
        total += w * q * q * measure;
    }
    total *= h;
    match gs.dim {
        1 => 2.0 * total,
        _ => 2.0 * std::f64::consts::PI * total,
    }
}

/// Generic weighted radial quadrature ∫ g(r, Q, Q') dμ_d over ℝ^d.
pub fn radial_quadrature(gs: &GroundState, mut g: impl FnMut(f64, f64, f64) -> f64) -> f64 {
    let sw = gs.omega.sqrt();
    let rmax = 45.0 / sw;
    let n = 60_000usize;
    let h = rmax / n as f64;
    let mut total = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let measure = if gs.dim == 1 { 1.0 } else { r };
        total += w * g(r, gs.eval(r), gs.eval_deriv(r)) * measure;
    }
    total *= h;
    match gs.dim {
        1 => 2.0 * total,
        _ => 2.0 * std::f64::consts::PI * total,
    }
}

/// PDE residual by 4th-order finite differences of the sampled profile; this
/// is independent of the construction path (closed form or shooting).
fn fd_residual(gs: &GroundState) -> f64 {
    let sw = gs.omega.sqrt();
    let h = 2e-3 / sw;
    let rmax = 12.0 / sw;
    let n = (rmax / h) as usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 3..n {
        let r = i as f64 * h;
        let qm2 = gs.eval(r - 2.0 * h);
        let qm1 = gs.eval(r - h);
        let q0 = gs.eval(r);
        let qp1 = gs.eval(r + h);
        let qp2 = gs.eval(r + 2.0 * h);
        let d2 = (-qm2 + 16.0 * qm1 - 30.0 * q0 + 16.0 * qp1 - qp2) / (12.0 * h * h);
        let d1 = (qm2 - 8.0 * qm1 + 8.0 * qp1 - qp2) / (12.0 * h);
        let lap = d2 + (gs.dim as f64 - 1.0) / r * d1;
        let res = lap + gs.nl.f(q0 * q0) * q0 - gs.omega * q0;
        let measure = if gs.dim == 1 { 1.0 } else { r };
        num += res * res * measure;
        den += q0 * q0 * measure;
    }
    (num / den).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ShotOutcome {
    Overshoot,
    Undershoot,
    Flat,
}

fn shoot_once(
    nl: &Nonlinearity,
    omega: f64,
    d: usize,
    q0: f64,
    h: f64,
    rmax: f64,
    record: Option<&mut (Vec<f64>, Vec<f64>)>,
) -> ShotOutcome {
    let eps = 1e-6;
    let c = (omega * q0 - nl.f(q0 * q0) * q0) / (2.0 * d as f64);
    let mut r = eps;
    let mut q = q0 + eps * eps * c;
    let mut dq = 2.0 * eps * c;
    let mut rec = record;
    if let Some((qs, dqs)) = rec.as_deref_mut() {
        qs.push(q0);
        dqs.push(0.0);
        // samples are stored on the uniform grid r_i = i·h starting at i=1
    }
    let rhs = |r: f64, q: f64, dq: f64| -> (f64, f64) {
        (dq, omega * q - nl.f(q * q) * q - (d as f64 - 1.0) / r * dq)
    };
    let mut next_sample = h;
    while r < rmax {
        let step = h.min(next_sample - r).max(1e-12);
        // classical RK4
        let (k1q, k1d) = rhs(r, q, dq);
        let (k2q, k2d) = rhs(r + step / 2.0, q + step / 2.0 * k1q, dq + step / 2.0 * k1d);
        let (k3q, k3d) = rhs(r + step / 2.0, q + step / 2.0 * k2q, dq + step / 2.0 * k2d);
        let (k4q, k4d) = rhs(r + step, q + step * k3q, dq + step * k3d);
        q += step / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        dq += step / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        r += step;
        if (r - next_sample).abs() < 1e-9 {
            if let Some((qs, dqs)) = rec.as_deref_mut() {
                qs.push(q);
                dqs.push(dq);
            }
            next_sample += h;
        }
        if q <= 0.0 {
            return ShotOutcome::Overshoot;
        }
        if dq > 0.0 {
            return ShotOutcome::Undershoot;
        }
        if q < 1e-14 * q0 {
            break;
        }
    }
    ShotOutcome::Flat
}

fn shoot_ground_state(nl: &Nonlinearity, omega: f64, d: usize) -> Result<GroundState> {
    let sw = omega.sqrt();
    let rmax = 30.0 / sw;
    let h = 2e-3 / sw;

    // Initial descent requires f(q0²) > ω; scan that region for the
    // overshoot/undershoot bracket.
    let scan_max = match nl.kind {
        Kind::PurePower { p } => 4.0 * omega.powf(1.0 / (p - 1.0)),
        Kind::CubicQuintic => 1.0, // f(r) = r - r² keeps f < 1/4 on r < 1
        Kind::Zero => return Err(Error::OutsideWindow { omega, lo: 0.0, hi: 0.0 }),
    };
    let mut bracket: Option<(f64, f64)> = None;
    let steps = 400;
    let mut prev: Option<(f64, ShotOutcome)> = None;
    for i in 1..=steps {
        let q0 = scan_max * i as f64 / steps as f64;
        if nl.f(q0 * q0) <= omega {
            continue;
        }
        let out = shoot_once(nl, omega, d, q0, h, rmax, None);
        if out == ShotOutcome::Flat {
            continue;
        }
        if let Some((pq, pout)) = prev {
            if pout == ShotOutcome::Undershoot && out == ShotOutcome::Overshoot {
                bracket = Some((pq, q0));
                break;
            }
        }
        prev = Some((q0, out));
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::ShootingFailed {
        detail: format!("no undershoot/overshoot bracket foundscanning q0 in (0, {scan_max}]"),
        history: Vec::new(),
    })?;

    let mut history = vec![(lo, hi)];
    while (hi - lo) > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        match shoot_once(nl, omega, d, mid, h, rmax, None) {
            ShotOutcome::Overshoot => hi = mid,
            _ => lo = mid,
        }
        history.push((lo, hi));
        if history.len() > 200 {
            return Err(Error::ShootingFailed {
                detail: "bisection failed to tighten bracket".into(),
                history,
            });
        }
    }
    let q0 = 0.5 * (lo + hi);

    // Final pass storing the profile; cut where the numerical solution stops
    // decreasing (the unstable manifold eventually diverges).
    let mut samples = (Vec::new(), Vec::new());
    shoot_once(nl, omega, d, q0, h, rmax, Some(&mut samples));
    let (mut q, mut dq) = samples;
    let floor = 1e-10 * q0;
    let mut cut = q.len();
    for i in 1..q.len() {
        if q[i] <= floor || q[i] > q[i - 1] {
            cut = i;
            break;
        }
    }
    q.truncate(cut);
    dq.truncate(cut);
    if q.len() < 32 {
        return Err(Error::ShootingFailed {
            detail: format!("profile too short after cut: {} samples", q.len()),
            history,
        });
    }

    // Exponential tail fit over the last clean decade.
    let i2 = q.len() - 1;
    let i1 = (q.len() * 9) / 10;
    let r1 = i1 as f64 * h;
    let r2 = i2 as f64 * h;
    let m = -(q[i2].ln() - q[i1].ln()) / (r2 - r1);
    let c = q[i2] * (m * r2).exp();

    let mut gs = GroundState {
        omega,
        nl: *nl,
        dim: d,
        profile: Profile::Sampled { step: h, q, dq, tail_c: c, tail_m: m },
        mass: 0.0,
        solver: SolverMeta { residual: 0.0, q0, bracket_history: history },
    };
    gs.mass = radial_mass(&gs);
    gs.solver.residual = fd_residual(&gs);
    Ok(gs)
}

/// Rescale a pure-power ground state:  Q_ω(x) = ω^(1/(p-1)) Q₁(√ω x).
pub fn rescale_ground_state(base: &GroundState, omega: f64) -> Result<GroundState> {
    let p = base
        .nl
        .power()
        .ok_or_else(|| Error::Precondition("rescaling requires a pure power nonlinearity".into()))?;
    if !(omega > 0.0) {
        return Err(Error::OutsideWindow { omega, lo: 0.0, hi: f64::INFINITY });
    }
    let ratio = omega / base.omega;
    let amp = ratio.powf(1.0 / (p - 1.0));
    let stretch = ratio.sqrt();
    let profile = match &base.profile {
        Profile::ClosedFormPower { p, .. } => Profile::ClosedFormPower { p: *p, omega },
        Profile::Sampled { step, q, dq, tail_c, tail_m } => Profile::Sampled {
            step: step / stretch,
            q: q.iter().map(|v| amp * v).collect(),
            dq: dq.iter().map(|v| amp * stretch * v).collect(),
            tail_c: amp * tail_c,
            tail_m: tail_m * stretch,
        },
    };
    let mut gs = GroundState {
        omega,
        nl: base.nl,
        dim: base.dim,
        profile,
        mass: 0.0,
        solver: SolverMeta {
            residual: 0.0,
            q0: amp * base.solver.q0,
            bracket_history: Vec::new(),
        },
    };
    gs.mass = radial_mass(&gs);
    gs.solver.residual = fd_residual(&gs);
    Ok(gs)
}

/// Sign of d/dω ∫ Q_ω²: analytic for pure powers (sign of 2/(p-1) − d/2),
/// centered finite difference of solver masses otherwise.
pub fn mass_derivative_sign(nl: &Nonlinearity, omega: f64, d: usize) -> Result<MassSlope> {
    match nl.kind {
        Kind::PurePower { p } => {
            let s = 2.0 / (p - 1.0) - d as f64 / 2.0;
            Ok(if s.abs() < 1e-12 {
                MassSlope::Indeterminate
            } else if s > 0.0 {
                MassSlope::Positive
            } else {
                MassSlope::Negative
            })
        }
        _ => {
            let delta = 1e-3 * omega;
            let hi = solve_ground_state(nl, omega + delta, d)?;
            let lo = solve_ground_state(nl, omega - delta, d)?;
            let diff = hi.mass - lo.mass;
            let noise = 1e-6 * hi.mass.max(lo.mass);
            Ok(if diff.abs() < noise {
                MassSlope::Indeterminate
            } else if diff > 0.0 {
                MassSlope::Positive
            } else {
                MassSlope::Negative
            })
        }
    }
}
