//! The diagnostic functionals of multi-soliton analysis.
//!
//! * The modified H^s energy
//!     G_s(u) = ∫ Σ_{|α|=s} (s α)|∂^α u|²
//!              − Σ_{|β|=s-1} (s-1 β) Re(u² (∂^β conj(u))²) f'(|u|²),
//!   whose time derivative contains no quadratic terms in the top-order
//!   derivatives; it is exactly conserved along a single soliton.
//! * A moving partition of unity 1 = Σ_k φ_k built from a smooth step ψ with
//!   compactly supported derivative (bump exp(−A0²/(A0²−y²))), each interface
//!   traveling at the mid-speed between neighboring solitons and widening
//!   linearly in t; derivatives of φ_k are O(1/t) and are evaluated by
//!   analytic chain rule, never spectrally.
//! * The localized Weinstein energy H and its nonlinear-difference variant H̃,
//!   plus the dominant cutoff-motion term Main(t) of dH̃/dt.

use num_complex::Complex64;

use crate::error::Error;
use crate::grid::{self, Field, Grid};
use crate::groundstate::GroundState;
use crate::nonlinearity::Nonlinearity;
use crate::soliton::{evaluate_soliton, MultiSolitonConfig};
use crate::Result;

/// Value with a per-term breakdown; the parts sum to the value.
#[derive(Debug, Clone)]
pub struct FunctionalReport {
    pub value: f64,
    pub time: f64,
    pub parts: Vec<(String, f64)>,
}

impl FunctionalReport {
    pub fn part(&self, name: &str) -> Option<f64> {
        self.parts.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Multi-indices of exact order `s` in `d` axes with multinomial weights
/// (s α) = s!/(α₁!…α_d!), in lexicographic order.
pub fn multi_indices(s: usize, d: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    match d {
        1 => out.push((vec![s], 1.0)),
        _ => {
            for a in (0..=s).rev() {
                let b = s - a;
                let w = factorial(s) / (factorial(a) * factorial(b));
                out.push((vec![a, b], w));
            }
        }
    }
    out
}

/// Evaluate G_s.  Parts: "derivative" (the |∂^α u|² sum, computed with the
/// |k|^{2s} multiplier, identical to the multinomial sum by the multinomial
/// theorem) and "nonlinear" (the f' correction).
pub fn eval_modified_energy(field: &Field, nl: &Nonlinearity, s: usize) -> Result<FunctionalReport> {
    let d = field.grid.dim();
    if s < 2 {
        return Err(Error::InvalidParameter("modified energy needs s >= 2".into()));
    }
    let max_s = if d == 1 { 4 } else { 3 };
    if s > max_s {
        return Err(Error::DerivativeOrder { requested: s, max: max_s });
    }
    let derivative_part = grid::homogeneous_sobolev_sq(field, s)?;

    let fprime: Vec<f64> = field.values.iter().map(|u| nl.f_prime(u.norm_sqr())).collect();
    let mut nonlinear_part = 0.0;
    for (beta, w) in multi_indices(s - 1, d) {
        let db = grid::spectral_derivative(field, &beta)?;
        let mut acc = 0.0;
        for i in 0..field.values.len() {
            let u = field.values[i];
            let dbar = db.values[i].conj();
            acc += (u * u * dbar * dbar).re * fprime[i];
        }
        nonlinear_part -= w * acc * field.grid.quad_weight();
    }

    Ok(FunctionalReport {
        value: derivative_part + nonlinear_part,
        time: field.time,
        parts: vec![
            ("derivative".into(), derivative_part),
            ("nonlinear".into(), nonlinear_part),
        ],
    })
}

/// Log-envelope fit of a drift series |G(t) − G(t_ref)|.
#[derive(Debug, Clone)]
pub struct DriftReport {
    pub times: Vec<f64>,
    pub drift: Vec<f64>,
    /// Fitted exponent of |drift| ~ e^{rate·t} (negative = decaying).
    pub rate: f64,
    pub n_fit_points: usize,
    pub reliable: bool,
}

/// Least-squares slope/intercept of y against t.
pub fn log_linear_fit(ts: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if ts.len() < 2 {
        return None;
    }
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in ts.iter().zip(ys) {
        num += (t - mt) * (y - my);
        den += (t - mt) * (t - mt);
    }
    if den == 0.0 {
        return None;
    }
    let slope = num / den;
    Some((slope, my - slope * mt))
}

/// Fit the decay exponent of G_s(t) − G_s(t_ref) over a trajectory, where
/// t_ref is the sample with the largest t (the final data of a backward run).
///
/// Points below 10× the series floor are excluded (integrator noise), as are
/// times where the configured solitons are closer than `min_separation`.
pub fn eval_modified_energy_drift(
    samples: &[(f64, f64)],
    config: Option<(&MultiSolitonConfig, f64)>,
) -> Result<DriftReport> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData("need at least 3 G samples".into()));
    }
    let (t_ref, g_ref) = samples
        .iter()
        .cloned()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap();
    let mut times = Vec::new();
    let mut drift = Vec::new();
    for &(t, g) in samples {
        if (t - t_ref).abs() < 1e-12 {
            continue;
        }
        times.push(t);
        drift.push((g - g_ref).abs());
    }
    let floor = drift.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-300);
    let mut fit_t = Vec::new();
    let mut fit_y = Vec::new();
    let mut separated_ok = true;
    for (&t, &dv) in times.iter().zip(&drift) {
        if dv < 10.0 * floor {
            continue;
        }
        if let Some((cfg, min_sep)) = config {
            let mut sep = f64::INFINITY;
            for i in 0..cfg.count() {
                for j in (i + 1)..cfg.count() {
                    let ci = cfg.solitons[i].center(t);
                    let cj = cfg.solitons[j].center(t);
                    let s: f64 =
                        ci.iter().zip(&cj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    sep = sep.min(s);
                }
            }
            if cfg.count() > 1 && sep < min_sep {
                separated_ok = false;
                continue;
            }
        }
        fit_t.push(t);
        fit_y.push(dv.ln());
    }
    let reliable = fit_t.len() >= 5;
    let rate = if reliable {
        log_linear_fit(&fit_t, &fit_y)
            .ok_or(Error::InsufficientData("degenerate drift fit".into()))?
            .0
    } else {
        f64::NAN
    };
    Ok(DriftReport {
        times,
        drift,
        rate,
        n_fit_points: fit_t.len(),
        reliable: reliable && separated_ok,
    })
}

/// Moving partition of unity adapted to a soliton configuration.
///
/// Solitons are ordered by their first velocity component; between
/// neighbors k and k+1 an interface rides at the mid-speed σ_k from the
/// midpoint ξ_k, smoothed over the window |y| < A0 in the similarity
/// variable y = (x₁ − ξ_k − σ_k t)/t.
#[derive(Debug, Clone)]
pub struct CutoffFamily {
    pub a0: f64,
    /// Interface mid-speeds σ_k, k = 1..K-1 (in velocity-sorted order).
    pub sigma: Vec<f64>,
    /// Interface midpoints ξ_k.
    pub xi: Vec<f64>,
    /// Permutation mapping sorted slots to original soliton indices.
    pub order: Vec<usize>,
    /// ψ table on [-A0, A0]: cumulative normalized integral of the bump.
    table: Vec<f64>,
    bump: Vec<f64>,
    norm: f64,
}

impl CutoffFamily {
    pub fn new(config: &MultiSolitonConfig, a0: f64) -> Result<Self> {
        let k_count = config.count();
        let mut order: Vec<usize> = (0..k_count).collect();
        order.sort_by(|&i, &j| {
            config.solitons[i].v[0].partial_cmp(&config.solitons[j].v[0]).unwrap()
        });
        let mut min_gap = f64::INFINITY;
        for w in order.windows(2) {
            let gap = config.solitons[w[1]].v[0] - config.solitons[w[0]].v[0];
            min_gap = min_gap.min(gap);
        }
        if k_count > 1 && !(a0 > 0.0 && a0 < 0.5 * min_gap) {
            return Err(Error::InvalidParameter(format!(
                "cutoff half-width A0={a0} outside (0, {}) (half the minimal velocity gap)",
                0.5 * min_gap
            )));
        }
        // tabulate the bump and its cumulative integral on [-A0, A0];
        // the bump vanishes to all orders at the endpoints, so the
        // trapezoid sum is accurate to rounding
        let mut sigma = Vec::new();
        let mut xi = Vec::new();
        for w in order.windows(2) {
            let (a, b) = (&config.solitons[w[0]], &config.solitons[w[1]]);
            sigma.push(0.5 * (a.v[0] + b.v[0]));
            xi.push(0.5 * (a.x0[0] + b.x0[0]));
        }
        let n_tab = 10_000usize;
        let h = 2.0 * a0 / n_tab as f64;
        let bump: Vec<f64> = (0..=n_tab)
            .map(|i| {
                let y = -a0 + i as f64 * h;
                let denom = a0 * a0 - y * y;
                if denom <= 0.0 {
                    0.0
                } else {
                    (-a0 * a0 / denom).exp()
                }
            })
            .collect();
        let mut table = Vec::with_capacity(n_tab + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 1..=n_tab {
            acc += 0.5 * (bump[i - 1] + bump[i]) * h;
            table.push(acc);
        }
        let norm = acc;
        Ok(CutoffFamily { a0, sigma, xi, order, table, bump, norm })
    }

    /// ψ(y): 1 for y < −A0, 0 for y > A0, normalized bump integral between.
    pub fn psi(&self, y: f64) -> f64 {
        if y <= -self.a0 {
            return 1.0;
        }
        if y >= self.a0 {
            return 0.0;
        }
        let n_tab = self.table.len() - 1;
        let h = 2.0 * self.a0 / n_tab as f64;
        let pos = (y + self.a0) / h;
        let i = (pos.floor() as usize).min(n_tab - 1);
        let t = pos - i as f64;
        // cubic Hermite with exact nodal slopes (the bump itself)
        let y0 = self.table[i];
        let y1 = self.table[i + 1];
        let d0 = self.bump[i];
        let d1 = self.bump[i + 1];
        let t2 = t * t;
        let t3 = t2 * t;
        let cum = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1;
        1.0 - cum / self.norm
    }

    /// ψ', ψ'', ψ''' by analytic chain rule on the bump.
    pub fn psi_derivatives(&self, y: f64) -> (f64, f64, f64) {
        if y.abs() >= self.a0 {
            return (0.0, 0.0, 0.0);
        }
        let a2 = self.a0 * self.a0;
        let denom = a2 - y * y;
        let b = (-a2 / denom).exp();
        // g(y) = -a²/(a²-y²); b = e^g
        let g1 = -2.0 * a2 * y / (denom * denom);
        let g2 = -2.0 * a2 * (1.0 / (denom * denom) + 4.0 * y * y / (denom * denom * denom));
        let d1 = -b / self.norm;
        let d2 = -b * g1 / self.norm;
        let d3 = -b * (g1 * g1 + g2) / self.norm;
        (d1, d2, d3)
    }

    pub fn count(&self) -> usize {
        self.order.len()
    }
}

/// Sampled cutoffs φ_k and their derivatives at a fixed time, indexed in the
/// ORIGINAL soliton order of the configuration.
#[derive(Debug, Clone)]
pub struct CutoffFields {
    pub grid: Grid,
    pub time: f64,
    /// φ_k (real-valued samples).
    pub phi: Vec<Vec<f64>>,
    pub dphi_dx1: Vec<Vec<f64>>,
    pub d3phi_dx1: Vec<Vec<f64>>,
    pub dphi_dt: Vec<Vec<f64>>,
}

/// Evaluate the partition at time t > 0.  In sorted order,
/// φ_k = ψ_k − ψ_{k-1} with ψ_0 ≡ 0, ψ_K ≡ 1 and
/// ψ_k(t,x) = ψ((x₁ − ξ_k − σ_k t)/t); the telescoping sum is exactly 1.
pub fn eval_cutoffs(cf: &CutoffFamily, grid: Grid, t: f64) -> Result<CutoffFields> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("cutoffs are t-rescaled; need t > 0, got {t}")));
    }
    let k_count = cf.count();
    let len = grid.len();
    let n = grid.n_points();
    let mut phi = vec![vec![0.0; len]; k_count];
    let mut dphi = vec![vec![0.0; len]; k_count];
    let mut d3phi = vec![vec![0.0; len]; k_count];
    let mut dtphi = vec![vec![0.0; len]; k_count];

    // per-interface values along x1
    let mut psi_rows = vec![vec![0.0; n]; k_count + 1];
    let mut d1_rows = vec![vec![0.0; n]; k_count + 1];
    let mut d3_rows = vec![vec![0.0; n]; k_count + 1];
    let mut dt_rows = vec![vec![0.0; n]; k_count + 1];
    for j in 0..=k_count {
        for i1 in 0..n {
            let x1 = grid.coord(i1);
            if j == 0 {
                psi_rows[j][i1] = 0.0;
            } else if j == k_count {
                psi_rows[j][i1] = 1.0;
            } else {
                let y = (x1 - cf.xi[j - 1] - cf.sigma[j - 1] * t) / t;
                psi_rows[j][i1] = cf.psi(y);
                let (p1, _, p3) = cf.psi_derivatives(y);
                d1_rows[j][i1] = p1 / t;
                d3_rows[j][i1] = p3 / (t * t * t);
                dt_rows[j][i1] = -(y + cf.sigma[j - 1]) / t * p1;
            }
        }
    }

    for slot in 0..k_count {
        let orig = cf.order[slot];
        for i1 in 0..n {
            let p = psi_rows[slot + 1][i1] - psi_rows[slot][i1];
            let d1 = d1_rows[slot + 1][i1] - d1_rows[slot][i1];
            let d3 = d3_rows[slot + 1][i1] - d3_rows[slot][i1];
            let dt = dt_rows[slot + 1][i1] - dt_rows[slot][i1];
            match grid.dim() {
                1 => {
                    phi[orig][i1] = p;
                    dphi[orig][i1] = d1;
                    d3phi[orig][i1] = d3;
                    dtphi[orig][i1] = dt;
                }
                _ => {
                    for i2 in 0..n {
                        let idx = grid.index(i1, i2);
                        phi[orig][idx] = p;
                        dphi[orig][idx] = d1;
                        d3phi[orig][idx] = d3;
                        dtphi[orig][idx] = dt;
                    }
                }
            }
        }
    }
    Ok(CutoffFields { grid, time: t, phi, dphi_dx1: dphi, d3phi_dx1: d3phi, dphi_dt: dtphi })
}

/// Localized Weinstein energy
///   H = Σ_k ∫ { |∇z̃|² − ( f(|R_k|²)|z̃|² + 2 Re(conj(R_k) z̃)² f'(|R_k|²) )
///               + (ω_k + |v_k|²/4)|z̃|² − v_k·Im(∇z̃ conj(z̃)) } φ_k.
///
/// Parts: one entry per soliton, in configuration order.
pub fn eval_weinstein(
    ztilde: &Field,
    config: &MultiSolitonConfig,
    gs: &[GroundState],
    cutoffs: &CutoffFields,
    nl: &Nonlinearity,
) -> Result<FunctionalReport> {
    let grid = ztilde.grid;
    let t = ztilde.time;
    let d = grid.dim();
    let mut grads = Vec::with_capacity(d);
    for axis in 0..d {
        grads.push(grid::gradient_axis(ztilde, axis)?);
    }
    let w = grid.quad_weight();
    let mut parts = Vec::with_capacity(config.count());
    let mut total = 0.0;
    for (k, (params, g)) in config.solitons.iter().zip(gs).enumerate() {
        let rk = evaluate_soliton(params, g, grid, t)?;
        let omega_shift = params.omega + params.speed_sq() / 4.0;
        let phi = &cutoffs.phi[k];
        let mut acc = 0.0;
        for i in 0..ztilde.values.len() {
            let z = ztilde.values[i];
            let r2 = rk.values[i].norm_sqr();
            let mut val = 0.0;
            for gr in &grads {
                val += gr.values[i].norm_sqr();
            }
            let re_rz = (rk.values[i].conj() * z).re;
            val -= nl.f(r2) * z.norm_sqr() + 2.0 * re_rz * re_rz * nl.f_prime(r2);
            val += omega_shift * z.norm_sqr();
            for (axis, gr) in grads.iter().enumerate() {
                val -= params.v[axis] * (gr.values[i] * z.conj()).im;
            }
            acc += val * phi[i];
        }
        let contribution = acc * w;
        parts.push((format!("soliton_{k}"), contribution));
        total += contribution;
    }
    Ok(FunctionalReport { value: total, time: t, parts })
}

/// Nonlinear-difference Weinstein energy
///   H̃ = Σ_k ∫ { |∇z̃|² − ( F(|z̃+φ|²) − F(|φ|²) − 2 Re(z̃ conj(φ)) f(|φ|²) )
///               + (ω_k + |v_k|²/4)|z̃|² − v_k·Im(∇z̃ conj(z̃)) } φ_k,
/// where φ is the reference multi-soliton field.
pub fn eval_weinstein_nonlinear(
    ztilde: &Field,
    varphi: &Field,
    config: &MultiSolitonConfig,
    cutoffs: &CutoffFields,
    nl: &Nonlinearity,
) -> Result<FunctionalReport> {
    let grid = ztilde.grid;
    let d = grid.dim();
    let mut grads = Vec::with_capacity(d);
    for axis in 0..d {
        grads.push(grid::gradient_axis(ztilde, axis)?);
    }
    let w = grid.quad_weight();
    let mut parts = Vec::with_capacity(config.count());
    let mut total = 0.0;
    for (k, params) in config.solitons.iter().enumerate() {
        let omega_shift = params.omega + params.speed_sq() / 4.0;
        let phi_k = &cutoffs.phi[k];
        let mut acc = 0.0;
        for i in 0..ztilde.values.len() {
            let z = ztilde.values[i];
            let ph = varphi.values[i];
            let mut val = 0.0;
            for gr in &grads {
                val += gr.values[i].norm_sqr();
            }
            let nl_diff = nl.big_f((z + ph).norm_sqr())
                - nl.big_f(ph.norm_sqr())
                - 2.0 * (z * ph.conj()).re * nl.f(ph.norm_sqr());
            val -= nl_diff;
            val += omega_shift * z.norm_sqr();
            for (axis, gr) in grads.iter().enumerate() {
                val -= params.v[axis] * (gr.values[i] * z.conj()).im;
            }
            acc += val * phi_k[i];
        }
        let contribution = acc * w;
        parts.push((format!("soliton_{k}"), contribution));
        total += contribution;
    }
    Ok(FunctionalReport { value: total, time: ztilde.time, parts })
}

/// |H − H̃| together with the cubic scale ‖z̃‖³_{H¹} it should follow.
#[derive(Debug, Clone)]
pub struct EnergyGapReport {
    pub h: f64,
    pub h_nonlinear: f64,
    pub gap: f64,
    pub ztilde_h1_cubed: f64,
}

pub fn compare_weinstein(
    ztilde: &Field,
    varphi: &Field,
    config: &MultiSolitonConfig,
    gs: &[GroundState],
    cutoffs: &CutoffFields,
    nl: &Nonlinearity,
) -> Result<EnergyGapReport> {
    let h = eval_weinstein(ztilde, config, gs, cutoffs, nl)?.value;
    let ht = eval_weinstein_nonlinear(ztilde, varphi, config, cutoffs, nl)?.value;
    let h1 = grid::sobolev_norm(ztilde, 1)?;
    Ok(EnergyGapReport { h, h_nonlinear: ht, gap: (h - ht).abs(), ztilde_h1_cubed: h1.powi(3) })
}

/// The dominant cutoff-motion term of dH̃/dt:
///   Main(t) = Σ_k (ω_k + |v_k|²/4) ( ∫|z̃|² ∂_tφ_k + 2∫Im(∂_{x₁}z̃ conj(z̃)) ∂_{x₁}φ_k )
///           − Σ_k v_{k,1} ( 2∫|∇z̃|² ∂_{x₁}φ_k − ½∫|z̃|² ∂³_{x₁}φ_k )
///           − Σ_k v_k · ∫ Im(∇z̃ conj(z̃)) ∂_tφ_k.
pub fn eval_main_term(
    ztilde: &Field,
    config: &MultiSolitonConfig,
    cutoffs: &CutoffFields,
) -> Result<f64> {
    let grid = ztilde.grid;
    let d = grid.dim();
    let mut grads = Vec::with_capacity(d);
    for axis in 0..d {
        grads.push(grid::gradient_axis(ztilde, axis)?);
    }
    let w = grid.quad_weight();
    let mut main = 0.0;
    for (k, params) in config.solitons.iter().enumerate() {
        let omega_shift = params.omega + params.speed_sq() / 4.0;
        let mut t1 = 0.0; // ∫|z̃|² ∂_tφ
        let mut t2 = 0.0; // ∫Im(∂_{x1}z̃ conj z̃) ∂_{x1}φ
        let mut t3 = 0.0; // ∫|∇z̃|² ∂_{x1}φ
        let mut t4 = 0.0; // ∫|z̃|² ∂³_{x1}φ
        let mut t5 = vec![0.0; d]; // ∫Im(∂_a z̃ conj z̃) ∂_tφ
        for i in 0..ztilde.values.len() {
            let z = ztilde.values[i];
            let zsq = z.norm_sqr();
            let dphi = cutoffs.dphi_dx1[k][i];
            let dtphi = cutoffs.dphi_dt[k][i];
            t1 += zsq * dtphi;
            t2 += (grads[0].values[i] * z.conj()).im * dphi;
            let mut gsq = 0.0;
            for gr in &grads {
                gsq += gr.values[i].norm_sqr();
            }
            t3 += gsq * dphi;
            t4 += zsq * cutoffs.d3phi_dx1[k][i];
            for (axis, gr) in grads.iter().enumerate() {
                t5[axis] += (gr.values[i] * z.conj()).im * dtphi;
            }
        }
        main += omega_shift * (t1 + 2.0 * t2);
        main -= params.v[0] * (2.0 * t3 - 0.5 * t4);
        for axis in 0..d {
            main -= params.v[axis] * t5[axis];
        }
    }
    Ok(main * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::solve_ground_state;
    use crate::soliton::SolitonParams;

    fn cubic_setup() -> (Nonlinearity, GroundState) {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        (nl, solve_ground_state(&nl, 1.0, 1).unwrap())
    }

    fn two_soliton_config(omega: f64) -> MultiSolitonConfig {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        MultiSolitonConfig::new(
            vec![
                SolitonParams { omega, v: vec![-1.0], x0: vec![-3.0], gamma: 0.0 },
                SolitonParams { omega, v: vec![1.0], x0: vec![3.0], gamma: 0.2 },
            ],
            nl,
        )
        .unwrap()
    }

    #[test]
    fn modified_energy_of_zero_field() {
        let (nl, _) = cubic_setup();
        let grid = Grid::new_1d(128, 15.0).unwrap();
        let g = eval_modified_energy(&Field::zeros(grid, 0.0), &nl, 2).unwrap();
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn modified_energy_of_static_ground_state() {
        // p=3, s=2, u=Q: G = ∫(Q'')² − ∫Q²(Q')² = 28/15 − 16/15 = 4/5,
        // from ∫sech² = 2, ∫sech⁴ = 4/3, ∫sech⁶ = 16/15.
        let (nl, gs) = cubic_setup();
        let grid = Grid::new_1d(1024, 25.0).unwrap();
        let params = SolitonParams { omega: 1.0, v: vec![0.0], x0: vec![0.0], gamma: 0.0 };
        let u = evaluate_soliton(&params, &gs, grid, 0.0).unwrap();
        let g = eval_modified_energy(&u, &nl, 2).unwrap();
        assert!((g.value - 0.8).abs() < 1e-8, "G = {}", g.value);
        assert!((g.part("derivative").unwrap() - 28.0 / 15.0).abs() < 1e-8);
        assert!((g.part("nonlinear").unwrap() + 16.0 / 15.0).abs() < 1e-8);
    }

    #[test]
    fn modified_energy_conserved_along_soliton() {
        let (nl, gs) = cubic_setup();
        let grid = Grid::new_1d(1024, 40.0).unwrap();
        let params = SolitonParams { omega: 1.0, v: vec![4.0], x0: vec![-10.0], gamma: 0.3 };
        let g0 = eval_modified_energy(
            &evaluate_soliton(&params, &gs, grid, 0.0).unwrap(),
            &nl,
            2,
        )
        .unwrap()
        .value;
        for t in [1.0, 2.5, 4.0] {
            let gt = eval_modified_energy(
                &evaluate_soliton(&params, &gs, grid, t).unwrap(),
                &nl,
                2,
            )
            .unwrap()
            .value;
            assert!((gt - g0).abs() < 1e-7 * g0.abs(), "drift {} at t={t}", gt - g0);
        }
    }

    #[test]
    fn modified_energy_reduces_to_derivative_sum_for_zero_nonlinearity() {
        let grid = Grid::new_1d(256, 15.0).unwrap();
        let u = Field::from_fn(grid, 0.0, |x, _| {
            Complex64::new((-x * x / 2.0).exp(), 0.4 * (x * 0.9).sin() * (-x * x / 4.0).exp())
        });
        let g = eval_modified_energy(&u, &Nonlinearity::zero(), 3).unwrap();
        assert_eq!(g.part("nonlinear").unwrap(), 0.0);
        assert!((g.value - g.part("derivative").unwrap()).abs() < 1e-15);
    }

    #[test]
    fn multinomial_weights_in_2d() {
        let mi = multi_indices(2, 2);
        assert_eq!(mi.len(), 3);
        assert_eq!(mi[0].0, vec![2, 0]);
        assert_eq!(mi[0].1, 1.0);
        assert_eq!(mi[1].0, vec![1, 1]);
        assert_eq!(mi[1].1, 2.0);
        // 2D derivative part via multiplier equals the explicit multinomial sum
        let grid = Grid::new_2d(64, 8.0).unwrap();
        let u = Field::from_fn(grid, 0.0, |x, y| {
            Complex64::new((-(x * x + 0.7 * y * y) / 2.0).exp(), 0.1 * (x + y))
        });
        let via_multiplier = grid::homogeneous_sobolev_sq(&u, 2).unwrap();
        let mut explicit = 0.0;
        for (alpha, w) in multi_indices(2, 2) {
            let da = grid::spectral_derivative(&u, &alpha).unwrap();
            explicit += w * grid::l2_norm(&da).powi(2);
        }
        assert!((via_multiplier - explicit).abs() < 1e-10 * explicit.abs());
    }

    #[test]
    fn cutoff_step_shape_and_midpoint() {
        let cfg = two_soliton_config(1.0);
        let cf = CutoffFamily::new(&cfg, 0.5).unwrap();
        assert_eq!(cf.psi(-0.6), 1.0);
        assert_eq!(cf.psi(0.6), 0.0);
        assert!((cf.psi(0.0) - 0.5).abs() < 1e-12, "psi(0) = {}", cf.psi(0.0));
        assert!(cf.psi(-0.2) > cf.psi(0.2));
    }

    #[test]
    fn cutoff_family_rejects_wide_window() {
        let cfg = two_soliton_config(1.0);
        // velocity gap 2 → legal window (0, 1)
        assert!(CutoffFamily::new(&cfg, 1.0).is_err());
        assert!(CutoffFamily::new(&cfg, 0.99).is_ok());
    }

    #[test]
    fn partition_of_unity_is_exact() {
        let cfg = two_soliton_config(1.0);
        let cf = CutoffFamily::new(&cfg, 0.5).unwrap();
        let grid = Grid::new_1d(512, 40.0).unwrap();
        for t in [5.0, 10.0, 20.0] {
            let fields = eval_cutoffs(&cf, grid, t).unwrap();
            for i in 0..grid.len() {
                let total: f64 = fields.phi.iter().map(|p| p[i]).sum();
                assert!((total - 1.0).abs() < 1e-12, "sum {} at t={t}", total);
            }
        }
        assert!(eval_cutoffs(&cf, grid, 0.0).is_err());
    }

    #[test]
    fn cutoff_derivative_scales_like_inverse_time() {
        let cfg = two_soliton_config(1.0);
        let cf = CutoffFamily::new(&cfg, 0.5).unwrap();
        let grid = Grid::new_1d(2048, 60.0).unwrap();
        let t = 10.0;
        let sup = |fields: &CutoffFields, which: usize| {
            fields.dphi_dx1[which].iter().map(|v: &f64| v.abs()).fold(0.0, f64::max)
        };
        let f1 = eval_cutoffs(&cf, grid, t).unwrap();
        let f2 = eval_cutoffs(&cf, grid, 2.0 * t).unwrap();
        let ratio = sup(&f1, 0) / sup(&f2, 0);
        assert!((ratio - 2.0).abs() < 0.05 * 2.0, "ratio {ratio}");
    }

    #[test]
    fn cutoff_finite_difference_consistency() {
        // analytic ∂_{x1}φ and ∂_tφ vs finite differences of φ
        let cfg = two_soliton_config(1.0);
        let cf = CutoffFamily::new(&cfg, 0.5).unwrap();
        let grid = Grid::new_1d(4096, 60.0).unwrap();
        let t = 8.0;
        let fields = eval_cutoffs(&cf, grid, t).unwrap();
        let h = grid.spacing();
        let mut worst_x: f64 = 0.0;
        for i in 2..grid.len() - 2 {
            let fd = (fields.phi[0][i + 1] - fields.phi[0][i - 1]) / (2.0 * h);
            worst_x = worst_x.max((fd - fields.dphi_dx1[0][i]).abs());
        }
        assert!(worst_x < 1e-4, "x-derivative mismatch {worst_x}");
        let dt = 1e-5;
        let plus = eval_cutoffs(&cf, grid, t + dt).unwrap();
        let minus = eval_cutoffs(&cf, grid, t - dt).unwrap();
        let mut worst_t: f64 = 0.0;
        for i in 0..grid.len() {
            let fd = (plus.phi[0][i] - minus.phi[0][i]) / (2.0 * dt);
            worst_t = worst_t.max((fd - fields.dphi_dt[0][i]).abs());
        }
        assert!(worst_t < 1e-6, "t-derivative mismatch {worst_t}");
    }

    #[test]
    fn localized_bounds_decay_in_time() {
        // (|R_k| + |∂_{x1}R_k|)·|φ_j| for j ≠ k and (|R_k|+…)|∂φ_j| decay
        // exponentially in t after weighting out the soliton envelope.
        let omega = 1.0;
        let cfg = two_soliton_config(omega);
        let (_, gs) = cubic_setup();
        let cf = CutoffFamily::new(&cfg, 0.5).unwrap();
        let grid = Grid::new_1d(2048, 120.0).unwrap();
        let ts = [10.0, 17.5, 25.0];
        let mut max_ratio_wrong_side = Vec::new();
        let mut max_ratio_interface = Vec::new();
        for &t in &ts {
            let fields = eval_cutoffs(&cf, grid, t).unwrap();
            let r0 = evaluate_soliton(&cfg.solitons[0], &gs, grid, t).unwrap();
            let d0 = crate::soliton::evaluate_soliton_gradient(&cfg.solitons[0], &gs, grid, t, 0)
                .unwrap();
            let c = cfg.solitons[0].center(t)[0];
            let mut worst1: f64 = 0.0;
            let mut worst4: f64 = 0.0;
            for i in 0..grid.len() {
                let x = grid.coord(i);
                let envelope = (-(omega.sqrt() / 4.0) * (x - c).abs()).exp();
                let mag = r0.values[i].norm() + d0.values[i].norm();
                // soliton 0 against the other soliton's cutoff (wrong side)
                worst1 = worst1.max(mag * fields.phi[1][i].abs() / envelope);
                // soliton 0 against any interface derivative
                worst4 = worst4.max(mag * fields.dphi_dx1[1][i].abs() / envelope);
            }
            max_ratio_wrong_side.push(worst1.max(1e-300).ln());
            max_ratio_interface.push(worst4.max(1e-300).ln());
        }
        let slope1 = (max_ratio_wrong_side[2] - max_ratio_wrong_side[0]) / (ts[2] - ts[0]);
        let slope4 = (max_ratio_interface[2] - max_ratio_interface[0]) / (ts[2] - ts[0]);
        assert!(slope1 < -0.01, "wrong-side ratio not decaying: slope {slope1}");
        assert!(slope4 < -0.01, "interface ratio not decaying: slope {slope4}");
    }

    #[test]
    fn weinstein_vanishes_on_zero_and_kernel_directions() {
        let (nl, gs) = cubic_setup();
        let grid = Grid::new_1d(1024, 25.0).unwrap();
        let params = SolitonParams { omega: 1.0, v: vec![0.0], x0: vec![0.0], gamma: 0.0 };
        let config = MultiSolitonConfig::new(vec![params.clone()], nl).unwrap();
        let cf = CutoffFamily::new(&config, 0.5).unwrap();
        let t = 5.0;
        let cut = eval_cutoffs(&cf, grid, t).unwrap();
        let gss = vec![gs.clone()];

        let zero = Field::zeros(grid, t);
        let h0 = eval_weinstein(&zero, &config, &gss, &cut, &nl).unwrap();
        assert_eq!(h0.value, 0.0);

        // z̃ = iR: H = <L₋Q, Q> = 0
        let r = evaluate_soliton(&params, &gs, grid, t).unwrap();
        let iq = r.scale(Complex64::i());
        let h_iq = eval_weinstein(&iq, &config, &gss, &cut, &nl).unwrap();
        assert!(h_iq.value.abs() < 1e-9, "H(iQ) = {}", h_iq.value);

        // z̃ = ∂_x R: H = <L₊Q', Q'> = 0
        let dq = crate::soliton::evaluate_soliton_gradient(&params, &gs, grid, t, 0).unwrap();
        let h_dq = eval_weinstein(&dq, &config, &gss, &cut, &nl).unwrap();
        assert!(h_dq.value.abs() < 1e-9, "H(Q') = {}", h_dq.value);
    }

    #[test]
    fn weinstein_nonlinear_gap_scales_cubically() {
        let (nl, gs) = cubic_setup();
        let grid = Grid::new_1d(1024, 25.0).unwrap();
        let params = SolitonParams { omega: 1.0, v: vec![0.0], x0: vec![0.0], gamma: 0.0 };
        let config = MultiSolitonConfig::new(vec![params.clone()], nl).unwrap();
        let cf = CutoffFamily::new(&config, 0.5).unwrap();
        let t = 5.0;
        let cut = eval_cutoffs(&cf, grid, t).unwrap();
        let gss = vec![gs.clone()];
        let varphi = evaluate_soliton(&params, &gs, grid, t).unwrap();
        let bump = Field::from_fn(grid, t, |x, _| {
            Complex64::new((-(x - 1.0) * (x - 1.0)).exp(), 0.5 * (-x * x / 2.0).exp())
        });
        let gap_at = |eps: f64| {
            let z = bump.scale(Complex64::new(eps, 0.0));
            compare_weinstein(&z, &varphi, &config, &gss, &cut, &nl).unwrap().gap
        };
        let g2 = gap_at(1e-2);
        let g3 = gap_at(1e-3);
        let ratio = g2 / g3;
        assert!(ratio > 1000.0 / 3.0 && ratio < 3000.0, "cubic scaling ratio {ratio}");
    }

    #[test]
    fn weinstein_nonlinear_zero_and_bookkeeping() {
        let (nl, gs) = cubic_setup();
        let grid = Grid::new_1d(512, 25.0).unwrap();
        let params = SolitonParams { omega: 1.0, v: vec![0.0], x0: vec![0.0], gamma: 0.0 };
        let config = MultiSolitonConfig::new(vec![params.clone()], nl).unwrap();
        let cf = CutoffFamily::new(&config, 0.5).unwrap();
        let t = 3.0;
        let cut = eval_cutoffs(&cf, grid, t).unwrap();
        let varphi = evaluate_soliton(&params, &gs, grid, t).unwrap();
        let zero = Field::zeros(grid, t);
        let h = eval_weinstein_nonlinear(&zero, &varphi, &config, &cut, &nl).unwrap();
        assert_eq!(h.value, 0.0);
        let small = varphi.scale(Complex64::new(1e-2, 1e-2));
        let rep = eval_weinstein_nonlinear(&small, &varphi, &config, &cut, &nl).unwrap();
        let sum: f64 = rep.parts.iter().map(|(_, v)| v).sum();
        assert!((sum - rep.value).abs() < 1e-12 * rep.value.abs().max(1.0));
        assert!(rep.value.is_finite());
    }

    #[test]
    fn main_term_zero_field_and_support() {
        let cfg = two_soliton_config(1.0);
        let cf = CutoffFamily::new(&cfg, 0.5).unwrap();
        let grid = Grid::new_1d(1024, 60.0).unwrap();
        let t = 10.0;
        let cut = eval_cutoffs(&cf, grid, t).unwrap();
        let zero = Field::zeros(grid, t);
        assert_eq!(eval_main_term(&zero, &cfg, &cut).unwrap(), 0.0);

        // a bump supported where every ∂φ vanishes (deep inside φ_1 ≡ 1):
        // the transition layer lives in |x| ≤ A0·t = 5 around 0
        let z = Field::from_fn(grid, t, |x, _| {
            Complex64::new((-(x + 40.0) * (x + 40.0)).exp(), 0.0)
        });
        let main = eval_main_term(&z, &cfg, &cut).unwrap();
        assert!(main.abs() < 1e-12, "Main = {main}");
    }

    #[test]
    fn main_term_inverse_time_scaling() {
        let cfg = two_soliton_config(1.0);
        let cf = CutoffFamily::new(&cfg, 0.5).unwrap();
        let grid = Grid::new_1d(2048, 120.0).unwrap();
        // fixed profile straddling the interface region
        let t = 12.0;
        let make_z = |time: f64| {
            Field::from_fn(grid, time, |x, _| {
                Complex64::new(
                    (-x * x / 64.0).exp(),
                    0.3 * (0.4 * x).sin() * (-x * x / 100.0).exp(),
                )
            })
        };
        let m1 = eval_main_term(&make_z(t), &cfg, &eval_cutoffs(&cf, grid, t).unwrap()).unwrap();
        let m2 = eval_main_term(&make_z(2.0 * t), &cfg, &eval_cutoffs(&cf, grid, 2.0 * t).unwrap())
            .unwrap();
        let ratio = (m1 / m2).abs();
        assert!((ratio - 2.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn drift_fit_report() {
        // synthetic series e^{-t} + noise floor
        let samples: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = 2.0 + i as f64 * 0.25;
                (t, 5.0 + (-t).exp() + 1e-9)
            })
            .collect();
        let report = eval_modified_energy_drift(&samples, None).unwrap();
        assert!(report.reliable);
        assert!((report.rate + 1.0).abs() < 0.08, "rate {}", report.rate);
        // too few points → unreliable
        let short: Vec<(f64, f64)> = samples[..3].to_vec();
        assert!(eval_modified_energy_drift(&short, None).is_err());
    }

    #[test]
    fn drift_fit_flags_overlapping_solitons() {
        // series over a window where the solitons are never separated
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let cfg = MultiSolitonConfig::new(
            vec![
                SolitonParams { omega: 1.0, v: vec![-0.1], x0: vec![-0.2], gamma: 0.0 },
                SolitonParams { omega: 1.0, v: vec![0.1], x0: vec![0.2], gamma: 0.0 },
            ],
            nl,
        )
        .unwrap();
        let samples: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = 1.0 + i as f64 * 0.2;
                (t, (-t).exp())
            })
            .collect();
        let report = eval_modified_energy_drift(&samples, Some((&cfg, 3.0))).unwrap();
        assert!(!report.reliable);
    }
}
