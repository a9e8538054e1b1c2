//! Boosted solitons and the symmetry transforms of the flow.
//!
//! A soliton with parameters (ω, v, x⁰, γ) is
//!   R(t,x) = Q_ω(x − x⁰ − v t) · exp i( ½ v·x + (ω − |v|²/4) t + γ ),
//! traveling on the line x = x⁰ + v t.  Multi-soliton profiles are plain sums
//! R = Σ_k R_k.  The time derivative satisfies both
//!   ∂_t R = −v·∇R + i(ω + |v|²/4) R      and      ∂_t R = i(ΔR + f(|R|²)R),
//! which is used as a cross-check between analytic and spectral evaluation.

use num_complex::Complex64;

use crate::error::Error;
use crate::grid::{self, Field, Grid};
use crate::groundstate::GroundState;
use crate::nonlinearity::Nonlinearity;
use crate::Result;

/// Parameters of one traveling soliton.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonParams {
    pub omega: f64,
    pub v: Vec<f64>,
    pub x0: Vec<f64>,
    pub gamma: f64,
}

impl SolitonParams {
    pub fn center(&self, t: f64) -> Vec<f64> {
        self.x0.iter().zip(&self.v).map(|(x, v)| x + v * t).collect()
    }

    pub fn speed_sq(&self) -> f64 {
        self.v.iter().map(|v| v * v).sum()
    }

    /// Phase ½ v·x + (ω − |v|²/4) t + γ.
    pub fn phase(&self, t: f64, x: &[f64]) -> f64 {
        let vx: f64 = self.v.iter().zip(x).map(|(v, x)| v * x).sum();
        0.5 * vx + (self.omega - self.speed_sq() / 4.0) * t + self.gamma
    }
}

/// A collection of K ≥ 1 solitons sharing one nonlinearity.
#[derive(Debug, Clone)]
pub struct MultiSolitonConfig {
    pub solitons: Vec<SolitonParams>,
    pub nl: Nonlinearity,
}

impl MultiSolitonConfig {
    pub fn new(solitons: Vec<SolitonParams>, nl: Nonlinearity) -> Result<Self> {
        if solitons.is_empty() {
            return Err(Error::InvalidParameter("need at least one soliton".into()));
        }
        let d = solitons[0].v.len();
        let (lo, hi) = nl.omega_window();
        for (k, s) in solitons.iter().enumerate() {
            if s.v.len() != d || s.x0.len() != d {
                return Err(Error::InvalidParameter(format!(
                    "soliton {k}: v/x0 dimension mismatch"
                )));
            }
            if !(s.omega > lo && s.omega < hi) {
                return Err(Error::OutsideWindow { omega: s.omega, lo, hi });
            }
        }
        for k in 0..solitons.len() {
            for l in (k + 1)..solitons.len() {
                let diff: f64 = solitons[k]
                    .v
                    .iter()
                    .zip(&solitons[l].v)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if diff < 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "solitons {k} and {l} have equal velocities"
                    )));
                }
            }
        }
        Ok(MultiSolitonConfig { solitons, nl })
    }

    pub fn count(&self) -> usize {
        self.solitons.len()
    }

    pub fn dim(&self) -> usize {
        self.solitons[0].v.len()
    }
}

fn radius(dx: f64, dy: f64) -> f64 {
    (dx * dx + dy * dy).sqrt()
}

/// Sample R_k(t, ·) on the grid.  |R_k| = Q_ω(· − x⁰ − vt).
pub fn evaluate_soliton(
    params: &SolitonParams,
    gs: &GroundState,
    grid: Grid,
    t: f64,
) -> Result<Field> {
    check_eval(params, gs, grid)?;
    let c = params.center(t);
    let cy = if grid.dim() == 2 { c[1] } else { 0.0 };
    let d = grid.dim();
    let field = Field::from_fn(grid, t, |x, y| {
        let r = radius(x - c[0], y - cy);
        Complex64::from_polar(gs.eval(r), params.phase(t, &[x, y][..d]))
    });
    Ok(field)
}

/// ∂_{x_axis} R_k(t, ·) by the analytic formula (∂Q + i v/2 Q)·phase.
pub fn evaluate_soliton_gradient(
    params: &SolitonParams,
    gs: &GroundState,
    grid: Grid,
    t: f64,
    axis: usize,
) -> Result<Field> {
    check_eval(params, gs, grid)?;
    let c = params.center(t);
    let cy = if grid.dim() == 2 { c[1] } else { 0.0 };
    let d = grid.dim();
    let field = Field::from_fn(grid, t, |x, y| {
        let dx = [x - c[0], y - cy];
        let r = radius(dx[0], dx[1]);
        let q = gs.eval(r);
        let dq = if r > 1e-14 { gs.eval_deriv(r) * dx[axis] / r } else { 0.0 };
        let dir = Complex64::new(dq, 0.5 * params.v[axis] * q);
        dir * Complex64::from_polar(1.0, params.phase(t, &[x, y][..d]))
    });
    Ok(field)
}

/// The scaling direction (d/2)R_k + y_k·∇R_k − (i/2)(v_k·y_k)R_k with
/// y_k = x − x⁰ − v t.  The Galilean phase contributions cancel, leaving
/// [(d/2)Q + r Q'(r)] times the soliton phase.
pub fn evaluate_scaling_direction(
    params: &SolitonParams,
    gs: &GroundState,
    grid: Grid,
    t: f64,
) -> Result<Field> {
    check_eval(params, gs, grid)?;
    let c = params.center(t);
    let cy = if grid.dim() == 2 { c[1] } else { 0.0 };
    let d = grid.dim();
    let d_half = d as f64 / 2.0;
    let field = Field::from_fn(grid, t, |x, y| {
        let r = radius(x - c[0], y - cy);
        let val = d_half * gs.eval(r) + r * gs.eval_deriv(r);
        Complex64::from_polar(1.0, params.phase(t, &[x, y][..d])) * val
    });
    Ok(field)
}

/// Sum R = Σ_k R_k over a configuration.
pub fn evaluate_sum(
    config: &MultiSolitonConfig,
    gs: &[GroundState],
    grid: Grid,
    t: f64,
) -> Result<Field> {
    let mut total = Field::zeros(grid, t);
    for (params, g) in config.solitons.iter().zip(gs) {
        let r = evaluate_soliton(params, g, grid, t)?;
        for (a, b) in total.values.iter_mut().zip(&r.values) {
            *a += b;
        }
    }
    Ok(total)
}

/// True when the soliton center has drifted within 5/√ω of the box edge
/// (wraparound contamination likely).
pub fn wraparound_warning(params: &SolitonParams, grid: Grid, t: f64) -> bool {
    let margin = 5.0 / params.omega.sqrt();
    params.center(t).iter().any(|c| grid.half_length() - c.abs() < margin)
}

fn check_eval(params: &SolitonParams, gs: &GroundState, grid: Grid) -> Result<()> {
    if (gs.omega - params.omega).abs() > 1e-12 * params.omega {
        return Err(Error::Precondition(format!(
            "ground state omega {} does not match soliton omega {}",
            gs.omega, params.omega
        )));
    }
    if gs.eval(0.0) <= 0.0 {
        return Err(Error::Precondition("degenerate (zero) ground state".into()));
    }
    if params.v.len() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "soliton dimension {} vs grid dimension {}",
            params.v.len(),
            grid.dim()
        )));
    }
    Ok(())
}

/// Both closed forms of ∂_t R_k: the transport form −v·∇R + i(ω+|v|²/4)R and
/// the flow form i(ΔR + f(|R|²)R) (Laplacian evaluated spectrally).
pub fn soliton_time_derivative(
    params: &SolitonParams,
    gs: &GroundState,
    nl: &Nonlinearity,
    grid: Grid,
    t: f64,
) -> Result<(Field, Field)> {
    let r = evaluate_soliton(params, gs, grid, t)?;
    // transport form
    let mut rhs1 = r.scale(Complex64::new(0.0, params.omega + params.speed_sq() / 4.0));
    for axis in 0..grid.dim() {
        let dr = evaluate_soliton_gradient(params, gs, grid, t, axis)?;
        rhs1 = rhs1.axpy(Complex64::new(-params.v[axis], 0.0), &dr)?;
    }
    // flow form
    let mut lap = Field::zeros(grid, t);
    for axis in 0..grid.dim() {
        let mut mi = vec![0usize; grid.dim()];
        mi[axis] = 2;
        let d2 = grid::spectral_derivative(&r, &mi)?;
        for (a, b) in lap.values.iter_mut().zip(&d2.values) {
            *a += b;
        }
    }
    let mut rhs2 = Field::zeros(grid, t);
    for i in 0..r.values.len() {
        rhs2.values[i] =
            Complex64::i() * (lap.values[i] + nl.f(r.values[i].norm_sqr()) * r.values[i]);
    }
    Ok((rhs1, rhs2))
}

/// Apply the space-time translation / phase / Galilean invariance to a
/// snapshot.  The input represents u(τ, ·); the output represents
///   w(t, x) = u(t − t⁰, x − x⁰ − v t) · exp i(½ v·x − |v|² t/4 + γ)
/// at its own time t = τ + t⁰.  Spatial shifts use the exact Fourier phase.
pub fn apply_invariance(
    field: &Field,
    t0: f64,
    x0: &[f64],
    v: &[f64],
    gamma: f64,
) -> Result<Field> {
    let grid = field.grid;
    let d = grid.dim();
    if x0.len() != d || v.len() != d {
        return Err(Error::InvalidParameter("apply_invariance: x0/v dimension mismatch".into()));
    }
    let t_new = field.time + t0;
    let shift: Vec<f64> = x0.iter().zip(v).map(|(x, vv)| x + vv * t_new).collect();
    let mut out = grid::translate(field, &shift)?;
    let vsq: f64 = v.iter().map(|x| x * x).sum();
    let n = grid.n_points();
    match d {
        1 => {
            for (i, val) in out.values.iter_mut().enumerate() {
                let x = grid.coord(i);
                *val *= Complex64::from_polar(1.0, 0.5 * v[0] * x - vsq * t_new / 4.0 + gamma);
            }
        }
        _ => {
            for i2 in 0..n {
                let y = grid.coord(i2);
                for i1 in 0..n {
                    let x = grid.coord(i1);
                    out.values[grid.index(i1, i2)] *= Complex64::from_polar(
                        1.0,
                        0.5 * (v[0] * x + v[1] * y) - vsq * t_new / 4.0 + gamma,
                    );
                }
            }
        }
    }
    out.time = t_new;
    Ok(out)
}

/// Apply the pure-power scaling invariance
///   w(t, x) = λ^(-1/(p-1)) u(t/λ, x/√λ).
/// The output lives on the dilated grid (half-length √λ·L) so sample values
/// map one-to-one; its time is λ·τ.
pub fn apply_scaling(field: &Field, lambda: f64, p: f64) -> Result<Field> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("scaling needs lambda > 0, got {lambda}")));
    }
    let grid = field.grid;
    let new_grid = Grid::new(grid.dim(), grid.n_points(), grid.half_length() * lambda.sqrt())?;
    let amp = lambda.powf(-1.0 / (p - 1.0));
    let values = field.values.iter().map(|v| amp * v).collect();
    Ok(Field { grid: new_grid, values, time: lambda * field.time, label: field.label.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gradient_axis, inner_product_imag, l2_norm};
    use crate::groundstate::solve_ground_state;

    fn cubic_gs() -> (Nonlinearity, GroundState) {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let gs = solve_ground_state(&nl, 1.0, 1).unwrap();
        (nl, gs)
    }

    fn params(v: f64, x0: f64, gamma: f64) -> SolitonParams {
        SolitonParams { omega: 1.0, v: vec![v], x0: vec![x0], gamma }
    }

    #[test]
    fn at_rest_at_origin_is_real_ground_state() {
        let (_, gs) = cubic_gs();
        let grid = Grid::new_1d(512, 20.0).unwrap();
        let r = evaluate_soliton(&params(0.0, 0.0, 0.0), &gs, grid, 0.0).unwrap();
        for i in 0..grid.n_points() {
            let x = grid.coord(i);
            assert!((r.values[i].re - gs.eval(x)).abs() < 1e-13);
            assert!(r.values[i].im.abs() < 1e-13);
        }
    }

    #[test]
    fn global_phase_rotation_at_quarter_period() {
        // v = 0, ω = 1, t = π/2: R = e^{iωt} Q = iQ.
        let (_, gs) = cubic_gs();
        let grid = Grid::new_1d(512, 20.0).unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let r = evaluate_soliton(&params(0.0, 0.0, 0.0), &gs, grid, t).unwrap();
        for i in (0..grid.n_points()).step_by(17) {
            let x = grid.coord(i);
            assert!((r.values[i].im - gs.eval(x)).abs() < 1e-12);
            assert!(r.values[i].re.abs() < 1e-12);
        }
    }

    #[test]
    fn boosted_soliton_momentum() {
        // Im ∫ ∂_x R · conj(R) = (v/2) ∫Q² = 8 for v = 4, mass 4.
        let (_, gs) = cubic_gs();
        let grid = Grid::new_1d(1024, 40.0).unwrap();
        let r = evaluate_soliton(&params(4.0, 0.0, 0.0), &gs, grid, 0.0).unwrap();
        let dr = gradient_axis(&r, 0).unwrap();
        let momentum = inner_product_imag(&dr, &r).unwrap();
        assert!((momentum - 8.0).abs() < 1e-8, "momentum {momentum}");
    }

    #[test]
    fn time_derivative_forms_agree() {
        let (nl, gs) = cubic_gs();
        let grid = Grid::new_1d(1024, 40.0).unwrap();
        let p = params(4.0, 0.0, 0.0);
        let (rhs1, rhs2) = soliton_time_derivative(&p, &gs, &nl, grid, 0.3).unwrap();
        let r = evaluate_soliton(&p, &gs, grid, 0.3).unwrap();
        let rel = l2_norm(&rhs1.sub(&rhs2).unwrap()) / l2_norm(&r);
        assert!(rel < 1e-8, "relative disagreement {rel}");
    }

    #[test]
    fn time_derivative_at_rest_is_i_omega_r() {
        let (nl, gs) = cubic_gs();
        let grid = Grid::new_1d(512, 20.0).unwrap();
        let p = params(0.0, 0.0, 0.0);
        let (rhs1, _) = soliton_time_derivative(&p, &gs, &nl, grid, 0.0).unwrap();
        let r = evaluate_soliton(&p, &gs, grid, 0.0).unwrap();
        let expect = r.scale(Complex64::new(0.0, 1.0));
        let diff = l2_norm(&rhs1.sub(&expect).unwrap());
        assert!(diff < 1e-12);
    }

    #[test]
    fn degenerate_parameters_rejected() {
        let (_, gs) = cubic_gs();
        let grid = Grid::new_1d(512, 20.0).unwrap();
        let mut bad = params(0.0, 0.0, 0.0);
        bad.omega = 2.0; // mismatched against gs.omega = 1
        assert!(evaluate_soliton(&bad, &gs, grid, 0.0).is_err());
    }

    #[test]
    fn identity_invariance_is_identity() {
        let (_, gs) = cubic_gs();
        let grid = Grid::new_1d(512, 20.0).unwrap();
        let r = evaluate_soliton(&params(0.0, 1.0, 0.3), &gs, grid, 0.0).unwrap();
        let same = apply_invariance(&r, 0.0, &[0.0], &[0.0], 0.0).unwrap();
        let diff = l2_norm(&r.sub(&same).unwrap());
        assert!(diff < 1e-12);
    }

    #[test]
    fn boosting_rest_soliton_matches_direct_evaluation() {
        let (_, gs) = cubic_gs();
        let grid = Grid::new_1d(1024, 40.0).unwrap();
        let rest = evaluate_soliton(&params(0.0, 0.0, 0.0), &gs, grid, 0.0).unwrap();
        let boosted = apply_invariance(&rest, 0.0, &[0.0], &[2.0], 0.0).unwrap();
        let direct = evaluate_soliton(&params(2.0, 0.0, 0.0), &gs, grid, 0.0).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..grid.n_points() {
            sup = sup.max((boosted.values[i] - direct.values[i]).norm());
        }
        assert!(sup < 1e-9, "sup {sup}");
    }

    #[test]
    fn scaling_maps_to_quarter_omega_soliton() {
        // λ = 4 on the ω = 1 cubic soliton gives the ω = 1/4 soliton.
        let (nl, gs) = cubic_gs();
        let grid = Grid::new_1d(1024, 20.0).unwrap();
        let r = evaluate_soliton(&params(0.0, 0.0, 0.0), &gs, grid, 0.0).unwrap();
        let scaled = apply_scaling(&r, 4.0, 3.0).unwrap();
        let gs_quarter = solve_ground_state(&nl, 0.25, 1).unwrap();
        let new_grid = scaled.grid;
        let direct = evaluate_soliton(
            &SolitonParams { omega: 0.25, v: vec![0.0], x0: vec![0.0], gamma: 0.0 },
            &gs_quarter,
            new_grid,
            0.0,
        )
        .unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..new_grid.n_points() {
            sup = sup.max((scaled.values[i] - direct.values[i]).norm());
        }
        assert!(sup < 1e-10, "sup {sup}");
        assert!(apply_scaling(&r, 0.0, 3.0).is_err());
    }

    #[test]
    fn nls_residual_of_single_soliton() {
        let (nl, gs) = cubic_gs();
        let grid = Grid::new_1d(1024, 40.0).unwrap();
        let p = params(4.0, -3.0, 0.7);
        // rhs1 is the transport form of ∂_t R, rhs2 the flow i(ΔR + f R);
        // their difference is the NLS residual of the exact soliton.
        let (rhs1, rhs2) = soliton_time_derivative(&p, &gs, &nl, grid, 0.5).unwrap();
        let res = l2_norm(&rhs1.sub(&rhs2).unwrap());
        assert!(res < 1e-7, "residual {res}");
    }

    #[test]
    fn scaling_direction_matches_literal_formula() {
        let (_, gs) = cubic_gs();
        let grid = Grid::new_1d(1024, 40.0).unwrap();
        let p = params(3.0, 1.0, 0.2);
        let t = 0.4;
        let w = evaluate_scaling_direction(&p, &gs, grid, t).unwrap();
        // literal: (d/2)R + y·∇R − (i/2)(v·y)R
        let r = evaluate_soliton(&p, &gs, grid, t).unwrap();
        let dr = evaluate_soliton_gradient(&p, &gs, grid, t, 0).unwrap();
        let c = p.center(t)[0];
        let mut sup: f64 = 0.0;
        for i in 0..grid.n_points() {
            let y = grid.coord(i) - c;
            let literal = 0.5 * r.values[i] + y * dr.values[i]
                - Complex64::i() * 0.5 * p.v[0] * y * r.values[i];
            sup = sup.max((w.values[i] - literal).norm());
        }
        assert!(sup < 1e-10, "sup {sup}");
    }

    #[test]
    fn cross_term_decay_rate_matches_tail_product() {
        // Two separating solitons: ∫|R₁R₂| ~ (D + c) e^{-√ω D} with
        // D(t) = |Δv| t the full separation, so the fitted log-slope is
        // close to -√ω·|Δv| (slightly shallower from the polynomial factor).
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let omega: f64 = 0.25;
        let gs = solve_ground_state(&nl, omega, 1).unwrap();
        let grid = Grid::new_1d(2048, 120.0).unwrap();
        let p1 = SolitonParams { omega, v: vec![-1.5], x0: vec![0.0], gamma: 0.0 };
        let p2 = SolitonParams { omega, v: vec![1.5], x0: vec![0.0], gamma: 0.0 };
        let times = [8.0, 11.0, 14.0];
        let mut logs = Vec::new();
        for &t in &times {
            let r1 = evaluate_soliton(&p1, &gs, grid, t).unwrap();
            let r2 = evaluate_soliton(&p2, &gs, grid, t).unwrap();
            let overlap: f64 = r1
                .values
                .iter()
                .zip(&r2.values)
                .map(|(a, b)| (a * b.conj()).norm())
                .sum::<f64>()
                * grid.quad_weight();
            logs.push(overlap.ln());
        }
        let slope = (logs[2] - logs[0]) / (times[2] - times[0]);
        let expected = -omega.sqrt() * 3.0; // -√ω · |Δv|
        assert!(
            (slope - expected).abs() < 0.2 * expected.abs(),
            "slope {slope} expected {expected}"
        );
    }

    #[test]
    fn config_rejects_equal_velocities() {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let s1 = params(1.0, -5.0, 0.0);
        let s2 = params(1.0, 5.0, 0.0);
        assert!(MultiSolitonConfig::new(vec![s1, s2], nl).is_err());
    }

    #[test]
    fn wraparound_flag_fires_near_boundary() {
        let grid = Grid::new_1d(256, 20.0).unwrap();
        let p = params(4.0, 0.0, 0.0);
        assert!(!wraparound_warning(&p, grid, 0.0));
        assert!(wraparound_warning(&p, grid, 4.0)); // center at 16, margin 5
    }

    #[test]
    fn two_dimensional_soliton_modulus() {
        let nl = Nonlinearity::pure_power(3.0).unwrap();
        let gs = solve_ground_state(&nl, 1.0, 2).unwrap();
        let grid = Grid::new_2d(64, 12.0).unwrap();
        let p = SolitonParams { omega: 1.0, v: vec![1.0, -0.5], x0: vec![1.0, 2.0], gamma: 0.3 };
        let t = 0.7;
        let r = evaluate_soliton(&p, &gs, grid, t).unwrap();
        let c = p.center(t);
        for (i1, i2) in [(10, 20), (32, 32), (50, 12)] {
            let x = grid.coord(i1);
            let y = grid.coord(i2);
            let rr = ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt();
            let got = r.values[grid.index(i1, i2)].norm();
            assert!((got - gs.eval(rr)).abs() < 1e-12);
        }
    }
}
