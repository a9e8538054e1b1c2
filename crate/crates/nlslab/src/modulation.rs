//! Modulation decomposition: project an error field z onto the soliton
//! symmetry directions so that the corrected field
//!   z̃ = z + Σ_k ( i a_k R_k + b_k·∇R_k [+ c_k W_k] )
//! satisfies the orthogonality conditions
//!   Im ∫ z̃ conj(R_k) = 0,    Re ∫ z̃ conj(∂_i R_k) = 0,
//!   [ Re ∫ z̃ conj(W_k) = 0  in the mass-critical case ],
//! where W_k = (d/2)R_k + y_k·∇R_k − (i/2)(v_k·y_k)R_k is the scaling
//! direction.  The coefficients solve a symmetric linear system M(t)x = y
//! whose entries are quadratures of soliton pairings; for separated solitons
//! M(t) approaches a block-diagonal limit with determinant
//!   Π_k ∫Q_{ω_k}² · det D(∞),    D(∞) = diag blocks [∫∂_iQ ∂_jQ].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Error;
use crate::grid::{inner_product_imag, inner_product_real, l2_norm, Field, Grid};
use crate::groundstate::{radial_quadrature, GroundState};
use crate::soliton::{
    evaluate_scaling_direction, evaluate_soliton, evaluate_soliton_gradient, MultiSolitonConfig,
};
use crate::Result;

/// Solved modulation coefficients at one time, with solver diagnostics.
#[derive(Debug, Clone)]
pub struct ModulationState {
    pub time: f64,
    pub a: Vec<f64>,
    /// b[k][axis]
    pub b: Vec<Vec<f64>>,
    /// Scaling coefficients, present only for critical solves.
    pub c: Option<Vec<f64>>,
    /// Post-solve orthogonality pairings of z̃ (should vanish).
    pub residuals: Vec<f64>,
    pub det: f64,
    /// 2-norm condition estimate of M(t).
    pub cond: f64,
    /// True when the solitons were closer than 3/√(min ω) at assembly.
    pub conditioning_warning: bool,
}

/// Assembled system: the matrix, the decomposition directions (columns) and
/// the pairing fields (rows).
pub struct ModulationSystem {
    pub matrix: DMatrix<f64>,
    pub time: f64,
    pub critical: bool,
    pub conditioning_warning: bool,
    directions: Vec<Field>,
    pairings: Vec<Pairing>,
}

enum Pairing {
    /// Im ∫ w conj(field)
    Imag(Field),
    /// Re ∫ w conj(field)
    Real(Field),
}

impl Pairing {
    fn apply(&self, w: &Field) -> Result<f64> {
        match self {
            Pairing::Imag(f) => inner_product_imag(w, f),
            Pairing::Real(f) => inner_product_real(w, f),
        }
    }
}

/// Build M(t) and the pairing machinery for a configuration.
///
/// Row/column layout: [a_1..a_K | b along axis 1 | … | b along axis d | c_1..c_K].
pub fn assemble_modulation_matrix(
    config: &MultiSolitonConfig,
    gs: &[GroundState],
    grid: Grid,
    t: f64,
    critical: bool,
) -> Result<ModulationSystem> {
    let k_count = config.count();
    let d = config.dim();

    // pairwise separation check (warning only)
    let min_omega =
        config.solitons.iter().map(|s| s.omega).fold(f64::INFINITY, f64::min);
    let mut min_sep = f64::INFINITY;
    for i in 0..k_count {
        for j in (i + 1)..k_count {
            let ci = config.solitons[i].center(t);
            let cj = config.solitons[j].center(t);
            let sep: f64 =
                ci.iter().zip(&cj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            min_sep = min_sep.min(sep);
        }
    }
    let conditioning_warning = k_count > 1 && min_sep < 3.0 / min_omega.sqrt();

    let mut r_fields = Vec::with_capacity(k_count);
    let mut grad_fields: Vec<Vec<Field>> = Vec::with_capacity(k_count);
    let mut w_fields = Vec::new();
    for (params, g) in config.solitons.iter().zip(gs) {
        r_fields.push(evaluate_soliton(params, g, grid, t)?);
        let mut grads = Vec::with_capacity(d);
        for axis in 0..d {
            grads.push(evaluate_soliton_gradient(params, g, grid, t, axis)?);
        }
        grad_fields.push(grads);
        if critical {
            w_fields.push(evaluate_scaling_direction(params, g, grid, t)?);
        }
    }

    // decomposition directions: iR_k, then ∂_i R_k per axis, then W_k
    let mut directions: Vec<Field> = Vec::new();
    for r in &r_fields {
        directions.push(r.scale(Complex64::i()));
    }
    for axis in 0..d {
        for grads in &grad_fields {
            directions.push(grads[axis].clone());
        }
    }
    for w in &w_fields {
        directions.push(w.clone());
    }

    // pairing rows in the same block order
    let mut pairings: Vec<Pairing> = Vec::new();
    for r in &r_fields {
        pairings.push(Pairing::Imag(r.clone()));
    }
    for axis in 0..d {
        for grads in &grad_fields {
            pairings.push(Pairing::Real(grads[axis].clone()));
        }
    }
    for w in &w_fields {
        pairings.push(Pairing::Real(w.clone()));
    }

    let dim = pairings.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (row, pairing) in pairings.iter().enumerate() {
        for (col, dir) in directions.iter().enumerate() {
            matrix[(row, col)] = pairing.apply(dir)?;
        }
    }

    Ok(ModulationSystem { matrix, time: t, critical, conditioning_warning, directions, pairings })
}

impl ModulationSystem {
    /// Right-hand side −[pairings of z].
    pub fn rhs(&self, z: &Field) -> Result<DVector<f64>> {
        let mut y = DVector::zeros(self.pairings.len());
        for (row, pairing) in self.pairings.iter().enumerate() {
            y[row] = -pairing.apply(z)?;
        }
        Ok(y)
    }

    /// z̃ = z + Σ x_c · direction_c.
    pub fn correct(&self, z: &Field, x: &DVector<f64>) -> Result<Field> {
        let mut out = z.clone();
        for (c, dir) in self.directions.iter().enumerate() {
            out = out.axpy(Complex64::new(x[c], 0.0), dir)?;
        }
        Ok(out)
    }

    /// Maximum |M - Mᵀ| entry, relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.matrix;
        let scale = m.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst / scale
    }
}

/// Solve the modulation system for the coefficients of z.
pub fn solve_modulation(
    z: &Field,
    config: &MultiSolitonConfig,
    gs: &[GroundState],
    grid: Grid,
    t: f64,
    critical: bool,
) -> Result<ModulationState> {
    let system = assemble_modulation_matrix(config, gs, grid, t, critical)?;
    let k_count = config.count();
    let d = config.dim();
    let dim = system.matrix.nrows();

    let diag_scale: f64 = (0..dim).map(|i| system.matrix[(i, i)].abs().max(1e-300)).product();
    let lu = system.matrix.clone().full_piv_lu();
    let det = lu.determinant();
    let threshold = 1e-10 * diag_scale;
    if det.abs() < threshold {
        return Err(Error::SingularSystem { det, threshold });
    }
    let y = system.rhs(z)?;
    let x = lu
        .solve(&y)
        .ok_or_else(|| Error::SingularSystem { det, threshold })?;

    let svd = system.matrix.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = smax / smin.max(1e-300);

    let ztilde = system.correct(z, &x)?;
    let mut residuals = Vec::with_capacity(dim);
    for pairing in &system.pairings {
        residuals.push(pairing.apply(&ztilde)?);
    }

    let a = (0..k_count).map(|k| x[k]).collect();
    let b = (0..k_count)
        .map(|k| (0..d).map(|axis| x[k_count + axis * k_count + k]).collect())
        .collect();
    let c = critical.then(|| (0..k_count).map(|k| x[k_count * (d + 1) + k]).collect());

    Ok(ModulationState {
        time: t,
        a,
        b,
        c,
        residuals,
        det,
        cond,
        conditioning_warning: system.conditioning_warning,
    })
}

/// Modulated field z̃ for a solved state.
pub fn modulated_field(
    z: &Field,
    config: &MultiSolitonConfig,
    gs: &[GroundState],
    grid: Grid,
    state: &ModulationState,
) -> Result<Field> {
    let mut out = z.clone();
    for (k, (params, g)) in config.solitons.iter().zip(gs).enumerate() {
        let r = evaluate_soliton(params, g, grid, state.time)?;
        out = out.axpy(Complex64::new(0.0, state.a[k]), &r)?;
        for axis in 0..config.dim() {
            let dr = evaluate_soliton_gradient(params, g, grid, state.time, axis)?;
            out = out.axpy(Complex64::new(state.b[k][axis], 0.0), &dr)?;
        }
        if let Some(c) = &state.c {
            let w = evaluate_scaling_direction(params, g, grid, state.time)?;
            out = out.axpy(Complex64::new(c[k], 0.0), &w)?;
        }
    }
    Ok(out)
}

/// Report on det M(t) against its separated-soliton limit.
#[derive(Debug, Clone)]
pub struct DetLimitReport {
    pub times: Vec<f64>,
    pub dets: Vec<f64>,
    pub limit: f64,
    pub gaps: Vec<f64>,
}

/// The diagonal blocks of D(∞): ∫ ∂_i Q ∂_j Q = δ_ij (1/d) ∫|∇Q|².
pub fn grad_gram_diagonal(gs: &GroundState) -> f64 {
    let d = gs.dim as f64;
    radial_quadrature(gs, |_, _, dq| dq * dq) / d
}

/// Evaluate det M(t) on a set of times and compare with the limit
/// Π_k ∫Q² · det D(∞).
pub fn verify_det_limit(
    config: &MultiSolitonConfig,
    gs: &[GroundState],
    grid: Grid,
    t_samples: &[f64],
    critical: bool,
) -> Result<DetLimitReport> {
    let d = config.dim();
    let mut limit: f64 = gs.iter().map(|g| g.mass).product();
    for g in gs {
        limit *= grad_gram_diagonal(g).powi(d as i32);
    }
    if critical {
        for g in gs {
            // ∫((d/2)Q + x·∇Q)² = ∫(x·∇Q)² − (d²/4)∫Q²
            let dd = g.dim as f64;
            let w = radial_quadrature(g, |r, q, dq| {
                let val = dd / 2.0 * q + r * dq;
                val * val
            });
            limit *= w;
        }
    }
    let mut dets = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let system = assemble_modulation_matrix(config, gs, grid, t, critical)?;
        dets.push(system.matrix.determinant());
    }
    let gaps = dets.iter().map(|d| (d - limit).abs()).collect();
    Ok(DetLimitReport { times: t_samples.to_vec(), dets, limit, gaps })
}

/// Coefficient bound check: max(|a_k|, |b_k|) / ‖z‖_{L²} for a solved state.
pub fn coefficient_ratio(state: &ModulationState, z: &Field) -> f64 {
    let norm = l2_norm(z).max(1e-300);
    let mut worst: f64 = 0.0;
    for a in &state.a {
        worst = worst.max(a.abs());
    }
    for b in &state.b {
        for v in b {
            worst = worst.max(v.abs());
        }
    }
    if let Some(c) = &state.c {
        for v in c {
            worst = worst.max(v.abs());
        }
    }
    worst / norm
}
