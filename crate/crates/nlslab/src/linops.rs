//! Dense linearized operators around a ground state and their spectral
//! diagnostics.
//!
//!   L₊ w = −Δw + ωw − ( f(Q²) + 2Q²f'(Q²) ) w,
//!   L₋ w = −Δw + ωw − f(Q²) w,
//!
//! acting on the real and imaginary parts of a perturbation of e^{iωt}Q.
//! Kernel structure: L₋Q = 0 (the ground-state equation) and L₊∂_iQ = 0
//! (nondegeneracy).  The quadratic form H(w) = <L₊w₁,w₁> + <L₋w₂,w₂> is
//! coercive on the complement of finitely many directions; the constrained
//! minimum of the Rayleigh quotient <Lw,w>/‖w‖²_{H¹} certifies this
//! numerically.  In the mass-critical case L₊((d/2)Q + x·∇Q) = −2Q, and the
//! third constraint x·∇Q restores a positive minimum.
//!
//! Discretization: uniform 1D grid, 4th-order stencils, dense symmetric
//! matrices, direct eigensolves (no iterative methods to tune).

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::groundstate::{radial_quadrature, GroundState};
use crate::nonlinearity::Criticality;
use crate::Result;

/// Uniform 1D evaluation grid [x0, x1] with m points (endpoints included).
#[derive(Debug, Clone, Copy)]
pub struct Grid1d {
    pub x0: f64,
    pub x1: f64,
    pub m: usize,
}

impl Grid1d {
    pub fn symmetric(half_width: f64, m: usize) -> Self {
        Grid1d { x0: -half_width, x1: half_width, m }
    }

    pub fn spacing(&self) -> f64 {
        (self.x1 - self.x0) / (self.m - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.spacing()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    LPlus,
    LMinus,
}

/// Dense discretization of L₊ or L₋ on a [`Grid1d`] (functions implicitly
/// vanish outside the domain; the profile decays exponentially there).
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub kind: OpKind,
    pub omega: f64,
    pub grid: Grid1d,
    pub matrix: DMatrix<f64>,
    pub potential: Vec<f64>,
}

/// 4th-order second-derivative matrix (−Δ is the negative of this).
fn second_derivative_matrix(grid: Grid1d) -> DMatrix<f64> {
    let m = grid.m;
    let h2 = grid.spacing() * grid.spacing();
    let c = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for (offset, &coef) in c.iter().enumerate() {
            let j = i as isize + offset as isize - 2;
            if j >= 0 && (j as usize) < m {
                d[(i, j as usize)] = coef / h2;
            }
        }
    }
    d
}

/// 4th-order antisymmetric first-derivative matrix.
fn first_derivative_matrix(grid: Grid1d) -> DMatrix<f64> {
    let m = grid.m;
    let h = grid.spacing();
    let c = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for (offset, &coef) in c.iter().enumerate() {
            let j = i as isize + offset as isize - 2;
            if j >= 0 && (j as usize) < m {
                d[(i, j as usize)] = coef / h;
            }
        }
    }
    d
}

/// Assemble L₊ or L₋ for a 1D ground state.
pub fn assemble(kind: OpKind, gs: &GroundState, grid: Grid1d) -> Result<LinearizedOperator> {
    if gs.dim != 1 {
        return Err(Error::Precondition(
            "dense line operators are built from 1D ground states".into(),
        ));
    }
    // resolution guard: at least 12 points per decay length 2/√ω
    let points_per_length = 2.0 / gs.omega.sqrt() / grid.spacing();
    if points_per_length < 12.0 {
        return Err(Error::UnderResolved { points_per_length, required: 12.0 });
    }
    let m = grid.m;
    let mut matrix = second_derivative_matrix(grid);
    matrix.neg_mut();
    let mut potential = Vec::with_capacity(m);
    for i in 0..m {
        let q = gs.eval(grid.coord(i));
        let q2 = q * q;
        let v = match kind {
            OpKind::LPlus => gs.nl.f(q2) + 2.0 * q2 * gs.nl.f_prime(q2),
            OpKind::LMinus => gs.nl.f(q2),
        };
        potential.push(v);
        matrix[(i, i)] += gs.omega - v;
    }
    Ok(LinearizedOperator { kind, omega: gs.omega, grid, matrix, potential })
}

impl LinearizedOperator {
    /// Worst relative asymmetry |A - Aᵀ| / max|A|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.matrix.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 0..self.matrix.nrows() {
            for j in 0..i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// Sample the ground state on the operator grid.
    pub fn sample_profile(&self, gs: &GroundState) -> DVector<f64> {
        DVector::from_fn(self.grid.m, |i, _| gs.eval(self.grid.coord(i)))
    }

    /// ‖Av − λv‖ / ‖v‖ in the discrete L² norm.
    pub fn residual(&self, v: &DVector<f64>, lambda: f64) -> f64 {
        let r = &self.matrix * v - v * lambda;
        r.norm() / v.norm()
    }
}

/// Sorted eigenvalues (ascending) and vectors of a symmetric matrix.
fn sorted_symmetric_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = matrix.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let m = eig.eigenvectors.nrows();
    let mut vectors = DMatrix::zeros(m, idx.len());
    for (col, &i) in idx.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Plain L² spectrum of the operator (lowest `count` eigenvalues with
/// vectors).
pub fn lowest_eigenpairs(op: &LinearizedOperator, count: usize) -> (Vec<f64>, DMatrix<f64>) {
    let (values, vectors) = sorted_symmetric_eigen(op.matrix.clone());
    let count = count.min(values.len());
    (values[..count].to_vec(), vectors.columns(0, count).into_owned())
}

/// Coercivity report of a constrained Rayleigh minimization.
#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub constraint_count: usize,
    /// min <Lw,w>/‖w‖²_{H¹} over the L²-orthocomplement of the constraints.
    pub min_eig_constrained: f64,
    /// Same without constraints.
    pub min_eig_unconstrained: f64,
    /// Certified coercivity constant (= constrained minimum).
    pub mu_plus: f64,
    /// Five lowest plain L² eigenvalues of the operator.
    pub spectrum_head: Vec<f64>,
}

/// Orthonormal basis of the orthogonal complement of the given columns,
/// built from the accumulated Householder reflectors of their QR factor.
fn orthonormal_complement(constraints: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = constraints.nrows();
    let r = constraints.ncols();
    // Gram check on normalized constraints
    let mut normed = constraints.clone();
    for mut col in normed.column_iter_mut() {
        let n = col.norm();
        if n < 1e-300 {
            return Err(Error::Precondition("zero constraint vector".into()));
        }
        col /= n;
    }
    let gram = normed.transpose() * &normed;
    let gram_eigs = gram.symmetric_eigen().eigenvalues;
    let min_gram = gram_eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_gram < 1e-10 {
        return Err(Error::Precondition(format!(
            "constraints nearly dependent: Gram min eigenvalue {min_gram:.3e}"
        )));
    }

    // Householder vectors from QR of the constraint matrix
    let mut a = constraints.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(r);
    for j in 0..r {
        let mut v = DVector::zeros(m);
        for i in j..m {
            v[i] = a[(i, j)];
        }
        let alpha = -v[j].signum() * v.rows(j, m - j).norm();
        v[j] -= alpha;
        let vnorm = v.rows(j, m - j).norm();
        if vnorm < 1e-300 {
            reflectors.push(DVector::zeros(m));
            continue;
        }
        for i in j..m {
            v[i] /= vnorm;
        }
        // apply H = I - 2vvᵀ to the remaining columns
        for col in j..r {
            let mut dot = 0.0;
            for i in j..m {
                dot += v[i] * a[(i, col)];
            }
            for i in j..m {
                a[(i, col)] -= 2.0 * dot * v[i];
            }
        }
        reflectors.push(v);
    }

    // columns r..m of Q = H_0 H_1 … H_{r-1}
    let mut z = DMatrix::zeros(m, m - r);
    for (col, e) in (r..m).enumerate() {
        let mut q = DVector::zeros(m);
        q[e] = 1.0;
        for v in reflectors.iter().rev() {
            let dot = v.dot(&q);
            if dot != 0.0 {
                q -= v * (2.0 * dot);
            }
        }
        z.set_column(col, &q);
    }
    Ok(z)
}

/// Minimal Rayleigh quotient <Lw,w>/‖w‖²_{H¹} over the L²-orthocomplement of
/// the constraints (sampled on the operator grid).
pub fn constrained_min_eig(
    op: &LinearizedOperator,
    constraints: &[DVector<f64>],
) -> Result<CoercivityReport> {
    let m = op.grid.m;
    for c in constraints {
        if c.len() != m {
            return Err(Error::GridMismatch("constraint length != operator size".into()));
        }
    }
    // H¹ Gram: I + DᵀD
    let d1 = first_derivative_matrix(op.grid);
    let b = DMatrix::identity(m, m) + d1.transpose() * &d1;

    let min_unconstrained = pencil_min_eig(&op.matrix, &b)?;
    let min_constrained = if constraints.is_empty() {
        min_unconstrained
    } else {
        let mut cmat = DMatrix::zeros(m, constraints.len());
        for (j, c) in constraints.iter().enumerate() {
            cmat.set_column(j, c);
        }
        let z = orthonormal_complement(&cmat)?;
        let az = z.transpose() * &op.matrix * &z;
        let bz = z.transpose() * &b * &z;
        pencil_min_eig(&az, &bz)?
    };
    let (head, _) = lowest_eigenpairs(op, 5);
    Ok(CoercivityReport {
        constraint_count: constraints.len(),
        min_eig_constrained: min_constrained,
        min_eig_unconstrained: min_unconstrained,
        mu_plus: min_constrained,
        spectrum_head: head,
    })
}

/// Minimal generalized eigenvalue of the symmetric pencil (A, B), B SPD,
/// via Cholesky reduction to a standard symmetric problem.
fn pencil_min_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Eigen("H¹ Gram matrix not positive definite".into()))?;
    let l = chol.l();
    // S = L⁻¹ A L⁻ᵀ
    let mut s = a.clone();
    l.solve_lower_triangular_mut(&mut s);
    let mut st = s.transpose();
    l.solve_lower_triangular_mut(&mut st);
    // symmetrize against rounding
    let sym = (&st + st.transpose()) * 0.5;
    let eigs = sym.symmetric_eigen().eigenvalues;
    Ok(eigs.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Report of the mass-critical operator identities.
#[derive(Debug, Clone)]
pub struct CriticalIdentityReport {
    /// ‖L₊((d/2)Q + x·∇Q) + 2Q‖ / ‖Q‖ (radial L²).
    pub identity_residual: f64,
    /// ∫(x·∇Q)² − (d²/4)∫Q².
    pub virial_gap: f64,
    /// ‖(d/2)Q + x·∇Q‖²_{L²}.
    pub direction_norm_sq: f64,
}

/// Verify L₊((d/2)Q + x·∇Q) = −2Q and the positivity
/// ∫(x·∇Q)² − (d²/4)∫Q² = ‖(d/2)Q + x·∇Q‖² > 0, all evaluated from the
/// radial profile with derivatives reconstructed through the ground-state
/// equation (no finite differencing of the identity itself).
pub fn verify_critical_identities(gs: &GroundState) -> Result<CriticalIdentityReport> {
    if gs.nl.criticality(gs.dim) != Criticality::Critical {
        return Err(Error::Precondition(format!(
            "nonlinearity not mass-critical in d={}",
            gs.dim
        )));
    }
    let d = gs.dim as f64;
    let omega = gs.omega;
    // u = (d/2)Q + r Q';  L₊u with
    //   u'  = (d/2 + 1) Q' + r Q''
    //   u'' = (d/2 + 2) Q'' + r Q'''
    // where Q'' and Q''' come from the radial equation
    //   Q'' = ωQ − f(Q²)Q − (d−1)/r Q'.
    let lap_residual_sq = radial_quadrature(gs, |r, q, dq| {
        if r < 1e-9 {
            return 0.0;
        }
        let f = gs.nl.f(q * q);
        let fp = gs.nl.f_prime(q * q);
        let d2 = omega * q - f * q - (d - 1.0) / r * dq;
        // Q''' from differentiating the ODE
        let d3 = omega * dq
            - (fp * 2.0 * q * dq * q + f * dq)
            - (d - 1.0) * (d2 / r - dq / (r * r));
        let u = d / 2.0 * q + r * dq;
        let du = (d / 2.0 + 1.0) * dq + r * d2;
        let d2u = (d / 2.0 + 2.0) * d2 + r * d3;
        let lap_u = d2u + (d - 1.0) / r * du;
        let vplus = f + 2.0 * q * q * fp;
        let res = -lap_u + omega * u - vplus * u + 2.0 * q;
        res * res
    });
    let q_norm_sq = radial_quadrature(gs, |_, q, _| q * q);
    let identity_residual = (lap_residual_sq / q_norm_sq).sqrt();

    let xdq_sq = radial_quadrature(gs, |r, _, dq| (r * dq) * (r * dq));
    let virial_gap = xdq_sq - d * d / 4.0 * q_norm_sq;
    let direction_norm_sq = radial_quadrature(gs, |r, q, dq| {
        let u = d / 2.0 * q + r * dq;
        u * u
    });
    Ok(CriticalIdentityReport { identity_residual, virial_gap, direction_norm_sq })
}

/// The supercritical instability eigenpair: a real e₀ > 0 and Y = Y₁ + iY₂
/// with  L₊Y₁ = e₀Y₂  and  −L₋Y₂ = e₀Y₁  (i.e. an eigenfunction of the full
/// linearized flow with growth rate e₀).
#[derive(Debug, Clone)]
pub struct InstabilityEigenpair {
    pub e0: f64,
    pub y1: DVector<f64>,
    pub y2: DVector<f64>,
    pub grid: Grid1d,
    /// max of the two block residuals over ‖(Y₁,Y₂)‖.
    pub residual: f64,
}

/// Compute (e₀, Y) for a supercritical ground state.
///
/// Y₁ solves L₋L₊Y₁ = −e₀²Y₁; the similarity transform
/// T = L₋^{1/2} L₊ L₋^{1/2} makes the problem symmetric, and its most
/// negative eigenvalue is −e₀².  Back-substitution gives Y₁ = L₋^{1/2}w and
/// Y₂ = L₊Y₁/e₀.
pub fn instability_eigenpair(gs: &GroundState, grid: Grid1d) -> Result<InstabilityEigenpair> {
    if gs.nl.criticality(gs.dim) != Criticality::Supercritical {
        return Err(Error::Precondition(format!(
            "instability eigenpair requires a mass-supercritical nonlinearity in d={}",
            gs.dim
        )));
    }
    let lplus = assemble(OpKind::LPlus, gs, grid)?;
    let lminus = assemble(OpKind::LMinus, gs, grid)?;

    // L₋^{1/2} by spectral decomposition, clamping the near-zero kernel mode
    let (vals, vecs) = sorted_symmetric_eigen(lminus.matrix.clone());
    let m = grid.m;
    let mut sqrt_vals = DMatrix::zeros(m, m);
    for (i, &v) in vals.iter().enumerate() {
        sqrt_vals[(i, i)] = v.max(0.0).sqrt();
    }
    let s = &vecs * sqrt_vals * vecs.transpose();

    let t = &s * &lplus.matrix * &s;
    let t_sym = (&t + t.transpose()) * 0.5;
    let (tvals, tvecs) = sorted_symmetric_eigen(t_sym);
    let lambda_min = tvals[0];
    if lambda_min >= -1e-8 {
        return Err(Error::Eigen(format!(
            "no negative eigenvalue of the composed operator (min {lambda_min:.3e}); \
             discretization failure"
        )));
    }
    let e0 = (-lambda_min).sqrt();
    let w = tvecs.column(0).into_owned();
    let y1 = &s * w;
    let y2 = (&lplus.matrix * &y1) / e0;

    // residuals of the coupled system
    let r1 = (&lplus.matrix * &y1 - &y2 * e0).norm();
    let r2 = (&lminus.matrix * &y2 + &y1 * e0).norm();
    let scale = (y1.norm_squared() + y2.norm_squared()).sqrt();
    let residual = r1.max(r2) / scale;

    // normalize ‖Y‖_{L²} = 1 (quadrature weight h) and fix the sign so the
    // first component above threshold is positive
    let h = grid.spacing();
    let norm = ((y1.norm_squared() + y2.norm_squared()) * h).sqrt();
    let mut y1 = y1 / norm;
    let mut y2 = y2 / norm;
    let amp = y1.iter().chain(y2.iter()).map(|v| v.abs()).fold(0.0, f64::max);
    let first = y1
        .iter()
        .chain(y2.iter())
        .find(|v| v.abs() > 1e-9 * amp)
        .copied()
        .unwrap_or(1.0);
    if first < 0.0 {
        y1.neg_mut();
        y2.neg_mut();
    }
    Ok(InstabilityEigenpair { e0, y1, y2, grid, residual })
}
