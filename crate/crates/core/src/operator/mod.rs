//! Discrete forward operator: assembly, application, and SVD subspaces.
//!
//! The forward map takes a slip density `g` (coefficients in the
//! `H^1_0`-orthonormal sine basis) to its surface data sampled on the
//! observation grid. Entry `(j, i)` of the assembled matrix is
//!
//! ```text
//! sqrt(w_j) * sum_q omega_q H(m, x_j, y_q) phi_i(y_q)
//! ```
//!
//! with `w_j` the trapezoid weight of grid point `x_j` and `(y_q,
//! omega_q)` the composite Gauss-Legendre rule on the source region. The
//! row scaling makes Euclidean norms of matrix-vector products equal the
//! discrete `L^2(V)` norm of the data, so the matrix SVD is the SVD of
//! the discretized operator between `H^1_0(R)` and `L^2(V)`.
//!
//! Assembly separates kernel evaluations from basis evaluations: kernel
//! values form an `M x Nq` matrix filled per quadrature node, basis
//! values times quadrature weights an `Nq x K^2` matrix fixed per
//! context, and the product is one dense multiplication. Repeated
//! assemblies at different `m` (stability trials, dataset generation)
//! reuse the context.

pub mod cache;

use crate::geometry::{ObservationGrid, Rule2d, SineBasis, SourceRegion};
use crate::kernel::KernelConfig;
use crate::{geometry::FaultParams, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Points closer than this are treated as coincident (singular).
const MIN_DIST_SQ: f64 = 1e-24;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Reusable assembly state: quadrature rule, weighted basis values at
/// the quadrature nodes, and grid weights.
#[derive(Debug, Clone)]
pub struct AssemblyContext {
    /// Basis of slip densities.
    pub basis: SineBasis,
    /// Observation grid carrying the data samples.
    pub grid: ObservationGrid,
    /// Kernel settings.
    pub cfg: KernelConfig,
    /// Source region and its quadrature mesh.
    pub region: SourceRegion,
    /// Gauss-Legendre order per mesh cell.
    pub quad_order: usize,
    quad: Rule2d,
    /// `Nq x K^2` matrix of `omega_q * phi_i(y_q)`.
    wb: DMatrix<f64>,
    /// Square roots of the grid trapezoid weights.
    sqrt_w: DVector<f64>,
}

impl AssemblyContext {
    /// Build a context; validates the configuration once.
    pub fn new(
        basis: SineBasis,
        region: SourceRegion,
        grid: ObservationGrid,
        cfg: KernelConfig,
        quad_order: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        if quad_order < 2 {
            return Err(Error::invalid(format!(
                "assembly quadrature order must be >= 2, got {quad_order}"
            )));
        }
        if (region.half_width - basis.half_width).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "basis half-width {} does not match source region half-width {}",
                basis.half_width, region.half_width
            )));
        }
        let quad = region.quadrature(quad_order)?;
        let nq = quad.len();
        let k2 = basis.len();
        let mut wb = DMatrix::zeros(nq, k2);
        for i in 0..k2 {
            for q in 0..nq {
                wb[(q, i)] = quad.weights[q] * basis.eval(i, quad.points[q]);
            }
        }
        let sqrt_w = DVector::from_iterator(grid.len(), grid.weights.iter().map(|w| w.sqrt()));
        Ok(AssemblyContext {
            basis,
            grid,
            cfg,
            region,
            quad_order,
            quad,
            wb,
            sqrt_w,
        })
    }

    /// Number of data samples (grid points).
    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    /// Number of basis modes.
    pub fn cols(&self) -> usize {
        self.basis.len()
    }

    /// Assemble the forward matrix at `m`.
    pub fn assemble(&self, m: &FaultParams) -> Result<OperatorMatrix> {
        let kv = self
            .fill_kernel_values(m, None)
            .map_err(|e| wrap_assembly(m, e))?;
        Ok(self.finish(m, kv))
    }

    /// Assemble the directional derivative of the forward matrix at `m`
    /// along the unit parameter direction `dir`.
    pub fn directional_derivative(&self, m: &FaultParams, dir: [f64; 3]) -> Result<OperatorMatrix> {
        let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "derivative direction must be a unit vector, got ({}, {}, {}) with norm {norm}",
                dir[0], dir[1], dir[2]
            )));
        }
        let kv = self
            .fill_kernel_values(m, Some(dir))
            .map_err(|e| wrap_assembly(m, e))?;
        Ok(self.finish(m, kv))
    }

    fn finish(&self, m: &FaultParams, kv: DMatrix<f64>) -> OperatorMatrix {
        let weighted = &kv * &self.wb;
        OperatorMatrix {
            m: *m,
            weighted,
            sqrt_weights: self.sqrt_w.clone(),
            grid_n: self.grid.n_per_axis,
            k_max: self.basis.k_max,
            region: self.region,
            cfg: self.cfg,
            quad_order: self.quad_order,
        }
    }

    /// Kernel values (or their directional `m`-derivative) at every
    /// (grid point, quadrature node) pair, rows pre-scaled by the square
    /// root of the grid weight.
    fn fill_kernel_values(&self, m: &FaultParams, dir: Option<[f64; 3]>) -> Result<DMatrix<f64>> {
        let mrows = self.grid.len();
        let nq = self.quad.len();
        let mut kv = DMatrix::zeros(mrows, nq);
        let pts = &self.grid.points;
        for q in 0..nq {
            let [y1, y2] = self.quad.points[q];
            let t = m.a * y1 + m.b * y2 + m.d;
            let (chi, chi_d) = self.cfg.chi_and_deriv(t);
            if chi == 0.0 && chi_d == 0.0 {
                continue;
            }
            let col = &mut kv.column_mut(q);
            for j in 0..mrows {
                let r0 = pts[j][0] - y1;
                let r1 = pts[j][1] - y2;
                let r2 = r0 * r0 + r1 * r1 + t * t;
                if r2 < MIN_DIST_SQ {
                    return Err(Error::Singularity {
                        x1: pts[j][0],
                        x2: pts[j][1],
                        y1,
                        y2,
                        y3: t,
                    });
                }
                let r = r2.sqrt();
                let r3 = r2 * r;
                let dot = -m.a * r0 - m.b * r1 - t;
                let value = match dir {
                    None => 2.0 * dot * chi / (FOUR_PI * r3),
                    Some([qa, qb, qd]) => {
                        let w = dot / (FOUR_PI * r3);
                        let dw_dt = (-3.0 * t * dot / r2 - 1.0) / (FOUR_PI * r3);
                        let g1 = r0 / (FOUR_PI * r3);
                        let g2 = r1 / (FOUR_PI * r3);
                        let da = 2.0 * (chi * (y1 * dw_dt - g1) + w * chi_d * y1);
                        let db = 2.0 * (chi * (y2 * dw_dt - g2) + w * chi_d * y2);
                        let dd = 2.0 * (chi * dw_dt + w * chi_d);
                        da * qa + db * qb + dd * qd
                    }
                };
                col[j] = value * self.sqrt_w[j];
            }
        }
        Ok(kv)
    }
}

fn wrap_assembly(m: &FaultParams, e: Error) -> Error {
    Error::Assembly {
        a: m.a,
        b: m.b,
        d: m.d,
        source: Box::new(e),
    }
}

/// Assembled forward matrix at one parameter triple.
///
/// `weighted` holds `sqrt(w_j) * (A_m phi_i)(x_j)`; Euclidean norms of
/// `weighted * c` are discrete `L^2(V)` norms of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    /// Parameters the matrix was assembled at.
    pub m: FaultParams,
    /// Weighted data matrix, `M x K^2`.
    pub weighted: DMatrix<f64>,
    /// Square roots of the grid weights, length `M`.
    pub sqrt_weights: DVector<f64>,
    /// Grid points per axis.
    pub grid_n: usize,
    /// Basis frequencies per axis.
    pub k_max: usize,
    /// Source region the quadrature ran over.
    pub region: SourceRegion,
    /// Kernel settings used.
    pub cfg: KernelConfig,
    /// Per-cell quadrature order used.
    pub quad_order: usize,
}

impl OperatorMatrix {
    /// Number of data samples.
    pub fn rows(&self) -> usize {
        self.weighted.nrows()
    }

    /// Number of basis modes.
    pub fn cols(&self) -> usize {
        self.weighted.ncols()
    }

    fn check_coeffs(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.cols() {
            return Err(Error::dims(format!(
                "expected {} coefficients, got {}",
                self.cols(),
                coeffs.len()
            )));
        }
        Ok(())
    }

    /// Pointwise data samples `(A_m g)(x_j)` of the density with the
    /// given coefficients.
    pub fn forward(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_coeffs(coeffs)?;
        let c = DVector::from_column_slice(coeffs);
        let weighted = &self.weighted * c;
        Ok(weighted
            .iter()
            .zip(self.sqrt_weights.iter())
            .map(|(v, sw)| v / sw)
            .collect())
    }

    /// Weighted data vector, whose Euclidean norm is the discrete
    /// `L^2(V)` norm.
    pub fn forward_weighted(&self, coeffs: &[f64]) -> Result<DVector<f64>> {
        self.check_coeffs(coeffs)?;
        Ok(&self.weighted * DVector::from_column_slice(coeffs))
    }

    /// Discrete `L^2(V)` norm of the data of the given density.
    pub fn data_norm(&self, coeffs: &[f64]) -> Result<f64> {
        Ok(self.forward_weighted(coeffs)?.norm())
    }
}

/// Convenience wrapper: build a context and assemble once.
pub fn assemble(
    m: &FaultParams,
    basis: &SineBasis,
    region: &SourceRegion,
    grid: &ObservationGrid,
    cfg: &KernelConfig,
    quad_order: usize,
) -> Result<OperatorMatrix> {
    AssemblyContext::new(
        basis.clone(),
        *region,
        grid.clone(),
        *cfg,
        quad_order,
    )?
    .assemble(m)
}

/// Pointwise forward data; see [`OperatorMatrix::forward`].
pub fn forward(op: &OperatorMatrix, coeffs: &[f64]) -> Result<Vec<f64>> {
    op.forward(coeffs)
}

/// Convenience wrapper: directional derivative via a one-shot context.
pub fn directional_derivative(
    m: &FaultParams,
    q_dir: [f64; 3],
    basis: &SineBasis,
    region: &SourceRegion,
    grid: &ObservationGrid,
    cfg: &KernelConfig,
    quad_order: usize,
) -> Result<OperatorMatrix> {
    AssemblyContext::new(basis.clone(), *region, grid.clone(), *cfg, quad_order)?
        .directional_derivative(m, q_dir)
}

/// Rank-`q` spectral data of an assembled operator.
///
/// Right singular vectors are coefficient vectors (orthonormal in
/// `H^1_0`); left singular vectors live in weighted data coordinates.
/// All `K^2` singular values are kept, in descending order; `q` marks
/// the retained subspace.
#[derive(Debug, Clone)]
pub struct SvdSubspace {
    /// Retained rank.
    pub q: usize,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors, `K^2 x K^2`, column `i` paired with
    /// `singular_values[i]`.
    pub right: DMatrix<f64>,
    /// Left singular vectors, `M x K^2`.
    pub left: DMatrix<f64>,
    /// Implied retention threshold, strictly inside
    /// `(sigma_{q+1}, sigma_q)` whenever the gap is open.
    pub beta: f64,
}

impl SvdSubspace {
    /// Smallest retained singular value.
    pub fn sigma_q(&self) -> f64 {
        self.singular_values[self.q - 1]
    }

    /// Relative spectral gap `(sigma_q - sigma_{q+1}) / sigma_q` behind
    /// the retained block (1 if the spectrum ends at `q`).
    pub fn rel_gap(&self) -> f64 {
        if self.q < self.singular_values.len() {
            (self.sigma_q() - self.singular_values[self.q]) / self.sigma_q()
        } else {
            1.0
        }
    }

    /// Top-`q` right singular vectors as a view.
    pub fn right_q(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.right.columns(0, self.q)
    }

    /// Top-`q` left singular vectors as a view.
    pub fn left_q(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.left.columns(0, self.q)
    }

    /// Orthogonal projection of a coefficient vector onto the span of
    /// the top-`q` right singular vectors.
    pub fn project(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.right.nrows() {
            return Err(Error::dims(format!(
                "expected {} coefficients, got {}",
                self.right.nrows(),
                coeffs.len()
            )));
        }
        let c = DVector::from_column_slice(coeffs);
        let vq = self.right_q();
        let p = vq * (vq.transpose() * c);
        Ok(p.as_slice().to_vec())
    }

    /// Residual norm of the least-squares fit of weighted data `b` over
    /// the retained subspace: `|b - U_q U_q^T b|`.
    pub fn lsq_residual(&self, b: &DVector<f64>) -> Result<f64> {
        if b.len() != self.left.nrows() {
            return Err(Error::dims(format!(
                "expected data of length {}, got {}",
                self.left.nrows(),
                b.len()
            )));
        }
        let uq = self.left_q();
        let fitted = uq * (uq.transpose() * b);
        Ok((b - fitted).norm())
    }

    /// Unit-norm random coefficient vector in the retained subspace.
    pub fn random_unit_member<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        use rand_distr::StandardNormal;
        let mut w = DVector::zeros(self.q);
        for i in 0..self.q {
            w[i] = rng.sample::<f64, _>(StandardNormal);
        }
        let n = w.norm();
        if n > 0.0 {
            w /= n;
        } else {
            w[0] = 1.0;
        }
        let u = self.right_q() * w;
        u.as_slice().to_vec()
    }
}

/// Spectral decomposition of the operator via the `K^2 x K^2` Gram
/// matrix (the discrete normal operator `A* A`, whose eigenvectors are
/// the right singular vectors).
pub fn svd_subspace(op: &OperatorMatrix, q: usize) -> Result<SvdSubspace> {
    let k2 = op.cols();
    if q == 0 || q >= k2 {
        return Err(Error::invalid(format!(
            "retained rank q must lie in 1..{k2}, got {q}"
        )));
    }
    let gram = op.weighted.transpose() * &op.weighted;
    let eig = nalgebra::SymmetricEigen::new(gram);
    // Sort eigenpairs by descending eigenvalue.
    let mut order: Vec<usize> = (0..k2).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("eigenvalues are finite")
    });
    let mut singular_values = Vec::with_capacity(k2);
    let mut right = DMatrix::zeros(k2, k2);
    for (col, &src) in order.iter().enumerate() {
        singular_values.push(eig.eigenvalues[src].max(0.0).sqrt());
        let mut v = eig.eigenvectors.column(src).clone_owned();
        // Deterministic sign: largest-magnitude component positive.
        let lead = v.iter().cloned().fold(0.0f64, |acc, x| {
            if x.abs() > acc.abs() {
                x
            } else {
                acc
            }
        });
        if lead < 0.0 {
            v.neg_mut();
        }
        right.set_column(col, &v);
    }
    // Left vectors: u_i = A v_i / sigma_i. For negligible sigma the
    // column is zeroed; reconstruction is unaffected since A v_i is
    // itself negligible there.
    let av = &op.weighted * &right;
    let mut left = DMatrix::zeros(op.rows(), k2);
    let floor = singular_values[0].max(f64::MIN_POSITIVE) * 1e-15;
    for (i, sigma) in singular_values.iter().enumerate() {
        if *sigma > floor {
            left.set_column(i, &(av.column(i) / *sigma));
        }
    }
    let beta = 0.5 * (singular_values[q - 1] + singular_values[q]);
    Ok(SvdSubspace {
        q,
        singular_values,
        right,
        left,
        beta,
    })
}

/// Projection onto the retained subspace; see [`SvdSubspace::project`].
pub fn project(sub: &SvdSubspace, coeffs: &[f64]) -> Result<Vec<f64>> {
    sub.project(coeffs)
}
