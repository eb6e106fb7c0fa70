//! Galerkin bases: divergence-free velocity fields and L2-orthonormal
//! concentration modes, with projections onto their spans.
//!
//! Square mode builds velocity fields from stream-function generators
//! psi_mn = sin^2(m pi x / L) sin^2(n pi y / L); both psi and grad psi vanish
//! on the boundary, so w = curl psi = (psi_y, -psi_x) satisfies full no-slip
//! and is solenoidal identically. The generators are combined through the
//! generalized symmetric eigenproblem K c = lambda M c on their span (M the
//! L2 Gram matrix, K the H1 stiffness), which yields an L2-orthonormal basis
//! whose Rayleigh quotients are exactly the nondecreasing eigenvalues.
//! Torus mode uses realified divergence-free Fourier modes, which are already
//! orthogonal; they are normalized and ordered by |k|^2.
//!
//! All derivative data is analytic. Diagonal gradient entries of every
//! velocity field are stored as an exact +/- pair, so node divergences vanish
//! bit-exactly, not merely to rounding.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::{Domain, DomainMode, Quadrature, ScalarField, VectorField, VectorGradient};
use crate::numeric::pairwise_sum_by;

/// Hard cap on basis sizes.
pub const MAX_BASIS: usize = 64;

/// Required oversampling of the quadrature relative to the highest mode
/// frequency, to keep aliasing of the nonlinear terms below tolerance.
pub const RESOLUTION_MARGIN: usize = 4;

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Closed-form divergence-free velocity generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityGenerator {
    /// curl of the stream function sin^2(m pi x / L) sin^2(n pi y / L).
    SquareStream { m: usize, n: usize },
    /// Realified Fourier mode trig(k.x) k_perp / |k| on the torus.
    TorusMode { k1: i64, k2: i64, cos: bool },
}

/// Value and Jacobian of a generator at a point. The returned tuple is
/// (v1, v2, g11, g12, g21); the missing Jacobian entry g22 equals -g11
/// exactly for every generator, and is derived, never recomputed, so the
/// discrete divergence cancels bit-exactly.
fn eval_velocity_generator(
    gen: &VelocityGenerator,
    extent: f64,
    x: f64,
    y: f64,
) -> (f64, f64, f64, f64, f64) {
    match *gen {
        VelocityGenerator::SquareStream { m, n } => {
            let sm = std::f64::consts::PI * m as f64 / extent;
            let sn = std::f64::consts::PI * n as f64 / extent;
            let sx = (sm * x).sin();
            let sy = (sn * y).sin();
            let s2x = (2.0 * sm * x).sin();
            let s2y = (2.0 * sn * y).sin();
            let c2x = (2.0 * sm * x).cos();
            let c2y = (2.0 * sn * y).cos();
            // v = (psi_y, -psi_x)
            let v1 = sn * sx * sx * s2y;
            let v2 = -(sm * s2x * sy * sy);
            // g11 = psi_xy; g12 = psi_yy; g21 = -psi_xx; g22 = -psi_xy = -g11.
            let g11 = sm * sn * s2x * s2y;
            let g12 = 2.0 * sn * sn * sx * sx * c2y;
            let g21 = -(2.0 * sm * sm * c2x * sy * sy);
            (v1, v2, g11, g12, g21)
        }
        VelocityGenerator::TorusMode { k1, k2, cos } => {
            let s = 2.0 * std::f64::consts::PI / extent;
            let (k1, k2) = (k1 as f64, k2 as f64);
            let norm_k = (k1 * k1 + k2 * k2).sqrt();
            let amp = (2.0 / (extent * extent)).sqrt();
            let phase = s * (k1 * x + k2 * y);
            let (trig, dtrig) = if cos {
                (phase.cos(), -phase.sin())
            } else {
                (phase.sin(), phase.cos())
            };
            let e1 = -k2 / norm_k;
            let e2 = k1 / norm_k;
            let v1 = amp * trig * e1;
            let v2 = amp * trig * e2;
            let g11 = amp * dtrig * s * k1 * e1;
            let g12 = amp * dtrig * s * k2 * e1;
            let g21 = amp * dtrig * s * k1 * e2;
            (v1, v2, g11, g12, g21)
        }
    }
}

fn velocity_generator_frequency(gen: &VelocityGenerator) -> usize {
    match *gen {
        // sin^2 doubles the axis frequency.
        VelocityGenerator::SquareStream { m, n } => 2 * m.max(n),
        VelocityGenerator::TorusMode { k1, k2, .. } => k1.unsigned_abs().max(k2.unsigned_abs()) as usize,
    }
}

fn enumerate_velocity_generators(mode: DomainMode, count: usize) -> Vec<VelocityGenerator> {
    match mode {
        DomainMode::UnitSquareDirichlet => {
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            let top = 16usize; // 256 candidates cover the cap comfortably
            for m in 1..=top {
                for n in 1..=top {
                    pairs.push((m, n));
                }
            }
            // Nondecreasing m^2 + n^2, ties broken with m <= n first.
            pairs.sort_by_key(|&(m, n)| (m * m + n * n, (m > n) as usize, m));
            pairs
                .into_iter()
                .take(count)
                .map(|(m, n)| VelocityGenerator::SquareStream { m, n })
                .collect()
        }
        DomainMode::PeriodicTorus => {
            let mut ks: Vec<(i64, i64)> = Vec::new();
            let top = 12i64;
            for k1 in 0..=top {
                for k2 in -top..=top {
                    if k1 == 0 && k2 <= 0 {
                        continue; // canonical half-plane representative
                    }
                    ks.push((k1, k2));
                }
            }
            ks.sort_by_key(|&(k1, k2)| (k1 * k1 + k2 * k2, k1, k2));
            let mut gens = Vec::with_capacity(count);
            'outer: for (k1, k2) in ks {
                for cos in [true, false] {
                    gens.push(VelocityGenerator::TorusMode { k1, k2, cos });
                    if gens.len() == count {
                        break 'outer;
                    }
                }
            }
            gens
        }
    }
}

/// Closed-form concentration mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConcentrationGenerator {
    /// (2/L) sin(k pi x / L) sin(l pi y / L).
    SquareSine { k: usize, l: usize },
    /// sqrt(2/|Omega|) trig(k.x) on the torus; zero-mean by construction.
    TorusTrig { k1: i64, k2: i64, cos: bool },
}

fn eval_concentration_generator(
    gen: &ConcentrationGenerator,
    extent: f64,
    x: f64,
    y: f64,
) -> (f64, f64, f64) {
    match *gen {
        ConcentrationGenerator::SquareSine { k, l } => {
            let sk = std::f64::consts::PI * k as f64 / extent;
            let sl = std::f64::consts::PI * l as f64 / extent;
            let amp = 2.0 / extent;
            let v = amp * (sk * x).sin() * (sl * y).sin();
            let gx = amp * sk * (sk * x).cos() * (sl * y).sin();
            let gy = amp * sl * (sk * x).sin() * (sl * y).cos();
            (v, gx, gy)
        }
        ConcentrationGenerator::TorusTrig { k1, k2, cos } => {
            let s = 2.0 * std::f64::consts::PI / extent;
            let (k1, k2) = (k1 as f64, k2 as f64);
            let amp = (2.0 / (extent * extent)).sqrt();
            let phase = s * (k1 * x + k2 * y);
            let (trig, dtrig) = if cos {
                (phase.cos(), -phase.sin())
            } else {
                (phase.sin(), phase.cos())
            };
            (amp * trig, amp * dtrig * s * k1, amp * dtrig * s * k2)
        }
    }
}

fn concentration_generator_frequency(gen: &ConcentrationGenerator) -> usize {
    match *gen {
        ConcentrationGenerator::SquareSine { k, l } => k.max(l),
        ConcentrationGenerator::TorusTrig { k1, k2, .. } => {
            k1.unsigned_abs().max(k2.unsigned_abs()) as usize
        }
    }
}

fn enumerate_concentration_generators(mode: DomainMode, count: usize) -> Vec<ConcentrationGenerator> {
    match mode {
        DomainMode::UnitSquareDirichlet => {
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            let top = 16usize;
            for k in 1..=top {
                for l in 1..=top {
                    pairs.push((k, l));
                }
            }
            pairs.sort_by_key(|&(k, l)| (k * k + l * l, (k > l) as usize, k));
            pairs
                .into_iter()
                .take(count)
                .map(|(k, l)| ConcentrationGenerator::SquareSine { k, l })
                .collect()
        }
        DomainMode::PeriodicTorus => {
            let mut ks: Vec<(i64, i64)> = Vec::new();
            let top = 12i64;
            for k1 in 0..=top {
                for k2 in -top..=top {
                    if k1 == 0 && k2 <= 0 {
                        continue;
                    }
                    ks.push((k1, k2));
                }
            }
            ks.sort_by_key(|&(k1, k2)| (k1 * k1 + k2 * k2, k1, k2));
            let mut gens = Vec::with_capacity(count);
            'outer: for (k1, k2) in ks {
                for cos in [true, false] {
                    gens.push(ConcentrationGenerator::TorusTrig { k1, k2, cos });
                    if gens.len() == count {
                        break 'outer;
                    }
                }
            }
            gens
        }
    }
}

// ---------------------------------------------------------------------------
// Velocity basis
// ---------------------------------------------------------------------------

/// Divergence-free velocity basis with analytic derivative data at the
/// quadrature nodes, L2-orthonormal, ordered by Rayleigh quotient.
#[derive(Debug, Clone)]
pub struct VelocityBasis {
    pub mode: DomainMode,
    pub extent: f64,
    pub quad: Arc<Quadrature>,
    pub n: usize,
    pub generators: Vec<VelocityGenerator>,
    /// Column j holds the generator coefficients of basis field j.
    pub transform: DMatrix<f64>,
    /// Rayleigh quotients <grad w_j, grad w_j> / <w_j, w_j>, nondecreasing.
    pub rayleigh: Vec<f64>,
    pub v1: Vec<Vec<f64>>,
    pub v2: Vec<Vec<f64>>,
    /// du1/dx samples; du2/dy is its exact negation (solenoidality).
    pub g11: Vec<Vec<f64>>,
    pub g12: Vec<Vec<f64>>,
    pub g21: Vec<Vec<f64>>,
}

fn check_basis_request(n: usize, max_freq: usize, resolution: usize) -> Result<()> {
    if n < 1 || n > MAX_BASIS {
        return Err(Error::BasisTooLarge {
            requested: n,
            max: MAX_BASIS,
        });
    }
    if resolution < RESOLUTION_MARGIN * max_freq {
        return Err(Error::BasisTooLarge {
            requested: RESOLUTION_MARGIN * max_freq,
            max: resolution,
        });
    }
    Ok(())
}

/// Build the first `n` divergence-free velocity basis fields on `quad`.
pub fn build_velocity_basis(
    domain: &Domain,
    quad: &Arc<Quadrature>,
    n: usize,
) -> Result<VelocityBasis> {
    let generators = enumerate_velocity_generators(domain.mode, n);
    let max_freq = generators
        .iter()
        .map(velocity_generator_frequency)
        .max()
        .unwrap_or(1);
    check_basis_request(n, max_freq, quad.resolution)?;

    let nq = quad.len();
    // Generator samples: value and Jacobian arrays.
    let mut gv1 = vec![vec![0.0; nq]; n];
    let mut gv2 = vec![vec![0.0; nq]; n];
    let mut gg11 = vec![vec![0.0; nq]; n];
    let mut gg12 = vec![vec![0.0; nq]; n];
    let mut gg21 = vec![vec![0.0; nq]; n];
    for (i, g) in generators.iter().enumerate() {
        for q in 0..nq {
            let (x, y) = quad.point(q);
            let (v1, v2, g11, g12, g21) = eval_velocity_generator(g, domain.extent, x, y);
            gv1[i][q] = v1;
            gv2[i][q] = v2;
            gg11[i][q] = g11;
            gg12[i][q] = g12;
            gg21[i][q] = g21;
        }
    }

    let (transform, rayleigh) = match domain.mode {
        DomainMode::PeriodicTorus => {
            // Fourier modes are orthogonal and unit-normalized already;
            // Rayleigh quotient of mode k is |k|^2 (2 pi / L)^2.
            let transform = DMatrix::identity(n, n);
            let s = 2.0 * std::f64::consts::PI / domain.extent;
            let rayleigh = generators
                .iter()
                .map(|g| match *g {
                    VelocityGenerator::TorusMode { k1, k2, .. } => {
                        s * s * (k1 * k1 + k2 * k2) as f64
                    }
                    _ => unreachable!(),
                })
                .collect();
            (transform, rayleigh)
        }
        DomainMode::UnitSquareDirichlet => {
            // Assemble L2 mass and H1 stiffness Gram matrices by quadrature.
            let dot = |a: &[Vec<f64>], b: &[Vec<f64>], i: usize, j: usize| -> f64 {
                pairwise_sum_by(nq, |q| quad.weight(q) * a[i][q] * b[j][q])
            };
            let mut mass = DMatrix::zeros(n, n);
            let mut stiff = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let m = dot(&gv1, &gv1, i, j) + dot(&gv2, &gv2, i, j);
                    // |grad w|^2 = g11^2 + g12^2 + g21^2 + g22^2 with g22 = -g11.
                    let k = 2.0 * dot(&gg11, &gg11, i, j)
                        + dot(&gg12, &gg12, i, j)
                        + dot(&gg21, &gg21, i, j);
                    mass[(i, j)] = m;
                    mass[(j, i)] = m;
                    stiff[(i, j)] = k;
                    stiff[(j, i)] = k;
                }
            }
            generalized_eigen_ascending(&mass, &stiff)?
        }
    };

    // Combine generator samples into orthonormal basis fields.
    let combine = |arrays: &[Vec<f64>], j: usize| -> Vec<f64> {
        let mut out = vec![0.0; nq];
        for i in 0..n {
            let c = transform[(i, j)];
            if c != 0.0 {
                for q in 0..nq {
                    out[q] += c * arrays[i][q];
                }
            }
        }
        out
    };
    let mut v1 = Vec::with_capacity(n);
    let mut v2 = Vec::with_capacity(n);
    let mut g11 = Vec::with_capacity(n);
    let mut g12 = Vec::with_capacity(n);
    let mut g21 = Vec::with_capacity(n);
    for j in 0..n {
        v1.push(combine(&gv1, j));
        v2.push(combine(&gv2, j));
        g11.push(combine(&gg11, j));
        g12.push(combine(&gg12, j));
        g21.push(combine(&gg21, j));
    }

    Ok(VelocityBasis {
        mode: domain.mode,
        extent: domain.extent,
        quad: quad.clone(),
        n,
        generators,
        transform,
        rayleigh,
        v1,
        v2,
        g11,
        g12,
        g21,
    })
}

/// Solve K c = lambda M c on the generator span; returns the coefficient
/// matrix (columns M-orthonormal) and the ascending eigenvalues.
fn generalized_eigen_ascending(
    mass: &DMatrix<f64>,
    stiff: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = mass.nrows();
    let chol = nalgebra::Cholesky::new(mass.clone()).ok_or(Error::SingularGram)?;
    let l = chol.l();
    let tmp = l
        .solve_lower_triangular(stiff)
        .ok_or(Error::SingularGram)?;
    let tmp2 = l
        .solve_lower_triangular(&tmp.transpose())
        .ok_or(Error::SingularGram)?;
    let sym = 0.5 * (&tmp2 + tmp2.transpose());
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues are finite")
    });
    let y_sorted = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let x = l
        .transpose()
        .solve_upper_triangular(&y_sorted)
        .ok_or(Error::SingularGram)?;
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    Ok((x, values))
}

impl VelocityBasis {
    /// L2 projection coefficients <f, w_j>.
    pub fn project(&self, f: &VectorField) -> Result<Vec<f64>> {
        if !f.quad.same_layout(&self.quad) {
            return Err(Error::QuadratureMismatch);
        }
        let nq = self.quad.len();
        Ok((0..self.n)
            .map(|j| {
                pairwise_sum_by(nq, |q| {
                    self.quad.weight(q) * (f.x[q] * self.v1[j][q] + f.y[q] * self.v2[j][q])
                })
            })
            .collect())
    }

    /// Reconstruct the velocity field of a coefficient vector, with analytic
    /// gradient data. The Jacobian diagonal is an exact +/- pair, so the
    /// divergence of the result is bit-exactly zero.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<VectorField> {
        if coeffs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: coeffs.len(),
            });
        }
        let nq = self.quad.len();
        let mut x = vec![0.0; nq];
        let mut y = vec![0.0; nq];
        let mut du1_dx = vec![0.0; nq];
        let mut du1_dy = vec![0.0; nq];
        let mut du2_dx = vec![0.0; nq];
        for (j, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for q in 0..nq {
                x[q] += a * self.v1[j][q];
                y[q] += a * self.v2[j][q];
                du1_dx[q] += a * self.g11[j][q];
                du1_dy[q] += a * self.g12[j][q];
                du2_dx[q] += a * self.g21[j][q];
            }
        }
        let du2_dy = du1_dx.iter().map(|v| -v).collect();
        Ok(VectorField {
            x,
            y,
            grad: Some(VectorGradient {
                du1_dx,
                du1_dy,
                du2_dx,
                du2_dy,
            }),
            quad: self.quad.clone(),
        })
    }

    /// Evaluate the reconstruction at arbitrary points (snapshot resampling).
    pub fn evaluate_at(&self, coeffs: &[f64], points: &[(f64, f64)]) -> Result<Vec<[f64; 2]>> {
        if coeffs.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: coeffs.len(),
            });
        }
        // Generator-space coefficients: transform * coeffs.
        let c = &self.transform * DVector::from_column_slice(coeffs);
        Ok(points
            .iter()
            .map(|&(x, y)| {
                let mut v = [0.0; 2];
                for (i, g) in self.generators.iter().enumerate() {
                    let (v1, v2, _, _, _) = eval_velocity_generator(g, self.extent, x, y);
                    v[0] += c[i] * v1;
                    v[1] += c[i] * v2;
                }
                v
            })
            .collect())
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let nq = self.quad.len();
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let g = pairwise_sum_by(nq, |q| {
                    self.quad.weight(q)
                        * (self.v1[i][q] * self.v1[j][q] + self.v2[i][q] * self.v2[j][q])
                });
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Largest node divergence over all basis fields.
    pub fn max_node_divergence(&self) -> f64 {
        let nq = self.quad.len();
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            for q in 0..nq {
                worst = worst.max((self.g11[j][q] + (-self.g11[j][q])).abs());
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Concentration basis
// ---------------------------------------------------------------------------

/// L2-orthonormal concentration basis with analytic gradients and the
/// H1 stiffness matrix G_kl = <grad z_k, grad z_l>.
#[derive(Debug, Clone)]
pub struct ConcentrationBasis {
    pub mode: DomainMode,
    pub extent: f64,
    pub quad: Arc<Quadrature>,
    pub m: usize,
    pub generators: Vec<ConcentrationGenerator>,
    pub values: Vec<Vec<f64>>,
    pub gx: Vec<Vec<f64>>,
    pub gy: Vec<Vec<f64>>,
    pub stiffness: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

/// Build the first `m` concentration modes on `quad`.
pub fn build_concentration_basis(
    domain: &Domain,
    quad: &Arc<Quadrature>,
    m: usize,
) -> Result<ConcentrationBasis> {
    let generators = enumerate_concentration_generators(domain.mode, m);
    let max_freq = generators
        .iter()
        .map(concentration_generator_frequency)
        .max()
        .unwrap_or(1);
    check_basis_request(m, max_freq, quad.resolution)?;

    let nq = quad.len();
    let mut values = vec![vec![0.0; nq]; m];
    let mut gx = vec![vec![0.0; nq]; m];
    let mut gy = vec![vec![0.0; nq]; m];
    for (k, g) in generators.iter().enumerate() {
        for q in 0..nq {
            let (x, y) = quad.point(q);
            let (v, dx, dy) = eval_concentration_generator(g, domain.extent, x, y);
            values[k][q] = v;
            gx[k][q] = dx;
            gy[k][q] = dy;
        }
    }
    let mut stiffness = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let g = pairwise_sum_by(nq, |q| {
                quad.weight(q) * (gx[i][q] * gx[j][q] + gy[i][q] * gy[j][q])
            });
            stiffness[(i, j)] = g;
            stiffness[(j, i)] = g;
        }
    }
    let chol = nalgebra::Cholesky::new(stiffness.clone()).ok_or(Error::SingularGram)?;
    Ok(ConcentrationBasis {
        mode: domain.mode,
        extent: domain.extent,
        quad: quad.clone(),
        m,
        generators,
        values,
        gx,
        gy,
        stiffness,
        chol,
    })
}

impl ConcentrationBasis {
    /// L2 projection coefficients <f, z_k>.
    pub fn project(&self, f: &ScalarField) -> Result<Vec<f64>> {
        if !f.quad.same_layout(&self.quad) {
            return Err(Error::QuadratureMismatch);
        }
        let nq = self.quad.len();
        Ok((0..self.m)
            .map(|k| {
                pairwise_sum_by(nq, |q| self.quad.weight(q) * f.values[q] * self.values[k][q])
            })
            .collect())
    }

    /// Projection in the H1_0 inner product <grad ., grad .>: solves
    /// G c = rhs with rhs_k = <grad f, grad z_k>. Requires analytic gradient
    /// data on `f`.
    pub fn project_h10(&self, f: &ScalarField) -> Result<Vec<f64>> {
        if !f.quad.same_layout(&self.quad) {
            return Err(Error::QuadratureMismatch);
        }
        let grad = f.grad.as_ref().ok_or(Error::NonDifferentiableField)?;
        let nq = self.quad.len();
        let rhs = DVector::from_fn(self.m, |k, _| {
            pairwise_sum_by(nq, |q| {
                self.quad.weight(q)
                    * (grad[0][q] * self.gx[k][q] + grad[1][q] * self.gy[k][q])
            })
        });
        let sol = self.chol.solve(&rhs);
        Ok(sol.iter().copied().collect())
    }

    /// Reconstruct the concentration field of a coefficient vector, with
    /// analytic gradient data.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<ScalarField> {
        if coeffs.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: coeffs.len(),
            });
        }
        let nq = self.quad.len();
        let mut values = vec![0.0; nq];
        let mut dx = vec![0.0; nq];
        let mut dy = vec![0.0; nq];
        for (k, &b) in coeffs.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            for q in 0..nq {
                values[q] += b * self.values[k][q];
                dx[q] += b * self.gx[k][q];
                dy[q] += b * self.gy[k][q];
            }
        }
        Ok(ScalarField {
            values,
            grad: Some([dx, dy]),
            quad: self.quad.clone(),
        })
    }

    pub fn evaluate_at(&self, coeffs: &[f64], points: &[(f64, f64)]) -> Result<Vec<f64>> {
        if coeffs.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: coeffs.len(),
            });
        }
        Ok(points
            .iter()
            .map(|&(x, y)| {
                let mut v = 0.0;
                for (k, g) in self.generators.iter().enumerate() {
                    let (z, _, _) = eval_concentration_generator(g, self.extent, x, y);
                    v += coeffs[k] * z;
                }
                v
            })
            .collect())
    }

    pub fn gram_residual(&self) -> f64 {
        let nq = self.quad.len();
        let mut worst: f64 = 0.0;
        for i in 0..self.m {
            for j in i..self.m {
                let g = pairwise_sum_by(nq, |q| {
                    self.quad.weight(q) * self.values[i][q] * self.values[j][q]
                });
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Basis cache (optional binary file with a versioned header)
// ---------------------------------------------------------------------------

const CACHE_MAGIC: &[u8; 8] = b"SYNBAS01";

fn write_f64s(out: &mut impl Write, xs: &[f64]) -> std::io::Result<()> {
    for &x in xs {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(inp: &mut impl Read, n: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = [0u8; 8];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        inp.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

impl VelocityBasis {
    /// Write the orthonormalized node values to a cache file.
    pub fn save_cache(&self, path: &std::path::Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&[match self.mode {
            DomainMode::UnitSquareDirichlet => 0u8,
            DomainMode::PeriodicTorus => 1u8,
        }])?;
        out.write_all(&(self.n as u32).to_le_bytes())?;
        out.write_all(&(self.quad.resolution as u32).to_le_bytes())?;
        out.write_all(&self.extent.to_le_bytes())?;
        write_f64s(&mut out, &self.rayleigh)?;
        write_f64s(&mut out, self.transform.as_slice())?;
        for j in 0..self.n {
            write_f64s(&mut out, &self.v1[j])?;
            write_f64s(&mut out, &self.v2[j])?;
            write_f64s(&mut out, &self.g11[j])?;
            write_f64s(&mut out, &self.g12[j])?;
            write_f64s(&mut out, &self.g21[j])?;
        }
        Ok(())
    }

    /// Load a cached basis if the header matches the request; any mismatch
    /// (or unreadable file) yields `None` and the caller regenerates.
    pub fn load_cache(
        path: &std::path::Path,
        domain: &Domain,
        quad: &Arc<Quadrature>,
        n: usize,
    ) -> Option<VelocityBasis> {
        let f = std::fs::File::open(path).ok()?;
        let mut inp = std::io::BufReader::new(f);
        let mut magic = [0u8; 8];
        inp.read_exact(&mut magic).ok()?;
        if &magic != CACHE_MAGIC {
            return None;
        }
        let mut mode_b = [0u8; 1];
        inp.read_exact(&mut mode_b).ok()?;
        let mode = match mode_b[0] {
            0 => DomainMode::UnitSquareDirichlet,
            1 => DomainMode::PeriodicTorus,
            _ => return None,
        };
        let mut u32b = [0u8; 4];
        inp.read_exact(&mut u32b).ok()?;
        let n_file = u32::from_le_bytes(u32b) as usize;
        inp.read_exact(&mut u32b).ok()?;
        let res_file = u32::from_le_bytes(u32b) as usize;
        let mut f64b = [0u8; 8];
        inp.read_exact(&mut f64b).ok()?;
        let extent_file = f64::from_le_bytes(f64b);
        if mode != domain.mode
            || n_file != n
            || res_file != quad.resolution
            || extent_file != domain.extent
        {
            return None;
        }
        let rayleigh = read_f64s(&mut inp, n).ok()?;
        let transform_raw = read_f64s(&mut inp, n * n).ok()?;
        let transform = DMatrix::from_column_slice(n, n, &transform_raw);
        let nq = quad.len();
        let mut v1 = Vec::with_capacity(n);
        let mut v2 = Vec::with_capacity(n);
        let mut g11 = Vec::with_capacity(n);
        let mut g12 = Vec::with_capacity(n);
        let mut g21 = Vec::with_capacity(n);
        for _ in 0..n {
            v1.push(read_f64s(&mut inp, nq).ok()?);
            v2.push(read_f64s(&mut inp, nq).ok()?);
            g11.push(read_f64s(&mut inp, nq).ok()?);
            g12.push(read_f64s(&mut inp, nq).ok()?);
            g21.push(read_f64s(&mut inp, nq).ok()?);
        }
        Some(VelocityBasis {
            mode,
            extent: domain.extent,
            quad: quad.clone(),
            n,
            generators: enumerate_velocity_generators(mode, n),
            transform,
            rayleigh,
            v1,
            v2,
            g11,
            g12,
            g21,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{divergence, l2_norm_vector};
    use approx::assert_abs_diff_eq;

    fn square() -> (Domain, Arc<Quadrature>) {
        let d = Domain::unit_square(1.0);
        let q = Quadrature::new(&d, 64);
        (d, q)
    }

    fn torus() -> (Domain, Arc<Quadrature>) {
        let d = Domain::torus(1.0);
        let q = Quadrature::new(&d, 32);
        (d, q)
    }

    #[test]
    fn single_square_field_is_normalized() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 1).unwrap();
        let w1 = basis.reconstruct(&[1.0]).unwrap();
        assert_abs_diff_eq!(l2_norm_vector(&w1), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn torus_pair_is_exactly_orthogonal() {
        let (d, q) = torus();
        let basis = build_velocity_basis(&d, &q, 2).unwrap();
        assert!(basis.gram_residual() < 1e-12);
    }

    #[test]
    fn square_gram_matrix_is_identity() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 32).unwrap();
        assert!(
            basis.gram_residual() < 1e-10,
            "gram residual {:e}",
            basis.gram_residual()
        );
    }

    #[test]
    fn basis_fields_are_pointwise_divergence_free() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 16).unwrap();
        assert_eq!(basis.max_node_divergence(), 0.0);
        // Through the public reconstruction path as well.
        let coeffs: Vec<f64> = (0..16).map(|j| ((j * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let u = basis.reconstruct(&coeffs).unwrap();
        let div = divergence(&u).unwrap();
        assert!(div.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_matches_finite_difference_oracle() {
        // Independent check: central differences of the node-evaluated field
        // on an auxiliary uniform grid.
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 6).unwrap();
        let coeffs = [0.4, -0.2, 0.7, 0.1, -0.5, 0.3];
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for iy in 1..20 {
            for ix in 1..20 {
                let x = ix as f64 / 20.0;
                let y = iy as f64 / 20.0;
                let pts = [
                    (x + h, y),
                    (x - h, y),
                    (x, y + h),
                    (x, y - h),
                ];
                let vals = basis.evaluate_at(&coeffs, &pts).unwrap();
                let div = (vals[0][0] - vals[1][0]) / (2.0 * h)
                    + (vals[2][1] - vals[3][1]) / (2.0 * h);
                worst = worst.max(div.abs());
            }
        }
        assert!(worst < 1e-5, "fd divergence {worst:e}");
    }

    #[test]
    fn sym_gradient_matches_central_differences_on_random_combinations() {
        use crate::fields::sym_gradient;
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 8).unwrap();
        let coeffs = [0.3, -0.5, 0.2, 0.4, -0.1, 0.25, -0.3, 0.15];
        let u = basis.reconstruct(&coeffs).unwrap();
        let du = sym_gradient(&u).unwrap();
        // Central differences of the evaluated field on an auxiliary grid;
        // second-order in the step.
        let mut worst_per_h = Vec::new();
        for h in [1e-3, 5e-4] {
            let mut worst: f64 = 0.0;
            for q_idx in (0..q.len()).step_by(197) {
                let (x, y) = q.point(q_idx);
                if x < 2.0 * h || x > 1.0 - 2.0 * h || y < 2.0 * h || y > 1.0 - 2.0 * h {
                    continue;
                }
                let pts = [(x + h, y), (x - h, y), (x, y + h), (x, y - h)];
                let v = basis.evaluate_at(&coeffs, &pts).unwrap();
                let d11 = (v[0][0] - v[1][0]) / (2.0 * h);
                let d22 = (v[2][1] - v[3][1]) / (2.0 * h);
                let d12 = 0.5 * ((v[2][0] - v[3][0]) / (2.0 * h) + (v[0][1] - v[1][1]) / (2.0 * h));
                worst = worst.max((d11 - du.xx[q_idx]).abs());
                worst = worst.max((d22 - du.yy[q_idx]).abs());
                worst = worst.max((d12 - du.xy[q_idx]).abs());
            }
            worst_per_h.push(worst);
        }
        // O(h^2): halving h divides the deviation by about 4.
        assert!(worst_per_h[0] < 1e-3, "fd deviation {:e}", worst_per_h[0]);
        let ratio = worst_per_h[0] / worst_per_h[1];
        assert!(ratio > 2.5, "expected quadratic decay, ratio {ratio}");
    }

    #[test]
    fn rayleigh_quotients_are_nondecreasing_and_match_fields() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 16).unwrap();
        for j in 1..16 {
            assert!(basis.rayleigh[j] >= basis.rayleigh[j - 1]);
        }
        // Consistency: quotient recomputed from the stored derivative arrays.
        for j in [0, 5, 15] {
            let nq = q.len();
            let num = pairwise_sum_by(nq, |qq| {
                let g22 = -basis.g11[j][qq];
                q.weight(qq)
                    * (basis.g11[j][qq] * basis.g11[j][qq]
                        + basis.g12[j][qq] * basis.g12[j][qq]
                        + basis.g21[j][qq] * basis.g21[j][qq]
                        + g22 * g22)
            });
            let den = pairwise_sum_by(nq, |qq| {
                q.weight(qq)
                    * (basis.v1[j][qq] * basis.v1[j][qq] + basis.v2[j][qq] * basis.v2[j][qq])
            });
            assert_abs_diff_eq!(num / den, basis.rayleigh[j], epsilon = 1e-8);
        }
    }

    #[test]
    fn first_square_rayleigh_matches_analytic_value() {
        // Span of the single generator psi_11: quotient is 16 pi^2 / 3.
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 1).unwrap();
        let expected = 16.0 * std::f64::consts::PI.powi(2) / 3.0;
        assert_abs_diff_eq!(basis.rayleigh[0], expected, epsilon = 1e-9);
    }

    #[test]
    fn first_square_rayleigh_matches_finite_difference_oracle() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 1).unwrap();
        // Dense uniform grid; gradients by central differences of node values.
        let res = 200usize;
        let h = 1.0 / res as f64;
        let mut pts = Vec::new();
        for iy in 0..=res {
            for ix in 0..=res {
                pts.push((ix as f64 * h, iy as f64 * h));
            }
        }
        let vals = basis.evaluate_at(&[1.0], &pts).unwrap();
        let at = |ix: usize, iy: usize| vals[iy * (res + 1) + ix];
        let mut num = 0.0;
        let mut den = 0.0;
        for iy in 1..res {
            for ix in 1..res {
                let v = at(ix, iy);
                let gx = [
                    (at(ix + 1, iy)[0] - at(ix - 1, iy)[0]) / (2.0 * h),
                    (at(ix + 1, iy)[1] - at(ix - 1, iy)[1]) / (2.0 * h),
                ];
                let gy = [
                    (at(ix, iy + 1)[0] - at(ix, iy - 1)[0]) / (2.0 * h),
                    (at(ix, iy + 1)[1] - at(ix, iy - 1)[1]) / (2.0 * h),
                ];
                num += (gx[0] * gx[0] + gx[1] * gx[1] + gy[0] * gy[0] + gy[1] * gy[1]) * h * h;
                den += (v[0] * v[0] + v[1] * v[1]) * h * h;
            }
        }
        let fd = num / den;
        let rel = (fd - basis.rayleigh[0]).abs() / basis.rayleigh[0];
        assert!(rel < 0.01, "fd oracle off by {rel:e}");
    }

    #[test]
    fn square_fields_vanish_on_the_boundary() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 12).unwrap();
        let coeffs: Vec<f64> = (0..12).map(|j| 0.5 - 0.07 * j as f64).collect();
        let mut pts = Vec::new();
        for i in 0..=40 {
            let s = i as f64 / 40.0;
            pts.push((s, 0.0));
            pts.push((s, 1.0));
            pts.push((0.0, s));
            pts.push((1.0, s));
        }
        let vals = basis.evaluate_at(&coeffs, &pts).unwrap();
        for v in vals {
            assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12, "boundary leak {v:?}");
        }
    }

    #[test]
    fn velocity_projection_recovers_unit_vectors() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 8).unwrap();
        let w3 = basis.reconstruct(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let coeffs = basis.project(&w3).unwrap();
        for (j, c) in coeffs.iter().enumerate() {
            let target = if j == 2 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(*c, target, epsilon = 1e-10);
        }
    }

    #[test]
    fn velocity_projection_is_idempotent_on_span() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 10).unwrap();
        let coeffs: Vec<f64> = (0..10).map(|j| (0.3 * j as f64).sin()).collect();
        let u = basis.reconstruct(&coeffs).unwrap();
        let once = basis.project(&u).unwrap();
        let twice = basis.project(&basis.reconstruct(&once).unwrap()).unwrap();
        for j in 0..10 {
            assert_abs_diff_eq!(once[j], coeffs[j], epsilon = 1e-10);
            assert_abs_diff_eq!(twice[j], once[j], epsilon = 1e-10);
        }
    }

    #[test]
    fn projection_of_out_of_span_mode_is_small() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 4).unwrap();
        // A high generator far beyond the span of the first 4.
        let hi = VelocityGenerator::SquareStream { m: 7, n: 8 };
        let f = VectorField::from_fn(q.clone(), |x, y| {
            let (v1, v2, _, _, _) = eval_velocity_generator(&hi, 1.0, x, y);
            [v1, v2]
        });
        let coeffs = basis.project(&f).unwrap();
        // Not orthogonal analytically, but the overlap is tiny.
        for c in coeffs {
            assert!(c.abs() < 0.05, "unexpected overlap {c}");
        }
    }

    #[test]
    fn concentration_mode_normalization_and_stiffness() {
        let (d, q) = square();
        let basis = build_concentration_basis(&d, &q, 8).unwrap();
        assert!(basis.gram_residual() < 1e-10);
        // G_11 = 2 pi^2 for the (1,1) sine mode on the unit square.
        assert_abs_diff_eq!(
            basis.stiffness[(0, 0)],
            2.0 * std::f64::consts::PI.powi(2),
            epsilon = 1e-9
        );
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(basis.stiffness[(i, j)].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn h10_projection_recovers_span_elements() {
        let (d, q) = square();
        let basis = build_concentration_basis(&d, &q, 6).unwrap();
        let z2 = basis.reconstruct(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let coeffs = basis.project_h10(&z2).unwrap();
        for (k, c) in coeffs.iter().enumerate() {
            let target = if k == 1 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(*c, target, epsilon = 1e-10);
        }
        let zero = ScalarField::zero(q.clone());
        let coeffs = basis.project_h10(&zero).unwrap();
        assert!(coeffs.iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn h10_projection_minimizes_gradient_error() {
        // Out-of-span target: compare against dense normal equations built
        // from the same gradient inner products.
        let (d, q) = square();
        let basis = build_concentration_basis(&d, &q, 5).unwrap();
        let pi = std::f64::consts::PI;
        let f = ScalarField::from_fn_with_grad(
            q.clone(),
            move |x, y| (pi * x).sin() * (pi * y).sin() * (1.0 + 0.3 * x),
            move |x, y| {
                let sx = (pi * x).sin();
                let cx = (pi * x).cos();
                let sy = (pi * y).sin();
                let cy = (pi * y).cos();
                [
                    pi * cx * sy * (1.0 + 0.3 * x) + 0.3 * sx * sy,
                    pi * sx * cy * (1.0 + 0.3 * x),
                ]
            },
        );
        let coeffs = basis.project_h10(&f).unwrap();
        // Normal equations: G c = rhs assembled independently here.
        let nq = q.len();
        let grad = f.grad.as_ref().unwrap();
        let g_mat = DMatrix::from_fn(5, 5, |i, j| {
            pairwise_sum_by(nq, |qq| {
                q.weight(qq) * (basis.gx[i][qq] * basis.gx[j][qq] + basis.gy[i][qq] * basis.gy[j][qq])
            })
        });
        let rhs = DVector::from_fn(5, |k, _| {
            pairwise_sum_by(nq, |qq| {
                q.weight(qq) * (grad[0][qq] * basis.gx[k][qq] + grad[1][qq] * basis.gy[k][qq])
            })
        });
        let oracle = g_mat.lu().solve(&rhs).unwrap();
        for k in 0..5 {
            assert_abs_diff_eq!(coeffs[k], oracle[k], epsilon = 1e-10);
        }
    }

    #[test]
    fn basis_size_and_resolution_limits_are_enforced() {
        let (d, q) = square();
        assert!(matches!(
            build_velocity_basis(&d, &q, MAX_BASIS + 1),
            Err(Error::BasisTooLarge { .. })
        ));
        let tiny = Quadrature::new(&d, 8);
        assert!(matches!(
            build_velocity_basis(&d, &tiny, 24),
            Err(Error::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn cache_roundtrip_preserves_node_values() {
        let (d, q) = square();
        let basis = build_velocity_basis(&d, &q, 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.bin");
        basis.save_cache(&path).unwrap();
        let loaded = VelocityBasis::load_cache(&path, &d, &q, 6).expect("cache should match");
        assert_eq!(loaded.rayleigh, basis.rayleigh);
        assert_eq!(loaded.v1, basis.v1);
        assert_eq!(loaded.g21, basis.g21);
        // Mismatched request is rejected.
        assert!(VelocityBasis::load_cache(&path, &d, &q, 7).is_none());
        let other = Quadrature::new(&d, 32);
        assert!(VelocityBasis::load_cache(&path, &d, &other, 6).is_none());
    }
}
