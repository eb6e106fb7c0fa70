//! Discrete domain, quadrature and node-sampled fields.
//!
//! The domain is a 2D box in one of two modes: the unit square with
//! homogeneous Dirichlet data, or a periodic torus. Fields store values at
//! quadrature nodes; differentiation never happens by differencing node
//! data — a field is differentiable only if it carries analytic gradient
//! samples attached at construction (basis expansions and closed-form
//! fields do, raw node data does not).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre_on, pairwise_sum_by};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMode {
    UnitSquareDirichlet,
    PeriodicTorus,
}

/// Space-time box: a square spatial domain of side `extent` and the time
/// interval (0, t_final).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub mode: DomainMode,
    pub extent: f64,
    pub t_final: f64,
}

impl Domain {
    pub fn unit_square(t_final: f64) -> Self {
        Domain {
            mode: DomainMode::UnitSquareDirichlet,
            extent: 1.0,
            t_final,
        }
    }

    pub fn torus(t_final: f64) -> Self {
        Domain {
            mode: DomainMode::PeriodicTorus,
            extent: 2.0 * std::f64::consts::PI,
            t_final,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0) || !self.extent.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "domain extent must be positive, got {}",
                self.extent
            )));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "final time must be positive, got {}",
                self.t_final
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.extent * self.extent
    }
}

/// Tensor-product quadrature over the spatial domain.
///
/// Square mode uses a Gauss-Legendre rule per axis (exact for tensor
/// polynomials up to degree 2n-1); torus mode uses the uniform rule, which
/// integrates trigonometric polynomials below the Nyquist frequency exactly.
///
/// Node layout is row-major with x fastest: `q = iy * resolution + ix`.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub mode: DomainMode,
    pub resolution: usize,
    pub extent: f64,
    /// 1D nodes shared by both axes.
    pub nodes_1d: Vec<f64>,
    /// 1D weights shared by both axes.
    pub weights_1d: Vec<f64>,
}

impl Quadrature {
    pub fn new(domain: &Domain, resolution: usize) -> Arc<Quadrature> {
        assert!(resolution >= 2, "quadrature needs at least 2 points per axis");
        let (nodes_1d, weights_1d) = match domain.mode {
            DomainMode::UnitSquareDirichlet => gauss_legendre_on(resolution, 0.0, domain.extent),
            DomainMode::PeriodicTorus => {
                let h = domain.extent / resolution as f64;
                let nodes = (0..resolution).map(|i| i as f64 * h).collect();
                let weights = vec![h; resolution];
                (nodes, weights)
            }
        };
        Arc::new(Quadrature {
            mode: domain.mode,
            resolution,
            extent: domain.extent,
            nodes_1d,
            weights_1d,
        })
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, q: usize) -> (f64, f64) {
        let ix = q % self.resolution;
        let iy = q / self.resolution;
        (self.nodes_1d[ix], self.nodes_1d[iy])
    }

    pub fn weight(&self, q: usize) -> f64 {
        let ix = q % self.resolution;
        let iy = q / self.resolution;
        self.weights_1d[ix] * self.weights_1d[iy]
    }

    pub fn area(&self) -> f64 {
        self.extent * self.extent
    }

    /// Two quadratures are interchangeable when mode, resolution and extent
    /// agree; the node set is then bit-identical by construction.
    pub fn same_layout(&self, other: &Quadrature) -> bool {
        self.mode == other.mode
            && self.resolution == other.resolution
            && self.extent == other.extent
    }

    /// Integral of node samples against the quadrature weights.
    pub fn integrate_nodes(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        pairwise_sum_by(self.len(), |q| self.weight(q) * values[q])
    }
}

fn check_quads(a: &Quadrature, b: &Quadrature) -> Result<()> {
    if a.same_layout(b) {
        Ok(())
    } else {
        Err(Error::QuadratureMismatch)
    }
}

/// Gradient samples of a vector field: entries of the Jacobian at each node.
#[derive(Debug, Clone)]
pub struct VectorGradient {
    pub du1_dx: Vec<f64>,
    pub du1_dy: Vec<f64>,
    pub du2_dx: Vec<f64>,
    pub du2_dy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub values: Vec<f64>,
    /// Analytic gradient samples, present only for differentiable fields.
    pub grad: Option<[Vec<f64>; 2]>,
    pub quad: Arc<Quadrature>,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub grad: Option<VectorGradient>,
    pub quad: Arc<Quadrature>,
}

/// Symmetric 2x2 tensor field stored as three component arrays; the
/// off-diagonal entry is stored once, so B12 = B21 holds exactly.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
    pub quad: Arc<Quadrature>,
}

impl ScalarField {
    pub fn from_values(quad: Arc<Quadrature>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), quad.len());
        ScalarField {
            values,
            grad: None,
            quad,
        }
    }

    pub fn from_fn(quad: Arc<Quadrature>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..quad.len())
            .map(|q| {
                let (x, y) = quad.point(q);
                f(x, y)
            })
            .collect();
        ScalarField {
            values,
            grad: None,
            quad,
        }
    }

    /// Closed-form field with analytic gradient `(df/dx, df/dy)`.
    pub fn from_fn_with_grad(
        quad: Arc<Quadrature>,
        f: impl Fn(f64, f64) -> f64,
        grad: impl Fn(f64, f64) -> [f64; 2],
    ) -> Self {
        let n = quad.len();
        let mut values = Vec::with_capacity(n);
        let mut gx = Vec::with_capacity(n);
        let mut gy = Vec::with_capacity(n);
        for q in 0..n {
            let (x, y) = quad.point(q);
            values.push(f(x, y));
            let g = grad(x, y);
            gx.push(g[0]);
            gy.push(g[1]);
        }
        ScalarField {
            values,
            grad: Some([gx, gy]),
            quad,
        }
    }

    pub fn zero(quad: Arc<Quadrature>) -> Self {
        let n = quad.len();
        ScalarField {
            values: vec![0.0; n],
            grad: Some([vec![0.0; n], vec![0.0; n]]),
            quad,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl VectorField {
    pub fn from_fn(quad: Arc<Quadrature>, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let n = quad.len();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for q in 0..n {
            let (px, py) = quad.point(q);
            let v = f(px, py);
            x.push(v[0]);
            y.push(v[1]);
        }
        VectorField {
            x,
            y,
            grad: None,
            quad,
        }
    }

    /// Closed-form field with analytic Jacobian rows
    /// `jac(x, y) = [[du1/dx, du1/dy], [du2/dx, du2/dy]]`.
    pub fn from_fn_with_grad(
        quad: Arc<Quadrature>,
        f: impl Fn(f64, f64) -> [f64; 2],
        jac: impl Fn(f64, f64) -> [[f64; 2]; 2],
    ) -> Self {
        let n = quad.len();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut g = VectorGradient {
            du1_dx: Vec::with_capacity(n),
            du1_dy: Vec::with_capacity(n),
            du2_dx: Vec::with_capacity(n),
            du2_dy: Vec::with_capacity(n),
        };
        for q in 0..n {
            let (px, py) = quad.point(q);
            let v = f(px, py);
            x.push(v[0]);
            y.push(v[1]);
            let j = jac(px, py);
            g.du1_dx.push(j[0][0]);
            g.du1_dy.push(j[0][1]);
            g.du2_dx.push(j[1][0]);
            g.du2_dy.push(j[1][1]);
        }
        VectorField {
            x,
            y,
            grad: Some(g),
            quad,
        }
    }

    pub fn zero(quad: Arc<Quadrature>) -> Self {
        let n = quad.len();
        VectorField {
            x: vec![0.0; n],
            y: vec![0.0; n],
            grad: Some(VectorGradient {
                du1_dx: vec![0.0; n],
                du1_dy: vec![0.0; n],
                du2_dx: vec![0.0; n],
                du2_dy: vec![0.0; n],
            }),
            quad,
        }
    }

    /// Pointwise Euclidean magnitude samples.
    pub fn magnitude(&self) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .collect()
    }

    /// Pointwise Frobenius magnitude of the full gradient, if available.
    pub fn gradient_magnitude(&self) -> Result<Vec<f64>> {
        let g = self.grad.as_ref().ok_or(Error::NonDifferentiableField)?;
        Ok((0..self.x.len())
            .map(|q| {
                (g.du1_dx[q] * g.du1_dx[q]
                    + g.du1_dy[q] * g.du1_dy[q]
                    + g.du2_dx[q] * g.du2_dx[q]
                    + g.du2_dy[q] * g.du2_dy[q])
                    .sqrt()
            })
            .collect())
    }
}

impl SymTensorField {
    pub fn zero(quad: Arc<Quadrature>) -> Self {
        let n = quad.len();
        SymTensorField {
            xx: vec![0.0; n],
            xy: vec![0.0; n],
            yy: vec![0.0; n],
            quad,
        }
    }

    /// Pointwise Frobenius norm |B| = sqrt(B11^2 + 2*B12^2 + B22^2).
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.xx.len())
            .map(|q| {
                (self.xx[q] * self.xx[q]
                    + 2.0 * self.xy[q] * self.xy[q]
                    + self.yy[q] * self.yy[q])
                    .sqrt()
            })
            .collect()
    }
}

/// Symmetric velocity gradient (1/2)(grad v + grad v^T) sampled at the nodes.
///
/// Requires analytic gradient data; node-only fields are rejected with
/// `NonDifferentiableField`.
pub fn sym_gradient(v: &VectorField) -> Result<SymTensorField> {
    let g = v.grad.as_ref().ok_or(Error::NonDifferentiableField)?;
    let n = v.x.len();
    let mut xx = Vec::with_capacity(n);
    let mut xy = Vec::with_capacity(n);
    let mut yy = Vec::with_capacity(n);
    for q in 0..n {
        xx.push(g.du1_dx[q]);
        xy.push(0.5 * (g.du1_dy[q] + g.du2_dx[q]));
        yy.push(g.du2_dy[q]);
    }
    Ok(SymTensorField {
        xx,
        xy,
        yy,
        quad: v.quad.clone(),
    })
}

/// Divergence of a differentiable vector field at the nodes.
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let g = v.grad.as_ref().ok_or(Error::NonDifferentiableField)?;
    let values = (0..v.x.len())
        .map(|q| g.du1_dx[q] + g.du2_dy[q])
        .collect();
    Ok(ScalarField {
        values,
        grad: None,
        quad: v.quad.clone(),
    })
}

/// L2 inner product of two scalar fields on a shared quadrature.
pub fn l2_inner_scalar(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    check_quads(&f.quad, &g.quad)?;
    let quad = &f.quad;
    Ok(pairwise_sum_by(quad.len(), |q| {
        quad.weight(q) * f.values[q] * g.values[q]
    }))
}

/// L2 inner product of two vector fields.
pub fn l2_inner_vector(f: &VectorField, g: &VectorField) -> Result<f64> {
    check_quads(&f.quad, &g.quad)?;
    let quad = &f.quad;
    Ok(pairwise_sum_by(quad.len(), |q| {
        quad.weight(q) * (f.x[q] * g.x[q] + f.y[q] * g.y[q])
    }))
}

/// L2 inner product of two symmetric tensor fields under the Frobenius
/// contraction A:B = A11 B11 + 2 A12 B12 + A22 B22.
pub fn l2_inner_tensor(f: &SymTensorField, g: &SymTensorField) -> Result<f64> {
    check_quads(&f.quad, &g.quad)?;
    let quad = &f.quad;
    Ok(pairwise_sum_by(quad.len(), |q| {
        quad.weight(q)
            * (f.xx[q] * g.xx[q] + 2.0 * f.xy[q] * g.xy[q] + f.yy[q] * g.yy[q])
    }))
}

pub fn l2_norm_scalar(f: &ScalarField) -> f64 {
    l2_inner_scalar(f, f).expect("field is self-consistent").sqrt()
}

pub fn l2_norm_vector(f: &VectorField) -> f64 {
    l2_inner_vector(f, f).expect("field is self-consistent").sqrt()
}
