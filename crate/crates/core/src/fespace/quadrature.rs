//! Quadrature on the reference tetrahedron and triangle.
//!
//! Rules are conical (collapsed) products of Gauss-Jacobi rules, so any
//! degree up to [`MAX_DEGREE`] is available. With `m` points per direction a
//! rule is exact for polynomials of total degree `2m - 1`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::mesh::Point;

pub const MAX_DEGREE: usize = 41;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature degree {0} is not supported (maximum {MAX_DEGREE})")]
    UnsupportedDegree(usize),
}

/// Points in reference coordinates with weights in reference measure.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Gauss-Jacobi rule on `[0, 1]` for the weight `(1 - x)^alpha`.
///
/// Nodes come from the Golub-Welsch eigenvalue problem for the Jacobi
/// recurrence with `beta = 0`.
pub fn gauss_jacobi(m: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for n in 0..m {
        let nf = n as f64;
        let diag = if n == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * nf + ab) * (2.0 * nf + ab + 2.0))
        };
        jac[(n, n)] = diag;
        if n + 1 < m {
            let k = nf + 1.0;
            let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
            let den = (2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0);
            let off = (num / den).sqrt();
            jac[(n, n + 1)] = off;
            jac[(n + 1, n)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    // total mass of (1-t)^alpha on [-1, 1]
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let t = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            // map [-1,1] -> [0,1]: (1-x)^alpha dx = ((1-t)/2)^alpha dt/2
            ((1.0 + t) / 2.0, mu0 * v0 * v0 / 2f64.powf(alpha + 1.0))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Legendre rule with `m` points on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(m, 0.0)
}

fn points_for_degree(degree: usize) -> Result<usize, QuadratureError> {
    if degree > MAX_DEGREE {
        return Err(QuadratureError::UnsupportedDegree(degree));
    }
    Ok((degree + 2) / 2)
}

/// Rule on the reference tetrahedron `{x, y, z >= 0, x + y + z <= 1}` exact
/// for total degree `degree`.
pub fn quadrature_rule(degree: usize) -> Result<QuadRule, QuadratureError> {
    let m = points_for_degree(degree)?;
    let (xa, wa) = gauss_legendre(m);
    let (xb, wb) = gauss_jacobi(m, 1.0);
    let (xc, wc) = gauss_jacobi(m, 2.0);
    let mut points = Vec::with_capacity(m * m * m);
    let mut weights = Vec::with_capacity(m * m * m);
    for (c, wc) in xc.iter().zip(&wc) {
        for (b, wb) in xb.iter().zip(&wb) {
            for (a, wa) in xa.iter().zip(&wa) {
                points.push(Point::new(a * (1.0 - b) * (1.0 - c), b * (1.0 - c), *c));
                weights.push(wa * wb * wc);
            }
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree: 2 * m - 1,
    })
}

/// Rule on the reference triangle `{s, t >= 0, s + t <= 1}`; points are
/// returned as `(s, t)` and weights sum to 1/2.
pub fn triangle_rule(degree: usize) -> Result<(Vec<[f64; 2]>, Vec<f64>), QuadratureError> {
    let m = points_for_degree(degree)?;
    let (xa, wa) = gauss_legendre(m);
    let (xb, wb) = gauss_jacobi(m, 1.0);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for (b, wb) in xb.iter().zip(&wb) {
        for (a, wa) in xa.iter().zip(&wa) {
            points.push([a * (1.0 - b), *b]);
            weights.push(wa * wb);
        }
    }
    Ok((points, weights))
}
