//! Analytic test fields with their curls and source terms.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::fespace::reference::Vec3;
use crate::mesh::Point;

pub type VectorField = Arc<dyn Fn(&Point) -> Vec3 + Send + Sync>;

/// An analytic solution with the data needed to measure discretization
/// errors. `f` is `curl^2 u` for the curl-curl problem and `curl^4 u` for the
/// quad-curl problem.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub u: VectorField,
    pub curl_u: VectorField,
    pub curl2_u: VectorField,
    pub f: VectorField,
    /// `u x n = 0` on the boundary of the unit cube.
    pub tangential_trace_zero: bool,
    /// `(curl u) x n = 0` on the boundary of the unit cube.
    pub curl_tangential_trace_zero: bool,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .finish()
    }
}

impl ManufacturedCase {
    /// `u = sin(pi x) sin(pi y) e_z`, `f = curl curl u = 2 pi^2 u`.
    pub fn sine() -> Self {
        let u = |x: &Point| Vec3::new(0.0, 0.0, (PI * x.x).sin() * (PI * x.y).sin());
        Self {
            name: "sine",
            u: Arc::new(u),
            curl_u: Arc::new(|x: &Point| {
                Vec3::new(
                    PI * (PI * x.x).sin() * (PI * x.y).cos(),
                    -PI * (PI * x.x).cos() * (PI * x.y).sin(),
                    0.0,
                )
            }),
            curl2_u: Arc::new(move |x: &Point| u(x) * (2.0 * PI * PI)),
            f: Arc::new(move |x: &Point| u(x) * (2.0 * PI * PI)),
            tangential_trace_zero: true,
            curl_tangential_trace_zero: false,
        }
    }

    /// `u = curl (0, 0, psi)` with `psi = sin^3(pi x) sin^3(pi y) sin^3(pi z)`,
    /// `f = curl^4 u`.
    pub fn sin3() -> Self {
        Self {
            name: "sin3",
            u: Arc::new(|x: &Point| Vec3::new(psi(x, [0, 1, 0]), -psi(x, [1, 0, 0]), 0.0)),
            curl_u: Arc::new(|x: &Point| {
                // grad(psi_z) - lap(psi) e_z
                Vec3::new(
                    psi(x, [1, 0, 1]),
                    psi(x, [0, 1, 1]),
                    psi(x, [0, 0, 2]) - lap_psi(x, [0, 0, 0]),
                )
            }),
            curl2_u: Arc::new(|x: &Point| {
                Vec3::new(-lap_psi(x, [0, 1, 0]), lap_psi(x, [1, 0, 0]), 0.0)
            }),
            f: Arc::new(|x: &Point| {
                Vec3::new(bilap_psi(x, [0, 1, 0]), -bilap_psi(x, [1, 0, 0]), 0.0)
            }),
            tangential_trace_zero: true,
            curl_tangential_trace_zero: true,
        }
    }

    /// `u = (sin(pi y) sin(pi z), sin(pi z) sin(pi x), sin(pi x) sin(pi y))`,
    /// a fully three-dimensional field with `curl curl u = 2 pi^2 u`.
    pub fn cyclic() -> Self {
        let u = |x: &Point| {
            let (sx, sy, sz) = ((PI * x.x).sin(), (PI * x.y).sin(), (PI * x.z).sin());
            Vec3::new(sy * sz, sz * sx, sx * sy)
        };
        Self {
            name: "cyclic",
            u: Arc::new(u),
            curl_u: Arc::new(|x: &Point| {
                let (sx, sy, sz) = ((PI * x.x).sin(), (PI * x.y).sin(), (PI * x.z).sin());
                let (cx, cy, cz) = ((PI * x.x).cos(), (PI * x.y).cos(), (PI * x.z).cos());
                Vec3::new(sx * (cy - cz), sy * (cz - cx), sz * (cx - cy)) * PI
            }),
            curl2_u: Arc::new(move |x: &Point| u(x) * (2.0 * PI * PI)),
            f: Arc::new(move |x: &Point| u(x) * (2.0 * PI * PI)),
            tangential_trace_zero: true,
            curl_tangential_trace_zero: false,
        }
    }

    /// The zero field.
    pub fn zero() -> Self {
        let z: VectorField = Arc::new(|_: &Point| Vec3::zeros());
        Self {
            name: "zero",
            u: z.clone(),
            curl_u: z.clone(),
            curl2_u: z.clone(),
            f: z,
            tangential_trace_zero: true,
            curl_tangential_trace_zero: true,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "sine" => Some(Self::sine()),
            "sin3" => Some(Self::sin3()),
            "cyclic" => Some(Self::cyclic()),
            "zero" => Some(Self::zero()),
            _ => None,
        }
    }
}

/// `m`-th derivative of `sin^3(pi t) = (3 sin(pi t) - sin(3 pi t)) / 4`.
fn s3(t: f64, m: u32) -> f64 {
    let shift = m as f64 * PI / 2.0;
    (3.0 * PI.powi(m as i32) * (PI * t + shift).sin()
        - (3.0 * PI).powi(m as i32) * (3.0 * PI * t + shift).sin())
        / 4.0
}

/// Partial derivative `d^a/dx^a d^b/dy^b d^c/dz^c` of `psi`.
fn psi(x: &Point, [a, b, c]: [u32; 3]) -> f64 {
    s3(x.x, a) * s3(x.y, b) * s3(x.z, c)
}

fn lap_psi(x: &Point, [a, b, c]: [u32; 3]) -> f64 {
    psi(x, [a + 2, b, c]) + psi(x, [a, b + 2, c]) + psi(x, [a, b, c + 2])
}

fn bilap_psi(x: &Point, [a, b, c]: [u32; 3]) -> f64 {
    lap_psi(x, [a + 2, b, c]) + lap_psi(x, [a, b + 2, c]) + lap_psi(x, [a, b, c + 2])
}
