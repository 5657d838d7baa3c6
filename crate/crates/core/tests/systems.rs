//! Cross-checks between the source solvers and the eigen solvers.

use std::sync::Arc;

use quadcurl_core::assembly::{dot, norm};
use quadcurl_core::mesh::MeshData;
use quadcurl_core::systems::{
    friedrichs_constant, solve_maxwell_eig, solve_quadcurl_eig, CurlCurlSystem, EigenMethod,
    EigenOptions, Operators, PencilSystem, QuadCurlSystem,
};

fn ops(n: usize, k: usize) -> Arc<Operators> {
    Arc::new(Operators::new(&MeshData::cube(n).unwrap(), k).unwrap())
}

fn start_vector(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| ((i * 37 + 11) % 17) as f64 / 17.0 - 0.4)
        .collect()
}

/// Inverse iteration through the mixed source solver: each step solves the
/// quad-curl source problem with load `M_N u`. The quotient
/// `(phi, phi) / (u, u)` approaches the smallest nonzero eigenvalue from above.
#[test]
fn source_solver_inverse_iteration_finds_first_eigenvalue() {
    let ops = ops(2, 1);
    let sys = QuadCurlSystem::new(ops.clone()).unwrap();
    let mut u = start_vector(ops.spaces.n());
    let mut history = Vec::new();
    for _ in 0..40 {
        let load = ops.mass_n.mul_vec(&u);
        let parts = sys.solve_parts(&load).unwrap();
        let phi_sq = dot(&parts.phi, &ops.mass_m.mul_vec(&parts.phi));
        let u_sq = dot(&parts.u, &ops.mass_n.mul_vec(&parts.u));
        history.push(phi_sq / u_sq);
        let s = norm(&parts.u);
        u = parts.u.iter().map(|v| v / s).collect();
    }
    let pencil = PencilSystem::from_operators(ops);
    let exact = solve_quadcurl_eig(&pencil, 1, &EigenOptions::default())
        .unwrap()
        .eig
        .values[0];
    let last = *history.last().unwrap();
    assert!((last - exact).abs() <= 1e-8 * exact, "{last} vs {exact}");
    assert!(history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

/// An eigenvector used as the load reproduces itself scaled by `1 / lambda`.
#[test]
fn eigenvector_load_is_reproduced() {
    for k in 1..=2 {
        let ops = ops(2, k);
        let pencil = PencilSystem::from_operators(ops.clone());
        let sol = solve_quadcurl_eig(&pencil, 1, &EigenOptions::default()).unwrap();
        let (lambda, v) = (sol.eig.values[0], &sol.eig.vectors[0]);
        let load: Vec<f64> = ops.mass_n.mul_vec(v).iter().map(|x| x * lambda).collect();
        let parts = QuadCurlSystem::new(ops.clone())
            .unwrap()
            .solve_parts(&load)
            .unwrap();
        let diff: Vec<f64> = parts.u.iter().zip(v).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-8 * norm(v), "k={k}");
        assert!(norm(&parts.p) <= 1e-8 * norm(&load));
    }
}

/// Same for the curl-curl source problem and the Maxwell eigenpairs.
#[test]
fn maxwell_eigenvector_load_is_reproduced() {
    let ops = ops(3, 1);
    let sol = solve_maxwell_eig(&ops, 2, &EigenOptions::default()).unwrap();
    let sys = CurlCurlSystem::new(ops.clone()).unwrap();
    for (lambda, v) in sol.eig.values.iter().zip(&sol.eig.vectors) {
        let load: Vec<f64> = ops.mass_n.mul_vec(v).iter().map(|x| x * lambda).collect();
        let s = sys.solve_load(&load).unwrap();
        let u = s.u.free_values();
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-8 * norm(v));
        assert!(s.multiplier_ratio <= 1e-8);
    }
}

#[test]
fn lanczos_agrees_with_dense_on_refined_cube() {
    let pencil = PencilSystem::from_operators(ops(3, 1));
    let dense = EigenOptions {
        method: EigenMethod::Dense,
        ..EigenOptions::default()
    };
    let lanczos = EigenOptions {
        method: EigenMethod::Lanczos,
        ..EigenOptions::default()
    };
    let a = solve_quadcurl_eig(&pencil, 4, &dense).unwrap();
    let b = solve_quadcurl_eig(&pencil, 4, &lanczos).unwrap();
    for (x, y) in a.eig.values.iter().zip(&b.eig.values) {
        assert!((x - y).abs() <= 1e-8 * x, "{x} vs {y}");
    }
    assert!(b.divergence_residuals.iter().all(|r| *r <= 1e-8));
}

#[test]
fn friedrichs_constant_tracks_first_maxwell_value() {
    let sol = solve_maxwell_eig(&ops(2, 2), 1, &EigenOptions::default()).unwrap();
    let c = friedrichs_constant(&sol).unwrap();
    // continuous value 1 / (sqrt(2) pi)
    let exact = 1.0 / (2.0f64.sqrt() * std::f64::consts::PI);
    assert!((c - exact).abs() <= 0.05 * exact, "{c}");
}
