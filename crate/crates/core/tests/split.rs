use nalgebra::{Matrix3, Rotation3, Vector3};
use pinn_fracture::fracture::{psi_split, strain_from_grad, MaterialParams, SplitMode};
use proptest::prelude::*;

const MAT: MaterialParams = MaterialParams { lambda: 121.15, mu: 80.77, gc: 2.7e-3, l0: 0.0125 };

fn full_energy(eps: &[[f64; 3]; 3], d: usize) -> f64 {
    let tr: f64 = (0..d).map(|i| eps[i][i]).sum();
    let sq: f64 = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| eps[i][j] * eps[i][j]).sum();
    MAT.lambda / 2.0 * tr * tr + MAT.mu * sq
}

fn sym(v: [f64; 6]) -> [[f64; 3]; 3] {
    [[v[0], v[3], v[4]], [v[3], v[1], v[5]], [v[4], v[5], v[2]]]
}

proptest! {
    #[test]
    fn split_sums_to_full_energy(v in prop::array::uniform6(-0.05f64..0.05), d in 1usize..=3) {
        let s = strain_from_grad(&sym(v), d).unwrap();
        let (p, m) = psi_split(s.eigenvalues(), &MAT, SplitMode::Spectral);
        prop_assert!(p >= 0.0 && m >= 0.0);
        let full = full_energy(&s.eps, d);
        prop_assert!((p + m - full).abs() <= 1e-10 * full.max(1.0), "{} vs {}", p + m, full);
    }

    #[test]
    fn split_is_rotation_invariant(v in prop::array::uniform6(-0.05f64..0.05), angles in prop::array::uniform3(-3.1f64..3.1), d in 2usize..=3) {
        let e = sym(v);
        let mut m = Matrix3::from_fn(|i, j| if i < d && j < d { e[i][j] } else { 0.0 });
        let q = if d == 2 {
            Rotation3::from_axis_angle(&Vector3::z_axis(), angles[0]).into_inner()
        } else {
            Rotation3::from_euler_angles(angles[0], angles[1], angles[2]).into_inner()
        };
        let (a, _) = psi_split(strain_from_grad(&e, d).unwrap().eigenvalues(), &MAT, SplitMode::Spectral);
        m = q * m * q.transpose();
        let r = [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]];
        let s = strain_from_grad(&r, d).unwrap();
        let (b, bm) = psi_split(s.eigenvalues(), &MAT, SplitMode::Spectral);
        let (_, am) = psi_split(strain_from_grad(&e, d).unwrap().eigenvalues(), &MAT, SplitMode::Spectral);
        prop_assert!((a - b).abs() <= 1e-10 && (am - bm).abs() <= 1e-10);
    }

    #[test]
    fn eigen_identities(v in prop::array::uniform6(-1.0f64..1.0)) {
        let s = strain_from_grad(&sym(v), 3).unwrap();
        let m = Matrix3::from_fn(|i, j| s.eps[i][j]);
        let sum: f64 = s.eigenvalues().iter().sum();
        let prod: f64 = s.eigenvalues().iter().product();
        prop_assert!((sum - m.trace()).abs() < 1e-12);
        prop_assert!((prod - m.determinant()).abs() < 1e-12);
        let s2 = strain_from_grad(&sym(v), 2).unwrap();
        let det2 = s2.eps[0][0] * s2.eps[1][1] - s2.eps[0][1] * s2.eps[1][0];
        prop_assert!((s2.eigs[0] * s2.eigs[1] - det2).abs() < 1e-12);
    }

    #[test]
    fn densities_non_negative(phi in 0.0f64..=1.0, g in prop::array::uniform2(-50.0f64..50.0), h in 0.0f64..100.0, v in prop::array::uniform6(-0.05f64..0.05)) {
        use pinn_fracture::fracture::{elastic_density, fracture_density};
        let s = strain_from_grad(&sym(v), 2).unwrap();
        let (p, m) = psi_split(s.eigenvalues(), &MAT, SplitMode::Spectral);
        prop_assert!(elastic_density(phi, p, m) >= 0.0);
        prop_assert!(fracture_density(phi, &g, h, &MAT) >= 0.0);
    }
}
