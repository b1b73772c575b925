//! Property tests for the library-wide invariants: format round-trips,
//! frame indifference of the strain invariants, uniform ellipticity of
//! evaluated diffusivities, and KKT optimality of the QP solver.

use proptest::prelude::*;

use defdif::coupling::degradation_index;
use defdif::materials::{rotated_tensor, strain_invariants, DiffusivityModel, Strain2D, Tensor2};
use defdif::mesh::{format_mesh, generate_structured_rect, parse_mesh, ElementKind};
use defdif::solvers::{solve_nonneg_qp, SymSparseMatrix};

fn kind_strategy() -> impl Strategy<Value = ElementKind> {
    prop_oneof![Just(ElementKind::Tri3), Just(ElementKind::Quad4)]
}

fn strain_strategy() -> impl Strategy<Value = Strain2D> {
    // Magnitudes spanning the linearized-elasticity range up to absurd.
    (-1.0e-2..1.0e-2f64, -1.0e-2..1.0e-2f64, -1.0e-2..1.0e-2f64)
        .prop_map(|(exx, eyy, exy)| Strain2D::new(exx, eyy, exy))
}

proptest! {
    #[test]
    fn mesh_text_round_trips(
        kind in kind_strategy(),
        nx in 2usize..8,
        ny in 2usize..8,
        x0 in -2.0..2.0f64,
        y0 in -2.0..2.0f64,
        w in 0.1..3.0f64,
        h in 0.1..3.0f64,
    ) {
        let mesh = generate_structured_rect(x0, y0, x0 + w, y0 + h, nx, ny, kind).unwrap();
        let text = format_mesh(&mesh);
        let back = parse_mesh(&text).unwrap();
        prop_assert_eq!(mesh.kind(), back.kind());
        prop_assert_eq!(mesh.nodes(), back.nodes());
        prop_assert_eq!(mesh.num_elements(), back.num_elements());
        for e in 0..mesh.num_elements() {
            prop_assert_eq!(mesh.element(e), back.element(e));
        }
        prop_assert_eq!(mesh.node_sets(), back.node_sets());
        prop_assert_eq!(mesh.edge_sets(), back.edge_sets());
        // Idempotence: a second round trip is byte-identical.
        prop_assert_eq!(text, format_mesh(&back));
    }

    #[test]
    fn invariants_are_frame_indifferent(e in strain_strategy(), theta in 0.0..core::f64::consts::TAU) {
        let (ct, st) = (theta.cos(), theta.sin());
        // e' = R e R^T with R the in-plane rotation; e_zz stays 0.
        let rot = Strain2D::new(
            ct * ct * e.exx - 2.0 * ct * st * e.exy + st * st * e.eyy,
            st * st * e.exx + 2.0 * ct * st * e.exy + ct * ct * e.eyy,
            ct * st * (e.exx - e.eyy) + (ct * ct - st * st) * e.exy,
        );
        let (i1, ii1) = strain_invariants(e);
        let (i2, ii2) = strain_invariants(rot);
        prop_assert!((i1 - i2).abs() <= 1e-12 * (1.0 + i1.abs()));
        prop_assert!((ii1 - ii2).abs() <= 1e-12 * (1.0 + ii1.abs()));
        // Plane strain puts a floor on distortion relative to dilation.
        prop_assert!(ii1 >= i1.abs() / 3.0f64.sqrt() - 1e-15);
    }

    #[test]
    fn evaluated_diffusivity_stays_spd(
        e in strain_strategy(),
        theta in 0.0..core::f64::consts::PI,
        d1 in 0.5..20.0f64,
        d2 in 0.5..20.0f64,
        phi_t in 1.0..50.0f64,
        phi_s in 1.0..50.0f64,
    ) {
        let d0 = rotated_tensor(theta, d1, d2).unwrap();
        let model = DiffusivityModel::phi_scaled(d0, phi_t, phi_s, 100.0, 1.0, 1e-4).unwrap();
        let d = model.evaluate(e);
        prop_assert!(d.is_spd(), "evaluated D not SPD: {d:?}");
        let floor = DiffusivityModel::ELLIPTICITY_FLOOR * d0.eigenvalues()[0];
        prop_assert!(d.eigenvalues()[0] >= floor * (1.0 - 1e-12));
    }

    #[test]
    fn clamped_tensor_dominates_floor(
        xx in -10.0..10.0f64,
        xy in -10.0..10.0f64,
        yy in -10.0..10.0f64,
        min in 0.0..1.0f64,
    ) {
        let t = Tensor2::new(xx, xy, yy).clamp_eigenvalues(min);
        let [lo, hi] = t.eigenvalues();
        prop_assert!(lo >= min - 1e-12 * (1.0 + hi.abs()));
    }

    #[test]
    fn qp_solution_is_feasible_and_optimal(
        seed in any::<u64>(),
        n in 2usize..10,
    ) {
        // SPD system from a shifted Gram matrix with pseudorandom entries.
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let m: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
        let mut k = SymSparseMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut v = if i == j { 0.5 } else { 0.0 };
                for r in 0..n {
                    v += m[r][i] * m[r][j];
                }
                k.add(i, j, v);
            }
        }
        let f: Vec<f64> = (0..n).map(|_| next()).collect();
        let res = solve_nonneg_qp(&k, &f).unwrap();
        for &ci in &res.c {
            prop_assert!(ci >= 0.0);
        }
        // Stationarity: free gradient ~ 0, active gradient >= 0.
        let g = k.mul_vec(&res.c);
        for i in 0..n {
            let gi = g[i] - f[i];
            if res.c[i] > 0.0 {
                prop_assert!(gi.abs() <= 1e-8, "free gradient {gi} at {i}");
            } else {
                prop_assert!(gi >= -1e-8, "active gradient {gi} at {i}");
            }
        }
    }

    #[test]
    fn degradation_index_bounds(c in proptest::collection::vec(-1.0..1.0f64, 1..50)) {
        let d = degradation_index(&c);
        prop_assert!((0.0..=100.0).contains(&d));
        let violated = c.iter().filter(|&&v| v < -1e-12).count();
        prop_assert!((d - 100.0 * violated as f64 / c.len() as f64).abs() < 1e-12);
    }
}
