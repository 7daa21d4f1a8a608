use proptest::prelude::*;

use plate_afem::assembly::{assemble_mass, assemble_stiffness};
use plate_afem::eigen::{principal_angle, solve_gevp, EigenMethod};
use plate_afem::estimator::{dorfler_mark, estimate, is_bulk, EdgeWeight, EstimatorField};
use plate_afem::mesh::{refinement_map, uniform_refine, BisectionRule, BoundaryPart, Geometry, MarkSet, Triangulation};
use plate_afem::space::MorleySpace;
use plate_afem::sparse::SymSparseMatrix;

fn geometry() -> impl Strategy<Value = (Geometry, &'static str)> {
    prop_oneof![
        Just((Geometry::Square, "clamped")),
        Just((Geometry::Square, "simply_supported")),
        Just((Geometry::Square, "mixed")),
        Just((Geometry::LShape, "clamped")),
        Just((Geometry::LShape, "mixed")),
        Just((Geometry::LShape, "free")),
    ]
}

/// A few rounds of NVB with marks drawn from `bits`.
fn refined(g: Geometry, bc: &str, bits: &[bool], rule: BisectionRule) -> Vec<Triangulation> {
    let mut meshes = vec![g.build(&g.named_bc(bc).unwrap()).unwrap()];
    for round in 0..3 {
        let m = meshes.last().unwrap();
        let marks: MarkSet = (0..m.num_triangles()).filter(|t| bits[(t * 7 + round * 13) % bits.len()]).collect();
        meshes.push(m.refine(&marks, rule));
    }
    meshes
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_keeps_the_mesh_admissible(
        (g, bc) in geometry(),
        bits in proptest::collection::vec(any::<bool>(), 1..17),
        bisec3 in any::<bool>(),
    ) {
        let rule = if bisec3 { BisectionRule::Bisec3 } else { BisectionRule::Newest };
        let meshes = refined(g, bc, &bits, rule);
        // matching refinement edges are required of the initial mesh only
        prop_assert!(meshes[0].audit_refinement_edges().is_empty());
        let area = meshes[0].total_area();
        for w in meshes.windows(2) {
            let (coarse, fine) = (&w[0], &w[1]);
            prop_assert!(fine.is_conforming());
            prop_assert!(fine.euler_ok());
            prop_assert!((fine.total_area() - area).abs() <= 1e-12 * area);
            prop_assert!((0..fine.num_triangles()).all(|t| fine.area(t) > 0.0));
            let map = refinement_map(coarse, fine).unwrap();
            prop_assert_eq!(map.len(), fine.num_triangles());
            for e in fine.edges() {
                prop_assert_eq!(e.is_boundary(), e.part != BoundaryPart::Interior);
                prop_assert_eq!(e.triangles().len(), if e.is_boundary() { 1 } else { 2 });
            }
        }
    }

    #[test]
    fn constrained_dofs_follow_the_boundary_parts((g, bc) in geometry(), refinements in 0usize..3) {
        let mut m = g.build(&g.named_bc(bc).unwrap()).unwrap();
        for _ in 0..refinements {
            m = uniform_refine(&m);
        }
        let s = MorleySpace::new(m).unwrap();
        let mesh = s.mesh();
        let pinned = mesh.vertices_on(&[BoundaryPart::Clamped, BoundaryPart::SimplySupported]);
        for (v, &p) in pinned.iter().enumerate() {
            prop_assert_eq!(s.vertex_dof(v).is_none(), p);
        }
        for (e, edge) in mesh.edges().iter().enumerate() {
            prop_assert_eq!(s.edge_dof(e).is_none(), edge.part == BoundaryPart::Clamped);
        }
        prop_assert!(s.check_duality() <= 1e-12);
    }

    #[test]
    fn dorfler_marks_a_minimal_bulk(
        values in proptest::collection::vec(0.0f64..10.0, 1..40),
        theta in 0.05f64..=1.0,
    ) {
        prop_assume!(values.iter().sum::<f64>() > 0.0);
        let field = EstimatorField::from_values(values.clone());
        let marks = dorfler_mark(&field, theta).unwrap();
        prop_assert!(is_bulk(&field, marks.iter(), theta));
        // dropping the smallest marked value breaks the bulk property
        let mut marked: Vec<usize> = marks.iter().collect();
        marked.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        if marked.len() > 1 && values[marked[0]] > 0.0 {
            prop_assert!(!is_bulk(&field, marked[1..].iter().copied(), theta * (1.0 + 1e-9)));
        }
    }

    #[test]
    fn sparse_matvec_matches_dense(
        n in 1usize..12,
        entries in proptest::collection::vec((0usize..12, 0usize..12, -5.0f64..5.0), 0..60),
        x in proptest::collection::vec(-1.0f64..1.0, 12),
    ) {
        let trips: Vec<_> = entries.into_iter().filter(|&(i, j, _)| i < n && j < n).map(|(i, j, v)| (i.max(j), i.min(j), v)).collect();
        let a = SymSparseMatrix::from_triplets(n, trips);
        let d = a.to_dense();
        prop_assert!((0..n).all(|i| (0..n).all(|j| d[(i, j)] == d[(j, i)])));
        let y = a.matvec(&x[..n]);
        for i in 0..n {
            let r: f64 = (0..n).map(|j| d[(i, j)] * x[j]).sum();
            prop_assert!((y[i] - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn principal_angle_is_a_symmetric_sine(
        n in 3usize..9,
        k in 1usize..3,
        seed in proptest::collection::vec(-1.0f64..1.0, 2 * 9 * 3),
    ) {
        prop_assume!(k < n);
        let x: Vec<Vec<f64>> = (0..k).map(|i| seed[i * 9..i * 9 + n].to_vec()).collect();
        let y: Vec<Vec<f64>> = (0..k).map(|i| seed[27 + i * 9..27 + i * 9 + n].to_vec()).collect();
        if let (Ok(a), Ok(b)) = (principal_angle(&x, &y), principal_angle(&y, &x)) {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
            prop_assert!((a - b).abs() <= 1e-9);
            prop_assert!(principal_angle(&x, &x).unwrap() <= 1e-7);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cluster_solutions_are_ordered_and_orthonormal((g, bc) in geometry(), count in 1usize..6) {
        let mut m = g.build(&g.named_bc(bc).unwrap()).unwrap();
        for _ in 0..2 {
            m = uniform_refine(&m);
        }
        let s = MorleySpace::new(m).unwrap();
        let (a, mm) = (assemble_stiffness(&s), assemble_mass(&s));
        let count = count.min(s.ndof());
        let sol = solve_gevp(&a, &mm, count, EigenMethod::Auto).unwrap();
        prop_assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(sol.b_orthonormality <= 1e-10);
        prop_assert!(sol.residuals.iter().all(|&r| r <= 1e-8));
        for (lam, v) in sol.eigenvalues.iter().zip(&sol.vectors) {
            let q = a.quad_form(v, v);
            prop_assert!((q - lam).abs() <= 1e-8 * lam.abs().max(1.0));
        }
        if bc != "free" {
            prop_assert!(sol.eigenvalues[0] > 0.0);
        }
    }

    #[test]
    fn estimator_is_nonnegative_and_scales_quadratically((g, bc) in geometry(), scale in 0.1f64..10.0) {
        prop_assume!(bc != "free");
        let m = uniform_refine(&g.build(&g.named_bc(bc).unwrap()).unwrap());
        let s = MorleySpace::new(m).unwrap();
        let sol = solve_gevp(&assemble_stiffness(&s), &assemble_mass(&s), 1, EigenMethod::Auto).unwrap();
        let field = estimate(&s, &sol, EdgeWeight::Element).unwrap();
        prop_assert!(field.values.iter().all(|&v| v >= 0.0));
        let sum: f64 = field.values.iter().sum();
        prop_assert!((sum - field.total).abs() <= 1e-12 * field.total);
        let mut scaled = sol.clone();
        for v in &mut scaled.vectors {
            v.iter_mut().for_each(|c| *c *= scale);
        }
        let f2 = estimate(&s, &scaled, EdgeWeight::Element).unwrap();
        prop_assert!((f2.total - scale * scale * field.total).abs() <= 1e-12 * f2.total);
        let (m1, m2) = (dorfler_mark(&field, 0.5).unwrap(), dorfler_mark(&f2, 0.5).unwrap());
        prop_assert_eq!(m1.iter().collect::<Vec<_>>(), m2.iter().collect::<Vec<_>>());
    }
}
