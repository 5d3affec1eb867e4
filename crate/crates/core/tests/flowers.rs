use pluri_core::flower::{
    all_corners, builtin_corpus, corpus_from_json, decompose, el_sum_check, planar_flower,
    verify_decomposition, Flower, FlowerRecord, TwoManifold, Violation,
};
use pluri_core::forms::{CrossRatioLog, MixedQA3};
use pluri_core::sampling::{self, all_pairs, sample_field, FIELD_SEPARATION};
use pluri_core::variational::{flower_el_residual, Method};
use pluri_core::{CellKind, FormParameters, LatticePoint, OrientedCell, TwoForm};
use std::sync::Arc;

fn tri(kind: CellKind, base: &[i64], dirs: &[usize], sign: i8) -> OrientedCell {
    OrientedCell::new(kind, LatticePoint::new(base.to_vec()), dirs, sign).unwrap()
}

#[test]
fn corners_and_hexagon_keep_unit_coefficients_between_steps() {
    let mut flowers = all_corners(4);
    flowers.extend(all_corners(5));
    flowers.push(("hexagon".into(), planar_flower()));
    for (name, f) in &flowers {
        let d = decompose(f).unwrap();
        assert!(
            d.stage_max_coefficient.iter().all(|&c| c <= 1),
            "{name}: {:?}",
            d.stage_max_coefficient
        );
    }
}

#[test]
fn pinned_flower_reaches_coefficient_two_and_still_decomposes() {
    let corpus = builtin_corpus();
    let (_, f) = corpus
        .iter()
        .find(|(n, _)| n == "random Q(A_4) #1")
        .unwrap();
    let d = decompose(f).unwrap();
    assert_eq!(d.stage_max_coefficient[1], 2);
    assert!(verify_decomposition(f, &d.corners));
    // the doubled white triangle is absorbed by a step-3 corner used twice
    let step3: Vec<_> = d.corners.iter().filter(|c| c.step == 3).collect();
    assert!(step3.iter().any(|c| step3
        .iter()
        .filter(|o| o.cell == c.cell && o.center == c.center)
        .count()
        == 2));
}

#[test]
fn same_orientation_on_shared_edge_is_reported() {
    // both boundaries run +[01]
    let a = tri(CellKind::BlackTriangle, &[0, 0, 0, 0], &[0, 1, 2], 1);
    let b = tri(CellKind::BlackTriangle, &[0, 0, 0, 0], &[0, 1, 3], 1);
    let v = TwoManifold::from_cells(&[a.clone(), b.clone()])
        .unwrap()
        .validate();
    assert!(
        v.iter()
            .any(|x| matches!(x, Violation::SameOrientation { .. })),
        "{v:?}"
    );
    let ok = TwoManifold::from_cells(&[a, b.negated()]).unwrap();
    assert!(ok.is_valid());
}

#[test]
fn three_triangles_on_one_edge_are_reported() {
    let base = [0, 0, 0, 0, 0];
    let cells = [
        tri(CellKind::BlackTriangle, &base, &[0, 1, 2], 1),
        tri(CellKind::BlackTriangle, &base, &[0, 1, 3], -1),
        tri(CellKind::BlackTriangle, &base, &[0, 1, 4], 1),
    ];
    let v = TwoManifold::from_cells(&cells).unwrap().validate();
    assert!(
        v.iter()
            .any(|x| matches!(x, Violation::EdgeOverused { triangles: 3, .. })),
        "{v:?}"
    );
}

#[test]
fn all_white_flower_has_zero_euler_lagrange_terms() {
    let cell = OrientedCell::positive(
        CellKind::WhiteTetrahedron,
        LatticePoint::origin(4),
        &[0, 1, 2, 3],
    );
    let center = LatticePoint::new(vec![1, 1, 1, 0]);
    let f = Flower::corner(&cell, &center).unwrap();
    assert!(f
        .chain()
        .iter()
        .all(|(c, _)| c.kind == CellKind::WhiteTriangle));
    let mut rng = sampling::rng(5);
    let verts: Vec<LatticePoint> = f.chain().vertex_set().into_iter().collect();
    let field = sample_field(&mut rng, &verts, &all_pairs(&verts), FIELD_SEPARATION);
    let form = TwoForm::new(
        Arc::new(CrossRatioLog),
        FormParameters::from_slice(&[0.5, 0.9, 1.3, 1.7]),
    );
    let lhs = flower_el_residual(&form, f.chain(), &center, &field, Method::Analytic).unwrap();
    assert_eq!(lhs, 0.0);
    let el = el_sum_check(&form, &f, &field, 9).unwrap();
    assert_eq!(el.flower_residual, 0.0);
    assert!(el.corner_sums.iter().all(|&s| s == 0.0));
}

#[test]
fn el_sum_holds_on_the_hexagon_for_the_mixed_form() {
    let f = planar_flower();
    let verts: Vec<LatticePoint> = f.chain().vertex_set().into_iter().collect();
    let mut rng = sampling::rng(17);
    let field = sample_field(&mut rng, &verts, &all_pairs(&verts), FIELD_SEPARATION);
    let form = TwoForm::new(Arc::new(MixedQA3), FormParameters::default());
    let el = el_sum_check(&form, &f, &field, 3).unwrap();
    assert_eq!(el.corner_sums.len(), 3);
    assert!(el.max_deviation <= 1e-9, "{el:?}");
    // the three extensions really differ
    assert!(el
        .corner_sums
        .windows(2)
        .all(|w| w[0].to_bits() != w[1].to_bits() || w[0] == el.flower_residual));
}

#[test]
fn corpus_round_trips_through_json() {
    let corpus = builtin_corpus();
    let records: Vec<FlowerRecord> = corpus
        .iter()
        .map(|(n, f)| FlowerRecord::from_flower(Some(n.clone()), f))
        .collect();
    let back = corpus_from_json(&serde_json::to_string(&records).unwrap()).unwrap();
    assert_eq!(back.len(), corpus.len());
    for ((n0, f0), (n1, f1)) in corpus.iter().zip(&back) {
        assert_eq!(n0, n1);
        assert_eq!(f0.chain(), f1.chain());
        assert_eq!(f0.center, f1.center);
    }
}

#[test]
fn decomposition_rejects_a_foreign_corner_list() {
    let hex = planar_flower();
    let other = decompose(&all_corners(4)[0].1).unwrap();
    assert!(!verify_decomposition(&hex, &other.corners));
}
