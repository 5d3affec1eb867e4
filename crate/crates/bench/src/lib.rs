//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use pluri_core::forms::CrossRatioLog;
use pluri_core::sampling::{self, all_pairs, sample_field, FIELD_SEPARATION};
use pluri_core::variational::reference_octahedron;
use pluri_core::{FieldAssignment, FormParameters, OrientedCell, TwoForm};

/// Cross-ratio form with fixed parameters on the six vertices of `[0123]`.
pub fn octahedron_fixture(seed: u64) -> (TwoForm, OrientedCell, FieldAssignment) {
    let octa = reference_octahedron();
    let verts = octa.vertices();
    let mut rng = sampling::rng(seed);
    let field = sample_field(&mut rng, &verts, &all_pairs(&verts), FIELD_SEPARATION);
    let form = TwoForm::new(
        Arc::new(CrossRatioLog),
        FormParameters::from_slice(&[0.6, 1.1, 1.45, 1.9]),
    );
    (form, octa, field)
}
