pub mod closed_forms;
pub mod error;
pub mod flower;
pub mod forms;
pub mod lattice_qan;
pub mod lattice_zn;
pub mod quad_systems;
pub mod report;
pub mod sampling;
pub mod variational;

pub use error::{Error, Result};
pub use forms::{
    FieldAssignment, FieldView, FormParameters, OneFormFamily, PushforwardForm, TwoForm,
};
pub use lattice_qan::{CellChain, CellKind, LatticePoint, OrientedCell};
pub use lattice_zn::Projection;
pub use quad_systems::{QuadEquation, QuadSystem};
pub use report::CheckReport;
