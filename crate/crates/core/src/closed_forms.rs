//! Closed-form corner equations and their three-leg decompositions for the
//! built-in forms, written against vertex labels (`x_ij` on an octahedron,
//! `x_jk` on a cube) rather than lattice coordinates.
//!
//! The printed formulas carry a fixed orientation. On the octahedron
//! `[i j k ℓ]` read in the given index order they equal the corner residual
//! of that oriented octahedron. On the cube, the cross-ratio formulas and the
//! mixed-form lists obtained through `P_0` equal minus the residual of the
//! cube `{j k ℓ}` read in the given order, while the list obtained through
//! `P_3` equals the residual of `{0 1 2}`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{FieldView, FormParameters, PushforwardForm, TwoForm};
use crate::lattice_qan::{permutation_sign, CellKind, LatticePoint, OrientedCell};
use crate::lattice_zn::Projection;
use crate::report::{run_trials, CheckReport};
use crate::sampling;
use crate::variational::{self, corner_residual, cube_corner_residual, Method, MAX_ATTEMPTS};

/// Field values and parameters addressed by direction labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    values: BTreeMap<Vec<usize>, f64>,
    alpha: BTreeMap<usize, f64>,
}

impl Labeled {
    /// Values `x_ab` at `base + e_a + e_b` for the vertices of an octahedron.
    pub fn octahedron(
        octa: &OrientedCell,
        field: &dyn FieldView,
        params: &FormParameters,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        let d = &octa.dirs;
        for a in 0..d.len() {
            for b in a + 1..d.len() {
                let p = octa.base.plus_units(&[d[a], d[b]]);
                values.insert(vec![d[a], d[b]], field.value(&p)?);
            }
        }
        Ok(Self {
            values,
            alpha: params.alpha.clone(),
        })
    }

    /// Values `x_S` at `base + Σ e_{P_i(s)}` for every subset `S` of the
    /// Q(A_N) labels other than `i`, on the unit cube at `base`.
    pub fn cube(
        base: &LatticePoint,
        projection: Projection,
        field: &dyn FieldView,
        params: &FormParameters,
    ) -> Result<Self> {
        let i = projection.dropped_direction;
        let labels: Vec<usize> = (0..=base.dim()).filter(|&q| q != i).collect();
        let mut values = BTreeMap::new();
        for mask in 0u32..(1 << labels.len()) {
            let set: Vec<usize> = (0..labels.len())
                .filter(|t| mask & (1 << t) != 0)
                .map(|t| labels[t])
                .collect();
            let dirs: Vec<usize> = set
                .iter()
                .filter_map(|&q| projection.project_direction(q))
                .collect();
            values.insert(set, field.value(&base.plus_units(&dirs))?);
        }
        Ok(Self {
            values,
            alpha: params.alpha.clone(),
        })
    }

    pub fn x(&self, labels: &[usize]) -> f64 {
        let mut key = labels.to_vec();
        key.sort_unstable();
        *self
            .values
            .get(&key)
            .unwrap_or_else(|| panic!("no value labelled {key:?}"))
    }

    pub fn a(&self, d: usize) -> f64 {
        *self
            .alpha
            .get(&d)
            .unwrap_or_else(|| panic!("no parameter for direction {d}"))
    }
}

/// Corner equation at `x_ij` of the cross-ratio form on `[i j k ℓ]`.
pub fn cross_ratio_octahedron(v: &Labeled, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[i, j]);
    (v.a(i) - v.a(k)) / (c - v.x(&[j, k]))
        - (v.a(i) - v.a(l)) / (c - v.x(&[j, l]))
        - (v.a(j) - v.a(k)) / (c - v.x(&[i, k]))
        + (v.a(j) - v.a(l)) / (c - v.x(&[i, l]))
}

/// `E_0j` of the mixed form on `[0 j k ℓ]`.
pub fn mixed_octahedron_0j(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[0, j]);
    -v.x(&[j, k]) + v.x(&[j, l]) - (v.a(j) - v.a(k)) / (c - v.x(&[0, k]))
        + (v.a(j) - v.a(l)) / (c - v.x(&[0, l]))
}

/// `E_kℓ` of the mixed form on `[0 j k ℓ]`.
pub fn mixed_octahedron_kl(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[k, l]);
    v.x(&[0, l]) - (v.a(j) - v.a(k)) / (v.x(&[j, l]) - c) - v.x(&[0, k])
        + (v.a(j) - v.a(l)) / (v.x(&[j, k]) - c)
}

/// Cross-ratio corner equation at `x_j` of the cube `{j k ℓ}` under `P_i`.
pub fn cross_ratio_cube_j(v: &Labeled, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[j]);
    (v.a(i) - v.a(k)) / (c - v.x(&[j, k]))
        - (v.a(i) - v.a(l)) / (c - v.x(&[j, l]))
        - (v.a(j) - v.a(k)) / (c - v.x(&[k]))
        + (v.a(j) - v.a(l)) / (c - v.x(&[l]))
}

/// Cross-ratio corner equation at `x_kℓ` of the cube `{j k ℓ}` under `P_i`.
pub fn cross_ratio_cube_kl(v: &Labeled, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[k, l]);
    (v.a(i) - v.a(k)) / (v.x(&[l]) - c)
        - (v.a(j) - v.a(k)) / (v.x(&[j, l]) - c)
        - (v.a(i) - v.a(l)) / (v.x(&[k]) - c)
        + (v.a(j) - v.a(l)) / (v.x(&[j, k]) - c)
}

/// Three-leg form of [`cross_ratio_cube_j`] with `α^i = 0`.
pub fn cross_ratio_cube_j_three_leg(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[j]);
    let leg = |m: usize| {
        v.a(j) / (c - v.x(&[])) - v.a(m) / (c - v.x(&[j, m])) - (v.a(j) - v.a(m)) / (c - v.x(&[m]))
    };
    leg(k) - leg(l)
}

/// Three-leg form of [`cross_ratio_cube_kl`] with `α^i = 0`.
pub fn cross_ratio_cube_kl_three_leg(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[k, l]);
    let top = v.a(j) / (v.x(&[j, k, l]) - c);
    (top - v.a(k) / (v.x(&[l]) - c) - (v.a(j) - v.a(k)) / (v.x(&[j, l]) - c))
        - (top - v.a(l) / (v.x(&[k]) - c) - (v.a(j) - v.a(l)) / (v.x(&[j, k]) - c))
}

/// `𝓔_j` of the mixed form under `P_0` on the cube `{j k ℓ}`.
pub fn mixed_cube_j(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[j]);
    -v.x(&[j, k]) + v.x(&[j, l]) - (v.a(j) - v.a(k)) / (c - v.x(&[k]))
        + (v.a(j) - v.a(l)) / (c - v.x(&[l]))
}

/// `𝓔_kℓ` of the mixed form under `P_0` on the cube `{j k ℓ}`.
pub fn mixed_cube_kl(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[k, l]);
    v.x(&[l]) - (v.a(j) - v.a(k)) / (v.x(&[j, l]) - c) - v.x(&[k])
        + (v.a(j) - v.a(l)) / (v.x(&[j, k]) - c)
}

pub fn mixed_cube_j_three_leg(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[j]);
    let x = v.x(&[]);
    (x - v.x(&[j, k]) - (v.a(j) - v.a(k)) / (c - v.x(&[k])))
        - (x - v.x(&[j, l]) - (v.a(j) - v.a(l)) / (c - v.x(&[l])))
}

pub fn mixed_cube_kl_three_leg(v: &Labeled, j: usize, k: usize, l: usize) -> f64 {
    let c = v.x(&[k, l]);
    let top = v.x(&[j, k, l]);
    (v.x(&[l]) - top - (v.a(j) - v.a(k)) / (v.x(&[j, l]) - c))
        - (v.x(&[k]) - top - (v.a(j) - v.a(l)) / (v.x(&[j, k]) - c))
}

/// Centers of the `P_3` cube `{0 1 2}` carrying corner equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TildeCenter {
    E0,
    E1,
    E2,
    E01,
    E02,
    E12,
}

impl TildeCenter {
    pub const ALL: [TildeCenter; 6] = [
        Self::E0,
        Self::E1,
        Self::E2,
        Self::E01,
        Self::E02,
        Self::E12,
    ];

    pub fn labels(self) -> &'static [usize] {
        match self {
            Self::E0 => &[0],
            Self::E1 => &[1],
            Self::E2 => &[2],
            Self::E01 => &[0, 1],
            Self::E02 => &[0, 2],
            Self::E12 => &[1, 2],
        }
    }
}

/// `𝓔̃` of the mixed form under `P_3` on the cube `{0 1 2}`.
pub fn mixed_tilde(v: &Labeled, c: TildeCenter) -> f64 {
    let x = |s: &[usize]| v.x(s);
    let (a1, a2, a3) = (v.a(1), v.a(2), v.a(3));
    match c {
        TildeCenter::E0 => {
            -x(&[1]) + x(&[2]) - (a1 - a3) / (x(&[0, 1]) - x(&[0]))
                + (a2 - a3) / (x(&[0, 2]) - x(&[0]))
        }
        TildeCenter::E1 => {
            -x(&[0]) + (a1 - a2) / (x(&[1]) - x(&[2])) + x(&[0, 1])
                - (a2 - a3) / (x(&[1, 2]) - x(&[1]))
        }
        TildeCenter::E2 => {
            x(&[0]) - (a1 - a2) / (x(&[1]) - x(&[2])) - x(&[0, 2])
                + (a1 - a3) / (x(&[1, 2]) - x(&[2]))
        }
        TildeCenter::E01 => {
            -x(&[1, 2]) + x(&[1]) - (a1 - a2) / (x(&[0, 1]) - x(&[0, 2]))
                + (a1 - a3) / (x(&[0, 1]) - x(&[0]))
        }
        TildeCenter::E02 => {
            x(&[1, 2]) - x(&[2]) + (a1 - a2) / (x(&[0, 1]) - x(&[0, 2]))
                - (a2 - a3) / (x(&[0, 2]) - x(&[0]))
        }
        TildeCenter::E12 => {
            x(&[0, 2]) - (a1 - a3) / (x(&[1, 2]) - x(&[2])) - x(&[0, 1])
                + (a2 - a3) / (x(&[1, 2]) - x(&[1]))
        }
    }
}

/// Three-leg form of [`mixed_tilde`] with `α^3 = 0`.
pub fn mixed_tilde_three_leg(v: &Labeled, c: TildeCenter) -> f64 {
    let x = |s: &[usize]| v.x(s);
    let (a1, a2) = (v.a(1), v.a(2));
    let x0 = x(&[]);
    let top = x(&[0, 1, 2]);
    match c {
        TildeCenter::E0 => {
            (x0 - x(&[1]) - a1 / (x(&[0, 1]) - x(&[0])))
                - (x0 - x(&[2]) - a2 / (x(&[0, 2]) - x(&[0])))
        }
        TildeCenter::E1 => {
            (-x(&[0]) + x(&[0, 1]) - a1 / (x0 - x(&[1])))
                - (-a1 / (x0 - x(&[1])) + a2 / (x(&[1, 2]) - x(&[1]))
                    - (a1 - a2) / (x(&[1]) - x(&[2])))
        }
        TildeCenter::E2 => {
            (x(&[0]) - x(&[0, 2]) + a2 / (x0 - x(&[2])))
                - (a2 / (x0 - x(&[2])) - a1 / (x(&[1, 2]) - x(&[2]))
                    + (a1 - a2) / (x(&[1]) - x(&[2])))
        }
        TildeCenter::E01 => {
            (-x(&[1, 2]) + x(&[1]) + a2 / (x(&[0, 1]) - top))
                - (a2 / (x(&[0, 1]) - top) - a1 / (x(&[0, 1]) - x(&[0]))
                    + (a1 - a2) / (x(&[0, 1]) - x(&[0, 2])))
        }
        TildeCenter::E02 => {
            (x(&[1, 2]) - x(&[2]) - a1 / (x(&[0, 2]) - top))
                - (-a1 / (x(&[0, 2]) - top) + a2 / (x(&[0, 2]) - x(&[0]))
                    - (a1 - a2) / (x(&[0, 1]) - x(&[0, 2])))
        }
        TildeCenter::E12 => {
            (x(&[0, 2]) - top - a1 / (x(&[1, 2]) - x(&[2])))
                - (x(&[0, 1]) - top - a2 / (x(&[1, 2]) - x(&[1])))
        }
    }
}

/// All orderings of `items`.
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (n, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(n);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// The cube `{P_i(j) P_i(k) P_i(ℓ)}` read in the given label order.
pub fn literal_cube(
    base: &LatticePoint,
    projection: Projection,
    labels: &[usize],
) -> Result<OrientedCell> {
    let dirs: Vec<usize> = labels
        .iter()
        .map(|&q| {
            projection.project_direction(q).ok_or_else(|| {
                Error::InvalidDirection(format!("label {q} is the dropped direction"))
            })
        })
        .collect::<Result<_>>()?;
    OrientedCell::new(CellKind::Cube, base.clone(), &dirs, 1)
}

/// Z^N point labelled by Q(A_N) directions on the unit cube at `base`.
pub fn cube_point(base: &LatticePoint, projection: Projection, labels: &[usize]) -> LatticePoint {
    let dirs: Vec<usize> = labels
        .iter()
        .filter_map(|&q| projection.project_direction(q))
        .collect();
    base.plus_units(&dirs)
}

/// Corner-equation family whose printed formulas are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaSet {
    /// Cross-ratio octahedron equation at `x_ij` of `[i j k ℓ]`, every ordering.
    CrossRatioOctahedron,
    /// Mixed-form `E_0j`, `E_kℓ` on `[0 j k ℓ]`.
    MixedOctahedron,
    /// Cross-ratio cube equations at `x_j` and `x_kℓ` under `P_i`, every `i`.
    CrossRatioCube,
    /// Mixed-form `𝓔_j`, `𝓔_kℓ` under `P_0`.
    MixedCubeP0,
    /// Mixed-form `𝓔̃` under `P_3`.
    MixedCubeP3,
}

impl FormulaSet {
    pub const ALL: [FormulaSet; 5] = [
        Self::CrossRatioOctahedron,
        Self::MixedOctahedron,
        Self::CrossRatioCube,
        Self::MixedCubeP0,
        Self::MixedCubeP3,
    ];

    fn family(self) -> &'static str {
        match self {
            Self::CrossRatioOctahedron | Self::CrossRatioCube => "cross_ratio_log",
            _ => "mixed_q_a3",
        }
    }
}

fn sampled_form(family: &str, rng: &mut sampling::TrialRng) -> Result<TwoForm> {
    let params = sampling::sample_alphas(rng, &[0, 1, 2, 3], &FormParameters::default());
    Ok(TwoForm::new(crate::forms::family_by_name(family)?, params))
}

/// Max `|printed − computed|` over every labelling of one random
/// configuration; `three_leg` also compares the three-leg forms (with the
/// normalizations `α^i = 0`, `α^3 = 0`) where the set has them.
pub fn formula_error(set: FormulaSet, seed: u64, three_leg: bool) -> Result<f64> {
    let mut rng = sampling::rng(seed);
    let form = sampled_form(set.family(), &mut rng)?;
    let mut worst: f64 = 0.0;
    match set {
        FormulaSet::CrossRatioOctahedron | FormulaSet::MixedOctahedron => {
            let octa = variational::reference_octahedron();
            let verts = octa.vertices();
            let field = sampling::sample_field(
                &mut rng,
                &verts,
                &sampling::all_pairs(&verts),
                sampling::FIELD_SEPARATION,
            );
            let v = Labeled::octahedron(&octa, &field, &form.params)?;
            let orders = if set == FormulaSet::CrossRatioOctahedron {
                permutations(&[0, 1, 2, 3])
            } else {
                permutations(&[1, 2, 3])
                    .into_iter()
                    .map(|p| [vec![0], p].concat())
                    .collect()
            };
            for o in orders {
                let cell = OrientedCell::new(CellKind::Octahedron, octa.base.clone(), &o, 1)?;
                let at = |a: usize, b: usize| octa.base.plus_units(&[a, b]);
                let r = |p: LatticePoint| {
                    corner_residual(&form, &cell, &p, &field, Method::Analytic).map(|c| c.value)
                };
                let (i, j, k, l) = (o[0], o[1], o[2], o[3]);
                if set == FormulaSet::CrossRatioOctahedron {
                    worst =
                        worst.max((cross_ratio_octahedron(&v, i, j, k, l) - r(at(i, j))?).abs());
                } else {
                    worst = worst.max((mixed_octahedron_0j(&v, j, k, l) - r(at(0, j))?).abs());
                    worst = worst.max((mixed_octahedron_kl(&v, j, k, l) - r(at(k, l))?).abs());
                }
            }
        }
        FormulaSet::CrossRatioCube | FormulaSet::MixedCubeP0 | FormulaSet::MixedCubeP3 => {
            let base = LatticePoint::origin(3);
            let cube = variational::reference_cube();
            let verts = cube.vertices();
            let field = sampling::sample_field(
                &mut rng,
                &verts,
                &sampling::all_pairs(&verts),
                sampling::FIELD_SEPARATION,
            );
            let projections: Vec<usize> = match set {
                FormulaSet::CrossRatioCube => vec![0, 1, 2, 3],
                FormulaSet::MixedCubeP0 => vec![0],
                _ => vec![3],
            };
            for i in projections {
                let projection = Projection::new(i);
                let mut params = form.params.clone();
                if three_leg {
                    params.set(i, 0.0);
                }
                let pf = PushforwardForm::new(
                    TwoForm::new(form.family.clone(), params.clone()),
                    projection,
                );
                let v = Labeled::cube(&base, projection, &field, &params)?;
                let residual = |cube: &OrientedCell, labels: &[usize]| {
                    cube_corner_residual(
                        &pf,
                        cube,
                        &cube_point(&base, projection, labels),
                        &field,
                        Method::Analytic,
                    )
                    .map(|c| c.value)
                };
                if set == FormulaSet::MixedCubeP3 {
                    for c in TildeCenter::ALL {
                        let computed = residual(&cube, c.labels())?;
                        worst = worst.max((mixed_tilde(&v, c) - computed).abs());
                        if three_leg {
                            worst = worst.max((mixed_tilde_three_leg(&v, c) - computed).abs());
                        }
                    }
                    continue;
                }
                let labels: Vec<usize> = (0..4).filter(|&q| q != i).collect();
                for o in permutations(&labels) {
                    let (j, k, l) = (o[0], o[1], o[2]);
                    let lit = literal_cube(&base, projection, &o)?;
                    let at_j = -residual(&lit, &[j])?;
                    let at_kl = -residual(&lit, &[k, l])?;
                    let (pj, pkl) = if set == FormulaSet::CrossRatioCube {
                        (
                            cross_ratio_cube_j(&v, i, j, k, l),
                            cross_ratio_cube_kl(&v, i, j, k, l),
                        )
                    } else {
                        (mixed_cube_j(&v, j, k, l), mixed_cube_kl(&v, j, k, l))
                    };
                    worst = worst.max((pj - at_j).abs()).max((pkl - at_kl).abs());
                    if three_leg {
                        let (tj, tkl) = if set == FormulaSet::CrossRatioCube {
                            (
                                cross_ratio_cube_j_three_leg(&v, j, k, l),
                                cross_ratio_cube_kl_three_leg(&v, j, k, l),
                            )
                        } else {
                            (
                                mixed_cube_j_three_leg(&v, j, k, l),
                                mixed_cube_kl_three_leg(&v, j, k, l),
                            )
                        };
                        worst = worst.max((tj - at_j).abs()).max((tkl - at_kl).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

pub const PRINTED_TOLERANCE: f64 = 1e-12;
pub const THREE_LEG_TOLERANCE: f64 = 1e-10;

/// Printed closed forms against computed corner residuals.
pub fn printed_formula_check(set: FormulaSet, trials: u64, seed: u64) -> CheckReport {
    let records = run_trials(seed, trials, MAX_ATTEMPTS, PRINTED_TOLERANCE, |s| {
        formula_error(set, s, false)
    });
    CheckReport::from_trials(
        "printed-formulas",
        format!("{set:?}"),
        seed,
        PRINTED_TOLERANCE,
        records,
    )
}

/// Three-leg differences (and the printed forms) against computed corner
/// residuals, for the cube formula sets.
pub fn three_leg_check(set: FormulaSet, trials: u64, seed: u64) -> CheckReport {
    let records = run_trials(seed, trials, MAX_ATTEMPTS, THREE_LEG_TOLERANCE, |s| {
        formula_error(set, s, true)
    });
    CheckReport::from_trials(
        "three-leg",
        format!("{set:?}"),
        seed,
        THREE_LEG_TOLERANCE,
        records,
    )
}

/// Formula set paired with a quad system for the three-leg suite.
pub fn three_leg_set_for_system(name: &str) -> Result<FormulaSet> {
    match crate::quad_systems::QuadSystem::by_name(name)?
        .name
        .as_str()
    {
        "cross_ratio_all" => Ok(FormulaSet::CrossRatioCube),
        "kdv_all" => Ok(FormulaSet::MixedCubeP0),
        _ => Ok(FormulaSet::MixedCubeP3),
    }
}

/// Sign of the label ordering, exposed for diagnostics.
pub fn ordering_sign(labels: &[usize]) -> Result<i8> {
    permutation_sign(labels)
}
