//! Corner equations, Euler–Lagrange residuals on 2-manifolds, the rank-2
//! consistency test for octahedron corner systems and closedness.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{fd_step, FieldAssignment, FieldView, Leg, Perturbed, PushforwardForm, TwoForm};
use crate::lattice_qan::{CellChain, CellKind, LatticePoint, OrientedCell};
use crate::lattice_zn::Projection;
use crate::sampling::{self, FIELD_SEPARATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerResidual {
    pub cell3: OrientedCell,
    pub center: LatticePoint,
    pub value: f64,
    /// Per-leg contributions; empty for finite differences.
    pub legs: Vec<Leg>,
}

fn require_vertex(cell: &OrientedCell, center: &LatticePoint) -> Result<()> {
    if cell.has_vertex(center) {
        Ok(())
    } else {
        Err(Error::NotAVertex {
            cell: cell.to_string(),
            point: center.clone(),
        })
    }
}

/// `∂ dL(cell3) / ∂x(center)`.
pub fn corner_residual(
    form: &TwoForm,
    cell3: &OrientedCell,
    center: &LatticePoint,
    field: &dyn FieldView,
    method: Method,
) -> Result<CornerResidual> {
    if cell3.dimension() != 3 || cell3.kind.is_cubic() {
        return Err(Error::InvalidCell(format!(
            "expected a Q(A_N) 3-cell, got {cell3}"
        )));
    }
    require_vertex(cell3, center)?;
    let facets = cell3.facets()?;
    let (value, legs) = match method {
        Method::Analytic => {
            let g = form.gradient(&facets, center, field)?;
            (g.value, g.legs)
        }
        Method::FiniteDifference => (form.gradient_fd(&facets, center, field)?, Vec::new()),
    };
    Ok(CornerResidual {
        cell3: cell3.clone(),
        center: center.clone(),
        value,
        legs,
    })
}

/// `∂𝔖 / ∂x(center)` on a Z^N cube for a pushed-forward form.
///
/// The analytic route differentiates the pulled-back triangle chain at the
/// unique preimage of `center`; the finite-difference route perturbs the Z^N
/// field directly.
pub fn cube_corner_residual(
    form: &PushforwardForm,
    cube: &OrientedCell,
    center: &LatticePoint,
    field: &dyn FieldView,
    method: Method,
) -> Result<CornerResidual> {
    if cube.kind != CellKind::Cube {
        return Err(Error::InvalidCell(format!("expected a cube, got {cube}")));
    }
    require_vertex(cube, center)?;
    let (value, legs) = match method {
        Method::Analytic => {
            let chain = form.preimage_chain(cube)?;
            let lifted = form.projection.lift_point(center);
            let pulled = form.pullback(field);
            let g = form.form.gradient(&chain, &lifted, &pulled)?;
            (g.value, g.legs)
        }
        Method::FiniteDifference => {
            let h = fd_step(field.value(center)?);
            let plus = Perturbed {
                inner: field,
                point: center,
                delta: h,
            };
            let minus = Perturbed {
                inner: field,
                point: center,
                delta: -h,
            };
            let d = (form.exterior_derivative(cube, &plus)?
                - form.exterior_derivative(cube, &minus)?)
                / (2.0 * h);
            (d, Vec::new())
        }
    };
    Ok(CornerResidual {
        cell3: cube.clone(),
        center: center.clone(),
        value,
        legs,
    })
}

/// `∂S_Σ / ∂x(center)` for a chain of triangles `Σ`.
pub fn flower_el_residual(
    form: &TwoForm,
    flower: &CellChain,
    center: &LatticePoint,
    field: &dyn FieldView,
    method: Method,
) -> Result<f64> {
    if let Some((bad, _)) = flower.iter().find(|(c, _)| !c.kind.is_triangle()) {
        return Err(Error::InvalidManifold(format!("{bad} is not a triangle")));
    }
    if !flower.vertex_set().contains(center) {
        return Err(Error::InvalidManifold(format!(
            "{center} is not a vertex of the flower"
        )));
    }
    match method {
        Method::Analytic => Ok(form.gradient(flower, center, field)?.value),
        Method::FiniteDifference => form.gradient_fd(flower, center, field),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussNewtonOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-10,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub max_residual: f64,
}

/// Damped Gauss–Newton on a square or rectangular system. `eval` returns the
/// residual vector and its Jacobian; steps use the SVD pseudo-inverse and are
/// halved while the residual norm does not decrease.
pub fn gauss_newton<F>(
    x0: DVector<f64>,
    opts: GaussNewtonOptions,
    mut eval: F,
) -> Result<GaussNewtonOutcome>
where
    F: FnMut(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>,
{
    let mut x = x0;
    let (mut r, mut j) = eval(&x)?;
    for it in 0..=opts.max_iterations {
        let max_r = r.amax();
        if max_r <= opts.tolerance {
            return Ok(GaussNewtonOutcome {
                x,
                iterations: it,
                max_residual: max_r,
            });
        }
        if it == opts.max_iterations {
            break;
        }
        let svd = j.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let step = svd
            .solve(&r, 1e-14 * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::PreconditionViolated(e.to_string()))?;
        let norm = r.norm();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial = &x - &step * t;
            if let Ok((rt, jt)) = eval(&trial) {
                if rt.iter().all(|v| v.is_finite()) && rt.norm() < norm {
                    x = trial;
                    r = rt;
                    j = jt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::ConvergenceFailure {
                iterations: it,
                max_residual: max_r,
            });
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: opts.max_iterations,
        max_residual: r.amax(),
    })
}

/// The six corner residuals of an octahedron with their exact Jacobian
/// (second derivatives of `dL`), in the order of `octa.vertices()`.
pub fn octahedron_system(
    form: &TwoForm,
    octa: &OrientedCell,
    field: &dyn FieldView,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let verts = octa.vertices();
    let facets = octa.facets()?;
    let index: BTreeMap<&LatticePoint, usize> =
        verts.iter().enumerate().map(|(n, p)| (p, n)).collect();
    let n = verts.len();
    let mut r = DVector::zeros(n);
    let mut jac = DMatrix::zeros(n, n);
    for (row, v) in verts.iter().enumerate() {
        r[row] = form.gradient(&facets, v, field)?.value;
        for (w, d) in form.second_derivatives(&facets, v, field)? {
            let col = *index
                .get(&w)
                .ok_or_else(|| Error::InvalidCell(format!("leg leaves {octa} at {w}")))?;
            jac[(row, col)] += d;
        }
    }
    Ok((r, jac))
}

fn assignment(points: &[LatticePoint], x: &DVector<f64>) -> FieldAssignment {
    FieldAssignment::from_values(points.iter().cloned().zip(x.iter().copied()).collect())
}

/// Free unknowns of the first solve stages, as indices into the vertex order
/// `x_01, x_02, x_03, x_12, x_13, x_23` of `[0123]`.
///
/// The corner equation at `x_01` does not involve `x_23` and is a Möbius (or
/// affine) equation in its neighbour `x_13`; the one at `x_02` does not involve
/// `x_13` and is Möbius in `x_23`. Keeping the other four values at the random
/// start therefore leaves a generically unique real solution, and prevents the
/// drift to infinity that scale-invariant families show when all six move.
pub const PINNED_FREE: [usize; 2] = [4, 5];

/// The corner equations at `x_01` and `x_02`, which determine [`PINNED_FREE`].
pub const DRIVING_ROWS: [usize; 2] = [0, 1];

/// Values beyond this magnitude count as divergence.
const RUNAWAY: f64 = 1e8;

/// For each vertex `x_ab` of an octahedron (in `vertices()` order), its
/// neighbours with the direction pair of the connecting leg.
fn octahedron_neighbours(octa: &OrientedCell) -> Vec<Vec<(usize, (usize, usize))>> {
    let d = &octa.dirs;
    let mut labels = Vec::new();
    for a in 0..d.len() {
        for c in a + 1..d.len() {
            labels.push([d[a], d[c]]);
        }
    }
    labels
        .iter()
        .map(|p| {
            labels
                .iter()
                .enumerate()
                .filter_map(|(w, q)| {
                    let shared: Vec<usize> = p.iter().copied().filter(|t| q.contains(t)).collect();
                    if shared.len() != 1 {
                        return None;
                    }
                    let u = *p.iter().find(|t| **t != shared[0])?;
                    let v = *q.iter().find(|t| **t != shared[0])?;
                    Some((w, (u.min(v), u.max(v))))
                })
                .collect()
        })
        .collect()
}

/// Corner residuals multiplied by `Π_n (x_v − x_n)` over the neighbours of
/// each center joined by a leg that is singular at coincidence. Same zeros away from coincident values, but no poles, so a
/// descent can reach roots that lie beyond a singularity of the plain system.
pub fn cleared_octahedron_system(
    form: &TwoForm,
    octa: &OrientedCell,
    field: &dyn FieldView,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let verts = octa.vertices();
    let nb: Vec<Vec<usize>> = octahedron_neighbours(octa)
        .into_iter()
        .map(|ns| {
            ns.into_iter()
                .filter(|(_, (i, j))| form.family.singular_at_coincidence(*i, *j))
                .map(|(w, _)| w)
                .collect()
        })
        .collect();
    let x: Vec<f64> = verts
        .iter()
        .map(|p| field.value(p))
        .collect::<Result<_>>()?;
    let (r, j) = octahedron_system(form, octa, field)?;
    let n = verts.len();
    let mut rc = DVector::zeros(n);
    let mut jc = DMatrix::zeros(n, n);
    for v in 0..n {
        let diffs: Vec<f64> = nb[v].iter().map(|&w| x[v] - x[w]).collect();
        let w: f64 = diffs.iter().product();
        let without = |skip: usize| -> f64 {
            diffs
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != skip)
                .map(|(_, d)| d)
                .product()
        };
        rc[v] = w * r[v];
        for col in 0..n {
            jc[(v, col)] = w * j[(v, col)];
        }
        for (k, &nbr) in nb[v].iter().enumerate() {
            let dw = without(k);
            jc[(v, v)] += r[v] * dw;
            jc[(v, nbr)] -= r[v] * dw;
        }
    }
    Ok((rc, jc))
}

fn with_free(base: &DVector<f64>, free: &[usize], y: &DVector<f64>) -> DVector<f64> {
    let mut x = base.clone();
    for (k, &v) in free.iter().enumerate() {
        x[v] = y[k];
    }
    x
}

/// Residuals and Jacobian of a corner system on an octahedron.
type SystemFn = fn(&TwoForm, &OrientedCell, &dyn FieldView) -> Result<(DVector<f64>, DMatrix<f64>)>;

/// Solves the six corner equations from `x0`. Gauss–Newton first solves the
/// pole-free [`DRIVING_ROWS`] for [`PINNED_FREE`], then all six plain residuals
/// in the same two unknowns, then all six in all six unknowns. If any stage
/// fails, Gauss–Newton in all six unknowns runs from `x0` instead.
pub fn solve_octahedron(
    form: &TwoForm,
    octa: &OrientedCell,
    verts: &[LatticePoint],
    x0: DVector<f64>,
) -> Result<GaussNewtonOutcome> {
    let guard = |x: &DVector<f64>| {
        if x.amax() > RUNAWAY {
            Err(Error::PreconditionViolated("iterate diverged".into()))
        } else {
            Ok(assignment(verts, x))
        }
    };
    let pinned = |system: SystemFn, rows: &[usize], start: &DVector<f64>| -> Result<DVector<f64>> {
        let y0 = DVector::from_fn(PINNED_FREE.len(), |k, _| start[PINNED_FREE[k]]);
        let out = gauss_newton(y0, GaussNewtonOptions::default(), |y| {
            let (r, j) = system(form, octa, &guard(&with_free(start, &PINNED_FREE, y))?)?;
            Ok((
                r.select_rows(rows.iter()),
                j.select_rows(rows.iter())
                    .select_columns(PINNED_FREE.iter()),
            ))
        })?;
        Ok(with_free(start, &PINNED_FREE, &out.x))
    };
    let all: Vec<usize> = (0..verts.len()).collect();
    let staged = pinned(cleared_octahedron_system, &DRIVING_ROWS, &x0).and_then(|x1| {
        let x2 = pinned(octahedron_system, &all, &x1)?;
        gauss_newton(x2, GaussNewtonOptions::default(), |x| {
            octahedron_system(form, octa, &guard(x)?)
        })
    });
    staged.or_else(|_| {
        gauss_newton(x0, GaussNewtonOptions::default(), |x| {
            octahedron_system(form, octa, &guard(x)?)
        })
    })
}

/// Numerical rank: singular values above `ratio · σ_max`.
pub fn numerical_rank(singular_values: &[f64], ratio: f64) -> usize {
    let smax = singular_values.iter().copied().fold(0.0, f64::max);
    singular_values
        .iter()
        .filter(|&&s| s > ratio * smax)
        .count()
}

pub const RANK_RATIO: f64 = 1e-8;
pub const MAX_ATTEMPTS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyTrial {
    pub index: u64,
    pub seed: u64,
    pub attempts: u64,
    pub status: TrialStatus,
    pub iterations: usize,
    pub max_residual: f64,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub closedness_value: Option<f64>,
    pub alpha: BTreeMap<usize, f64>,
    /// Solved values at `x_01, x_02, x_03, x_12, x_13, x_23`; empty when inconclusive.
    pub solution: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub family: String,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub trials: Vec<ConsistencyTrial>,
}

impl ConsistencyReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials.len()
    }

    pub fn max_closedness(&self) -> f64 {
        self.trials
            .iter()
            .filter_map(|t| t.closedness_value)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The reference octahedron `[0123]` of Q(A_3).
pub fn reference_octahedron() -> OrientedCell {
    OrientedCell::positive(CellKind::Octahedron, LatticePoint::origin(4), &[0, 1, 2, 3])
}

/// Seed of the `attempt`-th resample of trial `index`.
pub fn attempt_seed(seed: u64, index: u64, attempt: u64) -> u64 {
    let base = sampling::trial_seed(seed, index);
    if attempt == 0 {
        base
    } else {
        sampling::trial_seed(base, attempt)
    }
}

/// Rank-2 test for the octahedron corner system of `form`, with Gauss–Newton
/// from random starts. Parameters missing from `form.params` are sampled per
/// trial.
pub fn octahedron_consistency_check(
    form: &TwoForm,
    trials: u64,
    seed: u64,
) -> Result<ConsistencyReport> {
    if trials == 0 {
        return Err(Error::PreconditionViolated(
            "trials must be at least 1".into(),
        ));
    }
    let octa = reference_octahedron();
    let verts = octa.vertices();
    let missing: Vec<usize> = octa
        .dirs
        .iter()
        .copied()
        .filter(|d| !form.params.alpha.contains_key(d))
        .collect();
    let pairs = sampling::all_pairs(&verts);
    let mut out = Vec::new();
    for index in 0..trials {
        let mut record = None;
        let mut last_note = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            let s = attempt_seed(seed, index, attempt);
            let mut rng = sampling::rng(s);
            let params = sampling::sample_alphas(&mut rng, &missing, &form.params);
            let trial_form = TwoForm::new(form.family.clone(), params.clone());
            let start = sampling::sample_field(&mut rng, &verts, &pairs, FIELD_SEPARATION);
            let x0 = DVector::from_iterator(
                verts.len(),
                verts.iter().map(|p| start.get(p).unwrap_or(0.0)),
            );
            let outcome = match solve_octahedron(&trial_form, &octa, &verts, x0) {
                Ok(o) => o,
                Err(e) => {
                    last_note = e.to_string();
                    continue;
                }
            };
            let field = assignment(&verts, &outcome.x);
            let (_, jac) = match octahedron_system(&trial_form, &octa, &field) {
                Ok(v) => v,
                Err(e) => {
                    last_note = e.to_string();
                    continue;
                }
            };
            let sv: Vec<f64> = jac.singular_values().iter().copied().collect();
            let mut sv_sorted = sv.clone();
            sv_sorted.sort_by(|a, b| b.total_cmp(a));
            let rank = numerical_rank(&sv_sorted, RANK_RATIO);
            let closed = closedness_value(&trial_form, &octa, &field).ok();
            record = Some(ConsistencyTrial {
                index,
                seed: s,
                attempts: attempt + 1,
                status: if rank == 2 {
                    TrialStatus::Pass
                } else {
                    TrialStatus::Fail
                },
                iterations: outcome.iterations,
                max_residual: outcome.max_residual,
                singular_values: sv_sorted,
                rank,
                closedness_value: closed,
                alpha: params.alpha,
                solution: outcome.x.iter().copied().collect(),
                note: None,
            });
            break;
        }
        out.push(record.unwrap_or_else(|| ConsistencyTrial {
            index,
            seed: attempt_seed(seed, index, MAX_ATTEMPTS - 1),
            attempts: MAX_ATTEMPTS,
            status: TrialStatus::Inconclusive,
            iterations: 0,
            max_residual: f64::NAN,
            singular_values: Vec::new(),
            rank: 0,
            closedness_value: None,
            alpha: BTreeMap::new(),
            solution: Vec::new(),
            note: Some(last_note),
        }));
    }
    let count = |s| out.iter().filter(|t| t.status == s).count();
    Ok(ConsistencyReport {
        family: form.family.name().to_string(),
        seed,
        passed: count(TrialStatus::Pass),
        failed: count(TrialStatus::Fail),
        inconclusive: count(TrialStatus::Inconclusive),
        trials: out,
    })
}

/// Bound on corner residuals for a field to count as a solution.
pub const SOLUTION_TOLERANCE: f64 = 1e-10;

/// `dL(octa)` at a solution of its six corner equations.
pub fn closedness_value(
    form: &TwoForm,
    octa: &OrientedCell,
    solution: &dyn FieldView,
) -> Result<f64> {
    if octa.kind != CellKind::Octahedron {
        return Err(Error::InvalidCell(format!(
            "expected an octahedron, got {octa}"
        )));
    }
    let facets = octa.facets()?;
    for v in octa.vertices() {
        let r = form.gradient(&facets, &v, solution)?.value;
        if r.abs() > SOLUTION_TOLERANCE {
            return Err(Error::PreconditionViolated(format!(
                "corner residual {r:e} at {v} exceeds {SOLUTION_TOLERANCE:e}"
            )));
        }
    }
    form.action(&facets, solution)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PushforwardTrial {
    pub index: u64,
    pub seed: u64,
    /// `max |cube residual − pulled-back octahedron residual|` over active centers.
    pub identity_error: f64,
    /// `max |residual|` at `x` and `x_jkℓ`, analytic and finite-difference.
    pub passive_residual: f64,
    /// `max |𝔖 − (P_i)⋆ dL(octahedron)|`.
    pub action_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PushforwardReport {
    pub family: String,
    pub projection: usize,
    pub seed: u64,
    pub identity_tolerance: f64,
    pub passive_tolerance: f64,
    pub max_identity_error: f64,
    pub max_passive_residual: f64,
    pub max_action_error: f64,
    pub passed: bool,
    pub trials: Vec<PushforwardTrial>,
}

/// The positive unit cube `{0 1 2}` of Z^3.
pub fn reference_cube() -> OrientedCell {
    OrientedCell::positive(CellKind::Cube, LatticePoint::origin(3), &[0, 1, 2])
}

/// `(x, x_jkℓ)` of a cube.
pub fn passive_centers(cube: &OrientedCell) -> [LatticePoint; 2] {
    [cube.base.clone(), cube.base.plus_units(&cube.dirs)]
}

/// Samples parameters for every Q(A_3) direction and a nonsingular field on
/// the reference cube.
pub fn sample_cube_configuration(form: &TwoForm, seed: u64) -> (TwoForm, FieldAssignment) {
    let mut rng = sampling::rng(seed);
    let missing: Vec<usize> = (0..4)
        .filter(|d| !form.params.alpha.contains_key(d))
        .collect();
    let params = sampling::sample_alphas(&mut rng, &missing, &form.params);
    let verts = reference_cube().vertices();
    let pairs = sampling::all_pairs(&verts);
    let field = sampling::sample_field(&mut rng, &verts, &pairs, FIELD_SEPARATION);
    (TwoForm::new(form.family.clone(), params), field)
}

/// Checks `𝓔 = (P_i)⋆E` on the six active centers, the absence of corner
/// equations at `x` and `x_jkℓ`, and `𝔖 = (P_i)⋆S` on the reference cube.
pub fn pushforward_identity_check(
    form: &TwoForm,
    dropped: usize,
    trials: u64,
    seed: u64,
) -> Result<PushforwardReport> {
    const IDENTITY_TOL: f64 = 1e-12;
    const PASSIVE_TOL: f64 = 1e-9;
    if dropped > 3 {
        return Err(Error::InvalidDirection(format!("P_{dropped} on Q(A_3)")));
    }
    let projection = Projection::new(dropped);
    let cube = reference_cube();
    let octa = projection.matching_octahedron(&cube)?;
    let passive = passive_centers(&cube);
    let mut out = Vec::new();
    for index in 0..trials {
        let s = sampling::trial_seed(seed, index);
        let (trial_form, field) = sample_cube_configuration(form, s);
        let pf = PushforwardForm::new(trial_form.clone(), projection);
        let pulled = pf.pullback(&field);
        let mut identity_error: f64 = 0.0;
        let mut passive_residual: f64 = 0.0;
        for v in cube.vertices() {
            let analytic = cube_corner_residual(&pf, &cube, &v, &field, Method::Analytic)?.value;
            if passive.contains(&v) {
                let fd =
                    cube_corner_residual(&pf, &cube, &v, &field, Method::FiniteDifference)?.value;
                passive_residual = passive_residual.max(analytic.abs()).max(fd.abs());
            } else {
                let lifted = projection.lift_point(&v);
                let reference =
                    corner_residual(&trial_form, &octa, &lifted, &pulled, Method::Analytic)?.value;
                identity_error = identity_error.max((analytic - reference).abs());
            }
        }
        let action_error = (pf.exterior_derivative(&cube, &field)?
            - trial_form.exterior_derivative(&octa, &pulled)?)
        .abs();
        out.push(PushforwardTrial {
            index,
            seed: s,
            identity_error,
            passive_residual,
            action_error,
        });
    }
    let max = |f: fn(&PushforwardTrial) -> f64| out.iter().map(f).fold(0.0, f64::max);
    let max_identity_error = max(|t| t.identity_error);
    let max_passive_residual = max(|t| t.passive_residual);
    let max_action_error = max(|t| t.action_error);
    Ok(PushforwardReport {
        family: form.family.name().to_string(),
        projection: dropped,
        seed,
        identity_tolerance: IDENTITY_TOL,
        passive_tolerance: PASSIVE_TOL,
        max_identity_error,
        max_passive_residual,
        max_action_error,
        passed: max_identity_error <= IDENTITY_TOL
            && max_action_error <= IDENTITY_TOL
            && max_passive_residual <= PASSIVE_TOL,
        trials: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{CrossRatioLog, FormParameters, MixedQA3, PerturbedBilinear};
    use std::sync::Arc;

    fn cross_ratio() -> TwoForm {
        TwoForm::new(Arc::new(CrossRatioLog), FormParameters::default())
    }

    #[test]
    fn white_tetrahedron_corner_is_zero() {
        let (form, _) = sample_cube_configuration(&cross_ratio(), 5);
        let cell = OrientedCell::positive(
            CellKind::WhiteTetrahedron,
            LatticePoint::origin(4),
            &[0, 1, 2, 3],
        );
        let field = FieldAssignment::new().with_extension_seed(1);
        for v in cell.vertices() {
            let r = corner_residual(&form, &cell, &v, &field, Method::Analytic).unwrap();
            assert_eq!(r.value, 0.0);
            assert!(r.legs.is_empty());
        }
    }

    #[test]
    fn octahedron_corner_has_four_legs() {
        let (form, _) = sample_cube_configuration(&cross_ratio(), 6);
        let octa = reference_octahedron();
        let field = FieldAssignment::new().with_extension_seed(2);
        for v in octa.vertices() {
            let r = corner_residual(&form, &octa, &v, &field, Method::Analytic).unwrap();
            assert_eq!(r.legs.len(), 4);
        }
    }

    #[test]
    fn non_vertex_center_rejected() {
        let octa = reference_octahedron();
        let field = FieldAssignment::new().with_extension_seed(2);
        let r = corner_residual(
            &cross_ratio(),
            &octa,
            &LatticePoint::origin(4),
            &field,
            Method::Analytic,
        );
        assert!(matches!(r, Err(Error::NotAVertex { .. })));
    }

    #[test]
    fn gauss_newton_solves_scalar_equation() {
        let out = gauss_newton(
            DVector::from_element(1, 3.0),
            GaussNewtonOptions::default(),
            |x| {
                Ok((
                    DVector::from_element(1, x[0] * x[0] - 2.0),
                    DMatrix::from_element(1, 1, 2.0 * x[0]),
                ))
            },
        )
        .unwrap();
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn consistency_small_batches() {
        let r = octahedron_consistency_check(&cross_ratio(), 5, 1).unwrap();
        assert_eq!(r.passed, 5, "{r:?}");
        let mixed = TwoForm::new(Arc::new(MixedQA3), FormParameters::default());
        assert_eq!(
            octahedron_consistency_check(&mixed, 5, 1).unwrap().passed,
            5
        );
        let broken = TwoForm::new(
            Arc::new(PerturbedBilinear::default()),
            FormParameters::default(),
        );
        let rb = octahedron_consistency_check(&broken, 5, 1).unwrap();
        assert!(rb.trials.iter().all(|t| t.rank > 2), "{rb:?}");
    }

    #[test]
    fn closedness_requires_solution() {
        let (form, _) = sample_cube_configuration(&cross_ratio(), 9);
        let field = FieldAssignment::new().with_extension_seed(3);
        assert!(matches!(
            closedness_value(&form, &reference_octahedron(), &field),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn pushforward_identity_small_batch() {
        for i in 0..4 {
            let r = pushforward_identity_check(&cross_ratio(), i, 5, 4).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
