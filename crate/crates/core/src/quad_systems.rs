//! Multi-affine quad-equations on Z^3 cubes: corner solving, three-way
//! propagation, the tetrahedron property, the flipping procedure and the
//! inclusion of quad solutions in the solutions of the corner equations.
//!
//! Cube vertices are indexed by bitmask over the local directions `j, k, ℓ`:
//! `x = 0, x_j = 1, x_k = 2, x_jk = 3, x_ℓ = 4, x_jℓ = 5, x_kℓ = 6, x_jkℓ = 7`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Neg;
use std::sync::Arc;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::FieldView as _;
use crate::forms::{
    CrossRatioLog, FieldAssignment, FormParameters, MixedQA3, OneFormFamily, PushforwardForm,
    TwoForm,
};
use crate::lattice_qan::{CellKind, LatticePoint, OrientedCell};
use crate::lattice_zn::Projection;
use crate::report::{relative_difference, run_trials, CheckReport};
use crate::sampling::{self, TrialRng, FIELD_SEPARATION};
use crate::variational::{self, cube_corner_residual, Method, MAX_ATTEMPTS};

/// Field arithmetic used by propagation: `f64` or exact `BigRational`.
pub trait Scalar: Num + Clone + Neg<Output = Self> + fmt::Debug + ToPrimitive {}

impl<T: Num + Clone + Neg<Output = T> + fmt::Debug + ToPrimitive> Scalar for T {}

pub const X: usize = 0;
pub const J: usize = 1;
pub const K: usize = 2;
pub const JK: usize = 3;
pub const L: usize = 4;
pub const JL: usize = 5;
pub const KL: usize = 6;
pub const JKL: usize = 7;

pub const VERTEX_NAMES: [&str; 8] = ["x", "x_j", "x_k", "x_jk", "x_l", "x_jl", "x_kl", "x_jkl"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadLabel {
    /// `α^k (x − x_j)(x_k − x_jk) − α^j (x − x_k)(x_j − x_jk)`.
    CrossRatioQ1,
    /// `(x − x_jk)(x_j − x_k) − (α^j − α^k)`.
    KdVH1,
    /// `(x − x_k)(x_j − x_jk) + α^k`.
    TrapezoidalH1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadEquation {
    pub label: QuadLabel,
}

impl QuadEquation {
    pub const CROSS_RATIO: Self = Self {
        label: QuadLabel::CrossRatioQ1,
    };
    pub const KDV: Self = Self {
        label: QuadLabel::KdVH1,
    };
    pub const TRAPEZOIDAL: Self = Self {
        label: QuadLabel::TrapezoidalH1,
    };

    /// Residual at `(x, x_j, x_k, x_jk)` with parameters `(α^j, α^k)`.
    pub fn residual<S: Scalar>(&self, v: &[S; 4], aj: &S, ak: &S) -> S {
        let [x, xj, xk, xjk] = v;
        match self.label {
            QuadLabel::CrossRatioQ1 => {
                ak.clone() * (x.clone() - xj.clone()) * (xk.clone() - xjk.clone())
                    - aj.clone() * (x.clone() - xk.clone()) * (xj.clone() - xjk.clone())
            }
            QuadLabel::KdVH1 => {
                (x.clone() - xjk.clone()) * (xj.clone() - xk.clone()) - (aj.clone() - ak.clone())
            }
            QuadLabel::TrapezoidalH1 => {
                (x.clone() - xk.clone()) * (xj.clone() - xjk.clone()) + ak.clone()
            }
        }
    }

    /// The value of argument `target` annihilating the residual; the residual
    /// is affine in it, so `t = −r(0) / (r(1) − r(0))`.
    pub fn solve_corner<S: Scalar>(
        &self,
        known: &[S; 4],
        target: usize,
        aj: &S,
        ak: &S,
    ) -> Result<S> {
        assert!(target < 4, "corner index {target} out of range");
        let mut v = known.clone();
        v[target] = S::zero();
        let r0 = self.residual(&v, aj, ak);
        v[target] = S::one();
        let r1 = self.residual(&v, aj, ak);
        let coeff = r1 - r0.clone();
        if coeff.is_zero() {
            return Err(Error::DegenerateCoefficient {
                face: format!("{:?} solving argument {target}", self.label),
            });
        }
        Ok(-r0 / coeff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CubeFace {
    /// `{jk}`
    Jk,
    /// `{jℓ}`
    Jl,
    /// `{kℓ}`
    Kl,
    /// `T_ℓ{jk}`
    TopJk,
    /// `T_k{jℓ}`
    TopJl,
    /// `T_j{kℓ}`
    TopKl,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        Self::Jk,
        Self::Jl,
        Self::Kl,
        Self::TopJk,
        Self::TopJl,
        Self::TopKl,
    ];

    /// `(x, x_j, x_k, x_jk)` of the face in the natural order.
    pub fn vertices(self) -> [usize; 4] {
        match self {
            Self::Jk => [X, J, K, JK],
            Self::Jl => [X, J, L, JL],
            Self::Kl => [X, K, L, KL],
            Self::TopJk => [L, JL, KL, JKL],
            Self::TopJl => [K, JK, KL, JKL],
            Self::TopKl => [J, JK, JL, JKL],
        }
    }

    /// Local direction pair spanning the face.
    pub fn directions(self) -> (usize, usize) {
        match self {
            Self::Jk | Self::TopJk => (0, 1),
            Self::Jl | Self::TopJl => (0, 2),
            Self::Kl | Self::TopKl => (1, 2),
        }
    }
}

/// One face of a cube system: which equation, in which argument order, with
/// which local parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceEquation {
    pub face: CubeFace,
    /// Cube vertices passed as `(x, x_j, x_k, x_jk)` arguments.
    pub arguments: [usize; 4],
    pub equation: QuadEquation,
    /// Local directions supplying `(α^j, α^k)`.
    pub params: (usize, usize),
}

impl FaceEquation {
    pub fn natural(face: CubeFace, equation: QuadEquation) -> Self {
        Self {
            face,
            arguments: face.vertices(),
            equation,
            params: face.directions(),
        }
    }

    pub fn residual<S: Scalar>(&self, values: &[S; 8], alpha: &[S; 3]) -> S {
        let v = self.arguments.map(|i| values[i].clone());
        self.equation
            .residual(&v, &alpha[self.params.0], &alpha[self.params.1])
    }

    /// Solves for cube vertex `target` given the other three arguments.
    pub fn solve<S: Scalar>(&self, values: &[S; 8], target: usize, alpha: &[S; 3]) -> Result<S> {
        let pos = self
            .arguments
            .iter()
            .position(|&a| a == target)
            .ok_or_else(|| {
                Error::InvalidCell(format!(
                    "{} is not on face {:?}",
                    VERTEX_NAMES[target], self.face
                ))
            })?;
        let v = self.arguments.map(|i| values[i].clone());
        self.equation
            .solve_corner(&v, pos, &alpha[self.params.0], &alpha[self.params.1])
            .map_err(|_| Error::DegenerateCoefficient {
                face: format!("{:?} solving {}", self.face, VERTEX_NAMES[target]),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadSystem {
    pub name: String,
    pub faces: Vec<FaceEquation>,
}

impl QuadSystem {
    fn uniform(name: &str, eq: QuadEquation) -> Self {
        Self {
            name: name.into(),
            faces: CubeFace::ALL
                .iter()
                .map(|&f| FaceEquation::natural(f, eq))
                .collect(),
        }
    }

    /// Cross-ratio equation on every face.
    pub fn cross_ratio_all() -> Self {
        Self::uniform("cross_ratio_all", QuadEquation::CROSS_RATIO)
    }

    /// Discrete KdV on every face.
    pub fn kdv_all() -> Self {
        Self::uniform("kdv_all", QuadEquation::KDV)
    }

    /// Trapezoidal equations on `{jk}`, `{jℓ}` and their opposites, the
    /// cross-ratio equation on `{kℓ}` and `T_j{kℓ}`.
    pub fn mixed_trapezoidal() -> Self {
        Self {
            name: "mixed_trapezoidal".into(),
            faces: CubeFace::ALL
                .iter()
                .map(|&f| {
                    let eq = match f {
                        CubeFace::Kl | CubeFace::TopKl => QuadEquation::CROSS_RATIO,
                        _ => QuadEquation::TRAPEZOIDAL,
                    };
                    FaceEquation::natural(f, eq)
                })
                .collect(),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "cross_ratio_all" | "cross-ratio" => Ok(Self::cross_ratio_all()),
            "kdv_all" | "kdv" => Ok(Self::kdv_all()),
            "mixed_trapezoidal" | "mixed" => Ok(Self::mixed_trapezoidal()),
            other => Err(Error::UnknownName(format!("quad system {other:?}"))),
        }
    }

    pub fn builtin_names() -> [&'static str; 3] {
        ["cross_ratio_all", "kdv_all", "mixed_trapezoidal"]
    }

    /// Copy with the equation on `face` and its opposite replaced.
    pub fn with_face_pair_replaced(&self, face: CubeFace, eq: QuadEquation) -> Self {
        let dirs = face.directions();
        let mut out = self.clone();
        out.name = format!("{}[{:?}->{:?}]", self.name, face, eq.label);
        for f in &mut out.faces {
            if f.face.directions() == dirs {
                f.equation = eq;
            }
        }
        out
    }

    pub fn face(&self, face: CubeFace) -> Result<&FaceEquation> {
        self.faces
            .iter()
            .find(|f| f.face == face)
            .ok_or_else(|| Error::InvalidCell(format!("system {} has no face {face:?}", self.name)))
    }

    /// Max absolute face residual at a full set of cube values.
    pub fn max_residual(&self, values: &[f64; 8], alpha: &[f64; 3]) -> f64 {
        self.faces
            .iter()
            .map(|f| f.residual(values, alpha).abs())
            .fold(0.0, f64::max)
    }
}

/// A cube propagated from `(x, x_j, x_k, x_ℓ)`: `values` uses the first route
/// for `x_jkℓ`, `routes` holds all three.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSolution<S> {
    pub values: [S; 8],
    pub routes: Vec<S>,
}

/// `x_jk, x_jℓ, x_kℓ` from the three faces at `x`, then `x_jkℓ` from each of
/// the three faces at `x_jkℓ`.
pub fn propagate_cube<S: Scalar>(
    system: &QuadSystem,
    initial: &[S; 4],
    alpha: &[S; 3],
) -> Result<CubeSolution<S>> {
    let mut values: [S; 8] = std::array::from_fn(|_| S::zero());
    values[X] = initial[0].clone();
    values[J] = initial[1].clone();
    values[K] = initial[2].clone();
    values[L] = initial[3].clone();
    for (face, target) in [(CubeFace::Jk, JK), (CubeFace::Jl, JL), (CubeFace::Kl, KL)] {
        values[target] = system.face(face)?.solve(&values, target, alpha)?;
    }
    let routes = [CubeFace::TopJk, CubeFace::TopJl, CubeFace::TopKl]
        .iter()
        .map(|&f| system.face(f)?.solve(&values, JKL, alpha))
        .collect::<Result<Vec<S>>>()?;
    values[JKL] = routes[0].clone();
    Ok(CubeSolution { values, routes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubeConsistency {
    pub routes: Vec<f64>,
    pub max_relative_difference: f64,
    /// All routes identical (exact arithmetic) or within tolerance.
    pub passed: bool,
}

pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

fn max_pairwise(routes: &[f64]) -> f64 {
    let mut m: f64 = 0.0;
    for a in 0..routes.len() {
        for b in a + 1..routes.len() {
            m = m.max(relative_difference(routes[a], routes[b]));
        }
    }
    m
}

pub fn cube_consistency_check(
    system: &QuadSystem,
    initial: &[f64; 4],
    alpha: &[f64; 3],
) -> Result<CubeConsistency> {
    let sol = propagate_cube(system, initial, alpha)?;
    let d = max_pairwise(&sol.routes);
    Ok(CubeConsistency {
        routes: sol.routes,
        max_relative_difference: d,
        passed: d <= CONSISTENCY_TOLERANCE,
    })
}

/// Exact-rational three-way propagation; passes only if all routes coincide.
pub fn cube_consistency_check_exact(
    system: &QuadSystem,
    initial: &[BigRational; 4],
    alpha: &[BigRational; 3],
) -> Result<(CubeSolution<BigRational>, CubeConsistency)> {
    let sol = propagate_cube(system, initial, alpha)?;
    let identical = sol.routes.iter().all(|r| r == &sol.routes[0]);
    let as_f64: Vec<f64> = sol
        .routes
        .iter()
        .map(|r| r.to_f64().unwrap_or(f64::NAN))
        .collect();
    let d = if identical {
        0.0
    } else {
        max_pairwise(&as_f64).max(f64::MIN_POSITIVE)
    };
    Ok((
        sol.clone(),
        CubeConsistency {
            routes: as_f64,
            max_relative_difference: d,
            passed: identical,
        },
    ))
}

/// Random cube data: four well-separated initial values and three separated
/// local parameters.
pub fn sample_cube_data(rng: &mut TrialRng) -> ([f64; 4], [f64; 3]) {
    let pts: Vec<LatticePoint> = (0..4).map(|k| LatticePoint::new(vec![k])).collect();
    let field = sampling::sample_field(rng, &pts, &sampling::all_pairs(&pts), FIELD_SEPARATION);
    let init = std::array::from_fn(|k| field.get(&pts[k]).unwrap_or(0.0));
    let params = sampling::sample_alphas(rng, &[0, 1, 2], &FormParameters::default());
    let alpha = std::array::from_fn(|k| params.get(k).unwrap_or(1.0));
    (init, alpha)
}

/// Random exact data: values `n/64` with `n ∈ [−64, 64]`, parameters in `[1/2, 2]`.
pub fn sample_cube_data_exact(rng: &mut TrialRng) -> ([BigRational; 4], [BigRational; 3]) {
    let q = |n: i64| BigRational::new(BigInt::from(n), BigInt::from(64));
    let mut pick = |lo: i64, hi: i64, taken: &mut Vec<i64>| loop {
        let n = rng.random_range(lo..=hi);
        if !taken.contains(&n) {
            taken.push(n);
            return n;
        }
    };
    let mut used = Vec::new();
    let init = std::array::from_fn(|_| q(pick(-64, 64, &mut used)));
    let mut used_a = Vec::new();
    let alpha = std::array::from_fn(|_| q(pick(32, 128, &mut used_a)));
    (init, alpha)
}

/// Three-way propagation over random data.
pub fn consistency_batch(system: &QuadSystem, trials: u64, seed: u64, exact: bool) -> CheckReport {
    let tol = if exact { 0.0 } else { CONSISTENCY_TOLERANCE };
    let records = run_trials(seed, trials, MAX_ATTEMPTS, tol, |s| {
        let mut rng = sampling::rng(s);
        if exact {
            let (init, alpha) = sample_cube_data_exact(&mut rng);
            Ok(cube_consistency_check_exact(system, &init, &alpha)?
                .1
                .max_relative_difference)
        } else {
            let (init, alpha) = sample_cube_data(&mut rng);
            Ok(cube_consistency_check(system, &init, &alpha)?.max_relative_difference)
        }
    });
    let check = if exact {
        "quad-consistency-exact"
    } else {
        "quad-consistency"
    };
    CheckReport::from_trials(check, system.name.clone(), seed, tol, records)
}

/// Max relative variation of `x_jkℓ` (over all three routes) when `x` is
/// resampled `perturbations` times with `x_j, x_k, x_ℓ` fixed.
pub fn tetrahedron_property_check(
    system: &QuadSystem,
    initial: &[f64; 4],
    alpha: &[f64; 3],
    perturbations: usize,
    rng: &mut TrialRng,
) -> Result<f64> {
    let reference = propagate_cube(system, initial, alpha)?.routes[0];
    let mut variation = max_pairwise(&propagate_cube(system, initial, alpha)?.routes);
    for _ in 0..perturbations {
        let mut init = *initial;
        init[0] = loop {
            let v = rng.random_range(-1.0..1.0);
            if initial[1..]
                .iter()
                .all(|w| (v - w).abs() >= FIELD_SEPARATION)
            {
                break v;
            }
        };
        for r in propagate_cube(system, &init, alpha)?.routes {
            variation = variation.max(relative_difference(r, reference));
        }
    }
    Ok(variation)
}

pub const TETRAHEDRON_PERTURBATIONS: usize = 10;

pub fn tetrahedron_batch(system: &QuadSystem, trials: u64, seed: u64) -> CheckReport {
    let records = run_trials(seed, trials, MAX_ATTEMPTS, CONSISTENCY_TOLERANCE, |s| {
        let mut rng = sampling::rng(s);
        let (init, alpha) = sample_cube_data(&mut rng);
        tetrahedron_property_check(system, &init, &alpha, TETRAHEDRON_PERTURBATIONS, &mut rng)
    });
    CheckReport::from_trials(
        "tetrahedron-property",
        system.name.clone(),
        seed,
        CONSISTENCY_TOLERANCE,
        records,
    )
}

/// `x_k ↔ x_jk`, `x_ℓ ↔ x_jℓ`.
pub fn flip_cube<T: Clone>(values: &[T; 8]) -> [T; 8] {
    let mut out = values.clone();
    out.swap(K, JK);
    out.swap(L, JL);
    out
}

/// The four side faces of the flipped system: the faces `{jk}`, `{jℓ}`,
/// `T_ℓ{jk}`, `T_k{jℓ}` of `system` with their arguments relabelled by the flip.
pub fn flipped_side_faces(system: &QuadSystem) -> Result<Vec<FaceEquation>> {
    let perm = flip_cube(&[0, 1, 2, 3, 4, 5, 6, 7]);
    [CubeFace::Jk, CubeFace::Jl, CubeFace::TopJk, CubeFace::TopJl]
        .iter()
        .map(|&f| {
            let mut fe = system.face(f)?.clone();
            fe.arguments = fe.arguments.map(|v| perm[v]);
            Ok(fe)
        })
        .collect()
}

pub const FLIP_TOLERANCE: f64 = 1e-10;

/// For a cube solution of `system`: the flipped values satisfy the permuted
/// side-face equations, and the flipped side faces, seeded with `x, x_j, x_k,
/// x_ℓ, x_kℓ` of the flipped cube, reproduce its `x_jk`, `x_jℓ` and (along both
/// remaining faces) `x_jkℓ`. Returns the largest residual or relative mismatch.
pub fn flip_side_face_check(
    system: &QuadSystem,
    solution: &[f64; 8],
    alpha: &[f64; 3],
) -> Result<f64> {
    let y = flip_cube(solution);
    if flip_cube(&y) != *solution {
        return Ok(f64::INFINITY);
    }
    let faces = flipped_side_faces(system)?;
    let mut worst = faces
        .iter()
        .map(|f| f.residual(&y, alpha).abs())
        .fold(0.0, f64::max);
    let mut z = [0.0; 8];
    for v in [X, J, K, L, KL] {
        z[v] = y[v];
    }
    z[JK] = faces[0].solve(&z, JK, alpha)?;
    z[JL] = faces[1].solve(&z, JL, alpha)?;
    let top_a = faces[2].solve(&z, JKL, alpha)?;
    let top_b = faces[3].solve(&z, JKL, alpha)?;
    for (got, want) in [
        (z[JK], y[JK]),
        (z[JL], y[JL]),
        (top_a, y[JKL]),
        (top_b, y[JKL]),
    ] {
        worst = worst.max(relative_difference(got, want));
    }
    Ok(worst)
}

pub fn flip_batch(system: &QuadSystem, trials: u64, seed: u64) -> CheckReport {
    let records = run_trials(seed, trials, MAX_ATTEMPTS, FLIP_TOLERANCE, |s| {
        let mut rng = sampling::rng(s);
        let (init, alpha) = sample_cube_data(&mut rng);
        let sol = propagate_cube(system, &init, &alpha)?;
        flip_side_face_check(system, &sol.values, &alpha)
    });
    CheckReport::from_trials(
        "flip-side-faces",
        system.name.clone(),
        seed,
        FLIP_TOLERANCE,
        records,
    )
}

/// A quad system together with the Q(A_3) 2-form and projection whose corner
/// equations it solves.
#[derive(Clone)]
pub struct Pairing {
    pub system: QuadSystem,
    pub family: Arc<dyn OneFormFamily>,
    pub projection: Projection,
}

impl fmt::Debug for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pairing")
            .field("system", &self.system.name)
            .field("family", &self.family.name())
            .field("projection", &self.projection.dropped_direction)
            .finish()
    }
}

impl Pairing {
    /// `cross_ratio_all` with the cross-ratio form through `P_0` (`α^0 = 0`).
    pub fn cross_ratio() -> Self {
        Self {
            system: QuadSystem::cross_ratio_all(),
            family: Arc::new(CrossRatioLog),
            projection: Projection::new(0),
        }
    }

    /// `kdv_all` with the mixed form through `P_0`.
    pub fn kdv() -> Self {
        Self {
            system: QuadSystem::kdv_all(),
            family: Arc::new(MixedQA3),
            projection: Projection::new(0),
        }
    }

    /// `mixed_trapezoidal` with the mixed form through `P_3` (`α^3 = 0`).
    pub fn mixed_trapezoidal() -> Self {
        Self {
            system: QuadSystem::mixed_trapezoidal(),
            family: Arc::new(MixedQA3),
            projection: Projection::new(3),
        }
    }

    pub fn for_system(name: &str) -> Result<Self> {
        match QuadSystem::by_name(name)?.name.as_str() {
            "cross_ratio_all" => Ok(Self::cross_ratio()),
            "kdv_all" => Ok(Self::kdv()),
            _ => Ok(Self::mixed_trapezoidal()),
        }
    }

    /// Q(A_3) parameters matching local quad parameters: `α^{lift(z)} = a_z`
    /// and `α^i = 0` for the dropped direction.
    pub fn form_parameters(&self, alpha: &[f64; 3]) -> FormParameters {
        let mut p = FormParameters::default();
        p.set(self.projection.dropped_direction, 0.0);
        for (z, a) in alpha.iter().enumerate() {
            p.set(self.projection.lift_direction(z), *a);
        }
        p
    }

    pub fn pushforward(&self, alpha: &[f64; 3]) -> PushforwardForm {
        PushforwardForm::new(
            TwoForm::new(self.family.clone(), self.form_parameters(alpha)),
            self.projection,
        )
    }
}

fn patch_points(extent: usize) -> Result<Vec<LatticePoint>> {
    if extent == 0 {
        return Err(Error::PreconditionViolated(
            "patch extent must be at least 1".into(),
        ));
    }
    let n = extent as i64;
    let mut points = Vec::new();
    for a in 0..=n {
        for b in 0..=n {
            for c in 0..=n {
                points.push(LatticePoint::new(vec![a, b, c]));
            }
        }
    }
    points.sort_by_key(|p| (support(p).len(), p.clone()));
    Ok(points)
}

fn support(p: &LatticePoint) -> Vec<usize> {
    (0..3).filter(|&d| p.coords()[d] != 0).collect()
}

/// Fills every point off the coordinate axes from the face equation of its
/// two lowest nonzero directions, in order of support size.
fn fill_patch<S: Scalar>(
    system: &QuadSystem,
    points: &[LatticePoint],
    values: &mut BTreeMap<LatticePoint, S>,
    alpha: &[S; 3],
) -> Result<()> {
    for p in points.iter().filter(|p| support(p).len() >= 2) {
        let s = support(p);
        let (j, k) = (s[0], s[1]);
        let face = system
            .faces
            .iter()
            .find(|f| {
                matches!(f.face, CubeFace::Jk | CubeFace::Jl | CubeFace::Kl)
                    && f.face.directions() == (j, k)
            })
            .ok_or_else(|| Error::InvalidCell(format!("no face for directions {j},{k}")))?;
        let x0 = p.shifted(j, -1).shifted(k, -1);
        let cube: [S; 8] = std::array::from_fn(|mask| {
            let dirs: Vec<usize> = (0..3).filter(|b| mask & (1 << b) != 0).collect();
            values
                .get(&x0.plus_units(&dirs))
                .cloned()
                .unwrap_or_else(S::zero)
        });
        let v = face.solve(&cube, (1 << j) | (1 << k), alpha)?;
        if v.to_f64().is_none_or(|f| !f.is_finite()) {
            return Err(Error::SingularEvaluation {
                what: format!("propagation to {p}"),
            });
        }
        values.insert(p.clone(), v);
    }
    Ok(())
}

/// Quad solution on the box `[0, n]^3` of Z^3, propagated in floating point
/// from random values on the coordinate axes.
pub fn propagate_patch(
    system: &QuadSystem,
    extent: usize,
    rng: &mut TrialRng,
    alpha: &[f64; 3],
) -> Result<FieldAssignment> {
    let points = patch_points(extent)?;
    let axes: Vec<LatticePoint> = points
        .iter()
        .filter(|p| support(p).len() <= 1)
        .cloned()
        .collect();
    let start = sampling::sample_field(rng, &axes, &sampling::all_pairs(&axes), PATCH_SEPARATION);
    let mut values: BTreeMap<LatticePoint, f64> =
        start.iter().map(|(p, v)| (p.clone(), v)).collect();
    fill_patch(system, &points, &mut values, alpha)?;
    Ok(FieldAssignment::from_values(values))
}

/// [`propagate_patch`] with the propagation carried out in exact rational
/// arithmetic from the (exactly converted) sampled data; only the final
/// values are rounded.
pub fn propagate_patch_exact(
    system: &QuadSystem,
    extent: usize,
    rng: &mut TrialRng,
    alpha: &[f64; 3],
) -> Result<FieldAssignment> {
    let exact = |v: f64| {
        BigRational::from_float(v).ok_or_else(|| Error::SingularEvaluation {
            what: format!("non-finite value {v}"),
        })
    };
    let points = patch_points(extent)?;
    let axes: Vec<LatticePoint> = points
        .iter()
        .filter(|p| support(p).len() <= 1)
        .cloned()
        .collect();
    let start = sampling::sample_field(rng, &axes, &sampling::all_pairs(&axes), PATCH_SEPARATION);
    let mut values = BTreeMap::new();
    for (p, v) in start.iter() {
        values.insert(p.clone(), exact(v)?);
    }
    let a = [exact(alpha[0])?, exact(alpha[1])?, exact(alpha[2])?];
    fill_patch(system, &points, &mut values, &a)?;
    let rounded = values
        .into_iter()
        .map(|(p, v)| (p, v.to_f64().unwrap_or(f64::NAN)))
        .collect();
    Ok(FieldAssignment::from_values(rounded))
}

pub const INCLUSION_TOLERANCE: f64 = 1e-9;

/// Minimum gap between values on one unit cube of a propagated patch (and
/// between the sampled axis values); closer values sit at a pole of the
/// corner equations and the sample is redrawn.
pub const PATCH_SEPARATION: f64 = FIELD_SEPARATION / 50.0;

/// Propagates a quad solution over a patch and returns the largest corner
/// residual of the paired form over every unit cube and all eight centers.
pub fn quad_solution_corner_residual(
    pairing: &Pairing,
    extent: usize,
    rng: &mut TrialRng,
) -> Result<f64> {
    let params = sampling::sample_alphas(rng, &[0, 1, 2], &FormParameters::default());
    let alpha: [f64; 3] = std::array::from_fn(|k| params.get(k).unwrap_or(1.0));
    let field = propagate_patch_exact(&pairing.system, extent, rng, &alpha)?;
    let pf = pairing.pushforward(&alpha);
    let n = extent as i64;
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let cube = OrientedCell::positive(
                    CellKind::Cube,
                    LatticePoint::new(vec![a, b, c]),
                    &[0, 1, 2],
                );
                let corners = cube.vertices();
                for (s, p) in corners.iter().enumerate() {
                    for q in &corners[s + 1..] {
                        let gap = (field.value(p)? - field.value(q)?).abs();
                        if gap < PATCH_SEPARATION {
                            return Err(Error::SingularEvaluation {
                                what: format!(
                                    "propagated values at {p} and {q} only {gap:e} apart"
                                ),
                            });
                        }
                    }
                }
                for v in cube.vertices() {
                    let r = cube_corner_residual(&pf, &cube, &v, &field, Method::Analytic)?;
                    worst = worst.max(r.value.abs());
                }
            }
        }
    }
    Ok(worst)
}

pub fn quad_solutions_satisfy_corners(
    pairing: &Pairing,
    extent: usize,
    trials: u64,
    seed: u64,
) -> CheckReport {
    let records = run_trials(seed, trials, MAX_ATTEMPTS, INCLUSION_TOLERANCE, |s| {
        quad_solution_corner_residual(pairing, extent, &mut sampling::rng(s))
    });
    CheckReport::from_trials(
        format!("quad-implies-corner[{extent}x{extent}x{extent}]"),
        pairing.system.name.clone(),
        seed,
        INCLUSION_TOLERANCE,
        records,
    )
}

/// A field on the unit cube solving all corner equations of the cross-ratio
/// form but not the cross-ratio quad-equations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonInclusionWitness {
    pub seed: u64,
    pub values: [f64; 8],
    pub alpha: [f64; 3],
    pub max_corner_residual: f64,
    pub max_quad_residual: f64,
}

pub const WITNESS_THRESHOLD: f64 = 1e-3;

/// Solves the six active corner equations on the cube with random `x` and
/// `x_jkℓ` and reports the cross-ratio quad residuals there.
pub fn non_inclusion_witness(seed: u64) -> Result<NonInclusionWitness> {
    let pairing = Pairing::cross_ratio();
    let cube = variational::reference_cube();
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let s = variational::attempt_seed(seed, 0, attempt);
        let mut rng = sampling::rng(s);
        let (init, alpha) = sample_cube_data(&mut rng);
        let pf = pairing.pushforward(&alpha);
        let octa = pairing.projection.matching_octahedron(&cube)?;
        let verts = octa.vertices();
        let start = sampling::sample_field(
            &mut rng,
            &verts,
            &sampling::all_pairs(&verts),
            FIELD_SEPARATION,
        );
        let x0 = DVector::from_iterator(
            verts.len(),
            verts.iter().map(|p| start.get(p).unwrap_or(0.0)),
        );
        let solved = match variational::solve_octahedron(&pf.form, &octa, &verts, x0) {
            Ok(o) => o,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        let mut values = [0.0; 8];
        let mut field = FieldAssignment::new();
        for (mask, slot) in values.iter_mut().enumerate() {
            let dirs: Vec<usize> = (0..3).filter(|b| mask & (1 << b) != 0).collect();
            let p = cube.base.plus_units(&dirs);
            *slot = match mask {
                X => init[0],
                JKL => init[3],
                _ => {
                    let lifted = pairing.projection.lift_point(&p);
                    let idx = verts.iter().position(|v| *v == lifted).ok_or_else(|| {
                        Error::InvalidCell(format!("{p} has no preimage on the octahedron"))
                    })?;
                    solved.x[idx]
                }
            };
            field.set(p, *slot);
        }
        let mut max_corner: f64 = 0.0;
        for v in cube.vertices() {
            max_corner = max_corner.max(
                cube_corner_residual(&pf, &cube, &v, &field, Method::Analytic)?
                    .value
                    .abs(),
            );
        }
        return Ok(NonInclusionWitness {
            seed: s,
            values,
            alpha,
            max_corner_residual: max_corner,
            max_quad_residual: pairing.system.max_residual(&values, &alpha),
        });
    }
    Err(last.unwrap_or(Error::PreconditionViolated("no witness found".into())))
}

/// Largest difference between the cube corner residuals of the mixed form
/// pushed forward by `P_0` and by `P_3`, over `samples` random cube fields.
pub fn projection_difference(samples: u64, seed: u64) -> Result<f64> {
    let cube = variational::reference_cube();
    let mut worst: f64 = 0.0;
    for index in 0..samples {
        let mut rng = sampling::rng(sampling::trial_seed(seed, index));
        let params = sampling::sample_alphas(&mut rng, &[0, 1, 2, 3], &FormParameters::default());
        let form = TwoForm::new(Arc::new(MixedQA3), params);
        let verts = cube.vertices();
        let field = sampling::sample_field(
            &mut rng,
            &verts,
            &sampling::all_pairs(&verts),
            FIELD_SEPARATION,
        );
        let p0 = PushforwardForm::new(form.clone(), Projection::new(0));
        let p3 = PushforwardForm::new(form, Projection::new(3));
        for v in &verts {
            let a = cube_corner_residual(&p0, &cube, v, &field, Method::Analytic)?.value;
            let b = cube_corner_residual(&p3, &cube, v, &field, Method::Analytic)?.value;
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}
