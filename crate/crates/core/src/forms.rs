//! Discrete 1-forms on edges, the triangle 2-form built from them, actions on
//! chains of triangles, exterior derivatives on 3-cells and the pushforward
//! of the 2-form to Z^N.
//!
//! On a black triangle the 2-form is `Λ^{ij}([ij]) − Λ^{ik}([ik]) + Λ^{jk}([jk])`,
//! i.e. the sum of the edge 1-forms over its facet chain; it vanishes on white
//! triangles.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::lattice_qan::{CellChain, CellKind, LatticePoint, OrientedCell};
use crate::lattice_zn::{cube_facets, Projection};
use crate::sampling::hashed_value;

/// Read access to field values `x(n)`.
pub trait FieldView {
    fn value(&self, p: &LatticePoint) -> Result<f64>;
}

/// Explicit field values, optionally extended lazily by a seeded hash.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldAssignment {
    values: BTreeMap<LatticePoint, f64>,
    extension_seed: Option<u64>,
}

impl FieldAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: BTreeMap<LatticePoint, f64>) -> Self {
        Self {
            values,
            extension_seed: None,
        }
    }

    pub fn with_extension_seed(mut self, seed: u64) -> Self {
        self.extension_seed = Some(seed);
        self
    }

    pub fn extension_seed(&self) -> Option<u64> {
        self.extension_seed
    }

    pub fn set(&mut self, p: LatticePoint, v: f64) {
        self.values.insert(p, v);
    }

    pub fn get(&self, p: &LatticePoint) -> Option<f64> {
        self.values.get(p).copied()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.values.contains_key(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, f64)> + '_ {
        self.values.iter().map(|(p, &v)| (p, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Parses the field file format: an object mapping `"n0,n1,..."` keys to
    /// numbers, plus an optional integer `"seed"` for lazy extension.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("field file must be a JSON object".into()))?;
        let mut out = Self::new();
        for (key, val) in obj {
            if key == "seed" {
                let seed = val
                    .as_u64()
                    .ok_or_else(|| Error::Parse("seed must be a non-negative integer".into()))?;
                out.extension_seed = Some(seed);
                continue;
            }
            let coords = key
                .split(',')
                .map(|t| t.trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("bad coordinate key {key:?}: {e}")))?;
            let x = val
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("value at {key:?} is not a number")))?;
            out.values.insert(LatticePoint::new(coords), x);
        }
        Ok(out)
    }

    pub fn to_json_value(&self) -> Value {
        let mut obj = Map::new();
        for (p, v) in &self.values {
            let key: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
            obj.insert(key.join(","), Value::from(*v));
        }
        if let Some(s) = self.extension_seed {
            obj.insert("seed".into(), Value::from(s));
        }
        Value::Object(obj)
    }
}

impl FieldView for FieldAssignment {
    fn value(&self, p: &LatticePoint) -> Result<f64> {
        match (self.values.get(p), self.extension_seed) {
            (Some(&v), _) => Ok(v),
            (None, Some(seed)) => Ok(hashed_value(seed, p)),
            (None, None) => Err(Error::MissingField(p.clone())),
        }
    }
}

/// A Z^N field read on Q(A_N): `x̂(n) = x(P_i n)`.
pub struct Pullback<'a> {
    pub field: &'a dyn FieldView,
    pub projection: Projection,
}

impl FieldView for Pullback<'_> {
    fn value(&self, p: &LatticePoint) -> Result<f64> {
        self.field.value(&self.projection.project_point(p)?)
    }
}

/// A field with one value displaced by `delta`.
pub struct Perturbed<'a> {
    pub inner: &'a dyn FieldView,
    pub point: &'a LatticePoint,
    pub delta: f64,
}

impl FieldView for Perturbed<'_> {
    fn value(&self, p: &LatticePoint) -> Result<f64> {
        let v = self.inner.value(p)?;
        Ok(if p == self.point { v + self.delta } else { v })
    }
}

/// Per-direction parameters `α^i`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FormParameters {
    pub alpha: BTreeMap<usize, f64>,
}

impl FormParameters {
    pub fn from_slice(alpha: &[f64]) -> Self {
        Self {
            alpha: alpha.iter().copied().enumerate().collect(),
        }
    }

    pub fn get(&self, dir: usize) -> Result<f64> {
        self.alpha
            .get(&dir)
            .copied()
            .ok_or(Error::MissingParameter(dir))
    }

    pub fn set(&mut self, dir: usize, a: f64) {
        self.alpha.insert(dir, a);
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.alpha.values().copied()
    }
}

/// Edge functions `Λ^{ij}(u, v)` with `i < j`, `u = x_i`, `v = x_j`.
pub trait OneFormFamily: Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, i: usize, j: usize, u: f64, v: f64, params: &FormParameters) -> Result<f64>;

    /// `(∂Λ/∂u, ∂Λ/∂v)`.
    fn gradient(
        &self,
        i: usize,
        j: usize,
        u: f64,
        v: f64,
        params: &FormParameters,
    ) -> Result<(f64, f64)>;

    /// Whether `Λ^{ij}` is singular where `u = v`.
    fn singular_at_coincidence(&self, _i: usize, _j: usize) -> bool {
        true
    }

    /// `(∂²Λ/∂u², ∂²Λ/∂u∂v, ∂²Λ/∂v²)`; central differences of the gradient
    /// unless a family overrides it.
    fn hessian(
        &self,
        i: usize,
        j: usize,
        u: f64,
        v: f64,
        params: &FormParameters,
    ) -> Result<[f64; 3]> {
        let hu = fd_step(u);
        let hv = fd_step(v);
        let (gu_p, _) = self.gradient(i, j, u + hu, v, params)?;
        let (gu_m, _) = self.gradient(i, j, u - hu, v, params)?;
        let (_, gv_p) = self.gradient(i, j, u, v + hv, params)?;
        let (_, gv_m) = self.gradient(i, j, u, v - hv, params)?;
        let (gu_vp, _) = self.gradient(i, j, u, v + hv, params)?;
        let (gu_vm, _) = self.gradient(i, j, u, v - hv, params)?;
        Ok([
            (gu_p - gu_m) / (2.0 * hu),
            (gu_vp - gu_vm) / (2.0 * hv),
            (gv_p - gv_m) / (2.0 * hv),
        ])
    }
}

/// Central-difference step `1e-6 · max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

fn log_leg(c: f64, u: f64, v: f64, i: usize, j: usize) -> Result<f64> {
    if u == v {
        return Err(Error::SingularEvaluation {
            what: format!("log|x_{i} - x_{j}| at coincident values {u}"),
        });
    }
    Ok(c * (u - v).abs().ln())
}

fn log_leg_gradient(c: f64, u: f64, v: f64, i: usize, j: usize) -> Result<(f64, f64)> {
    if u == v {
        return Err(Error::SingularEvaluation {
            what: format!("d log|x_{i} - x_{j}| at coincident values {u}"),
        });
    }
    let g = c / (u - v);
    Ok((g, -g))
}

fn log_leg_hessian(c: f64, u: f64, v: f64, i: usize, j: usize) -> Result<[f64; 3]> {
    if u == v {
        return Err(Error::SingularEvaluation {
            what: format!("d² log|x_{i} - x_{j}| at coincident values {u}"),
        });
    }
    let h = c / ((u - v) * (u - v));
    Ok([-h, h, -h])
}

/// `Λ^{ij} = (α^i − α^j) log|x_i − x_j|` on every pair of directions.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrossRatioLog;

impl OneFormFamily for CrossRatioLog {
    fn name(&self) -> &str {
        "cross_ratio_log"
    }

    fn value(&self, i: usize, j: usize, u: f64, v: f64, p: &FormParameters) -> Result<f64> {
        log_leg(p.get(i)? - p.get(j)?, u, v, i, j)
    }

    fn gradient(
        &self,
        i: usize,
        j: usize,
        u: f64,
        v: f64,
        p: &FormParameters,
    ) -> Result<(f64, f64)> {
        log_leg_gradient(p.get(i)? - p.get(j)?, u, v, i, j)
    }

    fn hessian(&self, i: usize, j: usize, u: f64, v: f64, p: &FormParameters) -> Result<[f64; 3]> {
        log_leg_hessian(p.get(i)? - p.get(j)?, u, v, i, j)
    }
}

/// The mixed form on Q(A_3): `Λ^{0m} = −x_0 x_m` for `m ∈ {1,2,3}` and the
/// logarithmic legs on every other pair (including auxiliary directions).
#[derive(Debug, Clone, Copy, Default)]
pub struct MixedQA3;

impl MixedQA3 {
    fn bilinear(i: usize, j: usize) -> bool {
        i == 0 && (1..=3).contains(&j)
    }
}

impl OneFormFamily for MixedQA3 {
    fn name(&self) -> &str {
        "mixed_q_a3"
    }

    fn singular_at_coincidence(&self, i: usize, j: usize) -> bool {
        !Self::bilinear(i, j)
    }

    fn value(&self, i: usize, j: usize, u: f64, v: f64, p: &FormParameters) -> Result<f64> {
        if Self::bilinear(i, j) {
            Ok(-u * v)
        } else {
            log_leg(p.get(i)? - p.get(j)?, u, v, i, j)
        }
    }

    fn gradient(
        &self,
        i: usize,
        j: usize,
        u: f64,
        v: f64,
        p: &FormParameters,
    ) -> Result<(f64, f64)> {
        if Self::bilinear(i, j) {
            Ok((-v, -u))
        } else {
            log_leg_gradient(p.get(i)? - p.get(j)?, u, v, i, j)
        }
    }

    fn hessian(&self, i: usize, j: usize, u: f64, v: f64, p: &FormParameters) -> Result<[f64; 3]> {
        if Self::bilinear(i, j) {
            Ok([0.0, -1.0, 0.0])
        } else {
            log_leg_hessian(p.get(i)? - p.get(j)?, u, v, i, j)
        }
    }
}

/// Negative control: `Λ^{ij} = x_i x_j` on all pairs, with the pair `(0, 1)`
/// perturbed by `ε (x_0 x_1)²`. Its corner system is not consistent.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedBilinear {
    pub epsilon: f64,
}

impl Default for PerturbedBilinear {
    fn default() -> Self {
        Self { epsilon: 0.5 }
    }
}

impl OneFormFamily for PerturbedBilinear {
    fn name(&self) -> &str {
        "perturbed_bilinear"
    }

    fn singular_at_coincidence(&self, _: usize, _: usize) -> bool {
        false
    }

    fn value(&self, i: usize, j: usize, u: f64, v: f64, _: &FormParameters) -> Result<f64> {
        let e = if (i, j) == (0, 1) { self.epsilon } else { 0.0 };
        Ok(u * v + e * u * u * v * v)
    }

    fn gradient(
        &self,
        i: usize,
        j: usize,
        u: f64,
        v: f64,
        _: &FormParameters,
    ) -> Result<(f64, f64)> {
        let e = if (i, j) == (0, 1) { self.epsilon } else { 0.0 };
        Ok((v + 2.0 * e * u * v * v, u + 2.0 * e * u * u * v))
    }

    fn hessian(&self, i: usize, j: usize, u: f64, v: f64, _: &FormParameters) -> Result<[f64; 3]> {
        let e = if (i, j) == (0, 1) { self.epsilon } else { 0.0 };
        Ok([2.0 * e * v * v, 1.0 + 4.0 * e * u * v, 2.0 * e * u * u])
    }
}

/// Built-in families by name.
pub fn family_by_name(name: &str) -> Result<Arc<dyn OneFormFamily>> {
    match name {
        "cross-ratio" | "cross_ratio" | "cross_ratio_log" => Ok(Arc::new(CrossRatioLog)),
        "mixed" | "mixed_q_a3" => Ok(Arc::new(MixedQA3)),
        "broken" | "perturbed_bilinear" => Ok(Arc::new(PerturbedBilinear::default())),
        other => Err(Error::UnknownName(format!("family {other:?}"))),
    }
}

/// One contribution `∂/∂x(center)` of a single edge 1-form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leg {
    pub edge: OrientedCell,
    pub contribution: f64,
}

/// Value of `∂ S / ∂ x(center)` with its per-leg breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gradient {
    pub value: f64,
    pub legs: Vec<Leg>,
}

/// A discrete 2-form on Q(A_N) of edge-sum type.
#[derive(Clone)]
pub struct TwoForm {
    pub family: Arc<dyn OneFormFamily>,
    pub params: FormParameters,
}

impl fmt::Debug for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoForm")
            .field("family", &self.family.name())
            .field("params", &self.params)
            .finish()
    }
}

fn edge_endpoints(edge: &OrientedCell) -> (LatticePoint, LatticePoint) {
    (
        edge.base.plus_units(&[edge.dirs[0]]),
        edge.base.plus_units(&[edge.dirs[1]]),
    )
}

impl TwoForm {
    pub fn new(family: Arc<dyn OneFormFamily>, params: FormParameters) -> Self {
        Self { family, params }
    }

    /// `sign · Λ^{ij}(x_i, x_j)` on an oriented edge.
    pub fn eval_one_form(&self, edge: &OrientedCell, field: &dyn FieldView) -> Result<f64> {
        if edge.kind != CellKind::Edge {
            return Err(Error::InvalidCell(format!("expected an edge, got {edge}")));
        }
        let (a, b) = edge_endpoints(edge);
        let v = self.family.value(
            edge.dirs[0],
            edge.dirs[1],
            field.value(&a)?,
            field.value(&b)?,
            &self.params,
        )?;
        Ok(f64::from(edge.sign) * v)
    }

    /// The 2-form on an oriented triangle: zero on white triangles.
    pub fn eval_two_form(&self, tri: &OrientedCell, field: &dyn FieldView) -> Result<f64> {
        match tri.kind {
            CellKind::WhiteTriangle => Ok(0.0),
            CellKind::BlackTriangle => {
                let mut total = 0.0;
                for (edge, c) in tri.facets()?.iter() {
                    total += c as f64 * self.eval_one_form(edge, field)?;
                }
                Ok(total)
            }
            _ => Err(Error::InvalidCell(format!(
                "expected a triangle, got {tri}"
            ))),
        }
    }

    /// `Σ_σ c_σ · 𝓛(σ)` over a chain of triangles.
    pub fn action(&self, chain: &CellChain, field: &dyn FieldView) -> Result<f64> {
        let mut total = 0.0;
        for (tri, c) in chain.iter() {
            total += c as f64 * self.eval_two_form(tri, field)?;
        }
        Ok(total)
    }

    /// `d𝓛` on a 3-cell: the action on its facets.
    pub fn exterior_derivative(&self, cell3: &OrientedCell, field: &dyn FieldView) -> Result<f64> {
        if cell3.dimension() != 3 || cell3.kind.is_cubic() {
            return Err(Error::InvalidCell(format!(
                "expected a Q(A_N) 3-cell, got {cell3}"
            )));
        }
        self.action(&cell3.facets()?, field)
    }

    /// Edge chain carried by the black triangles of `chain` (legs with merged
    /// coefficients; telescoping pairs cancel exactly).
    pub fn leg_chain(chain: &CellChain) -> Result<CellChain> {
        let mut legs = CellChain::new();
        for (tri, c) in chain.iter() {
            match tri.kind {
                CellKind::BlackTriangle => legs.add_chain(&tri.facets()?, c),
                CellKind::WhiteTriangle => {}
                _ => {
                    return Err(Error::InvalidCell(format!(
                        "expected a triangle, got {tri}"
                    )))
                }
            }
        }
        Ok(legs)
    }

    /// Analytic `∂/∂x(center)` of the action on `chain`.
    pub fn gradient(
        &self,
        chain: &CellChain,
        center: &LatticePoint,
        field: &dyn FieldView,
    ) -> Result<Gradient> {
        let mut value = 0.0;
        let mut legs = Vec::new();
        for (edge, c) in Self::leg_chain(chain)?.iter() {
            let (a, b) = edge_endpoints(edge);
            if &a != center && &b != center {
                continue;
            }
            let (gu, gv) = self.family.gradient(
                edge.dirs[0],
                edge.dirs[1],
                field.value(&a)?,
                field.value(&b)?,
                &self.params,
            )?;
            let g = if &a == center { gu } else { gv };
            let contribution = c as f64 * g;
            value += contribution;
            legs.push(Leg {
                edge: edge.with_sign(if c > 0 { 1 } else { -1 }),
                contribution,
            });
        }
        Ok(Gradient { value, legs })
    }

    /// Central-difference `∂/∂x(center)` of the action on `chain`.
    pub fn gradient_fd(
        &self,
        chain: &CellChain,
        center: &LatticePoint,
        field: &dyn FieldView,
    ) -> Result<f64> {
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
        Ok((self.action(chain, &plus)? - self.action(chain, &minus)?) / (2.0 * h))
    }

    /// Second derivatives `∂²S/∂x(center)∂x(w)` for every `w` joined to `center`.
    pub fn second_derivatives(
        &self,
        chain: &CellChain,
        center: &LatticePoint,
        field: &dyn FieldView,
    ) -> Result<BTreeMap<LatticePoint, f64>> {
        let mut out: BTreeMap<LatticePoint, f64> = BTreeMap::new();
        for (edge, c) in Self::leg_chain(chain)?.iter() {
            let (a, b) = edge_endpoints(edge);
            if &a != center && &b != center {
                continue;
            }
            let [huu, huv, hvv] = self.family.hessian(
                edge.dirs[0],
                edge.dirs[1],
                field.value(&a)?,
                field.value(&b)?,
                &self.params,
            )?;
            let c = c as f64;
            let (diag, other) = if &a == center { (huu, b) } else { (hvv, a) };
            *out.entry(center.clone()).or_insert(0.0) += c * diag;
            *out.entry(other).or_insert(0.0) += c * huv;
        }
        Ok(out)
    }
}

/// `𝔏 = (P_i)⋆𝓛` on Z^N.
#[derive(Debug, Clone)]
pub struct PushforwardForm {
    pub form: TwoForm,
    pub projection: Projection,
}

impl PushforwardForm {
    pub fn new(form: TwoForm, projection: Projection) -> Self {
        Self { form, projection }
    }

    /// `𝔏(quad) = 𝓛(T_i⌊ijk⌋) − 𝓛(⌈ijk⌉)` with the field pulled back through `P_i`.
    pub fn eval_quad(&self, quad: &OrientedCell, field: &dyn FieldView) -> Result<f64> {
        let chain = self.projection.quad_correspondence(quad)?;
        self.form.action(&chain, &self.pullback(field))
    }

    /// `d𝔏` on a cube: `Σ` of `𝔏` over its six signed facets.
    pub fn exterior_derivative(&self, cube: &OrientedCell, field: &dyn FieldView) -> Result<f64> {
        let mut total = 0.0;
        for (quad, c) in cube_facets(cube)?.iter() {
            total += c as f64 * self.eval_quad(quad, field)?;
        }
        Ok(total)
    }

    /// Q(A_N) triangle chain carrying `d𝔏` on the cube.
    pub fn preimage_chain(&self, cube: &OrientedCell) -> Result<CellChain> {
        self.projection.pull_back_chain(&cube_facets(cube)?)
    }

    pub fn pullback<'a>(&self, field: &'a dyn FieldView) -> Pullback<'a> {
        Pullback {
            field,
            projection: self.projection,
        }
    }
}

pub fn eval_one_form(form: &TwoForm, edge: &OrientedCell, field: &dyn FieldView) -> Result<f64> {
    form.eval_one_form(edge, field)
}

pub fn eval_two_form(form: &TwoForm, tri: &OrientedCell, field: &dyn FieldView) -> Result<f64> {
    form.eval_two_form(tri, field)
}

pub fn action(form: &TwoForm, chain: &CellChain, field: &dyn FieldView) -> Result<f64> {
    form.action(chain, field)
}

pub fn exterior_derivative(
    form: &TwoForm,
    cell3: &OrientedCell,
    field: &dyn FieldView,
) -> Result<f64> {
    form.exterior_derivative(cell3, field)
}

pub fn eval_pushforward(
    form: &PushforwardForm,
    quad: &OrientedCell,
    field: &dyn FieldView,
) -> Result<f64> {
    form.eval_quad(quad, field)
}
