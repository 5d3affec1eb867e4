//! Oriented 2-manifolds of triangles, flowers, and the decomposition of a
//! flower in Q(A_N) into 3D corners living in Q(A_{N+2}).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{FieldAssignment, TwoForm};
use crate::lattice_qan::{is_adjacent, CellChain, CellKind, LatticePoint, OrientedCell};
use crate::report::{run_indexed_trials, CheckReport};
use crate::sampling;
use crate::variational::{corner_residual, flower_el_residual, Method, MAX_ATTEMPTS};

/// One way a triangle chain fails to be an oriented 2-manifold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    NotATriangle {
        cell: String,
    },
    Coefficient {
        cell: String,
        coefficient: i64,
    },
    /// An edge lying in more than two triangles.
    EdgeOverused {
        edge: String,
        triangles: usize,
    },
    /// Two triangles induce the same orientation on a shared edge.
    SameOrientation {
        edge: String,
    },
}

/// A chain of triangles meant to be an oriented 2-manifold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoManifold {
    pub chain: CellChain,
    pub ambient_dim: usize,
}

impl TwoManifold {
    pub fn new(chain: CellChain) -> Result<Self> {
        let ambient_dim = chain
            .iter()
            .next()
            .map(|(c, _)| c.ambient_dim())
            .ok_or_else(|| Error::InvalidManifold("empty chain".into()))?;
        if let Some((c, _)) = chain.iter().find(|(c, _)| c.ambient_dim() != ambient_dim) {
            return Err(Error::DimensionMismatch(ambient_dim, c.ambient_dim()));
        }
        Ok(Self { chain, ambient_dim })
    }

    pub fn from_cells(cells: &[OrientedCell]) -> Result<Self> {
        let mut chain = CellChain::new();
        for c in cells {
            chain.add_cell(c, 1);
        }
        Self::new(chain)
    }

    /// Triangles as oriented cells (coefficient folded into the sign).
    pub fn triangles(&self) -> Vec<OrientedCell> {
        self.chain
            .iter()
            .map(|(c, k)| if k < 0 { c.negated() } else { c.clone() })
            .collect()
    }

    /// Unsigned edge -> orientations it receives from the triangles.
    fn edge_incidence(&self) -> BTreeMap<OrientedCell, Vec<i64>> {
        let mut out: BTreeMap<OrientedCell, Vec<i64>> = BTreeMap::new();
        for (tri, k) in self.chain.iter() {
            if let Ok(f) = tri.facets() {
                for (edge, e) in f.iter() {
                    out.entry(edge.clone()).or_default().push(e * k.signum());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (c, k) in self.chain.iter() {
            if !c.kind.is_triangle() {
                out.push(Violation::NotATriangle {
                    cell: c.to_string(),
                });
            } else if k.abs() != 1 {
                out.push(Violation::Coefficient {
                    cell: c.to_string(),
                    coefficient: k,
                });
            }
        }
        for (edge, signs) in self.edge_incidence() {
            if signs.len() > 2 {
                out.push(Violation::EdgeOverused {
                    edge: edge.to_string(),
                    triangles: signs.len(),
                });
            } else if signs.len() == 2 && signs[0] == signs[1] {
                out.push(Violation::SameOrientation {
                    edge: edge.to_string(),
                });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Vertices all of whose incident edges lie in exactly two triangles.
    pub fn interior_vertices(&self) -> BTreeSet<LatticePoint> {
        let incidence = self.edge_incidence();
        let mut boundary = BTreeSet::new();
        for (edge, signs) in &incidence {
            if signs.len() < 2 {
                boundary.extend(edge.vertices());
            }
        }
        self.chain
            .vertex_set()
            .into_iter()
            .filter(|v| !boundary.contains(v))
            .collect()
    }

    /// The flower of the manifold at `vertex`.
    pub fn flower_at(&self, vertex: &LatticePoint) -> Result<Flower> {
        if !self.interior_vertices().contains(vertex) {
            return Err(Error::NotInterior(vertex.clone()));
        }
        let chain = self.chain.filter(|c| c.has_vertex(vertex));
        Flower::new(TwoManifold::new(chain)?, vertex.clone())
    }
}

/// A 2-manifold with a single interior vertex, its center.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flower {
    pub manifold: TwoManifold,
    pub center: LatticePoint,
}

impl Flower {
    pub fn new(manifold: TwoManifold, center: LatticePoint) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidFlower(msg));
        let violations = manifold.validate();
        if !violations.is_empty() {
            return invalid(format!("not a 2-manifold: {violations:?}"));
        }
        if center.dim() != manifold.ambient_dim {
            return invalid(format!("center {center} outside the ambient lattice"));
        }
        let tris = manifold.triangles();
        if let Some(t) = tris.iter().find(|t| !t.has_vertex(&center)) {
            return invalid(format!("{t} does not contain the center {center}"));
        }
        let interior = manifold.interior_vertices();
        if interior.len() != 1 || !interior.contains(&center) {
            return invalid(format!(
                "interior vertices {interior:?}, expected only {center}"
            ));
        }
        let mut neighbours = vec![Vec::new(); tris.len()];
        for a in 0..tris.len() {
            for b in a + 1..tris.len() {
                if is_adjacent(&tris[a], &tris[b])? {
                    neighbours[a].push(b);
                    neighbours[b].push(a);
                }
            }
        }
        if let Some(a) = (0..tris.len()).find(|&a| neighbours[a].len() != 2) {
            return invalid(format!(
                "{} has {} adjacent triangles",
                tris[a],
                neighbours[a].len()
            ));
        }
        let mut seen = vec![false; tris.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(a) = queue.pop_front() {
            for &b in &neighbours[a] {
                if !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return invalid("triangles around the center are not edge-connected".into());
        }
        Ok(Self { manifold, center })
    }

    /// The flower without triangles; decomposes into no corners.
    pub fn empty(center: LatticePoint) -> Self {
        Self {
            manifold: TwoManifold {
                chain: CellChain::new(),
                ambient_dim: center.dim(),
            },
            center,
        }
    }

    /// The flower at `center` of a 3D corner.
    pub fn corner(cell3: &OrientedCell, center: &LatticePoint) -> Result<Self> {
        Self::new(TwoManifold::new(cell3.corner_at(center)?)?, center.clone())
    }

    pub fn chain(&self) -> &CellChain {
        &self.manifold.chain
    }

    pub fn ambient_dim(&self) -> usize {
        self.manifold.ambient_dim
    }

    /// Builds the fan `(center, n_t, n_{t+1})` over a closed cycle of
    /// neighbours, each given as `(a, b)` for `center + e_a - e_b`.
    pub fn from_link_cycle(center: &LatticePoint, cycle: &[(usize, usize)]) -> Result<Self> {
        let m = cycle.len();
        let mut cells = Vec::with_capacity(m);
        for t in 0..m {
            cells.push(fan_triangle(center, cycle[t], cycle[(t + 1) % m])?);
        }
        Self::new(TwoManifold::from_cells(&cells)?, center.clone())
    }

    /// Same flower with the ambient lattice padded to `dim` coordinates.
    pub fn extended(&self, dim: usize) -> Result<Self> {
        let chain = self.chain().map_cells(|c| c.extended(dim));
        Ok(Self {
            manifold: TwoManifold {
                chain,
                ambient_dim: dim,
            },
            center: self.center.extended(dim),
        })
    }
}

fn neighbour(center: &LatticePoint, (a, b): (usize, usize)) -> LatticePoint {
    center.shifted(a, 1).shifted(b, -1)
}

/// Triangle through `center`, `center + e_a - e_b` and the next neighbour,
/// oriented so that its boundary runs `center -> n -> next`.
fn fan_triangle(
    center: &LatticePoint,
    n: (usize, usize),
    next: (usize, usize),
) -> Result<OrientedCell> {
    let bad = || {
        Error::InvalidFlower(format!(
            "neighbours {n:?} and {next:?} of {center} span no triangle"
        ))
    };
    let (kind, base, dirs) = if n.1 == next.1 && n.0 != next.0 {
        (
            CellKind::BlackTriangle,
            center.shifted(n.1, -1),
            [n.1, n.0, next.0],
        )
    } else if n.0 == next.0 && n.1 != next.1 {
        (
            CellKind::WhiteTriangle,
            center.shifted(n.1, -1).shifted(next.1, -1),
            [n.0, n.1, next.1],
        )
    } else {
        return Err(bad());
    };
    let tri = OrientedCell::new(kind, base, &dirs, 1)?;
    let from = neighbour(center, n);
    let edge = tri
        .facets()?
        .iter()
        .find(|(e, _)| e.has_vertex(center) && e.has_vertex(&from))
        .map(|(e, k)| (e.clone(), k))
        .ok_or_else(bad)?;
    // An edge's boundary is `x_i - x_j`; the run center -> from leaves +1 on `from`.
    let along = CellChain::from_cell(&edge.0)
        .boundary()?
        .coefficient_of(&OrientedCell::vertex(from))
        * edge.1;
    Ok(if along > 0 { tri } else { tri.negated() })
}

/// One term of a decomposition: the 3D corner at `center` on `cell`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corner {
    pub cell: OrientedCell,
    pub center: LatticePoint,
    pub step: u8,
}

impl Corner {
    pub fn chain(&self) -> Result<CellChain> {
        self.cell.corner_at(&self.center)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    /// Ambient coordinate count of the corners (flower's plus two).
    pub ambient_dim: usize,
    pub corners: Vec<Corner>,
    /// Largest |coefficient| of the partial sum after each of the three steps.
    pub stage_max_coefficient: [i64; 3],
}

fn sum_corners(corners: &[Corner]) -> Result<CellChain> {
    let mut out = CellChain::new();
    for c in corners {
        out.add_chain(&c.chain()?, 1);
    }
    Ok(out)
}

/// Writes the flower as a sum of 3D corners in two more dimensions, with
/// auxiliary directions `M` and `L` appended after the existing ones.
pub fn decompose(flower: &Flower) -> Result<Decomposition> {
    let dim = flower.ambient_dim() + 2;
    let (m, l) = (dim - 2, dim - 1);
    let sigma = flower.extended(dim)?;
    let x = &sigma.center;
    let mut corners = Vec::new();
    for tri in sigma.manifold.triangles() {
        let (kind, step) = match tri.kind {
            CellKind::BlackTriangle => (CellKind::BlackTetrahedron, 1),
            CellKind::WhiteTriangle => (CellKind::Octahedron, 2),
            _ => return Err(Error::InvalidFlower(format!("{tri} is not a triangle"))),
        };
        let dirs = [tri.dirs.as_slice(), &[m]].concat();
        corners.push(Corner {
            cell: OrientedCell::new(kind, tri.base.clone(), &dirs, tri.sign)?,
            center: x.clone(),
            step,
        });
    }
    corners.sort_by_key(|c| c.step);
    if corners.is_empty() {
        return Ok(Decomposition {
            ambient_dim: dim,
            corners,
            stage_max_coefficient: [0; 3],
        });
    }
    let black_sum = sum_corners(&corners[..corners.iter().take_while(|c| c.step == 1).count()])?;
    let after_two = sum_corners(&corners)?;

    let mut residual = after_two.clone();
    residual.add_chain(sigma.chain(), -1);
    let aux_whites =
        residual.filter(|c| c.kind == CellKind::WhiteTriangle && c.dirs.last() == Some(&m));
    let mut other = residual.clone();
    other.add_chain(&aux_whites, -1);
    if !other.is_empty() {
        return Err(Error::InvalidFlower(format!(
            "residual after the first two steps holds more than auxiliary white triangles: {other}"
        )));
    }
    for (w, k) in aux_whites.iter() {
        let dirs = [w.dirs.as_slice(), &[l]].concat();
        let tet = OrientedCell::new(CellKind::WhiteTetrahedron, w.base.shifted(l, -1), &dirs, 1)?;
        let tet = if k > 0 { tet.negated() } else { tet };
        for _ in 0..k.abs() {
            corners.push(Corner {
                cell: tet.clone(),
                center: x.clone(),
                step: 3,
            });
        }
    }
    let total = sum_corners(&corners)?;
    Ok(Decomposition {
        ambient_dim: dim,
        corners,
        stage_max_coefficient: [
            black_sum.max_abs_coefficient(),
            after_two.max_abs_coefficient(),
            total.max_abs_coefficient(),
        ],
    })
}

/// Exact chain equality between the sum of the corners and the flower.
pub fn verify_decomposition(flower: &Flower, corners: &[Corner]) -> bool {
    let Some(dim) = corners.first().map(|c| c.cell.ambient_dim()) else {
        return flower.chain().is_empty();
    };
    let Ok(sum) = sum_corners(corners) else {
        return false;
    };
    flower.extended(dim).is_ok_and(|f| &sum == f.chain())
}

/// Neighbours `(a, b)` of a vertex in Q(A_N): `x + e_a - e_b`.
fn link_vertices(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

fn link_adjacent(p: (usize, usize), q: (usize, usize)) -> bool {
    (p.1 == q.1 && p.0 != q.0) || (p.0 == q.0 && p.1 != q.1)
}

/// Random simple cycle of the given length in the link graph of Q(A_N).
fn random_link_cycle(
    rng: &mut sampling::TrialRng,
    n: usize,
    len: usize,
) -> Option<Vec<(usize, usize)>> {
    let nodes = link_vertices(n);
    let mut budget = 20_000usize;
    let start = *nodes.choose(rng)?;
    let mut path = vec![start];
    let mut options: Vec<Vec<(usize, usize)>> = vec![shuffled_next(rng, &nodes, &path)];
    while let Some(opts) = options.last_mut() {
        budget = budget.checked_sub(1)?;
        if path.len() == len {
            if link_adjacent(*path.last()?, start) {
                return Some(path);
            }
            path.pop();
            options.pop();
            continue;
        }
        match opts.pop() {
            Some(next) => {
                path.push(next);
                let fresh = shuffled_next(rng, &nodes, &path);
                options.push(fresh);
            }
            None => {
                path.pop();
                options.pop();
            }
        }
    }
    None
}

fn shuffled_next(
    rng: &mut sampling::TrialRng,
    nodes: &[(usize, usize)],
    path: &[(usize, usize)],
) -> Vec<(usize, usize)> {
    let last = *path.last().expect("path is never empty here");
    let mut out: Vec<_> = nodes
        .iter()
        .copied()
        .filter(|&q| link_adjacent(last, q) && !path.contains(&q))
        .collect();
    out.shuffle(rng);
    out
}

/// Random flower of 8 to 12 triangles around a random center of Q(A_N).
pub fn random_flower(n: usize, seed: u64) -> Result<Flower> {
    let mut rng = sampling::rng(seed);
    for _ in 0..64 {
        let len = rng.random_range(8..=12);
        let center = LatticePoint::new((0..=n).map(|_| rng.random_range(-2..=2)).collect());
        if let Some(cycle) = random_link_cycle(&mut rng, n, len) {
            if let Ok(f) = Flower::from_link_cycle(&center, &cycle) {
                return Ok(f);
            }
        }
    }
    Err(Error::InvalidFlower(format!(
        "no random flower found in Q(A_{n}) for seed {seed}"
    )))
}

/// The six-triangle flower of a Q(A_2) plane.
pub fn planar_flower() -> Flower {
    let cycle = [(1, 0), (2, 0), (2, 1), (0, 1), (0, 2), (1, 2)];
    Flower::from_link_cycle(&LatticePoint::origin(3), &cycle)
        .expect("the planar hexagon is a flower")
}

/// Every 3D corner of every 3-cell (both orientations) on the given direction sets.
pub fn all_corners(dim: usize) -> Vec<(String, Flower)> {
    let mut out = Vec::new();
    let dirs_sets = combinations(dim, 4);
    for dirs in dirs_sets {
        for kind in [
            CellKind::BlackTetrahedron,
            CellKind::Octahedron,
            CellKind::WhiteTetrahedron,
        ] {
            for sign in [1, -1] {
                let cell = OrientedCell::new(kind, LatticePoint::origin(dim), &dirs, sign)
                    .expect("valid 3-cell");
                for v in cell.vertices() {
                    let f = Flower::corner(&cell, &v).expect("3D corners are flowers");
                    out.push((format!("corner {cell} at {v}"), f));
                }
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

pub const CORPUS_SEED: u64 = 0x5eed_f10e;
pub const RANDOM_FLOWERS: u64 = 50;

/// All 3D corners in Q(A_3) and Q(A_4), the planar flower, and
/// [`RANDOM_FLOWERS`] random flowers alternating between Q(A_3) and Q(A_4).
pub fn builtin_corpus() -> Vec<(String, Flower)> {
    let mut out = all_corners(4);
    out.extend(all_corners(5));
    out.push(("planar hexagon".into(), planar_flower()));
    for t in 0..RANDOM_FLOWERS {
        let n = 3 + (t as usize % 2);
        let seed = sampling::trial_seed(CORPUS_SEED, t);
        let f = random_flower(n, seed).expect("random flowers exist in Q(A_3) and Q(A_4)");
        out.push((format!("random Q(A_{n}) #{t}"), f));
    }
    out
}

/// JSON shape of a flower: center plus signed triangles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowerRecord {
    #[serde(default)]
    pub name: Option<String>,
    pub center: LatticePoint,
    pub triangles: Vec<OrientedCell>,
}

impl FlowerRecord {
    pub fn from_flower(name: Option<String>, f: &Flower) -> Self {
        Self {
            name,
            center: f.center.clone(),
            triangles: f.manifold.triangles(),
        }
    }

    pub fn into_flower(self) -> Result<Flower> {
        Flower::new(TwoManifold::from_cells(&self.triangles)?, self.center)
    }
}

/// Reads a JSON array of [`FlowerRecord`]s.
pub fn corpus_from_json(text: &str) -> Result<Vec<(String, Flower)>> {
    let records: Vec<FlowerRecord> =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let name = r.name.clone().unwrap_or_else(|| format!("flower #{i}"));
            Ok((name, r.into_flower()?))
        })
        .collect()
}

/// Decomposes every flower and checks exact chain equality; a trial's value
/// is 0 on success and 1 otherwise. Flowers whose partial sums leave
/// {-1, 0, 1} after some step are flagged in the trial note.
pub fn decomposition_check(corpus: &[(String, Flower)]) -> CheckReport {
    let mut trials = run_indexed_trials(0, corpus.len() as u64, 1, 0.0, |i, _| {
        let flower = &corpus[i as usize].1;
        let d = decompose(flower)?;
        Ok(if verify_decomposition(flower, &d.corners) {
            0.0
        } else {
            1.0
        })
    });
    for t in &mut trials {
        let (name, flower) = &corpus[t.index as usize];
        let stages = decompose(flower)
            .map(|d| d.stage_max_coefficient)
            .unwrap_or_default();
        t.note = Some(if stages.iter().any(|&c| c > 1) {
            format!("{name}; step coefficients {stages:?}")
        } else {
            name.clone()
        });
    }
    CheckReport::from_trials(
        "flower-decompose",
        format!("{} flowers", corpus.len()),
        0,
        0.0,
        trials,
    )
}

pub const EL_SUM_TOLERANCE: f64 = 1e-9;
pub const EXTENSIONS: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElSum {
    pub flower_residual: f64,
    /// Corner-residual sums, one per auxiliary extension.
    pub corner_sums: Vec<f64>,
    /// Largest |flower residual − corner sum| over the extensions.
    pub max_deviation: f64,
}

/// Compares the Euler–Lagrange residual of the flower at its center with the
/// summed corner residuals of its decomposition, once per auxiliary extension.
///
/// `field` must cover the flower's vertices; each extension gives every other
/// vertex a seeded hashed value and the auxiliary directions fresh parameters.
pub fn el_sum_check(
    form: &TwoForm,
    flower: &Flower,
    field: &FieldAssignment,
    seed: u64,
) -> Result<ElSum> {
    let d = decompose(flower)?;
    let dim = d.ambient_dim;
    let base_values: BTreeMap<LatticePoint, f64> =
        field.iter().map(|(p, v)| (p.extended(dim), v)).collect();
    let big = flower.extended(dim)?;
    let mut rng = sampling::rng(seed);
    let known: Vec<usize> = (0..dim - 2).collect();
    let params = sampling::sample_alphas(&mut rng, &known, &form.params);
    let mut lhs = None;
    let mut corner_sums = Vec::new();
    for e in 0..EXTENSIONS {
        let ext_seed = sampling::trial_seed(seed, e);
        let mut ext_rng = sampling::rng(ext_seed);
        let aux = sampling::sample_alphas(&mut ext_rng, &[dim - 2, dim - 1], &params);
        let f = TwoForm::new(form.family.clone(), aux);
        let ext = FieldAssignment::from_values(base_values.clone()).with_extension_seed(ext_seed);
        if lhs.is_none() {
            lhs = Some(flower_el_residual(
                &f,
                big.chain(),
                &big.center,
                &ext,
                Method::Analytic,
            )?);
        }
        let mut sum = 0.0;
        for c in &d.corners {
            sum += corner_residual(&f, &c.cell, &c.center, &ext, Method::Analytic)?.value;
        }
        corner_sums.push(sum);
    }
    let flower_residual = lhs.unwrap_or(0.0);
    let max_deviation = corner_sums
        .iter()
        .map(|s| (s - flower_residual).abs())
        .fold(0.0, f64::max);
    Ok(ElSum {
        flower_residual,
        corner_sums,
        max_deviation,
    })
}

/// [`el_sum_check`] over a corpus with random fields on each flower.
pub fn el_sum_batch(form: &TwoForm, corpus: &[(String, Flower)], seed: u64) -> CheckReport {
    let trials = run_indexed_trials(
        seed,
        corpus.len() as u64,
        MAX_ATTEMPTS,
        EL_SUM_TOLERANCE,
        |i, s| {
            let flower = &corpus[i as usize].1;
            let mut rng = sampling::rng(s);
            let verts: Vec<LatticePoint> = flower.chain().vertex_set().into_iter().collect();
            let field = sampling::sample_field(
                &mut rng,
                &verts,
                &sampling::all_pairs(&verts),
                sampling::FIELD_SEPARATION,
            );
            Ok(el_sum_check(form, flower, &field, s)?.max_deviation)
        },
    );
    CheckReport::from_trials("el-sum", form.family.name(), seed, EL_SUM_TOLERANCE, trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octahedron_facets_form_closed_manifold() {
        let octa =
            OrientedCell::positive(CellKind::Octahedron, LatticePoint::origin(4), &[0, 1, 2, 3]);
        let m = TwoManifold::new(octa.facets().unwrap()).unwrap();
        assert!(m.is_valid());
        assert_eq!(m.interior_vertices().len(), 6);
    }

    #[test]
    fn duplicated_triangle_is_a_violation() {
        let t =
            OrientedCell::positive(CellKind::BlackTriangle, LatticePoint::origin(3), &[0, 1, 2]);
        let mut chain = CellChain::new();
        chain.add_cell(&t, 2);
        let v = TwoManifold::new(chain).unwrap().validate();
        assert!(matches!(
            v[0],
            Violation::Coefficient { coefficient: 2, .. }
        ));
    }

    #[test]
    fn planar_flower_has_three_of_each_colour() {
        let f = planar_flower();
        let tris = f.manifold.triangles();
        assert_eq!(tris.len(), 6);
        assert_eq!(
            tris.iter()
                .filter(|t| t.kind == CellKind::BlackTriangle)
                .count(),
            3
        );
    }

    #[test]
    fn decomposes_planar_flower() {
        let f = planar_flower();
        let d = decompose(&f).unwrap();
        assert!(
            verify_decomposition(&f, &d.corners),
            "{:?}",
            d.stage_max_coefficient
        );
        assert_eq!(d.corners.iter().filter(|c| c.step == 1).count(), 3);
        assert_eq!(d.corners.iter().filter(|c| c.step == 2).count(), 3);
    }

    #[test]
    fn empty_flower_has_no_corners() {
        let f = Flower::empty(LatticePoint::origin(4));
        let d = decompose(&f).unwrap();
        assert!(d.corners.is_empty());
        assert!(verify_decomposition(&f, &d.corners));
    }

    #[test]
    fn black_corner_needs_only_first_step() {
        let tet = OrientedCell::positive(
            CellKind::BlackTetrahedron,
            LatticePoint::origin(4),
            &[0, 1, 2, 3],
        );
        let f = Flower::corner(&tet, &LatticePoint::new(vec![1, 0, 0, 0])).unwrap();
        let d = decompose(&f).unwrap();
        assert_eq!(d.corners.len(), 3);
        assert!(d.corners.iter().all(|c| c.step == 1));
        assert!(verify_decomposition(&f, &d.corners));
    }

    #[test]
    fn tampered_corner_lists_fail() {
        let f = planar_flower();
        let d = decompose(&f).unwrap();
        let mut fewer = d.corners.clone();
        fewer.pop();
        assert!(!verify_decomposition(&f, &fewer));
        let mut more = d.corners.clone();
        more.push(d.corners[0].clone());
        assert!(!verify_decomposition(&f, &more));
    }

    #[test]
    fn boundary_vertex_is_not_interior() {
        let f = planar_flower();
        let rim = LatticePoint::new(vec![1, -1, 0]);
        assert!(matches!(
            f.manifold.flower_at(&rim),
            Err(Error::NotInterior(_))
        ));
        assert_eq!(f.manifold.flower_at(&f.center).unwrap(), f);
    }

    #[test]
    fn disconnected_fans_are_rejected() {
        let x = LatticePoint::origin(5);
        let a =
            Flower::from_link_cycle(&x, &[(1, 0), (2, 0), (2, 1), (0, 1), (0, 2), (1, 2)]).unwrap();
        let b =
            Flower::from_link_cycle(&x, &[(3, 4), (2, 4), (2, 3), (4, 3), (4, 2), (3, 2)]).unwrap();
        let mut chain = a.chain().clone();
        chain.add_chain(b.chain(), 1);
        let m = TwoManifold::new(chain).unwrap();
        assert!(m.is_valid());
        assert!(matches!(Flower::new(m, x), Err(Error::InvalidFlower(_))));
    }

    #[test]
    fn random_flowers_decompose() {
        for t in 0..10 {
            let f = random_flower(3 + t % 2, t as u64).unwrap();
            let d = decompose(&f).unwrap();
            assert!(verify_decomposition(&f, &d.corners));
        }
    }
}
