//! Quantum double protocols: gauge transformations, vertex and flux
//! projectors, ground-state preparation, magnetic and electric pairs,
//! transport, braiding and fusion.
//!
//! Edge qudits hold group elements. A gauge transformation `T_g(v)`
//! left-multiplies outgoing star edges by `g` and right-multiplies incoming
//! ones by `g⁻¹`; the flux of a face is the ordered product of its edge values
//! along the counterclockwise cycle from the base point, with values
//! inverted where the edge points against the traversal.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, FiniteGroup, IrrepLabel, IDENTITY};
use crate::lattice::{Boundary, Direction, EdgeId, FaceId, Lattice, SiteRegistry, VertexId};
use crate::state::{Accumulator, Basis, Key, Layout, MeasurementOutcome, Mode, Projector, SiteOp, SparseState};

/// Tolerance for "this ancilla is back in |e⟩" checks.
pub const PURITY_TOL: f64 = 1e-10;
/// Largest state (in configurations) the projector oracle will build.
pub const ORACLE_LIMIT: usize = 5_000_000;

/// The lattice, group and site layout shared by every state of a model.
#[derive(Debug, Clone)]
pub struct QuantumDouble {
    group: Arc<FiniteGroup>,
    lattice: Arc<Lattice>,
    registry: Arc<SiteRegistry>,
    layout: Arc<Layout>,
}

impl QuantumDouble {
    pub fn new(group: FiniteGroup, lattice: Lattice) -> Result<Self> {
        Self::with_extras(group, lattice, &[])
    }

    /// Adds named extra ancillas after the vertex and face ancillas.
    pub fn with_extras(group: FiniteGroup, lattice: Lattice, extras: &[&str]) -> Result<Self> {
        let registry = SiteRegistry::new(&lattice, extras);
        let layout = Layout::uniform(registry.total_sites(), group.order())?;
        Ok(Self {
            group: Arc::new(group),
            lattice: Arc::new(lattice),
            registry: Arc::new(registry),
            layout: Arc::new(layout),
        })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn registry(&self) -> &SiteRegistry {
        &self.registry
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Every site in `|e⟩`.
    pub fn vacuum(&self) -> SparseState {
        SparseState::product(self.layout.clone(), &vec![IDENTITY; self.layout.len()]).expect("identity fits every site")
    }

    #[inline]
    pub fn edge_value(&self, key: Key, e: EdgeId) -> Element {
        self.layout.get(key, e)
    }

    /// Ordered product along a cycle, inverting where the sign is negative.
    pub fn cycle_product(&self, key: Key, cycle: &[(EdgeId, i8)]) -> Element {
        let g = &self.group;
        cycle.iter().fold(IDENTITY, |acc, &(e, s)| {
            let x = self.layout.get(key, e);
            g.op(acc, if s > 0 { x } else { g.inverse(x) })
        })
    }

    /// Flux of face `f` from its base point.
    pub fn flux(&self, key: Key, f: FaceId) -> Result<Element> {
        Ok(self.cycle_product(key, self.lattice.face_cycle(f)?))
    }

    /// Flux of face `f` based at corner `v`.
    pub fn flux_at(&self, key: Key, v: VertexId, f: FaceId) -> Result<Element> {
        Ok(self.cycle_product(key, &self.lattice.cycle_from(f, v)?))
    }

    /// Ordered holonomy along a vertex path.
    pub fn holonomy(&self, key: Key, path: &[VertexId]) -> Result<Element> {
        let cycle = self.path_cycle(path)?;
        Ok(self.cycle_product(key, &cycle))
    }

    fn path_cycle(&self, path: &[VertexId]) -> Result<Vec<(EdgeId, i8)>> {
        let edges = self.lattice.path_edges(path)?;
        Ok(edges
            .iter()
            .zip(path)
            .map(|(&e, &v)| (e, if self.lattice.edges()[e].src == v { 1 } else { -1 }))
            .collect())
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        let vert = self.lattice.vertices().get(v).ok_or(Error::OutOfRange {
            what: "vertex",
            index: v,
            limit: self.lattice.num_vertices(),
        })?;
        if vert.terminal {
            return Err(Error::Validation(format!(
                "{} is a boundary terminal without a vertex operator",
                self.lattice.vertex_label(v)
            )));
        }
        Ok(())
    }

    /// `T_g(v)` applied to a single configuration.
    pub fn gauge_key(&self, key: Key, v: VertexId, g: Element) -> Key {
        let grp = &self.group;
        let ginv = grp.inverse(g);
        let mut k = key;
        for &(e, dir) in self.lattice.vertex_star(v).expect("checked vertex") {
            let x = self.layout.get(k, e);
            let y = match dir {
                Direction::Outgoing => grp.op(g, x),
                Direction::Incoming => grp.op(x, ginv),
            };
            k = self.layout.set(k, e, y);
        }
        k
    }

    /// `T_g(v)` as site operations on the star.
    pub fn gauge_ops(&self, v: VertexId, g: Element) -> Result<Vec<SiteOp>> {
        let grp = &self.group;
        Ok(self
            .lattice
            .vertex_star(v)?
            .iter()
            .map(|&(e, dir)| match dir {
                Direction::Outgoing => SiteOp::left_mul(e, grp, g),
                Direction::Incoming => SiteOp::right_mul(e, grp, grp.inverse(g)),
            })
            .collect())
    }

    pub fn gauge_transform(&self, state: &mut SparseState, v: VertexId, g: Element) -> Result<()> {
        self.check_vertex(v)?;
        crate::error::check_index("element", g, self.group.order())?;
        state.map_keys(|k| self.gauge_key(k, v, g))
    }

    pub fn vertex_projector_expectation(&self, state: &SparseState, v: VertexId) -> Result<f64> {
        self.check_vertex(v)?;
        let maps: Vec<Box<dyn Fn(Key) -> Key + '_>> = (0..self.group.order())
            .map(|g| Box::new(move |k| self.gauge_key(k, v, g)) as Box<dyn Fn(Key) -> Key>)
            .collect();
        Ok(state.expectation(&Projector::Average(maps)))
    }

    /// Probability that face `f` carries flux `l` (from its base point).
    pub fn flux_probability(&self, state: &SparseState, f: FaceId, l: Element) -> Result<f64> {
        let cycle = self.lattice.face_cycle(f)?.to_vec();
        Ok(state.expectation(&Projector::Diagonal(Box::new(move |k| {
            self.cycle_product(k, &cycle) == l
        }))))
    }

    /// `⟨B(f)⟩`, the probability of trivial flux.
    pub fn face_projector_expectation(&self, state: &SparseState, f: FaceId) -> Result<f64> {
        self.flux_probability(state, f, IDENTITY)
    }

    /// Probability of each conjugacy class of flux at `f`, keyed by class index.
    pub fn flux_class_distribution(&self, state: &SparseState, f: FaceId) -> Result<Vec<f64>> {
        let cycle = self.lattice.face_cycle(f)?;
        let mut acc = vec![Accumulator::default(); self.group.classes().len()];
        for &(k, a) in state.entries() {
            acc[self.group.class_index(self.cycle_product(k, cycle))].add(a.norm_sqr());
        }
        Ok(acc.iter().map(Accumulator::value).collect())
    }

    /// Applies the projector `A(v)` by explicit group averaging; returns `⟨A(v)⟩`.
    pub fn apply_vertex_projector(&self, state: &mut SparseState, v: VertexId) -> Result<f64> {
        self.check_vertex(v)?;
        let scale = 1.0 / self.group.order() as f64;
        let mut amps = Vec::with_capacity(state.len() * self.group.order());
        for g in 0..self.group.order() {
            for &(k, a) in state.entries() {
                amps.push((self.gauge_key(k, v, g), a * scale));
            }
        }
        let eps = state.prune_epsilon();
        let mut out = SparseState::from_amplitudes(self.layout.clone(), amps);
        out.set_prune_epsilon(eps);
        let survival = out.apply_linear(&[])?;
        *state = out;
        Ok(survival)
    }

    /// `Π_v A(v)|e…e⟩`, normalized, by direct projection.
    pub fn ground_state_oracle(&self) -> Result<SparseState> {
        let stab = self.lattice.stabilizer_vertices();
        let bound = (self.group.order() as f64).powi(stab.len() as i32);
        if bound > ORACLE_LIMIT as f64 * self.group.order() as f64 {
            return Err(Error::ResourceGuard(format!(
                "projector oracle would hold up to {bound:.0} configurations"
            )));
        }
        let mut s = self.vacuum();
        for v in stab {
            self.apply_vertex_projector(&mut s, v)?;
            if s.len() > ORACLE_LIMIT {
                return Err(Error::ResourceGuard(format!(
                    "projector oracle exceeded {ORACLE_LIMIT} configurations"
                )));
            }
        }
        Ok(s)
    }

    /// Fails unless `site` is in `|e⟩` up to `PURITY_TOL`.
    pub fn require_identity(&self, state: &SparseState, site: usize, what: &str) -> Result<()> {
        let p = state.site_distribution(site)?[IDENTITY];
        if (1.0 - p).abs() > PURITY_TOL {
            return Err(Error::AncillaNotReady {
                site,
                reason: format!("{what} holds |e⟩ with probability {p:.12}"),
            });
        }
        Ok(())
    }

    /// Λ(v,f): left-multiplies the ancilla by the flux of `f` based at `v`.
    pub fn flux_to_ancilla(
        &self,
        state: &mut SparseState,
        v: VertexId,
        f: FaceId,
        ancilla: usize,
        inverse: bool,
    ) -> Result<()> {
        let cycle = self.rebased_cycle(f, v)?;
        let g = &self.group;
        state.map_keys(|k| {
            let phi = self.cycle_product(k, &cycle);
            let m = if inverse { g.inverse(phi) } else { phi };
            self.layout.set(k, ancilla, g.op(m, self.layout.get(k, ancilla)))
        })
    }

    fn rebased_cycle(&self, f: FaceId, v: VertexId) -> Result<Vec<(EdgeId, i8)>> {
        let face = &self.lattice.faces()[f];
        if face.base == v {
            Ok(face.cycle.clone())
        } else {
            self.lattice.cycle_from(f, v)
        }
    }

    /// Sign of edge `e` in the cycle of face `f`.
    fn edge_sign(&self, f: FaceId, e: EdgeId) -> Result<i8> {
        self.lattice
            .face_cycle(f)?
            .iter()
            .find(|&&(x, _)| x == e)
            .map(|&(_, s)| s)
            .ok_or_else(|| Error::Protocol(format!("edge not on {}", self.lattice.face_label(f))))
    }

    /// Corner of `f` where the shared edge begins in `f`'s traversal.
    fn shared_base(&self, f: FaceId, shared: EdgeId) -> Result<(VertexId, i8)> {
        let o = self.edge_sign(f, shared)?;
        let edge = self.lattice.edges()[shared];
        Ok((if o > 0 { edge.src } else { edge.dst }, o))
    }

    /// The shared-edge operation that moves the flux `phi` of `f` (based at
    /// the start of the shared edge) across that edge.
    fn flux_move_op(&self, shared: EdgeId, o: i8, phi: Element) -> SiteOp {
        if o > 0 {
            SiteOp::left_mul(shared, &self.group, self.group.inverse(phi))
        } else {
            SiteOp::right_mul(shared, &self.group, phi)
        }
    }

    /// K(v,e): right-multiplies the ancilla by the edge value (or its inverse
    /// when the edge points into `v`).
    pub fn conditional_rotation_k(
        &self,
        state: &mut SparseState,
        v: VertexId,
        e: EdgeId,
        ancilla: usize,
        inverse: bool,
    ) -> Result<()> {
        crate::error::check_index("edge", e, self.lattice.num_edges())?;
        let edge = self.lattice.edges()[e];
        let forward = if edge.src == v {
            true
        } else if edge.dst == v {
            false
        } else {
            return Err(Error::NotIncident {
                vertex: self.lattice.vertex_label(v),
                edge: self.lattice.edge_label(e),
            });
        };
        let g = &self.group;
        state.apply_group_controlled(e, |x| {
            let m = if forward != inverse { x } else { g.inverse(x) };
            vec![SiteOp::right_mul(ancilla, g, m)]
        })
    }

    /// Class Fourier basis `|k_[ℓ]⟩`, completed with computational vectors.
    pub fn class_basis(&self, rep: Element) -> Result<(Basis, Vec<Element>)> {
        let class = self.group.conjugacy_class(rep)?;
        let d = self.group.order();
        let n = class.len();
        let norm = 1.0 / (n as f64).sqrt();
        let vectors = (0..n)
            .map(|k| {
                let mut v = vec![Complex64::new(0.0, 0.0); d];
                for (t, &c) in class.iter().enumerate() {
                    v[c] = Complex64::from_polar(norm, 2.0 * PI * (k * t) as f64 / n as f64);
                }
                v
            })
            .collect();
        Ok((Basis::completed(vectors, d)?, class))
    }

    /// Character states `∝ Σ_g conj χ_R(g)|g⟩`, in irrep order, completed.
    pub fn character_basis(&self) -> Result<(Basis, Vec<IrrepLabel>)> {
        let d = self.group.order();
        let norm = 1.0 / (d as f64).sqrt();
        let mut labels = Vec::new();
        let mut vectors = Vec::new();
        for irrep in self.group.irreps() {
            labels.push(irrep.label);
            vectors.push((0..d).map(|g| irrep.character(g).conj() * norm).collect());
        }
        Ok((Basis::completed(vectors, d)?, labels))
    }

    /// `⟨A(v)⟩` and `⟨B(f)⟩` for every stabilizer.
    pub fn stabilizer_table(&self, state: &SparseState) -> Result<StabilizerTable> {
        let mut vertices = BTreeMap::new();
        for v in self.lattice.stabilizer_vertices() {
            vertices.insert(
                self.lattice.vertex_label(v),
                self.vertex_projector_expectation(state, v)?,
            );
        }
        let mut faces = BTreeMap::new();
        for f in 0..self.lattice.num_faces() {
            faces.insert(self.lattice.face_label(f), self.face_projector_expectation(state, f)?);
        }
        Ok(StabilizerTable { vertices, faces })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizerTable {
    pub vertices: BTreeMap<String, f64>,
    pub faces: BTreeMap<String, f64>,
}

impl StabilizerTable {
    /// Largest deviation of any entry from 1.
    pub fn max_deviation(&self) -> f64 {
        self.vertices
            .values()
            .chain(self.faces.values())
            .fold(0.0, |m, &x| m.max((1.0 - x).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionPolicy {
    PaperCorrection,
    Postselect,
}

impl FromStr for CorrectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-correction" => Ok(Self::PaperCorrection),
            "postselect" => Ok(Self::Postselect),
            _ => Err(Error::Validation(format!("unknown correction policy {s:?}"))),
        }
    }
}

impl fmt::Display for CorrectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PaperCorrection => "paper-correction",
            Self::Postselect => "postselect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnyonRecord {
    Magnetic {
        class: String,
        representative: Element,
        faces: (FaceId, FaceId),
    },
    Electric {
        irrep: IrrepLabel,
        path: Vec<VertexId>,
    },
}

/// Probabilities of fusion channels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionDistribution {
    pub channels: BTreeMap<String, f64>,
}

impl FusionDistribution {
    pub fn new(channels: BTreeMap<String, f64>) -> Result<Self> {
        let total: f64 = channels.values().sum();
        if (total - 1.0).abs() > 1e-10 || channels.values().any(|&p| !(-1e-12..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::Protocol(format!("fusion probabilities sum to {total}")));
        }
        Ok(Self { channels })
    }

    pub fn probability(&self, channel: &str) -> f64 {
        self.channels.get(channel).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub op: String,
    pub sites: Vec<String>,
    pub params: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

impl LogEntry {
    pub fn new(op: &str) -> Self {
        Self {
            op: op.to_string(),
            sites: Vec::new(),
            params: BTreeMap::new(),
            outcome: None,
            probability: None,
        }
    }

    pub fn site(mut self, s: impl Into<String>) -> Self {
        self.sites.push(s.into());
        self
    }

    pub fn param(mut self, k: &str, v: impl ToString) -> Self {
        self.params.insert(k.to_string(), v.to_string());
        self
    }

    pub fn outcome(mut self, m: &MeasurementOutcome) -> Self {
        self.outcome = Some(m.outcome);
        self.probability = Some(m.probability);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferenceResult {
    pub p_plus: f64,
    pub p_minus: f64,
}

impl InterferenceResult {
    pub fn contrast(&self) -> f64 {
        self.p_plus - self.p_minus
    }
}

/// A quantum double state together with its measurement mode, protocol
/// log and anyon bookkeeping.
#[derive(Debug, Clone)]
pub struct Session {
    pub qd: QuantumDouble,
    pub state: SparseState,
    pub mode: Mode,
    pub log: Vec<LogEntry>,
    pub anyons: Vec<AnyonRecord>,
}

impl Session {
    pub fn new(qd: QuantumDouble, mode: Mode) -> Self {
        let state = qd.vacuum();
        Self {
            qd,
            state,
            mode,
            log: Vec::new(),
            anyons: Vec::new(),
        }
    }

    pub fn set_prune_epsilon(&mut self, eps: f64) {
        self.state.set_prune_epsilon(eps);
    }

    fn vlabel(&self, v: VertexId) -> String {
        self.qd.lattice().vertex_label(v)
    }

    fn flabel(&self, f: FaceId) -> String {
        self.qd.lattice().face_label(f)
    }

    pub fn gauge_transform(&mut self, v: VertexId, g: Element) -> Result<()> {
        self.qd.gauge_transform(&mut self.state, v, g)?;
        let name = self.qd.group().element_name(g).to_string();
        self.log
            .push(LogEntry::new("gauge").site(self.vlabel(v)).param("g", name));
        Ok(())
    }

    /// Alias of the gauge transformation, logged as a braiding event.
    pub fn braid_flux_around_vertex(&mut self, h: Element, v: VertexId) -> Result<()> {
        self.qd.gauge_transform(&mut self.state, v, h)?;
        let name = self.qd.group().element_name(h).to_string();
        self.log
            .push(LogEntry::new("braid").site(self.vlabel(v)).param("h", name));
        Ok(())
    }

    /// Ancilla-mediated measurement of `A(v)` in the Fourier basis. Outcome 0
    /// projects onto `A(v)`. The ancilla is returned to `|e⟩`.
    pub fn measure_vertex(&mut self, v: VertexId) -> Result<MeasurementOutcome> {
        let out = self.measure_vertex_with(v, None)?;
        self.log
            .push(LogEntry::new("measure-vertex").site(self.vlabel(v)).outcome(&out));
        Ok(out)
    }

    fn measure_vertex_with(&mut self, v: VertexId, force: Option<usize>) -> Result<MeasurementOutcome> {
        self.qd.check_vertex(v)?;
        let anc = self.qd.registry().vertex_ancilla(v)?;
        self.qd.require_identity(&self.state, anc, "vertex ancilla")?;
        let d = self.qd.group().order();
        let dft = DMatrix::from_fn(d, d, |i, j| {
            Complex64::from_polar(1.0 / (d as f64).sqrt(), 2.0 * PI * (i * j) as f64 / d as f64)
        });
        self.state.apply_site_unitary(anc, &dft)?;
        let ops: Vec<Vec<SiteOp>> = (0..d).map(|h| self.qd.gauge_ops(v, h)).collect::<Result<_>>()?;
        self.state.apply_group_controlled(anc, |h| ops[h].clone())?;
        let basis = Basis::fourier(d);
        let out = match force {
            Some(k) => {
                let (p, s) = self.state.measure_branch(anc, &basis, k)?;
                self.state = s;
                MeasurementOutcome {
                    outcome: k,
                    probability: p,
                }
            }
            None => self.state.measure(anc, &basis, &mut self.mode)?,
        };
        self.state.reset_site(anc, IDENTITY)?;
        Ok(out)
    }

    /// Vertex order and correction edges used by ground-state preparation.
    pub fn preparation_schedule(&self) -> Result<Vec<(VertexId, Option<EdgeId>)>> {
        let lat = self.qd.lattice();
        let (n, m) = (lat.n_rows() as i32, lat.n_cols() as i32);
        let mut out = Vec::new();
        for j in 0..m {
            for i in 0..n {
                let v = lat.vertex(i, j)?;
                let last_col = j == m - 1;
                let correction = match lat.boundary() {
                    Boundary::RoughSmooth => Some(lat.horizontal(i, j)?),
                    Boundary::Open if !last_col => Some(lat.horizontal(i, j)?),
                    Boundary::Open if i < n - 1 => Some(lat.vertical(i, j)?),
                    // dependent on all the others
                    Boundary::Open => None,
                };
                if let Some(e) = correction {
                    out.push((v, Some(e)));
                }
            }
        }
        Ok(out)
    }

    /// Prepares the ground state from the all-`|e⟩` register by measuring
    /// every independent vertex column by column.
    pub fn prepare_ground_state(&mut self, policy: CorrectionPolicy) -> Result<()> {
        for (v, corr) in self.preparation_schedule()? {
            let out = match policy {
                CorrectionPolicy::Postselect => self.measure_vertex_with(v, Some(0))?,
                CorrectionPolicy::PaperCorrection => self.measure_vertex_with(v, None)?,
            };
            let mut entry = LogEntry::new("prepare-vertex")
                .site(self.vlabel(v))
                .param("policy", policy)
                .outcome(&out);
            if out.outcome != 0 {
                let e = corr.expect("scheduled vertices carry a correction edge");
                let d = self.qd.group().order();
                let r = out.outcome;
                let diag = (0..d)
                    .map(|g| Complex64::from_polar(1.0, 2.0 * PI * (r * g % d) as f64 / d as f64))
                    .collect();
                self.state.apply_op(&SiteOp::Diagonal { site: e, diag })?;
                entry = entry.param("correction", format!("Z^{r} {}", self.qd.lattice().edge_label(e)));
                let a = self.qd.vertex_projector_expectation(&self.state, v)?;
                if (1.0 - a).abs() > 1e-10 {
                    return Err(Error::Protocol(format!(
                        "correction after outcome {r} at {} left <A(v)> = {a}",
                        self.vlabel(v)
                    )));
                }
            }
            self.log.push(entry);
        }
        Ok(())
    }

    /// Creates a magnetic vacuum pair of class `[rep]` on adjacent faces,
    /// driven by the face ancilla of `f1`.
    pub fn create_magnetic_vacuum_pair(&mut self, rep: Element, f1: FaceId, f2: FaceId) -> Result<MeasurementOutcome> {
        let g = self.qd.group().clone();
        crate::error::check_index("element", rep, g.order())?;
        if rep == IDENTITY {
            return Err(Error::Validation("identity class creates no magnetic pair".into()));
        }
        let shared = self.qd.lattice().shared_edge(f1, f2)?;
        let anc = self.qd.registry().face_ancilla(f1)?;
        self.qd.require_identity(&self.state, anc, "face ancilla")?;
        let (basis, class) = self.qd.class_basis(rep)?;
        let mut s = self.state.clone();
        let zero_class = basis.vectors()[0].clone();
        // |e⟩ → |0_[ℓ]⟩: any unitary with that first column
        let prep = unitary_with_first_column(&zero_class, IDENTITY)?;
        s.apply_site_unitary(anc, &prep)?;
        s.apply_group_controlled(anc, |c| vec![SiteOp::right_mul(shared, &g, c)])?;
        let out = s.measure(anc, &basis, &mut self.mode)?;
        s.reset_site(anc, IDENTITY)?;
        if out.outcome != 0 {
            self.correct_magnetic_pair(&mut s, out.outcome, &class, shared, f2, anc)?;
        }
        self.state = s;
        self.anyons.push(AnyonRecord::Magnetic {
            class: class_name(&g, &class),
            representative: rep,
            faces: (f1, f2),
        });
        self.log.push(
            LogEntry::new("magnetic-pair")
                .site(self.flabel(f1))
                .site(self.flabel(f2))
                .param("class", class_name(&g, &class))
                .outcome(&out),
        );
        Ok(out)
    }

    /// Removes the `ω^{-k t}` phases left by class-basis outcome `k`.
    fn correct_magnetic_pair(
        &self,
        s: &mut SparseState,
        k: usize,
        class: &[Element],
        shared: EdgeId,
        f2: FaceId,
        anc: usize,
    ) -> Result<()> {
        let g = self.qd.group();
        let (v, o) = self.qd.shared_base(f2, shared)?;
        self.qd.flux_to_ancilla(s, v, f2, anc, false)?;
        let layout = self.qd.layout().clone();
        let n = class.len();
        let phase = |key: Key| {
            let phi = layout.get(key, anc);
            let x = layout.get(key, shared);
            // recover the class element multiplied onto the shared edge
            let c = if o > 0 {
                g.op(g.op(g.inverse(x), phi), x)
            } else {
                g.inverse(phi)
            };
            match class.iter().position(|&y| y == c) {
                Some(t) => Complex64::from_polar(1.0, 2.0 * PI * (k * t % n) as f64 / n as f64),
                None => Complex64::new(1.0, 0.0),
            }
        };
        s.apply_diagonal(phase);
        self.qd.flux_to_ancilla(s, v, f2, anc, true)?;
        self.qd.require_identity(s, anc, "face ancilla after correction")
    }

    /// Moves the flux of `f` onto the adjacent face `f2` and disentangles
    /// both face ancillas.
    pub fn transport_magnetic(&mut self, f: FaceId, f2: FaceId) -> Result<()> {
        let shared = self.qd.lattice().shared_edge(f, f2)?;
        let (v, o) = self.qd.shared_base(f, shared)?;
        let a1 = self.qd.registry().face_ancilla(f)?;
        let a2 = self.qd.registry().face_ancilla(f2)?;
        self.qd.require_identity(&self.state, a1, "face ancilla")?;
        self.qd.require_identity(&self.state, a2, "face ancilla")?;
        let g = self.qd.group().clone();
        let mut s = self.state.clone();
        self.qd.flux_to_ancilla(&mut s, v, f, a1, false)?;
        s.apply_group_controlled(a1, |phi| vec![self.qd.flux_move_op(shared, o, phi)])?;
        self.qd.flux_to_ancilla(&mut s, v, f2, a2, false)?;
        s.apply_group_controlled(a2, |x| vec![SiteOp::left_mul(a1, &g, g.inverse(x))])?;
        self.qd.flux_to_ancilla(&mut s, v, f2, a2, true)?;
        self.qd
            .require_identity(&s, a1, "source face ancilla after transport")?;
        self.qd
            .require_identity(&s, a2, "target face ancilla after transport")?;
        self.state = s;
        for rec in self.anyons.iter_mut() {
            if let AnyonRecord::Magnetic { faces, .. } = rec {
                if faces.0 == f {
                    faces.0 = f2;
                } else if faces.1 == f {
                    faces.1 = f2;
                }
            }
        }
        self.log
            .push(LogEntry::new("transport").site(self.flabel(f)).site(self.flabel(f2)));
        Ok(())
    }

    /// Fuses the magnetic charges on adjacent faces and measures the face
    /// ancilla of `f` in the class basis of `[rep]`; outcome `0_[ℓ]` is vacuum.
    pub fn fuse_magnetic(&mut self, f: FaceId, f2: FaceId, rep: Element) -> Result<FusionDistribution> {
        let shared = self.qd.lattice().shared_edge(f, f2)?;
        let (v, o) = self.qd.shared_base(f, shared)?;
        let anc = self.qd.registry().face_ancilla(f)?;
        self.qd.require_identity(&self.state, anc, "face ancilla")?;
        let (basis, class) = self.qd.class_basis(rep)?;
        let mut s = self.state.clone();
        self.qd.flux_to_ancilla(&mut s, v, f, anc, false)?;
        s.apply_group_controlled(anc, |phi| vec![self.qd.flux_move_op(shared, o, phi)])?;
        let probs = s.outcome_probabilities(anc, &basis)?;
        let out = s.measure(anc, &basis, &mut self.mode)?;
        // the ancilla keeps the flux label when the pair was not a vacuum pair
        if s.site_pure_state(anc)?.is_some() {
            s.reset_site(anc, IDENTITY)?;
        }
        self.state = s;
        self.anyons.retain(|r| {
            !matches!(r, AnyonRecord::Magnetic { faces, .. }
                if (faces.0 == f && faces.1 == f2) || (faces.0 == f2 && faces.1 == f))
        });
        let mut channels = BTreeMap::new();
        channels.insert("vacuum".to_string(), probs[0]);
        channels.insert("non-vacuum".to_string(), probs[1..].iter().sum::<f64>());
        self.log.push(
            LogEntry::new("fuse-magnetic")
                .site(self.flabel(f))
                .site(self.flabel(f2))
                .param("class", class_name(self.qd.group(), &class))
                .outcome(&out),
        );
        FusionDistribution::new(channels)
    }

    /// Walks the vertex ancilla along `path` applying K on each edge, leaving
    /// it at the last vertex; returns the ancilla sites visited.
    fn k_chain(&self, s: &mut SparseState, path: &[VertexId]) -> Result<Vec<usize>> {
        if path.len() < 2 {
            return Err(Error::Validation("electric path needs two vertices".into()));
        }
        let edges = self.qd.lattice().path_edges(path)?;
        let ancillas: Vec<usize> = path
            .iter()
            .map(|&v| self.qd.registry().vertex_ancilla(v))
            .collect::<Result<_>>()?;
        for (i, &e) in edges.iter().enumerate() {
            self.qd.conditional_rotation_k(s, path[i], e, ancillas[i], false)?;
            s.swap_sites(ancillas[i], ancillas[i + 1])?;
        }
        Ok(ancillas)
    }

    fn k_chain_inverse(&self, s: &mut SparseState, path: &[VertexId], ancillas: &[usize]) -> Result<()> {
        let edges = self.qd.lattice().path_edges(path)?;
        for (i, &e) in edges.iter().enumerate().rev() {
            s.swap_sites(ancillas[i], ancillas[i + 1])?;
            self.qd.conditional_rotation_k(s, path[i], e, ancillas[i], true)?;
        }
        Ok(())
    }

    /// Applies `χ_R(holonomy of path)` through the vertex ancilla and returns
    /// the post-selection weight.
    pub fn create_electric_vacuum_pair(&mut self, irrep: IrrepLabel, path: &[VertexId]) -> Result<f64> {
        let survival = self.apply_character_string(irrep, path)?;
        self.anyons.push(AnyonRecord::Electric {
            irrep,
            path: path.to_vec(),
        });
        let mut entry = LogEntry::new("electric-pair").param("irrep", irrep);
        for &v in path {
            entry = entry.site(self.vlabel(v));
        }
        entry.probability = Some(survival);
        self.log.push(entry);
        Ok(survival)
    }

    /// Carries an electric charge of type `irrep` around the closed vertex
    /// loop `path`, which starts and ends at the same vertex.
    pub fn braid_electric(&mut self, irrep: IrrepLabel, path: &[VertexId]) -> Result<f64> {
        if path.len() < 3 || path[0] != path[path.len() - 1] {
            return Err(Error::Validation("braiding path must be a closed loop".into()));
        }
        let survival = self.apply_character_string(irrep, path)?;
        let mut entry = LogEntry::new("braid-electric").param("irrep", irrep);
        for &v in path {
            entry = entry.site(self.vlabel(v));
        }
        entry.probability = Some(survival);
        self.log.push(entry);
        Ok(survival)
    }

    fn apply_character_string(&mut self, irrep: IrrepLabel, path: &[VertexId]) -> Result<f64> {
        for &v in path {
            self.qd.check_vertex(v)?;
        }
        let chars: Vec<Complex64> = {
            let r = self.qd.group().irrep(irrep)?;
            (0..self.qd.group().order()).map(|g| r.character(g)).collect()
        };
        let start = self.qd.registry().vertex_ancilla(path[0])?;
        self.qd.require_identity(&self.state, start, "vertex ancilla")?;
        let mut s = self.state.clone();
        let ancillas = self.k_chain(&mut s, path)?;
        let last = *ancillas.last().expect("path has two vertices");
        let survival = s.apply_linear(&[SiteOp::Diagonal {
            site: last,
            diag: chars,
        }])?;
        self.k_chain_inverse(&mut s, path, &ancillas)?;
        self.qd
            .require_identity(&s, start, "vertex ancilla after pair creation")?;
        self.state = s;
        Ok(survival)
    }

    /// Fuses the electric pair recorded at the ends of `path`.
    pub fn fuse_electric(&mut self, path: &[VertexId]) -> Result<FusionDistribution> {
        let (Some(&a), Some(&b)) = (path.first(), path.last()) else {
            return Err(Error::Validation("empty path".into()));
        };
        let pos = self
            .anyons
            .iter()
            .position(|r| match r {
                AnyonRecord::Electric { path: p, .. } => {
                    let (x, y) = (p[0], p[p.len() - 1]);
                    (x == a && y == b) || (x == b && y == a)
                }
                _ => false,
            })
            .ok_or_else(|| {
                Error::Protocol(format!(
                    "no electric pair recorded at {} and {}",
                    self.vlabel(a),
                    self.vlabel(b)
                ))
            })?;
        let dist = self.probe_electric_fusion(path)?;
        self.anyons.remove(pos);
        Ok(dist)
    }

    /// Electric fusion measurement without bookkeeping checks.
    pub fn probe_electric_fusion(&mut self, path: &[VertexId]) -> Result<FusionDistribution> {
        for &v in path {
            self.qd.check_vertex(v)?;
        }
        let start = self.qd.registry().vertex_ancilla(path[0])?;
        self.qd.require_identity(&self.state, start, "vertex ancilla")?;
        let end_vertex = *path.last().expect("non-empty");
        let mut s = self.state.clone();
        let ancillas = self.k_chain(&mut s, path)?;
        let last = *ancillas.last().expect("path has two vertices");
        let ops: Vec<Vec<SiteOp>> = (0..self.qd.group().order())
            .map(|h| self.qd.gauge_ops(end_vertex, h))
            .collect::<Result<_>>()?;
        s.apply_group_controlled(last, |h| ops[h].clone())?;
        self.k_chain_inverse(&mut s, path, &ancillas)?;
        let (basis, labels) = self.qd.character_basis()?;
        let probs = s.outcome_probabilities(start, &basis)?;
        let out = s.measure(start, &basis, &mut self.mode)?;
        s.reset_site(start, IDENTITY)?;
        self.state = s;
        let mut channels = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            channels.insert(l.to_string(), probs[i]);
        }
        channels.insert("other".to_string(), probs[labels.len()..].iter().sum());
        let mut entry = LogEntry::new("fuse-electric");
        for &v in path {
            entry = entry.site(self.vlabel(v));
        }
        self.log.push(entry.outcome(&out));
        FusionDistribution::new(channels)
    }

    /// Controlled `T_h(v)` from a vertex ancilla in `(|e⟩+|h⟩)/√2`, read out
    /// in the `{|h±⟩}` basis. The state is left unchanged.
    pub fn single_face_interference(&self, v: VertexId, h: Element) -> Result<InterferenceResult> {
        self.qd.check_vertex(v)?;
        crate::error::check_index("element", h, self.qd.group().order())?;
        let anc = self.qd.registry().vertex_ancilla(v)?;
        self.qd.require_identity(&self.state, anc, "vertex ancilla")?;
        let d = self.qd.group().order();
        let zero = Complex64::new(0.0, 0.0);
        let mut plus = vec![zero; d];
        let mut minus = vec![zero; d];
        let basis = if h == IDENTITY {
            plus[IDENTITY] = Complex64::new(1.0, 0.0);
            Basis::completed(vec![plus.clone()], d)?
        } else {
            let s = 1.0 / 2f64.sqrt();
            plus[IDENTITY] = Complex64::new(s, 0.0);
            plus[h] = Complex64::new(s, 0.0);
            minus[IDENTITY] = Complex64::new(s, 0.0);
            minus[h] = Complex64::new(-s, 0.0);
            Basis::completed(vec![plus.clone(), minus], d)?
        };
        let mut s = self.state.clone();
        s.apply_site_unitary(anc, &unitary_with_first_column(&plus, IDENTITY)?)?;
        let ops: Vec<Vec<SiteOp>> = (0..d).map(|g| self.qd.gauge_ops(v, g)).collect::<Result<_>>()?;
        s.apply_group_controlled(anc, |g| ops[g].clone())?;
        let probs = s.outcome_probabilities(anc, &basis)?;
        Ok(InterferenceResult {
            p_plus: probs[0],
            p_minus: if h == IDENTITY { 0.0 } else { probs[1] },
        })
    }
}

/// A unitary whose column `col` equals `v` (Gram–Schmidt completion).
pub fn unitary_with_first_column(v: &[Complex64], col: usize) -> Result<DMatrix<Complex64>> {
    let d = v.len();
    let basis = Basis::completed(vec![v.to_vec()], d)?;
    // columns are the basis vectors; rotate so v lands in `col`
    let mut order: Vec<usize> = (1..d).collect();
    order.insert(col, 0);
    Ok(DMatrix::from_fn(d, d, |i, j| basis.vectors()[order[j]][i]))
}

fn class_name(g: &FiniteGroup, class: &[Element]) -> String {
    let names: Vec<&str> = class.iter().map(|&c| g.element_name(c)).collect();
    format!("[{}]", names.join(","))
}
