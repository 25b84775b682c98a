//! Toric code specialization with Pauli operators and qubit ancillas.
//!
//! Stabilizers are `A_v = Π X` over the star of a vertex and `B_p = Π Z`
//! around a plaquette. All code operations go through controlled Paulis
//! from a qubit ancilla, mirroring how they would run on hardware.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::lattice::{Boundary, EdgeId, FaceId, Lattice, VertexId};
use crate::protocols::{LogEntry, QuantumDouble};
use crate::state::{Basis, Key, MeasurementOutcome, Mode, SiteOp, SparseState};

/// Named qubit ancillas available to toric-code protocols.
pub const ANCILLAS: [&str; 4] = ["A0", "A1", "A2", "a"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Pauli {
    X,
    Z,
}

impl std::str::FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Pauli::X),
            "Z" | "z" => Ok(Pauli::Z),
            _ => Err(Error::Validation(format!("unknown Pauli {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stabilizer {
    Vertex(VertexId),
    Plaquette(FaceId),
}

/// Initial state of a named ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncillaState {
    Zero,
    One,
    Plus,
    Minus,
}

impl std::str::FromStr for AncillaState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Self::Zero),
            "1" => Ok(Self::One),
            "+" => Ok(Self::Plus),
            "-" => Ok(Self::Minus),
            _ => Err(Error::Validation(format!("unknown ancilla state {s:?}"))),
        }
    }
}

fn pauli_op(kind: Pauli, site: usize) -> SiteOp {
    match kind {
        Pauli::X => SiteOp::Permute { site, perm: vec![1, 0] },
        Pauli::Z => SiteOp::Diagonal {
            site,
            diag: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        },
    }
}

fn hadamard() -> DMatrix<Complex64> {
    let s = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
    DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// Lattice plus site layout for a qubit toric code with named ancillas.
#[derive(Debug, Clone)]
pub struct ToricCode {
    qd: QuantumDouble,
}

impl ToricCode {
    pub fn new(lattice: Lattice) -> Result<Self> {
        Ok(Self {
            qd: QuantumDouble::with_extras(FiniteGroup::z2(), lattice, &ANCILLAS)?,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        self.qd.lattice()
    }

    pub fn quantum_double(&self) -> &QuantumDouble {
        &self.qd
    }

    pub fn ancilla(&self, name: &str) -> Result<usize> {
        self.qd.registry().extra_ancilla(name)
    }

    pub fn vacuum(&self) -> SparseState {
        self.qd.vacuum()
    }

    /// Support of a stabilizer and the Pauli it applies there.
    pub fn support(&self, s: Stabilizer) -> Result<(Pauli, Vec<EdgeId>)> {
        match s {
            Stabilizer::Vertex(v) => {
                if self.lattice().vertices().get(v).is_none_or(|x| x.terminal) {
                    return Err(Error::Validation(format!("vertex {v} carries no stabilizer")));
                }
                Ok((Pauli::X, self.lattice().vertex_star(v)?.iter().map(|x| x.0).collect()))
            }
            Stabilizer::Plaquette(f) => Ok((Pauli::Z, self.lattice().face_cycle(f)?.iter().map(|x| x.0).collect())),
        }
    }

    pub fn stabilizers(&self) -> Vec<Stabilizer> {
        let mut out: Vec<Stabilizer> = self
            .lattice()
            .stabilizer_vertices()
            .into_iter()
            .map(Stabilizer::Vertex)
            .collect();
        out.extend((0..self.lattice().num_faces()).map(Stabilizer::Plaquette));
        out
    }

    pub fn label(&self, s: Stabilizer) -> String {
        match s {
            Stabilizer::Vertex(v) => format!("A{}", self.lattice().vertex_label(v)),
            Stabilizer::Plaquette(f) => format!("B{}", self.lattice().face_label(f)),
        }
    }

    /// `⟨ψ|P|ψ⟩` for a Pauli string `P`.
    pub fn pauli_expectation(&self, state: &SparseState, kind: Pauli, edges: &[EdgeId]) -> f64 {
        let mask: Key = edges.iter().fold(0, |m, &e| m ^ (1 << e));
        match kind {
            Pauli::Z => state
                .entries()
                .iter()
                .map(|&(k, a)| {
                    let sign = if (k & mask).count_ones().is_multiple_of(2) {
                        1.0
                    } else {
                        -1.0
                    };
                    sign * a.norm_sqr()
                })
                .sum(),
            Pauli::X => state
                .entries()
                .iter()
                .map(|&(k, a)| (state.amplitude(k ^ mask).conj() * a).re)
                .sum(),
        }
    }

    pub fn stabilizer_expectation(&self, state: &SparseState, s: Stabilizer) -> Result<f64> {
        let (kind, edges) = self.support(s)?;
        Ok(self.pauli_expectation(state, kind, &edges))
    }

    /// `⟨A_v⟩` and `⟨B_p⟩` for every stabilizer, as ±1 expectations.
    pub fn stabilizer_table(&self, state: &SparseState) -> Result<BTreeMap<String, f64>> {
        self.stabilizers()
            .into_iter()
            .map(|s| Ok((self.label(s), self.stabilizer_expectation(state, s)?)))
            .collect()
    }

    /// Energy of `-U Σ A_v - U Σ B_p`; fails unless the state is an
    /// eigenstate of every stabilizer.
    pub fn background_energy(&self, state: &SparseState, coupling: f64) -> Result<f64> {
        let mut total = 0.0;
        for s in self.stabilizers() {
            let x = self.stabilizer_expectation(state, s)?;
            if (x.abs() - 1.0).abs() > 1e-10 {
                return Err(Error::Protocol(format!(
                    "component is not an eigenstate of {} (expectation {x})",
                    self.label(s)
                )));
            }
            total += x;
        }
        Ok(-coupling * total)
    }

    /// Single-edge syndromes: for each kind of error, the flipped stabilizers.
    pub fn syndrome_of(&self, kind: Pauli, e: EdgeId) -> Vec<Stabilizer> {
        self.stabilizers()
            .into_iter()
            .filter(|&s| {
                let (k, edges) = self.support(s).expect("listed stabilizer");
                k != kind && edges.contains(&e)
            })
            .collect()
    }

    /// Most likely single-edge error for a syndrome (set of flipped stabilizers).
    pub fn decode(&self, kind: Pauli, flipped: &[Stabilizer]) -> Option<EdgeId> {
        if flipped.is_empty() {
            return None;
        }
        let mut want = flipped.to_vec();
        want.sort_by_key(|s| self.label(*s));
        (0..self.lattice().num_edges()).find(|&e| {
            let mut got = self.syndrome_of(kind, e);
            got.sort_by_key(|s| self.label(*s));
            got == want
        })
    }
}

/// Statistical, dynamical and geometric contributions to an interferometer
/// phase, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseLedger {
    pub phi_s: f64,
    pub phi_d: f64,
    pub phi_g: f64,
    pub coupling: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig3Config {
    pub coupling: f64,
    pub windings: usize,
    /// Create the electric pair with `A0` outside the loop instead of `A1`.
    pub reference: bool,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            coupling: 0.0,
            windings: 1,
            reference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Result {
    /// Probability of `|−⟩` on A2 before the final measurement.
    pub p_minus: f64,
    /// Raw phase of A2, `−arg ρ₁₀`, wrapped to `[0, 2π)`.
    pub raw_phase: f64,
    pub braid_steps: usize,
    pub measured: Option<usize>,
    pub ledger: PhaseLedger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferencePhase {
    pub coupling: f64,
    pub t_braid: f64,
    pub main_phase: f64,
    pub reference_phase: f64,
    pub phi_s: f64,
    pub phi_d: f64,
}

/// Wraps an angle to `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if (2.0 * PI - y).abs() < 1e-12 {
        0.0
    } else {
        y
    }
}

/// Distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(2.0 * PI - d)
}

#[derive(Debug, Clone)]
pub struct ToricSession {
    pub code: ToricCode,
    pub state: SparseState,
    pub mode: Mode,
    pub log: Vec<LogEntry>,
}

impl ToricSession {
    pub fn new(code: ToricCode, mode: Mode) -> Self {
        let state = code.vacuum();
        Self {
            code,
            state,
            mode,
            log: Vec::new(),
        }
    }

    fn edge_label(&self, e: EdgeId) -> String {
        self.code.lattice().edge_label(e)
    }

    /// Resets a disentangled ancilla and prepares it in `init`.
    pub fn prepare_ancilla(&mut self, name: &str, init: AncillaState) -> Result<()> {
        let a = self.code.ancilla(name)?;
        self.state.reset_site(a, 0)?;
        match init {
            AncillaState::Zero => {}
            AncillaState::One => self.state.apply_op(&pauli_op(Pauli::X, a))?,
            AncillaState::Plus => self.state.apply_site_unitary(a, &hadamard())?,
            AncillaState::Minus => {
                self.state.apply_op(&pauli_op(Pauli::X, a))?;
                self.state.apply_site_unitary(a, &hadamard())?;
            }
        }
        self.log
            .push(LogEntry::new("ancilla").site(name).param("state", format!("{init:?}")));
        Ok(())
    }

    /// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ P` from a named ancilla onto an edge.
    pub fn controlled_pauli(&mut self, ancilla: &str, target: EdgeId, kind: Pauli) -> Result<()> {
        let a = self.code.ancilla(ancilla)?;
        controlled_pauli(&mut self.state, a, target, kind)?;
        self.log.push(
            LogEntry::new("cgate")
                .site(ancilla)
                .site(self.edge_label(target))
                .param("kind", format!("{kind:?}")),
        );
        Ok(())
    }

    /// Measures a named ancilla in the Z (`0`/`1`) or X (`+`/`−`) basis.
    pub fn measure_ancilla(&mut self, name: &str, basis: Pauli) -> Result<MeasurementOutcome> {
        let a = self.code.ancilla(name)?;
        let b = match basis {
            Pauli::Z => Basis::computational(2),
            Pauli::X => Basis::fourier(2),
        };
        let out = self.state.measure(a, &b, &mut self.mode)?;
        self.log.push(
            LogEntry::new("measure-ancilla")
                .site(name)
                .param("basis", format!("{basis:?}"))
                .outcome(&out),
        );
        Ok(out)
    }

    /// Controlled Pauli string from the scratch ancilla `a`, which starts in
    /// `|+⟩` (measurement) or `|1⟩` (application).
    fn ancilla_string(
        &mut self,
        kind: Pauli,
        edges: &[EdgeId],
        measure: bool,
        force: Option<usize>,
    ) -> Result<Option<MeasurementOutcome>> {
        if edges.is_empty() {
            return Err(Error::Validation("empty string".into()));
        }
        let a = self.code.ancilla("a")?;
        self.state.reset_site(a, 0)?;
        if measure {
            self.state.apply_site_unitary(a, &hadamard())?;
        } else {
            self.state.apply_op(&pauli_op(Pauli::X, a))?;
        }
        for &e in edges {
            controlled_pauli(&mut self.state, a, e, kind)?;
        }
        let out = if measure {
            let basis = Basis::fourier(2);
            let out = match force {
                Some(k) => {
                    let (p, s) = self.state.measure_branch(a, &basis, k)?;
                    self.state = s;
                    MeasurementOutcome {
                        outcome: k,
                        probability: p,
                    }
                }
                None => self.state.measure(a, &basis, &mut self.mode)?,
            };
            Some(out)
        } else {
            None
        };
        self.state.reset_site(a, 0)?;
        Ok(out)
    }

    /// Ancilla-mediated stabilizer measurement; returns `+1` or `−1`.
    pub fn measure_stabilizer(&mut self, s: Stabilizer) -> Result<(i8, MeasurementOutcome)> {
        let (kind, edges) = self.code.support(s)?;
        let out = self.ancilla_string(kind, &edges, true, None)?.expect("measured");
        self.log.push(
            LogEntry::new("measure-stabilizer")
                .site(self.code.label(s))
                .outcome(&out),
        );
        Ok((if out.outcome == 0 { 1 } else { -1 }, out))
    }

    pub fn apply_string(&mut self, kind: Pauli, edges: &[EdgeId]) -> Result<()> {
        self.ancilla_string(kind, edges, false, None)?;
        let mut entry = LogEntry::new("apply-string").param("kind", format!("{kind:?}"));
        for &e in edges {
            entry = entry.site(self.edge_label(e));
        }
        self.log.push(entry);
        Ok(())
    }

    pub fn measure_string(&mut self, kind: Pauli, edges: &[EdgeId]) -> Result<(i8, MeasurementOutcome)> {
        let out = self.ancilla_string(kind, edges, true, None)?.expect("measured");
        let mut entry = LogEntry::new("measure-string").param("kind", format!("{kind:?}"));
        for &e in edges {
            entry = entry.site(self.edge_label(e));
        }
        self.log.push(entry.outcome(&out));
        Ok((if out.outcome == 0 { 1 } else { -1 }, out))
    }

    /// Vertex measurement order and the qubit corrected after a `−1`.
    pub fn preparation_schedule(&self) -> Result<Vec<(VertexId, EdgeId)>> {
        let lat = self.code.lattice();
        let (n, m) = (lat.n_rows() as i32, lat.n_cols() as i32);
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let v = lat.vertex(i, j)?;
                let corr = if i < n - 1 {
                    lat.vertical(i, j)?
                } else if j < m - 1 || lat.boundary() == Boundary::RoughSmooth {
                    lat.horizontal(i, j)?
                } else {
                    // the last vertex of an open lattice is fixed by the others
                    continue;
                };
                out.push((v, corr));
            }
        }
        Ok(out)
    }

    /// Measures the vertex stabilizers left to right, top to bottom, and
    /// applies Z below (or right of) each vertex that reports `−1`.
    pub fn prepare_toric_code(&mut self) -> Result<()> {
        self.prepare_with(|_| None)
    }

    /// Preparation with some outcomes forced (for branch enumeration).
    pub fn prepare_with(&mut self, force: impl Fn(usize) -> Option<usize>) -> Result<()> {
        for (idx, (v, corr)) in self.preparation_schedule()?.into_iter().enumerate() {
            let s = Stabilizer::Vertex(v);
            let (_, edges) = self.code.support(s)?;
            let out = self
                .ancilla_string(Pauli::X, &edges, true, force(idx))?
                .expect("measured");
            let mut entry = LogEntry::new("prepare-vertex").site(self.code.label(s)).outcome(&out);
            if out.outcome == 1 {
                self.state.apply_op(&pauli_op(Pauli::Z, corr))?;
                entry = entry.param("correction", format!("Z {}", self.edge_label(corr)));
            }
            self.log.push(entry);
        }
        Ok(())
    }

    pub fn measure_logical_z(&mut self) -> Result<(i8, MeasurementOutcome)> {
        let (z, _) = self.code.lattice().logical_paths()?;
        self.measure_string(Pauli::Z, &z)
    }

    pub fn apply_logical_x(&mut self) -> Result<()> {
        let (_, x) = self.code.lattice().logical_paths()?;
        self.apply_string(Pauli::X, &x)
    }

    /// Measures every stabilizer and corrects a single-qubit error if the
    /// syndrome identifies one. Returns the corrections applied.
    pub fn error_correct(&mut self) -> Result<Vec<(Pauli, EdgeId)>> {
        let mut flipped_a = Vec::new();
        let mut flipped_b = Vec::new();
        for s in self.code.stabilizers() {
            let (sign, _) = self.measure_stabilizer(s)?;
            if sign < 0 {
                match s {
                    Stabilizer::Vertex(_) => flipped_a.push(s),
                    Stabilizer::Plaquette(_) => flipped_b.push(s),
                }
            }
        }
        let mut applied = Vec::new();
        // vertex syndromes come from Z errors, plaquette syndromes from X errors
        for (kind, flipped) in [(Pauli::Z, flipped_a), (Pauli::X, flipped_b)] {
            if flipped.is_empty() {
                continue;
            }
            let e = self.code.decode(kind, &flipped).ok_or_else(|| {
                Error::Protocol(format!(
                    "syndrome of {} stabilizers has no single-qubit explanation",
                    flipped.len()
                ))
            })?;
            self.apply_string(kind, &[e])?;
            applied.push((kind, e));
        }
        Ok(applied)
    }

    /// Advances every component (by value of `control`) by one time step
    /// under the background Hamiltonian.
    fn evolve_step(&mut self, control: usize, coupling: f64) -> Result<()> {
        if coupling == 0.0 {
            return Ok(());
        }
        let layout = self.state.layout().clone();
        let mut energies = [0.0; 2];
        for (value, energy) in energies.iter_mut().enumerate() {
            let part: Vec<(Key, Complex64)> = self
                .state
                .entries()
                .iter()
                .filter(|(k, _)| layout.get(*k, control) == value)
                .copied()
                .collect();
            if part.is_empty() {
                continue;
            }
            let mut comp = SparseState::from_amplitudes(layout.clone(), part);
            comp.normalize()?;
            *energy = self.code.background_energy(&comp, coupling)?;
        }
        self.state
            .apply_diagonal(|k| Complex64::from_polar(1.0, -energies[layout.get(k, control)]));
        Ok(())
    }

    /// `−arg ⟨1|ρ|0⟩` of a qubit ancilla, wrapped to `[0, 2π)`.
    pub fn ancilla_phase(&self, name: &str) -> Result<f64> {
        let a = self.code.ancilla(name)?;
        let layout = self.state.layout();
        let mut rho10 = Complex64::new(0.0, 0.0);
        for &(k, amp) in self.state.entries() {
            if layout.get(k, a) == 1 {
                rho10 += amp * self.state.amplitude(layout.set(k, a, 0)).conj();
            }
        }
        if rho10.norm() < 1e-12 {
            return Err(Error::Protocol(format!("ancilla {name} has no coherence")));
        }
        Ok(wrap_phase(-rho10.arg()))
    }

    /// The minimal interferometry sequence: an electric pair across `h:1:0`,
    /// a magnetic pair across `v:1:0` controlled by `A2`, the magnetic
    /// defect wound around `v[1,1]` by the four star edges, then both pairs
    /// removed. Needs at least 3 rows and 2 columns.
    pub fn interferometry_fig3(&mut self, cfg: Fig3Config) -> Result<Fig3Result> {
        let lat = self.code.lattice().clone();
        let e_edge = if cfg.reference {
            lat.horizontal(2, 0)?
        } else {
            lat.horizontal(1, 0)?
        };
        let e_anc = if cfg.reference { "A0" } else { "A1" };
        let m_edge = lat.vertical(1, 0)?;
        let winding = [
            lat.vertical(1, 1)?,
            lat.horizontal(1, 1)?,
            lat.vertical(0, 1)?,
            lat.horizontal(1, 0)?,
        ];
        let a2 = self.code.ancilla("A2")?;
        self.prepare_ancilla(e_anc, AncillaState::One)?;
        self.prepare_ancilla("A2", AncillaState::Plus)?;
        self.controlled_pauli(e_anc, e_edge, Pauli::Z)?;
        self.controlled_pauli("A2", m_edge, Pauli::X)?;
        let mut steps = 0;
        for _ in 0..cfg.windings {
            for &e in &winding {
                self.controlled_pauli("A2", e, Pauli::X)?;
                self.evolve_step(a2, cfg.coupling)?;
                steps += 1;
            }
        }
        self.controlled_pauli("A2", m_edge, Pauli::X)?;
        self.controlled_pauli(e_anc, e_edge, Pauli::Z)?;
        let raw_phase = self.ancilla_phase("A2")?;
        let probs = self.state.outcome_probabilities(a2, &Basis::fourier(2))?;
        let phi_d = 4.0 * cfg.coupling * steps as f64;
        let ledger = PhaseLedger {
            phi_s: wrap_phase(raw_phase - phi_d),
            phi_d,
            phi_g: 0.0,
            coupling: cfg.coupling,
            t: steps as f64,
        };
        Ok(Fig3Result {
            p_minus: probs[1],
            raw_phase,
            braid_steps: steps,
            measured: None,
            ledger,
        })
    }
}

/// Controlled Pauli between two qubit sites of any state.
pub fn controlled_pauli(state: &mut SparseState, ancilla: usize, target: usize, kind: Pauli) -> Result<()> {
    state.apply_group_controlled(ancilla, |a| {
        if a == 1 {
            vec![pauli_op(kind, target)]
        } else {
            Vec::new()
        }
    })
}

/// Runs the interferometer with the electric pair inside and outside the
/// loop and takes the difference of the A2 phases.
pub fn reference_phase_experiment(lattice: &Lattice, coupling: f64) -> Result<ReferencePhase> {
    if coupling < 0.0 {
        return Err(Error::Validation("coupling must be non-negative".into()));
    }
    let code = ToricCode::new(lattice.clone())?;
    let mut phases = [0.0; 2];
    let mut t_braid = 0.0;
    for (slot, reference) in [(0, false), (1, true)] {
        let mut s = ToricSession::new(code.clone(), Mode::branch());
        s.prepare_toric_code()?;
        let r = s.interferometry_fig3(Fig3Config {
            coupling,
            windings: 1,
            reference,
        })?;
        phases[slot] = r.raw_phase;
        t_braid = r.braid_steps as f64;
    }
    Ok(ReferencePhase {
        coupling,
        t_braid,
        main_phase: phases[0],
        reference_phase: phases[1],
        phi_s: wrap_phase(phases[0] - phases[1]),
        phi_d: 4.0 * coupling * t_braid,
    })
}

/// Smallest lattice the interferometry protocol fits on.
pub fn fig3_lattice() -> Lattice {
    Lattice::new(3, 2, Boundary::RoughSmooth).expect("valid size")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_and_distance() {
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!(wrap_phase(2.0 * PI).abs() < 1e-15);
        assert!(phase_distance(0.1, 2.0 * PI - 0.1) < 0.2 + 1e-12);
    }

    #[test]
    fn syndromes_are_unique_on_three_by_two() {
        let code = ToricCode::new(fig3_lattice()).unwrap();
        for kind in [Pauli::X, Pauli::Z] {
            for e in 0..code.lattice().num_edges() {
                let syn = code.syndrome_of(kind, e);
                assert!(!syn.is_empty());
                assert_eq!(code.decode(kind, &syn), Some(e));
            }
        }
    }

    #[test]
    fn controlled_pauli_on_basis_states() {
        let code = ToricCode::new(fig3_lattice()).unwrap();
        let mut s = ToricSession::new(code.clone(), Mode::branch());
        s.controlled_pauli("A1", 0, Pauli::X).unwrap();
        assert_eq!(s.state.entries()[0].0, 0);
        s.prepare_ancilla("A1", AncillaState::One).unwrap();
        s.controlled_pauli("A1", 0, Pauli::X).unwrap();
        assert_eq!(s.state.layout().get(s.state.entries()[0].0, 0), 1);
        let a1 = code.ancilla("A1").unwrap();
        assert!(controlled_pauli(&mut s.state, a1, a1, Pauli::Z).is_err());
    }
}
