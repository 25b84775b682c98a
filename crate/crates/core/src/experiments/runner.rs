use super::script::{Op, ProtocolScript};
use super::{ModeKind, ResultDocument, RunOptions};
use crate::error::Result;
use crate::group::FiniteGroup;
use crate::lattice::Lattice;
use crate::protocols::{QuantumDouble, Session};
use crate::state::Basis;
use crate::toric::{ToricCode, ToricSession};

/// Runs a validated script. The header's group, lattice, mode and seed
/// override the corresponding fields of `opts`.
pub fn run_script(script: &ProtocolScript, opts: &RunOptions) -> Result<ResultDocument> {
    let (group, lattice, ops) = script.validate()?;
    let opts = RunOptions {
        group: Some(script.group.clone()),
        lattice: Some(script.lattice),
        boundary: Some(script.boundary),
        mode: script.mode,
        seed: if script.mode == ModeKind::Sample {
            script.seed.or(opts.seed)
        } else {
            script.seed
        },
        ..opts.clone()
    };
    opts.validate()?;
    let mut doc = ResultDocument::new("script", &opts);
    doc.script = Some(script.clone());
    doc.param("group", group.name());
    doc.param("lattice", format!("{}x{}", lattice.n_rows(), lattice.n_cols()));
    doc.param("boundary", lattice.boundary());
    let lines: Vec<usize> = script.ops.iter().map(|o| o.line).collect();
    if ops.iter().any(Op::is_toric) {
        run_toric(&mut doc, lattice, &ops, &lines, &opts)?;
    } else {
        run_qd(&mut doc, group, lattice, &ops, &lines, &opts)?;
    }
    Ok(doc)
}

fn run_qd(
    doc: &mut ResultDocument,
    group: FiniteGroup,
    lattice: Lattice,
    ops: &[Op],
    lines: &[usize],
    opts: &RunOptions,
) -> Result<()> {
    let mut s = Session::new(QuantumDouble::new(group, lattice)?, opts.make_mode());
    s.set_prune_epsilon(opts.prune_eps);
    for (op, &line) in ops.iter().zip(lines) {
        let tag = format!("L{line}");
        match op {
            Op::PrepareGs(p) => s.prepare_ground_state(*p)?,
            Op::MeasureVertex(v) => {
                let m = s.measure_vertex(*v)?;
                doc.record(format!("{tag}.outcome"), m.outcome as f64);
            }
            Op::Gauge(v, g) => s.gauge_transform(*v, *g)?,
            Op::Braid(h, v) => s.braid_flux_around_vertex(*h, *v)?,
            Op::MagneticPair(rep, f1, f2) => {
                s.create_magnetic_vacuum_pair(*rep, *f1, *f2)?;
            }
            Op::Transport(f, f2) => s.transport_magnetic(*f, *f2)?,
            Op::FuseMagnetic(f, f2, rep) => {
                let d = s.fuse_magnetic(*f, *f2, *rep)?;
                doc.distributions.insert(format!("{tag}.fusion"), d.channels);
            }
            Op::ElectricPair(irrep, path) => {
                let p = s.create_electric_vacuum_pair(*irrep, path)?;
                doc.record(format!("{tag}.survival"), p);
            }
            Op::BraidElectric(irrep, path) => {
                let p = s.braid_electric(*irrep, path)?;
                doc.record(format!("{tag}.survival"), p);
            }
            Op::FuseElectric(path) => {
                let d = s.fuse_electric(path)?;
                doc.distributions.insert(format!("{tag}.fusion"), d.channels);
            }
            Op::Interfere(v, h) => {
                let r = s.single_face_interference(*v, *h)?;
                doc.record(format!("{tag}.p_plus"), r.p_plus);
                doc.record(format!("{tag}.p_minus"), r.p_minus);
                doc.record(format!("{tag}.contrast"), r.contrast());
            }
            Op::Stabilizers => {
                let t = s.qd.stabilizer_table(&s.state)?;
                doc.record(format!("{tag}.max_deviation"), t.max_deviation());
                doc.stabilizers = t.vertices;
                doc.stabilizers.extend(t.faces);
            }
            other => unreachable!("toric op {other:?} in quantum double run"),
        }
    }
    doc.record("support", s.state.len() as f64);
    doc.log = s.log;
    Ok(())
}

fn run_toric(doc: &mut ResultDocument, lattice: Lattice, ops: &[Op], lines: &[usize], opts: &RunOptions) -> Result<()> {
    let mut s = ToricSession::new(ToricCode::new(lattice)?, opts.make_mode());
    s.state.set_prune_epsilon(opts.prune_eps);
    for (op, &line) in ops.iter().zip(lines) {
        let tag = format!("L{line}");
        match op {
            Op::ToricPrepare => s.prepare_toric_code()?,
            Op::Ancilla(name, init) => s.prepare_ancilla(name, *init)?,
            Op::CGate(name, kind, e) => s.controlled_pauli(name, *e, *kind)?,
            Op::MeasureAncilla(name, basis) => {
                let m = s.measure_ancilla(name, *basis)?;
                doc.record(format!("{name}.outcome"), m.outcome as f64);
            }
            Op::Phase(name) => {
                let site = s.code.ancilla(name)?;
                let probs = s.state.outcome_probabilities(site, &Basis::fourier(2))?;
                doc.record(format!("{name}.phase"), s.ancilla_phase(name)?);
                doc.record(format!("{name}.p_minus"), probs[1]);
            }
            Op::ApplyString(kind, edges) => s.apply_string(*kind, edges)?,
            Op::MeasureString(kind, edges) => {
                let (eig, _) = s.measure_string(*kind, edges)?;
                doc.record(format!("{tag}.eigenvalue"), eig as f64);
            }
            Op::ErrorCorrect => {
                let fixes = s.error_correct()?;
                doc.record(format!("{tag}.corrections"), fixes.len() as f64);
            }
            Op::Stabilizers => {
                doc.stabilizers = s.code.stabilizer_table(&s.state)?;
                let worst = doc.stabilizers.values().fold(0.0f64, |m, x| m.max((1.0 - x).abs()));
                doc.record(format!("{tag}.max_deviation"), worst);
            }
            other => unreachable!("quantum double op {other:?} in toric run"),
        }
    }
    doc.record("support", s.state.len() as f64);
    doc.log = s.log;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> ResultDocument {
        run_script(&ProtocolScript::parse(text).unwrap(), &RunOptions::default()).unwrap()
    }

    #[test]
    fn magnetic_script_returns_to_vacuum() {
        let doc = run("group = s3\nlattice = 2 3\n---\nprepare-gs\nmagnetic-pair t0 f[0,0] f[0,1]\nfuse-magnetic f[0,0] f[0,1] t0\nstabilizers\n");
        assert!((doc.distributions["L6.fusion"]["vacuum"] - 1.0).abs() < 1e-10);
        assert!(doc.summary["L7.max_deviation"] < 1e-10);
    }

    #[test]
    fn toric_script_reads_statistical_phase() {
        let doc = run("\
group = z2
lattice = 3 2
boundary = rough-smooth
---
toric-prepare
ancilla A1 1
ancilla A2 +
cgate A1 Z h:1:0
cgate A2 X v:1:0
cgate A2 X v:1:1
cgate A2 X h:1:1
cgate A2 X v:0:1
cgate A2 X h:1:0
cgate A2 X v:1:0
cgate A1 Z h:1:0
phase A2
measure-ancilla A2 X
");
        assert!((doc.summary["A2.phase"] - std::f64::consts::PI).abs() < 1e-10);
        assert!((doc.summary["A2.p_minus"] - 1.0).abs() < 1e-10);
        assert_eq!(doc.summary["A2.outcome"], 1.0);
    }
}
