use rayon::prelude::*;

use super::{ResultDocument, RunOptions, DEFAULT_COUPLINGS, EXPERIMENTS};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, IrrepLabel};
use crate::lattice::{Boundary, Lattice};
use crate::protocols::{QuantumDouble, Session};
use crate::toric::{reference_phase_experiment, Fig3Config, Pauli, ToricCode, ToricSession};

struct Defaults {
    group: &'static str,
    lattice: (usize, usize),
    boundary: Boundary,
}

fn setup(opts: &RunOptions, d: Defaults, only: Option<&str>) -> Result<(FiniteGroup, Lattice)> {
    let group = FiniteGroup::by_name(opts.group.as_deref().unwrap_or(d.group))?;
    if let Some(required) = only {
        if group.name() != required {
            return Err(Error::Validation(format!(
                "this experiment needs group {required}, got {}",
                group.name()
            )));
        }
    }
    let (n, m) = opts.lattice.unwrap_or(d.lattice);
    let lattice = Lattice::new(n, m, opts.boundary.unwrap_or(d.boundary))?;
    Ok((group, lattice))
}

fn describe(doc: &mut ResultDocument, group: &FiniteGroup, lat: &Lattice, opts: &RunOptions) {
    doc.param("group", group.name());
    doc.param("lattice", format!("{}x{}", lat.n_rows(), lat.n_cols()));
    doc.param("boundary", lat.boundary());
    doc.param("policy", opts.policy);
}

fn session(group: FiniteGroup, lattice: Lattice, opts: &RunOptions) -> Result<Session> {
    let mut s = Session::new(QuantumDouble::new(group, lattice)?, opts.make_mode());
    s.set_prune_epsilon(opts.prune_eps);
    Ok(s)
}

fn thread_pool(opts: &RunOptions) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| Error::Protocol(format!("thread pool: {e}")))
}

/// Runs one of [`EXPERIMENTS`] by name.
pub fn run_experiment(name: &str, opts: &RunOptions) -> Result<ResultDocument> {
    opts.validate()?;
    let mut doc = ResultDocument::new(name, opts);
    match name {
        "prepare-gs" => prepare_gs(&mut doc, opts)?,
        "toric-fig3" => toric_fig3(&mut doc, opts)?,
        "reference-phase" => reference_phase(&mut doc, opts)?,
        "s3-interfere" => s3_interfere(&mut doc, opts)?,
        "magnetic-fusion" => magnetic_fusion(&mut doc, opts)?,
        "electric-fusion" => electric_fusion(&mut doc, opts)?,
        _ => {
            return Err(Error::Validation(format!(
                "unknown experiment {name:?}; expected one of {}",
                EXPERIMENTS.join(", ")
            )))
        }
    }
    Ok(doc)
}

fn prepare_gs(doc: &mut ResultDocument, opts: &RunOptions) -> Result<()> {
    let d = Defaults {
        group: "s3",
        lattice: (2, 2),
        boundary: Boundary::Open,
    };
    let (group, lat) = setup(opts, d, None)?;
    describe(doc, &group, &lat, opts);
    let mut s = session(group, lat, opts)?;
    s.prepare_ground_state(opts.policy)?;
    let table = s.qd.stabilizer_table(&s.state)?;
    doc.record("stabilizer.max_deviation", table.max_deviation());
    doc.stabilizers.extend(table.vertices);
    doc.stabilizers.extend(table.faces);
    doc.record("support", s.state.len() as f64);
    doc.record("norm", s.state.norm_sqr());
    match s.qd.ground_state_oracle() {
        Ok(oracle) => doc.record("oracle.overlap", s.state.overlap(&oracle)?),
        Err(Error::ResourceGuard(_)) => {}
        Err(e) => return Err(e),
    }
    doc.log = s.log;
    Ok(())
}

fn toric_fig3(doc: &mut ResultDocument, opts: &RunOptions) -> Result<()> {
    let d = Defaults {
        group: "z2",
        lattice: (3, 2),
        boundary: Boundary::RoughSmooth,
    };
    let (group, lat) = setup(opts, d, Some("z2"))?;
    describe(doc, &group, &lat, opts);
    let coupling = opts.couplings.first().copied().unwrap_or(0.0);
    doc.param("coupling", coupling);
    let mut s = ToricSession::new(ToricCode::new(lat)?, opts.make_mode());
    s.state.set_prune_epsilon(opts.prune_eps);
    s.prepare_toric_code()?;
    let r = s.interferometry_fig3(Fig3Config {
        coupling,
        ..Default::default()
    })?;
    doc.record("A2.phase", r.raw_phase);
    doc.record("A2.p_minus", r.p_minus);
    doc.record("phi_s", r.ledger.phi_s);
    doc.record("phi_d", r.ledger.phi_d);
    doc.record("phi_g", r.ledger.phi_g);
    doc.record("braid_steps", r.braid_steps as f64);
    let m = s.measure_ancilla("A2", Pauli::X)?;
    doc.record("A2.outcome", m.outcome as f64);
    doc.log = s.log;
    Ok(())
}

fn reference_phase(doc: &mut ResultDocument, opts: &RunOptions) -> Result<()> {
    let d = Defaults {
        group: "z2",
        lattice: (3, 2),
        boundary: Boundary::RoughSmooth,
    };
    let (group, lat) = setup(opts, d, Some("z2"))?;
    describe(doc, &group, &lat, opts);
    let couplings = if opts.couplings.is_empty() {
        DEFAULT_COUPLINGS.to_vec()
    } else {
        opts.couplings.clone()
    };
    let runs: Vec<_> = thread_pool(opts)?.install(|| {
        couplings
            .par_iter()
            .map(|&u| reference_phase_experiment(&lat, u))
            .collect::<Result<_>>()
    })?;
    for r in runs {
        let tag = format!("U={}", r.coupling);
        doc.record(format!("{tag}.phi_s"), r.phi_s);
        doc.record(format!("{tag}.phi_d"), r.phi_d);
        doc.record(format!("{tag}.main_phase"), r.main_phase);
        doc.record(format!("{tag}.reference_phase"), r.reference_phase);
        doc.record(format!("{tag}.t_braid"), r.t_braid);
    }
    Ok(())
}

fn s3_interfere(doc: &mut ResultDocument, opts: &RunOptions) -> Result<()> {
    let d = Defaults {
        group: "s3",
        lattice: (2, 2),
        boundary: Boundary::Open,
    };
    let (group, lat) = setup(opts, d, Some("s3"))?;
    describe(doc, &group, &lat, opts);
    let hs: Vec<usize> = if opts.h.is_empty() {
        (0..group.order()).collect()
    } else {
        opts.h.iter().map(|n| group.element_by_name(n)).collect::<Result<_>>()?
    };
    let (v0, v1) = (lat.vertex(0, 0)?, lat.vertex(0, 1)?);
    let mut s = session(group.clone(), lat, opts)?;
    s.prepare_ground_state(opts.policy)?;
    s.create_electric_vacuum_pair(IrrepLabel::Two, &[v0, v1])?;
    for h in hs {
        let name = group.element_name(h).to_string();
        let r = s.single_face_interference(v0, h)?;
        doc.record(format!("{name}.p_plus"), r.p_plus);
        doc.record(format!("{name}.p_minus"), r.p_minus);
        doc.record(format!("{name}.contrast"), r.contrast());
        doc.record(format!("{name}.character"), group.character(IrrepLabel::Two, h)?.re);
        let mut moved = s.state.clone();
        s.qd.gauge_transform(&mut moved, v0, h)?;
        doc.record(format!("{name}.overlap_sq"), s.state.inner(&moved)?.norm_sqr());
        let mut braided = s.clone();
        braided.braid_flux_around_vertex(h, v0)?;
        let fused = braided.fuse_electric(&[v0, v1])?;
        doc.record(format!("{name}.fusion_R2"), fused.probability("R2"));
        doc.distributions.insert(format!("{name}.fusion"), fused.channels);
    }
    doc.log = s.log;
    Ok(())
}

fn magnetic_fusion(doc: &mut ResultDocument, opts: &RunOptions) -> Result<()> {
    let d = Defaults {
        group: "s3",
        lattice: (2, 4),
        boundary: Boundary::Open,
    };
    let (group, lat) = setup(opts, d, None)?;
    describe(doc, &group, &lat, opts);
    let rep = match &opts.class {
        Some(c) => group.element_by_name(c)?,
        None => 1,
    };
    doc.param("class", group.element_name(rep));
    let faces: Vec<_> = (0..lat.n_cols().saturating_sub(1).max(1))
        .map(|j| lat.face(0, j as i32))
        .collect::<Result<_>>()?;
    if faces.len() < 2 {
        return Err(Error::Validation(
            "magnetic-fusion needs at least two faces in row 0".into(),
        ));
    }
    let mut s = session(group.clone(), lat, opts)?;
    s.prepare_ground_state(opts.policy)?;
    s.create_magnetic_vacuum_pair(rep, faces[0], faces[1])?;
    for w in faces[1..].windows(2) {
        s.transport_magnetic(w[0], w[1])?;
    }
    let far = *faces.last().expect("non-empty");
    let classes = s.qd.flux_class_distribution(&s.state, far)?;
    doc.record("far_face.class_probability", classes[group.class_index(rep)]);
    for w in faces[1..].windows(2).rev() {
        s.transport_magnetic(w[1], w[0])?;
    }
    let fused = s.fuse_magnetic(faces[0], faces[1], rep)?;
    doc.record("fusion.vacuum", fused.probability("vacuum"));
    doc.distributions.insert("fusion".into(), fused.channels);
    doc.log = s.log;
    Ok(())
}

fn electric_fusion(doc: &mut ResultDocument, opts: &RunOptions) -> Result<()> {
    let d = Defaults {
        group: "s3",
        lattice: (2, 2),
        boundary: Boundary::Open,
    };
    let (group, lat) = setup(opts, d, None)?;
    describe(doc, &group, &lat, opts);
    let irrep: IrrepLabel = match &opts.irrep {
        Some(r) => r.parse()?,
        None if group.order() == 2 => IrrepLabel::Sign,
        None => IrrepLabel::Two,
    };
    group.irrep(irrep)?;
    doc.param("irrep", irrep);
    let path = [lat.vertex(0, 0)?, lat.vertex(0, 1)?];
    let mut s = session(group, lat, opts)?;
    s.prepare_ground_state(opts.policy)?;
    let survival = s.create_electric_vacuum_pair(irrep, &path)?;
    doc.record("survival", survival);
    let fused = s.fuse_electric(&path)?;
    for (k, p) in &fused.channels {
        doc.record(format!("fusion.{k}"), *p);
    }
    doc.distributions.insert("fusion".into(), fused.channels);
    doc.log = s.log;
    Ok(())
}
