//! Protocol scripts: a `key = value` header, a `---` line, then one
//! operation per line. `#` starts a comment.
//!
//! ```text
//! group = s3
//! lattice = 2 3
//! boundary = open
//! mode = branch
//! ---
//! prepare-gs postselect
//! magnetic-pair c+ f[0,0] f[0,1]
//! fuse-magnetic f[0,0] f[0,1] c+
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, FiniteGroup, IrrepLabel};
use crate::lattice::{Boundary, EdgeId, FaceId, Lattice, VertexId};
use crate::protocols::CorrectionPolicy;
use crate::toric::{AncillaState, Pauli, ANCILLAS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Branch,
    Sample,
}

impl std::str::FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "branch" => Ok(Self::Branch),
            "sample" => Ok(Self::Sample),
            _ => Err(Error::Validation(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Branch => "branch",
            Self::Sample => "sample",
        })
    }
}

/// One operation line as written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptOp {
    pub line: usize,
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolScript {
    pub group: String,
    pub lattice: (usize, usize),
    pub boundary: Boundary,
    pub mode: ModeKind,
    pub seed: Option<u64>,
    pub ops: Vec<ScriptOp>,
}

/// Operation with every reference resolved against the lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    PrepareGs(CorrectionPolicy),
    MeasureVertex(VertexId),
    Gauge(VertexId, Element),
    Braid(Element, VertexId),
    MagneticPair(Element, FaceId, FaceId),
    Transport(FaceId, FaceId),
    FuseMagnetic(FaceId, FaceId, Element),
    ElectricPair(IrrepLabel, Vec<VertexId>),
    BraidElectric(IrrepLabel, Vec<VertexId>),
    FuseElectric(Vec<VertexId>),
    Interfere(VertexId, Element),
    ToricPrepare,
    Ancilla(String, AncillaState),
    CGate(String, Pauli, EdgeId),
    MeasureAncilla(String, Pauli),
    Phase(String),
    ApplyString(Pauli, Vec<EdgeId>),
    MeasureString(Pauli, Vec<EdgeId>),
    ErrorCorrect,
    Stabilizers,
}

impl Op {
    pub fn is_toric(&self) -> bool {
        matches!(
            self,
            Op::ToricPrepare
                | Op::Ancilla(..)
                | Op::CGate(..)
                | Op::MeasureAncilla(..)
                | Op::Phase(_)
                | Op::ApplyString(..)
                | Op::MeasureString(..)
                | Op::ErrorCorrect
        )
    }
}

fn line_error(line: usize, msg: impl fmt::Display) -> Error {
    let msg = msg.to_string();
    let msg = msg.strip_prefix("validation error: ").unwrap_or(&msg);
    Error::Validation(format!("line {line}: {msg}"))
}

impl ProtocolScript {
    pub fn parse(text: &str) -> Result<Self> {
        let mut group = None;
        let mut lattice = None;
        let mut boundary = Boundary::Open;
        let mut mode = ModeKind::Branch;
        let mut seed = None;
        let mut ops = Vec::new();
        let mut in_body = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if content == "---" {
                if in_body {
                    return Err(line_error(line, "second '---' separator"));
                }
                in_body = true;
                continue;
            }
            if in_body {
                let mut words = content.split_whitespace();
                let name = words.next().expect("non-empty").to_string();
                ops.push(ScriptOp {
                    line,
                    name,
                    args: words.map(str::to_string).collect(),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| line_error(line, "expected 'key = value' or '---'"))?;
            let (key, value) = (key.trim(), value.trim());
            let wrap = |e: Error| line_error(line, e);
            match key {
                "group" => group = Some(value.to_string()),
                "lattice" => {
                    let dims: Vec<usize> = value
                        .split_whitespace()
                        .map(|x| {
                            x.parse()
                                .map_err(|_| line_error(line, format!("bad lattice size {value:?}")))
                        })
                        .collect::<Result<_>>()?;
                    if dims.len() != 2 {
                        return Err(line_error(line, "lattice takes two sizes"));
                    }
                    lattice = Some((dims[0], dims[1]));
                }
                "boundary" => boundary = value.parse().map_err(wrap)?,
                "mode" => mode = value.parse().map_err(wrap)?,
                "seed" => {
                    seed = Some(
                        value
                            .parse()
                            .map_err(|_| line_error(line, format!("bad seed {value:?}")))?,
                    )
                }
                _ => return Err(line_error(line, format!("unknown header key {key:?}"))),
            }
        }
        if !in_body {
            return Err(Error::Validation("missing '---' separator before operations".into()));
        }
        let script = Self {
            group: group.ok_or_else(|| Error::Validation("header is missing 'group'".into()))?,
            lattice: lattice.ok_or_else(|| Error::Validation("header is missing 'lattice'".into()))?,
            boundary,
            mode,
            seed,
            ops,
        };
        script.validate()?;
        Ok(script)
    }

    /// Checks the whole script and resolves every reference.
    pub fn validate(&self) -> Result<(FiniteGroup, Lattice, Vec<Op>)> {
        let group = FiniteGroup::by_name(&self.group)?;
        let lattice = Lattice::new(self.lattice.0, self.lattice.1, self.boundary)?;
        if self.mode == ModeKind::Sample && self.seed.is_none() {
            return Err(Error::Validation("sample mode needs a seed".into()));
        }
        let ops: Vec<Op> = self
            .ops
            .iter()
            .map(|op| resolve(op, &group, &lattice))
            .collect::<Result<_>>()?;
        let toric = ops.iter().filter(|o| o.is_toric()).count();
        if toric > 0 {
            if group.order() != 2 {
                return Err(Error::Validation("toric-code operations need group z2".into()));
            }
            if let Some(op) = self
                .ops
                .iter()
                .zip(&ops)
                .find(|(_, o)| !o.is_toric() && !matches!(o, Op::Stabilizers))
            {
                return Err(line_error(
                    op.0.line,
                    format!("{} cannot be mixed with toric-code operations", op.0.name),
                ));
            }
        }
        Ok((group, lattice, ops))
    }
}

fn parse_coords(s: &str, prefix: char) -> Option<(i32, i32)> {
    let inner = s.strip_prefix(prefix)?.strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

pub fn vertex_ref(lattice: &Lattice, s: &str) -> Result<VertexId> {
    let (i, j) = parse_coords(s, 'v').ok_or_else(|| Error::Validation(format!("bad vertex reference {s:?}")))?;
    lattice
        .vertex(i, j)
        .map_err(|_| Error::Validation(format!("no vertex {s}")))
}

pub fn face_ref(lattice: &Lattice, s: &str) -> Result<FaceId> {
    let (i, j) = parse_coords(s, 'f').ok_or_else(|| Error::Validation(format!("bad face reference {s:?}")))?;
    lattice
        .face(i, j)
        .map_err(|_| Error::Validation(format!("no face {s}")))
}

fn resolve(op: &ScriptOp, group: &FiniteGroup, lat: &Lattice) -> Result<Op> {
    let a = &op.args;
    let err = |e: Error| line_error(op.line, e);
    let arity = |n: usize| -> Result<()> {
        if a.len() == n {
            Ok(())
        } else {
            Err(line_error(
                op.line,
                format!("{} takes {n} arguments, got {}", op.name, a.len()),
            ))
        }
    };
    let at_least = |n: usize| -> Result<()> {
        if a.len() >= n {
            Ok(())
        } else {
            Err(line_error(op.line, format!("{} takes at least {n} arguments", op.name)))
        }
    };
    let elem = |s: &str| group.element_by_name(s).map_err(err);
    let vert = |s: &str| vertex_ref(lat, s).map_err(err);
    let face = |s: &str| face_ref(lat, s).map_err(err);
    let edge = |s: &str| lat.edge_by_label(s).map_err(err);
    let irrep = |s: &str| -> Result<IrrepLabel> {
        let l: IrrepLabel = s.parse().map_err(err)?;
        group.irrep(l).map_err(err)?;
        Ok(l)
    };
    let ancilla = |s: &str| -> Result<String> {
        if ANCILLAS.contains(&s) && s != "a" {
            Ok(s.to_string())
        } else {
            Err(line_error(op.line, format!("unknown ancilla {s:?} (A0, A1 or A2)")))
        }
    };
    let pauli = |s: &str| s.parse::<Pauli>().map_err(err);
    Ok(match op.name.as_str() {
        "prepare-gs" => {
            if a.len() > 1 {
                return Err(line_error(op.line, "prepare-gs takes at most one argument"));
            }
            Op::PrepareGs(match a.first() {
                Some(p) => p.parse().map_err(err)?,
                None => CorrectionPolicy::PaperCorrection,
            })
        }
        "measure-vertex" => {
            arity(1)?;
            Op::MeasureVertex(vert(&a[0])?)
        }
        "gauge" => {
            arity(2)?;
            Op::Gauge(vert(&a[0])?, elem(&a[1])?)
        }
        "braid" => {
            arity(2)?;
            Op::Braid(elem(&a[0])?, vert(&a[1])?)
        }
        "magnetic-pair" => {
            arity(3)?;
            Op::MagneticPair(elem(&a[0])?, face(&a[1])?, face(&a[2])?)
        }
        "transport" => {
            arity(2)?;
            Op::Transport(face(&a[0])?, face(&a[1])?)
        }
        "fuse-magnetic" => {
            arity(3)?;
            Op::FuseMagnetic(face(&a[0])?, face(&a[1])?, elem(&a[2])?)
        }
        "electric-pair" => {
            at_least(3)?;
            Op::ElectricPair(irrep(&a[0])?, a[1..].iter().map(|s| vert(s)).collect::<Result<_>>()?)
        }
        "braid-electric" => {
            at_least(4)?;
            Op::BraidElectric(irrep(&a[0])?, a[1..].iter().map(|s| vert(s)).collect::<Result<_>>()?)
        }
        "fuse-electric" => {
            at_least(2)?;
            Op::FuseElectric(a.iter().map(|s| vert(s)).collect::<Result<_>>()?)
        }
        "interfere" => {
            arity(2)?;
            Op::Interfere(vert(&a[0])?, elem(&a[1])?)
        }
        "toric-prepare" => {
            arity(0)?;
            Op::ToricPrepare
        }
        "ancilla" => {
            arity(2)?;
            Op::Ancilla(ancilla(&a[0])?, a[1].parse().map_err(err)?)
        }
        "cgate" => {
            arity(3)?;
            Op::CGate(ancilla(&a[0])?, pauli(&a[1])?, edge(&a[2])?)
        }
        "measure-ancilla" => {
            arity(2)?;
            Op::MeasureAncilla(ancilla(&a[0])?, pauli(&a[1])?)
        }
        "phase" => {
            arity(1)?;
            Op::Phase(ancilla(&a[0])?)
        }
        "apply-string" => {
            at_least(2)?;
            Op::ApplyString(pauli(&a[0])?, a[1..].iter().map(|s| edge(s)).collect::<Result<_>>()?)
        }
        "measure-string" => {
            at_least(2)?;
            Op::MeasureString(pauli(&a[0])?, a[1..].iter().map(|s| edge(s)).collect::<Result<_>>()?)
        }
        "error-correct" => {
            arity(0)?;
            Op::ErrorCorrect
        }
        "stabilizers" => {
            arity(0)?;
            Op::Stabilizers
        }
        other => return Err(line_error(op.line, format!("unknown operation {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# pair creation
group = s3
lattice = 2 3
boundary = open
---
prepare-gs postselect
magnetic-pair c+ f[0,0] f[0,1]
fuse-magnetic f[0,0] f[0,1] c+   # back to vacuum
";

    #[test]
    fn parses_and_resolves() {
        let s = ProtocolScript::parse(SAMPLE).unwrap();
        assert_eq!(s.lattice, (2, 3));
        assert_eq!(s.ops.len(), 3);
        assert_eq!(s.ops[1].line, 7);
        let (_, lat, ops) = s.validate().unwrap();
        assert_eq!(
            ops[1],
            Op::MagneticPair(1, lat.face(0, 0).unwrap(), lat.face(0, 1).unwrap())
        );
    }

    #[test]
    fn names_the_bad_face() {
        let text = SAMPLE.replace("f[0,1] c+", "f[0,7] c+");
        let err = ProtocolScript::parse(&text).unwrap_err().to_string();
        assert!(err.contains("line 8") && err.contains("f[0,7]"), "{err}");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(ProtocolScript::parse("group = s3\nlattice = 2 2\n").is_err());
        assert!(ProtocolScript::parse("group = s3\nlattice = 2\n---\n").is_err());
        assert!(ProtocolScript::parse("group = s4\nlattice = 2 2\n---\n").is_err());
        assert!(ProtocolScript::parse("group = s3\nlattice = 2 2\nmode = sample\n---\n").is_err());
        assert!(ProtocolScript::parse("group = s3\nlattice = 2 2\n---\nfrobnicate\n").is_err());
        assert!(
            ProtocolScript::parse("group = s3\nlattice = 3 2\nboundary = rough-smooth\n---\ntoric-prepare\n").is_err()
        );
        assert!(ProtocolScript::parse(
            "group = z2\nlattice = 3 2\nboundary = rough-smooth\n---\ntoric-prepare\nprepare-gs\n"
        )
        .is_err());
    }

    #[test]
    fn empty_operation_list_is_valid() {
        let s = ProtocolScript::parse("group = z2\nlattice = 2 2\n---\n").unwrap();
        assert!(s.ops.is_empty());
    }
}
