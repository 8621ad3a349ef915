use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{c, c_one, c_phase, c_zero, Real};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    /// `e^{-iθX/2}`
    Rx,
    /// `e^{-iθY/2}`
    Ry,
    /// `e^{-iθZ/2}`
    Rz,
    /// `e^{-iθ Z⊗Z}` (no factor 1/2).
    Rzz,
    H,
    X,
    /// Control is `targets[0]`.
    Cnot,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rzz | GateKind::Cnot => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rzz)
    }

    pub const ALL: [GateKind; 7] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Rzz,
        GateKind::H,
        GateKind::X,
        GateKind::Cnot,
    ];
}

/// Where a rotation gate takes its angle from.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    None,
    Fixed(f64),
    Param(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub angle: Angle,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>, angle: Angle) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{kind:?} takes {} target(s), got {}",
                kind.arity(),
                targets.len()
            )));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::InvalidArgument(format!(
                "{kind:?} targets must be distinct"
            )));
        }
        match (kind.is_rotation(), angle) {
            (true, Angle::None) => {
                return Err(Error::InvalidArgument(format!("{kind:?} needs an angle")))
            }
            (false, Angle::Fixed(_) | Angle::Param(_)) => {
                return Err(Error::InvalidArgument(format!("{kind:?} takes no angle")))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            targets,
            angle,
        })
    }

    pub fn resolve_angle<R: Real>(&self, params: &[R]) -> R {
        match self.angle {
            Angle::None => R::zero(),
            Angle::Fixed(a) => R::lit(a),
            Angle::Param(slot) => params[slot],
        }
    }

    /// Dense unitary in the little-endian basis of `targets` (targets[0] is the low bit).
    pub fn unitary<R: Real>(&self, theta: R) -> CMatrix<R> {
        gate_unitary(self.kind, theta)
    }
}

pub fn gate_unitary<R: Real>(kind: GateKind, theta: R) -> CMatrix<R> {
    let z = c_zero::<R>();
    let o = c_one::<R>();
    let half = theta * R::lit(0.5);
    let (cs, sn) = (half.cos(), half.sin());
    let data = match kind {
        GateKind::Rx => vec![c(cs, R::zero()), c(R::zero(), -sn), c(R::zero(), -sn), c(cs, R::zero())],
        GateKind::Ry => vec![c(cs, R::zero()), c(-sn, R::zero()), c(sn, R::zero()), c(cs, R::zero())],
        GateKind::Rz => vec![c_phase(-half), z, z, c_phase(half)],
        GateKind::H => {
            let s = R::FRAC_1_SQRT_2();
            vec![c(s, R::zero()), c(s, R::zero()), c(s, R::zero()), c(-s, R::zero())]
        }
        GateKind::X => vec![z, o, o, z],
        GateKind::Rzz => {
            let m = c_phase(-theta);
            let p = c_phase(theta);
            return CMatrix::from_fn(4, 4, |r, col| {
                if r != col {
                    z
                } else if r == 0 || r == 3 {
                    m
                } else {
                    p
                }
            });
        }
        GateKind::Cnot => {
            // control = bit 0, target = bit 1: |c t⟩ index = c + 2t
            let perm = [0usize, 3, 2, 1];
            return CMatrix::from_fn(4, 4, |r, col| if perm[col] == r { o } else { z });
        }
    };
    CMatrix::from_vec(2, 2, data).expect("2x2")
}
