use serde::{Deserialize, Serialize};

use super::gate::{Angle, GateKind, GateOp};
use crate::error::{Error, Result};

/// Parameterised gate sequence on a fixed register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    num_qubits: usize,
    num_params: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            num_params: 0,
            ops: Vec::new(),
        }
    }

    /// Identity circuit (no gates) on `num_qubits`.
    pub fn identity(num_qubits: usize) -> Self {
        Self::new(num_qubits)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        for &t in &op.targets {
            if t >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: t,
                    num_qubits: self.num_qubits,
                });
            }
        }
        if let Angle::Param(slot) = op.angle {
            self.num_params = self.num_params.max(slot + 1);
        }
        self.ops.push(op);
        Ok(())
    }

    /// Append a rotation driven by a fresh parameter slot; returns the slot.
    pub fn push_param(&mut self, kind: GateKind, targets: &[usize]) -> Result<usize> {
        let slot = self.num_params;
        self.push(GateOp::new(kind, targets.to_vec(), Angle::Param(slot))?)?;
        Ok(slot)
    }

    pub fn push_fixed(&mut self, kind: GateKind, targets: &[usize], angle: f64) -> Result<()> {
        self.push(GateOp::new(kind, targets.to_vec(), Angle::Fixed(angle))?)
    }

    pub fn push_gate(&mut self, kind: GateKind, targets: &[usize]) -> Result<()> {
        self.push(GateOp::new(kind, targets.to_vec(), Angle::None)?)
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.ops.iter().filter(|o| o.kind.arity() == 2).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialises")
    }

    /// Parse and re-validate a JSON circuit description.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Circuit = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("circuit JSON: {e}")))?;
        let mut c = Circuit::new(raw.num_qubits);
        for op in raw.ops {
            c.push(GateOp::new(op.kind, op.targets, op.angle)?)?;
        }
        if raw.num_params < c.num_params {
            return Err(Error::InvalidArgument(format!(
                "circuit declares {} params but uses slot {}",
                raw.num_params,
                c.num_params - 1
            )));
        }
        c.num_params = raw.num_params;
        Ok(c)
    }
}

/// Blocks (1-based) that carry the extra R_Y layer: the first and `⌊d/2⌋+1`-th.
pub fn extra_layer_blocks(d: usize) -> Vec<usize> {
    let mut blocks = vec![1, d / 2 + 1];
    blocks.dedup();
    blocks.retain(|&b| b <= d);
    blocks
}

/// Number of parameters of [`hardware_efficient_ansatz`]:
/// `d·(2n + n−1) + n·|extra blocks|`.
pub fn hea_param_count(n: usize, d: usize) -> usize {
    d * (2 * n + n.saturating_sub(1)) + n * extra_layer_blocks(d).len()
}

/// Hardware-efficient ansatz with `d` repetitions of
/// `[R_Y layer on extra blocks] · R_X then R_Z on every qubit · R_ZZ ladder`.
///
/// Slot layout follows gate order: within a block, the optional R_Y layer
/// (qubits ascending), then `R_X(q), R_Z(q)` per qubit, then the ladder pairs
/// `(0,1), (1,2), …, (n−2, n−1)`.
pub fn hardware_efficient_ansatz(n: usize, d: usize) -> Result<Circuit> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "ansatz needs n >= 1 and d >= 1 (got n={n}, d={d})"
        )));
    }
    let extra = extra_layer_blocks(d);
    let mut c = Circuit::new(n);
    for block in 1..=d {
        if extra.contains(&block) {
            for q in 0..n {
                c.push_param(GateKind::Ry, &[q])?;
            }
        }
        for q in 0..n {
            c.push_param(GateKind::Rx, &[q])?;
            c.push_param(GateKind::Rz, &[q])?;
        }
        for q in 0..n.saturating_sub(1) {
            c.push_param(GateKind::Rzz, &[q, q + 1])?;
        }
    }
    debug_assert_eq!(c.num_params(), hea_param_count(n, d));
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_single_block() {
        let c = hardware_efficient_ansatz(1, 1).unwrap();
        assert_eq!(c.two_qubit_gate_count(), 0);
        assert_eq!(c.num_params(), 3);
        assert_eq!(hea_param_count(1, 1), 3);
    }

    #[test]
    fn eight_qubits_eight_blocks() {
        let c = hardware_efficient_ansatz(8, 8).unwrap();
        assert_eq!(c.two_qubit_gate_count(), 8 * 7);
        assert_eq!(extra_layer_blocks(8), vec![1, 5]);
        assert_eq!(c.num_params(), 8 * 23 + 16);
        let v = hardware_efficient_ansatz(4, 4).unwrap();
        assert_eq!(extra_layer_blocks(4), vec![1, 3]);
        assert_eq!(v.num_params(), 4 * 11 + 8);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(hardware_efficient_ansatz(0, 2).is_err());
        assert!(hardware_efficient_ansatz(2, 0).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = hardware_efficient_ansatz(3, 2).unwrap();
        let back = Circuit::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"num_qubits":1,"num_params":0,"ops":[{"kind":"RX","targets":[3],"angle":{"fixed":1.0}}]}"#;
        assert!(Circuit::from_json(bad).is_err());
        let bad_arity = r#"{"num_qubits":2,"num_params":1,"ops":[{"kind":"RZZ","targets":[0],"angle":{"param":0}}]}"#;
        assert!(Circuit::from_json(bad_arity).is_err());
    }

    #[test]
    fn gate_construction_checks() {
        assert!(GateOp::new(GateKind::Cnot, vec![1, 1], Angle::None).is_err());
        assert!(GateOp::new(GateKind::Rx, vec![0], Angle::None).is_err());
        assert!(GateOp::new(GateKind::H, vec![0], Angle::Fixed(1.0)).is_err());
    }
}
