//! Dense statevector simulation.
//!
//! Bit convention: qubit `q` is bit `q` of the amplitude index (qubit 0 is the
//! least significant bit). Bitstrings written as text are big-endian, so
//! `"100"` on three qubits has qubit 2 set and addresses amplitude 4.

mod circuit;
mod gate;

pub use circuit::{extra_layer_blocks, hardware_efficient_ansatz, hea_param_count, Circuit};
pub use gate::{gate_unitary, Angle, GateKind, GateOp};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pauli::{Hamiltonian, PauliString, PauliTerm};
use crate::rng::SeededRng;
use crate::scalar::{c_i, c_one, c_phase, c_zero, Complex, Real};

/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 26;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<R> {
    num_qubits: usize,
    amps: Vec<Complex<R>>,
}

impl<R: Real> StateVector<R> {
    /// `|0…0⟩`.
    pub fn zero_state(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        assert!(num_qubits <= MAX_QUBITS, "register too large");
        let mut amps = vec![c_zero(); 1 << num_qubits];
        amps[index] = c_one();
        Self { num_qubits, amps }
    }

    /// Computational basis state from a big-endian bitstring (`"01"` sets qubit 0).
    pub fn from_bitstring(num_qubits: usize, bits: &str) -> Result<Self> {
        if bits.chars().count() != num_qubits {
            return Err(Error::Dimension(format!(
                "bitstring `{bits}` has {} bits, register has {num_qubits}",
                bits.chars().count()
            )));
        }
        let mut index = 0usize;
        for (pos, ch) in bits.chars().enumerate() {
            let q = num_qubits - 1 - pos;
            match ch {
                '0' => {}
                '1' => index |= 1 << q,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "bitstring `{bits}` contains `{ch}`"
                    )))
                }
            }
        }
        Ok(Self::basis(num_qubits, index))
    }

    pub fn from_amplitudes(amps: Vec<Complex<R>>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex<R>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex<R>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<R>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> R {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> R {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > R::zero() {
            for z in &mut self.amps {
                *z /= n;
            }
        }
    }

    pub fn scaled(&self, s: Complex<R>) -> Self {
        Self {
            num_qubits: self.num_qubits,
            amps: self.amps.iter().map(|z| *z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: Complex<R>, other: &Self) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += *b * s;
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            num_qubits: self.num_qubits,
            amps: vec![c_zero(); self.dim()],
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Apply a 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, m: [Complex<R>; 4]) {
        let stride = 1usize << q;
        let dim = self.dim();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = self.amps[i0];
                let a1 = self.amps[i1];
                self.amps[i0] = m[0] * a0 + m[1] * a1;
                self.amps[i1] = m[2] * a0 + m[3] * a1;
            }
            base += stride << 1;
        }
    }

    fn apply_rzz(&mut self, a: usize, b: usize, theta: R) {
        let minus = c_phase(-theta);
        let plus = c_phase(theta);
        let mask = (1usize << a) | (1usize << b);
        for (idx, z) in self.amps.iter_mut().enumerate() {
            let parity = (idx & mask).count_ones() & 1;
            *z *= if parity == 0 { minus } else { plus };
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cm = 1usize << control;
        let tm = 1usize << target;
        for idx in 0..self.dim() {
            if idx & cm != 0 && idx & tm == 0 {
                self.amps.swap(idx, idx | tm);
            }
        }
    }

    pub fn apply_gate(&mut self, op: &GateOp, theta: R) -> Result<()> {
        for &t in &op.targets {
            self.check_qubit(t)?;
        }
        match op.kind {
            GateKind::Rzz => self.apply_rzz(op.targets[0], op.targets[1], theta),
            GateKind::Cnot => self.apply_cnot(op.targets[0], op.targets[1]),
            kind => {
                let u = gate_unitary::<R>(kind, theta);
                let m = [u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]];
                self.apply_1q(op.targets[0], m);
            }
        }
        Ok(())
    }

    /// Apply every gate of `circuit` in order, in place.
    pub fn apply_circuit_in_place(&mut self, circuit: &Circuit, params: &[R]) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::Dimension(format!(
                "circuit on {} qubits applied to a {}-qubit state",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        if params.len() != circuit.num_params() {
            return Err(Error::Dimension(format!(
                "circuit takes {} parameters, got {}",
                circuit.num_params(),
                params.len()
            )));
        }
        for op in circuit.ops() {
            let theta = op.resolve_angle(params);
            self.apply_gate(op, theta)?;
        }
        Ok(())
    }

    /// Apply a dense operator to a register. `qubits[0]` is the low bit of the
    /// operator's row/column index.
    pub fn apply_operator(&self, qubits: &[usize], op: &CMatrix<R>) -> Result<Self> {
        let m = qubits.len();
        if op.rows() != 1 << m || op.cols() != 1 << m {
            return Err(Error::Dimension(format!(
                "operator of size {}x{} on a {m}-qubit register",
                op.rows(),
                op.cols()
            )));
        }
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let reg_mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        let scatter = |r: usize| -> usize {
            qubits
                .iter()
                .enumerate()
                .filter(|(bit, _)| r >> bit & 1 == 1)
                .map(|(_, &q)| 1usize << q)
                .sum()
        };
        let offsets: Vec<usize> = (0..1 << m).map(scatter).collect();
        let mut out = self.zeros_like();
        let mut local = vec![c_zero::<R>(); 1 << m];
        for rest in 0..self.dim() {
            if rest & reg_mask != 0 {
                continue;
            }
            for (r, off) in offsets.iter().enumerate() {
                local[r] = self.amps[rest | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = c_zero();
                for (col, &v) in local.iter().enumerate() {
                    acc += op[(r, col)] * v;
                }
                out.amps[rest | off] = acc;
            }
        }
        Ok(out)
    }

    /// `P|ψ⟩` for a Pauli string.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<Self> {
        if let Some(q) = p.max_qubit() {
            self.check_qubit(q)?;
        }
        let (x, z) = p.masks();
        let global = i_power::<R>(p.num_y());
        let mut out = self.zeros_like();
        for (b, amp) in self.amps.iter().enumerate() {
            let sign = if (b & z).count_ones() & 1 == 1 { -R::one() } else { R::one() };
            out.amps[b ^ x] = *amp * global.scale(sign);
        }
        Ok(out)
    }

    /// `⟨ψ|P|ψ⟩` for a unit Pauli string.
    pub fn pauli_string_expectation(&self, p: &PauliString) -> Result<R> {
        Ok(self.pauli_string_matrix_element(self, p)?.re)
    }

    /// `⟨bra| P |self⟩` without materialising `P|self⟩`.
    pub fn pauli_string_matrix_element(&self, bra: &Self, p: &PauliString) -> Result<Complex<R>> {
        if bra.dim() != self.dim() {
            return Err(Error::Dimension("matrix element between different registers".into()));
        }
        if let Some(q) = p.max_qubit() {
            self.check_qubit(q)?;
        }
        let (x, z) = p.masks();
        let mut acc = c_zero::<R>();
        for (b, amp) in self.amps.iter().enumerate() {
            let term = bra.amps[b ^ x].conj() * *amp;
            if (b & z).count_ones() & 1 == 1 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        Ok(acc * i_power::<R>(p.num_y()))
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn energy(&self, h: &Hamiltonian<R>) -> Result<R> {
        let mut e = R::zero();
        for t in h.terms() {
            e += pauli_expectation(self, t)?;
        }
        Ok(e)
    }

    /// Remove `qubits` by projecting them onto the basis value `value`
    /// (`qubits[0]` is its low bit): returns `(⟨value| ⊗ I) |ψ⟩`, unnormalised.
    /// Remaining qubits keep their relative order.
    pub fn project_register(&self, qubits: &[usize], value: usize) -> Result<Self> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let mut fixed_mask = 0usize;
        let mut fixed_bits = 0usize;
        for (bit, &q) in qubits.iter().enumerate() {
            if fixed_mask & (1 << q) != 0 {
                return Err(Error::InvalidArgument(format!("qubit {q} projected twice")));
            }
            fixed_mask |= 1 << q;
            if value >> bit & 1 == 1 {
                fixed_bits |= 1 << q;
            }
        }
        let keep: Vec<usize> = (0..self.num_qubits).filter(|q| fixed_mask & (1 << q) == 0).collect();
        let mut amps = vec![c_zero(); 1 << keep.len()];
        for (r, amp) in amps.iter_mut().enumerate() {
            let mut idx = fixed_bits;
            for (bit, &q) in keep.iter().enumerate() {
                if r >> bit & 1 == 1 {
                    idx |= 1 << q;
                }
            }
            *amp = self.amps[idx];
        }
        Ok(Self {
            num_qubits: keep.len(),
            amps,
        })
    }

    /// `low ⊗ high`: `low` occupies the least significant qubits.
    pub fn kron(low: &Self, high: &Self) -> Self {
        let mut amps = Vec::with_capacity(low.dim() * high.dim());
        for h in &high.amps {
            for l in &low.amps {
                amps.push(*l * *h);
            }
        }
        Self {
            num_qubits: low.num_qubits + high.num_qubits,
            amps,
        }
    }

    /// Reorder qubits: new qubit `i` is old qubit `order[i]`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.num_qubits {
            return Err(Error::Dimension("permutation length".into()));
        }
        let mut seen = vec![false; self.num_qubits];
        for &o in order {
            if o >= self.num_qubits || std::mem::replace(&mut seen[o], true) {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
        }
        let mut out = self.zeros_like();
        for (new_idx, amp) in out.amps.iter_mut().enumerate() {
            let mut old = 0usize;
            for (i, &o) in order.iter().enumerate() {
                if new_idx >> i & 1 == 1 {
                    old |= 1 << o;
                }
            }
            *amp = self.amps[old];
        }
        Ok(out)
    }
}

fn i_power<R: Real>(k: usize) -> Complex<R> {
    match k % 4 {
        0 => c_one(),
        1 => c_i(),
        2 => -c_one::<R>(),
        _ => -c_i::<R>(),
    }
}

/// Basis state from a big-endian bitstring.
pub fn init_basis_state<R: Real>(num_qubits: usize, bits: &str) -> Result<StateVector<R>> {
    StateVector::from_bitstring(num_qubits, bits)
}

/// Returns `U(params)|s⟩`.
pub fn apply_circuit<R: Real>(s: &StateVector<R>, c: &Circuit, params: &[R]) -> Result<StateVector<R>> {
    let mut out = s.clone();
    out.apply_circuit_in_place(c, params)?;
    Ok(out)
}

/// `coefficient · ⟨s|P|s⟩`.
pub fn pauli_expectation<R: Real>(s: &StateVector<R>, t: &PauliTerm<R>) -> Result<R> {
    Ok(t.coefficient * s.pauli_string_expectation(&t.string)?)
}

/// `⟨a|b⟩`.
pub fn inner_product<R: Real>(a: &StateVector<R>, b: &StateVector<R>) -> Result<Complex<R>> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "inner product of {}- and {}-qubit states",
            a.num_qubits(),
            b.num_qubits()
        )));
    }
    Ok(raw_inner(a.amplitudes(), b.amplitudes()))
}

#[inline]
pub(crate) fn raw_inner<R: Real>(a: &[Complex<R>], b: &[Complex<R>]) -> Complex<R> {
    let mut re = R::zero();
    let mut im = R::zero();
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex::new(re, im)
}

/// Mean of `n` draws of a ±1 variable with `P(+1) = p_plus`.
pub fn sample_pm_one_mean(p_plus: f64, shots: usize, rng: &mut SeededRng) -> f64 {
    let p = p_plus.clamp(0.0, 1.0);
    let plus = (0..shots).filter(|_| rng.uniform() < p).count();
    (2.0 * plus as f64 - shots as f64) / shots as f64
}

/// Monte-Carlo estimate of [`pauli_expectation`] from `shots` projective
/// measurements of the term's Pauli string (eigenvalues ±1). `shots == 0`
/// returns the exact value.
pub fn sample_pauli_expectation<R: Real>(
    s: &StateVector<R>,
    t: &PauliTerm<R>,
    shots: usize,
    seed: u64,
) -> Result<R> {
    let exact = pauli_expectation(s, t)?;
    if shots == 0 {
        return Ok(exact);
    }
    let unit = s.pauli_string_expectation(&t.string)?.to_f64_lossy() / s.norm_sqr().to_f64_lossy();
    let mut rng = SeededRng::new(seed);
    let mean = sample_pm_one_mean((1.0 + unit) / 2.0, shots, &mut rng);
    Ok(t.coefficient * R::lit(mean) * s.norm_sqr())
}

#[cfg(test)]
mod tests;
