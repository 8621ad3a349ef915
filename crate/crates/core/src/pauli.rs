//! Pauli strings, spin Hamiltonians and their split across subsystems.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Real;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(ch: char) -> Option<Self> {
        match ch {
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Paulis. Identity factors are never stored;
/// factors are kept sorted by qubit index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString(Vec<(usize, Pauli)>);

impl PauliString {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn new(factors: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        let mut v: Vec<(usize, Pauli)> = factors.into_iter().collect();
        v.sort();
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "qubit {} appears twice in a Pauli string",
                    w[0].0
                )));
            }
        }
        Ok(Self(v))
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        Self(vec![(qubit, p)])
    }

    pub fn pair(a: usize, pa: Pauli, b: usize, pb: Pauli) -> Self {
        Self::new([(a, pa), (b, pb)]).expect("distinct qubits")
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.0.last().map(|f| f.0)
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        self.0
            .binary_search_by_key(&qubit, |f| f.0)
            .ok()
            .map(|i| self.0[i].1)
    }

    pub fn num_y(&self) -> usize {
        self.0.iter().filter(|f| f.1 == Pauli::Y).count()
    }

    /// Bit masks for the action `P|b⟩ = i^{#Y} (-1)^{|b & z|} |b ^ x⟩`.
    pub fn masks(&self) -> (usize, usize) {
        let mut x = 0usize;
        let mut z = 0usize;
        for &(q, p) in &self.0 {
            match p {
                Pauli::X => x |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                Pauli::Z => z |= 1 << q,
            }
        }
        (x, z)
    }

    /// Relabel qubits through `map`.
    pub fn remapped(&self, mut map: impl FnMut(usize) -> usize) -> Self {
        Self::new(self.0.iter().map(|&(q, p)| (map(q), p))).expect("injective relabelling")
    }

    /// Product with a string on disjoint qubits.
    pub fn disjoint_product(&self, other: &Self) -> Result<Self> {
        Self::new(self.0.iter().chain(other.0.iter()).copied())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        for (i, (q, p)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", p.letter(), q)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let mut chars = tok.chars();
            let letter = chars.next().and_then(Pauli::from_letter).ok_or_else(|| {
                Error::InvalidArgument(format!("bad Pauli factor `{tok}`"))
            })?;
            let qubit: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad qubit index in `{tok}`")))?;
            factors.push((qubit, letter));
        }
        Self::new(factors)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm<R> {
    pub coefficient: R,
    pub string: PauliString,
}

impl<R: Real> PauliTerm<R> {
    pub fn new(coefficient: R, string: PauliString) -> Self {
        Self { coefficient, string }
    }

    pub fn unit(string: PauliString) -> Self {
        Self::new(R::one(), string)
    }
}

/// Real-weighted sum of Pauli strings; Hermitian by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian<R> {
    num_qubits: usize,
    terms: Vec<PauliTerm<R>>,
    lookup: BTreeMap<PauliString, usize>,
}

impl<R: Real> Hamiltonian<R> {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            terms: Vec::new(),
            lookup: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        num_qubits: usize,
        terms: impl IntoIterator<Item = (R, PauliString)>,
    ) -> Result<Self> {
        let mut h = Self::new(num_qubits);
        for (c, s) in terms {
            h.add_term(c, s)?;
        }
        Ok(h)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm<R>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coefficient * string`, merging with an existing identical string.
    /// Terms whose coefficient is exactly zero are dropped.
    pub fn add_term(&mut self, coefficient: R, string: PauliString) -> Result<()> {
        if let Some(q) = string.max_qubit() {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        if let Some(&idx) = self.lookup.get(&string) {
            let merged = self.terms[idx].coefficient + coefficient;
            if merged == R::zero() {
                self.terms.remove(idx);
                self.rebuild_lookup();
            } else {
                self.terms[idx].coefficient = merged;
            }
        } else if coefficient != R::zero() {
            self.lookup.insert(string.clone(), self.terms.len());
            self.terms.push(PauliTerm::new(coefficient, string));
        }
        Ok(())
    }

    fn rebuild_lookup(&mut self) {
        self.lookup = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.string.clone(), i))
            .collect();
    }

    /// Same Hamiltonian with coefficients converted to another scalar type.
    pub fn cast<S: Real>(&self) -> Hamiltonian<S> {
        Hamiltonian {
            num_qubits: self.num_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(S::lit(t.coefficient.to_f64_lossy()), t.string.clone()))
                .collect(),
            lookup: self.lookup.clone(),
        }
    }

    pub fn coefficient_of(&self, string: &PauliString) -> Option<R> {
        self.lookup.get(string).map(|&i| self.terms[i].coefficient)
    }

    /// Terms sorted by Pauli string; a canonical order independent of insertion.
    pub fn sorted_terms(&self) -> Vec<PauliTerm<R>> {
        self.lookup
            .values()
            .map(|&i| self.terms[i].clone())
            .collect()
    }

    /// Line-oriented text form: a `# num_qubits N` header then `coefficient pauli_string`
    /// per line, e.g. `0.5 X3` or `1 Z0 Z1`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# num_qubits {}\n", self.num_qubits);
        for t in &self.terms {
            out.push_str(&format!("{} {}\n", t.coefficient, t.string));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut num_qubits: Option<usize> = None;
        let mut parsed = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut toks = rest.split_whitespace();
                if toks.next() == Some("num_qubits") {
                    let n = toks.next().and_then(|t| t.parse().ok()).ok_or(Error::Parse {
                        line: lineno + 1,
                        msg: "num_qubits header needs a count".into(),
                    })?;
                    num_qubits = Some(n);
                }
                continue;
            }
            let (coef, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let coef: f64 = coef.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad coefficient `{coef}`"),
            })?;
            let string: PauliString = rest.parse().map_err(|e: Error| Error::Parse {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            parsed.push((R::lit(coef), string));
        }
        let inferred = parsed
            .iter()
            .filter_map(|(_, s)| s.max_qubit())
            .max()
            .map_or(0, |q| q + 1);
        let n = num_qubits.unwrap_or(inferred);
        Self::from_terms(n, parsed)
    }
}

/// Assignment of global qubits to `k` subsystems of `n` qubits each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    k: usize,
    n: usize,
    assignment: Vec<(usize, usize)>,
}

impl SubsystemLayout {
    /// Global qubit `j*n + i` is local qubit `i` of subsystem `j`.
    pub fn block_major(k: usize, n: usize) -> Self {
        let assignment = (0..k * n).map(|q| (q / n, q % n)).collect();
        Self { k, n, assignment }
    }

    pub fn from_assignment(k: usize, n: usize, assignment: Vec<(usize, usize)>) -> Result<Self> {
        if assignment.len() != k * n {
            return Err(Error::InvalidArgument(format!(
                "layout of {k}x{n} needs {} entries, got {}",
                k * n,
                assignment.len()
            )));
        }
        let mut seen = vec![false; k * n];
        for &(s, l) in &assignment {
            if s >= k || l >= n || std::mem::replace(&mut seen[s * n + l], true) {
                return Err(Error::InvalidArgument(
                    "layout assignment is not a bijection".into(),
                ));
            }
        }
        Ok(Self { k, n, assignment })
    }

    pub fn num_subsystems(&self) -> usize {
        self.k
    }

    pub fn subsystem_size(&self) -> usize {
        self.n
    }

    pub fn num_qubits(&self) -> usize {
        self.k * self.n
    }

    pub fn locate(&self, qubit: usize) -> Option<(usize, usize)> {
        self.assignment.get(qubit).copied()
    }

    pub fn global(&self, subsystem: usize, local: usize) -> usize {
        self.assignment
            .iter()
            .position(|&a| a == (subsystem, local))
            .expect("layout is a bijection")
    }
}

/// One local Pauli string (identity allowed) per subsystem.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductObservable {
    pub factors: Vec<PauliString>,
}

impl ProductObservable {
    pub fn identity(k: usize) -> Self {
        Self {
            factors: vec![PauliString::identity(); k],
        }
    }

    /// Number of subsystems the observable acts on non-trivially.
    pub fn support(&self) -> usize {
        self.factors.iter().filter(|f| !f.is_identity()).count()
    }

    /// Reassemble into a global Pauli string.
    pub fn to_global(&self, layout: &SubsystemLayout) -> PauliString {
        let mut factors = Vec::new();
        for (s, f) in self.factors.iter().enumerate() {
            for &(l, p) in f.factors() {
                factors.push((layout.global(s, l), p));
            }
        }
        PauliString::new(factors).expect("layout is a bijection")
    }
}

/// Rewrite each term as `coefficient * ⊗_s O_s` over the layout's subsystems.
pub fn decompose_for_layout<R: Real>(
    h: &Hamiltonian<R>,
    layout: &SubsystemLayout,
) -> Result<Vec<(R, ProductObservable)>> {
    let mut out = Vec::with_capacity(h.len());
    for term in h.terms() {
        let mut per: Vec<Vec<(usize, Pauli)>> = vec![Vec::new(); layout.num_subsystems()];
        for &(q, p) in term.string.factors() {
            let (s, l) = layout.locate(q).ok_or(Error::QubitOutOfRange {
                index: q,
                num_qubits: layout.num_qubits(),
            })?;
            per[s].push((l, p));
        }
        let factors = per
            .into_iter()
            .map(PauliString::new)
            .collect::<Result<Vec<_>>>()?;
        out.push((term.coefficient, ProductObservable { factors }));
    }
    Ok(out)
}

/// Coupling and field strengths of the spin models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldStrengths {
    /// Intra-subsystem ZZ coupling.
    pub f: f64,
    /// Transverse field (X).
    pub g: f64,
    /// Longitudinal field (Z).
    pub h: f64,
}

impl Default for FieldStrengths {
    fn default() -> Self {
        Self {
            f: 1.0,
            g: 0.5,
            h: 0.318,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinModel {
    /// Chain of `k` blocks of `n` spins, blocks coupled at their boundary.
    #[serde(rename = "1d_cluster")]
    Cluster1d,
    /// `n x k` web; each row of `n` spins is a subsystem, rows coupled vertically.
    #[serde(rename = "2d_web")]
    Web2d,
}

impl SpinModel {
    pub fn build<R: Real>(
        self,
        n: usize,
        k: usize,
        lambda: f64,
        seed: u64,
        fields: &FieldStrengths,
    ) -> Result<(Hamiltonian<R>, SubsystemLayout)> {
        match self {
            SpinModel::Cluster1d => build_1d_cluster_with(n, k, lambda, seed, fields),
            SpinModel::Web2d => build_2d_web_with(n, k, lambda, seed, fields),
        }
    }

    /// The Hamiltonian of one isolated subsystem (identical for every block).
    pub fn block_hamiltonian<R: Real>(self, n: usize, fields: &FieldStrengths) -> Result<Hamiltonian<R>> {
        check_model_args(n, 1, 0.0)?;
        let mut h = Hamiltonian::new(n);
        push_block(&mut h, 0, n, fields)?;
        Ok(h)
    }
}

fn check_model_args(n: usize, k: usize, lambda: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "subsystem size n={n} must be at least 2"
        )));
    }
    if k < 1 {
        return Err(Error::InvalidArgument("need at least one subsystem (k >= 1)".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "coupling scale lambda={lambda} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Nearest-neighbour ZZ chain plus X and Z fields on qubits `offset..offset+n`.
fn push_block<R: Real>(
    h: &mut Hamiltonian<R>,
    offset: usize,
    n: usize,
    fields: &FieldStrengths,
) -> Result<()> {
    for i in 0..n - 1 {
        h.add_term(
            R::lit(fields.f),
            PauliString::pair(offset + i, Pauli::Z, offset + i + 1, Pauli::Z),
        )?;
    }
    for i in 0..n {
        h.add_term(R::lit(fields.g), PauliString::single(offset + i, Pauli::X))?;
        h.add_term(R::lit(fields.h), PauliString::single(offset + i, Pauli::Z))?;
    }
    Ok(())
}

/// 1D spin cluster with default fields.
pub fn build_1d_cluster<R: Real>(
    n: usize,
    k: usize,
    lambda: f64,
    seed: u64,
) -> Result<(Hamiltonian<R>, SubsystemLayout)> {
    build_1d_cluster_with(n, k, lambda, seed, &FieldStrengths::default())
}

/// `H = Σ_j H_j + λ Σ_j f_j Z_{jn-1} Z_{jn}` with `f_j ~ U[0,1)` drawn in order `j = 1..k-1`.
pub fn build_1d_cluster_with<R: Real>(
    n: usize,
    k: usize,
    lambda: f64,
    seed: u64,
    fields: &FieldStrengths,
) -> Result<(Hamiltonian<R>, SubsystemLayout)> {
    check_model_args(n, k, lambda)?;
    let mut h = Hamiltonian::new(n * k);
    for j in 0..k {
        push_block(&mut h, j * n, n, fields)?;
    }
    let mut rng = SeededRng::new(seed);
    for j in 1..k {
        let fj = rng.uniform();
        h.add_term(
            R::lit(lambda * fj),
            PauliString::pair(j * n - 1, Pauli::Z, j * n, Pauli::Z),
        )?;
    }
    Ok((h, SubsystemLayout::block_major(k, n)))
}

/// 2D spin web with default fields.
pub fn build_2d_web<R: Real>(
    n: usize,
    k: usize,
    lambda: f64,
    seed: u64,
) -> Result<(Hamiltonian<R>, SubsystemLayout)> {
    build_2d_web_with(n, k, lambda, seed, &FieldStrengths::default())
}

/// Rows of `n` sites (row-major numbering `j*n + i`), vertical couplings
/// `λ f_{j,i} Z_{j,i} Z_{j+1,i}` with `f_{j,i} ~ U[0,1)` drawn row pair by row pair.
pub fn build_2d_web_with<R: Real>(
    n: usize,
    k: usize,
    lambda: f64,
    seed: u64,
    fields: &FieldStrengths,
) -> Result<(Hamiltonian<R>, SubsystemLayout)> {
    check_model_args(n, k, lambda)?;
    let mut h = Hamiltonian::new(n * k);
    for j in 0..k {
        push_block(&mut h, j * n, n, fields)?;
    }
    let mut rng = SeededRng::new(seed);
    for j in 0..k.saturating_sub(1) {
        for i in 0..n {
            let fji = rng.uniform();
            h.add_term(
                R::lit(lambda * fji),
                PauliString::pair(j * n + i, Pauli::Z, (j + 1) * n + i, Pauli::Z),
            )?;
        }
    }
    Ok((h, SubsystemLayout::block_major(k, n)))
}
