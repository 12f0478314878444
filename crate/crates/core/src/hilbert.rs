//! Pure states of N photons carrying a polarization qubit and a spatial-mode
//! qubit each, plus the canonical Bell/GHZ labels used to name them.
//!
//! A [`PureState`] is stored sparsely as a map from [`Branch`] (a joint basis
//! ket together with the integer phase tags of every probe beam) to a complex
//! amplitude. Probe phases are exact integers in units of the probe's
//! [`ProbeUnit`]; they are never converted to radians.
//!
//! Bit strings follow the label convention `ab...z`: photon 0 is the leftmost
//! character and the most significant bit of the binary value.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped, and norms/fidelities are
/// compared against 1 at this tolerance.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn bit(self) -> bool {
        matches!(self, Polarization::V)
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Polarization::V
        } else {
            Polarization::H
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpatialMode {
    M1,
    M2,
}

impl SpatialMode {
    pub fn bit(self) -> bool {
        matches!(self, SpatialMode::M2)
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            SpatialMode::M2
        } else {
            SpatialMode::M1
        }
    }

    /// 1-based rail number as printed on detector ports (`a1`, `b2`, ...).
    pub fn rail(self) -> u8 {
        match self {
            SpatialMode::M1 => 1,
            SpatialMode::M2 => 2,
        }
    }
}

/// State of one photon in the joint basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Photon {
    pub pol: Polarization,
    pub mode: SpatialMode,
}

impl Photon {
    pub const fn new(pol: Polarization, mode: SpatialMode) -> Self {
        Self { pol, mode }
    }
}

/// Joint basis ket of N ≤ 30 photons, packed two bits per photon with
/// photon 0 most significant, so the derived order is lexicographic over
/// (polarization, mode) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisKet {
    n: u8,
    code: u64,
}

impl BasisKet {
    pub const MAX_PHOTONS: usize = 30;

    pub fn new(photons: Vec<Photon>) -> Self {
        assert!(photons.len() <= Self::MAX_PHOTONS, "too many photons");
        let code = photons.iter().fold(0u64, |acc, p| {
            (acc << 2) | (u64::from(p.pol.bit()) << 1) | u64::from(p.mode.bit())
        });
        Self {
            n: photons.len() as u8,
            code,
        }
    }

    /// Builds the ket whose polarization and spatial bit strings have the
    /// given binary values.
    pub fn from_bits(n_photons: usize, pol_bits: u32, spatial_bits: u32) -> Self {
        assert!(n_photons <= Self::MAX_PHOTONS, "too many photons");
        let mut code = 0u64;
        for i in 0..n_photons {
            let shift = n_photons - 1 - i;
            let pol = u64::from((pol_bits >> shift) & 1);
            let mode = u64::from((spatial_bits >> shift) & 1);
            code = (code << 2) | (pol << 1) | mode;
        }
        Self {
            n: n_photons as u8,
            code,
        }
    }

    pub fn photons(&self) -> Vec<Photon> {
        (0..self.len()).map(|i| self.photon(i)).collect()
    }

    pub fn len(&self) -> usize {
        usize::from(self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn shift(&self, index: usize) -> usize {
        2 * (self.len() - 1 - index)
    }

    pub fn photon(&self, index: usize) -> Photon {
        assert!(index < self.len(), "photon index out of range");
        let pair = (self.code >> self.shift(index)) & 0b11;
        Photon::new(
            Polarization::from_bit(pair & 0b10 != 0),
            SpatialMode::from_bit(pair & 0b01 != 0),
        )
    }

    pub fn with_photon(&self, index: usize, photon: Photon) -> Self {
        assert!(index < self.len(), "photon index out of range");
        let shift = self.shift(index);
        let pair = (u64::from(photon.pol.bit()) << 1) | u64::from(photon.mode.bit());
        Self {
            n: self.n,
            code: (self.code & !(0b11 << shift)) | (pair << shift),
        }
    }

    pub fn bits_of(&self, dof: Dof) -> u32 {
        let offset = match dof {
            Dof::Polarization => 1,
            Dof::Spatial => 0,
        };
        (0..self.len()).fold(0, |acc, i| {
            (acc << 1) | ((self.code >> (self.shift(i) + offset)) & 1) as u32
        })
    }
}

/// Accumulated phase of every declared probe, in units of that probe's
/// [`ProbeUnit`]. Stored inline; at most [`ProbeTag::MAX_PROBES`] probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbeTag {
    len: u8,
    counts: [i8; ProbeTag::MAX_PROBES],
}

impl ProbeTag {
    pub const MAX_PROBES: usize = 32;

    pub fn new(counts: Vec<i32>) -> Self {
        assert!(counts.len() <= Self::MAX_PROBES, "too many probes");
        let mut tag = Self::zero(counts.len());
        for (slot, c) in tag.counts.iter_mut().zip(counts) {
            *slot = i8::try_from(c).expect("probe tag out of range");
        }
        tag
    }

    pub fn zero(n_probes: usize) -> Self {
        assert!(n_probes <= Self::MAX_PROBES, "too many probes");
        Self {
            len: n_probes as u8,
            counts: [0; Self::MAX_PROBES],
        }
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn counts(&self) -> Vec<i32> {
        self.counts[..self.len()]
            .iter()
            .map(|&c| i32::from(c))
            .collect()
    }

    pub fn get(&self, probe: usize) -> i32 {
        assert!(probe < self.len(), "probe index out of range");
        i32::from(self.counts[probe])
    }

    pub fn with(&self, probe: usize, count: i32) -> Self {
        assert!(probe < self.len(), "probe index out of range");
        let mut tag = *self;
        tag.counts[probe] = i8::try_from(count).expect("probe tag out of range");
        tag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branch {
    pub ket: BasisKet,
    pub tag: ProbeTag,
}

impl Branch {
    pub fn new(ket: BasisKet, tag: ProbeTag) -> Self {
        Self { ket, tag }
    }
}

/// Phase unit picked up by a probe beam per coupled photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeUnit {
    Theta,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dof {
    Polarization,
    Spatial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_photons: usize,
    probe_units: Vec<ProbeUnit>,
    amplitudes: BTreeMap<Branch, Complex64>,
    measured: Vec<bool>,
}

impl PureState {
    /// Builds a state from explicit branches. Repeated branches are summed;
    /// the result must already be normalized.
    pub fn new(
        n_photons: usize,
        probe_units: Vec<ProbeUnit>,
        entries: impl IntoIterator<Item = (Branch, Complex64)>,
    ) -> Result<Self> {
        let state = Self::collect(n_photons, probe_units, entries)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Like [`PureState::new`] but rescales the amplitudes to unit norm.
    pub fn normalized(
        n_photons: usize,
        probe_units: Vec<ProbeUnit>,
        entries: impl IntoIterator<Item = (Branch, Complex64)>,
    ) -> Result<Self> {
        let state = Self::collect(n_photons, probe_units, entries)?;
        let scale = state.norm_sqr().sqrt();
        Ok(state.scaled(1.0 / scale))
    }

    fn collect(
        n_photons: usize,
        probe_units: Vec<ProbeUnit>,
        entries: impl IntoIterator<Item = (Branch, Complex64)>,
    ) -> Result<Self> {
        if n_photons < 2 {
            return Err(Error::TooFewPhotons(n_photons));
        }
        if n_photons > BasisKet::MAX_PHOTONS {
            return Err(Error::ShapeMismatch(format!(
                "at most {} photons are supported, got {n_photons}",
                BasisKet::MAX_PHOTONS
            )));
        }
        let mut amplitudes: BTreeMap<Branch, Complex64> = BTreeMap::new();
        for (branch, amp) in entries {
            if branch.ket.len() != n_photons {
                return Err(Error::ShapeMismatch(format!(
                    "ket has {} photons, state has {n_photons}",
                    branch.ket.len()
                )));
            }
            if branch.tag.len() != probe_units.len() {
                return Err(Error::ShapeMismatch(format!(
                    "tag has {} probes, state declares {}",
                    branch.tag.len(),
                    probe_units.len()
                )));
            }
            *amplitudes.entry(branch).or_default() += amp;
        }
        amplitudes.retain(|_, a| a.norm() >= TOLERANCE);
        if amplitudes.is_empty() {
            return Err(Error::EmptyState);
        }
        Ok(Self {
            n_photons,
            probe_units,
            amplitudes,
            measured: vec![false; n_photons],
        })
    }

    /// Same shape and measurement bookkeeping as `self`, new amplitudes.
    /// Small amplitudes are pruned; no normalization is applied.
    pub(crate) fn rebuild(&self, entries: impl IntoIterator<Item = (Branch, Complex64)>) -> Self {
        let mut amplitudes: BTreeMap<Branch, Complex64> = BTreeMap::new();
        for (branch, amp) in entries {
            *amplitudes.entry(branch).or_default() += amp;
        }
        amplitudes.retain(|_, a| a.norm() >= TOLERANCE);
        Self {
            n_photons: self.n_photons,
            probe_units: self.probe_units.clone(),
            amplitudes,
            measured: self.measured.clone(),
        }
    }

    pub(crate) fn scaled(mut self, factor: f64) -> Self {
        for amp in self.amplitudes.values_mut() {
            *amp *= factor;
        }
        self.amplitudes.retain(|_, a| a.norm() >= TOLERANCE);
        self
    }

    pub(crate) fn mark_measured(&mut self, photon: usize) {
        self.measured[photon] = true;
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn probe_units(&self) -> &[ProbeUnit] {
        &self.probe_units
    }

    pub fn n_probes(&self) -> usize {
        self.probe_units.len()
    }

    pub fn branches(&self) -> impl Iterator<Item = (&Branch, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, branch: &Branch) -> Complex64 {
        self.amplitudes.get(branch).copied().unwrap_or_default()
    }

    pub fn is_measured(&self, photon: usize) -> bool {
        self.measured[photon]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// The common probe tag if every branch carries the same one.
    pub fn uniform_tag(&self) -> Option<&ProbeTag> {
        let mut tags = self.amplitudes.keys().map(|b| &b.tag);
        let first = tags.next()?;
        tags.all(|t| t == first).then_some(first)
    }

    pub fn check_photon(&self, photon: usize) -> Result<()> {
        if photon >= self.n_photons {
            return Err(Error::IndexOutOfRange {
                what: "photon",
                index: photon,
                limit: self.n_photons,
            });
        }
        Ok(())
    }

    pub fn check_probe(&self, probe: usize) -> Result<()> {
        if probe >= self.probe_units.len() {
            return Err(Error::IndexOutOfRange {
                what: "probe",
                index: probe,
                limit: self.probe_units.len(),
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &PureState) -> Result<()> {
        if self.n_photons != other.n_photons {
            return Err(Error::ShapeMismatch(format!(
                "{} photons vs {}",
                self.n_photons, other.n_photons
            )));
        }
        if self.probe_units != other.probe_units {
            return Err(Error::ShapeMismatch(format!(
                "probe units {:?} vs {:?}",
                self.probe_units, other.probe_units
            )));
        }
        Ok(())
    }

    /// ⟨self|other⟩ over branches, probe tags included.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        self.check_same_shape(other)?;
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let sum = small
            .amplitudes
            .iter()
            .filter_map(|(b, a)| large.amplitudes.get(b).map(|c| (a, c)))
            .map(|(a, c)| {
                if conj_small {
                    a.conj() * c
                } else {
                    c.conj() * a
                }
            })
            .sum();
        Ok(sum)
    }
}

impl std::ops::Neg for PureState {
    type Output = PureState;

    fn neg(self) -> PureState {
        self.scaled(-1.0)
    }
}

/// |⟨a|b⟩|, insensitive to global phase.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm())
}

/// A register of N qubits carried by one degree of freedom, indexed by the
/// binary value of its bit string.
#[derive(Debug, Clone, PartialEq)]
pub struct DofState {
    dof: Dof,
    n_photons: usize,
    amplitudes: BTreeMap<u32, Complex64>,
}

impl DofState {
    pub fn new(
        dof: Dof,
        n_photons: usize,
        entries: impl IntoIterator<Item = (u32, Complex64)>,
    ) -> Result<Self> {
        if n_photons < 2 {
            return Err(Error::TooFewPhotons(n_photons));
        }
        let mut amplitudes: BTreeMap<u32, Complex64> = BTreeMap::new();
        for (bits, amp) in entries {
            *amplitudes.entry(bits).or_default() += amp;
        }
        amplitudes.retain(|_, a| a.norm() >= TOLERANCE);
        let norm: f64 = amplitudes.values().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() {
            return Err(Error::EmptyState);
        }
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            dof,
            n_photons,
            amplitudes,
        })
    }

    pub fn ghz(dof: Dof, label: &GhzLabel) -> Self {
        let n = label.n();
        let value = label.value();
        let complement = !value & ((1u32 << n) - 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let second = match label.sign() {
            Sign::Plus => h,
            Sign::Minus => -h,
        };
        Self::new(
            dof,
            n,
            [
                (value, Complex64::new(h, 0.0)),
                (complement, Complex64::new(second, 0.0)),
            ],
        )
        .expect("GHZ states are normalized")
    }

    pub fn bell(dof: Dof, label: BellLabel) -> Self {
        Self::ghz(dof, &label.to_ghz())
    }

    pub fn dof(&self) -> Dof {
        self.dof
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn amplitude(&self, bits: u32) -> Complex64 {
        self.amplitudes.get(&bits).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.amplitudes.iter().map(|(b, a)| (*b, *a))
    }

    pub fn fidelity(&self, other: &DofState) -> Result<f64> {
        if self.dof != other.dof || self.n_photons != other.n_photons {
            return Err(Error::ShapeMismatch(format!(
                "{:?}/{} vs {:?}/{}",
                self.dof, self.n_photons, other.dof, other.n_photons
            )));
        }
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .map(|(b, a)| a.conj() * other.amplitude(*b))
            .sum();
        Ok(overlap.norm())
    }

    /// Joint state pol ⊗ spatial with all probe tags zero.
    pub fn tensor(
        pol: &DofState,
        spatial: &DofState,
        probe_units: &[ProbeUnit],
    ) -> Result<PureState> {
        if pol.dof != Dof::Polarization || spatial.dof != Dof::Spatial {
            return Err(Error::ShapeMismatch(
                "tensor expects a polarization and a spatial factor".into(),
            ));
        }
        if pol.n_photons != spatial.n_photons {
            return Err(Error::ShapeMismatch(format!(
                "{} vs {} photons",
                pol.n_photons, spatial.n_photons
            )));
        }
        let n = pol.n_photons;
        let tag = ProbeTag::zero(probe_units.len());
        let entries = pol.amplitudes.iter().flat_map(|(pb, pa)| {
            spatial
                .amplitudes
                .iter()
                .map(move |(sb, sa)| (Branch::new(BasisKet::from_bits(n, *pb, *sb), tag), pa * sa))
        });
        PureState::new(n, probe_units.to_vec(), entries)
    }
}

/// Splits a state into its polarization or spatial factor.
///
/// Requires uniform probe tags. Fails with [`Error::NotAProduct`] when the
/// amplitude matrix indexed by (polarization bits, spatial bits) has rank
/// above one.
pub fn factor_dof(state: &PureState, dof: Dof) -> Result<DofState> {
    if state.uniform_tag().is_none() {
        return Err(Error::ProbeTagsPending);
    }
    let n = state.n_photons();
    let matrix: BTreeMap<(u32, u32), Complex64> = state
        .branches()
        .map(|(b, a)| {
            (
                (
                    b.ket.bits_of(Dof::Polarization),
                    b.ket.bits_of(Dof::Spatial),
                ),
                *a,
            )
        })
        .collect();
    let (&(pivot_row, pivot_col), &pivot) = matrix
        .iter()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .ok_or(Error::EmptyState)?;

    let column: BTreeMap<u32, Complex64> = matrix
        .iter()
        .filter(|((_, c), _)| *c == pivot_col)
        .map(|((r, _), a)| (*r, *a))
        .collect();
    let row: BTreeMap<u32, Complex64> = matrix
        .iter()
        .filter(|((r, _), _)| *r == pivot_row)
        .map(|((_, c), a)| (*c, *a))
        .collect();

    // Rank one iff M[r][c] = M[r][c0] M[r0][c] / M[r0][c0] everywhere.
    for (r, left) in &column {
        for (c, right) in &row {
            let expected = left * right / pivot;
            let actual = matrix.get(&(*r, *c)).copied().unwrap_or_default();
            if (expected - actual).norm() > TOLERANCE {
                return Err(Error::NotAProduct);
            }
        }
    }
    if matrix
        .keys()
        .any(|(r, c)| !column.contains_key(r) || !row.contains_key(c))
    {
        return Err(Error::NotAProduct);
    }

    let factor = match dof {
        Dof::Polarization => column,
        Dof::Spatial => row,
    };
    let scale = factor.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    DofState::new(dof, n, factor.into_iter().map(|(b, a)| (b, a / scale)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Sign::Plus),
            '-' => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BellKind {
    Phi,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BellLabel {
    pub kind: BellKind,
    pub sign: Sign,
}

impl BellLabel {
    pub const PHI_PLUS: Self = Self::new(BellKind::Phi, Sign::Plus);
    pub const PHI_MINUS: Self = Self::new(BellKind::Phi, Sign::Minus);
    pub const PSI_PLUS: Self = Self::new(BellKind::Psi, Sign::Plus);
    pub const PSI_MINUS: Self = Self::new(BellKind::Psi, Sign::Minus);

    pub const fn new(kind: BellKind, sign: Sign) -> Self {
        Self { kind, sign }
    }

    /// Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
    pub const ALL: [BellLabel; 4] = [
        Self::PHI_PLUS,
        Self::PHI_MINUS,
        Self::PSI_PLUS,
        Self::PSI_MINUS,
    ];

    /// Φ^± ↔ (±, "00"), Ψ^± ↔ (±, "01").
    pub fn to_ghz(self) -> GhzLabel {
        let bits = match self.kind {
            BellKind::Phi => vec![false, false],
            BellKind::Psi => vec![false, true],
        };
        GhzLabel {
            sign: self.sign,
            bits,
        }
    }

    pub fn from_ghz(label: &GhzLabel) -> Option<Self> {
        match label.bits.as_slice() {
            [false, false] => Some(Self::new(BellKind::Phi, label.sign)),
            [false, true] => Some(Self::new(BellKind::Psi, label.sign)),
            _ => None,
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            BellKind::Phi => "Phi",
            BellKind::Psi => "Psi",
        };
        write!(f, "{kind}{}", self.sign)
    }
}

impl FromStr for BellLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BellLabel::ALL
            .into_iter()
            .find(|l| l.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::BadLabel(s.to_string()))
    }
}

/// Name of the GHZ state (|s⟩ ± |s̄⟩)/√2, kept in canonical form: at most
/// N/2 ones, ties broken toward the lower binary value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GhzLabel {
    sign: Sign,
    bits: Vec<bool>,
}

impl GhzLabel {
    /// Accepts only canonical bit strings.
    pub fn new(sign: Sign, bits: Vec<bool>) -> Result<Self> {
        if bits.len() < 2 {
            return Err(Error::TooFewPhotons(bits.len()));
        }
        let canonical = canonicalize_ghz(sign, &bits);
        if canonical.bits != bits {
            return Err(Error::NonCanonicalLabel {
                given: format!("{}:{}", sign, bit_string(&bits)),
                canonical,
            });
        }
        Ok(canonical)
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn value(&self) -> u32 {
        bits_value(&self.bits)
    }

    /// All 2^N canonical labels, ascending by bit value with `+` before `-`.
    pub fn all(n: usize) -> Vec<GhzLabel> {
        let mut labels = Vec::with_capacity(1 << n);
        for value in 0..(1u32 << n) {
            let bits: Vec<bool> = (0..n).map(|i| (value >> (n - 1 - i)) & 1 == 1).collect();
            if is_canonical(&bits) {
                for sign in [Sign::Plus, Sign::Minus] {
                    labels.push(GhzLabel {
                        sign,
                        bits: bits.clone(),
                    });
                }
            }
        }
        labels
    }

    /// Parses `<sign>:<bits>`, e.g. `-:001`.
    pub fn parse(s: &str, n_photons: usize) -> Result<Self> {
        let bad = || Error::BadLabel(s.to_string());
        let (sign, bits) = s.trim().split_once(':').ok_or_else(bad)?;
        let mut sign_chars = sign.chars();
        let sign = match (sign_chars.next(), sign_chars.next()) {
            (Some(c), None) => Sign::from_symbol(c).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        let bits = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<bool>>>()?;
        if bits.len() != n_photons {
            return Err(Error::LabelLength {
                expected: n_photons,
                got: bits.len(),
            });
        }
        GhzLabel::new(sign, bits)
    }
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sign, bit_string(&self.bits))
    }
}

pub fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn bits_value(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
}

fn is_canonical(bits: &[bool]) -> bool {
    let ones = bits.iter().filter(|&&b| b).count();
    let n = bits.len();
    match (2 * ones).cmp(&n) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        // Equal weight: the complement differs in the first bit, so the
        // lower binary value is the one starting with 0.
        std::cmp::Ordering::Equal => !bits[0],
    }
}

/// Picks the canonical one of `bits` and its complement. The sign is kept:
/// swapping the two terms only changes the global phase.
pub fn canonicalize_ghz(sign: Sign, bits: &[bool]) -> GhzLabel {
    let bits = if is_canonical(bits) {
        bits.to_vec()
    } else {
        bits.iter().map(|b| !b).collect()
    };
    GhzLabel { sign, bits }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HyperBellLabel {
    pub pol: BellLabel,
    pub spatial: BellLabel,
}

impl HyperBellLabel {
    pub const fn new(pol: BellLabel, spatial: BellLabel) -> Self {
        Self { pol, spatial }
    }

    pub fn all() -> Vec<HyperBellLabel> {
        BellLabel::ALL
            .iter()
            .flat_map(|&pol| {
                BellLabel::ALL
                    .iter()
                    .map(move |&spatial| Self::new(pol, spatial))
            })
            .collect()
    }
}

impl fmt::Display for HyperBellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {}", self.pol, self.spatial)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HyperGhzLabel {
    pol: GhzLabel,
    spatial: GhzLabel,
}

impl HyperGhzLabel {
    pub fn new(pol: GhzLabel, spatial: GhzLabel) -> Result<Self> {
        if pol.n() != spatial.n() {
            return Err(Error::LabelLength {
                expected: pol.n(),
                got: spatial.n(),
            });
        }
        Ok(Self { pol, spatial })
    }

    pub fn pol(&self) -> &GhzLabel {
        &self.pol
    }

    pub fn spatial(&self) -> &GhzLabel {
        &self.spatial
    }

    pub fn n_photons(&self) -> usize {
        self.pol.n()
    }

    /// All 4^N labels.
    pub fn all(n: usize) -> Vec<HyperGhzLabel> {
        let single = GhzLabel::all(n);
        single
            .iter()
            .flat_map(|pol| {
                single.iter().map(move |spatial| HyperGhzLabel {
                    pol: pol.clone(),
                    spatial: spatial.clone(),
                })
            })
            .collect()
    }
}

impl fmt::Display for HyperGhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {}", self.pol, self.spatial)
    }
}

pub fn make_hyper_bell(label: HyperBellLabel, probe_units: &[ProbeUnit]) -> PureState {
    DofState::tensor(
        &DofState::bell(Dof::Polarization, label.pol),
        &DofState::bell(Dof::Spatial, label.spatial),
        probe_units,
    )
    .expect("Bell factors share the photon count")
}

pub fn make_hyper_ghz(label: &HyperGhzLabel, probe_units: &[ProbeUnit]) -> PureState {
    DofState::tensor(
        &DofState::ghz(Dof::Polarization, &label.pol),
        &DofState::ghz(Dof::Spatial, &label.spatial),
        probe_units,
    )
    .expect("GHZ factors share the photon count")
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA2: [ProbeUnit; 2] = [ProbeUnit::Theta, ProbeUnit::Theta];

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn ket(photons: &[(Polarization, SpatialMode)]) -> BasisKet {
        BasisKet::new(photons.iter().map(|&(p, m)| Photon::new(p, m)).collect())
    }

    fn amp_at(state: &PureState, photons: &[(Polarization, SpatialMode)]) -> Complex64 {
        state.amplitude(&Branch::new(ket(photons), ProbeTag::zero(state.n_probes())))
    }

    use Polarization::{H, V};
    use SpatialMode::{M1, M2};

    #[test]
    fn phi_plus_phi_plus_amplitudes() {
        let s = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS),
            &THETA2,
        );
        assert_eq!(s.len(), 4);
        for photons in [
            [(H, M1), (H, M1)],
            [(H, M2), (H, M2)],
            [(V, M1), (V, M1)],
            [(V, M2), (V, M2)],
        ] {
            assert!((amp_at(&s, &photons) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn psi_minus_sign_sits_on_vh_branches() {
        let s = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PSI_MINUS, BellLabel::PHI_PLUS),
            &THETA2,
        );
        for (b, a) in s.branches() {
            let first = b.ket.photon(0).pol;
            let expected = if first == V { -0.5 } else { 0.5 };
            assert!((a.re - expected).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_bell_labels() {
        let a = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PHI_MINUS, BellLabel::PSI_MINUS),
            &THETA2,
        );
        let b = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PHI_PLUS, BellLabel::PSI_MINUS),
            &THETA2,
        );
        assert!(fidelity(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn ghz_n3_example() {
        let l = GhzLabel::new(Sign::Plus, bits("000")).unwrap();
        let s = make_hyper_ghz(&HyperGhzLabel::new(l.clone(), l).unwrap(), &[]);
        assert_eq!(s.len(), 4);
        let hhh = [(H, M1), (H, M1), (H, M1)];
        let vvv_22 = [(V, M2), (V, M2), (V, M2)];
        assert!((amp_at(&s, &hhh).re - 0.5).abs() < 1e-12);
        assert!((amp_at(&s, &vvv_22).re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_canonical_labels_are_rejected_with_canonical_form() {
        match GhzLabel::new(Sign::Plus, bits("110")) {
            Err(Error::NonCanonicalLabel { canonical, .. }) => {
                assert_eq!(canonical.to_string(), "+:001")
            }
            other => panic!("unexpected {other:?}"),
        }
        match GhzLabel::new(Sign::Minus, bits("1100")) {
            Err(Error::NonCanonicalLabel { canonical, .. }) => {
                assert_eq!(canonical.to_string(), "-:0011")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(
            canonicalize_ghz(Sign::Minus, &bits("011")).to_string(),
            "-:100"
        );
        assert_eq!(
            canonicalize_ghz(Sign::Plus, &bits("000")).to_string(),
            "+:000"
        );
        assert_eq!(
            canonicalize_ghz(Sign::Plus, &bits("10")).to_string(),
            "+:01"
        );
    }

    #[test]
    fn label_counts() {
        for n in 2..=6 {
            assert_eq!(GhzLabel::all(n).len(), 1 << n);
            assert_eq!(HyperGhzLabel::all(n).len(), 1 << (2 * n));
        }
        assert_eq!(HyperBellLabel::all().len(), 16);
    }

    #[test]
    fn fidelity_examples() {
        let s = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS),
            &THETA2,
        );
        let t = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PHI_PLUS, BellLabel::PSI_PLUS),
            &THETA2,
        );
        assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&s, &t).unwrap() < 1e-12);
        assert!((fidelity(&s, &-s.clone()).unwrap() - 1.0).abs() < 1e-12);
        let other_shape = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS),
            &[ProbeUnit::Theta],
        );
        assert!(matches!(
            fidelity(&s, &other_shape),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn factor_dof_of_product() {
        let s = make_hyper_bell(
            HyperBellLabel::new(BellLabel::PHI_PLUS, BellLabel::PSI_MINUS),
            &THETA2,
        );
        let spatial = factor_dof(&s, Dof::Spatial).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // |M1 M2⟩ = 0b01, |M2 M1⟩ = 0b10
        let expected = DofState::new(
            Dof::Spatial,
            2,
            [
                (0b01, Complex64::new(h, 0.0)),
                (0b10, Complex64::new(-h, 0.0)),
            ],
        )
        .unwrap();
        assert!((spatial.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
        let pol = factor_dof(&s, Dof::Polarization).unwrap();
        let expected = DofState::bell(Dof::Polarization, BellLabel::PHI_PLUS);
        assert!((pol.fidelity(&expected).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn factor_dof_rejects_cross_dof_entanglement() {
        // (|H M1⟩ + |V M2⟩)/√2 on each photon.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let single = [(H, M1), (V, M2)];
        let entries = single.iter().flat_map(|&a| {
            single.iter().map(move |&b| {
                (
                    Branch::new(ket(&[a, b]), ProbeTag::zero(0)),
                    Complex64::new(h * h, 0.0),
                )
            })
        });
        let s = PureState::new(2, vec![], entries).unwrap();
        assert_eq!(factor_dof(&s, Dof::Spatial), Err(Error::NotAProduct));
    }

    #[test]
    fn factor_dof_needs_uniform_tags() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = PureState::new(
            2,
            vec![ProbeUnit::Theta],
            [
                (
                    Branch::new(ket(&[(H, M1), (H, M2)]), ProbeTag::new(vec![1])),
                    Complex64::new(h, 0.0),
                ),
                (
                    Branch::new(ket(&[(H, M2), (H, M1)]), ProbeTag::new(vec![-1])),
                    Complex64::new(h, 0.0),
                ),
            ],
        )
        .unwrap();
        assert_eq!(factor_dof(&s, Dof::Spatial), Err(Error::ProbeTagsPending));
    }

    #[test]
    fn construction_checks() {
        assert_eq!(PureState::new(1, vec![], []), Err(Error::TooFewPhotons(1)));
        let b = Branch::new(ket(&[(H, M1), (H, M1)]), ProbeTag::zero(0));
        assert!(matches!(
            PureState::new(2, vec![], [(b, Complex64::new(0.5, 0.0))]),
            Err(Error::NotNormalized(_))
        ));
        let s = PureState::normalized(2, vec![], [(b, Complex64::new(0.5, 0.0))]).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn n2_ghz_labels_match_bell_states() {
        for bell in BellLabel::ALL {
            let ghz = bell.to_ghz();
            assert_eq!(GhzLabel::new(ghz.sign(), ghz.bits().to_vec()).unwrap(), ghz);
            assert_eq!(BellLabel::from_ghz(&ghz), Some(bell));
            for dof in [Dof::Polarization, Dof::Spatial] {
                assert_eq!(DofState::bell(dof, bell), DofState::ghz(dof, &ghz));
            }
        }
    }

    #[test]
    fn parse_labels() {
        assert_eq!("psi-".parse::<BellLabel>().unwrap(), BellLabel::PSI_MINUS);
        assert!("Chi+".parse::<BellLabel>().is_err());
        assert_eq!(GhzLabel::parse("-:001", 3).unwrap().to_string(), "-:001");
        assert!(matches!(
            GhzLabel::parse("+:01", 3),
            Err(Error::LabelLength {
                expected: 3,
                got: 2
            })
        ));
        assert!(matches!(
            GhzLabel::parse("*:001", 3),
            Err(Error::BadLabel(_))
        ));
    }
}
