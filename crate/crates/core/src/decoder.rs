//! Maps a [`MeasurementRecord`] back to the hyperentangled label it came
//! from.
//!
//! The spatial label is read off the probe classes. The polarization label
//! then follows from the SPBSM outcomes and the spatial label alone:
//!
//! * sign: `pol sign = spatial sign · Π phase(outcomeᵢ)`
//! * bits: `pol bitᵢ = bit(outcomeᵢ) ⊕ spatial bitᵢ`, which fixes the string
//!   only up to global complement; canonicalization picks the name.
//!
//! The two-photon analyzer uses the same relations with N = 2, applied to
//! the spatial Bell state left behind by its beam splitters.

use crate::circuits::{spatial_state_after_probes, MeasurementRecord};
use crate::elements::{ProbeClass, ProbeOutcome, SpbsmKind, SpbsmOutcome};
use crate::hilbert::{canonicalize_ghz, BellLabel, GhzLabel, HyperBellLabel, HyperGhzLabel, Sign};

/// Phase information; `Sign` multiplies as a two-element group.
pub type PhaseBit = Sign;

pub fn phase_of(outcome: SpbsmKind) -> PhaseBit {
    outcome.phase()
}

pub fn bit_of(outcome: SpbsmKind) -> bool {
    outcome.bit()
}

fn fired(outcome: &ProbeOutcome) -> bool {
    outcome.class != ProbeClass::Zero
}

/// (original, new) spatial Bell labels from the two HBSA probe readouts.
pub fn decode_spatial_bell(probe1: ProbeOutcome, probe2: ProbeOutcome) -> (BellLabel, BellLabel) {
    let original = match (fired(&probe1), fired(&probe2)) {
        (false, false) => BellLabel::PHI_PLUS,
        (false, true) => BellLabel::PHI_MINUS,
        (true, false) => BellLabel::PSI_PLUS,
        (true, true) => BellLabel::PSI_MINUS,
    };
    (original, spatial_state_after_probes(original))
}

/// Spatial GHZ label from N−1 parity readouts followed by the π readout.
/// Photon 0 is taken as the reference bit 0; photon j differs from it iff
/// parity probe j−1 fired.
pub fn decode_spatial_ghz(probes: &[ProbeOutcome], n_photons: usize) -> GhzLabel {
    let parity = &probes[..n_photons - 1];
    let bits: Vec<bool> = std::iter::once(false)
        .chain(parity.iter().map(fired))
        .collect();
    let sign = if fired(&probes[n_photons - 1]) {
        Sign::Minus
    } else {
        Sign::Plus
    };
    canonicalize_ghz(sign, &bits)
}

/// The bit string `bit(outcomeᵢ) ⊕ spatial bitᵢ`, before canonicalization.
pub fn candidate_pol_bits(spatial: &GhzLabel, spbsm: &[SpbsmOutcome]) -> Vec<bool> {
    spbsm
        .iter()
        .map(|o| bit_of(o.kind) ^ spatial.bit(o.photon_index))
        .collect()
}

pub fn pol_sign(spatial: &GhzLabel, spbsm: &[SpbsmOutcome]) -> PhaseBit {
    spbsm
        .iter()
        .fold(spatial.sign(), |acc, o| acc * phase_of(o.kind))
}

pub fn decode_polarization(spatial: &GhzLabel, spbsm: &[SpbsmOutcome]) -> GhzLabel {
    canonicalize_ghz(
        pol_sign(spatial, spbsm),
        &candidate_pol_bits(spatial, spbsm),
    )
}

pub fn decode_hbsa(record: &MeasurementRecord) -> HyperBellLabel {
    let (original, new) = decode_spatial_bell(record.probe_outcomes[0], record.probe_outcomes[1]);
    let pol = decode_polarization(&new.to_ghz(), &record.spbsm_outcomes);
    let pol = BellLabel::from_ghz(&pol).expect("two-photon canonical labels are Bell labels");
    HyperBellLabel::new(pol, original)
}

pub fn decode_hgsa(record: &MeasurementRecord) -> HyperGhzLabel {
    let spatial = decode_spatial_ghz(&record.probe_outcomes, record.n_photons);
    let pol = decode_polarization(&spatial, &record.spbsm_outcomes);
    HyperGhzLabel::new(pol, spatial).expect("both labels span the record's photons")
}
