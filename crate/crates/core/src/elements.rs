//! Optical elements acting on a [`PureState`]: the spatial-mode beam
//! splitter, cross-Kerr coupling to a probe beam, the sign-blind probe
//! readout, and the single-photon Bell-state measurement (SPBSM).
//!
//! Every measurement comes in two flavours: `*_branches` lists all outcomes
//! with their probabilities and post-states, `measure_*` samples one of them
//! with a caller-provided random source.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Branch, Photon, Polarization, ProbeUnit, PureState, Sign, SpatialMode};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Measurement class of a probe. θ-probes resolve only |phase|, π-probes
/// only the parity of the accumulated π count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProbeClass {
    Zero,
    ThetaMagnitude,
    Pi,
}

impl ProbeClass {
    /// Class of an integer tag on a probe of the given unit.
    pub fn of(unit: ProbeUnit, probe: usize, tag: i32) -> Result<Self> {
        match unit {
            ProbeUnit::Theta => match tag.abs() {
                0 => Ok(ProbeClass::Zero),
                1 => Ok(ProbeClass::ThetaMagnitude),
                _ => Err(Error::UnexpectedPhaseClass { probe, tag }),
            },
            ProbeUnit::Pi => Ok(if tag.rem_euclid(2) == 0 {
                ProbeClass::Zero
            } else {
                ProbeClass::Pi
            }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeClass::Zero => "0",
            ProbeClass::ThetaMagnitude => "theta",
            ProbeClass::Pi => "pi",
        }
    }
}

impl fmt::Display for ProbeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbeOutcome {
    pub probe_index: usize,
    pub class: ProbeClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpbsmKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl SpbsmKind {
    pub const ALL: [SpbsmKind; 4] = [
        SpbsmKind::PhiPlus,
        SpbsmKind::PhiMinus,
        SpbsmKind::PsiPlus,
        SpbsmKind::PsiMinus,
    ];

    /// Superscript sign.
    pub fn phase(self) -> Sign {
        match self {
            SpbsmKind::PhiPlus | SpbsmKind::PsiPlus => Sign::Plus,
            SpbsmKind::PhiMinus | SpbsmKind::PsiMinus => Sign::Minus,
        }
    }

    /// 1 for ψ, 0 for φ.
    pub fn bit(self) -> bool {
        matches!(self, SpbsmKind::PsiPlus | SpbsmKind::PsiMinus)
    }

    pub fn from_parts(bit: bool, phase: Sign) -> Self {
        match (bit, phase) {
            (false, Sign::Plus) => SpbsmKind::PhiPlus,
            (false, Sign::Minus) => SpbsmKind::PhiMinus,
            (true, Sign::Plus) => SpbsmKind::PsiPlus,
            (true, Sign::Minus) => SpbsmKind::PsiMinus,
        }
    }

    /// Expansion in the joint basis of one photon:
    /// φ^± = (|H,2⟩ ± |V,1⟩)/√2, ψ^± = (|H,1⟩ ± |V,2⟩)/√2.
    pub fn components(self) -> [(Photon, f64); 2] {
        let sign = self.phase().factor();
        let (h_mode, v_mode) = if self.bit() {
            (SpatialMode::M1, SpatialMode::M2)
        } else {
            (SpatialMode::M2, SpatialMode::M1)
        };
        [
            (Photon::new(Polarization::H, h_mode), FRAC_1_SQRT_2),
            (Photon::new(Polarization::V, v_mode), sign * FRAC_1_SQRT_2),
        ]
    }

    /// ⟨kind|photon⟩.
    pub fn overlap(self, photon: Photon) -> f64 {
        self.components()
            .iter()
            .find(|(p, _)| *p == photon)
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpbsmKind::PhiPlus => "phi+",
            SpbsmKind::PhiMinus => "phi-",
            SpbsmKind::PsiPlus => "psi+",
            SpbsmKind::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for SpbsmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpbsmOutcome {
    pub photon_index: usize,
    pub kind: SpbsmKind,
}

/// Output port of the SPBSM interferometer that fires for an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DetectorPort {
    pub photon_index: usize,
    pub mode: SpatialMode,
    pub sign: Sign,
}

impl DetectorPort {
    pub fn outcome(self) -> SpbsmOutcome {
        SpbsmOutcome {
            photon_index: self.photon_index,
            kind: SpbsmKind::from_parts(self.mode == SpatialMode::M2, self.sign),
        }
    }
}

impl fmt::Display for DetectorPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            photon_letter(self.photon_index),
            self.mode.rail(),
            self.sign
        )
    }
}

/// `a`, `b`, ... for photons 0, 1, ...
pub fn photon_letter(index: usize) -> char {
    (b'a' + (index % 26) as u8) as char
}

/// φ^± exits on rail 1, ψ^± on rail 2, with the superscript sign.
pub fn detector_port(outcome: SpbsmOutcome) -> DetectorPort {
    DetectorPort {
        photon_index: outcome.photon_index,
        mode: if outcome.kind.bit() {
            SpatialMode::M2
        } else {
            SpatialMode::M1
        },
        sign: outcome.kind.phase(),
    }
}

/// Hadamard on the spatial mode of one photon.
pub fn apply_beam_splitter(state: &PureState, photon: usize) -> Result<PureState> {
    state.check_photon(photon)?;
    let entries = state.branches().flat_map(|(branch, amp)| {
        let p = branch.ket.photon(photon);
        let out_sign = match p.mode {
            SpatialMode::M1 => 1.0,
            SpatialMode::M2 => -1.0,
        };
        let to = |mode: SpatialMode, factor: f64| {
            (
                Branch::new(
                    branch.ket.with_photon(photon, Photon::new(p.pol, mode)),
                    branch.tag,
                ),
                amp * factor * FRAC_1_SQRT_2,
            )
        };
        [to(SpatialMode::M1, 1.0), to(SpatialMode::M2, out_sign)]
    });
    Ok(state.rebuild(entries.collect::<Vec<_>>()))
}

/// Adds `coupling` to the probe's tag on every branch where `photon`
/// occupies `mode`.
pub fn apply_cross_kerr(
    state: &PureState,
    probe: usize,
    photon: usize,
    mode: SpatialMode,
    coupling: i32,
) -> Result<PureState> {
    state.check_probe(probe)?;
    state.check_photon(photon)?;
    if coupling != 1 && coupling != -1 {
        return Err(Error::InvalidCoupling(coupling));
    }
    let entries = state.branches().map(|(branch, amp)| {
        if branch.ket.photon(photon).mode == mode {
            let tag = branch.tag.with(probe, branch.tag.get(probe) + coupling);
            (Branch::new(branch.ket, tag), *amp)
        } else {
            (*branch, *amp)
        }
    });
    Ok(state.rebuild(entries.collect::<Vec<_>>()))
}

/// One possible result of a measurement.
#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub result: T,
    pub probability: f64,
    pub state: PureState,
}

/// All classes of a probe readout with their probabilities and projected,
/// renormalized post-states (probe tag reset to zero).
pub fn probe_branches(state: &PureState, probe: usize) -> Result<Vec<Outcome<ProbeOutcome>>> {
    state.check_probe(probe)?;
    let unit = state.probe_units()[probe];
    let classes = [ProbeClass::Zero, ProbeClass::ThetaMagnitude, ProbeClass::Pi];
    let mut buckets: Vec<Vec<(Branch, Complex64)>> = vec![Vec::new(); classes.len()];
    for (branch, amp) in state.branches() {
        let class = ProbeClass::of(unit, probe, branch.tag.get(probe))?;
        let slot = classes.iter().position(|c| *c == class).unwrap();
        buckets[slot].push((Branch::new(branch.ket, branch.tag.with(probe, 0)), *amp));
    }
    let mut outcomes = Vec::new();
    for (class, entries) in classes.into_iter().zip(buckets) {
        if entries.is_empty() {
            continue;
        }
        let projected = state.rebuild(entries);
        let probability = projected.norm_sqr();
        if projected.is_empty() {
            continue;
        }
        outcomes.push(Outcome {
            result: ProbeOutcome {
                probe_index: probe,
                class,
            },
            probability,
            state: projected.scaled(1.0 / probability.sqrt()),
        });
    }
    Ok(outcomes)
}

/// Sign-blind readout of a probe. The state is projected onto the sampled
/// class; relative phases inside the class are kept.
pub fn measure_probe<R: Rng + ?Sized>(
    state: &PureState,
    probe: usize,
    rng: &mut R,
) -> Result<(ProbeOutcome, PureState)> {
    let outcome = sample(probe_branches(state, probe)?, rng);
    Ok((outcome.result, outcome.state))
}

/// All SPBSM outcomes on one photon. The post-state leaves that photon in
/// the measured single-photon Bell state and marks it as measured.
pub fn spbsm_branches(state: &PureState, photon: usize) -> Result<Vec<Outcome<SpbsmOutcome>>> {
    state.check_photon(photon)?;
    if state.is_measured(photon) {
        return Err(Error::DoubleMeasurement(photon));
    }
    let placeholder = Photon::new(Polarization::H, SpatialMode::M1);
    let mut outcomes = Vec::new();
    for kind in SpbsmKind::ALL {
        // Amplitudes of the rest of the system conditioned on `kind`.
        let reduced = state.rebuild(
            state
                .branches()
                .map(|(b, a)| {
                    let key = Branch::new(b.ket.with_photon(photon, placeholder), b.tag);
                    (key, a * kind.overlap(b.ket.photon(photon)))
                })
                .collect::<Vec<_>>(),
        );
        if reduced.is_empty() {
            continue;
        }
        let probability = reduced.norm_sqr();
        let components = kind.components();
        let mut post = state.rebuild(
            reduced
                .branches()
                .flat_map(|(b, a)| {
                    components.iter().map(move |(p, c)| {
                        (Branch::new(b.ket.with_photon(photon, *p), b.tag), a * *c)
                    })
                })
                .collect::<Vec<_>>(),
        );
        post.mark_measured(photon);
        outcomes.push(Outcome {
            result: SpbsmOutcome {
                photon_index: photon,
                kind,
            },
            probability,
            state: post.scaled(1.0 / probability.sqrt()),
        });
    }
    Ok(outcomes)
}

pub fn measure_spbsm<R: Rng + ?Sized>(
    state: &PureState,
    photon: usize,
    rng: &mut R,
) -> Result<(SpbsmOutcome, PureState)> {
    let outcome = sample(spbsm_branches(state, photon)?, rng);
    Ok((outcome.result, outcome.state))
}

fn sample<T, R: Rng + ?Sized>(mut outcomes: Vec<Outcome<T>>, rng: &mut R) -> Outcome<T> {
    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    let draw = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let last = outcomes.len() - 1;
    for i in 0..outcomes.len() {
        acc += outcomes[i].probability;
        if draw < acc {
            return outcomes.swap_remove(i);
        }
    }
    outcomes.swap_remove(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{
        factor_dof, fidelity, make_hyper_bell, BasisKet, BellLabel, Dof, DofState, GhzLabel,
        HyperBellLabel, HyperGhzLabel, ProbeTag,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const THETA2: [ProbeUnit; 2] = [ProbeUnit::Theta, ProbeUnit::Theta];

    fn bell(pol: BellLabel, spatial: BellLabel) -> PureState {
        make_hyper_bell(HyperBellLabel::new(pol, spatial), &THETA2)
    }

    fn parity_couple(state: &PureState, probe: usize) -> PureState {
        let s = apply_cross_kerr(state, probe, 0, SpatialMode::M1, 1).unwrap();
        apply_cross_kerr(&s, probe, 1, SpatialMode::M1, -1).unwrap()
    }

    fn single_photon_state(amps: &[(Photon, f64)]) -> PureState {
        // Photon 1 is a spectator parked in |H,1⟩.
        let spectator = Photon::new(Polarization::H, SpatialMode::M1);
        PureState::new(
            2,
            vec![],
            amps.iter().map(|(p, a)| {
                (
                    Branch::new(BasisKet::new(vec![*p, spectator]), ProbeTag::zero(0)),
                    Complex64::new(*a, 0.0),
                )
            }),
        )
        .unwrap()
    }

    #[test]
    fn beam_splitter_is_an_involution() {
        let s = bell(BellLabel::PSI_PLUS, BellLabel::PHI_MINUS);
        let twice = apply_beam_splitter(&apply_beam_splitter(&s, 1).unwrap(), 1).unwrap();
        assert!((fidelity(&s, &twice).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beam_splitters_map_spatial_bell_states() {
        let on_both =
            |s: &PureState| apply_beam_splitter(&apply_beam_splitter(s, 0).unwrap(), 1).unwrap();
        let out = on_both(&bell(BellLabel::PHI_PLUS, BellLabel::PHI_MINUS));
        let spatial = factor_dof(&out, Dof::Spatial).unwrap();
        let target = DofState::bell(Dof::Spatial, BellLabel::PSI_PLUS);
        assert!((spatial.fidelity(&target).unwrap() - 1.0).abs() < 1e-12);

        let out = on_both(&bell(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS));
        let spatial = factor_dof(&out, Dof::Spatial).unwrap();
        let target = DofState::bell(Dof::Spatial, BellLabel::PHI_PLUS);
        assert!((spatial.fidelity(&target).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_index_check() {
        let s = bell(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS);
        assert!(matches!(
            apply_beam_splitter(&s, 2),
            Err(Error::IndexOutOfRange { what: "photon", .. })
        ));
    }

    #[test]
    fn parity_couplings_tag_psi_branches() {
        let s = parity_couple(&bell(BellLabel::PHI_PLUS, BellLabel::PSI_MINUS), 0);
        for (b, _) in s.branches() {
            let modes = (b.ket.photon(0).mode, b.ket.photon(1).mode);
            let expected = match modes {
                (SpatialMode::M1, SpatialMode::M2) => 1,
                (SpatialMode::M2, SpatialMode::M1) => -1,
                _ => unreachable!(),
            };
            assert_eq!(b.tag.get(0), expected);
        }
        let s = parity_couple(&bell(BellLabel::PHI_PLUS, BellLabel::PHI_MINUS), 0);
        assert!(s.branches().all(|(b, _)| b.tag.get(0) == 0));
    }

    #[test]
    fn kerr_on_disjoint_probes_commutes() {
        let s = bell(BellLabel::PSI_PLUS, BellLabel::PSI_MINUS);
        let a = apply_cross_kerr(&s, 0, 0, SpatialMode::M1, 1).unwrap();
        let a = apply_cross_kerr(&a, 1, 1, SpatialMode::M2, -1).unwrap();
        let b = apply_cross_kerr(&s, 1, 1, SpatialMode::M2, -1).unwrap();
        let b = apply_cross_kerr(&b, 0, 0, SpatialMode::M1, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kerr_rejects_bad_arguments() {
        let s = bell(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS);
        assert_eq!(
            apply_cross_kerr(&s, 0, 0, SpatialMode::M1, 2),
            Err(Error::InvalidCoupling(2))
        );
        assert!(matches!(
            apply_cross_kerr(&s, 5, 0, SpatialMode::M1, 1),
            Err(Error::IndexOutOfRange { what: "probe", .. })
        ));
    }

    #[test]
    fn theta_probe_keeps_coherence() {
        let input = bell(BellLabel::PHI_PLUS, BellLabel::PSI_MINUS);
        let coupled = parity_couple(&input, 0);
        let outcomes = probe_branches(&coupled, 0).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes[0].result.class, ProbeClass::ThetaMagnitude);
        assert!((outcomes[0].probability - 1.0).abs() < 1e-12);
        // Both ±θ branches survive, tags reset: the input comes back.
        assert!((fidelity(&outcomes[0].state, &input).unwrap() - 1.0).abs() < 1e-12);

        let coupled = parity_couple(&bell(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS), 0);
        let outcomes = probe_branches(&coupled, 0).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes[0].result.class, ProbeClass::Zero);
    }

    #[test]
    fn pi_probe_reads_odd_parity() {
        let l = GhzLabel::new(Sign::Minus, vec![false; 3]).unwrap();
        let plus = GhzLabel::new(Sign::Plus, vec![false; 3]).unwrap();
        let mut s =
            crate::hilbert::make_hyper_ghz(&HyperGhzLabel::new(plus, l).unwrap(), &[ProbeUnit::Pi]);
        for photon in 0..3 {
            s = apply_beam_splitter(&s, photon).unwrap();
        }
        for photon in 0..3 {
            s = apply_cross_kerr(&s, 0, photon, SpatialMode::M2, 1).unwrap();
        }
        let outcomes = probe_branches(&s, 0).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes[0].result.class, ProbeClass::Pi);
        // 4 spatial branches times 2 polarization branches.
        assert_eq!(outcomes[0].state.len(), 8);
    }

    #[test]
    fn theta_probe_rejects_double_phase() {
        let s = bell(BellLabel::PHI_PLUS, BellLabel::PHI_PLUS);
        let s = apply_cross_kerr(&s, 0, 0, SpatialMode::M1, 1).unwrap();
        let s = apply_cross_kerr(&s, 0, 1, SpatialMode::M1, 1).unwrap();
        assert!(matches!(
            probe_branches(&s, 0),
            Err(Error::UnexpectedPhaseClass { probe: 0, tag: 2 })
        ));
    }

    #[test]
    fn remeasuring_a_probe_gives_zero() {
        let coupled = parity_couple(&bell(BellLabel::PHI_PLUS, BellLabel::PSI_PLUS), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (first, post) = measure_probe(&coupled, 1, &mut rng).unwrap();
        assert_eq!(first.class, ProbeClass::ThetaMagnitude);
        let (second, _) = measure_probe(&post, 1, &mut rng).unwrap();
        assert_eq!(second.class, ProbeClass::Zero);
    }

    #[test]
    fn spbsm_eigenstate_is_certain() {
        let h = FRAC_1_SQRT_2;
        let s = single_photon_state(&[
            (Photon::new(Polarization::H, SpatialMode::M1), h),
            (Photon::new(Polarization::V, SpatialMode::M2), h),
        ]);
        let outcomes = spbsm_branches(&s, 0).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert_eq!(outcomes[0].result.kind, SpbsmKind::PsiPlus);
        assert!((outcomes[0].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spbsm_on_h1_splits_evenly_between_psi() {
        let s = single_photon_state(&[(Photon::new(Polarization::H, SpatialMode::M1), 1.0)]);
        let outcomes = spbsm_branches(&s, 0).unwrap();
        let kinds: Vec<_> = outcomes.iter().map(|o| o.result.kind).collect();
        assert_eq!(kinds, vec![SpbsmKind::PsiPlus, SpbsmKind::PsiMinus]);
        for o in &outcomes {
            assert!((o.probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn spbsm_joint_distribution_on_phi_plus_psi_minus() {
        let s = bell(BellLabel::PHI_PLUS, BellLabel::PSI_MINUS);
        let mut joint = Vec::new();
        for a in spbsm_branches(&s, 0).unwrap() {
            for b in spbsm_branches(&a.state, 1).unwrap() {
                joint.push((
                    (a.result.kind, b.result.kind),
                    a.probability * b.probability,
                ));
            }
        }
        joint.sort_by_key(|x| x.0);
        use SpbsmKind::*;
        let kinds: Vec<_> = joint.iter().map(|j| j.0).collect();
        assert_eq!(
            kinds,
            vec![
                (PhiPlus, PsiMinus),
                (PhiMinus, PsiPlus),
                (PsiPlus, PhiMinus),
                (PsiMinus, PhiPlus)
            ]
        );
        for (_, p) in joint {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn spbsm_errors() {
        let s = bell(BellLabel::PHI_PLUS, BellLabel::PSI_MINUS);
        assert!(matches!(
            spbsm_branches(&s, 7),
            Err(Error::IndexOutOfRange { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, post) = measure_spbsm(&s, 0, &mut rng).unwrap();
        assert_eq!(
            measure_spbsm(&post, 0, &mut rng).unwrap_err(),
            Error::DoubleMeasurement(0)
        );
    }

    #[test]
    fn detector_ports() {
        let port = detector_port(SpbsmOutcome {
            photon_index: 0,
            kind: SpbsmKind::PhiPlus,
        });
        assert_eq!(port.to_string(), "a1+");
        let port = detector_port(SpbsmOutcome {
            photon_index: 1,
            kind: SpbsmKind::PsiMinus,
        });
        assert_eq!(port.to_string(), "b2-");
        for kind in SpbsmKind::ALL {
            let outcome = SpbsmOutcome {
                photon_index: 2,
                kind,
            };
            let port = detector_port(outcome);
            assert_eq!(port.outcome(), outcome);
            assert_eq!(detector_port(port.outcome()), port);
        }
    }

    #[test]
    fn spbsm_basis_is_orthonormal() {
        let photons = [
            Photon::new(Polarization::H, SpatialMode::M1),
            Photon::new(Polarization::H, SpatialMode::M2),
            Photon::new(Polarization::V, SpatialMode::M1),
            Photon::new(Polarization::V, SpatialMode::M2),
        ];
        for a in SpbsmKind::ALL {
            for b in SpbsmKind::ALL {
                let dot: f64 = photons.iter().map(|p| a.overlap(*p) * b.overlap(*p)).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12);
            }
        }
    }
}
