//! The analyzer pipelines. Each circuit is a fixed [`WiringPlan`]: a list of
//! Kerr couplings, probe readouts, beam splitters and SPBSMs, executed in
//! order on one input state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::elements::{
    apply_beam_splitter, apply_cross_kerr, measure_probe, measure_spbsm, ProbeOutcome, SpbsmOutcome,
};
use crate::error::{Error, Result};
use crate::hilbert::{BellKind, BellLabel, ProbeUnit, PureState, Sign, SpatialMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CircuitKind {
    Hbsa,
    Hgsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Couple {
        probe: usize,
        photon: usize,
        mode: SpatialMode,
        coupling: i32,
    },
    MeasureProbe {
        probe: usize,
    },
    BeamSplitter {
        photon: usize,
    },
    Spbsm {
        photon: usize,
    },
}

impl Step {
    pub fn is_measurement(&self) -> bool {
        matches!(self, Step::MeasureProbe { .. } | Step::Spbsm { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WiringPlan {
    kind: CircuitKind,
    n_photons: usize,
    probe_units: Vec<ProbeUnit>,
    steps: Vec<Step>,
}

fn parity_check(probe: usize, first: usize, partner: usize) -> [Step; 3] {
    [
        Step::Couple {
            probe,
            photon: first,
            mode: SpatialMode::M1,
            coupling: 1,
        },
        Step::Couple {
            probe,
            photon: partner,
            mode: SpatialMode::M1,
            coupling: -1,
        },
        Step::MeasureProbe { probe },
    ]
}

impl WiringPlan {
    /// Two parity probes on A–B separated by beam splitters on both photons,
    /// then SPBSMs on A and B. No restoring beam-splitter layer.
    pub fn hbsa() -> Self {
        let mut steps = Vec::new();
        steps.extend(parity_check(0, 0, 1));
        steps.extend([
            Step::BeamSplitter { photon: 0 },
            Step::BeamSplitter { photon: 1 },
        ]);
        steps.extend(parity_check(1, 0, 1));
        steps.extend([Step::Spbsm { photon: 0 }, Step::Spbsm { photon: 1 }]);
        Self {
            kind: CircuitKind::Hbsa,
            n_photons: 2,
            probe_units: vec![ProbeUnit::Theta; 2],
            steps,
        }
    }

    /// N−1 parity probes on pairs (1, j), a beam-splitter layer, the π probe
    /// on every photon's second rail, a restoring beam-splitter layer, then
    /// N SPBSMs.
    pub fn hgsa(n_photons: usize) -> Result<Self> {
        if n_photons < 2 {
            return Err(Error::TooFewPhotons(n_photons));
        }
        let n = n_photons;
        let mut steps = Vec::new();
        for j in 1..n {
            steps.extend(parity_check(j - 1, 0, j));
        }
        steps.extend((0..n).map(|photon| Step::BeamSplitter { photon }));
        let pi_probe = n - 1;
        steps.extend((0..n).map(|photon| Step::Couple {
            probe: pi_probe,
            photon,
            mode: SpatialMode::M2,
            coupling: 1,
        }));
        steps.push(Step::MeasureProbe { probe: pi_probe });
        steps.extend((0..n).map(|photon| Step::BeamSplitter { photon }));
        steps.extend((0..n).map(|photon| Step::Spbsm { photon }));
        let mut probe_units = vec![ProbeUnit::Theta; n - 1];
        probe_units.push(ProbeUnit::Pi);
        Ok(Self {
            kind: CircuitKind::Hgsa,
            n_photons: n,
            probe_units,
            steps,
        })
    }

    pub fn kind(&self) -> CircuitKind {
        self.kind
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn probe_units(&self) -> &[ProbeUnit] {
        &self.probe_units
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Everything before the first SPBSM.
    pub fn probe_stage(&self) -> &[Step] {
        let end = self
            .steps
            .iter()
            .position(|s| matches!(s, Step::Spbsm { .. }))
            .unwrap_or(self.steps.len());
        &self.steps[..end]
    }

    pub fn spbsm_stage(&self) -> &[Step] {
        &self.steps[self.probe_stage().len()..]
    }

    pub fn check_input(&self, state: &PureState) -> Result<()> {
        if state.n_photons() != self.n_photons {
            return Err(Error::ShapeMismatch(format!(
                "circuit wired for {} photons, state has {}",
                self.n_photons,
                state.n_photons()
            )));
        }
        if state.probe_units() != self.probe_units.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "circuit needs probes {:?}, state declares {:?}",
                self.probe_units,
                state.probe_units()
            )));
        }
        Ok(())
    }
}

/// The data an analyzer run produces; the decoder's only input.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementRecord {
    pub circuit: CircuitKind,
    pub n_photons: usize,
    pub probe_outcomes: Vec<ProbeOutcome>,
    pub spbsm_outcomes: Vec<SpbsmOutcome>,
}

impl MeasurementRecord {
    pub fn new(circuit: CircuitKind, n_photons: usize) -> Self {
        Self {
            circuit,
            n_photons,
            probe_outcomes: Vec::new(),
            spbsm_outcomes: Vec::new(),
        }
    }

    /// Probe and SPBSM counts match the circuit.
    pub fn is_complete(&self) -> bool {
        let probes = match self.circuit {
            CircuitKind::Hbsa => 2,
            CircuitKind::Hgsa => self.n_photons,
        };
        (self.circuit != CircuitKind::Hbsa || self.n_photons == 2)
            && self.probe_outcomes.len() == probes
            && self.spbsm_outcomes.len() == self.n_photons
    }
}

/// Applies a non-measuring step.
pub fn apply_step(state: &PureState, step: &Step) -> Result<PureState> {
    match *step {
        Step::Couple {
            probe,
            photon,
            mode,
            coupling,
        } => apply_cross_kerr(state, probe, photon, mode, coupling),
        Step::BeamSplitter { photon } => apply_beam_splitter(state, photon),
        Step::MeasureProbe { .. } | Step::Spbsm { .. } => {
            unreachable!("apply_step called with a measurement")
        }
    }
}

/// Runs `steps` with sampled measurements, appending outcomes to `record`.
pub fn execute<R: Rng + ?Sized>(
    state: PureState,
    steps: &[Step],
    record: &mut MeasurementRecord,
    rng: &mut R,
) -> Result<PureState> {
    let mut state = state;
    for step in steps {
        state = match *step {
            Step::MeasureProbe { probe } => {
                let (outcome, post) = measure_probe(&state, probe, rng)?;
                record.probe_outcomes.push(outcome);
                post
            }
            Step::Spbsm { photon } => {
                let (outcome, post) = measure_spbsm(&state, photon, rng)?;
                record.spbsm_outcomes.push(outcome);
                post
            }
            _ => apply_step(&state, step)?,
        };
    }
    Ok(state)
}

pub fn run_plan<R: Rng + ?Sized>(
    plan: &WiringPlan,
    state: &PureState,
    rng: &mut R,
) -> Result<(MeasurementRecord, PureState)> {
    plan.check_input(state)?;
    let mut record = MeasurementRecord::new(plan.kind(), plan.n_photons());
    let final_state = execute(state.clone(), plan.steps(), &mut record, rng)?;
    Ok((record, final_state))
}

pub fn run_hbsa<R: Rng + ?Sized>(
    state: &PureState,
    rng: &mut R,
) -> Result<(MeasurementRecord, PureState)> {
    run_plan(&WiringPlan::hbsa(), state, rng)
}

pub fn run_hgsa<R: Rng + ?Sized>(
    state: &PureState,
    n_photons: usize,
    rng: &mut R,
) -> Result<(MeasurementRecord, PureState)> {
    run_plan(&WiringPlan::hgsa(n_photons)?, state, rng)
}

/// Spatial Bell state left behind by the HBSA beam splitters:
/// Φ⁺→Φ⁺, Φ⁻→Ψ⁺, Ψ⁺→Φ⁻, Ψ⁻→Ψ⁻.
pub fn spatial_state_after_probes(label: BellLabel) -> BellLabel {
    match (label.kind, label.sign) {
        (BellKind::Phi, Sign::Minus) => BellLabel::PSI_PLUS,
        (BellKind::Psi, Sign::Plus) => BellLabel::PHI_MINUS,
        _ => label,
    }
}
