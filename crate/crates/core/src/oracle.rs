//! Brute-force checks of the analyzers.
//!
//! [`expand_in_spbsm_basis`] rewrites a state in the product basis of
//! single-photon Bell states directly, without going through sequential
//! projections. [`explore`] walks every branch of a wiring plan with exact
//! probabilities instead of sampling. [`verify_all`] runs both over every
//! label and checks that decoding is complete and that the reachable record
//! sets of distinct labels never overlap.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::{
    apply_step, spatial_state_after_probes, CircuitKind, MeasurementRecord, Step, WiringPlan,
};
use crate::decoder::{candidate_pol_bits, decode_hbsa, decode_hgsa, pol_sign};
use crate::elements::{probe_branches, spbsm_branches, ProbeOutcome, SpbsmKind};
use crate::error::{Error, Result};
use crate::hilbert::{
    factor_dof, make_hyper_bell, make_hyper_ghz, BellLabel, Dof, DofState, GhzLabel,
    HyperBellLabel, HyperGhzLabel, PureState, TOLERANCE,
};

/// Amplitudes of a state over joint SPBSM outcome combinations, one kind per
/// photon in photon order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub n_photons: usize,
    pub entries: BTreeMap<Vec<SpbsmKind>, Complex64>,
}

impl OutcomeDistribution {
    pub fn amplitude(&self, combo: &[SpbsmKind]) -> Complex64 {
        self.entries.get(combo).copied().unwrap_or_default()
    }

    pub fn probability(&self, combo: &[SpbsmKind]) -> f64 {
        self.amplitude(combo).norm_sqr()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }
}

/// Change of basis of every photon into {φ⁺, φ⁻, ψ⁺, ψ⁻}. Probe tags must be
/// uniform, otherwise branches with different probe states would be summed
/// coherently.
pub fn expand_in_spbsm_basis(state: &PureState) -> Result<OutcomeDistribution> {
    if state.uniform_tag().is_none() {
        return Err(Error::ProbeTagsPending);
    }
    let n = state.n_photons();
    let mut entries: BTreeMap<Vec<SpbsmKind>, Complex64> = BTreeMap::new();
    for (branch, amp) in state.branches() {
        // Each photon basis state overlaps exactly two of the four kinds.
        let per_photon: Vec<Vec<(SpbsmKind, f64)>> = branch
            .ket
            .photons()
            .iter()
            .map(|p| {
                SpbsmKind::ALL
                    .iter()
                    .map(|k| (*k, k.overlap(*p)))
                    .filter(|(_, c)| *c != 0.0)
                    .collect()
            })
            .collect();
        let mut partial: Vec<(Vec<SpbsmKind>, Complex64)> = vec![(Vec::with_capacity(n), *amp)];
        for options in &per_photon {
            partial = partial
                .into_iter()
                .flat_map(|(combo, a)| {
                    options.iter().map(move |(k, c)| {
                        let mut next = combo.clone();
                        next.push(*k);
                        (next, a * *c)
                    })
                })
                .collect();
        }
        for (combo, a) in partial {
            *entries.entry(combo).or_default() += a;
        }
    }
    entries.retain(|_, a| a.norm() >= TOLERANCE);
    Ok(OutcomeDistribution {
        n_photons: n,
        entries,
    })
}

/// A label for either analyzer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnyLabel {
    Bell(HyperBellLabel),
    Ghz(HyperGhzLabel),
}

impl AnyLabel {
    pub fn circuit(&self) -> CircuitKind {
        match self {
            AnyLabel::Bell(_) => CircuitKind::Hbsa,
            AnyLabel::Ghz(_) => CircuitKind::Hgsa,
        }
    }

    pub fn n_photons(&self) -> usize {
        match self {
            AnyLabel::Bell(_) => 2,
            AnyLabel::Ghz(l) => l.n_photons(),
        }
    }

    pub fn plan(&self) -> WiringPlan {
        match self {
            AnyLabel::Bell(_) => WiringPlan::hbsa(),
            AnyLabel::Ghz(l) => WiringPlan::hgsa(l.n_photons()).expect("labels have N ≥ 2"),
        }
    }

    pub fn input_state(&self) -> PureState {
        let plan = self.plan();
        match self {
            AnyLabel::Bell(l) => make_hyper_bell(*l, plan.probe_units()),
            AnyLabel::Ghz(l) => make_hyper_ghz(l, plan.probe_units()),
        }
    }

    pub fn decode(record: &MeasurementRecord) -> AnyLabel {
        match record.circuit {
            CircuitKind::Hbsa => AnyLabel::Bell(decode_hbsa(record)),
            CircuitKind::Hgsa => AnyLabel::Ghz(decode_hgsa(record)),
        }
    }

    /// Every label of a circuit at the given size.
    pub fn all(circuit: CircuitKind, n_photons: usize) -> Vec<AnyLabel> {
        match circuit {
            CircuitKind::Hbsa => HyperBellLabel::all()
                .into_iter()
                .map(AnyLabel::Bell)
                .collect(),
            CircuitKind::Hgsa => HyperGhzLabel::all(n_photons)
                .into_iter()
                .map(AnyLabel::Ghz)
                .collect(),
        }
    }

    /// Polarization and spatial labels as GHZ labels; for the two-photon
    /// analyzer the spatial one is the state after its beam splitters.
    fn relation_labels(&self) -> (GhzLabel, GhzLabel) {
        match self {
            AnyLabel::Bell(l) => (
                l.pol.to_ghz(),
                spatial_state_after_probes(l.spatial).to_ghz(),
            ),
            AnyLabel::Ghz(l) => (l.pol().clone(), l.spatial().clone()),
        }
    }
}

impl fmt::Display for AnyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnyLabel::Bell(l) => l.fmt(f),
            AnyLabel::Ghz(l) => l.fmt(f),
        }
    }
}

/// State reached after all probe readouts, for one combination of probe
/// classes.
#[derive(Debug, Clone)]
pub struct ProbeStageLeaf {
    pub probe_outcomes: Vec<ProbeOutcome>,
    pub probability: f64,
    pub state: PureState,
}

/// Result of walking every branch of a plan.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub leaves: Vec<ProbeStageLeaf>,
    pub records: Vec<(MeasurementRecord, f64)>,
    /// Number of probe readouts that had more than one possible class.
    pub nondeterministic_probes: usize,
}

pub fn explore(plan: &WiringPlan, input: &PureState) -> Result<Exploration> {
    plan.check_input(input)?;
    let mut leaves = Vec::new();
    let mut nondeterministic = 0;
    probe_stage_walk(
        plan.probe_stage(),
        input.clone(),
        Vec::new(),
        1.0,
        &mut leaves,
        &mut nondeterministic,
    )?;
    let mut records = Vec::new();
    for leaf in &leaves {
        let mut record = MeasurementRecord::new(plan.kind(), plan.n_photons());
        record.probe_outcomes = leaf.probe_outcomes.clone();
        spbsm_stage_walk(
            plan.spbsm_stage(),
            leaf.state.clone(),
            record,
            leaf.probability,
            &mut records,
        )?;
    }
    Ok(Exploration {
        leaves,
        records,
        nondeterministic_probes: nondeterministic,
    })
}

fn probe_stage_walk(
    steps: &[Step],
    state: PureState,
    outcomes: Vec<ProbeOutcome>,
    probability: f64,
    leaves: &mut Vec<ProbeStageLeaf>,
    nondeterministic: &mut usize,
) -> Result<()> {
    let Some(pos) = steps.iter().position(Step::is_measurement) else {
        let state = steps
            .iter()
            .try_fold(state, |s, step| apply_step(&s, step))?;
        leaves.push(ProbeStageLeaf {
            probe_outcomes: outcomes,
            probability,
            state,
        });
        return Ok(());
    };
    let state = steps[..pos]
        .iter()
        .try_fold(state, |s, step| apply_step(&s, step))?;
    let Step::MeasureProbe { probe } = steps[pos] else {
        unreachable!("probe stage holds no SPBSM")
    };
    let children = probe_branches(&state, probe)?;
    if children.len() != 1 || (children[0].probability - 1.0).abs() > TOLERANCE {
        *nondeterministic += 1;
    }
    for child in children {
        let mut next = outcomes.clone();
        next.push(child.result);
        probe_stage_walk(
            &steps[pos + 1..],
            child.state,
            next,
            probability * child.probability,
            leaves,
            nondeterministic,
        )?;
    }
    Ok(())
}

fn spbsm_stage_walk(
    steps: &[Step],
    state: PureState,
    record: MeasurementRecord,
    probability: f64,
    records: &mut Vec<(MeasurementRecord, f64)>,
) -> Result<()> {
    let Some((first, rest)) = steps.split_first() else {
        records.push((record, probability));
        return Ok(());
    };
    let Step::Spbsm { photon } = *first else {
        unreachable!("SPBSM stage holds only SPBSMs")
    };
    for child in spbsm_branches(&state, photon)? {
        let mut next = record.clone();
        next.spbsm_outcomes.push(child.result);
        spbsm_stage_walk(
            rest,
            child.state,
            next,
            probability * child.probability,
            records,
        )?;
    }
    Ok(())
}

/// Every record reachable from `label`'s basis state, with its exact
/// probability.
pub fn enumerate_records(label: &AnyLabel) -> Result<Vec<(MeasurementRecord, f64)>> {
    Ok(explore(&label.plan(), &label.input_state())?.records)
}

/// Outcome of all checks on one label.
#[derive(Debug, Clone, Default)]
struct LabelCheck {
    records: Vec<(MeasurementRecord, f64)>,
    failures: Vec<(CheckKind, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Determinism,
    Normalization,
    Equiprobability,
    RoundTrip,
    Partition,
    OracleAgreement,
    Qnd,
    SignRelation,
    BitRelation,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Determinism,
        CheckKind::Normalization,
        CheckKind::Equiprobability,
        CheckKind::RoundTrip,
        CheckKind::Partition,
        CheckKind::OracleAgreement,
        CheckKind::Qnd,
        CheckKind::SignRelation,
        CheckKind::BitRelation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Determinism => "determinism",
            CheckKind::Normalization => "normalization",
            CheckKind::Equiprobability => "equiprobability",
            CheckKind::RoundTrip => "round_trip",
            CheckKind::Partition => "partition",
            CheckKind::OracleAgreement => "oracle_agreement",
            CheckKind::Qnd => "qnd",
            CheckKind::SignRelation => "sign_relation",
            CheckKind::BitRelation => "bit_relation",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub check: CheckKind,
    pub label: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub circuit: CircuitKind,
    pub n_photons: usize,
    pub labels_tested: usize,
    pub labels_passed: usize,
    pub total_records: usize,
    /// Histogram: records per label → number of labels.
    pub records_per_label: BTreeMap<usize, usize>,
    /// Distinct per-record probabilities seen (within tolerance).
    pub record_probabilities: Vec<f64>,
    /// Number of failures per check; every check appears.
    pub check_failures: BTreeMap<CheckKind, usize>,
    pub failures: Vec<Failure>,
    #[serde(serialize_with = "serialize_secs")]
    pub wall_time: Duration,
}

fn serialize_secs<S: serde::Serializer>(
    d: &Duration,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.labels_passed == self.labels_tested
    }

    pub fn check_passed(&self, check: CheckKind) -> bool {
        self.check_failures.get(&check).copied().unwrap_or(0) == 0
    }
}

fn check_label(label: &AnyLabel) -> LabelCheck {
    let mut check = LabelCheck::default();
    let mut fail = |kind: CheckKind, detail: String| check.failures.push((kind, detail));

    let plan = label.plan();
    let exploration = match explore(&plan, &label.input_state()) {
        Ok(e) => e,
        Err(e) => {
            fail(CheckKind::Determinism, format!("circuit error: {e}"));
            return check;
        }
    };

    if exploration.nondeterministic_probes > 0 || exploration.leaves.len() != 1 {
        fail(
            CheckKind::Determinism,
            format!(
                "{} probe readouts with several classes",
                exploration.nondeterministic_probes
            ),
        );
    }

    let total: f64 = exploration.records.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > TOLERANCE {
        fail(
            CheckKind::Normalization,
            format!("record probabilities sum to {total}"),
        );
    }

    if let Some((_, p0)) = exploration.records.first() {
        if exploration
            .records
            .iter()
            .any(|(_, p)| (p - p0).abs() > TOLERANCE)
        {
            fail(
                CheckKind::Equiprobability,
                "records of one label have different probabilities".into(),
            );
        }
    }

    for (record, _) in &exploration.records {
        if !record.is_complete() {
            fail(
                CheckKind::RoundTrip,
                format!("incomplete record {record:?}"),
            );
            continue;
        }
        let decoded = AnyLabel::decode(record);
        if &decoded != label {
            fail(CheckKind::RoundTrip, format!("decoded as {decoded}"));
        }
    }

    // Records predicted by the direct basis expansion of each pre-SPBSM state.
    let mut predicted: HashMap<(Vec<ProbeOutcome>, Vec<SpbsmKind>), f64> = HashMap::new();
    for leaf in &exploration.leaves {
        match expand_in_spbsm_basis(&leaf.state) {
            Ok(dist) => {
                for (combo, amp) in &dist.entries {
                    predicted.insert(
                        (leaf.probe_outcomes.clone(), combo.clone()),
                        leaf.probability * amp.norm_sqr(),
                    );
                }
            }
            Err(e) => fail(CheckKind::OracleAgreement, format!("expansion failed: {e}")),
        }
    }
    let observed: HashMap<(Vec<ProbeOutcome>, Vec<SpbsmKind>), f64> = exploration
        .records
        .iter()
        .map(|(r, p)| {
            (
                (
                    r.probe_outcomes.clone(),
                    r.spbsm_outcomes.iter().map(|o| o.kind).collect(),
                ),
                *p,
            )
        })
        .collect();
    let agree = predicted.len() == observed.len()
        && predicted
            .iter()
            .all(|(k, p)| observed.get(k).is_some_and(|q| (p - q).abs() <= TOLERANCE));
    if !agree {
        fail(
            CheckKind::OracleAgreement,
            format!(
                "{} predicted vs {} enumerated outcomes",
                predicted.len(),
                observed.len()
            ),
        );
    }

    if let [leaf] = exploration.leaves.as_slice() {
        if let Err(detail) = check_qnd(label, &leaf.state) {
            fail(CheckKind::Qnd, detail);
        }
    }

    let (pol, spatial) = label.relation_labels();
    let complement: Vec<bool> = pol.bits().iter().map(|b| !b).collect();
    for (record, _) in &exploration.records {
        if pol_sign(&spatial, &record.spbsm_outcomes) != pol.sign() {
            fail(CheckKind::SignRelation, format!("{record:?}"));
        }
        let bits = candidate_pol_bits(&spatial, &record.spbsm_outcomes);
        if bits != pol.bits() && bits != complement {
            fail(CheckKind::BitRelation, format!("{record:?}"));
        }
    }

    check.records = exploration.records;
    check
}

/// Factor fidelities of the state left after the probe stage.
fn check_qnd(label: &AnyLabel, state: &PureState) -> std::result::Result<(), String> {
    let (pol_target, spatial_target) = match label {
        AnyLabel::Bell(l) => (
            DofState::bell(Dof::Polarization, l.pol),
            DofState::bell(Dof::Spatial, spatial_state_after_probes(l.spatial)),
        ),
        AnyLabel::Ghz(l) => (
            DofState::ghz(Dof::Polarization, l.pol()),
            DofState::ghz(Dof::Spatial, l.spatial()),
        ),
    };
    let compare = |dof: Dof, target: &DofState| -> std::result::Result<(), String> {
        let factor = factor_dof(state, dof).map_err(|e| format!("{dof:?}: {e}"))?;
        let f = factor.fidelity(target).map_err(|e| e.to_string())?;
        if (f - 1.0).abs() > TOLERANCE {
            return Err(format!("{dof:?} factor fidelity {f}"));
        }
        Ok(())
    };
    compare(Dof::Polarization, &pol_target)?;
    compare(Dof::Spatial, &spatial_target)
}

/// Exhaustive completeness check of one analyzer. Failures are collected in
/// the report rather than returned as errors.
pub fn verify_all(circuit: CircuitKind, n_photons: usize) -> Result<VerificationReport> {
    match circuit {
        CircuitKind::Hbsa if n_photons != 2 => {
            return Err(Error::ShapeMismatch(format!(
                "the Bell analyzer takes 2 photons, not {n_photons}"
            )))
        }
        CircuitKind::Hgsa if n_photons < 2 => return Err(Error::TooFewPhotons(n_photons)),
        _ => {}
    }
    let start = Instant::now();
    let labels = AnyLabel::all(circuit, n_photons);
    let checks: Vec<LabelCheck> = labels.par_iter().map(check_label).collect();

    let mut failures = Vec::new();
    let mut owner: HashMap<&MeasurementRecord, usize> = HashMap::new();
    let mut labels_failed = vec![false; labels.len()];
    let mut records_per_label = BTreeMap::new();
    let mut record_probabilities: Vec<f64> = Vec::new();
    let mut total_records = 0;

    for (i, (label, check)) in labels.iter().zip(&checks).enumerate() {
        for (kind, detail) in &check.failures {
            failures.push(Failure {
                check: *kind,
                label: label.to_string(),
                detail: detail.clone(),
            });
            labels_failed[i] = true;
        }
        *records_per_label.entry(check.records.len()).or_insert(0) += 1;
        total_records += check.records.len();
        for (record, p) in &check.records {
            if !record_probabilities
                .iter()
                .any(|q| (q - p).abs() <= TOLERANCE)
            {
                record_probabilities.push(*p);
            }
            if let Some(&other) = owner.get(record) {
                if other != i {
                    failures.push(Failure {
                        check: CheckKind::Partition,
                        label: label.to_string(),
                        detail: format!("record also reachable from {}", labels[other]),
                    });
                    labels_failed[i] = true;
                    labels_failed[other] = true;
                }
            } else {
                owner.insert(record, i);
            }
        }
    }
    record_probabilities.sort_by(f64::total_cmp);

    let mut check_failures: BTreeMap<CheckKind, usize> =
        CheckKind::ALL.iter().map(|k| (*k, 0)).collect();
    for f in &failures {
        *check_failures.entry(f.check).or_insert(0) += 1;
    }

    Ok(VerificationReport {
        circuit,
        n_photons,
        labels_tested: labels.len(),
        labels_passed: labels_failed.iter().filter(|f| !**f).count(),
        total_records,
        records_per_label,
        record_probabilities,
        check_failures,
        failures,
        wall_time: start.elapsed(),
    })
}

/// Bell label with the highest fidelity to a two-photon factor.
pub fn identify_bell(factor: &DofState) -> Option<BellLabel> {
    BellLabel::ALL.into_iter().find(|l| {
        factor
            .fidelity(&DofState::bell(factor.dof(), *l))
            .is_ok_and(|f| (f - 1.0).abs() <= TOLERANCE)
    })
}
