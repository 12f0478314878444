//! The three relation tables of the analyzers, generated from the circuits
//! and the decoder rather than written down.

use std::collections::{BTreeMap, BTreeSet};

use crate::circuits::WiringPlan;
use crate::decoder::decode_polarization;
use crate::elements::{ProbeClass, SpbsmKind, SpbsmOutcome};
use crate::error::{Error, Result};
use crate::hilbert::{
    factor_dof, make_hyper_bell, make_hyper_ghz, BellLabel, Dof, GhzLabel, HyperBellLabel,
    HyperGhzLabel,
};
use crate::oracle::{explore, identify_bell, ProbeStageLeaf};

/// Spatial Bell state before and after the HBSA probe stage, with the two
/// probe classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableOneRow {
    pub original: BellLabel,
    pub new: BellLabel,
    pub probes: [ProbeClass; 2],
}

/// Hyperentangled Bell states (as seen by the SPBSMs) sharing one set of
/// possible detections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableTwoGroup {
    pub states: Vec<HyperBellLabel>,
    pub detections: Vec<(SpbsmKind, SpbsmKind)>,
}

/// Probe classes of the three-photon GHZ analyzer for one spatial label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableThreeRow {
    pub spatial: GhzLabel,
    pub probes: [ProbeClass; 3],
}

fn single_leaf(plan: &WiringPlan, state: &crate::hilbert::PureState) -> Result<ProbeStageLeaf> {
    let mut leaves = explore(plan, state)?.leaves;
    if leaves.len() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "probe stage has {} outcomes, expected one",
            leaves.len()
        )));
    }
    Ok(leaves.remove(0))
}

fn classes<const N: usize>(leaf: &ProbeStageLeaf) -> [ProbeClass; N] {
    std::array::from_fn(|i| leaf.probe_outcomes[i].class)
}

pub fn table_one() -> Result<Vec<TableOneRow>> {
    let plan = WiringPlan::hbsa();
    BellLabel::ALL
        .into_iter()
        .map(|original| {
            let input = make_hyper_bell(
                HyperBellLabel::new(BellLabel::PHI_PLUS, original),
                plan.probe_units(),
            );
            let leaf = single_leaf(&plan, &input)?;
            let factor = factor_dof(&leaf.state, Dof::Spatial)?;
            let new = identify_bell(&factor).ok_or(Error::NotAProduct)?;
            Ok(TableOneRow {
                original,
                new,
                probes: classes(&leaf),
            })
        })
        .collect()
}

/// Groups the 16 post-probe Bell states by the SPBSM pairs the decoder
/// attributes to them.
pub fn table_two() -> Vec<TableTwoGroup> {
    let mut detections: BTreeMap<HyperBellLabel, BTreeSet<(SpbsmKind, SpbsmKind)>> =
        BTreeMap::new();
    for new_spatial in BellLabel::ALL {
        for a in SpbsmKind::ALL {
            for b in SpbsmKind::ALL {
                let outcomes = [
                    SpbsmOutcome {
                        photon_index: 0,
                        kind: a,
                    },
                    SpbsmOutcome {
                        photon_index: 1,
                        kind: b,
                    },
                ];
                let pol = decode_polarization(&new_spatial.to_ghz(), &outcomes);
                let pol = BellLabel::from_ghz(&pol).expect("two-photon label");
                detections
                    .entry(HyperBellLabel::new(pol, new_spatial))
                    .or_default()
                    .insert((a, b));
            }
        }
    }

    let mut groups: BTreeMap<Vec<(SpbsmKind, SpbsmKind)>, Vec<HyperBellLabel>> = BTreeMap::new();
    for (state, set) in detections {
        groups
            .entry(set.into_iter().collect())
            .or_default()
            .push(state);
    }
    let mut groups: Vec<TableTwoGroup> = groups
        .into_iter()
        .map(|(detections, states)| TableTwoGroup { states, detections })
        .collect();
    // Rows keyed by the photon-B partner of φ⁺ on photon A: φ⁺, ψ⁺, φ⁻, ψ⁻.
    let row_key = |g: &TableTwoGroup| {
        let partner = g
            .detections
            .iter()
            .find(|(a, _)| *a == SpbsmKind::PhiPlus)
            .map(|(_, b)| *b);
        [
            SpbsmKind::PhiPlus,
            SpbsmKind::PsiPlus,
            SpbsmKind::PhiMinus,
            SpbsmKind::PsiMinus,
        ]
        .iter()
        .position(|k| Some(*k) == partner)
    };
    groups.sort_by_key(row_key);
    groups
}

pub fn table_three() -> Result<Vec<TableThreeRow>> {
    let plan = WiringPlan::hgsa(3)?;
    let pol = GhzLabel::all(3).remove(0);
    GhzLabel::all(3)
        .into_iter()
        .map(|spatial| {
            let label = HyperGhzLabel::new(pol.clone(), spatial.clone())?;
            let leaf = single_leaf(&plan, &make_hyper_ghz(&label, plan.probe_units()))?;
            Ok(TableThreeRow {
                spatial,
                probes: classes(&leaf),
            })
        })
        .collect()
}
