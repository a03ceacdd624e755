//! Beamforming-plan construction and effective-channel composition.
//!
//! Three artificial-noise-alignment layouts share one plan shape: a list of
//! stream groups, each carrying a transmit-side beamformer and a per-stream
//! power share. Composing a plan with a channel set yields the effective
//! matrices every observer actually sees.

mod asymptotic;
mod blind;
mod mx2;

pub use asymptotic::{asymptotic_dims, build_asymptotic_ana, AsymptoticDims};
pub use blind::{blind_stream_layout, build_blind_ana, elementary_v, phi_matrix};
pub use mx2::build_mx2_ana;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, CMat};
use crate::network::{ExtendedChannelSet, RxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Message,
    ArtificialNoise,
}

/// One bundle of streams sharing an owner, a beamformer, and a power share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamGroup {
    #[serde(rename = "owner")]
    pub owner_tx: usize,
    /// Intended receiver for messages; for artificial noise, the alignment
    /// block the noise protects (absent for the single unassociated noise
    /// stream of the Mx2 layout).
    #[serde(rename = "intended")]
    pub intended_rx: Option<usize>,
    pub kind: GroupKind,
    #[serde(rename = "matrix", with = "crate::sermat")]
    pub beamformer: CMat,
    /// Per-stream fraction of the transmit power P.
    pub power_share: f64,
}

impl StreamGroup {
    pub fn streams(&self) -> usize {
        self.beamformer.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "mx2")]
    Mx2Ana,
    #[serde(rename = "asymptotic")]
    AsymptoticAna,
    #[serde(rename = "blind")]
    BlindAna,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            SchemeKind::Mx2Ana => "mx2",
            SchemeKind::AsymptoticAna => "asymptotic",
            SchemeKind::BlindAna => "blind",
        };
        f.write_str(tag)
    }
}

/// Dimension record of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDims {
    pub extension_len: usize,
    /// Span-containment relations per alignment block (asymptotic layout).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relations_per_block: Option<usize>,
    /// Order parameter of the asymptotic beamformer products.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment_order: Option<usize>,
    /// Noise streams per receiver (blind layout).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_streams_per_rx: Option<usize>,
    /// Column count of each group, in group order.
    pub group_cols: Vec<usize>,
}

/// A complete transmission layout: which transmitter sends what, through
/// which beamformer, at which power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformingPlan {
    pub scheme: SchemeKind,
    pub num_tx: usize,
    pub num_rx: usize,
    pub include_eve: bool,
    pub dims: PlanDims,
    pub groups: Vec<StreamGroup>,
}

impl BeamformingPlan {
    /// Structural validation shared by all builders: positive power shares,
    /// numerically full-column-rank beamformers, and per-transmitter column
    /// budgets within the extension dimension.
    pub(crate) fn validate(&self, transmit_dim: usize) -> Result<()> {
        let mut per_tx_cols = vec![0usize; self.num_tx + 1];
        for (i, g) in self.groups.iter().enumerate() {
            if g.power_share <= 0.0 || !g.power_share.is_finite() {
                return Err(Error::InvalidPower(format!(
                    "group {i} has power share {}",
                    g.power_share
                )));
            }
            if g.beamformer.nrows() != transmit_dim {
                return Err(Error::DimensionMismatch(format!(
                    "group {i} beamformer has {} rows, transmit dimension is {transmit_dim}",
                    g.beamformer.nrows()
                )));
            }
            let sv = singular_values(&g.beamformer);
            let smax = sv.first().copied().unwrap_or(0.0);
            let cut = smax * (g.beamformer.nrows().max(g.beamformer.ncols()) as f64) * f64::EPSILON;
            let rank = sv.iter().filter(|&&s| s > cut).count();
            if rank < g.streams() {
                return Err(Error::Numerical(format!(
                    "group {i} beamformer is column-rank deficient ({rank} < {})",
                    g.streams()
                )));
            }
            per_tx_cols[g.owner_tx] += g.streams();
        }
        for (tx, &cols) in per_tx_cols.iter().enumerate().skip(1) {
            if cols > transmit_dim {
                return Err(Error::DimensionMismatch(format!(
                    "transmitter {tx} carries {cols} streams over a {transmit_dim}-dimensional extension"
                )));
            }
        }
        Ok(())
    }

    /// Groups carrying messages for receiver `rx`.
    pub fn message_groups_for(&self, rx: usize) -> impl Iterator<Item = (usize, &StreamGroup)> {
        self.groups.iter().enumerate().filter(move |(_, g)| {
            g.kind == GroupKind::Message && g.intended_rx == Some(rx)
        })
    }
}

/// One composed matrix: what `observer` sees of one stream group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveGroup {
    pub group_index: usize,
    pub owner_tx: usize,
    pub intended_rx: Option<usize>,
    pub kind: GroupKind,
    pub power_share: f64,
    #[serde(with = "crate::sermat")]
    pub matrix: CMat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverChannels {
    pub observer: RxId,
    pub groups: Vec<EffectiveGroup>,
}

impl ObserverChannels {
    /// Message groups intended for this observer.
    pub fn signal_groups(&self) -> Vec<&EffectiveGroup> {
        let me = match self.observer {
            RxId::Rx(k) => k,
            RxId::Eve => return Vec::new(),
        };
        self.groups
            .iter()
            .filter(|g| g.kind == GroupKind::Message && g.intended_rx == Some(me))
            .collect()
    }

    /// Everything that is not a signal group at this observer.
    pub fn interference_groups(&self) -> Vec<&EffectiveGroup> {
        let signal: Vec<usize> = self.signal_groups().iter().map(|g| g.group_index).collect();
        self.groups
            .iter()
            .filter(|g| !signal.contains(&g.group_index))
            .collect()
    }

    pub fn group(&self, kind: GroupKind, intended: Option<usize>, owner: usize) -> Option<&EffectiveGroup> {
        self.groups
            .iter()
            .find(|g| g.kind == kind && g.intended_rx == intended && g.owner_tx == owner)
    }
}

/// Per-observer composed matrices for every group in the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannelSet {
    pub extension_len: usize,
    pub observers: Vec<ObserverChannels>,
}

impl EffectiveChannelSet {
    pub fn observer(&self, rx: RxId) -> Result<&ObserverChannels> {
        self.observers
            .iter()
            .find(|o| o.observer == rx)
            .ok_or(Error::MissingChannel { rx, tx: 0 })
    }
}

/// Observers participating in one alignment block of a plan: every receiver
/// except the block's own, then the eavesdropper when the plan covers one.
pub fn block_observers_for_plan(plan: &BeamformingPlan, block: usize) -> Vec<RxId> {
    asymptotic::block_observers(plan.num_rx, block, plan.include_eve)
}

/// Composes every plan group with every observer's channel. Group order is
/// preserved, so downstream column layouts are deterministic.
pub fn effective_channels(
    plan: &BeamformingPlan,
    channels: &ExtendedChannelSet,
) -> Result<EffectiveChannelSet> {
    if plan.num_tx != channels.num_tx || plan.num_rx != channels.num_rx {
        return Err(Error::DimensionMismatch(format!(
            "plan is {}x{}, channels are {}x{}",
            plan.num_tx, plan.num_rx, channels.num_tx, channels.num_rx
        )));
    }
    if plan.include_eve && !channels.has_eve() {
        return Err(Error::MissingChannel { rx: RxId::Eve, tx: 1 });
    }
    let mut observers = Vec::new();
    for obs in channels.observers() {
        let mut groups = Vec::with_capacity(plan.groups.len());
        for (i, g) in plan.groups.iter().enumerate() {
            let matrix = channels.observe(obs, g.owner_tx, &g.beamformer)?;
            groups.push(EffectiveGroup {
                group_index: i,
                owner_tx: g.owner_tx,
                intended_rx: g.intended_rx,
                kind: g.kind,
                power_share: g.power_share,
                matrix,
            });
        }
        observers.push(ObserverChannels { observer: obs, groups });
    }
    Ok(EffectiveChannelSet {
        extension_len: channels.extension_len,
        observers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{draw_varying_channels, NetworkSpec, SchemeVariant};
    use num_complex::Complex64;

    #[test]
    fn mx2_effective_columns_are_the_diagonal_products() {
        let spec = NetworkSpec::new(3, 2, SchemeVariant::XncmVarying, 3).unwrap();
        let ch = draw_varying_channels(&spec, 13).unwrap();
        let plan = build_mx2_ana(&ch, 3, 13).unwrap();
        let eff = effective_channels(&plan, &ch).unwrap();
        let rx1 = eff.observer(RxId::Rx(1)).unwrap();

        // effective matrix at rx 1 stacks [H12 phi(1,2), H13 phi(1,3), H11 noise]
        let mut expected_cols: Vec<CMat> = Vec::new();
        for tx in 2..=3 {
            let (_, g) = plan
                .message_groups_for(1)
                .find(|(_, g)| g.owner_tx == tx)
                .unwrap();
            let diag = ch.diagonal(RxId::Rx(1), tx).unwrap();
            expected_cols.push(CMat::from_fn(3, 1, |t, _| diag[t] * g.beamformer[(t, 0)]));
        }
        let noise = plan.groups.last().unwrap();
        let h11 = ch.diagonal(RxId::Rx(1), 1).unwrap();
        expected_cols.push(CMat::from_fn(3, 1, |t, _| h11[t] * noise.beamformer[(t, 0)]));

        for (col, expected) in [(GroupKind::Message, 2), (GroupKind::Message, 3)]
            .iter()
            .map(|&(kind, tx)| (rx1.group(kind, Some(1), tx).unwrap(), tx - 2))
            .chain(std::iter::once((
                rx1.group(GroupKind::ArtificialNoise, None, 1).unwrap(),
                2,
            )))
        {
            assert_eq!(col.matrix, expected_cols[expected]);
        }

        let signal = rx1.signal_groups();
        assert_eq!(signal.len(), 2);
        assert_eq!(rx1.interference_groups().len(), 3);
    }

    #[test]
    fn asymptotic_effective_set_fills_the_square_extension() {
        let dims = asymptotic_dims(2, 2, 1, true).unwrap();
        let spec =
            NetworkSpec::new(2, 2, SchemeVariant::XncmExternalEve, dims.extension_len).unwrap();
        let ch = draw_varying_channels(&spec, 3).unwrap();
        let plan = build_asymptotic_ana(&ch, 2, 2, 1, true, 3).unwrap();
        let eff = effective_channels(&plan, &ch).unwrap();
        assert_eq!(eff.observers.len(), 3);
        let rx1 = eff.observer(RxId::Rx(1)).unwrap();
        // own noise block + own message + foreign noise block span 4 + 1 + 4 = 9
        let own_noise = rx1.group(GroupKind::ArtificialNoise, Some(1), 1).unwrap();
        let own_msg = rx1.group(GroupKind::Message, Some(1), 2).unwrap();
        let foreign_noise = rx1.group(GroupKind::ArtificialNoise, Some(2), 1).unwrap();
        let total = own_noise.matrix.ncols() + own_msg.matrix.ncols() + foreign_noise.matrix.ncols();
        assert_eq!(total, 9);
        assert!(rx1.groups.iter().all(|g| g.matrix.nrows() == 9));
        let eve = eff.observer(RxId::Eve).unwrap();
        assert!(eve.signal_groups().is_empty());
        assert_eq!(eve.interference_groups().len(), plan.groups.len());
    }

    #[test]
    fn mismatched_plan_and_channels_are_rejected() {
        let spec3 = NetworkSpec::new(3, 2, SchemeVariant::XncmVarying, 3).unwrap();
        let ch3 = draw_varying_channels(&spec3, 1).unwrap();
        let plan3 = build_mx2_ana(&ch3, 3, 1).unwrap();
        let spec2 = NetworkSpec::new(2, 2, SchemeVariant::XncmVarying, 2).unwrap();
        let ch2 = draw_varying_channels(&spec2, 1).unwrap();
        assert!(effective_channels(&plan3, &ch2).is_err());
    }

    #[test]
    fn stream_group_json_uses_the_compact_names() {
        let g = StreamGroup {
            owner_tx: 2,
            intended_rx: Some(1),
            kind: GroupKind::Message,
            beamformer: CMat::from_element(2, 1, Complex64::new(1.0, -1.0)),
            power_share: 1.0,
        };
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"owner\":2"), "{json}");
        assert!(json.contains("\"intended\":1"), "{json}");
        assert!(json.contains("\"matrix\":{"), "{json}");
        let back: StreamGroup = serde_json::from_str(&json).unwrap();
        assert_eq!(g, back);
    }
}
