//! Two-receiver layout over an M-slot extension: transmitter 1 spends its
//! extension on a single artificial-noise stream, and every other transmitter
//! sends one message per receiver, beamformed so that all interference lands
//! exactly on the noise direction at the unintended receiver.



use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::network::{ExtendedChannelSet, RxId};
use crate::sampling::{sample_annulus, stream_rng, StreamPurpose};

use super::{BeamformingPlan, GroupKind, PlanDims, SchemeKind, StreamGroup};

/// Builds the M x 2 plan. Requires K = 2 and extension length L = M.
///
/// The noise beamformer is drawn from the bounded annulus; each message
/// beamformer is the closed-form solve that equalizes its observation at the
/// unintended receiver with the noise observation there.
pub fn build_mx2_ana(
    channels: &ExtendedChannelSet,
    num_tx: usize,
    seed: u64,
) -> Result<BeamformingPlan> {
    if channels.num_rx != 2 {
        return Err(Error::UnsupportedK { k: channels.num_rx });
    }
    if channels.num_tx != num_tx {
        return Err(Error::DimensionMismatch(format!(
            "channels carry {} transmitters, plan wants {num_tx}",
            channels.num_tx
        )));
    }
    if channels.extension_len != num_tx {
        return Err(Error::DimensionMismatch(format!(
            "extension length must equal M = {num_tx}, got {}",
            channels.extension_len
        )));
    }
    if channels.blind.is_some() {
        return Err(Error::DimensionMismatch(
            "mx2 layout needs varying channels, not a switching structure".into(),
        ));
    }
    let m = num_tx;
    let mut rng = stream_rng(seed, StreamPurpose::NoiseBeamformer, 0, 0);
    let noise_bf = CMat::from_fn(m, 1, |_, _| sample_annulus(&mut rng, channels.bounds));

    // message beamformer for (rx k, tx j): diag(H_{ij})^{-1} diag(H_{i1}) * noise_bf,
    // with i the other receiver. Diagonals make the solve elementwise.
    let message_bf = |k: usize, j: usize| -> Result<CMat> {
        let i = 3 - k;
        let hi1 = channels.diagonal(RxId::Rx(i), 1)?;
        let hij = channels.diagonal(RxId::Rx(i), j)?;
        Ok(CMat::from_fn(m, 1, |t, _| {
            hi1[t] / hij[t] * noise_bf[(t, 0)]
        }))
    };

    let mut groups = Vec::with_capacity(2 * (m - 1) + 1);
    for k in 1..=2 {
        for j in 2..=m {
            groups.push(StreamGroup {
                owner_tx: j,
                intended_rx: Some(k),
                kind: GroupKind::Message,
                beamformer: message_bf(k, j)?,
                power_share: 1.0,
            });
        }
    }
    groups.push(StreamGroup {
        owner_tx: 1,
        intended_rx: None,
        kind: GroupKind::ArtificialNoise,
        beamformer: noise_bf,
        power_share: 1.0,
    });

    let plan = BeamformingPlan {
        scheme: SchemeKind::Mx2Ana,
        num_tx: m,
        num_rx: 2,
        include_eve: false,
        dims: PlanDims {
            extension_len: m,
            relations_per_block: None,
            alignment_order: None,
            noise_streams_per_rx: None,
            group_cols: groups.iter().map(StreamGroup::streams).collect(),
        },
        groups,
    };
    plan.validate(m)?;
    Ok(plan)
}
