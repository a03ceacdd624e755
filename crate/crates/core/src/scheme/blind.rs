//! Blind layout for two receivers with reconfigurable antennas: 0/1
//! beamformers that never consult channel values, combined with a permutation
//! that routes every artificial-noise stream onto the first antenna of its
//! extension copy so the noise survives in each collapsed interference
//! dimension.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, CMat};
use crate::network::{blind_switch_pattern, ExtendedChannelSet, RxId};

use super::{BeamformingPlan, GroupKind, PlanDims, SchemeKind, StreamGroup};

fn zero_one(m: &mut CMat, row: usize, col: usize) {
    m[(row, col)] = Complex64::new(1.0, 0.0);
}

/// Stream counts per receiver for the two-receiver blind layout:
/// (message streams, noise streams) = ((M-1)^2, M-1).
pub fn blind_stream_layout(num_tx: usize) -> (usize, usize) {
    let alpha = num_tx - 1;
    (alpha * num_tx - alpha, alpha)
}

/// The 0/1 slot-assignment beamformer of receiver `rx` over the supersymbol:
/// an (M*beta) x (M*alpha) matrix of M x M identity blocks.
///
/// Receiver 1 cycles its antenna, so its extension copies occupy hold-blocks
/// of M consecutive slots; receiver 2 holds its antenna, so its copies cycle
/// with period M. The final (K-1)*alpha slots carry nothing for receiver 1.
pub fn phi_matrix(num_tx: usize, rx: usize) -> Result<CMat> {
    if !(1..=2).contains(&rx) {
        return Err(Error::UnsupportedK { k: rx });
    }
    if num_tx < 2 {
        return Err(Error::InvalidNetwork(format!("need M >= 2, got M = {num_tx}")));
    }
    let m = num_tx;
    let alpha = m - 1;
    let beta = m * m - 1;
    let mut phi = CMat::zeros(m * beta, m * alpha);
    for t in 1..=beta {
        let block = match rx {
            1 if t <= m * alpha => Some((t - 1) / m + 1),
            2 if t % m != 0 => Some(t % m),
            _ => None,
        };
        if let Some(a) = block.filter(|&a| a <= alpha) {
            for d in 0..m {
                zero_one(&mut phi, (t - 1) * m + d, (a - 1) * m + d);
            }
        }
    }
    Ok(phi)
}

/// The shared stream permutation `[V_mu | V_nu]`. Its noise block routes
/// noise stream a onto the first antenna dimension of extension copy a
/// (identity tensor first-basis-vector); for M = 3 the message block uses the
/// fixed assignment below, otherwise message streams fill the remaining
/// antenna dimensions in ascending order.
pub fn elementary_v(num_tx: usize) -> Result<CMat> {
    if num_tx < 2 {
        return Err(Error::InvalidNetwork(format!("need M >= 2, got M = {num_tx}")));
    }
    let m = num_tx;
    let alpha = m - 1;
    let dim = m * alpha;
    let msg_cols = dim - alpha;
    let mut v = CMat::zeros(dim, dim);
    // noise block: column a -> row a*M (0-based), i.e. I_alpha (x) e_1
    for a in 0..alpha {
        zero_one(&mut v, a * m, msg_cols + a);
    }
    let message_rows: Vec<usize> = match m {
        3 => vec![4, 1, 2, 5],
        _ => (0..dim).filter(|r| r % m != 0).collect(),
    };
    for (c, &r) in message_rows.iter().enumerate() {
        zero_one(&mut v, r, c);
    }
    Ok(v)
}

fn numeric_rank_default(a: &CMat) -> usize {
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON * 64.0;
    sv.iter().filter(|&&s| s > cut).count()
}

/// Builds the blind plan for K = 2 from switching-structured channels.
///
/// M in {2, 3} use the fixed reference layouts. Larger M follows the same
/// block rules but is accepted only with `allow_experimental`, and only after
/// the composed layout passes its rank checks on the given channels.
pub fn build_blind_ana(
    channels: &ExtendedChannelSet,
    num_tx: usize,
    num_rx: usize,
    allow_experimental: bool,
) -> Result<BeamformingPlan> {
    if num_rx != 2 || channels.num_rx != 2 {
        return Err(Error::UnsupportedK { k: if num_rx != 2 { num_rx } else { channels.num_rx } });
    }
    if channels.num_tx != num_tx {
        return Err(Error::DimensionMismatch(format!(
            "channels carry {} modes, plan wants {num_tx}",
            channels.num_tx
        )));
    }
    let blind = channels.blind.as_ref().ok_or_else(|| {
        Error::DimensionMismatch("blind layout needs switching-structured channels".into())
    })?;
    let expected = blind_switch_pattern(num_tx, 2)?;
    if blind.pattern != expected {
        return Err(Error::DimensionMismatch(
            "channel switch pattern does not match the blind layout".into(),
        ));
    }
    let beta = num_tx * num_tx - 1;
    if channels.extension_len != beta {
        return Err(Error::DimensionMismatch(format!(
            "supersymbol must span {beta} slots, got {}",
            channels.extension_len
        )));
    }
    if num_tx > 3 && !allow_experimental {
        return Err(Error::Config(format!(
            "blind layout for M = {num_tx} is experimental; enable it explicitly"
        )));
    }

    let m = num_tx;
    let alpha = m - 1;
    let (msg_cols, _) = blind_stream_layout(m);
    let v = elementary_v(m)?;
    let v_msg = v.columns(0, msg_cols).into_owned();
    let v_noise = v.columns(msg_cols, alpha).into_owned();

    let mut groups = Vec::with_capacity(4);
    for rx in 1..=2usize {
        let phi = phi_matrix(m, rx)?;
        groups.push(StreamGroup {
            owner_tx: 1,
            intended_rx: Some(rx),
            kind: GroupKind::Message,
            beamformer: &phi * &v_msg,
            power_share: 1.0,
        });
        groups.push(StreamGroup {
            owner_tx: 1,
            intended_rx: Some(rx),
            kind: GroupKind::ArtificialNoise,
            beamformer: &phi * &v_noise,
            power_share: 1.0,
        });
    }

    let plan = BeamformingPlan {
        scheme: SchemeKind::BlindAna,
        num_tx: m,
        num_rx: 2,
        include_eve: false,
        dims: PlanDims {
            extension_len: beta,
            relations_per_block: None,
            alignment_order: None,
            noise_streams_per_rx: Some(alpha),
            group_cols: groups.iter().map(StreamGroup::streams).collect(),
        },
        groups,
    };
    plan.validate(m * beta)?;

    if num_tx > 3 {
        experimental_rank_check(&plan, channels, m, alpha)?;
    }
    Ok(plan)
}

/// The generalized layout is accepted only when the drawn channels certify
/// it: full signal rank, collapsed interference rank, and noise filling every
/// interference dimension.
fn experimental_rank_check(
    plan: &BeamformingPlan,
    channels: &ExtendedChannelSet,
    m: usize,
    alpha: usize,
) -> Result<()> {
    for rx in 1..=2usize {
        let other = 3 - rx;
        let own: Vec<&StreamGroup> =
            plan.groups.iter().filter(|g| g.intended_rx == Some(rx)).collect();
        let foreign: Vec<&StreamGroup> =
            plan.groups.iter().filter(|g| g.intended_rx == Some(other)).collect();
        let own_seen: Vec<CMat> = own
            .iter()
            .map(|g| channels.observe(RxId::Rx(rx), 1, &g.beamformer))
            .collect::<Result<_>>()?;
        let signal = crate::linalg::hstack(&own_seen.iter().collect::<Vec<_>>());
        if numeric_rank_default(&signal) != m * alpha {
            return Err(Error::ExperimentalBlindRank(format!(
                "signal rank at rx {rx} is {} (want {})",
                numeric_rank_default(&signal),
                m * alpha
            )));
        }
        let foreign_seen: Vec<CMat> = foreign
            .iter()
            .map(|g| channels.observe(RxId::Rx(rx), 1, &g.beamformer))
            .collect::<Result<_>>()?;
        let interference = crate::linalg::hstack(&foreign_seen.iter().collect::<Vec<_>>());
        if numeric_rank_default(&interference) != alpha {
            return Err(Error::ExperimentalBlindRank(format!(
                "interference rank at rx {rx} is {} (want {alpha})",
                numeric_rank_default(&interference)
            )));
        }
        let noise_fill = foreign
            .iter()
            .zip(&foreign_seen)
            .find(|(g, _)| g.kind == GroupKind::ArtificialNoise)
            .map(|(_, seen)| seen)
            .expect("plan carries a noise group per receiver");
        if numeric_rank_default(noise_fill) != alpha {
            return Err(Error::ExperimentalBlindRank(format!(
                "noise fills {} of {alpha} interference dimensions at rx {rx}",
                numeric_rank_default(noise_fill)
            )));
        }
    }
    Ok(())
}
