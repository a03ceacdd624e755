//! Asymptotic alignment layout: transmitter 1 carries one artificial-noise
//! block per receiver; every other transmitter sends one message block per
//! receiver. Beamformer columns are products of per-observer channel-ratio
//! diagonals raised to bounded integer exponents, so each message block lands
//! inside the span of its matching noise block at every unintended observer.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::network::{ExtendedChannelSet, RxId};
use crate::sampling::{sample_annulus, stream_rng, StreamPurpose};

use super::{BeamformingPlan, GroupKind, PlanDims, SchemeKind, StreamGroup};

/// Keeps the dense linear algebra at desk scale.
pub const EXTENSION_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AsymptoticDims {
    /// Containment relations per alignment block: observers times (M - 1).
    pub relations_per_block: usize,
    /// Extension length of the supersymbol.
    pub extension_len: usize,
    /// Columns of each noise block.
    pub noise_cols: usize,
    /// Columns of each message block.
    pub message_cols: usize,
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
        if acc > EXTENSION_CAP {
            return None;
        }
    }
    Some(acc)
}

/// Dimension bookkeeping for the asymptotic layout with order parameter
/// `order` >= 1. Excluding the eavesdropper drops its relations from every
/// block, which shrinks the exponent grid accordingly.
pub fn asymptotic_dims(
    num_tx: usize,
    num_rx: usize,
    order: usize,
    include_eve: bool,
) -> Result<AsymptoticDims> {
    if num_tx < 2 || num_rx < 2 {
        return Err(Error::InvalidNetwork(format!(
            "need M >= 2 and K >= 2, got M = {num_tx}, K = {num_rx}"
        )));
    }
    if order == 0 {
        return Err(Error::InvalidNetwork("order parameter must be >= 1".into()));
    }
    let observers_per_block = num_rx - 1 + usize::from(include_eve);
    let relations_per_block = observers_per_block * (num_tx - 1);
    let over_cap = || Error::ExtensionCap { required: EXTENSION_CAP + 1, cap: EXTENSION_CAP };
    let noise_cols = checked_pow(order + 1, relations_per_block).ok_or_else(over_cap)?;
    let message_cols = checked_pow(order, relations_per_block).ok_or_else(over_cap)?;
    let extension_len = num_rx
        .checked_mul(noise_cols)
        .and_then(|a| a.checked_add((num_tx - 1) * message_cols))
        .ok_or_else(over_cap)?;
    if extension_len > EXTENSION_CAP {
        return Err(Error::ExtensionCap { required: extension_len, cap: EXTENSION_CAP });
    }
    Ok(AsymptoticDims {
        relations_per_block,
        extension_len,
        noise_cols,
        message_cols,
    })
}

/// Odometer over exponent vectors in {1..=max} ^ len, last index fastest.
fn exponent_grid(len: usize, max: usize) -> Vec<Vec<u32>> {
    let total = (max as u64).pow(len as u32) as usize;
    let mut out = Vec::with_capacity(total);
    let mut current = vec![1u32; len];
    loop {
        out.push(current.clone());
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < max as u32 {
                current[i] += 1;
                current[i + 1..].fill(1);
                break;
            }
        }
    }
}

/// Column index of an exponent vector inside the grid built by
/// `exponent_grid(len, max)`.
#[cfg(test)]
pub(crate) fn exponent_index(exponents: &[u32], max: usize) -> usize {
    exponents
        .iter()
        .fold(0usize, |acc, &e| acc * max + (e as usize - 1))
}

fn product_column(ratios: &[Vec<Complex64>], exponents: &[u32], seed_vec: &[Complex64]) -> Vec<Complex64> {
    let mut col = seed_vec.to_vec();
    for (ratio, &e) in ratios.iter().zip(exponents) {
        for (c, r) in col.iter_mut().zip(ratio) {
            *c *= r.powi(e as i32);
        }
    }
    col
}

fn column_matrix(rows: usize, cols: Vec<Vec<Complex64>>) -> CMat {
    CMat::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// Observers participating in one alignment block: every receiver except the
/// block's own, then the eavesdropper. This fixed order makes the exponent
/// assignment deterministic.
pub(crate) fn block_observers(num_rx: usize, block: usize, include_eve: bool) -> Vec<RxId> {
    let mut obs: Vec<RxId> = (1..=num_rx).filter(|&r| r != block).map(RxId::Rx).collect();
    if include_eve {
        obs.push(RxId::Eve);
    }
    obs
}

/// Builds the asymptotic plan over a `mu`-slot extension, where `mu` is the
/// extension length reported by [`asymptotic_dims`].
pub fn build_asymptotic_ana(
    channels: &ExtendedChannelSet,
    num_tx: usize,
    num_rx: usize,
    order: usize,
    include_eve: bool,
    seed: u64,
) -> Result<BeamformingPlan> {
    let dims = asymptotic_dims(num_tx, num_rx, order, include_eve)?;
    if channels.num_tx != num_tx || channels.num_rx != num_rx {
        return Err(Error::DimensionMismatch(format!(
            "channels are {}x{}, plan wants {num_tx}x{num_rx}",
            channels.num_tx, channels.num_rx
        )));
    }
    if channels.extension_len != dims.extension_len {
        return Err(Error::DimensionMismatch(format!(
            "extension length must be {}, got {}",
            dims.extension_len, channels.extension_len
        )));
    }
    if include_eve && !channels.has_eve() {
        return Err(Error::MissingChannel { rx: RxId::Eve, tx: 1 });
    }
    let mu = dims.extension_len;

    // channel-ratio diagonal for (observer, tx): entries H_{obs,tx} / H_{obs,1}
    let ratio = |obs: RxId, tx: usize| -> Result<Vec<Complex64>> {
        let h1 = channels.diagonal(obs, 1)?;
        let ht = channels.diagonal(obs, tx)?;
        Ok(ht.iter().zip(h1).map(|(a, b)| a / b).collect())
    };

    let noise_grid = exponent_grid(dims.relations_per_block, order + 1);
    let message_grid = exponent_grid(dims.relations_per_block, order);

    let mut noise_blocks = Vec::with_capacity(num_rx);
    let mut message_blocks = Vec::with_capacity(num_rx);
    for block in 1..=num_rx {
        let mut ratios = Vec::with_capacity(dims.relations_per_block);
        for obs in block_observers(num_rx, block, include_eve) {
            for tx in 2..=num_tx {
                ratios.push(ratio(obs, tx)?);
            }
        }
        let mut rng = stream_rng(seed, StreamPurpose::SeedVector, block as u64, 0);
        let seed_vec: Vec<Complex64> =
            (0..mu).map(|_| sample_annulus(&mut rng, channels.bounds)).collect();
        let noise_cols: Vec<Vec<Complex64>> = noise_grid
            .iter()
            .map(|e| product_column(&ratios, e, &seed_vec))
            .collect();
        let message_cols: Vec<Vec<Complex64>> = message_grid
            .iter()
            .map(|e| product_column(&ratios, e, &seed_vec))
            .collect();
        noise_blocks.push(column_matrix(mu, noise_cols));
        message_blocks.push(column_matrix(mu, message_cols));
    }

    let noise_power = 1.0 / dims.noise_cols as f64;
    let mut groups = Vec::new();
    for block in 1..=num_rx {
        groups.push(StreamGroup {
            owner_tx: 1,
            intended_rx: Some(block),
            kind: GroupKind::ArtificialNoise,
            beamformer: noise_blocks[block - 1].clone(),
            power_share: noise_power,
        });
    }
    for block in 1..=num_rx {
        for tx in 2..=num_tx {
            groups.push(StreamGroup {
                owner_tx: tx,
                intended_rx: Some(block),
                kind: GroupKind::Message,
                beamformer: message_blocks[block - 1].clone(),
                power_share: 1.0,
            });
        }
    }

    let plan = BeamformingPlan {
        scheme: SchemeKind::AsymptoticAna,
        num_tx,
        num_rx,
        include_eve,
        dims: PlanDims {
            extension_len: mu,
            relations_per_block: Some(dims.relations_per_block),
            alignment_order: Some(order),
            noise_streams_per_rx: None,
            group_cols: groups.iter().map(StreamGroup::streams).collect(),
        },
        groups,
    };
    plan.validate(mu)?;
    Ok(plan)
}
