//! Gaussian secrecy metrics: mutual informations, achievable rates,
//! leakage, equivocation fractions, and high-SNR slope fits.
//!
//! Rates treat every stream as Gaussian and all unwanted groups as noise.
//! Mutual informations are log-det differences; they are evaluated as
//! `sum_i log2(1 + s_i^2)` over the singular values of the power-scaled
//! stacked column matrix, which is the same quantity computed without ever
//! forming the ill-conditioned Gram matrix, so 120 dB grids stay accurate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::network::RxId;
use crate::scheme::{BeamformingPlan, EffectiveChannelSet, EffectiveGroup, GroupKind};

/// One effective matrix whose columns all carry the same per-stream power.
pub type PoweredGroup<'a> = (&'a CMat, f64);

fn stacked_scaled(groups: &[PoweredGroup<'_>], noise_power: f64) -> Result<Option<CMat>> {
    let mut rows = None;
    let mut total_cols = 0usize;
    for (g, p) in groups {
        if !(p.is_finite() && *p >= 0.0) {
            return Err(Error::InvalidPower(format!("per-stream power {p}")));
        }
        match rows {
            None => rows = Some(g.nrows()),
            Some(r) if r != g.nrows() => {
                return Err(Error::DimensionMismatch(format!(
                    "effective matrices mix {r} and {} rows",
                    g.nrows()
                )))
            }
            _ => {}
        }
        total_cols += g.ncols();
    }
    let Some(rows) = rows else { return Ok(None) };
    let mut stacked = CMat::zeros(rows, total_cols);
    let mut c = 0;
    for (g, p) in groups {
        let scale = (p / noise_power).sqrt();
        stacked
            .view_mut((0, c), (rows, g.ncols()))
            .copy_from(&g.scale(scale));
        c += g.ncols();
    }
    if stacked.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite effective coefficients".into()));
    }
    Ok(Some(stacked))
}

/// log2 det(I + F F^H) through singular values.
fn log2_det_capacity(stacked: Option<&CMat>) -> Result<f64> {
    let Some(f) = stacked else { return Ok(0.0) };
    if f.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = f.clone().svd(false, false).singular_values;
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical(format!(
            "singular values failed to converge on a {}x{} stack",
            f.nrows(),
            f.ncols()
        )));
    }
    Ok(sv.iter().map(|s| (1.0 + s * s).log2()).sum())
}

/// Mutual information in bits between the target Gaussian streams and the
/// received vector, with every other group treated as Gaussian interference:
/// `log2 det(I + S_all / n0) - log2 det(I + S_other / n0)` for Gram sums `S`.
pub fn gaussian_mi(
    targets: &[PoweredGroup<'_>],
    others: &[PoweredGroup<'_>],
    noise_power: f64,
) -> Result<f64> {
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::InvalidPower(format!("noise power {noise_power}")));
    }
    if targets.is_empty() {
        return Ok(0.0);
    }
    let mut all: Vec<PoweredGroup<'_>> = Vec::with_capacity(targets.len() + others.len());
    all.extend_from_slice(targets);
    all.extend_from_slice(others);
    let with_targets = log2_det_capacity(stacked_scaled(&all, noise_power)?.as_ref())?;
    let without = log2_det_capacity(stacked_scaled(others, noise_power)?.as_ref())?;
    let mi = with_targets - without;
    if mi < -1e-6 {
        return Err(Error::Numerical(format!("mutual information came out {mi}")));
    }
    Ok(mi.max(0.0))
}

fn powered<'a>(groups: &[&'a EffectiveGroup], power: f64) -> Vec<PoweredGroup<'a>> {
    groups.iter().map(|g| (&g.matrix, g.power_share * power)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReceiverRate {
    pub receiver: usize,
    pub sum_rate_bits_per_slot: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageReport {
    pub observer: RxId,
    /// Receivers whose messages are the eavesdropping target.
    pub targets: BTreeSet<usize>,
    pub leakage_bits_per_slot: f64,
    pub equivocation: f64,
}

/// Rates, leakage, and equivocation of one plan at one transmit power.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub power: f64,
    pub rates: Vec<ReceiverRate>,
    pub leakages: Vec<LeakageReport>,
}

/// Per-receiver achievable sum rate, normalized per extension slot.
pub fn receiver_rates(
    eff: &EffectiveChannelSet,
    plan: &BeamformingPlan,
    power: f64,
    noise_power: f64,
) -> Result<Vec<ReceiverRate>> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::InvalidPower(format!("transmit power {power}")));
    }
    let slots = plan.dims.extension_len as f64;
    let mut out = Vec::with_capacity(plan.num_rx);
    for k in 1..=plan.num_rx {
        let obs = eff.observer(RxId::Rx(k))?;
        let mi = gaussian_mi(
            &powered(&obs.signal_groups(), power),
            &powered(&obs.interference_groups(), power),
            noise_power,
        )?;
        out.push(ReceiverRate { receiver: k, sum_rate_bits_per_slot: mi / slots });
    }
    Ok(out)
}

fn target_groups<'a>(
    eff: &'a EffectiveChannelSet,
    observer: RxId,
    targets: &BTreeSet<usize>,
) -> Result<(Vec<&'a EffectiveGroup>, Vec<&'a EffectiveGroup>)> {
    if targets.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    if let RxId::Rx(k) = observer {
        if targets.contains(&k) {
            return Err(Error::TargetIntendedForObserver { observer: k });
        }
    }
    let obs = eff.observer(observer)?;
    let (hit, rest): (Vec<&EffectiveGroup>, Vec<&EffectiveGroup>) =
        obs.groups.iter().partition(|g| {
            g.kind == GroupKind::Message
                && g.intended_rx.is_some_and(|rx| targets.contains(&rx))
        });
    if hit.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    Ok((hit, rest))
}

/// Information the observer gathers about the target messages, in bits per
/// slot, with artificial noise and all remaining streams as interference.
pub fn leakage(
    eff: &EffectiveChannelSet,
    plan: &BeamformingPlan,
    observer: RxId,
    targets: &BTreeSet<usize>,
    power: f64,
    noise_power: f64,
) -> Result<f64> {
    let (hit, rest) = target_groups(eff, observer, targets)?;
    let mi = gaussian_mi(&powered(&hit, power), &powered(&rest, power), noise_power)?;
    Ok(mi / plan.dims.extension_len as f64)
}

/// Fraction of the targets' message content hidden from the observer:
/// `1 - leakage / (sum of target rates at their intended receivers)`,
/// clamped to [0, 1]. Zero-rate target sets are rejected.
pub fn equivocation_fraction(
    eff: &EffectiveChannelSet,
    plan: &BeamformingPlan,
    observer: RxId,
    targets: &BTreeSet<usize>,
    power: f64,
    noise_power: f64,
) -> Result<f64> {
    let leak = leakage(eff, plan, observer, targets, power, noise_power)?;
    let rates = receiver_rates(eff, plan, power, noise_power)?;
    let denom: f64 = rates
        .iter()
        .filter(|r| targets.contains(&r.receiver))
        .map(|r| r.sum_rate_bits_per_slot)
        .sum();
    if denom <= 1e-12 {
        return Err(Error::ZeroTargetRate);
    }
    Ok((1.0 - leak / denom).clamp(0.0, 1.0))
}

/// Full report at one power: per-receiver rates plus, for every observer,
/// the leakage and equivocation of all messages it must not learn.
pub fn rate_report(
    eff: &EffectiveChannelSet,
    plan: &BeamformingPlan,
    power: f64,
    noise_power: f64,
) -> Result<RateReport> {
    let rates = receiver_rates(eff, plan, power, noise_power)?;
    let mut leakages = Vec::new();
    let mut observers: Vec<RxId> = (1..=plan.num_rx).map(RxId::Rx).collect();
    if plan.include_eve {
        observers.push(RxId::Eve);
    }
    for observer in observers {
        let targets: BTreeSet<usize> = match observer {
            RxId::Rx(k) => (1..=plan.num_rx).filter(|&j| j != k).collect(),
            RxId::Eve => (1..=plan.num_rx).collect(),
        };
        let targets: BTreeSet<usize> = targets
            .into_iter()
            .filter(|&j| plan.message_groups_for(j).next().is_some())
            .collect();
        if targets.is_empty() {
            continue;
        }
        let leak = leakage(eff, plan, observer, &targets, power, noise_power)?;
        let denom: f64 = rates
            .iter()
            .filter(|r| targets.contains(&r.receiver))
            .map(|r| r.sum_rate_bits_per_slot)
            .sum();
        let delta = if denom <= 1e-12 { 0.0 } else { (1.0 - leak / denom).clamp(0.0, 1.0) };
        leakages.push(LeakageReport {
            observer,
            targets,
            leakage_bits_per_slot: leak,
            equivocation: delta,
        });
    }
    Ok(RateReport { power, rates, leakages })
}

pub const REPORT_CSV_HEADER: &str = "scheme,M,K,n,P_db,receiver,rate,leakage,delta";

/// Rate reports as CSV, one row per (grid power, observer), receivers first
/// and the eavesdropper last. `rows` pairs each report with its power in dB.
pub fn reports_to_csv(
    scheme: crate::scheme::SchemeKind,
    m: usize,
    k: usize,
    n: Option<usize>,
    rows: &[(f64, &RateReport)],
) -> String {
    let n_field = n.map(|n| n.to_string()).unwrap_or_default();
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for (p_db, report) in rows {
        let mut observers: Vec<RxId> = report.rates.iter().map(|r| RxId::Rx(r.receiver)).collect();
        if report.leakages.iter().any(|l| l.observer == RxId::Eve) {
            observers.push(RxId::Eve);
        }
        for obs in observers {
            let rate = match obs {
                RxId::Rx(rx) => report.rates[rx - 1].sum_rate_bits_per_slot,
                RxId::Eve => 0.0,
            };
            let (leak, delta) = report
                .leakages
                .iter()
                .find(|l| l.observer == obs)
                .map_or((0.0, 1.0), |l| (l.leakage_bits_per_slot, l.equivocation));
            out.push_str(&format!(
                "{scheme},{m},{k},{n_field},{p_db:.2},{obs},{rate:.6},{leak:.6},{delta:.6}\n"
            ));
        }
    }
    out
}

/// High-SNR slope estimate: rate in bits/slot against log2(P).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdofEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub grid: Vec<(f64, f64)>,
}

/// Least-squares fit of rate against log2(P). Needs at least three strictly
/// increasing powers spanning 20 dB or more.
pub fn sdof_slope(points: &[(f64, f64)]) -> Result<SdofEstimate> {
    if points.len() < 3 {
        return Err(Error::DegenerateGrid(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    for (p, rate) in points {
        if !p.is_finite() || !rate.is_finite() {
            return Err(Error::DegenerateGrid("non-finite grid point".into()));
        }
    }
    for window in points.windows(2) {
        if window[1].0 <= window[0].0 {
            return Err(Error::DegenerateGrid("powers must be strictly increasing".into()));
        }
    }
    let p_min = points[0].0;
    let p_max = points[points.len() - 1].0;
    if p_min <= 0.0 {
        return Err(Error::DegenerateGrid("powers must be positive".into()));
    }
    let span_db = 10.0 * (p_max / p_min).log10();
    if span_db < 20.0 - 1e-9 {
        return Err(Error::DegenerateGrid(format!(
            "grid spans {span_db:.1} dB, need at least 20"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|(p, _)| p.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| *r).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let r_squared = if ss_tot <= f64::MIN_POSITIVE {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(SdofEstimate {
        slope,
        intercept,
        r_squared,
        grid: points.to_vec(),
    })
}
