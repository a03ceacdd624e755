//! End-to-end scenario runner: draw channels, build the plan, audit the
//! alignment, measure rates and leakage over an SNR grid, fit slopes, and
//! compare against the closed-form bounds.

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::metrics::{rate_report, sdof_slope, RateReport, SdofEstimate};
use crate::network::{
    blind_switch_pattern, build_switching_channels, draw_varying_channels, ExtendedChannelSet,
    NetworkSpec, RxId, SchemeVariant,
};
use crate::sampling::derive_seed;
use crate::scheme::{
    asymptotic_dims, build_asymptotic_ana, build_blind_ana, build_mx2_ana, effective_channels,
    BeamformingPlan, SchemeKind,
};
use crate::verify::{check_alignment_with, AlignmentReport, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Span-containment residual bound.
    pub align: f64,
    /// Multiple of the machine-epsilon rank cut.
    pub rank_factor: f64,
    /// Allowed gap between a fitted slope and its closed-form target.
    pub slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { align: 1e-8, rank_factor: 64.0, slope: 0.05 }
    }
}

fn default_grid() -> Vec<f64> {
    (0..7).map(|i| 60.0 + 10.0 * i as f64).collect()
}

/// One runnable scenario. Defaults cover the smallest nontrivial network:
/// M = 2, K = 2, a 60-120 dB grid, one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scheme: SchemeKind,
    pub m: usize,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub p_grid_db: Vec<f64>,
    pub tolerances: Tolerances,
    #[serde(default)]
    pub experimental_blind: bool,
}

impl ScenarioConfig {
    pub fn new(scheme: SchemeKind) -> Self {
        ScenarioConfig {
            scheme,
            m: 2,
            k: 2,
            n: if scheme == SchemeKind::AsymptoticAna { Some(1) } else { None },
            seed: 1,
            trials: 1,
            p_grid_db: default_grid(),
            tolerances: Tolerances::default(),
            experimental_blind: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.k < 2 {
            return Err(Error::Config(format!(
                "need M >= 2 and K >= 2, got M = {}, K = {}",
                self.m, self.k
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.p_grid_db.is_empty() {
            return Err(Error::Config("power grid is empty".into()));
        }
        for w in self.p_grid_db.windows(2) {
            if !w[0].is_finite() || !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::Config("power grid must be strictly ascending".into()));
            }
        }
        match self.scheme {
            SchemeKind::Mx2Ana | SchemeKind::BlindAna if self.k != 2 => {
                return Err(Error::Config(format!(
                    "scheme {} supports K = 2 only, got K = {}",
                    self.scheme, self.k
                )));
            }
            SchemeKind::AsymptoticAna if self.n.is_none() => {
                return Err(Error::Config("asymptotic scheme needs an order parameter n".into()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn powers(&self) -> Vec<f64> {
        self.p_grid_db.iter().map(|db| 10f64.powf(db / 10.0)).collect()
    }

    /// Stable hash of the canonical JSON form; emitted with every result so
    /// any row can be traced back to the exact configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in canonical.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            containment_tol: self.tolerances.align,
            rank_factor: self.tolerances.rank_factor,
        }
    }
}

/// Reference values the measured network slope is judged against: the
/// scheme's own achievable target as the lower edge and the applicable
/// converse as the upper edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub measured: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

pub fn scheme_bounds(config: &ScenarioConfig) -> Result<(f64, f64)> {
    let (m, k) = (config.m as u64, config.k as u64);
    let (lower, upper) = match config.scheme {
        SchemeKind::Mx2Ana => (bounds::sdof_lower_xncm(m, k)?, bounds::sdof_upper_xncm(m, k)?),
        SchemeKind::AsymptoticAna => {
            let n = config.n.unwrap_or(1) as u64;
            (bounds::achieved_sdof_finite_n(m, k, n)?, bounds::sdof_upper_xncm_ee(m, k)?)
        }
        SchemeKind::BlindAna => {
            (bounds::sdof_lower_xncm_ee(m, k)?, bounds::sdof_upper_xncm(m, k)?)
        }
    };
    Ok((bounds::to_f64(&lower), bounds::to_f64(&upper)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentSummary {
    pub pass: bool,
    pub relations_pass: bool,
    pub ranks_pass: bool,
    pub max_residual: f64,
    pub relations_checked: usize,
    pub ranks_checked: usize,
}

impl From<&AlignmentReport> for AlignmentSummary {
    fn from(report: &AlignmentReport) -> Self {
        AlignmentSummary {
            pass: report.overall_pass,
            relations_pass: report.relations.iter().all(|r| r.contained),
            ranks_pass: report.ranks.iter().all(|r| r.matches()),
            max_residual: report.max_residual(),
            relations_checked: report.relations.len(),
            ranks_checked: report.ranks.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReceiverSlope {
    pub receiver: usize,
    pub slope: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageSlope {
    pub observer: RxId,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub alignment: AlignmentSummary,
    /// One report per grid power, ascending. Empty when the audit failed.
    pub reports: Vec<RateReport>,
    pub receiver_slopes: Vec<ReceiverSlope>,
    pub leakage_slopes: Vec<LeakageSlope>,
    pub network_slope: Option<f64>,
    pub bound_comparison: Option<BoundComparison>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeAggregate {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub trials: Vec<TrialOutcome>,
    pub trials_passed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_slope: Option<SlopeAggregate>,
}

/// Channels and plan for one trial of a scenario.
pub fn build_trial(
    config: &ScenarioConfig,
    trial_seed: u64,
) -> Result<(ExtendedChannelSet, BeamformingPlan)> {
    match config.scheme {
        SchemeKind::Mx2Ana => {
            let spec = NetworkSpec::new(config.m, 2, SchemeVariant::XncmVarying, config.m)?;
            let channels = draw_varying_channels(&spec, trial_seed)?;
            let plan = build_mx2_ana(&channels, config.m, trial_seed)?;
            Ok((channels, plan))
        }
        SchemeKind::AsymptoticAna => {
            let n = config.n.unwrap_or(1);
            let dims = asymptotic_dims(config.m, config.k, n, true)?;
            let spec = NetworkSpec::new(
                config.m,
                config.k,
                SchemeVariant::XncmExternalEve,
                dims.extension_len,
            )?;
            let channels = draw_varying_channels(&spec, trial_seed)?;
            let plan =
                build_asymptotic_ana(&channels, config.m, config.k, n, true, trial_seed)?;
            Ok((channels, plan))
        }
        SchemeKind::BlindAna => {
            let pattern = blind_switch_pattern(config.m, 2)?;
            let channels = build_switching_channels(config.m, 2, &pattern, trial_seed)?;
            let plan = build_blind_ana(&channels, config.m, 2, config.experimental_blind)?;
            Ok((channels, plan))
        }
    }
}

fn run_trial(config: &ScenarioConfig, trial: usize) -> Result<TrialOutcome> {
    let seed = derive_seed(config.seed, trial as u64);
    let (channels, plan) = build_trial(config, seed)
        .map_err(|e| Error::Trial { index: trial, source: Box::new(e) })?;
    let report = check_alignment_with(&plan, &channels, &config.verify_options())?;
    let alignment = AlignmentSummary::from(&report);
    if !report.overall_pass {
        return Ok(TrialOutcome {
            trial,
            seed,
            alignment,
            reports: Vec::new(),
            receiver_slopes: Vec::new(),
            leakage_slopes: Vec::new(),
            network_slope: None,
            bound_comparison: None,
        });
    }

    let eff = effective_channels(&plan, &channels)?;
    let powers = config.powers();
    let reports: Vec<RateReport> = powers
        .iter()
        .map(|&p| rate_report(&eff, &plan, p, 1.0))
        .collect::<Result<_>>()?;

    let mut receiver_slopes = Vec::with_capacity(plan.num_rx);
    let mut network_points: Vec<(f64, f64)> = powers.iter().map(|&p| (p, 0.0)).collect();
    for k in 1..=plan.num_rx {
        let points: Vec<(f64, f64)> = powers
            .iter()
            .zip(&reports)
            .map(|(&p, r)| (p, r.rates[k - 1].sum_rate_bits_per_slot))
            .collect();
        for (acc, pt) in network_points.iter_mut().zip(&points) {
            acc.1 += pt.1;
        }
        let est: SdofEstimate = sdof_slope(&points)?;
        receiver_slopes.push(ReceiverSlope {
            receiver: k,
            slope: est.slope,
            r_squared: est.r_squared,
        });
    }
    let network = sdof_slope(&network_points)?;

    let mut leakage_slopes = Vec::new();
    if let Some(first) = reports.first() {
        for (li, entry) in first.leakages.iter().enumerate() {
            let points: Vec<(f64, f64)> = powers
                .iter()
                .zip(&reports)
                .map(|(&p, r)| (p, r.leakages[li].leakage_bits_per_slot))
                .collect();
            let est = sdof_slope(&points)?;
            leakage_slopes.push(LeakageSlope { observer: entry.observer, slope: est.slope });
        }
    }

    let (lower, upper) = scheme_bounds(config)?;
    let tol = config.tolerances.slope;
    let bound_comparison = BoundComparison {
        measured: network.slope,
        lower,
        upper,
        within: network.slope >= lower - tol && network.slope <= upper + tol,
    };

    Ok(TrialOutcome {
        trial,
        seed,
        alignment,
        reports,
        receiver_slopes,
        leakage_slopes,
        network_slope: Some(network.slope),
        bound_comparison: Some(bound_comparison),
    })
}

/// Trials are independent and self-seeded, so they fan out across threads;
/// results merge back in trial order, which keeps every output deterministic.
fn run_trials(config: &ScenarioConfig) -> Result<Vec<TrialOutcome>> {
    let total = config.trials;
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(total)
        .max(1);
    if workers == 1 {
        return (0..total).map(|t| run_trial(config, t)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || -> Vec<(usize, Result<TrialOutcome>)> {
                    (w..total).step_by(workers).map(|t| (t, run_trial(config, t))).collect()
                })
            })
            .collect();
        let mut slots: Vec<Option<Result<TrialOutcome>>> = (0..total).map(|_| None).collect();
        for handle in handles {
            for (t, outcome) in handle.join().expect("trial worker panicked") {
                slots[t] = Some(outcome);
            }
        }
        slots.into_iter().map(|s| s.expect("every trial ran")).collect()
    })
}

/// Runs every trial of a scenario: channels, plan, audit (a failed audit
/// aborts that trial's measurements), rate grid, slopes, bound comparison.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let (lower, upper) = scheme_bounds(config)?;
    let trials = run_trials(config)?;
    let slopes: Vec<f64> = trials.iter().filter_map(|t| t.network_slope).collect();
    let network_slope = if slopes.is_empty() {
        None
    } else {
        Some(SlopeAggregate {
            mean: slopes.iter().sum::<f64>() / slopes.len() as f64,
            min: slopes.iter().cloned().fold(f64::INFINITY, f64::min),
            max: slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    };
    Ok(ScenarioResult {
        config_hash: config.hash(),
        config: config.clone(),
        lower_bound: lower,
        upper_bound: upper,
        trials_passed: trials.iter().filter(|t| t.alignment.pass).count(),
        trials,
        network_slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VaryParam {
    M,
    K,
    N,
}

impl std::str::FromStr for VaryParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m" => Ok(VaryParam::M),
            "k" => Ok(VaryParam::K),
            "n" => Ok(VaryParam::N),
            other => Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

/// One scenario per point of the varied parameters (cross product when more
/// than one parameter varies). An empty list degenerates to a single run.
pub fn sweep(
    template: &ScenarioConfig,
    vary: &[(VaryParam, Vec<usize>)],
) -> Result<Vec<ScenarioResult>> {
    let mut configs = vec![template.clone()];
    for (param, values) in vary {
        if values.is_empty() {
            return Err(Error::Config("sweep parameter has no values".into()));
        }
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for base in &configs {
            for &v in values {
                let mut c = base.clone();
                match param {
                    VaryParam::M => c.m = v,
                    VaryParam::K => c.k = v,
                    VaryParam::N => c.n = Some(v),
                }
                next.push(c);
            }
        }
        configs = next;
    }
    configs.iter().map(run_scenario).collect()
}

pub const CSV_HEADER: &str = "scheme,M,K,n,seed,trial,P_db,receiver,rate_bps,leakage_bps,delta,slope,lower_bound,upper_bound,within";

/// CSV rows for one result: one row per (trial, grid power, observer), with
/// the eavesdropper listed after the receivers. Formatting is fixed so a
/// rerun of the same config is byte-identical.
pub fn csv_rows(result: &ScenarioResult, out: &mut String) {
    let c = &result.config;
    let n_field = c.n.map(|n| n.to_string()).unwrap_or_default();
    for trial in &result.trials {
        for (gi, &p_db) in c.p_grid_db.iter().enumerate() {
            let Some(report) = trial.reports.get(gi) else { continue };
            let mut observers: Vec<RxId> = (1..=c.k).map(RxId::Rx).collect();
            if report.leakages.iter().any(|l| l.observer == RxId::Eve) {
                observers.push(RxId::Eve);
            }
            for obs in observers {
                let (rate, slope) = match obs {
                    RxId::Rx(k) => (
                        report.rates[k - 1].sum_rate_bits_per_slot,
                        trial
                            .receiver_slopes
                            .iter()
                            .find(|s| s.receiver == k)
                            .map_or(0.0, |s| s.slope),
                    ),
                    RxId::Eve => (0.0, 0.0),
                };
                let leak = report
                    .leakages
                    .iter()
                    .find(|l| l.observer == obs)
                    .map(|l| (l.leakage_bits_per_slot, l.equivocation));
                let (leak_bits, delta) = leak.unwrap_or((0.0, 1.0));
                let cmp = trial.bound_comparison.as_ref();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{:.2},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
                    c.scheme,
                    c.m,
                    c.k,
                    n_field,
                    c.seed,
                    trial.trial,
                    p_db,
                    obs,
                    rate,
                    leak_bits,
                    delta,
                    slope,
                    result.lower_bound,
                    result.upper_bound,
                    cmp.is_some_and(|b| b.within),
                ));
            }
        }
    }
}

pub fn to_csv(results: &[ScenarioResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        csv_rows(r, &mut out);
    }
    out
}
