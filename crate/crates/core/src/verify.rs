//! Numerical referee for alignment claims: ranks, span containment, scheme
//! audits, and the rank-preservation property of aligned Gram sums.
//!
//! Builders construct plans from closed forms; everything here re-derives the
//! claimed structure from SVD projectors alone, so a broken construction
//! cannot certify itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_space_basis, hstack, singular_values, CMat};
use crate::network::{ExtendedChannelSet, RxId};
use crate::scheme::{
    block_observers_for_plan, effective_channels, BeamformingPlan, EffectiveGroup, GroupKind,
    ObserverChannels, SchemeKind,
};

/// Default relative Frobenius tolerance for span containment.
pub const CONTAINMENT_TOL: f64 = 1e-8;
/// Default multiple of the machine-epsilon rank cut.
pub const RANK_FACTOR: f64 = 64.0;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub containment_tol: f64,
    pub rank_factor: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { containment_tol: CONTAINMENT_TOL, rank_factor: RANK_FACTOR }
    }
}

/// Count of singular values above `tol`; the default cut is
/// `max(rows, cols) * sigma_max * eps * 64`, sized to absorb the conditioning
/// of long diagonal-product beamformers.
pub fn numeric_rank(a: &CMat, tol: Option<f64>) -> Result<usize> {
    rank_with_factor(a, tol, RANK_FACTOR)
}

fn rank_with_factor(a: &CMat, tol: Option<f64>, factor: f64) -> Result<usize> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = tol.unwrap_or_else(|| {
        smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON * factor
    });
    Ok(sv.iter().filter(|&&s| s > cut).count())
}

/// Relative residual of `b` against the column space of `a`:
/// `||(I - P_a) b||_F / max(||b||_F, eps)`, contained when below `tol`
/// (default 1e-8).
pub fn span_contained(b: &CMat, a: &CMat, tol: Option<f64>) -> Result<(bool, f64)> {
    if a.nrows() == 0 || b.nrows() == 0 || a.ncols() == 0 || b.ncols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "span check needs equal row counts, got {} and {}",
            b.nrows(),
            a.nrows()
        )));
    }
    let tol = tol.unwrap_or(CONTAINMENT_TOL);
    let basis = column_space_basis(a);
    let residual = if basis.ncols() == 0 {
        b.norm() / b.norm().max(f64::EPSILON)
    } else {
        let projected = &basis * (basis.adjoint() * b);
        (b - projected).norm() / b.norm().max(f64::EPSILON)
    };
    Ok((residual < tol, residual))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationCheck {
    pub description: String,
    pub residual: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankCheck {
    pub matrix: String,
    pub numeric_rank: usize,
    pub expected_rank: usize,
}

impl RankCheck {
    pub fn matches(&self) -> bool {
        self.numeric_rank == self.expected_rank
    }
}

/// Audit of every alignment relation and rank assertion a plan claims.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub relations: Vec<RelationCheck>,
    pub ranks: Vec<RankCheck>,
    pub overall_pass: bool,
}

impl AlignmentReport {
    pub fn max_residual(&self) -> f64 {
        self.relations.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    fn finish(mut self) -> Self {
        self.overall_pass = self.relations.iter().all(|r| r.contained)
            && self.ranks.iter().all(RankCheck::matches);
        self
    }
}

fn effective_matrix(
    obs: &ObserverChannels,
    kind: GroupKind,
    intended: Option<usize>,
    owner: usize,
) -> Result<&EffectiveGroup> {
    obs.group(kind, intended, owner).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "plan has no {kind:?} group (intended {intended:?}, tx {owner}) at observer {}",
            obs.observer
        ))
    })
}

/// Enumerates every containment relation and expected-rank assertion of the
/// plan's scheme and audits them numerically.
pub fn check_alignment(
    plan: &BeamformingPlan,
    channels: &ExtendedChannelSet,
) -> Result<AlignmentReport> {
    check_alignment_with(plan, channels, &VerifyOptions::default())
}

pub fn check_alignment_with(
    plan: &BeamformingPlan,
    channels: &ExtendedChannelSet,
    options: &VerifyOptions,
) -> Result<AlignmentReport> {
    let eff = effective_channels(plan, channels)?;
    let mut report = AlignmentReport {
        relations: Vec::new(),
        ranks: Vec::new(),
        overall_pass: false,
    };
    match plan.scheme {
        SchemeKind::Mx2Ana => audit_mx2(plan, &eff, options, &mut report)?,
        SchemeKind::AsymptoticAna => audit_asymptotic(plan, &eff, options, &mut report)?,
        SchemeKind::BlindAna => audit_blind(plan, &eff, options, &mut report)?,
    }
    Ok(report.finish())
}

fn push_rank(
    report: &mut AlignmentReport,
    options: &VerifyOptions,
    name: String,
    matrix: &CMat,
    expected: usize,
) -> Result<()> {
    let rank = rank_with_factor(matrix, None, options.rank_factor)?;
    report.ranks.push(RankCheck { matrix: name, numeric_rank: rank, expected_rank: expected });
    Ok(())
}

fn audit_mx2(
    plan: &BeamformingPlan,
    eff: &crate::scheme::EffectiveChannelSet,
    options: &VerifyOptions,
    report: &mut AlignmentReport,
) -> Result<()> {
    let m = plan.num_tx;
    for k in 1..=2usize {
        let obs = eff.observer(RxId::Rx(k))?;
        let noise = effective_matrix(obs, GroupKind::ArtificialNoise, None, 1)?;
        let other = 3 - k;
        for tx in 2..=m {
            let msg = effective_matrix(obs, GroupKind::Message, Some(other), tx)?;
            let (contained, residual) =
                span_contained(&msg.matrix, &noise.matrix, Some(options.containment_tol))?;
            report.relations.push(RelationCheck {
                description: format!(
                    "rx {k}: message (rx {other}, tx {tx}) inside the noise span"
                ),
                residual,
                contained,
            });
        }
        let mut cols: Vec<&CMat> = Vec::with_capacity(m);
        for tx in 2..=m {
            cols.push(&effective_matrix(obs, GroupKind::Message, Some(k), tx)?.matrix);
        }
        cols.push(&noise.matrix);
        let lambda = hstack(&cols);
        push_rank(report, options, format!("receiver {k} effective matrix"), &lambda, m)?;
    }
    Ok(())
}

fn audit_asymptotic(
    plan: &BeamformingPlan,
    eff: &crate::scheme::EffectiveChannelSet,
    options: &VerifyOptions,
    report: &mut AlignmentReport,
) -> Result<()> {
    let m = plan.num_tx;
    let k_rx = plan.num_rx;
    for block in 1..=k_rx {
        for obs_id in block_observers_for_plan(plan, block) {
            let obs = eff.observer(obs_id)?;
            let noise = effective_matrix(obs, GroupKind::ArtificialNoise, Some(block), 1)?;
            for tx in 2..=m {
                let msg = effective_matrix(obs, GroupKind::Message, Some(block), tx)?;
                let (contained, residual) =
                    span_contained(&msg.matrix, &noise.matrix, Some(options.containment_tol))?;
                report.relations.push(RelationCheck {
                    description: format!(
                        "block {block} at observer {obs_id}: message tx {tx} inside the noise span"
                    ),
                    residual,
                    contained,
                });
            }
        }
    }
    for k in 1..=k_rx {
        let obs = eff.observer(RxId::Rx(k))?;
        let mut cols: Vec<&CMat> = Vec::new();
        cols.push(&effective_matrix(obs, GroupKind::ArtificialNoise, Some(k), 1)?.matrix);
        for tx in 2..=m {
            cols.push(&effective_matrix(obs, GroupKind::Message, Some(k), tx)?.matrix);
        }
        for other in (1..=k_rx).filter(|&j| j != k) {
            cols.push(&effective_matrix(obs, GroupKind::ArtificialNoise, Some(other), 1)?.matrix);
        }
        let c_k = hstack(&cols);
        push_rank(
            report,
            options,
            format!("receiver {k} effective matrix"),
            &c_k,
            plan.dims.extension_len,
        )?;
    }
    Ok(())
}

fn audit_blind(
    plan: &BeamformingPlan,
    eff: &crate::scheme::EffectiveChannelSet,
    options: &VerifyOptions,
    report: &mut AlignmentReport,
) -> Result<()> {
    let m = plan.num_tx;
    let alpha = plan
        .dims
        .noise_streams_per_rx
        .ok_or_else(|| Error::DimensionMismatch("blind plan lacks noise stream count".into()))?;
    for k in 1..=2usize {
        let obs = eff.observer(RxId::Rx(k))?;
        let other = 3 - k;
        let own_msg = effective_matrix(obs, GroupKind::Message, Some(k), 1)?;
        let own_noise = effective_matrix(obs, GroupKind::ArtificialNoise, Some(k), 1)?;
        let signal = hstack(&[&own_msg.matrix, &own_noise.matrix]);
        push_rank(report, options, format!("receiver {k} signal space"), &signal, m * alpha)?;

        let foreign_msg = effective_matrix(obs, GroupKind::Message, Some(other), 1)?;
        let foreign_noise = effective_matrix(obs, GroupKind::ArtificialNoise, Some(other), 1)?;
        let interference = hstack(&[&foreign_msg.matrix, &foreign_noise.matrix]);
        push_rank(
            report,
            options,
            format!("receiver {k} interference space"),
            &interference,
            alpha,
        )?;
        push_rank(
            report,
            options,
            format!("receiver {k} noise-filled interference"),
            &foreign_noise.matrix,
            alpha,
        )?;
    }
    Ok(())
}

/// Rank preservation under aligned Gram sums: with every `b_i` inside the
/// span of `a` and nonnegative weights, `a a^H + sum_i w_i b_i b_i^H` keeps
/// the rank of `a a^H`. A span violation is a precondition error naming the
/// offending matrix, not a `false`.
pub fn noise_dominance(a: &CMat, bs: &[CMat], weights: &[f64]) -> Result<bool> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if a.nrows() < a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "reference must have at least as many rows as columns, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if bs.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} matrices but {} weights",
            bs.len(),
            weights.len()
        )));
    }
    for (i, (b, &w)) in bs.iter().zip(weights).enumerate() {
        if b.nrows() != a.nrows() || b.ncols() > a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix {i} is {}x{}, reference is {}x{}",
                b.nrows(),
                b.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidPower(format!("weight {i} is {w}")));
        }
        let (contained, residual) = span_contained(b, a, None)?;
        if !contained {
            return Err(Error::SpanPrecondition { index: i, residual });
        }
    }
    let gram_a = a * a.adjoint();
    let mut gram_sum = gram_a.clone();
    for (b, &w) in bs.iter().zip(weights) {
        gram_sum += (b * b.adjoint()).scale(w);
    }
    Ok(numeric_rank(&gram_sum, None)? == numeric_rank(&gram_a, None)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{
        blind_switch_pattern, build_switching_channels, draw_varying_channels, NetworkSpec,
        SchemeVariant,
    };
    use crate::sampling::{sample_annulus, stream_rng};
    use crate::scheme::{build_asymptotic_ana, build_blind_ana, build_mx2_ana};
    use num_complex::Complex64;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        stream_rng(seed, crate::sampling::StreamPurpose::Channel, 0, 0)
    }

    fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMat {
        CMat::from_fn(r, c, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(numeric_rank(&CMat::identity(3, 3), None).unwrap(), 3);
        assert_eq!(numeric_rank(&CMat::zeros(4, 2), None).unwrap(), 0);
        assert!(matches!(numeric_rank(&CMat::zeros(0, 0), None), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn rank_of_outer_product_is_one() {
        let mut r = rng(5);
        let u = random_mat(&mut r, 6, 1);
        let v = random_mat(&mut r, 4, 1);
        let outer = &u * v.adjoint();
        assert_eq!(numeric_rank(&outer, None).unwrap(), 1);
    }

    #[test]
    fn rank_is_invariant_under_random_unitary() {
        let mut r = rng(6);
        for trial in 0..100 {
            let a = random_mat(&mut r, 6, 3);
            let q = random_mat(&mut r, 6, 6).qr().q();
            let rank_a = numeric_rank(&a, None).unwrap();
            let rank_qa = numeric_rank(&(&q * &a), None).unwrap();
            assert_eq!(rank_a, rank_qa, "trial {trial}");
        }
    }

    #[test]
    fn self_containment_has_zero_residual() {
        let mut r = rng(7);
        let a = random_mat(&mut r, 5, 3);
        let (contained, residual) = span_contained(&a, &a, None).unwrap();
        assert!(contained);
        assert!(residual < 1e-13);
    }

    #[test]
    fn exact_constructions_are_contained() {
        let mut r = rng(8);
        for _ in 0..50 {
            let a = random_mat(&mut r, 6, 3);
            let x = random_mat(&mut r, 3, 2);
            let b = &a * &x;
            let (contained, residual) = span_contained(&b, &a, None).unwrap();
            assert!(contained);
            assert!(residual < 1e-12);
        }
    }

    #[test]
    fn independent_columns_are_rejected() {
        let mut r = rng(9);
        for _ in 0..100 {
            let a = random_mat(&mut r, 6, 3);
            let b = random_mat(&mut r, 6, 2);
            let (contained, residual) = span_contained(&b, &a, None).unwrap();
            assert!(!contained);
            assert!(residual > 0.1, "residual {residual}");
        }
    }

    #[test]
    fn containment_is_additive_over_column_stacks() {
        let mut r = rng(10);
        for _ in 0..50 {
            let a = random_mat(&mut r, 7, 4);
            let b = &a * random_mat(&mut r, 4, 2);
            let c = &a * random_mat(&mut r, 4, 3);
            let stacked = hstack(&[&b, &c]);
            let (contained, _) = span_contained(&stacked, &a, None).unwrap();
            assert!(contained);
        }
    }

    #[test]
    fn row_mismatch_is_an_error() {
        let a = CMat::identity(3, 3);
        let b = CMat::identity(4, 4);
        assert!(span_contained(&b, &a, None).is_err());
    }

    #[test]
    fn mx2_report_counts_relations() {
        let spec = NetworkSpec::new(3, 2, SchemeVariant::XncmVarying, 3).unwrap();
        let ch = draw_varying_channels(&spec, 21).unwrap();
        let plan = build_mx2_ana(&ch, 3, 21).unwrap();
        let report = check_alignment(&plan, &ch).unwrap();
        assert!(report.overall_pass, "{report:?}");
        assert_eq!(report.relations.len(), 4);
        assert_eq!(report.ranks.len(), 2);
        assert!(report.max_residual() < 1e-10);
    }

    #[test]
    fn broken_plan_fails_the_audit() {
        let spec = NetworkSpec::new(3, 2, SchemeVariant::XncmVarying, 3).unwrap();
        let ch = draw_varying_channels(&spec, 22).unwrap();
        let mut plan = build_mx2_ana(&ch, 3, 22).unwrap();
        let mut r = rng(23);
        let bounds = ch.bounds;
        let fresh = CMat::from_fn(3, 1, |_, _| sample_annulus(&mut r, bounds));
        let noise_idx = plan
            .groups
            .iter()
            .position(|g| g.kind == GroupKind::ArtificialNoise)
            .unwrap();
        plan.groups[noise_idx].beamformer = fresh;
        let report = check_alignment(&plan, &ch).unwrap();
        assert!(!report.overall_pass);
        assert!(report.relations.iter().any(|r| !r.contained));
    }

    #[test]
    fn asymptotic_report_counts_block_relations() {
        let dims = crate::scheme::asymptotic_dims(2, 2, 1, true).unwrap();
        let spec =
            NetworkSpec::new(2, 2, SchemeVariant::XncmExternalEve, dims.extension_len).unwrap();
        let ch = draw_varying_channels(&spec, 31).unwrap();
        let plan = build_asymptotic_ana(&ch, 2, 2, 1, true, 31).unwrap();
        let report = check_alignment(&plan, &ch).unwrap();
        assert!(report.overall_pass, "{report:?}");
        // K blocks x Gamma relations
        assert_eq!(report.relations.len(), 4);
        assert_eq!(report.ranks.len(), 2);
        assert!(report.ranks.iter().all(|r| r.expected_rank == 9));
    }

    #[test]
    fn blind_report_includes_noise_fill_check() {
        let p = blind_switch_pattern(3, 2).unwrap();
        let ch = build_switching_channels(3, 2, &p, 41).unwrap();
        let plan = build_blind_ana(&ch, 3, 2, false).unwrap();
        let report = check_alignment(&plan, &ch).unwrap();
        assert!(report.overall_pass, "{report:?}");
        let fill: Vec<_> = report
            .ranks
            .iter()
            .filter(|r| r.matrix.contains("noise-filled"))
            .collect();
        assert_eq!(fill.len(), 2);
        assert!(fill.iter().all(|r| r.expected_rank == 2));
    }

    #[test]
    fn dominance_with_full_span_reference() {
        let a = CMat::identity(2, 2);
        let b = CMat::identity(2, 2).columns(0, 1).into_owned();
        assert!(noise_dominance(&a, &[b], &[5.0]).unwrap());
    }

    #[test]
    fn dominance_with_rank_one_reference() {
        let mut r = rng(11);
        let u = random_mat(&mut r, 2, 1);
        let a = hstack(&[&u, &CMat::zeros(2, 1)]);
        let b = u.scale(0.3);
        assert!(noise_dominance(&a, &[b], &[2.0]).unwrap());
    }

    #[test]
    fn dominance_rejects_out_of_span_inputs() {
        let mut r = rng(12);
        let a = random_mat(&mut r, 6, 2);
        let b = random_mat(&mut r, 6, 1);
        match noise_dominance(&a, &[b], &[1.0]) {
            Err(Error::SpanPrecondition { index: 0, residual }) => assert!(residual > 0.1),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMat> {
            proptest::collection::vec(-10.0f64..10.0, rows * cols * 2).prop_map(
                move |raw| {
                    CMat::from_fn(rows, cols, |r, c| {
                        let i = 2 * (r * cols + c);
                        Complex64::new(raw[i], raw[i + 1])
                    })
                },
            )
        }

        proptest! {
            #[test]
            fn rank_never_exceeds_the_smaller_dimension(
                (rows, cols) in (1usize..7, 1usize..7),
                seed in any::<u64>(),
            ) {
                let mut r = rng(seed);
                let a = random_mat(&mut r, rows, cols);
                let rank = numeric_rank(&a, None).unwrap();
                prop_assert!(rank <= rows.min(cols));
            }

            #[test]
            fn products_stay_inside_the_span(
                a in complex_matrix(6, 3),
                x in complex_matrix(3, 2),
            ) {
                prop_assume!(a.norm() > 1e-6);
                let b = &a * &x;
                prop_assume!(b.norm() > 1e-6);
                let (contained, residual) = span_contained(&b, &a, None).unwrap();
                prop_assert!(contained, "residual {residual}");
            }
        }
    }

    #[test]
    fn dominance_property_over_random_aligned_instances() {
        let mut r = rng(13);
        for trial in 0..200 {
            let rows = 4 + (trial % 4);
            let cols = 2 + (trial % 3).min(rows - 1);
            let a = random_mat(&mut r, rows, cols);
            let bs: Vec<CMat> = (0..2)
                .map(|_| {
                    let t = 1 + (r.gen::<usize>() % cols);
                    &a * random_mat(&mut r, cols, t)
                })
                .collect();
            let ws: Vec<f64> = (0..2).map(|_| 10.0 * r.gen::<f64>()).collect();
            assert!(noise_dominance(&a, &bs, &ws).unwrap(), "trial {trial}");
        }
    }
}
