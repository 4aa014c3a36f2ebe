//! Verification suites: every residual the constructions certify, grouped the way the CLI
//! reports them, plus the seeded batch driver.

use serde::{Deserialize, Serialize};

use crate::ando::{
    bcl_coefficients, bcl_from_coefficients, bcl_from_projection, build_ando_tuple, fundamental_ops, solve_fund_eq,
    tuple_residuals, verify_fund_eqs,
};
use crate::douglas::{build_douglas_data, build_douglas_pair, douglas_degree, verify_douglas, DouglasData};
use crate::error::{Error, Result};
use crate::hardy::{unit_columns, Layout};
use crate::linalg::{fro, identity, op_norm, CMat};
use crate::model::charfn::{boundary_min_singular_value, char_triple_from, BOUNDARY_SAMPLES};
use crate::model::coincidence::{check_coincidence, conjugated, conjugation_witness, DEFAULT_ANGLES};
use crate::model::functional::{
    admissible_check, functional_model, functional_model_at, model_transport_residual, observability_rows,
    verify_model_equivalence,
};
use crate::model::uniqueness::{align_minimal_dilations, gram_forcing_residual, verify_ut_membership, Triple};
use crate::pairs::{random_pair, random_unitary, rng_for, CommutingPair, Scheme};
use crate::report::{Check, SuiteReport};
use crate::schaffer::{build_schaffer_pair, compress_to_s, verify_schaffer};

pub const DEFAULT_DEGREE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Schaffer,
    Douglas,
    Uniqueness,
    Model,
    Bcl,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Schaffer, Suite::Douglas, Suite::Uniqueness, Suite::Model, Suite::Bcl];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Schaffer => "schaffer",
            Suite::Douglas => "douglas",
            Suite::Uniqueness => "uniqueness",
            Suite::Model => "model",
            Suite::Bcl => "bcl",
            Suite::All => "all",
        }
    }

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::EACH.to_vec(),
            s => vec![s],
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    /// Degree bound `N` for the truncated Hardy spaces.
    pub n: usize,
    /// Seed for the auxiliary randomness (conjugations, round-trip instances).
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { n: DEFAULT_DEGREE, seed: 0 }
    }
}

pub fn run_suite(pair: &CommutingPair, suite: Suite, cfg: &SuiteConfig) -> Vec<SuiteReport> {
    suite
        .expand()
        .into_iter()
        .map(|s| {
            let run = match s {
                Suite::Schaffer => schaffer_checks(pair, cfg),
                Suite::Douglas => douglas_checks(pair, cfg),
                Suite::Uniqueness => uniqueness_checks(pair, cfg),
                Suite::Model => return model_report(pair, cfg),
                Suite::Bcl => bcl_checks(pair, cfg),
                Suite::All => unreachable!(),
            };
            match run {
                Ok(checks) => SuiteReport::new(s.name(), checks),
                Err(e) => SuiteReport::failed(s.name(), e.to_string()),
            }
        })
        .collect()
}

/// Andô tuple laws, the Schäffer-model dilation, fundamental operators and their uniqueness.
pub fn schaffer_checks(pair: &CommutingPair, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let tuple = build_ando_tuple(pair)?;
    let r = tuple_residuals(pair, &tuple);
    let mut checks = vec![
        Check::at_most("tuple_lambda_isometry", r.lambda_isometry, 1e-10),
        Check::at_most("tuple_projection", r.projection, 1e-10),
        Check::at_most("tuple_unitarity", r.unitarity, 1e-10),
        Check::at_most("tuple_lambda_action", r.lambda_action, 1e-10),
        Check::at_most("tuple_u_action", r.u_action, 1e-10),
    ];
    let fund = fundamental_ops(pair, &tuple);
    let dil = build_schaffer_pair(pair, &tuple, cfg.n)?;
    checks.extend(verify_schaffer(pair, &tuple, &dil, &fund));
    checks.push(Check::at_most("numerical_radius_f1", fund.radii[0], 1.0 + 1e-8));
    checks.push(Check::at_most("numerical_radius_f2", fund.radii[1], 1.0 + 1e-8));
    if let Some(c) = perturbation_check(pair, &tuple, &fund)? {
        checks.push(c);
    }
    Ok(checks)
}

/// Uniqueness of the fundamental operators: `F₁ + 0.1·I` must violate its equation by the
/// amount `D_T(0.1·I)D_T` forces, and the equation solved back from scratch returns `F₁`.
fn perturbation_check(
    pair: &CommutingPair,
    tuple: &crate::ando::AndoTuple,
    fund: &crate::ando::FundamentalPair,
) -> Result<Option<Check>> {
    let d = tuple.defect.dim();
    if d == 0 {
        return Ok(None);
    }
    let smax = op_norm(&tuple.defect.d_in_basis);
    let forced = 0.1 * smax * smax;
    if forced < 1e-6 {
        return Ok(None);
    }
    let perturbed = &fund.f1 + identity(d) * crate::linalg::c64(0.1, 0.0);
    let (r1, _) = verify_fund_eqs(pair, &perturbed, &fund.f2)?;
    let solved = solve_fund_eq(&tuple.defect, &(pair.t1() - pair.t2().adjoint() * pair.product()));
    let drift = fro(&(solved - &fund.f1));
    Ok(Some(Check::at_least("perturbation_detected", r1 / forced - drift, 1.0 - 1e-6)))
}

/// Douglas data and dilation at the adaptive degree `N ≥ n`.
pub fn douglas_checks(pair: &CommutingPair, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let data = build_douglas_data(pair)?;
    let n = douglas_degree(pair, &data, cfg.n)?;
    let dil = build_douglas_pair(pair, &data, n)?;
    Ok(verify_douglas(pair, &data, &dil))
}

/// Gram forcing in both models, U_T membership, and the aligning unitary between them.
pub fn uniqueness_checks(pair: &CommutingPair, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let n = cfg.n;
    let tuple = build_ando_tuple(pair)?;
    let fund = fundamental_ops(pair, &tuple);
    let sd = build_schaffer_pair(pair, &tuple, n)?;
    let (s1, s2) = compress_to_s(&sd, &fund, n);
    let pi_s = unit_columns(s1.nrows(), 0..pair.dim());
    let data = build_douglas_data(pair)?;
    let tail = douglas_degree(pair, &data, DEFAULT_DEGREE)?;
    let dil = build_douglas_pair(pair, &data, n + 1 + tail)?;

    let st = Triple { w1: &s1, w2: &s2, w: &sd.vs, pi: &pi_s };
    let dt = Triple { w1: &dil.d1, w2: &dil.d2, w: &dil.vd, pi: &dil.pi_d };
    let t = pair.product();
    let mut checks = vec![
        Check::at_most("gram_forcing_schaffer", gram_forcing_residual(t, &sd.vs, &pi_s, n), 1e-9).with_degree(n),
        Check::at_most("gram_forcing_douglas", gram_forcing_residual(t, &dil.vd, &dil.pi_d, n), 1e-9)
            .with_degree(dil.n),
    ];
    let layout_s = Layout { head: pair.dim(), n, fiber: tuple.defect.dim(), tail: 0 };
    for (tag, triple, layout) in [("schaffer", &st, layout_s), ("douglas", &dt, dil.compressed_layout())] {
        for mut c in verify_ut_membership(triple, layout, pair, layout.n) {
            c.name = format!("{tag}_{}", c.name);
            checks.push(c);
        }
    }
    let a = align_minimal_dilations(pair, &st, &dt, n)?;
    checks.push(Check::at_most("alignment_gram", a.gram_residual, 1e-8).with_degree(n));
    checks.push(Check::at_most("alignment_intertwining", a.residual, 1e-7).with_degree(n));
    Ok(checks)
}

fn model_report(pair: &CommutingPair, cfg: &SuiteConfig) -> SuiteReport {
    match model_checks(pair, cfg) {
        Ok(checks) => SuiteReport::new("model", checks),
        Err(e @ Error::NotPure { .. }) => SuiteReport::skipped("model", e.to_string()),
        Err(e @ Error::TailNotConverged { .. }) => {
            SuiteReport::skipped("model", format!("pure, but the model degree is out of reach: {e}"))
        }
        Err(e) => SuiteReport::failed("model", e.to_string()),
    }
}

/// Characteristic triple, pure-case functional model, coincidence under conjugation, and
/// admissibility of the characteristic triple. Fails with `NotPure` on non-pure pairs.
pub fn model_checks(pair: &CommutingPair, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let data = build_douglas_data(pair)?;
    if !data.asym.is_pure() {
        return Err(Error::NotPure { rank: data.asym.rank() });
    }
    let triple = char_triple_from(pair, &data)?;
    let fm = functional_model(&triple, cfg.n)?;
    let n = fm.n;
    let o = observability_rows(&triple, n);
    let mut checks = vec![
        Check::at_most("char_defect_identity", triple.theta.intertwining_residual(), 1e-12),
        Check::at_least(
            "boundary_innerness",
            boundary_min_singular_value(&triple.theta, BOUNDARY_SAMPLES)?,
            1.0 - 1e-6,
        ),
    ];
    checks.extend(verify_model_equivalence(pair, &fm, &o));
    checks.extend(admissible_check(&triple.g1, &triple.g2, &triple.theta.taylor(n), n));

    let (other, omega) = conjugated(pair, cfg.seed)?;
    let other_triple = char_triple_from(&other, &build_douglas_data(&other)?)?;
    let (u, u_star) = conjugation_witness(&triple, &other_triple, &omega);
    let forward = check_coincidence(&triple, &other_triple, &u, &u_star, DEFAULT_ANGLES)?;
    let other_fm = functional_model_at(&other_triple, n)?;
    let converse = model_transport_residual(&fm, &other_fm, &u_star);
    checks.push(Check::at_most("coincidence_forward", forward, 1e-9));
    checks.push(Check::at_most("coincidence_converse", converse, 1e-7).with_degree(n));
    Ok(checks)
}

/// BCL coefficients of the instance's tuple, and of its adjoint tuple through Douglas data,
/// plus a round trip through `bcl_from_coefficients` on a seeded `(P, U)` of the same size.
pub fn bcl_checks(pair: &CommutingPair, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let tuple = build_ando_tuple(pair)?;
    let bcl = bcl_coefficients(&tuple);
    let (p, u) = bcl_from_coefficients(&bcl.e1, &bcl.e2, 1e-10)?;
    let back = bcl_from_projection(&p, &u);
    let instance_trip = fro(&(&back.e1 - &bcl.e1)).max(fro(&(&back.e2 - &bcl.e2)));
    let data: DouglasData = build_douglas_data(pair)?;
    let h = crate::ando::bcl_identity_residual(&data.h1, &data.h2);
    Ok(vec![
        Check::at_most("bcl_identities", bcl.identity_residual(), 1e-10),
        Check::at_most("bcl_round_trip_instance", instance_trip, 1e-10),
        Check::at_most("bcl_round_trip_seeded", bcl_round_trip(tuple.f_dim().max(1), cfg.seed)?, 1e-10),
        Check::at_most("bcl_adjoint_identities", h, 1e-10),
    ])
}

/// Seeded projection of random rank and Haar unitary on `C^dim`.
pub fn random_projection_unitary(dim: usize, seed: u64) -> (CMat, CMat) {
    use rand::Rng;
    let mut rng = rng_for(seed, 0xb0c1);
    let k = rng.random_range(0..=dim);
    let w = random_unitary(dim, &mut rng);
    let basis = w.columns(0, k).into_owned();
    (&basis * basis.adjoint(), random_unitary(dim, &mut rng))
}

/// `max(‖P′ − P‖, ‖U′ − U‖)` after `(P, U) ↦ (E₁, E₂) ↦ (P′, U′)`.
pub fn bcl_round_trip(dim: usize, seed: u64) -> Result<f64> {
    let (p, u) = random_projection_unitary(dim, seed);
    let b = bcl_from_projection(&p, &u);
    let (p2, u2) = bcl_from_coefficients(&b.e1, &b.e2, 1e-10)?;
    Ok(fro(&(p2 - p)).max(fro(&(u2 - u))))
}

/// Instance `i` of a seeded batch: dimension `1 + i mod max_dim`, schemes alternating every
/// `max_dim` instances unless one is fixed, seed `seed + i`.
pub fn batch_instance(i: usize, max_dim: usize, seed: u64, scheme: Option<Scheme>) -> (CommutingPair, Scheme, u64) {
    let dim = 1 + i % max_dim.max(1);
    let scheme = scheme.unwrap_or(Scheme::ALL[(i / max_dim.max(1)) % 2]);
    let s = seed.wrapping_add(i as u64);
    (random_pair(dim, s, scheme), scheme, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceReport {
    pub index: usize,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub suites: Vec<SuiteReport>,
}

impl InstanceReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

/// Run `suite` on `count` seeded instances; reports come back sorted by index.
pub fn run_batch(
    count: usize,
    max_dim: usize,
    seed: u64,
    scheme: Option<Scheme>,
    suite: Suite,
    n: usize,
) -> Vec<InstanceReport> {
    let one = |i: usize| {
        let (pair, scheme, s) = batch_instance(i, max_dim, seed, scheme);
        let cfg = SuiteConfig { n, seed: s };
        InstanceReport {
            index: i,
            dim: pair.dim(),
            scheme: Some(scheme),
            seed: Some(s),
            suites: run_suite(&pair, suite, &cfg),
        }
    };
    #[cfg(feature = "parallel")]
    let mut out: Vec<InstanceReport> = {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut out: Vec<InstanceReport> = (0..count).map(one).collect();
    out.sort_by_key(|r| r.index);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar;
    use crate::pairs::validate_pair;

    #[test]
    fn scalar_half_passes_everything() {
        let pair = validate_pair(&scalar(0.5), &scalar(0.5), 1e-10).unwrap();
        for r in run_suite(&pair, Suite::All, &SuiteConfig::default()) {
            assert!(r.passed() && r.skipped.is_none(), "{r:?}");
        }
    }

    #[test]
    fn unitary_pair_skips_the_model() {
        let pair = validate_pair(&scalar(-1.0), &scalar(1.0), 1e-10).unwrap();
        let reports = run_suite(&pair, Suite::All, &SuiteConfig::default());
        let model = reports.iter().find(|r| r.suite == "model").unwrap();
        assert!(model.skipped.as_deref().unwrap().contains("not pure"));
        assert!(reports.iter().all(SuiteReport::passed), "{reports:?}");
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn batch_is_sorted_and_deterministic() {
        let a = run_batch(6, 3, 9, None, Suite::Bcl, 8);
        let b = run_batch(6, 3, 9, None, Suite::Bcl, 8);
        assert_eq!(a.iter().map(|r| r.index).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.iter().map(|r| r.dim).collect::<Vec<_>>(), vec![1, 2, 3, 1, 2, 3]);
    }
}
