//! Randomized construction of small rational causal populations.
//!
//! Each builder targets one identification regime: the returned population
//! satisfies the core IV assumptions plus the named fourth assumption, with
//! everything else (weights, assignment probability, baseline outcomes,
//! compliance mix) randomized over small rationals. The counterexample
//! builders instead keep the core assumptions and break exactly the named
//! fourth assumption, yielding witness populations where the corresponding
//! identification equality fails.

use rand::Rng;

use crate::estimand::{
    check_assumptions, compute_estimand_exact, usual_iv_estimand_exact, ComplianceType,
    EstimandKind,
};
use crate::population::{CausalPopulation, Unit};
use crate::rational::Rat;

fn weights<R: Rng>(rng: &mut R, k: usize) -> Vec<Rat> {
    let parts: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = parts.iter().sum();
    parts.into_iter().map(|a| Rat::new(a, total)).collect()
}

fn assignment_prob<R: Rng>(rng: &mut R) -> Rat {
    let den = rng.gen_range(2..=8);
    let num = rng.gen_range(1..den);
    Rat::new(num, den)
}

fn outcome<R: Rng>(rng: &mut R) -> Rat {
    let den = rng.gen_range(1..=4);
    let num = rng.gen_range(-12..=12);
    Rat::new(num, den)
}

fn random_type<R: Rng>(rng: &mut R, allow_defiers: bool) -> ComplianceType {
    match rng.gen_range(0..10) {
        0..=4 => ComplianceType::Complier,
        5..=6 => ComplianceType::AlwaysTaker,
        7..=8 => ComplianceType::NeverTaker,
        _ if allow_defiers => ComplianceType::Defier,
        _ => ComplianceType::NeverTaker,
    }
}

fn compliance_mix<R: Rng>(rng: &mut R, k: usize, allow_defiers: bool) -> Vec<ComplianceType> {
    let mut types = vec![ComplianceType::Complier];
    for _ in 1..k {
        types.push(random_type(rng, allow_defiers));
    }
    types
}

fn d_of(ctype: ComplianceType) -> (bool, bool) {
    match ctype {
        ComplianceType::Complier => (false, true),
        ComplianceType::AlwaysTaker => (true, true),
        ComplianceType::NeverTaker => (false, false),
        ComplianceType::Defier => (true, false),
    }
}

/// Exclusion-respecting unit: `Y(z, d) = y0 + d * effect` for both `z`.
fn unit(w: Rat, ctype: ComplianceType, y0: Rat, effect: Rat, q: Rat, u: Option<String>) -> Unit {
    let (d0, d1) = d_of(ctype);
    let y1 = &y0 + &effect;
    Unit { weight: w, d0, d1, y00: y0.clone(), y01: y1.clone(), y10: y0, y11: y1, u, z_prob: q }
}

fn stratum_mass(types: &[ComplianceType], ws: &[Rat], wanted: ComplianceType) -> Rat {
    types
        .iter()
        .zip(ws)
        .filter(|(t, _)| **t == wanted)
        .fold(Rat::zero(), |acc, (_, w)| &acc + w)
}

fn relevant(types: &[ComplianceType], ws: &[Rat]) -> bool {
    stratum_mass(types, ws, ComplianceType::Complier)
        != stratum_mass(types, ws, ComplianceType::Defier)
}

/// Core assumptions plus a constant treatment effect across all units.
pub fn random_cte<R: Rng>(rng: &mut R) -> CausalPopulation {
    loop {
        let k = rng.gen_range(2..=8);
        let ws = weights(rng, k);
        let q = assignment_prob(rng);
        let types = compliance_mix(rng, k, true);
        if !relevant(&types, &ws) {
            continue;
        }
        let effect = outcome(rng);
        let units = types
            .iter()
            .zip(&ws)
            .map(|(t, w)| unit(w.clone(), *t, outcome(rng), effect.clone(), q.clone(), None))
            .collect();
        return CausalPopulation::new(units).expect("generated population is valid");
    }
}

/// Core assumptions plus additive homogeneity: the mean effect among treated
/// units is balanced across instrument levels by solving for one complier's
/// effect.
pub fn random_att<R: Rng>(rng: &mut R) -> CausalPopulation {
    loop {
        let k = rng.gen_range(3..=8);
        let ws = weights(rng, k);
        let q = assignment_prob(rng);
        let mut types = compliance_mix(rng, k, false);
        // Both treated cells must be realizable: keep one always-taker.
        types[1] = ComplianceType::AlwaysTaker;
        if !relevant(&types, &ws) {
            continue;
        }
        let mut effects: Vec<Rat> = (0..k).map(|_| outcome(rng)).collect();

        // Mean effect in (D=1, Z=1) is over units with D(1)=1; in (D=1, Z=0)
        // over units with D(0)=1. The assignment probability cancels, so the
        // constraint is equality of two weight-averaged effects.
        let t1: Vec<usize> = (0..k).filter(|&i| d_of(types[i]).1).collect();
        let t0: Vec<usize> = (0..k).filter(|&i| d_of(types[i]).0).collect();
        let pivot = t1
            .iter()
            .copied()
            .find(|&i| types[i] == ComplianceType::Complier)
            .expect("a complier exists");
        let sum_w = |idx: &[usize]| idx.iter().fold(Rat::zero(), |acc, &i| &acc + &ws[i]);
        let sum_we = |idx: &[usize]| {
            idx.iter()
                .filter(|&&i| i != pivot)
                .fold(Rat::zero(), |acc, &i| &acc + &(&ws[i] * &effects[i]))
        };
        let a = sum_w(&t1);
        let b = sum_w(&t0);
        // (s1 + w_k e_k) / a = s0 / b  =>  e_k = (a * s0 / b - s1) / w_k
        let s1 = sum_we(&t1);
        let s0 = sum_we(&t0);
        effects[pivot] = &(&(&(&a * &s0) / &b) - &s1) / &ws[pivot];

        let units = types
            .iter()
            .zip(&ws)
            .zip(&effects)
            .map(|((t, w), e)| unit(w.clone(), *t, outcome(rng), e.clone(), q.clone(), None))
            .collect();
        return CausalPopulation::new(units).expect("generated population is valid");
    }
}

/// Core assumptions plus monotonicity: no defiers, free effect heterogeneity.
pub fn random_late<R: Rng>(rng: &mut R) -> CausalPopulation {
    loop {
        let k = rng.gen_range(2..=8);
        let ws = weights(rng, k);
        let q = assignment_prob(rng);
        let types = compliance_mix(rng, k, false);
        if !relevant(&types, &ws) {
            continue;
        }
        let units = types
            .iter()
            .zip(&ws)
            .map(|(t, w)| unit(w.clone(), *t, outcome(rng), outcome(rng), q.clone(), None))
            .collect();
        return CausalPopulation::new(units).expect("generated population is valid");
    }
}

/// Core assumptions plus confounding control and no confounder-instrument
/// uptake interaction: outcomes depend on the stratum only, and every stratum
/// has the same complier-minus-defier share.
pub fn random_ate<R: Rng>(rng: &mut R) -> CausalPopulation {
    let q = assignment_prob(rng);
    // Shared uptake contrast, leaving room for a defier share.
    let rho = Rat::new(1, rng.gen_range(3..=5));
    let stratum_ws = weights(rng, 2);
    let mut units = Vec::new();
    for (s, sw) in stratum_ws.iter().enumerate() {
        let label = Some(format!("u{s}"));
        let y0 = outcome(rng);
        let effect = outcome(rng);
        let with_defier = rng.gen_bool(0.4);
        let tau = if with_defier { Rat::new(1, 10) } else { Rat::zero() };
        let complier_share = &rho + &tau;
        let rest = &(&Rat::one() - &complier_share) - &tau;
        let mk = |ctype: ComplianceType, share: Rat| {
            unit(&share * sw, ctype, y0.clone(), effect.clone(), q.clone(), label.clone())
        };
        units.push(mk(ComplianceType::Complier, complier_share));
        if with_defier {
            units.push(mk(ComplianceType::Defier, tau.clone()));
        }
        match rng.gen_range(0..3) {
            0 => units.push(mk(ComplianceType::AlwaysTaker, rest)),
            1 => units.push(mk(ComplianceType::NeverTaker, rest)),
            _ => {
                let half = &rest / &Rat::int(2);
                units.push(mk(ComplianceType::AlwaysTaker, half.clone()));
                units.push(mk(ComplianceType::NeverTaker, half));
            }
        }
    }
    CausalPopulation::new(units).expect("generated population is valid")
}

/// Which fourth assumption a counterexample relaxes while keeping the core
/// assumptions intact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relaxed {
    ConstantEffect,
    AdditiveHomogeneity,
    Monotonicity,
    /// Both no-interaction assumptions fail; confounding control still holds.
    UInteractions,
    /// Confounding control fails; both no-interaction assumptions still hold.
    ConfoundingControl,
}

impl Relaxed {
    /// The estimand whose identification breaks under this relaxation. With a
    /// non-constant effect there is no common effect to compare against, so
    /// the constant-effect counterexample is witnessed on the population
    /// average instead.
    pub fn target(self) -> EstimandKind {
        match self {
            Relaxed::ConstantEffect => EstimandKind::Ate,
            Relaxed::AdditiveHomogeneity => EstimandKind::Att,
            Relaxed::Monotonicity => EstimandKind::Late,
            Relaxed::UInteractions | Relaxed::ConfoundingControl => EstimandKind::Ate,
        }
    }
}

/// Builds a population that satisfies the core assumptions, fails the relaxed
/// assumption, and whose usual IV estimand differs from the target estimand.
pub fn counterexample<R: Rng>(rng: &mut R, relaxed: Relaxed) -> CausalPopulation {
    loop {
        let pop = match relaxed {
            Relaxed::ConstantEffect => {
                let ws = weights(rng, 3);
                let q = assignment_prob(rng);
                CausalPopulation::new(vec![
                    unit(ws[0].clone(), ComplianceType::Complier, outcome(rng), outcome(rng), q.clone(), None),
                    unit(ws[1].clone(), ComplianceType::NeverTaker, outcome(rng), outcome(rng), q.clone(), None),
                    unit(ws[2].clone(), ComplianceType::AlwaysTaker, outcome(rng), outcome(rng), q, None),
                ])
                .unwrap()
            }
            Relaxed::AdditiveHomogeneity => {
                let ws = weights(rng, 2);
                let q = assignment_prob(rng);
                CausalPopulation::new(vec![
                    unit(ws[0].clone(), ComplianceType::Complier, outcome(rng), outcome(rng), q.clone(), None),
                    unit(ws[1].clone(), ComplianceType::AlwaysTaker, outcome(rng), outcome(rng), q, None),
                ])
                .unwrap()
            }
            Relaxed::Monotonicity => {
                let ws = weights(rng, 3);
                let q = assignment_prob(rng);
                CausalPopulation::new(vec![
                    unit(ws[0].clone(), ComplianceType::Complier, outcome(rng), outcome(rng), q.clone(), None),
                    unit(ws[1].clone(), ComplianceType::Defier, outcome(rng), outcome(rng), q.clone(), None),
                    unit(ws[2].clone(), ComplianceType::NeverTaker, outcome(rng), outcome(rng), q, None),
                ])
                .unwrap()
            }
            Relaxed::UInteractions => {
                let q = assignment_prob(rng);
                let stratum_ws = weights(rng, 2);
                let shares = [Rat::new(1, 4), Rat::new(3, 4)];
                let mut units = Vec::new();
                for (s, sw) in stratum_ws.iter().enumerate() {
                    let label = Some(format!("u{s}"));
                    let y0 = outcome(rng);
                    let effect = &outcome(rng) + &Rat::int(4 * s as i64 + 1);
                    let complier = &shares[s] * sw;
                    let never = &(&Rat::one() - &shares[s]) * sw;
                    units.push(unit(complier, ComplianceType::Complier, y0.clone(), effect.clone(), q.clone(), label.clone()));
                    units.push(unit(never, ComplianceType::NeverTaker, y0, effect, q.clone(), label));
                }
                CausalPopulation::new(units).unwrap()
            }
            Relaxed::ConfoundingControl => {
                let ws = weights(rng, 2);
                let q = assignment_prob(rng);
                let label = Some("u0".to_string());
                let y0_c = outcome(rng);
                let y0_n = &y0_c + &Rat::int(rng.gen_range(1..=6));
                CausalPopulation::new(vec![
                    unit(ws[0].clone(), ComplianceType::Complier, y0_c, outcome(rng), q.clone(), label.clone()),
                    unit(ws[1].clone(), ComplianceType::NeverTaker, y0_n, outcome(rng), q, label),
                ])
                .unwrap()
            }
        };

        let report = check_assumptions(&pop);
        if !report.core() {
            continue;
        }
        let broken = match relaxed {
            Relaxed::ConstantEffect => !report.constant_effect,
            Relaxed::AdditiveHomogeneity => !report.additive_homogeneity,
            Relaxed::Monotonicity => !report.monotonicity,
            Relaxed::UInteractions => {
                report.no_uz_interaction == Some(false)
                    && report.no_ud_interaction == Some(false)
                    && report.confounding_control == Some(true)
            }
            Relaxed::ConfoundingControl => {
                report.confounding_control == Some(false)
                    && (report.no_uz_interaction == Some(true)
                        || report.no_ud_interaction == Some(true))
            }
        };
        if !broken {
            continue;
        }
        let iv = match usual_iv_estimand_exact(&pop) {
            Ok(v) => v,
            Err(_) => continue,
        };
        match compute_estimand_exact(&pop, relaxed.target()) {
            Ok(target) if target != iv => return pop,
            _ => continue,
        }
    }
}

/// Fully unconstrained small population for generic property tests; may
/// violate any assumption, including exclusion.
pub fn random_unconstrained<R: Rng>(rng: &mut R) -> CausalPopulation {
    let k = rng.gen_range(1..=8);
    let ws = weights(rng, k);
    let constant_q = rng.gen_bool(0.5);
    let shared_q = assignment_prob(rng);
    let with_labels = rng.gen_bool(0.5);
    let units = ws
        .into_iter()
        .map(|w| {
            let (d0, d1) = d_of(random_type(rng, true));
            let q = if constant_q { shared_q.clone() } else { assignment_prob(rng) };
            let u = with_labels.then(|| format!("u{}", rng.gen_range(0..2)));
            let mut base = Unit {
                weight: w,
                d0,
                d1,
                y00: outcome(rng),
                y01: outcome(rng),
                y10: Rat::zero(),
                y11: Rat::zero(),
                u,
                z_prob: q,
            };
            if rng.gen_bool(0.7) {
                base.y10 = base.y00.clone();
                base.y11 = base.y01.clone();
            } else {
                base.y10 = outcome(rng);
                base.y11 = outcome(rng);
            }
            base
        })
        .collect();
    CausalPopulation::new(units).expect("generated population is valid")
}
