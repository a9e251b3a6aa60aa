//! Exact verification engine for instrumental-variable identification on
//! finite enumerated populations.
//!
//! Estimands (constant effect, treatment-on-treated, complier-average, and
//! population-average) and the usual IV estimand are evaluated by exhaustive
//! weighted enumeration, never by sampling. Populations of at most 64 units
//! run in exact rational arithmetic where identification equalities hold with
//! zero tolerance; larger populations fall back to floats with a 1e-12
//! comparison tolerance.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MrError, Result};
use crate::population::{CausalPopulation, Unit};
use crate::rational::Rat;

/// Unit count at or below which the exact rational path is used.
pub const EXACT_UNIT_LIMIT: usize = 64;

const FLOAT_TOL: f64 = 1e-12;

/// The causal quantity to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimandKind {
    /// Constant treatment effect; defined only when every unit shares the
    /// same effect.
    Cte,
    /// Average treatment effect on the treated, conditioning on realized
    /// treatment under the population's instrument assignment.
    Att,
    /// Local average treatment effect in compliers.
    Late,
    /// Population average treatment effect.
    Ate,
    /// The usual IV estimand (ratio of instrument-level contrasts).
    UsualIv,
}

impl fmt::Display for EstimandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EstimandKind::Cte => "cte",
            EstimandKind::Att => "att",
            EstimandKind::Late => "late",
            EstimandKind::Ate => "ate",
            EstimandKind::UsualIv => "usual-iv",
        };
        f.write_str(s)
    }
}

impl FromStr for EstimandKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cte" => Ok(EstimandKind::Cte),
            "att" => Ok(EstimandKind::Att),
            "late" => Ok(EstimandKind::Late),
            "ate" => Ok(EstimandKind::Ate),
            "usual-iv" | "iv" => Ok(EstimandKind::UsualIv),
            other => Err(format!("unknown estimand {other:?}")),
        }
    }
}

/// Compliance stratum from `(D(0), D(1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplianceType {
    Complier,
    AlwaysTaker,
    NeverTaker,
    Defier,
}

pub fn classify_compliance(d0: bool, d1: bool) -> ComplianceType {
    match (d0, d1) {
        (false, true) => ComplianceType::Complier,
        (true, true) => ComplianceType::AlwaysTaker,
        (false, false) => ComplianceType::NeverTaker,
        (true, false) => ComplianceType::Defier,
    }
}

/// Population weights of the four compliance strata; they sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplianceWeights {
    pub complier: f64,
    pub always_taker: f64,
    pub never_taker: f64,
    pub defier: f64,
}

/// Which identification assumptions hold, each decided by exhaustive
/// comparison of conditional expectations or distributions.
///
/// Flags stated in terms of the unmeasured confounder are `None` when the
/// population carries no confounder labels. Flags stated in terms of `Y(d)`
/// (constant effect, additive homogeneity, the `U`-effect interaction, and
/// confounding control) report `false` when the exclusion restriction fails,
/// since `Y(d)` is then ill-defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub relevance: bool,
    pub independence: bool,
    pub exclusion: bool,
    pub constant_effect: bool,
    pub additive_homogeneity: bool,
    pub monotonicity: bool,
    pub no_uz_interaction: Option<bool>,
    pub no_ud_interaction: Option<bool>,
    pub confounding_control: Option<bool>,
}

impl AssumptionReport {
    /// Core assumptions shared by every identification result.
    pub fn core(&self) -> bool {
        self.relevance && self.independence && self.exclusion
    }

    /// Premises of the corresponding identification result for `kind`.
    pub fn identifies(&self, kind: EstimandKind) -> bool {
        match kind {
            EstimandKind::Cte => self.core() && self.constant_effect,
            EstimandKind::Att => self.core() && self.additive_homogeneity,
            EstimandKind::Late => self.core() && self.monotonicity,
            EstimandKind::Ate => {
                self.core()
                    && self.confounding_control == Some(true)
                    && (self.no_uz_interaction == Some(true)
                        || self.no_ud_interaction == Some(true))
            }
            EstimandKind::UsualIv => self.relevance,
        }
    }
}

/// A single named assumption, for targeted checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    Relevance,
    Independence,
    Exclusion,
    ConstantEffect,
    AdditiveHomogeneity,
    Monotonicity,
    NoUzInteraction,
    NoUdInteraction,
    ConfoundingControl,
}

// ---------------------------------------------------------------------------
// Generic scalar so the same enumeration code serves both arithmetic modes.

pub(crate) trait Scalar: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn is_same(&self, o: &Self) -> bool;

    fn is_zero(&self) -> bool {
        self.is_same(&Self::zero())
    }
    fn from_indicator(b: bool) -> Self {
        if b {
            Self::one()
        } else {
            Self::zero()
        }
    }
}

impl Scalar for Rat {
    fn zero() -> Self {
        Rat::zero()
    }
    fn one() -> Self {
        Rat::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_same(&self, o: &Self) -> bool {
        self == o
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_same(&self, o: &Self) -> bool {
        (self - o).abs() <= FLOAT_TOL
    }
}

struct UnitView<T> {
    w: T,
    q: T,
    d: [bool; 2],
    y: [[T; 2]; 2],
    u: Option<usize>,
}

impl<T: Scalar> UnitView<T> {
    /// Mass of the event `Z = z` for this unit.
    fn z_mass(&self, z: usize) -> T {
        if z == 1 {
            self.w.mul(&self.q)
        } else {
            self.w.mul(&T::one().sub(&self.q))
        }
    }

    fn exclusion_holds(&self) -> bool {
        self.y[0][0].is_same(&self.y[1][0]) && self.y[0][1].is_same(&self.y[1][1])
    }

    /// Treatment effect `Y(1) - Y(0)` under the exclusion restriction.
    fn effect(&self) -> T {
        self.y[0][1].sub(&self.y[0][0])
    }
}

struct PopView<T> {
    units: Vec<UnitView<T>>,
}

fn view_exact(pop: &CausalPopulation) -> PopView<Rat> {
    view_with(pop, |r| r.clone())
}

fn view_float(pop: &CausalPopulation) -> PopView<f64> {
    view_with(pop, |r| r.to_f64())
}

fn view_with<T: Scalar>(pop: &CausalPopulation, conv: impl Fn(&Rat) -> T) -> PopView<T> {
    let mut labels: HashMap<&str, usize> = HashMap::new();
    let units = pop
        .units
        .iter()
        .map(|u: &Unit| {
            let label = u.u.as_deref().map(|name| {
                let next = labels.len();
                *labels.entry(name).or_insert(next)
            });
            UnitView {
                w: conv(&u.weight),
                q: conv(&u.z_prob),
                d: [u.d0, u.d1],
                y: [[conv(&u.y00), conv(&u.y01)], [conv(&u.y10), conv(&u.y11)]],
                u: label,
            }
        })
        .collect();
    PopView { units }
}

impl<T: Scalar> PopView<T> {
    fn total_weight(&self) -> T {
        self.units.iter().fold(T::zero(), |acc, u| acc.add(&u.w))
    }

    /// Conditional mean of `f(unit)` given `Z = z`, with the event mass.
    fn conditional_on_z(&self, z: usize, f: impl Fn(&UnitView<T>) -> T) -> (T, Option<T>) {
        let mut mass = T::zero();
        let mut sum = T::zero();
        for u in &self.units {
            let m = u.z_mass(z);
            sum = sum.add(&m.mul(&f(u)));
            mass = mass.add(&m);
        }
        if mass.is_zero() {
            (mass, None)
        } else {
            let mean = sum.div(&mass);
            (mass, Some(mean))
        }
    }

    /// Observed-data moments implied by consistency: `Y = Y(z, D(z))`.
    fn observed_y_mean(&self, z: usize) -> Option<T> {
        self.conditional_on_z(z, |u| u.y[z][usize::from(u.d[z])].clone()).1
    }

    fn observed_d_mean(&self, z: usize) -> Option<T> {
        self.conditional_on_z(z, |u| T::from_indicator(u.d[z])).1
    }

    fn usual_iv(&self) -> Result<T> {
        let ey1 = self.observed_y_mean(1);
        let ey0 = self.observed_y_mean(0);
        let ed1 = self.observed_d_mean(1);
        let ed0 = self.observed_d_mean(0);
        let (ey1, ey0, ed1, ed0) = match (ey1, ey0, ed1, ed0) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => {
                return Err(MrError::UndefinedEstimand(
                    "an instrument level has zero probability".to_string(),
                ))
            }
        };
        let denom = ed1.sub(&ed0);
        if denom.is_zero() {
            return Err(MrError::IrrelevantInstrument);
        }
        Ok(ey1.sub(&ey0).div(&denom))
    }

    fn require_exclusion(&self) -> Result<()> {
        if self.units.iter().all(|u| u.w.is_zero() || u.exclusion_holds()) {
            Ok(())
        } else {
            Err(MrError::UndefinedEstimand(
                "exclusion restriction violated; Y(d) is ill-defined".to_string(),
            ))
        }
    }

    fn estimand(&self, kind: EstimandKind) -> Result<T> {
        if matches!(kind, EstimandKind::UsualIv) {
            return self.usual_iv();
        }
        self.require_exclusion()?;
        match kind {
            EstimandKind::Cte => {
                let mut common: Option<T> = None;
                for u in self.units.iter().filter(|u| !u.w.is_zero()) {
                    let e = u.effect();
                    match &common {
                        None => common = Some(e),
                        Some(c) if c.is_same(&e) => {}
                        Some(_) => {
                            return Err(MrError::UndefinedEstimand(
                                "treatment effect is not constant across units".to_string(),
                            ))
                        }
                    }
                }
                common.ok_or_else(|| {
                    MrError::UndefinedEstimand("population has no mass".to_string())
                })
            }
            EstimandKind::Att => {
                // P(D = 1) for a unit mixes both instrument levels.
                let mut mass = T::zero();
                let mut sum = T::zero();
                for u in &self.units {
                    let treated = u
                        .z_mass(1)
                        .mul(&T::from_indicator(u.d[1]))
                        .add(&u.z_mass(0).mul(&T::from_indicator(u.d[0])));
                    sum = sum.add(&treated.mul(&u.effect()));
                    mass = mass.add(&treated);
                }
                if mass.is_zero() {
                    return Err(MrError::UndefinedEstimand("no treated units".to_string()));
                }
                Ok(sum.div(&mass))
            }
            EstimandKind::Late => {
                let mut mass = T::zero();
                let mut sum = T::zero();
                for u in &self.units {
                    if classify_compliance(u.d[0], u.d[1]) == ComplianceType::Complier {
                        sum = sum.add(&u.w.mul(&u.effect()));
                        mass = mass.add(&u.w);
                    }
                }
                if mass.is_zero() {
                    return Err(MrError::UndefinedEstimand("no compliers".to_string()));
                }
                Ok(sum.div(&mass))
            }
            EstimandKind::Ate => {
                let total = self.total_weight();
                if total.is_zero() {
                    return Err(MrError::UndefinedEstimand("population has no mass".to_string()));
                }
                let sum = self
                    .units
                    .iter()
                    .fold(T::zero(), |acc, u| acc.add(&u.w.mul(&u.effect())));
                Ok(sum.div(&total))
            }
            EstimandKind::UsualIv => unreachable!(),
        }
    }

    // -- assumption checks --------------------------------------------------

    fn relevance(&self) -> bool {
        match (self.observed_d_mean(1), self.observed_d_mean(0)) {
            (Some(a), Some(b)) => !a.is_same(&b),
            // A degenerate instrument is trivially independent of treatment.
            _ => false,
        }
    }

    /// Instrument independence: `Z` must be independent of the potential-value
    /// profile `(Y(0, D(0)), Y(1, D(1)), D(0), D(1))`. Operationally the mean
    /// assignment probability must agree across profile groups.
    fn independence(&self) -> bool {
        let mut groups: Vec<(Vec<&UnitView<T>>, T, T)> = Vec::new();
        'units: for u in self.units.iter().filter(|u| !u.w.is_zero()) {
            for (members, mass, qsum) in groups.iter_mut() {
                let rep = members[0];
                let same_profile = rep.d == u.d
                    && rep.y[0][usize::from(rep.d[0])].is_same(&u.y[0][usize::from(u.d[0])])
                    && rep.y[1][usize::from(rep.d[1])].is_same(&u.y[1][usize::from(u.d[1])]);
                if same_profile {
                    members.push(u);
                    *mass = mass.add(&u.w);
                    *qsum = qsum.add(&u.w.mul(&u.q));
                    continue 'units;
                }
            }
            groups.push((vec![u], u.w.clone(), u.w.mul(&u.q)));
        }
        let mut common: Option<T> = None;
        for (_, mass, qsum) in &groups {
            let mean_q = qsum.div(mass);
            match &common {
                None => common = Some(mean_q),
                Some(c) if c.is_same(&mean_q) => {}
                Some(_) => return false,
            }
        }
        true
    }

    fn exclusion(&self) -> bool {
        self.units.iter().all(|u| u.w.is_zero() || u.exclusion_holds())
    }

    fn constant_effect(&self) -> bool {
        if !self.exclusion() {
            return false;
        }
        let mut common: Option<T> = None;
        for u in self.units.iter().filter(|u| !u.w.is_zero()) {
            let e = u.effect();
            match &common {
                None => common = Some(e),
                Some(c) if c.is_same(&e) => {}
                Some(_) => return false,
            }
        }
        true
    }

    /// Checked through its implication on the saturated structural mean model
    /// for the treated: the mean effect among `(D=1, Z=1)` equals the mean
    /// effect among `(D=1, Z=0)`. Empty cells are vacuously fine.
    fn additive_homogeneity(&self) -> bool {
        if !self.exclusion() {
            return false;
        }
        let cell_mean = |z: usize| -> Option<T> {
            let mut mass = T::zero();
            let mut sum = T::zero();
            for u in &self.units {
                if u.d[z] {
                    let m = u.z_mass(z);
                    sum = sum.add(&m.mul(&u.effect()));
                    mass = mass.add(&m);
                }
            }
            if mass.is_zero() {
                None
            } else {
                Some(sum.div(&mass))
            }
        };
        match (cell_mean(1), cell_mean(0)) {
            (Some(a), Some(b)) => a.is_same(&b),
            _ => true,
        }
    }

    fn monotonicity(&self) -> bool {
        self.units
            .iter()
            .all(|u| u.w.is_zero() || classify_compliance(u.d[0], u.d[1]) != ComplianceType::Defier)
    }

    fn strata(&self) -> Option<Vec<Vec<&UnitView<T>>>> {
        let mut strata: Vec<Vec<&UnitView<T>>> = Vec::new();
        for u in self.units.iter().filter(|u| !u.w.is_zero()) {
            let label = u.u?;
            if strata.len() <= label {
                strata.resize_with(label + 1, Vec::new);
            }
            strata[label].push(u);
        }
        Some(strata.into_iter().filter(|s| !s.is_empty()).collect())
    }

    /// No additive interaction between the confounder and the instrument in
    /// treatment uptake: within every stratum, `E[D|Z=1,U] - E[D|Z=0,U]`
    /// equals the marginal contrast.
    fn no_uz_interaction(&self) -> Option<bool> {
        let strata = self.strata()?;
        let marginal = match (self.observed_d_mean(1), self.observed_d_mean(0)) {
            (Some(a), Some(b)) => a.sub(&b),
            _ => return Some(false),
        };
        for stratum in &strata {
            let cell = |z: usize| -> Option<T> {
                let mut mass = T::zero();
                let mut sum = T::zero();
                for u in stratum {
                    let m = u.z_mass(z);
                    sum = sum.add(&m.mul(&T::from_indicator(u.d[z])));
                    mass = mass.add(&m);
                }
                if mass.is_zero() {
                    None
                } else {
                    Some(sum.div(&mass))
                }
            };
            match (cell(1), cell(0)) {
                (Some(a), Some(b)) => {
                    if !a.sub(&b).is_same(&marginal) {
                        return Some(false);
                    }
                }
                // Contrast undefined in this stratum; it cannot falsify.
                _ => continue,
            }
        }
        Some(true)
    }

    /// No additive interaction between the confounder and the treatment
    /// effect: `E[Y(1)-Y(0)|U]` is the same in every stratum.
    fn no_ud_interaction(&self) -> Option<bool> {
        let strata = self.strata()?;
        if !self.exclusion() {
            return Some(false);
        }
        let mut common: Option<T> = None;
        for stratum in &strata {
            let mut mass = T::zero();
            let mut sum = T::zero();
            for u in stratum {
                sum = sum.add(&u.w.mul(&u.effect()));
                mass = mass.add(&u.w);
            }
            let mean = sum.div(&mass);
            match &common {
                None => common = Some(mean),
                Some(c) if c.is_same(&mean) => {}
                Some(_) => return Some(false),
            }
        }
        Some(true)
    }

    /// Sufficiency of `U` for confounding control: within every stratum, the
    /// distribution of each potential outcome `Y(d)` must not depend on the
    /// realized `(D, Z)` cell.
    fn confounding_control(&self) -> Option<bool> {
        let strata = self.strata()?;
        if !self.exclusion() {
            return Some(false);
        }
        for stratum in &strata {
            for d_target in 0..2usize {
                let value = |u: &UnitView<T>| u.y[0][d_target].clone();
                let marginal =
                    distribution(stratum.iter().map(|u| (value(u), u.w.clone())).collect());
                // Realized cells: (z, D(z)) for z in {0, 1}.
                for z in 0..2usize {
                    for d_realized in 0..2usize {
                        let members: Vec<(T, T)> = stratum
                            .iter()
                            .filter(|u| usize::from(u.d[z]) == d_realized)
                            .map(|u| (value(u), u.z_mass(z)))
                            .collect();
                        let total = members
                            .iter()
                            .fold(T::zero(), |acc, (_, m)| acc.add(m));
                        if total.is_zero() {
                            continue;
                        }
                        let cell = distribution(members);
                        if !same_distribution(&cell, &marginal) {
                            return Some(false);
                        }
                    }
                }
            }
        }
        Some(true)
    }

    fn report(&self) -> AssumptionReport {
        AssumptionReport {
            relevance: self.relevance(),
            independence: self.independence(),
            exclusion: self.exclusion(),
            constant_effect: self.constant_effect(),
            additive_homogeneity: self.additive_homogeneity(),
            monotonicity: self.monotonicity(),
            no_uz_interaction: self.no_uz_interaction(),
            no_ud_interaction: self.no_ud_interaction(),
            confounding_control: self.confounding_control(),
        }
    }
}

/// Consolidates `(value, mass)` pairs into a normalized discrete distribution.
fn distribution<T: Scalar>(pairs: Vec<(T, T)>) -> Vec<(T, T)> {
    let mut out: Vec<(T, T)> = Vec::new();
    let mut total = T::zero();
    for (value, mass) in pairs {
        if mass.is_zero() {
            continue;
        }
        total = total.add(&mass);
        if let Some((_, m)) = out.iter_mut().find(|(v, _)| v.is_same(&value)) {
            *m = m.add(&mass);
        } else {
            out.push((value, mass));
        }
    }
    if !total.is_zero() {
        for (_, m) in out.iter_mut() {
            *m = m.div(&total);
        }
    }
    out
}

fn same_distribution<T: Scalar>(a: &[(T, T)], b: &[(T, T)]) -> bool {
    let prob_of = |dist: &[(T, T)], value: &T| -> T {
        dist.iter()
            .find(|(v, _)| v.is_same(value))
            .map(|(_, m)| m.clone())
            .unwrap_or_else(T::zero)
    };
    a.iter().all(|(v, m)| prob_of(b, v).is_same(m))
        && b.iter().all(|(v, m)| prob_of(a, v).is_same(m))
}

// ---------------------------------------------------------------------------
// Public API

/// Weights of the four compliance strata, classified from `(D(0), D(1))`.
pub fn enumerate_compliance(pop: &CausalPopulation) -> ComplianceWeights {
    let mut w = [Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero()];
    let mut total = Rat::zero();
    for u in &pop.units {
        let idx = match classify_compliance(u.d0, u.d1) {
            ComplianceType::Complier => 0,
            ComplianceType::AlwaysTaker => 1,
            ComplianceType::NeverTaker => 2,
            ComplianceType::Defier => 3,
        };
        w[idx] = &w[idx] + &u.weight;
        total = &total + &u.weight;
    }
    if !total.is_zero() {
        for x in w.iter_mut() {
            *x = &*x / &total;
        }
    }
    ComplianceWeights {
        complier: w[0].to_f64(),
        always_taker: w[1].to_f64(),
        never_taker: w[2].to_f64(),
        defier: w[3].to_f64(),
    }
}

/// Exact rational evaluation of an estimand.
pub fn compute_estimand_exact(pop: &CausalPopulation, kind: EstimandKind) -> Result<Rat> {
    view_exact(pop).estimand(kind)
}

/// Evaluates an estimand, using the exact path for populations of at most
/// [`EXACT_UNIT_LIMIT`] units and floats otherwise.
pub fn compute_estimand(pop: &CausalPopulation, kind: EstimandKind) -> Result<f64> {
    if pop.n_units() <= EXACT_UNIT_LIMIT {
        compute_estimand_exact(pop, kind).map(|r| r.to_f64())
    } else {
        view_float(pop).estimand(kind)
    }
}

/// Exact rational usual IV estimand from the observed-data distribution.
pub fn usual_iv_estimand_exact(pop: &CausalPopulation) -> Result<Rat> {
    view_exact(pop).usual_iv()
}

pub fn usual_iv_estimand(pop: &CausalPopulation) -> Result<f64> {
    if pop.n_units() <= EXACT_UNIT_LIMIT {
        usual_iv_estimand_exact(pop).map(|r| r.to_f64())
    } else {
        view_float(pop).usual_iv()
    }
}

/// Decides every assumption flag by exhaustive enumeration.
pub fn check_assumptions(pop: &CausalPopulation) -> AssumptionReport {
    if pop.n_units() <= EXACT_UNIT_LIMIT {
        view_exact(pop).report()
    } else {
        view_float(pop).report()
    }
}

/// Checks a single assumption; confounder-dependent checks error when the
/// population has no confounder labels.
pub fn check_assumption(pop: &CausalPopulation, which: Assumption) -> Result<bool> {
    let report = check_assumptions(pop);
    let need_u = |flag: Option<bool>| flag.ok_or(MrError::ConfounderLabelsRequired);
    match which {
        Assumption::Relevance => Ok(report.relevance),
        Assumption::Independence => Ok(report.independence),
        Assumption::Exclusion => Ok(report.exclusion),
        Assumption::ConstantEffect => Ok(report.constant_effect),
        Assumption::AdditiveHomogeneity => Ok(report.additive_homogeneity),
        Assumption::Monotonicity => Ok(report.monotonicity),
        Assumption::NoUzInteraction => need_u(report.no_uz_interaction),
        Assumption::NoUdInteraction => need_u(report.no_ud_interaction),
        Assumption::ConfoundingControl => need_u(report.confounding_control),
    }
}
