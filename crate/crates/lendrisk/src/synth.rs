//! Seeded synthetic loan data in the two export schemas, with known decision rules.
//!
//! Every application draws the phase-one features, then is accepted with
//! probability `sigmoid(phase1.logit)`. Accepted loans draw the remaining
//! credit-file fields and default with probability `sigmoid(phase2.logit)`.
//! Loans issued in the last `censor_months` months may instead be reported as
//! `Current`, which pulls the monthly default fraction down at the end of the
//! series.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use lendrisk_core::math::sigmoid;
use lendrisk_core::rng::{self, Rng};
use lendrisk_core::YearMonth;
use rand::distr::weighted::WeightedIndex;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{PHASE1_NUMERIC, PHASE2_NUMERIC};

/// One standardized linear term `weight * (x - center) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleTerm {
    pub feature: String,
    pub weight: f64,
    pub center: f64,
    pub scale: f64,
}

impl RuleTerm {
    pub fn new(feature: &str, weight: f64, center: f64, scale: f64) -> Self {
        Self { feature: feature.into(), weight, center, scale }
    }
}

/// Logistic label rule over named features. A missing feature contributes zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub bias: f64,
    #[serde(default)]
    pub terms: Vec<RuleTerm>,
    /// Additive logit offsets per purpose token.
    #[serde(default)]
    pub purpose_effects: BTreeMap<String, f64>,
}

impl Rule {
    /// Linear predictor excluding the bias.
    fn slope_part(&self, names: &[&str], values: &[Option<f64>], purpose: &str) -> f64 {
        let mut z = self.purpose_effects.get(purpose).copied().unwrap_or(0.0);
        for t in &self.terms {
            let i = names.iter().position(|n| *n == t.feature).expect("validated feature name");
            if let Some(x) = values[i] {
                z += t.weight * (x - t.center) / t.scale;
            }
        }
        z
    }

    fn validate(&self, which: &str, names: &[&str]) -> Result<()> {
        if !self.bias.is_finite() {
            return Err(Error::Config(format!("{which}: bias must be finite")));
        }
        for t in &self.terms {
            if !names.contains(&t.feature.as_str()) {
                return Err(Error::Config(format!("{which}: unknown feature {:?}", t.feature)));
            }
            if !t.weight.is_finite() || !t.center.is_finite() || !(t.scale > 0.0 && t.scale.is_finite()) {
                return Err(Error::Config(format!("{which}: term {:?} needs finite weight/center and positive scale", t.feature)));
            }
        }
        if self.purpose_effects.values().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{which}: purpose effects must be finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortRule {
    /// Cohort loans default under the global phase-two rule.
    Shared,
    /// Cohort loans default under the global rule with all slopes negated.
    Inverted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSpec {
    pub token: String,
    /// Probability that an application carries the cohort purpose.
    pub share: f64,
    pub phase2_rule: CohortRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// Accepted plus rejected rows.
    pub applications: usize,
    pub start: YearMonth,
    pub months: u32,
    pub emp_length_missing: f64,
    pub term_60_share: f64,
    /// Relative frequencies of purpose tokens.
    pub purposes: BTreeMap<String, f64>,
    pub phase1: Rule,
    pub phase2: Rule,
    /// Fraction of defaults reported as `Default` rather than `Charged Off`.
    pub default_status_share: f64,
    pub censor_months: u32,
    /// Probability of `Current` status in the final month; ramps up linearly.
    pub censor_max: f64,
    pub cohort: Option<CohortSpec>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let purposes = [
            ("debt_consolidation", 0.55),
            ("credit_card", 0.2),
            ("home_improvement", 0.07),
            ("other", 0.06),
            ("major_purchase", 0.03),
            ("car", 0.025),
            ("medical", 0.02),
            ("small_business", 0.015),
            ("moving", 0.01),
            ("vacation", 0.01),
        ];
        Self {
            seed: 7,
            applications: 11_000,
            start: YearMonth::new(2010, 1).expect("valid month"),
            months: 96,
            emp_length_missing: 0.03,
            term_60_share: 0.3,
            purposes: purposes.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            phase1: Rule {
                bias: -9.5,
                terms: vec![
                    RuleTerm::new("dti", -4.0, 18.0, 8.0),
                    RuleTerm::new("emp_length", 3.0, 5.0, 3.0),
                    RuleTerm::new("loan_amount", -5.0, 14_000.0, 8_000.0),
                ],
                purpose_effects: BTreeMap::new(),
            },
            phase2: Rule {
                bias: -2.5,
                terms: vec![
                    RuleTerm::new("fico", -3.5, 697.0, 28.0),
                    RuleTerm::new("log_annual_income", -2.5, 11.1, 0.5),
                    RuleTerm::new("revolving_utilization", 2.0, 50.0, 24.0),
                    RuleTerm::new("earliest_credit_line_years", -1.5, 15.0, 7.0),
                    RuleTerm::new("term", 1.5, 43.2, 11.0),
                    RuleTerm::new("dti", 1.0, 18.0, 8.0),
                ],
                purpose_effects: BTreeMap::new(),
            },
            default_status_share: 0.05,
            censor_months: 12,
            censor_max: 0.9,
            cohort: None,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        if self.applications == 0 || self.months == 0 {
            return Err(Error::Config("applications and months must be positive".into()));
        }
        if self.censor_months > self.months {
            return Err(Error::Config("censor_months exceeds months".into()));
        }
        prob("emp_length_missing", self.emp_length_missing)?;
        prob("term_60_share", self.term_60_share)?;
        prob("default_status_share", self.default_status_share)?;
        prob("censor_max", self.censor_max)?;
        if self.purposes.is_empty() || self.purposes.values().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config("purposes need nonnegative finite weights".into()));
        }
        if let Some(c) = &self.cohort {
            prob("cohort.share", c.share)?;
            if c.token.trim().is_empty() {
                return Err(Error::Config("cohort.token is empty".into()));
            }
            if c.share < 1.0 && !self.purposes.iter().any(|(k, w)| *k != c.token && *w > 0.0) {
                return Err(Error::Config("no purpose outside the cohort has positive weight".into()));
            }
        } else if !self.purposes.values().any(|w| *w > 0.0) {
            return Err(Error::Config("all purpose weights are zero".into()));
        }
        self.phase1.validate("phase1", &PHASE1_NUMERIC)?;
        self.phase2.validate("phase2", &PHASE2_NUMERIC)?;
        Ok(())
    }
}

/// One generated row with the feature values a correct parser must recover.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRow {
    pub month: YearMonth,
    pub purpose: String,
    pub phase1: [Option<f64>; 3],
    /// Present for accepted rows.
    pub phase2: Option<Phase2Truth>,
    /// CSV cells in header order.
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase2Truth {
    pub numeric: [Option<f64>; 15],
    pub home_ownership: String,
    pub verification_status: String,
    pub status: String,
    pub in_cohort: bool,
}

/// Ground truth written next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub applications: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub phase1: Rule,
    pub phase2: Rule,
    pub cohort: Option<CohortSpec>,
    pub cohort_accepted: usize,
    pub cohort_rejected: usize,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub accepted: Vec<SynthRow>,
    pub rejected: Vec<SynthRow>,
    pub truth: Truth,
}

pub const ACCEPTED_HEADER: [&str; 25] = [
    "id",
    "loan_amnt",
    "term",
    "int_rate",
    "installment",
    "grade",
    "emp_length",
    "home_ownership",
    "annual_inc",
    "verification_status",
    "issue_d",
    "loan_status",
    "purpose",
    "addr_state",
    "dti",
    "earliest_cr_line",
    "fico_range_low",
    "fico_range_high",
    "open_acc",
    "pub_rec",
    "revol_bal",
    "revol_util",
    "total_acc",
    "mort_acc",
    "pub_rec_bankruptcies",
];

pub const REJECTED_HEADER: [&str; 9] = [
    "Amount Requested",
    "Application Date",
    "Loan Title",
    "Risk_Score",
    "Debt-To-Income Ratio",
    "Zip Code",
    "State",
    "Employment Length",
    "Policy Code",
];

const STATES: [&str; 8] = ["CA", "NY", "TX", "FL", "IL", "NJ", "PA", "OH"];
const HOME: [(&str, f64); 3] = [("MORTGAGE", 0.5), ("RENT", 0.4), ("OWN", 0.1)];
const VERIFICATION: [&str; 3] = ["Verified", "Source Verified", "Not Verified"];
const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Normal draw clamped to `[lo, hi]`.
fn normal(rng: &mut Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    Normal::new(mean, sd).expect("valid normal").sample(rng).clamp(lo, hi)
}

/// Rounded to `places` decimals, as the nearest double to the printed value.
fn decimals(v: f64, places: i32) -> f64 {
    let k = 10f64.powi(places);
    (v * k).round() / k
}

fn emp_text(years: Option<u32>) -> String {
    match years {
        None => "n/a".into(),
        Some(0) => "< 1 year".into(),
        Some(1) => "1 year".into(),
        Some(10) => "10+ years".into(),
        Some(n) => format!("{n} years"),
    }
}

fn mon_yyyy(m: YearMonth) -> String {
    format!("{}-{}", MONTHS[usize::from(m.month()) - 1], m.year())
}

/// Display-style title for the rejected file, e.g. `Debt_consolidation`.
fn title_case(token: &str) -> String {
    let mut c = token.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let cohort_token = config.cohort.as_ref().map(|c| c.token.as_str());
    let (tokens, weights): (Vec<&String>, Vec<f64>) =
        config.purposes.iter().filter(|(k, _)| Some(k.as_str()) != cohort_token).map(|(k, w)| (k, *w)).unzip();
    let purpose_dist = WeightedIndex::new(&weights).ok();
    let home_dist = WeightedIndex::new(HOME.iter().map(|h| h.1)).expect("valid weights");
    let n = config.applications;
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let (mut cohort_accepted, mut cohort_rejected) = (0, 0);

    for i in 0..n {
        let offset = (i as u64 * u64::from(config.months) / n as u64) as i32;
        let month = config.start.add_months(offset);
        let in_cohort = config.cohort.as_ref().is_some_and(|c| rng.random::<f64>() < c.share);
        let purpose = match (in_cohort, &purpose_dist) {
            (true, _) => cohort_token.expect("cohort configured").to_string(),
            (false, Some(d)) => tokens[d.sample(&mut rng)].clone(),
            (false, None) => unreachable!("validated purpose weights"),
        };
        let dti = decimals(normal(&mut rng, 18.0, 8.0, 0.0, 60.0), 2);
        let emp = (rng.random::<f64>() >= config.emp_length_missing).then(|| rng.random_range(0..=10u32));
        let amount = round_to(normal(&mut rng, 14_000.0, 8_000.0, 1_000.0, 40_000.0), 25.0);
        let phase1 = [Some(dti), emp.map(f64::from), Some(amount)];
        let p_accept = sigmoid(config.phase1.bias + config.phase1.slope_part(&PHASE1_NUMERIC, &phase1, &purpose));
        let is_accepted = rng.random::<f64>() < p_accept;

        if !is_accepted {
            let day = rng.random_range(1..=28u32);
            let cells = vec![
                format!("{amount}"),
                format!("{:04}-{:02}-{day:02}", month.year(), month.month()),
                title_case(&purpose),
                rng.random_range(500..=800u32).to_string(),
                format!("{dti}%"),
                format!("{:03}xx", rng.random_range(100..1000u32)),
                STATES[rng.random_range(0..STATES.len())].to_string(),
                if emp.is_none() { String::new() } else { emp_text(emp) },
                "0".into(),
            ];
            cohort_rejected += usize::from(in_cohort);
            rejected.push(SynthRow { month, purpose, phase1, phase2: None, cells });
            continue;
        }

        let term = if rng.random::<f64>() < config.term_60_share { 60.0 } else { 36.0 };
        let rate = decimals(normal(&mut rng, 13.0, 4.0, 5.0, 30.0), 2);
        let r = rate / 1200.0;
        let installment = decimals(amount * r / (1.0 - (1.0 + r).powf(-term)), 2);
        let history_months = normal(&mut rng, 180.0, 84.0, 12.0, 600.0).round() as i32;
        let open = normal(&mut rng, 11.0, 5.0, 1.0, 40.0).round();
        let derog = normal(&mut rng, 0.0, 0.6, 0.0, 10.0).round();
        let util = decimals(normal(&mut rng, 50.0, 24.0, 0.0, 120.0), 1);
        let total = open + normal(&mut rng, 12.0, 8.0, 0.0, 80.0).round();
        let mortgage = normal(&mut rng, 1.5, 1.8, 0.0, 20.0).round();
        let bankrupt = normal(&mut rng, 0.0, 0.35, 0.0, 5.0).round();
        let income = Normal::new(11.1f64, 0.5).expect("valid normal").sample(&mut rng).exp().round().max(1.0);
        let fico_low = round_to(normal(&mut rng, 695.0, 30.0, 660.0, 845.0), 5.0);
        let balance = (Normal::new(9.3f64, 1.2).expect("valid normal").sample(&mut rng).exp() - 1.0).round().max(0.0);
        let home = HOME[home_dist.sample(&mut rng)].0;
        let verification = VERIFICATION[rng.random_range(0..VERIFICATION.len())];
        let earliest = month.add_months(-history_months);

        let numeric = [
            Some(amount),
            Some(term),
            Some(installment),
            emp.map(f64::from),
            Some(dti),
            Some(f64::from(history_months) / 12.0),
            Some(open),
            Some(derog),
            Some(util),
            Some(total),
            Some(mortgage),
            Some(bankrupt),
            Some(income.ln()),
            Some((fico_low + fico_low + 4.0) / 2.0),
            Some(balance.ln_1p()),
        ];
        let slope = config.phase2.slope_part(&PHASE2_NUMERIC, &numeric, &purpose);
        let inverted = in_cohort && config.cohort.as_ref().is_some_and(|c| c.phase2_rule == CohortRule::Inverted);
        let logit = config.phase2.bias + if inverted { -slope } else { slope };
        let defaulted = rng.random::<f64>() < sigmoid(logit);
        let default_text = rng.random::<f64>() < config.default_status_share;
        let ramp_start = config.months - config.censor_months;
        let p_current = if config.censor_months > 0 && offset as u32 >= ramp_start {
            config.censor_max * f64::from(offset as u32 - ramp_start + 1) / f64::from(config.censor_months)
        } else {
            0.0
        };
        let current = rng.random::<f64>() < p_current;
        let status = match (current, defaulted, default_text) {
            (true, _, _) => "Current",
            (false, true, true) => "Default",
            (false, true, false) => "Charged Off",
            (false, false, _) => "Fully Paid",
        };
        let grade = ["A", "B", "C", "D", "E", "F", "G"][((rate - 5.0) / 4.0).clamp(0.0, 6.0) as usize];
        let cells = vec![
            (accepted.len() + 1).to_string(),
            format!("{amount}"),
            format!(" {term} months"),
            format!("{rate}%"),
            format!("{installment}"),
            grade.to_string(),
            emp_text(emp),
            home.to_string(),
            format!("{income}"),
            verification.to_string(),
            mon_yyyy(month),
            status.to_string(),
            purpose.clone(),
            STATES[rng.random_range(0..STATES.len())].to_string(),
            format!("{dti}"),
            mon_yyyy(earliest),
            format!("{fico_low}"),
            format!("{}", fico_low + 4.0),
            format!("{open}"),
            format!("{derog}"),
            format!("{balance}"),
            format!("{util}%"),
            format!("{total}"),
            format!("{mortgage}"),
            format!("{bankrupt}"),
        ];
        cohort_accepted += usize::from(in_cohort);
        accepted.push(SynthRow {
            month,
            purpose,
            phase1,
            phase2: Some(Phase2Truth {
                numeric,
                home_ownership: home.to_lowercase(),
                verification_status: verification.to_lowercase(),
                status: status.to_string(),
                in_cohort,
            }),
            cells,
        });
    }

    let truth = Truth {
        seed: config.seed,
        applications: n,
        accepted: accepted.len(),
        rejected: rejected.len(),
        phase1: config.phase1.clone(),
        phase2: config.phase2.clone(),
        cohort: config.cohort.clone(),
        cohort_accepted,
        cohort_rejected,
    };
    Ok(SynthData { accepted, rejected, truth })
}

pub const ACCEPTED_FILE: &str = "accepted.csv";
pub const REJECTED_FILE: &str = "rejected.csv";
pub const TRUTH_FILE: &str = "truth.json";

fn write_csv(path: &Path, header: &[&str], rows: &[SynthRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row.cells).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl SynthData {
    /// Writes `accepted.csv`, `rejected.csv` and `truth.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv(&dir.join(ACCEPTED_FILE), &ACCEPTED_HEADER, &self.accepted)?;
        write_csv(&dir.join(REJECTED_FILE), &REJECTED_HEADER, &self.rejected)?;
        let truth = dir.join(TRUTH_FILE);
        let text = serde_json::to_string_pretty(&self.truth).map_err(|e| Error::json(&truth, e))?;
        fs::write(&truth, text + "\n").map_err(|e| Error::io(&truth, e))
    }
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig { seed, applications: 2_000, ..SynthConfig::default() }
    }

    #[test]
    fn same_seed_same_rows() {
        let a = generate(&small(3)).unwrap();
        let b = generate(&small(3)).unwrap();
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.rejected, b.rejected);
        let c = generate(&small(4)).unwrap();
        assert_ne!(a.accepted, c.accepted);
    }

    #[test]
    fn zero_rule_accepts_half() {
        let cfg = SynthConfig {
            applications: 10_000,
            phase1: Rule { bias: 0.0, terms: Vec::new(), purpose_effects: BTreeMap::new() },
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let frac = d.truth.accepted as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn strong_single_feature_separates_classes() {
        let cfg = SynthConfig {
            applications: 10_000,
            phase1: Rule { bias: 0.0, terms: vec![RuleTerm::new("dti", 8.0, 18.0, 8.0)], purpose_effects: BTreeMap::new() },
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let mean = |rows: &[SynthRow]| rows.iter().map(|r| r.phase1[0].unwrap() - 18.0).sum::<f64>() / rows.len() as f64;
        assert!(mean(&d.accepted) > 0.0);
        assert!(mean(&d.rejected) < 0.0);
    }

    #[test]
    fn cohort_share_is_respected() {
        let cfg = SynthConfig {
            applications: 10_000,
            cohort: Some(CohortSpec { token: "small_business".into(), share: 0.2, phase2_rule: CohortRule::Inverted }),
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let share = (d.truth.cohort_accepted + d.truth.cohort_rejected) as f64 / 10_000.0;
        assert!((share - 0.2).abs() < 0.015, "{share}");
        let all = d.accepted.iter().chain(&d.rejected);
        let tagged = all.filter(|r| r.purpose == "small_business").count();
        assert_eq!(tagged, d.truth.cohort_accepted + d.truth.cohort_rejected);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mut cfg = SynthConfig::default();
        cfg.phase1.terms[0].scale = 0.0;
        assert!(generate(&cfg).is_err());
        let cfg = SynthConfig { emp_length_missing: 1.5, ..SynthConfig::default() };
        assert!(generate(&cfg).is_err());
        let mut cfg = SynthConfig::default();
        cfg.phase2.terms.push(RuleTerm::new("int_rate", 1.0, 0.0, 1.0));
        assert!(generate(&cfg).is_err());
    }
}
