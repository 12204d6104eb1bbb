//! Power schemes: rules that assign every study its power.
//!
//! A power of 0 drops a study's likelihood entirely, 1 uses it fully, values in
//! between use it partially and values above 1 up-weight it.
//!
//! Threshold rules have a compact text form, semicolon-separated `cond:power`
//! clauses over the variables `r` and `n`, with an optional `default:power`
//! clause (1 when omitted):
//!
//! ```text
//! r>0.2:0.5;default:1      down-weight large effects
//! n>1000:0.1;default:1     down-weight very large samples
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Study;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerScheme {
    Uniform { value: f64 },
    FromColumn,
    /// Power is the product of the two reliabilities.
    ReliabilityAsPower,
    ThresholdRule { rule: ThresholdRule },
}

impl Default for PowerScheme {
    fn default() -> Self {
        PowerScheme::Uniform { value: 1.0 }
    }
}

impl PowerScheme {
    pub fn validate(&self) -> Result<()> {
        match self {
            PowerScheme::Uniform { value } => check_power(*value),
            PowerScheme::ThresholdRule { rule } => rule.validate(),
            PowerScheme::FromColumn | PowerScheme::ReliabilityAsPower => Ok(()),
        }
    }

    pub fn power_for(&self, study: &Study) -> Result<f64> {
        match self {
            PowerScheme::Uniform { value } => Ok(*value),
            PowerScheme::FromColumn => study.power.ok_or_else(|| Error::MissingPower {
                label: study.label.clone(),
            }),
            PowerScheme::ReliabilityAsPower => Ok(study.reliability_x() * study.reliability_y()),
            PowerScheme::ThresholdRule { rule } => Ok(rule.evaluate(study)),
        }
    }
}

impl fmt::Display for PowerScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerScheme::Uniform { value } => write!(f, "uniform({value})"),
            PowerScheme::FromColumn => f.write_str("from_column"),
            PowerScheme::ReliabilityAsPower => f.write_str("reliability_as_power"),
            PowerScheme::ThresholdRule { rule } => write!(f, "rule({rule})"),
        }
    }
}

/// One α per study, in input order.
pub fn resolve_powers(studies: &[Study], scheme: &PowerScheme) -> Result<Vec<f64>> {
    scheme.validate()?;
    studies
        .iter()
        .map(|s| {
            let a = scheme.power_for(s)?;
            check_power(a).map(|_| a)
        })
        .collect()
}

fn check_power(a: f64) -> Result<()> {
    if a >= 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::PowerRule(format!("power {a} must be finite and >= 0")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleVariable {
    R,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl Comparison {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Gt => lhs > rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Eq => lhs == rhs,
            Comparison::Ne => lhs != rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Eq => "==",
            Comparison::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRule {
    pub variable: RuleVariable,
    pub op: Comparison,
    pub threshold: f64,
    pub power: f64,
}

impl PowerRule {
    fn matches(&self, study: &Study) -> bool {
        let lhs = match self.variable {
            RuleVariable::R => study.r,
            RuleVariable::N => study.n as f64,
        };
        self.op.holds(lhs, self.threshold)
    }
}

/// Ordered clauses; the first matching clause wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub clauses: Vec<PowerRule>,
    pub default_power: f64,
}

impl ThresholdRule {
    pub fn evaluate(&self, study: &Study) -> f64 {
        self.clauses
            .iter()
            .find(|c| c.matches(study))
            .map_or(self.default_power, |c| c.power)
    }

    pub fn validate(&self) -> Result<()> {
        check_power(self.default_power)?;
        for c in &self.clauses {
            check_power(c.power)?;
            if !c.threshold.is_finite() {
                return Err(Error::PowerRule(format!("threshold {} is not finite", c.threshold)));
            }
        }
        Ok(())
    }
}

impl FromStr for ThresholdRule {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut clauses = Vec::new();
        let mut default_power = None;
        for raw in text.split(';') {
            let clause = raw.trim();
            if clause.is_empty() {
                continue;
            }
            let (cond, power) = clause
                .rsplit_once(':')
                .ok_or_else(|| Error::PowerRule(format!("clause `{clause}` has no `:power` part")))?;
            let power = parse_number(power.trim(), clause)?;
            let cond = cond.trim();
            if cond == "default" {
                if default_power.replace(power).is_some() {
                    return Err(Error::PowerRule("more than one default clause".into()));
                }
                continue;
            }
            clauses.push(parse_condition(cond, power)?);
        }
        let rule = ThresholdRule {
            clauses,
            default_power: default_power.unwrap_or(1.0),
        };
        rule.validate()?;
        Ok(rule)
    }
}

fn parse_condition(cond: &str, power: f64) -> Result<PowerRule> {
    let variable = match cond.chars().next() {
        Some('r') | Some('R') => RuleVariable::R,
        Some('n') | Some('N') => RuleVariable::N,
        _ => {
            return Err(Error::PowerRule(format!(
                "condition `{cond}` must start with `r` or `n`"
            )))
        }
    };
    let rest = cond[1..].trim_start();
    // Two-character operators first.
    let ops = [
        (">=", Comparison::Ge),
        ("<=", Comparison::Le),
        ("==", Comparison::Eq),
        ("!=", Comparison::Ne),
        (">", Comparison::Gt),
        ("<", Comparison::Lt),
        ("=", Comparison::Eq),
    ];
    let (op, value) = ops
        .iter()
        .find_map(|(sym, op)| rest.strip_prefix(sym).map(|v| (*op, v)))
        .ok_or_else(|| Error::PowerRule(format!("condition `{cond}` has no comparison operator")))?;
    Ok(PowerRule {
        variable,
        op,
        threshold: parse_number(value.trim(), cond)?,
        power,
    })
}

fn parse_number(text: &str, context: &str) -> Result<f64> {
    text.parse::<f64>()
        .map_err(|_| Error::PowerRule(format!("`{text}` in `{context}` is not a number")))
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            let var = match c.variable {
                RuleVariable::R => "r",
                RuleVariable::N => "n",
            };
            write!(f, "{var}{}{}:{};", c.op.symbol(), c.threshold, c.power)?;
        }
        write!(f, "default:{}", self.default_power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn studies(rs: &[f64]) -> Vec<Study> {
        rs.iter()
            .enumerate()
            .map(|(i, &r)| Study::new(format!("s{i}"), r, 100).unwrap())
            .collect()
    }

    #[test]
    fn uniform_one_gives_all_ones() {
        let s: Vec<Study> = (0..56)
            .map(|i| Study::new(format!("s{i}"), 0.2, 50 + i as u64).unwrap())
            .collect();
        let a = resolve_powers(&s, &PowerScheme::Uniform { value: 1.0 }).unwrap();
        assert_eq!(a.len(), 56);
        assert!(a.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn large_effect_rule() {
        let rule: ThresholdRule = "r>0.2:0.5;default:1".parse().unwrap();
        let a = resolve_powers(
            &studies(&[0.1, 0.34, 0.45]),
            &PowerScheme::ThresholdRule { rule },
        )
        .unwrap();
        assert_eq!(a, vec![1.0, 0.5, 0.5]);
    }

    #[test]
    fn large_sample_rule() {
        let rule: ThresholdRule = "n>1000:0.1;default:1".parse().unwrap();
        let s = vec![
            Study::new("a", 0.3, 1212).unwrap(),
            Study::new("b", 0.3, 200).unwrap(),
            Study::new("c", 0.3, 2136).unwrap(),
        ];
        let a = resolve_powers(&s, &PowerScheme::ThresholdRule { rule }).unwrap();
        assert_eq!(a, vec![0.1, 1.0, 0.1]);
    }

    #[test]
    fn first_match_wins() {
        let rule: ThresholdRule = "r>0.4:0.2; r>0.2:0.5; default:0.9".parse().unwrap();
        let a = resolve_powers(
            &studies(&[0.1, 0.3, 0.5]),
            &PowerScheme::ThresholdRule { rule },
        )
        .unwrap();
        assert_eq!(a, vec![0.9, 0.5, 0.2]);
    }

    #[test]
    fn reliability_product() {
        let s = Study::new("a", 0.3, 50)
            .unwrap()
            .with_reliability(Some(1.0), Some(0.81))
            .unwrap();
        let a = resolve_powers(&[s], &PowerScheme::ReliabilityAsPower).unwrap();
        assert_eq!(a, vec![0.81]);
        let missing = Study::new("b", 0.3, 50).unwrap();
        assert_eq!(
            resolve_powers(&[missing], &PowerScheme::ReliabilityAsPower).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn from_column_missing_names_the_study() {
        let s = vec![
            Study::new("first", 0.3, 50).unwrap().with_power(0.5).unwrap(),
            Study::new("second", 0.3, 50).unwrap(),
        ];
        let err = resolve_powers(&s, &PowerScheme::FromColumn).unwrap_err();
        assert_eq!(err, Error::MissingPower { label: "second".into() });
        assert!(err.to_string().contains("second"));
    }

    #[test]
    fn rule_parse_errors() {
        assert!("r>0.2".parse::<ThresholdRule>().is_err());
        assert!("x>0.2:1".parse::<ThresholdRule>().is_err());
        assert!("r~0.2:1".parse::<ThresholdRule>().is_err());
        assert!("r>abc:1".parse::<ThresholdRule>().is_err());
        assert!("r>0.2:-1".parse::<ThresholdRule>().is_err());
        assert!("default:1;default:2".parse::<ThresholdRule>().is_err());
    }

    #[test]
    fn rule_display_round_trips() {
        let rule: ThresholdRule = "n >= 1000 : 0.1 ; r<0:2".parse().unwrap();
        let again: ThresholdRule = rule.to_string().parse().unwrap();
        assert_eq!(rule, again);
        assert_eq!(rule.default_power, 1.0);
    }

    proptest! {
        #[test]
        fn uniform_returns_constant(c in 0.0f64..10.0, rs in prop::collection::vec(-0.95f64..0.95, 0..20)) {
            let s = studies(&rs);
            let a = resolve_powers(&s, &PowerScheme::Uniform { value: c }).unwrap();
            prop_assert!(a.iter().all(|&x| x == c));
            prop_assert_eq!(a.len(), s.len());
        }

        #[test]
        fn resolution_is_pure(rs in prop::collection::vec(-0.95f64..0.95, 0..20)) {
            let s = studies(&rs);
            let scheme = PowerScheme::ThresholdRule { rule: "r>0.2:0.5;r<-0.1:1.5;default:1".parse().unwrap() };
            let a = resolve_powers(&s, &scheme).unwrap();
            let b = resolve_powers(&s, &scheme).unwrap();
            prop_assert_eq!(
                a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
