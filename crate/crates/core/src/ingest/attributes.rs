use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Interner;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CustomerType {
    Business,
    Consumer,
    #[default]
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubscriptionType {
    Prepaid,
    Postpaid,
    #[default]
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    #[default]
    Unknown,
}

/// Subscriber properties as carried on each CDR row. `None` means unknown.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimAttributes {
    pub customer_type: CustomerType,
    pub subscription_type: SubscriptionType,
    pub age: Option<u8>,
    pub gender: Gender,
    pub tac: Option<String>,
}

fn is_unknown(s: &str) -> bool {
    s.is_empty() || s.eq_ignore_ascii_case("unknown")
}

pub(crate) fn parse_observation(
    customer: &str,
    subscription: &str,
    age: &str,
    gender: &str,
    tac: &str,
) -> Option<SimAttributes> {
    let customer_type = match customer {
        "business" => CustomerType::Business,
        "consumer" => CustomerType::Consumer,
        s if is_unknown(s) => CustomerType::Unknown,
        _ => return None,
    };
    let subscription_type = match subscription {
        "prepaid" => SubscriptionType::Prepaid,
        "postpaid" => SubscriptionType::Postpaid,
        s if is_unknown(s) => SubscriptionType::Unknown,
        _ => return None,
    };
    let gender = match gender {
        "male" => Gender::Male,
        "female" => Gender::Female,
        s if is_unknown(s) => Gender::Unknown,
        _ => return None,
    };
    let age = if is_unknown(age) {
        None
    } else {
        // out-of-range ages are not trusted
        let a: i64 = age.parse().ok()?;
        (0..100).contains(&a).then_some(a as u8)
    };
    let tac = (!is_unknown(tac)).then(|| tac.to_string());
    Some(SimAttributes {
        customer_type,
        subscription_type,
        age,
        gender,
        tac,
    })
}

#[derive(Clone, Debug, Default)]
enum Field<T> {
    #[default]
    Unseen,
    One(T),
    Conflict,
}

impl<T: PartialEq + Clone> Field<T> {
    fn observe(&mut self, v: &T) {
        match self {
            Field::Unseen => *self = Field::One(v.clone()),
            Field::One(cur) if cur != v => *self = Field::Conflict,
            _ => {}
        }
    }

    fn resolve(&self, unknown: T) -> T {
        match self {
            Field::One(v) => v.clone(),
            _ => unknown,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct FieldSet {
    customer_type: Field<CustomerType>,
    subscription_type: Field<SubscriptionType>,
    age: Field<Option<u8>>,
    gender: Field<Gender>,
    tac: Field<Option<String>>,
}

/// Order-insensitive per-field reduction of attribute observations.
///
/// A field observed with two or more distinct values (unknown counts as a
/// value of its own) resolves to unknown; a single consistent value is kept.
#[derive(Clone, Debug, Default)]
pub struct AttributeReducer {
    fields: Vec<FieldSet>,
}

impl AttributeReducer {
    fn slot(&mut self, sim: u32) -> &mut FieldSet {
        let i = sim as usize;
        if i >= self.fields.len() {
            self.fields.resize_with(i + 1, FieldSet::default);
        }
        &mut self.fields[i]
    }

    /// Registers a SIM without an observation.
    pub fn touch(&mut self, sim: u32) {
        self.slot(sim);
    }

    pub fn observe(&mut self, sim: u32, obs: &SimAttributes) {
        let f = self.slot(sim);
        f.customer_type.observe(&obs.customer_type);
        f.subscription_type.observe(&obs.subscription_type);
        f.age.observe(&obs.age);
        f.gender.observe(&obs.gender);
        f.tac.observe(&obs.tac);
    }

    /// Number of SIMs with at least one conflicting field.
    pub fn conflicted(&self) -> usize {
        self.fields
            .iter()
            .filter(|f| {
                matches!(f.customer_type, Field::Conflict)
                    || matches!(f.subscription_type, Field::Conflict)
                    || matches!(f.age, Field::Conflict)
                    || matches!(f.gender, Field::Conflict)
                    || matches!(f.tac, Field::Conflict)
            })
            .count()
    }

    pub fn finish(&self, sims: &Interner) -> BTreeMap<String, SimAttributes> {
        self.fields
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let attrs = SimAttributes {
                    customer_type: f.customer_type.resolve(CustomerType::Unknown),
                    subscription_type: f.subscription_type.resolve(SubscriptionType::Unknown),
                    age: f.age.resolve(None),
                    gender: f.gender.resolve(Gender::Unknown),
                    tac: f.tac.resolve(None),
                };
                (sims.name(i as u32).to_string(), attrs)
            })
            .collect()
    }
}

/// Collapses a stream of per-row observations into one attribute set per SIM.
pub fn normalize_attributes<I, S>(observations: I) -> BTreeMap<String, SimAttributes>
where
    I: IntoIterator<Item = (S, SimAttributes)>,
    S: AsRef<str>,
{
    let mut sims = Interner::new();
    let mut reducer = AttributeReducer::default();
    for (sim, obs) in observations {
        let key = sims.intern(sim.as_ref());
        reducer.observe(key, &obs);
    }
    reducer.finish(&sims)
}

impl fmt::Display for CustomerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CustomerType::Business => "business",
            CustomerType::Consumer => "consumer",
            CustomerType::Unknown => "unknown",
        })
    }
}

impl fmt::Display for SubscriptionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubscriptionType::Prepaid => "prepaid",
            SubscriptionType::Postpaid => "postpaid",
            SubscriptionType::Unknown => "unknown",
        })
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        })
    }
}

pub fn write_attributes(path: &Path, attrs: &BTreeMap<String, SimAttributes>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["sim_id", "customer_type", "subscription_type", "age", "gender", "tac"])
        .map_err(|e| Error::csv(path, e))?;
    for (sim, a) in attrs {
        let age = a.age.map_or_else(|| "unknown".to_string(), |v| v.to_string());
        w.write_record([
            sim.as_str(),
            &a.customer_type.to_string(),
            &a.subscription_type.to_string(),
            &age,
            &a.gender.to_string(),
            a.tac.as_deref().unwrap_or("unknown"),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the table written by [`write_attributes`].
pub fn read_attributes(path: &Path) -> Result<BTreeMap<String, SimAttributes>> {
    let mut rdr = super::open_csv(path)?;
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        if row.len() != 6 {
            continue;
        }
        if let Some(a) = parse_observation(&row[1], &row[2], &row[3], &row[4], &row[5]) {
            out.insert(row[0].to_string(), a);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn attrs(age: Option<u8>, sub: SubscriptionType) -> SimAttributes {
        SimAttributes {
            customer_type: CustomerType::Consumer,
            subscription_type: sub,
            age,
            gender: Gender::Male,
            tac: Some("35332509".into()),
        }
    }

    #[test]
    fn consistent_values_are_kept() {
        let obs = (0..3).map(|_| ("s1", attrs(Some(35), SubscriptionType::Prepaid)));
        let out = normalize_attributes(obs);
        assert_eq!(out["s1"].age, Some(35));
    }

    #[test]
    fn known_to_unknown_transition_is_a_conflict() {
        let obs = vec![
            ("s1", attrs(Some(35), SubscriptionType::Prepaid)),
            ("s1", attrs(None, SubscriptionType::Prepaid)),
            ("s1", attrs(Some(35), SubscriptionType::Prepaid)),
        ];
        let out = normalize_attributes(obs);
        assert_eq!(out["s1"].age, None);
        assert_eq!(out["s1"].subscription_type, SubscriptionType::Prepaid);
    }

    #[test]
    fn fields_resolve_independently() {
        let obs = vec![
            ("s1", attrs(Some(40), SubscriptionType::Prepaid)),
            ("s1", attrs(Some(40), SubscriptionType::Postpaid)),
        ];
        let out = normalize_attributes(obs);
        assert_eq!(out["s1"].gender, Gender::Male);
        assert_eq!(out["s1"].age, Some(40));
        assert_eq!(out["s1"].subscription_type, SubscriptionType::Unknown);
    }

    #[test]
    fn observation_parsing() {
        assert!(parse_observation("consumer", "prepaid", "35", "female", "1").is_some());
        assert_eq!(parse_observation("consumer", "prepaid", "150", "male", "").unwrap().age, None);
        assert!(parse_observation("alien", "prepaid", "35", "male", "").is_none());
        assert!(parse_observation("consumer", "prepaid", "x", "male", "").is_none());
    }

    fn arb_attrs() -> impl Strategy<Value = SimAttributes> {
        (
            prop::sample::select(vec![CustomerType::Business, CustomerType::Consumer, CustomerType::Unknown]),
            prop::sample::select(vec![SubscriptionType::Prepaid, SubscriptionType::Postpaid, SubscriptionType::Unknown]),
            prop::option::of(20u8..23),
            prop::sample::select(vec![Gender::Male, Gender::Female, Gender::Unknown]),
            prop::option::of(prop::sample::select(vec!["a".to_string(), "b".to_string()])),
        )
            .prop_map(|(customer_type, subscription_type, age, gender, tac)| SimAttributes {
                customer_type,
                subscription_type,
                age,
                gender,
                tac,
            })
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent_and_order_free(
            obs in prop::collection::vec((0u8..4, arb_attrs()), 0..40)
        ) {
            let named: Vec<(String, SimAttributes)> =
                obs.iter().map(|(s, a)| (format!("s{s}"), a.clone())).collect();
            let once = normalize_attributes(named.clone());
            let twice = normalize_attributes(once.clone());
            prop_assert_eq!(&once, &twice);

            let mut reversed = named;
            reversed.reverse();
            prop_assert_eq!(once, normalize_attributes(reversed));
        }
    }
}
