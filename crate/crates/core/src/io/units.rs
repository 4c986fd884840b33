//! Volume fields given either as a number of cm³ or as a string with a
//! unit suffix (`"1.5 L"`, `"250 mL"`, `"40 cm3"`).

use serde::{de, Deserialize, Deserializer, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Number(f64),
    Text(String),
}

/// Parses `"<value> <unit>"` into cm³.
pub fn parse_volume(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let split = t
        .find(|c: char| c.is_alphabetic() || c == '³')
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot read a number from {text:?}"))?;
    let factor = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "cm3" | "cm³" | "cc" | "ml" => 1.0,
        "l" | "liter" | "liters" | "litre" | "litres" => 1000.0,
        "m3" | "m³" => 1.0e6,
        u => return Err(format!("unknown volume unit {u:?}")),
    };
    Ok(value * factor)
}

fn from_raw<E: de::Error>(raw: Raw) -> Result<f64, E> {
    match raw {
        Raw::Number(v) => Ok(v),
        Raw::Text(s) => parse_volume(&s).map_err(E::custom),
    }
}

pub mod volume {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(*v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_raw(Raw::deserialize(d)?)
    }
}

pub mod opt_volume {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(x),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(raw) => from_raw(raw).map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn litres_become_cubic_centimetres() {
        assert_eq!(parse_volume("1.0 L").unwrap(), 1000.0);
        assert_eq!(parse_volume("2l").unwrap(), 2000.0);
        assert_eq!(parse_volume("250 mL").unwrap(), 250.0);
        assert_eq!(parse_volume("40 cm³").unwrap(), 40.0);
        assert!(parse_volume("3 gallons").is_err());
    }
}
