//! Unit tags accepted at configuration boundaries.

use std::fmt;
use std::str::FromStr;

/// Unit attached to a configured quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Watts.
    W,
    /// dB relative to 1 W.
    DbW,
    /// dB relative to 1 mW.
    DbM,
    /// Dimensionless ratio in dB.
    Db,
    /// Plain linear value.
    Linear,
}

impl Unit {
    /// Converts `value` expressed in this unit to its linear form.
    pub fn to_linear(self, value: f64) -> f64 {
        match self {
            Unit::W | Unit::Linear => value,
            Unit::DbW | Unit::Db => db_to_linear(value),
            Unit::DbM => db_to_linear(value) * 1e-3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::W => "w",
            Unit::DbW => "dbw",
            Unit::DbM => "dbm",
            Unit::Db => "db",
            Unit::Linear => "linear",
        }
    }

    /// Whether the unit describes a power (as opposed to a ratio).
    pub fn is_power(self) -> bool {
        matches!(self, Unit::W | Unit::DbW | Unit::DbM)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "w" => Ok(Unit::W),
            "dbw" => Ok(Unit::DbW),
            "dbm" => Ok(Unit::DbM),
            "db" => Ok(Unit::Db),
            "linear" | "lin" => Ok(Unit::Linear),
            other => Err(format!("unknown unit `{other}`")),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(Unit::DbW.to_linear(0.0), 1.0);
        assert!((Unit::DbM.to_linear(30.0) - 1.0).abs() < 1e-12);
        assert!((Unit::Db.to_linear(1.0) - 1.258_925_411_794_167_2).abs() < 1e-15);
        assert_eq!(Unit::W.to_linear(0.25), 0.25);
        assert!((linear_to_db(db_to_linear(-7.5)) + 7.5).abs() < 1e-12);
        assert_eq!("DBm".parse::<Unit>().unwrap(), Unit::DbM);
        assert!("furlong".parse::<Unit>().is_err());
    }
}
