use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spopt_core::geometry::Metric;
use spopt_core::optimizer::SolverOptions;
use spopt_core::retraction::RetractionKind;

/// Metric × retraction combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    CayleyC,
    CayleyE,
    QGeoC,
    QGeoE,
    SRC,
    SRE,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::CayleyC,
        Scheme::CayleyE,
        Scheme::QGeoC,
        Scheme::QGeoE,
        Scheme::SRC,
        Scheme::SRE,
    ];

    pub fn metric(self) -> Metric {
        match self {
            Scheme::CayleyC | Scheme::QGeoC | Scheme::SRC => Metric::default(),
            Scheme::CayleyE | Scheme::QGeoE | Scheme::SRE => Metric::Euclidean,
        }
    }

    pub fn retraction(self) -> RetractionKind {
        match self {
            Scheme::CayleyC | Scheme::CayleyE => RetractionKind::CayleyEconomical,
            Scheme::QGeoC | Scheme::QGeoE => RetractionKind::QuasiGeodesic,
            Scheme::SRC | Scheme::SRE => RetractionKind::SR,
        }
    }

    pub fn is_euclidean(self) -> bool {
        self.metric() == Metric::Euclidean
    }

    /// `base` with this scheme's metric and retraction.
    pub fn options(self, base: &SolverOptions) -> SolverOptions {
        SolverOptions {
            metric: self.metric(),
            retraction: self.retraction(),
            ..base.clone()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CayleyC => "CayleyC",
            Scheme::CayleyE => "CayleyE",
            Scheme::QGeoC => "QGeoC",
            Scheme::QGeoE => "QGeoE",
            Scheme::SRC => "SRC",
            Scheme::SRE => "SRE",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown scheme '{s}' (expected one of CayleyC, CayleyE, QGeoC, QGeoE, SRC, SRE)"))
    }
}

/// Parses a comma-separated scheme list.
pub fn parse_scheme_list(s: &str) -> Result<Vec<Scheme>, String> {
    let list: Vec<Scheme> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("scheme list is empty".into());
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            assert_eq!(s.to_string().to_lowercase().parse::<Scheme>().unwrap(), s);
        }
        assert!("SRX".parse::<Scheme>().is_err());
    }

    #[test]
    fn taxonomy() {
        assert_eq!(Scheme::SRE.retraction(), RetractionKind::SR);
        assert!(Scheme::SRE.is_euclidean());
        assert!(!Scheme::QGeoC.is_euclidean());
        assert_eq!(Scheme::CayleyC.retraction(), RetractionKind::CayleyEconomical);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_scheme_list("SRE, cayleyc").unwrap(), vec![Scheme::SRE, Scheme::CayleyC]);
        assert!(parse_scheme_list(" , ").is_err());
        assert!(parse_scheme_list("SRE,foo").is_err());
    }
}
