//! The six factorial conditions: pairing × status assignment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prompts::Status;

/// Condition identifiers, in canonical reporting order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    /// Same model in both slots; M1 introduced as High, M2 as Low.
    SameStandard,
    /// Same model; both introduced as Moderate equals.
    SameEqual,
    /// Different models; M1 High, M2 Low.
    DifferentStandard,
    /// Different models with the status assignment flipped: M1 Low, M2 High.
    DifferentReversed,
    /// Different models; both Moderate.
    DifferentEqual,
    /// Different models; no status information at all.
    DifferentNone,
}

/// Whether the two slots run the same backend or different ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    SameModel,
    DifferentModels,
}

/// A condition's full factorial cell: pairing plus per-slot status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub id: ConditionId,
    pub pairing: Pairing,
    pub m1_status: Status,
    pub m2_status: Status,
}

impl ConditionId {
    pub const ALL: [ConditionId; 6] = [
        ConditionId::SameStandard,
        ConditionId::SameEqual,
        ConditionId::DifferentStandard,
        ConditionId::DifferentReversed,
        ConditionId::DifferentEqual,
        ConditionId::DifferentNone,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::SameStandard => "same_standard",
            ConditionId::SameEqual => "same_equal",
            ConditionId::DifferentStandard => "different_standard",
            ConditionId::DifferentReversed => "different_reversed",
            ConditionId::DifferentEqual => "different_equal",
            ConditionId::DifferentNone => "different_none",
        }
    }

    pub fn condition(self) -> Condition {
        use ConditionId::*;
        use Pairing::*;
        let (pairing, m1_status, m2_status) = match self {
            SameStandard => (SameModel, Status::High, Status::Low),
            SameEqual => (SameModel, Status::Moderate, Status::Moderate),
            DifferentStandard => (DifferentModels, Status::High, Status::Low),
            DifferentReversed => (DifferentModels, Status::Low, Status::High),
            DifferentEqual => (DifferentModels, Status::Moderate, Status::Moderate),
            DifferentNone => (DifferentModels, Status::None, Status::None),
        };
        Condition {
            id: self,
            pairing,
            m1_status,
            m2_status,
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConditionId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ConditionId::ALL.iter().map(|c| c.as_str()).collect();
                format!("unknown condition {s:?}; expected one of: {}", names.join(", "))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_cells_match_the_design() {
        use ConditionId::*;
        let want = [
            (SameStandard, Pairing::SameModel, Status::High, Status::Low),
            (SameEqual, Pairing::SameModel, Status::Moderate, Status::Moderate),
            (DifferentStandard, Pairing::DifferentModels, Status::High, Status::Low),
            (DifferentReversed, Pairing::DifferentModels, Status::Low, Status::High),
            (DifferentEqual, Pairing::DifferentModels, Status::Moderate, Status::Moderate),
            (DifferentNone, Pairing::DifferentModels, Status::None, Status::None),
        ];
        for (id, pairing, m1, m2) in want {
            let c = id.condition();
            assert_eq!(c.id, id);
            assert_eq!(c.pairing, pairing);
            assert_eq!(c.m1_status, m1);
            assert_eq!(c.m2_status, m2);
        }
    }

    #[test]
    fn reversed_flips_the_standard_assignment() {
        let standard = ConditionId::DifferentStandard.condition();
        let reversed = ConditionId::DifferentReversed.condition();
        assert_eq!(standard.m1_status, reversed.m2_status);
        assert_eq!(standard.m2_status, reversed.m1_status);
    }

    #[test]
    fn names_round_trip() {
        for id in ConditionId::ALL {
            assert_eq!(id.as_str().parse::<ConditionId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.as_str()));
            let back: ConditionId = serde_json::from_str(&json).unwrap();
            assert_eq!(back, id);
        }
        assert!("same_Standard".parse::<ConditionId>().is_err());
    }

    #[test]
    fn canonical_order_is_stable() {
        let mut sorted = ConditionId::ALL;
        sorted.sort();
        assert_eq!(sorted, ConditionId::ALL);
        assert_eq!(ConditionId::ALL[0].as_str(), "same_standard");
        assert_eq!(ConditionId::ALL[5].as_str(), "different_none");
    }
}
