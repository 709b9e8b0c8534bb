use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Identity dimension a derogatory term or a hateful text can target.
///
/// The first twelve variants form the detection taxonomy that the prompts
/// enumerate. `PublicInstitutions` and `Other` only occur as vocabulary tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityCharacteristic {
    Gender,
    SexualOrientation,
    Race,
    Ethnicity,
    Religion,
    PoliticalAffiliation,
    SocioeconomicStatus,
    Occupation,
    Age,
    Disability,
    Addiction,
    PhysicalAppearance,
    PublicInstitutions,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown identity characteristic: {0:?}")]
pub struct UnknownCharacteristic(pub String);

impl IdentityCharacteristic {
    pub const ALL: [IdentityCharacteristic; 14] = [
        Self::Gender,
        Self::SexualOrientation,
        Self::Race,
        Self::Ethnicity,
        Self::Religion,
        Self::PoliticalAffiliation,
        Self::SocioeconomicStatus,
        Self::Occupation,
        Self::Age,
        Self::Disability,
        Self::Addiction,
        Self::PhysicalAppearance,
        Self::PublicInstitutions,
        Self::Other,
    ];

    /// The twelve characteristics used by the detection prompts.
    pub const TAXONOMY: [IdentityCharacteristic; 12] = [
        Self::Gender,
        Self::SexualOrientation,
        Self::Race,
        Self::Ethnicity,
        Self::Religion,
        Self::PoliticalAffiliation,
        Self::SocioeconomicStatus,
        Self::Occupation,
        Self::Age,
        Self::Disability,
        Self::Addiction,
        Self::PhysicalAppearance,
    ];

    pub fn canonical_name(self) -> &'static str {
        match self {
            Self::Gender => "Gender",
            Self::SexualOrientation => "SexualOrientation",
            Self::Race => "Race",
            Self::Ethnicity => "Ethnicity",
            Self::Religion => "Religion",
            Self::PoliticalAffiliation => "PoliticalAffiliation",
            Self::SocioeconomicStatus => "SocioeconomicStatus",
            Self::Occupation => "Occupation",
            Self::Age => "Age",
            Self::Disability => "Disability",
            Self::Addiction => "Addiction",
            Self::PhysicalAppearance => "PhysicalAppearance",
            Self::PublicInstitutions => "PublicInstitutions",
            Self::Other => "Other",
        }
    }

    /// Spaced spelling used in vocabulary files and prompts.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::SexualOrientation => "Sexual Orientation",
            Self::PoliticalAffiliation => "Political Affiliation",
            Self::SocioeconomicStatus => "Socioeconomic Status",
            Self::PhysicalAppearance => "Physical Appearance",
            Self::PublicInstitutions => "Public Institutions",
            other => other.canonical_name(),
        }
    }

    pub fn is_taxonomy(self) -> bool {
        !matches!(self, Self::PublicInstitutions | Self::Other)
    }
}

/// Joins categories the way vocabulary files and prompts show them: `"Gender; Sexual Orientation"`.
pub fn join_display(categories: &[IdentityCharacteristic]) -> String {
    categories
        .iter()
        .map(|c| c.display_name())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parses a `;`-separated category list. Empty segments are ignored.
pub fn parse_list(field: &str) -> Result<Vec<IdentityCharacteristic>, UnknownCharacteristic> {
    let mut out = Vec::new();
    for part in field.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let c: IdentityCharacteristic = part.parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

impl fmt::Display for IdentityCharacteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for IdentityCharacteristic {
    type Err = UnknownCharacteristic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        if folded == "socioeconomic" {
            return Ok(Self::SocioeconomicStatus);
        }
        Self::ALL
            .into_iter()
            .find(|c| c.canonical_name().to_ascii_lowercase() == folded)
            .ok_or_else(|| UnknownCharacteristic(s.to_string()))
    }
}

impl Serialize for IdentityCharacteristic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.display_name())
    }
}

impl<'de> Deserialize<'de> for IdentityCharacteristic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
