//! JSON distribution files: `{"lambdas": [...], "tail_mass": x, "family": "..." | null}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Family, SchmidtDistribution};
use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub lambdas: Vec<f64>,
    pub tail_mass: f64,
    pub family: Option<String>,
}

impl From<&SchmidtDistribution> for DistributionFile {
    fn from(dist: &SchmidtDistribution) -> Self {
        DistributionFile {
            lambdas: dist.lambdas().to_vec(),
            tail_mass: dist.tail_mass(),
            family: match dist.family() {
                Family::Custom => None,
                f => Some(f.to_string()),
            },
        }
    }
}

impl TryFrom<DistributionFile> for SchmidtDistribution {
    type Error = crate::error::Error;

    fn try_from(file: DistributionFile) -> Result<Self> {
        let family = match file.family.as_deref() {
            None => Family::Custom,
            Some(s) => s.parse()?,
        };
        SchmidtDistribution::from_parts(file.lambdas, file.tail_mass, family)
    }
}

impl SchmidtDistribution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DistributionFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

pub fn read_distribution(path: impl AsRef<Path>) -> Result<SchmidtDistribution> {
    SchmidtDistribution::from_json(&fs::read_to_string(path)?)
}

pub fn write_distribution(path: impl AsRef<Path>, dist: &SchmidtDistribution) -> Result<()> {
    let mut text = dist.to_json()?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
