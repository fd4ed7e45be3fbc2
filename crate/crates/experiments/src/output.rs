//! CSV artifacts. Floats use 17 significant digits so reruns are byte-identical.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use crate::error::{ExpError, Result};

pub const POLICIES_HEADER: [&str; 6] = ["tau", "sigma", "method", "state", "action", "prob"];
pub const TV_HEADER: [&str; 3] = ["tau", "method", "sup_tv_to_pistarref"];
pub const DISTRIBUTIONS_HEADER: [&str; 7] = ["tau", "sigma", "method", "state", "action", "atom", "prob"];
pub const SUMMARY_HEADER: [&str; 6] = ["tau", "sigma", "method", "state", "w1_to_oracle", "clipped_mass"];
pub const OCCUPANCY_HEADER: [&str; 6] = ["tau", "state", "action", "mass", "regularizer", "flow_residual"];
pub const ITERATES_HEADER: [&str; 6] = ["method", "iteration", "state", "action", "atom", "prob"];
pub const TRACE_HEADER: [&str; 3] = ["method", "iteration", "sup_w1_to_previous"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV file with a fixed header.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
    width: usize,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| ExpError::io(&path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self { path, writer, width: header.len() })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        assert_eq!(fields.len(), self.width, "row width differs from header of {}", self.path.display());
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| ExpError::io(&self.path, e))?;
        Ok(self.path)
    }
}
