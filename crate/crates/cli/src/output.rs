//! Output directory layout: manifest, fields, profiles, logs and metrics.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use viscowri::field::io::{write_csv, write_vwf, FieldElement};
use viscowri::field::Field;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::metrics::MetricsReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
}

/// Writer rooted at the output directory of one run.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn writer(&self, name: &str) -> CliResult<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn manifest(&self, command: &str, config: &ExperimentConfig) -> CliResult<()> {
        let m = Manifest { version: VERSION, command, seed: config.seed, config };
        self.json("manifest.json", &m)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn metrics(&self, report: &MetricsReport) -> CliResult<()> {
        self.json("metrics.json", report)
    }

    pub fn field<T: FieldElement>(&self, name: &str, field: &Field<T>) -> CliResult<()> {
        write_vwf(field, self.writer(&format!("{name}.vwf"))?)?;
        Ok(())
    }

    pub fn field_csv<T: FieldElement>(&self, name: &str, field: &Field<T>) -> CliResult<()> {
        write_csv(field, self.writer(&format!("{name}.csv"))?)?;
        Ok(())
    }

    /// CSV table with a header row.
    pub fn table(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
        let mut w = self.writer(name)?;
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes through a caller-supplied CSV writer such as an iteration log.
    pub fn with_writer(
        &self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> viscowri::Result<()>,
    ) -> CliResult<()> {
        let mut w = self.writer(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
