use alloc::format;
use alloc::vec::Vec;

use crate::dag::{DagSpec, Path};
use crate::error::{Error, Result};

/// One observation: the path taken and its response `b(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub path: Path,
    pub response: f64,
}

/// Observed or simulated records over a fixed DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDataset {
    spec: DagSpec,
    records: Vec<Record>,
}

impl PathDataset {
    pub fn new(spec: DagSpec) -> Result<Self> {
        Ok(PathDataset { spec: spec.checked()?, records: Vec::new() })
    }

    pub fn from_records(spec: DagSpec, records: Vec<Record>) -> Result<Self> {
        let mut data = PathDataset::new(spec)?;
        data.records.reserve(records.len());
        for r in records {
            data.push(r.path, r.response)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, path: Path, response: f64) -> Result<()> {
        path.validate(&self.spec.levels)?;
        if !response.is_finite() {
            return Err(Error::InvalidData(format!(
                "record {} on path {path} has non-finite response {response}",
                self.records.len() + 1
            )));
        }
        self.records.push(Record { path, response });
        Ok(())
    }

    pub fn spec(&self) -> &DagSpec {
        &self.spec
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Record> {
        self.records.iter()
    }
}

impl<'a> IntoIterator for &'a PathDataset {
    type Item = &'a Record;
    type IntoIter = core::slice::Iter<'a, Record>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}
