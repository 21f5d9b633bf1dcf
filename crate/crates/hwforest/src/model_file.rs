//! Versioned JSON model container.
//!
//! ```text
//! { "format": "hwforest-model", "version": 1, "schema": ..., "model": ... }
//! ```
//!
//! `schema` is the CSV layout the model was trained with (absent for IDX
//! input). Files are written atomically.

use std::path::Path;

use hwforest_core::CascadeModel;
use serde::{Deserialize, Serialize};

use crate::atomic::write_atomic;
use crate::csv_io::CsvSchema;
use crate::error::{Error, Result};

pub const FORMAT: &str = "hwforest-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub schema: Option<CsvSchema>,
    pub model: CascadeModel,
}

impl ModelFile {
    pub fn new(model: CascadeModel, schema: Option<CsvSchema>) -> Self {
        Self { format: FORMAT.to_string(), version: VERSION, schema, model }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let fail = |message: String| Error::Model { path: path.to_path_buf(), message };
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = serde_json::from_slice(bytes).map_err(|e| fail(format!("not a model file: {e}")))?;
        if header.format != FORMAT {
            return Err(fail(format!("unexpected format {:?}", header.format)));
        }
        if header.version != VERSION {
            return Err(fail(format!("unsupported version {} (this build reads {VERSION})", header.version)));
        }
        serde_json::from_slice(bytes).map_err(|e| fail(format!("corrupt model: {e}")))
    }
}
