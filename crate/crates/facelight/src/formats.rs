//! JSON and CSV artifacts: patterns, manifests, models, metrics, catalogs.

use std::fs;
use std::path::Path;

use facelight_core::illum::ClassifierModel;
use facelight_core::relight::LightPattern;
use facelight_core::shade::{Catalog, ProductShade};
use facelight_core::Rgb8;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_bytes;

pub const MODEL_VERSION: u32 = 1;

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_json_string(value).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_patterns(path: &Path) -> Result<Vec<LightPattern>> {
    read_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    #[serde(flatten)]
    pub model: ClassifierModel,
}

pub fn write_model(path: &Path, model: &ClassifierModel) -> Result<()> {
    write_json(
        path,
        &ModelFile {
            version: MODEL_VERSION,
            model: model.clone(),
        },
    )
}

pub fn read_model(path: &Path) -> Result<ClassifierModel> {
    let file: ModelFile = read_json(path)?;
    if file.version != MODEL_VERSION {
        return Err(Error::format(path, format!("unsupported model version {}", file.version)));
    }
    if !file.model.is_finite() {
        return Err(Error::format(path, "model has non-finite parameters"));
    }
    Ok(file.model)
}

/// One catalog CSV row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogRow {
    pub product_id: String,
    pub shade_id: String,
    pub name: String,
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl CatalogRow {
    pub fn from_shade(s: &ProductShade) -> Self {
        CatalogRow {
            product_id: s.product_id.clone(),
            shade_id: s.shade_id.clone(),
            name: s.name.clone(),
            r: s.color.r,
            g: s.color.g,
            b: s.color.b,
        }
    }

    pub fn into_shade(self) -> ProductShade {
        ProductShade::new(self.product_id, self.shade_id, self.name, Rgb8::new(self.r, self.g, self.b))
    }
}

pub fn parse_catalog_csv(text: &str, path: &Path) -> Result<Catalog> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut shades = Vec::new();
    for row in reader.deserialize::<CatalogRow>() {
        let row = row.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        shades.push(row.into_shade());
    }
    Ok(Catalog::new(shades)?)
}

pub fn read_catalog(path: &Path) -> Result<Catalog> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_catalog_csv(&text, path)
}

pub fn catalog_csv(catalog: &Catalog) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for s in catalog.shades() {
        writer.serialize(CatalogRow::from_shade(s)).expect("in-memory CSV write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

pub fn write_catalog(path: &Path, catalog: &Catalog) -> Result<()> {
    write_bytes(path, catalog_csv(catalog).as_bytes())
}

/// `/v1/catalog` body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogJson {
    pub shades: Vec<ProductShade>,
}

impl CatalogJson {
    pub fn new(catalog: &Catalog) -> Self {
        CatalogJson {
            shades: catalog.shades().to_vec(),
        }
    }
}
