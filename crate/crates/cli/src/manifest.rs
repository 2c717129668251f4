//! Pipeline run manifest: a flat TOML key-value file with list syntax, no
//! scripting. Example:
//!
//! ```toml
//! images = ["fixtures/photo.ppm"]
//! surrogate_configs = ["2:6", "4:4:bicubic"]
//! qps = [22, 27, 32, 37]
//! engine = "inhouse"            # or "vtm"
//! output_dir = "out"
//! search_range = 8              # optional, in-house engine only
//! vtm_encoder = "/opt/vtm/EncoderApp"   # optional, else $SCALIC_VTM_ENCODER
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use scalic_core::base::SurrogateConfig;
use scalic_core::pixel::Filter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Inhouse,
    Vtm,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Inhouse => "inhouse",
            Engine::Vtm => "vtm",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    images: Vec<PathBuf>,
    /// `"s:b"` or `"s:b:filter"` per entry.
    surrogate_configs: Vec<String>,
    qps: Vec<u8>,
    engine: Engine,
    output_dir: PathBuf,
    #[serde(default)]
    search_range: Option<u16>,
    #[serde(default)]
    vtm_encoder: Option<PathBuf>,
    #[serde(default)]
    vtm_decoder: Option<PathBuf>,
}

/// Validated run manifest. Everything is deterministic; job order is the
/// cartesian product images x surrogate_configs x qps in manifest order.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub images: Vec<PathBuf>,
    pub surrogate_configs: Vec<SurrogateConfig>,
    pub qps: Vec<u8>,
    pub engine: Engine,
    pub output_dir: PathBuf,
    pub search_range: u16,
    pub vtm_encoder: Option<PathBuf>,
    pub vtm_decoder: Option<PathBuf>,
}

fn parse_surrogate(spec: &str) -> Result<SurrogateConfig> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 && parts.len() != 3 {
        bail!("surrogate config {spec:?} must be \"s:b\" or \"s:b:filter\"");
    }
    let scale: u8 = parts[0]
        .parse()
        .with_context(|| format!("bad scale factor in {spec:?}"))?;
    let bits: u8 = parts[1]
        .parse()
        .with_context(|| format!("bad quant bits in {spec:?}"))?;
    let filter = if parts.len() == 3 {
        parts[2]
            .parse::<Filter>()
            .map_err(|e| anyhow::anyhow!("{e}"))?
    } else {
        Filter::Bilinear
    };
    SurrogateConfig::new(scale, bits, filter).map_err(|e| anyhow::anyhow!("{spec:?}: {e}"))
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let raw: RawManifest =
        toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
    if raw.images.is_empty() {
        bail!("manifest lists no images");
    }
    if raw.surrogate_configs.is_empty() {
        bail!("manifest lists no surrogate configs");
    }
    if raw.qps.is_empty() {
        bail!("manifest lists no QPs");
    }
    for &qp in &raw.qps {
        if qp > 51 {
            bail!("qp {qp} outside [0, 51]");
        }
    }
    let surrogate_configs = raw
        .surrogate_configs
        .iter()
        .map(|s| parse_surrogate(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunManifest {
        images: raw.images,
        surrogate_configs,
        qps: raw.qps,
        engine: raw.engine,
        output_dir: raw.output_dir,
        search_range: raw.search_range.unwrap_or(32),
        vtm_encoder: raw.vtm_encoder,
        vtm_decoder: raw.vtm_decoder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            r#"
images = ["a.ppm", "b.ppm"]
surrogate_configs = ["2:6", "4:4:bicubic"]
qps = [22, 37]
engine = "inhouse"
output_dir = "out"
"#,
        )
        .unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.images.len(), 2);
        assert_eq!(m.surrogate_configs[0].tag(), "s2b6_bilinear");
        assert_eq!(m.surrogate_configs[1].tag(), "s4b4_bicubic");
        assert_eq!(m.search_range, 32);
        assert_eq!(m.engine, Engine::Inhouse);
    }

    #[test]
    fn empty_lists_and_bad_configs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "images = []\nsurrogate_configs = [\"2:6\"]\nqps = [22]\nengine = \"inhouse\"\noutput_dir = \"o\"\n",
        )
        .unwrap();
        assert!(load_manifest(&path).is_err());

        std::fs::write(
            &path,
            "images = [\"a.ppm\"]\nsurrogate_configs = [\"3:6\"]\nqps = [22]\nengine = \"inhouse\"\noutput_dir = \"o\"\n",
        )
        .unwrap();
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("scale factor"), "{err}");

        std::fs::write(
            &path,
            "images = [\"a.ppm\"]\nsurrogate_configs = [\"2:6\"]\nqps = [99]\nengine = \"inhouse\"\noutput_dir = \"o\"\n",
        )
        .unwrap();
        assert!(load_manifest(&path).is_err());
    }
}
