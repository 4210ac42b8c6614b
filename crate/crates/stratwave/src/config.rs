//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stratwave_core::density::{DensityProfile, FlowParameters};

use crate::error::CliError;

fn default_amplitude() -> f64 {
    0.05
}

fn default_layers() -> Vec<usize> {
    vec![2, 4, 8, 16, 32]
}

fn default_intervals() -> Vec<usize> {
    vec![64, 128, 256]
}

fn default_homotopy() -> usize {
    4
}

fn unit_density() -> DensityProfile {
    DensityProfile::constant(-1.0, 1.0).expect("unit density is valid")
}

/// Where the density comes from: written inline or kept in its own file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DensitySource {
    File { file: PathBuf },
    Inline(DensityProfile),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    pub nx: usize,
    pub nz: usize,
}

impl GridSize {
    /// Parses `NXxNZ`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("grid must look like 256x128, got {text:?}"));
        let (nx, nz) = text.split_once(['x', 'X', '×']).ok_or_else(bad)?;
        Ok(Self { nx: nx.trim().parse().map_err(|_| bad())?, nz: nz.trim().parse().map_err(|_| bad())? })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "WaveSection::default_grid")]
    pub grid: GridSize,
}

impl WaveSection {
    fn default_grid() -> GridSize {
        GridSize { nx: 256, nz: 128 }
    }
}

impl Default for WaveSection {
    fn default() -> Self {
        Self { amplitude: default_amplitude(), grid: Self::default_grid() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_layers")]
    pub layers: Vec<usize>,
    #[serde(default = "StudySection::default_grid")]
    pub grid: GridSize,
    #[serde(default = "default_homotopy")]
    pub homotopy_steps: usize,
}

impl StudySection {
    fn default_grid() -> GridSize {
        GridSize { nx: 64, nz: 64 }
    }
}

impl Default for StudySection {
    fn default() -> Self {
        Self { layers: default_layers(), grid: Self::default_grid(), homotopy_steps: default_homotopy() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Interval counts of the eigenvalue discretization, coarse to fine.
    #[serde(default = "default_intervals")]
    pub intervals: Vec<usize>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { intervals: default_intervals() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    flow: FlowParameters,
    density: Option<DensitySource>,
    #[serde(default)]
    wave: WaveSection,
    #[serde(default)]
    study: StudySection,
    #[serde(default)]
    spectrum: SpectrumSection,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

/// Validated configuration with every file reference resolved.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub flow: FlowParameters,
    pub density: DensityProfile,
    pub wave: WaveSection,
    pub study: StudySection,
    pub spectrum: SpectrumSection,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            flow: FlowParameters::new(1.0, 1.0, 8.0, 0.0).expect("default parameters are valid"),
            density: unit_density(),
            wave: WaveSection::default(),
            study: StudySection::default(),
            spectrum: SpectrumSection::default(),
            out: None,
            seed: 0,
        }
    }
}

fn strictly_increasing(values: &[usize]) -> bool {
    !values.is_empty() && values[0] > 0 && values.windows(2).all(|w| w[1] > w[0])
}

/// Reads a density document (`p0`, `breakpoints`, `pieces`).
pub fn load_density(path: &Path) -> Result<DensityProfile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        raw.flow.validate()?;
        let density = match raw.density {
            None => unit_density(),
            Some(DensitySource::Inline(profile)) => profile,
            Some(DensitySource::File { file }) => {
                let path = if file.is_absolute() { file } else { base.join(file) };
                if !path.is_file() {
                    return Err(CliError::Config(format!("density file {} does not exist", path.display())));
                }
                load_density(&path)?
            }
        };
        density.check_normalized()?;
        if !strictly_increasing(&raw.study.layers) {
            return Err(CliError::Config("study.layers must be positive and strictly increasing".into()));
        }
        if raw.spectrum.intervals.len() != 3 || !strictly_increasing(&raw.spectrum.intervals) {
            return Err(CliError::Config("spectrum.intervals must list three strictly increasing counts".into()));
        }
        if !(raw.wave.amplitude > 0.0) {
            return Err(CliError::Config("wave.amplitude must be positive".into()));
        }
        Ok(Self {
            flow: raw.flow,
            density,
            wave: raw.wave,
            study: raw.study,
            spectrum: raw.spectrum,
            out: raw.out.map(|out| if out.is_absolute() { out } else { base.join(out) }),
            seed: raw.seed.unwrap_or(0),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }
}
