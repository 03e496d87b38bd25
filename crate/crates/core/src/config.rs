//! Run configuration: a JSON document layered over a named preset, with
//! command-line overrides applied last.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitParams, ThreeJunctionParams};
use crate::error::{Error, Result};
use crate::grid::FluxGrid;
use crate::spectrum::{HoBasisConfig, DEFAULT_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Suny2000,
    Delft2000,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suny2000" => Ok(Preset::Suny2000),
            "delft2000" => Ok(Preset::Delft2000),
            other => Err(Error::Config(format!("unknown preset '{other}' (suny2000 | delft2000)"))),
        }
    }
}

/// rf-SQUID parameters as they appear in a config file. Missing keys fall
/// back to the preset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub e_c_ghz: Option<f64>,
    pub e_l_ghz: Option<f64>,
    pub e_j_ghz: Option<f64>,
    pub phi_x: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeJunctionSection {
    pub e_j_over_e_c: f64,
    pub alpha: f64,
}

impl Default for ThreeJunctionSection {
    fn default() -> Self {
        let d = ThreeJunctionParams::delft2000();
        Self {
            e_j_over_e_c: d.e_j_over_e_c,
            alpha: d.alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub phi_x_min: f64,
    pub phi_x_max: f64,
    pub points: usize,
    pub n_levels: usize,
    /// Add energies of the dephased target states at Γ = √(ħ/(Cω)).
    pub dephased_columns: bool,
    /// Bias points at which wavefunctions are dumped.
    pub wavefunction_phi_x: [f64; 2],
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            phi_x_min: 0.497,
            phi_x_max: 0.503,
            points: 121,
            n_levels: 50,
            dephased_columns: true,
            wavefunction_phi_x: [0.499, 0.5],
        }
    }
}

/// Γ ladder in units of √var_ref.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephaseSection {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub points: usize,
}

impl Default for DephaseSection {
    fn default() -> Self {
        Self {
            gamma_min: 0.5,
            gamma_max: 64.0,
            points: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateChoice {
    /// Lower state of the target doublet.
    Lower,
    /// Upper state of the target doublet.
    Upper,
    /// Even combination of the ground doublet.
    Cat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolChoice {
    Unitary,
    Averaged,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementChoice {
    Charge,
    Flux,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessSection {
    pub state: StateChoice,
    pub protocol: ProtocolChoice,
    /// Γ_w in units of √var_ref (averaged and weak protocols).
    pub gamma_w: f64,
    /// Fixed evolution time for the unitary protocol; scanned when absent.
    pub t: Option<f64>,
    pub measurement: MeasurementChoice,
    pub n_bins: usize,
    pub k_max: f64,
    /// Eigenstates used as projectors by the energy measurement.
    pub energy_levels: usize,
}

impl Default for WitnessSection {
    fn default() -> Self {
        Self {
            state: StateChoice::Upper,
            protocol: ProtocolChoice::Averaged,
            gamma_w: 4.0,
            t: None,
            measurement: MeasurementChoice::Charge,
            n_bins: 128,
            k_max: 300.0,
            energy_levels: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub n_levels: usize,
    pub phi_x: [f64; 3],
    pub tolerance: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            n_levels: 10,
            phi_x: [0.0, 0.499, 0.5],
            tolerance: 1e-6,
        }
    }
}

/// The file format. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub circuit: CircuitSection,
    pub three_junction: Option<ThreeJunctionSection>,
    pub basis_dim: Option<usize>,
    pub grid: Option<FluxGrid>,
    pub spectrum: SpectrumSection,
    pub dephase: DephaseSection,
    pub witness: WitnessSection,
    pub oracle: OracleSection,
    pub output_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings, embedded verbatim in every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: Preset,
    /// Absent for presets without an rf-SQUID (delft2000) unless given.
    pub circuit: Option<CircuitParams>,
    pub three_junction: ThreeJunctionSection,
    pub basis: HoBasisConfig,
    pub grid: FluxGrid,
    pub spectrum: SpectrumSection,
    pub dephase: DephaseSection,
    pub witness: WitnessSection,
    pub oracle: OracleSection,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Layers `file` over the preset (the file's own preset unless
    /// `preset` overrides it).
    pub fn resolve(file: &ConfigFile, preset: Option<Preset>) -> Result<Self> {
        let preset = preset.or(file.preset).unwrap_or(Preset::Suny2000);
        let base = match preset {
            Preset::Suny2000 => Some(CircuitParams::suny2000()),
            Preset::Delft2000 => None,
        };
        let c = &file.circuit;
        let circuit = match (base, c.e_c_ghz, c.e_l_ghz, c.e_j_ghz) {
            (Some(b), ..) => Some(CircuitParams {
                e_c: c.e_c_ghz.unwrap_or(b.e_c),
                e_l: c.e_l_ghz.unwrap_or(b.e_l),
                e_j: c.e_j_ghz.unwrap_or(b.e_j),
                phi_x: c.phi_x.unwrap_or(b.phi_x),
            }),
            (None, Some(e_c), Some(e_l), Some(e_j)) => Some(CircuitParams {
                e_c,
                e_l,
                e_j,
                phi_x: c.phi_x.unwrap_or(0.5),
            }),
            _ => None,
        };
        let cfg = Self {
            preset,
            circuit,
            three_junction: file.three_junction.unwrap_or_default(),
            basis: HoBasisConfig::new(file.basis_dim.unwrap_or(DEFAULT_DIM)),
            grid: file.grid.unwrap_or_else(FluxGrid::standard),
            spectrum: file.spectrum,
            dephase: file.dephase,
            witness: file.witness,
            oracle: file.oracle,
            output_dir: file.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
        };
        Ok(cfg)
    }

    /// Circuit parameters, required by every numerical command.
    pub fn circuit(&self) -> Result<CircuitParams> {
        let p = self.circuit.ok_or_else(|| {
            Error::Config(format!(
                "preset {:?} has no rf-SQUID parameters; set circuit.e_c_ghz, e_l_ghz and e_j_ghz",
                self.preset
            ))
        })?;
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn three_junction(&self) -> ThreeJunctionParams {
        ThreeJunctionParams {
            e_j_over_e_c: self.three_junction.e_j_over_e_c,
            alpha: self.three_junction.alpha,
        }
    }

    /// Checks the numeric options against the preconditions of the modules
    /// that will consume them.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.basis.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        let s = &self.spectrum;
        if s.points == 0 {
            return bad("spectrum.points must be ≥ 1 (empty phi_x range)".into());
        }
        if !(s.phi_x_min <= s.phi_x_max) {
            return bad(format!("spectrum range [{}, {}] is empty", s.phi_x_min, s.phi_x_max));
        }
        if s.n_levels == 0 || s.n_levels > self.basis.dim {
            return bad(format!("spectrum.n_levels = {} outside 1..={}", s.n_levels, self.basis.dim));
        }
        let d = &self.dephase;
        if !(d.gamma_min > 0.0 && d.gamma_min <= d.gamma_max) || d.points == 0 {
            return bad(format!("dephase ladder [{}, {}] x {}", d.gamma_min, d.gamma_max, d.points));
        }
        let w = &self.witness;
        if !(w.gamma_w > 0.0) || w.n_bins == 0 || !(w.k_max > 0.0) || w.energy_levels == 0 {
            return bad("witness options out of range".into());
        }
        if self.oracle.n_levels == 0 || !(self.oracle.tolerance > 0.0) {
            return bad("oracle options out of range".into());
        }
        Ok(())
    }
}
