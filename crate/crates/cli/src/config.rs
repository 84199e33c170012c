//! TOML run configuration and its validation.

use std::path::{Path, PathBuf};

use gaugesim::engine::observables::WilsonSpec;
use gaugesim::engine::{GmVariant, Order};
use gaugesim::hamiltonian::{Couplings, ElectricSpectrum, Model};
use gaugesim::{GroupSpec, LatticeShape, StateVector};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFamily {
    Cyclic,
    Dihedral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub kind: GroupFamily,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub extents: Vec<usize>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsConfig {
    #[serde(default = "one")]
    pub lambda_b: f64,
    #[serde(default = "one")]
    pub lambda_e: f64,
    #[serde(default = "one")]
    pub lambda_gm: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

impl Default for CouplingsConfig {
    fn default() -> Self {
        CouplingsConfig {
            lambda_b: 1.0,
            lambda_e: 1.0,
            lambda_gm: 1.0,
            mass: 1.0,
        }
    }
}

/// Dihedral electric coefficients replacing the canonical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricConfig {
    pub f_r: f64,
    pub f_l: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    /// Dirac sea with every link in the identity.
    #[default]
    Vacuum,
    /// One basis state: occupied (vertex, component) modes and optional
    /// link values (group element indices, identity when omitted).
    Basis {
        #[serde(default)]
        occupied: Vec<[usize; 2]>,
        #[serde(default)]
        links: Option<Vec<usize>>,
    },
}

fn default_t() -> f64 {
    1.0
}

fn default_steps() -> usize {
    10
}

fn default_order() -> Order {
    Order::Second
}

fn default_variant() -> GmVariant {
    GmVariant::Direct
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_order")]
    pub order: Order,
    #[serde(default = "default_variant")]
    pub variant: GmVariant,
    /// Ancilla registers; defaults to one when the schedule needs any.
    #[serde(default)]
    pub ancillas: Option<usize>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            t: default_t(),
            steps: default_steps(),
            order: default_order(),
            variant: default_variant(),
            ancillas: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableName {
    Plaquette,
    MagneticEnergy,
    Density,
    GaugeViolation,
    AncillaFidelity,
    Wilson,
}

impl ObservableName {
    pub fn defaults() -> Vec<ObservableName> {
        vec![
            ObservableName::Plaquette,
            ObservableName::MagneticEnergy,
            ObservableName::Density,
            ObservableName::GaugeViolation,
            ObservableName::AncillaFidelity,
        ]
    }
}

fn default_orders() -> Vec<Order> {
    vec![Order::First, Order::Second]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub steps: Vec<usize>,
    #[serde(default = "default_orders")]
    pub orders: Vec<Order>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// side length for the closed-form cubic-lattice bounds.
    #[serde(default)]
    pub side_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: GroupConfig,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub couplings: CouplingsConfig,
    #[serde(default)]
    pub electric: Option<ElectricConfig>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub observables: Option<Vec<ObservableName>>,
    #[serde(default)]
    pub wilson: Option<WilsonSpec>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::usage("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that need no allocation of state-sized buffers.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::usage("config", msg));
        if self.group.n < 2 {
            return bad(format!("group order parameter n = {} must be >= 2", self.group.n));
        }
        if self.lattice.extents.is_empty() || self.lattice.extents.len() > 3 {
            return bad("lattice.extents must have 1 to 3 entries".into());
        }
        let ev = &self.evolution;
        if !ev.t.is_finite() || ev.t < 0.0 {
            return bad("evolution.t must be finite and non-negative".into());
        }
        if ev.steps == 0 {
            return bad("evolution.steps must be >= 1".into());
        }
        if let Some(c) = &self.compare {
            if c.steps.is_empty() {
                return bad("compare.steps is empty".into());
            }
            if c.steps.contains(&0) {
                return bad("compare.steps entries must be >= 1".into());
            }
            if c.orders.is_empty() {
                return bad("compare.orders is empty".into());
            }
        }
        if self.observables.as_ref().is_some_and(|o| o.contains(&ObservableName::Wilson)) && self.wilson.is_none() {
            return bad("observable \"wilson\" needs a [wilson] table".into());
        }
        Ok(())
    }

    pub fn group_spec(&self) -> Result<GroupSpec, CliError> {
        let g = match self.group.kind {
            GroupFamily::Cyclic => GroupSpec::cyclic(self.group.n),
            GroupFamily::Dihedral => GroupSpec::dihedral(self.group.n),
        };
        Ok(g?)
    }

    pub fn couplings(&self) -> Couplings {
        let c = self.couplings;
        Couplings {
            lambda_b: c.lambda_b,
            lambda_e: c.lambda_e,
            lambda_gm: c.lambda_gm,
            mass: c.mass,
        }
    }

    pub fn spectrum(&self, group: &GroupSpec) -> ElectricSpectrum {
        match &self.electric {
            Some(e) => ElectricSpectrum::Dihedral {
                f_r: e.f_r,
                f_l: e.f_l.clone(),
            },
            None => ElectricSpectrum::canonical(group),
        }
    }

    pub fn shape(&self) -> Result<LatticeShape, CliError> {
        Ok(LatticeShape::new(&self.lattice.extents)?)
    }

    /// Model on the configured lattice, without ancillas.
    pub fn bare_model(&self) -> Result<Model, CliError> {
        let g = self.group_spec()?;
        let spec = self.spectrum(&g);
        Ok(Model::with_spectrum(g, self.shape()?, self.couplings(), spec, 0)?)
    }

    /// Ancilla count: explicit, or one when plaquettes or the mediated
    /// variant need a control register.
    pub fn ancillas(&self, bare: &Model) -> usize {
        self.evolution.ancillas.unwrap_or_else(|| {
            let needs = !bare.shape().enumerate_plaquettes().is_empty() || self.evolution.variant == GmVariant::Mediated;
            usize::from(needs)
        })
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let bare = self.bare_model()?;
        let n = self.ancillas(&bare);
        Ok(bare.with_ancillas(n)?)
    }

    pub fn observables(&self) -> Vec<ObservableName> {
        let mut list = self.observables.clone().unwrap_or_else(|| {
            let mut d = ObservableName::defaults();
            if self.wilson.is_some() {
                d.push(ObservableName::Wilson);
            }
            d
        });
        list.sort();
        list.dedup();
        list
    }

    pub fn initial_state(&self, model: &Model) -> Result<StateVector, CliError> {
        match &self.initial {
            InitialState::Vacuum => Ok(model.build_vacuum()),
            InitialState::Basis { occupied, links } => {
                let layout = model.layout();
                let mut bits = 0usize;
                for &[v, c] in occupied {
                    let mode = layout.mode(v, c)?;
                    bits |= 1 << mode;
                }
                let mut regs = vec![model.group().identity(); layout.n_links() + layout.n_ancillas()];
                if let Some(ls) = links {
                    if ls.len() != layout.n_links() {
                        return Err(CliError::usage(
                            "config",
                            format!("initial.links has {} entries, lattice has {} links", ls.len(), layout.n_links()),
                        ));
                    }
                    for (r, &g) in regs.iter_mut().zip(ls) {
                        if g >= model.group().order() {
                            return Err(CliError::usage("config", format!("link value {g} is not a group element")));
                        }
                        *r = g;
                    }
                }
                Ok(StateVector::basis(layout, layout.index(bits, &regs))?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = "[group]\nkind = \"cyclic\"\nn = 2\n[lattice]\nextents = [2, 2]\n";

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MIN).unwrap();
        assert_eq!(c.evolution.steps, 10);
        assert_eq!(c.evolution.order, Order::Second);
        assert_eq!(c.couplings.mass, 1.0);
        let m = c.model().unwrap();
        assert_eq!(m.layout().n_ancillas(), 1);
        assert!(!c.observables().contains(&ObservableName::Wilson));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::parse("[group]\nkind = \"cyclic\"\n").is_err());
        assert!(RunConfig::parse(&format!("{MIN}[evolution]\nsteps = 0\n")).is_err());
        assert!(RunConfig::parse(&format!("{MIN}[compare]\nsteps = []\n")).is_err());
        assert!(RunConfig::parse(&format!("{MIN}bogus = 1\n")).is_err());
        assert!(RunConfig::parse(&format!("{MIN}observables = [\"wilson\"]\n")).is_err());
        let even = "[group]\nkind = \"dihedral\"\nn = 4\n[lattice]\nextents = [2]\n";
        assert!(RunConfig::parse(even).unwrap().model().is_err());
    }

    #[test]
    fn basis_initial_state() {
        let text = format!("{MIN}[initial]\nkind = \"basis\"\noccupied = [[1, 0]]\nlinks = [1, 0, 0, 1]\n");
        let c = RunConfig::parse(&text).unwrap();
        let m = c.model().unwrap();
        let s = c.initial_state(&m).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-14);
        let bad = format!("{MIN}[initial]\nkind = \"basis\"\nlinks = [1]\n");
        let c = RunConfig::parse(&bad).unwrap();
        assert!(c.initial_state(&c.model().unwrap()).is_err());
    }
}
