//! Run configuration: a JSON document whose keys the command-line flags
//! mirror one to one.

use std::path::PathBuf;

use maxbound::geometry::{polytope_g_coeffs, rectangle_faces, FaceDecomposition, Halfspace};
use maxbound::model::{IsotropicModel, ModelSpec};
use serde::{Deserialize, Serialize};

/// Largest number of abscissae in one sweep.
pub const MAX_ABSCISSAE: usize = 1_000_000;
/// Monte Carlo directions for polytope coefficients when `reps` is absent.
pub const DEFAULT_DIRECTIONS: usize = 100_000;
/// Field replicates for `validate` when `reps` is absent.
pub const DEFAULT_REPLICATES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Bound,
    Tail,
    Validate,
    Goe,
    Geom,
    Exponent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Box `[0, a_1] × … × [0, a_d]`.
    Rectangle { sides: Vec<f64> },
    /// Bounded intersection of halfspaces `normal · x ≤ offset`.
    Polytope { halfspaces: Vec<Halfspace> },
    /// Unit sphere `S^{d−1} ⊂ R^d`.
    Sphere { d: usize },
    /// A single point in `R^d`.
    Point { d: usize },
}

/// Evaluation points: an inclusive range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Abscissa {
    Range { min: f64, max: f64, step: f64 },
    List(Vec<f64>),
}

impl Abscissa {
    pub fn points(&self) -> Result<Vec<f64>, String> {
        match self {
            Abscissa::List(v) => {
                if v.is_empty() {
                    return Err("abscissa list is empty".into());
                }
                if v.len() > MAX_ABSCISSAE {
                    return Err(format!("abscissa has more than {MAX_ABSCISSAE} points"));
                }
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(format!("abscissa contains non-finite value {x}"));
                }
                Ok(v.clone())
            }
            &Abscissa::Range { min, max, step } => {
                if !(min.is_finite() && max.is_finite() && step > 0.0 && step.is_finite() && max >= min) {
                    return Err(format!("abscissa range needs min <= max and step > 0, got {min}, {max}, {step}"));
                }
                let count = ((max - min) / step * (1.0 + 1e-12)).floor() + 1.0;
                if count > MAX_ABSCISSAE as f64 {
                    return Err(format!("abscissa has more than {MAX_ABSCISSAE} points"));
                }
                Ok((0..count as usize).map(|i| min + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySpec>,
    /// `x` for `bound`, `u` for `tail` and `validate`, `ν` for `goe`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abscissa: Option<Abscissa>,
    /// Matrix size for `goe`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Diameter for the `exponent` supremum over distances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Grid points per axis for `validate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Vec<usize>>,
    /// Field replicates (`validate`) or sphere directions (polytopes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            model: None,
            geometry: None,
            abscissa: None,
            n: None,
            delta: None,
            resolution: None,
            reps: None,
            seed: 0,
            out: None,
            format: Format::Csv,
        }
    }

    /// Fills command-dependent defaults and checks that every key the
    /// command needs is present and well formed.
    pub fn resolve(mut self) -> Result<Self, String> {
        use Command::*;
        let needs_model = matches!(self.command, Bound | Tail | Validate | Exponent);
        let needs_geometry = matches!(self.command, Bound | Tail | Validate | Geom);
        let needs_abscissa = matches!(self.command, Bound | Tail | Validate | Goe);
        if needs_model && self.model.is_none() {
            return Err(format!("{:?} needs a model", self.command).to_lowercase());
        }
        if needs_geometry && self.geometry.is_none() {
            return Err(format!("{:?} needs a geometry", self.command).to_lowercase());
        }
        if needs_abscissa {
            match &self.abscissa {
                None => return Err(format!("{:?} needs an abscissa", self.command).to_lowercase()),
                Some(a) => {
                    a.points()?;
                }
            }
        }
        if self.command == Goe && self.n.is_none() {
            return Err("goe needs n".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(format!("delta must be positive and finite, got {d}"));
            }
        }
        if self.command == Validate {
            match &self.geometry {
                Some(GeometrySpec::Rectangle { sides }) => {
                    let res = self.resolution.as_ref().ok_or("validate needs a resolution")?;
                    if res.len() != sides.len() {
                        return Err(format!(
                            "resolution has {} entries for a {}-dimensional rectangle",
                            res.len(),
                            sides.len()
                        ));
                    }
                }
                _ => return Err("validate needs a rectangle geometry".into()),
            }
            self.reps.get_or_insert(DEFAULT_REPLICATES);
        }
        if self.command == Tail && matches!(self.geometry, Some(GeometrySpec::Sphere { .. })) {
            return Err("tail supports polyhedral geometries only".into());
        }
        if needs_geometry && matches!(self.geometry, Some(GeometrySpec::Polytope { .. })) {
            self.reps.get_or_insert(DEFAULT_DIRECTIONS);
        }
        Ok(self)
    }

    pub fn build_model(&self) -> Result<IsotropicModel, String> {
        let spec = self.model.as_ref().ok_or("missing model")?;
        IsotropicModel::from_spec(spec).map_err(|e| e.to_string())
    }

    /// Face decomposition of the geometry; polytopes use `reps` directions
    /// and `seed`.
    pub fn build_geometry(&self) -> Result<FaceDecomposition, String> {
        let spec = self.geometry.as_ref().ok_or("missing geometry")?;
        let built = match spec {
            GeometrySpec::Rectangle { sides } => rectangle_faces(sides),
            GeometrySpec::Polytope { halfspaces } => {
                polytope_g_coeffs(halfspaces, self.reps.unwrap_or(DEFAULT_DIRECTIONS), self.seed)
            }
            GeometrySpec::Sphere { d } => FaceDecomposition::sphere_surface(*d),
            GeometrySpec::Point { d } => Ok(FaceDecomposition::point(*d)),
        };
        built.map_err(|e| e.to_string())
    }
}
