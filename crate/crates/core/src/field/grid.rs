//! Field-modulus sampling on planes and volumes, with CSV/JSON export.

use rayon::prelude::*;
use serde::Serialize;

use super::{MagneticField, Scene};
use crate::layout::{Axis, Layout, Multipliers, ValidationError, Vec3};
use crate::units::{m_to_um, tesla_to_gauss};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridShape {
    /// Plane perpendicular to `normal` at coordinate `at` (m).
    Plane { normal: Axis, at: f64 },
    Volume,
}

/// Axis-aligned sampling box. Samples include both box faces.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub min: Vec3,
    pub max: Vec3,
    pub counts: [usize; 3],
    pub shape: GridShape,
}

impl GridSpec {
    /// Plane grid spanning `[a_min, a_max] × [b_min, b_max]` over the two axes
    /// other than `normal`, in ascending axis order.
    pub fn plane(normal: Axis, at: f64, lo: Vec3, hi: Vec3, counts: [usize; 3]) -> GridSpec {
        let mut min = lo;
        let mut max = hi;
        let mut counts = counts;
        min[normal.index()] = at;
        max[normal.index()] = at;
        counts[normal.index()] = 1;
        GridSpec {
            min,
            max,
            counts,
            shape: GridShape::Plane { normal, at },
        }
    }

    pub fn volume(min: Vec3, max: Vec3, counts: [usize; 3]) -> GridSpec {
        GridSpec {
            min,
            max,
            counts,
            shape: GridShape::Volume,
        }
    }

    fn is_active(&self, axis: usize) -> bool {
        match self.shape {
            GridShape::Volume => true,
            GridShape::Plane { normal, .. } => normal.index() != axis,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        for a in 0..3 {
            if self.is_active(a) {
                if self.counts[a] < 2 {
                    return Err(ValidationError(format!(
                        "grid needs at least 2 samples along axis {a}"
                    )));
                }
                if !(self.max[a] > self.min[a]) {
                    return Err(ValidationError(format!(
                        "grid extent along axis {a} must be positive"
                    )));
                }
            }
        }
        Ok(())
    }

    fn effective_counts(&self) -> [usize; 3] {
        let mut c = self.counts;
        for (a, n) in c.iter_mut().enumerate() {
            if !self.is_active(a) {
                *n = 1;
            }
        }
        c
    }

    pub fn len(&self) -> usize {
        self.effective_counts().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid spacing along each axis (zero on inactive axes).
    pub fn spacing(&self) -> Vec3 {
        let c = self.effective_counts();
        Vec3::from_fn(|a, _| {
            if c[a] > 1 {
                (self.max[a] - self.min[a]) / (c[a] - 1) as f64
            } else {
                0.0
            }
        })
    }

    /// Sample point for a flat index; x varies fastest, then y, then z.
    pub fn point(&self, index: usize) -> Vec3 {
        let c = self.effective_counts();
        let ix = index % c[0];
        let iy = (index / c[0]) % c[1];
        let iz = index / (c[0] * c[1]);
        let idx = [ix, iy, iz];
        Vec3::from_fn(|a, _| {
            if c[a] > 1 {
                self.min[a] + (self.max[a] - self.min[a]) * idx[a] as f64 / (c[a] - 1) as f64
            } else {
                match self.shape {
                    GridShape::Plane { normal, at } if normal.index() == a => at,
                    _ => self.min[a],
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    /// |B| in T; `None` marks singular samples.
    pub values: Vec<Option<f64>>,
    pub components: Option<Vec<Option<Vec3>>>,
    pub singular_count: usize,
}

impl Grid {
    /// Smallest non-singular sample: (flat index, point, |B|).
    pub fn argmin(&self) -> Option<(usize, Vec3, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, v)| (i, self.spec.point(i), v))
    }

    /// CSV with columns `x_um,y_um,z_um,B_G` (plus `Bx_G,By_G,Bz_G` when
    /// components were requested). Singular samples are written as `NaN`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_um,y_um,z_um,B_G");
        if self.components.is_some() {
            out.push_str(",Bx_G,By_G,Bz_G");
        }
        out.push('\n');
        for (i, v) in self.values.iter().enumerate() {
            let p = self.spec.point(i);
            let b = v.map_or(f64::NAN, tesla_to_gauss);
            out.push_str(&format!(
                "{},{},{},{}",
                m_to_um(p.x),
                m_to_um(p.y),
                m_to_um(p.z),
                b
            ));
            if let Some(comps) = &self.components {
                let c = comps[i].unwrap_or(Vec3::repeat(f64::NAN));
                out.push_str(&format!(
                    ",{},{},{}",
                    tesla_to_gauss(c.x),
                    tesla_to_gauss(c.y),
                    tesla_to_gauss(c.z)
                ));
            }
            out.push('\n');
        }
        out
    }

    /// JSON grid object `{spec, values}` in µm and G; singular samples are `null`.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct SpecJson {
            min_um: [f64; 3],
            max_um: [f64; 3],
            counts: [usize; 3],
            shape: String,
            order: &'static str,
        }
        let shape = match self.spec.shape {
            GridShape::Volume => "volume".to_string(),
            GridShape::Plane { normal, .. } => format!("plane_{}", normal.tag()),
        };
        let um = |v: Vec3| [m_to_um(v.x), m_to_um(v.y), m_to_um(v.z)];
        let spec = SpecJson {
            min_um: um(self.spec.min),
            max_um: um(self.spec.max),
            counts: self.spec.effective_counts(),
            shape,
            order: "x fastest, then y, then z",
        };
        let values: Vec<Option<f64>> = self.values.iter().map(|v| v.map(tesla_to_gauss)).collect();
        let mut obj = serde_json::json!({
            "spec": spec,
            "values": values,
            "singular_count": self.singular_count,
        });
        if let Some(comps) = &self.components {
            let c: Vec<Option<[f64; 3]>> = comps
                .iter()
                .map(|c| c.map(|v| [tesla_to_gauss(v.x), tesla_to_gauss(v.y), tesla_to_gauss(v.z)]))
                .collect();
            obj["components"] = serde_json::json!(c);
        }
        obj
    }
}

/// Samples |B| (and optionally B) over `spec`. Points are evaluated
/// independently in parallel, so the result does not depend on partitioning.
pub fn grid_eval(
    layout: &Layout,
    spec: &GridSpec,
    multipliers: &Multipliers,
    with_components: bool,
) -> Result<Grid, ValidationError> {
    spec.validate()?;
    layout.check_multipliers(multipliers)?;
    let scene = Scene::new(layout, multipliers);
    let samples: Vec<Option<Vec3>> = (0..spec.len())
        .into_par_iter()
        .map(|i| scene.field(spec.point(i)).ok())
        .collect();
    let singular_count = samples.iter().filter(|s| s.is_none()).count();
    let values = samples.iter().map(|s| s.map(|b| b.norm())).collect();
    Ok(Grid {
        spec: spec.clone(),
        values,
        components: with_components.then_some(samples),
        singular_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Conductor;

    #[test]
    fn bias_only_grid_is_constant() {
        let l = Layout::bias_only(Vec3::new(0.0, 0.0, 1e-4));
        let spec = GridSpec::volume(Vec3::repeat(-1e-4), Vec3::repeat(1e-4), [3, 4, 5]);
        let g = grid_eval(&l, &spec, &l.unit_multipliers(), false).unwrap();
        assert_eq!(g.values.len(), 60);
        assert!(g.values.iter().all(|v| *v == Some(1e-4)));
        assert_eq!(g.singular_count, 0);
    }

    #[test]
    fn invalid_specs_rejected() {
        let l = Layout::bias_only(Vec3::zeros());
        let spec = GridSpec::volume(Vec3::zeros(), Vec3::repeat(1.0), [1, 2, 2]);
        assert!(grid_eval(&l, &spec, &l.unit_multipliers(), false).is_err());
        let spec = GridSpec::plane(Axis::Z, 0.0, Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), [2, 2, 1]);
        assert!(grid_eval(&l, &spec, &l.unit_multipliers(), false).is_err());
    }

    #[test]
    fn singular_points_flagged_and_serialised_as_null() {
        let l = Layout::builder()
            .conductor(Conductor::straight("w", Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 1.0))
            .build()
            .unwrap();
        let spec = GridSpec::plane(Axis::X, 0.0, Vec3::new(0.0, -1e-3, 0.0), Vec3::new(0.0, 1e-3, 1e-3), [1, 3, 3]);
        let g = grid_eval(&l, &spec, &l.unit_multipliers(), false).unwrap();
        assert_eq!(g.singular_count, 1);
        let j = g.to_json();
        assert!(j["values"][1].is_null());
        assert!(g.to_csv().lines().nth(2).unwrap().ends_with("NaN"));
    }

    #[test]
    fn plane_indexing() {
        let spec = GridSpec::plane(Axis::Y, 2.0, Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 3.0), [2, 9, 4]);
        assert_eq!(spec.len(), 8);
        assert_eq!(spec.point(0), Vec3::new(0.0, 2.0, 0.0));
        assert_eq!(spec.point(1), Vec3::new(1.0, 2.0, 0.0));
        assert_eq!(spec.point(7), Vec3::new(1.0, 2.0, 3.0));
    }
}
