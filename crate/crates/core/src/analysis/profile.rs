use serde::Serialize;

use super::{find_minimum_in, guide_element, quad_params, AnalysisError, MinimumOptions, QuadParams};
use crate::field::{MagneticField, Scene};
use crate::layout::{Axis, ElementRef, Layout, Multipliers, Vec3};
use crate::units::{m_to_um, tesla_to_gauss};

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOptions {
    pub start: f64,
    pub end: f64,
    pub samples: usize,
    /// Transverse seed for the first slice; defaults to the guide zero.
    pub seed: Option<Vec3>,
}

impl ProfileOptions {
    pub fn new(start: f64, end: f64, samples: usize) -> Self {
        ProfileOptions {
            start,
            end,
            samples,
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: Vec3) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn positions(&self) -> Vec<f64> {
        let n = self.samples;
        (0..n)
            .map(|i| {
                if n == 1 {
                    self.start
                } else {
                    self.start + (self.end - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSample {
    /// Position along the guide, m.
    pub x: f64,
    /// Exact transverse minimum of |B| in this slice, T.
    pub b_exact: f64,
    pub r_exact: [f64; 3],
    /// Closed-form estimate |B̃_axial| at the unperturbed guide zero, T.
    pub b_approx: Option<f64>,
    /// Closed-form minimum position (lateral, height), m.
    pub lateral_approx: Option<f64>,
    pub height_approx: Option<f64>,
    /// Field left after removing the guide wire and the bias it cancels, T.
    pub b_tilde: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalProfile {
    pub axis: Axis,
    pub samples: Vec<ProfileSample>,
    pub quad: Option<QuadParams>,
}

fn along(axis: Axis, x: f64, lateral: f64, height: f64) -> Vec3 {
    match axis {
        Axis::X => Vec3::new(x, lateral, height),
        _ => Vec3::new(lateral, x, height),
    }
}

fn lateral_index(axis: Axis) -> usize {
    match axis {
        Axis::X => 1,
        _ => 0,
    }
}

/// Layout holding only the guide wire, at its effective current.
fn guide_only(layout: &Layout, element: ElementRef, multipliers: &Multipliers) -> Layout {
    let b = Layout::builder();
    let b = match element {
        ElementRef::Conductor(i) => {
            let mut c = layout.conductors()[i].clone();
            c.current = layout.conductor_current(i, multipliers);
            b.conductor(c)
        }
        ElementRef::InfiniteWire(i) => {
            let mut w = layout.infinite_wires()[i].clone();
            w.current = layout.wire_current(i, multipliers);
            b.infinite_wire(w)
        }
    };
    b.build().expect("a single valid element forms a valid layout")
}

/// Per-slice transverse minimisation along the guide, with the closed-form
/// estimate alongside when the layout has a guide.
pub fn longitudinal_profile(
    layout: &Layout,
    axis: Axis,
    options: &ProfileOptions,
    multipliers: &Multipliers,
) -> Result<LongitudinalProfile, AnalysisError> {
    if axis == Axis::Z {
        return Err(AnalysisError::Invalid("profiles run along x or y".into()));
    }
    if options.samples == 0 {
        return Err(AnalysisError::Invalid("profile needs at least one sample".into()));
    }
    layout
        .check_multipliers(multipliers)
        .map_err(|e| AnalysisError::Invalid(e.0))?;
    let quad = match options.seed {
        Some(_) => quad_params(layout, axis, multipliers).ok(),
        None => Some(quad_params(layout, axis, multipliers)?),
    };
    let scene = Scene::new(layout, multipliers);
    let li = lateral_index(axis);
    let approx = quad.as_ref().map(|q| {
        let g = guide_element(layout, axis, multipliers).expect("quad_params found a guide");
        let n = axis.unit().cross(&Vec3::z());
        let cancelled = n * layout.effective_bias(multipliers).dot(&n);
        let lateral0 = g.anchor[li];
        let height0 = g.anchor.z + q.z0;
        (guide_only(layout, g.element, multipliers), cancelled, lateral0, height0, q.b)
    });

    let mut seed = match (options.seed, &quad) {
        (Some(s), _) => s,
        (None, Some(q)) => Vec3::new(q.zero[0], q.zero[1], q.zero[2]),
        (None, None) => unreachable!(),
    };
    let sign = if axis == Axis::X { 1.0 } else { -1.0 };
    let mut samples = Vec::with_capacity(options.samples);
    let mut last_good = None;
    let opts = MinimumOptions::transverse_to(axis);
    for x in options.positions() {
        seed[axis.index()] = x;
        let min = find_minimum_in(&scene, seed, &opts)
            .map_err(|_| AnalysisError::SliceLost { x, last_good })?;
        seed = min.point;
        last_good = Some(x);

        let (b_approx, lateral_approx, height_approx, b_tilde) = match &approx {
            Some((guide, cancelled, lateral0, height0, b)) => {
                let p = along(axis, x, *lateral0, *height0);
                let bg = Scene::new(guide, &guide.unit_multipliers()).field(p)?;
                let bt = scene.field(p)? - bg - cancelled;
                let bu = bt[li];
                (
                    Some(bt[axis.index()].abs()),
                    Some(lateral0 - sign * bt.z / b),
                    Some(height0 - sign * bu / b),
                    Some([bt.x, bt.y, bt.z]),
                )
            }
            None => (None, None, None, None),
        };
        samples.push(ProfileSample {
            x,
            b_exact: min.b_min,
            r_exact: [min.point.x, min.point.y, min.point.z],
            b_approx,
            lateral_approx,
            height_approx,
            b_tilde,
        });
    }
    Ok(LongitudinalProfile { axis, samples, quad })
}

impl LongitudinalProfile {
    /// CSV in µm and G. Lateral/height columns are taken from the exact
    /// minimum; the closed-form position follows in the last two columns.
    pub fn to_csv(&self) -> String {
        let li = lateral_index(self.axis);
        let (lat, lat_a) = match self.axis {
            Axis::X => ("y_min_um", "y_approx_um"),
            _ => ("x_min_um", "x_approx_um"),
        };
        let pos = match self.axis {
            Axis::X => "x_um",
            _ => "y_um",
        };
        let mut out = format!("{pos},Bmin_exact_G,Bmin_approx_G,{lat},z_min_um,{lat_a},z_approx_um\n");
        let opt = |v: Option<f64>, f: fn(f64) -> f64| v.map_or("NaN".to_string(), |v| f(v).to_string());
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                m_to_um(s.x),
                tesla_to_gauss(s.b_exact),
                opt(s.b_approx, tesla_to_gauss),
                m_to_um(s.r_exact[li]),
                m_to_um(s.r_exact[2]),
                opt(s.lateral_approx, m_to_um),
                opt(s.height_approx, m_to_um),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{make_crossing_trap, make_side_guide, GuideSpec};
    use crate::units::gauss_to_tesla;

    #[test]
    fn side_guide_profile_is_flat_zero() {
        let l = make_side_guide(2.0, GuideSpec::Bias(gauss_to_tesla(160.0))).unwrap();
        let p = longitudinal_profile(&l, Axis::X, &ProfileOptions::new(-50e-6, 50e-6, 5), &l.unit_multipliers())
            .unwrap();
        for s in &p.samples {
            assert!(s.b_exact < 1e-10);
            assert!(s.b_approx.unwrap() < 1e-10);
        }
    }

    #[test]
    fn repulsive_peak() {
        let t = make_crossing_trap(2.0, 0.5, gauss_to_tesla(160.0), 0.0).unwrap();
        let p = longitudinal_profile(
            &t.layout,
            Axis::X,
            &ProfileOptions::new(0.0, 0.0, 1),
            &t.layout.unit_multipliers(),
        )
        .unwrap();
        let peak = p.samples[0].b_approx.unwrap();
        assert!((peak - gauss_to_tesla(40.0)).abs() < gauss_to_tesla(0.01), "{peak}");
        assert!(p.to_csv().starts_with("x_um,Bmin_exact_G,Bmin_approx_G,y_min_um,z_min_um"));
    }

    #[test]
    fn exact_branch_bounds_slice() {
        let t = make_crossing_trap(2.0, 0.5, gauss_to_tesla(160.0), gauss_to_tesla(-45.0)).unwrap();
        let m = t.layout.unit_multipliers();
        let p = longitudinal_profile(&t.layout, Axis::X, &ProfileOptions::new(-40e-6, 40e-6, 9), &m).unwrap();
        let scene = Scene::new(&t.layout, &m);
        for s in &p.samples {
            let r = Vec3::from(s.r_exact);
            for d in [Vec3::new(0.0, 1e-7, 0.0), Vec3::new(0.0, 0.0, -1e-7), Vec3::new(0.0, -2e-7, 3e-7)] {
                assert!(scene.field(r + d).unwrap().norm() >= s.b_exact);
            }
        }
    }
}
