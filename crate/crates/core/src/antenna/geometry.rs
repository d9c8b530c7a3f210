//! Reflectarray aperture construction and steering phase-profile synthesis.
//!
//! The aperture is a half-wavelength lattice clipped to an ellipse in the
//! x-z plane (normal +y). The feed sits offset from broadside at the focal
//! distance and illuminates the cells with a cos^{q_f} taper over the feed
//! path loss 1/R. Cells are stored row-by-row (constant z, contiguous in x)
//! because the pattern kernel exploits that layout.

use serde::{Deserialize, Serialize};

use crate::config::{ArrayConfig, ScenarioConfig};

/// One lattice row: cells share the z index and span a contiguous x range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSpan {
    /// z lattice index of this row.
    pub j: i32,
    /// First x lattice index in the row.
    pub i_min: i32,
    /// Offset of the row's first cell in the flat per-cell arrays.
    pub start: usize,
    /// Number of cells in the row.
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectarrayGeometry {
    /// Lattice pitch [m] (lambda/2 at the design frequency).
    pub spacing: f64,
    /// Ellipse semi-axes [m]; circular for the default layout.
    pub semi_axis_a: f64,
    pub semi_axis_b: f64,
    /// Feed phase center [m].
    pub feed_position: [f64; 3],
    pub feed_exponent: f64,
    pub element_exponent: f64,
    pub rows: Vec<RowSpan>,
    /// Per-cell x lattice index, row-major.
    pub cell_i: Vec<i32>,
    /// Per-cell positions [m], row-major (x = i*spacing, z = j*spacing).
    pub cell_x: Vec<f64>,
    pub cell_z: Vec<f64>,
    /// Feed-to-cell distance R [m].
    pub feed_distance: Vec<f64>,
    /// Feed illumination amplitude cos^{q_f}(theta_f)/R at each cell.
    pub amplitude: Vec<f64>,
}

impl ReflectarrayGeometry {
    pub fn total_cells(&self) -> usize {
        self.cell_x.len()
    }

    /// Global x lattice index bounds over all rows (for phase-table sizing).
    pub fn i_bounds(&self) -> (i32, i32) {
        let lo = self.rows.iter().map(|r| r.i_min).min().unwrap_or(0);
        let hi = self
            .rows
            .iter()
            .map(|r| r.i_min + r.len as i32 - 1)
            .max()
            .unwrap_or(0);
        (lo, hi)
    }
}

/// Build the lattice-in-ellipse aperture for the configured cell target.
///
/// The circular radius solves pi r^2 / spacing^2 = target, so the clipped
/// lattice count lands within 1% of the target for any non-trivial size.
pub fn build_aperture(cfg: &ScenarioConfig) -> ReflectarrayGeometry {
    let spacing = 0.5 * cfg.wavelength();
    build_aperture_with(&cfg.array, spacing)
}

pub fn build_aperture_with(array: &ArrayConfig, spacing: f64) -> ReflectarrayGeometry {
    assert!(spacing > 0.0, "cell spacing must be positive");
    assert!(array.target_cells >= 1, "cell target must be positive");

    let r = (array.target_cells as f64 / std::f64::consts::PI).sqrt() * spacing;
    let r2 = r * r;
    let jmax = (r / spacing).floor() as i32;

    // Feed at focal distance F = f/D * (2r), offset from broadside in the
    // x-y plane, aimed at the aperture center.
    let focal = array.f_over_d * 2.0 * r;
    let chi = array.feed_offset_deg.to_radians();
    let feed = [-focal * chi.sin(), focal * chi.cos(), 0.0];
    let feed_norm = (feed[0] * feed[0] + feed[1] * feed[1]).sqrt();
    // boresight of the feed horn: from the feed toward the aperture center
    let bore = [-feed[0] / feed_norm, -feed[1] / feed_norm, 0.0];

    let mut rows = Vec::new();
    let mut cell_i = Vec::new();
    let mut cell_x = Vec::new();
    let mut cell_z = Vec::new();
    let mut feed_distance = Vec::new();
    let mut amplitude = Vec::new();

    for j in -jmax..=jmax {
        let z = j as f64 * spacing;
        let rem = r2 - z * z;
        if rem < 0.0 {
            continue;
        }
        let imax = (rem.sqrt() / spacing).floor() as i32;
        let start = cell_x.len();
        for i in -imax..=imax {
            let x = i as f64 * spacing;
            if x * x + z * z > r2 {
                continue; // guards the floor() edge case
            }
            let v = [x - feed[0], -feed[1], z - feed[2]];
            let dist = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let cos_f = ((v[0] * bore[0] + v[1] * bore[1]) / dist).max(0.0);
            cell_i.push(i);
            cell_x.push(x);
            cell_z.push(z);
            feed_distance.push(dist);
            amplitude.push(cos_f.powf(array.feed_exponent) / dist);
        }
        let len = cell_x.len() - start;
        if len > 0 {
            rows.push(RowSpan { j, i_min: -imax, start, len });
        }
    }

    ReflectarrayGeometry {
        spacing,
        semi_axis_a: r,
        semi_axis_b: r,
        feed_position: feed,
        feed_exponent: array.feed_exponent,
        element_exponent: array.element_exponent,
        rows,
        cell_i,
        cell_x,
        cell_z,
        feed_distance,
        amplitude,
    }
}

// ---------------------------------------------------------------------------
// Phase profile

/// Wrap an angle to (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y >= two_pi {
        y -= two_pi; // rem_euclid can graze the modulus for tiny negatives
    }
    if y > std::f64::consts::PI {
        y - two_pi
    } else {
        y
    }
}

/// Required cell phase for steering toward (theta_s, phi_s):
/// `phi = k0 (R_i - sin(theta_s) (x_i cos(phi_s) + z_i sin(phi_s))) + phi_0`.
pub fn steering_phase_value(
    k0: f64,
    feed_distance: f64,
    x: f64,
    z: f64,
    theta_s: f64,
    phi_s: f64,
    phi_0: f64,
) -> f64 {
    wrap_phase(k0 * (feed_distance - theta_s.sin() * (x * phi_s.cos() + z * phi_s.sin())) + phi_0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    /// Per-cell phase, wrapped to (-pi, pi].
    pub phases: Vec<f64>,
    pub theta_s: f64,
    pub phi_s: f64,
    pub phi_0: f64,
}

/// Synthesize the full steering profile. `|theta_s| <= pi/2` required.
pub fn steering_phase_profile(
    geom: &ReflectarrayGeometry,
    theta_s: f64,
    phi_s: f64,
    k0: f64,
    phi_0: f64,
) -> PhaseProfile {
    assert!(
        theta_s.abs() <= std::f64::consts::FRAC_PI_2,
        "steering angle out of range: |{theta_s}| > pi/2"
    );
    let phases = (0..geom.total_cells())
        .map(|c| {
            steering_phase_value(
                k0,
                geom.feed_distance[c],
                geom.cell_x[c],
                geom.cell_z[c],
                theta_s,
                phi_s,
                phi_0,
            )
        })
        .collect();
    PhaseProfile { phases, theta_s, phi_s, phi_0 }
}

/// Uniform phase quantization to 2^bits levels across the wrap range.
/// bits = 0 leaves the profile continuous.
pub fn quantize_profile(profile: &PhaseProfile, bits: u32) -> PhaseProfile {
    if bits == 0 {
        return profile.clone();
    }
    let step = 2.0 * std::f64::consts::PI / f64::from(1u32 << bits);
    let phases = profile
        .phases
        .iter()
        .map(|&p| wrap_phase((p / step).round() * step))
        .collect();
    PhaseProfile { phases, ..profile.clone() }
}

// ---------------------------------------------------------------------------
