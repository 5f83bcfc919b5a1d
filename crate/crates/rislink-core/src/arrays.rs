//! Far-field steering vectors for the antenna arrays in the link.
//!
//! The receiver is a uniform linear array (ULA); the transmitter and the RIS
//! are uniform rectangular arrays (URA) lying in a plane.  All spacings are
//! expressed in carrier wavelengths, so the usual half-wavelength layout has
//! spacing `0.5`.  Steering vectors use the phase convention
//!
//! ```text
//! [a(psi)]_i = exp(-j 2 pi d i sin(psi))                    (ULA)
//! [a(phi, theta)]_{(ix, iy)} = exp(-j 2 pi (dx ix u + dy iy v))   (URA)
//! ```
//!
//! with `u = sin(theta) cos(phi)` and `v = sin(theta) sin(phi)` the direction
//! cosines of azimuth `phi` and elevation `theta`.  A URA is flattened
//! row-major over its grid: index `i = ix * n_y + iy`.  Every steering vector
//! therefore starts with entry `1` and has unit-modulus entries.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{ModelError, Result};

/// Geometry of a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry {
    /// Number of elements along the line.
    pub n_elements: usize,
    /// Inter-element spacing in carrier wavelengths.
    pub spacing: f64,
}

impl UlaGeometry {
    /// Creates a ULA geometry, validating that it is physically meaningful.
    pub fn new(n_elements: usize, spacing: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(ModelError::InvalidParameter {
                name: "n_elements",
                message: "array needs at least one element".to_string(),
            });
        }
        if !spacing.is_finite() || spacing <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "spacing",
                message: format!("spacing must be finite and positive, got {spacing}"),
            });
        }
        Ok(Self {
            n_elements,
            spacing,
        })
    }

    /// Creates the standard half-wavelength ULA.
    pub fn half_wavelength(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5)
    }
}

/// Geometry of a uniform rectangular array with `n_x * n_y` elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UraGeometry {
    /// Number of elements along the x axis of the grid.
    pub n_x: usize,
    /// Number of elements along the y axis of the grid.
    pub n_y: usize,
    /// Element spacing along x in carrier wavelengths.
    pub spacing_x: f64,
    /// Element spacing along y in carrier wavelengths.
    pub spacing_y: f64,
}

impl UraGeometry {
    /// Creates a URA geometry, validating that it is physically meaningful.
    pub fn new(n_x: usize, n_y: usize, spacing_x: f64, spacing_y: f64) -> Result<Self> {
        if n_x == 0 || n_y == 0 {
            return Err(ModelError::InvalidParameter {
                name: "n_x/n_y",
                message: format!("grid must be non-empty, got {n_x} x {n_y}"),
            });
        }
        for (name, d) in [("spacing_x", spacing_x), ("spacing_y", spacing_y)] {
            if !d.is_finite() || d <= 0.0 {
                return Err(ModelError::InvalidParameter {
                    name: "spacing",
                    message: format!("{name} must be finite and positive, got {d}"),
                });
            }
        }
        Ok(Self {
            n_x,
            n_y,
            spacing_x,
            spacing_y,
        })
    }

    /// Creates the standard half-wavelength URA.
    pub fn half_wavelength(n_x: usize, n_y: usize) -> Result<Self> {
        Self::new(n_x, n_y, 0.5, 0.5)
    }

    /// Creates the most nearly square half-wavelength URA with `n` elements:
    /// the factorization `n = n_x * n_y` with the smallest `|n_x - n_y|`
    /// (and `n_x <= n_y`).  Primes degrade gracefully to a `1 x n` strip.
    pub fn squarest(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ModelError::InvalidParameter {
                name: "n",
                message: "array needs at least one element".to_string(),
            });
        }
        let mut n_x = (n as f64).sqrt().floor() as usize;
        // Guard against floating-point sqrt landing one off.
        while n_x * n_x > n {
            n_x -= 1;
        }
        while n_x > 1 && !n.is_multiple_of(n_x) {
            n_x -= 1;
        }
        Self::half_wavelength(n_x, n / n_x)
    }

    /// Total number of elements in the grid.
    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    /// True when the grid has no elements (never, for validated geometries).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An azimuth/elevation direction in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    /// Azimuth angle in radians.
    pub azimuth: f64,
    /// Elevation angle in radians.
    pub elevation: f64,
}

impl AnglePair {
    /// Creates an azimuth/elevation pair.
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }
}

/// A unit-modulus array steering vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: Vec<Complex64>,
}

impl SteeringVector {
    fn from_phases(phases: impl Iterator<Item = f64>) -> Self {
        let entries = phases.map(|p| Complex64::from_polar(1.0, p)).collect();
        Self { entries }
    }

    /// The complex entries of the vector.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when the vector has no entries.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Squared Euclidean norm; equals the length for unit-modulus entries up
    /// to rounding.
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Hermitian inner product `self^H other`.
    ///
    /// Both vectors must have the same length.
    pub fn hermitian_inner(&self, other: &Self) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(ModelError::InvalidParameter {
                name: "steering vectors",
                message: format!(
                    "inner product needs equal lengths, got {} and {}",
                    self.len(),
                    other.len()
                ),
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Steering vector of a ULA towards the direction `angle` (radians measured
/// from broadside).
pub fn ula_steering(geometry: UlaGeometry, angle: f64) -> SteeringVector {
    let step = -TAU * geometry.spacing * angle.sin();
    SteeringVector::from_phases((0..geometry.n_elements).map(|i| step * i as f64))
}

/// Steering vector of a URA towards the azimuth/elevation direction `angles`.
///
/// The result is the Kronecker product of the two per-axis ULA factors, laid
/// out row-major over the grid (`i = ix * n_y + iy`).
pub fn ura_steering(geometry: UraGeometry, angles: AnglePair) -> SteeringVector {
    let u = angles.elevation.sin() * angles.azimuth.cos();
    let v = angles.elevation.sin() * angles.azimuth.sin();
    let step_x = -TAU * geometry.spacing_x * u;
    let step_y = -TAU * geometry.spacing_y * v;
    SteeringVector::from_phases((0..geometry.n_x).flat_map(move |ix| {
        (0..geometry.n_y).map(move |iy| step_x * ix as f64 + step_y * iy as f64)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn assert_close(z: Complex64, want: Complex64) {
        assert!(
            (z - want).norm() < TOL,
            "expected {want}, got {z} (difference {})",
            (z - want).norm()
        );
    }

    #[test]
    fn ula_three_elements_half_spacing_thirty_degrees() {
        // sin(pi/6) = 1/2, so consecutive phases step by -pi/2:
        // the vector is [1, -j, -1].
        let geom = UlaGeometry::half_wavelength(3).unwrap();
        let a = ula_steering(geom, std::f64::consts::FRAC_PI_6);
        assert_eq!(a.len(), 3);
        assert_close(a.entries()[0], Complex64::new(1.0, 0.0));
        assert_close(a.entries()[1], Complex64::new(0.0, -1.0));
        assert_close(a.entries()[2], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn ura_two_by_two_endfire() {
        // azimuth 0, elevation pi/2: u = 1, v = 0, so the x factor is
        // [1, -1] and the y factor is [1, 1]; flattened: [1, 1, -1, -1].
        let geom = UraGeometry::half_wavelength(2, 2).unwrap();
        let a = ura_steering(geom, AnglePair::new(0.0, std::f64::consts::FRAC_PI_2));
        assert_eq!(a.len(), 4);
        assert_close(a.entries()[0], Complex64::new(1.0, 0.0));
        assert_close(a.entries()[1], Complex64::new(1.0, 0.0));
        assert_close(a.entries()[2], Complex64::new(-1.0, 0.0));
        assert_close(a.entries()[3], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn first_entry_is_one_and_norm_is_length() {
        let geom = UraGeometry::half_wavelength(3, 5).unwrap();
        let a = ura_steering(geom, AnglePair::new(1.1, 0.7));
        assert_close(a.entries()[0], Complex64::new(1.0, 0.0));
        assert!((a.norm_sqr() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn ura_flattening_is_outer_x_inner_y() {
        let geom = UraGeometry::new(2, 3, 0.5, 0.25).unwrap();
        let angles = AnglePair::new(0.9, 0.6);
        let a = ura_steering(geom, angles);
        let u = angles.elevation.sin() * angles.azimuth.cos();
        let v = angles.elevation.sin() * angles.azimuth.sin();
        for ix in 0..2 {
            for iy in 0..3 {
                let phase = -TAU * (0.5 * ix as f64 * u + 0.25 * iy as f64 * v);
                assert_close(a.entries()[ix * 3 + iy], Complex64::from_polar(1.0, phase));
            }
        }
    }

    #[test]
    fn steering_at_broadside_is_all_ones() {
        let a = ula_steering(UlaGeometry::half_wavelength(8).unwrap(), 0.0);
        for &z in a.entries() {
            assert_close(z, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn hermitian_inner_matches_manual_sum() {
        let geom = UlaGeometry::half_wavelength(4).unwrap();
        let a = ula_steering(geom, 0.3);
        let b = ula_steering(geom, -0.2);
        let want: Complex64 = a
            .entries()
            .iter()
            .zip(b.entries())
            .map(|(x, y)| x.conj() * y)
            .sum();
        assert_close(a.hermitian_inner(&b).unwrap(), want);
        // Self inner product is the squared norm.
        let aa = a.hermitian_inner(&a).unwrap();
        assert!((aa.re - 4.0).abs() < TOL && aa.im.abs() < TOL);
    }

    #[test]
    fn hermitian_inner_rejects_length_mismatch() {
        let a = ula_steering(UlaGeometry::half_wavelength(4).unwrap(), 0.3);
        let b = ula_steering(UlaGeometry::half_wavelength(5).unwrap(), 0.3);
        assert!(a.hermitian_inner(&b).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(UlaGeometry::new(0, 0.5).is_err());
        assert!(UlaGeometry::new(4, 0.0).is_err());
        assert!(UlaGeometry::new(4, f64::NAN).is_err());
        assert!(UraGeometry::new(0, 3, 0.5, 0.5).is_err());
        assert!(UraGeometry::new(2, 2, 0.5, -0.5).is_err());
    }

    #[test]
    fn squarest_factorizations() {
        let cases = [
            (100, (10, 10)),
            (64, (8, 8)),
            (144, (12, 12)),
            (4, (2, 2)),
            (12, (3, 4)),
            (7, (1, 7)),
            (1, (1, 1)),
        ];
        for (n, (x, y)) in cases {
            let g = UraGeometry::squarest(n).unwrap();
            assert_eq!((g.n_x, g.n_y), (x, y), "squarest({n})");
            assert_eq!(g.len(), n);
        }
        assert!(UraGeometry::squarest(0).is_err());
    }
}
