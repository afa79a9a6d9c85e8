//! The compact domain D that confines the eigenvalue gas and bounds the
//! energy-field verification.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Disk or simple-polygon domain specification.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl DomainSpec {
    pub fn disk(center: Complex64, radius: f64) -> Self {
        DomainSpec::Disk {
            center: [center.re, center.im],
            radius,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            DomainSpec::Disk { center, radius } => {
                let c = Complex64::new(center[0], center[1]);
                (z - c).norm_sqr() <= radius * radius
            }
            DomainSpec::Polygon { vertices } => {
                let m = vertices.len();
                if m < 3 {
                    return false;
                }
                let mut winding = 0i64;
                for i in 0..m {
                    let p = Complex64::new(vertices[i][0], vertices[i][1]);
                    let q = Complex64::new(vertices[(i + 1) % m][0], vertices[(i + 1) % m][1]);
                    let cross = (q.re - p.re) * (z.im - p.im) - (q.im - p.im) * (z.re - p.re);
                    if p.im <= z.im {
                        if q.im > z.im && cross > 0.0 {
                            winding += 1;
                        }
                    } else if q.im <= z.im && cross < 0.0 {
                        winding -= 1;
                    }
                }
                winding != 0
            }
        }
    }

    /// Axis-aligned bounding box (x0, y0, x1, y1).
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self {
            DomainSpec::Disk { center, radius } => (
                center[0] - radius,
                center[1] - radius,
                center[0] + radius,
                center[1] + radius,
            ),
            DomainSpec::Polygon { vertices } => {
                let mut b = (
                    f64::INFINITY,
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                    f64::NEG_INFINITY,
                );
                for v in vertices {
                    b.0 = b.0.min(v[0]);
                    b.1 = b.1.min(v[1]);
                    b.2 = b.2.max(v[0]);
                    b.3 = b.3.max(v[1]);
                }
                b
            }
        }
    }
}
