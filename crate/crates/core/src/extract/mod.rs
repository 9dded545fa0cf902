//! Marching cubes over any [`ScalarField`].

mod tables;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{BoundingCube, ScalarField, TriangleMesh, Vec3};
use tables::{EDGE_TABLE, TRI_TABLE};

/// Corner offsets: 0..4 walk the bottom face, 4..8 the top face above them.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Corner values closer than this are joined at the edge midpoint.
const INTERP_GUARD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    resolution: usize,
    pub cube: BoundingCube,
    pub iso_value: f64,
}

impl GridSpec {
    pub fn new(resolution: usize, cube: BoundingCube, iso_value: f64) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::config("resolution", format!("must be >= 2, got {resolution}")));
        }
        if !iso_value.is_finite() {
            return Err(Error::config("iso_value", "must be finite"));
        }
        Ok(Self {
            resolution,
            cube,
            iso_value,
        })
    }

    /// Cells per axis.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.cube.half_extent() / self.resolution as f64
    }

    fn corner_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.cube.half_extent();
        let s = self.cell_size();
        Vec3::new(-h + i as f64 * s, -h + j as f64 * s, -h + k as f64 * s)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            resolution: 64,
            cube: BoundingCube::unit(),
            iso_value: 0.0,
        }
    }
}

/// Extracted mesh; `empty_surface` is set when no cell straddles the iso value.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub mesh: TriangleMesh,
    pub empty_surface: bool,
}

impl Extraction {
    pub fn into_result(self) -> Result<TriangleMesh> {
        if self.empty_surface {
            Err(Error::EmptySurface)
        } else {
            Ok(self.mesh)
        }
    }
}

/// Samples `field` on the grid corners and triangulates the iso surface.
///
/// Faces are wound so their normals point towards increasing field values.
/// Vertices on shared grid edges are created once, keyed by the edge.
pub fn marching_cubes(field: &impl ScalarField, grid: &GridSpec) -> Extraction {
    let n = grid.resolution;
    let m = n + 1;
    let idx = |i: usize, j: usize, k: usize| (k * m + j) * m + i;
    let mut positions = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                positions.push(grid.corner_position(i, j, k));
            }
        }
    }
    let values = field.eval_many(&positions);
    let iso = grid.iso_value;

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), u32> = HashMap::new();

    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let corner_ids: [usize; 8] =
                    CORNERS.map(|[di, dj, dk]| idx(i + di, j + dj, k + dk));
                let mut case = 0usize;
                for (c, &id) in corner_ids.iter().enumerate() {
                    if values[id] < iso {
                        case |= 1 << c;
                    }
                }
                let crossed = EDGE_TABLE[case];
                if crossed == 0 {
                    continue;
                }
                let mut local = [u32::MAX; 12];
                for (e, &(a, b)) in EDGES.iter().enumerate() {
                    if crossed & (1 << e) == 0 {
                        continue;
                    }
                    let (ga, gb) = (corner_ids[a], corner_ids[b]);
                    let (lo, hi) = if ga < gb { (ga, gb) } else { (gb, ga) };
                    local[e] = *edge_vertex.entry((lo, hi)).or_insert_with(|| {
                        let (vlo, vhi) = (values[lo], values[hi]);
                        let t = if (vhi - vlo).abs() < INTERP_GUARD {
                            0.5
                        } else {
                            ((iso - vlo) / (vhi - vlo)).clamp(0.0, 1.0)
                        };
                        vertices.push(positions[lo] + (positions[hi] - positions[lo]) * t);
                        (vertices.len() - 1) as u32
                    });
                }
                for tri in TRI_TABLE[case].chunks_exact(3) {
                    if tri[0] < 0 {
                        break;
                    }
                    let a = local[tri[0] as usize];
                    let b = local[tri[1] as usize];
                    let c = local[tri[2] as usize];
                    if a == b || b == c || a == c {
                        continue;
                    }
                    faces.push([a, c, b]);
                }
            }
        }
    }
    let empty_surface = faces.is_empty();
    Extraction {
        mesh: TriangleMesh { vertices, faces },
        empty_surface,
    }
}
