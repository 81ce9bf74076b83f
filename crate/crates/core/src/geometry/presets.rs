//! Benchmark domains addressable by name.
//!
//! * `bar1d`: the bar `[-1, 1]` split into a left zone, a crack zone
//!   `[-2 l0, 2 l0]` and a right zone, each carrying 14 equal cells.
//! * `senp-tension`: the unit square. Base grid 16 x 18 with two
//!   cross-insertion passes around `y = 0.5`, giving 192 level-0, 256 level-1
//!   and 512 level-2 cells (960 in total).
//! * `asym-bend-3holes`: the 20 x 8 beam with three holes of diameter 0.5
//!   centred at `(4, 2.75)`, `(4, 4.75)`, `(4, 6.75)`. The beam is assembled
//!   from 29 patches: seven rectangles left of the holes, four rectangles
//!   between them, six to the right and four rational quadratic patches per
//!   hole (each maps one side of the 1 x 1 block around a hole onto a
//!   quarter of the circle, so the hole boundary is an exact conic). Cells
//!   in `[3, 8] x [0, 6]` are refined once.
//! * `cube-tension`: the unit cube on an 8 x 8 x 8 grid (512 cells).

use std::f64::consts::FRAC_1_SQRT_2;

use super::{refine_region, ElementMesh, GeometryError, KnotVector, NurbsPatch};

/// One parametric face of a patch: the set `xi[dir] == side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub patch: usize,
    pub dir: usize,
    pub side: u8,
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub patches: Vec<NurbsPatch<f64>>,
    pub mesh: ElementMesh<f64>,
    /// Boundary pieces carrying the prescribed load.
    pub loaded_faces: Vec<Face>,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// Circular holes `(centre, radius)` cut from the bounding box.
    pub holes: Vec<([f64; 2], f64)>,
}

impl Domain {
    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// Whether `x` lies in the closed physical domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        let inside = (0..self.dim()).all(|k| x[k] >= self.lo[k] && x[k] <= self.hi[k]);
        inside && self.holes.iter().all(|(c, r)| (x[0] - c[0]).hypot(x[1] - c[1]) >= *r)
    }
}

pub const PRESET_NAMES: [&str; 4] = ["bar1d", "senp-tension", "asym-bend-3holes", "cube-tension"];

pub fn by_name(name: &str, l0: f64) -> Result<Domain, GeometryError> {
    match name {
        "bar1d" => Ok(bar1d(l0, 14)),
        "senp-tension" => Ok(senp_tension()),
        "asym-bend-3holes" => Ok(asym_bend_3holes()),
        "cube-tension" => Ok(cube_tension(8)),
        other => Err(GeometryError::UnknownPreset(other.to_string())),
    }
}

/// Degree-1 grid patch on the box `lo..hi` with `n[k]` equal spans per direction.
/// Quarter of the unit disc: radial direction linear, circumferential
/// direction an exact rational quadratic arc.
pub fn quarter_disc() -> NurbsPatch<f64> {
    let radial = KnotVector::uniform(1, 2);
    let arc = KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2).expect("arc knots");
    let ring = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let w = [1.0, FRAC_1_SQRT_2, 1.0];
    let mut pts = Vec::new();
    let mut weights = Vec::new();
    for j in 0..3 {
        for r in [0.0, 0.5, 1.0] {
            pts.push([r * ring[j][0], r * ring[j][1], 0.0]);
            weights.push(w[j]);
        }
    }
    NurbsPatch::new(vec![radial, arc], pts, weights).expect("quarter disc")
}

pub fn grid_patch(lo: &[f64], hi: &[f64], n: &[usize]) -> NurbsPatch<f64> {
    let d = lo.len();
    let kvs: Vec<KnotVector<f64>> = n.iter().map(|&s| KnotVector::uniform(1, s)).collect();
    let counts: Vec<usize> = n.iter().map(|&s| s + 1).collect();
    let total: usize = counts.iter().product();
    let mut pts = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = [0.0; 3];
        for k in 0..d {
            let i = rem % counts[k];
            rem /= counts[k];
            p[k] = if i == n[k] { hi[k] } else { lo[k] + (hi[k] - lo[k]) * i as f64 / n[k] as f64 };
        }
        pts.push(p);
    }
    NurbsPatch::polynomial(kvs, pts).expect("grid patch is well formed")
}

pub fn bar1d(l0: f64, cells_per_section: usize) -> Domain {
    let breaks = [-1.0, -2.0 * l0, 2.0 * l0, 1.0];
    let mut nodes = vec![-1.0];
    for w in breaks.windows(2) {
        for i in 1..=cells_per_section {
            nodes.push(if i == cells_per_section {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * i as f64 / cells_per_section as f64
            });
        }
    }
    let interior: Vec<f64> = nodes[1..nodes.len() - 1].iter().map(|x| (x + 1.0) / 2.0).collect();
    let kv = KnotVector::with_breaks(1, &interior).expect("bar knots are increasing");
    let pts = nodes.iter().map(|&x| [x, 0.0, 0.0]).collect();
    let patch = NurbsPatch::polynomial(vec![kv], pts).expect("bar patch");
    let mesh = ElementMesh::from_patches(std::slice::from_ref(&patch));
    Domain {
        patches: vec![patch],
        mesh,
        loaded_faces: vec![Face { patch: 0, dir: 0, side: 1 }],
        lo: [-1.0, 0.0, 0.0],
        hi: [1.0, 0.0, 0.0],
        holes: Vec::new(),
    }
}

pub fn senp_tension() -> Domain {
    let patch = grid_patch(&[0.0, 0.0], &[1.0, 1.0], &[16, 18]);
    let base = ElementMesh::from_patches(std::slice::from_ref(&patch));
    let mesh = refine_region(
        &base,
        |c| {
            let yc = 0.5 * (c.lo[1] + c.hi[1]);
            match c.level {
                0 => (yc - 0.5).abs() < 1.0 / 6.0,
                1 => (yc - 0.5).abs() < 1.0 / 18.0,
                _ => false,
            }
        },
        2,
    );
    Domain {
        patches: vec![patch],
        mesh,
        loaded_faces: vec![Face { patch: 0, dir: 1, side: 1 }],
        lo: [0.0; 3],
        hi: [1.0, 1.0, 0.0],
        holes: Vec::new(),
    }
}

pub fn cube_tension(n: usize) -> Domain {
    let patch = grid_patch(&[0.0; 3], &[1.0; 3], &[n, n, n]);
    let mesh = ElementMesh::from_patches(std::slice::from_ref(&patch));
    Domain {
        patches: vec![patch],
        mesh,
        loaded_faces: vec![Face { patch: 0, dir: 2, side: 1 }],
        lo: [0.0; 3],
        hi: [1.0; 3],
        holes: Vec::new(),
    }
}

/// Four patches filling the square block of half-width `h` around a hole of
/// radius `r`. Direction 0 runs from the hole outwards, direction 1 follows
/// the arc counter-clockwise.
pub fn hole_block(center: [f64; 2], r: f64, h: f64) -> Vec<NurbsPatch<f64>> {
    let radial = KnotVector::uniform(1, 1);
    let circ = KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2).unwrap();
    let w = [1.0, FRAC_1_SQRT_2, 1.0];
    (0..4)
        .map(|q| {
            let rot = |p: [f64; 2]| -> [f64; 3] {
                let (x, y) = match q {
                    0 => (p[0], p[1]),
                    1 => (-p[1], p[0]),
                    2 => (-p[0], -p[1]),
                    _ => (p[1], -p[0]),
                };
                [center[0] + x, center[1] + y, 0.0]
            };
            let c = FRAC_1_SQRT_2 * r;
            let inner = [[c, -c], [r * std::f64::consts::SQRT_2, 0.0], [c, c]];
            let outer = [[h, -h], [h, 0.0], [h, h]];
            let mut pts = Vec::with_capacity(6);
            let mut weights = Vec::with_capacity(6);
            for j in 0..3 {
                pts.push(rot(inner[j]));
                pts.push(rot(outer[j]));
                weights.push(w[j]);
                weights.push(w[j]);
            }
            NurbsPatch::new(vec![radial.clone(), circ.clone()], pts, weights).expect("hole patch")
        })
        .collect()
}

pub const HOLE_CENTERS: [[f64; 2]; 3] = [[4.0, 2.75], [4.0, 4.75], [4.0, 6.75]];
pub const HOLE_RADIUS: f64 = 0.25;

pub fn asym_bend_3holes() -> Domain {
    let target = 0.5;
    let rect = |x0: f64, x1: f64, y0: f64, y1: f64| {
        let nx = ((x1 - x0) / target).ceil().max(1.0) as usize;
        let ny = ((y1 - y0) / target).ceil().max(1.0) as usize;
        grid_patch(&[x0, y0], &[x1, y1], &[nx, ny])
    };
    let ys = [0.0, 2.25, 3.25, 4.25, 5.25, 6.25, 7.25, 8.0];
    let mut patches = Vec::new();
    for w in ys.windows(2) {
        patches.push(rect(0.0, 3.5, w[0], w[1]));
    }
    for &(y0, y1) in &[(0.0, 2.25), (3.25, 4.25), (5.25, 6.25), (7.25, 8.0)] {
        patches.push(rect(3.5, 4.5, y0, y1));
    }
    for c in HOLE_CENTERS {
        patches.extend(hole_block(c, HOLE_RADIUS, 0.5));
    }
    let xs = [4.5, 7.5, 12.5, 20.0];
    for w in xs.windows(2) {
        patches.push(rect(w[0], w[1], 0.0, 4.0));
        patches.push(rect(w[0], w[1], 4.0, 8.0));
    }
    debug_assert_eq!(patches.len(), 29);
    let base = ElementMesh::from_patches(&patches);
    let refined = {
        let pts = &patches;
        refine_region(
            &base,
            |c| {
                let xc = pts[c.patch].point(&c.center(2)).unwrap();
                c.level == 0 && (3.0..=8.0).contains(&xc[0]) && xc[1] <= 6.0
            },
            1,
        )
    };
    let top = |p: &NurbsPatch<f64>| {
        let y = p.point(&[0.5, 1.0]).unwrap()[1];
        p.knot_vectors()[1].degree() == 1 && (y - 8.0).abs() < 1e-12
    };
    let loaded_faces = patches
        .iter()
        .enumerate()
        .filter(|(_, p)| top(p))
        .map(|(i, _)| Face { patch: i, dir: 1, side: 1 })
        .collect();
    Domain {
        patches,
        mesh: refined,
        loaded_faces,
        lo: [0.0; 3],
        hi: [20.0, 8.0, 0.0],
        holes: HOLE_CENTERS.iter().map(|&c| (c, HOLE_RADIUS)).collect(),
    }
}
