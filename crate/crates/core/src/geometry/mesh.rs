use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Zero};

use super::NurbsPatch;

/// Parametric element: a dyadic sub-box of one knot span of one patch.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell<F> {
    pub patch: usize,
    /// Knot index of the enclosing level-0 span, per direction.
    pub span: [usize; 3],
    pub level: u32,
    /// Position of the cell inside its span on the `2^level` lattice.
    pub sub: [u64; 3],
    pub lo: [F; 3],
    pub hi: [F; 3],
}

impl<F: Float> Cell<F> {
    pub fn center(&self, d: usize) -> Vec<F> {
        let two = F::one() + F::one();
        (0..d).map(|k| (self.lo[k] + self.hi[k]) / two).collect()
    }

    pub fn volume(&self, d: usize) -> F {
        (0..d).fold(F::one(), |acc, k| acc * (self.hi[k] - self.lo[k]))
    }
}

/// Quadtree/octree refined element set over one or more patches.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMesh<F> {
    dim: usize,
    cells: Vec<Cell<F>>,
    /// Level-0 span bounds per patch and direction, used to place children.
    spans: Vec<Vec<Vec<(usize, F, F)>>>,
}

impl<F: Float> ElementMesh<F> {
    /// Level-0 tensor-product mesh: one cell per non-empty knot span.
    pub fn from_patches(patches: &[NurbsPatch<F>]) -> Self {
        let dim = patches.first().map(|p| p.dim()).unwrap_or(0);
        let mut cells = Vec::new();
        let mut spans = Vec::new();
        for (pid, patch) in patches.iter().enumerate() {
            assert_eq!(patch.dim(), dim, "all patches must share a dimension");
            let dirs: Vec<Vec<(usize, F, F)>> = patch.knot_vectors().iter().map(|kv| kv.spans()).collect();
            let counts: Vec<usize> = dirs.iter().map(Vec::len).collect();
            let total: usize = counts.iter().product();
            for flat in 0..total {
                let mut rem = flat;
                let mut cell = Cell {
                    patch: pid,
                    span: [0; 3],
                    level: 0,
                    sub: [0; 3],
                    lo: [F::zero(); 3],
                    hi: [F::zero(); 3],
                };
                for k in 0..dim {
                    let (s, lo, hi) = dirs[k][rem % counts[k]];
                    rem /= counts[k];
                    cell.span[k] = s;
                    cell.lo[k] = lo;
                    cell.hi[k] = hi;
                }
                cells.push(cell);
            }
            spans.push(dirs);
        }
        let mut mesh = ElementMesh { dim, cells, spans };
        mesh.sort();
        mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[Cell<F>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn span_bounds(&self, patch: usize, dir: usize, knot: usize) -> (F, F) {
        let (_, lo, hi) = *self.spans[patch][dir].iter().find(|s| s.0 == knot).expect("span belongs to the patch");
        (lo, hi)
    }

    fn split(&self, cell: &Cell<F>) -> Vec<Cell<F>> {
        let d = self.dim;
        let level = cell.level + 1;
        let denom = F::from(1u64 << level).unwrap();
        (0..(1usize << d))
            .map(|corner| {
                let mut child = cell.clone();
                child.level = level;
                for k in 0..d {
                    let bit = (corner >> k & 1) as u64;
                    child.sub[k] = 2 * cell.sub[k] + bit;
                    let (a, b) = self.span_bounds(cell.patch, k, cell.span[k]);
                    let w = b - a;
                    child.lo[k] = a + w * F::from(child.sub[k]).unwrap() / denom;
                    child.hi[k] = if child.sub[k] + 1 == 1u64 << level {
                        b
                    } else {
                        a + w * F::from(child.sub[k] + 1).unwrap() / denom
                    };
                }
                child
            })
            .collect()
    }

    /// Canonical order: patch, then lower corner with the last direction
    /// most significant.
    fn sort(&mut self) {
        let d = self.dim;
        self.cells.sort_by(|a, b| {
            a.patch.cmp(&b.patch).then_with(|| {
                for k in (0..d).rev() {
                    let o = a.lo[k].partial_cmp(&b.lo[k]).unwrap();
                    if o != std::cmp::Ordering::Equal {
                        return o;
                    }
                }
                std::cmp::Ordering::Equal
            })
        });
    }

    /// Exact parametric volume covered by the cells of `patch`.
    pub fn exact_parametric_volume(&self, patch: usize) -> BigRational {
        let mut total = BigRational::zero();
        for c in self.cells.iter().filter(|c| c.patch == patch) {
            let mut v = BigRational::one();
            for k in 0..self.dim {
                let (a, b) = self.span_bounds(patch, k, c.span[k]);
                let a = BigRational::from_float(a.to_f64().unwrap()).unwrap();
                let b = BigRational::from_float(b.to_f64().unwrap()).unwrap();
                v *= b - a;
            }
            let scale = BigRational::from_integer(BigInt::one() << (c.level as usize * self.dim));
            total += v / scale;
        }
        total
    }
}

/// Apply `levels` passes of cross insertion: in each pass every cell for
/// which `predicate` holds is replaced by its `2^d` children.
pub fn refine_region<F: Float, P>(mesh: &ElementMesh<F>, predicate: P, levels: usize) -> ElementMesh<F>
where
    P: Fn(&Cell<F>) -> bool,
{
    let mut out = mesh.clone();
    for _ in 0..levels {
        let mut next = Vec::with_capacity(out.cells.len());
        for cell in &out.cells {
            if predicate(cell) {
                next.extend(out.split(cell));
            } else {
                next.push(cell.clone());
            }
        }
        out.cells = next;
        out.sort();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_mesh(n: usize) -> (NurbsPatch<f64>, ElementMesh<f64>) {
        let kv = super::super::KnotVector::uniform(1, n);
        let mut pts = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                pts.push([i as f64 / n as f64, j as f64 / n as f64, 0.0]);
            }
        }
        let p = NurbsPatch::polynomial(vec![kv.clone(), kv], pts).unwrap();
        let m = ElementMesh::from_patches(std::slice::from_ref(&p));
        (p, m)
    }

    #[test]
    fn one_marked_cell_adds_three() {
        let (_, m) = unit_square_mesh(4);
        let target = m.cells()[5].clone();
        let r = refine_region(&m, |c| c.level == 0 && c.lo == target.lo, 1);
        assert_eq!(r.len(), m.len() + 3);
        assert_eq!(r.exact_parametric_volume(0), BigRational::one());
    }

    #[test]
    fn false_predicate_leaves_mesh_unchanged() {
        let (_, m) = unit_square_mesh(3);
        assert_eq!(refine_region(&m, |_| false, 4), m);
    }

    #[test]
    fn children_tile_parent() {
        let (_, m) = unit_square_mesh(1);
        let r = refine_region(&m, |_| true, 3);
        assert_eq!(r.len(), 64);
        let total: f64 = r.cells().iter().map(|c| c.volume(2)).sum();
        assert_eq!(total, 1.0);
        for (i, a) in r.cells().iter().enumerate() {
            for b in &r.cells()[i + 1..] {
                let overlap = (0..2).all(|k| a.lo[k] < b.hi[k] && b.lo[k] < a.hi[k]);
                assert!(!overlap);
            }
        }
    }

    #[test]
    fn non_dyadic_knots_still_conserve_volume_exactly() {
        let kv = super::super::KnotVector::uniform(1, 18);
        let kx = super::super::KnotVector::uniform(1, 7);
        let mut pts = Vec::new();
        for j in 0..=18 {
            for i in 0..=7 {
                pts.push([i as f64, j as f64, 0.0]);
            }
        }
        let p = NurbsPatch::polynomial(vec![kx, kv], pts).unwrap();
        let m = ElementMesh::from_patches(&[p]);
        let r = refine_region(&m, |c| c.center(2)[1] > 0.3 && c.center(2)[1] < 0.6, 3);
        // span widths telescope, so the sum is exactly one even for knots like 1/18
        assert_eq!(r.exact_parametric_volume(0), BigRational::one());
        assert!(r.len() > m.len());
    }
}
