//! Trapezoidal quadrature over one lattice cell. For trigonometric polynomials
//! of degree below the number of nodes the rule is exact.

use num_complex::Complex64;

use crate::bloch::BlochFunction;
use crate::potentials::PeriodicFunction;

/// Minimum number of quadrature nodes per cell.
pub const MIN_NODES: usize = 2048;

#[derive(Clone, Debug)]
pub struct CellQuadrature {
    length: f64,
    points: Vec<f64>,
}

impl CellQuadrature {
    /// `nodes` equispaced points on `[0, length)`.
    pub fn new(length: f64, nodes: usize) -> Self {
        let h = length / nodes as f64;
        Self {
            length,
            points: (0..nodes).map(|j| j as f64 * h).collect(),
        }
    }

    /// Enough nodes for quartic products of modes with `cutoff` harmonics.
    pub fn for_cutoff(length: f64, cutoff: usize) -> Self {
        Self::new(length, MIN_NODES.max((8 * (cutoff + 4)).next_power_of_two()))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weight(&self) -> f64 {
        self.length / self.points.len() as f64
    }

    /// Samples of a Bloch function whose period divides the cell length.
    pub fn mode(&self, p: &BlochFunction) -> Vec<Complex64> {
        let cells = (self.length / p.period()).round() as usize;
        let n = self.points.len();
        if cells >= 1 && n.is_multiple_of(cells) && ((cells as f64) * p.period() - self.length).abs() < 1e-9 * self.length {
            let one = p.sample_cell(n / cells);
            one.iter().cycle().take(n).copied().collect()
        } else {
            p.evaluate(&self.points)
        }
    }

    pub fn function(&self, f: &PeriodicFunction) -> Vec<Complex64> {
        f.evaluate(&self.points)
    }

    /// `⟨f, g⟩ = ∫ f · conj(g)`.
    pub fn inner(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        debug_assert_eq!(f.len(), g.len());
        let s: Complex64 = f.iter().zip(g).map(|(a, b)| a * b.conj()).sum();
        s * self.weight()
    }
}

/// Pointwise product of sample vectors.
pub fn product(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}
