use nalgebra::DMatrix;

/// Combinatorial Laplacian `L = D - A`, stored sparsely by its edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian {
    n: usize,
    degrees: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl Laplacian {
    /// `edges` must be canonical pairs `i < j < n` without repeats.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degrees = vec![0usize; n];
        for &(i, j) in &edges {
            debug_assert!(i < j && j < n);
            degrees[i] += 1;
            degrees[j] += 1;
        }
        Self { n, degrees, edges }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn trace(&self) -> f64 {
        self.degrees.iter().sum::<usize>() as f64
    }

    /// Row sums in exact integer arithmetic.
    pub fn row_sums(&self) -> Vec<i64> {
        let mut sums: Vec<i64> = self.degrees.iter().map(|&d| d as i64).collect();
        for &(i, j) in &self.edges {
            sums[i] -= 1;
            sums[j] -= 1;
        }
        sums
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, &d) in self.degrees.iter().enumerate() {
            m[(i, i)] = d as f64;
        }
        for &(i, j) in &self.edges {
            m[(i, j)] = -1.0;
            m[(j, i)] = -1.0;
        }
        m
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .degrees
            .iter()
            .zip(v)
            .map(|(&d, &x)| d as f64 * x)
            .collect();
        for &(i, j) in &self.edges {
            out[i] -= v[j];
            out[j] -= v[i];
        }
        out
    }

    /// `vᵀ L v = Σ_{(i,j) ∈ E} (v_i - v_j)²`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.edges.iter().map(|&(i, j)| (v[i] - v[j]).powi(2)).sum()
    }
}
