//! Rectangle domains, the Neumann Laplacian eigenbasis, and exact transforms
//! between cell-midpoint and spectral representations.
//!
//! The basis consists of tensor-product cosine modes collocated at cell
//! midpoints, so the discrete transform pair is exactly orthogonal (DCT-II)
//! and `to_grid(to_spectral(f)) == f` to machine precision.

use crate::error::{FhksError, Result};
use std::f64::consts::PI;
use std::sync::Arc;

/// Which eigenvalue symbol the basis carries.
///
/// `Discrete` uses the eigenvalues of the standard cell-centered Neumann
/// second-difference stencil, which makes dense-matrix oracles agree to
/// machine precision. `Continuum` uses (k pi / L)^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolMode {
    Continuum,
    Discrete,
}

/// A rectangle domain: one length and one cell count per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    lengths: Vec<f64>,
    cells: Vec<usize>,
    symbol_mode: SymbolMode,
}

impl DomainSpec {
    pub fn new(lengths: Vec<f64>, cells: Vec<usize>, symbol_mode: SymbolMode) -> Result<Self> {
        let dim = lengths.len();
        if dim == 0 || dim > 2 {
            return Err(FhksError::InvalidDomain(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if cells.len() != dim {
            return Err(FhksError::InvalidDomain(format!(
                "{} lengths but {} cell counts",
                dim,
                cells.len()
            )));
        }
        for (&l, &n) in lengths.iter().zip(&cells) {
            if !(l > 0.0 && l.is_finite()) {
                return Err(FhksError::InvalidDomain(format!("length {l} not positive")));
            }
            if n < 2 {
                return Err(FhksError::InvalidDomain(format!(
                    "cell count {n} < 2 on an axis"
                )));
            }
        }
        Ok(DomainSpec {
            lengths,
            cells,
            symbol_mode,
        })
    }

    pub fn line(length: f64, n: usize, symbol_mode: SymbolMode) -> Result<Self> {
        Self::new(vec![length], vec![n], symbol_mode)
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn symbol_mode(&self) -> SymbolMode {
        self.symbol_mode
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// |Omega|
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Cell width along one axis.
    pub fn h(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dimension()).map(|d| self.h(d)).product()
    }

    /// Midpoint coordinate of cell `i` along `axis`.
    pub fn midpoint(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h(axis)
    }

    /// Row-major linear index of a cell multi-index (axis 0 slowest).
    pub fn cell_index(&self, idx: &[usize]) -> usize {
        match self.dimension() {
            1 => idx[0],
            2 => idx[0] * self.cells[1] + idx[1],
            _ => unreachable!(),
        }
    }
}

/// Neumann eigenpairs for a rectangle: tensor-product cosine modes with the
/// zero mode first, ordered lexicographically by multi-index.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    domain: DomainSpec,
    modes: Vec<Vec<usize>>,
    eigenvalues: Vec<f64>,
    /// Per-axis synthesis tables: `phi[d][k * N_d + i]` = 1D mode k at midpoint i.
    phi: Vec<Vec<f64>>,
    /// Per-axis derivative tables at faces: `dphi_face[d][k * (N_d+1) + j]`.
    dphi_face: Vec<Vec<f64>>,
    /// Per-axis derivative tables at midpoints: `dphi_mid[d][k * N_d + i]`.
    dphi_mid: Vec<Vec<f64>>,
    lambda_min_positive: f64,
    lambda_max: f64,
}

/// Builds the eigenbasis for a rectangle domain. Truncation equals grid
/// resolution: one mode per cell per axis, so transforms are bijective.
pub fn build_basis(domain: &DomainSpec) -> EigenBasis {
    let dim = domain.dimension();
    let mut phi = Vec::with_capacity(dim);
    let mut dphi_face = Vec::with_capacity(dim);
    let mut dphi_mid = Vec::with_capacity(dim);
    let mut axis_eigs: Vec<Vec<f64>> = Vec::with_capacity(dim);

    for d in 0..dim {
        let n = domain.cells()[d];
        let l = domain.lengths()[d];
        let h = domain.h(d);
        let mut tab = vec![0.0; n * n];
        let mut dtab_face = vec![0.0; n * (n + 1)];
        let mut dtab_mid = vec![0.0; n * n];
        let mut eigs = Vec::with_capacity(n);
        for k in 0..n {
            let norm = if k == 0 {
                (1.0 / l).sqrt()
            } else {
                (2.0 / l).sqrt()
            };
            let freq = k as f64 * PI / l;
            for i in 0..n {
                let x = domain.midpoint(d, i);
                tab[k * n + i] = norm * (freq * x).cos();
                dtab_mid[k * n + i] = -norm * freq * (freq * x).sin();
            }
            for j in 0..=n {
                // interior faces; boundary faces are exactly 0 (sine vanishes)
                dtab_face[k * (n + 1) + j] = if j == 0 || j == n {
                    0.0
                } else {
                    let x = j as f64 * h;
                    -norm * freq * (freq * x).sin()
                };
            }
            let lam = match domain.symbol_mode() {
                SymbolMode::Continuum => freq * freq,
                SymbolMode::Discrete => {
                    let s = (k as f64 * PI / (2.0 * n as f64)).sin();
                    4.0 / (h * h) * s * s
                }
            };
            eigs.push(if k == 0 { 0.0 } else { lam });
        }
        phi.push(tab);
        dphi_face.push(dtab_face);
        dphi_mid.push(dtab_mid);
        axis_eigs.push(eigs);
    }

    let mut modes = Vec::with_capacity(domain.total_cells());
    let mut eigenvalues = Vec::with_capacity(domain.total_cells());
    match dim {
        1 => {
            for k in 0..domain.cells()[0] {
                modes.push(vec![k]);
                eigenvalues.push(axis_eigs[0][k]);
            }
        }
        2 => {
            for k0 in 0..domain.cells()[0] {
                for k1 in 0..domain.cells()[1] {
                    modes.push(vec![k0, k1]);
                    eigenvalues.push(axis_eigs[0][k0] + axis_eigs[1][k1]);
                }
            }
        }
        _ => unreachable!(),
    }

    let lambda_min_positive = eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > 0.0)
        .fold(f64::INFINITY, f64::min);
    let lambda_max = eigenvalues.iter().copied().fold(0.0, f64::max);

    EigenBasis {
        domain: domain.clone(),
        modes,
        eigenvalues,
        phi,
        dphi_face,
        dphi_mid,
        lambda_min_positive,
        lambda_max,
    }
}

impl EigenBasis {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn modes(&self) -> &[Vec<usize>] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Smallest nonzero eigenvalue (lambda_1).
    pub fn lambda_1(&self) -> f64 {
        self.lambda_min_positive
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Mode value at a cell midpoint, by linear mode and cell index.
    pub fn mode_value(&self, mode: usize, cell: &[usize]) -> f64 {
        let k = &self.modes[mode];
        let mut v = 1.0;
        for d in 0..self.domain.dimension() {
            let n = self.domain.cells()[d];
            v *= self.phi[d][k[d] * n + cell[d]];
        }
        v
    }

    /// A grid field sampling mode `m` at cell midpoints.
    pub fn mode_field(&self, m: usize) -> GridField {
        let mut f = GridField::zeros(&self.domain);
        match self.domain.dimension() {
            1 => {
                let n = self.domain.cells()[0];
                let k = self.modes[m][0];
                for i in 0..n {
                    f.values_mut()[i] = self.phi[0][k * n + i];
                }
            }
            2 => {
                let (n0, n1) = (self.domain.cells()[0], self.domain.cells()[1]);
                let (k0, k1) = (self.modes[m][0], self.modes[m][1]);
                for i0 in 0..n0 {
                    for i1 in 0..n1 {
                        f.values_mut()[i0 * n1 + i1] =
                            self.phi[0][k0 * n0 + i0] * self.phi[1][k1 * n1 + i1];
                    }
                }
            }
            _ => unreachable!(),
        }
        f
    }
}

/// A scalar field at cell midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
    domain: DomainSpec,
}

impl GridField {
    pub fn new(values: Vec<f64>, domain: &DomainSpec) -> Result<Self> {
        if values.len() != domain.total_cells() {
            return Err(FhksError::DomainMismatch(format!(
                "{} values for {} cells",
                values.len(),
                domain.total_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FhksError::InvalidDomain(
                "non-finite entry in grid field".into(),
            ));
        }
        Ok(GridField {
            values,
            domain: domain.clone(),
        })
    }

    pub fn zeros(domain: &DomainSpec) -> Self {
        GridField {
            values: vec![0.0; domain.total_cells()],
            domain: domain.clone(),
        }
    }

    pub fn constant(c: f64, domain: &DomainSpec) -> Self {
        GridField {
            values: vec![c; domain.total_cells()],
            domain: domain.clone(),
        }
    }

    /// Sample a function of the midpoint coordinates.
    pub fn from_fn(domain: &DomainSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = Vec::with_capacity(domain.total_cells());
        match domain.dimension() {
            1 => {
                for i in 0..domain.cells()[0] {
                    values.push(f(&[domain.midpoint(0, i)]));
                }
            }
            2 => {
                for i0 in 0..domain.cells()[0] {
                    for i1 in 0..domain.cells()[1] {
                        values.push(f(&[domain.midpoint(0, i0), domain.midpoint(1, i1)]));
                    }
                }
            }
            _ => unreachable!(),
        }
        GridField {
            values,
            domain: domain.clone(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Midpoint quadrature of the field over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.cell_volume()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            domain: self.domain.clone(),
        }
    }

    pub fn linf_distance(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l1_distance(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.domain.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        (self
            .values
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            * self.domain.cell_volume())
        .sqrt()
    }
}

/// Midpoint quadrature of `integral(f * g)`. Symmetric bilinear.
pub fn inner_product(f: &GridField, g: &GridField) -> Result<f64> {
    if f.domain() != g.domain() {
        return Err(FhksError::DomainMismatch(
            "inner product of fields on different domains".into(),
        ));
    }
    Ok(f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * f.domain().cell_volume())
}

/// A scalar field in coefficient space: one coefficient per basis mode.
#[derive(Debug, Clone)]
pub struct SpectralField {
    coeffs: Vec<f64>,
    basis: Arc<EigenBasis>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>, basis: &Arc<EigenBasis>) -> Result<Self> {
        if coeffs.len() != basis.mode_count() {
            return Err(FhksError::DomainMismatch(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                basis.mode_count()
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(FhksError::InvalidDomain(
                "non-finite spectral coefficient".into(),
            ));
        }
        Ok(SpectralField {
            coeffs,
            basis: Arc::clone(basis),
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    /// Parseval: sum of squared coefficients.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Spectral Dirichlet energy sum(lambda_k c_k^2), the discrete |grad f|^2.
    pub fn gradient_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.basis.eigenvalues())
            .map(|(c, &l)| l * c * c)
            .sum()
    }

    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
    }
}

/// Forward transform: midpoint quadrature of `<f, phi_k>` for every mode.
pub fn to_spectral(f: &GridField, basis: &Arc<EigenBasis>) -> Result<SpectralField> {
    if f.domain() != basis.domain() {
        return Err(FhksError::DomainMismatch(
            "field and basis built on different domains".into(),
        ));
    }
    let dom = basis.domain();
    let coeffs = match dom.dimension() {
        1 => {
            let n = dom.cells()[0];
            let h = dom.h(0);
            let mut c = vec![0.0; n];
            for k in 0..n {
                let row = &basis.phi[0][k * n..(k + 1) * n];
                c[k] = h * row
                    .iter()
                    .zip(f.values())
                    .map(|(p, v)| p * v)
                    .sum::<f64>();
            }
            c
        }
        2 => {
            let (n0, n1) = (dom.cells()[0], dom.cells()[1]);
            let vol = dom.cell_volume();
            // contract axis 1 first: tmp[i0, k1] = sum_i1 f[i0,i1] phi1[k1,i1]
            let mut tmp = vec![0.0; n0 * n1];
            for i0 in 0..n0 {
                for k1 in 0..n1 {
                    let row = &basis.phi[1][k1 * n1..(k1 + 1) * n1];
                    tmp[i0 * n1 + k1] = row
                        .iter()
                        .zip(&f.values()[i0 * n1..(i0 + 1) * n1])
                        .map(|(p, v)| p * v)
                        .sum();
                }
            }
            let mut c = vec![0.0; n0 * n1];
            for k0 in 0..n0 {
                let row = &basis.phi[0][k0 * n0..(k0 + 1) * n0];
                for k1 in 0..n1 {
                    c[k0 * n1 + k1] = vol
                        * (0..n0).map(|i0| row[i0] * tmp[i0 * n1 + k1]).sum::<f64>();
                }
            }
            c
        }
        _ => unreachable!(),
    };
    SpectralField::new(coeffs, basis)
}

/// Pointwise synthesis of the truncated series at cell midpoints.
pub fn to_grid(field: &SpectralField) -> GridField {
    let basis = field.basis();
    let dom = basis.domain();
    let values = match dom.dimension() {
        1 => {
            let n = dom.cells()[0];
            let mut v = vec![0.0; n];
            for k in 0..n {
                let c = field.coeffs()[k];
                if c == 0.0 {
                    continue;
                }
                let row = &basis.phi[0][k * n..(k + 1) * n];
                for i in 0..n {
                    v[i] += c * row[i];
                }
            }
            v
        }
        2 => {
            let (n0, n1) = (dom.cells()[0], dom.cells()[1]);
            // tmp[i0, k1] = sum_k0 c[k0,k1] phi0[k0,i0]
            let mut tmp = vec![0.0; n0 * n1];
            for k0 in 0..n0 {
                let row = &basis.phi[0][k0 * n0..(k0 + 1) * n0];
                for i0 in 0..n0 {
                    let p = row[i0];
                    if p == 0.0 {
                        continue;
                    }
                    for k1 in 0..n1 {
                        tmp[i0 * n1 + k1] += field.coeffs()[k0 * n1 + k1] * p;
                    }
                }
            }
            let mut v = vec![0.0; n0 * n1];
            for i0 in 0..n0 {
                for i1 in 0..n1 {
                    let row = &basis.phi[1];
                    v[i0 * n1 + i1] = (0..n1)
                        .map(|k1| tmp[i0 * n1 + k1] * row[k1 * n1 + i1])
                        .sum();
                }
            }
            v
        }
        _ => unreachable!(),
    };
    GridField {
        values,
        domain: dom.clone(),
    }
}

/// One gradient component, evaluated at the faces orthogonal to `axis`.
/// Shape along `axis` is N+1 (faces); the other axes keep cell midpoints.
/// Normal components at boundary faces are exactly zero.
#[derive(Debug, Clone)]
pub struct FaceField {
    axis: usize,
    values: Vec<f64>,
    domain: DomainSpec,
}

impl FaceField {
    pub fn zeros(axis: usize, domain: &DomainSpec) -> Self {
        let n = domain.total_cells() / domain.cells()[axis] * (domain.cells()[axis] + 1);
        FaceField {
            axis,
            values: vec![0.0; n],
            domain: domain.clone(),
        }
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Linear index of the face `j` along the gradient axis with cross-cell
    /// index `cross` (the remaining cell indices, row-major).
    pub fn index(&self, j: usize, cross: usize) -> usize {
        match self.domain.dimension() {
            1 => j,
            2 => {
                if self.axis == 0 {
                    let n1 = self.domain.cells()[1];
                    j * n1 + cross
                } else {
                    let n1 = self.domain.cells()[1];
                    cross * (n1 + 1) + j
                }
            }
            _ => unreachable!(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Term-wise derivative of the cosine series, one component per axis,
/// evaluated at cell faces.
pub fn gradient(field: &SpectralField) -> Vec<FaceField> {
    let basis = field.basis();
    let dom = basis.domain();
    let dim = dom.dimension();
    let mut out = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut ff = FaceField::zeros(axis, dom);
        match dim {
            1 => {
                let n = dom.cells()[0];
                for k in 1..n {
                    let c = field.coeffs()[k];
                    if c == 0.0 {
                        continue;
                    }
                    let row = &basis.dphi_face[0][k * (n + 1)..(k + 1) * (n + 1)];
                    for j in 0..=n {
                        ff.values[j] += c * row[j];
                    }
                }
            }
            2 => {
                let (n0, n1) = (dom.cells()[0], dom.cells()[1]);
                if axis == 0 {
                    // values[j * n1 + i1] = sum_{k0,k1} c dphi0[k0,j] phi1[k1,i1]
                    // contract k1 first: tmp[k0, i1]
                    let mut tmp = vec![0.0; n0 * n1];
                    for k0 in 0..n0 {
                        for k1 in 0..n1 {
                            let c = field.coeffs()[k0 * n1 + k1];
                            if c == 0.0 {
                                continue;
                            }
                            let row = &basis.phi[1][k1 * n1..(k1 + 1) * n1];
                            for i1 in 0..n1 {
                                tmp[k0 * n1 + i1] += c * row[i1];
                            }
                        }
                    }
                    for k0 in 1..n0 {
                        let drow = &basis.dphi_face[0][k0 * (n0 + 1)..(k0 + 1) * (n0 + 1)];
                        for j in 0..=n0 {
                            let dp = drow[j];
                            if dp == 0.0 {
                                continue;
                            }
                            for i1 in 0..n1 {
                                ff.values[j * n1 + i1] += dp * tmp[k0 * n1 + i1];
                            }
                        }
                    }
                } else {
                    let mut tmp = vec![0.0; n0 * n1];
                    for k0 in 0..n0 {
                        let row = &basis.phi[0][k0 * n0..(k0 + 1) * n0];
                        for i0 in 0..n0 {
                            let p = row[i0];
                            if p == 0.0 {
                                continue;
                            }
                            for k1 in 0..n1 {
                                tmp[i0 * n1 + k1] += field.coeffs()[k0 * n1 + k1] * p;
                            }
                        }
                    }
                    for i0 in 0..n0 {
                        for k1 in 1..n1 {
                            let c = tmp[i0 * n1 + k1];
                            if c == 0.0 {
                                continue;
                            }
                            let drow = &basis.dphi_face[1][k1 * (n1 + 1)..(k1 + 1) * (n1 + 1)];
                            for j in 0..=n1 {
                                ff.values[i0 * (n1 + 1) + j] += c * drow[j];
                            }
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        out.push(ff);
    }
    out
}

/// Term-wise derivative components evaluated at cell midpoints.
pub fn gradient_at_centers(field: &SpectralField) -> Vec<GridField> {
    let basis = field.basis();
    let dom = basis.domain();
    let dim = dom.dimension();
    let mut out = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut g = GridField::zeros(dom);
        match dim {
            1 => {
                let n = dom.cells()[0];
                for k in 1..n {
                    let c = field.coeffs()[k];
                    if c == 0.0 {
                        continue;
                    }
                    let row = &basis.dphi_mid[0][k * n..(k + 1) * n];
                    for i in 0..n {
                        g.values[i] += c * row[i];
                    }
                }
            }
            2 => {
                let (n0, n1) = (dom.cells()[0], dom.cells()[1]);
                let (a_tab, b_tab) = if axis == 0 {
                    (&basis.dphi_mid[0], &basis.phi[1])
                } else {
                    (&basis.phi[0], &basis.dphi_mid[1])
                };
                // tmp[i0, k1] = sum_k0 c[k0,k1] a_tab[k0, i0]
                let mut tmp = vec![0.0; n0 * n1];
                for k0 in 0..n0 {
                    let row = &a_tab[k0 * n0..(k0 + 1) * n0];
                    for i0 in 0..n0 {
                        let p = row[i0];
                        if p == 0.0 {
                            continue;
                        }
                        for k1 in 0..n1 {
                            tmp[i0 * n1 + k1] += field.coeffs()[k0 * n1 + k1] * p;
                        }
                    }
                }
                for i0 in 0..n0 {
                    for i1 in 0..n1 {
                        g.values[i0 * n1 + i1] = (0..n1)
                            .map(|k1| tmp[i0 * n1 + k1] * b_tab[k1 * n1 + i1])
                            .sum();
                    }
                }
            }
            _ => unreachable!(),
        }
        out.push(g);
    }
    out
}

/// Projects the divergence of a center-evaluated vector field onto the basis
/// through integration by parts: `<div G, phi_k> = -<G, grad phi_k>`.
/// Valid when the normal component of G vanishes on the boundary.
pub fn divergence_coeffs(components: &[GridField], basis: &Arc<EigenBasis>) -> Result<SpectralField> {
    let dom = basis.domain();
    let dim = dom.dimension();
    if components.len() != dim {
        return Err(FhksError::DomainMismatch(format!(
            "{} components for dimension {}",
            components.len(),
            dim
        )));
    }
    let vol = dom.cell_volume();
    let mut coeffs = vec![0.0; basis.mode_count()];
    match dim {
        1 => {
            let n = dom.cells()[0];
            for k in 1..n {
                let row = &basis.dphi_mid[0][k * n..(k + 1) * n];
                coeffs[k] = -vol
                    * row
                        .iter()
                        .zip(components[0].values())
                        .map(|(p, v)| p * v)
                        .sum::<f64>();
            }
        }
        2 => {
            let (n0, n1) = (dom.cells()[0], dom.cells()[1]);
            for axis in 0..2 {
                let g = &components[axis];
                let (a_tab, b_tab) = if axis == 0 {
                    (&basis.dphi_mid[0], &basis.phi[1])
                } else {
                    (&basis.phi[0], &basis.dphi_mid[1])
                };
                // tmp[k0, i1] = sum_i0 g[i0,i1] a_tab[k0,i0]
                let mut tmp = vec![0.0; n0 * n1];
                for k0 in 0..n0 {
                    let row = &a_tab[k0 * n0..(k0 + 1) * n0];
                    for i0 in 0..n0 {
                        let p = row[i0];
                        if p == 0.0 {
                            continue;
                        }
                        for i1 in 0..n1 {
                            tmp[k0 * n1 + i1] += g.values()[i0 * n1 + i1] * p;
                        }
                    }
                }
                for k0 in 0..n0 {
                    for k1 in 0..n1 {
                        let row = &b_tab[k1 * n1..(k1 + 1) * n1];
                        coeffs[k0 * n1 + k1] -= vol
                            * (0..n1).map(|i1| tmp[k0 * n1 + i1] * row[i1]).sum::<f64>();
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    SpectralField::new(coeffs, basis)
}
