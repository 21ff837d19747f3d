use super::basis::FockBasis;
use crate::error::{GpkError, Result};
use crate::linalg::CMatrix;
use num_complex::Complex64;
use sprs::{CsMat, TriMat};

/// Sparse operator on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub matrix: CsMat<Complex64>,
    pub hermitian: bool,
    pub particle_conserving: bool,
}

/// Accumulates normal-ordered monomials c · a†_{i1}…a†_{ik} a_{j1}…a_{jm}.
///
/// Matrix elements are computed by acting on occupation vectors, so every
/// monomial is the exact restriction of the infinite-dimensional operator
/// followed by truncation of components above n_max.
pub struct OperatorBuilder<'a> {
    basis: &'a FockBasis,
    triplets: TriMat<Complex64>,
    hermitian: bool,
    particle_conserving: bool,
}

impl<'a> OperatorBuilder<'a> {
    pub fn new(basis: &'a FockBasis) -> Self {
        OperatorBuilder {
            basis,
            triplets: TriMat::new((basis.dim, basis.dim)),
            hermitian: false,
            particle_conserving: true,
        }
    }

    pub fn add(&mut self, coeff: Complex64, creators: &[usize], annihilators: &[usize]) -> &mut Self {
        if coeff == Complex64::new(0.0, 0.0) {
            return self;
        }
        if creators.len() != annihilators.len() {
            self.particle_conserving = false;
        }
        let mut occ = vec![0u16; self.basis.d];
        for col in 0..self.basis.dim {
            occ.copy_from_slice(self.basis.state(col));
            let mut amp = 1.0;
            let mut alive = true;
            for &j in annihilators.iter().rev() {
                if occ[j] == 0 {
                    alive = false;
                    break;
                }
                amp *= (occ[j] as f64).sqrt();
                occ[j] -= 1;
            }
            if !alive {
                continue;
            }
            for &i in creators.iter().rev() {
                occ[i] += 1;
                amp *= (occ[i] as f64).sqrt();
            }
            if let Some(row) = self.basis.index_of(&occ) {
                self.triplets.add_triplet(row, col, coeff * amp);
            }
        }
        self
    }

    /// Declare the sum Hermitian (checked by callers that build it from Hermitian data).
    pub fn hermitian(&mut self) -> &mut Self {
        self.hermitian = true;
        self
    }

    pub fn build(&self) -> FockOperator {
        FockOperator {
            matrix: self.triplets.to_csr(),
            hermitian: self.hermitian,
            particle_conserving: self.particle_conserving,
        }
    }
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (col, &val) in vec.iter() {
                acc += val * v[col];
            }
            out[row] = acc;
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> FockOperator {
        let t = self.matrix.transpose_view().to_csr().map(|z| z.conj());
        FockOperator { matrix: t, hermitian: self.hermitian, particle_conserving: self.particle_conserving }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            for (col, &val) in vec.iter() {
                m[(row, col)] += val;
            }
        }
        m
    }

    /// Largest absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.dim()];
        for vec in self.matrix.outer_iterator() {
            for (col, val) in vec.iter() {
                sums[col] += val.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> FockOperator {
        FockOperator {
            matrix: self.matrix.map(|z| z * c),
            hermitian: self.hermitian && c.im == 0.0,
            particle_conserving: self.particle_conserving,
        }
    }

    /// Max |(AB − BA)_{ij}|.
    pub fn commutator_max(&self, other: &FockOperator) -> f64 {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        let diff = &ab - &ba;
        diff.iter().fold(0.0, |acc, (z, _)| acc.max(z.norm()))
    }

    /// Max |A − A†| entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.matrix - &self.adjoint().matrix;
        diff.iter().fold(0.0, |acc, (z, _)| acc.max(z.norm()))
    }
}

/// (a, a†) for one mode.
pub fn ladder(basis: &FockBasis, mode: usize) -> Result<(FockOperator, FockOperator)> {
    if mode >= basis.d {
        return Err(GpkError::Config(format!("mode {mode} out of range for d = {}", basis.d)));
    }
    let one = Complex64::new(1.0, 0.0);
    let a = OperatorBuilder::new(basis).add(one, &[], &[mode]).build();
    let a_dag = a.adjoint();
    Ok((a, a_dag))
}

/// 𝒩 = Σ a_i† a_i.
pub fn number_operator(basis: &FockBasis) -> FockOperator {
    let mut b = OperatorBuilder::new(basis);
    for i in 0..basis.d {
        b.add(Complex64::new(1.0, 0.0), &[i], &[i]);
    }
    b.hermitian().build()
}

/// Two-body coefficients v_{ijkl} of a_i† a_j† a_k a_l.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTensor {
    pub d: usize,
    pub values: Vec<Complex64>,
}

impl InteractionTensor {
    pub fn zeros(d: usize) -> Self {
        InteractionTensor { d, values: vec![Complex64::new(0.0, 0.0); d.pow(4)] }
    }

    /// Density–density coupling Σ V_ij a_i† a_j† a_j a_i.
    pub fn density_density(v: &nalgebra::DMatrix<f64>) -> Self {
        let d = v.nrows();
        let mut t = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                *t.at_mut(i, j, j, i) = Complex64::new(v[(i, j)], 0.0);
            }
        }
        t
    }

    fn flat(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.d + j) * self.d + k) * self.d + l
    }

    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.values[self.flat(i, j, k, l)]
    }

    pub fn at_mut(&mut self, i: usize, j: usize, k: usize, l: usize) -> &mut Complex64 {
        let idx = self.flat(i, j, k, l);
        &mut self.values[idx]
    }

    /// Exchange symmetry v_ijkl = v_jilk and Hermiticity v_ijkl = conj(v_lkji).
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        let scale = self.values.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let v = self.at(i, j, k, l);
                        if (v - self.at(j, i, l, k)).norm() > 1e-12 * scale {
                            return Err(GpkError::Domain("interaction tensor is not exchange-symmetric".into()));
                        }
                        if (v - self.at(l, k, j, i).conj()).norm() > 1e-12 * scale {
                            return Err(GpkError::Domain("interaction tensor is not Hermitian".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    let scale = h.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    if h.nrows() != h.ncols() || (h - h.adjoint()).iter().any(|z| z.norm() > 1e-12 * scale) {
        return Err(GpkError::Domain("one-body matrix h must be Hermitian".into()));
    }
    Ok(())
}

/// Σ h_ij a_i† a_j + (coupling/2) Σ v_ijkl a_i† a_j† a_k a_l.
pub fn hamiltonian(basis: &FockBasis, h: &CMatrix, v: &InteractionTensor, coupling: f64) -> Result<FockOperator> {
    let d = basis.d;
    if h.nrows() != d || v.d != d {
        return Err(GpkError::Config(format!("h and v must be indexed by the {d} modes")));
    }
    check_hermitian(h)?;
    v.validate()?;
    let mut b = OperatorBuilder::new(basis);
    for i in 0..d {
        for j in 0..d {
            b.add(h[(i, j)], &[i], &[j]);
        }
    }
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    b.add(v.at(i, j, k, l) * (0.5 * coupling), &[i, j], &[k, l]);
                }
            }
        }
    }
    Ok(b.hermitian().build())
}

/// a†(f) − a(f) = Σ f_i a_i† − f̄_i a_i.
pub fn weyl_generator(basis: &FockBasis, f: &[Complex64]) -> FockOperator {
    let mut b = OperatorBuilder::new(basis);
    for (i, &fi) in f.iter().enumerate() {
        b.add(fi, &[i], &[]);
        b.add(-fi.conj(), &[], &[i]);
    }
    b.build()
}

/// ½ Σ (K_ij a_i† a_j† − K̄_ij a_i a_j).
pub fn bogoliubov_generator(basis: &FockBasis, k: &CMatrix) -> Result<FockOperator> {
    let d = basis.d;
    if k.nrows() != d || k.ncols() != d {
        return Err(GpkError::Config(format!("K must be {d}×{d}")));
    }
    if (k - k.transpose()).iter().any(|z| z.norm() > 1e-14) {
        return Err(GpkError::Domain("Bogoliubov kernel K must be symmetric".into()));
    }
    let mut b = OperatorBuilder::new(basis);
    for i in 0..d {
        for j in 0..d {
            b.add(k[(i, j)] * 0.5, &[i, j], &[]);
            b.add(-k[(i, j)].conj() * 0.5, &[], &[i, j]);
        }
    }
    Ok(b.build())
}
