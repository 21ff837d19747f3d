use crate::error::{GpkError, Result};
use std::collections::HashMap;

/// Most modes a basis may have.
pub const MAX_MODES: usize = 6;
/// Largest admissible Fock dimension.
pub const MAX_DIM: usize = 20_000;

/// Occupation-number basis of the truncated bosonic Fock space over `d` modes.
///
/// Enumeration order: by total particle number n, then by occupation vector
/// in descending lexicographic order. For d = 2 the first six states are
/// 00, 10, 01, 20, 11, 02. Each shell n is therefore a contiguous index range.
#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    pub d: usize,
    pub n_max: usize,
    pub dim: usize,
    states: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
    /// shell_start[n]..shell_start[n + 1] is the index range of shell n.
    shell_start: Vec<usize>,
}

/// C(n + d − 1, d − 1): states with exactly n particles in d modes.
pub fn shell_size(d: usize, n: usize) -> usize {
    binomial(n + d - 1, d - 1)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let exact = (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1));
    usize::try_from(exact).unwrap_or(usize::MAX)
}

/// Σ_{n ≤ n_max} C(n + d − 1, d − 1) = C(n_max + d, d).
pub fn fock_dimension(d: usize, n_max: usize) -> usize {
    binomial(n_max + d, d)
}

impl FockBasis {
    pub fn new(d: usize, n_max: usize) -> Result<Self> {
        if d == 0 || d > MAX_MODES {
            return Err(GpkError::Config(format!("mode count must be in 1..={MAX_MODES}, got {d}")));
        }
        if n_max > u16::MAX as usize {
            return Err(GpkError::Config(format!("n_max = {n_max} is too large")));
        }
        let dim = fock_dimension(d, n_max);
        if dim > MAX_DIM {
            return Err(GpkError::Config(format!(
                "Fock dimension C({n_max}+{d}, {d}) = {dim} exceeds the budget of {MAX_DIM}"
            )));
        }
        let mut states = Vec::with_capacity(dim);
        let mut shell_start = Vec::with_capacity(n_max + 2);
        for n in 0..=n_max {
            shell_start.push(states.len());
            let mut occ = vec![0u16; d];
            push_compositions(n, 0, &mut occ, &mut states);
        }
        shell_start.push(states.len());
        if states.len() != dim {
            return Err(GpkError::Invariant(format!("enumerated {} states, closed form gives {dim}", states.len())));
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockBasis { d, n_max, dim, states, index, shell_start })
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Total particle number of basis state `i`.
    pub fn particles(&self, i: usize) -> usize {
        self.states[i].iter().map(|&k| k as usize).sum()
    }

    /// Index range of the n-particle shell.
    pub fn shell(&self, n: usize) -> std::ops::Range<usize> {
        self.shell_start[n]..self.shell_start[n + 1]
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    /// Index of the one-particle state in `mode`.
    pub fn single(&self, mode: usize) -> usize {
        1 + mode
    }
}

/// Fill `occ[pos..]` with all compositions of `remaining`, first mode largest first.
fn push_compositions(remaining: usize, pos: usize, occ: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if pos + 1 == occ.len() {
        occ[pos] = remaining as u16;
        out.push(occ.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        occ[pos] = k as u16;
        push_compositions(remaining - k, pos + 1, occ, out);
    }
    occ[pos] = 0;
}
