//! Brute-force unitary evolution of ladder plus machines on the full product
//! Hilbert space, used to check the closed-form profiles.
//!
//! Basis ordering: ladder level slowest, then machine columns `k = 1..M`,
//! then transitions `j = 1..d-1` inside a column, then cold qubit before hot
//! qubit. A machine pair is encoded as `2 * cold + hot`, so the local basis is
//! `{|0_C 0_H>, |0_C 1_H>, |1_C 0_H>, |1_C 1_H>}`.
//!
//! The interaction conserves the free energy, so its matrix splits into small
//! independent blocks. Each block is diagonalized densely; the full matrix is
//! never formed.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ClockError, Result};
use crate::model::{qubit_partition, ladder_partition, ClockParams, Machines};

/// Largest Hilbert dimension accepted for dense treatment.
pub const ORACLE_DIM_LIMIT: usize = 4096;

const PAIR_01: usize = 1; // cold ground, hot excited
const PAIR_10: usize = 2; // cold excited, hot ground

/// Nonzero matrix element `H[row][col]`, tagged with the machine column it
/// belongs to (1-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
    pub column: usize,
}

#[derive(Debug, Clone)]
struct Block {
    eigenvalues: Vec<f64>,
    /// `(V^dag Pi V) o (V^dag W V)^T`, row-major.
    top_kernel: Vec<Complex64>,
    /// `(V^dag V) o (V^dag W V)^T`, row-major.
    norm_kernel: Vec<Complex64>,
}

/// Exact representation of one small clock.
#[derive(Debug, Clone)]
pub struct OracleSystem {
    pub params: ClockParams,
    pub dim: usize,
    pub columns: usize,
    /// Nonzero entries of the interaction Hamiltonian (both triangles).
    pub h_int: Vec<Entry>,
    /// Diagonal of the free Hamiltonian.
    pub h0_diag: Vec<f64>,
    /// Thermal weights of the initial product state.
    pub init_weights: Vec<f64>,
    blocks: Vec<Block>,
}

/// Dimension `d 4^{M (d-1)}` if it is representable.
pub fn oracle_dimension(d: u64, machines: Machines) -> Option<u128> {
    let m = machines.finite()?;
    let exp = u32::try_from(m.checked_mul(d - 1)?).ok()?;
    4u128.checked_pow(exp)?.checked_mul(d as u128)
}

struct Layout {
    d: usize,
    columns: usize,
    pairs: usize,
    machine_dim: usize,
}

impl Layout {
    fn ladder(&self, idx: usize) -> usize {
        idx / self.machine_dim
    }

    /// Position of pair `(k, j)` (both 1-based) counted from the most
    /// significant digit.
    fn shift(&self, k: usize, j: usize) -> usize {
        let pos = (k - 1) * (self.d - 1) + (j - 1);
        2 * (self.pairs - 1 - pos)
    }

    fn pair(&self, idx: usize, k: usize, j: usize) -> usize {
        (idx >> self.shift(k, j)) & 3
    }

    /// Column `k` in the state where the first `n` machines have fired.
    fn column_is(&self, idx: usize, k: usize, n: usize) -> bool {
        (1..self.d).all(|j| self.pair(idx, k, j) == if j <= n { PAIR_10 } else { PAIR_01 })
    }

    fn column_in_any_ladder_state(&self, idx: usize, k: usize) -> bool {
        (0..self.d).any(|n| self.column_is(idx, k, n))
    }

    fn with_column(&self, idx: usize, k: usize, n: usize) -> usize {
        let mut out = idx;
        for j in 1..self.d {
            let s = self.shift(k, j);
            out &= !(3 << s);
            out |= (if j <= n { PAIR_10 } else { PAIR_01 }) << s;
        }
        out
    }

    fn with_ladder(&self, idx: usize, n: usize) -> usize {
        n * self.machine_dim + idx % self.machine_dim
    }
}

impl OracleSystem {
    pub fn build(params: &ClockParams) -> Result<Self> {
        params.validate()?;
        let cols = params.machines.finite().ok_or(ClockError::WrongVariant {
            operation: "build_oracle",
            requirement: "a finite number of machines M",
        })?;
        let required = oracle_dimension(params.d, params.machines).unwrap_or(u128::MAX);
        if required > ORACLE_DIM_LIMIT as u128 {
            return Err(ClockError::OracleTooLarge {
                required,
                limit: ORACLE_DIM_LIMIT,
            });
        }
        let dim = required as usize;
        let d = params.d as usize;
        let columns = cols as usize;
        let pairs = columns * (d - 1);
        let lay = Layout {
            d,
            columns,
            pairs,
            machine_dim: dim / d,
        };

        let mut h_int = Vec::new();
        for b in 0..dim {
            let lower = lay.ladder(b);
            if lower + 1 >= d {
                continue;
            }
            let n = lower + 1;
            let amp = params.g * ((n * (d - n)) as f64).sqrt();
            for k in 1..=lay.columns {
                if !lay.column_is(b, k, n - 1) {
                    continue;
                }
                if (k + 1..=lay.columns).any(|i| lay.column_in_any_ladder_state(b, i)) {
                    continue;
                }
                let a = lay.with_ladder(lay.with_column(b, k, n), n);
                let v = Complex64::new(0.0, amp);
                h_int.push(Entry { row: a, col: b, value: v, column: k });
                h_int.push(Entry { row: b, col: a, value: v.conj(), column: k });
            }
        }

        let e_l = params.e_l();
        let z = ladder_partition(params)?;
        let zc = qubit_partition(params.e_c, params.beta_c)?;
        let zh = qubit_partition(params.e_h, params.beta_h)?;
        let p_cold = [1.0 / zc, (zc - 1.0) / zc];
        let p_hot = [1.0 / zh, (zh - 1.0) / zh];

        let mut h0_diag = vec![0.0; dim];
        let mut init_weights = vec![0.0; dim];
        for idx in 0..dim {
            let n = lay.ladder(idx);
            let mut energy = n as f64 * e_l;
            let mut w = z.ladder_pop[n];
            for k in 1..=lay.columns {
                for j in 1..d {
                    let code = lay.pair(idx, k, j);
                    let (cold, hot) = (code >> 1, code & 1);
                    energy += cold as f64 * params.e_c + hot as f64 * params.e_h;
                    w *= p_cold[cold] * p_hot[hot];
                }
            }
            h0_diag[idx] = energy;
            init_weights[idx] = w;
        }

        let blocks = diagonalize_blocks(dim, d, &lay, &h_int, &init_weights)?;
        Ok(OracleSystem {
            params: *params,
            dim,
            columns,
            h_int,
            h0_diag,
            init_weights,
            blocks,
        })
    }

    /// Dense interaction matrix. Only sensible for small dimensions.
    pub fn h_int_dense(&self) -> DMatrix<Complex64> {
        self.dense_from(self.h_int.iter())
    }

    /// Dense matrix of the term contributed by machine column `k`.
    pub fn column_term_dense(&self, k: usize) -> DMatrix<Complex64> {
        self.dense_from(self.h_int.iter().filter(|e| e.column == k))
    }

    fn dense_from<'a>(&self, entries: impl Iterator<Item = &'a Entry>) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for e in entries {
            m[(e.row, e.col)] += e.value;
        }
        m
    }

    /// `max |H - H^dag|` over stored entries.
    pub fn hermiticity_error(&self) -> f64 {
        let mut h: std::collections::HashMap<(usize, usize), Complex64> = Default::default();
        for e in &self.h_int {
            *h.entry((e.row, e.col)).or_default() += e.value;
        }
        let zero = Complex64::default();
        h.iter()
            .map(|(&(r, c), v)| (v - h.get(&(c, r)).unwrap_or(&zero).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `max |[H0, H_int]|`: the entry `(a, b)` of the commutator is
    /// `(E_a - E_b) H[a][b]`.
    pub fn commutator_error(&self) -> f64 {
        self.h_int
            .iter()
            .map(|e| ((self.h0_diag[e.row] - self.h0_diag[e.col]) * e.value).norm())
            .fold(0.0, f64::max)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Top-level population and total probability at one time.
    pub fn populations_at(&self, t: f64) -> (f64, f64) {
        let mut top = 0.0;
        let mut total = 0.0;
        for b in &self.blocks {
            let n = b.eigenvalues.len();
            let z: Vec<Complex64> = b
                .eigenvalues
                .iter()
                .map(|&l| Complex64::from_polar(1.0, -l * t))
                .collect();
            let mut acc_top = Complex64::new(0.0, 0.0);
            let mut acc_norm = Complex64::new(0.0, 0.0);
            for l in 0..n {
                let mut rt = Complex64::new(0.0, 0.0);
                let mut rn = Complex64::new(0.0, 0.0);
                for lp in 0..n {
                    rt += b.top_kernel[l * n + lp] * z[lp];
                    rn += b.norm_kernel[l * n + lp] * z[lp];
                }
                acc_top += z[l].conj() * rt;
                acc_norm += z[l].conj() * rn;
            }
            top += acc_top.re;
            total += acc_norm.re;
        }
        (top, total)
    }

    pub fn evolve(&self, times: &[f64]) -> EvolutionResult {
        let (p_top, total_probability): (Vec<f64>, Vec<f64>) =
            times.par_iter().map(|&t| self.populations_at(t)).unzip();
        EvolutionResult {
            times: times.to_vec(),
            p_top,
            total_probability,
        }
    }

    /// Human-readable label of a basis state, e.g. `L1|10 01|01 01`.
    pub fn basis_label(&self, idx: usize) -> String {
        let d = self.params.d as usize;
        let lay = Layout {
            d,
            columns: self.columns,
            pairs: self.columns * (d - 1),
            machine_dim: self.dim / d,
        };
        let mut s = format!("L{}", lay.ladder(idx));
        for k in 1..=self.columns {
            s.push('|');
            let pairs: Vec<String> = (1..d)
                .map(|j| {
                    let c = lay.pair(idx, k, j);
                    format!("{}{}", c >> 1, c & 1)
                })
                .collect();
            s.push_str(&pairs.join(" "));
        }
        s
    }

    /// Text dump: basis labels as comments, then one `row col re im` line per
    /// nonzero entry of the interaction.
    pub fn dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# dim={}", self.dim)?;
        writeln!(out, "# pair code = cold hot")?;
        for idx in 0..self.dim {
            writeln!(out, "# {idx} {}", self.basis_label(idx))?;
        }
        let mut entries = self.h_int.clone();
        entries.sort_by_key(|e| (e.row, e.col));
        for e in entries {
            writeln!(out, "{} {} {:.17e} {:.17e}", e.row, e.col, e.value.re, e.value.im)?;
        }
        Ok(())
    }
}

/// Connected components of the coupling graph, each diagonalized densely.
fn diagonalize_blocks(
    dim: usize,
    d: usize,
    lay: &Layout,
    h_int: &[Entry],
    weights: &[f64],
) -> Result<Vec<Block>> {
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in h_int {
        let (a, b) = (find(&mut parent, e.row), find(&mut parent, e.col));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..dim {
        let root = find(&mut parent, i);
        members.entry(root).or_default().push(i);
    }
    let mut position = vec![0usize; dim];
    let mut entries_of: std::collections::BTreeMap<usize, Vec<&Entry>> = Default::default();
    for e in h_int {
        entries_of.entry(find(&mut parent, e.row)).or_default().push(e);
    }

    let mut blocks = Vec::new();
    for (root, states) in members {
        if states.iter().all(|&s| weights[s] == 0.0) {
            continue;
        }
        let n = states.len();
        for (p, &s) in states.iter().enumerate() {
            position[s] = p;
        }
        let mut h = DMatrix::<Complex64>::zeros(n, n);
        for e in entries_of.get(&root).map(Vec::as_slice).unwrap_or(&[]) {
            h[(position[e.row], position[e.col])] += e.value;
        }
        let eig = h
            .try_symmetric_eigen(1e-15, 10_000)
            .ok_or_else(|| ClockError::Eigen(format!("block of size {n} did not converge")))?;
        let v = &eig.eigenvectors;

        // Projector onto the top ladder level and the initial weights, both
        // diagonal in the product basis.
        let mut a_top = DMatrix::<Complex64>::zeros(n, n);
        let mut a_norm = DMatrix::<Complex64>::zeros(n, n);
        let mut b_w = DMatrix::<Complex64>::zeros(n, n);
        for l in 0..n {
            for lp in 0..n {
                let (mut top, mut norm, mut w) = (Complex64::default(), Complex64::default(), Complex64::default());
                for (p, &s) in states.iter().enumerate() {
                    let prod = v[(p, l)].conj() * v[(p, lp)];
                    norm += prod;
                    if lay.ladder(s) == d - 1 {
                        top += prod;
                    }
                    w += prod * weights[s];
                }
                a_top[(l, lp)] = top;
                a_norm[(l, lp)] = norm;
                b_w[(l, lp)] = w;
            }
        }
        let mut top_kernel = Vec::with_capacity(n * n);
        let mut norm_kernel = Vec::with_capacity(n * n);
        for l in 0..n {
            for lp in 0..n {
                top_kernel.push(a_top[(l, lp)] * b_w[(lp, l)]);
                norm_kernel.push(a_norm[(l, lp)] * b_w[(lp, l)]);
            }
        }
        blocks.push(Block {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            top_kernel,
            norm_kernel,
        });
    }
    Ok(blocks)
}

/// Top-level population on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub p_top: Vec<f64>,
    pub total_probability: Vec<f64>,
}

pub fn build_oracle(params: &ClockParams) -> Result<OracleSystem> {
    OracleSystem::build(params)
}

pub fn evolve_p_top(system: &OracleSystem, times: &[f64]) -> EvolutionResult {
    system.evolve(times)
}
