use serde::{Deserialize, Serialize};

use super::Network;

/// Column-major sparse matrix with explicit nonzeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCols {
    pub n_rows: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
}

impl SparseCols {
    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cols[col].iter().find(|(r, _)| *r == row).map_or(0.0, |(_, v)| *v)
    }

    /// `self · x` for a vector indexed by column.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (col, entries) in self.cols.iter().enumerate() {
            for &(row, v) in entries {
                out[row] += v * x[col];
            }
        }
        out
    }
}

/// Node-to-line incidence pair.
///
/// `a_plus` is +1 at the sending end and -1 at the receiving end;
/// `a_minus` is -1 at the receiving end only. A node's net series
/// outflow is then `a_plus·p_s - a_minus·p_o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub a_plus: SparseCols,
    pub a_minus: SparseCols,
}

pub fn incidence(net: &Network) -> Incidence {
    let n = net.n_buses();
    let mut plus = Vec::with_capacity(net.n_branches());
    let mut minus = Vec::with_capacity(net.n_branches());
    for br in &net.branches {
        plus.push(vec![(br.from, 1.0), (br.to, -1.0)]);
        minus.push(vec![(br.to, -1.0)]);
    }
    Incidence { a_plus: SparseCols { n_rows: n, cols: plus }, a_minus: SparseCols { n_rows: n, cols: minus } }
}
