//! SCMA system structure: indicator matrix, factor graph and codebooks.
//!
//! Resource elements (REs) are indexed `0..K` and users `0..J` internally.
//! Reports and files use the same order; only the OFDM subcarrier numbers
//! follow the 1-based convention of the analysis (see [`crate::ofdm`]).

mod codebook;
mod file;

pub use codebook::{Codebook, SuperimposedTable, DEFAULT_ENUMERATION_CAP};
pub use file::{parse_codebook, read_codebook, write_codebook};

use crate::error::{Error, Result};

/// Binary `K x J` matrix marking which user occupies which resource element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    resources: usize,
    users: usize,
    // row-major, resources x users
    entries: Vec<bool>,
}

impl IndicatorMatrix {
    /// Builds the matrix from `K` rows of `J` zero/one entries.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let resources = rows.len();
        if resources == 0 {
            return Err(Error::config("indicator matrix has no rows"));
        }
        let users = rows[0].len();
        if users == 0 {
            return Err(Error::config("indicator matrix has no columns"));
        }
        let mut entries = Vec::with_capacity(resources * users);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != users {
                return Err(Error::config(format!(
                    "indicator row {} has {} entries, expected {users}",
                    k + 1,
                    row.len()
                )));
            }
            for &v in row {
                match v {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => return Err(Error::config("indicator entries must be 0 or 1")),
                }
            }
        }
        Ok(Self {
            resources,
            users,
            entries,
        })
    }

    /// The 4 x 6 matrix whose columns enumerate every pair of the four REs:
    /// `{1,2} {1,3} {1,4} {2,3} {2,4} {3,4}`.
    pub fn canonical_4x6() -> Self {
        let cols = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut entries = vec![false; 4 * 6];
        for (j, &(a, b)) in cols.iter().enumerate() {
            entries[a * 6 + j] = true;
            entries[b * 6 + j] = true;
        }
        Self {
            resources: 4,
            users: 6,
            entries,
        }
    }

    /// Builds the matrix from per-user supports (0-based RE indices).
    pub fn from_supports(resources: usize, supports: &[Vec<usize>]) -> Result<Self> {
        let users = supports.len();
        let mut entries = vec![false; resources * users];
        for (j, sup) in supports.iter().enumerate() {
            for &k in sup {
                if k >= resources {
                    return Err(Error::config(format!(
                        "user {} occupies RE {} but only {resources} exist",
                        j + 1,
                        k + 1
                    )));
                }
                entries[k * users + j] = true;
            }
        }
        Ok(Self {
            resources,
            users,
            entries,
        })
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, k: usize, j: usize) -> bool {
        self.entries[k * self.users + j]
    }

    /// REs occupied by user `j`, ascending.
    pub fn column_support(&self, j: usize) -> Vec<usize> {
        (0..self.resources).filter(|&k| self.get(k, j)).collect()
    }

    /// Users colliding on RE `k`, ascending.
    pub fn row_support(&self, k: usize) -> Vec<usize> {
        (0..self.users).filter(|&j| self.get(k, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.resources)
            .map(|k| (0..self.users).map(|j| self.get(k, j) as u8).collect())
            .collect()
    }
}

/// Dimensions and sparsity pattern of an SCMA system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScmaConfig {
    indicator: IndicatorMatrix,
    nonzeros: usize,
    users_per_resource: usize,
    codebook_size: usize,
}

impl ScmaConfig {
    /// Validates the indicator matrix against the SCMA structural rules and
    /// the codebook size `M`.
    ///
    /// Every column must have the same weight `V`, every row the same weight
    /// `d_f = J V / K`, and no two users may share a support. `M` must be a
    /// power of two. Systems with `J <= K` are accepted (they are useful as
    /// degenerate test systems) but are not overloaded.
    pub fn new(indicator: IndicatorMatrix, codebook_size: usize) -> Result<Self> {
        if codebook_size < 2 || !codebook_size.is_power_of_two() {
            return Err(Error::config(format!(
                "codebook size M = {codebook_size} must be a power of two >= 2"
            )));
        }
        let (k_res, j_users) = (indicator.resources(), indicator.users());
        let weights: Vec<usize> = (0..j_users)
            .map(|j| indicator.column_support(j).len())
            .collect();
        let nonzeros = weights[0];
        if nonzeros == 0 || weights.iter().any(|&w| w != nonzeros) {
            return Err(Error::config(format!(
                "every column of F must have the same nonzero weight, got {weights:?}"
            )));
        }
        let row_weights: Vec<usize> = (0..k_res).map(|k| indicator.row_support(k).len()).collect();
        if (j_users * nonzeros) % k_res != 0 || row_weights.iter().any(|&w| w != row_weights[0]) {
            return Err(Error::config(format!(
                "every row of F must have weight J*V/K, got {row_weights:?}"
            )));
        }
        let mut supports: Vec<Vec<usize>> =
            (0..j_users).map(|j| indicator.column_support(j)).collect();
        supports.sort();
        if supports.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("two users of F share the same support"));
        }
        Ok(Self {
            users_per_resource: row_weights[0],
            indicator,
            nonzeros,
            codebook_size,
        })
    }

    /// J = 6, K = 4, V = 2, M = 4 with the canonical indicator matrix.
    pub fn default_6x4() -> Self {
        Self::new(IndicatorMatrix::canonical_4x6(), 4).expect("canonical matrix is valid")
    }

    pub fn users(&self) -> usize {
        self.indicator.users()
    }

    pub fn resources(&self) -> usize {
        self.indicator.resources()
    }

    pub fn nonzeros(&self) -> usize {
        self.nonzeros
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    /// `d_f`, the number of users colliding on each RE.
    pub fn users_per_resource(&self) -> usize {
        self.users_per_resource
    }

    pub fn bits_per_user(&self) -> usize {
        self.codebook_size.trailing_zeros() as usize
    }

    /// `J / K`; also the average superimposed power per RE for unit-energy codebooks.
    pub fn overloading(&self) -> f64 {
        self.users() as f64 / self.resources() as f64
    }

    pub fn indicator(&self) -> &IndicatorMatrix {
        &self.indicator
    }

    /// `M^J`, or `None` on overflow.
    pub fn combinations(&self) -> Option<u128> {
        (self.codebook_size as u128).checked_pow(self.users() as u32)
    }

    pub fn factor_graph(&self) -> FactorGraph {
        FactorGraph::new(&self.indicator)
    }
}

/// User-node / resource-node adjacency of the SCMA factor graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    /// For each user, the REs it occupies.
    pub user_resources: Vec<Vec<usize>>,
    /// For each RE, the users colliding on it.
    pub resource_users: Vec<Vec<usize>>,
}

impl FactorGraph {
    pub fn new(f: &IndicatorMatrix) -> Self {
        Self {
            user_resources: (0..f.users()).map(|j| f.column_support(j)).collect(),
            resource_users: (0..f.resources()).map(|k| f.row_support(k)).collect(),
        }
    }
}
