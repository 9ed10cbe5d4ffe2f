//! 0-1 bounded confidence: stubborn agents (`S0`, bound 0) never move and
//! moving agents (`S1`, bound 1) average over everyone within distance 1.
//!
//! With agents ordered `S0` first, the symmetric network splits into
//!
//! ```text
//! λ = [ R0  Mᵀ ]      D0 = diag(λ 1) on S0 rows
//!     [ M   R1 ]      D1 = diag(λ 1) on S1 rows
//! ```
//!
//! and the moving block updates as `x1' = D1⁻¹ (M x0 + R1 x1)`. For the
//! Laplacian `L` of `λ` this gives
//!
//! ```text
//! xᵀ L x − x'ᵀ L x' = ‖x1 − x1'‖²_Q,   Q = D1 + R1,
//! ```
//!
//! where `D0`, `D1` are full row sums (self-loops included).

use nalgebra::DMatrix;

use super::{hk_step, neighbor_network, DriftPair, HkModel, HkModelSpec};
use crate::bcd::CoupledModel;
use crate::error::{Error, Result};
use crate::lex::{OrderedValue, ValueKind};
use crate::linalg::{is_positive_definite, laplacian, q_norm2, quadratic_form, weighted_average};
use crate::network::{NetworkMatrix, ZeroOneSets};
use crate::profile::OpinionProfile;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroOnePartition {
    sets: ZeroOneSets,
}

/// Blocks of the symmetric network induced by a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroOneBlocks {
    pub r0: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    /// Rows in `S1`, columns in `S0`.
    pub m: DMatrix<f64>,
    pub d0: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    /// `D1 + R1`.
    pub q: DMatrix<f64>,
}

impl ZeroOneBlocks {
    pub fn q_is_positive_definite(&self) -> bool {
        self.q.nrows() == 0 || is_positive_definite(&self.q)
    }
}

impl ZeroOnePartition {
    pub fn new(n: usize, stubborn: impl IntoIterator<Item = usize>) -> Result<Self> {
        ZeroOneSets::new(n, stubborn).map(Self::from_sets)
    }

    pub fn from_sets(sets: ZeroOneSets) -> Self {
        Self { sets }
    }

    pub fn sets(&self) -> &ZeroOneSets {
        &self.sets
    }

    pub fn n(&self) -> usize {
        self.sets.n()
    }

    pub fn spec(&self) -> HkModelSpec {
        HkModelSpec::zero_one(self.sets.clone())
    }

    /// The symmetric neighbour network at bound 1.
    pub fn network(&self, x: &OpinionProfile) -> Result<NetworkMatrix> {
        neighbor_network(x, &self.spec())
    }

    pub fn blocks(&self, x: &OpinionProfile) -> Result<ZeroOneBlocks> {
        self.blocks_of(&self.network(x)?)
    }

    pub fn blocks_of(&self, net: &NetworkMatrix) -> Result<ZeroOneBlocks> {
        if net.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} network", self.n()),
                found: format!("{0}x{0}", net.n()),
            });
        }
        let s0 = self.sets.stubborn();
        let s1 = self.sets.moving();
        let sub = |rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |a, b| net.get(rows[a], cols[b]))
        };
        let degrees = |rows: &[usize]| DMatrix::from_fn(rows.len(), rows.len(), |a, b| {
            if a == b { net.row_sum(rows[a]) } else { 0.0 }
        });
        let r1 = sub(s1, s1);
        let d1 = degrees(s1);
        let q = &d1 + &r1;
        Ok(ZeroOneBlocks {
            r0: sub(s0, s0),
            m: sub(s1, s0),
            d0: degrees(s0),
            r1,
            d1,
            q,
        })
    }
}

/// One 0-1 step from the neighbour network at `x`.
pub fn zero_one_step(x: &OpinionProfile, part: &ZeroOnePartition) -> Result<OpinionProfile> {
    let net = part.network(x)?;
    step_on_network(x, &net, part.sets())
}

/// Moving rows average over their row of `net`; stubborn rows stay put.
pub(crate) fn step_on_network(x: &OpinionProfile, net: &NetworkMatrix, sets: &ZeroOneSets) -> Result<OpinionProfile> {
    if sets.n() != x.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("partition of {} agents", x.n()),
            found: format!("partition of {}", sets.n()),
        });
    }
    let n = x.n();
    let w = DMatrix::from_fn(n, n, |i, j| if sets.is_stubborn(i) { 0.0 } else { net.get(i, j) });
    Ok(weighted_average(x, &w))
}

/// Laplacian drop `xᵀLx − x'ᵀLx'` (lhs) against `‖x1 − x1'‖²_Q` (rhs), both
/// at the network of `x`.
pub fn zero_one_drift_identity(x: &OpinionProfile, part: &ZeroOnePartition) -> Result<DriftPair> {
    let net = part.network(x)?;
    let next = step_on_network(x, &net, part.sets())?;
    let l = laplacian(&net);
    let lhs = quadratic_form(x, &l)? - quadratic_form(&next, &l)?;

    let blocks = part.blocks_of(&net)?;
    let moving = part.sets().moving();
    let delta = DMatrix::from_fn(moving.len(), x.d(), |a, k| x.get(moving[a], k) - next.get(moving[a], k));
    let rhs = q_norm2(&delta, &blocks.q)?;
    Ok(DriftPair { lhs, rhs })
}

/// The 0-1 dynamics as a coupled model; the objective is the homogeneous one
/// at bound 1.
#[derive(Debug, Clone)]
pub struct ZeroOneModel {
    part: ZeroOnePartition,
    inner: HkModel,
}

impl ZeroOneModel {
    pub fn new(part: ZeroOnePartition) -> Result<Self> {
        let inner = HkModel::new(part.spec(), part.n())?;
        Ok(Self { part, inner })
    }

    pub fn partition(&self) -> &ZeroOnePartition {
        &self.part
    }
}

impl CoupledModel for ZeroOneModel {
    fn kind(&self) -> ValueKind {
        ValueKind::Scalar
    }

    fn state_update(&mut self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OpinionProfile> {
        hk_step(x, net, self.inner.spec())
    }

    fn network_update(&self, x: &OpinionProfile) -> Result<NetworkMatrix> {
        self.part.network(x)
    }

    fn potential(&self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OrderedValue> {
        self.inner.potential(x, net)
    }

    fn network_cost(&self, net: &NetworkMatrix) -> Result<OrderedValue> {
        self.inner.network_cost(net)
    }

    fn objective(&self, x: &OpinionProfile, net: &NetworkMatrix) -> Result<OrderedValue> {
        self.inner.objective(x, net)
    }

    fn check_network(&self, net: &NetworkMatrix) -> Result<()> {
        self.inner.check_network(net)
    }

    fn sample_network(&self, n: usize, rng: &mut RngStream) -> NetworkMatrix {
        self.inner.sample_network(n, rng)
    }
}
