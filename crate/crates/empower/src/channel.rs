//! Power-constrained linear Gaussian channel: water-filling and capacity.
//!
//! The model is `y = H u + z` with `z ~ N(0, Σz)` and a Gaussian input whose
//! covariance `S` is limited by a total power budget `tr(S) ≤ P`. The two
//! operations here are the single-user kernel that the multi-agent game in
//! [`crate::game`] calls repeatedly:
//!
//! * [`waterfill`] — the capacity-achieving input covariance,
//! * [`capacity`] — the information rate `½·ln|H S Hᵀ + Σz| − ½·ln|Σz|` in nats.
//!
//! ```
//! use empower::channel::{capacity, waterfill, ChannelMatrix, NoiseCovariance, PowerBudget};
//! use nalgebra::DMatrix;
//!
//! // A symmetric 2x2 channel splits the budget evenly across both modes.
//! let h = ChannelMatrix::new(DMatrix::identity(2, 2)).unwrap();
//! let noise = NoiseCovariance::new(DMatrix::identity(2, 2)).unwrap();
//! let s = waterfill(&h, &noise, PowerBudget::new(2.0).unwrap()).unwrap();
//! assert!((s.matrix()[(0, 0)] - 1.0).abs() < 1e-12);
//!
//! // Capacity of that solution: ½·ln|2I| = ln 2.
//! let rate = capacity(&h, &s, &noise).unwrap();
//! assert!((rate - std::f64::consts::LN_2).abs() < 1e-12);
//! ```

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value cutoff: modes below `RANK_CUTOFF * σ_max` are
/// treated as dead channels and receive no power.
const RANK_CUTOFF: f64 = 1e-10;

/// Relative asymmetry tolerated by covariance constructors.
const SYMMETRY_TOL: f64 = 1e-12;

/// Relative eigenvalue band `(-PSD_CLAMP_TOL * trace, 0)` that near-PSD repair
/// clamps to zero; anything more negative is rejected.
const PSD_CLAMP_TOL: f64 = 1e-10;

/// Real channel gain matrix, rows = output dimension, cols = input dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<f64>,
}

impl ChannelMatrix {
    /// Wraps a gain matrix; entries must be finite and both dimensions ≥ 1.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::dims(format!(
                "channel matrix must be at least 1x1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "channel matrix has non-finite entries".into(),
            ));
        }
        Ok(ChannelMatrix { entries })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Output dimension (rows).
    pub fn output_dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Input dimension (cols).
    pub fn input_dim(&self) -> usize {
        self.entries.ncols()
    }
}

/// Symmetric positive-definite observation-noise covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCovariance {
    entries: DMatrix<f64>,
}

impl NoiseCovariance {
    /// Validates symmetry (1e-12 relative) and strict positive definiteness,
    /// then stores the symmetrized matrix.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::dims(format!(
                "noise covariance must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonPositiveDefiniteNoise);
        }
        let scale = entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let max_asym = asymmetry(&entries);
        if max_asym > SYMMETRY_TOL * (1.0 + scale) {
            return Err(Error::InvalidConfig(format!(
                "noise covariance is asymmetric: max |A - A^T| = {max_asym:.3e}"
            )));
        }
        let sym = symmetrize(&entries);
        if Cholesky::new(sym.clone()).is_none() {
            return Err(Error::NonPositiveDefiniteNoise);
        }
        Ok(NoiseCovariance { entries: sym })
    }

    /// Isotropic noise `level · I`.
    pub fn isotropic(dim: usize, level: f64) -> Result<Self> {
        if level <= 0.0 || !level.is_finite() {
            return Err(Error::NonPositiveDefiniteNoise);
        }
        Self::new(DMatrix::identity(dim, dim) * level)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Total probing power, `tr(S) ≤ budget`. Units of squared action.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PowerBudget(f64);

impl PowerBudget {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "power budget must be a finite nonnegative real, got {value}"
            )));
        }
        Ok(PowerBudget(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Symmetric positive-semidefinite input covariance over the flattened action
/// sequence.
///
/// Water-filling solutions are low-rank (at most the channel's output
/// dimension), so the spectral factors `S = Σ p_i v_i v_iᵀ` are kept when
/// known and quadratic forms `B S Bᵀ` evaluate against the factors instead
/// of the dense matrix. The dense matrix is always available.
#[derive(Clone, Debug)]
pub struct InputCovariance {
    entries: DMatrix<f64>,
    factors: Option<Vec<(f64, DVector<f64>)>>,
}

impl PartialEq for InputCovariance {
    /// Semantic equality: the covariance matrix alone; the cached factors
    /// are a representation detail.
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl InputCovariance {
    /// Validates symmetry and near-PSD-ness. Eigenvalues in
    /// `(-1e-10·trace, 0)` are clamped to zero (roundoff repair); anything
    /// more negative is an [`Error::IndefiniteCovariance`].
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::dims(format!(
                "input covariance must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "input covariance has non-finite entries".into(),
            ));
        }
        let scale = entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let max_asym = asymmetry(&entries);
        if max_asym > SYMMETRY_TOL * (1.0 + scale) {
            return Err(Error::InvalidConfig(format!(
                "input covariance is asymmetric: max |A - A^T| = {max_asym:.3e}"
            )));
        }
        let sym = symmetrize(&entries);
        let trace = sym.trace();
        let tolerance = PSD_CLAMP_TOL * trace.abs().max(1.0);
        let eig = SymmetricEigen::new(sym.clone());
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig >= 0.0 {
            return Ok(InputCovariance {
                entries: sym,
                factors: None,
            });
        }
        if min_eig <= -tolerance {
            return Err(Error::IndefiniteCovariance {
                eigenvalue: min_eig,
                tolerance,
            });
        }
        // Roundoff band: rebuild with the slightly negative eigenvalues clamped.
        let clamped = eig.eigenvalues.map(|v| v.max(0.0));
        let repaired =
            &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
        Ok(InputCovariance {
            entries: symmetrize(&repaired),
            factors: None,
        })
    }

    /// Zero covariance (no probing power).
    pub fn zeros(dim: usize) -> Self {
        InputCovariance {
            entries: DMatrix::zeros(dim, dim),
            factors: Some(Vec::new()),
        }
    }

    /// Uniform power `total/dim · I`.
    pub fn uniform(dim: usize, total: f64) -> Self {
        InputCovariance {
            entries: DMatrix::identity(dim, dim) * (total / dim as f64),
            factors: None,
        }
    }

    /// Construction from known spectral factors `S = Σ p_i v_i v_iᵀ`.
    pub(crate) fn from_factors(entries: DMatrix<f64>, factors: Vec<(f64, DVector<f64>)>) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        InputCovariance {
            entries,
            factors: Some(factors),
        }
    }

    /// Spectral factors, when the covariance was built from them.
    pub fn factors(&self) -> Option<&[(f64, DVector<f64>)]> {
        self.factors.as_deref()
    }

    /// `B S Bᵀ` against the factors when known, dense otherwise.
    pub fn push_through(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.factors {
            Some(factors) => {
                let mut out = DMatrix::zeros(b.nrows(), b.nrows());
                for (p, v) in factors {
                    let w = b * v;
                    out.ger(*p, &w, &w, 1.0);
                }
                out
            }
            None => b * &self.entries * b.transpose(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `½·ln|M|` of a symmetric positive-definite matrix via Cholesky.
fn half_log_det(m: DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(m).ok_or(Error::FactorizationFailed(
        "Cholesky of a matrix expected to be positive definite",
    ))?;
    let l = chol.l();
    Ok((0..l.nrows()).map(|i| l[(i, i)].ln()).sum())
}

/// Whitens the channel against the noise: returns `L⁻¹ H` where `Σz = L Lᵀ`.
fn whiten(channel: &ChannelMatrix, noise: &NoiseCovariance) -> Result<DMatrix<f64>> {
    if channel.output_dim() != noise.dim() {
        return Err(Error::dims(format!(
            "channel has {} output rows but noise covariance is {}x{}",
            channel.output_dim(),
            noise.dim(),
            noise.dim()
        )));
    }
    let chol =
        Cholesky::new(noise.matrix().clone()).ok_or(Error::NonPositiveDefiniteNoise)?;
    chol.l()
        .solve_lower_triangular(channel.matrix())
        .ok_or(Error::FactorizationFailed("triangular solve while whitening"))
}

/// Capacity-achieving input covariance of `y = H u + z` under `tr(S) ≤ P`.
///
/// The noise is whitened, the whitened channel factored by SVD, and the power
/// `p_i = max(0, μ − 1/σ_i²)` is spread over the squared singular values with
/// the water level `μ` found by the exact sorted-threshold scan. The solution
/// is rebuilt in the original input basis as `Σ p_i v_i v_iᵀ`; singular
/// directions below `1e-10·σ_max` get nothing.
///
/// ```
/// use empower::channel::{waterfill, ChannelMatrix, NoiseCovariance, PowerBudget};
/// use nalgebra::DMatrix;
///
/// // diag(2, 1) at unit budget: the strong mode gets most of the water.
/// let h = ChannelMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
/// let noise = NoiseCovariance::new(DMatrix::identity(2, 2)).unwrap();
/// let s = waterfill(&h, &noise, PowerBudget::new(1.0).unwrap()).unwrap();
/// assert!((s.matrix()[(0, 0)] - 0.875).abs() < 1e-9);
/// assert!((s.matrix()[(1, 1)] - 0.125).abs() < 1e-9);
/// ```
pub fn waterfill(
    channel: &ChannelMatrix,
    noise: &NoiseCovariance,
    budget: PowerBudget,
) -> Result<InputCovariance> {
    let n = channel.input_dim();
    let whitened = whiten(channel, noise)?;
    if budget.value() == 0.0 {
        return Ok(InputCovariance::zeros(n));
    }

    let svd = whitened.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or(Error::FactorizationFailed("SVD right singular vectors"))?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0_f64, f64::max);
    if sigma_max <= 0.0 {
        return Ok(InputCovariance::zeros(n));
    }

    // Inverse squared gains of the live modes, ascending because nalgebra
    // returns singular values in descending order.
    let cutoff = RANK_CUTOFF * sigma_max;
    let inv_gains: Vec<f64> = sigma
        .iter()
        .copied()
        .filter(|&s| s > cutoff)
        .map(|s| 1.0 / (s * s))
        .collect();
    if inv_gains.is_empty() {
        return Ok(InputCovariance::zeros(n));
    }

    // Largest k for which the water level over the first k modes clears the
    // k-th inverse gain. Exact in finitely many steps.
    let mut active = 1;
    let mut prefix = inv_gains[0];
    for k in 2..=inv_gains.len() {
        let candidate_prefix = prefix + inv_gains[k - 1];
        let level = (budget.value() + candidate_prefix) / k as f64;
        if level > inv_gains[k - 1] {
            active = k;
            prefix = candidate_prefix;
        } else {
            break;
        }
    }
    let level = (budget.value() + prefix) / active as f64;

    let mut s = DMatrix::zeros(n, n);
    let mut factors = Vec::with_capacity(active);
    for i in 0..active {
        let p = level - inv_gains[i];
        let v = v_t.row(i).transpose();
        s.ger(p, &v, &v, 1.0);
        factors.push((p, v));
    }
    Ok(InputCovariance::from_factors(symmetrize(&s), factors))
}

/// Information rate `½·ln|H S Hᵀ + Σz| − ½·ln|Σz|` in nats.
///
/// Computed in the whitened domain as `½·ln|W S Wᵀ + I|` with `W = L⁻¹H`,
/// which keeps the argument positive definite and the log-determinant on a
/// Cholesky factorization.
pub fn capacity(
    channel: &ChannelMatrix,
    input_cov: &InputCovariance,
    noise: &NoiseCovariance,
) -> Result<f64> {
    if input_cov.dim() != channel.input_dim() {
        return Err(Error::dims(format!(
            "channel has {} input cols but input covariance is {}x{}",
            channel.input_dim(),
            input_cov.dim(),
            input_cov.dim()
        )));
    }
    let w = whiten(channel, noise)?;
    let m = input_cov.push_through(&w);
    let arg = symmetrize(&m) + DMatrix::identity(w.nrows(), w.nrows());
    half_log_det(arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix;

    fn channel(rows: usize, cols: usize, data: &[f64]) -> ChannelMatrix {
        ChannelMatrix::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    fn eye_noise(dim: usize) -> NoiseCovariance {
        NoiseCovariance::new(DMatrix::identity(dim, dim)).unwrap()
    }

    fn budget(v: f64) -> PowerBudget {
        PowerBudget::new(v).unwrap()
    }

    /// Brute-force oracle for a 2-mode diagonal channel: maximize
    /// ½[ln(1 + g1·p) + ln(1 + g2·(P-p))] over a grid of resolution 1e-5.
    fn diagonal_grid_oracle(g1: f64, g2: f64, total: f64) -> (f64, f64, f64) {
        let steps = 100_000usize;
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for i in 0..=steps {
            let p1 = total * i as f64 / steps as f64;
            let p2 = total - p1;
            let value = 0.5 * ((1.0 + g1 * p1).ln() + (1.0 + g2 * p2).ln());
            if value > best.2 {
                best = (p1, p2, value);
            }
        }
        best
    }

    fn random_channel(rng: &mut SplitMix, rows: usize, cols: usize) -> ChannelMatrix {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.uniform(-2.0, 2.0)).collect();
        channel(rows, cols, &data)
    }

    /// Random PSD matrix with the requested trace.
    fn random_feasible_cov(rng: &mut SplitMix, dim: usize, trace: f64) -> InputCovariance {
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.uniform(-1.0, 1.0));
        let mut s = &a * a.transpose();
        let t = s.trace();
        if t > 0.0 {
            s *= trace / t;
        }
        InputCovariance::new(s).unwrap()
    }

    #[test]
    fn symmetric_channel_splits_budget_evenly() {
        let h = channel(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let s = waterfill(&h, &eye_noise(2), budget(2.0)).unwrap();
        let m = s.matrix();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-12, "m00 = {}", m[(0, 0)]);
        assert!((m[(1, 1)] - 1.0).abs() < 1e-12, "m11 = {}", m[(1, 1)]);
        assert!(m[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn zero_budget_gives_zero_covariance() {
        let h = channel(2, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0]);
        let s = waterfill(&h, &eye_noise(2), budget(0.0)).unwrap();
        assert_eq!(s.matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn diagonal_channel_matches_grid_search_oracle() {
        // Frozen from the grid oracle (resolution 1e-5): the diag(2, 1)
        // channel at unit budget allocates (0.875, 0.125).
        let (p1, p2, oracle_value) = diagonal_grid_oracle(4.0, 1.0, 1.0);
        assert!((p1 - 0.875).abs() < 2e-5, "oracle p1 = {p1}");
        assert!((p2 - 0.125).abs() < 2e-5, "oracle p2 = {p2}");

        let h = channel(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let s = waterfill(&h, &eye_noise(2), budget(1.0)).unwrap();
        let m = s.matrix();
        assert!((m[(0, 0)] - 0.875).abs() < 1e-9, "p1 = {}", m[(0, 0)]);
        assert!((m[(1, 1)] - 0.125).abs() < 1e-9, "p2 = {}", m[(1, 1)]);

        let rate = capacity(&h, &s, &eye_noise(2)).unwrap();
        assert!(
            (rate - oracle_value).abs() < 1e-6,
            "capacity {rate} vs oracle {oracle_value}"
        );
    }

    #[test]
    fn zero_channel_has_zero_capacity_and_takes_no_power() {
        let h = channel(2, 2, &[0.0; 4]);
        let s = waterfill(&h, &eye_noise(2), budget(5.0)).unwrap();
        assert_eq!(s.trace(), 0.0);
        let any = InputCovariance::uniform(2, 3.0);
        let rate = capacity(&h, &any, &eye_noise(2)).unwrap();
        assert!(rate.abs() < 1e-12);
    }

    #[test]
    fn identity_capacity_is_ln_2() {
        let h = channel(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let s = InputCovariance::uniform(2, 2.0);
        let rate = capacity(&h, &s, &eye_noise(2)).unwrap();
        assert!((rate - std::f64::consts::LN_2).abs() < 1e-12, "rate = {rate}");
    }

    #[test]
    fn budget_saturates_when_any_mode_is_live() {
        let mut rng = SplitMix::new(11);
        for _ in 0..50 {
            let rows = 1 + (rng.next_u64() % 4) as usize;
            let cols = 1 + (rng.next_u64() % 4) as usize;
            let h = random_channel(&mut rng, rows, cols);
            let p = rng.uniform(0.1, 5.0);
            let s = waterfill(&h, &eye_noise(rows), budget(p)).unwrap();
            assert!(
                (s.trace() - p).abs() < 1e-9,
                "trace {} vs budget {p}",
                s.trace()
            );
        }
    }

    #[test]
    fn waterfill_beats_random_feasible_alternatives() {
        let mut rng = SplitMix::new(23);
        for _ in 0..20 {
            let rows = 1 + (rng.next_u64() % 4) as usize;
            let cols = 1 + (rng.next_u64() % 4) as usize;
            let h = random_channel(&mut rng, rows, cols);
            let p = rng.uniform(0.2, 4.0);
            let noise = eye_noise(rows);
            let s_opt = waterfill(&h, &noise, budget(p)).unwrap();
            let best = capacity(&h, &s_opt, &noise).unwrap();
            for _ in 0..200 {
                let alt_trace = rng.uniform(0.0, p);
                let s_alt = random_feasible_cov(&mut rng, cols, alt_trace);
                let alt = capacity(&h, &s_alt, &noise).unwrap();
                assert!(
                    best >= alt - 1e-8,
                    "alternative beat waterfill: {alt} > {best}"
                );
            }
        }
    }

    #[test]
    fn capacity_is_monotone_in_budget() {
        let mut rng = SplitMix::new(31);
        let h = random_channel(&mut rng, 3, 3);
        let noise = eye_noise(3);
        let mut last = -1.0;
        for i in 0..20 {
            let p = 0.25 * i as f64;
            let s = waterfill(&h, &noise, budget(p)).unwrap();
            let rate = capacity(&h, &s, &noise).unwrap();
            assert!(rate >= last - 1e-10, "capacity dipped: {rate} < {last}");
            last = rate;
        }
    }

    #[test]
    fn optimized_capacity_is_rotation_invariant() {
        let mut rng = SplitMix::new(47);
        let h = random_channel(&mut rng, 3, 3);
        let noise = eye_noise(3);
        // Orthogonal U from the QR-like Householder of a random matrix: use
        // the SVD's U factor of a random square matrix.
        let raw = DMatrix::from_fn(3, 3, |_, _| rng.uniform(-1.0, 1.0));
        let u = raw.svd(true, false).u.unwrap();
        let hu = ChannelMatrix::new(h.matrix() * &u).unwrap();

        let p = budget(2.0);
        let c1 = capacity(&h, &waterfill(&h, &noise, p).unwrap(), &noise).unwrap();
        let c2 = capacity(&hu, &waterfill(&hu, &noise, p).unwrap(), &noise).unwrap();
        assert!((c1 - c2).abs() < 1e-9, "rotated capacity {c2} vs {c1}");
    }

    #[test]
    fn capacity_is_nonnegative_at_any_psd_input() {
        let mut rng = SplitMix::new(59);
        for _ in 0..50 {
            let h = random_channel(&mut rng, 2, 3);
            let trace = rng.uniform(0.0, 3.0);
            let s = random_feasible_cov(&mut rng, 3, trace);
            let rate = capacity(&h, &s, &eye_noise(2)).unwrap();
            assert!(rate >= 0.0, "negative capacity {rate}");
        }
    }

    #[test]
    fn indefinite_noise_is_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(
            NoiseCovariance::new(bad),
            Err(Error::NonPositiveDefiniteNoise)
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let h = channel(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let noise = eye_noise(3);
        assert!(matches!(
            waterfill(&h, &noise, budget(1.0)),
            Err(Error::DimensionMismatch(_))
        ));
        let s = InputCovariance::uniform(5, 1.0);
        assert!(matches!(
            capacity(&h, &s, &eye_noise(2)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn near_psd_repair_clamps_roundoff_but_rejects_real_negatives() {
        // Tiny negative eigenvalue within the clamp band: accepted, repaired.
        let eps = 1e-14;
        let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -eps]);
        let fixed = InputCovariance::new(nearly).unwrap();
        let eig = SymmetricEigen::new(fixed.matrix().clone());
        assert!(eig.eigenvalues.iter().all(|&v| v >= 0.0));

        // Clearly indefinite: rejected.
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(matches!(
            InputCovariance::new(bad),
            Err(Error::IndefiniteCovariance { .. })
        ));
    }

    #[test]
    fn factored_and_dense_quadratic_forms_agree() {
        // The cached spectral factors must evaluate B S Bᵀ to the same
        // values as the dense matrix (up to summation-order roundoff).
        let mut rng = SplitMix::new(71);
        for _ in 0..20 {
            let rows = 1 + (rng.next_u64() % 3) as usize;
            let cols = 2 + (rng.next_u64() % 4) as usize;
            let h = random_channel(&mut rng, rows, cols);
            let noise = eye_noise(rows);
            let s = waterfill(&h, &noise, budget(rng.uniform(0.5, 3.0))).unwrap();
            assert!(s.factors().is_some());

            let b = DMatrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0));
            let fast = s.push_through(&b);
            let dense = &b * s.matrix() * b.transpose();
            assert!(
                (fast - dense).norm() < 1e-12,
                "factored quadratic form deviates"
            );

            // Stripping the factors must not change capacity beyond roundoff.
            let stripped = InputCovariance::new(s.matrix().clone()).unwrap();
            let c_fast = capacity(&h, &s, &noise).unwrap();
            let c_dense = capacity(&h, &stripped, &noise).unwrap();
            assert!((c_fast - c_dense).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_channel_puts_power_on_the_row_space() {
        // 1x3 channel: rank 1, all power on the normalized row direction.
        let h = channel(1, 3, &[3.0, 0.0, 4.0]);
        let s = waterfill(&h, &eye_noise(1), budget(2.0)).unwrap();
        assert!((s.trace() - 2.0).abs() < 1e-9);
        // S must be proportional to v v^T with v = (0.6, 0, 0.8).
        let m = s.matrix();
        assert!((m[(0, 0)] - 2.0 * 0.36).abs() < 1e-9);
        assert!((m[(2, 2)] - 2.0 * 0.64).abs() < 1e-9);
        assert!((m[(0, 2)] - 2.0 * 0.48).abs() < 1e-9);
        assert!(m[(1, 1)].abs() < 1e-12);
    }
}
