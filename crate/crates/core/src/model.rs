//! Domain types shared by every precoder: channels, precoding matrices, SINR
//! targets and the seeded random source used for channel ensembles.
//!
//! Link quality is evaluated analytically from `H` and `W`. With unit-power,
//! uncorrelated user symbols the received useful and interference powers of
//! user `k` are `|h_k · w_k'ᵀ|²`, so no symbol vectors are ever drawn.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// Dense complex matrix, users on rows and antennas on columns.
pub type CMatrix = DMatrix<Complex64>;

/// How a channel realization was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Provenance {
    /// Pure line-of-sight towards a half-wavelength ULA; one angle per user, radians.
    Los { angles: Vec<f64> },
    /// i.i.d. Rayleigh fading drawn from the given seed and stream.
    Nlos { seed: u64, stream: u64 },
    /// Supplied directly by the caller.
    Explicit,
}

/// Channel matrix `H` (K users × M antennas).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: CMatrix,
    provenance: Provenance,
}

impl ChannelMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "channel must have K >= 1 and M >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::InvalidParameter("channel has non-finite entries".into()));
        }
        Ok(Self {
            entries,
            provenance: Provenance::Explicit,
        })
    }

    /// Single-user channel from a row vector.
    pub fn from_row(row: &[Complex64]) -> Result<Self> {
        Self::new(CMatrix::from_row_slice(1, row.len(), row))
    }

    /// Real-valued channel, given row-major.
    pub fn from_real(users: usize, antennas: usize, values: &[f64]) -> Result<Self> {
        if values.len() != users * antennas {
            return Err(Error::Dimension(format!(
                "expected {} values for a {users}x{antennas} channel, got {}",
                users * antennas,
                values.len()
            )));
        }
        let entries = CMatrix::from_fn(users, antennas, |k, m| {
            Complex64::new(values[k * antennas + m], 0.0)
        });
        Self::new(entries)
    }

    pub fn users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Channel of user `k` as an owned row.
    pub fn row(&self, k: usize) -> Vec<Complex64> {
        self.entries.row(k).iter().copied().collect()
    }

    /// Multiplies antenna column `m` by `phases[m]`.
    pub fn with_column_phases(&self, phases: &[Complex64]) -> Result<Self> {
        if phases.len() != self.antennas() {
            return Err(Error::Dimension(format!(
                "{} phases for {} antennas",
                phases.len(),
                self.antennas()
            )));
        }
        let mut entries = self.entries.clone();
        for (m, mut col) in entries.column_iter_mut().enumerate() {
            col *= phases[m];
        }
        Ok(Self {
            entries,
            provenance: Provenance::Explicit,
        })
    }
}

/// Precoding matrix `W` (K × M); row `k` holds user `k`'s antenna weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingMatrix(CMatrix);

impl PrecodingMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "precoder has non-finite entries".into(),
            ));
        }
        Ok(Self(entries))
    }

    pub fn zeros(users: usize, antennas: usize) -> Self {
        Self(CMatrix::zeros(users, antennas))
    }

    pub fn from_row(row: &[Complex64]) -> Self {
        Self(CMatrix::from_row_slice(1, row.len(), row))
    }

    pub fn users(&self) -> usize {
        self.0.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.0.ncols()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// Per-antenna transmit power `p_m = Σ_k |w_{k,m}|²`.
    pub fn antenna_powers(&self) -> Vec<f64> {
        self.0
            .column_iter()
            .map(|col| col.iter().map(|w| w.norm_sqr()).sum())
            .collect()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self(self.0.map(|w| w * alpha))
    }
}

/// Per-user SINR requirements, noise level and optional PA saturation cap.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    gammas: Vec<f64>,
    sigma_nu: f64,
    p_max_cap: Option<f64>,
}

impl TargetSpec {
    pub fn new(gammas: Vec<f64>, sigma_nu: f64, p_max_cap: Option<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidParameter("no SINR targets".into()));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "SINR target must be positive, got {g}"
            )));
        }
        if !(sigma_nu.is_finite() && sigma_nu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_nu must be positive, got {sigma_nu}"
            )));
        }
        if let Some(cap) = p_max_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "per-antenna cap must be positive, got {cap}"
                )));
            }
        }
        Ok(Self {
            gammas,
            sigma_nu,
            p_max_cap,
        })
    }

    /// Same linear target `gamma` for all `users`.
    pub fn uniform(users: usize, gamma: f64, sigma_nu: f64, p_max_cap: Option<f64>) -> Result<Self> {
        Self::new(vec![gamma; users], sigma_nu, p_max_cap)
    }

    /// Same target for all users, given in dB.
    pub fn uniform_db(
        users: usize,
        gamma_db: f64,
        sigma_nu: f64,
        p_max_cap: Option<f64>,
    ) -> Result<Self> {
        Self::uniform(users, db_to_linear(gamma_db), sigma_nu, p_max_cap)
    }

    /// Targets that may include zeros. Only used for limit checks of the
    /// closed forms; the solver-facing constructors require positive targets.
    pub fn with_zero_targets_allowed(gammas: Vec<f64>, sigma_nu: f64) -> Result<Self> {
        if gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidParameter("SINR targets must be >= 0".into()));
        }
        if !(sigma_nu.is_finite() && sigma_nu > 0.0) {
            return Err(Error::InvalidParameter("sigma_nu must be positive".into()));
        }
        Ok(Self {
            gammas,
            sigma_nu,
            p_max_cap: None,
        })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn users(&self) -> usize {
        self.gammas.len()
    }

    pub fn sigma_nu(&self) -> f64 {
        self.sigma_nu
    }

    pub fn p_max_cap(&self) -> Option<f64> {
        self.p_max_cap
    }

    /// Diagonal of `D_γ^{1/2} σ_ν`, the useful amplitude each user must receive.
    pub fn useful_amplitudes(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| g.sqrt() * self.sigma_nu).collect()
    }

    /// `D_γ^{1/2} σ_ν` as a K×K complex matrix.
    pub fn useful_amplitude_matrix(&self) -> CMatrix {
        let k = self.users();
        let amps = self.useful_amplitudes();
        CMatrix::from_fn(k, k, |i, j| {
            if i == j {
                Complex64::new(amps[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub(crate) fn check_users(&self, channel: &ChannelMatrix) -> Result<()> {
        if self.users() != channel.users() {
            return Err(Error::Dimension(format!(
                "{} SINR targets for {} users",
                self.users(),
                channel.users()
            )));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Seeded random source for channel ensembles.
///
/// Backed by ChaCha8 so that a `(seed, stream)` pair identifies one
/// reproducible sequence; Monte Carlo trial `t` uses stream `t`. Gaussian
/// variates come from `rand_distr::StandardNormal` (ziggurat), consuming the
/// real part first and then the imaginary part of each complex entry.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::for_trial(seed, 0)
    }

    /// Independent stream for Monte Carlo trial `trial` of a run seeded with `seed`.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(trial);
        Self {
            inner,
            seed,
            stream: trial,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// One draw of CN(0, 1): real and imaginary parts are independent N(0, 1/2).
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = self.inner.sample(StandardNormal);
        let im: f64 = self.inner.sample(StandardNormal);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    }

    /// Uniform draw on `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        self.inner.random_range(low..high)
    }
}

/// Line-of-sight channel for a half-wavelength ULA:
/// `[H]_{k,m} = exp(-jπ cos(θ_k) m)`.
pub fn gen_los(antennas: usize, angles: &[f64]) -> Result<ChannelMatrix> {
    if antennas == 0 {
        return Err(Error::Dimension("M must be >= 1".into()));
    }
    if angles.is_empty() {
        return Err(Error::InvalidParameter("empty angle list".into()));
    }
    if let Some(theta) = angles.iter().find(|t| !(**t > 0.0 && **t < PI)) {
        return Err(Error::InvalidParameter(format!(
            "user angle {theta} rad outside the open interval (0, pi)"
        )));
    }
    let entries = CMatrix::from_fn(angles.len(), antennas, |k, m| {
        Complex64::from_polar(1.0, -PI * angles[k].cos() * m as f64)
    });
    Ok(ChannelMatrix {
        entries,
        provenance: Provenance::Los {
            angles: angles.to_vec(),
        },
    })
}

/// i.i.d. Rayleigh channel, entries CN(0, 1), filled row by row.
pub fn gen_nlos(antennas: usize, users: usize, rng: &mut Rng) -> Result<ChannelMatrix> {
    if antennas == 0 || users == 0 {
        return Err(Error::Dimension(format!(
            "need K >= 1 and M >= 1, got K = {users}, M = {antennas}"
        )));
    }
    let provenance = Provenance::Nlos {
        seed: rng.seed(),
        stream: rng.stream(),
    };
    let mut entries = CMatrix::zeros(users, antennas);
    for k in 0..users {
        for m in 0..antennas {
            entries[(k, m)] = rng.complex_normal();
        }
    }
    Ok(ChannelMatrix {
        entries,
        provenance,
    })
}

/// Per-user SINR of precoder `W` on channel `H` with noise amplitude `sigma_nu`.
/// For a single user this is the SNR `|h·wᵀ|²/σ²`.
pub fn evaluate_sinr(
    channel: &ChannelMatrix,
    precoder: &PrecodingMatrix,
    sigma_nu: f64,
) -> Result<Vec<f64>> {
    if channel.users() != precoder.users() || channel.antennas() != precoder.antennas() {
        return Err(Error::Dimension(format!(
            "channel is {}x{} but precoder is {}x{}",
            channel.users(),
            channel.antennas(),
            precoder.users(),
            precoder.antennas()
        )));
    }
    // gains[(k, k')] = h_k · w_k'ᵀ
    let gains = channel.entries() * precoder.entries().transpose();
    let noise = sigma_nu * sigma_nu;
    Ok((0..channel.users())
        .map(|k| {
            let useful = gains[(k, k)].norm_sqr();
            let interference: f64 = (0..channel.users())
                .filter(|&j| j != k)
                .map(|j| gains[(k, j)].norm_sqr())
                .sum();
            useful / (interference + noise)
        })
        .collect())
}
