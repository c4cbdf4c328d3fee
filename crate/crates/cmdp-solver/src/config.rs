use cutting_plane::VaidyaParams;

/// Where the multiplier bound `B_lambda` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BLambdaSource {
    /// Use this bound directly.
    Explicit(f64),
    /// Derive it from a known Slater margin.
    FromXi(f64),
    /// Estimate the Slater margin with the occupancy LP, then derive it.
    FromSlaterLp,
}

/// Uniform-ergodicity constants `(c_m, beta)` for the instance; required by
/// the smoothness-dependent diagnostics and never estimated implicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingParams {
    pub c_m: f64,
    pub beta: f64,
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct DualConfig {
    /// Entropy coefficient; `None` selects `min(1, cbrt(epsilon))` with
    /// `epsilon` the a-priori dual gap bound at the configured budget.
    pub tau: Option<f64>,
    /// Inner-solver accuracy in policy sup-norm.
    pub delta: f64,
    /// Dual regularization coefficient; 0 disables the regularized variant.
    pub mu: f64,
    pub b_lambda: BLambdaSource,
    /// Cutting-plane parameters (eta, zeta, outer iteration budget).
    pub vaidya: VaidyaParams,
    /// Solve the occupancy LP and report measured gap/violation.
    pub oracle_check: bool,
}

impl DualConfig {
    pub fn new(vaidya: VaidyaParams) -> Self {
        Self {
            tau: None,
            delta: 1e-6,
            mu: 0.0,
            b_lambda: BLambdaSource::FromSlaterLp,
            vaidya,
            oracle_check: false,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_b_lambda(mut self, source: BLambdaSource) -> Self {
        self.b_lambda = source;
        self
    }

    pub fn with_oracle_check(mut self, check: bool) -> Self {
        self.oracle_check = check;
        self
    }
}

/// Fully resolved run parameters, recorded in the solution.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedParams {
    pub tau: f64,
    pub delta: f64,
    pub mu: f64,
    pub b_lambda: f64,
    /// Slater margin when known (explicit or LP-estimated).
    pub xi: Option<f64>,
}
