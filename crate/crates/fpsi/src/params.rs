//! Physical and scheme parameters shared by all solvers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("parameter {name} = {value} violates {constraint}")]
    Invalid { name: &'static str, value: f64, constraint: &'static str },
}

/// All physical coefficients and Robin/scheme parameters.
///
/// Units follow CGS in the blood-flow benchmark; the convergence test is
/// nondimensional. `gamma_bjs` is the slip-with-friction combination
/// coefficient `sqrt(K_tau) / (mu_f * alpha_bjs)`, or zero for a no-slip
/// tangential interface condition.
#[derive(Debug, Clone)]
pub struct PhysicalParams {
    /// Fluid dynamic viscosity.
    pub mu_f: f64,
    pub rho_f: f64,
    pub rho_p: f64,
    /// Lame shear modulus of the skeleton.
    pub mu_p: f64,
    /// Lame first parameter of the skeleton.
    pub lambda_p: f64,
    /// Mass storativity.
    pub s0: f64,
    /// Symmetric positive definite permeability [[kxx, kxy], [kxy, kyy]].
    pub k: [[f64; 2]; 2],
    /// Biot-Willis constant.
    pub alpha: f64,
    /// Beavers-Joseph-Saffman friction coefficient (0 disables slip).
    pub alpha_bjs: f64,
    /// Tangential Robin combination coefficient; derived from `alpha_bjs`
    /// via [`PhysicalParams::with_bjs`] or set to zero.
    pub gamma_bjs: f64,
    pub gamma_f: f64,
    pub gamma_p: f64,
    /// Spring coefficient of the axially symmetric wall recoil term.
    pub beta: f64,
    /// Drop the fluid inertia term rho_f d_t u_f.
    pub quasistatic_fluid: bool,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mu_f: 1.0,
            rho_f: 1.0,
            rho_p: 1.0,
            mu_p: 1.0,
            lambda_p: 1.0,
            s0: 1.0,
            k: [[1.0, 0.0], [0.0, 1.0]],
            alpha: 1.0,
            alpha_bjs: 0.0,
            gamma_bjs: 0.0,
            gamma_f: 1.0,
            gamma_p: 1.0,
            beta: 0.0,
            quasistatic_fluid: false,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let checks: [(&'static str, f64, bool, &'static str); 9] = [
            ("mu_f", self.mu_f, self.mu_f > 0.0, "mu_f > 0"),
            ("rho_f", self.rho_f, self.rho_f >= 0.0, "rho_f >= 0"),
            ("rho_p", self.rho_p, self.rho_p >= 0.0, "rho_p >= 0"),
            ("mu_p", self.mu_p, self.mu_p > 0.0, "mu_p > 0"),
            ("lambda_p", self.lambda_p, self.lambda_p > 0.0, "lambda_p > 0"),
            ("s0", self.s0, self.s0 >= 0.0, "s0 >= 0"),
            ("alpha", self.alpha, (0.0..=1.0).contains(&self.alpha), "0 <= alpha <= 1"),
            ("gamma_f", self.gamma_f, self.gamma_f > 0.0, "gamma_f > 0"),
            ("gamma_p", self.gamma_p, self.gamma_p > 0.0, "gamma_p > 0"),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok {
                return Err(ParamError::Invalid { name, value, constraint });
            }
        }
        let det = self.k[0][0] * self.k[1][1] - self.k[0][1] * self.k[1][0];
        if self.k[0][0] <= 0.0 || det <= 0.0 {
            return Err(ParamError::Invalid {
                name: "k",
                value: det,
                constraint: "K symmetric positive definite",
            });
        }
        Ok(())
    }

    /// Sets gamma for both subdomains.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_f = gamma;
        self.gamma_p = gamma;
        self
    }

    /// Derives `gamma_bjs` from the friction coefficient and the tangential
    /// permeability `K_tau = (K tau) . tau`.
    pub fn with_bjs(mut self, alpha_bjs: f64, tangent: [f64; 2]) -> Self {
        self.alpha_bjs = alpha_bjs;
        if alpha_bjs > 0.0 {
            let kt = tangent[0] * (self.k[0][0] * tangent[0] + self.k[0][1] * tangent[1])
                + tangent[1] * (self.k[1][0] * tangent[0] + self.k[1][1] * tangent[1]);
            self.gamma_bjs = kt.sqrt() / (self.mu_f * alpha_bjs);
        } else {
            self.gamma_bjs = 0.0;
        }
        self
    }

    /// mu_f K^{-1}, the Darcy resistance weight.
    pub fn darcy_weight(&self) -> [[f64; 2]; 2] {
        let det = self.k[0][0] * self.k[1][1] - self.k[0][1] * self.k[1][0];
        let inv = [
            [self.k[1][1] / det, -self.k[0][1] / det],
            [-self.k[1][0] / det, self.k[0][0] / det],
        ];
        [
            [self.mu_f * inv[0][0], self.mu_f * inv[0][1]],
            [self.mu_f * inv[1][0], self.mu_f * inv[1][1]],
        ]
    }

    /// Effective fluid density: zero in quasistatic mode.
    pub fn rho_f_eff(&self) -> f64 {
        if self.quasistatic_fluid {
            0.0
        } else {
            self.rho_f
        }
    }

    /// Parameters of the pulsatile blood-flow benchmark (CGS units).
    pub fn blood_flow() -> Self {
        Self {
            mu_f: 0.035,
            rho_f: 1.0,
            rho_p: 1.1,
            mu_p: 5.575e5,
            lambda_p: 1.7e6,
            s0: 1e-3,
            k: [[1e-6, 0.0], [0.0, 1e-6]],
            alpha: 1.0,
            alpha_bjs: 1.0,
            gamma_bjs: 0.0, // no-slip default; see with_bjs to honor alpha_bjs
            gamma_f: 1000.0,
            gamma_p: 1000.0,
            beta: 4e6,
            quasistatic_fluid: false,
        }
    }
}
