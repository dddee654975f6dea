//! Discretization and time integration of the coupled temperature/moisture
//! problem on the fabric thickness, and composition of heated-cylinder
//! stages (with flips) into a full machine pass.
//!
//! The spatial domain is the fabric thickness `[0, L]` on a uniform grid,
//! with `x = 0` the cylinder contact side and `x = L` the free side. Each
//! time step applies a semi-implicit splitting:
//!
//! 1. effective properties `c`, `rho`, `lambda` are evaluated at the
//!    step-start moisture;
//! 2. the moisture ODE is advanced per node by an implicit (backward
//!    Euler) solve, with the temperature activation frozen at its
//!    step-start value;
//! 3. the resulting latent-heat sink `h_lv rho_l dM/dt` is inserted into
//!    the energy balance, whose diffusion term is advanced implicitly
//!    (unconditionally stable) with a direct tridiagonal solve.
//!
//! Boundary conditions each step: `T(0) = T_cyl` and `M(0) = 0` hard
//! Dirichlet values at the contact node (instantaneous vaporization at the
//! contact interface), and at `x = L` the discrete flux
//! `dT/dx = -z_ht/lambda(M_L) (T_L - T_env)` imposed through a one-sided
//! second-order difference, which widens the last matrix row to three
//! entries (handled by a direct solver with an explicit closure of the
//! widened row).
//!
//! The moisture update is clamped monotone: the logistic activation is
//! slightly negative below the evaporation temperature (a smoothing
//! artifact of `max(dT, 0)`), and integrating that tail would let nodes
//! re-absorb moisture while warming through the threshold. Inside the
//! machine the mass balance is non-positive, so sub-threshold nodes are
//! left unchanged instead.

mod tridiag;

use crate::error::{Error, Result};
use crate::heat_transfer::{z_ht, ExchangeConfig};
use crate::kinetics::{sigmoid, smoothed_max, EvapParams};
use crate::properties::{density, heat_capacity, thermal_conductivity, Materials};

/// Uniform spatial grid on the fabric thickness.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    thickness: f64,
    n_nodes: usize,
}

impl Grid {
    /// A uniform grid of `n_nodes >= 3` nodes on `[0, thickness]`.
    pub fn new(thickness: f64, n_nodes: usize) -> Result<Self> {
        if !thickness.is_finite() || thickness <= 0.0 {
            return Err(Error::domain(format!(
                "fabric thickness must be finite and positive, got {thickness}"
            )));
        }
        if n_nodes < 3 {
            return Err(Error::domain(format!(
                "grid needs at least 3 nodes, got {n_nodes}"
            )));
        }
        Ok(Grid { thickness, n_nodes })
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Node spacing `L / (n - 1)`.
    pub fn dx(&self) -> f64 {
        self.thickness / (self.n_nodes - 1) as f64
    }

    /// Coordinate of node `j`; node 0 is the contact side, the last node
    /// the free side.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.thickness / (self.n_nodes - 1) as f64
    }
}

/// Paired temperature and moisture profiles on a [`Grid`], plus elapsed
/// process time.
#[derive(Debug, Clone, PartialEq)]
pub struct FabricState {
    grid: Grid,
    t: Vec<f64>,
    m: Vec<f64>,
    time: f64,
}

impl FabricState {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Temperature per node (K).
    pub fn temperature(&self) -> &[f64] {
        &self.t
    }

    /// Moisture per node (dimensionless liquid-to-fiber mass ratio).
    pub fn moisture(&self) -> &[f64] {
        &self.m
    }

    /// Elapsed process time (s).
    pub fn time(&self) -> f64 {
        self.time
    }
}

/// One heated-cylinder stage: boundary data and time-step control.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSpec {
    /// Cylinder (contact side) temperature (K).
    pub t_cyl: f64,
    /// Stage duration (s); zero is allowed and makes the stage a no-op.
    pub duration: f64,
    /// Free-surface exchange coefficient (W m^-2 K^-1).
    pub z_ht: f64,
    /// Environment temperature (K).
    pub t_env: f64,
    /// Time step (s); the final step is shortened to land exactly on the
    /// stage duration.
    pub dt: f64,
}

impl StageSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v, positive) in [
            ("t_cyl", self.t_cyl, true),
            ("duration", self.duration, false),
            ("z_ht", self.z_ht, true),
            ("t_env", self.t_env, true),
            ("dt", self.dt, true),
        ] {
            if !v.is_finite() || (positive && v <= 0.0) || v < 0.0 {
                return Err(Error::domain(format!(
                    "stage {name} must be finite and {}, got {v}",
                    if positive { "positive" } else { "nonnegative" }
                )));
            }
        }
        Ok(())
    }
}

/// Uniform initial state `T = t0`, `M = m0` at time zero.
pub fn init_state(grid: Grid, t0: f64, m0: f64) -> Result<FabricState> {
    if !t0.is_finite() || t0 <= 0.0 {
        return Err(Error::domain(format!(
            "initial temperature must be a positive absolute temperature, got {t0}"
        )));
    }
    if !m0.is_finite() || m0 < 0.0 {
        return Err(Error::domain(format!(
            "initial moisture must be finite and nonnegative, got {m0}"
        )));
    }
    let n = grid.n_nodes();
    Ok(FabricState {
        grid,
        t: vec![t0; n],
        m: vec![m0; n],
        time: 0.0,
    })
}

/// Reverses both profiles in space (node j -> n-1-j), modelling the fabric
/// being flipped between stages. Grid and elapsed time are unchanged.
pub fn flip(state: &FabricState) -> FabricState {
    let mut out = state.clone();
    out.t.reverse();
    out.m.reverse();
    out
}

/// Average moisture across the thickness, `(1/L) int M dx` discretized by
/// the trapezoid rule on the grid nodes.
///
/// The surface nodes enter through their one-sided interior limits (the
/// adjacent node value) rather than their stored values: the contact
/// condition `M = 0` is a pointwise constraint on a measure-zero set (the
/// moisture field has no diffusion term, so it stays regular up to the
/// wall), and giving the pinned values quadrature weight would bias the
/// average by O(dx) and spoil grid convergence of the predicted mean.
pub fn average_moisture(state: &FabricState) -> f64 {
    let m = &state.m;
    let n = m.len();
    let interior: f64 = m[1..n - 1].iter().sum();
    (interior + 0.5 * (m[1] + m[n - 2])) / (n - 1) as f64
}

/// Implicit (backward Euler) update of the per-node moisture ODE
/// `dM/dt = -kappa(M) s`, with the activation `s` frozen. Solved by a
/// safeguarded Newton iteration on a bracketing interval.
///
/// The mass balance is non-positive by construction; the smooth activation
/// has a small negative tail below the evaporation temperature (an
/// artifact of replacing `max(dT, 0)` with a logistic), so updates with
/// `s <= 0` leave the node unchanged. This keeps per-node moisture exactly
/// monotone and confined to `[0, m_old]`.
fn implicit_moisture_update(m_old: f64, s: f64, kin: &EvapParams, dt: f64) -> f64 {
    if s <= 0.0 || kin.k == 0.0 {
        return m_old;
    }
    let kappa = |m: f64| kin.k * sigmoid(kin.gamma * (m - kin.m_b));
    let kappa_prime = |m: f64| {
        let sig = sigmoid(kin.gamma * (m - kin.m_b));
        kin.k * kin.gamma * sig * (1.0 - sig)
    };
    // g(m) = m - m_old + dt kappa(m) s; g' = 1 + dt kappa'(m) s >= 1, so
    // the root is unique.
    let g = |m: f64| m - m_old + dt * kappa(m) * s;

    // The root lies in [0, m_old]; if even m = 0 gives g >= 0 the node
    // dries out completely within the step.
    if g(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, m_old);

    let mut m = m_old;
    for _ in 0..100 {
        let gm = g(m);
        if gm.abs() <= 1e-18 + 4.0 * f64::EPSILON * m_old.abs() {
            break;
        }
        if gm > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
        let gp = 1.0 + dt * kappa_prime(m) * s;
        let newton = m - gm / gp;
        m = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    m.max(0.0)
}

/// Scratch buffers reused across steps of one stage.
struct Workspace {
    lam: Vec<f64>,
    cap: Vec<f64>,
    m_new: Vec<f64>,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    t_new: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            lam: vec![0.0; n],
            cap: vec![0.0; n],
            m_new: vec![0.0; n],
            sub: vec![0.0; n - 1],
            diag: vec![0.0; n - 1],
            sup: vec![0.0; n - 1],
            rhs: vec![0.0; n - 1],
            t_new: vec![0.0; n],
        }
    }
}

fn step_dt(
    state: &mut FabricState,
    spec: &StageSpec,
    materials: &Materials,
    kinetics: &EvapParams,
    dt: f64,
    step_index: usize,
    ws: &mut Workspace,
) -> Result<()> {
    let n = state.grid.n_nodes();
    let dx = state.grid.dx();
    let fluid = &materials.fluid;
    let fabric = &materials.fabric;

    // Effective properties at the step-start moisture. State moisture is
    // nonnegative by construction; the clamp only guards round-off.
    for j in 0..n {
        let mj = state.m[j].max(0.0);
        ws.lam[j] = thermal_conductivity(mj, fluid, fabric)?;
        ws.cap[j] = heat_capacity(mj, fluid, fabric)? * density(mj, fluid, fabric)?;
    }

    // Implicit per-node moisture update with the step-start temperature;
    // hard Dirichlet M = 0 at the contact node.
    ws.m_new[0] = 0.0;
    for j in 1..n {
        let s = smoothed_max(state.t[j] - fluid.t_evap, kinetics.beta)?;
        ws.m_new[j] = implicit_moisture_update(state.m[j], s, kinetics, dt);
    }

    // Energy equation, backward Euler: for interior nodes
    //   cap/dt (T' - T) = [lam_{j+1/2}(T'_{j+1}-T'_j) - lam_{j-1/2}(T'_j-T'_{j-1})]/dx^2 + sink
    // with sink = h_lv rho_l (M' - M)/dt (nonpositive while drying).
    let inv_dx2 = 1.0 / (dx * dx);
    ws.diag[0] = 1.0;
    ws.sup[0] = 0.0;
    ws.rhs[0] = spec.t_cyl;
    for j in 1..n - 1 {
        let lam_minus = 0.5 * (ws.lam[j - 1] + ws.lam[j]);
        let lam_plus = 0.5 * (ws.lam[j] + ws.lam[j + 1]);
        let cap_dt = ws.cap[j] / dt;
        let sink = fluid.h_lv * fluid.rho_l * (ws.m_new[j] - state.m[j]) / dt;
        ws.sub[j] = -lam_minus * inv_dx2;
        ws.diag[j] = cap_dt + (lam_minus + lam_plus) * inv_dx2;
        ws.sup[j] = -lam_plus * inv_dx2;
        ws.rhs[j] = cap_dt * state.t[j] + sink;
    }
    // Robin row at x = L, one-sided second-order difference with lambda at
    // the boundary node's current moisture:
    //   (3 T_{n-1} - 4 T_{n-2} + T_{n-3})/(2 dx) = -z/lam (T_{n-1} - T_env)
    let zl = spec.z_ht / ws.lam[n - 1];
    let tail = tridiag::TailRow {
        a: 1.0,
        b: -4.0,
        c: 3.0 + 2.0 * dx * zl,
        rhs: 2.0 * dx * zl * spec.t_env,
    };

    tridiag::solve_with_tail(&ws.sub, &ws.diag, &ws.sup, &ws.rhs, tail, &mut ws.t_new)
        .ok_or_else(|| Error::Solver {
            step: step_index,
            reason: "singular linear system in the diffusion solve".to_string(),
        })?;

    for j in 0..n {
        if !ws.t_new[j].is_finite() || !ws.m_new[j].is_finite() {
            return Err(Error::Solver {
                step: step_index,
                reason: format!("non-finite state at node {j}"),
            });
        }
    }
    state.t.copy_from_slice(&ws.t_new);
    state.m.copy_from_slice(&ws.m_new);
    state.time += dt;
    Ok(())
}

/// Advances the state by one full time step `spec.dt`.
pub fn step(
    state: &mut FabricState,
    spec: &StageSpec,
    materials: &Materials,
    kinetics: &EvapParams,
) -> Result<()> {
    spec.validate()?;
    let mut ws = Workspace::new(state.grid.n_nodes());
    step_dt(state, spec, materials, kinetics, spec.dt, 0, &mut ws)
}

/// Records sampled `(t, T profile, M profile)` snapshots of a simulation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    stride: usize,
    snapshots: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

impl Trajectory {
    /// Captures every `stride`-th step plus the initial and final states
    /// of each stage.
    pub fn new(stride: usize) -> Self {
        Trajectory {
            stride: stride.max(1),
            snapshots: Vec::new(),
        }
    }

    fn record(&mut self, state: &FabricState) {
        self.snapshots
            .push((state.time, state.t.clone(), state.m.clone()));
    }

    pub fn snapshots(&self) -> &[(f64, Vec<f64>, Vec<f64>)] {
        &self.snapshots
    }

    /// Writes the trajectory as comma-separated text with a `t,x,T,M`
    /// header, one row per (snapshot, node). `x` is the coordinate in the
    /// current stage orientation (0 = contact side).
    pub fn write_csv<W: std::io::Write>(&self, grid: &Grid, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,x,T,M")?;
        for (t, temp, moist) in &self.snapshots {
            for j in 0..grid.n_nodes() {
                writeln!(w, "{},{},{},{}", t, grid.node(j), temp[j], moist[j])?;
            }
        }
        Ok(())
    }
}

/// Integrates one heated-cylinder stage over `spec.duration`, shortening
/// the final step so elapsed time lands exactly on the duration. With a
/// recorder, sampled snapshots are captured along the way.
pub fn solve_stage(
    mut state: FabricState,
    spec: &StageSpec,
    materials: &Materials,
    kinetics: &EvapParams,
    mut recorder: Option<&mut Trajectory>,
) -> Result<FabricState> {
    spec.validate()?;
    materials.validate()?;
    kinetics.validate()?;
    if spec.duration == 0.0 {
        return Ok(state);
    }

    let start = state.time;
    let n_steps = (spec.duration / spec.dt).ceil().max(1.0) as usize;
    if let Some(rec) = recorder.as_deref_mut() {
        rec.record(&state);
    }
    let mut ws = Workspace::new(state.grid.n_nodes());
    for i in 0..n_steps {
        let elapsed = i as f64 * spec.dt;
        let dt_i = spec.dt.min(spec.duration - elapsed);
        if dt_i <= 0.0 {
            break;
        }
        step_dt(&mut state, spec, materials, kinetics, dt_i, i, &mut ws)?;
        let last = i + 1 == n_steps;
        if let Some(rec) = recorder.as_deref_mut() {
            if last || (i + 1) % rec.stride == 0 {
                rec.record(&state);
            }
        }
    }
    // Partial-step arithmetic sums exactly to the duration; pin the time
    // anyway so downstream comparisons are exact.
    state.time = start + spec.duration;
    Ok(state)
}

/// Process inputs of one machine pass: total drying time, fabric
/// thickness, cylinder temperature, initial moisture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleInputs {
    /// Total drying time across all stages (s).
    pub tau: f64,
    /// Fabric thickness (m).
    pub thickness: f64,
    /// Heated cylinder temperature (K), shared by all stages.
    pub t_cyl: f64,
    /// Initial moisture (dimensionless).
    pub m0: f64,
}

impl SampleInputs {
    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::domain(format!(
                "drying time must be finite and nonnegative, got {}",
                self.tau
            )));
        }
        if !self.thickness.is_finite() || self.thickness <= 0.0 {
            return Err(Error::domain(format!(
                "thickness must be finite and positive, got {}",
                self.thickness
            )));
        }
        if !self.t_cyl.is_finite() || self.t_cyl <= 0.0 {
            return Err(Error::domain(format!(
                "cylinder temperature must be positive, got {}",
                self.t_cyl
            )));
        }
        if !self.m0.is_finite() || self.m0 < 0.0 {
            return Err(Error::domain(format!(
                "initial moisture must be nonnegative, got {}",
                self.m0
            )));
        }
        Ok(())
    }
}

/// Everything a machine pass needs besides the per-sample inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineConfig {
    pub materials: Materials,
    pub exchange: ExchangeConfig,
    /// Initial fabric temperature (K).
    pub t0: f64,
    /// Grid nodes across the thickness.
    pub n_nodes: usize,
    /// Time step (s).
    pub dt: f64,
    /// Fraction of the total drying time spent on each cylinder; must sum
    /// to 1. The machine has three cylinders, but the list length is free.
    pub stage_fractions: Vec<f64>,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            materials: Materials::default(),
            exchange: ExchangeConfig::default(),
            t0: 288.15,
            n_nodes: 101,
            dt: 0.01,
            stage_fractions: vec![1.0 / 3.0; 3],
        }
    }
}

impl MachineConfig {
    pub fn validate(&self) -> Result<()> {
        self.materials.validate()?;
        self.exchange.validate()?;
        if !self.t0.is_finite() || self.t0 <= 0.0 {
            return Err(Error::config("operating.t0", "must be positive"));
        }
        if self.n_nodes < 3 {
            return Err(Error::config("solver.n_nodes", "must be at least 3"));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::config("solver.dt", "must be positive"));
        }
        if self.stage_fractions.is_empty() {
            return Err(Error::config("solver.stage_fractions", "must be nonempty"));
        }
        if self.stage_fractions.iter().any(|&f| !f.is_finite() || f <= 0.0) {
            return Err(Error::config(
                "solver.stage_fractions",
                "every fraction must be positive",
            ));
        }
        let sum: f64 = self.stage_fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "solver.stage_fractions",
                format!("fractions must sum to 1, got {sum}"),
            ));
        }
        Ok(())
    }
}

/// Runs a full machine pass: successive heated-cylinder stages with the
/// fabric flipped between consecutive stages, starting from a uniform
/// initial state. The free-surface coefficient `z_ht` is evaluated once
/// from the cylinder temperature and the exchange configuration.
pub fn simulate_machine(
    inputs: &SampleInputs,
    params: &EvapParams,
    cfg: &MachineConfig,
    mut recorder: Option<&mut Trajectory>,
) -> Result<FabricState> {
    inputs.validate()?;
    cfg.validate()?;
    let grid = Grid::new(inputs.thickness, cfg.n_nodes)?;
    let mut state = init_state(grid, cfg.t0, inputs.m0)?;
    let z = z_ht(inputs.t_cyl, &cfg.exchange, cfg.materials.fluid.lambda_vap)?;
    for (i, frac) in cfg.stage_fractions.iter().enumerate() {
        if i > 0 {
            state = flip(&state);
        }
        let spec = StageSpec {
            t_cyl: inputs.t_cyl,
            duration: frac * inputs.tau,
            z_ht: z,
            t_env: cfg.exchange.t_env,
            dt: cfg.dt,
        };
        state = solve_stage(state, &spec, &cfg.materials, params, recorder.as_deref_mut())?;
    }
    Ok(state)
}
