//! Closed-loop scenario runner: outer position loop, inner attitude loop,
//! disturbance models, per-step records, run metrics and CSV logs.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{
    attitude_errors, classic_pid_torque, desired_force, disturbance_neighborhood_check,
    integrator_rhs, lyapunov_rate_with_gyroscopic, lyapunov_value, pd_torque, pid_torque,
    position_thrust, step_integrator, ClassicPidGains, ClassicPidState, ControllerGains,
    DesiredAttitudeSample, PidControllerState,
};
use crate::csv_io::{fmt_f64, parse_fields, read_table, write_table};
use crate::error::{Error, Result};
use crate::rigid_body::{plant_step, BodyState, InertiaModel, WrenchInput, GRAVITY};
use crate::so3::{morse_error, Rotation, Vec3};
use crate::trajectory::{
    discrete_desired_rates, helix_reference, helix_sample, read_reference_csv, thrust_attitude,
    HelixParams, PositionRefSample, ReferenceSample,
};

/// `D_i(t) = const_i + ampl_i sin(freq_i t + phase_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceModel {
    pub constant: Vec3,
    pub amplitude: Vec3,
    pub frequency: Vec3,
    pub phase: Vec3,
}

impl DisturbanceModel {
    pub fn zero() -> Self {
        DisturbanceModel {
            constant: Vec3::zeros(),
            amplitude: Vec3::zeros(),
            frequency: Vec3::zeros(),
            phase: Vec3::zeros(),
        }
    }

    /// Upper bound `|const| + |ampl|` on `sup_t |D(t)|`.
    pub fn gamma(&self) -> f64 {
        self.constant.norm() + self.amplitude.norm()
    }
}

impl Default for DisturbanceModel {
    /// Constant plus sinusoidal torque used by the disturbed scenarios.
    fn default() -> Self {
        DisturbanceModel {
            constant: Vec3::new(0.10, -0.08, 0.06),
            amplitude: Vec3::new(0.05, 0.05, 0.05),
            frequency: Vec3::new(1.0, 1.5, 2.0),
            phase: Vec3::zeros(),
        }
    }
}

pub fn disturbance_at(model: &DisturbanceModel, t: f64) -> Vec3 {
    Vec3::from_fn(|i, _| {
        model.constant[i] + model.amplitude[i] * (model.frequency[i] * t + model.phase[i]).sin()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    GeometricPid,
    GeometricPd,
    ClassicPid,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [
        ControllerKind::GeometricPid,
        ControllerKind::GeometricPd,
        ControllerKind::ClassicPid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::GeometricPid => "geometric-pid",
            ControllerKind::GeometricPd => "geometric-pd",
            ControllerKind::ClassicPid => "classic-pid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// How the desired attitude is obtained from the position reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttitudeReference {
    /// Thrust axis along the full outer-loop force vector (feedforward plus
    /// position and velocity feedback). Desired rates come from an exact
    /// two-step prediction of the translational state.
    Feedback,
    /// Thrust axis along `m g e3 - m v_d'` only; rates precomputed from the
    /// reference sequence (or read from a reference file).
    Feedforward,
}

impl AttitudeReference {
    pub fn name(&self) -> &'static str {
        match self {
            AttitudeReference::Feedback => "feedback",
            AttitudeReference::Feedforward => "feedforward",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    /// Rotation vector of `R(0)` (rad).
    pub attitude: Vec3,
    /// `Omega(0)` (rad/s).
    pub omega: Vec3,
    /// `b(0) - b_d(0)` (m).
    pub position_offset: Vec3,
    /// Inertial `v(0) - v_d(0)` (m/s).
    pub velocity_offset: Vec3,
    /// When positive, `R(0)` is a rotation of this angle about an axis drawn
    /// from the scenario seed, replacing `attitude`.
    pub random_angle: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition {
            attitude: Vec3::new(0.3, -0.2, 0.4),
            omega: Vec3::zeros(),
            position_offset: Vec3::new(0.5, -0.5, 0.0),
            velocity_offset: Vec3::zeros(),
            random_angle: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub controller: ControllerKind,
    pub gains: ControllerGains,
    pub classic: ClassicPidGains,
    pub inertia: InertiaModel,
    pub gravity: f64,
    /// s
    pub h: f64,
    /// s
    pub duration: f64,
    pub initial: InitialCondition,
    pub helix: HelixParams,
    pub reference_file: Option<PathBuf>,
    pub attitude_reference: AttitudeReference,
    /// rad
    pub yaw: f64,
    pub disturbance: Option<DisturbanceModel>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let inertia = InertiaModel::quadrotor();
        let gains = ControllerGains::default_for_mass(inertia.mass());
        ScenarioConfig {
            name: "default".into(),
            controller: ControllerKind::GeometricPid,
            classic: ClassicPidGains::matching(&gains),
            gains,
            inertia,
            gravity: GRAVITY,
            h: 0.01,
            duration: 30.0,
            initial: InitialCondition::default(),
            helix: HelixParams::default(),
            reference_file: None,
            attitude_reference: AttitudeReference::Feedback,
            yaw: 0.0,
            disturbance: None,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        if !(self.duration.is_finite() && self.duration >= self.h) {
            return Err(Error::InvalidParameter(format!(
                "duration must be at least h, got {}",
                self.duration
            )));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::InvalidParameter(
                "gravity must be nonnegative".into(),
            ));
        }
        if self.helix.radius < 0.0 {
            return Err(Error::InvalidParameter(
                "helix radius must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Number of integration steps; the run logs `steps() + 1` records.
    pub fn steps(&self) -> usize {
        (self.duration / self.h).round() as usize
    }

    pub fn gamma(&self) -> f64 {
        self.disturbance
            .as_ref()
            .map_or(0.0, DisturbanceModel::gamma)
    }

    /// `<output_dir>/<name>_<controller>`.
    pub fn output_stem(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}_{}", self.name, self.controller.name()))
    }
}

/// One logged step. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub b: Vec3,
    pub b_tilde_norm: f64,
    pub v_tilde_norm: f64,
    pub f: f64,
    pub tau: Vec3,
    pub tau_norm: f64,
    pub omega: Vec3,
    pub omega_norm: f64,
    /// `<K, I - Q>`
    pub phi: f64,
    pub v: f64,
    pub f_i: Vec3,
    pub d: Vec3,
    pub in_nbhd: bool,
}

/// Per-step quantities kept alongside the CSV records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub so3_error: f64,
    pub det_error: f64,
    /// `|log Q|`
    pub principal_angle: f64,
    pub body_rate: Vec3,
    /// Exact `dV/dt` including the gyroscopic coupling.
    pub v_dot_exact: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub records: Vec<StepRecord>,
    pub diagnostics: Vec<StepDiagnostics>,
}

enum ReferenceSource {
    Helix(HelixParams),
    Table(Vec<ReferenceSample>),
}

impl ReferenceSource {
    fn position(&self, k: usize, h: f64) -> PositionRefSample {
        match self {
            ReferenceSource::Helix(p) => helix_sample(p, k as f64 * h),
            ReferenceSource::Table(rows) => rows[k].pos,
        }
    }

    /// Feedforward sample for step `k`: `R_d[k]` with the rate carrying it to
    /// `R_d[k+1]` and the matching acceleration.
    fn feedforward(&self, k: usize) -> DesiredAttitudeSample {
        let ReferenceSource::Table(rows) = self else {
            unreachable!("feedforward references are tabulated")
        };
        DesiredAttitudeSample {
            r_d: rows[k].r_d,
            omega_d: rows[k + 1].omega_d,
            omega_d_dot: rows[k + 1].omega_d_dot,
        }
    }
}

fn initial_state(cfg: &ScenarioConfig, start: &PositionRefSample) -> BodyState {
    let r = if cfg.initial.random_angle > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let axis = loop {
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break v / n;
            }
        };
        Rotation::exp(&(axis * cfg.initial.random_angle))
    } else {
        Rotation::exp(&cfg.initial.attitude)
    };
    let v = start.v_d + cfg.initial.velocity_offset;
    BodyState {
        r,
        omega: cfg.initial.omega,
        b: start.b_d + cfg.initial.position_offset,
        nu: r.transpose() * v,
    }
}

fn build_reference(cfg: &ScenarioConfig) -> Result<ReferenceSource> {
    let needed = cfg.steps() + 3;
    if let Some(path) = &cfg.reference_file {
        let rows = read_reference_csv(path)?;
        if rows.len() < needed {
            return Err(Error::Config(format!(
                "reference file {} has {} rows, scenario needs {needed}",
                path.display(),
                rows.len()
            )));
        }
        if rows.len() > 1 && ((rows[1].pos.t - rows[0].pos.t) - cfg.h).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "reference file {} is not sampled at h = {}",
                path.display(),
                cfg.h
            )));
        }
        return Ok(ReferenceSource::Table(rows));
    }
    match cfg.attitude_reference {
        AttitudeReference::Feedback => Ok(ReferenceSource::Helix(cfg.helix)),
        AttitudeReference::Feedforward => Ok(ReferenceSource::Table(helix_reference(
            &cfg.helix,
            cfg.yaw,
            cfg.inertia.mass(),
            cfg.gravity,
            cfg.h,
            needed,
        )?)),
    }
}

struct Loop<'a> {
    cfg: &'a ScenarioConfig,
    reference: ReferenceSource,
}

impl Loop<'_> {
    fn thrust(&self, state: &BodyState, pos: &PositionRefSample) -> f64 {
        let m = self.cfg.inertia.mass();
        position_thrust(
            state,
            &pos.b_d,
            &pos.v_d,
            &pos.v_d_dot,
            &self.cfg.gains,
            m,
            self.cfg.gravity,
        )
    }

    fn force_attitude(&self, state: &BodyState, pos: &PositionRefSample) -> Result<Rotation> {
        let m = self.cfg.inertia.mass();
        let force = desired_force(
            state,
            &pos.b_d,
            &pos.v_d,
            &pos.v_d_dot,
            &self.cfg.gains,
            m,
            self.cfg.gravity,
        );
        thrust_attitude(&force, self.cfg.yaw)
    }

    /// Desired attitude sample at step `k` in feedback mode. The next two
    /// translational states depend only on the current attitude, its rate
    /// and the thrust law, so they are predicted exactly.
    fn feedback_sample(
        &self,
        k: usize,
        state: &BodyState,
        f: f64,
    ) -> Result<DesiredAttitudeSample> {
        let (h, g) = (self.cfg.h, self.cfg.gravity);
        let coast = |s: &BodyState, f: f64| {
            plant_step(
                s,
                &WrenchInput {
                    f,
                    ..Default::default()
                },
                &self.cfg.inertia,
                g,
                h,
            )
        };
        let pos0 = self.reference.position(k, h);
        let pos1 = self.reference.position(k + 1, h);
        let pos2 = self.reference.position(k + 2, h);
        let next = coast(state, f);
        let after = coast(&next, self.thrust(&next, &pos1));
        let seq = [
            self.force_attitude(state, &pos0)?,
            self.force_attitude(&next, &pos1)?,
            self.force_attitude(&after, &pos2)?,
        ];
        let rates = discrete_desired_rates(&seq, h)?;
        Ok(DesiredAttitudeSample {
            r_d: seq[0],
            omega_d: rates[1].0,
            omega_d_dot: rates[1].1,
        })
    }

    fn desired(&self, k: usize, state: &BodyState, f: f64) -> Result<DesiredAttitudeSample> {
        match (&self.reference, self.cfg.attitude_reference) {
            (ReferenceSource::Table(_), _) if self.cfg.reference_file.is_some() => {
                Ok(self.reference.feedforward(k))
            }
            (_, AttitudeReference::Feedback) => self.feedback_sample(k, state, f),
            (_, AttitudeReference::Feedforward) => Ok(self.reference.feedforward(k)),
        }
    }
}

/// Runs the configured scenario. Identical configs give identical runs.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimRun> {
    cfg.validate()?;
    let lp = Loop {
        cfg,
        reference: build_reference(cfg)?,
    };
    let (h, n) = (cfg.h, cfg.steps());
    let gamma = cfg.gamma();
    let gains = &cfg.gains;
    let inertia = &cfg.inertia;

    let mut state = initial_state(cfg, &lp.reference.position(0, h));
    let mut pid = PidControllerState::default();
    let mut classic = ClassicPidState::default();
    let mut records = Vec::with_capacity(n + 1);
    let mut diagnostics = Vec::with_capacity(n + 1);

    for k in 0..=n {
        let t = k as f64 * h;
        let pos = lp.reference.position(k, h);
        let f = lp.thrust(&state, &pos);
        let desired = lp.desired(k, &state, f).map_err(|e| e.at_step(k))?;
        let errors = attitude_errors(&state.r, &state.omega, &desired);
        let d = cfg
            .disturbance
            .as_ref()
            .map_or(Vec3::zeros(), |m| disturbance_at(m, t));

        let tau = match cfg.controller {
            ControllerKind::GeometricPid => {
                pid_torque(&errors, &pid, &desired, &state.omega, gains, inertia)
            }
            ControllerKind::GeometricPd => {
                pd_torque(&errors, &desired, &state.omega, gains, inertia)
            }
            ControllerKind::ClassicPid => {
                let (tau, next) =
                    classic_pid_torque(&state.r, &state.omega, &desired, &cfg.classic, &classic, h)
                        .map_err(|e| e.at_step(k))?;
                classic = next;
                tau
            }
        };

        records.push(StepRecord {
            t,
            b: state.b,
            b_tilde_norm: (state.b - pos.b_d).norm(),
            v_tilde_norm: (state.velocity() - pos.v_d).norm(),
            f,
            tau,
            tau_norm: tau.norm(),
            omega: errors.omega,
            omega_norm: errors.omega.norm(),
            phi: morse_error(&errors.q, gains.k()),
            v: lyapunov_value(&errors, &pid.f_i, gains, inertia),
            f_i: pid.f_i,
            d,
            in_nbhd: disturbance_neighborhood_check(&errors, &pid.f_i, gains, gamma),
        });
        diagnostics.push(StepDiagnostics {
            so3_error: state.r.orthonormality_error(),
            det_error: (state.r.matrix().determinant() - 1.0).abs(),
            principal_angle: errors.q.angle(),
            body_rate: state.omega,
            v_dot_exact: lyapunov_rate_with_gyroscopic(
                &errors,
                &pid.f_i,
                &state.omega,
                gains,
                inertia,
            ),
        });

        if k == n {
            break;
        }
        if cfg.controller == ControllerKind::GeometricPid {
            pid = step_integrator(&pid, &integrator_rhs(&errors, gains, inertia), h);
        }
        state = plant_step(&state, &WrenchInput { tau, f, d }, inertia, cfg.gravity, h);
        if !state.is_finite() || !pid.f_i.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite.at_step(k + 1));
        }
    }
    Ok(SimRun {
        records,
        diagnostics,
    })
}

/// Threshold on `<K, I - Q>` for the settling time metric.
pub const PHI_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub steady_omega_mean: f64,
    pub steady_omega_max: f64,
    pub steady_phi_mean: f64,
    pub steady_phi_max: f64,
    /// `sum_k h |tau_k|` over the run.
    pub effort: f64,
    pub peak_tau: f64,
    /// First time after which `phi` stays below [`PHI_THRESHOLD`].
    pub time_to_threshold: Option<f64>,
    pub final_phi: f64,
    pub final_omega: f64,
}

/// Steady-state statistics use the last quarter of the records.
pub fn metrics(records: &[StepRecord]) -> Result<Metrics> {
    let n = records.len();
    if n == 0 {
        return Err(Error::EmptyRun);
    }
    let tail = &records[(3 * n) / 4..];
    let mean = |f: fn(&StepRecord) -> f64| tail.iter().map(f).sum::<f64>() / tail.len() as f64;
    let max = |f: fn(&StepRecord) -> f64| tail.iter().map(f).fold(0.0, f64::max);
    let effort = records
        .windows(2)
        .map(|w| (w[1].t - w[0].t) * w[0].tau_norm)
        .sum();
    let settle = records
        .iter()
        .rposition(|r| r.phi.is_nan() || r.phi >= PHI_THRESHOLD);
    let time_to_threshold = match settle {
        None => Some(records[0].t),
        Some(i) if i + 1 < n => Some(records[i + 1].t),
        Some(_) => None,
    };
    let last = &records[n - 1];
    Ok(Metrics {
        steady_omega_mean: mean(|r| r.omega_norm),
        steady_omega_max: max(|r| r.omega_norm),
        steady_phi_mean: mean(|r| r.phi),
        steady_phi_max: max(|r| r.phi),
        effort,
        peak_tau: records.iter().map(|r| r.tau_norm).fold(0.0, f64::max),
        time_to_threshold,
        final_phi: last.phi,
        final_omega: last.omega_norm,
    })
}

impl Metrics {
    /// Flat `key = value` text.
    pub fn to_text(&self) -> String {
        let ttt = self
            .time_to_threshold
            .map_or_else(|| "none".to_string(), fmt_f64);
        format!(
            "steady_omega_mean = {}\nsteady_omega_max = {}\nsteady_phi_mean = {}\nsteady_phi_max = {}\n\
             effort = {}\npeak_tau = {}\ntime_to_threshold = {}\nfinal_phi = {}\nfinal_omega = {}\n",
            fmt_f64(self.steady_omega_mean),
            fmt_f64(self.steady_omega_max),
            fmt_f64(self.steady_phi_mean),
            fmt_f64(self.steady_phi_max),
            fmt_f64(self.effort),
            fmt_f64(self.peak_tau),
            ttt,
            fmt_f64(self.final_phi),
            fmt_f64(self.final_omega),
        )
    }
}

pub const CSV_HEADER: [&str; 24] = [
    "t",
    "bx",
    "by",
    "bz",
    "btilde_norm",
    "vtilde_norm",
    "f",
    "taux",
    "tauy",
    "tauz",
    "tau_norm",
    "omx",
    "omy",
    "omz",
    "om_norm",
    "phi",
    "V",
    "FIx",
    "FIy",
    "FIz",
    "Dx",
    "Dy",
    "Dz",
    "in_nbhd",
];

pub fn write_csv(records: &[StepRecord], path: &Path) -> Result<()> {
    let rows = records.iter().map(|r| {
        let mut fields = vec![r.t];
        fields.extend(r.b.iter());
        fields.extend([r.b_tilde_norm, r.v_tilde_norm, r.f]);
        fields.extend(r.tau.iter());
        fields.push(r.tau_norm);
        fields.extend(r.omega.iter());
        fields.extend([r.omega_norm, r.phi, r.v]);
        fields.extend(r.f_i.iter());
        fields.extend(r.d.iter());
        let mut row: Vec<String> = fields.into_iter().map(fmt_f64).collect();
        row.push(if r.in_nbhd { "1" } else { "0" }.to_string());
        row
    });
    write_table(path, &CSV_HEADER, rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let mut out = Vec::new();
    for (row, rec) in read_table(path, &CSV_HEADER)?.iter().enumerate() {
        let v = parse_fields(rec, row)?;
        let in_nbhd = match &rec[CSV_HEADER.len() - 1] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::SchemaMismatch(format!(
                    "row {row}: bad in_nbhd flag {other:?}"
                )))
            }
        };
        let v3 = |i: usize| Vec3::new(v[i], v[i + 1], v[i + 2]);
        out.push(StepRecord {
            t: v[0],
            b: v3(1),
            b_tilde_norm: v[4],
            v_tilde_norm: v[5],
            f: v[6],
            tau: v3(7),
            tau_norm: v[10],
            omega: v3(11),
            omega_norm: v[14],
            phi: v[15],
            v: v[16],
            f_i: v3(17),
            d: v3(20),
            in_nbhd,
        });
    }
    Ok(out)
}

/// Per-step Lyapunov slack `tol_V` (scaled by `h`).
pub const LYAPUNOV_TOL: f64 = 1e-3;
/// Orthonormality and determinant drift allowed on logged attitudes.
pub const SO3_DRIFT_TOL: f64 = 1e-9;
/// Minimum fraction of late steps inside the disturbance neighborhood.
pub const NEIGHBORHOOD_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub outcome: CheckOutcome,
    pub detail: String,
}

/// Largest per-step increase `V_{k+1} - V_k`.
pub fn max_lyapunov_increase(records: &[StepRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| w[1].v - w[0].v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Fraction of the last half of the run spent inside the neighborhood.
pub fn late_neighborhood_fraction(records: &[StepRecord]) -> f64 {
    let late = &records[records.len() / 2..];
    if late.is_empty() {
        return 0.0;
    }
    late.iter().filter(|r| r.in_nbhd).count() as f64 / late.len() as f64
}

/// Invariant checks scoped to the configured run.
pub fn audit(cfg: &ScenarioConfig, run: &SimRun) -> Vec<AuditCheck> {
    let mut checks = Vec::new();
    let drift = run
        .diagnostics
        .iter()
        .map(|d| d.so3_error.max(d.det_error))
        .fold(0.0, f64::max);
    checks.push(AuditCheck {
        name: "so3-drift",
        outcome: if drift <= SO3_DRIFT_TOL {
            CheckOutcome::Pass
        } else {
            CheckOutcome::Fail
        },
        detail: format!("max drift {drift:.3e} (tol {SO3_DRIFT_TOL:e})"),
    });

    let pid = cfg.controller == ControllerKind::GeometricPid;
    let lyap = if pid && cfg.disturbance.is_none() {
        let inc = max_lyapunov_increase(&run.records);
        let tol = LYAPUNOV_TOL * cfg.h;
        AuditCheck {
            name: "lyapunov-decrease",
            outcome: if inc <= tol {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail
            },
            detail: format!("max V increase {inc:.3e} per step (tol {tol:.1e})"),
        }
    } else {
        AuditCheck {
            name: "lyapunov-decrease",
            outcome: CheckOutcome::NotApplicable,
            detail: "requires geometric-pid without disturbance".into(),
        }
    };
    checks.push(lyap);

    let nbhd = if pid && cfg.disturbance.is_some() {
        let frac = late_neighborhood_fraction(&run.records);
        AuditCheck {
            name: "disturbance-neighborhood",
            outcome: if frac >= NEIGHBORHOOD_FRACTION {
                CheckOutcome::Pass
            } else {
                CheckOutcome::Fail
            },
            detail: format!(
                "{:.1}% of late steps inside (need {:.0}%), gamma {:.4}",
                frac * 100.0,
                NEIGHBORHOOD_FRACTION * 100.0,
                cfg.gamma()
            ),
        }
    } else {
        AuditCheck {
            name: "disturbance-neighborhood",
            outcome: CheckOutcome::NotApplicable,
            detail: "requires geometric-pid with disturbance".into(),
        }
    };
    checks.push(nbhd);
    checks
}
