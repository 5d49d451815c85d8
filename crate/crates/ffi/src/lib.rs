//! C ABI over the `pnp-dg` solver.
//!
//! A solver is created from a built-in scenario name or a JSON scenario, advanced in time,
//! and queried for coefficients and diagnostics. Every entry point returns a [`PnpStatus`];
//! on failure a message for the calling thread is available from [`pnp_last_error`].
//! Handles are opaque and must be released with [`pnp_solver_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pnp_dg::field::DGField;
use pnp_dg::scenario::{builtin_scenario, ScenarioConfig};
use pnp_dg::stepper::{PnpState, PnpSystem, Scheme};
use pnp_dg::DgError;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Solver = 4,
    BufferTooSmall = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Opaque solver handle.
pub struct PnpSolver {
    config: ScenarioConfig,
    system: PnpSystem,
    state: PnpState,
    scheme: Scheme,
    dt: f64,
    steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (PnpStatus, String);

fn from_dg(e: DgError) -> Failure {
    let status = match e.root() {
        DgError::Config(_) | DgError::Json(_) => PnpStatus::Config,
        _ => PnpStatus::Solver,
    };
    (status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PnpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PnpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside the solver");
            PnpStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err((PnpStatus::NullPointer, "string argument is null".into()));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (PnpStatus::InvalidUtf8, "string argument is not valid UTF-8".into()))
}

unsafe fn solver_ref<'a>(s: *const PnpSolver) -> Result<&'a PnpSolver, Failure> {
    s.as_ref()
        .ok_or((PnpStatus::NullPointer, "solver handle is null".into()))
}

unsafe fn solver_mut<'a>(s: *mut PnpSolver) -> Result<&'a mut PnpSolver, Failure> {
    s.as_mut()
        .ok_or((PnpStatus::NullPointer, "solver handle is null".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err((PnpStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_field(field: &DGField, buf: *mut f64, len: usize) -> Result<(), Failure> {
    let data = field.as_slice();
    if buf.is_null() {
        return Err((PnpStatus::NullPointer, "output buffer is null".into()));
    }
    if len < data.len() {
        return Err((
            PnpStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", data.len()),
        ));
    }
    ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
    Ok(())
}

impl PnpSolver {
    fn new(config: ScenarioConfig) -> Result<Self, Failure> {
        config.validate().map_err(from_dg)?;
        let system = config.build_system().map_err(from_dg)?;
        let stepper = config.time.stepper().map_err(from_dg)?;
        let state = config.initial_state().map_err(from_dg)?;
        Ok(Self {
            dt: system.time_step(stepper.mu),
            scheme: stepper.scheme,
            config,
            system,
            state,
            steps: 0,
        })
    }

    fn advance(&mut self, dt: f64) -> Result<(), Failure> {
        let out = self
            .system
            .step(&self.state, dt, self.scheme, self.steps)
            .map_err(|e| {
                from_dg(DgError::AtTime {
                    time: self.state.time,
                    source: Box::new(e),
                })
            })?;
        self.state = out.state;
        self.steps += 1;
        Ok(())
    }

    fn advance_to(&mut self, target: f64) -> Result<(), Failure> {
        if !target.is_finite() || target < self.state.time {
            return Err((
                PnpStatus::OutOfRange,
                format!("target time {target} is before the current time {}", self.state.time),
            ));
        }
        let span = target - self.state.time;
        if span == 0.0 {
            return Ok(());
        }
        let n = ((span / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let (t0, h) = (self.state.time, span / n as f64);
        for i in 1..=n {
            self.advance(h)?;
            self.state.time = if i == n { target } else { t0 + i as f64 * h };
        }
        Ok(())
    }

    fn species_index(&self, species: usize) -> Result<(), Failure> {
        if species >= self.state.concentrations.len() {
            return Err((
                PnpStatus::OutOfRange,
                format!(
                    "species {species} out of range ({} species)",
                    self.state.concentrations.len()
                ),
            ));
        }
        Ok(())
    }

    fn potential(&self) -> Result<DGField, Failure> {
        let mut c = self.state.concentrations.clone();
        self.system.limit(&mut c, self.steps).map_err(from_dg)?;
        self.system.solve_potential(&c, self.state.time).map_err(from_dg)
    }
}

fn create(config: Result<ScenarioConfig, Failure>, out: *mut *mut PnpSolver) -> Result<(), Failure> {
    if out.is_null() {
        return Err((PnpStatus::NullPointer, "output handle pointer is null".into()));
    }
    let solver = Box::new(PnpSolver::new(config?)?);
    unsafe { out.write(Box::into_raw(solver)) };
    Ok(())
}

/// Create a solver for a built-in scenario (`example1` to `example4`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_from_scenario(name: *const c_char, out: *mut *mut PnpSolver) -> PnpStatus {
    guard(|| {
        let name = read_str(name)?;
        create(builtin_scenario(name).map_err(from_dg), out)
    })
}

/// Create a solver from a JSON scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_from_json(json: *const c_char, out: *mut *mut PnpSolver) -> PnpStatus {
    guard(|| {
        let text = read_str(json)?;
        create(ScenarioConfig::from_json(text).map_err(from_dg), out)
    })
}

/// Release a solver. Passing null is allowed.
///
/// # Safety
/// `solver` must come from one of the constructors and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_free(solver: *mut PnpSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Take `n` steps of the configured size `μ h²`.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_step(solver: *mut PnpSolver, n: usize) -> PnpStatus {
    guard(|| {
        let s = solver_mut(solver)?;
        let dt = s.dt;
        for _ in 0..n {
            s.advance(dt)?;
        }
        Ok(())
    })
}

/// Advance to time `t` with equal steps no larger than the configured one.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_advance_to(solver: *mut PnpSolver, t: f64) -> PnpStatus {
    guard(|| solver_mut(solver)?.advance_to(t))
}

/// Advance to the final time of the scenario.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_run(solver: *mut PnpSolver) -> PnpStatus {
    guard(|| {
        let s = solver_mut(solver)?;
        let t = s.config.time.final_time;
        s.advance_to(t)
    })
}

/// Current time and number of steps taken.
///
/// # Safety
/// `solver` must be a live handle; `time` and `steps` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_time(solver: *const PnpSolver, time: *mut f64, steps: *mut usize) -> PnpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        write_out(time, s.state.time)?;
        write_out(steps, s.steps)
    })
}

/// Number of species, cells and the polynomial degree.
///
/// # Safety
/// `solver` must be a live handle; the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_shape(
    solver: *const PnpSolver,
    species: *mut usize,
    cells: *mut usize,
    degree: *mut usize,
) -> PnpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        write_out(species, s.state.concentrations.len())?;
        write_out(cells, s.config.cells)?;
        write_out(degree, s.config.degree)
    })
}

/// Copy the Legendre coefficients of one species, cell by cell, into `buf`.
/// `len` must be at least `cells * (degree + 1)`.
///
/// # Safety
/// `solver` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_concentration(
    solver: *const PnpSolver,
    species: usize,
    buf: *mut f64,
    len: usize,
) -> PnpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        s.species_index(species)?;
        copy_field(&s.state.concentrations[species], buf, len)
    })
}

/// Copy the Legendre coefficients of the potential of the current state into `buf`.
///
/// # Safety
/// `solver` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_potential(solver: *const PnpSolver, buf: *mut f64, len: usize) -> PnpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        copy_field(&s.potential()?, buf, len)
    })
}

/// Total mass of one species.
///
/// # Safety
/// `solver` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_mass(solver: *const PnpSolver, species: usize, out: *mut f64) -> PnpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        s.species_index(species)?;
        write_out(out, s.state.concentrations[species].total_mass())
    })
}

/// Discrete free energy of the current state.
///
/// # Safety
/// `solver` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pnp_solver_free_energy(solver: *const PnpSolver, out: *mut f64) -> PnpStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let mut c = s.state.concentrations.clone();
        s.system.limit(&mut c, s.steps).map_err(from_dg)?;
        let psi = s.system.solve_potential(&c, s.state.time).map_err(from_dg)?;
        let f = s.system.free_energy(&c, &psi, s.state.time).map_err(from_dg)?;
        write_out(out, f)
    })
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn pnp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn pnp_status_string(status: PnpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        PnpStatus::Ok => c"ok",
        PnpStatus::NullPointer => c"null pointer",
        PnpStatus::InvalidUtf8 => c"invalid UTF-8",
        PnpStatus::Config => c"configuration error",
        PnpStatus::Solver => c"solver failure",
        PnpStatus::BufferTooSmall => c"buffer too small",
        PnpStatus::OutOfRange => c"argument out of range",
        PnpStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pnp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
