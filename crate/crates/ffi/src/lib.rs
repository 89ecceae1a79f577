//! C ABI over `coinflip-lab`.
//!
//! Every fallible call returns a [`CfStatus`]; on failure the message is
//! available from [`cf_last_error`] on the same thread. Protocols are opaque
//! handles created by `cf_protocol_*` and released with [`cf_protocol_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coinflip_lab::adversary::{
    alice_purification_strategy, alice_symmetrized_bound, alice_symmetrized_strategy,
    bob_helstrom_strategy, run_planned, PlannedAttack,
};
use coinflip_lab::family::{analyze_family, parse_family_json};
use coinflip_lab::protocol::{
    exact_outcome_distribution, honest_frequencies, parse_protocol_json, section3_spec, Outcome,
    ProtocolSpec,
};
use coinflip_lab::qmatrix::Party;
use coinflip_lab::trajectory::{
    fidelity_trajectory, main_lemma_strategy, round_lower_bound, start_lemma_strategy,
};
use coinflip_lab::Error;

/// Opaque protocol handle.
pub struct CfProtocol {
    spec: ProtocolSpec,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    Invariant = 3,
    Domain = 4,
    Unsupported = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfParty {
    Alice = 0,
    Bob = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfAttackMode {
    Helstrom = 0,
    StartLemma = 1,
    MainLemma = 2,
    Symmetrized = 3,
    Purification = 4,
}

/// Probabilities (or frequencies) of outcome 0, outcome 1 and abort.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CfDistribution {
    pub zero: f64,
    pub one: f64,
    pub abort: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CfAttackResult {
    /// NaN when the attack claims no analytic value.
    pub analytic: f64,
    pub exact: f64,
    pub exact_abort: f64,
    pub empirical: f64,
    pub abort: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CfTrajectoryRow {
    pub f_a: f64,
    pub f_b: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CfFamilyResult {
    pub trace_distance: f64,
    pub fidelity: f64,
    pub bob_success: f64,
    pub alice_success: f64,
    pub max_bias: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> CfStatus {
    match err {
        Error::Parse(_) | Error::Json(_) => CfStatus::Parse,
        Error::Domain(_) => CfStatus::Domain,
        Error::UnsupportedShape(_) => CfStatus::Unsupported,
        _ => CfStatus::Invariant,
    }
}

struct Fail(CfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CfStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, record any failure, and never unwind into C.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CfStatus::Panic
        }
    }
}

unsafe fn protocol_ref<'a>(p: *const CfProtocol) -> Result<&'a ProtocolSpec, Fail> {
    p.as_ref().map(|p| &p.spec).ok_or_else(|| null("protocol"))
}

unsafe fn out_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null("json"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(CfStatus::Parse, "input is not valid UTF-8".into()))
}

fn outcome(target: u8) -> Result<Outcome, Fail> {
    match target {
        0 | 1 => Ok(Outcome::bit(target)),
        _ => Err(Fail(CfStatus::Domain, format!("target must be 0 or 1, got {target}"))),
    }
}

/// Message of the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// NUL-terminated library version.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The built-in three-round commit-reveal protocol. Free with `cf_protocol_free`.
#[no_mangle]
pub extern "C" fn cf_protocol_section3() -> *mut CfProtocol {
    catch_unwind(|| Box::into_raw(Box::new(CfProtocol { spec: section3_spec() })))
        .unwrap_or(ptr::null_mut())
}

/// Parse a protocol (or state-family) JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_protocol_from_json(json: *const c_char, out: *mut *mut CfProtocol) -> CfStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        *out = ptr::null_mut();
        let json = text(json)?;
        let is_family = json.contains("\"branches\"");
        let spec = if is_family {
            parse_family_json(json)?.to_protocol("family")?
        } else {
            parse_protocol_json(json)?
        };
        *out = Box::into_raw(Box::new(CfProtocol { spec }));
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_protocol_free(p: *mut CfProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of communication rounds, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_protocol_num_rounds(p: *const CfProtocol) -> usize {
    p.as_ref().map_or(0, |p| p.spec.num_rounds())
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_protocol_exact_distribution(p: *const CfProtocol, out: *mut CfDistribution) -> CfStatus {
    guard(|| {
        let spec = protocol_ref(p)?;
        let d = exact_outcome_distribution(spec);
        *out_mut(out, "out")? = CfDistribution {
            zero: d.zero,
            one: d.one,
            abort: d.abort,
        };
        Ok(())
    })
}

/// Empirical outcome frequencies of `trials` seeded honest runs.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_protocol_simulate(
    p: *const CfProtocol,
    trials: u64,
    seed: u64,
    out: *mut CfDistribution,
) -> CfStatus {
    guard(|| {
        let spec = protocol_ref(p)?;
        let out = out_mut(out, "out")?;
        if trials == 0 {
            return Err(Fail(CfStatus::Domain, "trials must be at least 1".into()));
        }
        let c = honest_frequencies(spec, trials, seed)?;
        *out = CfDistribution {
            zero: c.frequency(Outcome::Zero),
            one: c.frequency(Outcome::One),
            abort: c.frequency(Outcome::Abort),
        };
        Ok(())
    })
}

fn plan(
    spec: &ProtocolSpec,
    cheater: Party,
    mode: CfAttackMode,
    target: Outcome,
    round: usize,
    delta1: f64,
    delta2: f64,
) -> Result<PlannedAttack, Fail> {
    let need = |p: Party| {
        if cheater == p {
            Ok(())
        } else {
            Err(Fail(CfStatus::Domain, format!("this mode is an attack by {p}")))
        }
    };
    Ok(match mode {
        CfAttackMode::Helstrom => {
            need(Party::Bob)?;
            bob_helstrom_strategy(spec, target)?
        }
        CfAttackMode::Symmetrized => {
            need(Party::Alice)?;
            alice_symmetrized_strategy(spec, target, delta1, delta2)?
        }
        CfAttackMode::Purification => {
            need(Party::Alice)?;
            alice_purification_strategy(spec, target)?
        }
        CfAttackMode::StartLemma => start_lemma_strategy(spec, cheater, target)?,
        CfAttackMode::MainLemma => main_lemma_strategy(spec, cheater, round, target)?,
    })
}

/// Run a cheating strategy. `round` is used by the main-lemma mode and
/// `delta1`/`delta2` by the symmetrized mode; other modes ignore them.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_attack(
    p: *const CfProtocol,
    cheater: CfParty,
    mode: CfAttackMode,
    target: u8,
    round: usize,
    delta1: f64,
    delta2: f64,
    trials: u64,
    seed: u64,
    out: *mut CfAttackResult,
) -> CfStatus {
    guard(|| {
        let spec = protocol_ref(p)?;
        let out = out_mut(out, "out")?;
        if trials == 0 {
            return Err(Fail(CfStatus::Domain, "trials must be at least 1".into()));
        }
        let cheater = match cheater {
            CfParty::Alice => Party::Alice,
            CfParty::Bob => Party::Bob,
        };
        let planned = plan(spec, cheater, mode, outcome(target)?, round, delta1, delta2)?;
        let r = run_planned(spec, &planned, trials, seed)?;
        *out = CfAttackResult {
            analytic: r.analytic.unwrap_or(f64::NAN),
            exact: r.exact,
            exact_abort: r.exact_abort,
            empirical: r.empirical,
            abort: r.abort,
        };
        Ok(())
    })
}

/// Branch fidelities for rounds `0..=k`. Writes up to `capacity` rows and
/// stores the required count in `written`; returns `BUFFER_TOO_SMALL` if
/// `capacity < k + 1`. `rows` may be null when `capacity` is 0.
///
/// # Safety
/// `rows` must point to `capacity` writable rows and `written` be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_trajectory(
    p: *const CfProtocol,
    rows: *mut CfTrajectoryRow,
    capacity: usize,
    written: *mut usize,
) -> CfStatus {
    guard(|| {
        let spec = protocol_ref(p)?;
        let written = out_mut(written, "written")?;
        let traj = fidelity_trajectory(spec)?;
        *written = traj.rows.len();
        if capacity < traj.rows.len() {
            return Err(Fail(
                CfStatus::BufferTooSmall,
                format!("need {} rows, got {capacity}", traj.rows.len()),
            ));
        }
        if rows.is_null() {
            return Err(null("rows"));
        }
        let dst = std::slice::from_raw_parts_mut(rows, traj.rows.len());
        for (d, r) in dst.iter_mut().zip(&traj.rows) {
            *d = CfTrajectoryRow { f_a: r.f_a, f_b: r.f_b };
        }
        Ok(())
    })
}

/// Optimal cheating figures for a state-family JSON document.
///
/// # Safety
/// `json` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_family_analyze_json(json: *const c_char, out: *mut CfFamilyResult) -> CfStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        let r = analyze_family(&parse_family_json(text(json)?)?)?;
        *out = CfFamilyResult {
            trace_distance: r.trace_distance,
            fidelity: r.fidelity,
            bob_success: r.bob_success,
            alice_success: r.alice_success,
            max_bias: r.max_bias,
        };
        Ok(())
    })
}

/// Smallest round count compatible with bias `epsilon` in (0, 1/4).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_round_lower_bound(epsilon: f64, out: *mut usize) -> CfStatus {
    guard(|| {
        *out_mut(out, "out")? = round_lower_bound(epsilon)?;
        Ok(())
    })
}

/// Alice's symmetrized success at message weights `(delta1, delta2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_eq2_bound(delta1: f64, delta2: f64, out: *mut f64) -> CfStatus {
    guard(|| {
        *out_mut(out, "out")? = alice_symmetrized_bound(delta1, delta2)?;
        Ok(())
    })
}
