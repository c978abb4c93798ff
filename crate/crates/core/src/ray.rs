//! Hamiltonian ray tracing in time and depth parameterization.
//!
//! The characteristic Hamiltonian of the wave operator is
//! `P(x, z, xi, zeta, tau) = -c(x,z)^-2 tau^2 + xi^2 + zeta^2`; rays are its
//! bicharacteristics. Upward-traveling rays (depth decreasing while time
//! increases) carry a vertical wavenumber `zeta = b(x, z, xi, tau)` with
//! `b = sgn(tau) sqrt(tau^2/c^2 - xi^2)`, which is the branch the depth
//! tracer integrates. The tracer is the kinematic reference used to pin
//! the sign conventions and event times of every wave operator in the
//! crate.

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2D};
use crate::model::ModelView;

/// Relative on-shell tolerance accepted for input states.
pub const ON_SHELL_TOL: f64 = 1e-6;

/// A point on a bicharacteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayState {
    /// Horizontal position (m).
    pub x: f64,
    /// Depth (m), increasing downward.
    pub z: f64,
    /// Travel time since the take-off point (s).
    pub t: f64,
    /// Horizontal wavenumber (rad/m).
    pub xi: f64,
    /// Vertical wavenumber (rad/m).
    pub zeta: f64,
    /// Frequency (rad/s); invariant along the flow.
    pub tau: f64,
}

impl RayState {
    /// State at `(x, z)` with take-off direction `alpha` (unit vector,
    /// `alpha.1 < 0` points toward the surface) via
    /// `(xi, zeta) = -tau/c * alpha`. The ray velocity is `+c * alpha`.
    pub fn from_takeoff(x: f64, z: f64, alpha: (f64, f64), tau: f64, model: &ModelView) -> Self {
        let c = model.c_at(x, z);
        RayState { x, z, t: 0.0, xi: -tau / c * alpha.0, zeta: -tau / c * alpha.1, tau }
    }

    /// `P / (tau/c)^2`, the normalized Hamiltonian residual.
    pub fn on_shell_residual(&self, model: &ModelView) -> f64 {
        let w = model.w_at(self.x, self.z);
        let scale = w * self.tau * self.tau;
        ((self.xi * self.xi + self.zeta * self.zeta - scale) / scale).abs()
    }
}

/// A pair of bicharacteristics sharing depth and frequency: the state of
/// survey-sinking continuation.
#[derive(Debug, Clone, Copy)]
pub struct DsrRayState {
    pub source_leg: RayState,
    pub receiver_leg: RayState,
}

impl DsrRayState {
    pub fn new(source_leg: RayState, receiver_leg: RayState) -> Result<Self> {
        if (source_leg.z - receiver_leg.z).abs() > 1e-9 {
            return Err(Error::Contract("DSR legs must share depth".into()));
        }
        if (source_leg.tau - receiver_leg.tau).abs() > 1e-12 * source_leg.tau.abs() {
            return Err(Error::Contract("DSR legs must share frequency".into()));
        }
        Ok(DsrRayState { source_leg, receiver_leg })
    }

    pub fn z(&self) -> f64 {
        self.source_leg.z
    }

    pub fn total_time(&self) -> f64 {
        self.source_leg.t + self.receiver_leg.t
    }

    /// Vertical wavenumber of the pair.
    pub fn pair_zeta(&self) -> f64 {
        self.source_leg.zeta + self.receiver_leg.zeta
    }
}

/// One row of the sampled canonical relation: a predicted reflection event.
#[derive(Debug, Clone, Copy)]
pub struct EventRow {
    pub x: f64,
    pub z: f64,
    pub s: f64,
    pub r: f64,
    pub t_total: f64,
    /// Horizontal wavenumber at the source position, at tau = 1 rad/s
    /// (numerically the horizontal slowness in s/m).
    pub sigma: f64,
    /// Same for the receiver position.
    pub rho: f64,
}

/// Finite sampling of the canonical relation for one scatterer.
#[derive(Debug, Clone, Default)]
pub struct EventTable {
    pub rows: Vec<EventRow>,
}

impl EventTable {
    /// Row matching `(s, r)` within half a sample in both coordinates.
    pub fn lookup(&self, s: f64, r: f64, ds: f64, dr: f64) -> Option<&EventRow> {
        self.rows
            .iter()
            .find(|row| (row.s - s).abs() <= 0.5 * ds && (row.r - r).abs() <= 0.5 * dr)
    }
}

fn require_on_shell(state: &RayState, model: &ModelView) -> Result<()> {
    if state.tau == 0.0 {
        return Err(Error::Contract("ray state requires tau != 0".into()));
    }
    let res = state.on_shell_residual(model);
    if res > ON_SHELL_TOL {
        return Err(Error::Contract(format!(
            "ray state off-shell: residual {res:.3e} exceeds {ON_SHELL_TOL:.0e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct TimeDeriv {
    dx: f64,
    dz: f64,
    dxi: f64,
    dzeta: f64,
}

fn time_rhs(x: f64, z: f64, xi: f64, zeta: f64, tau: f64, model: &ModelView) -> TimeDeriv {
    let w = model.w_at(x, z);
    let (wx, wz) = model.grad_w(x, z);
    let inv = 1.0 / (w * tau);
    TimeDeriv {
        dx: -xi * inv,
        dz: -zeta * inv,
        dxi: -tau * wx / (2.0 * w),
        dzeta: -tau * wz / (2.0 * w),
    }
}

/// Fixed-step RK4 integration of the Hamilton system with time as the
/// evolution parameter. Terminates at `t_max` or on domain exit.
pub fn trace_ray_time(
    model: &Grid2D,
    start: RayState,
    dt: f64,
    t_max: f64,
) -> Result<Vec<RayState>> {
    let view = ModelView::new(model)?;
    require_on_shell(&start, &view)?;
    if !view.inside(start.x, start.z) {
        return Err(Error::Contract("ray start outside the model".into()));
    }
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::Config("trace_ray_time requires dt > 0 and t_max > 0".into()));
    }

    let mut path = vec![start];
    let mut s = start;
    let mut stepped = false;
    while s.t < t_max - 1e-15 {
        let h = dt.min(t_max - s.t);
        let next = advance_time(&s, h, &view);
        if !view.inside(next.x, next.z) {
            break;
        }
        s = next;
        path.push(s);
        stepped = true;
    }
    if !stepped {
        return Err(Error::Contract("ray exits the domain before completing one step".into()));
    }
    Ok(path)
}

/// Distance (in index units) to the next cell boundary of an axis when
/// moving in the given direction. States within `NODE_PAD` of a node are
/// pushed deliberately past it, so every integration segment starts
/// strictly inside one bilinear patch and no stage samples the wrong side
/// of a kink.
const NODE_PAD: f64 = 1e-6;

fn index_dist_to_boundary(frac: f64, forward: bool) -> f64 {
    let d = if forward { (frac.floor() + 1.0) - frac } else { frac - frac.ceil() + 1.0 };
    if d < NODE_PAD {
        d + NODE_PAD
    } else {
        d
    }
}

/// One nominal time step of size `h`, internally split at velocity-model
/// cell boundaries so that no RK4 stage straddles a kink of the bilinear
/// interpolant. The split points are predicted from the local velocity;
/// the prediction error only leaves sub-millimeter straddles, which is
/// second-order harmless.
fn advance_time(s: &RayState, h: f64, view: &ModelView) -> RayState {
    let ax = &view.grid().axes[0];
    let az = &view.grid().axes[1];
    let mut cur = *s;
    let mut remaining = h;
    for _ in 0..256 {
        if remaining <= 0.0 {
            return cur;
        }
        let w = view.w_at(cur.x, cur.z);
        let inv = 1.0 / (w * cur.tau);
        let vx = -cur.xi * inv;
        let vz = -cur.zeta * inv;
        let mut t_cross = f64::INFINITY;
        if vx.abs() > 1e-30 {
            let d = index_dist_to_boundary(ax.index_of(cur.x), vx > 0.0) * ax.delta;
            t_cross = t_cross.min(d / vx.abs());
        }
        if vz.abs() > 1e-30 {
            let d = index_dist_to_boundary(az.index_of(cur.z), vz > 0.0) * az.delta;
            t_cross = t_cross.min(d / vz.abs());
        }
        // 0.9 keeps the prediction conservative when the ray accelerates,
        // so a substep never silently straddles the node it aims for; the
        // iteration then converges onto the boundary geometrically and the
        // NODE_PAD escape carries it across
        let hh = remaining.min(0.9 * t_cross).max(1e-6 * h).min(remaining);
        cur = rk4_time_step(&cur, hh, view);
        remaining -= hh;
    }
    if remaining > 0.0 {
        cur = rk4_time_step(&cur, remaining, view);
    }
    cur
}

fn rk4_time_step(s: &RayState, h: f64, view: &ModelView) -> RayState {
    let k1 = time_rhs(s.x, s.z, s.xi, s.zeta, s.tau, view);
    let k2 = time_rhs(
        s.x + 0.5 * h * k1.dx,
        s.z + 0.5 * h * k1.dz,
        s.xi + 0.5 * h * k1.dxi,
        s.zeta + 0.5 * h * k1.dzeta,
        s.tau,
        view,
    );
    let k3 = time_rhs(
        s.x + 0.5 * h * k2.dx,
        s.z + 0.5 * h * k2.dz,
        s.xi + 0.5 * h * k2.dxi,
        s.zeta + 0.5 * h * k2.dzeta,
        s.tau,
        view,
    );
    let k4 = time_rhs(
        s.x + h * k3.dx,
        s.z + h * k3.dz,
        s.xi + h * k3.dxi,
        s.zeta + h * k3.dzeta,
        s.tau,
        view,
    );
    let w = h / 6.0;
    RayState {
        x: s.x + w * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
        z: s.z + w * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz),
        t: s.t + h,
        xi: s.xi + w * (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi),
        zeta: s.zeta + w * (k1.dzeta + 2.0 * k2.dzeta + 2.0 * k3.dzeta + k4.dzeta),
        tau: s.tau,
    }
}

/// Vertical slowness branch for upward continuation:
/// `b = sgn(tau) sqrt(tau^2 c^-2 - xi^2)`. Errors in the evanescent regime.
fn b_real(x: f64, z: f64, xi: f64, tau: f64, view: &ModelView) -> Result<f64> {
    let w = view.w_at(x, z);
    let a = tau * tau * w - xi * xi;
    if a <= 0.0 {
        return Err(Error::Domain(format!(
            "turning point: |xi| >= |tau|/c at z = {z:.3}"
        )));
    }
    Ok(tau.signum() * a.sqrt())
}

#[derive(Debug, Clone, Copy)]
struct DepthDeriv {
    dx: f64,
    dt: f64,
    dxi: f64,
}

fn depth_rhs(x: f64, z: f64, xi: f64, tau: f64, view: &ModelView) -> Result<DepthDeriv> {
    let b = b_real(x, z, xi, tau, view)?;
    let w = view.w_at(x, z);
    let (wx, _) = view.grad_w(x, z);
    Ok(DepthDeriv { dx: xi / b, dt: -tau * w / b, dxi: tau * tau * wx / (2.0 * b) })
}

/// Integrate the one-way Hamiltonian `zeta = b(x, z, xi, tau)` upward from
/// `z0` to `z_end < z0`. Time increases strictly as depth decreases. The
/// path truncates cleanly if the ray leaves the lateral aperture.
pub fn trace_ray_depth(
    model: &Grid2D,
    x0: f64,
    z0: f64,
    xi0: f64,
    tau: f64,
    dz: f64,
    z_end: f64,
) -> Result<Vec<RayState>> {
    let view = ModelView::new(model)?;
    trace_ray_depth_view(&view, x0, z0, xi0, tau, dz, z_end)
}

pub(crate) fn trace_ray_depth_view(
    view: &ModelView,
    x0: f64,
    z0: f64,
    xi0: f64,
    tau: f64,
    dz: f64,
    z_end: f64,
) -> Result<Vec<RayState>> {
    if tau == 0.0 {
        return Err(Error::Contract("tau must be nonzero".into()));
    }
    if !(dz > 0.0) {
        return Err(Error::Config("trace_ray_depth requires dz > 0".into()));
    }
    if z_end >= z0 {
        return Err(Error::Config("trace_ray_depth continues upward: z_end < z0".into()));
    }
    let b0 = b_real(x0, z0, xi0, tau, view)?;
    let mut s = RayState { x: x0, z: z0, t: 0.0, xi: xi0, zeta: b0, tau };
    let mut path = vec![s];

    let (xlo, xhi) = view.x_range();
    let mut z = z0;
    while z > z_end + 1e-12 {
        let h = dz.min(z - z_end);
        let next = advance_depth(&s, h, view)?;
        if next.x < xlo || next.x > xhi {
            break; // lateral exit: terminate cleanly
        }
        z -= h;
        s = next;
        path.push(s);
    }
    Ok(path)
}

/// One nominal depth step of size `h` (depth decreasing), split exactly at
/// the z-nodes of the velocity grid and at predicted lateral cell
/// crossings, so RK4 stages never straddle an interpolation kink.
fn advance_depth(s: &RayState, h: f64, view: &ModelView) -> Result<RayState> {
    let ax = &view.grid().axes[0];
    let az = &view.grid().axes[1];
    let mut cur = *s;
    let mut remaining = h;
    for _ in 0..256 {
        if remaining <= 0.0 {
            return Ok(cur);
        }
        let d = depth_rhs(cur.x, cur.z, cur.xi, cur.tau, view)?;
        // distance (in decreasing z) to the next z-node is exact in the
        // evolution parameter
        let mut z_cross = index_dist_to_boundary(az.index_of(cur.z), false) * az.delta;
        // lateral crossings: x changes by -dx/dz per unit depth decrease;
        // conservative factor as in the time tracer (the z-part is exact)
        let vx = -d.dx;
        if vx.abs() > 1e-30 {
            let dxb = index_dist_to_boundary(ax.index_of(cur.x), vx > 0.0) * ax.delta;
            z_cross = z_cross.min(0.9 * dxb / vx.abs());
        }
        let hh = remaining.min(z_cross).max(1e-6 * h).min(remaining);
        cur = rk4_depth_step(&cur, hh, view)?;
        remaining -= hh;
    }
    if remaining > 0.0 {
        cur = rk4_depth_step(&cur, remaining, view)?;
    }
    Ok(cur)
}

fn rk4_depth_step(s: &RayState, h: f64, view: &ModelView) -> Result<RayState> {
    // evolution downward in the parameter means depth decreases by h
    let k1 = depth_rhs(s.x, s.z, s.xi, s.tau, view)?;
    let k2 = depth_rhs(s.x - 0.5 * h * k1.dx, s.z - 0.5 * h, s.xi - 0.5 * h * k1.dxi, s.tau, view)?;
    let k3 = depth_rhs(s.x - 0.5 * h * k2.dx, s.z - 0.5 * h, s.xi - 0.5 * h * k2.dxi, s.tau, view)?;
    let k4 = depth_rhs(s.x - h * k3.dx, s.z - h, s.xi - h * k3.dxi, s.tau, view)?;
    let w = h / 6.0;
    let x = s.x - w * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    let z = s.z - h;
    let xi = s.xi - w * (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi);
    let t = s.t - w * (k1.dt + 2.0 * k2.dt + 2.0 * k3.dt + k4.dt);
    let zeta = b_real(x, z, xi, s.tau, view)?;
    Ok(RayState { x, z, t, xi, zeta, tau: s.tau })
}

/// Trace both legs of a survey-sinking pair on a shared depth grid,
/// verifying at every step that the pair's vertical wavenumber equals the
/// two-way symbol of [`gamma_symbol`].
pub fn trace_dsr_ray(
    model: &Grid2D,
    state: &DsrRayState,
    dz: f64,
    z_end: f64,
) -> Result<Vec<DsrRayState>> {
    let view = ModelView::new(model)?;
    let s0 = state.source_leg;
    let r0 = state.receiver_leg;
    let src = trace_ray_depth_view(&view, s0.x, s0.z, s0.xi, s0.tau, dz, z_end)?;
    let rcv = trace_ray_depth_view(&view, r0.x, r0.z, r0.xi, r0.tau, dz, z_end)?;
    let n = src.len().min(rcv.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let pair = DsrRayState { source_leg: src[i], receiver_leg: rcv[i] };
        let gamma = gamma_symbol_view(
            &view,
            src[i].x,
            rcv[i].x,
            src[i].xi,
            rcv[i].xi,
            src[i].tau,
            src[i].z,
        )?;
        let err = (pair.pair_zeta() - gamma).abs();
        if err > 1e-10 * gamma.abs().max(1e-30) {
            return Err(Error::Contract(format!(
                "pair wavenumber deviates from the two-way symbol by {err:.3e} at z = {:.3}",
                src[i].z
            )));
        }
        out.push(pair);
    }
    Ok(out)
}

/// Two-way vertical wavenumber
/// `Gamma = sgn(tau) [sqrt(tau^2/c(s,z)^2 - sigma^2) + sqrt(tau^2/c(r,z)^2 - rho^2)]`.
pub fn gamma_symbol(
    s: f64,
    r: f64,
    sigma: f64,
    rho: f64,
    tau: f64,
    z: f64,
    model: &Grid2D,
) -> Result<f64> {
    let view = ModelView::new(model)?;
    gamma_symbol_view(&view, s, r, sigma, rho, tau, z)
}

pub(crate) fn gamma_symbol_view(
    view: &ModelView,
    s: f64,
    r: f64,
    sigma: f64,
    rho: f64,
    tau: f64,
    z: f64,
) -> Result<f64> {
    Ok(b_real(s, z, sigma, tau, view)? + b_real(r, z, rho, tau, view)?)
}

/// Invert `tau -> Gamma(s, r, sigma, rho, tau, z)` on the branch where both
/// legs propagate. Newton iteration with a bisection fallback, converged to
/// 1e-10 relative.
pub fn invert_gamma(
    s: f64,
    r: f64,
    sigma: f64,
    rho: f64,
    zeta: f64,
    z: f64,
    model: &Grid2D,
) -> Result<f64> {
    let view = ModelView::new(model)?;
    invert_gamma_view(&view, s, r, sigma, rho, zeta, z)
}

pub(crate) fn invert_gamma_view(
    view: &ModelView,
    s: f64,
    r: f64,
    sigma: f64,
    rho: f64,
    zeta: f64,
    z: f64,
) -> Result<f64> {
    if zeta == 0.0 {
        return Err(Error::Domain("no tau root for zeta = 0".into()));
    }
    let sign = zeta.signum();
    let zeta_abs = zeta.abs();
    let c_s = view.c_at(s, z);
    let c_r = view.c_at(r, z);
    // smallest |tau| with both legs propagating
    let tau_min = (sigma.abs() * c_s).max(rho.abs() * c_r);
    let gamma_abs = |tau: f64| -> f64 {
        let a = (tau * tau / (c_s * c_s) - sigma * sigma).max(0.0).sqrt();
        let b = (tau * tau / (c_r * c_r) - rho * rho).max(0.0).sqrt();
        a + b
    };
    if zeta_abs <= gamma_abs(tau_min) * (1.0 + 1e-14) {
        return Err(Error::Domain(format!(
            "zeta {zeta:.6e} below the branch minimum {:.6e}",
            gamma_abs(tau_min)
        )));
    }
    // bracket: Gamma grows at least like tau (1/c_s + 1/c_r) for large tau
    let mut lo = tau_min;
    let mut hi = (zeta_abs / (1.0 / c_s + 1.0 / c_r)).max(tau_min * 1.0000001).max(1e-300);
    let mut guard = 0;
    while gamma_abs(hi) < zeta_abs {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Domain("failed to bracket the tau root".into()));
        }
    }
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = gamma_abs(tau) - zeta_abs;
        if g.abs() <= 1e-10 * zeta_abs {
            return Ok(sign * tau);
        }
        if g > 0.0 {
            hi = tau;
        } else {
            lo = tau;
        }
        // Newton step with dGamma/dtau; fall back to bisection when it
        // leaves the bracket
        let da = tau / (c_s * c_s) / (tau * tau / (c_s * c_s) - sigma * sigma).max(1e-300).sqrt();
        let db = tau / (c_r * c_r) / (tau * tau / (c_r * c_r) - rho * rho).max(1e-300).sqrt();
        let newton = tau - g / (da + db);
        tau = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::Domain("tau root did not converge".into()))
}

/// Result of the one-way slope check.
#[derive(Debug, Clone, Copy)]
pub struct SlopeCheck {
    pub pass: bool,
    /// Minimum of -dz/dt over the path (m/s).
    pub worst_slope: f64,
}

/// Verify the survey-sinking precondition `-dz/dt > epsilon` along a path.
pub fn check_dsr_assumption(path: &[RayState], epsilon: f64) -> Result<SlopeCheck> {
    if path.len() < 2 {
        return Err(Error::Contract("path needs at least two states".into()));
    }
    let mut worst = f64::INFINITY;
    for w in path.windows(2) {
        let dz = w[1].z - w[0].z;
        let dt = w[1].t - w[0].t;
        if dt != 0.0 {
            worst = worst.min(-dz / dt);
        }
    }
    Ok(SlopeCheck { pass: worst > epsilon, worst_slope: worst })
}

/// Same check applied to both legs of a survey-sinking path.
pub fn check_dsr_assumption_pair(path: &[DsrRayState], epsilon: f64) -> Result<SlopeCheck> {
    let src: Vec<RayState> = path.iter().map(|p| p.source_leg).collect();
    let rcv: Vec<RayState> = path.iter().map(|p| p.receiver_leg).collect();
    let a = check_dsr_assumption(&src, epsilon)?;
    let b = check_dsr_assumption(&rcv, epsilon)?;
    Ok(SlopeCheck { pass: a.pass && b.pass, worst_slope: a.worst_slope.min(b.worst_slope) })
}

struct Landing {
    t: f64,
    x: f64,
    slowness: f64,
}

/// Shoot an upward leg with horizontal slowness `p` (at tau = 1) from
/// `(x, z)` and return its surface arrival, if it reaches z = 0 inside the
/// lateral aperture.
fn shoot_leg(view: &ModelView, x: f64, z: f64, p: f64, dz: f64) -> Option<Landing> {
    let tau = 1.0;
    let w = view.w_at(x, z);
    if p * p >= w {
        return None; // evanescent take-off
    }
    let path = trace_ray_depth_view(view, x, z, p * tau, tau, dz, 0.0).ok()?;
    let last = path.last()?;
    if last.z.abs() > 1e-9 {
        return None; // exited laterally before the surface
    }
    Some(Landing { t: last.t, x: last.x, slowness: last.xi })
}

/// Solve for the leg landing at `target` by bisection on the take-off
/// slowness, to within `tol` meters.
fn solve_leg(
    view: &ModelView,
    x: f64,
    z: f64,
    target: f64,
    dz: f64,
    fan: usize,
    tol: f64,
) -> Option<Landing> {
    let p_max = 0.995 / view.c_at(x, z);
    let n = fan.max(8);
    let mut prev: Option<(f64, Landing)> = None;
    let mut best: Option<(f64, f64)> = None; // bracketing slownesses
    for i in 0..=n {
        let p = -p_max + 2.0 * p_max * i as f64 / n as f64;
        match shoot_leg(view, x, z, p, dz) {
            Some(l) => {
                if (l.x - target).abs() <= tol {
                    return Some(l);
                }
                if let Some((pp, pl)) = &prev {
                    if (pl.x - target) * (l.x - target) < 0.0 {
                        best = Some((*pp, p));
                        break;
                    }
                }
                prev = Some((p, l));
            }
            None => {
                prev = None;
            }
        }
    }
    let (mut lo, mut hi) = best?;
    let mut flo = shoot_leg(view, x, z, lo, dz)?.x - target;
    let mut fhi = shoot_leg(view, x, z, hi, dz)?.x - target;
    for i in 0..80 {
        // false position with a bisection fallback every few iterations
        let mid = if fhi != flo && i % 4 != 3 {
            let m = lo - flo * (hi - lo) / (fhi - flo);
            if m > lo && m < hi { m } else { 0.5 * (lo + hi) }
        } else {
            0.5 * (lo + hi)
        };
        let l = shoot_leg(view, x, z, mid, dz)?;
        if (l.x - target).abs() <= tol {
            return Some(l);
        }
        let fm = l.x - target;
        if flo * fm <= 0.0 {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    None
}

/// Predict reflection events for a scatterer at `(x, z)`: land one leg on
/// every source position and one on every receiver position, then pair
/// them. Targets are hit within a quarter sample. An empty table (no ray
/// reaches the surface) is not an error.
pub fn predict_events(
    model: &Grid2D,
    scatterer: (f64, f64),
    s_axis: &Axis,
    r_axis: &Axis,
    t_max: f64,
    fan: usize,
) -> Result<EventTable> {
    let view = ModelView::new(model)?;
    let (x, z) = scatterer;
    if z <= 0.0 {
        return Err(Error::Contract("scatterer must lie strictly below the surface".into()));
    }
    if !view.inside(x, z) {
        return Err(Error::Contract("scatterer outside the model".into()));
    }
    let dz = view.grid().axes[1].delta * 0.5;

    let solve_axis = |axis: &Axis| -> Vec<Option<Landing>> {
        // the landing contract is a quarter sample; solve tighter when the
        // sampling is coarse so event times stay accurate
        let tol = (axis.delta / 4.0).min(1.0);
        axis.coords()
            .map(|target| solve_leg(&view, x, z, target, dz, fan, tol))
            .collect()
    };
    let s_legs = solve_axis(s_axis);
    let r_legs = solve_axis(r_axis);

    let mut rows = Vec::new();
    for (is, sl) in s_legs.iter().enumerate() {
        let Some(sl) = sl else { continue };
        for (ir, rl) in r_legs.iter().enumerate() {
            let Some(rl) = rl else { continue };
            let t_total = sl.t + rl.t;
            if t_total > 0.0 && t_total <= t_max {
                rows.push(EventRow {
                    x,
                    z,
                    s: s_axis.at(is),
                    r: r_axis.at(ir),
                    t_total,
                    sigma: sl.slowness,
                    rho: rl.slowness,
                });
            }
        }
    }
    Ok(EventTable { rows })
}
