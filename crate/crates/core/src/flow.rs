//! Mean curvature flow `∂h/∂t = m(h)` for positive sections, explicit Euler.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sections::{self, MeanCurvature, SectionGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    pub dt_initial: f64,
    /// Fraction of the parabolic limit `hstep² λ_min(g) / (2 d)`.
    pub dt_safety: f64,
    pub max_steps: usize,
    /// Stop once `max ‖m⊥‖ ≤ stop_mnorm · (initial max ‖m⊥‖)`.
    pub stop_mnorm: f64,
    pub record_every: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams { dt_initial: 1.0, dt_safety: 0.9, max_steps: 100_000, stop_mnorm: 1e-6, record_every: 10 }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_initial > 0.0
            && self.dt_safety > 0.0
            && self.dt_safety <= 1.0
            && self.max_steps > 0
            && self.stop_mnorm > 0.0
            && self.record_every > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid flow parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub step: usize,
    pub time: f64,
    pub volume: f64,
    pub mnorm: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub accepted: usize,
    pub rejected: usize,
    /// Largest per-step volume decrease relative to `|vol|` over accepted steps.
    pub worst_volume_drop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    PositivityLost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// Last accepted state.
    pub state: SectionGrid,
    pub trace: FlowTrace,
    pub status: FlowStatus,
    pub initial_mnorm: f64,
    pub final_mnorm: f64,
}

/// Per-step volume slack relative to `|vol|`.
pub const VOLUME_SLACK: f64 = 1e-10;

fn euler(h: &SectionGrid, m: &MeanCurvature, dt: f64) -> SectionGrid {
    let mut out = h.clone();
    for (x, v) in out.values.iter_mut().zip(&m.values) {
        *x += dt * v;
    }
    out
}

/// One explicit Euler step; boundary values are untouched because `m⊥` vanishes there.
pub fn mcf_step(h: &SectionGrid, dt: f64) -> Result<SectionGrid> {
    if !(dt > 0.0) {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    let m = sections::mean_curvature(h)?;
    let next = euler(h, &m, dt);
    let pos = sections::is_positive_section(&next);
    if !pos.positive {
        return Err(Error::NonPositiveSection { count: pos.offending.len(), first: pos.offending.into_iter().take(8).collect() });
    }
    Ok(next)
}

/// Smallest eigenvalue of the induced metric over interior nodes.
pub fn metric_floor(h: &SectionGrid) -> f64 {
    sections::is_positive_section(h).margin
}

fn dt_cap(h: &SectionGrid, p: &FlowParams, floor: f64) -> f64 {
    let d = h.base_dim() as f64;
    p.dt_safety * h.grid.hstep * h.grid.hstep * floor / (2.0 * d)
}

pub fn mcf_run(h0: &SectionGrid, p: &FlowParams) -> Result<FlowResult> {
    p.validate()?;
    let mut h = h0.clone();
    let mut m = sections::mean_curvature(&h)?;
    let mut vol = sections::volume3(&h)?;
    let mut floor = m.metric_floor;
    let initial = m.max_norm;
    let stop = p.stop_mnorm * initial;
    let mut trace = FlowTrace::default();
    let mut time = 0.0;
    trace.records.push(FlowRecord { step: 0, time, volume: vol, mnorm: m.max_norm, margin: floor });
    if initial == 0.0 {
        return Ok(FlowResult { state: h, trace, status: FlowStatus::Converged, initial_mnorm: 0.0, final_mnorm: 0.0 });
    }
    let mut cap = dt_cap(&h, p, floor);
    let mut dt = p.dt_initial.min(cap);
    let mut status = FlowStatus::MaxSteps;
    let mut step = 0;
    while step < p.max_steps {
        if m.max_norm <= stop {
            status = FlowStatus::Converged;
            break;
        }
        let cand = euler(&h, &m, dt);
        let accepted = match (sections::volume3(&cand), sections::mean_curvature(&cand)) {
            (Ok(v), Ok(mc)) if v >= vol - VOLUME_SLACK * vol.abs() && mc.metric_floor > 0.0 => {
                let f = mc.metric_floor;
                Some((v, mc, f))
            }
            _ => None,
        };
        match accepted {
            Some((v, mc, f)) => {
                trace.worst_volume_drop = trace.worst_volume_drop.max((vol - v) / vol.abs());
                h = cand;
                m = mc;
                vol = v;
                floor = f;
                time += dt;
                step += 1;
                trace.accepted += 1;
                if step % p.record_every == 0 || m.max_norm <= stop {
                    trace.records.push(FlowRecord { step, time, volume: vol, mnorm: m.max_norm, margin: floor });
                }
                cap = dt_cap(&h, p, floor);
                dt = (dt * 1.1).min(cap);
            }
            None => {
                trace.rejected += 1;
                dt *= 0.5;
                if dt < 1e-12 * cap {
                    status = FlowStatus::PositivityLost;
                    break;
                }
            }
        }
    }
    if status == FlowStatus::MaxSteps && m.max_norm <= stop {
        status = FlowStatus::Converged;
    }
    if trace.records.last().map(|r| r.step) != Some(step) {
        trace.records.push(FlowRecord { step, time, volume: vol, mnorm: m.max_norm, margin: floor });
    }
    let final_mnorm = m.max_norm;
    Ok(FlowResult { state: h, trace, status, initial_mnorm: initial, final_mnorm })
}

/// Whether recorded volumes never drop by more than the per-step slack.
pub fn volume_monotone(trace: &FlowTrace) -> bool {
    trace.worst_volume_drop <= VOLUME_SLACK
}

/// Sup over nodes of the Euclidean distance from each value to the linear span of
/// the given vectors (a linear exact solution such as a quadratic-potential graph).
pub fn distance_to_span(h: &SectionGrid, span: &[Vec<f64>]) -> f64 {
    let n = h.target_dim();
    let b = nalgebra::DMatrix::from_fn(n, span.len(), |i, j| span[j][i]);
    let q = b.qr().q();
    let mut worst = 0.0f64;
    for id in 0..h.grid.node_count() {
        let v = nalgebra::DVector::from_column_slice(h.value(id));
        let r = &v - &q * (q.transpose() * &v);
        worst = worst.max(r.norm());
    }
    worst
}

/// `(1/6)·hstep²·λ_min` style parabolic bound exposed for reporting.
pub fn parabolic_limit(h: &SectionGrid) -> f64 {
    dt_cap(h, &FlowParams { dt_safety: 1.0, ..FlowParams::default() }, metric_floor(h))
}

/// Relative change of the flux-form mean curvature between two states, for diagnostics.
pub fn mnorm(h: &SectionGrid) -> Result<f64> {
    Ok(sections::mean_curvature(h)?.max_norm)
}

/// Euclidean sup norm of `a - b` over nodes.
pub fn sup_diff(a: &SectionGrid, b: &SectionGrid) -> f64 {
    a.sup_distance(b)
}
