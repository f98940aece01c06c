//! Kernel functions: the smoothing kernel used by the non-interactive
//! mechanism and the zero-mean wave used to build perturbed alternatives.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Result};
use crate::numeric::{integrate, QUAD_TOL};

/// A bounded kernel supported in `[-1, 1]` that integrates to one.
#[derive(Clone, Copy)]
pub struct SmoothingKernel {
    name: &'static str,
    eval: fn(f64) -> f64,
    sup_norm: f64,
    c_beta: Option<fn(f64) -> f64>,
}

impl fmt::Debug for SmoothingKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothingKernel")
            .field("name", &self.name)
            .field("sup_norm", &self.sup_norm)
            .finish()
    }
}

impl SmoothingKernel {
    /// Wraps a user kernel. `eval` is only ever called on `[-1, 1]`.
    pub fn new(name: &'static str, eval: fn(f64) -> f64, sup_norm: f64) -> Self {
        Self {
            name,
            eval,
            sup_norm,
            c_beta: None,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// `‖ψ‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// ψ(t), zero outside `[-1, 1]`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > 1.0 {
            0.0
        } else {
            (self.eval)(t)
        }
    }

    /// `C_β = ∫ |t|^β |ψ(t)| dt`.
    pub fn c_beta(&self, beta: f64) -> f64 {
        match self.c_beta {
            Some(closed) => closed(beta),
            None => {
                let g = |t: f64| t.abs().powf(beta) * self.eval(t).abs();
                integrate(g, -1.0, 0.0, QUAD_TOL) + integrate(g, 0.0, 1.0, QUAD_TOL)
            }
        }
    }
}

/// ψ(t) = ½ on `[-1, 1]`.
pub fn boxcar() -> SmoothingKernel {
    SmoothingKernel {
        name: "boxcar",
        eval: |_| 0.5,
        sup_norm: 0.5,
        c_beta: Some(|beta| 1.0 / (beta + 1.0)),
    }
}

/// ψ(t) = 1 − |t| on `[-1, 1]`.
pub fn triangular() -> SmoothingKernel {
    SmoothingKernel {
        name: "triangular",
        eval: |t| 1.0 - t.abs(),
        sup_norm: 1.0,
        c_beta: Some(|beta| 2.0 / ((beta + 1.0) * (beta + 2.0))),
    }
}

/// `ψ_h(u) = ψ(u/h)/h`.
pub fn scaled_eval(k: &SmoothingKernel, h: f64, u: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("bandwidth must be positive, got {h}")));
    }
    Ok(k.eval(u / h) / h)
}

/// A zero-mean, unit-energy Hölder function on `[-1, 1]` vanishing at ±1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveKernel {
    c1: f64,
    sup_norm: f64,
}

/// ψ(t) = sin(πt).
pub fn sine_wave() -> WaveKernel {
    WaveKernel {
        c1: 4.0 / PI,
        sup_norm: 1.0,
    }
}

impl WaveKernel {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() > 1.0 {
            0.0
        } else {
            (PI * t).sin()
        }
    }

    /// `∫_{-1}^{t} ψ`, clamped to the support.
    #[inline]
    pub fn antiderivative(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        -((PI * t).cos() + 1.0) / PI
    }

    /// `C_1 = ∫ |ψ|`.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// A constant `H` with `|ψ(t) − ψ(s)| ≤ H |t − s|^β`.
    pub fn holder_constant(&self, beta: f64) -> f64 {
        PI * 2f64.powf(1.0 - beta)
    }
}
