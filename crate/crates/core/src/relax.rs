//! Structure relaxation by clipped steepest descent on predicted forces.

use std::fmt::{self, Write as _};

use nalgebra::Vector3;

use crate::error::{argument, Error, Result};
use crate::graph::AtomicStructure;
use crate::model::Model;

pub const DEFAULT_MAX_STEPS: usize = 300;
pub const DEFAULT_FMAX: f64 = 0.02;
pub const DEFAULT_STEP_SIZE: f64 = 0.01;
pub const MAX_DISPLACEMENT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub max_steps: usize,
    /// eV/Å.
    pub fmax: f64,
    /// Å²/eV.
    pub step_size: f64,
    /// Per-atom displacement cap per step, Å.
    pub max_displacement: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            max_steps: DEFAULT_MAX_STEPS,
            fmax: DEFAULT_FMAX,
            step_size: DEFAULT_STEP_SIZE,
            max_displacement: MAX_DISPLACEMENT,
        }
    }
}

impl RelaxOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(argument("max_steps must be at least 1"));
        }
        for (name, v) in [
            ("fmax", self.fmax),
            ("step_size", self.step_size),
            ("max_displacement", self.max_displacement),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(argument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One evaluated geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxStep {
    pub step: usize,
    pub positions: Vec<Vector3<f64>>,
    /// eV.
    pub energy: f64,
    /// Largest per-atom force norm, eV/Å.
    pub fmax: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxTrace {
    pub steps: Vec<RelaxStep>,
    pub converged: bool,
}

impl RelaxTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&RelaxStep> {
        self.steps.last()
    }

    /// One row per (step, atom).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,atom,x,y,z,energy_ev,fmax_ev_per_angstrom\n");
        for st in &self.steps {
            for (i, p) in st.positions.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{:?},{:?},{:?},{:?},{:?}",
                    st.step, i, p.x, p.y, p.z, st.energy, st.fmax
                );
            }
        }
        s
    }
}

/// A relaxation that stopped on an error; `trace` holds the steps evaluated
/// before it.
#[derive(Debug)]
pub struct RelaxError {
    pub error: Error,
    pub trace: RelaxTrace,
}

impl fmt::Display for RelaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "relaxation aborted after {} steps: {}", self.trace.len(), self.error)
    }
}

impl std::error::Error for RelaxError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Evaluate, record, stop once `F_max ≤ fmax` or after `max_steps`
/// evaluations, otherwise move every atom by `step_size · F` clipped to
/// `max_displacement`.
pub fn relax(
    model: &Model,
    structure: &AtomicStructure,
    options: &RelaxOptions,
) -> std::result::Result<(RelaxTrace, AtomicStructure), RelaxError> {
    let mut trace = RelaxTrace {
        steps: Vec::new(),
        converged: false,
    };
    if let Err(error) = options.validate() {
        return Err(RelaxError { error, trace });
    }
    let mut current = structure.clone();
    for step in 0..options.max_steps {
        let prediction = match model.predict(&current) {
            Ok(p) => p,
            Err(error) => return Err(RelaxError { error, trace }),
        };
        let fmax = prediction.max_force();
        trace.steps.push(RelaxStep {
            step,
            positions: current.positions.clone(),
            energy: prediction.energy,
            fmax,
        });
        if fmax <= options.fmax {
            trace.converged = true;
            break;
        }
        if step + 1 == options.max_steps {
            break;
        }
        for (p, f) in current.positions.iter_mut().zip(&prediction.forces) {
            let mut d = f * options.step_size;
            let n = d.norm();
            if n > options.max_displacement {
                d *= options.max_displacement / n;
            }
            *p += d;
        }
    }
    Ok((trace, current))
}
