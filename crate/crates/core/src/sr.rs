//! Symbolic regression on linear token genomes.
//!
//! Programs are postfix sequences over one numeric stack. Instructions that
//! lack operands do nothing, `DIV` by zero and `LOG` of a non-positive value
//! push `0.0`, and every pushed value is clamped to `[-1e6, 1e6]`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::reward::ErrorVector;
use crate::umad::{umad_mutate, TokenGenome, DEFAULT_MAX_LEN};

/// Magnitude bound on every value the interpreter produces.
pub const VALUE_BOUND: f64 = 1e6;
/// Error charged for a case whose program leaves the stack empty.
pub const EMPTY_STACK_PENALTY: f64 = 1e6;
/// Cases with an error below this count as hits.
pub const HIT_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instruction {
    Input,
    ConstOne,
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Cos,
    Log,
}

impl Instruction {
    pub const ALL: [Instruction; 9] = [
        Instruction::Input,
        Instruction::ConstOne,
        Instruction::Add,
        Instruction::Sub,
        Instruction::Mul,
        Instruction::Div,
        Instruction::Sin,
        Instruction::Cos,
        Instruction::Log,
    ];

    pub fn arity(self) -> usize {
        match self {
            Instruction::Input | Instruction::ConstOne => 0,
            Instruction::Sin | Instruction::Cos | Instruction::Log => 1,
            Instruction::Add | Instruction::Sub | Instruction::Mul | Instruction::Div => 2,
        }
    }
}

pub type Program = TokenGenome<Instruction>;

fn clamp_value(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-VALUE_BOUND, VALUE_BOUND)
    }
}

/// Runs `program` on input `x`; `None` when the stack ends up empty.
pub fn execute(program: &[Instruction], x: f64) -> Option<f64> {
    let mut stack: Vec<f64> = Vec::with_capacity(program.len());
    for &op in program {
        if stack.len() < op.arity() {
            continue;
        }
        let v = match op {
            Instruction::Input => x,
            Instruction::ConstOne => 1.0,
            Instruction::Sin => stack.pop().unwrap().sin(),
            Instruction::Cos => stack.pop().unwrap().cos(),
            Instruction::Log => {
                let a = stack.pop().unwrap();
                if a > 0.0 { a.ln() } else { 0.0 }
            }
            _ => {
                let b = stack.pop().unwrap();
                let a = stack.pop().unwrap();
                match op {
                    Instruction::Add => a + b,
                    Instruction::Sub => a - b,
                    Instruction::Mul => a * b,
                    _ => {
                        if b == 0.0 { 0.0 } else { a / b }
                    }
                }
            }
        };
        stack.push(clamp_value(v));
    }
    stack.pop()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NguyenTarget {
    Nguyen1,
    Nguyen2,
    Nguyen3,
    Nguyen4,
    Nguyen5,
    Nguyen6,
    Nguyen7,
    Nguyen8,
}

impl NguyenTarget {
    pub const ALL: [NguyenTarget; 8] = [
        NguyenTarget::Nguyen1,
        NguyenTarget::Nguyen2,
        NguyenTarget::Nguyen3,
        NguyenTarget::Nguyen4,
        NguyenTarget::Nguyen5,
        NguyenTarget::Nguyen6,
        NguyenTarget::Nguyen7,
        NguyenTarget::Nguyen8,
    ];

    pub fn value(self, x: f64) -> f64 {
        // x + x^2 + ... + x^n
        let poly = |n: i32| (1..=n).map(|k| x.powi(k)).sum::<f64>();
        match self {
            NguyenTarget::Nguyen1 => poly(3),
            NguyenTarget::Nguyen2 => poly(4),
            NguyenTarget::Nguyen3 => poly(5),
            NguyenTarget::Nguyen4 => poly(6),
            NguyenTarget::Nguyen5 => (x * x).sin() * x.cos() - 1.0,
            NguyenTarget::Nguyen6 => x.sin() + (x + x * x).sin(),
            NguyenTarget::Nguyen7 => (x + 1.0).ln() + (x * x + 1.0).ln(),
            NguyenTarget::Nguyen8 => x.sqrt(),
        }
    }

    /// Input interval `(start, end)`; both ends are sampled.
    pub fn input_range(self) -> (f64, f64) {
        match self {
            NguyenTarget::Nguyen7 | NguyenTarget::Nguyen8 => (0.0, 8.0),
            _ => (-4.0, 4.0),
        }
    }

    pub fn inputs(self) -> Vec<f64> {
        let (a, b) = self.input_range();
        even_grid(a, b, 0.1)
    }
}

/// Evenly spaced points from `start` to `end` inclusive.
pub fn even_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

impl fmt::Display for NguyenTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = NguyenTarget::ALL.iter().position(|t| t == self).unwrap() + 1;
        write!(f, "nguyen{i}")
    }
}

impl FromStr for NguyenTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NguyenTarget::ALL
            .into_iter()
            .find(|t| t.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Contract(format!("unknown regression target `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrProblem {
    pub target: NguyenTarget,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    /// Initial program lengths are drawn uniformly from this inclusive range.
    pub init_len: (usize, usize),
    pub max_len: usize,
}

impl SrProblem {
    pub fn new(target: NguyenTarget) -> Self {
        Self::with_inputs(target, target.inputs()).expect("default grid is nonempty")
    }

    pub fn with_inputs(target: NguyenTarget, inputs: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Contract("symbolic regression needs at least one input".into()));
        }
        let outputs = inputs.iter().map(|&x| target.value(x)).collect();
        Ok(Self { target, inputs, outputs, init_len: (5, 50), max_len: DEFAULT_MAX_LEN })
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn evaluate_program(&self, program: &[Instruction]) -> ErrorVector {
        let errors = self
            .inputs
            .iter()
            .zip(&self.outputs)
            .map(|(&x, &y)| match execute(program, x) {
                Some(out) => (out - y).abs(),
                None => EMPTY_STACK_PENALTY,
            })
            .collect();
        ErrorVector::new(errors).expect("errors are finite and nonempty")
    }
}

impl Problem for SrProblem {
    type Genome = Program;

    fn name(&self) -> String {
        self.target.to_string()
    }

    fn random_genome(&self, rng: &mut dyn RngCore) -> Program {
        let len = rng.random_range(self.init_len.0..=self.init_len.1);
        crate::umad::random_genome(len, &Instruction::ALL, rng)
    }

    fn evaluate(&self, genome: &Program) -> Result<ErrorVector> {
        Ok(self.evaluate_program(genome))
    }

    fn mutate(&self, genome: &Program, rate: f64, rng: &mut dyn RngCore) -> Result<Program> {
        umad_mutate(genome, rate, &Instruction::ALL, self.max_len, rng)
    }

    fn is_solved(&self, errors: &ErrorVector) -> bool {
        errors.as_slice().iter().all(|&e| e < HIT_THRESHOLD)
    }
}
