//! Built-in real-vector primitives. Each primitive has a forward map and a
//! hand-written transpose-derivative (vector-Jacobian product) used as the
//! `put` of a differentiable lens.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    Tanh,
    Sin,
    Exp,
    Sigmoid,
    Square,
    Affine {
        scale: f64,
        shift: f64,
    },
    /// Ignores its input and returns a fixed vector.
    Const(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `x ↦ f(x)`
    Forward,
    /// `(x, y') ↦ Jf(x)ᵀ y'`
    Vjp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealPrimitive {
    pub prim: Primitive,
    pub mode: Mode,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Primitive {
    fn value(&self, x: f64) -> f64 {
        match self {
            Primitive::Tanh => x.tanh(),
            Primitive::Sin => x.sin(),
            Primitive::Exp => x.exp(),
            Primitive::Sigmoid => sigmoid(x),
            Primitive::Square => x * x,
            Primitive::Affine { scale, shift } => scale * x + shift,
            Primitive::Const(_) => unreachable!("const is not elementwise"),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            Primitive::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Primitive::Sin => x.cos(),
            Primitive::Exp => x.exp(),
            Primitive::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Primitive::Square => 2.0 * x,
            Primitive::Affine { scale, .. } => *scale,
            Primitive::Const(_) => 0.0,
        }
    }
}

impl RealPrimitive {
    /// Parses `tanh`, `affine(2,0.5)`, `const(1,0)`, optionally suffixed by
    /// `.vjp`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, mode) = match s.strip_suffix(".vjp") {
            Some(b) => (b, Mode::Vjp),
            None => (s, Mode::Forward),
        };
        let (name, args) = match body.find('(') {
            Some(open) => {
                let close = body
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Signature(format!("unterminated builtin `{s}`")))?;
                let args: std::result::Result<Vec<f64>, _> = close[open + 1..]
                    .split(',')
                    .filter(|a| !a.trim().is_empty())
                    .map(|a| a.trim().parse::<f64>())
                    .collect();
                let args = args.map_err(|e| Error::Signature(format!("builtin `{s}`: {e}")))?;
                (&body[..open], args)
            }
            None => (body, Vec::new()),
        };
        let prim = match (name, args.len()) {
            ("tanh", 0) => Primitive::Tanh,
            ("sin", 0) => Primitive::Sin,
            ("exp", 0) => Primitive::Exp,
            ("sigmoid", 0) => Primitive::Sigmoid,
            ("square", 0) => Primitive::Square,
            ("affine", 2) => Primitive::Affine {
                scale: args[0],
                shift: args[1],
            },
            ("const", n) if n > 0 => Primitive::Const(args),
            _ => return Err(Error::Signature(format!("unknown builtin `{s}`"))),
        };
        Ok(RealPrimitive { prim, mode })
    }

    /// Checks the primitive against the real dimensions of its boundary.
    pub fn check_dims(&self, dom: &[usize], cod: &[usize]) -> Result<()> {
        let ok = match (&self.prim, self.mode) {
            (Primitive::Const(v), Mode::Forward) => {
                dom.len() == 1 && cod.len() == 1 && cod[0] == v.len()
            }
            (Primitive::Const(v), Mode::Vjp) => {
                dom.len() == 2 && cod.len() == 1 && dom[1] == v.len() && dom[0] == cod[0]
            }
            (_, Mode::Forward) => dom.len() == 1 && cod.len() == 1 && dom[0] == cod[0],
            (_, Mode::Vjp) => {
                dom.len() == 2 && cod.len() == 1 && dom[0] == dom[1] && dom[0] == cod[0]
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Signature(format!(
                "builtin `{self}` does not fit dimensions {dom:?} -> {cod:?}"
            )))
        }
    }

    pub fn apply(&self, inputs: &[&[f64]]) -> Vec<f64> {
        match (&self.prim, self.mode) {
            (Primitive::Const(v), Mode::Forward) => v.clone(),
            (Primitive::Const(_), Mode::Vjp) => vec![0.0; inputs[0].len()],
            (p, Mode::Forward) => inputs[0].iter().map(|&x| p.value(x)).collect(),
            (p, Mode::Vjp) => inputs[0]
                .iter()
                .zip(inputs[1])
                .map(|(&x, &dy)| p.derivative(x) * dy)
                .collect(),
        }
    }
}

impl fmt::Display for RealPrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.prim {
            Primitive::Tanh => f.write_str("tanh")?,
            Primitive::Sin => f.write_str("sin")?,
            Primitive::Exp => f.write_str("exp")?,
            Primitive::Sigmoid => f.write_str("sigmoid")?,
            Primitive::Square => f.write_str("square")?,
            Primitive::Affine { scale, shift } => write!(f, "affine({scale},{shift})")?,
            Primitive::Const(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "const({})", parts.join(","))?
            }
        }
        if self.mode == Mode::Vjp {
            f.write_str(".vjp")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        for s in [
            "tanh",
            "sin.vjp",
            "affine(2,0.5)",
            "affine(-1,3).vjp",
            "const(1,0.25)",
        ] {
            let p = RealPrimitive::parse(s).unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!(RealPrimitive::parse("affine(1)").is_err());
        assert!(RealPrimitive::parse("cosh").is_err());
    }

    #[test]
    fn vjp_matches_central_difference() {
        let h = 1e-6;
        for s in [
            "tanh",
            "sin",
            "exp",
            "sigmoid",
            "square",
            "affine(1.5,-0.2)",
        ] {
            let fwd = RealPrimitive::parse(s).unwrap();
            let vjp = RealPrimitive::parse(&format!("{s}.vjp")).unwrap();
            for &x in &[-0.7, 0.1, 0.9] {
                let fd = (fwd.apply(&[&[x + h]])[0] - fwd.apply(&[&[x - h]])[0]) / (2.0 * h);
                let an = vjp.apply(&[&[x], &[1.0]])[0];
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{s} at {x}");
            }
        }
    }
}
