//! Named initial data, sampled at cell centers `x_i = i/n`.
//!
//! | call | sample |
//! |------|--------|
//! | `plateau(a)` | `a` for `x < 1/2`, `-a` otherwise |
//! | `sine(k, amp)` | `amp·sin(2πkx)` |
//! | `hat(width, height)` | `height·max(0, 1 - 2|x - 1/2|/width)` |
//! | `ramp(slope)` | `slope·(x - 1/2)`; wraps with one jump of size `slope` |
//! | `file(path)` | CSV with header `x,u` |
//! | `random(modes, amp)` | `amp·Σ_{k≤modes} (a_k cos 2πkx + b_k sin 2πkx)/k`, `a_k, b_k ~ U[-1, 1]` |
//! | `random_pl(knots, amp)` | periodic piecewise-linear through `U[-amp, amp]` values at `j/knots` |
//!
//! Random generators draw from ChaCha8 seeded with the run seed.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{Field, GridError, PeriodicGrid};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("cannot parse generator call `{0}`")]
    Syntax(String),
    #[error("unknown generator `{0}`")]
    Unknown(String),
    #[error("generator `{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("generator `{name}`: {msg}")]
    BadArgument { name: String, msg: String },
    #[error("reading `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("field file `{path}` has {got} cells, grid has {expected}")]
    SizeMismatch { path: PathBuf, got: usize, expected: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Plateau { a: f64 },
    Sine { k: f64, amp: f64 },
    Hat { width: f64, height: f64 },
    Ramp { slope: f64 },
    File { path: PathBuf },
    Random { modes: usize, amp: f64 },
    RandomPl { knots: usize, amp: f64 },
}

impl Generator {
    /// Parses `name(arg, ...)`.
    pub fn parse(text: &str) -> Result<Self, GeneratorError> {
        let text = text.trim();
        let syntax = || GeneratorError::Syntax(text.to_string());
        let open = text.find('(').ok_or_else(syntax)?;
        if !text.ends_with(')') {
            return Err(syntax());
        }
        let name = text[..open].trim();
        let inner = text[open + 1..text.len() - 1].trim();
        let args: Vec<&str> = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::trim).collect()
        };
        let arity = |expected: usize| {
            if args.len() == expected {
                Ok(())
            } else {
                Err(GeneratorError::Arity {
                    name: name.to_string(),
                    expected,
                    got: args.len(),
                })
            }
        };
        let num = |i: usize| -> Result<f64, GeneratorError> {
            args[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| GeneratorError::BadArgument {
                    name: name.to_string(),
                    msg: format!("`{}` is not a finite number", args[i]),
                })
        };
        let count = |i: usize| -> Result<usize, GeneratorError> {
            args[i]
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| GeneratorError::BadArgument {
                    name: name.to_string(),
                    msg: format!("`{}` is not a positive integer", args[i]),
                })
        };
        let g = match name {
            "plateau" => {
                arity(1)?;
                Generator::Plateau { a: num(0)? }
            }
            "sine" => {
                arity(2)?;
                Generator::Sine {
                    k: num(0)?,
                    amp: num(1)?,
                }
            }
            "hat" => {
                arity(2)?;
                let width = num(0)?;
                if !(width > 0.0 && width <= 1.0) {
                    return Err(GeneratorError::BadArgument {
                        name: name.into(),
                        msg: "width must lie in (0, 1]".into(),
                    });
                }
                Generator::Hat {
                    width,
                    height: num(1)?,
                }
            }
            "ramp" => {
                arity(1)?;
                Generator::Ramp { slope: num(0)? }
            }
            "file" => {
                arity(1)?;
                let p = args[0].trim_matches('"');
                if p.is_empty() {
                    return Err(syntax());
                }
                Generator::File { path: PathBuf::from(p) }
            }
            "random" => {
                arity(2)?;
                Generator::Random {
                    modes: count(0)?,
                    amp: num(1)?,
                }
            }
            "random_pl" => {
                arity(2)?;
                let knots = count(0)?;
                if knots < 2 {
                    return Err(GeneratorError::BadArgument {
                        name: name.into(),
                        msg: "needs at least 2 knots".into(),
                    });
                }
                Generator::RandomPl { knots, amp: num(1)? }
            }
            other => return Err(GeneratorError::Unknown(other.to_string())),
        };
        Ok(g)
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Generator::Random { .. } | Generator::RandomPl { .. })
    }

    /// Samples on `grid`; `seed` only matters for the random generators.
    pub fn sample(&self, grid: PeriodicGrid, seed: u64) -> Result<Field, GeneratorError> {
        let field = match *self {
            Generator::Plateau { a } => Field::from_fn(grid, |x| if x < 0.5 { a } else { -a }),
            Generator::Sine { k, amp } => Field::from_fn(grid, |x| amp * (2.0 * PI * k * x).sin()),
            Generator::Hat { width, height } => {
                Field::from_fn(grid, |x| height * (1.0 - 2.0 * (x - 0.5).abs() / width).max(0.0))
            }
            Generator::Ramp { slope } => Field::from_fn(grid, |x| slope * (x - 0.5)),
            Generator::File { ref path } => {
                let text = std::fs::read_to_string(path).map_err(|source| GeneratorError::Io {
                    path: path.clone(),
                    source,
                })?;
                let f = Field::from_csv(&text)?;
                if f.len() != grid.n() {
                    return Err(GeneratorError::SizeMismatch {
                        path: path.clone(),
                        got: f.len(),
                        expected: grid.n(),
                    });
                }
                f
            }
            Generator::Random { modes, amp } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<(f64, f64)> = (0..modes)
                    .map(|_| (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
                    .collect();
                Field::from_fn(grid, |x| {
                    amp * coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, (a, b))| {
                            let k = (j + 1) as f64;
                            (a * (2.0 * PI * k * x).cos() + b * (2.0 * PI * k * x).sin()) / k
                        })
                        .sum::<f64>()
                })
            }
            Generator::RandomPl { knots, amp } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let vals: Vec<f64> = (0..knots).map(|_| rng.random_range(-amp..=amp)).collect();
                Field::from_fn(grid, |x| {
                    let s = x * knots as f64;
                    let j = (s.floor() as usize).min(knots - 1);
                    let frac = s - j as f64;
                    vals[j] * (1.0 - frac) + vals[(j + 1) % knots] * frac
                })
            }
        };
        Ok(field)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Plateau { a } => write!(f, "plateau({a})"),
            Generator::Sine { k, amp } => write!(f, "sine({k}, {amp})"),
            Generator::Hat { width, height } => write!(f, "hat({width}, {height})"),
            Generator::Ramp { slope } => write!(f, "ramp({slope})"),
            Generator::File { path } => write!(f, "file({})", path.display()),
            Generator::Random { modes, amp } => write!(f, "random({modes}, {amp})"),
            Generator::RandomPl { knots, amp } => write!(f, "random_pl({knots}, {amp})"),
        }
    }
}
