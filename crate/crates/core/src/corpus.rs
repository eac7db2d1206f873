//! Seeded generator of small random programs (one or two inputs, at most
//! four branch sites) for property and differential testing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::optimize::derive_seed;

/// Upper bound on comparison sites per generated program, loop headers included.
pub const MAX_BRANCHES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedProgram {
    pub source: String,
    /// Reach labels outside loops, in source order.
    pub targets: Vec<String>,
}

const CONSTANTS: &[f64] = &[
    0.0, 1.0, 2.0, 3.0, 0.5, 1.5, 2.5, 4.0, 5.0, 0.1, 0.25, 7.0, 10.0, 0.3,
];
const OPS: &[&str] = &["<", "<=", ">", ">=", "==", "!="];
const UNARY: &[&str] = &["sin", "cos", "fabs", "floor", "sqrt"];

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    vars: Vec<String>,
    sites_left: usize,
    targets: Vec<String>,
    out: String,
}

impl Gen<'_> {
    fn constant(&mut self) -> String {
        let c = *CONSTANTS.choose(self.rng).expect("non-empty");
        if self.rng.gen_bool(0.2) {
            format!("{:?}", -c)
        } else {
            format!("{c:?}")
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.35);
        if leaf {
            return if self.rng.gen_bool(0.7) {
                self.vars.choose(self.rng).expect("inputs exist").clone()
            } else {
                self.constant()
            };
        }
        match self.rng.gen_range(0..10) {
            0..=1 => {
                let f = UNARY.choose(self.rng).expect("non-empty");
                format!("{f}({})", self.expr(depth - 1))
            }
            2 => format!("-({})", self.expr(depth - 1)),
            _ => {
                let op = ["+", "-", "*", "*", "+", "/"]
                    .choose(self.rng)
                    .expect("non-empty");
                format!("({} {op} {})", self.expr(depth - 1), self.expr(depth - 1))
            }
        }
    }

    fn comparison(&mut self) -> String {
        let op = OPS.choose(self.rng).expect("non-empty");
        let rhs = if self.rng.gen_bool(0.7) {
            self.constant()
        } else {
            self.expr(1)
        };
        format!("{} {op} {rhs}", self.expr(2))
    }

    fn condition(&mut self) -> String {
        if self.sites_left >= 2 && self.rng.gen_bool(0.2) {
            self.sites_left -= 2;
            let join = if self.rng.gen_bool(0.5) { "&&" } else { "||" };
            format!("{} {join} {}", self.comparison(), self.comparison())
        } else {
            self.sites_left -= 1;
            self.comparison()
        }
    }

    fn line(&mut self, indent: usize, text: &str) {
        self.out.push_str(&"    ".repeat(indent));
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn reach(&mut self, indent: usize) {
        let label = format!("t{}", self.targets.len());
        self.line(indent, &format!("reach({label:?});"));
        self.targets.push(label);
    }

    fn block(&mut self, indent: usize, scratch: &str) {
        let stmts = self.rng.gen_range(1..=3);
        for _ in 0..stmts {
            let roll = self.rng.gen_range(0..10);
            if roll < 4 && self.sites_left > 0 {
                let cond = self.condition();
                self.line(indent, &format!("if ({cond}) {{"));
                self.block(indent + 1, scratch);
                if self.rng.gen_bool(0.3) {
                    self.line(indent, "} else {");
                    self.block(indent + 1, scratch);
                }
                self.line(indent, "}");
            } else if roll < 7 {
                let e = self.expr(2);
                self.line(indent, &format!("{scratch} = {e};"));
            } else {
                self.reach(indent);
            }
        }
    }
}

/// One program from `rng`; every program has at least one target.
pub fn generate(rng: &mut ChaCha8Rng) -> GeneratedProgram {
    let mut g = Gen {
        rng,
        vars: Vec::new(),
        sites_left: MAX_BRANCHES,
        targets: Vec::new(),
        out: String::new(),
    };
    let dim = g.rng.gen_range(1..=2);
    for name in ["x", "y"].iter().take(dim) {
        let (kind, lo, hi) = if g.rng.gen_bool(0.2) {
            (
                "int",
                g.rng.gen_range(-10..=0) as f64,
                g.rng.gen_range(1..=12) as f64,
            )
        } else {
            let lo = *[-10.0, -5.0, -1.0, 0.0].choose(g.rng).expect("non-empty");
            let hi = *[1.0, 3.0, 5.0, 10.0].choose(g.rng).expect("non-empty");
            ("real", lo, hi)
        };
        g.line(0, &format!("input {name}: {kind} in [{lo:?}, {hi:?}];"));
        g.vars.push(name.to_string());
    }
    let e = g.expr(2);
    g.line(0, &format!("let s = {e};"));
    g.vars.push("s".into());

    if g.rng.gen_bool(0.15) {
        g.sites_left -= 1;
        let k = g.rng.gen_range(1..=4);
        g.line(0, &format!("for (let i = 0; i < {k}; i = i + 1) {{"));
        let e = g.expr(1);
        g.line(1, &format!("s = s + {e};"));
        g.line(0, "}");
    }
    g.block(0, "s");
    if g.targets.is_empty() {
        if g.sites_left > 0 {
            let cond = g.condition();
            g.line(0, &format!("if ({cond}) {{"));
            g.reach(1);
            g.line(0, "}");
        } else {
            g.reach(0);
        }
    }
    GeneratedProgram {
        source: g.out,
        targets: g.targets,
    }
}

/// `n` programs; program `i` depends only on `(seed, i)`.
pub fn corpus(seed: u64, n: usize) -> Vec<GeneratedProgram> {
    (0..n)
        .map(|i| generate(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::compile;

    #[test]
    fn generated_programs_are_valid_and_small() {
        for p in corpus(3, 300) {
            let prog = compile(&p.source).unwrap_or_else(|e| panic!("{e}\n{}", p.source));
            assert!(prog.sites.len() <= MAX_BRANCHES, "{}", p.source);
            assert!((1..=2).contains(&prog.dimension()));
            assert!(!p.targets.is_empty());
            for t in &p.targets {
                assert!(prog.target_index(t).is_some());
            }
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        assert_eq!(corpus(9, 20), corpus(9, 20));
        assert_ne!(corpus(9, 5), corpus(10, 5));
    }
}
