//! Seeded generator of terminating subset programs with nested control flow.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq)]
enum Ty {
    Int,
    Str,
}

struct Gen {
    rng: ChaCha8Rng,
    out: Vec<String>,
    /// Loop variables in scope.
    vars: Vec<(String, Ty)>,
    fresh: usize,
}

impl Gen {
    fn line(&mut self, depth: usize, text: String) {
        self.out.push(format!("{}{}", "    ".repeat(depth), text));
    }

    fn int_expr(&mut self) -> String {
        let ints: Vec<String> = self
            .vars
            .iter()
            .filter(|v| v.1 == Ty::Int)
            .map(|v| v.0.clone())
            .collect();
        let atom = |g: &mut Gen| match g.rng.gen_range(0..5) {
            0 => g.rng.gen_range(0..10).to_string(),
            1 => "len(t)".into(),
            2 => "n".into(),
            _ => ints.choose(&mut g.rng).cloned().unwrap_or_else(|| "acc".into()),
        };
        let a = atom(self);
        let b = atom(self);
        match self.rng.gen_range(0..5) {
            0 => format!("{a} + {b}"),
            1 => format!("{a} - {b}"),
            2 => format!("{a} * 2"),
            3 => format!("{a} % 3"),
            _ => a,
        }
    }

    fn cond(&mut self) -> String {
        let strs: Vec<String> = self
            .vars
            .iter()
            .filter(|v| v.1 == Ty::Str)
            .map(|v| v.0.clone())
            .collect();
        match self.rng.gen_range(0..6) {
            0 if !strs.is_empty() => {
                let c = strs.choose(&mut self.rng).unwrap().clone();
                let m = ["isalpha", "isdigit", "isupper", "isspace"].choose(&mut self.rng).unwrap();
                format!("{c}.{m}()")
            }
            1 => format!("len(t) < {}", self.rng.gen_range(1..6)),
            2 => format!("{} in d", self.int_expr()),
            _ => {
                let op = ["<", ">", "==", "!=", "<=", ">="].choose(&mut self.rng).unwrap();
                format!("{} {op} {}", self.int_expr(), self.int_expr())
            }
        }
    }

    fn simple(&mut self, depth: usize) {
        let strs: Vec<String> = self
            .vars
            .iter()
            .filter(|v| v.1 == Ty::Str)
            .map(|v| v.0.clone())
            .collect();
        let text = match self.rng.gen_range(0..8) {
            0 => format!("acc = {}", self.int_expr()),
            1 => format!("acc += {}", self.int_expr()),
            2 if !strs.is_empty() => format!("t = t + {}", strs.choose(&mut self.rng).unwrap()),
            2 => "t = t.strip() + 'x'".into(),
            3 => format!("ys.append({})", self.int_expr()),
            4 => format!("d[{}] = acc", self.int_expr()),
            5 => format!("m = max(ys + [{}])", self.int_expr()),
            6 => "t = t.upper() if len(t) % 2 == 0 else t.lower()".into(),
            _ => format!("zs = [w for w in ys if w > {}]", self.int_expr()),
        };
        self.line(depth, text);
    }

    fn block(&mut self, depth: usize, nest: usize, in_loop: bool) {
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            let roll = self.rng.gen_range(0..10);
            if nest < 3 && roll < 2 {
                self.if_stmt(depth, nest, in_loop);
            } else if nest < 3 && roll < 4 {
                self.loop_stmt(depth, nest);
            } else if in_loop && roll == 4 {
                let c = self.cond();
                let kw = if self.rng.gen_bool(0.5) { "break" } else { "continue" };
                self.line(depth, format!("if {c}:"));
                self.line(depth + 1, kw.into());
            } else {
                self.simple(depth);
            }
        }
    }

    fn if_stmt(&mut self, depth: usize, nest: usize, in_loop: bool) {
        let c = self.cond();
        self.line(depth, format!("if {c}:"));
        self.block(depth + 1, nest + 1, in_loop);
        if self.rng.gen_bool(0.4) {
            let c = self.cond();
            self.line(depth, format!("elif {c}:"));
            self.block(depth + 1, nest + 1, in_loop);
        }
        if self.rng.gen_bool(0.5) {
            self.line(depth, "else:".into());
            self.block(depth + 1, nest + 1, in_loop);
        }
    }

    fn loop_stmt(&mut self, depth: usize, nest: usize) {
        self.fresh += 1;
        let k = self.fresh;
        match self.rng.gen_range(0..4) {
            0 => {
                let v = format!("v{k}");
                self.line(depth, format!("for {v} in xs:"));
                self.vars.push((v, Ty::Int));
            }
            1 => {
                let v = format!("c{k}");
                self.line(depth, format!("for {v} in s:"));
                self.vars.push((v, Ty::Str));
            }
            2 => {
                let v = format!("i{k}");
                self.line(depth, format!("for {v} in range(n):"));
                self.vars.push((v, Ty::Int));
            }
            _ => {
                let v = format!("k{k}");
                self.line(depth, format!("{v} = 0"));
                self.line(depth, format!("while {v} < n:"));
                self.line(depth + 1, format!("{v} += 1"));
                self.vars.push((v, Ty::Int));
            }
        }
        self.block(depth + 1, nest + 1, true);
        self.vars.pop();
    }
}

/// A program defining `f(xs, s, n)` and a literal call of it.
pub fn program(seed: u64) -> (String, String) {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        out: vec!["def f(xs, s, n):".into()],
        vars: vec![],
        fresh: 0,
    };
    for init in ["acc = 0", "t = ''", "ys = []", "d = {}", "m = 0", "zs = []"] {
        g.line(1, init.into());
    }
    g.block(1, 1, false);
    g.line(1, "return (acc, t, ys, d, m, zs)".into());
    let len = g.rng.gen_range(0..6);
    let xs: Vec<String> = (0..len).map(|_| g.rng.gen_range(-3..10).to_string()).collect();
    let alphabet: Vec<char> = "ab Z9x".chars().collect();
    let s: String = (0..g.rng.gen_range(0..6)).map(|_| *alphabet.choose(&mut g.rng).unwrap()).collect();
    let n = g.rng.gen_range(0..5);
    let call = format!("f([{}], '{s}', {n})", xs.join(", "));
    g.out.push(format!("assert {call} is not None"));
    let mut code = g.out.join("\n");
    code.push('\n');
    (code, call)
}

pub mod oracles;
