//! Structural complexity metrics.

use serde::{Deserialize, Serialize};

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub loc: usize,
    pub ast_depth: usize,
    pub branch_count: usize,
    pub loop_count: usize,
    pub cf_nesting_depth: usize,
}

pub fn measure_complexity(tree: &SyntaxTree) -> ComplexityReport {
    let loc = tree
        .lines
        .iter()
        .enumerate()
        .filter(|(i, l)| !l.trim().is_empty() && !tree.comment_lines.contains(&(*i as u32 + 1)))
        .count();

    let mut branch_count = 0;
    let mut loop_count = 0;
    tree.walk_stmts(&mut |s| {
        match &s.kind {
            StmtKind::If { .. } => branch_count += 1,
            StmtKind::For { .. } | StmtKind::While { .. } => loop_count += 1,
            _ => {}
        }
        stmt_exprs(s, &mut |e| {
            walk_expr(e, &mut |x| match &x.kind {
                ExprKind::IfExp { .. } => branch_count += 1,
                ExprKind::ListComp { .. }
                | ExprKind::SetComp { .. }
                | ExprKind::DictComp { .. }
                | ExprKind::GeneratorExp { .. } => loop_count += 1,
                _ => {}
            })
        });
    });

    ComplexityReport {
        loc,
        ast_depth: 1 + tree.body.iter().map(stmt_depth).max().unwrap_or(0),
        branch_count,
        loop_count,
        cf_nesting_depth: block_depth(&tree.body),
    }
}

/// Nesting of def/if/for/while blocks. An `elif` arm sits at the depth of its `if`.
fn block_depth(stmts: &[Stmt]) -> usize {
    stmts.iter().map(stmt_block_depth).max().unwrap_or(0)
}

fn stmt_block_depth(s: &Stmt) -> usize {
    match &s.kind {
        StmtKind::FunctionDef(def) => 1 + block_depth(&def.body),
        StmtKind::If { body, orelse, .. } => {
            let inner = block_depth(body);
            let other = match orelse.as_slice() {
                [elif @ Stmt { kind: StmtKind::If { is_elif: true, .. }, .. }] => {
                    return (1 + inner).max(stmt_block_depth(elif))
                }
                _ => block_depth(orelse),
            };
            1 + inner.max(other)
        }
        StmtKind::For { body, orelse, .. } | StmtKind::While { body, orelse, .. } => {
            1 + block_depth(body).max(block_depth(orelse))
        }
        _ => 0,
    }
}

// Depth below mirrors the shape of CPython's `ast` module, where operator and
// context objects (`Add()`, `Load()`) are nodes of their own.

fn list_depth(stmts: &[Stmt]) -> usize {
    stmts.iter().map(stmt_depth).max().unwrap_or(0)
}

fn opt_depth(e: &Option<Expr>) -> usize {
    e.as_ref().map(expr_depth).unwrap_or(0)
}

fn arguments_depth(params: &[Param]) -> usize {
    let args = params
        .iter()
        .map(|p| 1 + opt_depth(&p.annotation))
        .max()
        .unwrap_or(0);
    let defaults = params
        .iter()
        .map(|p| opt_depth(&p.default))
        .max()
        .unwrap_or(0);
    1 + args.max(defaults)
}

fn stmt_depth(s: &Stmt) -> usize {
    let children = match &s.kind {
        StmtKind::FunctionDef(def) => arguments_depth(&def.params)
            .max(list_depth(&def.body))
            .max(opt_depth(&def.returns)),
        StmtKind::Assign { targets, value } => targets
            .iter()
            .map(expr_depth)
            .max()
            .unwrap_or(0)
            .max(expr_depth(value)),
        StmtKind::AnnAssign { target, annotation, value } => expr_depth(target)
            .max(expr_depth(annotation))
            .max(opt_depth(value)),
        StmtKind::AugAssign { target, value, .. } => expr_depth(target).max(1).max(expr_depth(value)),
        StmtKind::Expr(e) => expr_depth(e),
        StmtKind::Return(v) => opt_depth(v),
        StmtKind::If { test, body, orelse, .. } | StmtKind::While { test, body, orelse } => {
            expr_depth(test).max(list_depth(body)).max(list_depth(orelse))
        }
        StmtKind::For { target, iter, body, orelse } => expr_depth(target)
            .max(expr_depth(iter))
            .max(list_depth(body))
            .max(list_depth(orelse)),
        StmtKind::Assert { test, msg } => expr_depth(test).max(opt_depth(msg)),
        StmtKind::Delete(targets) => targets.iter().map(expr_depth).max().unwrap_or(0),
        StmtKind::ImportFrom { names, .. } => usize::from(!names.is_empty()),
        StmtKind::Break | StmtKind::Continue | StmtKind::Pass => 0,
    };
    1 + children
}

fn exprs_depth(xs: &[Expr]) -> usize {
    xs.iter().map(expr_depth).max().unwrap_or(0)
}

fn comprehensions_depth(gens: &[Comprehension]) -> usize {
    gens.iter()
        .map(|g| 1 + expr_depth(&g.target).max(expr_depth(&g.iter)).max(exprs_depth(&g.ifs)))
        .max()
        .unwrap_or(0)
}

fn boxed_depth(e: &Option<Box<Expr>>) -> usize {
    e.as_deref().map(expr_depth).unwrap_or(0)
}

pub(crate) fn expr_depth(e: &Expr) -> usize {
    let children = match &e.kind {
        ExprKind::Constant(_) => 0,
        // ctx node
        ExprKind::Name(_) => 1,
        ExprKind::List(xs) | ExprKind::Tuple(xs) => exprs_depth(xs).max(1),
        ExprKind::Set(xs) => exprs_depth(xs),
        ExprKind::Dict(pairs) => pairs
            .iter()
            .map(|(k, v)| expr_depth(k).max(expr_depth(v)))
            .max()
            .unwrap_or(0),
        ExprKind::BinOp { left, right, .. } => expr_depth(left).max(expr_depth(right)).max(1),
        ExprKind::UnaryOp { operand, .. } => expr_depth(operand).max(1),
        ExprKind::BoolOp { values, .. } => exprs_depth(values).max(1),
        ExprKind::Compare { left, comparators, .. } => {
            expr_depth(left).max(exprs_depth(comparators)).max(1)
        }
        ExprKind::Call { func, args, keywords } => expr_depth(func)
            .max(exprs_depth(args))
            .max(
                keywords
                    .iter()
                    .map(|k| 1 + expr_depth(&k.value))
                    .max()
                    .unwrap_or(0),
            ),
        ExprKind::Attribute { value, .. } => expr_depth(value).max(1),
        ExprKind::Subscript { value, index } => expr_depth(value).max(expr_depth(index)).max(1),
        ExprKind::Slice { lower, upper, step } => boxed_depth(lower)
            .max(boxed_depth(upper))
            .max(boxed_depth(step)),
        ExprKind::IfExp { test, body, orelse } => expr_depth(test)
            .max(expr_depth(body))
            .max(expr_depth(orelse)),
        ExprKind::Lambda(l) => arguments_depth(&l.params).max(expr_depth(&l.body)),
        ExprKind::ListComp { elt, generators }
        | ExprKind::SetComp { elt, generators }
        | ExprKind::GeneratorExp { elt, generators } => {
            expr_depth(elt).max(comprehensions_depth(generators))
        }
        ExprKind::DictComp { key, value, generators } => expr_depth(key)
            .max(expr_depth(value))
            .max(comprehensions_depth(generators)),
    };
    1 + children
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn trivial_program() {
        let r = measure_complexity(&parse("def f():\n    return 1\nf()\n").unwrap());
        assert_eq!((r.loc, r.branch_count, r.loop_count, r.cf_nesting_depth), (3, 0, 0, 1));
    }

    #[test]
    fn comments_and_blanks_are_not_loc() {
        let r = measure_complexity(&parse("# header\n\ndef f():\n    # inner\n    return 1  # tail\n").unwrap());
        assert_eq!(r.loc, 2);
    }

    #[test]
    fn ternary_and_comprehension() {
        let r = measure_complexity(
            &parse("def f(xs):\n    return [x if x else 0 for x in xs]\n").unwrap(),
        );
        assert_eq!((r.branch_count, r.loop_count, r.cf_nesting_depth), (1, 1, 1));
    }

    #[test]
    fn elif_does_not_deepen() {
        let r = measure_complexity(
            &parse("def f(x):\n    if x:\n        return 1\n    elif x > 1:\n        return 2\n    elif x > 2:\n        if x:\n            return 3\n").unwrap(),
        );
        assert_eq!(r.branch_count, 4);
        assert_eq!(r.cf_nesting_depth, 3);
    }

    #[test]
    fn module_depth_of_empty_and_pass() {
        assert_eq!(measure_complexity(&parse("").unwrap()).ast_depth, 1);
        assert_eq!(measure_complexity(&parse("pass\n").unwrap()).ast_depth, 2);
        // Module -> Expr -> Name -> Load
        assert_eq!(measure_complexity(&parse("x\n").unwrap()).ast_depth, 4);
    }
}
