//! Pretty-printer producing re-parseable `.imon` text.

use std::fmt::Write;

use super::ast::*;

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    match e {
        Expr::Int(v) => write!(out, "{v}").unwrap(),
        Expr::Bool(b) => write!(out, "{b}").unwrap(),
        Expr::Var(n) => out.push_str(n),
        Expr::Get(n) => write!(out, "{n}.get()").unwrap(),
        Expr::Index(n, i) => {
            write!(out, "{n}[").unwrap();
            write_expr(out, i, 0);
            out.push(']');
        }
        Expr::Unary(op, inner) => {
            out.push(if *op == UnOp::Neg { '-' } else { '!' });
            let atomic = matches!(**inner, Expr::Var(_) | Expr::Index(..) | Expr::Get(_) | Expr::Bool(_))
                || matches!(**inner, Expr::Int(v) if v >= 0);
            if atomic {
                write_expr(out, inner, 7);
            } else {
                out.push('(');
                write_expr(out, inner, 0);
                out.push(')');
            }
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let paren = p < ctx;
            if paren {
                out.push('(');
            }
            write_expr(out, a, p);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, b, p + 1);
            if paren {
                out.push(')');
            }
        }
    }
}

pub fn range_to_string(r: &Range) -> String {
    format!("int[{}..{}]", r.lo, r.hi)
}

pub fn type_to_string(t: &FieldType) -> String {
    match t {
        FieldType::Int(r) => range_to_string(r),
        FieldType::Array { len, elem } => format!("array[{len}] of {}", range_to_string(elem)),
    }
}

pub fn init_to_string(init: &[i64], ty: &FieldType) -> String {
    if !ty.is_array() || init.iter().all(|v| *v == init[0]) {
        format!("{}", init[0])
    } else {
        let cells: Vec<String> = init.iter().map(|v| v.to_string()).collect();
        format!("[{}]", cells.join(", "))
    }
}

pub fn params_to_string(ps: &[Param]) -> String {
    ps.iter().map(|p| format!("{} {}", range_to_string(&p.range), p.name)).collect::<Vec<_>>().join(", ")
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, 0);
    out.trim_end().to_string()
}

fn indent(out: &mut String, n: usize) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

fn write_body(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        write_stmt(out, s, depth);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match s {
        Stmt::Skip => out.push_str("skip;\n"),
        Stmt::Assign { target, value } => writeln!(out, "{target} := {};", expr_to_string(value)).unwrap(),
        Stmt::Store { field, index, value } => match index {
            Some(i) => writeln!(out, "{field}[{}] := {};", expr_to_string(i), expr_to_string(value)).unwrap(),
            None => writeln!(out, "{field} := {};", expr_to_string(value)).unwrap(),
        },
        Stmt::Goto(l) => writeln!(out, "goto {l};").unwrap(),
        Stmt::IfGoto(c, l) => writeln!(out, "if ({}) goto {l};", expr_to_string(c)).unwrap(),
        Stmt::Label(l) => writeln!(out, "{l}:").unwrap(),
        Stmt::Signal { pred, cond, all } => {
            let kw = if *all { "broadcast" } else { "signal" };
            writeln!(out, "{kw}({}, {});", expr_to_string(pred), expr_to_string(cond)).unwrap()
        }
        Stmt::Incr { name, index, delta, .. } => {
            let op = if *delta > 0 { "++" } else { "--" };
            match index {
                Some(i) => writeln!(out, "{name}[{}]{op};", expr_to_string(i)).unwrap(),
                None => writeln!(out, "{name}{op};").unwrap(),
            }
        }
        Stmt::While { cond, body } => {
            writeln!(out, "while ({}) {{", expr_to_string(cond)).unwrap();
            write_body(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        Stmt::If { cond, then_body, else_body } => {
            writeln!(out, "if ({}) {{", expr_to_string(cond)).unwrap();
            write_body(out, then_body, depth + 1);
            indent(out, depth);
            if else_body.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                write_body(out, else_body, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
    }
}

fn write_ccr(out: &mut String, c: &Ccr, depth: usize) {
    if let Some(g) = &c.guard {
        indent(out, depth);
        writeln!(out, "waituntil({});", expr_to_string(g)).unwrap();
    }
    write_body(out, &c.body, depth);
}

pub fn monitor_to_string(ast: &MonitorAst) -> String {
    let mut out = String::new();
    writeln!(out, "monitor {} {{", ast.name).unwrap();
    for f in &ast.fields {
        writeln!(out, "  {} {} := {};", type_to_string(&f.ty), f.name, init_to_string(&f.init, &f.ty)).unwrap();
    }
    for m in &ast.methods {
        out.push('\n');
        writeln!(out, "  {}({}) {{", m.name, params_to_string(&m.params)).unwrap();
        if m.body.len() == 1 {
            write_ccr(&mut out, &m.body[0], 2);
        } else {
            for c in &m.body {
                out.push_str("    ccr {\n");
                write_ccr(&mut out, c, 3);
                out.push_str("    }\n");
            }
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
