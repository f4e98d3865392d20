//! Pretty-printing back to the concrete syntax. `parse_formula` of the
//! rendered text is structurally equal to the input, hence in particular
//! alpha-equivalent.

use alloc::string::String;
use alloc::vec::Vec;

use core::fmt::Write;

use crate::ast::{BExpr, DataTerm, Formula};

fn render_term(t: &DataTerm, out: &mut String) {
    match t {
        DataTerm::Star => out.push('*'),
        DataTerm::Var(x) => out.push_str(x.as_str()),
    }
}

fn render_bexpr_prec(b: &BExpr, parent_and: bool, out: &mut String) {
    match b {
        BExpr::True => out.push_str("true"),
        BExpr::Eq(l, r) => {
            render_term(l, out);
            out.push('=');
            render_term(r, out);
        }
        BExpr::Not(inner) => match &**inner {
            BExpr::Eq(l, r) => {
                render_term(l, out);
                out.push_str("!=");
                render_term(r, out);
            }
            BExpr::And(_, _) => {
                out.push_str("!(");
                render_bexpr_prec(inner, false, out);
                out.push(')');
            }
            _ => {
                out.push('!');
                render_bexpr_prec(inner, true, out);
            }
        },
        BExpr::And(l, r) => {
            // right-nested conjunctions keep their shape with parentheses
            if parent_and {
                out.push('(');
            }
            render_bexpr_prec(l, true, out);
            out.push_str(" & ");
            match &**r {
                BExpr::And(_, _) => {
                    out.push('(');
                    render_bexpr_prec(r, false, out);
                    out.push(')');
                }
                _ => render_bexpr_prec(r, true, out),
            }
            if parent_and {
                out.push(')');
            }
        }
    }
}

pub fn render_bexpr(b: &BExpr) -> String {
    let mut out = String::new();
    render_bexpr_prec(b, false, &mut out);
    out
}

// min_prec: 1 accepts disjunctions, 2 accepts conjunctions, 3 only prefix
// expressions. `followed` is true when more tokens follow the formula in
// the enclosing expression, in which case a quantifier or fixed point
// (which extends as far right as possible) must be parenthesized.
fn render_prec(f: &Formula, min_prec: u8, followed: bool, out: &mut String) {
    match f {
        Formula::Tt => out.push_str("tt"),
        Formula::Ff => out.push_str("ff"),
        Formula::Var(x) => out.push_str(x.as_str()),
        Formula::Diamond(b, body) | Formula::Box(b, body) => {
            let (open, close) = if matches!(f, Formula::Diamond(_, _)) {
                ('<', '>')
            } else {
                ('[', ']')
            };
            out.push(open);
            render_bexpr_prec(b, false, out);
            out.push(close);
            render_prec(body, 3, followed, out);
        }
        Formula::Exists(_, _)
        | Formula::Forall(_, _)
        | Formula::Min(_, _)
        | Formula::Max(_, _)
        | Formula::GForall { .. } => {
            let parens = followed;
            if parens {
                out.push('(');
            }
            match f {
                Formula::Exists(x, body) => {
                    let _ = write!(out, "exists {x}. ");
                    render_prec(body, 1, false, out);
                }
                Formula::Forall(x, body) => {
                    let _ = write!(out, "forall {x}. ");
                    render_prec(body, 1, false, out);
                }
                Formula::Min(x, body) => {
                    let _ = write!(out, "min {x}. ");
                    render_prec(body, 1, false, out);
                }
                Formula::Max(x, body) => {
                    let _ = write!(out, "max {x}. ");
                    render_prec(body, 1, false, out);
                }
                Formula::GForall {
                    guard,
                    frees,
                    var,
                    body,
                } => {
                    let _ = write!(out, "gforall {var} guard {{ ");
                    render_prec(guard, 1, false, out);
                    out.push_str(" } frees {");
                    for (i, v) in frees.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        out.push(' ');
                        out.push_str(v.as_str());
                    }
                    out.push_str(" } . ");
                    render_prec(body, 1, false, out);
                }
                _ => unreachable!(),
            }
            if parens {
                out.push(')');
            }
        }
        Formula::Or(l, r) => {
            let parens = min_prec > 1;
            if parens {
                out.push('(');
            }
            render_prec(l, 1, true, out);
            out.push_str(" | ");
            render_prec(r, 2, if parens { false } else { followed }, out);
            if parens {
                out.push(')');
            }
        }
        Formula::And(l, r) => {
            let parens = min_prec > 2;
            if parens {
                out.push('(');
            }
            render_prec(l, 2, true, out);
            out.push_str(" & ");
            render_prec(r, 3, if parens { false } else { followed }, out);
            if parens {
                out.push(')');
            }
        }
    }
}

/// Renders a formula to its concrete syntax.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    render_prec(f, 1, false, &mut out);
    out
}

/// Renders a finite trace as comma-separated tokens.
pub fn render_trace(w: &[crate::ast::DataValue]) -> String {
    let parts: Vec<&str> = w.iter().map(|v| v.as_str()).collect();
    parts.join(",")
}
