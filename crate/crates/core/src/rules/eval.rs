//! Expression evaluation.

use thiserror::Error;

use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("`{op}` needs numbers, got {lhs} and {rhs}")]
    NotNumbers {
        op: &'static str,
        lhs: Value,
        rhs: Value,
    },
    #[error("integer overflow")]
    Overflow,
}

fn num_pair(op: &'static str, a: Value, b: Value) -> Result<(i64, i64), EvalError> {
    match (&a, &b) {
        (Value::Num(x), Value::Num(y)) => Ok((*x, *y)),
        _ => Err(EvalError::NotNumbers { op, lhs: a, rhs: b }),
    }
}

pub fn eval_expr(e: &Expr) -> Result<Value, EvalError> {
    match e {
        Expr::Val(v) => Ok(v.clone()),
        Expr::Add(a, b) => {
            let (x, y) = num_pair("+", eval_expr(a)?, eval_expr(b)?)?;
            x.checked_add(y).map(Value::Num).ok_or(EvalError::Overflow)
        }
        Expr::Sub(a, b) => {
            let (x, y) = num_pair("-", eval_expr(a)?, eval_expr(b)?)?;
            x.checked_sub(y).map(Value::Num).ok_or(EvalError::Overflow)
        }
        Expr::Pair(tag, e) => Ok(Value::Pair(tag.clone(), Box::new(eval_expr(e)?))),
    }
}

pub fn eval_bool(b: &BExpr) -> Result<bool, EvalError> {
    match b {
        BExpr::True => Ok(true),
        BExpr::False => Ok(false),
        BExpr::Cmp(op, x, y) => {
            let (a, b) = (eval_expr(x)?, eval_expr(y)?);
            let sym = match op {
                CmpOp::Eq => return Ok(a == b),
                CmpOp::Ne => return Ok(a != b),
                CmpOp::Lt => "<",
                CmpOp::Gt => ">",
                CmpOp::Le => "<=",
                CmpOp::Ge => ">=",
            };
            let (m, n) = num_pair(sym, a, b)?;
            Ok(match op {
                CmpOp::Lt => m < n,
                CmpOp::Gt => m > n,
                CmpOp::Le => m <= n,
                _ => m >= n,
            })
        }
        BExpr::And(x, y) => Ok(eval_bool(x)? && eval_bool(y)?),
        BExpr::Or(x, y) => Ok(eval_bool(x)? || eval_bool(y)?),
        BExpr::Not(x) => Ok(!eval_bool(x)?),
    }
}
