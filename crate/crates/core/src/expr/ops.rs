// SPDX-License-Identifier: Apache-2.0

//! Operators of the expression domain and their algebraic classification.

use ethnum::U256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Exp,
    Shl,
    Shr,
    And,
    Or,
    Xor,
    Not,
    Eq,
    Lt,
    Gt,
    Slt,
    IsZero,
}

pub const ALL_OPS: [Op; 17] = [
    Op::Add,
    Op::Sub,
    Op::Mul,
    Op::Div,
    Op::Mod,
    Op::Exp,
    Op::Shl,
    Op::Shr,
    Op::And,
    Op::Or,
    Op::Xor,
    Op::Not,
    Op::Eq,
    Op::Lt,
    Op::Gt,
    Op::Slt,
    Op::IsZero,
];

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "ADD",
            Op::Sub => "SUB",
            Op::Mul => "MUL",
            Op::Div => "DIV",
            Op::Mod => "MOD",
            Op::Exp => "EXP",
            Op::Shl => "SHL",
            Op::Shr => "SHR",
            Op::And => "AND",
            Op::Or => "OR",
            Op::Xor => "XOR",
            Op::Not => "NOT",
            Op::Eq => "EQ",
            Op::Lt => "LT",
            Op::Gt => "GT",
            Op::Slt => "SLT",
            Op::IsZero => "ISZERO",
        }
    }

    /// Accepts the canonical names and the helper names used in emitted
    /// SMT-LIB (`isZero`, `my_eq`, `my_bvlt`, `my_bvgt`, `my_bvslt`).
    pub fn from_name(s: &str) -> Option<Op> {
        Some(match s {
            "ADD" => Op::Add,
            "SUB" => Op::Sub,
            "MUL" => Op::Mul,
            "DIV" => Op::Div,
            "MOD" => Op::Mod,
            "EXP" => Op::Exp,
            "SHL" => Op::Shl,
            "SHR" => Op::Shr,
            "AND" => Op::And,
            "OR" => Op::Or,
            "XOR" => Op::Xor,
            "NOT" => Op::Not,
            "EQ" | "my_eq" => Op::Eq,
            "LT" | "my_bvlt" => Op::Lt,
            "GT" | "my_bvgt" => Op::Gt,
            "SLT" | "my_bvslt" => Op::Slt,
            "ISZERO" | "isZero" => Op::IsZero,
            _ => return None,
        })
    }

    pub fn is_unary(self) -> bool {
        matches!(self, Op::Not | Op::IsZero)
    }

    /// Result is always 0 or 1.
    pub fn is_boolean(self) -> bool {
        matches!(self, Op::Eq | Op::Lt | Op::Gt | Op::Slt | Op::IsZero)
    }

    pub fn associative(self) -> bool {
        matches!(self, Op::Add | Op::Mul | Op::And | Op::Or | Op::Xor)
    }

    pub fn commutative(self) -> bool {
        matches!(self, Op::Add | Op::Mul | Op::And | Op::Or | Op::Xor | Op::Eq)
    }

    /// `x op x = x`.
    pub fn idempotent(self) -> bool {
        matches!(self, Op::And | Op::Or)
    }

    /// `x op x` is this constant.
    pub fn canceling(self) -> Option<Special> {
        match self {
            Op::Sub | Op::Xor | Op::Lt | Op::Gt | Op::Slt => Some(Special::Zero),
            Op::Eq => Some(Special::One),
            _ => None,
        }
    }

    pub fn apply(self, a: U256, b: U256, width: u32) -> U256 {
        let m = mask(width);
        let bool_ = |c: bool| if c { U256::ONE } else { U256::ZERO };
        match self {
            Op::Add => a.wrapping_add(b) & m,
            Op::Sub => a.wrapping_sub(b) & m,
            Op::Mul => a.wrapping_mul(b) & m,
            Op::Div => {
                if b == 0 {
                    U256::ZERO
                } else {
                    a / b
                }
            }
            Op::Mod => {
                if b == 0 {
                    U256::ZERO
                } else {
                    a % b
                }
            }
            Op::Exp => {
                let (mut base, mut e, mut acc) = (a, b, U256::ONE);
                while e != 0 {
                    if e & 1 == 1 {
                        acc = acc.wrapping_mul(base) & m;
                    }
                    base = base.wrapping_mul(base) & m;
                    e >>= 1;
                }
                acc & m
            }
            Op::Shl => {
                if b >= U256::from(width) {
                    U256::ZERO
                } else {
                    (a << b.as_u32()) & m
                }
            }
            Op::Shr => {
                if b >= U256::from(width) {
                    U256::ZERO
                } else {
                    a >> b.as_u32()
                }
            }
            Op::And => a & b,
            Op::Or => a | b,
            Op::Xor => a ^ b,
            Op::Not => !a & m,
            Op::Eq => bool_(a == b),
            Op::Lt => bool_(a < b),
            Op::Gt => bool_(a > b),
            Op::Slt => {
                let s = U256::ONE << (width - 1);
                bool_((a ^ s) < (b ^ s))
            }
            Op::IsZero => bool_(a == 0),
        }
    }
}

pub fn mask(width: u32) -> U256 {
    if width >= 256 {
        U256::MAX
    } else {
        (U256::ONE << width) - 1
    }
}

/// Width-independent names for special constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Special {
    Zero,
    One,
    AllOnes,
}

impl Special {
    pub fn value(self, width: u32) -> U256 {
        match self {
            Special::Zero => U256::ZERO,
            Special::One => U256::ONE,
            Special::AllOnes => mask(width),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Result of applying an operator with a special value on one side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpecialResult {
    /// Identity element: the other operand.
    Other,
    Const(Special),
}

/// `op` with `value` on `side` yields `result`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpecialValue {
    pub op: Op,
    pub side: Side,
    pub value: Special,
    pub result: SpecialResult,
}

pub fn special_values() -> Vec<SpecialValue> {
    use Side::*;
    use Special::*;
    use SpecialResult::*;
    let sv = |op, side, value, result| SpecialValue {
        op,
        side,
        value,
        result,
    };
    vec![
        sv(Op::Add, Left, Zero, Other),
        sv(Op::Add, Right, Zero, Other),
        sv(Op::Sub, Right, Zero, Other),
        sv(Op::Mul, Left, One, Other),
        sv(Op::Mul, Right, One, Other),
        sv(Op::Mul, Left, Zero, Const(Zero)),
        sv(Op::Mul, Right, Zero, Const(Zero)),
        sv(Op::Div, Right, One, Other),
        sv(Op::Div, Left, Zero, Const(Zero)),
        sv(Op::Div, Right, Zero, Const(Zero)),
        sv(Op::Mod, Left, Zero, Const(Zero)),
        sv(Op::Mod, Right, Zero, Const(Zero)),
        sv(Op::Mod, Right, One, Const(Zero)),
        sv(Op::Exp, Right, One, Other),
        sv(Op::Exp, Right, Zero, Const(One)),
        sv(Op::Exp, Left, One, Const(One)),
        sv(Op::Shl, Right, Zero, Other),
        sv(Op::Shl, Left, Zero, Const(Zero)),
        sv(Op::Shr, Right, Zero, Other),
        sv(Op::Shr, Left, Zero, Const(Zero)),
        sv(Op::And, Left, AllOnes, Other),
        sv(Op::And, Right, AllOnes, Other),
        sv(Op::And, Left, Zero, Const(Zero)),
        sv(Op::And, Right, Zero, Const(Zero)),
        sv(Op::Or, Left, Zero, Other),
        sv(Op::Or, Right, Zero, Other),
        sv(Op::Or, Left, AllOnes, Const(AllOnes)),
        sv(Op::Or, Right, AllOnes, Const(AllOnes)),
        sv(Op::Xor, Left, Zero, Other),
        sv(Op::Xor, Right, Zero, Other),
        sv(Op::Lt, Right, Zero, Const(Zero)),
        sv(Op::Gt, Left, Zero, Const(Zero)),
    ]
}

/// `outer` distributes over `inner` on the given side:
/// left `a outer (b inner c) = (a outer b) inner (a outer c)`,
/// right `(b inner c) outer a = (b outer a) inner (c outer a)`.
pub fn distributivity() -> Vec<(Op, Op, Side)> {
    use Side::*;
    let mut out = Vec::new();
    for (outer, inner) in [
        (Op::Mul, Op::Add),
        (Op::Mul, Op::Sub),
        (Op::And, Op::Or),
        (Op::Or, Op::And),
        (Op::And, Op::Xor),
    ] {
        out.push((outer, inner, Left));
        out.push((outer, inner, Right));
    }
    for (outer, inner) in [
        (Op::Shl, Op::Add),
        (Op::Shl, Op::Sub),
        (Op::Shl, Op::And),
        (Op::Shl, Op::Or),
        (Op::Shl, Op::Xor),
        (Op::Shr, Op::And),
        (Op::Shr, Op::Or),
        (Op::Shr, Op::Xor),
    ] {
        out.push((outer, inner, Right));
    }
    out
}

/// Right inverse pairs: `inv(op(a, b), b) = a`.
pub const RIGHT_INVERSES: [(Op, Op); 3] = [(Op::Add, Op::Sub), (Op::Sub, Op::Add), (Op::Xor, Op::Xor)];

/// Left inverse pairs: `inv(a, op(a, b)) = b`.
pub const LEFT_INVERSES: [(Op, Op); 2] = [(Op::Sub, Op::Sub), (Op::Xor, Op::Xor)];

/// Pairs that cannot both hold: `AND(p(a, b), q(a, b)) = 0`.
pub const MUTUALLY_EXCLUSIVE: [(Op, Op); 3] = [(Op::Lt, Op::Gt), (Op::Lt, Op::Eq), (Op::Gt, Op::Eq)];

/// `p(a, b) = q(b, a)`.
pub const CONVERSES: [(Op, Op); 2] = [(Op::Gt, Op::Lt), (Op::Lt, Op::Gt)];

/// Operator pairs for solving `EQ(op(x, r), rhs)` in the free variable `x`.
/// The solution candidate is `inv(rhs, r)`; every candidate is validated by
/// substitution before it is reported.
pub const LINEAR_SOLUTIONS: [(Op, Op); 6] = [
    (Op::Add, Op::Sub),
    (Op::Sub, Op::Add),
    (Op::Xor, Op::Xor),
    (Op::Or, Op::Or),
    (Op::Mod, Op::Add),
    (Op::Mul, Op::Div),
];

/// Operator pairs for `EQ(op(l, x), rhs)`, the free variable on the right:
/// `ADD(l, x) = rhs` gives `x = SUB(rhs, l)`, `SUB(l, x) = rhs` gives
/// `x = SUB(l, rhs)` (marked by swapping operands), `XOR` is symmetric.
pub const RIGHT_LINEAR_SOLUTIONS: [(Op, Op, bool); 3] = [
    (Op::Add, Op::Sub, false),
    (Op::Sub, Op::Sub, true),
    (Op::Xor, Op::Xor, false),
];
