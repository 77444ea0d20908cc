//! Symbolic calculus on an orthonormal Lorentz frame with index classes.
//!
//! The frame {e₁, …, e_n} is handled through seven representative index
//! classes: the two complex-block directions `E1`, `E2`; two distinct
//! representatives `A`, `At` of the first real eigenvalue block (indices
//! 3…r); two distinct representatives `B`, `Bt` of the second block (indices
//! r+1…n−1); and the gradient direction `En`. Every scalar field, connection
//! coefficient ω_ij^k, and frame derivative e_i(f) is an interned polynomial
//! variable, so the entire calculus happens inside the exact ring [`Poly`].
//!
//! # Key operations
//! - [`FrameContext::new`] fixes (n, r), validates admissibility and interns
//!   the full symbol universe in one deterministic order (the global
//!   variable order everything downstream depends on).
//! - [`FrameContext::conn`] looks up ω_ij^k, baking in the identical
//!   vanishing ω_ki^i = 0 from metric compatibility.
//! - [`FrameContext::derive`] is the formal frame derivation e_dir(·):
//!   scalar fields differentiate to first- and second-order derivative
//!   symbols, connection symbols to first-order ones; deeper derivatives are
//!   rejected because the verified identities never need them.
//! - [`FrameContext::relabel_a`] / [`relabel_b`](FrameContext::relabel_b)
//!   swap the two representatives of a block — the member-relabeling symmetry
//!   used to close equation sets over "any two distinct members".
//!
//! # Design notes
//! - `A` and `At` are honest distinct members, never identified: ω_AÃ^k and
//!   ω_ÃA^k are different symbols. Statements about "all members" are
//!   represented by closing rows under the relabeling maps.
//! - λ_n is never a variable: it is eagerly the expression −nH/2, and n, r
//!   are concrete integers substituted at construction time.
//! - The constant α (from the proper-mean-curvature condition) has zero
//!   derivative in every direction.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::poly::{rat, rat_int, Poly, Var, VarTable};

mod calculus;
mod expr;

pub use calculus::{
    bracket_rows, codazzi_residual, compat_rows, curvature_residual, derived_compat_relation,
    laplacian_expr, metric_sign, shape_image, shape_pairing, trace_s, trace_s2, Compat, Raw,
    Reducer, VectorExpr,
};
pub use expr::LinExpr;

/// The seven representative index classes of the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Class {
    /// Timelike direction e₁ of the complex block (ε = −1).
    E1,
    /// Spacelike direction e₂ of the complex block.
    E2,
    /// A representative of the first real block (indices 3…r).
    A,
    /// A second, distinct representative of the first real block.
    At,
    /// A representative of the second real block (indices r+1…n−1).
    B,
    /// A second, distinct representative of the second real block.
    Bt,
    /// The gradient direction e_n.
    En,
}

impl Class {
    /// All classes in the fixed global order.
    pub const ALL: [Class; 7] = [
        Class::E1,
        Class::E2,
        Class::A,
        Class::At,
        Class::B,
        Class::Bt,
        Class::En,
    ];

    /// Short name used in symbol spellings and reports.
    pub fn short(self) -> &'static str {
        match self {
            Class::E1 => "1",
            Class::E2 => "2",
            Class::A => "A",
            Class::At => "At",
            Class::B => "B",
            Class::Bt => "Bt",
            Class::En => "n",
        }
    }

    /// Metric sign ε of the class (−1 only for the timelike e₁).
    pub fn eps(self) -> i64 {
        if self == Class::E1 {
            -1
        } else {
            1
        }
    }

    /// The block a representative belongs to, if it is a real-block member.
    fn block(self) -> Option<Block> {
        match self {
            Class::A | Class::At => Some(Block::First),
            Class::B | Class::Bt => Some(Block::Second),
            _ => None,
        }
    }

    /// Image under the first-block representative swap A ↔ Ã.
    pub fn swap_a(self) -> Class {
        match self {
            Class::A => Class::At,
            Class::At => Class::A,
            other => other,
        }
    }

    /// Image under the second-block representative swap B ↔ B̃.
    pub fn swap_b(self) -> Class {
        match self {
            Class::B => Class::Bt,
            Class::Bt => Class::B,
            other => other,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.short())
    }
}

/// Real eigenvalue blocks (multiplicities r−2 and n−r−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    First,
    Second,
}

/// The scalar fields of the calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    /// Mean curvature H.
    H,
    /// Real part λ of the complex eigenvalue pair.
    Lam,
    /// Imaginary part μ of the complex eigenvalue pair (nonzero).
    Mu,
    /// First-block eigenvalue λ₃.
    Lam3,
    /// Second-block eigenvalue λ_{n−1}.
    LamN1,
    /// The constant α of the proper-mean-curvature condition.
    Alpha,
}

impl Field {
    const ALL: [Field; 6] = [
        Field::H,
        Field::Lam,
        Field::Mu,
        Field::Lam3,
        Field::LamN1,
        Field::Alpha,
    ];
    /// Fields that admit derivative symbols (α is constant).
    const DIFFERENTIABLE: [Field; 5] = [
        Field::H,
        Field::Lam,
        Field::Mu,
        Field::Lam3,
        Field::LamN1,
    ];

    /// Display name.
    pub fn name(self) -> &'static str {
        match self {
            Field::H => "H",
            Field::Lam => "lam",
            Field::Mu => "mu",
            Field::Lam3 => "lam3",
            Field::LamN1 => "lamN1",
            Field::Alpha => "alpha",
        }
    }
}

/// Structural kind of an interned variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SymKind {
    /// A scalar field.
    Field(Field),
    /// Connection coefficient ω_ij^k (never with j = k, which is identically 0).
    Conn(Class, Class, Class),
    /// First frame derivative e_dir(field).
    DField(Class, Field),
    /// Second frame derivative e_d1(e_d2(field)).
    D2Field(Class, Class, Field),
    /// First frame derivative e_dir(ω_ij^k).
    DConn(Class, Class, Class, Class),
}

/// Errors from the frame layer.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    /// The (n, r) pair does not describe an admissible five-eigenvalue shape.
    #[error("inadmissible parameters n={n}, r={r}: need n >= 5 and 3 <= r <= n-2")]
    InadmissibleParams { n: i64, r: i64 },
    /// A derivative deeper than the calculus supports was requested.
    #[error("unsupported derivative depth: e_{dir}({of})")]
    DerivativeDepth { dir: String, of: String },
    /// A class-weighted sum was requested with two anchored members of one block.
    #[error("contraction with two anchored members of one block: {0}")]
    AnchorClash(String),
    /// A multiplicity-weighted sum failed its relabeling-invariance check.
    #[error("summand is not invariant under member relabeling: {0}")]
    RelabelVariance(String),
}

/// The frame calculus context: concrete (n, r), the interned symbol
/// universe, and the relabeling maps.
pub struct FrameContext {
    /// Dimension n of the hypersurface (≥ 5).
    pub n: i64,
    /// Last index r of the first real block (3 ≤ r ≤ n−2).
    pub r: i64,
    vars: VarTable,
    kinds: Vec<SymKind>,
    by_kind: BTreeMap<SymKind, Var>,
    relabel_a_map: BTreeMap<Var, Poly>,
    relabel_b_map: BTreeMap<Var, Poly>,
}

impl FrameContext {
    /// Builds the context, validating admissibility and interning every
    /// symbol in one fixed order: fields, then connection symbols, then
    /// field derivatives, then second field derivatives, then connection
    /// derivatives.
    pub fn new(n: i64, r: i64) -> Result<Self, FrameError> {
        if n < 5 || r < 3 || r > n - 2 {
            return Err(FrameError::InadmissibleParams { n, r });
        }
        let mut vars = VarTable::new();
        let mut kinds = Vec::new();
        let mut by_kind = BTreeMap::new();
        let mut add = |vars: &mut VarTable, kind: SymKind, name: String| {
            let v = vars.intern(&name);
            debug_assert_eq!(v.0 as usize, kinds.len(), "duplicate symbol name {name}");
            kinds.push(kind);
            by_kind.insert(kind, v);
        };
        for f in Field::ALL {
            add(&mut vars, SymKind::Field(f), f.name().to_string());
        }
        for i in Class::ALL {
            for j in Class::ALL {
                for k in Class::ALL {
                    if j != k {
                        add(
                            &mut vars,
                            SymKind::Conn(i, j, k),
                            format!("w[{},{},{}]", i.short(), j.short(), k.short()),
                        );
                    }
                }
            }
        }
        for dir in Class::ALL {
            for f in Field::DIFFERENTIABLE {
                add(
                    &mut vars,
                    SymKind::DField(dir, f),
                    format!("d[{}]({})", dir.short(), f.name()),
                );
            }
        }
        for d1 in Class::ALL {
            for d2 in Class::ALL {
                for f in Field::DIFFERENTIABLE {
                    add(
                        &mut vars,
                        SymKind::D2Field(d1, d2, f),
                        format!("d[{}](d[{}]({}))", d1.short(), d2.short(), f.name()),
                    );
                }
            }
        }
        for dir in Class::ALL {
            for i in Class::ALL {
                for j in Class::ALL {
                    for k in Class::ALL {
                        if j != k {
                            add(
                                &mut vars,
                                SymKind::DConn(dir, i, j, k),
                                format!(
                                    "d[{}](w[{},{},{}])",
                                    dir.short(),
                                    i.short(),
                                    j.short(),
                                    k.short()
                                ),
                            );
                        }
                    }
                }
            }
        }
        let mut ctx = Self {
            n,
            r,
            vars,
            kinds,
            by_kind,
            relabel_a_map: BTreeMap::new(),
            relabel_b_map: BTreeMap::new(),
        };
        ctx.relabel_a_map = ctx.build_relabel(Class::swap_a);
        ctx.relabel_b_map = ctx.build_relabel(Class::swap_b);
        Ok(ctx)
    }

    fn build_relabel(&self, swap: fn(Class) -> Class) -> BTreeMap<Var, Poly> {
        let mut map = BTreeMap::new();
        for (idx, kind) in self.kinds.iter().enumerate() {
            let image = match *kind {
                SymKind::Field(f) => SymKind::Field(f),
                SymKind::Conn(i, j, k) => SymKind::Conn(swap(i), swap(j), swap(k)),
                SymKind::DField(d, f) => SymKind::DField(swap(d), f),
                SymKind::D2Field(d1, d2, f) => SymKind::D2Field(swap(d1), swap(d2), f),
                SymKind::DConn(d, i, j, k) => SymKind::DConn(swap(d), swap(i), swap(j), swap(k)),
            };
            let from = Var(idx as u32);
            let to = self.by_kind[&image];
            if from != to {
                map.insert(from, Poly::var(to));
            }
        }
        map
    }

    /// True when the first block has a second distinct member (r ≥ 4).
    pub fn has_atilde(&self) -> bool {
        self.r >= 4
    }

    /// True when the second block has a second distinct member (r ≤ n−3).
    pub fn has_btilde(&self) -> bool {
        self.r <= self.n - 3
    }

    /// Number of concrete indices in a class.
    pub fn class_size(&self, c: Class) -> i64 {
        match c.block() {
            None => 1,
            Some(Block::First) => self.r - 2,
            Some(Block::Second) => self.n - self.r - 1,
        }
    }

    /// The variable table (for rendering).
    pub fn vars(&self) -> &VarTable {
        &self.vars
    }

    /// Renders a polynomial with this context's symbol names.
    pub fn render(&self, p: &Poly) -> String {
        self.vars.render(p)
    }

    /// Structural kind of a variable.
    pub fn kind(&self, v: Var) -> SymKind {
        self.kinds[v.0 as usize]
    }

    /// Display name of a variable.
    pub fn name(&self, v: Var) -> &str {
        self.vars.name(v)
    }

    /// Total number of interned symbols.
    pub fn symbol_count(&self) -> usize {
        self.kinds.len()
    }

    /// True for symbols the deduction layer treats as unknowns (connection
    /// symbols and frame derivatives, as opposed to scalar fields).
    pub fn is_unknown(&self, v: Var) -> bool {
        !matches!(self.kind(v), SymKind::Field(_))
    }

    /// The variable of a scalar field.
    pub fn field(&self, f: Field) -> Var {
        self.by_kind[&SymKind::Field(f)]
    }

    /// The polynomial of a scalar field.
    pub fn fpoly(&self, f: Field) -> Poly {
        Poly::var(self.field(f))
    }

    /// The eigenvalue λ_n as the expression −nH/2.
    pub fn lam_n(&self) -> Poly {
        self.fpoly(Field::H).scale(&rat(-self.n, 2))
    }

    /// The combination λ + nH/2 (that is, λ − λ_n).
    pub fn lam_minus_lam_n(&self) -> Poly {
        &self.fpoly(Field::Lam) + &self.fpoly(Field::H).scale(&rat(self.n, 2))
    }

    /// The connection variable ω_ij^k, when not identically zero (j ≠ k).
    pub fn conn_var(&self, i: Class, j: Class, k: Class) -> Option<Var> {
        if j == k {
            None
        } else {
            Some(self.by_kind[&SymKind::Conn(i, j, k)])
        }
    }

    /// The connection coefficient ω_ij^k as a polynomial; metric
    /// compatibility makes ω_ki^i identically zero.
    pub fn conn(&self, i: Class, j: Class, k: Class) -> Poly {
        match self.conn_var(i, j, k) {
            Some(v) => Poly::var(v),
            None => Poly::zero(),
        }
    }

    /// The first-derivative variable e_dir(field).
    pub fn dfield(&self, dir: Class, f: Field) -> Var {
        assert!(f != Field::Alpha, "alpha is a constant");
        self.by_kind[&SymKind::DField(dir, f)]
    }

    /// e_dir(field) as a polynomial.
    pub fn dfpoly(&self, dir: Class, f: Field) -> Poly {
        Poly::var(self.dfield(dir, f))
    }

    /// The second-derivative variable e_d1(e_d2(field)).
    pub fn d2field(&self, d1: Class, d2: Class, f: Field) -> Var {
        assert!(f != Field::Alpha, "alpha is a constant");
        self.by_kind[&SymKind::D2Field(d1, d2, f)]
    }

    /// The derivative variable e_dir(ω_ij^k), when the base symbol exists.
    pub fn dconn(&self, dir: Class, i: Class, j: Class, k: Class) -> Option<Var> {
        if j == k {
            None
        } else {
            Some(self.by_kind[&SymKind::DConn(dir, i, j, k)])
        }
    }

    /// Derivative of a single variable in direction `dir`, following the
    /// depth rules: fields to depth two, connection symbols to depth one,
    /// α to zero.
    pub fn derive_var(&self, dir: Class, v: Var) -> Result<Poly, FrameError> {
        match self.kind(v) {
            SymKind::Field(Field::Alpha) => Ok(Poly::zero()),
            SymKind::Field(f) => Ok(Poly::var(self.dfield(dir, f))),
            SymKind::DField(d2, f) => Ok(Poly::var(self.d2field(dir, d2, f))),
            SymKind::Conn(i, j, k) => Ok(Poly::var(
                self.dconn(dir, i, j, k).expect("base symbol exists"),
            )),
            SymKind::D2Field(..) | SymKind::DConn(..) => Err(FrameError::DerivativeDepth {
                dir: dir.short().to_string(),
                of: self.name(v).to_string(),
            }),
        }
    }

    /// Formal frame derivation e_dir(p) of a polynomial, by the product rule.
    pub fn derive(&self, dir: Class, p: &Poly) -> Result<Poly, FrameError> {
        p.derive_with(|v| self.derive_var(dir, v))
    }

    /// Applies the first-block representative swap A ↔ Ã to a polynomial.
    pub fn relabel_a(&self, p: &Poly) -> Poly {
        p.substitute(&self.relabel_a_map)
    }

    /// Applies the second-block representative swap B ↔ B̃ to a polynomial.
    pub fn relabel_b(&self, p: &Poly) -> Poly {
        p.substitute(&self.relabel_b_map)
    }

    /// All distinct images of a row under the member-relabeling maps that
    /// are available at this (n, r) (identity always included).
    pub fn relabel_closure(&self, p: &Poly) -> Vec<Poly> {
        let mut out = vec![p.clone()];
        if self.has_atilde() {
            out.push(self.relabel_a(p));
        }
        if self.has_btilde() {
            out.push(self.relabel_b(p));
        }
        if self.has_atilde() && self.has_btilde() {
            out.push(self.relabel_b(&self.relabel_a(p)));
        }
        out.sort_by(|a, b| format!("{a}").cmp(&format!("{b}")));
        out.dedup();
        out
    }

    /// Rational constant as a polynomial (convenience).
    pub fn c(&self, num: i64, den: i64) -> Poly {
        Poly::constant(rat(num, den))
    }

    /// Integer constant as a polynomial (convenience).
    pub fn ci(&self, k: i64) -> Poly {
        Poly::constant(rat_int(k))
    }
}

impl fmt::Debug for FrameContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FrameContext {{ n: {}, r: {}, symbols: {} }}",
            self.n,
            self.r,
            self.symbol_count()
        )
    }
}
