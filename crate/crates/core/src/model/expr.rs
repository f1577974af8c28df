use std::fmt;

/// Propositional formula over atoms of type `A`.
///
/// Guards use local variable indices as atoms; risk predicates use
/// [`RiskAtom`]s that mention a component's location or variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr<A> {
    Const(bool),
    Atom(A),
    Not(Box<Expr<A>>),
    And(Vec<Expr<A>>),
    Or(Vec<Expr<A>>),
}

impl<A> Expr<A> {
    pub fn tt() -> Self {
        Expr::Const(true)
    }

    pub fn ff() -> Self {
        Expr::Const(false)
    }

    pub fn not(e: Expr<A>) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn eval(&self, atom: &mut impl FnMut(&A) -> bool) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Atom(a) => atom(a),
            Expr::Not(e) => !e.eval(atom),
            Expr::And(es) => es.iter().all(|e| e.eval(atom)),
            Expr::Or(es) => es.iter().any(|e| e.eval(atom)),
        }
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            Expr::Const(_) => {}
            Expr::Atom(a) => out.push(a),
            Expr::Not(e) => e.collect_atoms(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.collect_atoms(out)),
        }
    }

    pub fn try_map<B, E>(&self, f: &mut impl FnMut(&A) -> Result<B, E>) -> Result<Expr<B>, E> {
        Ok(match self {
            Expr::Const(b) => Expr::Const(*b),
            Expr::Atom(a) => Expr::Atom(f(a)?),
            Expr::Not(e) => Expr::Not(Box::new(e.try_map(f)?)),
            Expr::And(es) => Expr::And(es.iter().map(|e| e.try_map(f)).collect::<Result<_, _>>()?),
            Expr::Or(es) => Expr::Or(es.iter().map(|e| e.try_map(f)).collect::<Result<_, _>>()?),
        })
    }
}

/// Atom of a risk predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RiskAtom {
    /// Component is at the given location.
    At { component: usize, location: usize },
    /// Component variable holds.
    Var { component: usize, variable: usize },
}

impl<A: fmt::Display> fmt::Display for Expr<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(b) => write!(f, "{b}"),
            Expr::Atom(a) => write!(f, "{a}"),
            Expr::Not(e) => write!(f, "!{e}"),
            Expr::And(es) | Expr::Or(es) => {
                let op = if matches!(self, Expr::And(_)) { " & " } else { " | " };
                write!(f, "(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
        }
    }
}
