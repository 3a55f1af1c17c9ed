//! Canonical HDDL text for syntax trees. Subtasks are always printed with
//! their identifiers so that reparsing yields the same tree.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn typed(out: &mut Formatter<'_>, items: &[Typed]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            out.write_char(' ')?;
        }
        write!(out, "{} - {}", t.name, t.ty)?;
    }
    Ok(())
}

fn call(out: &mut Formatter<'_>, name: &str, args: &[Term]) -> fmt::Result {
    write!(out, "({name}")?;
    for a in args {
        write!(out, " {}", a.name())?;
    }
    out.write_char(')')
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        call(f, &self.predicate, &self.args)
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Formula::And(fs) if fs.is_empty() => f.write_str("()"),
            Formula::And(fs) => {
                f.write_str("(and")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                f.write_char(')')
            }
            Formula::Not(x) => write!(f, "(not {x})"),
            Formula::Atom(a) => a.fmt(f),
        }
    }
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.positive {
            self.atom.fmt(f)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

fn subtasks(f: &mut Formatter<'_>, subs: &[Subtask], indent: &str) -> fmt::Result {
    if subs.is_empty() {
        return f.write_str("()");
    }
    f.write_str("(and")?;
    for s in subs {
        write!(f, "\n{indent}  ({} ", s.id)?;
        call(f, &s.task, &s.args)?;
        f.write_char(')')?;
    }
    f.write_char(')')
}

impl Display for DomainAst {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            f.write_str("  (:types")?;
            for t in &self.types {
                write!(f, "\n    {} - {}", t.name, t.parent)?;
            }
            f.write_str(")\n")?;
        }
        if !self.constants.is_empty() {
            f.write_str("  (:constants ")?;
            typed(f, &self.constants)?;
            f.write_str(")\n")?;
        }
        if !self.predicates.is_empty() {
            f.write_str("  (:predicates")?;
            for p in &self.predicates {
                write!(f, "\n    ({}", p.name)?;
                if !p.params.is_empty() {
                    f.write_char(' ')?;
                    typed(f, &p.params)?;
                }
                f.write_char(')')?;
            }
            f.write_str(")\n")?;
        }
        for t in &self.tasks {
            write!(f, "  (:task {} :parameters (", t.name)?;
            typed(f, &t.params)?;
            f.write_str("))\n")?;
        }
        for m in &self.methods {
            write!(f, "  (:method {}\n    :parameters (", m.name)?;
            typed(f, &m.params)?;
            f.write_str(")\n    :task ")?;
            call(f, &m.task, &m.task_args)?;
            write!(f, "\n    :precondition {}\n    :ordered-subtasks ", m.precondition)?;
            subtasks(f, &m.subtasks, "    ")?;
            f.write_str(")\n")?;
        }
        for a in &self.actions {
            write!(f, "  (:action {}\n    :parameters (", a.name)?;
            typed(f, &a.params)?;
            write!(f, ")\n    :precondition {}\n    :effect (and", a.precondition)?;
            for l in &a.effects {
                write!(f, " {l}")?;
            }
            f.write_str("))\n")?;
        }
        f.write_str(")\n")
    }
}

impl Display for ProblemAst {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        if !self.objects.is_empty() {
            f.write_str("  (:objects ")?;
            typed(f, &self.objects)?;
            f.write_str(")\n")?;
        }
        f.write_str("  (:htn\n    :parameters ()\n    :ordered-subtasks ")?;
        if self.htn.is_empty() {
            f.write_str("()")?;
        } else {
            f.write_str("(and")?;
            for (id, t) in self.htn.iter() {
                write!(f, "\n      ({id} {t})")?;
            }
            f.write_char(')')?;
        }
        f.write_str(")\n  (:init")?;
        for a in &self.init {
            write!(f, "\n    {a}")?;
        }
        f.write_str(")\n")?;
        if let Some(g) = &self.goal {
            writeln!(f, "  (:goal {g})")?;
        }
        f.write_str(")\n")
    }
}
