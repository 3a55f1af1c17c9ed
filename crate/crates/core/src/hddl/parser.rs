//! Domain and problem parsing plus static checks against the declarations.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::lexer::{read_sexp, Pos, Sexp};
use super::ParseError;

type R<T> = Result<T, ParseError>;

pub const SUPPORTED_REQUIREMENTS: [&str; 4] =
    [":typing", ":hierarchy", ":method-preconditions", ":negative-preconditions"];

const TEMPORAL_REQUIREMENTS: [&str; 5] =
    [":durative-actions", ":duration-inequalities", ":timed-initial-literals", ":continuous-effects", ":time"];

const OTHER_KNOWN_REQUIREMENTS: [&str; 12] = [
    ":strips",
    ":equality",
    ":disjunctive-preconditions",
    ":existential-preconditions",
    ":universal-preconditions",
    ":quantified-preconditions",
    ":conditional-effects",
    ":adl",
    ":numeric-fluents",
    ":fluents",
    ":action-costs",
    ":universal-effects",
];

const TEMPORAL_MSG: &str = "temporal HDDL is out of scope; only untimed HDDL 1.0 models are supported";
const PARTIAL_ORDER_MSG: &str =
    "partial-order task networks are not supported; write the subtasks under :ordered-subtasks";

fn err<T>(pos: Pos, message: impl Into<String>) -> R<T> {
    Err(ParseError::new(pos, message))
}

fn list<'a>(s: &'a Sexp, what: &str) -> R<&'a [Sexp]> {
    match s {
        Sexp::List { items, .. } => Ok(items),
        Sexp::Atom { text, pos } => err(*pos, format!("expected {what} but found '{text}'")),
    }
}

fn atom<'a>(s: &'a Sexp, what: &str) -> R<&'a str> {
    match s {
        Sexp::Atom { text, .. } => Ok(text),
        Sexp::List { pos, .. } => err(*pos, format!("expected {what} but found a list")),
    }
}

fn is_var(name: &str) -> bool {
    name.starts_with('?')
}

fn term(s: &Sexp) -> R<Term> {
    let name = atom(s, "a variable or constant")?;
    if name == "?" {
        return err(s.pos(), "empty variable name");
    }
    Ok(if is_var(name) { Term::Var(name.to_string()) } else { Term::Const(name.to_string()) })
}

/// `a b - t c` style lists. Untyped trailing names get type `object`.
fn typed_list(items: &[Sexp], want_vars: bool) -> R<Vec<Typed>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let name = atom(&items[i], "a name")?;
        if name == "-" {
            let ty_sexp = items.get(i + 1).ok_or_else(|| ParseError::new(items[i].pos(), "'-' must be followed by a type"))?;
            if ty_sexp.head() == Some("either") {
                return err(ty_sexp.pos(), "'either' types are not supported");
            }
            let ty = atom(ty_sexp, "a type name")?;
            if pending.is_empty() {
                return err(items[i].pos(), "'-' with no names before it");
            }
            for (n, p) in pending.drain(..) {
                out.push(Typed { name: n, ty: ty.to_string(), span: Span(p) });
            }
            i += 2;
            continue;
        }
        if want_vars != is_var(name) {
            let what = if want_vars { "a variable starting with '?'" } else { "a name without '?'" };
            return err(items[i].pos(), format!("expected {what} but found '{name}'"));
        }
        pending.push((name.to_string(), items[i].pos()));
        i += 1;
    }
    for (n, p) in pending {
        out.push(Typed { name: n, ty: "object".into(), span: Span(p) });
    }
    Ok(out)
}

/// Splits `:key value :key value ...` into pairs, rejecting keys outside `allowed`.
fn keyed<'a>(items: &'a [Sexp], allowed: &[&str], ctx: &str) -> R<Vec<(&'a str, &'a Sexp, Pos)>> {
    let mut out: Vec<(&str, &Sexp, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let key = atom(&items[i], "a keyword")?;
        let pos = items[i].pos();
        match key {
            ":duration" | ":condition" => return err(pos, TEMPORAL_MSG),
            ":ordering" | ":constraints" => return err(pos, PARTIAL_ORDER_MSG),
            k if !allowed.contains(&k) => return err(pos, format!("unexpected '{k}' in {ctx}")),
            _ => {}
        }
        if out.iter().any(|(k, _, _)| *k == key) {
            return err(pos, format!("'{key}' given twice in {ctx}"));
        }
        let value = items.get(i + 1).ok_or_else(|| ParseError::new(pos, format!("'{key}' has no value")))?;
        out.push((key, value, pos));
        i += 2;
    }
    Ok(out)
}

fn params_of(pairs: &[(&str, &Sexp, Pos)]) -> R<Vec<Typed>> {
    match pairs.iter().find(|(k, _, _)| *k == ":parameters") {
        Some((_, v, _)) => typed_list(list(v, "a parameter list")?, true),
        None => Ok(Vec::new()),
    }
}

fn parse_atom(s: &Sexp) -> R<Atom> {
    let items = list(s, "an atom")?;
    let Some(head) = items.first() else {
        return err(s.pos(), "empty atom");
    };
    let predicate = atom(head, "a predicate name")?;
    let args = items[1..].iter().map(term).collect::<R<Vec<_>>>()?;
    Ok(Atom { predicate: predicate.to_string(), args, span: Span(s.pos()) })
}

fn reject_connective(head: &str, pos: Pos) -> R<()> {
    match head {
        "or" => err(pos, "disjunctive formulas ('or') are not supported"),
        "forall" | "exists" => err(pos, format!("quantified formulas ('{head}') are not supported")),
        "imply" => err(pos, "implications ('imply') are not supported"),
        "when" => err(pos, "conditional effects ('when') are not supported"),
        "=" => err(pos, "equality atoms are not supported"),
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" => {
            err(pos, format!("numeric effects ('{head}') are not supported"))
        }
        _ => Ok(()),
    }
}

fn parse_formula(s: &Sexp) -> R<Formula> {
    let items = list(s, "a formula")?;
    let Some(head) = items.first().and_then(Sexp::as_atom) else {
        if items.is_empty() {
            return Ok(Formula::truth());
        }
        return err(s.pos(), "a formula must start with a connective or predicate name");
    };
    reject_connective(head, s.pos())?;
    match head {
        "and" => Ok(Formula::And(items[1..].iter().map(parse_formula).collect::<R<_>>()?)),
        "not" => {
            if items.len() != 2 {
                return err(s.pos(), "'not' takes exactly one formula");
            }
            Ok(Formula::Not(Box::new(parse_formula(&items[1])?)))
        }
        _ => Ok(Formula::Atom(parse_atom(s)?)),
    }
}

fn parse_literal(s: &Sexp) -> R<Literal> {
    let head = s.head().unwrap_or("");
    reject_connective(head, s.pos())?;
    if head == "and" {
        return err(s.pos(), "nested 'and' in an effect");
    }
    if head == "not" {
        let items = list(s, "a literal")?;
        if items.len() != 2 {
            return err(s.pos(), "'not' takes exactly one atom");
        }
        let inner_head = items[1].head().unwrap_or("");
        reject_connective(inner_head, items[1].pos())?;
        return Ok(Literal { positive: false, atom: parse_atom(&items[1])? });
    }
    Ok(Literal { positive: true, atom: parse_atom(s)? })
}

fn parse_effects(s: &Sexp) -> R<Vec<Literal>> {
    let items = list(s, "an effect")?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    if s.head() == Some("and") {
        items[1..].iter().map(parse_literal).collect()
    } else {
        Ok(vec![parse_literal(s)?])
    }
}

fn task_call(s: &Sexp) -> R<(String, Vec<Term>)> {
    let items = list(s, "a task")?;
    let Some(head) = items.first() else {
        return err(s.pos(), "empty task");
    };
    let name = atom(head, "a task name")?;
    if is_var(name) {
        return err(head.pos(), format!("expected a task name but found '{name}'"));
    }
    Ok((name.to_string(), items[1..].iter().map(term).collect::<R<_>>()?))
}

/// Parses a subtask network given under `key`. Unordered keys are accepted
/// only when they cannot express a partial order, i.e. for at most one task.
fn parse_subtasks(key: &str, s: &Sexp, key_pos: Pos) -> R<Vec<Subtask>> {
    let items = list(s, "a subtask list")?;
    let entries: Vec<&Sexp> = if items.is_empty() {
        Vec::new()
    } else if s.head() == Some("and") {
        items[1..].iter().collect()
    } else {
        vec![s]
    };
    let ordered = matches!(key, ":ordered-subtasks" | ":ordered-tasks");
    if !ordered && entries.len() > 1 {
        return err(key_pos, PARTIAL_ORDER_MSG);
    }
    let mut labelled: Vec<(Option<String>, String, Vec<Term>, Pos)> = Vec::new();
    for e in entries {
        let parts = list(e, "a subtask")?;
        if parts.len() == 2 && parts[0].as_atom().is_some() && parts[1].as_list().is_some() {
            let id = atom(&parts[0], "a subtask id")?.to_string();
            let (name, args) = task_call(&parts[1])?;
            labelled.push((Some(id), name, args, e.pos()));
        } else {
            let (name, args) = task_call(e)?;
            labelled.push((None, name, args, e.pos()));
        }
    }
    let explicit: HashSet<String> = labelled.iter().filter_map(|l| l.0.clone()).collect();
    let mut seen = HashSet::new();
    let mut next = 0;
    let mut out = Vec::new();
    for (id, task, args, pos) in labelled {
        let id = match id {
            Some(id) => id,
            None => loop {
                let c = format!("task{next}");
                next += 1;
                if !explicit.contains(&c) {
                    break c;
                }
            },
        };
        if !seen.insert(id.clone()) {
            return err(pos, format!("subtask id '{id}' used twice"));
        }
        out.push(Subtask { id, task, args, span: Span(pos) });
    }
    Ok(out)
}

fn find<'a>(pairs: &[(&'a str, &'a Sexp, Pos)], key: &str) -> Option<&'a Sexp> {
    pairs.iter().find(|(k, _, _)| *k == key).map(|(_, v, _)| *v)
}

fn find_network<'a>(pairs: &[(&'a str, &'a Sexp, Pos)]) -> R<Option<(&'a str, &'a Sexp, Pos)>> {
    let nets: Vec<_> = pairs
        .iter()
        .filter(|(k, _, _)| matches!(*k, ":ordered-subtasks" | ":ordered-tasks" | ":subtasks" | ":tasks"))
        .collect();
    if nets.len() > 1 {
        return err(nets[1].2, "more than one subtask network given");
    }
    Ok(nets.first().map(|n| **n))
}

fn check_requirements(items: &[Sexp]) -> R<Vec<String>> {
    let mut reqs = Vec::new();
    for r in items {
        let name = atom(r, "a requirement")?;
        if SUPPORTED_REQUIREMENTS.contains(&name) {
            reqs.push(name.to_string());
        } else if TEMPORAL_REQUIREMENTS.contains(&name) {
            return err(r.pos(), format!("requirement {name}: {TEMPORAL_MSG}"));
        } else if OTHER_KNOWN_REQUIREMENTS.contains(&name) {
            return err(r.pos(), format!("requirement {name} is not supported"));
        } else {
            return err(
                r.pos(),
                format!("unknown requirement {name} (supported: {})", SUPPORTED_REQUIREMENTS.join(" ")),
            );
        }
    }
    Ok(reqs)
}

fn header<'a>(top: &'a Sexp, kind: &str) -> R<(&'a [Sexp], String)> {
    let items = list(top, "'(define ...)'")?;
    if items.first().and_then(Sexp::as_atom) != Some("define") {
        return err(top.pos(), "expected '(define ...)'");
    }
    let Some(decl) = items.get(1) else {
        return err(top.pos(), format!("missing '({kind} NAME)'"));
    };
    let d = list(decl, &format!("'({kind} NAME)'"))?;
    if d.len() != 2 || d[0].as_atom() != Some(kind) {
        return err(decl.pos(), format!("expected '({kind} NAME)'"));
    }
    Ok((&items[2..], atom(&d[1], "a name")?.to_string()))
}

pub fn parse_domain(text: &str) -> R<DomainAst> {
    let top = read_sexp(text)?;
    let (sections, name) = header(&top, "domain")?;
    let mut d = DomainAst {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        tasks: Vec::new(),
        actions: Vec::new(),
        methods: Vec::new(),
        span: Span(top.pos()),
    };
    for sec in sections {
        let items = list(sec, "a domain section")?;
        let pos = sec.pos();
        let Some(head) = items.first().and_then(Sexp::as_atom) else {
            return err(pos, "expected a section keyword");
        };
        let body = &items[1..];
        match head {
            ":requirements" => d.requirements.extend(check_requirements(body)?),
            ":types" => {
                for t in typed_list(body, false)? {
                    d.types.push(TypeDecl { name: t.name, parent: t.ty, span: t.span });
                }
            }
            ":constants" => d.constants.extend(typed_list(body, false)?),
            ":predicates" => {
                for p in body {
                    let pi = list(p, "a predicate declaration")?;
                    let Some(n) = pi.first() else {
                        return err(p.pos(), "empty predicate declaration");
                    };
                    let name = atom(n, "a predicate name")?.to_string();
                    d.predicates.push(Signature { name, params: typed_list(&pi[1..], true)?, span: Span(p.pos()) });
                }
            }
            ":task" => {
                let name = atom(body.first().ok_or_else(|| ParseError::new(pos, "task without a name"))?, "a task name")?;
                let pairs = keyed(&body[1..], &[":parameters"], &format!("task {name}"))?;
                d.tasks.push(Signature { name: name.to_string(), params: params_of(&pairs)?, span: Span(pos) });
            }
            ":action" => {
                let name = atom(body.first().ok_or_else(|| ParseError::new(pos, "action without a name"))?, "an action name")?;
                let pairs = keyed(&body[1..], &[":parameters", ":precondition", ":effect"], &format!("action {name}"))?;
                d.actions.push(ActionAst {
                    name: name.to_string(),
                    params: params_of(&pairs)?,
                    precondition: find(&pairs, ":precondition").map(parse_formula).transpose()?.unwrap_or_else(Formula::truth),
                    effects: find(&pairs, ":effect").map(parse_effects).transpose()?.unwrap_or_default(),
                    span: Span(pos),
                });
            }
            ":method" => {
                let name = atom(body.first().ok_or_else(|| ParseError::new(pos, "method without a name"))?, "a method name")?;
                let ctx = format!("method {name}");
                let pairs = keyed(
                    &body[1..],
                    &[":parameters", ":task", ":precondition", ":ordered-subtasks", ":ordered-tasks", ":subtasks", ":tasks"],
                    &ctx,
                )?;
                let Some(task) = find(&pairs, ":task") else {
                    return err(pos, format!("{ctx} has no :task"));
                };
                let (task, task_args) = task_call(task)?;
                let subtasks = match find_network(&pairs)? {
                    Some((k, v, kp)) => parse_subtasks(k, v, kp)?,
                    None => Vec::new(),
                };
                d.methods.push(MethodAst {
                    name: name.to_string(),
                    params: params_of(&pairs)?,
                    task,
                    task_args,
                    precondition: find(&pairs, ":precondition").map(parse_formula).transpose()?.unwrap_or_else(Formula::truth),
                    subtasks,
                    span: Span(pos),
                });
            }
            ":durative-action" => return err(pos, TEMPORAL_MSG),
            other => return err(pos, format!("unknown domain section '{other}'")),
        }
    }
    complete_types(&mut d)?;
    check_domain(&d)?;
    Ok(d)
}

/// Declares parents that only appear after '-' and rejects duplicates and cycles.
fn complete_types(d: &mut DomainAst) -> R<()> {
    let mut seen = HashSet::new();
    for t in &d.types {
        if t.name == "object" {
            return err(t.span.0, "type 'object' is built in and cannot be redeclared");
        }
        if !seen.insert(t.name.clone()) {
            return err(t.span.0, format!("type '{}' declared twice", t.name));
        }
    }
    let mut implicit = Vec::new();
    for t in &d.types {
        if t.parent != "object" && !seen.contains(&t.parent) {
            seen.insert(t.parent.clone());
            implicit.push(TypeDecl { name: t.parent.clone(), parent: "object".into(), span: t.span });
        }
    }
    d.types.extend(implicit);
    for t in &d.types {
        let mut cur = t.parent.as_str();
        for _ in 0..=d.types.len() {
            if cur == "object" {
                break;
            }
            if cur == t.name {
                return err(t.span.0, format!("type '{}' is its own ancestor", t.name));
            }
            cur = &d.types.iter().find(|x| x.name == cur).unwrap().parent;
        }
    }
    Ok(())
}

fn check_type(d: &DomainAst, t: &Typed) -> R<()> {
    if !d.is_type_declared(&t.ty) {
        return err(t.span.0, format!("undeclared type '{}' for '{}'", t.ty, t.name));
    }
    Ok(())
}

fn check_params(d: &DomainAst, params: &[Typed], ctx: &str) -> R<()> {
    let mut seen = HashSet::new();
    for p in params {
        check_type(d, p)?;
        if !seen.insert(&p.name) {
            return err(p.span.0, format!("parameter {} repeated in {ctx}", p.name));
        }
    }
    Ok(())
}

/// Checks each argument against the expected parameter types: variables must
/// be parameters, constants must be declared and types must be related.
fn check_args(d: &DomainAst, params: &[Typed], args: &[Term], expected: &[&str], pos: Pos, ctx: &str) -> R<()> {
    if args.len() != expected.len() {
        return err(pos, format!("arity mismatch in {ctx}: expected {} arguments, found {}", expected.len(), args.len()));
    }
    for (a, want) in args.iter().zip(expected) {
        let ty = match a {
            Term::Var(v) => match params.iter().find(|p| &p.name == v) {
                Some(p) => &p.ty,
                None => return err(pos, format!("undeclared variable {v} in {ctx}")),
            },
            Term::Const(c) => match d.constants.iter().find(|k| &k.name == c) {
                Some(k) => &k.ty,
                None => return err(pos, format!("undeclared constant '{c}' in {ctx}")),
            },
        };
        if !d.is_subtype(ty, want) && !d.is_subtype(want, ty) {
            return err(pos, format!("type mismatch in {ctx}: '{}' has type {ty}, expected {want}", a.name()));
        }
    }
    Ok(())
}

fn check_atom(d: &DomainAst, params: &[Typed], a: &Atom, ctx: &str) -> R<()> {
    let Some(p) = d.predicate(&a.predicate) else {
        return err(a.span.0, format!("undeclared predicate '{}' in {ctx}", a.predicate));
    };
    let expected: Vec<&str> = p.params.iter().map(|t| t.ty.as_str()).collect();
    check_args(d, params, &a.args, &expected, a.span.0, &format!("{ctx}, atom {}", a.predicate))
}

fn check_domain(d: &DomainAst) -> R<()> {
    for c in &d.constants {
        check_type(d, c)?;
    }
    let mut preds = HashSet::new();
    for p in &d.predicates {
        if !preds.insert(&p.name) {
            return err(p.span.0, format!("predicate '{}' declared twice", p.name));
        }
        check_params(d, &p.params, &format!("predicate {}", p.name))?;
    }
    let mut tasks = HashSet::new();
    for t in &d.tasks {
        if !tasks.insert(&t.name) {
            return err(t.span.0, format!("task '{}' declared twice", t.name));
        }
        check_params(d, &t.params, &format!("task {}", t.name))?;
    }
    for a in &d.actions {
        if !tasks.insert(&a.name) {
            return err(a.span.0, format!("action '{}' clashes with another task or action", a.name));
        }
        let ctx = format!("action {}", a.name);
        check_params(d, &a.params, &ctx)?;
        for atom in a.precondition.atoms() {
            check_atom(d, &a.params, atom, &ctx)?;
        }
        for l in &a.effects {
            check_atom(d, &a.params, &l.atom, &ctx)?;
        }
    }
    let mut methods = HashSet::new();
    for m in &d.methods {
        let ctx = format!("method {}", m.name);
        if !methods.insert(&m.name) {
            return err(m.span.0, format!("method '{}' declared twice", m.name));
        }
        check_params(d, &m.params, &ctx)?;
        let Some(t) = d.compound_task(&m.task) else {
            let why = if d.action(&m.task).is_some() { "primitive" } else { "undeclared" };
            return err(m.span.0, format!("{ctx} decomposes {why} task '{}'", m.task));
        };
        let expected: Vec<&str> = t.params.iter().map(|p| p.ty.as_str()).collect();
        check_args(d, &m.params, &m.task_args, &expected, m.span.0, &ctx)?;
        for atom in m.precondition.atoms() {
            check_atom(d, &m.params, atom, &ctx)?;
        }
        for s in &m.subtasks {
            let Some(expected) = d.task_param_types(&s.task) else {
                return err(s.span.0, format!("undeclared task '{}' in {ctx}", s.task));
            };
            check_args(d, &m.params, &s.args, &expected, s.span.0, &format!("{ctx}, subtask {}", s.id))?;
        }
    }
    Ok(())
}

pub fn parse_problem(text: &str, domain: &DomainAst) -> R<ProblemAst> {
    let top = read_sexp(text)?;
    let (sections, name) = header(&top, "problem")?;
    let mut p = ProblemAst {
        name,
        domain: String::new(),
        objects: Vec::new(),
        htn: TaskNetwork::new(),
        init: Vec::new(),
        goal: None,
        span: Span(top.pos()),
    };
    let mut htn_raw: Option<Vec<Subtask>> = None;
    let mut init_raw: Vec<Atom> = Vec::new();
    for sec in sections {
        let items = list(sec, "a problem section")?;
        let pos = sec.pos();
        let Some(head) = items.first().and_then(Sexp::as_atom) else {
            return err(pos, "expected a section keyword");
        };
        let body = &items[1..];
        match head {
            ":domain" => {
                let dn = atom(body.first().ok_or_else(|| ParseError::new(pos, ":domain without a name"))?, "a domain name")?;
                if dn != domain.name {
                    return err(
                        pos,
                        format!("problem '{}' is for domain '{dn}' but the loaded domain is '{}'", p.name, domain.name),
                    );
                }
                p.domain = dn.to_string();
            }
            ":requirements" => {
                check_requirements(body)?;
            }
            ":objects" => p.objects.extend(typed_list(body, false)?),
            ":htn" => {
                let pairs = keyed(
                    body,
                    &[":parameters", ":ordered-subtasks", ":ordered-tasks", ":subtasks", ":tasks"],
                    "the initial task network",
                )?;
                if let Some(ps) = find(&pairs, ":parameters") {
                    if !list(ps, "a parameter list")?.is_empty() {
                        return err(ps.pos(), "parameters on the initial task network are not supported");
                    }
                }
                htn_raw = Some(match find_network(&pairs)? {
                    Some((k, v, kp)) => parse_subtasks(k, v, kp)?,
                    None => Vec::new(),
                });
            }
            ":init" => {
                for a in body {
                    if a.head() == Some("not") {
                        return err(a.pos(), "negative literals are not allowed in :init");
                    }
                    reject_connective(a.head().unwrap_or(""), a.pos())?;
                    init_raw.push(parse_atom(a)?);
                }
            }
            ":goal" => {
                let f = body.first().ok_or_else(|| ParseError::new(pos, ":goal without a formula"))?;
                p.goal = Some(parse_formula(f)?);
            }
            ":constraints" => return err(pos, "state constraints are not supported"),
            other => return err(pos, format!("unknown problem section '{other}'")),
        }
    }
    if p.domain.is_empty() {
        return err(top.pos(), format!("problem '{}' does not name its domain", p.name));
    }

    let mut types: HashMap<&str, &str> = domain.constants.iter().map(|c| (c.name.as_str(), c.ty.as_str())).collect();
    for o in &p.objects {
        if !domain.is_type_declared(&o.ty) {
            return err(o.span.0, format!("unknown object type '{}' for object '{}'", o.ty, o.name));
        }
        if types.insert(&o.name, &o.ty).is_some() {
            return err(o.span.0, format!("object '{}' declared twice", o.name));
        }
    }
    let ground_args = |args: &[Term], expected: &[&str], pos: Pos, ctx: &str| -> R<Vec<String>> {
        if args.len() != expected.len() {
            return err(pos, format!("arity mismatch in {ctx}: expected {} arguments, found {}", expected.len(), args.len()));
        }
        let mut out = Vec::new();
        for (a, want) in args.iter().zip(expected) {
            let Term::Const(o) = a else {
                return err(pos, format!("variable {} in {ctx} must be an object", a.name()));
            };
            let Some(ty) = types.get(o.as_str()) else {
                return err(pos, format!("unknown object '{o}' in {ctx}"));
            };
            if !domain.is_subtype(ty, want) {
                return err(pos, format!("ill-typed {ctx}: '{o}' has type {ty}, expected {want}"));
            }
            out.push(o.clone());
        }
        Ok(out)
    };
    for a in &init_raw {
        let Some(sig) = domain.predicate(&a.predicate) else {
            return err(a.span.0, format!("ill-typed init atom: undeclared predicate '{}'", a.predicate));
        };
        let expected: Vec<&str> = sig.params.iter().map(|t| t.ty.as_str()).collect();
        let args = ground_args(&a.args, &expected, a.span.0, &format!("init atom {}", a.predicate))?;
        p.init.push(GroundAtom { predicate: a.predicate.clone(), args });
    }
    for s in htn_raw.unwrap_or_default() {
        let Some(expected) = domain.task_param_types(&s.task) else {
            return err(s.span.0, format!("reference to unknown task '{}'", s.task));
        };
        let args = ground_args(&s.args, &expected, s.span.0, &format!("task {}", s.task))?;
        p.htn.identifiers.push(s.id);
        p.htn.tasks.push(TaskInstance { name: s.task, args });
    }
    if let Some(g) = &p.goal {
        for a in g.atoms() {
            let Some(sig) = domain.predicate(&a.predicate) else {
                return err(a.span.0, format!("undeclared predicate '{}' in the goal", a.predicate));
            };
            let expected: Vec<&str> = sig.params.iter().map(|t| t.ty.as_str()).collect();
            ground_args(&a.args, &expected, a.span.0, &format!("goal atom {}", a.predicate))?;
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = "(define (domain mini)
      (:requirements :typing :hierarchy)
      (:types thing)
      (:predicates (p ?x - thing) (q ?x - thing))
      (:action act :parameters (?x - thing) :precondition (p ?x) :effect (and (q ?x) (not (p ?x)))))";

    #[test]
    fn one_action_no_methods() {
        let d = parse_domain(MINI).unwrap();
        assert_eq!(d.actions.len(), 1);
        assert_eq!(d.methods.len(), 0);
        assert_eq!(d.task_count(), 1);
        assert_eq!(d.actions[0].effects.len(), 2);
        assert!(!d.actions[0].effects[1].positive);
    }

    #[test]
    fn symbols_are_case_insensitive() {
        let upper = MINI.to_uppercase().replace("(DEFINE (DOMAIN MINI)", "(define (domain mini)");
        assert_eq!(parse_domain(&upper).unwrap(), parse_domain(MINI).unwrap());
    }

    #[test]
    fn method_with_undeclared_task_cites_method() {
        let text = MINI.strip_suffix(")").unwrap().to_string()
            + "\n (:method m-go :parameters (?x - thing) :task (go ?x) :ordered-subtasks (act ?x)))";
        let e = parse_domain(&text).unwrap_err();
        assert!(e.message.contains("m-go"), "{e}");
        assert!(e.message.contains("undeclared task 'go'"), "{e}");
        assert_eq!(e.pos.line, 6);
    }

    #[test]
    fn temporal_constructs_are_rejected() {
        let text = "(define (domain t) (:durative-action a :parameters () :duration (= ?duration 1)))";
        let e = parse_domain(text).unwrap_err();
        assert!(e.message.contains("temporal HDDL is out of scope"), "{e}");
        let text = "(define (domain t) (:action a :parameters () :duration (= ?duration 1)))";
        assert!(parse_domain(text).unwrap_err().message.contains("temporal"));
        let text = "(define (domain t) (:requirements :durative-actions))";
        assert!(parse_domain(text).unwrap_err().message.contains("temporal"));
    }

    #[test]
    fn unknown_requirement() {
        let e = parse_domain("(define (domain t)\n (:requirements :typing :teleport))").unwrap_err();
        assert_eq!(e.pos, Pos { line: 2, col: 25 });
        assert!(e.message.contains(":teleport"));
    }

    #[test]
    fn partial_order_rejected() {
        let base = "(define (domain t) (:types x) (:predicates (p ?a - x))
            (:task top :parameters (?a - x))
            (:action a :parameters (?a - x))
            (:method m :parameters (?a - x) :task (top ?a) ";
        let e = parse_domain(&format!("{base} :subtasks (and (t1 (a ?a)) (t2 (a ?a))) :ordering (< t1 t2)))")).unwrap_err();
        assert!(e.message.contains("partial-order"), "{e}");
        let single = parse_domain(&format!("{base} :subtasks (a ?a)))")).unwrap();
        assert_eq!(single.methods[0].subtasks.len(), 1);
    }

    #[test]
    fn undeclared_type_and_arity() {
        let e = parse_domain("(define (domain t) (:predicates (p ?a - ghost)))").unwrap_err();
        assert!(e.message.contains("undeclared type 'ghost'"));
        let e = parse_domain("(define (domain t) (:predicates (p ?a)) (:action a :parameters (?x) :effect (p ?x ?x)))")
            .unwrap_err();
        assert!(e.message.contains("arity mismatch"));
        let e = parse_domain("(define (domain t) (:action a :parameters (?x) :effect (p ?x)))").unwrap_err();
        assert!(e.message.contains("undeclared predicate 'p'"));
    }

    #[test]
    fn problem_basics() {
        let d = parse_domain(MINI).unwrap();
        let p = parse_problem(
            "(define (problem p1) (:domain mini) (:objects a - thing) (:htn :ordered-subtasks (act a)) (:init))",
            &d,
        )
        .unwrap();
        assert!(p.init.is_empty());
        assert_eq!(p.htn.len(), 1);
        assert_eq!(p.htn.alpha("task0").unwrap().name, "act");

        let e = parse_problem("(define (problem p1) (:domain mini) (:objects a - ghost))", &d).unwrap_err();
        assert!(e.message.contains("unknown object type 'ghost'"));

        let e = parse_problem("(define (problem p1) (:domain other))", &d).unwrap_err();
        assert!(e.message.contains("'other'") && e.message.contains("'mini'"), "{e}");

        let e = parse_problem("(define (problem p1) (:domain mini) (:htn :ordered-subtasks (fly)))", &d).unwrap_err();
        assert!(e.message.contains("unknown task 'fly'"));

        let e = parse_problem("(define (problem p1) (:domain mini) (:objects a - thing) (:init (p a a)))", &d).unwrap_err();
        assert!(e.message.contains("arity"));
    }

    #[test]
    fn repeated_tasks_get_unique_ids() {
        let d = parse_domain(MINI).unwrap();
        let p = parse_problem(
            "(define (problem p1) (:domain mini) (:objects a - thing)
               (:htn :parameters () :ordered-subtasks (and (act a) (task0 (act a)) (act a))))",
            &d,
        )
        .unwrap();
        assert_eq!(p.htn.identifiers, vec!["task1", "task0", "task2"]);
    }
}
