#include "relq/expr.hpp"

#include <algorithm>

#include "relq/natives.hpp"
#include "relq/tdsl.hpp"

namespace relq {

ExprPtr make_expr(Expr::Kind kind, std::vector<ExprPtr> args, std::string name, int line,
                  int col) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->name = std::move(name);
    e->args = std::move(args);
    e->line = line;
    e->col = col;
    return e;
}

ExprPtr make_literal(Value v, int line, int col) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Literal;
    e->literal = std::move(v);
    e->line = line;
    e->col = col;
    return e;
}

const Value& Env::lookup(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw EvalError("unbound variable '" + name + "'");
    return it->second;
}

void Env::bind(const std::string& name, Value v) {
    vars[name] = std::move(v);
}

namespace {

// Re-entrancy guard for query invocations.
struct DepthGuard {
    static thread_local int depth;
    DepthGuard() {
        if (++depth > 256) {
            --depth;
            throw EvalError("query recursion too deep");
        }
    }
    ~DepthGuard() { --depth; }
};
thread_local int DepthGuard::depth = 0;

bool quiet_equals(const Value& a, const Value& b) {
    try {
        return equals(a, b);
    } catch (const EvalError&) {
        return false;
    }
}

Value navigate_element(const ElemRef& ref, const std::string& prop) {
    if (!ref.model) throw EvalError("element reference '" + ref.id + "' carries no model");
    const Element& e = ref.model->require(ref.id);
    const Metamodel& mm = ref.model->metamodel();
    if (mm.find_attr(e.class_name, prop)) {
        auto it = e.attrs.find(prop);
        return it == e.attrs.end() ? Value() : it->second;
    }
    if (const RefDef* r = mm.find_ref(e.class_name, prop)) {
        const auto& targets = e.ref(prop);
        if (r->many) {
            Value::List out;
            for (const std::string& t : targets) out.push_back(ElemRef{ref.model, t});
            return Value(std::move(out));
        }
        if (targets.empty()) return Value(); // absent optional reference
        return Value(ElemRef{ref.model, targets.front()});
    }
    throw EvalError("property '" + prop + "' not declared on class " + e.class_name);
}

Value navigate(const Value& v, const std::string& prop) {
    if (v.is_ref()) return navigate_element(v.as_ref(), prop);
    if (v.is_list()) {
        // Mapped over the collection, flattening nested results and
        // dropping absences.
        Value::List out;
        for (const Value& item : v.as_list()) {
            Value r = navigate(item, prop);
            if (r.is_list()) {
                for (Value& x : r.as_list()) out.push_back(std::move(x));
            } else {
                out.push_back(std::move(r));
            }
        }
        return Value(std::move(out));
    }
    throw EvalError(std::string("cannot navigate a ") + v.kind_name());
}

bool eval_bool(const Expr& e, const Env& env) {
    Value v = eval(e, env);
    if (!v.is_bool()) throw EvalError("expected a boolean condition");
    return v.as_bool();
}

Value eval_call(const Expr& e, const Env& env) {
    std::vector<Value> args;
    args.reserve(e.args.size());
    for (const ExprPtr& a : e.args) args.push_back(eval(*a, env));

    if (env.tf) {
        if (const QueryDef* q = env.tf->find_query(e.name)) {
            if (q->params.size() != args.size())
                throw EvalError("query " + e.name + " expects " +
                                std::to_string(q->params.size()) + " arguments, got " +
                                std::to_string(args.size()));
            DepthGuard guard;
            Env body_env;
            body_env.source = env.source;
            body_env.target = env.target;
            body_env.tf = env.tf;
            body_env.natives = env.natives;
            for (std::size_t i = 0; i < args.size(); ++i)
                body_env.bind(q->params[i].name, args[i]);
            auto bind_alias = [&](const std::string& alias, const Model* m) {
                if (alias.empty() || !m || body_env.has(alias)) return;
                Value::List roots;
                for (const std::string& id : m->roots()) roots.push_back(ElemRef{m, id});
                body_env.bind(alias, Value(std::move(roots)));
            };
            bind_alias(env.tf->config.source_alias, env.source);
            bind_alias(env.tf->config.target_alias, env.target);
            return eval(*q->body, body_env);
        }
    }
    if (env.natives) {
        if (const NativeRegistry::NativeFn* fn = env.natives->find(e.name)) {
            if (fn->arity != args.size())
                throw EvalError("native " + e.name + " expects " + std::to_string(fn->arity) +
                                " arguments, got " + std::to_string(args.size()));
            return fn->call(args, env);
        }
    }
    throw EvalError("unknown function '" + e.name + "'");
}

} // namespace

Value eval(const Expr& e, const Env& env) {
    switch (e.kind) {
    case Expr::Kind::Literal: return e.literal;
    case Expr::Kind::Var: return env.lookup(e.name);
    case Expr::Kind::Nav: return navigate(eval(*e.args[0], env), e.name);
    case Expr::Kind::Select: {
        Value::List out;
        for (const Value& item : eval(*e.args[0], env).items()) {
            Env inner = env;
            inner.bind(e.name, item);
            if (eval_bool(*e.args[1], inner)) out.push_back(item);
        }
        return Value(std::move(out));
    }
    case Expr::Kind::Exists: {
        for (const Value& item : eval(*e.args[0], env).items()) {
            Env inner = env;
            inner.bind(e.name, item);
            if (eval_bool(*e.args[1], inner)) return Value(true);
        }
        return Value(false);
    }
    case Expr::Kind::Size:
        return Value(static_cast<std::int64_t>(eval(*e.args[0], env).items().size()));
    case Expr::Kind::IsEmpty: return Value(eval(*e.args[0], env).items().empty());
    case Expr::Kind::NotEmpty: return Value(!eval(*e.args[0], env).items().empty());
    case Expr::Kind::First: {
        Value::List items = eval(*e.args[0], env).items();
        if (items.empty()) throw EvalError("first() on an empty collection");
        return items.front();
    }
    case Expr::Kind::Distinct: {
        Value::List out;
        for (const Value& item : eval(*e.args[0], env).items()) {
            bool seen = std::any_of(out.begin(), out.end(),
                                    [&](const Value& v) { return quiet_equals(v, item); });
            if (!seen) out.push_back(item);
        }
        return Value(std::move(out));
    }
    case Expr::Kind::Excluding: {
        Value drop = eval(*e.args[1], env);
        Value::List out;
        for (const Value& item : eval(*e.args[0], env).items())
            if (!quiet_equals(item, drop)) out.push_back(item);
        return Value(std::move(out));
    }
    case Expr::Kind::Eq: return Value(equals(eval(*e.args[0], env), eval(*e.args[1], env)));
    case Expr::Kind::Ne: return Value(!equals(eval(*e.args[0], env), eval(*e.args[1], env)));
    case Expr::Kind::And: return Value(eval_bool(*e.args[0], env) && eval_bool(*e.args[1], env));
    case Expr::Kind::Or: return Value(eval_bool(*e.args[0], env) || eval_bool(*e.args[1], env));
    case Expr::Kind::Not: return Value(!eval_bool(*e.args[0], env));
    case Expr::Kind::Add: {
        Value a = eval(*e.args[0], env);
        Value b = eval(*e.args[1], env);
        if (a.is_string() && b.is_string()) return Value(a.as_string() + b.as_string());
        if (a.is_int() && b.is_int()) return Value(a.as_int() + b.as_int());
        throw EvalError(std::string("'+' needs two strings or two integers, got ") +
                        a.kind_name() + " and " + b.kind_name());
    }
    case Expr::Kind::Call: return eval_call(e, env);
    }
    throw EvalError("unreachable expression kind");
}

// ---------------------------------------------------------------------------
// Static typing

std::string Type::str() const {
    switch (kind) {
    case Kind::String: return "string";
    case Kind::Int: return "int";
    case Kind::Bool: return "bool";
    case Kind::Class: return class_name;
    case Kind::Collection: return "collection(" + (elem ? elem->str() : "?") + ")";
    case Kind::Invalid: return "<error>";
    }
    return "?";
}

namespace {

struct Checker {
    const Metamodel& mm;
    const Transformation* tf;
    const NativeRegistry* natives;
    std::vector<Diagnostic>* out;
    std::map<std::string, Type> query_results;
    std::vector<std::string> query_stack;

    void diag(const Expr& e, std::string msg) {
        std::string where = e.line > 0 ? "line " + std::to_string(e.line) : "";
        out->push_back({where, std::move(msg)});
    }

    Type check(const Expr& e, const std::map<std::string, Type>& vars) {
        switch (e.kind) {
        case Expr::Kind::Literal:
            if (e.literal.is_string()) return Type::string();
            if (e.literal.is_int()) return Type::integer();
            if (e.literal.is_bool()) return Type::boolean();
            return Type::invalid();
        case Expr::Kind::Var: {
            auto it = vars.find(e.name);
            if (it == vars.end()) {
                diag(e, "unbound variable '" + e.name + "'");
                return Type::invalid();
            }
            return it->second;
        }
        case Expr::Kind::Nav: return check_nav(e, vars);
        case Expr::Kind::Select:
        case Expr::Kind::Exists: {
            Type recv = check(*e.args[0], vars);
            Type elem = Type::invalid();
            if (recv.kind == Type::Kind::Collection) {
                elem = *recv.elem;
            } else if (!recv.is_invalid()) {
                diag(e, (e.kind == Expr::Kind::Select ? "select" : "exists") +
                            std::string(" needs a collection, got ") + recv.str());
            }
            auto inner = vars;
            if (inner.count(e.name))
                diag(e, "iterator '" + e.name + "' shadows an existing variable");
            inner[e.name] = elem;
            Type pred = check(*e.args[1], inner);
            if (!pred.is_invalid() && pred.kind != Type::Kind::Bool)
                diag(e, "predicate must be boolean, got " + pred.str());
            return e.kind == Expr::Kind::Select ? recv : Type::boolean();
        }
        case Expr::Kind::Size:
        case Expr::Kind::IsEmpty:
        case Expr::Kind::NotEmpty:
        case Expr::Kind::First:
        case Expr::Kind::Distinct: {
            Type recv = check(*e.args[0], vars);
            if (recv.is_invalid()) return Type::invalid();
            if (recv.kind != Type::Kind::Collection) {
                diag(e, op_name(e.kind) + std::string("() on ") + recv.str() + " not supported");
                return Type::invalid();
            }
            switch (e.kind) {
            case Expr::Kind::Size: return Type::integer();
            case Expr::Kind::IsEmpty:
            case Expr::Kind::NotEmpty: return Type::boolean();
            case Expr::Kind::First: return *recv.elem;
            default: return recv;
            }
        }
        case Expr::Kind::Excluding: {
            Type recv = check(*e.args[0], vars);
            check(*e.args[1], vars);
            if (recv.is_invalid()) return Type::invalid();
            if (recv.kind != Type::Kind::Collection) {
                diag(e, "excluding() on " + recv.str() + " not supported");
                return Type::invalid();
            }
            return recv;
        }
        case Expr::Kind::Eq:
        case Expr::Kind::Ne: {
            Type a = check(*e.args[0], vars);
            Type b = check(*e.args[1], vars);
            if (!a.is_invalid() && !b.is_invalid() && !comparable(a, b))
                diag(e, "cannot compare " + a.str() + " and " + b.str());
            return Type::boolean();
        }
        case Expr::Kind::And:
        case Expr::Kind::Or: {
            require_bool(*e.args[0], vars);
            require_bool(*e.args[1], vars);
            return Type::boolean();
        }
        case Expr::Kind::Not:
            require_bool(*e.args[0], vars);
            return Type::boolean();
        case Expr::Kind::Add: {
            Type a = check(*e.args[0], vars);
            Type b = check(*e.args[1], vars);
            if (a.is_invalid() || b.is_invalid()) return Type::invalid();
            if (a.kind == Type::Kind::String && b.kind == Type::Kind::String)
                return Type::string();
            if (a.kind == Type::Kind::Int && b.kind == Type::Kind::Int) return Type::integer();
            diag(e, "'+' needs two strings or two integers, got " + a.str() + " and " + b.str());
            return Type::invalid();
        }
        case Expr::Kind::Call: return check_call(e, vars);
        }
        return Type::invalid();
    }

    static const char* op_name(Expr::Kind k) {
        switch (k) {
        case Expr::Kind::Size: return "size";
        case Expr::Kind::IsEmpty: return "isEmpty";
        case Expr::Kind::NotEmpty: return "notEmpty";
        case Expr::Kind::First: return "first";
        case Expr::Kind::Distinct: return "distinct";
        default: return "?";
        }
    }

    void require_bool(const Expr& e, const std::map<std::string, Type>& vars) {
        Type t = check(e, vars);
        if (!t.is_invalid() && t.kind != Type::Kind::Bool)
            diag(e, "expected a boolean operand, got " + t.str());
    }

    Type check_nav(const Expr& e, const std::map<std::string, Type>& vars) {
        Type recv = check(*e.args[0], vars);
        if (recv.is_invalid()) return Type::invalid();
        bool collection = recv.kind == Type::Kind::Collection;
        Type base = collection ? *recv.elem : recv;
        if (base.is_invalid()) return Type::invalid();
        if (base.kind != Type::Kind::Class) {
            diag(e, "cannot navigate '" + e.name + "' on " + recv.str());
            return Type::invalid();
        }
        if (const AttrDef* a = mm.find_attr(base.class_name, e.name)) {
            Type t = a->type == PrimType::String ? Type::string()
                     : a->type == PrimType::Int  ? Type::integer()
                                                 : Type::boolean();
            return collection ? Type::collection(t) : t;
        }
        if (const RefDef* r = mm.find_ref(base.class_name, e.name)) {
            // Optional references type as collections: absence is the empty
            // collection at runtime.
            return Type::collection(Type::of_class(r->target_class));
        }
        diag(e, "property '" + e.name + "' not declared on class " + base.class_name);
        return Type::invalid();
    }

    bool comparable(const Type& a, const Type& b) {
        if (a.kind == Type::Kind::Collection || b.kind == Type::Kind::Collection) return true;
        if (a.kind == Type::Kind::Class && b.kind == Type::Kind::Class) return true;
        return a.kind == b.kind;
    }

    bool assignable(const Type& arg, const TypeRef& param) {
        if (arg.is_invalid()) return true;
        const Type* t = &arg;
        if (t->kind == Type::Kind::Collection) t = t->elem.get(); // singleton coercion
        switch (param.kind) {
        case TypeRef::Kind::String: return t->kind == Type::Kind::String;
        case TypeRef::Kind::Int: return t->kind == Type::Kind::Int;
        case TypeRef::Kind::Bool: return t->kind == Type::Kind::Bool;
        case TypeRef::Kind::Class:
            return t->kind == Type::Kind::Class &&
                   (mm.is_subclass_of(t->class_name, param.class_name) ||
                    t->is_invalid());
        }
        return false;
    }

    Type param_type(const TypeRef& p) {
        switch (p.kind) {
        case TypeRef::Kind::String: return Type::string();
        case TypeRef::Kind::Int: return Type::integer();
        case TypeRef::Kind::Bool: return Type::boolean();
        case TypeRef::Kind::Class: return Type::of_class(p.class_name);
        }
        return Type::invalid();
    }

    Type check_call(const Expr& e, const std::map<std::string, Type>& vars) {
        std::vector<Type> args;
        for (const ExprPtr& a : e.args) args.push_back(check(*a, vars));

        if (tf) {
            if (const QueryDef* q = tf->find_query(e.name)) {
                if (q->params.size() != args.size()) {
                    diag(e, "query " + e.name + " expects " + std::to_string(q->params.size()) +
                                " arguments");
                    return Type::invalid();
                }
                for (std::size_t i = 0; i < args.size(); ++i) {
                    if (!assignable(args[i], q->params[i].type))
                        diag(e, "argument " + std::to_string(i + 1) + " of " + e.name +
                                    " expects " + q->params[i].type.str() + ", got " +
                                    args[i].str());
                }
                return query_result_type(*q);
            }
        }
        if (natives) {
            if (const NativeRegistry::NativeFn* fn = natives->find(e.name)) {
                if (fn->arity != args.size())
                    diag(e, "native " + e.name + " expects " + std::to_string(fn->arity) +
                                " arguments");
                return fn->result;
            }
        }
        diag(e, "unknown function '" + e.name + "'");
        return Type::invalid();
    }

    // Derives a query's result type without re-reporting its body's
    // diagnostics (the body is checked once, standalone).
    Type query_result_type(const QueryDef& q) {
        if (auto it = query_results.find(q.name); it != query_results.end()) return it->second;
        if (std::find(query_stack.begin(), query_stack.end(), q.name) != query_stack.end())
            return Type::invalid(); // recursive query; give up on its type
        query_stack.push_back(q.name);
        std::map<std::string, Type> vars;
        for (const auto& p : q.params) vars[p.name] = param_type(p.type);
        if (tf) {
            if (!tf->config.source_alias.empty())
                vars.emplace(tf->config.source_alias, Type::collection(Type::invalid()));
            if (!tf->config.target_alias.empty())
                vars.emplace(tf->config.target_alias, Type::collection(Type::invalid()));
        }
        std::vector<Diagnostic> scratch;
        std::vector<Diagnostic>* saved = out;
        out = &scratch;
        Type t = check(*q.body, vars);
        out = saved;
        query_stack.pop_back();
        query_results[q.name] = t;
        return t;
    }
};

} // namespace

Type typecheck(const Expr& e, const Metamodel& mm, const std::map<std::string, Type>& var_types,
               const Transformation* tf, const NativeRegistry* natives,
               std::vector<Diagnostic>& out) {
    Checker checker{mm, tf, natives, &out, {}, {}};
    return checker.check(e, var_types);
}

} // namespace relq
