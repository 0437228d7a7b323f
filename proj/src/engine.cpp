#include "relq/engine.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>

namespace relq {

namespace {

bool quiet_equals(const Value& a, const Value& b) {
    try {
        return equals(a, b);
    } catch (const EvalError&) {
        return false;
    }
}

bool eval_bool(const Expr& e, const Env& env) {
    Value v = eval(e, env);
    if (!v.is_bool()) throw EvalError("condition did not evaluate to a boolean");
    return v.as_bool();
}

// Unwraps a possibly-singleton collection to a scalar; empty stays empty.
Value scalar_of(const Value& v, const std::string& what) {
    if (!v.is_list()) return v;
    const auto& items = v.as_list();
    if (items.empty()) return Value();
    if (items.size() == 1 && !items.front().is_list()) return items.front();
    throw EngineError(what + ": expected a single value, got a collection of " +
                      std::to_string(items.size()));
}

std::vector<std::string> ref_ids(const Value& v, const std::string& what) {
    std::vector<std::string> out;
    for (const Value& item : v.items()) {
        if (!item.is_ref())
            throw EngineError(what + ": expected element references, got " + item.kind_name());
        out.push_back(item.as_ref().id);
    }
    return out;
}

bool value_matches(const TypeRef& t, const Value& v) {
    switch (t.kind) {
    case TypeRef::Kind::String: return v.is_string();
    case TypeRef::Kind::Int: return v.is_int();
    case TypeRef::Kind::Bool: return v.is_bool();
    case TypeRef::Kind::Class: return v.is_ref();
    }
    return false;
}

} // namespace

// ---------------------------------------------------------------------------
// Report

int ExecutionReport::total_fired() const {
    int n = 0;
    for (const auto& [name, count] : fired) n += count;
    return n;
}

std::string ExecutionReport::summary() const {
    std::ostringstream out;
    out << "fired=" << total_fired() << " created=" << created << " removed=" << removed
        << " replaced=" << replaced << " elapsed_ms=" << elapsed_ms;
    return out.str();
}

std::string ExecutionReport::structured() const {
    std::ostringstream out;
    out << "created=" << created << "\n"
        << "removed=" << removed << "\n"
        << "replaced=" << replaced << "\n"
        << "elapsed_ms=" << elapsed_ms << "\n";
    for (const auto& [name, count] : fired) out << "fired." << name << "=" << count << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Diff model

void DiffModel::add(DiffOp op) {
    for (const DiffOp& prev : ops_) {
        if (prev.target_id != op.target_id) continue;
        if (prev.kind != op.kind)
            throw EngineError("conflicting diff operations on id '" + op.target_id + "'");
        if (op.kind == DiffKind::Remove) return; // coalesce duplicate removes
        if (op.kind == DiffKind::Insert)
            throw EngineError("duplicate insert of id '" + op.target_id + "'");
    }
    ops_.push_back(std::move(op));
}

DiffModel normalize_diff(const Model& m, const DiffModel& d) {
    DiffModel out;
    auto add_remove_tree = [&](auto&& self, const std::string& id) -> void {
        out.add({DiffKind::Remove, id, std::nullopt, "", ""});
        const Element& e = m.require(id);
        for (const RefDef* r : m.metamodel().all_refs(e.class_name)) {
            if (!r->containment) continue;
            for (const std::string& child : e.ref(r->name)) self(self, child);
        }
    };
    for (const DiffOp& op : d.ops()) {
        switch (op.kind) {
        case DiffKind::Remove:
            if (!m.contains(op.target_id))
                throw EngineError("remove of unknown id '" + op.target_id + "'");
            add_remove_tree(add_remove_tree, op.target_id);
            break;
        case DiffKind::Insert:
            if (m.contains(op.target_id))
                throw EngineError("insert with colliding id '" + op.target_id + "'");
            out.add(op);
            break;
        case DiffKind::Replace:
            if (!m.contains(op.target_id))
                throw EngineError("replace of unknown id '" + op.target_id + "'");
            out.add(op);
            break;
        }
    }
    return out;
}

Model apply_diff(const Model& m, const DiffModel& d0) {
    DiffModel d = normalize_diff(m, d0);
    Model out = m;

    // Inserts first add bare elements, then wire references and containment
    // placement, so payloads may reference elements inserted later in the
    // script.
    for (const DiffOp& op : d.ops()) {
        if (op.kind != DiffKind::Insert) continue;
        out.add_element(op.target_id, op.payload->class_name);
        for (const auto& [name, v] : op.payload->attrs) out.set_attr(op.target_id, name, v);
    }
    for (const DiffOp& op : d.ops()) {
        if (op.kind != DiffKind::Insert) continue;
        for (const auto& [name, targets] : op.payload->refs)
            out.set_ref(op.target_id, name, targets);
        if (!op.container_id.empty())
            out.add_ref_member(op.container_id, op.container_ref, op.target_id);
    }
    for (const DiffOp& op : d.ops()) {
        if (op.kind != DiffKind::Replace) continue;
        const Element& payload = *op.payload;
        std::vector<std::string> old_attrs, old_refs;
        for (const auto& [name, v] : out.require(op.target_id).attrs) old_attrs.push_back(name);
        for (const auto& [name, v] : out.require(op.target_id).refs) old_refs.push_back(name);
        for (const std::string& name : old_attrs)
            if (!payload.attrs.count(name)) out.clear_attr(op.target_id, name);
        for (const auto& [name, v] : payload.attrs) out.set_attr(op.target_id, name, v);
        for (const std::string& name : old_refs)
            if (!payload.refs.count(name)) out.clear_ref(op.target_id, name);
        for (const auto& [name, targets] : payload.refs) out.set_ref(op.target_id, name, targets);
    }
    for (const DiffOp& op : d.ops()) {
        if (op.kind != DiffKind::Remove) continue;
        if (out.contains(op.target_id)) out.erase_element(op.target_id);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pattern matching

namespace {

std::vector<Env> match_template(const ObjectTemplate& t, const Element& el, const Model& m,
                                const Env& env0);

void expand_slot(const std::string& prop, const SlotExpr& slot, const Element& el,
                 const Model& m, const Env& env, std::vector<Env>& out) {
    const Metamodel& mm = m.metamodel();
    auto bind_or_check = [&](const Value& current) {
        if (slot.kind == SlotExpr::Kind::Literal) {
            if (quiet_equals(current, slot.literal)) out.push_back(env);
            return;
        }
        Env next = env;
        if (next.has(slot.var)) {
            if (quiet_equals(next.lookup(slot.var), current)) out.push_back(std::move(next));
        } else {
            next.bind(slot.var, current);
            out.push_back(std::move(next));
        }
    };

    if (mm.find_attr(el.class_name, prop)) {
        if (slot.kind == SlotExpr::Kind::Template) return; // ill-formed, never matches
        auto it = el.attrs.find(prop);
        bind_or_check(it == el.attrs.end() ? Value() : it->second);
        return;
    }
    const RefDef* r = mm.find_ref(el.class_name, prop);
    if (!r)
        throw EngineError("property '" + prop + "' not declared on class " + el.class_name);
    const auto& targets = el.ref(prop);
    if (!r->many) {
        if (slot.kind == SlotExpr::Kind::Template) {
            if (targets.empty()) return;
            const Element* child = m.find(targets.front());
            if (!child) return;
            for (Env& sub : match_template(*slot.tmpl, *child, m, env))
                out.push_back(std::move(sub));
            return;
        }
        bind_or_check(targets.empty() ? Value() : Value(ElemRef{&m, targets.front()}));
        return;
    }
    // Multi-valued reference: a template slot branches over the members in
    // list order; a variable slot binds the whole collection.
    if (slot.kind == SlotExpr::Kind::Template) {
        for (const std::string& id : targets) {
            const Element* child = m.find(id);
            if (!child) continue;
            for (Env& sub : match_template(*slot.tmpl, *child, m, env))
                out.push_back(std::move(sub));
        }
        return;
    }
    Value::List members;
    for (const std::string& id : targets) members.push_back(ElemRef{&m, id});
    bind_or_check(Value(std::move(members)));
}

std::vector<Env> match_template(const ObjectTemplate& t, const Element& el, const Model& m,
                                const Env& env0) {
    std::vector<Env> envs;
    if (!m.metamodel().is_subclass_of(el.class_name, t.class_name)) return envs;
    Env start = env0;
    if (!t.var_name.empty()) {
        Value self{ElemRef{&m, el.id}};
        if (start.has(t.var_name)) {
            if (!quiet_equals(start.lookup(t.var_name), self)) return envs;
        } else {
            start.bind(t.var_name, self);
        }
    }
    envs.push_back(std::move(start));
    for (const auto& [prop, slot] : t.slots) {
        std::vector<Env> next;
        for (const Env& e : envs) expand_slot(prop, slot, el, m, e, next);
        envs = std::move(next);
        if (envs.empty()) break;
    }
    return envs;
}

} // namespace

std::vector<Env> match_domain(const DomainPattern& p, const Model& m, const Env& seed) {
    std::vector<const Element*> candidates;
    const ObjectTemplate& root = p.root;
    if (!root.var_name.empty() && seed.has(root.var_name)) {
        const Value& v = seed.lookup(root.var_name);
        if (v.is_ref()) {
            if (const Element* e = m.find(v.as_ref().id)) candidates.push_back(e);
        }
    } else {
        candidates = m.elements_of_class(root.class_name, true);
    }
    std::vector<Env> out;
    for (const Element* e : candidates) {
        for (Env& env : match_template(root, *e, m, seed)) out.push_back(std::move(env));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Enforcement identity

namespace {

bool slots_satisfied(const Model& m, const Element& el,
                     const std::vector<std::pair<std::string, Value>>& slot_values) {
    const Metamodel& mm = m.metamodel();
    for (const auto& [prop, v] : slot_values) {
        if (mm.find_attr(el.class_name, prop)) {
            Value expected = scalar_of(v, "slot '" + prop + "'");
            auto it = el.attrs.find(prop);
            Value current = it == el.attrs.end() ? Value() : it->second;
            if (!quiet_equals(current, expected)) return false;
            continue;
        }
        const RefDef* r = mm.find_ref(el.class_name, prop);
        if (!r) return false;
        std::vector<std::string> expected = ref_ids(v, "slot '" + prop + "'");
        const auto& current = el.ref(prop);
        if (!r->many) {
            if (expected != current) return false;
        } else {
            // An enforced member only needs to be present.
            for (const std::string& id : expected)
                if (std::find(current.begin(), current.end(), id) == current.end()) return false;
        }
    }
    return true;
}

// Decides which element id a target template denotes against model `m`:
//
//   1. a bound template variable carries identity: an element of `m` itself
//      is reused directly; a source-model element copies its id when both
//      keys are xmi:id;
//   2. otherwise the configured target key, when the class declares it,
//      decides reuse vs. creation (a template that omits the key slot is an
//      error);
//   3. otherwise the first element of the class whose properties already
//      satisfy every enforced slot is reused (this keeps re-runs of a
//      transformation from duplicating unkeyed elements);
//   4. otherwise a fresh <Class>_<n> id.
template <typename FreshFn>
std::string choose_identity(const Model& m, const ObjectTemplate& t, const Env& env,
                            const std::string& source_key, const std::string& target_key,
                            const std::vector<std::pair<std::string, Value>>& slot_values,
                            FreshFn fresh) {
    if (!t.var_name.empty() && env.has(t.var_name)) {
        const Value& v = env.lookup(t.var_name);
        if (v.is_ref()) {
            const ElemRef& r = v.as_ref();
            if (r.model == &m) return r.id;
            if (source_key == "xmi:id" && target_key == "xmi:id") return r.id;
        }
    }
    if (target_key != "xmi:id" && m.metamodel().find_attr(t.class_name, target_key)) {
        const Value* key_value = nullptr;
        for (const auto& [prop, v] : slot_values)
            if (prop == target_key) key_value = &v;
        if (!key_value)
            throw EngineError("key slot '" + target_key + "' unbound in template for class " +
                              t.class_name);
        Value key = scalar_of(*key_value, "key '" + target_key + "'");
        if (key.empty())
            throw EngineError("key slot '" + target_key + "' has no value for class " +
                              t.class_name);
        const Element* found = m.key_lookup(t.class_name, target_key, key);
        return found ? found->id : fresh(t.class_name);
    }
    for (const Element* e : m.elements_of_class(t.class_name, false))
        if (slots_satisfied(m, *e, slot_values)) return e->id;
    return fresh(t.class_name);
}

} // namespace

// ---------------------------------------------------------------------------
// Enforcer (model-to-model targets)

std::string Enforcer::fresh_id(const std::string& class_name) {
    int& n = counters_[class_name];
    for (;;) {
        std::string candidate = class_name + "_" + std::to_string(++n);
        if (!target_.contains(candidate)) return candidate;
    }
}

Value Enforcer::slot_value(const SlotExpr& slot, Env& env) {
    switch (slot.kind) {
    case SlotExpr::Kind::Literal: return slot.literal;
    case SlotExpr::Kind::Variable: return env.lookup(slot.var);
    case SlotExpr::Kind::Template: return Value(enforce(*slot.tmpl, env));
    }
    throw EngineError("unreachable slot kind");
}

void Enforcer::assign(const Element& el, const std::string& prop, const Value& v, bool& changed) {
    const Metamodel& mm = target_.metamodel();
    if (mm.find_attr(el.class_name, prop)) {
        Value next = scalar_of(v, "attribute '" + prop + "'");
        auto it = el.attrs.find(prop);
        Value current = it == el.attrs.end() ? Value() : it->second;
        if (quiet_equals(current, next)) return;
        if (next.empty())
            target_.clear_attr(el.id, prop);
        else
            target_.set_attr(el.id, prop, next);
        changed = true;
        return;
    }
    const RefDef* r = mm.find_ref(el.class_name, prop);
    if (!r) throw EngineError("property '" + prop + "' not declared on class " + el.class_name);
    std::vector<std::string> ids = ref_ids(v, "reference '" + prop + "'");
    if (!r->many) {
        if (ids.size() > 1)
            throw EngineError("reference '" + prop + "' is single-valued");
        if (el.ref(prop) == ids) return;
        target_.set_ref(el.id, prop, std::move(ids));
        changed = true;
        return;
    }
    for (const std::string& id : ids) {
        const auto& current = target_.require(el.id).ref(prop);
        if (std::find(current.begin(), current.end(), id) != current.end()) continue;
        target_.add_ref_member(el.id, prop, id);
        changed = true;
    }
}

ElemRef Enforcer::enforce(const ObjectTemplate& t, Env& env) {
    std::vector<std::pair<std::string, Value>> slot_values;
    slot_values.reserve(t.slots.size());
    for (const auto& [prop, slot] : t.slots) {
        // Nested templates enforce bottom-up so parents can be identified by
        // their children.
        slot_values.emplace_back(prop, slot_value(slot, env));
    }
    std::string id = choose_identity(target_, t, env, source_key_, target_key_, slot_values,
                                     [this](const std::string& c) { return fresh_id(c); });
    bool existed = target_.contains(id);
    if (!existed) {
        target_.add_element(id, t.class_name);
        created_.insert(id);
    } else {
        const Element& el = target_.require(id);
        if (!target_.metamodel().is_subclass_of(el.class_name, t.class_name))
            throw EngineError("id '" + id + "' already names a " + el.class_name +
                              ", cannot enforce " + t.class_name);
    }
    bool changed = false;
    for (const auto& [prop, v] : slot_values) assign(target_.require(id), prop, v, changed);
    if (changed && !created_.count(id)) updated_.insert(id);
    ElemRef ref{&target_, id};
    if (!t.var_name.empty() && !env.has(t.var_name)) env.bind(t.var_name, Value(ref));
    return ref;
}

// ---------------------------------------------------------------------------
// Parameters

Value parse_param_value(const TypeRef& type, const std::string& text) {
    switch (type.kind) {
    case TypeRef::Kind::String: return Value(text);
    case TypeRef::Kind::Int: {
        try {
            std::size_t used = 0;
            long long v = std::stoll(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return Value(static_cast<std::int64_t>(v));
        } catch (const std::exception&) {
            throw EngineError("parameter value '" + text + "' is not an integer");
        }
    }
    case TypeRef::Kind::Bool:
        if (text == "true") return Value(true);
        if (text == "false") return Value(false);
        throw EngineError("parameter value '" + text + "' is not a boolean");
    case TypeRef::Kind::Class:
        throw EngineError("element-typed parameters cannot be given on the command line");
    }
    throw EngineError("unreachable parameter type");
}

std::map<std::string, Value> resolve_params(const Transformation& t,
                                            const std::map<std::string, Value>& overrides) {
    std::map<std::string, Value> out;
    for (const auto& p : t.config.params) {
        auto it = overrides.find(p.name);
        if (it != overrides.end()) {
            if (!value_matches(p.type, it->second))
                throw EngineError("parameter '" + p.name + "' expects " + p.type.str());
            out[p.name] = it->second;
        } else if (p.default_value) {
            out[p.name] = *p.default_value;
        } else {
            throw EngineError("parameter '" + p.name + "' has no default and no override");
        }
    }
    for (const auto& [name, v] : overrides)
        if (!out.count(name)) throw EngineError("unknown parameter '" + name + "'");
    return out;
}

// ---------------------------------------------------------------------------
// Execution driver

namespace {

class Execution {
public:
    Execution(const Transformation& t, const Model& source, const NativeRegistry& natives)
        : t_(t), source_(source), natives_(natives) {}

    ExecResult run(const Metamodel& target_mm, const std::map<std::string, Value>& params,
                   const Model* initial_target) {
        auto start = std::chrono::steady_clock::now();
        Model target = initial_target ? *initial_target : Model(target_mm);
        Enforcer enforcer(target, t_.config.source_key, t_.config.target_key);
        enforcer_ = &enforcer;

        init_env(params, &target);
        fire_top_relations();

        report_.created = enforcer.created();
        report_.replaced = enforcer.replaced();
        report_.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        return {std::move(target), std::move(report_)};
    }

    InPlaceResult run_in_place(const std::map<std::string, Value>& params) {
        auto start = std::chrono::steady_clock::now();
        in_place_ = true;
        // During collection the "target" model is the immutable snapshot.
        init_env(params, &source_);
        fire_top_relations();

        DiffModel diff = normalize_diff(source_, raw_diff_);
        Model result = apply_diff(source_, diff);
        for (const DiffOp& op : diff.ops()) {
            switch (op.kind) {
            case DiffKind::Insert: ++report_.created; break;
            case DiffKind::Remove: ++report_.removed; break;
            case DiffKind::Replace: ++report_.replaced; break;
            }
        }
        report_.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        return {std::move(result), std::move(diff), std::move(report_)};
    }

private:
    void init_env(const std::map<std::string, Value>& params, const Model* target) {
        base_env_.source = &source_;
        base_env_.target = target;
        base_env_.tf = &t_;
        base_env_.natives = &natives_;
        base_env_.vars = resolve_params(t_, params);
    }

    void fire_top_relations() {
        for (const Relation& rel : t_.relations) {
            if (!rel.is_top) continue;
            fire_over_matches(rel, base_env_);
        }
    }

    void fire_over_matches(const Relation& rel, const Env& seed) {
        if (rel.source) {
            for (Env& env : match_domain(*rel.source, source_, seed)) fire_one(rel, env);
        } else {
            Env env = seed;
            fire_one(rel, env);
        }
    }

    void fire_one(const Relation& rel, Env& env) {
        for (const ExprPtr& cond : rel.when)
            if (!eval_bool(*cond, env)) return;

        // Definitions are pure and may feed target slots, so they run before
        // enforcement; relation calls run after it and may pass the enforced
        // target root along.
        for (const WhereStmt& st : rel.where) {
            if (st.kind != WhereStmt::Kind::VarDef) continue;
            env.bind(st.name, eval(*st.expr, env));
        }

        if (rel.target) {
            if (in_place_)
                collect(rel.target->root, env, rel.target->diff_op, "", "");
            else
                enforcer_->enforce(rel.target->root, env);
        }

        for (const WhereStmt& st : rel.where) {
            if (st.kind != WhereStmt::Kind::Call) continue;
            invoke(st, env);
        }
        ++report_.fired[rel.name];
    }

    void invoke(const WhereStmt& st, const Env& caller_env) {
        const Relation* callee = t_.find_relation(st.name);
        if (!callee) throw EngineError("unresolved relation call '" + st.name + "'");
        std::vector<std::string> signature = callee->call_signature();
        if (signature.size() != st.args.size())
            throw EngineError("relation " + st.name + " expects " +
                              std::to_string(signature.size()) + " arguments");

        std::vector<Value> args;
        args.reserve(st.args.size());
        std::string trace_key = st.name + "(";
        for (std::size_t i = 0; i < st.args.size(); ++i) {
            args.push_back(eval(*st.args[i], caller_env));
            if (i) trace_key += ",";
            trace_key += args.back().display();
        }
        trace_key += ")";
        if (!trace_.insert(trace_key).second) return; // already executed

        for (std::size_t i = 0; i < callee->params.size(); ++i) {
            const ParamDecl& p = callee->params[i];
            const Value& v = args[signature.size() - callee->params.size() + i];
            if (v.is_list() || !value_matches(p.type, v))
                throw EngineError("argument '" + p.name + "' of " + st.name + " expects " +
                                  p.type.str() + ", got " + v.kind_name());
        }

        Env seed = base_env_;
        for (std::size_t i = 0; i < signature.size(); ++i) seed.bind(signature[i], args[i]);
        fire_over_matches(*callee, seed);
    }

    // --- in-place collection ---

    std::string ip_fresh_id(const std::string& class_name) {
        int& n = ip_counters_[class_name];
        for (;;) {
            std::string candidate = class_name + "_" + std::to_string(++n);
            if (!source_.contains(candidate) && !ip_pending_.count(candidate)) return candidate;
        }
    }

    // Records diff operations for one target template. Returns the id the
    // template denotes. `container_*` name the containment slot a freshly
    // inserted element attaches under.
    std::string collect(const ObjectTemplate& tmpl, Env& env, std::optional<DiffKind> op,
                        const std::string& container_id, const std::string& container_ref) {
        const Metamodel& mm = source_.metamodel();

        if (op == DiffKind::Remove) {
            std::string id = choose_identity(source_, tmpl, env, t_.config.source_key,
                                             t_.config.target_key, {},
                                             [this](const std::string& c) { return ip_fresh_id(c); });
            if (source_.contains(id)) raw_diff_.add({DiffKind::Remove, id, std::nullopt, "", ""});
            return id;
        }

        // Evaluate slots bottom-up. A slot whose template produced a fresh
        // insert is a placement slot: the attachment travels on the child's
        // container fields, not as a modification of this element. Fresh
        // children get their final container id patched in once this
        // template is identified.
        std::vector<std::pair<std::string, Value>> slot_values;
        std::vector<bool> is_placement;
        std::vector<std::pair<std::size_t, std::string>> pending_children; // (op index, ref)
        for (const auto& [prop, slot] : tmpl.slots) {
            bool placement = false;
            if (slot.kind == SlotExpr::Kind::Template) {
                const RefDef* r = mm.find_ref(tmpl.class_name, prop);
                std::size_t before = raw_diff_.size();
                std::optional<DiffKind> child_op =
                    op == DiffKind::Insert ? std::optional<DiffKind>(DiffKind::Insert)
                                           : std::nullopt;
                std::string child = collect(*slot.tmpl, env, child_op, "", prop);
                if (r && r->containment) {
                    for (std::size_t i = before; i < raw_diff_.size(); ++i) {
                        if (ops_mut()[i].kind == DiffKind::Insert &&
                            ops_mut()[i].target_id == child) {
                            pending_children.emplace_back(i, prop);
                            placement = true;
                        }
                    }
                }
                slot_values.emplace_back(prop, Value(ElemRef{&source_, child}));
            } else if (slot.kind == SlotExpr::Kind::Literal) {
                slot_values.emplace_back(prop, slot.literal);
            } else {
                slot_values.emplace_back(prop, env.lookup(slot.var));
            }
            is_placement.push_back(placement);
        }

        std::string id = choose_identity(source_, tmpl, env, t_.config.source_key,
                                         t_.config.target_key, slot_values,
                                         [this](const std::string& c) { return ip_fresh_id(c); });
        bool exists = source_.contains(id);

        for (const auto& [idx, prop] : pending_children)
            ops_mut()[idx].container_id = id;

        if (!exists) {
            ip_pending_.insert(id);
            Element payload;
            payload.id = id;
            payload.class_name = tmpl.class_name;
            apply_slots_to(payload, slot_values, mm);
            raw_diff_.add({DiffKind::Insert, id, std::move(payload), container_id, container_ref});
        } else {
            std::vector<std::pair<std::string, Value>> modifying;
            for (std::size_t i = 0; i < slot_values.size(); ++i)
                if (!is_placement[i]) modifying.push_back(slot_values[i]);
            Element updated = source_.require(id);
            apply_slots_to(updated, modifying, mm);
            bool changed = !(updated == source_.require(id));
            if (op == DiffKind::Insert) {
                if (changed)
                    throw EngineError("insert-marked template would modify existing element '" +
                                      id + "'");
            } else if (op == DiffKind::Replace || changed) {
                Element full = source_.require(id);
                apply_slots_to(full, slot_values, mm);
                raw_diff_.add({DiffKind::Replace, id, std::move(full), "", ""});
            }
        }
        if (!tmpl.var_name.empty() && !env.has(tmpl.var_name))
            env.bind(tmpl.var_name, Value(ElemRef{&source_, id}));
        return id;
    }

    static void apply_slots_to(Element& el,
                               const std::vector<std::pair<std::string, Value>>& slot_values,
                               const Metamodel& mm) {
        for (const auto& [prop, v] : slot_values) {
            if (mm.find_attr(el.class_name, prop)) {
                Value next = scalar_of(v, "attribute '" + prop + "'");
                if (next.empty())
                    el.attrs.erase(prop);
                else
                    el.attrs[prop] = next;
                continue;
            }
            const RefDef* r = mm.find_ref(el.class_name, prop);
            if (!r)
                throw EngineError("property '" + prop + "' not declared on class " +
                                  el.class_name);
            std::vector<std::string> ids = ref_ids(v, "reference '" + prop + "'");
            if (!r->many) {
                if (ids.size() > 1) throw EngineError("reference '" + prop + "' is single-valued");
                if (ids.empty())
                    el.refs.erase(prop);
                else
                    el.refs[prop] = std::move(ids);
            } else {
                auto& list = el.refs[prop];
                for (const std::string& id : ids)
                    if (std::find(list.begin(), list.end(), id) == list.end()) list.push_back(id);
                if (list.empty()) el.refs.erase(prop);
            }
        }
    }

    std::vector<DiffOp>& ops_mut() { return raw_diff_.ops(); }

    const Transformation& t_;
    const Model& source_;
    const NativeRegistry& natives_;
    Env base_env_;
    ExecutionReport report_;
    std::set<std::string> trace_;

    Enforcer* enforcer_ = nullptr;

    bool in_place_ = false;
    DiffModel raw_diff_;
    std::map<std::string, int> ip_counters_;
    std::set<std::string> ip_pending_;
};

void require_valid(const Model& m, const Metamodel& mm, const std::string& what) {
    std::vector<Diagnostic> diags = validate_model(m, mm);
    if (!diags.empty())
        throw EngineError(what + " does not conform to " + mm.name() + ": " +
                          to_string(diags.front()));
}

} // namespace

ExecResult execute(const Transformation& t, const Metamodel& source_mm,
                   const Metamodel& target_mm, const Model& source,
                   const std::map<std::string, Value>& params, const Model* initial_target,
                   const NativeRegistry& natives) {
    if (t.config.in_place)
        throw EngineError("transformation " + t.name + " is in-place; use execute_in_place");
    if (t.config.source_mm != source_mm.name() || t.config.target_mm != target_mm.name())
        throw EngineError("metamodels do not match the configuration of " + t.name);
    if (&source.metamodel() != &source_mm && source.metamodel_name() != source_mm.name())
        throw EngineError("source model does not use the source metamodel");
    require_valid(source, source_mm, "source model");

    Execution exec(t, source, natives);
    ExecResult result = exec.run(target_mm, params, initial_target);
    require_valid(result.target, target_mm, "produced target model");
    return result;
}

InPlaceResult execute_in_place(const Transformation& t, const Metamodel& mm, const Model& source,
                               const std::map<std::string, Value>& params,
                               const NativeRegistry& natives) {
    if (!t.config.in_place)
        throw EngineError("transformation " + t.name + " is not in-place");
    if (t.config.source_mm != mm.name())
        throw EngineError("metamodel does not match the configuration of " + t.name);
    require_valid(source, mm, "source model");

    Execution exec(t, source, natives);
    InPlaceResult result = exec.run_in_place(params);
    require_valid(result.result, mm, "resulting model");
    return result;
}

Value run_query(const Transformation& t, std::string_view query_name,
                const std::vector<Value>& args, const Model& source,
                const NativeRegistry& natives) {
    const QueryDef* q = t.find_query(query_name);
    if (!q) throw EngineError("unknown query '" + std::string(query_name) + "'");
    if (q->params.size() != args.size())
        throw EngineError("query " + q->name + " expects " + std::to_string(q->params.size()) +
                          " arguments");
    Env env;
    env.source = &source;
    env.tf = &t;
    env.natives = &natives;
    for (std::size_t i = 0; i < args.size(); ++i) env.bind(q->params[i].name, args[i]);
    Value::List roots;
    for (const std::string& id : source.roots()) roots.push_back(ElemRef{&source, id});
    if (!env.has(t.config.source_alias)) env.bind(t.config.source_alias, Value(std::move(roots)));
    return eval(*q->body, env);
}

} // namespace relq
