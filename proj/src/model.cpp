#include "relq/model.hpp"

#include <algorithm>

namespace relq {

namespace {
const std::vector<std::string> kNoTargets;

bool value_matches_type(const Value& v, PrimType t) {
    switch (t) {
    case PrimType::String: return v.is_string();
    case PrimType::Int: return v.is_int();
    case PrimType::Bool: return v.is_bool();
    }
    return false;
}
} // namespace

bool Element::has_ref(std::string_view name) const {
    auto it = refs.find(std::string(name));
    return it != refs.end() && !it->second.empty();
}

const std::vector<std::string>& Element::ref(std::string_view name) const {
    auto it = refs.find(std::string(name));
    return it == refs.end() ? kNoTargets : it->second;
}

bool operator==(const Element& a, const Element& b) {
    return a.id == b.id && a.class_name == b.class_name && a.attrs == b.attrs && a.refs == b.refs &&
           a.container_id == b.container_id && a.container_ref == b.container_ref;
}

const Element* Model::find(std::string_view id) const {
    auto it = elements_.find(std::string(id));
    return it == elements_.end() ? nullptr : &it->second;
}

const Element& Model::require(std::string_view id) const {
    const Element* e = find(id);
    if (!e) throw EngineError("no element with id '" + std::string(id) + "'");
    return *e;
}

Element& Model::require_mut(std::string_view id) {
    auto it = elements_.find(std::string(id));
    if (it == elements_.end()) throw EngineError("no element with id '" + std::string(id) + "'");
    return it->second;
}

Element& Model::add_element(std::string id, std::string class_name) {
    mm_->require_class(class_name);
    auto [it, inserted] = elements_.emplace(id, Element{});
    if (!inserted) throw EngineError("duplicate element id '" + id + "'");
    it->second.id = id;
    it->second.class_name = std::move(class_name);
    roots_.push_back(std::move(id));
    return it->second;
}

void Model::set_attr(std::string_view id, std::string attr, Value v) {
    Element& e = require_mut(id);
    const AttrDef* def = mm_->find_attr(e.class_name, attr);
    if (!def)
        throw EngineError("attribute '" + attr + "' not declared on class " + e.class_name);
    if (!value_matches_type(v, def->type))
        throw EngineError("attribute '" + attr + "' of " + e.class_name + " expects " +
                          to_string(def->type));
    e.attrs[std::move(attr)] = std::move(v);
}

void Model::clear_attr(std::string_view id, std::string_view attr) {
    require_mut(id).attrs.erase(std::string(attr));
}

void Model::make_root(const std::string& id) {
    if (std::find(roots_.begin(), roots_.end(), id) == roots_.end()) roots_.push_back(id);
}

void Model::drop_root(const std::string& id) {
    roots_.erase(std::remove(roots_.begin(), roots_.end(), id), roots_.end());
}

void Model::unparent(const std::string& child_id) {
    Element& child = require_mut(child_id);
    if (child.container_id.empty()) return;
    auto holder = elements_.find(child.container_id);
    if (holder != elements_.end()) {
        auto& list = holder->second.refs[child.container_ref];
        list.erase(std::remove(list.begin(), list.end(), child_id), list.end());
    }
    child.container_id.clear();
    child.container_ref.clear();
}

void Model::set_ref(std::string_view id, std::string_view ref, std::vector<std::string> targets) {
    Element& e = require_mut(id);
    const RefDef* def = mm_->find_ref(e.class_name, ref);
    if (!def)
        throw EngineError("reference '" + std::string(ref) + "' not declared on class " +
                          e.class_name);
    if (!def->many && targets.size() > 1)
        throw EngineError("reference '" + std::string(ref) + "' is single-valued");
    std::string ref_name(ref);
    if (def->containment) {
        for (const std::string& old : e.ref(ref_name)) {
            if (std::find(targets.begin(), targets.end(), old) != targets.end()) continue;
            Element& child = require_mut(old);
            child.container_id.clear();
            child.container_ref.clear();
            make_root(old);
        }
        for (const std::string& t : targets) {
            Element& child = require_mut(t);
            if (child.container_id == e.id && child.container_ref == ref_name) continue;
            unparent(t);
            drop_root(t);
            child.container_id = e.id;
            child.container_ref = ref_name;
        }
    }
    if (targets.empty())
        e.refs.erase(ref_name);
    else
        e.refs[ref_name] = std::move(targets);
}

void Model::add_ref_member(std::string_view id, std::string_view ref, const std::string& target) {
    Element& e = require_mut(id);
    const RefDef* def = mm_->find_ref(e.class_name, ref);
    if (!def)
        throw EngineError("reference '" + std::string(ref) + "' not declared on class " +
                          e.class_name);
    std::vector<std::string> targets = e.ref(ref);
    if (std::find(targets.begin(), targets.end(), target) != targets.end()) return;
    targets.push_back(target);
    set_ref(id, ref, std::move(targets));
}

void Model::clear_ref(std::string_view id, std::string_view ref) {
    set_ref(id, ref, {});
}

void Model::erase_element(std::string_view id) {
    std::string key(id);
    auto it = elements_.find(key);
    if (it == elements_.end()) throw EngineError("cannot remove unknown id '" + key + "'");
    // Children of the removed container become roots.
    for (auto& [cid, el] : elements_) {
        if (el.container_id == key) {
            el.container_id.clear();
            el.container_ref.clear();
            make_root(cid);
        }
    }
    elements_.erase(it);
    drop_root(key);
    // Scrub every idref pointing at the removed element.
    for (auto& [cid, el] : elements_) {
        for (auto rit = el.refs.begin(); rit != el.refs.end();) {
            auto& list = rit->second;
            list.erase(std::remove(list.begin(), list.end(), key), list.end());
            rit = list.empty() ? el.refs.erase(rit) : std::next(rit);
        }
    }
}

std::vector<const Element*> Model::document_order() const {
    std::vector<const Element*> out;
    out.reserve(elements_.size());
    auto visit = [&](auto&& self, const Element& e) -> void {
        out.push_back(&e);
        for (const RefDef* r : mm_->all_refs(e.class_name)) {
            if (!r->containment) continue;
            for (const std::string& child_id : e.ref(r->name)) {
                const Element* child = find(child_id);
                if (child) self(self, *child);
            }
        }
    };
    for (const std::string& root : roots_) {
        const Element* e = find(root);
        if (e) visit(visit, *e);
    }
    return out;
}

std::vector<const Element*> Model::elements_of_class(std::string_view class_name,
                                                     bool include_subclasses) const {
    mm_->require_class(class_name);
    std::vector<const Element*> out;
    for (const Element* e : document_order()) {
        bool match = include_subclasses ? mm_->is_subclass_of(e->class_name, class_name)
                                        : e->class_name == class_name;
        if (match) out.push_back(e);
    }
    return out;
}

const Element* Model::key_lookup(std::string_view class_name, std::string_view key_prop,
                                 const Value& key_value) const {
    const Element* found = nullptr;
    for (const Element* e : elements_of_class(class_name, true)) {
        Value v;
        if (key_prop == "xmi:id") {
            v = Value(e->id);
        } else {
            auto it = e->attrs.find(std::string(key_prop));
            if (it == e->attrs.end()) continue;
            v = it->second;
        }
        bool eq;
        try {
            eq = equals(v, key_value);
        } catch (const EvalError&) {
            continue;
        }
        if (!eq) continue;
        if (found)
            throw EngineError("ambiguous key: elements '" + found->id + "' and '" + e->id +
                              "' share " + std::string(key_prop) + " = " + key_value.display());
        found = e;
    }
    return found;
}

std::vector<std::string> Model::element_ids() const {
    std::vector<std::string> out;
    out.reserve(elements_.size());
    for (const auto& [id, e] : elements_) out.push_back(id);
    return out;
}

bool operator==(const Model& a, const Model& b) {
    return a.metamodel_name() == b.metamodel_name() && a.roots_ == b.roots_ &&
           a.elements_ == b.elements_;
}

std::vector<Diagnostic> validate_model(const Model& m, const Metamodel& mm) {
    std::vector<Diagnostic> out;
    auto diag = [&](const std::string& id, std::string msg) {
        out.push_back({id, std::move(msg)});
    };

    for (const std::string& id : m.element_ids()) {
        const Element& e = m.require(id);
        const ClassDef* c = mm.find_class(e.class_name);
        if (!c) {
            diag(id, "unknown class '" + e.class_name + "'");
            continue;
        }
        if (c->is_abstract) diag(id, "instance of abstract class '" + e.class_name + "'");
        for (const auto& [name, v] : e.attrs) {
            const AttrDef* a = mm.find_attr(e.class_name, name);
            if (!a) {
                diag(id, "attribute '" + name + "' not declared on class " + e.class_name);
                continue;
            }
            if (!value_matches_type(v, a->type))
                diag(id, "attribute '" + name + "' expects " + to_string(a->type));
        }
        for (const auto& [name, targets] : e.refs) {
            const RefDef* r = mm.find_ref(e.class_name, name);
            if (!r) {
                diag(id, "reference '" + name + "' not declared on class " + e.class_name);
                continue;
            }
            if (!r->many && targets.size() > 1)
                diag(id, "reference '" + name + "' is single-valued but has " +
                             std::to_string(targets.size()) + " targets");
            for (const std::string& t : targets) {
                const Element* target = m.find(t);
                if (!target) {
                    diag(id, "reference '" + name + "' targets unknown id '" + t + "'");
                } else if (!mm.is_subclass_of(target->class_name, r->target_class)) {
                    diag(id, "reference '" + name + "' target '" + t + "' is a " +
                                 target->class_name + ", expected " + r->target_class);
                }
            }
            if (r->lower == 1 && targets.empty())
                diag(id, "reference '" + name + "' requires at least one target");
        }
        // Containment consistency: the recorded container must hold the
        // element in the named reference.
        if (!e.container_id.empty()) {
            const Element* holder = m.find(e.container_id);
            if (!holder) {
                diag(id, "container '" + e.container_id + "' does not exist");
            } else {
                const auto& list = holder->ref(e.container_ref);
                if (std::find(list.begin(), list.end(), id) == list.end())
                    diag(id, "not listed in container reference '" + e.container_ref + "'");
            }
        }
    }

    // Every element is owned by at most one containment slot, and the forest
    // covers the model exactly once.
    std::map<std::string, int> owners;
    for (const std::string& id : m.element_ids()) {
        const Element& e = m.require(id);
        for (const auto& [name, targets] : e.refs) {
            const RefDef* r = mm.find_ref(e.class_name, name);
            if (!r || !r->containment) continue;
            for (const std::string& t : targets) ++owners[t];
        }
    }
    for (const auto& [id, count] : owners)
        if (count > 1) diag(id, "contained by " + std::to_string(count) + " containers");
    if (m.document_order().size() != m.size())
        out.push_back({"", "containment traversal does not cover the model exactly once"});
    return out;
}

} // namespace relq
