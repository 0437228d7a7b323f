#include "relq/natives.hpp"

#include <algorithm>

namespace relq {

namespace {

const Model& model_of(const ElemRef& ref, const char* who) {
    if (!ref.model) throw EvalError(std::string(who) + ": element reference carries no model");
    return *ref.model;
}

ElemRef ref_arg(const Value& v, const char* who) {
    if (v.is_ref()) return v.as_ref();
    if (v.is_list() && v.as_list().size() == 1 && v.as_list().front().is_ref())
        return v.as_list().front().as_ref();
    throw EvalError(std::string(who) + ": expected a node, got " + v.kind_name());
}

} // namespace

std::vector<ElemRef> linked_nodes(const Model& m, const ElemRef& nd) {
    std::vector<ElemRef> out;
    for (const Element* e : m.elements_of_class("Edge", true)) {
        const auto& src = e->ref("src");
        if (src.empty() || src.front() != nd.id) continue;
        const auto& trg = e->ref("trg");
        if (trg.empty()) continue; // dangling target
        out.push_back(ElemRef{&m, trg.front()});
    }
    return out;
}

std::vector<std::string> circle_nodes(const Model& m, const ElemRef& nd,
                                      const std::vector<ElemRef>& list, std::int64_t counter) {
    std::vector<std::string> out;
    for (const ElemRef& cnd : linked_nodes(m, nd)) {
        if (counter == 0) {
            if (!list.empty() && list.front().id == cnd.id) {
                std::vector<std::string> ids;
                ids.reserve(list.size());
                for (const ElemRef& r : list) ids.push_back(r.id);
                std::sort(ids.begin(), ids.end());
                std::string key;
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (i) key += '|';
                    key += ids[i];
                }
                out.push_back(std::move(key));
            }
        } else if (counter > 0) {
            bool visited = std::any_of(list.begin(), list.end(),
                                       [&](const ElemRef& r) { return r.id == cnd.id; });
            if (visited) continue;
            std::vector<ElemRef> extended = list;
            extended.push_back(cnd);
            auto sub = circle_nodes(m, cnd, extended, counter - 1);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    }
    return out;
}

std::int64_t all_circle_count(const Model& m, std::int64_t k) {
    if (k < 2) throw EvalError("all_circle_count requires k >= 2");
    std::vector<std::string> keys;
    for (const Element* n : m.elements_of_class("Node", true)) {
        ElemRef start{&m, n->id};
        auto found = circle_nodes(m, start, {start}, k - 1);
        keys.insert(keys.end(), found.begin(), found.end());
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    return static_cast<std::int64_t>(keys.size());
}

const NativeRegistry::NativeFn* NativeRegistry::find(const std::string& name) const {
    auto it = fns_.find(name);
    return it == fns_.end() ? nullptr : &it->second;
}

void NativeRegistry::add(NativeFn fn) {
    std::string name = fn.name;
    fns_[std::move(name)] = std::move(fn);
}

const NativeRegistry& NativeRegistry::standard() {
    static const NativeRegistry registry = [] {
        NativeRegistry r;
        r.add({"GetLinkedNodes", 1, Type::collection(Type::of_class("Node")),
               [](const std::vector<Value>& args, const Env&) -> Value {
                   ElemRef nd = ref_arg(args[0], "GetLinkedNodes");
                   const Model& m = model_of(nd, "GetLinkedNodes");
                   Value::List out;
                   for (const ElemRef& r : linked_nodes(m, nd)) out.push_back(r);
                   return Value(std::move(out));
               }});
        r.add({"GetCircleNodes", 3, Type::collection(Type::string()),
               [](const std::vector<Value>& args, const Env&) -> Value {
                   ElemRef nd = ref_arg(args[0], "GetCircleNodes");
                   const Model& m = model_of(nd, "GetCircleNodes");
                   std::vector<ElemRef> list;
                   for (const Value& v : args[1].items())
                       list.push_back(ref_arg(v, "GetCircleNodes"));
                   std::int64_t counter = args[2].as_int();
                   Value::List out;
                   for (std::string& key : circle_nodes(m, nd, list, counter))
                       out.push_back(Value(std::move(key)));
                   return Value(std::move(out));
               }});
        r.add({"GetAllCircleNodes", 2, Type::integer(),
               [](const std::vector<Value>& args, const Env&) -> Value {
                   ElemRef gp = ref_arg(args[0], "GetAllCircleNodes");
                   const Model& m = model_of(gp, "GetAllCircleNodes");
                   return Value(all_circle_count(m, args[1].as_int()));
               }});
        return r;
    }();
    return registry;
}

} // namespace relq
